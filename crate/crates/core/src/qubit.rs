//! The qubit model: a two-level probe prepared in `|+>_z` and coupled through
//! `σ_x`.
//!
//! `<+|e^{iμσ_x}|+>_z = cos μ`, and `e^{iλσ_x}` is applied exactly by
//! splitting the state on the `σ_x` eigenbasis, for complex `λ` as well.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composite::{
    approx_composite_with, certify_at, exact_composite_with, halving_search, ChainCheck, Composite, CompositeError,
    ErrorCertificate, ProbeModel, TiltedProbe,
};
use crate::hilbert::{Observable, PostselectionBasis, SystemState};
use crate::numeric::{cosm1c, ln_cosh, sech};
use crate::weakcore::{weak_profile, CertificationParams, CouplingConfig, WeakValue};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("Bloch angles out of range: theta = {theta} must lie in [0, π], eta = {eta} in [0, 2π)")]
pub struct InvalidAxis {
    pub theta: f64,
    pub eta: f64,
}

/// Amplitudes on `|+>_z` (`up`) and `|->_z` (`down`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub up: C64,
    pub down: C64,
}

impl QubitState {
    pub fn plus_z() -> Self {
        Self { up: C64::new(1.0, 0.0), down: C64::new(0.0, 0.0) }
    }

    pub fn minus_z() -> Self {
        Self { up: C64::new(0.0, 0.0), down: C64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { up: self.up * s, down: self.down * s }
    }
}

/// Readout direction with polar angle `theta` and azimuth `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAxis {
    theta: f64,
    eta: f64,
}

impl BlochAxis {
    pub fn new(theta: f64, eta: f64) -> Result<Self, InvalidAxis> {
        let tau = 2.0 * std::f64::consts::PI;
        if (0.0..=std::f64::consts::PI).contains(&theta) && (0.0..tau).contains(&eta) {
            Ok(Self { theta, eta })
        } else {
            Err(InvalidAxis { theta, eta })
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `cos(θ/2)|+>_z + e^{iη} sin(θ/2)|->_z`.
    pub fn plus_state(&self) -> QubitState {
        let half = 0.5 * self.theta;
        QubitState { up: C64::new(half.cos(), 0.0), down: C64::from_polar(half.sin(), self.eta) }
    }
}

/// Dense system-probe amplitudes, index `2·i + s` for system index `i` and
/// probe component `s` (0 for `|+>_z`, 1 for `|->_z`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitComposite {
    pub amps: Vec<C64>,
}

impl QubitComposite {
    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// The qubit probe model; it has no free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QubitModel;

impl ProbeModel for QubitModel {
    fn tag(&self) -> &'static str {
        "qubit"
    }

    fn parameter(&self) -> f64 {
        0.0
    }

    fn log_normalization(&self, beta: f64) -> f64 {
        -0.5 * ln_cosh(2.0 * beta)
    }

    fn characteristic(&self, mu: C64) -> C64 {
        mu.cos()
    }

    fn characteristic_minus_one(&self, mu: C64) -> C64 {
        cosm1c(mu)
    }
}

pub type QubitTermComposite = Composite<QubitModel>;

/// `N = √(sech 2β)`.
pub fn qubit_normalization(w: &WeakValue) -> f64 {
    QubitModel.log_normalization(w.beta).exp()
}

/// `e^{iλσ_x}` applied through the `σ_x` eigenbasis.
pub fn evolve_qubit(lambda: C64, state: QubitState) -> QubitState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = (state.up + state.down) * s * (C64::i() * lambda).exp();
    let minus = (state.up - state.down) * s * (-C64::i() * lambda).exp();
    QubitState { up: (plus + minus) * s, down: (plus - minus) * s }
}

/// Probe state described by a tilted probe.
pub fn probe_state(p: &TiltedProbe) -> QubitState {
    evolve_qubit(p.tilt, QubitState::plus_z()).scale(p.prefactor())
}

/// `|+^w>_z = N e^{i(α+iβ)σ_x}|+>_z`.
pub fn weak_probe_state(w: &WeakValue) -> QubitState {
    evolve_qubit(w.scaled(), QubitState::plus_z()).scale(C64::new(qubit_normalization(w), 0.0))
}

/// `½[1 + cos 2α sech 2β]`.
pub fn prob_plus_z(w: &WeakValue) -> f64 {
    0.5 * (1.0 + (2.0 * w.alpha).cos() * sech(2.0 * w.beta))
}

/// `½[1 - cos 2α sech 2β]`.
pub fn prob_minus_z(w: &WeakValue) -> f64 {
    0.5 * (1.0 - (2.0 * w.alpha).cos() * sech(2.0 * w.beta))
}

/// Probability of `|+n̂>` for the postselected probe state.
pub fn prob_plus_axis(w: &WeakValue, axis: &BlochAxis) -> f64 {
    let s = sech(2.0 * w.beta);
    let t = (2.0 * w.beta).tanh();
    let (a2, th, eta) = (2.0 * w.alpha, axis.theta, axis.eta);
    0.5 * (1.0 + th.cos() * a2.cos() * s + th.sin() * (a2.sin() * s * eta.sin() - t * eta.cos()))
}

/// `<+_a|+^w>_z = √(sech 2β) [cos(α - ra) cosh β - i sin(α - ra) sinh β]`.
pub fn overlap_qubit(a: f64, w: &WeakValue, cfg: &CouplingConfig) -> C64 {
    let d = w.alpha - cfg.ratio() * a;
    let b = w.beta;
    qubit_normalization(w) * C64::new(d.cos() * b.cosh(), -d.sin() * b.sinh())
}

pub fn exact_composite_qubit(
    a: &Observable,
    psi: &SystemState,
    cfg: &CouplingConfig,
) -> Result<QubitTermComposite, CompositeError> {
    exact_composite_with(&QubitModel, a, psi, cfg)
}

pub fn approx_composite_qubit(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    cfg: &CouplingConfig,
) -> Result<QubitTermComposite, CompositeError> {
    approx_composite_with(&QubitModel, a, psi, basis, cfg)
}

/// Expands a term list into dense amplitudes.
pub fn to_dense(c: &QubitTermComposite) -> QubitComposite {
    let dim = c.states().first().map_or(0, |s| s.dim());
    let mut amps = vec![C64::new(0.0, 0.0); 2 * dim];
    for t in c.terms() {
        let probe = probe_state(&t.probe);
        for (i, s) in c.states()[t.index].amps().iter().enumerate() {
            amps[2 * i] += t.coefficient * s * probe.up;
            amps[2 * i + 1] += t.coefficient * s * probe.down;
        }
    }
    QubitComposite { amps }
}

/// `e^{i r A σ_x}|psi>|+>_z` as dense amplitudes.
pub fn exact_state_qubit(
    a: &Observable,
    psi: &SystemState,
    cfg: &CouplingConfig,
) -> Result<QubitComposite, CompositeError> {
    Ok(to_dense(&exact_composite_qubit(a, psi, cfg)?))
}

pub fn norm_difference_qubit(exact: &QubitTermComposite, approx: &QubitTermComposite) -> Result<f64, CompositeError> {
    crate::composite::norm_difference(exact, approx)
}

/// Largest `ε = ε_c 2^{-k}` with `|1 - √(sech 2rw̄) cos(r(w̄+ā))| < ξ` and
/// `sinh(r w̄) < ξ`, where `ε_c` puts `r(w̄+ā)` at `π/2`.
pub fn admissible_epsilon_qubit(params: &CertificationParams, hbar: f64) -> f64 {
    let ceiling = hbar * std::f64::consts::FRAC_PI_2 / (params.wbar + params.abar);
    halving_search(ceiling, |eps| {
        let r = eps / hbar;
        let lower = sech(2.0 * r * params.wbar).sqrt() * (r * (params.wbar + params.abar)).cos();
        (1.0 - lower).abs() < params.xi && (r * params.wbar).sinh() < params.xi
    })
}

pub fn certify_epsilon_qubit(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    params: CertificationParams,
    hbar: f64,
) -> Result<ErrorCertificate, CompositeError> {
    let eps = admissible_epsilon_qubit(&params, hbar);
    certify_at(&QubitModel, a, psi, basis, params, eps, hbar)
}

/// Checks the hyperbolic sandwiches on every retained `(a, φ)` pair.
pub fn check_sandwich(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    params: &CertificationParams,
    epsilon: f64,
    hbar: f64,
) -> Result<ChainCheck, CompositeError> {
    let r = epsilon / hbar;
    let lower = sech(2.0 * r * params.wbar).sqrt() * (r * (params.wbar + params.abar)).cos();
    let cosh_upper = (r * params.wbar).cosh();
    let sinh_bound = (r * params.wbar).sinh();
    let weak: Vec<C64> =
        weak_profile(a, psi, basis)?.into_iter().filter_map(|(_, w)| w.filter(|w| w.norm() <= params.wbar)).collect();
    let mut check = ChainCheck { pairs: 0, violations: 0 };
    for &value in a.eigenvalues().iter().filter(|v| v.abs() <= params.abar) {
        for w in &weak {
            let (d, b) = (r * (w.re - value), r * w.im);
            let n = sech(2.0 * b).sqrt();
            let even = n * d.cos() * b.cosh();
            let odd = n * d.sin() * b.sinh();
            let ok = lower <= even && even <= cosh_upper && -sinh_bound <= odd && odd <= sinh_bound;
            check.pairs += 1;
            if !ok {
                check.violations += 1;
            }
        }
    }
    Ok(check)
}
