//! The von Neumann model: a Gaussian pointer of spread `Δ` read out in
//! position.
//!
//! `|Q>` has position density `N(0, Δ²)`, so `<Q|e^{iμq}|Q> = e^{-Δ²μ²/2}`
//! for any complex `μ`. Tilted Gaussians `e^{iλq}|Q>` are closed under the
//! interaction, and every overlap below is an exact closed form.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composite::{
    approx_composite_with, certify_at, exact_composite_with, halving_search, ChainCheck, Composite, CompositeError,
    ErrorCertificate, ProbeModel, TiltedProbe,
};
use crate::hilbert::{Observable, PostselectionBasis, SystemState};
use crate::numeric::expm1c;
use crate::weakcore::{weak_profile, CertificationParams, CouplingConfig, WeakValue};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("probe spread must be finite and > 0, got {0}")]
pub struct InvalidSpread(pub f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    delta: f64,
}

impl GaussianParams {
    pub fn new(delta: f64) -> Result<Self, InvalidSpread> {
        if delta > 0.0 && delta.is_finite() {
            Ok(Self { delta })
        } else {
            Err(InvalidSpread(delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl ProbeModel for GaussianParams {
    fn tag(&self) -> &'static str {
        "gaussian"
    }

    fn parameter(&self) -> f64 {
        self.delta
    }

    fn log_normalization(&self, beta: f64) -> f64 {
        let x = self.delta * beta;
        -x * x
    }

    fn characteristic(&self, mu: C64) -> C64 {
        (-0.5 * self.delta * self.delta * mu * mu).exp()
    }

    fn characteristic_minus_one(&self, mu: C64) -> C64 {
        expm1c(-0.5 * self.delta * self.delta * mu * mu)
    }

    fn overlap_minus_one(&self, x: &TiltedProbe, y: &TiltedProbe) -> C64 {
        let mu = y.tilt - x.tilt.conj();
        expm1c(x.log_prefactor.conj() + y.log_prefactor - 0.5 * self.delta * self.delta * mu * mu)
    }
}

/// `prefactor · e^{iλq}|Q>`.
pub type TiltedGaussian = TiltedProbe;
pub type GaussianComposite = Composite<GaussianParams>;

/// `N = e^{-Δ²β²}`.
pub fn gaussian_normalization(beta: f64, g: &GaussianParams) -> f64 {
    g.log_normalization(beta).exp()
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Pointer position density after postselection: mean `-2Δ²β`, spread `Δ`.
pub fn position_density(q: f64, w: &WeakValue, g: &GaussianParams) -> f64 {
    normal_pdf(q, position_mean(w, g), g.delta)
}

pub fn position_mean(w: &WeakValue, g: &GaussianParams) -> f64 {
    -2.0 * g.delta * g.delta * w.beta
}

/// Pointer momentum density after postselection: mean `ε Re A_w`, spread
/// `ħ/(2Δ)`.
pub fn momentum_density(p: f64, w: &WeakValue, g: &GaussianParams, cfg: &CouplingConfig) -> f64 {
    normal_pdf(p, momentum_mean(w, cfg), momentum_spread(g, cfg))
}

pub fn momentum_mean(w: &WeakValue, cfg: &CouplingConfig) -> f64 {
    cfg.epsilon * w.value.re
}

pub fn momentum_spread(g: &GaussianParams, cfg: &CouplingConfig) -> f64 {
    cfg.hbar / (2.0 * g.delta)
}

/// `<P_a|Q^w>` in closed form.
pub fn overlap_pa_qw(a: f64, w: &WeakValue, g: &GaussianParams, cfg: &CouplingConfig) -> C64 {
    let r = cfg.ratio();
    let scale = r * r * g.delta * g.delta;
    let (re, im) = (w.value.re - a, w.value.im);
    (-scale * C64::new(0.5 * (im * im + re * re), re * im)).exp()
}

/// `<x|y>` for two tilted Gaussians.
pub fn tilted_overlap(x: &TiltedGaussian, y: &TiltedGaussian, g: &GaussianParams) -> C64 {
    g.overlap(x, y)
}

pub fn exact_composite(
    a: &Observable,
    psi: &SystemState,
    cfg: &CouplingConfig,
    g: &GaussianParams,
) -> Result<GaussianComposite, CompositeError> {
    exact_composite_with(g, a, psi, cfg)
}

pub fn approx_composite(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    cfg: &CouplingConfig,
    g: &GaussianParams,
) -> Result<GaussianComposite, CompositeError> {
    approx_composite_with(g, a, psi, basis, cfg)
}

pub fn norm_difference(exact: &GaussianComposite, approx: &GaussianComposite) -> Result<f64, CompositeError> {
    crate::composite::norm_difference(exact, approx)
}

/// `(εΔ/ħ)² (wbar + abar)²`, the argument bounding every exponent.
fn chain_argument(epsilon: f64, g: &GaussianParams, params: &CertificationParams, hbar: f64) -> f64 {
    let s = epsilon * g.delta / hbar * (params.wbar + params.abar);
    s * s
}

/// Largest `ε = ε_c 2^{-k}` with `1 - e^{-x} cos x < ξ` and `sin x < ξ`,
/// where `ε_c` puts `(εΔ/ħ)(wbar + abar)` at `√(π/2)`.
pub fn admissible_epsilon(g: &GaussianParams, params: &CertificationParams, hbar: f64) -> f64 {
    let ceiling = hbar * std::f64::consts::FRAC_PI_2.sqrt() / (g.delta * (params.wbar + params.abar));
    halving_search(ceiling, |eps| {
        let x = chain_argument(eps, g, params, hbar);
        1.0 - (-x).exp() * x.cos() < params.xi && x.sin() < params.xi
    })
}

pub fn certify_epsilon(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    g: &GaussianParams,
    params: CertificationParams,
    hbar: f64,
) -> Result<ErrorCertificate, CompositeError> {
    let eps = admissible_epsilon(g, &params, hbar);
    certify_at(g, a, psi, basis, params, eps, hbar)
}

/// Checks the exponential, cosine and sine sandwiches on every retained
/// `(a, φ)` pair.
pub fn check_bound_chain(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    g: &GaussianParams,
    params: &CertificationParams,
    epsilon: f64,
    hbar: f64,
) -> Result<ChainCheck, CompositeError> {
    let x = chain_argument(epsilon, g, params, hbar);
    let r2d2 = (epsilon * g.delta / hbar).powi(2);
    let weak: Vec<C64> =
        weak_profile(a, psi, basis)?.into_iter().filter_map(|(_, w)| w.filter(|w| w.norm() <= params.wbar)).collect();
    let mut check = ChainCheck { pairs: 0, violations: 0 };
    for &value in a.eigenvalues().iter().filter(|v| v.abs() <= params.abar) {
        for w in &weak {
            let (re, im) = (w.re - value, w.im);
            let decay = (-r2d2 * 0.5 * (im * im + re * re)).exp();
            let phase = r2d2 * re * im;
            let ok = (-x).exp() <= decay
                && decay <= 1.0
                && x.cos() <= phase.cos()
                && -x.sin() <= phase.sin()
                && phase.sin() <= x.sin();
            check.pairs += 1;
            if !ok {
                check.violations += 1;
            }
        }
    }
    Ok(check)
}
