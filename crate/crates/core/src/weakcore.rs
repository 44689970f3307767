//! Weak values, coupling configuration, tail masses and threshold selection,
//! plus the historical truncated expansions kept for comparison.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{gamma_half_integer, ln_factorial};
use crate::hilbert::{inner, HilbertError, Observable, PostselectionBasis, SystemState};
use crate::C64;

/// `|<phi|psi>|` at or below this leaves the weak value undefined.
pub const UNDEFINED_OVERLAP: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeakError {
    #[error("weak value undefined: |<phi|psi>| = {overlap:e}")]
    Undefined { overlap: f64 },
    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),
    #[error("invalid certification parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Coupling strength and action unit.
///
/// `epsilon = 0` is accepted so that the uncoupled limit can be evaluated
/// directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub epsilon: f64,
    pub hbar: f64,
}

impl CouplingConfig {
    pub fn new(epsilon: f64, hbar: f64) -> Result<Self, WeakError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(WeakError::InvalidCoupling(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if !hbar.is_finite() || hbar <= 0.0 {
            return Err(WeakError::InvalidCoupling(format!("hbar must be finite and > 0, got {hbar}")));
        }
        Ok(Self { epsilon, hbar })
    }

    /// Coupling with `hbar = 1`.
    pub fn with_epsilon(epsilon: f64) -> Result<Self, WeakError> {
        Self::new(epsilon, 1.0)
    }

    /// `epsilon / hbar`.
    pub fn ratio(&self) -> f64 {
        self.epsilon / self.hbar
    }
}

/// A weak value together with its coupling-scaled parts `alpha + i beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakValue {
    pub value: C64,
    pub alpha: f64,
    pub beta: f64,
}

impl WeakValue {
    pub fn from_value(value: C64, cfg: &CouplingConfig) -> Self {
        let r = cfg.ratio();
        Self { value, alpha: r * value.re, beta: r * value.im }
    }

    /// `alpha + i beta`.
    pub fn scaled(&self) -> C64 {
        C64::new(self.alpha, self.beta)
    }
}

/// Eigenvalue cutoff `abar`, weak-value cutoff `wbar` and tolerance `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationParams {
    pub abar: f64,
    pub wbar: f64,
    pub xi: f64,
}

impl CertificationParams {
    pub fn new(abar: f64, wbar: f64, xi: f64) -> Result<Self, WeakError> {
        if !(abar > 0.0 && abar.is_finite()) || !(wbar > 0.0 && wbar.is_finite()) {
            return Err(WeakError::InvalidParams(format!("cutoffs must be positive, got abar={abar}, wbar={wbar}")));
        }
        check_xi(xi)?;
        Ok(Self { abar, wbar, xi })
    }
}

fn check_xi(xi: f64) -> Result<(), WeakError> {
    if xi > 0.0 && xi < 1.0 {
        Ok(())
    } else {
        Err(WeakError::InvalidParams(format!("xi must lie in (0, 1), got {xi}")))
    }
}

/// Postselection amplitudes restricted to members with a defined weak value.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    /// `(basis index, <phi|psi>)` for every retained member.
    pub coefficients: Vec<(usize, C64)>,
}

impl TruncatedState {
    /// Keeps postselections with `|A_w| <= wbar`.
    pub fn below_cutoff(
        a: &Observable,
        psi: &SystemState,
        basis: &PostselectionBasis,
        wbar: f64,
    ) -> Result<Self, WeakError> {
        let coefficients = weak_profile(a, psi, basis)?
            .into_iter()
            .enumerate()
            .filter_map(|(i, (amp, w))| w.filter(|w| w.norm() <= wbar).map(|_| (i, amp)))
            .collect();
        Ok(Self { coefficients })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|(_, c)| c.norm_sqr()).sum()
    }
}

/// `<phi|A^power|psi>`, from spectral data.
pub fn transition_power(a: &Observable, psi: &SystemState, phi: &SystemState, power: u32) -> Result<C64, WeakError> {
    let comps = a.components(psi)?;
    let mut total = C64::new(0.0, 0.0);
    for ((value, vec), c) in a.eigenvalues().iter().zip(a.eigenvectors()).zip(comps) {
        total += inner(phi, vec)? * c * value.powi(power as i32);
    }
    Ok(total)
}

fn checked_overlap(psi: &SystemState, phi: &SystemState) -> Result<C64, WeakError> {
    let overlap = inner(phi, psi)?;
    if overlap.norm() <= UNDEFINED_OVERLAP {
        return Err(WeakError::Undefined { overlap: overlap.norm() });
    }
    Ok(overlap)
}

pub fn weak_value(
    a: &Observable,
    psi: &SystemState,
    phi: &SystemState,
    cfg: &CouplingConfig,
) -> Result<WeakValue, WeakError> {
    let overlap = checked_overlap(psi, phi)?;
    Ok(WeakValue::from_value(transition_power(a, psi, phi, 1)? / overlap, cfg))
}

/// `(A^power)_w = <phi|A^power|psi> / <phi|psi>`.
pub fn weak_value_power(a: &Observable, psi: &SystemState, phi: &SystemState, power: u32) -> Result<C64, WeakError> {
    let overlap = checked_overlap(psi, phi)?;
    Ok(transition_power(a, psi, phi, power)? / overlap)
}

/// `<phi|psi>` and the weak value (when defined) for every basis member.
pub fn weak_profile(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
) -> Result<Vec<(C64, Option<C64>)>, WeakError> {
    basis
        .states()
        .iter()
        .map(|phi| {
            let amp = inner(phi, psi)?;
            let w = if amp.norm() > UNDEFINED_OVERLAP { Some(transition_power(a, psi, phi, 1)? / amp) } else { None };
            Ok((amp, w))
        })
        .collect()
}

/// `Σ_{|a| > abar} |<a|psi>|²`.
pub fn tail_mass_eigen(a: &Observable, psi: &SystemState, abar: f64) -> Result<f64, WeakError> {
    let comps = a.components(psi)?;
    Ok(a.eigenvalues().iter().zip(comps).filter(|(v, _)| v.abs() > abar).map(|(_, c)| c.norm_sqr()).sum())
}

/// `Σ_{|A_w| > wbar} |<phi|psi>|²`; orthogonal postselections never count.
pub fn tail_mass_weak(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    wbar: f64,
) -> Result<f64, WeakError> {
    Ok(weak_profile(a, psi, basis)?
        .into_iter()
        .filter_map(|(amp, w)| w.filter(|w| w.norm() > wbar).map(|_| amp.norm_sqr()))
        .sum())
}

/// `<psi| Π_{|a| <= abar} Π_{|A_w| <= wbar} |psi>`.
pub fn inner_quantity(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    abar: f64,
    wbar: f64,
) -> Result<C64, WeakError> {
    let profile = weak_profile(a, psi, basis)?;
    let comps = a.components(psi)?;
    let mut total = C64::new(0.0, 0.0);
    for ((value, vec), c) in a.eigenvalues().iter().zip(a.eigenvectors()).zip(comps) {
        if value.abs() > abar {
            continue;
        }
        for (phi, (amp, w)) in basis.states().iter().zip(&profile) {
            if w.is_some_and(|w| w.norm() <= wbar) {
                total += c.conj() * inner(vec, phi)? * amp;
            }
        }
    }
    Ok(total)
}

fn sorted_grid(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut grid: Vec<f64> = values.map(|v| v.max(f64::MIN_POSITIVE)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Smallest grid cutoffs meeting both tail conditions and the projector
/// overlap condition.
///
/// Cutoffs are drawn from the realized `|a|` and `|A_w|` values. `wbar` is
/// scanned outermost, so a smaller weak-value cutoff is preferred over a
/// smaller eigenvalue cutoff.
pub fn choose_thresholds(
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    xi: f64,
) -> Result<CertificationParams, WeakError> {
    check_xi(xi)?;
    let profile = weak_profile(a, psi, basis)?;
    let a_grid = sorted_grid(a.eigenvalues().iter().map(|v| v.abs()));
    let w_grid = sorted_grid(profile.iter().filter_map(|(_, w)| w.map(|w| w.norm())));

    let mut a_ok = Vec::new();
    for &abar in &a_grid {
        if tail_mass_eigen(a, psi, abar)? < xi {
            a_ok.push(abar);
        }
    }
    let mut w_ok = Vec::new();
    for &wbar in &w_grid {
        if tail_mass_weak(a, psi, basis, wbar)? < xi {
            w_ok.push(wbar);
        }
    }
    for &wbar in &w_ok {
        for &abar in &a_ok {
            let q = inner_quantity(a, psi, basis, abar, wbar)?;
            if (q.re - 1.0).abs() < xi && q.im.abs() < xi {
                return CertificationParams::new(abar, wbar, xi);
            }
        }
    }
    // Largest cutoffs make both projectors the identity.
    let abar = *a_grid.last().ok_or(HilbertError::Empty)?;
    let wbar = w_grid.last().copied().unwrap_or(f64::MIN_POSITIVE);
    CertificationParams::new(abar, wbar, xi)
}

/// First-order and partial-sum expansions of `<phi| e^{i r A D} |psi>` with
/// the probe operator replaced by a scalar pointer value `m1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegacyExpansion {
    /// `<phi|psi> (1 + i r A_w m1)`.
    pub first_order: C64,
    /// Entry `j` holds `Σ_{k<=j} (i r m1)^k <phi|A^k|psi> / k!`.
    pub partial_sums: Vec<C64>,
}

pub fn legacy_first_order(
    a: &Observable,
    psi: &SystemState,
    phi: &SystemState,
    cfg: &CouplingConfig,
    m1: C64,
    order: usize,
) -> Result<LegacyExpansion, WeakError> {
    let overlap = checked_overlap(psi, phi)?;
    let w = transition_power(a, psi, phi, 1)? / overlap;
    let step = C64::new(0.0, cfg.ratio()) * m1;
    let first_order = overlap * (C64::new(1.0, 0.0) + step * w);

    let comps = a.components(psi)?;
    let mut terms: Vec<C64> = Vec::with_capacity(a.dim());
    for (vec, c) in a.eigenvectors().iter().zip(comps) {
        terms.push(inner(phi, vec)? * c);
    }
    let mut partial_sums = Vec::with_capacity(order + 1);
    let mut sum: C64 = terms.iter().sum();
    partial_sums.push(sum);
    for j in 1..=order {
        for (t, value) in terms.iter_mut().zip(a.eigenvalues()) {
            *t *= step * value / j as f64;
        }
        sum += terms.iter().sum::<C64>();
        partial_sums.push(sum);
    }
    Ok(LegacyExpansion { first_order, partial_sums })
}

/// `ln Γ(j/2)` for `j >= 1`.
fn ln_gamma_half(j: u32) -> f64 {
    if j.is_multiple_of(2) {
        ln_factorial(u64::from(j / 2 - 1))
    } else {
        gamma_half_integer(u64::from((j - 1) / 2)).log_value
    }
}

/// `(2 delta)^j Γ(j/2) / (j-2)! · |(A^j)_w - (A_w)^j|` for `j = 2..=jmax`.
///
/// Purely diagnostic; the quantity is not a validity criterion.
pub fn legacy_condition_diagnostic(
    a: &Observable,
    psi: &SystemState,
    phi: &SystemState,
    delta: f64,
    jmax: u32,
) -> Result<Vec<f64>, WeakError> {
    let w = weak_value_power(a, psi, phi, 1)?;
    let mut out = Vec::new();
    for j in 2..=jmax {
        let diff = (weak_value_power(a, psi, phi, j)? - w.powu(j)).norm();
        if diff == 0.0 || delta == 0.0 {
            out.push(0.0);
            continue;
        }
        let log = f64::from(j) * (2.0 * delta).ln() + ln_gamma_half(j) - ln_factorial(u64::from(j - 2)) + diff.ln();
        out.push(log.exp());
    }
    Ok(out)
}
