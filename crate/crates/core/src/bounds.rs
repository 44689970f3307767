//! Moment norms, the geometric-series error bound, coupling conditions and
//! the special-function identities behind them.
//!
//! Factorials, double factorials and half-integer gamma values are carried as
//! natural logarithms; `(2j-1)!!` already overflows `f64` near `j = 150`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::GaussianParams;
use crate::hilbert::{Observable, SystemState};
use crate::weakcore::{CouplingConfig, WeakError, WeakValue};

/// Support threshold on `|<a|psi>|`.
pub const SUPPORT_TOL: f64 = 1e-14;
/// Margin that turns "much less than" into a concrete factor.
pub const MUCH_LESS_MARGIN: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("order must be at least 1, got {0}")]
    InvalidOrder(u64),
    #[error("base must satisfy a >= 1, got {0}")]
    InvalidBase(f64),
    #[error("series bound unavailable: ratio r = {r} is not below 1")]
    Unavailable { r: f64 },
    #[error("invalid inputs: {0}")]
    InvalidInputs(String),
    #[error(transparent)]
    Weak(#[from] WeakError),
}

/// Natural log of a nonnegative quantity; `-inf` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMagnitude {
    pub log_value: f64,
}

impl LogMagnitude {
    pub fn from_log(log_value: f64) -> Self {
        Self { log_value }
    }

    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogMagnitude needs a nonnegative value, got {x}");
        Self { log_value: x.ln() }
    }

    pub fn zero() -> Self {
        Self { log_value: f64::NEG_INFINITY }
    }

    pub fn is_zero(&self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `ln n!` as a running sum of logarithms.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln (2j-1)!!`, with `(-1)!! = 1`.
pub fn ln_double_factorial_odd(j: u64) -> f64 {
    (1..=j).map(|k| ((2 * k - 1) as f64).ln()).sum()
}

/// `Γ(j + 1/2) = (2j-1)!! √π / 2^j`.
pub fn gamma_half_integer(j: u64) -> LogMagnitude {
    let log = ln_double_factorial_odd(j) - j as f64 * std::f64::consts::LN_2 + 0.5 * std::f64::consts::PI.ln();
    LogMagnitude::from_log(log)
}

/// `||q^j |Q>|| = Δ^j √((2j-1)!!)` for `j >= 1`.
pub fn moment_norm_gaussian(j: u64, g: &GaussianParams) -> Result<LogMagnitude, BoundsError> {
    if j == 0 {
        return Err(BoundsError::InvalidOrder(j));
    }
    Ok(LogMagnitude::from_log(j as f64 * g.delta().ln() + 0.5 * ln_double_factorial_odd(j)))
}

/// `√((2j-1)!!) / j!` for `j >= 1`.
pub fn factorial_ratio(j: u64) -> Result<LogMagnitude, BoundsError> {
    if j == 0 {
        return Err(BoundsError::InvalidOrder(j));
    }
    Ok(LogMagnitude::from_log(0.5 * ln_double_factorial_odd(j) - ln_factorial(j)))
}

/// `ceil(2 e^16 a²)`, the order past which `√((2j-1)!!)/j! < a^{-j}` is
/// guaranteed.
pub fn series_order_threshold(a: f64) -> Result<u64, BoundsError> {
    if a.is_nan() || a < 1.0 || !a.is_finite() {
        return Err(BoundsError::InvalidBase(a));
    }
    Ok((2.0 * 16f64.exp() * a * a).ceil() as u64)
}

/// Logs of the Stirling-Robbins sandwich around `n!`:
/// `√(2πn)(n/e)^n e^{1/(12n+1)} < n! < √(2πn)(n/e)^n e^{1/(12n)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobbinsSandwich {
    pub lower: f64,
    pub ln_factorial: f64,
    pub upper: f64,
}

impl RobbinsSandwich {
    pub fn holds(&self) -> bool {
        self.lower < self.ln_factorial && self.ln_factorial < self.upper
    }
}

pub fn robbins_sandwich(n: u64) -> Result<RobbinsSandwich, BoundsError> {
    if n == 0 {
        return Err(BoundsError::InvalidOrder(n));
    }
    let x = n as f64;
    let stirling = 0.5 * (2.0 * std::f64::consts::PI * x).ln() + x * x.ln() - x;
    Ok(RobbinsSandwich {
        lower: stirling + 1.0 / (12.0 * x + 1.0),
        ln_factorial: ln_factorial(n),
        upper: stirling + 1.0 / (12.0 * x),
    })
}

/// Which growth bound on `||A^n psi||` feeds the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    OperatorNorm,
    CompactSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesBoundInputs {
    pub op_norm: f64,
    pub overlap_mag: f64,
    pub a_max: f64,
    pub nu: f64,
    pub epsilon_delta: f64,
}

impl SeriesBoundInputs {
    pub fn new(op_norm: f64, overlap_mag: f64, a_max: f64, nu: f64, epsilon_delta: f64) -> Result<Self, BoundsError> {
        let bad = |msg: String| Err(BoundsError::InvalidInputs(msg));
        if !(op_norm >= 0.0 && op_norm.is_finite()) {
            return bad(format!("op_norm must be finite and >= 0, got {op_norm}"));
        }
        if !(overlap_mag > 0.0 && overlap_mag <= 1.0 + 1e-12) {
            return bad(format!("overlap_mag must lie in (0, 1], got {overlap_mag}"));
        }
        if !(a_max >= 0.0 && a_max.is_finite()) {
            return bad(format!("a_max must be finite and >= 0, got {a_max}"));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return bad(format!("nu must lie in (0, 1), got {nu}"));
        }
        if !(epsilon_delta >= 0.0 && epsilon_delta.is_finite()) {
            return bad(format!("epsilon_delta must be finite and >= 0, got {epsilon_delta}"));
        }
        Ok(Self { op_norm, overlap_mag, a_max, nu, epsilon_delta })
    }

    fn growth(&self, mode: BoundMode) -> f64 {
        match mode {
            BoundMode::OperatorNorm => self.op_norm,
            BoundMode::CompactSupport => self.a_max,
        }
    }

    /// `r = (εΔ/ħ) B / |<phi|psi>|`.
    pub fn ratio(&self, cfg: &CouplingConfig, mode: BoundMode) -> f64 {
        self.epsilon_delta / cfg.hbar * self.growth(mode) / self.overlap_mag
    }

    /// `1 - N` with `N = exp(-(εΔ/ħ)² (Im A_w)²)`.
    pub fn one_minus_norm(&self, cfg: &CouplingConfig, w: &WeakValue) -> f64 {
        let x = self.epsilon_delta / cfg.hbar * w.value.im;
        -(-x * x).exp_m1()
    }
}

/// `(1 - N) + 2r/(1-r)`; errors once `r >= 1`.
pub fn series_error_bound(
    inp: &SeriesBoundInputs,
    cfg: &CouplingConfig,
    w: &WeakValue,
    mode: BoundMode,
) -> Result<f64, BoundsError> {
    let r = inp.ratio(cfg, mode);
    if r.is_nan() || r >= 1.0 {
        return Err(BoundsError::Unavailable { r });
    }
    Ok(inp.one_minus_norm(cfg, w) + 2.0 * r / (1.0 - r))
}

/// The series with the `√((2j-1)!!)/j!` factors and the actual
/// `|(A^j)_w - N A_w^j|` kept through order `J = weak_powers.len()`, plus
/// the geometric tail `2 r^{J+1}/(1-r)` for the remainder.
///
/// `weak_powers[j-1]` holds `(A^j)_w`.
pub fn series_partial_bound(
    inp: &SeriesBoundInputs,
    cfg: &CouplingConfig,
    w: &WeakValue,
    mode: BoundMode,
    weak_powers: &[num_complex::Complex64],
) -> Result<f64, BoundsError> {
    let r = inp.ratio(cfg, mode);
    if r.is_nan() || r >= 1.0 {
        return Err(BoundsError::Unavailable { r });
    }
    let one_minus_n = inp.one_minus_norm(cfg, w);
    let n = 1.0 - one_minus_n;
    let step = (inp.epsilon_delta / cfg.hbar).ln();
    let mut total = one_minus_n;
    let mut aw_pow = num_complex::Complex64::new(1.0, 0.0);
    for (k, power) in weak_powers.iter().enumerate() {
        let j = k as u64 + 1;
        aw_pow *= w.value;
        let diff = (power - n * aw_pow).norm();
        if diff == 0.0 || inp.epsilon_delta == 0.0 {
            continue;
        }
        total += (factorial_ratio(j)?.log_value + j as f64 * step + diff.ln()).exp();
    }
    let tail_order = weak_powers.len() as i32 + 1;
    Ok(total + 2.0 * r.powi(tail_order) / (1.0 - r))
}

/// Right-hand sides of the three coupling conditions on `εΔ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingThresholds {
    /// `(|<phi|psi>| / ||A||) (ħ/3)`.
    pub op_norm: f64,
    /// `(|<phi|psi>| / a_max) (ħ/3)`.
    pub compact: f64,
    /// `(ħ / |Im A_w|) √(ln(1/(1-ν)))`; infinite for a real weak value.
    pub nu: f64,
}

impl CouplingThresholds {
    /// The compact-support condition with the "much less" margin, capped by
    /// the `ν` condition.
    pub fn recommended(&self) -> f64 {
        (self.compact / MUCH_LESS_MARGIN).min(self.nu)
    }
}

pub fn coupling_conditions(inp: &SeriesBoundInputs, cfg: &CouplingConfig, w: &WeakValue) -> CouplingThresholds {
    let third = cfg.hbar / 3.0;
    let ratio = |b: f64| if b > 0.0 { inp.overlap_mag / b * third } else { f64::INFINITY };
    let im = w.value.im.abs();
    let nu = if im == 0.0 { f64::INFINITY } else { cfg.hbar / im * (-(-inp.nu).ln_1p()).sqrt() };
    CouplingThresholds { op_norm: ratio(inp.op_norm), compact: ratio(inp.a_max), nu }
}

/// Largest `|a|` among eigencomponents carrying amplitude.
pub fn compact_support_amax(a: &Observable, psi: &SystemState) -> Result<f64, BoundsError> {
    let comps = a.components(psi).map_err(WeakError::from)?;
    Ok(a.eigenvalues()
        .iter()
        .zip(comps)
        .filter(|(_, c)| c.norm() > SUPPORT_TOL)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::random_instance;
    use crate::weakcore::weak_value;
    use crate::C64;
    use proptest::prelude::*;
    use statrs::function::gamma::ln_gamma;
    use std::f64::consts::PI;

    #[test]
    fn gamma_half_integer_examples() {
        assert!((gamma_half_integer(0).log_value - PI.sqrt().ln()).abs() < 1e-15);
        assert!((gamma_half_integer(1).log_value - (PI.sqrt() / 2.0).ln()).abs() < 1e-15);
        assert!((gamma_half_integer(2).log_value - (3.0 * PI.sqrt() / 4.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn gamma_half_integer_matches_log_gamma() {
        for j in 0..=50u64 {
            let oracle = ln_gamma(j as f64 + 0.5);
            assert!((gamma_half_integer(j).log_value - oracle).abs() < 1e-12, "j = {j}");
        }
    }

    #[test]
    fn moment_norm_examples() {
        let one = GaussianParams::new(1.0).unwrap();
        let two = GaussianParams::new(2.0).unwrap();
        assert_eq!(moment_norm_gaussian(1, &one).unwrap().log_value, 0.0);
        assert!((moment_norm_gaussian(2, &one).unwrap().log_value - 0.5 * 3f64.ln()).abs() < 1e-15);
        let expect = 3.0 * 2f64.ln() + 0.5 * 15f64.ln();
        assert!((moment_norm_gaussian(3, &two).unwrap().log_value - expect).abs() < 1e-14);
        assert_eq!(moment_norm_gaussian(0, &one), Err(BoundsError::InvalidOrder(0)));
    }

    #[test]
    fn factorial_ratio_examples() {
        assert_eq!(factorial_ratio(1).unwrap().log_value, 0.0);
        assert!((factorial_ratio(3).unwrap().value() - 15f64.sqrt() / 6.0).abs() < 1e-15);
        assert!((factorial_ratio(3).unwrap().value() - 0.645497).abs() < 1e-6);
        assert!(factorial_ratio(250).unwrap().log_value.is_finite());
        assert!(factorial_ratio(0).is_err());
    }

    #[test]
    fn factorial_ratio_matches_recurrence() {
        // ratio_{j+1} / ratio_j = √(2j+1) / (j+1)
        let mut log = 0.0;
        for j in 1..=250u64 {
            assert!((factorial_ratio(j).unwrap().log_value - log).abs() < 1e-9 * log.abs().max(1.0));
            log += 0.5 * ((2 * j + 1) as f64).ln() - ((j + 1) as f64).ln();
        }
    }

    #[test]
    fn factorial_ratio_monotone_and_bounded() {
        let mut prev = 0.0;
        for j in 1..=300u64 {
            let v = factorial_ratio(j).unwrap().log_value;
            assert!(v <= 0.0 && v <= prev + 1e-15, "j = {j}");
            prev = v;
        }
    }

    #[test]
    fn factorial_ratio_beats_geometric_far_out() {
        let j = 100_000u64;
        assert!(factorial_ratio(j).unwrap().log_value < -(j as f64) * 1.1f64.ln());
    }

    #[test]
    fn series_order_threshold_examples() {
        let k1 = series_order_threshold(1.0).unwrap();
        assert_eq!(k1, 17_772_222);
        assert!(k1 > 17_000_000);
        let k2 = series_order_threshold(2.0).unwrap();
        assert!(k2.abs_diff(4 * k1) <= 4);
        assert_eq!(series_order_threshold(1.5).unwrap(), (4.5 * 16f64.exp()).ceil() as u64);
        assert!(series_order_threshold(0.5).is_err());
    }

    #[test]
    fn robbins_sandwich_standard_exponents() {
        for n in 1..=170u64 {
            assert!(robbins_sandwich(n).unwrap().holds(), "n = {n}");
        }
    }

    #[test]
    fn series_bound_examples() {
        let cfg = CouplingConfig::with_epsilon(0.1).unwrap();
        let w = WeakValue::from_value(C64::new(1.0, 0.0), &cfg);
        let zero = SeriesBoundInputs::new(2.0, 0.5, 2.0, 0.1, 0.0).unwrap();
        assert_eq!(series_error_bound(&zero, &cfg, &w, BoundMode::OperatorNorm).unwrap(), 0.0);
        // r = εΔ · 2 / 0.5 = 1/4
        let quarter = SeriesBoundInputs::new(2.0, 0.5, 2.0, 0.1, 1.0 / 16.0).unwrap();
        let b = series_error_bound(&quarter, &cfg, &w, BoundMode::OperatorNorm).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
        let strong = SeriesBoundInputs::new(2.0, 0.5, 2.0, 0.1, 0.25).unwrap();
        assert!(matches!(
            series_error_bound(&strong, &cfg, &w, BoundMode::OperatorNorm),
            Err(BoundsError::Unavailable { .. })
        ));
    }

    #[test]
    fn partial_form_is_below_closed_form() {
        for seed in 0..10 {
            let inst = random_instance(3, seed).unwrap();
            let (a, psi) = (&inst.observable, &inst.psi);
            let cfg = CouplingConfig::with_epsilon(1.0).unwrap();
            for phi in inst.basis.states() {
                let w = weak_value(a, psi, phi, &cfg).unwrap();
                let overlap = crate::hilbert::inner(phi, psi).unwrap().norm();
                let a_max = compact_support_amax(a, psi).unwrap();
                let ed = 0.2 * overlap / a.op_norm();
                let inp = SeriesBoundInputs::new(a.op_norm(), overlap, a_max, 0.1, ed).unwrap();
                let powers: Vec<C64> =
                    (1..=12).map(|j| crate::weakcore::weak_value_power(a, psi, phi, j).unwrap()).collect();
                for mode in [BoundMode::OperatorNorm, BoundMode::CompactSupport] {
                    let closed = series_error_bound(&inp, &cfg, &w, mode).unwrap();
                    let partial = series_partial_bound(&inp, &cfg, &w, mode, &powers).unwrap();
                    assert!(partial <= closed * (1.0 + 1e-12), "{partial} > {closed}");
                }
            }
        }
    }

    #[test]
    fn coupling_condition_examples() {
        let cfg = CouplingConfig::with_epsilon(0.1).unwrap();
        let real = WeakValue::from_value(C64::new(1.0, 0.0), &cfg);
        let inp = SeriesBoundInputs::new(2.0, 0.5, 2.0, 1.0 - (-1f64).exp(), 0.1).unwrap();
        let t = coupling_conditions(&inp, &cfg, &real);
        assert!((t.op_norm - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(t.nu, f64::INFINITY);
        assert!((t.recommended() - 1.0 / 1200.0).abs() < 1e-16);
        let complex = WeakValue::from_value(C64::new(0.3, -2.0), &cfg);
        let t = coupling_conditions(&inp, &cfg, &complex);
        assert!((t.nu - 0.5).abs() < 1e-15);
    }

    #[test]
    fn amax_examples() {
        let a = Observable::diagonal(&[1.0, -3.0, 5.0]).unwrap();
        let psi = SystemState::from_real(&[0.6, 0.8, 0.0]).unwrap();
        assert_eq!(compact_support_amax(&a, &psi).unwrap(), 3.0);
        let eig = SystemState::basis_vector(3, 1);
        assert_eq!(compact_support_amax(&a, &eig).unwrap(), 3.0);
        let full = SystemState::normalized(vec![C64::new(1.0, 0.0); 3]).unwrap();
        assert_eq!(compact_support_amax(&a, &full).unwrap(), a.op_norm());
    }

    #[test]
    fn power_growth_bounded_by_amax() {
        for seed in 0..10 {
            let inst = random_instance(4, seed).unwrap();
            let amax = compact_support_amax(&inst.observable, &inst.psi).unwrap();
            for n in 1..=6 {
                let v = inst.observable.apply_power(n, &inst.psi).unwrap();
                assert!(v.norm() <= amax.powi(n as i32) * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn ln_factorial_matches_log_gamma(n in 0u64..2000) {
            let oracle = ln_gamma(n as f64 + 1.0);
            prop_assert!((ln_factorial(n) - oracle).abs() <= 1e-12 * oracle.abs().max(1.0));
        }

        #[test]
        fn series_bound_nonnegative(ed in 0.0f64..0.1, im in -3.0f64..3.0, overlap in 0.1f64..1.0) {
            let cfg = CouplingConfig::with_epsilon(0.1).unwrap();
            let w = WeakValue::from_value(C64::new(0.5, im), &cfg);
            let inp = SeriesBoundInputs::new(1.0, overlap, 1.0, 0.1, ed).unwrap();
            let b = series_error_bound(&inp, &cfg, &w, BoundMode::OperatorNorm).unwrap();
            prop_assert!(b >= 0.0);
        }
    }
}
