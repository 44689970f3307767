//! Brute-force engines used to cross-check the closed forms: uniform-grid
//! quadrature for Gaussian integrals, a Taylor matrix exponential with
//! scaling and squaring, and term-by-term Taylor series of the coupling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composite::TiltedProbe;
use crate::gaussian::GaussianParams;
use crate::hilbert::{dot, CMatrix, HilbertError, Observable, SystemState};
use crate::qubit::{QubitComposite, QubitState};
use crate::weakcore::CouplingConfig;
use crate::C64;

/// Envelope half width, in standard deviations, that every window must cover.
pub const MIN_HALF_WIDTH: f64 = 12.0;
pub const MAX_EXPM_DIM: usize = 64;
pub const UNITARITY_TOL: f64 = 1e-12;
pub const MAX_SERIES_ORDER: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("quadrature window too small: need half width {required} around the origin")]
    WindowTooSmall { required: f64 },
    #[error("quadrature needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("dense exponential limited to system dimension {MAX_EXPM_DIM}, got {0}")]
    DimensionTooLarge(usize),
    #[error("exponential is not unitary: norm residual {residual:e}")]
    NotUnitary { residual: f64 },
    #[error("series order {0} exceeds {MAX_SERIES_ORDER}")]
    OrderTooLarge(usize),
    #[error("need {needed} probe moments, got {got}")]
    MissingMoments { needed: usize, got: usize },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadratureRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half width of the window around the envelope peak, in units of the spread.
    pub half_width: f64,
    pub points: usize,
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { half_width: MIN_HALF_WIDTH, points: 4096, rule: QuadratureRule::Simpson }
    }
}

/// Integral value and the change observed when the grid is halved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: f64,
}

fn weights(n: usize, rule: QuadratureRule) -> impl Fn(usize) -> f64 {
    move |i| match rule {
        QuadratureRule::Trapezoid => {
            if i == 0 || i == n {
                0.5
            } else {
                1.0
            }
        }
        QuadratureRule::Simpson => {
            if i == 0 || i == n {
                1.0 / 3.0
            } else if i % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        }
    }
}

fn grid_sum(f: &impl Fn(f64) -> C64, lo: f64, hi: f64, intervals: usize, rule: QuadratureRule) -> C64 {
    let h = (hi - lo) / intervals as f64;
    let w = weights(intervals, rule);
    (0..=intervals).map(|i| f(lo + h * i as f64) * w(i)).sum::<C64>() * h
}

/// `∫_lo^hi f`, with the error estimated against half as many intervals.
pub fn integrate(
    f: impl Fn(f64) -> C64,
    lo: f64,
    hi: f64,
    points: usize,
    rule: QuadratureRule,
) -> Result<Quadrature<C64>, OracleError> {
    if points < 2 {
        return Err(OracleError::TooFewPoints(points));
    }
    // even interval counts on both grids keep Simpson valid
    let intervals = points.div_ceil(4) * 4;
    let fine = grid_sum(&f, lo, hi, intervals, rule);
    let coarse = grid_sum(&f, lo, hi, intervals / 2, rule);
    Ok(Quadrature { value: fine, error_estimate: (fine - coarse).norm() })
}

pub fn integrate_real(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
    rule: QuadratureRule,
) -> Result<Quadrature<f64>, OracleError> {
    let q = integrate(|x| C64::new(f(x), 0.0), lo, hi, points, rule)?;
    Ok(Quadrature { value: q.value.re, error_estimate: q.error_estimate })
}

/// `<x|y>` by direct quadrature of `conj(x(q)) y(q)`.
///
/// The window is centred on the peak of `|Q(q)|² e^{-Im(μ) q}`, at
/// `-Δ² Im μ` with `μ = λ_y - conj λ_x`, and the grid is refined until it
/// resolves the oscillation `e^{i Re(μ) q}`.
pub fn quad_overlap(
    x: &TiltedProbe,
    y: &TiltedProbe,
    g: &GaussianParams,
    spec: &QuadratureSpec,
) -> Result<Quadrature<C64>, OracleError> {
    let d = g.delta();
    let mu = y.tilt - x.tilt.conj();
    let shift = -d * d * mu.im;
    if spec.half_width < MIN_HALF_WIDTH {
        return Err(OracleError::WindowTooSmall { required: MIN_HALF_WIDTH * d + shift.abs() });
    }
    let half = spec.half_width * d;
    let step = (d / 16.0).min(std::f64::consts::PI / (8.0 * mu.re.abs().max(f64::MIN_POSITIVE)));
    let points = spec.points.max((2.0 * half / step).ceil() as usize);
    let log_base = x.log_prefactor.conj() + y.log_prefactor - 0.5 * (2.0 * std::f64::consts::PI * d * d).ln();
    let integrand = |q: f64| (log_base + C64::new(-q * q / (2.0 * d * d), 0.0) + C64::i() * mu * q).exp();
    integrate(integrand, shift - half, shift + half, points, spec.rule)
}

/// `N(β) = (∫ |Q|² e^{-2βq})^{-1/2}` by quadrature.
pub fn quad_normalization(
    beta: f64,
    g: &GaussianParams,
    spec: &QuadratureSpec,
) -> Result<Quadrature<f64>, OracleError> {
    let probe = TiltedProbe::initial();
    let tilted = TiltedProbe { tilt: C64::new(0.0, beta), ..probe };
    let q = quad_overlap(&tilted, &tilted, g, spec)?;
    let n = q.value.re.powf(-0.5);
    // dN = -½ N³ dI
    Ok(Quadrature { value: n, error_estimate: 0.5 * n.powi(3) * q.error_estimate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMoments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mass, mean and variance of a density concentrated within `spec.half_width`
/// spreads of `center`.
pub fn density_moments(
    f: impl Fn(f64) -> f64,
    center: f64,
    spread: f64,
    spec: &QuadratureSpec,
) -> Result<DensityMoments, OracleError> {
    let (lo, hi) = (center - spec.half_width * spread, center + spec.half_width * spread);
    let mass = integrate_real(&f, lo, hi, spec.points, spec.rule)?.value;
    let first = integrate_real(|t| (t - center) * f(t), lo, hi, spec.points, spec.rule)?.value;
    let second = integrate_real(|t| (t - center).powi(2) * f(t), lo, hi, spec.points, spec.rule)?.value;
    let offset = first / mass;
    Ok(DensityMoments { mass, mean: center + offset, variance: second / mass - offset * offset })
}

/// `‖q^j |Q>‖ = (∫ q^{2j} |Q(q)|²)^{1/2}` by quadrature.
pub fn quad_moment_norm(j: u32, g: &GaussianParams, spec: &QuadratureSpec) -> Result<Quadrature<f64>, OracleError> {
    let d = g.delta();
    let half = spec.half_width * d;
    let density = |q: f64| (-q * q / (2.0 * d * d)).exp() / (d * (2.0 * std::f64::consts::PI).sqrt());
    let q = integrate_real(|q| q.powi(2 * j as i32) * density(q), -half, half, spec.points, spec.rule)?;
    let norm = q.value.sqrt();
    Ok(Quadrature { value: norm, error_estimate: 0.5 * q.error_estimate / norm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatExpSpec {
    /// Infinity norm the matrix is scaled below before the Taylor sum.
    pub threshold: f64,
    pub taylor_order: usize,
}

impl Default for MatExpSpec {
    fn default() -> Self {
        Self { threshold: 0.5, taylor_order: 18 }
    }
}

/// `e^m` by truncated Taylor series after scaling by `2^{-s}`, then `s`
/// squarings.
pub fn expm(m: &CMatrix, spec: &MatExpSpec) -> CMatrix {
    let norm = m.norm_inf();
    let s = if norm > spec.threshold { (norm / spec.threshold).log2().ceil() as i32 } else { 0 };
    let scaled = m.scale(C64::new(0.5f64.powi(s), 0.0));
    let n = m.dim();
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=spec.taylor_order {
        term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..s {
        sum = sum.matmul(&sum);
    }
    sum
}

fn sigma_x() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("constant matrix")
}

/// `e^{i r M ⊗ σ_x}` applied to `|psi> ⊗ |+>_z`, amplitudes indexed `2·i + s`.
pub fn dense_expm_apply_matrix(
    matrix: &CMatrix,
    cfg: &CouplingConfig,
    psi: &SystemState,
    spec: &MatExpSpec,
) -> Result<QubitComposite, OracleError> {
    let n = matrix.dim();
    if n > MAX_EXPM_DIM {
        return Err(OracleError::DimensionTooLarge(n));
    }
    if psi.dim() != n {
        return Err(HilbertError::DimensionMismatch { left: n, right: psi.dim() }.into());
    }
    let generator = matrix.kron(&sigma_x()).scale(C64::new(0.0, cfg.ratio()));
    let u = expm(&generator, spec);
    let mut input = vec![C64::new(0.0, 0.0); 2 * n];
    for (i, a) in psi.amps().iter().enumerate() {
        input[2 * i] = *a;
    }
    let out = QubitComposite { amps: u.apply(&input) };
    let residual = (out.norm() - psi.norm()).abs();
    if residual > UNITARITY_TOL {
        return Err(OracleError::NotUnitary { residual });
    }
    Ok(out)
}

pub fn dense_expm_apply(
    a: &Observable,
    cfg: &CouplingConfig,
    psi: &SystemState,
) -> Result<QubitComposite, OracleError> {
    dense_expm_apply_matrix(&a.reconstruct(), cfg, psi, &MatExpSpec::default())
}

/// `e^{iλσ_x}` for complex `λ` applied to a qubit state.
pub fn qubit_expm_apply(lambda: C64, state: QubitState) -> QubitState {
    let u = expm(&sigma_x().scale(C64::i() * lambda), &MatExpSpec::default());
    let out = u.apply(&[state.up, state.down]);
    QubitState { up: out[0], down: out[1] }
}

/// Partial sums `S_J = Σ_{j≤J} (i r)^j / j! <phi|A^j|psi> m_j` for
/// `J = 0..=order`, where `m_j = <π|D^j|π>` are the probe moments.
///
/// Powers of `A` are applied to `psi` from the dense matrix.
pub fn series_partial_sums(
    a: &Observable,
    psi: &SystemState,
    phi: &SystemState,
    cfg: &CouplingConfig,
    moments: &[C64],
    order: usize,
) -> Result<Vec<C64>, OracleError> {
    if order > MAX_SERIES_ORDER {
        return Err(OracleError::OrderTooLarge(order));
    }
    if moments.len() <= order {
        return Err(OracleError::MissingMoments { needed: order + 1, got: moments.len() });
    }
    if psi.dim() != a.dim() || phi.dim() != a.dim() {
        return Err(HilbertError::DimensionMismatch { left: a.dim(), right: psi.dim().max(phi.dim()) }.into());
    }
    let matrix = a.reconstruct();
    let ir = C64::new(0.0, cfg.ratio());
    let mut v = psi.amps().to_vec();
    let mut coefficient = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(order + 1);
    for (j, m) in moments.iter().enumerate().take(order + 1) {
        if j > 0 {
            v = matrix.apply(&v);
            coefficient *= ir / j as f64;
        }
        sum += coefficient * dot(phi.amps(), &v) * m;
        out.push(sum);
    }
    Ok(out)
}

/// `<Q|q^j|Q>`: zero for odd `j`, `Δ^j (j-1)!!` for even `j`.
pub fn gaussian_moments(g: &GaussianParams, order: usize) -> Vec<C64> {
    let d2 = g.delta() * g.delta();
    let mut out = Vec::with_capacity(order + 1);
    let mut even = 1.0;
    for j in 0..=order {
        if j % 2 == 0 {
            if j > 0 {
                even *= d2 * (j - 1) as f64;
            }
            out.push(C64::new(even, 0.0));
        } else {
            out.push(C64::new(0.0, 0.0));
        }
    }
    out
}

/// `<+|σ_x^j|+>_z`: one for even `j`, zero for odd.
pub fn qubit_moments(order: usize) -> Vec<C64> {
    (0..=order).map(|j| C64::new(if j % 2 == 0 { 1.0 } else { 0.0 }, 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composite::ProbeModel;
    use crate::gaussian::{exact_composite, gaussian_normalization};
    use crate::hilbert::random_instance;
    use crate::qubit::{evolve_qubit, exact_composite_qubit, exact_state_qubit, QubitModel};
    use crate::weakcore::transition_power;
    use proptest::prelude::*;

    fn g(delta: f64) -> GaussianParams {
        GaussianParams::new(delta).unwrap()
    }

    fn cfg(eps: f64) -> CouplingConfig {
        CouplingConfig::with_epsilon(eps).unwrap()
    }

    fn tilted(re: f64, im: f64, lp: C64) -> TiltedProbe {
        TiltedProbe { tilt: C64::new(re, im), log_prefactor: lp }
    }

    #[test]
    fn initial_probe_is_normalized() {
        let one = TiltedProbe::initial();
        for d in [0.1, 1.0, 10.0] {
            let q = quad_overlap(&one, &one, &g(d), &QuadratureSpec::default()).unwrap();
            assert!((q.value - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn normalization_example() {
        let q = quad_normalization(2.0, &g(0.5), &QuadratureSpec::default()).unwrap();
        assert!((q.value - (-1.0f64).exp()).abs() < 1e-12);
        assert!(q.error_estimate < 1e-12);
    }

    #[test]
    fn narrow_window_rejected() {
        let spec = QuadratureSpec { half_width: 6.0, ..Default::default() };
        let x = tilted(0.0, 1.5, C64::new(0.0, 0.0));
        match quad_overlap(&x, &x, &g(2.0), &spec) {
            Err(OracleError::WindowTooSmall { required }) => assert_eq!(required, 24.0 + 12.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overlap_is_hermitian() {
        let x = tilted(0.7, -0.3, C64::new(0.1, 0.4));
        let y = tilted(-1.2, 0.8, C64::new(-0.2, 1.0));
        let spec = QuadratureSpec::default();
        let xy = quad_overlap(&x, &y, &g(1.3), &spec).unwrap().value;
        let yx = quad_overlap(&y, &x, &g(1.3), &spec).unwrap().value;
        assert!((xy - yx.conj()).norm() < 1e-12);
    }

    #[test]
    fn trapezoid_and_simpson_agree() {
        let x = tilted(2.0, 0.5, C64::new(-0.5, 0.0));
        let y = tilted(-3.0, -0.2, C64::new(0.0, 0.3));
        let mut spec = QuadratureSpec::default();
        let simpson = quad_overlap(&x, &y, &g(0.8), &spec).unwrap().value;
        spec.rule = QuadratureRule::Trapezoid;
        let trapezoid = quad_overlap(&x, &y, &g(0.8), &spec).unwrap().value;
        assert!((simpson - trapezoid).norm() < 1e-12);
    }

    #[test]
    fn doubling_points_is_stable() {
        let x = tilted(4.0, -1.0, C64::new(0.0, 0.0));
        let y = tilted(-2.5, 2.0, C64::new(0.0, 0.0));
        let spec = QuadratureSpec::default();
        let doubled = QuadratureSpec { points: 2 * spec.points, ..spec };
        let a = quad_overlap(&x, &y, &g(0.6), &spec).unwrap();
        let b = quad_overlap(&x, &y, &g(0.6), &doubled).unwrap();
        assert!((a.value - b.value).norm() < 1e-9);
        assert!(a.error_estimate < 1e-8);
    }

    #[test]
    fn moment_norms() {
        let d = 1.7;
        let mut odd = 1.0;
        for j in 1..=6u32 {
            odd *= (2 * j - 1) as f64;
            let q = quad_moment_norm(j, &g(d), &QuadratureSpec::default()).unwrap();
            let expected = d.powi(j as i32) * odd.sqrt();
            assert!((q.value - expected).abs() < 1e-7 * expected.max(1.0), "j = {j}");
        }
    }

    #[test]
    fn density_moments_of_normal() {
        let (m, s) = (0.3, 2.5);
        let pdf = |x: f64| (-(x - m) * (x - m) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
        let dm = density_moments(pdf, 0.0, s, &QuadratureSpec { half_width: 14.0, ..Default::default() }).unwrap();
        assert!((dm.mass - 1.0).abs() < 1e-12);
        assert!((dm.mean - m).abs() < 1e-12);
        assert!((dm.variance - s * s).abs() < 1e-10);
    }

    #[test]
    fn expm_of_zero_and_diagonal() {
        let i = expm(&CMatrix::zeros(3), &MatExpSpec::default());
        assert!(i.max_abs_diff(&CMatrix::identity(3)) < 1e-16);
        let d = expm(&CMatrix::diagonal(&[0.0, 1.0, -3.0]), &MatExpSpec::default());
        let e = CMatrix::diagonal(&[1.0, 1f64.exp(), (-3f64).exp()]);
        assert!(d.max_abs_diff(&e) < 1e-13);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 2.3;
        let m = CMatrix::from_real_rows(&[&[0.0, -t], &[t, 0.0]]).unwrap();
        let r = CMatrix::from_real_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]).unwrap();
        assert!(expm(&m, &MatExpSpec::default()).max_abs_diff(&r) < 1e-14);
    }

    #[test]
    fn dense_identity_at_zero_coupling() {
        let inst = random_instance(3, 2).unwrap();
        let out = dense_expm_apply(&inst.observable, &cfg(0.0), &inst.psi).unwrap();
        for (i, a) in inst.psi.amps().iter().enumerate() {
            assert!((out.amps[2 * i] - a).norm() < 1e-15);
            assert_eq!(out.amps[2 * i + 1], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn dense_scalar_reduction() {
        let a = Observable::diagonal(&[1.7]).unwrap();
        let psi = SystemState::basis_vector(1, 0);
        let c = cfg(0.9);
        let out = dense_expm_apply(&a, &c, &psi).unwrap();
        let q = evolve_qubit(C64::new(0.9 * 1.7, 0.0), QubitState::plus_z());
        assert!((out.amps[0] - q.up).norm() < 1e-14);
        assert!((out.amps[1] - q.down).norm() < 1e-14);
    }

    #[test]
    fn dense_matches_exact_qubit_composite() {
        let inst = random_instance(4, 7).unwrap();
        for eps in [1e-3, 0.1, 1.0, 3.0] {
            let dense = dense_expm_apply(&inst.observable, &cfg(eps), &inst.psi).unwrap();
            let exact = exact_state_qubit(&inst.observable, &inst.psi, &cfg(eps)).unwrap();
            assert!(dense.max_abs_diff(&exact) < 1e-10, "eps = {eps}");
        }
    }

    #[test]
    fn dense_dimension_limit() {
        let big = CMatrix::identity(65);
        let psi = SystemState::basis_vector(65, 0);
        assert_eq!(
            dense_expm_apply_matrix(&big, &cfg(1.0), &psi, &MatExpSpec::default()),
            Err(OracleError::DimensionTooLarge(65))
        );
    }

    #[test]
    fn qubit_expm_matches_evolution() {
        let s = QubitState { up: C64::new(0.2, -0.4), down: C64::new(0.8, 0.1) };
        for lam in [C64::new(0.3, 0.0), C64::new(-1.1, 0.7), C64::new(2.0, -2.5)] {
            let a = qubit_expm_apply(lam, s);
            let b = evolve_qubit(lam, s);
            assert!((a.up - b.up).norm() < 1e-12 && (a.down - b.down).norm() < 1e-12);
        }
    }

    #[test]
    fn series_order_zero_and_identity() {
        let inst = random_instance(3, 4).unwrap();
        let phi = &inst.basis.states()[1];
        let c = cfg(0.4);
        let moments = qubit_moments(0);
        let s0 = series_partial_sums(&inst.observable, &inst.psi, phi, &c, &moments, 0).unwrap();
        assert!((s0[0] - dot(phi.amps(), inst.psi.amps())).norm() < 1e-15);

        let id = Observable::diagonal(&[1.0, 1.0, 1.0]).unwrap();
        let unit = vec![C64::new(1.0, 0.0); 21];
        let sums = series_partial_sums(&id, &inst.psi, phi, &c, &unit, 20).unwrap();
        let overlap = dot(phi.amps(), inst.psi.amps());
        let mut scalar = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for (j, s) in sums.iter().enumerate() {
            if j > 0 {
                term *= C64::new(0.0, 0.4) / j as f64;
            }
            scalar += term;
            assert!((s - overlap * scalar).norm() < 1e-15);
        }
        assert!((sums[20] - overlap * C64::new(0.0, 0.4).exp()).norm() < 1e-15);
    }

    #[test]
    fn series_limits() {
        let inst = random_instance(2, 0).unwrap();
        let m = qubit_moments(31);
        let phi = &inst.basis.states()[0];
        assert_eq!(
            series_partial_sums(&inst.observable, &inst.psi, phi, &cfg(0.1), &m, 31),
            Err(OracleError::OrderTooLarge(31))
        );
        assert!(matches!(
            series_partial_sums(&inst.observable, &inst.psi, phi, &cfg(0.1), &m[..3], 5),
            Err(OracleError::MissingMoments { needed: 6, got: 3 })
        ));
    }

    /// `<phi|<π| exact composite`, from the probe closed forms.
    fn projected_exact<M: ProbeModel>(model: &M, terms: &crate::composite::Composite<M>, phi: &SystemState) -> C64 {
        let initial = TiltedProbe::initial();
        terms
            .terms()
            .iter()
            .map(|t| {
                t.coefficient * dot(phi.amps(), terms.states()[t.index].amps()) * model.overlap(&initial, &t.probe)
            })
            .sum()
    }

    #[test]
    fn series_converges_to_closed_forms() {
        let inst = random_instance(3, 5).unwrap();
        let c = cfg(0.3);
        let gp = g(1.0);
        for phi in inst.basis.states() {
            let gs = series_partial_sums(&inst.observable, &inst.psi, phi, &c, &gaussian_moments(&gp, 20), 20).unwrap();
            let ge = projected_exact(&gp, &exact_composite(&inst.observable, &inst.psi, &c, &gp).unwrap(), phi);
            assert!((gs[20] - ge).norm() < 1e-10);
            let qs = series_partial_sums(&inst.observable, &inst.psi, phi, &c, &qubit_moments(20), 20).unwrap();
            let qe =
                projected_exact(&QubitModel, &exact_composite_qubit(&inst.observable, &inst.psi, &c).unwrap(), phi);
            assert!((qs[20] - qe).norm() < 1e-10);
        }
    }

    #[test]
    fn series_powers_match_spectral_powers() {
        let inst = random_instance(3, 8).unwrap();
        let phi = &inst.basis.states()[2];
        let c = cfg(1.0);
        let mut unit = vec![C64::new(0.0, 0.0); 6];
        unit[3] = C64::new(1.0, 0.0);
        let sums = series_partial_sums(&inst.observable, &inst.psi, phi, &c, &unit, 5).unwrap();
        // only the j = 3 term survives: (i)^3/3! <phi|A^3|psi>
        let expected = C64::new(0.0, -1.0) / 6.0 * transition_power(&inst.observable, &inst.psi, phi, 3).unwrap();
        assert!((sums[5] - expected).norm() < 1e-12);
    }

    #[test]
    fn gaussian_moment_values() {
        let m = gaussian_moments(&g(2.0), 6);
        let expected = [1.0, 0.0, 4.0, 0.0, 48.0, 0.0, 960.0];
        for (a, b) in m.iter().zip(expected) {
            assert_eq!(*a, C64::new(b, 0.0));
        }
    }

    proptest! {
        #[test]
        fn closed_form_overlap_matches_quadrature(
            d in 0.1f64..10.0,
            xr in -20.0f64..20.0, xi in -2.0f64..2.0,
            yr in -20.0f64..20.0, yi in -2.0f64..2.0,
        ) {
            // prefactors normalize both states so the overlap stays O(1)
            let gp = g(d);
            let x = tilted(xr / d, xi / d, C64::new(gp.log_normalization(xi / d), 0.0));
            let y = tilted(yr / d, yi / d, C64::new(gp.log_normalization(yi / d), 0.0));
            let q = quad_overlap(&x, &y, &gp, &QuadratureSpec::default()).unwrap();
            prop_assert!((q.value - gp.overlap(&x, &y)).norm() < 1e-8);
            prop_assert!(q.error_estimate < 1e-8);
        }

        #[test]
        fn normalization_matches_quadrature(d in 0.1f64..10.0, b in -3.0f64..3.0) {
            let beta = b / d;
            let q = quad_normalization(beta, &g(d), &QuadratureSpec::default()).unwrap();
            prop_assert!((q.value - gaussian_normalization(beta, &g(d))).abs() < 1e-10);
        }
    }
}
