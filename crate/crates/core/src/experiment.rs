//! Seeded runs behind the command line: ε-sweeps, certification, pointer
//! densities, qubit readout probabilities, special-function checks and
//! oracle cross-checks. Every table is deterministic in the plan.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{
    factorial_ratio, gamma_half_integer, moment_norm_gaussian, robbins_sandwich, series_error_bound,
    series_order_threshold, BoundMode, BoundsError, SeriesBoundInputs,
};
use crate::composite::{
    approx_composite_with, exact_composite_with, postselected_error, triangle_split, ChainCheck, Composite,
    CompositeError, ErrorCertificate, ProbeModel, TiltedProbe,
};
use crate::gaussian::{
    certify_epsilon, check_bound_chain, gaussian_normalization, momentum_density, momentum_mean, momentum_spread,
    overlap_pa_qw, position_density, position_mean, GaussianParams,
};
use crate::hilbert::{
    dot, hermitian_spectral, random_instance, CMatrix, HilbertError, Observable, PostselectionBasis, SystemState,
};
use crate::numeric::log_log_slope;
use crate::oracle::{
    dense_expm_apply_matrix, gaussian_moments, quad_moment_norm, quad_normalization, quad_overlap, qubit_expm_apply,
    qubit_moments, series_partial_sums, MatExpSpec, OracleError, QuadratureSpec,
};
use crate::qubit::{
    certify_epsilon_qubit, check_sandwich, exact_state_qubit, overlap_qubit, prob_minus_z, prob_plus_axis, prob_plus_z,
    qubit_normalization, BlochAxis, QubitModel, QubitState,
};
use crate::weakcore::{
    choose_thresholds, weak_profile, weak_value, CertificationParams, CouplingConfig, WeakError, WeakValue,
};
use crate::C64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const GAMMA_TOL: f64 = 1e-12;
pub const MOMENT_TOL: f64 = 1e-7;
pub const OVERLAP_QUAD_TOL: f64 = 1e-7;
pub const DENSE_TOL: f64 = 1e-10;
pub const SERIES_TOL: f64 = 1e-10;
pub const PROBABILITY_TOL: f64 = 1e-10;
/// Largest `(ε/ħ) ||A|| max(Δ, 1)` at which the order-20 series is compared.
pub const SERIES_REACH: f64 = 0.5;
pub const SERIES_ORDER: usize = 20;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidPlan { field: &'static str, reason: String },
    #[error(transparent)]
    Composite(#[from] CompositeError),
    #[error(transparent)]
    Weak(#[from] WeakError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidPlan { field, reason: reason.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gaussian,
    Qubit,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "qubit" => Ok(Self::Qubit),
            _ => Err(format!("unknown model `{s}` (expected gaussian or qubit)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Qubit => "qubit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    Eigen,
    Random,
    Supplied(PostselectionBasis),
}

impl BasisChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Eigen => "eigen",
            Self::Random => "random",
            Self::Supplied(_) => "supplied",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub model: ModelKind,
    pub dim: usize,
    pub seed: u64,
    /// Strictly positive and strictly descending.
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub hbar: f64,
    pub basis: BasisChoice,
    /// Replaces the seeded random observable when present.
    pub observable: Option<CMatrix>,
    /// Tail tolerance used to pick the cutoffs for the triangle pieces.
    pub xi: f64,
}

impl SweepPlan {
    pub fn new(model: ModelKind, dim: usize, seed: u64, epsilons: Vec<f64>) -> Self {
        Self {
            model,
            dim,
            seed,
            epsilons,
            delta: 1.0,
            hbar: 1.0,
            basis: BasisChoice::Random,
            observable: None,
            xi: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.dim < 2 {
            return Err(invalid("dim", format!("must be >= 2, got {}", self.dim)));
        }
        if self.epsilons.is_empty() {
            return Err(invalid("epsilons", "at least one value required"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(invalid("epsilons", format!("values must be finite and > 0, got {e}")));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("epsilons", "values must be strictly descending"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta", format!("must be finite and > 0, got {}", self.delta)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(invalid("hbar", format!("must be finite and > 0, got {}", self.hbar)));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(invalid("xi", format!("must lie in (0, 1), got {}", self.xi)));
        }
        if let Some(m) = &self.observable {
            if m.dim() != self.dim {
                return Err(invalid("observable", format!("dimension {} differs from dim {}", m.dim(), self.dim)));
            }
        }
        if let BasisChoice::Supplied(b) = &self.basis {
            if b.dim() != self.dim {
                return Err(invalid("basis", format!("dimension {} differs from dim {}", b.dim(), self.dim)));
            }
        }
        Ok(())
    }

    fn gaussian(&self) -> Result<GaussianParams, ExperimentError> {
        GaussianParams::new(self.delta).map_err(|e| invalid("delta", e.to_string()))
    }
}

/// Observable, preselection and postselection basis for a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub observable: Observable,
    pub matrix: CMatrix,
    pub psi: SystemState,
    pub basis: PostselectionBasis,
}

pub fn build_setup(plan: &SweepPlan) -> Result<Setup, ExperimentError> {
    plan.validate()?;
    let inst = random_instance(plan.dim, plan.seed)?;
    let (observable, matrix) = match &plan.observable {
        Some(m) => (hermitian_spectral(m)?, m.clone()),
        None => {
            let m = inst.observable.reconstruct();
            (inst.observable, m)
        }
    };
    let basis = match &plan.basis {
        BasisChoice::Eigen => observable.eigenbasis(),
        BasisChoice::Random => inst.basis,
        BasisChoice::Supplied(b) => b.clone(),
    };
    Ok(Setup { observable, matrix, psi: inst.psi, basis })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub model: ModelKind,
    pub dim: usize,
    pub seed: u64,
    pub basis: String,
    pub delta: f64,
    pub hbar: f64,
    pub version: String,
}

impl Metadata {
    fn of(plan: &SweepPlan) -> Self {
        Self {
            model: plan.model,
            dim: plan.dim,
            seed: plan.seed,
            basis: plan.basis.name().to_string(),
            delta: plan.delta,
            hbar: plan.hbar,
            version: VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub norm_diff: f64,
    pub restricted_diff: f64,
    pub eigen_tail: f64,
    pub weak_tail: f64,
    /// Log-log slope over this and all larger couplings.
    pub slope_running: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metadata: Metadata,
    pub abar: f64,
    pub wbar: f64,
    pub rows: Vec<SweepRow>,
    pub slope: Option<f64>,
}

pub const SWEEP_HEADER: &str = "epsilon,norm_diff,restricted_diff,eigen_tail,weak_tail,slope_running";

/// Round-trip safe rendering used in every table.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            let slope = r.slope_running.map(fmt_num).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_num(r.epsilon),
                fmt_num(r.norm_diff),
                fmt_num(r.restricted_diff),
                fmt_num(r.eigen_tail),
                fmt_num(r.weak_tail),
                slope
            ));
        }
        out
    }
}

fn sweep_point<M: ProbeModel>(
    model: &M,
    setup: &Setup,
    epsilon: f64,
    hbar: f64,
    params: &CertificationParams,
) -> Result<SweepRow, ExperimentError> {
    let cfg = CouplingConfig::new(epsilon, hbar)?;
    let exact = exact_composite_with(model, &setup.observable, &setup.psi, &cfg)?;
    let approx = approx_composite_with(model, &setup.observable, &setup.psi, &setup.basis, &cfg)?;
    let split = triangle_split(&exact, &approx, params.abar, params.wbar)?;
    Ok(SweepRow {
        epsilon,
        norm_diff: split.full,
        restricted_diff: split.restricted,
        eigen_tail: split.eigen_tail,
        weak_tail: split.weak_tail,
        slope_running: None,
    })
}

/// Evaluates `f` on every input with up to `jobs` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> Result<R, ExperimentError> + Sync,
) -> Result<Vec<R>, ExperimentError> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let mut slots: Vec<Option<Result<R, ExperimentError>>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..jobs)
            .map(|t| s.spawn(move || (t..items.len()).step_by(jobs).map(|i| (i, f(&items[i]))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every index evaluated")).collect()
}

pub fn run_sweep(plan: &SweepPlan, jobs: usize) -> Result<SweepReport, ExperimentError> {
    let setup = build_setup(plan)?;
    let params = choose_thresholds(&setup.observable, &setup.psi, &setup.basis, plan.xi)?;
    let mut rows = match plan.model {
        ModelKind::Gaussian => {
            let g = plan.gaussian()?;
            parallel_map(&plan.epsilons, jobs, |&e| sweep_point(&g, &setup, e, plan.hbar, &params))?
        }
        ModelKind::Qubit => {
            parallel_map(&plan.epsilons, jobs, |&e| sweep_point(&QubitModel, &setup, e, plan.hbar, &params))?
        }
    };
    for i in 1..rows.len() {
        let eps: Vec<f64> = rows[..=i].iter().map(|r| r.epsilon).collect();
        let diffs: Vec<f64> = rows[..=i].iter().map(|r| r.norm_diff).collect();
        rows[i].slope_running = log_log_slope(&eps, &diffs);
    }
    let slope = rows.last().and_then(|r| r.slope_running);
    Ok(SweepReport { metadata: Metadata::of(plan), abar: params.abar, wbar: params.wbar, rows, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyRecord {
    pub abar: f64,
    pub wbar: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub achieved: f64,
    pub conservative_bound: f64,
    pub paper_bound: f64,
    pub pass: bool,
}

impl From<&ErrorCertificate> for CertifyRecord {
    fn from(c: &ErrorCertificate) -> Self {
        Self {
            abar: c.params.abar,
            wbar: c.params.wbar,
            xi: c.params.xi,
            epsilon: c.epsilon,
            achieved: c.achieved_norm_diff,
            conservative_bound: c.conservative_bound,
            paper_bound: c.paper_bound,
            pass: c.passes(),
        }
    }
}

pub const CERTIFY_HEADER: &str = "abar,wbar,xi,epsilon,achieved,conservative_bound,paper_bound,pass";

impl CertifyRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{CERTIFY_HEADER}\n{},{},{},{},{},{},{},{}\n",
            fmt_num(self.abar),
            fmt_num(self.wbar),
            fmt_num(self.xi),
            fmt_num(self.epsilon),
            fmt_num(self.achieved),
            fmt_num(self.conservative_bound),
            fmt_num(self.paper_bound),
            self.pass
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub metadata: Metadata,
    pub certificate: ErrorCertificate,
    pub chain: ChainCheck,
}

impl CertifyReport {
    pub fn record(&self) -> CertifyRecord {
        CertifyRecord::from(&self.certificate)
    }

    pub fn passes(&self) -> bool {
        self.certificate.passes() && self.chain.violations == 0
    }
}

pub fn run_certify(plan: &SweepPlan, xi: f64) -> Result<CertifyReport, ExperimentError> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid("xi", format!("must lie in (0, 1), got {xi}")));
    }
    let setup = build_setup(plan)?;
    let (a, psi, basis) = (&setup.observable, &setup.psi, &setup.basis);
    let params = choose_thresholds(a, psi, basis, xi)?;
    let (certificate, chain) = match plan.model {
        ModelKind::Gaussian => {
            let g = plan.gaussian()?;
            let cert = certify_epsilon(a, psi, basis, &g, params, plan.hbar)?;
            let chain = check_bound_chain(a, psi, basis, &g, &params, cert.epsilon, plan.hbar)?;
            (cert, chain)
        }
        ModelKind::Qubit => {
            let cert = certify_epsilon_qubit(a, psi, basis, params, plan.hbar)?;
            let chain = check_sandwich(a, psi, basis, &params, cert.epsilon, plan.hbar)?;
            (cert, chain)
        }
    };
    Ok(CertifyReport { metadata: Metadata::of(plan), certificate, chain })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Position,
    Momentum,
}

impl FromStr for Space {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "position" | "q" => Ok(Self::Position),
            "momentum" | "p" => Ok(Self::Momentum),
            _ => Err(format!("unknown space `{s}` (expected position or momentum)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub space: Space,
    pub epsilon: f64,
    pub weak_value: (f64, f64),
    pub rows: Vec<(f64, f64)>,
}

impl DensityTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.space {
            Space::Position => "q,density\n",
            Space::Momentum => "p,density\n",
        });
        for (x, d) in &self.rows {
            out.push_str(&format!("{},{}\n", fmt_num(*x), fmt_num(*d)));
        }
        out
    }
}

fn postselected_weak_value(setup: &Setup, index: usize, cfg: &CouplingConfig) -> Result<WeakValue, ExperimentError> {
    let phi = setup
        .basis
        .states()
        .get(index)
        .ok_or_else(|| invalid("index", format!("{index} out of range for dimension {}", setup.basis.dim())))?;
    Ok(weak_value(&setup.observable, &setup.psi, phi, cfg)?)
}

/// Postselected pointer density on `points` grid points spanning six spreads
/// either side of its mean, at the first coupling of the plan.
pub fn run_density(
    plan: &SweepPlan,
    index: usize,
    space: Space,
    points: usize,
) -> Result<DensityTable, ExperimentError> {
    if plan.model != ModelKind::Gaussian {
        return Err(invalid("model", "densities are defined for the gaussian model"));
    }
    if points < 2 {
        return Err(invalid("points", format!("must be >= 2, got {points}")));
    }
    let setup = build_setup(plan)?;
    let g = plan.gaussian()?;
    let epsilon = plan.epsilons[0];
    let cfg = CouplingConfig::new(epsilon, plan.hbar)?;
    let w = postselected_weak_value(&setup, index, &cfg)?;
    let (center, spread) = match space {
        Space::Position => (position_mean(&w, &g), g.delta()),
        Space::Momentum => (momentum_mean(&w, &cfg), momentum_spread(&g, &cfg)),
    };
    let lo = center - 6.0 * spread;
    let step = 12.0 * spread / (points - 1) as f64;
    let rows = (0..points)
        .map(|i| {
            let x = lo + step * i as f64;
            let d = match space {
                Space::Position => position_density(x, &w, &g),
                Space::Momentum => momentum_density(x, &w, &g, &cfg),
            };
            (x, d)
        })
        .collect();
    Ok(DensityTable { space, epsilon, weak_value: (w.value.re, w.value.im), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbsRow {
    pub epsilon: f64,
    pub re_aw: f64,
    pub im_aw: f64,
    pub p_plus_z: f64,
    pub p_minus_z: f64,
    pub p_plus_x: f64,
}

pub const PROBS_HEADER: &str = "epsilon,re_aw,im_aw,p_plus_z,p_minus_z,p_plus_x";

pub fn probs_csv(rows: &[ProbsRow]) -> String {
    let mut out = String::from(PROBS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_num(r.epsilon),
            fmt_num(r.re_aw),
            fmt_num(r.im_aw),
            fmt_num(r.p_plus_z),
            fmt_num(r.p_minus_z),
            fmt_num(r.p_plus_x)
        ));
    }
    out
}

/// Qubit-pointer readout probabilities for postselection `index` at every
/// coupling of the plan.
pub fn run_probs(plan: &SweepPlan, index: usize) -> Result<Vec<ProbsRow>, ExperimentError> {
    if plan.model != ModelKind::Qubit {
        return Err(invalid("model", "readout probabilities are defined for the qubit model"));
    }
    let setup = build_setup(plan)?;
    let x_axis = BlochAxis::new(std::f64::consts::FRAC_PI_2, 0.0).expect("constant axis");
    plan.epsilons
        .iter()
        .map(|&epsilon| {
            let cfg = CouplingConfig::new(epsilon, plan.hbar)?;
            let w = postselected_weak_value(&setup, index, &cfg)?;
            Ok(ProbsRow {
                epsilon,
                re_aw: w.value.re,
                im_aw: w.value.im,
                p_plus_z: prob_plus_z(&w),
                p_minus_z: prob_minus_z(&w),
                p_plus_x: prob_plus_axis(&w, &x_axis),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub max_residual: f64,
    pub pass: bool,
}

impl CheckResult {
    fn below(name: &str, max_residual: f64, tol: f64) -> Self {
        Self { name: name.to_string(), max_residual, pass: max_residual <= tol }
    }
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Relative residual of `Γ(j + ½) = (2j-1)!! √π / 2^j` against `libm`'s
/// log-gamma, `j = 0..=50`.
pub fn gamma_identity_residual() -> f64 {
    (0..=50u64)
        .map(|j| (gamma_half_integer(j).log_value - libm::lgamma(j as f64 + 0.5)).exp_m1().abs())
        .fold(0.0, f64::max)
}

/// Largest violation of `√((2j-1)!!)/j! <= 1` and of it being nonincreasing
/// over `j = 1..=300`, in the log domain.
pub fn factorial_ratio_violation() -> Result<f64, BoundsError> {
    let mut worst: f64 = 0.0;
    let mut prev = 0.0;
    for j in 1..=300u64 {
        let l = factorial_ratio(j)?.log_value;
        worst = worst.max(l);
        if j > 1 {
            worst = worst.max(l - prev);
        }
        prev = l;
    }
    Ok(worst)
}

/// Largest log-domain violation of the Robbins sandwich over `n = 1..=170`.
pub fn robbins_violation() -> Result<f64, BoundsError> {
    let mut worst: f64 = 0.0;
    for n in 1..=170u64 {
        let s = robbins_sandwich(n)?;
        if !s.holds() {
            worst = worst.max((s.lower - s.ln_factorial).max(s.ln_factorial - s.upper).max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// Largest relative gap between `Δ^j √((2j-1)!!)` and quadrature of
/// `‖q^j |Q>‖`, `j = 1..=6`.
pub fn moment_norm_residual(g: &GaussianParams) -> Result<f64, ExperimentError> {
    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for j in 1..=6u32 {
        let closed = moment_norm_gaussian(j as u64, g)?.value();
        let quad = quad_moment_norm(j, g, &spec)?.value;
        worst = worst.max((closed - quad).abs() / closed.max(1.0));
    }
    Ok(worst)
}

/// Ratio `r` at which the series bound is tested.
pub const SERIES_TEST_RATIOS: [f64; 3] = [0.01, 0.1, 0.3];

/// For each postselection state and ratio `r`, the postselected unnormalized
/// error minus `|<phi|psi>| [(1 - N) + 2r/(1-r)]` with the operator-norm
/// ratio. Returns the largest such excess (negative when every bound holds)
/// and the number of cases.
pub fn series_bound_excess(
    dim: usize,
    seed: u64,
    g: &GaussianParams,
    hbar: f64,
) -> Result<(f64, usize), ExperimentError> {
    let inst = random_instance(dim, seed)?;
    let (a, psi, basis) = (&inst.observable, &inst.psi, &inst.basis);
    let profile = weak_profile(a, psi, basis)?;
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for (index, (amp, w)) in profile.iter().enumerate() {
        let Some(w) = w else { continue };
        let overlap = amp.norm();
        for r in SERIES_TEST_RATIOS {
            let epsilon_delta = r * overlap * hbar / a.op_norm();
            let cfg = CouplingConfig::new(epsilon_delta / g.delta(), hbar)?;
            let inputs = SeriesBoundInputs::new(a.op_norm(), overlap, a.op_norm(), 0.5, epsilon_delta)?;
            let wv = WeakValue::from_value(*w, &cfg);
            let bound = overlap * series_error_bound(&inputs, &cfg, &wv, BoundMode::OperatorNorm)?;
            let exact = exact_composite_with(g, a, psi, &cfg)?;
            let approx = approx_composite_with(g, a, psi, basis, &cfg)?;
            let err = postselected_error(&exact, &approx, index)?;
            worst = worst.max(err - bound);
            cases += 1;
        }
    }
    Ok((worst, cases))
}

pub fn run_identity_checks() -> Result<Vec<CheckResult>, ExperimentError> {
    let g = GaussianParams::new(1.0).expect("unit spread");
    let mut checks = vec![
        CheckResult::below("gamma_half_integer_identity", gamma_identity_residual(), GAMMA_TOL),
        CheckResult::below("factorial_ratio_monotone", factorial_ratio_violation()?, 0.0),
        CheckResult::below("robbins_sandwich", robbins_violation()?, 0.0),
        CheckResult::below("moment_norm_quadrature", moment_norm_residual(&g)?, MOMENT_TOL),
    ];
    let k = series_order_threshold(1.0)?;
    checks.push(CheckResult::below("series_order_threshold", (k as f64 - 17_772_222.0).abs(), 0.0));
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..10 {
        worst = worst.max(series_bound_excess(3, seed, &g, 1.0)?.0);
    }
    checks.push(CheckResult::below("series_bound_dominance", worst, 0.0));
    Ok(checks)
}

/// Oracle cross-checks of every closed form on the plan's instance and
/// couplings.
pub fn run_verify(plan: &SweepPlan) -> Result<Vec<CheckResult>, ExperimentError> {
    let setup = build_setup(plan)?;
    let (a, psi, basis) = (&setup.observable, &setup.psi, &setup.basis);
    let g = plan.gaussian()?;
    let quad = QuadratureSpec::default();
    let profile = weak_profile(a, psi, basis)?;
    let z_axis = BlochAxis::new(0.0, 0.0).expect("constant axis");
    let x_axis = BlochAxis::new(std::f64::consts::FRAC_PI_2, 0.0).expect("constant axis");

    let mut overlap_gap: f64 = 0.0;
    let mut norm_gap: f64 = 0.0;
    let mut dense_gap: f64 = 0.0;
    let mut series_gap: f64 = 0.0;
    let mut qubit_gap: f64 = 0.0;
    let mut prob_gap: f64 = 0.0;
    for &epsilon in &plan.epsilons {
        let cfg = CouplingConfig::new(epsilon, plan.hbar)?;
        for w in profile.iter().filter_map(|(_, w)| *w) {
            let wv = WeakValue::from_value(w, &cfg);
            let weak = g.weak_probe(w, &cfg);
            for &value in a.eigenvalues() {
                let eigen = g.eigen_probe(value, &cfg);
                let q = quad_overlap(&eigen, &weak, &g, &quad)?.value;
                overlap_gap = overlap_gap.max((q - overlap_pa_qw(value, &wv, &g, &cfg)).norm());

                let state = qubit_expm_apply(wv.scaled(), QubitState::plus_z());
                let n = state.norm_sqr().sqrt().recip();
                let eigen_state = qubit_expm_apply(C64::new(cfg.ratio() * value, 0.0), QubitState::plus_z());
                let oracle = eigen_state.inner(&state) * n;
                qubit_gap = qubit_gap.max((oracle - overlap_qubit(value, &wv, &cfg)).norm());
            }
            let n_quad = quad_normalization(wv.beta, &g, &quad)?.value;
            norm_gap = norm_gap.max((n_quad - gaussian_normalization(wv.beta, &g)).abs());

            let state = qubit_expm_apply(wv.scaled(), QubitState::plus_z());
            let n = state.norm_sqr().sqrt().recip();
            norm_gap = norm_gap.max((n - qubit_normalization(&wv)).abs());
            let normalized = state.scale(C64::new(n, 0.0));
            for (axis, closed) in [(z_axis, prob_plus_z(&wv)), (x_axis, prob_plus_axis(&wv, &x_axis))] {
                prob_gap = prob_gap.max((axis.plus_state().inner(&normalized).norm_sqr() - closed).abs());
            }
            prob_gap = prob_gap.max((normalized.down.norm_sqr() - prob_minus_z(&wv)).abs());
        }

        let dense = dense_expm_apply_matrix(&setup.matrix, &cfg, psi, &MatExpSpec::default())?;
        let exact = exact_state_qubit(a, psi, &cfg)?;
        dense_gap = dense_gap.max(dense.max_abs_diff(&exact));

        if cfg.ratio() * a.op_norm() * g.delta().max(1.0) <= SERIES_REACH {
            let gm = gaussian_moments(&g, SERIES_ORDER);
            let qm = qubit_moments(SERIES_ORDER);
            let gx = exact_composite_with(&g, a, psi, &cfg)?;
            let qx = exact_composite_with(&QubitModel, a, psi, &cfg)?;
            for phi in basis.states() {
                let gs = series_partial_sums(a, psi, phi, &cfg, &gm, SERIES_ORDER)?[SERIES_ORDER];
                let qs = series_partial_sums(a, psi, phi, &cfg, &qm, SERIES_ORDER)?[SERIES_ORDER];
                series_gap = series_gap
                    .max((gs - project_on_initial(&gx, phi)).norm())
                    .max((qs - project_on_initial(&qx, phi)).norm());
            }
        }
    }
    Ok(vec![
        CheckResult::below("gaussian_overlap_quadrature", overlap_gap, OVERLAP_QUAD_TOL),
        CheckResult::below("normalization_oracles", norm_gap, OVERLAP_QUAD_TOL),
        CheckResult::below("qubit_overlap_expm", qubit_gap, DENSE_TOL),
        CheckResult::below("qubit_probabilities_expm", prob_gap, PROBABILITY_TOL),
        CheckResult::below("dense_exponential", dense_gap, DENSE_TOL),
        CheckResult::below("taylor_series", series_gap, SERIES_TOL),
    ])
}

/// `(<phi| ⊗ <π|) c`, from the probe closed forms.
fn project_on_initial<M: ProbeModel>(c: &Composite<M>, phi: &SystemState) -> C64 {
    let init = TiltedProbe::initial();
    c.terms()
        .iter()
        .map(|t| t.coefficient * dot(phi.amps(), c.states()[t.index].amps()) * c.model().overlap(&init, &t.probe))
        .sum()
}

pub fn checks_csv(checks: &[CheckResult]) -> String {
    let mut out = String::from("name,max_residual,pass\n");
    for c in checks {
        out.push_str(&format!("{},{},{}\n", c.name, fmt_num(c.max_residual), c.pass));
    }
    out
}
