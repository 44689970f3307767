//! Composite system-probe states shared by both probe models.
//!
//! A probe state is `exp(l) · e^{iλD}|π>` for a complex tilt `λ` and log
//! prefactor `l`, where `D` is the probe observable and `|π>` the initial
//! probe state. Each model only has to supply the characteristic function
//! `<π|e^{iμD}|π>`; every Gram entry follows from it.
//!
//! Norms of differences are assembled from `overlap - 1` rather than from
//! overlaps, grouped by reference-basis index. Within each group the plain
//! coefficients cancel exactly, so near-identical states give differences
//! that are accurate relative to their own size rather than to one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{dot, HilbertError, Observable, PostselectionBasis, SystemState};
use crate::numeric::expm1c;
use crate::weakcore::{weak_profile, CertificationParams, CouplingConfig, WeakError, UNDEFINED_OVERLAP};
use crate::C64;

/// Round-off tolerated below zero before a squared norm is rejected.
pub const NEGATIVE_CLAMP: f64 = -1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompositeError {
    #[error("composites come from different inputs: {0}")]
    ProvenanceMismatch(String),
    #[error("expected a composite over the {expected:?} basis, got {got:?}")]
    WrongBasis { expected: BasisTag, got: BasisTag },
    #[error("squared norm {value:e} is negative beyond round-off")]
    NegativeNorm { value: f64 },
    #[error("postselection index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error(transparent)]
    Weak(#[from] WeakError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Probe state `exp(log_prefactor) · e^{i tilt D}|π>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedProbe {
    pub tilt: C64,
    pub log_prefactor: C64,
}

impl TiltedProbe {
    /// The untouched initial probe state.
    pub fn initial() -> Self {
        Self { tilt: C64::new(0.0, 0.0), log_prefactor: C64::new(0.0, 0.0) }
    }

    pub fn new(tilt: C64, prefactor: C64) -> Self {
        Self { tilt, log_prefactor: prefactor.ln() }
    }

    pub fn prefactor(&self) -> C64 {
        self.log_prefactor.exp()
    }
}

/// A probe whose initial state and readout observable fix every overlap.
pub trait ProbeModel: Clone + Send + Sync {
    fn tag(&self) -> &'static str;

    /// Model parameter recorded for provenance checks.
    fn parameter(&self) -> f64;

    /// `ln N` for a weak value with scaled imaginary part `beta`.
    fn log_normalization(&self, beta: f64) -> f64;

    /// `<π| e^{iμD} |π>`.
    fn characteristic(&self, mu: C64) -> C64;

    /// `<π| e^{iμD} |π> - 1`.
    fn characteristic_minus_one(&self, mu: C64) -> C64;

    fn overlap(&self, x: &TiltedProbe, y: &TiltedProbe) -> C64 {
        (x.log_prefactor.conj() + y.log_prefactor).exp() * self.characteristic(y.tilt - x.tilt.conj())
    }

    fn overlap_minus_one(&self, x: &TiltedProbe, y: &TiltedProbe) -> C64 {
        let u = expm1c(x.log_prefactor.conj() + y.log_prefactor);
        let v = self.characteristic_minus_one(y.tilt - x.tilt.conj());
        u + v + u * v
    }

    /// Probe factor attached to eigenvalue `a`.
    fn eigen_probe(&self, a: f64, cfg: &CouplingConfig) -> TiltedProbe {
        TiltedProbe { tilt: C64::new(cfg.ratio() * a, 0.0), log_prefactor: C64::new(0.0, 0.0) }
    }

    /// Normalized probe factor attached to weak value `w`.
    fn weak_probe(&self, w: C64, cfg: &CouplingConfig) -> TiltedProbe {
        let r = cfg.ratio();
        TiltedProbe { tilt: w * r, log_prefactor: C64::new(self.log_normalization(r * w.im), 0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTag {
    Eigen,
    Postselection,
}

/// Inputs a composite was built from; differences are only taken between
/// composites with equal provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub model: &'static str,
    pub parameter: f64,
    pub coupling: CouplingConfig,
    pub psi: Vec<C64>,
    pub eigenvalues: Vec<f64>,
}

/// `coefficient · |state[index]> ⊗ probe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub index: usize,
    pub coefficient: C64,
    pub probe: TiltedProbe,
    /// `|a|` for eigen terms, `|A_w|` for postselection terms.
    pub label: f64,
}

/// `Σ_k c_k |s_k> ⊗ |probe_k>` over one orthonormal system basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite<M: ProbeModel> {
    model: M,
    tag: BasisTag,
    states: Vec<SystemState>,
    terms: Vec<Term>,
    provenance: Provenance,
}

impl<M: ProbeModel> Composite<M> {
    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Keeps the terms accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&Term) -> bool) -> Self {
        Self { terms: self.terms.iter().copied().filter(|t| keep(t)).collect(), ..self.clone() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.norm_sqr() * self.model.overlap(&t.probe, &t.probe).re).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().max(0.0).sqrt()
    }

    /// Squared norm from the full Gram matrix, system overlaps included.
    pub fn gram_norm_sqr(&self) -> f64 {
        let mut total = C64::new(0.0, 0.0);
        for x in &self.terms {
            for y in &self.terms {
                let sys = dot(self.states[x.index].amps(), self.states[y.index].amps());
                total += x.coefficient.conj() * y.coefficient * sys * self.model.overlap(&x.probe, &y.probe);
            }
        }
        total.re
    }
}

fn provenance<M: ProbeModel>(model: &M, a: &Observable, psi: &SystemState, cfg: &CouplingConfig) -> Provenance {
    Provenance {
        model: model.tag(),
        parameter: model.parameter(),
        coupling: *cfg,
        psi: psi.amps().to_vec(),
        eigenvalues: a.eigenvalues().to_vec(),
    }
}

/// `Σ_a <a|psi> |a> ⊗ e^{i r a D}|π>`, the exact post-interaction state.
pub fn exact_composite_with<M: ProbeModel>(
    model: &M,
    a: &Observable,
    psi: &SystemState,
    cfg: &CouplingConfig,
) -> Result<Composite<M>, CompositeError> {
    let comps = a.components(psi)?;
    let terms = a
        .eigenvalues()
        .iter()
        .zip(comps)
        .enumerate()
        .filter(|(_, (_, c))| c.norm() > UNDEFINED_OVERLAP)
        .map(|(index, (&value, coefficient))| Term {
            index,
            coefficient,
            probe: model.eigen_probe(value, cfg),
            label: value.abs(),
        })
        .collect();
    Ok(Composite {
        model: model.clone(),
        tag: BasisTag::Eigen,
        states: a.eigenvectors().to_vec(),
        terms,
        provenance: provenance(model, a, psi, cfg),
    })
}

/// `Σ_φ <φ|psi> |φ> ⊗ N e^{i r A_w D}|π>`, skipping orthogonal postselections.
pub fn approx_composite_with<M: ProbeModel>(
    model: &M,
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    cfg: &CouplingConfig,
) -> Result<Composite<M>, CompositeError> {
    let terms = weak_profile(a, psi, basis)?
        .into_iter()
        .enumerate()
        .filter_map(|(index, (coefficient, w))| {
            w.map(|w| Term { index, coefficient, probe: model.weak_probe(w, cfg), label: w.norm() })
        })
        .collect();
    Ok(Composite {
        model: model.clone(),
        tag: BasisTag::Postselection,
        states: basis.states().to_vec(),
        terms,
        provenance: provenance(model, a, psi, cfg),
    })
}

/// `‖Σ_k w_k |probe_k>‖²` written as `|Σ w|² + Σ_kl w̄_k w_l (<k|l> - 1)`.
fn group_norm_sqr<M: ProbeModel>(model: &M, members: &[(C64, TiltedProbe)]) -> f64 {
    let sum: C64 = members.iter().map(|(w, _)| w).sum();
    let mut total = sum.norm_sqr();
    for (k, (wk, pk)) in members.iter().enumerate() {
        total += wk.norm_sqr() * model.overlap_minus_one(pk, pk).re;
        for (wl, pl) in &members[k + 1..] {
            total += 2.0 * (wk.conj() * wl * model.overlap_minus_one(pk, pl)).re;
        }
    }
    total
}

fn clamp_sqrt(value: f64) -> Result<f64, CompositeError> {
    if value < NEGATIVE_CLAMP {
        return Err(CompositeError::NegativeNorm { value });
    }
    Ok(value.max(0.0).sqrt())
}

fn check_pair<M: ProbeModel>(exact: &Composite<M>, approx: &Composite<M>) -> Result<(), CompositeError> {
    if exact.tag != BasisTag::Eigen {
        return Err(CompositeError::WrongBasis { expected: BasisTag::Eigen, got: exact.tag });
    }
    let (p, q) = (&exact.provenance, &approx.provenance);
    let what = if p.model != q.model || p.parameter != q.parameter {
        "probe model"
    } else if p.coupling != q.coupling {
        "coupling"
    } else if p.psi != q.psi {
        "preselected state"
    } else if p.eigenvalues != q.eigenvalues {
        "observable"
    } else {
        return Ok(());
    };
    Err(CompositeError::ProvenanceMismatch(what.to_string()))
}

/// `‖exact - approx‖`, with every term expanded in the eigenbasis carried by
/// `exact`.
pub fn norm_difference<M: ProbeModel>(exact: &Composite<M>, approx: &Composite<M>) -> Result<f64, CompositeError> {
    check_pair(exact, approx)?;
    let reference = &exact.states;
    let mut groups: Vec<Vec<(C64, TiltedProbe)>> = vec![Vec::new(); reference.len()];
    for t in &exact.terms {
        groups[t.index].push((t.coefficient, t.probe));
    }
    for t in &approx.terms {
        let state = approx.states[t.index].amps();
        for (group, e) in groups.iter_mut().zip(reference) {
            group.push((-dot(e.amps(), state) * t.coefficient, t.probe));
        }
    }
    let total: f64 = groups.iter().map(|g| group_norm_sqr(&exact.model, g)).sum();
    clamp_sqrt(total)
}

/// `‖ |φ><φ|exact> - |φ><φ|approx> ‖` for the postselection `index`, i.e.
/// the unnormalized error of one postselected probe state.
pub fn postselected_error<M: ProbeModel>(
    exact: &Composite<M>,
    approx: &Composite<M>,
    index: usize,
) -> Result<f64, CompositeError> {
    check_pair(exact, approx)?;
    let phi = approx.states.get(index).ok_or(CompositeError::IndexOutOfRange { index, dim: approx.states.len() })?;
    let mut group: Vec<(C64, TiltedProbe)> =
        exact.terms.iter().map(|t| (dot(phi.amps(), exact.states[t.index].amps()) * t.coefficient, t.probe)).collect();
    if let Some(t) = approx.terms.iter().find(|t| t.index == index) {
        group.push((-t.coefficient, t.probe));
    }
    clamp_sqrt(group_norm_sqr(&exact.model, &group))
}

/// The full difference and the three pieces bounding it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleSplit {
    pub full: f64,
    /// Difference between the parts with `|a| <= abar` and `|A_w| <= wbar`.
    pub restricted: f64,
    /// Norm of the exact part with `|a| > abar`.
    pub eigen_tail: f64,
    /// Norm of the approximate part with `|A_w| > wbar`.
    pub weak_tail: f64,
}

impl TriangleSplit {
    pub fn triangle_sum(&self) -> f64 {
        self.restricted + self.eigen_tail + self.weak_tail
    }
}

pub fn triangle_split<M: ProbeModel>(
    exact: &Composite<M>,
    approx: &Composite<M>,
    abar: f64,
    wbar: f64,
) -> Result<TriangleSplit, CompositeError> {
    let full = norm_difference(exact, approx)?;
    let exact_in = exact.restrict(|t| t.label <= abar);
    let approx_in = approx.restrict(|t| t.label <= wbar);
    let restricted = norm_difference(&exact_in, &approx_in)?;
    let eigen_tail = exact.restrict(|t| t.label > abar).norm();
    let weak_tail = approx.restrict(|t| t.label > wbar).norm();
    Ok(TriangleSplit { full, restricted, eigen_tail, weak_tail })
}

/// `2√ξ + 2√(ξ(1+ξ))`: two tail norms below `√ξ` plus the restricted
/// difference below `2√(ξ(1+ξ))`.
pub fn conservative_bound(xi: f64) -> f64 {
    2.0 * xi.sqrt() + 2.0 * (xi * (1.0 + xi)).sqrt()
}

/// `ξ(6 + 4ξ)`, reported for comparison only.
pub fn paper_bound(xi: f64) -> f64 {
    xi * (6.0 + 4.0 * xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorCertificate {
    pub params: CertificationParams,
    pub epsilon: f64,
    pub achieved_norm_diff: f64,
    pub conservative_bound: f64,
    pub paper_bound: f64,
}

impl ErrorCertificate {
    pub fn new(params: CertificationParams, epsilon: f64, achieved_norm_diff: f64) -> Self {
        Self {
            params,
            epsilon,
            achieved_norm_diff,
            conservative_bound: conservative_bound(params.xi),
            paper_bound: paper_bound(params.xi),
        }
    }

    pub fn passes(&self) -> bool {
        self.achieved_norm_diff <= self.conservative_bound
    }
}

/// Builds both composites at `epsilon` and records the achieved difference.
pub fn certify_at<M: ProbeModel>(
    model: &M,
    a: &Observable,
    psi: &SystemState,
    basis: &PostselectionBasis,
    params: CertificationParams,
    epsilon: f64,
    hbar: f64,
) -> Result<ErrorCertificate, CompositeError> {
    let cfg = CouplingConfig::new(epsilon, hbar)?;
    let exact = exact_composite_with(model, a, psi, &cfg)?;
    let approx = approx_composite_with(model, a, psi, basis, &cfg)?;
    Ok(ErrorCertificate::new(params, epsilon, norm_difference(&exact, &approx)?))
}

/// Tally of retained `(a, φ)` pairs and how many broke a bound sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub pairs: usize,
    pub violations: usize,
}

/// Largest `ceiling · 2^{-k}` accepted by `admissible`.
///
/// Both certification conditions hold as the coupling goes to zero, so the
/// scan always terminates; 1100 halvings reach the subnormal range.
pub fn halving_search(ceiling: f64, admissible: impl Fn(f64) -> bool) -> f64 {
    let mut eps = ceiling;
    for _ in 0..1100 {
        if admissible(eps) {
            return eps;
        }
        eps *= 0.5;
    }
    eps
}
