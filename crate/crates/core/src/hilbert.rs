//! Finite-dimensional Hilbert space: states, dense operators and spectral data.
//!
//! Inner products are conjugate-linear in the first argument. Observables are
//! stored as real eigenvalues plus an orthonormal eigenbasis; every formula
//! downstream consumes them in that form.

use std::ops::{Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

/// Tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Tolerance for pairwise orthonormality of bases.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the full Frobenius norm.
pub const JACOBI_OFFDIAG_TOL: f64 = 1e-13;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Minimum spacing enforced between eigenvalues of generated observables.
pub const MIN_EIGEN_SPACING: f64 = 1e-6;
/// Generated instances are rerolled until every `|<phi|psi>|` exceeds this.
pub const MIN_POSTSELECTION_OVERLAP: f64 = 1e-3;

/// Amplitudes below this magnitude count as zero when fixing phases and
/// ordering degenerate eigenvectors.
const ZERO_AMPLITUDE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("state has no components")]
    Empty,
    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),
    #[error("zero vector cannot be normalized")]
    ZeroNorm,
    #[error("matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("matrix is not Hermitian: max |M - M^H| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("states are not orthonormal: max deviation {deviation:e}")]
    NotOrthonormal { deviation: f64 },
    #[error("basis is incomplete: {count} states for dimension {dim}")]
    Incomplete { count: usize, dim: usize },
    #[error("eigenvalue count {values} does not match eigenvector count {vectors}")]
    SpectrumMismatch { values: usize, vectors: usize },
    #[error("instance dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("invalid matrix JSON: {0}")]
    Json(String),
}

/// A vector of complex amplitudes in the computational basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    amps: Vec<C64>,
}

impl SystemState {
    pub fn new(amps: Vec<C64>) -> Result<Self, HilbertError> {
        if amps.is_empty() {
            return Err(HilbertError::Empty);
        }
        if let Some(i) = amps.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HilbertError::NonFinite(i));
        }
        Ok(Self { amps })
    }

    /// Builds the state and rescales it to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self, HilbertError> {
        let state = Self::new(amps)?;
        state.normalize()
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, HilbertError> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// The `index`-th computational basis vector.
    pub fn basis_vector(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self, HilbertError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HilbertError::ZeroNorm);
        }
        Ok(Self { amps: self.amps.iter().map(|z| z / n).collect() })
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { amps: self.amps.iter().map(|z| z * factor).collect() }
    }
}

/// `<x|y>`, conjugate-linear in `x`.
pub fn inner(x: &SystemState, y: &SystemState) -> Result<C64, HilbertError> {
    if x.dim() != y.dim() {
        return Err(HilbertError::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(dot(x.amps(), y.amps()))
}

pub(crate) fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self, HilbertError> {
        let n = rows.len();
        if n == 0 {
            return Err(HilbertError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(HilbertError::NotSquare { rows: n, row: i, cols: row.len() });
            }
            data.extend(row);
        }
        if let Some(i) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HilbertError::NonFinite(i));
        }
        Ok(Self { n, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, HilbertError> {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect())
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Parses a JSON array of rows, each an array of `[re, im]` pairs.
    pub fn from_json(text: &str) -> Result<Self, HilbertError> {
        let rows: Vec<Vec<(f64, f64)>> = serde_json::from_str(text).map_err(|e| HilbertError::Json(e.to_string()))?;
        Self::from_rows(rows.into_iter().map(|r| r.into_iter().map(|(re, im)| C64::new(re, im)).collect()).collect())
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<(f64, f64)>> =
            (0..self.n).map(|i| (0..self.n).map(|j| (self[(i, j)].re, self[(i, j)].im)).collect()).collect();
        serde_json::to_string(&rows).expect("matrix of floats always serializes")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len(), "apply dimension mismatch");
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "add dimension mismatch");
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = self[(i, j)] * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

fn max_orthonormality_deviation(states: &[SystemState]) -> f64 {
    let mut dev: f64 = 0.0;
    for (i, x) in states.iter().enumerate() {
        for (j, y) in states.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((dot(x.amps(), y.amps()) - target).norm());
        }
    }
    dev
}

fn check_orthonormal(states: &[SystemState], dim: usize) -> Result<(), HilbertError> {
    if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
        return Err(HilbertError::DimensionMismatch { left: dim, right: bad.dim() });
    }
    let deviation = max_orthonormality_deviation(states);
    if deviation > ORTHONORMAL_TOL {
        return Err(HilbertError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Hermitian operator as spectral data.
///
/// Degenerate eigenvalues are listed once per eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<SystemState>,
}

impl Observable {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: Vec<SystemState>) -> Result<Self, HilbertError> {
        if eigenvalues.len() != eigenvectors.len() {
            return Err(HilbertError::SpectrumMismatch { values: eigenvalues.len(), vectors: eigenvectors.len() });
        }
        let dim = eigenvectors.first().ok_or(HilbertError::Empty)?.dim();
        if eigenvectors.len() != dim {
            return Err(HilbertError::Incomplete { count: eigenvectors.len(), dim });
        }
        if let Some(i) = eigenvalues.iter().position(|v| !v.is_finite()) {
            return Err(HilbertError::NonFinite(i));
        }
        check_orthonormal(&eigenvectors, dim)?;
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// Diagonal observable in the computational basis.
    pub fn diagonal(values: &[f64]) -> Result<Self, HilbertError> {
        let dim = values.len();
        Self::new(values.to_vec(), (0..dim).map(|i| SystemState::basis_vector(dim, i)).collect())
    }

    pub fn dim(&self) -> usize {
        self.eigenvectors.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[SystemState] {
        &self.eigenvectors
    }

    /// `max |a|`, the operator norm in finite dimension.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }

    /// `<a|psi>` for every eigenvector, in eigenvalue order.
    pub fn components(&self, psi: &SystemState) -> Result<Vec<C64>, HilbertError> {
        self.eigenvectors.iter().map(|a| inner(a, psi)).collect()
    }

    /// `Σ_a a^power |a><a|psi>`, evaluated from the spectral data.
    pub fn apply_power(&self, power: u32, psi: &SystemState) -> Result<SystemState, HilbertError> {
        let comps = self.components(psi)?;
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for ((a, vec), c) in self.eigenvalues.iter().zip(&self.eigenvectors).zip(comps) {
            let w = c * a.powi(power as i32);
            for (o, v) in out.iter_mut().zip(vec.amps()) {
                *o += w * v;
            }
        }
        SystemState::new(out)
    }

    /// `Σ_a a |a><a|` as a dense matrix.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n);
        for (a, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += *a * v.amps()[i] * v.amps()[j].conj();
                }
            }
        }
        m
    }

    pub fn eigenbasis(&self) -> PostselectionBasis {
        PostselectionBasis { states: self.eigenvectors.clone() }
    }
}

/// Complete orthonormal set of postselection states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostselectionBasis {
    states: Vec<SystemState>,
}

impl PostselectionBasis {
    pub fn new(states: Vec<SystemState>) -> Result<Self, HilbertError> {
        let dim = states.first().ok_or(HilbertError::Empty)?.dim();
        if states.len() != dim {
            return Err(HilbertError::Incomplete { count: states.len(), dim });
        }
        check_orthonormal(&states, dim)?;
        Ok(Self { states })
    }

    pub fn computational(dim: usize) -> Self {
        Self { states: (0..dim).map(|i| SystemState::basis_vector(dim, i)).collect() }
    }

    /// Rows of a JSON matrix taken as the basis states.
    pub fn from_json_rows(text: &str) -> Result<Self, HilbertError> {
        let m = CMatrix::from_json(text)?;
        let n = m.dim();
        Self::new((0..n).map(|i| SystemState::new((0..n).map(|j| m[(i, j)]).collect())).collect::<Result<_, _>>()?)
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    /// `<phi|psi>` for every basis member.
    pub fn amplitudes(&self, psi: &SystemState) -> Result<Vec<C64>, HilbertError> {
        self.states.iter().map(|phi| inner(phi, psi)).collect()
    }
}

/// Diagonalizes a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector is phased so that its
/// first significant component is real and positive; eigenvectors sharing an
/// eigenvalue are ordered by their components.
pub fn hermitian_spectral(matrix: &CMatrix) -> Result<Observable, HilbertError> {
    let n = matrix.dim();
    if n == 0 {
        return Err(HilbertError::Empty);
    }
    let deviation = matrix.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(HilbertError::NotHermitian { deviation });
    }
    let mut a = matrix.add(&matrix.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if a.off_diagonal_norm() <= JACOBI_OFFDIAG_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let residual = a.off_diagonal_norm();
        if residual > JACOBI_OFFDIAG_TOL * scale {
            return Err(HilbertError::NoConvergence { sweeps: JACOBI_MAX_SWEEPS, residual });
        }
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut col: Vec<C64> = (0..n).map(|i| v[(i, k)]).collect();
            fix_phase(&mut col);
            (a[(k, k)].re, col)
        })
        .collect();
    order_spectrum(&mut pairs, scale);

    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = pairs.into_iter().unzip();
    let vectors = vectors.into_iter().map(SystemState::new).collect::<Result<Vec<_>, _>>()?;
    Observable::new(values, vectors)
}

/// One two-sided rotation zeroing `a[(p, q)]`.
///
/// The off-diagonal phase is absorbed into column `q` first, which leaves a
/// real symmetric 2x2 block for the classical rotation.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = (apq / g).conj();
    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
    let t = if tau >= 0.0 { 1.0 / (tau + (1.0 + tau * tau).sqrt()) } else { -1.0 / (-tau + (1.0 + tau * tau).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = -s * phase;
    let u_qq = c * phase;

    let n = a.dim();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

fn fix_phase(col: &mut [C64]) {
    if let Some(lead) = col.iter().find(|z| z.norm() > ZERO_AMPLITUDE).copied() {
        let rot = lead.conj() / lead.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
    }
}

fn lexicographic(x: &[C64], y: &[C64]) -> std::cmp::Ordering {
    let lead = |v: &[C64]| v.iter().position(|z| z.norm() > ZERO_AMPLITUDE).unwrap_or(v.len());
    lead(x).cmp(&lead(y)).then_with(|| {
        for (a, b) in x.iter().zip(y) {
            let ord = b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im));
            if ord.is_ne() {
                return ord;
            }
        }
        std::cmp::Ordering::Equal
    })
}

fn order_spectrum(pairs: &mut [(f64, Vec<C64>)], scale: f64) {
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let tie = 1e-12 * scale.max(1.0);
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        start = end;
    }
}

/// A seeded test problem: observable, preselection and postselection basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub observable: Observable,
    pub psi: SystemState,
    pub basis: PostselectionBasis,
    pub seed: u64,
    /// Stream index of the generator that produced an instance with every
    /// postselection overlap above [`MIN_POSTSELECTION_OVERLAP`].
    pub salt: u64,
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut g = CMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = complex_normal(rng);
        }
    }
    g.add(&g.adjoint()).scale(C64::new(0.5, 0.0))
}

fn random_state(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim).map(|_| complex_normal(rng)).collect()
}

/// Orthonormalizes with two passes of modified Gram-Schmidt.
fn gram_schmidt(mut vectors: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    for k in 0..vectors.len() {
        for _ in 0..2 {
            for j in 0..k {
                let proj = dot(&vectors[j], &vectors[k]);
                let (done, rest) = vectors.split_at_mut(k);
                for (x, b) in rest[0].iter_mut().zip(&done[j]) {
                    *x -= proj * b;
                }
            }
        }
        let norm = vectors[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in vectors[k].iter_mut() {
            *x /= norm;
        }
    }
    vectors
}

fn try_instance(dim: usize, seed: u64, salt: u64) -> Result<Instance, HilbertError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(salt);
    let decomposed = hermitian_spectral(&random_hermitian(dim, &mut rng))?;
    let mut values = decomposed.eigenvalues().to_vec();
    for i in 1..values.len() {
        if values[i] - values[i - 1] < MIN_EIGEN_SPACING {
            values[i] = values[i - 1] + MIN_EIGEN_SPACING;
        }
    }
    let observable = Observable::new(values, decomposed.eigenvectors().to_vec())?;
    let psi = SystemState::normalized(random_state(dim, &mut rng))?;
    let raw: Vec<Vec<C64>> = (0..dim).map(|_| random_state(dim, &mut rng)).collect();
    let basis =
        PostselectionBasis::new(gram_schmidt(raw).into_iter().map(SystemState::new).collect::<Result<_, _>>()?)?;
    Ok(Instance { observable, psi, basis, seed, salt })
}

/// Deterministic random instance for `(dim, seed)`.
///
/// The generator stream is advanced until every postselection overlap
/// `|<phi|psi>|` exceeds [`MIN_POSTSELECTION_OVERLAP`]; the accepted stream
/// index is kept in [`Instance::salt`].
pub fn random_instance(dim: usize, seed: u64) -> Result<Instance, HilbertError> {
    if dim < 2 {
        return Err(HilbertError::DimensionTooSmall(dim));
    }
    let mut salt = 0;
    loop {
        let inst = try_instance(dim, seed, salt)?;
        let ok = inst.basis.amplitudes(&inst.psi)?.iter().all(|z| z.norm() > MIN_POSTSELECTION_OVERLAP);
        if ok {
            return Ok(inst);
        }
        salt += 1;
    }
}
