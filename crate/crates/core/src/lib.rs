//! Numerical laboratory for the weak value approximation.
//!
//! A finite-dimensional system is weakly coupled to a probe (a Gaussian
//! pointer read out in position, or a qubit read out through `σ_x`), then
//! postselected. This crate builds the exact entangled state and the
//! weak-value superposition side by side, measures the distance between
//! them, and certifies couplings for which that distance is provably small.
//!
//! Module map:
//!
//! - [`hilbert`]: complex vectors, dense Hermitian matrices, spectral data.
//! - [`weakcore`]: weak values, tail masses, cutoff selection, legacy truncations.
//! - [`composite`]: probe-model trait and the shared composite-state algebra.
//! - [`gaussian`]: the von Neumann (Gaussian pointer) model.
//! - [`qubit`]: the qubit-pointer model and arbitrary-axis readout.
//! - [`bounds`]: moment norms, series error bounds, log-domain special functions.
//! - [`oracle`]: brute-force quadrature, matrix exponentials and series sums.
//! - [`experiment`]: sweeps, certification runs and identity checks behind the CLI.

pub mod bounds;
pub mod composite;
pub mod experiment;
pub mod gaussian;
pub mod hilbert;
pub mod numeric;
pub mod oracle;
pub mod qubit;
pub mod weakcore;

pub use num_complex::Complex64 as C64;

pub use composite::{BasisTag, Composite, ErrorCertificate, ProbeModel, TiltedProbe, TriangleSplit};
pub use gaussian::GaussianParams;
pub use hilbert::{Observable, PostselectionBasis, SystemState};
pub use qubit::QubitModel;
pub use weakcore::{CertificationParams, CouplingConfig, WeakValue};
