//! Simulation of one and two coupled qubits driven by correlated classical noise.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! stochastic (OU noise, spectral matrices)
//!     -> models (qubit Hamiltonians, couplings, Bell states)
//!     -> redfield (relaxation tensor, Liouvillian, propagation)
//!     -> observables (purity, fidelity, absorption spectra)
//! ```
//!
//! All analytic operations are pure functions on immutable inputs and are safe
//! to use concurrently. Monte-Carlo sampling and parameter sweeps parallelize
//! over independent deterministic substreams, so results do not depend on the
//! number of threads.

pub mod export;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod redfield;
pub mod stochastic;

pub use grid::TimeGrid;
