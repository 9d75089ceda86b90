//! Concrete qubit systems: a single two-level system with x/z noise channels
//! and a dipole-coupled qubit pair, plus Bell states and dipole operators.
//!
//! Basis conventions: single-qubit basis is ordered `{|0>, |1>}` with `|0>`
//! the ground state, so `sigma_z = |1><1| - |0><0| = diag(-1, +1)` and the
//! raising operator is `sigma_plus = |1><0|`. The two-qubit product basis is
//! `{|00>, |01>, |10>, |11>}` with the first label on site 1.

use ndarray::{array, linalg::kron, Array1};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, CMat, CVec};
use crate::redfield::{DensityMatrix, RedfieldError, SystemModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("noise wiring must not be empty")]
    EmptyWiring,
    #[error("site energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("dipole operator violates the single-excitation selection rule at ({0},{1})")]
    SelectionRule(usize, usize),
    #[error(transparent)]
    Redfield(#[from] RedfieldError),
}

pub mod pauli {
    //! Pauli and ladder operators in the ordered basis {|0>, |1>}.
    use super::*;

    pub fn identity() -> CMat {
        CMat::eye(2)
    }

    pub fn sigma_x() -> CMat {
        array![[c(0.0), c(1.0)], [c(1.0), c(0.0)]]
    }

    pub fn sigma_y() -> CMat {
        array![
            [c(0.0), Complex64::new(0.0, -1.0)],
            [Complex64::new(0.0, 1.0), c(0.0)]
        ]
    }

    /// `sigma_z = |1><1| - |0><0|`; the ground state carries eigenvalue -1.
    pub fn sigma_z() -> CMat {
        array![[c(-1.0), c(0.0)], [c(0.0), c(1.0)]]
    }

    pub fn sigma_plus() -> CMat {
        array![[c(0.0), c(0.0)], [c(1.0), c(0.0)]]
    }

    pub fn sigma_minus() -> CMat {
        array![[c(0.0), c(1.0)], [c(0.0), c(0.0)]]
    }
}

/// Which local operator a noise channel couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn operator(self) -> CMat {
        match self {
            Axis::X => pauli::sigma_x(),
            Axis::Y => pauli::sigma_y(),
            Axis::Z => pauli::sigma_z(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    One,
    Two,
}

/// Parameters of the dipole-coupled qubit pair
/// `H = eps1/2 sz(1) + eps2/2 sz(2) + J (s+(1) s-(2) + s+(2) s-(1))`,
/// with one noise channel per `noise_wiring` entry, coupling the listed
/// site-local operator to the matching Ornstein-Uhlenbeck channel.
#[derive(Debug, Clone)]
pub struct QubitPairParams {
    pub eps1: f64,
    pub eps2: f64,
    pub j_coupling: f64,
    pub noise_wiring: Vec<(Site, Axis)>,
}

/// Single qubit `H = (eps/2) sigma_z` with one noise channel per axis listed,
/// in channel order.
pub fn single_qubit(eps: f64, axes: &[Axis]) -> Result<SystemModel, ModelError> {
    if eps <= 0.0 {
        return Err(ModelError::NonPositiveEnergy(eps));
    }
    if axes.is_empty() {
        return Err(ModelError::EmptyWiring);
    }
    let h0 = pauli::sigma_z().mapv(|z| z * c(eps / 2.0));
    let couplings = axes.iter().map(|a| a.operator()).collect();
    Ok(SystemModel::new(h0, couplings)?)
}

/// Site-local operator embedded in the two-qubit product space.
pub fn site_operator(site: Site, axis: Axis) -> CMat {
    match site {
        Site::One => kron(&axis.operator(), &pauli::identity()),
        Site::Two => kron(&pauli::identity(), &axis.operator()),
    }
}

/// Dipole-coupled two-qubit system on the product basis.
///
/// For `eps1 = eps2` the singly-excited eigenstates are `(|01> ± |10>)/sqrt(2)`,
/// split by `2 J`, with the symmetric combination higher when `J > 0`.
pub fn qubit_pair(p: &QubitPairParams) -> Result<SystemModel, ModelError> {
    if p.noise_wiring.is_empty() {
        return Err(ModelError::EmptyWiring);
    }
    let sz1 = site_operator(Site::One, Axis::Z);
    let sz2 = site_operator(Site::Two, Axis::Z);
    let hop = kron(&pauli::sigma_plus(), &pauli::sigma_minus())
        + kron(&pauli::sigma_minus(), &pauli::sigma_plus());
    let h0 = sz1.mapv(|z| z * c(p.eps1 / 2.0))
        + sz2.mapv(|z| z * c(p.eps2 / 2.0))
        + hop.mapv(|z| z * c(p.j_coupling));
    let couplings = p
        .noise_wiring
        .iter()
        .map(|&(site, axis)| site_operator(site, axis))
        .collect();
    Ok(SystemModel::new(h0, couplings)?)
}

/// The four maximally entangled two-qubit states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];
}

/// Unit-norm Bell state amplitudes in the product basis
/// `{|00>, |01>, |10>, |11>}`.
pub fn bell_state(kind: BellKind) -> CVec {
    let r = c(std::f64::consts::FRAC_1_SQRT_2);
    match kind {
        BellKind::PhiPlus => array![r, c(0.0), c(0.0), r],
        BellKind::PhiMinus => array![r, c(0.0), c(0.0), -r],
        BellKind::PsiPlus => array![c(0.0), r, r, c(0.0)],
        BellKind::PsiMinus => array![c(0.0), r, -r, c(0.0)],
    }
}

/// Rank-1 density matrix of a Bell state.
pub fn bell_density(kind: BellKind) -> DensityMatrix {
    let v = bell_state(kind);
    DensityMatrix::from_pure(&v).expect("Bell states are unit norm")
}

/// Transition dipole operator `mu = mu1 (s+(1) + s-(1)) + mu2 (s+(2) + s-(2))`
/// in the product basis. Couples only states that differ by one excitation.
#[derive(Debug, Clone)]
pub struct DipoleOperator {
    matrix: CMat,
}

impl DipoleOperator {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self, ModelError> {
        let matrix = site_operator(Site::One, Axis::X).mapv(|z| z * c(mu1))
            + site_operator(Site::Two, Axis::X).mapv(|z| z * c(mu2));
        // selection-rule sparsity: entries allowed only where the excitation
        // count changes by exactly one
        for i in 0..4 {
            for j in 0..4 {
                let ni = (i & 1) + (i >> 1);
                let nj = (j & 1) + (j >> 1);
                if (ni as i32 - nj as i32).abs() != 1 && matrix[[i, j]].norm() > 0.0 {
                    return Err(ModelError::SelectionRule(i, j));
                }
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// Reduced single-qubit density matrix, tracing out the other site.
pub fn partial_trace(rho: &CMat, keep: Site) -> CMat {
    let mut out = CMat::zeros((2, 2));
    for a in 0..2 {
        for b in 0..2 {
            for k in 0..2 {
                let (i, j) = match keep {
                    Site::One => (2 * a + k, 2 * b + k),
                    Site::Two => (2 * k + a, 2 * k + b),
                };
                out[[a, b]] += rho[[i, j]];
            }
        }
    }
    out
}

/// Ground-state projector `|00><00|` in the product basis.
pub fn ground_projector() -> CMat {
    let mut m = CMat::zeros((4, 4));
    m[[0, 0]] = c(1.0);
    m
}

pub fn expectation(op: &CMat, bra: &CVec, ket: &CVec) -> Complex64 {
    let mut acc = Complex64::default();
    for i in 0..op.nrows() {
        for j in 0..op.ncols() {
            acc += bra[i].conj() * op[[i, j]] * ket[j];
        }
    }
    acc
}

pub fn basis_vector(dim: usize, k: usize) -> CVec {
    let mut v = Array1::from_elem(dim, Complex64::default());
    v[k] = c(1.0);
    v
}
