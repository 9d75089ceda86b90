//! Bloch-Redfield relaxation: tensor assembly from a system model and a
//! spectral-density matrix, the secular filter, the vectorized Liouvillian,
//! and propagation of the reduced density matrix.
//!
//! In the eigenbasis of the system Hamiltonian the equation of motion is
//!
//! ```text
//! d/dt rho_{a a'} = -i (w_a - w_a') rho_{a a'}
//!                   - sum_{b b'} R[a a'; b b'] (rho_{b b'} - rho_eq_{b b'})
//! ```
//!
//! with the tensor contracted exactly in this index order. The spectral
//! input to the tensor is the half-sided Fourier transform of the noise
//! autocorrelation, `(1/2) Int exp(-i w tau) G(tau) d tau`; with this
//! convention the secular dephasing and relaxation rates reproduce the exact
//! stochastic (cumulant / golden-rule) rates of the underlying noise, which
//! the test suite checks against a brute-force path average.

use std::sync::OnceLock;

use ndarray::{Array1, Array4};
use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{GridError, TimeGrid};
use crate::linalg::{self, c, CMat, CVec, LinalgError};
use crate::stochastic::{NoiseError, SpectralMatrix};

/// Hermiticity tolerance on model inputs and densities.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue a valid density matrix may carry.
pub const DENSITY_EIG_TOL: f64 = 1e-10;
/// Relative eigendecomposition reconstruction error beyond which the
/// generator counts as defective and propagation falls back to adaptive
/// stepping.
pub const DEFECTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RedfieldError {
    #[error("{what} is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },
    #[error("coupling operator count {couplings} does not match spectral dimension {spectral}")]
    DimensionMismatch { couplings: usize, spectral: usize },
    #[error("operator dimension {got} does not match system dimension {expect}")]
    BasisMismatch { expect: usize, got: usize },
    #[error("eigenbasis cache fails to reproduce the Hamiltonian (deviation {0:.3e})")]
    EigenCache(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("temperature must be non-negative, got {0}")]
    NegativeTemperature(f64),
    #[error("propagation grid must start at t = 0, got {0}")]
    GridNotFromZero(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Spectral(#[from] NoiseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// System Hamiltonian, coupling operators and the cached eigenbasis.
///
/// Couplings are ordered by noise channel: `couplings[k]` multiplies the
/// k-th component of the noise process.
#[derive(Debug, Clone)]
pub struct SystemModel {
    hamiltonian: CMat,
    couplings: Vec<CMat>,
    eigenvalues: Array1<f64>,
    eigenvectors: CMat,
    couplings_eigen: Vec<CMat>,
}

impl SystemModel {
    pub fn new(hamiltonian: CMat, couplings: Vec<CMat>) -> Result<Self, RedfieldError> {
        let d = hamiltonian.nrows();
        let scale = linalg::max_abs(&hamiltonian).max(1.0);
        let dev = linalg::hermiticity_deviation(&hamiltonian);
        if dev > HERMITICITY_TOL * scale {
            return Err(RedfieldError::NotHermitian {
                what: "Hamiltonian",
                deviation: dev,
            });
        }
        for a in &couplings {
            if a.nrows() != d || a.ncols() != d {
                return Err(RedfieldError::BasisMismatch {
                    expect: d,
                    got: a.nrows(),
                });
            }
            let dev = linalg::hermiticity_deviation(a);
            if dev > HERMITICITY_TOL * linalg::max_abs(a).max(1.0) {
                return Err(RedfieldError::NotHermitian {
                    what: "coupling operator",
                    deviation: dev,
                });
            }
        }
        let (eigenvalues, eigenvectors) = linalg::eigh(&hamiltonian)?;
        // the cache must reassemble the Hamiltonian
        let mut recon = CMat::zeros((d, d));
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    recon[[i, j]] +=
                        eigenvectors[[i, k]] * c(eigenvalues[k]) * eigenvectors[[j, k]].conj();
                }
            }
        }
        let cache_dev = linalg::max_abs(&(&recon - &hamiltonian));
        if cache_dev > 1e-12 * scale.max(1.0) * 10.0 {
            return Err(RedfieldError::EigenCache(cache_dev));
        }
        let u_dag = linalg::dagger(&eigenvectors);
        let couplings_eigen = couplings
            .iter()
            .map(|a| u_dag.dot(a).dot(&eigenvectors))
            .collect();
        Ok(Self {
            hamiltonian,
            couplings,
            eigenvalues,
            eigenvectors,
            couplings_eigen,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.couplings.len()
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    pub fn couplings(&self) -> &[CMat] {
        &self.couplings
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    /// Unitary with eigenvectors as columns, matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    /// Coupling operators rotated into the eigenbasis.
    pub fn couplings_eigen(&self) -> &[CMat] {
        &self.couplings_eigen
    }

    /// `w_a - w_b`.
    pub fn transition_frequency(&self, a: usize, b: usize) -> f64 {
        self.eigenvalues[a] - self.eigenvalues[b]
    }

    /// Rotate an operator from the original basis into the eigenbasis.
    pub fn operator_to_eigenbasis(&self, op: &CMat) -> CMat {
        linalg::dagger(&self.eigenvectors)
            .dot(op)
            .dot(&self.eigenvectors)
    }

    /// Rotate an operator from the eigenbasis back to the original basis.
    pub fn operator_from_eigenbasis(&self, op: &CMat) -> CMat {
        self.eigenvectors
            .dot(op)
            .dot(&linalg::dagger(&self.eigenvectors))
    }
}

/// Validated density matrix: Hermitian, unit trace, eigenvalues above
/// `-DENSITY_EIG_TOL`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    rho: CMat,
}

impl DensityMatrix {
    pub fn new(rho: CMat) -> Result<Self, RedfieldError> {
        let d = rho.nrows();
        if rho.ncols() != d {
            return Err(RedfieldError::InvalidDensity(format!(
                "not square: {d}x{}",
                rho.ncols()
            )));
        }
        let dev = linalg::hermiticity_deviation(&rho);
        if dev > HERMITICITY_TOL {
            return Err(RedfieldError::InvalidDensity(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = linalg::trace(&rho);
        if (tr.re - 1.0).abs() > HERMITICITY_TOL || tr.im.abs() > HERMITICITY_TOL {
            return Err(RedfieldError::InvalidDensity(format!(
                "trace is {tr}, expected 1"
            )));
        }
        let (w, _) = linalg::eigh(&linalg::hermitian_part(&rho))?;
        if w.iter().any(|&x| x < -DENSITY_EIG_TOL) {
            return Err(RedfieldError::InvalidDensity(format!(
                "negative eigenvalue {:.3e}",
                w.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(Self { rho })
    }

    pub fn from_pure(state: &CVec) -> Result<Self, RedfieldError> {
        let norm2: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(RedfieldError::InvalidDensity(format!(
                "state norm^2 is {norm2}, expected 1"
            )));
        }
        let d = state.len();
        let rho = CMat::from_shape_fn((d, d), |(i, j)| state[i] * state[j].conj());
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }
}

/// Gibbs state of the model Hamiltonian at temperature `t` (k_B = 1),
/// expressed in the eigenbasis (diagonal). `t = 0` projects onto the
/// ground manifold.
pub fn gibbs_state(model: &SystemModel, temperature: f64) -> Result<DensityMatrix, RedfieldError> {
    if temperature < 0.0 {
        return Err(RedfieldError::NegativeTemperature(temperature));
    }
    let d = model.dim();
    let w = model.eigenvalues();
    let w0 = w[0];
    let weights: Vec<f64> = if temperature == 0.0 {
        let scale = w.iter().map(|x| x.abs()).fold(1.0, f64::max);
        w.iter()
            .map(|&x| if x - w0 <= 1e-12 * scale { 1.0 } else { 0.0 })
            .collect()
    } else {
        w.iter().map(|&x| (-(x - w0) / temperature).exp()).collect()
    };
    let z: f64 = weights.iter().sum();
    let mut rho = CMat::zeros((d, d));
    for k in 0..d {
        rho[[k, k]] = c(weights[k] / z);
    }
    DensityMatrix::new(rho)
}

/// Rank-4 relaxation tensor `R[a][a'][b][b']` plus its secular mask.
#[derive(Debug, Clone)]
pub struct RedfieldTensor {
    dim: usize,
    elements: Array4<Complex64>,
    secular_mask: Array4<bool>,
    secular_filtered: bool,
}

impl RedfieldTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &Array4<Complex64> {
        &self.elements
    }

    pub fn element(&self, a: usize, ap: usize, b: usize, bp: usize) -> Complex64 {
        self.elements[[a, ap, b, bp]]
    }

    pub fn secular_mask(&self) -> &Array4<bool> {
        &self.secular_mask
    }

    pub fn is_secular_filtered(&self) -> bool {
        self.secular_filtered
    }

    /// Worst-column magnitude of `sum_a R[a a; b b]`: the outflow/inflow
    /// balance of the population block.
    pub fn population_conservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for b in 0..d {
            let mut acc = Complex64::default();
            for a in 0..d {
                acc += self.elements[[a, a, b, b]];
            }
            worst = worst.max(acc.norm());
        }
        worst
    }

    /// Worst deviation from `R[a a'; b b'] = conj(R[a' a; b' b])` over the
    /// full tensor. Exact whenever the cross-spectral densities are real;
    /// channels with distinct decay rates and nonzero cross-coupling leave
    /// an imaginary-part residue on non-secular elements only (see
    /// [`Self::secular_conjugation_residual`]).
    pub fn conjugation_residual(&self) -> f64 {
        self.conjugation_residual_masked(false)
    }

    /// Conjugation deviation restricted to secular elements; exact (to
    /// roundoff) for Hermitian spectral input.
    pub fn secular_conjugation_residual(&self) -> f64 {
        self.conjugation_residual_masked(true)
    }

    fn conjugation_residual_masked(&self, secular_only: bool) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for ap in 0..d {
                for b in 0..d {
                    for bp in 0..d {
                        if secular_only && !self.secular_mask[[a, ap, b, bp]] {
                            continue;
                        }
                        let lhs = self.elements[[a, ap, b, bp]];
                        let rhs = self.elements[[ap, a, bp, b]].conj();
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }

    /// Zero out everything the secular mask excludes. Populations and
    /// coherences decouple in the result.
    pub fn secular_filter(&self) -> RedfieldTensor {
        let mut elements = self.elements.clone();
        for (idx, keep) in self.secular_mask.indexed_iter() {
            if !keep {
                elements[idx] = Complex64::default();
            }
        }
        RedfieldTensor {
            dim: self.dim,
            elements,
            secular_mask: self.secular_mask.clone(),
            secular_filtered: true,
        }
    }
}

/// Assemble a tensor from raw parts (externally computed elements plus a
/// mask). Mainly useful for building coherent-only Liouvillians and for
/// tests; `build_tensor` is the production route.
pub fn tensor_from_parts(
    dim: usize,
    elements: Array4<Complex64>,
    secular_mask: Array4<bool>,
) -> RedfieldTensor {
    RedfieldTensor {
        dim,
        elements,
        secular_mask,
        secular_filtered: false,
    }
}

/// Assemble the relaxation tensor in the eigenbasis of `model` from the
/// spectral-density matrix `j`.
///
/// `j` is evaluated exactly at the frequency arguments of the equation of
/// motion (`w_b - w_g`, `w_a' - w_b'`, `w_b - w_a`, `w_g - w_b'`), using the
/// closed form directly at negative arguments. The half-sided-transform
/// normalization (a factor pi on the two-sided density) is applied here.
pub fn build_tensor(model: &SystemModel, j: &SpectralMatrix) -> Result<RedfieldTensor, RedfieldError> {
    let d = model.dim();
    let n = model.n_channels();
    if n != j.dim() {
        return Err(RedfieldError::DimensionMismatch {
            couplings: n,
            spectral: j.dim(),
        });
    }
    // j_half[i][k] = pi * J(w_i - w_k), an n x n matrix over channel pairs
    let mut j_half: Vec<Vec<CMat>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut row = Vec::with_capacity(d);
        for k in 0..d {
            let m = j.eval(model.transition_frequency(i, k))?;
            row.push(m.mapv(|z| z * c(std::f64::consts::PI)));
        }
        j_half.push(row);
    }
    let ops = model.couplings_eigen();
    // channel vector u(p, q)[k] = (A_k)_{p q}
    let chan = |p: usize, q: usize| -> Vec<Complex64> { ops.iter().map(|a| a[[p, q]]).collect() };
    let bilinear = |m: &CMat, x: &[Complex64], y: &[Complex64]| -> Complex64 {
        let mut acc = Complex64::default();
        for (nn, xv) in x.iter().enumerate() {
            for (mm, yv) in y.iter().enumerate() {
                acc += m[[nn, mm]] * xv * yv;
            }
        }
        acc
    };

    let mut elements = Array4::<Complex64>::default((d, d, d, d));
    let mut secular_mask = Array4::<bool>::default((d, d, d, d));
    for a in 0..d {
        for ap in 0..d {
            for b in 0..d {
                for bp in 0..d {
                    let mut acc = Complex64::default();
                    if ap == bp {
                        for g in 0..d {
                            acc += bilinear(&j_half[b][g], &chan(g, b), &chan(a, g));
                        }
                    }
                    let bracket = &j_half[ap][bp] + &j_half[b][a];
                    acc -= bilinear(&bracket, &chan(bp, ap), &chan(a, b));
                    if a == b {
                        for g in 0..d {
                            acc += bilinear(&j_half[g][bp], &chan(bp, g), &chan(g, ap));
                        }
                    }
                    elements[[a, ap, b, bp]] = acc;
                    secular_mask[[a, ap, b, bp]] = (a == ap && b == bp) || (a == b && ap == bp);
                }
            }
        }
    }
    Ok(RedfieldTensor {
        dim: d,
        elements,
        secular_mask,
        secular_filtered: false,
    })
}

/// Column-stacked index of the matrix entry `(row, col)`.
#[inline]
fn vec_index(d: usize, row: usize, col: usize) -> usize {
    col * d + row
}

pub fn vectorize(m: &CMat) -> CVec {
    let d = m.nrows();
    CVec::from_shape_fn(d * d, |k| m[[k % d, k / d]])
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_shape_fn((d, d), |(i, j)| v[vec_index(d, i, j)])
}

/// Affine generator of the master equation acting on the column-stacked
/// density matrix: `d vec(rho)/dt = M vec(rho) + k`, where `M` carries the
/// coherent term and `-R`, and `k = R vec(rho_eq)`.
#[derive(Debug)]
pub struct Liouvillian {
    dim: usize,
    matrix: CMat,
    drive: CVec,
    equilibrium: CMat,
    eigen: OnceLock<Option<EigenRep>>,
}

#[derive(Debug, Clone)]
struct EigenRep {
    values: CVec,
    vectors: CMat,
    inv_vectors: CMat,
}

/// Build the vectorized Liouvillian from the model frequencies, the tensor
/// and the equilibrium state (given in the eigenbasis).
pub fn build_liouvillian(
    model: &SystemModel,
    tensor: &RedfieldTensor,
    rho_eq: &DensityMatrix,
) -> Result<Liouvillian, RedfieldError> {
    let d = model.dim();
    if tensor.dim() != d {
        return Err(RedfieldError::BasisMismatch {
            expect: d,
            got: tensor.dim(),
        });
    }
    if rho_eq.dim() != d {
        return Err(RedfieldError::BasisMismatch {
            expect: d,
            got: rho_eq.dim(),
        });
    }
    let dd = d * d;
    let mut matrix = CMat::zeros((dd, dd));
    let mut drive = CVec::default(dd);
    for a in 0..d {
        for ap in 0..d {
            let row = vec_index(d, a, ap);
            matrix[[row, row]] += Complex64::new(0.0, -(model.transition_frequency(a, ap)));
            let mut k_acc = Complex64::default();
            for b in 0..d {
                for bp in 0..d {
                    let r = tensor.element(a, ap, b, bp);
                    matrix[[row, vec_index(d, b, bp)]] -= r;
                    k_acc += r * rho_eq.matrix()[[b, bp]];
                }
            }
            drive[row] = k_acc;
        }
    }
    Ok(Liouvillian {
        dim: d,
        matrix,
        drive,
        equilibrium: rho_eq.matrix().clone(),
        eigen: OnceLock::new(),
    })
}

/// Scalar time series attached to a trajectory lives in `observables`; the
/// trajectory itself carries the states (eigenbasis) and propagation
/// diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<CMat>,
    metadata: PropagationMetadata,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationMetadata {
    /// Largest Hermiticity deviation seen before per-step symmetrization.
    pub hermiticity_deviation: f64,
    /// Most negative state eigenvalue along the trajectory (positivity
    /// watermark; Redfield is not completely positive and is never clamped).
    pub positivity_watermark: f64,
    /// Largest |trace - 1| along the trajectory.
    pub trace_deviation: f64,
    /// True when the generator eigendecomposition was judged defective and
    /// the adaptive fallback integrator produced the states.
    pub used_fallback: bool,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[CMat] {
        &self.states
    }

    pub fn metadata(&self) -> &PropagationMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> &CMat {
        &self.states[0]
    }
}

impl Liouvillian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn drive(&self) -> &CVec {
        &self.drive
    }

    pub fn equilibrium(&self) -> &CMat {
        &self.equilibrium
    }

    /// Residual of the trace functional as a left null vector of the
    /// relaxation part: max over columns of |sum_a M[(a,a), col] + trace
    /// coupling of the drive|. Zero (to roundoff) means propagation
    /// preserves the trace exactly.
    pub fn trace_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let dd = d * d;
        let mut worst: f64 = 0.0;
        for col in 0..dd {
            let mut acc = Complex64::default();
            for a in 0..d {
                acc += self.matrix[[vec_index(d, a, a), col]];
            }
            worst = worst.max(acc.norm());
        }
        let mut drive_acc = Complex64::default();
        for a in 0..d {
            drive_acc += self.drive[vec_index(d, a, a)];
        }
        worst.max(drive_acc.norm())
    }

    fn eigen_rep(&self) -> &Option<EigenRep> {
        self.eigen.get_or_init(|| {
            let (values, vectors) = match linalg::eig(&self.matrix) {
                Ok(pair) => pair,
                Err(_) => return None,
            };
            let inv_vectors = match linalg::inverse(&vectors) {
                Ok(m) => m,
                Err(_) => return None,
            };
            // defective generators reconstruct poorly
            let mut recon = CMat::zeros(self.matrix.raw_dim());
            for k in 0..values.len() {
                for i in 0..values.len() {
                    for j in 0..values.len() {
                        recon[[i, j]] += vectors[[i, k]] * values[k] * inv_vectors[[k, j]];
                    }
                }
            }
            let scale = linalg::max_abs(&self.matrix).max(1e-300);
            let err = linalg::max_abs(&(&recon - &self.matrix)) / scale;
            if err > DEFECTIVE_TOL {
                return None;
            }
            Some(EigenRep {
                values,
                vectors,
                inv_vectors,
            })
        })
    }

    /// Solution of the affine system at time `t` given the eigen
    /// representation: `x(t) = V (e^{Lt} V^-1 x0 + phi1(L, t) V^-1 k)`.
    fn eigen_solution(&self, rep: &EigenRep, c0: &CVec, kt: &CVec, t: f64) -> CVec {
        let dd = self.dim * self.dim;
        let mut coeff = CVec::default(dd);
        for i in 0..dd {
            let lam = rep.values[i];
            coeff[i] = (lam * c(t)).exp() * c0[i] + linalg::phi1(lam, t) * kt[i];
        }
        rep.vectors.dot(&coeff)
    }

    /// Propagate a density matrix (eigenbasis) over `grid`.
    ///
    /// Exact matrix-exponential stepping through the generator
    /// eigendecomposition; defective generators fall back to adaptive
    /// Runge-Kutta stepping, flagged in the trajectory metadata. States are
    /// symmetrized each step with the deviation logged; positivity is never
    /// clamped, only recorded.
    pub fn propagate(
        &self,
        rho0: &DensityMatrix,
        grid: &TimeGrid,
    ) -> Result<Trajectory, RedfieldError> {
        if rho0.dim() != self.dim {
            return Err(RedfieldError::BasisMismatch {
                expect: self.dim,
                got: rho0.dim(),
            });
        }
        let t0 = grid.times()[0];
        if t0 != 0.0 {
            return Err(RedfieldError::GridNotFromZero(t0));
        }
        let x0 = vectorize(rho0.matrix());
        let raw = self.evolve_vector(&x0, grid, true)?;
        let mut metadata = PropagationMetadata {
            positivity_watermark: f64::INFINITY,
            used_fallback: raw.used_fallback,
            ..Default::default()
        };
        let mut states = Vec::with_capacity(grid.len());
        for x in raw.states {
            let m = unvectorize(&x, self.dim);
            let dev = linalg::hermiticity_deviation(&m);
            metadata.hermiticity_deviation = metadata.hermiticity_deviation.max(dev);
            let sym = linalg::hermitian_part(&m);
            let tr = linalg::trace(&sym);
            metadata.trace_deviation = metadata
                .trace_deviation
                .max((tr - c(1.0)).norm());
            let (w, _) = linalg::eigh(&sym)?;
            metadata.positivity_watermark = metadata.positivity_watermark.min(
                w.iter().cloned().fold(f64::INFINITY, f64::min),
            );
            states.push(sym);
        }
        Ok(Trajectory {
            times: grid.times().to_vec(),
            states,
            metadata,
        })
    }

    /// Homogeneous evolution `exp(M t) seed` of an arbitrary operator, used
    /// for response functions. No drive term, no symmetrization.
    pub fn evolve_operator(
        &self,
        seed: &CMat,
        grid: &TimeGrid,
    ) -> Result<Vec<CMat>, RedfieldError> {
        if seed.nrows() != self.dim || seed.ncols() != self.dim {
            return Err(RedfieldError::BasisMismatch {
                expect: self.dim,
                got: seed.nrows(),
            });
        }
        let x0 = vectorize(seed);
        let raw = self.evolve_vector(&x0, grid, false)?;
        Ok(raw
            .states
            .into_iter()
            .map(|x| unvectorize(&x, self.dim))
            .collect())
    }

    fn evolve_vector(
        &self,
        x0: &CVec,
        grid: &TimeGrid,
        with_drive: bool,
    ) -> Result<RawEvolution, RedfieldError> {
        let zero_drive;
        let drive = if with_drive {
            &self.drive
        } else {
            zero_drive = CVec::default(self.dim * self.dim);
            &zero_drive
        };
        if let Some(rep) = self.eigen_rep() {
            let c0 = rep.inv_vectors.dot(x0);
            let kt = rep.inv_vectors.dot(drive);
            let t0 = grid.times()[0];
            let states = grid
                .times()
                .iter()
                .map(|&t| self.eigen_solution(rep, &c0, &kt, t - t0))
                .collect();
            Ok(RawEvolution {
                states,
                used_fallback: false,
            })
        } else {
            let states = integrate_adaptive(&self.matrix, drive, x0, grid)?;
            Ok(RawEvolution {
                states,
                used_fallback: true,
            })
        }
    }
}

struct RawEvolution {
    states: Vec<CVec>,
    used_fallback: bool,
}

/// Dormand-Prince 5(4) adaptive integrator for `dx/dt = M x + k`,
/// landing exactly on every grid point.
fn integrate_adaptive(
    m: &CMat,
    k: &CVec,
    x0: &CVec,
    grid: &TimeGrid,
) -> Result<Vec<CVec>, RedfieldError> {
    const RTOL: f64 = 1e-10;
    const ATOL: f64 = 1e-12;
    let rhs = |x: &CVec| -> CVec { m.dot(x) + k };
    let mut states = Vec::with_capacity(grid.len());
    let mut x = x0.clone();
    states.push(x.clone());
    let norm_m = linalg::max_abs(m).max(1e-12);
    let mut h = (0.1 / norm_m).min(grid.max_step());
    for w in grid.times().windows(2) {
        let (mut t, t_end) = (w[0], w[1]);
        while t < t_end {
            let step = h.min(t_end - t);
            let (x_new, err_ratio) = dopri5_step(&rhs, &x, step, RTOL, ATOL);
            if err_ratio <= 1.0 {
                t += step;
                x = x_new;
            }
            let factor = (0.9 * err_ratio.powf(-0.2)).clamp(0.2, 5.0);
            h = (step * factor).max(1e-14);
        }
        states.push(x.clone());
    }
    Ok(states)
}

fn dopri5_step(
    rhs: &dyn Fn(&CVec) -> CVec,
    x: &CVec,
    h: f64,
    rtol: f64,
    atol: f64,
) -> (CVec, f64) {
    let ch = |v: &CVec, s: f64| v.mapv(|z| z * c(s));
    let k1 = rhs(x);
    let k2 = rhs(&(x + &ch(&k1, h / 5.0)));
    let k3 = rhs(&(x + &ch(&k1, 3.0 * h / 40.0) + &ch(&k2, 9.0 * h / 40.0)));
    let k4 = rhs(&(x + &ch(&k1, 44.0 * h / 45.0) - &ch(&k2, 56.0 * h / 15.0)
        + &ch(&k3, 32.0 * h / 9.0)));
    let k5 = rhs(&(x + &ch(&k1, 19372.0 * h / 6561.0) - &ch(&k2, 25360.0 * h / 2187.0)
        + &ch(&k3, 64448.0 * h / 6561.0)
        - &ch(&k4, 212.0 * h / 729.0)));
    let k6 = rhs(&(x + &ch(&k1, 9017.0 * h / 3168.0) - &ch(&k2, 355.0 * h / 33.0)
        + &ch(&k3, 46732.0 * h / 5247.0)
        + &ch(&k4, 49.0 * h / 176.0)
        - &ch(&k5, 5103.0 * h / 18656.0)));
    let x5 = x
        + &ch(&k1, 35.0 * h / 384.0)
        + &ch(&k3, 500.0 * h / 1113.0)
        + &ch(&k4, 125.0 * h / 192.0)
        - &ch(&k5, 2187.0 * h / 6784.0)
        + &ch(&k6, 11.0 * h / 84.0);
    let k7 = rhs(&x5);
    let x4 = x
        + &ch(&k1, 5179.0 * h / 57600.0)
        + &ch(&k3, 7571.0 * h / 16695.0)
        + &ch(&k4, 393.0 * h / 640.0)
        - &ch(&k5, 92097.0 * h / 339200.0)
        + &ch(&k6, 187.0 * h / 2100.0)
        + &ch(&k7, h / 40.0);
    let mut err_ratio = 0.0f64;
    for i in 0..x.len() {
        let scale = atol + rtol * x5[i].norm().max(x[i].norm());
        err_ratio = err_ratio.max((x5[i] - x4[i]).norm() / scale);
    }
    (x5, err_ratio.max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, pauli, Axis, BellKind, QubitPairParams, Site};
    use crate::stochastic::{equicorrelation, OuProcess};
    use ndarray::array;
    use std::f64::consts::PI;

    /// Single qubit with x and z noise channels and the diffusion rows
    /// `(s_x, s_xz) / (s_xz, s_z)` of the two-driver configuration.
    fn xz_qubit(
        eps: f64,
        gx: f64,
        gz: f64,
        sx: f64,
        sz: f64,
        sxz: f64,
        xi: f64,
    ) -> (SystemModel, OuProcess) {
        let model = models::single_qubit(eps, &[Axis::X, Axis::Z]).unwrap();
        let process = OuProcess::diagonal(
            &[gx, gz],
            array![[sx, sxz], [sxz, sz]],
            equicorrelation(2, xi).unwrap(),
        )
        .unwrap();
        (model, process)
    }

    fn longitudinal_pair(eps: f64, j: f64, gamma: f64, s: f64, xi: f64) -> (SystemModel, OuProcess) {
        let model = models::qubit_pair(&QubitPairParams {
            eps1: eps,
            eps2: eps,
            j_coupling: j,
            noise_wiring: vec![(Site::One, Axis::Z), (Site::Two, Axis::Z)],
        })
        .unwrap();
        let process = OuProcess::diagonal(
            &[gamma, gamma],
            array![[s, 0.0], [0.0, s]],
            equicorrelation(2, xi).unwrap(),
        )
        .unwrap();
        (model, process)
    }

    #[test]
    fn model_rejects_non_hermitian_inputs() {
        let bad = array![[c(0.0), c(1.0)], [c(0.5), c(0.0)]];
        assert!(matches!(
            SystemModel::new(bad, vec![]),
            Err(RedfieldError::NotHermitian { .. })
        ));
        let h = pauli::sigma_z();
        let bad_coupling = array![[c(0.0), Complex64::new(0.0, 1.0)], [c(0.0), c(0.0)]];
        assert!(SystemModel::new(h, vec![bad_coupling]).is_err());
    }

    #[test]
    fn zero_couplings_give_zero_tensor() {
        let model = SystemModel::new(
            pauli::sigma_z(),
            vec![CMat::zeros((2, 2)), CMat::zeros((2, 2))],
        )
        .unwrap();
        let process = OuProcess::diagonal(
            &[1.0, 2.0],
            array![[1.0, 0.0], [0.0, 1.0]],
            equicorrelation(2, 0.3).unwrap(),
        )
        .unwrap();
        let tensor = build_tensor(&model, &process.spectral_matrix()).unwrap();
        let max = tensor
            .elements()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert_eq!(max, 0.0);
    }

    #[test]
    fn tensor_dimension_mismatch_detected() {
        let model = models::single_qubit(1.0, &[Axis::X]).unwrap();
        let process = OuProcess::diagonal(
            &[1.0, 2.0],
            Array2::eye(2),
            equicorrelation(2, 0.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            build_tensor(&model, &process.spectral_matrix()),
            Err(RedfieldError::DimensionMismatch { .. })
        ));
    }

    use ndarray::Array2;

    #[test]
    fn single_qubit_tensor_matches_functional_forms() {
        // R(gg;gg) = Jxx(-e) + Jxx(e), R(eg;eg) = 2 (Jxx(e) + 2 Jzz(0)),
        // with J the half-sided transform pi * J_two_sided. State 0 is the
        // ground state, 1 the excited state.
        let (eps, gx, gz, sx, sz, sxz, xi) = (1.3, 0.8, 1.9, 0.7, 0.4, 0.2, 0.45);
        let (model, process) = xz_qubit(eps, gx, gz, sx, sz, sxz, xi);
        let tensor = build_tensor(&model, &process.spectral_matrix()).unwrap();
        let j = process.spectral_matrix();
        let jh = |w: f64, n: usize, m: usize| j.eval(w).unwrap()[[n, m]] * c(PI);
        let r_gggg = tensor.element(0, 0, 0, 0);
        let expect = jh(eps, 0, 0) + jh(-eps, 0, 0);
        assert!((r_gggg - expect).norm() < 1e-13);
        // coherence dephasing element, excited-ground coherence
        let r_coh = tensor.element(1, 0, 1, 0);
        let expect_coh = c(2.0) * (jh(eps, 0, 0) + c(2.0) * jh(0.0, 1, 1));
        assert!((r_coh - expect_coh).norm() < 1e-13);
        // population conservation holds to roundoff; conjugation is exact on
        // the secular elements (the non-secular ones inherit the imaginary
        // parts of the cross-spectra, as the closed forms do)
        assert!(tensor.population_conservation_residual() < 1e-14);
        assert!(tensor.secular_conjugation_residual() < 1e-10);
        // with equal channel decay rates every cross-spectrum is real and the
        // full-tensor conjugation symmetry is restored
        let (model_eq, process_eq) = xz_qubit(eps, 0.8, 0.8, sx, sz, sxz, xi);
        let tensor_eq = build_tensor(&model_eq, &process_eq.spectral_matrix()).unwrap();
        assert!(tensor_eq.conjugation_residual() < 1e-10);
        assert!(tensor_eq.population_conservation_residual() < 1e-14);
    }

    #[test]
    fn secular_mask_matches_index_rule() {
        let (model, process) = xz_qubit(1.0, 0.5, 0.9, 0.3, 0.4, 0.1, -0.2);
        let tensor = build_tensor(&model, &process.spectral_matrix()).unwrap();
        // population -> coherence element (a a; b b') with b != b' is excluded
        assert!(!tensor.secular_mask()[[0, 0, 1, 0]]);
        // population -> population element is kept
        assert!(tensor.secular_mask()[[0, 0, 1, 1]]);
        // same-coherence element kept
        assert!(tensor.secular_mask()[[1, 0, 1, 0]]);
        // cross-coherence excluded
        assert!(!tensor.secular_mask()[[1, 0, 0, 1]]);
        let filtered = tensor.secular_filter();
        assert!(filtered.is_secular_filtered());
        assert_eq!(filtered.element(0, 0, 1, 0), Complex64::default());
        assert_eq!(filtered.element(0, 0, 1, 1), tensor.element(0, 0, 1, 1));
        // filtering keeps both invariants
        assert!(filtered.population_conservation_residual() < 1e-14);
        assert!(filtered.conjugation_residual() < 1e-10);
        // an already-diagonal tensor is unchanged
        let twice = filtered.secular_filter();
        let dev = (twice.elements() - filtered.elements())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn cross_spectra_touch_only_non_secular_elements() {
        // zeroing J_xz changes no secular element
        let (model, process) = xz_qubit(1.1, 0.6, 1.4, 0.5, 0.7, 0.25, 0.6);
        let with_cross = build_tensor(&model, &process.spectral_matrix()).unwrap();
        let d = with_cross.dim();
        // secular elements involve only diagonal spectral entries: rebuild
        // with the cross entries of J zeroed and compare them exactly
        let j_full = process.spectral_matrix();
        let freqs: Vec<f64> = {
            let w = model.eigenvalues();
            let mut v = Vec::new();
            for i in 0..d {
                for k in 0..d {
                    v.push(w[i] - w[k]);
                }
            }
            v
        };
        let mut omegas: Vec<f64> = freqs.clone();
        omegas.sort_by(|x, y| x.partial_cmp(y).unwrap());
        omegas.dedup();
        // tabulated copy of J with off-diagonal entries removed, sampled at
        // exactly the needed frequencies (plus endpoints for interpolation)
        let values: Vec<CMat> = omegas
            .iter()
            .map(|&w| {
                let mut m = j_full.eval(w).unwrap();
                m[[0, 1]] = Complex64::default();
                m[[1, 0]] = Complex64::default();
                m
            })
            .collect();
        let j_diag = SpectralMatrix::from_samples(omegas, values).unwrap();
        let diag_tensor = build_tensor(&model, &j_diag).unwrap();
        for a in 0..d {
            for ap in 0..d {
                for b in 0..d {
                    for bp in 0..d {
                        if with_cross.secular_mask()[[a, ap, b, bp]] {
                            let diff = (with_cross.element(a, ap, b, bp)
                                - diag_tensor.element(a, ap, b, bp))
                            .norm();
                            assert!(diff < 1e-13, "secular element ({a}{ap};{b}{bp}) moved");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn liouvillian_fixed_point_and_trace_preservation() {
        let (model, process) = xz_qubit(1.0, 0.7, 1.1, 0.4, 0.3, 0.1, 0.5);
        let tensor = build_tensor(&model, &process.spectral_matrix())
            .unwrap()
            .secular_filter();
        let rho_eq = gibbs_state(&model, 0.4).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        assert!(liouv.trace_preservation_residual() < 1e-13);
        // applying the generator to the equilibrium gives zero
        let x_eq = vectorize(rho_eq.matrix());
        let residual = liouv.matrix().dot(&x_eq) + liouv.drive();
        let max: f64 = residual.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max < 1e-13);
        // and propagation from the equilibrium stays there
        let grid = TimeGrid::uniform(20.0, 50).unwrap();
        let traj = liouv.propagate(&rho_eq, &grid).unwrap();
        for state in traj.states() {
            assert!(linalg::max_abs(&(state - rho_eq.matrix())) < 1e-11);
        }
    }

    #[test]
    fn coherent_only_evolution_is_unitary() {
        let model = models::qubit_pair(&QubitPairParams {
            eps1: 1.0,
            eps2: 1.0,
            j_coupling: -0.2,
            noise_wiring: vec![(Site::One, Axis::Z), (Site::Two, Axis::Z)],
        })
        .unwrap();
        let d = model.dim();
        let elements = Array4::<Complex64>::default((d, d, d, d));
        let mut mask = Array4::<bool>::default((d, d, d, d));
        for idx in mask.indexed_iter_mut() {
            *idx.1 = true;
        }
        let tensor = RedfieldTensor {
            dim: d,
            elements,
            secular_mask: mask,
            secular_filtered: false,
        };
        let rho_eq = gibbs_state(&model, 0.0).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        // a superposition state in the eigenbasis
        let v = CVec::from(vec![c(0.5), c(0.5), c(0.5), c(0.5)]);
        let rho0 = DensityMatrix::from_pure(&v).unwrap();
        let grid = TimeGrid::uniform(30.0, 120).unwrap();
        let traj = liouv.propagate(&rho0, &grid).unwrap();
        for state in traj.states() {
            let purity = state.dot(state).diag().sum().re;
            assert!((purity - 1.0).abs() < 1e-10);
        }
        assert!(traj.metadata().trace_deviation < 1e-11);
        assert!(!traj.metadata().used_fallback);
    }

    #[test]
    fn pure_dephasing_coherence_decay_is_exponential() {
        // z-only noise: |rho_ge(t)| = |rho_ge(0)| exp(-Re R[ge;ge] t)
        let model = models::single_qubit(1.0, &[Axis::Z]).unwrap();
        let process = OuProcess::diagonal(
            &[0.9],
            array![[0.35]],
            equicorrelation(1, 0.0).unwrap(),
        )
        .unwrap();
        let tensor = build_tensor(&model, &process.spectral_matrix())
            .unwrap()
            .secular_filter();
        let rate = tensor.element(1, 0, 1, 0).re;
        assert!(rate > 0.0);
        let rho_eq = gibbs_state(&model, 0.0).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        let plus = CVec::from(vec![
            c(std::f64::consts::FRAC_1_SQRT_2),
            c(std::f64::consts::FRAC_1_SQRT_2),
        ]);
        let rho0 = DensityMatrix::from_pure(&plus).unwrap();
        let horizon = 3.0 / rate;
        let grid = TimeGrid::uniform(horizon, 200).unwrap();
        let traj = liouv.propagate(&rho0, &grid).unwrap();
        for (k, state) in traj.states().iter().enumerate() {
            let t = traj.times()[k];
            let expect = 0.5 * (-rate * t).exp();
            let got = state[[0, 1]].norm();
            assert!(
                (got - expect).abs() <= 1e-6 * expect.max(1e-12),
                "t={t}: got {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn relaxation_reaches_equilibrium_fixed_point() {
        // transverse noise relaxes the pair to the T=0 equilibrium (ground state)
        let model = models::qubit_pair(&QubitPairParams {
            eps1: 1.0,
            eps2: 1.0,
            j_coupling: -0.2,
            noise_wiring: vec![(Site::One, Axis::X), (Site::Two, Axis::X)],
        })
        .unwrap();
        let process = OuProcess::diagonal(
            &[0.3, 0.3],
            array![[0.2, 0.0], [0.0, 0.2]],
            equicorrelation(2, 0.0).unwrap(),
        )
        .unwrap();
        let tensor = build_tensor(&model, &process.spectral_matrix())
            .unwrap()
            .secular_filter();
        let rho_eq = gibbs_state(&model, 0.0).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        let psi = models::bell_density(BellKind::PhiPlus);
        let rho0 = DensityMatrix::new(model.operator_to_eigenbasis(psi.matrix())).unwrap();
        let grid = TimeGrid::uniform(900.0, 900).unwrap();
        let traj = liouv.propagate(&rho0, &grid).unwrap();
        let last = traj.states().last().unwrap();
        assert!(linalg::max_abs(&(last - rho_eq.matrix())) < 1e-6);
        assert!(traj.metadata().trace_deviation < 1e-10);
        // the (rho - rho_eq) form at T = 0 transiently pushes the sparsely
        // fed populations negative; the watermark records it, nothing clamps
        assert!(traj.metadata().positivity_watermark < -1e-6);
        assert!(traj.metadata().positivity_watermark > -0.2);
    }

    #[test]
    fn fallback_integrator_matches_eigen_path() {
        let (model, process) = xz_qubit(1.2, 0.5, 0.8, 0.3, 0.2, 0.05, -0.4);
        let tensor = build_tensor(&model, &process.spectral_matrix())
            .unwrap()
            .secular_filter();
        let rho_eq = gibbs_state(&model, 0.0).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        let plus = CVec::from(vec![
            c(std::f64::consts::FRAC_1_SQRT_2),
            c(std::f64::consts::FRAC_1_SQRT_2),
        ]);
        let rho0 = DensityMatrix::from_pure(&plus).unwrap();
        let grid = TimeGrid::uniform(5.0, 20).unwrap();
        let eigen_traj = liouv.propagate(&rho0, &grid).unwrap();
        let states =
            integrate_adaptive(liouv.matrix(), liouv.drive(), &vectorize(rho0.matrix()), &grid)
                .unwrap();
        for (k, x) in states.iter().enumerate() {
            let m = linalg::hermitian_part(&unvectorize(x, 2));
            assert!(linalg::max_abs(&(&m - &eigen_traj.states()[k])) < 1e-8);
        }
    }

    #[test]
    fn basis_conjugation_leaves_invariant_scalars() {
        // conjugate H0 and couplings by a fixed unitary; purity traces match
        let (model, process) = xz_qubit(1.0, 0.7, 1.3, 0.5, 0.6, 0.2, 0.3);
        // a deterministic unitary from the eigenvectors of a fixed Hermitian matrix
        let seed_h = array![
            [c(0.3), Complex64::new(0.2, -0.6)],
            [Complex64::new(0.2, 0.6), c(-1.1)]
        ];
        let (_, u) = linalg::eigh(&seed_h).unwrap();
        let h2 = u.dot(model.hamiltonian()).dot(&linalg::dagger(&u));
        let coup2: Vec<CMat> = model
            .couplings()
            .iter()
            .map(|a| u.dot(a).dot(&linalg::dagger(&u)))
            .collect();
        let model2 = SystemModel::new(linalg::hermitian_part(&h2), coup2).unwrap();
        let run = |m: &SystemModel| -> Vec<f64> {
            let tensor = build_tensor(m, &process.spectral_matrix())
                .unwrap()
                .secular_filter();
            let rho_eq = gibbs_state(m, 0.0).unwrap();
            let liouv = build_liouvillian(m, &tensor, &rho_eq).unwrap();
            let plus = CVec::from(vec![
                c(std::f64::consts::FRAC_1_SQRT_2),
                c(std::f64::consts::FRAC_1_SQRT_2),
            ]);
            let rho0 = DensityMatrix::from_pure(&plus).unwrap();
            let grid = TimeGrid::uniform(8.0, 40).unwrap();
            liouv
                .propagate(&rho0, &grid)
                .unwrap()
                .states()
                .iter()
                .map(|s| s.dot(s).diag().sum().re)
                .collect()
        };
        let p1 = run(&model);
        let p2 = run(&model2);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn gibbs_state_limits() {
        let model = models::single_qubit(1.0, &[Axis::Z]).unwrap();
        let cold = gibbs_state(&model, 0.0).unwrap();
        assert!((cold.matrix()[[0, 0]].re - 1.0).abs() < 1e-15);
        let hot = gibbs_state(&model, 1e6).unwrap();
        assert!((hot.matrix()[[0, 0]].re - 0.5).abs() < 1e-6);
        assert!(gibbs_state(&model, -0.1).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let ok = CMat::eye(2).mapv(|z| z * c(0.5));
        assert!(DensityMatrix::new(ok).is_ok());
        let bad_trace = CMat::eye(2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let mut neg = CMat::zeros((2, 2));
        neg[[0, 0]] = c(1.5);
        neg[[1, 1]] = c(-0.5);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn vectorization_roundtrip_and_action() {
        let m = array![
            [Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.4)],
            [Complex64::new(0.5, -0.6), Complex64::new(0.7, 0.8)]
        ];
        let v = vectorize(&m);
        assert_eq!(unvectorize(&v, 2), m);
    }

    #[test]
    fn longitudinal_pair_keeps_bell_populations_frozen() {
        // z-z noise moves no population out of |00> or |11>
        let (model, process) = longitudinal_pair(1.0, -0.2, 0.2, 0.05, 0.5);
        let tensor = build_tensor(&model, &process.spectral_matrix())
            .unwrap()
            .secular_filter();
        let rho_eq = gibbs_state(&model, 0.0).unwrap();
        let liouv = build_liouvillian(&model, &tensor, &rho_eq).unwrap();
        let phi = models::bell_density(BellKind::PhiPlus);
        let rho0 = DensityMatrix::new(model.operator_to_eigenbasis(phi.matrix())).unwrap();
        let grid = TimeGrid::uniform(50.0, 100).unwrap();
        let traj = liouv.propagate(&rho0, &grid).unwrap();
        let last = traj.states().last().unwrap();
        assert!((last[[0, 0]].re - 0.5).abs() < 1e-10);
        assert!((last[[3, 3]].re - 0.5).abs() < 1e-10);
        // while the 00-11 coherence decays
        assert!(last[[0, 3]].norm() < rho0.matrix()[[0, 3]].norm());
    }
}
