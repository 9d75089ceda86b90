//! Multivariate Ornstein-Uhlenbeck noise: analytic moments, spectral-density
//! matrices, and a Monte-Carlo path sampler with correlated Wiener increments.
//!
//! The process is
//!
//! ```text
//! dE(t) = A (mu - E(t)) dt + B dW(t),     <dW_i dW_j> = xi_ij dt
//! ```
//!
//! with drift matrix `A` (all eigenvalues in the right half plane), diffusion
//! matrix `B` and Wiener correlation matrix `xi`. The stationary covariance
//! solves `A sigma + sigma A^T = B xi B^T`, the stationary correlation matrix
//! is `G(tau) = exp(-A tau) sigma` for `tau >= 0`, and its Fourier transform
//! gives the spectral-density matrix
//!
//! ```text
//! J(w) = (1/2pi) (A + iw)^-1  B xi B^T  (A^T - iw)^-1 ,
//! ```
//!
//! which satisfies `J(-w) = J(w)^dagger`. The sampler is the independent
//! Monte-Carlo route against which all of the closed forms are checked.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::TimeGrid;
use crate::linalg::{self, c, CMat, LinalgError};

/// Fraction of the fastest drift timescale an Euler-Maruyama step may take.
pub const STEP_FRACTION: f64 = 0.1;
/// Diagonal jitter allowed when factorizing the Wiener correlation matrix.
pub const CORR_JITTER: f64 = 1e-14;
/// Relative residual allowed on the stationary covariance solve.
pub const LYAPUNOV_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("drift matrix has an eigenvalue with non-positive real part ({0:.3e})")]
    NonStationary(f64),
    #[error("Wiener correlation matrix is not valid: {0}")]
    InvalidCorrelation(String),
    #[error("Wiener correlation matrix is not positive semidefinite within tolerance")]
    FactorizationFailure,
    #[error("Lyapunov solve is numerically singular (relative residual {0:.3e})")]
    IllConditioned(f64),
    #[error("resolvent (A + iw) is numerically singular at w = {0}")]
    SingularResolvent(f64),
    #[error("correlation parameter out of range: |{0}| > 1")]
    DomainError(f64),
    #[error("grid step {step:.3e} exceeds stability bound {bound:.3e}")]
    StepTooLarge { step: f64, bound: f64 },
    #[error("need at least one path")]
    NoPaths,
    #[error("tabulated spectral matrix needs at least two sorted frequencies")]
    InvalidTable,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Multivariate Ornstein-Uhlenbeck process specification.
///
/// Construction validates stationarity of the drift and positive
/// semidefiniteness of the Wiener correlation matrix, so a built process can
/// always be sampled and has a stationary covariance.
#[derive(Debug, Clone)]
pub struct OuProcess {
    drift: Array2<f64>,
    diffusion: Array2<f64>,
    wiener_corr: Array2<f64>,
    mean: Array1<f64>,
    corr_factor: Array2<f64>,
    max_eig_mag: f64,
    min_eig_re: f64,
}

impl OuProcess {
    pub fn new(
        drift: Array2<f64>,
        diffusion: Array2<f64>,
        wiener_corr: Array2<f64>,
        mean: Array1<f64>,
    ) -> Result<Self, NoiseError> {
        let n = drift.nrows();
        if drift.ncols() != n {
            return Err(NoiseError::DimensionMismatch(format!(
                "drift must be square, got {}x{}",
                n,
                drift.ncols()
            )));
        }
        for (name, m) in [("diffusion", &diffusion), ("wiener_corr", &wiener_corr)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(NoiseError::DimensionMismatch(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if mean.len() != n {
            return Err(NoiseError::DimensionMismatch(format!(
                "mean must have length {n}, got {}",
                mean.len()
            )));
        }
        for i in 0..n {
            if (wiener_corr[[i, i]] - 1.0).abs() > 1e-12 {
                return Err(NoiseError::InvalidCorrelation(format!(
                    "diagonal entry ({i},{i}) = {} is not 1",
                    wiener_corr[[i, i]]
                )));
            }
            for j in 0..i {
                if (wiener_corr[[i, j]] - wiener_corr[[j, i]]).abs() > 1e-12 {
                    return Err(NoiseError::InvalidCorrelation(format!(
                        "entries ({i},{j}) and ({j},{i}) are not symmetric"
                    )));
                }
            }
        }
        let mut jittered = wiener_corr.clone();
        for i in 0..n {
            jittered[[i, i]] += CORR_JITTER;
        }
        let corr_factor =
            linalg::cholesky_psd(&jittered, CORR_JITTER).ok_or(NoiseError::FactorizationFailure)?;
        let eigs = linalg::eigvals_real(&drift)?;
        let min_re = eigs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min_re <= 0.0 {
            return Err(NoiseError::NonStationary(min_re));
        }
        let max_mag = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok(Self {
            drift,
            diffusion,
            wiener_corr,
            mean,
            corr_factor,
            max_eig_mag: max_mag,
            min_eig_re: min_re,
        })
    }

    /// Diagonal drift, zero mean: the common multi-channel configuration.
    pub fn diagonal(
        gammas: &[f64],
        diffusion: Array2<f64>,
        wiener_corr: Array2<f64>,
    ) -> Result<Self, NoiseError> {
        let n = gammas.len();
        let drift = Array2::from_diag(&Array1::from(gammas.to_vec()));
        Self::new(drift, diffusion, wiener_corr, Array1::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn drift(&self) -> &Array2<f64> {
        &self.drift
    }

    pub fn diffusion(&self) -> &Array2<f64> {
        &self.diffusion
    }

    pub fn wiener_corr(&self) -> &Array2<f64> {
        &self.wiener_corr
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    /// Slowest drift decay rate, min Re eig(A).
    pub fn min_decay_rate(&self) -> f64 {
        self.min_eig_re
    }

    /// `B xi B^T`, the diffusion-side constant of the Lyapunov equation.
    pub fn noise_intensity(&self) -> Array2<f64> {
        self.diffusion.dot(&self.wiener_corr).dot(&self.diffusion.t())
    }

    /// Stationary covariance from the Lyapunov equation
    /// `A sigma + sigma A^T = B xi B^T`, solved through the eigendecomposition
    /// of the (possibly non-normal) drift matrix.
    pub fn stationary_covariance(&self) -> Result<StationaryCovariance, NoiseError> {
        let n = self.dim();
        let rhs = self.noise_intensity();
        let rhs_scale = linalg::max_abs_real(&rhs);
        if rhs_scale == 0.0 {
            return Ok(StationaryCovariance {
                matrix: Array2::zeros((n, n)),
            });
        }
        let a_c = linalg::to_complex(&self.drift);
        let (lams, v) = linalg::eig(&a_c)?;
        // transform: Lambda Y + Y Lambda = V^-1 C V^-T
        let c_c = linalg::to_complex(&rhs);
        let y1 = linalg::solve(&v, &c_c)?; // V^-1 C
        let ct = linalg::solve(&v, &y1.t().to_owned())?; // V^-1 (V^-1 C)^T
        let mut y = ct.t().to_owned(); // V^-1 C V^-T
        for i in 0..n {
            for j in 0..n {
                let denom = lams[i] + lams[j];
                if denom.norm() < 1e-14 * self.max_eig_mag.max(1.0) {
                    return Err(NoiseError::IllConditioned(f64::INFINITY));
                }
                y[[i, j]] /= denom;
            }
        }
        let sigma_c = v.dot(&y).dot(&v.t());
        let sigma_r = linalg::real_part(&sigma_c);
        // exact symmetrization
        let mut sigma = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                sigma[[i, j]] = 0.5 * (sigma_r[[i, j]] + sigma_r[[j, i]]);
            }
        }
        let residual = &self.drift.dot(&sigma) + &sigma.dot(&self.drift.t()) - &rhs;
        let rel = linalg::max_abs_real(&residual) / rhs_scale;
        if rel > LYAPUNOV_TOL {
            return Err(NoiseError::IllConditioned(rel));
        }
        Ok(StationaryCovariance { matrix: sigma })
    }

    /// Stationary correlation matrix `G(tau) = <E(t) E^T(t - tau)>`:
    /// `exp(-A tau) sigma` for `tau >= 0` and `sigma exp(-A^T |tau|)` for
    /// `tau < 0`, by the regression theorem.
    pub fn correlation_matrix(
        &self,
        sigma: &StationaryCovariance,
        tau: f64,
    ) -> Result<Array2<f64>, NoiseError> {
        if tau >= 0.0 {
            let prop = linalg::expm_real(&self.drift.mapv(|x| -tau * x))?;
            Ok(prop.dot(&sigma.matrix))
        } else {
            let prop = linalg::expm_real(&self.drift.t().mapv(|x| tau * x))?;
            Ok(sigma.matrix.dot(&prop))
        }
    }

    /// Analytic spectral-density matrix of the stationary process.
    pub fn spectral_matrix(&self) -> SpectralMatrix {
        SpectralMatrix {
            form: SpectralForm::AnalyticOu {
                drift: self.drift.clone(),
                intensity: self.noise_intensity(),
            },
        }
    }

    /// Largest allowed Euler-Maruyama step for this drift.
    pub fn max_stable_step(&self) -> f64 {
        STEP_FRACTION / self.max_eig_mag
    }

    /// Draw `n_paths` sample paths on `grid`.
    ///
    /// Each path owns the deterministic substream `(seed, path index)`, so the
    /// ensemble is reproducible for any thread count and any subset of paths.
    pub fn sample_paths(
        &self,
        grid: &TimeGrid,
        n_paths: usize,
        seed: u64,
        options: &SamplerOptions,
    ) -> Result<PathEnsemble, NoiseError> {
        if n_paths == 0 {
            return Err(NoiseError::NoPaths);
        }
        let n = self.dim();
        if let InitialCondition::Fixed(e0) = &options.init {
            if e0.len() != n {
                return Err(NoiseError::DimensionMismatch(format!(
                    "initial condition has length {}, process dimension is {n}",
                    e0.len()
                )));
            }
        }
        let bound = self.max_stable_step();
        let step = grid.max_step();
        if matches!(options.scheme, Scheme::EulerMaruyama) && step > bound {
            return Err(NoiseError::StepTooLarge { step, bound });
        }

        // Stationary initial draws need a factor of the stationary covariance.
        let stat_factor = match options.init {
            InitialCondition::Stationary => {
                let sigma = self.stationary_covariance()?;
                Some(linalg::sqrtm_psd(&sigma.matrix, 1e-10)?)
            }
            InitialCondition::Fixed(_) => None,
        };

        // Exact updates share the one-step propagator and noise factor.
        let exact = match options.scheme {
            Scheme::ExactLinear => {
                let sigma = self.stationary_covariance()?.matrix;
                let mut by_step: Vec<(f64, Array2<f64>, Array2<f64>)> = Vec::new();
                for w in grid.times().windows(2) {
                    let dt = w[1] - w[0];
                    if by_step.iter().any(|(s, _, _)| (s - dt).abs() < 1e-15) {
                        continue;
                    }
                    let prop = linalg::expm_real(&self.drift.mapv(|x| -dt * x))?;
                    let q = &sigma - &prop.dot(&sigma).dot(&prop.t());
                    let factor = linalg::sqrtm_psd(&q, 1e-10)?;
                    by_step.push((dt, prop, factor));
                }
                Some(by_step)
            }
            Scheme::EulerMaruyama => None,
        };

        let diffusion_factor = self.diffusion.dot(&self.corr_factor);
        let paths: Vec<Array2<f64>> = (0..n_paths)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                self.sample_one(
                    grid,
                    &mut rng,
                    options,
                    stat_factor.as_ref(),
                    exact.as_deref(),
                    &diffusion_factor,
                )
            })
            .collect();

        Ok(PathEnsemble {
            grid: grid.clone(),
            paths,
            seed,
            scheme: options.scheme,
        })
    }

    fn sample_one(
        &self,
        grid: &TimeGrid,
        rng: &mut ChaCha12Rng,
        options: &SamplerOptions,
        stat_factor: Option<&Array2<f64>>,
        exact: Option<&[(f64, Array2<f64>, Array2<f64>)]>,
        diffusion_factor: &Array2<f64>,
    ) -> Array2<f64> {
        let n = self.dim();
        let times = grid.times();
        let mut values = Array2::<f64>::zeros((times.len(), n));
        let mut state = match &options.init {
            InitialCondition::Fixed(e0) => e0.clone(),
            InitialCondition::Stationary => {
                let z = draw_normals(rng, n);
                &self.mean + &stat_factor.expect("stationary factor").dot(&z)
            }
        };
        values.row_mut(0).assign(&state);
        for (k, w) in times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            let z = draw_normals(rng, n);
            state = match exact {
                None => {
                    let drift_term = self.drift.dot(&(&self.mean - &state)).mapv(|x| x * dt);
                    let noise_term = diffusion_factor.dot(&z).mapv(|x| x * dt.sqrt());
                    &state + &drift_term + &noise_term
                }
                Some(steps) => {
                    let (_, prop, factor) = steps
                        .iter()
                        .find(|(s, _, _)| (s - dt).abs() < 1e-15)
                        .expect("precomputed step");
                    &self.mean + &prop.dot(&(&state - &self.mean)) + &factor.dot(&z)
                }
            };
            values.row_mut(k + 1).assign(&state);
        }
        values
    }
}

fn draw_normals(rng: &mut ChaCha12Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| StandardNormal.sample(rng)))
}

/// Stationary covariance `sigma` of an [`OuProcess`], symmetric PSD and
/// satisfying the Lyapunov equation to solver tolerance.
#[derive(Debug, Clone)]
pub struct StationaryCovariance {
    matrix: Array2<f64>,
}

impl StationaryCovariance {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

/// Provenance of a spectral-density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralProvenance {
    AnalyticOu,
    Tabulated,
}

/// Matrix-valued spectral density `J(w)`.
#[derive(Debug, Clone)]
pub struct SpectralMatrix {
    form: SpectralForm,
}

#[derive(Debug, Clone)]
enum SpectralForm {
    AnalyticOu {
        drift: Array2<f64>,
        intensity: Array2<f64>,
    },
    Tabulated {
        omegas: Vec<f64>,
        values: Vec<CMat>,
    },
}

impl SpectralMatrix {
    /// Tabulated spectral matrix with linear interpolation between samples.
    /// Frequencies must be strictly increasing and bracket every evaluation.
    pub fn from_samples(omegas: Vec<f64>, values: Vec<CMat>) -> Result<Self, NoiseError> {
        if omegas.len() < 2 || omegas.len() != values.len() {
            return Err(NoiseError::InvalidTable);
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NoiseError::InvalidTable);
        }
        let n = values[0].nrows();
        if values.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return Err(NoiseError::InvalidTable);
        }
        Ok(Self {
            form: SpectralForm::Tabulated { omegas, values },
        })
    }

    pub fn provenance(&self) -> SpectralProvenance {
        match self.form {
            SpectralForm::AnalyticOu { .. } => SpectralProvenance::AnalyticOu,
            SpectralForm::Tabulated { .. } => SpectralProvenance::Tabulated,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            SpectralForm::AnalyticOu { drift, .. } => drift.nrows(),
            SpectralForm::Tabulated { values, .. } => values[0].nrows(),
        }
    }

    /// Evaluate `J(omega)`.
    pub fn eval(&self, omega: f64) -> Result<CMat, NoiseError> {
        match &self.form {
            SpectralForm::AnalyticOu { drift, intensity } => {
                let n = drift.nrows();
                let iw = Complex64::new(0.0, omega);
                let mut left = linalg::to_complex(drift);
                let mut right_t = linalg::to_complex(&drift.t().to_owned());
                for i in 0..n {
                    left[[i, i]] += iw;
                    right_t[[i, i]] -= iw;
                }
                // X = (A + iw)^-1 C
                let x = linalg::solve(&left, &linalg::to_complex(intensity))
                    .map_err(|_| NoiseError::SingularResolvent(omega))?;
                // J = X (A^T - iw)^-1  =>  J^T = (A - iw)^-T ... solve on the transpose
                let jt = linalg::solve(&right_t.t().to_owned(), &x.t().to_owned())
                    .map_err(|_| NoiseError::SingularResolvent(omega))?;
                Ok(jt.t().mapv(|z| z / c(2.0 * std::f64::consts::PI)))
            }
            SpectralForm::Tabulated { omegas, values } => {
                let first = omegas[0];
                let last = omegas[omegas.len() - 1];
                if omega < first || omega > last {
                    return Err(NoiseError::DomainError(omega));
                }
                let idx = match omegas.binary_search_by(|x| x.partial_cmp(&omega).unwrap()) {
                    Ok(i) => return Ok(values[i].clone()),
                    Err(i) => i,
                };
                let (lo, hi) = (idx - 1, idx);
                let t = (omega - omegas[lo]) / (omegas[hi] - omegas[lo]);
                Ok(values[lo].mapv(|z| z * c(1.0 - t)) + values[hi].mapv(|z| z * c(t)))
            }
        }
    }
}

/// Parameters of the two-channel process with drift `diag(gamma1, gamma2)`,
/// diffusion rows `(s11, s12)` and `(s21, s22)`, and Wiener correlation `xi`.
#[derive(Debug, Clone, Copy)]
pub struct TwoModeParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub s11: f64,
    pub s12: f64,
    pub s21: f64,
    pub s22: f64,
    pub xi: f64,
}

/// Closed-form 2x2 spectral matrix of the two-channel process.
///
/// The diagonal numerators carry the full Ito-isometry cross terms
/// (`s11^2 + s12^2 + 2 xi s11 s12` and the 2<->1 mirror image), consistent
/// with the stationary covariances of the same process.
pub fn two_mode_spectral_matrix(p: &TwoModeParams, omega: f64) -> Result<CMat, NoiseError> {
    if p.xi.abs() > 1.0 {
        return Err(NoiseError::DomainError(p.xi));
    }
    if p.gamma1 <= 0.0 || p.gamma2 <= 0.0 {
        return Err(NoiseError::NonStationary(p.gamma1.min(p.gamma2)));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let n11 = p.s11 * p.s11 + p.s12 * p.s12 + 2.0 * p.xi * p.s11 * p.s12;
    let n22 = p.s21 * p.s21 + p.s22 * p.s22 + 2.0 * p.xi * p.s21 * p.s22;
    let ncross = p.s11 * p.s21 + p.s12 * p.s22 + p.xi * (p.s11 * p.s22 + p.s12 * p.s21);
    let d1p = Complex64::new(p.gamma1, omega); // gamma1 + i w
    let d1m = Complex64::new(p.gamma1, -omega);
    let d2p = Complex64::new(p.gamma2, omega);
    let d2m = Complex64::new(p.gamma2, -omega);
    let mut j = CMat::zeros((2, 2));
    j[[0, 0]] = c(n11 / (p.gamma1 * p.gamma1 + omega * omega));
    j[[1, 1]] = c(n22 / (p.gamma2 * p.gamma2 + omega * omega));
    j[[0, 1]] = c(ncross) / (d1p * d2m);
    j[[1, 0]] = c(ncross) / (d1m * d2p);
    Ok(j.mapv(|z| z / c(two_pi)))
}

/// Effective variance parameter of a single process driven by two correlated
/// Wiener increments, `Var[s1 dW1 + s2 dW2] = (s1^2 + 2 xi s1 s2 + s2^2) dt`.
/// The factor 2 on the cross term is forced by the Ito isometry.
pub fn effective_sigma_squared(sigma1: f64, sigma2: f64, xi: f64) -> Result<f64, NoiseError> {
    if xi.abs() > 1.0 {
        return Err(NoiseError::DomainError(xi));
    }
    Ok(sigma1 * sigma1 + 2.0 * xi * sigma1 * sigma2 + sigma2 * sigma2)
}

/// Equicorrelation matrix: ones on the diagonal, `xi` everywhere else.
pub fn equicorrelation(n: usize, xi: f64) -> Result<Array2<f64>, NoiseError> {
    if xi.abs() > 1.0 {
        return Err(NoiseError::DomainError(xi));
    }
    let mut m = Array2::from_elem((n, n), xi);
    for i in 0..n {
        m[[i, i]] = 1.0;
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// Draw the initial value from the stationary distribution (default), so
    /// finite-window statistics match the stationary closed forms.
    Stationary,
    /// Start every path at a fixed value (transient tests).
    Fixed(Array1<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Euler-Maruyama with correlated increments `B L z sqrt(dt)`.
    EulerMaruyama,
    /// Exact one-step transition of the linear process; no step-size bias.
    ExactLinear,
}

#[derive(Debug, Clone)]
pub struct SamplerOptions {
    pub init: InitialCondition,
    pub scheme: Scheme,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            init: InitialCondition::Stationary,
            scheme: Scheme::EulerMaruyama,
        }
    }
}

/// A bundle of sampled paths on a common grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    /// One `(n_times, n_channels)` block per path.
    paths: Vec<Array2<f64>>,
    seed: u64,
    scheme: Scheme,
}

impl PathEnsemble {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn paths(&self) -> &[Array2<f64>] {
        &self.paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n_channels(&self) -> usize {
        self.paths[0].ncols()
    }

    /// Index of the grid point closest to `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let times = self.grid.times();
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, &tk) in times.iter().enumerate() {
            let d = (tk - t).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    /// Empirical covariance `Cov[E_i(t_a), E_j(t_b)]` over paths.
    pub fn empirical_covariance(&self, i: usize, j: usize, idx_a: usize, idx_b: usize) -> f64 {
        let n = self.paths.len() as f64;
        let mut ma = 0.0;
        let mut mb = 0.0;
        for p in &self.paths {
            ma += p[[idx_a, i]];
            mb += p[[idx_b, j]];
        }
        ma /= n;
        mb /= n;
        let mut acc = 0.0;
        for p in &self.paths {
            acc += (p[[idx_a, i]] - ma) * (p[[idx_b, j]] - mb);
        }
        acc / (n - 1.0)
    }
}
