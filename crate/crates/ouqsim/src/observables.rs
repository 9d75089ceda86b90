//! Measured quantities: purity, fidelity, linear absorption spectra with
//! linewidths, and scalar time series derived from trajectories.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::TimeGrid;
use crate::linalg::{self, c, CMat};
use crate::redfield::{Liouvillian, RedfieldError, Trajectory};

/// Matrix square-root eigenvalues below this are an error rather than a clip.
pub const PSD_CLIP: f64 = 1e-10;
/// The windowed response must decay below this fraction of its maximum by the
/// end of the grid for a spectrum to count as resolved.
pub const DECAY_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("matrix has eigenvalue {0:.3e} below the PSD clip threshold")]
    NotPsd(f64),
    #[error(
        "response has not decayed below {DECAY_FLOOR:.0e} of its peak by the end of the grid \
         (final fraction {0:.3e})"
    )]
    UnresolvedPeak(f64),
    #[error("fidelity needs a reference state and the trajectory is empty")]
    MissingReference,
    #[error("population index {got} out of range for dimension {dim}")]
    PopulationIndex { got: usize, dim: usize },
    #[error(transparent)]
    Redfield(#[from] RedfieldError),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Purity `tr(rho^2)`; 1 for pure states, `1/d` for the maximally mixed state.
pub fn purity(rho: &CMat) -> f64 {
    rho.dot(rho).diag().sum().re
}

/// Uhlmann fidelity `F(rho, sigma) = (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// Square roots go through Hermitian eigendecompositions; eigenvalues in
/// `[-PSD_CLIP, 0)` are clipped to zero, anything lower is an error.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64, ObservableError> {
    let root = psd_sqrt(rho)?;
    let inner = root.dot(sigma).dot(&root);
    let (w, _) = linalg::eigh(&linalg::hermitian_part(&inner))?;
    let floor = spurious_floor(&w);
    let mut acc = 0.0;
    for &lam in w.iter() {
        if lam < -PSD_CLIP {
            return Err(ObservableError::NotPsd(lam));
        }
        if lam > floor {
            acc += lam.sqrt();
        }
    }
    Ok(acc * acc)
}

/// Eigenvalues below this are roundoff debris of rank-deficient input; the
/// square root would amplify them from ~1e-16 to ~1e-8.
fn spurious_floor(w: &ndarray::Array1<f64>) -> f64 {
    1e-14 * w.iter().cloned().fold(0.0, f64::max).max(0.0)
}

fn psd_sqrt(m: &CMat) -> Result<CMat, ObservableError> {
    let (w, u) = linalg::eigh(&linalg::hermitian_part(m))?;
    let floor = spurious_floor(&w);
    let d = m.nrows();
    let mut root = CMat::zeros((d, d));
    for k in 0..d {
        let lam = w[k];
        if lam < -PSD_CLIP {
            return Err(ObservableError::NotPsd(lam));
        }
        if lam <= floor {
            continue;
        }
        let s = c(lam.sqrt());
        for i in 0..d {
            for j in 0..d {
                root[[i, j]] += u[[i, k]] * s * u[[j, k]].conj();
            }
        }
    }
    Ok(root)
}

/// Apodization applied to the causal response before the half-sided
/// transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    /// No apodization; the caller guarantees periodicity or decay.
    None,
    /// `exp(-eta t)` with `eta` chosen so the window reaches `floor` at the
    /// end of the grid.
    ExponentialFloor { floor: f64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::ExponentialFloor { floor: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    /// Full width at half maximum; `None` when the peak overlaps a neighbour
    /// (the bounding valley sits above half of the smaller peak).
    pub fwhm: Option<f64>,
}

/// One-sided absorption spectrum on a frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub intensities: Vec<f64>,
    /// Local maxima, tallest first.
    pub peaks: Vec<Peak>,
    /// Exponential window rate actually applied (0 for `Window::None`).
    pub window_rate: f64,
}

impl Spectrum {
    pub fn dominant_peak(&self) -> Option<&Peak> {
        self.peaks.first()
    }

    pub fn fwhm(&self) -> Option<f64> {
        self.peaks.first().and_then(|p| p.fwhm)
    }

    pub fn peak_positions(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.position).collect()
    }

    /// Intensity at the grid frequency closest to `omega`.
    pub fn intensity_near(&self, omega: f64) -> f64 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, &w) in self.omegas.iter().enumerate() {
            let d = (w - omega).abs();
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        self.intensities[best]
    }
}

/// Quadrature weights on a time grid: composite Simpson when the grid is
/// uniform with an even interval count, trapezoid otherwise.
pub fn quadrature_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    let dt0 = times[1] - times[0];
    let uniform = times
        .windows(2)
        .all(|p| ((p[1] - p[0]) - dt0).abs() < 1e-12 * dt0.abs());
    if uniform && n >= 3 && (n - 1) % 2 == 0 {
        let h = dt0 / 3.0;
        w[0] = h;
        w[n - 1] = h;
        for (k, item) in w.iter_mut().enumerate().take(n - 1).skip(1) {
            *item = if k % 2 == 1 { 4.0 * h } else { 2.0 * h };
        }
    } else {
        for k in 0..n - 1 {
            let h = 0.5 * (times[k + 1] - times[k]);
            w[k] += h;
            w[k + 1] += h;
        }
    }
    w
}

/// Linear response `r(t) = tr(mu exp(Lt) [mu, rho])` of the system to an
/// impulsive dipole excitation. All operators in the Liouvillian basis.
pub fn response_function(
    liouv: &Liouvillian,
    mu: &CMat,
    rho_init: &CMat,
    grid: &TimeGrid,
) -> Result<Vec<Complex64>, ObservableError> {
    let seed = mu.dot(rho_init) - rho_init.dot(mu);
    let evolved = liouv.evolve_operator(&seed, grid)?;
    Ok(evolved
        .iter()
        .map(|m| linalg::trace(&mu.dot(m)))
        .collect())
}

/// Absorption spectrum `S(w) = |Int_0^T e^{iwt} r(t) win(t) dt|^2`.
///
/// `rho_init` should be the long-time state of the Liouvillian (its fixed
/// point), so the commutator seed evolves homogeneously. With an exponential
/// window the windowed response must decay below [`DECAY_FLOOR`] of its peak
/// by the end of the grid; `Window::None` skips that check (used for
/// noise-free lines on period-matched grids).
pub fn absorption_spectrum(
    liouv: &Liouvillian,
    mu: &CMat,
    rho_init: &CMat,
    grid: &TimeGrid,
    omegas: &[f64],
    window: Window,
) -> Result<Spectrum, ObservableError> {
    let response = response_function(liouv, mu, rho_init, grid)?;
    let times = grid.times();
    let t0 = times[0];
    let span = grid.span();
    let rate = match window {
        Window::None => 0.0,
        Window::ExponentialFloor { floor } => {
            let floor = floor.clamp(1e-300, 1.0);
            -(floor.ln()) / span
        }
    };
    let windowed: Vec<Complex64> = response
        .iter()
        .zip(times)
        .map(|(r, &t)| r * c((-(t - t0) * rate).exp()))
        .collect();
    if matches!(window, Window::ExponentialFloor { .. }) {
        let max = windowed.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let last = windowed.last().map(|z| z.norm()).unwrap_or(0.0);
        if max > 0.0 && last > DECAY_FLOOR * max {
            return Err(ObservableError::UnresolvedPeak(last / max));
        }
    }
    let weights = quadrature_weights(times);
    let intensities: Vec<f64> = omegas
        .par_iter()
        .map(|&omega| {
            let mut acc = Complex64::default();
            for (k, r) in windowed.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, omega * (times[k] - t0));
                acc += r * phase * c(weights[k]);
            }
            acc.norm_sqr()
        })
        .collect();
    let peaks = find_peaks(omegas, &intensities);
    Ok(Spectrum {
        omegas: omegas.to_vec(),
        intensities,
        peaks,
        window_rate: rate,
    })
}

/// Local maxima with half-maximum widths by linear interpolation. A peak
/// whose bounding valley stays above half of the smaller neighbouring peak is
/// reported without a width.
fn find_peaks(omegas: &[f64], s: &[f64]) -> Vec<Peak> {
    let n = s.len();
    if n < 3 {
        return Vec::new();
    }
    let max = s.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    for k in 1..n - 1 {
        if s[k] >= s[k - 1] && s[k] > s[k + 1] && s[k] > 1e-12 * max {
            let half = 0.5 * s[k];
            let left = half_crossing(omegas, s, k, half, true);
            let right = half_crossing(omegas, s, k, half, false);
            let fwhm = match (left, right) {
                (Some(l), Some(r)) => Some(r - l),
                _ => None,
            };
            peaks.push(Peak {
                position: omegas[k],
                height: s[k],
                fwhm,
            });
        }
    }
    peaks.sort_by(|a, b| b.height.partial_cmp(&a.height).unwrap());
    peaks
}

/// Walk from peak index `k` towards lower (left) or higher (right)
/// frequencies until the intensity crosses `half`; `None` if the scan hits a
/// rising valley or the grid edge first.
fn half_crossing(omegas: &[f64], s: &[f64], k: usize, half: f64, left: bool) -> Option<f64> {
    let n = s.len();
    let mut i = k;
    loop {
        let next = if left {
            if i == 0 {
                return None;
            }
            i - 1
        } else {
            if i + 1 >= n {
                return None;
            }
            i + 1
        };
        if s[next] <= half {
            // linear interpolation between i and next
            let (x0, y0, x1, y1) = (omegas[i], s[i], omegas[next], s[next]);
            let t = (half - y0) / (y1 - y0);
            return Some(x0 + t * (x1 - x0));
        }
        if s[next] > s[i] {
            // valley above half: overlapping neighbour
            return None;
        }
        i = next;
    }
}

/// Scalar quantity extracted pointwise from a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Purity,
    /// Fidelity against a reference state; defaults to the initial state of
    /// the trajectory.
    Fidelity,
    /// Population of the k-th basis state of the trajectory's basis.
    Population(usize),
}

#[derive(Debug, Clone)]
pub struct ScalarSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

/// Evaluate a metric along a trajectory. The fidelity reference defaults to
/// the trajectory's initial state, `F(rho_0, rho_t)`.
pub fn series_from_trajectory(
    traj: &Trajectory,
    metric: Metric,
    reference: Option<&CMat>,
) -> Result<ScalarSeries, ObservableError> {
    if traj.is_empty() {
        return Err(ObservableError::MissingReference);
    }
    let (label, values) = match metric {
        Metric::Purity => (
            "purity".to_string(),
            traj.states().iter().map(purity).collect::<Vec<_>>(),
        ),
        Metric::Fidelity => {
            let owned;
            let reference = match reference {
                Some(r) => r,
                None => {
                    owned = traj.initial_state().clone();
                    &owned
                }
            };
            let values = traj
                .states()
                .iter()
                .map(|s| fidelity(reference, s))
                .collect::<Result<Vec<_>, _>>()?;
            ("fidelity".to_string(), values)
        }
        Metric::Population(k) => {
            let dim = traj.initial_state().nrows();
            if k >= dim {
                return Err(ObservableError::PopulationIndex { got: k, dim });
            }
            (
                format!("population:{k}"),
                traj.states().iter().map(|s| s[[k, k]].re).collect(),
            )
        }
    };
    Ok(ScalarSeries {
        times: traj.times().to_vec(),
        values,
        label,
    })
}

/// First time the series decays halfway from its initial value to `floor`,
/// by linear interpolation; `None` if it never does within the series.
pub fn half_life(series: &ScalarSeries, floor: f64) -> Option<f64> {
    let v0 = *series.values.first()?;
    let target = 0.5 * (v0 + floor);
    if (v0 - floor).abs() < 1e-12 {
        return None;
    }
    for k in 1..series.values.len() {
        let (a, b) = (series.values[k - 1], series.values[k]);
        if (a - target) * (b - target) <= 0.0 && a != b {
            let t = (target - a) / (b - a);
            return Some(series.times[k - 1] + t * (series.times[k] - series.times[k - 1]));
        }
    }
    None
}

/// Upper envelope of an oscillating series: rolling maximum over a window of
/// `period` around each sample.
pub fn envelope(series: &ScalarSeries, period: f64) -> ScalarSeries {
    let n = series.times.len();
    let mut values = vec![0.0; n];
    for k in 0..n {
        let t = series.times[k];
        let mut m = f64::NEG_INFINITY;
        for j in 0..n {
            if (series.times[j] - t).abs() <= 0.5 * period {
                m = m.max(series.values[j]);
            }
        }
        values[k] = m;
    }
    ScalarSeries {
        times: series.times.clone(),
        values,
        label: format!("{}:envelope", series.label),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CVec;
    use crate::models::{self, Axis, BellKind};
    use crate::redfield::{self, DensityMatrix, SystemModel};
    use ndarray::Array4;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn diag_density(entries: &[f64]) -> CMat {
        let d = entries.len();
        let mut m = CMat::zeros((d, d));
        for (k, &p) in entries.iter().enumerate() {
            m[[k, k]] = c(p);
        }
        m
    }

    #[test]
    fn purity_reference_values() {
        let pure = models::bell_density(BellKind::PhiPlus);
        assert!((purity(pure.matrix()) - 1.0).abs() < 1e-14);
        let mixed = diag_density(&[0.25, 0.25, 0.25, 0.25]);
        assert!((purity(&mixed) - 0.25).abs() < 1e-14);
        let half = diag_density(&[0.5, 0.5, 0.0, 0.0]);
        assert!((purity(&half) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn purity_matches_eigenvalue_route() {
        // tr(rho^2) = sum of squared eigenvalues, independent evaluation path
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..25 {
            let d = 4;
            let mut m = CMat::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    m[[i, j]] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            let h = linalg::hermitian_part(&m);
            let sq = h.dot(&linalg::dagger(&h));
            let tr = linalg::trace(&sq).re;
            let rho = sq.mapv(|z| z / c(tr));
            let (w, _) = linalg::eigh(&rho).unwrap();
            let via_eigs: f64 = w.iter().map(|x| x * x).sum();
            assert!((purity(&rho) - via_eigs).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_reference_values() {
        let phi = models::bell_density(BellKind::PhiPlus);
        // F(rho, rho) = 1
        assert!((fidelity(phi.matrix(), phi.matrix()).unwrap() - 1.0).abs() < 1e-12);
        // F with the ground projector = |<phi|00>|^2 = 1/2
        let ground = models::ground_projector();
        assert!((fidelity(phi.matrix(), &ground).unwrap() - 0.5).abs() < 1e-12);
        // F(maximally mixed, pure) = 1/4
        let mixed = diag_density(&[0.25, 0.25, 0.25, 0.25]);
        assert!((fidelity(&mixed, &ground).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_pure_overlap() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let d = 4;
            let mut a = CVec::default(d);
            let mut b = CVec::default(d);
            for i in 0..d {
                a[i] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                b[i] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let a = a.mapv(|z| z / c(na));
            let b = b.mapv(|z| z / c(nb));
            let rho = DensityMatrix::from_pure(&a).unwrap();
            let sig = DensityMatrix::from_pure(&b).unwrap();
            let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
            let f1 = fidelity(rho.matrix(), sig.matrix()).unwrap();
            let f2 = fidelity(sig.matrix(), rho.matrix()).unwrap();
            assert!((f1 - overlap.norm_sqr()).abs() < 1e-10);
            assert!((f1 - f2).abs() < 1e-10);
        }
    }

    #[test]
    fn fidelity_rejects_indefinite_input() {
        let bad = diag_density(&[1.5, -0.5]);
        assert!(matches!(
            fidelity(&bad, &bad),
            Err(ObservableError::NotPsd(_))
        ));
    }

    fn coherent_liouvillian(model: &SystemModel) -> redfield::Liouvillian {
        let d = model.dim();
        let elements = Array4::<Complex64>::default((d, d, d, d));
        let mut mask = Array4::<bool>::default((d, d, d, d));
        for v in mask.iter_mut() {
            *v = true;
        }
        let tensor = redfield::tensor_from_parts(d, elements, mask);
        let rho_eq = redfield::gibbs_state(model, 0.0).unwrap();
        redfield::build_liouvillian(model, &tensor, &rho_eq).unwrap()
    }

    #[test]
    fn coherent_response_spectrum_peaks_at_transition() {
        let eps = 1.0;
        let model = models::single_qubit(eps, &[Axis::X]).unwrap();
        let liouv = coherent_liouvillian(&model);
        let mu = model.operator_to_eigenbasis(&models::pauli::sigma_x());
        let rho_init = redfield::gibbs_state(&model, 0.0).unwrap();
        let grid = TimeGrid::uniform(200.0, 4000).unwrap();
        let omegas: Vec<f64> = (0..600).map(|k| 0.5 + 0.0025 * k as f64).collect();
        let spec = absorption_spectrum(
            &liouv,
            &mu,
            rho_init.matrix(),
            &grid,
            &omegas,
            Window::default(),
        )
        .unwrap();
        let peak = spec.dominant_peak().unwrap();
        // the mirror line at -eps pulls the maximum over by O(eta^2 / eps)
        assert!((peak.position - eps).abs() <= 2.5 * 0.0025);
        // window-dominated Lorentzian line: FWHM = 2 eta
        let fwhm = peak.fwhm.unwrap();
        assert!((fwhm - 2.0 * spec.window_rate).abs() < 0.1 * fwhm);
    }

    #[test]
    fn spectrum_parseval_consistency() {
        // total spectral weight = 2 pi * integral |windowed response|^2
        let eps = 1.0;
        let model = models::single_qubit(eps, &[Axis::X]).unwrap();
        let liouv = coherent_liouvillian(&model);
        let mu = model.operator_to_eigenbasis(&models::pauli::sigma_x());
        let rho_init = redfield::gibbs_state(&model, 0.0).unwrap();
        let t_max = 40.0;
        let grid = TimeGrid::uniform(t_max, 8000).unwrap();
        // window floor e^{-eta T} = 1e-8 gives eta ~ 0.46
        let window = Window::default();
        let n_om = 32001usize;
        let om_max = 80.0;
        let omegas: Vec<f64> = (0..n_om)
            .map(|k| -om_max + 2.0 * om_max * k as f64 / (n_om - 1) as f64)
            .collect();
        let spec = absorption_spectrum(&liouv, &mu, rho_init.matrix(), &grid, &omegas, window)
            .unwrap();
        // Simpson over the omega grid
        let wts = quadrature_weights(&omegas);
        let total_spec: f64 = spec
            .intensities
            .iter()
            .zip(&wts)
            .map(|(s, w)| s * w)
            .sum();
        // time-domain side
        let response = response_function(&liouv, &mu, rho_init.matrix(), &grid).unwrap();
        let eta = spec.window_rate;
        let t_wts = quadrature_weights(grid.times());
        let total_time: f64 = response
            .iter()
            .zip(grid.times())
            .zip(&t_wts)
            .map(|((r, &t), w)| (r * c((-eta * t).exp())).norm_sqr() * w)
            .sum();
        let lhs = total_spec / (2.0 * std::f64::consts::PI);
        let rel = (lhs - total_time).abs() / total_time;
        assert!(rel < 1e-6, "Parseval mismatch: {rel:.3e}");
    }

    #[test]
    fn unresolved_response_is_an_error() {
        // undamped response over a short window with a (nearly) flat window
        let model = models::single_qubit(1.0, &[Axis::X]).unwrap();
        let liouv = coherent_liouvillian(&model);
        let mu = model.operator_to_eigenbasis(&models::pauli::sigma_x());
        let rho_init = redfield::gibbs_state(&model, 0.0).unwrap();
        let grid = TimeGrid::uniform(10.0, 200).unwrap();
        let omegas = vec![0.5, 1.0, 1.5];
        let out = absorption_spectrum(
            &liouv,
            &mu,
            rho_init.matrix(),
            &grid,
            &omegas,
            Window::ExponentialFloor { floor: 0.5 },
        );
        assert!(matches!(out, Err(ObservableError::UnresolvedPeak(_))));
        // Window::None skips the check
        assert!(absorption_spectrum(
            &liouv,
            &mu,
            rho_init.matrix(),
            &grid,
            &omegas,
            Window::None
        )
        .is_ok());
    }

    #[test]
    fn series_metrics_and_half_life() {
        let model = models::qubit_pair(&models::QubitPairParams {
            eps1: 1.0,
            eps2: 1.0,
            j_coupling: -0.2,
            noise_wiring: vec![(models::Site::One, Axis::Z), (models::Site::Two, Axis::Z)],
        })
        .unwrap();
        let liouv = coherent_liouvillian(&model);
        // PsiPlus is an eigenstate: purity and fidelity stay 1 under coherent
        // evolution
        let psi = models::bell_density(BellKind::PsiPlus);
        let rho0 = DensityMatrix::new(model.operator_to_eigenbasis(psi.matrix())).unwrap();
        let grid = TimeGrid::uniform(20.0, 100).unwrap();
        let traj = liouv.propagate(&rho0, &grid).unwrap();
        let p = series_from_trajectory(&traj, Metric::Purity, None).unwrap();
        let f = series_from_trajectory(&traj, Metric::Fidelity, None).unwrap();
        for (pv, fv) in p.values.iter().zip(&f.values) {
            assert!((pv - 1.0).abs() < 1e-10);
            assert!((fv - 1.0).abs() < 1e-9);
        }
        assert!(half_life(&p, 0.25).is_none());
        // populations sum to one
        let pops: Vec<ScalarSeries> = (0..4)
            .map(|k| series_from_trajectory(&traj, Metric::Population(k), None).unwrap())
            .collect();
        for k in 0..grid.len() {
            let total: f64 = pops.iter().map(|s| s.values[k]).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        assert!(matches!(
            series_from_trajectory(&traj, Metric::Population(9), None),
            Err(ObservableError::PopulationIndex { .. })
        ));
        // synthetic exponential: half-life against a floor
        let series = ScalarSeries {
            times: (0..=400).map(|k| k as f64 * 0.05).collect(),
            values: (0..=400)
                .map(|k| 0.5 + 0.5 * (-0.3 * k as f64 * 0.05).exp())
                .collect(),
            label: "purity".into(),
        };
        let t_half = half_life(&series, 0.5).unwrap();
        assert!((t_half - std::f64::consts::LN_2 / 0.3).abs() < 0.01);
    }

    #[test]
    fn envelope_tracks_oscillation_maxima() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.02).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|&t| (0.5 + 0.5 * (-0.1 * t).exp()) * (2.0 * t).cos().abs())
            .collect();
        let s = ScalarSeries {
            times,
            values,
            label: "fidelity".into(),
        };
        let env = envelope(&s, std::f64::consts::PI);
        for (k, &t) in s.times.iter().enumerate() {
            let bound = 0.5 + 0.5 * (-0.1 * (t - 2.0)).exp();
            assert!(env.values[k] <= bound + 1e-9);
            assert!(env.values[k] >= s.values[k]);
        }
    }

    #[test]
    fn quadrature_weights_integrate_polynomials() {
        // Simpson path integrates cubics exactly on a uniform grid
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        let w = quadrature_weights(&times);
        let integral: f64 = times
            .iter()
            .zip(&w)
            .map(|(&t, &wk)| wk * (t * t * t - t))
            .sum();
        let t = 2.0f64;
        let exact = t.powi(4) / 4.0 - t * t / 2.0;
        assert!((integral - exact).abs() < 1e-13);
        // non-uniform grid falls back to trapezoid
        let times = vec![0.0, 0.5, 1.5, 2.0];
        let w = quadrature_weights(&times);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_qubit_dark_state_carries_no_weight() {
        // equal energies, equal dipoles: only the symmetric line absorbs
        let model = models::qubit_pair(&models::QubitPairParams {
            eps1: 1.0,
            eps2: 1.0,
            j_coupling: -0.2,
            noise_wiring: vec![(models::Site::One, Axis::Z), (models::Site::Two, Axis::Z)],
        })
        .unwrap();
        let liouv = coherent_liouvillian(&model);
        let mu = model.operator_to_eigenbasis(models::DipoleOperator::new(1.0, 1.0).unwrap().matrix());
        let rho_init = redfield::gibbs_state(&model, 0.0).unwrap();
        // the beat frequency between the bright (0.8) and dark (1.2) lines is
        // 0.4; an integer number of 2 pi / 0.4 periods makes projections exact
        let period = 2.0 * std::f64::consts::PI / 0.4;
        let t_max = 64.0 * period;
        let grid = TimeGrid::uniform(t_max, 40_000).unwrap();
        let omegas = vec![0.8, 1.2];
        let spec = absorption_spectrum(&liouv, &mu, rho_init.matrix(), &grid, &omegas, Window::None)
            .unwrap();
        let bright = spec.intensities[0];
        let dark = spec.intensities[1];
        assert!(dark < 1e-10 * bright, "dark/bright = {:.3e}", dark / bright);
    }
}
