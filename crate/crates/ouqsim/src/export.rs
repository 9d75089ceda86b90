//! Deterministic CSV/JSON serialization of results.
//!
//! Every float is written with 17 significant digits, so identical inputs
//! produce byte-identical bodies — the property the run manifests promise.

use num_complex::Complex64;
use serde_json::json;

use crate::linalg::CMat;
use crate::observables::{ScalarSeries, Spectrum};
use crate::stochastic::{OuProcess, PathEnsemble, Scheme};

/// Full-precision decimal rendering (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn matrix_json(m: &ndarray::Array2<f64>) -> serde_json::Value {
    json!(m
        .rows()
        .into_iter()
        .map(|r| r.iter().cloned().collect::<Vec<f64>>())
        .collect::<Vec<_>>())
}

/// CSV body of a path ensemble: `path_id, t, E_1..E_n`.
pub fn paths_csv(ensemble: &PathEnsemble) -> String {
    let n = ensemble.n_channels();
    let mut out = String::from("path_id,t");
    for k in 1..=n {
        out.push_str(&format!(",E_{k}"));
    }
    out.push('\n');
    for (pid, path) in ensemble.paths().iter().enumerate() {
        for (k, &t) in ensemble.grid().times().iter().enumerate() {
            out.push_str(&format!("{pid},{}", fmt_f64(t)));
            for ch in 0..n {
                out.push(',');
                out.push_str(&fmt_f64(path[[k, ch]]));
            }
            out.push('\n');
        }
    }
    out
}

/// Self-describing JSON envelope for a path ensemble: process parameters,
/// seed, scheme and grid.
pub fn paths_envelope(process: &OuProcess, ensemble: &PathEnsemble) -> serde_json::Value {
    json!({
        "process": {
            "drift": matrix_json(process.drift()),
            "diffusion": matrix_json(process.diffusion()),
            "wiener_corr": matrix_json(process.wiener_corr()),
            "mean": process.mean().iter().cloned().collect::<Vec<f64>>(),
        },
        "seed": ensemble.seed(),
        "n_paths": ensemble.paths().len(),
        "scheme": match ensemble.scheme() {
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::ExactLinear => "exact_linear",
        },
        "t_first": ensemble.grid().times()[0],
        "t_last": *ensemble.grid().times().last().unwrap(),
        "n_times": ensemble.grid().len(),
    })
}

/// CSV body of a scalar series: `t, value`.
pub fn series_csv(series: &ScalarSeries) -> String {
    let mut out = format!("t,{}\n", series.label);
    for (t, v) in series.times.iter().zip(&series.values) {
        out.push_str(&fmt_f64(*t));
        out.push(',');
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

/// CSV body of a trajectory: `t`, Re/Im of all density-matrix entries in
/// row-major order, then purity.
pub fn trajectory_csv(times: &[f64], states: &[CMat]) -> String {
    let d = states[0].nrows();
    let mut out = String::from("t");
    for i in 0..d {
        for j in 0..d {
            out.push_str(&format!(",rho_{i}{j}_re,rho_{i}{j}_im"));
        }
    }
    out.push_str(",purity\n");
    for (k, &t) in times.iter().enumerate() {
        out.push_str(&fmt_f64(t));
        let s = &states[k];
        for i in 0..d {
            for j in 0..d {
                let z: Complex64 = s[[i, j]];
                out.push(',');
                out.push_str(&fmt_f64(z.re));
                out.push(',');
                out.push_str(&fmt_f64(z.im));
            }
        }
        out.push(',');
        out.push_str(&fmt_f64(crate::observables::purity(s)));
        out.push('\n');
    }
    out
}

/// CSV body of a spectrum: `omega, intensity`.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("omega,intensity\n");
    for (w, s) in spectrum.omegas.iter().zip(&spectrum.intensities) {
        out.push_str(&fmt_f64(*w));
        out.push(',');
        out.push_str(&fmt_f64(*s));
        out.push('\n');
    }
    out
}

/// Spectrum metadata: window rate, dominant FWHM, all peaks.
pub fn spectrum_meta(spectrum: &Spectrum) -> serde_json::Value {
    json!({
        "window_rate": spectrum.window_rate,
        "fwhm": spectrum.fwhm(),
        "peaks": spectrum.peaks.iter().map(|p| json!({
            "position": p.position,
            "height": p.height,
            "fwhm": p.fwhm,
        })).collect::<Vec<_>>(),
    })
}
