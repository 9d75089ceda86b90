//! Scenario execution: builds the noise -> model -> relaxation -> observable
//! pipeline for every point of the correlation sweep and persists results
//! under a content-addressed directory.
//!
//! Sweep points are independent and fan out across threads; every artifact
//! body is deterministic for a fixed seed, regardless of thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use ouqsim::export;
use ouqsim::linalg::CMat;
use ouqsim::models::{self, DipoleOperator, QubitPairParams};
use ouqsim::observables::{self, Metric, Window};
use ouqsim::redfield::{self, DensityMatrix};
use ouqsim::stochastic::{equicorrelation, OuProcess, SamplerOptions};
use ouqsim::TimeGrid;

use crate::scenario::{
    parse_scenario, OutputMetric, Scenario, ScenarioError, SystemSpec,
};

pub const MANIFEST_NAME: &str = "manifest.json";
/// Default output root when neither `--out` nor `OUQSIM_OUT` is given.
pub const OUT_ROOT_ENV: &str = "OUQSIM_OUT";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Schema(#[from] ScenarioError),
    #[error("sweep point xi = {xi} failed: {message}")]
    Numerical { xi: f64, message: String },
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output root; the run writes into `<root>/<scenario-hash>/`.
    pub out_root: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestGrid {
    pub t_max: f64,
    pub n_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_omega: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestOutput {
    pub metric: String,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XiRun {
    pub xi: f64,
    pub outputs: Vec<ManifestOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity_watermark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hermiticity_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub used_fallback: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XiFailure {
    pub xi: f64,
    pub message: String,
}

/// Record of one completed (or partially completed) run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub secular: bool,
    pub temperature: f64,
    pub grid: ManifestGrid,
    pub timing_ms: u64,
    pub runs: Vec<XiRun>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<XiFailure>,
}

/// Parse a manifest document.
pub fn parse_manifest(bytes: &[u8]) -> Result<RunManifest, serde_json::Error> {
    serde_json::from_slice(bytes)
}

fn file_label(metric: &OutputMetric) -> String {
    metric.label().replace(':', "_")
}

struct FileBlob {
    metric: String,
    name: String,
    body: String,
}

struct XiArtifacts {
    run: XiRun,
    blobs: Vec<FileBlob>,
}

/// Execute a scenario document. Returns the manifest and the directory it
/// was written to. On sweep-point failure every successful point's files
/// are still written and the manifest records the failure before the error
/// is returned.
pub fn run(text: &str, options: &RunOptions) -> Result<(RunManifest, PathBuf), RunError> {
    let started = Instant::now();
    let mut scenario = parse_scenario(text)?;
    if let Some(seed) = options.seed_override {
        scenario.seed = seed;
    }
    let tool_version = env!("CARGO_PKG_VERSION").to_string();
    let scenario_hash = {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        h.update(scenario.seed.to_le_bytes());
        h.update(tool_version.as_bytes());
        hex_digest(&h.finalize()[..])
    };
    let out_root = options
        .out_root
        .clone()
        .or_else(|| std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let dir = out_root.join(&scenario_hash[..12]);
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;

    let worker = || -> Vec<(f64, Result<XiArtifacts, String>)> {
        scenario
            .xi_sweep
            .par_iter()
            .enumerate()
            .map(|(idx, &xi)| (xi, run_point(&scenario, idx, xi).map_err(|e| e.to_string())))
            .collect()
    };
    let results = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(worker),
        None => worker(),
    };

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (xi, result) in results {
        match result {
            Ok(artifacts) => {
                for blob in &artifacts.blobs {
                    let path = dir.join(&blob.name);
                    std::fs::write(&path, &blob.body)
                        .map_err(|source| RunError::Io { path, source })?;
                }
                runs.push(artifacts.run);
            }
            Err(message) => failures.push(XiFailure { xi, message }),
        }
    }

    let manifest = RunManifest {
        tool_version,
        scenario_hash,
        seed: scenario.seed,
        secular: scenario.secular,
        temperature: scenario.temperature,
        grid: ManifestGrid {
            t_max: scenario.grid.t_max,
            n_steps: scenario.grid.n_steps,
            omega_min: scenario.grid.omega.as_ref().map(|o| o.min),
            omega_max: scenario.grid.omega.as_ref().map(|o| o.max),
            n_omega: scenario.grid.omega.as_ref().map(|o| o.n),
        },
        timing_ms: started.elapsed().as_millis() as u64,
        runs,
        failures: failures.clone(),
    };
    let manifest_path = dir.join(MANIFEST_NAME);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, body).map_err(|source| RunError::Io {
        path: manifest_path,
        source,
    })?;

    if let Some(first) = failures.first() {
        return Err(RunError::Numerical {
            xi: first.xi,
            message: first.message.clone(),
        });
    }
    Ok((manifest, dir))
}

fn run_point(scenario: &Scenario, idx: usize, xi: f64) -> Result<XiArtifacts, String> {
    let n = scenario.wiring.len();
    let corr = equicorrelation(n, xi).map_err(|e| e.to_string())?;
    let process = OuProcess::new(
        scenario.noise.drift.clone(),
        scenario.noise.diffusion.clone(),
        corr,
        scenario.noise.mean.clone(),
    )
    .map_err(|e| e.to_string())?;

    let model = match scenario.system {
        SystemSpec::SingleQubit { eps } => {
            let axes: Vec<_> = scenario.wiring.iter().map(|&(_, axis)| axis).collect();
            models::single_qubit(eps, &axes).map_err(|e| e.to_string())?
        }
        SystemSpec::QubitPair {
            eps1,
            eps2,
            j_coupling,
        } => models::qubit_pair(&QubitPairParams {
            eps1,
            eps2,
            j_coupling,
            noise_wiring: scenario.wiring.clone(),
        })
        .map_err(|e| e.to_string())?,
    };

    let tensor = redfield::build_tensor(&model, &process.spectral_matrix())
        .map_err(|e| e.to_string())?;
    let tensor = if scenario.secular {
        tensor.secular_filter()
    } else {
        tensor
    };
    let rho_eq =
        redfield::gibbs_state(&model, scenario.temperature).map_err(|e| e.to_string())?;
    let liouv =
        redfield::build_liouvillian(&model, &tensor, &rho_eq).map_err(|e| e.to_string())?;
    let grid =
        TimeGrid::uniform(scenario.grid.t_max, scenario.grid.n_steps).map_err(|e| e.to_string())?;

    // propagate once if any series metric is requested
    let needs_trajectory = scenario.metrics.iter().any(|m| m.needs_initial_state());
    let trajectory = if needs_trajectory {
        let bell = scenario.initial_state.expect("validated");
        let rho0_prod = models::bell_density(bell);
        let rho0 = DensityMatrix::new(model.operator_to_eigenbasis(rho0_prod.matrix()))
            .map_err(|e| e.to_string())?;
        Some(liouv.propagate(&rho0, &grid).map_err(|e| e.to_string())?)
    } else {
        None
    };

    let tag = format!("xi{idx:03}");
    let mut blobs = Vec::new();
    let mut outputs = Vec::new();
    let mut push = |blobs: &mut Vec<FileBlob>,
                    outputs: &mut Vec<ManifestOutput>,
                    metric: String,
                    name: String,
                    body: String| {
        outputs.push(ManifestOutput {
            metric: metric.clone(),
            file: name.clone(),
        });
        blobs.push(FileBlob {
            metric,
            name,
            body,
        });
    };

    for metric in &scenario.metrics {
        let label = metric.label();
        let stem = format!("{tag}_{}", file_label(metric));
        match metric {
            OutputMetric::Purity | OutputMetric::Fidelity | OutputMetric::Population(_) => {
                let traj = trajectory.as_ref().expect("validated");
                let m = match metric {
                    OutputMetric::Purity => Metric::Purity,
                    OutputMetric::Fidelity => Metric::Fidelity,
                    OutputMetric::Population(k) => Metric::Population(*k),
                    _ => unreachable!(),
                };
                let series = observables::series_from_trajectory(traj, m, None)
                    .map_err(|e| e.to_string())?;
                push(
                    &mut blobs,
                    &mut outputs,
                    label,
                    format!("{stem}.csv"),
                    export::series_csv(&series),
                );
            }
            OutputMetric::Trajectory => {
                let traj = trajectory.as_ref().expect("validated");
                // export in the product basis
                let states: Vec<CMat> = traj
                    .states()
                    .iter()
                    .map(|s| model.operator_from_eigenbasis(s))
                    .collect();
                push(
                    &mut blobs,
                    &mut outputs,
                    label.clone(),
                    format!("{stem}.csv"),
                    export::trajectory_csv(traj.times(), &states),
                );
                let meta = serde_json::json!({
                    "xi": xi,
                    "secular": scenario.secular,
                    "temperature": scenario.temperature,
                    "positivity_watermark": traj.metadata().positivity_watermark,
                    "hermiticity_deviation": traj.metadata().hermiticity_deviation,
                    "trace_deviation": traj.metadata().trace_deviation,
                    "used_fallback": traj.metadata().used_fallback,
                    "basis": "product",
                });
                push(
                    &mut blobs,
                    &mut outputs,
                    label,
                    format!("{stem}.meta.json"),
                    serde_json::to_string_pretty(&meta).expect("json"),
                );
            }
            OutputMetric::Spectrum => {
                let omega = scenario.grid.omega.as_ref().expect("validated");
                let mu_prod = match scenario.system {
                    SystemSpec::SingleQubit { .. } => models::pauli::sigma_x(),
                    SystemSpec::QubitPair { .. } => DipoleOperator::new(1.0, 1.0)
                        .map_err(|e| e.to_string())?
                        .matrix()
                        .clone(),
                };
                let mu = model.operator_to_eigenbasis(&mu_prod);
                let spectrum = observables::absorption_spectrum(
                    &liouv,
                    &mu,
                    rho_eq.matrix(),
                    &grid,
                    &omega.values(),
                    Window::default(),
                )
                .map_err(|e| e.to_string())?;
                push(
                    &mut blobs,
                    &mut outputs,
                    label.clone(),
                    format!("{stem}.csv"),
                    export::spectrum_csv(&spectrum),
                );
                push(
                    &mut blobs,
                    &mut outputs,
                    label,
                    format!("{stem}.meta.json"),
                    serde_json::to_string_pretty(&export::spectrum_meta(&spectrum))
                        .expect("json"),
                );
            }
            OutputMetric::Paths => {
                // decouple sweep points without correlating their streams
                let seed = scenario.seed.wrapping_add(1_000_003u64.wrapping_mul(idx as u64));
                let sample_grid = sampling_grid(&process, &grid).map_err(|e| e.to_string())?;
                let ensemble = process
                    .sample_paths(
                        &sample_grid,
                        scenario.n_paths,
                        seed,
                        &SamplerOptions::default(),
                    )
                    .map_err(|e| e.to_string())?;
                push(
                    &mut blobs,
                    &mut outputs,
                    label.clone(),
                    format!("{stem}.csv"),
                    export::paths_csv(&ensemble),
                );
                push(
                    &mut blobs,
                    &mut outputs,
                    label,
                    format!("{stem}.meta.json"),
                    serde_json::to_string_pretty(&export::paths_envelope(&process, &ensemble))
                        .expect("json"),
                );
            }
        }
    }

    let run = XiRun {
        xi,
        outputs,
        positivity_watermark: trajectory
            .as_ref()
            .map(|t| t.metadata().positivity_watermark),
        hermiticity_deviation: trajectory
            .as_ref()
            .map(|t| t.metadata().hermiticity_deviation),
        trace_deviation: trajectory.as_ref().map(|t| t.metadata().trace_deviation),
        used_fallback: trajectory.as_ref().map(|t| t.metadata().used_fallback),
    };
    Ok(XiArtifacts { run, blobs })
}

/// The scenario time grid may be coarser than the sampler's stability bound
/// allows; refine it by an integer factor when needed.
fn sampling_grid(process: &OuProcess, grid: &TimeGrid) -> Result<TimeGrid, String> {
    let bound = process.max_stable_step();
    let step = grid.max_step();
    if step <= bound {
        return Ok(grid.clone());
    }
    let factor = (step / bound).ceil() as usize;
    let times = grid.times();
    let t_max = *times.last().unwrap();
    let n = (times.len() - 1) * factor;
    TimeGrid::uniform(t_max, n).map_err(|e| e.to_string())
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Read a scenario file and run it.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<(RunManifest, PathBuf), RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    run(&text, options)
}
