//! Cross-run comparison: tabulate linewidths, purity half-lives and
//! long-time fidelities across the correlation sweeps of one or more
//! manifests.

use std::path::{Path, PathBuf};

use thiserror::Error;

use ouqsim::export::fmt_f64;
use ouqsim::observables::{half_life, ScalarSeries};

use crate::runner::{parse_manifest, RunManifest};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("no manifests given")]
    NoInputs,
    #[error("manifest {path}: grid does not match {reference}")]
    GridMismatch { path: PathBuf, reference: PathBuf },
    #[error("manifest {path}: {message}")]
    BadManifest { path: PathBuf, message: String },
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, CompareError> {
    std::fs::read(path).map_err(|source| CompareError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_manifest(path: &Path) -> Result<RunManifest, CompareError> {
    let bytes = read(path)?;
    parse_manifest(&bytes).map_err(|e| CompareError::BadManifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_series_csv(body: &str) -> Option<ScalarSeries> {
    let mut lines = body.lines();
    let header = lines.next()?;
    let label = header.split(',').nth(1)?.to_string();
    let mut times = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let mut cols = line.split(',');
        times.push(cols.next()?.parse().ok()?);
        values.push(cols.next()?.parse().ok()?);
    }
    Some(ScalarSeries {
        times,
        values,
        label,
    })
}

/// Fields of one summary row.
struct Row {
    source: String,
    xi: f64,
    fwhm: Option<f64>,
    purity_half_life: Option<f64>,
    fidelity_final: Option<f64>,
}

/// Build the summary table (CSV) for a set of manifests sharing grid specs.
pub fn compare(manifest_paths: &[PathBuf]) -> Result<String, CompareError> {
    if manifest_paths.is_empty() {
        return Err(CompareError::NoInputs);
    }
    let mut rows = Vec::new();
    let mut reference: Option<(&PathBuf, RunManifest)> = None;
    for path in manifest_paths {
        let manifest = load_manifest(path)?;
        if let Some((ref_path, ref_manifest)) = &reference {
            if manifest.grid != ref_manifest.grid {
                return Err(CompareError::GridMismatch {
                    path: path.clone(),
                    reference: (*ref_path).clone(),
                });
            }
        } else {
            reference = Some((path, manifest.clone()));
        }
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        for run in &manifest.runs {
            let mut row = Row {
                source: path.display().to_string(),
                xi: run.xi,
                fwhm: None,
                purity_half_life: None,
                fidelity_final: None,
            };
            for output in &run.outputs {
                let file = dir.join(&output.file);
                match output.metric.as_str() {
                    "spectrum" if output.file.ends_with(".meta.json") => {
                        let bytes = read(&file)?;
                        let meta: serde_json::Value =
                            serde_json::from_slice(&bytes).map_err(|e| {
                                CompareError::BadManifest {
                                    path: file.clone(),
                                    message: e.to_string(),
                                }
                            })?;
                        row.fwhm = meta.get("fwhm").and_then(|v| v.as_f64());
                    }
                    "purity" => {
                        let body = String::from_utf8_lossy(&read(&file)?).into_owned();
                        if let Some(series) = parse_series_csv(&body) {
                            let floor = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
                            row.purity_half_life = half_life(&series, floor);
                        }
                    }
                    "fidelity" => {
                        let body = String::from_utf8_lossy(&read(&file)?).into_owned();
                        if let Some(series) = parse_series_csv(&body) {
                            row.fidelity_final = series.values.last().copied();
                        }
                    }
                    _ => {}
                }
            }
            rows.push(row);
        }
    }
    let mut out = String::from("source,xi,fwhm,purity_half_life,fidelity_final\n");
    for row in rows {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.source,
            fmt_f64(row.xi),
            opt(row.fwhm),
            opt(row.purity_half_life),
            opt(row.fidelity_final),
        ));
    }
    Ok(out)
}
