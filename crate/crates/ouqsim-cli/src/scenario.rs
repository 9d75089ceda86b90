//! Scenario documents: a versioned TOML schema describing one simulation
//! sweep. Parsing validates the whole document and reports every violation
//! with its path, not just the first; unknown keys are errors.

use ndarray::{Array1, Array2};
use serde::Deserialize;
use thiserror::Error;

use ouqsim::models::{Axis, BellKind, Site};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario violates the schema ({} problem(s))", .0.len())]
    SchemaViolation(Vec<Violation>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ScenarioError::SchemaViolation(v) => v,
        }
    }
}

/// Which quantities a run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputMetric {
    Purity,
    Fidelity,
    Population(usize),
    Trajectory,
    Spectrum,
    Paths,
}

impl OutputMetric {
    pub fn label(&self) -> String {
        match self {
            OutputMetric::Purity => "purity".into(),
            OutputMetric::Fidelity => "fidelity".into(),
            OutputMetric::Population(k) => format!("population:{k}"),
            OutputMetric::Trajectory => "trajectory".into(),
            OutputMetric::Spectrum => "spectrum".into(),
            OutputMetric::Paths => "paths".into(),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "purity" => Some(Self::Purity),
            "fidelity" => Some(Self::Fidelity),
            "trajectory" => Some(Self::Trajectory),
            "spectrum" => Some(Self::Spectrum),
            "paths" => Some(Self::Paths),
            other => other
                .strip_prefix("population:")
                .and_then(|k| k.parse().ok())
                .map(Self::Population),
        }
    }

    pub fn needs_initial_state(&self) -> bool {
        matches!(
            self,
            Self::Purity | Self::Fidelity | Self::Population(_) | Self::Trajectory
        )
    }
}

#[derive(Debug, Clone)]
pub enum SystemSpec {
    SingleQubit { eps: f64 },
    QubitPair { eps1: f64, eps2: f64, j_coupling: f64 },
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub drift: Array2<f64>,
    pub diffusion: Array2<f64>,
    pub mean: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub t_max: f64,
    pub n_steps: usize,
    pub omega: Option<OmegaGrid>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl OmegaGrid {
    pub fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.n - 1) as f64)
            .collect()
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub secular: bool,
    pub temperature: f64,
    pub system: SystemSpec,
    pub wiring: Vec<(Site, Axis)>,
    pub noise: NoiseSpec,
    pub xi_sweep: Vec<f64>,
    pub initial_state: Option<BellKind>,
    pub grid: GridSpec,
    pub metrics: Vec<OutputMetric>,
    pub n_paths: usize,
}

// Raw deserialization targets; every field optional so that all omissions
// can be reported together.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: Option<i64>,
    seed: Option<i64>,
    secular: Option<bool>,
    temperature: Option<f64>,
    system: Option<RawSystem>,
    wiring: Option<Vec<RawWiring>>,
    noise: Option<RawNoise>,
    xi_sweep: Option<Vec<f64>>,
    initial_state: Option<RawInitialState>,
    grid: Option<RawGrid>,
    outputs: Option<RawOutputs>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    kind: Option<String>,
    eps: Option<f64>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    j_coupling: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWiring {
    site: Option<i64>,
    axis: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    gammas: Option<Vec<f64>>,
    drift: Option<Vec<Vec<f64>>>,
    diffusion: Option<Vec<Vec<f64>>>,
    mean: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialState {
    bell: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    t_max: Option<f64>,
    n_steps: Option<i64>,
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    n_omega: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    metrics: Option<Vec<String>>,
    n_paths: Option<i64>,
}

struct Check {
    violations: Vec<Violation>,
}

impl Check {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn require<T: Copy>(&mut self, value: Option<T>, path: &str) -> Option<T> {
        if value.is_none() {
            self.push(path, "missing required field");
        }
        value
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        ScenarioError::SchemaViolation(vec![Violation {
            path: e
                .span()
                .map(|s| format!("(offset {}..{})", s.start, s.end))
                .unwrap_or_else(|| "(document)".into()),
            message: e.message().to_string(),
        }])
    })?;
    let mut ck = Check {
        violations: Vec::new(),
    };

    match raw.schema_version {
        None => ck.push("schema_version", "missing required field"),
        Some(v) if v as u64 != SCHEMA_VERSION => ck.push(
            "schema_version",
            format!("unsupported version {v}, this tool reads {SCHEMA_VERSION}"),
        ),
        _ => {}
    }

    let seed = match raw.seed {
        Some(s) if s < 0 => {
            ck.push("seed", "must be non-negative");
            0
        }
        Some(s) => s as u64,
        None => 0,
    };
    let secular = raw.secular.unwrap_or(true);
    let temperature = raw.temperature.unwrap_or(0.0);
    if temperature < 0.0 {
        ck.push("temperature", "must be non-negative");
    }

    let system = validate_system(raw.system.as_ref(), &mut ck);
    let wiring = validate_wiring(raw.wiring.as_deref(), &system, &mut ck);
    let n_channels = wiring.as_ref().map(|w| w.len()).unwrap_or(0);
    let noise = validate_noise(raw.noise.as_ref(), n_channels, &mut ck);

    let xi_sweep = match raw.xi_sweep {
        None => {
            ck.push("xi_sweep", "missing required field");
            Vec::new()
        }
        Some(v) if v.is_empty() => {
            ck.push("xi_sweep", "must contain at least one value");
            Vec::new()
        }
        Some(v) => {
            for (k, &xi) in v.iter().enumerate() {
                if !(-1.0..=1.0).contains(&xi) {
                    ck.push(format!("xi_sweep[{k}]"), format!("{xi} is outside [-1, 1]"));
                }
            }
            v
        }
    };

    let initial_state = match raw.initial_state {
        None => None,
        Some(s) => match s.bell.as_deref() {
            None => {
                ck.push("initial_state.bell", "missing required field");
                None
            }
            Some("phi_plus") => Some(BellKind::PhiPlus),
            Some("phi_minus") => Some(BellKind::PhiMinus),
            Some("psi_plus") => Some(BellKind::PsiPlus),
            Some("psi_minus") => Some(BellKind::PsiMinus),
            Some(other) => {
                ck.push(
                    "initial_state.bell",
                    format!("unknown Bell state '{other}' (phi_plus, phi_minus, psi_plus, psi_minus)"),
                );
                None
            }
        },
    };

    let (metrics, n_paths) = validate_outputs(raw.outputs.as_ref(), &mut ck);
    let grid = validate_grid(raw.grid.as_ref(), &metrics, &mut ck);

    if initial_state.is_some() && matches!(system, Some(SystemSpec::SingleQubit { .. })) {
        ck.push(
            "initial_state",
            "Bell states need the qubit_pair system",
        );
    }
    if initial_state.is_none() {
        for m in &metrics {
            if m.needs_initial_state() {
                ck.push(
                    "outputs.metrics",
                    format!("metric '{}' needs an initial_state", m.label()),
                );
            }
        }
    }

    if !ck.violations.is_empty() {
        return Err(ScenarioError::SchemaViolation(ck.violations));
    }
    Ok(Scenario {
        seed,
        secular,
        temperature,
        system: system.expect("validated"),
        wiring: wiring.expect("validated"),
        noise: noise.expect("validated"),
        xi_sweep,
        initial_state,
        grid: grid.expect("validated"),
        metrics,
        n_paths,
    })
}

fn validate_system(raw: Option<&RawSystem>, ck: &mut Check) -> Option<SystemSpec> {
    let raw = match raw {
        None => {
            ck.push("system", "missing required table");
            return None;
        }
        Some(r) => r,
    };
    match raw.kind.as_deref() {
        None => {
            ck.push("system.kind", "missing required field");
            None
        }
        Some("single_qubit") => {
            for (name, v) in [("eps1", raw.eps1), ("eps2", raw.eps2), ("j_coupling", raw.j_coupling)] {
                if v.is_some() {
                    ck.push(format!("system.{name}"), "not a single_qubit field");
                }
            }
            let eps = ck.require(raw.eps, "system.eps")?;
            if eps <= 0.0 {
                ck.push("system.eps", "must be positive");
                return None;
            }
            Some(SystemSpec::SingleQubit { eps })
        }
        Some("qubit_pair") => {
            if raw.eps.is_some() {
                ck.push("system.eps", "not a qubit_pair field (use eps1/eps2)");
            }
            let eps1 = ck.require(raw.eps1, "system.eps1");
            let eps2 = ck.require(raw.eps2, "system.eps2");
            let j = ck.require(raw.j_coupling, "system.j_coupling");
            let (eps1, eps2, j_coupling) = (eps1?, eps2?, j?);
            for (name, v) in [("eps1", eps1), ("eps2", eps2)] {
                if v <= 0.0 {
                    ck.push(format!("system.{name}"), "must be positive");
                }
            }
            Some(SystemSpec::QubitPair {
                eps1,
                eps2,
                j_coupling,
            })
        }
        Some(other) => {
            ck.push(
                "system.kind",
                format!("unknown kind '{other}' (single_qubit, qubit_pair)"),
            );
            None
        }
    }
}

fn validate_wiring(
    raw: Option<&[RawWiring]>,
    system: &Option<SystemSpec>,
    ck: &mut Check,
) -> Option<Vec<(Site, Axis)>> {
    let raw = match raw {
        None => {
            ck.push("wiring", "missing required array of tables");
            return None;
        }
        Some(r) if r.is_empty() => {
            ck.push("wiring", "must list at least one noise channel");
            return None;
        }
        Some(r) => r,
    };
    let single = matches!(system, Some(SystemSpec::SingleQubit { .. }));
    let mut out = Vec::with_capacity(raw.len());
    let mut ok = true;
    for (k, w) in raw.iter().enumerate() {
        let site = match w.site {
            None => {
                ck.push(format!("wiring[{k}].site"), "missing required field");
                ok = false;
                None
            }
            Some(1) => Some(Site::One),
            Some(2) if !single => Some(Site::Two),
            Some(2) => {
                ck.push(format!("wiring[{k}].site"), "single_qubit has only site 1");
                ok = false;
                None
            }
            Some(other) => {
                ck.push(format!("wiring[{k}].site"), format!("invalid site {other}"));
                ok = false;
                None
            }
        };
        let axis = match w.axis.as_deref() {
            None => {
                ck.push(format!("wiring[{k}].axis"), "missing required field");
                ok = false;
                None
            }
            Some("x") => Some(Axis::X),
            Some("y") => Some(Axis::Y),
            Some("z") => Some(Axis::Z),
            Some(other) => {
                ck.push(
                    format!("wiring[{k}].axis"),
                    format!("invalid axis '{other}' (x, y, z)"),
                );
                ok = false;
                None
            }
        };
        if let (Some(site), Some(axis)) = (site, axis) {
            out.push((site, axis));
        }
    }
    ok.then_some(out)
}

fn validate_matrix(
    raw: &[Vec<f64>],
    n: usize,
    path: &str,
    ck: &mut Check,
) -> Option<Array2<f64>> {
    if raw.len() != n || raw.iter().any(|row| row.len() != n) {
        ck.push(
            path,
            format!("must be a {n}x{n} matrix matching the wiring channel count"),
        );
        return None;
    }
    let mut m = Array2::zeros((n, n));
    for (i, row) in raw.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[[i, j]] = v;
        }
    }
    Some(m)
}

fn validate_noise(raw: Option<&RawNoise>, n: usize, ck: &mut Check) -> Option<NoiseSpec> {
    let raw = match raw {
        None => {
            ck.push("noise", "missing required table");
            return None;
        }
        Some(r) => r,
    };
    if n == 0 {
        // wiring already failed; skip consistency checks that depend on n
        return None;
    }
    let drift = match (&raw.gammas, &raw.drift) {
        (Some(_), Some(_)) => {
            ck.push("noise", "give either gammas or drift, not both");
            None
        }
        (Some(g), None) => {
            if g.len() != n {
                ck.push(
                    "noise.gammas",
                    format!("expected {n} decay rates to match the wiring"),
                );
                None
            } else {
                if let Some((k, _)) = g.iter().enumerate().find(|(_, &x)| x <= 0.0) {
                    ck.push(format!("noise.gammas[{k}]"), "must be positive");
                }
                Some(Array2::from_diag(&Array1::from(g.clone())))
            }
        }
        (None, Some(d)) => validate_matrix(d, n, "noise.drift", ck),
        (None, None) => {
            ck.push("noise", "missing gammas (or a full drift matrix)");
            None
        }
    };
    let diffusion = match &raw.diffusion {
        None => {
            ck.push("noise.diffusion", "missing required matrix");
            None
        }
        Some(d) => validate_matrix(d, n, "noise.diffusion", ck),
    };
    let mean = match &raw.mean {
        None => Some(Array1::zeros(n)),
        Some(v) if v.len() == n => Some(Array1::from(v.clone())),
        Some(_) => {
            ck.push("noise.mean", format!("expected {n} entries"));
            None
        }
    };
    Some(NoiseSpec {
        drift: drift?,
        diffusion: diffusion?,
        mean: mean?,
    })
}

fn validate_outputs(raw: Option<&RawOutputs>, ck: &mut Check) -> (Vec<OutputMetric>, usize) {
    let raw = match raw {
        None => {
            ck.push("outputs", "missing required table");
            return (Vec::new(), 0);
        }
        Some(r) => r,
    };
    let mut metrics = Vec::new();
    match &raw.metrics {
        None => ck.push("outputs.metrics", "missing required list"),
        Some(list) if list.is_empty() => ck.push("outputs.metrics", "must not be empty"),
        Some(list) => {
            for (k, name) in list.iter().enumerate() {
                match OutputMetric::parse(name) {
                    Some(m) => metrics.push(m),
                    None => ck.push(
                        format!("outputs.metrics[{k}]"),
                        format!(
                            "unknown metric '{name}' (purity, fidelity, population:K, \
                             trajectory, spectrum, paths)"
                        ),
                    ),
                }
            }
        }
    }
    let wants_paths = metrics.contains(&OutputMetric::Paths);
    let n_paths = match raw.n_paths {
        None if wants_paths => {
            ck.push("outputs.n_paths", "required when 'paths' is requested");
            0
        }
        Some(n) if !wants_paths => {
            ck.push("outputs.n_paths", format!("given ({n}) but 'paths' is not requested"));
            0
        }
        Some(n) if n < 1 => {
            ck.push("outputs.n_paths", "must be at least 1");
            0
        }
        Some(n) => n as usize,
        None => 0,
    };
    (metrics, n_paths)
}

fn validate_grid(
    raw: Option<&RawGrid>,
    metrics: &[OutputMetric],
    ck: &mut Check,
) -> Option<GridSpec> {
    let raw = match raw {
        None => {
            ck.push("grid", "missing required table");
            return None;
        }
        Some(r) => r,
    };
    let t_max = ck.require(raw.t_max, "grid.t_max");
    if let Some(t) = t_max {
        if t <= 0.0 {
            ck.push("grid.t_max", "must be positive");
        }
    }
    let n_steps = ck.require(raw.n_steps, "grid.n_steps");
    if let Some(n) = n_steps {
        if n < 2 {
            ck.push("grid.n_steps", "must be at least 2");
        }
    }
    let wants_spectrum = metrics.iter().any(|m| matches!(m, OutputMetric::Spectrum));
    let omega = match (raw.omega_min, raw.omega_max, raw.n_omega) {
        (None, None, None) => {
            if wants_spectrum {
                ck.push(
                    "grid",
                    "spectrum output needs omega_min, omega_max and n_omega",
                );
            }
            None
        }
        (min, max, n) => {
            let min = ck.require(min, "grid.omega_min");
            let max = ck.require(max, "grid.omega_max");
            let n = ck.require(n, "grid.n_omega");
            match (min, max, n) {
                (Some(min), Some(max), Some(n)) => {
                    if max <= min {
                        ck.push("grid.omega_max", "must exceed omega_min");
                    }
                    if n < 3 {
                        ck.push("grid.n_omega", "must be at least 3");
                    }
                    Some(OmegaGrid {
                        min,
                        max,
                        n: n.max(0) as usize,
                    })
                }
                _ => None,
            }
        }
    };
    Some(GridSpec {
        t_max: t_max?,
        n_steps: n_steps? as usize,
        omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const MINIMAL_SINGLE: &str = r#"
schema_version = 1

[system]
kind = "single_qubit"
eps = 1.0

[[wiring]]
site = 1
axis = "x"

[[wiring]]
site = 1
axis = "z"

[noise]
gammas = [0.8, 1.9]
diffusion = [[0.7, 0.2], [0.2, 0.4]]

xi_sweep = [0.0]

[grid]
t_max = 10.0
n_steps = 100
omega_min = 0.0
omega_max = 3.0
n_omega = 301

[outputs]
metrics = ["spectrum"]
"#;

    #[test]
    fn minimal_single_qubit_fills_defaults() {
        let s = parse_scenario(MINIMAL_SINGLE).unwrap();
        assert_eq!(s.seed, 0);
        assert!(s.secular);
        assert_eq!(s.temperature, 0.0);
        assert!(matches!(s.system, SystemSpec::SingleQubit { eps } if eps == 1.0));
        assert_eq!(s.wiring.len(), 2);
        assert_eq!(s.noise.drift[[1, 1]], 1.9);
        assert_eq!(s.metrics, vec![OutputMetric::Spectrum]);
    }

    #[test]
    fn bell_sweep_scenario_parses() {
        let text = r#"
schema_version = 1
seed = 7
secular = true
temperature = 0.0

[system]
kind = "qubit_pair"
eps1 = 1.0
eps2 = 1.0
j_coupling = -0.2

[[wiring]]
site = 1
axis = "z"

[[wiring]]
site = 2
axis = "z"

[noise]
gammas = [0.2, 0.2]
diffusion = [[0.02, 0.0], [0.0, 0.02]]

xi_sweep = [-1.0, 0.0, 1.0]

[initial_state]
bell = "phi_plus"

[grid]
t_max = 400.0
n_steps = 4000

[outputs]
metrics = ["purity", "fidelity"]
"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(s.xi_sweep, vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.initial_state, Some(BellKind::PhiPlus));
        assert_eq!(s.metrics.len(), 2);
    }

    #[test]
    fn out_of_range_xi_names_the_entry() {
        let text = MINIMAL_SINGLE.replace("xi_sweep = [0.0]", "xi_sweep = [1.5]");
        let err = parse_scenario(&text).unwrap_err();
        let v = err.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "xi_sweep[0]");
    }

    #[test]
    fn all_violations_reported_together() {
        let text = r#"
schema_version = 3

[system]
kind = "qubit_pair"
eps1 = -1.0

[[wiring]]
site = 5
axis = "q"

[noise]
gammas = [0.5]

xi_sweep = [-2.0, 0.5]

[grid]
t_max = -4.0
n_steps = 1

[outputs]
metrics = ["purity", "bogus"]
"#;
        let err = parse_scenario(text).unwrap_err();
        let paths: Vec<&str> = err.violations().iter().map(|v| v.path.as_str()).collect();
        for expected in [
            "schema_version",
            "system.eps2",
            "system.j_coupling",
            "wiring[0].site",
            "wiring[0].axis",
            "xi_sweep[0]",
            "grid.t_max",
            "grid.n_steps",
            "outputs.metrics[1]",
        ] {
            assert!(paths.contains(&expected), "missing violation at {expected}: {paths:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL_SINGLE.replace("[noise]", "typo_key = 1\n\n[noise]");
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.violations().len(), 1);
        assert!(err.violations()[0].message.contains("typo_key"));
    }

    #[test]
    fn paths_metric_requires_count() {
        let text = MINIMAL_SINGLE.replace(
            "metrics = [\"spectrum\"]",
            "metrics = [\"spectrum\", \"paths\"]",
        );
        let err = parse_scenario(&text).unwrap_err();
        assert_eq!(err.violations()[0].path, "outputs.n_paths");
        let ok = text.replace(
            "metrics = [\"spectrum\", \"paths\"]",
            "metrics = [\"spectrum\", \"paths\"]\nn_paths = 50",
        );
        let s = parse_scenario(&ok).unwrap();
        assert_eq!(s.n_paths, 50);
    }

    #[test]
    fn series_metrics_need_an_initial_state() {
        let text = MINIMAL_SINGLE.replace("metrics = [\"spectrum\"]", "metrics = [\"purity\"]");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.violations()[0].message.contains("initial_state"));
    }
}
