//! Run configuration: a TOML file with a shared `[grid]` and `[solver]`
//! table plus one table per subcommand, overridden by command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use latentbell::pipeline::Pipeline;
use latentbell::{ContextSet, LatentGrid, OutcomeBinning, SolverOptions};

use crate::error::{CliError, CliResult};

const SECTIONS: &[&str] = &[
    "grid",
    "solver",
    "matrix",
    "witness",
    "detect-curve",
    "heatmap",
    "protocol",
    "spin",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Half-width `L` of the latent square.
    pub half_width: f64,
    /// Grid points per axis.
    pub points: usize,
    pub contexts: usize,
    pub outcomes: usize,
    /// `y_max` in units of the half-diagonal `sqrt(2) L`.
    pub y_max_factor: f64,
    /// Largest tolerated negative binned marginal before clipping.
    pub negative_tolerance: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            points: 100,
            contexts: 25,
            outcomes: 100,
            y_max_factor: latentbell::phase_space::DEFAULT_Y_MAX_FACTOR,
            negative_tolerance: latentbell::phase_space::DEFAULT_NEGATIVE_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            max_iterations: d.max_iterations,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> CliResult<SolverOptions> {
        let o = SolverOptions {
            tol: self.tol,
            max_iterations: self.max_iterations,
        };
        o.validate()?;
        Ok(o)
    }
}

/// Validated pieces of a pipeline, cheap to build.
pub struct GridParts {
    grid: LatentGrid,
    contexts: ContextSet,
    binning: OutcomeBinning,
    negative_tolerance: f64,
}

impl GridConfig {
    pub fn validate(&self) -> CliResult<GridParts> {
        let grid = LatentGrid::new(self.half_width, self.points)?;
        let contexts = ContextSet::uniform(self.contexts)?;
        let binning = OutcomeBinning::for_grid(self.outcomes, &grid, self.y_max_factor)?;
        if !(self.negative_tolerance >= 0.0 && self.negative_tolerance.is_finite()) {
            return Err(CliError::validation("negative_tolerance must be non-negative"));
        }
        Ok(GridParts {
            grid,
            contexts,
            binning,
            negative_tolerance: self.negative_tolerance,
        })
    }
}

impl GridParts {
    pub fn build(self, solver: SolverOptions) -> CliResult<Pipeline> {
        let mut p = Pipeline::new(self.grid, self.contexts, self.binning)?.with_solver(solver);
        p.negative_tolerance = self.negative_tolerance;
        Ok(p)
    }
}

/// Load `section` of the config file (if any) together with the shared
/// tables, then apply `overrides` on top.
pub fn load<T: DeserializeOwned>(file: Option<&Path>, section: &str, overrides: Value) -> CliResult<T> {
    let mut merged = Value::Object(Map::new());
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
        let doc = serde_json::to_value(table).map_err(|e| CliError::validation(e.to_string()))?;
        let doc = doc.as_object().cloned().unwrap_or_default();
        if let Some(k) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CliError::validation(format!(
                "{}: unknown section '{k}' (expected one of {})",
                path.display(),
                SECTIONS.join(", ")
            )));
        }
        let mut own = Map::new();
        for shared in ["grid", "solver"] {
            if let Some(v) = doc.get(shared) {
                own.insert(shared.into(), v.clone());
            }
        }
        if let Some(Value::Object(m)) = doc.get(section) {
            own.extend(m.clone());
        } else if doc.contains_key(section) {
            return Err(CliError::validation(format!("section '{section}' must be a table")));
        }
        merge(&mut merged, Value::Object(own));
    }
    merge(&mut merged, overrides);
    serde_json::from_value(merged).map_err(|e| CliError::validation(format!("configuration: {e}")))
}

/// Deep merge: objects merge key by key, anything else replaces.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

/// Serialize flag values, dropping the ones that were not given.
pub fn overrides<T: Serialize>(args: &T) -> Value {
    fn prune(v: Value) -> Value {
        match v {
            Value::Object(m) => Value::Object(
                m.into_iter()
                    .filter(|(_, v)| !v.is_null())
                    .map(|(k, v)| (k, prune(v)))
                    .filter(|(_, v)| !matches!(v, Value::Object(m) if m.is_empty()))
                    .collect(),
            ),
            other => other,
        }
    }
    prune(serde_json::to_value(args).expect("flags serialize"))
}

/// `n + 1` evenly spaced values from `lo` to `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}
