//! Experiment configuration. Every field is optional; command-line flags
//! override whatever the config file sets.

use std::path::{Path, PathBuf};

use qrlab_core::maps::DistortionKind;
use qrlab_core::{AnalyticTargetForm, MapFamily, Region, ScalarFn};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Algebra,
    Homotopy,
    Degree,
    Distortion,
    Limits,
    Estimates,
    Demo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Algebra => "algebra",
            Command::Homotopy => "homotopy",
            Command::Degree => "degree",
            Command::Distortion => "distortion",
            Command::Limits => "limits",
            Command::Estimates => "estimates",
            Command::Demo => "demo",
        }
    }
}

/// A `k`-covector in `ℝⁿ` by its coefficients in lexicographic basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovectorSpec {
    pub n: usize,
    pub k: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSpec {
    pub center: Vec<f64>,
    pub side: f64,
}

/// Optional assertions; a run exits non-zero when one of them fails.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub degree: Option<i64>,
    pub max_residual: Option<f64>,
    pub max_minimal_k: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Option<Command>,
    pub map: Option<MapFamily>,
    /// QRGF map file sampled on `domain` at `resolution`.
    pub map_file: Option<PathBuf>,
    #[serde(default)]
    pub map_torus: bool,
    pub domain: Option<Region>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    /// Target point (`y` for degrees, `y₀` for value inequalities).
    pub y: Option<Vec<f64>>,
    pub u: Option<Region>,
    pub bump_radius: Option<f64>,
    /// Distortion constant `K`.
    pub k: Option<f64>,
    /// Doubling constant `D`.
    pub d: Option<f64>,
    pub kind: Option<DistortionKind>,
    pub sigma: Option<ScalarFn>,
    pub omega: Option<AnalyticTargetForm>,
    pub covector: Option<CovectorSpec>,
    pub samples: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub levels: Option<usize>,
    pub limit_resolution: Option<usize>,
    pub root: Option<CubeSpec>,
    pub lambdas: Option<Vec<f64>>,
    pub minimal_sigma: Option<bool>,
    #[serde(default)]
    pub expect: Expectations,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::InvalidSpec(msg) => CliError::InvalidSpec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// serde_json errors carry the line and column of the offending token.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::InvalidSpec(e.to_string()))
    }
}

/// Builds a map family from a name and the scalar parameters given on the
/// command line; the family's own schema rejects parameters it does not take.
pub fn family_from_flags(
    name: &str,
    k: Option<u32>,
    n: Option<usize>,
    scale: Option<f64>,
    alpha: Option<f64>,
    amplitude: Option<f64>,
) -> Result<MapFamily, CliError> {
    let mut obj = serde_json::Map::new();
    obj.insert("family".into(), name.into());
    let takes_n = !matches!(name, "winding" | "folding" | "linear" | "eventually_constant");
    if takes_n {
        obj.insert("n".into(), n.unwrap_or(2).into());
    } else if let Some(n) = n {
        obj.insert("n".into(), n.into());
    }
    if let Some(k) = k {
        obj.insert("k".into(), k.into());
    }
    for (key, v) in [("scale", scale), ("alpha", alpha), ("amplitude", amplitude)] {
        if let Some(v) = v {
            obj.insert(key.into(), v.into());
        }
    }
    serde_json::from_value(obj.into()).map_err(|e| CliError::InvalidSpec(format!("map family {name:?}: {e}")))
}

/// A comma-separated list of numbers on the command line, e.g. `0.5,0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

pub fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>().map(Point)
}
