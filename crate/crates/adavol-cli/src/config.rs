//! Experiment config files: strict TOML with one `[method.NAME]` block per
//! sampler. Parsing validates everything up front so `run` never trips over
//! a bad field mid-experiment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use adavol::diffusion::ActivationParams;
use adavol::objective::{DoubleWell, Objective, Quadratic, ShiftedRastrigin};
use adavol::samplers::{Method, SamplerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigFileError(pub String);

impl fmt::Display for ConfigFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigFileError {}

fn err(msg: impl Into<String>) -> ConfigFileError {
    ConfigFileError(msg.into())
}

/// One experiment: an objective plus a set of named sampler runs.
///
/// Scalar fields come before the tables so the spec serializes back to
/// valid TOML; the manifest relies on that round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    /// Defaults to `out/<name>` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub emit_svg: bool,
    pub objective: ObjectiveSpec,
    pub method: BTreeMap<String, MethodSpec>,
}

fn default_stride() -> u64 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    ShiftedRastrigin,
    DoubleWell,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::ShiftedRastrigin => "shifted_rastrigin",
            ObjectiveKind::DoubleWell => "double_well",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Quadratic only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    /// Double well only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilt: Option<f64>,
}

impl ObjectiveSpec {
    /// Fills kind-specific defaults and rejects parameters that do not
    /// belong to the kind, so the resolved spec is fully explicit.
    fn resolve(&mut self) -> Result<(), ConfigFileError> {
        match self.kind {
            ObjectiveKind::Quadratic => {
                if self.tilt.is_some() {
                    return Err(err("objective: tilt is only valid for kind = \"double_well\""));
                }
                let dim = self
                    .dimension
                    .ok_or_else(|| err("objective: dimension is required for quadratic"))?;
                if dim == 0 {
                    return Err(err("objective: dimension must be >= 1"));
                }
                let curv = self.curvature.get_or_insert(1.0);
                if !(*curv > 0.0) || !curv.is_finite() {
                    return Err(err(format!(
                        "objective: curvature must be > 0 and finite, got {curv}"
                    )));
                }
            }
            ObjectiveKind::ShiftedRastrigin => {
                if self.curvature.is_some() || self.tilt.is_some() {
                    return Err(err(
                        "objective: curvature/tilt are not valid for shifted_rastrigin",
                    ));
                }
                let dim = self.dimension.ok_or_else(|| {
                    err("objective: dimension is required for shifted_rastrigin")
                })?;
                if dim == 0 {
                    return Err(err("objective: dimension must be >= 1"));
                }
            }
            ObjectiveKind::DoubleWell => {
                if self.curvature.is_some() {
                    return Err(err(
                        "objective: curvature is only valid for kind = \"quadratic\"",
                    ));
                }
                let dim = *self.dimension.get_or_insert(1);
                if dim != 1 {
                    return Err(err("objective: double_well is one-dimensional"));
                }
                let tilt = self.tilt.get_or_insert(0.0);
                let limit = 2.0 / (3.0f64 * 3.0f64.sqrt());
                if !tilt.is_finite() || tilt.abs() >= limit {
                    return Err(err(format!(
                        "objective: |tilt| must be < {limit:.4} to keep two wells, got {tilt}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn Objective>, ConfigFileError> {
        let mut resolved = self.clone();
        resolved.resolve()?;
        Ok(match resolved.kind {
            ObjectiveKind::Quadratic => Box::new(Quadratic::new(
                resolved.dimension.unwrap(),
                resolved.curvature.unwrap(),
            )),
            ObjectiveKind::ShiftedRastrigin => {
                Box::new(ShiftedRastrigin::new(resolved.dimension.unwrap()))
            }
            ObjectiveKind::DoubleWell => Box::new(DoubleWell::tilted(resolved.tilt.unwrap())),
        })
    }
}

/// Flat form of one sampler run; nesting is kept out of the file format so
/// every knob is a single `key = value` line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    pub eta: f64,
    pub beta: f64,
    pub iterations: u64,
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_one")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub gamma_exponent: f64,
    pub init_mean: Vec<f64>,
    #[serde(default = "default_one")]
    pub init_cov_scale: f64,
}

fn default_theta() -> f64 {
    1.0
}

fn default_one() -> f64 {
    1.0
}

impl MethodSpec {
    pub fn to_sampler_config(&self) -> Result<SamplerConfig, ConfigFileError> {
        let activation = ActivationParams::new(self.lambda, self.theta, self.c)
            .map_err(|e| err(e.to_string()))?;
        Ok(SamplerConfig {
            method: self.method,
            eta: self.eta,
            beta: self.beta,
            iterations: self.iterations,
            chains: self.chains,
            seed: self.seed,
            activation,
            epsilon: self.epsilon,
            gamma_exponent: self.gamma_exponent,
            init_mean: self.init_mean.clone(),
            init_cov_scale: self.init_cov_scale,
        })
    }
}

/// Parses, applies `--set` overrides, fills defaults, and validates every
/// method against the objective. The returned spec is fully resolved: it
/// serializes to TOML that parses back to an equal spec.
pub fn parse_config_with_overrides(
    text: &str,
    sets: &[String],
) -> Result<ExperimentSpec, ConfigFileError> {
    let mut spec: ExperimentSpec = if sets.is_empty() {
        toml::from_str(text).map_err(|e| err(e.to_string()))?
    } else {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| err(e.to_string()))?;
        for s in sets {
            apply_override(&mut table, s)?;
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| err(e.to_string()))?
    };
    resolve_and_validate(&mut spec)?;
    Ok(spec)
}

fn resolve_and_validate(spec: &mut ExperimentSpec) -> Result<(), ConfigFileError> {
    if spec.name.is_empty() {
        return Err(err("name must be nonempty"));
    }
    if spec.record_stride == 0 {
        return Err(err("record_stride must be >= 1"));
    }
    if spec.method.is_empty() {
        return Err(err("at least one [method.NAME] block is required"));
    }
    spec.objective.resolve()?;
    let objective = spec.objective.build()?;
    if spec.output_dir.is_none() {
        spec.output_dir = Some(PathBuf::from("out").join(&spec.name));
    }
    for (name, method) in &spec.method {
        let cfg = method
            .to_sampler_config()
            .map_err(|e| err(format!("method \"{name}\": {e}")))?;
        cfg.validate(objective.as_ref())
            .map_err(|e| err(format!("method \"{name}\": {e}")))?;
    }
    Ok(())
}

/// Sets `KEY=VALUE` in the raw TOML tree, where KEY is a dotted path such
/// as `method.adavol.eta`. The value is parsed as TOML when possible and
/// falls back to a plain string, so `--set name=figure1b` works unquoted.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigFileError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| err(format!("--set expects KEY=VALUE, got \"{assignment}\"")))?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(err(format!("--set key \"{path}\" has an empty path segment")));
    }
    let value = parse_override_value(raw);
    let mut current = table;
    for seg in &segments[..segments.len() - 1] {
        current = current
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                err(format!(
                    "--set key \"{path}\": \"{seg}\" is a value, not a section"
                ))
            })?;
    }
    current.insert(segments.last().unwrap().to_string(), value);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
