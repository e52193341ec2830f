//! JSON run configuration shared by the command-line commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{build_laplacian, nondimensionalize, DimensionalParams, NetworkModel, OscillatorParams};
use crate::sim::SimConfig;
use crate::topology::{generate_topology, Topology};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Either one value shared by every species or one value per species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSpecies {
    Uniform(f64),
    Each(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSection {
    Dimensionless {
        /// Loop length; required when `b` is a single number.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        b: PerSpecies,
        p: f64,
    },
    Dimensional(DimensionalParams),
}

fn default_seed() -> u64 {
    42
}
fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n: usize,
    /// 1-based coupled species, `2 <= k_index <= M`.
    pub k_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Multiplies every coupling weight.
    #[serde(default = "default_scale")]
    pub weight_scale: f64,
}

fn default_precision() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Significant digits of CSV numbers.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { csv: None, report: None, precision: default_precision() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// The same `b` for every species.
    B,
    P,
    /// Multiplies all coupling weights, which scales every Laplacian eigenvalue.
    CouplingScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub name: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Explicit grid, used instead of `start/stop/step`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    /// Grid points, inclusive of `stop` up to rounding.
    pub fn points(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let (Some(start), Some(stop), Some(step)) = (self.start, self.stop, self.step) else {
            return Err(Error::validation(format!(
                "sweep.parameters[{:?}]: give either `values` or all of `start`, `stop`, `step`",
                self.name
            )));
        };
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::validation(format!("sweep.parameters[{:?}].step must be positive", self.name)));
        }
        if stop < start {
            return Ok(Vec::new());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameters: Vec<SweepAxis>,
    /// Also simulate every grid point.
    #[serde(default)]
    pub simulate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelSection,
    pub network: NetworkSection,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Nine Goodwin oscillators with `b = 0.5`, `p = 3`, coupled through
    /// species 2 with random weights on `[0, 20]`.
    pub fn example() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            model: ModelSection::Dimensionless { m: Some(9), b: PerSpecies::Uniform(0.5), p: 3.0 },
            network: NetworkSection {
                n: 9,
                k_index: 2,
                topology: Some(Topology::Random { low: 0.0, high: 20.0 }),
                weights: None,
                seed: default_seed(),
                weight_scale: 1.0,
            },
            sim: SimConfig::default(),
            output: OutputSection::default(),
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "schema_version: unsupported version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let osc = self.oscillator()?;
        let m = osc.loop_length();
        let net = &self.network;
        if net.k_index < 2 || net.k_index > m {
            return Err(Error::validation(format!("network.k_index: {} out of range [2, {m}]", net.k_index)));
        }
        if net.n == 0 {
            return Err(Error::validation("network.n: must be at least 1"));
        }
        if net.topology.is_some() && net.weights.is_some() {
            return Err(Error::validation("network: give either `topology` or `weights`, not both"));
        }
        if net.topology.is_none() && net.weights.is_none() && net.n > 1 {
            return Err(Error::validation("network: one of `topology` or `weights` is required when n > 1"));
        }
        if !(net.weight_scale.is_finite() && net.weight_scale >= 0.0) {
            return Err(Error::validation("network.weight_scale: must be finite and nonnegative"));
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            return Err(Error::validation("output.precision: must lie in [1, 17]"));
        }
        self.network_model()?;
        Ok(())
    }

    pub fn oscillator(&self) -> Result<OscillatorParams> {
        let tag = |e: Error, field: &str| match e {
            Error::Domain(msg) | Error::Validation(msg) => Error::validation(format!("{field}: {msg}")),
            other => other,
        };
        match &self.model {
            ModelSection::Dimensionless { m, b, p } => {
                let b = match (b, m) {
                    (PerSpecies::Uniform(v), Some(m)) => vec![*v; *m],
                    (PerSpecies::Uniform(_), None) => {
                        return Err(Error::validation("model.dimensionless.m: required when b is a single number"))
                    }
                    (PerSpecies::Each(v), Some(m)) if v.len() != *m => {
                        return Err(Error::validation(format!(
                            "model.dimensionless.b: has {} entries but m = {m}",
                            v.len()
                        )))
                    }
                    (PerSpecies::Each(v), _) => v.clone(),
                };
                OscillatorParams::new(b, *p).map_err(|e| tag(e, "model.dimensionless"))
            }
            ModelSection::Dimensional(d) => nondimensionalize(d).map_err(|e| tag(e, "model.dimensional")),
        }
    }

    pub fn weights(&self) -> Result<Matrix> {
        let net = &self.network;
        let w = match (&net.topology, &net.weights) {
            (Some(t), _) => generate_topology(t, net.n, net.seed).map_err(|e| Error::validation(format!("network.topology: {e}")))?,
            (None, Some(rows)) => {
                let w = Matrix::from_rows(rows).ok_or_else(|| Error::validation("network.weights: must be a square matrix"))?;
                if w.dim() != net.n {
                    return Err(Error::validation(format!("network.weights: is {0}x{0} but n = {1}", w.dim(), net.n)));
                }
                w
            }
            (None, None) => Matrix::zeros(net.n),
        };
        Ok(w.scaled(net.weight_scale))
    }

    pub fn network_model(&self) -> Result<NetworkModel> {
        let coupling = build_laplacian(&self.weights()?).map_err(|e| Error::validation(format!("network.weights: {e}")))?;
        NetworkModel::new(self.oscillator()?, coupling, self.network.k_index)
            .map_err(|e| Error::validation(format!("network.k_index: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_round_trips() {
        let cfg = RunConfig::example();
        let back = RunConfig::from_json_str(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn k_index_out_of_range_names_the_field() {
        let mut cfg = RunConfig::example();
        cfg.network.k_index = 10;
        let err = RunConfig::from_json_str(&cfg.to_json()).unwrap_err().to_string();
        assert!(err.contains("network.k_index"), "{err}");
    }

    #[test]
    fn both_model_forms_rejected() {
        let text = r#"{"schema_version": 1,
            "model": {"dimensionless": {"m": 3, "b": 1, "p": 2},
                      "dimensional": {"synthesis_rates": [1,1,1], "degradation_rates": [1,1,1], "binding_inverse": 1, "hill_p": 2}},
            "network": {"n": 1, "k_index": 2}}"#;
        assert!(RunConfig::from_json_str(text).is_err());
    }

    #[test]
    fn dimensional_model_accepted() {
        let text = r#"{"schema_version": 1,
            "model": {"dimensional": {"synthesis_rates": [8,1,1], "degradation_rates": [2,2,2], "binding_inverse": 1, "hill_p": 2}},
            "network": {"n": 2, "k_index": 3, "topology": {"kind": "complete", "weight": 1}}}"#;
        let cfg = RunConfig::from_json_str(text).unwrap();
        let osc = cfg.oscillator().unwrap();
        assert!((osc.time_scale().unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"schema_version": 1, "model": {"dimensionless": {"b": [1,1,1]}}, "network": {"n": 1, "k_index": 2}}"#;
        let err = RunConfig::from_json_str(text).unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");
    }

    #[test]
    fn sweep_axis_points() {
        let axis = SweepAxis { name: SweepParameter::B, start: Some(0.5), stop: Some(1.0), step: Some(0.1), values: None };
        assert_eq!(axis.points().unwrap().len(), 6);
        let empty = SweepAxis { start: Some(1.0), stop: Some(0.5), ..axis.clone() };
        assert!(empty.points().unwrap().is_empty());
        let incomplete = SweepAxis { step: None, ..axis };
        assert!(incomplete.points().is_err());
    }
}
