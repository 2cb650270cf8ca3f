use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::limit_field::SolverOptions;
use crate::model::ModelParams;
use crate::quantize::S2Options;
use crate::transport::ChaosSpec;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// I.i.d. positions from `rho`.
    #[default]
    S1,
    /// Quantized positions of the truncated `rho`.
    S2,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizationConfig {
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    /// Raster cells per axis of the truncated measure.
    #[serde(default)]
    pub cells_per_axis: Option<usize>,
}

impl QuantizationConfig {
    pub fn s2_options(&self) -> S2Options {
        S2Options {
            eps: self.eps,
            radius: self.radius,
            cells_per_axis: self.cells_per_axis,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub scenario: Scenario,
    pub n_values: Vec<usize>,
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quantization: QuantizationConfig,
    /// Cells per axis of the quadrature used by the limit solver.
    #[serde(default)]
    pub quadrature_cells: Option<usize>,
    #[serde(default)]
    pub chaos: Option<ChaosSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    200
}

/// Config together with the SHA-256 of its canonical JSON.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

/// Hex SHA-256 of `value` serialized with sorted keys and no whitespace.
pub fn canonical_hash(value: &serde_json::Value) -> String {
    let text = serde_json::to_string(value).expect("json values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<LoadedConfig> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let sha256 = canonical_hash(&value);
        let config: ExperimentConfig =
            serde_path_to_error::deserialize(value).map_err(|e| Error::Schema {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        config.validate()?;
        Ok(LoadedConfig { config, sha256 })
    }

    pub fn load(path: &std::path::Path) -> Result<LoadedConfig> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(|e| match e {
            Error::InvalidParameter { path, reason } => Error::InvalidParameter {
                path: format!("model.{path}"),
                reason,
            },
            other => other,
        })?;
        if self.n_values.is_empty() {
            return Err(Error::invalid("n_values", "must be nonempty"));
        }
        if self.n_values[0] == 0 {
            return Err(Error::invalid("n_values[0]", "must be >= 1"));
        }
        if let Some(k) = self.n_values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("n_values[{}]", k + 1), "must be strictly increasing"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "must be >= 1"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(Error::invalid("dt", "must lie in (0, t_end]"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if let Some(eps) = self.quantization.eps {
            let cap = 1.0 / (self.model.dim() as f64 + 2.0);
            if !(eps > 0.0 && eps < cap) {
                return Err(Error::invalid("quantization.eps", format!("must lie in (0, {cap})")));
            }
        }
        if let Some(r) = self.quantization.radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("quantization.radius", "must be positive"));
            }
        }
        if self.quantization.cells_per_axis == Some(0) {
            return Err(Error::invalid("quantization.cells_per_axis", "must be >= 1"));
        }
        if self.quadrature_cells == Some(0) {
            return Err(Error::invalid("quadrature_cells", "must be >= 1"));
        }
        if let Some(c) = &self.chaos {
            let d = self.model.dim();
            if c.center.len() != d || c.center_tilde.len() != d {
                return Err(Error::invalid("chaos.center", format!("window centers must have dimension {d}")));
            }
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dt: self.dt,
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverOptions::default()
        }
    }

    pub fn quadrature_cells(&self) -> usize {
        self.quadrature_cells
            .unwrap_or(if self.model.dim() == 1 { 64 } else { 24 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {
            "firing_rate": {"variant": "constant", "c": 1.0},
            "weight": {"variant": "constant", "kappa": 0.0},
            "initial": {"variant": "constant", "u": 0.0},
            "alpha": 1.0,
            "rho": {"variant": "uniform_box", "d": 1, "r": 1.0}
        },
        "n_values": [1],
        "t_end": 1.0,
        "replications": 4
    }"#;

    #[test]
    fn hash_ignores_formatting_and_key_order() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let b = ExperimentConfig::from_json(&serde_json::to_string_pretty(&v).unwrap()).unwrap();
        assert_eq!(a.sha256, b.sha256);
        assert_eq!(a.sha256.len(), 64);
        assert_eq!(a.config.scenario, Scenario::S1);
    }

    #[test]
    fn rejects_decreasing_sizes() {
        let text = MINIMAL.replace("[1]", "[4, 2]");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("n_values[1]"), "{err}");
    }

    #[test]
    fn schema_errors_carry_the_path() {
        let text = MINIMAL.replace("\"alpha\": 1.0", "\"alpha\": \"fast\"");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(matches!(&err, Error::Schema { path, .. } if path == "model.alpha"), "{err}");
        let text = MINIMAL.replace("\"replications\": 4", "\"replications\": 0");
        assert!(ExperimentConfig::from_json(&text).unwrap_err().is_config());
    }
}
