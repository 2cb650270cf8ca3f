use serde::{Deserialize, Serialize};

use super::{FiringRateFn, InitialCondition, Norm, SpatialMeasure, SynapticWeightFn};
use crate::{Error, Result};

/// Full dynamics of one experiment: `(f, w, u0, alpha)` and the position law `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub firing_rate: FiringRateFn,
    pub weight: SynapticWeightFn,
    pub initial: InitialCondition,
    pub alpha: f64,
    pub rho: SpatialMeasure,
    #[serde(default)]
    pub norm: Norm,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.firing_rate.validate("firing_rate")?;
        self.weight.validate("weight")?;
        self.rho.validate("rho")?;
        self.initial.validate("initial", self.rho.dim())?;
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Parses and validates, reporting schema violations with their JSON path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let p: ModelParams = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        self.firing_rate.eval(u)
    }

    #[inline]
    pub fn w(&self, y: &[f64], x: &[f64]) -> f64 {
        self.weight.eval(y, x, self.norm)
    }

    #[inline]
    pub fn u0(&self, x: &[f64]) -> f64 {
        self.initial.eval(x, self.norm)
    }
}
