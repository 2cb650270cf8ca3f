use serde::{Deserialize, Serialize};

use super::{check_finite, check_positive, gauss_profile, gauss_profile_lip, Norm};
use crate::Result;

/// Deterministic initial input `u0(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant { u: f64 },
    /// `height * exp(-|x - center|^2 / (2 width^2))`.
    GaussianBump {
        height: f64,
        center: Vec<f64>,
        width: f64,
    },
}

impl InitialCondition {
    #[inline]
    pub fn eval(&self, x: &[f64], norm: Norm) -> f64 {
        match self {
            InitialCondition::Constant { u } => *u,
            InitialCondition::GaussianBump {
                height,
                center,
                width,
            } => gauss_profile(*height, *width, norm.dist(x, center)),
        }
    }

    pub fn lip_const(&self) -> f64 {
        match self {
            InitialCondition::Constant { .. } => 0.0,
            InitialCondition::GaussianBump { height, width, .. } => {
                gauss_profile_lip(*height, *width)
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            InitialCondition::Constant { u } => u.abs(),
            InitialCondition::GaussianBump { height, .. } => height.abs(),
        }
    }

    pub fn validate(&self, path: &str, dim: usize) -> Result<()> {
        match self {
            InitialCondition::Constant { u } => check_finite(&format!("{path}.u"), *u),
            InitialCondition::GaussianBump {
                height,
                center,
                width,
            } => {
                check_finite(&format!("{path}.height"), *height)?;
                check_positive(&format!("{path}.width"), *width)?;
                if center.len() != dim {
                    return Err(crate::Error::invalid(
                        format!("{path}.center"),
                        format!("expected {dim} coordinates, got {}", center.len()),
                    ));
                }
                for (k, c) in center.iter().enumerate() {
                    check_finite(&format!("{path}.center[{k}]"), *c)?;
                }
                Ok(())
            }
        }
    }
}
