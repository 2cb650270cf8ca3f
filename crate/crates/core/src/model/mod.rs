//! Model catalog: firing rates, synaptic weights, initial inputs and spatial
//! measures, each carrying its analytic constants.
//!
//! Lipschitz constants are declared in closed form per variant. Downstream
//! bounds read them from here; the property tests only try to falsify them.

mod firing;
mod initial;
mod measure;
mod params;
mod weight;

pub use firing::FiringRateFn;
pub use initial::InitialCondition;
pub use measure::{Raster, SpatialMeasure, DEFAULT_EXP_MOMENT_RATE};
pub use params::ModelParams;
pub use weight::SynapticWeightFn;

use serde::{Deserialize, Serialize};

/// Norm on R^d used for distances between positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Max-coordinate norm; cube geometry of the quantizer uses it.
    #[default]
    Linf,
    L2,
}

impl Norm {
    #[inline]
    pub fn of(self, x: &[f64]) -> f64 {
        match self {
            Norm::Linf => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    #[inline]
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Norm::Linf => a
                .iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())),
            Norm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Below this leakage rate the series branch of [`decay_integral`] is used.
pub const ALPHA_SERIES_THRESHOLD: f64 = 1e-10;

/// `∫_0^t e^{-alpha s} ds = (1 - e^{-alpha t}) / alpha`, with the `alpha -> 0`
/// limit `t`. Infinite `t` gives `1/alpha`.
pub fn decay_integral(alpha: f64, t: f64) -> f64 {
    if alpha < ALPHA_SERIES_THRESHOLD {
        let x = alpha * t;
        t * (1.0 - x / 2.0 + x * x / 6.0)
    } else if t.is_infinite() {
        1.0 / alpha
    } else {
        -(-alpha * t).exp_m1() / alpha
    }
}

/// Contraction constant of the limit fixed-point map on a horizon `t`:
/// `(1 - e^{-alpha t}) alpha^{-1} L_f sup_x |w^x|_{L^1(rho)}`.
pub fn contraction_constant(params: &ModelParams, t: f64, w_l1_sup: f64) -> f64 {
    decay_integral(params.alpha, t) * params.firing_rate.lip_const() * w_l1_sup
}

pub(crate) fn check_finite(path: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::invalid(path, format!("must be finite, got {v}")))
    }
}

pub(crate) fn check_positive(path: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(crate::Error::invalid(path, format!("must be positive, got {v}")))
    }
}

pub(crate) fn check_nonnegative(path: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(crate::Error::invalid(
            path,
            format!("must be nonnegative, got {v}"),
        ))
    }
}

/// Profile `s -> amp * exp(-s^2 / (2 width^2))` and the sup of its slope.
#[inline]
pub(crate) fn gauss_profile(amp: f64, width: f64, s: f64) -> f64 {
    amp * (-(s * s) / (2.0 * width * width)).exp()
}

#[inline]
pub(crate) fn gauss_profile_lip(amp: f64, width: f64) -> f64 {
    amp.abs() * (-0.5f64).exp() / width
}
