use rayon::prelude::*;
use serde::Serialize;

use super::coupling::mean_se;
use crate::hawkes_sim::embedded::{simulate_embedded, EmbeddedOptions};
use crate::limit_field::{trapezoid, NodeProfile};
use crate::model::ModelParams;
use crate::rng::SeedKey;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialDiscrepancy {
    pub n: usize,
    pub replications: usize,
    pub mean: f64,
    pub se: f64,
}

/// Monte-Carlo estimate of `E ∫_0^T N^{-1} sum_i |U_i(t) - u(t, x_i)| dt`,
/// with `U_i` recorded on the solver grid and integrated by the trapezoid
/// rule.
pub fn compare_potentials(
    params: &ModelParams,
    positions: &[Vec<f64>],
    profile: &NodeProfile,
    t_end: f64,
    replications: usize,
    master: u64,
    opts: EmbeddedOptions,
) -> Result<PotentialDiscrepancy> {
    if (t_end - profile.horizon()).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "horizon {t_end} differs from solved range {}",
            profile.horizon()
        )));
    }
    let n = positions.len();
    let dt = profile.dt();
    let times: Vec<f64> = (0..=profile.steps()).map(|k| k as f64 * dt).collect();
    let target: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| (0..n).map(|i| profile.potential(i, t)).collect())
        .collect();
    let per_rep: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let run = simulate_embedded(
                params,
                positions,
                t_end,
                SeedKey::new(master, r as u64),
                true,
                None,
                &times,
                opts,
            )?;
            let gaps: Vec<f64> = run
                .drivers
                .iter()
                .zip(&target)
                .map(|(u, v)| u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64)
                .collect();
            Ok(trapezoid(&gaps, dt))
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_se(&per_rep);
    Ok(PotentialDiscrepancy {
        n,
        replications,
        mean,
        se,
    })
}
