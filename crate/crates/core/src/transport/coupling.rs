use rayon::prelude::*;
use serde::Serialize;

use crate::hawkes_sim::embedded::{simulate_embedded, EmbeddedOptions};
use crate::hawkes_sim::SpikeTrain;
use crate::limit_field::NodeProfile;
use crate::model::{decay_integral, ModelParams};
use crate::rng::SeedKey;
use crate::{Error, Result};

/// Finite-network and limit trains of one replication, driven by the same
/// Poisson measures.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPair {
    pub finite: Vec<SpikeTrain>,
    pub limit: Vec<SpikeTrain>,
}

pub fn simulate_coupled_pair(
    params: &ModelParams,
    positions: &[Vec<f64>],
    profile: &NodeProfile,
    t_end: f64,
    key: SeedKey,
    opts: EmbeddedOptions,
) -> Result<CoupledPair> {
    if profile.len() != positions.len() {
        return Err(Error::GridMismatch(format!(
            "profile has {} neurons, positions {}",
            profile.len(),
            positions.len()
        )));
    }
    if t_end > profile.horizon() * (1.0 + 1e-12) {
        return Err(Error::GridMismatch(format!(
            "horizon {t_end} beyond solved range {}",
            profile.horizon()
        )));
    }
    let run = simulate_embedded(params, positions, t_end, key, true, Some(profile), &[], opts)?;
    Ok(CoupledPair {
        finite: run.finite.unwrap_or_default(),
        limit: run.limit.unwrap_or_default(),
    })
}

/// Replications `0..replications` of `master`, in parallel.
pub fn coupled_replications(
    params: &ModelParams,
    positions: &[Vec<f64>],
    profile: &NodeProfile,
    t_end: f64,
    master: u64,
    replications: usize,
    opts: EmbeddedOptions,
) -> Result<Vec<CoupledPair>> {
    (0..replications)
        .into_par_iter()
        .map(|r| simulate_coupled_pair(params, positions, profile, t_end, SeedKey::new(master, r as u64), opts))
        .collect()
}

/// `sup_t |Z(t) - Zbar(t)|` for two counting paths.
pub fn sup_count_gap(a: &SpikeTrain, b: &SpikeTrain) -> usize {
    let (mut i, mut j) = (0, 0);
    let mut best = 0usize;
    while i < a.times.len() || j < b.times.len() {
        let ta = a.times.get(i).copied().unwrap_or(f64::INFINITY);
        let tb = b.times.get(j).copied().unwrap_or(f64::INFINITY);
        if ta <= tb {
            i += 1;
        }
        if tb <= ta {
            j += 1;
        }
        best = best.max(i.abs_diff(j));
    }
    best
}

/// `A^N(T) = N^{-1} sum_i sup_{t <= T} |Z_i(t) - Zbar_i(t)|`.
pub fn coupling_gap(pair: &CoupledPair) -> f64 {
    let n = pair.finite.len();
    pair.finite
        .iter()
        .zip(&pair.limit)
        .map(|(a, b)| sup_count_gap(a, b) as f64)
        .sum::<f64>()
        / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub n: usize,
    pub replications: usize,
    pub horizon: f64,
    pub a_mean: f64,
    pub a_se: f64,
    /// Averages over neurons and replications of the time-integrated driver
    /// differences: F from the finite/limit spike mismatch, G from the limit
    /// spikes against their compensator, H from the empirical against the
    /// `rho`-weighted interaction.
    pub f_term: f64,
    pub g_term: f64,
    pub h_term: f64,
    /// `N^{-1} sum_i ∫_0^T lambda(t, x_i) dt`.
    pub mean_integrated: f64,
    /// `N^{-1} sum_i (∫_0^T lambda(t, x_i) dt)^2`.
    pub mean_integrated_sq: f64,
    /// `2 N^{-1/2} (mean_integrated + mean_integrated_sq)^{1/2}`.
    pub b_bound: f64,
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn b_term_bound(n: usize, mean_integrated: f64, mean_integrated_sq: f64) -> f64 {
    2.0 * ((mean_integrated + mean_integrated_sq) / n as f64).sqrt()
}

impl CouplingReport {
    pub fn from_pairs(
        params: &ModelParams,
        positions: &[Vec<f64>],
        profile: &NodeProfile,
        t_end: f64,
        pairs: &[CoupledPair],
    ) -> Self {
        let n = positions.len();
        let nf = n as f64;
        let alpha = params.alpha;
        let phi = |s: f64| decay_integral(alpha, t_end - s);
        let w: Vec<Vec<f64>> = positions
            .iter()
            .map(|xj| positions.iter().map(|xi| params.w(xj, xi)).collect())
            .collect();
        let dt = profile.dt();
        let integrated: Vec<f64> = (0..n).map(|i| profile.integrated(i)).collect();
        let compensator: Vec<f64> = (0..n)
            .map(|j| {
                let v: Vec<f64> = profile
                    .grid_values(j)
                    .iter()
                    .enumerate()
                    .map(|(k, l)| phi(k as f64 * dt) * l)
                    .collect();
                crate::limit_field::trapezoid(&v, dt)
            })
            .collect();
        let h_term = (0..n)
            .map(|i| {
                let emp: f64 = (0..n).map(|j| w[j][i] * compensator[j]).sum::<f64>() / nf;
                (emp - profile.memory_integral(i)).abs()
            })
            .sum::<f64>()
            / nf;
        let weighted = |a: &[f64]| -> f64 {
            (0..n)
                .map(|i| ((0..n).map(|j| w[j][i] * a[j]).sum::<f64>() / nf).abs())
                .sum::<f64>()
                / nf
        };
        let per_rep: Vec<(f64, f64, f64)> = pairs
            .par_iter()
            .map(|p| {
                let sums = |tr: &[SpikeTrain]| -> Vec<f64> {
                    tr.iter().map(|s| s.times.iter().map(|&t| phi(t)).sum()).collect()
                };
                let zf = sums(&p.finite);
                let zl = sums(&p.limit);
                let a: Vec<f64> = zf.iter().zip(&zl).map(|(x, y)| x - y).collect();
                let g: Vec<f64> = zl.iter().zip(&compensator).map(|(x, c)| x - c).collect();
                (coupling_gap(p), weighted(&a), weighted(&g))
            })
            .collect();
        let a: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
        let (a_mean, a_se) = mean_se(&a);
        let r = pairs.len().max(1) as f64;
        let mean_integrated = integrated.iter().sum::<f64>() / nf;
        let mean_integrated_sq = integrated.iter().map(|x| x * x).sum::<f64>() / nf;
        Self {
            n,
            replications: pairs.len(),
            horizon: t_end,
            a_mean,
            a_se,
            f_term: per_rep.iter().map(|r| r.1).sum::<f64>() / r,
            g_term: per_rep.iter().map(|r| r.2).sum::<f64>() / r,
            h_term,
            mean_integrated,
            mean_integrated_sq,
            b_bound: b_term_bound(n, mean_integrated, mean_integrated_sq),
        }
    }
}

pub fn estimate_coupling(
    params: &ModelParams,
    positions: &[Vec<f64>],
    profile: &NodeProfile,
    t_end: f64,
    master: u64,
    replications: usize,
    opts: EmbeddedOptions,
) -> Result<(CouplingReport, Vec<CoupledPair>)> {
    let pairs = coupled_replications(params, positions, profile, t_end, master, replications, opts)?;
    Ok((CouplingReport::from_pairs(params, positions, profile, t_end, &pairs), pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(times: &[f64]) -> SpikeTrain {
        SpikeTrain {
            neuron: 0,
            times: times.to_vec(),
            horizon: 10.0,
        }
    }

    #[test]
    fn sup_gap() {
        assert_eq!(sup_count_gap(&train(&[1.0, 2.0]), &train(&[1.0, 2.0])), 0);
        assert_eq!(sup_count_gap(&train(&[1.0, 2.0, 3.0]), &train(&[4.0])), 3);
        assert_eq!(sup_count_gap(&train(&[1.0]), &train(&[2.0])), 1);
        assert_eq!(sup_count_gap(&train(&[]), &train(&[0.5, 0.6])), 2);
    }

    #[test]
    fn b_bound_constant_rate() {
        let (c, t, n) = (1.5, 2.0, 25usize);
        let b = b_term_bound(n, c * t, (c * t) * (c * t));
        assert!((b - 2.0 / 5.0 * (c * t + (c * t) * (c * t)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
