use serde::Serialize;

use super::coupling::{mean_se, CouplingReport};
use super::wasserstein::{wasserstein_discrete, DiscreteMeasure};
use crate::hawkes_sim::SpikeTrain;
use crate::limit_field::{lambda_space_lipschitz_bound, SpatialQuadrature};
use crate::model::{ModelParams, SpatialMeasure};
use crate::quantize::truncate_measure;
use crate::Result;

/// Itemized upper bound on the distance between the network law and the
/// limit law with positions drawn from `rho`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DkrBound {
    pub n: usize,
    pub a_term: f64,
    pub a_se: f64,
    pub b_term: f64,
    /// `W_1(mu_N, rho_hat)`.
    pub w1: f64,
    /// Spatial Lipschitz constant of `lambda`.
    pub lambda_lipschitz: f64,
    /// `(T L_lambda + 1) W_1`.
    pub w_term: f64,
    pub total: f64,
}

pub fn dkr_upper_bound(
    params: &ModelParams,
    positions: &[Vec<f64>],
    lambda_sup: f64,
    coupling: &CouplingReport,
    proxy: &DiscreteMeasure,
) -> Result<DkrBound> {
    let t = coupling.horizon;
    let mu = DiscreteMeasure::uniform(positions.to_vec())?;
    let w1 = wasserstein_discrete(&mu, proxy, 1, params.norm)?;
    let lip = lambda_space_lipschitz_bound(params, lambda_sup, t);
    let w_term = (t * lip + 1.0) * w1;
    let a_term = coupling.a_mean.max(0.0);
    Ok(DkrBound {
        n: positions.len(),
        a_term,
        a_se: coupling.a_se,
        b_term: coupling.b_bound,
        w1,
        lambda_lipschitz: lip,
        w_term,
        total: a_term + coupling.b_bound + w_term,
    })
}

pub const DICTIONARY_VERSION: &str = "dict-v1";

/// Bounded functionals on (path, position) that are 1-Lipschitz for the sup
/// distance between counting paths plus the position norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    /// `min(eta(t), K)`.
    Count { t: f64 },
    /// `min(eta(b) - eta(a), K) / 2`.
    Window { a: f64, b: f64 },
    /// `clamp(x_k, -K, K)`.
    Coordinate { axis: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dictionary {
    pub version: &'static str,
    pub clip: f64,
    pub functionals: Vec<Functional>,
}

impl Dictionary {
    /// Clipped counts at `T/4, T/2, T`, the two half-window counts and the
    /// position coordinates, clipped at 64.
    pub fn standard(t_end: f64, dim: usize) -> Self {
        let mut functionals: Vec<Functional> = [0.25, 0.5, 1.0]
            .iter()
            .map(|s| Functional::Count { t: s * t_end })
            .collect();
        functionals.push(Functional::Window { a: 0.0, b: 0.5 * t_end });
        functionals.push(Functional::Window { a: 0.5 * t_end, b: t_end });
        functionals.extend((0..dim).map(|axis| Functional::Coordinate { axis }));
        Self {
            version: DICTIONARY_VERSION,
            clip: 64.0,
            functionals,
        }
    }

    pub fn eval(&self, g: &Functional, train: &SpikeTrain, x: &[f64]) -> f64 {
        let k = self.clip;
        match *g {
            Functional::Count { t } => (train.count_at(t) as f64).min(k),
            Functional::Window { a, b } => {
                ((train.count_at(b) - train.count_at(a)) as f64).min(k) / 2.0
            }
            Functional::Coordinate { axis } => x[axis].clamp(-k, k),
        }
    }
}

/// One side of the comparison: per replication, the trains and the
/// positions they belong to.
pub struct Sample<'a> {
    pub trains: &'a [Vec<SpikeTrain>],
    pub positions: &'a [Vec<Vec<f64>>],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerEstimate {
    pub value: f64,
    pub se: f64,
    pub best: Option<Functional>,
    pub dictionary_version: &'static str,
}

/// `max_g |E<g, P_a> - E<g, P_b>|` over the dictionary, each expectation an
/// average over neurons and replications.
pub fn dkr_dictionary_lower_estimate(a: &Sample<'_>, b: &Sample<'_>, dict: &Dictionary) -> LowerEstimate {
    let averages = |s: &Sample<'_>, g: &Functional| -> Vec<f64> {
        s.trains
            .iter()
            .zip(s.positions)
            .map(|(tr, pos)| {
                tr.iter().map(|z| dict.eval(g, z, &pos[z.neuron])).sum::<f64>() / tr.len().max(1) as f64
            })
            .collect()
    };
    let mut out = LowerEstimate {
        value: 0.0,
        se: 0.0,
        best: None,
        dictionary_version: dict.version,
    };
    for g in &dict.functionals {
        let xa = averages(a, g);
        let xb = averages(b, g);
        let (value, se) = if xa.len() == xb.len() {
            let d: Vec<f64> = xa.iter().zip(&xb).map(|(x, y)| x - y).collect();
            let (m, se) = mean_se(&d);
            (m.abs(), se)
        } else {
            let (ma, sa) = mean_se(&xa);
            let (mb, sb) = mean_se(&xb);
            ((ma - mb).abs(), (sa * sa + sb * sb).sqrt())
        };
        if value > out.value || out.best.is_none() {
            out.value = value;
            out.se = se;
            out.best = Some(g.clone());
        }
    }
    out
}

/// `sup_y | ||w(y, .)||^2_{L2(rho)} - ||w(y, .)||^2_{L2(rho_r)} |` over the
/// given probe points, with `rho_r` the truncation of `rho` at radius `r`.
pub fn truncated_l2_gap(
    params: &ModelParams,
    rho: &SpatialMeasure,
    r: f64,
    cells_per_axis: usize,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let full = SpatialQuadrature::for_measure(rho, cells_per_axis)?;
    let trunc = truncate_measure(rho, r, cells_per_axis)?;
    let norm2 = |y: &[f64], pts: &[Vec<f64>], wts: &[f64]| -> f64 {
        pts.iter().zip(wts).map(|(x, m)| params.w(y, x).powi(2) * m).sum()
    };
    Ok(probes
        .iter()
        .map(|y| (norm2(y, &full.nodes, &full.weights) - norm2(y, &trunc.points, &trunc.masses)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(neuron: usize, times: &[f64]) -> SpikeTrain {
        SpikeTrain {
            neuron,
            times: times.to_vec(),
            horizon: 1.0,
        }
    }

    #[test]
    fn identical_samples_give_zero() {
        let trains = vec![vec![train(0, &[0.1, 0.7]), train(1, &[0.3])]];
        let pos = vec![vec![vec![0.0], vec![1.0]]];
        let s = Sample {
            trains: &trains,
            positions: &pos,
        };
        let est = dkr_dictionary_lower_estimate(&s, &s, &Dictionary::standard(1.0, 1));
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn extra_event_is_detected() {
        let a = vec![vec![train(0, &[0.1, 0.7]), train(1, &[0.3])]; 3];
        let b = vec![vec![train(0, &[0.1, 0.7, 0.9]), train(1, &[0.3, 0.95])]; 3];
        let pos = vec![vec![vec![0.0], vec![1.0]]; 3];
        let est = dkr_dictionary_lower_estimate(
            &Sample {
                trains: &a,
                positions: &pos,
            },
            &Sample {
                trains: &b,
                positions: &pos,
            },
            &Dictionary::standard(1.0, 1),
        );
        assert_eq!(est.value, 1.0);
        assert_eq!(est.best, Some(Functional::Count { t: 1.0 }));
    }
}
