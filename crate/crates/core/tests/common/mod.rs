#![allow(dead_code)]

use hawkes_field::model::{FiringRateFn, InitialCondition, ModelParams, Norm, SpatialMeasure, SynapticWeightFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn firing_rates() -> Vec<FiringRateFn> {
    vec![
        FiringRateFn::Sigmoid {
            f_max: 1.0,
            gain: 1.0,
            threshold: 0.0,
        },
        FiringRateFn::Sigmoid {
            f_max: 5.0,
            gain: 3.0,
            threshold: 1.5,
        },
        FiringRateFn::PiecewiseLinear {
            slope: 2.0,
            floor: 0.1,
            ceiling: 4.0,
        },
        FiringRateFn::RectifiedLinear {
            slope: 1.0,
            offset: 0.0,
        },
        FiringRateFn::RectifiedLinear {
            slope: 0.7,
            offset: 1.0,
        },
        FiringRateFn::Constant { c: 2.0 },
    ]
}

pub fn weights() -> Vec<SynapticWeightFn> {
    vec![
        SynapticWeightFn::Constant { kappa: -0.7 },
        SynapticWeightFn::Gaussian {
            amplitude: 2.0,
            width: 0.3,
        },
        SynapticWeightFn::MexicanHat {
            a1: 1.5,
            sigma1: 0.2,
            a2: 0.8,
            sigma2: 0.6,
        },
        SynapticWeightFn::SeparableProduct {
            amplitude: -1.2,
            width_pre: 0.5,
            width_post: 0.25,
        },
    ]
}

fn measures() -> Vec<SpatialMeasure> {
    vec![
        SpatialMeasure::UniformBox { d: 1, r: 1.0 },
        SpatialMeasure::Gaussian {
            d: None,
            mean: vec![0.0],
            cov_diag: vec![0.25],
        },
        SpatialMeasure::UniformBox { d: 2, r: 1.0 },
        SpatialMeasure::DiracMixture {
            points: vec![vec![-0.5], vec![0.0], vec![0.7]],
            weights: vec![0.3, 0.3, 0.4],
        },
    ]
}

/// Every firing rate against every weight (24 configs), cycling through
/// leak rates, position laws and initial inputs.
pub fn config_matrix() -> Vec<(String, ModelParams)> {
    let alphas = [0.0, 0.5, 1.0, 2.0];
    let rhos = measures();
    let mut out = Vec::new();
    let mut k = 0;
    for (a, f) in firing_rates().into_iter().enumerate() {
        for (b, w) in weights().into_iter().enumerate() {
            let rho = rhos[k % rhos.len()].clone();
            let d = rho.dim();
            let initial = if k % 2 == 0 {
                InitialCondition::Constant { u: 0.3 }
            } else {
                InitialCondition::GaussianBump {
                    height: 0.8,
                    center: vec![0.1; d],
                    width: 0.4,
                }
            };
            out.push((
                format!("f{a}-w{b}"),
                ModelParams {
                    firing_rate: f.clone(),
                    weight: w,
                    initial,
                    alpha: alphas[(k / 2) % alphas.len()],
                    rho,
                    norm: if k % 3 == 0 { Norm::L2 } else { Norm::Linf },
                },
            ));
            k += 1;
        }
    }
    out
}

/// Count vectors at `t_end` from the time-discretized chain: on each step
/// of length `h` at most one neuron fires, neuron `i` with probability
/// `f(U_i) h`, intensities taken at the start of the step.
pub fn euler_bernoulli_counts(
    params: &ModelParams,
    positions: &[Vec<f64>],
    t_end: f64,
    h: f64,
    replications: usize,
    seed: u64,
) -> Vec<Vec<u32>> {
    let n = positions.len();
    let kick: Vec<Vec<f64>> = positions
        .iter()
        .map(|xj| positions.iter().map(|xi| params.w(xj, xi) / n as f64).collect())
        .collect();
    let u0: Vec<f64> = positions.iter().map(|x| params.u0(x)).collect();
    let steps = (t_end / h).round() as usize;
    let decay = (-params.alpha * h).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rates = vec![0.0; n];
    (0..replications)
        .map(|_| {
            let mut u = u0.clone();
            let mut counts = vec![0u32; n];
            for _ in 0..steps {
                let mut total = 0.0;
                for i in 0..n {
                    rates[i] = params.f(u[i]) * h;
                    total += rates[i];
                }
                let v: f64 = rng.random();
                if v < total {
                    let mut acc = 0.0;
                    let mut j = n - 1;
                    for (i, r) in rates.iter().enumerate() {
                        acc += r;
                        if v < acc {
                            j = i;
                            break;
                        }
                    }
                    counts[j] += 1;
                    for (ui, k) in u.iter_mut().zip(&kick[j]) {
                        *ui += k;
                    }
                }
                for ui in u.iter_mut() {
                    *ui *= decay;
                }
            }
            counts
        })
        .collect()
}

/// Chi-square homogeneity test of two samples of count vectors. Cells with
/// pooled expectation below 5 in either sample are merged into one tail
/// cell. Returns `(statistic, degrees of freedom, p-value)`.
pub fn chi_square_homogeneity(a: &[Vec<u32>], b: &[Vec<u32>]) -> (f64, usize, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::BTreeMap;
    let mut table: BTreeMap<&[u32], (f64, f64)> = BTreeMap::new();
    for v in a {
        table.entry(v).or_default().0 += 1.0;
    }
    for v in b {
        table.entry(v).or_default().1 += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let mut cells = Vec::new();
    let mut tail = (0.0, 0.0);
    for &(x, y) in table.values() {
        let pooled = (x + y) / total;
        if pooled * na.min(nb) >= 5.0 {
            cells.push((x, y));
        } else {
            tail.0 += x;
            tail.1 += y;
        }
    }
    if tail.0 + tail.1 > 0.0 {
        cells.push(tail);
    }
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let pooled = (x + y) / total;
        let (ea, eb) = (pooled * na, pooled * nb);
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = cells.len().saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    (stat, df, p)
}

/// Number of strict increases in a sequence.
pub fn inversions(v: &[f64]) -> usize {
    v.windows(2).filter(|w| w[1] > w[0]).count()
}
