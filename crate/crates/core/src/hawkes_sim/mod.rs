//! Exact simulation of the finite network.
//!
//! The membrane driver of neuron `i` is stored as `e^{-alpha t} u0(x_i) + M_i`
//! where the memory `M_i` collects the decayed kicks. Between events only the
//! exponential factor changes, so `|U_i|` is nonincreasing and
//! `f(0) + L_f |U_i|` stays a valid upper bound for the rate until the next
//! accepted event.
//!
//! Two samplers share this representation:
//! * [`simulate_network`] runs one global Poisson clock of rate
//!   `sum_i (f(0) + L_f |U_i|)` and thins it.
//! * [`embedded`] realizes each neuron's driving Poisson measure explicitly from
//!   its own stream, which lets several processes read the same noise.

pub mod embedded;

use std::io::Write;

use serde::Serialize;

use crate::model::{FiringRateFn, ModelParams};
use crate::rng::{SeedKey, NETWORK_STREAM};
use crate::{Error, Result};

/// Event times of one counting process on `(0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpikeTrain {
    pub neuron: usize,
    pub times: Vec<f64>,
    pub horizon: f64,
}

impl SpikeTrain {
    pub fn new(neuron: usize, horizon: f64) -> Self {
        Self {
            neuron,
            times: Vec::new(),
            horizon,
        }
    }

    pub fn count(&self) -> usize {
        self.times.len()
    }

    /// `Z(t)`: number of events in `(0, t]`.
    pub fn count_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    pub fn is_valid(&self) -> bool {
        self.times.windows(2).all(|w| w[0] < w[1])
            && self.times.iter().all(|&s| s > 0.0 && s <= self.horizon)
    }
}

/// Kick matrix `w(x_j, x_i) / N`, row `j` holding the kicks sent by neuron `j`.
#[derive(Clone, Debug)]
pub struct Kicks {
    n: usize,
    values: Vec<f64>,
    zero: bool,
}

impl Kicks {
    pub fn new(params: &ModelParams, positions: &[Vec<f64>]) -> Self {
        let n = positions.len();
        let inv = 1.0 / n as f64;
        let zero = params.weight.is_zero();
        let values = if zero {
            Vec::new()
        } else {
            let mut v = Vec::with_capacity(n * n);
            for xj in positions {
                for xi in positions {
                    v.push(params.w(xj, xi) * inv);
                }
            }
            v
        };
        Self { n, values, zero }
    }

    #[inline]
    pub fn row(&self, j: usize) -> Option<&[f64]> {
        (!self.zero).then(|| &self.values[j * self.n..(j + 1) * self.n])
    }
}

/// Markovian state of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub t: f64,
    pub positions: Vec<Vec<f64>>,
    /// `u0(x_i)`; the deterministic part of the driver is `e^{-alpha t}` times this.
    pub baseline: Vec<f64>,
    pub memory: Vec<f64>,
    pub counts: Vec<u64>,
    pub alpha: f64,
}

impl NetworkState {
    pub fn new(params: &ModelParams, positions: &[Vec<f64>]) -> Self {
        Self {
            t: 0.0,
            positions: positions.to_vec(),
            baseline: positions.iter().map(|x| params.u0(x)).collect(),
            memory: vec![0.0; positions.len()],
            counts: vec![0; positions.len()],
            alpha: params.alpha,
        }
    }

    /// State at time 0 with the given drivers and no deterministic part.
    pub fn from_drivers(alpha: f64, positions: Vec<Vec<f64>>, drivers: Vec<f64>) -> Self {
        let n = drivers.len();
        Self {
            t: 0.0,
            positions,
            baseline: vec![0.0; n],
            memory: drivers,
            counts: vec![0; n],
            alpha,
        }
    }

    pub fn len(&self) -> usize {
        self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_empty()
    }

    #[inline]
    pub fn driver(&self, i: usize) -> f64 {
        (-self.alpha * self.t).exp() * self.baseline[i] + self.memory[i]
    }

    pub fn drivers(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.driver(i)).collect()
    }

    /// Pure decay over `delta >= 0`.
    pub fn decay_state(&mut self, delta: f64) {
        debug_assert!(delta >= 0.0);
        if delta == 0.0 {
            return;
        }
        self.t += delta;
        if self.alpha != 0.0 {
            let g = (-self.alpha * delta).exp();
            for m in &mut self.memory {
                *m *= g;
            }
        }
    }

    /// Event of neuron `j`: every driver receives `w(x_j, x_i) / N`.
    pub fn apply_jump(&mut self, kicks: &Kicks, j: usize) {
        if let Some(row) = kicks.row(j) {
            for (m, k) in self.memory.iter_mut().zip(row) {
                *m += k;
            }
        }
        self.counts[j] += 1;
    }
}

/// `sum_i (f(0) + L_f |U_i|)`.
pub fn dominating_rate(state: &NetworkState, f: &FiringRateFn) -> f64 {
    let (f0, lf) = (f.value_at_zero(), f.lip_const());
    (0..state.len())
        .map(|i| f0 + lf * state.driver(i).abs())
        .sum()
}

/// Guards against runaway excitation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    /// Abort when the dominating rate exceeds this many events per unit time.
    pub rate_cap: f64,
    /// Abort after this many candidate points.
    pub max_candidates: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            rate_cap: 1e12,
            max_candidates: 200_000_000,
        }
    }
}

/// Exact sample of the network on `[0, t_end]` by global thinning, drawn from
/// the network stream of `key`.
pub fn simulate_network(
    params: &ModelParams,
    positions: &[Vec<f64>],
    t_end: f64,
    key: SeedKey,
) -> Result<Vec<SpikeTrain>> {
    simulate_network_with(params, positions, t_end, key, SimOptions::default())
}

pub fn simulate_network_with(
    params: &ModelParams,
    positions: &[Vec<f64>],
    t_end: f64,
    key: SeedKey,
    opts: SimOptions,
) -> Result<Vec<SpikeTrain>> {
    if positions.is_empty() {
        return Err(Error::invalid("positions", "need at least one neuron"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {t_end}")));
    }
    let f = &params.firing_rate;
    let kicks = Kicks::new(params, positions);
    let mut state = NetworkState::new(params, positions);
    let mut trains: Vec<SpikeTrain> = (0..positions.len())
        .map(|i| SpikeTrain::new(i, t_end))
        .collect();
    let mut rng = key.stream(NETWORK_STREAM);
    let mut rates = vec![0.0; positions.len()];
    let mut candidates = 0u64;
    loop {
        let bound = dominating_rate(&state, f);
        if !bound.is_finite() || bound > opts.rate_cap {
            return Err(Error::Explosion {
                time: state.t,
                reason: format!("dominating rate {bound:e} exceeds {:e}", opts.rate_cap),
            });
        }
        if bound == 0.0 {
            break;
        }
        let dt = rng.exponential(bound);
        if state.t + dt > t_end {
            break;
        }
        candidates += 1;
        if candidates > opts.max_candidates {
            return Err(Error::Explosion {
                time: state.t,
                reason: format!("more than {} candidate events", opts.max_candidates),
            });
        }
        state.decay_state(dt);
        let mut total = 0.0;
        for (i, r) in rates.iter_mut().enumerate() {
            *r = f.eval(state.driver(i));
            total += *r;
        }
        if total > bound * (1.0 + 1e-12) {
            return Err(Error::Verification(format!(
                "intensity {total} above dominating rate {bound} at t = {}",
                state.t
            )));
        }
        // conditionally on acceptance, v * bound is uniform on [0, total)
        let target = rng.uniform() * bound;
        if target >= total {
            continue;
        }
        let j = select(&rates, target);
        state.apply_jump(&kicks, j);
        trains[j].times.push(state.t);
    }
    Ok(trains)
}

/// First index whose prefix sum exceeds `target`.
fn select(rates: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r > 0.0 {
            acc += r;
            last = i;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// `sup_j |w(x_j, .)|` in `L^1(mu_N)` and `L^2(mu_N)`.
pub fn empirical_weight_norms(params: &ModelParams, positions: &[Vec<f64>]) -> (f64, f64) {
    let n = positions.len() as f64;
    let mut l1 = 0.0f64;
    let mut l2 = 0.0f64;
    for xj in positions {
        let (mut a, mut b) = (0.0, 0.0);
        for xi in positions {
            let w = params.w(xj, xi);
            a += w.abs();
            b += w * w;
        }
        l1 = l1.max(a / n);
        l2 = l2.max((b / n).sqrt());
    }
    (l1, l2)
}

/// Upper bound on `(1/N) sum_i E[Z_i(T)]`.
pub fn moment_bound_first(params: &ModelParams, positions: &[Vec<f64>], t_end: f64) -> f64 {
    let (l1, _) = empirical_weight_norms(params, positions);
    first_bound_from(params, l1, t_end)
}

fn first_bound_from(params: &ModelParams, l1: f64, t_end: f64) -> f64 {
    let f = &params.firing_rate;
    let lf = f.lip_const();
    t_end * (f.value_at_zero() + lf * params.initial.sup_norm()) * (t_end * lf * l1).exp()
}

/// Upper bound on `(1/N) sum_i E[Z_i(T)^2]`.
pub fn moment_bound_second(params: &ModelParams, positions: &[Vec<f64>], t_end: f64) -> f64 {
    let (l1, l2) = empirical_weight_norms(params, positions);
    let f = &params.firing_rate;
    let (f0, lf, u) = (f.value_at_zero(), f.lip_const(), params.initial.sup_norm());
    (t_end * (1.0 + 4.0 * lf * lf * l2 * l2)).exp()
        * (first_bound_from(params, l1, t_end)
            + 2.0 * t_end * f0 * f0
            + 4.0 * lf * lf * t_end * u * u)
}

/// CSV rows `replication,neuron,x_0..x_{d-1},event_time`.
pub fn write_spike_csv<W: Write>(
    out: &mut W,
    replication: usize,
    trains: &[SpikeTrain],
    positions: &[Vec<f64>],
) -> std::io::Result<()> {
    for tr in trains {
        let pos = &positions[tr.neuron];
        for &t in &tr.times {
            write!(out, "{},{}", replication, tr.neuron)?;
            for c in pos {
                write!(out, ",{c:.16e}")?;
            }
            writeln!(out, ",{t:.16e}")?;
        }
    }
    Ok(())
}

pub fn spike_csv_header(dim: usize) -> String {
    let mut h = String::from("replication,neuron");
    for k in 0..dim {
        h.push_str(&format!(",x{k}"));
    }
    h.push_str(",event_time");
    h
}
