//! Explicit per-neuron Poisson random measures.
//!
//! Neuron `i` is driven by a Poisson measure on `[0, T] x [0, inf)` with
//! Lebesgue intensity. The mark axis is cut into layers `[kB, (k+1)B)`; layer
//! `k` of neuron `i` is a rate-`B` Poisson process on `[0, T]` with uniform
//! marks, read from segment `k` of stream `i`. A point `(t, theta)` is an event
//! of any process whose intensity at `t-` exceeds `theta`, so the finite
//! network and the limit processes see the same noise. Layers above the
//! current intensity bound are skipped; their points would be rejected anyway.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Kicks, SimOptions, SpikeTrain};
use crate::model::ModelParams;
use crate::rng::{SeedKey, Stream};
use crate::{Error, Result};

/// Intensities of the limit processes at the neuron positions.
pub trait LimitIntensity: Sync {
    fn intensity(&self, i: usize, t: f64) -> f64;
    /// Upper bound of `intensity(i, s)` over `s >= t`; nonincreasing in `t`.
    fn bound_after(&self, i: usize, t: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddedOptions {
    /// Width `B` of a mark layer.
    pub layer_rate: f64,
    pub sim: SimOptions,
}

impl Default for EmbeddedOptions {
    fn default() -> Self {
        Self {
            layer_rate: 1.0,
            sim: SimOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EmbeddedRun {
    pub finite: Option<Vec<SpikeTrain>>,
    pub limit: Option<Vec<SpikeTrain>>,
    /// Drivers `U_i(t-)` at the requested record times, one row per time.
    pub drivers: Vec<Vec<f64>>,
}

struct Layer {
    stream: Stream,
    next: f64,
    mark: f64,
    active: bool,
}

impl Layer {
    fn new(key: &SeedKey, neuron: usize, k: usize, rate: f64) -> Self {
        let mut l = Layer {
            stream: key.segment(neuron as u64, k as u64),
            next: 0.0,
            mark: 0.0,
            active: false,
        };
        l.step(rate);
        l
    }

    #[inline]
    fn step(&mut self, rate: f64) {
        self.next += self.stream.exp1() / rate;
        self.mark = self.stream.uniform();
    }

    fn advance_past(&mut self, t: f64, rate: f64) {
        while self.next <= t {
            self.step(rate);
        }
    }
}

#[derive(PartialEq)]
struct Candidate {
    t: f64,
    neuron: usize,
    layer: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.neuron.cmp(&self.neuron))
            .then_with(|| other.layer.cmp(&self.layer))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Neuron {
    base: f64,
    mem: f64,
    mem_t: f64,
    layers: Vec<Layer>,
    cap: f64,
}

impl Neuron {
    #[inline]
    fn driver(&self, alpha: f64, t: f64) -> f64 {
        (-alpha * t).exp() * self.base + self.mem * (-alpha * (t - self.mem_t)).exp()
    }
}

fn layers_needed(bound: f64, b: f64) -> usize {
    if bound <= 0.0 {
        0
    } else {
        (bound / b).ceil() as usize
    }
}

/// Runs the finite network (if `finite`) and the limit processes (if `limit`
/// is given) on the Poisson measures of `key`, recording the finite drivers at
/// `record_times` (sorted).
pub fn simulate_embedded(
    params: &ModelParams,
    positions: &[Vec<f64>],
    t_end: f64,
    key: SeedKey,
    finite: bool,
    limit: Option<&dyn LimitIntensity>,
    record_times: &[f64],
    opts: EmbeddedOptions,
) -> Result<EmbeddedRun> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::invalid("positions", "need at least one neuron"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("T", format!("must be positive, got {t_end}")));
    }
    let b = opts.layer_rate;
    let alpha = params.alpha;
    let f = &params.firing_rate;
    let (f0, lf) = (f.value_at_zero(), f.lip_const());
    let kicks = Kicks::new(params, positions);
    let mut neurons: Vec<Neuron> = positions
        .iter()
        .map(|x| Neuron {
            base: params.u0(x),
            mem: 0.0,
            mem_t: 0.0,
            layers: Vec::new(),
            cap: 0.0,
        })
        .collect();
    let mut fin_trains: Vec<SpikeTrain> = (0..n).map(|i| SpikeTrain::new(i, t_end)).collect();
    let mut lim_trains: Vec<SpikeTrain> = (0..n).map(|i| SpikeTrain::new(i, t_end)).collect();
    let mut drivers = Vec::with_capacity(record_times.len());
    let mut next_record = 0usize;
    let mut heap = BinaryHeap::new();

    let bound_of = |nr: &Neuron, i: usize, t: f64| -> f64 {
        let bf = if finite {
            f0 + lf * nr.driver(alpha, t).abs()
        } else {
            0.0
        };
        let bl = limit.map_or(0.0, |l| l.bound_after(i, t));
        bf.max(bl)
    };

    // Activates the layers required at time t; returns the refreshed bound.
    let refresh = |nr: &mut Neuron,
                   i: usize,
                   t: f64,
                   heap: &mut BinaryHeap<Candidate>|
     -> Result<f64> {
        let bound = bound_of(nr, i, t);
        if !bound.is_finite() || bound > opts.sim.rate_cap {
            return Err(Error::Explosion {
                time: t,
                reason: format!("intensity bound {bound:e} of neuron {i} exceeds {:e}", opts.sim.rate_cap),
            });
        }
        let need = layers_needed(bound, b);
        for k in 0..need {
            if k == nr.layers.len() {
                nr.layers.push(Layer::new(&key, i, k, b));
            }
            let layer = &mut nr.layers[k];
            if !layer.active {
                layer.advance_past(t, b);
                layer.active = true;
                heap.push(Candidate {
                    t: layer.next,
                    neuron: i,
                    layer: k,
                });
            }
        }
        nr.cap = bound;
        Ok(bound)
    };

    let mut dominating = 0.0;
    for (i, nr) in neurons.iter_mut().enumerate() {
        dominating += refresh(nr, i, 0.0, &mut heap)?;
    }
    if dominating > opts.sim.rate_cap {
        return Err(Error::Explosion {
            time: 0.0,
            reason: format!("dominating rate {dominating:e} exceeds {:e}", opts.sim.rate_cap),
        });
    }

    let mut candidates = 0u64;
    while let Some(c) = heap.pop() {
        if c.t > t_end {
            break;
        }
        candidates += 1;
        if candidates > opts.sim.max_candidates {
            return Err(Error::Explosion {
                time: c.t,
                reason: format!("more than {} candidate points", opts.sim.max_candidates),
            });
        }
        while next_record < record_times.len() && record_times[next_record] <= c.t {
            let tr = record_times[next_record];
            drivers.push(neurons.iter().map(|nr| nr.driver(alpha, tr)).collect());
            next_record += 1;
        }
        let i = c.neuron;
        let nr = &mut neurons[i];
        let theta = (c.layer as f64 + nr.layers[c.layer].mark) * b;
        let tol = nr.cap * 1e-12;

        let mut fire = false;
        if finite {
            let rate = f.eval(nr.driver(alpha, c.t));
            if rate > nr.cap + tol {
                return Err(Error::Verification(format!(
                    "intensity {rate} of neuron {i} above its bound {} at t = {}",
                    nr.cap, c.t
                )));
            }
            fire = theta < rate;
        }
        if let Some(l) = limit {
            let rate = l.intensity(i, c.t);
            if rate > nr.cap + tol {
                return Err(Error::Verification(format!(
                    "limit intensity {rate} of neuron {i} above its bound {} at t = {}",
                    nr.cap, c.t
                )));
            }
            if theta < rate {
                lim_trains[i].times.push(c.t);
            }
        }

        let now = bound_of(nr, i, c.t);
        let layer = &mut nr.layers[c.layer];
        if (c.layer as f64) * b < now {
            layer.step(b);
            heap.push(Candidate {
                t: layer.next,
                neuron: i,
                layer: c.layer,
            });
        } else {
            layer.active = false;
        }

        if fire {
            fin_trains[i].times.push(c.t);
            if let Some(row) = kicks.row(i) {
                for (j, nj) in neurons.iter_mut().enumerate() {
                    nj.mem = nj.mem * (-alpha * (c.t - nj.mem_t)).exp() + row[j];
                    nj.mem_t = c.t;
                    refresh(nj, j, c.t, &mut heap)?;
                }
            }
        }
    }
    while next_record < record_times.len() && record_times[next_record] <= t_end {
        let tr = record_times[next_record];
        drivers.push(neurons.iter().map(|nr| nr.driver(alpha, tr)).collect());
        next_record += 1;
    }

    Ok(EmbeddedRun {
        finite: finite.then_some(fin_trains),
        limit: limit.is_some().then_some(lim_trains),
        drivers,
    })
}

/// One inhomogeneous Poisson process read from stream `neuron` of `key`;
/// reproduces the limit train of that neuron in [`simulate_embedded`].
pub fn thin_single(
    intensity: impl Fn(f64) -> f64,
    bound_after: impl Fn(f64) -> f64,
    t_end: f64,
    key: SeedKey,
    neuron: usize,
    layer_rate: f64,
) -> Result<SpikeTrain> {
    let b = layer_rate;
    let mut train = SpikeTrain::new(neuron, t_end);
    let bound0 = bound_after(0.0);
    if !bound0.is_finite() {
        return Err(Error::Explosion {
            time: 0.0,
            reason: "non-finite intensity bound".into(),
        });
    }
    let mut heap = BinaryHeap::new();
    let mut layers: Vec<Layer> = (0..layers_needed(bound0, b))
        .map(|k| Layer::new(&key, neuron, k, b))
        .collect();
    for (k, l) in layers.iter_mut().enumerate() {
        l.active = true;
        heap.push(Candidate {
            t: l.next,
            neuron,
            layer: k,
        });
    }
    while let Some(c) = heap.pop() {
        if c.t > t_end {
            break;
        }
        let layer = &mut layers[c.layer];
        let theta = (c.layer as f64 + layer.mark) * b;
        if theta < intensity(c.t) {
            train.times.push(c.t);
        }
        if (c.layer as f64) * b < bound_after(c.t) {
            layer.step(b);
            heap.push(Candidate {
                t: layer.next,
                neuron,
                layer: c.layer,
            });
        }
    }
    Ok(train)
}
