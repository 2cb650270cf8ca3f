use super::LimitSolution;
use crate::hawkes_sim::embedded::{thin_single, LimitIntensity};
use crate::hawkes_sim::SpikeTrain;
use crate::model::ModelParams;
use crate::rng::SeedKey;
use crate::Result;

/// Limit intensity `lambda(t, x_i)` at fixed positions, evaluated by one
/// application of the limit map at each `x_i` (no spatial interpolation) and
/// linear interpolation of the memory term in time.
#[derive(Clone, Debug)]
pub struct NodeProfile {
    params: ModelParams,
    dt: f64,
    steps: usize,
    baseline: Vec<f64>,
    /// `memory[i][k] = sum_m w(y_m, x_i) rho_m I_m(t_k)`.
    memory: Vec<Vec<f64>>,
    /// `suffix[i][k]`: bound of `lambda(s, x_i)` for `s >= t_k`.
    suffix: Vec<Vec<f64>>,
}

impl NodeProfile {
    pub fn new(params: &ModelParams, solution: &LimitSolution, positions: &[Vec<f64>]) -> Self {
        let grid = solution.field.grid;
        let kernel = solution.quad.weighted_kernel(params, positions);
        let memory: Vec<Vec<f64>> = kernel
            .iter()
            .map(|row| {
                solution
                    .memory
                    .iter()
                    .map(|im| row.iter().zip(im).map(|(w, i)| w * i).sum())
                    .collect()
            })
            .collect();
        let baseline: Vec<f64> = positions.iter().map(|x| params.u0(x)).collect();
        let lf = params.firing_rate.lip_const();
        let suffix = memory
            .iter()
            .zip(&baseline)
            .map(|(mem, &b)| {
                let mut s = vec![0.0; grid.steps + 1];
                let mut run = 0.0f64;
                for k in (0..=grid.steps).rev() {
                    let k1 = (k + 1).min(grid.steps);
                    let (d0, d1) = (
                        (-params.alpha * grid.t(k)).exp() * b,
                        (-params.alpha * grid.t(k1)).exp() * b,
                    );
                    let lo = d0.min(d1) + mem[k].min(mem[k1]);
                    let hi = d0.max(d1) + mem[k].max(mem[k1]);
                    let bound = params.f(0.5 * (lo + hi)) + lf * 0.5 * (hi - lo);
                    run = run.max(bound);
                    s[k] = run;
                }
                s
            })
            .collect();
        Self {
            params: params.clone(),
            dt: grid.dt,
            steps: grid.steps,
            baseline,
            memory,
            suffix,
        }
    }

    pub fn len(&self) -> usize {
        self.baseline.len()
    }

    pub fn is_empty(&self) -> bool {
        self.baseline.is_empty()
    }

    /// `u(t, x_i)`.
    pub fn potential(&self, i: usize, t: f64) -> f64 {
        let pos = (t / self.dt).max(0.0);
        let k = (pos.floor() as usize).min(self.steps);
        let mem = if k >= self.steps {
            self.memory[i][self.steps]
        } else {
            let s = pos - k as f64;
            (1.0 - s) * self.memory[i][k] + s * self.memory[i][k + 1]
        };
        (-self.params.alpha * t).exp() * self.baseline[i] + mem
    }

    pub fn suffix_bound(&self, i: usize, t: f64) -> f64 {
        let k = ((t / self.dt).max(0.0).floor() as usize).min(self.steps);
        self.suffix[i][k]
    }

    /// `∫_0^T lambda(t, x_i) dt` on the solver grid.
    pub fn integrated(&self, i: usize) -> f64 {
        super::picard::trapezoid(&self.grid_values(i), self.dt)
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `lambda(t_k, x_i)` on the solver grid.
    pub fn grid_values(&self, i: usize) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.intensity(i, k as f64 * self.dt))
            .collect()
    }

    /// `∫_0^T sum_m w(y_m, x_i) rho_m I_m(t) dt`.
    pub fn memory_integral(&self, i: usize) -> f64 {
        super::picard::trapezoid(&self.memory[i], self.dt)
    }
}

impl LimitIntensity for NodeProfile {
    fn intensity(&self, i: usize, t: f64) -> f64 {
        self.params.f(self.potential(i, t))
    }

    fn bound_after(&self, i: usize, t: f64) -> f64 {
        self.suffix_bound(i, t)
    }
}

/// Inhomogeneous Poisson process with intensity `lambda(., x_i)`, read from
/// the stream of neuron `i`.
pub fn simulate_limit_process(
    profile: &NodeProfile,
    i: usize,
    t_end: f64,
    key: SeedKey,
    layer_rate: f64,
) -> Result<SpikeTrain> {
    thin_single(
        |t| profile.intensity(i, t),
        |t| profile.suffix_bound(i, t),
        t_end,
        key,
        i,
        layer_rate,
    )
}
