use rayon::prelude::*;
use serde::Serialize;

use super::SpatialQuadrature;
use crate::model::{contraction_constant, decay_integral, ModelParams};
use crate::{Error, Result};

/// Uniform time grid `t_k = k dt`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid covering `[0, t_end]` with step at most `dt`.
    pub fn covering(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::invalid("T", format!("must be positive, got {t_end}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            dt: t_end / steps as f64,
            steps,
        })
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.t(k)).collect()
    }
}

/// `lambda(t_k, x_p)` on a time grid and evaluation nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityField {
    pub grid: TimeGrid,
    pub nodes: Vec<Vec<f64>>,
    /// `values[k][p]`.
    pub values: Vec<Vec<f64>>,
    pub sup_norm: f64,
}

impl IntensityField {
    pub fn from_values(grid: TimeGrid, nodes: Vec<Vec<f64>>, values: Vec<Vec<f64>>) -> Self {
        let sup_norm = values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            grid,
            nodes,
            values,
            sup_norm,
        }
    }

    /// Trapezoid rule for `∫_0^T lambda(t, x_p) dt` at every node.
    pub fn time_integrals(&self) -> Vec<f64> {
        let dt = self.grid.dt;
        (0..self.nodes.len())
            .map(|p| {
                let v: Vec<f64> = self.values.iter().map(|row| row[p]).collect();
                trapezoid(&v, dt)
            })
            .collect()
    }
}

/// Membrane potential `u(t_k, x_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub grid: TimeGrid,
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

pub(crate) fn trapezoid(v: &[f64], dt: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    dt * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

/// Memory integrals `I_m(t_k) = ∫_0^{t_k} e^{-alpha (t_k - s)} lambda(s, y_m) ds`
/// by the exponential recursion with a trapezoid increment.
pub fn memory_integrals(lambda: &IntensityField, alpha: f64) -> Vec<Vec<f64>> {
    let m = lambda.nodes.len();
    let dt = lambda.grid.dt;
    let g = (-alpha * dt).exp();
    let mut out = Vec::with_capacity(lambda.grid.steps + 1);
    let mut cur = vec![0.0; m];
    out.push(cur.clone());
    for k in 0..lambda.grid.steps {
        for (i, c) in cur.iter_mut().enumerate() {
            *c = g * *c + 0.5 * dt * (g * lambda.values[k][i] + lambda.values[k + 1][i]);
        }
        out.push(cur.clone());
    }
    out
}

/// `e^{-alpha t_k} u0(x_p) + sum_m w(y_m, x_p) rho_m I_m(t_k)`.
fn potentials(
    params: &ModelParams,
    kernel: &[Vec<f64>],
    baseline: &[f64],
    memory: &[Vec<f64>],
    grid: TimeGrid,
    range: std::ops::Range<usize>,
) -> Vec<Vec<f64>> {
    range
        .into_par_iter()
        .map(|k| {
            let decay = (-params.alpha * grid.t(k)).exp();
            kernel
                .iter()
                .zip(baseline)
                .map(|(row, b)| {
                    let mem: f64 = row.iter().zip(&memory[k]).map(|(w, i)| w * i).sum();
                    decay * b + mem
                })
                .collect()
        })
        .collect()
}

fn check_grid(lambda: &IntensityField, quad: &SpatialQuadrature) -> Result<()> {
    if lambda.nodes.len() != quad.len() || lambda.values.len() != lambda.grid.steps + 1 {
        return Err(Error::GridMismatch(format!(
            "field has {} nodes and {} time points, quadrature has {} nodes and the grid {} steps",
            lambda.nodes.len(),
            lambda.values.len(),
            quad.len(),
            lambda.grid.steps
        )));
    }
    if lambda.nodes != quad.nodes {
        return Err(Error::GridMismatch(
            "field nodes differ from quadrature nodes".into(),
        ));
    }
    Ok(())
}

/// One application of the fixed-point map on the quadrature nodes.
pub fn picard_map(
    lambda: &IntensityField,
    params: &ModelParams,
    quad: &SpatialQuadrature,
) -> Result<IntensityField> {
    check_grid(lambda, quad)?;
    let kernel = quad.weighted_kernel(params, &quad.nodes);
    let baseline: Vec<f64> = quad.nodes.iter().map(|x| params.u0(x)).collect();
    let mem = memory_integrals(lambda, params.alpha);
    let u = potentials(params, &kernel, &baseline, &mem, lambda.grid, 0..lambda.grid.steps + 1);
    let values = u
        .into_iter()
        .map(|row| row.into_iter().map(|v| params.f(v)).collect())
        .collect();
    Ok(IntensityField::from_values(
        lambda.grid,
        lambda.nodes.clone(),
        values,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub dt: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Target contraction constant of a window when the horizon is split.
    pub window_constant: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            tol: 1e-8,
            max_iter: 200,
            window_constant: 0.5,
        }
    }
}

/// Solved limit intensity with the memory integrals needed to evaluate it at
/// new points.
#[derive(Clone, Debug)]
pub struct LimitSolution {
    pub field: IntensityField,
    pub quad: SpatialQuadrature,
    /// `memory[k][m] = I_m(t_k)`.
    pub memory: Vec<Vec<f64>>,
    pub w_l1_sup: f64,
    /// Contraction constant on the full horizon.
    pub contraction: f64,
    /// Contraction constant of each window.
    pub window_contraction: f64,
    /// Grid index ranges `(start, end)` of the windows.
    pub windows: Vec<(usize, usize)>,
    /// Sup-grid change per iteration, per window.
    pub residuals: Vec<Vec<f64>>,
}

/// Steps per window so that the window constant stays at most `target`.
fn window_steps(alpha: f64, lw: f64, target: f64, grid: TimeGrid) -> usize {
    if lw <= 0.0 {
        return grid.steps;
    }
    let x = target / lw;
    let len = if alpha < crate::model::ALPHA_SERIES_THRESHOLD {
        x
    } else if alpha * x >= 1.0 {
        f64::INFINITY
    } else {
        -(-alpha * x).ln_1p() / alpha
    };
    ((len / grid.dt).floor() as usize).clamp(1, grid.steps)
}

/// Fixed point of the limit map on `[0, T]`, started from
/// `f(e^{-alpha t} u0(x))`.
pub fn solve_limit_intensity(
    params: &ModelParams,
    quad: &SpatialQuadrature,
    t_end: f64,
    opts: SolverOptions,
) -> Result<LimitSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let grid = TimeGrid::covering(t_end, opts.dt)?;
    let m = quad.len();
    let alpha = params.alpha;
    let dt = grid.dt;
    let g = (-alpha * dt).exp();
    let kernel = quad.weighted_kernel(params, &quad.nodes);
    let baseline: Vec<f64> = quad.nodes.iter().map(|x| params.u0(x)).collect();
    let w_l1_sup = quad.w_l1_sup(params, &quad.nodes);
    let contraction = contraction_constant(params, grid.horizon(), w_l1_sup);
    let lf_w = params.firing_rate.lip_const() * w_l1_sup;

    let per_window = if contraction < 1.0 {
        grid.steps
    } else {
        window_steps(alpha, lf_w, opts.window_constant, grid)
    };
    let window_contraction = decay_integral(alpha, per_window as f64 * dt) * lf_w;

    let mut values: Vec<Vec<f64>> = (0..=grid.steps)
        .map(|k| {
            let decay = (-alpha * grid.t(k)).exp();
            baseline.iter().map(|b| params.f(decay * b)).collect()
        })
        .collect();
    let mut memory = vec![vec![0.0; m]; grid.steps + 1];
    let mut windows = Vec::new();
    let mut residuals = Vec::new();

    let mut start = 0;
    while start < grid.steps {
        let end = (start + per_window).min(grid.steps);
        windows.push((start, end));
        let mut history = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_iter {
            for k in start..end {
                for i in 0..m {
                    memory[k + 1][i] = g * memory[k][i]
                        + 0.5 * dt * (g * values[k][i] + values[k + 1][i]);
                }
            }
            let u = potentials(params, &kernel, &baseline, &memory, grid, start + 1..end + 1);
            let mut res = 0.0f64;
            for (row, k) in u.into_iter().zip(start + 1..end + 1) {
                for (p, v) in row.into_iter().enumerate() {
                    let new = params.f(v);
                    res = res.max((new - values[k][p]).abs());
                    values[k][p] = new;
                }
            }
            if !res.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: history.len() + 1,
                    residual: res,
                });
            }
            history.push(res);
            if res <= opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: opts.max_iter,
                residual: history.last().copied().unwrap_or(f64::NAN),
            });
        }
        // memory consistent with the final iterate
        for k in start..end {
            for i in 0..m {
                memory[k + 1][i] =
                    g * memory[k][i] + 0.5 * dt * (g * values[k][i] + values[k + 1][i]);
            }
        }
        residuals.push(history);
        start = end;
    }

    let field = IntensityField::from_values(grid, quad.nodes.clone(), values);
    check_integrability(&field, quad)?;
    Ok(LimitSolution {
        field,
        quad: quad.clone(),
        memory,
        w_l1_sup,
        contraction,
        window_contraction,
        windows,
        residuals,
    })
}

/// `sum_p rho_p [(∫ lambda)^2 + ∫ lambda]`; errors unless finite, and rejects
/// negative or non-finite grid values.
pub fn check_integrability(field: &IntensityField, quad: &SpatialQuadrature) -> Result<f64> {
    if field
        .values
        .iter()
        .flatten()
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::Structural(
            "limit intensity has negative or non-finite values".into(),
        ));
    }
    let total: f64 = field
        .time_integrals()
        .iter()
        .zip(&quad.weights)
        .map(|(i, r)| r * (i * i + i))
        .sum();
    if !total.is_finite() {
        return Err(Error::Structural(
            "limit intensity fails the integrability check".into(),
        ));
    }
    Ok(total)
}

/// Membrane potential of a solved intensity by the same recursion.
pub fn membrane_potential(
    lambda: &IntensityField,
    params: &ModelParams,
    quad: &SpatialQuadrature,
) -> Result<PotentialField> {
    check_grid(lambda, quad)?;
    let kernel = quad.weighted_kernel(params, &quad.nodes);
    let baseline: Vec<f64> = quad.nodes.iter().map(|x| params.u0(x)).collect();
    let mem = memory_integrals(lambda, params.alpha);
    Ok(PotentialField {
        grid: lambda.grid,
        nodes: lambda.nodes.clone(),
        values: potentials(params, &kernel, &baseline, &mem, lambda.grid, 0..lambda.grid.steps + 1),
    })
}

/// `L_f (L_{u0} + lambda_sup (1 - e^{-alpha T}) / alpha L_w)`: Lipschitz
/// constant of `x -> lambda(t, x)`, uniform in `t <= T`.
pub fn lambda_space_lipschitz_bound(params: &ModelParams, lambda_sup: f64, t_end: f64) -> f64 {
    params.firing_rate.lip_const()
        * (params.initial.lip_const()
            + lambda_sup * decay_integral(params.alpha, t_end) * params.weight.lip_const())
}
