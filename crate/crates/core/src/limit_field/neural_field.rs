use super::{PotentialField, SpatialQuadrature, TimeGrid};
use crate::model::{decay_integral, ModelParams};
use crate::Result;

/// Exponential Euler for `du/dt = -alpha u + ∫ w(y, x) f(u(t, y)) rho(dy)` on
/// the quadrature nodes. The deterministic part `e^{-alpha t} u0` is carried
/// exactly and only the interaction term is stepped.
pub fn integrate_neural_field(
    params: &ModelParams,
    quad: &SpatialQuadrature,
    t_end: f64,
    dt: f64,
) -> Result<PotentialField> {
    let grid = TimeGrid::covering(t_end, dt)?;
    let kernel = quad.weighted_kernel(params, &quad.nodes);
    let baseline: Vec<f64> = quad.nodes.iter().map(|x| params.u0(x)).collect();
    let g = (-params.alpha * grid.dt).exp();
    let phi = decay_integral(params.alpha, grid.dt);
    let m = quad.len();
    let mut v = vec![0.0; m];
    let mut values = Vec::with_capacity(grid.steps + 1);
    values.push(baseline.clone());
    let mut rates = vec![0.0; m];
    for k in 0..grid.steps {
        for (r, u) in rates.iter_mut().zip(&values[k]) {
            *r = params.f(*u);
        }
        for (p, vp) in v.iter_mut().enumerate() {
            let drive: f64 = kernel[p].iter().zip(&rates).map(|(w, r)| w * r).sum();
            *vp = g * *vp + phi * drive;
        }
        let decay = (-params.alpha * grid.t(k + 1)).exp();
        values.push(baseline.iter().zip(&v).map(|(b, vp)| decay * b + vp).collect());
    }
    Ok(PotentialField {
        grid,
        nodes: quad.nodes.clone(),
        values,
    })
}
