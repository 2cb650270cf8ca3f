//! Limit intensity, neural field equation and limit Poisson processes.

mod limit_process;
mod neural_field;
mod picard;
mod quadrature;

use std::io::Write;

use serde::Serialize;

pub use limit_process::{simulate_limit_process, NodeProfile};
pub use neural_field::integrate_neural_field;
pub use picard::{
    check_integrability, lambda_space_lipschitz_bound, membrane_potential, memory_integrals,
    picard_map, solve_limit_intensity, IntensityField, LimitSolution, PotentialField,
    SolverOptions, TimeGrid,
};
pub use quadrature::SpatialQuadrature;

pub(crate) use picard::trapezoid;

/// Header written next to a field CSV.
#[derive(Clone, Debug, Serialize)]
pub struct FieldHeader<'a> {
    pub kind: &'a str,
    pub dt: f64,
    pub steps: usize,
    pub horizon: f64,
    pub nodes: &'a [Vec<f64>],
    pub sup_norm: f64,
}

/// CSV rows `t,node,x_0..x_{d-1},value`.
pub fn write_field_csv<W: Write>(
    out: &mut W,
    grid: TimeGrid,
    nodes: &[Vec<f64>],
    values: &[Vec<f64>],
) -> std::io::Result<()> {
    let d = nodes.first().map_or(0, Vec::len);
    write!(out, "t,node")?;
    for k in 0..d {
        write!(out, ",x{k}")?;
    }
    writeln!(out, ",value")?;
    for (k, row) in values.iter().enumerate() {
        let t = grid.t(k);
        for (p, v) in row.iter().enumerate() {
            write!(out, "{t:.16e},{p}")?;
            for c in &nodes[p] {
                write!(out, ",{c:.16e}")?;
            }
            writeln!(out, ",{v:.16e}")?;
        }
    }
    Ok(())
}
