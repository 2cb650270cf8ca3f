//! Deterministic position sets with a certified Wasserstein rate.
//!
//! The measure is truncated to the cube `[-r, r]^d` (mass outside moves to the
//! origin), then `N` cubes are peeled off greedily: with residual mass `k/N`,
//! the cube is cut into `floor(k^{1/d})^d` subcubes, one of which carries at
//! least `1/N` by pigeonhole. That subcube gives up exactly `1/N` and its
//! center becomes a position. All geometry uses the max-coordinate norm.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::model::{Norm, SpatialMeasure, DEFAULT_EXP_MOMENT_RATE};
use crate::{Error, Result};

/// Ties between subcube masses closer than this go to the first subcube.
const TIE_TOL: f64 = 1e-12;

/// `rho` restricted to `[-r, r]^d` plus the compensating atom at the origin,
/// held as weighted atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedMeasure {
    pub r: f64,
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    /// `1 - rho([-r, r]^d)`, carried by an atom at the origin.
    pub atom_weight: f64,
    /// Side of the raster cells the atoms stand for; 0 when the atoms are exact.
    pub cell_side: f64,
    /// Exponential moment `E_beta` used in the tail bound.
    pub exp_moment: f64,
    /// `E_beta r^2 e^{-beta r}`.
    pub tail_bound: f64,
}

impl TruncatedMeasure {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

pub fn truncate_measure(rho: &SpatialMeasure, r: f64, cells_per_axis: usize) -> Result<TruncatedMeasure> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("truncation radius must be positive, got {r}")));
    }
    let d = rho.dim();
    let (mut points, mut masses, cell_side) = match rho {
        SpatialMeasure::DiracMixture { points, weights } => {
            let keep: Vec<usize> = (0..points.len())
                .filter(|&i| weights[i] > 0.0 && points[i].iter().all(|x| x.abs() <= r))
                .collect();
            (
                keep.iter().map(|&i| points[i].clone()).collect::<Vec<_>>(),
                keep.iter().map(|&i| weights[i]).collect::<Vec<_>>(),
                0.0,
            )
        }
        _ => {
            let raster = rho.rasterize(r, cells_per_axis);
            let side = raster.max_cell_side();
            let (p, m): (Vec<_>, Vec<_>) = raster.atoms().into_iter().unzip();
            (p, m, side)
        }
    };
    let inside: f64 = masses.iter().sum();
    let atom_weight = (1.0 - inside).max(0.0);
    if atom_weight > 0.0 {
        points.push(vec![0.0; d]);
        masses.push(atom_weight);
    }
    let beta = DEFAULT_EXP_MOMENT_RATE;
    let exp_moment = rho.exp_moment_value(beta, Norm::Linf);
    Ok(TruncatedMeasure {
        r,
        dim: d,
        points,
        masses,
        atom_weight,
        cell_side,
        exp_moment,
        tail_bound: exp_moment * r * r * (-beta * r).exp(),
    })
}

/// Largest `m` with `m^d <= k`.
pub fn integer_root(k: usize, d: usize) -> usize {
    if k == 0 {
        return 0;
    }
    let mut m = (k as f64).powf(1.0 / d as f64).round() as usize;
    while m > 0 && m.checked_pow(d as u32).is_none_or(|p| p > k) {
        m -= 1;
    }
    while (m + 1).checked_pow(d as u32).is_some_and(|p| p <= k) {
        m += 1;
    }
    m
}

/// Axis-aligned cube `[corner, corner + side)^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cube {
    pub corner: Vec<f64>,
    pub side: f64,
    pub mass: f64,
}

impl Cube {
    pub fn center(&self) -> Vec<f64> {
        self.corner.iter().map(|c| c + 0.5 * self.side).collect()
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.side
    }
}

fn subcube_of(x: &[f64], r: f64, m: usize) -> usize {
    let side = 2.0 * r / m as f64;
    x.iter().fold(0, |acc, &v| {
        let i = (((v + r) / side).floor().max(0.0) as usize).min(m - 1);
        acc * m + i
    })
}

fn heavy_cube_index(
    points: &[Vec<f64>],
    masses: &[f64],
    r: f64,
    d: usize,
    m: usize,
    n: usize,
    cell_side: f64,
) -> Result<(usize, Vec<f64>, f64)> {
    let side = 2.0 * r / m as f64;
    if cell_side > side / 4.0 {
        return Err(Error::Resolution {
            cell_side,
            subcube_side: side,
            required: side / 4.0,
        });
    }
    let mut bins = vec![0.0; m.pow(d as u32)];
    for (x, &w) in points.iter().zip(masses) {
        if w > 0.0 {
            bins[subcube_of(x, r, m)] += w;
        }
    }
    let best = bins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let need = 1.0 / n as f64;
    if best < need * (1.0 - 1e-9) {
        return Err(Error::Structural(format!(
            "no subcube carries 1/N = {need}; heaviest has {best}"
        )));
    }
    let idx = bins.iter().position(|&b| b >= best - TIE_TOL).unwrap_or(0);
    let mut rem = idx;
    let mut corner = vec![0.0; d];
    for k in (0..d).rev() {
        corner[k] = -r + (rem % m) as f64 * side;
        rem /= m;
    }
    Ok((idx, corner, bins[idx]))
}

/// A cube of the regular covering of `[-r, r]^d` into `floor((N |nu|)^{1/d})^d`
/// subcubes holding at least `1/N` of `nu`; the heaviest, first in
/// lexicographic corner order among ties.
pub fn find_heavy_cube(nu: &TruncatedMeasure, n: usize) -> Result<Cube> {
    let q = n as f64 * nu.total_mass();
    let k = if (q - q.round()).abs() < 1e-9 { q.round() } else { q.floor() } as usize;
    if k == 0 {
        return Err(Error::invalid("nu", "mass below 1/N"));
    }
    let m = integer_root(k, nu.dim);
    let (_, corner, mass) = heavy_cube_index(&nu.points, &nu.masses, nu.r, nu.dim, m, n, nu.cell_side)?;
    Ok(Cube {
        corner,
        side: 2.0 * nu.r / m as f64,
        mass,
    })
}

/// Positions with uniform weights and their certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuantizedMeasure {
    pub r: f64,
    pub n: usize,
    pub dim: usize,
    /// Centers in extraction order: entry `j` is the center of cube `C_{N-j}`.
    pub points: Vec<Vec<f64>>,
    /// Max-norm diameter of the cube behind each point, same order.
    pub diameters: Vec<f64>,
    /// `g_d(r, N)`.
    pub certified_bound: f64,
    /// `(N^{-1} sum_k Diam(C_k)^2)^{1/2}`, the bound carried by the
    /// construction's own coupling.
    pub diameter_bound: f64,
    /// Truncation summand `E_beta r^2 e^{-beta r}`.
    pub tail_bound: f64,
    pub atom_weight: f64,
    /// Residual mass after each extraction.
    pub residual_mass: Vec<f64>,
}

impl QuantizedMeasure {
    pub fn weights(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.n]
    }

    pub fn write_positions_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        write!(out, "index")?;
        for k in 0..self.dim {
            write!(out, ",x{k}")?;
        }
        writeln!(out, ",weight")?;
        let w = 1.0 / self.n as f64;
        for (i, p) in self.points.iter().enumerate() {
            write!(out, "{i}")?;
            for c in p {
                write!(out, ",{c:.16e}")?;
            }
            writeln!(out, ",{w:.16e}")?;
        }
        Ok(())
    }

    pub fn certificate(&self) -> serde_json::Value {
        serde_json::json!({
            "r": self.r,
            "N": self.n,
            "d": self.dim,
            "g_d": self.certified_bound,
            "tail_bound": self.tail_bound,
            "diameter_bound": self.diameter_bound,
            "atom_weight": self.atom_weight,
            "diameters": self.diameters,
        })
    }
}

/// `g_1(r, N) = (4 pi^2 r / 6) N^{-1/2}` and `g_d(r, N) = 4 r ((1 + ln N) / N)^{1/d}`.
pub fn certified_bound(d: usize, r: f64, n: usize) -> f64 {
    let nf = n as f64;
    if d == 1 {
        4.0 * std::f64::consts::PI.powi(2) * r / 6.0 / nf.sqrt()
    } else {
        4.0 * r * ((1.0 + nf.ln()) / nf).powf(1.0 / d as f64)
    }
}

pub fn quantize_measure(rho_r: &TruncatedMeasure, n: usize) -> Result<QuantizedMeasure> {
    if n == 0 {
        return Err(Error::invalid("N", "must be >= 1"));
    }
    let d = rho_r.dim;
    let r = rho_r.r;
    let mut masses = rho_r.masses.clone();
    let share = 1.0 / n as f64;
    let mut points = Vec::with_capacity(n);
    let mut diameters = Vec::with_capacity(n);
    let mut residual_mass = Vec::with_capacity(n);
    for k in (1..=n).rev() {
        let m = integer_root(k, d);
        let (idx, corner, mass) =
            heavy_cube_index(&rho_r.points, &masses, r, d, m, n, rho_r.cell_side)?;
        let keep = (1.0 - share / mass).max(0.0);
        for (x, w) in rho_r.points.iter().zip(masses.iter_mut()) {
            if *w > 0.0 && subcube_of(x, r, m) == idx {
                *w *= keep;
            }
        }
        let side = 2.0 * r / m as f64;
        points.push(corner.iter().map(|c| c + 0.5 * side).collect());
        diameters.push(side);
        residual_mass.push(masses.iter().sum());
    }
    let diameter_bound = (diameters.iter().map(|s| s * s).sum::<f64>() / n as f64).sqrt();
    Ok(QuantizedMeasure {
        r,
        n,
        dim: d,
        points,
        diameters,
        certified_bound: certified_bound(d, r, n),
        diameter_bound,
        tail_bound: rho_r.tail_bound,
        atom_weight: rho_r.atom_weight,
        residual_mass,
    })
}

/// I.i.d. positions drawn from `rho`.
pub fn scenario_s1_positions<R: Rng + ?Sized>(rho: &SpatialMeasure, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n).map(|_| rho.sample(rng)).collect()
}

/// Truncation level and raster for the deterministic scenario.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct S2Options {
    /// Exponent of `r_N = N^eps`; defaults to `1 / (2 (d + 2))`.
    pub eps: Option<f64>,
    /// Fixed radius overriding `N^eps`.
    pub radius: Option<f64>,
    /// Raster cells per axis; defaults to `4 floor(N^{1/d})`.
    pub cells_per_axis: Option<usize>,
}

pub fn default_s2_eps(d: usize) -> f64 {
    1.0 / (2.0 * (d as f64 + 2.0))
}

/// Quantized positions of the truncation of `rho` at `r_N = N^eps`.
pub fn scenario_s2_positions(rho: &SpatialMeasure, n: usize, opts: S2Options) -> Result<QuantizedMeasure> {
    let d = rho.dim();
    let eps = opts.eps.unwrap_or_else(|| default_s2_eps(d));
    if !(eps > 0.0 && eps < 1.0 / (d as f64 + 2.0)) {
        return Err(Error::invalid(
            "quantization.eps",
            format!("must lie in (0, 1/(d+2)), got {eps}"),
        ));
    }
    let r = opts.radius.unwrap_or_else(|| (n as f64).powf(eps));
    let cells = opts.cells_per_axis.unwrap_or(4 * integer_root(n, d).max(1));
    let trunc = truncate_measure(rho, r, cells)?;
    quantize_measure(&trunc, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integer_roots() {
        assert_eq!(integer_root(1, 2), 1);
        assert_eq!(integer_root(3, 2), 1);
        assert_eq!(integer_root(4, 2), 2);
        assert_eq!(integer_root(1000, 3), 10);
        assert_eq!(integer_root(999, 3), 9);
        assert_eq!(integer_root(1024, 1), 1024);
    }

    #[test]
    fn certificate_values() {
        assert_abs_diff_eq!(certified_bound(1, 1.0, 100), 0.6579736267392906, epsilon = 1e-12);
        let oracle = 4.0 * ((1.0 + 100f64.ln()) / 100.0).sqrt();
        assert_abs_diff_eq!(certified_bound(2, 1.0, 100), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle, 0.94701, epsilon = 1e-5);
    }

    #[test]
    fn bound_decreases_in_n() {
        // (1 + ln N) / N has derivative -ln N / N^2 <= 0
        for d in 1..4 {
            for n in 2..2000 {
                assert!(certified_bound(d, 1.0, n) < certified_bound(d, 1.0, n - 1));
            }
        }
    }

    #[test]
    fn truncation_examples() {
        let u = SpatialMeasure::UniformBox { d: 2, r: 1.0 };
        let t = truncate_measure(&u, 1.0, 8).unwrap();
        assert_eq!(t.atom_weight, 0.0);
        let dirac = SpatialMeasure::dirac(vec![0.0, 0.0]);
        let t0 = truncate_measure(&dirac, 0.5, 8).unwrap();
        assert_eq!((t0.points.clone(), t0.masses.clone()), (vec![vec![0.0, 0.0]], vec![1.0]));
        let g = SpatialMeasure::Gaussian {
            d: None,
            mean: vec![0.0],
            cov_diag: vec![1.0],
        };
        let tg = truncate_measure(&g, 3.0, 600).unwrap();
        assert_abs_diff_eq!(tg.atom_weight, 0.0027, epsilon = 1e-4);
        assert_abs_diff_eq!(tg.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heavy_cube_examples() {
        let u = SpatialMeasure::UniformBox { d: 1, r: 1.0 };
        let t = truncate_measure(&u, 1.0, 64).unwrap();
        let c = find_heavy_cube(&t, 4).unwrap();
        assert_abs_diff_eq!(c.radius(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.corner[0], -1.0);

        let hot = TruncatedMeasure {
            r: 1.0,
            dim: 1,
            points: vec![vec![0.3]],
            masses: vec![1.0],
            atom_weight: 0.0,
            cell_side: 0.0,
            exp_moment: 1.0,
            tail_bound: 0.0,
        };
        let c = find_heavy_cube(&hot, 8).unwrap();
        assert!(c.corner[0] <= 0.3 && 0.3 < c.corner[0] + c.side);

        let u2 = SpatialMeasure::UniformBox { d: 2, r: 1.0 };
        let t2 = truncate_measure(&u2, 1.0, 40).unwrap();
        let c2 = find_heavy_cube(&t2, 100).unwrap();
        assert!(c2.radius() <= 1.0 / 10.0 + 1e-15);
    }

    #[test]
    fn coarse_raster_is_rejected() {
        let u = SpatialMeasure::UniformBox { d: 1, r: 1.0 };
        let t = truncate_measure(&u, 1.0, 8).unwrap();
        assert!(matches!(quantize_measure(&t, 100), Err(Error::Resolution { .. })));
    }

    #[test]
    fn construction_invariants() {
        for (rho, n) in [
            (SpatialMeasure::UniformBox { d: 1, r: 1.0 }, 50),
            (
                SpatialMeasure::Gaussian {
                    d: Some(2),
                    mean: vec![0.0, 0.0],
                    cov_diag: vec![1.0, 1.0],
                },
                64,
            ),
        ] {
            let q = scenario_s2_positions(&rho, n, S2Options::default()).unwrap();
            assert_eq!(q.points.len(), n);
            for (j, (dm, res)) in q.diameters.iter().zip(&q.residual_mass).enumerate() {
                let k = (n - j) as f64;
                assert!(*dm <= 4.0 * q.r * k.powf(-1.0 / q.dim as f64) + 1e-12);
                assert!((res - (k - 1.0) / n as f64).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dirac_and_single_point() {
        let q = scenario_s2_positions(&SpatialMeasure::dirac(vec![0.0]), 10, S2Options::default()).unwrap();
        assert!(q.points.iter().zip(&q.diameters).all(|(p, dm)| p[0].abs() <= 0.5 * dm + 1e-12));
        assert_abs_diff_eq!(q.points[0][0], q.r / 10.0, epsilon = 1e-12);
        let one = scenario_s2_positions(&SpatialMeasure::UniformBox { d: 2, r: 0.5 }, 1, S2Options::default())
            .unwrap();
        assert_eq!(one.points, vec![vec![0.0, 0.0]]);
    }
}
