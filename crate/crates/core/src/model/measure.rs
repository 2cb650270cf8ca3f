use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{check_finite, check_nonnegative, check_positive, Norm};
use crate::{Error, Result};

/// Rate of the exponential moment reported by [`SpatialMeasure::exp_moment_value`].
pub const DEFAULT_EXP_MOMENT_RATE: f64 = 1.0;

const MASS_TOL: f64 = 1e-12;

/// Probability distribution `rho` of neuron positions on `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialMeasure {
    /// Uniform on `[-r, r]^d`.
    UniformBox { d: usize, r: f64 },
    /// Product Gaussian with diagonal covariance.
    Gaussian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
        mean: Vec<f64>,
        cov_diag: Vec<f64>,
    },
    DiracMixture {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    /// Piecewise-uniform density on the box `[lo, hi]` split into
    /// `resolution[k]` cells along axis `k`; `masses` is row-major with the
    /// last axis fastest.
    GridDensity {
        lo: Vec<f64>,
        hi: Vec<f64>,
        resolution: Vec<usize>,
        masses: Vec<f64>,
    },
}

/// Cell masses of a measure restricted to a box, on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
    pub masses: Vec<f64>,
}

impl Raster {
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn cell_side(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.resolution[axis] as f64
    }

    pub fn max_cell_side(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.cell_side(k))
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Multi-index of flat cell `c`.
    pub fn multi_index(&self, mut c: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = c % self.resolution[k];
            c /= self.resolution[k];
        }
        idx
    }

    pub fn cell_center(&self, c: usize) -> Vec<f64> {
        self.multi_index(c)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.lo[k] + (i as f64 + 0.5) * self.cell_side(k))
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Nonzero cells as `(center, mass)` pairs.
    pub fn atoms(&self) -> Vec<(Vec<f64>, f64)> {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(c, &m)| (self.cell_center(c), m))
            .collect()
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Length of `[a, b) ∩ [c, d)`.
#[inline]
fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

/// Cells of `n` equal parts of `[lo, hi]` hit by `[a, b)`, as (index, overlap).
fn axis_overlaps(lo: f64, hi: f64, n: usize, a: f64, b: f64) -> Vec<(usize, f64)> {
    let h = (hi - lo) / n as f64;
    let first = (((a - lo) / h).floor().max(0.0)) as usize;
    let last = ((((b - lo) / h).ceil()) as isize).clamp(0, n as isize) as usize;
    (first.min(n)..last)
        .filter_map(|i| {
            let c0 = lo + i as f64 * h;
            let ov = overlap(a, b, c0, c0 + h);
            (ov > 0.0).then_some((i, ov))
        })
        .collect()
}

impl SpatialMeasure {
    pub fn dim(&self) -> usize {
        match self {
            SpatialMeasure::UniformBox { d, .. } => *d,
            SpatialMeasure::Gaussian { mean, .. } => mean.len(),
            SpatialMeasure::DiracMixture { points, .. } => points.first().map_or(0, Vec::len),
            SpatialMeasure::GridDensity { lo, .. } => lo.len(),
        }
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        SpatialMeasure::DiracMixture {
            points: vec![point],
            weights: vec![1.0],
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match self {
            SpatialMeasure::UniformBox { d, r } => {
                if *d == 0 {
                    return Err(Error::invalid(format!("{path}.d"), "dimension must be >= 1"));
                }
                check_positive(&format!("{path}.r"), *r)
            }
            SpatialMeasure::Gaussian { d, mean, cov_diag } => {
                if mean.is_empty() {
                    return Err(Error::invalid(format!("{path}.mean"), "empty mean"));
                }
                if let Some(d) = d {
                    if *d != mean.len() {
                        return Err(Error::invalid(
                            format!("{path}.d"),
                            format!("d = {d} but mean has {} entries", mean.len()),
                        ));
                    }
                }
                if cov_diag.len() != mean.len() {
                    return Err(Error::invalid(
                        format!("{path}.cov_diag"),
                        format!("expected {} entries, got {}", mean.len(), cov_diag.len()),
                    ));
                }
                for (k, (m, v)) in mean.iter().zip(cov_diag).enumerate() {
                    check_finite(&format!("{path}.mean[{k}]"), *m)?;
                    check_positive(&format!("{path}.cov_diag[{k}]"), *v)?;
                }
                Ok(())
            }
            SpatialMeasure::DiracMixture { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::invalid(
                        format!("{path}.weights"),
                        "need one weight per point and at least one point",
                    ));
                }
                let d = points[0].len();
                if d == 0 {
                    return Err(Error::invalid(format!("{path}.points[0]"), "empty point"));
                }
                for (i, p) in points.iter().enumerate() {
                    if p.len() != d {
                        return Err(Error::invalid(
                            format!("{path}.points[{i}]"),
                            format!("expected {d} coordinates"),
                        ));
                    }
                    for (k, v) in p.iter().enumerate() {
                        check_finite(&format!("{path}.points[{i}][{k}]"), *v)?;
                    }
                }
                for (i, w) in weights.iter().enumerate() {
                    check_nonnegative(&format!("{path}.weights[{i}]"), *w)?;
                }
                check_unit_mass(&format!("{path}.weights"), weights)
            }
            SpatialMeasure::GridDensity {
                lo,
                hi,
                resolution,
                masses,
            } => {
                if lo.is_empty() || lo.len() != hi.len() || lo.len() != resolution.len() {
                    return Err(Error::invalid(
                        format!("{path}.resolution"),
                        "lo, hi and resolution must have the same nonzero length",
                    ));
                }
                for k in 0..lo.len() {
                    check_finite(&format!("{path}.lo[{k}]"), lo[k])?;
                    check_finite(&format!("{path}.hi[{k}]"), hi[k])?;
                    if hi[k] <= lo[k] {
                        return Err(Error::invalid(format!("{path}.hi[{k}]"), "hi must exceed lo"));
                    }
                    if resolution[k] == 0 {
                        return Err(Error::invalid(
                            format!("{path}.resolution[{k}]"),
                            "must be >= 1",
                        ));
                    }
                }
                let cells: usize = resolution.iter().product();
                if masses.len() != cells {
                    return Err(Error::invalid(
                        format!("{path}.masses"),
                        format!("expected {cells} cell masses, got {}", masses.len()),
                    ));
                }
                for (i, m) in masses.iter().enumerate() {
                    check_nonnegative(&format!("{path}.masses[{i}]"), *m)?;
                }
                check_unit_mass(&format!("{path}.masses"), masses)
            }
        }
    }

    /// Upper bound on `E_beta = ∫ exp(beta |x|) rho(dx)`, exact for Dirac
    /// mixtures. Always `>= 1`.
    pub fn exp_moment_value(&self, beta: f64, norm: Norm) -> f64 {
        match self {
            SpatialMeasure::UniformBox { d, r } => match norm {
                Norm::Linf => (beta * r).exp(),
                Norm::L2 => (beta * (*d as f64).sqrt() * r).exp(),
            },
            // |x| <= sum_k |x_k| in both norms, and E exp(beta |X_k|) <= 2 exp(beta |m| + beta^2 s^2 / 2).
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => mean
                .iter()
                .zip(cov_diag)
                .map(|(m, v)| 2.0 * (beta * m.abs() + beta * beta * v / 2.0).exp())
                .product(),
            SpatialMeasure::DiracMixture { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(p, w)| w * (beta * norm.of(p)).exp())
                .sum::<f64>()
                .max(1.0),
            SpatialMeasure::GridDensity { .. } => {
                let raster = self.own_raster().expect("grid density");
                raster
                    .masses
                    .iter()
                    .enumerate()
                    .filter(|(_, &m)| m > 0.0)
                    .map(|(c, &m)| {
                        let idx = raster.multi_index(c);
                        let far: Vec<f64> = idx
                            .iter()
                            .enumerate()
                            .map(|(k, &i)| {
                                let a = raster.lo[k] + i as f64 * raster.cell_side(k);
                                a.abs().max((a + raster.cell_side(k)).abs())
                            })
                            .collect();
                        m * (beta * norm.of(&far)).exp()
                    })
                    .sum::<f64>()
                    .max(1.0)
            }
        }
    }

    fn own_raster(&self) -> Option<Raster> {
        match self {
            SpatialMeasure::GridDensity {
                lo,
                hi,
                resolution,
                masses,
            } => Some(Raster {
                lo: lo.clone(),
                hi: hi.clone(),
                resolution: resolution.clone(),
                masses: masses.clone(),
            }),
            _ => None,
        }
    }

    /// Mass of the half-open box `[a, b)` (closed for Dirac points on the
    /// upper face only when `b` is the outer boundary, see [`Self::rasterize`]).
    pub fn box_mass(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            SpatialMeasure::UniformBox { r, .. } => a
                .iter()
                .zip(b)
                .map(|(&ak, &bk)| overlap(ak, bk, -r, *r) / (2.0 * r))
                .product(),
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => mean
                .iter()
                .zip(cov_diag)
                .zip(a.iter().zip(b))
                .map(|((m, v), (&ak, &bk))| {
                    let s = v.sqrt();
                    (std_normal_cdf((bk - m) / s) - std_normal_cdf((ak - m) / s)).max(0.0)
                })
                .product(),
            SpatialMeasure::DiracMixture { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| p.iter().zip(a.iter().zip(b)).all(|(x, (&ak, &bk))| *x >= ak && *x < bk))
                .map(|(_, w)| *w)
                .sum(),
            SpatialMeasure::GridDensity { .. } => {
                let g = self.own_raster().expect("grid density");
                let per_axis: Vec<Vec<(usize, f64)>> = (0..g.dim())
                    .map(|k| {
                        let h = g.cell_side(k);
                        axis_overlaps(g.lo[k], g.hi[k], g.resolution[k], a[k], b[k])
                            .into_iter()
                            .map(|(i, ov)| (i, ov / h))
                            .collect()
                    })
                    .collect();
                let mut total = 0.0;
                for_each_product(&per_axis, |idx, frac| {
                    total += frac * g.masses[flat_index(&g.resolution, idx)];
                });
                total
            }
        }
    }

    /// Cell masses of `rho` restricted to `[-r, r]^d` on a grid with
    /// `cells_per_axis` cells per axis. Mass outside the closed box is dropped
    /// (see [`Raster::total_mass`]). Dirac atoms on the upper faces go to the
    /// last cell.
    pub fn rasterize(&self, r: f64, cells_per_axis: usize) -> Raster {
        let d = self.dim();
        let n = cells_per_axis.max(1);
        let h = 2.0 * r / n as f64;
        let lo = vec![-r; d];
        let hi = vec![r; d];
        let resolution = vec![n; d];
        let total: usize = n.pow(d as u32);
        let mut masses = vec![0.0; total];
        match self {
            SpatialMeasure::UniformBox { .. } | SpatialMeasure::Gaussian { .. } => {
                // separable: product of one-dimensional cell masses
                let per_axis: Vec<Vec<f64>> = (0..d)
                    .map(|k| {
                        (0..n)
                            .map(|i| {
                                let a = -r + i as f64 * h;
                                let b = if i + 1 == n { r } else { a + h };
                                self.axis_mass(k, a, b)
                            })
                            .collect()
                    })
                    .collect();
                for (c, m) in masses.iter_mut().enumerate() {
                    let mut rem = c;
                    let mut p = 1.0;
                    for k in (0..d).rev() {
                        p *= per_axis[k][rem % n];
                        rem /= n;
                    }
                    *m = p;
                }
            }
            SpatialMeasure::DiracMixture { points, weights } => {
                for (p, w) in points.iter().zip(weights) {
                    if p.iter().all(|x| x.abs() <= r) {
                        let idx: Vec<usize> = p
                            .iter()
                            .map(|x| (((x + r) / h).floor() as usize).min(n - 1))
                            .collect();
                        masses[flat_index(&resolution, &idx)] += w;
                    }
                }
            }
            SpatialMeasure::GridDensity { .. } => {
                let g = self.own_raster().expect("grid density");
                for (src, &m) in g.masses.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let sidx = g.multi_index(src);
                    let per_axis: Vec<Vec<(usize, f64)>> = (0..d)
                        .map(|k| {
                            let hk = g.cell_side(k);
                            let a = g.lo[k] + sidx[k] as f64 * hk;
                            axis_overlaps(-r, r, n, a, a + hk)
                                .into_iter()
                                .map(|(i, ov)| (i, ov / hk))
                                .collect()
                        })
                        .collect();
                    for_each_product(&per_axis, |idx, frac| {
                        masses[flat_index(&resolution, idx)] += frac * m;
                    });
                }
            }
        }
        Raster {
            lo,
            hi,
            resolution,
            masses,
        }
    }

    /// Mass of the closed box `[-r, r]^d`.
    pub fn mass_within(&self, r: f64) -> f64 {
        match self {
            SpatialMeasure::DiracMixture { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| p.iter().all(|x| x.abs() <= r))
                .map(|(_, w)| *w)
                .sum(),
            _ => {
                let d = self.dim();
                self.box_mass(&vec![-r; d], &vec![r; d])
            }
        }
    }

    fn axis_mass(&self, k: usize, a: f64, b: f64) -> f64 {
        match self {
            SpatialMeasure::UniformBox { r, .. } => overlap(a, b, -r, *r) / (2.0 * r),
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => {
                let s = cov_diag[k].sqrt();
                (std_normal_cdf((b - mean[k]) / s) - std_normal_cdf((a - mean[k]) / s)).max(0.0)
            }
            _ => unreachable!("axis_mass is only defined for product measures"),
        }
    }

    /// Lebesgue density at `x`, if `rho` has one.
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        match self {
            SpatialMeasure::UniformBox { d, r } => Some(if x.iter().all(|v| v.abs() <= *r) {
                (2.0 * r).powi(-(*d as i32))
            } else {
                0.0
            }),
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => Some(
                mean.iter()
                    .zip(cov_diag)
                    .zip(x)
                    .map(|((m, v), xk)| {
                        (-(xk - m).powi(2) / (2.0 * v)).exp()
                            / (2.0 * std::f64::consts::PI * v).sqrt()
                    })
                    .product(),
            ),
            SpatialMeasure::DiracMixture { .. } => None,
            SpatialMeasure::GridDensity { .. } => {
                let g = self.own_raster().expect("grid density");
                let mut idx = Vec::with_capacity(g.dim());
                for k in 0..g.dim() {
                    if x[k] < g.lo[k] || x[k] > g.hi[k] {
                        return Some(0.0);
                    }
                    idx.push((((x[k] - g.lo[k]) / g.cell_side(k)).floor() as usize).min(g.resolution[k] - 1));
                }
                let vol: f64 = (0..g.dim()).map(|k| g.cell_side(k)).product();
                Some(g.masses[flat_index(&g.resolution, &idx)] / vol)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SpatialMeasure::UniformBox { d, r } => {
                (0..*d).map(|_| r * (2.0 * rng.random::<f64>() - 1.0)).collect()
            }
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => mean
                .iter()
                .zip(cov_diag)
                .map(|(m, v)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + v.sqrt() * z
                })
                .collect(),
            SpatialMeasure::DiracMixture { points, weights } => {
                points[pick(weights, rng.random::<f64>())].clone()
            }
            SpatialMeasure::GridDensity { .. } => {
                let g = self.own_raster().expect("grid density");
                let c = pick(&g.masses, rng.random::<f64>());
                g.multi_index(c)
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| g.lo[k] + (i as f64 + rng.random::<f64>()) * g.cell_side(k))
                    .collect()
            }
        }
    }

    /// A box `[-r, r]^d` holding all but roughly `tail` of the mass, used to
    /// size discrete proxies.
    pub fn effective_radius(&self, tail: f64) -> f64 {
        match self {
            SpatialMeasure::UniformBox { r, .. } => *r,
            SpatialMeasure::Gaussian { mean, cov_diag, .. } => {
                let d = mean.len() as f64;
                let per_axis = tail / d;
                let mut z = 1.0;
                while 2.0 * (1.0 - std_normal_cdf(z)) > per_axis && z < 40.0 {
                    z += 0.01;
                }
                mean.iter()
                    .zip(cov_diag)
                    .map(|(m, v)| m.abs() + z * v.sqrt())
                    .fold(0.0, f64::max)
            }
            SpatialMeasure::DiracMixture { points, .. } => points
                .iter()
                .map(|p| Norm::Linf.of(p))
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE),
            SpatialMeasure::GridDensity { lo, hi, .. } => lo
                .iter()
                .chain(hi)
                .map(|v| v.abs())
                .fold(0.0, f64::max),
        }
    }
}

fn check_unit_mass(path: &str, masses: &[f64]) -> Result<()> {
    let s: f64 = masses.iter().sum();
    if (s - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid(path, format!("masses sum to {s}, expected 1")));
    }
    Ok(())
}

/// Index of the cell of `weights` hit by a uniform `v` on the cumulative sum.
fn pick(weights: &[f64], v: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = v * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last
}

pub(crate) fn flat_index(resolution: &[usize], idx: &[usize]) -> usize {
    idx.iter()
        .zip(resolution)
        .fold(0, |acc, (&i, &n)| acc * n + i)
}

fn for_each_product(per_axis: &[Vec<(usize, f64)>], mut f: impl FnMut(&[usize], f64)) {
    let d = per_axis.len();
    if per_axis.iter().any(Vec::is_empty) {
        return;
    }
    let mut pos = vec![0usize; d];
    let mut idx = vec![0usize; d];
    loop {
        let mut frac = 1.0;
        for k in 0..d {
            let (i, w) = per_axis[k][pos[k]];
            idx[k] = i;
            frac *= w;
        }
        f(&idx, frac);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < per_axis[k].len() {
                break;
            }
            pos[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn gauss1() -> SpatialMeasure {
        SpatialMeasure::Gaussian {
            d: None,
            mean: vec![0.0],
            cov_diag: vec![1.0],
        }
    }

    #[test]
    fn raster_masses_sum() {
        let u = SpatialMeasure::UniformBox { d: 2, r: 1.0 };
        assert_abs_diff_eq!(u.rasterize(1.0, 7).total_mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.rasterize(2.0, 8).total_mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.rasterize(0.5, 8).total_mass(), 0.25, epsilon = 1e-12);
        let g = gauss1();
        assert_abs_diff_eq!(
            g.rasterize(3.0, 100).total_mass(),
            1.0 - 2.0 * (1.0 - std_normal_cdf(3.0)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gaussian_tail_mass() {
        let outside = 1.0 - gauss1().mass_within(3.0);
        assert_abs_diff_eq!(outside, 0.0026997960632601, epsilon = 1e-12);
    }

    #[test]
    fn grid_density_reraster() {
        let g = SpatialMeasure::GridDensity {
            lo: vec![-1.0],
            hi: vec![1.0],
            resolution: vec![2],
            masses: vec![0.25, 0.75],
        };
        g.validate("rho").unwrap();
        let r = g.rasterize(1.0, 4);
        for (got, want) in r.masses.iter().zip([0.125, 0.125, 0.375, 0.375]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(g.box_mass(&[-0.5], &[0.5]), 0.5, epsilon = 1e-15);
        assert_eq!(g.density(&[0.7]), Some(0.75));
    }

    #[test]
    fn dirac_raster_and_moment() {
        let m = SpatialMeasure::dirac(vec![0.0, 0.0]);
        let r = m.rasterize(1.0, 4);
        assert_eq!(r.total_mass(), 1.0);
        assert_eq!(m.exp_moment_value(1.0, Norm::Linf), 1.0);
        let edge = SpatialMeasure::dirac(vec![1.0]);
        assert_eq!(edge.rasterize(1.0, 4).masses, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn bad_masses_rejected() {
        let g = SpatialMeasure::GridDensity {
            lo: vec![0.0],
            hi: vec![1.0],
            resolution: vec![2],
            masses: vec![0.5, 0.6],
        };
        assert!(g.validate("rho").is_err());
    }

    #[test]
    fn exp_moments_dominate_sample_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let measures = [
            SpatialMeasure::UniformBox { d: 2, r: 1.5 },
            SpatialMeasure::Gaussian {
                d: Some(2),
                mean: vec![0.5, -0.2],
                cov_diag: vec![0.3, 1.2],
            },
        ];
        for m in measures {
            for norm in [Norm::Linf, Norm::L2] {
                let n = 20000;
                let mean: f64 = (0..n)
                    .map(|_| (norm.of(&m.sample(&mut rng))).exp())
                    .sum::<f64>()
                    / n as f64;
                let bound = m.exp_moment_value(1.0, norm);
                assert!(bound >= 1.0 && bound.is_finite());
                assert!(mean <= bound * 1.02, "{m:?}: {mean} > {bound}");
            }
        }
    }

    #[test]
    fn sampling_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = SpatialMeasure::GridDensity {
            lo: vec![0.0],
            hi: vec![2.0],
            resolution: vec![2],
            masses: vec![0.0, 1.0],
        };
        for _ in 0..1000 {
            let x = g.sample(&mut rng)[0];
            assert!((1.0..2.0).contains(&x));
        }
    }
}
