use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coupling::mean_se;
use crate::hawkes_sim::{simulate_network, SpikeTrain};
use crate::limit_field::{IntensityField, NodeProfile, SpatialQuadrature};
use crate::model::{ModelParams, SpatialMeasure};
use crate::rng::{SeedKey, ENVIRONMENT_STREAM};
use crate::{Error, Result};

/// `∫_{-1}^{1} exp(-1 / (1 - s^2)) ds`.
fn bump_mass() -> f64 {
    let n = 4096;
    let h = 2.0 / n as f64;
    (1..n)
        .map(|k| {
            let s = -1.0 + k as f64 * h;
            (-1.0 / (1.0 - s * s)).exp()
        })
        .sum::<f64>()
        * h
}

/// Product bump of radius `radius` per axis with unit integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mollifier {
    pub radius: f64,
    norm: f64,
}

impl Mollifier {
    pub fn new(radius: f64) -> Self {
        Self {
            radius,
            norm: 1.0 / (radius * bump_mass()),
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        z.iter()
            .map(|&v| {
                let s = v / self.radius;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    self.norm * (-1.0 / (1.0 - s * s)).exp()
                }
            })
            .product()
    }
}

/// Largest admissible scale exponent, `1 / ((4 + d)(2d + 1))`.
pub fn max_scale_exponent(d: usize) -> f64 {
    1.0 / ((4.0 + d as f64) * (2.0 * d as f64 + 1.0))
}

/// Path functional applied in a window; all depend on the count at `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountFunctional {
    One,
    /// `min(eta(T), k) / k`.
    Clipped { k: u32 },
    /// `1{eta(T) >= 1}`.
    Fired,
}

impl CountFunctional {
    pub fn eval(&self, count: usize) -> f64 {
        match *self {
            CountFunctional::One => 1.0,
            CountFunctional::Clipped { k } => (count as f64).min(k as f64) / k as f64,
            CountFunctional::Fired => (count >= 1) as u8 as f64,
        }
    }

    /// Expectation under a Poisson count of mean `m`.
    pub fn poisson_mean(&self, m: f64) -> f64 {
        match *self {
            CountFunctional::One => 1.0,
            CountFunctional::Fired => -(-m).exp_m1(),
            CountFunctional::Clipped { k } => {
                let mut p = (-m).exp();
                let mut below = 0.0;
                let mut cdf = 0.0;
                for j in 0..k {
                    below += j as f64 * p;
                    cdf += p;
                    p *= m / (j + 1) as f64;
                }
                (below + k as f64 * (1.0 - cdf).max(0.0)) / k as f64
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosSpec {
    pub center: Vec<f64>,
    pub center_tilde: Vec<f64>,
    pub phi: CountFunctional,
    pub phi_tilde: CountFunctional,
    /// Scale exponent `p(d)`; defaults to 0.9 of the admissible maximum.
    #[serde(default)]
    pub scale: Option<f64>,
    /// Mollifier radius before scaling.
    #[serde(default = "default_radius")]
    pub base_radius: f64,
}

fn default_radius() -> f64 {
    0.25
}

/// Where the positions come from.
pub enum Positions<'a> {
    /// The same positions in every replication; limit means at these
    /// positions.
    Fixed { points: &'a [Vec<f64>], profile: &'a NodeProfile },
    /// Fresh i.i.d. draws from `rho` in every replication; limit means
    /// against the `rho` quadrature.
    Sampled { n: usize, quad: &'a SpatialQuadrature, field: &'a IntensityField },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChaosReport {
    pub n: usize,
    pub replications: usize,
    pub scale: f64,
    /// `E[<g, P_N><g~, P_N>] - <g, P><g~, P>`.
    pub gap: f64,
    pub gap_se: f64,
    /// Sample covariance of `<g, P_N>` and `<g~, P_N>`.
    pub covariance: f64,
    pub mean_g: f64,
    pub mean_g_tilde: f64,
    pub limit_g: f64,
    pub limit_g_tilde: f64,
    /// Replications in which a window held no neuron.
    pub empty_windows: usize,
    /// False when every replication had an empty window.
    pub defined: bool,
}

struct Weights {
    phi: CountFunctional,
    center: Vec<f64>,
}

pub fn chaos_covariance(
    params: &ModelParams,
    rho: &SpatialMeasure,
    positions: Positions<'_>,
    spec: &ChaosSpec,
    t_end: f64,
    replications: usize,
    master: u64,
) -> Result<ChaosReport> {
    let d = rho.dim();
    let p = spec.scale.unwrap_or(0.9 * max_scale_exponent(d));
    if !(p > 0.0 && p < max_scale_exponent(d)) {
        return Err(Error::invalid("chaos.scale", format!("must lie in (0, {})", max_scale_exponent(d))));
    }
    if replications < 2 {
        return Err(Error::invalid("replications", "need at least 2"));
    }
    let n = match positions {
        Positions::Fixed { points, .. } => points.len(),
        Positions::Sampled { n, .. } => n,
    };
    let scale = (n as f64).powf(p);
    let moll = Mollifier::new(spec.base_radius / scale);
    let windows = [
        Weights {
            phi: spec.phi,
            center: spec.center.clone(),
        },
        Weights {
            phi: spec.phi_tilde,
            center: spec.center_tilde.clone(),
        },
    ];
    let spatial = |w: &Weights, z: &[f64]| -> Result<f64> {
        let shifted: Vec<f64> = z.iter().zip(&w.center).map(|(a, c)| a - c).collect();
        let b = moll.eval(&shifted);
        if b == 0.0 {
            return Ok(0.0);
        }
        match rho.density(z) {
            Some(f) if f > 0.0 => Ok(b / f),
            _ => Err(Error::invalid(
                "chaos.center",
                format!("density of rho vanishes or is undefined at {z:?}"),
            )),
        }
    };

    let limit = |w: &Weights| -> Result<f64> {
        match &positions {
            Positions::Fixed { points, profile } => {
                let mut s = 0.0;
                for (i, x) in points.iter().enumerate() {
                    let g = spatial(w, x)?;
                    if g != 0.0 {
                        s += g * w.phi.poisson_mean(profile.integrated(i));
                    }
                }
                Ok(s / points.len() as f64)
            }
            Positions::Sampled { quad, field, .. } => {
                let lam = field.time_integrals();
                let mut s = 0.0;
                for (m, y) in quad.nodes.iter().enumerate() {
                    let g = spatial(w, y)?;
                    if g != 0.0 {
                        s += quad.weights[m] * g * w.phi.poisson_mean(lam[m]);
                    }
                }
                Ok(s)
            }
        }
    };
    let limit_g = limit(&windows[0])?;
    let limit_g_tilde = limit(&windows[1])?;

    let needs_spikes = !(spec.phi == CountFunctional::One && spec.phi_tilde == CountFunctional::One);
    let per_rep: Vec<(f64, f64, bool)> = (0..replications)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64, bool)> {
            let key = SeedKey::new(master, r as u64);
            let drawn;
            let pts: &[Vec<f64>] = match &positions {
                Positions::Fixed { points, .. } => points,
                Positions::Sampled { n, .. } => {
                    let mut env = key.stream(ENVIRONMENT_STREAM);
                    drawn = (0..*n).map(|_| rho.sample(env.rng())).collect::<Vec<_>>();
                    &drawn
                }
            };
            let trains: Option<Vec<SpikeTrain>> = if needs_spikes {
                Some(simulate_network(params, pts, t_end, key)?)
            } else {
                None
            };
            let count = |i: usize| trains.as_ref().map_or(0, |t| t[i].count());
            let mut out = [0.0; 2];
            let mut empty = false;
            for (k, w) in windows.iter().enumerate() {
                let mut hit = false;
                for (i, x) in pts.iter().enumerate() {
                    let g = spatial(w, x)?;
                    if g != 0.0 {
                        hit = true;
                        out[k] += g * w.phi.eval(count(i));
                    }
                }
                out[k] /= n as f64;
                empty |= !hit;
            }
            Ok((out[0], out[1], empty))
        })
        .collect::<Result<_>>()?;

    let a: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
    let b: Vec<f64> = per_rep.iter().map(|r| r.1).collect();
    let prod: Vec<f64> = per_rep.iter().map(|r| r.0 * r.1).collect();
    let (ma, _) = mean_se(&a);
    let (mb, _) = mean_se(&b);
    let (mp, sp) = mean_se(&prod);
    let rf = replications as f64;
    let covariance = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (rf - 1.0);
    let empty_windows = per_rep.iter().filter(|r| r.2).count();
    Ok(ChaosReport {
        n,
        replications,
        scale: p,
        gap: mp - limit_g * limit_g_tilde,
        gap_se: sp,
        covariance,
        mean_g: ma,
        mean_g_tilde: mb,
        limit_g,
        limit_g_tilde,
        empty_windows,
        defined: empty_windows < replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_has_unit_mass() {
        let m = Mollifier::new(0.3);
        let h = 1e-4;
        let s: f64 = (-4000..=4000).map(|k| m.eval(&[k as f64 * h])).sum::<f64>() * h;
        assert!((s - 1.0).abs() < 1e-8);
        assert!((bump_mass() - 0.443_993_816_168_079_4).abs() < 1e-12);
    }

    #[test]
    fn admissible_exponent() {
        assert!((max_scale_exponent(1) - 1.0 / 15.0).abs() < 1e-15);
        assert!((max_scale_exponent(2) - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_expectations() {
        let m = 1.3f64;
        assert!((CountFunctional::Fired.poisson_mean(m) - (1.0 - (-m).exp())).abs() < 1e-15);
        let direct: f64 = {
            let mut p = (-m).exp();
            let mut s = 0.0;
            for j in 0..200 {
                s += (j as f64).min(3.0) / 3.0 * p;
                p *= m / (j + 1) as f64;
            }
            s
        };
        assert!((CountFunctional::Clipped { k: 3 }.poisson_mean(m) - direct).abs() < 1e-14);
    }
}
