use crate::model::{ModelParams, SpatialMeasure};
use crate::{Error, Result};

/// Discrete stand-in for `rho`: nodes `y_m` with weights `rho_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialQuadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SpatialQuadrature {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Structural(
                "quadrature needs one weight per node and at least one node".into(),
            ));
        }
        let d = nodes[0].len();
        if nodes.iter().any(|y| y.len() != d || y.iter().any(|v| !v.is_finite())) {
            return Err(Error::Structural("quadrature nodes must be finite and of equal dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Structural("quadrature weights must be nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Structural(format!("quadrature weights sum to {s}")));
        }
        Ok(Self { nodes, weights })
    }

    /// Uniform weights on the given points.
    pub fn empirical(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        Self::new(points.to_vec(), vec![1.0 / n as f64; n])
    }

    /// Cell-center rule for `rho`. Dirac mixtures are used as they are, grid
    /// densities on their own cells; continuous measures are rasterized on
    /// `[-r, r]^d` with `cells_per_axis` cells and the mass outside is put on
    /// an atom at the origin.
    pub fn for_measure(rho: &SpatialMeasure, cells_per_axis: usize) -> Result<Self> {
        match rho {
            SpatialMeasure::DiracMixture { points, weights } => {
                let keep: Vec<usize> = (0..points.len()).filter(|&i| weights[i] > 0.0).collect();
                let s: f64 = keep.iter().map(|&i| weights[i]).sum();
                Self::new(
                    keep.iter().map(|&i| points[i].clone()).collect(),
                    keep.iter().map(|&i| weights[i] / s).collect(),
                )
            }
            SpatialMeasure::GridDensity { .. } => {
                let r = rho.effective_radius(0.0);
                let res = match rho {
                    SpatialMeasure::GridDensity { resolution, .. } => {
                        resolution.iter().copied().max().unwrap_or(1).max(cells_per_axis)
                    }
                    _ => unreachable!(),
                };
                Self::from_truncated(rho, r, res)
            }
            _ => Self::from_truncated(rho, rho.effective_radius(1e-12), cells_per_axis),
        }
    }

    fn from_truncated(rho: &SpatialMeasure, r: f64, cells: usize) -> Result<Self> {
        let raster = rho.rasterize(r, cells);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (c, m) in raster.atoms() {
            nodes.push(c);
            weights.push(m);
        }
        let outside = 1.0 - raster.total_mass();
        if outside > 0.0 {
            nodes.push(vec![0.0; rho.dim()]);
            weights.push(outside);
        }
        let s: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= s;
        }
        Self::new(nodes, weights)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    /// `sup_p sum_m |w(y_m, x_p)| rho_m` over the given points.
    pub fn w_l1_sup(&self, params: &ModelParams, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .map(|x| {
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(y, r)| params.w(y, x).abs() * r)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Row `p` holds `w(y_m, x_p) rho_m`.
    pub fn weighted_kernel(&self, params: &ModelParams, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        points
            .iter()
            .map(|x| {
                self.nodes
                    .iter()
                    .zip(&self.weights)
                    .map(|(y, r)| params.w(y, x) * r)
                    .collect()
            })
            .collect()
    }
}
