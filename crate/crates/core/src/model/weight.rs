use serde::{Deserialize, Serialize};

use super::{check_finite, check_positive, gauss_profile, gauss_profile_lip, Norm};
use crate::Result;

/// Synaptic strength `w(y, x)` from a presynaptic neuron at `y` to a
/// postsynaptic neuron at `x`. Translation-invariant variants depend on
/// `s = |x - y|` only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SynapticWeightFn {
    Constant {
        kappa: f64,
    },
    /// `amplitude * exp(-s^2 / (2 width^2))`.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// Difference of Gaussians `a1 g_{sigma1}(s) - a2 g_{sigma2}(s)`.
    MexicanHat {
        a1: f64,
        sigma1: f64,
        a2: f64,
        sigma2: f64,
    },
    /// `amplitude * exp(-|y|^2 / (2 width_pre^2)) * exp(-|x|^2 / (2 width_post^2))`.
    SeparableProduct {
        amplitude: f64,
        width_pre: f64,
        width_post: f64,
    },
}

impl SynapticWeightFn {
    #[inline]
    pub fn eval(&self, y: &[f64], x: &[f64], norm: Norm) -> f64 {
        match *self {
            SynapticWeightFn::Constant { kappa } => kappa,
            SynapticWeightFn::Gaussian { amplitude, width } => {
                gauss_profile(amplitude, width, norm.dist(x, y))
            }
            SynapticWeightFn::MexicanHat {
                a1,
                sigma1,
                a2,
                sigma2,
            } => {
                let s = norm.dist(x, y);
                gauss_profile(a1, sigma1, s) - gauss_profile(a2, sigma2, s)
            }
            SynapticWeightFn::SeparableProduct {
                amplitude,
                width_pre,
                width_post,
            } => {
                gauss_profile(amplitude, width_pre, norm.of(y))
                    * gauss_profile(1.0, width_post, norm.of(x))
            }
        }
    }

    /// `L_w` with `|w(y,x) - w(y',x')| <= L_w (|x - x'| + |y - y'|)`.
    pub fn lip_const(&self) -> f64 {
        match *self {
            SynapticWeightFn::Constant { .. } => 0.0,
            SynapticWeightFn::Gaussian { amplitude, width } => gauss_profile_lip(amplitude, width),
            SynapticWeightFn::MexicanHat {
                a1,
                sigma1,
                a2,
                sigma2,
            } => gauss_profile_lip(a1, sigma1) + gauss_profile_lip(a2, sigma2),
            SynapticWeightFn::SeparableProduct {
                amplitude,
                width_pre,
                width_post,
            } => gauss_profile_lip(amplitude, width_pre.min(width_post)),
        }
    }

    /// `sup |w|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            SynapticWeightFn::Constant { kappa } => kappa.abs(),
            SynapticWeightFn::Gaussian { amplitude, .. } => amplitude.abs(),
            SynapticWeightFn::MexicanHat { a1, a2, .. } => a1.abs() + a2.abs(),
            SynapticWeightFn::SeparableProduct { amplitude, .. } => amplitude.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            SynapticWeightFn::Constant { kappa } => kappa == 0.0,
            SynapticWeightFn::Gaussian { amplitude, .. } => amplitude == 0.0,
            SynapticWeightFn::MexicanHat { a1, a2, .. } => a1 == 0.0 && a2 == 0.0,
            SynapticWeightFn::SeparableProduct { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// Sufficient condition for `w >= 0` everywhere.
    pub fn is_nonnegative(&self) -> bool {
        match *self {
            SynapticWeightFn::Constant { kappa } => kappa >= 0.0,
            SynapticWeightFn::Gaussian { amplitude, .. } => amplitude >= 0.0,
            SynapticWeightFn::MexicanHat { a1, a2, .. } => a1 >= 0.0 && a2 <= 0.0,
            SynapticWeightFn::SeparableProduct { amplitude, .. } => amplitude >= 0.0,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match *self {
            SynapticWeightFn::Constant { kappa } => check_finite(&format!("{path}.kappa"), kappa),
            SynapticWeightFn::Gaussian { amplitude, width } => {
                check_finite(&format!("{path}.amplitude"), amplitude)?;
                check_positive(&format!("{path}.width"), width)
            }
            SynapticWeightFn::MexicanHat {
                a1,
                sigma1,
                a2,
                sigma2,
            } => {
                check_finite(&format!("{path}.a1"), a1)?;
                check_positive(&format!("{path}.sigma1"), sigma1)?;
                check_finite(&format!("{path}.a2"), a2)?;
                check_positive(&format!("{path}.sigma2"), sigma2)
            }
            SynapticWeightFn::SeparableProduct {
                amplitude,
                width_pre,
                width_post,
            } => {
                check_finite(&format!("{path}.amplitude"), amplitude)?;
                check_positive(&format!("{path}.width_pre"), width_pre)?;
                check_positive(&format!("{path}.width_post"), width_post)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog() -> Vec<SynapticWeightFn> {
        vec![
            SynapticWeightFn::Constant { kappa: -0.7 },
            SynapticWeightFn::Gaussian {
                amplitude: 2.0,
                width: 0.3,
            },
            SynapticWeightFn::MexicanHat {
                a1: 1.5,
                sigma1: 0.2,
                a2: 0.8,
                sigma2: 0.6,
            },
            SynapticWeightFn::SeparableProduct {
                amplitude: -1.2,
                width_pre: 0.5,
                width_post: 0.25,
            },
        ]
    }

    #[test]
    fn sup_abs_dominates_samples() {
        let pts = [[0.0, 0.0], [0.1, -0.2], [1.0, 3.0], [-0.4, 0.4]];
        for w in catalog() {
            for y in &pts {
                for x in &pts {
                    for norm in [Norm::Linf, Norm::L2] {
                        assert!(w.eval(y, x, norm).abs() <= w.sup_abs() + 1e-15);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn two_argument_lipschitz(
            y in prop::array::uniform2(-2.0f64..2.0),
            x in prop::array::uniform2(-2.0f64..2.0),
            yp in prop::array::uniform2(-2.0f64..2.0),
            xp in prop::array::uniform2(-2.0f64..2.0),
        ) {
            for norm in [Norm::Linf, Norm::L2] {
                let gap = norm.dist(&x, &xp) + norm.dist(&y, &yp);
                for w in catalog() {
                    let diff = (w.eval(&y, &x, norm) - w.eval(&yp, &xp, norm)).abs();
                    prop_assert!(diff <= w.lip_const() * gap * (1.0 + 1e-9) + 1e-12,
                        "{:?} {:?}: {} > {}", w, norm, diff, w.lip_const() * gap);
                }
            }
        }
    }
}
