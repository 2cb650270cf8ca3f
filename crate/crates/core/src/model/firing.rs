use serde::{Deserialize, Serialize};

use super::{check_finite, check_nonnegative};
use crate::Result;

/// Spike-rate function `f: R -> R_+`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum FiringRateFn {
    /// `f_max / (1 + exp(-gain (u - threshold)))`.
    Sigmoid {
        f_max: f64,
        gain: f64,
        threshold: f64,
    },
    /// `clamp(slope * u, floor, ceiling)` with `0 <= floor <= ceiling`.
    PiecewiseLinear { slope: f64, floor: f64, ceiling: f64 },
    /// `max(0, slope * u + offset)`.
    RectifiedLinear { slope: f64, offset: f64 },
    Constant { c: f64 },
}

impl FiringRateFn {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            FiringRateFn::Sigmoid {
                f_max,
                gain,
                threshold,
            } => {
                let z = gain * (u - threshold);
                if z >= 0.0 {
                    f_max / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    f_max * e / (1.0 + e)
                }
            }
            FiringRateFn::PiecewiseLinear {
                slope,
                floor,
                ceiling,
            } => (slope * u).clamp(floor, ceiling),
            FiringRateFn::RectifiedLinear { slope, offset } => (slope * u + offset).max(0.0),
            FiringRateFn::Constant { c } => c,
        }
    }

    /// Declared Lipschitz constant `L_f`.
    pub fn lip_const(&self) -> f64 {
        match *self {
            FiringRateFn::Sigmoid { f_max, gain, .. } => f_max * gain.abs() / 4.0,
            FiringRateFn::PiecewiseLinear { slope, .. } => slope.abs(),
            FiringRateFn::RectifiedLinear { slope, .. } => slope.abs(),
            FiringRateFn::Constant { .. } => 0.0,
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        match *self {
            FiringRateFn::Sigmoid {
                f_max,
                gain,
                threshold,
            } => f_max / (1.0 + (gain * threshold).exp()),
            FiringRateFn::PiecewiseLinear { floor, .. } => floor,
            FiringRateFn::RectifiedLinear { offset, .. } => offset.max(0.0),
            FiringRateFn::Constant { c } => c,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match *self {
            FiringRateFn::Sigmoid { gain, .. } => gain >= 0.0,
            FiringRateFn::PiecewiseLinear { slope, .. } => slope >= 0.0,
            FiringRateFn::RectifiedLinear { slope, .. } => slope >= 0.0,
            FiringRateFn::Constant { .. } => true,
        }
    }

    /// Upper bound `f(0) + L_f |u| >= f(u)`.
    #[inline]
    pub fn linear_bound(&self, abs_u: f64) -> f64 {
        self.value_at_zero() + self.lip_const() * abs_u
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        match *self {
            FiringRateFn::Sigmoid {
                f_max,
                gain,
                threshold,
            } => {
                check_nonnegative(&format!("{path}.f_max"), f_max)?;
                check_finite(&format!("{path}.gain"), gain)?;
                check_finite(&format!("{path}.threshold"), threshold)
            }
            FiringRateFn::PiecewiseLinear {
                slope,
                floor,
                ceiling,
            } => {
                check_finite(&format!("{path}.slope"), slope)?;
                check_nonnegative(&format!("{path}.floor"), floor)?;
                check_finite(&format!("{path}.ceiling"), ceiling)?;
                if ceiling < floor {
                    return Err(crate::Error::invalid(
                        format!("{path}.ceiling"),
                        "ceiling must not be below floor",
                    ));
                }
                Ok(())
            }
            FiringRateFn::RectifiedLinear { slope, offset } => {
                check_finite(&format!("{path}.slope"), slope)?;
                check_finite(&format!("{path}.offset"), offset)
            }
            FiringRateFn::Constant { c } => check_nonnegative(&format!("{path}.c"), c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn catalog() -> Vec<FiringRateFn> {
        vec![
            FiringRateFn::Sigmoid {
                f_max: 1.0,
                gain: 1.0,
                threshold: 0.0,
            },
            FiringRateFn::Sigmoid {
                f_max: 5.0,
                gain: 3.0,
                threshold: 1.5,
            },
            FiringRateFn::PiecewiseLinear {
                slope: 2.0,
                floor: 0.1,
                ceiling: 4.0,
            },
            FiringRateFn::RectifiedLinear {
                slope: 1.0,
                offset: 0.0,
            },
            FiringRateFn::RectifiedLinear {
                slope: 0.7,
                offset: 1.0,
            },
            FiringRateFn::Constant { c: 2.0 },
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(FiringRateFn::Constant { c: 2.0 }.eval(-17.0), 2.0);
        let relu = FiringRateFn::RectifiedLinear {
            slope: 1.0,
            offset: 0.0,
        };
        assert_eq!(relu.eval(-3.0), 0.0);
        let sig = FiringRateFn::Sigmoid {
            f_max: 1.0,
            gain: 1.0,
            threshold: 0.0,
        };
        assert_eq!(sig.eval(0.0), 0.5);
    }

    #[test]
    fn value_at_zero_matches_eval() {
        for f in catalog() {
            assert!((f.eval(0.0) - f.value_at_zero()).abs() < 1e-15, "{f:?}");
        }
    }

    #[test]
    fn sigmoid_is_stable_far_out() {
        let sig = FiringRateFn::Sigmoid {
            f_max: 3.0,
            gain: 10.0,
            threshold: 0.0,
        };
        assert_eq!(sig.eval(1e6), 3.0);
        assert_eq!(sig.eval(-1e6), 0.0);
    }

    #[test]
    fn invalid_piecewise_rejected() {
        let f = FiringRateFn::PiecewiseLinear {
            slope: 1.0,
            floor: 2.0,
            ceiling: 1.0,
        };
        assert!(f.validate("firing_rate").is_err());
        let g = FiringRateFn::Constant { c: -1.0 };
        assert!(g.validate("firing_rate").is_err());
    }

    proptest! {
        #[test]
        fn lipschitz_and_nonnegative(u in -50.0f64..50.0, v in -50.0f64..50.0) {
            for f in catalog() {
                let (fu, fv) = (f.eval(u), f.eval(v));
                prop_assert!(fu >= 0.0 && fv >= 0.0);
                let bound = f.lip_const() * (u - v).abs();
                prop_assert!((fu - fv).abs() <= bound * (1.0 + 1e-9) + 1e-12,
                    "{:?}: |f(u)-f(v)|={} > {}", f, (fu - fv).abs(), bound);
                prop_assert!(fu <= f.linear_bound(u.abs()) * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
