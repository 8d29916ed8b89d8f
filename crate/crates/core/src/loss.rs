use crate::math;
use crate::{Error, Result};

/// Losses with values in `[0, 1]`.
///
/// Squared and absolute error are divided by `scale` (resp. `scale^2`) and
/// clamped at one, so that targets outside the unit interval can still be fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundedLoss {
    ClampedSquared { scale: f64 },
    ClampedAbsolute { scale: f64 },
    /// Compares the prediction rounded to the nearest class index with `y`.
    ZeroOne,
}

impl Default for BoundedLoss {
    fn default() -> Self {
        BoundedLoss::ClampedSquared { scale: 1.0 }
    }
}

impl BoundedLoss {
    pub fn squared(scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(BoundedLoss::ClampedSquared { scale })
    }

    pub fn absolute(scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(BoundedLoss::ClampedAbsolute { scale })
    }

    #[inline]
    pub fn eval(&self, z: f64, y: f64) -> f64 {
        let v = match *self {
            BoundedLoss::ClampedSquared { scale } => {
                let d = (z - y) / scale;
                d * d
            }
            BoundedLoss::ClampedAbsolute { scale } => ((z - y) / scale).abs(),
            BoundedLoss::ZeroOne => {
                if math::round(z) == y {
                    0.0
                } else {
                    1.0
                }
            }
        };
        // NaN compares false and is mapped to the maximal loss.
        if v <= 1.0 {
            v
        } else {
            1.0
        }
    }

    /// Whether `z -> eval(z, y)` is convex on the region where it is not
    /// clamped. Only meaningful for the fractional-update guarantees.
    pub fn is_convex(&self) -> bool {
        !matches!(self, BoundedLoss::ZeroOne)
    }

    pub fn name(&self) -> &'static str {
        match self {
            BoundedLoss::ClampedSquared { .. } => "squared",
            BoundedLoss::ClampedAbsolute { .. } => "absolute",
            BoundedLoss::ZeroOne => "zero-one",
        }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("loss scale must be positive and finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamping() {
        let sq = BoundedLoss::squared(1.0).unwrap();
        assert_eq!(sq.eval(0.5, 0.0), 0.25);
        assert_eq!(sq.eval(4.0, 0.0), 1.0);
        let sq2 = BoundedLoss::squared(2.0).unwrap();
        assert_eq!(sq2.eval(1.0, 0.0), 0.25);
        let abs = BoundedLoss::absolute(0.5).unwrap();
        assert_eq!(abs.eval(0.25, 0.0), 0.5);
        assert_eq!(BoundedLoss::ZeroOne.eval(0.4, 0.0), 0.0);
        assert_eq!(BoundedLoss::ZeroOne.eval(0.6, 0.0), 1.0);
        assert!(BoundedLoss::squared(0.0).is_err());
        assert_eq!(sq.eval(f64::NAN, 0.0), 1.0);
    }

    proptest! {
        #[test]
        fn losses_in_unit_interval(z in -1e6f64..1e6, y in -1e6f64..1e6, scale in 1e-3f64..1e3) {
            for loss in [
                BoundedLoss::ClampedSquared { scale },
                BoundedLoss::ClampedAbsolute { scale },
                BoundedLoss::ZeroOne,
            ] {
                let v = loss.eval(z, y);
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
