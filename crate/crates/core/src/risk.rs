use crate::data::Dataset;
use crate::group::{Group, Mask};
use crate::hypothesis::{Hypothesis, HypothesisClass};
use crate::loss::BoundedLoss;
use crate::{Error, Result};

/// Anything that maps a feature vector to a prediction.
pub trait Predict {
    fn predict(&self, x: &[f64]) -> f64;
}

impl Predict for Hypothesis {
    fn predict(&self, x: &[f64]) -> f64 {
        Hypothesis::predict(self, x)
    }
}

impl<F: Fn(&[f64]) -> f64> Predict for F {
    fn predict(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Mean loss over the records selected by `mask`, summed in index order.
pub fn masked_loss<P: Predict + ?Sized>(
    data: &Dataset,
    predictor: &P,
    loss: &BoundedLoss,
    mask: &Mask,
) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in mask.ones_iter() {
        let r = data.get(i);
        sum += loss.eval(predictor.predict(&r.x), r.y);
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyGroup);
    }
    Ok(sum / count as f64)
}

/// `L_n(f | g)`: the average loss of `predictor` over members of `group`.
pub fn conditional_loss<P: Predict + ?Sized>(
    data: &Dataset,
    predictor: &P,
    loss: &BoundedLoss,
    group: &Group,
) -> Result<f64> {
    masked_loss(data, predictor, loss, &group.mask(data))
}

/// `L_n(f)`: the unconditional empirical loss.
pub fn empirical_loss<P: Predict + ?Sized>(data: &Dataset, predictor: &P, loss: &BoundedLoss) -> f64 {
    masked_loss(data, predictor, loss, &Mask::ones(data.len()))
        .expect("datasets are non-empty")
}

/// `P_n(g) * (L_n(f|g) - L_n(h|g))`, or zero when `g` has no members.
pub fn weighted_gap<F: Predict + ?Sized, H: Predict + ?Sized>(
    data: &Dataset,
    f: &F,
    h: &H,
    loss: &BoundedLoss,
    group: &Group,
) -> f64 {
    let mask = group.mask(data);
    let count = mask.count();
    if count == 0 {
        return 0.0;
    }
    let lf = masked_loss(data, f, loss, &mask).expect("non-empty");
    let lh = masked_loss(data, h, loss, &mask).expect("non-empty");
    weighted(count, data.len(), lf, lh)
}

#[inline]
pub(crate) fn weighted(count: usize, n: usize, lf: f64, lh: f64) -> f64 {
    (count as f64 / n as f64) * (lf - lh)
}

/// Empirical risk minimizer over `class`, optionally restricted to `mask`.
/// Ties go to the lowest hypothesis id.
pub fn erm<'a>(
    data: &Dataset,
    class: &'a HypothesisClass,
    loss: &BoundedLoss,
    mask: Option<&Mask>,
) -> Result<(&'a Hypothesis, f64)> {
    let all;
    let mask = match mask {
        Some(m) => m,
        None => {
            all = Mask::ones(data.len());
            &all
        }
    };
    if !mask.any() {
        return Err(Error::EmptyGroup);
    }
    let mut best: Option<(&Hypothesis, f64)> = None;
    for h in class.iter() {
        let l = masked_loss(data, h, loss, mask)?;
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((h, l));
        }
    }
    Ok(best.expect("hypothesis classes are non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Indicator;
    use alloc::vec;
    use alloc::vec::Vec;

    fn data(ys: &[f64]) -> Dataset {
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        Dataset::from_xy(&xs, ys).unwrap()
    }

    #[test]
    fn erm_exact_constant() {
        let d = data(&[0.5, 0.5]);
        let class = HypothesisClass::constants(&[0.0, 0.5, 1.0]).unwrap();
        let (h, l) = erm(&d, &class, &BoundedLoss::default(), None).unwrap();
        assert_eq!(h.id, 1);
        assert_eq!(l, 0.0);
    }

    #[test]
    fn erm_zero_one() {
        // constant 0 misclassifies one of three, constant 1 two of three.
        let d = data(&[0.0, 0.0, 1.0]);
        let class = HypothesisClass::constants(&[0.0, 1.0]).unwrap();
        let (h, l) = erm(&d, &class, &BoundedLoss::ZeroOne, None).unwrap();
        assert_eq!(h.id, 0);
        assert_eq!(l, 1.0 / 3.0);
    }

    #[test]
    fn erm_ties_to_lowest_id() {
        let d = data(&[0.5]);
        let class = HypothesisClass::constants(&[0.25, 0.75]).unwrap();
        let (h, _) = erm(&d, &class, &BoundedLoss::default(), None).unwrap();
        assert_eq!(h.id, 0);
    }

    #[test]
    fn erm_empty_mask() {
        let d = data(&[0.5]);
        let class = HypothesisClass::constants(&[0.25]).unwrap();
        let err = erm(&d, &class, &BoundedLoss::default(), Some(&Mask::zeros(1))).unwrap_err();
        assert_eq!(alloc::format!("{err}"), "empty group");
    }

    #[test]
    fn conditional_loss_examples() {
        // Per-record squared losses 0.2, 0.9, 0.4, 0.9 (predictor 0, y = sqrt(loss)).
        let losses = [0.2f64, 0.9, 0.4, 0.9];
        let ys: Vec<f64> = losses.iter().map(|l| libm::sqrt(*l)).collect();
        let d = data(&ys);
        let g = Group {
            id: 0,
            indicator: Indicator::custom(|x| x[0] == 0.0 || x[0] == 2.0),
        };
        let zero = |_: &[f64]| 0.0;
        let l = conditional_loss(&d, &zero, &BoundedLoss::default(), &g).unwrap();
        assert!((l - 0.3).abs() < 1e-12);

        let exact = data(&[0.4, 0.4, 0.4]);
        let c = |_: &[f64]| 0.4;
        assert_eq!(
            conditional_loss(&exact, &c, &BoundedLoss::default(), &Group::all(0)).unwrap(),
            0.0
        );

        let single = Group {
            id: 0,
            indicator: Indicator::custom(|x| x[0] == 1.0),
        };
        let l = conditional_loss(&d, &zero, &BoundedLoss::default(), &single).unwrap();
        assert!((l - 0.9).abs() < 1e-12);

        let empty = Group {
            id: 0,
            indicator: Indicator::custom(|_| false),
        };
        assert!(matches!(
            conditional_loss(&d, &zero, &BoundedLoss::default(), &empty),
            Err(Error::EmptyGroup)
        ));
        assert_eq!(weighted_gap(&d, &zero, &c, &BoundedLoss::default(), &empty), 0.0);
    }

    #[test]
    fn all_ones_conditional_is_unconditional() {
        let d = data(&[0.1, 0.7, 0.3]);
        let f = |x: &[f64]| x[0] * 0.2;
        let loss = BoundedLoss::default();
        assert_eq!(
            conditional_loss(&d, &f, &loss, &Group::all(0)).unwrap(),
            empirical_loss(&d, &f, &loss)
        );
    }

    #[test]
    fn weighted_gap_arithmetic() {
        // Two of four records in g; f has loss 0.8 on both, h has loss 0.2.
        let ys = vec![libm::sqrt(0.8), 0.0, libm::sqrt(0.8), 0.0];
        let d = data(&ys);
        let g = Group {
            id: 0,
            indicator: Indicator::custom(|x| x[0] == 0.0 || x[0] == 2.0),
        };
        let f = |_: &[f64]| 0.0;
        let s = libm::sqrt(0.8) - libm::sqrt(0.2);
        let h = move |_: &[f64]| s;
        let gap = weighted_gap(&d, &f, &h, &BoundedLoss::default(), &g);
        assert!((gap - 0.3).abs() < 1e-12);
        assert_eq!(weighted_gap(&d, &f, &f, &BoundedLoss::default(), &g), 0.0);
    }
}
