use multigroup_core::hypothesis::HypothesisKind;
use multigroup_core::{Group, Hypothesis, Indicator, Predict, UpdateChain};
use proptest::prelude::*;

fn constant(id: usize, c: f64) -> Hypothesis {
    Hypothesis { id, kind: HypothesisKind::Constant(c) }
}

fn interval(id: usize, lo: f64, hi: f64) -> Group {
    Group { id, indicator: Indicator::interval(lo, hi) }
}

prop_compose! {
    fn updates()(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 0..=5))
        -> Vec<(f64, f64, f64)> {
        raw
    }
}

proptest! {
    #[test]
    fn unit_steps_match_most_recent_covering_pair(
        base in 0.0f64..1.0,
        ups in updates(),
        x in -0.2f64..1.2,
    ) {
        let mut chain = UpdateChain::new(constant(0, base));
        for (k, &(a, b, c)) in ups.iter().enumerate() {
            chain.push(1.0, interval(k, a.min(b), a.max(b)), constant(k + 1, c));
        }
        let expected = ups
            .iter()
            .rev()
            .find(|&&(a, b, _)| a.min(b) <= x && x <= a.max(b))
            .map_or(base, |&(_, _, c)| c);
        prop_assert_eq!(chain.predict(&[x]), expected);
    }

    #[test]
    fn fractional_steps_stay_between_old_and_new(
        base in 0.0f64..1.0,
        h in 0.0f64..1.0,
        eta in 0.01f64..1.0,
    ) {
        let mut chain = UpdateChain::new(constant(0, base));
        chain.push(eta, Group::all(0), constant(1, h));
        let v = chain.predict(&[0.5]);
        prop_assert!(v >= base.min(h) - 1e-15 && v <= base.max(h) + 1e-15);
    }
}

#[test]
fn half_step_from_zero_to_one() {
    let mut chain = UpdateChain::new(constant(0, 0.0));
    chain.push(0.5, Group::all(0), constant(1, 1.0));
    for x in [-3.0, 0.0, 0.3, 10.0] {
        assert_eq!(chain.predict(&[x]), 0.5);
    }
}
