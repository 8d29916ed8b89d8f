mod common;

use common::{grid, random_instance, statistic};
use multigroup_core::learners::{
    fractional_group_prepend, fractional_prepend, fractional_shaky_prepend, fractional_variant,
    group_prepend, prepend, shaky_prepend, Base, LearnerConfig, Method,
};
use multigroup_core::risk::empirical_loss;
use multigroup_core::{BoundedLoss, Predict};
use proptest::prelude::*;

const LOSS: BoundedLoss = BoundedLoss::ClampedSquared { scale: 1.0 };

#[test]
fn stopping_certificate_holds_on_random_instances() {
    let lambda = 0.004;
    for seed in 0..50 {
        let s = random_instance(seed);
        let runs = [
            (Method::Prepend, 1.0, false),
            (Method::GroupPrepend, 1.0, true),
            (Method::FractionalPrepend, 0.5, false),
            (Method::FractionalGroupPrepend, 0.5, true),
            (Method::Shaky, 1.0, true),
        ];
        for (method, eta, weighted) in runs {
            let cfg = LearnerConfig::new(lambda).with_eta(eta).with_seed(seed);
            let (chain, trace) = method.fit_chain(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
            assert!(trace.completed);
            for g in 0..s.groups.len() {
                for h in 0..s.hyps.len() {
                    if let Some(v) = statistic(&s, &chain, g, h, eta, weighted, &LOSS) {
                        assert!(v < lambda, "{method} seed {seed} ({g},{h}): {v}");
                    }
                }
            }
        }
    }
}

#[test]
fn group_prepend_never_exceeds_inverse_lambda_updates() {
    for seed in 0..40 {
        let s = random_instance(seed);
        for lambda in [0.001, 0.01, 0.05] {
            let cfg = LearnerConfig::new(lambda);
            let (_, t) = group_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
            assert!(t.num_updates <= cfg.inverse_lambda_cap());
            assert!(t.num_updates as f64 <= (t.alpha / lambda).ceil());
        }
    }
}

#[test]
fn monotone_traces() {
    for seed in 0..30 {
        let s = random_instance(seed);
        let cfg = LearnerConfig::new(0.002);
        let (chain, t) = group_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
        for it in t.accepted() {
            assert!(it.post_loss <= it.pre_loss - cfg.lambda + 1e-12);
        }
        assert!((t.final_loss() - empirical_loss(&s.data, &chain, &LOSS)).abs() < 1e-12);
        let cfg = cfg.with_eta(0.5);
        let (_, t) = fractional_group_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
        for it in t.accepted() {
            assert!(it.post_loss <= it.pre_loss - cfg.lambda + 1e-12);
        }
    }
}

#[test]
fn full_step_fractional_variants_equal_their_bases() {
    for seed in 0..20 {
        let s = random_instance(seed);
        let cfg = LearnerConfig::new(0.003).with_seed(seed).with_eta(1.0);
        let noisy = cfg.with_sigma(0.002);
        let pairs = [
            (Base::Prepend, prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg), cfg),
            (Base::GroupPrepend, group_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg), cfg),
            (Base::Shaky, shaky_prepend(&s.data, &s.groups, &s.hyps, LOSS, &noisy), noisy),
        ];
        let xs = grid(seed, 200);
        for (base, out, c) in pairs {
            let (bc, bt) = out.unwrap();
            let (fc, ft) = fractional_variant(base, &s.data, &s.groups, &s.hyps, LOSS, &c).unwrap();
            assert_eq!(bc.signature(), fc.signature());
            assert_eq!(bt, ft);
            for &x in &xs {
                assert_eq!(bc.predict(&[x]).to_bits(), fc.predict(&[x]).to_bits());
            }
        }
    }
}

#[test]
fn runs_are_bit_identical_per_seed() {
    let s = random_instance(77);
    let cfg = LearnerConfig::new(0.003).with_sigma(0.001).with_eta(0.5).with_seed(4);
    let a = fractional_shaky_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
    let b = fractional_shaky_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
    assert_eq!(a.0.signature(), b.0.signature());
    assert_eq!(a.1, b.1);
    let a = fractional_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
    let b = fractional_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
    assert_eq!(a.1, b.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_step_chain_is_a_decision_list(seed in 0u64..10_000, lambda in 0.001f64..0.05) {
        let s = random_instance(seed);
        let (chain, _) = prepend(&s.data, &s.groups, &s.hyps, LOSS, &LearnerConfig::new(lambda)).unwrap();
        for x in grid(seed, 50) {
            let listed = chain
                .updates
                .iter()
                .rev()
                .find(|u| u.group.contains(&[x]))
                .map_or_else(|| chain.base.predict(&[x]), |u| u.hypothesis.predict(&[x]));
            prop_assert_eq!(chain.predict(&[x]), listed);
        }
    }

    #[test]
    fn noise_off_shaky_accepts_only_above_lambda(seed in 0u64..10_000) {
        let s = random_instance(seed);
        let cfg = LearnerConfig::new(0.005);
        let (_, t) = shaky_prepend(&s.data, &s.groups, &s.hyps, LOSS, &cfg).unwrap();
        for it in t.accepted() {
            prop_assert!(it.statistic.unwrap() >= cfg.lambda);
        }
        prop_assert!(t.num_updates <= cfg.inverse_lambda_cap());
    }
}
