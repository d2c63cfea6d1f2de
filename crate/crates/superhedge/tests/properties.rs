//! Randomised properties of the exact numerics, the linear programs and the
//! model text format.

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use superhedge::ext::{fmt_q, frac, parse_q, Ext, Q};
use superhedge::gen::{generate, GenConfig};
use superhedge::lp::{dot, hull_contains_zero, minimax, HullOutcome, MinimaxInstance};
use superhedge::model::Model;
use superhedge::prob::{cond_esssup, cond_expect, Measure, Partition, RandVar};

fn rational() -> impl Strategy<Value = Q> {
    (-40i64..=40, 1i64..=12).prop_map(|(p, q)| frac(p, q))
}

fn vectors(dim: usize) -> impl Strategy<Value = Vec<Vec<Q>>> {
    prop::collection::vec(prop::collection::vec(rational(), dim), 1..=6)
}

proptest! {
    #[test]
    fn rationals_survive_a_text_round_trip(x in rational()) {
        prop_assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
    }

    #[test]
    fn minimax_value_is_the_minimum_of_the_objective(
        (rows, probes) in (1usize..=3).prop_flat_map(|d| (
            prop::collection::vec((rational(), prop::collection::vec(rational(), d)), 1..=6),
            prop::collection::vec(prop::collection::vec(rational(), d), 8),
        ))
    ) {
        let inst = MinimaxInstance::new(rows).unwrap();
        let out = minimax(&inst);
        match &out.value {
            Ext::Fin(v) => {
                let theta = out.argmin.as_ref().expect("finite value comes with a position");
                prop_assert_eq!(&inst.objective(theta), v);
                for probe in &probes {
                    prop_assert!(v <= &inst.objective(probe));
                }
            }
            Ext::NegInf => {
                let cert = out.certificate.as_ref().expect("-inf comes with a certificate");
                for (_, a) in inst.rows() {
                    prop_assert!(dot(cert, a) >= Q::from_integer(1.into()));
                }
            }
            Ext::PosInf => prop_assert!(false, "minimax over finite rows is never +inf"),
        }
    }

    #[test]
    fn hull_verdicts_carry_valid_witnesses(vs in (1usize..=3).prop_flat_map(vectors)) {
        match hull_contains_zero(&vs).unwrap() {
            HullOutcome::Inside { weights } => {
                prop_assert!(weights.iter().all(|w| !w.is_negative()));
                prop_assert_eq!(weights.iter().sum::<Q>(), Q::from_integer(1.into()));
                for k in 0..vs[0].len() {
                    let combo: Q = weights.iter().zip(&vs).map(|(w, v)| w * &v[k]).sum();
                    prop_assert!(combo.is_zero());
                }
            }
            HullOutcome::Outside { separator } => {
                for v in &vs {
                    prop_assert!(dot(&separator, v) <= Q::from_integer((-1).into()));
                }
            }
        }
    }

    #[test]
    fn esssup_dominates_the_conditional_mean(
        (values, weights, labels) in (1usize..=8).prop_flat_map(|n| (
            prop::collection::vec(rational(), n),
            prop::collection::vec(0i64..=4, n),
            prop::collection::vec(0u8..=2, n),
        ))
    ) {
        let n = values.len();
        let total: i64 = weights.iter().sum();
        prop_assume!(total > 0);
        let uniform = Measure::base(vec![frac(1, n as i64); n]).unwrap();
        let density = RandVar(weights.iter().map(|&k| frac(k * n as i64, total)).collect());
        let mu = Measure::with_density(&uniform, &density).unwrap();
        let part = Partition::trivial(n).split_by(|w| labels[w]);
        let x = RandVar(values);
        let sup = cond_esssup(std::slice::from_ref(&x), &part, &mu).unwrap();
        let mean = cond_expect(&x, &part, &mu);
        for w in 0..n {
            prop_assert_eq!(sup.is_defined(w), mean.defined[w]);
            if let Some(s) = sup.get(w) {
                prop_assert!(s >= &Ext::Fin(mean.value.0[w].clone()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_models_survive_a_text_round_trip(seed in 0u64..10_000) {
        let model = generate(&GenConfig::sweep(seed)).unwrap();
        let text = model.to_text();
        let again = Model::from_text(&text).unwrap();
        prop_assert_eq!(again.to_text(), text);
    }
}
