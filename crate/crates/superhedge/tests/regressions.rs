//! Pinned behaviour on small models and on generator seeds where a literal
//! reading of a formula goes wrong.

use num_traits::Zero;

use superhedge::decomp::{decompose_claim, FlowSign};
use superhedge::ext::{frac, Ext};
use superhedge::fixtures;
use superhedge::gen::{generate, GenConfig, PriceMode, TauRegime};
use superhedge::horizon::{dead_zone, no_dead_zone};
use superhedge::model::Model;
use superhedge::pricing::{
    aip, global_oracle, one_step_vulnerable, price_vulnerable, survival_incl_without_recovery, ClaimClass, HorizonMarket,
    Verdict,
};

/// Default at 1 on `w0` where the price falls; default at 0 on `{w1, w2}`,
/// which `F_1` cannot separate and on which the price never moves.
const NO_JUMP: &str = r#"{
  "horizon": 1,
  "assets": 1,
  "outcomes": [
    {"id": "w0", "prob": "1/2", "tau": 1, "prices": [["8", "7"]]},
    {"id": "w1", "prob": "1/6", "tau": 0, "prices": [["8", "8"]]},
    {"id": "w2", "prob": "1/3", "tau": 0, "prices": [["8", "8"]]}
  ],
  "filtration": [[["w0", "w1", "w2"]], [["w0"], ["w1", "w2"]]]
}"#;

fn no_jump_on_dead_zone(hm: &HorizonMarket) -> bool {
    let s = &hm.prices.s;
    (1..=hm.horizon())
        .all(|t| dead_zone(&hm.azema, t).iter().enumerate().all(|(w, &dz)| !dz || s.delta(t, w).iter().all(Zero::is_zero)))
}

#[test]
fn frozen_prices_on_the_dead_zone_do_not_align_the_three_verdicts() {
    let model = Model::from_text(NO_JUMP).unwrap();
    let hm = model.market().unwrap();
    assert!(!no_dead_zone(&hm.azema));
    assert!(no_jump_on_dead_zone(&hm));

    let stopped = aip(&hm.stopped());
    let violation = stopped.first_violation().expect("stopped market has a profit");
    assert_eq!(violation.time, 0);
    assert_eq!(model.space.block_name(&violation.support), "{w0}");
    assert_eq!(violation.verdict, Verdict::Violated { separator: vec![frac(1, 1)] });

    assert!(!aip(&hm.tilde()).holds());
    let bar = aip(&hm.bar());
    assert!(bar.holds());
    assert_eq!(bar.at(0, 0).verdict, Verdict::Holds { weights: vec![frac(0, 1), frac(1, 1), frac(0, 1)] });
}

#[test]
fn sweep_seed_57_meets_the_no_jump_hypothesis_yet_splits_the_verdicts() {
    let model = generate(&GenConfig::sweep(57)).unwrap();
    let hm = model.market().unwrap();
    assert!(no_jump_on_dead_zone(&hm));
    assert!(!no_dead_zone(&hm.azema));
    assert!(!aip(&hm.stopped()).holds());
    assert!(!aip(&hm.tilde()).holds());
    assert!(aip(&hm.bar()).holds());
}

#[test]
fn literal_inclusive_recursion_drops_the_horizon_payment() {
    let differs = (0..100).any(|seed| {
        let model = generate(&GenConfig::new(seed, TauRegime::ALL[(seed % 4) as usize], PriceMode::TildeAip)).unwrap();
        let hm = model.market().unwrap();
        let kit = model.kit(&hm).unwrap().unwrap().with_class(ClaimClass::SurvivalIncl);
        let Ok(priced) = price_vulnerable(&hm, &kit) else { return false };
        survival_incl_without_recovery(&hm, &kit).is_ok_and(|literal| literal != priced.f_process)
    });
    assert!(differs, "no seed in 0..100 separates the two recursions");
}

#[test]
fn printed_flow_sign_breaks_telescoping() {
    let broken = (0..100).any(|seed| {
        let model = generate(&GenConfig::new(seed, TauRegime::ALL[(seed % 4) as usize], PriceMode::TildeAip)).unwrap();
        let hm = model.market().unwrap();
        let kit = model.kit(&hm).unwrap().unwrap().with_class(ClaimClass::SurvivalStrict);
        let (Ok((pricing, derived)), Ok((_, printed))) =
            (decompose_claim(&hm, &kit, FlowSign::Derived), decompose_claim(&hm, &kit, FlowSign::AsPrinted))
        else {
            return false;
        };
        let form = pricing.g_form(&hm);
        assert_eq!(derived.total(), form, "seed {seed}: derived sign must telescope");
        printed.total() != form
    });
    assert!(broken, "no seed in 0..100 separates the two flow signs");
}

#[test]
fn m3_one_step_value_is_minus_infinity_on_survivors() {
    let model = fixtures::m3();
    let hm = model.market().unwrap();
    let kit = model.kit(&hm).unwrap().unwrap();
    let cmp = one_step_vulnerable(&hm, &kit, 1).unwrap();
    let survivors: Vec<usize> = (0..hm.outcomes()).filter(|&w| cmp.alive[w]).collect();
    assert!(!survivors.is_empty());
    for w in survivors {
        assert_eq!(cmp.lhs.0[w], Ext::NegInf);
        assert_eq!(cmp.rhs_qtilde.0[w], Ext::NegInf);
        assert_eq!(cmp.rhs_delta.0[w], Ext::NegInf);
    }
}

#[test]
fn m2_global_oracle_prices_at_one_third() {
    let model = fixtures::m2();
    let hm = model.market().unwrap();
    let kit = model.kit(&hm).unwrap().unwrap();
    let claim = kit.payoff(&hm, hm.horizon()).to_ext();
    let (price, _) = global_oracle(&hm.stopped(), &claim).unwrap();
    for w in 0..hm.outcomes() {
        assert_eq!(price.get(w), Some(&Ext::Fin(frac(1, 3))));
    }
}
