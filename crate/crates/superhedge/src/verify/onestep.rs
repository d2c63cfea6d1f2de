//! One-period prices of vulnerable claims: the direct G-side price against
//! the two reduced F-side forms.

use super::{fan_out, Failure, Plan, Site, Tally};
use crate::ext::{frac, Ext};
use crate::fixtures;
use crate::gen::{generate, GenConfig};
use crate::model::Model;
use crate::pricing::{one_step_vulnerable, ClaimClass, ClaimKit, HorizonMarket};

pub(super) fn run(plan: &Plan, seed: u64) -> Tally {
    let mut tally = fixture_checks();
    tally.merge(fan_out(seed, plan.sweep, instance));
    tally
}

fn instance(seed: u64) -> Tally {
    let mut tally = Tally::default();
    let model = match generate(&GenConfig::sweep(seed)) {
        Ok(m) => m,
        Err(e) => {
            let f = Failure { tag: "onestep.generate".into(), seed: Some(seed), time: None, atom: "-".into(), lhs: e.to_string(), rhs: "ok".into() };
            tally.fail("onestep.generate", f);
            return tally;
        }
    };
    let site = Site::new(Some(seed), &model.space);
    let Some(hm) = site.attempt(&mut tally, "onestep.market", model.market()) else { return tally };
    let Some(kit) = site.attempt(&mut tally, "onestep.claim", model.kit(&hm).expect("generated models carry a claim")) else {
        return tally;
    };
    tally.count("models", 1);
    for class in ClaimClass::ALL {
        compare_class(&mut tally, &site, &hm, &kit.with_class(class));
    }
    tally
}

fn compare_class(tally: &mut Tally, site: &Site, hm: &HorizonMarket, kit: &ClaimKit) {
    let name = kit.class.name();
    for t in 1..=hm.horizon() {
        let Some(cmp) = site.attempt(tally, &format!("one_step.{name}"), one_step_vulnerable(hm, kit, t)) else { continue };
        let part = &hm.enlarged[t - 1];
        site.each(tally, &format!("one_step.alive.{name}"), Some(t), Some(part), |w| {
            if !cmp.alive[w] {
                return None;
            }
            let (l, q, d) = (&cmp.lhs.0[w], &cmp.rhs_qtilde.0[w], &cmp.rhs_delta.0[w]);
            (l != q || l != d).then(|| (l.to_string(), format!("{q}|{d}")))
        });
        if kit.class.has_recovery() {
            site.each(tally, &format!("one_step.after_horizon.{name}"), Some(t), Some(part), |w| {
                if cmp.alive[w] {
                    return None;
                }
                let frozen = Ext::Fin(cmp.frozen.0[w].clone());
                let l = &cmp.lhs.0[w];
                (!l.is_finite() || *l < frozen).then(|| (l.to_string(), format!(">= {frozen}")))
            });
            let slack = (0..hm.outcomes()).any(|w| !cmp.alive[w] && cmp.lhs.0[w] > Ext::Fin(cmp.frozen.0[w].clone()));
            if slack {
                tally.count("recovery_slack_positive", 1);
            }
        } else {
            site.each(tally, &format!("one_step.after_horizon.{name}"), Some(t), Some(part), |w| {
                (!cmp.alive[w]).then(|| super::differ(&cmp.lhs.0[w], &Ext::zero())).flatten()
            });
        }
        if cmp.alive.contains(&false) {
            tally.count("one_step_with_dead_outcomes", 1);
        }
    }
}

/// Every side equal to `expected` on `{τ >= 1}` for the fixture's own claim.
fn fixture_value(tally: &mut Tally, tag: &str, model: &Model, expected: &Ext) {
    let site = Site::new(None, &model.space);
    let hm = model.market().expect("fixture builds");
    let kit = model.kit(&hm).expect("fixture carries a claim").expect("fixture claim is valid");
    let cmp = one_step_vulnerable(&hm, &kit, 1).expect("fixture horizon is one");
    site.each(tally, tag, Some(1), Some(&hm.enlarged[0]), |w| {
        if !cmp.alive[w] {
            return None;
        }
        [&cmp.lhs.0[w], &cmp.rhs_qtilde.0[w], &cmp.rhs_delta.0[w]]
            .into_iter()
            .find(|v| *v != expected)
            .map(|v| (v.to_string(), expected.to_string()))
    });
}

fn fixture_checks() -> Tally {
    let mut tally = Tally::default();
    fixture_value(&mut tally, "one_step.m2", &fixtures::m2(), &Ext::Fin(frac(1, 3)));
    // On M3 the surviving atom carries an immediate profit, so every side is -inf.
    fixture_value(&mut tally, "one_step.m3", &fixtures::m3(), &Ext::NegInf);
    tally
}
