//! Decomposition of G-side prices into labelled terms, the martingale
//! property of each term, and the two G-martingale identities.

use num_traits::Zero;
use rand::Rng;

use super::{fan_out, stream, Failure, Plan, Site, Tally};
use crate::ext::{frac, Q};
use crate::fixtures;
use crate::gen::{generate, random_martingale, random_predictable, rng_for, GenConfig, PriceMode, TauRegime};
use crate::horizon::transform;
use crate::market::{martingale_defect, Process};
use crate::model::Model;
use crate::pricing::{aip, ClaimClass, HorizonMarket};
use crate::decomp::{decompose_claim, gmart_identities, FlowSign};

pub(super) fn run(plan: &Plan, seed: u64) -> Tally {
    let mut tally = m2_fixture();
    tally.merge(fan_out(seed, plan.decomp, instance));
    tally.merge(fan_out(stream(seed, 41), plan.identities, identity_instance));
    tally
}

fn build(tag: &str, seed: u64, regime: TauRegime) -> Result<(Model, HorizonMarket), Tally> {
    let built = generate(&GenConfig::new(seed, regime, PriceMode::TildeAip)).and_then(|m| {
        let hm = m.market()?;
        Ok((m, hm))
    });
    built.map_err(|e| {
        let mut tally = Tally::default();
        let f = Failure { tag: tag.into(), seed: Some(seed), time: None, atom: "-".into(), lhs: e.to_string(), rhs: "ok".into() };
        tally.fail(tag, f);
        tally
    })
}

/// One instance of `tag`: `x` has no drift under `P` along `filtration`.
fn martingale(tally: &mut Tally, site: &Site, tag: &str, x: &Process, filtration: &[crate::prob::Partition]) {
    let defect = martingale_defect(x, filtration, site.space.prob());
    tally.check(tag, defect.is_none(), || {
        let (t, b) = defect.expect("failure implies a defect");
        site.failure(tag, Some(t), site.space.block_name(filtration[t - 1].block(b)), "drift", "0")
    });
}

fn instance(seed: u64) -> Tally {
    let (model, hm) = match build("decomp.setup", seed, TauRegime::ALL[(seed % 4) as usize]) {
        Ok(v) => v,
        Err(t) => return t,
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    if !aip(&hm.tilde()).holds() {
        tally.fail("decomp.tilde_aip", site.failure("decomp.tilde_aip", None, "-".into(), false, true));
        return tally;
    }
    let Some(kit) = site.attempt(&mut tally, "decomp.claim", model.kit(&hm).expect("generated models carry a claim")) else {
        return tally;
    };
    tally.count("models", 1);
    let f = hm.space.filtration();
    let g = &hm.enlarged;
    martingale(&mut tally, &site, "martingale.m", &hm.hazard.m, f);
    martingale(&mut tally, &site, "martingale.deflator", &hm.deflator.z, f);
    martingale(&mut tally, &site, "martingale.ng", &hm.hazard.ng, g);

    for class in ClaimClass::ALL {
        let name = class.name();
        let kit = kit.with_class(class);
        let tag = format!("telescoping.{name}");
        let Some((pricing, report)) = site.attempt(&mut tally, &tag, decompose_claim(&hm, &kit, FlowSign::Derived)) else {
            continue;
        };
        let total = report.total();
        let form = pricing.g_form(&hm);
        for t in 0..=hm.horizon() {
            site.each(&mut tally, &tag, Some(t), Some(&g[t]), |w| {
                let direct = pricing.g_report.prices[t].get(w).and_then(|v| v.finite().cloned());
                let lhs = &total.at(t).0[w];
                super::differ(lhs, &form.at(t).0[w]).or_else(|| match direct {
                    Some(d) => super::differ(lhs, &d),
                    None => Some((lhs.to_string(), "undef".into())),
                })
            });
        }
        let problem = report.quadruplet.check(&hm, &pricing.f_process);
        tally.check(&format!("quadruplet.{name}"), problem.is_none(), || {
            site.failure(&format!("quadruplet.{name}"), None, "-".into(), problem.clone().unwrap_or_default(), "none")
        });
        for (term, process) in report.martingale_terms() {
            martingale(&mut tally, &site, &format!("martingale.{term}.{name}"), process, g);
        }
        if let Some(tm) = site.attempt(&mut tally, "martingale.transform", transform(&hm.space, &hm.tau, &hm.azema, &report.quadruplet.m)) {
            martingale(&mut tally, &site, &format!("martingale.transform.{name}"), &tm, g);
        }
        if class == ClaimClass::SurvivalStrict {
            if let Ok((_, printed)) = decompose_claim(&hm, &kit, FlowSign::AsPrinted) {
                if printed.total() != form {
                    tally.count("as_printed_flow_sign_mismatch", 1);
                }
            }
        }
    }
    tally
}

fn identity_instance(seed: u64) -> Tally {
    let (model, hm) = match build("identities.setup", seed, TauRegime::ALL[(seed % 4) as usize]) {
        Ok(v) => v,
        Err(t) => return t,
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    tally.count("identity_instances", 1);
    let mut rng = rng_for(stream(seed, 5));
    let den = rng.random_range(2..=12);
    let m = random_martingale(&mut rng, &hm.space, hm.space.prob(), den);
    let v = random_predictable(&mut rng, &hm.space, den, -3, 3);
    if let Some(res) = site.attempt(&mut tally, "identities", gmart_identities(&hm, &m, &v)) {
        for (tag, p) in [("identities.weighted_drift", &res.weighted_drift), ("identities.stopped_martingale", &res.stopped_martingale)] {
            for t in 0..=hm.horizon() {
                site.each(&mut tally, tag, Some(t), None, |w| super::differ(&p.at(t).0[w], &Q::zero()));
            }
        }
    }
    if let Some(tm) = site.attempt(&mut tally, "identities.transform", transform(&hm.space, &hm.tau, &hm.azema, &m)) {
        martingale(&mut tally, &site, "identities.transform_is_g_martingale", &tm, &hm.enlarged);
    }
    tally
}

/// On M2 the survival claim loses half its reduced value at the horizon date:
/// `Ṽ_1 = -E[X_1 (G̃_1 - G_1) | F_0] = -1/2 E[X_1 | F_0] = -1/4`.
fn m2_fixture() -> Tally {
    let mut tally = Tally::default();
    let model = fixtures::m2();
    let site = Site::new(None, &model.space);
    let hm = model.market().expect("fixture m2 builds");
    let kit = model.kit(&hm).expect("m2 carries a claim").expect("m2 claim is valid");
    let (_, report) = decompose_claim(&hm, &kit, FlowSign::Derived).expect("m2 satisfies AIP");
    let expected = -frac(1, 4);
    site.each(&mut tally, "m2.vtilde", Some(1), None, |w| super::differ(&report.quadruplet.vtilde.at(1).0[w], &expected));
    tally
}
