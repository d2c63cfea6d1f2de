//! Multi-period prices: backward recursion against the global oracle, the
//! G-side price against its reduced form, and the option recursion.

use num_traits::{Signed, Zero};

use super::{fan_out, stream, Failure, Plan, Site, Tally};
use crate::ext::{frac, Ext};
use crate::fixtures;
use crate::gen::{generate, GenConfig, PriceMode, TauRegime};
use crate::market::Process;
use crate::model::Model;
use crate::pricing::{
    aip, backward_price, global_oracle, one_step, options_simplify, price_vulnerable, survival_incl_without_recovery,
    ClaimClass, ClaimKit, HorizonMarket, MarketModel,
};
use crate::prob::ExtVar;

pub(super) fn run(plan: &Plan, seed: u64) -> Tally {
    let mut tally = fixture_checks();
    tally.merge(fan_out(seed, plan.multistep, instance));
    tally.merge(fan_out(stream(seed, 31), plan.options, options_instance));
    tally
}

fn setup(tag: &str, seed: u64, config: GenConfig) -> Result<(Model, HorizonMarket, ClaimKit), Tally> {
    let mut tally = Tally::default();
    let fail = |tally: &mut Tally, e: String| {
        let f = Failure { tag: tag.into(), seed: Some(seed), time: None, atom: "-".into(), lhs: e, rhs: "ok".into() };
        tally.fail(tag, f);
    };
    let model = match generate(&config) {
        Ok(m) => m,
        Err(e) => {
            fail(&mut tally, e.to_string());
            return Err(tally);
        }
    };
    let built = model.market().and_then(|hm| {
        let kit = model.kit(&hm).expect("generated models carry a claim")?;
        Ok((hm, kit))
    });
    match built {
        Ok((hm, kit)) => Ok((model, hm, kit)),
        Err(e) => {
            fail(&mut tally, e.to_string());
            Err(tally)
        }
    }
}

/// Backward recursion and the oracle agree at time 0 on every charged atom.
fn oracle_agrees(tally: &mut Tally, site: &Site, tag: &str, model: &MarketModel, terminal: &ExtVar) {
    let Some(report) = site.attempt(tally, tag, backward_price(model, terminal)) else { return };
    let Some((oracle, _)) = site.attempt(tally, tag, global_oracle(model, terminal)) else { return };
    site.each(tally, tag, Some(0), Some(&model.filtration[0]), |w| super::same_masked(&report.prices[0], &oracle, w));
}

fn instance(seed: u64) -> Tally {
    let regime = TauRegime::ALL[(seed % 4) as usize];
    let (model, hm, kit) = match setup("multistep.setup", seed, GenConfig::new(seed, regime, PriceMode::TildeAip)) {
        Ok(v) => v,
        Err(t) => return t,
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    let tilde = aip(&hm.tilde()).holds();
    tally.check("multistep.tilde_aip", tilde, || site.failure("multistep.tilde_aip", None, "-".into(), false, true));
    if !tilde {
        return tally;
    }
    tally.count("models", 1);
    let horizon = hm.horizon();
    let stopped = hm.stopped();
    for class in ClaimClass::ALL {
        let kit = kit.with_class(class);
        let name = class.name();
        let Some(vp) = site.attempt(&mut tally, &format!("g_form.{name}"), price_vulnerable(&hm, &kit)) else { continue };
        let form = vp.g_form(&hm);
        for t in 0..=horizon {
            site.each(&mut tally, &format!("g_form.{name}"), Some(t), Some(&hm.enlarged[t]), |w| {
                let direct = vp.g_report.prices[t].get(w).cloned();
                let reduced = Ext::Fin(form.at(t).0[w].clone());
                (direct.as_ref() != Some(&reduced))
                    .then(|| (direct.map_or_else(|| "undef".into(), |v| v.to_string()), reduced.to_string()))
            });
        }
        oracle_agrees(&mut tally, &site, &format!("oracle.stopped.{name}"), &stopped, &kit.payoff(&hm, horizon).to_ext());
        if class == ClaimClass::SurvivalIncl {
            if let Some(literal) = site.attempt(&mut tally, "g_form.survival_incl", survival_incl_without_recovery(&hm, &kit)) {
                if literal != vp.f_process {
                    tally.count("incl_literal_recursion_differs", 1);
                }
            }
        }
    }
    let terminal = kit.g.at(horizon).to_ext();
    oracle_agrees(&mut tally, &site, "oracle.tilde", &hm.tilde(), &terminal);
    for (label, m) in [("base", hm.base()), ("bar", hm.bar())] {
        if aip(&m).holds() {
            oracle_agrees(&mut tally, &site, &format!("oracle.{label}"), &m, &terminal);
        }
    }
    tally
}

fn options_instance(seed: u64) -> Tally {
    let regime = TauRegime::ALL[(seed % 4) as usize];
    let mut config = GenConfig::new(seed, regime, PriceMode::TildeAip);
    config.nonneg_claims = true;
    let (model, hm, kit) = match setup("options.setup", seed, config) {
        Ok(v) => v,
        Err(t) => return t,
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    tally.count("options_models", 1);
    let horizon = hm.horizon();
    let mut g_prices: Vec<(ClaimClass, Process)> = Vec::new();
    for class in ClaimClass::ALL {
        let kit = kit.with_class(class);
        let name = class.name();
        let tag = format!("options.simplified.{name}");
        let Some(vp) = site.attempt(&mut tally, &tag, price_vulnerable(&hm, &kit)) else { continue };
        let Some(simple) = site.attempt(&mut tally, &tag, options_simplify(&hm, &kit)) else { continue };
        for t in 0..=horizon {
            site.each(&mut tally, &tag, Some(t), Some(hm.space.at(t)), |w| {
                super::differ(&simple.at(t).0[w], &vp.f_process.at(t).0[w])
            });
        }
        if class == ClaimClass::Mixed {
            for t in 0..=horizon {
                let (x, g) = (vp.f_process.at(t), hm.azema.g.at(t));
                site.each(&mut tally, "options.reduced_nonnegative", Some(t), Some(hm.space.at(t)), |w| {
                    x.0[w].is_negative().then(|| (x.0[w].to_string(), ">= 0".into()))
                });
                site.each(&mut tally, "options.reduced_vanishes_after_horizon", Some(t), Some(hm.space.at(t)), |w| {
                    (g.0[w].is_zero() && !x.0[w].is_zero()).then(|| (x.0[w].to_string(), "0".into()))
                });
            }
        }
        g_prices.push((class, vp.g_form(&hm)));
    }
    let find = |c: ClaimClass| g_prices.iter().find(|(k, _)| *k == c).map(|(_, p)| p);
    if let (Some(mixed), Some(strict), Some(default)) =
        (find(ClaimClass::Mixed), find(ClaimClass::SurvivalStrict), find(ClaimClass::AtDefault))
    {
        for t in 0..=horizon {
            site.each(&mut tally, "options.mixed_dominates", Some(t), Some(&hm.enlarged[t]), |w| {
                let (m, s, d) = (&mixed.at(t).0[w], &strict.at(t).0[w], &default.at(t).0[w]);
                (m < s || m < d).then(|| (m.to_string(), format!("max({s}, {d})")))
            });
        }
    }
    tally
}

fn fixture_checks() -> Tally {
    let mut tally = Tally::default();
    let third = Ext::Fin(frac(1, 3));
    let hedge = Some(vec![frac(2, 3)]);

    let m1 = fixtures::m1();
    let site = Site::new(None, &m1.space);
    let hm = m1.market().expect("fixture m1 builds");
    let kit = m1.kit(&hm).expect("m1 carries a claim").expect("m1 claim is valid");
    let base = hm.base();
    let claim = kit.g.at(1).to_ext();
    let step = one_step(&base, 0, &claim).expect("m1 has one period");
    let backward = backward_price(&base, &claim).expect("m1 prices");
    let (oracle, atoms) = global_oracle(&base, &claim).expect("m1 prices");
    let g_side = price_vulnerable(&hm, &kit).expect("m1 satisfies AIP");
    let pipelines = [
        ("one_step", step.price.get(0).cloned(), step.atoms[0].theta.clone()),
        ("backward", backward.prices[0].get(0).cloned(), backward.steps[0][0].theta.clone()),
        ("oracle", oracle.get(0).cloned(), atoms[0].outcome.as_ref().and_then(|o| o.argmin.clone())),
        ("g_side", g_side.g_report.prices[0].get(0).cloned(), g_side.g_report.steps[0][0].theta.clone()),
    ];
    for (label, value, theta) in pipelines {
        let tag = format!("m1.{label}");
        let ok = value.as_ref() == Some(&third) && theta == hedge;
        tally.check(&tag, ok, || site.failure(&tag, Some(0), "-".into(), format!("{value:?} {theta:?}"), "1/3 with 2/3"));
    }

    let m2 = fixtures::m2();
    let site = Site::new(None, &m2.space);
    let hm = m2.market().expect("fixture m2 builds");
    let kit = m2.kit(&hm).expect("m2 carries a claim").expect("m2 claim is valid");
    let (oracle, _) = global_oracle(&hm.stopped(), &kit.payoff(&hm, 1).to_ext()).expect("m2 prices");
    site.each(&mut tally, "m2.oracle", Some(0), None, |w| {
        let v = oracle.get(w).cloned().unwrap_or(Ext::NegInf);
        super::differ(&v, &third)
    });
    tally
}
