//! Immediate-profit verdicts: the three models attached to a random horizon,
//! predictable price processes, and stopping at horizons with and without a
//! dead zone.

use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{fan_out, stream, Failure, Plan, Site, Tally};
use crate::error::Result;
use crate::ext::{Ext, Q};
use crate::fixtures;
use crate::gen::{
    adapted_increments, generate, is_unit, random_adapted, random_martingale, random_predictable, random_q, random_space,
    rng_for, GenConfig, PriceMode, Rng64, TauRegime,
};
use crate::horizon::{dead_zone, no_dead_zone};
use crate::lp::dot;
use crate::market::{sint, Process, VecProcess};
use crate::pricing::{aip, AipReport, AtomVerdict, HorizonMarket, MarketModel, Verdict};
use crate::prob::{cond_esssup, cond_prob, FilteredSpace, RandVar};

pub(super) fn run(plan: &Plan, seed: u64) -> Tally {
    let mut tally = m3_fixture();
    tally.merge(fan_out(seed, plan.sweep, sweep_instance));
    tally.merge(fan_out(stream(seed, 21), plan.predictable, predictable_instance));
    let paths = plan.universal_paths;
    tally.merge(fan_out(stream(seed, 22), plan.universal, |s| universal_instance(s, paths)));
    tally.merge(fan_out(stream(seed, 23), plan.deadzone, deadzone_instance));
    tally
}

fn setup_failure(tag: &str, seed: u64, e: impl ToString) -> Tally {
    let mut tally = Tally::default();
    let f = Failure { tag: tag.into(), seed: Some(seed), time: None, atom: "-".into(), lhs: e.to_string(), rhs: "ok".into() };
    tally.fail(tag, f);
    tally
}

/// Why a verdict's certificate does not check out, if it does not.
fn certificate_problem(model: &MarketModel, atom: &AtomVerdict) -> Option<(String, String)> {
    let charged = model.charged(atom.time, atom.block);
    if atom.support != charged {
        return Some((format!("support {:?}", atom.support), format!("charged {charged:?}")));
    }
    let delta = |w: usize| model.prices.delta(atom.time + 1, w);
    match &atom.verdict {
        Verdict::Null => (!charged.is_empty()).then(|| ("null".into(), "charged atom".into())),
        Verdict::Holds { weights } => {
            if weights.len() != charged.len() || weights.iter().any(Signed::is_negative) {
                return Some(("weights".into(), "nonnegative, one per outcome".into()));
            }
            let total: Q = weights.iter().sum();
            if !total.is_one() {
                return Some((format!("sum {total}"), "1".into()));
            }
            let mut barycentre = vec![Q::zero(); model.prices.dim()];
            for (wt, &w) in weights.iter().zip(&charged) {
                for (b, d) in barycentre.iter_mut().zip(delta(w)) {
                    *b += wt * d;
                }
            }
            barycentre.iter().any(|b| !b.is_zero()).then(|| ("barycentre".into(), "0".into()))
        }
        Verdict::Violated { separator } => charged.iter().find_map(|&w| {
            let gain = dot(separator, &delta(w));
            (gain > -Q::one()).then(|| (format!("separator gain {gain}"), "<= -1".into()))
        }),
    }
}

/// Re-verifies every certificate of `report`, one instance per atom.
fn certify(tally: &mut Tally, site: &Site, label: &str, model: &MarketModel, report: &AipReport) {
    let tag = format!("certificate.{label}");
    for atom in report.atoms.iter().flatten() {
        let problem = certificate_problem(model, atom);
        let name = site.space.block_name(model.filtration[atom.time].block(atom.block));
        match problem {
            None => tally.pass(&tag),
            Some((lhs, rhs)) => tally.fail(&tag, site.failure(&tag, Some(atom.time), name, lhs, rhs)),
        }
    }
}

/// Compares the verdicts with the sign of `esssup(θ·ΔX | H_t)` for sampled
/// strategies, using the separator where an atom is violated.
fn sup_crosscheck(tally: &mut Tally, site: &Site, label: &str, model: &MarketModel, report: &AipReport, rng: &mut Rng64) {
    let tag = format!("esssup_crosscheck.{label}");
    let n = model.outcomes();
    for t in 0..model.horizon() {
        let part = &model.filtration[t];
        let thetas: Vec<Vec<Q>> = (0..part.len())
            .map(|b| match &report.at(t, b).verdict {
                Verdict::Violated { separator } => separator.clone(),
                _ => (0..model.prices.dim()).map(|_| random_q(rng, 6, -2, 2)).collect(),
            })
            .collect();
        let gain = RandVar::from_fn(n, |w| dot(&thetas[part.block_of(w)], &model.prices.delta(t + 1, w)));
        let Some(s) = site.attempt(tally, &tag, cond_esssup(&[gain], part, &model.measure)) else { continue };
        site.each(tally, &tag, Some(t), Some(part), |w| {
            let value = s.get(w);
            let ok = match (&report.at(t, part.block_of(w)).verdict, value) {
                (Verdict::Null, None) => true,
                (Verdict::Holds { .. }, Some(v)) => !v.is_negative(),
                (Verdict::Violated { .. }, Some(v)) => *v <= Ext::Fin(-Q::one()),
                _ => false,
            };
            (!ok).then(|| (value.map_or_else(|| "undef".into(), |v| v.to_string()), "sign matching the verdict".into()))
        });
    }
}

fn sweep_instance(seed: u64) -> Tally {
    let model = match generate(&GenConfig::sweep(seed)) {
        Ok(m) => m,
        Err(e) => return setup_failure("aip.generate", seed, e),
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    let Some(hm) = site.attempt(&mut tally, "aip.market", model.market()) else { return tally };
    tally.count("sweep_models", 1);
    let mut rng = rng_for(stream(seed, 2));
    let models = [("stopped", hm.stopped()), ("tilde", hm.tilde()), ("bar", hm.bar()), ("base", hm.base())];
    let reports: Vec<AipReport> = models.iter().map(|(_, m)| aip(m)).collect();
    for ((label, m), r) in models.iter().zip(&reports) {
        certify(&mut tally, &site, label, m, r);
        sup_crosscheck(&mut tally, &site, label, m, r, &mut rng);
    }
    let (stopped, tilde, bar) = (reports[0].holds(), reports[1].holds(), reports[2].holds());
    tally.check("aip_theorem.stopped_iff_tilde", stopped == tilde, || {
        site.failure("aip_theorem.stopped_iff_tilde", None, "-".into(), stopped, tilde)
    });
    if tilde {
        tally.check("aip_theorem.tilde_implies_bar", bar, || {
            site.failure("aip_theorem.tilde_implies_bar", None, "-".into(), bar, true)
        });
    }
    tally.count(if tilde { "sweep_tilde_holds" } else { "sweep_tilde_fails" }, 1);
    if tilde && !bar {
        tally.count("sweep_bar_only_failures", 1);
    }
    if !tilde && bar {
        tally.count("sweep_bar_holds_tilde_fails", 1);
    }

    let s = &hm.prices.s;
    let no_jump = (1..=hm.horizon())
        .all(|t| dead_zone(&hm.azema, t).iter().enumerate().all(|(w, &dz)| !dz || s.delta(t, w).iter().all(Zero::is_zero)));
    if no_jump {
        tally.count("no_jump_hypothesis", 1);
        if !no_dead_zone(&hm.azema) {
            tally.count("no_jump_hypothesis_with_dead_zone", 1);
        }
        tally.check("no_jump_corollary", stopped == tilde && tilde == bar, || {
            site.failure("no_jump_corollary", None, "-".into(), format!("{stopped}/{tilde}"), bar)
        });
    }

    let unit = is_unit(&hm.deflator.z);
    let clean = no_dead_zone(&hm.azema);
    tally.check("deflator_unit_iff_no_dead_zone", unit == clean, || {
        site.failure("deflator_unit_iff_no_dead_zone", None, "-".into(), unit, clean)
    });
    tally
}

fn scalar_model(space: &FilteredSpace, x: &Process) -> Result<MarketModel> {
    MarketModel::new(space.filtration().to_vec(), space.prob().clone(), VecProcess::from_components(std::slice::from_ref(x))?)
}

fn predictable_instance(seed: u64) -> Tally {
    let mut rng = rng_for(stream(seed, 3));
    let horizon = rng.random_range(1..=3);
    let space = match random_space(&mut rng, horizon, 16, false) {
        Ok(s) => s,
        Err(e) => return setup_failure("predictable.setup", seed, e),
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &space);
    tally.count("predictable_instances", 1);

    // (a): a predictable process is free of immediate profit exactly when constant.
    let mut x = random_predictable(&mut rng, &space, 6, -2, 2);
    if rng.random_bool(0.3) {
        let start = x.at(0).clone();
        x = Process::from_fn(horizon, |_| start.clone());
    }
    let constant = (1..=horizon).all(|t| x.delta(t).0.iter().all(Zero::is_zero));
    if let Some(m) = site.attempt(&mut tally, "predictable.a", scalar_model(&space, &x)) {
        let holds = aip(&m).holds();
        tally.check("predictable.a", holds == constant, || site.failure("predictable.a", None, "-".into(), holds, constant));
        tally.count(if constant { "predictable_constant" } else { "predictable_varying" }, 1);
    }

    // (b): integrals against bounded predictable integrands, and ψ ≡ 1.
    let y = if rng.random_bool(0.5) {
        random_martingale(&mut rng, &space, space.prob(), 6)
    } else {
        random_adapted(&mut rng, &space, 6, -2, 2)
    };
    let Some(base) = site.attempt(&mut tally, "predictable.b", scalar_model(&space, &y)) else { return tally };
    let holds = aip(&base).holds();
    let ones = Process::from_fn(horizon, |_| RandVar::constant(space.outcomes(), Q::one()));
    let mut integrands = vec![ones];
    integrands.extend((0..3).map(|_| random_predictable(&mut rng, &space, 6, -2, 2)));
    for (i, psi) in integrands.iter().enumerate() {
        let Some(integral) = site.attempt(&mut tally, "predictable.b", sint(psi, &y)) else { continue };
        let Some(m) = site.attempt(&mut tally, "predictable.b", scalar_model(&space, &integral)) else { continue };
        let after = aip(&m).holds();
        if i == 0 {
            tally.check("predictable.b.unit_integrand", after == holds, || {
                site.failure("predictable.b.unit_integrand", None, "-".into(), after, holds)
            });
        } else if holds {
            tally.check("predictable.b.integral_keeps_aip", after, || {
                site.failure("predictable.b.integral_keeps_aip", None, format!("psi#{i}"), after, true)
            });
        }
    }
    tally
}

/// A process with no immediate profit under the block weights drawn here:
/// on every atom the increments average to zero under random positive weights.
fn random_aip(rng: &mut Rng64, space: &FilteredSpace, dim: usize) -> Result<VecProcess> {
    let starts: Vec<Vec<Q>> = (0..space.at(0).len()).map(|_| (0..dim).map(|_| random_q(rng, 6, -2, 2)).collect()).collect();
    let rng = std::cell::RefCell::new(rng);
    adapted_increments(
        space,
        |b| starts[b].clone(),
        |_, _, kids| {
            let rng = &mut *rng.borrow_mut();
            let k = kids.len();
            if k == 1 || rng.random_bool(0.1) {
                return vec![vec![Q::zero(); dim]; k];
            }
            let weights: Vec<Q> = (0..k).map(|_| Q::from_integer(rng.random_range(1..=4).into())).collect();
            let mut incs: Vec<Vec<Q>> = (0..k - 1).map(|_| (0..dim).map(|_| random_q(rng, 6, -2, 2)).collect()).collect();
            let last = (0..dim)
                .map(|i| -incs.iter().zip(&weights).map(|(v, wt)| &v[i] * wt).sum::<Q>() / &weights[k - 1])
                .collect();
            incs.push(last);
            incs
        },
    )
}

fn universal_instance(seed: u64, paths: usize) -> Tally {
    let model = match generate(&GenConfig::new(seed, TauRegime::ZIdentity, PriceMode::TildeAip)) {
        Ok(m) => m,
        Err(e) => return setup_failure("universal.generate", seed, e),
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    let Some(hm) = site.attempt(&mut tally, "universal.market", model.market()) else { return tally };
    tally.count("universal_models", 1);
    let unit = is_unit(&hm.deflator.z);
    tally.check("universal.deflator_is_one", unit, || site.failure("universal.deflator_is_one", None, "-".into(), false, true));
    let space = &model.space;
    let mut rng = rng_for(stream(seed, 4));
    for path in 0..paths {
        let dim = rng.random_range(1..=2);
        let Some(x) = site.attempt(&mut tally, "universal.process", random_aip(&mut rng, space, dim)) else { continue };
        let f_model = MarketModel::new(space.filtration().to_vec(), space.prob().clone(), x.clone())
            .expect("generated increments are adapted");
        let f_report = aip(&f_model);
        tally.check("universal.f_side_aip", f_report.holds(), || {
            site.failure("universal.f_side_aip", None, format!("path#{path}"), false, true)
        });
        let g_model = MarketModel::new(hm.enlarged.clone(), space.prob().clone(), x.stopped(&hm.tau))
            .expect("stopped processes are adapted to the enlarged flow");
        let g_report = aip(&g_model);
        certify(&mut tally, &site, "universal_stopped", &g_model, &g_report);
        tally.check("universal.stopping_preserves_aip", g_report.holds(), || {
            site.failure("universal.stopping_preserves_aip", None, format!("path#{path}"), false, true)
        });
    }
    tally
}

/// `ΔX_t = 1{event_t} - P(event_t | F_{t-1})`, started at `start`.
fn compensated(hm: &HorizonMarket, start: Q, event: impl Fn(usize) -> Vec<bool>) -> Process {
    let space = &hm.space;
    let n = space.outcomes();
    Process::accumulate(
        RandVar::constant(n, start),
        |t| {
            let e = event(t);
            &RandVar::indicator(&e) - &cond_prob(&e, space.at(t - 1), space.prob()).value
        },
        space.horizon(),
    )
}

fn deadzone_instance(seed: u64) -> Tally {
    let model = match generate(&GenConfig::new(seed, TauRegime::WithDeadzone, PriceMode::Free)) {
        Ok(m) => m,
        Err(e) => return setup_failure("deadzone.generate", seed, e),
    };
    let mut tally = Tally::default();
    let site = Site::new(Some(seed), &model.space);
    let Some(hm) = site.attempt(&mut tally, "deadzone.market", model.market()) else { return tally };
    tally.count("deadzone_models", 1);
    let space = &model.space;
    let unit = is_unit(&hm.deflator.z);
    tally.check("deadzone.deflator_not_one", !unit, || site.failure("deadzone.deflator_not_one", None, "-".into(), true, false));

    // The counterexample process of the universal theorem.
    let x = compensated(&hm, Q::zero(), |t| hm.azema.gtilde.at(t).zero_set());
    let Some(f_model) = site.attempt(&mut tally, "deadzone.counterexample", scalar_model(space, &x)) else { return tally };
    let f_report = aip(&f_model);
    certify(&mut tally, &site, "deadzone_f", &f_model, &f_report);
    tally.check("deadzone.counterexample_f_aip", f_report.holds(), || {
        site.failure("deadzone.counterexample_f_aip", None, "-".into(), false, true)
    });
    let components = VecProcess::from_components(std::slice::from_ref(&x)).expect("one component");
    let g_model = MarketModel::new(hm.enlarged.clone(), space.prob().clone(), components.stopped(&hm.tau))
        .expect("stopped processes are adapted to the enlarged flow");
    let g_report = aip(&g_model);
    certify(&mut tally, &site, "deadzone_g", &g_model, &g_report);
    tally.check("deadzone.counterexample_g_profit", !g_report.holds(), || {
        site.failure("deadzone.counterexample_g_profit", None, "-".into(), true, false)
    });

    // The first remark's price process: no profit for S̄, profits for S̃ and S^τ.
    let start = Q::from_integer((space.horizon() as i64 + 1).into());
    let s = compensated(&hm, start, |t| dead_zone(&hm.azema, t));
    let built = VecProcess::from_components(std::slice::from_ref(&s))
        .and_then(|v| HorizonMarket::new(space.clone(), hm.tau.clone(), &v));
    let Some(remark) = site.attempt(&mut tally, "deadzone.remark", built) else { return tally };
    let (bar, tilde, stopped) = (aip(&remark.bar()).holds(), aip(&remark.tilde()).holds(), aip(&remark.stopped()).holds());
    tally.check("deadzone.remark_bar_holds", bar, || site.failure("deadzone.remark_bar_holds", None, "-".into(), bar, true));
    tally.check("deadzone.remark_tilde_fails", !tilde, || {
        site.failure("deadzone.remark_tilde_fails", None, "-".into(), tilde, false)
    });
    tally.check("deadzone.remark_stopped_fails", !stopped, || {
        site.failure("deadzone.remark_stopped_fails", None, "-".into(), stopped, false)
    });
    tally
}

/// The two-outcome model where stopping creates a profit at time 0.
fn m3_fixture() -> Tally {
    let mut tally = Tally::default();
    let model = fixtures::m3();
    let site = Site::new(None, &model.space);
    let hm = model.market().expect("fixture m3 builds");
    let (stopped_model, tilde_model, bar_model) = (hm.stopped(), hm.tilde(), hm.bar());
    let (stopped, tilde, bar) = (aip(&stopped_model), aip(&tilde_model), aip(&bar_model));
    certify(&mut tally, &site, "m3_stopped", &stopped_model, &stopped);
    certify(&mut tally, &site, "m3_bar", &bar_model, &bar);
    tally.check("m3.bar_holds", bar.holds(), || site.failure("m3.bar_holds", None, "-".into(), false, true));
    tally.check("m3.tilde_fails", !tilde.holds(), || site.failure("m3.tilde_fails", None, "-".into(), true, false));
    let first = stopped.first_violation().map(|v| (v.time, model.space.block_name(stopped_model.filtration[v.time].block(v.block))));
    let expected = Some((0, "{a}".to_string()));
    tally.check("m3.stopped_violation", first == expected, || {
        site.failure("m3.stopped_violation", None, "-".into(), format!("{first:?}"), format!("{expected:?}"))
    });
    let z1 = hm.deflator.z.at(1).clone();
    let expected_z = RandVar(vec![Q::from_integer(2.into()), Q::zero()]);
    tally.check("m3.deflator", z1 == expected_z, || {
        site.failure("m3.deflator", Some(1), "-".into(), format!("{:?}", z1.0), format!("{:?}", expected_z.0))
    });
    tally
}
