//! Laws of the conditional essential supremum: tower and positive-part rules,
//! indicators, a change of density between nested partitions, and the
//! comparison of G-side and F-side suprema around a random horizon.

use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{fan_out, same_masked as same, stream, Plan, Site, Tally};
use crate::ext::{Ext, Q};
use crate::gen::{random_q, random_space, random_tau, rng_for, Rng64, TauRegime};
use crate::horizon::{azema, deflator, enlarge};
use crate::prob::{cond_esssup, cond_essinf, cond_expect, cond_prob, FilteredSpace, MaskedVar, Measure, Partition, RandVar};

pub(super) fn run(plan: &Plan, seed: u64) -> Tally {
    let mut tally = counterexample();
    tally.merge(fan_out(seed, plan.esssup, instance));
    tally
}

fn sup(family: &[RandVar], part: &Partition, mu: &Measure) -> MaskedVar {
    cond_esssup(family, part, mu).expect("families are nonempty and sized to the space")
}

fn inf(family: &[RandVar], part: &Partition, mu: &Measure) -> MaskedVar {
    cond_essinf(family, part, mu).expect("families are nonempty and sized to the space")
}

fn ind(b: bool) -> Ext {
    Ext::Fin(if b { Q::one() } else { Q::zero() })
}

/// Finite value of a masked entry, if defined.
fn fin(v: &MaskedVar, w: usize) -> Option<Q> {
    v.get(w).and_then(|x| x.finite().cloned())
}

/// `f` applied entrywise, keeping the mask.
fn apply(v: &MaskedVar, f: impl Fn(&Ext) -> Ext) -> MaskedVar {
    let values = (0..v.len()).map(|w| v.get(w).map_or(Ext::NegInf, &f)).collect();
    MaskedVar::new(values, v.defined().to_vec())
}

/// Supremum of a single masked member; undefined entries sit on null blocks.
fn sup_of(v: &MaskedVar, part: &Partition, mu: &Measure) -> MaskedVar {
    cond_esssup(&[v.or_fill(Ext::NegInf)], part, mu).expect("one member sized to the space")
}


/// Failure unless `a <= b` with both entries defined.
fn below(a: Option<&Ext>, b: Option<&Ext>) -> Option<(String, String)> {
    let show = |v: Option<&Ext>| v.map_or_else(|| "undef".to_string(), |x| x.to_string());
    match (a, b) {
        (Some(x), Some(y)) if x <= y => None,
        _ => Some((show(a), show(b))),
    }
}

fn measurable(rng: &mut Rng64, part: &Partition, n: usize, lo: i64, hi: i64) -> RandVar {
    let values: Vec<Q> = (0..part.len()).map(|_| random_q(rng, 12, lo, hi)).collect();
    RandVar::from_fn(n, |w| values[part.block_of(w)].clone())
}

fn family(rng: &mut Rng64, part: &Partition, n: usize, lo: i64, hi: i64) -> Vec<RandVar> {
    let k = rng.random_range(1..=3);
    (0..k).map(|_| measurable(rng, part, n, lo, hi)).collect()
}

fn instance(seed: u64) -> Tally {
    let mut tally = Tally::default();
    let mut rng = rng_for(stream(seed, 1));
    let horizon = rng.random_range(1..=3);
    let space = match random_space(&mut rng, horizon, 16, false) {
        Ok(s) => s,
        Err(e) => {
            tally.fail("esssup.setup", super::Failure {
                tag: "esssup.setup".into(),
                seed: Some(seed),
                time: None,
                atom: "-".into(),
                lhs: e.to_string(),
                rhs: "ok".into(),
            });
            return tally;
        }
    };
    let site = Site::new(Some(seed), &space);
    density_laws(&mut tally, &site, &mut rng);
    horizon_laws(&mut tally, &site, &mut rng, seed);
    tally
}

/// Tower, positive part, duality, indicators, and the change of density.
fn density_laws(tally: &mut Tally, site: &Site, rng: &mut Rng64) {
    let space = site.space;
    let n = space.outcomes();
    let p = space.prob();
    let horizon = space.horizon();
    let i = rng.random_range(0..=horizon);
    let h1 = space.at(i).clone();
    let h2 = if rng.random_bool(0.3) { Partition::discrete(n) } else { space.at(rng.random_range(i..=horizon)).clone() };

    let allow_zero = rng.random_bool(0.8);
    let mut raw: Vec<i64> =
        (0..h2.len()).map(|_| if allow_zero && rng.random_bool(0.35) { 0 } else { rng.random_range(1..=3) }).collect();
    if raw.iter().all(|&r| r == 0) {
        raw[0] = 1;
    }
    let raw = RandVar::from_fn(n, |w| Q::from_integer(raw[h2.block_of(w)].into()));
    let z = raw.scale(&p.expect(&raw).recip());
    let Some(q) = site.attempt(tally, "esssup.density", Measure::with_density(p, &z)) else { return };
    if z.0.iter().any(Zero::is_zero) {
        tally.count("instances_with_null_density", 1);
    }
    tally.count("instances", 1);

    let gamma = family(rng, &h2, n, -3, 3);
    let neg: Vec<RandVar> = gamma.iter().map(|g| -g).collect();
    let pos: Vec<RandVar> = gamma.iter().map(RandVar::pos).collect();
    let negp: Vec<RandVar> = gamma.iter().map(RandVar::neg_part).collect();

    for (label, mu) in [("p", p), ("q", &q)] {
        let fine = sup(&gamma, &h2, mu);
        let coarse = sup(&gamma, &h1, mu);
        let nested = sup_of(&fine, &h1, mu);
        site.each(tally, &format!("tower.nested.{label}"), None, Some(&h1), |w| same(&coarse, &nested, w));
        site.each(tally, &format!("tower.monotone.{label}"), None, Some(&h2), |w| {
            fine.get(w).and_then(|_| below(fine.get(w), coarse.get(w)))
        });

        let s = sup(&gamma, &h1, mu);
        let s_plus = apply(&s, Ext::pos_part);
        let s_minus = apply(&s, Ext::neg_part);
        let of_plus = sup(&pos, &h1, mu);
        let of_minus = inf(&negp, &h1, mu);
        site.each(tally, &format!("positive_part.plus.{label}"), None, Some(&h1), |w| same(&s_plus, &of_plus, w));
        site.each(tally, &format!("positive_part.minus.{label}"), None, Some(&h1), |w| same(&s_minus, &of_minus, w));

        let direct = inf(&gamma, &h1, mu);
        let flipped = apply(&sup(&neg, &h1, mu), Ext::neg);
        site.each(tally, &format!("duality.{label}"), None, Some(&h1), |w| same(&direct, &flipped, w));
    }

    // Indicators: smallest measurable superset and largest measurable subset.
    let event: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let one_h = [RandVar::indicator(&event)];
    let s_h = sup(&one_h, &h1, p);
    let i_h = inf(&one_h, &h1, p);
    site.each(tally, "indicator.smallest_superset", None, Some(&h1), |w| {
        let meets = h1.block(h1.block_of(w)).iter().any(|&v| event[v]);
        super::differ(&s_h.get(w).cloned().unwrap_or(Ext::NegInf), &ind(meets))
    });
    site.each(tally, "indicator.largest_subset", None, Some(&h1), |w| {
        let inside = h1.block(h1.block_of(w)).iter().all(|&v| event[v]);
        super::differ(&i_h.get(w).cloned().unwrap_or(Ext::NegInf), &ind(inside))
    });

    change_of_density(tally, site, rng, &h1, &h2, &z, &q, &gamma, &pos);
}

#[allow(clippy::too_many_arguments)]
fn change_of_density(
    tally: &mut Tally,
    site: &Site,
    rng: &mut Rng64,
    h1: &Partition,
    h2: &Partition,
    z: &RandVar,
    q: &Measure,
    gamma: &[RandVar],
    pos: &[RandVar],
) {
    let space = site.space;
    let n = space.outcomes();
    let p = space.prob();
    let zpos = z.positive();
    let zzero = z.zero_set();
    let pz0 = cond_prob(&zzero, h1, p).value;
    let zh1 = cond_expect(z, h1, p).value;

    // (a): indicators of {X > 0} and {X = 0} for a nonnegative X.
    let vals: Vec<Q> =
        (0..h2.len()).map(|_| if rng.random_bool(0.35) { Q::zero() } else { random_q(rng, 12, 0, 2) }).collect();
    let x = RandVar::from_fn(n, |w| vals[h2.block_of(w)].clone());
    let y = cond_expect(&x, h1, p).value;
    let xpos = [RandVar::indicator(&x.positive())];
    let xzero = [RandVar::indicator(&x.zero_set())];
    let px_pos = cond_prob(&x.positive(), h1, p).value;
    let px_zero = cond_prob(&x.zero_set(), h1, p).value;
    let checks: [(&str, MaskedVar, Box<dyn Fn(usize) -> bool>); 4] = [
        ("change_of_density.a.sup_positive", sup(&xpos, h1, p), Box::new(|w| y.0[w].is_positive())),
        ("change_of_density.a.inf_positive", inf(&xpos, h1, p), Box::new(|w| px_pos.0[w].is_one())),
        ("change_of_density.a.sup_zero", sup(&xzero, h1, p), Box::new(|w| px_zero.0[w].is_positive())),
        ("change_of_density.a.inf_zero", inf(&xzero, h1, p), Box::new(|w| y.0[w].is_zero())),
    ];
    for (tag, lhs, rhs) in &checks {
        site.each(tally, tag, None, Some(h1), |w| super::differ(&lhs.get(w).cloned().unwrap_or(Ext::NegInf), &ind(rhs(w))));
    }

    let gq = sup(gamma, h1, q);
    let masked_gamma: Vec<RandVar> = gamma.iter().map(|g| g.on(&zpos)).collect();
    let gp = sup(&masked_gamma, h1, p);
    let plain = sup(gamma, h1, p);
    let zero = Ext::zero();

    // (b)
    site.each(tally, "change_of_density.b.dominates", None, Some(h1), |w| {
        if zpos[w] {
            below(gq.get(w), gp.get(w))
        } else {
            None
        }
    });
    site.each(tally, "change_of_density.b.nonnegative", None, Some(h1), |w| {
        if pz0.0[w].is_positive() {
            below(Some(&zero), gp.get(w))
        } else {
            None
        }
    });
    // (c)
    site.each(tally, "change_of_density.c", None, Some(h1), |w| {
        if zpos[w] && gq.get(w).is_some_and(|v| !v.is_negative()) {
            same(&gq, &gp, w)
        } else {
            None
        }
    });
    // (d)
    let gq_pos = sup(pos, h1, q);
    site.each(tally, "change_of_density.d", None, Some(h1), |w| {
        if !zpos[w] {
            return None;
        }
        let a = gq.get(w).map(Ext::pos_part);
        let b = gq_pos.get(w).cloned();
        let c = gp.get(w).map(Ext::pos_part);
        if a.is_some() && a == b && b == c {
            None
        } else {
            let show = |v: Option<Ext>| v.map_or_else(|| "undef".to_string(), |x| x.to_string());
            Some((show(a), format!("{}|{}", show(b), show(c))))
        }
    });
    // (e)
    site.each(tally, "change_of_density.e", None, Some(h1), |w| {
        if pz0.0[w].is_zero() {
            same(&gq, &gp, w).or_else(|| same(&gp, &plain, w))
        } else {
            None
        }
    });
    // (f)
    let hypothesis = (0..n).all(|w| !zpos[w] || gq.get(w).is_some_and(|v| !v.is_negative()));
    if hypothesis {
        tally.count("change_of_density_f_hypothesis", 1);
        site.each(tally, "change_of_density.f.nonnegative", None, Some(h1), |w| below(Some(&zero), gp.get(w)));
        site.each(tally, "change_of_density.f.positive_sets", None, Some(h1), |w| {
            if !zpos[w] {
                return None;
            }
            let a = gq.get(w).is_some_and(Ext::is_positive);
            let b = gp.get(w).is_some_and(Ext::is_positive);
            (a != b).then(|| (a.to_string(), b.to_string()))
        });
    }
    let on_null: Vec<RandVar> = gamma.iter().map(|g| g.on(&zzero)).collect();
    let s_null = sup(&on_null, h1, p);
    site.each(tally, "change_of_density.f.null_part", None, Some(h1), |w| {
        if zpos[w] {
            below(Some(&zero), s_null.get(w))
        } else {
            None
        }
    });
    // (g), on the blocks charged by Q.
    site.each(tally, "change_of_density.g.disagreement", None, Some(h1), |w| {
        if !zh1.0[w].is_positive() {
            return None;
        }
        let (a, b) = (gq.get(w)?, gp.get(w)?);
        let lt = a < b;
        let neg_and_null = a.is_negative() && pz0.0[w].is_positive();
        let straddle = a.is_negative() && !b.is_negative();
        (lt != neg_and_null || lt != straddle).then(|| (format!("{a}<{b}:{lt}"), format!("{neg_and_null}/{straddle}")))
    });
    site.each(tally, "change_of_density.g.negative", None, Some(h1), |w| {
        if !zh1.0[w].is_positive() {
            return None;
        }
        let (a, b) = (gq.get(w)?, gp.get(w)?);
        let lhs = b.is_negative();
        let rhs = pz0.0[w].is_zero() && a.is_negative();
        (lhs != rhs).then(|| (lhs.to_string(), rhs.to_string()))
    });
    site.each(tally, "change_of_density.g.null_blocks", None, Some(h1), |w| {
        if zh1.0[w].is_zero() {
            super::differ(&gp.get(w).cloned().unwrap_or(Ext::NegInf), &zero)
        } else {
            None
        }
    });

    // The infimum counterpart.
    let iq = inf(gamma, h1, q);
    let ip = inf(&masked_gamma, h1, p);
    site.each(tally, "essinf_corollary.a.below", None, Some(h1), |w| {
        if zh1.0[w].is_positive() {
            below(ip.get(w), iq.get(w))
        } else {
            None
        }
    });
    site.each(tally, "essinf_corollary.a.nonpositive", None, Some(h1), |w| {
        if pz0.0[w].is_positive() {
            below(ip.get(w), Some(&zero))
        } else {
            None
        }
    });
    if (0..n).all(|w| !zpos[w] || iq.get(w).is_some_and(|v| !v.is_positive())) {
        site.each(tally, "essinf_corollary.b", None, Some(h1), |w| if zh1.0[w].is_positive() { same(&iq, &ip, w) } else { None });
        site.each(tally, "essinf_corollary.c", None, Some(h1), |w| below(ip.get(w), Some(&zero)));
    }

    // The example after the theorem, on every instance where it applies.
    if (0..n).any(|w| zzero[w] && zh1.0[w].is_positive()) {
        tally.count("counterexample_instances", 1);
        let eps = random_q(rng, 12, 1, 3);
        let flagged = pz0.positive();
        let first = RandVar::from_fn(n, |w| if flagged[w] { -eps.clone() } else { Q::zero() });
        let second = RandVar::from_fn(n, |w| if flagged[w] { -eps.clone() } else { eps.clone() });
        example_checks(tally, site, "counterexample", h1, z, q, &first, &second, &flagged, &eps);
    }
}

/// `Γ = {-ε 1{P(Z=0|H1)>0}}` and its two-sided variant.
#[allow(clippy::too_many_arguments)]
fn example_checks(
    tally: &mut Tally,
    site: &Site,
    prefix: &str,
    h1: &Partition,
    z: &RandVar,
    q: &Measure,
    first: &RandVar,
    second: &RandVar,
    flagged: &[bool],
    eps: &Q,
) {
    let p = site.space.prob();
    let zpos = z.positive();
    let zero = Ext::zero();
    let under_p = sup(&[first.on(&zpos)], h1, p);
    let under_q = sup(std::slice::from_ref(first), h1, q);
    site.each(tally, &format!("{prefix}.p_side_zero"), None, Some(h1), |w| {
        super::differ(&under_p.get(w).cloned().unwrap_or(Ext::NegInf), &zero)
    });
    site.each(tally, &format!("{prefix}.q_side"), None, Some(h1), |w| {
        if !zpos[w] {
            return None;
        }
        let expected = Ext::Fin(if flagged[w] { -eps.clone() } else { Q::zero() });
        super::differ(&under_q.get(w).cloned().unwrap_or(Ext::PosInf), &expected)
    });
    let negative_mass = |v: &MaskedVar| -> bool {
        (0..z.len()).any(|w| zpos[w] && v.get(w).is_some_and(Ext::is_negative))
    };
    tally.check(&format!("{prefix}.q_negative_mass"), negative_mass(&under_q), || {
        site.failure(&format!("{prefix}.q_negative_mass"), None, "-".into(), "no negative mass", "positive mass")
    });
    let under_p2 = sup(&[second.on(&zpos)], h1, p);
    let under_q2 = sup(std::slice::from_ref(second), h1, q);
    site.each(tally, &format!("{prefix}.variant_p_side"), None, Some(h1), |w| below(Some(&zero), under_p2.get(w)));
    tally.check(&format!("{prefix}.variant_q_negative_mass"), negative_mass(&under_q2), || {
        site.failure(&format!("{prefix}.variant_q_negative_mass"), None, "-".into(), "no negative mass", "positive mass")
    });
}

/// The fixed instance of the example: four outcomes, `Z = (0, 2, 1, 1)`.
fn counterexample() -> Tally {
    let mut tally = Tally::default();
    let ids = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let h1 = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).expect("valid blocks");
    let space = FilteredSpace::new(
        ids,
        Measure::base(vec![Q::new(1.into(), 4.into()); 4]).expect("uniform"),
        vec![h1.clone(), Partition::discrete(4)],
    )
    .expect("valid space");
    let site = Site::new(None, &space);
    let z = RandVar((0..4).map(|w| Q::from_integer([0, 2, 1, 1][w].into())).collect());
    let q = Measure::with_density(space.prob(), &z).expect("unit mean");
    let eps = Q::one();
    let flagged = cond_prob(&z.zero_set(), &h1, space.prob()).value.positive();
    let first = RandVar::from_fn(4, |w| if flagged[w] { -eps.clone() } else { Q::zero() });
    let second = RandVar::from_fn(4, |w| if flagged[w] { -eps.clone() } else { eps.clone() });
    example_checks(&mut tally, &site, "counterexample_fixed", &h1, &z, &q, &first, &second, &flagged, &eps);
    tally
}

/// Indicator identities of the horizon, the reduced-measure corollary, the
/// G-versus-F comparison and the supremum form of the projection.
fn horizon_laws(tally: &mut Tally, site: &Site, rng: &mut Rng64, seed: u64) {
    let space = site.space;
    let n = space.outcomes();
    let p = space.prob();
    let horizon = space.horizon();
    let regime = TauRegime::ALL[(seed % 4) as usize];
    let drawn = match random_tau(rng, space, regime) {
        Ok(Some(t)) => Ok(t),
        Ok(None) => random_tau(rng, space, TauRegime::Correlated).map(|t| t.expect("no postcondition")),
        Err(e) => Err(e),
    };
    let Some(tau) = site.attempt(tally, "esssup.horizon", drawn) else { return };
    let Some(az) = site.attempt(tally, "esssup.horizon", azema(space, &tau)) else { return };
    let Some(enlarged) = site.attempt(tally, "esssup.horizon", enlarge(space, &tau)) else { return };
    let Some(defl) = site.attempt(tally, "esssup.horizon", deflator(space, &az)) else { return };

    let indicator_law = |tally: &mut Tally, tag: &str, t: usize, part: &Partition, x: &[bool], expect: &[bool], sup_side: bool| {
        let fam = [RandVar::indicator(x)];
        let v = if sup_side { sup(&fam, part, p) } else { inf(&fam, part, p) };
        site.each(tally, tag, Some(t), Some(part), |w| super::differ(&v.get(w).cloned().unwrap_or(Ext::NegInf), &ind(expect[w])));
    };
    for t in 0..=horizon {
        let (g, gt) = (az.g.at(t), az.gtilde.at(t));
        let f = space.at(t);
        indicator_law(tally, "horizon_indicators.sup_alive", t, f, &tau.ge(t), &gt.positive(), true);
        indicator_law(tally, "horizon_indicators.inf_alive", t, f, &tau.ge(t), &gt.one_set(), false);
        indicator_law(tally, "horizon_indicators.sup_survive", t, f, &tau.gt(t), &g.positive(), true);
        indicator_law(tally, "horizon_indicators.inf_survive", t, f, &tau.gt(t), &g.one_set(), false);
        if t == 0 {
            continue;
        }
        let prev = space.at(t - 1);
        let gm = az.g.at(t - 1);
        indicator_law(tally, "horizon_indicators.sup_gtilde_positive", t, prev, &gt.positive(), &gm.positive(), true);
        indicator_law(tally, "horizon_indicators.inf_gtilde_one", t, prev, &gt.one_set(), &gm.one_set(), false);
        indicator_law(tally, "horizon_indicators.sup_alive_prev", t, prev, &tau.ge(t), &gm.positive(), true);
        indicator_law(tally, "horizon_indicators.inf_alive_prev", t, prev, &tau.ge(t), &gm.one_set(), false);
        let reach = cond_prob(&gt.positive(), prev, p).value;
        site.each(tally, "horizon_indicators.set_identity", Some(t), Some(prev), |w| {
            let (a, b) = (reach.0[w].is_positive(), gm.0[w].is_positive());
            (a != b).then(|| (a.to_string(), b.to_string()))
        });
    }

    for t in 1..=horizon {
        let prev = space.at(t - 1);
        let gm = az.g.at(t - 1);
        let alive_f = az.gtilde.at(t).positive();

        // Reduced-measure corollary.
        let (lo, hi) = [(-3, 3), (0, 3), (-3, 0)][rng.random_range(0..3)];
        let fam = family(rng, space.at(t), n, lo, hi);
        let gq = sup(&fam, prev, &defl.qtilde);
        let cut: Vec<RandVar> = fam.iter().map(|g| g.on(&alive_f)).collect();
        let gp = sup(&cut, prev, p);
        let lhs: Vec<Option<Ext>> =
            (0..n).map(|w| if gm.0[w].is_positive() { gq.get(w).cloned() } else { Some(Ext::zero()) }).collect();
        let zero = Ext::zero();
        if lhs.iter().all(|v| v.as_ref().is_some_and(|x| !x.is_negative())) {
            tally.count("qtilde_corollary_a_hypothesis", 1);
            site.each(tally, "qtilde_corollary.a", Some(t), Some(prev), |w| {
                below(Some(&zero), gp.get(w)).or_else(|| {
                    let l = lhs[w].clone().expect("checked above");
                    super::differ(&l, &gp.get(w).cloned().unwrap_or(Ext::NegInf))
                })
            });
        }
        if (0..n).all(|w| gp.get(w).is_some_and(|v| !v.is_negative())) {
            let dz = crate::horizon::dead_zone(&az, t);
            let dz_mass = cond_prob(&dz, prev, p).value;
            site.each(tally, "qtilde_corollary.b", Some(t), Some(prev), |w| {
                let inside = gm.0[w].is_positive() && gq.get(w).is_some_and(Ext::is_negative);
                (inside && !dz_mass.0[w].is_positive()).then(|| ("negative".into(), "no dead-zone mass".into()))
            });
        }

        // G-side versus F-side suprema.
        let gpart = &enlarged[t - 1];
        let alive = tau.ge(t);
        let fam = family(rng, &enlarged[horizon], n, -3, 3);
        let cut: Vec<RandVar> = fam.iter().map(|g| g.on(&alive)).collect();
        let a_g = sup(&cut, gpart, p);
        let a_f = sup(&cut, prev, p);
        site.each(tally, "g_vs_f.a.bound", Some(t), Some(gpart), |w| below(a_g.get(w), a_f.get(w)));
        site.each(tally, "g_vs_f.a.nonnegative", Some(t), Some(prev), |w| {
            if gm.0[w] < Q::one() {
                below(Some(&zero), a_f.get(w))
            } else {
                None
            }
        });
        site.each(tally, "g_vs_f.b", Some(t), Some(gpart), |w| {
            let (g, f) = (fin(&a_g, w)?, fin(&a_f, w)?);
            if !g.is_negative() {
                let rhs = if alive[w] { f } else { Q::zero() };
                super::differ(&g, &rhs)
            } else if gm.0[w].is_one() {
                super::differ(&f, &g)
            } else {
                None
            }
        });

        let nonneg: Vec<RandVar> = fam.iter().map(|g| g.map(|x| x.abs())).collect();
        let cut_nn: Vec<RandVar> = nonneg.iter().map(|g| g.on(&alive)).collect();
        let c_g = sup(&cut_nn, gpart, p);
        let c_f = sup(&cut_nn, prev, p);
        let inf_g = inf(&nonneg, gpart, p);
        let inf_cut = inf(&cut_nn, gpart, p);
        let sup_inf = sup_of(&inf_cut, prev, p);
        site.each(tally, "g_vs_f.c.sup", Some(t), Some(gpart), |w| if alive[w] { same(&c_g, &c_f, w) } else { None });
        site.each(tally, "g_vs_f.c.inf", Some(t), Some(gpart), |w| if alive[w] { same(&inf_g, &sup_inf, w) } else { None });

        let plus: Vec<RandVar> = fam.iter().map(|g| g.pos().on(&alive)).collect();
        let minus: Vec<RandVar> = fam.iter().map(|g| (-&g.neg_part()).on(&alive)).collect();
        let minus_raw: Vec<RandVar> = fam.iter().map(|g| g.neg_part().on(&alive)).collect();
        let full = sup(&fam, gpart, p);
        let s_plus = sup(&plus, prev, p);
        let s_minus = sup(&minus, prev, p);
        let s_i_minus = sup_of(&inf(&minus_raw, gpart, p), prev, p);
        site.each(tally, "g_vs_f.d", Some(t), Some(gpart), |w| {
            let one = |b: bool| if b { Q::one() } else { Q::zero() };
            let lhs = one(alive[w]) * fin(&full, w)?;
            let rhs = one(alive[w]) * fin(&s_plus, w)? + one(gm.0[w].is_one()) * fin(&s_minus, w)?
                - one(alive[w] && gm.0[w] < Q::one()) * fin(&s_i_minus, w)?;
            super::differ(&lhs, &rhs)
        });

        // The supremum form of the projection for nonnegative Y measurable at G_{t-1}.
        let y = measurable(rng, gpart, n, 0, 3);
        let y_alive = y.on(&alive);
        let s_y = sup(std::slice::from_ref(&y_alive), prev, p);
        let e_y = cond_expect(&y_alive, prev, p).value;
        site.each(tally, "projection_sup.pathwise", Some(t), Some(gpart), |w| {
            let rhs = if alive[w] { fin(&s_y, w)? } else { Q::zero() };
            super::differ(&y_alive.0[w], &rhs)
        });
        site.each(tally, "projection_sup.expectation", Some(t), Some(prev), |w| {
            super::differ(&e_y.0[w], &(&gm.0[w] * fin(&s_y, w)?))
        });
    }
}
