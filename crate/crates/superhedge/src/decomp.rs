//! Risk decomposition of G-side super-hedging prices and the G-martingale
//! identities it rests on.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ext::Q;
use crate::horizon::{integral_to_tau, transform};
use crate::market::{angle, bracket, martingale_defect, Process};
use crate::pricing::{price_vulnerable, ClaimKit, HorizonMarket, VulnerablePricing};
use crate::prob::{cond_expect, RandVar};

fn inv(x: &Q) -> Q {
    if x.is_zero() {
        Q::zero()
    } else {
        x.recip()
    }
}

/// Doob decomposition and covariation pieces of an F-side price process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quadruplet {
    /// Martingale part `Σ (X_s - E[X_s | F_{s-1}])`.
    pub m: Process,
    /// `(K - X)·D^{o,F} - Ṽ`
    pub n: Process,
    /// `Σ (X_s G̃_s - E[X_s G̃_s | F_{s-1}]) - G_-·M - ξ·m`
    pub nbar: Process,
    /// `Σ E[(K_s - X_s)(G̃_s - G_s) | F_{s-1}]`
    pub vtilde: Process,
    /// `ξ_s = E[X_s | F_{s-1}]`, with `ξ_0 = X_0`.
    pub xi: Process,
    /// Predictable drift `Σ (ξ_s - X_{s-1})`.
    pub a: Process,
}

impl Quadruplet {
    /// Returns the first failed structural property, if any.
    pub fn check(&self, hm: &HorizonMarket, x: &Process) -> Option<String> {
        let f = hm.space.filtration();
        let p = hm.space.prob();
        let rebuilt = self.m.zip_with(&self.a, |m, a| &(m + a) + x.at(0));
        if &rebuilt != x {
            return Some("X != X_0 + M + A".into());
        }
        if let Some((t, b)) = martingale_defect(&self.m, f, p) {
            return Some(format!("M is not a martingale at t={t}, block {b}"));
        }
        if let Some((t, b)) = martingale_defect(&self.n, f, p) {
            return Some(format!("N is not a martingale at t={t}, block {b}"));
        }
        if let Some((t, b)) = martingale_defect(&self.nbar, f, p) {
            return Some(format!("N̄ is not a martingale at t={t}, block {b}"));
        }
        if !self.a.is_predictable(f) || !self.vtilde.is_predictable(f) {
            return Some("A or Ṽ is not predictable".into());
        }
        None
    }
}

/// Builds the quadruplet of the F-process `x` with recovery `k`.
pub fn quadruplet(hm: &HorizonMarket, x: &Process, k: &Process) -> Result<Quadruplet> {
    let n = hm.outcomes();
    let horizon = hm.horizon();
    if x.horizon() != horizon || k.horizon() != horizon || x.outcomes() != n || k.outcomes() != n {
        return Err(Error::Domain("price or recovery process does not match the space".into()));
    }
    let f = hm.space.filtration();
    let p = hm.space.prob();
    let az = &hm.azema;
    let ce = |y: &RandVar, s: usize| cond_expect(y, &f[s - 1], p).value;

    let xi = Process::from_fn(horizon, |s| if s == 0 { x.at(0).clone() } else { ce(x.at(s), s) });
    let zero = RandVar::zeros(n);
    let m = Process::accumulate(zero.clone(), |s| x.at(s) - xi.at(s), horizon);
    let a = Process::accumulate(zero.clone(), |s| xi.at(s) - x.at(s - 1), horizon);
    let jump = |s: usize| az.gtilde.at(s) - az.g.at(s);
    let exposure = |s: usize| &(k.at(s) - x.at(s)) * &jump(s);
    let vtilde = Process::accumulate(zero.clone(), |s| ce(&exposure(s), s), horizon);
    let nproc = Process::accumulate(zero.clone(), |s| &exposure(s) - &vtilde.delta(s), horizon);
    let mm = &hm.hazard.m;
    let nbar = Process::accumulate(
        zero,
        |s| {
            let weighted = x.at(s) * az.gtilde.at(s);
            let centred = &weighted - &ce(&weighted, s);
            &(&centred - &(az.g.at(s - 1) * &m.delta(s))) - &(xi.at(s) * &mm.delta(s))
        },
        horizon,
    );
    Ok(Quadruplet { m, n: nproc, nbar, vtilde, xi, a })
}

/// Which sign the variation of `Ṽ` carries in the correlation-flow term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowSign {
    /// `-G_-^{-2}(ΔṼ + Δ⟨M,m⟩)·T(m)` with `Ṽ` built from `K - X`.
    Derived,
    /// The zero-recovery display, which uses `Ṽ` built from `+X`: equivalent
    /// to flipping the sign of `ΔṼ` above.
    AsPrinted,
}

/// The labelled terms of the G-price dynamics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionReport {
    pub quadruplet: Quadruplet,
    /// `K_0 1{τ=0} + X_0 1{τ>0}`
    pub initial: Process,
    pub trend: Process,
    /// `T(M)`
    pub pf_risk: Process,
    /// `(K - X)·N^G`
    pub pure_default: Process,
    /// `G_-^{-1}·T(N)`
    pub cr_benefit: Process,
    /// `G_-^{-1}·T(N̄)`
    pub cr_flow_residual: Process,
    /// `G_-^{-2}(ΔṼ + Δ⟨M,m⟩)·T(m)`, entering the flow with a minus sign.
    pub cr_flow_drift: Process,
    pub cr_flow: Process,
}

impl DecompositionReport {
    pub fn terms(&self) -> [(&'static str, &Process); 6] {
        [
            ("initial", &self.initial),
            ("trend", &self.trend),
            ("pf_risk", &self.pf_risk),
            ("pure_default", &self.pure_default),
            ("cr_benefit", &self.cr_benefit),
            ("cr_flow", &self.cr_flow),
        ]
    }

    /// The sum of all terms.
    pub fn total(&self) -> Process {
        let terms = self.terms();
        let mut acc = terms[0].1.clone();
        for (_, p) in &terms[1..] {
            acc = acc.zip_with(p, |a, b| a + b);
        }
        acc
    }

    /// Terms that must be G-martingales.
    pub fn martingale_terms(&self) -> [(&'static str, &Process); 5] {
        [
            ("pf_risk", &self.pf_risk),
            ("pure_default", &self.pure_default),
            ("cr_benefit", &self.cr_benefit),
            ("cr_flow_residual", &self.cr_flow_residual),
            ("cr_flow_drift", &self.cr_flow_drift),
        ]
    }
}

/// Decomposes `K_τ 1{τ<=t} + X_t 1{τ>t}` for an F-process `x` and recovery `k`.
pub fn decompose(hm: &HorizonMarket, x: &Process, k: &Process, sign: FlowSign) -> Result<DecompositionReport> {
    let quad = quadruplet(hm, x, k)?;
    let n = hm.outcomes();
    let horizon = hm.horizon();
    let f = hm.space.filtration();
    let p = hm.space.prob();
    let az = &hm.azema;
    let tau = &hm.tau;
    let gm = |u: usize, w: usize| az.g.at(u - 1).0[w].clone();

    let start = &k.at(0).on(&tau.eq(0)) + &x.at(0).on(&tau.gt(0));
    let initial = Process::from_fn(horizon, |_| start.clone());

    let mut trend_steps = vec![RandVar::zeros(n)];
    for s in 1..=horizon {
        let inner = &(k.at(s) * &(az.gtilde.at(s) - az.g.at(s))) + &(x.at(s) * az.g.at(s));
        let e = cond_expect(&inner, &f[s - 1], p).value;
        let alive = tau.ge(s);
        let mut next = trend_steps[s - 1].clone();
        for w in 0..n {
            if alive[w] {
                next.0[w] += &e.0[w] * inv(&gm(s, w)) - &x.at(s - 1).0[w];
            }
        }
        trend_steps.push(next);
    }
    let trend = Process(trend_steps);

    let t_of = |y: &Process| transform(&hm.space, tau, az, y);
    let pf_risk = t_of(&quad.m)?;
    let pure_default = Process::accumulate(
        RandVar::zeros(n),
        |s| &(k.at(s) - x.at(s)) * &hm.hazard.ng.delta(s),
        horizon,
    );
    let cr_benefit = integral_to_tau(tau, |u, w| inv(&gm(u, w)), &t_of(&quad.n)?);
    let cr_flow_residual = integral_to_tau(tau, |u, w| inv(&gm(u, w)), &t_of(&quad.nbar)?);
    let mangle = angle(&quad.m, &hm.hazard.m, f, p)?;
    let dv = |u: usize, w: usize| {
        let d = &quad.vtilde.at(u).0[w] - &quad.vtilde.at(u - 1).0[w];
        match sign {
            FlowSign::Derived => d,
            FlowSign::AsPrinted => -d,
        }
    };
    let cr_flow_drift = integral_to_tau(
        tau,
        |u, w| {
            let g = inv(&gm(u, w));
            &g * &g * (dv(u, w) + &mangle.at(u).0[w] - &mangle.at(u - 1).0[w])
        },
        &t_of(&hm.hazard.m)?,
    );
    let cr_flow = cr_flow_residual.zip_with(&cr_flow_drift, |a, b| a - b);
    Ok(DecompositionReport {
        quadruplet: quad,
        initial,
        trend,
        pf_risk,
        pure_default,
        cr_benefit,
        cr_flow_residual,
        cr_flow_drift,
        cr_flow,
    })
}

/// Prices the claim of `kit` and decomposes its G-price process.
pub fn decompose_claim(
    hm: &HorizonMarket,
    kit: &ClaimKit,
    sign: FlowSign,
) -> Result<(VulnerablePricing, DecompositionReport)> {
    let pricing = price_vulnerable(hm, kit)?;
    let report = decompose(hm, &pricing.f_process, &pricing.recovery, sign)?;
    Ok((pricing, report))
}

/// Residuals (left side minus right side) of the two G-martingale identities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityResiduals {
    /// `G_-/G̃·V^τ - P(G̃>0|F_-)·V^τ + G_-^{-1}ΔV·T(m)`
    pub weighted_drift: Process,
    /// `M^τ - M_0 - T(M) - G_-^{-1}·T([M,m]-⟨M,m⟩) + G_-^{-2}Δ⟨M,m⟩·T(m) - G_-^{-1}·⟨M,m⟩^τ`
    pub stopped_martingale: Process,
}

impl IdentityResiduals {
    pub fn vanish(&self) -> bool {
        self.weighted_drift.0.iter().chain(&self.stopped_martingale.0).all(|v| v.0.iter().all(Zero::is_zero))
    }
}

/// Evaluates both identities for an F-martingale `m_proc` and a predictable `v`.
pub fn gmart_identities(hm: &HorizonMarket, m_proc: &Process, v: &Process) -> Result<IdentityResiduals> {
    let f = hm.space.filtration();
    let p = hm.space.prob();
    let az = &hm.azema;
    let tau = &hm.tau;
    let horizon = hm.horizon();
    let n = hm.outcomes();
    if let Some((t, b)) = martingale_defect(m_proc, f, p) {
        return Err(Error::Domain(format!("M is not a martingale at t={t}, block {b}")));
    }
    if !v.is_predictable(f) {
        return Err(Error::Domain("V is not predictable".into()));
    }
    let gm = |u: usize, w: usize| az.g.at(u - 1).0[w].clone();
    let tm = transform(&hm.space, tau, az, &hm.hazard.m)?;
    let alive_prob = Process::from_fn(horizon, |s| {
        if s == 0 {
            RandVar::zeros(n)
        } else {
            cond_expect(&RandVar::indicator(&az.gtilde.at(s).positive()), &f[s - 1], p).value
        }
    });

    let lhs1 = integral_to_tau(tau, |u, w| gm(u, w) * inv(&az.gtilde.at(u).0[w]), v);
    let rhs1a = integral_to_tau(tau, |u, w| alive_prob.at(u).0[w].clone(), v);
    let rhs1b = integral_to_tau(tau, |u, w| inv(&gm(u, w)) * (&v.at(u).0[w] - &v.at(u - 1).0[w]), &tm);
    let weighted_drift = Process::from_fn(horizon, |t| &(lhs1.at(t) - rhs1a.at(t)) + rhs1b.at(t));

    let mangle = angle(m_proc, &hm.hazard.m, f, p)?;
    let resid = bracket(m_proc, &hm.hazard.m)?.zip_with(&mangle, |a, b| a - b);
    let stopped = m_proc.stopped(tau);
    let t_m = transform(&hm.space, tau, az, m_proc)?;
    let term2 = integral_to_tau(tau, |u, w| inv(&gm(u, w)), &transform(&hm.space, tau, az, &resid)?);
    let term3 = integral_to_tau(
        tau,
        |u, w| {
            let g = inv(&gm(u, w));
            &g * &g * (&mangle.at(u).0[w] - &mangle.at(u - 1).0[w])
        },
        &tm,
    );
    let term4 = integral_to_tau(tau, |u, w| inv(&gm(u, w)), &mangle);
    let stopped_martingale = Process::from_fn(horizon, |t| {
        let lhs = stopped.at(t) - m_proc.at(0);
        let rhs = &(&(t_m.at(t) + term2.at(t)) - term3.at(t)) + term4.at(t);
        &lhs - &rhs
    });
    Ok(IdentityResiduals { weighted_drift, stopped_martingale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};
    use crate::horizon::{RandomTime, Time};
    use crate::market::VecProcess;
    use crate::pricing::ClaimClass;
    use crate::prob::{FilteredSpace, Measure, Partition};

    fn four_state() -> HorizonMarket {
        let ids = ["u1", "uinf", "d1", "dinf"].iter().map(|s| s.to_string()).collect();
        let space = FilteredSpace::new(
            ids,
            Measure::base(vec![frac(1, 4); 4]).unwrap(),
            vec![Partition::trivial(4), Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap()],
        )
        .unwrap();
        let s = VecProcess::new(
            1,
            vec![vec![vec![int(1)]; 4], vec![vec![int(2)], vec![int(2)], vec![frac(1, 2)], vec![frac(1, 2)]]],
        )
        .unwrap();
        let tau = RandomTime(vec![Time::At(1), Time::Never, Time::At(1), Time::Never]);
        HorizonMarket::new(space, tau, &s).unwrap()
    }

    #[test]
    fn telescopes_for_each_class() {
        let hm = four_state();
        let g = Process(vec![RandVar::zeros(4), RandVar(vec![int(1), int(1), int(0), int(0)])]);
        let k = Process(vec![RandVar::constant(4, frac(1, 5)), RandVar(vec![frac(1, 3), frac(1, 3), int(2), int(2)])]);
        for class in ClaimClass::ALL {
            let kit = ClaimKit::new(class, g.clone(), k.clone(), &hm).unwrap();
            let (pricing, rep) = decompose_claim(&hm, &kit, FlowSign::Derived).unwrap();
            assert_eq!(rep.total(), pricing.g_form(&hm), "{class}");
            assert_eq!(rep.quadruplet.check(&hm, &pricing.f_process), None);
        }
    }

    #[test]
    fn vtilde_is_half_the_predicted_price() {
        let hm = four_state();
        let g = Process(vec![RandVar::zeros(4), RandVar(vec![int(1), int(1), int(0), int(0)])]);
        let kit = ClaimKit::new(ClaimClass::SurvivalStrict, g, Process::zeros(1, 4), &hm).unwrap();
        let (pricing, rep) = decompose_claim(&hm, &kit, FlowSign::Derived).unwrap();
        let predicted = rep.quadruplet.xi.at(1).scale(&frac(-1, 2));
        assert_eq!(rep.quadruplet.vtilde.at(1), &predicted);
        assert_eq!(pricing.f_process.at(0), &RandVar::constant(4, frac(1, 3)));
    }

    #[test]
    fn identities_vanish_on_a_martingale() {
        let hm = four_state();
        let m = Process(vec![RandVar::constant(4, int(2)), RandVar(vec![int(5), int(5), int(-1), int(-1)])]);
        let v = Process(vec![RandVar::zeros(4), RandVar::constant(4, int(3))]);
        assert!(gmart_identities(&hm, &m, &v).unwrap().vanish());
    }
}
