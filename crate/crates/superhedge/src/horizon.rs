//! The random horizon: Azéma supermartingales, the progressively enlarged
//! filtration, the deflator, the hazard triplet and the transform operator.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ext::Q;
use crate::market::{martingale_defect, Process};
use crate::prob::{cond_expect, cond_prob, FilteredSpace, Measure, Partition, RandVar};

/// A value of a random time: a date in `0..=T` or "never" (after `T`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Time {
    At(usize),
    Never,
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Time::At(t) => write!(f, "{t}"),
            Time::Never => f.write_str("inf"),
        }
    }
}

impl FromStr for Time {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" => Ok(Time::Never),
            other => other
                .parse()
                .map(Time::At)
                .map_err(|_| Error::Parse(format!("bad random time value {s:?}"))),
        }
    }
}

/// A random time, one value per outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomTime(pub Vec<Time>);

impl RandomTime {
    pub fn never(n: usize) -> Self {
        RandomTime(vec![Time::Never; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `{tau >= t}`
    pub fn ge(&self, t: usize) -> Vec<bool> {
        self.0.iter().map(|&v| v >= Time::At(t)).collect()
    }

    /// `{tau > t}`
    pub fn gt(&self, t: usize) -> Vec<bool> {
        self.0.iter().map(|&v| v > Time::At(t)).collect()
    }

    /// `{tau = t}`
    pub fn eq(&self, t: usize) -> Vec<bool> {
        self.0.iter().map(|&v| v == Time::At(t)).collect()
    }

    /// `{tau <= t}`
    pub fn le(&self, t: usize) -> Vec<bool> {
        self.0.iter().map(|&v| v <= Time::At(t)).collect()
    }

    /// `t ∧ tau(w)`
    pub fn min_with(&self, w: usize, t: usize) -> usize {
        match self.0[w] {
            Time::At(s) if s < t => s,
            _ => t,
        }
    }

    /// The date of the horizon at `w` when it is at most `t`.
    pub fn occurred_by(&self, w: usize, t: usize) -> Option<usize> {
        match self.0[w] {
            Time::At(s) if s <= t => Some(s),
            _ => None,
        }
    }

    fn check(&self, space: &FilteredSpace) -> Result<()> {
        if self.len() != space.outcomes() {
            return Err(Error::Invalid("random time length mismatch".into()));
        }
        if let Some(Time::At(s)) = self.0.iter().find(|v| matches!(v, Time::At(s) if *s > space.horizon())) {
            return Err(Error::Invalid(format!("random time value {s} exceeds the horizon")));
        }
        Ok(())
    }
}

/// The Azéma pair: `G_t = P(tau > t | F_t)` and `G̃_t = P(tau >= t | F_t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AzemaPair {
    pub g: Process,
    pub gtilde: Process,
}

pub fn azema(space: &FilteredSpace, tau: &RandomTime) -> Result<AzemaPair> {
    tau.check(space)?;
    let p = space.prob();
    let g = Process::from_fn(space.horizon(), |t| cond_prob(&tau.gt(t), space.at(t), p).value);
    let gtilde = Process::from_fn(space.horizon(), |t| cond_prob(&tau.ge(t), space.at(t), p).value);
    Ok(AzemaPair { g, gtilde })
}

/// The progressive enlargement: each `F_t` block split by `{tau = s}` for
/// `s <= t` and `{tau > t}`.
pub fn enlarge(space: &FilteredSpace, tau: &RandomTime) -> Result<Vec<Partition>> {
    tau.check(space)?;
    Ok((0..=space.horizon())
        .map(|t| space.at(t).split_by(|w| tau.occurred_by(w, t)))
        .collect())
}

/// Replaces a `G_{t-1}`-measurable variable by an `F_{t-1}`-measurable one
/// that agrees with it on `{tau >= t}`; blocks missing `{tau >= t}` get 0.
pub fn reduce(
    space: &FilteredSpace,
    enlarged: &[Partition],
    tau: &RandomTime,
    x: &RandVar,
    t: usize,
) -> Result<RandVar> {
    if t == 0 || t > space.horizon() {
        return Err(Error::Domain(format!("reduce needs 1 <= t <= T, got {t}")));
    }
    if !enlarged[t - 1].measures(&x.0) {
        return Err(Error::Domain(format!("variable is not measurable for the enlarged partition at {}", t - 1)));
    }
    let alive = tau.ge(t);
    let mut out = RandVar::zeros(x.len());
    for b in space.at(t - 1).blocks() {
        if let Some(&rep) = b.iter().find(|&&w| alive[w]) {
            for &w in b {
                out.0[w] = x.0[rep].clone();
            }
        }
    }
    Ok(out)
}

/// The deflator `Z^F` and the probability `Q̃ = Z^F_T · P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deflator {
    pub z: Process,
    pub qtilde: Measure,
}

/// `Z^F_t = Π_{s≤t} (1{G̃_s>0} / P(G̃_s>0 | F_{s-1}) + 1{G_{s-1}=0})`.
pub fn deflator(space: &FilteredSpace, azema: &AzemaPair) -> Result<Deflator> {
    let n = space.outcomes();
    let p = space.prob();
    let mut steps = vec![RandVar::constant(n, Q::one())];
    for s in 1..=space.horizon() {
        let alive = azema.gtilde.at(s).positive();
        let cp = cond_prob(&alive, space.at(s - 1), p).value;
        let mut factor = RandVar::zeros(n);
        for w in 0..n {
            if alive[w] {
                if cp.0[w].is_zero() {
                    return Err(Error::Internal(format!("P(G̃_{s}>0|F_{}) vanishes where G̃_{s}>0", s - 1)));
                }
                factor.0[w] = cp.0[w].recip();
            }
            if azema.g.at(s - 1).0[w].is_zero() {
                factor.0[w] += Q::one();
            }
        }
        let next = &steps[s - 1] * &factor;
        steps.push(next);
    }
    let z = Process(steps);
    if let Some((t, b)) = martingale_defect(&z, space.filtration(), p) {
        return Err(Error::Internal(format!("deflator fails the martingale property at t={t}, block {b}")));
    }
    let qtilde = Measure::with_density(p, z.at(space.horizon()))?;
    Ok(Deflator { z, qtilde })
}

/// The triplet `(m, N^G, D^{o,F})` attached to the random time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HazardTriplet {
    /// `m_t = 1 + Σ_{1≤s≤t} (G̃_s - E[G̃_s | F_{s-1}])`.
    pub m: Process,
    /// `N^G_t = 1{tau<=t} - Σ_{1≤s≤t∧tau} P(tau=s | F_s) / G̃_s`.
    pub ng: Process,
    /// `D^{o,F}_t = Σ_{0≤s≤t} P(tau=s | F_s)`.
    pub dof: Process,
}

pub fn hazard(space: &FilteredSpace, tau: &RandomTime, azema: &AzemaPair) -> Result<HazardTriplet> {
    let n = space.outcomes();
    let p = space.prob();
    let f = space.filtration();
    let m = Process::accumulate(
        RandVar::constant(n, Q::one()),
        |s| azema.gtilde.at(s) - &cond_expect(azema.gtilde.at(s), &f[s - 1], p).value,
        space.horizon(),
    );
    let jump = |s: usize| azema.gtilde.at(s) - azema.g.at(s);
    let dof = Process::accumulate(jump(0), jump, space.horizon());
    let mut ng = vec![RandVar::indicator(&tau.eq(0))];
    for s in 1..=space.horizon() {
        let alive = tau.ge(s);
        let hit = jump(s);
        let mut next = ng[s - 1].clone();
        for w in 0..n {
            if tau.0[w] == crate::horizon::Time::At(s) {
                next.0[w] += Q::one();
            }
            if alive[w] {
                let gt = &azema.gtilde.at(s).0[w];
                if gt.is_zero() {
                    return Err(Error::Internal(format!("G̃_{s} vanishes on {{tau >= {s}}}")));
                }
                next.0[w] -= &hit.0[w] / gt;
            }
        }
        ng.push(next);
    }
    Ok(HazardTriplet { m, ng: Process(ng), dof })
}

/// The transform carrying F-martingales to G-martingales on `[0, tau]`:
/// `Σ_{u≤t∧tau} (G_{u-1}/G̃_u) ΔM_u + E[1{G̃_u=0} ΔM_u | F_{u-1}]`.
pub fn transform(space: &FilteredSpace, tau: &RandomTime, azema: &AzemaPair, x: &Process) -> Result<Process> {
    let n = space.outcomes();
    let p = space.prob();
    let mut steps = vec![RandVar::zeros(n)];
    for u in 1..=space.horizon() {
        let dx = x.delta(u);
        let dead = azema.gtilde.at(u).zero_set();
        let leak = cond_expect(&dx.on(&dead), space.at(u - 1), p).value;
        let alive = tau.ge(u);
        let mut next = steps[u - 1].clone();
        for w in 0..n {
            if alive[w] {
                let gt = &azema.gtilde.at(u).0[w];
                if gt.is_zero() {
                    return Err(Error::Internal(format!("G̃_{u} vanishes on {{tau >= {u}}}")));
                }
                next.0[w] += &azema.g.at(u - 1).0[w] / gt * &dx.0[w] + &leak.0[w];
            }
        }
        steps.push(next);
    }
    Ok(Process(steps))
}

/// Integral `Σ_{1≤u≤t∧tau} H_u ΔY_u` evaluated only on `{u <= tau}`, so the
/// integrand is never read where it may be undefined.
pub fn integral_to_tau(tau: &RandomTime, h: impl Fn(usize, usize) -> Q, y: &Process) -> Process {
    let n = y.outcomes();
    let mut steps = vec![RandVar::zeros(n)];
    for u in 1..=y.horizon() {
        let alive = tau.ge(u);
        let dy = y.delta(u);
        let mut next = steps[u - 1].clone();
        for w in 0..n {
            if alive[w] && !dy.0[w].is_zero() {
                next.0[w] += h(u, w) * &dy.0[w];
            }
        }
        steps.push(next);
    }
    Process(steps)
}

/// Does `{G_{t-1} = 0} = {G̃_t = 0}` hold for every `t`?
pub fn no_dead_zone(azema: &AzemaPair) -> bool {
    (1..=azema.g.horizon()).all(|t| azema.g.at(t - 1).zero_set() == azema.gtilde.at(t).zero_set())
}

/// The event `{G̃_t = 0 < G_{t-1}}`.
pub fn dead_zone(azema: &AzemaPair, t: usize) -> Vec<bool> {
    azema
        .gtilde
        .at(t)
        .0
        .iter()
        .zip(&azema.g.at(t - 1).0)
        .map(|(gt, gp)| gt.is_zero() && gp.is_positive())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};

    fn two_point() -> FilteredSpace {
        FilteredSpace::new(
            vec!["a".into(), "b".into()],
            Measure::base(vec![frac(1, 2), frac(1, 2)]).unwrap(),
            vec![Partition::trivial(2), Partition::discrete(2)],
        )
        .unwrap()
    }

    #[test]
    fn never_and_immediate_horizons() {
        let space = two_point();
        let az = azema(&space, &RandomTime::never(2)).unwrap();
        assert!(az.g.0.iter().chain(&az.gtilde.0).all(|v| v.one_set().iter().all(|&b| b)));

        let zero = RandomTime(vec![Time::At(0); 2]);
        let az = azema(&space, &zero).unwrap();
        assert_eq!(az.gtilde.at(0), &RandVar::constant(2, int(1)));
        assert_eq!(az.g.at(0), &RandVar::zeros(2));
        assert_eq!(az.g.at(1), &RandVar::zeros(2));
        assert_eq!(az.gtilde.at(1), &RandVar::zeros(2));
        let d = deflator(&space, &az).unwrap();
        assert!(d.z.0.iter().all(|v| v == &RandVar::constant(2, int(1))));
    }

    #[test]
    fn split_horizon_deflator_and_reduction() {
        let space = two_point();
        let tau = RandomTime(vec![Time::At(1), Time::At(0)]);
        let az = azema(&space, &tau).unwrap();
        assert_eq!(az.g.at(0), &RandVar::constant(2, frac(1, 2)));
        let d = deflator(&space, &az).unwrap();
        assert_eq!(d.z.at(1), &RandVar(vec![int(2), int(0)]));
        assert_eq!(d.qtilde.weights(), &[int(1), int(0)]);

        let g = enlarge(&space, &tau).unwrap();
        assert_eq!(g[0], Partition::discrete(2));
        let x = RandVar(vec![int(5), int(7)]);
        assert_eq!(reduce(&space, &g, &tau, &x, 1).unwrap(), RandVar::constant(2, int(5)));
        let three = FilteredSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            Measure::base(vec![frac(1, 3); 3]).unwrap(),
            vec![Partition::trivial(3), Partition::discrete(3)],
        )
        .unwrap();
        let tau3 = RandomTime(vec![Time::At(1), Time::At(0), Time::Never]);
        let g3 = enlarge(&three, &tau3).unwrap();
        let bad = RandVar(vec![int(1), int(2), int(3)]);
        assert!(reduce(&three, &g3, &tau3, &bad, 1).is_err());
    }

    #[test]
    fn transform_of_constant_is_zero() {
        let space = two_point();
        let tau = RandomTime(vec![Time::At(1), Time::Never]);
        let az = azema(&space, &tau).unwrap();
        let c = Process::from_fn(1, |_| RandVar::constant(2, int(3)));
        assert_eq!(transform(&space, &tau, &az, &c).unwrap(), Process::zeros(1, 2));
    }
}
