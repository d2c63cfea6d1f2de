//! Vulnerable claims: payoffs contingent on the random horizon, their
//! G-side prices and the reduced F-side recursions.

use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};

use super::{aip, backward_price, minimax_ext, one_step, AipReport, MarketModel, PriceReport};
use crate::error::{Error, Result};
use crate::ext::{Ext, Q};
use crate::horizon::{azema, deflator, enlarge, hazard, AzemaPair, Deflator, HazardTriplet, RandomTime};
use crate::market::{build_derived, PriceSystem, Process, VecProcess};
use crate::prob::{ExtVar, FilteredSpace, RandVar};

/// A market observed up to a random horizon, with every derived object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HorizonMarket {
    pub space: FilteredSpace,
    pub tau: RandomTime,
    pub azema: AzemaPair,
    pub enlarged: Vec<crate::prob::Partition>,
    pub deflator: Deflator,
    pub hazard: HazardTriplet,
    pub prices: PriceSystem,
}

impl HorizonMarket {
    pub fn new(space: FilteredSpace, tau: RandomTime, s: &VecProcess) -> Result<Self> {
        let az = azema(&space, &tau)?;
        let enlarged = enlarge(&space, &tau)?;
        let defl = deflator(&space, &az)?;
        let haz = hazard(&space, &tau, &az)?;
        let prices = build_derived(&space, &az, &tau, s)?;
        Ok(HorizonMarket { space, tau, azema: az, enlarged, deflator: defl, hazard: haz, prices })
    }

    pub fn horizon(&self) -> usize {
        self.space.horizon()
    }

    pub fn outcomes(&self) -> usize {
        self.space.outcomes()
    }

    /// `(S^τ, G, P)`
    pub fn stopped(&self) -> MarketModel {
        self.model(self.enlarged.clone(), self.space.prob().clone(), &self.prices.stau)
    }

    /// `(S̃, F, Q̃)`
    pub fn tilde(&self) -> MarketModel {
        self.model(self.space.filtration().to_vec(), self.deflator.qtilde.clone(), &self.prices.stilde)
    }

    /// `(S̄, F, P)`
    pub fn bar(&self) -> MarketModel {
        self.model(self.space.filtration().to_vec(), self.space.prob().clone(), &self.prices.sbar)
    }

    /// `(S, F, P)`
    pub fn base(&self) -> MarketModel {
        self.model(self.space.filtration().to_vec(), self.space.prob().clone(), &self.prices.s)
    }

    fn model(&self, filtration: Vec<crate::prob::Partition>, measure: crate::prob::Measure, x: &VecProcess) -> MarketModel {
        MarketModel::new(filtration, measure, x.clone()).expect("derived models are adapted by construction")
    }

    /// `K_τ 1{τ <= t}`, reading `k` at the horizon date.
    pub fn at_default(&self, k: &Process, t: usize) -> RandVar {
        RandVar::from_fn(self.outcomes(), |w| match self.tau.occurred_by(w, t) {
            Some(s) => k.at(s).0[w].clone(),
            None => Q::zero(),
        })
    }

    /// Turns a failed AIP report into the error naming the first violating atom.
    pub fn require_aip(&self, report: &AipReport) -> Result<()> {
        match report.first_violation() {
            None => Ok(()),
            Some(v) => Err(Error::ImmediateProfit {
                time: v.time,
                block: self.space.block_name(report_block(self, v.time, v.block)),
            }),
        }
    }
}

fn report_block(hm: &HorizonMarket, t: usize, b: usize) -> &[usize] {
    hm.space.at(t).block(b)
}

/// The four payoff shapes of a vulnerable claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClaimClass {
    /// `g_T 1{τ > T}`
    SurvivalStrict,
    /// `g_T 1{τ >= T}`
    SurvivalIncl,
    /// `K_τ 1{τ <= T}`
    AtDefault,
    /// `g_T 1{τ > T} + K_τ 1{τ <= T}`
    Mixed,
}

impl ClaimClass {
    pub const ALL: [ClaimClass; 4] =
        [ClaimClass::SurvivalStrict, ClaimClass::SurvivalIncl, ClaimClass::AtDefault, ClaimClass::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            ClaimClass::SurvivalStrict => "survival_strict",
            ClaimClass::SurvivalIncl => "survival_incl",
            ClaimClass::AtDefault => "at_default",
            ClaimClass::Mixed => "mixed",
        }
    }

    /// Does the claim pay a recovery at the horizon date?
    pub fn has_recovery(self) -> bool {
        matches!(self, ClaimClass::AtDefault | ClaimClass::Mixed)
    }
}

impl fmt::Display for ClaimClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClaimClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClaimClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown claim class {s:?}")))
    }
}

/// `g 1{G̃=G>0} + k 1{G̃>G=0} + max(g,k) 1{G̃>G>0}`, outcome by outcome.
pub fn kappa(g: &RandVar, k: &RandVar, g_t: &RandVar, gtilde_t: &RandVar) -> RandVar {
    RandVar::from_fn(g.len(), |w| {
        let (a, b) = (&gtilde_t.0[w], &g_t.0[w]);
        if a == b {
            if b.is_positive() {
                g.0[w].clone()
            } else {
                Q::zero()
            }
        } else if b.is_zero() {
            k.0[w].clone()
        } else {
            g.0[w].clone().max(k.0[w].clone())
        }
    })
}

/// The recovery functional `f_R(t, x)`.
pub fn f_recovery(azema: &AzemaPair, r: &Process, t: usize, x: &RandVar) -> RandVar {
    kappa(x, r.at(t), azema.g.at(t), azema.gtilde.at(t))
}

/// A vulnerable claim with the F-side payoffs derived from its processes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimKit {
    pub class: ClaimClass,
    pub g: Process,
    pub k: Process,
    /// `κ(g, 0)`
    pub ghat: Process,
    /// `κ(0, K)`
    pub kappa0: Process,
    /// `κ(g, K)`
    pub kappag: Process,
    /// `κ(g, g) = g 1{G̃>0}`
    pub gbar: Process,
}

impl ClaimKit {
    pub fn new(class: ClaimClass, g: Process, k: Process, hm: &HorizonMarket) -> Result<Self> {
        for (name, x) in [("g", &g), ("K", &k)] {
            if x.horizon() != hm.horizon() || x.outcomes() != hm.outcomes() {
                return Err(Error::Domain(format!("claim process {name} does not match the space")));
            }
            if !x.is_adapted(hm.space.filtration()) {
                return Err(Error::Domain(format!("claim process {name} is not adapted")));
            }
        }
        let n = hm.outcomes();
        let az = &hm.azema;
        let zero = RandVar::zeros(n);
        let derive = |a: &dyn Fn(usize) -> RandVar, b: &dyn Fn(usize) -> RandVar| {
            Process::from_fn(hm.horizon(), |t| kappa(&a(t), &b(t), az.g.at(t), az.gtilde.at(t)))
        };
        let gt = |t: usize| g.at(t).clone();
        let kt = |t: usize| k.at(t).clone();
        let zt = |_: usize| zero.clone();
        let ghat = derive(&gt, &zt);
        let kappa0 = derive(&zt, &kt);
        let kappag = derive(&gt, &kt);
        let gbar = derive(&gt, &gt);
        Ok(ClaimKit { class, g, k, ghat, kappa0, kappag, gbar })
    }

    /// The same processes viewed as another class.
    pub fn with_class(&self, class: ClaimClass) -> Self {
        ClaimKit { class, ..self.clone() }
    }

    /// The F-side payoff at `t` entering the one-step theorem.
    pub fn reduced_payoff(&self, t: usize) -> &RandVar {
        match self.class {
            ClaimClass::SurvivalStrict => self.ghat.at(t),
            ClaimClass::SurvivalIncl => self.gbar.at(t),
            ClaimClass::AtDefault => self.kappa0.at(t),
            ClaimClass::Mixed => self.kappag.at(t),
        }
    }

    /// The G-side payoff of the class with maturity `t`.
    pub fn payoff(&self, hm: &HorizonMarket, t: usize) -> RandVar {
        let g = self.g.at(t);
        match self.class {
            ClaimClass::SurvivalStrict => g.on(&hm.tau.gt(t)),
            ClaimClass::SurvivalIncl => g.on(&hm.tau.ge(t)),
            ClaimClass::AtDefault => hm.at_default(&self.k, t),
            ClaimClass::Mixed => &g.on(&hm.tau.gt(t)) + &hm.at_default(&self.k, t),
        }
    }

    /// The recovery actually paid at the horizon date for the terminal claim.
    /// Survival-inclusive claims pay `g_T` when the horizon falls on `T`.
    pub fn effective_recovery(&self, hm: &HorizonMarket) -> Process {
        let n = hm.outcomes();
        let horizon = hm.horizon();
        match self.class {
            ClaimClass::SurvivalStrict => Process::zeros(horizon, n),
            ClaimClass::SurvivalIncl => Process::from_fn(horizon, |t| {
                if t == horizon {
                    self.g.at(t).clone()
                } else {
                    RandVar::zeros(n)
                }
            }),
            ClaimClass::AtDefault | ClaimClass::Mixed => self.k.clone(),
        }
    }

    /// Terminal value of the F-side recursion.
    pub fn terminal_reduced(&self, hm: &HorizonMarket) -> RandVar {
        let horizon = hm.horizon();
        let g = self.g.at(horizon);
        match self.class {
            ClaimClass::SurvivalStrict | ClaimClass::Mixed => g.on(&hm.azema.g.at(horizon).positive()),
            ClaimClass::SurvivalIncl => g.on(&hm.azema.gtilde.at(horizon).positive()),
            ClaimClass::AtDefault => RandVar::zeros(hm.outcomes()),
        }
    }
}

/// The three sides of the one-step theorem at time `t`, outcome by outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneStepComparison {
    pub time: usize,
    /// `{τ >= t}`
    pub alive: Vec<bool>,
    /// Direct price under `(S^τ, G, P)` at `t-1`.
    pub lhs: ExtVar,
    /// Price under `(S̃, F, Q̃)`, plus the frozen recovery after the horizon.
    pub rhs_qtilde: ExtVar,
    /// Joint LP in `(θ, δ)` over `ΔS̄` with the dead-zone exposure.
    pub rhs_delta: ExtVar,
    /// `K_τ 1{τ <= t-1}` for recovery classes, zero otherwise.
    pub frozen: RandVar,
}

pub fn one_step_vulnerable(hm: &HorizonMarket, kit: &ClaimKit, t: usize) -> Result<OneStepComparison> {
    if t == 0 || t > hm.horizon() {
        return Err(Error::Domain(format!("one_step_vulnerable needs 1 <= t <= T, got {t}")));
    }
    let n = hm.outcomes();
    let alive = hm.tau.ge(t);
    let frozen = if kit.class.has_recovery() {
        hm.at_default(&kit.k, t - 1)
    } else {
        RandVar::zeros(n)
    };

    let lhs = one_step(&hm.stopped(), t - 1, &kit.payoff(hm, t).to_ext())?
        .price
        .or_fill(Ext::zero());

    let payoff = kit.reduced_payoff(t);
    let reduced = one_step(&hm.tilde(), t - 1, &payoff.to_ext())?.price;

    let bar = hm.bar();
    let dead = hm.azema.gtilde.at(t).zero_set();
    let mut delta = vec![Ext::zero(); n];
    for b in 0..bar.filtration[t - 1].len() {
        let support = bar.charged(t - 1, b);
        if support.is_empty() {
            continue;
        }
        let rows = support
            .iter()
            .map(|&w| {
                let mut a = bar.prices.delta(t, w);
                a.push(if dead[w] { -Q::from_integer(1.into()) } else { Q::zero() });
                (Ext::Fin(payoff.0[w].clone()), a)
            })
            .collect();
        let value = minimax_ext(rows).value;
        for &w in bar.filtration[t - 1].block(b) {
            delta[w] = value.clone();
        }
    }

    let mut rhs_qtilde = Vec::with_capacity(n);
    let mut rhs_delta = Vec::with_capacity(n);
    for w in 0..n {
        if alive[w] {
            let q = reduced.get(w).cloned().ok_or_else(|| {
                Error::Internal(format!("Q̃ charges no mass near {{τ >= {t}}} at outcome {w}"))
            })?;
            rhs_qtilde.push(q);
            rhs_delta.push(delta[w].clone());
        } else {
            rhs_qtilde.push(Ext::Fin(frozen.0[w].clone()));
            rhs_delta.push(Ext::Fin(frozen.0[w].clone()));
        }
    }
    Ok(OneStepComparison {
        time: t,
        alive,
        lhs,
        rhs_qtilde: ExtVar(rhs_qtilde),
        rhs_delta: ExtVar(rhs_delta),
        frozen,
    })
}

/// `X_t = P̂^{(S̃,F,Q̃)}_{t,t+1}(f_R(t+1, X_{t+1}))`, with Q̃-null atoms set to 0.
pub fn reduced_recursion(hm: &HorizonMarket, terminal: &RandVar, recovery: &Process) -> Result<Process> {
    reduced_backward(hm, terminal, |t, x| f_recovery(&hm.azema, recovery, t, x))
}

fn reduced_backward(
    hm: &HorizonMarket,
    terminal: &RandVar,
    payoff: impl Fn(usize, &RandVar) -> RandVar,
) -> Result<Process> {
    let model = hm.tilde();
    hm.require_aip(&aip(&model))?;
    let mut steps = vec![terminal.clone()];
    for t in (0..hm.horizon()).rev() {
        let next = payoff(t + 1, steps.last().expect("terminal present"));
        let price = one_step(&model, t, &next.to_ext())?.price;
        let x = price
            .finite_or_zero()
            .map_err(|_| Error::Internal(format!("infinite reduced price at t={t} under AIP")))?;
        steps.push(x);
    }
    steps.reverse();
    Ok(Process(steps))
}

/// Both sides of the pricing relation for a terminal vulnerable claim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VulnerablePricing {
    pub g_report: PriceReport,
    pub f_process: Process,
    pub recovery: Process,
}

impl VulnerablePricing {
    /// `K_τ 1{τ <= t} + X_t 1{τ > t}` for every `t`.
    pub fn g_form(&self, hm: &HorizonMarket) -> Process {
        Process::from_fn(hm.horizon(), |t| {
            &hm.at_default(&self.recovery, t) + &self.f_process.at(t).on(&hm.tau.gt(t))
        })
    }
}

/// Prices the terminal claim of `kit` directly under `(S^τ, G, P)` and
/// through the reduced recursion under `(S̃, F, Q̃)`.
pub fn price_vulnerable(hm: &HorizonMarket, kit: &ClaimKit) -> Result<VulnerablePricing> {
    let recovery = kit.effective_recovery(hm);
    let f_process = reduced_recursion(hm, &kit.terminal_reduced(hm), &recovery)?;
    let g_report = backward_price(&hm.stopped(), &kit.payoff(hm, hm.horizon()).to_ext())?;
    Ok(VulnerablePricing { g_report, f_process, recovery })
}

/// The survival-inclusive recursion read with no recovery at all: terminal
/// `g_T 1{G̃_T>0}` and `f_0` at every step.
pub fn survival_incl_without_recovery(hm: &HorizonMarket, kit: &ClaimKit) -> Result<Process> {
    let n = hm.outcomes();
    let horizon = hm.horizon();
    let terminal = kit.g.at(horizon).on(&hm.azema.gtilde.at(horizon).positive());
    reduced_recursion(hm, &terminal, &Process::zeros(horizon, n))
}

/// The reduced recursion for nonnegative `g` and `K`, where the recovery
/// functional becomes a plain maximum with `K̄ = K 1{G̃>G}`.
pub fn options_simplify(hm: &HorizonMarket, kit: &ClaimKit) -> Result<Process> {
    let negative = |p: &Process| p.0.iter().any(|v| !v.is_nonneg());
    if negative(&kit.g) || negative(&kit.k) {
        return Err(Error::Domain("the option recursion needs g >= 0 and K >= 0".into()));
    }
    let az = &hm.azema;
    let kbar = |t: usize| {
        let jump: Vec<bool> = az.gtilde.at(t).0.iter().zip(&az.g.at(t).0).map(|(a, b)| a > b).collect();
        kit.k.at(t).on(&jump)
    };
    let recovery = kit.class.has_recovery();
    reduced_backward(hm, &kit.terminal_reduced(hm), |t, x| if recovery { x.max_with(&kbar(t)) } else { x.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};
    use crate::horizon::Time;
    use crate::prob::{Measure, Partition};

    fn split_horizon() -> HorizonMarket {
        let space = FilteredSpace::new(
            vec!["a".into(), "b".into()],
            Measure::base(vec![frac(1, 2), frac(1, 2)]).unwrap(),
            vec![Partition::trivial(2), Partition::discrete(2)],
        )
        .unwrap();
        let s = VecProcess::new(1, vec![vec![vec![frac(1, 2)]; 2], vec![vec![int(0)], vec![int(1)]]]).unwrap();
        HorizonMarket::new(space, RandomTime(vec![Time::At(1), Time::At(0)]), &s).unwrap()
    }

    #[test]
    fn kappa_cases() {
        let g = RandVar(vec![int(3), int(3), int(3), int(3)]);
        let k = RandVar(vec![int(5), int(5), int(5), int(5)]);
        let big_g = RandVar(vec![int(1), int(0), frac(1, 2), int(0)]);
        let big_gt = RandVar(vec![int(1), int(1), int(1), int(0)]);
        assert_eq!(kappa(&g, &k, &big_g, &big_gt), RandVar(vec![int(3), int(5), int(5), int(0)]));
    }

    #[test]
    fn class_names_round_trip() {
        for c in ClaimClass::ALL {
            assert_eq!(c.name().parse::<ClaimClass>().unwrap(), c);
        }
        assert!("bogus".parse::<ClaimClass>().is_err());
    }

    #[test]
    fn immediate_profit_after_stopping() {
        let hm = split_horizon();
        let stopped = aip(&hm.stopped());
        assert!(!stopped.holds());
        assert!(!aip(&hm.tilde()).holds());
        assert!(aip(&hm.bar()).holds());
        let ones = Process::from_fn(1, |_| RandVar::constant(2, int(1)));
        let kit = ClaimKit::new(ClaimClass::SurvivalStrict, ones, Process::zeros(1, 2), &hm).unwrap();
        let cmp = one_step_vulnerable(&hm, &kit, 1).unwrap();
        assert_eq!(cmp.lhs.0[0], Ext::NegInf);
        assert_eq!(cmp.rhs_qtilde, cmp.lhs);
        assert_eq!(cmp.rhs_delta, cmp.lhs);
        assert!(matches!(price_vulnerable(&hm, &kit), Err(Error::ImmediateProfit { time: 0, .. })));
    }
}
