//! Immediate-profit detection and super-hedging prices on a generic market
//! `(X, H, mu)`: a price process, a filtration and a reference measure.

mod vulnerable;

pub use vulnerable::*;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ext::{Ext, Q};
use crate::lp::{hull_contains_zero, minimax, HullOutcome, LpOutcome, MinimaxInstance};
use crate::market::{Strategy, VecProcess};
use crate::prob::{ExtVar, MaskedVar, Measure, Partition};

/// A price process together with the information flow and measure it is traded under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketModel {
    pub filtration: Vec<Partition>,
    pub measure: Measure,
    pub prices: VecProcess,
}

impl MarketModel {
    pub fn new(filtration: Vec<Partition>, measure: Measure, prices: VecProcess) -> Result<Self> {
        if filtration.len() != prices.horizon() + 1 {
            return Err(Error::Domain("filtration and prices have different horizons".into()));
        }
        if measure.len() != prices.outcomes() {
            return Err(Error::Domain("measure and prices have different sizes".into()));
        }
        if !prices.is_adapted(&filtration) {
            return Err(Error::Domain("prices are not adapted to the filtration".into()));
        }
        Ok(MarketModel { filtration, measure, prices })
    }

    pub fn horizon(&self) -> usize {
        self.prices.horizon()
    }

    pub fn outcomes(&self) -> usize {
        self.prices.outcomes()
    }

    /// Outcomes of block `b` at time `t` charged by the measure.
    pub fn charged(&self, t: usize, b: usize) -> Vec<usize> {
        self.filtration[t].block(b).iter().copied().filter(|&w| self.measure.charges(w)).collect()
    }
}

/// AIP status of one atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The origin is a convex combination of the charged increments.
    Holds { weights: Vec<Q> },
    /// `separator · ΔX <= -1` on every charged outcome: an immediate profit.
    Violated { separator: Vec<Q> },
    /// The atom carries no mass.
    Null,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomVerdict {
    pub time: usize,
    pub block: usize,
    /// Charged outcomes whose increments were tested, in order.
    pub support: Vec<usize>,
    pub verdict: Verdict,
}

/// AIP verdicts for every `(t, atom)` with `t < T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AipReport {
    pub atoms: Vec<Vec<AtomVerdict>>,
}

impl AipReport {
    pub fn holds(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn first_violation(&self) -> Option<&AtomVerdict> {
        self.atoms.iter().flatten().find(|a| matches!(a.verdict, Verdict::Violated { .. }))
    }

    pub fn violations(&self) -> impl Iterator<Item = &AtomVerdict> {
        self.atoms.iter().flatten().filter(|a| matches!(a.verdict, Verdict::Violated { .. }))
    }

    pub fn at(&self, t: usize, block: usize) -> &AtomVerdict {
        &self.atoms[t][block]
    }
}

/// Tests, atom by atom, whether the origin lies in the convex hull of the
/// conditional support of the next increment.
pub fn aip(model: &MarketModel) -> AipReport {
    let atoms = (0..model.horizon())
        .map(|t| {
            (0..model.filtration[t].len())
                .map(|b| {
                    let support = model.charged(t, b);
                    let verdict = if support.is_empty() {
                        Verdict::Null
                    } else {
                        let vectors: Vec<Vec<Q>> =
                            support.iter().map(|&w| model.prices.delta(t + 1, w)).collect();
                        match hull_contains_zero(&vectors).expect("nonempty increments of equal size") {
                            HullOutcome::Inside { weights } => Verdict::Holds { weights },
                            HullOutcome::Outside { separator } => Verdict::Violated { separator },
                        }
                    };
                    AtomVerdict { time: t, block: b, support, verdict }
                })
                .collect()
        })
        .collect();
    AipReport { atoms }
}

/// The hedge computed on one atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomStep {
    pub time: usize,
    pub block: usize,
    /// `None` on a null atom.
    pub value: Option<Ext>,
    pub theta: Option<Vec<Q>>,
    pub certificate: Option<Vec<Q>>,
}

/// Output of the one-period operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub price: MaskedVar,
    pub atoms: Vec<AtomStep>,
}

/// Solves `min_θ max_j (c_j - θ·a_j)` when some payoffs may be infinite.
pub fn minimax_ext(rows: Vec<(Ext, Vec<Q>)>) -> LpOutcome {
    if rows.iter().any(|(c, _)| *c == Ext::PosInf) {
        return LpOutcome { value: Ext::PosInf, argmin: None, certificate: None };
    }
    let finite: Vec<(Q, Vec<Q>)> = rows
        .into_iter()
        .filter_map(|(c, a)| c.finite().cloned().map(|c| (c, a)))
        .collect();
    if finite.is_empty() {
        return LpOutcome { value: Ext::NegInf, argmin: None, certificate: None };
    }
    minimax(&MinimaxInstance::new(finite).expect("rows share one dimension"))
}

/// The one-period super-hedging price at time `t` of a claim `xi` payable at `t+1`.
pub fn one_step(model: &MarketModel, t: usize, xi: &ExtVar) -> Result<StepOutcome> {
    if t >= model.horizon() {
        return Err(Error::Domain(format!("one_step needs t < T, got {t}")));
    }
    if !model.filtration[t + 1].measures(&xi.0) {
        return Err(Error::Domain(format!("claim is not measurable at time {}", t + 1)));
    }
    let n = model.outcomes();
    let mut values = vec![Ext::zero(); n];
    let mut defined = vec![false; n];
    let mut atoms = Vec::new();
    for b in 0..model.filtration[t].len() {
        let support = model.charged(t, b);
        if support.is_empty() {
            atoms.push(AtomStep { time: t, block: b, value: None, theta: None, certificate: None });
            continue;
        }
        let rows = support.iter().map(|&w| (xi.0[w].clone(), model.prices.delta(t + 1, w))).collect();
        let out = minimax_ext(rows);
        for &w in model.filtration[t].block(b) {
            values[w] = out.value.clone();
            defined[w] = true;
        }
        atoms.push(AtomStep {
            time: t,
            block: b,
            value: Some(out.value),
            theta: out.argmin,
            certificate: out.certificate,
        });
    }
    Ok(StepOutcome { price: MaskedVar::new(values, defined), atoms })
}

/// Super-hedging prices for every time, the hedges, and the AIP verdicts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceReport {
    pub model: MarketModel,
    /// `prices[t]` for `t = 0..=T`.
    pub prices: Vec<MaskedVar>,
    /// `steps[t]` for `t = 0..T`, one entry per atom.
    pub steps: Vec<Vec<AtomStep>>,
    pub aip: AipReport,
}

impl PriceReport {
    /// Positions per outcome; zero where no finite hedge exists.
    pub fn strategy(&self) -> Strategy {
        let d = self.model.prices.dim();
        let theta = self
            .steps
            .iter()
            .enumerate()
            .map(|(t, atoms)| {
                (0..self.model.outcomes())
                    .map(|w| {
                        atoms[self.model.filtration[t].block_of(w)]
                            .theta
                            .clone()
                            .unwrap_or_else(|| vec![Q::zero(); d])
                    })
                    .collect()
            })
            .collect();
        Strategy { theta }
    }
}

/// Backward recursion of the one-period operator from a terminal claim.
pub fn backward_price(model: &MarketModel, terminal: &ExtVar) -> Result<PriceReport> {
    let horizon = model.horizon();
    if !model.filtration[horizon].measures(&terminal.0) {
        return Err(Error::Domain("terminal claim is not measurable at T".into()));
    }
    let defined: Vec<bool> = (0..model.outcomes())
        .map(|w| !model.measure.mass(model.filtration[horizon].block(model.filtration[horizon].block_of(w))).is_zero())
        .collect();
    let mut prices = vec![MaskedVar::new(terminal.0.clone(), defined)];
    let mut steps = Vec::new();
    for t in (0..horizon).rev() {
        let next = prices.last().expect("at least the terminal").or_fill(Ext::zero());
        let out = one_step(model, t, &next)?;
        prices.push(out.price);
        steps.push(out.atoms);
    }
    prices.reverse();
    steps.reverse();
    Ok(PriceReport { model: model.clone(), prices, steps, aip: aip(model) })
}

/// Time-0 value of one atom of the initial partition from the global oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleAtom {
    pub block: usize,
    pub outcome: Option<LpOutcome>,
}

/// Prices a terminal claim with a single LP per initial atom, the positions
/// `θ_{s-1}` being free variables constant on the blocks at time `s-1`.
pub fn global_oracle(model: &MarketModel, terminal: &ExtVar) -> Result<(MaskedVar, Vec<OracleAtom>)> {
    let horizon = model.horizon();
    let d = model.prices.dim();
    let n = model.outcomes();
    let mut values = vec![Ext::zero(); n];
    let mut defined = vec![false; n];
    let mut atoms = Vec::new();
    for b0 in 0..model.filtration[0].len() {
        let support = model.charged(0, b0);
        if support.is_empty() {
            atoms.push(OracleAtom { block: b0, outcome: None });
            continue;
        }
        // One group of d variables per (time, block) reached by the support.
        let mut slots: Vec<(usize, usize)> = Vec::new();
        for s in 1..=horizon {
            for &w in &support {
                let key = (s, model.filtration[s - 1].block_of(w));
                if !slots.contains(&key) {
                    slots.push(key);
                }
            }
        }
        let rows = support
            .iter()
            .map(|&w| {
                let mut a = vec![Q::zero(); slots.len() * d];
                for s in 1..=horizon {
                    let k = slots
                        .iter()
                        .position(|&key| key == (s, model.filtration[s - 1].block_of(w)))
                        .expect("slot registered above");
                    for (i, x) in model.prices.delta(s, w).into_iter().enumerate() {
                        a[k * d + i] = x;
                    }
                }
                (terminal.0[w].clone(), a)
            })
            .collect();
        let out = if slots.is_empty() {
            let best = support.iter().map(|&w| terminal.0[w].clone()).max().expect("support");
            LpOutcome { value: best, argmin: None, certificate: None }
        } else {
            minimax_ext(rows)
        };
        for &w in model.filtration[0].block(b0) {
            values[w] = out.value.clone();
            defined[w] = true;
        }
        atoms.push(OracleAtom { block: b0, outcome: Some(out) });
    }
    Ok((MaskedVar::new(values, defined), atoms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};

    fn binomial() -> MarketModel {
        let prices = VecProcess::new(
            1,
            vec![vec![vec![int(1)], vec![int(1)]], vec![vec![int(2)], vec![frac(1, 2)]]],
        )
        .unwrap();
        MarketModel::new(
            vec![Partition::trivial(2), Partition::discrete(2)],
            Measure::base(vec![frac(1, 2), frac(1, 2)]).unwrap(),
            prices,
        )
        .unwrap()
    }

    #[test]
    fn call_price_in_one_step() {
        let m = binomial();
        let xi = ExtVar(vec![Ext::Fin(int(1)), Ext::zero()]);
        let out = one_step(&m, 0, &xi).unwrap();
        assert_eq!(out.price.get(0), Some(&Ext::Fin(frac(1, 3))));
        assert_eq!(out.atoms[0].theta, Some(vec![frac(2, 3)]));
        let rep = backward_price(&m, &xi).unwrap();
        assert_eq!(rep.prices[0].get(1), Some(&Ext::Fin(frac(1, 3))));
        let (g, _) = global_oracle(&m, &xi).unwrap();
        assert_eq!(g.get(0), Some(&Ext::Fin(frac(1, 3))));
        assert!(rep.aip.holds());
    }

    #[test]
    fn cash_claim_and_dead_exposure() {
        let m = binomial();
        let c = ExtVar(vec![Ext::Fin(int(7)); 2]);
        assert_eq!(one_step(&m, 0, &c).unwrap().price.get(0), Some(&Ext::Fin(int(7))));
        let flat = MarketModel::new(
            m.filtration.clone(),
            m.measure.clone(),
            VecProcess::new(1, vec![vec![vec![int(1)]; 2]; 2]).unwrap(),
        )
        .unwrap();
        let xi = ExtVar(vec![Ext::Fin(int(3)), Ext::Fin(int(-4))]);
        assert_eq!(one_step(&flat, 0, &xi).unwrap().price.get(1), Some(&Ext::Fin(int(3))));
    }

    #[test]
    fn unmeasurable_claim_is_rejected() {
        let m = binomial();
        let mut two = m.clone();
        two.filtration[1] = Partition::trivial(2);
        two.prices = VecProcess::new(1, vec![vec![vec![int(1)]; 2]; 2]).unwrap();
        let xi = ExtVar(vec![Ext::Fin(int(1)), Ext::zero()]);
        assert!(one_step(&two, 0, &xi).is_err());
    }
}
