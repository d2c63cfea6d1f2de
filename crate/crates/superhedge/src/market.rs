//! Price processes and discrete stochastic calculus.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::ext::Q;
use crate::horizon::{AzemaPair, RandomTime};
use crate::prob::{cond_expect, FilteredSpace, Measure, Partition, RandVar};

/// A scalar process: one random variable per time `0..=T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process(pub Vec<RandVar>);

impl Process {
    pub fn zeros(horizon: usize, n: usize) -> Self {
        Process(vec![RandVar::zeros(n); horizon + 1])
    }

    pub fn from_fn(horizon: usize, f: impl FnMut(usize) -> RandVar) -> Self {
        Process((0..=horizon).map(f).collect())
    }

    pub fn horizon(&self) -> usize {
        self.0.len() - 1
    }

    pub fn outcomes(&self) -> usize {
        self.0[0].len()
    }

    pub fn at(&self, t: usize) -> &RandVar {
        &self.0[t]
    }

    /// `X_t - X_{t-1}` for `t >= 1`.
    pub fn delta(&self, t: usize) -> RandVar {
        &self.0[t] - &self.0[t - 1]
    }

    /// Adds `increments[t]` cumulatively, starting from `start` at time 0.
    pub fn accumulate(start: RandVar, increments: impl Fn(usize) -> RandVar, horizon: usize) -> Self {
        let mut steps = vec![start];
        for t in 1..=horizon {
            let next = &steps[t - 1] + &increments(t);
            steps.push(next);
        }
        Process(steps)
    }

    pub fn is_adapted(&self, filtration: &[Partition]) -> bool {
        self.0.iter().zip(filtration).all(|(x, p)| p.measures(&x.0))
    }

    /// Is every increment `F_{t-1}`-measurable?
    pub fn is_predictable(&self, filtration: &[Partition]) -> bool {
        (1..self.0.len()).all(|t| filtration[t - 1].measures(&self.delta(t).0))
    }

    /// The process stopped at `tau`: `X_{t ∧ tau}`.
    pub fn stopped(&self, tau: &RandomTime) -> Self {
        Process::from_fn(self.horizon(), |t| {
            RandVar::from_fn(self.outcomes(), |w| self.0[tau.min_with(w, t)].0[w].clone())
        })
    }

    pub fn map(&self, f: impl Fn(&RandVar) -> RandVar) -> Self {
        Process(self.0.iter().map(f).collect())
    }

    pub fn zip_with(&self, other: &Process, f: impl Fn(&RandVar, &RandVar) -> RandVar) -> Self {
        Process(self.0.iter().zip(&other.0).map(|(a, b)| f(a, b)).collect())
    }
}

/// A `d`-dimensional process stored as `[t][outcome][asset]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VecProcess {
    dim: usize,
    steps: Vec<Vec<Vec<Q>>>,
}

impl VecProcess {
    pub fn new(dim: usize, steps: Vec<Vec<Vec<Q>>>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("process without time steps".into()));
        }
        let n = steps[0].len();
        for row in &steps {
            if row.len() != n || row.iter().any(|v| v.len() != dim) {
                return Err(Error::Domain("ragged vector process".into()));
            }
        }
        Ok(VecProcess { dim, steps })
    }

    /// Stacks scalar processes as the coordinates of a vector process.
    pub fn from_components(components: &[Process]) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Domain("no components".into()))?;
        let steps = (0..=first.horizon())
            .map(|t| {
                (0..first.outcomes())
                    .map(|w| components.iter().map(|c| c.0[t].0[w].clone()).collect())
                    .collect()
            })
            .collect();
        VecProcess::new(components.len(), steps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn outcomes(&self) -> usize {
        self.steps[0].len()
    }

    pub fn at(&self, t: usize, w: usize) -> &[Q] {
        &self.steps[t][w]
    }

    pub fn steps(&self) -> &[Vec<Vec<Q>>] {
        &self.steps
    }

    pub fn component(&self, k: usize) -> Process {
        Process(
            self.steps.iter().map(|row| RandVar(row.iter().map(|v| v[k].clone()).collect())).collect(),
        )
    }

    /// `X_t(w) - X_{t-1}(w)` as a vector.
    pub fn delta(&self, t: usize, w: usize) -> Vec<Q> {
        self.steps[t][w].iter().zip(&self.steps[t - 1][w]).map(|(a, b)| a - b).collect()
    }

    pub fn is_adapted(&self, filtration: &[Partition]) -> bool {
        self.steps.iter().zip(filtration).all(|(row, p)| p.measures(row))
    }

    /// Rebuilds the process from `X_0` and increments multiplied by `weight(t, w)`.
    pub fn reweighted(&self, weight: impl Fn(usize, usize) -> Q) -> Self {
        let mut steps = vec![self.steps[0].clone()];
        for t in 1..self.steps.len() {
            let row = (0..self.outcomes())
                .map(|w| {
                    let c = weight(t, w);
                    steps[t - 1][w]
                        .iter()
                        .zip(self.delta(t, w))
                        .map(|(prev, d): (&Q, Q)| prev + d * &c)
                        .collect()
                })
                .collect();
            steps.push(row);
        }
        VecProcess { dim: self.dim, steps }
    }

    pub fn stopped(&self, tau: &RandomTime) -> Self {
        let steps = (0..self.steps.len())
            .map(|t| (0..self.outcomes()).map(|w| self.steps[tau.min_with(w, t)][w].clone()).collect())
            .collect();
        VecProcess { dim: self.dim, steps }
    }
}

/// A hedging strategy: `theta[t][w]` is the position held over `(t, t+1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub theta: Vec<Vec<Vec<Q>>>,
}

impl Strategy {
    /// Checks that the position at `t` is measurable for the partition at `t`.
    pub fn is_measurable(&self, filtration: &[Partition]) -> bool {
        self.theta.iter().zip(filtration).all(|(row, p)| p.measures(row))
    }
}

/// The four price processes attached to a random horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriceSystem {
    /// The original nonnegative prices.
    pub s: VecProcess,
    /// Increments kept where `G̃_t > 0`.
    pub sbar: VecProcess,
    /// Increments kept where `G_{t-1} > 0`.
    pub stilde: VecProcess,
    /// The prices stopped at `tau`.
    pub stau: VecProcess,
}

/// Builds `S̄`, `S̃` and `S^τ` from `S`, checking positivity and adaptedness.
pub fn build_derived(
    space: &FilteredSpace,
    azema: &AzemaPair,
    tau: &RandomTime,
    s: &VecProcess,
) -> Result<PriceSystem> {
    if s.horizon() != space.horizon() || s.outcomes() != space.outcomes() {
        return Err(Error::Invalid("price process does not match the space".into()));
    }
    if !s.is_adapted(space.filtration()) {
        return Err(Error::Invalid("price process is not adapted".into()));
    }
    if s.steps.iter().flatten().flatten().any(|x| x.is_negative()) {
        return Err(Error::Invalid("negative price".into()));
    }
    let indicator = |b: bool| if b { Q::from_integer(1.into()) } else { Q::zero() };
    let sbar = s.reweighted(|t, w| indicator(azema.gtilde.0[t].0[w].is_positive()));
    let stilde = s.reweighted(|t, w| indicator(azema.g.0[t - 1].0[w].is_positive()));
    let stau = s.stopped(tau);
    Ok(PriceSystem { s: s.clone(), sbar, stilde, stau })
}

fn check_lengths(a: &Process, b: &Process) -> Result<()> {
    if a.0.len() != b.0.len() || a.outcomes() != b.outcomes() {
        return Err(Error::Domain("process length mismatch".into()));
    }
    Ok(())
}

/// Stochastic integral `(H·X)_t = Σ_{1≤s≤t} H_s ΔX_s`.
pub fn sint(h: &Process, x: &Process) -> Result<Process> {
    check_lengths(h, x)?;
    let n = x.outcomes();
    Ok(Process::accumulate(RandVar::zeros(n), |s| h.at(s) * &x.delta(s), x.horizon()))
}

/// Quadratic covariation `[X,Y]_t = Σ ΔX_s ΔY_s`.
pub fn bracket(x: &Process, y: &Process) -> Result<Process> {
    check_lengths(x, y)?;
    Ok(Process::accumulate(RandVar::zeros(x.outcomes()), |s| &x.delta(s) * &y.delta(s), x.horizon()))
}

/// Predictable covariation `⟨X,Y⟩_t = Σ E[ΔX_s ΔY_s | F_{s-1}]`.
pub fn angle(x: &Process, y: &Process, filtration: &[Partition], mu: &Measure) -> Result<Process> {
    check_lengths(x, y)?;
    Ok(Process::accumulate(
        RandVar::zeros(x.outcomes()),
        |s| cond_expect(&(&x.delta(s) * &y.delta(s)), &filtration[s - 1], mu).value,
        x.horizon(),
    ))
}

/// Predictable projection `E[X_t | F_{t-1}]`, with `X_0` kept at time 0.
pub fn pred_proj(x: &Process, filtration: &[Partition], mu: &Measure) -> Process {
    Process::from_fn(x.horizon(), |t| {
        if t == 0 {
            x.at(0).clone()
        } else {
            cond_expect(x.at(t), &filtration[t - 1], mu).value
        }
    })
}

/// First `(t, block)` where `E[ΔX_t | H_{t-1}] != 0` on a charged block, if any.
pub fn martingale_defect(x: &Process, filtration: &[Partition], mu: &Measure) -> Option<(usize, usize)> {
    for t in 1..=x.horizon() {
        let part = &filtration[t - 1];
        let e = cond_expect(&x.delta(t), part, mu);
        for (i, b) in part.blocks().iter().enumerate() {
            if e.defined[b[0]] && !e.value.0[b[0]].is_zero() {
                return Some((t, i));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};

    fn p(rows: &[&[i64]]) -> Process {
        Process(rows.iter().map(|r| RandVar(r.iter().map(|&x| int(x)).collect())).collect())
    }

    #[test]
    fn unit_integrand_recovers_increments() {
        let x = p(&[&[1, 1], &[3, 0], &[4, -2]]);
        let one = Process::from_fn(2, |_| RandVar::constant(2, int(1)));
        let i = sint(&one, &x).unwrap();
        assert_eq!(i, x.map(|v| v - x.at(0)));
    }

    #[test]
    fn mismatched_lengths_fail() {
        let x = p(&[&[1, 1], &[3, 0]]);
        let y = p(&[&[1, 1], &[3, 0], &[1, 1]]);
        assert!(sint(&x, &y).is_err());
        assert!(bracket(&x, &y).is_err());
    }

    #[test]
    fn bracket_minus_angle_is_martingale() {
        let f = vec![Partition::trivial(2), Partition::discrete(2)];
        let mu = Measure::base(vec![frac(1, 3), frac(2, 3)]).unwrap();
        let x = Process(vec![
            RandVar::constant(2, int(0)),
            RandVar(vec![int(2), int(-1)]),
        ]);
        let y = Process(vec![RandVar::constant(2, int(1)), RandVar(vec![int(5), int(3)])]);
        let diff = &bracket(&x, &y).unwrap().0[1] - &angle(&x, &y, &f, &mu).unwrap().0[1];
        let d = Process(vec![RandVar::zeros(2), diff]);
        assert_eq!(martingale_defect(&d, &f, &mu), None);
        assert_eq!(martingale_defect(&x, &f, &mu), None);
        assert_eq!(martingale_defect(&y, &f, &mu), Some((1, 0)));
    }
}
