//! Seeded random models: event trees with rational branch weights, random
//! horizons drawn under a chosen regime, price paths and claims.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ext::Q;
use crate::horizon::{azema, dead_zone, no_dead_zone, RandomTime, Time};
use crate::market::{Process, VecProcess};
use crate::model::{ClaimSpec, Model};
use crate::pricing::ClaimClass;
use crate::prob::{cond_prob, FilteredSpace, Measure, Partition, RandVar};

/// The random generator used everywhere a model or a test input is drawn.
pub type Rng64 = ChaCha8Rng;

pub fn rng_for(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// How the random horizon relates to the price information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TauRegime {
    /// The horizon is independent of the final information.
    Independent,
    /// One horizon value per outcome, drawn freely.
    Correlated,
    /// Some `{G̃_t = 0 < G_{t-1}}` has positive probability.
    WithDeadzone,
    /// `{G_{t-1} = 0} = {G̃_t = 0}` for every `t`.
    ZIdentity,
}

impl TauRegime {
    pub const ALL: [TauRegime; 4] =
        [TauRegime::Independent, TauRegime::Correlated, TauRegime::WithDeadzone, TauRegime::ZIdentity];

    pub fn name(self) -> &'static str {
        match self {
            TauRegime::Independent => "independent",
            TauRegime::Correlated => "correlated",
            TauRegime::WithDeadzone => "with_deadzone",
            TauRegime::ZIdentity => "z_identity",
        }
    }
}

impl fmt::Display for TauRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TauRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TauRegime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown horizon regime {s:?}")))
    }
}

/// How price increments are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PriceMode {
    /// Increments centred on the children that keep `G̃_t > 0`, so that
    /// `(S̃, F, Q̃)` has no immediate profit.
    TildeAip,
    /// Unconstrained increments.
    Free,
    /// Unconstrained, except that prices do not move on `{G̃_t = 0 < G_{t-1}}`.
    FreeNoJump,
}

impl PriceMode {
    pub const ALL: [PriceMode; 3] = [PriceMode::TildeAip, PriceMode::Free, PriceMode::FreeNoJump];

    pub fn name(self) -> &'static str {
        match self {
            PriceMode::TildeAip => "tilde_aip",
            PriceMode::Free => "free",
            PriceMode::FreeNoJump => "free_no_jump",
        }
    }
}

impl fmt::Display for PriceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriceMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown price mode {s:?}")))
    }
}

/// Parameters of one generated model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub max_outcomes: usize,
    pub max_horizon: usize,
    pub max_dim: usize,
    /// Bound on the denominators of drawn rationals.
    pub den_bound: u32,
    pub regime: TauRegime,
    pub prices: PriceMode,
    /// Draw `g` and `K` nonnegative.
    pub nonneg_claims: bool,
}

/// Attempts made before a regime is declared unreachable.
pub const MAX_ATTEMPTS: usize = 64;

impl GenConfig {
    pub fn new(seed: u64, regime: TauRegime, prices: PriceMode) -> Self {
        GenConfig {
            seed,
            max_outcomes: 16,
            max_horizon: 3,
            max_dim: 2,
            den_bound: 12,
            regime,
            prices,
            nonneg_claims: false,
        }
    }

    /// A configuration cycling through every regime and price mode with the seed.
    pub fn sweep(seed: u64) -> Self {
        let regime = TauRegime::ALL[(seed % 4) as usize];
        let prices = PriceMode::ALL[((seed / 4) % 3) as usize];
        GenConfig::new(seed, regime, prices)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outcomes == 0 || self.max_horizon == 0 || self.max_dim == 0 || self.den_bound == 0 {
            return Err(Error::Domain("generator bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Draws a rational `p/q` with `1 <= q <= den` and `lo*q <= p <= hi*q`.
pub fn random_q(rng: &mut Rng64, den: u32, lo: i64, hi: i64) -> Q {
    let q = i64::from(rng.random_range(1..=den));
    let p = rng.random_range(lo * q..=hi * q);
    Q::new(p.into(), q.into())
}

/// Draws a random tree of partitions with rational branch weights. With
/// `shared_split`, every final block splits into two outcomes with the same
/// weights, leaving room for a horizon independent of the information.
pub fn random_space(
    rng: &mut Rng64,
    horizon: usize,
    max_outcomes: usize,
    shared_split: bool,
) -> Result<FilteredSpace> {
    let cap = (max_outcomes / 2).max(1);
    // Each node: (parent node at the previous level, conditional weight).
    let mut levels: Vec<Vec<(usize, Q)>> = Vec::new();
    let roots = if cap >= 2 && rng.random_range(0..4) == 0 { 2 } else { 1 };
    levels.push(weights(rng, roots).into_iter().map(|w| (0, w)).collect());
    for _ in 1..=horizon {
        let parents = levels.last().expect("root level").len();
        let mut next = Vec::new();
        for p in 0..parents {
            let room = cap - next.len() - (parents - p - 1);
            let branching = [1, 2, 2, 2, 3][rng.random_range(0..5)].min(room).max(1);
            next.extend(weights(rng, branching).into_iter().map(|w| (p, w)));
        }
        levels.push(next);
    }
    let leaves = levels.last().expect("terminal level").len();
    let mut outcomes: Vec<(usize, Q)> = Vec::new();
    if shared_split && 2 * leaves <= max_outcomes {
        let split = weights(rng, 2);
        for leaf in 0..leaves {
            outcomes.extend(split.iter().map(|w| (leaf, w.clone())));
        }
        return build_space(&levels, &outcomes);
    }
    for leaf in 0..leaves {
        let room = max_outcomes - outcomes.len() - (leaves - leaf - 1);
        let split = if room >= 2 && rng.random_bool(0.6) { 2 } else { 1 };
        outcomes.extend(weights(rng, split).into_iter().map(|w| (leaf, w)));
    }
    build_space(&levels, &outcomes)
}

/// Integer weights in `1..=4`, normalized.
fn weights(rng: &mut Rng64, k: usize) -> Vec<Q> {
    let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| Q::new(w.into(), total.into())).collect()
}

fn build_space(levels: &[Vec<(usize, Q)>], outcomes: &[(usize, Q)]) -> Result<FilteredSpace> {
    let horizon = levels.len() - 1;
    let n = outcomes.len();
    // node[t][w]: the node of level t containing outcome w.
    let mut node = vec![vec![0usize; n]; horizon + 1];
    let mut probs = Vec::with_capacity(n);
    for (w, (leaf, weight)) in outcomes.iter().enumerate() {
        let mut prob = weight.clone();
        let mut at = *leaf;
        for t in (0..=horizon).rev() {
            node[t][w] = at;
            prob *= &levels[t][at].1;
            at = levels[t][at].0;
        }
        probs.push(prob);
    }
    let filtration = (0..=horizon)
        .map(|t| {
            let mut blocks = vec![Vec::new(); levels[t].len()];
            for w in 0..n {
                blocks[node[t][w]].push(w);
            }
            Partition::new(n, blocks)
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = (0..n).map(|w| format!("w{w}")).collect();
    FilteredSpace::new(ids, Measure::base(probs)?, filtration)
}

/// Blocks at `t` lying inside block `b` at `t-1`.
pub fn children(space: &FilteredSpace, t: usize, b: usize) -> Vec<usize> {
    let parent = space.at(t - 1).block(b);
    let part = space.at(t);
    let mut out: Vec<usize> = Vec::new();
    for &w in parent {
        let c = part.block_of(w);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn random_time_value(rng: &mut Rng64, horizon: usize) -> Time {
    if rng.random_bool(0.5) {
        Time::Never
    } else {
        Time::At(rng.random_range(0..=horizon))
    }
}

/// Draws a random horizon under `regime`, or `None` when this attempt
/// cannot meet the regime postcondition.
pub fn random_tau(rng: &mut Rng64, space: &FilteredSpace, regime: TauRegime) -> Result<Option<RandomTime>> {
    let n = space.outcomes();
    let horizon = space.horizon();
    let tau = match regime {
        TauRegime::Independent => {
            // The k-th outcome of every final block gets the same value.
            let values: Vec<Time> = (0..2).map(|_| random_time_value(rng, horizon)).collect();
            let last = space.at(horizon);
            let mut tau = vec![Time::Never; n];
            for b in last.blocks() {
                for (k, &w) in b.iter().enumerate() {
                    tau[w] = values[k.min(1)];
                }
            }
            RandomTime(tau)
        }
        TauRegime::Correlated => RandomTime((0..n).map(|_| random_time_value(rng, horizon)).collect()),
        TauRegime::WithDeadzone => {
            let mut tau: Vec<Time> = (0..n).map(|_| random_time_value(rng, horizon)).collect();
            let t = rng.random_range(1..=horizon);
            let prev = space.at(t - 1);
            let candidates: Vec<usize> = (0..prev.len()).filter(|&b| children(space, t, b).len() >= 2).collect();
            if candidates.is_empty() {
                return Ok(None);
            }
            let b = candidates[rng.random_range(0..candidates.len())];
            let kids = children(space, t, b);
            let dead = rng.random_range(0..kids.len());
            for (i, &c) in kids.iter().enumerate() {
                let block = space.at(t).block(c);
                if i == dead {
                    for &w in block {
                        tau[w] = Time::At(rng.random_range(0..t));
                    }
                } else if i == (dead + 1) % kids.len() {
                    tau[block[0]] = Time::Never;
                }
            }
            RandomTime(tau)
        }
        TauRegime::ZIdentity => {
            let mut tau = RandomTime((0..n).map(|_| random_time_value(rng, horizon)).collect());
            loop {
                let az = azema(space, &tau)?;
                let hit = (1..=horizon).find_map(|t| dead_zone(&az, t).iter().position(|&d| d).map(|w| (t, w)));
                match hit {
                    None => break,
                    Some((t, w)) => {
                        let block = space.at(t).block(space.at(t).block_of(w));
                        tau.0[block[0]] = Time::Never;
                    }
                }
            }
            tau
        }
    };
    Ok(regime_holds(space, &tau, regime)?.then_some(tau))
}

/// Checks the postcondition of `regime` on a drawn horizon.
pub fn regime_holds(space: &FilteredSpace, tau: &RandomTime, regime: TauRegime) -> Result<bool> {
    let az = azema(space, tau)?;
    Ok(match regime {
        TauRegime::Correlated => true,
        TauRegime::Independent => {
            // Survival probabilities must not depend on the information.
            (0..=space.horizon()).all(|t| {
                let all_equal = |v: &RandVar| v.0.iter().all(|x| x == &v.0[0]);
                all_equal(az.g.at(t)) && all_equal(az.gtilde.at(t))
            })
        }
        TauRegime::WithDeadzone => (1..=space.horizon()).any(|t| dead_zone(&az, t).contains(&true)),
        TauRegime::ZIdentity => no_dead_zone(&az),
    })
}

/// Adapted increments built child block by child block: `draw(t, parent,
/// kids)` returns one increment per child of `parent`.
pub fn adapted_increments(
    space: &FilteredSpace,
    start: impl Fn(usize) -> Vec<Q>,
    mut draw: impl FnMut(usize, usize, &[usize]) -> Vec<Vec<Q>>,
) -> Result<VecProcess> {
    let n = space.outcomes();
    let first: Vec<Vec<Q>> = (0..n).map(|w| start(space.at(0).block_of(w))).collect();
    let dim = first[0].len();
    let mut steps = vec![first];
    for t in 1..=space.horizon() {
        let mut next = steps[t - 1].clone();
        for b in 0..space.at(t - 1).len() {
            let kids = children(space, t, b);
            let incs = draw(t, b, &kids);
            for (c, inc) in kids.iter().zip(incs) {
                for &w in space.at(t).block(*c) {
                    for (x, d) in next[w].iter_mut().zip(&inc) {
                        *x += d;
                    }
                }
            }
        }
        steps.push(next);
    }
    VecProcess::new(dim, steps)
}

/// Increments summing to zero over `k` children, each coordinate of the free
/// ones in `[-2, 2]`.
pub fn centred(rng: &mut Rng64, k: usize, dim: usize, den: u32) -> Vec<Vec<Q>> {
    if k <= 1 {
        return vec![vec![Q::zero(); dim]; k];
    }
    let mut out: Vec<Vec<Q>> = (0..k - 1).map(|_| (0..dim).map(|_| random_q(rng, den, -2, 2)).collect()).collect();
    let last = (0..dim).map(|i| -out.iter().map(|v| &v[i]).sum::<Q>()).collect();
    out.push(last);
    out
}

fn free(rng: &mut Rng64, k: usize, dim: usize, den: u32) -> Vec<Vec<Q>> {
    (0..k)
        .map(|_| (0..dim).map(|_| if rng.random_bool(0.2) { Q::zero() } else { random_q(rng, den, -2, 2) }).collect())
        .collect()
}

/// Nonnegative prices for `space` and `tau` under `mode`.
pub fn random_prices(
    rng: &mut Rng64,
    space: &FilteredSpace,
    tau: &RandomTime,
    mode: PriceMode,
    dim: usize,
    den: u32,
) -> Result<VecProcess> {
    let az = azema(space, tau)?;
    let base = 4 * space.horizon() as i64 + 1;
    let starts: Vec<Vec<Q>> =
        (0..space.at(0).len()).map(|_| (0..dim).map(|_| Q::from_integer((base + rng.random_range(0..4)).into())).collect()).collect();
    let rng = std::cell::RefCell::new(rng);
    adapted_increments(
        space,
        |b| starts[b].clone(),
        |t, _, kids| {
            let rng = &mut *rng.borrow_mut();
            let rep = |c: usize| space.at(t).block(c)[0];
            let alive = |c: usize| az.gtilde.at(t).0[rep(c)].is_positive();
            let jump = |c: usize| !alive(c) && az.g.at(t - 1).0[rep(c)].is_positive();
            match mode {
                PriceMode::TildeAip => {
                    let live: Vec<usize> = kids.iter().copied().filter(|&c| alive(c)).collect();
                    let mut centre = centred(rng, live.len(), dim, den).into_iter();
                    kids.iter()
                        .map(|&c| {
                            if alive(c) {
                                centre.next().expect("one increment per live child")
                            } else {
                                free(rng, 1, dim, den).remove(0)
                            }
                        })
                        .collect()
                }
                PriceMode::Free => free(rng, kids.len(), dim, den),
                PriceMode::FreeNoJump => {
                    let mut incs = free(rng, kids.len(), dim, den);
                    for (inc, &c) in incs.iter_mut().zip(kids) {
                        if jump(c) {
                            inc.iter_mut().for_each(|x| *x = Q::zero());
                        }
                    }
                    incs
                }
            }
        },
    )
}

/// An adapted scalar process with values `p/q`, `q <= den`, in `[lo, hi]`.
pub fn random_adapted(rng: &mut Rng64, space: &FilteredSpace, den: u32, lo: i64, hi: i64) -> Process {
    Process::from_fn(space.horizon(), |t| {
        let part = space.at(t);
        let values: Vec<Q> = (0..part.len()).map(|_| random_q(rng, den, lo, hi)).collect();
        RandVar::from_fn(space.outcomes(), |w| values[part.block_of(w)].clone())
    })
}

/// A predictable scalar process: `X_t` is measurable at `t-1`, `X_0` at 0.
pub fn random_predictable(rng: &mut Rng64, space: &FilteredSpace, den: u32, lo: i64, hi: i64) -> Process {
    Process::from_fn(space.horizon(), |t| {
        let part = space.at(t.saturating_sub(1));
        let values: Vec<Q> = (0..part.len()).map(|_| random_q(rng, den, lo, hi)).collect();
        RandVar::from_fn(space.outcomes(), |w| values[part.block_of(w)].clone())
    })
}

/// A martingale under `mu` built from centred increments on each block.
pub fn random_martingale(rng: &mut Rng64, space: &FilteredSpace, mu: &Measure, den: u32) -> Process {
    let n = space.outcomes();
    let start = random_q(rng, den, -2, 2);
    let mut steps = vec![RandVar::constant(n, start)];
    for t in 1..=space.horizon() {
        let mut next = steps[t - 1].clone();
        for b in 0..space.at(t - 1).len() {
            let kids = children(space, t, b);
            let mass: Vec<Q> = kids.iter().map(|&c| mu.mass(space.at(t).block(c))).collect();
            let charged: Vec<usize> = (0..kids.len()).filter(|&i| mass[i].is_positive()).collect();
            let mut inc = vec![Q::zero(); kids.len()];
            for &i in &charged {
                inc[i] = random_q(rng, den, -2, 2);
            }
            if let Some(&last) = charged.last() {
                let drift: Q = charged[..charged.len() - 1].iter().map(|&i| &mass[i] * &inc[i]).sum();
                inc[last] = -drift / &mass[last];
            }
            for (i, &c) in kids.iter().enumerate() {
                for &w in space.at(t).block(c) {
                    next.0[w] += &inc[i];
                }
            }
        }
        steps.push(next);
    }
    Process(steps)
}

/// Draws a complete model under `config`.
pub fn generate(config: &GenConfig) -> Result<Model> {
    config.validate()?;
    let mut rng = rng_for(config.seed);
    for _ in 0..MAX_ATTEMPTS {
        let horizon = rng.random_range(1..=config.max_horizon);
        let shared = config.regime == TauRegime::Independent;
        let space = random_space(&mut rng, horizon, config.max_outcomes, shared)?;
        let Some(tau) = random_tau(&mut rng, &space, config.regime)? else { continue };
        let dim = rng.random_range(1..=config.max_dim);
        let prices = random_prices(&mut rng, &space, &tau, config.prices, dim, config.den_bound)?;
        let (lo, hi) = if config.nonneg_claims { (0, 4) } else { (-3, 3) };
        let g = random_adapted(&mut rng, &space, config.den_bound, lo, hi);
        let k = random_adapted(&mut rng, &space, config.den_bound, lo, hi);
        let class = ClaimClass::ALL[rng.random_range(0..4)];
        return Ok(Model { space, tau, prices, claim: Some(ClaimSpec { class, g, k }) });
    }
    Err(Error::Domain(format!(
        "regime {} unreachable within {MAX_ATTEMPTS} attempts for seed {}",
        config.regime, config.seed
    )))
}

/// `P(G̃_t = 0 < G_{t-1} | F_{t-1})`, the conditional mass of the dead zone.
pub fn dead_zone_mass(space: &FilteredSpace, tau: &RandomTime, t: usize) -> Result<RandVar> {
    let az = azema(space, tau)?;
    Ok(cond_prob(&dead_zone(&az, t), space.at(t - 1), space.prob()).value)
}

/// Is `z` identically one?
pub fn is_unit(z: &Process) -> bool {
    z.0.iter().all(|v| v.0.iter().all(One::is_one))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::horizon::deflator;

    #[test]
    fn same_seed_same_model() {
        for seed in 0..20 {
            let c = GenConfig::sweep(seed);
            assert_eq!(generate(&c).unwrap().to_text(), generate(&c).unwrap().to_text());
        }
    }

    #[test]
    fn regimes_meet_their_postconditions() {
        for seed in 0..40 {
            for regime in TauRegime::ALL {
                let m = generate(&GenConfig::new(seed, regime, PriceMode::TildeAip)).unwrap();
                assert!(m.space.outcomes() <= 16 && m.space.horizon() <= 3);
                assert!(regime_holds(&m.space, &m.tau, regime).unwrap());
                let z = deflator(&m.space, &azema(&m.space, &m.tau).unwrap()).unwrap().z;
                match regime {
                    TauRegime::ZIdentity => assert!(is_unit(&z)),
                    TauRegime::WithDeadzone => assert!(!is_unit(&z)),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn martingales_have_no_drift() {
        let mut rng = rng_for(7);
        let space = random_space(&mut rng, 3, 16, false).unwrap();
        let m = random_martingale(&mut rng, &space, space.prob(), 12);
        assert!(crate::market::martingale_defect(&m, space.filtration(), space.prob()).is_none());
    }
}
