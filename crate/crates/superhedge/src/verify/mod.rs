//! Exact verification of the pricing and decomposition results on fixtures
//! and seeded random instances.
//!
//! Every suite counts assertion instances per named check and records each
//! failure with its tag, seed, time, atom and both sides of the comparison.
//! Instances run in parallel; results are merged in seed order so reports are
//! byte-identical across runs and worker counts.

mod aip;
mod decomp;
mod esssup;
mod multistep;
mod onestep;

use std::fmt::{self, Display, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::{FilteredSpace, MaskedVar, Partition};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "SUPERHEDGE_WORKERS";

/// A group of related checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Esssup,
    Aip,
    Onestep,
    Multistep,
    Decomp,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 5] = [Suite::Esssup, Suite::Aip, Suite::Onestep, Suite::Multistep, Suite::Decomp];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Esssup => "esssup",
            Suite::Aip => "aip",
            Suite::Onestep => "onestep",
            Suite::Multistep => "multistep",
            Suite::Decomp => "decomp",
            Suite::All => "all",
        }
    }

    /// The concrete suites this selection runs.
    pub fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::PARTS.to_vec(),
            one => vec![one],
        }
    }
}

impl Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::PARTS
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Number of random instances drawn by each family of checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plan {
    /// Random families, densities and partitions for the supremum laws.
    pub esssup: usize,
    /// Generated models for the AIP equivalences and the one-step theorem.
    pub sweep: usize,
    /// Predictable processes for the predictable-AIP lemma.
    pub predictable: usize,
    /// Horizons with `Z^F ≡ 1` for the preservation theorem.
    pub universal: usize,
    /// Random AIP price processes tried on each such horizon.
    pub universal_paths: usize,
    /// Horizons with a dead zone for the counterexample process.
    pub deadzone: usize,
    /// AIP models for the multi-period recursion and the oracle.
    pub multistep: usize,
    /// AIP models with nonnegative claims for the option recursion.
    pub options: usize,
    /// AIP models for the risk decomposition.
    pub decomp: usize,
    /// Random `(M, V)` pairs for the G-martingale identities.
    pub identities: usize,
}

impl Plan {
    /// Sample sizes matching the acceptance thresholds.
    pub fn standard() -> Self {
        Plan {
            esssup: 500,
            sweep: 300,
            predictable: 100,
            universal: 100,
            universal_paths: 100,
            deadzone: 20,
            multistep: 50,
            options: 100,
            decomp: 100,
            identities: 200,
        }
    }

    /// `n` instances for every family (fixture checks always run).
    pub fn uniform(n: usize) -> Self {
        Plan {
            esssup: n,
            sweep: n,
            predictable: n,
            universal: n,
            universal_paths: Plan::standard().universal_paths,
            deadzone: n,
            multistep: n,
            options: n,
            decomp: n,
            identities: n,
        }
    }
}

/// One failed assertion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub tag: String,
    pub seed: Option<u64>,
    pub time: Option<usize>,
    pub atom: String,
    pub lhs: String,
    pub rhs: String,
}

impl Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<String>| x.unwrap_or_else(|| "-".into());
        write!(
            f,
            "tag={} seed={} t={} atom={} lhs={} rhs={}",
            self.tag,
            opt(self.seed.map(|s| s.to_string())),
            opt(self.time.map(|t| t.to_string())),
            self.atom,
            self.lhs,
            self.rhs
        )
    }
}

/// Counts of one named check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckStat {
    pub name: String,
    pub instances: usize,
    pub failures: Vec<Failure>,
}

/// Checks, counters and notes accumulated by a suite.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checks: Vec<CheckStat>,
    pub counters: Vec<(String, usize)>,
    pub notes: Vec<String>,
}

impl Tally {
    fn stat(&mut self, name: &str) -> &mut CheckStat {
        match self.checks.iter().position(|c| c.name == name) {
            Some(i) => &mut self.checks[i],
            None => {
                self.checks.push(CheckStat { name: name.into(), ..CheckStat::default() });
                self.checks.last_mut().expect("just pushed")
            }
        }
    }

    pub fn pass(&mut self, name: &str) {
        self.stat(name).instances += 1;
    }

    pub fn fail(&mut self, name: &str, failure: Failure) {
        let stat = self.stat(name);
        stat.instances += 1;
        stat.failures.push(failure);
    }

    /// Records one instance of `name`, failing with `failure()` unless `ok`.
    pub fn check(&mut self, name: &str, ok: bool, failure: impl FnOnce() -> Failure) {
        if ok {
            self.pass(name);
        } else {
            self.fail(name, failure());
        }
    }

    pub fn count(&mut self, key: &str, by: usize) {
        match self.counters.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v += by,
            None => self.counters.push((key.into(), by)),
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn merge(&mut self, other: Tally) {
        for c in other.checks {
            let stat = self.stat(&c.name);
            stat.instances += c.instances;
            stat.failures.extend(c.failures);
        }
        for (k, v) in other.counters {
            self.count(&k, v);
        }
        self.notes.extend(other.notes);
    }

    pub fn instances(&self, name: &str) -> usize {
        self.checks.iter().find(|c| c.name == name).map_or(0, |c| c.instances)
    }

    pub fn counter(&self, key: &str) -> usize {
        self.counters.iter().find(|(k, _)| k == key).map_or(0, |(_, v)| *v)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Failure> {
        self.checks.iter().flat_map(|c| &c.failures)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Checks whose name starts with `prefix`, with their failures.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CheckStat> {
        self.checks.iter().filter(move |c| c.name.starts_with(prefix))
    }
}

/// Where an assertion is evaluated: the seed and the space it lives on.
#[derive(Clone, Copy)]
pub(crate) struct Site<'a> {
    pub seed: Option<u64>,
    pub space: &'a FilteredSpace,
}

impl<'a> Site<'a> {
    pub fn new(seed: Option<u64>, space: &'a FilteredSpace) -> Self {
        Site { seed, space }
    }

    pub fn failure(&self, tag: &str, time: Option<usize>, atom: String, lhs: impl Display, rhs: impl Display) -> Failure {
        Failure { tag: tag.into(), seed: self.seed, time, atom, lhs: lhs.to_string(), rhs: rhs.to_string() }
    }

    fn atom(&self, part: Option<&Partition>, w: usize) -> String {
        match part {
            Some(p) => self.space.block_name(p.block(p.block_of(w))),
            None => self.space.block_name(&[w]),
        }
    }

    /// One instance of `tag`: fails at the first outcome where `bad` reports
    /// a pair of disagreeing sides.
    pub fn each(
        &self,
        tally: &mut Tally,
        tag: &str,
        time: Option<usize>,
        part: Option<&Partition>,
        bad: impl Fn(usize) -> Option<(String, String)>,
    ) {
        let hit = (0..self.space.outcomes()).find_map(|w| bad(w).map(|sides| (w, sides)));
        match hit {
            None => tally.pass(tag),
            Some((w, (lhs, rhs))) => {
                let f = self.failure(tag, time, self.atom(part, w), lhs, rhs);
                tally.fail(tag, f)
            }
        }
    }

    /// One instance of `tag` that fails with the error text when `result` is an error.
    pub fn attempt<T>(&self, tally: &mut Tally, tag: &str, result: Result<T>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                tally.fail(tag, self.failure(tag, None, "-".into(), e.to_string(), "ok"));
                None
            }
        }
    }
}

/// Disagreement of two displayable values.
pub(crate) fn differ<T: PartialEq + Display>(lhs: &T, rhs: &T) -> Option<(String, String)> {
    (lhs != rhs).then(|| (lhs.to_string(), rhs.to_string()))
}

/// Display of a masked entry.
pub(crate) fn masked(v: &MaskedVar, w: usize) -> String {
    v.get(w).map_or_else(|| "undef".into(), |x| x.to_string())
}

/// Disagreement of two masked entries, comparing their canonical text.
pub(crate) fn same_masked(a: &MaskedVar, b: &MaskedVar, w: usize) -> Option<(String, String)> {
    let (x, y) = (masked(a, w), masked(b, w));
    (x != y).then_some((x, y))
}

/// A seed for a derived random stream, distinct per suite and instance.
pub(crate) fn stream(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Runs `work` on `count` consecutive seeds from `base`, merging in seed order.
pub(crate) fn fan_out(base: u64, count: usize, work: impl Fn(u64) -> Tally + Sync) -> Tally {
    let tallies: Vec<Tally> = (0..count as u64).into_par_iter().map(|i| work(base.wrapping_add(i))).collect();
    let mut out = Tally::default();
    for t in tallies {
        out.merge(t);
    }
    out
}

/// The outcome of one suite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub tally: Tally,
}

/// The outcome of a verification run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.tally.passed())
    }

    pub fn suite(&self, suite: Suite) -> Option<&Tally> {
        self.suites.iter().find(|s| s.suite == suite).map(|s| &s.tally)
    }

    /// Line-oriented `key=value` text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut total_checks = 0;
        let mut total_instances = 0;
        let mut total_failures = 0;
        for s in &self.suites {
            let name = s.suite.name();
            for c in &s.tally.checks {
                let status = if c.failures.is_empty() { "pass" } else { "fail" };
                writeln!(
                    out,
                    "suite={name} check={} instances={} failures={} status={status}",
                    c.name,
                    c.instances,
                    c.failures.len()
                )
                .expect("writing to a string");
                total_checks += 1;
                total_instances += c.instances;
                total_failures += c.failures.len();
            }
            for (k, v) in &s.tally.counters {
                writeln!(out, "suite={name} counter={k} value={v}").expect("writing to a string");
            }
            for n in &s.tally.notes {
                writeln!(out, "suite={name} note={n}").expect("writing to a string");
            }
            for f in s.tally.failures() {
                writeln!(out, "suite={name} failure {f}").expect("writing to a string");
            }
        }
        let status = if self.passed() { "pass" } else { "fail" };
        writeln!(
            out,
            "summary seed={} checks={total_checks} instances={total_instances} failures={total_failures} status={status}",
            self.seed
        )
        .expect("writing to a string");
        out
    }
}

/// Runs one suite.
pub fn run_suite(suite: Suite, plan: &Plan, seed: u64) -> SuiteReport {
    let tally = match suite {
        Suite::Esssup => esssup::run(plan, seed),
        Suite::Aip => aip::run(plan, seed),
        Suite::Onestep => onestep::run(plan, seed),
        Suite::Multistep => multistep::run(plan, seed),
        Suite::Decomp => decomp::run(plan, seed),
        Suite::All => unreachable!("`all` is expanded by the caller"),
    };
    SuiteReport { suite, tally }
}

/// Runs a suite selection, honouring the worker cap in the environment.
pub fn run(suite: Suite, plan: &Plan, seed: u64) -> Result<Report> {
    let go = || Report { seed, suites: suite.parts().into_iter().map(|s| run_suite(s, plan, seed)).collect() };
    match std::env::var(WORKERS_ENV) {
        Ok(v) => {
            let workers: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Parse(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Internal(format!("cannot start workers: {e}")))?;
            Ok(pool.install(go))
        }
        Err(_) => Ok(go()),
    }
}
