//! Model files: a JSON description of a finite market with a random horizon
//! and an optional vulnerable claim.
//!
//! Every rational is written as a string (`"3"`, `"-1/2"`), so no value ever
//! passes through a float. Arrays indexed by outcome follow the order of the
//! `outcomes` list.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{fmt_q, parse_q, Q};
use crate::horizon::{RandomTime, Time};
use crate::market::{Process, VecProcess};
use crate::pricing::{ClaimClass, ClaimKit, HorizonMarket};
use crate::prob::{FilteredSpace, Measure, Partition, RandVar};

/// Serialized form of a model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub horizon: usize,
    pub assets: usize,
    pub outcomes: Vec<OutcomeEntry>,
    /// `filtration[t]` lists the blocks of the partition at time `t` by outcome id.
    pub filtration: Vec<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeEntry {
    pub id: String,
    pub prob: String,
    pub tau: TauEntry,
    /// `prices[k][t]`: price of asset `k` at time `t` along this outcome.
    pub prices: Vec<Vec<String>>,
}

/// A horizon date, or the string `"inf"` when the horizon falls after `T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauEntry {
    Date(usize),
    Never(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimEntry {
    pub class: String,
    /// `g[outcome][t]`
    pub g: Vec<Vec<String>>,
    /// `K[outcome][t]`
    #[serde(rename = "K")]
    pub k: Vec<Vec<String>>,
}

impl ModelFile {
    pub fn from_text(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model file: {e}")))
    }

    /// Canonical text: pretty JSON with a trailing newline.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model files always serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// A claim attached to a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimSpec {
    pub class: ClaimClass,
    pub g: Process,
    pub k: Process,
}

/// A validated model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub space: FilteredSpace,
    pub tau: RandomTime,
    pub prices: VecProcess,
    pub claim: Option<ClaimSpec>,
}

fn parse_field(text: &str, what: impl FnOnce() -> String) -> Result<Q> {
    parse_q(text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", what())),
        other => other,
    })
}

impl Model {
    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let n = file.outcomes.len();
        let horizon = file.horizon;
        if n == 0 {
            return Err(Error::Invalid("model has no outcomes".into()));
        }
        if file.assets == 0 {
            return Err(Error::Invalid("model needs at least one asset".into()));
        }
        let mut index = HashMap::new();
        for (w, o) in file.outcomes.iter().enumerate() {
            if index.insert(o.id.as_str(), w).is_some() {
                return Err(Error::Invalid(format!("duplicate outcome id {:?}", o.id)));
            }
        }
        let ids: Vec<String> = file.outcomes.iter().map(|o| o.id.clone()).collect();
        let probs = file
            .outcomes
            .iter()
            .map(|o| parse_field(&o.prob, || format!("outcome {:?}: prob", o.id)))
            .collect::<Result<Vec<_>>>()?;
        let measure = Measure::base(probs)?;

        if file.filtration.len() != horizon + 1 {
            return Err(Error::Invalid(format!(
                "filtration has {} partitions, expected {}",
                file.filtration.len(),
                horizon + 1
            )));
        }
        let filtration = file
            .filtration
            .iter()
            .enumerate()
            .map(|(t, blocks)| {
                let blocks = blocks
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|id| {
                                index.get(id.as_str()).copied().ok_or_else(|| {
                                    Error::Invalid(format!("filtration at t={t} names unknown outcome {id:?}"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Partition::new(n, blocks).map_err(|e| Error::Invalid(format!("filtration at t={t}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let space = FilteredSpace::new(ids, measure, filtration)?;

        let tau = RandomTime(
            file.outcomes
                .iter()
                .map(|o| match &o.tau {
                    TauEntry::Date(s) if *s <= horizon => Ok(Time::At(*s)),
                    TauEntry::Date(s) => Err(Error::Invalid(format!(
                        "outcome {:?}: tau {s} exceeds the horizon {horizon}",
                        o.id
                    ))),
                    TauEntry::Never(s) if s == "inf" => Ok(Time::Never),
                    TauEntry::Never(s) => {
                        Err(Error::Parse(format!("outcome {:?}: tau must be an integer or \"inf\", got {s:?}", o.id)))
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        );

        let mut steps = vec![vec![Vec::with_capacity(file.assets); n]; horizon + 1];
        for (w, o) in file.outcomes.iter().enumerate() {
            if o.prices.len() != file.assets {
                return Err(Error::Invalid(format!(
                    "outcome {:?}: {} price paths, expected {}",
                    o.id,
                    o.prices.len(),
                    file.assets
                )));
            }
            for (k, path) in o.prices.iter().enumerate() {
                if path.len() != horizon + 1 {
                    return Err(Error::Invalid(format!(
                        "outcome {:?}: asset {k} has {} prices, expected {}",
                        o.id,
                        path.len(),
                        horizon + 1
                    )));
                }
                for (t, text) in path.iter().enumerate() {
                    steps[t][w].push(parse_field(text, || format!("outcome {:?}: price of asset {k} at t={t}", o.id))?);
                }
            }
        }
        let prices = VecProcess::new(file.assets, steps)?;
        if !prices.is_adapted(space.filtration()) {
            return Err(Error::Invalid("prices are not adapted to the filtration".into()));
        }

        let claim = match &file.claim {
            None => None,
            Some(c) => {
                let class: ClaimClass = c.class.parse()?;
                let read = |rows: &Vec<Vec<String>>, name: &str| -> Result<Process> {
                    if rows.len() != n {
                        return Err(Error::Invalid(format!("claim {name} has {} rows, expected {n}", rows.len())));
                    }
                    let mut p = Process::zeros(horizon, n);
                    for (w, row) in rows.iter().enumerate() {
                        if row.len() != horizon + 1 {
                            return Err(Error::Invalid(format!(
                                "claim {name} for outcome {:?} has {} values, expected {}",
                                space.ids()[w],
                                row.len(),
                                horizon + 1
                            )));
                        }
                        for (t, text) in row.iter().enumerate() {
                            p.0[t].0[w] = parse_field(text, || format!("claim {name}[{}][{t}]", space.ids()[w]))?;
                        }
                    }
                    if !p.is_adapted(space.filtration()) {
                        return Err(Error::Invalid(format!("claim {name} is not adapted to the filtration")));
                    }
                    Ok(p)
                };
                Some(ClaimSpec { class, g: read(&c.g, "g")?, k: read(&c.k, "K")? })
            }
        };
        Ok(Model { space, tau, prices, claim })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_file(&ModelFile::from_text(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(&ModelFile::load(path)?)
    }

    pub fn to_file(&self) -> ModelFile {
        let ids = self.space.ids();
        let horizon = self.space.horizon();
        let outcomes = (0..self.space.outcomes())
            .map(|w| OutcomeEntry {
                id: ids[w].clone(),
                prob: fmt_q(self.space.prob().weight(w)),
                tau: match self.tau.0[w] {
                    Time::At(s) => TauEntry::Date(s),
                    Time::Never => TauEntry::Never("inf".into()),
                },
                prices: (0..self.prices.dim())
                    .map(|k| (0..=horizon).map(|t| fmt_q(&self.prices.at(t, w)[k])).collect())
                    .collect(),
            })
            .collect();
        let filtration = self
            .space
            .filtration()
            .iter()
            .map(|p| p.blocks().iter().map(|b| b.iter().map(|&w| ids[w].clone()).collect()).collect())
            .collect();
        let rows = |p: &Process| -> Vec<Vec<String>> {
            (0..self.space.outcomes()).map(|w| (0..=horizon).map(|t| fmt_q(&p.at(t).0[w])).collect()).collect()
        };
        let claim = self.claim.as_ref().map(|c| ClaimEntry {
            class: c.class.name().into(),
            g: rows(&c.g),
            k: rows(&c.k),
        });
        ModelFile { horizon, assets: self.prices.dim(), outcomes, filtration, claim }
    }

    pub fn to_text(&self) -> String {
        self.to_file().to_text()
    }

    pub fn market(&self) -> Result<HorizonMarket> {
        HorizonMarket::new(self.space.clone(), self.tau.clone(), &self.prices)
    }

    /// The claim kit of the attached claim, if any.
    pub fn kit(&self, hm: &HorizonMarket) -> Option<Result<ClaimKit>> {
        self.claim.as_ref().map(|c| ClaimKit::new(c.class, c.g.clone(), c.k.clone(), hm))
    }

    /// A claim process that is zero everywhere.
    pub fn zero_process(&self) -> Process {
        Process::zeros(self.space.horizon(), self.space.outcomes())
    }

    /// Terminal payoff `g_T` as a variable, when a claim is attached.
    pub fn terminal_g(&self) -> Option<RandVar> {
        self.claim.as_ref().map(|c| c.g.at(self.space.horizon()).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
  "horizon": 1,
  "assets": 1,
  "outcomes": [
    { "id": "a", "prob": "1/2", "tau": 1, "prices": [["1/2", "0"]] },
    { "id": "b", "prob": "2/4", "tau": "inf", "prices": [["1/2", "1"]] }
  ],
  "filtration": [[["b", "a"]], [["b"], ["a"]]]
}"#;

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let m = Model::from_text(SMALL).unwrap();
        let text = m.to_text();
        assert!(text.contains("\"1/2\""));
        assert!(!text.contains("2/4"));
        assert_eq!(Model::from_text(&text).unwrap().to_text(), text);
    }

    #[test]
    fn rejects_zero_denominator() {
        let bad = SMALL.replace("\"2/4\"", "\"1/0\"");
        let err = Model::from_text(&bad).unwrap_err().to_string();
        assert!(err.contains("\"b\"") && err.contains("prob"), "{err}");
    }

    #[test]
    fn names_blocks_that_do_not_refine() {
        let bad = SMALL.replace(r#"[[["b", "a"]], [["b"], ["a"]]]"#, r#"[[["a"], ["b"]], [["a", "b"]]]"#);
        let err = Model::from_text(&bad).unwrap_err().to_string();
        assert!(err.contains("{a,b}"), "{err}");
    }

    #[test]
    fn rejects_bad_tau_symbol() {
        let bad = SMALL.replace("\"inf\"", "\"never\"");
        assert!(matches!(Model::from_text(&bad), Err(Error::Parse(_))));
    }
}
