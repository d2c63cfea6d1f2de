//! Finite filtered probability spaces and the conditional calculus on them.
//!
//! Sigma-algebras are generated by partitions of a finite outcome set, so a
//! conditional essential supremum reduces to a maximum per block taken over
//! the outcomes that carry positive mass.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ext::{neg_part, pos, Ext, Q};

/// A partition of the outcomes `0..n` into nonempty disjoint blocks.
///
/// Blocks are stored sorted internally and ordered by their smallest outcome,
/// so two partitions with the same blocks compare equal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; n];
        for b in blocks.iter_mut() {
            if b.is_empty() {
                return Err(Error::Invalid("partition contains an empty block".into()));
            }
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        for (i, b) in blocks.iter().enumerate() {
            for &w in b {
                if w >= n {
                    return Err(Error::Invalid(format!("outcome index {w} out of range")));
                }
                if block_of[w] != usize::MAX {
                    return Err(Error::Invalid(format!("outcome {w} lies in two blocks")));
                }
                block_of[w] = i;
            }
        }
        if let Some(w) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::Invalid(format!("outcome {w} is not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    /// The one-block partition.
    pub fn trivial(n: usize) -> Self {
        Partition { blocks: vec![(0..n).collect()], block_of: vec![0; n] }
    }

    /// The partition into singletons.
    pub fn discrete(n: usize) -> Self {
        Partition { blocks: (0..n).map(|w| vec![w]).collect(), block_of: (0..n).collect() }
    }

    /// Splits every block of `self` according to the value of `label`.
    pub fn split_by<L: PartialEq>(&self, label: impl Fn(usize) -> L) -> Self {
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let mut groups: Vec<(L, Vec<usize>)> = Vec::new();
            for &w in b {
                let l = label(w);
                match groups.iter_mut().find(|(g, _)| *g == l) {
                    Some((_, v)) => v.push(w),
                    None => groups.push((l, vec![w])),
                }
            }
            blocks.extend(groups.into_iter().map(|(_, v)| v));
        }
        Partition::new(self.block_of.len(), blocks).expect("a split of a partition is a partition")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }

    pub fn block_of(&self, w: usize) -> usize {
        self.block_of[w]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn outcomes(&self) -> usize {
        self.block_of.len()
    }

    /// True when every block of `self` lies inside one block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.offending_block(coarser).is_none()
    }

    /// A block of `self` that straddles two blocks of `coarser`, if any.
    pub fn offending_block(&self, coarser: &Partition) -> Option<&[usize]> {
        self.blocks
            .iter()
            .find(|b| b.iter().any(|&w| coarser.block_of(w) != coarser.block_of(b[0])))
            .map(|b| b.as_slice())
    }

    /// True when `values` is constant on every block.
    pub fn measures<T: PartialEq>(&self, values: &[T]) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|&w| values[w] == values[b[0]]))
    }
}

/// Outcome weights, optionally remembering a density against a base measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    weights: Vec<Q>,
    density: Option<Vec<Q>>,
}

impl Measure {
    /// A probability measure with strictly positive weights.
    pub fn base(weights: Vec<Q>) -> Result<Self> {
        if let Some(w) = weights.iter().position(|p| !p.is_positive()) {
            return Err(Error::Invalid(format!("outcome {w} has non-positive probability")));
        }
        let total: Q = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Measure { weights, density: None })
    }

    /// The measure `z * base`, where `z >= 0` must integrate to one.
    pub fn with_density(base: &Measure, z: &RandVar) -> Result<Self> {
        if z.len() != base.len() {
            return Err(Error::Domain("density length mismatch".into()));
        }
        if z.0.iter().any(|v| v.is_negative()) {
            return Err(Error::Domain("negative density".into()));
        }
        let weights: Vec<Q> = z.0.iter().zip(&base.weights).map(|(a, b)| a * b).collect();
        let total: Q = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::Domain(format!("density integrates to {total}, not 1")));
        }
        Ok(Measure { weights, density: Some(z.0.clone()) })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, w: usize) -> &Q {
        &self.weights[w]
    }

    pub fn weights(&self) -> &[Q] {
        &self.weights
    }

    pub fn density(&self) -> Option<&[Q]> {
        self.density.as_deref()
    }

    pub fn charges(&self, w: usize) -> bool {
        self.weights[w].is_positive()
    }

    pub fn mass(&self, outcomes: &[usize]) -> Q {
        outcomes.iter().map(|&w| &self.weights[w]).sum()
    }

    /// Expectation of a finite variable.
    pub fn expect(&self, x: &RandVar) -> Q {
        x.0.iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }
}

/// A finite outcome set with a base probability and a filtration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilteredSpace {
    ids: Vec<String>,
    prob: Measure,
    filtration: Vec<Partition>,
}

impl FilteredSpace {
    /// Validates coverage, positivity and the refinement order.
    pub fn new(ids: Vec<String>, prob: Measure, filtration: Vec<Partition>) -> Result<Self> {
        let n = ids.len();
        if n == 0 {
            return Err(Error::Invalid("empty outcome set".into()));
        }
        if prob.len() != n {
            return Err(Error::Invalid("probability vector length mismatch".into()));
        }
        if filtration.is_empty() {
            return Err(Error::Invalid("filtration needs at least one partition".into()));
        }
        for (t, p) in filtration.iter().enumerate() {
            if p.outcomes() != n {
                return Err(Error::Invalid(format!("partition at t={t} has wrong size")));
            }
        }
        for t in 1..filtration.len() {
            if let Some(b) = filtration[t].offending_block(&filtration[t - 1]) {
                let names: Vec<&str> = b.iter().map(|&w| ids[w].as_str()).collect();
                return Err(Error::Invalid(format!(
                    "block {{{}}} at t={t} does not lie inside a block at t={}",
                    names.join(","),
                    t - 1
                )));
            }
        }
        Ok(FilteredSpace { ids, prob, filtration })
    }

    pub fn outcomes(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn horizon(&self) -> usize {
        self.filtration.len() - 1
    }

    pub fn prob(&self) -> &Measure {
        &self.prob
    }

    pub fn filtration(&self) -> &[Partition] {
        &self.filtration
    }

    pub fn at(&self, t: usize) -> &Partition {
        &self.filtration[t]
    }

    /// Human-readable name of a set of outcomes, e.g. `{a,b}`.
    pub fn block_name(&self, outcomes: &[usize]) -> String {
        let names: Vec<&str> = outcomes.iter().map(|&w| self.ids[w].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }
}

/// A finite rational random variable, one value per outcome.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RandVar(pub Vec<Q>);

impl RandVar {
    pub fn constant(n: usize, c: Q) -> Self {
        RandVar(vec![c; n])
    }

    pub fn zeros(n: usize) -> Self {
        RandVar(vec![Q::zero(); n])
    }

    /// The indicator of the outcomes where `event` is true.
    pub fn indicator(event: &[bool]) -> Self {
        RandVar(event.iter().map(|&e| if e { Q::one() } else { Q::zero() }).collect())
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> Q) -> Self {
        RandVar((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Q) -> Q) -> Self {
        RandVar(self.0.iter().map(f).collect())
    }

    pub fn zip_with(&self, other: &RandVar, f: impl Fn(&Q, &Q) -> Q) -> Self {
        assert_eq!(self.len(), other.len(), "random variables of different lengths");
        RandVar(self.0.iter().zip(&other.0).map(|(a, b)| f(a, b)).collect())
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|x| x * c)
    }

    pub fn pos(&self) -> Self {
        self.map(pos)
    }

    pub fn neg_part(&self) -> Self {
        self.map(neg_part)
    }

    /// Multiplies by the indicator of `event`.
    pub fn on(&self, event: &[bool]) -> Self {
        RandVar(
            self.0.iter().zip(event).map(|(x, &e)| if e { x.clone() } else { Q::zero() }).collect(),
        )
    }

    pub fn is_nonneg(&self) -> bool {
        self.0.iter().all(|x| !x.is_negative())
    }

    pub fn max_with(&self, other: &RandVar) -> Self {
        self.zip_with(other, |a, b| a.max(b).clone())
    }

    pub fn to_ext(&self) -> ExtVar {
        ExtVar(self.0.iter().map(Ext::from).collect())
    }

    /// Outcome-wise test `self(w) > 0`.
    pub fn positive(&self) -> Vec<bool> {
        self.0.iter().map(|x| x.is_positive()).collect()
    }

    /// Outcome-wise test `self(w) == 0`.
    pub fn zero_set(&self) -> Vec<bool> {
        self.0.iter().map(|x| x.is_zero()).collect()
    }

    /// Outcome-wise test `self(w) == 1`.
    pub fn one_set(&self) -> Vec<bool> {
        self.0.iter().map(|x| x.is_one()).collect()
    }
}

impl Add for &RandVar {
    type Output = RandVar;
    fn add(self, rhs: &RandVar) -> RandVar {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &RandVar {
    type Output = RandVar;
    fn sub(self, rhs: &RandVar) -> RandVar {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &RandVar {
    type Output = RandVar;
    fn mul(self, rhs: &RandVar) -> RandVar {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &RandVar {
    type Output = RandVar;
    fn neg(self) -> RandVar {
        self.map(|x| -x.clone())
    }
}

/// A random variable with extended-rational values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtVar(pub Vec<Ext>);

impl ExtVar {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The finite version, or a domain error when some value is infinite.
    pub fn to_finite(&self) -> Result<RandVar> {
        self.0.iter().map(|x| x.expect_finite().cloned()).collect::<Result<Vec<_>>>().map(RandVar)
    }

    pub fn neg(&self) -> ExtVar {
        ExtVar(self.0.iter().map(Ext::neg).collect())
    }
}

/// Read access to per-outcome extended values, shared by both variable kinds.
pub trait Values {
    fn len(&self) -> usize;
    fn value(&self, w: usize) -> Ext;
}

impl Values for RandVar {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn value(&self, w: usize) -> Ext {
        Ext::Fin(self.0[w].clone())
    }
}

impl Values for ExtVar {
    fn len(&self) -> usize {
        self.0.len()
    }
    fn value(&self, w: usize) -> Ext {
        self.0[w].clone()
    }
}

/// A conditional quantity that is undefined on null blocks of its measure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedVar {
    values: Vec<Ext>,
    defined: Vec<bool>,
}

impl MaskedVar {
    pub fn new(values: Vec<Ext>, defined: Vec<bool>) -> Self {
        assert_eq!(values.len(), defined.len());
        MaskedVar { values, defined }
    }

    /// A fully defined variable.
    pub fn total(values: ExtVar) -> Self {
        let n = values.len();
        MaskedVar { values: values.0, defined: vec![true; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The value at `w`, or `None` on a null block.
    pub fn get(&self, w: usize) -> Option<&Ext> {
        self.defined[w].then(|| &self.values[w])
    }

    pub fn is_defined(&self, w: usize) -> bool {
        self.defined[w]
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }

    /// Values with null entries replaced by `fill`.
    pub fn or_fill(&self, fill: Ext) -> ExtVar {
        ExtVar(
            self.values
                .iter()
                .zip(&self.defined)
                .map(|(v, &d)| if d { v.clone() } else { fill.clone() })
                .collect(),
        )
    }

    /// Finite values with null entries set to zero; errors on a defined infinity.
    pub fn finite_or_zero(&self) -> Result<RandVar> {
        self.or_fill(Ext::zero()).to_finite()
    }
}

/// Conditional expectation together with its definedness mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expectation {
    pub value: RandVar,
    pub defined: Vec<bool>,
}

/// `E_mu[x | part]`: the mu-weighted block mean, zero with a cleared mask on null blocks.
pub fn cond_expect(x: &RandVar, part: &Partition, mu: &Measure) -> Expectation {
    let n = x.len();
    let mut value = vec![Q::zero(); n];
    let mut defined = vec![false; n];
    for b in part.blocks() {
        let mass = mu.mass(b);
        if mass.is_zero() {
            continue;
        }
        let mean: Q = b.iter().map(|&w| mu.weight(w) * &x.0[w]).sum::<Q>() / mass;
        for &w in b {
            value[w] = mean.clone();
            defined[w] = true;
        }
    }
    Expectation { value: RandVar(value), defined }
}

/// Conditional expectation of an extended variable; infinite values are a domain error.
pub fn cond_expect_ext(x: &ExtVar, part: &Partition, mu: &Measure) -> Result<Expectation> {
    Ok(cond_expect(&x.to_finite()?, part, mu))
}

/// `mu(event | part)` per outcome.
pub fn cond_prob(event: &[bool], part: &Partition, mu: &Measure) -> Expectation {
    cond_expect(&RandVar::indicator(event), part, mu)
}

/// Conditional essential supremum of a finite family: per block, the maximum
/// over family members and mu-charged outcomes of the block.
pub fn cond_esssup<V: Values>(family: &[V], part: &Partition, mu: &Measure) -> Result<MaskedVar> {
    block_extreme(family, part, mu, "supremum", |a, b| a.max(b))
}

/// Conditional essential infimum: per block, the minimum over family members
/// and mu-charged outcomes of the block.
pub fn cond_essinf<V: Values>(family: &[V], part: &Partition, mu: &Measure) -> Result<MaskedVar> {
    block_extreme(family, part, mu, "infimum", |a, b| a.min(b))
}

fn block_extreme<V: Values>(
    family: &[V],
    part: &Partition,
    mu: &Measure,
    what: &str,
    pick: impl Fn(Ext, Ext) -> Ext,
) -> Result<MaskedVar> {
    if family.is_empty() {
        return Err(Error::Domain(format!("essential {what} of an empty family")));
    }
    let n = part.outcomes();
    if family.iter().any(|v| v.len() != n) || mu.len() != n {
        return Err(Error::Domain(format!("length mismatch in essential {what}")));
    }
    let mut values = vec![Ext::zero(); n];
    let mut defined = vec![false; n];
    for b in part.blocks() {
        let best = b
            .iter()
            .filter(|&&w| mu.charges(w))
            .flat_map(|&w| family.iter().map(move |v| v.value(w)))
            .reduce(&pick);
        if let Some(best) = best {
            for &w in b {
                values[w] = best.clone();
                defined[w] = true;
            }
        }
    }
    Ok(MaskedVar { values, defined })
}

/// Index of the earliest partition in `filtration` that measures `values`.
pub fn measurability_index<T: PartialEq>(values: &[T], filtration: &[Partition]) -> Option<usize> {
    filtration.iter().position(|p| p.measures(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};

    fn uniform(n: usize) -> Measure {
        Measure::base(vec![frac(1, n as i64); n]).unwrap()
    }

    fn rv(xs: &[i64]) -> RandVar {
        RandVar(xs.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn block_mean() {
        let part = Partition::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let e = cond_expect(&rv(&[1, 2, 3, 4]), &part, &uniform(4));
        assert_eq!(e.value, RandVar(vec![frac(3, 2), frac(3, 2), frac(7, 2), frac(7, 2)]));
        assert!(e.defined.iter().all(|&d| d));
    }

    #[test]
    fn esssup_examples() {
        let one = Partition::trivial(3);
        let s = cond_esssup(&[rv(&[1, 2, 3])], &one, &uniform(3)).unwrap();
        assert!((0..3).all(|w| s.get(w) == Some(&Ext::Fin(int(3)))));

        let x = rv(&[1, -1]);
        let s = cond_esssup(&[x.clone(), -&x], &Partition::discrete(2), &uniform(2)).unwrap();
        assert_eq!(s.get(0), Some(&Ext::Fin(int(1))));
        assert_eq!(s.get(1), Some(&Ext::Fin(int(1))));

        let base = uniform(2);
        let q = Measure::with_density(&base, &rv(&[0, 2])).unwrap();
        let s = cond_esssup(&[rv(&[5, 0])], &Partition::trivial(2), &q).unwrap();
        assert_eq!(s.get(0), Some(&Ext::zero()));
    }

    #[test]
    fn null_block_is_masked() {
        let base = uniform(2);
        let q = Measure::with_density(&base, &rv(&[0, 2])).unwrap();
        let s = cond_esssup(&[rv(&[5, 0])], &Partition::discrete(2), &q).unwrap();
        assert_eq!(s.get(0), None);
        assert_eq!(s.get(1), Some(&Ext::zero()));
        let e = cond_expect(&rv(&[5, 0]), &Partition::discrete(2), &q);
        assert_eq!(e.defined, vec![false, true]);
    }

    #[test]
    fn empty_family_is_rejected() {
        let fam: Vec<RandVar> = Vec::new();
        assert!(cond_esssup(&fam, &Partition::trivial(1), &uniform(1)).is_err());
    }

    #[test]
    fn essinf_of_indicator() {
        let part = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let ind = RandVar::indicator(&[true, false, true]);
        let inf = cond_essinf(&[ind], &part, &uniform(3)).unwrap();
        assert_eq!(inf.get(0), Some(&Ext::zero()));
        assert_eq!(inf.get(2), Some(&Ext::Fin(int(1))));
        let one = cond_essinf(&[rv(&[1, 2, 3])], &Partition::trivial(3), &uniform(3)).unwrap();
        assert_eq!(one.get(1), Some(&Ext::Fin(int(1))));
    }

    #[test]
    fn refinement_is_checked() {
        let ids: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let f0 = Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let f1 = Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap();
        let err = FilteredSpace::new(ids, uniform(3), vec![f0, f1]).unwrap_err();
        assert!(err.to_string().contains("{b,c}"), "{err}");
    }

    #[test]
    fn measurability_reports_first_partition() {
        let f = vec![Partition::trivial(3), Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap()];
        assert_eq!(measurability_index(&[1, 1, 2], &f), Some(1));
        assert_eq!(measurability_index(&[1, 2, 2], &f), None);
        assert_eq!(measurability_index(&[4, 4, 4], &f), Some(0));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(Measure::base(vec![frac(1, 2), frac(1, 3)]).is_err());
        assert!(Measure::base(vec![int(1), int(0)]).is_err());
    }
}
