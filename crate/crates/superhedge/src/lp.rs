//! Exact rational linear programming for the hedging subproblems.
//!
//! A dense two-phase tableau simplex with Bland's rule. Entering and leaving
//! ties go to the lowest index, so every run is deterministic and terminates.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::ext::{Ext, Q};

/// Rows `(c_j, a_j)` of the problem `min_θ max_j (c_j - θ·a_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimaxInstance {
    rows: Vec<(Q, Vec<Q>)>,
    dim: usize,
}

impl MinimaxInstance {
    pub fn new(rows: Vec<(Q, Vec<Q>)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.1.len()).ok_or_else(|| Error::Domain("minimax without rows".into()))?;
        if rows.iter().any(|r| r.1.len() != dim) {
            return Err(Error::Domain("exposures of different dimensions".into()));
        }
        Ok(MinimaxInstance { rows, dim })
    }

    pub fn rows(&self) -> &[(Q, Vec<Q>)] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `max_j (c_j - θ·a_j)` at a given position.
    pub fn objective(&self, theta: &[Q]) -> Q {
        self.rows
            .iter()
            .map(|(c, a)| c - dot(theta, a))
            .max()
            .expect("instance has rows")
    }
}

/// Result of a minimax solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpOutcome {
    pub value: Ext,
    /// An optimal position when the value is finite.
    pub argmin: Option<Vec<Q>>,
    /// When the value is `-inf`: a direction with `θ*·a_j >= 1` for every row.
    pub certificate: Option<Vec<Q>>,
}

/// Result of the convex-hull membership test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HullOutcome {
    /// Convex weights reproducing the origin.
    Inside { weights: Vec<Q> },
    /// A vector `x` with `x·v <= -1` for every input vector.
    Outside { separator: Vec<Q> },
}

impl HullOutcome {
    pub fn contains_zero(&self) -> bool {
        matches!(self, HullOutcome::Inside { .. })
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `min_θ max_j (c_j - θ·a_j)` through the epigraph form
/// `min z` subject to `z + θ·a_j >= c_j`.
pub fn minimax(inst: &MinimaxInstance) -> LpOutcome {
    let d = inst.dim;
    let m = inst.rows.len();
    let n = 2 + 2 * d + m;
    // Columns: z+, z-, θ+ (d), θ- (d), surplus (m).
    let mut a = vec![vec![Q::zero(); n]; m];
    let mut b = Vec::with_capacity(m);
    for (j, (c, exp)) in inst.rows.iter().enumerate() {
        a[j][0] = Q::one();
        a[j][1] = -Q::one();
        for k in 0..d {
            a[j][2 + k] = exp[k].clone();
            a[j][2 + d + k] = -exp[k].clone();
        }
        a[j][2 + 2 * d + j] = -Q::one();
        b.push(c.clone());
    }
    let mut cost = vec![Q::zero(); n];
    cost[0] = Q::one();
    cost[1] = -Q::one();
    let split = |x: &[Q]| -> (Q, Vec<Q>) {
        let z = &x[0] - &x[1];
        let theta = (0..d).map(|k| &x[2 + k] - &x[2 + d + k]).collect();
        (z, theta)
    };
    match solve_standard(&a, &b, &cost) {
        Standard::Optimal { x } => {
            let (z, theta) = split(&x);
            let value = inst.objective(&theta);
            assert_eq!(value, z, "epigraph optimum disagrees with the direct objective");
            LpOutcome { value: Ext::Fin(value), argmin: Some(theta), certificate: None }
        }
        Standard::Unbounded { ray, .. } => {
            let (dz, dtheta) = split(&ray);
            assert!(dz.is_negative(), "unbounded ray must lower the epigraph variable");
            let worst = inst.rows.iter().map(|(_, a)| dot(&dtheta, a)).min().expect("rows");
            assert!(worst.is_positive(), "ray must be a strict separator");
            let cert: Vec<Q> = dtheta.iter().map(|x| x / &worst).collect();
            LpOutcome { value: Ext::NegInf, argmin: None, certificate: Some(cert) }
        }
        Standard::Infeasible { .. } => unreachable!("the epigraph problem is always feasible"),
    }
}

/// Decides whether the origin lies in the convex hull of `vectors`.
pub fn hull_contains_zero(vectors: &[Vec<Q>]) -> Result<HullOutcome> {
    let n = vectors.len();
    let d = vectors.first().map(|v| v.len()).ok_or_else(|| Error::Domain("empty vector list".into()))?;
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::Domain("vectors of different dimensions".into()));
    }
    let mut a = vec![vec![Q::one(); n]];
    for k in 0..d {
        a.push(vectors.iter().map(|v| v[k].clone()).collect());
    }
    let mut b = vec![Q::zero(); d + 1];
    b[0] = Q::one();
    match solve_standard(&a, &b, &vec![Q::zero(); n]) {
        Standard::Optimal { x } => Ok(HullOutcome::Inside { weights: x }),
        Standard::Infeasible { farkas } => {
            let x: Vec<Q> = farkas[1..].to_vec();
            let top = vectors.iter().map(|v| dot(&x, v)).max().expect("vectors");
            assert!(top.is_negative(), "Farkas vector must separate strictly");
            let scale = -top;
            Ok(HullOutcome::Outside { separator: x.iter().map(|v| v / &scale).collect() })
        }
        Standard::Unbounded { .. } => unreachable!("zero objective cannot be unbounded"),
    }
}

enum Standard {
    Optimal { x: Vec<Q> },
    Unbounded { ray: Vec<Q> },
    Infeasible { farkas: Vec<Q> },
}

struct Tableau {
    /// Row 0 holds reduced costs and minus the objective; rows 1.. are constraints.
    rows: Vec<Vec<Q>>,
    /// Basic column of each constraint row (index into `rows[1..]`).
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r - 1] = c;
    }

    /// Runs Bland's rule over columns `< limit`; returns the entering column of an unbounded ray.
    fn optimize(&mut self, limit: usize) -> Option<usize> {
        let rhs = self.rhs();
        loop {
            let entering = (0..limit).find(|&j| self.rows[0][j].is_negative())?;
            let mut best: Option<(Q, usize, usize)> = None;
            for r in 1..self.rows.len() {
                let coef = &self.rows[r][entering];
                if !coef.is_positive() {
                    continue;
                }
                let ratio = &self.rows[r][rhs] / coef;
                let var = self.basis[r - 1];
                let better = match &best {
                    None => true,
                    Some((q, _, v)) => ratio < *q || (ratio == *q && var < *v),
                };
                if better {
                    best = Some((ratio, r, var));
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, entering),
                None => return Some(entering),
            }
        }
    }
}

/// Minimizes `cost·x` subject to `a x = b`, `x >= 0`.
fn solve_standard(a: &[Vec<Q>], b: &[Q], cost: &[Q]) -> Standard {
    let m = a.len();
    let n = cost.len();
    let sign: Vec<Q> = b.iter().map(|v| if v.is_negative() { -Q::one() } else { Q::one() }).collect();
    // Phase 1 tableau with one artificial per row.
    let width = n + m + 1;
    let mut rows = vec![vec![Q::zero(); width]];
    for i in 0..m {
        let mut row = vec![Q::zero(); width];
        for j in 0..n {
            row[j] = &a[i][j] * &sign[i];
        }
        row[n + i] = Q::one();
        row[width - 1] = &b[i] * &sign[i];
        for j in 0..n {
            rows[0][j] -= &row[j];
        }
        rows[0][width - 1] -= &row[width - 1];
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis: (n..n + m).collect() };
    let ray = tab.optimize(n + m);
    debug_assert!(ray.is_none(), "phase one is bounded below by zero");
    let rhs = tab.rhs();
    let infeasibility = -tab.rows[0][rhs].clone();
    if infeasibility.is_positive() {
        let farkas = (0..m).map(|i| (Q::one() - &tab.rows[0][n + i]) * &sign[i]).collect();
        return Standard::Infeasible { farkas };
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 1;
    while r < tab.rows.len() {
        if tab.basis[r - 1] >= n {
            match (0..n).find(|&j| !tab.rows[r][j].is_zero()) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r - 1);
                }
            }
        } else {
            r += 1;
        }
    }
    // Phase 2: drop artificial columns and install the true costs.
    for row in tab.rows.iter_mut() {
        let last = row[rhs].clone();
        row.truncate(n);
        row.push(last);
    }
    let rhs = n;
    let mut obj = vec![Q::zero(); n + 1];
    obj[..n].clone_from_slice(cost);
    for (i, &bv) in tab.basis.iter().enumerate() {
        let cb = &cost[bv];
        if cb.is_zero() {
            continue;
        }
        for j in 0..=n {
            let v = &tab.rows[i + 1][j] * cb;
            obj[j] -= v;
        }
    }
    tab.rows[0] = obj;
    let primal = |tab: &Tableau| {
        let mut x = vec![Q::zero(); n];
        for (i, &bv) in tab.basis.iter().enumerate() {
            x[bv] = tab.rows[i + 1][rhs].clone();
        }
        x
    };
    match tab.optimize(n) {
        None => Standard::Optimal { x: primal(&tab) },
        Some(entering) => {
            let mut ray = vec![Q::zero(); n];
            ray[entering] = Q::one();
            for (i, &bv) in tab.basis.iter().enumerate() {
                ray[bv] = -tab.rows[i + 1][entering].clone();
            }
            Standard::Unbounded { ray }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::{frac, int};

    fn inst(rows: &[(Q, &[Q])]) -> MinimaxInstance {
        MinimaxInstance::new(rows.iter().map(|(c, a)| (c.clone(), a.to_vec())).collect()).unwrap()
    }

    #[test]
    fn binomial_hedge() {
        let out = minimax(&inst(&[(int(1), &[int(1)]), (int(0), &[frac(-1, 2)])]));
        assert_eq!(out.value, Ext::Fin(frac(1, 3)));
        assert_eq!(out.argmin, Some(vec![frac(2, 3)]));
    }

    #[test]
    fn symmetric_exposures() {
        let out = minimax(&inst(&[(int(0), &[int(1)]), (int(0), &[int(-1)])]));
        assert_eq!(out.value, Ext::zero());
        assert_eq!(out.argmin, Some(vec![int(0)]));
    }

    #[test]
    fn one_sided_exposures_are_unbounded() {
        let out = minimax(&inst(&[(int(0), &[int(1)]), (int(0), &[int(2)])]));
        assert_eq!(out.value, Ext::NegInf);
        assert_eq!(out.certificate, Some(vec![int(1)]));
    }

    #[test]
    fn hull_examples() {
        match hull_contains_zero(&[vec![int(1)], vec![int(-1)]]).unwrap() {
            HullOutcome::Inside { weights } => assert_eq!(weights, vec![frac(1, 2), frac(1, 2)]),
            other => panic!("{other:?}"),
        }
        match hull_contains_zero(&[vec![int(1)], vec![int(2)]]).unwrap() {
            HullOutcome::Outside { separator } => assert_eq!(separator, vec![int(-1)]),
            other => panic!("{other:?}"),
        }
        match hull_contains_zero(&[vec![int(0)]]).unwrap() {
            HullOutcome::Inside { weights } => assert_eq!(weights, vec![int(1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_rows_are_dropped() {
        // Two identical coordinates make the equality system rank deficient.
        let v = vec![vec![int(1), int(1)], vec![int(-2), int(-2)]];
        match hull_contains_zero(&v).unwrap() {
            HullOutcome::Inside { weights } => assert_eq!(weights, vec![frac(2, 3), frac(1, 3)]),
            other => panic!("{other:?}"),
        }
    }
}
