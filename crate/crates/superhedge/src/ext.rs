//! Exact rationals extended with two infinities.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Shorthand for the arbitrary-precision rational used everywhere.
pub type Q = BigRational;

/// Builds the integer `n` as a rational.
pub fn int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Builds `p/q` as a rational. Panics on a zero denominator.
pub fn frac(p: i64, q: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"` or `"p"` into a rational, rejecting zero denominators.
pub fn parse_q(text: &str) -> Result<Q> {
    let t = text.trim();
    if let Some((_, den)) = t.split_once('/') {
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("malformed rational {text:?}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
    }
    Q::from_str(t).map_err(|_| Error::Parse(format!("malformed rational {text:?}")))
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Positive part `max(x, 0)`.
pub fn pos(x: &Q) -> Q {
    if x.is_positive() {
        x.clone()
    } else {
        Q::zero()
    }
}

/// Negative part `max(-x, 0)`.
pub fn neg_part(x: &Q) -> Q {
    if x.is_negative() {
        -x.clone()
    } else {
        Q::zero()
    }
}

/// A rational number or one of the two infinities, totally ordered.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ext {
    NegInf,
    Fin(Q),
    PosInf,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Fin(Q::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Ext::Fin(q) => Some(q),
            _ => None,
        }
    }

    /// The finite value, or a domain error for an infinity.
    pub fn expect_finite(&self) -> Result<&Q> {
        self.finite()
            .ok_or_else(|| Error::Domain(format!("expected a finite value, found {self}")))
    }

    /// Sum of two extended values; opposite infinities are rejected.
    pub fn try_add(&self, other: &Ext) -> Result<Ext> {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ok(Ext::Fin(a + b)),
            (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => {
                Err(Error::Domain("sum of opposite infinities".into()))
            }
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ok(Ext::NegInf),
            _ => Ok(Ext::PosInf),
        }
    }

    /// Product with a finite scalar, where `0 * (±inf) = 0` (indicator semantics).
    pub fn scale(&self, c: &Q) -> Ext {
        match self {
            Ext::Fin(a) => Ext::Fin(a * c),
            _ if c.is_zero() => Ext::zero(),
            Ext::NegInf if c.is_positive() => Ext::NegInf,
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf if c.is_positive() => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
        }
    }

    pub fn neg(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(q) => Ext::Fin(-q.clone()),
        }
    }

    pub fn pos_part(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::zero(),
            Ext::PosInf => Ext::PosInf,
            Ext::Fin(q) => Ext::Fin(pos(q)),
        }
    }

    pub fn neg_part(&self) -> Ext {
        self.neg().pos_part()
    }

    pub fn is_negative(&self) -> bool {
        *self < Ext::zero()
    }

    pub fn is_positive(&self) -> bool {
        *self > Ext::zero()
    }
}

impl From<Q> for Ext {
    fn from(q: Q) -> Self {
        Ext::Fin(q)
    }
}

impl From<&Q> for Ext {
    fn from(q: &Q) -> Self {
        Ext::Fin(q.clone())
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => a.cmp(b),
            (Ext::NegInf, Ext::NegInf) | (Ext::PosInf, Ext::PosInf) => Ordering::Equal,
            (Ext::NegInf, _) | (_, Ext::PosInf) => Ordering::Less,
            (Ext::PosInf, _) | (_, Ext::NegInf) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => f.write_str("-inf"),
            Ext::PosInf => f.write_str("inf"),
            Ext::Fin(q) => f.write_str(&fmt_q(q)),
        }
    }
}

impl FromStr for Ext {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" => Ok(Ext::NegInf),
            "inf" | "+inf" => Ok(Ext::PosInf),
            other => parse_q(other).map(Ext::Fin),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_places_infinities_at_the_ends() {
        let mut v = vec![Ext::PosInf, Ext::Fin(frac(1, 3)), Ext::NegInf, Ext::Fin(int(-2))];
        v.sort();
        assert_eq!(v, vec![Ext::NegInf, Ext::Fin(int(-2)), Ext::Fin(frac(1, 3)), Ext::PosInf]);
    }

    #[test]
    fn opposite_infinities_do_not_add() {
        assert!(Ext::NegInf.try_add(&Ext::PosInf).is_err());
        assert_eq!(Ext::NegInf.try_add(&Ext::Fin(int(4))).unwrap(), Ext::NegInf);
    }

    #[test]
    fn text_round_trip() {
        for s in ["1/3", "-7", "0", "-inf", "inf", "-5/12"] {
            assert_eq!(s.parse::<Ext>().unwrap().to_string(), s);
        }
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert_eq!(fmt_q(&parse_q("2/4").unwrap()), "1/2");
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(Ext::NegInf.scale(&Q::zero()), Ext::zero());
        assert_eq!(Ext::NegInf.scale(&int(-1)), Ext::PosInf);
    }
}
