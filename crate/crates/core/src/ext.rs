//! Extended real numbers `ℝ ∪ {+∞, −∞}`.
//!
//! Addition is totalized with the lower convention: `(+∞) + (−∞) = +∞`.
//! This is the convention under which infimum formulas stay sound, e.g.
//! `inf { φ(x, y) + δ(y) }` never picks up a spurious `−∞` from an
//! infeasible point.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Serialize, Serializer};

#[derive(Clone, Copy, Debug)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities to the corresponding infinite element.
    ///
    /// Panics on NaN, which has no place in `ℝ̄`.
    pub fn new(v: f64) -> Self {
        Self::try_new(v).expect("NaN is not an extended real")
    }

    pub fn try_new(v: f64) -> Option<Self> {
        if v.is_nan() {
            None
        } else if v == f64::INFINITY {
            Some(ExtReal::PosInf)
        } else if v == f64::NEG_INFINITY {
            Some(ExtReal::NegInf)
        } else {
            Some(ExtReal::Finite(v))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_pos_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, ExtReal::NegInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// `c · self` with `0 · (±∞) = 0`.
    pub fn scale(self, c: f64) -> Self {
        assert!(!c.is_nan(), "NaN scale factor");
        match self {
            ExtReal::Finite(v) => ExtReal::new(c * v),
            _ if c == 0.0 => ExtReal::ZERO,
            ExtReal::PosInf if c > 0.0 => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::NegInf if c > 0.0 => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// `|self − other|` when both are finite, `0` when both are the same
    /// infinity, `+∞` otherwise.
    pub fn distance(self, other: Self) -> f64 {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (ExtReal::PosInf, ExtReal::PosInf) | (ExtReal::NegInf, ExtReal::NegInf) => 0.0,
            _ => f64::INFINITY,
        }
    }

    fn rank(self) -> u8 {
        match self {
            ExtReal::NegInf => 0,
            ExtReal::Finite(_) => 1,
            ExtReal::PosInf => 2,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::new(v)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::new(a + b),
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::new(rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

/// `a − b := a + (−b)`, so `(+∞) − (+∞) = +∞`.
impl Sub for ExtReal {
    type Output = ExtReal;

    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                // -0.0 and 0.0 compare equal
                a.partial_cmp(b).expect("finite extended reals are never NaN")
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            // `+ 0.0` folds −0 into 0.
            ExtReal::Finite(v) => write!(f, "{}", v + 0.0),
        }
    }
}

/// Finite values serialize as JSON numbers, infinities as `"+inf"`/`"-inf"`.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(v + 0.0),
            ExtReal::PosInf => serializer.serialize_str("+inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

/// Infimum of a possibly empty sequence; `inf ∅ = +∞`.
pub fn inf<I: IntoIterator<Item = ExtReal>>(values: I) -> ExtReal {
    values.into_iter().fold(ExtReal::PosInf, ExtReal::min)
}

/// Supremum of a possibly empty sequence; `sup ∅ = −∞`.
pub fn sup<I: IntoIterator<Item = ExtReal>>(values: I) -> ExtReal {
    values.into_iter().fold(ExtReal::NegInf, ExtReal::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> [ExtReal; 3] {
        [ExtReal::NegInf, ExtReal::Finite(3.0), ExtReal::PosInf]
    }

    #[test]
    fn addition_table() {
        assert_eq!(ExtReal::from(3.0) + ExtReal::PosInf, ExtReal::PosInf);
        assert_eq!(ExtReal::from(3.0) + ExtReal::NegInf, ExtReal::NegInf);
        assert_eq!(ExtReal::PosInf + ExtReal::NegInf, ExtReal::PosInf);
        assert_eq!(ExtReal::NegInf + ExtReal::PosInf, ExtReal::PosInf);
        assert_eq!(ExtReal::from(1.5) + ExtReal::from(2.0), ExtReal::from(3.5));
    }

    #[test]
    fn addition_is_commutative_and_associative_on_sign_classes() {
        for a in classes() {
            for b in classes() {
                assert_eq!(a + b, b + a);
                for c in classes() {
                    assert_eq!((a + b) + c, a + (b + c), "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::NegInf.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.scale(-2.0), ExtReal::NegInf);
        assert_eq!(ExtReal::from(2.0).scale(0.5), ExtReal::from(1.0));
    }

    #[test]
    fn empty_inf_and_sup() {
        assert_eq!(inf(std::iter::empty()), ExtReal::PosInf);
        assert_eq!(sup(std::iter::empty()), ExtReal::NegInf);
        assert_eq!(inf([ExtReal::from(2.0), ExtReal::from(-1.0)]), ExtReal::from(-1.0));
    }

    #[test]
    fn ordering() {
        assert!(ExtReal::NegInf < ExtReal::from(-1e300));
        assert!(ExtReal::from(1e300) < ExtReal::PosInf);
        assert_eq!(ExtReal::from(0.0), ExtReal::from(-0.0));
    }

    #[test]
    fn nan_is_rejected() {
        assert!(ExtReal::try_new(f64::NAN).is_none());
        assert_eq!(ExtReal::try_new(f64::INFINITY), Some(ExtReal::PosInf));
    }
}
