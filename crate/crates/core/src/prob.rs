//! Numeric domains for likelihoods: exact rationals for the oracle path and
//! `f64` for simulation.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Relative tolerance under which two floating likelihoods count as tied.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed rational {0:?}: expected \"num/den\" or an integer")]
pub struct ParseRationalError(pub String);

/// Parses `"num/den"` or a bare integer.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err())?;
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// `"num/den"` in lowest terms; denominators are always written, so `1` is `"1/1"`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // ratios of huge integers: fall back to scaled division
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Serde adapter writing rationals as `"num/den"` strings.
pub mod serde_rational {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for r in v {
                seq.serialize_element(&format_rational(r))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter().map(|s| parse_rational(s).map_err(D::Error::custom)).collect()
        }
    }
}

/// A nonnegative likelihood value the SC decoder can operate on.
pub trait Likelihood: Clone + fmt::Debug + Send + Sync + PartialOrd + Zero + One + Add<Output = Self> + Mul<Output = Self> {
    /// The `1/q` factor when the domain carries normalization constants.
    fn inv_order(q: usize) -> Option<Self>;

    fn from_rational(r: &Rational) -> Self;

    /// `None` for domains that cannot hold an arbitrary real.
    fn from_f64(x: f64) -> Option<Self>;

    /// Indices whose value ties the maximum. Exact domains ignore `rel_tol`.
    fn maximizers(v: &[Self], rel_tol: f64, out: &mut Vec<usize>);

    /// Rescales so the largest entry is 1; a no-op in exact mode.
    fn renormalize(_v: &mut [Self]) {}
}

impl Likelihood for f64 {
    fn inv_order(_q: usize) -> Option<Self> {
        None
    }

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn from_f64(x: f64) -> Option<Self> {
        Some(x)
    }

    fn maximizers(v: &[Self], rel_tol: f64, out: &mut Vec<usize>) {
        out.clear();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let floor = max - rel_tol * max.abs();
        out.extend(v.iter().enumerate().filter(|(_, &x)| x >= floor).map(|(i, _)| i));
    }

    fn renormalize(v: &mut [Self]) {
        let max = v.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max.is_finite() {
            let inv = 1.0 / max;
            v.iter_mut().for_each(|x| *x *= inv);
        }
    }
}

impl Likelihood for Rational {
    fn inv_order(q: usize) -> Option<Self> {
        Some(ratio(1, q as i64))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_f64(_x: f64) -> Option<Self> {
        None
    }

    fn maximizers(v: &[Self], _rel_tol: f64, out: &mut Vec<usize>) {
        out.clear();
        let Some(max) = v.iter().max() else { return };
        out.extend(v.iter().enumerate().filter(|(_, x)| *x == max).map(|(i, _)| i));
    }
}

pub(crate) fn is_probability(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}
