//! Arithmetic in `F_q = F_{p^s}` for `q <= 256`.
//!
//! Elements are stored as a single byte holding the polynomial-basis
//! coordinates packed in base `p` (`index = c_0 + c_1 p + ... + c_{s-1} p^{s-1}`).
//! A [`Field`] owns precomputed addition/multiplication tables and the
//! designated kernel coefficient `alpha`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order p^s exceeds {MAX_ORDER}")]
    TooLarge,
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("coefficient {value} is not a residue mod {p}")]
    Coefficient { value: u32, p: u32 },
    #[error("modulus is reducible over F_{p}")]
    Reducible { p: u32 },
    #[error("alpha must be nonzero")]
    ZeroAlpha,
    #[error("alpha lies in a proper subfield: F_p(alpha) != F_q")]
    AlphaInSubfield,
    #[error("element index {index} does not belong to a field of order {q}")]
    ForeignElement { index: usize, q: usize },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
}

/// Serializable description of a field: `{"p", "s", "modulus", "alpha"}`.
///
/// `modulus` lists the `s` low-order coefficients of the monic modulus,
/// constant term first; the leading 1 is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub s: u32,
    pub modulus: Vec<u32>,
    pub alpha: Vec<u32>,
}

impl FieldSpec {
    /// Shipped representation for `q` in {2,3,4,5,7,8,9,16}; any other prime
    /// power up to 256 gets the first irreducible modulus in coefficient order.
    /// `alpha` is `1` for prime fields and `x` otherwise.
    pub fn default_for(q: u32) -> Result<Self, FieldError> {
        let (p, s) = prime_power(q).ok_or(FieldError::NotPrimePower(q))?;
        if q > MAX_ORDER {
            return Err(FieldError::TooLarge);
        }
        let modulus = match q {
            4 => vec![1, 1],
            8 => vec![1, 1, 0],
            9 => vec![1, 0],
            16 => vec![1, 1, 0, 0],
            _ if s == 1 => vec![0],
            _ => first_irreducible(p, s as usize),
        };
        let mut alpha = vec![0; s as usize];
        if s == 1 {
            alpha[0] = 1;
        } else {
            alpha[1] = 1;
        }
        Ok(FieldSpec { p, s, modulus, alpha })
    }

    pub fn order(&self) -> u32 {
        self.p.pow(self.s)
    }

    fn check_shape(&self) -> Result<(), FieldError> {
        if !is_prime(self.p) {
            return Err(FieldError::NotPrime(self.p));
        }
        if self.s == 0 {
            return Err(FieldError::ZeroDegree);
        }
        if (self.p as u64).checked_pow(self.s).is_none_or(|q| q > MAX_ORDER as u64) {
            return Err(FieldError::TooLarge);
        }
        for v in [&self.modulus, &self.alpha] {
            if v.len() != self.s as usize {
                return Err(FieldError::CoefficientCount { expected: self.s as usize, got: v.len() });
            }
            if let Some(&value) = v.iter().find(|&&c| c >= self.p) {
                return Err(FieldError::Coefficient { value, p: self.p });
            }
        }
        Ok(())
    }

    /// True iff the modulus (with its implicit leading 1) is irreducible over `F_p`.
    pub fn modulus_is_irreducible(&self) -> bool {
        let mut f = self.modulus.clone();
        f.push(1);
        is_irreducible(&f, self.p)
    }

    /// True iff `{1, alpha, ..., alpha^(s-1)}` is linearly independent over
    /// `F_p`, i.e. the minimal polynomial of `alpha` has degree `s` and
    /// `F_p(alpha) = F_q`. Assumes a well-formed spec.
    pub fn validate_alpha(&self) -> bool {
        let s = self.s as usize;
        let p = self.p;
        let mut rows = Vec::with_capacity(s);
        let mut power = vec![0u32; s];
        power[0] = 1;
        for _ in 0..s {
            rows.push(power.clone());
            power = poly_mulmod(&power, &self.alpha, &self.modulus, p);
        }
        rank_mod_p(rows, p) == s
    }
}

/// A field element, stored as its packed coordinate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(pub u8);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

struct Tables {
    spec: FieldSpec,
    q: usize,
    alpha: FieldElement,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

/// A validated finite field with its kernel coefficient. Cheap to clone.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.t, &other.t) || self.t.spec == other.t.spec
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("q", &self.t.q).field("modulus", &self.t.spec.modulus).field("alpha", &self.t.spec.alpha).finish()
    }
}

impl Field {
    /// Builds the field, rejecting composite `p`, reducible moduli, and any
    /// `alpha` that is zero or lies in a proper subfield.
    pub fn new(spec: FieldSpec) -> Result<Self, FieldError> {
        spec.check_shape()?;
        if !spec.modulus_is_irreducible() {
            return Err(FieldError::Reducible { p: spec.p });
        }
        if spec.alpha.iter().all(|&c| c == 0) {
            return Err(FieldError::ZeroAlpha);
        }
        if !spec.validate_alpha() {
            return Err(FieldError::AlphaInSubfield);
        }
        Ok(Self::build(spec))
    }

    pub fn default_for(q: u32) -> Result<Self, FieldError> {
        Self::new(FieldSpec::default_for(q)?)
    }

    /// `F_2` with `alpha = 1`.
    pub fn binary() -> Self {
        Self::default_for(2).expect("F_2 is always constructible")
    }

    fn build(spec: FieldSpec) -> Self {
        let p = spec.p;
        let s = spec.s as usize;
        let q = spec.order() as usize;
        let coords: Vec<Vec<u32>> = (0..q).map(|i| unpack(i, p, s)).collect();

        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                let sum: Vec<u32> = coords[a].iter().zip(&coords[b]).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = pack(&sum, p) as u8;
                let prod = poly_mulmod(&coords[a], &coords[b], &spec.modulus, p);
                mul[a * q + b] = pack(&prod, p) as u8;
            }
        }
        let mut neg = vec![0u8; q];
        let mut inv = vec![0u8; q];
        for a in 0..q {
            neg[a] = (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u8;
            if a != 0 {
                inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as u8;
            }
        }
        let alpha = FieldElement(pack(&spec.alpha, p) as u8);
        Field { t: Arc::new(Tables { spec, q, alpha, add, mul, neg, inv }) }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.t.spec
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.t.q
    }

    pub fn characteristic(&self) -> u32 {
        self.t.spec.p
    }

    pub fn degree(&self) -> u32 {
        self.t.spec.s
    }

    /// The kernel coefficient.
    #[inline]
    pub fn alpha(&self) -> FieldElement {
        self.t.alpha
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    /// All elements in index order `a_0 = 0, a_1 = 1, ...`.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (0..self.t.q).map(|i| FieldElement(i as u8))
    }

    /// Nonzero elements.
    pub fn units(&self) -> impl Iterator<Item = FieldElement> + Clone {
        (1..self.t.q).map(|i| FieldElement(i as u8))
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        a.index() < self.t.q
    }

    pub fn check(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if self.contains(a) {
            Ok(a)
        } else {
            Err(FieldError::ForeignElement { index: a.index(), q: self.t.q })
        }
    }

    pub fn from_index(&self, index: usize) -> Result<FieldElement, FieldError> {
        if index < self.t.q {
            Ok(FieldElement(index as u8))
        } else {
            Err(FieldError::ForeignElement { index, q: self.t.q })
        }
    }

    /// Element from polynomial-basis coordinates (constant term first).
    pub fn element(&self, coeffs: &[u32]) -> Result<FieldElement, FieldError> {
        let s = self.t.spec.s as usize;
        let p = self.t.spec.p;
        if coeffs.len() != s {
            return Err(FieldError::CoefficientCount { expected: s, got: coeffs.len() });
        }
        if let Some(&value) = coeffs.iter().find(|&&c| c >= p) {
            return Err(FieldError::Coefficient { value, p });
        }
        Ok(FieldElement(pack(coeffs, p) as u8))
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u32> {
        unpack(a.index(), self.t.spec.p, self.t.spec.s as usize)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.t.add[a.index() * self.t.q + b.index()])
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.t.mul[a.index() * self.t.q + b.index()])
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.t.neg[a.index()])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        self.check(a)?;
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        Ok(FieldElement(self.t.inv[a.index()]))
    }

    pub fn try_add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.add(self.check(a)?, self.check(b)?))
    }

    pub fn try_mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(self.check(a)?, self.check(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u32) -> FieldElement {
        let mut base = a;
        let mut acc = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }
}

fn unpack(mut index: usize, p: u32, s: usize) -> Vec<u32> {
    let mut out = vec![0; s];
    for c in out.iter_mut() {
        *c = (index % p as usize) as u32;
        index /= p as usize;
    }
    out
}

fn pack(coeffs: &[u32], p: u32) -> usize {
    coeffs.iter().rev().fold(0usize, |acc, &c| acc * p as usize + c as usize)
}

/// `a * b mod (x^s + modulus)` with `a`, `b` given as `s` coordinates.
fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    let s = modulus.len();
    let mut prod = vec![0u32; 2 * s];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    // x^s = -modulus(x)
    for d in (s..2 * s).rev() {
        let c = prod[d];
        if c == 0 {
            continue;
        }
        prod[d] = 0;
        for (k, &m) in modulus.iter().enumerate() {
            let sub = c * m % p;
            prod[d - s + k] = (prod[d - s + k] + p - sub) % p;
        }
    }
    prod.truncate(s);
    prod
}

fn rank_mod_p(mut rows: Vec<Vec<u32>>, p: u32) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let inv = inv_mod(rows[rank][col], p);
        for c in rows[rank].iter_mut() {
            *c = *c * inv % p;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                    *v = (*v + p * p - f * pv) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn inv_mod(a: u32, p: u32) -> u32 {
    (1..p).find(|&b| a * b % p == 1).expect("nonzero residue mod a prime is invertible")
}

/// Remainder of `f` modulo monic `g`; both given low degree first.
fn poly_rem(f: &[u32], g: &[u32], p: u32) -> Vec<u32> {
    let mut r = f.to_vec();
    let dg = g.len() - 1;
    while r.len() > dg {
        let lead = r[r.len() - 1];
        let shift = r.len() - 1 - dg;
        for (k, &gc) in g.iter().enumerate() {
            r[shift + k] = (r[shift + k] + p * p - lead * gc) % p;
        }
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    for d in 1..=deg / 2 {
        for idx in 0..(p as usize).pow(d as u32) {
            let mut g = unpack(idx, p, d);
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn first_irreducible(p: u32, s: usize) -> Vec<u32> {
    (0..(p as usize).pow(s as u32))
        .map(|idx| unpack(idx, p, s))
        .find(|m| {
            let mut f = m.clone();
            f.push(1);
            is_irreducible(&f, p)
        })
        .expect("an irreducible polynomial exists in every degree")
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut s = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        s += 1;
    }
    (rest == 1).then_some((p, s))
}
