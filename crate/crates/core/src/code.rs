//! Polar code parameters, the transform `G_n = [[1,0],[alpha,1]]^{(x)m}`, and
//! the bitwise domination order on indices.
//!
//! Index `i` has binary expansion `b_{m-1}(i) ... b_0(i)`; the encoder's
//! recursion splits on the most significant bit, so the "lo" half holds the
//! indices below `n/2`. No bit-reversal permutation is applied.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, FieldElement, FieldError, FieldSpec};

/// Largest `n` for which [`kron_matrix`] materializes `G_n`.
pub const KRON_MATRIX_CAP: usize = 1 << 12;
/// Largest supported `m`.
pub const MAX_LOG_LENGTH: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("m = {0} exceeds the supported maximum {MAX_LOG_LENGTH}")]
    LengthTooLarge(u32),
    #[error("index {index} is outside [0, {n})")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("k = {k} exceeds n = {n}")]
    DimensionTooLarge { k: usize, n: usize },
    #[error("declared k = {declared} but the information set has {actual} indices")]
    DimensionMismatch { declared: usize, actual: usize },
    #[error("expected {expected} frozen values, got {got}")]
    FrozenCount { expected: usize, got: usize },
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("frozen position {index} carries {got}, expected {expected}")]
    FrozenMismatch { index: usize, expected: FieldElement, got: FieldElement },
    #[error("n = {0} is above the explicit-matrix cap {KRON_MATRIX_CAP}")]
    MatrixTooLarge(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// An index in `[0, 2^m)` viewed through its binary expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitIndex(pub usize);

impl BitIndex {
    /// `b_r(i)`.
    pub fn bit(self, r: u32) -> u8 {
        ((self.0 >> r) & 1) as u8
    }

    /// `(b_{m-1}, ..., b_0)`.
    pub fn bits(self, m: u32) -> Vec<u8> {
        (0..m).rev().map(|r| self.bit(r)).collect()
    }

    /// `self ⪰ other`: every bit set in `other` is set in `self`.
    pub fn dominates(self, other: BitIndex) -> bool {
        self.0 & other.0 == other.0
    }
}

pub fn dominates(i: usize, j: usize) -> bool {
    BitIndex(i).dominates(BitIndex(j))
}

/// A failure of upward closure: `member` is in the set, `dominator ⪰ member`,
/// and `dominator` is missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureWitness {
    pub member: usize,
    pub dominator: usize,
}

impl std::fmt::Display for ClosureWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} is in A and {} ⪰ {} but {} is not in A", self.member, self.dominator, self.member, self.dominator)
    }
}

/// Checks that `info` is closed upward under `⪰`. Only single-bit
/// successors need checking; the first missing one (by member, then bit) is
/// returned as the witness.
pub fn check_condition_a(info: &[usize], m: u32) -> Result<(), ClosureWitness> {
    let n = 1usize << m;
    let mut member = vec![false; n];
    for &i in info {
        member[i] = true;
    }
    let mut sorted: Vec<usize> = info.to_vec();
    sorted.sort_unstable();
    for j in sorted {
        for r in 0..m {
            let i = j | (1 << r);
            if i != j && !member[i] {
                return Err(ClosureWitness { member: j, dominator: i });
            }
        }
    }
    Ok(())
}

/// Smallest superset of `info` closed upward under `⪰`, sorted.
pub fn closure(info: &[usize], m: u32) -> Vec<usize> {
    let n = 1usize << m;
    let mut member = vec![false; n];
    for &i in info {
        member[i] = true;
    }
    // ascending order: every single-bit successor is larger, so one pass suffices
    for j in 0..n {
        if member[j] {
            for r in 0..m {
                member[j | (1 << r)] = true;
            }
        }
    }
    (0..n).filter(|&i| member[i]).collect()
}

/// Every upward-closed subset of `[0, 2^m)`, enumerated by brute force.
pub fn decreasing_sets(m: u32) -> Vec<Vec<usize>> {
    let n = 1usize << m;
    assert!(n <= 16, "enumeration over 2^n subsets");
    (0u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|a| check_condition_a(a, m).is_ok())
        .collect()
}

/// `x = u G_n` in place.
pub fn transform(field: &Field, x: &mut [FieldElement]) {
    butterfly(field, x, field.alpha());
}

/// `u = x G_n^{-1}` in place, using the kernel inverse `[[1,0],[-alpha,1]]`.
pub fn inverse_transform(field: &Field, x: &mut [FieldElement]) {
    butterfly(field, x, field.neg(field.alpha()));
}

fn butterfly(field: &Field, x: &mut [FieldElement], coef: FieldElement) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a = field.add(*a, field.mul(coef, b));
            }
        }
        h *= 2;
    }
}

/// Explicit `G_n` as a row-major matrix.
pub fn kron_matrix(field: &Field, m: u32) -> Result<Vec<Vec<FieldElement>>, CodeError> {
    let n = 1usize << m;
    if n > KRON_MATRIX_CAP {
        return Err(CodeError::MatrixTooLarge(n));
    }
    let kernel = [[FieldElement::ONE, FieldElement::ZERO], [field.alpha(), FieldElement::ONE]];
    let mut g = vec![vec![FieldElement::ONE]];
    for _ in 0..m {
        let size = g.len();
        let mut next = vec![vec![FieldElement::ZERO; 2 * size]; 2 * size];
        for (bi, krow) in kernel.iter().enumerate() {
            for (bj, &k) in krow.iter().enumerate() {
                for i in 0..size {
                    for j in 0..size {
                        next[bi * size + i][bj * size + j] = field.mul(k, g[i][j]);
                    }
                }
            }
        }
        g = next;
    }
    Ok(g)
}

/// Row vector times matrix over the field.
pub fn vec_mat(field: &Field, u: &[FieldElement], g: &[Vec<FieldElement>]) -> Vec<FieldElement> {
    let n = g.first().map_or(0, Vec::len);
    let mut x = vec![FieldElement::ZERO; n];
    for (ui, row) in u.iter().zip(g) {
        if ui.is_zero() {
            continue;
        }
        for (xj, &gij) in x.iter_mut().zip(row) {
            *xj = field.add(*xj, field.mul(*ui, gij));
        }
    }
    x
}

/// `Polar(n, k, A, u_frozen)` over a field.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    field: Field,
    m: u32,
    info_set: Vec<usize>,
    is_info: Vec<bool>,
    /// Value at every index; zero on information positions.
    frozen: Vec<FieldElement>,
    decreasing: bool,
}

impl CodeSpec {
    /// `frozen_values` lists the `n - k` frozen symbols in increasing index
    /// order; `None` means the all-zero frozen vector.
    pub fn new(field: Field, m: u32, info_set: &[usize], frozen_values: Option<&[FieldElement]>) -> Result<Self, CodeError> {
        if m > MAX_LOG_LENGTH {
            return Err(CodeError::LengthTooLarge(m));
        }
        let n = 1usize << m;
        let mut info: Vec<usize> = info_set.to_vec();
        info.sort_unstable();
        info.dedup();
        if let Some(&index) = info.iter().find(|&&i| i >= n) {
            return Err(CodeError::IndexOutOfRange { index, n });
        }
        let mut is_info = vec![false; n];
        for &i in &info {
            is_info[i] = true;
        }
        let frozen_positions: Vec<usize> = (0..n).filter(|&i| !is_info[i]).collect();
        let mut frozen = vec![FieldElement::ZERO; n];
        if let Some(vals) = frozen_values {
            if vals.len() != frozen_positions.len() {
                return Err(CodeError::FrozenCount { expected: frozen_positions.len(), got: vals.len() });
            }
            for (&i, &v) in frozen_positions.iter().zip(vals) {
                frozen[i] = field.check(v)?;
            }
        }
        let decreasing = check_condition_a(&info, m).is_ok();
        Ok(CodeSpec { field, m, info_set: info, is_info, frozen, decreasing })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        1 << self.m
    }

    pub fn k(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_info(&self, i: usize) -> bool {
        self.is_info[i]
    }

    pub fn info_mask(&self) -> &[bool] {
        &self.is_info
    }

    pub fn frozen_positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&i| !self.is_info[i])
    }

    /// The `n - k` frozen values in index order.
    pub fn frozen_values(&self) -> Vec<FieldElement> {
        self.frozen_positions().map(|i| self.frozen[i]).collect()
    }

    /// Length-`n` vector holding frozen values and zeros at information positions.
    pub fn frozen_vector(&self) -> &[FieldElement] {
        &self.frozen
    }

    pub fn has_zero_frozen(&self) -> bool {
        self.frozen.iter().all(|v| v.is_zero())
    }

    /// Whether the information set satisfies the upward-closure condition.
    pub fn is_decreasing(&self) -> bool {
        self.decreasing
    }

    pub fn closure_witness(&self) -> Result<(), ClosureWitness> {
        check_condition_a(&self.info_set, self.m)
    }

    /// Same code with different frozen values.
    pub fn with_frozen(&self, frozen_values: &[FieldElement]) -> Result<Self, CodeError> {
        Self::new(self.field.clone(), self.m, &self.info_set, Some(frozen_values))
    }

    /// Same information set with all-zero frozen symbols.
    pub fn with_zero_frozen(&self) -> Self {
        let mut c = self.clone();
        c.frozen.iter_mut().for_each(|v| *v = FieldElement::ZERO);
        c
    }

    /// Full message vector from the information symbols (in `A` order).
    pub fn message(&self, info: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if info.len() != self.k() {
            return Err(CodeError::Length { expected: self.k(), got: info.len() });
        }
        let mut u = self.frozen.clone();
        for (&i, &v) in self.info_set.iter().zip(info) {
            u[i] = self.field.check(v)?;
        }
        Ok(u)
    }

    /// `x = u G_n` for a full message vector; frozen positions are not checked.
    pub fn encode(&self, u: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if u.len() != self.n() {
            return Err(CodeError::Length { expected: self.n(), got: u.len() });
        }
        let mut x: Vec<FieldElement> = u.iter().map(|&v| self.field.check(v)).collect::<Result<_, _>>()?;
        transform(&self.field, &mut x);
        Ok(x)
    }

    /// [`encode`](Self::encode), first requiring `u` to agree with the frozen values.
    pub fn encode_checked(&self, u: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        if u.len() != self.n() {
            return Err(CodeError::Length { expected: self.n(), got: u.len() });
        }
        for index in self.frozen_positions() {
            if u[index] != self.frozen[index] {
                return Err(CodeError::FrozenMismatch { index, expected: self.frozen[index], got: u[index] });
            }
        }
        self.encode(u)
    }

    pub fn kron_matrix(&self) -> Result<Vec<Vec<FieldElement>>, CodeError> {
        kron_matrix(&self.field, self.m)
    }

    /// Every codeword `u G_n` with `u_{A^c}` the frozen values, enumerated in
    /// lexicographic order of the information symbols.
    pub fn codewords(&self) -> impl Iterator<Item = Vec<FieldElement>> + '_ {
        let q = self.field.order();
        let k = self.k();
        let total = q.checked_pow(k as u32).expect("q^k overflows");
        (0..total).map(move |mut idx| {
            let mut info = vec![FieldElement::ZERO; k];
            for v in info.iter_mut().rev() {
                *v = FieldElement((idx % q) as u8);
                idx /= q;
            }
            let u = self.message(&info).expect("well-formed message");
            self.encode(&u).expect("well-formed message")
        })
    }

    pub fn to_config(&self) -> CodeConfig {
        CodeConfig {
            field: Some(self.field.spec().clone()),
            m: self.m,
            k: self.k(),
            info_set: self.info_set.clone(),
            frozen_values: Some(self.frozen_values().iter().map(|&v| self.field.coeffs(v)).collect()),
        }
    }
}

/// JSON code description:
/// `{"field": {...}, "m": 2, "k": 1, "info_set": [3], "frozen_values": [[0],[0],[0]]}`.
/// `field` defaults to `F_2` and `frozen_values` to all-zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub m: u32,
    pub k: usize,
    pub info_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_values: Option<Vec<Vec<u32>>>,
}

impl CodeConfig {
    pub fn build(&self) -> Result<CodeSpec, CodeError> {
        let field = match &self.field {
            Some(spec) => Field::new(spec.clone())?,
            None => Field::binary(),
        };
        let n = 1usize.checked_shl(self.m).filter(|_| self.m <= MAX_LOG_LENGTH).ok_or(CodeError::LengthTooLarge(self.m))?;
        if self.k > n {
            return Err(CodeError::DimensionTooLarge { k: self.k, n });
        }
        let frozen = match &self.frozen_values {
            Some(v) => Some(v.iter().map(|c| field.element(c)).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        let code = CodeSpec::new(field, self.m, &self.info_set, frozen.as_deref())?;
        if code.k() != self.k {
            return Err(CodeError::DimensionMismatch { declared: self.k, actual: code.k() });
        }
        Ok(code)
    }
}
