//! Index flips `delta_r`, signed maps `xi_r`, and coset transforms.

use thiserror::Error;

use crate::channel::{Channel, ChannelError, Output};
use crate::code::transform;
use crate::gf::{Field, FieldElement};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("index {index} out of range for length 2^{m}")]
    Index { index: usize, m: u32 },
    #[error("bit {r} out of range for m = {m}")]
    Bit { r: u32, m: u32 },
    #[error("vector has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

fn check_bit(m: u32, r: u32) -> Result<(), SymmetryError> {
    if r >= m {
        return Err(SymmetryError::Bit { r, m });
    }
    Ok(())
}

fn check_len(m: u32, len: usize) -> Result<(), SymmetryError> {
    if len != 1usize << m {
        return Err(SymmetryError::Length { expected: 1 << m, got: len });
    }
    Ok(())
}

/// `delta_r^(m)(i)`: `i` with bit `r` flipped.
pub fn delta(m: u32, r: u32, i: usize) -> Result<usize, SymmetryError> {
    check_bit(m, r)?;
    if i >> m != 0 {
        return Err(SymmetryError::Index { index: i, m });
    }
    Ok(i ^ (1 << r))
}

/// The coefficients `a_i` of `xi_r^(m)`: `-alpha` where bit `r` of `i` is 0, `-alpha^{-1}` otherwise.
pub fn xi_coefficients(field: &Field, m: u32, r: u32) -> Result<Vec<FieldElement>, SymmetryError> {
    check_bit(m, r)?;
    let neg_alpha = field.neg(field.alpha());
    let neg_alpha_inv = field.neg(field.inv(field.alpha()).expect("alpha is a unit"));
    Ok((0..1usize << m).map(|i| if (i >> r) & 1 == 0 { neg_alpha } else { neg_alpha_inv }).collect())
}

/// `xi_r^(m)(x)_i = a_i * x_{delta_r(i)}` on a field vector.
pub fn xi_apply_field(field: &Field, m: u32, r: u32, x: &[FieldElement]) -> Result<Vec<FieldElement>, SymmetryError> {
    check_len(m, x.len())?;
    let coeffs = xi_coefficients(field, m, r)?;
    Ok(coeffs.iter().enumerate().map(|(i, &a)| field.mul(a, x[i ^ (1 << r)])).collect())
}

/// `xi_r^(m)` on channel outputs: coordinate `i` becomes `pi_{a_i}(y_{delta_r(i)})`.
pub fn xi_apply_output(ch: &Channel, m: u32, r: u32, y: &[Output]) -> Result<Vec<Output>, SymmetryError> {
    check_len(m, y.len())?;
    let coeffs = xi_coefficients(ch.field(), m, r)?;
    coeffs.iter().enumerate().map(|(i, &a)| Ok(ch.scale(y[i ^ (1 << r)], a)?)).collect()
}

/// `xi_r^(m)` on a flat likelihood matrix: position `i` receives the vector
/// of `delta_r(i)` reindexed by `u -> a_i^{-1} u`, which is `T(a_i . y_{delta_r(i)})`.
pub fn xi_apply_likelihoods<T: Clone>(field: &Field, m: u32, r: u32, llh: &[T]) -> Result<Vec<T>, SymmetryError> {
    let q = field.order();
    check_len(m, llh.len() / q)?;
    let coeffs = xi_coefficients(field, m, r)?;
    let mut out = Vec::with_capacity(llh.len());
    for (i, &a) in coeffs.iter().enumerate() {
        let src = &llh[(i ^ (1 << r)) * q..][..q];
        let a_inv = field.inv(a).expect("coefficients are units");
        out.extend(field.elements().map(|u| src[field.mul(a_inv, u).index()].clone()));
    }
    Ok(out)
}

/// `(a . y + x^b, a . x + x^b)` with `x^b = b G_n`, acting per coordinate through
/// `sigma` and `pi` on outputs.
pub fn coset_transform(
    ch: &Channel,
    a: FieldElement,
    b: &[FieldElement],
    y: &[Output],
    x: &[FieldElement],
) -> Result<(Vec<Output>, Vec<FieldElement>), SymmetryError> {
    let field = ch.field();
    if a.is_zero() {
        return Err(SymmetryError::ZeroScale);
    }
    if y.len() != b.len() {
        return Err(SymmetryError::Length { expected: b.len(), got: y.len() });
    }
    if x.len() != b.len() {
        return Err(SymmetryError::Length { expected: b.len(), got: x.len() });
    }
    let mut xb = b.to_vec();
    transform(field, &mut xb);
    let y2 = y.iter().zip(&xb).map(|(&yi, &bi)| Ok(ch.shift(ch.scale(yi, a)?, bi)?)).collect::<Result<Vec<_>, SymmetryError>>()?;
    Ok((y2, affine(field, a, &xb, x)))
}

/// `a . x + c` coordinatewise.
pub fn affine(field: &Field, a: FieldElement, c: &[FieldElement], x: &[FieldElement]) -> Vec<FieldElement> {
    x.iter().zip(c).map(|(&xi, &ci)| field.add(field.mul(a, xi), ci)).collect()
}

/// `a . T + c` on a flat likelihood matrix: entry `u` of position `i` becomes
/// `T_i[a^{-1}(u - c_i)]`.
pub fn affine_likelihoods<T: Clone>(field: &Field, a: FieldElement, c: &[FieldElement], llh: &[T]) -> Result<Vec<T>, SymmetryError> {
    let q = field.order();
    if a.is_zero() {
        return Err(SymmetryError::ZeroScale);
    }
    if llh.len() != c.len() * q {
        return Err(SymmetryError::Length { expected: c.len() * q, got: llh.len() });
    }
    let a_inv = field.inv(a).expect("nonzero");
    let mut out = Vec::with_capacity(llh.len());
    for (i, &ci) in c.iter().enumerate() {
        let src = &llh[i * q..][..q];
        out.extend(field.elements().map(|u| src[field.mul(a_inv, field.sub(u, ci)).index()].clone()));
    }
    Ok(out)
}

/// Bit positions whose flips carry `j` to 0.
pub fn orbit_to_zero(j: usize, m: u32) -> Result<Vec<u32>, SymmetryError> {
    if j >> m != 0 {
        return Err(SymmetryError::Index { index: j, m });
    }
    Ok((0..m).filter(|&r| (j >> r) & 1 == 1).collect())
}
