//! F_q-symmetric memoryless channels.
//!
//! A channel `W: F_q -> Y` is F_q-symmetric when there are permutations
//! `sigma_b` (b in F_q) and `pi_a` (a in F_q^*) of `Y` with
//! `W[y|x] = W[sigma_{x'-x}(y)|x']` and `W[y|x] = W[pi_a(y)|a x]`.
//! Following the usual shorthand, [`Channel::shift`] is `y + b` and
//! [`Channel::scale`] is `a . y`.
//!
//! Finite channels carry an exact rational transition matrix; the `f64`
//! mirror used by the simulator is derived from it. The binary-input AWGN
//! channel is the only continuous-output model.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, FieldElement};
use crate::prob::{self, is_probability, parse_rational, Likelihood, ParseRationalError, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("probability {0} is outside [0, 1]")]
    BadProbability(String),
    #[error("transition matrix must have q = {q} rows, got {got}")]
    RowCount { q: usize, got: usize },
    #[error("row {row} has {got} entries, expected {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: String },
    #[error("channel is not F_q-symmetric: {0}")]
    NotSymmetric(SymmetryViolation),
    #[error("output symbol {y:?} does not belong to this channel")]
    ForeignOutput { y: Output },
    #[error("input symbol {0} does not belong to the input field")]
    ForeignInput(usize),
    #[error("scaling by zero is not a channel symmetry")]
    ZeroScale,
    #[error("the AWGN/BPSK channel is defined only over F_2")]
    AwgnNeedsBinary,
    #[error("noise standard deviation must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("operation requires a finite-output channel")]
    ContinuousOutput,
    #[error("channel config: {0}")]
    Config(String),
    #[error(transparent)]
    Rational(#[from] ParseRationalError),
}

/// A channel output: an index into a finite alphabet, or a real sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Output {
    Symbol(usize),
    Real(f64),
}

/// First identity that fails for a candidate permutation family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryViolation {
    /// `W[y|x] != W[sigma_b(y)|x+b]`.
    Shift { y: usize, x: usize, b: usize },
    /// `W[y|x] != W[pi_a(y)|a x]`.
    Scale { y: usize, x: usize, a: usize },
}

impl std::fmt::Display for SymmetryViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetryViolation::Shift { y, x, b } => write!(f, "shift identity fails at y={y}, x={x}, b={b}"),
            SymmetryViolation::Scale { y, x, a } => write!(f, "scale identity fails at y={y}, x={x}, a={a}"),
        }
    }
}

/// Exact transition matrix `rows[x][y]` of a finite channel over a field.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    pub field: Field,
    pub rows: Vec<Vec<Rational>>,
}

impl TransitionTable {
    pub fn new(field: Field, rows: Vec<Vec<Rational>>) -> Result<Self, ChannelError> {
        let q = field.order();
        if rows.len() != q {
            return Err(ChannelError::RowCount { q, got: rows.len() });
        }
        let width = rows[0].len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(ChannelError::RowLength { row, expected: width, got: r.len() });
            }
            if let Some(bad) = r.iter().find(|v| !is_probability(v)) {
                return Err(ChannelError::BadProbability(prob::format_rational(bad)));
            }
            let sum: Rational = r.iter().cloned().sum();
            if !sum.is_one() {
                return Err(ChannelError::RowSum { row, sum: prob::format_rational(&sum) });
            }
        }
        Ok(TransitionTable { field, rows })
    }

    pub fn output_count(&self) -> usize {
        self.rows[0].len()
    }

    /// Column `(W[y|x])_x`.
    pub fn column(&self, y: usize) -> Vec<Rational> {
        self.rows.iter().map(|r| r[y].clone()).collect()
    }
}

/// Explicit symmetry permutations: `sigma[b][y]` and `pi[a][y]` (with
/// `pi[0]` the identity placeholder).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub sigma: Vec<Vec<usize>>,
    pub pi: Vec<Vec<usize>>,
}

/// Checks a candidate permutation family against both defining identities.
pub fn check_permutations(table: &TransitionTable, perms: &SymmetryReport) -> Result<(), SymmetryViolation> {
    let f = &table.field;
    let ny = table.output_count();
    for b in f.elements() {
        for y in 0..ny {
            let image = perms.sigma[b.index()][y];
            for x in f.elements() {
                if table.rows[x.index()][y] != table.rows[f.add(x, b).index()][image] {
                    return Err(SymmetryViolation::Shift { y, x: x.index(), b: b.index() });
                }
            }
        }
    }
    for a in f.units() {
        for y in 0..ny {
            let image = perms.pi[a.index()][y];
            for x in f.elements() {
                if table.rows[x.index()][y] != table.rows[f.mul(a, x).index()][image] {
                    return Err(SymmetryViolation::Scale { y, x: x.index(), a: a.index() });
                }
            }
        }
    }
    Ok(())
}

/// Searches for permutations `sigma_b`, `pi_a` making the channel
/// F_q-symmetric, returning them, or a witness triple when none exists.
pub fn verify_symmetry(table: &TransitionTable) -> Result<SymmetryReport, SymmetryViolation> {
    let f = &table.field;
    let ny = table.output_count();
    let columns: Vec<Vec<Rational>> = (0..ny).map(|y| table.column(y)).collect();

    // output y must map to a column c with c[g(x)] = col_y[x] for all x
    let find_perm = |g: &dyn Fn(FieldElement) -> FieldElement| -> Result<Vec<usize>, (usize, usize)> {
        let mut pool: BTreeMap<&[Rational], Vec<usize>> = BTreeMap::new();
        for (y, c) in columns.iter().enumerate().rev() {
            pool.entry(c.as_slice()).or_default().push(y);
        }
        let mut perm = vec![0; ny];
        for y in 0..ny {
            let mut target = vec![Rational::zero(); f.order()];
            for x in f.elements() {
                target[g(x).index()] = columns[y][x.index()].clone();
            }
            match pool.get_mut(target.as_slice()).and_then(Vec::pop) {
                Some(image) => perm[y] = image,
                None => {
                    // witness: first input where the closest column disagrees
                    let best = columns.iter().max_by_key(|c| c.iter().zip(&target).filter(|(a, b)| a == b).count()).unwrap();
                    let x = f.elements().find(|&x| best[g(x).index()] != target[g(x).index()]).unwrap_or(FieldElement::ZERO);
                    return Err((y, x.index()));
                }
            }
        }
        Ok(perm)
    };

    let mut sigma = Vec::with_capacity(f.order());
    for b in f.elements() {
        let perm = find_perm(&|x| f.add(x, b)).map_err(|(y, x)| SymmetryViolation::Shift { y, x, b: b.index() })?;
        sigma.push(perm);
    }
    let mut pi = vec![(0..ny).collect::<Vec<_>>()];
    for a in f.units() {
        let perm = find_perm(&|x| f.mul(a, x)).map_err(|(y, x)| SymmetryViolation::Scale { y, x, a: a.index() })?;
        pi.push(perm);
    }
    let report = SymmetryReport { sigma, pi };
    debug_assert!(check_permutations(table, &report).is_ok());
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    /// Correct symbol w.p. `1 - eps`, each wrong symbol w.p. `eps / (q - 1)`.
    Qsc {
        epsilon: Rational,
    },
    /// Output alphabet `F_q` plus an erasure symbol (index `q`).
    Qec {
        epsilon: Rational,
    },
    /// BPSK `0 -> +1`, `1 -> -1` with additive Gaussian noise.
    AwgnBpsk {
        sigma: f64,
    },
    Table,
}

#[derive(Debug, Clone)]
struct Finite {
    table: TransitionTable,
    float_rows: Vec<Vec<f64>>,
    cdf: Vec<Vec<f64>>,
    perms: SymmetryReport,
}

/// A validated F_q-symmetric channel.
#[derive(Debug, Clone)]
pub struct Channel {
    field: Field,
    kind: ChannelKind,
    finite: Option<Finite>,
}

impl Channel {
    pub fn qsc(field: Field, epsilon: Rational) -> Result<Self, ChannelError> {
        check_prob(&epsilon)?;
        let q = field.order();
        let wrong = &epsilon / Rational::from_integer((q as i64 - 1).max(1).into());
        let rows = (0..q).map(|x| (0..q).map(|y| if x == y { Rational::one() - &epsilon } else { wrong.clone() }).collect()).collect();
        let table = TransitionTable::new(field.clone(), rows)?;
        let perms = additive_perms(&field, q);
        Self::finite(field, ChannelKind::Qsc { epsilon }, table, perms)
    }

    pub fn qec(field: Field, epsilon: Rational) -> Result<Self, ChannelError> {
        check_prob(&epsilon)?;
        let q = field.order();
        let rows = (0..q)
            .map(|x| {
                (0..=q)
                    .map(|y| match y {
                        _ if y == q => epsilon.clone(),
                        _ if y == x => Rational::one() - &epsilon,
                        _ => Rational::zero(),
                    })
                    .collect()
            })
            .collect();
        let table = TransitionTable::new(field.clone(), rows)?;
        let mut perms = additive_perms(&field, q);
        for p in perms.sigma.iter_mut().chain(perms.pi.iter_mut()) {
            p.push(q);
        }
        Self::finite(field, ChannelKind::Qec { epsilon }, table, perms)
    }

    /// General finite channel; the symmetry permutations are searched for and
    /// construction fails with a witness if none exist.
    pub fn from_table(field: Field, rows: Vec<Vec<Rational>>) -> Result<Self, ChannelError> {
        let table = TransitionTable::new(field.clone(), rows)?;
        let perms = verify_symmetry(&table).map_err(ChannelError::NotSymmetric)?;
        Self::finite(field, ChannelKind::Table, table, perms)
    }

    pub fn awgn_bpsk(sigma: f64) -> Result<Self, ChannelError> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ChannelError::BadSigma(sigma));
        }
        Ok(Channel { field: Field::binary(), kind: ChannelKind::AwgnBpsk { sigma }, finite: None })
    }

    /// Noise level for unit-energy BPSK at the given `Eb/N0` (dB) and code rate:
    /// `sigma^2 = 1 / (2 * rate * 10^(ebno/10))`.
    pub fn noise_variance(ebno_db: f64, rate: f64) -> f64 {
        1.0 / (2.0 * rate * 10f64.powf(ebno_db / 10.0))
    }

    fn finite(field: Field, kind: ChannelKind, table: TransitionTable, perms: SymmetryReport) -> Result<Self, ChannelError> {
        check_permutations(&table, &perms).map_err(ChannelError::NotSymmetric)?;
        let float_rows: Vec<Vec<f64>> = table.rows.iter().map(|r| r.iter().map(prob::rational_to_f64).collect()).collect();
        let cdf = float_rows
            .iter()
            .map(|r| {
                let mut acc = 0.0;
                r.iter()
                    .map(|&p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Channel { field, kind, finite: Some(Finite { table, float_rows, cdf, perms }) })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    pub fn is_finite(&self) -> bool {
        self.finite.is_some()
    }

    /// Size of the output alphabet, `None` for continuous outputs.
    pub fn output_count(&self) -> Option<usize> {
        self.finite.as_ref().map(|f| f.table.output_count())
    }

    pub fn table(&self) -> Option<&TransitionTable> {
        self.finite.as_ref().map(|f| &f.table)
    }

    pub fn permutations(&self) -> Option<&SymmetryReport> {
        self.finite.as_ref().map(|f| &f.perms)
    }

    fn symbol(&self, y: Output) -> Result<(usize, &Finite), ChannelError> {
        match (y, &self.finite) {
            (Output::Symbol(i), Some(fin)) if i < fin.table.output_count() => Ok((i, fin)),
            _ => Err(ChannelError::ForeignOutput { y }),
        }
    }

    fn awgn_sigma(&self) -> Option<f64> {
        match self.kind {
            ChannelKind::AwgnBpsk { sigma } => Some(sigma),
            _ => None,
        }
    }

    fn real(&self, y: Output) -> Result<(f64, f64), ChannelError> {
        match (y, self.awgn_sigma()) {
            (Output::Real(v), Some(sigma)) => Ok((v, sigma)),
            _ => Err(ChannelError::ForeignOutput { y }),
        }
    }

    fn input(&self, x: FieldElement) -> Result<FieldElement, ChannelError> {
        self.field.check(x).map_err(|_| ChannelError::ForeignInput(x.index()))
    }

    /// `W(y|x)` in floating point (a density for AWGN).
    pub fn transition(&self, y: Output, x: FieldElement) -> Result<f64, ChannelError> {
        let x = self.input(x)?;
        if self.finite.is_some() {
            let (i, fin) = self.symbol(y)?;
            return Ok(fin.float_rows[x.index()][i]);
        }
        let (v, sigma) = self.real(y)?;
        let mean = bpsk(x);
        Ok((-(v - mean).powi(2) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
    }

    /// Exact `W(y|x)`; finite channels only.
    pub fn transition_exact(&self, y: Output, x: FieldElement) -> Result<Rational, ChannelError> {
        let x = self.input(x)?;
        let (i, fin) = self.symbol(y)?;
        Ok(fin.table.rows[x.index()][i].clone())
    }

    /// `W^n(y|x) = prod_i W(y_i|x_i)`, exact.
    pub fn product_exact(&self, ys: &[Output], xs: &[FieldElement]) -> Result<Rational, ChannelError> {
        let mut acc = Rational::one();
        for (&y, &x) in ys.iter().zip(xs) {
            acc *= self.transition_exact(y, x)?;
            if acc.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    /// `y + b`, i.e. `sigma_b(y)`.
    pub fn shift(&self, y: Output, b: FieldElement) -> Result<Output, ChannelError> {
        let b = self.input(b)?;
        if self.finite.is_some() {
            let (i, fin) = self.symbol(y)?;
            return Ok(Output::Symbol(fin.perms.sigma[b.index()][i]));
        }
        let (v, _) = self.real(y)?;
        Ok(Output::Real(if b.is_zero() { v } else { -v }))
    }

    /// `a . y`, i.e. `pi_a(y)`, for `a != 0`.
    pub fn scale(&self, y: Output, a: FieldElement) -> Result<Output, ChannelError> {
        let a = self.input(a)?;
        if a.is_zero() {
            return Err(ChannelError::ZeroScale);
        }
        if self.finite.is_some() {
            let (i, fin) = self.symbol(y)?;
            return Ok(Output::Symbol(fin.perms.pi[a.index()][i]));
        }
        self.real(y)?;
        // F_2^* = {1}
        Ok(y)
    }

    /// `(W(y|u))_{u in F_q}` in the requested numeric domain. AWGN vectors are
    /// scaled so the larger entry is 1, which leaves every SC decision intact.
    pub fn likelihoods<T: Likelihood>(&self, y: Output) -> Result<Vec<T>, ChannelError> {
        if self.finite.is_some() {
            let (i, fin) = self.symbol(y)?;
            return Ok(match T::from_f64(0.0) {
                Some(_) => fin.float_rows.iter().map(|r| T::from_f64(r[i]).unwrap()).collect(),
                None => fin.table.rows.iter().map(|r| T::from_rational(&r[i])).collect(),
            });
        }
        let (v, sigma) = self.real(y)?;
        let r = (-2.0 * v.abs() / (sigma * sigma)).exp();
        let (l0, l1) = if v >= 0.0 { (1.0, r) } else { (r, 1.0) };
        match (T::from_f64(l0), T::from_f64(l1)) {
            (Some(a), Some(b)) => Ok(vec![a, b]),
            _ => Err(ChannelError::ContinuousOutput),
        }
    }

    /// Draws `y ~ W(.|x)`.
    pub fn sample<R: Rng + ?Sized>(&self, x: FieldElement, rng: &mut R) -> Output {
        if let Some(fin) = &self.finite {
            let cdf = &fin.cdf[x.index()];
            let u: f64 = rng.random();
            let y = cdf.iter().position(|&c| u < c).unwrap_or_else(|| {
                // rounding left the cdf short of 1: take the last reachable symbol
                fin.float_rows[x.index()].iter().rposition(|&p| p > 0.0).unwrap()
            });
            return Output::Symbol(y);
        }
        let sigma = self.awgn_sigma().expect("continuous channels are AWGN");
        let noise: f64 = rng.sample(StandardNormal);
        Output::Real(bpsk(x) + sigma * noise)
    }

    /// All outputs of a finite channel, in index order.
    pub fn outputs(&self) -> Result<impl Iterator<Item = Output>, ChannelError> {
        let ny = self.output_count().ok_or(ChannelError::ContinuousOutput)?;
        Ok((0..ny).map(Output::Symbol))
    }

    /// Re-runs the permutation search on this channel's own table.
    pub fn verify_symmetry(&self) -> Result<SymmetryReport, ChannelError> {
        let fin = self.finite.as_ref().ok_or(ChannelError::ContinuousOutput)?;
        verify_symmetry(&fin.table).map_err(ChannelError::NotSymmetric)
    }
}

fn bpsk(x: FieldElement) -> f64 {
    if x.is_zero() {
        1.0
    } else {
        -1.0
    }
}

fn check_prob(eps: &Rational) -> Result<(), ChannelError> {
    if is_probability(eps) {
        Ok(())
    } else {
        Err(ChannelError::BadProbability(prob::format_rational(eps)))
    }
}

/// `sigma_b(y) = y + b`, `pi_a(y) = a y` on the alphabet `F_q`.
fn additive_perms(field: &Field, q: usize) -> SymmetryReport {
    let sigma = field.elements().map(|b| field.elements().map(|y| field.add(y, b).index()).collect()).collect();
    let mut pi: Vec<Vec<usize>> = vec![(0..q).collect()];
    pi.extend(field.units().map(|a| field.elements().map(|y| field.mul(a, y).index()).collect()));
    SymmetryReport { sigma, pi }
}

/// JSON channel description:
/// `{"kind": "qsc"|"qec"|"awgn_bpsk"|"table", "epsilon": "1/10", "ebno_db": 2.0, "matrix": [["9/10", "1/10"], ...]}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ebno_db: Option<f64>,
    /// Code rate used in the `Eb/N0` conversion; defaults to the code's `k/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Direct noise standard deviation, overriding `ebno_db`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
}

impl ChannelConfig {
    pub fn build(&self, field: &Field, code_rate: f64) -> Result<Channel, ChannelError> {
        let eps = || -> Result<Rational, ChannelError> {
            let s = self.epsilon.as_deref().ok_or_else(|| ChannelError::Config("missing \"epsilon\"".into()))?;
            Ok(parse_rational(s)?)
        };
        match self.kind.as_str() {
            "qsc" => Channel::qsc(field.clone(), eps()?),
            "qec" => Channel::qec(field.clone(), eps()?),
            "awgn_bpsk" => {
                if field.order() != 2 {
                    return Err(ChannelError::AwgnNeedsBinary);
                }
                let sigma = match (self.sigma, self.ebno_db) {
                    (Some(s), _) => s,
                    (None, Some(db)) => Channel::noise_variance(db, self.rate.unwrap_or(code_rate)).sqrt(),
                    (None, None) => return Err(ChannelError::Config("awgn_bpsk needs \"ebno_db\" or \"sigma\"".into())),
                };
                Channel::awgn_bpsk(sigma)
            }
            "table" => {
                let m = self.matrix.as_ref().ok_or_else(|| ChannelError::Config("missing \"matrix\"".into()))?;
                let rows =
                    m.iter().map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()?;
                Channel::from_table(field.clone(), rows)
            }
            other => Err(ChannelError::Config(format!("unknown channel kind {other:?}"))),
        }
    }

    pub fn qsc(epsilon: &str) -> Self {
        ChannelConfig { kind: "qsc".into(), epsilon: Some(epsilon.into()), ..Default::default() }
    }

    pub fn qec(epsilon: &str) -> Self {
        ChannelConfig { kind: "qec".into(), epsilon: Some(epsilon.into()), ..Default::default() }
    }

    pub fn awgn(ebno_db: f64) -> Self {
        ChannelConfig { kind: "awgn_bpsk".into(), ebno_db: Some(ebno_db), ..Default::default() }
    }
}
