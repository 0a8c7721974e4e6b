//! Successive-cancellation decoding.
//!
//! Two interchangeable forms are provided:
//!
//! * [`ScDecoder`] passes length-`q` likelihood vectors down the encoder's
//!   recursion. The lo half of a node sees the check combination
//!   `W^-(y_0,y_1|u) = 1/q sum_{u_1} W(y_0|u + alpha u_1) W(y_1|u_1)` of
//!   pairs `(y_i, y_{i+n/2})`; the hi half sees the variable combination
//!   `W^+(y_0,y_1,u_0|u) = 1/q W(y_0|u_0 + alpha u) W(y_1|u)` given the
//!   re-encoded lo-half estimate.
//! * [`DefinitionalDecoder`] evaluates each synthetic channel `W_i^(n)` by
//!   summing `W^n(y | u G_n)` over all completions `u_{i+1..n-1}`.
//!
//! Exact ties among maximizers are resolved by a [`TieBreaker`]. With
//! [`RandomTies`] every maximizer has mass `1/s`, and successive ties are
//! independent draws; [`enumerate_ties`] walks every branch to produce the
//! exact output distribution.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::channel::{Channel, ChannelError, Output, SymmetryReport, TransitionTable};
use crate::code::{transform, CodeSpec};
use crate::gf::{Field, FieldElement};
use crate::prob::{format_rational, ratio, Likelihood, Rational, DEFAULT_TIE_TOLERANCE};

/// Largest `n` accepted by the definitional form and exact distributions.
pub const DEFINITIONAL_CAP: usize = 16;
/// Largest number of completions the definitional form will sum.
pub const COMPLETION_CAP: usize = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScError {
    #[error("received {got} outputs for a length-{expected} code")]
    Length { expected: usize, got: usize },
    #[error("prefix has length {got}, expected {expected}")]
    Prefix { expected: usize, got: usize },
    #[error("n = {0} exceeds the enumeration cap {DEFINITIONAL_CAP}")]
    TooLarge(usize),
    #[error("channel and code use different fields")]
    FieldMismatch,
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// `W^-` message: `c * sum_{u_1} t0[u + alpha u_1] t1[u_1]`, `c = 1/q` when carried.
pub fn combine_minus<T: Likelihood>(field: &Field, t0: &[T], t1: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); field.order()];
    minus_into(field, t0, t1, &mut out);
    out
}

/// `W^+` message: `c * t0[u_0 + alpha u] t1[u]`.
pub fn combine_plus<T: Likelihood>(field: &Field, t0: &[T], t1: &[T], u0: FieldElement) -> Vec<T> {
    let mut out = vec![T::zero(); field.order()];
    plus_into(field, t0, t1, u0, &mut out);
    out
}

fn minus_into<T: Likelihood>(field: &Field, t0: &[T], t1: &[T], out: &mut [T]) {
    let alpha = field.alpha();
    for u in field.elements() {
        let mut acc = T::zero();
        for u1 in field.elements() {
            let idx = field.add(u, field.mul(alpha, u1)).index();
            acc = acc + t0[idx].clone() * t1[u1.index()].clone();
        }
        out[u.index()] = acc;
    }
    if let Some(c) = T::inv_order(field.order()) {
        out.iter_mut().for_each(|v| *v = v.clone() * c.clone());
    }
}

fn plus_into<T: Likelihood>(field: &Field, t0: &[T], t1: &[T], u0: FieldElement, out: &mut [T]) {
    let alpha = field.alpha();
    let c = T::inv_order(field.order());
    for u in field.elements() {
        let idx = field.add(u0, field.mul(alpha, u)).index();
        let v = t0[idx].clone() * t1[u.index()].clone();
        out[u.index()] = match &c {
            Some(c) => v * c.clone(),
            None => v,
        };
    }
}

/// Resolves a tie among maximizing input symbols.
pub trait TieBreaker {
    /// `maximizers` holds element indices in increasing order, length >= 1.
    /// Returns the chosen element index.
    fn pick(&mut self, position: usize, maximizers: &[usize]) -> usize;
}

/// Always the smallest maximizer.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lexicographic;

impl TieBreaker for Lexicographic {
    fn pick(&mut self, _position: usize, maximizers: &[usize]) -> usize {
        maximizers[0]
    }
}

/// Uniform among maximizers; one draw per genuine tie, in index order.
pub struct RandomTies<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> TieBreaker for RandomTies<'_, R> {
    fn pick(&mut self, _position: usize, maximizers: &[usize]) -> usize {
        if maximizers.len() == 1 {
            maximizers[0]
        } else {
            maximizers[self.0.random_range(0..maximizers.len())]
        }
    }
}

/// Replays a fixed sequence of branch choices and records the tie sizes met.
#[derive(Debug, Default)]
pub struct ScriptedTies {
    script: Vec<usize>,
    cursor: usize,
    sizes: Vec<usize>,
}

impl TieBreaker for ScriptedTies {
    fn pick(&mut self, _position: usize, maximizers: &[usize]) -> usize {
        if maximizers.len() == 1 {
            return maximizers[0];
        }
        if self.cursor == self.script.len() {
            self.script.push(0);
        }
        let choice = self.script[self.cursor];
        self.sizes.truncate(self.cursor);
        self.sizes.push(maximizers.len());
        self.cursor += 1;
        maximizers[choice]
    }
}

/// Tie policy selectable from configuration (`"random"` or `"lex"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieRule {
    #[default]
    #[serde(rename = "random")]
    RandomUniform,
    #[serde(rename = "lex")]
    Lexicographic,
}

impl std::str::FromStr for TieRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(TieRule::RandomUniform),
            "lex" => Ok(TieRule::Lexicographic),
            other => Err(format!("unknown tie rule {other:?}; expected \"random\" or \"lex\"")),
        }
    }
}

/// Exact probability mass over decoded codewords.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecodeDistribution {
    masses: BTreeMap<Vec<FieldElement>, Rational>,
}

impl DecodeDistribution {
    pub fn point(x: Vec<FieldElement>) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(x, Rational::one());
        DecodeDistribution { masses }
    }

    pub fn add(&mut self, x: Vec<FieldElement>, p: Rational) {
        *self.masses.entry(x).or_insert_with(Rational::zero) += p;
    }

    pub fn prob(&self, x: &[FieldElement]) -> Rational {
        self.masses.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.masses.values().cloned().sum()
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<FieldElement>, &Rational)> {
        self.masses.iter()
    }

    /// Image of the distribution under a map on codewords.
    pub fn pushforward(&self, mut f: impl FnMut(&[FieldElement]) -> Vec<FieldElement>) -> Self {
        let mut out = DecodeDistribution::default();
        for (x, p) in &self.masses {
            out.add(f(x), p.clone());
        }
        out
    }
}

impl Serialize for DecodeDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry<'a> {
            codeword: Vec<usize>,
            probability: String,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        let entries: Vec<Entry> = self
            .masses
            .iter()
            .map(|(x, p)| Entry {
                codeword: x.iter().map(|v| v.index()).collect(),
                probability: format_rational(p),
                _p: std::marker::PhantomData,
            })
            .collect();
        entries.serialize(s)
    }
}

/// Runs `decode` once per tie branch, depth first, and accumulates
/// `prod 1/s` over the branch choices into a distribution over its outputs.
pub fn enumerate_ties<E>(mut decode: impl FnMut(&mut ScriptedTies) -> Result<Vec<FieldElement>, E>) -> Result<DecodeDistribution, E> {
    let mut dist = DecodeDistribution::default();
    let mut script: Vec<usize> = Vec::new();
    loop {
        let mut ties = ScriptedTies { script: script.clone(), cursor: 0, sizes: Vec::new() };
        let x = decode(&mut ties)?;
        debug_assert_eq!(ties.cursor, ties.script.len());
        let denom: i64 = ties.sizes.iter().map(|&s| s as i64).product();
        dist.add(x, ratio(1, denom));
        script = ties.script;
        let sizes = ties.sizes;
        // advance the odometer from the deepest tie
        loop {
            let depth = script.len();
            if depth == 0 {
                return Ok(dist);
            }
            if script[depth - 1] + 1 < sizes[depth - 1] {
                script[depth - 1] += 1;
                break;
            }
            script.pop();
        }
    }
}

/// Output of one SC pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub message: Vec<FieldElement>,
    pub codeword: Vec<FieldElement>,
}

enum Mode<'a> {
    Normal,
    /// Decide every position, compare with the truth, then feed the truth back.
    Genie {
        truth: &'a [FieldElement],
        errors: &'a mut [bool],
    },
}

/// Recursive SC decoder with per-level scratch buffers.
///
/// Messages are flat: position `i` occupies `q` consecutive entries.
pub struct ScDecoder<T> {
    field: Field,
    m: u32,
    q: usize,
    info: Vec<bool>,
    frozen: Vec<FieldElement>,
    tie_tolerance: f64,
    levels: Vec<Vec<T>>,
    psums: Vec<Vec<FieldElement>>,
    message: Vec<FieldElement>,
    maximizers: Vec<usize>,
    leaves: Option<Vec<Vec<T>>>,
}

impl<T: Likelihood> ScDecoder<T> {
    pub fn new(code: &CodeSpec) -> Self {
        let m = code.m();
        let n = code.n();
        let q = code.field().order();
        ScDecoder {
            field: code.field().clone(),
            m,
            q,
            info: code.info_mask().to_vec(),
            frozen: code.frozen_vector().to_vec(),
            tie_tolerance: DEFAULT_TIE_TOLERANCE,
            levels: (1..=m).map(|l| vec![T::zero(); (n >> l) * q]).collect(),
            psums: (0..=m).map(|l| vec![FieldElement::ZERO; n >> l]).collect(),
            message: vec![FieldElement::ZERO; n],
            maximizers: Vec::with_capacity(q),
            leaves: None,
        }
    }

    /// Relative tolerance for floating ties (ignored by exact domains).
    pub fn with_tie_tolerance(mut self, tol: f64) -> Self {
        self.tie_tolerance = tol;
        self
    }

    /// Keep the leaf message of every position from the most recent pass.
    pub fn record_leaves(mut self) -> Self {
        self.leaves = Some(vec![Vec::new(); 1 << self.m]);
        self
    }

    pub fn leaves(&self) -> Option<&[Vec<T>]> {
        self.leaves.as_deref()
    }

    pub fn n(&self) -> usize {
        1 << self.m
    }

    /// Decodes from the flat channel likelihood matrix (`n * q` entries).
    pub fn decode(&mut self, channel_llh: &[T], ties: &mut dyn TieBreaker) -> Decoded {
        assert_eq!(channel_llh.len(), self.n() * self.q, "likelihood matrix has the wrong size");
        self.node(0, 0, channel_llh, ties, &mut Mode::Normal);
        Decoded { message: self.message.clone(), codeword: self.psums[0].clone() }
    }

    /// Genie-aided pass: every position is decided as if it carried
    /// information, `errors[i]` records whether that decision missed
    /// `truth[i]`, and the true value is fed forward.
    pub fn decode_genie(&mut self, channel_llh: &[T], truth: &[FieldElement], errors: &mut [bool], ties: &mut dyn TieBreaker) {
        assert_eq!(channel_llh.len(), self.n() * self.q);
        assert_eq!(truth.len(), self.n());
        assert_eq!(errors.len(), self.n());
        self.node(0, 0, channel_llh, ties, &mut Mode::Genie { truth, errors });
    }

    fn node(&mut self, level: usize, offset: usize, input: &[T], ties: &mut dyn TieBreaker, mode: &mut Mode) {
        let size = self.n() >> level;
        let q = self.q;
        if size == 1 {
            self.leaf(offset, &input[..q], ties, mode);
            return;
        }
        let half = size / 2;
        // input is either the channel matrix (level 0) or levels[level - 1];
        // the children's messages live in levels[level]
        let mut child = std::mem::take(&mut self.levels[level]);

        for i in 0..half {
            let out = &mut child[i * q..(i + 1) * q];
            minus_into(&self.field, &input[i * q..(i + 1) * q], &input[(i + half) * q..(i + half + 1) * q], out);
            T::renormalize(out);
        }
        self.node(level + 1, offset, &child, ties, mode);

        let (parent_sums, child_sums) = {
            let (a, b) = self.psums.split_at_mut(level + 1);
            (&mut a[level], &b[0])
        };
        parent_sums[..half].copy_from_slice(&child_sums[..half]);

        for i in 0..half {
            let u0 = self.psums[level][i];
            let out = &mut child[i * q..(i + 1) * q];
            plus_into(&self.field, &input[i * q..(i + 1) * q], &input[(i + half) * q..(i + half + 1) * q], u0, out);
            T::renormalize(out);
        }
        self.node(level + 1, offset + half, &child, ties, mode);
        self.levels[level] = child;

        let alpha = self.field.alpha();
        let (a, b) = self.psums.split_at_mut(level + 1);
        let parent_sums = &mut a[level];
        let hi = &b[0];
        for i in 0..half {
            parent_sums[i] = self.field.add(parent_sums[i], self.field.mul(alpha, hi[i]));
            parent_sums[half + i] = hi[i];
        }
    }

    fn leaf(&mut self, index: usize, llh: &[T], ties: &mut dyn TieBreaker, mode: &mut Mode) {
        if let Some(leaves) = &mut self.leaves {
            leaves[index] = llh.to_vec();
        }
        let decide = |this: &mut Self, ties: &mut dyn TieBreaker| {
            T::maximizers(llh, this.tie_tolerance, &mut this.maximizers);
            FieldElement(ties.pick(index, &this.maximizers) as u8)
        };
        let value = match mode {
            Mode::Normal if !self.info[index] => self.frozen[index],
            Mode::Normal => decide(self, ties),
            Mode::Genie { truth, errors } => {
                let guess = decide(self, ties);
                errors[index] = guess != truth[index];
                truth[index]
            }
        };
        self.message[index] = value;
        self.psums[self.m as usize][0] = value;
    }
}

fn check_inputs(code: &CodeSpec, ch: &Channel, y: &[Output]) -> Result<(), ScError> {
    if code.field() != ch.field() {
        return Err(ScError::FieldMismatch);
    }
    if y.len() != code.n() {
        return Err(ScError::Length { expected: code.n(), got: y.len() });
    }
    Ok(())
}

/// Flat `n * q` matrix of `W(y_i|u)`.
pub fn likelihood_matrix<T: Likelihood>(ch: &Channel, y: &[Output]) -> Result<Vec<T>, ChannelError> {
    let mut out = Vec::with_capacity(y.len() * ch.field().order());
    for &yi in y {
        out.extend(ch.likelihoods::<T>(yi)?);
    }
    Ok(out)
}

/// One floating-point SC pass over a received word.
pub fn sc_decode<R: Rng + ?Sized>(code: &CodeSpec, ch: &Channel, y: &[Output], tie: TieRule, rng: &mut R) -> Result<Decoded, ScError> {
    check_inputs(code, ch, y)?;
    let llh = likelihood_matrix::<f64>(ch, y)?;
    let mut dec = ScDecoder::<f64>::new(code);
    Ok(match tie {
        TieRule::Lexicographic => dec.decode(&llh, &mut Lexicographic),
        TieRule::RandomUniform => dec.decode(&llh, &mut RandomTies(rng)),
    })
}

/// Exact distribution of the recursive decoder's codeword output.
pub fn sc_decode_distribution(code: &CodeSpec, ch: &Channel, y: &[Output]) -> Result<DecodeDistribution, ScError> {
    check_inputs(code, ch, y)?;
    let llh = likelihood_matrix::<Rational>(ch, y)?;
    let mut dec = ScDecoder::<Rational>::new(code);
    distribution_from_llh(&mut dec, &llh)
}

/// Exact distribution from a precomputed likelihood matrix, reusing a decoder.
pub fn distribution_from_llh(dec: &mut ScDecoder<Rational>, llh: &[Rational]) -> Result<DecodeDistribution, ScError> {
    if dec.n() > DEFINITIONAL_CAP {
        return Err(ScError::TooLarge(dec.n()));
    }
    enumerate_ties(|ties| Ok::<_, ScError>(dec.decode(llh, ties).codeword))
}

/// `W_i^(n)(y, u_{0..i-1} | u_i)` for every `u_i`, by direct summation.
/// In exact mode the `1/q^(n-1)` factor is included.
pub fn synthetic_channel<T: Likelihood>(
    code: &CodeSpec,
    ch: &Channel,
    y: &[Output],
    prefix: &[FieldElement],
    i: usize,
) -> Result<Vec<T>, ScError> {
    check_inputs(code, ch, y)?;
    let llh = likelihood_matrix::<T>(ch, y)?;
    synthetic_from_llh(code, &llh, prefix, i)
}

fn synthetic_from_llh<T: Likelihood>(code: &CodeSpec, llh: &[T], prefix: &[FieldElement], i: usize) -> Result<Vec<T>, ScError> {
    let n = code.n();
    let field = code.field();
    let q = field.order();
    if n > DEFINITIONAL_CAP {
        return Err(ScError::TooLarge(n));
    }
    if prefix.len() != i {
        return Err(ScError::Prefix { expected: i, got: prefix.len() });
    }
    let free = n - i - 1;
    let completions = q.checked_pow(free as u32).filter(|&c| c <= COMPLETION_CAP).ok_or(ScError::TooLarge(n))?;
    let mut u = vec![FieldElement::ZERO; n];
    u[..i].copy_from_slice(prefix);
    let mut x = vec![FieldElement::ZERO; n];
    let mut out = vec![T::zero(); q];
    for ui in field.elements() {
        u[i] = ui;
        let mut acc = T::zero();
        for mut c in 0..completions {
            for slot in u[i + 1..].iter_mut().rev() {
                *slot = FieldElement((c % q) as u8);
                c /= q;
            }
            x.copy_from_slice(&u);
            transform(field, &mut x);
            let mut term = T::one();
            for (j, xj) in x.iter().enumerate() {
                term = term * llh[j * q + xj.index()].clone();
            }
            acc = acc + term;
        }
        out[ui.index()] = acc;
    }
    if let Some(c) = T::inv_order(q) {
        let mut scale = T::one();
        for _ in 1..n {
            scale = scale * c.clone();
        }
        out.iter_mut().for_each(|v| *v = v.clone() * scale.clone());
    }
    Ok(out)
}

/// SC decoding straight from the synthetic-channel definition.
pub struct DefinitionalDecoder<'a, T> {
    code: &'a CodeSpec,
    llh: Vec<T>,
    tie_tolerance: f64,
}

impl<'a, T: Likelihood> DefinitionalDecoder<'a, T> {
    pub fn new(code: &'a CodeSpec, ch: &Channel, y: &[Output]) -> Result<Self, ScError> {
        check_inputs(code, ch, y)?;
        if code.n() > DEFINITIONAL_CAP {
            return Err(ScError::TooLarge(code.n()));
        }
        Ok(DefinitionalDecoder { code, llh: likelihood_matrix(ch, y)?, tie_tolerance: DEFAULT_TIE_TOLERANCE })
    }

    pub fn synthetic(&self, prefix: &[FieldElement]) -> Result<Vec<T>, ScError> {
        synthetic_from_llh(self.code, &self.llh, prefix, prefix.len())
    }

    pub fn decode(&self, ties: &mut dyn TieBreaker) -> Result<Decoded, ScError> {
        let n = self.code.n();
        let mut message = Vec::with_capacity(n);
        let mut maximizers = Vec::new();
        for i in 0..n {
            let v = if self.code.is_info(i) {
                let w = self.synthetic(&message)?;
                T::maximizers(&w, self.tie_tolerance, &mut maximizers);
                FieldElement(ties.pick(i, &maximizers) as u8)
            } else {
                self.code.frozen_vector()[i]
            };
            message.push(v);
        }
        let mut codeword = message.clone();
        transform(self.code.field(), &mut codeword);
        Ok(Decoded { message, codeword })
    }
}

/// Exact distribution of the definitional decoder's codeword output.
pub fn definitional_distribution(code: &CodeSpec, ch: &Channel, y: &[Output]) -> Result<DecodeDistribution, ScError> {
    let dec = DefinitionalDecoder::<Rational>::new(code, ch, y)?;
    enumerate_ties(|ties| dec.decode(ties).map(|d| d.codeword))
}

/// Exact transition table of `W^-`; output `(y_0, y_1)` has index `y_0 * |Y| + y_1`.
pub fn minus_channel(ch: &Channel) -> Result<TransitionTable, ChannelError> {
    let base = ch.table().ok_or(ChannelError::ContinuousOutput)?;
    let f = &base.field;
    let ny = base.output_count();
    let inv_q = ratio(1, f.order() as i64);
    let rows = f
        .elements()
        .map(|u| {
            let mut row = Vec::with_capacity(ny * ny);
            for y0 in 0..ny {
                for y1 in 0..ny {
                    let mut acc = Rational::zero();
                    for u1 in f.elements() {
                        let x0 = f.add(u, f.mul(f.alpha(), u1));
                        acc += &base.rows[x0.index()][y0] * &base.rows[u1.index()][y1];
                    }
                    row.push(acc * &inv_q);
                }
            }
            row
        })
        .collect();
    TransitionTable::new(f.clone(), rows)
}

/// Exact transition table of `W^+`; output `(y_0, y_1, u_0)` has index
/// `(y_0 * |Y| + y_1) * q + u_0`.
pub fn plus_channel(ch: &Channel) -> Result<TransitionTable, ChannelError> {
    let base = ch.table().ok_or(ChannelError::ContinuousOutput)?;
    let f = &base.field;
    let q = f.order();
    let ny = base.output_count();
    let inv_q = ratio(1, q as i64);
    let rows = f
        .elements()
        .map(|u| {
            let mut row = Vec::with_capacity(ny * ny * q);
            for y0 in 0..ny {
                for y1 in 0..ny {
                    for u0 in f.elements() {
                        let x0 = f.add(u0, f.mul(f.alpha(), u));
                        row.push(&base.rows[x0.index()][y0] * &base.rows[u.index()][y1] * &inv_q);
                    }
                }
            }
            row
        })
        .collect();
    TransitionTable::new(f.clone(), rows)
}

fn base_perm(y: usize, image: impl Fn(Output) -> Result<Output, ChannelError>) -> usize {
    match image(Output::Symbol(y)).expect("finite channel symmetry") {
        Output::Symbol(i) => i,
        Output::Real(_) => unreachable!("finite channel"),
    }
}

/// The explicit `W^-` symmetries `sigma_b(y_0,y_1) = (y_0 + b, y_1)` and
/// `pi_a(y_0,y_1) = (a y_0, a y_1)`.
pub fn minus_permutations(ch: &Channel) -> Result<SymmetryReport, ChannelError> {
    let ny = ch.output_count().ok_or(ChannelError::ContinuousOutput)?;
    let f = ch.field();
    let sigma = f.elements().map(|b| (0..ny * ny).map(|idx| base_perm(idx / ny, |y| ch.shift(y, b)) * ny + idx % ny).collect()).collect();
    let mut pi: Vec<Vec<usize>> = vec![(0..ny * ny).collect()];
    for a in f.units() {
        pi.push((0..ny * ny).map(|idx| base_perm(idx / ny, |y| ch.scale(y, a)) * ny + base_perm(idx % ny, |y| ch.scale(y, a))).collect());
    }
    Ok(SymmetryReport { sigma, pi })
}

/// The explicit `W^+` symmetries `sigma_b(y_0,y_1,u_0) = (y_0 + alpha b, y_1 + b, u_0)`
/// and `pi_a(y_0,y_1,u_0) = (a y_0, a y_1, a u_0)`.
pub fn plus_permutations(ch: &Channel) -> Result<SymmetryReport, ChannelError> {
    let ny = ch.output_count().ok_or(ChannelError::ContinuousOutput)?;
    let f = ch.field();
    let q = f.order();
    let total = ny * ny * q;
    let split = |idx: usize| (idx / (ny * q), (idx / q) % ny, idx % q);
    let sigma = f
        .elements()
        .map(|b| {
            let ab = f.mul(f.alpha(), b);
            (0..total)
                .map(|idx| {
                    let (y0, y1, u0) = split(idx);
                    let y0 = base_perm(y0, |y| ch.shift(y, ab));
                    let y1 = base_perm(y1, |y| ch.shift(y, b));
                    (y0 * ny + y1) * q + u0
                })
                .collect()
        })
        .collect();
    let mut pi: Vec<Vec<usize>> = vec![(0..total).collect()];
    for a in f.units() {
        pi.push(
            (0..total)
                .map(|idx| {
                    let (y0, y1, u0) = split(idx);
                    let y0 = base_perm(y0, |y| ch.scale(y, a));
                    let y1 = base_perm(y1, |y| ch.scale(y, a));
                    let u0 = f.mul(a, FieldElement(u0 as u8)).index();
                    (y0 * ny + y1) * q + u0
                })
                .collect(),
        );
    }
    Ok(SymmetryReport { sigma, pi })
}
