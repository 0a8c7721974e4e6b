//! Exact per-symbol SER by enumeration of the output space, plus the
//! Monte Carlo estimator that is checked against it.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Channel, ChannelError, Output};
use crate::code::{CodeError, CodeSpec};
use crate::gf::FieldElement;
use crate::prob::{ratio, rational_to_f64, serde_rational, Likelihood, Rational};
use crate::sc::{distribution_from_llh, DecodeDistribution, Lexicographic, ScDecoder, ScError, DEFINITIONAL_CAP};
use crate::sim::{run_trials, TrialPlan};

/// Largest `|Y|^n` the oracle will enumerate.
pub const OUTPUT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("|Y|^n = {outputs}^{n} exceeds the enumeration cap {OUTPUT_CAP}")]
    TooLarge { outputs: usize, n: usize },
    #[error("the exact oracle needs a finite channel")]
    Continuous,
    #[error("Monte Carlo needs at least one trial")]
    NoTrials,
    #[error("position {i} out of range for n = {n}")]
    Position { i: usize, n: usize },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Sc(#[from] ScError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Per-index SER, either exact or estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SerReport {
    Exact {
        #[serde(with = "serde_rational::vec")]
        per_index: Vec<Rational>,
    },
    MonteCarlo {
        trials: u64,
        errors: Vec<u64>,
        per_index: Vec<f64>,
        std_errors: Vec<f64>,
    },
}

impl SerReport {
    pub fn exact(&self) -> Option<&[Rational]> {
        match self {
            SerReport::Exact { per_index } => Some(per_index),
            SerReport::MonteCarlo { .. } => None,
        }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            SerReport::Exact { per_index } => per_index.iter().map(rational_to_f64).collect(),
            SerReport::MonteCarlo { per_index, .. } => per_index.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SerReport::Exact { per_index } => per_index.len(),
            SerReport::MonteCarlo { per_index, .. } => per_index.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact reports: all entries identical. Estimates are never certified.
    pub fn all_equal(&self) -> Option<bool> {
        self.exact().map(|v| v.windows(2).all(|w| w[0] == w[1]))
    }
}

fn output_space(ch: &Channel, n: usize) -> Result<(usize, usize), OracleError> {
    let ny = ch.output_count().ok_or(OracleError::Continuous)?;
    let total = ny.checked_pow(n as u32).filter(|&t| t <= OUTPUT_CAP).ok_or(OracleError::TooLarge { outputs: ny, n })?;
    Ok((ny, total))
}

/// The `idx`-th output vector in lexicographic order (last coordinate fastest).
fn output_vector(mut idx: usize, ny: usize, y: &mut [usize]) {
    for slot in y.iter_mut().rev() {
        *slot = idx % ny;
        idx /= ny;
    }
}

/// Per-symbol likelihood vectors indexed by output symbol.
fn symbol_table(ch: &Channel, ny: usize) -> Result<Vec<Vec<Rational>>, OracleError> {
    (0..ny).map(|s| Ok(ch.likelihoods::<Rational>(Output::Symbol(s))?)).collect()
}

/// Sums `f(y, W^n(y|xbar))` over every output vector with positive probability, in parallel.
fn accumulate<F>(
    code: &CodeSpec,
    ch: &Channel,
    xbar: &[FieldElement],
    width: usize,
    make_decoder: impl Fn() -> ScDecoder<Rational> + Sync + Send,
    f: F,
) -> Result<Vec<Rational>, OracleError>
where
    F: Fn(&mut ScDecoder<Rational>, &[Rational], &Rational, &mut [Rational]) -> Result<(), OracleError> + Sync,
{
    let n = code.n();
    let (ny, total) = output_space(ch, n)?;
    if n > DEFINITIONAL_CAP {
        return Err(ScError::TooLarge(n).into());
    }
    let table = symbol_table(ch, ny)?;
    let q = code.field().order();
    let zero = || vec![Rational::zero(); width];
    (0..total)
        .into_par_iter()
        .try_fold(
            || (make_decoder(), vec![0usize; n], Vec::with_capacity(n * q), zero()),
            |(mut dec, mut y, mut llh, mut acc), idx| {
                output_vector(idx, ny, &mut y);
                let mut weight = Rational::one();
                for (yi, xi) in y.iter().zip(xbar) {
                    weight *= &table[*yi][xi.index()];
                    if weight.is_zero() {
                        return Ok((dec, y, llh, acc));
                    }
                }
                llh.clear();
                for &yi in &y {
                    llh.extend_from_slice(&table[yi]);
                }
                f(&mut dec, &llh, &weight, &mut acc)?;
                Ok((dec, y, llh, acc))
            },
        )
        .map(|r| r.map(|(_, _, _, acc)| acc))
        .try_reduce(zero, |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            Ok(a)
        })
}

/// `SER_j = sum_y W^n(y|xbar) sum_x P(xhat(y) = x) 1[x_j != xbar_j]`, where
/// the frozen symbols are `message` restricted to the frozen set and
/// `xbar = message G_n`.
pub fn exact_ser(code: &CodeSpec, ch: &Channel, message: &[FieldElement]) -> Result<SerReport, OracleError> {
    let frozen: Vec<FieldElement> = code.frozen_positions().map(|i| message.get(i).copied().unwrap_or_default()).collect();
    let code = code.with_frozen(&frozen)?;
    let xbar = code.encode_checked(message)?;
    let per_index = accumulate(
        &code,
        ch,
        &xbar,
        code.n(),
        || ScDecoder::new(&code),
        |dec, llh, w, acc| {
            let dist = distribution_from_llh(dec, llh)?;
            for (x, p) in dist.iter() {
                let mass = w * p;
                for (j, (xj, xbj)) in x.iter().zip(&xbar).enumerate() {
                    if xj != xbj {
                        acc[j] += &mass;
                    }
                }
            }
            Ok(())
        },
    )?;
    Ok(SerReport::Exact { per_index })
}

/// SER averaged over messages, computed as the all-zero case of [`exact_ser`].
pub fn exact_average_ser(code: &CodeSpec, ch: &Channel) -> Result<SerReport, OracleError> {
    exact_ser(&code.with_zero_frozen(), ch, &vec![FieldElement::ZERO; code.n()])
}

/// Exact decode distribution for every output vector, in lexicographic order.
pub fn all_distributions(code: &CodeSpec, ch: &Channel) -> Result<Vec<(Vec<Output>, DecodeDistribution)>, OracleError> {
    let n = code.n();
    let (ny, total) = output_space(ch, n)?;
    let table = symbol_table(ch, ny)?;
    (0..total)
        .into_par_iter()
        .map_init(
            || ScDecoder::<Rational>::new(code),
            |dec, idx| {
                let mut y = vec![0; n];
                output_vector(idx, ny, &mut y);
                let llh: Vec<Rational> = y.iter().flat_map(|&s| table[s].iter().cloned()).collect();
                let dist = distribution_from_llh(dec, &llh)?;
                Ok((y.into_iter().map(Output::Symbol).collect(), dist))
            },
        )
        .collect()
}

/// One row of a synthetic-channel table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticEntry {
    pub y: Vec<usize>,
    pub prefix: Vec<FieldElement>,
    #[serde(with = "serde_rational::vec")]
    pub values: Vec<Rational>,
}

/// `W_i^(n)(y, u_{0..i-1} | u_i)` over every output vector and prefix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticTable {
    pub i: usize,
    pub entries: Vec<SyntheticEntry>,
}

impl SyntheticTable {
    /// `sum_{y, prefix} W_i(y, prefix | u)` for each `u`.
    pub fn marginals(&self) -> Vec<Rational> {
        let q = self.entries.first().map_or(0, |e| e.values.len());
        let mut out = vec![Rational::zero(); q];
        for e in &self.entries {
            out.iter_mut().zip(&e.values).for_each(|(a, b)| *a += b);
        }
        out
    }
}

pub fn exact_synthetic(code: &CodeSpec, ch: &Channel, i: usize) -> Result<SyntheticTable, OracleError> {
    let n = code.n();
    if i >= n {
        return Err(OracleError::Position { i, n });
    }
    let q = code.field().order();
    let (ny, total) = output_space(ch, n)?;
    let prefixes =
        q.checked_pow(i as u32).filter(|&p| p.saturating_mul(total) <= OUTPUT_CAP).ok_or(OracleError::TooLarge { outputs: ny, n })?;
    let entries = (0..total)
        .into_par_iter()
        .flat_map_iter(|idx| {
            let mut y = vec![0; n];
            output_vector(idx, ny, &mut y);
            (0..prefixes).map(move |mut p| {
                let mut prefix = vec![FieldElement::ZERO; i];
                for slot in prefix.iter_mut().rev() {
                    *slot = FieldElement((p % q) as u8);
                    p /= q;
                }
                let outputs: Vec<Output> = y.iter().map(|&s| Output::Symbol(s)).collect();
                let values = crate::sc::synthetic_channel::<Rational>(code, ch, &outputs, &prefix, i)?;
                Ok(SyntheticEntry { y: y.clone(), prefix, values })
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(SyntheticTable { i, entries })
}

/// Exact genie-aided error probability of each position under the all-zero
/// input, with uniform tie breaking: `sum_y W^n(y|0) (1 - [0 in argmax] / s)`.
pub fn exact_genie_error(code: &CodeSpec, ch: &Channel) -> Result<Vec<Rational>, OracleError> {
    let n = code.n();
    let zero = vec![FieldElement::ZERO; n];
    let code = code.with_zero_frozen();
    accumulate(
        &code,
        ch,
        &zero,
        n,
        || ScDecoder::new(&code).record_leaves(),
        |dec, llh, w, acc| {
            // with the truth fed forward, leaf i is W_i(y, 0^i | .)
            let mut errors = vec![false; n];
            dec.decode_genie(llh, &zero, &mut errors, &mut Lexicographic);
            let mut maxs = Vec::new();
            for (i, leaf) in dec.leaves().expect("recording").iter().enumerate() {
                Rational::maximizers(leaf, 0.0, &mut maxs);
                if maxs.contains(&0) {
                    acc[i] += w * (Rational::one() - ratio(1, maxs.len() as i64));
                } else {
                    acc[i] += w;
                }
            }
            Ok(())
        },
    )
}

/// Monte Carlo SER with the all-zero codeword, deterministic per seed.
pub fn mc_ser(code: &CodeSpec, ch: &Channel, trials: u64, seed: u64) -> Result<SerReport, OracleError> {
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let tallies = run_trials(&code.with_zero_frozen(), ch, &TrialPlan { trials, seed, ..TrialPlan::default() });
    let t = trials as f64;
    let per_index: Vec<f64> = tallies.codeword_errors.iter().map(|&e| e as f64 / t).collect();
    let std_errors = per_index.iter().map(|&p| (p * (1.0 - p) / t).sqrt()).collect();
    Ok(SerReport::MonteCarlo { trials, errors: tallies.codeword_errors, per_index, std_errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::decreasing_sets;
    use crate::gf::Field;

    fn el(i: usize) -> FieldElement {
        FieldElement(i as u8)
    }

    fn bsc(p: (i64, i64)) -> Channel {
        Channel::qsc(Field::binary(), ratio(p.0, p.1)).unwrap()
    }

    /// Brute force straight from the SER definition, decoding each output
    /// through the definitional form: an independent path to the same number.
    fn reference_ser(code: &CodeSpec, ch: &Channel, message: &[FieldElement]) -> Vec<Rational> {
        let n = code.n();
        let frozen: Vec<FieldElement> = code.frozen_positions().map(|i| message[i]).collect();
        let code = code.with_frozen(&frozen).unwrap();
        let xbar = code.encode(message).unwrap();
        let ny = ch.output_count().unwrap();
        let mut out = vec![Rational::zero(); n];
        for idx in 0..ny.pow(n as u32) {
            let mut y = vec![0; n];
            output_vector(idx, ny, &mut y);
            let y: Vec<Output> = y.into_iter().map(Output::Symbol).collect();
            let w = ch.product_exact(&y, &xbar).unwrap();
            let dist = crate::sc::definitional_distribution(&code, ch, &y).unwrap();
            for (x, p) in dist.iter() {
                for j in 0..n {
                    if x[j] != xbar[j] {
                        out[j] += &w * p;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn noiseless_is_zero() {
        let f4 = Field::default_for(4).unwrap();
        let ch = Channel::qsc(f4.clone(), ratio(0, 1)).unwrap();
        let code = CodeSpec::new(f4, 2, &[1, 2, 3], None).unwrap();
        let r = exact_average_ser(&code, &ch).unwrap();
        assert!(r.exact().unwrap().iter().all(|v| v.is_zero()));
    }

    #[test]
    fn two_symbol_examples() {
        let ch = bsc((1, 10));
        let bad = CodeSpec::new(Field::binary(), 1, &[0], None).unwrap();
        let r = exact_average_ser(&bad, &ch).unwrap();
        assert_eq!(r.exact().unwrap(), &[ratio(9, 50), ratio(0, 1)]);
        assert_eq!(r.all_equal(), Some(false));

        let good = CodeSpec::new(Field::binary(), 1, &[1], None).unwrap();
        let r = exact_average_ser(&good, &ch).unwrap();
        assert_eq!(r.all_equal(), Some(true));
    }

    #[test]
    fn matches_definitional_reference() {
        for (q, eps) in [(2u32, (1, 10)), (3, (1, 5)), (4, (3, 10))] {
            let f = Field::default_for(q).unwrap();
            let ch = Channel::qsc(f.clone(), ratio(eps.0, eps.1)).unwrap();
            for info in [vec![3], vec![1, 3], vec![0, 3], vec![1, 2, 3]] {
                let code = CodeSpec::new(f.clone(), 2, &info, None).unwrap();
                let msg: Vec<FieldElement> = (0..4).map(|i| el((i + 1) % q as usize)).collect();
                let got = exact_ser(&code, &ch, &msg).unwrap();
                assert_eq!(got.exact().unwrap(), reference_ser(&code, &ch, &msg).as_slice(), "q={q} A={info:?}");
            }
        }
    }

    #[test]
    fn average_equals_message_mean() {
        for q in [2u32, 3] {
            let f = Field::default_for(q).unwrap();
            let ch = Channel::qsc(f.clone(), ratio(1, 10)).unwrap();
            for info in [vec![0], vec![1], vec![0, 1]] {
                let code = CodeSpec::new(f.clone(), 1, &info, None).unwrap();
                let q = q as usize;
                let mut mean = vec![Rational::zero(); 2];
                let messages = q * q;
                for idx in 0..messages {
                    let msg = vec![el(idx / q), el(idx % q)];
                    let r = exact_ser(&code, &ch, &msg).unwrap();
                    mean.iter_mut().zip(r.exact().unwrap()).for_each(|(a, b)| *a += b);
                }
                mean.iter_mut().for_each(|v| *v /= Rational::from_integer((messages as i64).into()));
                assert_eq!(exact_average_ser(&code, &ch).unwrap().exact().unwrap(), mean.as_slice());
            }
        }
    }

    #[test]
    fn theorem_instances() {
        let code = CodeSpec::new(Field::binary(), 2, &[1, 2, 3], None).unwrap();
        assert_eq!(exact_average_ser(&code, &bsc((1, 10))).unwrap().all_equal(), Some(true));
        let f4 = Field::default_for(4).unwrap();
        let code = CodeSpec::new(f4.clone(), 2, &[3], None).unwrap();
        let qec = Channel::qec(f4, ratio(1, 3)).unwrap();
        assert_eq!(exact_average_ser(&code, &qec).unwrap().all_equal(), Some(true));
    }

    #[test]
    fn decreasing_sets_give_equal_ser_at_n4() {
        for q in [2u32, 3, 4] {
            let f = Field::default_for(q).unwrap();
            for ch in [Channel::qsc(f.clone(), ratio(1, 10)).unwrap(), Channel::qec(f.clone(), ratio(1, 3)).unwrap()] {
                for info in decreasing_sets(2) {
                    let code = CodeSpec::new(f.clone(), 2, &info, None).unwrap();
                    assert_eq!(exact_average_ser(&code, &ch).unwrap().all_equal(), Some(true), "q={q} A={info:?}");
                }
            }
        }
    }

    #[test]
    fn ser_grows_with_noise() {
        let code = CodeSpec::new(Field::binary(), 2, &[1, 2, 3], None).unwrap();
        let sers: Vec<Rational> =
            [(1, 20), (1, 10), (1, 5)].iter().map(|&p| exact_average_ser(&code, &bsc(p)).unwrap().exact().unwrap()[0].clone()).collect();
        assert!(sers[0] < sers[1] && sers[1] < sers[2]);
    }

    #[test]
    fn synthetic_tables() {
        let ch = bsc((1, 10));
        let c1 = CodeSpec::new(Field::binary(), 0, &[0], None).unwrap();
        let t = exact_synthetic(&c1, &ch, 0).unwrap();
        for e in &t.entries {
            assert_eq!(e.values, ch.likelihoods::<Rational>(Output::Symbol(e.y[0])).unwrap());
        }
        let f3 = Field::default_for(3).unwrap();
        let qec = Channel::qec(f3.clone(), ratio(1, 3)).unwrap();
        let c2 = CodeSpec::new(f3.clone(), 2, &[3], None).unwrap();
        for i in 0..4 {
            let t = exact_synthetic(&c2, &qec, i).unwrap();
            assert!(t.marginals().iter().all(|m| *m == ratio(1, 1)), "i={i}");
        }
        // n = 2 tables agree with one combining step
        let c = CodeSpec::new(f3.clone(), 1, &[0, 1], None).unwrap();
        let t0 = exact_synthetic(&c, &qec, 0).unwrap();
        let t1 = exact_synthetic(&c, &qec, 1).unwrap();
        for e in &t0.entries {
            let a = qec.likelihoods::<Rational>(Output::Symbol(e.y[0])).unwrap();
            let b = qec.likelihoods::<Rational>(Output::Symbol(e.y[1])).unwrap();
            assert_eq!(e.values, crate::sc::combine_minus(&f3, &a, &b));
        }
        for e in &t1.entries {
            let a = qec.likelihoods::<Rational>(Output::Symbol(e.y[0])).unwrap();
            let b = qec.likelihoods::<Rational>(Output::Symbol(e.y[1])).unwrap();
            assert_eq!(e.values, crate::sc::combine_plus(&f3, &a, &b, e.prefix[0]));
        }
    }

    #[test]
    fn genie_error_of_bsc_pair() {
        // position 0 sees W^- = BSC(0.18); position 1 sees W^+ with no ties
        // except y = (0,1),(1,0) which split 1/2 each: 0.01 + 2 * 0.09 / 2
        let code = CodeSpec::new(Field::binary(), 1, &[0, 1], None).unwrap();
        let g = exact_genie_error(&code, &bsc((1, 10))).unwrap();
        assert_eq!(g, vec![ratio(9, 50), ratio(1, 100) + ratio(9, 100)]);
    }

    #[test]
    fn caps_and_errors() {
        let code = CodeSpec::new(Field::binary(), 5, &[31], None).unwrap();
        let awgn = Channel::awgn_bpsk(0.8).unwrap();
        assert_eq!(exact_average_ser(&code, &awgn).unwrap_err(), OracleError::Continuous);
        let f5 = Field::default_for(5).unwrap();
        let big = CodeSpec::new(f5.clone(), 4, &[15], None).unwrap();
        let qsc = Channel::qsc(f5, ratio(1, 10)).unwrap();
        assert!(matches!(exact_average_ser(&big, &qsc), Err(OracleError::TooLarge { .. })));
        assert_eq!(mc_ser(&code, &awgn, 0, 1).unwrap_err(), OracleError::NoTrials);
    }

    #[test]
    fn json_uses_rational_strings() {
        let r = SerReport::Exact { per_index: vec![ratio(9, 50), ratio(0, 1)] };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"mode":"exact","per_index":["9/50","0/1"]}"#);
        assert_eq!(serde_json::from_str::<SerReport>(&s).unwrap(), r);
    }
}
