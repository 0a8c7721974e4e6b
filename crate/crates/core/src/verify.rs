//! Checkers for the SER symmetry claims, reporting witnesses on failure.
//!
//! Claims 2 and 7 and the theorem compare exact SER vectors. Claims 3 to 6
//! compare exact decode distributions before and after a transformation of
//! the received word. Claims 5, 6, 7 and the theorem assume the information
//! set is closed under domination; a failure with that hypothesis met means
//! the implementation is wrong, while a failure without it is an expected
//! counterexample.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::channel::{Channel, Output};
use crate::code::CodeSpec;
use crate::gf::FieldElement;
use crate::oracle::{all_distributions, exact_average_ser, exact_ser, OracleError, SerReport, OUTPUT_CAP};
use crate::prob::{format_rational, Rational};
use crate::sc::{distribution_from_llh, likelihood_matrix, sc_decode_distribution, DecodeDistribution, ScDecoder, ScError};
use crate::symmetry::{affine, affine_likelihoods, coset_transform, xi_apply_field, xi_apply_output, SymmetryError};

/// Largest number of messages enumerated for the message-invariance claim.
pub const MESSAGE_CAP: usize = 1 << 12;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown claim {0:?}; expected one of 2,3,4,5,6,7,thm1")]
    UnknownClaim(String),
    #[error("verification needs a finite channel")]
    Continuous,
    #[error("exhaustive check over {what} is too large ({size}); use sampling")]
    TooLarge { what: &'static str, size: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sc(#[from] ScError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    Lemma2,
    Lemma3,
    Lemma4,
    Lemma5,
    Lemma6,
    Lemma7,
    Thm1,
}

impl Claim {
    pub const ALL: [Claim; 7] = [Claim::Lemma2, Claim::Lemma3, Claim::Lemma4, Claim::Lemma5, Claim::Lemma6, Claim::Lemma7, Claim::Thm1];

    /// Whether the claim assumes closure under domination.
    pub fn needs_closure(self) -> bool {
        matches!(self, Claim::Lemma5 | Claim::Lemma6 | Claim::Lemma7 | Claim::Thm1)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Claim::Lemma2 => "SER vector does not depend on the message",
            Claim::Lemma3 => "decode distribution commutes with y -> a.y + x^b on outputs",
            Claim::Lemma4 => "decode distribution commutes with T -> a.T + x^b on likelihoods",
            Claim::Lemma5 => "decode distribution commutes with xi_(m-1)",
            Claim::Lemma6 => "decode distribution commutes with every xi_r",
            Claim::Lemma7 => "SER_j = SER_(delta_r(j)) for all j, r",
            Claim::Thm1 => "all per-symbol SERs are equal",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Claim::Lemma2 => "lemma2",
            Claim::Lemma3 => "lemma3",
            Claim::Lemma4 => "lemma4",
            Claim::Lemma5 => "lemma5",
            Claim::Lemma6 => "lemma6",
            Claim::Lemma7 => "lemma7",
            Claim::Thm1 => "thm1",
        };
        f.write_str(s)
    }
}

impl FromStr for Claim {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("lemma").unwrap_or(&t);
        Ok(match t {
            "2" => Claim::Lemma2,
            "3" => Claim::Lemma3,
            "4" => Claim::Lemma4,
            "5" => Claim::Lemma5,
            "6" => Claim::Lemma6,
            "7" => Claim::Lemma7,
            "thm1" | "theorem1" | "t1" => Claim::Thm1,
            _ => return Err(VerifyError::UnknownClaim(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: Claim,
    pub status: Status,
    /// Closure under domination holds, or the claim does not need it.
    pub hypothesis_met: bool,
    pub cases: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
}

impl ClaimReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// A failure the hypotheses say cannot happen.
    pub fn is_invariant_failure(&self) -> bool {
        self.status == Status::Fail && self.hypothesis_met
    }
}

fn ids(x: &[FieldElement]) -> Vec<usize> {
    x.iter().map(|v| v.index()).collect()
}

fn syms(y: &[Output]) -> Value {
    serde_json::to_value(y).expect("outputs serialize")
}

fn ratios(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

/// First codeword where two distributions differ.
fn first_difference(a: &DecodeDistribution, b: &DecodeDistribution) -> Option<(Vec<FieldElement>, Rational, Rational)> {
    a.iter().map(|(x, _)| x).chain(b.iter().map(|(x, _)| x)).find(|x| a.prob(x) != b.prob(x)).map(|x| (x.clone(), a.prob(x), b.prob(x)))
}

/// Exact decode distributions, cached over all of `Y^n` in exhaustive mode.
struct Distributions<'a> {
    code: &'a CodeSpec,
    ch: &'a Channel,
    ny: usize,
    cache: Option<Vec<DecodeDistribution>>,
}

impl<'a> Distributions<'a> {
    fn new(code: &'a CodeSpec, ch: &'a Channel, exhaustive: bool) -> Result<Self, VerifyError> {
        let ny = ch.output_count().ok_or(VerifyError::Continuous)?;
        let cache = if exhaustive { Some(all_distributions(code, ch)?.into_iter().map(|(_, d)| d).collect()) } else { None };
        Ok(Distributions { code, ch, ny, cache })
    }

    fn get(&self, y: &[Output]) -> Result<Cow<'_, DecodeDistribution>, VerifyError> {
        match &self.cache {
            Some(c) => {
                let idx = y.iter().fold(0usize, |acc, o| match o {
                    Output::Symbol(s) => acc * self.ny + s,
                    Output::Real(_) => unreachable!("finite channel"),
                });
                Ok(Cow::Borrowed(&c[idx]))
            }
            None => Ok(Cow::Owned(sc_decode_distribution(self.code, self.ch, y)?)),
        }
    }
}

/// The received words a distribution claim is checked on.
fn output_words(ch: &Channel, n: usize, mode: VerifyMode) -> Result<Vec<Vec<Output>>, VerifyError> {
    let ny = ch.output_count().ok_or(VerifyError::Continuous)?;
    match mode {
        VerifyMode::Exhaustive => {
            let total = ny.saturating_pow(n as u32);
            if total > OUTPUT_CAP {
                return Err(VerifyError::TooLarge { what: "output vectors", size: total });
            }
            Ok((0..total)
                .map(|mut idx| {
                    let mut y = vec![Output::Symbol(0); n];
                    for slot in y.iter_mut().rev() {
                        *slot = Output::Symbol(idx % ny);
                        idx /= ny;
                    }
                    y
                })
                .collect())
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..samples).map(|_| (0..n).map(|_| Output::Symbol(rng.random_range(0..ny))).collect()).collect())
        }
    }
}

/// Messages `b` with `b_i = 0` off the information set.
fn zero_frozen_messages(code: &CodeSpec, mode: VerifyMode, rng: &mut ChaCha8Rng) -> Vec<Vec<FieldElement>> {
    let q = code.field().order();
    let k = code.k();
    let n = code.n();
    let embed = |info: Vec<FieldElement>| {
        let mut b = vec![FieldElement::ZERO; n];
        for (&i, v) in code.info_set().iter().zip(info) {
            b[i] = v;
        }
        b
    };
    match mode {
        VerifyMode::Exhaustive => (0..q.pow(k as u32))
            .map(|mut idx| {
                let mut info = vec![FieldElement::ZERO; k];
                for slot in info.iter_mut().rev() {
                    *slot = FieldElement((idx % q) as u8);
                    idx /= q;
                }
                embed(info)
            })
            .collect(),
        VerifyMode::Sampled { .. } => {
            vec![embed((0..k).map(|_| FieldElement(rng.random_range(0..q) as u8)).collect())]
        }
    }
}

fn random_unit(q: usize, rng: &mut ChaCha8Rng) -> FieldElement {
    FieldElement(rng.random_range(1..q) as u8)
}

/// Runs one claim against `code` (frozen values are reset to zero except
/// for the message-invariance claim, which varies them itself).
pub fn verify_claim(code: &CodeSpec, ch: &Channel, claim: Claim, mode: VerifyMode) -> Result<ClaimReport, VerifyError> {
    if !ch.is_finite() {
        return Err(VerifyError::Continuous);
    }
    let hypothesis_met = !claim.needs_closure() || code.is_decreasing();
    let zcode = code.with_zero_frozen();
    let (cases, witness) = match claim {
        Claim::Lemma2 => lemma2(code, ch, mode)?,
        Claim::Lemma3 | Claim::Lemma4 => coset_claim(&zcode, ch, mode, claim == Claim::Lemma4)?,
        Claim::Lemma5 => xi_claim(&zcode, ch, mode, &[zcode.m().saturating_sub(1)])?,
        Claim::Lemma6 => xi_claim(&zcode, ch, mode, &(0..zcode.m()).collect::<Vec<_>>())?,
        Claim::Lemma7 => lemma7(&zcode, ch)?,
        Claim::Thm1 => thm1(&zcode, ch)?,
    };
    let mut witness = witness;
    if let (Some(w), Err(cw)) = (witness.as_mut(), code.closure_witness()) {
        w["closure_violation"] = json!({ "member": cw.member, "dominator": cw.dominator });
    }
    Ok(ClaimReport { claim, status: if witness.is_none() { Status::Pass } else { Status::Fail }, hypothesis_met, cases, witness })
}

pub fn verify(code: &CodeSpec, ch: &Channel, claims: &[Claim], mode: VerifyMode) -> Result<Vec<ClaimReport>, VerifyError> {
    claims.iter().map(|&c| verify_claim(code, ch, c, mode)).collect()
}

type Outcome = (u64, Option<Value>);

fn lemma2(code: &CodeSpec, ch: &Channel, mode: VerifyMode) -> Result<Outcome, VerifyError> {
    let n = code.n();
    let q = code.field().order();
    let reference = exact_ser(code, ch, &vec![FieldElement::ZERO; n])?;
    let messages: Vec<Vec<FieldElement>> = match mode {
        VerifyMode::Exhaustive => {
            let total = q.saturating_pow(n as u32);
            if total > MESSAGE_CAP {
                return Err(VerifyError::TooLarge { what: "messages", size: total });
            }
            (0..total)
                .map(|mut idx| {
                    let mut u = vec![FieldElement::ZERO; n];
                    for slot in u.iter_mut().rev() {
                        *slot = FieldElement((idx % q) as u8);
                        idx /= q;
                    }
                    u
                })
                .collect()
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).map(|_| (0..n).map(|_| FieldElement(rng.random_range(0..q) as u8)).collect()).collect()
        }
    };
    for u in &messages {
        let got = exact_ser(code, ch, u)?;
        if got != reference {
            return Ok((
                messages.len() as u64,
                Some(json!({
                    "message": ids(u),
                    "ser": ratios(got.exact().unwrap()),
                    "zero_message_ser": ratios(reference.exact().unwrap()),
                })),
            ));
        }
    }
    Ok((messages.len() as u64, None))
}

fn coset_claim(code: &CodeSpec, ch: &Channel, mode: VerifyMode, via_likelihoods: bool) -> Result<Outcome, VerifyError> {
    let field = code.field();
    let q = field.order();
    let n = code.n();
    let exhaustive = mode == VerifyMode::Exhaustive;
    let dists = Distributions::new(code, ch, exhaustive)?;
    let seed = match mode {
        VerifyMode::Sampled { seed, .. } => seed,
        VerifyMode::Exhaustive => 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut dec = ScDecoder::<Rational>::new(code);
    let mut cases = 0u64;
    for y in output_words(ch, n, mode)? {
        let base = dists.get(&y)?.into_owned();
        let scales: Vec<FieldElement> = if exhaustive { field.units().collect() } else { vec![random_unit(q, &mut rng)] };
        let llh = if via_likelihoods { Some(likelihood_matrix::<Rational>(ch, &y).map_err(ScError::from)?) } else { None };
        for b in zero_frozen_messages(code, mode, &mut rng) {
            let mut xb = b.clone();
            crate::code::transform(field, &mut xb);
            for &a in &scales {
                cases += 1;
                let expected = base.pushforward(|x| affine(field, a, &xb, x));
                let (got, moved) = match &llh {
                    Some(llh) => {
                        let moved = affine_likelihoods(field, a, &xb, llh)?;
                        (distribution_from_llh(&mut dec, &moved)?, None)
                    }
                    None => {
                        let (y2, _) = coset_transform(ch, a, &b, &y, &vec![FieldElement::ZERO; n])?;
                        (dists.get(&y2)?.into_owned(), Some(y2))
                    }
                };
                if let Some((x, want, have)) = first_difference(&expected, &got) {
                    return Ok((
                        cases,
                        Some(json!({
                            "y": syms(&y),
                            "transformed_y": moved.as_deref().map(syms),
                            "a": a.index(),
                            "b": ids(&b),
                            "codeword": ids(&x),
                            "expected": format_rational(&want),
                            "got": format_rational(&have),
                        })),
                    ));
                }
            }
        }
    }
    Ok((cases, None))
}

fn xi_claim(code: &CodeSpec, ch: &Channel, mode: VerifyMode, bits: &[u32]) -> Result<Outcome, VerifyError> {
    let field = code.field();
    let m = code.m();
    let dists = Distributions::new(code, ch, mode == VerifyMode::Exhaustive)?;
    let mut cases = 0u64;
    for y in output_words(ch, code.n(), mode)? {
        let base = dists.get(&y)?;
        for &r in bits {
            cases += 1;
            let ys = xi_apply_output(ch, m, r, &y)?;
            let expected = base.pushforward(|x| xi_apply_field(field, m, r, x).expect("length checked"));
            let got = dists.get(&ys)?;
            if let Some((x, want, have)) = first_difference(&expected, &got) {
                return Ok((
                    cases,
                    Some(json!({
                        "y": syms(&y),
                        "xi_y": syms(&ys),
                        "r": r,
                        "codeword": ids(&x),
                        "expected": format_rational(&want),
                        "got": format_rational(&have),
                    })),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn ser_of(code: &CodeSpec, ch: &Channel) -> Result<Vec<Rational>, VerifyError> {
    match exact_average_ser(code, ch)? {
        SerReport::Exact { per_index } => Ok(per_index),
        SerReport::MonteCarlo { .. } => unreachable!("exact oracle"),
    }
}

fn lemma7(code: &CodeSpec, ch: &Channel) -> Result<Outcome, VerifyError> {
    let ser = ser_of(code, ch)?;
    let m = code.m();
    let mut cases = 0;
    for j in 0..code.n() {
        for r in 0..m {
            cases += 1;
            let d = j ^ (1 << r);
            if ser[j] != ser[d] {
                return Ok((
                    cases,
                    Some(
                        json!({ "j": j, "r": r, "ser_j": format_rational(&ser[j]), "ser_delta_j": format_rational(&ser[d]), "ser": ratios(&ser) }),
                    ),
                ));
            }
        }
    }
    Ok((cases, None))
}

fn thm1(code: &CodeSpec, ch: &Channel) -> Result<Outcome, VerifyError> {
    let ser = ser_of(code, ch)?;
    let equal = ser.windows(2).all(|w| w[0] == w[1]);
    Ok((1, (!equal).then(|| json!({ "ser": ratios(&ser) }))))
}
