//! Information-set construction.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Channel, ChannelKind, Output};
use crate::code::{check_condition_a, closure, ClosureWitness, MAX_LOG_LENGTH};
use crate::gf::{Field, FieldElement};
use crate::prob::{rational_to_f64, Rational};
use crate::sc::{likelihood_matrix, RandomTies, ScDecoder};
use crate::sim::trial_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error("genie-aided construction needs at least one trial")]
    NoTrials,
    #[error("exact erasure ranking needs a QEC channel")]
    NotErasure,
    #[error("no erasure proxy available for this channel; give one explicitly")]
    NoProxy,
    #[error("erasure probability {0} outside [0, 1]")]
    BadEpsilon(f64),
    #[error("k = {k} exceeds n = {n}")]
    DimensionTooLarge { k: usize, n: usize },
    #[error("m = {0} is too large")]
    LengthTooLarge(u32),
    #[error("manual set has {got} indices, expected {k}")]
    ManualSize { k: usize, got: usize },
    #[error("manual set has index {0} out of range")]
    ManualIndex(usize),
    #[error("manual set is not closed under domination: {0}")]
    ManualNotClosed(ClosureWitness),
    #[error("channel field differs from the requested field")]
    FieldMismatch,
}

/// How to rank synthetic channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ConstructionMethod {
    /// Genie-aided SC error frequencies over `trials` all-zero transmissions.
    GenieMc {
        trials: u64,
        seed: u64,
    },
    /// Exact erasure recursion of a QEC.
    ErasureExact,
    /// Erasure recursion with a stand-in erasure probability; `None` takes
    /// the channel's own `epsilon` (QSC or QEC).
    ErasureProxy {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Manual {
        info_set: Vec<usize>,
    },
}

impl ConstructionMethod {
    /// Exact erasure ranking on a QEC, erasure proxy on a QSC, genie-aided otherwise.
    pub fn default_for(ch: &Channel, trials: u64, seed: u64) -> Self {
        match ch.kind() {
            ChannelKind::Qec { .. } => ConstructionMethod::ErasureExact,
            ChannelKind::Qsc { .. } => ConstructionMethod::ErasureProxy { epsilon: None },
            _ => ConstructionMethod::GenieMc { trials, seed },
        }
    }
}

/// One repair step: `removed` left the greedy selection, `added` entered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repair {
    pub removed: Vec<usize>,
    pub added: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub info_set: Vec<usize>,
    /// Per-index unreliability used for ranking (lower is better); empty for manual sets.
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<Repair>,
}

/// `z_i` of the QEC recursion `z- = 2z - z^2`, `z+ = z^2`, taking the bits of
/// `i` most significant first.
pub fn erasure_params(m: u32, epsilon: f64) -> Result<Vec<f64>, ConstructError> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(ConstructError::BadEpsilon(epsilon));
    }
    if m > MAX_LOG_LENGTH {
        return Err(ConstructError::LengthTooLarge(m));
    }
    Ok(erasure_recursion(m, epsilon, |z| 2.0 * z - z * z, |z| z * z))
}

/// [`erasure_params`] in exact arithmetic.
pub fn erasure_params_exact(m: u32, epsilon: &Rational) -> Vec<Rational> {
    let two = Rational::from_integer(2.into());
    erasure_recursion(m, epsilon.clone(), |z| &two * &z - &z * &z, |z| &z * &z)
}

fn erasure_recursion<T: Clone>(m: u32, eps: T, minus: impl Fn(T) -> T, plus: impl Fn(T) -> T) -> Vec<T> {
    // level by level: index i at level l+1 splits into 2i (minus) and 2i+1 (plus)
    let mut z = vec![eps];
    for _ in 0..m {
        z = z.into_iter().flat_map(|v| [minus(v.clone()), plus(v)]).collect();
    }
    z
}

/// Genie-aided error counts per position from `trials` all-zero
/// transmissions; trial `t` uses stream `t` of `seed`.
pub fn genie_mc_counts(field: &Field, m: u32, ch: &Channel, trials: u64, seed: u64) -> Result<Vec<u64>, ConstructError> {
    if trials == 0 {
        return Err(ConstructError::NoTrials);
    }
    if ch.field() != field {
        return Err(ConstructError::FieldMismatch);
    }
    let n = 1usize << m;
    let all = (0..n).collect::<Vec<_>>();
    let code = crate::code::CodeSpec::new(field.clone(), m, &all, None).map_err(|_| ConstructError::LengthTooLarge(m))?;
    let zero = vec![FieldElement::ZERO; n];
    let shards = rayon::current_num_threads() as u64;
    let counts = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut dec = ScDecoder::<f64>::new(&code);
            let mut y = vec![Output::Symbol(0); n];
            let mut errors = vec![false; n];
            let mut counts = vec![0u64; n];
            for t in (trials * s / shards)..(trials * (s + 1) / shards) {
                let mut rng = trial_rng(seed, t);
                for yi in y.iter_mut() {
                    *yi = ch.sample(FieldElement::ZERO, &mut rng);
                }
                let llh = likelihood_matrix::<f64>(ch, &y).expect("sampled outputs are valid");
                dec.decode_genie(&llh, &zero, &mut errors, &mut RandomTies(&mut rng));
                counts.iter_mut().zip(&errors).for_each(|(c, &e)| *c += e as u64);
            }
            counts
        })
        .reduce(
            || vec![0; n],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts)
}

/// Genie-aided error-rate estimate per position.
pub fn genie_mc_rank(field: &Field, m: u32, ch: &Channel, trials: u64, seed: u64) -> Result<Vec<f64>, ConstructError> {
    let counts = genie_mc_counts(field, m, ch, trials, seed)?;
    Ok(counts.iter().map(|&c| c as f64 / trials as f64).collect())
}

/// Indices ordered from most to least reliable; equal scores prefer the larger index.
pub fn reliability_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)));
    order
}

/// Greedy selection of the `k` most reliable indices, repaired to be closed
/// under domination when needed.
pub fn select_closed(scores: &[f64], m: u32, k: usize) -> (Vec<usize>, Option<Repair>) {
    let n = scores.len();
    let order = reliability_order(scores);
    let mut greedy: Vec<usize> = order[..k].to_vec();
    greedy.sort_unstable();
    if check_condition_a(&greedy, m).is_ok() {
        return (greedy, None);
    }
    // add whole up-closures in reliability order while they fit; a maximal
    // element of the complement always fits, so the passes terminate
    let mut member = vec![false; n];
    let mut size = 0;
    while size < k {
        for &c in &order {
            if member[c] {
                continue;
            }
            let missing: Vec<usize> = closure(&[c], m).into_iter().filter(|&i| !member[i]).collect();
            if size + missing.len() <= k {
                for i in missing {
                    member[i] = true;
                    size += 1;
                }
            }
            if size == k {
                break;
            }
        }
    }
    let chosen: Vec<usize> = (0..n).filter(|&i| member[i]).collect();
    let repair = Repair {
        removed: greedy.iter().copied().filter(|i| !member[*i]).collect(),
        added: chosen.iter().copied().filter(|i| greedy.binary_search(i).is_err()).collect(),
    };
    warn!("greedy information set was not closed under domination; removed {:?}, added {:?}", repair.removed, repair.added);
    (chosen, Some(repair))
}

/// Builds an information set of size `k`, always closed under domination.
pub fn construct_info_set(
    field: &Field,
    m: u32,
    k: usize,
    ch: &Channel,
    method: &ConstructionMethod,
) -> Result<Construction, ConstructError> {
    if m > MAX_LOG_LENGTH {
        return Err(ConstructError::LengthTooLarge(m));
    }
    let n = 1usize << m;
    if k > n {
        return Err(ConstructError::DimensionTooLarge { k, n });
    }
    let scores = match method {
        ConstructionMethod::Manual { info_set } => {
            if info_set.len() != k {
                return Err(ConstructError::ManualSize { k, got: info_set.len() });
            }
            if let Some(&bad) = info_set.iter().find(|&&i| i >= n) {
                return Err(ConstructError::ManualIndex(bad));
            }
            let mut a = info_set.clone();
            a.sort_unstable();
            a.dedup();
            if a.len() != k {
                return Err(ConstructError::ManualSize { k, got: a.len() });
            }
            check_condition_a(&a, m).map_err(ConstructError::ManualNotClosed)?;
            return Ok(Construction { info_set: a, scores: Vec::new(), repair: None });
        }
        ConstructionMethod::ErasureExact => match ch.kind() {
            ChannelKind::Qec { epsilon } => erasure_params(m, rational_to_f64(epsilon))?,
            _ => return Err(ConstructError::NotErasure),
        },
        ConstructionMethod::ErasureProxy { epsilon } => {
            let eps = match (epsilon, ch.kind()) {
                (Some(e), _) => *e,
                (None, ChannelKind::Qsc { epsilon } | ChannelKind::Qec { epsilon }) => rational_to_f64(epsilon),
                (None, _) => return Err(ConstructError::NoProxy),
            };
            erasure_params(m, eps)?
        }
        ConstructionMethod::GenieMc { trials, seed } => genie_mc_rank(field, m, ch, *trials, *seed)?,
    };
    let (info_set, repair) = select_closed(&scores, m, k);
    debug_assert!(check_condition_a(&info_set, m).is_ok());
    Ok(Construction { info_set, scores, repair })
}
