//! Monte Carlo engine for per-index message and codeword error rates.
//!
//! Trial `t` draws everything it needs (message, noise, tie breaks) from
//! `ChaCha8Rng` seeded with `seed` on stream `t`, so tallies depend only on
//! the seed and never on how trials are split across shards.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::channel::{Channel, ChannelConfig, ChannelError, Output};
use crate::code::{transform, CodeConfig, CodeError, CodeSpec};
use crate::gf::FieldElement;
use crate::sc::{likelihood_matrix, Lexicographic, RandomTies, ScDecoder, TieRule};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("shard count must be at least 1")]
    NoShards,
    #[error("rate must lie in (0, 1], got {0}")]
    Rate(f64),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How a batch of trials is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub trials: u64,
    pub seed: u64,
    /// `None` uses one shard per worker thread.
    pub shards: Option<usize>,
    pub random_message: bool,
    pub tie: TieRule,
}

impl Default for TrialPlan {
    fn default() -> Self {
        TrialPlan { trials: 1, seed: 0, shards: None, random_message: false, tie: TieRule::RandomUniform }
    }
}

/// Raw error counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub trials: u64,
    pub message_errors: Vec<u64>,
    pub codeword_errors: Vec<u64>,
    pub word_errors: u64,
}

impl Tallies {
    fn zero(n: usize) -> Self {
        Tallies { trials: 0, message_errors: vec![0; n], codeword_errors: vec![0; n], word_errors: 0 }
    }

    fn merge(mut self, other: Tallies) -> Self {
        self.trials += other.trials;
        self.word_errors += other.word_errors;
        self.message_errors.iter_mut().zip(other.message_errors).for_each(|(a, b)| *a += b);
        self.codeword_errors.iter_mut().zip(other.codeword_errors).for_each(|(a, b)| *a += b);
        self
    }
}

/// The generator owned by trial `index`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Contiguous trial ranges, one per shard.
fn shard_ranges(trials: u64, shards: usize) -> Vec<(u64, u64)> {
    let shards = shards.max(1) as u64;
    (0..shards).map(|s| (trials * s / shards, trials * (s + 1) / shards)).filter(|(a, b)| a < b).collect()
}

struct Worker {
    dec: ScDecoder<f64>,
    u: Vec<FieldElement>,
    x: Vec<FieldElement>,
    y: Vec<Output>,
}

impl Worker {
    fn trial(&mut self, code: &CodeSpec, ch: &Channel, plan: &TrialPlan, index: u64, tally: &mut Tallies) {
        let mut rng = trial_rng(plan.seed, index);
        let q = code.field().order();
        self.u.copy_from_slice(code.frozen_vector());
        if plan.random_message {
            for &i in code.info_set() {
                self.u[i] = FieldElement(rng.random_range(0..q) as u8);
            }
        }
        self.x.copy_from_slice(&self.u);
        transform(code.field(), &mut self.x);
        for (yi, &xi) in self.y.iter_mut().zip(&self.x) {
            *yi = ch.sample(xi, &mut rng);
        }
        let llh = likelihood_matrix::<f64>(ch, &self.y).expect("sampled outputs belong to the channel");
        let out = match plan.tie {
            TieRule::RandomUniform => self.dec.decode(&llh, &mut RandomTies(&mut rng)),
            TieRule::Lexicographic => self.dec.decode(&llh, &mut Lexicographic),
        };
        let mut word_error = false;
        for j in 0..self.u.len() {
            if out.message[j] != self.u[j] {
                tally.message_errors[j] += 1;
            }
            if out.codeword[j] != self.x[j] {
                tally.codeword_errors[j] += 1;
                word_error = true;
            }
        }
        tally.word_errors += word_error as u64;
        tally.trials += 1;
    }
}

/// Runs `plan.trials` independent transmissions. With `random_message`
/// unset the frozen vector is sent with zero information symbols, which is
/// the all-zero codeword when the frozen values are zero.
pub fn run_trials(code: &CodeSpec, ch: &Channel, plan: &TrialPlan) -> Tallies {
    let n = code.n();
    let shards = plan.shards.unwrap_or_else(rayon::current_num_threads);
    shard_ranges(plan.trials, shards)
        .into_par_iter()
        .map(|(start, end)| {
            let mut w = Worker {
                dec: ScDecoder::new(code),
                u: vec![FieldElement::ZERO; n],
                x: vec![FieldElement::ZERO; n],
                y: vec![Output::Symbol(0); n],
            };
            let mut tally = Tallies::zero(n);
            for t in start..end {
                w.trial(code, ch, plan, t, &mut tally);
            }
            tally
        })
        .reduce(|| Tallies::zero(n), Tallies::merge)
}

/// Which summaries a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSet {
    pub message_ber: bool,
    pub codeword_ber: bool,
    pub word_error_rate: bool,
}

impl Default for OutputSet {
    fn default() -> Self {
        OutputSet { message_ber: true, codeword_ber: true, word_error_rate: true }
    }
}

/// JSON experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: CodeConfig,
    pub channel: ChannelConfig,
    pub trials: u64,
    pub seed: u64,
    /// Execution layout only; results do not depend on it, so reports omit it.
    #[serde(default = "default_shards", skip_serializing)]
    pub shards: usize,
    #[serde(default)]
    pub outputs: OutputSet,
    #[serde(default)]
    pub random_message: bool,
    #[serde(default)]
    pub tie: TieRule,
}

fn default_shards() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        if self.shards == 0 {
            return Err(SimError::NoShards);
        }
        Ok(())
    }

    pub fn build(&self) -> Result<(CodeSpec, Channel), SimError> {
        self.validate()?;
        let code = self.code.build()?;
        let ch = self.channel.build(code.field(), code.rate())?;
        Ok((code, ch))
    }

    pub fn plan(&self) -> TrialPlan {
        TrialPlan { trials: self.trials, seed: self.seed, shards: Some(self.shards), random_message: self.random_message, tie: self.tie }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
}

impl Summary {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Option<Summary> {
        let count = values.clone().count();
        if count == 0 {
            return None;
        }
        Some(Summary {
            max: values.clone().fold(f64::NEG_INFINITY, f64::max),
            min: values.clone().fold(f64::INFINITY, f64::min),
            mean: values.sum::<f64>() / count as f64,
        })
    }
}

/// Per-index error rates from one experiment. Message rates are reported
/// for every index; frozen indices are identically zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub config: ExperimentConfig,
    pub n: usize,
    pub k: usize,
    pub info_set: Vec<usize>,
    pub tallies: Tallies,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message_ber: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message_stderr: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message_summary: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub codeword_ber: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub codeword_stderr: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub codeword_summary: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub word_error_rate: Option<f64>,
}

fn rates(errors: &[u64], trials: u64) -> (Vec<f64>, Vec<f64>) {
    let t = trials as f64;
    let p: Vec<f64> = errors.iter().map(|&e| e as f64 / t).collect();
    let se = p.iter().map(|&p| (p * (1.0 - p) / t).sqrt()).collect();
    (p, se)
}

impl BerReport {
    pub fn from_tallies(config: ExperimentConfig, code: &CodeSpec, tallies: Tallies) -> Self {
        let o = config.outputs;
        let (mb, ms) = rates(&tallies.message_errors, tallies.trials);
        let (cb, cs) = rates(&tallies.codeword_errors, tallies.trials);
        let message_summary = Summary::of(code.info_set().iter().map(|&i| mb[i]));
        let codeword_summary = Summary::of(cb.iter().copied());
        let wer = tallies.word_errors as f64 / tallies.trials as f64;
        BerReport {
            n: code.n(),
            k: code.k(),
            info_set: code.info_set().to_vec(),
            message_ber: o.message_ber.then_some(mb),
            message_stderr: o.message_ber.then_some(ms),
            message_summary: message_summary.filter(|_| o.message_ber),
            codeword_ber: o.codeword_ber.then_some(cb),
            codeword_stderr: o.codeword_ber.then_some(cs),
            codeword_summary: codeword_summary.filter(|_| o.codeword_ber),
            word_error_rate: o.word_error_rate.then_some(wer),
            config,
            tallies,
        }
    }

    /// Tally conservation and frozen-index message errors.
    pub fn check_invariants(&self) -> Result<(), String> {
        let t = &self.tallies;
        if t.trials != self.config.trials {
            return Err(format!("ran {} trials, configured {}", t.trials, self.config.trials));
        }
        if let Some(j) = t.message_errors.iter().chain(&t.codeword_errors).position(|&e| e > t.trials) {
            return Err(format!("index {} has more errors than trials", j % self.n));
        }
        if !self.config.random_message || self.config.code.frozen_values.is_none() {
            for i in (0..self.n).filter(|i| !self.info_set.contains(i)) {
                if t.message_errors[i] != 0 {
                    return Err(format!("frozen index {i} recorded {} message errors", t.message_errors[i]));
                }
            }
        }
        if t.word_errors > t.trials {
            return Err("more word errors than trials".into());
        }
        Ok(())
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<BerReport, SimError> {
    let (code, ch) = cfg.build()?;
    Ok(run_with(cfg.clone(), &code, &ch))
}

/// [`run_experiment`] with a prebuilt code and channel.
pub fn run_with(cfg: ExperimentConfig, code: &CodeSpec, ch: &Channel) -> BerReport {
    let tallies = run_trials(code, ch, &cfg.plan());
    BerReport::from_tallies(cfg, code, tallies)
}

/// BPSK over AWGN at the given `Eb/N0` (dB) for a code of rate `rate`.
pub fn ebno_to_channel(ebno_db: f64, rate: f64) -> Result<Channel, SimError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(SimError::Rate(rate));
    }
    Ok(Channel::awgn_bpsk(Channel::noise_variance(ebno_db, rate).sqrt())?)
}

/// Pearson chi-square test that all indices share one error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homogeneity {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// `sum_j (e_j - T p)^2 / (T p (1 - p))` against chi-square with `n - 1`
/// degrees of freedom, `p` the pooled rate.
pub fn homogeneity_test(errors: &[u64], trials: u64) -> Homogeneity {
    let n = errors.len();
    let t = trials as f64;
    let pooled = errors.iter().sum::<u64>() as f64 / (t * n as f64);
    let df = (n.max(2) - 1) as f64;
    if pooled <= 0.0 || pooled >= 1.0 {
        return Homogeneity { statistic: 0.0, df, p_value: 1.0 };
    }
    let expected = t * pooled;
    let var = expected * (1.0 - pooled);
    let statistic: f64 = errors.iter().map(|&e| (e as f64 - expected).powi(2) / var).sum();
    let p_value = ChiSquared::new(df).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    Homogeneity { statistic, df, p_value }
}

/// CSV with a `#` header carrying the resolved config, then one row per index.
pub fn write_csv<W: Write>(report: &BerReport, mut w: W) -> Result<(), SimError> {
    writeln!(w, "# config: {}", serde_json::to_string(&report.config)?)?;
    writeln!(w, "# seed: {}", report.config.seed)?;
    writeln!(w, "# trials: {}", report.tallies.trials)?;
    writeln!(w, "index,info,message_ber,codeword_ber,message_stderr,codeword_stderr,message_errors,codeword_errors")?;
    let cell = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| v[i].to_string()).unwrap_or_default();
    for i in 0..report.n {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            i,
            report.info_set.contains(&i) as u8,
            cell(&report.message_ber, i),
            cell(&report.codeword_ber, i),
            cell(&report.message_stderr, i),
            cell(&report.codeword_stderr, i),
            report.tallies.message_errors[i],
            report.tallies.codeword_errors[i],
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(report: &BerReport, w: W) -> Result<(), SimError> {
    serde_json::to_writer_pretty(w, report)?;
    Ok(())
}

/// Gnuplot script drawing message and codeword BER per index side by side
/// from the CSV written by [`write_csv`].
pub fn write_gnuplot<W: Write>(report: &BerReport, csv_path: &str, mut w: W) -> Result<(), SimError> {
    let title = |name: &str, s: &Option<Summary>| match s {
        Some(s) => format!("{name} (max {:.3e}, min {:.3e})", s.max, s.min),
        None => name.to_string(),
    };
    writeln!(w, "# config: {}", serde_json::to_string(&report.config)?)?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set terminal pngcairo size 1400,500")?;
    writeln!(w, "set output 'ber.png'")?;
    writeln!(w, "set multiplot layout 1,2")?;
    writeln!(w, "set xlabel 'index'")?;
    writeln!(w, "set ylabel 'BER'")?;
    writeln!(w, "set xrange [0:{}]", report.n.saturating_sub(1))?;
    writeln!(w, "set title '{}'", title("message bits", &report.message_summary))?;
    writeln!(w, "plot '{csv_path}' using 1:($2 == 1 ? $3 : 1/0) every ::1 with impulses notitle")?;
    writeln!(w, "set title '{}'", title("codeword bits", &report.codeword_summary))?;
    writeln!(w, "plot '{csv_path}' using 1:4 every ::1 with impulses notitle")?;
    writeln!(w, "unset multiplot")?;
    Ok(())
}
