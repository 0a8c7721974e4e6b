use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fqpolar::construct::{construct_info_set, ConstructionMethod};
use fqpolar::oracle::{exact_ser, mc_ser, SerReport};
use fqpolar::sc::{sc_decode, sc_decode_distribution, TieRule};
use fqpolar::sim::{run_experiment, trial_rng, write_csv, write_gnuplot, write_json, ExperimentConfig};
use fqpolar::verify::{verify, Claim, VerifyMode};
use fqpolar::{Channel, ChannelConfig, CodeConfig, CodeSpec, Field, FieldElement, FieldSpec, Output};

const OK: u8 = 0;
const VALIDATION: u8 = 1;
const INTERNAL: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "fqpolar", version, about = "Polar codes over F_q: construction, SC decoding, exact and Monte Carlo SER")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Choose an information set closed under domination.
    Construct(ConstructArgs),
    /// Encode a message with G_n.
    Encode(EncodeArgs),
    /// SC-decode one received word.
    Decode(DecodeArgs),
    /// Exact per-index SER by enumerating all outputs.
    ExactSer(ExactSerArgs),
    /// Monte Carlo per-index SER with the all-zero codeword.
    McSer(McSerArgs),
    /// Run an experiment config and write per-index BER.
    Simulate(SimulateArgs),
    /// Check the SER symmetry claims on a small code.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct Out {
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Genie,
    Erasure,
    Manual,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[arg(long)]
    m: u32,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    channel: PathBuf,
    /// Field order; ignored when --field is given.
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Field spec JSON `{"p","s","modulus","alpha"}`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Defaults to erasure ranking for QEC/QSC and genie-aided otherwise.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Comma-separated indices for --method manual.
    #[arg(long, value_delimiter = ',')]
    info_set: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    code: PathBuf,
    /// JSON array of k information symbols or n message symbols.
    #[arg(long)]
    message: PathBuf,
    #[command(flatten)]
    out: Out,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TieArg {
    Lex,
    Random,
}

impl From<TieArg> for TieRule {
    fn from(t: TieArg) -> Self {
        match t {
            TieArg::Lex => TieRule::Lexicographic,
            TieArg::Random => TieRule::RandomUniform,
        }
    }
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    channel: PathBuf,
    /// JSON array of channel outputs.
    #[arg(long)]
    y: PathBuf,
    /// Emit the exact distribution over decoded codewords.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value = "random")]
    tie: TieArg,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct ExactSerArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    channel: PathBuf,
    /// JSON array of n message symbols (all-zero info symbols when omitted).
    #[arg(long)]
    message: Option<PathBuf>,
    #[command(flatten)]
    out: Out,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct McSerArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    out: Out,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Also write a gnuplot script reading the CSV output.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    code: PathBuf,
    #[arg(long)]
    channel: PathBuf,
    /// Comma-separated claims among 2,3,4,5,6,7,thm1.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,thm1")]
    lemmas: Vec<String>,
    #[arg(long, conflicts_with = "samples")]
    exhaustive: bool,
    /// Number of random received words (or messages) per claim.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: Out,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: &Out, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_text(out.out.as_deref(), text.as_bytes())
}

fn write_text(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

/// Seed recorded in the output when the caller did not pass one.
fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        warn!("no --seed given; using {s}");
        s
    })
}

/// A field element as an index or as polynomial coordinates.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ElementRepr {
    Index(usize),
    Coords(Vec<u32>),
}

fn parse_elements(field: &Field, raw: &[ElementRepr]) -> Result<Vec<FieldElement>> {
    raw.iter()
        .map(|r| match r {
            ElementRepr::Index(i) => Ok(field.from_index(*i)?),
            ElementRepr::Coords(c) => Ok(field.element(c)?),
        })
        .collect()
}

fn indices(x: &[FieldElement]) -> Vec<usize> {
    x.iter().map(|v| v.index()).collect()
}

fn load_code(path: &Path) -> Result<(CodeSpec, CodeConfig)> {
    let cfg: CodeConfig = read_json(path)?;
    let code = cfg.build().with_context(|| format!("invalid code in {}", path.display()))?;
    if let Err(w) = code.closure_witness() {
        warn!("information set is not closed under domination: {} is in A but {} (which dominates it) is not", w.member, w.dominator);
    }
    Ok((code, cfg))
}

fn load_channel(path: &Path, code: &CodeSpec) -> Result<(Channel, ChannelConfig)> {
    let cfg: ChannelConfig = read_json(path)?;
    let ch = cfg.build(code.field(), code.rate()).with_context(|| format!("invalid channel in {}", path.display()))?;
    Ok((ch, cfg))
}

#[derive(Serialize)]
struct ConstructedCode {
    #[serde(flatten)]
    code: CodeConfig,
    construction: Value,
}

fn construct(a: &ConstructArgs) -> Result<u8> {
    let spec = match &a.field {
        Some(p) => read_json::<FieldSpec>(p)?,
        None => FieldSpec::default_for(a.q)?,
    };
    let field = Field::new(spec)?;
    let ch_cfg: ChannelConfig = read_json(&a.channel)?;
    let n = 1u64.checked_shl(a.m).unwrap_or(u64::MAX);
    let ch = ch_cfg.build(&field, a.k as f64 / n as f64)?;
    let mut seed = None;
    let method = match a.method {
        Some(MethodArg::Genie) => {
            let s = resolve_seed(a.seed);
            seed = Some(s);
            ConstructionMethod::GenieMc { trials: a.trials, seed: s }
        }
        Some(MethodArg::Erasure) => match ConstructionMethod::default_for(&ch, a.trials, 0) {
            m @ (ConstructionMethod::ErasureExact | ConstructionMethod::ErasureProxy { .. }) => m,
            _ => bail!("erasure ranking needs a QEC or QSC channel"),
        },
        Some(MethodArg::Manual) => ConstructionMethod::Manual { info_set: a.info_set.clone() },
        None => match ConstructionMethod::default_for(&ch, a.trials, 0) {
            ConstructionMethod::GenieMc { trials, .. } => {
                let s = resolve_seed(a.seed);
                seed = Some(s);
                ConstructionMethod::GenieMc { trials, seed: s }
            }
            m => m,
        },
    };
    info!("constructing with {method:?}");
    let built = construct_info_set(&field, a.m, a.k, &ch, &method)?;
    let code = CodeSpec::new(field, a.m, &built.info_set, None)?;
    let doc = ConstructedCode {
        code: code.to_config(),
        construction: json!({
            "method": method,
            "channel": ch_cfg,
            "seed": seed,
            "scores": built.scores,
            "repair": built.repair,
        }),
    };
    emit(&a.out, &serde_json::to_value(doc)?)?;
    Ok(OK)
}

fn encode(a: &EncodeArgs) -> Result<u8> {
    let (code, cfg) = load_code(&a.code)?;
    let raw: Vec<ElementRepr> = read_json(&a.message)?;
    let symbols = parse_elements(code.field(), &raw)?;
    let u = if symbols.len() == code.k() && code.k() != code.n() { code.message(&symbols)? } else { symbols };
    let x = code.encode_checked(&u)?;
    emit(&a.out, &json!({ "code": cfg, "u": indices(&u), "x": indices(&x) }))?;
    Ok(OK)
}

fn decode(a: &DecodeArgs) -> Result<u8> {
    let (code, code_cfg) = load_code(&a.code)?;
    let (ch, ch_cfg) = load_channel(&a.channel, &code)?;
    let y: Vec<Output> = read_json(&a.y)?;
    if a.exact {
        let dist = sc_decode_distribution(&code, &ch, &y)?;
        emit(&a.out, &json!({ "code": code_cfg, "channel": ch_cfg, "y": y, "distribution": dist }))?;
        return Ok(OK);
    }
    let tie: TieRule = a.tie.into();
    let seed = match tie {
        TieRule::RandomUniform => Some(resolve_seed(a.seed)),
        TieRule::Lexicographic => a.seed,
    };
    let mut rng = trial_rng(seed.unwrap_or(0), 0);
    let d = sc_decode(&code, &ch, &y, tie, &mut rng)?;
    emit(
        &a.out,
        &json!({
            "code": code_cfg,
            "channel": ch_cfg,
            "tie": tie,
            "seed": seed,
            "y": y,
            "u_hat": indices(&d.message),
            "x_hat": indices(&d.codeword),
        }),
    )?;
    Ok(OK)
}

fn exact_ser_cmd(a: &ExactSerArgs) -> Result<u8> {
    let (code, code_cfg) = load_code(&a.code)?;
    let (ch, ch_cfg) = load_channel(&a.channel, &code)?;
    let message = match &a.message {
        Some(p) => parse_elements(code.field(), &read_json::<Vec<ElementRepr>>(p)?)?,
        None => code.frozen_vector().to_vec(),
    };
    let report = exact_ser(&code, &ch, &message)?;
    emit(
        &a.out,
        &json!({
            "code": code_cfg,
            "channel": ch_cfg,
            "message": indices(&message),
            "ser": report,
            "all_equal": report.all_equal(),
        }),
    )?;
    Ok(OK)
}

fn mc_ser_cmd(a: &McSerArgs) -> Result<u8> {
    let (code, code_cfg) = load_code(&a.code)?;
    let (ch, ch_cfg) = load_channel(&a.channel, &code)?;
    let seed = resolve_seed(a.seed);
    let report = mc_ser(&code, &ch, a.trials, seed)?;
    let header = json!({ "code": code_cfg, "channel": ch_cfg, "trials": a.trials, "seed": seed });
    match a.format {
        Format::Json => emit(&a.out, &json!({ "config": header, "ser": report }))?,
        Format::Csv => {
            let SerReport::MonteCarlo { errors, per_index, std_errors, .. } = &report else { unreachable!("Monte Carlo report") };
            let mut buf = Vec::new();
            writeln!(buf, "# config: {}", serde_json::to_string(&header)?)?;
            writeln!(buf, "# seed: {seed}")?;
            writeln!(buf, "index,ser,stderr,errors")?;
            for j in 0..per_index.len() {
                writeln!(buf, "{j},{},{},{}", per_index[j], std_errors[j], errors[j])?;
            }
            write_text(a.out.out.as_deref(), &buf)?;
        }
    }
    Ok(OK)
}

fn simulate(a: &SimulateArgs) -> Result<u8> {
    let cfg: ExperimentConfig = read_json(&a.config)?;
    let report = run_experiment(&cfg)?;
    let mut buf = Vec::new();
    match a.format {
        Format::Csv => write_csv(&report, &mut buf)?,
        Format::Json => write_json(&report, &mut buf)?,
    }
    fs::write(&a.out, &buf).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(plot) = &a.plot {
        let mut gp = Vec::new();
        write_gnuplot(&report, &a.out.to_string_lossy(), &mut gp)?;
        fs::write(plot, gp).with_context(|| format!("writing {}", plot.display()))?;
    }
    if let Err(e) = report.check_invariants() {
        eprintln!("invariant failure: {e}");
        return Ok(INTERNAL);
    }
    Ok(OK)
}

fn verify_cmd(a: &VerifyArgs) -> Result<u8> {
    let (code, code_cfg) = load_code(&a.code)?;
    let (ch, ch_cfg) = load_channel(&a.channel, &code)?;
    let claims = a.lemmas.iter().map(|s| s.parse::<Claim>()).collect::<Result<Vec<_>, _>>()?;
    let mode = match a.samples {
        Some(samples) if !a.exhaustive => VerifyMode::Sampled { samples, seed: resolve_seed(a.seed) },
        _ => VerifyMode::Exhaustive,
    };
    let reports = verify(&code, &ch, &claims, mode)?;
    for r in &reports {
        let tag = if r.passed() { "PASS" } else { "FAIL" };
        eprintln!("{tag} {} ({} cases): {}", r.claim, r.cases, r.claim.describe());
        if let Some(w) = &r.witness {
            eprintln!("  witness: {w}");
        }
    }
    emit(&a.out, &json!({ "code": code_cfg, "channel": ch_cfg, "mode": mode, "reports": reports }))?;
    let code = if reports.iter().any(|r| r.is_invariant_failure()) {
        INTERNAL
    } else if reports.iter().any(|r| !r.passed()) {
        VALIDATION
    } else {
        OK
    };
    Ok(code)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("building thread pool")?;
    }
    match &cli.cmd {
        Command::Construct(a) => construct(a),
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::ExactSer(a) => exact_ser_cmd(a),
        Command::McSer(a) => mc_ser_cmd(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { VALIDATION } else { OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(VALIDATION)
        }
    }
}
