//! Command-line front end: wires channels, region bounds, gain curves,
//! Gaussian figures, covering experiments and codec simulations to
//! config files and CSV outputs. Every CSV is accompanied by a manifest
//! JSON recording the invocation, seed, tool version and wall clock.
//!
//! Exit codes: 0 success, 1 configuration/file error, 2 numerical
//! precondition failure (for example an output scale outside the
//! solvable bracket, or a search budget overrun).

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cfmac::channel::DiscreteMac;
use cfmac::codec::{self, CodeSpec, FailureClass};
use cfmac::covering::{covering_phase_curve, CoveringError};
use cfmac::gain::{achievable_sum_rate, cstar_test, GainError, MixtureFamily};
use cfmac::gaussian2::figure2_data;
use cfmac::region::{
    conferencing_outer, forwarding_bound, inner_bound, outer_bound, CfConfig, CfSplit,
    CoordinationDist, RegionError,
};
use cfmac::Pmf;

#[derive(Parser)]
#[command(name = "cfmac", version, about = "Facilitator-aided MAC toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a channel JSON file.
    Validate { channel: PathBuf },
    /// Export a rate-region constraint list as CSV.
    Region(RegionArgs),
    /// Evaluate the sum-rate gain curve of a dependence witness.
    Gain(GainArgs),
    /// Two-user Gaussian gain table (full region, forwarding, sqrt term).
    Gaussian2(Gaussian2Args),
    /// Covering phase-curve Monte Carlo from a JSON experiment config.
    Covering(ExperimentArgs),
    /// End-to-end codec Monte Carlo from a JSON experiment config.
    Codec(ExperimentArgs),
}

#[derive(Args)]
struct RegionArgs {
    /// Channel file path, or "bemac" for the built-in adder channel.
    #[arg(long)]
    channel: String,
    /// outer | forwarding | conferencing | inner
    #[arg(long, default_value = "outer")]
    mode: String,
    /// Facilitator input capacities, comma separated.
    #[arg(long, value_delimiter = ',')]
    c_in: Option<Vec<f64>>,
    /// Facilitator output capacities, comma separated.
    #[arg(long, value_delimiter = ',')]
    c_out: Option<Vec<f64>>,
    /// Forwarding rates c0 (defaults to c_in), comma separated.
    #[arg(long, value_delimiter = ',')]
    c0: Option<Vec<f64>>,
    /// Coordination rates cd (inner mode), comma separated.
    #[arg(long, value_delimiter = ',')]
    cd: Option<Vec<f64>>,
    /// Conferencing capacity matrix, rows separated by ';'.
    #[arg(long)]
    c_matrix: Option<String>,
    /// Distribution JSON (axis_sizes + mass); defaults to the best
    /// product input with a degenerate common part.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Also export the disjunctive family JSON (inner mode).
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GainArgs {
    /// Channel file path, or "bemac".
    #[arg(long)]
    channel: String,
    /// Facilitator input capacities, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,1")]
    c_in: Vec<f64>,
    /// Output scales to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    h: Vec<f64>,
    /// Slack of the scale-matching equation.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Direction of the output budget (defaults to the uniform unit
    /// vector), comma separated.
    #[arg(long, value_delimiter = ',')]
    v: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Gaussian2Args {
    #[arg(long, default_value_t = 100.0)]
    gamma1: f64,
    #[arg(long, default_value_t = 100.0)]
    gamma2: f64,
    /// Output-budget grid "start:end:step".
    #[arg(long)]
    grid: GridSpec,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Grid resolution per region parameter.
    #[arg(long, default_value_t = 64)]
    param_grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| e.to_string())).collect()
}

/// Inclusive arithmetic grid parsed from "start:end:step".
#[derive(Clone)]
struct GridSpec(Vec<f64>);

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_grid(s).map(GridSpec)
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("grid must be start:end:step".into());
    }
    let start: f64 = parts[0].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let end: f64 = parts[1].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    let step: f64 = parts[2].parse().map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if step <= 0.0 || end < start {
        return Err("grid must satisfy start <= end, step > 0".into());
    }
    let mut out = Vec::new();
    let mut ix = 0usize;
    loop {
        let v = start + step * ix as f64;
        if v > end + 1e-12 {
            break;
        }
        out.push(v);
        ix += 1;
    }
    Ok(out)
}

/// Failure with the exit code it maps to.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::config(format!("json error: {e}"))
    }
}

impl From<cfmac::channel::ChannelError> for CliError {
    fn from(e: cfmac::channel::ChannelError) -> Self {
        CliError::config(format!("channel error: {e}"))
    }
}

impl From<cfmac::info::InfoError> for CliError {
    fn from(e: cfmac::info::InfoError) -> Self {
        CliError::config(format!("distribution error: {e}"))
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::ZetaNotPositive { .. }
            | RegionError::EmptyRegion
            | RegionError::Unbounded
            | RegionError::CandidateExplosion { .. } => CliError::numeric(format!("region: {e}")),
            other => CliError::config(format!("region: {other}")),
        }
    }
}

impl From<GainError> for CliError {
    fn from(e: GainError) -> Self {
        match e {
            GainError::NoRoot { .. }
            | GainError::ZetaNonPositive { .. }
            | GainError::CrossRatePrecondition { .. }
            | GainError::AscentNotConverged { .. }
            | GainError::PositivityFailed { .. }
            | GainError::ConferencingInapplicable => CliError::numeric(format!("gain: {e}")),
            other => CliError::config(format!("gain: {other}")),
        }
    }
}

impl From<CoveringError> for CliError {
    fn from(e: CoveringError) -> Self {
        match e {
            CoveringError::BudgetExceeded { .. } => CliError::numeric(format!("covering: {e}")),
            other => CliError::config(format!("covering: {other}")),
        }
    }
}

impl From<codec::CodecError> for CliError {
    fn from(e: codec::CodecError) -> Self {
        match e {
            codec::CodecError::MemoryBudget { .. } | codec::CodecError::CoordinationBudget { .. } => {
                CliError::numeric(format!("codec: {e}"))
            }
            other => CliError::config(format!("codec: {other}")),
        }
    }
}

/// Reproducibility sidecar written next to every CSV.
#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    argv: Vec<String>,
    config_path: Option<String>,
    output_path: String,
    seed: u64,
    tool_version: String,
    wall_clock_ms: u128,
}

fn write_output(out: &Path, csv: &str, manifest: RunManifest) -> Result<(), CliError> {
    std::fs::write(out, csv)?;
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    std::fs::write(PathBuf::from(manifest_path), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn manifest(subcommand: &str, config: Option<&Path>, out: &Path, seed: u64, start: Instant) -> RunManifest {
    RunManifest {
        subcommand: subcommand.to_string(),
        argv: std::env::args().collect(),
        config_path: config.map(|p| p.to_string_lossy().into_owned()),
        output_path: out.to_string_lossy().into_owned(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_ms: start.elapsed().as_millis(),
    }
}

fn load_channel(spec: &str) -> Result<DiscreteMac, CliError> {
    if spec == "bemac" {
        Ok(DiscreteMac::binary_erasure())
    } else {
        Ok(DiscreteMac::load(spec)?)
    }
}

#[derive(Deserialize)]
struct PmfFile {
    axis_sizes: Vec<usize>,
    mass: Vec<f64>,
    #[serde(default)]
    sd_mask: u32,
}

fn load_pmf(path: &Path) -> Result<(Pmf, u32), CliError> {
    let text = std::fs::read_to_string(path)?;
    let file: PmfFile = serde_json::from_str(&text)?;
    Ok((Pmf::new(file.axis_sizes, file.mass)?, file.sd_mask))
}

/// Best product input wrapped as `(U0, X..)` with a degenerate `U0`.
fn default_u0_product(mac: &DiscreteMac, seed: u64) -> Result<Pmf, CliError> {
    let (p, _) = cfmac::gain::max_product_mi(mac, 6, seed)?;
    let mut sizes = vec![1usize];
    sizes.extend(p.axis_sizes());
    Ok(Pmf::new(sizes, p.mass().to_vec())?)
}

fn run_region(args: &RegionArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mac = load_channel(&args.channel)?;
    let k = mac.k();
    let c_in = args.c_in.clone().unwrap_or_else(|| vec![0.0; k]);
    let c_out = args.c_out.clone().unwrap_or_else(|| vec![0.0; k]);
    if c_in.len() != k || c_out.len() != k {
        return Err(CliError::config("c_in/c_out must have one entry per encoder"));
    }
    let cfg = CfConfig::new(c_in.clone(), c_out.clone())?;

    let csv = match args.mode.as_str() {
        "outer" | "forwarding" | "conferencing" => {
            let p = match &args.dist {
                Some(path) => load_pmf(path)?.0,
                None => default_u0_product(&mac, args.seed)?,
            };
            let region = match args.mode.as_str() {
                "outer" => outer_bound(&mac, &cfg, &p)?,
                "forwarding" => {
                    let c0 = args.c0.clone().unwrap_or_else(|| c_in.clone());
                    forwarding_bound(&p, &c0, &mac)?
                }
                _ => {
                    let matrix_text = args
                        .c_matrix
                        .as_ref()
                        .ok_or_else(|| CliError::config("conferencing mode needs --c-matrix"))?;
                    let matrix: Vec<Vec<f64>> = matrix_text
                        .split(';')
                        .map(parse_f64_list)
                        .collect::<Result<_, _>>()
                        .map_err(CliError::config)?;
                    conferencing_outer(&mac, &matrix, &p)?
                }
            };
            region.to_csv()
        }
        "inner" => {
            let (pmf, sd_mask) = match &args.dist {
                Some(path) => load_pmf(path)?,
                None => {
                    let p = default_u0_product(&mac, args.seed)?;
                    let mut sizes = vec![1usize; k + 1];
                    sizes.extend(&p.axis_sizes()[1..=k]);
                    (Pmf::new(sizes, p.mass().to_vec())?, 0)
                }
            };
            let dist = CoordinationDist::new(pmf, k, sd_mask)?;
            let split = CfSplit::new(
                args.c0.clone().unwrap_or_else(|| vec![0.0; k]),
                args.cd.clone().unwrap_or_else(|| vec![0.0; k]),
            );
            let inner = inner_bound(&dist, &split, &cfg, &mac)?;
            if let Some(json_path) = &args.json_out {
                std::fs::write(json_path, inner.to_json())?;
            }
            let ones = vec![1.0; k];
            let (sum, argmax) = inner.max_weighted_sum(&ones)?;
            let mut csv = String::from("quantity,value\n");
            let _ = writeln!(csv, "sum_bound,{}", inner.sum_bound);
            let _ = writeln!(csv, "max_sum_rate,{sum}");
            for (j, r) in argmax.iter().enumerate() {
                let _ = writeln!(csv, "argmax_r{},{r}", j + 1);
            }
            csv
        }
        other => return Err(CliError::config(format!("unknown region mode '{other}'"))),
    };
    write_output(&args.out, &csv, manifest("region", None, &args.out, args.seed, start))
}

fn run_gain(args: &GainArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mac = load_channel(&args.channel)?;
    let k = mac.k();
    if args.c_in.len() != k {
        return Err(CliError::config("c_in must have one entry per encoder"));
    }
    let direction = args.v.clone().unwrap_or_else(|| vec![1.0 / (k as f64).sqrt(); k]);
    let witness = cstar_test(&mac)?
        .ok_or_else(|| CliError::numeric("gain: channel admits no dependence witness"))?;
    let fam = MixtureFamily::new(&mac, &witness, &args.c_in, direction, args.eps)?;
    let cfg = CfConfig::new(args.c_in.clone(), vec![f64::INFINITY; k])?;
    let mut csv = String::from("h,lambda_star,r_sum_bits,gain_bits,slope_ratio\n");
    for &h in &args.h {
        let pt = achievable_sum_rate(&fam, &mac, &cfg, h)?;
        let _ = writeln!(csv, "{},{},{},{},{}", pt.h, pt.lambda_star, pt.r_sum, pt.gain, pt.slope_ratio);
    }
    write_output(&args.out, &csv, manifest("gain", None, &args.out, args.seed, start))
}

fn run_gaussian2(args: &Gaussian2Args) -> Result<(), CliError> {
    let start = Instant::now();
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(CliError::config("alpha must lie in [0, 1]"));
    }
    if args.param_grid < 50 {
        return Err(CliError::config("param grid resolution must be at least 50"));
    }
    let rows = figure2_data(args.gamma1, args.gamma2, &args.grid.0, args.param_grid);
    let mut csv = String::from("c_out,full_gain_bits,forwarding_gain_bits,sqrt_term_bits\n");
    for row in rows {
        let _ = writeln!(csv, "{},{},{},{}", row.c_out, row.full_gain, row.forwarding_gain, row.sqrt_term);
    }
    write_output(&args.out, &csv, manifest("gaussian2", None, &args.out, args.seed, start))
}

#[derive(Deserialize)]
struct CoveringFile {
    distribution: PmfFile,
    n: usize,
    delta: f64,
    rates: Vec<Vec<f64>>,
    trials: usize,
    seed: u64,
}

fn run_covering(args: &ExperimentArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.config)?;
    let file: CoveringFile = serde_json::from_str(&text)?;
    let base = Pmf::new(file.distribution.axis_sizes, file.distribution.mass)?;
    let points = covering_phase_curve(&base, file.n, file.delta, &file.rates, file.trials, file.seed)?;
    let mut csv = String::from(
        "sum_rate,rates,success,wilson_lo,wilson_hi,direct_threshold,converse_threshold\n",
    );
    for p in points {
        let rates = p.rates.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            p.sum_rate, rates, p.success, p.wilson_lo, p.wilson_hi, p.direct_threshold, p.converse_threshold
        );
    }
    write_output(&args.out, &csv, manifest("covering", Some(&args.config), &args.out, file.seed, start))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelSpec {
    Name(String),
    Inline { k: usize, input_sizes: Vec<usize>, output_size: usize, transition: Vec<f64> },
}

#[derive(Deserialize)]
struct CodecFile {
    channel: ChannelSpec,
    rates: Vec<f64>,
    n_values: Vec<usize>,
    trials: usize,
    seed: u64,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    c_in: Option<Vec<f64>>,
    #[serde(default)]
    c0: Option<Vec<f64>>,
    #[serde(default)]
    cd: Option<Vec<f64>>,
    #[serde(default)]
    dist: Option<PmfFile>,
}

fn default_delta() -> f64 {
    0.1
}

fn run_codec(args: &ExperimentArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let text = std::fs::read_to_string(&args.config)?;
    let file: CodecFile = serde_json::from_str(&text)?;
    let mac = match &file.channel {
        ChannelSpec::Name(name) => load_channel(name)?,
        ChannelSpec::Inline { k, input_sizes, output_size, transition } => {
            if *k != input_sizes.len() {
                return Err(CliError::config("inline channel: k does not match input_sizes"));
            }
            DiscreteMac::new(input_sizes.clone(), *output_size, transition.clone())?
        }
    };
    let k = mac.k();
    let dist = match &file.dist {
        Some(pf) => CoordinationDist::new(Pmf::new(pf.axis_sizes.clone(), pf.mass.clone())?, k, pf.sd_mask)?,
        None => {
            let inputs: Vec<Pmf> = mac.input_sizes().iter().map(|&n| Pmf::uniform(vec![n])).collect();
            CoordinationDist::no_cooperation(&inputs)?
        }
    };
    let split = CfSplit::new(
        file.c0.clone().unwrap_or_else(|| vec![0.0; k]),
        file.cd.clone().unwrap_or_else(|| vec![0.0; k]),
    );
    let c_in = file.c_in.clone().unwrap_or_else(|| vec![0.0; k]);

    let mut csv =
        String::from("n,sum_rate,p_hat,wilson_lo,wilson_hi,cost,enc_typ,dec_typ,wrong,wrong_detail\n");
    for &n in &file.n_values {
        let spec = CodeSpec {
            mac: mac.clone(),
            dist: dist.clone(),
            split: split.clone(),
            c_in: c_in.clone(),
            rates: file.rates.clone(),
            n,
            seed: file.seed,
            delta: file.delta,
        };
        let est = codec::estimate_error(&spec, file.trials)?;
        let mut cost = 0usize;
        let mut enc = 0usize;
        let mut dec = 0usize;
        let mut wrong = 0usize;
        let mut detail = Vec::new();
        for (class, count) in &est.histogram {
            match class {
                FailureClass::Cost => cost += count,
                FailureClass::EncoderTypicality => enc += count,
                FailureClass::DecodeTypicality => dec += count,
                FailureClass::WrongMessage { s_mask, t_mask } => {
                    wrong += count;
                    detail.push(format!("S={s_mask:#x}/T={t_mask:#x}:{count}"));
                }
            }
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            n,
            file.rates.iter().sum::<f64>(),
            est.p_hat,
            est.wilson_lo,
            est.wilson_hi,
            cost,
            enc,
            dec,
            wrong,
            detail.join(";")
        );
    }
    write_output(&args.out, &csv, manifest("codec", Some(&args.config), &args.out, file.seed, start))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { channel } => {
            let mac = DiscreteMac::load(channel)?;
            mac.validate()?;
            println!("ok: {} encoders, output alphabet {}", mac.k(), mac.output_size());
            Ok(())
        }
        Command::Region(args) => run_region(args),
        Command::Gain(args) => run_gain(args),
        Command::Gaussian2(args) => run_gaussian2(args),
        Command::Covering(args) => run_covering(args),
        Command::Codec(args) => run_codec(args),
    }
}

fn main() {
    if let Ok(threads) = std::env::var("CFMAC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
