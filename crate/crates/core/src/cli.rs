//! Command-line front end.
//!
//! Every flag has a config-file key (`key=value`, `#` comments); flags win
//! over the file. Exit codes: 0 success, 1 runtime failure, 2 usage or
//! configuration error, 3 a requested audit found a violated property.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::adversary::{
    audit_table, binding_audit, eigenstructure_audit, fmt_string, orthogonality_audit, run_cheat,
    CheatKind, CheatStrategy, OpenRule, ShiftSelection, EXHAUSTIVE_EIGEN_MAX_N,
};
use crate::bounds::{
    alpha_for_target, binding_bound_exact, binding_bound_simple, concealing_bound, epsilons_full,
    f_alpha_bound_log2, plan, plan_table, thirdterm_holds, CodeCandidate, CodeFamily,
    SchemeConstants,
};
use crate::codes::{
    gv_rate, parse_code_file, write_code_file, DistanceStatus, QaryCode, DEFAULT_DISTANCE_BUDGET,
};
use crate::engine::{
    honest_campaign, run_session, suggest_threshold, write_transcript, ChannelModel, SessionInput,
};
use crate::error::{Error, Result};
use crate::linalg::{EigenConfig, Limits};
use crate::report::{fmt_report, Table};
use crate::scheme::{
    bb84_scheme, computational_scheme, parse_scheme_file, six_state_scheme, EncodingScheme,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VIOLATION: i32 = 3;

pub const SEED_ENV: &str = "QBSC_SEED";

const DEFAULT_TRIALS: u64 = 10_000;
const DEFAULT_SAMPLES: u64 = 1_000;
const DEFAULT_LENGTHS: &str = "100,1000,10000,100000";

#[derive(Parser, Debug)]
#[command(
    name = "qbsc",
    version,
    about = "Quantum bit-string commitment simulator and bound calculator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate alpha, eps1/eps2, the binding bounds, the code inequality and concealment
    Bounds(Flags),
    /// Search code families for the smallest feasible parameter set
    Plan(Flags),
    /// Run honest sessions and write transcripts
    Run(Flags),
    /// Monte Carlo cheating campaign
    Attack(Flags),
    /// Brute-force optimal cheat value lambda_max(Q) against the bounds
    Verify(Flags),
    /// Overlap, eigenstructure and norm audits
    Audit(Flags),
    /// Construct and inspect codes
    Codes(Flags),
}

#[derive(clap::Args, Debug, Default, Clone)]
struct Flags {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the merged configuration and exit
    #[arg(long)]
    dump_config: bool,
    /// bb84, six-state or computational:<D>
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scheme_file: Option<PathBuf>,
    /// rep:q=4,N=3 | rs:q=5,N=4,k=2 | rl:q=4,N=10,k=3,seed=1 | external:q=..,N=..,k=..,d=.. | file:<path>
    #[arg(long)]
    code: Option<String>,
    /// Message A, symbols separated by ',' or ':'
    #[arg(long = "A")]
    message: Option<String>,
    /// Strings separated by ',', symbols within a string by ':'
    #[arg(long)]
    strings: Option<String>,
    #[arg(long)]
    alpha: Option<u64>,
    /// Accepts 2^k literals
    #[arg(long)]
    r: Option<String>,
    /// Accepts 2^-k literals
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    l: Option<u64>,
    #[arg(long = "D")]
    dim: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long = "N")]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    /// Comma list of gv, repetition, rs
    #[arg(long)]
    family: Option<String>,
    /// Comma list of lengths or a..b ranges
    #[arg(long)]
    lengths: Option<String>,
    #[arg(long)]
    p_loss: Option<String>,
    #[arg(long)]
    p_depol: Option<String>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    samples: Option<u64>,
    /// honest | wrong | superposition | mixture
    #[arg(long)]
    strategy: Option<String>,
    /// best, or a string to open
    #[arg(long)]
    open: Option<String>,
    /// Comma list of weights (mixture) or real amplitudes (superposition)
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    /// Primary output file (transcript, code file)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV output file, '-' for stdout
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `2^-10`, `2^10`, `1e5` and plain decimals.
pub fn parse_number(text: &str) -> Result<f64> {
    let s = text.trim();
    let bad = || Error::Config(format!("cannot parse number '{text}'"));
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: f64 = base.trim().parse().map_err(|_| bad())?;
            let exp = exp.trim();
            match exp.parse::<i32>() {
                Ok(e) => base.powi(e),
                Err(_) => base.powf(exp.parse::<f64>().map_err(|_| bad())?),
            }
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// Integer that may be written as `1e5` or `10^5`.
pub fn parse_count(text: &str) -> Result<u64> {
    if let Ok(v) = text.trim().parse::<u64>() {
        return Ok(v);
    }
    let v = parse_number(text)?;
    if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(Error::Config(format!(
            "'{text}' is not a nonnegative integer"
        )));
    }
    Ok(v as u64)
}

/// A message: symbols separated by ',' or ':'.
pub fn parse_message(text: &str) -> Result<Vec<usize>> {
    let out: Vec<usize> = text
        .split([',', ':'])
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad symbol '{s}' in message '{text}'")))
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config("empty message".into()));
    }
    Ok(out)
}

/// Strings separated by ',', symbols within a string by ':'.
pub fn parse_strings(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(',')
        .map(|chunk| {
            chunk
                .split(':')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad symbol '{s}' in strings '{text}'")))
                })
                .collect()
        })
        .collect()
}

fn parse_lengths(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (parse_count(a)?, parse_count(b)?);
                if a > b {
                    return Err(Error::Config(format!("empty range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_count(part)?),
        }
    }
    Ok(out)
}

fn parse_list_f64(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_number).collect()
}

/// Merged settings from the config file and flags. Numeric literals are
/// kept as written so that a dumped config reads back identically.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub scheme_file: Option<PathBuf>,
    pub code: Option<String>,
    pub message: Option<String>,
    pub strings: Option<String>,
    pub alpha: Option<u64>,
    pub r: Option<String>,
    pub eps: Option<String>,
    pub l: Option<u64>,
    pub dim: Option<u64>,
    pub q: Option<u64>,
    pub beta: Option<String>,
    pub n: Option<String>,
    pub k: Option<String>,
    pub d: Option<String>,
    pub delta: Option<String>,
    pub rate: Option<String>,
    pub family: Option<String>,
    pub lengths: Option<String>,
    pub p_loss: Option<String>,
    pub p_depol: Option<String>,
    pub t: Option<u64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub samples: Option<u64>,
    pub strategy: Option<String>,
    pub open: Option<String>,
    pub weights: Option<String>,
    pub budget: Option<u64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

macro_rules! config_keys {
    ($($field:ident => $key:literal),* $(,)?) => {
        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
                match key {
                    $($key => {
                        self.$field = Some(FromStr::from_str(value).map_err(|_| {
                            Error::parse(line, format!("bad value '{value}' for {key}"))
                        })?);
                    })*
                    other => return Err(Error::parse(line, format!("unknown key '{other}'"))),
                }
                Ok(())
            }

            fn entries(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(if let Some(v) = &self.$field {
                    out.push(($key, display_value(v)));
                })*
                out
            }

            /// Values set in `other` replace ours.
            pub fn overlay(mut self, other: RunConfig) -> RunConfig {
                $(if other.$field.is_some() {
                    self.$field = other.$field;
                })*
                self
            }
        }
    };
}

config_keys! {
    preset => "preset",
    scheme_file => "scheme_file",
    code => "code",
    message => "A",
    strings => "strings",
    alpha => "alpha",
    r => "r",
    eps => "eps",
    l => "l",
    dim => "D",
    q => "q",
    beta => "beta",
    n => "N",
    k => "k",
    d => "d",
    delta => "delta",
    rate => "rate",
    family => "family",
    lengths => "lengths",
    p_loss => "p_loss",
    p_depol => "p_depol",
    t => "t",
    seed => "seed",
    trials => "trials",
    samples => "samples",
    strategy => "strategy",
    open => "open",
    weights => "weights",
    budget => "budget",
    out => "out",
    csv => "csv",
}

trait DisplayValue {
    fn show(&self) -> String;
}

impl DisplayValue for String {
    fn show(&self) -> String {
        self.clone()
    }
}

impl DisplayValue for u64 {
    fn show(&self) -> String {
        self.to_string()
    }
}

impl DisplayValue for PathBuf {
    fn show(&self) -> String {
        self.display().to_string()
    }
}

fn display_value<T: DisplayValue>(v: &T) -> String {
    v.show()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if !line.is_ascii() {
                return Err(Error::parse(i + 1, "config files are ASCII"));
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got '{line}'")))?;
            let value = value.trim();
            if value.contains(char::is_whitespace) {
                return Err(Error::parse(
                    i + 1,
                    format!("value for {} contains whitespace", key.trim()),
                ));
            }
            cfg.set(key.trim(), value, i + 1)?;
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    fn from_flags(f: &Flags) -> RunConfig {
        RunConfig {
            preset: f.preset.clone(),
            scheme_file: f.scheme_file.clone(),
            code: f.code.clone(),
            message: f.message.clone(),
            strings: f.strings.clone(),
            alpha: f.alpha,
            r: f.r.clone(),
            eps: f.eps.clone(),
            l: f.l,
            dim: f.dim,
            q: f.q,
            beta: f.beta.clone(),
            n: f.n.clone(),
            k: f.k.clone(),
            d: f.d.clone(),
            delta: f.delta.clone(),
            rate: f.rate.clone(),
            family: f.family.clone(),
            lengths: f.lengths.clone(),
            p_loss: f.p_loss.clone(),
            p_depol: f.p_depol.clone(),
            t: f.t,
            seed: f.seed,
            trials: f.trials,
            samples: f.samples,
            strategy: f.strategy.clone(),
            open: f.open.clone(),
            weights: f.weights.clone(),
            budget: f.budget,
            out: f.out.clone(),
            csv: f.csv.clone(),
        }
    }

    fn require<'a>(&self, value: &'a Option<String>, key: &str) -> Result<&'a str> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing required setting '{key}'")))
    }

    pub fn scheme(&self) -> Result<EncodingScheme> {
        match (&self.preset, &self.scheme_file) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either preset or scheme_file, not both".into(),
            )),
            (_, Some(path)) => parse_scheme_file(&read_file(path)?),
            (preset, None) => match preset.as_deref().unwrap_or("bb84") {
                "bb84" => Ok(bb84_scheme()),
                "six-state" => Ok(six_state_scheme()),
                other => match other.strip_prefix("computational:") {
                    Some(dim) => computational_scheme(parse_count(dim)? as usize),
                    None => Err(Error::Config(format!("unknown preset '{other}'"))),
                },
            },
        }
    }

    pub fn code(&self) -> Result<QaryCode> {
        let spec = self.require(&self.code, "code")?;
        parse_code_spec(spec, self.budget.unwrap_or(DEFAULT_DISTANCE_BUDGET))
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        let p = |v: &Option<String>| {
            v.as_deref()
                .map(parse_number)
                .transpose()
                .map(|x| x.unwrap_or(0.0))
        };
        ChannelModel::new(p(&self.p_loss)?, p(&self.p_depol)?)
    }

    /// Seed from the flag or file, then the environment, then 0.
    pub fn seed_or(&self, env_seed: Option<&str>) -> Result<u64> {
        match (self.seed, env_seed) {
            (Some(s), _) => Ok(s),
            (None, Some(v)) => v.trim().parse().map_err(|_| {
                Error::Config(format!("{SEED_ENV}='{v}' is not a 64-bit unsigned integer"))
            }),
            (None, None) => Ok(0),
        }
    }

    fn number(&self, value: &Option<String>, key: &str) -> Result<f64> {
        parse_number(self.require(value, key)?)
    }

    fn count(&self, value: &Option<String>) -> Result<Option<u64>> {
        value.as_deref().map(parse_count).transpose()
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses `kind:key=value,...` or `file:<path>`.
pub fn parse_code_spec(spec: &str, budget: u64) -> Result<QaryCode> {
    if let Some(path) = spec.strip_prefix("file:") {
        return parse_code_file(&read_file(Path::new(path))?);
    }
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut map = Vec::new();
    for kv in params.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value in code spec, got '{kv}'")))?;
        map.push((k.trim(), parse_count(v)? as usize));
    }
    let get = |key: &str| {
        map.iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("code spec '{spec}' lacks {key}=")))
    };
    match kind {
        "rep" | "repetition" => QaryCode::repetition(get("q")?, get("N")?),
        "rs" => QaryCode::reed_solomon_with_budget(get("q")?, get("N")?, get("k")?, budget),
        "rl" | "random-linear" => QaryCode::random_linear(
            get("q")?,
            get("N")?,
            get("k")?,
            get("seed").unwrap_or(0) as u64,
        ),
        "external" => QaryCode::external(get("q")?, get("N")?, get("k")?, get("d")?),
        other => Err(Error::Config(format!("unknown code kind '{other}'"))),
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Domain(_)
        | Error::Code(_)
        | Error::Scheme(_)
        | Error::Strategy(_)
        | Error::SymbolOutOfRange { .. }
        | Error::LengthMismatch { .. }
        | Error::DimensionCap { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Entry point for the binary: real stdout/stderr and `QBSC_SEED`.
type Handler = fn(&RunConfig, Option<&str>, &mut dyn Write, &mut dyn Write) -> Result<i32>;

pub fn dispatch<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_with(
        argv,
        env_seed.as_deref(),
        &mut stdout.lock(),
        &mut stderr.lock(),
    )
}

/// Runs one command line, writing reports to `out` and diagnostics to `err`.
pub fn dispatch_with<I: IntoIterator<Item = String>>(
    argv: I,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let (flags, run): (&Flags, Handler) = match &cli.command {
        Command::Bounds(f) => (f, cmd_bounds),
        Command::Plan(f) => (f, cmd_plan),
        Command::Run(f) => (f, cmd_run),
        Command::Attack(f) => (f, cmd_attack),
        Command::Verify(f) => (f, cmd_verify),
        Command::Audit(f) => (f, cmd_audit),
        Command::Codes(f) => (f, cmd_codes),
    };
    let result = (|| {
        let base = match &flags.config {
            Some(path) => {
                RunConfig::parse(&read_file(path).map_err(|e| Error::Config(e.to_string()))?)
                    .map_err(|e| match e {
                        Error::Parse { line, msg } => {
                            Error::Config(format!("{}:{line}: {msg}", path.display()))
                        }
                        other => other,
                    })?
            }
            None => RunConfig::default(),
        };
        let cfg = base.overlay(RunConfig::from_flags(flags));
        if flags.dump_config {
            out.write_all(cfg.to_text().as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
            return Ok(EXIT_OK);
        }
        run(&cfg, env_seed, out, err)
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn emit_csv(cfg: &RunConfig, table: &Table, out: &mut dyn Write) -> Result<()> {
    match &cfg.csv {
        Some(p) if p.as_os_str() == "-" => emit(out, &table.to_csv()),
        Some(p) => write_file(p, &table.to_csv()),
        None => Ok(()),
    }
}

fn scheme_constants(cfg: &RunConfig) -> Result<SchemeConstants> {
    let mut c = SchemeConstants::from(&cfg.scheme()?);
    if let Some(l) = cfg.l {
        c.l = l;
    }
    if let Some(dim) = cfg.dim {
        c.dim = dim;
    }
    match cfg.q {
        Some(q) => c.q = q,
        None if cfg.l.is_some() || cfg.dim.is_some() => c.q = c.l * c.dim,
        None => {}
    }
    if let Some(b) = &cfg.beta {
        c.beta = parse_number(b)?;
    }
    Ok(c)
}

fn scheme_line(c: &SchemeConstants) -> String {
    format!(
        "scheme q={} D={} l={} beta={} beta_bar={}\n",
        c.q,
        c.dim,
        c.l,
        fmt_report(c.beta),
        fmt_report(c.beta_bar)
    )
}

fn cmd_bounds(
    cfg: &RunConfig,
    _: Option<&str>,
    out: &mut dyn Write,
    _: &mut dyn Write,
) -> Result<i32> {
    let c = scheme_constants(cfg)?;
    let r = cfg.number(&cfg.r, "r")?;
    let eps = cfg.number(&cfg.eps, "eps")?;
    let mut text = scheme_line(&c);
    let _ = writeln!(text, "r={} eps={}", fmt_report(r), fmt_report(eps));
    let alpha = match cfg.alpha {
        Some(a) => a,
        None => alpha_for_target(c.l, r, eps)?,
    };
    let _ = writeln!(text, "alpha={alpha}");
    if eps >= r {
        let _ = writeln!(text, "note=target is vacuous (eps >= r)");
    }
    let eps2 = (1.0 - 1.0 / c.l as f64).powi(alpha as i32);
    let _ = writeln!(text, "eps2={}", fmt_report(eps2));
    let n = cfg.count(&cfg.n)?;
    let d = cfg.count(&cfg.d)?;
    let k = cfg.count(&cfg.k)?;
    if let Some(n) = n {
        match f_alpha_bound_log2(n, c.dim, alpha) {
            Ok(v) => {
                let _ = writeln!(text, "log2_f_alpha_bound={}", fmt_report(v));
            }
            Err(e) => {
                let _ = writeln!(text, "log2_f_alpha_bound=NA ({e})");
            }
        }
    }
    if let (Some(n), Some(d)) = (n, d) {
        if alpha < d {
            let (eps1, _) = epsilons_full(c.beta, d, alpha, c.l, n, c.dim)?;
            let _ = writeln!(text, "eps1={}", fmt_report(eps1));
            let _ = writeln!(text, "bound_simple={}", binding_bound_simple(r, eps1, eps2));
            let _ = writeln!(text, "bound_exact={}", binding_bound_exact(r, eps1, eps2));
        } else {
            let _ = writeln!(text, "eps1=NA (alpha >= d)");
        }
        match thirdterm_holds(n, d, alpha, c.beta, r, eps, c.dim) {
            Ok(t) => {
                let _ = writeln!(
                    text,
                    "thirdterm lhs={} rhs={} holds={}",
                    fmt_report(t.lhs),
                    fmt_report(t.rhs),
                    t.holds
                );
            }
            Err(e) => {
                let _ = writeln!(text, "thirdterm=NA ({e})");
            }
        }
    }
    if let (Some(n), Some(k)) = (n, k) {
        let cb = concealing_bound(n, c.dim, k, c.q)?;
        let _ = writeln!(
            text,
            "m_bound={} ratio={} ratio_ceil={} concealing={}",
            fmt_report(cb.m_bound),
            fmt_report(cb.ratio),
            fmt_report(cb.ratio_ceil),
            cb.is_concealing()
        );
    }
    if let Some(delta) = &cfg.delta {
        let _ = writeln!(
            text,
            "gv_rate={}",
            fmt_report(gv_rate(c.q as usize, parse_number(delta)?)?)
        );
    }
    emit(out, &text)?;
    if let (Some(n), Some(k), Some(d)) = (n, k, d) {
        let cand = CodeCandidate {
            family: "explicit".into(),
            n,
            k,
            d,
            d_status: DistanceStatus::DeclaredOnly,
        };
        let p = crate::bounds::evaluate_candidate(r, eps, c, cand)?;
        emit_csv(cfg, &plan_table(&[p]), out)?;
    }
    Ok(EXIT_OK)
}

fn cmd_plan(
    cfg: &RunConfig,
    _: Option<&str>,
    out: &mut dyn Write,
    _: &mut dyn Write,
) -> Result<i32> {
    let c = scheme_constants(cfg)?;
    let r = cfg.number(&cfg.r, "r")?;
    let eps = cfg.number(&cfg.eps, "eps")?;
    let lengths = parse_lengths(cfg.lengths.as_deref().unwrap_or(DEFAULT_LENGTHS))?;
    let delta = cfg
        .delta
        .as_deref()
        .map(parse_number)
        .transpose()?
        .unwrap_or(0.01);
    let rate = cfg
        .rate
        .as_deref()
        .map(parse_number)
        .transpose()?
        .unwrap_or(0.5);
    let mut families = Vec::new();
    for name in cfg.family.as_deref().unwrap_or("gv,repetition").split(',') {
        families.push(match name.trim() {
            "gv" => CodeFamily::GilbertVarshamov {
                delta,
                lengths: lengths.clone(),
            },
            "repetition" | "rep" => CodeFamily::Repetition {
                lengths: lengths.clone(),
            },
            "rs" => CodeFamily::ReedSolomon {
                rate,
                lengths: lengths.clone(),
            },
            "code" => CodeFamily::Explicit(vec![CodeCandidate::from_code(&cfg.code()?)]),
            other => return Err(Error::Config(format!("unknown family '{other}'"))),
        });
    }
    let outcome = plan(r, eps, c, &families)?;
    let p = &outcome.chosen;
    let mut text = scheme_line(&c);
    let _ = writeln!(
        text,
        "r={} eps={} alpha={}",
        fmt_report(r),
        fmt_report(eps),
        p.alpha
    );
    let _ = writeln!(
        text,
        "chosen family={} N={} k={} d={} feasible={}",
        p.code.family, p.code.n, p.code.k, p.code.d, p.feasible
    );
    if !p.reasons.is_empty() {
        let _ = writeln!(text, "reasons={}", p.reasons.join("; "));
    }
    let table = plan_table(&outcome.candidates);
    text.push('\n');
    text.push_str(&table.to_text());
    emit(out, &text)?;
    emit_csv(cfg, &table, out)?;
    Ok(EXIT_OK)
}

fn loss_note(channel: &ChannelModel, err: &mut dyn Write) {
    if channel.p_loss > 0.0 {
        let _ = writeln!(
            err,
            "note: lost particles count as passes; p_loss = {} weakens the check accordingly",
            fmt_report(channel.p_loss)
        );
    }
}

fn cmd_run(
    cfg: &RunConfig,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let scheme = cfg.scheme()?;
    let code = cfg.code()?;
    let message = parse_message(cfg.require(&cfg.message, "A")?)?;
    let channel = cfg.channel()?;
    let seed = cfg.seed_or(env_seed)?;
    let t = cfg
        .t
        .unwrap_or_else(|| suggest_threshold(code.len(), scheme.l(), scheme.dim(), &channel));
    loss_note(&channel, err);
    let trials = cfg.trials.unwrap_or(1);
    if trials <= 1 {
        let ts = run_session(
            &scheme,
            &code,
            &SessionInput::Honest(message),
            &channel,
            t,
            seed,
            &Limits::default(),
        )?;
        let text = write_transcript(&ts);
        match &cfg.out {
            Some(p) => write_file(p, &text)?,
            None => emit(out, &text)?,
        }
        return Ok(EXIT_OK);
    }
    let sessions = honest_campaign(&scheme, &code, &message, &channel, t, seed, trials)?;
    let mut table = Table::new(&["session", "seed", "y", "accept"]);
    let mut accepted = 0u64;
    let mut total_y = 0u64;
    for (i, s) in sessions.iter().enumerate() {
        accepted += s.accept as u64;
        total_y += s.y as u64;
        table.push(vec![
            i.to_string(),
            s.seed.to_string(),
            s.y.to_string(),
            s.accept.to_string(),
        ]);
    }
    let text = format!(
        "sessions={trials} t={t} accepted={accepted} acceptance={} mean_y={}\n",
        fmt_report(accepted as f64 / trials as f64),
        fmt_report(total_y as f64 / trials as f64)
    );
    emit(out, &text)?;
    if let Some(p) = &cfg.out {
        let all: String = sessions.iter().map(write_transcript).collect();
        write_file(p, &all)?;
    }
    emit_csv(cfg, &table, out)?;
    Ok(EXIT_OK)
}

fn strategy_from(cfg: &RunConfig) -> Result<CheatStrategy> {
    let kind = cfg.strategy.as_deref().unwrap_or("wrong");
    let strings = cfg.strings.as_deref().map(parse_strings).transpose()?;
    let open_rule = |default_best: Option<&Vec<Vec<usize>>>| -> Result<OpenRule> {
        match cfg.open.as_deref() {
            Some("best") => strings
                .clone()
                .map(OpenRule::BestOf)
                .ok_or_else(|| Error::Config("open=best needs strings".into())),
            Some(s) => Ok(OpenRule::Fixed(parse_message(s)?)),
            None => default_best
                .cloned()
                .map(OpenRule::BestOf)
                .ok_or_else(|| Error::Config("missing required setting 'open'".into())),
        }
    };
    let need_strings = || {
        strings
            .clone()
            .ok_or_else(|| Error::Config("missing required setting 'strings'".into()))
    };
    match kind {
        "honest" => Ok(CheatStrategy::honest(parse_message(
            cfg.require(&cfg.message, "A")?,
        )?)),
        "wrong" => Ok(CheatStrategy {
            id: "wrong".into(),
            kind: CheatKind::WrongCommitment {
                committed: parse_message(cfg.require(&cfg.message, "A")?)?,
            },
            open: open_rule(None)?,
        }),
        "superposition" => {
            let s = need_strings()?;
            let amps = match &cfg.weights {
                Some(w) => parse_list_f64(w)?,
                None => vec![1.0 / (s.len() as f64).sqrt(); s.len()],
            };
            Ok(CheatStrategy {
                id: "superposition".into(),
                kind: CheatKind::Superposition {
                    amplitudes: amps.into_iter().map(|a| Complex64::new(a, 0.0)).collect(),
                    strings: s.clone(),
                },
                open: open_rule(Some(&s))?,
            })
        }
        "mixture" => {
            let s = need_strings()?;
            let weights = match &cfg.weights {
                Some(w) => parse_list_f64(w)?,
                None => vec![1.0 / s.len() as f64; s.len()],
            };
            Ok(CheatStrategy {
                id: "mixture".into(),
                kind: CheatKind::Mixture {
                    strings: s.clone(),
                    weights,
                },
                open: open_rule(Some(&s))?,
            })
        }
        other => Err(Error::Config(format!("unknown strategy '{other}'"))),
    }
}

fn cmd_attack(
    cfg: &RunConfig,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let scheme = cfg.scheme()?;
    let code = cfg.code()?;
    let channel = cfg.channel()?;
    let seed = cfg.seed_or(env_seed)?;
    let t = cfg
        .t
        .unwrap_or_else(|| suggest_threshold(code.len(), scheme.l(), scheme.dim(), &channel));
    let strategy = strategy_from(cfg)?;
    loss_note(&channel, err);
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let report = run_cheat(
        &strategy,
        &scheme,
        &code,
        &channel,
        t,
        trials,
        seed,
        &Limits::default(),
    )?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "strategy={} trials={trials} t={t} seed={seed}",
        report.strategy
    );
    for (i, s) in report.strings.iter().enumerate() {
        let _ = writeln!(
            text,
            "string={} exact_acc={} empirical_acc={}",
            fmt_string(s),
            fmt_report(report.exact[i]),
            fmt_report(report.empirical()[i])
        );
    }
    let _ = writeln!(
        text,
        "sum_exact={} sum_empirical={} std_error={} opened_acceptance={}",
        fmt_report(report.sum_exact()),
        fmt_report(report.sum_empirical()),
        fmt_report(report.sum_std_error),
        fmt_report(report.opened_hits as f64 / trials as f64)
    );
    if let Some(l) = report.lambda_max {
        let _ = writeln!(text, "lambda_max={}", fmt_report(l));
    }
    let noiseless = channel.p_loss == 0.0 && channel.p_depol == 0.0;
    if noiseless && t == 0 {
        let _ = writeln!(text, "within_3_sigma={}", report.consistent(3.0));
    }
    emit(out, &text)?;
    emit_csv(cfg, &audit_table(std::slice::from_ref(&report)), out)?;
    let over_optimum = report
        .lambda_max
        .is_some_and(|l| report.sum_exact() > l + 1e-9);
    Ok(if over_optimum {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    })
}

fn cmd_verify(
    cfg: &RunConfig,
    _: Option<&str>,
    out: &mut dyn Write,
    _: &mut dyn Write,
) -> Result<i32> {
    let scheme = cfg.scheme()?;
    let code = cfg.code()?;
    let strings = parse_strings(cfg.require(&cfg.strings, "strings")?)?;
    let audit = binding_audit(
        &scheme,
        &code,
        &strings,
        cfg.alpha,
        &EigenConfig::default(),
        &Limits::default(),
    )?;
    let mut text = String::new();
    let _ = writeln!(text, "r={} dim={}", audit.r(), audit.witness.dim());
    let _ = writeln!(
        text,
        "lambda_max={} method={:?}",
        fmt_report(audit.lambda_max),
        audit.method
    );
    for (s, a) in strings.iter().zip(&audit.per_string) {
        let _ = writeln!(
            text,
            "string={} witness_acc={}",
            fmt_string(s),
            fmt_report(*a)
        );
    }
    let b = &audit.bounds;
    let _ = writeln!(
        text,
        "alpha={} eps1={} eps2={}",
        b.alpha
            .map(|a| a.to_string())
            .unwrap_or_else(|| "NA".into()),
        b.eps1.map(fmt_report).unwrap_or_else(|| "NA".into()),
        b.eps2.map(fmt_report).unwrap_or_else(|| "NA".into())
    );
    let _ = writeln!(text, "bound_simple={}", b.simple);
    let _ = writeln!(text, "bound_exact={}", b.exact);
    let _ = writeln!(text, "verdict={}", audit.verdict());
    emit(out, &text)?;
    let r = audit.r() as f64;
    let broken = audit.violated() || audit.lambda_max < 1.0 - 1e-9 || audit.lambda_max > r + 1e-9;
    Ok(if broken { EXIT_VIOLATION } else { EXIT_OK })
}

fn cmd_audit(
    cfg: &RunConfig,
    _: Option<&str>,
    out: &mut dyn Write,
    _: &mut dyn Write,
) -> Result<i32> {
    let scheme = cfg.scheme()?;
    let code = cfg.code()?;
    let seed = cfg.seed.unwrap_or(0);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let limits = Limits::default();
    let mut text = String::new();
    let mut failed = Vec::new();
    let _ = writeln!(
        text,
        "beta={} beta_bar={}",
        fmt_report(scheme.beta()),
        fmt_report(scheme.beta_bar())
    );
    if scheme.generators().is_some() {
        let sym = scheme.check_group_symmetry()?;
        let _ = writeln!(text, "group_symmetric={}", sym.is_symmetric());
        if !sym.is_symmetric() {
            failed.push("group symmetry");
        }
    }
    let strings = cfg.strings.as_deref().map(parse_strings).transpose()?;
    if let (Some(strings), Some(alpha)) = (&strings, cfg.alpha) {
        let o = orthogonality_audit(&scheme, &code, strings, alpha, samples, seed)?;
        let _ = writeln!(
            text,
            "pair_overlap max={} bound={} ok={}",
            fmt_report(o.pair_max),
            fmt_report(o.pair_bound),
            o.pairs_ok()
        );
        let _ = writeln!(
            text,
            "shifted_overlap max={} bound={} ok={} guaranteed_bound={} guaranteed_ok={} pairs={} exhaustive={} beta_bound={}",
            fmt_report(o.shifted_max),
            fmt_report(o.shifted_bound),
            o.shifted_ok(),
            fmt_report(o.shifted_guaranteed_bound),
            o.shifted_guaranteed_ok(),
            o.shifted_pairs,
            o.exhaustive,
            fmt_report(o.beta_bound)
        );
        if !o.pairs_ok() {
            failed.push("pair overlap");
        }
        if !o.shifted_ok() {
            failed.push("shifted overlap");
        }
        if !o.shifted_guaranteed_ok() {
            failed.push("guaranteed shifted overlap");
        }
    }
    let message = match (&cfg.message, &strings) {
        (Some(m), _) => parse_message(m)?,
        (None, Some(s)) => s[0].clone(),
        (None, None) => vec![0; code.dimension()],
    };
    let selection = if code.len() <= EXHAUSTIVE_EIGEN_MAX_N {
        ShiftSelection::Exhaustive
    } else {
        ShiftSelection::Sampled {
            count: samples,
            seed,
        }
    };
    let decay = cfg.alpha.map(|a| (a, samples.min(200), seed));
    let e = eigenstructure_audit(&scheme, &code, &message, selection, decay, &limits)?;
    let _ = writeln!(
        text,
        "eigen tested={} exhaustive={} max_residual={} ok={}",
        e.tested,
        e.exhaustive,
        fmt_sig_short(e.max_residual),
        e.residual_ok()
    );
    if let Some((alpha, ratio, limit)) = e.decay {
        let _ = writeln!(
            text,
            "norm_check alpha={alpha} max_ratio={} limit={} ok={}",
            fmt_report(ratio),
            fmt_report(limit),
            e.decay_ok()
        );
    }
    if !e.residual_ok() {
        failed.push("eigen residual");
    }
    if !e.decay_ok() {
        failed.push("norm check");
    }
    let _ = writeln!(
        text,
        "verdict={}",
        if failed.is_empty() {
            "pass".to_string()
        } else {
            format!("violation: {}", failed.join(", "))
        }
    );
    emit(out, &text)?;
    Ok(if failed.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

fn fmt_sig_short(x: f64) -> String {
    crate::report::fmt_sig(x, 3)
}

fn cmd_codes(
    cfg: &RunConfig,
    _: Option<&str>,
    out: &mut dyn Write,
    _: &mut dyn Write,
) -> Result<i32> {
    let mut text = String::new();
    if let Some(delta) = &cfg.delta {
        let q = cfg.q.unwrap_or(4) as usize;
        let _ = writeln!(
            text,
            "gv_rate q={q} delta={} rate={}",
            delta,
            fmt_report(gv_rate(q, parse_number(delta)?)?)
        );
    }
    if cfg.code.is_some() {
        let code = cfg.code()?;
        let file = write_code_file(&code);
        match &cfg.out {
            Some(p) => write_file(p, &file)?,
            None => text.push_str(&file),
        }
        let _ = writeln!(
            text,
            "distance d={} status={} linear={}",
            code.distance(),
            code.distance_status(),
            code.is_linear()
        );
        if let Some(m) = &cfg.message {
            let cw = code.encode(&parse_message(m)?)?;
            let _ = writeln!(
                text,
                "codeword={}",
                fmt_string(cw.symbols()).replace(':', " ")
            );
        }
    }
    if text.is_empty() {
        return Err(Error::Config("codes needs code or delta".into()));
    }
    emit(out, &text)?;
    Ok(EXIT_OK)
}
