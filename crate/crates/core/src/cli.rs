//! `idem` command-line tool: argument parsing, report assembly and output.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input validation failure.

use crate::analysis::{PairAnalysis, Route, analyze_pair, require_block};
use crate::blockchan::{AnyChannel, ChannelSpec};
use crate::closedform::{BlockTerm, optimal_input_idq};
use crate::constants::constants;
use crate::counterexample::{self, CounterexampleReport};
use crate::error::{Error, Result};
use crate::gns::{IterateBounds, PERIPHERAL_TOL, SpectralData, iterate_bounds, spectral_decompose};
use crate::matcore::ComplexMatrix;
use crate::oracle::{OptimizerConfig, VerificationReport, maximize_channel_divergence_seeded};
use crate::states::{DensityMatrix, Divergence, DivergenceReport, chernoff, hypothesis_testing};
use crate::verify::{Suite, SuiteInput, SuiteReport, run_suite};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Value, json};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

/// Overrides `--seed` when set.
pub const SEED_ENV: &str = "IDEM_SEED";

#[derive(Parser, Debug)]
#[command(name = "idem", version, about = "Divergences and discrimination exponents of idempotent quantum channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Optimizer and instance seed (overridden by IDEM_SEED).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Random restarts per oracle search.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Umegaki,
    Petz,
    Sandwiched,
    Dmax,
    Dmin,
    #[value(name = "hypothesis_testing")]
    HypothesisTesting,
    Chernoff,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Divergence between two density matrices.
    Divergence {
        rho: PathBuf,
        sigma: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Closed form (or upper bound) for a pair of idempotent channels.
    Formula {
        p: PathBuf,
        q: PathBuf,
        /// Rényi order of the sandwiched bound used when no closed form applies.
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        /// Also run the oracle with this reference dimension (1 or d).
        #[arg(long)]
        ref_dim: Option<usize>,
    },
    /// Run a named verification suite, on the given channels or a built-in instance.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(num_args = 0..=2)]
        files: Vec<PathBuf>,
    },
    /// Nested pair without a common invariant state, whose bound is strict.
    Counterexample {
        /// Skip the oracle cross-check.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Iterate bounds for two channels in detailed balance with one state.
    Gns {
        phi: PathBuf,
        psi: PathBuf,
        tau: PathBuf,
        /// Iterate power 2k; must be even.
        #[arg(long)]
        k: u32,
    },
}

/// Everything that determines a report's content; hashed into the meta block.
#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    /// SHA-256 of each input file's contents.
    inputs: Vec<String>,
    seed: u64,
    optimizer: &'a OptimizerConfig,
    format: Format,
    params: Value,
}

#[derive(Serialize)]
struct WallClock {
    started_unix_ms: u128,
    elapsed_ms: f64,
}

#[derive(Serialize)]
struct Meta {
    version: &'static str,
    seed: u64,
    config_hash: String,
    wall_clock: WallClock,
}

/// A finished command: JSON body, optional block tables for CSV, verification verdict.
struct Outcome {
    report: Value,
    tables: Vec<(String, Vec<BlockTerm>)>,
    verified: bool,
}

impl Outcome {
    fn new(report: impl Serialize, verified: bool) -> Result<Self> {
        Ok(Self { report: to_value(report)?, tables: vec![], verified })
    }
}

fn to_value(v: impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(format!("report serialization: {e}")))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn read_input(path: &Path, hashes: &mut Vec<String>) -> Result<String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    hashes.push(hex(&Sha256::digest(text.as_bytes())));
    Ok(text)
}

fn load_state(path: &Path, hashes: &mut Vec<String>) -> Result<DensityMatrix> {
    let text = read_input(path, hashes)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_channel(path: &Path, hashes: &mut Vec<String>) -> Result<AnyChannel> {
    let text = read_input(path, hashes)?;
    ChannelSpec::from_json(&text)
        .and_then(|s| s.build())
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Seed from the environment when present, else the flag.
pub fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

#[derive(Serialize)]
struct DivergenceOutput {
    #[serde(flatten)]
    divergence: DivergenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

fn require_alpha(alpha: Option<f64>, kind: &str) -> Result<f64> {
    alpha.ok_or_else(|| Error::OutOfRange(format!("kind {kind} requires --alpha")))
}

fn cmd_divergence(rho: &DensityMatrix, sigma: &DensityMatrix, kind: Kind, alpha: Option<f64>, epsilon: Option<f64>) -> Result<Outcome> {
    let (name, value, warnings, eps) = match kind {
        Kind::HypothesisTesting => {
            let e = epsilon.ok_or_else(|| Error::OutOfRange("kind hypothesis_testing requires --epsilon".into()))?;
            (kind_name(kind), hypothesis_testing(rho, sigma, e)?.value, vec![], Some(e))
        }
        Kind::Chernoff => (kind_name(kind), chernoff(rho, sigma)?, vec![], None),
        _ => {
            let d = match kind {
                Kind::Umegaki => Divergence::Umegaki,
                Kind::Petz => Divergence::Petz(require_alpha(alpha, "petz")?),
                Kind::Sandwiched => Divergence::Sandwiched(require_alpha(alpha, "sandwiched")?),
                Kind::Dmax => Divergence::Dmax,
                _ => Divergence::Dmin,
            };
            let ev = d.eval_with_warnings(rho, sigma)?;
            (d.name(), ev.value, ev.warnings, None)
        }
    };
    let alpha = matches!(kind, Kind::Petz | Kind::Sandwiched).then_some(alpha).flatten();
    let mut divergence = DivergenceReport::new(name, alpha, value);
    divergence.warnings = warnings;
    Outcome::new(DivergenceOutput { divergence, epsilon: eps }, true)
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Umegaki => "umegaki",
        Kind::Petz => "petz",
        Kind::Sandwiched => "sandwiched",
        Kind::Dmax => "dmax",
        Kind::Dmin => "dmin",
        Kind::HypothesisTesting => "hypothesis_testing",
        Kind::Chernoff => "chernoff",
    }
}

#[derive(Serialize)]
struct FormulaOutput {
    #[serde(flatten)]
    analysis: PairAnalysis,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<VerificationReport>,
}

/// Oracle cross-check of the analysed pair at reference dimension `r`.
fn formula_oracle(p: &AnyChannel, q: &AnyChannel, a: &PairAnalysis, r: usize, alpha: f64, cfg: &OptimizerConfig) -> Result<Option<VerificationReport>> {
    let (pb, qb) = (require_block(p)?, require_block(q)?);
    let d = pb.total_dim();
    if r != 1 && r != d {
        return Err(Error::OutOfRange(format!("--ref-dim {r} must be 1 or {d}")));
    }
    let cb = r == d && d > 1;
    let target = if cb { &a.cb } else { &a.plain };
    let (kind, seeds) = match a.route {
        Route::InclusionFails => return Ok(None),
        Route::IdentityVsChannel => (Divergence::Umegaki, vec![optimal_input_idq(&qb, cb)?]),
        Route::CommonInvariant => (Divergence::Umegaki, vec![]),
        Route::GeneralBound => (Divergence::Sandwiched(alpha), vec![]),
    };
    let o = maximize_channel_divergence_seeded(kind, &pb, &qb, r, &seeds, cfg)?;
    Ok(Some(VerificationReport::new(target.divergence.value_bits, &o, None, cfg.seed)))
}

fn cmd_formula(p: &AnyChannel, q: &AnyChannel, alpha: f64, ref_dim: Option<usize>, cfg: &OptimizerConfig) -> Result<Outcome> {
    let analysis = analyze_pair(p, q, alpha, cfg)?;
    let verification = match ref_dim {
        Some(r) => formula_oracle(p, q, &analysis, r, alpha, cfg)?,
        None => None,
    };
    let tables = vec![("plain".to_string(), analysis.plain.blocks.clone()), ("cb".to_string(), analysis.cb.blocks.clone())];
    let mut out = Outcome::new(FormulaOutput { analysis, verification }, true)?;
    out.tables = tables;
    Ok(out)
}

fn cmd_verify(suite: Suite, p: Option<&AnyChannel>, q: Option<&AnyChannel>, cfg: &OptimizerConfig) -> Result<Outcome> {
    let r: SuiteReport = run_suite(suite, &SuiteInput { p, q }, cfg)?;
    let pass = r.pass;
    Outcome::new(r, pass)
}

fn cmd_counterexample(no_oracle: bool, cfg: &OptimizerConfig) -> Result<Outcome> {
    let r: CounterexampleReport = counterexample::run((!no_oracle).then_some(cfg))?;
    let t = counterexample::pair()?;
    let rows = r
        .blocks
        .iter()
        .map(|b| BlockTerm { k: Some(0), l: b.l, d_a: t.a()[b.l], d_b: t.b()[0][b.l], value: b.linear })
        .collect();
    let verified = r.strict_gap;
    let mut out = Outcome::new(r, verified)?;
    out.tables = vec![("blocks".into(), rows)];
    Ok(out)
}

#[derive(Serialize)]
struct SpectralSummary {
    /// `[re, im]` pairs.
    eigenvalues: Vec<[f64; 2]>,
    mu: f64,
    gns_symmetric: bool,
    peripheral_dims: Vec<(usize, usize)>,
    invariant_state: ComplexMatrix,
    warnings: Vec<String>,
}

impl From<&SpectralData> for SpectralSummary {
    fn from(s: &SpectralData) -> Self {
        Self {
            eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            mu: s.mu,
            gns_symmetric: s.gns_symmetric,
            peripheral_dims: s.peripheral_blocks.dims(),
            invariant_state: s.invariant_state.matrix().clone(),
            warnings: s.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
struct GnsOutput {
    phi: SpectralSummary,
    psi: SpectralSummary,
    bounds: IterateBounds,
}

fn cmd_gns(phi: &AnyChannel, psi: &AnyChannel, tau: &DensityMatrix, power: u32) -> Result<Outcome> {
    let (sp, sq) = (phi.superoperator()?, psi.superoperator()?);
    let bounds = iterate_bounds(&sp, &sq, tau, power)?;
    let (dp, dq) = (spectral_decompose(&sp, PERIPHERAL_TOL)?, spectral_decompose(&sq, PERIPHERAL_TOL)?);
    Outcome::new(GnsOutput { phi: (&dp).into(), psi: (&dq).into(), bounds }, true)
}

/// Scalar leaves of a JSON value as `(dotted.key, value)` pairs; matrices are skipped.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) if m.contains_key("dims") && m.contains_key("re") => {}
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => {}
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

fn render_csv(meta: &Value, out: &Outcome) -> String {
    let mut s = String::new();
    let mut meta_rows = Vec::new();
    flatten("", meta, &mut meta_rows);
    for (k, v) in meta_rows {
        s.push_str(&format!("# {k}={v}\n"));
    }
    // Scalars first; block lists that also appear as tables are left to the tables.
    let mut rows = Vec::new();
    flatten("", &out.report, &mut rows);
    s.push_str("key,value\n");
    for (k, v) in rows {
        if !out.tables.is_empty() && k.split('.').any(|part| part == "blocks") {
            continue;
        }
        s.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
    }
    for (name, rows) in &out.tables {
        s.push_str(&format!("# table: {name}\nk,l,dA,dB,value\n"));
        for b in rows {
            let k = b.k.map(|k| k.to_string()).unwrap_or_default();
            s.push_str(&format!("{k},{},{},{},{:.17e}\n", b.l, b.d_a, b.d_b, b.value));
        }
    }
    s
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Divergence { .. } => "divergence",
        Command::Formula { .. } => "formula",
        Command::Verify { .. } => "verify",
        Command::Counterexample { .. } => "counterexample",
        Command::Gns { .. } => "gns",
    }
}

fn optimizer(cli: &Cli, seed: u64) -> Result<OptimizerConfig> {
    let o = &constants().oracle;
    let cfg = OptimizerConfig {
        restarts: cli.restarts.unwrap_or(o.restarts),
        max_iters: o.max_iters,
        seed,
        ..OptimizerConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the parsed command and returns the rendered report with its exit code.
pub fn execute(cli: &Cli) -> Result<(String, i32)> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let seed = effective_seed(cli.seed)?;
    let cfg = optimizer(cli, seed)?;
    let mut hashes = Vec::new();
    let (outcome, params) = match &cli.command {
        Command::Divergence { rho, sigma, kind, alpha, epsilon } => {
            let (r, s) = (load_state(rho, &mut hashes)?, load_state(sigma, &mut hashes)?);
            (cmd_divergence(&r, &s, *kind, *alpha, *epsilon)?, json!({"kind": kind, "alpha": alpha, "epsilon": epsilon}))
        }
        Command::Formula { p, q, alpha, ref_dim } => {
            let (pc, qc) = (load_channel(p, &mut hashes)?, load_channel(q, &mut hashes)?);
            (cmd_formula(&pc, &qc, *alpha, *ref_dim, &cfg)?, json!({"alpha": alpha, "ref_dim": ref_dim}))
        }
        Command::Verify { suite, files } => {
            let s: Suite = suite.parse()?;
            let chans = files.iter().map(|f| load_channel(f, &mut hashes)).collect::<Result<Vec<_>>>()?;
            let (p, q) = match chans.as_slice() {
                [] => (None, None),
                [q] => (None, Some(q)),
                [p, q] => (Some(p), Some(q)),
                _ => unreachable!("clap caps the file count at two"),
            };
            (cmd_verify(s, p, q, &cfg)?, json!({"suite": suite}))
        }
        Command::Counterexample { no_oracle } => (cmd_counterexample(*no_oracle, &cfg)?, json!({"no_oracle": no_oracle})),
        Command::Gns { phi, psi, tau, k } => {
            let (a, b) = (load_channel(phi, &mut hashes)?, load_channel(psi, &mut hashes)?);
            let t = load_state(tau, &mut hashes)?;
            (cmd_gns(&a, &b, &t, *k)?, json!({"k": k}))
        }
    };
    let rc = RunConfig { command: command_name(&cli.command), inputs: hashes, seed, optimizer: &cfg, format: cli.format, params };
    let config_hash = hex(&Sha256::digest(serde_json::to_vec(&rc).map_err(|e| Error::Parse(e.to_string()))?));
    let meta = to_value(Meta {
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_hash,
        wall_clock: WallClock { started_unix_ms, elapsed_ms: started.elapsed().as_secs_f64() * 1e3 },
    })?;
    let code = if outcome.verified { EXIT_OK } else { EXIT_VERIFICATION };
    let text = match cli.format {
        Format::Json => {
            let body = json!({"meta": meta, "report": outcome.report});
            serde_json::to_string_pretty(&body).map_err(|e| Error::Parse(e.to_string()))? + "\n"
        }
        Format::Csv => render_csv(&meta, &outcome),
    };
    Ok((text, code))
}

/// Entry point for the binary: parse, execute, write, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: cannot write report: {e}");
                    EXIT_VALIDATION
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn flatten_skips_matrices() {
        let mut rows = Vec::new();
        flatten("", &json!({"a": {"b": 1, "m": {"dims": [1, 1], "re": [1.0], "im": [0.0]}}, "c": "inf"}), &mut rows);
        assert_eq!(rows, vec![("a.b".to_string(), "1".to_string()), ("c".to_string(), "inf".to_string())]);
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(run(["idem", "frobnicate"]), EXIT_VALIDATION);
        assert_eq!(run(["idem", "verify", "--suite", "nope"]), EXIT_VALIDATION);
        assert_eq!(run(["idem", "gns", "a", "b", "c"]), EXIT_VALIDATION);
    }
}
