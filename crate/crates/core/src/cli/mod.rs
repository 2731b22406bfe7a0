//! The `axerr` command line: build, metrics, histogram and verify.

mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;

use crate::circuit::{parse_aig, CircuitSpec, Netlist};
use crate::cnfsys::{build_system, read_dimacs, write_dimacs, CnfSystem};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::metrics::{Analyzer, Selection, DEFAULT_QUERY_BUDGET};
use crate::oracle::{exhaustive_metrics, localized_metrics, DEFAULT_INPUT_CAP};
use crate::pipeline::{build, Built, PipelineConfig, DEFAULT_CLAUSE_LIMIT};
use crate::treebuild::{TreeConfig, DEFAULT_PRODUCT_CAP};

pub use render::{histogram_csv, report_csv, report_json, report_text};

#[derive(Debug, Parser)]
#[command(name = "axerr", version, about = "Exact error metrics of approximate circuits")]
pub struct Cli {
    /// More diagnostics on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the CNF system and join tree, report their shape.
    Build(BuildArgs),
    /// Compute error metrics.
    Metrics(MetricsArgs),
    /// Error probability distribution as CSV.
    Histogram(HistogramArgs),
    /// Compare engine metrics with brute-force simulation.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Exact circuit: ASCII AIG file or generator spec such as `adder:8`.
    #[arg(long, visible_alias = "gen-exact", value_name = "PATH|SPEC", required_unless_present = "cnf")]
    pub exact: Option<String>,
    /// Approximate circuit: ASCII AIG file or generator spec such as `loa:8:3`.
    #[arg(long, visible_alias = "gen-approx", value_name = "PATH|SPEC", required_unless_present = "cnf")]
    pub approx: Option<String>,
    /// Annotated DIMACS system used instead of the two circuits.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["exact", "approx"])]
    pub cnf: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Tuning {
    /// Largest number of clauses per partition.
    #[arg(long, default_value_t = DEFAULT_CLAUSE_LIMIT, value_parser = positive::<usize>)]
    pub clause_limit: usize,
    /// Fixed partition count instead of one derived from the clause limit.
    #[arg(long, value_parser = positive::<usize>)]
    pub num_parts: Option<usize>,
    /// Table size threshold for merge rounds (rows).
    #[arg(long = "ts", default_value_t = 1_000_000, value_parser = positive::<u128>)]
    pub ts: u128,
    /// Hard row cap on a single table product.
    #[arg(long, default_value_t = DEFAULT_PRODUCT_CAP, value_parser = positive::<usize>)]
    pub product_cap: usize,
    /// Per-part enumeration cap, as log2 of the search leaves.
    #[arg(long, default_value_t = 24, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub enum_cap: u32,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = positive::<usize>)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Tuning {
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            clause_limit: self.clause_limit,
            num_parts: self.num_parts,
            seed: self.seed,
            enum_cap_log2: self.enum_cap,
            tree: TreeConfig {
                ts: self.ts,
                product_cap: self.product_cap,
                ..TreeConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Write the annotated DIMACS system here.
    #[arg(long, value_name = "PATH")]
    pub dimacs_out: Option<PathBuf>,
    /// Write a text listing of the join tree here.
    #[arg(long, value_name = "PATH")]
    pub tree_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Comma-separated list out of er, mae, mse, wce, pdf, all.
    #[arg(long, default_value = "all", value_parser = parse_selection)]
    pub metrics: Selection,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Significant digits of decimal renderings.
    #[arg(long, default_value_t = 12, value_parser = positive::<usize>)]
    pub precision: usize,
    /// Error values `LO:HI` covered by the PDF.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true, value_parser = parse_range)]
    pub range: Option<(BigInt, BigInt)>,
    /// Largest number of PDF queries.
    #[arg(long, default_value_t = DEFAULT_QUERY_BUDGET)]
    pub query_budget: u128,
    /// Write the report here instead of stdout.
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub corrupt_count_for_test: bool,
}

#[derive(Debug, Args)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Error values `LO:HI`; default spans the worst cases of both signs.
    #[arg(long, value_name = "LO:HI", allow_hyphen_values = true, value_parser = parse_range)]
    pub range: Option<(BigInt, BigInt)>,
    #[arg(long, default_value_t = DEFAULT_QUERY_BUDGET)]
    pub query_budget: u128,
    #[arg(short, long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Also write `value probability` lines for plotting.
    #[arg(long, value_name = "PATH")]
    pub gnuplot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    #[command(flatten)]
    pub tuning: Tuning,
    /// Largest input count simulated exhaustively.
    #[arg(long, default_value_t = DEFAULT_INPUT_CAP)]
    pub oracle_cap: usize,
    #[arg(long, default_value_t = DEFAULT_QUERY_BUDGET)]
    pub query_budget: u128,
    #[arg(long, hide = true)]
    pub corrupt_count_for_test: bool,
}

fn positive<T: std::str::FromStr + PartialEq + From<u8>>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let v: T = s.parse().map_err(|e: T::Err| e.to_string())?;
    if v == T::from(0) {
        return Err("must be at least 1".into());
    }
    Ok(v)
}

fn parse_selection(s: &str) -> std::result::Result<Selection, String> {
    s.parse::<Selection>().map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(BigInt, BigInt), String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
    let parse = |t: &str| t.trim().parse::<BigInt>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Exit status for an error: 1 for bad input, 2 for a resource cap, 3 for
/// an internal invariant violation.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EnumerationCap { .. } | Error::ProductCap { .. } | Error::QueryBudget { .. } | Error::OracleCap { .. } => 2,
        Error::Invariant(_) => 3,
        _ => 1,
    }
}

pub const EXIT_MISMATCH: i32 = 4;

/// A circuit argument: an existing file is read as ASCII AIG, anything
/// else must be a generator spec.
pub fn load_circuit(arg: &str) -> Result<Netlist> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().map_or(arg.into(), |s| s.to_string_lossy().into_owned());
        return Ok(parse_aig(&text)?.with_name(name));
    }
    arg.parse::<CircuitSpec>()?.build()
}

struct Loaded {
    sys: CnfSystem,
    circuits: Option<(Netlist, Netlist)>,
}

fn load(inputs: &Inputs) -> Result<Loaded> {
    if let Some(p) = &inputs.cnf {
        let sys = read_dimacs(&std::fs::read_to_string(p)?)?;
        return Ok(Loaded { sys, circuits: None });
    }
    let exact = load_circuit(inputs.exact.as_deref().expect("clap requires --exact"))?;
    let approx = load_circuit(inputs.approx.as_deref().expect("clap requires --approx"))?;
    let sys = build_system(&exact, &approx)?;
    Ok(Loaded {
        sys,
        circuits: Some((exact, approx)),
    })
}

fn build_logged(sys: &CnfSystem, cfg: &PipelineConfig) -> Result<Built> {
    let t = Instant::now();
    let built = build(sys, cfg)?;
    log::info!(
        "built {} vars, {} clauses into {} parts, {} tree vertices in {:.2?}",
        sys.num_vars(),
        sys.clauses().len(),
        built.partitioning.parts.len(),
        built.tree.nodes().len(),
        t.elapsed()
    );
    Ok(built)
}

enum Failure {
    Error(Error),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn emit(output: &Option<PathBuf>, out: &mut dyn Write, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_build(a: &BuildArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.inputs)?;
    let sys = &loaded.sys;
    if let Some(p) = &a.dimacs_out {
        std::fs::write(p, write_dimacs(sys)).map_err(Error::from)?;
    }
    let built = build_logged(sys, &a.tuning.pipeline())?;
    if let Some(p) = &a.tree_out {
        std::fs::write(p, built.tree.dump()).map_err(Error::from)?;
    }
    let text = render::build_summary(sys, &built, a.format);
    emit(&None, out, &text)?;
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.inputs)?;
    let built = build_logged(&loaded.sys, &a.tuning.pipeline())?;
    let engine = Engine::new(&built.tree);
    let mut an = Analyzer::new(&engine, loaded.sys.n());
    an.query_budget = a.query_budget;
    if a.corrupt_count_for_test {
        an.corrupt_for_test();
    }
    an.verify_total()?;
    let report = an.compute_with_range(a.metrics, a.range.clone())?;
    for (name, t) in &report.timings {
        log::info!("{name} in {t:.2?}");
    }
    let text = match a.format {
        Format::Json => report_json(&report, a.precision),
        Format::Csv => report_csv(&report, a.precision),
        Format::Text => report_text(&report, a.precision),
    };
    emit(&a.output, out, &text)?;
    Ok(())
}

fn cmd_histogram(a: &HistogramArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let loaded = load(&a.inputs)?;
    let built = build_logged(&loaded.sys, &a.tuning.pipeline())?;
    let engine = Engine::new(&built.tree);
    let mut an = Analyzer::new(&engine, loaded.sys.n());
    an.query_budget = a.query_budget;
    an.verify_total()?;
    let pdf = an.error_pdf(a.range.clone())?;
    if pdf.is_empty() {
        let _ = writeln!(err, "warning: no error value in the requested range has nonzero probability");
    }
    emit(&a.output, out, &histogram_csv(&pdf, loaded.sys.n()))?;
    if let Some(p) = &a.gnuplot {
        std::fs::write(p, render::gnuplot(&pdf)).map_err(Error::from)?;
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Outcome {
    let loaded = load(&a.inputs)?;
    let Some((exact, approx)) = &loaded.circuits else {
        return Err(Error::Spec("verify needs --exact and --approx circuits, not a CNF".into()).into());
    };
    let n = loaded.sys.n();
    let (oracle, mode) = if n <= a.oracle_cap {
        (exhaustive_metrics(exact, approx, a.oracle_cap)?, "exhaustive")
    } else {
        (localized_metrics(exact, approx, a.oracle_cap)?, "localized")
    };
    let built = build_logged(&loaded.sys, &a.tuning.pipeline())?;
    let engine = Engine::new(&built.tree);
    let mut an = Analyzer::new(&engine, n);
    an.query_budget = a.query_budget;
    if a.corrupt_count_for_test {
        an.corrupt_for_test();
    }
    an.verify_total()?;
    let report = an.compute_all(Selection {
        pdf: true,
        ..Selection::ALL
    })?;
    let diffs = oracle.mismatches(&report);
    let mut text = String::new();
    if diffs.is_empty() {
        text.push_str(&format!("ok: engine equals {mode} oracle on er, mae, mse, wce, p_wce, pdf ({n} inputs)\n"));
    } else {
        for d in &diffs {
            text.push_str(&format!("mismatch {d}\n"));
        }
    }
    emit(&None, out, &text)?;
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Build(a) => cmd_build(a, out),
        Command::Metrics(a) => cmd_metrics(a, out),
        Command::Histogram(a) => cmd_histogram(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

fn threads(cli: &Cli) -> Option<usize> {
    match &cli.command {
        Command::Build(a) => a.tuning.threads,
        Command::Metrics(a) => a.tuning.threads,
        Command::Histogram(a) => a.tuning.threads,
        Command::Verify(a) => a.tuning.threads,
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads(&cli).unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: thread pool: {e}");
            return 1;
        }
    };
    let (outcome, stdout, stderr) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let r = dispatch(&cli, &mut o, &mut e);
        (r, o, e)
    });
    let _ = out.write_all(&stdout);
    let _ = err.write_all(&stderr);
    match outcome {
        Ok(()) => 0,
        Err(Failure::Mismatch) => EXIT_MISMATCH,
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Verbosity requested on a raw argument list, for logger setup before
/// parsing.
pub fn verbosity(args: &[OsString]) -> u8 {
    args.iter()
        .skip(1)
        .map(|a| a.to_string_lossy())
        .map(|a| match a.as_ref() {
            "--verbose" => 1,
            s if s.starts_with('-') && !s.starts_with("--") && s[1..].chars().all(|c| c == 'v') => s.len() as u8 - 1,
            _ => 0,
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut all = vec!["axerr"];
        all.extend_from_slice(args);
        let code = run(all, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("-3:5"), Ok((BigInt::from(-3), BigInt::from(5))));
        assert!(parse_range("5:-3").is_err());
        assert!(parse_range("7").is_err());
    }

    #[test]
    fn verbosity_counts_flags() {
        let args: Vec<OsString> = ["axerr", "-vv", "metrics", "--verbose"].iter().map(Into::into).collect();
        assert_eq!(verbosity(&args), 3);
    }

    #[test]
    fn histogram_for_truncation() {
        let (code, out, _) = run_str(&["histogram", "--exact", "adder:2", "--approx", "trunc:2:1"]);
        assert_eq!(code, 0);
        assert_eq!(out, "value,count,denominator\n0,8,16\n1,8,16\n");
    }

    #[test]
    fn bad_arguments_exit_one() {
        assert_eq!(run_str(&["metrics", "--exact", "adder:2"]).0, 1);
        assert_eq!(run_str(&["metrics", "--exact", "adder:2", "--approx", "nonsense:3"]).0, 1);
        assert_eq!(run_str(&["--help"]).0, 0);
    }
}
