//! `vilenkin`: verification suites and experiments on truncated Vilenkin
//! groups. Exit status 1 means an exact identity failed, 2 a bad
//! configuration; drifting monitored constants only add warnings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use vilenkin_core::experiments::{
    run_atoms, run_convergence, run_estimates, transform_bench, verify_kernels, verify_operators, AtomsSummary,
    BenchRow, ConvergenceSummary, EstimatesSummary, SuiteSummary,
};
use vilenkin_core::group::DEFAULT_GRID_CAP;
use vilenkin_core::kernels::SRange;
use vilenkin_core::lebesgue::VerdictRule;
use vilenkin_core::testfns::{list_test_functions, TestFunction};
use vilenkin_core::GroupStructure;

const CAP_ENV: &str = "VILENKIN_GRID_CAP";

#[derive(Parser, Debug)]
#[command(name = "vilenkin", version, about = "Vilenkin group verification suites and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Radix pattern, repeated cyclically up to the depth.
    #[arg(long, default_value = "2,3", value_delimiter = ',')]
    radices: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SRangeArg {
    /// Shifts along s <= A.
    Through,
    /// Shifts along s <= A - 1.
    Below,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel decomposition, Dirichlet shift, r factor and means identities.
    VerifyKernels {
        #[command(flatten)]
        common: Common,
    },
    /// W against the V components, sublinearity and the L_inf bound.
    VerifyOperators {
        #[command(flatten)]
        common: Common,
        /// Random functions to test.
        #[arg(long, default_value_t = 5)]
        functions: usize,
        #[arg(long, default_value_t = 10)]
        points: usize,
    },
    /// Ratio scans of the four majorant estimates.
    Estimates {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SRangeArg::Through)]
        s_range: SRangeArg,
    },
    /// Lebesgue-point reports at sampled points of a test function.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Test function, e.g. indicator:2,0,0 (see list-functions).
        #[arg(long = "fn", default_value = "indicator")]
        function: String,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
    },
    /// Quasi-locality integrals and weak-type ratios for seeded atoms.
    Atoms {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1.0", value_delimiter = ',')]
        p: Vec<f64>,
        /// Support depths.
        #[arg(long = "support-depths", default_value = "1,2", value_delimiter = ',')]
        support_depths: Vec<usize>,
        /// Atoms per (p, N).
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Fast against naive 1-D transform timings for depths 1..=depth.
    TransformBench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Built-in test functions and their parameters.
    ListFunctions {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

type BoxError = Box<dyn std::error::Error>;

enum Failure {
    Config(String),
    Run(BoxError),
}

impl<E: Into<BoxError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

fn grid_cap() -> Result<u128, Failure> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{CAP_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_GRID_CAP),
    }
}

fn structure(common: &Common) -> Result<Arc<GroupStructure>, Failure> {
    GroupStructure::with_cap(&common.radices, common.depth, grid_cap()?)
        .map(Arc::new)
        .map_err(|e| Failure::Config(e.to_string()))
}

/// Write-then-rename so readers never see a partial file.
fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(body.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(out: Option<&Path>, body: &str) -> std::io::Result<()> {
    match out {
        Some(path) => write_atomic(path, body),
        None => std::io::stdout().lock().write_all(body.as_bytes()),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn digits(d: &[usize]) -> String {
    d.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn suite_csv(s: &SuiteSummary) -> String {
    let mut out = String::from("suite,check,cases,max_error,passed\n");
    for c in &s.checks {
        let _ = writeln!(out, "{},{},{},{:e},{}", s.suite, csv_field(&c.name), c.cases, c.max_error, c.passed);
    }
    out
}

fn estimates_csv(s: &EstimatesSummary) -> String {
    let mut out = String::from("estimate,s_range,depth,n,max_ratio,zero_mismatches\n");
    for r in &s.reports {
        for o in &r.per_order {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.estimate.name(),
                r.s_range.label(),
                r.depth,
                o.n,
                o.max_ratio,
                o.zero_mismatches
            );
        }
    }
    out
}

fn convergence_csv(s: &ConvergenceSummary) -> String {
    let mut out = String::from("x_digits,y_digits,j,W,sigma_err,verdict\n");
    for r in &s.reports {
        let verdict = serde_json::to_value(r.verdict).unwrap_or(Value::Null);
        for (j, (w, e)) in r.w.iter().zip(&r.sigma_err).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                digits(&r.x_digits),
                digits(&r.y_digits),
                j + 1,
                w,
                e,
                verdict.as_str().unwrap_or("")
            );
        }
    }
    out
}

fn atoms_csv(s: &AtomsSummary) -> String {
    let mut out = String::from("p,N,seed,cc,cs,sc,weak_ratio\n");
    for rep in &s.reports {
        for a in &rep.atoms {
            let r = &a.region_integrals;
            let _ = writeln!(out, "{},{},{},{},{},{},{}", rep.p, a.n, a.seed, r.cc, r.cs, r.sc, a.weak_ratio);
        }
    }
    out
}

fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("radices,depth,size,fast_ns,naive_ns,speedup,max_error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.2},{:e}",
            digits(&r.radices),
            r.depth,
            r.size,
            r.fast_ns,
            r.naive_ns,
            r.speedup,
            r.max_error
        );
    }
    out
}

fn render<T: serde::Serialize>(format: Format, value: &T, csv: impl FnOnce(&T) -> String) -> Result<String, Failure> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Csv => csv(value),
    })
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Returns whether every exact identity held.
fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::VerifyKernels { common } => {
            let g = structure(&common)?;
            let s = verify_kernels(&g, common.tol, common.seed)?;
            emit(common.out.as_deref(), &render(common.format, &s, suite_csv)?)?;
            Ok(s.identities_hold)
        }
        Command::VerifyOperators { common, functions, points } => {
            if functions == 0 {
                return Err(Failure::Config("--functions must be at least 1".into()));
            }
            let g = structure(&common)?;
            let s = verify_operators(&g, common.tol, common.seed, functions, points)?;
            emit(common.out.as_deref(), &render(common.format, &s, suite_csv)?)?;
            Ok(s.identities_hold)
        }
        Command::Estimates { common, s_range } => {
            let g = structure(&common)?;
            let range = match s_range {
                SRangeArg::Through => SRange::ThroughA,
                SRangeArg::Below => SRange::BelowA,
            };
            let s = run_estimates(&g, range)?;
            warn_all(&s.warnings);
            emit(common.out.as_deref(), &render(common.format, &s, estimates_csv)?)?;
            Ok(s.identities_hold)
        }
        Command::Convergence { common, function, points, threshold } => {
            let g = structure(&common)?;
            let f: TestFunction = function.parse().map_err(|e: vilenkin_core::Error| Failure::Config(e.to_string()))?;
            let s = run_convergence(&g, &f, points, common.seed, VerdictRule::with_threshold(threshold), common.tol)?;
            warn_all(&s.warnings);
            emit(common.out.as_deref(), &render(common.format, &s, convergence_csv)?)?;
            Ok(s.identities_hold)
        }
        Command::Atoms { common, p, support_depths, count } => {
            let g = structure(&common)?;
            let s = run_atoms(&g, &p, &support_depths, count, common.seed)
                .map_err(|e| Failure::Config(e.to_string()))?;
            warn_all(&s.warnings);
            emit(common.out.as_deref(), &render(common.format, &s, atoms_csv)?)?;
            Ok(s.identities_hold)
        }
        Command::TransformBench { common, reps } => {
            structure(&common)?;
            let rows = (1..=common.depth)
                .map(|d| {
                    let g = Arc::new(GroupStructure::with_cap(&common.radices, d, grid_cap()?)?);
                    Ok(transform_bench(&g, reps, common.seed)?)
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            emit(common.out.as_deref(), &render(common.format, &rows, |r| bench_csv(r))?)?;
            Ok(rows.iter().all(|r| r.max_error <= common.tol))
        }
        Command::ListFunctions { out, format } => {
            let catalog = list_test_functions();
            let body = render(format, &catalog, |c| {
                let mut s = String::from("name,signature,example,description\n");
                for e in c {
                    let _ = writeln!(
                        s,
                        "{},{},{},{}",
                        e.name,
                        csv_field(e.signature),
                        csv_field(e.example),
                        csv_field(e.description)
                    );
                }
                s
            })?;
            emit(out.as_deref(), &body)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: an exact identity failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
