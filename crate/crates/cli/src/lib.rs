//! Command-line front end: `check`, `catalog`, `solve-b` and `sweep`.
//!
//! Exit codes for `check` are a function of the verdict only: 0 Satisfied,
//! 1 Violated, 2 Degenerate, 3 for usage or input errors.

mod frame;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};
use thiserror::Error;

use mincheck_core::catalog::{self, CatalogError};
use mincheck_core::conditions::{run_check, CheckError, CheckKind, Tolerances, Verdict};
use mincheck_core::expr::{parse_with_overrides, ImmersionSpec, ParseError};
use mincheck_core::geometry::{FrameError, FrameSplit, Split};
use mincheck_core::report::{
    generate_samples, write_report, CheckReport, Format, FrameInfo, Provenance, ReportError,
    SamplePlan, Strategy,
};

pub use frame::read_frame_matrix;

pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Satisfied => 0,
        Verdict::Violated => 1,
        Verdict::Degenerate => 2,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mincheck",
    version,
    about = "Spectral checks for minimal immersions"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one immersion against a spectral condition.
    Check(CheckArgs),
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Solve for b in the (e^{iax_j}, b sum x_j) family.
    SolveB {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
    },
    /// Sweep a catalog family over one parameter and tabulate the results as CSV.
    Sweep(sweep::SweepArgs),
}

#[derive(Debug, Subcommand)]
enum CatalogAction {
    /// One line per entry with default parameters.
    List,
    /// Summary line and generated source of one entry.
    Show {
        id: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Sphere,
    Cylinder,
    Torus,
}

impl From<KindArg> for CheckKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sphere => CheckKind::Sphere,
            KindArg::Cylinder => CheckKind::Cylinder,
            KindArg::Torus => CheckKind::Torus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct SamplingArgs {
    /// Number of sample points.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of each box side excluded at both ends.
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    /// Use a regular grid instead of random points.
    #[arg(long)]
    grid: bool,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Spread tolerance for recovered constants.
    #[arg(long = "tol-const", default_value_t = 1e-8)]
    tol_const: f64,
}

impl SamplingArgs {
    pub(crate) fn plan(&self) -> SamplePlan {
        SamplePlan {
            seed: self.seed,
            count: self.samples,
            margin: self.margin,
            strategy: if self.grid {
                Strategy::Grid
            } else {
                Strategy::UniformRandom
            },
        }
    }

    pub(crate) fn tolerances(&self) -> Result<Tolerances, CliError> {
        if !(self.tol > 0.0 && self.tol_const > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        Ok(Tolerances {
            check: self.tol,
            constant: self.tol_const,
        })
    }
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(value_enum)]
    kind: KindArg,
    /// Catalog entry to check.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    catalog: Option<String>,
    /// Immersion file to check.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Parameter value, `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Dimension of the (first) sphere factor.
    #[arg(long)]
    n: Option<usize>,
    /// Dimension of the flat factor (cylinder) or second sphere (torus).
    #[arg(long)]
    k: Option<usize>,
    /// Frame matrix file: N rows of N reals, columns are the frame vectors.
    #[arg(long)]
    frame: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })
}

/// Split for a check kind from explicit `--n/--k`, falling back to a default.
fn resolve_split(
    kind: CheckKind,
    n: Option<usize>,
    k: Option<usize>,
    ambient_dim: usize,
    fallback: Option<Split>,
) -> Result<Split, CliError> {
    let reserved = match kind {
        CheckKind::Cylinder => 1,
        CheckKind::Torus => 2,
        CheckKind::Sphere => unreachable!("sphere checks use no frame"),
    };
    let free = ambient_dim.checked_sub(reserved).ok_or_else(|| {
        CliError::Usage(format!(
            "ambient dimension {ambient_dim} too small for a {kind} split"
        ))
    })?;
    let (n, k) = match (n, k) {
        (Some(n), Some(k)) => (n, k),
        (Some(n), None) => (n, free.saturating_sub(n)),
        (None, Some(k)) => (free.saturating_sub(k), k),
        (None, None) => match (kind, fallback) {
            (CheckKind::Cylinder, Some(s @ Split::Cylinder { .. }))
            | (CheckKind::Torus, Some(s @ Split::Torus { .. })) => return Ok(s),
            (CheckKind::Cylinder, _) => (free.saturating_sub(1), 1),
            _ => (free / 2, free - free / 2),
        },
    };
    let split = match kind {
        CheckKind::Cylinder => Split::Cylinder { n, k },
        _ => Split::Torus { n, k },
    };
    if split.ambient_dim() != ambient_dim || n == 0 || k == 0 {
        return Err(CliError::Usage(format!(
            "split n = {n}, k = {k} does not fit ambient dimension {ambient_dim}"
        )));
    }
    Ok(split)
}

struct Input {
    spec: ImmersionSpec,
    provenance: Provenance,
    default_split: Option<Split>,
}

fn load_input(args: &CheckArgs) -> Result<Input, CliError> {
    match (&args.catalog, &args.file) {
        (Some(id), None) => {
            let inst = catalog::instantiate(id, &args.params)?;
            Ok(Input {
                provenance: Provenance::Catalog {
                    id: inst.id.to_string(),
                    params: inst.params.iter().cloned().collect(),
                },
                default_split: inst.frame.as_ref().map(FrameSplit::split),
                spec: inst.spec,
            })
        }
        (None, Some(path)) => {
            let bytes = read_file(path)?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
            let spec =
                parse_with_overrides(&text, &args.params).map_err(|source| CliError::Parse {
                    path: path.clone(),
                    source,
                })?;
            Ok(Input {
                spec,
                provenance: Provenance::File {
                    path: path.display().to_string(),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                    params: args.params.iter().cloned().collect::<BTreeMap<_, _>>(),
                },
                default_split: None,
            })
        }
        _ => Err(CliError::Usage(
            "exactly one of --catalog or --file is required".into(),
        )),
    }
}

fn run_check_command(args: &CheckArgs, out: &mut dyn Write) -> Result<Verdict, CliError> {
    let kind = CheckKind::from(args.kind);
    let input = load_input(args)?;
    let frame = match kind {
        CheckKind::Sphere => None,
        _ => {
            let split = resolve_split(
                kind,
                args.n,
                args.k,
                input.spec.ambient_dim,
                input.default_split,
            )?;
            let frame = match &args.frame {
                Some(path) => {
                    let text = String::from_utf8(read_file(path)?)
                        .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
                    let basis = read_frame_matrix(&text, input.spec.ambient_dim)?;
                    FrameSplit::new(basis, split)?
                }
                None => FrameSplit::standard(split)?,
            };
            Some(frame)
        }
    };

    let plan = args.sampling.plan();
    let tol = args.sampling.tolerances()?;
    let samples = generate_samples(&plan, &input.spec.domain_box)?;
    let result = run_check(kind, &input.spec, frame.as_ref(), &samples, tol)?;
    let verdict = result.verdict;
    let report = CheckReport::new(
        input.provenance,
        frame.as_ref().map_or_else(FrameInfo::none, FrameInfo::of),
        plan,
        tol,
        result,
    );
    let format = match args.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    let bytes = write_report(&report, format);
    match &args.report {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => out.write_all(&bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })?,
    }
    Ok(verdict)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Check(args) => Ok(exit_code(run_check_command(&args, out)?)),
        Command::Catalog { action } => {
            match action {
                CatalogAction::List => {
                    for e in catalog::ENTRIES {
                        let inst = catalog::instantiate(e.id, &[])?;
                        write_out(out, &format!("{}\n", inst.summary_line()))?;
                    }
                }
                CatalogAction::Show { id, params } => {
                    let inst = catalog::instantiate(&id, &params)?;
                    let entry = catalog::entry(&id).expect("instantiated entries exist");
                    write_out(
                        out,
                        &format!(
                            "{}\n# {}\n# {}\n{}",
                            inst.summary_line(),
                            entry.description,
                            entry.provenance,
                            inst.source
                        ),
                    )?;
                }
            }
            Ok(0)
        }
        Command::SolveB { n, a } => {
            let b = catalog::solve_b(n, a)?;
            write_out(out, &format!("b = {b}\nb^2 = {}\n", b * b))?;
            Ok(0)
        }
        Command::Sweep(args) => sweep::run(&args, out),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
