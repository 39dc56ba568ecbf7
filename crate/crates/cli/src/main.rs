//! `carleman`: drives the kernel construction stage by stage.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use carleman_core::assignment::{Assignment, SummabilityReport};
use carleman_core::io::{grid_points, read_operator, write_grid_csv, GridRow};
use carleman_core::pipeline::{inspect, Inspection};
use carleman_core::splitting::{build_split, null_contributions};
use carleman_core::{run_all, Error, OperatorEnvironment, Orientation, Pipeline, PipelineConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "carleman",
    version,
    about = "Smooth bi-Carleman kernels for matrix operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Membership report and null-sequence normalization.
    Inspect,
    /// The splitting of S into J, J̃, Q, Q̃ and their roots (JSON).
    Split,
    /// The assignment U and the summability report (JSON).
    Assign,
    /// Coefficient tables of the kernel series (JSON).
    Kernel,
    /// Kernel values on a square grid (CSV).
    Eval,
    /// Runs every check and prints the report.
    Verify,
}

#[derive(Args, Debug)]
struct Options {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Operator document (JSON).
    #[arg(long, global = true)]
    operator: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Highest derivative order carried through the construction.
    #[arg(long, global = true)]
    imax: Option<usize>,
    /// Grid points per axis for `eval`.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Half-width of the `eval` grid and of the central check region.
    #[arg(long, global = true)]
    extent: Option<f64>,
    /// Seed for the sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluate only the first N terms of each kernel series.
    #[arg(long = "cap-terms", global = true)]
    cap_terms: Option<usize>,
}

/// Exit statuses per error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Field { .. } | Error::Io(_) | Error::Config(_) => 1,
        Error::Infeasible(_) | Error::Assignment(_) | Error::Range(_) => 2,
        Error::Numerical { .. } | Error::NonFinite(_) | Error::Dimension { .. } | Error::IndexOutOfRange { .. } => 4,
    }
}

const VERIFICATION_FAILED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(o: &Options) -> Result<PipelineConfig, Error> {
    let mut config = match &o.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(i) = o.imax {
        config.i_max = i;
    }
    if let Some(n) = o.grid {
        config.grid.resolution = n;
    }
    if let Some(x) = o.extent {
        config.grid.extent = x;
    }
    if let Some(s) = o.seed {
        config.seed = s;
    }
    if o.cap_terms.is_some() {
        config.cap_terms = o.cap_terms;
    }
    config.validate()?;
    Ok(config)
}

fn load_operator(o: &Options) -> Result<OperatorEnvironment, Error> {
    let path = o
        .operator
        .as_deref()
        .ok_or_else(|| Error::Config("--operator <path> is required".into()))?;
    read_operator(path)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Error> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(&cli.options)?;
    let env = load_operator(&cli.options)?;
    let out = cli.options.out.as_deref();
    match cli.command {
        Command::Inspect => {
            let report = inspect(&env, &config)?;
            emit(out, inspection_text(&report).as_bytes())?;
        }
        Command::Split => {
            let report = inspect(&env, &config)?;
            let split = build_split(&report.normalization.environment)?;
            emit(out, &to_json(&split)?)?;
        }
        Command::Assign => {
            let p = Pipeline::build(&env, &config)?;
            #[derive(serde::Serialize)]
            struct AssignOutput<'a> {
                assignment: &'a Assignment,
                summability: &'a SummabilityReport,
            }
            emit(
                out,
                &to_json(&AssignOutput {
                    assignment: &p.assignment,
                    summability: &p.summability,
                })?,
            )?;
        }
        Command::Kernel => {
            let p = Pipeline::build(&env, &config)?;
            emit(out, &to_json(&p.model)?)?;
        }
        Command::Eval => {
            let p = Pipeline::build(&env, &config)?;
            let pts = grid_points(config.grid.resolution, config.grid.extent);
            let mut rows = Vec::with_capacity(pts.len() * pts.len() * config.grid.derivatives.len());
            for &[i, j] in &config.grid.derivatives {
                let values = p
                    .model
                    .grid(&p.wavelets, Orientation::Kernel, &pts, &pts, i, j, p.eval_mode())?;
                for (a, &s) in pts.iter().enumerate() {
                    for (b, &t) in pts.iter().enumerate() {
                        rows.push(GridRow {
                            s,
                            t,
                            deriv_s: i,
                            deriv_t: j,
                            value: values[a * pts.len() + b],
                        });
                    }
                }
            }
            let mut bytes = Vec::new();
            write_grid_csv(&mut bytes, &rows)?;
            emit(out, &bytes)?;
        }
        Command::Verify => {
            let start = Instant::now();
            let p = Pipeline::build(&env, &config)?;
            let report = run_all(&p);
            emit(out, report.render().as_bytes())?;
            eprintln!(
                "verify: {} checks, {} failed, {:.1}s",
                report.records.len(),
                report.failures().count(),
                start.elapsed().as_secs_f64()
            );
            if !report.pass {
                return Ok(VERIFICATION_FAILED);
            }
        }
    }
    Ok(0)
}

fn inspection_text(r: &Inspection) -> String {
    let env = &r.environment;
    let m = &r.membership;
    let contributions = null_contributions(env);
    let mut s = String::new();
    s.push_str(&format!("dim {}\n", env.dim()));
    for (k, &idx) in env.null_indices().iter().enumerate() {
        s.push_str(&format!(
            "null k={k} index={idx} forward_norm={:e} adjoint_norm={:e} contribution={:e}\n",
            m.forward_norms[k], m.adjoint_norms[k], contributions[k]
        ));
    }
    s.push_str(&format!("membership member={} tolerance={:e}\n", m.member, m.tolerance));
    let n = &r.normalization;
    let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    s.push_str(&format!(
        "normalization kept=[{}] null=[{}] complement=[{}] sum={:e}\n",
        list(&n.kept),
        list(n.environment.null_indices()),
        list(n.environment.complement_indices()),
        n.sum
    ));
    s
}
