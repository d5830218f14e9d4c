//! `fixlab`: command-line front end for the solvers, simulators and
//! limit quadrature, plus a declarative plan runner for figure-scale
//! experiment grids.

mod plan;
mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fixlab_core::bd_solver::{annealed_exact, annealed_mc, conditioned_average};
use fixlab_core::estimate::{CSV_HEADER, CSV_HEADER_SIM};
use fixlab_core::lattice::{estimate_fixation, EdgeSampler, Topology};
use fixlab_core::limit::{g, y_first_moment, y_second_moment, QuadratureSpec};
use fixlab_core::{Error, FixationEstimate, Mode, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fixlab", version, about = "Fixation probabilities on random fitness landscapes")]
struct Cli {
    /// Cap the worker-thread count (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PointArgs {
    /// Number of sites.
    #[arg(long)]
    n: usize,
    /// Fitness amplitude in [0, 1).
    #[arg(long, conflicts_with = "c")]
    delta: Option<f64>,
    /// Scaled amplitude: delta = c / sqrt(n).
    #[arg(long)]
    c: Option<f64>,
}

impl PointArgs {
    fn delta(&self) -> Result<f64> {
        match (self.delta, self.c) {
            (Some(d), None) => Ok(d),
            (None, Some(c)) => Ok(c / (self.n as f64).sqrt()),
            _ => Err(Error::domain("exactly one of --delta or --c is required")),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Line,
    Circle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    /// Every directed edge, effective or not (the literal model).
    Uniform,
    /// Only the boundary edges that can change the configuration.
    Effective,
}

#[derive(Subcommand)]
enum Command {
    /// Exact annealed fixation probability by full enumeration.
    Exact {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo annealed average (exact per-environment solve).
    Mc {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long, env = "FIXLAB_SEED", default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact average conditioned on equal mutant/normal sign sums.
    Conditioned {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Event-level lattice simulation on a line or circle.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, value_enum, default_value_t = TopologyArg::Line)]
        topology: TopologyArg,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        #[arg(long, env = "FIXLAB_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SamplerArg::Effective)]
        sampler: SamplerArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// The scaling-limit curve g(c).
    LimitG {
        /// Evaluate at a single c.
        #[arg(long, required_unless_present = "table", conflicts_with = "table")]
        c: Option<f64>,
        /// Print a log-spaced c grid instead.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// First and second Y_M moment integrals.
    YMoments {
        #[arg(long)]
        m: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Declarative experiment plans (figure-scale grids).
    Plan {
        #[command(subcommand)]
        cmd: PlanCmd,
    },
}

#[derive(Subcommand)]
enum PlanCmd {
    /// Execute every plan in a TOML config, writing CSV + manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for outputs (default: alongside the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Use the full-scale replicate count (1e6) where the plan does
        /// not pin one, instead of the CI-friendly default (1e5).
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, env = "FIXLAB_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Render a plan's result CSV as an SVG figure.
    Plot {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore failure: the global pool can only be set once.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Parse(_) => 2,
        Error::EnumerationInfeasible(_) | Error::StepCapExceeded { .. } => 3,
        Error::Io(_) => 4,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Exact { point, out } => {
            let e = annealed_exact(point.n, point.delta()?)?;
            emit_estimate(&out, &e, Mode::Exact, None)
        }
        Command::Mc { point, replicates, seed, out } => {
            let e = annealed_mc(point.n, point.delta()?, replicates, seed)?;
            emit_estimate(&out, &e, Mode::Mc, None)
        }
        Command::Conditioned { point, out } => {
            let e = conditioned_average(point.n, point.delta()?)?;
            emit_estimate(&out, &e, Mode::Conditioned, None)
        }
        Command::Simulate { point, topology, replicates, seed, sampler, out } => {
            let topo = match topology {
                TopologyArg::Line => Topology::line(point.n)?,
                TopologyArg::Circle => Topology::circle(point.n)?,
            };
            let sampler = match sampler {
                SamplerArg::Uniform => EdgeSampler::Uniform,
                SamplerArg::Effective => EdgeSampler::Effective,
            };
            let e = estimate_fixation(topo, point.delta()?, replicates, seed, sampler)?;
            let mode = match topology {
                TopologyArg::Line => Mode::SimLine,
                TopologyArg::Circle => Mode::SimCircle,
            };
            emit_estimate(&out, &e, mode, Some(topo.kind_label()))
        }
        Command::LimitG { c, table, out } => {
            let grid: Vec<f64> = if table {
                // 25 log-spaced points over [0.1, 10].
                (0..25).map(|i| 0.1 * 100f64.powf(i as f64 / 24.0)).collect()
            } else {
                vec![c.expect("clap enforces --c unless --table")]
            };
            let spec = QuadratureSpec::default();
            let mut rows = Vec::new();
            let mut json = Vec::new();
            for c in grid {
                let v = g(c, &spec)?;
                rows.push(format!("{c},{:.17e},{:.3e}", v.value, v.estimated_abs_error));
                json.push(serde_json::json!({
                    "c": c, "g": v.value, "abs_err": v.estimated_abs_error,
                }));
            }
            let csv = format!("c,g,abs_err\n{}\n", rows.join("\n"));
            write_output(&out, csv, serde_json::Value::Array(json))
        }
        Command::YMoments { m, out } => {
            let spec = QuadratureSpec::default();
            let first = y_first_moment(m, &spec)?;
            let second = y_second_moment(m, &spec)?;
            let csv = format!(
                "m,first_moment,first_abs_err,second_moment,second_abs_err\n\
                 {m},{:.17e},{:.3e},{:.17e},{:.3e}\n",
                first.value, first.estimated_abs_error, second.value, second.estimated_abs_error,
            );
            let json = serde_json::json!({
                "m": m,
                "first_moment": first.value,
                "first_abs_err": first.estimated_abs_error,
                "second_moment": second.value,
                "second_abs_err": second.estimated_abs_error,
            });
            write_output(&out, csv, json)
        }
        Command::Plan { cmd } => match cmd {
            PlanCmd::Run { config, out_dir, paper_scale, seed } => {
                plan::run_config(&config, out_dir.as_deref(), paper_scale, seed)
            }
            PlanCmd::Plot { table, out } => plot::emit_plot(&table, &out),
        },
    }
}

fn emit_estimate(
    out: &OutArgs,
    e: &FixationEstimate,
    mode: Mode,
    topology: Option<&str>,
) -> Result<()> {
    let csv = match topology {
        Some(t) => format!("{CSV_HEADER_SIM}\n{}\n", e.csv_row_sim(mode, t)),
        None => format!("{CSV_HEADER}\n{}\n", e.csv_row(mode)),
    };
    let mut json = serde_json::json!({
        "n": e.n_sites,
        "delta": e.delta,
        "mode": mode.to_string(),
        "mean": e.mean,
        "std_error": e.std_error,
        "replicates": e.replicates,
        "seed": e.seed,
    });
    if let Some(t) = topology {
        json["topology"] = serde_json::json!(t);
    }
    write_output(out, csv, json)
}

fn write_output(out: &OutArgs, csv: String, json: serde_json::Value) -> Result<()> {
    let text = match out.format {
        Format::Csv => csv,
        Format::Json => format!("{:#}\n", json),
    };
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
