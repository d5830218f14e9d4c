//! Declarative experiment plans: a TOML config describes one or more grids,
//! the runner writes one CSV per plan plus a JSON manifest that pins every
//! parameter of the run.

use fixlab_core::bd_solver::{annealed_exact, annealed_mc, conditioned_average};
use fixlab_core::estimate::format_sig17;
use fixlab_core::lattice::{estimate_fixation, EdgeSampler, Topology};
use fixlab_core::limit::{g, QuadratureSpec};
use fixlab_core::{Error, FixationEstimate, Mode, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Versioned result schema; `plan plot` validates against it.
pub const PLAN_HEADER_V1: &str = "n,delta,mode,topology,mean,std_error,replicates,seed,\
scaled_mean,scaled_std_error,prediction,prediction_ratio,error";

#[derive(Debug, Deserialize)]
struct PlanFile {
    #[serde(default)]
    plan: Vec<PlanSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanSpec {
    experiment_id: String,
    kind: PlanKind,
    topology: Option<TopologyName>,
    n_grid: Option<Vec<usize>>,
    delta: Option<f64>,
    c: Option<f64>,
    replicates: Option<u64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    mode: Option<ModeName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PlanKind {
    FigLine,
    FigInfty,
    FigCycle,
    Sweep,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TopologyName {
    Line,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ModeName {
    Exact,
    Mc,
    Conditioned,
    Sim,
}

/// How delta is derived from N on the grid.
#[derive(Debug, Clone, Copy)]
enum DeltaRule {
    Fixed(f64),
    Scaled(f64),
}

impl DeltaRule {
    fn delta(&self, n: usize) -> f64 {
        match *self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::Scaled(c) => c / (n as f64).sqrt(),
        }
    }
}

/// Which scale the comparison columns use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowScale {
    /// `N * mean` against `g(delta sqrt N)`.
    TimesN,
    /// `sqrt(pi N) * mean` against `g(delta sqrt N) sqrt(pi / N)`.
    SqrtPiN,
}

struct Series {
    mode: ModeName,
    topology: TopologyName,
}

pub fn run_config(
    config: &Path,
    out_dir: Option<&Path>,
    paper_scale: bool,
    default_seed: u64,
) -> Result<()> {
    let text = std::fs::read_to_string(config)?;
    let file: PlanFile =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("bad plan config: {e}")))?;
    if file.plan.is_empty() {
        return Err(Error::Parse("plan config defines no [[plan]] entries".into()));
    }
    let base = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.parent().unwrap_or(Path::new(".")).to_path_buf());
    for spec in &file.plan {
        run_one(spec, &base, paper_scale, default_seed)?;
    }
    Ok(())
}

fn run_one(spec: &PlanSpec, base: &Path, paper_scale: bool, default_seed: u64) -> Result<()> {
    if spec.delta.is_some() && spec.c.is_some() {
        return Err(Error::Parse(format!(
            "plan '{}': delta and c are mutually exclusive",
            spec.experiment_id
        )));
    }
    let started = Instant::now();
    let seed = spec.seed.unwrap_or(default_seed);
    let replicates = spec
        .replicates
        .unwrap_or(if paper_scale { 1_000_000 } else { 100_000 });
    let (rule, grid, scale, series) = resolve(spec)?;

    let mut rows = Vec::new();
    let mut failures = 0u32;
    for &n in &grid {
        let delta = rule.delta(n);
        for s in &series {
            match run_point(s, n, delta, replicates, seed) {
                Ok((mode, estimate)) => {
                    rows.push(format_row(s, mode, &estimate, scale)?);
                }
                Err(e) => {
                    // Partial-failure policy: record and keep sweeping.
                    failures += 1;
                    let msg = e.to_string().replace(',', ";");
                    rows.push(format!(
                        "{n},{},{},{},,,{replicates},{seed},,,,,{msg}",
                        format_sig17(delta),
                        mode_label(s.mode, s.topology),
                        topology_label(s.topology),
                    ));
                }
            }
        }
    }

    let csv_path = base.join(
        spec.output
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.experiment_id))),
    );
    if let Some(dir) = csv_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&csv_path, format!("{PLAN_HEADER_V1}\n{}\n", rows.join("\n")))?;

    let manifest = serde_json::json!({
        "schema_version": 1,
        "experiment_id": spec.experiment_id,
        "kind": format!("{:?}", spec.kind),
        "delta_rule": match rule {
            DeltaRule::Fixed(d) => serde_json::json!({"fixed": d}),
            DeltaRule::Scaled(c) => serde_json::json!({"scaled": c}),
        },
        "n_grid": grid,
        "replicates": replicates,
        "paper_scale": paper_scale,
        "seed": seed,
        "scale": match scale { RowScale::TimesN => "n*mean", RowScale::SqrtPiN => "sqrt(pi*n)*mean" },
        "rows": rows.len(),
        "failed_points": failures,
        "output": csv_path.to_string_lossy(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "timestamp_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    let manifest_path = csv_path.with_extension("manifest.json");
    std::fs::write(&manifest_path, format!("{manifest:#}\n"))?;
    eprintln!(
        "plan '{}': {} rows ({} failed) -> {}",
        spec.experiment_id,
        rows.len(),
        failures,
        csv_path.display()
    );
    Ok(())
}

/// Fill in per-kind defaults and decide the estimator series.
fn resolve(spec: &PlanSpec) -> Result<(DeltaRule, Vec<usize>, RowScale, Vec<Series>)> {
    let id = &spec.experiment_id;
    let line = TopologyName::Line;
    match spec.kind {
        PlanKind::FigLine => {
            let c = spec.c.unwrap_or(2.0);
            if spec.delta.is_some() {
                return Err(Error::Parse(format!("plan '{id}': fig-line wants c, not delta")));
            }
            let grid = spec.n_grid.clone().unwrap_or_else(|| (1..=25).map(|m| 10 * m).collect());
            let series = vec![Series { mode: spec.mode.unwrap_or(ModeName::Mc), topology: line }];
            Ok((DeltaRule::Scaled(c), grid, RowScale::TimesN, series))
        }
        PlanKind::FigInfty => {
            let d = spec.delta.unwrap_or(0.2);
            let grid = spec.n_grid.clone().unwrap_or_else(|| vec![25, 100, 400, 1600, 6400]);
            let series = vec![Series { mode: spec.mode.unwrap_or(ModeName::Mc), topology: line }];
            Ok((DeltaRule::Fixed(d), grid, RowScale::SqrtPiN, series))
        }
        PlanKind::FigCycle => {
            let c = spec.c.unwrap_or(2.0);
            let grid = spec.n_grid.clone().unwrap_or_else(|| vec![20, 40, 60, 80, 100]);
            // Circle by event simulation, line both ways as a cross-check.
            let series = vec![
                Series { mode: ModeName::Sim, topology: TopologyName::Circle },
                Series { mode: ModeName::Sim, topology: line },
                Series { mode: ModeName::Mc, topology: line },
            ];
            Ok((DeltaRule::Scaled(c), grid, RowScale::TimesN, series))
        }
        PlanKind::Sweep | PlanKind::Single => {
            let rule = match (spec.delta, spec.c) {
                (Some(d), None) => DeltaRule::Fixed(d),
                (None, Some(c)) => DeltaRule::Scaled(c),
                (None, None) => {
                    return Err(Error::Parse(format!("plan '{id}': needs delta or c")))
                }
                _ => unreachable!("checked in run_one"),
            };
            let grid = spec
                .n_grid
                .clone()
                .ok_or_else(|| Error::Parse(format!("plan '{id}': needs n_grid")))?;
            if spec.kind == PlanKind::Single && grid.len() != 1 {
                return Err(Error::Parse(format!("plan '{id}': single wants one grid point")));
            }
            let mode = spec.mode.unwrap_or(ModeName::Mc);
            let topology = spec.topology.unwrap_or(line);
            Ok((rule, grid, RowScale::TimesN, vec![Series { mode, topology }]))
        }
    }
}

fn run_point(
    s: &Series,
    n: usize,
    delta: f64,
    replicates: u64,
    seed: u64,
) -> Result<(Mode, FixationEstimate)> {
    match s.mode {
        // Exact routes bypass Monte Carlo entirely (std_error = 0).
        ModeName::Exact => Ok((Mode::Exact, annealed_exact(n, delta)?)),
        ModeName::Conditioned => Ok((Mode::Conditioned, conditioned_average(n, delta)?)),
        ModeName::Mc => Ok((Mode::Mc, annealed_mc(n, delta, replicates, seed)?)),
        ModeName::Sim => {
            let (topo, mode) = match s.topology {
                TopologyName::Line => (Topology::line(n)?, Mode::SimLine),
                TopologyName::Circle => (Topology::circle(n)?, Mode::SimCircle),
            };
            Ok((mode, estimate_fixation(topo, delta, replicates, seed, EdgeSampler::Effective)?))
        }
    }
}

fn mode_label(mode: ModeName, topology: TopologyName) -> String {
    match (mode, topology) {
        (ModeName::Exact, _) => "exact".into(),
        (ModeName::Mc, _) => "mc".into(),
        (ModeName::Conditioned, _) => "conditioned".into(),
        (ModeName::Sim, TopologyName::Line) => "sim-line".into(),
        (ModeName::Sim, TopologyName::Circle) => "sim-circle".into(),
    }
}

fn topology_label(t: TopologyName) -> &'static str {
    match t {
        TopologyName::Line => "line",
        TopologyName::Circle => "circle",
    }
}

fn format_row(s: &Series, mode: Mode, e: &FixationEstimate, scale: RowScale) -> Result<String> {
    let n = e.n_sites as f64;
    let factor = match scale {
        RowScale::TimesN => n,
        RowScale::SqrtPiN => (std::f64::consts::PI * n).sqrt(),
    };
    let gv = g(e.delta * n.sqrt(), &QuadratureSpec::default())?.value;
    let prediction = match scale {
        RowScale::TimesN => gv,
        RowScale::SqrtPiN => gv * (std::f64::consts::PI / n).sqrt(),
    };
    let scaled_mean = factor * e.mean;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},",
        e.n_sites,
        format_sig17(e.delta),
        mode,
        topology_label(s.topology),
        format_sig17(e.mean),
        format_sig17(e.std_error),
        e.replicates,
        e.seed.map(|s| s.to_string()).unwrap_or_default(),
        format_sig17(scaled_mean),
        format_sig17(factor * e.std_error),
        format_sig17(prediction),
        format_sig17(scaled_mean / prediction),
    ))
}
