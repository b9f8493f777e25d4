use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use shrinklab_core::diagnostics::{probe_window, verify_evolution_identities, IdentityConfig};
use shrinklab_core::flow::{self, FlowConfig, FlowMode, Termination};
use shrinklab_core::harness::registry::{self, Convention, Registry};
use shrinklab_core::harness::{
    self, canned, diagnose, load_trajectory, save_trajectory, write_atomic, write_diagnostics_csv, write_json, Check,
    DiagnosticsConfig, ExperimentConfig, Expectations, CANNED,
};
use shrinklab_core::shrinkers::{ShrinkerKind, ShrinkerSpec};
use shrinklab_core::spectral::{assemble_l, first_eigenpair};
use shrinklab_core::GeometrySnapshot;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "shrinklab", version, about = "Self-shrinkers, rescaled mean curvature flow and its diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a closed self-shrinker and write its geometry JSON.
    MakeShrinker(MakeShrinker),
    /// First eigenpair of the linearized operator on a shrinker.
    Eigens(Eigens),
    /// Run the flow from a geometry file.
    Flow(FlowCmd),
    /// Diagnose a stored trajectory.
    Diagnose(Diagnose),
    /// Convergence study of the evolution identities on one slice.
    VerifyIdentities(VerifyIdentities),
    /// Run a built-in experiment or an experiment config.
    Run(Run),
    /// Check or refreeze the registry of derived constants.
    Registry(RegistryCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Round,
    AbreschLanger,
    AngenentTorus,
}

#[derive(Args)]
struct MakeShrinker {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Sphere dimension for `round` (1: circle, 2: sphere profile).
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    p: u32,
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Outer crossing used to bracket the torus shot.
    #[arg(long)]
    guess: Option<f64>,
    #[arg(long, default_value_t = 512)]
    vertices: usize,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    /// Fail unless `max |H̃|` is at most this.
    #[arg(long, default_value_t = 1e-6)]
    max_residual: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct Eigens {
    #[arg(long, short)]
    geometry: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    probes: usize,
    /// Fail if the self-adjointness defect exceeds this.
    #[arg(long, default_value_t = 1e-8)]
    max_defect: f64,
}

#[derive(Args)]
struct FlowCmd {
    /// TOML with the flow settings (`mode`, `t_max`, `cfl`, `a_max`, ...).
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    initial: PathBuf,
    #[arg(long, short)]
    out_dir: PathBuf,
}

/// `[diagnostics]` and `[expect]` sections of an experiment config.
#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiagnoseFile {
    diagnostics: DiagnosticsConfig,
    expect: Expectations,
}

#[derive(Args)]
struct Diagnose {
    /// Trajectory JSONL; `.meta.json` and `.csv` sidecars are used if present.
    #[arg(long, short)]
    trajectory: PathBuf,
    /// TOML with `[diagnostics]` and `[expect]` tables.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Flow mode assumed when there is no meta sidecar.
    #[arg(long, value_enum, default_value = "rmcf")]
    mode: ModeArg,
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rmcf,
    Mcf,
}

#[derive(Args)]
struct VerifyIdentities {
    /// A single slice.
    #[arg(long, short, conflicts_with = "trajectory")]
    geometry: Option<PathBuf>,
    /// A trajectory JSONL; the slice nearest `--time` is used.
    #[arg(long, requires = "time")]
    trajectory: Option<PathBuf>,
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    half_width: f64,
    /// TOML with `modes`, `levels`, `spatial_dt`, `temporal_n`, `temporal_dts`.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1.8)]
    spatial_order: f64,
    #[arg(long, default_value_t = 0.9)]
    temporal_order: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct Run {
    /// Built-in experiment name.
    #[arg(required_unless_present_any = ["config", "list"])]
    experiment: Option<String>,
    /// Experiment TOML instead of a built-in name.
    #[arg(long, short, conflicts_with = "experiment")]
    config: Option<PathBuf>,
    /// Overrides the config's output directory.
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// List the built-in experiments.
    #[arg(long)]
    list: bool,
    /// Print the resolved config instead of running.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct RegistryCmd {
    #[command(subcommand)]
    action: RegistryAction,
}

#[derive(Subcommand)]
enum RegistryAction {
    /// Recompute every entry and compare with the frozen values.
    Check {
        /// Registry file; the bundled one when omitted.
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Recompute every entry and write them.
    Freeze {
        #[arg(long, default_value = "crates/core/data/registry.json")]
        path: PathBuf,
    },
    /// Print the entries of a registry.
    List {
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

fn print_checks(checks: &[Check]) -> bool {
    for c in checks {
        println!("{} {:<24} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.pass)
}

fn read_geometry(path: &Path) -> Result<GeometrySnapshot> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GeometrySnapshot::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

#[derive(Serialize)]
struct Provenance<'a> {
    spec: &'a ShrinkerSpec,
    shooting_parameter: f64,
    closure_error: f64,
    residual: f64,
    inner_radius: f64,
    outer_radius: f64,
    round: bool,
    tool_version: &'a str,
}

fn make_shrinker(a: MakeShrinker) -> Result<bool> {
    let kind = match a.kind {
        Kind::Round => ShrinkerKind::Round { n: a.n },
        Kind::AbreschLanger => ShrinkerKind::AbreschLanger { p: a.p, q: a.q },
        Kind::AngenentTorus => ShrinkerKind::AngenentTorus { guess: a.guess },
    };
    let spec = ShrinkerSpec { kind, n_vertices: a.vertices, tolerance: a.tolerance };
    let r = spec.build()?;
    write_atomic(&a.out, r.geometry.to_json().as_bytes())?;
    let sidecar = a.out.with_extension("provenance.json");
    write_json(
        &sidecar,
        &Provenance {
            spec: &spec,
            shooting_parameter: r.shooting_parameter,
            closure_error: r.closure_error,
            residual: r.residual,
            inner_radius: r.inner_radius,
            outer_radius: r.outer_radius,
            round: r.round,
            tool_version: harness::TOOL_VERSION,
        },
    )?;
    Ok(print_checks(&[Check {
        name: "residual".into(),
        pass: r.residual <= a.max_residual,
        detail: format!("max |H̃| = {:.3e} (limit {:.1e}), {} vertices", r.residual, a.max_residual, r.geometry.len()),
    }]))
}

fn eigens(a: Eigens) -> Result<bool> {
    let g = read_geometry(&a.geometry)?;
    let l = assemble_l(&g)?;
    let e = first_eigenpair(&l)?;
    let defect = l.self_adjointness_defect(a.seed, a.probes);
    write_json(&a.out, &e)?;
    Ok(print_checks(&[
        Check {
            name: "eigenpair".into(),
            pass: true,
            detail: format!("μ₁ = {:.12}, residual {:.2e}, {} iterations", e.eigenvalue, e.residual, e.iterations),
        },
        Check {
            name: "self-adjointness".into(),
            pass: defect <= a.max_defect,
            detail: format!("defect {defect:.2e} (limit {:.1e})", a.max_defect),
        },
    ]))
}

fn flow_cmd(a: FlowCmd) -> Result<bool> {
    let cfg: FlowConfig = read_toml(a.config.as_deref())?;
    let initial = read_geometry(&a.initial)?;
    let traj = flow::run(&initial, &cfg)?;
    std::fs::create_dir_all(&a.out_dir)?;
    save_trajectory(&a.out_dir, "trajectory", &traj)?;
    let last = traj.last().map_or(f64::NAN, |s| s.time());
    let ok = traj.termination != Termination::Error;
    let detail = match &traj.error {
        Some(e) => format!("{:?} at t = {last}: {e}", traj.termination),
        None => format!("{:?} at t = {last}, {} steps, {} slices", traj.termination, traj.steps.len(), traj.snapshots.len()),
    };
    Ok(print_checks(&[Check { name: "flow".into(), pass: ok, detail }]))
}

fn diagnose_cmd(a: Diagnose) -> Result<bool> {
    let file: DiagnoseFile = read_toml(a.config.as_deref())?;
    let mode = match a.mode {
        ModeArg::Rmcf => FlowMode::Rmcf,
        ModeArg::Mcf => FlowMode::Mcf,
    };
    let traj = load_trajectory(&a.trajectory, mode)?;
    let report = diagnose(&traj, &file.diagnostics)?;
    std::fs::create_dir_all(&a.out_dir)?;
    write_json(&a.out_dir.join("report.json"), &report)?;
    write_atomic(&a.out_dir.join("diagnostics.csv"), &write_diagnostics_csv(&traj, &report)?)?;
    Ok(print_checks(&report.checks(&file.diagnostics, &file.expect, traj.termination)))
}

fn verify_identities(a: VerifyIdentities) -> Result<bool> {
    let cfg: IdentityConfig = read_toml(a.config.as_deref())?;
    let report = match (&a.geometry, &a.trajectory) {
        (Some(g), _) => verify_evolution_identities(&read_geometry(g)?, &cfg)?,
        (None, Some(t)) => {
            let traj = load_trajectory(t, FlowMode::Rmcf)?;
            let snap = probe_window(&traj, a.time.expect("required by clap"), a.half_width)?;
            verify_evolution_identities(snap, &cfg)?
        }
        (None, None) => bail!("give --geometry or --trajectory with --time"),
    };
    write_atomic(&a.out, report.to_csv().as_bytes())?;
    print!("{}", report.summary());
    Ok(print_checks(&[Check {
        name: "identities".into(),
        pass: report.passes(a.spatial_order, a.temporal_order),
        detail: format!(
            "min spatial order {:?} (≥ {}), min temporal order {:?} (≥ {})",
            report.min_spatial_order(),
            a.spatial_order,
            report.min_temporal_order(),
            a.temporal_order
        ),
    }]))
}

fn run_cmd(a: Run) -> Result<bool> {
    if a.list {
        for name in CANNED {
            println!("{name}");
        }
        return Ok(true);
    }
    let mut cfg = match (&a.experiment, &a.config) {
        (_, Some(path)) => ExperimentConfig::load(path)?,
        (Some(name), None) => canned(name)?,
        (None, None) => bail!("name an experiment or pass --config"),
    };
    if let Some(dir) = a.out_dir {
        cfg.output.dir = dir;
    }
    if a.print_config {
        print!("{}", cfg.to_toml());
        return Ok(true);
    }
    let manifest = harness::run_experiment(&cfg)?;
    println!("{} → {} ({} artifacts)", manifest.experiment, cfg.output.dir.display(), manifest.artifacts.len());
    Ok(print_checks(&manifest.checks))
}

fn registry_cmd(a: RegistryCmd) -> Result<bool> {
    let load = |path: &Option<PathBuf>| -> Result<Registry> {
        Ok(match path {
            Some(p) => Registry::load(p)?,
            None => Registry::bundled()?,
        })
    };
    match a.action {
        RegistryAction::Check { path } => {
            let reg = load(&path)?;
            let report = registry::compare(&reg, &registry::measure(Convention::Standard)?);
            let checks: Vec<Check> = report
                .rows
                .iter()
                .map(|r| Check {
                    name: r.name.clone(),
                    pass: r.pass,
                    detail: format!("frozen {:e}, measured {:e}, {:?} {:e}", r.frozen, r.measured, r.comparison, r.tolerance),
                })
                .chain(report.missing.iter().map(|m| Check { name: m.clone(), pass: false, detail: "not measured".into() }))
                .collect();
            Ok(print_checks(&checks))
        }
        RegistryAction::Freeze { path } => {
            let reg = registry::freeze()?;
            reg.save(&path)?;
            println!("froze {} entries into {}", reg.entries.len(), path.display());
            Ok(true)
        }
        RegistryAction::List { path } => {
            for e in load(&path)?.entries {
                println!("{:<40} {:>24e} ± {:e} ({:?}; {})", e.name, e.value, e.tolerance, e.comparison, e.method);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MakeShrinker(a) => make_shrinker(a),
        Command::Eigens(a) => eigens(a),
        Command::Flow(a) => flow_cmd(a),
        Command::Diagnose(a) => diagnose_cmd(a),
        Command::VerifyIdentities(a) => verify_identities(a),
        Command::Run(a) => run_cmd(a),
        Command::Registry(a) => registry_cmd(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
