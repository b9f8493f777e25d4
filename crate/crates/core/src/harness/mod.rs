//! Experiment orchestration: TOML configs, the built-in experiments, the
//! construct → perturb → flow → diagnose pipeline, artifact output and the
//! regression registry.

mod artifacts;
mod config;
pub mod registry;
mod svg;

pub use artifacts::{
    load_trajectory, read_jsonl, read_steps_csv, save_trajectory, write_atomic, write_diagnostics_csv, write_json,
    write_jsonl, write_steps_csv, TrajectoryMeta,
};
pub use config::{
    canned, canned_source, Band, DiagnosticsConfig, Direction, ExperimentConfig, Expectations, FSource, OutputConfig,
    PerturbationConfig, CANNED,
};
pub use svg::{emit_svg, write_svg, OverlayCircle, SvgOptions};

use crate::diagnostics::{
    self, avoidance_check, detect_and_classify, isoperimetric_ratio, nestedness, noncollapse_delta, pinching_check,
    probe_window, sign_preservation, verify_evolution_identities, AvoidanceReport, IdentityCheckReport,
    NestednessReport, NonCollapseReport, PinchingReport, SignReport, SingularityReport, Template,
};
use crate::error::{Error, Result};
use crate::flow::{self, rmcf_to_mcf, FlowConfig, FlowMode, FlowTrajectory, Termination};
use crate::geometry::{GeometrySnapshot, Mode, Topology};
use crate::shrinkers::{ShootingResult, ShrinkerKind};
use crate::spectral::{
    assemble_l, classify_perturbation, first_eigenpair, perturb, search_amplitude, Classification, Convexity,
    EigenPair, PerturbationSpec,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One pass/fail line of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerSummary {
    pub n_vertices: usize,
    pub residual: f64,
    pub shooting_parameter: f64,
    pub closure_error: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub round: bool,
}

impl From<&ShootingResult> for ShrinkerSummary {
    fn from(s: &ShootingResult) -> Self {
        Self {
            n_vertices: s.geometry.len(),
            residual: s.residual,
            shooting_parameter: s.shooting_parameter,
            closure_error: s.closure_error,
            inner_radius: s.inner_radius,
            outer_radius: s.outer_radius,
            round: s.round,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Relative defect of `⟨Lu, v⟩ = ⟨u, Lv⟩` on seeded probes.
    pub self_adjointness_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSummary {
    pub s: f64,
    pub classification: Classification,
    /// Halvings taken by the amplitude search (0 for a fixed amplitude).
    pub halvings: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub mode: FlowMode,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub start_time: f64,
    pub final_time: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub remesh_events: usize,
    pub final_vertices: usize,
    pub final_max_a: f64,
}

impl FlowSummary {
    pub fn of(traj: &FlowTrajectory) -> Self {
        let first = traj.snapshots.first();
        let last = traj.last();
        Self {
            mode: traj.mode,
            termination: traj.termination,
            error: traj.error.clone(),
            start_time: first.map_or(f64::NAN, |s| s.time()),
            final_time: last.map_or(f64::NAN, |s| s.time()),
            steps: traj.steps.len(),
            snapshots: traj.snapshots.len(),
            remesh_events: traj.remesh_events.len(),
            final_vertices: last.map_or(0, |s| s.len()),
            final_max_a: last.map_or(f64::NAN, |s| s.max_second_fundamental()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonCollapseSample {
    pub time: f64,
    pub n_vertices: usize,
    pub delta: NonCollapseReport,
    pub pinching: PinchingReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NonCollapseSeries {
    pub samples: Vec<NonCollapseSample>,
    /// Slices left out because they exceed the vertex limit of the scan.
    pub skipped: usize,
}

/// Everything [`diagnose`] could compute on a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign: Option<SignReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nestedness: Option<NestednessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noncollapse: Option<NonCollapseSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singularity: Option<SingularityReport>,
    /// Classification of the transported mean curvature flow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mcf_singularity: Option<SingularityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identities: Option<IdentityCheckReport>,
    /// `(time, L²/(4πpA))` per stored slice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isoperimetric: Option<Vec<[f64; 2]>>,
    /// Diagnostics that were requested but could not run.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub errors: BTreeMap<String, String>,
}

fn nonincreasing(series: &[[f64; 2]]) -> bool {
    series.windows(2).all(|w| w[1][1] <= w[0][1] + 1e-9)
}

impl DiagnosticsReport {
    /// Pass/fail lines for the diagnostics that ran and the expectations set.
    pub fn checks(&self, cfg: &DiagnosticsConfig, expect: &Expectations, termination: Termination) -> Vec<Check> {
        let mut out = Vec::new();
        if let Some(want) = expect.termination {
            out.push(Check::new(
                "termination",
                termination == want,
                format!("expected {want:?}, got {termination:?}"),
            ));
        }
        let sing = self.singularity.as_ref();
        let missing = || "no singularity report".to_string();
        if let Some(band) = expect.singular_time {
            out.push(match sing {
                Some(s) => Check::new(
                    "singular-time",
                    band.contains(s.singular_time),
                    format!("T = {:.6} (expected {} ± {})", s.singular_time, band.value, band.tolerance),
                ),
                None => Check::new("singular-time", false, missing()),
            });
        }
        if !expect.tangent_type.is_empty() {
            out.push(match sing {
                Some(s) => Check::new(
                    "tangent-type",
                    expect.tangent_type.contains(&s.tangent_type),
                    format!("{:?} via {:?} template, fit residual {:?}", s.tangent_type, s.template, s.fit_residual),
                ),
                None => Check::new("tangent-type", false, missing()),
            });
        }
        if let Some(want) = expect.collapse_side {
            out.push(match sing {
                Some(s) => Check::new(
                    "collapse-side",
                    s.collapse_side == want,
                    format!(
                        "{:?} (velocity sign {:+.3}, normal alignment {:+.4})",
                        s.collapse_side, s.velocity_sign, s.normal_alignment
                    ),
                ),
                None => Check::new("collapse-side", false, missing()),
            });
        }
        if let Some(band) = expect.decay_exponent {
            out.push(match sing {
                Some(s) => Check::new(
                    "decay-exponent",
                    band.contains(s.decay_exponent),
                    format!(
                        "α = {:.4} [{:.4}, {:.4}] (expected {} ± {})",
                        s.decay_exponent, s.exponent_interval[0], s.exponent_interval[1], band.value, band.tolerance
                    ),
                ),
                None => Check::new("decay-exponent", false, missing()),
            });
        }
        if let Some(s) = &self.sign {
            out.push(Check::new(
                "sign-preservation",
                s.pass,
                format!(
                    "{:?}: {} slice and {} step violations over {} slices",
                    s.expected,
                    s.snapshot_violations,
                    s.step_violations,
                    s.times.len()
                ),
            ));
        }
        if let Some(n) = &self.nestedness {
            out.push(Check::new(
                "nestedness",
                n.pass,
                format!(
                    "{:?}: {} violations over {} pairs ({} vertices)",
                    n.expected, n.violations, n.pairs_checked, n.vertices_checked
                ),
            ));
        }
        if let Some(series) = &self.noncollapse {
            if let Some(first) = series.samples.first() {
                let d0 = first.delta.delta_in;
                let worst = series.samples.iter().map(|s| s.delta.delta_in / d0).fold(f64::INFINITY, f64::min);
                out.push(Check::new(
                    "noncollapse-monotone",
                    worst >= 1.0 - cfg.noncollapse_slack,
                    format!(
                        "min δ(t)/δ(0) = {worst:.6} over {} slices ({} skipped)",
                        series.samples.len(),
                        series.skipped
                    ),
                ));
                let ratio = series.samples.iter().map(|s| s.pinching.ratio).fold(0.0, f64::max);
                out.push(Check::new(
                    "pinching",
                    series.samples.iter().all(|s| s.pinching.pass),
                    format!("max |A|·δ*/|H̃| = {ratio:.8}"),
                ));
            }
        }
        if let (Some(a), Some(b)) = (sing, &self.mcf_singularity) {
            let scale = (-a.singular_time / 2.0).exp();
            let dy = ((b.singular_point[0] - scale * a.singular_point[0]).powi(2)
                + (b.singular_point[1] - scale * a.singular_point[1]).powi(2))
            .sqrt();
            let same = a.tangent_type == b.tangent_type && a.collapse_side == b.collapse_side;
            out.push(Check::new(
                "mcf-cross-check",
                same && dy <= cfg.cross_check_tolerance,
                format!(
                    "MCF: {:?}/{:?}, |y_MCF − e^(−T/2) y| = {dy:.2e}",
                    b.tangent_type, b.collapse_side
                ),
            ));
        }
        if let Some(r) = &self.identities {
            let (sp, tp) = (cfg.identity_spatial_order, cfg.identity_temporal_order);
            out.push(Check::new(
                "identities",
                r.passes(sp, tp),
                format!(
                    "min spatial order {:?} (≥ {sp}), min temporal order {:?} (≥ {tp}) at t = {:.4}",
                    r.min_spatial_order(),
                    r.min_temporal_order(),
                    r.source_time
                ),
            ));
        }
        if let Some(series) = &self.isoperimetric {
            let (first, last) = (series[0][1], series[series.len() - 1][1]);
            out.push(Check::new(
                "isoperimetric-trend",
                nonincreasing(series) && last < first,
                format!("L²/(4πpA): {first:.6} → {last:.6}"),
            ));
        }
        for (name, err) in &self.errors {
            out.push(Check::new(name, false, err.clone()));
        }
        out
    }
}

/// Run every enabled diagnostic on a trajectory. Failures of individual
/// diagnostics are collected in [`DiagnosticsReport::errors`].
pub fn diagnose(traj: &FlowTrajectory, cfg: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    let first = traj.snapshots.first().ok_or(Error::EmptyInput)?;
    let mut rep = DiagnosticsReport::default();
    let mut errors = BTreeMap::new();
    let mut record = |name: &str, e: Error| {
        errors.insert(name.to_string(), e.to_string());
    };

    if cfg.sign && traj.mode == FlowMode::Rmcf {
        match sign_preservation(traj) {
            Ok(r) => rep.sign = Some(r),
            Err(e) => record("sign-preservation", e),
        }
    }
    if cfg.nestedness {
        match nestedness(traj) {
            Ok(r) => rep.nestedness = Some(r),
            Err(e) => record("nestedness", e),
        }
    }
    if cfg.noncollapse_every > 0 {
        let mut series = NonCollapseSeries::default();
        for snap in traj.snapshots.iter().step_by(cfg.noncollapse_every) {
            if snap.len() > cfg.noncollapse_max_vertices {
                series.skipped += 1;
                continue;
            }
            match noncollapse_delta(snap) {
                Ok(delta) => {
                    let pinching = pinching_check(snap, &delta);
                    series.samples.push(NonCollapseSample { time: snap.time(), n_vertices: snap.len(), delta, pinching });
                }
                Err(e) => {
                    record("noncollapse", e);
                    break;
                }
            }
        }
        rep.noncollapse = Some(series);
    }
    if cfg.classify && traj.termination == Termination::BlowUp {
        match detect_and_classify(traj, &cfg.singularity) {
            Ok(r) => rep.singularity = Some(r),
            Err(e) => record("singularity", e),
        }
        if cfg.mcf_cross_check && traj.mode == FlowMode::Rmcf {
            match rmcf_to_mcf(traj).and_then(|m| detect_and_classify(&m, &cfg.singularity)) {
                Ok(r) => rep.mcf_singularity = Some(r),
                Err(e) => record("mcf-cross-check", e),
            }
        }
    }
    if cfg.identities {
        let t0 = first.time();
        let end = rep.singularity.as_ref().map_or_else(|| traj.last().map_or(t0, |s| s.time()), |s| s.singular_time);
        let centre = t0 + cfg.probe_fraction * (end - t0);
        match probe_window(traj, centre, cfg.probe_half_width)
            .and_then(|snap| verify_evolution_identities(snap, &cfg.identity))
        {
            Ok(r) => rep.identities = Some(r),
            Err(e) => record("identities", e),
        }
    }
    if cfg.isoperimetric {
        if first.mode() == Mode::Curve && first.topology() == Topology::Closed {
            rep.isoperimetric =
                Some(traj.snapshots.iter().map(|s| [s.time(), isoperimetric_ratio(s)]).collect());
        } else {
            record("isoperimetric-trend", Error::InvalidConfig("the isoperimetric ratio needs a planar curve".into()));
        }
    }
    rep.errors = errors;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub flow: FlowSummary,
    pub isoperimetric: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singularity: Option<SingularityReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormComparison {
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub times_compared: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub shrinker: ShrinkerSummary,
    pub eigen: EigenSummary,
    pub perturbation: PerturbationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_perturbation: Option<PerturbationSummary>,
    pub flow: FlowSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub companion_flow: Option<FlowSummary>,
    pub diagnostics: DiagnosticsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avoidance: Option<AvoidanceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avoidance_closed_form: Option<ClosedFormComparison>,
}

/// In-memory result of [`execute`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub config: ExperimentConfig,
    pub shrinker: GeometrySnapshot,
    pub eigen: EigenPair,
    pub initial: GeometrySnapshot,
    pub trajectory: FlowTrajectory,
    pub companion: Option<FlowTrajectory>,
    pub continuation: Option<FlowTrajectory>,
    pub report: ExperimentReport,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub tool_version: String,
    /// Resolved config, defaults included; enough to reproduce the run.
    pub config: ExperimentConfig,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn read_f(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum FFile {
        Values(Vec<f64>),
        Eigen { eigenfunction: Vec<f64> },
    }
    let text = std::fs::read_to_string(path)?;
    Ok(match serde_json::from_str(&text)? {
        FFile::Values(v) => v,
        FFile::Eigen { eigenfunction } => eigenfunction,
    })
}

fn build_initial(
    shrinker: &GeometrySnapshot,
    eigen: &EigenPair,
    p: &PerturbationConfig,
) -> Result<(GeometrySnapshot, PerturbationSummary)> {
    let f = match p.source {
        FSource::Eigenfunction => eigen.eigenfunction.clone(),
        FSource::Constant => vec![1.0; shrinker.len()],
        FSource::File => read_f(p.file.as_deref().expect("validated"))?,
    };
    let (geometry, summary) = match (p.s, p.direction) {
        (Some(s), _) => {
            let g = perturb(shrinker, &PerturbationSpec { f, s })?;
            let classification = classify_perturbation(&g);
            (g, PerturbationSummary { s, classification, halvings: 0 })
        }
        (None, Some(d)) => {
            let v = search_amplitude(shrinker, &f, d.sign(), p.min_margin)?;
            let summary = PerturbationSummary { s: v.s, classification: v.classification, halvings: v.halvings };
            (v.geometry, summary)
        }
        (None, None) => unreachable!("validated"),
    };
    if summary.classification.kind == Convexity::Neither {
        return Err(Error::AbortNotGeneric);
    }
    Ok((geometry, summary))
}

/// Radius of a constant offset of the unit-speed circle shrinker.
fn offset_circle_radius(cfg: &ExperimentConfig, p: &PerturbationConfig) -> Option<f64> {
    match (cfg.shrinker.kind, p.source, p.s) {
        (ShrinkerKind::Round { n: 1 }, FSource::Constant, Some(s)) => Some(SQRT_2 + s),
        _ => None,
    }
}

/// Compare the avoidance distance with `√(r₂² − 2s) − √(r₁² − 2s)`, `s`
/// the elapsed time, while the smaller circle keeps a fraction of its size.
fn closed_form_distance(
    rep: &AvoidanceReport,
    r: (f64, f64),
    t0: f64,
    fraction: f64,
    tolerance: f64,
) -> ClosedFormComparison {
    let (r1, r2) = if r.0 <= r.1 { r } else { (r.1, r.0) };
    let mut max_error: f64 = 0.0;
    let mut n = 0;
    for (t, d) in rep.times.iter().zip(&rep.distances) {
        let s = t - t0;
        let inner = r1 * r1 - 2.0 * s;
        if inner < (fraction * r1).powi(2) {
            continue;
        }
        let want = (r2 * r2 - 2.0 * s).sqrt() - inner.sqrt();
        max_error = max_error.max((d - want).abs());
        n += 1;
    }
    ClosedFormComparison { inner_radius: r1, outer_radius: r2, times_compared: n, max_error, tolerance }
}

/// Run the whole pipeline in memory: construct the shrinker, its first
/// eigenpair, the perturbation (which must be rescaled mean convex or
/// concave), the flow and the diagnostics.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    let d = &config.diagnostics;
    let shooting = config.shrinker.build()?;
    let shrinker = shooting.geometry.clone();
    let l = assemble_l(&shrinker)?;
    let eigen = first_eigenpair(&l)?;
    let eigen_summary = EigenSummary {
        eigenvalue: eigen.eigenvalue,
        residual: eigen.residual,
        iterations: eigen.iterations,
        self_adjointness_defect: l.self_adjointness_defect(config.seed, d.self_adjointness_probes),
    };

    let (initial, perturbation) = build_initial(&shrinker, &eigen, &config.perturbation)?;
    let trajectory = flow::run(&initial, &config.flow)?;
    let diagnostics = diagnose(&trajectory, d)?;
    let mut checks = diagnostics.checks(d, &config.expect, trajectory.termination);

    let mut companion = None;
    let mut companion_perturbation = None;
    let mut avoidance = None;
    let mut avoidance_closed_form = None;
    if let Some(pc) = &config.companion {
        let (g, summary) = build_initial(&shrinker, &eigen, pc)?;
        let traj = flow::run(&g, &config.flow)?;
        let rep = avoidance_check(&trajectory, &traj, d.avoidance_tolerance)?;
        checks.push(Check::new(
            "avoidance",
            rep.pass,
            format!(
                "d(0) = {:.6}, min d(t) − d(0) = {:.3e} over {} times",
                rep.initial,
                rep.worst_change,
                rep.times.len()
            ),
        ));
        if let (Some(r1), Some(r2)) =
            (offset_circle_radius(config, &config.perturbation), offset_circle_radius(config, pc))
        {
            let t0 = config.flow.mode.start_time();
            let cf =
                closed_form_distance(&rep, (r1, r2), t0, d.closed_form_radius_fraction, d.closed_form_tolerance);
            checks.push(Check::new(
                "avoidance-closed-form",
                cf.times_compared > 0 && cf.max_error <= cf.tolerance,
                format!("max |d − d_exact| = {:.2e} over {} times", cf.max_error, cf.times_compared),
            ));
            avoidance_closed_form = Some(cf);
        }
        avoidance = Some(rep);
        companion_perturbation = Some(summary);
        companion = Some(traj);
    }

    let mut continuation = None;
    let mut continuation_report = None;
    if d.mcf_continuation {
        let cfg = FlowConfig { mode: FlowMode::Mcf, t_max: d.continuation_t_max, ..config.flow };
        let traj = flow::run(&initial, &cfg)?;
        let iso: Vec<[f64; 2]> = traj.snapshots.iter().map(|s| [s.time(), isoperimetric_ratio(s)]).collect();
        let singularity = if traj.termination == Termination::BlowUp {
            detect_and_classify(&traj, &d.singularity).ok()
        } else {
            None
        };
        let reference = diagnostics
            .isoperimetric
            .as_ref()
            .and_then(|s| s.last().map(|p| p[1]))
            .unwrap_or(iso[0][1]);
        let last = iso[iso.len() - 1][1];
        checks.push(Check::new(
            "mcf-continuation",
            traj.termination == Termination::BlowUp && nonincreasing(&iso) && last < reference,
            format!("{:?} at τ = {:.4}; L²/(4πpA): {:.6} → {last:.6}", traj.termination, FlowSummary::of(&traj).final_time, iso[0][1]),
        ));
        continuation_report = Some(ContinuationReport { flow: FlowSummary::of(&traj), isoperimetric: iso, singularity });
        continuation = Some(traj);
    }

    let report = ExperimentReport {
        name: config.name.clone(),
        shrinker: ShrinkerSummary::from(&shooting),
        eigen: eigen_summary,
        perturbation,
        companion_perturbation,
        flow: FlowSummary::of(&trajectory),
        companion_flow: companion.as_ref().map(FlowSummary::of),
        diagnostics,
        continuation: continuation_report,
        avoidance,
        avoidance_closed_form,
    };
    Ok(Outcome {
        config: config.clone(),
        shrinker,
        eigen,
        initial,
        trajectory,
        companion,
        continuation,
        report,
        checks,
    })
}

/// Overlay for the figure: the circle fitted to the last slice when the run
/// ended in a shrinking loop.
fn overlay(outcome: &Outcome) -> Option<OverlayCircle> {
    let s = outcome.report.diagnostics.singularity.as_ref()?;
    if s.template != Template::Loop {
        return None;
    }
    let last = outcome.trajectory.last()?;
    let (c, r, _) = diagnostics::fit_circle(last.vertices())?;
    Some(OverlayCircle { center: [c.x, c.y], radius: r })
}

/// Write every artifact of an outcome into `dir` and return the manifest,
/// which is written last and atomically.
pub fn write_artifacts(outcome: &Outcome, dir: &Path) -> Result<RunManifest> {
    std::fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        artifacts.push(name.to_string());
        Ok(())
    };
    put("config.toml", outcome.config.to_toml().as_bytes())?;
    put("shrinker.json", outcome.shrinker.to_json().as_bytes())?;
    put("eigen.json", &to_json_bytes(&outcome.eigen)?)?;
    put("initial.json", outcome.initial.to_json().as_bytes())?;
    put("diagnostics.csv", &write_diagnostics_csv(&outcome.trajectory, &outcome.report.diagnostics)?)?;
    put("report.json", &to_json_bytes(&outcome.report)?)?;
    if let Some(r) = &outcome.report.diagnostics.identities {
        put("identities.csv", r.to_csv().as_bytes())?;
    }
    if outcome.config.output.svg_every > 0 {
        let opts =
            SvgOptions { every: outcome.config.output.svg_every, overlay: overlay(outcome), ..SvgOptions::default() };
        put("trajectory.svg", emit_svg(&outcome.trajectory.snapshots, &opts)?.as_bytes())?;
    }
    for (stem, traj) in
        [("trajectory", Some(&outcome.trajectory)), ("companion", outcome.companion.as_ref()), ("continuation", outcome.continuation.as_ref())]
    {
        if let Some(t) = traj {
            artifacts.extend(save_trajectory(dir, stem, t)?);
        }
    }
    let manifest = RunManifest {
        experiment: outcome.config.name.clone(),
        config_hash: outcome.config.hash(),
        tool_version: TOOL_VERSION.to_string(),
        config: outcome.config.clone(),
        artifacts,
        checks: outcome.checks.clone(),
        pass: outcome.pass(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

/// Execute the experiment and write its artifacts to `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    let outcome = execute(config)?;
    write_artifacts(&outcome, &config.output.dir)
}
