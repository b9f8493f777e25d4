//! Explicit time stepping of mean curvature flow (`∂ₜx = −H n`) and its
//! rescaled form (`∂ₜx = −H̃ n`), with tangential redistribution after every
//! step, curvature-driven refinement and blow-up detection.

use crate::error::{Error, Result};
use crate::geometry::{redistribute, resample, GeometrySnapshot, Mode, Point};
use serde::{Deserialize, Serialize};

/// Stability limit of the explicit step for the five-point second
/// derivative, in units of `h²`.
const DIFFUSION_LIMIT: f64 = 0.375;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// Rescaled flow, velocity `H̃`, clock `t` starting at 0.
    Rmcf,
    /// Mean curvature flow, velocity `H`, clock `τ` starting at −1.
    Mcf,
}

impl FlowMode {
    pub fn start_time(self) -> f64 {
        match self {
            FlowMode::Rmcf => 0.0,
            FlowMode::Mcf => -1.0,
        }
    }

    /// Normal speed along `−n`.
    pub fn velocity(self, geom: &GeometrySnapshot) -> &[f64] {
        match self {
            FlowMode::Rmcf => geom.rescaled(),
            FlowMode::Mcf => geom.mean_curvature(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub mode: FlowMode,
    /// Duration of the run; the clock starts at [`FlowMode::start_time`].
    pub t_max: f64,
    pub cfl: f64,
    /// Accuracy cap on the step, on top of the stability limit.
    pub dt_max: f64,
    /// Blow-up threshold on `max |A|`.
    pub a_max: f64,
    /// Snapshots are stored on this time grid.
    pub output_interval: f64,
    /// Extra snapshot whenever `max |A|` has grown by this factor since the
    /// last stored one (`0` disables).
    pub curvature_output_factor: f64,
    /// Double the vertex count when `h · max |A|` exceeds this.
    pub refine_threshold: f64,
    pub max_vertices: usize,
    /// Full resample (with parameter refit) every this many steps (`0` disables).
    pub remesh_every: usize,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            mode: FlowMode::Rmcf,
            t_max: 10.0,
            cfl: 0.4,
            dt_max: f64::INFINITY,
            a_max: 1e3,
            output_interval: 0.05,
            curvature_output_factor: 2f64.sqrt(),
            refine_threshold: 0.15,
            max_vertices: 1 << 16,
            remesh_every: 0,
            max_steps: 20_000_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self, initial: &GeometrySnapshot) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.t_max > 0.0) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.dt_max > 0.0) {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if !(self.output_interval > 0.0) {
            return bad(format!("output_interval must be positive, got {}", self.output_interval));
        }
        let a0 = initial.max_second_fundamental();
        if !(self.a_max > a0) {
            return bad(format!("a_max {} must exceed the initial max |A| {a0}", self.a_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedTMax,
    BlowUp,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub max_a: f64,
    pub n_vertices: usize,
    pub min_rescaled: f64,
    pub max_rescaled: f64,
    /// Not tracked by transported runs.
    pub gaussian_area: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemeshEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    pub mode: FlowMode,
    pub snapshots: Vec<GeometrySnapshot>,
    pub steps: Vec<StepRecord>,
    pub remesh_events: Vec<RemeshEvent>,
    pub termination: Termination,
    /// Diagnostics when `termination` is [`Termination::Error`].
    pub error: Option<String>,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time()).collect()
    }

    pub fn last(&self) -> Option<&GeometrySnapshot> {
        self.snapshots.last()
    }

    /// Snapshot at time `t`, cubic in time through the four nearest stored
    /// snapshots (which must share a vertex count).
    pub fn interpolate(&self, t: f64) -> Result<GeometrySnapshot> {
        let times = self.times();
        let n = times.len();
        if n < 4 || t < times[0] || t > times[n - 1] {
            return Err(Error::InsufficientHistory(format!("no cubic stencil around t = {t}")));
        }
        let k = times.partition_point(|&s| s < t).clamp(2, n - 2);
        let idx = [k - 2, k - 1, k, k + 1];
        let len = self.snapshots[idx[0]].len();
        if idx.iter().any(|&i| self.snapshots[i].len() != len) {
            return Err(Error::InsufficientHistory(format!("remesh inside the stencil around t = {t}")));
        }
        let w: Vec<f64> = idx
            .iter()
            .map(|&i| {
                idx.iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (t - times[j]) / (times[i] - times[j]))
                    .product()
            })
            .collect();
        let v = (0..len)
            .map(|p| idx.iter().zip(&w).map(|(&i, wi)| self.snapshots[i].vertices()[p] * *wi).sum())
            .collect();
        Ok(self.snapshots[idx[0]].with_vertices(v)?.with_time(t))
    }
}

/// Largest stable step for the current geometry.
pub fn stable_dt(geom: &GeometrySnapshot, mode: FlowMode, cfl: f64) -> f64 {
    let h = geom.min_edge();
    let a = geom.max_second_fundamental();
    let v = mode.velocity(geom);
    let edges = &geom.derived().edge_length;
    let n = geom.len();
    let grad = (0..edges.len()).map(|i| (v[(i + 1) % n] - v[i]).abs() / edges[i]).fold(0.0, f64::max);
    let mut limit = (h * h).min(1.0 / (a * a).max(1e-300));
    if grad > 0.0 {
        limit = limit.min(h / grad);
    }
    if mode == FlowMode::Rmcf {
        // H̃ depends on the slope through ⟨x, n⟩, an advection at speed ⟨x, τ⟩/2;
        // the forward step with centred differences needs dt·c² below the diffusivity
        let c = geom
            .vertices()
            .iter()
            .zip(geom.normal())
            .map(|(x, n)| 0.5 * (n.x * x.y - n.y * x.x).abs())
            .fold(0.0, f64::max);
        if c > 0.0 {
            limit = limit.min(1.0 / (c * c));
        }
    }
    if geom.mode() == Mode::Revolution {
        // the first-order term n_r / r acts like a transport at speed 1/r
        let r_min = geom.vertices().iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        limit = limit.min(r_min * h);
    }
    cfl * DIFFUSION_LIMIT * limit
}

/// One explicit step `x ← x − dt·V·n` followed by redistribution to uniform
/// arclength at the same vertex count.
pub fn step(geom: &GeometrySnapshot, mode: FlowMode, dt: f64) -> Result<GeometrySnapshot> {
    let moved = advance(geom, mode, dt)?;
    let v = redistribute(&moved, geom.topology(), geom.len())?;
    Ok(geom.with_vertices(v)?.with_time(geom.time() + dt))
}

/// The normal update without redistribution (Lagrangian probe).
pub fn advance(geom: &GeometrySnapshot, mode: FlowMode, dt: f64) -> Result<Vec<Point>> {
    let vel = mode.velocity(geom);
    let moved: Vec<Point> = geom
        .vertices()
        .iter()
        .zip(geom.normal())
        .zip(vel)
        .map(|((x, n), v)| x - n * (dt * v))
        .collect();
    if moved.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::NumericalBlowup { time: geom.time(), detail: "non-finite vertex after step".into() });
    }
    Ok(moved)
}

/// Run the flow from `initial` until `t_max` or `max |A| ≥ a_max`.
pub fn run(initial: &GeometrySnapshot, config: &FlowConfig) -> Result<FlowTrajectory> {
    config.validate(initial)?;
    let mode = config.mode;
    let t0 = mode.start_time();
    let t_end = t0 + config.t_max;
    let mut geom = initial.clone().with_time(t0);
    let mut traj = FlowTrajectory {
        mode,
        snapshots: vec![geom.clone()],
        steps: Vec::new(),
        remesh_events: Vec::new(),
        termination: Termination::ReachedTMax,
        error: None,
    };
    let mut k_out = 1u64;
    let mut next_out = (t0 + config.output_interval).min(t_end);
    let mut last_stored_a = geom.max_second_fundamental();
    for n_step in 0.. {
        if n_step >= config.max_steps {
            traj.termination = Termination::Error;
            traj.error = Some(format!("step limit {} reached at t = {}", config.max_steps, geom.time()));
            break;
        }
        let t = geom.time();
        let mut dt = stable_dt(&geom, mode, config.cfl).min(config.dt_max);
        let mut landing = false;
        if t + dt >= next_out - 1e-12 * next_out.abs().max(1.0) {
            dt = next_out - t;
            landing = true;
        }
        let next = match step(&geom, mode, dt) {
            Ok(g) => g,
            Err(e) => {
                traj.termination = Termination::Error;
                traj.error = Some(format!("at t = {t}: {e}"));
                traj.snapshots.push(geom.clone());
                break;
            }
        };
        geom = if landing { next.with_time(next_out) } else { next };
        let max_a = geom.max_second_fundamental();
        let h = geom.rescaled();
        traj.steps.push(StepRecord {
            t: geom.time(),
            dt,
            max_a,
            n_vertices: geom.len(),
            min_rescaled: h.iter().cloned().fold(f64::INFINITY, f64::min),
            max_rescaled: h.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            gaussian_area: Some(geom.gaussian_area()),
        });
        if !max_a.is_finite() {
            traj.termination = Termination::Error;
            traj.error = Some(format!("non-finite curvature at t = {}", geom.time()));
            break;
        }
        if max_a >= config.a_max {
            traj.termination = Termination::BlowUp;
            traj.snapshots.push(geom);
            break;
        }
        if landing {
            traj.snapshots.push(geom.clone());
            last_stored_a = max_a;
            if geom.time() >= t_end - 1e-12 * t_end.abs().max(1.0) {
                break;
            }
            k_out += 1;
            next_out = (t0 + k_out as f64 * config.output_interval).min(t_end);
        } else if config.curvature_output_factor > 1.0 && max_a >= last_stored_a * config.curvature_output_factor {
            traj.snapshots.push(geom.clone());
            last_stored_a = max_a;
        }
        let spacing = geom.mean_spacing();
        let n = geom.len();
        let refine = spacing * max_a > config.refine_threshold && 2 * n <= config.max_vertices;
        let cadence = config.remesh_every > 0 && (n_step + 1) % config.remesh_every == 0;
        if refine || cadence || geom.min_edge() < 1e-8 * geom.diameter() {
            let to = if refine { 2 * n } else { n };
            geom = match resample(&geom, to) {
                Ok(g) => g,
                Err(e) => {
                    traj.termination = Termination::Error;
                    traj.error = Some(format!("remesh at t = {}: {e}", geom.time()));
                    break;
                }
            };
            traj.remesh_events.push(RemeshEvent { t: geom.time(), from: n, to });
        }
    }
    Ok(traj)
}

/// Transport an RMCF trajectory to MCF: `M_τ = √(−τ)·M̃_t` with `τ = −e^{−t}`.
pub fn rmcf_to_mcf(traj: &FlowTrajectory) -> Result<FlowTrajectory> {
    if traj.mode != FlowMode::Rmcf {
        return Err(Error::InvalidConfig("trajectory is not an RMCF run".into()));
    }
    let snapshots = traj
        .snapshots
        .iter()
        .map(|s| {
            let t = s.time();
            let scale = (-t / 2.0).exp();
            let v = s.vertices().iter().map(|p| p * scale).collect();
            Ok(s.with_vertices(v)?.with_time(-(-t).exp()))
        })
        .collect::<Result<Vec<_>>>()?;
    let steps = traj
        .steps
        .iter()
        .map(|r| {
            let grow = (r.t / 2.0).exp();
            StepRecord {
                t: -(-r.t).exp(),
                dt: (-(r.t - r.dt)).exp() - (-r.t).exp(),
                max_a: r.max_a * grow,
                n_vertices: r.n_vertices,
                min_rescaled: r.min_rescaled * grow,
                max_rescaled: r.max_rescaled * grow,
                gaussian_area: None,
            }
        })
        .collect();
    let remesh_events =
        traj.remesh_events.iter().map(|e| RemeshEvent { t: -(-e.t).exp(), ..*e }).collect();
    Ok(FlowTrajectory {
        mode: FlowMode::Mcf,
        snapshots,
        steps,
        remesh_events,
        termination: traj.termination,
        error: traj.error.clone(),
    })
}

/// Parabolic rescaling `σ(F(x, T + σ⁻²s) − y)` about `(y, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescalingSpec {
    pub sigma: f64,
    pub y: [f64; 2],
    pub t_ref: f64,
}

/// Rescaled snapshots whose rescaled time `σ²(t − T)` lies in `[−window, 0]`.
pub fn parabolic_rescale(traj: &FlowTrajectory, spec: &RescalingSpec, window: f64) -> Result<FlowTrajectory> {
    if !(spec.sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", spec.sigma)));
    }
    let s2 = spec.sigma * spec.sigma;
    let y = Point::new(spec.y[0], spec.y[1]);
    let snapshots = traj
        .snapshots
        .iter()
        .filter(|g| {
            let s = s2 * (g.time() - spec.t_ref);
            s >= -window && s <= 0.0
        })
        .map(|g| {
            let v = g.vertices().iter().map(|p| (p - y) * spec.sigma).collect();
            Ok(g.with_vertices(v)?.with_time(s2 * (g.time() - spec.t_ref)))
        })
        .collect::<Result<Vec<_>>>()?;
    if snapshots.is_empty() {
        return Err(Error::InsufficientHistory(format!(
            "no snapshot within {window} rescaled time units before T = {}",
            spec.t_ref
        )));
    }
    Ok(FlowTrajectory {
        mode: traj.mode,
        snapshots,
        steps: Vec::new(),
        remesh_events: Vec::new(),
        termination: traj.termination,
        error: None,
    })
}

/// Singular time from a quadratic fit of `1/max|A|²` over the last `k` steps.
pub fn extrapolate_singular_time(steps: &[StepRecord], k: usize) -> Result<f64> {
    if steps.len() < k.max(3) {
        return Err(Error::InsufficientHistory(format!("{} steps recorded, {k} needed", steps.len())));
    }
    let tail = &steps[steps.len() - k..];
    let t_last = tail[k - 1].t;
    // centre and scale time for conditioning
    let span = (t_last - tail[0].t).max(1e-300);
    let rows: Vec<Vec<f64>> = tail
        .iter()
        .map(|r| {
            let x = (r.t - t_last) / span;
            vec![1.0, x, x * x]
        })
        .collect();
    let rhs: Vec<f64> = tail.iter().map(|r| 1.0 / (r.max_a * r.max_a)).collect();
    let c = crate::linalg::least_squares(&rows, &rhs)
        .ok_or_else(|| Error::RegressionFailure("singular-time fit is rank deficient".into()))?;
    // smallest root beyond the last sample
    let (a, b, q) = (c[0], c[1], c[2]);
    let root = if q.abs() < 1e-14 * (a.abs() + b.abs()) {
        -a / b
    } else {
        let disc = b * b - 4.0 * q * a;
        if disc < 0.0 {
            -a / b
        } else {
            let s = disc.sqrt();
            let r1 = (-b - s) / (2.0 * q);
            let r2 = (-b + s) / (2.0 * q);
            [r1, r2].into_iter().filter(|r| *r >= 0.0).fold(f64::INFINITY, f64::min)
        }
    };
    if !root.is_finite() {
        return Err(Error::RegressionFailure("no zero of 1/|A|² ahead of the trajectory".into()));
    }
    Ok(t_last + root * span)
}
