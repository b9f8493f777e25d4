//! Instruments that check a slice or a whole run against the qualitative
//! statements the flow is supposed to satisfy: sign preservation of `H̃`,
//! interior/exterior ball non-collapsing, curvature pinching, avoidance,
//! nestedness, the evolution identities and singularity classification.

mod identities;
mod singularity;

pub use identities::{
    probe_window, verify_evolution_identities, FourierLoop, IdentityCheckReport, IdentityConfig, IdentityRow, Study,
    EXACT_FLOOR,
};
pub(crate) use singularity::fit_circle;
pub use singularity::{
    detect_and_classify, CollapseSide, SingularityReport, SingularityOptions, TangentType, Template,
};

use crate::error::{Error, Result};
use crate::flow::{FlowMode, FlowTrajectory};
use crate::geometry::{
    distance_to_polygon, mirror, redistribute, GeometrySnapshot, Mode, Point, PolygonIndex, Side, Topology,
};
use crate::spectral::{classify_perturbation, Convexity};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `Z̃(x_i, x_j) = (H̃_i/2)|x_j − x_i|² + δ⟨x_j − x_i, n_i⟩`.
pub fn ztilde(geom: &GeometrySnapshot, delta: f64, i: usize, j: usize) -> f64 {
    let d = geom.vertices()[j] - geom.vertices()[i];
    0.5 * geom.rescaled()[i] * d.norm_squared() + delta * d.dot(&geom.normal()[i])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonCollapseReport {
    /// `+1` for rescaled mean convex slices, `−1` for concave ones.
    pub sign: f64,
    /// Largest `δ` whose interior tangent balls of radius `δ/|H̃|` stay
    /// inside the enclosed region.
    pub delta_in: f64,
    /// Same for exterior balls; `None` stands for `+∞`.
    pub delta_out: Option<f64>,
    /// `min sign·Z̃` over all pairs at `δ = sign·delta_in`.
    pub min_ztilde: f64,
    /// Pair attaining `delta_in`; `[i, i]` is the osculating limit at `i`.
    pub argmin: [usize; 2],
    /// The partner of `argmin` is the reflection `(−r, z)` of vertex `argmin[1]`.
    pub argmin_mirrored: bool,
}

impl NonCollapseReport {
    /// `δ* = min(delta_in, delta_out)`.
    pub fn delta_star(&self) -> f64 {
        self.delta_out.map_or(self.delta_in, |o| o.min(self.delta_in))
    }
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    j: usize,
    mirrored: bool,
}

impl Best {
    const NONE: Best = Best { value: f64::INFINITY, j: usize::MAX, mirrored: false };

    fn offer(&mut self, value: f64, j: usize, mirrored: bool) {
        if value < self.value {
            *self = Best { value, j, mirrored };
        }
    }
}

/// Evaluate `f(i)` for every row, splitting rows across threads. The result
/// does not depend on the thread count.
fn scan_rows<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(n.max(1));
    if threads <= 1 || n < 512 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|k| {
                let f = &f;
                s.spawn(move || (k * chunk..((k + 1) * chunk).min(n)).map(f).collect::<Vec<T>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scan worker panicked")).collect()
    })
}

/// Partners of a vertex: every other vertex and, for revolution profiles,
/// every reflected vertex. A ball centred in the profile half-plane is
/// closest to the rotated surface at angle 0 or π, so these suffice.
fn partners(geom: &GeometrySnapshot) -> Vec<(Point, usize, bool)> {
    let v = geom.vertices();
    let mut out: Vec<(Point, usize, bool)> = v.iter().enumerate().map(|(j, p)| (*p, j, false)).collect();
    if geom.mode() == Mode::Revolution {
        out.extend(v.iter().enumerate().map(|(j, p)| (mirror(*p), j, true)));
    }
    out
}

/// Non-collapsing constants of a slice by an `O(N²)` pair scan.
pub fn noncollapse_delta(geom: &GeometrySnapshot) -> Result<NonCollapseReport> {
    if geom.immersed() {
        return Err(Error::UnsupportedForImmersed);
    }
    let kind = classify_perturbation(geom).kind;
    let sign = match kind {
        Convexity::RescaledMeanConvex => 1.0,
        Convexity::RescaledMeanConcave => -1.0,
        Convexity::Neither => return Err(Error::MixedSign),
    };
    let v = geom.vertices();
    let nrm = geom.normal();
    let h = geom.rescaled();
    let all = partners(geom);
    let rows = scan_rows(v.len(), |i| {
        let (mut inner, mut outer) = (Best::NONE, Best::NONE);
        // the diagonal limit j → i is the osculating circle
        let k = geom.curvature()[i];
        if k > 0.0 {
            inner.offer(h[i].abs() / k, i, false);
        } else if k < 0.0 {
            outer.offer(h[i].abs() / -k, i, false);
        }
        for &(p, j, mirrored) in &all {
            if j == i && !mirrored {
                continue;
            }
            let d = p - v[i];
            let dn = d.dot(&nrm[i]);
            let value = h[i].abs() * d.norm_squared() / (2.0 * dn.abs());
            if dn < 0.0 {
                inner.offer(value, j, mirrored);
            } else if dn > 0.0 {
                outer.offer(value, j, mirrored);
            }
        }
        (inner, outer)
    });
    let (mut delta_in, mut argmin, mut argmin_mirrored) = (f64::INFINITY, [0, 0], false);
    let mut delta_out = f64::INFINITY;
    for (i, (inner, outer)) in rows.iter().enumerate() {
        if inner.value < delta_in {
            delta_in = inner.value;
            argmin = [i, inner.j];
            argmin_mirrored = inner.mirrored;
        }
        delta_out = delta_out.min(outer.value);
    }
    let convex_curve =
        geom.mode() == Mode::Curve && geom.curvature().iter().all(|&k| k >= 0.0);
    let delta_out = (!convex_curve && delta_out.is_finite()).then_some(delta_out);
    let mins = scan_rows(v.len(), |i| {
        all.iter()
            .filter(|(_, j, m)| *m || *j != i)
            .map(|&(p, _, _)| {
                let d = p - v[i];
                0.5 * h[i].abs() * d.norm_squared() + delta_in * d.dot(&nrm[i])
            })
            .fold(f64::INFINITY, f64::min)
    });
    let min_ztilde = mins.into_iter().fold(f64::INFINITY, f64::min);
    Ok(NonCollapseReport { sign, delta_in, delta_out, min_ztilde, argmin, argmin_mirrored })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchingReport {
    /// `max_i max(|κ_i|, |n_r/r|_i) · δ* / |H̃_i|`.
    pub ratio: f64,
    pub vertex: usize,
    pub pass: bool,
    /// Ratios against the asymmetric display `−|H̃|/δ ≤ A ≤ δ|H̃|`, for reference.
    pub display_upper: f64,
    pub display_lower: f64,
}

/// Symmetric curvature pinching `|A| ≤ |H̃| / δ*` at every vertex.
pub fn pinching_check(geom: &GeometrySnapshot, report: &NonCollapseReport) -> PinchingReport {
    let ds = report.delta_star();
    let h = geom.rescaled();
    let (mut ratio, mut vertex) = (0.0f64, 0);
    let (mut upper, mut lower) = (0.0f64, 0.0f64);
    for i in 0..geom.len() {
        let principal = [geom.curvature()[i], geom.derived().rotational[i]];
        let k = principal.iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let r = k * ds / h[i].abs();
        if r > ratio {
            ratio = r;
            vertex = i;
        }
        for k in principal {
            upper = upper.max(k / (ds * h[i].abs()));
            lower = lower.max(-k * ds / h[i].abs());
        }
    }
    PinchingReport { ratio, vertex, pass: ratio <= 1.0 + 1e-6, display_upper: upper, display_lower: lower }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub expected: Convexity,
    pub times: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Stored slices whose `H̃` left the initial sign.
    pub snapshot_violations: usize,
    /// Time steps (between stored slices) whose `H̃` left the initial sign.
    pub step_violations: usize,
    pub pass: bool,
}

/// Track `min H̃` and `max H̃` along an RMCF run.
pub fn sign_preservation(traj: &FlowTrajectory) -> Result<SignReport> {
    if traj.mode != FlowMode::Rmcf {
        return Err(Error::InvalidConfig("sign preservation needs an RMCF run".into()));
    }
    let first = traj.snapshots.first().ok_or(Error::EmptyInput)?;
    let expected = classify_perturbation(first).kind;
    let ok = |min: f64, max: f64| match expected {
        Convexity::RescaledMeanConvex => min > 0.0,
        Convexity::RescaledMeanConcave => max < 0.0,
        Convexity::Neither => false,
    };
    if expected == Convexity::Neither {
        return Err(Error::MixedSign);
    }
    let mut report = SignReport {
        expected,
        times: Vec::new(),
        min: Vec::new(),
        max: Vec::new(),
        snapshot_violations: 0,
        step_violations: 0,
        pass: false,
    };
    for s in &traj.snapshots {
        let c = classify_perturbation(s);
        report.times.push(s.time());
        report.min.push(c.min);
        report.max.push(c.max);
        if !ok(c.min, c.max) {
            report.snapshot_violations += 1;
        }
    }
    report.step_violations = traj.steps.iter().filter(|r| !ok(r.min_rescaled, r.max_rescaled)).count();
    report.pass = report.snapshot_violations == 0 && report.step_violations == 0;
    Ok(report)
}

/// Boundary of the enclosed region, re-sampled `factor` times finer along
/// the interpolating spline so that chord sagitta does not masquerade as
/// motion of the curve.
fn fine_boundary(geom: &GeometrySnapshot, factor: usize) -> Result<Vec<Point>> {
    let v = redistribute(geom.vertices(), geom.topology(), factor * geom.len())?;
    Ok(match geom.topology() {
        Topology::Closed => v,
        Topology::Axis => {
            let mut poly = v.clone();
            poly.extend(v.iter().rev().map(|p| mirror(*p)));
            poly
        }
    })
}

const FINE_FACTOR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidanceReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub initial: f64,
    pub tolerance: f64,
    /// `min_t d(t) − d(0)`.
    pub worst_change: f64,
    pub pass: bool,
}

fn set_distance(a: &GeometrySnapshot, b: &GeometrySnapshot) -> Result<f64> {
    let pa = fine_boundary(a, FINE_FACTOR)?;
    let pb = fine_boundary(b, FINE_FACTOR)?;
    let ab = a.vertices().iter().map(|p| distance_to_polygon(&pb, *p)).fold(f64::INFINITY, f64::min);
    let ba = b.vertices().iter().map(|p| distance_to_polygon(&pa, *p)).fold(f64::INFINITY, f64::min);
    Ok(ab.min(ba))
}

/// Minimal distance between two MCF runs at their common stored times.
pub fn avoidance_check(a: &FlowTrajectory, b: &FlowTrajectory, tolerance: f64) -> Result<AvoidanceReport> {
    if a.mode != FlowMode::Mcf || b.mode != FlowMode::Mcf {
        return Err(Error::InvalidConfig("avoidance compares two MCF runs".into()));
    }
    let (a0, b0) = match (a.snapshots.first(), b.snapshots.first()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::EmptyInput),
    };
    if a0.immersed() || b0.immersed() {
        return Err(Error::UnsupportedForImmersed);
    }
    // crossing curves have vertices on both sides of each other
    let sides = |g: &GeometrySnapshot, other: &GeometrySnapshot| -> Result<(bool, bool)> {
        let mut inside = false;
        let mut outside = false;
        for p in g.vertices() {
            match other.side_of(*p)? {
                Side::Inside => inside = true,
                Side::Outside => outside = true,
                Side::OnBoundary => return Ok((true, true)),
            }
        }
        Ok((inside, outside))
    };
    let initial = set_distance(a0, b0)?;
    let scale = a0.diameter().max(b0.diameter());
    if initial <= 1e-12 * scale || sides(a0, b0)? == (true, true) || sides(b0, a0)? == (true, true) {
        return Err(Error::NotDisjoint);
    }
    let mut report = AvoidanceReport {
        times: Vec::new(),
        distances: Vec::new(),
        initial,
        tolerance,
        worst_change: 0.0,
        pass: true,
    };
    let mut j = 0;
    for sa in &a.snapshots {
        let t = sa.time();
        while j < b.snapshots.len() && b.snapshots[j].time() < t - 1e-12 {
            j += 1;
        }
        let Some(sb) = b.snapshots.get(j) else { break };
        if (sb.time() - t).abs() > 1e-12 {
            continue;
        }
        let d = set_distance(sa, sb)?;
        report.times.push(t);
        report.distances.push(d);
        report.worst_change = report.worst_change.min(d - initial);
    }
    report.pass = report.worst_change >= -tolerance;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestednessReport {
    /// `Inside` when later slices must lie inside earlier ones.
    pub expected: Side,
    pub pairs_checked: usize,
    pub vertices_checked: usize,
    pub violations: usize,
    /// Time of the first offending slice.
    pub first_violation: Option<f64>,
    pub pass: bool,
}

/// Check every vertex of each stored slice against the region of its
/// predecessor; containment is transitive, so this covers all earlier slices.
///
/// The expected direction follows the sign of the normal speed: `H̃` for the
/// rescaled flow, `H` for mean curvature flow.
pub fn nestedness(traj: &FlowTrajectory) -> Result<NestednessReport> {
    let first = traj.snapshots.first().ok_or(Error::EmptyInput)?;
    if first.immersed() {
        return Err(Error::UnsupportedForImmersed);
    }
    let expected = match traj.mode {
        FlowMode::Rmcf => match classify_perturbation(first).kind {
            Convexity::RescaledMeanConvex => Side::Inside,
            Convexity::RescaledMeanConcave => Side::Outside,
            Convexity::Neither => return Err(Error::MixedSign),
        },
        // closed curves and surfaces have no mean concave members
        FlowMode::Mcf if first.mean_curvature().iter().all(|h| *h > 0.0) => Side::Inside,
        FlowMode::Mcf => return Err(Error::MixedSign),
    };
    let mut report = NestednessReport {
        expected,
        pairs_checked: 0,
        vertices_checked: 0,
        violations: 0,
        first_violation: None,
        pass: true,
    };
    for w in traj.snapshots.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        let index = PolygonIndex::new(fine_boundary(prev, FINE_FACTOR)?, 1e-12 * prev.diameter());
        let bad = next
            .vertices()
            .iter()
            .filter(|p| {
                let s = index.side(**p);
                s != expected && s != Side::OnBoundary
            })
            .count();
        report.pairs_checked += 1;
        report.vertices_checked += next.len();
        if bad > 0 {
            report.violations += bad;
            report.first_violation.get_or_insert(next.time());
        }
    }
    report.pass = report.violations == 0;
    Ok(report)
}

/// `L² / (4π p A)` with `p` the turning number and `A` the winding-weighted
/// area; equal to 1 exactly for a `p`-fold covered circle. The polygon area
/// is corrected by the circular segment over each edge.
pub fn isoperimetric_ratio(geom: &GeometrySnapshot) -> f64 {
    let d = geom.derived();
    let n = geom.len();
    let segments: f64 = (0..d.edge_length.len())
        .map(|i| {
            let k = 0.5 * (d.curvature[i] + d.curvature[(i + 1) % n]);
            let theta = d.edge_length[i] * k;
            if theta.abs() < 1e-6 {
                k * d.edge_length[i].powi(3) / 12.0
            } else {
                (theta - theta.sin()) / (2.0 * k * k)
            }
        })
        .sum();
    let l = geom.perimeter();
    let p = geom.turning_number().max(1) as f64;
    l * l / (4.0 * PI * p * (geom.signed_area() + segments))
}
