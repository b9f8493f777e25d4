//! Finite-difference check of the evolution equations satisfied along the
//! rescaled flow by the metric, the normal, `H`, the weight term
//! `T = ⟨∇f, n⟩` with `f = −|x|²/4`, and `H̃ = H + T`.
//!
//! The probe body is a truncated Fourier series fitted to a stored slice, so
//! it can be sampled at any resolution. Left sides are centred differences of
//! the tracked quantities along the straight Lagrangian path `x ∓ Δ·H̃ n`
//! (which has the right velocity at `Δ = 0`), right sides are evaluated at
//! the centre with fourth-order differences in the loop parameter.

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::geometry::{GeometrySnapshot, Mode, Point, Topology};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

/// Closed curve `x(u) = a₀ + Σ_{k ≤ K} a_k cos(ku) + b_k sin(ku)`.
#[derive(Debug, Clone)]
pub struct FourierLoop {
    mean: Point,
    cos: Vec<Point>,
    sin: Vec<Point>,
}

impl FourierLoop {
    pub fn fit(geom: &GeometrySnapshot, modes: usize) -> Result<Self> {
        if geom.topology() != Topology::Closed {
            return Err(Error::InvalidConfig("identity probes need a closed curve or profile loop".into()));
        }
        let n = geom.len();
        if 2 * modes + 1 > n {
            return Err(Error::InvalidConfig(format!("{modes} modes need at least {} vertices", 2 * modes + 1)));
        }
        let v = geom.vertices();
        let mean = v.iter().sum::<Point>() / n as f64;
        let coeff = |k: usize, trig: fn(f64) -> f64| {
            v.iter()
                .enumerate()
                .map(|(j, p)| p * trig(2.0 * PI * (k * j) as f64 / n as f64))
                .sum::<Point>()
                * (2.0 / n as f64)
        };
        Ok(Self {
            mean,
            cos: (1..=modes).map(|k| coeff(k, f64::cos)).collect(),
            sin: (1..=modes).map(|k| coeff(k, f64::sin)).collect(),
        })
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    pub fn sample(&self, n: usize) -> Vec<Point> {
        self.jets(n).x
    }

    /// Positions with their exact first and second `u`-derivatives.
    fn jets(&self, n: usize) -> Jets {
        let mut jets = Jets { x: vec![self.mean; n], xu: vec![Point::zeros(); n], xuu: vec![Point::zeros(); n] };
        for j in 0..n {
            let u = 2.0 * PI * j as f64 / n as f64;
            for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
                let m = (k + 1) as f64;
                let (s, c) = (m * u).sin_cos();
                jets.x[j] += a * c + b * s;
                jets.xu[j] += (b * c - a * s) * m;
                jets.xuu[j] -= (a * c + b * s) * (m * m);
            }
        }
        jets
    }
}

/// A sampled loop with its parameter derivatives.
struct Jets {
    x: Vec<Point>,
    xu: Vec<Point>,
    xuu: Vec<Point>,
}

fn d1<T>(v: &[T], du: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = v.len();
    let at = |i: usize, k: isize| v[(i as isize + k).rem_euclid(n as isize) as usize];
    (0..n)
        .map(|i| ((at(i, 1) - at(i, -1)) * 8.0 - (at(i, 2) - at(i, -2))) * (1.0 / (12.0 * du)))
        .collect()
}

fn d2(v: &[Point], du: f64) -> Vec<Point> {
    let n = v.len();
    let at = |i: usize, k: isize| v[(i as isize + k).rem_euclid(n as isize) as usize];
    (0..n)
        .map(|i| {
            ((at(i, 1) + at(i, -1)) * 16.0 - (at(i, 2) + at(i, -2)) - v[i] * 30.0) * (1.0 / (12.0 * du * du))
        })
        .collect()
}

/// Pointwise geometry of a sampled loop, parametrised by `u ∈ [0, 2π)`.
struct Fields {
    xu: Vec<Point>,
    g: Vec<f64>,
    normal: Vec<Point>,
    kappa: Vec<f64>,
    rot: Vec<f64>,
    /// `r` for profiles, 1 for planar curves.
    r: Vec<f64>,
    h: Vec<f64>,
    t: Vec<f64>,
    ht: Vec<f64>,
}

impl Fields {
    /// Fields of a polyline, differentiated by fourth-order differences.
    fn new(x: &[Point], mode: Mode) -> Self {
        let du = 2.0 * PI / x.len() as f64;
        Self::from_jets(x, d1(x, du), &d2(x, du), mode)
    }

    fn from_jets(x: &[Point], xu: Vec<Point>, xuu: &[Point], mode: Mode) -> Self {
        let g: Vec<f64> = xu.iter().map(|v| v.norm_squared()).collect();
        let normal: Vec<Point> = xu.iter().zip(&g).map(|(v, g)| Point::new(v.y, -v.x) / g.sqrt()).collect();
        let kappa: Vec<f64> =
            xu.iter().zip(xuu).zip(&g).map(|((a, b), g)| (a.x * b.y - a.y * b.x) / g.powf(1.5)).collect();
        let (rot, r): (Vec<f64>, Vec<f64>) = match mode {
            Mode::Curve => (vec![0.0; x.len()], vec![1.0; x.len()]),
            Mode::Revolution => x.iter().zip(&normal).map(|(p, n)| (n.x / p.x, p.x)).unzip(),
        };
        let h: Vec<f64> = kappa.iter().zip(&rot).map(|(k, r)| k + r).collect();
        let t: Vec<f64> = x.iter().zip(&normal).map(|(p, n)| -0.5 * p.dot(n)).collect();
        let ht = h.iter().zip(&t).map(|(a, b)| a + b).collect();
        Self { xu, g, normal, kappa, rot, r, h, t, ht }
    }

    /// `r²` for profiles (the rotational metric coefficient), 1 for curves.
    fn r2(&self) -> Vec<f64> {
        self.r.iter().map(|r| r * r).collect()
    }

    fn det_g(&self) -> Vec<f64> {
        self.g.iter().zip(&self.r).map(|(g, r)| g * r * r).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Quantity {
    Metric,
    RotationalMetric,
    VolumeElement,
    Normal,
    MeanCurvature,
    WeightTerm,
    RescaledMeanCurvature,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Quantity::Metric => "metric",
            Quantity::RotationalMetric => "rotational-metric",
            Quantity::VolumeElement => "volume-element",
            Quantity::Normal => "normal",
            Quantity::MeanCurvature => "mean-curvature",
            Quantity::WeightTerm => "weight-term",
            Quantity::RescaledMeanCurvature => "rescaled-mean-curvature",
        }
    }

    fn list(mode: Mode) -> Vec<Quantity> {
        use Quantity::*;
        let mut q = vec![Metric, VolumeElement, Normal, MeanCurvature, WeightTerm, RescaledMeanCurvature];
        if mode == Mode::Revolution {
            q.insert(1, RotationalMetric);
        }
        q
    }

    /// Tracked value as a vector field (two components per vertex; scalars
    /// use the first).
    fn value(self, f: &Fields) -> Vec<Point> {
        let scalar = |v: Vec<f64>| v.into_iter().map(|s| Point::new(s, 0.0)).collect();
        match self {
            Quantity::Metric => scalar(f.g.clone()),
            Quantity::RotationalMetric => scalar(f.r2()),
            Quantity::VolumeElement => scalar(f.det_g()),
            Quantity::Normal => f.normal.clone(),
            Quantity::MeanCurvature => scalar(f.h.clone()),
            Quantity::WeightTerm => scalar(f.t.clone()),
            Quantity::RescaledMeanCurvature => scalar(f.ht.clone()),
        }
    }

    /// Right side of the evolution equation at the centre.
    fn rate(self, f: &Fields, x: &[Point]) -> Vec<Point> {
        let du = 2.0 * PI / x.len() as f64;
        let n = x.len();
        let hu = d1(&f.ht, du);
        // ∇H̃ = (H̃_u / g) x_u
        let grad: Vec<Point> = (0..n).map(|i| f.xu[i] * (hu[i] / f.g[i])).collect();
        let flux: Vec<f64> = (0..n).map(|i| f.r[i] * hu[i] / f.g[i].sqrt()).collect();
        let div = d1(&flux, du);
        let lap: Vec<f64> = (0..n).map(|i| div[i] / (f.r[i] * f.g[i].sqrt())).collect();
        let a2: Vec<f64> = (0..n).map(|i| f.kappa[i].powi(2) + f.rot[i].powi(2)).collect();
        let scalar = |v: Vec<f64>| v.into_iter().map(|s| Point::new(s, 0.0)).collect();
        let det = f.det_g();
        match self {
            Quantity::Metric => scalar((0..n).map(|i| -2.0 * f.ht[i] * f.kappa[i] * f.g[i]).collect()),
            Quantity::RotationalMetric => {
                scalar((0..n).map(|i| -2.0 * f.ht[i] * f.normal[i].x * f.r[i]).collect())
            }
            Quantity::VolumeElement => scalar((0..n).map(|i| -2.0 * f.ht[i] * f.h[i] * det[i]).collect()),
            Quantity::Normal => grad,
            Quantity::MeanCurvature => scalar((0..n).map(|i| lap[i] + a2[i] * f.ht[i]).collect()),
            Quantity::WeightTerm => {
                scalar((0..n).map(|i| 0.5 * f.ht[i] - 0.5 * x[i].dot(&grad[i])).collect())
            }
            Quantity::RescaledMeanCurvature => scalar(
                (0..n).map(|i| lap[i] - 0.5 * x[i].dot(&grad[i]) + (0.5 + a2[i]) * f.ht[i]).collect(),
            ),
        }
    }
}

fn moved(x: &[Point], f: &Fields, dt: f64) -> Vec<Point> {
    x.iter().zip(&f.normal).zip(&f.ht).map(|((p, n), v)| p - n * (dt * v)).collect()
}

/// Centred time differences of every tracked quantity, optionally
/// Richardson-extrapolated against the half step. The probe velocity comes
/// from the exact jets; the probes themselves are differentiated discretely.
fn time_derivatives(body: &Jets, mode: Mode, dt: f64, richardson: bool) -> Vec<Vec<Point>> {
    let centre = Fields::from_jets(&body.x, body.xu.clone(), &body.xuu, mode);
    let qs = Quantity::list(mode);
    let diff = |dt: f64| -> Vec<Vec<Point>> {
        let plus = Fields::new(&moved(&body.x, &centre, dt), mode);
        let minus = Fields::new(&moved(&body.x, &centre, -dt), mode);
        qs.iter()
            .map(|q| {
                q.value(&plus).iter().zip(q.value(&minus)).map(|(a, b)| (a - b) / (2.0 * dt)).collect()
            })
            .collect()
    };
    let coarse = diff(dt);
    if !richardson {
        return coarse;
    }
    let fine = diff(dt / 2.0);
    fine.iter()
        .zip(&coarse)
        .map(|(f, c)| f.iter().zip(c).map(|(a, b)| (a * 4.0 - b) / 3.0).collect())
        .collect()
}

fn scale_of(rhs: &[Point]) -> f64 {
    rhs.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Maximum deviation relative to `scale`, or absolute when the right side
/// vanishes to within rounding (below 1e-8).
fn relative_error(lhs: &[Point], rhs: &[Point], scale: f64) -> f64 {
    let err = lhs.iter().zip(rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if scale > 1e-8 {
        err / scale
    } else {
        err
    }
}

/// Right sides at the centre: exact jets for the pointwise geometry,
/// fourth-order differences for every derivative of `H̃`.
fn rates(body: &Jets, mode: Mode) -> Vec<Vec<Point>> {
    let centre = Fields::from_jets(&body.x, body.xu.clone(), &body.xuu, mode);
    Quantity::list(mode).iter().map(|q| q.rate(&centre, &body.x)).collect()
}

fn errors_at(body: &Jets, mode: Mode, dt: f64) -> Vec<f64> {
    let lhs = time_derivatives(body, mode, dt, true);
    rates(body, mode).iter().zip(&lhs).map(|(r, l)| relative_error(l, r, scale_of(r))).collect()
}

/// Errors below this are rounding: the quantity has no truncation error to
/// measure (the identity is algebraic in the vertex positions, or the
/// tracked quantity is quadratic along the probe path).
pub const EXACT_FLOOR: f64 = 1e-10;

/// Least-squares slope of `log err` against `log step`.
fn order(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 || points.iter().any(|(_, e)| !(*e > 0.0)) {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|(h, _)| h.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    crate::linalg::linear_fit(&x, &y).map(|(_, b, _)| b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityConfig {
    /// Fourier modes kept when smoothing the source slice.
    pub modes: usize,
    /// Vertex counts of the spatial study.
    pub levels: Vec<usize>,
    /// Time offset of the spatial study (Richardson-extrapolated).
    pub spatial_dt: f64,
    /// Vertex count of the temporal study.
    pub temporal_n: usize,
    /// Time offsets of the temporal study.
    pub temporal_dts: Vec<f64>,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            modes: 24,
            levels: vec![128, 256, 512],
            spatial_dt: 1e-3,
            temporal_n: 2048,
            temporal_dts: vec![0.04, 0.02, 0.01],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Study {
    /// `(step, relative error)`: vertex count for the spatial study, time
    /// offset for the temporal one.
    pub errors: Vec<(f64, f64)>,
    /// Fitted order, when at least three steps were run and the errors are
    /// above rounding.
    pub order: Option<f64>,
    /// Every error is below [`EXACT_FLOOR`].
    pub exact: bool,
}

impl Study {
    fn new(errors: Vec<(f64, f64)>, step_of: impl Fn(f64) -> f64) -> Self {
        let exact = errors.iter().all(|(_, e)| *e <= EXACT_FLOOR);
        let fit: Vec<(f64, f64)> = errors.iter().map(|(s, e)| (step_of(*s), *e)).collect();
        let order = if exact { None } else { order(&fit) };
        Self { errors, order, exact }
    }

    /// Exact, or converging at least at `min_order`.
    pub fn passes(&self, min_order: f64) -> bool {
        self.exact || self.order.is_some_and(|o| o >= min_order)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    /// Identity error against vertex count.
    pub spatial: Study,
    /// Self-convergence of the time difference against the time offset, at
    /// fixed resolution.
    pub temporal: Study,
    /// Identity error at the finest temporal offset.
    pub temporal_identity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheckReport {
    pub source_time: f64,
    pub modes: usize,
    /// The weight function whose normal derivative is `T`.
    pub weight: String,
    /// Range of `T = ⟨∇f, n⟩` over the probe body.
    pub weight_term_range: [f64; 2],
    pub rows: Vec<IdentityRow>,
}

impl IdentityCheckReport {
    /// Largest identity error at vertex count `n` of the spatial study.
    pub fn max_spatial_error(&self, n: usize) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| r.spatial.errors.iter().filter(|(m, _)| *m == n as f64).map(|(_, e)| *e))
            .fold(0.0, f64::max)
    }

    /// Smallest fitted spatial order among identities with truncation error.
    pub fn min_spatial_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.spatial.order).reduce(f64::min)
    }

    pub fn min_temporal_order(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.temporal.order).reduce(f64::min)
    }

    pub fn passes(&self, spatial: f64, temporal: f64) -> bool {
        self.rows.iter().all(|r| r.spatial.passes(spatial) && r.temporal.passes(temporal))
    }

    /// One line per identity: errors of both studies and the fitted orders.
    pub fn summary(&self) -> String {
        let fmt = |s: &Study| {
            let e: Vec<String> = s.errors.iter().map(|(_, e)| format!("{e:.2e}")).collect();
            let o = if s.exact { "exact".to_string() } else { format!("{:.2}", s.order.unwrap_or(f64::NAN)) };
            format!("[{}] order {o}", e.join(" "))
        };
        self.rows
            .iter()
            .map(|r| format!("{:<24} spatial {}  temporal {}\n", r.name, fmt(&r.spatial), fmt(&r.temporal)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("identity,study,step,error,order,exact\n");
        for r in &self.rows {
            for (label, s) in [("spatial", &r.spatial), ("temporal", &r.temporal)] {
                let o = s.order.map_or(String::new(), |o| o.to_string());
                for (step, e) in &s.errors {
                    out += &format!("{},{label},{step},{e},{o},{}\n", r.name, s.exact);
                }
            }
        }
        out
    }
}

/// Stored slice nearest to `t`, refusing windows that straddle a remesh.
pub fn probe_window(traj: &FlowTrajectory, t: f64, half_width: f64) -> Result<&GeometrySnapshot> {
    let snap = traj
        .snapshots
        .iter()
        .min_by(|a, b| (a.time() - t).abs().total_cmp(&(b.time() - t).abs()))
        .ok_or(Error::EmptyInput)?;
    let c = snap.time();
    if let Some(e) = traj.remesh_events.iter().find(|e| (e.t - c).abs() <= half_width) {
        return Err(Error::ProbeContaminated(e.t));
    }
    Ok(snap)
}

/// Spatial and temporal convergence study of the evolution identities on a
/// smoothed copy of `source`, moving under the rescaled flow.
pub fn verify_evolution_identities(source: &GeometrySnapshot, cfg: &IdentityConfig) -> Result<IdentityCheckReport> {
    let body = FourierLoop::fit(source, cfg.modes)?;
    let mode = source.mode();
    let names = Quantity::list(mode);
    let mut spatial: Vec<Vec<(f64, f64)>> = vec![Vec::new(); names.len()];
    for &n in &cfg.levels {
        let jets = body.jets(n);
        for (acc, e) in spatial.iter_mut().zip(errors_at(&jets, mode, cfg.spatial_dt)) {
            acc.push((n as f64, e));
        }
    }
    let x = body.jets(cfg.temporal_n);
    let rhs = rates(&x, mode);
    let finest = cfg.temporal_dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference = time_derivatives(&x, mode, finest / 2.0, true);
    let mut temporal: Vec<Vec<(f64, f64)>> = vec![Vec::new(); names.len()];
    let mut identity = vec![0.0; names.len()];
    for &dt in &cfg.temporal_dts {
        let lhs = time_derivatives(&x, mode, dt, false);
        for q in 0..names.len() {
            let scale = scale_of(&rhs[q]);
            temporal[q].push((dt, relative_error(&lhs[q], &reference[q], scale)));
            if dt == finest {
                identity[q] = relative_error(&lhs[q], &rhs[q], scale);
            }
        }
    }
    let rows: Vec<IdentityRow> = names
        .iter()
        .zip(spatial)
        .zip(temporal)
        .zip(identity)
        .map(|(((q, sp), tp), id)| IdentityRow {
            name: q.name().to_string(),
            spatial: Study::new(sp, |n| 2.0 * PI / n),
            temporal: Study::new(tp, |dt| dt),
            temporal_identity_error: id,
        })
        .collect();
    let finite = rows.iter().all(|r| {
        r.temporal_identity_error.is_finite()
            && r.spatial.errors.iter().chain(&r.temporal.errors).all(|(_, e)| e.is_finite())
    });
    if !finite {
        return Err(Error::DegenerateGeometry("non-finite identity error".into()));
    }
    let t = Fields::new(&x.x, mode).t;
    let range = [t.iter().cloned().fold(f64::INFINITY, f64::min), t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)];
    Ok(IdentityCheckReport {
        source_time: source.time(),
        modes: body.modes(),
        weight: "f = -|x|^2/4".into(),
        weight_term_range: range,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn circle_errors(r: f64, n: usize) -> Vec<f64> {
        let g = GeometrySnapshot::circle(r, Point::zeros(), n).unwrap();
        errors_at(&FourierLoop::fit(&g, 4).unwrap().jets(n), Mode::Curve, 1e-2)
    }

    #[test]
    fn fourier_fit_reproduces_circle() {
        let g = GeometrySnapshot::circle(0.8, Point::new(0.1, 0.2), 64).unwrap();
        let x = FourierLoop::fit(&g, 5).unwrap().sample(64);
        for (a, b) in x.iter().zip(g.vertices()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn circle_identities_are_exact() {
        let e = circle_errors(1.0, 512);
        for e in &e {
            assert!(*e < 1e-8, "{e:?}");
        }
    }

    #[test]
    fn stationary_circle_reads_zero() {
        let e = circle_errors(SQRT_2, 512);
        for e in &e {
            assert!(*e < 1e-9, "{e:?}");
        }
    }

    #[test]
    fn ellipse_converges() {
        let v: Vec<Point> = (0..256)
            .map(|k| {
                let u = 2.0 * PI * k as f64 / 256.0;
                Point::new(1.3 * u.cos(), 0.8 * u.sin())
            })
            .collect();
        let g = GeometrySnapshot::curve(v).unwrap();
        let rep = verify_evolution_identities(&g, &IdentityConfig { modes: 1, ..IdentityConfig::default() }).unwrap();
        assert!(rep.passes(1.8, 0.9), "{}", rep.summary());
    }

    #[test]
    fn tube_profile_converges() {
        let g = GeometrySnapshot::tube_profile(2.0, 0.6, 256).unwrap();
        let cfg = IdentityConfig { modes: 4, levels: vec![64, 128, 256], ..IdentityConfig::default() };
        let rep = verify_evolution_identities(&g, &cfg).unwrap();
        assert_eq!(rep.rows.len(), 7);
        assert!(rep.passes(1.8, 0.9), "{}", rep.summary());
    }
}
