//! Closed self-shrinkers: the round circle and sphere, Abresch-Langer curves
//! and the Angenent torus, the latter two by ODE shooting.
//!
//! Both shooting problems integrate an arclength-parametrised curve
//! `(x, y, θ)` with unit tangent `(cos θ, sin θ)` and outward normal
//! `(sin θ, −cos θ)`. The shrinker equation `H = ⟨x, n⟩ / 2` fixes `θ'`.

use crate::error::{Error, Result};
use crate::geometry::{GeometrySnapshot, Mode, Point, Topology};
use crate::ode::Dopri5;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Default outer crossing used to bracket the torus shooting parameter.
pub const TORUS_GUESS: f64 = 3.3;

/// Largest Runge-Kutta step used when sampling a converged trajectory.
const SAMPLE_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShrinkerKind {
    /// `S^n(√(2n))`, `n ∈ {1, 2}`.
    Round { n: u32 },
    /// Rotation index `p`, `q` petals.
    AbreschLanger { p: u32, q: u32 },
    /// Optional initial guess for the outer crossing radius.
    AngenentTorus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        guess: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShrinkerSpec {
    #[serde(flatten)]
    pub kind: ShrinkerKind,
    pub n_vertices: usize,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
}

fn default_tol() -> f64 {
    1e-12
}

impl ShrinkerSpec {
    pub fn round(n: u32, n_vertices: usize) -> Self {
        Self { kind: ShrinkerKind::Round { n }, n_vertices, tolerance: 1e-12 }
    }
    pub fn abresch_langer(p: u32, q: u32, n_vertices: usize) -> Self {
        Self { kind: ShrinkerKind::AbreschLanger { p, q }, n_vertices, tolerance: 1e-12 }
    }
    pub fn angenent_torus(n_vertices: usize) -> Self {
        Self { kind: ShrinkerKind::AngenentTorus { guess: None }, n_vertices, tolerance: 1e-12 }
    }

    /// Build the shrinker this spec describes.
    pub fn build(&self) -> Result<ShootingResult> {
        match self.kind {
            ShrinkerKind::Round { n } => {
                let g = round_shrinker(n, self.n_vertices)?;
                let r = (2.0 * n as f64).sqrt();
                Ok(ShootingResult::exact(g, r))
            }
            ShrinkerKind::AbreschLanger { .. } => shoot_abresch_langer(self),
            ShrinkerKind::AngenentTorus { .. } => shoot_angenent_torus(self),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub geometry: GeometrySnapshot,
    /// Starting radius of the shooting trajectory.
    pub shooting_parameter: f64,
    pub closure_error: f64,
    /// `max |H̃|` over the vertices.
    pub residual: f64,
    /// Smallest distance to the origin (curves) or inner crossing `r_in` (torus).
    pub inner_radius: f64,
    /// Largest distance to the origin (curves) or outer crossing `r_out` (torus).
    pub outer_radius: f64,
    /// Set when the request was answered by the round branch.
    pub round: bool,
}

impl ShootingResult {
    fn exact(geometry: GeometrySnapshot, radius: f64) -> Self {
        let residual = shrinker_residual(&geometry);
        Self {
            geometry,
            shooting_parameter: radius,
            closure_error: 0.0,
            residual,
            inner_radius: radius,
            outer_radius: radius,
            round: true,
        }
    }
}

/// Circle of radius `√2` (`n = 1`) or the axis profile of the sphere of
/// radius 2 (`n = 2`).
pub fn round_shrinker(n: u32, n_vertices: usize) -> Result<GeometrySnapshot> {
    match n {
        1 => GeometrySnapshot::circle(SQRT_2, Point::zeros(), n_vertices),
        2 => GeometrySnapshot::sphere_profile(2.0, n_vertices),
        _ => Err(Error::InvalidConfig(format!("round shrinker dimension {n} not in {{1, 2}}"))),
    }
}

/// `max |H̃|` over the vertices.
pub fn shrinker_residual(geom: &GeometrySnapshot) -> f64 {
    geom.rescaled().iter().fold(0.0, |m, h| m.max(h.abs()))
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn curve_rhs(_s: f64, y: &[f64; 3]) -> [f64; 3] {
    let (s, c) = y[2].sin_cos();
    [c, s, 0.5 * (y[0] * s - y[1] * c)]
}

/// Polar angle swept from the radial maximum at `(rho, 0)` to the next
/// radial minimum, and the arclength and state there.
fn half_period(ode: &Dopri5, rho: f64) -> Result<(f64, f64, [f64; 3])> {
    let g = |_s: f64, y: &[f64; 3]| y[0] * y[2].cos() + y[1] * y[2].sin();
    let ev = ode
        .until_event(&curve_rhs, 0.0, [rho, 0.0, PI / 2.0], 100.0, &g, 1.0, &|_, _| false)?
        .ok_or_else(|| Error::ShootingBracketFailure(format!("no radial minimum from ρ₀ = {rho}")))?;
    Ok((ev.y[1].atan2(ev.y[0]), ev.t, ev.y))
}

/// Closed immersed curve with rotation index `p` and `q` petals.
///
/// The half period (radial maximum to minimum) sweeps a polar angle that
/// falls from `π/√2` as `ρ₀ → √2` to `π/2` as `ρ₀ → ∞`, so closed curves
/// exist exactly for `p/q ∈ (1/2, 1/√2)`. `(1, 1)` is answered by the
/// circle.
pub fn shoot_abresch_langer(spec: &ShrinkerSpec) -> Result<ShootingResult> {
    let ShrinkerKind::AbreschLanger { p, q } = spec.kind else {
        return Err(Error::InvalidConfig("spec is not an Abresch-Langer request".into()));
    };
    if p == 0 || q == 0 || gcd(p, q) != 1 {
        return Err(Error::NoSolutionInWindow(format!("({p}, {q}) is not a coprime pair")));
    }
    if p == 1 && q == 1 {
        return Ok(ShootingResult::exact(round_shrinker(1, spec.n_vertices)?, SQRT_2));
    }
    let ratio = p as f64 / q as f64;
    if !(ratio > 0.5 && ratio < 1.0 / SQRT_2) {
        return Err(Error::NoSolutionInWindow(format!(
            "p/q = {ratio:.6} outside (1/2, 1/√2)"
        )));
    }
    let ode = Dopri5::new(spec.tolerance);
    let target = PI * ratio;
    let f = |rho: f64| half_period(&ode, rho).map(|(a, _, _)| a - target);

    let mut lo = SQRT_2 * (1.0 + 1e-4);
    let f_lo = f(lo)?;
    if f_lo <= 0.0 {
        return Err(Error::ShootingBracketFailure(format!("period at ρ₀ = {lo} already below target")));
    }
    let mut hi = 2.0;
    while f(hi)? > 0.0 {
        lo = hi;
        hi *= 1.5;
        if hi > 50.0 {
            return Err(Error::ShootingBracketFailure(format!("no bracket below ρ₀ = {hi}")));
        }
    }
    let rho = bisect(&f, lo, hi)?;

    let (_, s_half, y_min) = half_period(&ode, rho)?;
    let r_min = y_min[0].hypot(y_min[1]);
    let length = 2.0 * q as f64 * s_half;
    let n = spec.n_vertices;
    let (vertices, end) = sample_trajectory(&ode, [rho, 0.0, PI / 2.0], length, n);
    let closure_error = (Point::new(end[0], end[1]) - Point::new(rho, 0.0)).norm();
    let geometry = GeometrySnapshot::new(Mode::Curve, Topology::Closed, true, 0.0, vertices)?;
    Ok(ShootingResult {
        residual: shrinker_residual(&geometry),
        geometry,
        shooting_parameter: rho,
        closure_error,
        inner_radius: r_min,
        outer_radius: rho,
        round: false,
    })
}

/// Integrate from `y0` and record `n` points at arclength spacing `length / n`;
/// also returns the state at `length`.
fn sample_trajectory(ode: &Dopri5, y0: [f64; 3], length: f64, n: usize) -> (Vec<Point>, [f64; 3]) {
    let ds = length / n as f64;
    let mut y = y0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(Point::new(y[0], y[1]));
        y = ode.integrate_fixed(&curve_rhs, k as f64 * ds, y, (k + 1) as f64 * ds, SAMPLE_STEP);
    }
    (out, y)
}

fn profile_rhs(_s: f64, y: &[f64; 3]) -> [f64; 3] {
    let (s, c) = y[2].sin_cos();
    [c, s, 0.5 * (y[0] * s - y[1] * c) - s / y[0]]
}

/// Where the profile launched upward from `(r0, 0)` first comes back down
/// through `z = 0`: `(cos θ, arclength, state)`. `None` if it reaches the axis.
fn torus_return(ode: &Dopri5, r0: f64) -> Result<Option<(f64, f64, [f64; 3])>> {
    let g = |_s: f64, y: &[f64; 3]| y[1];
    let abort = |_s: f64, y: &[f64; 3]| y[0] < 0.02;
    let ev = ode.until_event(&profile_rhs, 0.0, [r0, 0.0, PI / 2.0], 50.0, &g, -1.0, &abort)?;
    Ok(ev.map(|e| (e.y[2].cos(), e.t, e.y)))
}

/// Angenent torus profile, symmetric under `z → −z`.
///
/// The outer crossing `r₀` is found by bisection on `cos θ` at the first
/// return to `z = 0`, which vanishes when the profile comes back with a
/// vertical tangent. The bracket is searched within ±20% of the guess;
/// trajectories that run into the axis are discarded.
pub fn shoot_angenent_torus(spec: &ShrinkerSpec) -> Result<ShootingResult> {
    let ShrinkerKind::AngenentTorus { guess } = spec.kind else {
        return Err(Error::InvalidConfig("spec is not an Angenent torus request".into()));
    };
    let n = spec.n_vertices;
    if n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("torus needs an even vertex count, got {n}")));
    }
    let guess = guess.unwrap_or(TORUS_GUESS);
    let ode = Dopri5::new(spec.tolerance);
    let f = |r0: f64| -> Result<Option<f64>> { Ok(torus_return(&ode, r0)?.map(|(c, _, _)| c)) };

    // scan outward from the guess for adjacent valid samples of opposite sign
    let steps = 20;
    let width = 0.2 * guess;
    let mut bracket = None;
    let mut prev_up = (guess, f(guess)?);
    let mut prev_dn = prev_up;
    for k in 1..=steps {
        let d = width * k as f64 / steps as f64;
        for (prev, r) in [(&mut prev_up, guess + d), (&mut prev_dn, guess - d)] {
            let cur = (r, f(r)?);
            if let (Some(a), Some(b)) = (prev.1, cur.1) {
                if a * b <= 0.0 && bracket.is_none() {
                    bracket = Some((prev.0.min(r), prev.0.max(r)));
                }
            }
            *prev = cur;
        }
        if bracket.is_some() {
            break;
        }
    }
    let (lo, hi) = bracket.ok_or_else(|| {
        Error::ShootingBracketFailure(format!("no sign change of the return angle within ±20% of {guess}"))
    })?;
    let g = |r0: f64| {
        f(r0)?.ok_or_else(|| Error::ShootingBracketFailure(format!("trajectory from {r0} reaches the axis")))
    };
    let r0 = bisect(&g, lo, hi)?;
    let (cos_ret, s_half, y_in) = torus_return(&ode, r0)?
        .ok_or_else(|| Error::ShootingBracketFailure(format!("trajectory from {r0} reaches the axis")))?;

    let half = n / 2;
    let ds = s_half / half as f64;
    let mut upper = Vec::with_capacity(half + 1);
    let mut y = [r0, 0.0, PI / 2.0];
    for k in 0..half {
        upper.push(Point::new(y[0], y[1]));
        y = ode.integrate_fixed(&profile_rhs, k as f64 * ds, y, (k + 1) as f64 * ds, SAMPLE_STEP);
    }
    // pin the inner crossing onto the symmetry line
    upper.push(Point::new(y_in[0], 0.0));
    let mut vertices = upper.clone();
    vertices.extend(upper[1..half].iter().rev().map(|p| Point::new(p.x, -p.y)));
    let geometry = GeometrySnapshot::new(Mode::Revolution, Topology::Closed, false, 0.0, vertices)?;
    Ok(ShootingResult {
        residual: shrinker_residual(&geometry),
        geometry,
        shooting_parameter: r0,
        closure_error: cos_ret.abs(),
        inner_radius: y_in[0],
        outer_radius: r0,
        round: false,
    })
}

/// Bisection to the bracket's floating-point resolution.
fn bisect<F: Fn(f64) -> Result<f64>>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo * f_hi > 0.0 {
        return Err(Error::ShootingBracketFailure(format!(
            "no sign change on [{lo}, {hi}] ({f_lo:e}, {f_hi:e})"
        )));
    }
    let lo_positive = f_lo > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_branches() {
        let c = round_shrinker(1, 64).unwrap();
        assert!(shrinker_residual(&c) < 1e-10);
        let c2 = round_shrinker(1, 256).unwrap();
        assert!((c.vertices()[0].norm() - c2.vertices()[0].norm()).abs() < 1e-15);
        let s = round_shrinker(2, 256).unwrap();
        assert!(shrinker_residual(&s) < 1e-10);
        assert!((s.vertices()[10].norm() - 2.0).abs() < 1e-14);
        assert!(round_shrinker(3, 64).is_err());
    }

    #[test]
    fn residual_of_unit_circle() {
        let g = GeometrySnapshot::circle(1.0, Point::zeros(), 128).unwrap();
        assert!((shrinker_residual(&g) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_pairs() {
        for (p, q) in [(1, 3), (3, 4), (1, 2), (2, 4)] {
            let e = ShrinkerSpec::abresch_langer(p, q, 512).build().unwrap_err();
            assert!(matches!(e, Error::NoSolutionInWindow(_)), "({p},{q}): {e}");
        }
    }

    #[test]
    fn one_one_is_the_circle() {
        let r = ShrinkerSpec::abresch_langer(1, 1, 128).build().unwrap();
        assert!(r.round);
        assert!((r.geometry.vertices()[3].norm() - SQRT_2).abs() < 1e-14);
    }

    fn radial_maxima(g: &GeometrySnapshot) -> usize {
        let r: Vec<f64> = g.vertices().iter().map(|p| p.norm()).collect();
        let n = r.len();
        (0..n).filter(|&i| r[i] > r[(i + n - 1) % n] && r[i] >= r[(i + 1) % n]).count()
    }

    #[test]
    fn abresch_langer_two_three() {
        let r = ShrinkerSpec::abresch_langer(2, 3, 1024).build().unwrap();
        assert!(r.closure_error < 1e-9, "{}", r.closure_error);
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert_eq!(r.geometry.turning_number(), 2);
        assert_eq!(radial_maxima(&r.geometry), 3);
        assert!(r.outer_radius > 2.5 && r.outer_radius < 3.0, "{}", r.outer_radius);
        assert!((r.geometry.total_curvature() - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn abresch_langer_three_five() {
        let r = ShrinkerSpec::abresch_langer(3, 5, 2048).build().unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert_eq!(r.geometry.turning_number(), 3);
        assert_eq!(radial_maxima(&r.geometry), 5);
    }

    #[test]
    fn torus_profile() {
        let r = ShrinkerSpec::angenent_torus(1024).build().unwrap();
        assert!(r.inner_radius < SQRT_2 && SQRT_2 < r.outer_radius);
        assert!(r.closure_error < 1e-9);
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert!(!r.geometry.self_intersects());
        let v = r.geometry.vertices();
        let n = v.len();
        for k in 1..n / 2 {
            assert!((v[k].x - v[n - k].x).abs() < 1e-9 && (v[k].y + v[n - k].y).abs() < 1e-9);
        }
    }

    #[test]
    fn torus_guess_insensitive() {
        let base = ShrinkerSpec::angenent_torus(256).build().unwrap();
        for g in [0.9 * TORUS_GUESS, 1.1 * TORUS_GUESS] {
            let spec = ShrinkerSpec {
                kind: ShrinkerKind::AngenentTorus { guess: Some(g) },
                ..ShrinkerSpec::angenent_torus(256)
            };
            let r = spec.build().unwrap();
            assert!((r.outer_radius - base.outer_radius).abs() < 1e-8);
            assert!((r.inner_radius - base.inner_radius).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_converges() {
        let a = ShrinkerSpec::angenent_torus(128).build().unwrap().residual;
        let b = ShrinkerSpec::angenent_torus(256).build().unwrap().residual;
        assert!(a / b >= 3.0, "{a:e} {b:e}");
    }
}
