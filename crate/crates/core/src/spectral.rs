//! The linearised operator `L = Δ − ½⟨x, ∇·⟩ + ½ + |A|²` on a shrinker, its
//! top eigenpair, and normal-graph perturbations.
//!
//! `L` is discretised in divergence form, `Lu = ρ⁻¹ div(ρ ∇u) + (½ + |A|²) u`
//! with `ρ = e^{−|x|²/4}` (times `r` on revolution profiles), as a
//! three-point stencil whose flux weights sit on edge midpoints. Multiplying
//! row `i` by `W_i = ρ_i w_i` (with `w_i` the vertex arclength) gives a
//! symmetric matrix, so `L` is self-adjoint in the weighted inner product up
//! to rounding.

use crate::error::{Error, Result};
use crate::geometry::{GeometrySnapshot, Mode, Point, Topology};
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::shrinkers::shrinker_residual;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest shrinker residual accepted by [`assemble_l`].
pub const SHRINKER_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    /// Coefficient of `u_{i−1}` in row `i` (wraps for closed curves).
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// Coefficient of `u_{i+1}` in row `i`.
    pub upper: Vec<f64>,
    /// Gaussian measure per vertex.
    pub weights: Vec<f64>,
    /// `½ + |A|²` per vertex.
    pub potential: Vec<f64>,
    pub periodic: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenPair {
    pub eigenvalue: f64,
    /// Positive, with unit maximum.
    pub eigenfunction: Vec<f64>,
    pub iterations: usize,
    /// `‖Lφ − μφ‖_∞`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    RescaledMeanConvex,
    RescaledMeanConcave,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub kind: Convexity,
    /// `min |H̃|`.
    pub margin: f64,
    pub min: f64,
    pub max: f64,
}

/// Normal graph `x + s·f(x)·n(x)` over a shrinker.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    pub f: Vec<f64>,
    pub s: f64,
}

/// Amplitude validated by [`search_amplitude`].
#[derive(Debug, Clone)]
pub struct ValidatedPerturbation {
    pub s: f64,
    pub geometry: GeometrySnapshot,
    pub classification: Classification,
    pub halvings: u32,
}

fn density(p: Point, mode: Mode) -> f64 {
    let g = (-p.norm_squared() / 4.0).exp();
    match mode {
        Mode::Curve => g,
        Mode::Revolution => p.x * g,
    }
}

/// Assemble `L` on a shrinker.
pub fn assemble_l(shrinker: &GeometrySnapshot) -> Result<LinearizedOperator> {
    let residual = shrinker_residual(shrinker);
    if !(residual <= SHRINKER_TOLERANCE) {
        return Err(Error::NotAShrinker { residual, limit: SHRINKER_TOLERANCE });
    }
    Ok(assemble_unchecked(shrinker))
}

/// [`assemble_l`] without the shrinker gate; used for the evolution identity
/// `∂ₜH̃ = LH̃`, which holds on any surface.
pub fn assemble_unchecked(geom: &GeometrySnapshot) -> LinearizedOperator {
    let n = geom.len();
    let v = geom.vertices();
    let d = geom.derived();
    let mode = geom.mode();
    let periodic = geom.topology() == Topology::Closed;
    let edges = d.edge_length.len();
    // flux coefficient ρ_{i+½}/ℓ_i on edge i → i+1
    let flux: Vec<f64> = (0..edges)
        .map(|i| {
            let mid = 0.5 * (v[i] + v[(i + 1) % n]);
            density(mid, mode) / d.edge_length[i]
        })
        .collect();
    let weights: Vec<f64> = (0..n).map(|i| density(v[i], mode) * d.vertex_weight[i]).collect();
    let potential: Vec<f64> = geom.second_fundamental_norm().iter().map(|a| 0.5 + a * a).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let left = if periodic {
            flux[(i + n - 1) % n]
        } else if i > 0 {
            flux[i - 1]
        } else {
            0.0
        };
        let right = if periodic || i < n - 1 { flux[i] } else { 0.0 };
        lower[i] = left / weights[i];
        upper[i] = right / weights[i];
        diag[i] = -(left + right) / weights[i] + potential[i];
    }
    LinearizedOperator { lower, diag, upper, weights, potential, periodic }
}

impl LinearizedOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * u[i];
                if self.periodic || i > 0 {
                    y += self.lower[i] * u[(i + n - 1) % n];
                }
                if self.periodic || i + 1 < n {
                    y += self.upper[i] * u[(i + 1) % n];
                }
                y
            })
            .collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    /// `max |⟨Lu, v⟩_w − ⟨u, Lv⟩_w| / (‖u‖_w ‖v‖_w)` over random probes.
    pub fn self_adjointness_defect(&self, seed: u64, probes: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.len();
        let mut worst = 0.0f64;
        for _ in 0..probes {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = self.inner(&self.apply(&u), &v);
            let rhs = self.inner(&u, &self.apply(&v));
            let scale = (self.inner(&u, &u) * self.inner(&v, &v)).sqrt();
            worst = worst.max((lhs - rhs).abs() / scale);
        }
        worst
    }

    /// Solve `(σ − L) x = b`.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let lower: Vec<f64> = self.lower.iter().map(|x| -x).collect();
        let upper: Vec<f64> = self.upper.iter().map(|x| -x).collect();
        let diag: Vec<f64> = self.diag.iter().map(|x| sigma - x).collect();
        let mut x = b.to_vec();
        if self.periodic {
            solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut x);
        } else {
            solve_tridiagonal(&lower, &diag, &upper, &mut x);
        }
        x
    }

    fn rayleigh(&self, u: &[f64]) -> f64 {
        self.inner(u, &self.apply(u)) / self.inner(u, u)
    }
}

/// Largest eigenvalue of `L` and its positive eigenfunction.
///
/// Shifted inverse iteration: the shift starts above the spectrum at
/// `max(½ + |A|²) + 1`, which bounds every eigenvalue, and moves to just
/// above the current Rayleigh quotient once that has settled.
pub fn first_eigenpair(l: &LinearizedOperator) -> Result<EigenPair> {
    const MAX_ITER: usize = 10_000;
    let n = l.len();
    let top = l.potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sigma = top + 1.0;
    let mut refined = false;
    let mut u = vec![1.0; n];
    let mut mu = l.rayleigh(&u);
    for it in 1..=MAX_ITER {
        let mut next = l.shifted_solve(sigma, &u);
        let norm = l.inner(&next, &next).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::EigenSolveFailure { iterations: it });
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let mu_next = l.rayleigh(&next);
        let change = (mu_next - mu).abs();
        u = next;
        mu = mu_next;
        if change < 1e-12 * mu.abs().max(1.0) {
            let lu = l.apply(&u);
            let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let residual = lu.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - mu * b).abs())) / scale;
            if residual <= 1e-9 {
                return finish(u, mu, it, residual);
            }
        }
        if !refined && change < 1e-6 * mu.abs().max(1.0) {
            sigma = mu + 1e-3 * mu.abs().max(1.0);
            refined = true;
        }
    }
    Err(Error::EigenSolveFailure { iterations: MAX_ITER })
}

fn finish(mut u: Vec<f64>, mu: f64, iterations: usize, residual: f64) -> Result<EigenPair> {
    let sign = if u.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let scale = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    u.iter_mut().for_each(|x| *x *= sign / scale);
    if u.iter().any(|&x| x <= 0.0) {
        return Err(Error::EigenSolveFailure { iterations });
    }
    Ok(EigenPair { eigenvalue: mu, eigenfunction: u, iterations, residual })
}

/// `‖LH − H‖_∞`, which vanishes on exact shrinkers.
pub fn lh_minus_h(geom: &GeometrySnapshot) -> f64 {
    let l = assemble_unchecked(geom);
    let h = geom.mean_curvature();
    l.apply(h).iter().zip(h).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// The normal graph `x + s f n` over `shrinker`.
pub fn perturb(shrinker: &GeometrySnapshot, spec: &PerturbationSpec) -> Result<GeometrySnapshot> {
    if spec.f.len() != shrinker.len() {
        return Err(Error::InvalidConfig(format!(
            "perturbation has {} values for {} vertices",
            spec.f.len(),
            shrinker.len()
        )));
    }
    if spec.s == 0.0 {
        return Ok(shrinker.clone());
    }
    let v: Vec<Point> = shrinker
        .vertices()
        .iter()
        .zip(shrinker.normal())
        .zip(&spec.f)
        .map(|((x, n), f)| x + n * (spec.s * f))
        .collect();
    let out = shrinker.with_vertices(v).map_err(|e| match e {
        Error::AxisCollision { .. } | Error::DegenerateGeometry(_) => {
            Error::PerturbationTooLarge(format!("s = {}: {e}", spec.s))
        }
        other => other,
    })?;
    if !shrinker.immersed() && out.self_intersects() {
        return Err(Error::PerturbationTooLarge(format!("s = {} self-intersects", spec.s)));
    }
    Ok(out)
}

pub fn classify_perturbation(geom: &GeometrySnapshot) -> Classification {
    let h = geom.rescaled();
    let min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let margin = h.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let kind = if min > 0.0 {
        Convexity::RescaledMeanConvex
    } else if max < 0.0 {
        Convexity::RescaledMeanConcave
    } else {
        Convexity::Neither
    };
    Classification { kind, margin, min, max }
}

/// Find an amplitude whose graph is rescaled mean convex (`direction < 0`)
/// or concave (`direction > 0`) with margin `≥ min_margin`.
///
/// `|s|` starts at `0.1·min f / max f` and is halved until the sign is
/// right. Since `H̃ ≈ −sμ₁f` for small `s`, halving cannot raise the margin,
/// so if it is still short `|s|` is then doubled for as long as the sign
/// holds and the graph stays embedded.
pub fn search_amplitude(
    shrinker: &GeometrySnapshot,
    f: &[f64],
    direction: f64,
    min_margin: f64,
) -> Result<ValidatedPerturbation> {
    let fmin = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let fmax = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(fmin > 0.0) {
        return Err(Error::InvalidConfig("perturbation function must be positive".into()));
    }
    let want = if direction < 0.0 { Convexity::RescaledMeanConvex } else { Convexity::RescaledMeanConcave };
    let attempt = |s: f64| -> Result<Option<ValidatedPerturbation>> {
        match perturb(shrinker, &PerturbationSpec { f: f.to_vec(), s }) {
            Ok(geometry) => {
                let classification = classify_perturbation(&geometry);
                Ok((classification.kind == want)
                    .then_some(ValidatedPerturbation { s, geometry, classification, halvings: 0 }))
            }
            Err(Error::PerturbationTooLarge(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut s = direction.signum() * 0.1 * fmin / fmax;
    let mut found = None;
    for halvings in 0..40 {
        if let Some(mut v) = attempt(s)? {
            v.halvings = halvings;
            found = Some(v);
            break;
        }
        s *= 0.5;
    }
    let mut best = found.ok_or(Error::AbortNotGeneric)?;
    for _ in 0..40 {
        if best.classification.margin >= min_margin {
            return Ok(best);
        }
        match attempt(2.0 * best.s)? {
            Some(v) => best = ValidatedPerturbation { halvings: best.halvings, ..v },
            None => break,
        }
    }
    Err(Error::AbortNotGeneric)
}
