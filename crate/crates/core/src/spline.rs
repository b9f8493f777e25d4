//! Planar cubic splines used for arclength resampling.

use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use nalgebra::Vector2;

type Point = Vector2<f64>;

// 3-point Gauss-Legendre on [0, 1]
const GL_NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const GL_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

/// Piecewise cubic through `points` at parameters `knots`, stored as second
/// derivatives at the knots.
#[derive(Debug, Clone)]
pub struct CubicSpline2 {
    knots: Vec<f64>,
    points: Vec<Point>,
    second: Vec<Point>,
    periodic: bool,
}

impl CubicSpline2 {
    /// Periodic spline: `knots` has `points.len() + 1` entries and the last
    /// segment closes back onto `points[0]`.
    pub fn periodic(points: &[Point], knots: &[f64]) -> Self {
        let n = points.len();
        assert_eq!(knots.len(), n + 1);
        let h = |i: usize| knots[i + 1] - knots[i];
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for i in 0..n {
            let hp = h((i + n - 1) % n);
            let hn = h(i);
            let prev = points[(i + n - 1) % n];
            let next = points[(i + 1) % n];
            lower[i] = hp;
            diag[i] = 2.0 * (hp + hn);
            upper[i] = hn;
            let rhs = (next - points[i]) * (6.0 / hn) - (points[i] - prev) * (6.0 / hp);
            rx[i] = rhs.x;
            ry[i] = rhs.y;
        }
        solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut rx);
        solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut ry);
        let second = rx.iter().zip(&ry).map(|(&x, &y)| Point::new(x, y)).collect();
        Self { knots: knots.to_vec(), points: points.to_vec(), second, periodic: true }
    }

    /// Natural spline through an open point sequence.
    pub fn natural(points: &[Point], knots: &[f64]) -> Self {
        let n = points.len();
        assert_eq!(knots.len(), n);
        let mut lower = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut upper = vec![0.0; n];
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for i in 1..n - 1 {
            let hp = knots[i] - knots[i - 1];
            let hn = knots[i + 1] - knots[i];
            lower[i] = hp;
            diag[i] = 2.0 * (hp + hn);
            upper[i] = hn;
            let rhs = (points[i + 1] - points[i]) * (6.0 / hn)
                - (points[i] - points[i - 1]) * (6.0 / hp);
            rx[i] = rhs.x;
            ry[i] = rhs.y;
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rx);
        solve_tridiagonal(&lower, &diag, &upper, &mut ry);
        let second = rx.iter().zip(&ry).map(|(&x, &y)| Point::new(x, y)).collect();
        Self { knots: knots.to_vec(), points: points.to_vec(), second, periodic: false }
    }

    pub fn segments(&self) -> usize {
        if self.periodic {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn ends(&self, seg: usize) -> (Point, Point, Point, Point, f64) {
        let j = if self.periodic { (seg + 1) % self.points.len() } else { seg + 1 };
        let h = self.knots[seg + 1] - self.knots[seg];
        (self.points[seg], self.points[j], self.second[seg], self.second[j], h)
    }

    /// Position at local coordinate `u ∈ [0, 1]` of segment `seg`.
    pub fn eval(&self, seg: usize, u: f64) -> Point {
        let (p0, p1, m0, m1, h) = self.ends(seg);
        let a = 1.0 - u;
        p0 * a + p1 * u + (m0 * (a * a * a - a) + m1 * (u * u * u - u)) * (h * h / 6.0)
    }

    /// Derivative with respect to the knot parameter.
    pub fn deriv(&self, seg: usize, u: f64) -> Point {
        let (p0, p1, m0, m1, h) = self.ends(seg);
        let a = 1.0 - u;
        (p1 - p0) / h + (m1 * (3.0 * u * u - 1.0) - m0 * (3.0 * a * a - 1.0)) * (h / 6.0)
    }

    /// Arclength of segment `seg` between local coordinates `u0` and `u1`.
    pub fn arclength(&self, seg: usize, u0: f64, u1: f64) -> f64 {
        let h = self.knots[seg + 1] - self.knots[seg];
        let span = u1 - u0;
        GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&x, w)| w * self.deriv(seg, u0 + span * x).norm())
            .sum::<f64>()
            * span
            * h
    }

    /// Local coordinate in `seg` at which the arclength from `u_start` equals `target`.
    pub fn invert_arclength(&self, seg: usize, u_start: f64, target: f64, seg_len: f64) -> f64 {
        let h = self.knots[seg + 1] - self.knots[seg];
        let mut u = (u_start + target / seg_len * (1.0 - u_start)).clamp(0.0, 1.0);
        for _ in 0..3 {
            let f = self.arclength(seg, u_start, u) - target;
            let speed = self.deriv(seg, u).norm() * h;
            if speed <= 0.0 {
                break;
            }
            u = (u - f / speed).clamp(0.0, 1.0);
            if f.abs() < 1e-15 * seg_len.max(1e-300) {
                break;
            }
        }
        u
    }
}

/// Cumulative chord-length knots for a point sequence (closing edge included
/// when `closed`).
pub fn chord_knots(points: &[Point], closed: bool) -> Vec<f64> {
    let n = points.len();
    let edges = if closed { n } else { n - 1 };
    let mut knots = Vec::with_capacity(edges + 1);
    knots.push(0.0);
    let mut acc = 0.0;
    for i in 0..edges {
        acc += (points[(i + 1) % n] - points[i]).norm();
        knots.push(acc);
    }
    knots
}
