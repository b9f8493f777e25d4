//! Discrete closed curves and surface-of-revolution profiles.
//!
//! A [`GeometrySnapshot`] owns its vertices and the pointwise geometry derived
//! from them. The derived fields are computed once at construction and the
//! vertices are never mutated afterwards, so they cannot go stale.
//!
//! Conventions:
//! * closed embedded curves are stored counterclockwise (positive signed
//!   area); the outward normal is the clockwise rotation of the tangent;
//! * immersed curves are stored with positive turning number;
//! * revolution profiles live in the `(r, z)` half-plane with `r > 0`. A
//!   closed profile is a torus-type loop; an axis profile runs from the
//!   bottom of the axis to the top with its vertices at half-cell offsets,
//!   so the axis itself is never a vertex and the reflected neighbours
//!   `(-r, z)` act as ghost points;
//! * `H = κ` for curves and `H = κ + n_r / r` for revolution surfaces, with
//!   the sign chosen so that the round sphere with outward normal has `H > 0`;
//! * the rescaled mean curvature is `H̃ = H − ⟨x, n⟩ / 2`.

mod io;
mod resample;

pub use io::GeometryRecord;
pub use resample::{redistribute, resample};

use crate::error::{Error, Result};
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A point of the plane or of the `(r, z)` half-plane.
pub type Point = Vector2<f64>;

/// Minimum vertex count accepted by the stencils.
pub const MIN_VERTICES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Planar curve in ℝ².
    Curve,
    /// Profile of a hypersurface of revolution in ℝ³ about the `z` axis.
    Revolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Cyclic vertex sequence.
    Closed,
    /// Open profile whose two ends meet the rotation axis (sphere type).
    Axis,
}

/// Classification returned by [`GeometrySnapshot::side_of`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Inside,
    Outside,
    OnBoundary,
}

/// Pointwise quantities derived from the vertices.
#[derive(Debug, Clone, Default)]
pub struct Derived {
    pub tangent: Vec<Point>,
    pub normal: Vec<Point>,
    /// Curvature of the planar curve or of the profile.
    pub curvature: Vec<f64>,
    /// Rotational principal curvature `n_r / r` (zero for planar curves).
    pub rotational: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub rescaled: Vec<f64>,
    /// Arclength of edge `i → i+1`; axis profiles have `n - 1` edges.
    pub edge_length: Vec<f64>,
    /// Arclength attributed to each vertex (half of each adjacent edge).
    pub vertex_weight: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GeometrySnapshot {
    mode: Mode,
    topology: Topology,
    immersed: bool,
    time: f64,
    vertices: Vec<Point>,
    derived: Derived,
}

impl GeometrySnapshot {
    /// Validate, orient and differentiate a vertex sequence.
    pub fn new(
        mode: Mode,
        topology: Topology,
        immersed: bool,
        time: f64,
        mut vertices: Vec<Point>,
    ) -> Result<Self> {
        if topology == Topology::Axis && mode != Mode::Revolution {
            return Err(Error::DegenerateGeometry("axis topology needs a revolution profile".into()));
        }
        if vertices.len() < MIN_VERTICES {
            return Err(Error::TooFewVertices { required: MIN_VERTICES, got: vertices.len() });
        }
        if let Some(i) = vertices.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::DegenerateGeometry(format!("non-finite vertex {i}")));
        }
        if mode == Mode::Revolution {
            if let Some((i, p)) = vertices.iter().enumerate().find(|(_, p)| p.x <= 0.0) {
                return Err(Error::AxisCollision { index: i, r: p.x });
            }
        }
        orient(&mut vertices, topology, immersed);
        let mut geom = Self { mode, topology, immersed, time, vertices, derived: Derived::default() };
        let diam = geom.diameter();
        let min_edge = geom.min_edge();
        if !(min_edge > 1e-12 * diam) {
            return Err(Error::DegenerateGeometry(format!(
                "minimum edge {min_edge:e} below 1e-12 of diameter {diam:e}"
            )));
        }
        geom.derived = geom.differentiate();
        Ok(geom)
    }

    /// Planar closed embedded curve.
    pub fn curve(vertices: Vec<Point>) -> Result<Self> {
        Self::new(Mode::Curve, Topology::Closed, false, 0.0, vertices)
    }

    /// Same mode, topology, flag and time with new vertices.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        Self::new(self.mode, self.topology, self.immersed, self.time, vertices)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Uniformly sampled circle `center + radius·(cos θ, sin θ)`.
    pub fn circle(radius: f64, center: Point, n: usize) -> Result<Self> {
        let v = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                center + Point::new(a.cos(), a.sin()) * radius
            })
            .collect();
        Self::curve(v)
    }

    /// Axis profile of the round sphere of given radius centred at the origin.
    pub fn sphere_profile(radius: f64, n: usize) -> Result<Self> {
        let v = (0..n)
            .map(|i| {
                let phi = PI * (i as f64 + 0.5) / n as f64;
                Point::new(radius * phi.sin(), -radius * phi.cos())
            })
            .collect();
        Self::new(Mode::Revolution, Topology::Axis, false, 0.0, v)
    }

    /// Closed torus-type profile: circle of radius `a` centred at `(big_r, 0)`.
    pub fn tube_profile(big_r: f64, a: f64, n: usize) -> Result<Self> {
        let v = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Point::new(big_r + a * t.cos(), a * t.sin())
            })
            .collect();
        Self::new(Mode::Revolution, Topology::Closed, false, 0.0, v)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn immersed(&self) -> bool {
        self.immersed
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn ambient_dim(&self) -> usize {
        match self.mode {
            Mode::Curve => 2,
            Mode::Revolution => 3,
        }
    }
    pub fn len(&self) -> usize {
        self.vertices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn derived(&self) -> &Derived {
        &self.derived
    }
    pub fn normal(&self) -> &[Point] {
        &self.derived.normal
    }
    pub fn curvature(&self) -> &[f64] {
        &self.derived.curvature
    }
    pub fn mean_curvature(&self) -> &[f64] {
        &self.derived.mean_curvature
    }
    pub fn rescaled(&self) -> &[f64] {
        &self.derived.rescaled
    }

    /// Vertex `i + offset`, wrapping for closed sequences and reflecting
    /// across the axis for axis profiles.
    pub fn neighbor(&self, i: usize, offset: isize) -> Point {
        stencil_point(&self.vertices, self.topology, i, offset)
    }

    /// `|A|` per vertex: `sqrt(κ² + (n_r/r)²)`.
    pub fn second_fundamental_norm(&self) -> Vec<f64> {
        self.derived
            .curvature
            .iter()
            .zip(&self.derived.rotational)
            .map(|(k, r)| (k * k + r * r).sqrt())
            .collect()
    }

    pub fn max_second_fundamental(&self) -> f64 {
        self.second_fundamental_norm().into_iter().fold(0.0, f64::max)
    }

    /// Total arclength of the curve or profile (axis to axis for axis profiles).
    pub fn perimeter(&self) -> f64 {
        self.derived.vertex_weight.iter().sum()
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_iter().map(|(a, b)| (b - a).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn mean_spacing(&self) -> f64 {
        self.perimeter() / self.len() as f64
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    fn edge_iter(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.len();
        let edges = match self.topology {
            Topology::Closed => n,
            Topology::Axis => n - 1,
        };
        (0..edges).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// `∮ κ ds`.
    pub fn total_curvature(&self) -> f64 {
        self.derived.curvature.iter().zip(&self.derived.vertex_weight).map(|(k, w)| k * w).sum()
    }

    /// Turning number from the exterior angles of the polygon.
    pub fn turning_number(&self) -> i64 {
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = self.vertices[i] - self.neighbor(i, -1);
            let b = self.neighbor(i, 1) - self.vertices[i];
            total += cross(a, b).atan2(a.dot(&b));
        }
        (total / (2.0 * PI)).round() as i64
    }

    /// Signed area `½∮(x dy − y dx)`, winding-weighted for immersed curves.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.boundary_polygon())
    }

    /// Closed polygon bounding the enclosed region: the vertices themselves,
    /// or for axis profiles the profile followed by its mirror image.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        match self.topology {
            Topology::Closed => self.vertices.clone(),
            Topology::Axis => {
                let mut poly = self.vertices.clone();
                poly.extend(self.vertices.iter().rev().map(|p| mirror(*p)));
                poly
            }
        }
    }

    /// Gaussian area `∫ e^{−|x|²/4}` of the curve or the revolution surface.
    pub fn gaussian_area(&self) -> f64 {
        self.vertices
            .iter()
            .zip(&self.derived.vertex_weight)
            .map(|(p, w)| {
                let g = (-p.norm_squared() / 4.0).exp() * w;
                match self.mode {
                    Mode::Curve => g,
                    Mode::Revolution => 2.0 * PI * p.x * g,
                }
            })
            .sum()
    }

    /// Inside/outside classification of a point of the plane (or of the
    /// `(r, z)` half-plane for profiles).
    pub fn side_of(&self, point: Point) -> Result<Side> {
        if self.immersed {
            return Err(Error::UnsupportedForImmersed);
        }
        let poly = self.boundary_polygon();
        if distance_to_polygon(&poly, point) < 1e-9 * self.diameter() {
            return Ok(Side::OnBoundary);
        }
        Ok(if point_in_polygon(&poly, point) { Side::Inside } else { Side::Outside })
    }

    /// True when two non-adjacent edges of the polygon intersect.
    pub fn self_intersects(&self) -> bool {
        polygon_self_intersects(&self.vertices, self.topology == Topology::Closed)
    }

    fn differentiate(&self) -> Derived {
        let n = self.len();
        let mut d = Derived {
            tangent: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
            rotational: Vec::with_capacity(n),
            mean_curvature: Vec::with_capacity(n),
            rescaled: Vec::with_capacity(n),
            edge_length: Vec::new(),
            vertex_weight: vec![0.0; n],
        };
        for i in 0..n {
            let x = self.vertices[i];
            let [m2, m1, p1, p2] = [-2, -1, 1, 2].map(|k| self.neighbor(i, k));
            // Richardson combination of the circumscribed-circle curvature at
            // spacings h and 2h: fourth order, exact on circles.
            let kappa = (4.0 * menger(m1, x, p1) - menger(m2, x, p2)) / 3.0;
            let t = ((p1 - m1) * 8.0 - (p2 - m2)).normalize();
            let nrm = Point::new(t.y, -t.x);
            let rot = match self.mode {
                Mode::Curve => 0.0,
                Mode::Revolution => nrm.x / x.x,
            };
            let h = kappa + rot;
            d.tangent.push(t);
            d.normal.push(nrm);
            d.curvature.push(kappa);
            d.rotational.push(rot);
            d.mean_curvature.push(h);
            d.rescaled.push(h - x.dot(&nrm) / 2.0);
        }
        let arc = |a: Point, b: Point, k: f64| arc_length(a, b, k);
        match self.topology {
            Topology::Closed => {
                for i in 0..n {
                    let j = (i + 1) % n;
                    let k = 0.5 * (d.curvature[i] + d.curvature[j]);
                    d.edge_length.push(arc(self.vertices[i], self.vertices[j], k));
                }
                for i in 0..n {
                    d.vertex_weight[i] = 0.5 * (d.edge_length[i] + d.edge_length[(i + n - 1) % n]);
                }
            }
            Topology::Axis => {
                for i in 0..n - 1 {
                    let k = 0.5 * (d.curvature[i] + d.curvature[i + 1]);
                    d.edge_length.push(arc(self.vertices[i], self.vertices[i + 1], k));
                }
                // half of the edge to the reflected ghost reaches the axis
                let first = arc(mirror(self.vertices[0]), self.vertices[0], d.curvature[0]);
                let last = arc(self.vertices[n - 1], mirror(self.vertices[n - 1]), d.curvature[n - 1]);
                for i in 0..n {
                    let left = if i == 0 { first } else { d.edge_length[i - 1] };
                    let right = if i == n - 1 { last } else { d.edge_length[i] };
                    d.vertex_weight[i] = 0.5 * (left + right);
                }
            }
        }
        d
    }
}

pub(crate) fn stencil_point(v: &[Point], topology: Topology, i: usize, offset: isize) -> Point {
    let n = v.len() as isize;
    let j = i as isize + offset;
    match topology {
        Topology::Closed => v[j.rem_euclid(n) as usize],
        Topology::Axis => {
            if j < 0 {
                mirror(v[(-j - 1) as usize])
            } else if j >= n {
                mirror(v[(2 * n - 1 - j) as usize])
            } else {
                v[j as usize]
            }
        }
    }
}

pub fn mirror(p: Point) -> Point {
    Point::new(-p.x, p.y)
}

pub fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Signed curvature of the circle through three points (positive for a
/// left turn).
pub fn menger(a: Point, b: Point, c: Point) -> f64 {
    let ab = b - a;
    let bc = c - b;
    let ac = c - a;
    2.0 * cross(ab, bc) / (ab.norm() * bc.norm() * ac.norm())
}

/// Length of the circular arc of curvature `k` spanning the chord `a b`.
pub fn arc_length(a: Point, b: Point, k: f64) -> f64 {
    let c = (b - a).norm();
    let x = 0.5 * k.abs() * c;
    if x < 1e-8 {
        c
    } else {
        2.0 * x.min(1.0).asin() / k.abs()
    }
}

pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

fn orient(v: &mut [Point], topology: Topology, immersed: bool) {
    let reversed = match topology {
        Topology::Closed if immersed => {
            let n = v.len();
            let total: f64 = (0..n)
                .map(|i| {
                    let a = v[i] - v[(i + n - 1) % n];
                    let b = v[(i + 1) % n] - v[i];
                    cross(a, b).atan2(a.dot(&b))
                })
                .sum();
            total < 0.0
        }
        Topology::Closed => signed_area(v) < 0.0,
        Topology::Axis => {
            let mut poly = v.to_vec();
            poly.extend(v.iter().rev().map(|p| mirror(*p)));
            signed_area(&poly) < 0.0
        }
    };
    if reversed {
        match topology {
            // keep vertex 0 in place so the parametrisation start is stable
            Topology::Closed => v[1..].reverse(),
            Topology::Axis => v.reverse(),
        }
    }
}

pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

pub fn distance_to_polygon(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    (0..n).map(|i| segment_distance(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// Even-odd crossing test.
pub fn point_in_polygon(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Edges of a closed polygon bucketed into horizontal strips, for repeated
/// side-of queries against the same boundary.
#[derive(Debug, Clone)]
pub struct PolygonIndex {
    poly: Vec<Point>,
    y0: f64,
    dy: f64,
    strips: Vec<Vec<u32>>,
    tol: f64,
}

impl PolygonIndex {
    /// Points within `tol` of an edge classify as [`Side::OnBoundary`].
    pub fn new(poly: Vec<Point>, tol: f64) -> Self {
        let n = poly.len();
        let (lo, hi) = poly.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.y), h.max(p.y)));
        let count = n.max(1);
        let dy = ((hi - lo) / count as f64).max(f64::MIN_POSITIVE);
        let mut strips = vec![Vec::new(); count];
        let strip = |y: f64| (((y - lo) / dy).floor().max(0.0) as usize).min(count - 1);
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            for s in strip(a.y.min(b.y) - tol)..=strip(a.y.max(b.y) + tol) {
                strips[s].push(i as u32);
            }
        }
        Self { poly, y0: lo, dy, strips, tol }
    }

    pub fn side(&self, p: Point) -> Side {
        let count = self.strips.len();
        let top = self.y0 + self.dy * count as f64;
        if p.y < self.y0 - self.tol || p.y > top + self.tol {
            return Side::Outside;
        }
        let s = (((p.y - self.y0) / self.dy).floor().max(0.0) as usize).min(count - 1);
        let n = self.poly.len();
        let mut inside = false;
        for &i in &self.strips[s] {
            let (a, b) = (self.poly[i as usize], self.poly[(i as usize + 1) % n]);
            if segment_distance(p, a, b) < self.tol {
                return Side::OnBoundary;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Side::Inside
        } else {
            Side::Outside
        }
    }
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0
}

pub fn polygon_self_intersects(v: &[Point], closed: bool) -> bool {
    let n = v.len();
    let edges = if closed { n } else { n - 1 };
    let boxes: Vec<(Point, Point)> = (0..edges)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            (a.inf(&b), a.sup(&b))
        })
        .collect();
    for i in 0..edges {
        for j in i + 2..edges {
            if closed && i == 0 && j == edges - 1 {
                continue;
            }
            let (lo1, hi1) = boxes[i];
            let (lo2, hi2) = boxes[j];
            if lo1.x > hi2.x || lo2.x > hi1.x || lo1.y > hi2.y || lo2.y > hi1.y {
                continue;
            }
            if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> Point {
        Point::zeros()
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let g = GeometrySnapshot::circle(1.3, Point::new(0.2, -0.1), 64).unwrap();
        for (p, n) in g.vertices().iter().zip(g.normal()) {
            assert!((n.norm() - 1.0).abs() < 1e-12);
            let radial = (p - Point::new(0.2, -0.1)).normalize();
            assert!((n - radial).norm() < 1e-12);
        }
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mut v: Vec<Point> = GeometrySnapshot::circle(1.0, origin(), 32).unwrap().vertices().to_vec();
        v.reverse();
        let g = GeometrySnapshot::curve(v).unwrap();
        assert!(g.signed_area() > 0.0);
        assert!(g.mean_curvature().iter().all(|&h| (h - 1.0).abs() < 1e-12));
    }

    #[test]
    fn circle_root_two_is_a_fixed_point() {
        let g = GeometrySnapshot::circle(2f64.sqrt(), origin(), 128).unwrap();
        assert!(g.rescaled().iter().all(|h| h.abs() < 1e-12));
    }

    #[test]
    fn unit_circle_rescaled_curvature() {
        let g = GeometrySnapshot::circle(1.0, origin(), 128).unwrap();
        assert!(g.rescaled().iter().all(|h| (h - 0.5).abs() < 1e-12));
    }

    #[test]
    fn sphere_profile_of_radius_two() {
        let g = GeometrySnapshot::sphere_profile(2.0, 200).unwrap();
        assert_eq!(g.ambient_dim(), 3);
        for (h, ht) in g.mean_curvature().iter().zip(g.rescaled()) {
            assert!((h - 1.0).abs() < 1e-10, "H = {h}");
            assert!(ht.abs() < 1e-10);
        }
    }

    #[test]
    fn tube_outer_equator_mean_curvature() {
        // outer equator vertex is index 0 of the tube profile
        let (big_r, a) = (3.0, 0.5);
        let g = GeometrySnapshot::tube_profile(big_r, a, 256).unwrap();
        let expected = 1.0 / a + 1.0 / (big_r + a);
        assert!((g.mean_curvature()[0] - expected).abs() < 1e-10);
    }

    #[test]
    fn axis_collision_is_reported() {
        let v: Vec<Point> = (0..32)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 32.0;
                Point::new(0.5 + t.cos(), t.sin())
            })
            .collect();
        let err = GeometrySnapshot::new(Mode::Revolution, Topology::Closed, false, 0.0, v).unwrap_err();
        assert!(matches!(err, Error::AxisCollision { .. }));
    }

    #[test]
    fn gaussian_areas() {
        let r = 2f64.sqrt();
        let g = GeometrySnapshot::circle(r, origin(), 256).unwrap();
        let exact = 2.0 * PI * r * (-0.5f64).exp();
        assert!((g.gaussian_area() - exact).abs() < 1e-10);
        assert!((g.gaussian_area() - 5.3893).abs() < 5e-4);

        let s = GeometrySnapshot::sphere_profile(2.0, 512).unwrap();
        let exact = 16.0 * PI * (-1f64).exp();
        assert!((s.gaussian_area() - exact).abs() < 1e-4 * exact, "{}", s.gaussian_area());

        let tiny = GeometrySnapshot::circle(0.01, origin(), 64).unwrap();
        let exact = 2.0 * PI * 0.01 * (-0.01f64 * 0.01 / 4.0).exp();
        assert!((tiny.gaussian_area() - exact).abs() < 1e-10);
    }

    #[test]
    fn side_of_unit_circle() {
        let g = GeometrySnapshot::circle(1.0, origin(), 128).unwrap();
        assert_eq!(g.side_of(origin()).unwrap(), Side::Inside);
        assert_eq!(g.side_of(Point::new(3.0, 0.0)).unwrap(), Side::Outside);
        assert_eq!(g.side_of(Point::new(1.0, 0.0)).unwrap(), Side::OnBoundary);
    }

    #[test]
    fn side_of_rejects_immersed() {
        let v = GeometrySnapshot::circle(1.0, origin(), 32).unwrap().vertices().to_vec();
        let g = GeometrySnapshot::new(Mode::Curve, Topology::Closed, true, 0.0, v).unwrap();
        assert!(matches!(g.side_of(origin()), Err(Error::UnsupportedForImmersed)));
    }

    #[test]
    fn too_few_vertices() {
        let v: Vec<Point> = (0..8).map(|i| Point::new((i as f64).cos(), (i as f64).sin())).collect();
        assert!(matches!(GeometrySnapshot::curve(v), Err(Error::TooFewVertices { .. })));
    }

    #[test]
    fn figure_eight_self_intersects() {
        let v: Vec<Point> = (0..64)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.3) / 64.0;
                Point::new(t.sin(), (2.0 * t).sin() / 2.0)
            })
            .collect();
        let g = GeometrySnapshot::new(Mode::Curve, Topology::Closed, true, 0.0, v).unwrap();
        assert!(g.self_intersects());
        assert!(!GeometrySnapshot::circle(1.0, origin(), 64).unwrap().self_intersects());
    }
}
