use super::{mirror, GeometrySnapshot, Point, Topology, MIN_VERTICES};
use crate::error::{Error, Result};
use crate::spline::{chord_knots, CubicSpline2};

/// Redistribute the vertices to uniform arclength along a cubic spline
/// through the current vertices.
///
/// The spline parameter is first set to chord length and then refitted once
/// with the spline's own arclength, which makes irregular input behave like
/// arclength-parametrised input.
pub fn resample(geom: &GeometrySnapshot, n_vertices: usize) -> Result<GeometrySnapshot> {
    let v = resample_points(geom.vertices(), geom.topology(), n_vertices, true)?;
    geom.with_vertices(v)
}

/// Tangential redistribution used inside the flow: same as [`resample`]
/// without the parameter refit, since the input is already nearly uniform.
pub fn redistribute(
    vertices: &[Point],
    topology: Topology,
    n_vertices: usize,
) -> Result<Vec<Point>> {
    resample_points(vertices, topology, n_vertices, false)
}

fn resample_points(
    vertices: &[Point],
    topology: Topology,
    n_vertices: usize,
    refit: bool,
) -> Result<Vec<Point>> {
    if n_vertices < MIN_VERTICES {
        return Err(Error::TooFewVertices { required: MIN_VERTICES, got: n_vertices });
    }
    match topology {
        Topology::Closed => {
            let mut knots = chord_knots(vertices, true);
            let mut spline = CubicSpline2::periodic(vertices, &knots);
            if refit {
                knots = arclength_knots(&spline);
                spline = CubicSpline2::periodic(vertices, &knots);
            }
            let pieces: Vec<Piece> = (0..spline.segments()).map(|s| Piece { seg: s, u0: 0.0, u1: 1.0 }).collect();
            sample(&spline, &pieces, n_vertices, 0.0)
        }
        Topology::Axis => {
            let n = vertices.len();
            // reflected ghosts on both ends keep the natural end conditions
            // far from the axis crossings
            let mut aug = Vec::with_capacity(n + 2 * GHOSTS);
            aug.extend(vertices[..GHOSTS].iter().rev().map(|p| mirror(*p)));
            aug.extend_from_slice(vertices);
            aug.extend(vertices[n - GHOSTS..].iter().rev().map(|p| mirror(*p)));
            let mut knots = chord_knots(&aug, false);
            let mut spline = CubicSpline2::natural(&aug, &knots);
            if refit {
                knots = arclength_knots(&spline);
                spline = CubicSpline2::natural(&aug, &knots);
            }
            let first = GHOSTS - 1; // joins mirror(v0) to v0
            let last = GHOSTS + n - 1; // joins v_{n-1} to its mirror
            let ua = axis_crossing(&spline, first);
            let ub = axis_crossing(&spline, last);
            let mut pieces = vec![Piece { seg: first, u0: ua, u1: 1.0 }];
            pieces.extend((first + 1..last).map(|s| Piece { seg: s, u0: 0.0, u1: 1.0 }));
            pieces.push(Piece { seg: last, u0: 0.0, u1: ub });
            sample(&spline, &pieces, n_vertices, 0.5)
        }
    }
}

const GHOSTS: usize = 6;

struct Piece {
    seg: usize,
    u0: f64,
    u1: f64,
}

fn arclength_knots(spline: &CubicSpline2) -> Vec<f64> {
    let mut knots = Vec::with_capacity(spline.segments() + 1);
    knots.push(0.0);
    let mut acc = 0.0;
    for s in 0..spline.segments() {
        acc += spline.arclength(s, 0.0, 1.0);
        knots.push(acc);
    }
    knots
}

/// Local coordinate in `seg` where the spline crosses `r = 0`.
fn axis_crossing(spline: &CubicSpline2, seg: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let f_lo = spline.eval(seg, lo).x;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f = spline.eval(seg, mid).x;
        if (f > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Place `m` points at arclengths `(j + offset)·L/m` along the pieces.
fn sample(spline: &CubicSpline2, pieces: &[Piece], m: usize, offset: f64) -> Result<Vec<Point>> {
    let lengths: Vec<f64> = pieces.iter().map(|p| spline.arclength(p.seg, p.u0, p.u1)).collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 1e-10) {
        return Err(Error::DegenerateGeometry(format!("arclength {total:e} below 1e-10")));
    }
    let step = total / m as f64;
    let mut out = Vec::with_capacity(m);
    let mut k = 0;
    let mut start = 0.0;
    for j in 0..m {
        let target = (j as f64 + offset) * step;
        while k + 1 < pieces.len() && start + lengths[k] <= target {
            start += lengths[k];
            k += 1;
        }
        let p = &pieces[k];
        let local = (target - start).clamp(0.0, lengths[k]);
        let u = if local == 0.0 {
            p.u0
        } else {
            // rescale the piece to the whole segment for the inversion
            let seg_len = spline.arclength(p.seg, p.u0, 1.0);
            spline.invert_arclength(p.seg, p.u0, local, seg_len)
        };
        out.push(spline.eval(p.seg, u));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{GeometrySnapshot, Mode};
    use super::*;
    use std::f64::consts::PI;

    fn irregular_circle(n: usize) -> GeometrySnapshot {
        let v = (0..n)
            .map(|i| {
                let a = 2.0 * PI * (i as f64 + 0.05 * (3.0 * i as f64).sin()) / n as f64;
                Point::new(a.cos(), a.sin())
            })
            .collect();
        GeometrySnapshot::curve(v).unwrap()
    }

    #[test]
    fn irregular_circle_to_uniform() {
        let g = irregular_circle(64);
        let r = resample(&g, 128).unwrap();
        assert_eq!(r.len(), 128);
        let dev = r.vertices().iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "radial deviation {dev:e}");
        let edges: Vec<f64> = (0..128).map(|i| (r.neighbor(i, 1) - r.vertices()[i]).norm()).collect();
        let spread = edges.iter().cloned().fold(0.0, f64::max) - edges.iter().cloned().fold(1.0, f64::min);
        assert!(spread < 1e-6, "edge spread {spread:e}");
        let rel = (r.perimeter() - 2.0 * PI).abs() / (2.0 * PI);
        assert!(rel < 1e-6, "perimeter drift {rel:e}");
    }

    #[test]
    fn uniform_input_is_fixed() {
        let g = GeometrySnapshot::circle(1.0, Point::zeros(), 256).unwrap();
        let r = resample(&g, 256).unwrap();
        for (a, b) in g.vertices().iter().zip(r.vertices()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn axis_profile_resample_keeps_sphere() {
        let g = GeometrySnapshot::sphere_profile(2.0, 64).unwrap();
        let r = resample(&g, 100).unwrap();
        assert_eq!(r.mode(), Mode::Revolution);
        let dev = r.vertices().iter().map(|p| (p.norm() - 2.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev:e}");
        // first vertex sits half a cell above the south pole
        let expected = PI * 2.0 / 200.0;
        assert!((r.vertices()[0].x - 2.0 * (expected / 2.0).sin()).abs() < 1e-6);
    }
}
