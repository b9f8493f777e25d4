//! Fixtures shared by the benchmarks.

use shrinklab_core::{GeometrySnapshot, Point, ShrinkerSpec};

/// Angenent torus profile at `n` vertices.
pub fn torus(n: usize) -> GeometrySnapshot {
    ShrinkerSpec::angenent_torus(n).build().expect("torus shoots").geometry
}

/// Ellipse with semi-axes `a`, `b`, stored counter-clockwise.
pub fn ellipse(a: f64, b: f64, n: usize) -> GeometrySnapshot {
    let v = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Point::new(a * t.cos(), b * t.sin())
        })
        .collect();
    GeometrySnapshot::curve(v).expect("valid ellipse")
}
