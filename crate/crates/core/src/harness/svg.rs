use crate::error::{Error, Result};
use crate::geometry::{mirror, GeometrySnapshot, Point, Topology};
use std::fmt::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlayCircle {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    /// Draw slices `0, k, 2k, …` and always the last one.
    pub every: usize,
    /// Width of the image in pixels; the height follows the aspect ratio.
    pub width: f64,
    /// Relative margin added on each side of the bounding box.
    pub margin: f64,
    pub overlay: Option<OverlayCircle>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self { every: 1, width: 800.0, margin: 0.1, overlay: None }
    }
}

fn outline(g: &GeometrySnapshot) -> (Vec<Point>, bool) {
    match g.topology() {
        Topology::Closed => (g.vertices().to_vec(), true),
        Topology::Axis => (g.vertices().to_vec(), false),
    }
}

/// Render slices as one path each; the figure is a pure function of its
/// input, so equal inputs give byte-identical files.
pub fn emit_svg(slices: &[GeometrySnapshot], opts: &SvgOptions) -> Result<String> {
    if slices.is_empty() {
        return Err(Error::EmptyInput);
    }
    let every = opts.every.max(1);
    let mut picked: Vec<&GeometrySnapshot> = slices.iter().step_by(every).collect();
    if (slices.len() - 1) % every != 0 {
        picked.push(&slices[slices.len() - 1]);
    }

    let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
    let mut grow = |p: Point| {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    };
    for g in &picked {
        for p in g.vertices() {
            grow(*p);
            if g.topology() == Topology::Axis {
                grow(mirror(*p));
            }
        }
    }
    if let Some(c) = opts.overlay {
        grow(Point::new(c.center[0] - c.radius, c.center[1] - c.radius));
        grow(Point::new(c.center[0] + c.radius, c.center[1] + c.radius));
    }
    let extent = (hi - lo).max();
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::DegenerateGeometry("slices have no extent".into()));
    }
    let pad = opts.margin * extent;
    let (x0, y0) = (lo.x - pad, -(hi.y + pad));
    let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let stroke = 0.002 * extent;

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"{x0:.6} {y0:.6} {w:.6} {h:.6}\">",
        opts.width,
        opts.width * h / w
    );
    let last = picked.len() - 1;
    for (k, g) in picked.iter().enumerate() {
        let colour = if k == last { "#c0392b" } else { "#2c3e50" };
        let mut paths = vec![outline(g)];
        if g.topology() == Topology::Axis {
            paths.push((g.vertices().iter().map(|p| mirror(*p)).collect(), false));
        }
        for (pts, closed) in paths {
            let mut d = String::new();
            for (i, p) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.6} {:.6}", if i == 0 { "M" } else { " L" }, p.x, -p.y);
            }
            if closed {
                d.push_str(" Z");
            }
            let _ = writeln!(
                s,
                "<path d=\"{d}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"{stroke:.6}\" data-time=\"{}\"/>",
                g.time()
            );
        }
    }
    if let Some(c) = opts.overlay {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\" fill=\"none\" stroke=\"#27ae60\" stroke-width=\"{stroke:.6}\" stroke-dasharray=\"{:.6}\"/>",
            c.center[0],
            -c.center[1],
            c.radius,
            4.0 * stroke
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(path: &Path, slices: &[GeometrySnapshot], opts: &SvgOptions) -> Result<()> {
    super::write_atomic(path, emit_svg(slices, opts)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_is_one_closed_path() {
        let g = GeometrySnapshot::circle(1.0, Point::zeros(), 40).unwrap();
        let svg = emit_svg(&[g], &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        let d = svg.split("d=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(d.matches('L').count() + usize::from(d.ends_with('Z')), 40);
        assert!(svg.contains("viewBox=\"-1.200000 -1.200000 2.400000 2.400000\""));
    }

    #[test]
    fn deterministic_and_thinned() {
        let slices: Vec<_> =
            (0..10).map(|k| GeometrySnapshot::circle(1.0 + 0.1 * k as f64, Point::zeros(), 32).unwrap()).collect();
        let opts = SvgOptions { every: 4, ..SvgOptions::default() };
        let a = emit_svg(&slices, &opts).unwrap();
        assert_eq!(a, emit_svg(&slices, &opts).unwrap());
        // slices 0, 4, 8 and the last
        assert_eq!(a.matches("<path").count(), 4);
    }

    #[test]
    fn profiles_are_mirrored() {
        let g = GeometrySnapshot::sphere_profile(2.0, 32).unwrap();
        let svg = emit_svg(&[g], &SvgOptions::default()).unwrap();
        assert_eq!(svg.matches("<path").count(), 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(emit_svg(&[], &SvgOptions::default()), Err(Error::EmptyInput)));
    }
}
