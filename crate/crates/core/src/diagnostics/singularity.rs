//! Locating the first singularity of a run and matching its blow-up against
//! the shrinking templates: a round loop (circle, or cylinder when the loop
//! is a revolution profile), a neck around the rotation axis, or a local
//! curvature spike at fixed scale.

use crate::error::{Error, Result};
use crate::flow::{extrapolate_singular_time, FlowTrajectory, Termination};
use crate::geometry::{GeometrySnapshot, Mode, Point};
use crate::linalg::{least_squares, linear_fit};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TangentType {
    Cylindrical,
    Round,
    Cusp,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseSide {
    Inside,
    Outside,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// The whole curve or profile loop shrinks to a point.
    Loop,
    /// A revolution profile pinches onto the axis.
    AxisNeck,
    /// Curvature blows up on a set much smaller than the curve.
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SingularityOptions {
    /// Steps used by the singular-time extrapolation.
    pub tail_steps: usize,
    /// Template fits with relative residual above this are rejected.
    pub fit_threshold: f64,
    /// The exponent fit uses steps with `max|A|` in `[a_last / span, a_last / 2]`.
    pub exponent_span: f64,
    /// `diameter · max|A|` below this selects the loop template.
    pub loop_limit: f64,
    /// `r · max|A|` below this at the curvature peak selects the neck template.
    pub neck_limit: f64,
}

impl Default for SingularityOptions {
    fn default() -> Self {
        Self { tail_steps: 20, fit_threshold: 0.02, exponent_span: 50.0, loop_limit: 10.0, neck_limit: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub singular_time: f64,
    pub singular_point: [f64; 2],
    /// `α` in `ℓ(t) ≈ c(T − t)^α` for `ℓ = 1 / max|A|`.
    pub decay_exponent: f64,
    /// Two-standard-error interval of `α`.
    pub exponent_interval: [f64; 2],
    pub tangent_type: TangentType,
    pub collapse_side: CollapseSide,
    pub template: Template,
    /// Relative RMS residual of the template fit (`None` for local spikes).
    pub fit_residual: Option<f64>,
    /// Mean normal speed over the singular region divided by its mean
    /// absolute value: `+1` when the region moves along `−n`.
    pub velocity_sign: f64,
    /// Mean of `⟨n, ν⟩` over the singular region, with `ν` the outer normal
    /// of the fitted cylinder or circle.
    pub normal_alignment: f64,
}

fn fit_exponent(traj: &FlowTrajectory, t_sing: f64, span: f64) -> Result<(f64, [f64; 2])> {
    let a_last = traj.steps.last().ok_or(Error::EmptyInput)?.max_a;
    let picked: Vec<(f64, f64)> = traj
        .steps
        .iter()
        .filter(|r| r.t < t_sing && r.max_a >= a_last / span && r.max_a <= a_last / 2.0)
        .map(|r| ((t_sing - r.t).ln(), -r.max_a.ln()))
        .collect();
    // thin to evenly spaced abscissae so the last few steps do not dominate
    let (lo, hi) = picked.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (x, _)| (l.min(*x), h.max(*x)));
    let bins = 200usize;
    let mut slot: Vec<Option<(f64, f64)>> = vec![None; bins];
    for &(x, y) in &picked {
        let k = (((x - lo) / (hi - lo).max(1e-300)) * (bins - 1) as f64).round() as usize;
        slot[k.min(bins - 1)].get_or_insert((x, y));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = slot.into_iter().flatten().unzip();
    let (_, b, se) = linear_fit(&xs, &ys)
        .ok_or_else(|| Error::InsufficientHistory(format!("{} steps in the exponent window", xs.len())))?;
    Ok((b, [b - 2.0 * se, b + 2.0 * se]))
}

/// Least-squares circle through the points; returns centre, radius and the
/// relative RMS deviation of the distances from the radius.
pub(crate) fn fit_circle(points: &[Point]) -> Option<(Point, f64, f64)> {
    let rows: Vec<Vec<f64>> = points.iter().map(|p| vec![2.0 * p.x, 2.0 * p.y, 1.0]).collect();
    let rhs: Vec<f64> = points.iter().map(|p| p.norm_squared()).collect();
    let c = least_squares(&rows, &rhs)?;
    let centre = Point::new(c[0], c[1]);
    let radius = (c[2] + centre.norm_squared()).sqrt();
    let ms = points.iter().map(|p| ((p - centre).norm() - radius).powi(2)).sum::<f64>() / points.len() as f64;
    Some((centre, radius, ms.sqrt() / radius))
}

/// Signals averaged over a vertex set.
fn side_signals(
    geom: &GeometrySnapshot,
    speed: &[f64],
    idx: &[usize],
    outer: impl Fn(Point) -> Point,
) -> (f64, f64) {
    let (mut s, mut a, mut dot) = (0.0, 0.0, 0.0);
    for &i in idx {
        s += speed[i];
        a += speed[i].abs();
        dot += geom.normal()[i].dot(&outer(geom.vertices()[i]));
    }
    (s / a.max(1e-300), dot / idx.len().max(1) as f64)
}

/// Extrapolate the first singularity of a run that ended in blow-up and
/// classify its tangent flow.
///
/// The collapse side is read from the sign of the normal speed near the
/// singular set: `H̃` for the rescaled flow and `H` for mean curvature flow.
pub fn detect_and_classify(traj: &FlowTrajectory, opts: &SingularityOptions) -> Result<SingularityReport> {
    if traj.termination != Termination::BlowUp {
        return Err(Error::InvalidConfig("trajectory did not end in blow-up".into()));
    }
    let last = traj.last().ok_or(Error::EmptyInput)?;
    let t_sing = extrapolate_singular_time(&traj.steps, opts.tail_steps)?;
    let (alpha, interval) = fit_exponent(traj, t_sing, opts.exponent_span)?;
    let a = last.second_fundamental_norm();
    let (peak, a_max) = a.iter().enumerate().fold((0, 0.0), |m, (i, v)| if *v > m.1 { (i, *v) } else { m });
    let p = last.vertices()[peak];
    let speed = traj.mode.velocity(last);
    let all: Vec<usize> = (0..last.len()).collect();

    let mut report = SingularityReport {
        singular_time: t_sing,
        singular_point: [p.x, p.y],
        decay_exponent: alpha,
        exponent_interval: interval,
        tangent_type: TangentType::Cusp,
        collapse_side: CollapseSide::NotApplicable,
        template: Template::Local,
        fit_residual: None,
        velocity_sign: 0.0,
        normal_alignment: 0.0,
    };
    let classify_side = |v: f64| if v > 0.0 { CollapseSide::Inside } else { CollapseSide::Outside };

    if last.diameter() * a_max < opts.loop_limit {
        let (centre, _, residual) = fit_circle(last.vertices())
            .ok_or_else(|| Error::RegressionFailure("circle fit is rank deficient".into()))?;
        let (vs, na) = side_signals(last, speed, &all, |x| (x - centre).normalize());
        report.template = Template::Loop;
        report.singular_point = [centre.x, centre.y];
        report.fit_residual = Some(residual);
        report.velocity_sign = vs;
        report.normal_alignment = na;
        if residual <= opts.fit_threshold {
            report.tangent_type = match last.mode() {
                Mode::Revolution => TangentType::Cylindrical,
                Mode::Curve => TangentType::Round,
            };
            report.collapse_side = classify_side(vs);
        } else {
            report.tangent_type = TangentType::Unresolved;
        }
        return Ok(report);
    }

    if last.mode() == Mode::Revolution && p.x * a_max < opts.neck_limit {
        // vertices of the neck within one rescaled unit of the waist
        let r_star = p.x;
        let idx: Vec<usize> = all
            .iter()
            .copied()
            .filter(|&i| {
                let q = last.vertices()[i];
                (q.y - p.y).abs() <= r_star / std::f64::consts::SQRT_2 && q.x <= 4.0 * r_star
            })
            .collect();
        if idx.len() < 3 {
            report.template = Template::AxisNeck;
            report.tangent_type = TangentType::Unresolved;
            return Ok(report);
        }
        let r: Vec<f64> = idx.iter().map(|&i| last.vertices()[i].x).collect();
        let mean = r.iter().sum::<f64>() / r.len() as f64;
        let residual = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r.len() as f64).sqrt() / mean;
        let (vs, na) = side_signals(last, speed, &idx, |_| Point::new(1.0, 0.0));
        report.template = Template::AxisNeck;
        report.singular_point = [0.0, p.y];
        report.fit_residual = Some(residual);
        report.velocity_sign = vs;
        report.normal_alignment = na;
        if residual <= opts.fit_threshold {
            report.tangent_type = TangentType::Cylindrical;
            report.collapse_side = classify_side(vs);
        } else {
            report.tangent_type = TangentType::Unresolved;
        }
        return Ok(report);
    }

    let local: Vec<usize> =
        all.iter().copied().filter(|&i| (last.vertices()[i] - p).norm() <= 3.0 / a_max).collect();
    let sum: f64 = local.iter().map(|&i| speed[i]).sum();
    report.velocity_sign = sum / local.iter().map(|&i| speed[i].abs()).sum::<f64>().max(1e-300);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{self, rmcf_to_mcf, FlowConfig, FlowMode};

    fn circle(r: f64, n: usize) -> GeometrySnapshot {
        GeometrySnapshot::circle(r, Point::new(0.3, -0.2), n).unwrap()
    }

    #[test]
    fn mcf_circle_is_round_inside() {
        let cfg = FlowConfig { mode: FlowMode::Mcf, t_max: 1.0, a_max: 200.0, ..FlowConfig::default() };
        let traj = flow::run(&circle(1.0, 64), &cfg).unwrap();
        let rep = detect_and_classify(&traj, &SingularityOptions::default()).unwrap();
        assert_eq!(rep.tangent_type, TangentType::Round);
        assert_eq!(rep.collapse_side, CollapseSide::Inside);
        assert!((rep.decay_exponent - 0.5).abs() < 0.02, "{rep:?}");
        assert!((rep.singular_time + 0.5).abs() < 1e-3);
        assert!((rep.singular_point[0] - 0.3).abs() < 1e-6);
        assert!(rep.normal_alignment > 0.99);
    }

    #[test]
    fn rmcf_and_transport_agree() {
        let cfg = FlowConfig { t_max: 2.0, a_max: 200.0, ..FlowConfig::default() };
        let traj = flow::run(&GeometrySnapshot::circle(1.0, Point::zeros(), 64).unwrap(), &cfg).unwrap();
        let a = detect_and_classify(&traj, &SingularityOptions::default()).unwrap();
        let b = detect_and_classify(&rmcf_to_mcf(&traj).unwrap(), &SingularityOptions::default()).unwrap();
        assert_eq!((a.tangent_type, a.collapse_side), (b.tangent_type, b.collapse_side));
        assert!((b.singular_time + (-a.singular_time).exp()).abs() < 1e-6);
    }

    #[test]
    fn reached_t_max_is_rejected() {
        let cfg = FlowConfig { t_max: 0.1, ..FlowConfig::default() };
        let traj = flow::run(&circle(1.0, 32), &cfg).unwrap();
        assert!(detect_and_classify(&traj, &SingularityOptions::default()).is_err());
    }
}
