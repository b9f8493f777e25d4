//! Frozen values of derived constants (shooting parameters, crossing radii,
//! first eigenvalues, shrinker residuals) and the check that recomputes them.

use crate::error::{Error, Result};
use crate::geometry::{GeometrySnapshot, Mode};
use crate::shrinkers::ShrinkerSpec;
use crate::spectral::{assemble_l, first_eigenpair};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The registry shipped with the crate.
pub const BUNDLED: &str = include_str!("../../data/registry.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − value| ≤ tolerance`.
    Value,
    /// `measured ≤ tolerance`; `value` is informational.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    /// How the value is produced, e.g. `"shooting, N = 2048"`.
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub tool_version: String,
    pub entries: Vec<Entry>,
}

impl Registry {
    pub fn bundled() -> Result<Self> {
        Ok(serde_json::from_str(BUNDLED)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::write_json(path, self)
    }
}

/// Which way `⟨x, n⟩/2` enters the shrinker residual. `Flipped` exists so
/// the harness can show that a convention error is caught.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    Standard,
    Flipped,
}

fn residual(g: &GeometrySnapshot, convention: Convention) -> f64 {
    let sign = match convention {
        Convention::Standard => 1.0,
        Convention::Flipped => -1.0,
    };
    g.vertices()
        .iter()
        .zip(g.normal())
        .zip(g.mean_curvature())
        .map(|((x, n), h)| (h - sign * 0.5 * x.dot(n)).abs())
        .fold(0.0, f64::max)
}

/// Resolutions at which the registered values are computed.
pub const SHOOT_N: usize = 2048;
pub const EIGEN_N: usize = 512;

/// Recompute every registered quantity.
pub fn measure(convention: Convention) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut value = |name: &str, v: f64, tol: f64, method: &str| {
        out.push(Entry { name: name.into(), value: v, tolerance: tol, comparison: Comparison::Value, method: method.into() })
    };
    let shoot = format!("shooting, N = {SHOOT_N}");
    let eig = format!("inverse iteration, N = {EIGEN_N}");

    let circle = ShrinkerSpec::round(1, SHOOT_N).build()?;
    let sphere = ShrinkerSpec::round(2, SHOOT_N).build()?;
    let al = ShrinkerSpec::abresch_langer(2, 3, SHOOT_N).build()?;
    let torus = ShrinkerSpec::angenent_torus(SHOOT_N).build()?;
    value("abresch-langer-2-3.shooting-parameter", al.shooting_parameter, 1e-9, &shoot);
    value("abresch-langer-2-3.inner-radius", al.inner_radius, 1e-9, &shoot);
    value("abresch-langer-2-3.outer-radius", al.outer_radius, 1e-9, &shoot);
    value("angenent-torus.r-in", torus.inner_radius, 1e-9, &shoot);
    value("angenent-torus.r-out", torus.outer_radius, 1e-9, &shoot);

    let al_small = ShrinkerSpec::abresch_langer(2, 3, EIGEN_N).build()?;
    let torus_small = ShrinkerSpec::angenent_torus(EIGEN_N).build()?;
    value("abresch-langer-2-3.mu1", first_eigenpair(&assemble_l(&al_small.geometry)?)?.eigenvalue, 1e-8, &eig);
    value("angenent-torus.mu1", first_eigenpair(&assemble_l(&torus_small.geometry)?)?.eigenvalue, 1e-8, &eig);

    for (name, g, bound) in [
        ("round-circle.residual", &circle.geometry, 1e-10),
        ("round-sphere.residual", &sphere.geometry, 1e-10),
        ("abresch-langer-2-3.residual", &al.geometry, 1e-6),
        ("angenent-torus.residual", &torus.geometry, 1e-6),
    ] {
        debug_assert!(g.mode() == Mode::Curve || g.mode() == Mode::Revolution);
        out.push(Entry {
            name: name.into(),
            value: residual(g, convention),
            tolerance: bound,
            comparison: Comparison::UpperBound,
            method: format!("max |H − ⟨x,n⟩/2|, N = {SHOOT_N}"),
        });
    }
    Ok(out)
}

/// Measure and package as a registry; the caller decides where to save it.
pub fn freeze() -> Result<Registry> {
    Ok(Registry { tool_version: super::TOOL_VERSION.into(), entries: measure(Convention::Standard)? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub frozen: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
    /// Registered names that the measurement no longer produces.
    pub missing: Vec<String>,
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        self.missing.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    /// `Err(RegressionFailure)` naming the failed entries.
    pub fn into_result(self) -> Result<Self> {
        if self.pass() {
            return Ok(self);
        }
        let failed: Vec<String> = self
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{} (frozen {:e}, measured {:e})", r.name, r.frozen, r.measured))
            .chain(self.missing.iter().map(|m| format!("{m} (not measured)")))
            .collect();
        Err(Error::RegressionFailure(failed.join("; ")))
    }
}

pub fn compare(registry: &Registry, measured: &[Entry]) -> CheckReport {
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for e in &registry.entries {
        let Some(m) = measured.iter().find(|m| m.name == e.name) else {
            missing.push(e.name.clone());
            continue;
        };
        let pass = match e.comparison {
            Comparison::Value => (m.value - e.value).abs() <= e.tolerance,
            Comparison::UpperBound => m.value <= e.tolerance,
        };
        rows.push(CheckRow {
            name: e.name.clone(),
            frozen: e.value,
            measured: m.value,
            tolerance: e.tolerance,
            comparison: e.comparison,
            pass,
        });
    }
    CheckReport { rows, missing }
}

/// Recompute and compare; mismatches are a [`Error::RegressionFailure`].
pub fn check(registry: &Registry, convention: Convention) -> Result<CheckReport> {
    compare(registry, &measure(convention)?).into_result()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, value: f64, comparison: Comparison) -> Entry {
        Entry { name: name.into(), value, tolerance: 1e-6, comparison, method: String::new() }
    }

    #[test]
    fn compare_flags_drift_and_missing_entries() {
        let reg = Registry {
            tool_version: "0".into(),
            entries: vec![
                entry("a", 1.0, Comparison::Value),
                entry("b", 0.0, Comparison::UpperBound),
                entry("c", 2.0, Comparison::Value),
            ],
        };
        let measured = vec![entry("a", 1.0 + 5e-7, Comparison::Value), entry("b", 2e-6, Comparison::UpperBound)];
        let rep = compare(&reg, &measured);
        assert!(rep.rows[0].pass);
        assert!(!rep.rows[1].pass);
        assert_eq!(rep.missing, ["c"]);
        assert!(matches!(rep.into_result(), Err(Error::RegressionFailure(_))));
    }

    #[test]
    fn bundled_registry_parses() {
        let reg = Registry::bundled().unwrap();
        assert!(reg.entries.iter().any(|e| e.name == "angenent-torus.r-out"));
    }
}
