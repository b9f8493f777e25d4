use crate::diagnostics::{CollapseSide, IdentityConfig, SingularityOptions, TangentType};
use crate::error::{Error, Result};
use crate::flow::{FlowConfig, Termination};
use crate::shrinkers::ShrinkerSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Names of the built-in experiments, in display order.
pub const CANNED: [&str; 7] = [
    "circle-collapse",
    "circle-expand",
    "torus-inward",
    "torus-outward",
    "abresch-langer-inward",
    "abresch-langer-outward",
    "avoidance-demo",
];

/// Bundled TOML for a built-in experiment.
pub fn canned_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "circle-collapse" => include_str!("../../experiments/circle-collapse.toml"),
        "circle-expand" => include_str!("../../experiments/circle-expand.toml"),
        "torus-inward" => include_str!("../../experiments/torus-inward.toml"),
        "torus-outward" => include_str!("../../experiments/torus-outward.toml"),
        "abresch-langer-inward" => include_str!("../../experiments/abresch-langer-inward.toml"),
        "abresch-langer-outward" => include_str!("../../experiments/abresch-langer-outward.toml"),
        "avoidance-demo" => include_str!("../../experiments/avoidance-demo.toml"),
        _ => return None,
    })
}

pub fn canned(name: &str) -> Result<ExperimentConfig> {
    let src = canned_source(name)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{name}`; known: {}", CANNED.join(", "))))?;
    ExperimentConfig::from_toml(src)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `s < 0`: towards the rescaled mean convex side.
    Inward,
    Outward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Inward => -1.0,
            Direction::Outward => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FSource {
    /// First eigenfunction of `L` on the shrinker.
    Eigenfunction,
    /// `f ≡ 1`, a parallel offset.
    Constant,
    /// Per-vertex values read from `file`.
    File,
}

/// Normal graph `x + s·f·n`. Exactly one of `s` and `direction` is set;
/// `direction` asks for the amplitude search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    pub source: FSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(default = "default_margin")]
    pub min_margin: f64,
}

fn default_margin() -> f64 {
    1e-3
}

impl PerturbationConfig {
    fn validate(&self, what: &str) -> Result<()> {
        match (self.s, self.direction) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(Error::Config(format!("{what}: set exactly one of `s` and `direction`")))
            }
            (Some(s), None) if s == 0.0 || !s.is_finite() => {
                return Err(Error::Config(format!("{what}: amplitude must be finite and non-zero")))
            }
            _ => {}
        }
        match (self.source, &self.file) {
            (FSource::File, None) => Err(Error::Config(format!("{what}: source = \"file\" needs `file`"))),
            (FSource::File, Some(p)) if !p.is_file() => {
                Err(Error::Config(format!("{what}: perturbation file {} does not exist", p.display())))
            }
            (FSource::Eigenfunction | FSource::Constant, Some(_)) => {
                Err(Error::Config(format!("{what}: `file` is only read with source = \"file\"")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub sign: bool,
    pub nestedness: bool,
    /// Scan every k-th stored slice for `δ*` and pinching (`0` disables).
    pub noncollapse_every: usize,
    /// Slices with more vertices are skipped by the quadratic scan.
    pub noncollapse_max_vertices: usize,
    /// Allowed relative decrease of `delta_in` below its initial value.
    pub noncollapse_slack: f64,
    pub classify: bool,
    pub singularity: SingularityOptions,
    /// Classify the transported MCF run as well and compare.
    pub mcf_cross_check: bool,
    pub cross_check_tolerance: f64,
    pub identities: bool,
    /// Probe centre as a fraction of the singular (or final) time.
    pub probe_fraction: f64,
    pub probe_half_width: f64,
    pub identity: IdentityConfig,
    pub identity_spatial_order: f64,
    pub identity_temporal_order: f64,
    pub isoperimetric: bool,
    /// Continue the initial data under MCF until its own singularity.
    pub mcf_continuation: bool,
    pub continuation_t_max: f64,
    pub avoidance_tolerance: f64,
    /// Closed-form avoidance comparison is limited to times where the
    /// smaller circle keeps at least this fraction of its radius.
    pub closed_form_radius_fraction: f64,
    pub closed_form_tolerance: f64,
    pub self_adjointness_probes: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            sign: true,
            nestedness: true,
            noncollapse_every: 1,
            noncollapse_max_vertices: 4096,
            noncollapse_slack: 1e-3,
            classify: true,
            singularity: SingularityOptions::default(),
            mcf_cross_check: true,
            cross_check_tolerance: 1e-3,
            identities: false,
            probe_fraction: 0.5,
            probe_half_width: 0.05,
            identity: IdentityConfig::default(),
            identity_spatial_order: 1.8,
            identity_temporal_order: 0.9,
            isoperimetric: false,
            mcf_continuation: false,
            continuation_t_max: 5.0,
            avoidance_tolerance: 1e-3,
            closed_form_radius_fraction: 0.3,
            closed_form_tolerance: 1e-4,
            self_adjointness_probes: 4,
        }
    }
}

/// `value ± tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub value: f64,
    pub tolerance: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tolerance
    }
}

/// Outcomes the run is checked against; unset fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expectations {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    /// Accepted tangent types.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tangent_type: Vec<TangentType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collapse_side: Option<CollapseSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular_time: Option<Band>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_exponent: Option<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Draw every k-th stored slice in the SVG (`0` skips the figure).
    pub svg_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), svg_every: 1 }
    }
}

/// One experiment: construct, perturb, flow, diagnose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Seeds the self-adjointness probe vectors; nothing else is random.
    #[serde(default)]
    pub seed: u64,
    pub shrinker: ShrinkerSpec,
    pub perturbation: PerturbationConfig,
    /// Second initial surface over the same shrinker; its run is compared
    /// with the main one by the avoidance check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub companion: Option<PerturbationConfig>,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub expect: Expectations,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&src)?;
        // perturbation files are resolved against the config's directory
        if let Some(base) = path.parent() {
            for p in std::iter::once(&mut cfg.perturbation).chain(cfg.companion.as_mut()) {
                if let Some(f) = p.file.as_mut() {
                    if f.is_relative() {
                        *f = base.join(&*f);
                    }
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved config, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Config("`name` must not be empty".into()));
        }
        self.perturbation.validate("perturbation")?;
        if let Some(c) = &self.companion {
            c.validate("companion")?;
            if self.flow.mode != crate::flow::FlowMode::Mcf {
                return Err(Error::Config("a companion run is compared by avoidance and needs mode = \"mcf\"".into()));
            }
        }
        let d = &self.diagnostics;
        if d.identities && d.identity.levels.len() < 3 {
            return Err(Error::Config("identity checks need at least three resolutions".into()));
        }
        if !(d.probe_fraction > 0.0 && d.probe_fraction < 1.0) {
            return Err(Error::Config("probe_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// SHA-256 of the resolved config without the output directory, so that
    /// the same experiment written to two places hashes the same.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_configs_parse_and_round_trip() {
        for name in CANNED {
            let cfg = canned(name).unwrap();
            assert_eq!(cfg.name, name);
            let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = canned("circle-collapse").unwrap();
        let h = a.hash();
        a.output.dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), h);
        a.flow.cfl = 0.3;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn amplitude_must_be_specified_once() {
        let src = canned_source("circle-collapse").unwrap().replace("s = ", "direction = \"inward\"\ns = ");
        assert!(matches!(ExperimentConfig::from_toml(&src), Err(Error::Config(_))));
        let zero = canned_source("circle-collapse").unwrap().replace("s = -0.41421356237309515", "s = 0.0");
        assert!(matches!(ExperimentConfig::from_toml(&zero), Err(Error::Config(_))));
    }

    #[test]
    fn missing_perturbation_file_is_rejected() {
        let src = canned_source("torus-inward")
            .unwrap()
            .replace("source = \"eigenfunction\"", "source = \"file\"\nfile = \"/nonexistent/f.json\"");
        assert!(matches!(ExperimentConfig::from_toml(&src), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = format!("colour = \"red\"\n{}", canned_source("circle-expand").unwrap());
        assert!(ExperimentConfig::from_toml(&src).is_err());
    }
}
