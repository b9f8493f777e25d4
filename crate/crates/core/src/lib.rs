pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod ode;
pub mod shrinkers;
pub mod spectral;
pub mod spline;

pub use error::{Error, Result};
pub use geometry::{GeometrySnapshot, Mode, Point, Side, Topology};
pub use flow::{FlowConfig, FlowMode, FlowTrajectory, Termination};
pub use harness::{ExperimentConfig, RunManifest};
pub use shrinkers::{ShrinkerKind, ShrinkerSpec};
