use super::{GeometrySnapshot, Mode, Point, Topology};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// On-disk form of a [`GeometrySnapshot`].
///
/// Floats are written in shortest round-trip form, which never needs more
/// than 17 significant digits and reads back bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub ambient_dim: usize,
    pub mode: Mode,
    pub immersed: bool,
    pub time: f64,
    pub vertices: Vec<[f64; 2]>,
    #[serde(default = "closed", skip_serializing_if = "is_closed")]
    pub topology: Topology,
}

fn closed() -> Topology {
    Topology::Closed
}

fn is_closed(t: &Topology) -> bool {
    *t == Topology::Closed
}

impl From<&GeometrySnapshot> for GeometryRecord {
    fn from(g: &GeometrySnapshot) -> Self {
        Self {
            ambient_dim: g.ambient_dim(),
            mode: g.mode(),
            immersed: g.immersed(),
            time: g.time(),
            vertices: g.vertices().iter().map(|p| [p.x, p.y]).collect(),
            topology: g.topology(),
        }
    }
}

impl TryFrom<GeometryRecord> for GeometrySnapshot {
    type Error = Error;

    fn try_from(r: GeometryRecord) -> Result<Self> {
        let expected = match r.mode {
            Mode::Curve => 2,
            Mode::Revolution => 3,
        };
        if r.ambient_dim != expected {
            return Err(Error::DegenerateGeometry(format!(
                "ambient_dim {} does not match mode {:?}",
                r.ambient_dim, r.mode
            )));
        }
        let v = r.vertices.iter().map(|p| Point::new(p[0], p[1])).collect();
        GeometrySnapshot::new(r.mode, r.topology, r.immersed, r.time, v)
    }
}

impl GeometrySnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GeometryRecord::from(self)).expect("geometry record serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: GeometryRecord = serde_json::from_str(s)?;
        rec.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_fields() {
        let g = GeometrySnapshot::circle(1.0, Point::zeros(), 16).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json()).unwrap();
        assert_eq!(v["ambient_dim"], 2);
        assert_eq!(v["mode"], "curve");
        assert_eq!(v["immersed"], false);
        assert_eq!(v["vertices"].as_array().unwrap().len(), 16);
        assert!(v.get("topology").is_none());
    }

    #[test]
    fn mismatched_dimension_rejected() {
        let g = GeometrySnapshot::circle(1.0, Point::zeros(), 16).unwrap();
        let mut rec = GeometryRecord::from(&g);
        rec.ambient_dim = 3;
        assert!(GeometrySnapshot::try_from(rec).is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(r in 0.1f64..10.0, cx in -5.0f64..5.0, t in -1.0f64..5.0) {
            let g = GeometrySnapshot::circle(r, Point::new(cx, 0.3), 40).unwrap().with_time(t);
            let back = GeometrySnapshot::from_json(&g.to_json()).unwrap();
            prop_assert_eq!(back.time().to_bits(), t.to_bits());
            for (a, b) in g.vertices().iter().zip(back.vertices()) {
                prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
                prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
            }
        }
    }
}
