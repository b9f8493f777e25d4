use super::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::flow::{FlowMode, FlowTrajectory, RemeshEvent, StepRecord, Termination};
use crate::geometry::{GeometryRecord, GeometrySnapshot};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Write through a sibling temporary file and rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    write_atomic(path, &s)
}

/// One geometry JSON object per line.
pub fn write_jsonl(snapshots: &[GeometrySnapshot]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in snapshots {
        serde_json::to_writer(&mut out, &GeometryRecord::from(s))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<GeometrySnapshot>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GeometryRecord = serde_json::from_str(&line)?;
        out.push(GeometrySnapshot::try_from(rec)?);
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct StepRow {
    time: f64,
    dt: f64,
    max_abs_a: f64,
    min_rescaled_h: f64,
    max_rescaled_h: f64,
    gaussian_area: Option<f64>,
    n_vertices: usize,
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

pub fn write_steps_csv(steps: &[StepRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in steps {
        w.serialize(StepRow {
            time: r.t,
            dt: r.dt,
            max_abs_a: r.max_a,
            min_rescaled_h: r.min_rescaled,
            max_rescaled_h: r.max_rescaled,
            gaussian_area: r.gaussian_area,
            n_vertices: r.n_vertices,
        })
        .map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn read_steps_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize::<StepRow>()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            Ok(StepRecord {
                t: row.time,
                dt: row.dt,
                max_a: row.max_abs_a,
                n_vertices: row.n_vertices,
                min_rescaled: row.min_rescaled_h,
                max_rescaled: row.max_rescaled_h,
                gaussian_area: row.gaussian_area,
            })
        })
        .collect()
}

/// Sidecar of a trajectory JSONL: what the geometry lines do not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub mode: FlowMode,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub remesh_events: Vec<RemeshEvent>,
}

fn sidecars(jsonl: &Path) -> (PathBuf, PathBuf) {
    (jsonl.with_extension("meta.json"), jsonl.with_extension("csv"))
}

/// Write `<stem>.jsonl`, `<stem>.csv` (per-step series) and
/// `<stem>.meta.json` into `dir`; returns the file names.
pub fn save_trajectory(dir: &Path, stem: &str, traj: &FlowTrajectory) -> Result<Vec<String>> {
    let jsonl = dir.join(format!("{stem}.jsonl"));
    let (meta, csv) = sidecars(&jsonl);
    write_atomic(&jsonl, &write_jsonl(&traj.snapshots)?)?;
    write_atomic(&csv, &write_steps_csv(&traj.steps)?)?;
    write_json(
        &meta,
        &TrajectoryMeta {
            mode: traj.mode,
            termination: traj.termination,
            error: traj.error.clone(),
            remesh_events: traj.remesh_events.clone(),
        },
    )?;
    Ok(vec![format!("{stem}.jsonl"), format!("{stem}.csv"), format!("{stem}.meta.json")])
}

/// Read a trajectory JSONL with its sidecars when they exist. Without a
/// meta file the run is taken as `fallback_mode` ending at `t_max`; without
/// a step CSV the step series is rebuilt from the stored slices.
pub fn load_trajectory(jsonl: &Path, fallback_mode: FlowMode) -> Result<FlowTrajectory> {
    let snapshots = read_jsonl(jsonl)?;
    if snapshots.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (meta_path, csv_path) = sidecars(jsonl);
    let meta = if meta_path.is_file() {
        serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?
    } else {
        TrajectoryMeta { mode: fallback_mode, termination: Termination::ReachedTMax, error: None, remesh_events: Vec::new() }
    };
    let steps = if csv_path.is_file() {
        read_steps_csv(&csv_path)?
    } else {
        snapshots
            .windows(2)
            .map(|w| {
                let h = w[1].rescaled();
                StepRecord {
                    t: w[1].time(),
                    dt: w[1].time() - w[0].time(),
                    max_a: w[1].max_second_fundamental(),
                    n_vertices: w[1].len(),
                    min_rescaled: h.iter().cloned().fold(f64::INFINITY, f64::min),
                    max_rescaled: h.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    gaussian_area: Some(w[1].gaussian_area()),
                }
            })
            .collect()
    };
    Ok(FlowTrajectory {
        mode: meta.mode,
        snapshots,
        steps,
        remesh_events: meta.remesh_events,
        termination: meta.termination,
        error: meta.error,
    })
}

#[derive(Serialize)]
struct DiagnosticsRow {
    time: f64,
    n_vertices: usize,
    max_abs_a: f64,
    min_rescaled_h: f64,
    max_rescaled_h: f64,
    gaussian_area: f64,
    delta_in: Option<f64>,
    delta_out: Option<f64>,
    pinching_ratio: Option<f64>,
    isoperimetric_ratio: Option<f64>,
}

/// Per-slice time series: geometry scalars plus whatever the report holds
/// at that time.
pub fn write_diagnostics_csv(traj: &FlowTrajectory, report: &DiagnosticsReport) -> Result<Vec<u8>> {
    let samples = report.noncollapse.as_ref().map(|s| s.samples.as_slice()).unwrap_or(&[]);
    let iso = report.isoperimetric.as_deref().unwrap_or(&[]);
    let mut w = csv::Writer::from_writer(Vec::new());
    for (k, s) in traj.snapshots.iter().enumerate() {
        let t = s.time();
        let h = s.rescaled();
        let sample = samples.iter().find(|x| x.time == t);
        w.serialize(DiagnosticsRow {
            time: t,
            n_vertices: s.len(),
            max_abs_a: s.max_second_fundamental(),
            min_rescaled_h: h.iter().cloned().fold(f64::INFINITY, f64::min),
            max_rescaled_h: h.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            gaussian_area: s.gaussian_area(),
            delta_in: sample.map(|x| x.delta.delta_in),
            delta_out: sample.map(|x| x.delta.delta_out.unwrap_or(f64::INFINITY)),
            pinching_ratio: sample.map(|x| x.pinching.ratio),
            isoperimetric_ratio: iso.get(k).map(|p| p[1]),
        })
        .map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}
