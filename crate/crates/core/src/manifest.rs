//! On-disk trajectory directories:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/series.csv
//! <dir>/snapshots/t_<index>.obj | t_<index>.curve.json
//! ```
//!
//! A directory is owned by one writer at a time through `<dir>/.lock`.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{
    estimate_singular_time, FlowConfig, FlowStatus, FlowTrajectory, RemeshEvent, ResolvedLimits, SingularFit,
    SingularTrigger, Snapshot, StepRecord,
};
use crate::gronwall::DEFAULT_TAU1;
use crate::monitors::{monitor, FunctionalSpec, LogShift, MonitorSummary, DEFAULT_DIVERGENCE_SLOPE};
use crate::rescale::RescaleMode;
use crate::surface::{read_surface, write_surface, Dimension};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";
const LOCK_FILE: &str = ".lock";

/// Parameters of the analysis stages, echoed for reproducibility.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub c_n: f64,
    pub c0: f64,
    /// Gronwall constant; `None` derives it from the trajectory.
    pub c: Option<f64>,
    pub tau1: f64,
    pub q_sob: f64,
    pub divergence_slope: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            c_n: 1.0,
            c0: 1.0,
            c: None,
            tau1: DEFAULT_TAU1,
            q_sob: crate::analysis::DEFAULT_Q_SOB_N2,
            divergence_slope: DEFAULT_DIVERGENCE_SLOPE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputRecord {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(InputRecord {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub time: f64,
    /// Relative to the run directory.
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleProvenance {
    pub source: PathBuf,
    pub factor: f64,
    pub mode: RescaleMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: FlowConfig,
    pub functionals: Vec<FunctionalSpec>,
    pub analysis: AnalysisParams,
    pub inputs: Vec<InputRecord>,
    pub n: usize,
    pub status: FlowStatus,
    pub trigger: Option<SingularTrigger>,
    pub stop_reason: String,
    pub limits: ResolvedLimits,
    pub estimated_t: Option<f64>,
    pub singular_fit: Option<SingularFit>,
    pub records: Vec<StepRecord>,
    pub cumulative: Vec<MonitorSummary>,
    pub remesh_events: Vec<RemeshEvent>,
    pub snapshots: Vec<SnapshotEntry>,
    pub rescale: Option<RescaleProvenance>,
}

/// Monitors recorded by default: supercritical, subcritical-log and the
/// critical `(n+2, n+2)` mixed norm.
pub fn default_functionals(n: usize) -> Vec<FunctionalSpec> {
    let c = n as f64 + 2.0;
    vec![
        FunctionalSpec::Supercritical,
        FunctionalSpec::SubcriticalLog { shift: LogShift::Two },
        FunctionalSpec::MixedNorm { p: c, q: c },
    ]
}

fn snapshot_file(index: usize, dim: Dimension) -> String {
    match dim {
        Dimension::Curve => format!("{SNAPSHOT_DIR}/t_{index:06}.curve.json"),
        Dimension::Surface => format!("{SNAPSHOT_DIR}/t_{index:06}.obj"),
    }
}

/// Indices written to disk: every `stride`-th plus the last.
fn stored_indices(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride.max(1)).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

impl RunManifest {
    /// Summarizes `traj`; every `stride`-th snapshot (and the last) is listed
    /// for storage.
    pub fn build(
        traj: &FlowTrajectory,
        functionals: &[FunctionalSpec],
        analysis: &AnalysisParams,
        inputs: Vec<InputRecord>,
        stride: usize,
    ) -> Result<Self> {
        let fit = estimate_singular_time(traj).ok();
        let cumulative = functionals
            .iter()
            .map(|f| monitor(traj, *f, analysis.divergence_slope).map(|r| r.summary()))
            .collect::<Result<_>>()?;
        let dim = traj.dimension();
        let times = traj.times();
        let snapshots = stored_indices(traj.len(), stride)
            .into_iter()
            .map(|i| SnapshotEntry {
                index: i,
                time: times[i],
                file: snapshot_file(i, dim),
            })
            .collect();
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: traj.config().clone(),
            functionals: functionals.to_vec(),
            analysis: analysis.clone(),
            inputs,
            n: traj.n(),
            status: traj.status(),
            trigger: traj.trigger(),
            stop_reason: traj.stop_reason().to_string(),
            limits: *traj.limits(),
            estimated_t: fit.map(|f| f.t_est),
            singular_fit: fit,
            records: traj.records(&traj.config().p_list),
            cumulative,
            remesh_events: traj.remesh_events().to_vec(),
            snapshots,
            rescale: None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Exclusive ownership of an output directory; released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::InvalidInput(format!(
                "{} is locked by another invocation (remove {} if stale)",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::parse(path, e.to_string())
}

/// Per-step table: index, t, dt, sup|A|, measure, vertices, then one
/// `int_abs_a_p<p>` column per recorded exponent.
pub fn write_series_csv(path: &Path, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<String> = ["index", "t", "dt", "sup_a", "measure", "vertices"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(r) = records.first() {
        header.extend(r.moments.iter().map(|[p, _]| format!("int_abs_a_p{p}")));
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for r in records {
        let mut row = vec![
            r.index.to_string(),
            r.time.to_string(),
            r.dt.to_string(),
            r.sup_a.to_string(),
            r.measure.to_string(),
            r.vertex_count.to_string(),
        ];
        row.extend(r.moments.iter().map(|[_, v]| v.to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the manifest, the series table and the stored snapshots.
pub fn write_run(dir: &Path, traj: &FlowTrajectory, manifest: &RunManifest) -> Result<()> {
    let _lock = DirLock::acquire(dir)?;
    let snap_dir = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    let snaps = traj.snapshots();
    for entry in &manifest.snapshots {
        let s = snaps.get(entry.index).ok_or_else(|| {
            Error::ShapeMismatch(format!("manifest lists snapshot {} beyond the trajectory", entry.index))
        })?;
        write_surface(dir.join(&entry.file), &s.surface)?;
    }
    write_series_csv(&dir.join(SERIES_FILE), &manifest.records)?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()?).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.to_string()))
}

/// Loads the stored snapshots back into a trajectory. With a snapshot
/// stride above one the time sampling is coarser than the original run.
pub fn read_run(dir: &Path) -> Result<(RunManifest, FlowTrajectory)> {
    let manifest = read_manifest(dir)?;
    let snapshots = manifest
        .snapshots
        .iter()
        .map(|e| {
            Ok(Snapshot {
                time: e.time,
                surface: read_surface(dir.join(&e.file))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let traj = FlowTrajectory::from_parts(
        snapshots,
        manifest.config.clone(),
        manifest.limits,
        manifest.status,
        manifest.trigger,
        manifest.stop_reason.clone(),
        manifest.remesh_events.clone(),
    )?;
    Ok((manifest, traj))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_keeps_first_and_last() {
        assert_eq!(stored_indices(7, 3), vec![0, 3, 6]);
        assert_eq!(stored_indices(8, 3), vec![0, 3, 6, 7]);
        assert_eq!(stored_indices(1, 5), vec![0]);
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path()).unwrap();
        assert!(DirLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }
}
