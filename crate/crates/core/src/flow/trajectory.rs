use serde::{Deserialize, Serialize};

use super::{curvature_moments, FlowConfig, RemeshOutcome};
use crate::error::{Error, Result};
use crate::surface::{DiscreteHypersurface, Dimension};

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub time: f64,
    pub surface: DiscreteHypersurface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Running,
    ReachedTEnd,
    SingularityDetected,
    /// A step failed (solver, degeneracy, remesh) or the step budget ran out.
    StepUnderflow,
}

/// Which criterion declared the singularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularTrigger {
    CurvatureThreshold,
    StepUnderflow,
}

/// Step limits after surface-dependent defaults are filled in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedLimits {
    pub dt_max: f64,
    pub dt_min: f64,
    pub a_max: f64,
    pub initial_max_a: f64,
}

/// Scalar summary of one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub time: f64,
    /// Time to the next snapshot; zero for the last one.
    pub dt: f64,
    pub sup_a: f64,
    pub measure: f64,
    pub vertex_count: usize,
    /// `[p, ∫|A|^p dμ]` pairs.
    pub moments: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemeshEvent {
    /// Index of the snapshot the remeshed surface became.
    pub snapshot: usize,
    pub time: f64,
    pub splits: usize,
    pub collapses: usize,
    pub moments_before: Vec<[f64; 2]>,
    pub moments_after: Vec<[f64; 2]>,
    /// Largest relative change of any recorded `∫|A|^p dμ`.
    pub max_relative_change: f64,
}

/// The family `M_t` sampled at the step times, from `t = 0` to the stop.
#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    config: FlowConfig,
    limits: ResolvedLimits,
    snapshots: Vec<Snapshot>,
    status: FlowStatus,
    trigger: Option<SingularTrigger>,
    stop_reason: String,
    remesh_events: Vec<RemeshEvent>,
}

impl FlowTrajectory {
    pub(crate) fn start(initial: DiscreteHypersurface, config: FlowConfig, limits: ResolvedLimits) -> Self {
        FlowTrajectory {
            config,
            limits,
            snapshots: vec![Snapshot {
                time: 0.0,
                surface: initial,
            }],
            status: FlowStatus::Running,
            trigger: None,
            stop_reason: String::new(),
            remesh_events: Vec::new(),
        }
    }

    /// Reassembles a trajectory from stored parts (loading, rescaling).
    pub fn from_parts(
        snapshots: Vec<Snapshot>,
        config: FlowConfig,
        limits: ResolvedLimits,
        status: FlowStatus,
        trigger: Option<SingularTrigger>,
        stop_reason: String,
        remesh_events: Vec<RemeshEvent>,
    ) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidInput("trajectory has no snapshots".into()))?;
        if first.time != 0.0 {
            return Err(Error::InvalidInput(format!(
                "trajectory must start at t = 0, starts at {}",
                first.time
            )));
        }
        if snapshots.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::InvalidInput("snapshot times must strictly increase".into()));
        }
        let dim = first.surface.dimension();
        if snapshots.iter().any(|s| s.surface.dimension() != dim) {
            return Err(Error::InvalidInput("snapshots mix curves and meshes".into()));
        }
        Ok(FlowTrajectory {
            config,
            limits,
            snapshots,
            status,
            trigger,
            stop_reason,
            remesh_events,
        })
    }

    pub(crate) fn push(&mut self, time: f64, surface: DiscreteHypersurface) {
        debug_assert!(time > self.snapshots.last().unwrap().time);
        self.snapshots.push(Snapshot { time, surface });
    }

    pub(crate) fn finish(&mut self, status: FlowStatus, trigger: Option<SingularTrigger>, reason: String) {
        self.status = status;
        self.trigger = trigger;
        self.stop_reason = reason;
    }

    pub(crate) fn record_remesh(
        &mut self,
        before: &DiscreteHypersurface,
        outcome: &RemeshOutcome,
        time: f64,
        p_list: &[f64],
    ) {
        let mb = curvature_moments(before, p_list);
        let ma = curvature_moments(&outcome.surface, p_list);
        let change = mb
            .iter()
            .zip(&ma)
            .map(|((_, b), (_, a))| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        self.remesh_events.push(RemeshEvent {
            snapshot: self.snapshots.len(),
            time,
            splits: outcome.splits,
            collapses: outcome.collapses,
            moments_before: mb.into_iter().map(|(p, v)| [p, v]).collect(),
            moments_after: ma.into_iter().map(|(p, v)| [p, v]).collect(),
            max_relative_change: change,
        });
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn first(&self) -> &DiscreteHypersurface {
        &self.snapshots[0].surface
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory is never empty")
    }

    pub fn dimension(&self) -> Dimension {
        self.first().dimension()
    }

    pub fn n(&self) -> usize {
        self.dimension().n()
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn limits(&self) -> &ResolvedLimits {
        &self.limits
    }

    pub fn status(&self) -> FlowStatus {
        self.status
    }

    pub fn trigger(&self) -> Option<SingularTrigger> {
        self.trigger
    }

    pub fn stop_reason(&self) -> &str {
        &self.stop_reason
    }

    pub fn remesh_events(&self) -> &[RemeshEvent] {
        &self.remesh_events
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Left-endpoint quadrature weights: `t_{k+1} − t_k`, zero at the end.
    pub fn dts(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.snapshots.windows(2).map(|w| w[1].time - w[0].time).collect();
        d.push(0.0);
        d
    }

    pub fn duration(&self) -> f64 {
        self.last().time
    }

    pub fn sup_a(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.surface.max_abs_a()).collect()
    }

    /// Per-snapshot scalar records for the given exponents.
    pub fn records(&self, p_list: &[f64]) -> Vec<StepRecord> {
        let dts = self.dts();
        self.snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| StepRecord {
                index: i,
                time: s.time,
                dt: dts[i],
                sup_a: s.surface.max_abs_a(),
                measure: s.surface.measure(),
                vertex_count: s.surface.vertex_count(),
                moments: curvature_moments(&s.surface, p_list)
                    .into_iter()
                    .map(|(p, v)| [p, v])
                    .collect(),
            })
            .collect()
    }

    /// Prefix up to and including the last snapshot with `time <= t`.
    pub fn truncated(&self, t: f64) -> FlowTrajectory {
        let keep = self.snapshots.iter().take_while(|s| s.time <= t).count().max(1);
        let mut out = self.clone();
        out.snapshots.truncate(keep);
        out.remesh_events.retain(|e| e.snapshot < keep);
        if keep < self.snapshots.len() {
            out.status = FlowStatus::ReachedTEnd;
            out.trigger = None;
            out.stop_reason = format!("truncated at t = {}", out.duration());
        }
        out
    }
}
