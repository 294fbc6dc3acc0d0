//! Time integration of `∂F/∂t = −Hν` up to the first singular time.

mod remesh;
mod singular;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::conjugate_gradient;
use crate::surface::{DiscreteHypersurface, Point, ScalarField};

pub use remesh::{curvature_scale, remesh, RemeshOutcome, RemeshPolicy};
pub use singular::{estimate_singular_time, final_decade_start, SingularFit};
pub use trajectory::{
    FlowStatus, FlowTrajectory, RemeshEvent, ResolvedLimits, SingularTrigger, Snapshot, StepRecord,
};

/// Relative residual every linear solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Backward Euler at frozen metric: `(W + dt·C) X_new = W X_old`.
    #[default]
    SemiImplicit,
    /// Forward Euler: `X_new = X_old − dt·Hν`. Stable only for `dt ≲ h²`.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub scheme: Scheme,
    /// Step size is `min(dt_max, c_stab / max|A|²)`.
    pub c_stab: f64,
    /// Defaults to `5e-4 / max|A|²` of the initial surface.
    pub dt_max: Option<f64>,
    /// Defaults to `1e-6 · dt_max`.
    pub dt_min: Option<f64>,
    /// Curvature threshold declaring a singularity; defaults to
    /// `a_max_factor · max|A|` of the initial surface.
    pub a_max: Option<f64>,
    pub a_max_factor: f64,
    /// Stop time; `None` runs until a singularity is detected.
    pub t_end: Option<f64>,
    pub remesh: RemeshPolicy,
    /// Every `snapshot_stride`-th snapshot is written to disk.
    pub snapshot_stride: usize,
    /// Exponents `p` recorded as `∫|A|^p dμ` in the per-step table.
    pub p_list: Vec<f64>,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            scheme: Scheme::SemiImplicit,
            c_stab: 0.1,
            dt_max: None,
            dt_min: None,
            a_max: None,
            a_max_factor: 1e3,
            t_end: None,
            remesh: RemeshPolicy::default(),
            snapshot_stride: 1,
            p_list: vec![2.0, 3.0, 4.0, 5.0],
            max_steps: 1_000_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
            }
        };
        positive("c_stab", self.c_stab)?;
        positive("a_max_factor", self.a_max_factor)?;
        if let Some(v) = self.dt_max {
            positive("dt_max", v)?;
        }
        if let Some(v) = self.dt_min {
            positive("dt_min", v)?;
        }
        if let (Some(lo), Some(hi)) = (self.dt_min, self.dt_max) {
            if lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "dt_min ({lo}) must be smaller than dt_max ({hi})"
                )));
            }
        }
        if let Some(v) = self.a_max {
            positive("a_max", v)?;
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0) {
                return Err(Error::InvalidInput(format!("t_end must be >= 0, got {t}")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidInput("snapshot_stride must be >= 1".into()));
        }
        if self.p_list.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidInput("p_list entries must be positive".into()));
        }
        self.remesh.validate()
    }

    /// Fills in the surface-dependent defaults.
    pub fn resolve(&self, initial: &DiscreteHypersurface) -> Result<ResolvedLimits> {
        self.validate()?;
        let a0 = initial.max_abs_a();
        if !(a0 > 0.0) {
            return Err(Error::Degenerate("initial surface has |A| = 0 everywhere".into()));
        }
        let dt_max = self.dt_max.unwrap_or(5e-4 / (a0 * a0));
        let dt_min = self.dt_min.unwrap_or(1e-6 * dt_max);
        if dt_min >= dt_max {
            return Err(Error::InvalidInput(format!(
                "dt_min ({dt_min}) must be smaller than dt_max ({dt_max})"
            )));
        }
        Ok(ResolvedLimits {
            dt_max,
            dt_min,
            a_max: self.a_max.unwrap_or(self.a_max_factor * a0),
            initial_max_a: a0,
        })
    }
}

/// One time step of size `dt`.
pub fn step(surface: &DiscreteHypersurface, dt: f64, scheme: Scheme) -> Result<DiscreteHypersurface> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let positions = match scheme {
        Scheme::Explicit => surface
            .positions()
            .iter()
            .zip(surface.curvature_vectors())
            .map(|(x, hnu)| x - dt * hnu)
            .collect(),
        Scheme::SemiImplicit => semi_implicit_positions(surface, dt)?,
    };
    surface.with_positions(positions)
}

fn semi_implicit_positions(surface: &DiscreteHypersurface, dt: f64) -> Result<Vec<Point>> {
    let w = surface.weights();
    let system = surface.stiffness_matrix().scaled_plus_diagonal(dt, w);
    let nv = surface.vertex_count();
    let mut out = surface.positions().to_vec();
    let axes = if surface.n() == 1 { 2 } else { 3 };
    for axis in 0..axes {
        let old: Vec<f64> = surface.positions().iter().map(|p| p[axis]).collect();
        let rhs: Vec<f64> = old.iter().zip(w).map(|(x, w)| x * w).collect();
        let mut x = old.clone();
        conjugate_gradient(&system, &rhs, &mut x, 1e-2 * SOLVE_TOLERANCE, 20 * nv + 100)?;
        for (p, v) in out.iter_mut().zip(x) {
            p[axis] = v;
        }
    }
    Ok(out)
}

/// `∫|A|^p dμ` for each `p`.
pub(crate) fn curvature_moments(surface: &DiscreteHypersurface, p_list: &[f64]) -> Vec<(f64, f64)> {
    let a = ScalarField::new(surface.abs_a()).expect("finite curvature");
    p_list
        .iter()
        .map(|&p| (p, surface.integrate(&a, p).expect("field matches surface")))
        .collect()
}

/// Evolves `initial` until a stop criterion fires.
pub fn run(initial: &DiscreteHypersurface, config: &FlowConfig) -> Result<FlowTrajectory> {
    let limits = config.resolve(initial)?;
    let mut traj = FlowTrajectory::start(initial.clone(), config.clone(), limits);
    let mut current = initial.clone();
    let mut t = 0.0f64;
    let remesh_target = config.remesh.target_fraction(initial);
    for _ in 0..config.max_steps {
        if let Some(t_end) = config.t_end {
            if t >= t_end * (1.0 - 1e-12) {
                traj.finish(FlowStatus::ReachedTEnd, None, format!("reached t_end = {t_end}"));
                return Ok(traj);
            }
        }
        let max_a = current.max_abs_a();
        if max_a > limits.a_max {
            traj.finish(
                FlowStatus::SingularityDetected,
                Some(SingularTrigger::CurvatureThreshold),
                format!("max|A| = {max_a:e} exceeded {:e}", limits.a_max),
            );
            return Ok(traj);
        }
        let natural = (config.c_stab / (max_a * max_a)).min(limits.dt_max);
        if natural < limits.dt_min {
            traj.finish(
                FlowStatus::SingularityDetected,
                Some(SingularTrigger::StepUnderflow),
                format!("dt = {natural:e} fell below dt_min = {:e}", limits.dt_min),
            );
            return Ok(traj);
        }
        let dt = match config.t_end {
            Some(t_end) => natural.min(t_end - t),
            None => natural,
        };
        let next = match step(&current, dt, config.scheme) {
            Ok(s) => s,
            Err(e) => {
                traj.finish(FlowStatus::StepUnderflow, None, format!("step failed at t = {t}: {e}"));
                return Ok(traj);
            }
        };
        t += dt;
        current = next;
        if let Some(target) = remesh_target {
            let len = target / curvature_scale(&current);
            match remesh(&current, len, &config.remesh) {
                Ok(Some(outcome)) => {
                    traj.record_remesh(&current, &outcome, t, &config.p_list);
                    current = outcome.surface;
                }
                Ok(None) => {}
                Err(e) => {
                    traj.finish(FlowStatus::StepUnderflow, None, format!("remesh failed at t = {t}: {e}"));
                    return Ok(traj);
                }
            }
        }
        traj.push(t, current.clone());
    }
    traj.finish(
        FlowStatus::StepUnderflow,
        None,
        format!("max_steps = {} exhausted", config.max_steps),
    );
    Ok(traj)
}
