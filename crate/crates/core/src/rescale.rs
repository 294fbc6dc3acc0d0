//! Parabolic rescaling `F̃(x, t) = Q·F(x, t/Q²)` of recorded trajectories.
//!
//! Rescaling acts on stored snapshots, never re-simulates, so every scaling
//! law is an algebraic identity up to floating-point roundoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowTrajectory, RemeshEvent, ResolvedLimits, Snapshot};
use crate::monitors::{criticality, monitor, Criticality, FunctionalSpec, LogShift, DEFAULT_DIVERGENCE_SLOPE};

/// Relative tolerance of the invariance identities.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RescaleMode {
    Explicit { factor: f64 },
    /// Scale so the supercritical integral becomes `c0`.
    Normalizing { c0: f64 },
    /// Scale so that time `t` becomes 1.
    UnitTime { t: f64 },
}

/// Factor `Q` for `mode` on `traj`.
pub fn resolve_factor(traj: &FlowTrajectory, mode: RescaleMode) -> Result<f64> {
    let q = match mode {
        RescaleMode::Explicit { factor } => factor,
        RescaleMode::Normalizing { c0 } => normalizing_factor(traj, c0)?,
        RescaleMode::UnitTime { t } => {
            if !(t > 0.0) {
                return Err(Error::InvalidInput(format!("unit time needs t > 0, got {t}")));
            }
            1.0 / t.sqrt()
        }
    };
    check_factor(q)?;
    Ok(q)
}

fn check_factor(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("rescaling factor must be positive, got {q}")));
    }
    Ok(())
}

fn scale_moments(m: &[[f64; 2]], n: f64, q: f64) -> Vec<[f64; 2]> {
    // ∫|Ã|^p dμ̃ = Q^{n−p} ∫|A|^p dμ.
    m.iter().map(|&[p, v]| [p, v * q.powf(n - p)]).collect()
}

pub fn rescale_trajectory(traj: &FlowTrajectory, q: f64) -> Result<FlowTrajectory> {
    check_factor(q)?;
    let n = traj.n() as f64;
    let snapshots = traj
        .snapshots()
        .iter()
        .map(|s| {
            Ok(Snapshot {
                time: s.time * q * q,
                surface: s.surface.map_positions(|p| p * q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let l = traj.limits();
    let limits = ResolvedLimits {
        dt_max: l.dt_max * q * q,
        dt_min: l.dt_min * q * q,
        a_max: l.a_max / q,
        initial_max_a: l.initial_max_a / q,
    };
    let mut config = traj.config().clone();
    config.dt_max = config.dt_max.map(|v| v * q * q);
    config.dt_min = config.dt_min.map(|v| v * q * q);
    config.a_max = config.a_max.map(|v| v / q);
    config.t_end = config.t_end.map(|v| v * q * q);
    let events = traj
        .remesh_events()
        .iter()
        .map(|e| RemeshEvent {
            time: e.time * q * q,
            moments_before: scale_moments(&e.moments_before, n, q),
            moments_after: scale_moments(&e.moments_after, n, q),
            ..e.clone()
        })
        .collect();
    FlowTrajectory::from_parts(
        snapshots,
        config,
        limits,
        traj.status(),
        traj.trigger(),
        traj.stop_reason().to_string(),
        events,
    )
}

fn supercritical_total(traj: &FlowTrajectory) -> Result<f64> {
    Ok(monitor(traj, FunctionalSpec::Supercritical, DEFAULT_DIVERGENCE_SLOPE)?.final_cumulative())
}

/// `Q = (1/c₀) ∫∫|A|^{n+3}`, defined when the integral is at least `c₀`.
pub fn normalizing_factor(traj: &FlowTrajectory, c0: f64) -> Result<f64> {
    if !(c0 > 0.0) {
        return Err(Error::InvalidInput(format!("c0 must be positive, got {c0}")));
    }
    let integral = supercritical_total(traj)?;
    if integral < c0 {
        return Err(Error::BelowThreshold { integral, c0 });
    }
    Ok(integral / c0)
}

/// Critical pairs checked by default: `(n+2, n+2)`, `(2n, 4)` and
/// `(n+1, 2(n+1))`.
pub fn default_critical_pairs(n: usize) -> Vec<(f64, f64)> {
    let n = n as f64;
    vec![(n + 2.0, n + 2.0), (2.0 * n, 4.0), (n + 1.0, 2.0 * (n + 1.0))]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRatio {
    pub p: f64,
    pub q: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub factor: f64,
    pub tolerance: f64,
    /// Largest `|Q·sup|Ã|(Q²t) / sup|A|(t) − 1|` over snapshots.
    pub sup_a_error: f64,
    /// Largest `|t̃ / (Q² t) − 1|`.
    pub time_error: f64,
    /// Rescaled over original supercritical integral (expected `1/Q`).
    pub supercritical_ratio: f64,
    pub critical_norms: Vec<NormRatio>,
    /// Not scale invariant; recorded only.
    pub subcritical_log_ratio: f64,
    pub pass: bool,
}

pub fn invariance_report(traj: &FlowTrajectory, q: f64) -> Result<InvarianceReport> {
    let pairs = default_critical_pairs(traj.n());
    invariance_report_with(traj, q, &pairs)
}

pub fn invariance_report_with(traj: &FlowTrajectory, q: f64, critical: &[(f64, f64)]) -> Result<InvarianceReport> {
    let n = traj.n();
    for &(p, r) in critical {
        if criticality(n, p, r)? != Criticality::Critical {
            return Err(Error::InvalidInput(format!("({p}, {r}) is not critical for n = {n}")));
        }
    }
    let scaled = rescale_trajectory(traj, q)?;
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { (a / b - 1.0).abs() };
    let sup_a_error = traj
        .sup_a()
        .iter()
        .zip(scaled.sup_a())
        .map(|(a, sa)| rel(sa * q, *a))
        .fold(0.0, f64::max);
    let time_error = traj
        .times()
        .iter()
        .zip(scaled.times())
        .map(|(t, st)| rel(st, t * q * q))
        .fold(0.0, f64::max);
    let ratio = |spec: FunctionalSpec| -> Result<f64> {
        let a = monitor(traj, spec, DEFAULT_DIVERGENCE_SLOPE)?.final_cumulative();
        let b = monitor(&scaled, spec, DEFAULT_DIVERGENCE_SLOPE)?.final_cumulative();
        Ok(if a == 0.0 && b == 0.0 { 1.0 } else { b / a })
    };
    let supercritical_ratio = ratio(FunctionalSpec::Supercritical)?;
    let critical_norms = critical
        .iter()
        .map(|&(p, r)| {
            Ok(NormRatio {
                p,
                q: r,
                ratio: ratio(FunctionalSpec::MixedNorm { p, q: r })?.powf(1.0 / r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let subcritical_log_ratio = ratio(FunctionalSpec::SubcriticalLog { shift: LogShift::Two })?;
    let empty = traj.len() == 1;
    let pass = sup_a_error <= INVARIANCE_TOLERANCE
        && time_error <= INVARIANCE_TOLERANCE
        && (empty || rel(supercritical_ratio, 1.0 / q) <= INVARIANCE_TOLERANCE)
        && critical_norms.iter().all(|c| rel(c.ratio, 1.0) <= INVARIANCE_TOLERANCE);
    Ok(InvarianceReport {
        factor: q,
        tolerance: INVARIANCE_TOLERANCE,
        sup_a_error,
        time_error,
        supercritical_ratio,
        critical_norms,
        subcritical_log_ratio,
        pass,
    })
}

/// Smallness hypothesis and conclusion on a unit-time trajectory: if
/// `∫₀¹∫|A|^{n+3} ≤ c₀` then `sup_{1/2 ≤ t ≤ 1} sup|A| ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessCheck {
    pub integral: f64,
    pub late_sup_a: f64,
    pub conclusion_holds: bool,
}

pub fn smallness_check(traj: &FlowTrajectory) -> Result<SmallnessCheck> {
    if traj.duration() < 1.0 - 1e-12 {
        return Err(Error::TrajectoryRange(format!(
            "needs data on [0, 1], trajectory ends at {}",
            traj.duration()
        )));
    }
    let unit = traj.truncated(1.0 + 1e-12);
    let integral = monitor(&unit, FunctionalSpec::Supercritical, DEFAULT_DIVERGENCE_SLOPE)?.cumulative_at(unit.duration().min(1.0))?;
    let late_sup_a = unit
        .snapshots()
        .iter()
        .filter(|s| s.time >= 0.5)
        .map(|s| s.surface.max_abs_a())
        .fold(0.0, f64::max);
    Ok(SmallnessCheck {
        integral,
        late_sup_a,
        conclusion_holds: late_sup_a <= 1.0,
    })
}

/// Largest `c₀` consistent with a fleet of checks: every trajectory with
/// integral at most `c₀` satisfies the conclusion. `None` means no
/// counterexample was seen.
pub fn empirical_c0(checks: &[SmallnessCheck]) -> Option<f64> {
    checks
        .iter()
        .filter(|c| !c.conclusion_holds)
        .map(|c| c.integral)
        .min_by(f64::total_cmp)
        .map(|bad| {
            // Strictly below the smallest failing integral.
            checks
                .iter()
                .map(|c| c.integral)
                .filter(|&v| v < bad)
                .fold(0.0, f64::max)
        })
}
