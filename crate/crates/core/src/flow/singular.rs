use serde::{Deserialize, Serialize};

use super::{FlowStatus, FlowTrajectory};
use crate::error::{Error, Result};

/// Result of fitting `log sup|A| = −α log(T − t) + β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularFit {
    pub t_est: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Root-mean-square residual of the fit in `log sup|A|`.
    pub residual: f64,
    /// Number of snapshots used.
    pub points: usize,
}

/// Index of the first snapshot of the final decade: the trailing run with
/// `sup|A| ≥ sup|A|_last / 10`.
pub fn final_decade_start(sup_a: &[f64]) -> usize {
    let Some(&last) = sup_a.last() else {
        return 0;
    };
    let floor = last / 10.0;
    let mut start = sup_a.len() - 1;
    while start > 0 && sup_a[start - 1] >= floor {
        start -= 1;
    }
    start
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - icpt).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

pub fn estimate_singular_time(traj: &FlowTrajectory) -> Result<SingularFit> {
    if traj.status() != FlowStatus::SingularityDetected {
        return Err(Error::InsufficientData(format!(
            "trajectory stopped with {:?}, not at a singularity",
            traj.status()
        )));
    }
    let sup = traj.sup_a();
    let times = traj.times();
    let start = final_decade_start(&sup);
    let points = sup.len() - start;
    if points < 10 {
        return Err(Error::InsufficientData(format!(
            "only {points} snapshots in the final decade of sup|A|, need 10"
        )));
    }
    let t = &times[start..];
    let y: Vec<f64> = sup[start..].iter().map(|v| v.ln()).collect();
    let t_last = *t.last().unwrap();
    let span = t_last - t[0];
    if !(span > 0.0) {
        return Err(Error::InsufficientData("final decade spans no time".into()));
    }
    let fit_at = |log_gap: f64| {
        let tt = t_last + log_gap.exp();
        let x: Vec<f64> = t.iter().map(|ti| -(tt - ti).ln()).collect();
        linear_fit(&x, &y)
    };
    // T − t_last ranges over [1e-8, 10]·span on a log scale.
    let (lo, hi) = ((1e-8 * span).ln(), (10.0 * span).ln());
    let grid = 400;
    let h = (hi - lo) / grid as f64;
    let best = (0..=grid)
        .map(|k| lo + k as f64 * h)
        .min_by(|a, b| fit_at(*a).2.total_cmp(&fit_at(*b).2))
        .unwrap();
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (fit_at(c).2, fit_at(d).2);
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = fit_at(c).2;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = fit_at(d).2;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let log_gap = 0.5 * (a + b);
    let (alpha, beta, residual) = fit_at(log_gap);
    Ok(SingularFit {
        t_est: t_last + log_gap.exp(),
        alpha,
        beta,
        residual,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{FlowConfig, ResolvedLimits, SingularTrigger, Snapshot};
    use crate::surface::regular_polygon;

    fn synthetic(times: &[f64], status: FlowStatus) -> FlowTrajectory {
        // Self-similar circles with exact curvature 1/R(t), R = sqrt(1 − 2t).
        let snaps = times
            .iter()
            .map(|&t| Snapshot {
                time: t,
                surface: regular_polygon(64, (1.0 - 2.0 * t).sqrt()).unwrap(),
            })
            .collect();
        let limits = ResolvedLimits {
            dt_max: 1.0,
            dt_min: 1e-9,
            a_max: 1e3,
            initial_max_a: 1.0,
        };
        FlowTrajectory::from_parts(
            snaps,
            FlowConfig::default(),
            limits,
            status,
            Some(SingularTrigger::CurvatureThreshold),
            String::new(),
            Vec::new(),
        )
        .unwrap()
    }

    #[test]
    fn decade_start() {
        assert_eq!(final_decade_start(&[1.0, 5.0, 9.0, 50.0, 100.0]), 3);
        assert_eq!(final_decade_start(&[20.0, 30.0]), 0);
    }

    #[test]
    fn recovers_exact_blowup() {
        let mut times = vec![0.0];
        let mut t = 0.0f64;
        while 1.0 - 2.0 * t > 1e-6 {
            let r2 = 1.0 - 2.0 * t;
            t += 0.05 * r2;
            times.push(t);
        }
        let fit = estimate_singular_time(&synthetic(&times, FlowStatus::SingularityDetected)).unwrap();
        assert!((fit.t_est - 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.alpha - 0.5).abs() < 1e-4);
        assert!(fit.residual < 1e-6);
    }

    #[test]
    fn no_blowup_is_insufficient() {
        let traj = synthetic(&[0.0, 0.1, 0.2], FlowStatus::ReachedTEnd);
        assert!(matches!(estimate_singular_time(&traj), Err(Error::InsufficientData(_))));
        let traj = synthetic(&[0.0, 0.1, 0.2], FlowStatus::SingularityDetected);
        assert!(matches!(estimate_singular_time(&traj), Err(Error::InsufficientData(_))));
    }
}
