//! Blow-up functionals of `|A|` along a trajectory.
//!
//! Every monitor produces an instantaneous series on the snapshot grid and
//! its cumulative time integral by left-endpoint quadrature. Mixed norms
//! accumulate `‖A(t)‖_p^q`, so the norm itself is `cumulative^{1/q}`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{estimate_singular_time, final_decade_start, FlowTrajectory};
use crate::surface::{DiscreteHypersurface, ScalarField};

/// Slope above which a cumulative monitor is diagnosed as divergent.
pub const DEFAULT_DIVERGENCE_SLOPE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

/// `n/p + 2/q` against 1.
pub fn criticality(n: usize, p: f64, q: f64) -> Result<Criticality> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::InvalidInput(format!("exponents must be positive, got p={p} q={q}")));
    }
    let s = n as f64 / p + 2.0 / q;
    Ok(if (s - 1.0).abs() <= 1e-12 {
        Criticality::Critical
    } else if s < 1.0 {
        Criticality::Supercritical
    } else {
        Criticality::Subcritical
    })
}

/// Shift inside the logarithm of the subcritical-log integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogShift {
    /// `log(2 + |A|)`, never below `log 2`.
    #[default]
    Two,
    /// `log(1 + |A|)`; vanishes where `A = 0`.
    One,
}

impl LogShift {
    pub fn value(self) -> f64 {
        match self {
            LogShift::Two => 2.0,
            LogShift::One => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionalSpec {
    MixedNorm { p: f64, q: f64 },
    SubcriticalLog {
        #[serde(default)]
        shift: LogShift,
    },
    /// `∫|A|^{n+3} dμ`.
    Supercritical,
    /// `sup|A|`; its "cumulative" is the running maximum.
    SupA,
}

impl FunctionalSpec {
    pub fn validate(&self) -> Result<()> {
        if let FunctionalSpec::MixedNorm { p, q } = *self {
            if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
                return Err(Error::InvalidInput(format!("mixed norm needs finite p, q > 0, got ({p}, {q})")));
            }
        }
        Ok(())
    }

    /// Instantaneous value on one surface.
    pub fn instantaneous(&self, s: &DiscreteHypersurface) -> f64 {
        let a = s.abs_a();
        let n = s.n() as f64;
        match *self {
            FunctionalSpec::MixedNorm { p, q } => integrate(s, a.iter().map(|x| x.powf(p))).powf(q / p),
            FunctionalSpec::SubcriticalLog { shift } => integrate(
                s,
                a.iter().map(|x| x.powf(n + 2.0) / (shift.value() + x).ln()),
            ),
            FunctionalSpec::Supercritical => integrate(s, a.iter().map(|x| x.powf(n + 3.0))),
            FunctionalSpec::SupA => s.max_abs_a(),
        }
    }
}

fn integrate(s: &DiscreteHypersurface, values: impl Iterator<Item = f64>) -> f64 {
    let f = ScalarField::new(values.collect()).expect("finite curvature");
    s.integrate(&f, 1.0).expect("field matches surface")
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionalSpec::MixedNorm { p, q } => write!(f, "mixed:{p},{q}"),
            FunctionalSpec::SubcriticalLog { shift: LogShift::Two } => write!(f, "subcritical-log"),
            FunctionalSpec::SubcriticalLog { shift: LogShift::One } => write!(f, "subcritical-log1"),
            FunctionalSpec::Supercritical => write!(f, "supercritical"),
            FunctionalSpec::SupA => write!(f, "sup-a"),
        }
    }
}

impl FromStr for FunctionalSpec {
    type Err = Error;

    /// `mixed:P,Q`, `subcritical-log`, `subcritical-log1`, `supercritical`
    /// or `sup-a`.
    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim() {
            "subcritical-log" => FunctionalSpec::SubcriticalLog { shift: LogShift::Two },
            "subcritical-log1" => FunctionalSpec::SubcriticalLog { shift: LogShift::One },
            "supercritical" => FunctionalSpec::Supercritical,
            "sup-a" => FunctionalSpec::SupA,
            other => {
                let body = other
                    .strip_prefix("mixed:")
                    .ok_or_else(|| Error::InvalidInput(format!("unknown functional '{other}'")))?;
                let (p, q) = body
                    .split_once(',')
                    .ok_or_else(|| Error::InvalidInput(format!("expected mixed:P,Q, got '{other}'")))?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad exponent '{v}'")))
                };
                FunctionalSpec::MixedNorm {
                    p: parse(p)?,
                    q: parse(q)?,
                }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Growth-rate fit of a cumulative series over the final decade of
/// `sup|A|`: slope of `ln C(t)` against `ln ln(T/(T − t))`.
///
/// A bounded series flattens out (slope → 0), `ln(T/(T−t))` growth gives
/// slope 1, `ln ln` growth gives slope ≈ 1/2 and power-law growth gives
/// large slopes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceFit {
    pub t_est: f64,
    pub slope: f64,
    pub threshold: f64,
    pub points: usize,
    pub divergent: bool,
}

pub fn divergence_fit(
    times: &[f64],
    cumulative: &[f64],
    sup_a: &[f64],
    t_est: f64,
    threshold: f64,
) -> Option<DivergenceFit> {
    let start = final_decade_start(sup_a);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (start..times.len())
        .filter(|&i| times[i] > 0.0 && times[i] < t_est && cumulative[i] > 0.0)
        .map(|i| ((t_est / (t_est - times[i])).ln().ln(), cumulative[i].ln()))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(DivergenceFit {
        t_est,
        slope,
        threshold,
        points: xs.len(),
        divergent: slope > threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub functional: FunctionalSpec,
    pub n: usize,
    pub times: Vec<f64>,
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// `None` when the trajectory did not end at a fitted singularity.
    pub divergence: Option<DivergenceFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSummary {
    pub functional: String,
    pub n: usize,
    pub samples: usize,
    pub final_time: f64,
    pub final_instantaneous: f64,
    pub final_cumulative: f64,
    pub divergence: Option<DivergenceFit>,
}

impl MonitorReport {
    pub fn final_cumulative(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Cumulative value at time `t`, continuing the left-endpoint rule
    /// inside the step that contains `t`.
    pub fn cumulative_at(&self, t: f64) -> Result<f64> {
        let last = *self.times.last().ok_or(Error::MissingMonitors)?;
        if t < 0.0 || t > last {
            return Err(Error::TrajectoryRange(format!("t = {t} outside [0, {last}]")));
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        Ok(match self.functional {
            FunctionalSpec::SupA => self.cumulative[k],
            _ => self.cumulative[k] + self.instantaneous[k] * (t - self.times[k]),
        })
    }

    /// Value of the mixed norm itself, `cumulative^{1/q}`.
    pub fn norm_at(&self, t: f64) -> Result<f64> {
        match self.functional {
            FunctionalSpec::MixedNorm { q, .. } => Ok(self.cumulative_at(t)?.powf(1.0 / q)),
            other => Err(Error::InvalidInput(format!("{other} is not a mixed norm"))),
        }
    }

    pub fn summary(&self) -> MonitorSummary {
        MonitorSummary {
            functional: self.functional.to_string(),
            n: self.n,
            samples: self.times.len(),
            final_time: *self.times.last().unwrap_or(&0.0),
            final_instantaneous: *self.instantaneous.last().unwrap_or(&0.0),
            final_cumulative: self.final_cumulative(),
            divergence: self.divergence,
        }
    }

    /// Columns `t, instantaneous, cumulative`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
        w.write_record(["t", "instantaneous", "cumulative"])
            .map_err(|e| Error::parse(path, e.to_string()))?;
        for i in 0..self.times.len() {
            w.write_record([
                self.times[i].to_string(),
                self.instantaneous[i].to_string(),
                self.cumulative[i].to_string(),
            ])
            .map_err(|e| Error::parse(path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Evaluates one functional along `traj`.
pub fn monitor(traj: &FlowTrajectory, spec: FunctionalSpec, threshold: f64) -> Result<MonitorReport> {
    spec.validate()?;
    let times = traj.times();
    let dts = traj.dts();
    let instantaneous: Vec<f64> = traj.snapshots().iter().map(|s| spec.instantaneous(&s.surface)).collect();
    let mut cumulative = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for (i, v) in instantaneous.iter().enumerate() {
        if spec == FunctionalSpec::SupA {
            acc = f64::max(acc, *v);
            cumulative.push(acc);
        } else {
            cumulative.push(acc);
            acc += v * dts[i];
        }
    }
    let divergence = estimate_singular_time(traj)
        .ok()
        .and_then(|fit| divergence_fit(&times, &cumulative, &traj.sup_a(), fit.t_est, threshold));
    Ok(MonitorReport {
        functional: spec,
        n: traj.n(),
        times,
        instantaneous,
        cumulative,
        divergence,
    })
}

/// `‖A‖_{L^{p,q}(M × [0, t_end))}` over the whole trajectory.
pub fn mixed_norm(traj: &FlowTrajectory, p: f64, q: f64) -> Result<f64> {
    let r = monitor(traj, FunctionalSpec::MixedNorm { p, q }, DEFAULT_DIVERGENCE_SLOPE)?;
    Ok(r.final_cumulative().powf(1.0 / q))
}

/// Cumulative `∫∫ |A|^{n+2} / log(2 + |A|)`.
pub fn subcritical_log(traj: &FlowTrajectory) -> Result<MonitorReport> {
    monitor(
        traj,
        FunctionalSpec::SubcriticalLog { shift: LogShift::Two },
        DEFAULT_DIVERGENCE_SLOPE,
    )
}

/// Cumulative `∫∫ |A|^{n+3}`.
pub fn supercritical(traj: &FlowTrajectory) -> Result<MonitorReport> {
    monitor(traj, FunctionalSpec::Supercritical, DEFAULT_DIVERGENCE_SLOPE)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyboundReport {
    pub lambda: f64,
    pub c_lambda: f64,
    pub times: Vec<f64>,
    /// `sup|A|(t) / (1 + ∫₀ᵗ∫|A|^{n+3})` for `t ≥ λ`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub exceeds: bool,
}

pub fn keybound_check(traj: &FlowTrajectory, lambda: f64, c_lambda: f64) -> Result<KeyboundReport> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidInput(format!("lambda must lie in (0, 1], got {lambda}")));
    }
    if traj.duration() < lambda {
        return Err(Error::TrajectoryTooShort {
            duration: traj.duration(),
            required: lambda,
        });
    }
    let sup = supercritical(traj)?;
    let sup_a = traj.sup_a();
    let (times, ratios): (Vec<f64>, Vec<f64>) = sup
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lambda)
        .map(|(i, &t)| (t, sup_a[i] / (1.0 + sup.cumulative[i])))
        .unzip();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(KeyboundReport {
        lambda,
        c_lambda,
        times,
        ratios,
        max_ratio,
        exceeds: max_ratio > c_lambda,
    })
}
