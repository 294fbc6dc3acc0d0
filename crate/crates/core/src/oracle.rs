//! Exact shrinking spheres and circles.
//!
//! `R(t)² = R₀² − 2nt`, so `|A| = √n / R = (2(T − t))^{−1/2}` with
//! `T = R₀² / (2n)`. Functionals of `|A|` are closed forms in `R`; the
//! subcritical-log integral has no elementary antiderivative and is
//! integrated numerically in the variable `u = ln(R₀² / R²)`, in which the
//! integrand is smooth up to the singular time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::monitors::{monitor, FunctionalSpec, DEFAULT_DIVERGENCE_SLOPE};
use crate::quad;

/// Relative tolerance of every oracle quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSolution {
    pub n: usize,
    pub r0: f64,
}

/// Area of the unit `n`-sphere in `R^{n+1}`.
pub fn unit_sphere_measure(n: usize) -> f64 {
    match n {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 1.0) * unit_sphere_measure(n - 2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluation {
    Instantaneous,
    Cumulative,
}

impl SphereSolution {
    pub fn new(n: usize, r0: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidInput(format!("R0 must be positive, got {r0}")));
        }
        Ok(SphereSolution { n, r0 })
    }

    pub fn singular_time(&self) -> f64 {
        self.r0 * self.r0 / (2.0 * self.n as f64)
    }

    fn check(&self, t: f64) -> Result<()> {
        let big_t = self.singular_time();
        if !(t >= 0.0 && t < big_t) {
            return Err(Error::OutOfRange {
                t,
                singular_time: big_t,
            });
        }
        Ok(())
    }

    fn r_unchecked(&self, t: f64) -> f64 {
        (self.r0 * self.r0 - 2.0 * self.n as f64 * t).sqrt()
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.r_unchecked(t))
    }

    pub fn mean_curvature(&self, t: f64) -> Result<f64> {
        Ok(self.n as f64 / self.radius(t)?)
    }

    pub fn abs_a(&self, t: f64) -> Result<f64> {
        Ok((self.n as f64).sqrt() / self.radius(t)?)
    }

    pub fn measure(&self, t: f64) -> Result<f64> {
        Ok(unit_sphere_measure(self.n) * self.radius(t)?.powi(self.n as i32))
    }

    fn instantaneous_at_radius(&self, r: f64, spec: FunctionalSpec) -> f64 {
        let n = self.n as f64;
        let a = n.sqrt() / r;
        let m = unit_sphere_measure(self.n) * r.powi(self.n as i32);
        match spec {
            FunctionalSpec::MixedNorm { p, q } => (a.powf(p) * m).powf(q / p),
            FunctionalSpec::SubcriticalLog { shift } => a.powf(n + 2.0) / (shift.value() + a).ln() * m,
            FunctionalSpec::Supercritical => a.powf(n + 3.0) * m,
            FunctionalSpec::SupA => a,
        }
    }

    /// Closed-form value of `spec` at time `t`.
    pub fn functional(&self, t: f64, spec: FunctionalSpec, eval: Evaluation) -> Result<f64> {
        spec.validate()?;
        let r = self.radius(t)?;
        if eval == Evaluation::Instantaneous {
            return Ok(self.instantaneous_at_radius(r, spec));
        }
        let n = self.n as f64;
        let omega = unit_sphere_measure(self.n);
        Ok(match spec {
            FunctionalSpec::Supercritical => n.powf((n + 1.0) / 2.0) * omega * (1.0 / r - 1.0 / self.r0),
            FunctionalSpec::MixedNorm { p, q } => {
                // Integrand C·R^γ, ∫₀ᵗ R^γ ds = (R₀^{γ+2} − R^{γ+2}) / (n(γ+2)).
                let c = (n.powf(p / 2.0) * omega).powf(q / p);
                let gamma = (n - p) * q / p;
                let e = gamma + 2.0;
                let log_ratio = (self.r0 / r).ln();
                if e.abs() < 1e-12 {
                    c * log_ratio / n
                } else {
                    // R₀^e − R^e = −R₀^e·expm1(−e·ln(R₀/R)), stable near e = 0.
                    c * (-self.r0.powf(e) * (-e * log_ratio).exp_m1()) / (n * e)
                }
            }
            FunctionalSpec::SubcriticalLog { .. } => self.cumulative_by_quadrature(t, spec)?,
            FunctionalSpec::SupA => n.sqrt() / r,
        })
    }

    /// `∫₀ᵗ` of the instantaneous closed form by adaptive quadrature, in the
    /// variable `u = ln(R₀²/R²)` (`ds = R²/(2n) du`).
    pub fn cumulative_by_quadrature(&self, t: f64, spec: FunctionalSpec) -> Result<f64> {
        self.check(t)?;
        if spec == FunctionalSpec::SupA {
            return Err(Error::InvalidInput("sup|A| has no time integral".into()));
        }
        let r = self.r_unchecked(t);
        let u_end = 2.0 * (self.r0 / r).ln();
        let two_n = 2.0 * self.n as f64;
        quad::integrate(
            |u| {
                let rr = self.r0 * (-0.5 * u).exp();
                self.instantaneous_at_radius(rr, spec) * rr * rr / two_n
            },
            0.0,
            u_end,
            QUADRATURE_TOLERANCE,
        )
    }

    /// Samples the solution as if it were an observed trajectory.
    pub fn sample(&self, times: &[f64], functionals: &[FunctionalSpec]) -> Result<ObservedSeries> {
        let mut cumulative = vec![Vec::with_capacity(times.len()); functionals.len()];
        for &t in times {
            for (k, f) in functionals.iter().enumerate() {
                cumulative[k].push(self.functional(t, *f, Evaluation::Cumulative)?);
            }
        }
        Ok(ObservedSeries {
            times: times.to_vec(),
            radius: times.iter().map(|&t| self.radius(t)).collect::<Result<_>>()?,
            sup_a: times.iter().map(|&t| self.abs_a(t)).collect::<Result<_>>()?,
            measure: times.iter().map(|&t| self.measure(t)).collect::<Result<_>>()?,
            functionals: functionals.to_vec(),
            cumulative,
        })
    }
}

/// Scalar series extracted from a trajectory, in the form the oracle
/// produces them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    pub times: Vec<f64>,
    /// Mean vertex distance to the centroid.
    pub radius: Vec<f64>,
    pub sup_a: Vec<f64>,
    pub measure: Vec<f64>,
    pub functionals: Vec<FunctionalSpec>,
    /// One cumulative series per functional.
    pub cumulative: Vec<Vec<f64>>,
}

impl ObservedSeries {
    pub fn from_trajectory(traj: &FlowTrajectory, functionals: &[FunctionalSpec]) -> Result<Self> {
        let radius = traj
            .snapshots()
            .iter()
            .map(|s| {
                let c = s.surface.centroid();
                let p = s.surface.positions();
                p.iter().map(|x| (x - c).norm()).sum::<f64>() / p.len() as f64
            })
            .collect();
        let cumulative = functionals
            .iter()
            .map(|f| monitor(traj, *f, DEFAULT_DIVERGENCE_SLOPE).map(|r| r.cumulative))
            .collect::<Result<_>>()?;
        Ok(ObservedSeries {
            times: traj.times(),
            radius,
            sup_a: traj.sup_a(),
            measure: traj.snapshots().iter().map(|s| s.surface.measure()).collect(),
            functionals: functionals.to_vec(),
            cumulative,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub radius: f64,
    pub sup_a: f64,
    pub measure: f64,
    /// `(functional, error)` pairs, in the order of `ObservedSeries::functionals`.
    pub functionals: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub n: usize,
    pub r0: f64,
    pub singular_time: f64,
    /// Errors are taken over `t ∈ [0, window_end]`.
    pub window_end: f64,
    pub samples: usize,
    pub max: ErrorStats,
    pub median: ErrorStats,
}

fn rel(observed: f64, exact: f64) -> Option<f64> {
    (exact != 0.0).then(|| ((observed - exact) / exact).abs())
}

fn stats(v: &mut [f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    v.sort_by(f64::total_cmp);
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    (v[v.len() - 1], median)
}

/// Relative errors of `observed` against the exact solution on
/// `[0, 0.8 T]`.
pub fn compare_series(observed: &ObservedSeries, oracle: &SphereSolution) -> Result<CompareReport> {
    let window_end = 0.8 * oracle.singular_time();
    let idx: Vec<usize> = (0..observed.times.len())
        .filter(|&i| observed.times[i] <= window_end)
        .collect();
    let exact = oracle.sample(
        &idx.iter().map(|&i| observed.times[i]).collect::<Vec<_>>(),
        &observed.functionals,
    )?;
    let column = |obs: &[f64], ex: &[f64]| -> Vec<f64> {
        idx.iter()
            .enumerate()
            .filter_map(|(k, &i)| rel(obs[i], ex[k]))
            .collect()
    };
    let (r_max, r_med) = stats(&mut column(&observed.radius, &exact.radius));
    let (a_max, a_med) = stats(&mut column(&observed.sup_a, &exact.sup_a));
    let (m_max, m_med) = stats(&mut column(&observed.measure, &exact.measure));
    let mut fmax = Vec::new();
    let mut fmed = Vec::new();
    for (k, f) in observed.functionals.iter().enumerate() {
        let (mx, md) = stats(&mut column(&observed.cumulative[k], &exact.cumulative[k]));
        fmax.push((f.to_string(), mx));
        fmed.push((f.to_string(), md));
    }
    Ok(CompareReport {
        n: oracle.n,
        r0: oracle.r0,
        singular_time: oracle.singular_time(),
        window_end,
        samples: idx.len(),
        max: ErrorStats {
            radius: r_max,
            sup_a: a_max,
            measure: m_max,
            functionals: fmax,
        },
        median: ErrorStats {
            radius: r_med,
            sup_a: a_med,
            measure: m_med,
            functionals: fmed,
        },
    })
}

/// Compares a trajectory that started from a discretized sphere of radius
/// `R₀` with the exact solution.
pub fn compare(
    traj: &FlowTrajectory,
    oracle: &SphereSolution,
    functionals: &[FunctionalSpec],
) -> Result<CompareReport> {
    if traj.n() != oracle.n {
        return Err(Error::ShapeMismatch(format!(
            "trajectory has n = {}, oracle n = {}",
            traj.n(),
            oracle.n
        )));
    }
    let first = traj.first();
    let c = first.centroid();
    let worst = first
        .positions()
        .iter()
        .map(|p| ((p - c).norm() / oracle.r0 - 1.0).abs())
        .fold(0.0, f64::max);
    if worst > 0.01 {
        return Err(Error::ShapeMismatch(format!(
            "initial surface deviates {:.2}% from a sphere of radius {}",
            100.0 * worst,
            oracle.r0
        )));
    }
    compare_series(&ObservedSeries::from_trajectory(traj, functionals)?, oracle)
}
