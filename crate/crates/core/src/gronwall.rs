//! Gronwall comparison behind the log-weakened extension criterion.
//!
//! With `f(t) = sup|A|`, `G(t) = ∫|A|^{n+2}/log(2+|A|) dμ` and
//! `h(t) = c(1 + ∫₀ᵗ Ψ(f)G)`, the key bound gives `f ≤ h`, hence
//! `Ψ̃(h(t)) − Ψ̃(h(τ₁)) ≤ c∫_{τ₁}^t G`. Since `Ψ̃` is unbounded, a finite
//! `∫G` bounds `f`.
//!
//! `Ψ̃` grows like `ln ln y`, so inverses overflow `f64` quickly. Both
//! directions are therefore also available in the variable `v = ln y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::monitors::{divergence_fit, keybound_check, subcritical_log, DivergenceFit, DEFAULT_DIVERGENCE_SLOPE};
use crate::quad;

pub const PSI_TILDE_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_TAU1: f64 = 0.05;

/// `Ψ(s) = s ln(2 + s)`.
pub fn psi(s: f64) -> f64 {
    s * (2.0 + s).ln()
}

/// `ln(2 + e^v)` without overflow.
fn ln_two_plus_exp(v: f64) -> f64 {
    if v > 0.0 {
        v + (2.0 * (-v).exp()).ln_1p()
    } else {
        (2.0 + v.exp()).ln()
    }
}

/// `Ψ̃(e^v; c) = ∫_{ln c}^{v} dw / ln(2 + e^w)`.
pub fn psi_tilde_log(v: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::DomainError(format!("lower limit c must be positive, got {c}")));
    }
    let lc = c.ln();
    if !(v >= lc) || !v.is_finite() {
        return Err(Error::DomainError(format!("Ψ̃ needs y ≥ c, got ln y = {v}, ln c = {lc}")));
    }
    quad::integrate(|w| 1.0 / ln_two_plus_exp(w), lc, v, PSI_TILDE_TOLERANCE)
}

/// `Ψ̃(y; c) = ∫_c^y ds / Ψ(s)`.
pub fn psi_tilde(y: f64, c: f64) -> Result<f64> {
    if !(y >= c) {
        return Err(Error::DomainError(format!("Ψ̃ needs y ≥ c, got y = {y}, c = {c}")));
    }
    psi_tilde_log(y.ln(), c)
}

/// `ln y` with `Ψ̃(y; c) = value`, by bisection.
pub fn psi_tilde_inverse_log(value: f64, c: f64) -> Result<f64> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::DomainError(format!("Ψ̃ takes values in [0, ∞), got {value}")));
    }
    let lc = c.ln();
    let mut lo = lc;
    let mut step = 1.0f64;
    let mut hi = lc + step;
    while psi_tilde_log(hi, c)? < value {
        lo = hi;
        step *= 2.0;
        hi = lc + step;
        if step > 1e300 {
            return Err(Error::DomainError("Ψ̃ inverse out of range".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi_tilde_log(mid, c)? < value {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `y` with `Ψ̃(y; c) = value`; may be `+∞` when `y` exceeds `f64`.
pub fn psi_tilde_inverse(value: f64, c: f64) -> Result<f64> {
    Ok(psi_tilde_inverse_log(value, c)?.exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallState {
    pub c: f64,
    pub tau1: f64,
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// `Ψ̃(h(t); c)`.
    pub psi_tilde_h: Vec<f64>,
    /// `min_{t ≥ τ₁} (h − f)/h`; negative when `f ≤ h` fails.
    pub comparison_margin: f64,
    pub comparison_holds: bool,
    /// `max_{t ≥ τ₁} [Ψ̃(h(t)) − Ψ̃(h(τ₁)) − c∫_{τ₁}^t G]`, should be ≤ 0.
    pub chain_excess: f64,
    pub chain_holds: bool,
}

/// Builds `h` on the sample grid and checks the comparison chain.
pub fn h_bound_series(times: &[f64], f: &[f64], g: &[f64], c: f64, tau1: f64) -> Result<GronwallState> {
    if times.is_empty() || f.is_empty() || g.is_empty() {
        return Err(Error::MissingMonitors);
    }
    if f.len() != times.len() || g.len() != times.len() {
        return Err(Error::InvalidInput("f, G and time series differ in length".into()));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("c must be positive, got {c}")));
    }
    let mut h = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        h.push(c * (1.0 + acc));
        if k + 1 < times.len() {
            acc += psi(f[k]) * g[k] * (times[k + 1] - times[k]);
        }
    }
    let psi_tilde_h: Vec<f64> = h.iter().map(|&y| psi_tilde(y, c)).collect::<Result<_>>()?;
    let start = times.partition_point(|&t| t < tau1);
    let mut margin = f64::INFINITY;
    let mut excess = f64::NEG_INFINITY;
    let mut g_int = 0.0;
    for k in start..times.len() {
        margin = margin.min((h[k] - f[k]) / h[k]);
        // Quadrature of Ψ̃ is relative; allow its tolerance.
        let slack = 10.0 * PSI_TILDE_TOLERANCE * psi_tilde_h[k].max(1.0);
        excess = excess.max(psi_tilde_h[k] - psi_tilde_h[start] - c * g_int - slack);
        if k + 1 < times.len() {
            g_int += g[k] * (times[k + 1] - times[k]);
        }
    }
    if start == times.len() {
        margin = 0.0;
        excess = 0.0;
    }
    Ok(GronwallState {
        c,
        tau1,
        times: times.to_vec(),
        f: f.to_vec(),
        g: g.to_vec(),
        h,
        psi_tilde_h,
        comparison_margin: margin,
        comparison_holds: margin >= 0.0,
        chain_excess: excess,
        chain_holds: excess <= 0.0,
    })
}

/// Key-bound constant `c = max_{t ≥ τ₁} sup|A| / (1 + ∫₀ᵗ∫|A|^{n+3})`.
pub fn keybound_constant(traj: &FlowTrajectory, tau1: f64) -> Result<f64> {
    Ok(keybound_check(traj, tau1, f64::INFINITY)?.max_ratio)
}

/// `h` along a trajectory; `c = None` takes the key-bound constant.
pub fn h_bound(traj: &FlowTrajectory, c: Option<f64>, tau1: f64) -> Result<GronwallState> {
    if traj.len() < 2 {
        return Err(Error::MissingMonitors);
    }
    let c = match c {
        Some(c) => c,
        None => keybound_constant(traj, tau1)?,
    };
    let g = subcritical_log(traj)?;
    h_bound_series(&g.times, &traj.sup_a(), &g.instantaneous, c, tau1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Extendable,
    SubcriticalDiverges,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub c: f64,
    pub tau1: f64,
    pub divergence: Option<DivergenceFit>,
    /// `∫_{τ₁}^{end} G`.
    pub g_integral: f64,
    /// `ln` of `Ψ̃⁻¹(Ψ̃(h(τ₁)) + c∫G)`, present when extendable.
    pub ln_bound: Option<f64>,
    /// The bound itself; `None` when it overflows `f64`.
    pub bound: Option<f64>,
    pub observed_sup: f64,
    pub state: GronwallState,
}

pub fn extension_verdict(traj: &FlowTrajectory, c: Option<f64>, tau1: f64, threshold: f64) -> Result<VerdictReport> {
    extension_verdict_with(traj, c, tau1, threshold, None)
}

/// As [`extension_verdict`], falling back to a known singular time when the
/// trajectory is too sparse to refit one (e.g. loaded from strided snapshots).
pub fn extension_verdict_with(
    traj: &FlowTrajectory,
    c: Option<f64>,
    tau1: f64,
    threshold: f64,
    t_est: Option<f64>,
) -> Result<VerdictReport> {
    if traj.len() < 2 {
        return Err(Error::MissingMonitors);
    }
    let mut g = subcritical_log(traj)?;
    if g.divergence.is_none() {
        if let Some(t) = t_est {
            g.divergence = divergence_fit(&g.times, &g.cumulative, &traj.sup_a(), t, DEFAULT_DIVERGENCE_SLOPE);
        }
    }
    if threshold != DEFAULT_DIVERGENCE_SLOPE {
        g.divergence = g.divergence.map(|mut d| {
            d.threshold = threshold;
            d.divergent = d.slope > threshold;
            d
        });
    }
    let state = h_bound(traj, c, tau1)?;
    let start = state.times.partition_point(|&t| t < tau1);
    let g_integral: f64 = (start..state.times.len().saturating_sub(1))
        .map(|k| state.g[k] * (state.times[k + 1] - state.times[k]))
        .sum();
    let observed_sup = state.f[start.min(state.f.len() - 1)..]
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let divergent = g.divergence.map(|d| d.divergent).unwrap_or(false);
    let (verdict, ln_bound) = if divergent {
        (Verdict::SubcriticalDiverges, None)
    } else {
        let base = state.psi_tilde_h[start.min(state.h.len() - 1)];
        let lb = psi_tilde_inverse_log(base + state.c * g_integral, state.c)?;
        (Verdict::Extendable, Some(lb))
    };
    Ok(VerdictReport {
        verdict,
        c: state.c,
        tau1,
        divergence: g.divergence,
        g_integral,
        ln_bound,
        bound: ln_bound.map(f64::exp).filter(|b| b.is_finite()),
        observed_sup,
        state,
    })
}
