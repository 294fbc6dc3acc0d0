use serde::{Deserialize, Serialize};

use super::h_mixed_power;
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::surface::Point;

/// Closed-form constants of the Moser iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserConstants {
    pub n: usize,
    pub q: f64,
    pub c0: f64,
    pub c1: f64,
    pub c_n: f64,
    pub nu: f64,
    pub c_a: f64,
    pub c_z: f64,
    pub ln_c_a: f64,
    pub ln_c_z: f64,
}

pub fn moser_constants(n: usize, q: f64, c0: f64, c1: f64, c_n: f64) -> Result<MoserConstants> {
    if n == 0 {
        return Err(Error::UnsupportedDimension(n));
    }
    let nf = n as f64;
    let bound = (nf + 2.0) / 2.0;
    if !(q > bound) {
        return Err(Error::SubcriticalExponent { q, bound });
    }
    for (name, v) in [("C0", c0), ("C1", c1), ("c_n", c_n)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidInput(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    let nu = (nf + 2.0) / (2.0 * q - (nf + 2.0));
    let ln_c_a = (1.0 + nu) * (2.0 * c_n * c0 * c1).ln();
    let ln_c_z = 16f64.ln() + (1.0 + nu) * 100f64.ln() + c_n.ln() + ln_c_a;
    Ok(MoserConstants {
        n,
        q,
        c0,
        c1,
        c_n,
        nu,
        c_a: ln_c_a.exp(),
        c_z: ln_c_z.exp(),
        ln_c_a,
        ln_c_z,
    })
}

impl MoserConstants {
    /// `λ = (n+2)/n`
    pub fn lambda_m(&self) -> f64 {
        (self.n as f64 + 2.0) / self.n as f64
    }

    /// `Λ(β) = 100β`
    pub fn big_lambda(&self, beta: f64) -> f64 {
        100.0 * beta
    }

    pub fn ln_c_b(&self, beta: f64) -> Result<f64> {
        if !(beta >= 2.0) {
            return Err(Error::InvalidInput(format!("C_b needs β ≥ 2, got {beta}")));
        }
        let k = 1.0 + self.nu;
        let nf = self.n as f64;
        Ok(nf * nf / beta * (4f64.ln() + k * self.lambda_m().ln() + self.ln_c_z + k * beta.ln()))
    }

    /// `C_b(β) = (4 λ^{1+ν} C_z β^{1+ν})^{n²/β}`; may overflow to infinity,
    /// `ln_c_b` does not.
    pub fn c_b(&self, beta: f64) -> Result<f64> {
        Ok(self.ln_c_b(beta)?.exp())
    }

    /// Power of `c_n` in `C_b(β)`.
    pub fn c_n_exponent(&self, beta: f64) -> f64 {
        let nf = self.n as f64;
        (2.0 + self.nu) * nf * nf / beta
    }
}

/// Ball-times-interval region sampled at the trajectory's vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeRegion {
    pub center: [f64; 3],
    pub radius: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl SpacetimeRegion {
    /// `D`: unit ball over `[0, 1]`.
    pub fn outer(center: [f64; 3]) -> Self {
        SpacetimeRegion {
            center,
            radius: 1.0,
            t_lo: 0.0,
            t_hi: 1.0,
        }
    }

    /// `D′`: half ball over `[1/12, 1]`.
    pub fn inner(center: [f64; 3]) -> Self {
        SpacetimeRegion {
            center,
            radius: 0.5,
            t_lo: 1.0 / 12.0,
            t_hi: 1.0,
        }
    }

    pub fn contains(&self, x: &Point, t: f64) -> bool {
        let c = Point::new(self.center[0], self.center[1], self.center[2]);
        t >= self.t_lo && t <= self.t_hi && (x - c).norm() < self.radius
    }

    /// `(snapshot, vertex)` pairs inside the region.
    pub fn samples(&self, traj: &FlowTrajectory) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (k, s) in traj.snapshots().iter().enumerate() {
            for (i, x) in s.surface.positions().iter().enumerate() {
                if self.contains(x, s.time) {
                    out.push((k, i));
                }
            }
        }
        out
    }
}

/// `‖2|A|²‖_{L^q(M×[0,T))}` over the whole trajectory.
fn c0_of(traj: &FlowTrajectory, q: f64) -> f64 {
    traj.snapshots()
        .iter()
        .zip(traj.dts())
        .map(|(s, dt)| {
            dt * s
                .surface
                .a_squared()
                .iter()
                .zip(s.surface.weights())
                .map(|(a2, w)| (2.0 * a2).powf(q) * w)
                .sum::<f64>()
        })
        .sum::<f64>()
        .powf(1.0 / q)
}

fn c1_of(traj: &FlowTrajectory) -> f64 {
    let nf = traj.n() as f64;
    (1.0 + h_mixed_power(traj)).powf(nf / (nf + 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1Bound {
    pub c0: f64,
    pub c1: f64,
    /// `(1 + C₀^{n+3})^{n/(n+2)}`
    pub bound: f64,
    pub pass: bool,
}

/// Compares `C₁` with `(1 + C₀^{n+3})^{n/(n+2)}` where `C₀` uses
/// `f = 2|A|²` at `q = (n+3)/2`.
pub fn c1_from_c0_bound(traj: &FlowTrajectory) -> C1Bound {
    let nf = traj.n() as f64;
    let c0 = c0_of(traj, (nf + 3.0) / 2.0);
    let c1 = c1_of(traj);
    let bound = (1.0 + c0.powf(nf + 3.0)).powf(nf / (nf + 2.0));
    C1Bound {
        c0,
        c1,
        bound,
        pass: c1 <= bound,
    }
}

const HARNACK_CAVEAT: &str = "sup over D' is a max over vertex samples and under-resolves the true supremum";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub center: [f64; 3],
    pub beta: f64,
    pub q: f64,
    pub c_n: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
    /// `sup_{D′} |A|²`
    pub sup_inner: f64,
    /// `‖|A|²‖_{L^β(D)}`
    pub norm_outer: f64,
    pub c0: f64,
    pub c1: f64,
    pub ln_c_b: f64,
    pub c_b: f64,
    pub pass: bool,
    /// `ln(C_b‖v‖ / sup v)`; non-negative iff pass.
    pub ln_margin: f64,
    /// Smallest `c_n` for which the check passes.
    pub minimal_c_n: f64,
    pub caveat: String,
}

/// `sup_{D′}|A|² ≤ C_b‖|A|²‖_{L^β(D)}` on a trajectory rescaled to span `[0, 1]`.
pub fn harnack_check(traj: &FlowTrajectory, center: [f64; 3], beta: f64, q: f64, c_n: f64) -> Result<HarnackReport> {
    if traj.duration() < 1.0 - 1e-9 {
        return Err(Error::TrajectoryRange(format!(
            "needs [0, 1] in rescaled time, trajectory ends at {}",
            traj.duration()
        )));
    }
    if !(beta >= 2.0) {
        return Err(Error::InvalidInput(format!("β must be at least 2, got {beta}")));
    }
    let n = traj.n();
    // validates q before any work
    moser_constants(n, q, 1.0, 1.0, 1.0)?;
    let unit = traj.truncated(1.0 + 1e-9);

    let outer = SpacetimeRegion::outer(center);
    let inner = SpacetimeRegion::inner(center);
    let inner_samples = inner.samples(&unit);
    if inner_samples.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let outer_samples = outer.samples(&unit);
    let snaps = unit.snapshots();
    let dts = unit.dts();
    let sup_inner = inner_samples
        .iter()
        .map(|&(k, i)| snaps[k].surface.a_squared()[i])
        .fold(0.0, f64::max);
    let norm_outer = outer_samples
        .iter()
        .map(|&(k, i)| dts[k] * snaps[k].surface.weights()[i] * snaps[k].surface.a_squared()[i].powf(beta))
        .sum::<f64>()
        .powf(1.0 / beta);

    let c0 = c0_of(&unit, q);
    let c1 = c1_of(&unit);
    let consts = moser_constants(n, q, c0, c1, c_n)?;
    let ln_c_b = consts.ln_c_b(beta)?;
    let ln_margin = ln_c_b + norm_outer.ln() - sup_inner.ln();
    let unit_consts = moser_constants(n, q, c0, c1, 1.0)?;
    let minimal_c_n = ((sup_inner.ln() - norm_outer.ln() - unit_consts.ln_c_b(beta)?)
        / unit_consts.c_n_exponent(beta))
    .exp();
    Ok(HarnackReport {
        center,
        beta,
        q,
        c_n,
        outer_samples: outer_samples.len(),
        inner_samples: inner_samples.len(),
        sup_inner,
        norm_outer,
        c0,
        c1,
        ln_c_b,
        c_b: ln_c_b.exp(),
        pass: ln_margin >= 0.0,
        ln_margin,
        minimal_c_n,
        caveat: HARNACK_CAVEAT.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        let m = moser_constants(2, 3.0, 1.0, 1.0, 1.0).unwrap();
        assert!((m.nu - 2.0).abs() < 1e-12);
        assert!((m.c_a - 8.0).abs() < 1e-9);
        assert!((m.c_z - 16.0 * 1e6 * 8.0).abs() / m.c_z < 1e-12);
        let m = moser_constants(2, 2.5, 1.0, 1.0, 1.0).unwrap();
        assert!((m.nu - 4.0).abs() < 1e-12);
        assert!(matches!(
            moser_constants(2, 2.0, 1.0, 1.0, 1.0),
            Err(Error::SubcriticalExponent { .. })
        ));
        assert!(m.c_b(1.5).is_err());
        let direct = (4.0 * 2f64.powf(5.0) * m.c_z * 4f64.powf(5.0)).powf(1.0);
        assert!((m.c_b(4.0).unwrap() / direct - 1.0).abs() < 1e-10);
    }

    #[test]
    fn critical_q_gives_n_plus_three() {
        for n in 1..=8usize {
            let q = (n as f64 + 3.0) / 2.0;
            let m = moser_constants(n, q, 1.0, 1.0, 1.0).unwrap();
            assert!((1.0 + m.nu - (n as f64 + 3.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn c_n_scaling_of_c_b() {
        let a = moser_constants(2, 2.5, 0.7, 1.3, 1.0).unwrap();
        let b = moser_constants(2, 2.5, 0.7, 1.3, 2.0).unwrap();
        let beta = 5.0;
        let d = b.ln_c_b(beta).unwrap() - a.ln_c_b(beta).unwrap();
        assert!((d - a.c_n_exponent(beta) * 2f64.ln()).abs() < 1e-9);
    }
}
