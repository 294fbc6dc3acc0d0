//! Numerical checks of the Sobolev-type inequalities, the Moser iteration
//! constants and the local Harnack bound.
//!
//! Every check has two modes: evaluate at a given `c_n`, or report the
//! smallest `c_n` that would make it pass.

mod battery;
mod moser;

pub use battery::{
    battery_surfaces, interpolation_battery, lemma21_battery, michael_simon_battery, parabolic_battery,
    random_field, BatterySurface, InterpolationBattery, Lemma21Battery, MichaelSimonBattery,
    ParabolicBattery,
};
pub use moser::{
    c1_from_c0_bound, harnack_check, moser_constants, C1Bound, HarnackReport, MoserConstants, SpacetimeRegion,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::surface::{DiscreteHypersurface, ScalarField};

/// Default `Q` for surfaces, where the Sobolev exponent is any finite number.
pub const DEFAULT_Q_SOB_N2: f64 = 10.0;

/// Exponents of the Sobolev chain on an `n`-dimensional hypersurface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevExponents {
    pub n: usize,
    pub q_sob: f64,
    pub m: f64,
    pub alpha: f64,
    pub beta_par: f64,
}

impl SobolevExponents {
    /// `q_sob_n2` is only used when `n = 2`.
    pub fn new(n: usize, q_sob_n2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        let nf = n as f64;
        let (q, m) = if n == 2 {
            if !(q_sob_n2 > 1.0 && q_sob_n2.is_finite()) {
                return Err(Error::InvalidInput(format!("Q must be finite and > 1, got {q_sob_n2}")));
            }
            // Hölder with |H| ∈ L^{n+3} against v^Q gives 2m = Q(n+3)/(n+2).
            (q_sob_n2, q_sob_n2 * (nf + 3.0) / (2.0 * (nf + 2.0)))
        } else {
            (nf / (nf - 2.0), (nf - 1.0) * (nf + 3.0) / ((nf - 2.0) * (nf + 2.0)))
        };
        Ok(SobolevExponents {
            n,
            q_sob: q,
            m,
            alpha: q * (m - 1.0) / (q - m),
            beta_par: 2.0 * (nf + 2.0) / nf,
        })
    }
}

fn require_mesh(s: &DiscreteHypersurface) -> Result<()> {
    if s.n() < 2 {
        return Err(Error::UnsupportedDimension(s.n()));
    }
    Ok(())
}

/// `(∫|H|^p dμ)`.
pub(crate) fn h_moment(s: &DiscreteHypersurface, p: f64) -> f64 {
    s.mean_curvature()
        .iter()
        .zip(s.weights())
        .map(|(h, w)| h.abs().powf(p) * w)
        .sum()
}

/// `‖H‖^{2(n+3)/3}_{L^{n+3}}` on one surface.
fn h_critical_power(s: &DiscreteHypersurface) -> f64 {
    let p = s.n() as f64 + 3.0;
    h_moment(s, p).powf(2.0 / 3.0)
}

/// `‖H‖^{2(n+3)/3}_{L^{n+3, 2(n+3)/3}(M×[0,T))}` with left-endpoint time quadrature.
pub(crate) fn h_mixed_power(traj: &FlowTrajectory) -> f64 {
    traj.snapshots()
        .iter()
        .zip(traj.dts())
        .map(|(s, dt)| dt * h_critical_power(&s.surface))
        .sum()
}

fn check_nonnegative(field: &ScalarField) -> Result<()> {
    if field.values().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("field must be finite and non-negative".into()));
    }
    Ok(())
}

/// `(∫ f^{n/(n−1)})^{(n−1)/n} / ∫(|∇f| + |H| f)`; a check at `c_n` passes
/// iff the ratio is at most `c_n`.
pub fn michael_simon_ratio(surface: &DiscreteHypersurface, field: &ScalarField) -> Result<f64> {
    require_mesh(surface)?;
    check_nonnegative(field)?;
    if field.values().iter().all(|v| *v == 0.0) {
        return Err(Error::InvalidInput("field vanishes identically".into()));
    }
    let n = surface.n() as f64;
    let e = n / (n - 1.0);
    let lhs = surface.integrate(field, e)?.powf(1.0 / e);
    let grad = surface.element_gradients(field)?.l1();
    let hf: f64 = surface
        .mean_curvature()
        .iter()
        .zip(field.values())
        .zip(surface.weights())
        .map(|((h, f), w)| h.abs() * f * w)
        .sum();
    let den = grad + hf;
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(lhs / den)
}

/// Both sides of the first Sobolev inequality, with `c_n` factored out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Terms {
    /// `‖v‖²_{L^{2Q}}`
    pub lhs: f64,
    /// `‖∇v‖²_{L²}`
    pub grad: f64,
    /// `‖H‖^{2(n+3)/3}_{L^{n+3}}·‖v‖²_{L²}`
    pub curvature: f64,
}

impl Lemma21Terms {
    pub fn gap(&self, c_n: f64) -> f64 {
        c_n * (self.grad + self.curvature) - self.lhs
    }

    /// Smallest `c_n` with a non-negative gap; zero for `v ≡ 0`.
    pub fn minimal_c_n(&self) -> f64 {
        let rhs = self.grad + self.curvature;
        if self.lhs == 0.0 {
            0.0
        } else if rhs > 0.0 {
            self.lhs / rhs
        } else {
            f64::INFINITY
        }
    }
}

pub fn lemma21_terms(surface: &DiscreteHypersurface, field: &ScalarField, q_sob: f64) -> Result<Lemma21Terms> {
    require_mesh(surface)?;
    if !(q_sob >= 1.0) {
        return Err(Error::InvalidInput(format!("Q must be at least 1, got {q_sob}")));
    }
    let lhs = surface.integrate(field, 2.0 * q_sob)?.powf(1.0 / q_sob);
    let grad = surface.dirichlet_energy(field)?;
    let l2sq = surface.integrate(field, 2.0)?;
    Ok(Lemma21Terms {
        lhs,
        grad,
        curvature: h_critical_power(surface) * l2sq,
    })
}

/// `c_n(‖∇v‖² + ‖H‖^{2(n+3)/3}_{L^{n+3}}‖v‖²) − ‖v‖²_{L^{2Q}}`.
pub fn lemma21_gap(surface: &DiscreteHypersurface, field: &ScalarField, c_n: f64, q_sob: f64) -> Result<f64> {
    Ok(lemma21_terms(surface, field, q_sob)?.gap(c_n))
}

/// `μ = (1/t − 1/r)/(1/r − 1/s)`.
pub fn interpolation_mu(t: f64, r: f64, s: f64) -> Result<f64> {
    if !(0.0 < t && t < r && r < s) {
        return Err(Error::ExponentOrder { t, r, s });
    }
    Ok((1.0 / t - 1.0 / r) / (1.0 / r - 1.0 / s))
}

/// `L^p` norm against the normalized measure `dμ/μ(M)`.
pub fn normalized_norm(surface: &DiscreteHypersurface, field: &ScalarField, p: f64) -> Result<f64> {
    Ok((surface.integrate(field, p)? / surface.measure()).powf(1.0 / p))
}

/// `ε‖v‖_s + ε^{−μ}‖v‖_t − ‖v‖_r` in normalized norms.
pub fn interpolation_gap(
    surface: &DiscreteHypersurface,
    field: &ScalarField,
    eps: f64,
    r: f64,
    s: f64,
    t: f64,
) -> Result<f64> {
    let mu = interpolation_mu(t, r, s)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {eps}")));
    }
    let ns = normalized_norm(surface, field, s)?;
    let nt = normalized_norm(surface, field, t)?;
    let nr = normalized_norm(surface, field, r)?;
    Ok(eps * ns + eps.powf(-mu) * nt - nr)
}

/// Both sides of the parabolic Sobolev inequality, with `c_n` factored out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicTerms {
    pub beta: f64,
    /// `‖v‖^β_{L^β(M×[0,T))}`
    pub lhs: f64,
    /// The bracketed product without `c_n`.
    pub rhs_unit: f64,
}

impl ParabolicTerms {
    pub fn gap(&self, c_n: f64) -> f64 {
        c_n * self.rhs_unit - self.lhs
    }

    pub fn minimal_c_n(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else if self.rhs_unit > 0.0 {
            self.lhs / self.rhs_unit
        } else {
            f64::INFINITY
        }
    }
}

pub fn parabolic_terms(traj: &FlowTrajectory, fields: &[ScalarField]) -> Result<ParabolicTerms> {
    let n = traj.n();
    if n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    if fields.len() != traj.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fields for {} snapshots",
            fields.len(),
            traj.len()
        )));
    }
    let nf = n as f64;
    let beta = 2.0 * (nf + 2.0) / nf;
    let dts = traj.dts();
    let mut lhs = 0.0;
    let mut grad = 0.0;
    let mut max_l2sq = 0.0f64;
    for ((snap, field), dt) in traj.snapshots().iter().zip(fields).zip(&dts) {
        let s = &snap.surface;
        lhs += dt * s.integrate(field, beta)?;
        grad += dt * s.dirichlet_energy(field)?;
        max_l2sq = max_l2sq.max(s.integrate(field, 2.0)?);
    }
    let rhs_unit = max_l2sq.powf(2.0 / nf) * (grad + max_l2sq * h_mixed_power(traj));
    Ok(ParabolicTerms { beta, lhs, rhs_unit })
}

/// `RHS − LHS` of the parabolic Sobolev inequality at `c_n`.
pub fn parabolic_sobolev_gap(traj: &FlowTrajectory, fields: &[ScalarField], c_n: f64) -> Result<f64> {
    Ok(parabolic_terms(traj, fields)?.gap(c_n))
}

/// `|A|` on every snapshot, the natural test field along a flow.
pub fn abs_a_fields(traj: &FlowTrajectory) -> Vec<ScalarField> {
    traj.snapshots()
        .iter()
        .map(|s| ScalarField::new(s.surface.abs_a()).expect("curvature is finite"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::icosphere;
    use std::f64::consts::PI;

    #[test]
    fn exponents_for_surfaces_and_higher_dimensions() {
        let e = SobolevExponents::new(2, 10.0).unwrap();
        assert!(1.0 < e.m && e.m < e.q_sob);
        assert!((e.m - 6.25).abs() < 1e-12);
        assert!((e.beta_par - 4.0).abs() < 1e-12);
        for n in 3..9 {
            let e = SobolevExponents::new(n, 10.0).unwrap();
            let nf = n as f64;
            assert!(1.0 < e.m && e.m < e.q_sob, "n={n}");
            assert!((e.alpha - nf * (2.0 * nf + 1.0) / (3.0 * (nf - 2.0))).abs() < 1e-12);
            assert!(e.beta_par > 2.0);
        }
        assert!(matches!(SobolevExponents::new(1, 10.0), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn constant_field_on_spheres() {
        let s = icosphere(4, 1.0).unwrap();
        let one = ScalarField::constant(1.0, s.vertex_count());
        let r = michael_simon_ratio(&s, &one).unwrap();
        let expect = (4.0 * PI).sqrt() / (8.0 * PI);
        assert!((r / expect - 1.0).abs() < 0.01, "{r} vs {expect}");

        let big = s.map_positions(|p| p * 2.0).unwrap();
        let r2 = michael_simon_ratio(&big, &one).unwrap();
        assert!((r2 / r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma21_direct_values() {
        let s = icosphere(4, 1.0).unwrap();
        let zero = ScalarField::constant(0.0, s.vertex_count());
        assert_eq!(lemma21_gap(&s, &zero, 3.7, 10.0).unwrap(), 0.0);

        let one = ScalarField::constant(1.0, s.vertex_count());
        let t = lemma21_terms(&s, &one, 10.0).unwrap();
        let area = 4.0 * PI;
        assert!((t.lhs / area.powf(0.1) - 1.0).abs() < 0.01);
        let rhs = (32.0 * area).powf(2.0 / 3.0) * area;
        assert!((t.curvature / rhs - 1.0).abs() < 0.02);
        assert!(t.gap(1.0) > 0.0);

        let c = crate::surface::regular_polygon(64, 1.0).unwrap();
        let f = ScalarField::constant(1.0, 64);
        assert!(matches!(lemma21_gap(&c, &f, 1.0, 10.0), Err(Error::UnsupportedDimension(1))));
    }

    #[test]
    fn interpolation_constant_and_order() {
        let s = icosphere(2, 3.0).unwrap();
        let c = ScalarField::constant(2.5, s.vertex_count());
        let g = interpolation_gap(&s, &c, 1.0, 4.0, 8.0, 2.0).unwrap();
        assert!((g - 2.5).abs() < 1e-12);
        assert!(interpolation_gap(&s, &c, 0.3, 4.0, 8.0, 2.0).unwrap() >= 0.0);
        assert!(matches!(
            interpolation_gap(&s, &c, 1.0, 2.0, 8.0, 2.0),
            Err(Error::ExponentOrder { .. })
        ));
    }
}
