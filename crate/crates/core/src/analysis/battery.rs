//! Randomized batteries. Each trial draws its own seed up front, so results
//! do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interpolation_gap, lemma21_terms, michael_simon_ratio, normalized_norm, parabolic_terms};
use crate::error::{Error, Result};
use crate::flow::FlowTrajectory;
use crate::surface::{bumpy_sphere, ellipsoid, icosphere, SphericalBump};
use crate::surface::{DiscreteHypersurface, ScalarField};

#[derive(Clone, Debug)]
pub struct BatterySurface {
    pub name: String,
    pub surface: DiscreteHypersurface,
}

/// Sphere, ellipsoid and bumpy sphere at icosphere `level`.
pub fn battery_surfaces(level: usize) -> Result<Vec<BatterySurface>> {
    Ok(vec![
        BatterySurface {
            name: "sphere".into(),
            surface: icosphere(level, 1.0)?,
        },
        BatterySurface {
            name: "ellipsoid".into(),
            surface: ellipsoid(1.5, 1.0, 0.7, level)?,
        },
        BatterySurface {
            name: "bumpy-sphere".into(),
            surface: bumpy_sphere(level, &SphericalBump::random(4, 0.3, 7))?,
        },
    ])
}

/// Low-degree polynomial in the direction from the centroid, shifted so
/// its minimum is a random fraction of its range.
pub fn random_field(surface: &DiscreteHypersurface, degree: usize, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bump = SphericalBump::random(degree.max(1), 1.0, rng.random());
    let floor: f64 = rng.random_range(0.02..1.0);
    let c = surface.centroid();
    let raw: Vec<f64> = surface
        .positions()
        .iter()
        .map(|p| {
            let d = p - c;
            let r = d.norm();
            if r > 0.0 {
                bump.eval(&(d / r))
            } else {
                0.0
            }
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let vals = if range > 0.0 {
        raw.iter().map(|v| (v - lo) / range + floor).collect()
    } else {
        vec![1.0; raw.len()]
    };
    ScalarField::new(vals).expect("finite by construction")
}

fn trial_seeds(seed: u64, trials: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials).map(|_| rng.random()).collect()
}

fn degree_for(seed: u64) -> usize {
    1 + (seed % 4) as usize
}

fn require_surfaces<T>(s: &[T]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidInput("battery needs at least one surface".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MichaelSimonBattery {
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub worst_surface: String,
    pub worst_seed: u64,
    /// `max_ratio < 1`
    pub pass: bool,
}

pub fn michael_simon_battery(surfaces: &[BatterySurface], trials: usize, seed: u64) -> Result<MichaelSimonBattery> {
    require_surfaces(surfaces)?;
    let seeds = trial_seeds(seed, trials);
    let ratios: Vec<(f64, usize, u64)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let k = i % surfaces.len();
            let f = random_field(&surfaces[k].surface, degree_for(s), s);
            michael_simon_ratio(&surfaces[k].surface, &f).map(|r| (r, k, s))
        })
        .collect::<Result<_>>()?;
    let (max_ratio, k, worst_seed) = ratios
        .iter()
        .copied()
        .fold((f64::NEG_INFINITY, 0, 0), |a, b| if b.0 > a.0 { b } else { a });
    let mean_ratio = ratios.iter().map(|r| r.0).sum::<f64>() / ratios.len().max(1) as f64;
    Ok(MichaelSimonBattery {
        trials,
        max_ratio,
        mean_ratio,
        worst_surface: surfaces[k].name.clone(),
        worst_seed,
        pass: max_ratio < 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma21Battery {
    pub trials: usize,
    pub q_sob: f64,
    pub c_n: f64,
    /// Smallest gap divided by `‖v‖²_{L^{2Q}}`.
    pub min_scaled_gap: f64,
    /// Smallest `c_n` for which every trial passes.
    pub empirical_c_n: f64,
    pub all_pass: bool,
}

pub fn lemma21_battery(
    surfaces: &[BatterySurface],
    trials: usize,
    seed: u64,
    q_sob: f64,
    c_n: f64,
) -> Result<Lemma21Battery> {
    require_surfaces(surfaces)?;
    let terms: Vec<_> = trial_seeds(seed, trials)
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let surf = &surfaces[i % surfaces.len()].surface;
            lemma21_terms(surf, &random_field(surf, degree_for(s), s), q_sob)
        })
        .collect::<Result<_>>()?;
    let min_scaled_gap = terms.iter().map(|t| t.gap(c_n) / t.lhs).fold(f64::INFINITY, f64::min);
    let empirical_c_n = terms.iter().map(|t| t.minimal_c_n()).fold(0.0, f64::max);
    Ok(Lemma21Battery {
        trials,
        q_sob,
        c_n,
        min_scaled_gap,
        empirical_c_n,
        all_pass: terms.iter().all(|t| t.gap(c_n) >= 0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationBattery {
    pub trials: usize,
    pub exponents: [f64; 3],
    pub eps: Vec<f64>,
    /// Smallest gap divided by `‖v‖_{L^r}`.
    pub min_scaled_gap: f64,
    pub all_pass: bool,
}

/// Sweeps every `ε` over random fields for exponents `(t, r, s)`.
pub fn interpolation_battery(
    surfaces: &[BatterySurface],
    trials: usize,
    seed: u64,
    exponents: (f64, f64, f64),
    eps: &[f64],
) -> Result<InterpolationBattery> {
    require_surfaces(surfaces)?;
    let (t, r, s) = exponents;
    let gaps: Vec<f64> = trial_seeds(seed, trials)
        .par_iter()
        .enumerate()
        .map(|(i, &sd)| {
            let surf = &surfaces[i % surfaces.len()].surface;
            let f = random_field(surf, degree_for(sd), sd);
            let scale = normalized_norm(surf, &f, r)?;
            let mut worst = f64::INFINITY;
            for &e in eps {
                worst = worst.min(interpolation_gap(surf, &f, e, r, s, t)? / scale);
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let min_scaled_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InterpolationBattery {
        trials,
        exponents: [t, r, s],
        eps: eps.to_vec(),
        min_scaled_gap,
        all_pass: min_scaled_gap >= 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicBattery {
    pub trials: usize,
    pub c_n: f64,
    pub min_scaled_gap: f64,
    pub empirical_c_n: f64,
    pub all_pass: bool,
}

/// Random fields that keep the same angular profile on every snapshot.
pub fn parabolic_battery(trajs: &[FlowTrajectory], trials: usize, seed: u64, c_n: f64) -> Result<ParabolicBattery> {
    require_surfaces(trajs)?;
    let terms: Vec<_> = trial_seeds(seed, trials)
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            let traj = &trajs[i % trajs.len()];
            let fields: Vec<ScalarField> = traj
                .snapshots()
                .iter()
                .map(|snap| random_field(&snap.surface, degree_for(s), s))
                .collect();
            parabolic_terms(traj, &fields)
        })
        .collect::<Result<_>>()?;
    let min_scaled_gap = terms
        .iter()
        .filter(|t| t.lhs > 0.0)
        .map(|t| t.gap(c_n) / t.lhs)
        .fold(f64::INFINITY, f64::min);
    Ok(ParabolicBattery {
        trials,
        c_n,
        min_scaled_gap,
        empirical_c_n: terms.iter().map(|t| t.minimal_c_n()).fold(0.0, f64::max),
        all_pass: terms.iter().all(|t| t.gap(c_n) >= 0.0),
    })
}
