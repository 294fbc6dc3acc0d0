//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.
//!
//! Closed-form values are recomputed here from the shrinking sphere and
//! circle, independently of the crate's oracle module.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mcflow::analysis::{
    battery_surfaces, harnack_check, interpolation_battery, lemma21_battery, michael_simon_battery, moser_constants,
    parabolic_battery, BatterySurface, SobolevExponents, SpacetimeRegion,
};
use mcflow::flow::{estimate_singular_time, run, FlowConfig, FlowTrajectory};
use mcflow::gronwall::{h_bound, h_bound_series, psi_tilde, DEFAULT_TAU1};
use mcflow::monitors::{monitor, FunctionalSpec, LogShift, DEFAULT_DIVERGENCE_SLOPE};
use mcflow::rescale::{invariance_report, rescale_trajectory};
use mcflow::surface::{
    bumpy_sphere, ellipsoid, icosphere, regular_polygon, Connectivity, DiscreteHypersurface, Point, SphericalBump,
};
use mcflow::Error;

type Criterion = (&'static str, fn(&Runs) -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn mixed(p: f64) -> FunctionalSpec {
    FunctionalSpec::MixedNorm { p, q: p }
}

struct Runs {
    sphere: OnceLock<(FlowTrajectory, Duration)>,
    circle: OnceLock<FlowTrajectory>,
    surfaces: OnceLock<Vec<BatterySurface>>,
    harnack_c_n: OnceLock<f64>,
    unit_trajs: OnceLock<Vec<(&'static str, FlowTrajectory)>>,
}

impl Runs {
    /// Unit sphere, level-4 icosphere, default semi-implicit flow to the singularity.
    fn sphere(&self) -> &FlowTrajectory {
        &self
            .sphere
            .get_or_init(|| {
                let start = Instant::now();
                let tr = run(&icosphere(4, 1.0).unwrap(), &FlowConfig::default()).unwrap();
                (tr, start.elapsed())
            })
            .0
    }

    fn sphere_runtime(&self) -> Duration {
        self.sphere();
        self.sphere.get().unwrap().1
    }

    fn circle(&self) -> &FlowTrajectory {
        self.circle
            .get_or_init(|| run(&regular_polygon(2000, 1.0).unwrap(), &FlowConfig::default()).unwrap())
    }

    fn surfaces(&self) -> &[BatterySurface] {
        self.surfaces.get_or_init(|| battery_surfaces(3).unwrap())
    }

    /// Largest minimal `c_n` seen by the lemma battery.
    fn harnack_c_n(&self) -> f64 {
        *self
            .harnack_c_n
            .get_or_init(|| lemma21_battery(self.surfaces(), 400, 0, 10.0, 1.0).unwrap().empirical_c_n)
    }

    /// Three flows, each rescaled so it spans unit time.
    fn unit_trajs(&self) -> &[(&'static str, FlowTrajectory)] {
        self.unit_trajs.get_or_init(|| {
            let short = |s: DiscreteHypersurface, t: f64| {
                let cfg = FlowConfig {
                    t_end: Some(t),
                    ..FlowConfig::default()
                };
                run(&s, &cfg).unwrap()
            };
            let raw = vec![
                ("sphere", self.sphere().truncated(0.2)),
                ("ellipsoid", short(ellipsoid(1.5, 1.0, 0.7, 3).unwrap(), 0.05)),
                (
                    "bumpy-sphere",
                    short(bumpy_sphere(3, &SphericalBump::random(4, 0.3, 7)).unwrap(), 0.05),
                ),
            ];
            raw.into_iter()
                .map(|(name, tr)| {
                    let q = 1.0 / tr.duration().sqrt();
                    (name, rescale_trajectory(&tr, q).unwrap())
                })
                .collect()
        })
    }
}

fn radius_error(tr: &FlowTrajectory, window: f64) -> f64 {
    tr.snapshots()
        .iter()
        .filter(|s| s.time <= window)
        .map(|s| {
            let c = s.surface.centroid();
            let p = s.surface.positions();
            let mean = p.iter().map(|x| (x - c).norm()).sum::<f64>() / p.len() as f64;
            rel(mean, (1.0 - 4.0 * s.time).sqrt())
        })
        .fold(0.0, f64::max)
}

fn c1_sphere_flow(r: &Runs) -> Outcome {
    let tr = r.sphere();
    let fit = estimate_singular_time(tr).unwrap();
    let err = radius_error(tr, 0.2);
    let secs = r.sphere_runtime().as_secs_f64();
    outcome(
        (0.245..=0.255).contains(&fit.t_est) && err <= 0.01 && secs <= 120.0,
        format!(
            "T = {:.5}, radius error on [0, 0.2] = {:.3}%, {} snapshots in {secs:.1} s",
            fit.t_est,
            100.0 * err,
            tr.len()
        ),
    )
}

fn c2_circle_flow(r: &Runs) -> Outcome {
    let fit = estimate_singular_time(r.circle()).unwrap();
    outcome(
        (0.49..=0.51).contains(&fit.t_est) && (fit.alpha - 0.5).abs() <= 0.05,
        format!("T = {:.5}, alpha = {:.4}", fit.t_est, fit.alpha),
    )
}

fn c3_critical_oracle(r: &Runs) -> Outcome {
    // |A|⁴·4πr² = 16π/(1 − 4t) and |A|³·2πr = 2π/(1 − 2t)
    let sphere_exact = 4.0 * PI * 5f64.ln();
    let circle_exact = PI * 5f64.ln();
    let s = monitor(r.sphere(), mixed(4.0), DEFAULT_DIVERGENCE_SLOPE)
        .unwrap()
        .cumulative_at(0.2)
        .unwrap();
    let c = monitor(r.circle(), mixed(3.0), DEFAULT_DIVERGENCE_SLOPE)
        .unwrap()
        .cumulative_at(0.4)
        .unwrap();
    let published = rel(sphere_exact, 20.22) < 1e-3 && rel(circle_exact, 5.056) < 1e-3;
    outcome(
        published && rel(s, sphere_exact) <= 0.05 && rel(c, circle_exact) <= 0.05,
        format!(
            "sphere {s:.4} vs {sphere_exact:.4} ({:.2}%), circle {c:.4} vs {circle_exact:.4} ({:.2}%)",
            100.0 * rel(s, sphere_exact),
            100.0 * rel(c, circle_exact)
        ),
    )
}

fn c4_supercritical_oracle(r: &Runs) -> Outcome {
    // |A|⁵·4πr² = 2^{9/2}π (1 − 4t)^{−3/2}
    let exact = 2f64.powf(3.5) * PI * (5f64.sqrt() - 1.0);
    let got = monitor(r.sphere(), FunctionalSpec::Supercritical, DEFAULT_DIVERGENCE_SLOPE)
        .unwrap()
        .cumulative_at(0.2)
        .unwrap();
    outcome(
        rel(exact, 43.9) < 1e-3 && rel(got, exact) <= 0.05,
        format!("{got:.4} vs {exact:.4} ({:.2}%)", 100.0 * rel(got, exact)),
    )
}

fn c5_divergence(r: &Runs) -> Outcome {
    let slope = |spec| {
        monitor(r.sphere(), spec, DEFAULT_DIVERGENCE_SLOPE)
            .unwrap()
            .divergence
            .expect("sphere run ends at a fitted singularity")
    };
    let crit = slope(mixed(4.0));
    let log = slope(FunctionalSpec::SubcriticalLog { shift: LogShift::Two });
    let six = slope(mixed(6.0));
    outcome(
        crit.divergent && log.divergent && !six.divergent,
        format!(
            "critical (4,4) slope {:.3} divergent={}, subcritical-log slope {:.3} divergent={}, \
             (6,6) slope {:.3} bounded={} (threshold {})",
            crit.slope, crit.divergent, log.slope, log.divergent, six.slope, !six.divergent, crit.threshold
        ),
    )
}

fn c6_rescaling(r: &Runs) -> Outcome {
    let tr = r.sphere();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut pass = true;
    for q in [1.0 / 3.0, 1.0, 2.0, 7.0] {
        let rep = invariance_report(tr, q).unwrap();
        pass &= rep.pass;
        worst = worst
            .max(rep.sup_a_error)
            .max(rel(rep.supercritical_ratio, 1.0 / q))
            .max(rep.critical_norms.iter().map(|c| (c.ratio - 1.0).abs()).fold(0.0, f64::max));
    }
    // Q₂ ∘ Q₁ = Q₁Q₂
    let (a, b) = (2.0, 1.0 / 3.0);
    let twice = rescale_trajectory(&rescale_trajectory(tr, a).unwrap(), b).unwrap();
    let once = rescale_trajectory(tr, a * b).unwrap();
    let mut comp = 0.0f64;
    for (x, y) in twice.snapshots().iter().zip(once.snapshots()) {
        comp = comp.max((x.time - y.time).abs() / y.time.max(f64::MIN_POSITIVE));
        let scale = y.surface.positions().iter().map(|p| p.norm()).fold(0.0, f64::max);
        for (p, q) in x.surface.positions().iter().zip(y.surface.positions()) {
            comp = comp.max((p - q).norm() / scale);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        pass && worst <= 1e-10 && comp <= 1e-10 && secs <= 30.0,
        format!("worst identity error {worst:.2e}, composition error {comp:.2e}, {secs:.1} s"),
    )
}

fn c7_constants(_: &Runs) -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for n in 1..=8usize {
        let nf = n as f64;
        let (c0, c1, c_n) = (1.3, 2.1, 0.7);
        let m = moser_constants(n, (nf + 3.0) / 2.0, c0, c1, c_n).unwrap();
        pass &= m.nu == nf + 2.0;
        pass &= rel(m.c_a, (2.0 * c_n * c0 * c1).powf(nf + 3.0)) <= 1e-12;
    }
    detail.push(format!("nu and C_a closed forms for n = 1..8: {pass}"));

    let qs = [2.5, 3.0, 4.0];
    let vals = [0.5, 1.0, 2.0];
    let beta = 5.0;
    let mut violations = 0;
    let eval = |q, c0, c1, c_n| {
        let m = moser_constants(2, q, c0, c1, c_n).unwrap();
        (m.ln_c_a, m.ln_c_z, m.ln_c_b(beta).unwrap())
    };
    for &q in &qs {
        for &c0 in &vals {
            for &c1 in &vals {
                for &c_n in &vals {
                    let base = eval(q, c0, c1, c_n);
                    for bumped in [eval(q, 2.0 * c0, c1, c_n), eval(q, c0, 2.0 * c1, c_n), eval(q, c0, c1, 2.0 * c_n)] {
                        if !(bumped.0 > base.0 && bumped.1 > base.1 && bumped.2 > base.2) {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    pass &= violations == 0;
    detail.push(format!("strict monotonicity on 3^4 grid: {violations} violations"));
    outcome(pass, detail.join(", "))
}

fn c8_batteries(r: &Runs) -> Outcome {
    let surfaces = r.surfaces();
    let ms = michael_simon_battery(surfaces, 1200, 0).unwrap();
    let l0 = r.harnack_c_n();
    let l1 = lemma21_battery(surfaces, 400, 1, 10.0, 1.0).unwrap().empirical_c_n;
    let trajs: Vec<FlowTrajectory> = r.unit_trajs().iter().map(|(_, t)| t.clone()).collect();
    let p0 = parabolic_battery(&trajs, 24, 0, 1.0).unwrap().empirical_c_n;
    let p1 = parabolic_battery(&trajs, 24, 1, 1.0).unwrap().empirical_c_n;
    let e = SobolevExponents::new(2, 10.0).unwrap();
    let eps: Vec<f64> = (-4..=4).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
    let interp = interpolation_battery(surfaces, 300, 0, (2.0, 2.0 * e.m, 2.0 * e.q_sob), &eps).unwrap();
    let stable = |a: f64, b: f64| a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a.max(b) / a.min(b) <= 2.0;
    outcome(
        ms.trials >= 1000 && ms.max_ratio <= 1.0 && stable(l0, l1) && stable(p0, p1) && interp.min_scaled_gap >= -1e-9,
        format!(
            "Michael-Simon max ratio {:.4} over {} trials, lemma c_n {l0:.3e}/{l1:.3e}, \
             parabolic c_n {p0:.3e}/{p1:.3e}, interpolation min scaled gap {:.3}",
            ms.max_ratio, ms.trials, interp.min_scaled_gap
        ),
    )
}

fn c9_harnack(r: &Runs) -> Outcome {
    let c_n = r.harnack_c_n();
    let (beta, q) = (5.0, 2.5);
    let mut checks = 0;
    let mut passed = 0;
    let mut worst = f64::INFINITY;
    let mut nested = true;
    let mut empty = true;
    for (_, tr) in r.unit_trajs() {
        let pts = tr.first().positions();
        for k in 0..4 {
            let p = pts[k * pts.len() / 4 + 1];
            let center = [p.x, p.y, p.z];
            let rep = harnack_check(tr, center, beta, q, c_n).unwrap();
            checks += 1;
            passed += rep.pass as usize;
            worst = worst.min(rep.ln_margin);
            let outer = SpacetimeRegion::outer(center).samples(tr);
            nested &= SpacetimeRegion::inner(center)
                .samples(tr)
                .iter()
                .all(|s| outer.binary_search(s).is_ok());
        }
        let far = tr.first().centroid() + Point::new(1e3, 0.0, 0.0);
        empty &= matches!(
            harnack_check(tr, [far.x, far.y, far.z], beta, q, c_n),
            Err(Error::EmptyRegion)
        );
    }
    outcome(
        checks >= 10 && passed == checks && nested && empty,
        format!(
            "{passed}/{checks} centers pass at c_n = {c_n:.3e} (min ln margin {worst:.2}), \
             D' within D: {nested}, far center EmptyRegion: {empty}"
        ),
    )
}

fn c10_gronwall(r: &Runs) -> Outcome {
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.005).collect();
    let ones = vec![1.0; times.len()];
    let st = h_bound_series(&times, &ones, &ones, 1.0, 0.0).unwrap();
    // Ψ(1) = ln 3
    let lin = times
        .iter()
        .zip(&st.h)
        .map(|(t, h)| (h - (1.0 + t * 3f64.ln())).abs())
        .fold(0.0, f64::max);

    let mut add = 0.0f64;
    for (c, y, z) in [(1.0, 5.0, 40.0), (0.5, 3.0, 1e6), (2.0, 2.5, 1e12)] {
        let whole = psi_tilde(z, c).unwrap();
        let split = psi_tilde(y, c).unwrap() + psi_tilde(z, y).unwrap();
        add = add.max((whole - split).abs());
    }
    let growth = psi_tilde(1e10, 1.0).unwrap() - psi_tilde(1e2, 1.0).unwrap();

    let sphere = h_bound(r.sphere(), None, DEFAULT_TAU1).unwrap();
    outcome(
        lin <= 1e-12 && add <= 1e-9 && growth >= 1.0 && sphere.comparison_holds && sphere.chain_holds,
        format!(
            "linear case error {lin:.1e}, additivity error {add:.1e}, growth {growth:.3}, \
             sphere comparison margin {:.3}, chain excess {:.3e}",
            sphere.comparison_margin, sphere.chain_excess
        ),
    )
}

/// `Σ_v (2π − Σ corner angles)` straight from the triangles.
fn angle_defect_total(s: &DiscreteHypersurface) -> f64 {
    let Connectivity::Triangles(tris) = s.connectivity() else {
        unreachable!()
    };
    let p = s.positions();
    let mut corner = 0.0;
    for t in tris.iter() {
        for k in 0..3 {
            let (a, b, c) = (p[t[k]], p[t[(k + 1) % 3]], p[t[(k + 2) % 3]]);
            corner += (b - a).angle(&(c - a));
        }
    }
    2.0 * PI * s.vertex_count() as f64 - corner
}

fn c11_geometry(_: &Runs) -> Outcome {
    let shapes = [
        icosphere(3, 1.0).unwrap(),
        ellipsoid(2.0, 1.0, 0.6, 3).unwrap(),
        bumpy_sphere(3, &SphericalBump::random(4, 0.25, 3)).unwrap(),
    ];
    let (mut gb, mut ident, mut rigid, mut dil) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let rot = nalgebra::Rotation3::from_euler_angles(0.4, -1.3, 2.2);
    let shift = Point::new(0.7, -3.0, 1.1);
    for s in &shapes {
        let target = 2.0 * PI * s.euler_characteristic() as f64;
        let k = s.gaussian_curvature().unwrap();
        let total: f64 = k.iter().zip(s.weights()).map(|(k, w)| k * w).sum();
        gb = gb.max(rel(total, target)).max(rel(angle_defect_total(s), target));

        let a2max = s.a_squared().iter().fold(0.0f64, |m, &v| m.max(v));
        for i in 0..s.vertex_count() {
            let h = s.mean_curvature()[i];
            let expect = (h * h - 2.0 * k[i]).max(0.0);
            ident = ident.max((s.a_squared()[i] - expect).abs() / a2max);
        }

        let m = s.map_positions(|p| rot * p + shift).unwrap();
        let hmax = s.mean_curvature().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..s.vertex_count() {
            rigid = rigid
                .max((m.mean_curvature()[i] - s.mean_curvature()[i]).abs() / hmax)
                .max((m.a_squared()[i] - s.a_squared()[i]).abs() / a2max);
        }
        rigid = rigid.max(rel(m.measure(), s.measure()));

        let lambda = 3.5;
        let d = s.map_positions(|p| p * lambda).unwrap();
        dil = dil.max(rel(d.measure(), s.measure() * lambda * lambda));
        for i in 0..s.vertex_count() {
            dil = dil.max((d.a_squared()[i] * lambda * lambda - s.a_squared()[i]).abs() / a2max);
        }
    }
    outcome(
        gb <= 1e-9 && ident <= 1e-12 && rigid <= 1e-10 && dil <= 1e-12,
        format!("Gauss-Bonnet {gb:.1e}, |A|^2 identity {ident:.1e}, rigid motion {rigid:.1e}, dilation {dil:.1e}"),
    )
}

fn main() {
    let runs = Runs {
        sphere: OnceLock::new(),
        circle: OnceLock::new(),
        surfaces: OnceLock::new(),
        harnack_c_n: OnceLock::new(),
        unit_trajs: OnceLock::new(),
    };
    let criteria: [Criterion; 11] = [
        ("sphere flow accuracy", c1_sphere_flow),
        ("circle flow accuracy", c2_circle_flow),
        ("critical-functional oracle", c3_critical_oracle),
        ("supercritical oracle", c4_supercritical_oracle),
        ("divergence dichotomy", c5_divergence),
        ("exact rescaling", c6_rescaling),
        ("constants", c7_constants),
        ("inequality batteries", c8_batteries),
        ("harnack end-to-end", c9_harnack),
        ("gronwall", c10_gronwall),
        ("geometry", c11_geometry),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(|| check(&runs))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !res.pass as usize;
        println!(
            "criterion {:>2} {name}: {} | {}",
            i + 1,
            if res.pass { "PASS" } else { "FAIL" },
            res.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
