use proptest::prelude::*;

use mcflow::analysis::{michael_simon_ratio, moser_constants, random_field};
use mcflow::flow::{run, FlowConfig, RemeshPolicy};
use mcflow::gronwall::{h_bound_series, psi_tilde};
use mcflow::monitors::{criticality, monitor, Criticality, FunctionalSpec, LogShift, DEFAULT_DIVERGENCE_SLOPE};
use mcflow::oracle::SphereSolution;
use mcflow::rescale::{invariance_report, rescale_trajectory};
use mcflow::surface::{bumpy_curve, bumpy_sphere, icosphere, Point, SphericalBump};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn michael_simon_ratio_ignores_dilation_and_rigid_motion(
        seed in 0u64..10_000,
        degree in 1usize..5,
        scale in 0.05f64..20.0,
        angles in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
        shift in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0),
    ) {
        let s = bumpy_sphere(2, &SphericalBump::random(3, 0.2, seed)).unwrap();
        let f = random_field(&s, degree, seed);
        let base = michael_simon_ratio(&s, &f).unwrap();
        prop_assert!(base > 0.0 && base < 1.0);
        let rot = nalgebra::Rotation3::from_euler_angles(angles.0, angles.1, angles.2);
        let t = Point::new(shift.0, shift.1, shift.2);
        let moved = s.map_positions(|p| rot * (p * scale) + t).unwrap();
        let r = michael_simon_ratio(&moved, &f).unwrap();
        prop_assert!(rel(r, base) < 1e-9, "{} vs {}", r, base);
    }

    #[test]
    fn gauss_bonnet_on_random_bumps(seed in 0u64..10_000, amp in 0.0f64..0.35, degree in 1usize..6) {
        let s = bumpy_sphere(2, &SphericalBump::random(degree, amp, seed)).unwrap();
        let total: f64 = s.gaussian_curvature().unwrap().iter().zip(s.weights()).map(|(k, w)| k * w).sum();
        prop_assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn moser_constants_increase_in_c0_c1_cn(
        n in 1usize..9,
        dq in 0.05f64..4.0,
        c0 in 0.01f64..10.0,
        c1 in 0.01f64..10.0,
        c_n in 0.001f64..10.0,
        bump in 1.01f64..3.0,
        beta in 2.0f64..12.0,
    ) {
        let q = (n as f64 + 2.0) / 2.0 + dq;
        let base = moser_constants(n, q, c0, c1, c_n).unwrap();
        for m in [
            moser_constants(n, q, c0 * bump, c1, c_n).unwrap(),
            moser_constants(n, q, c0, c1 * bump, c_n).unwrap(),
            moser_constants(n, q, c0, c1, c_n * bump).unwrap(),
        ] {
            prop_assert!(m.ln_c_a > base.ln_c_a);
            prop_assert!(m.ln_c_z > base.ln_c_z);
            prop_assert!(m.ln_c_b(beta).unwrap() > base.ln_c_b(beta).unwrap());
        }
    }

    #[test]
    fn criticality_matches_scaling_exponent(n in 1usize..6, p in 0.5f64..20.0, q in 0.5f64..20.0) {
        let s = n as f64 / p + 2.0 / q;
        let c = criticality(n, p, q).unwrap();
        if (s - 1.0).abs() > 1e-9 {
            prop_assert_eq!(c, if s < 1.0 { Criticality::Supercritical } else { Criticality::Subcritical });
        }
        // the critical q for this p, when it exists
        if n as f64 / p < 1.0 {
            let qc = 2.0 / (1.0 - n as f64 / p);
            prop_assert_eq!(criticality(n, p, qc).unwrap(), Criticality::Critical);
        }
    }

    #[test]
    fn psi_tilde_is_additive_and_increasing(c in 0.1f64..10.0, a in 0.0f64..20.0, b in 0.0f64..20.0) {
        let (lo, hi) = (a.min(b), a.max(b));
        let y = c * lo.exp();
        let z = c * hi.exp();
        let whole = psi_tilde(z, c).unwrap();
        let split = psi_tilde(y, c).unwrap() + psi_tilde(z, y).unwrap();
        prop_assert!((whole - split).abs() <= 1e-9 * whole.max(1.0));
        prop_assert!(psi_tilde(y, c).unwrap() <= whole);
    }

    #[test]
    fn larger_g_gives_larger_h(
        g in prop::collection::vec(0.0f64..5.0, 30),
        extra in prop::collection::vec(0.0f64..5.0, 30),
        f in prop::collection::vec(0.0f64..50.0, 30),
        c in 0.1f64..5.0,
    ) {
        let times: Vec<f64> = (0..30).map(|k| k as f64 * 0.03).collect();
        let g2: Vec<f64> = g.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let h1 = h_bound_series(&times, &f, &g, c, 0.0).unwrap().h;
        let h2 = h_bound_series(&times, &f, &g2, c, 0.0).unwrap().h;
        prop_assert!(h1.iter().zip(&h2).all(|(a, b)| a <= b));
    }

    #[test]
    fn sphere_critical_norm_is_scale_free(r0 in 0.1f64..10.0, frac in 0.01f64..0.99) {
        let unit = SphereSolution::new(2, 1.0).unwrap();
        let s = SphereSolution::new(2, r0).unwrap();
        let spec = FunctionalSpec::MixedNorm { p: 4.0, q: 4.0 };
        let a = unit.functional(frac * unit.singular_time(), spec, mcflow::oracle::Evaluation::Cumulative).unwrap();
        let b = s.functional(frac * s.singular_time(), spec, mcflow::oracle::Evaluation::Cumulative).unwrap();
        prop_assert!(rel(b, a) < 1e-10);
        // 4π ln(1/(1 − frac)) from |A|⁴·area = 16π/(R₀² − 4t)
        prop_assert!(rel(a, -4.0 * std::f64::consts::PI * (1.0 - frac).ln()) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn curve_flows_keep_invariants(seed in 0u64..1000, amp in 0.05f64..0.3, q in 0.2f64..8.0) {
        let c = bumpy_curve(300, amp, 3, seed).unwrap();
        let cfg = FlowConfig { t_end: Some(0.15), ..FlowConfig::default() };
        let tr = run(&c, &cfg).unwrap();

        // cumulative monitors never decrease
        for spec in [
            FunctionalSpec::Supercritical,
            FunctionalSpec::MixedNorm { p: 3.0, q: 3.0 },
            FunctionalSpec::SubcriticalLog { shift: LogShift::Two },
            FunctionalSpec::SupA,
        ] {
            let m = monitor(&tr, spec, DEFAULT_DIVERGENCE_SLOPE).unwrap();
            prop_assert!(m.cumulative.windows(2).all(|w| w[1] >= w[0]));
        }
        // length strictly decreases
        let len: Vec<f64> = tr.snapshots().iter().map(|s| s.surface.measure()).collect();
        prop_assert!(len.windows(2).all(|w| w[1] < w[0]));
        // remeshing keeps every recorded moment within 1%
        for e in tr.remesh_events() {
            prop_assert!(e.max_relative_change <= 0.01, "{:?}", e);
        }
        prop_assert!(invariance_report(&tr, q).unwrap().pass);
        let twice = rescale_trajectory(&rescale_trajectory(&tr, q).unwrap(), 1.0 / q).unwrap();
        for (a, b) in twice.snapshots().iter().zip(tr.snapshots()) {
            prop_assert!((a.time - b.time).abs() <= 1e-12 * b.time.max(1e-300));
        }
    }
}

#[test]
fn unremeshed_sphere_flow_stays_round() {
    let cfg = FlowConfig {
        t_end: Some(0.1),
        remesh: RemeshPolicy::disabled(),
        ..FlowConfig::default()
    };
    let tr = run(&icosphere(3, 1.0).unwrap(), &cfg).unwrap();
    assert!(tr.remesh_events().is_empty());
    let last = &tr.last().surface;
    let c = last.centroid();
    let r: Vec<f64> = last.positions().iter().map(|p| (p - c).norm()).collect();
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo - 1.0 < 0.02, "{lo} {hi}");
}
