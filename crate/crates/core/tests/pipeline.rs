use mcflow::flow::{estimate_singular_time, run, FlowConfig, FlowStatus};
use mcflow::manifest::{default_functionals, read_manifest, read_run, write_run, AnalysisParams, RunManifest};
use mcflow::oracle::{compare, SphereSolution};
use mcflow::surface::{bumpy_sphere, icosphere, regular_polygon, SphericalBump};
use mcflow::Error;

#[test]
fn run_directory_round_trip() {
    let tr = run(&regular_polygon(200, 1.0).unwrap(), &FlowConfig::default()).unwrap();
    assert_eq!(tr.status(), FlowStatus::SingularityDetected);
    let fns = default_functionals(1);
    let m = RunManifest::build(&tr, &fns, &AnalysisParams::default(), vec![], 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &tr, &m).unwrap();
    assert!(!dir.path().join(".lock").exists());

    let (back_m, back) = read_run(dir.path()).unwrap();
    assert_eq!(back_m, m);
    assert_eq!(RunManifest::from_json(&m.to_json().unwrap()).unwrap(), m);
    assert_eq!(back.len(), tr.len());
    for (a, b) in back.snapshots().iter().zip(tr.snapshots()) {
        assert_eq!(a.time, b.time);
        assert_eq!(a.surface.positions(), b.surface.positions());
    }
    let t = m.estimated_t.unwrap();
    assert!((t - 0.5).abs() < 0.01, "{t}");
    assert_eq!(estimate_singular_time(&back).unwrap().t_est, t);
}

#[test]
fn strided_runs_keep_first_and_last() {
    let cfg = FlowConfig {
        t_end: Some(0.1),
        ..FlowConfig::default()
    };
    let tr = run(&regular_polygon(100, 1.0).unwrap(), &cfg).unwrap();
    let m = RunManifest::build(&tr, &default_functionals(1), &AnalysisParams::default(), vec![], 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &tr, &m).unwrap();
    let (_, back) = read_run(dir.path()).unwrap();
    assert_eq!(back.first().positions(), tr.first().positions());
    assert_eq!(back.last().time, tr.last().time);
    assert_eq!(back.len(), (tr.len() - 1) / 7 + 1 + usize::from(!(tr.len() - 1).is_multiple_of(7)));
    // series table keeps every step
    let csv = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(csv.lines().count(), tr.len() + 1);
}

#[test]
fn second_writer_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let _held = mcflow::manifest::DirLock::acquire(dir.path()).unwrap();
    let tr = run(
        &regular_polygon(50, 1.0).unwrap(),
        &FlowConfig {
            t_end: Some(0.01),
            ..FlowConfig::default()
        },
    )
    .unwrap();
    let m = RunManifest::build(&tr, &default_functionals(1), &AnalysisParams::default(), vec![], 1).unwrap();
    assert!(matches!(write_run(dir.path(), &tr, &m), Err(Error::InvalidInput(_))));
    assert!(matches!(read_manifest(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn flows_are_deterministic() {
    let cfg = FlowConfig {
        t_end: Some(0.03),
        ..FlowConfig::default()
    };
    let s = bumpy_sphere(3, &SphericalBump::random(3, 0.2, 4)).unwrap();
    let a = run(&s, &cfg).unwrap();
    let b = run(&s, &cfg).unwrap();
    assert_eq!(a.len(), b.len());
    assert_eq!(a.last().surface.positions(), b.last().surface.positions());
}

#[test]
fn sphere_matches_closed_form() {
    let cfg = FlowConfig {
        t_end: Some(0.2),
        ..FlowConfig::default()
    };
    let tr = run(&icosphere(3, 1.0).unwrap(), &cfg).unwrap();
    let rep = compare(&tr, &SphereSolution::new(2, 1.0).unwrap(), &default_functionals(2)).unwrap();
    assert!(rep.max.radius < 0.01, "{rep:?}");
    assert!(rep.max.measure < 0.02, "{rep:?}");
    assert!(matches!(
        compare(&tr, &SphereSolution::new(2, 2.0).unwrap(), &[]),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn remeshing_a_resolved_bumpy_sphere() {
    let cfg = FlowConfig {
        t_end: Some(0.08),
        ..FlowConfig::default()
    };
    let tr = run(&bumpy_sphere(4, &SphericalBump::random(4, 0.3, 7)).unwrap(), &cfg).unwrap();
    let events = tr.remesh_events();
    assert!(!events.is_empty(), "the flow should trigger remeshing");
    for e in events {
        for ([p, before], [_, after]) in e.moments_before.iter().zip(&e.moments_after) {
            let change = (after / before - 1.0).abs();
            let limit = if *p <= 4.0 { 0.01 } else { 0.02 };
            assert!(change <= limit, "p = {p}: {change} at t = {}", e.time);
        }
    }
    for s in tr.snapshots() {
        assert_eq!(s.surface.euler_characteristic(), 2);
    }
}
