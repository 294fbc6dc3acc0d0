use std::path::Path;

use mcflow::cli::main_with_args;
use serde_json::Value;

fn mcflow(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("mcflow").chain(args.iter().copied()))
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn constants_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let code = mcflow(&[
        "constants", "--n", "2", "--q", "2.5", "--c0", "1", "--c1", "1", "--cn", "1", "--beta", "5", "--report", s(&out),
    ]);
    assert_eq!(code, 0);
    let v = report(&out);
    assert_eq!(v["nu"].as_f64().unwrap(), 4.0);
    assert!((v["c_a"].as_f64().unwrap() - 32.0).abs() < 1e-9, "{v}");
    // q at the threshold (n+2)/2
    assert_eq!(mcflow(&["constants", "--n", "2", "--q", "2", "--c0", "1", "--c1", "1", "--cn", "1"]), 2);
}

#[test]
fn usage_errors_come_from_the_parser() {
    assert_eq!(mcflow(&["flow", "run"]), 2);
    assert_eq!(mcflow(&["no-such-command"]), 2);
    assert_eq!(mcflow(&["--version"]), 0);
}

#[test]
fn circle_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let code = mcflow(&[
        "flow", "run", "--shape", "circle", "--vertices", "200", "--until-singular", "--out", s(&run),
    ]);
    assert_eq!(code, 0);
    assert!(run.join("manifest.json").exists() && run.join("series.csv").exists());
    let m = report(&run.join("manifest.json"));
    assert!((m["estimated_t"].as_f64().unwrap() - 0.5).abs() < 0.01);

    let rep = dir.path().join("monitor.json");
    let csv = dir.path().join("csv");
    assert_eq!(
        mcflow(&["flow", "monitor", "--traj", s(&run), "--csv-dir", s(&csv), "--report", s(&rep)]),
        0
    );
    assert!(std::fs::read_dir(&csv).unwrap().count() >= 3);

    let rep = dir.path().join("gronwall.json");
    assert_eq!(mcflow(&["flow", "gronwall", "--traj", s(&run), "--report", s(&rep)]), 0);
    assert_eq!(report(&rep)["verdict"], "SubcriticalDiverges", "{}", report(&rep));

    let scaled = dir.path().join("scaled");
    assert_eq!(mcflow(&["flow", "rescale", "--traj", s(&run), "--factor", "3", "--out", s(&scaled)]), 0);
    let sm = report(&scaled.join("manifest.json"));
    assert_eq!(sm["rescale"]["factor"].as_f64().unwrap(), 3.0);
    // --factor and --normalize exclude each other
    assert_eq!(
        mcflow(&["flow", "rescale", "--traj", s(&run), "--factor", "3", "--normalize", "1", "--out", s(&scaled)]),
        2
    );

    assert_eq!(mcflow(&["oracle", "compare", "--traj", s(&run)]), 0);

    let plots = dir.path().join("plots");
    assert_eq!(mcflow(&["report", "plot", "--traj", s(&run), "--out", s(&plots)]), 0);
    for f in ["monitors.svg", "silhouettes.svg"] {
        assert!(std::fs::read_to_string(plots.join(f)).unwrap().starts_with("<svg"));
    }
}

#[test]
fn locked_output_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".lock"), "").unwrap();
    let code = mcflow(&[
        "flow", "run", "--shape", "circle", "--vertices", "50", "--t-end", "0.01", "--out", s(dir.path()),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn config_files_are_strict() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[flow]\nc_stab = 0.05\n\n[analysis]\nc_n = 0.5\n").unwrap();
    let out = dir.path().join("run");
    assert_eq!(
        mcflow(&[
            "--config", s(&good), "flow", "run", "--shape", "circle", "--vertices", "60", "--t-end", "0.02", "--out", s(&out),
        ]),
        0
    );
    let m = report(&out.join("manifest.json"));
    assert_eq!(m["config"]["c_stab"].as_f64().unwrap(), 0.05);
    assert_eq!(m["analysis"]["c_n"].as_f64().unwrap(), 0.5);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[flow]\nc_stabb = 0.05\n").unwrap();
    assert_eq!(mcflow(&["--config", s(&bad), "constants", "--n", "2", "--q", "3", "--c0", "1", "--c1", "1", "--cn", "1"]), 2);
}

#[test]
fn sphere_verifiers() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("ms.json");
    assert_eq!(
        mcflow(&["verify", "michael-simon", "--shape", "sphere", "--level", "2", "--report", s(&rep)]),
        0
    );
    let r = report(&rep);
    assert!(r.to_string().contains("ratio"), "{r}");

    let run = dir.path().join("run");
    assert_eq!(
        mcflow(&["flow", "run", "--shape", "sphere", "--level", "2", "--t-end", "0.1", "--out", s(&run)]),
        0
    );
    let rep = dir.path().join("h.json");
    assert_eq!(
        mcflow(&[
            "verify", "harnack", "--traj", s(&run), "--unit-time", "--random-centers", "3", "--report", s(&rep),
        ]),
        0
    );
    assert_eq!(mcflow(&["verify", "parabolic-sobolev", "--traj", s(&run)]), 0);
    // the run does not reach t = 1 without rescaling
    assert_eq!(mcflow(&["verify", "harnack", "--traj", s(&run), "--center", "0,0,1"]), 2);
    assert_eq!(mcflow(&["verify", "interpolation", "--shape", "sphere", "--level", "2"]), 0);
    assert_eq!(mcflow(&["oracle", "sphere", "--t", "0.1,0.2"]), 0);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mcflow");
    let out = std::process::Command::new(bin)
        .args(["oracle", "sphere", "--n", "2", "--t", "0.3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error ["), "{err}");
    let ok = std::process::Command::new(bin)
        .args(["oracle", "sphere", "--t", "0.1"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0.1"));
}
