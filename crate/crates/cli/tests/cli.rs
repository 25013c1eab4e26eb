use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wsnloc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsnloc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: [&str; 5] = ["--seeds", "2", "--iterations", "15", "--deterministic"];

#[test]
fn run_writes_traces_means_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--alg", "sf-nesterov,admm-h", "--out", "res"];
    args.extend(SMALL);
    let stdout = ok(&wsnloc(dir.path(), &args));
    assert!(stdout.contains("CRLB"));
    let res = dir.path().join("res");
    for alg in ["sf-nesterov", "admm-h"] {
        for name in [format!("{alg}_seed0.csv"), format!("{alg}_seed1.csv"), format!("{alg}_mean.csv")] {
            let text = fs::read_to_string(res.join(&name)).unwrap();
            assert!(text.starts_with(&format!("# algorithm={alg}\n")), "{name}");
            assert!(text.contains("# epsilon_c="));
            assert!(text.contains("iter,rmse,max_gap,mean_gap,nonconvex_frac,messages,elapsed_ms\n"));
            assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 16);
        }
    }
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    assert!(summary.contains("# threshold="));
    let rows: Vec<_> = summary.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "algorithm,final_rmse,iterations_to_threshold,total_messages,crlb_ratio");
    assert!(rows[1].starts_with("sf-nesterov,") && rows[2].starts_with("admm-h,"));
    assert!(!res.read_dir().unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let mut args = vec!["run", "--alg", "admm-h", "--out", out];
        args.extend(SMALL);
        ok(&wsnloc(dir.path(), &args));
    }
    for name in ["admm-h_seed1.csv", "admm-h_mean.csv", "summary.csv"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn unknown_algorithm_fails_with_the_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsnloc(dir.path(), &["run", "--alg", "admm-x"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["sf-nesterov", "admm-sf", "admm-nc", "admm-h"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn bad_inputs_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[engine]\nepsilonc = 1.0\n").unwrap();
    for args in [
        vec!["run", "--scenario", "nowhere"],
        vec!["run", "--scenario", "bad.toml"],
        vec!["run", "--epsilon-c", "0.1,0.2"],
        vec!["run", "--seeds", "0"],
        vec!["crlb", "--network", "missing.txt"],
        vec!["run", "--delta-c", "0.5", "--seeds", "1"],
    ] {
        let out = wsnloc(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.lines().any(|l| l.starts_with("error: ")), "{args:?}: {err}");
        assert!(!err.contains("backtrace"), "{args:?}: {err}");
    }
}

#[test]
fn scenario_file_overrides_reach_the_trace_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("custom.toml"),
        "base = \"n40-sigma001\"\nseeds = 1\niterations = 5\n[scenario]\nnode_count = 30\n[engine]\nepsilon_c = 0.07\n",
    )
    .unwrap();
    ok(&wsnloc(dir.path(), &["run", "--scenario", "custom.toml", "--zeta-c", "0.3", "--out", "o"]));
    let text = fs::read_to_string(dir.path().join("o/admm-h_seed0.csv")).unwrap();
    for line in ["# node_count=30", "# sigma=0.01", "# epsilon_c=0.07", "# zeta_c=0.3", "# iterations=5"] {
        assert!(text.lines().any(|l| l == line), "missing {line}");
    }
}

#[test]
fn generated_network_gives_the_same_bound_as_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(&wsnloc(dir.path(), &["gen-net", "--noise-seed", "3", "--out", "net.txt"]));
    let from_file = ok(&wsnloc(dir.path(), &["crlb", "--network", "net.txt"]));
    let from_seed = ok(&wsnloc(dir.path(), &["crlb", "--seeds", "3,4"]));
    let values = |s: &str| s.split_once(": ").unwrap().1.to_string();
    let seed3 = from_seed.lines().find(|l| l.starts_with("seed 3:")).unwrap();
    assert_eq!(values(from_file.lines().next().unwrap()), values(seed3));
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--epsilon-c", "0.05,0.1", "--tau-c", "0.001,0.01,0.1", "--out", "grid/s.csv"];
    args.extend(SMALL);
    ok(&wsnloc(dir.path(), &args));
    let text = fs::read_to_string(dir.path().join("grid/s.csv")).unwrap();
    assert!(text.contains("# plateau_tolerance=0.05"));
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "epsilon_c,zeta_c,tau_c,iterations_to_plateau,final_rmse,failed");
    assert_eq!(rows.len(), 7);
}

#[test]
fn track_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "track", "--steps", "4", "--iterations-per-step", "5", "--node-count", "30", "--seed", "2", "--alg", "admm-sf",
    ];
    let stdout = ok(&wsnloc(dir.path(), &args));
    assert!(stdout.contains("steady-state RMSE"));
    let text = fs::read_to_string(dir.path().join("out/admm-sf_tracking.csv")).unwrap();
    assert!(text.contains("# trajectory_seed=2\n"));
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "step,rmse,crlb,extended_nodes");
    assert_eq!(rows.len(), 5);
    let out = wsnloc(dir.path(), &["track", "--alg", "sf-nesterov", "--steps", "1"]);
    assert!(!out.status.success());
}
