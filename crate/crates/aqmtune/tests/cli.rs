use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aqmtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqmtune"))
        .args(args)
        .env_remove("AQMTUNE_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

const EXAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/config/example.toml");

#[test]
fn operating_point_values_and_exit_codes() {
    let o = aqmtune(&["operating-point"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("R0 = 0.5333"), "{s}");
    assert!(s.contains("W0 = 3.2000"), "{s}");

    let o = aqmtune(&["operating-point", "--n-flows", "40", "--capacity", "250", "--prop-delay", "0.3"]);
    let s = stdout(&o);
    assert!(s.contains("R0 = 0.7000") && s.contains("W0 = 4.3750"), "{s}");

    // W0 = 0.2 < sqrt(2).
    let o = aqmtune(&["operating-point", "--n-flows", "500", "--capacity", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(aqmtune(&["region", "--r1-steps", "1"]).status.code(), Some(2));
    assert_eq!(aqmtune(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[network]\nflows = 3\n").unwrap();
    assert_eq!(aqmtune(&["--config", cfg.to_str().unwrap(), "operating-point"]).status.code(), Some(2));
    assert_eq!(aqmtune(&["--config", "/nonexistent.toml", "operating-point"]).status.code(), Some(2));
    assert_eq!(aqmtune(&["simulate", "--scenario", "nope"]).status.code(), Some(2));
    assert_eq!(aqmtune(&["simulate", "--controllers", "custom"]).status.code(), Some(2));
}

#[test]
fn example_config_loads() {
    let dir = tempfile::tempdir().unwrap();
    let o = aqmtune(&["--config", EXAMPLE, "--out", &out_arg(dir.path()), "operating-point"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn region_files_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = aqmtune(&["region", "--out", &out_arg(&out), "--r1-min", "3.0", "--r1-max", "3.3", "--r1-steps", "7"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("stabilizing: true"));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["region.csv", "crb.csv", "slices/slice_0003.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("region.csv")).unwrap();
    assert!(csv.starts_with("r1,polygon_id,vertex_index,r2,r0\n"));
    assert!(csv.lines().any(|l| l.starts_with("3.15,")));
    let crb = fs::read_to_string(a.join("crb.csv")).unwrap();
    assert!(crb.starts_with("r1,omega,slope,intercept\n"));
}

#[test]
fn empty_region_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = aqmtune(&[
        "region", "--out", &out_arg(dir.path()), "--r1-min", "-1000000", "--r1-max", "-999999", "--r1-steps", "2",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let o = aqmtune(&["optimize", "--out", &out_arg(dir.path()), "--r1-min", "-1000000", "--r1-max", "-999999", "--r1-steps", "2"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn optimize_small_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "optimize".to_string(),
            "--out".into(),
            out_arg(out),
            "--r1-min".into(),
            "3.0".into(),
            "--r1-max".into(),
            "3.3".into(),
            "--r1-steps".into(),
            "4".into(),
            "--density".into(),
            "8".into(),
            "--freq-points".into(),
            "400".into(),
        ]
    };
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let a = args(&out);
        let o = aqmtune(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (out, stdout(&o))
    };
    let (a, sa) = run("a");
    let (b, sb) = run("b");
    assert!(sa.contains("optimal triplet"));
    assert_eq!(sa.replace(&out_arg(&a), ""), sb.replace(&out_arg(&b), ""));
    for f in ["cost_surface.csv", "slice_minima.csv", "slice_minima.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let minima = fs::read_to_string(a.join("slice_minima.csv")).unwrap();
    assert_eq!(minima.lines().count(), 5);
    let surface = fs::read_to_string(a.join("cost_surface.csv")).unwrap();
    assert!(surface.starts_with("r1,r2,r0,psi,psi_sqrt\n"));
}

#[test]
fn freq_report_and_pi_controller() {
    let dir = tempfile::tempdir().unwrap();
    let o = aqmtune(&["freq", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("closed loop stable: true"), "{s}");
    let csv = fs::read_to_string(dir.path().join("freq.csv")).unwrap();
    assert!(csv.starts_with("omega,s_mag,t_mag,w1s_sq,w2t_sq,cost\n"));
    assert_eq!(csv.lines().count(), 2001);

    let o = aqmtune(&["freq", "--out", &out_arg(dir.path()), "--kp", "0.001", "--ki", "0.0005"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Kd = 0.000000e0"));
}

#[test]
fn open_loop_equilibrium_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = aqmtune(&[
        "simulate",
        "--out",
        &out_arg(dir.path()),
        "--scenario",
        "constant",
        "--controllers",
        "open-loop",
        "--initial",
        "equilibrium",
        "--duration",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("trace_open-loop.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,W,q,p,N,C,Tp"));
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - 3.2).abs() < 3.2e-6 && (v[2] - 100.0).abs() < 1e-4, "{l}");
        assert!((v[3] - 0.1953125).abs() < 1e-15);
    }
    assert!(dir.path().join("queue.svg").exists());
    assert!(dir.path().join("metrics.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_aqmtune"))
        .args(["freq"])
        .env("AQMTUNE_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("freq.csv").exists());
}

#[test]
fn simulate_comparison_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = aqmtune(&[
            "simulate",
            "--out",
            &out_arg(&out),
            "--scenario",
            "robust-sec4",
            "--seed",
            "4",
            "--duration",
            "15",
            "--controllers",
            "optimal,boundary",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["trace_optimal.csv", "trace_boundary.csv", "metrics.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
