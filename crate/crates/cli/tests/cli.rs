use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn cascade(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(args)
        .env("CASCADE_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Reads `name,row,col,value` and returns the entry `(label, 1, 1)`.
fn gain(csv: &Path, label: &str) -> f64 {
    let text = fs::read_to_string(csv).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{label},1,1,")))
        .unwrap_or_else(|| panic!("{label} missing in {text}"));
    line.rsplit(',').next().unwrap().parse().unwrap()
}

fn column(csv: &Path, name: &str) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[k])
        })
        .collect()
}

const C2_ZERO: &str = r#"
kind = "finite_cascade"
name = "blind"

[cascade]
a1 = [[-1.0]]
b1 = [[1.0]]
c1 = [[1.0]]
a2 = [[0.5]]
b2 = [[1.0]]
c2 = [[0.0]]

[design]
sensor_poles = [-2.0]
plant_poles = [-1.0]
"#;

#[test]
fn design_heat_reports_reference_gains() {
    let out = TempDir::new().unwrap();
    let o = cascade(
        out.path(),
        &["design", scenarios().join("fig1_heat.toml").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("F1 = (-1.584721, -3.947878)^T"), "{text}");
    assert!(text.contains("sigma(Lambda_N + L_N Gamma_N) = {-2.000000}"), "{text}");
    let gains = out.path().join("fig1_heat/gains.csv");
    assert!((gain(&gains, "F1") + 1.5847).abs() < 1e-3);
    assert!((gain(&gains, "L_N") - 5.0978).abs() < 1e-3);
    assert!(out.path().join("fig1_heat/gain_F2.csv").exists());
    assert!(out.path().join("fig1_heat/summary.txt").exists());
}

#[test]
fn unobservable_plant_is_a_design_failure() {
    let out = TempDir::new().unwrap();
    let f = write(out.path(), "blind.toml", C2_ZERO);
    let o = cascade(out.path(), &["design", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("observ"), "{}", stderr(&o));
    let o = cascade(out.path(), &["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("cascade observable (Kalman rank): false"));
}

#[test]
fn scalar_delay_gains_match_closed_form() {
    let out = TempDir::new().unwrap();
    let o = cascade(
        out.path(),
        &["design", scenarios().join("delay_scalar.toml").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // a = 0.5, tau = 1, pole -1: F = p - a, F2 = -e^{a tau} F, C1S = -e^{-a tau}
    let gains = out.path().join("delay_scalar/gains.csv");
    let (a, tau, p) = (0.5f64, 1.0f64, -1.0f64);
    assert!((gain(&gains, "F") - (p - a)).abs() < 1e-10);
    assert!((gain(&gains, "F2") - (a - p) * (a * tau).exp()).abs() < 1e-9);
    assert!((gain(&gains, "C1S") + (-a * tau).exp()).abs() < 1e-10);
}

#[test]
fn delay_error_decays_only_after_flush() {
    let out = TempDir::new().unwrap();
    let o = cascade(
        out.path(),
        &["simulate", scenarios().join("delay_scalar.toml").to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = column(&out.path().join("delay_scalar/trajectory.csv"), "err_x2_2norm");
    let at = |t: f64| {
        e.iter()
            .min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs()))
            .unwrap()
            .1
    };
    // no innovation reaches the observer before t = tau: the error grows like e^{a t}
    assert!((at(0.5) - 0.25f64.exp()).abs() < 1e-3, "{}", at(0.5));
    assert!(at(0.9) > at(0.5) && at(0.9) > 1.5, "{}", at(0.9));
    assert!(at(15.0) < 1e-4);
    assert!(stdout(&o).contains("fitted decay rate of err_combined"));
}

#[test]
fn zero_initial_error_stays_zero() {
    let out = TempDir::new().unwrap();
    let text = fs::read_to_string(scenarios().join("finite_cascade.toml"))
        .unwrap()
        .replace("x_hat = [0.0, 0.0, 0.0]", "x_hat = [1.0, -1.0, 0.5]")
        .replace("name = \"finite_cascade\"", "name = \"exact\"");
    let f = write(out.path(), "exact.toml", &text);
    let o = cascade(out.path(), &["simulate", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let e = column(&out.path().join("exact/trajectory.csv"), "err_combined");
    assert!(e.iter().all(|(_, v)| *v <= 1e-9));
    assert!(stdout(&o).contains("err_combined: initial 0, final "), "{}", stdout(&o));
}

#[test]
fn stability_violation_exits_before_stepping() {
    let out = TempDir::new().unwrap();
    let text = fs::read_to_string(scenarios().join("fig1_heat.toml"))
        .unwrap()
        .replace("dt = 4e-5", "dt = 1e-4");
    let f = write(out.path(), "unstable.toml", &text);
    let o = cascade(out.path(), &["simulate", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"), "{}", stderr(&o));
    assert!(!out.path().join("fig1_heat").exists());
}

#[test]
fn validation_errors_name_the_field() {
    let out = TempDir::new().unwrap();
    let f = write(
        out.path(),
        "bad.toml",
        &C2_ZERO.replace("a2 = [[0.5]]", "a2 = [[0.5, 1.0]]"),
    );
    let o = cascade(out.path(), &["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cascade"), "{}", stderr(&o));
    let f = write(out.path(), "typo.toml", &C2_ZERO.replace("plant_poles", "plant_pole"));
    let o = cascade(out.path(), &["design", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("plant_pole"), "{}", stderr(&o));
    let o = cascade(out.path(), &["design", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_scenarios_give_identical_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for name in ["regulation_harmonic", "delay_scalar"] {
        let f = scenarios().join(format!("{name}.toml"));
        for d in [&a, &b] {
            let o = cascade(d.path(), &["simulate", f.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        }
        for file in ["trajectory.csv", "gains.csv", "summary.txt"] {
            let x = fs::read(a.path().join(name).join(file)).unwrap();
            let y = fs::read(b.path().join(name).join(file)).unwrap();
            assert_eq!(x, y, "{name}/{file}");
        }
    }
}

#[test]
fn regulation_tracks_the_reference() {
    let out = TempDir::new().unwrap();
    let o = cascade(
        out.path(),
        &[
            "simulate",
            scenarios().join("regulation_harmonic.toml").to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let y = column(&out.path().join("regulation_harmonic/trajectory.csv"), "y");
    assert!((y.last().unwrap().0 - 20.0).abs() < 1e-9);
    assert!(y.last().unwrap().1.abs() <= 1e-3);
}

#[test]
fn heat_simulation_writes_surfaces_and_selected_series() {
    let out = TempDir::new().unwrap();
    let text = fs::read_to_string(scenarios().join("fig1_heat.toml"))
        .unwrap()
        .replace("T = 3.0", "T = 0.5")
        .replace(
            "decay_window = [1.5, 3.0]",
            "series = [\"err_sensor_2norm\", \"err_pde_L2norm\"]",
        );
    let f = write(out.path(), "short.toml", &text);
    let o = cascade(out.path(), &["simulate", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dir = out.path().join("fig1_heat");
    let traj = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,err_sensor_2norm,err_pde_L2norm");
    assert_eq!(traj.lines().count(), 1 + 51);
    for t in ["0", "0.25", "0.5"] {
        let snap = fs::read_to_string(dir.join(format!("snapshot_t{t}.csv"))).unwrap();
        assert_eq!(snap.lines().next().unwrap(), "x,w,w_hat,err_w");
        assert_eq!(snap.lines().count(), 1 + 101);
    }
    assert!(!dir.join("snapshot_t1.csv").exists());
}

#[test]
fn unknown_series_is_rejected() {
    let out = TempDir::new().unwrap();
    let text =
        fs::read_to_string(scenarios().join("finite_cascade.toml")).unwrap() + "\n[output]\nseries = [\"nope\"]\n";
    let f = write(out.path(), "sel.toml", &text);
    let o = cascade(out.path(), &["simulate", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("output.series"));
}

#[test]
fn reproduce_fig1_names_failing_criteria() {
    let out = TempDir::new().unwrap();
    let o = cascade(out.path(), &["reproduce-fig1"]);
    let text = stdout(&o);
    assert!(text.contains("PASS [1] gain reproduction"), "{text}");
    let table = fs::read_to_string(out.path().join("fig1/gain_comparison.csv")).unwrap();
    assert!(table.starts_with("quantity,computed,reference,abs_diff,converged,converged_reference"));
    assert!(out.path().join("fig1/trajectory.csv").exists());
    assert!(out.path().join("fig1/snapshot_t3.csv").exists());
    // the convergence targets are not met by this configuration
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[2] convergence reproduction"), "{}", stderr(&o));

    let o = cascade(out.path(), &["reproduce-fig1", "--mu", "1", "--T", "1.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[1] gain reproduction"), "{}", stderr(&o));

    let o = cascade(out.path(), &["reproduce-fig1", "--dx", "0.01", "--dt", "1e-4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_runs_every_scenario() {
    let src = TempDir::new().unwrap();
    let out = TempDir::new().unwrap();
    for name in ["finite_cascade", "regulation_harmonic", "delay_scalar"] {
        fs::copy(
            scenarios().join(format!("{name}.toml")),
            src.path().join(format!("{name}.toml")),
        )
        .unwrap();
    }
    let o = cascade(out.path(), &["sweep", src.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for name in ["finite_cascade", "regulation_harmonic", "delay_scalar"] {
        assert!(out.path().join(name).join("trajectory.csv").exists());
    }
    write(
        src.path(),
        "blind.toml",
        &format!("{C2_ZERO}\n[sim]\ndt = 0.01\nT = 1.0\n"),
    );
    let o = cascade(out.path(), &["sweep", src.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let summary = fs::read_to_string(out.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
    assert!(summary.lines().any(|l| l.contains(",blind,3,")), "{summary}");
}

#[test]
fn out_dir_flag_overrides_environment() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let f = scenarios().join("finite_cascade.toml");
    let o = cascade(
        env_dir.path(),
        &[
            "--out-dir",
            flag_dir.path().to_str().unwrap(),
            "design",
            f.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.path().join("finite_cascade/gains.csv").exists());
    assert!(!env_dir.path().join("finite_cascade").exists());
}
