//! Subcommand pipelines. Each returns a [`Report`]; `main` prints it and
//! maps it to an exit code.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cascade_core::delay::{
    design_delay_observer_with, simulate_delay_observer, DelayGains, DelayInitial, DelayObserverForm, DelayPlant,
    DEFAULT_DELAY_GRID,
};
use cascade_core::design::{
    check_cascade_observability, design_cascade_gains, design_cascade_gains_with_f0, error_system_matrix,
    is_observable_pair, place_poles_observer, simulate_cascade_observer, verify_block_decoupling, CascadeSystem,
    ObserverGains,
};
use cascade_core::fig1;
use cascade_core::grid::{Quadrature, SpatialFunction};
use cascade_core::heat::{
    design_heat_observer_with, error_system_margin, heat_sylvester_s, lambda, modal_coefficients_with, select_n,
    simulate_heat_observer, verify_truncated_spectrum, HeatDesign, HeatDesignOptions, HeatInitial, HeatPlant,
};
use cascade_core::linalg::eigenvalues;
use cascade_core::regulation::{
    check_regulation_observability, closed_loop_matrix, design_regulation_observer, observer_error_matrix,
    simulate_regulation_closed_loop, solve_regulator_equations, RegulationGains, RegulationInitial, RegulationProblem,
    RegulatorSolution,
};
use cascade_core::sim::{fit_decay_rate, SimConfig, Trajectory};
use cascade_core::sylvester::{residual, SylvesterProblem};
use cascade_core::Matrix;

use crate::error::{CliError, EXIT_ACCEPTANCE, EXIT_DESIGN, EXIT_OK};
use crate::output::{fmt_complex_list, fmt_matrix, fmt_num, fmt_short, path_list, RunDir};
use crate::scenario::{grid_intervals, matrix, poles, DelayForm, Scenario, System};

/// Text shown to the user plus the process exit code.
#[derive(Debug)]
pub struct Report {
    pub text: String,
    pub code: u8,
    /// Named reason when `code` is nonzero.
    pub failure: Option<String>,
}

impl Report {
    fn ok(text: String) -> Self {
        Report {
            text,
            code: EXIT_OK,
            failure: None,
        }
    }
}

/// Where a run writes its files: `<root>/<name>` when an override root is
/// given, else `output.dir`, else `out/<name>`.
pub fn run_dir(scn: &Scenario, path: &Path, root: Option<&Path>) -> PathBuf {
    let name = scn.run_name(path);
    match (root, &scn.output.dir) {
        (Some(r), _) => r.join(name),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("out").join(name),
    }
}

enum Designed {
    Cascade(CascadeSystem, ObserverGains),
    Delay(DelayPlant, DelayGains),
    Heat(HeatPlant, HeatDesign),
    Regulation(RegulationProblem, RegulatorSolution, RegulationGains),
}

fn sensor_gain(scn: &Scenario, a1: &Matrix, c1: &Matrix) -> Result<Matrix, CliError> {
    match (&scn.design.f0, &scn.design.sensor_poles) {
        (Some(f0), _) => {
            let f0 = matrix("design.f0", f0)?;
            if f0.shape() != (a1.rows(), c1.rows()) {
                return Err(CliError::field(
                    "design.f0",
                    format!("shape {:?}, expected {:?}", f0.shape(), (a1.rows(), c1.rows())),
                ));
            }
            Ok(f0)
        }
        (None, Some(p)) => Ok(place_poles_observer(a1, c1, &poles(p)).map_err(|e| match e {
            cascade_core::Error::Design(_) => {
                cascade_core::Error::Design("sensor pair (A1, C1) is not observable".into())
            }
            other => other,
        })?),
        (None, None) => Err(CliError::field("design.sensor_poles", "sensor_poles or f0 is required")),
    }
}

fn delay_grid(scn: &Scenario, p: &DelayPlant) -> Result<usize, CliError> {
    match scn.sim.as_ref().and_then(|s| s.dx) {
        Some(dx) => grid_intervals("sim.dx", p.tau, dx),
        None => Ok(DEFAULT_DELAY_GRID),
    }
}

fn design(scn: &Scenario, sys: System) -> Result<Designed, CliError> {
    let d = &scn.design;
    Ok(match sys {
        System::Cascade(sys) => {
            let plant = poles(d.plant_poles.as_deref().unwrap_or_default());
            let g = match &d.sensor_poles {
                Some(sp) if d.f0.is_none() => design_cascade_gains(&sys, &poles(sp), &plant)?,
                _ => {
                    let f0 = sensor_gain(scn, &sys.sensor.a, &sys.sensor.c)?;
                    design_cascade_gains_with_f0(&sys, f0, &plant)?
                }
            };
            Designed::Cascade(sys, g)
        }
        System::Delay(p) => {
            let form = match d.form.unwrap_or_default() {
                DelayForm::Conjugated => DelayObserverForm::Conjugated,
                DelayForm::Direct => DelayObserverForm::Direct,
            };
            let grid = delay_grid(scn, &p)?;
            let g = design_delay_observer_with(&p, &poles(d.plant_poles.as_deref().unwrap_or_default()), grid, form)?;
            Designed::Delay(p, g)
        }
        System::Heat(p) => {
            let f0 = sensor_gain(scn, &p.a1, &p.c1)?;
            let opts = HeatDesignOptions {
                quadrature: scn.quadrature(),
                ..HeatDesignOptions::default()
            };
            let grid = d.grid.unwrap_or(fig1::DESIGN_GRID);
            let hd = design_heat_observer_with(
                &p,
                &f0,
                &poles(d.modal_poles.as_deref().unwrap_or_default()),
                grid,
                opts,
            )?;
            Designed::Heat(p, hd)
        }
        System::Regulation(p) => {
            let rs = solve_regulator_equations(&p)?;
            let g = design_regulation_observer(&p, &poles(d.exo_poles.as_deref().unwrap_or_default()))?;
            Designed::Regulation(p, rs, g)
        }
    })
}

fn spectrum_modes(scn: &Scenario, p: &HeatPlant) -> Result<usize, CliError> {
    let j = scn.design.spectrum_modes.unwrap_or(fig1::SPECTRUM_MODES);
    if j <= select_n(p.mu) {
        return Err(CliError::field(
            "design.spectrum_modes",
            format!("must exceed the {} corrected modes", select_n(p.mu)),
        ));
    }
    Ok(j)
}

/// Gain files and summary lines of a finished design.
fn describe(scn: &Scenario, dsg: &Designed, dir: &RunDir, out: &mut String) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    match dsg {
        Designed::Cascade(sys, g) => {
            let af0 = &sys.sensor.a + &(&g.f0 * &sys.sensor.c);
            let c1s = &sys.sensor.c * &g.s;
            let plant_block = &sys.plant.a + &(&g.f2 * &c1s);
            let err = error_system_matrix(sys, g)?;
            let prob = SylvesterProblem::new(af0.clone(), sys.plant.a.clone(), sys.interconnection())?;
            let _ = writeln!(out, "F0 = {}", fmt_matrix(&g.f0));
            let _ = writeln!(out, "S  = {}", fmt_matrix(&g.s));
            let _ = writeln!(out, "F2 = {}", fmt_matrix(&g.f2));
            let _ = writeln!(out, "F1 = {}", fmt_matrix(&g.f1));
            let _ = writeln!(
                out,
                "sigma(A1 + F0 C1)   = {}",
                fmt_complex_list(&eigenvalues(&af0)?.eigenvalues)
            );
            let _ = writeln!(
                out,
                "sigma(A2 + F2 C1 S) = {}",
                fmt_complex_list(&eigenvalues(&plant_block)?.eigenvalues)
            );
            let _ = writeln!(
                out,
                "error system Hurwitz margin: {}",
                fmt_num(eigenvalues(&err)?.stability_margin)
            );
            let _ = writeln!(out, "Sylvester residual: {:.3e}", residual(&prob, &g.s)?);
            let _ = writeln!(out, "block decoupling defect: {:.3e}", verify_block_decoupling(sys, g)?);
            files.push(dir.write_gains("gains.csv", &[("F0", &g.f0), ("S", &g.s), ("F2", &g.f2), ("F1", &g.f1)])?);
        }
        Designed::Delay(p, g) => {
            let c1s = p.c1s()?;
            let closed = &p.a2 + &(&g.f2 * &c1s);
            let form = match g.form {
                DelayObserverForm::Conjugated => "conjugated",
                DelayObserverForm::Direct => "direct",
            };
            let _ = writeln!(out, "form: {form}");
            let _ = writeln!(out, "F    = {}", fmt_matrix(&g.f));
            let _ = writeln!(out, "F2   = {}", fmt_matrix(&g.f2));
            let _ = writeln!(out, "C1 S = {}", fmt_matrix(&c1s));
            let _ = writeln!(
                out,
                "sigma(A2 + F2 C1 S) = {}",
                fmt_complex_list(&eigenvalues(&closed)?.eigenvalues)
            );
            let _ = writeln!(
                out,
                "Hurwitz margin: {}",
                fmt_num(eigenvalues(&closed)?.stability_margin)
            );
            let last = g.f1.len() - 1;
            let _ = writeln!(
                out,
                "F1(0) = {}, F1(tau) = {}",
                fmt_short(g.f1.at(0)[0]),
                fmt_short(g.f1.at(last)[0])
            );
            files.push(dir.write_gains("gains.csv", &[("F", &g.f), ("F2", &g.f2), ("C1S", &c1s)])?);
            files.push(dir.write_spatial("gain_F1.csv", "F1", &g.f1)?);
        }
        Designed::Heat(p, hd) => {
            let j = spectrum_modes(scn, p)?;
            let mt = &hd.modal;
            let spec = verify_truncated_spectrum(p, mt, j)?;
            let corrected = eigenvalues(&mt.corrected_block())?;
            let _ = writeln!(out, "mu = {}, corrected modes N = {}", fmt_num(p.mu), mt.n);
            let lam: Vec<String> = (1..=mt.n).map(|k| fmt_short(lambda(k))).collect();
            let _ = writeln!(out, "lambda_1..N = [{}]", lam.join(", "));
            let _ = writeln!(out, "Gamma_N = {}", fmt_matrix(&mt.gamma_n));
            let _ = writeln!(out, "L_N     = {}", fmt_matrix(&mt.l_n));
            let _ = writeln!(out, "F0 = {}", fmt_matrix(&hd.f0));
            let f1: Vec<String> = (0..hd.f1.rows()).map(|i| fmt_short(hd.f1[(i, 0)])).collect();
            let _ = writeln!(out, "F1 = ({})^T", f1.join(", "));
            let _ = writeln!(
                out,
                "sigma(Lambda_N + L_N Gamma_N) = {}",
                fmt_complex_list(&corrected.eigenvalues)
            );
            let _ = writeln!(
                out,
                "truncated spectrum margin (J = {j}): {}",
                fmt_num(spec.stability_margin)
            );
            let _ = writeln!(
                out,
                "error system margin (J = {j}): {}",
                fmt_num(error_system_margin(p, hd, j)?)
            );
            let mut gains: Vec<(&str, &Matrix)> = vec![("F0", &hd.f0), ("F1", &hd.f1)];
            if mt.n > 0 {
                gains.push(("L_N", &mt.l_n));
                gains.push(("Gamma_N", &mt.gamma_n));
            }
            files.push(dir.write_gains("gains.csv", &gains)?);
            files.push(dir.write_spatial("gain_F2.csv", "F2", &hd.f2)?);
            files.push(dir.write_spatial("gain_s.csv", "s", &hd.s)?);
        }
        Designed::Regulation(p, rs, g) => {
            let (r1, r2) = rs.residuals(p);
            let err = observer_error_matrix(p, g)?;
            let cl = closed_loop_matrix(p, rs, g)?;
            let _ = writeln!(out, "Pi = {}", fmt_matrix(&rs.pi));
            let _ = writeln!(out, "Q  = {}", fmt_matrix(&rs.q));
            let _ = writeln!(out, "regulator equation residuals: {r1:.3e}, {r2:.3e}");
            let _ = writeln!(out, "Gamma = {}", fmt_matrix(&g.gamma));
            let _ = writeln!(out, "K2 = {}", fmt_matrix(&g.k2));
            let _ = writeln!(out, "K1 = {}", fmt_matrix(&g.k1));
            let _ = writeln!(
                out,
                "observer error Hurwitz margin: {}",
                fmt_num(eigenvalues(&err)?.stability_margin)
            );
            let _ = writeln!(
                out,
                "closed loop spectral abscissa: {}",
                fmt_num(eigenvalues(&cl)?.stability_margin)
            );
            files.push(dir.write_gains(
                "gains.csv",
                &[
                    ("Pi", &rs.pi),
                    ("Q", &rs.q),
                    ("Gamma", &g.gamma),
                    ("K2", &g.k2),
                    ("K1", &g.k1),
                ],
            )?);
        }
    }
    Ok(files)
}

fn header(cmd: &str, scn: &Scenario, path: &Path) -> String {
    format!("{cmd} {} (kind = {})\n", scn.run_name(path), scn.kind.as_str())
}

pub fn cmd_design(path: &Path, root: Option<&Path>) -> Result<Report, CliError> {
    let scn = Scenario::load(path)?;
    let sys = scn.system()?;
    let dsg = design(&scn, sys)?;
    let dir = RunDir::create(run_dir(&scn, path, root))?;
    let mut out = header("design", &scn, path);
    let files = describe(&scn, &dsg, &dir, &mut out)?;
    dir.write_text("summary.txt", &out)?;
    let _ = writeln!(
        out,
        "wrote {}, {}",
        path_list(&files),
        dir.file("summary.txt").display()
    );
    Ok(Report::ok(out))
}

pub fn cmd_check(path: &Path) -> Result<Report, CliError> {
    let scn = Scenario::load(path)?;
    let sys = scn.system()?;
    if scn.sim.is_some() {
        scn.sim_config(&sys)?;
    }
    let mut out = header("check", &scn, path);
    let _ = writeln!(out, "scenario valid");
    let mut problems = Vec::new();
    match &sys {
        System::Cascade(c) => {
            let sensor = is_observable_pair(&c.sensor.a, &c.sensor.c)?;
            let factored = check_cascade_observability(c)?;
            let (a, cc) = c.assembled();
            let kalman = is_observable_pair(&a, &cc)?;
            let _ = writeln!(out, "(A1, C1) observable: {sensor}");
            let _ = writeln!(out, "cascade observable (factored test): {factored}");
            let _ = writeln!(out, "cascade observable (Kalman rank): {kalman}");
            if !factored || !kalman {
                problems.push("the cascade is not observable".to_string());
            }
        }
        System::Delay(p) => {
            let obs = is_observable_pair(&p.a2, &p.c2)?;
            let _ = writeln!(out, "(A2, C2) observable: {obs}");
            if !obs {
                problems.push("(A2, C2) is not observable".to_string());
            }
        }
        System::Heat(p) => {
            let obs = is_observable_pair(&p.a1, &p.c1)?;
            let _ = writeln!(out, "(A1, C1) observable: {obs}");
            if !obs {
                problems.push("(A1, C1) is not observable".to_string());
            } else {
                let f0 = sensor_gain(&scn, &p.a1, &p.c1)?;
                let grid = scn.design.grid.unwrap_or(fig1::DESIGN_GRID);
                let s = heat_sylvester_s(p, &f0, grid)?;
                let vals = (0..s.len())
                    .map(|k| (0..p.sensor_order()).map(|i| p.c1[(0, i)] * s.at(k)[i]).sum())
                    .collect();
                let c1s = SpatialFunction::scalar(1.0, vals)?;
                let n = select_n(p.mu);
                let gamma = modal_coefficients_with(&c1s, n.max(1), scn.quadrature())?;
                let g: Vec<String> = gamma[..n].iter().map(|v| fmt_short(*v)).collect();
                let _ = writeln!(out, "unstable modes N = {n}, gamma_1..N = [{}]", g.join(", "));
                if let Some(k) = gamma[..n].iter().position(|v| v.abs() < 1e-9) {
                    problems.push(format!("mode {} is invisible through the sensor", k + 1));
                }
            }
        }
        System::Regulation(p) => {
            let r = check_regulation_observability(p)?;
            let _ = writeln!(out, "direct observability: {}", r.direct);
            match r.cascade {
                Some(c) => {
                    let _ = writeln!(out, "cascade-form observability: {c}");
                }
                None => {
                    let _ = writeln!(out, "cascade-form observability: not applicable");
                }
            }
            if !r.direct {
                problems.push("plant and exosystem are not jointly observable".to_string());
            }
        }
    }
    if problems.is_empty() {
        let _ = writeln!(out, "all checks passed");
        Ok(Report::ok(out))
    } else {
        Ok(Report {
            text: out,
            code: EXIT_DESIGN,
            failure: Some(problems.join("; ")),
        })
    }
}

fn vec_or_zero(field: &str, v: &Option<Vec<f64>>, n: usize) -> Result<Vec<f64>, CliError> {
    match v {
        None => Ok(vec![0.0; n]),
        Some(v) if v.len() == n => Ok(v.clone()),
        Some(v) => Err(CliError::field(
            field,
            format!("{} entries given, expected {n}", v.len()),
        )),
    }
}

fn run_simulation(scn: &Scenario, dsg: &Designed, cfg: &SimConfig) -> Result<Trajectory, CliError> {
    let i = &scn.initial;
    let signal = scn.input.clone();
    Ok(match dsg {
        Designed::Cascade(sys, g) => {
            let n = sys.sensor_order() + sys.plant_order();
            let x0 = vec_or_zero("initial.x", &i.x, n)?;
            let xh = vec_or_zero("initial.x_hat", &i.x_hat, n)?;
            let m = sys.plant.b.cols();
            simulate_cascade_observer(sys, g, |t| vec![signal.at(t); m], &x0, &xh, cfg)?
        }
        Designed::Delay(p, g) => {
            let n = p.order();
            let intervals = g.f1.intervals();
            let init = DelayInitial {
                x2: vec_or_zero("initial.x2", &i.x2, n)?,
                x2_hat: vec_or_zero("initial.x2_hat", &i.x2_hat, n)?,
                w: i.w.clone().unwrap_or_default().sample(p.tau, intervals, "initial.w")?,
                w_hat: i
                    .w_hat
                    .clone()
                    .unwrap_or_default()
                    .sample(p.tau, intervals, "initial.w_hat")?,
            };
            let m = p.b2.cols();
            simulate_delay_observer(p, g, |t| vec![signal.at(t); m], &init, cfg)?
        }
        Designed::Heat(p, hd) => {
            let m = p.sensor_order();
            let intervals = grid_intervals("sim.dx", 1.0, cfg.dx)?;
            let init = HeatInitial {
                v: vec_or_zero("initial.v", &i.v, m)?,
                v_hat: vec_or_zero("initial.v_hat", &i.v_hat, m)?,
                w: i.w.clone().unwrap_or_default().sample(1.0, intervals, "initial.w")?,
                w_hat: i
                    .w_hat
                    .clone()
                    .unwrap_or_default()
                    .sample(1.0, intervals, "initial.w_hat")?,
            };
            let snaps = scn.output.snapshots.clone().unwrap_or_default();
            simulate_heat_observer(p, hd, |t| signal.at(t), &init, cfg, &snaps)?
        }
        Designed::Regulation(p, rs, g) => {
            let (n1, n2) = (p.plant_order(), p.exo_order());
            let init = RegulationInitial {
                z1: vec_or_zero("initial.z1", &i.z1, n1)?,
                z2: vec_or_zero("initial.z2", &i.z2, n2)?,
                z1_hat: vec_or_zero("initial.z1_hat", &i.z1_hat, n1)?,
                z2_hat: vec_or_zero("initial.z2_hat", &i.z2_hat, n2)?,
            };
            simulate_regulation_closed_loop(p, rs, g, &init, cfg)?
        }
    })
}

fn error_series(dsg: &Designed) -> &'static str {
    match dsg {
        Designed::Regulation(..) => "err_observer_2norm",
        _ => "err_combined",
    }
}

pub fn cmd_simulate(path: &Path, root: Option<&Path>) -> Result<Report, CliError> {
    let scn = Scenario::load(path)?;
    let sys = scn.system()?;
    let cfg = scn.sim_config(&sys)?;
    let window = match scn.output.decay_window {
        Some([a, b]) if a < b && a >= 0.0 => (a, b),
        Some(_) => return Err(CliError::field("output.decay_window", "needs 0 <= t0 < t1")),
        None => (cfg.t_end / 2.0, cfg.t_end),
    };
    let dsg = design(&scn, sys)?;
    let traj = run_simulation(&scn, &dsg, &cfg)?;

    let dir = RunDir::create(run_dir(&scn, path, root))?;
    let mut out = header("simulate", &scn, path);
    let mut files = describe(&scn, &dsg, &dir, &mut out)?;
    let dx = match dsg {
        Designed::Delay(..) | Designed::Heat(..) => format!(", dx = {}", fmt_num(cfg.dx)),
        _ => String::new(),
    };
    let _ = writeln!(
        out,
        "dt = {}{dx}, T = {}, {} samples",
        fmt_num(cfg.dt),
        fmt_num(cfg.t_end),
        traj.len()
    );
    for name in traj.names() {
        if name.starts_with("err_") || name == "y" {
            let (a, b) = (traj.first(name).unwrap_or(0.0), traj.last(name).unwrap_or(0.0));
            let _ = writeln!(out, "{name}: initial {}, final {}", fmt_num(a), fmt_num(b));
        }
    }
    let main = error_series(&dsg);
    match fit_decay_rate(&traj, main, window) {
        Ok(rate) => {
            let _ = writeln!(
                out,
                "fitted decay rate of {main} on [{}, {}]: {}",
                fmt_num(window.0),
                fmt_num(window.1),
                fmt_num(rate)
            );
        }
        Err(e) => {
            let _ = writeln!(out, "fitted decay rate of {main}: n/a ({e})");
        }
    }
    files.push(dir.write_trajectory("trajectory.csv", &traj, scn.output.series.as_deref())?);
    for s in &traj.snapshots {
        files.push(dir.write_snapshot(s)?);
    }
    dir.write_text("summary.txt", &out)?;
    let _ = writeln!(out, "wrote {} files to {}", files.len() + 1, dir.path.display());
    Ok(Report::ok(out))
}

/// Options of `reproduce-fig1`.
#[derive(Debug, Clone)]
pub struct Fig1Options {
    pub dx: f64,
    /// Defaults to keeping `dt/dx²` at its reference value.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub mu: f64,
}

impl Default for Fig1Options {
    fn default() -> Self {
        Fig1Options {
            dx: fig1::DX,
            dt: None,
            t_end: fig1::T_END,
            mu: fig1::MU,
        }
    }
}

pub fn cmd_reproduce_fig1(opts: &Fig1Options, root: Option<&Path>) -> Result<Report, CliError> {
    let dt = opts.dt.unwrap_or(fig1::DT * (opts.dx / fig1::DX).powi(2));
    for (name, v) in [("--dx", opts.dx), ("--dt", dt), ("--T", opts.t_end), ("--mu", opts.mu)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::field(name, format!("must be positive, got {v}")));
        }
    }
    let intervals = grid_intervals("--dx", 1.0, opts.dx)?;
    let cfg = fig1::sim_config(dt, opts.dx, opts.t_end);
    cascade_core::sim::check_ftcs(opts.mu, dt, opts.dx).map_err(|e| CliError::field("--dt", e.to_string()))?;

    let p = fig1::plant(opts.mu)?;
    let d = fig1::design(&p, fig1::GAIN_QUADRATURE)?;
    let conv = fig1::design(&p, Quadrature::Simpson)?;
    let cmp = fig1::compare_gains(&d, fig1::REFERENCE_L1, fig1::REFERENCE_F1);
    let cc = fig1::compare_gains(&conv, fig1::CONVERGED_L1, fig1::CONVERGED_F1);

    let dir = RunDir::create(root.unwrap_or(Path::new("out")).join("fig1"))?;
    let mut out = String::from("reproduce-fig1\n");
    let _ = writeln!(
        out,
        "mu = {}, dx = {}, dt = {}, T = {}",
        fmt_num(opts.mu),
        fmt_num(opts.dx),
        fmt_num(dt),
        fmt_num(opts.t_end)
    );

    let header = [
        "quantity",
        "computed",
        "reference",
        "abs_diff",
        "converged",
        "converged_reference",
    ]
    .map(String::from);
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "nan".into());
    let mut rows = vec![vec![
        "l1".to_string(),
        opt(cmp.l1),
        fmt_num(fig1::REFERENCE_L1),
        fmt_num(cmp.l1_diff),
        opt(cc.l1),
        fmt_num(fig1::CONVERGED_L1),
    ]];
    for i in 0..2 {
        rows.push(vec![
            format!("F1_{}", i + 1),
            fmt_num(cmp.f1[i]),
            fmt_num(fig1::REFERENCE_F1[i]),
            fmt_num((cmp.f1[i] - fig1::REFERENCE_F1[i]).abs()),
            fmt_num(cc.f1[i]),
            fmt_num(fig1::CONVERGED_F1[i]),
        ]);
    }
    let mut files = vec![dir.write_rows("gain_comparison.csv", &header, &rows)?];
    let _ = writeln!(
        out,
        "{:<8} {:>16} {:>10} {:>17} {:>16}",
        "quantity", "computed", "reference", "abs_diff", "converged"
    );
    for r in &rows {
        let _ = writeln!(out, "{:<8} {:>16} {:>10} {:>17} {:>16}", r[0], r[1], r[2], r[3], r[4]);
    }
    files.push(dir.write_gains("gains.csv", &[("F0", &d.f0), ("F1", &d.f1)])?);
    files.push(dir.write_spatial("gain_F2.csv", "F2", &d.f2)?);

    let init = fig1::initial(intervals)?;
    let snaps: Vec<f64> = fig1::SNAPSHOT_TIMES
        .iter()
        .copied()
        .filter(|t| *t <= opts.t_end)
        .collect();
    let traj = simulate_heat_observer(&p, &d, |_| 0.0, &init, &cfg, &snaps)?;
    files.push(dir.write_trajectory("trajectory.csv", &traj, None)?);
    for s in &traj.snapshots {
        files.push(dir.write_snapshot(s)?);
    }

    let mut failed = Vec::new();
    let gains_ok = cmp.passes(fig1::GAIN_TOL);
    let _ = writeln!(
        out,
        "{} [1] gain reproduction: |l1 diff| = {:.3e}, |F1 diff|_inf = {:.3e} (tol {:.0e})",
        verdict(gains_ok),
        cmp.l1_diff,
        cmp.f1_diff,
        fig1::GAIN_TOL
    );
    if !gains_ok {
        failed.push("[1] gain reproduction");
    }
    match fig1::check_convergence(&p, &d, &traj) {
        Ok(c) => {
            let _ = writeln!(
                out,
                "{} [2] convergence: error ratio at T = {:.4} (max {}), fitted rate {:.4} on [{}, {}], \
                 margin {:.4}, rate/|margin| = {:.3} (band [{}, {}])",
                verdict(c.passes()),
                c.ratio,
                fig1::FINAL_RATIO_MAX,
                c.rate,
                fig1::DECAY_WINDOW.0,
                fig1::DECAY_WINDOW.1,
                c.margin,
                c.rate / c.margin.abs(),
                fig1::RATE_BAND.0,
                fig1::RATE_BAND.1
            );
            if !c.passes() {
                failed.push("[2] convergence reproduction");
            }
        }
        Err(e) => {
            let _ = writeln!(out, "FAIL [2] convergence: {e}");
            failed.push("[2] convergence reproduction");
        }
    }
    dir.write_text("summary.txt", &out)?;
    let _ = writeln!(out, "wrote {} files to {}", files.len() + 1, dir.path.display());
    if failed.is_empty() {
        Ok(Report::ok(out))
    } else {
        Ok(Report {
            text: out,
            code: EXIT_ACCEPTANCE,
            failure: Some(format!("failing criteria: {}", failed.join(", "))),
        })
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// One line of a sweep.
#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub file: PathBuf,
    pub name: String,
    pub code: u8,
    pub message: String,
}

/// Simulates every `*.toml` in `dir` concurrently, each into `<root>/<name>`.
pub fn cmd_sweep(dir: &Path, root: Option<&Path>) -> Result<Report, CliError> {
    use rayon::prelude::*;

    let rd = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::field(
            "sweep",
            format!("no .toml scenarios in {}", dir.display()),
        ));
    }
    let root = root.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out"));

    let mut names = Vec::new();
    for f in &files {
        let name = Scenario::load(f).map(|s| s.run_name(f)).unwrap_or_else(|_| stem(f));
        if names.contains(&name) {
            return Err(CliError::field(
                "name",
                format!("run name `{name}` is used by two scenarios"),
            ));
        }
        names.push(name);
    }

    let entries: Vec<SweepEntry> = files
        .par_iter()
        .zip(names.par_iter())
        .map(|(f, name)| {
            let (code, message) = match cmd_simulate(f, Some(&root)) {
                Ok(r) => (r.code, r.failure.unwrap_or_else(|| "ok".into())),
                Err(e) => (e.exit_code(), e.to_string()),
            };
            SweepEntry {
                file: f.clone(),
                name: name.clone(),
                code,
                message,
            }
        })
        .collect();

    let run = RunDir::create(root.clone())?;
    let header = ["scenario", "name", "exit_code", "message"].map(String::from);
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            vec![
                e.file.display().to_string(),
                e.name.clone(),
                e.code.to_string(),
                e.message.clone(),
            ]
        })
        .collect();
    let summary = run.write_rows("sweep_summary.csv", &header, &rows)?;

    let mut out = format!("sweep {} ({} scenarios)\n", dir.display(), entries.len());
    for e in &entries {
        let _ = writeln!(out, "[{}] {}: {}", e.code, e.name, e.message);
    }
    let _ = writeln!(out, "wrote {}", summary.display());
    let code = entries.iter().map(|e| e.code).max().unwrap_or(EXIT_OK);
    let failing = entries.iter().filter(|e| e.code != EXIT_OK).count();
    Ok(Report {
        text: out,
        code,
        failure: (failing > 0).then(|| format!("{failing} of {} scenarios failed", entries.len())),
    })
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
