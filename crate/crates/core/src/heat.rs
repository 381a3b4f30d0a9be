//! Heat plant `w_t = w_xx + μw` on `[0, 1]` with `w(0) = 0`, `w_x(1) = u`,
//! observed through the ODE sensor `v' = A₁v + B₁w(1)`, `y = C₁v`.
//!
//! The plant generator has eigenpairs `λₙ = (n − ½)²π²`,
//! `φₙ(x) = √2·sin(√λₙ·x)`; modes with `μ − λₙ ≥ 0` are corrected by a
//! finite-dimensional output injection.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::design::place_poles_observer;
use crate::error::{Error, Result};
use crate::grid::{integrate, l2_norm, Quadrature, SpatialFunction};
use crate::linalg::{eigenvalues, even_matrix_function_pair, Lu, Spectrum};
use crate::matrix::Matrix;
use crate::sim::{check_ftcs, ftcs_step_raw, step_ode, SimConfig, Snapshot, Trajectory};

/// Plant modes screened when checking that `cosh G` is invertible.
pub const COSH_CHECK_MODES: usize = 50;
/// Modal coefficients computed by default beyond the unstable ones.
pub const DEFAULT_COEFFICIENT_MODES: usize = 200;
/// Minimum number of samples accepted by [`modal_coefficients`].
pub const MIN_MODAL_SAMPLES: usize = 64;

/// `λₙ = (n − ½)²π²`, `n ≥ 1`.
pub fn lambda(n: usize) -> f64 {
    let k = (n as f64 - 0.5) * PI;
    k * k
}

/// Orthonormal eigenfunction `φₙ(x) = √2·sin(√λₙ·x)`.
pub fn phi(n: usize, x: f64) -> f64 {
    core::f64::consts::SQRT_2 * libm::sin((n as f64 - 0.5) * PI * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatPlant {
    pub mu: f64,
    pub a1: Matrix,
    pub b1: Matrix,
    pub c1: Matrix,
}

impl HeatPlant {
    pub fn new(mu: f64, a1: Matrix, b1: Matrix, c1: Matrix) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Input(format!("mu must be positive, got {mu}")));
        }
        let m = a1.rows();
        if !a1.is_square() || b1.shape() != (m, 1) || c1.shape() != (1, m) {
            return Err(Error::dim(
                "HeatPlant",
                format!("A1 {:?}, B1 {:?}, C1 {:?}", a1.shape(), b1.shape(), c1.shape()),
            ));
        }
        Ok(HeatPlant { mu, a1, b1, c1 })
    }

    pub fn sensor_order(&self) -> usize {
        self.a1.rows()
    }

    /// `A₁ + F₀C₁`.
    pub fn injected(&self, f0: &Matrix) -> Result<Matrix> {
        if f0.shape() != (self.sensor_order(), 1) {
            return Err(Error::dim(
                "HeatPlant::injected",
                format!("F0 {:?}, expected ({}, 1)", f0.shape(), self.sensor_order()),
            ));
        }
        Ok(&self.a1 + &(f0 * &self.c1))
    }
}

/// Finite modal truncation used for the PDE gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTruncation {
    pub n: usize,
    /// `λ₁..λ_K` for every stored coefficient.
    pub lambda: Vec<f64>,
    /// `γ₁..γ_K`, `K ≥ N`.
    pub gamma: Vec<f64>,
    pub l_n: Matrix,
    pub lambda_n: Matrix,
    pub gamma_n: Matrix,
}

impl ModalTruncation {
    /// Assembles the truncation from coefficients and an `N×1` gain.
    pub fn new(mu: f64, gamma: Vec<f64>, l_n: Matrix) -> Result<Self> {
        let n = l_n.rows();
        if l_n.cols() != 1 || gamma.len() < n {
            return Err(Error::dim(
                "ModalTruncation",
                format!("L_N {:?} with {} coefficients", l_n.shape(), gamma.len()),
            ));
        }
        if mu - lambda(n + 1) >= 0.0 {
            return Err(Error::Design(format!(
                "mode {} with μ − λ = {:.4} is left uncorrected",
                n + 1,
                mu - lambda(n + 1)
            )));
        }
        let lambdas: Vec<f64> = (1..=gamma.len()).map(lambda).collect();
        let lambda_n = Matrix::from_diag(&lambdas[..n].iter().map(|l| mu - l).collect::<Vec<_>>());
        let gamma_n = Matrix::row_vector(&gamma[..n]);
        Ok(ModalTruncation {
            n,
            lambda: lambdas,
            gamma,
            l_n,
            lambda_n,
            gamma_n,
        })
    }

    /// `Λ_N + L_NΓ_N`.
    pub fn corrected_block(&self) -> Matrix {
        &self.lambda_n + &(&self.l_n * &self.gamma_n)
    }

    /// `F₂(x) = Σ lₙφₙ(x)` sampled on `intervals + 1` points of `[0, 1]`.
    pub fn f2(&self, intervals: usize) -> Result<SpatialFunction> {
        SpatialFunction::scalar_from_fn(1.0, intervals, |x| {
            (0..self.n).map(|i| self.l_n[(i, 0)] * phi(i + 1, x)).sum()
        })
    }
}

/// Options for [`design_heat_observer_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatDesignOptions {
    /// Rule for `γₙ` and for `∫ s F₂`.
    pub quadrature: Quadrature,
    /// Number of coefficients `γₙ` stored in the truncation.
    pub coefficient_modes: usize,
}

impl Default for HeatDesignOptions {
    fn default() -> Self {
        HeatDesignOptions {
            quadrature: Quadrature::Simpson,
            coefficient_modes: DEFAULT_COEFFICIENT_MODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatDesign {
    pub f0: Matrix,
    pub s: SpatialFunction,
    pub modal: ModalTruncation,
    pub f2: SpatialFunction,
    pub f1: Matrix,
}

/// `s(x) = x·𝒢(xG)·(cosh G)⁻¹·B₁` with `G² = A₁ + F₀C₁ − μ`, sampled on
/// `grid + 1` points of `[0, 1]`. Solves `s″ + μs = (A₁+F₀C₁)s`,
/// `s(0) = 0`, `s′(1) = B₁`.
pub fn heat_sylvester_s(p: &HeatPlant, f0: &Matrix, grid: usize) -> Result<SpatialFunction> {
    if grid < 2 {
        return Err(Error::Input(format!("grid needs at least 2 intervals, got {grid}")));
    }
    let af = p.injected(f0)?;
    let spec = eigenvalues(&af)?;
    if !(spec.stability_margin < 0.0) {
        return Err(Error::Design(format!(
            "A1 + F0 C1 is not Hurwitz (max real part {:.4e}); choose another F0",
            spec.stability_margin
        )));
    }
    let scale = 1.0 + af.norm_fro() + p.mu;
    for n in 1..=COSH_CHECK_MODES {
        let target = Complex64::new(p.mu - lambda(n), 0.0);
        if spec.distance_to(target) <= 1e-8 * scale {
            return Err(Error::Design(format!(
                "cosh G is singular: σ(A1 + F0 C1) contains μ − λ_{n} = {:.6}; choose another F0",
                target.re
            )));
        }
    }
    let m = p.sensor_order();
    let z = af.shift(-p.mu);
    let (cosh_g, _) = even_matrix_function_pair(&z, 1.0)?;
    let y = Lu::new(&cosh_g)
        .and_then(|lu| lu.solve(&p.b1))
        .map_err(|_| Error::Design("cosh G is numerically singular; choose another F0".into()))?;
    if !y.all_finite() {
        return Err(Error::Design(
            "cosh G is numerically singular; choose another F0".into(),
        ));
    }
    let dx = 1.0 / grid as f64;
    let mut values = Vec::with_capacity((grid + 1) * m);
    values.extend(core::iter::repeat_n(0.0, m));
    for k in 1..=grid {
        let x = k as f64 * dx;
        let (_, sinc) = even_matrix_function_pair(&z, x)?;
        let sx = (&sinc * &y).scale(x);
        values.extend((0..m).map(|i| sx[(i, 0)]));
    }
    SpatialFunction::new(1.0, m, values)
}

/// `γₙ = ∫₀¹ C₁s(x)·φₙ(x) dx` for `n = 1..=n_max`, by composite Simpson.
pub fn modal_coefficients(c1s: &SpatialFunction, n_max: usize) -> Result<Vec<f64>> {
    modal_coefficients_with(c1s, n_max, Quadrature::Simpson)
}

pub fn modal_coefficients_with(c1s: &SpatialFunction, n_max: usize, rule: Quadrature) -> Result<Vec<f64>> {
    if c1s.dim() != 1 || libm::fabs(c1s.domain_length() - 1.0) > 1e-12 {
        return Err(Error::Input("C1 s must be scalar-valued on [0, 1]".into()));
    }
    if c1s.len() < MIN_MODAL_SAMPLES {
        return Err(Error::Input(format!(
            "modal coefficients need at least {MIN_MODAL_SAMPLES} samples, got {}",
            c1s.len()
        )));
    }
    let dx = c1s.dx();
    let mut buf = vec![0.0; c1s.len()];
    (1..=n_max)
        .map(|n| {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = c1s.values()[k] * phi(n, k as f64 * dx);
            }
            integrate(&buf, dx, rule)
        })
        .collect()
}

/// Number of modes with `λₙ ≤ μ`.
pub fn select_n(mu: f64) -> usize {
    let mut n = 0;
    while lambda(n + 1) <= mu {
        n += 1;
    }
    n
}

/// Gains with Simpson quadrature; see [`design_heat_observer_with`].
pub fn design_heat_observer(p: &HeatPlant, f0: &Matrix, modal_poles: &[Complex64], grid: usize) -> Result<HeatDesign> {
    design_heat_observer_with(p, f0, modal_poles, grid, HeatDesignOptions::default())
}

/// Places `L_N` on `(Λ_N, Γ_N)`, then `F₂ = Σ lₙφₙ` and
/// `F₁ = F₀ + ∫₀¹ s(x)F₂(x) dx`.
pub fn design_heat_observer_with(
    p: &HeatPlant,
    f0: &Matrix,
    modal_poles: &[Complex64],
    grid: usize,
    opts: HeatDesignOptions,
) -> Result<HeatDesign> {
    let n = select_n(p.mu);
    if modal_poles.len() != n {
        return Err(Error::Input(format!(
            "μ = {} has {n} unstable modes but {} modal poles were given",
            p.mu,
            modal_poles.len()
        )));
    }
    if let Some(z) = modal_poles.iter().find(|z| !(z.re < 0.0)) {
        return Err(Error::Input(format!(
            "modal pole {:.4}{:+.4}i is not in the open left half-plane",
            z.re, z.im
        )));
    }
    let s = heat_sylvester_s(p, f0, grid)?;
    let m = p.sensor_order();
    let c1s_vals: Vec<f64> = (0..s.len())
        .map(|k| (0..m).map(|i| p.c1[(0, i)] * s.at(k)[i]).sum())
        .collect();
    let c1s = SpatialFunction::scalar(1.0, c1s_vals)?;
    let gamma = modal_coefficients_with(&c1s, opts.coefficient_modes.max(n), opts.quadrature)?;

    let floor = 1e-12 + 1e-9 * l2_norm(c1s.values(), c1s.dx());
    if let Some(k) = (0..n).find(|&k| libm::fabs(gamma[k]) <= floor) {
        return Err(Error::Design(format!(
            "γ_{} = {:.3e} vanishes: mode {} is invisible through the sensor, \
             approximate observability is lost",
            k + 1,
            gamma[k],
            k + 1
        )));
    }
    let lambda_n = Matrix::from_diag(&(1..=n).map(|k| p.mu - lambda(k)).collect::<Vec<_>>());
    let gamma_n = Matrix::row_vector(&gamma[..n]);
    let l_n = place_poles_observer(&lambda_n, &gamma_n, modal_poles)?;
    let modal = ModalTruncation::new(p.mu, gamma, l_n)?;

    let f2 = modal.f2(grid)?;
    let mut f1 = f0.clone();
    let mut buf = vec![0.0; s.len()];
    for i in 0..m {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = s.at(k)[i] * f2.values()[k];
        }
        f1[(i, 0)] += integrate(&buf, s.dx(), opts.quadrature)?;
    }
    Ok(HeatDesign {
        f0: f0.clone(),
        s,
        modal,
        f2,
        f1,
    })
}

/// Spectrum of the `J`-mode matrix `Mₙⱼ = (μ − λₙ)δₙⱼ + lₙγⱼ` (`lₙ = 0` for
/// `n > N`), i.e. `σ(Λ_N + L_NΓ_N) ∪ {μ − λⱼ : N < j ≤ J}`.
pub fn verify_truncated_spectrum(p: &HeatPlant, mt: &ModalTruncation, j: usize) -> Result<Spectrum> {
    if j < mt.n + 1 {
        return Err(Error::Input(format!("J = {j} must exceed N = {}", mt.n)));
    }
    if mt.gamma.len() < j {
        return Err(Error::Input(format!(
            "J = {j} needs {j} modal coefficients, the truncation stores {}",
            mt.gamma.len()
        )));
    }
    let m = Matrix::from_fn(j, j, |r, c| {
        let d = if r == c { p.mu - lambda(r + 1) } else { 0.0 };
        let l = if r < mt.n { mt.l_n[(r, 0)] } else { 0.0 };
        d + l * mt.gamma[c]
    });
    eigenvalues(&m)
}

/// Slowest rate of the full observer error system: the worse of
/// `σ(A₁+F₀C₁)` and the truncated plant-error spectrum.
pub fn error_system_margin(p: &HeatPlant, design: &HeatDesign, j: usize) -> Result<f64> {
    let sensor = eigenvalues(&p.injected(&design.f0)?)?.stability_margin;
    let plant = verify_truncated_spectrum(p, &design.modal, j)?.stability_margin;
    Ok(sensor.max(plant))
}

/// Initial data for plant and observer.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatInitial {
    pub v: Vec<f64>,
    pub w: SpatialFunction,
    pub v_hat: Vec<f64>,
    pub w_hat: SpatialFunction,
}

/// Co-simulates plant and observer
///
/// ```text
/// v̂' = A₁v̂ + B₁ŵ(1) − F₁(y − C₁v̂)
/// ŵ_t = ŵ_xx + μŵ + F₂(x)(y − C₁v̂),  ŵ(0) = 0,  ŵ_x(1) = u
/// ```
///
/// with FTCS for both PDEs and RK4 for the joint ODE block. Recorded series:
/// `v{i}`, `vhat{i}`, `err_v{i}`, `err_sensor_2norm`, `err_pde_L2norm`,
/// `err_combined`. Snapshots of `w`, `w_hat`, `err_w` are taken at the
/// steps closest to `snapshot_times`.
pub fn simulate_heat_observer(
    p: &HeatPlant,
    design: &HeatDesign,
    u: impl Fn(f64) -> f64,
    init: &HeatInitial,
    cfg: &SimConfig,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    cfg.validate()?;
    let m = p.sensor_order();
    if init.v.len() != m || init.v_hat.len() != m || design.f1.shape() != (m, 1) {
        return Err(Error::dim(
            "simulate_heat_observer",
            format!(
                "sensor order {m}, v0 {}, vhat0 {}, F1 {:?}",
                init.v.len(),
                init.v_hat.len(),
                design.f1.shape()
            ),
        ));
    }
    let intervals = libm::round(1.0 / cfg.dx) as usize;
    for (name, f) in [("w0", &init.w), ("what0", &init.w_hat)] {
        if f.dim() != 1 || f.intervals() != intervals || libm::fabs(f.domain_length() - 1.0) > 1e-12 {
            return Err(Error::Config(format!(
                "{name} must be scalar on [0, 1] with {intervals} intervals (dx = {})",
                cfg.dx
            )));
        }
    }
    let dx = 1.0 / intervals as f64;
    if libm::fabs(dx - cfg.dx) > 1e-9 * cfg.dx {
        return Err(Error::Config(format!("1/dx must be an integer, got dx = {}", cfg.dx)));
    }
    check_ftcs(p.mu, cfg.dt, dx)?;

    let f2 = design.modal.f2(intervals)?;
    let c1 = &p.c1;
    let a1f1 = &p.a1 + &(&design.f1 * c1);
    // joint block for (v, v̂): v̂' = (A₁+F₁C₁)v̂ − F₁C₁v + B₁ŵ(1)
    let joint = Matrix::block2(&p.a1, &Matrix::zeros(m, m), &(&design.f1 * c1).scale(-1.0), &a1f1)?;

    let mut names: Vec<alloc::string::String> = Vec::new();
    for prefix in ["v", "vhat", "err_v"] {
        names.extend((1..=m).map(|i| format!("{prefix}{i}")));
    }
    names.extend(["err_sensor_2norm", "err_pde_L2norm", "err_combined"].map(Into::into));
    let mut traj = Trajectory::with_series(&names);

    let mut x: Vec<f64> = init.v.iter().chain(&init.v_hat).copied().collect();
    let mut w = init.w.values().to_vec();
    let mut wh = init.w_hat.values().to_vec();
    let mut w_next = vec![0.0; w.len()];
    let mut wh_next = vec![0.0; w.len()];
    let mut err_w = vec![0.0; w.len()];
    let n_pts = w.len();

    let steps = cfg.steps();
    let snap_steps: Vec<(usize, f64)> = snapshot_times
        .iter()
        .filter(|&&t| t >= 0.0 && t <= steps as f64 * cfg.dt + 0.5 * cfg.dt)
        .map(|&t| (libm::round(t / cfg.dt) as usize, t))
        .collect();
    let grid_x: Vec<f64> = (0..n_pts).map(|k| k as f64 * dx).collect();
    let mut row = vec![0.0; names.len()];

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let record = k % cfg.record_every == 0 || k == steps;
        let snap = snap_steps.iter().any(|&(s, _)| s == k);
        if record || snap {
            for ((e, a), b) in err_w.iter_mut().zip(&w).zip(&wh) {
                *e = a - b;
            }
        }
        if record {
            let mut sq = 0.0;
            for i in 0..m {
                let e = x[i] - x[m + i];
                row[i] = x[i];
                row[m + i] = x[m + i];
                row[2 * m + i] = e;
                sq += e * e;
            }
            let es = libm::sqrt(sq);
            let ew = l2_norm(&err_w, dx);
            row[3 * m] = es;
            row[3 * m + 1] = ew;
            row[3 * m + 2] = es + ew;
            traj.push(t, &row);
        }
        if snap {
            traj.snapshots.push(Snapshot {
                time: t,
                x: grid_x.clone(),
                fields: vec![
                    ("w".into(), w.clone()),
                    ("w_hat".into(), wh.clone()),
                    ("err_w".into(), err_w.clone()),
                ],
            });
        }
        if k == steps {
            break;
        }
        let innovation: f64 = (0..m).map(|i| c1[(0, i)] * (x[i] - x[m + i])).sum();
        let flux = u(t);
        ftcs_step_raw(&w, &mut w_next, p.mu, None, 0.0, flux, cfg.dt, dx);
        ftcs_step_raw(
            &wh,
            &mut wh_next,
            p.mu,
            Some((f2.values(), innovation)),
            0.0,
            flux,
            cfg.dt,
            dx,
        );
        let input: Vec<f64> = (0..2 * m)
            .map(|i| {
                let edge = if i < m { w[n_pts - 1] } else { wh[n_pts - 1] };
                p.b1[(i % m, 0)] * edge
            })
            .collect();
        x = step_ode(&x, &joint, &input, cfg.dt);
        core::mem::swap(&mut w, &mut w_next);
        core::mem::swap(&mut wh, &mut wh_next);
    }
    Ok(traj)
}
