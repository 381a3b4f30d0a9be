//! Output delay `y(t) = C₂x₂(t − τ)` realized as the transport line
//! `w_t + w_x = 0` on `[0, τ]`, `w(0, t) = C₂x₂(t)`, `y = w(τ, t)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::design::place_poles_observer;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, SpatialFunction};
use crate::linalg::{eigenvalues, expm, multiset_distance};
use crate::matrix::Matrix;
use crate::sim::{check_cfl, step_ode, upwind_step_raw, SimConfig, Trajectory};

/// Default number of transport-grid intervals.
pub const DEFAULT_DELAY_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DelayPlant {
    pub a2: Matrix,
    pub b2: Matrix,
    pub c2: Matrix,
    pub tau: f64,
}

impl DelayPlant {
    pub fn new(a2: Matrix, b2: Matrix, c2: Matrix, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Input(format!("delay tau must be positive, got {tau}")));
        }
        let n = a2.rows();
        if !a2.is_square() || b2.rows() != n || c2.shape() != (1, n) {
            return Err(Error::dim(
                "DelayPlant",
                format!("A2 {:?}, B2 {:?}, C2 {:?}", a2.shape(), b2.shape(), c2.shape()),
            ));
        }
        Ok(DelayPlant { a2, b2, c2, tau })
    }

    pub fn order(&self) -> usize {
        self.a2.rows()
    }

    /// `C₁S = −C₂e^{−A₂τ}`.
    pub fn c1s(&self) -> Result<Matrix> {
        Ok((&self.c2 * &expm(&self.a2, -self.tau)?).scale(-1.0))
    }
}

/// How the plant gain is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayObserverForm {
    /// Place `F` on `(A₂, C₂)` and set `F₂ = −e^{A₂τ}F`.
    #[default]
    Conjugated,
    /// Place `F₂` on `(A₂, C₁S)` directly.
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayGains {
    pub form: DelayObserverForm,
    /// The placed gain: `F` for the conjugated form, `F₂` for the direct one.
    pub f: Matrix,
    pub f2: Matrix,
    /// `F₁(x) = (SF₂)(x) = −C₂e^{−A₂x}F₂` on `[0, τ]`.
    pub f1: SpatialFunction,
}

/// `s(x) = −e^{−A₂ᵀx}C₂ᵀ` on `grid + 1` points of `[0, τ]`, so that
/// `(Sv)(x) = s(x)ᵀv = −C₂e^{−A₂x}v`.
pub fn delay_sylvester_solution(p: &DelayPlant, grid: usize) -> Result<SpatialFunction> {
    if grid < 2 {
        return Err(Error::Input(format!("grid needs at least 2 intervals, got {grid}")));
    }
    let n = p.order();
    let a2t = p.a2.transpose();
    let c2t = p.c2.transpose();
    let dx = p.tau / grid as f64;
    let mut values = Vec::with_capacity((grid + 1) * n);
    for k in 0..=grid {
        let s = (&expm(&a2t, -(k as f64) * dx)? * &c2t).scale(-1.0);
        values.extend((0..n).map(|i| s[(i, 0)]));
    }
    SpatialFunction::new(p.tau, n, values)
}

/// Conjugated-form gains with the default grid.
pub fn design_delay_observer(p: &DelayPlant, plant_poles: &[Complex64]) -> Result<DelayGains> {
    design_delay_observer_with(p, plant_poles, DEFAULT_DELAY_GRID, DelayObserverForm::Conjugated)
}

pub fn design_delay_observer_with(
    p: &DelayPlant,
    plant_poles: &[Complex64],
    grid: usize,
    form: DelayObserverForm,
) -> Result<DelayGains> {
    if let Some(z) = plant_poles.iter().find(|z| !(z.re < 0.0)) {
        return Err(Error::Input(format!(
            "plant pole {:.4}{:+.4}i is not in the open left half-plane",
            z.re, z.im
        )));
    }
    if grid < 2 {
        return Err(Error::Input(format!("grid needs at least 2 intervals, got {grid}")));
    }
    let unobservable = |e: Error| match e {
        Error::Design(_) => Error::Design("(A2, C2) is not observable; the delayed output cannot be inverted".into()),
        other => other,
    };
    let c1s = p.c1s()?;
    let (f, f2) = match form {
        DelayObserverForm::Conjugated => {
            let f = place_poles_observer(&p.a2, &p.c2, plant_poles).map_err(unobservable)?;
            let f2 = (&expm(&p.a2, p.tau)? * &f).scale(-1.0);
            (f, f2)
        }
        DelayObserverForm::Direct => {
            let f2 = place_poles_observer(&p.a2, &c1s, plant_poles).map_err(unobservable)?;
            (f2.clone(), f2)
        }
    };
    let closed = &p.a2 + &(&f2 * &c1s);
    let got = eigenvalues(&closed)?;
    let scale = 1.0 + closed.norm_fro() + plant_poles.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let miss = multiset_distance(&got.eigenvalues, plant_poles);
    if !(got.stability_margin < 0.0) || miss > 1e-6 * scale {
        return Err(Error::Design(format!(
            "A2 + F2 C1 S misses the requested spectrum by {miss:.3e} (max real part {:.4e})",
            got.stability_margin
        )));
    }
    let n = p.order();
    let dx = p.tau / grid as f64;
    let mut f1 = Vec::with_capacity(grid + 1);
    for k in 0..=grid {
        let v = &(&p.c2 * &expm(&p.a2, -(k as f64) * dx)?) * &f2;
        f1.push(-v[(0, 0)]);
    }
    debug_assert_eq!(f2.shape(), (n, 1));
    Ok(DelayGains {
        form,
        f,
        f2,
        f1: SpatialFunction::scalar(p.tau, f1)?,
    })
}

/// Initial data for plant and observer; `w` and `w_hat` live on `[0, τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayInitial {
    pub x2: Vec<f64>,
    pub w: SpatialFunction,
    pub x2_hat: Vec<f64>,
    pub w_hat: SpatialFunction,
}

/// Co-simulates the delayed plant and the observer
///
/// ```text
/// ŵ_t + ŵ_x = −F₁(x)(y − ŵ(τ)),  ŵ(0) = C₂x̂₂
/// x̂₂' = A₂x̂₂ + F₂(y − ŵ(τ)) + B₂u
/// ```
///
/// with upwind transport and RK4. Recorded series: `x2_{i}`, `x2hat_{i}`,
/// `y`, `y_hat`, `err_x2_2norm`, `err_w_L2norm`, `err_combined`.
pub fn simulate_delay_observer(
    p: &DelayPlant,
    gains: &DelayGains,
    u: impl Fn(f64) -> Vec<f64>,
    init: &DelayInitial,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = p.order();
    if init.x2.len() != n || init.x2_hat.len() != n || gains.f2.shape() != (n, 1) {
        return Err(Error::dim(
            "simulate_delay_observer",
            format!("order {n}, x2_0 {}, xhat_0 {}", init.x2.len(), init.x2_hat.len()),
        ));
    }
    let intervals = gains.f1.intervals();
    for (name, f) in [("w0", &init.w), ("what0", &init.w_hat)] {
        if f.dim() != 1 || f.intervals() != intervals || libm::fabs(f.domain_length() - p.tau) > 1e-12 * p.tau {
            return Err(Error::Config(format!(
                "{name} must be scalar on [0, τ] with {intervals} intervals like F1"
            )));
        }
    }
    let dx = p.tau / intervals as f64;
    if libm::fabs(dx - cfg.dx) > 1e-9 * cfg.dx {
        return Err(Error::Config(format!(
            "dx = {} does not match the gain grid spacing τ/{intervals} = {dx}",
            cfg.dx
        )));
    }
    check_cfl(cfg.dt, dx)?;

    let mut names: Vec<String> = Vec::new();
    names.extend((1..=n).map(|i| format!("x2_{i}")));
    names.extend((1..=n).map(|i| format!("x2hat_{i}")));
    names.extend(["y", "y_hat", "err_x2_2norm", "err_w_L2norm", "err_combined"].map(Into::into));
    let mut traj = Trajectory::with_series(&names);
    let mut row = vec![0.0; names.len()];

    let mut x2 = init.x2.clone();
    let mut xh = init.x2_hat.clone();
    let mut w = init.w.values().to_vec();
    let mut wh = init.w_hat.values().to_vec();
    let mut w_next = vec![0.0; w.len()];
    let mut wh_next = vec![0.0; w.len()];
    let mut err_w = vec![0.0; w.len()];
    let last = w.len() - 1;
    let c2x = |x: &[f64]| -> f64 { (0..n).map(|i| p.c2[(0, i)] * x[i]).sum() };

    let steps = cfg.steps();
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        if k % cfg.record_every == 0 || k == steps {
            let mut sq = 0.0;
            for i in 0..n {
                row[i] = x2[i];
                row[n + i] = xh[i];
                sq += (x2[i] - xh[i]) * (x2[i] - xh[i]);
            }
            for ((e, a), b) in err_w.iter_mut().zip(&w).zip(&wh) {
                *e = a - b;
            }
            let ex = libm::sqrt(sq);
            let ew = l2_norm(&err_w, dx);
            row[2 * n] = w[last];
            row[2 * n + 1] = wh[last];
            row[2 * n + 2] = ex;
            row[2 * n + 3] = ew;
            row[2 * n + 4] = ex + ew;
            traj.push(t, &row);
        }
        if k == steps {
            break;
        }
        let uk = u(t);
        if uk.len() != p.b2.cols() {
            return Err(Error::dim(
                "simulate_delay_observer",
                format!("input has {} components, B2 has {} columns", uk.len(), p.b2.cols()),
            ));
        }
        let bu = p.b2.mul_vec(&uk);
        let innovation = w[last] - wh[last];
        let obs_in: Vec<f64> = (0..n).map(|i| bu[i] + gains.f2[(i, 0)] * innovation).collect();
        x2 = step_ode(&x2, &p.a2, &bu, cfg.dt);
        xh = step_ode(&xh, &p.a2, &obs_in, cfg.dt);
        upwind_step_raw(&w, &mut w_next, c2x(&x2), None, cfg.dt, dx);
        upwind_step_raw(
            &wh,
            &mut wh_next,
            c2x(&xh),
            Some((gains.f1.values(), -innovation)),
            cfg.dt,
            dx,
        );
        core::mem::swap(&mut w, &mut w_next);
        core::mem::swap(&mut wh, &mut wh_next);
    }
    Ok(traj)
}
