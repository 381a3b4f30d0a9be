//! Explicit time stepping shared by the observer simulations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::SpatialFunction;
use crate::matrix::Matrix;

/// Relative slack allowed on stability bounds so that `dt` equal to the bound
/// is accepted.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub dx: f64,
    pub t_end: f64,
    /// Steps between recorded samples.
    pub record_every: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt", self.dt), ("dx", self.dx), ("T", self.t_end)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.t_end < self.dt {
            return Err(Error::Config(format!(
                "horizon T = {} is shorter than one step dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`.
    pub fn steps(&self) -> usize {
        libm::round(self.t_end / self.dt) as usize
    }
}

/// Fields captured at one output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub x: Vec<f64>,
    pub fields: Vec<(String, Vec<f64>)>,
}

/// Time-indexed named series plus optional spatial snapshots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn with_series<S: AsRef<str>>(names: &[S]) -> Self {
        Trajectory {
            times: Vec::new(),
            series: names.iter().map(|n| (n.as_ref().to_string(), Vec::new())).collect(),
            snapshots: Vec::new(),
        }
    }

    /// Appends one sample; `values` follows the series order.
    pub fn push(&mut self, t: f64, values: &[f64]) {
        assert_eq!(values.len(), self.series.len(), "series count mismatch");
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        for ((_, s), &v) in self.series.iter_mut().zip(values) {
            s.push(v);
        }
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> Vec<&str> {
        self.series.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Last value of a series.
    pub fn last(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.last().copied())
    }

    pub fn first(&self, name: &str) -> Option<f64> {
        self.series(name).and_then(|s| s.first().copied())
    }

    /// Value of a series at the recorded time closest to `t`.
    pub fn value_near(&self, name: &str, t: f64) -> Option<f64> {
        let s = self.series(name)?;
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| {
                libm::fabs(a.1 - t)
                    .partial_cmp(&libm::fabs(b.1 - t))
                    .unwrap_or(core::cmp::Ordering::Equal)
            })?
            .0;
        s.get(k).copied()
    }
}

/// Largest stable FTCS step for `w_t = w_xx + μw`.
pub fn ftcs_dt_bound(mu: f64, dx: f64) -> f64 {
    dx * dx / (2.0 + mu.max(0.0) * dx * dx)
}

pub fn check_ftcs(mu: f64, dt: f64, dx: f64) -> Result<()> {
    let bound = ftcs_dt_bound(mu, dx);
    if !(dt > 0.0) || dt > bound * (1.0 + BOUND_SLACK) {
        return Err(Error::Config(format!(
            "FTCS stability requires dt <= dx²/(2 + μdx²) = {bound:.6e}, got dt = {dt:.6e}"
        )));
    }
    Ok(())
}

pub fn check_cfl(dt: f64, dx: f64) -> Result<()> {
    if !(dt > 0.0) || dt > dx * (1.0 + BOUND_SLACK) {
        return Err(Error::Config(format!(
            "upwind CFL condition requires dt <= dx = {dx:.6e}, got dt = {dt:.6e}"
        )));
    }
    Ok(())
}

/// One explicit step of `w_t = w_xx + μw + scale·forcing` on a uniform grid,
/// with `w(0) = left` and `w_x(L) = flux` imposed through a ghost point.
/// No stability check; callers validate once before looping.
#[allow(clippy::too_many_arguments)]
pub(crate) fn ftcs_step_raw(
    w: &[f64],
    out: &mut [f64],
    mu: f64,
    forcing: Option<(&[f64], f64)>,
    left: f64,
    flux: f64,
    dt: f64,
    dx: f64,
) {
    let n = w.len() - 1;
    let r = dt / (dx * dx);
    out[0] = left;
    for k in 1..n {
        out[k] = w[k] + r * (w[k - 1] - 2.0 * w[k] + w[k + 1]) + dt * mu * w[k];
    }
    out[n] = w[n] + r * (2.0 * w[n - 1] - 2.0 * w[n] + 2.0 * dx * flux) + dt * mu * w[n];
    if let Some((f, scale)) = forcing {
        let s = dt * scale;
        for k in 1..=n {
            out[k] += s * f[k];
        }
    }
}

/// FTCS step for `w_t = w_xx + μw + forcing`, Dirichlet value at `x = 0`,
/// Neumann flux at the right end.
pub fn step_heat_ftcs(
    w: &SpatialFunction,
    mu: f64,
    forcing: Option<&SpatialFunction>,
    dirichlet_left: f64,
    neumann_right: f64,
    dt: f64,
) -> Result<SpatialFunction> {
    if w.dim() != 1 {
        return Err(Error::dim("step_heat_ftcs", "state must be scalar-valued"));
    }
    if let Some(f) = forcing {
        if f.len() != w.len() || f.dim() != 1 {
            return Err(Error::dim(
                "step_heat_ftcs",
                format!("forcing has {} points, state has {}", f.len(), w.len()),
            ));
        }
    }
    let dx = w.dx();
    check_ftcs(mu, dt, dx)?;
    let mut out = vec![0.0; w.len()];
    ftcs_step_raw(
        w.values(),
        &mut out,
        mu,
        forcing.map(|f| (f.values(), 1.0)),
        dirichlet_left,
        neumann_right,
        dt,
        dx,
    );
    SpatialFunction::scalar(w.domain_length(), out)
}

/// First-order upwind step for `w_t + w_x = scale·source` with inflow at `x = 0`.
pub(crate) fn upwind_step_raw(
    w: &[f64],
    out: &mut [f64],
    inflow: f64,
    source: Option<(&[f64], f64)>,
    dt: f64,
    dx: f64,
) {
    let c = dt / dx;
    out[0] = inflow;
    for k in 1..w.len() {
        out[k] = w[k] - c * (w[k] - w[k - 1]);
    }
    if let Some((s, scale)) = source {
        let a = dt * scale;
        for k in 1..w.len() {
            out[k] += a * s[k];
        }
    }
}

/// Upwind step for the unit-speed transport equation `w_t + w_x = 0`.
pub fn step_transport_upwind(w: &SpatialFunction, inflow: f64, dt: f64) -> Result<SpatialFunction> {
    if w.dim() != 1 {
        return Err(Error::dim("step_transport_upwind", "state must be scalar-valued"));
    }
    let dx = w.dx();
    check_cfl(dt, dx)?;
    let mut out = vec![0.0; w.len()];
    upwind_step_raw(w.values(), &mut out, inflow, None, dt, dx);
    SpatialFunction::scalar(w.domain_length(), out)
}

/// Classical RK4 step of `ẋ = M·x + input` with the input held constant.
pub fn step_ode(x: &[f64], m: &Matrix, input: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    assert!(m.shape() == (n, n) && input.len() == n, "step_ode: dimension mismatch");
    let f = |y: &[f64]| -> Vec<f64> {
        let mut d = m.mul_vec(y);
        for (di, ui) in d.iter_mut().zip(input) {
            *di += ui;
        }
        d
    };
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
    let k1 = f(x);
    let k2 = f(&axpy(0.5 * dt, &k1));
    let k3 = f(&axpy(0.5 * dt, &k2));
    let k4 = f(&axpy(dt, &k3));
    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Least-squares slope of `ln(series)` against time over `[t0, t1]`,
/// returned with the sign flipped so decaying series give a positive rate.
pub fn fit_decay_rate(traj: &Trajectory, series: &str, window: (f64, f64)) -> Result<f64> {
    let values = traj
        .series(series)
        .ok_or_else(|| Error::Input(format!("no series named {series:?}")))?;
    let (t0, t1) = window;
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Input(format!(
            "fit window [{t0}, {t1}] holds {} samples; widen it or lower record_every",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Input(format!(
            "series {series:?} is nonpositive ({v:e}) at t = {t}; widen record_every or the window"
        )));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| libm::log(p.1)).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &pts {
        sxy += (t - mt) * (libm::log(v) - my);
        sxx += (t - mt) * (t - mt);
    }
    Ok(-sxy / sxx)
}
