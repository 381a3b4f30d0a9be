//! The unstable heat benchmark: `A₁ = [[0, −1], [1, 0]]`, `B₁ = (1, 1)ᵀ`,
//! `C₁ = (1, 1)`, `μ = 4`, `F₀ = (−1, −1)ᵀ`, one corrected mode placed at
//! `−2`, simulated from `v(0) = (1, 1)`, `w(x, 0) = sin πx` with a zero
//! observer state and `u ≡ 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Quadrature, SpatialFunction};
use crate::heat::{
    design_heat_observer_with, select_n, verify_truncated_spectrum, HeatDesign, HeatDesignOptions, HeatInitial,
    HeatPlant,
};
use crate::matrix::Matrix;
use crate::sim::{fit_decay_rate, SimConfig, Trajectory};

pub const MU: f64 = 4.0;
pub const MODAL_POLE: f64 = -2.0;
/// Reference gains the design is compared against.
pub const REFERENCE_L1: f64 = 5.0978;
pub const REFERENCE_F1: [f64; 2] = [-1.5847, -3.9479];
pub const GAIN_TOL: f64 = 1e-3;
/// The reference gains correspond to this coarse rule; the converged
/// (Simpson) design gives `l₁ ≈ 5.22701`.
pub const GAIN_QUADRATURE: Quadrature = Quadrature::RightEndpoint { panels: 20 };
/// Converged values from adaptive quadrature of `C₁s·φ₁` and `s·φ₁`.
pub const CONVERGED_L1: f64 = 5.22701;
pub const CONVERGED_F1: [f64; 2] = [-1.61381, -3.91879];
pub const CONVERGED_TOL: f64 = 1e-4;
/// Grid on which gains are designed, independent of the simulation grid.
pub const DESIGN_GRID: usize = 100;

pub const DT: f64 = 4e-5;
pub const DX: f64 = 1e-2;
pub const T_END: f64 = 3.0;
pub const RECORD_EVERY: usize = 250;
pub const SPECTRUM_MODES: usize = 200;
pub const DECAY_WINDOW: (f64, f64) = (1.5, 3.0);
pub const FINAL_RATIO_MAX: f64 = 0.02;
pub const RATE_BAND: (f64, f64) = (0.8, 1.2);
/// Snapshot times for surface plots of the PDE error.
pub const SNAPSHOT_TIMES: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

pub fn plant(mu: f64) -> Result<HeatPlant> {
    HeatPlant::new(
        mu,
        Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]])?,
        Matrix::col_vector(&[1.0, 1.0]),
        Matrix::row_vector(&[1.0, 1.0]),
    )
}

pub fn f0() -> Matrix {
    Matrix::col_vector(&[-1.0, -1.0])
}

/// One pole at `MODAL_POLE` per unstable mode of `p`.
pub fn modal_poles(p: &HeatPlant) -> Vec<Complex64> {
    vec![Complex64::new(MODAL_POLE, 0.0); select_n(p.mu)]
}

pub fn design(p: &HeatPlant, rule: Quadrature) -> Result<HeatDesign> {
    let opts = HeatDesignOptions {
        quadrature: rule,
        ..HeatDesignOptions::default()
    };
    design_heat_observer_with(p, &f0(), &modal_poles(p), DESIGN_GRID, opts)
}

pub fn initial(intervals: usize) -> Result<HeatInitial> {
    let w = SpatialFunction::scalar_from_fn(1.0, intervals, |x| libm::sin(core::f64::consts::PI * x))?;
    Ok(HeatInitial {
        v: vec![1.0, 1.0],
        w,
        v_hat: vec![0.0, 0.0],
        w_hat: SpatialFunction::scalar(1.0, vec![0.0; intervals + 1])?,
    })
}

pub fn sim_config(dt: f64, dx: f64, t_end: f64) -> SimConfig {
    SimConfig {
        dt,
        dx,
        t_end,
        record_every: libm::round((RECORD_EVERY as f64 * DT / dt).max(1.0)) as usize,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainComparison {
    /// `None` when no mode is corrected.
    pub l1: Option<f64>,
    pub f1: [f64; 2],
    pub l1_diff: f64,
    pub f1_diff: f64,
}

impl GainComparison {
    pub fn passes(&self, tol: f64) -> bool {
        self.l1_diff <= tol && self.f1_diff <= tol
    }
}

pub fn compare_gains(d: &HeatDesign, l1_ref: f64, f1_ref: [f64; 2]) -> GainComparison {
    let l1 = (d.modal.n >= 1).then(|| d.modal.l_n[(0, 0)]);
    let f1 = [d.f1[(0, 0)], d.f1[(1, 0)]];
    GainComparison {
        l1,
        f1,
        l1_diff: l1.map_or(f64::INFINITY, |l| libm::fabs(l - l1_ref)),
        f1_diff: libm::fabs(f1[0] - f1_ref[0]).max(libm::fabs(f1[1] - f1_ref[1])),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCheck {
    pub initial: f64,
    pub last: f64,
    pub ratio: f64,
    pub rate: f64,
    /// Stability margin of the truncated plant-error spectrum.
    pub margin: f64,
}

impl ConvergenceCheck {
    pub fn ratio_ok(&self) -> bool {
        self.ratio <= FINAL_RATIO_MAX
    }

    pub fn rate_ok(&self) -> bool {
        let r = self.rate / libm::fabs(self.margin);
        r >= RATE_BAND.0 && r <= RATE_BAND.1
    }

    pub fn passes(&self) -> bool {
        self.ratio_ok() && self.rate_ok()
    }
}

/// Evaluates `err_combined` of a benchmark run against the decay targets.
pub fn check_convergence(p: &HeatPlant, d: &HeatDesign, traj: &Trajectory) -> Result<ConvergenceCheck> {
    let initial = traj
        .first("err_combined")
        .ok_or_else(|| Error::Input("trajectory has no err_combined series".into()))?;
    let last = traj.last("err_combined").unwrap_or(initial);
    let rate = fit_decay_rate(traj, "err_combined", DECAY_WINDOW)?;
    let margin = verify_truncated_spectrum(p, &d.modal, SPECTRUM_MODES)?.stability_margin;
    Ok(ConvergenceCheck {
        initial,
        last,
        ratio: last / initial,
        rate,
        margin,
    })
}
