//! Finite-dimensional observer design for cascades `ẋ₁ = A₁x₁ + B₁C₂x₂`,
//! `ẋ₂ = A₂x₂ + B₂u`, `y = C₁x₁`.
//!
//! The gain scheme places `F₀` on the sensor pair `(A₁, C₁)`, solves
//! `(A₁+F₀C₁)S − SA₂ = B₁C₂`, places `F₂` on `(A₂, C₁S)` and sets
//! `F₁ = F₀ + SF₂`. The similarity `[[I, S], [0, I]]` then turns the error
//! dynamics into a block lower-triangular matrix whose diagonal blocks are
//! `A₁+F₀C₁` and `A₂+F₂C₁S`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, is_conjugate_closed, min_spectral_distance, multiset_distance, null_space, poly_from_roots, rank,
    solve, svd, Lu, Spectrum,
};
use crate::matrix::{CMatrix, Matrix};
use crate::sim::{step_ode, SimConfig, Trajectory};
use crate::sylvester::{solve_sylvester, SylvesterProblem, SPECTRAL_GAP_TOL};

/// Singular-value cutoff (relative) for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Placed spectra must match the requested poles to this (relative) accuracy.
const PLACEMENT_CHECK_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || c.cols() != n {
            return Err(Error::dim(
                "StateSpace",
                format!("A {:?}, B {:?}, C {:?}", a.shape(), b.shape(), c.shape()),
            ));
        }
        Ok(StateSpace { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }
}

/// Sensor subsystem `(A₁, B₁, C₁)` driven by the plant `(A₂, B₂, C₂)` through
/// `B₁C₂x₂`; the only measurement is `y = C₁x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSystem {
    pub sensor: StateSpace,
    pub plant: StateSpace,
}

impl CascadeSystem {
    pub fn new(sensor: StateSpace, plant: StateSpace) -> Result<Self> {
        if plant.c.rows() != sensor.b.cols() {
            return Err(Error::dim(
                "CascadeSystem",
                format!(
                    "interconnection: C2 has {} rows but B1 has {} columns",
                    plant.c.rows(),
                    sensor.b.cols()
                ),
            ));
        }
        Ok(CascadeSystem { sensor, plant })
    }

    pub fn sensor_order(&self) -> usize {
        self.sensor.order()
    }

    pub fn plant_order(&self) -> usize {
        self.plant.order()
    }

    /// `B₁C₂`.
    pub fn interconnection(&self) -> Matrix {
        &self.sensor.b * &self.plant.c
    }

    /// The assembled pair `([[A₁, B₁C₂], [0, A₂]], [C₁, 0])`.
    pub fn assembled(&self) -> (Matrix, Matrix) {
        let (n1, n2) = (self.sensor_order(), self.plant_order());
        let a = Matrix::block2(
            &self.sensor.a,
            &self.interconnection(),
            &Matrix::zeros(n2, n1),
            &self.plant.a,
        )
        .expect("block shapes follow from validated subsystems");
        let p = self.sensor.c.rows();
        let mut c = Matrix::zeros(p, n1 + n2);
        c.set_block(0, 0, &self.sensor.c);
        (a, c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub f0: Matrix,
    pub s: Matrix,
    pub f2: Matrix,
    pub f1: Matrix,
}

/// `[C; CA; …; CA^{n−1}]`.
pub fn observability_matrix(a: &Matrix, c: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || c.cols() != n {
        return Err(Error::dim(
            "observability_matrix",
            format!("A {:?}, C {:?}", a.shape(), c.shape()),
        ));
    }
    let p = c.rows();
    let mut o = Matrix::zeros(p * n, n);
    let mut block = c.clone();
    for k in 0..n {
        o.set_block(k * p, 0, &block);
        if k + 1 < n {
            block = &block * a;
        }
    }
    Ok(o)
}

pub fn is_observable_pair(a: &Matrix, c: &Matrix) -> Result<bool> {
    let o = observability_matrix(a, c)?;
    Ok(rank(&o, RANK_TOL)? == a.rows())
}

/// Kalman rank test on `(A, C)`.
pub fn is_observable(sys: &StateSpace) -> Result<bool> {
    is_observable_pair(&sys.a, &sys.c)
}

fn check_poles(poles: &[Complex64], n: usize, what: &str) -> Result<()> {
    if poles.len() != n {
        return Err(Error::Input(format!("{what}: expected {n} poles, got {}", poles.len())));
    }
    if poles.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
        return Err(Error::Input(format!("{what}: non-finite pole")));
    }
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    if !is_conjugate_closed(poles, 1e-9 * scale) {
        return Err(Error::Input(format!(
            "{what}: pole set is not closed under conjugation"
        )));
    }
    Ok(())
}

/// Output-injection gain `F` with `σ(A + F·C) = desired`, for single-output
/// pairs, via Ackermann's formula on the dual pair: `F = −p(A)·q` where
/// `O·q = eₙ`, `O` the observability matrix and `p` the desired
/// characteristic polynomial.
pub fn place_poles_observer(a: &Matrix, c: &Matrix, desired: &[Complex64]) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || c.cols() != n {
        return Err(Error::dim(
            "place_poles_observer",
            format!("A {:?}, C {:?}", a.shape(), c.shape()),
        ));
    }
    if c.rows() != 1 {
        return Err(Error::Input(format!(
            "pole placement supports single-output pairs only, C has {} rows",
            c.rows()
        )));
    }
    check_poles(desired, n, "place_poles_observer")?;
    if n == 0 {
        return Ok(Matrix::zeros(0, 1));
    }
    let o = observability_matrix(a, c)?;
    if rank(&o, RANK_TOL)? < n {
        return Err(Error::Design(
            "pair (A, C) is not observable; poles cannot be placed".into(),
        ));
    }
    let mut e_n = Matrix::zeros(n, 1);
    e_n[(n - 1, 0)] = 1.0;
    let q = solve(&o, &e_n)?;

    // Horner: p(A)·q = (A(…(A + c_{n−1}I)…) + c₀I)·q
    let coeffs = poly_from_roots(desired);
    let mut v = q.clone();
    for k in (0..n).rev() {
        v = &(a * &v) + &q.scale(coeffs[k]);
    }
    let f = v.scale(-1.0);

    let closed = a + &(&f * c);
    let got = eigenvalues(&closed)?;
    let scale = desired.iter().map(|p| p.norm()).fold(1.0, f64::max) + a.norm_fro();
    let miss = multiset_distance(&got.eigenvalues, desired);
    if !(miss <= PLACEMENT_CHECK_TOL * scale) {
        return Err(Error::Design(format!(
            "pole placement is ill-conditioned: achieved spectrum misses the target by {miss:.3e}"
        )));
    }
    Ok(f)
}

fn require_stable(poles: &[Complex64], what: &str) -> Result<()> {
    if let Some(p) = poles.iter().find(|p| !(p.re < 0.0)) {
        return Err(Error::Input(format!(
            "{what}: pole {:.4}{:+.4}i is not in the open left half-plane",
            p.re, p.im
        )));
    }
    Ok(())
}

/// Full four-step scheme: place `F₀`, solve for `S`, place `F₂`, form `F₁`.
pub fn design_cascade_gains(
    sys: &CascadeSystem,
    sensor_poles: &[Complex64],
    plant_poles: &[Complex64],
) -> Result<ObserverGains> {
    require_stable(sensor_poles, "sensor poles")?;
    let f0 = place_poles_observer(&sys.sensor.a, &sys.sensor.c, sensor_poles).map_err(|e| match e {
        Error::Design(_) => Error::Design("sensor pair (A1, C1) is not observable".into()),
        other => other,
    })?;
    design_cascade_gains_with_f0(sys, f0, plant_poles)
}

/// Steps (b)–(d) for a caller-supplied `F₀`.
pub fn design_cascade_gains_with_f0(
    sys: &CascadeSystem,
    f0: Matrix,
    plant_poles: &[Complex64],
) -> Result<ObserverGains> {
    let (a1, c1) = (&sys.sensor.a, &sys.sensor.c);
    if f0.shape() != (a1.rows(), c1.rows()) {
        return Err(Error::dim(
            "design_cascade_gains",
            format!("F0 {:?}, expected {:?}", f0.shape(), (a1.rows(), c1.rows())),
        ));
    }
    require_stable(plant_poles, "plant poles")?;
    let af = a1 + &(&f0 * c1);
    let sf = eigenvalues(&af)?;
    if !(sf.stability_margin < 0.0) {
        return Err(Error::Design(format!(
            "A1 + F0 C1 is not Hurwitz (max real part {:.4e})",
            sf.stability_margin
        )));
    }
    let s2 = eigenvalues(&sys.plant.a)?;
    let (gap, culprit) = min_spectral_distance(&sf, &s2);
    let thresh = SPECTRAL_GAP_TOL * af.norm_fro().max(sys.plant.a.norm_fro());
    if !(gap > thresh) {
        return Err(Error::SpectralOverlap {
            eigenvalue: culprit.unwrap_or_default(),
            distance: gap,
        });
    }
    let s = solve_sylvester(&SylvesterProblem::new(af, sys.plant.a.clone(), sys.interconnection())?)?;
    let c1s = c1 * &s;
    let f2 = place_poles_observer(&sys.plant.a, &c1s, plant_poles).map_err(|e| match e {
        Error::Design(_) => Error::Design(
            "(A2, C1 S) is not observable: the cascade fails the factored observability \
             condition (sensor observable and no transmission zero of C1(λ−A1)⁻¹B1 at σ(A2))"
                .into(),
        ),
        other => other,
    })?;
    let f1 = &f0 + &(&s * &f2);
    let gains = ObserverGains { f0, s, f2, f1 };
    let margin = eigenvalues(&error_system_matrix(sys, &gains)?)?.stability_margin;
    if !(margin < 0.0) {
        return Err(Error::Design(format!(
            "error system is not Hurwitz (max real part {margin:.4e})"
        )));
    }
    Ok(gains)
}

/// `[[A₁+F₁C₁, B₁C₂], [−F₂C₁, A₂]]`.
pub fn error_system_matrix(sys: &CascadeSystem, g: &ObserverGains) -> Result<Matrix> {
    let (n1, n2, p) = (sys.sensor_order(), sys.plant_order(), sys.sensor.c.rows());
    if g.f1.shape() != (n1, p) || g.f2.shape() != (n2, p) || g.s.shape() != (n1, n2) {
        return Err(Error::dim(
            "error_system_matrix",
            format!("F1 {:?}, F2 {:?}, S {:?}", g.f1.shape(), g.f2.shape(), g.s.shape()),
        ));
    }
    let c1 = &sys.sensor.c;
    Matrix::block2(
        &(&sys.sensor.a + &(&g.f1 * c1)),
        &sys.interconnection(),
        &(&g.f2 * c1).scale(-1.0),
        &sys.plant.a,
    )
}

/// `‖𝕊·M_err·𝕊⁻¹ − [[A₁+F₀C₁, 0], [−F₂C₁, A₂+F₂C₁S]]‖_F` with `𝕊 = [[I, S], [0, I]]`.
pub fn verify_block_decoupling(sys: &CascadeSystem, g: &ObserverGains) -> Result<f64> {
    let m = error_system_matrix(sys, g)?;
    let (n1, n2) = (sys.sensor_order(), sys.plant_order());
    let c1 = &sys.sensor.c;
    let t = Matrix::block2(
        &Matrix::identity(n1),
        &g.s,
        &Matrix::zeros(n2, n1),
        &Matrix::identity(n2),
    )?;
    let t_inv = Matrix::block2(
        &Matrix::identity(n1),
        &g.s.scale(-1.0),
        &Matrix::zeros(n2, n1),
        &Matrix::identity(n2),
    )?;
    let target = Matrix::block2(
        &(&sys.sensor.a + &(&g.f0 * c1)),
        &Matrix::zeros(n1, n2),
        &(&g.f2 * c1).scale(-1.0),
        &(&sys.plant.a + &(&g.f2 * &(c1 * &g.s))),
    )?;
    Ok((&(&(&t * &m) * &t_inv) - &target).norm_fro())
}

/// Groups eigenvalues closer than `tol` and returns one representative each.
fn distinct_eigenvalues(spec: &Spectrum, tol: f64) -> Vec<Complex64> {
    let mut reps: Vec<(Complex64, usize)> = Vec::new();
    for &z in &spec.eigenvalues {
        match reps.iter_mut().find(|(r, _)| (*r - z).norm() <= tol) {
            Some((r, k)) => {
                *r = (*r * (*k as f64) + z) / ((*k + 1) as f64);
                *k += 1;
            }
            None => reps.push((z, 1)),
        }
    }
    reps.into_iter().map(|(r, _)| r).collect()
}

/// Factored observability test: `(A₁, C₁)` observable and, for every
/// `λ ∈ σ(A₂)`, `Ker[C₁(λ−A₁)⁻¹B₁C₂] ∩ Ker(λ−A₂) = {0}`.
pub fn check_cascade_observability(sys: &CascadeSystem) -> Result<bool> {
    let s1 = eigenvalues(&sys.sensor.a)?;
    let s2 = eigenvalues(&sys.plant.a)?;
    let scale = sys.sensor.a.norm_fro().max(sys.plant.a.norm_fro()).max(1.0);
    let (gap, culprit) = min_spectral_distance(&s1, &s2);
    if !(gap > SPECTRAL_GAP_TOL * scale) {
        let ev = culprit.unwrap_or_default();
        return Err(Error::Input(format!(
            "precondition violated: σ(A1) and σ(A2) intersect near {:.6}{:+.6}i",
            ev.re, ev.im
        )));
    }
    if !is_observable_pair(&sys.sensor.a, &sys.sensor.c)? {
        return Ok(false);
    }
    let n1 = sys.sensor_order();
    let a1 = sys.sensor.a.to_complex();
    let a2 = sys.plant.a.to_complex();
    let b1 = sys.sensor.b.to_complex();
    let c1 = sys.sensor.c.to_complex();
    let c2 = sys.plant.c.to_complex();
    let a2_scale = sys.plant.a.norm_fro().max(1.0);
    for lambda in distinct_eigenvalues(&s2, 1e-6 * a2_scale) {
        let shifted = &CMatrix::identity(sys.plant_order()).scale(lambda) - &a2;
        let kernel = null_space(&shifted, 1e-7 * a2_scale)?;
        if kernel.cols() == 0 {
            continue;
        }
        let resolvent = &CMatrix::identity(n1).scale(lambda) - &a1;
        let x = Lu::new(&resolvent)?.solve(&b1)?;
        let transfer = &c1 * &x;
        // bound that does not vanish at a transmission zero
        let reference = c1.norm_fro() * x.norm_fro() * c2.norm_fro();
        if reference == 0.0 {
            return Ok(false);
        }
        let m = &(&transfer * &c2) * &kernel;
        let sv = svd(&m)?.singular_values;
        let rank_m = sv.iter().filter(|&&v| v > RANK_TOL * reference).count();
        if rank_m < kernel.cols() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Simulates the cascade and the observer
///
/// ```text
/// x̂₁' = A₁x̂₁ + B₁C₂x̂₂ − F₁(y − C₁x̂₁)
/// x̂₂' = A₂x̂₂ + B₂u + F₂(y − C₁x̂₁)
/// ```
///
/// as one joint linear system advanced by RK4. Recorded series: `x{i}`,
/// `xhat{i}`, `y{k}`, `err_sensor_2norm`, `err_plant_2norm`, `err_combined`.
pub fn simulate_cascade_observer(
    sys: &CascadeSystem,
    g: &ObserverGains,
    u: impl Fn(f64) -> Vec<f64>,
    x0: &[f64],
    x_hat0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory> {
    if !(cfg.dt > 0.0) || !(cfg.t_end >= cfg.dt) || cfg.record_every == 0 {
        return Err(Error::Config(format!(
            "need dt > 0, T >= dt and record_every >= 1 (dt = {}, T = {})",
            cfg.dt, cfg.t_end
        )));
    }
    let (n1, n2, p) = (sys.sensor_order(), sys.plant_order(), sys.sensor.c.rows());
    let n = n1 + n2;
    if x0.len() != n || x_hat0.len() != n {
        return Err(Error::dim(
            "simulate_cascade_observer",
            format!("order {n}, x0 {}, xhat0 {}", x0.len(), x_hat0.len()),
        ));
    }
    // Error generator is A − LC with L = [−F₁; F₂].
    let e = error_system_matrix(sys, g)?;
    let (a, c) = sys.assembled();
    let mut l = Matrix::zeros(n, p);
    l.set_block(0, 0, &g.f1.scale(-1.0));
    l.set_block(n1, 0, &g.f2);
    let m = Matrix::block2(&a, &Matrix::zeros(n, n), &(&l * &c), &e)?;

    let mut names: Vec<String> = Vec::new();
    names.extend((1..=n).map(|i| format!("x{i}")));
    names.extend((1..=n).map(|i| format!("xhat{i}")));
    names.extend((1..=p).map(|k| format!("y{k}")));
    names.extend(["err_sensor_2norm", "err_plant_2norm", "err_combined"].map(Into::into));
    let mut traj = Trajectory::with_series(&names);
    let mut row = vec![0.0; names.len()];

    let mut z: Vec<f64> = x0.iter().chain(x_hat0).copied().collect();
    let mut input = vec![0.0; 2 * n];
    let steps = cfg.steps();
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        if k % cfg.record_every == 0 || k == steps {
            row[..2 * n].copy_from_slice(&z);
            let y = c.mul_vec(&z[..n]);
            row[2 * n..2 * n + p].copy_from_slice(&y);
            let sq = |r: core::ops::Range<usize>| -> f64 {
                libm::sqrt(r.map(|i| (z[i] - z[n + i]) * (z[i] - z[n + i])).sum())
            };
            let (es, ep) = (sq(0..n1), sq(n1..n));
            row[2 * n + p] = es;
            row[2 * n + p + 1] = ep;
            row[2 * n + p + 2] = es + ep;
            traj.push(t, &row);
        }
        if k == steps {
            break;
        }
        let uk = u(t);
        if uk.len() != sys.plant.b.cols() {
            return Err(Error::dim(
                "simulate_cascade_observer",
                format!(
                    "input has {} components, B2 has {} columns",
                    uk.len(),
                    sys.plant.b.cols()
                ),
            ));
        }
        let bu = sys.plant.b.mul_vec(&uk);
        for i in 0..n2 {
            input[n1 + i] = bu[i];
            input[n + n1 + i] = bu[i];
        }
        z = step_ode(&z, &m, &input, cfg.dt);
    }
    Ok(traj)
}
