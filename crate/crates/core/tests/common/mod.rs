//! Random instance generators shared by the property and acceptance suites.
#![allow(dead_code)]

use cascade_core::design::{CascadeSystem, StateSpace};
use cascade_core::linalg::eigenvalues;
use cascade_core::sylvester::SylvesterProblem;
use cascade_core::{Complex64, Matrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Shifts `m` so that its largest real part equals `target`.
pub fn with_abscissa(m: &Matrix, target: f64) -> Matrix {
    let alpha = eigenvalues(m).unwrap().stability_margin;
    m.shift(target - alpha)
}

/// Shifts `m` so that its smallest real part equals `target`.
pub fn with_min_real(m: &Matrix, target: f64) -> Matrix {
    let lo = eigenvalues(m)
        .unwrap()
        .eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    m.shift(target - lo)
}

/// Hurwitz matrix with abscissa in `[-2, -margin]`.
pub fn random_hurwitz(rng: &mut impl Rng, n: usize, margin: f64) -> Matrix {
    let m = random_matrix(rng, n, n, 2.0);
    let target = -rng.gen_range(margin..2.0f64.max(margin * 1.01));
    with_abscissa(&m, target)
}

/// Solvable instance with `min Re σ(B) − max Re σ(A) ≥ sep`.
pub fn random_sylvester(rng: &mut impl Rng, n1: usize, n2: usize, sep: f64) -> SylvesterProblem {
    let a = with_abscissa(&random_matrix(rng, n1, n1, 2.0), -0.5 * sep - rng.gen_range(0.0..1.0));
    let b = with_min_real(&random_matrix(rng, n2, n2, 2.0), 0.5 * sep + rng.gen_range(0.0..1.0));
    let c = random_matrix(rng, n1, n2, 2.0);
    SylvesterProblem::new(a, b, c).unwrap()
}

/// `count` stable poles, real or in conjugate pairs.
pub fn random_stable_poles(rng: &mut impl Rng, count: usize, lo: f64, hi: f64) -> Vec<Complex64> {
    let mut poles = Vec::with_capacity(count);
    while poles.len() < count {
        let re = -rng.gen_range(lo..hi);
        if count - poles.len() >= 2 && rng.gen_bool(0.4) {
            let im = rng.gen_range(0.2..1.5);
            poles.push(Complex64::new(re, im));
            poles.push(Complex64::new(re, -im));
        } else {
            poles.push(Complex64::new(re, 0.0));
        }
    }
    poles
}

/// Companion-form SISO realization of `num(s)/den(s)` with monic `den`
/// given by its roots; `num` has degree `< n` (ascending coefficients).
pub fn companion(den_roots: &[f64], num: &[f64]) -> StateSpace {
    let n = den_roots.len();
    let mut den = vec![1.0];
    for r in den_roots {
        let mut next = vec![0.0; den.len() + 1];
        for (i, c) in den.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= r * c;
        }
        den = next;
    }
    let a = Matrix::from_fn(n, n, |i, j| {
        if i + 1 < n {
            if j == i + 1 {
                1.0
            } else {
                0.0
            }
        } else {
            -den[j]
        }
    });
    let mut b = Matrix::zeros(n, 1);
    b[(n - 1, 0)] = 1.0;
    let c = Matrix::from_fn(1, n, |_, j| num.get(j).copied().unwrap_or(0.0));
    StateSpace::new(a, b, c).unwrap()
}

/// Kind of cascade instance drawn by [`random_cascade`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CascadeKind {
    Generic,
    /// Sensor transfer function vanishes at an eigenvalue of `A₂`.
    TransmissionZero,
    /// `(A₂, C₂)` itself unobservable.
    HiddenPlantMode,
    /// `(A₁, C₁)` unobservable.
    HiddenSensorMode,
}

/// SISO cascade with sensor order `n1` and plant order `n2`, σ(A₁) real in
/// `[-3, -0.5]` and σ(A₂) real in `[0.2, 2]` so the spectra never meet.
pub fn random_cascade(rng: &mut impl Rng, n1: usize, n2: usize, kind: CascadeKind) -> CascadeSystem {
    let plant_roots: Vec<f64> = (0..n2).map(|_| rng.gen_range(0.2..2.0)).collect();
    let sensor_roots: Vec<f64> = (0..n1).map(|_| -rng.gen_range(0.5..3.0)).collect();
    let mut num: Vec<f64> = (0..n1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    num[0] += 2.0;
    match kind {
        CascadeKind::TransmissionZero if n1 >= 2 => {
            // num(s) = (s − λ)·r(s) with λ ∈ σ(A₂)
            let lambda = plant_roots[rng.gen_range(0..n2)];
            let r: Vec<f64> = (0..n1 - 1).map(|_| rng.gen_range(0.5..1.5)).collect();
            num = vec![0.0; n1];
            for (i, ri) in r.iter().enumerate() {
                num[i + 1] += ri;
                num[i] -= lambda * ri;
            }
        }
        CascadeKind::HiddenSensorMode if n1 >= 2 => {
            // pole-zero cancellation at a sensor eigenvalue
            let lambda = sensor_roots[0];
            num = vec![0.0; n1];
            num[0] = -lambda;
            num[1] = 1.0;
        }
        _ => {}
    }
    let sensor = companion(&sensor_roots, &num);
    // random similarity keeps the plant generic
    let t = Matrix::identity(n2)
        .checked_add(&random_matrix(rng, n2, n2, 0.3))
        .unwrap();
    let t_inv = cascade_core::linalg::inverse(&t).unwrap();
    let a2 = &(&t * &Matrix::from_diag(&plant_roots)) * &t_inv;
    let mut c2_diag: Vec<f64> = (0..n2).map(|_| rng.gen_range(0.5..1.5)).collect();
    if kind == CascadeKind::HiddenPlantMode {
        c2_diag[rng.gen_range(0..n2)] = 0.0;
    }
    let c2 = &Matrix::row_vector(&c2_diag) * &t_inv;
    let plant = StateSpace::new(a2, Matrix::zeros(n2, 1), c2).unwrap();
    CascadeSystem::new(sensor, plant).unwrap()
}

/// Relative Frobenius difference.
pub fn rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm_fro() / a.norm_fro().max(b.norm_fro()).max(1e-300)
}
