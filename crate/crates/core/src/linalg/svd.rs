//! One-sided (Hestenes) Jacobi SVD; enough for rank and null-space tests.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 80;

/// Singular values (unsorted, one per input column) and right singular vectors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub v: Matrix<Complex64>,
}

pub fn svd<T: Scalar>(a: &Matrix<T>) -> Result<Svd> {
    let (m, n) = a.shape();
    // column-major working copy
    let mut u: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..m).map(|i| a[(i, j)].to_complex()).collect())
        .collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    let tol = f64::EPSILON * (m.max(1) as f64);
    // columns below this are numerically zero and take no part in rotations
    let floor = {
        let f = f64::EPSILON * a.norm_fro();
        f * f
    };
    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi SVD",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        converged = true;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha: f64 = u[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = u[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = u[p].iter().zip(&u[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                converged = false;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for cols in [&mut u, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    let cp = &mut lo[p];
                    let cq = &mut hi[0];
                    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                        let yq = *y * phase.conj();
                        let xp = *x;
                        *x = xp * c - yq * s;
                        *y = xp * s + yq * c;
                    }
                }
            }
        }
    }
    let singular_values = u
        .iter()
        .map(|col| libm::sqrt(col.iter().map(|z| z.norm_sqr()).sum()))
        .collect();
    let vm = Matrix::from_fn(n, n, |i, j| v[j][i]);
    Ok(Svd { singular_values, v: vm })
}

/// Numerical rank: singular values above `rel_tol·σ_max`.
pub fn rank<T: Scalar>(a: &Matrix<T>, rel_tol: f64) -> Result<usize> {
    if a.rows() == 0 || a.cols() == 0 {
        return Ok(0);
    }
    let s = svd(a)?;
    let smax = s.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.singular_values.iter().filter(|&&x| x > rel_tol * smax).count())
}

/// Orthonormal basis (as columns) of the numerical null space, using the
/// absolute cutoff `abs_tol` on singular values.
pub fn null_space<T: Scalar>(a: &Matrix<T>, abs_tol: f64) -> Result<Matrix<Complex64>> {
    let n = a.cols();
    let s = svd(a)?;
    let keep: Vec<usize> = (0..n).filter(|&j| s.singular_values[j] <= abs_tol).collect();
    Ok(Matrix::from_fn(n, keep.len(), |i, k| s.v[(i, keep[k])]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal_and_rank() {
        let a = Matrix::from_rows(&[[3.0, 0.0], [0.0, -4.0], [0.0, 0.0]]).unwrap();
        let mut s = svd(&a).unwrap().singular_values;
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 4.0).abs() < 1e-14);
        let r = Matrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap();
        assert_eq!(rank(&r, 1e-10).unwrap(), 1);
    }

    #[test]
    fn null_space_is_annihilated() {
        let a = Matrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]).unwrap();
        let ns = null_space(&a, 1e-10).unwrap();
        assert_eq!(ns.cols(), 1);
        let prod = &a.to_complex() * &ns;
        assert!(prod.max_abs() < 1e-12);
    }
}
