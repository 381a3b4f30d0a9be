//! Sylvester equations `A·S − S·B = C`.
//!
//! [`solve_sylvester`] is Bartels–Stewart on complex Schur forms;
//! [`kronecker_oracle`] solves the vectorized system densely and exists to
//! cross-check it.

use alloc::format;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{min_spectral_distance, schur, Lu, Spectrum};
use crate::matrix::{CMatrix, Matrix};
use crate::scalar::Scalar;

/// Relative eigenvalue gap below which the equation is declared unsolvable.
pub const SPECTRAL_GAP_TOL: f64 = 1e-8;
/// Largest vectorized system the oracle will assemble.
pub const KRONECKER_MAX_UNKNOWNS: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct SylvesterProblem {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl SylvesterProblem {
    pub fn new(a: Matrix, b: Matrix, c: Matrix) -> Result<Self> {
        let p = SylvesterProblem { a, b, c };
        p.check_dims()?;
        Ok(p)
    }

    fn check_dims(&self) -> Result<()> {
        let (n1, n2) = (self.a.rows(), self.b.rows());
        if !self.a.is_square() || !self.b.is_square() || self.c.shape() != (n1, n2) {
            return Err(Error::dim(
                "sylvester",
                format!("A {:?}, B {:?}, C {:?}", self.a.shape(), self.b.shape(), self.c.shape()),
            ));
        }
        Ok(())
    }

    fn gap_threshold(&self) -> f64 {
        SPECTRAL_GAP_TOL * self.a.norm_fro().max(self.b.norm_fro())
    }
}

/// Solves `A·S − S·B = C` by Schur reduction of both coefficients.
pub fn solve_sylvester(p: &SylvesterProblem) -> Result<Matrix> {
    p.check_dims()?;
    let (n1, n2) = (p.a.rows(), p.b.rows());
    if n1 == 0 || n2 == 0 {
        return Ok(Matrix::zeros(n1, n2));
    }
    let sa = schur(&p.a.to_complex())?;
    let sb = schur(&p.b.to_complex())?;
    let ea = Spectrum::from_eigenvalues((0..n1).map(|i| sa.t[(i, i)]).collect());
    let eb = Spectrum::from_eigenvalues((0..n2).map(|i| sb.t[(i, i)]).collect());
    let (gap, culprit) = min_spectral_distance(&ea, &eb);
    if !(gap > p.gap_threshold()) {
        return Err(Error::Unsolvable {
            reason: format!("σ(A) and σ(B) overlap (gap {gap:.3e})"),
            eigenvalue: culprit,
        });
    }

    let ta = &sa.t;
    let tb = &sb.t;
    let f = &(&sa.z.adjoint() * &p.c.to_complex()) * &sb.z;
    let mut y = CMatrix::zeros(n1, n2);
    for j in 0..n2 {
        let mut rhs: alloc::vec::Vec<Complex64> = f.column(j);
        for k in 0..j {
            let t = tb[(k, j)];
            if t != <Complex64 as Scalar>::zero() {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r += y[(i, k)] * t;
                }
            }
        }
        let mu = tb[(j, j)];
        for i in (0..n1).rev() {
            let mut acc = rhs[i];
            for l in i + 1..n1 {
                acc -= ta[(i, l)] * y[(l, j)];
            }
            y[(i, j)] = acc / (ta[(i, i)] - mu);
        }
    }
    let s = &(&sa.z * &y) * &sb.z.adjoint();
    let out = s.real_part();
    if !out.all_finite() {
        return Err(Error::Numerical("sylvester: non-finite solution".into()));
    }
    Ok(out)
}

/// Dense solve of `(I⊗A − Bᵀ⊗I)·vec(S) = vec(C)`.
pub fn kronecker_oracle(p: &SylvesterProblem) -> Result<Matrix> {
    p.check_dims()?;
    let (n1, n2) = (p.a.rows(), p.b.rows());
    let n = n1 * n2;
    if n > KRONECKER_MAX_UNKNOWNS {
        return Err(Error::Input(format!(
            "kronecker oracle limited to {KRONECKER_MAX_UNKNOWNS} unknowns, got {n}"
        )));
    }
    let mut k = Matrix::zeros(n, n);
    for j in 0..n2 {
        for i in 0..n1 {
            let row = j * n1 + i;
            for kk in 0..n1 {
                k[(row, j * n1 + kk)] += p.a[(i, kk)];
            }
            for l in 0..n2 {
                k[(row, l * n1 + i)] -= p.b[(l, j)];
            }
        }
    }
    let tol = 10.0 * p.gap_threshold().max(f64::MIN_POSITIVE);
    let lu = Lu::with_pivot_tol(&k, tol).map_err(|_| Error::Unsolvable {
        reason: "vectorized Sylvester operator is singular".into(),
        eigenvalue: None,
    })?;
    let x = lu.solve_vec(&p.c.vec_columns());
    Ok(Matrix::from_columns_vec(n1, n2, &x))
}

/// Frobenius norm of `A·S − S·B − C`.
pub fn residual(p: &SylvesterProblem, s: &Matrix) -> Result<f64> {
    p.check_dims()?;
    if s.shape() != p.c.shape() {
        return Err(Error::dim(
            "sylvester residual",
            format!("S {:?} vs C {:?}", s.shape(), p.c.shape()),
        ));
    }
    let r = &(&(&p.a * s) - &(s * &p.b)) - &p.c;
    Ok(r.norm_fro())
}

/// Residual bound used by tests and design reports: `1e-9·(‖A‖+‖B‖)·‖S‖ + 1e-12`.
pub fn residual_bound(p: &SylvesterProblem, s: &Matrix) -> f64 {
    1e-9 * (p.a.norm_fro() + p.b.norm_fro()) * s.norm_fro() + 1e-12
}
