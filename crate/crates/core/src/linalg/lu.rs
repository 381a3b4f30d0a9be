use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu<T: Scalar> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    /// Factors `a`, treating pivots at or below `n·ε·max|a|` as singular.
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows().max(1) as f64;
        let tol = n * f64::EPSILON * a.max_abs();
        Self::with_pivot_tol(a, tol)
    }

    /// Factors `a`, treating pivots of modulus `<= pivot_tol` as singular.
    pub fn with_pivot_tol(a: &Matrix<T>, pivot_tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim("lu", format!("{:?} is not square", a.shape())));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pmax > pivot_tol) {
                return Err(Error::Unsolvable {
                    reason: format!("singular matrix (pivot {pmax:.3e} in column {k})"),
                    eigenvalue: None,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        if b.rows() != self.dim() {
            return Err(Error::dim(
                "lu solve",
                format!("rhs has {} rows, system has {}", b.rows(), self.dim()),
            ));
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        self.solve(&Matrix::identity(n)).expect("identity has matching rows")
    }
}

/// Solves `a·x = b`.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::new(a)?.solve(b)
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::new(a)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn solves_real_and_complex_systems() {
        let a = Matrix::from_rows(&[[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]).unwrap();
        let x = Matrix::col_vector(&[1.0, -2.0, 0.5]);
        let b = &a * &x;
        let got = solve(&a, &b).unwrap();
        assert!((&got - &x).max_abs() < 1e-14);

        let ac = a.to_complex().shift(Complex64::new(0.0, 1.0));
        let xc = Matrix::col_vector(&[
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ]);
        let got = solve(&ac, &(&ac * &xc)).unwrap();
        assert!((&got - &xc).max_abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::new(&a), Err(Error::Unsolvable { .. })));
    }
}
