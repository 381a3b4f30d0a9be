//! Matrix exponential by scaling and squaring with a diagonal Padé approximant.

use alloc::format;
use alloc::vec::Vec;

use super::lu::Lu;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const PADE_DEGREE: usize = 6;
/// With ‖X‖₁ ≤ 1/2 the [6/6] approximant's backward error is below 2⁻⁵³.
const SCALED_NORM: f64 = 0.5;
const MAX_SQUARINGS: i32 = 1100;

fn pade_coefficients() -> [f64; PADE_DEGREE + 1] {
    let q = PADE_DEGREE as f64;
    let mut c = [0.0; PADE_DEGREE + 1];
    c[0] = 1.0;
    for k in 1..=PADE_DEGREE {
        let kf = k as f64;
        c[k] = c[k - 1] * (q - kf + 1.0) / (kf * (2.0 * q - kf + 1.0));
    }
    c
}

/// `e^{M·t}` for square `M`.
pub fn expm<T: Scalar>(m: &Matrix<T>, t: f64) -> Result<Matrix<T>> {
    if !m.is_square() {
        return Err(Error::dim("expm", format!("{:?} is not square", m.shape())));
    }
    let n = m.rows();
    let x = m.scale(T::from_real(t));
    if !x.all_finite() {
        return Err(Error::Numerical("expm: non-finite M·t".into()));
    }
    let norm = x.norm_1();
    let mut squarings = 0i32;
    if norm > SCALED_NORM {
        squarings = libm::ceil(libm::log2(norm / SCALED_NORM)) as i32;
    }
    if squarings > MAX_SQUARINGS {
        return Err(Error::Numerical(format!("expm: ‖M·t‖₁ = {norm:.3e} overflows")));
    }
    let x = x.scale(T::from_real(libm::ldexp(1.0, -squarings)));
    let c = pade_coefficients();

    let mut powers: Vec<Matrix<T>> = Vec::with_capacity(PADE_DEGREE + 1);
    powers.push(Matrix::identity(n));
    for k in 1..=PADE_DEGREE {
        let next = &powers[k - 1] * &x;
        powers.push(next);
    }
    let mut num = Matrix::zeros(n, n);
    let mut den = Matrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        let term = p.scale(T::from_real(c[k]));
        num = &num + &term;
        den = if k % 2 == 0 { &den + &term } else { &den - &term };
    }
    let mut r = Lu::new(&den)?.solve(&num)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if !r.all_finite() {
        return Err(Error::Numerical(format!("expm overflowed after {squarings} squarings")));
    }
    Ok(r)
}
