//! `cosh(xG)` and `𝒢(xG) = sinh(xG)/(xG)` evaluated from `G²` alone.
//!
//! Both are even entire functions, so with `Z = x²G²` they are the power
//! series `Σ Zᵏ/(2k)!` and `Σ Zᵏ/(2k+1)!`. The argument is scaled by `4⁻ˢ`
//! until `‖Z‖₁ ≤ 1` and restored with the doubling identities
//! `cosh 2y = 2cosh²y − 1` and `𝒢(2y) = 𝒢(y)·cosh y`.

use alloc::format;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenSeriesOptions {
    /// Stop once the term norm falls below this times the partial-sum norm.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for EvenSeriesOptions {
    fn default() -> Self {
        EvenSeriesOptions {
            rel_tol: 1e-14,
            max_terms: 200,
        }
    }
}

/// `(cosh(xG), 𝒢(xG))` where `m2 = G²`.
pub fn even_matrix_function_pair(m2: &Matrix, x: f64) -> Result<(Matrix, Matrix)> {
    even_matrix_function_pair_with(m2, x, EvenSeriesOptions::default())
}

pub fn even_matrix_function_pair_with(m2: &Matrix, x: f64, opts: EvenSeriesOptions) -> Result<(Matrix, Matrix)> {
    if !m2.is_square() {
        return Err(Error::dim(
            "even_matrix_function_pair",
            format!("{:?} is not square", m2.shape()),
        ));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Input(format!("argument x must be finite and >= 0, got {x}")));
    }
    let n = m2.rows();
    let z = m2.scale(x * x);
    let norm = z.norm_1();
    let mut doublings = 0u32;
    while norm / libm::pow(4.0, doublings as f64) > 1.0 {
        doublings += 1;
    }
    let y = z.scale(libm::pow(4.0, -(doublings as f64)));

    let id = Matrix::identity(n);
    let mut cosh = id.clone();
    let mut sinc = id.clone();
    let mut power = id.clone();
    let mut done = false;
    // term_k of cosh is Yᵏ/(2k)!, of sinc Yᵏ/(2k+1)!
    let mut fact_even = 1.0f64;
    let mut fact_odd = 1.0f64;
    for k in 1..opts.max_terms {
        power = &power * &y;
        let kf = k as f64;
        fact_even *= (2.0 * kf - 1.0) * (2.0 * kf);
        fact_odd *= (2.0 * kf) * (2.0 * kf + 1.0);
        let tc = power.scale(1.0 / fact_even);
        let ts = power.scale(1.0 / fact_odd);
        cosh = &cosh + &tc;
        sinc = &sinc + &ts;
        let small_c = tc.norm_1() <= opts.rel_tol * cosh.norm_1();
        let small_s = ts.norm_1() <= opts.rel_tol * sinc.norm_1();
        if (small_c && small_s) || power.max_abs() == 0.0 {
            done = true;
            break;
        }
    }
    if !done && n > 0 {
        return Err(Error::NoConvergence {
            what: "even matrix-function series",
            iterations: opts.max_terms,
        });
    }
    for _ in 0..doublings {
        sinc = &sinc * &cosh;
        let c2 = &cosh * &cosh;
        cosh = &c2.scale(2.0) - &id;
    }
    if !cosh.all_finite() || !sinc.all_finite() {
        return Err(Error::Numerical(format!(
            "even matrix functions overflow for ‖x²G²‖₁ = {norm:.3e}"
        )));
    }
    Ok((cosh, sinc))
}
