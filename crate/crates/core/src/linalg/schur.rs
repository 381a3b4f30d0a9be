//! Complex Schur decomposition: Householder reduction to Hessenberg form
//! followed by single-shift QR sweeps with Givens rotations.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::scalar::Scalar;

/// `A = Z·T·Zᴴ` with `T` upper triangular and `Z` unitary.
#[derive(Debug, Clone)]
pub struct Schur {
    pub t: CMatrix,
    pub z: CMatrix,
}

const MAX_ITER_PER_EIGENVALUE: usize = 60;

/// Reduces `a` in place to upper Hessenberg form and returns the accumulated
/// unitary factor.
pub(crate) fn hessenberg(h: &mut CMatrix) -> CMatrix {
    let n = h.rows();
    let mut q = CMatrix::identity(n);
    if n < 3 {
        return q;
    }
    let mut v = Vec::with_capacity(n);
    for k in 0..n - 2 {
        let tail: f64 = (k + 2..n).map(|i| h[(i, k)].abs_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let norm = libm::sqrt(tail + x0.abs_sqr());
        let phase = if x0.abs() > 0.0 {
            x0 / x0.abs()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;
        v.clear();
        v.push(x0 - alpha);
        for i in k + 2..n {
            v.push(h[(i, k)]);
        }
        let vnorm = libm::sqrt(v.iter().map(|z| z.abs_sqr()).sum());
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H ← (I − 2vvᴴ) H
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for (idx, i) in (k + 1..n).enumerate() {
                dot += v[idx].conj() * h[(i, j)];
            }
            let dot = dot * 2.0;
            for (idx, i) in (k + 1..n).enumerate() {
                let vi = v[idx];
                h[(i, j)] -= vi * dot;
            }
        }
        // H ← H (I − 2vvᴴ), Q ← Q (I − 2vvᴴ)
        for m in [&mut *h, &mut q] {
            for i in 0..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for (idx, j) in (k + 1..n).enumerate() {
                    dot += m[(i, j)] * v[idx];
                }
                let dot = dot * 2.0;
                for (idx, j) in (k + 1..n).enumerate() {
                    let vj = v[idx].conj();
                    m[(i, j)] -= dot * vj;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
    q
}

/// Rotation `[c, s; −s̄, c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.abs();
    let nb = b.abs();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let rho = libm::hypot(na, nb);
    (na / rho, (a / na) * b.conj() / rho)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).abs() <= (m2 - d).abs() {
        m1
    } else {
        m2
    }
}

/// Complex Schur decomposition of a square matrix.
pub fn schur(a: &CMatrix) -> Result<Schur> {
    if !a.is_square() {
        return Err(Error::dim("schur", format!("{:?} is not square", a.shape())));
    }
    if !a.all_finite() {
        return Err(Error::Numerical("schur: non-finite input".into()));
    }
    let n = a.rows();
    let mut t = a.clone();
    let mut z = hessenberg(&mut t);
    if n <= 1 {
        return Ok(Schur { t, z });
    }
    let anorm = t.norm_fro().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let mut rots: Vec<(usize, f64, Complex64)> = Vec::with_capacity(n);

    while hi > 0 {
        // locate the start of the trailing unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = t[(lo, lo)].abs() + t[(lo - 1, lo - 1)].abs();
            let s = if s == 0.0 { anorm } else { s };
            if t[(lo, lo - 1)].abs() <= eps * s {
                t[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > MAX_ITER_PER_EIGENVALUE {
            return Err(Error::NoConvergence {
                what: "complex QR iteration",
                iterations: total,
            });
        }
        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            let sub = t[(hi, hi - 1)].abs();
            t[(hi, hi)] + Complex64::new(0.75 * sub, 0.4 * sub)
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };

        for i in lo..=hi {
            t[(i, i)] -= shift;
        }
        rots.clear();
        for k in lo..hi {
            let (c, s) = givens(t[(k, k)], t[(k + 1, k)]);
            for j in k..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = x * c + s * y;
                t[(k + 1, j)] = -s.conj() * x + y * c;
            }
            t[(k + 1, k)] = Complex64::new(0.0, 0.0);
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            let top = (k + 1).min(hi);
            for i in 0..=top {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * c + y * s.conj();
                t[(i, k + 1)] = -x * s + y * c;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * c + y * s.conj();
                z[(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in lo..=hi {
            t[(i, i)] += shift;
        }
    }
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(Schur { t, z })
}
