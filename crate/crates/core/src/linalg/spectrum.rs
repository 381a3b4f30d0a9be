use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::schur::schur;
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Matrix};
use crate::scalar::Scalar;

/// Eigenvalues with algebraic multiplicity, plus the largest real part.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    pub stability_margin: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(eigenvalues: Vec<Complex64>) -> Self {
        let stability_margin = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        Spectrum {
            eigenvalues,
            stability_margin,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues ordered by real part, then imaginary part.
    pub fn sorted(&self) -> Vec<Complex64> {
        let mut v = self.eigenvalues.clone();
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal))
        });
        v
    }

    /// Distance from `z` to the nearest eigenvalue.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.eigenvalues
            .iter()
            .map(|e| (e - z).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn eigenvalues(m: &Matrix) -> Result<Spectrum> {
    eigenvalues_complex(&m.to_complex())
}

pub fn eigenvalues_complex(m: &CMatrix) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::dim("eigenvalues", format!("{:?} is not square", m.shape())));
    }
    let s = schur(m)?;
    let ev = (0..m.rows()).map(|i| s.t[(i, i)]).collect();
    Ok(Spectrum::from_eigenvalues(ev))
}

/// True iff every eigenvalue has real part `<= -margin`.
pub fn is_hurwitz(m: &Matrix, margin: f64) -> Result<bool> {
    if !(margin > 0.0) {
        return Err(Error::Input(format!("Hurwitz margin must be positive, got {margin}")));
    }
    Ok(eigenvalues(m)?.stability_margin <= -margin)
}

/// Smallest distance between an eigenvalue of `m1` and one of `m2`, with the
/// eigenvalue of `m2` attaining it.
pub fn min_spectral_distance(s1: &Spectrum, s2: &Spectrum) -> (f64, Option<Complex64>) {
    let mut best = (f64::INFINITY, None);
    for &b in &s2.eigenvalues {
        let d = s1.distance_to(b);
        if d < best.0 {
            best = (d, Some(b));
        }
    }
    best
}

pub fn spectra_disjoint(m1: &Matrix, m2: &Matrix, tol: f64) -> Result<bool> {
    let s1 = eigenvalues(m1)?;
    let s2 = eigenvalues(m2)?;
    Ok(min_spectral_distance(&s1, &s2).0 > tol)
}

/// Largest distance between paired members of two equal-size multisets under
/// greedy nearest pairing. Returns infinity when the sizes differ.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = alloc::vec![false; b.len()];
    let mut worst = 0.0f64;
    // pair the most isolated points first so clusters do not steal partners
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].re.partial_cmp(&a[j].re).unwrap_or(core::cmp::Ordering::Equal));
    for i in order {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, z) in b.iter().enumerate() {
            if !used[j] {
                let d = (a[i] - z).norm();
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        used[best.1] = true;
        worst = worst.max(best.0);
    }
    worst
}

/// Checks that a pole list is closed under complex conjugation.
pub fn is_conjugate_closed(poles: &[Complex64], tol: f64) -> bool {
    let mut used = alloc::vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        let p = poles[i];
        if libm::fabs(p.im) <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..poles.len()).find(|&j| j != i && !used[j] && (poles[j] - p.conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// Real coefficients `c` of the monic polynomial `∏(s − pᵢ) = sⁿ + c[n−1]sⁿ⁻¹ + … + c[0]`.
pub fn poly_from_roots(poles: &[Complex64]) -> Vec<f64> {
    let mut coeffs = alloc::vec![Complex64::new(1.0, 0.0)];
    for &p in poles {
        let mut next = alloc::vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * p;
        }
        coeffs = next;
    }
    coeffs.pop();
    coeffs.iter().map(|c| c.re()).collect()
}
