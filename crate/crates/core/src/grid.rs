//! Uniformly sampled functions on `[0, L]` and quadrature over them.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Scalar- or vector-valued samples at `x_k = k·dx`, `k = 0..=n`, with
/// `dx = L/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialFunction {
    domain_length: f64,
    dim: usize,
    values: Vec<f64>,
}

impl SpatialFunction {
    /// `values` holds `dim` consecutive components per grid point.
    pub fn new(domain_length: f64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if !(domain_length > 0.0) || !domain_length.is_finite() {
            return Err(Error::Input(format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        if dim == 0 || !values.len().is_multiple_of(dim) || values.len() / dim < 2 {
            return Err(Error::Input(format!(
                "need at least 2 samples of dimension {dim}, got {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite sample".into()));
        }
        Ok(SpatialFunction {
            domain_length,
            dim,
            values,
        })
    }

    pub fn scalar(domain_length: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(domain_length, 1, values)
    }

    /// Samples `f` on `intervals + 1` uniform points.
    pub fn from_fn(
        domain_length: f64,
        intervals: usize,
        dim: usize,
        mut f: impl FnMut(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let dx = domain_length / intervals as f64;
        let mut values = Vec::with_capacity((intervals + 1) * dim);
        for k in 0..=intervals {
            let v = f(k as f64 * dx);
            if v.len() != dim {
                return Err(Error::dim(
                    "SpatialFunction::from_fn",
                    format!("sample {k} has {} components, expected {dim}", v.len()),
                ));
            }
            values.extend(v);
        }
        Self::new(domain_length, dim, values)
    }

    pub fn scalar_from_fn(domain_length: f64, intervals: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::from_fn(domain_length, intervals, 1, |x| alloc::vec![f(x)])
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.len() - 1
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.intervals() as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.dx()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.values[k * self.dim + i]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max)
    }
}

/// Quadrature rule over uniform samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite Simpson; an odd interval count closes with a 3/8 panel.
    #[default]
    Simpson,
    /// `(L/P)·Σ_{k=1..P} f(kL/P)`; the interval count must be a multiple of `P`.
    RightEndpoint { panels: usize },
}

/// Integral of uniformly spaced samples `f` with spacing `dx`.
pub fn integrate(f: &[f64], dx: f64, rule: Quadrature) -> Result<f64> {
    let n = f.len();
    if n < 2 {
        return Err(Error::Input("quadrature needs at least 2 samples".into()));
    }
    let intervals = n - 1;
    match rule {
        Quadrature::Simpson => Ok(simpson(f, dx)),
        Quadrature::RightEndpoint { panels } => {
            if panels == 0 || !intervals.is_multiple_of(panels) {
                return Err(Error::Input(format!(
                    "right-endpoint rule with {panels} panels needs an interval count \
                     divisible by it, got {intervals}"
                )));
            }
            let stride = intervals / panels;
            let h = dx * stride as f64;
            Ok(h * (1..=panels).map(|k| f[k * stride]).sum::<f64>())
        }
    }
}

fn simpson(f: &[f64], dx: f64) -> f64 {
    let intervals = f.len() - 1;
    match intervals {
        1 => 0.5 * dx * (f[0] + f[1]),
        3 => 3.0 * dx / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]),
        _ if intervals.is_multiple_of(2) => {
            let mut acc = f[0] + f[intervals];
            for (k, v) in f.iter().enumerate().take(intervals).skip(1) {
                acc += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            acc * dx / 3.0
        }
        _ => {
            let m = intervals - 3;
            simpson(&f[..=m], dx) + simpson(&f[m..], dx)
        }
    }
}

/// `‖f‖_{L²}` by composite Simpson.
pub fn l2_norm(f: &[f64], dx: f64) -> f64 {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    libm::sqrt(simpson(&sq, dx).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, f64) {
        let dx = 1.0 / n as f64;
        ((0..=n).map(|k| f(k as f64 * dx)).collect(), dx)
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [2, 3, 4, 5, 7, 10] {
            let (f, dx) = samples(n, |x| 1.0 + x - 2.0 * x * x + 4.0 * x * x * x);
            let exact = 1.0 + 0.5 - 2.0 / 3.0 + 1.0;
            assert!(
                (integrate(&f, dx, Quadrature::Simpson).unwrap() - exact).abs() < 1e-14,
                "n={n}"
            );
        }
    }

    #[test]
    fn simpson_fourth_order() {
        let err = |n| {
            let (f, dx) = samples(n, libm::exp);
            (integrate(&f, dx, Quadrature::Simpson).unwrap() - (core::f64::consts::E - 1.0)).abs()
        };
        let ratio = err(16) / err(32);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn right_endpoint_rule() {
        let (f, dx) = samples(100, |x| x);
        // (1/20)·Σ k/20 for k = 1..=20 = 21/40
        let v = integrate(&f, dx, Quadrature::RightEndpoint { panels: 20 }).unwrap();
        assert!((v - 21.0 / 40.0).abs() < 1e-14);
        assert!(integrate(&f, dx, Quadrature::RightEndpoint { panels: 30 }).is_err());
    }

    #[test]
    fn spatial_function_validation() {
        assert!(SpatialFunction::scalar(1.0, alloc::vec![1.0]).is_err());
        assert!(SpatialFunction::scalar(0.0, alloc::vec![1.0, 2.0]).is_err());
        assert!(SpatialFunction::new(1.0, 2, alloc::vec![1.0, 2.0, 3.0]).is_err());
        let s = SpatialFunction::from_fn(2.0, 4, 2, |x| alloc::vec![x, -x]).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s.dx(), 0.5);
        assert_eq!(s.at(2), &[1.0, -1.0]);
        assert_eq!(s.component(1), alloc::vec![0.0, -0.5, -1.0, -1.5, -2.0]);
    }
}
