//! Observer design for cascade linear systems observed through sensor
//! dynamics, and for tracking-error observers in output regulation.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! - [`linalg`]: dense matrices, spectra, `expm`, and the even pair
//!   `cosh(xG)`, `sinh(xG)/(xG)` evaluated from `G²`;
//! - [`sylvester`]: Bartels–Stewart solver for `A·S − S·B = C` with a
//!   Kronecker-product oracle;
//! - [`design`]: observability tests, single-output pole placement, the
//!   four-step cascade gain scheme and its block-decoupling check;
//! - [`delay`], [`heat`], [`regulation`]: the transport-delay, heat-equation
//!   and output-regulation instantiations;
//! - [`sim`]: explicit steppers, trajectories and decay-rate fits;
//! - [`fig1`]: the unstable heat benchmark and its reference gains.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod delay;
pub mod design;
pub mod error;
pub mod fig1;
pub mod grid;
pub mod heat;
pub mod linalg;
pub mod matrix;
pub mod regulation;
pub mod scalar;
pub mod sim;
pub mod sylvester;

pub use error::{Error, Result};
pub use matrix::{CMatrix, Matrix};
pub use num_complex::Complex64;
