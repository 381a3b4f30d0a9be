//! Dense linear algebra: factorizations, spectra and matrix functions.

mod even;
mod expm;
mod lu;
mod schur;
mod spectrum;
mod svd;

pub use even::{even_matrix_function_pair, even_matrix_function_pair_with, EvenSeriesOptions};
pub use expm::expm;
pub use lu::{inverse, solve, Lu};
pub use schur::{schur, Schur};
pub use spectrum::{
    eigenvalues, eigenvalues_complex, is_conjugate_closed, is_hurwitz, min_spectral_distance, multiset_distance,
    poly_from_roots, spectra_disjoint, Spectrum,
};
pub use svd::{null_space, rank, svd, Svd};
