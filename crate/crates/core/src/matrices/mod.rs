//! Delay-embedding matrices and their leading eigenpairs.
//!
//! Renormalized eigenvalues are `d_i / (N + 1)`, i.e. divided by the matrix
//! dimension rather than by the delay count `N`. The two agree in the large-N
//! limit, and dividing by the dimension makes a pure tone come out exact at
//! every finite `N`.

mod dump;
mod eigen;
mod gram;

pub use dump::{read_matrix_dump, write_matrix_dump, DUMP_MAGIC};
pub use eigen::{top_eigen, top_eigen_with, EigenOptions, EigenResult, SolverPath};
pub use gram::{
    build_autocov_matrix, build_gram, build_gram_multi, build_trajectory, AutocovMatrix,
    GramMatrix, TrajectoryMatrix,
};

use std::borrow::Cow;

use nalgebra::DMatrix;
use num_complex::Complex64;

/// A Hermitian matrix that can be handed to the eigensolver.
pub trait HermitianSource {
    /// Delay count `N`; the matrix is `(N + 1) x (N + 1)`.
    fn n_delay(&self) -> usize;

    fn dense(&self) -> Cow<'_, DMatrix<Complex64>>;

    fn dim(&self) -> usize {
        self.n_delay() + 1
    }
}

impl HermitianSource for DMatrix<Complex64> {
    fn n_delay(&self) -> usize {
        self.nrows().saturating_sub(1)
    }

    fn dense(&self) -> Cow<'_, DMatrix<Complex64>> {
        Cow::Borrowed(self)
    }
}
