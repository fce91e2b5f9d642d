//! Identification of Koopman eigenfrequencies and their energies from a single
//! uniformly sampled observable.
//!
//! The pipeline is: estimate lag products of the series ([`series`]), build the
//! delay-embedded Gram matrix and take its leading eigenvalues ([`matrices`]),
//! check the renormalized eigenvalues for convergence over a grid of delay and
//! averaging lengths ([`scan`]), then read frequencies off the empirical
//! eigenvectors and cross-check their energies with the mean-ergodic average
//! ([`modes`]). [`dynamics`] provides the reference systems used to validate
//! all of the above, and [`grid`] the on-disk format for gridded fields.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod matrices;
pub mod modes;
pub mod report;
pub mod scan;
pub mod series;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use dynamics::{
    integrate_lorenz63, integrate_rotor, synth_grid, synth_tones, CellRecipe, GridRecipe,
    IntegrationConfig, Lorenz63Params, Lorenz63State, RotorState, SyntheticTones,
};
pub use matrices::{
    build_autocov_matrix, build_gram, build_gram_multi, build_trajectory, top_eigen,
    top_eigen_with, AutocovMatrix, EigenOptions, EigenResult, GramMatrix, HermitianSource,
    TrajectoryMatrix,
};
pub use modes::{
    extract_frequency, pair_conjugates, yosida, yosida_scan, yosida_with_curve, Extraction,
    FrequencyEstimate, ModeEstimate, YosidaEstimate,
};
pub use scan::{
    judge_convergence_in_m, judge_convergence_in_n, run_scan, ScanGrid, ScanReport,
    ToleranceConfig, Verdict,
};
pub use series::{
    autocovariance, autocovariance_with, detrend_linear, inner_product, normalize_unit_variance,
    AutocovMethod, AutocovSequence, TimeSeries,
};
