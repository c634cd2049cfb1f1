//! Gaussian-state propagation in arrays of quadratic nonlinear waveguides
//! under a flat pump, and diagnostics for the spatial multipartite
//! entanglement it produces.
//!
//! Quadratures follow `x = A + A†`, `y = i(A† − A)`, so the vacuum has unit
//! variance. All phase-space vectors are interleaved `(x₁, y₁, …, x_N, y_N)`.
//! Lengths are in mm, rates (coupling, nonlinearity, eigenvalues) in 1/mm and
//! phases in radians.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] builds the coupling matrix and its supermode basis.
//! * [`propagation`] evolves each supermode analytically, assembles the
//!   full generator and provides the matrix-exponential oracle.
//! * [`gaussian`] holds covariance-matrix algebra.
//! * [`entanglement`] evaluates van Loock–Furusawa inequalities, Duan
//!   nullifiers and the resulting entanglement graphs.
//! * [`graphcalc`] evaluates the complex adjacency matrices of the
//!   large-coupling state.
//! * [`cli`] and [`config`] back the `anw` command-line tool.

pub mod cli;
pub mod config;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod graphcalc;
pub mod lattice;
pub mod propagation;

pub use entanglement::{
    asymptotic_vlf, duan_nullifiers, large_coupling_covariance, lo_profile, optimize_gains, vlf_suite, vlf_value,
    EntanglementGraph, Variant, VlfReport,
};
pub use error::{Error, Result};
pub use gaussian::{
    change_basis, check_physicality, rotate_quadratures, variance_of_combination, Basis, CovarianceMatrix, Direction,
    MeasurementProfile, PhysicalityReport,
};
pub use graphcalc::{adjacency_matrices, approximation_error, v_infinity, AdjacencyPair};
pub use lattice::{
    build_coupling_matrix, homogeneous_closed_form, supermode_decomposition, zero_supermode_index, ArrayConfig,
    CouplingMatrix, SupermodeBasis,
};
pub use propagation::{
    assemble_generator, covariance_individual, propagate_numeric, squeezing_extrema, squeezing_params,
    supermode_covariance, supermode_symplectic, Generator, Regime, SqueezingParams, SymplecticBlock,
};
