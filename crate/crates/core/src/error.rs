//! Error taxonomy for the numerical library.
//!
//! Every fallible operation returns [`CoreError`]; variants carry enough
//! context (node index, coordinate, offending value) to diagnose a failure
//! without re-running the computation.

use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Grid endpoints supplied in the wrong order.
    #[error("domain endpoints out of order: x_min = {x_min} must be < x_max = {x_max}")]
    DomainOrder { x_min: f64, x_max: f64 },

    /// Grid too small for the stencils used throughout.
    #[error("grid needs at least {min} samples, got {n}")]
    UndersizedGrid { n: usize, min: usize },

    /// Two grid functions or operators live on different grids.
    #[error("grid mismatch: ({a_min}, {a_max}, n={a_n}) vs ({b_min}, {b_max}, n={b_n})")]
    GridMismatch {
        a_min: f64,
        a_max: f64,
        a_n: usize,
        b_min: f64,
        b_max: f64,
        b_n: usize,
    },

    /// Derivative order other than 1 or 2 requested.
    #[error("unsupported derivative order {order}; only 1 and 2 are available")]
    UnsupportedOrder { order: u32 },

    /// Mass profile evaluated to a nonpositive value.
    #[error("nonpositive mass m = {m} at node {index} (x = {x})")]
    NonpositiveMass { index: usize, x: f64, m: f64 },

    /// Profile rejected by classification (interior singularity of U).
    #[error("profile rejected: {reason}")]
    RejectedProfile { reason: String },

    /// Ordering parameter outside the admissible interval [0, 1].
    #[error("ordering parameter alpha = {alpha} outside [0, 1]")]
    AlphaOutOfRange { alpha: f64 },

    /// The shift denominator lambda + cumulative integral changes sign in the box.
    #[error(
        "pole in the superpotential shift: lambda + cumulative integral crosses zero \
         near node {index} (x = {x}); choose lambda outside [{interval_lo}, {interval_hi}]"
    )]
    ShiftPole {
        index: usize,
        x: f64,
        interval_lo: f64,
        interval_hi: f64,
    },

    /// A closed-form state fails the box-normalizability test.
    #[error("state not normalizable on the box: {what}")]
    NonNormalizable { what: String },

    /// Transform requested at the ground energy, where the scaling degenerates.
    #[error("degenerate energy: |E - epsilon| = {gap:e} below 1e-10 (E = {e}, epsilon = {epsilon})")]
    DegenerateEnergy { e: f64, epsilon: f64, gap: f64 },

    /// Eigensolver handed a matrix that is not symmetric.
    #[error("eigensolver requires a symmetric operator; max asymmetry {max_asym:e} at band {band}")]
    NonSymmetric { band: i32, max_asym: f64 },

    /// Eigensolver handed a matrix wider than tridiagonal.
    #[error("eigensolver supports bandwidth <= 1 (tridiagonal); operator has bandwidth {bandwidth}")]
    UnsupportedBandwidth { bandwidth: usize },

    /// Too many eigenpairs requested for the interior problem size.
    #[error("requested k = {k} eigenpairs but the interior problem has only {max} rows")]
    TooManyEigenpairs { k: usize, max: usize },

    /// Inverse iteration failed to reach the residual target.
    #[error(
        "eigensolver failed to converge for pair {pair_index}: residual {residual:e} \
         after {iterations} iterations (target {target:e})"
    )]
    ConvergenceFailure {
        pair_index: usize,
        iterations: usize,
        residual: f64,
        target: f64,
    },

    /// Coherent-state label with a nonzero real part (unitarity requires z = -z*).
    #[error(
        "coherent-state label z = {re} + {im}i has a nonzero real part; \
         unitarity of the displacement demands a purely imaginary z"
    )]
    NonImaginaryLabel { re: f64, im: f64 },

    /// Displacement diagnostic requested beyond the documented |z| bound.
    #[error("displacement amplitude |z| = {z_abs} exceeds the documented bound {max}")]
    DisplacementAmplitude { z_abs: f64, max: f64 },

    /// Displacement diagnostic requested on a grid too large for dense work.
    #[error("dense displacement check is limited to n <= {max}; got n = {n}")]
    DenseGridTooLarge { n: usize, max: usize },

    /// Coefficient-matching system for the symmetry operator became singular.
    #[error("singular coefficient system at node {index} (x = {x}): {detail}")]
    SingularCoefficientSystem { index: usize, x: f64, detail: String },

    /// Tabulated data has the wrong length for the grid.
    #[error("tabulated data of length {len} does not match grid with n = {n}")]
    TabulatedLength { len: usize, n: usize },
}

/// Convenient result alias used across the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
