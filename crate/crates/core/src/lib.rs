//! Numerical library for position-dependent-mass Schrödinger problems.
//!
//! The crate builds factorized Hamiltonians for a particle whose mass varies
//! with position, exposes the associated ladder operators and deformed
//! oscillator algebra, constructs one-parameter isospectral deformations of a
//! given problem, realizes the ordering-ambiguity symmetry that swaps the
//! kinetic ordering parameter `alpha` with `1 - alpha`, and evaluates
//! coherent states together with their generalized uncertainty products.
//!
//! Module layout mirrors the mathematical pipeline:
//!
//! * [`grid`] — uniform grids, quadrature, high-order finite differences;
//! * [`linop`] — banded operators, staggered first-order factors, Gram forms;
//! * [`eig`] — symmetric tridiagonal Dirichlet eigensolver;
//! * [`profile`] — mass profiles, superpotential families, classification;
//! * [`ladder`] — lowering/raising pairs, the deformed-commutator function,
//!   and the superpotential shift behind the isospectral construction;
//! * [`hamiltonian`] — direct and factorized assembly, effective potentials,
//!   kinetic-ordering variants, and the ground-energy offset convention;
//! * [`isospectral`] — the one-parameter deformation: transformed ground
//!   state, excited-state map, companion mode, partner spectra, and the
//!   intertwining checks;
//! * [`symmetry`] — the label mirror `alpha -> 1 - alpha`, its first-order
//!   intertwiner in closed form, and the coefficient-matching cross-check;
//! * [`coherent`] — displaced ground states, observables, expectation
//!   tables, and the uncertainty-product analysis.

// Stencil kernels index several arrays at shifted offsets at once, where
// iterator chains obscure the arithmetic; validation guards use negated
// comparisons on floats deliberately, so that NaN fails them.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coherent;
pub mod eig;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod isospectral;
pub mod ladder;
pub mod linop;
pub mod profile;
pub mod symmetry;

pub use error::{CoreError, Result};
