//! Steady subsonic Euler-Poisson flow in a finite flat nozzle.
//!
//! The suite computes steady subsonic solutions of the two-dimensional
//! Euler-Poisson system by perturbing a one-dimensional background state:
//!
//! 1. [`background`] integrates the background ODE system and extrudes it
//!    onto the 2D grid;
//! 2. [`eos`] provides the pointwise state functions (density closure,
//!    temperature, flux functions and their exact derivatives) and the
//!    background linearization coefficients;
//! 3. [`elliptic`] discretizes and solves the coupled linear system for the
//!    velocity-potential and electric-potential perturbations, and scalar
//!    Poisson problems for the stream potential;
//! 4. [`transport`] carries the entropy and the pseudo-Bernoulli invariant
//!    along streamlines through the flow map of the stream function;
//! 5. [`solver`] assembles the nonlinear right-hand sides, runs the inner
//!    frozen-transport contraction and the outer transport fixed point,
//!    reconstructs primitive variables and verifies them against the
//!    conservation-law form of the system.
//!
//! Grids, fields and the discrete calculus live in [`grid`] and [`field`];
//! [`export`] writes fields as CSV and PGM.

pub mod background;
pub mod elliptic;
pub mod eos;
pub mod error;
pub mod export;
pub mod field;
pub mod grid;
pub mod interp1d;
pub mod krylov;
pub mod parallel;
pub mod solver;
pub mod sparse;
pub mod transport;

pub use background::{
    sample_background, solve_background, Background2D, BackgroundParams, BackgroundSolution,
};
pub use error::{Error, Result};
pub use field::{ScalarField, VectorField};
pub use grid::{Grid2D, Region};
