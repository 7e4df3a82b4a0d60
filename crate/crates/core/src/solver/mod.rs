//! The nonlinear solver: boundary data, right-hand-side assembly, the
//! two-level fixed-point iteration, primitive reconstruction, verification
//! and the Helmholtz round trip.

pub mod boundary;
pub mod helmholtz;
pub mod iterate;
pub mod primitives;
pub mod rhs;
pub mod verify;

pub use boundary::{BoundaryData, PerturbationAmplitudes};
pub use helmholtz::{decompose_velocity, recompose_velocity};
pub use iterate::{InnerOrdering, InnerReport, NozzleSolver, OuterReport, Solution, SolverConfig};
pub use primitives::{reconstruct_primitives, PrimitiveState};
pub use rhs::{PotentialState, RhsAssembler, RhsBundle};
pub use verify::{verify_solution, ResidualNorm, ResidualReport};
