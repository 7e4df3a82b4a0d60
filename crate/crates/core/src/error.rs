//! Error types shared across the solver suite.
//!
//! Physics-regime violations (vacuum, loss of subsonicity, flow reversal)
//! are structured errors rather than panics or silent NaNs: the nonlinear
//! iteration is only valid inside the subsonic regime and callers need to
//! distinguish "left the regime" from "did not converge".

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The background ODE denominator γ𝔭 e^{S0/cv} ρ^{γ-1} - J0²/ρ² dropped
    /// to zero or below: the integration interval left the subsonic regime.
    #[error("subsonicity lost at x1 = {x1:.6}: sonic margin {margin:.3e} (rho = {rho:.6})")]
    SubsonicityLost { x1: f64, rho: f64, margin: f64 },

    #[error("non-positive density rho = {rho:.6e} at x1 = {x1:.6}")]
    NonPositiveDensity { x1: f64, rho: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Density closure H(S, ζ) evaluated at ζ <= 0: the flow left the
    /// admissible set and the density is undefined.
    #[error("vacuum state: zeta <= 0 at {count} node(s), min zeta = {min_zeta:.6e}")]
    VacuumState { count: usize, min_zeta: f64 },

    /// The streamwise coefficient a11 lost positivity somewhere: the
    /// velocity reached the local sound speed and the system is no longer
    /// elliptic.
    #[error("ellipticity lost: min a11 = {min_a11:.6e}")]
    EllipticityLost { min_a11: f64 },

    #[error("ill-posed coefficients: {0}")]
    IllPosedCoefficients(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.6e})")]
    NotConverged {
        what: String,
        iterations: usize,
        residual: f64,
    },

    /// Axial mass flux V1 crossed zero: the stream function is no longer
    /// monotone in x2 and the flow map is undefined.
    #[error("axial mass flux not positive: min V1 = {min_v1:.6e}")]
    FluxNotPositive { min_v1: f64 },

    #[error(
        "vector field not divergence-free: stream-function mismatch {max_mismatch:.3e} \
         exceeds tolerance {tolerance:.3e}"
    )]
    NotDivergenceFree { max_mismatch: f64, tolerance: f64 },

    /// A stream-function value left the inlet range by more than the
    /// discretization-noise allowance: the streamline through that node
    /// would enter through a wall.
    #[error("stream value outside inlet range by {overshoot:.3e} (allowed {tolerance:.3e})")]
    OutOfRange { overshoot: f64, tolerance: f64 },

    /// The axial velocity in the vorticity-source denominator dropped to
    /// zero or below (flow reversal).
    #[error("degenerate axial velocity: min u = {min_u:.6e}")]
    DegenerateAxialVelocity { min_u: f64 },

    #[error("boundary data incompatible: {0}")]
    IncompatibleBoundaryData(String),

    #[error("non-finite value produced in {context}")]
    NonFinite { context: String },
}

impl Error {
    /// True for errors that signal leaving the physical regime (as opposed
    /// to numerical non-convergence or bad input).
    pub fn is_regime_error(&self) -> bool {
        matches!(
            self,
            Error::SubsonicityLost { .. }
                | Error::NonPositiveDensity { .. }
                | Error::VacuumState { .. }
                | Error::EllipticityLost { .. }
                | Error::FluxNotPositive { .. }
                | Error::DegenerateAxialVelocity { .. }
                | Error::OutOfRange { .. }
        )
    }
}
