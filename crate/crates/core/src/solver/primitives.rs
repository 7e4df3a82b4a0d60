//! Reconstruction of the physical fields from potentials and transport
//! pair.
//!
//! ```text
//!   (u, v) = ∇(φ0 + φ) + ∇⊥ψ
//!   ρ      = H(S, K + Φ0 + Ψ - |(u,v)|²/2)
//!   p      = 𝔭 e^{S/cv} ρ^γ
//!   Φ      = Φ0 + Ψ
//! ```
//!
//! The Bernoulli head is recorded for diagnostics; by construction it
//! satisfies B - Φ = K pointwise up to rounding.

use crate::background::Background2D;
use crate::eos::{eval_h, StateConstants};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::solver::rhs::PotentialState;
use crate::solver::verify::ResidualReport;
use crate::transport::TransportState;

#[derive(Debug, Clone)]
pub struct PrimitiveState {
    pub rho: ScalarField,
    pub u: ScalarField,
    pub v: ScalarField,
    pub p: ScalarField,
    /// Total electric potential Φ.
    pub potential: ScalarField,
    /// Entropy field (carried along for the verification residuals).
    pub entropy: ScalarField,
    /// Pseudo-Bernoulli invariant field.
    pub invariant: ScalarField,
    /// Bernoulli head |u|²/2 + γ𝔭e^{S/cv}ρ^{γ-1}/(γ-1).
    pub bernoulli: ScalarField,
    /// Background charge used for the Poisson residual.
    pub min_u: f64,
    pub min_rho: f64,
    /// Minimum of c² - |u|² (positive means subsonic everywhere).
    pub subsonic_margin: f64,
    /// Axial velocity stayed positive (the reconstruction conclusion).
    pub positive_axial_velocity: bool,
    pub residuals: Option<ResidualReport>,
}

impl PrimitiveState {
    pub fn velocity(&self) -> VectorField {
        VectorField {
            c1: self.u.clone(),
            c2: self.v.clone(),
        }
    }

    /// Mass-flux field (ρu, ρv).
    pub fn momentum(&self) -> VectorField {
        VectorField {
            c1: self.rho.zip_map(&self.u, |r, u| r * u),
            c2: self.rho.zip_map(&self.v, |r, v| r * v),
        }
    }
}

pub fn reconstruct_primitives(
    bg: &Background2D,
    sc: &StateConstants,
    potentials: &PotentialState,
    transport: &TransportState,
) -> Result<PrimitiveState> {
    let grid = bg.rho.grid().clone();
    // fourth-order sampling of the discrete potentials: the velocity error
    // is then a smooth O(h²) function, which keeps the verification
    // residuals (which differentiate it once more) second order up to the
    // boundary
    let grad_phi = potentials.phi.gradient_order4();
    let grad_stream = potentials.stream.gradient_order4();

    let mut rho = ScalarField::zeros(&grid);
    let mut u = ScalarField::zeros(&grid);
    let mut v = ScalarField::zeros(&grid);
    let mut p = ScalarField::zeros(&grid);
    let mut bernoulli = ScalarField::zeros(&grid);
    let mut vacuum = 0usize;
    let mut min_zeta = f64::INFINITY;
    let mut subsonic_margin = f64::INFINITY;

    for (i1, i2) in grid.nodes() {
        let vel1 = bg.u.at(i1, i2) + grad_phi.c1.at(i1, i2) + grad_stream.c2.at(i1, i2);
        let vel2 = grad_phi.c2.at(i1, i2) - grad_stream.c1.at(i1, i2);
        let speed_sq = vel1 * vel1 + vel2 * vel2;
        let entropy = transport.entropy.at(i1, i2);
        let zeta = transport.invariant.at(i1, i2) + bg.potential.at(i1, i2)
            + potentials.elec.at(i1, i2)
            - 0.5 * speed_sq;
        min_zeta = min_zeta.min(zeta);
        if zeta <= 0.0 {
            vacuum += 1;
            continue;
        }
        let density = eval_h(sc, entropy, zeta)?;
        rho.set(i1, i2, density);
        u.set(i1, i2, vel1);
        v.set(i1, i2, vel2);
        p.set(i1, i2, sc.pressure(density, entropy));
        bernoulli.set(i1, i2, 0.5 * speed_sq + sc.enthalpy(density, entropy));
        subsonic_margin = subsonic_margin.min(sc.sound_speed_sq(density, entropy) - speed_sq);
    }
    if vacuum > 0 {
        return Err(Error::VacuumState {
            count: vacuum,
            min_zeta,
        });
    }

    let potential = bg.potential.add(&potentials.elec);
    let min_u = u.data().iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let min_rho = rho.data().iter().fold(f64::INFINITY, |m, &x| m.min(x));

    Ok(PrimitiveState {
        rho,
        u,
        v,
        p,
        potential,
        entropy: transport.entropy.clone(),
        invariant: transport.invariant.clone(),
        bernoulli,
        min_u,
        min_rho,
        subsonic_margin,
        positive_axial_velocity: min_u > 0.0,
        residuals: None,
    })
}
