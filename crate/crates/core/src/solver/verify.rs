//! Residual diagnostics against the conservation-law form of the system.
//!
//! All residuals are evaluated with the second-order discrete calculus on
//! the reconstructed fields, so on an exact solution of the continuous
//! equations they shrink at O(h²). Sup norms exclude a one-cell corner
//! collar (the corners are genuine singular points of the mixed boundary
//! conditions); L² norms cover the whole rectangle.

use crate::eos::{eval_t, StateConstants};
use crate::field::ScalarField;
use crate::solver::boundary::BoundaryData;
use crate::solver::primitives::PrimitiveState;

#[derive(Debug, Clone, Copy)]
pub struct ResidualNorm {
    pub sup: f64,
    pub l2: f64,
}

/// Per-equation residual report; a pure diagnostic.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub mass: ResidualNorm,
    pub momentum_x: ResidualNorm,
    pub momentum_y: ResidualNorm,
    pub bernoulli_transport: ResidualNorm,
    pub poisson: ResidualNorm,
    pub vorticity: ResidualNorm,
    /// Sup of |p - p_ex| over the exit column.
    pub exit_pressure: f64,
    /// max_x1 |flux(x1) - flux(0)| / |flux(0)|.
    pub mass_flux_drift: f64,
    /// min over nodes of c² - |u|².
    pub subsonic_margin: f64,
    /// |Φ(anchor)| (the gauge convention).
    pub gauge_offset: f64,
}

impl ResidualReport {
    /// The largest equation residual (sup norms).
    pub fn max_equation_sup(&self) -> f64 {
        [
            self.mass.sup,
            self.momentum_x.sup,
            self.momentum_y.sup,
            self.bernoulli_transport.sup,
            self.poisson.sup,
            self.vorticity.sup,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn lines(&self) -> Vec<(String, f64)> {
        vec![
            ("residual_mass_sup".into(), self.mass.sup),
            ("residual_mass_l2".into(), self.mass.l2),
            ("residual_momentum_x_sup".into(), self.momentum_x.sup),
            ("residual_momentum_x_l2".into(), self.momentum_x.l2),
            ("residual_momentum_y_sup".into(), self.momentum_y.sup),
            ("residual_momentum_y_l2".into(), self.momentum_y.l2),
            ("residual_bernoulli_sup".into(), self.bernoulli_transport.sup),
            ("residual_bernoulli_l2".into(), self.bernoulli_transport.l2),
            ("residual_poisson_sup".into(), self.poisson.sup),
            ("residual_poisson_l2".into(), self.poisson.l2),
            ("residual_vorticity_sup".into(), self.vorticity.sup),
            ("residual_vorticity_l2".into(), self.vorticity.l2),
            ("exit_pressure_mismatch".into(), self.exit_pressure),
            ("mass_flux_drift".into(), self.mass_flux_drift),
            ("subsonic_margin_min".into(), self.subsonic_margin),
            ("gauge_offset".into(), self.gauge_offset),
        ]
    }
}

fn norms(field: &ScalarField) -> ResidualNorm {
    ResidualNorm {
        sup: field.sup_norm_no_corners(1),
        l2: field.l2_norm(),
    }
}

pub fn verify_solution(
    ps: &PrimitiveState,
    bd: &BoundaryData,
    sc: &StateConstants,
) -> ResidualReport {
    let grid = ps.rho.grid().clone();
    let momentum = ps.momentum();

    let mass = momentum.divergence();

    // x-momentum: ∂1(ρu² + p) + ∂2(ρuv) - ρ ∂1Φ
    let grad_potential = ps.potential.gradient();
    let flux_xx = ps.rho.zip_map(&ps.u, |r, u| r * u * u).add(&ps.p);
    let flux_xy = momentum.c1.zip_map(&ps.v, |m, v| m * v);
    let momentum_x = flux_xx
        .d1()
        .add(&flux_xy.d2())
        .sub(&ps.rho.zip_map(&grad_potential.c1, |r, e| r * e));

    let flux_yy = ps.rho.zip_map(&ps.v, |r, v| r * v * v).add(&ps.p);
    let momentum_y = flux_xy
        .d1()
        .add(&flux_yy.d2())
        .sub(&ps.rho.zip_map(&grad_potential.c2, |r, e| r * e));

    // Bernoulli transport: ρ u·∇B - ρ u·∇Φ
    let grad_bernoulli = ps.bernoulli.gradient();
    let bernoulli_transport = ScalarField::from_vec(
        &grid,
        grid.nodes()
            .map(|(i1, i2)| {
                momentum.c1.at(i1, i2)
                    * (grad_bernoulli.c1.at(i1, i2) - grad_potential.c1.at(i1, i2))
                    + momentum.c2.at(i1, i2)
                        * (grad_bernoulli.c2.at(i1, i2) - grad_potential.c2.at(i1, i2))
            })
            .collect(),
    )
    .unwrap();

    // Poisson: ΔΦ - (ρ - b), with the compact Laplacian (the composed
    // gradient/divergence pair loses an order next to the boundary)
    let poisson = ps.potential.laplacian().sub(&ps.rho.sub(&bd.charge));

    // vorticity identity: u(∂1v - ∂2u) - (T ∂2S - ∂2K)
    let dv1 = ps.v.d1();
    let du2 = ps.u.d2();
    let ds2 = ps.entropy.d2();
    let dk2 = ps.invariant.d2();
    let vorticity = ScalarField::from_vec(
        &grid,
        grid.nodes()
            .map(|(i1, i2)| {
                let temp = eval_t(sc, ps.rho.at(i1, i2), ps.entropy.at(i1, i2)).unwrap_or(f64::NAN);
                ps.u.at(i1, i2) * (dv1.at(i1, i2) - du2.at(i1, i2))
                    - (temp * ds2.at(i1, i2) - dk2.at(i1, i2))
            })
            .collect(),
    )
    .unwrap();

    // exit pressure mismatch
    let mut exit_pressure = 0.0f64;
    for i2 in 0..=grid.n2() {
        exit_pressure = exit_pressure.max((ps.p.at(grid.n1(), i2) - bd.pressure_ex[i2]).abs());
    }

    // cross-section mass-flux drift
    let inlet_flux = momentum.integrate_cross_section(0.0);
    let mut drift = 0.0f64;
    for i1 in 0..=grid.n1() {
        let flux = momentum.integrate_cross_section(grid.x1(i1));
        drift = drift.max((flux - inlet_flux).abs());
    }
    let mass_flux_drift = drift / inlet_flux.abs().max(1e-300);

    ResidualReport {
        mass: norms(&mass),
        momentum_x: norms(&momentum_x),
        momentum_y: norms(&momentum_y),
        bernoulli_transport: norms(&bernoulli_transport),
        poisson: norms(&poisson),
        vorticity: norms(&vorticity),
        exit_pressure,
        mass_flux_drift,
        subsonic_margin: ps.subsonic_margin,
        gauge_offset: ps.potential.at(0, 0).abs(),
    }
}
