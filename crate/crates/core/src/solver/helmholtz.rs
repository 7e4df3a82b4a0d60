//! Helmholtz decomposition of a velocity field on the nozzle rectangle.
//!
//! The divergence-free part is recovered from Δψ = ∂2u - ∂1v with ∂1ψ = 0
//! on entrance/exit and ψ = 0 on the walls; the curl-free remainder is
//! integrated axially into a potential. Used as the round-trip check that a
//! computed velocity field really is ∇φ + ∇⊥ψ.

use crate::background::cumulative_quadratic;
use crate::elliptic::solve_poisson;
use crate::error::Result;
use crate::field::{ScalarField, VectorField};

/// Split a wall-tangent velocity field into (potential, stream) parts.
///
/// Returns (φ_rec, ψ_rec) with uv ≈ ∇φ_rec + ∇⊥ψ_rec up to discretization.
pub fn decompose_velocity(
    uv: &VectorField,
    tol: f64,
    max_iter: usize,
) -> Result<(ScalarField, ScalarField)> {
    let grid = uv.grid().clone();
    // fourth-order sampling everywhere: the recomposition is compared
    // against the original field at the discretization-error scale
    let curl = uv.c1.d2_order4().sub(&uv.c2.d1_order4());
    let (psi, _) = solve_poisson(&curl, tol, max_iter, None)?;

    // φ_rec(x1, x2) = ∫0^{x1} (u - ∂2 ψ)(t, x2) dt, row by row
    let residual_u = uv.c1.sub(&psi.d2_order4());
    let mut phi = ScalarField::zeros(&grid);
    let h1 = grid.h1();
    for i2 in 0..=grid.n2() {
        let row: Vec<f64> = (0..=grid.n1()).map(|i1| residual_u.at(i1, i2)).collect();
        let integral = cumulative_quadratic(&row, h1);
        for i1 in 0..=grid.n1() {
            phi.set(i1, i2, integral[i1]);
        }
    }
    Ok((phi, psi))
}

/// ∇φ + ∇⊥ψ, the inverse of `decompose_velocity` up to discretization.
pub fn recompose_velocity(phi: &ScalarField, psi: &ScalarField) -> VectorField {
    let grad = phi.gradient_order4();
    let perp = psi.perp_gradient_order4();
    grad.add(&perp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use std::f64::consts::PI;

    #[test]
    fn curl_free_field_has_no_stream_part() {
        let grid = Grid2D::new(16, 12, 1.0).unwrap();
        // uv = ∇φ* for φ* = x1
        let uv = VectorField::from_fns(&grid, |_, _| 1.0, |_, _| 0.0);
        let (phi, psi) = decompose_velocity(&uv, 1e-12, 10000).unwrap();
        assert!(psi.sup_norm() < 1e-11);
        for (i1, i2) in grid.nodes() {
            assert!((phi.at(i1, i2) - grid.x1(i1)).abs() < 1e-11);
        }
    }

    #[test]
    fn pure_stream_field_round_trips() {
        let err = |n: usize| {
            let grid = Grid2D::new(n, n, 1.0).unwrap();
            // ψ* vanishes on the walls and has ∂1ψ* = 0 at the ends
            let psi_star =
                ScalarField::from_fn(&grid, |x1, x2| (PI * x1).cos() * (PI * x2).sin() * 0.1);
            let uv = psi_star.perp_gradient();
            let (phi, psi) = decompose_velocity(&uv, 1e-12, 40000).unwrap();
            psi.sub(&psi_star).sup_norm().max(phi.sup_norm() * 0.1)
        };
        let ratio = err(16) / err(32);
        assert!(ratio > 3.0, "ratio {ratio}");
    }

    #[test]
    fn mixed_field_recomposes() {
        let grid = Grid2D::new(32, 32, 1.0).unwrap();
        let phi_star = ScalarField::from_fn(&grid, |x1, x2| x1 + 0.05 * x1 * x1 * (PI * x2).cos());
        let psi_star =
            ScalarField::from_fn(&grid, |x1, x2| 0.03 * (PI * x1).cos() * (PI * x2).sin());
        let uv = recompose_velocity(&phi_star, &psi_star);
        let (phi, psi) = decompose_velocity(&uv, 1e-12, 40000).unwrap();
        let back = recompose_velocity(&phi, &psi);
        assert!(back.sub(&uv).sup_norm() < 5e-3);
        let _ = (phi_star, psi_star);
    }
}
