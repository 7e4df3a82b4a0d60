//! Discretization and solution of the linear elliptic problems.
//!
//! Two problems are handled:
//!
//! * the coupled system for (φ, Ψ)
//!
//!   ```text
//!     ∂1(a11 ∂1φ + b1 Ψ) + ∂2(a22 ∂2φ) = Div F
//!     ΔΨ - (d Ψ + c·∇φ)                = f1
//!   ```
//!
//!   with φ = 0 on the entrance, ∂2φ = 0 on the walls, ∂1φ = g on the exit,
//!   Ψ = Ψ_bd on entrance and exit, ∂2Ψ = 0 on the walls;
//!
//! * the scalar Poisson problem Δψ = rhs with ∂1ψ = 0 on entrance and exit
//!   and ψ = 0 on the walls (well-posed without a mean constraint because of
//!   the Dirichlet walls).
//!
//! The first equation is differenced in conservation form (flux averages at
//! half nodes), the second with the standard 5-point Laplacian. Neumann
//! conditions are imposed by second-order ghost elimination. The Dirichlet
//! data for Ψ is lifted with a cutoff blend of the entrance and exit
//! profiles, and the lifting corrections are computed with the same row
//! stencils the matrix uses, so solving for the homogenized unknown and
//! adding the lift back reproduces the original discrete system exactly.
//!
//! Matrix assembly is split from right-hand-side construction: the
//! fixed-point iterations solve the same operator against a stream of new
//! right-hand sides.
//!
//! Both systems are assembled (negated, to make the diagonal positive) as
//! one sparse operator and solved with preconditioned BiCGSTAB. Residuals in
//! reports are recomputed from the returned solution, never from solver
//! internals.

use crate::eos::CoefficientFields;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid2D;
use crate::krylov::bicgstab;
use crate::sparse::{CsrMatrix, TripletMatrix};
use std::time::{Duration, Instant};

/// Dirichlet profiles on the entrance and exit columns (n2 + 1 values each).
#[derive(Debug, Clone)]
pub struct BoundaryProfiles {
    pub entrance: Vec<f64>,
    pub exit: Vec<f64>,
}

impl BoundaryProfiles {
    pub fn zeros(grid: &Grid2D) -> Self {
        BoundaryProfiles {
            entrance: vec![0.0; grid.n2() + 1],
            exit: vec![0.0; grid.n2() + 1],
        }
    }

    fn sup(&self) -> f64 {
        self.entrance
            .iter()
            .chain(&self.exit)
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Inhomogeneous wall-Neumann data ∂2φ on the two walls (used by
/// manufactured-solution tests; zero in production runs).
#[derive(Debug, Clone)]
pub struct WallFlux {
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
}

/// Data of one coupled linear solve.
#[derive(Debug, Clone)]
pub struct LinearSystemSpec<'a> {
    pub coeffs: &'a CoefficientFields,
    /// Divergence-form right-hand side F of the first equation.
    pub f: &'a VectorField,
    /// Right-hand side of the second equation.
    pub f1: &'a ScalarField,
    /// Exit Neumann data for φ (n2 + 1 values along the exit column).
    pub g: Vec<f64>,
    /// Dirichlet data for Ψ.
    pub psi_bd: BoundaryProfiles,
    /// Optional ∂2φ wall data; `None` means insulated walls.
    pub wall_flux: Option<WallFlux>,
    /// Number of random test pairs for the coercivity check (0 disables).
    pub coercivity_pairs: usize,
    /// Seed for the coercivity test pairs.
    pub coercivity_seed: u64,
}

/// Solve diagnostics; residuals are recomputed from the returned solution.
#[derive(Debug, Clone)]
pub struct LinearSolveReport {
    pub iterations: usize,
    /// Sup residual of the first (flux) equation rows.
    pub residual_phi: f64,
    /// Sup residual of the second (potential) equation rows.
    pub residual_elec: f64,
    /// Scale used for the relative criterion (sup of the assembled RHS).
    pub residual_scale: f64,
    /// Measured coercivity margin of the bilinear form, if checked.
    pub coercivity_nu3: Option<f64>,
    pub wall_time: Duration,
}

const DIRICHLET_SCALE_FLOOR: f64 = 1e-300;

/// Cutoff blend of the entrance and exit Dirichlet profiles.
///
/// χ is the quintic smoothstep, equal to 1 for x1 ≤ L/3 and 0 for
/// x1 ≥ 2L/3, with χ' ≤ 0 and |χ'| ≤ 5.625/L.
pub fn lift_field(grid: &Grid2D, psi_bd: &BoundaryProfiles) -> ScalarField {
    let l = grid.length();
    let mut out = ScalarField::zeros(grid);
    for i1 in 0..=grid.n1() {
        let t = ((grid.x1(i1) - l / 3.0) / (l / 3.0)).clamp(0.0, 1.0);
        let chi = 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        for i2 in 0..=grid.n2() {
            out.set(i1, i2, chi * psi_bd.entrance[i2] + (1.0 - chi) * psi_bd.exit[i2]);
        }
    }
    out
}

/// Check ∂2 Ψ_bd = 0 at the four corners with the one-sided three-point
/// stencil, at a tolerance that admits smooth compatible data on the grid
/// but rejects O(1) tangential slopes.
fn check_compatibility(grid: &Grid2D, psi_bd: &BoundaryProfiles) -> Result<()> {
    let h2 = grid.h2();
    let n2 = grid.n2();
    let scale = psi_bd.sup().max(1e-30);
    let tol = 10.0 * h2 * h2 * scale + 1e-14;
    let d_low = |p: &[f64]| (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * h2);
    let d_high = |p: &[f64]| (3.0 * p[n2] - 4.0 * p[n2 - 1] + p[n2 - 2]) / (2.0 * h2);
    for (name, profile) in [("entrance", &psi_bd.entrance), ("exit", &psi_bd.exit)] {
        if profile.len() != n2 + 1 {
            return Err(Error::GridMismatch(format!(
                "{name} profile has {} values, grid needs {}",
                profile.len(),
                n2 + 1
            )));
        }
        for (corner, slope) in [("wall x2=0", d_low(profile)), ("wall x2=1", d_high(profile))] {
            if slope.abs() > tol {
                return Err(Error::IncompatibleBoundaryData(format!(
                    "tangential derivative of Psi_bd at {name}/{corner} is {slope:.3e} \
                     (allowed {tol:.3e})"
                )));
            }
        }
    }
    Ok(())
}

/// Four-point one-sided second derivative constrained by a known first
/// derivative at the boundary point:
///
/// ```text
///   f''(x0) = [-85/18 f0 + 6 f1 - 3/2 f2 + 2/9 f3]/h² - (11/3) f'(x0)/h
/// ```
///
/// exact through fourth-degree polynomials, so Neumann rows keep second
/// order locally (the plain ghost reflection is only first order there and
/// leaves an O(h²) discrete boundary layer in the solution).
const NEUMANN_ROW: [f64; 4] = [-85.0 / 18.0, 6.0, -1.5, 2.0 / 9.0];
const NEUMANN_DATA: f64 = 11.0 / 3.0;

/// The L2-row Laplacian stencil applied to a known field: centered in x1,
/// constrained one-sided at the walls (where ∂2 f = 0). Only rows 1..n1-1
/// are meaningful (the rest are Dirichlet rows in the matrix).
fn laplacian_l2_stencil(f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    let (n1, n2) = (g.n1(), g.n2());
    let (h1s, h2s) = (g.h1() * g.h1(), g.h2() * g.h2());
    let mut out = ScalarField::zeros(&g);
    for i2 in 0..=n2 {
        for i1 in 1..n1 {
            let xx = (f.at(i1 + 1, i2) - 2.0 * f.at(i1, i2) + f.at(i1 - 1, i2)) / h1s;
            let yy = if i2 == 0 {
                (0..4).map(|k| NEUMANN_ROW[k] * f.at(i1, k)).sum::<f64>() / h2s
            } else if i2 == n2 {
                (0..4).map(|k| NEUMANN_ROW[k] * f.at(i1, n2 - k)).sum::<f64>() / h2s
            } else {
                (f.at(i1, i2 + 1) - 2.0 * f.at(i1, i2) + f.at(i1, i2 - 1)) / h2s
            };
            out.set(i1, i2, xx + yy);
        }
    }
    out
}

/// The L1-row stencil for ∂1(b1 Ψ) applied to a known field: centered for
/// 1..n1-1, one-sided three-point at the exit row.
fn axial_flux_stencil(b1: &ScalarField, f: &ScalarField) -> ScalarField {
    let g = f.grid().clone();
    let (n1, n2) = (g.n1(), g.n2());
    let h1 = g.h1();
    let mut out = ScalarField::zeros(&g);
    for i2 in 0..=n2 {
        for i1 in 1..=n1 {
            let v = if i1 == n1 {
                (3.0 * b1.at(n1, i2) * f.at(n1, i2) - 4.0 * b1.at(n1 - 1, i2) * f.at(n1 - 1, i2)
                    + b1.at(n1 - 2, i2) * f.at(n1 - 2, i2))
                    / (2.0 * h1)
            } else {
                (b1.at(i1 + 1, i2) * f.at(i1 + 1, i2) - b1.at(i1 - 1, i2) * f.at(i1 - 1, i2))
                    / (2.0 * h1)
            };
            out.set(i1, i2, v);
        }
    }
    out
}

/// Triplet pair for the true operator and its preconditioner companion
/// (identical except on Neumann rows, where the companion keeps the
/// diagonally dominant ghost-reflection stencils that the Gauss-Seidel
/// sweep needs).
struct DualTriplets {
    a: TripletMatrix,
    m: TripletMatrix,
}

impl DualTriplets {
    fn new(n: usize) -> Self {
        DualTriplets {
            a: TripletMatrix::new(n),
            m: TripletMatrix::new(n),
        }
    }

    fn both(&mut self, row: usize, col: usize, v: f64) {
        self.a.push(row, col, v);
        self.m.push(row, col, v);
    }

    fn true_only(&mut self, row: usize, col: usize, v: f64) {
        self.a.push(row, col, v);
    }

    fn pre_only(&mut self, row: usize, col: usize, v: f64) {
        self.m.push(row, col, v);
    }
}

/// One assembled coupled system: the operator is fixed, the right-hand side
/// can be replaced per solve. `matrix`, `pack` and `unpack` expose the raw
/// operator for oracle tests.
pub struct CoupledSystem {
    grid: Grid2D,
    matrix: CsrMatrix,
    precond: CsrMatrix,
    rhs: Vec<f64>,
    lift: ScalarField,
    lift_flux: ScalarField,
    lift_lap: ScalarField,
    d_times_lift: ScalarField,
    /// 2 a11_{n1+1/2} / h1 per exit node (ghost factor multiplying g).
    exit_ghost: Vec<f64>,
    /// 2 a22_{±1/2} / h2 per wall node (ghost factor multiplying wall flux).
    wall_ghost_bottom: Vec<f64>,
    wall_ghost_top: Vec<f64>,
    coercivity_nu3: Option<f64>,
}

pub fn assemble_coupled(spec: &LinearSystemSpec) -> Result<CoupledSystem> {
    let coeffs = spec.coeffs;
    coeffs.validate()?;
    let grid = coeffs.a11.grid().clone();
    spec.f.c1.grid().assert_same(&grid, "coupled assembly: F")?;
    spec.f1.grid().assert_same(&grid, "coupled assembly: f1")?;
    check_compatibility(&grid, &spec.psi_bd)?;

    let (n1, n2) = (grid.n1(), grid.n2());
    let (h1, h2) = (grid.h1(), grid.h2());
    let (h1s, h2s) = (h1 * h1, h2 * h2);
    let n = grid.num_nodes();
    let phi_ix = |i1: usize, i2: usize| grid.idx(i1, i2);
    let elec_ix = |i1: usize, i2: usize| n + grid.idx(i1, i2);

    let lift = lift_field(&grid, &spec.psi_bd);
    let lift_lap = laplacian_l2_stencil(&lift);
    let lift_flux = axial_flux_stencil(&coeffs.b1, &lift);
    let d_times_lift = coeffs.d.zip_map(&lift, |d, l| d * l);

    // half-node coefficient in x1 (interior flux averages)
    let a11_half = |i1: usize, i2: usize| -> f64 {
        0.5 * (coeffs.a11.at(i1, i2) + coeffs.a11.at(i1 + 1, i2))
    };

    // data factors of the Neumann rows: the boundary operator value
    // a ∂_nn f + (∂_n a) ∂_n f picks up these multiples of the prescribed
    // normal derivative
    let exit_ghost: Vec<f64> = (0..=n2)
        .map(|i2| {
            let a = coeffs.a11.at(n1, i2);
            let da = (3.0 * coeffs.a11.at(n1, i2) - 4.0 * coeffs.a11.at(n1 - 1, i2)
                + coeffs.a11.at(n1 - 2, i2))
                / (2.0 * h1);
            a * NEUMANN_DATA / h1 + da
        })
        .collect();
    let wall_ghost_bottom: Vec<f64> = (0..=n1)
        .map(|i1| {
            let a = coeffs.a22.at(i1, 0);
            let da = (-3.0 * coeffs.a22.at(i1, 0) + 4.0 * coeffs.a22.at(i1, 1)
                - coeffs.a22.at(i1, 2))
                / (2.0 * h2);
            -a * NEUMANN_DATA / h2 + da
        })
        .collect();
    let wall_ghost_top: Vec<f64> = (0..=n1)
        .map(|i1| {
            let a = coeffs.a22.at(i1, n2);
            let da = (3.0 * coeffs.a22.at(i1, n2) - 4.0 * coeffs.a22.at(i1, n2 - 1)
                + coeffs.a22.at(i1, n2 - 2))
                / (2.0 * h2);
            a * NEUMANN_DATA / h2 + da
        })
        .collect();

    let mut trip = DualTriplets::new(2 * n);

    for i2 in 0..=n2 {
        for i1 in 0..=n1 {
            let row_phi = phi_ix(i1, i2);
            let row_elec = elec_ix(i1, i2);

            // ---- first equation (φ row), Dirichlet at the entrance ----
            if i1 == 0 {
                trip.both(row_phi, row_phi, 1.0);
            } else {
                // positive operator accumulated as (col, coef) and negated
                // on push
                let add = |t: &mut DualTriplets, col: usize, c: f64| t.both(row_phi, col, -c);

                // x1 part of ∂1(a11 ∂1φ): conservative flux difference
                // inside, constrained one-sided expansion at the exit (the
                // g data terms go to the right-hand side in `set_rhs`);
                // the preconditioner keeps the ghost-reflection row
                if i1 < n1 {
                    let ae = a11_half(i1, i2);
                    let aw = a11_half(i1 - 1, i2);
                    add(&mut trip, phi_ix(i1 + 1, i2), ae / h1s);
                    add(&mut trip, phi_ix(i1, i2), -(ae + aw) / h1s);
                    add(&mut trip, phi_ix(i1 - 1, i2), aw / h1s);
                } else {
                    let a = coeffs.a11.at(n1, i2);
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row_phi, phi_ix(n1 - k, i2), -a * w / h1s);
                    }
                    trip.pre_only(row_phi, phi_ix(n1 - 1, i2), -2.0 * a / h1s);
                    trip.pre_only(row_phi, phi_ix(n1, i2), 2.0 * a / h1s);
                }

                // x2 part of ∂2(a22 ∂2φ): flux difference inside,
                // constrained one-sided at the walls
                if i2 == 0 {
                    let a = coeffs.a22.at(i1, 0);
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row_phi, phi_ix(i1, k), -a * w / h2s);
                    }
                    trip.pre_only(row_phi, phi_ix(i1, 1), -2.0 * a / h2s);
                    trip.pre_only(row_phi, phi_ix(i1, 0), 2.0 * a / h2s);
                } else if i2 == n2 {
                    let a = coeffs.a22.at(i1, n2);
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row_phi, phi_ix(i1, n2 - k), -a * w / h2s);
                    }
                    trip.pre_only(row_phi, phi_ix(i1, n2 - 1), -2.0 * a / h2s);
                    trip.pre_only(row_phi, phi_ix(i1, n2), 2.0 * a / h2s);
                } else {
                    let an = 0.5 * (coeffs.a22.at(i1, i2) + coeffs.a22.at(i1, i2 + 1));
                    let as_ = 0.5 * (coeffs.a22.at(i1, i2) + coeffs.a22.at(i1, i2 - 1));
                    add(&mut trip, phi_ix(i1, i2 + 1), an / h2s);
                    add(&mut trip, phi_ix(i1, i2), -(an + as_) / h2s);
                    add(&mut trip, phi_ix(i1, i2 - 1), as_ / h2s);
                }

                // ∂1(b1 Ψ̂): centered inside, one-sided at the exit row
                if i1 < n1 {
                    add(&mut trip, elec_ix(i1 + 1, i2), coeffs.b1.at(i1 + 1, i2) / (2.0 * h1));
                    add(&mut trip, elec_ix(i1 - 1, i2), -coeffs.b1.at(i1 - 1, i2) / (2.0 * h1));
                } else {
                    add(&mut trip, elec_ix(n1, i2), 3.0 * coeffs.b1.at(n1, i2) / (2.0 * h1));
                    add(&mut trip, elec_ix(n1 - 1, i2), -4.0 * coeffs.b1.at(n1 - 1, i2) / (2.0 * h1));
                    add(&mut trip, elec_ix(n1 - 2, i2), coeffs.b1.at(n1 - 2, i2) / (2.0 * h1));
                }
            }

            // ---- second equation (Ψ̂ row), Dirichlet at entrance/exit ----
            if i1 == 0 || i1 == n1 {
                trip.both(row_elec, row_elec, 1.0);
            } else {
                let add = |t: &mut DualTriplets, col: usize, c: f64| t.both(row_elec, col, -c);

                // ΔΨ̂, x1 part (neighbors may be Dirichlet columns)
                add(&mut trip, elec_ix(i1 + 1, i2), 1.0 / h1s);
                add(&mut trip, elec_ix(i1, i2), -2.0 / h1s);
                add(&mut trip, elec_ix(i1 - 1, i2), 1.0 / h1s);
                // ΔΨ̂, x2 part with constrained one-sided wall rows
                if i2 == 0 {
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row_elec, elec_ix(i1, k), -w / h2s);
                    }
                    trip.pre_only(row_elec, elec_ix(i1, 1), -2.0 / h2s);
                    trip.pre_only(row_elec, elec_ix(i1, 0), 2.0 / h2s);
                } else if i2 == n2 {
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row_elec, elec_ix(i1, n2 - k), -w / h2s);
                    }
                    trip.pre_only(row_elec, elec_ix(i1, n2 - 1), -2.0 / h2s);
                    trip.pre_only(row_elec, elec_ix(i1, n2), 2.0 / h2s);
                } else {
                    add(&mut trip, elec_ix(i1, i2 + 1), 1.0 / h2s);
                    add(&mut trip, elec_ix(i1, i2), -2.0 / h2s);
                    add(&mut trip, elec_ix(i1, i2 - 1), 1.0 / h2s);
                }

                // -(d Ψ̂ + c·∇φ); c2 = 0 in all production systems but kept
                // for generality
                add(&mut trip, elec_ix(i1, i2), -coeffs.d.at(i1, i2));
                add(&mut trip, phi_ix(i1 + 1, i2), -coeffs.c1.at(i1, i2) / (2.0 * h1));
                add(&mut trip, phi_ix(i1 - 1, i2), coeffs.c1.at(i1, i2) / (2.0 * h1));
                let c2 = coeffs.c2.at(i1, i2);
                if c2 != 0.0 {
                    if i2 == 0 {
                        add(&mut trip, phi_ix(i1, 2), c2 / (2.0 * h2));
                        add(&mut trip, phi_ix(i1, 1), -4.0 * c2 / (2.0 * h2));
                        add(&mut trip, phi_ix(i1, 0), 3.0 * c2 / (2.0 * h2));
                    } else if i2 == n2 {
                        add(&mut trip, phi_ix(i1, n2 - 2), -c2 / (2.0 * h2));
                        add(&mut trip, phi_ix(i1, n2 - 1), 4.0 * c2 / (2.0 * h2));
                        add(&mut trip, phi_ix(i1, n2), -3.0 * c2 / (2.0 * h2));
                    } else {
                        add(&mut trip, phi_ix(i1, i2 + 1), -c2 / (2.0 * h2));
                        add(&mut trip, phi_ix(i1, i2 - 1), c2 / (2.0 * h2));
                    }
                }
            }
        }
    }

    let coercivity_nu3 = if spec.coercivity_pairs > 0 {
        Some(coercivity_margin(coeffs, spec.coercivity_pairs, spec.coercivity_seed))
    } else {
        None
    };

    let mut system = CoupledSystem {
        grid,
        matrix: trip.a.to_csr(),
        precond: trip.m.to_csr(),
        rhs: vec![0.0; 2 * n],
        lift,
        lift_flux,
        lift_lap,
        d_times_lift,
        exit_ghost,
        wall_ghost_bottom,
        wall_ghost_top,
        coercivity_nu3,
    };
    system.set_rhs(spec.f, spec.f1, &spec.g, spec.wall_flux.as_ref())?;
    Ok(system)
}

impl CoupledSystem {
    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// The Ψ lifting field added back to the homogenized solve.
    pub fn lift(&self) -> &ScalarField {
        &self.lift
    }

    /// Coercivity margin measured at assembly time, if it was requested.
    pub fn coercivity_nu3(&self) -> Option<f64> {
        self.coercivity_nu3
    }

    /// Replace the right-hand side data (the operator is unchanged).
    pub fn set_rhs(
        &mut self,
        f: &VectorField,
        f1: &ScalarField,
        g: &[f64],
        wall_flux: Option<&WallFlux>,
    ) -> Result<()> {
        let grid = &self.grid;
        let (n1, n2) = (grid.n1(), grid.n2());
        if g.len() != n2 + 1 {
            return Err(Error::GridMismatch(format!(
                "exit data g has {} values, grid needs {}",
                g.len(),
                n2 + 1
            )));
        }
        f.assert_finite("coupled rhs: F")?;
        f1.assert_finite("coupled rhs: f1")?;
        let div_f = f.divergence();
        let n = grid.num_nodes();
        for i2 in 0..=n2 {
            for i1 in 0..=n1 {
                let row_phi = grid.idx(i1, i2);
                let row_elec = n + row_phi;
                if i1 == 0 {
                    self.rhs[row_phi] = 0.0;
                } else {
                    // data terms of the Neumann rows (positive operator)
                    let mut known = 0.0;
                    if i1 == n1 {
                        known += self.exit_ghost[i2] * g[i2];
                    }
                    if let Some(w) = wall_flux {
                        if i2 == 0 {
                            known += self.wall_ghost_bottom[i1] * w.bottom[i1];
                        } else if i2 == n2 {
                            known += self.wall_ghost_top[i1] * w.top[i1];
                        }
                    }
                    let rhs_value = div_f.at(i1, i2) - self.lift_flux.at(i1, i2);
                    self.rhs[row_phi] = -(rhs_value - known);
                }
                if i1 == 0 || i1 == n1 {
                    self.rhs[row_elec] = 0.0;
                } else {
                    let rhs_value =
                        f1.at(i1, i2) - self.lift_lap.at(i1, i2) + self.d_times_lift.at(i1, i2);
                    self.rhs[row_elec] = -rhs_value;
                }
            }
        }
        Ok(())
    }

    /// Stack (φ, Ψ̂) into a raw unknown vector.
    pub fn pack(&self, phi: &ScalarField, elec_hat: &ScalarField) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.grid.num_nodes());
        x.extend_from_slice(phi.data());
        x.extend_from_slice(elec_hat.data());
        x
    }

    pub fn unpack(&self, x: &[f64]) -> (ScalarField, ScalarField) {
        let n = self.grid.num_nodes();
        let phi = ScalarField::from_vec(&self.grid, x[..n].to_vec()).unwrap();
        let elec_hat = ScalarField::from_vec(&self.grid, x[n..].to_vec()).unwrap();
        (phi, elec_hat)
    }

    /// Solve against an arbitrary raw right-hand side (oracle entry point).
    pub fn solve_raw(
        &self,
        rhs: &[f64],
        tol: f64,
        max_iter: usize,
        x0: Option<&[f64]>,
    ) -> Result<(Vec<f64>, LinearSolveReport)> {
        let start = Instant::now();
        let n2 = rhs.len();
        let mut x = match x0 {
            Some(x0) => x0.to_vec(),
            None => vec![0.0; n2],
        };
        let b_inf = rhs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = b_inf.max(DIRICHLET_SCALE_FLOOR);
        let b_l2 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = if b_l2 > 0.0 { tol * scale / b_l2 } else { 0.0 };
        let out = bicgstab(&self.matrix, &self.precond, rhs, &mut x, rel, max_iter);

        // recompute the residual, split per equation
        let mut r = vec![0.0; n2];
        self.matrix.matvec(&x, &mut r);
        let n = self.grid.num_nodes();
        let mut sup_phi = 0.0f64;
        let mut sup_elec = 0.0f64;
        for i in 0..n {
            sup_phi = sup_phi.max((rhs[i] - r[i]).abs());
            sup_elec = sup_elec.max((rhs[n + i] - r[n + i]).abs());
        }
        let report = LinearSolveReport {
            iterations: out.iterations,
            residual_phi: sup_phi,
            residual_elec: sup_elec,
            residual_scale: scale,
            coercivity_nu3: self.coercivity_nu3,
            wall_time: start.elapsed(),
        };
        if sup_phi.max(sup_elec) > tol * scale {
            return Err(Error::NotConverged {
                what: "coupled linear solve".into(),
                iterations: out.iterations,
                residual: sup_phi.max(sup_elec) / scale,
            });
        }
        Ok((x, report))
    }

    /// Solve the assembled system; returns (φ, Ψ) with the lift added back.
    pub fn solve(
        &self,
        tol: f64,
        max_iter: usize,
        warm: Option<(&ScalarField, &ScalarField)>,
    ) -> Result<(ScalarField, ScalarField, LinearSolveReport)> {
        let x0 = warm.map(|(phi, elec)| self.pack(phi, &elec.sub(&self.lift)));
        let (x, report) = self.solve_raw(&self.rhs, tol, max_iter, x0.as_deref())?;
        let (phi, elec_hat) = self.unpack(&x);
        let elec = elec_hat.add(&self.lift);
        phi.assert_finite("coupled solve: phi")?;
        elec.assert_finite("coupled solve: Psi")?;
        Ok((phi, elec, report))
    }
}

/// Assemble and solve the coupled system in one call.
pub fn solve_coupled(
    spec: &LinearSystemSpec,
    tol: f64,
    max_iter: usize,
    warm: Option<(&ScalarField, &ScalarField)>,
) -> Result<(ScalarField, ScalarField, LinearSolveReport)> {
    assemble_coupled(spec)?.solve(tol, max_iter, warm)
}

/// The discrete bilinear form of the coupled system,
/// 𝔏[(φ,Ψ),(ζ,ω)] = ∫ Σ (a_ii ∂iφ + b_i Ψ) ∂iζ + ∇Ψ·∇ω + (c·∇φ + dΨ) ω.
pub fn bilinear_form(
    coeffs: &CoefficientFields,
    phi: &ScalarField,
    elec: &ScalarField,
    zeta: &ScalarField,
    omega: &ScalarField,
) -> f64 {
    let gp = phi.gradient();
    let gz = zeta.gradient();
    let ge = elec.gradient();
    let go = omega.gradient();
    let mut acc = 0.0;
    let grid = phi.grid();
    for (i1, i2) in grid.nodes() {
        let w = grid.quad_weight(i1, i2);
        let flux1 = coeffs.a11.at(i1, i2) * gp.c1.at(i1, i2) + coeffs.b1.at(i1, i2) * elec.at(i1, i2);
        let flux2 = coeffs.a22.at(i1, i2) * gp.c2.at(i1, i2) + coeffs.b2.at(i1, i2) * elec.at(i1, i2);
        let zero_order = coeffs.c1.at(i1, i2) * gp.c1.at(i1, i2)
            + coeffs.c2.at(i1, i2) * gp.c2.at(i1, i2)
            + coeffs.d.at(i1, i2) * elec.at(i1, i2);
        acc += w
            * (flux1 * gz.c1.at(i1, i2)
                + flux2 * gz.c2.at(i1, i2)
                + ge.c1.at(i1, i2) * go.c1.at(i1, i2)
                + ge.c2.at(i1, i2) * go.c2.at(i1, i2)
                + zero_order * omega.at(i1, i2));
    }
    acc
}

/// Measure the coercivity margin ν3 of the bilinear form over random
/// homogeneous test pairs (ζ = 0 on the entrance, ω = 0 on entrance and
/// exit): min 𝔏[(ζ,ω),(ζ,ω)] / (‖ζ‖²_{H1} + ‖ω‖²_{H1}).
pub fn coercivity_margin(coeffs: &CoefficientFields, pairs: usize, seed: u64) -> f64 {
    let grid = coeffs.a11.grid().clone();
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut nu3 = f64::INFINITY;
    for _ in 0..pairs {
        let mut zeta = ScalarField::zeros(&grid);
        let mut omega = ScalarField::zeros(&grid);
        for (i1, i2) in grid.nodes() {
            if i1 > 0 {
                zeta.set(i1, i2, next());
            }
            if i1 > 0 && i1 < grid.n1() {
                omega.set(i1, i2, next());
            }
        }
        let energy = bilinear_form(coeffs, &zeta, &omega, &zeta, &omega);
        let h1 = zeta.h1_norm_sq() + omega.h1_norm_sq();
        if h1 > 0.0 {
            nu3 = nu3.min(energy / h1);
        }
    }
    nu3
}

/// Assembled scalar Poisson problem Δψ = rhs with ∂1ψ = 0 on the entrance
/// and exit and ψ = 0 on the walls.
pub struct PoissonSystem {
    grid: Grid2D,
    matrix: CsrMatrix,
    precond: CsrMatrix,
    rhs: Vec<f64>,
}

impl PoissonSystem {
    pub fn new(grid: &Grid2D) -> Self {
        let (n1, n2) = (grid.n1(), grid.n2());
        let (h1s, h2s) = (grid.h1() * grid.h1(), grid.h2() * grid.h2());
        let n = grid.num_nodes();
        let mut trip = DualTriplets::new(n);
        for i2 in 0..=n2 {
            for i1 in 0..=n1 {
                let row = grid.idx(i1, i2);
                if i2 == 0 || i2 == n2 {
                    // Dirichlet walls win at the corners
                    trip.both(row, row, 1.0);
                    continue;
                }
                let add = |t: &mut DualTriplets, c1: usize, c2: usize, c: f64| {
                    t.both(row, grid.idx(c1, c2), -c)
                };
                if i1 == 0 {
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row, grid.idx(k, i2), -w / h1s);
                    }
                    trip.pre_only(row, grid.idx(1, i2), -2.0 / h1s);
                    trip.pre_only(row, grid.idx(0, i2), 2.0 / h1s);
                } else if i1 == n1 {
                    for (k, w) in NEUMANN_ROW.iter().enumerate() {
                        trip.true_only(row, grid.idx(n1 - k, i2), -w / h1s);
                    }
                    trip.pre_only(row, grid.idx(n1 - 1, i2), -2.0 / h1s);
                    trip.pre_only(row, grid.idx(n1, i2), 2.0 / h1s);
                } else {
                    add(&mut trip, i1 + 1, i2, 1.0 / h1s);
                    add(&mut trip, i1, i2, -2.0 / h1s);
                    add(&mut trip, i1 - 1, i2, 1.0 / h1s);
                }
                add(&mut trip, i1, i2 + 1, 1.0 / h2s);
                add(&mut trip, i1, i2, -2.0 / h2s);
                add(&mut trip, i1, i2 - 1, 1.0 / h2s);
            }
        }
        PoissonSystem {
            grid: grid.clone(),
            matrix: trip.a.to_csr(),
            precond: trip.m.to_csr(),
            rhs: vec![0.0; n],
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn set_rhs(&mut self, rhs_field: &ScalarField) -> Result<()> {
        rhs_field.grid().assert_same(&self.grid, "Poisson rhs")?;
        rhs_field.assert_finite("Poisson rhs")?;
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        for i2 in 0..=n2 {
            for i1 in 0..=n1 {
                let row = self.grid.idx(i1, i2);
                self.rhs[row] = if i2 == 0 || i2 == n2 {
                    0.0
                } else {
                    -rhs_field.at(i1, i2)
                };
            }
        }
        Ok(())
    }

    /// Apply the (negated) discrete operator to a field; Dirichlet rows
    /// return the field value.
    pub fn apply(&self, f: &ScalarField) -> Vec<f64> {
        let mut y = vec![0.0; f.data().len()];
        self.matrix.matvec(f.data(), &mut y);
        y
    }

    pub fn solve(
        &self,
        tol: f64,
        max_iter: usize,
        warm: Option<&ScalarField>,
    ) -> Result<(ScalarField, LinearSolveReport)> {
        let start = Instant::now();
        let mut x = match warm {
            Some(f) => f.data().to_vec(),
            None => vec![0.0; self.rhs.len()],
        };
        let b_inf = self.rhs.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = b_inf.max(DIRICHLET_SCALE_FLOOR);
        let b_l2 = self.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = if b_l2 > 0.0 { tol * scale / b_l2 } else { 0.0 };
        let out = bicgstab(&self.matrix, &self.precond, &self.rhs, &mut x, rel, max_iter);
        let mut r = vec![0.0; self.rhs.len()];
        self.matrix.matvec(&x, &mut r);
        let sup = self
            .rhs
            .iter()
            .zip(&r)
            .fold(0.0f64, |m, (&b, &ax)| m.max((b - ax).abs()));
        let report = LinearSolveReport {
            iterations: out.iterations,
            residual_phi: sup,
            residual_elec: 0.0,
            residual_scale: scale,
            coercivity_nu3: None,
            wall_time: start.elapsed(),
        };
        if sup > tol * scale {
            return Err(Error::NotConverged {
                what: "Poisson solve".into(),
                iterations: out.iterations,
                residual: sup / scale,
            });
        }
        let psi = ScalarField::from_vec(&self.grid, x)?;
        psi.assert_finite("Poisson solve")?;
        Ok((psi, report))
    }
}

/// Assemble and solve the Poisson problem in one call.
pub fn solve_poisson(
    rhs: &ScalarField,
    tol: f64,
    max_iter: usize,
    warm: Option<&ScalarField>,
) -> Result<(ScalarField, LinearSolveReport)> {
    let mut sys = PoissonSystem::new(rhs.grid());
    sys.set_rhs(rhs)?;
    sys.solve(tol, max_iter, warm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{sample_background, solve_background, BackgroundParams};
    use crate::eos::{background_coefficients, StateConstants};

    fn fixture_coeffs(n1: usize, n2: usize) -> CoefficientFields {
        let mut params = BackgroundParams::uniform_fixture();
        params.e0 = 0.1;
        let bg = solve_background(&params, n1).unwrap();
        let grid = Grid2D::new(n1, n2, params.length).unwrap();
        let bg2 = sample_background(&bg, &grid).unwrap();
        background_coefficients(&bg2, &StateConstants::from(&params)).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &ScalarField::zeros(&grid),
            g: vec![0.0; grid.n2() + 1],
            psi_bd: BoundaryProfiles::zeros(&grid),
            wall_flux: None,
            coercivity_pairs: 5,
            coercivity_seed: 0x5eed,
        };
        let (phi, elec, report) = solve_coupled(&spec, 1e-10, 5000, None).unwrap();
        assert!(phi.sup_norm() < 1e-12);
        assert!(elec.sup_norm() < 1e-12);
        assert!(report.coercivity_nu3.unwrap() > 0.0);
    }

    #[test]
    fn apply_then_solve_recovers_arbitrary_pair() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &ScalarField::zeros(&grid),
            g: vec![0.0; grid.n2() + 1],
            psi_bd: BoundaryProfiles::zeros(&grid),
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: 0x5eed,
        };
        let sys = assemble_coupled(&spec).unwrap();
        // arbitrary fields; φ need not satisfy any boundary condition for
        // this round trip
        let phi_star = ScalarField::from_fn(&grid, |x1, x2| (x1 * 1.7).sin() + 0.3 * x2 * x2);
        let elec_star = ScalarField::from_fn(&grid, |x1, x2| x1 * (1.0 - x1) * (2.0 * x2).cos());
        let x_star = sys.pack(&phi_star, &elec_star);
        let mut b_star = vec![0.0; x_star.len()];
        sys.matrix().matvec(&x_star, &mut b_star);
        let (x, _) = sys.solve_raw(&b_star, 1e-12, 20000, None).unwrap();
        let (phi, elec) = sys.unpack(&x);
        assert!(phi.sub(&phi_star).sup_norm() < 1e-8);
        assert!(elec.sub(&elec_star).sup_norm() < 1e-8);
    }

    #[test]
    fn lift_reproduces_dirichlet_data_exactly() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let pi = std::f64::consts::PI;
        let en: Vec<f64> = (0..=8).map(|j| 0.3 * (pi * j as f64 / 8.0).cos()).collect();
        let ex: Vec<f64> = (0..=8).map(|j| -0.1 * (pi * j as f64 / 8.0).cos()).collect();
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &ScalarField::zeros(&grid),
            g: vec![0.0; grid.n2() + 1],
            psi_bd: BoundaryProfiles {
                entrance: en.clone(),
                exit: ex.clone(),
            },
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: 0x5eed,
        };
        let (_, elec, _) = solve_coupled(&spec, 1e-11, 20000, None).unwrap();
        for i2 in 0..=8 {
            assert!((elec.at(0, i2) - en[i2]).abs() < 1e-10);
            assert!((elec.at(16, i2) - ex[i2]).abs() < 1e-10);
        }
    }

    #[test]
    fn incompatible_psi_bd_rejected() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let pi = std::f64::consts::PI;
        // sin has a nonzero tangential derivative at the walls
        let en: Vec<f64> = (0..=8).map(|j| (pi * j as f64 / 8.0).sin()).collect();
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &ScalarField::zeros(&grid),
            g: vec![0.0; grid.n2() + 1],
            psi_bd: BoundaryProfiles {
                entrance: en,
                exit: vec![0.0; 9],
            },
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: 0x5eed,
        };
        assert!(matches!(
            assemble_coupled(&spec),
            Err(Error::IncompatibleBoundaryData(_))
        ));
    }

    #[test]
    fn wall_symmetric_data_gives_symmetric_solution() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let pi = std::f64::consts::PI;
        // cos(2 pi x2) is even under x2 -> 1 - x2
        let f1 = ScalarField::from_fn(&grid, |x1, x2| (x1 * 2.0).sin() * (2.0 * pi * x2).cos());
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &f1,
            g: (0..=8).map(|j| 0.05 * (2.0 * pi * j as f64 / 8.0).cos()).collect(),
            psi_bd: BoundaryProfiles::zeros(&grid),
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: 0x5eed,
        };
        let (phi, elec, _) = solve_coupled(&spec, 1e-11, 20000, None).unwrap();
        for field in [&phi, &elec] {
            for (i1, i2) in grid.nodes() {
                let mirror = field.at(i1, grid.n2() - i2);
                assert!(
                    (field.at(i1, i2) - mirror).abs() < 1e-9,
                    "asymmetry at ({i1},{i2})"
                );
            }
        }
    }

    #[test]
    fn rhs_swap_reuses_operator() {
        let coeffs = fixture_coeffs(16, 8);
        let grid = coeffs.a11.grid().clone();
        let f1a = ScalarField::from_fn(&grid, |x1, x2| x1 * x2);
        let f1b = ScalarField::from_fn(&grid, |x1, x2| (x1 - 0.5) * (x2 - 0.3));
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &VectorField::zeros(&grid),
            f1: &f1a,
            g: vec![0.0; grid.n2() + 1],
            psi_bd: BoundaryProfiles::zeros(&grid),
            wall_flux: None,
            coercivity_pairs: 0,
            coercivity_seed: 0x5eed,
        };
        let mut sys = assemble_coupled(&spec).unwrap();
        let (_, elec_a, _) = sys.solve(1e-11, 20000, None).unwrap();
        sys.set_rhs(&VectorField::zeros(&grid), &f1b, &vec![0.0; 9], None).unwrap();
        let (_, elec_b, _) = sys.solve(1e-11, 20000, None).unwrap();
        // reference: assemble from scratch with the second rhs
        let spec_b = LinearSystemSpec { f1: &f1b, ..spec.clone() };
        let (_, elec_ref, _) = solve_coupled(&spec_b, 1e-11, 20000, None).unwrap();
        assert!(elec_b.sub(&elec_ref).sup_norm() < 1e-9);
        assert!(elec_a.sub(&elec_ref).sup_norm() > 1e-6); // genuinely different data
    }

    #[test]
    fn poisson_zero_rhs() {
        let grid = Grid2D::new(12, 10, 1.0).unwrap();
        let (psi, _) = solve_poisson(&ScalarField::zeros(&grid), 1e-11, 1000, None).unwrap();
        assert_eq!(psi.sup_norm(), 0.0);
    }

    #[test]
    fn poisson_apply_then_solve_round_trip() {
        let grid = Grid2D::new(16, 12, 1.5).unwrap();
        // any field respecting the boundary conditions
        let pi = std::f64::consts::PI;
        let target = ScalarField::from_fn(&grid, |x1, x2| {
            (pi * x1 / 1.5).cos() * x2 * (1.0 - x2)
        });
        let sys = PoissonSystem::new(&grid);
        // -apply is the discrete Laplacian image of the target
        let lap: Vec<f64> = sys.apply(&target).iter().map(|v| -v).collect();
        let rhs = ScalarField::from_vec(&grid, lap).unwrap();
        let (psi, _) = solve_poisson(&rhs, 1e-12, 20000, None).unwrap();
        assert!(psi.sub(&target).sup_norm() < 1e-9);
    }

    #[test]
    fn coercivity_margin_positive() {
        let coeffs = fixture_coeffs(16, 8);
        let nu3 = coercivity_margin(&coeffs, 20, 7);
        assert!(nu3 > 0.0, "nu3 = {nu3}");
    }
}
