//! The two-level fixed-point iteration.
//!
//! Inner level: with the transport pair W* frozen, iterate
//! Ũ = (Ψ̃, φ̃, ψ̃) ↦ U by first solving the Poisson problem for ψ with the
//! vorticity source evaluated at Ũ, then the coupled system for (φ, Ψ) with
//! right-hand sides evaluated at (Ψ̃, ∇φ̃) and the fresh ∇ψ. This is the
//! frozen-coefficient contraction; the measured per-sweep ratios are
//! recorded. A Jacobi variant (ψ lagged everywhere) is available as a
//! configuration switch.
//!
//! Outer level: from the converged potentials, form the velocity-mass field
//!
//! ```text
//!   V = H(S*, K* + Φ0 + Ψ - ½|∇φ0 + ∇φ + ∇⊥ψ|²) (∇φ0 + ∇φ + ∇⊥ψ)
//! ```
//!
//! normalize its cross-section flux, transport the inlet data along its
//! streamlines and take the result (optionally damped) as the next
//! transport pair. The iteration starts from the background pair and stops
//! when consecutive pairs differ by at most the outer tolerance in the
//! discrete C¹ norm.

use crate::background::Background2D;
use crate::elliptic::{
    assemble_coupled, CoupledSystem, LinearSystemSpec, PoissonSystem,
};
use crate::eos::{background_coefficients, eval_h, CoefficientFields, StateConstants};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::Grid2D;
use crate::solver::boundary::BoundaryData;
use crate::solver::primitives::{reconstruct_primitives, PrimitiveState};
use crate::solver::rhs::{PotentialState, RhsAssembler};
use crate::solver::verify::{verify_solution, ResidualReport};
use crate::transport::{normalize_axial_flux, transport_state, TransportState};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerOrdering {
    /// Solve ψ first, then feed its gradient to the coupled right-hand
    /// sides (the default).
    StreamFirst,
    /// Evaluate every right-hand side at the previous iterate.
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_outer: f64,
    pub max_outer: usize,
    pub tol_inner: f64,
    pub max_inner: usize,
    pub tol_linear: f64,
    pub max_linear: usize,
    pub ordering: InnerOrdering,
    /// Initial damping factor θ for the outer update.
    pub damping: f64,
    /// Growth-guard multiple of σ for the iterate-set check.
    pub growth_guard: f64,
    /// Random test pairs for the assembly-time coercivity check.
    pub coercivity_pairs: usize,
    /// Seed for the coercivity test pairs.
    pub coercivity_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_outer: 1e-9,
            max_outer: 50,
            tol_inner: 1e-10,
            max_inner: 60,
            tol_linear: 1e-10,
            max_linear: 40000,
            ordering: InnerOrdering::StreamFirst,
            damping: 1.0,
            growth_guard: 10.0,
            coercivity_pairs: 20,
            coercivity_seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InnerReport {
    pub sweeps: usize,
    pub converged: bool,
    /// C¹ distance between consecutive iterates, per sweep.
    pub deltas: Vec<f64>,
    /// Ratios delta_k / delta_{k-1} (the measured contraction).
    pub ratios: Vec<f64>,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct OuterReport {
    pub outer_sweeps: usize,
    pub converged: bool,
    /// C¹ distance between consecutive transport pairs, per sweep.
    pub residual_history: Vec<f64>,
    pub inner_reports: Vec<InnerReport>,
    /// Final C¹ deviation of the transport pair from the background pair.
    pub deviation_w: f64,
    /// Final C¹ norm of the potentials.
    pub deviation_u: f64,
    /// Sup-norm deviation proxies excluding a one-cell corner collar.
    pub deviation_w_sup: f64,
    pub deviation_u_sup: f64,
    pub sigma: f64,
    pub growth_flagged: bool,
    pub theta_final: f64,
    pub flux_drift_max: f64,
    pub clamped_nodes_max: usize,
    pub coercivity_nu3: Option<f64>,
    pub linear_iterations: usize,
    pub smooth_inlet: bool,
    pub wall_time: Duration,
}

/// One fully assembled solver instance: background, coefficients,
/// boundary data and the two reusable linear operators.
pub struct NozzleSolver {
    pub bg: Background2D,
    pub sc: StateConstants,
    pub coeffs: CoefficientFields,
    pub boundary: BoundaryData,
    pub config: SolverConfig,
    assembler: RhsAssembler,
    coupled: CoupledSystem,
    poisson: PoissonSystem,
}

impl NozzleSolver {
    pub fn new(bg: Background2D, boundary: BoundaryData, config: SolverConfig) -> Result<Self> {
        let sc = StateConstants::from(&bg.params);
        let grid = bg.rho.grid().clone();
        let coeffs = background_coefficients(&bg, &sc)?;
        let assembler = RhsAssembler::new(&bg, &boundary)?;
        let zero_f = VectorField::zeros(&grid);
        let zero_f1 = crate::field::ScalarField::zeros(&grid);
        let spec = LinearSystemSpec {
            coeffs: &coeffs,
            f: &zero_f,
            f1: &zero_f1,
            g: vec![0.0; grid.n2() + 1],
            psi_bd: boundary.psi_bd.clone(),
            wall_flux: None,
            coercivity_pairs: config.coercivity_pairs,
            coercivity_seed: config.coercivity_seed,
        };
        let coupled = assemble_coupled(&spec)?;
        let poisson = PoissonSystem::new(&grid);
        Ok(NozzleSolver {
            bg,
            sc,
            coeffs,
            boundary,
            config,
            assembler,
            coupled,
            poisson,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.bg.rho.grid()
    }

    /// Background transport pair (S0, K0).
    pub fn background_transport(&self) -> TransportState {
        TransportState::constant(self.grid(), self.boundary.s0, self.boundary.k0)
    }

    /// Inner fixed point for a frozen transport pair.
    pub fn inner_solve(
        &mut self,
        w_star: &TransportState,
        init: &PotentialState,
    ) -> Result<(PotentialState, InnerReport)> {
        let cfg = &self.config;
        let mut current = init.clone();
        let mut deltas = Vec::new();
        let mut ratios = Vec::new();
        let mut linear_iterations = 0usize;
        for sweep in 1..=cfg.max_inner {
            let first = self.assembler.assemble(w_star, &current, &self.boundary)?;
            self.poisson.set_rhs(&first.f2)?;
            let (stream, rep_p) = self
                .poisson
                .solve(cfg.tol_linear, cfg.max_linear, Some(&current.stream))?;
            linear_iterations += rep_p.iterations;

            let bundle = match cfg.ordering {
                InnerOrdering::StreamFirst => {
                    let mid = PotentialState {
                        elec: current.elec.clone(),
                        phi: current.phi.clone(),
                        stream: stream.clone(),
                    };
                    self.assembler.assemble(w_star, &mid, &self.boundary)?
                }
                InnerOrdering::Jacobi => first,
            };
            self.coupled
                .set_rhs(&bundle.f, &bundle.f1, &bundle.g, None)?;
            let (phi, elec, rep_c) = self.coupled.solve(
                cfg.tol_linear,
                cfg.max_linear,
                Some((&current.phi, &current.elec)),
            )?;
            linear_iterations += rep_c.iterations;

            let next = PotentialState { elec, phi, stream };
            let delta = next.c1_distance(&current);
            if let Some(&prev) = deltas.last() {
                if prev > 0.0 {
                    ratios.push(delta / prev);
                }
            }
            deltas.push(delta);
            current = next;
            if delta <= cfg.tol_inner {
                return Ok((
                    current,
                    InnerReport {
                        sweeps: sweep,
                        converged: true,
                        deltas,
                        ratios,
                        linear_iterations,
                    },
                ));
            }
        }
        Err(Error::NotConverged {
            what: format!(
                "inner iteration (ratio history {:?})",
                &ratios[ratios.len().saturating_sub(5)..]
            ),
            iterations: cfg.max_inner,
            residual: *deltas.last().unwrap_or(&f64::NAN),
        })
    }

    /// Velocity-mass field of the current iterate.
    pub fn mass_flux_field(
        &self,
        w_star: &TransportState,
        u: &PotentialState,
    ) -> Result<VectorField> {
        let grid = self.grid();
        let grad_phi = u.phi.gradient_order4();
        let grad_stream = u.stream.gradient_order4();
        let mut v = VectorField::zeros(grid);
        let mut vacuum = 0usize;
        let mut min_zeta = f64::INFINITY;
        for (i1, i2) in grid.nodes() {
            let m1 = self.bg.u.at(i1, i2) + grad_phi.c1.at(i1, i2) + grad_stream.c2.at(i1, i2);
            let m2 = grad_phi.c2.at(i1, i2) - grad_stream.c1.at(i1, i2);
            let zeta = w_star.invariant.at(i1, i2)
                + self.bg.potential.at(i1, i2)
                + u.elec.at(i1, i2)
                - 0.5 * (m1 * m1 + m2 * m2);
            min_zeta = min_zeta.min(zeta);
            if zeta <= 0.0 {
                vacuum += 1;
                continue;
            }
            let density = eval_h(&self.sc, w_star.entropy.at(i1, i2), zeta)?;
            v.c1.set(i1, i2, density * m1);
            v.c2.set(i1, i2, density * m2);
        }
        if vacuum > 0 {
            return Err(Error::VacuumState {
                count: vacuum,
                min_zeta,
            });
        }
        Ok(v)
    }

    /// Run the outer transport fixed point, starting from `w_init` (the
    /// background pair when `None`).
    pub fn outer_iterate(&mut self, w_init: Option<TransportState>) -> Result<Solution> {
        let start = Instant::now();
        let cfg = self.config.clone();
        let mut w = w_init.unwrap_or_else(|| self.background_transport());
        let w0 = self.background_transport();
        let mut u = PotentialState::zeros(self.grid());
        let mut theta = cfg.damping;
        let mut history = Vec::new();
        let mut inner_reports = Vec::new();
        let mut flux_drift_max = 0.0f64;
        let mut clamped_nodes_max = 0usize;
        let mut linear_iterations = 0usize;
        let mut growth_flagged = false;
        let mut converged = false;
        let mut sweeps = 0usize;

        while sweeps < cfg.max_outer {
            sweeps += 1;
            let (u_next, inner) = self.inner_solve(&w, &u)?;
            linear_iterations += inner.linear_iterations;
            inner_reports.push(inner);
            u = u_next;

            let mut v = self.mass_flux_field(&w, &u)?;
            let drift = normalize_axial_flux(&mut v)?;
            flux_drift_max = flux_drift_max.max(drift);
            let (w_raw, _, fm) =
                transport_state(&v, &self.boundary.entropy_en, &self.boundary.invariant_en)?;
            clamped_nodes_max = clamped_nodes_max.max(fm.clamped_nodes);

            let w_next = if theta >= 1.0 {
                w_raw
            } else {
                w.blend(theta, &w_raw)
            };
            let residual = w_next.c1_distance(&w);
            if let Some(&prev) = history.last() {
                if residual > prev && theta > 1.0 / 16.0 {
                    theta = (theta * 0.5).max(1.0 / 16.0);
                }
            }
            history.push(residual);
            w = w_next;

            let deviation = w.c1_distance(&w0);
            if deviation > (cfg.growth_guard * self.boundary.sigma).max(1e-9) {
                growth_flagged = true;
            }
            if residual <= cfg.tol_outer {
                converged = true;
                break;
            }
        }

        let deviation_w = w.c1_distance(&w0);
        let deviation_u = u.c1_norm();
        let deviation_w_sup = w
            .entropy
            .sub(&w0.entropy)
            .sup_norm_no_corners(1)
            .max(w.invariant.sub(&w0.invariant).sup_norm_no_corners(1));
        let deviation_u_sup = u
            .elec
            .sup_norm_no_corners(1)
            .max(u.phi.sup_norm_no_corners(1))
            .max(u.stream.sup_norm_no_corners(1));
        if !converged {
            return Err(Error::NotConverged {
                what: format!("outer iteration (residual history {history:?})"),
                iterations: sweeps,
                residual: *history.last().unwrap_or(&f64::NAN),
            });
        }

        let mut primitives = reconstruct_primitives(&self.bg, &self.sc, &u, &w)?;
        let residuals = verify_solution(&primitives, &self.boundary, &self.sc);
        primitives.residuals = Some(residuals);

        let report = OuterReport {
            outer_sweeps: sweeps,
            converged,
            residual_history: history,
            inner_reports,
            deviation_w,
            deviation_u,
            deviation_w_sup,
            deviation_u_sup,
            sigma: self.boundary.sigma,
            growth_flagged,
            theta_final: theta,
            flux_drift_max,
            clamped_nodes_max,
            coercivity_nu3: self.coupled.coercivity_nu3(),
            linear_iterations,
            smooth_inlet: self.boundary.smooth_inlet,
            wall_time: start.elapsed(),
        };
        Ok(Solution {
            potentials: u,
            transport: w,
            primitives,
            report,
        })
    }

}

/// Converged output of the outer iteration.
pub struct Solution {
    pub potentials: PotentialState,
    pub transport: TransportState,
    pub primitives: PrimitiveState,
    pub report: OuterReport,
}

impl Solution {
    pub fn residuals(&self) -> &ResidualReport {
        self.primitives.residuals.as_ref().unwrap()
    }
}
