//! One-dimensional subsonic background state.
//!
//! The base flow depends on x1 only and solves
//!
//! ```text
//!   rho' = rho E / (γ 𝔭 e^{S0/cv} rho^{γ-1} - J0²/rho²),   rho(0) = rho0
//!   E'   = rho - b0,                                        E(0)   = E0
//! ```
//!
//! with u = J0/rho and p = 𝔭 e^{S0/cv} rho^γ. The denominator is the sonic
//! margin c² - u²; integration aborts with a structured error the moment it
//! is no longer positive, so a supersonic background can never be returned
//! silently. The potentials are cumulative integrals of E and u over the
//! same nodes, integrated with quadratic segments so the quadrature order
//! matches the RK4 integrator.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid2D;
use crate::interp1d::cubic_sample;

/// Defining constants of the background problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundParams {
    /// Mass flux rho*u (constant along the nozzle).
    pub j0: f64,
    /// Entropy constant.
    pub s0: f64,
    /// Background charge density.
    pub b0: f64,
    /// Inlet density.
    pub rho0: f64,
    /// Inlet electric field.
    pub e0: f64,
    /// Nozzle length L.
    pub length: f64,
    /// Adiabatic exponent γ > 1.
    pub gamma: f64,
    /// Pressure-law constant 𝔭.
    pub p_hat: f64,
    /// Specific-heat constant c_v.
    pub c_v: f64,
}

impl BackgroundParams {
    /// Test fixture: γ = 2, 𝔭 = c_v = 1, S0 = 0, uniform unit state.
    pub fn uniform_fixture() -> Self {
        BackgroundParams {
            j0: 1.0,
            s0: 0.0,
            b0: 1.0,
            rho0: 1.0,
            e0: 0.0,
            length: 1.0,
            gamma: 2.0,
            p_hat: 1.0,
            c_v: 1.0,
        }
    }

    /// γ 𝔭 e^{S0/cv}, the coefficient in the pressure law at background
    /// entropy.
    #[inline]
    pub fn k_gamma(&self) -> f64 {
        self.gamma * self.p_hat * (self.s0 / self.c_v).exp()
    }

    /// Squared sound speed at density `rho` (background entropy).
    #[inline]
    pub fn sound_speed_sq(&self, rho: f64) -> f64 {
        self.k_gamma() * rho.powf(self.gamma - 1.0)
    }

    /// Sonic margin c²(rho) - J0²/rho²; positive exactly in the subsonic
    /// density range.
    #[inline]
    pub fn sonic_margin(&self, rho: f64) -> f64 {
        self.sound_speed_sq(rho) - self.j0 * self.j0 / (rho * rho)
    }

    /// Critical density: the inlet density must exceed this for the flow to
    /// start subsonic.
    pub fn rho_star(&self) -> f64 {
        (self.j0 * self.j0 / self.k_gamma()).powf(1.0 / (self.gamma + 1.0))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("j0", self.j0),
            ("b0", self.b0),
            ("rho0", self.rho0),
            ("length", self.length),
            ("p_hat", self.p_hat),
            ("c_v", self.c_v),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.s0.is_finite() || !self.e0.is_finite() {
            return Err(Error::InvalidParams("s0 and e0 must be finite".into()));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidParams(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        let rho_star = self.rho_star();
        if self.rho0 <= rho_star {
            return Err(Error::InvalidParams(format!(
                "rho0 = {} is not strictly subsonic: must exceed rho_star = {rho_star:.12}",
                self.rho0
            )));
        }
        Ok(())
    }
}

/// Sampled background profiles on n_steps + 1 uniform nodes over [0, L].
#[derive(Debug, Clone)]
pub struct BackgroundSolution {
    pub params: BackgroundParams,
    pub x1: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub e_field: Vec<f64>,
    /// Electric potential: cumulative integral of e_field, zero at x1 = 0.
    pub potential: Vec<f64>,
    /// Velocity potential: cumulative integral of u, zero at x1 = 0.
    pub velocity_potential: Vec<f64>,
    /// Measured minimum of the sonic margin over the nodes.
    pub nu0: f64,
}

impl BackgroundSolution {
    pub fn n_steps(&self) -> usize {
        self.x1.len() - 1
    }

    pub fn rho_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in &self.rho {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }

    /// Exit-plane (x1 = L) values.
    pub fn exit_u(&self) -> f64 {
        *self.u.last().unwrap()
    }

    pub fn exit_p(&self) -> f64 {
        *self.p.last().unwrap()
    }
}

fn rhs(params: &BackgroundParams, x1: f64, rho: f64, e: f64) -> Result<(f64, f64)> {
    if rho <= 0.0 {
        return Err(Error::NonPositiveDensity { x1, rho });
    }
    let margin = params.sonic_margin(rho);
    if margin <= 0.0 {
        return Err(Error::SubsonicityLost { x1, rho, margin });
    }
    Ok((rho * e / margin, rho - params.b0))
}

/// Integrate the background ODE system with classical fixed-step RK4.
pub fn solve_background(params: &BackgroundParams, n_steps: usize) -> Result<BackgroundSolution> {
    params.validate()?;
    if n_steps == 0 {
        return Err(Error::InvalidParams("n_steps must be positive".into()));
    }
    let h = params.length / n_steps as f64;
    let mut rho = vec![0.0; n_steps + 1];
    let mut e_field = vec![0.0; n_steps + 1];
    rho[0] = params.rho0;
    e_field[0] = params.e0;
    for i in 0..n_steps {
        let x = i as f64 * h;
        let (r, e) = (rho[i], e_field[i]);
        let (k1r, k1e) = rhs(params, x, r, e)?;
        let (k2r, k2e) = rhs(params, x + 0.5 * h, r + 0.5 * h * k1r, e + 0.5 * h * k1e)?;
        let (k3r, k3e) = rhs(params, x + 0.5 * h, r + 0.5 * h * k2r, e + 0.5 * h * k2e)?;
        let (k4r, k4e) = rhs(params, x + h, r + h * k3r, e + h * k3e)?;
        rho[i + 1] = r + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        e_field[i + 1] = e + h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
        // the accepted node must itself be admissible
        rhs(params, x + h, rho[i + 1], e_field[i + 1])?;
    }

    let x1: Vec<f64> = (0..=n_steps)
        .map(|i| i as f64 * params.length / n_steps as f64)
        .collect();
    let u: Vec<f64> = rho.iter().map(|&r| params.j0 / r).collect();
    let pressure_coeff = params.p_hat * (params.s0 / params.c_v).exp();
    let p: Vec<f64> = rho.iter().map(|&r| pressure_coeff * r.powf(params.gamma)).collect();
    let potential = cumulative_quadratic(&e_field, h);
    let velocity_potential = cumulative_quadratic(&u, h);
    let nu0 = rho.iter().fold(f64::INFINITY, |m, &r| m.min(params.sonic_margin(r)));

    Ok(BackgroundSolution {
        params: *params,
        x1,
        rho,
        u,
        p,
        e_field,
        potential,
        velocity_potential,
        nu0,
    })
}

/// Cumulative integral on uniform nodes by quadratic segments.
///
/// Each interior interval integrates the average of the two quadratics
/// through its neighboring triples (fourth order globally); the first and
/// last intervals use the only available one-sided triple.
pub fn cumulative_quadratic(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 3, "need at least 3 samples");
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let seg = if i == 0 {
            h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0
        } else if i == n - 2 {
            h * (-f[n - 3] + 8.0 * f[n - 2] + 5.0 * f[n - 1]) / 12.0
        } else {
            h * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]) / 24.0
        };
        out[i + 1] = out[i] + seg;
    }
    out
}

/// Background fields extruded onto a 2D grid (constant in x2, cubic
/// interpolation in x1).
#[derive(Debug, Clone)]
pub struct Background2D {
    pub params: BackgroundParams,
    pub rho: ScalarField,
    pub u: ScalarField,
    pub p: ScalarField,
    pub e_field: ScalarField,
    pub potential: ScalarField,
    pub velocity_potential: ScalarField,
    pub nu0: f64,
    /// Background axial velocity at the exit plane.
    pub exit_u: f64,
    /// Background pressure at the exit plane.
    pub exit_p: f64,
}

pub fn sample_background(bg: &BackgroundSolution, grid: &Grid2D) -> Result<Background2D> {
    let l = bg.params.length;
    if (grid.length() - l).abs() > 1e-12 * l.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "grid spans [0, {}] but background is defined on [0, {l}]",
            grid.length()
        )));
    }
    let h = l / bg.n_steps() as f64;
    let extrude = |profile: &[f64]| {
        let mut field = ScalarField::zeros(grid);
        for i1 in 0..=grid.n1() {
            let v = cubic_sample(profile, 0.0, h, grid.x1(i1));
            for i2 in 0..=grid.n2() {
                field.set(i1, i2, v);
            }
        }
        field
    };
    Ok(Background2D {
        params: bg.params,
        rho: extrude(&bg.rho),
        u: extrude(&bg.u),
        p: extrude(&bg.p),
        e_field: extrude(&bg.e_field),
        potential: extrude(&bg.potential),
        velocity_potential: extrude(&bg.velocity_potential),
        nu0: bg.nu0,
        exit_u: bg.exit_u(),
        exit_p: bg.exit_p(),
    })
}
