//! Pointwise state functions of the polytropic gas.
//!
//! Everything here is closed-form: the density closure H, the temperature,
//! the flux functions A = B·q and B = H(ς, η + z - |q + s⊥|²/2), their exact
//! first partials, and the linearization coefficients evaluated on a
//! background state. Derivatives are coded analytically; the finite
//! difference comparison lives in the tests.

use crate::background::Background2D;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Gas constants (γ, 𝔭, c_v).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateConstants {
    pub gamma: f64,
    pub p_hat: f64,
    pub c_v: f64,
}

impl StateConstants {
    pub fn new(gamma: f64, p_hat: f64, c_v: f64) -> Result<Self> {
        if !(gamma > 1.0) || !(p_hat > 0.0) || !(c_v > 0.0) {
            return Err(Error::InvalidParams(format!(
                "state constants require gamma > 1, p_hat > 0, c_v > 0; got ({gamma}, {p_hat}, {c_v})"
            )));
        }
        Ok(StateConstants { gamma, p_hat, c_v })
    }

    /// Pressure p(ρ, S) = 𝔭 e^{S/cv} ρ^γ.
    #[inline]
    pub fn pressure(&self, rho: f64, entropy: f64) -> f64 {
        self.p_hat * (entropy / self.c_v).exp() * rho.powf(self.gamma)
    }

    /// Squared sound speed ∂p/∂ρ at fixed entropy.
    #[inline]
    pub fn sound_speed_sq(&self, rho: f64, entropy: f64) -> f64 {
        self.gamma * self.p_hat * (entropy / self.c_v).exp() * rho.powf(self.gamma - 1.0)
    }

    /// Bernoulli head |u|²/2 + γ𝔭 e^{S/cv} ρ^{γ-1}/(γ-1).
    #[inline]
    pub fn bernoulli(&self, rho: f64, speed_sq: f64, entropy: f64) -> f64 {
        0.5 * speed_sq + self.enthalpy(rho, entropy)
    }

    /// Specific enthalpy γ𝔭 e^{S/cv} ρ^{γ-1}/(γ-1).
    #[inline]
    pub fn enthalpy(&self, rho: f64, entropy: f64) -> f64 {
        self.sound_speed_sq(rho, entropy) / (self.gamma - 1.0)
    }

    /// Entropy from density and pressure: c_v ln(p / (𝔭 ρ^γ)).
    #[inline]
    pub fn entropy(&self, rho: f64, p: f64) -> f64 {
        self.c_v * (p / (self.p_hat * rho.powf(self.gamma))).ln()
    }
}

impl From<&crate::background::BackgroundParams> for StateConstants {
    fn from(p: &crate::background::BackgroundParams) -> Self {
        StateConstants {
            gamma: p.gamma,
            p_hat: p.p_hat,
            c_v: p.c_v,
        }
    }
}

/// Density closure H(S, ζ) = [(γ-1)ζ / (γ𝔭 e^{S/cv})]^{1/(γ-1)}.
pub fn eval_h(sc: &StateConstants, entropy: f64, zeta: f64) -> Result<f64> {
    if zeta <= 0.0 {
        return Err(Error::VacuumState {
            count: 1,
            min_zeta: zeta,
        });
    }
    let k = sc.gamma * sc.p_hat * (entropy / sc.c_v).exp();
    Ok(((sc.gamma - 1.0) * zeta / k).powf(1.0 / (sc.gamma - 1.0)))
}

/// Temperature T(ρ, S) = c_v 𝔭 e^{S/cv} ρ^{γ-1} / (γ-1).
pub fn eval_t(sc: &StateConstants, rho: f64, entropy: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(Error::NonPositiveDensity { x1: f64::NAN, rho });
    }
    Ok(sc.c_v * sc.p_hat * (entropy / sc.c_v).exp() * rho.powf(sc.gamma - 1.0) / (sc.gamma - 1.0))
}

/// Argument tuple of the flux functions: (ς, η, z, q, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxPoint {
    /// Entropy ς.
    pub entropy: f64,
    /// Pseudo-Bernoulli invariant η.
    pub invariant: f64,
    /// Electric potential z.
    pub potential: f64,
    /// Velocity-potential gradient q.
    pub q: [f64; 2],
    /// Stream-potential gradient s.
    pub s: [f64; 2],
}

impl FluxPoint {
    /// Momentum direction q + s⊥ with s⊥ = (s2, -s1).
    #[inline]
    pub fn m(&self) -> [f64; 2] {
        [self.q[0] + self.s[1], self.q[1] - self.s[0]]
    }

    /// Head argument ζ = η + z - |q + s⊥|²/2.
    #[inline]
    pub fn zeta(&self) -> f64 {
        let m = self.m();
        self.invariant + self.potential - 0.5 * (m[0] * m[0] + m[1] * m[1])
    }

    /// self + t * inc, componentwise.
    pub fn add_scaled(&self, t: f64, inc: &FluxPoint) -> FluxPoint {
        FluxPoint {
            entropy: self.entropy + t * inc.entropy,
            invariant: self.invariant + t * inc.invariant,
            potential: self.potential + t * inc.potential,
            q: [self.q[0] + t * inc.q[0], self.q[1] + t * inc.q[1]],
            s: [self.s[0] + t * inc.s[0], self.s[1] + t * inc.s[1]],
        }
    }
}

/// Flux values: A = (A1, A2) = B·q and the density B.
pub fn eval_ab(sc: &StateConstants, pt: &FluxPoint) -> Result<([f64; 2], f64)> {
    let b = eval_h(sc, pt.entropy, pt.zeta())?;
    Ok(([b * pt.q[0], b * pt.q[1]], b))
}

/// Gradient of a scalar function of (ς, η, z, q, s).
#[derive(Debug, Clone, Copy, Default)]
pub struct FluxGrad {
    pub entropy: f64,
    pub invariant: f64,
    pub potential: f64,
    pub q: [f64; 2],
    pub s: [f64; 2],
}

impl FluxGrad {
    /// Full directional derivative against an increment.
    pub fn dot(&self, inc: &FluxPoint) -> f64 {
        self.entropy * inc.entropy
            + self.invariant * inc.invariant
            + self.potential * inc.potential
            + self.q[0] * inc.q[0]
            + self.q[1] * inc.q[1]
            + self.s[0] * inc.s[0]
            + self.s[1] * inc.s[1]
    }

    /// Directional derivative restricted to the (z, q) slots.
    pub fn dot_zq(&self, inc: &FluxPoint) -> f64 {
        self.potential * inc.potential + self.q[0] * inc.q[0] + self.q[1] * inc.q[1]
    }

    /// Directional derivative restricted to the (ς, η, s) slots.
    pub fn dot_entropy_invariant_s(&self, inc: &FluxPoint) -> f64 {
        self.entropy * inc.entropy
            + self.invariant * inc.invariant
            + self.s[0] * inc.s[0]
            + self.s[1] * inc.s[1]
    }
}

/// Values and all first partials of (A1, A2, B) at a point.
#[derive(Debug, Clone, Copy)]
pub struct FluxDerivatives {
    pub a: [f64; 2],
    pub b: f64,
    pub da: [FluxGrad; 2],
    pub db: FluxGrad,
}

/// Analytic first partials of A and B (chain rule through H).
pub fn eval_ab_derivatives(sc: &StateConstants, pt: &FluxPoint) -> Result<FluxDerivatives> {
    let zeta = pt.zeta();
    let b = eval_h(sc, pt.entropy, zeta)?;
    let m = pt.m();
    let h_zeta = b / ((sc.gamma - 1.0) * zeta);
    let h_entropy = -b / ((sc.gamma - 1.0) * sc.c_v);
    let db = FluxGrad {
        entropy: h_entropy,
        invariant: h_zeta,
        potential: h_zeta,
        q: [-h_zeta * m[0], -h_zeta * m[1]],
        s: [h_zeta * m[1], -h_zeta * m[0]],
    };
    let mut da = [FluxGrad::default(); 2];
    for i in 0..2 {
        da[i] = FluxGrad {
            entropy: pt.q[i] * db.entropy,
            invariant: pt.q[i] * db.invariant,
            potential: pt.q[i] * db.potential,
            q: [pt.q[i] * db.q[0], pt.q[i] * db.q[1]],
            s: [pt.q[i] * db.s[0], pt.q[i] * db.s[1]],
        };
        da[i].q[i] += b;
    }
    Ok(FluxDerivatives {
        a: [b * pt.q[0], b * pt.q[1]],
        b,
        da,
        db,
    })
}

/// Linearization coefficients evaluated on the background, as 2D fields.
///
/// The matrix [a_ij] is diagonal; b_i + c_i = 0 holds identically and the
/// second components vanish. nu1 and nu2 are the measured positivity margins
/// of the diagonal and of d.
#[derive(Debug, Clone)]
pub struct CoefficientFields {
    pub a11: ScalarField,
    pub a22: ScalarField,
    pub b1: ScalarField,
    pub b2: ScalarField,
    pub c1: ScalarField,
    pub c2: ScalarField,
    pub d: ScalarField,
    pub nu1: f64,
    pub nu2: f64,
}

/// Evaluate the background linearization coefficients
///
/// ```text
///   a11 = ρ̄ (1 - ū²/(γ𝔭 e^{S0/cv} ρ̄^{γ-1}))    a22 = ρ̄
///   b1  = -c1 = ū ρ̄^{2-γ}/(γ𝔭 e^{S0/cv})        b2 = c2 = 0
///   d   = ρ̄^{2-γ}/(γ𝔭 e^{S0/cv})
/// ```
///
/// which are exactly ∂_q A, ∂_z A, ∂_q B, ∂_z B at the background state;
/// a11 vanishes exactly at the sonic speed.
pub fn background_coefficients(bg: &Background2D, sc: &StateConstants) -> Result<CoefficientFields> {
    let k = sc.gamma * sc.p_hat * (bg.params.s0 / sc.c_v).exp();
    let grid = bg.rho.grid().clone();
    let mut a11 = ScalarField::zeros(&grid);
    let mut a22 = ScalarField::zeros(&grid);
    let mut b1 = ScalarField::zeros(&grid);
    let mut d = ScalarField::zeros(&grid);
    for (i1, i2) in grid.nodes() {
        let rho = bg.rho.at(i1, i2);
        let u = bg.u.at(i1, i2);
        if rho <= 0.0 {
            return Err(Error::NonPositiveDensity {
                x1: grid.x1(i1),
                rho,
            });
        }
        let dz = rho.powf(2.0 - sc.gamma) / k;
        a11.set(i1, i2, rho - u * u * dz);
        a22.set(i1, i2, rho);
        b1.set(i1, i2, u * dz);
        d.set(i1, i2, dz);
    }
    let min_a11 = a11.data().iter().fold(f64::INFINITY, |m, &v| m.min(v));
    if min_a11 <= 0.0 {
        return Err(Error::EllipticityLost { min_a11 });
    }
    let min_a22 = a22.data().iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let nu2 = d.data().iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(CoefficientFields {
        c1: b1.scale(-1.0),
        b2: ScalarField::zeros(&grid),
        c2: ScalarField::zeros(&grid),
        nu1: min_a11.min(min_a22),
        nu2,
        a11,
        a22,
        b1,
        d,
    })
}

impl CoefficientFields {
    pub fn validate(&self) -> Result<()> {
        if self.nu1 <= 0.0 {
            return Err(Error::IllPosedCoefficients(format!(
                "diagonal positivity margin nu1 = {:.3e}",
                self.nu1
            )));
        }
        if self.nu2 <= 0.0 {
            return Err(Error::IllPosedCoefficients(format!(
                "zero-order positivity margin nu2 = {:.3e}",
                self.nu2
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::{sample_background, solve_background, BackgroundParams};
    use crate::grid::Grid2D;

    fn fixture() -> StateConstants {
        StateConstants::new(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn h_direct_values() {
        let sc = fixture();
        assert!((eval_h(&sc, 0.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        // e^{S/cv} = 2 cancels the doubled zeta
        assert!((eval_h(&sc, 2f64.ln(), 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            eval_h(&sc, 0.0, 0.0),
            Err(Error::VacuumState { .. })
        ));
    }

    #[test]
    fn h_inverts_bernoulli_head() {
        let sc = StateConstants::new(1.4, 0.7, 2.3).unwrap();
        for rho in [0.3, 1.0, 2.7, 9.9] {
            for s in [-0.5, 0.0, 1.1] {
                let zeta = sc.sound_speed_sq(rho, s) / (sc.gamma - 1.0);
                let back = eval_h(&sc, s, zeta).unwrap();
                assert!((back - rho).abs() <= 1e-12 * rho, "rho {rho} back {back}");
            }
        }
    }

    #[test]
    fn temperature_values() {
        let sc = fixture();
        assert!((eval_t(&sc, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_t(&sc, 2.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((eval_t(&sc, 1.0, 2f64.ln()).unwrap() - 2.0).abs() < 1e-15);
        assert!(eval_t(&sc, -1.0, 0.0).is_err());
    }

    #[test]
    fn flux_values() {
        let sc = fixture();
        let pt = FluxPoint {
            entropy: 0.0,
            invariant: 2.5,
            potential: 0.0,
            q: [1.0, 0.0],
            s: [0.0, 0.0],
        };
        let (a, b) = eval_ab(&sc, &pt).unwrap();
        assert!((b - 1.0).abs() < 1e-15);
        assert!((a[0] - 1.0).abs() < 1e-15 && a[1] == 0.0);

        // s = (0,1) contributes s⊥ = (1,0): zeta = 3 - 0.5 = 2.5, B = 1.25
        let pt = FluxPoint {
            entropy: 0.0,
            invariant: 3.0,
            potential: 0.0,
            q: [0.0, 0.0],
            s: [0.0, 1.0],
        };
        let (a, b) = eval_ab(&sc, &pt).unwrap();
        assert!((b - 1.25).abs() < 1e-15);
        assert_eq!(a, [0.0, 0.0]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let sc = StateConstants::new(1.4, 1.0, 1.0).unwrap();
        let pts = [
            FluxPoint {
                entropy: 0.1,
                invariant: 3.0,
                potential: 0.2,
                q: [0.9, 0.1],
                s: [0.05, -0.1],
            },
            FluxPoint {
                entropy: -0.2,
                invariant: 4.0,
                potential: -0.1,
                q: [1.2, -0.3],
                s: [0.2, 0.15],
            },
            FluxPoint {
                entropy: 0.0,
                invariant: 2.2,
                potential: 0.4,
                q: [0.5, 0.0],
                s: [0.0, 0.3],
            },
        ];
        let h = 1e-5;
        for pt in pts {
            let d = eval_ab_derivatives(&sc, &pt).unwrap();
            for slot in 0..7 {
                let mut dir = FluxPoint {
                    entropy: 0.0,
                    invariant: 0.0,
                    potential: 0.0,
                    q: [0.0, 0.0],
                    s: [0.0, 0.0],
                };
                match slot {
                    0 => dir.entropy = 1.0,
                    1 => dir.invariant = 1.0,
                    2 => dir.potential = 1.0,
                    3 => dir.q[0] = 1.0,
                    4 => dir.q[1] = 1.0,
                    5 => dir.s[0] = 1.0,
                    _ => dir.s[1] = 1.0,
                }
                let plus = eval_ab(&sc, &pt.add_scaled(h, &dir)).unwrap();
                let minus = eval_ab(&sc, &pt.add_scaled(-h, &dir)).unwrap();
                let fd_b = (plus.1 - minus.1) / (2.0 * h);
                let an_b = d.db.dot(&dir);
                assert!(
                    (fd_b - an_b).abs() <= 1e-6 * an_b.abs().max(1.0),
                    "B slot {slot}: fd {fd_b} vs {an_b}"
                );
                for i in 0..2 {
                    let fd_a = (plus.0[i] - minus.0[i]) / (2.0 * h);
                    let an_a = d.da[i].dot(&dir);
                    assert!(
                        (fd_a - an_a).abs() <= 1e-6 * an_a.abs().max(1.0),
                        "A{i} slot {slot}: fd {fd_a} vs {an_a}"
                    );
                }
            }
            // H depends on eta + z only
            assert_eq!(d.db.invariant, d.db.potential);
        }
    }

    fn coeffs_for(e0: f64) -> (CoefficientFields, Background2D, StateConstants) {
        let mut params = BackgroundParams::uniform_fixture();
        params.e0 = e0;
        let bg = solve_background(&params, 32).unwrap();
        let grid = Grid2D::new(32, 8, 1.0).unwrap();
        let bg2 = sample_background(&bg, &grid).unwrap();
        let sc = StateConstants::from(&params);
        let cf = background_coefficients(&bg2, &sc).unwrap();
        (cf, bg2, sc)
    }

    #[test]
    fn fixture_coefficients() {
        let (cf, _, _) = coeffs_for(0.0);
        assert!((cf.a11.at(5, 3) - 0.5).abs() < 1e-14);
        assert!((cf.a22.at(5, 3) - 1.0).abs() < 1e-14);
        assert!((cf.b1.at(5, 3) - 0.5).abs() < 1e-14);
        assert!((cf.c1.at(5, 3) + 0.5).abs() < 1e-14);
        assert!((cf.d.at(5, 3) - 0.5).abs() < 1e-14);
        assert!(cf.nu1 > 0.0 && cf.nu2 > 0.0);
    }

    #[test]
    fn antisymmetric_coupling_is_exact() {
        let (cf, _, _) = coeffs_for(0.15);
        for (a, b) in cf.b1.data().iter().zip(cf.c1.data()) {
            assert_eq!(*a, -*b);
        }
        assert_eq!(cf.b2.sup_norm(), 0.0);
        assert_eq!(cf.c2.sup_norm(), 0.0);
    }

    #[test]
    fn coefficients_match_flux_derivatives_at_background() {
        // dual route: closed forms vs the chain-rule partials at the
        // background point (S0, K0, Phi0, (u,0), 0)
        let (cf, bg2, sc) = coeffs_for(0.12);
        let params = bg2.params;
        let grid = bg2.rho.grid().clone();
        for i1 in [0, 7, 19, 32] {
            // the invariant of the background streamline through this node,
            // consistent with the sampled profiles to rounding
            let rho = bg2.rho.at(i1, 0);
            let u = bg2.u.at(i1, 0);
            let k_here =
                sc.bernoulli(rho, u * u, params.s0) - bg2.potential.at(i1, 0);
            let pt = FluxPoint {
                entropy: params.s0,
                invariant: k_here,
                potential: bg2.potential.at(i1, 0),
                q: [bg2.u.at(i1, 0), 0.0],
                s: [0.0, 0.0],
            };
            let d = eval_ab_derivatives(&sc, &pt).unwrap();
            let scale = bg2.rho.at(i1, 0);
            assert!(
                (d.da[0].q[0] - cf.a11.at(i1, 0)).abs() < 1e-10 * scale,
                "a11 at {i1}: {} vs {}",
                d.da[0].q[0],
                cf.a11.at(i1, 0)
            );
            assert!((d.da[1].q[1] - cf.a22.at(i1, 0)).abs() < 1e-10 * scale);
            assert!((d.da[0].potential - cf.b1.at(i1, 0)).abs() < 1e-10);
            assert!((d.db.q[0] - cf.c1.at(i1, 0)).abs() < 1e-10);
            assert!((d.db.potential - cf.d.at(i1, 0)).abs() < 1e-10);
            // off-diagonal of [a_ij] vanishes at the background
            assert!(d.da[0].q[1].abs() < 1e-14 && d.da[1].q[0].abs() < 1e-14);
            let _ = grid.x1(i1);
        }
    }

    #[test]
    fn sonic_background_loses_ellipticity() {
        // force u to the sonic value by hand
        let mut params = BackgroundParams::uniform_fixture();
        params.e0 = 0.0;
        let bg = solve_background(&params, 16).unwrap();
        let grid = Grid2D::new(16, 8, 1.0).unwrap();
        let mut bg2 = sample_background(&bg, &grid).unwrap();
        let sc = StateConstants::from(&params);
        let sonic_u = sc.sound_speed_sq(1.0, 0.0).sqrt();
        bg2.u = ScalarField::constant(&grid, sonic_u);
        let err = background_coefficients(&bg2, &sc).unwrap_err();
        assert!(matches!(err, Error::EllipticityLost { .. }), "{err}");
    }
}
