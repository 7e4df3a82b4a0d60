//! Streamline transport of the entropy / pseudo-Bernoulli pair.
//!
//! Given a divergence-free velocity-mass field V with positive axial
//! component, the stream function w(x1, x2) = ∫₀^{x2} V1(x1, y) dy is
//! strictly increasing in x2, its level sets are streamlines, and every
//! point x maps to the inlet height ℒ(x) of its streamline through
//! w(x) = w(0, ℒ(x)). Transported quantities are then inlet profiles
//! composed with ℒ — no ODE tracing, no accumulation of integration error,
//! and the inversion residual is driven to near machine precision.
//!
//! The inlet table 𝒢(θ) = w(0, θ) is interpolated as a cubic Hermite with
//! the exact slopes 𝒢'(θ_j) = V1(0, θ_j); positive flux puts the slopes in
//! the monotone regime, so the interpolant is strictly increasing and the
//! flow-map gradient formula ∇ℒ = -V⊥/V1(0, ℒ) evaluates 𝒢' consistently.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid2D;
use crate::interp1d::{pchip, CubicHermite};

/// Stream function of a velocity-mass field, with its inlet table.
pub struct StreamFunction {
    pub w: ScalarField,
    /// Measured minimum of V1 over the grid.
    pub nu_star: f64,
    /// Inlet table 𝒢(θ) = w(0, θ) with exact slopes V1(0, θ).
    pub inlet_table: CubicHermite,
}

/// Flow map ℒ with clamp accounting.
pub struct FlowMap {
    pub values: ScalarField,
    /// Nodes where w overshot the inlet range and was clamped silently.
    pub clamped_nodes: usize,
    /// Largest silent overshoot seen (in w units).
    pub max_overshoot: f64,
}

/// A differentiable inlet profile over θ ∈ [0, 1].
pub struct InletProfile {
    eval: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    deriv: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl InletProfile {
    pub fn analytic(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        InletProfile {
            eval: Box::new(eval),
            deriv: Box::new(deriv),
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::analytic(move |_| v, |_| 0.0)
    }

    /// Monotone-safe C¹ spline through samples on uniform inlet nodes.
    pub fn from_table(values: Vec<f64>) -> Self {
        let h = 1.0 / (values.len() - 1) as f64;
        let spline = pchip(0.0, h, values);
        let spline2 = spline.clone();
        InletProfile {
            eval: Box::new(move |t| spline.eval(t)),
            deriv: Box::new(move |t| spline2.deriv(t)),
        }
    }

    #[inline]
    pub fn eval(&self, theta: f64) -> f64 {
        (self.eval)(theta)
    }

    #[inline]
    pub fn deriv(&self, theta: f64) -> f64 {
        (self.deriv)(theta)
    }
}

impl std::fmt::Debug for InletProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "InletProfile")
    }
}

/// Entropy / pseudo-Bernoulli fields with their vertical derivatives.
#[derive(Debug, Clone)]
pub struct TransportState {
    pub entropy: ScalarField,
    pub invariant: ScalarField,
    pub d2_entropy: ScalarField,
    pub d2_invariant: ScalarField,
}

impl TransportState {
    pub fn constant(grid: &Grid2D, entropy: f64, invariant: f64) -> Self {
        TransportState {
            entropy: ScalarField::constant(grid, entropy),
            invariant: ScalarField::constant(grid, invariant),
            d2_entropy: ScalarField::zeros(grid),
            d2_invariant: ScalarField::zeros(grid),
        }
    }

    /// Componentwise (1-θ)·self + θ·other (damped update).
    pub fn blend(&self, theta: f64, other: &TransportState) -> TransportState {
        let mix = |a: &ScalarField, b: &ScalarField| a.scale(1.0 - theta).add_scaled(theta, b);
        TransportState {
            entropy: mix(&self.entropy, &other.entropy),
            invariant: mix(&self.invariant, &other.invariant),
            d2_entropy: mix(&self.d2_entropy, &other.d2_entropy),
            d2_invariant: mix(&self.d2_invariant, &other.d2_invariant),
        }
    }

    /// Discrete C¹ sup distance between the (S, K) pairs.
    pub fn c1_distance(&self, other: &TransportState) -> f64 {
        self.entropy.sub(&other.entropy).c1_norm() + self.invariant.sub(&other.invariant).c1_norm()
    }

    pub fn sup_distance(&self, other: &TransportState) -> f64 {
        self.entropy
            .sub(&other.entropy)
            .sup_norm()
            .max(self.invariant.sub(&other.invariant).sup_norm())
    }
}

/// Scale V1 per column so every cross-section carries the inlet flux.
///
/// The discrete V from the elliptic stage is divergence-free only to
/// truncation, so raw column fluxes drift by O(h²); the rescale (a relative
/// O(h²) correction) makes the stream-function range identical on every
/// column, which keeps the flow-map inversion exact instead of clamping at
/// the top wall. Returns the largest relative drift that was removed.
pub fn normalize_axial_flux(v: &mut VectorField) -> Result<f64> {
    let grid = v.grid().clone();
    let h2 = grid.h2();
    let flux_of = |c1: &ScalarField, i1: usize| {
        let mut s = 0.0;
        for i2 in 0..=grid.n2() {
            let w = if i2 == 0 || i2 == grid.n2() { 0.5 } else { 1.0 };
            s += w * h2 * c1.at(i1, i2);
        }
        s
    };
    let inlet_flux = flux_of(&v.c1, 0);
    if inlet_flux <= 0.0 {
        return Err(Error::FluxNotPositive {
            min_v1: inlet_flux,
        });
    }
    let mut max_drift = 0.0f64;
    for i1 in 0..=grid.n1() {
        let flux = flux_of(&v.c1, i1);
        if flux <= 0.0 {
            return Err(Error::FluxNotPositive { min_v1: flux });
        }
        let factor = inlet_flux / flux;
        max_drift = max_drift.max((factor - 1.0).abs());
        for i2 in 0..=grid.n2() {
            let val = v.c1.at(i1, i2) * factor;
            v.c1.set(i1, i2, val);
        }
    }
    Ok(max_drift)
}

/// Column-wise trapezoid integration of V1 into the stream function.
pub fn compute_stream(v: &VectorField) -> Result<StreamFunction> {
    let grid = v.grid().clone();
    let nu_star = v.c1.data().iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if nu_star <= 0.0 {
        return Err(Error::FluxNotPositive { min_v1: nu_star });
    }
    let h2 = grid.h2();
    let mut w = ScalarField::zeros(&grid);
    for i1 in 0..=grid.n1() {
        let mut acc = 0.0;
        w.set(i1, 0, 0.0);
        for i2 in 0..grid.n2() {
            acc += 0.5 * h2 * (v.c1.at(i1, i2) + v.c1.at(i1, i2 + 1));
            w.set(i1, i2 + 1, acc);
        }
    }

    // consistency check: ∂1 w must reproduce -V2 up to truncation
    let d1w = w.d1();
    let mut mismatch = 0.0f64;
    for (i1, i2) in grid.nodes() {
        mismatch = mismatch.max((d1w.at(i1, i2) + v.c2.at(i1, i2)).abs());
    }
    let scale = v.c1.c1_norm() + v.c2.c1_norm();
    let tolerance = 10.0 * (grid.h1() * grid.h1() + grid.h2() * grid.h2()) * scale.max(1.0);
    if mismatch > tolerance {
        return Err(Error::NotDivergenceFree {
            max_mismatch: mismatch,
            tolerance,
        });
    }

    let inlet_values: Vec<f64> = (0..=grid.n2()).map(|i2| w.at(0, i2)).collect();
    let inlet_slopes: Vec<f64> = (0..=grid.n2()).map(|i2| v.c1.at(0, i2)).collect();
    Ok(StreamFunction {
        w,
        nu_star,
        inlet_table: CubicHermite::new(0.0, h2, inlet_values, inlet_slopes),
    })
}

/// Pointwise inversion of the inlet table: ℒ(x) = 𝒢⁻¹(w(x)).
pub fn flow_map(sf: &StreamFunction) -> Result<FlowMap> {
    let grid = sf.w.grid().clone();
    let w_lo = sf.inlet_table.values()[0];
    let w_hi = *sf.inlet_table.values().last().unwrap();
    let w_scale = sf.w.sup_norm().max(1e-30);
    let h = grid.h1().max(grid.h2());
    let clamp_tol = 2.0 * h * h * w_scale.max(1.0);
    let invert_tol = 1e-13 * w_scale;

    let mut values = ScalarField::zeros(&grid);
    let mut clamped_nodes = 0usize;
    let mut max_overshoot = 0.0f64;
    for (i1, i2) in grid.nodes() {
        // walls are streamlines; their inlet heights are exact
        if i2 == 0 {
            values.set(i1, 0, 0.0);
            continue;
        }
        if i2 == grid.n2() {
            let overshoot = (sf.w.at(i1, i2) - w_hi).abs();
            if overshoot > clamp_tol {
                return Err(Error::OutOfRange {
                    overshoot,
                    tolerance: clamp_tol,
                });
            }
            if overshoot > 1e-14 * w_scale {
                clamped_nodes += 1;
                max_overshoot = max_overshoot.max(overshoot);
            }
            values.set(i1, i2, 1.0);
            continue;
        }
        let mut target = sf.w.at(i1, i2);
        if target < w_lo || target > w_hi {
            let overshoot = if target < w_lo {
                w_lo - target
            } else {
                target - w_hi
            };
            if overshoot > clamp_tol {
                return Err(Error::OutOfRange {
                    overshoot,
                    tolerance: clamp_tol,
                });
            }
            clamped_nodes += 1;
            max_overshoot = max_overshoot.max(overshoot);
            target = target.clamp(w_lo, w_hi);
        }
        values.set(i1, i2, sf.inlet_table.invert_increasing(target, invert_tol));
    }
    Ok(FlowMap {
        values,
        clamped_nodes,
        max_overshoot,
    })
}

/// Compose inlet profiles with the flow map: W(x) = W_en(ℒ(x)).
pub fn transport_profiles(
    entropy_en: &InletProfile,
    invariant_en: &InletProfile,
    fm: &FlowMap,
) -> (ScalarField, ScalarField) {
    let grid = fm.values.grid().clone();
    let mut s = ScalarField::zeros(&grid);
    let mut k = ScalarField::zeros(&grid);
    for (i1, i2) in grid.nodes() {
        let theta = fm.values.at(i1, i2);
        s.set(i1, i2, entropy_en.eval(theta));
        k.set(i1, i2, invariant_en.eval(theta));
    }
    (s, k)
}

/// Flow-map gradient ∇ℒ = -V⊥ / V1(0, ℒ) and the vertical derivatives of
/// the transported pair, ∂2 W = W_en'(ℒ) ∂2ℒ.
pub fn flow_map_gradient(
    sf: &StreamFunction,
    fm: &FlowMap,
    v: &VectorField,
    entropy_en: &InletProfile,
    invariant_en: &InletProfile,
) -> Result<(VectorField, ScalarField, ScalarField)> {
    let grid = fm.values.grid().clone();
    let mut grad = VectorField::zeros(&grid);
    let mut d2s = ScalarField::zeros(&grid);
    let mut d2k = ScalarField::zeros(&grid);
    for (i1, i2) in grid.nodes() {
        let theta = fm.values.at(i1, i2);
        let inlet_v1 = sf.inlet_table.deriv(theta);
        if inlet_v1 <= 0.0 {
            return Err(Error::FluxNotPositive { min_v1: inlet_v1 });
        }
        let g1 = -v.c2.at(i1, i2) / inlet_v1;
        let g2 = v.c1.at(i1, i2) / inlet_v1;
        grad.c1.set(i1, i2, g1);
        grad.c2.set(i1, i2, g2);
        d2s.set(i1, i2, entropy_en.deriv(theta) * g2);
        d2k.set(i1, i2, invariant_en.deriv(theta) * g2);
    }
    Ok((grad, d2s, d2k))
}

/// Full transport step: stream function, flow map, composed fields and
/// their vertical derivatives.
pub fn transport_state(
    v: &VectorField,
    entropy_en: &InletProfile,
    invariant_en: &InletProfile,
) -> Result<(TransportState, StreamFunction, FlowMap)> {
    let sf = compute_stream(v)?;
    let fm = flow_map(&sf)?;
    let (entropy, invariant) = transport_profiles(entropy_en, invariant_en, &fm);
    let (_, d2_entropy, d2_invariant) = flow_map_gradient(&sf, &fm, v, entropy_en, invariant_en)?;
    entropy.assert_finite("transport: entropy")?;
    invariant.assert_finite("transport: invariant")?;
    Ok((
        TransportState {
            entropy,
            invariant,
            d2_entropy,
            d2_invariant,
        },
        sf,
        fm,
    ))
}
