//! One-dimensional interpolation helpers.
//!
//! `cubic_sample` does 4-point Lagrange interpolation on uniformly spaced
//! data (fourth order, exact on cubics and at the nodes). [`pchip`] builds the
//! Fritsch-Carlson monotone cubic Hermite interpolant used for inlet tables:
//! it never overshoots, so a strictly increasing table stays strictly
//! increasing, which is what makes the stream-function inversion safe.

/// 4-point Lagrange interpolation of uniformly spaced samples.
///
/// `x0` is the coordinate of `values[0]` and `h` the spacing. Queries are
/// clamped to the data range.
pub fn cubic_sample(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least 4 samples");
    let t = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let cell = (t.floor() as usize).min(n - 2);
    // Centered 4-point window, shifted inward at the ends.
    let start = cell.saturating_sub(1).min(n - 4);
    let s = t - start as f64;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut w = 1.0;
        for k in 0..4 {
            if k != j {
                w *= (s - k as f64) / (j as f64 - k as f64);
            }
        }
        acc += w * values[start + j];
    }
    acc
}

/// Piecewise cubic Hermite interpolant on a uniform grid.
///
/// With Fritsch-Carlson slopes (see [`pchip`]) it is monotone; with caller
/// supplied slopes it is whatever the slopes make it (the stream-function
/// inlet table supplies the axial flux as the exact slope, which satisfies
/// the monotonicity condition whenever the flux is positive).
#[derive(Debug, Clone)]
pub struct CubicHermite {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Fritsch-Carlson monotone interpolant of the data.
pub fn pchip(x0: f64, h: f64, values: Vec<f64>) -> CubicHermite {
    let n = values.len();
    assert!(n >= 2 && h > 0.0);
    let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h).collect();
    let mut slopes = vec![0.0; n];
    if n == 2 {
        slopes[0] = delta[0];
        slopes[1] = delta[0];
    } else {
        slopes[0] = edge_slope(delta[0], delta[1]);
        slopes[n - 1] = edge_slope(delta[n - 2], delta[n - 3]);
        for i in 1..n - 1 {
            let (d0, d1) = (delta[i - 1], delta[i]);
            slopes[i] = if d0 * d1 > 0.0 {
                // weighted harmonic mean (uniform spacing: weights 3, 3)
                2.0 * d0 * d1 / (d0 + d1)
            } else {
                0.0
            };
        }
    }
    CubicHermite::new(x0, h, values, slopes)
}

impl CubicHermite {
    pub fn new(x0: f64, h: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert!(values.len() >= 2 && slopes.len() == values.len() && h > 0.0);
        CubicHermite {
            x0,
            h,
            values,
            slopes,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.x0 + self.h * (self.values.len() - 1) as f64)
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.values.len();
        let t = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        (i, t - i as f64)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let (i, t) = self.locate(x);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.h
    }

    /// Invert a strictly increasing interpolant: find x with eval(x) = y.
    ///
    /// Bracketed Newton with bisection fallback; `y` is clamped to the value
    /// range first. The residual is driven below `tol` (absolute).
    pub fn invert_increasing(&self, y: f64, tol: f64) -> f64 {
        let n = self.values.len();
        let y = y.clamp(self.values[0], self.values[n - 1]);
        // locate the containing segment by scanning the monotone table
        let mut seg = n - 2;
        for i in 0..n - 1 {
            if y <= self.values[i + 1] {
                seg = i;
                break;
            }
        }
        let mut lo = self.x0 + seg as f64 * self.h;
        let mut hi = lo + self.h;
        let mut x = if self.values[seg + 1] > self.values[seg] {
            lo + self.h * (y - self.values[seg]) / (self.values[seg + 1] - self.values[seg])
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..100 {
            let r = self.eval(x) - y;
            if r.abs() <= tol {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.deriv(x);
            let newton = if d > 0.0 { x - r / d } else { f64::NAN };
            x = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }
}

fn edge_slope(d_near: f64, d_far: f64) -> f64 {
    // non-centered three-point estimate, clipped for shape preservation
    let s = 1.5 * d_near - 0.5 * d_far;
    if s * d_near <= 0.0 {
        0.0
    } else if d_near * d_far < 0.0 && s.abs() > 3.0 * d_near.abs() {
        3.0 * d_near
    } else {
        s
    }
}
