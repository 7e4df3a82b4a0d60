//! Uniform tensor-product grid on the nozzle rectangle (0, L) x (0, 1).
//!
//! Nodes are stored lexicographically with x1 varying fastest. Every node
//! carries exactly one region tag; the four corners are tagged `Corner` and
//! excluded from the sup-norm diagnostics that mimic vanishing corner
//! weights.

use crate::error::{Error, Result};

/// Region classification of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Interior,
    /// Entrance Γ_en = {0} x (0,1), corners excluded.
    Entrance,
    /// Exit Γ_ex = {L} x (0,1), corners excluded.
    Exit,
    /// Insulated walls Γ_w = (0,L) x {0,1}, corners excluded.
    Wall,
    /// The four corner points closure(Γ_w) ∩ closure(Γ_en ∪ Γ_ex).
    Corner,
}

/// Uniform node-centered grid with n1 x n2 cells on [0, L] x [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    n1: usize,
    n2: usize,
    length: f64,
}

impl Grid2D {
    pub fn new(n1: usize, n2: usize, length: f64) -> Result<Self> {
        if n1 < 8 || n2 < 8 {
            return Err(Error::InvalidParams(format!(
                "grid must have at least 8 cells per direction, got {n1}x{n2}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParams(format!(
                "nozzle length must be positive and finite, got {length}"
            )));
        }
        Ok(Grid2D { n1, n2, length })
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn h1(&self) -> f64 {
        self.length / self.n1 as f64
    }

    #[inline]
    pub fn h2(&self) -> f64 {
        1.0 / self.n2 as f64
    }

    /// Number of nodes, (n1 + 1) * (n2 + 1).
    #[inline]
    pub fn num_nodes(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(i1 <= self.n1 && i2 <= self.n2);
        i2 * (self.n1 + 1) + i1
    }

    /// x1 coordinate of column i1; hits L exactly at i1 = n1.
    #[inline]
    pub fn x1(&self, i1: usize) -> f64 {
        (i1 as f64 / self.n1 as f64) * self.length
    }

    /// x2 coordinate of row i2; hits 1 exactly at i2 = n2.
    #[inline]
    pub fn x2(&self, i2: usize) -> f64 {
        i2 as f64 / self.n2 as f64
    }

    pub fn region(&self, i1: usize, i2: usize) -> Region {
        let on_en = i1 == 0;
        let on_ex = i1 == self.n1;
        let on_wall = i2 == 0 || i2 == self.n2;
        match (on_en || on_ex, on_wall) {
            (true, true) => Region::Corner,
            (true, false) => {
                if on_en {
                    Region::Entrance
                } else {
                    Region::Exit
                }
            }
            (false, true) => Region::Wall,
            (false, false) => Region::Interior,
        }
    }

    /// Node lies within `collar` cells (Chebyshev distance) of some corner.
    pub fn in_corner_collar(&self, i1: usize, i2: usize, collar: usize) -> bool {
        (i1 <= collar || i1 + collar >= self.n1) && (i2 <= collar || i2 + collar >= self.n2)
    }

    /// Iterate over all (i1, i2) node indices, x1 fastest.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n1 = self.n1;
        (0..=self.n2).flat_map(move |i2| (0..=n1).map(move |i1| (i1, i2)))
    }

    /// Trapezoid quadrature weight of node (i1, i2) for integrals over the
    /// full rectangle.
    #[inline]
    pub fn quad_weight(&self, i1: usize, i2: usize) -> f64 {
        let w1 = if i1 == 0 || i1 == self.n1 { 0.5 } else { 1.0 };
        let w2 = if i2 == 0 || i2 == self.n2 { 0.5 } else { 1.0 };
        w1 * w2 * self.h1() * self.h2()
    }

    pub fn assert_same(&self, other: &Grid2D, context: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{context}: {}x{} (L = {}) vs {}x{} (L = {})",
                self.n1, self.n2, self.length, other.n1, other.n2, other.length
            )));
        }
        Ok(())
    }
}
