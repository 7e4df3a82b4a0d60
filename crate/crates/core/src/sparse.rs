//! Minimal CSR sparse matrix with triplet assembly.

use rayon::prelude::*;
use std::io::Write;

/// Triplet accumulator; duplicate entries are summed on conversion.
#[derive(Debug, Clone)]
pub struct TripletMatrix {
    n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        TripletMatrix {
            n,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        if value != 0.0 {
            self.entries.push((row as u32, col as u32, value));
        }
    }

    pub fn to_csr(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col = Vec::with_capacity(self.entries.len());
        let mut val = Vec::with_capacity(self.entries.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in self.entries.drain(..) {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col,
            val,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl CsrMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    #[inline]
    fn row_apply(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.val[k] * x[self.col[k] as usize];
        }
        s
    }

    /// y = A x. Row-parallel when a pool is available; each output element
    /// is computed by exactly one task in a fixed order, so the result is
    /// identical for any thread count.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        match crate::parallel::pool() {
            Some(pool) if self.n >= 16384 => pool.install(|| {
                y.par_iter_mut()
                    .enumerate()
                    .for_each(|(i, yi)| *yi = self.row_apply(i, x));
            }),
            _ => {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = self.row_apply(i, x);
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] as usize == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }

    /// One symmetric Gauss-Seidel sweep as a preconditioner application:
    /// z ≈ A⁻¹ r via (D+L) D⁻¹ (D+U) z = r.
    pub fn sgs_apply(&self, r: &[f64], diag: &[f64], z: &mut [f64], work: &mut [f64]) {
        // forward solve (D+L) y = r
        for i in 0..self.n {
            let mut s = r[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k] as usize;
                if j < i {
                    s -= self.val[k] * work[j];
                }
            }
            work[i] = s / diag[i];
        }
        // backward solve (D+U) z = D y
        for i in (0..self.n).rev() {
            let mut s = diag[i] * work[i];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k] as usize;
                if j > i {
                    s -= self.val[k] * z[j];
                }
            }
            z[i] = s / diag[i];
        }
    }

    /// Dump in Matrix Market coordinate format (1-based indices).
    pub fn write_matrix_market(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {:.17e}", i + 1, self.col[k] as usize + 1, self.val[k])?;
            }
        }
        Ok(())
    }
}
