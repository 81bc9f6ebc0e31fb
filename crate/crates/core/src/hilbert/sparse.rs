//! Compressed-row operator used by the integrators' inner loops.

use super::{CMatrix, C64};

#[derive(Debug, Clone)]
pub struct CsrOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrOp {
    /// Drops exact zeros of a dense square matrix.
    pub fn from_dense(m: &CMatrix) -> Self {
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    #[cfg(test)]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`.
    #[inline]
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *o = acc;
        }
    }

    /// `out = A M` column by column (both column-major, `dim × dim`).
    pub fn apply_columns(&self, m: &CMatrix, out: &mut CMatrix) {
        let d = self.dim;
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..d {
            self.apply(&src[j * d..(j + 1) * d], &mut dst[j * d..(j + 1) * d]);
        }
    }
}
