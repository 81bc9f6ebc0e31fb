//! State-vector kernels shared by the unravelings.

use crate::hilbert::sparse::CsrOp;
use crate::hilbert::{c64, C64};
use crate::models::ModelInstance;

/// Applies `A = G + α c + β` with `G = −iH − c†c/2`.
pub(crate) struct Propagator {
    g: CsrOp,
    c: Option<CsrOp>,
    dim: usize,
    term: Vec<C64>,
    next: Vec<C64>,
    scratch: Vec<C64>,
}

impl Propagator {
    pub(crate) fn new(model: &ModelInstance) -> Self {
        let h = model.h_total.matrix();
        let cm = model.jump_op.matrix();
        let g = h * c64(0.0, -1.0) - cm.adjoint() * cm * c64(0.5, 0.0);
        let dim = h.nrows();
        Self {
            g: CsrOp::from_dense(&g),
            c: (!model.is_closed()).then(|| CsrOp::from_dense(cm)),
            dim,
            term: vec![C64::default(); dim],
            next: vec![C64::default(); dim],
            scratch: vec![C64::default(); dim],
        }
    }

    pub(crate) fn is_closed(&self) -> bool {
        self.c.is_none()
    }

    /// `out = c x` (zero when closed).
    pub(crate) fn jump(&self, x: &[C64], out: &mut [C64]) {
        match &self.c {
            Some(c) => c.apply(x, out),
            None => out.fill(C64::default()),
        }
    }

    /// `next = A term`.
    fn apply(&mut self, alpha: C64, beta: f64) {
        let (src, dst) = (&self.term, &mut self.next);
        self.g.apply(src, dst);
        if alpha != C64::default() {
            if let Some(c) = &self.c {
                c.apply(src, &mut self.scratch);
                for (d, s) in dst.iter_mut().zip(&self.scratch) {
                    *d += alpha * s;
                }
            }
        }
        if beta != 0.0 {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * beta;
            }
        }
    }

    /// `out = T₄(h A) x`, the RK4 step for the linear generator `A`.
    pub(crate) fn rk4(&mut self, x: &[C64], out: &mut [C64], h: f64, alpha: C64, beta: f64) {
        debug_assert_eq!(x.len(), self.dim);
        out.copy_from_slice(x);
        self.term.copy_from_slice(x);
        for k in 1..=4 {
            self.apply(alpha, beta);
            let s = h / k as f64;
            for (t, n) in self.term.iter_mut().zip(&self.next) {
                *t = n * s;
            }
            for (o, t) in out.iter_mut().zip(&self.term) {
                *o += t;
            }
        }
    }
}

pub(crate) fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn scale(x: &mut [C64], s: f64) {
    for z in x {
        *z *= s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::CVector;
    use crate::models::{build_spin_spin, SpinSpinConfig};

    #[test]
    fn rk4_matches_dense_taylor_polynomial() {
        let mut cfg = SpinSpinConfig::strong(0.7);
        cfg.n_ph = 3;
        let m = build_spin_spin(&cfg).unwrap();
        let mut p = Propagator::new(&m);
        let d = m.dim();
        let x: Vec<C64> = (0..d).map(|i| c64((i as f64).sin(), 0.3 * i as f64)).collect();
        let (alpha, beta, h) = (c64(0.2, -0.4), -0.3, 0.05);
        let mut out = vec![C64::default(); d];
        p.rk4(&x, &mut out, h, alpha, beta);

        let cm = m.jump_op.matrix();
        let a = m.h_total.matrix() * c64(0.0, -1.0) - cm.adjoint() * cm * c64(0.5, 0.0)
            + cm * alpha
            + crate::hilbert::CMatrix::identity(d, d) * c64(beta, 0.0);
        let xv = CVector::from_column_slice(&x);
        let mut term = xv.clone();
        let mut expected = xv.clone();
        for k in 1..=4 {
            term = &a * term * c64(h / k as f64, 0.0);
            expected += &term;
        }
        let got = CVector::from_column_slice(&out);
        assert!((got - expected).norm() < 1e-13);
    }
}
