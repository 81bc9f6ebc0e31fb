use super::{CMatrix, CVector, DensityOp, HilbertState, PureState, SpaceLayout, C64};
use crate::error::{Error, Result};

/// Precomputed index tables for tracing out the complement of `keep`.
///
/// Global index `g` factors into a kept index `k` and a traced index `t`;
/// the reduced matrix is `ρ_red[k, k'] = Σ_t ρ[g(k,t), g(k',t)]`.
#[derive(Debug, Clone)]
pub struct PartialTrace {
    layout: SpaceLayout,
    reduced: SpaceLayout,
    keep_dim: usize,
    traced_dim: usize,
    /// `global[t * keep_dim + k]` is the global index of `(k, t)`.
    global: Vec<usize>,
}

impl PartialTrace {
    /// `keep` must be a nonempty proper subset of the subsystem indices. The
    /// reduced layout lists kept subsystems in ascending order.
    pub fn new(layout: &SpaceLayout, keep: &[usize]) -> Result<Self> {
        let n = layout.len();
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty()
            || sorted.len() != keep.len()
            || sorted.len() >= n
            || sorted.iter().any(|&k| k >= n)
        {
            return Err(Error::KeepSet {
                keep: keep.to_vec(),
                len: n,
            });
        }
        let traced: Vec<usize> = (0..n).filter(|i| !sorted.contains(i)).collect();
        let reduced = layout.sublayout(&sorted)?;
        let keep_dim = reduced.total_dim();
        let traced_dim: usize = traced.iter().map(|&i| layout.dims()[i]).product();
        let traced_dims: Vec<usize> = traced.iter().map(|&i| layout.dims()[i]).collect();

        let mut global = vec![0; keep_dim * traced_dim];
        let mut digits = vec![0usize; n];
        for t in 0..traced_dim {
            let td = mixed_radix(t, &traced_dims);
            for (&slot, &d) in traced.iter().zip(&td) {
                digits[slot] = d;
            }
            for k in 0..keep_dim {
                let kd = reduced.digits_of(k);
                for (&slot, &d) in sorted.iter().zip(&kd) {
                    digits[slot] = d;
                }
                global[t * keep_dim + k] = layout.index_of(&digits);
            }
        }
        Ok(Self {
            layout: layout.clone(),
            reduced,
            keep_dim,
            traced_dim,
            global,
        })
    }

    pub fn reduced_layout(&self) -> &SpaceLayout {
        &self.reduced
    }

    /// Reduced state of a (not necessarily normalized) amplitude vector.
    pub fn apply_vector(&self, psi: &CVector) -> CMatrix {
        debug_assert_eq!(psi.len(), self.layout.total_dim());
        // M[k, t] = ψ[g(k,t)], ρ = M M†
        let kd = self.keep_dim;
        let mut m = CMatrix::zeros(kd, self.traced_dim);
        for t in 0..self.traced_dim {
            for k in 0..kd {
                m[(k, t)] = psi[self.global[t * kd + k]];
            }
        }
        let mut out = CMatrix::zeros(kd, kd);
        for j in 0..kd {
            for i in 0..=j {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..self.traced_dim {
                    acc += m[(i, t)] * m[(j, t)].conj();
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        out
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        debug_assert_eq!(rho.nrows(), self.layout.total_dim());
        let kd = self.keep_dim;
        let mut out = CMatrix::zeros(kd, kd);
        for t in 0..self.traced_dim {
            let block = &self.global[t * kd..(t + 1) * kd];
            for (b, &gb) in block.iter().enumerate() {
                for (a, &ga) in block.iter().enumerate() {
                    out[(a, b)] += rho[(ga, gb)];
                }
            }
        }
        out
    }

    pub fn apply_pure(&self, psi: &PureState) -> DensityOp {
        DensityOp::from_raw(self.apply_vector(psi.amplitudes()), self.reduced.clone())
    }

    pub fn apply_density(&self, rho: &DensityOp) -> DensityOp {
        DensityOp::from_raw(self.apply_matrix(rho.matrix()), self.reduced.clone())
    }
}

fn mixed_radix(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &n) in digits.iter_mut().zip(dims).rev() {
        *slot = index % n;
        index /= n;
    }
    digits
}

/// Types that can be reduced to a subsystem.
pub trait Reducible: HilbertState {
    fn reduce_with(&self, tracer: &PartialTrace) -> DensityOp;
}

impl Reducible for PureState {
    fn reduce_with(&self, tracer: &PartialTrace) -> DensityOp {
        tracer.apply_pure(self)
    }
}

impl Reducible for DensityOp {
    fn reduce_with(&self, tracer: &PartialTrace) -> DensityOp {
        tracer.apply_density(self)
    }
}

/// Reduced density operator on the `keep` subsystems.
pub fn partial_trace<S: Reducible>(state: &S, keep: &[usize]) -> Result<DensityOp> {
    let tracer = PartialTrace::new(state.layout(), keep)?;
    Ok(state.reduce_with(&tracer))
}
