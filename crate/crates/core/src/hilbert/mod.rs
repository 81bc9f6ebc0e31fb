//! Dense complex linear algebra on tensor-product Hilbert spaces.
//!
//! Everything here is a pure function of immutable inputs. Matrices are dense
//! (`nalgebra::DMatrix<Complex64>`); the crate-internal [`sparse`] applier is
//! only used by the integrators' inner loops.

mod layout;
mod op;
pub mod ops;
pub(crate) mod sparse;
mod state;
mod trace;

use nalgebra::{DMatrix, DVector};

pub use layout::SpaceLayout;
pub use op::{embed, kron_compose, LinearOp};
pub use state::{expectation, DensityOp, HilbertState, PureState};
pub use trace::{partial_trace, PartialTrace, Reducible};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Entrywise Hermiticity check.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    for j in 0..n {
        for i in 0..=j {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Largest entrywise deviation `|m - m†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m†) / 2` in place.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(j, j)] = c64(m[(j, j)].re, 0.0);
    }
}

/// Eigenvalues of a Hermitian matrix, in no particular order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// `Tr[ρ²]`.
pub fn purity(rho: &DensityOp) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Trace distance `½‖a − b‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b))
        .iter()
        .map(|e| e.abs())
        .sum::<f64>()
}

/// Complex trace of a square matrix.
pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

#[cfg(test)]
pub(crate) fn vector(values: &[C64]) -> CVector {
    DVector::from_column_slice(values)
}
