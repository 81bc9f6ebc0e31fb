use super::{
    hermitian_eigenvalues, hermiticity_error, trace, CMatrix, CVector, LinearOp, SpaceLayout, C64,
};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
const POSITIVITY_TOL: f64 = 1e-8;

/// Common read access to pure and mixed states.
pub trait HilbertState {
    fn layout(&self) -> &SpaceLayout;

    /// `⟨A⟩` for a matrix of matching dimension (unchecked).
    fn expect_matrix(&self, m: &CMatrix) -> C64;
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    layout: SpaceLayout,
}

impl PureState {
    /// Wrap an amplitude vector whose norm is already 1 within `1e-10`.
    pub fn new(amplitudes: CVector, layout: SpaceLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
        }
        Ok(Self { amplitudes, layout })
    }

    /// Normalize and wrap; fails only on a zero vector.
    pub fn normalized(amplitudes: CVector, layout: SpaceLayout) -> Result<Self> {
        check_len(amplitudes.len(), &layout)?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
            layout,
        })
    }

    /// Computational basis state with one digit per subsystem.
    pub fn basis(layout: &SpaceLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::Layout(format!(
                "{} digits for {} subsystems",
                digits.len(),
                layout.len()
            )));
        }
        for (i, (&d, &n)) in digits.iter().zip(layout.dims()).enumerate() {
            if d >= n {
                return Err(Error::SubsystemDimension {
                    subsystem: i,
                    expected: n,
                    found: d + 1,
                });
            }
        }
        let mut v = CVector::zeros(layout.total_dim());
        v[layout.index_of(digits)] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes: v,
            layout: layout.clone(),
        })
    }

    /// Tensor product of normalized local vectors, in layout order.
    pub fn product(factors: &[CVector], layout: &SpaceLayout) -> Result<Self> {
        if factors.len() != layout.len() {
            return Err(Error::Layout(format!(
                "{} factors for {} subsystems",
                factors.len(),
                layout.len()
            )));
        }
        let mut acc = CVector::from_element(1, C64::new(1.0, 0.0));
        for (i, (f, &n)) in factors.iter().zip(layout.dims()).enumerate() {
            if f.len() != n {
                return Err(Error::SubsystemDimension {
                    subsystem: i,
                    expected: n,
                    found: f.len(),
                });
            }
            acc = acc.kronecker(f);
        }
        Self::new(acc, layout.clone())
    }

    pub(crate) fn from_raw(amplitudes: CVector, layout: SpaceLayout) -> Self {
        Self { amplitudes, layout }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

impl HilbertState for PureState {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    matrix: CMatrix,
    layout: SpaceLayout,
}

impl DensityOp {
    /// Validate and wrap: Hermitian to `1e-10`, trace 1 to `1e-8`, smallest
    /// eigenvalue ≥ `−1e-8`.
    pub fn new(matrix: CMatrix, layout: SpaceLayout) -> Result<Self> {
        check_len(matrix.nrows(), &layout)?;
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let herm = hermiticity_error(&matrix);
        if herm > 1e-10 {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {tr}")));
        }
        let min = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has eigenvalue {min:e}"
            )));
        }
        Ok(Self { matrix, layout })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            matrix: psi.amplitudes() * psi.amplitudes().adjoint(),
            layout: psi.layout().clone(),
        }
    }

    /// Wrap without validation; callers guarantee the invariants up to
    /// integrator round-off.
    pub(crate) fn from_raw(matrix: CMatrix, layout: SpaceLayout) -> Self {
        Self { matrix, layout }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }
}

impl HilbertState for DensityOp {
    fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    fn expect_matrix(&self, m: &CMatrix) -> C64 {
        // Tr[Aρ] = Σ_ij A_ij ρ_ji
        let n = m.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            for i in 0..n {
                acc += m[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc
    }
}

fn check_len(len: usize, layout: &SpaceLayout) -> Result<()> {
    if len != layout.total_dim() {
        return Err(Error::Dimension {
            expected: layout.total_dim(),
            found: len,
        });
    }
    Ok(())
}

/// `⟨ψ|A|ψ⟩` or `Tr[Aρ]`.
pub fn expectation<S: HilbertState + ?Sized>(op: &LinearOp, state: &S) -> Result<C64> {
    let d = state.layout().total_dim();
    if op.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            found: op.dim(),
        });
    }
    Ok(state.expect_matrix(op.matrix()))
}
