use nalgebra::DMatrix;

use super::{is_hermitian, CMatrix, SpaceLayout, C64, HERMITIAN_TOL};
use crate::error::{Error, Result};

/// A square operator on a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp {
    matrix: CMatrix,
    layout: SpaceLayout,
    hermitian: bool,
}

impl LinearOp {
    /// Wrap a matrix. The Hermitian hint is set if the matrix is Hermitian to
    /// within `1e-10` entrywise.
    pub fn new(matrix: CMatrix, layout: SpaceLayout) -> Result<Self> {
        check_square(&matrix, layout.total_dim())?;
        let hermitian = is_hermitian(&matrix, HERMITIAN_TOL);
        Ok(Self {
            matrix,
            layout,
            hermitian,
        })
    }

    /// Wrap a matrix that must be Hermitian.
    pub fn hermitian(matrix: CMatrix, layout: SpaceLayout) -> Result<Self> {
        check_square(&matrix, layout.total_dim())?;
        if !is_hermitian(&matrix, HERMITIAN_TOL) {
            return Err(Error::InvalidState("operator is not Hermitian".into()));
        }
        Ok(Self {
            matrix,
            layout,
            hermitian: true,
        })
    }

    /// Single-subsystem operator from a local matrix.
    pub fn local(matrix: CMatrix) -> Self {
        let layout = SpaceLayout::single(matrix.nrows());
        let hermitian = is_hermitian(&matrix, HERMITIAN_TOL);
        Self {
            matrix,
            layout,
            hermitian,
        }
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: CMatrix::identity(d, d),
            layout: layout.clone(),
            hermitian: true,
        }
    }

    pub fn zeros(layout: &SpaceLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: CMatrix::zeros(d, d),
            layout: layout.clone(),
            hermitian: true,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            layout: self.layout.clone(),
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(s, 0.0),
            layout: self.layout.clone(),
            hermitian: self.hermitian,
        }
    }

    /// `self + other`; both must live on the same layout.
    pub fn plus(&self, other: &LinearOp) -> Result<Self> {
        self.check_same(other)?;
        Self::new(&self.matrix + &other.matrix, self.layout.clone())
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &LinearOp) -> Result<Self> {
        self.check_same(other)?;
        Self::new(&self.matrix * &other.matrix, self.layout.clone())
    }

    fn check_same(&self, other: &LinearOp) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

/// Kronecker product of one factor per subsystem, in layout order.
pub fn kron_compose(factors: &[LinearOp], layout: &SpaceLayout) -> Result<LinearOp> {
    if factors.len() != layout.len() {
        return Err(Error::Layout(format!(
            "{} factors for {} subsystems",
            factors.len(),
            layout.len()
        )));
    }
    for (i, (f, &d)) in factors.iter().zip(layout.dims()).enumerate() {
        if f.dim() != d {
            return Err(Error::SubsystemDimension {
                subsystem: i,
                expected: d,
                found: f.dim(),
            });
        }
    }
    let mut acc: CMatrix = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for f in factors {
        acc = acc.kronecker(f.matrix());
    }
    let hermitian = factors.iter().all(LinearOp::is_hermitian);
    Ok(LinearOp {
        matrix: acc,
        layout: layout.clone(),
        hermitian,
    })
}

/// Lift a single-subsystem operator to the full layout.
pub fn embed(op: &LinearOp, subsystem: usize, layout: &SpaceLayout) -> Result<LinearOp> {
    layout.check_index(subsystem)?;
    let d = layout.dims()[subsystem];
    if op.dim() != d {
        return Err(Error::SubsystemDimension {
            subsystem,
            expected: d,
            found: op.dim(),
        });
    }
    let left: usize = layout.dims()[..subsystem].iter().product();
    let right: usize = layout.dims()[subsystem + 1..].iter().product();
    let matrix = CMatrix::identity(left, left)
        .kronecker(op.matrix())
        .kronecker(&CMatrix::identity(right, right));
    Ok(LinearOp {
        matrix,
        layout: layout.clone(),
        hermitian: op.is_hermitian(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ops::{number, pauli_x, pauli_z};
    use crate::hilbert::{hermitian_eigenvalues, PureState};

    fn id2() -> LinearOp {
        LinearOp::local(CMatrix::identity(2, 2))
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let l = SpaceLayout::new(&[2, 2]).unwrap();
        let k = kron_compose(&[id2(), id2()], &l).unwrap();
        assert_eq!(k.matrix(), &CMatrix::identity(4, 4));
    }

    #[test]
    fn kron_sz_on_product_eigenstate() {
        // index 0 = |down>, index 1 = |up>
        let l = SpaceLayout::new(&[2, 2]).unwrap();
        let op = kron_compose(&[LinearOp::local(pauli_z()), id2()], &l).unwrap();
        let psi = PureState::basis(&l, &[0, 1]).unwrap();
        let out = op.matrix() * psi.amplitudes();
        assert!((out - psi.amplitudes() * C64::new(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn kron_sx_sx_squares_to_identity() {
        let l = SpaceLayout::new(&[2, 2]).unwrap();
        let sx = LinearOp::local(pauli_x());
        let k = kron_compose(&[sx.clone(), sx], &l).unwrap();
        // oracle: explicit 4x4 anti-diagonal matrix squared by hand loops
        let mut explicit = [[0.0f64; 4]; 4];
        for i in 0..4 {
            explicit[i][3 - i] = 1.0;
        }
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.matrix()[(i, j)].re, explicit[i][j]);
            }
        }
        let mut sq = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for m in 0..4 {
                    sq[i][j] += explicit[i][m] * explicit[m][j];
                }
            }
        }
        let prod = k.matrix() * k.matrix();
        for i in 0..4 {
            for j in 0..4 {
                assert!((prod[(i, j)].re - sq[i][j]).abs() < 1e-15);
                assert_eq!(sq[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn kron_reports_offending_subsystem() {
        let l = SpaceLayout::new(&[2, 3]).unwrap();
        let err = kron_compose(&[id2(), id2()], &l).unwrap_err();
        assert!(matches!(
            err,
            Error::SubsystemDimension {
                subsystem: 1,
                expected: 3,
                found: 2
            }
        ));
    }

    #[test]
    fn embed_sz_first_subsystem() {
        let l = SpaceLayout::new(&[2, 2]).unwrap();
        let op = embed(&LinearOp::local(pauli_z()), 0, &l).unwrap();
        let psi = PureState::basis(&l, &[1, 1]).unwrap();
        let v = op.matrix() * psi.amplitudes();
        assert!((v - psi.amplitudes()).norm() < 1e-14);
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let l = SpaceLayout::labelled(&[2, 3, 4], &["a", "b", "c"], Some(2)).unwrap();
        for k in 0..3 {
            let d = l.dims()[k];
            let op = embed(&LinearOp::local(CMatrix::identity(d, d)), k, &l).unwrap();
            assert_eq!(op.matrix(), &CMatrix::identity(24, 24));
        }
    }

    #[test]
    fn embed_number_operator_spectrum() {
        let l = SpaceLayout::labelled(&[2, 2, 3], &["B", "C", "A"], Some(2)).unwrap();
        let op = embed(&LinearOp::local(number(3)), 2, &l).unwrap();
        let mut ev = hermitian_eigenvalues(op.matrix());
        ev.sort_by(f64::total_cmp);
        for (i, e) in ev.iter().enumerate() {
            assert!((e - (i / 4) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_rejects_bad_index_and_dim() {
        let l = SpaceLayout::new(&[2, 2]).unwrap();
        assert!(matches!(
            embed(&id2(), 2, &l),
            Err(Error::SubsystemIndex { index: 2, len: 2 })
        ));
        let id3 = LinearOp::local(CMatrix::identity(3, 3));
        assert!(matches!(
            embed(&id3, 1, &l),
            Err(Error::SubsystemDimension { subsystem: 1, .. })
        ));
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::hilbert::testing::{max_abs, ginibre, random_density, random_hermitian, random_unit_vector};
    use crate::hilbert::{expectation, DensityOp, PureState};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn kron_is_associative(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3, dc in 2usize..=3) {
            let a = LinearOp::local(ginibre(da, da, seed));
            let b = LinearOp::local(ginibre(db, db, seed.wrapping_add(1)));
            let c = LinearOp::local(ginibre(dc, dc, seed.wrapping_add(2)));
            let all = kron_compose(&[a.clone(), b.clone(), c.clone()], &SpaceLayout::new(&[da, db, dc]).unwrap()).unwrap();
            let ab = kron_compose(&[a.clone(), b.clone()], &SpaceLayout::new(&[da, db]).unwrap()).unwrap();
            let left = kron_compose(&[ab, c.clone()], &SpaceLayout::new(&[da * db, dc]).unwrap()).unwrap();
            let bc = kron_compose(&[b, c], &SpaceLayout::new(&[db, dc]).unwrap()).unwrap();
            let right = kron_compose(&[a, bc], &SpaceLayout::new(&[da, db * dc]).unwrap()).unwrap();
            prop_assert!(max_abs(&(all.matrix() - left.matrix())) < 1e-12);
            prop_assert!(max_abs(&(all.matrix() - right.matrix())) < 1e-12);
        }

        #[test]
        fn hermitian_expectations_are_real(seed in any::<u64>(), d in 2usize..=12) {
            let l = SpaceLayout::new(&[d]).unwrap();
            let h = LinearOp::hermitian(random_hermitian(d, seed), l.clone()).unwrap();
            let psi = PureState::new(random_unit_vector(d, seed.wrapping_add(1)), l.clone()).unwrap();
            let rho = DensityOp::new(random_density(d, seed.wrapping_add(2)), l).unwrap();
            prop_assert!(expectation(&h, &psi).unwrap().im.abs() < 1e-10);
            prop_assert!(expectation(&h, &rho).unwrap().im.abs() < 1e-10);
        }
    }
}
