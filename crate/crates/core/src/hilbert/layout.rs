use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered subsystem dimensions of a composite Hilbert space.
///
/// Basis index convention: the first subsystem is the most significant digit,
/// so `kron(A, B)` acts with `A` on subsystem 0. A layout may mark at most one
/// subsystem as a truncated Fock space; that subsystem may have dimension 1,
/// every other subsystem needs at least two levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
    fock: Option<usize>,
    total_dim: usize,
}

impl SpaceLayout {
    /// Layout without a Fock subsystem. Labels default to `s0, s1, ...`.
    pub fn new(dims: &[usize]) -> Result<Self> {
        let labels = (0..dims.len()).map(|i| format!("s{i}")).collect();
        Self::build(dims.to_vec(), labels, None)
    }

    /// Labelled layout; `fock` optionally marks the truncated bosonic mode.
    pub fn labelled(dims: &[usize], labels: &[&str], fock: Option<usize>) -> Result<Self> {
        if labels.len() != dims.len() {
            return Err(Error::Layout(format!(
                "{} labels for {} subsystems",
                labels.len(),
                dims.len()
            )));
        }
        Self::build(
            dims.to_vec(),
            labels.iter().map(|s| s.to_string()).collect(),
            fock,
        )
    }

    /// Single-subsystem layout, used for local operators.
    pub fn single(dim: usize) -> Self {
        Self {
            dims: vec![dim],
            labels: vec!["s0".into()],
            fock: None,
            total_dim: dim,
        }
    }

    fn build(dims: Vec<usize>, labels: Vec<String>, fock: Option<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Layout("no subsystems".into()));
        }
        if let Some(f) = fock {
            if f >= dims.len() {
                return Err(Error::SubsystemIndex {
                    index: f,
                    len: dims.len(),
                });
            }
        }
        for (i, &d) in dims.iter().enumerate() {
            let min = if Some(i) == fock { 1 } else { 2 };
            if d < min {
                return Err(Error::Layout(format!(
                    "subsystem {i} ({}) has dimension {d} < {min}",
                    labels[i]
                )));
            }
        }
        let total_dim = dims.iter().product();
        Ok(Self {
            dims,
            labels,
            fock,
            total_dim,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn label(&self, subsystem: usize) -> &str {
        &self.labels[subsystem]
    }

    pub fn fock_index(&self) -> Option<usize> {
        self.fock
    }

    pub(crate) fn check_index(&self, subsystem: usize) -> Result<()> {
        if subsystem >= self.dims.len() {
            Err(Error::SubsystemIndex {
                index: subsystem,
                len: self.dims.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Layout of the listed subsystems, in the given order.
    pub fn sublayout(&self, keep: &[usize]) -> Result<Self> {
        for &k in keep {
            self.check_index(k)?;
        }
        let fock = self
            .fock
            .and_then(|f| keep.iter().position(|&k| k == f));
        Self::build(
            keep.iter().map(|&k| self.dims[k]).collect(),
            keep.iter().map(|&k| self.labels[k].clone()).collect(),
            fock,
        )
    }

    /// Global basis index of a digit tuple (one digit per subsystem).
    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&d, &n)| acc * n + d)
    }

    /// Digit tuple of a global basis index.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for (slot, &n) in digits.iter_mut().zip(&self.dims).rev() {
            *slot = index % n;
            index /= n;
        }
        digits
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_dim_is_product() {
        let l = SpaceLayout::new(&[2, 3, 4]).unwrap();
        assert_eq!(l.total_dim(), 24);
    }

    #[test]
    fn fock_may_be_one_dimensional() {
        assert!(SpaceLayout::labelled(&[2, 1], &["q", "a"], Some(1)).is_ok());
        assert!(SpaceLayout::new(&[2, 1]).is_err());
        assert!(SpaceLayout::new(&[]).is_err());
    }

    #[test]
    fn digits_round_trip() {
        let l = SpaceLayout::new(&[2, 3, 5]).unwrap();
        for g in 0..l.total_dim() {
            assert_eq!(l.index_of(&l.digits_of(g)), g);
        }
        assert_eq!(l.index_of(&[1, 2, 4]), 29);
    }

    #[test]
    fn sublayout_tracks_fock() {
        let l = SpaceLayout::labelled(&[2, 2, 4], &["B", "C", "A"], Some(2)).unwrap();
        let s = l.sublayout(&[0, 2]).unwrap();
        assert_eq!(s.dims(), &[2, 4]);
        assert_eq!(s.fock_index(), Some(1));
        assert_eq!(s.label(1), "A");
    }
}
