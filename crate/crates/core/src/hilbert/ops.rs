//! Standard local operators.
//!
//! Two-level systems use index 0 = ground (|↓⟩, |g⟩) and index 1 = excited,
//! so `σᶻ = diag(−1, +1)` and `σ⁺ = |1⟩⟨0|`. Spin ladders of total spin
//! `S = n/2` use index `k` = number of excitations, `m = k − n/2`.

use super::{c64, CMatrix};

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    // σʸ = i(σ⁻ − σ⁺) in the ground-first ordering
    CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(-1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)])
}

/// Truncated annihilation operator on `dim` Fock levels.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c64((n as f64).sqrt(), 0.0);
    }
    a
}

/// `a†a` on `dim` Fock levels.
pub fn number(dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for n in 0..dim {
        m[(n, n)] = c64(n as f64, 0.0);
    }
    m
}

/// Collective raising operator `S⁺` on the symmetric ladder of `n_spins`.
pub fn ladder_raise(n_spins: usize) -> CMatrix {
    let dim = n_spins + 1;
    let s = n_spins as f64 / 2.0;
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..n_spins {
        let mz = k as f64 - s;
        m[(k + 1, k)] = c64((s * (s + 1.0) - mz * (mz + 1.0)).sqrt(), 0.0);
    }
    m
}

pub fn ladder_x(n_spins: usize) -> CMatrix {
    let up = ladder_raise(n_spins);
    (&up + up.adjoint()) * c64(0.5, 0.0)
}

pub fn ladder_y(n_spins: usize) -> CMatrix {
    let up = ladder_raise(n_spins);
    (&up - up.adjoint()) * c64(0.0, -0.5)
}

pub fn ladder_z(n_spins: usize) -> CMatrix {
    let dim = n_spins + 1;
    let s = n_spins as f64 / 2.0;
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..dim {
        m[(k, k)] = c64(k as f64 - s, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a * b - b * a
    }

    #[test]
    fn pauli_algebra() {
        let lhs = commutator(&pauli_x(), &pauli_y());
        let rhs = pauli_z() * c64(0.0, 2.0);
        assert!((lhs - rhs).norm() < 1e-15);
    }

    #[test]
    fn ladder_commutators_up_to_eight_spins() {
        for n in 1..=8 {
            let (x, y, z) = (ladder_x(n), ladder_y(n), ladder_z(n));
            let c = commutator(&x, &y);
            let target = &z * c64(0.0, 1.0);
            let worst = (c - target).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "n = {n}: {worst}");
        }
    }

    #[test]
    fn single_spin_ladder_is_half_pauli() {
        assert!((ladder_x(1) - pauli_x() * c64(0.5, 0.0)).norm() < 1e-15);
        assert!((ladder_y(1) - pauli_y() * c64(0.5, 0.0)).norm() < 1e-15);
        assert!((ladder_z(1) - pauli_z() * c64(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn casimir_is_s_s_plus_one() {
        for n in 1..=6 {
            let (x, y, z) = (ladder_x(n), ladder_y(n), ladder_z(n));
            let c = &x * &x + &y * &y + &z * &z;
            let s = n as f64 / 2.0;
            let target = CMatrix::identity(n + 1, n + 1) * c64(s * (s + 1.0), 0.0);
            assert!((c - target).norm() < 1e-12);
        }
    }

    #[test]
    fn number_is_adag_a() {
        let a = annihilation(5);
        assert!((a.adjoint() * &a - number(5)).norm() < 1e-14);
    }
}
