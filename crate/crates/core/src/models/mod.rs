//! The two battery–charger models and their shared container.
//!
//! Subsystem order follows the kets of the initial states: the spin–spin
//! model is `(Battery, Charger, Cavity)` and the Dicke model is
//! `(Cavity, Spins)`. The battery Hamiltonian is shifted so that the empty
//! battery has energy zero.

mod dicke;
mod spin_spin;

use serde::{Deserialize, Serialize};

pub use dicke::{build_dicke, build_dicke_full_space, symmetric_embedding, DickeConfig};
pub use spin_spin::{build_spin_spin, SpinSpinConfig};

use crate::hilbert::{LinearOp, PureState, SpaceLayout};
use crate::thermo::BatterySpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelLabel {
    SpinSpin,
    Dicke,
    /// Dicke model on the full `2^N` spin space (validation only).
    DickeFullSpace,
}

/// A fully assembled battery–charger model.
#[derive(Debug, Clone)]
pub struct ModelInstance {
    pub label: ModelLabel,
    pub layout: SpaceLayout,
    /// Hamiltonian with the charging interaction switched on.
    pub h_total: LinearOp,
    /// Ground-shifted battery Hamiltonian on the battery subsystems.
    pub h_battery: LinearOp,
    /// Physical battery spectrum used for passive states.
    pub h_battery_spectrum: BatterySpectrum,
    pub jump_op: LinearOp,
    pub initial_state: PureState,
    /// Subsystems that make up the battery, ascending.
    pub battery: Vec<usize>,
    /// Largest rate in the model, used to pick default time steps.
    pub rate_scale: f64,
}

impl ModelInstance {
    /// Replace the spectrum used for passive-state energies.
    pub fn with_spectrum(mut self, spectrum: BatterySpectrum) -> Self {
        self.h_battery_spectrum = spectrum;
        self
    }

    /// Whether the jump operator vanishes identically.
    pub fn is_closed(&self) -> bool {
        self.jump_op.matrix().iter().all(|z| z.norm() == 0.0)
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }
}

/// Hamiltonian at time `t`. The interaction is on for all `t ≥ 0`; a charging
/// time `τ_c` is a read-out label for the state sampled at `t = τ_c`.
pub fn charging_schedule(model: &ModelInstance, t: f64) -> &LinearOp {
    debug_assert!(t >= 0.0);
    &model.h_total
}

/// Photon-number cutoff: 20 below five two-level systems, `4N` from five on.
pub fn default_fock_cutoff(n_tls: usize) -> usize {
    if n_tls < 5 {
        20
    } else {
        4 * n_tls
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_cutoff_rule() {
        assert_eq!(default_fock_cutoff(1), 20);
        assert_eq!(default_fock_cutoff(4), 20);
        assert_eq!(default_fock_cutoff(5), 20);
        assert_eq!(default_fock_cutoff(6), 24);
        assert_eq!(default_fock_cutoff(10), 40);
    }

    #[test]
    fn schedule_is_constant() {
        let m = build_spin_spin(&SpinSpinConfig::weak(0.1)).unwrap();
        for t in [0.0, 0.3, 10.0, 1e4] {
            assert_eq!(charging_schedule(&m, t), &m.h_total);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn spin_spin_is_hermitian_and_starts_empty(
            omega in 0.1f64..3.0, g_b in 0.0f64..3.0, g_c in 0.0f64..3.0, gamma in 0.0f64..2.0, n_ph in 1usize..8,
        ) {
            let m = build_spin_spin(&SpinSpinConfig { omega, g_b, g_c, gamma, n_ph }).unwrap();
            check_model(&m)?;
        }

        #[test]
        fn dicke_is_hermitian_and_starts_empty(
            omega in 0.1f64..3.0, lambda_bar in 0.0f64..3.0, kappa in 0.0f64..2.0, n in 1usize..6, extra in 0usize..6,
        ) {
            let m = build_dicke(&DickeConfig { omega, lambda_bar, kappa, n_tls: n, n_ph: n + extra }).unwrap();
            check_model(&m)?;
        }
    }

    fn check_model(m: &ModelInstance) -> std::result::Result<(), proptest::test_runner::TestCaseError> {
        use crate::hilbert::{expectation, hermiticity_error, partial_trace, purity};
        proptest::prop_assert!(hermiticity_error(charging_schedule(m, 1.0).matrix()) < 1e-12);
        proptest::prop_assert!(hermiticity_error(m.h_battery.matrix()) < 1e-12);
        let rb = partial_trace(&m.initial_state, &m.battery).unwrap();
        proptest::prop_assert!(expectation(&m.h_battery, &rb).unwrap().norm() < 1e-12);
        proptest::prop_assert!((purity(&rb) - 1.0).abs() < 1e-12);
        Ok(())
    }
}
