use serde::{Deserialize, Serialize};

use super::{ModelInstance, ModelLabel};
use crate::error::{Error, Result};
use crate::hilbert::ops::{annihilation, number, pauli_x, pauli_z};
use crate::hilbert::{c64, embed, CMatrix, LinearOp, PureState, SpaceLayout};
use crate::thermo::BatterySpectrum;

/// Cavity-mediated spin–spin battery, resonant at `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinSpinConfig {
    pub omega: f64,
    pub g_b: f64,
    pub g_c: f64,
    pub gamma: f64,
    #[serde(default = "default_cutoff")]
    pub n_ph: usize,
}

fn default_cutoff() -> usize {
    20
}

impl SpinSpinConfig {
    /// Weak coupling, `ḡ_B = ω/10`, `ḡ_C = ω/5`.
    pub fn weak(gamma: f64) -> Self {
        Self {
            omega: 1.0,
            g_b: 0.1,
            g_c: 0.2,
            gamma,
            n_ph: default_cutoff(),
        }
    }

    /// Strong coupling, `ḡ_B = ω`, `ḡ_C = 2ω`.
    pub fn strong(gamma: f64) -> Self {
        Self {
            omega: 1.0,
            g_b: 1.0,
            g_c: 2.0,
            gamma,
            n_ph: default_cutoff(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::config("omega", "must be > 0"));
        }
        if !(self.g_b >= 0.0) {
            return Err(Error::config("g_b", "must be >= 0"));
        }
        if !(self.g_c >= 0.0) {
            return Err(Error::config("g_c", "must be >= 0"));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::config("gamma", "must be >= 0"));
        }
        if self.n_ph < 1 {
            return Err(Error::config("n_ph", "must be >= 1"));
        }
        Ok(())
    }
}

/// Layout `(Battery, Charger, Cavity)`; initial state `|↓⟩_B |↑⟩_C |0⟩_A`.
pub fn build_spin_spin(cfg: &SpinSpinConfig) -> Result<ModelInstance> {
    cfg.validate()?;
    let nf = cfg.n_ph + 1;
    let layout = SpaceLayout::labelled(&[2, 2, nf], &["battery", "charger", "cavity"], Some(2))?;
    let w = cfg.omega;

    let sz = LinearOp::local(pauli_z());
    let sx = LinearOp::local(pauli_x());
    let a = LinearOp::local(annihilation(nf));
    let n = LinearOp::local(number(nf));

    let sz_b = embed(&sz, 0, &layout)?;
    let sz_c = embed(&sz, 1, &layout)?;
    let sx_b = embed(&sx, 0, &layout)?;
    let sx_c = embed(&sx, 1, &layout)?;
    let a_full = embed(&a, 2, &layout)?;
    let n_full = embed(&n, 2, &layout)?;
    let quad = a_full.matrix() + a_full.matrix().adjoint();

    let h = (sz_b.matrix() + sz_c.matrix()) * c64(0.5 * w, 0.0)
        + n_full.matrix() * c64(w, 0.0)
        + (sx_b.matrix() * c64(cfg.g_b, 0.0) + sx_c.matrix() * c64(cfg.g_c, 0.0)) * &quad;
    let h_total = LinearOp::hermitian(h, layout.clone())?;

    let battery_layout = layout.sublayout(&[0])?;
    let h_b = (pauli_z() + CMatrix::identity(2, 2)) * c64(0.5 * w, 0.0);
    let h_battery = LinearOp::hermitian(h_b, battery_layout)?;

    let jump_op = LinearOp::new(a_full.matrix() * c64(cfg.gamma.sqrt(), 0.0), layout.clone())?;
    let initial_state = PureState::basis(&layout, &[0, 1, 0])?;

    Ok(ModelInstance {
        label: ModelLabel::SpinSpin,
        layout,
        h_total,
        h_battery,
        h_battery_spectrum: BatterySpectrum::two_level(w),
        jump_op,
        initial_state,
        battery: vec![0],
        rate_scale: w.max(cfg.g_b).max(cfg.g_c).max(cfg.gamma),
    })
}
