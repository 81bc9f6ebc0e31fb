use serde::{Deserialize, Serialize};

use super::{default_fock_cutoff, ModelInstance, ModelLabel};
use crate::error::{Error, Result};
use crate::hilbert::ops::{annihilation, ladder_x, ladder_z, number, pauli_x, pauli_z};
use crate::hilbert::{c64, embed, CMatrix, LinearOp, PureState, SpaceLayout};
use crate::thermo::BatterySpectrum;

/// Dicke battery: `N` two-level systems collectively coupled to one lossy
/// cavity mode, resonant at `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeConfig {
    pub omega: f64,
    /// Coupling in the same energy units as `omega`.
    pub lambda_bar: f64,
    pub kappa: f64,
    pub n_tls: usize,
    pub n_ph: usize,
}

impl DickeConfig {
    /// Config with the default photon cutoff for `n_tls`.
    pub fn new(omega: f64, lambda_bar: f64, kappa: f64, n_tls: usize) -> Self {
        Self {
            omega,
            lambda_bar,
            kappa,
            n_tls,
            n_ph: default_fock_cutoff(n_tls.max(1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::config("omega", "must be > 0"));
        }
        if !(self.lambda_bar >= 0.0) {
            return Err(Error::config("lambda_bar", "must be >= 0"));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::config("kappa", "must be >= 0"));
        }
        if self.n_tls < 1 {
            return Err(Error::config("n_tls", "must be >= 1"));
        }
        if self.n_ph < self.n_tls {
            return Err(Error::config(
                "n_ph",
                format!(
                    "cutoff {} cannot hold the initial {}-photon Fock state",
                    self.n_ph, self.n_tls
                ),
            ));
        }
        Ok(())
    }

    fn rate_scale(&self) -> f64 {
        self.omega
            .max(self.lambda_bar)
            .max(2.0 * self.kappa)
    }
}

/// Dicke battery on the symmetric ladder `S = N/2`.
///
/// Layout `(Cavity, Spins)` with dimensions `(n_ph + 1, N + 1)`; initial state
/// `|N⟩ ⊗ |m = −N/2⟩`; jump operator `√(2κ) a`. The collective Hamiltonian and
/// a cavity-only jump operator never leave the symmetric sector.
pub fn build_dicke(cfg: &DickeConfig) -> Result<ModelInstance> {
    cfg.validate()?;
    let n = cfg.n_tls;
    let nf = cfg.n_ph + 1;
    let layout = SpaceLayout::labelled(&[nf, n + 1], &["cavity", "spins"], Some(0))?;
    let w = cfg.omega;

    let a = embed(&LinearOp::local(annihilation(nf)), 0, &layout)?;
    let num = embed(&LinearOp::local(number(nf)), 0, &layout)?;
    let sz = embed(&LinearOp::local(ladder_z(n)), 1, &layout)?;
    let sx = embed(&LinearOp::local(ladder_x(n)), 1, &layout)?;
    let quad = a.matrix() + a.matrix().adjoint();

    let h = num.matrix() * c64(w, 0.0)
        + sz.matrix() * c64(w, 0.0)
        + sx.matrix() * &quad * c64(2.0 * cfg.lambda_bar, 0.0);
    let h_total = LinearOp::hermitian(h, layout.clone())?;

    let battery_layout = layout.sublayout(&[1])?;
    let h_b = (ladder_z(n) + CMatrix::identity(n + 1, n + 1) * c64(n as f64 / 2.0, 0.0))
        * c64(w, 0.0);
    let h_battery = LinearOp::hermitian(h_b, battery_layout)?;

    let jump_op = LinearOp::new(a.matrix() * c64((2.0 * cfg.kappa).sqrt(), 0.0), layout.clone())?;
    let initial_state = PureState::basis(&layout, &[n, 0])?;

    Ok(ModelInstance {
        label: ModelLabel::Dicke,
        layout,
        h_total,
        h_battery,
        h_battery_spectrum: BatterySpectrum::binomial(n, w),
        jump_op,
        initial_state,
        battery: vec![1],
        rate_scale: cfg.rate_scale(),
    })
}

/// Dicke battery on the full `2^N` spin space, layout `(Cavity, spin_1, …,
/// spin_N)`. Only practical for small `N`; used to cross-check the ladder
/// reduction.
pub fn build_dicke_full_space(cfg: &DickeConfig) -> Result<ModelInstance> {
    cfg.validate()?;
    let n = cfg.n_tls;
    if n > 10 {
        return Err(Error::config("n_tls", "full-space Dicke limited to N <= 10"));
    }
    let nf = cfg.n_ph + 1;
    let mut dims = vec![nf];
    dims.extend(std::iter::repeat(2).take(n));
    let names: Vec<String> = (1..=n).map(|i| format!("spin{i}")).collect();
    let mut labels: Vec<&str> = vec!["cavity"];
    labels.extend(names.iter().map(String::as_str));
    let layout = SpaceLayout::labelled(&dims, &labels, Some(0))?;
    let w = cfg.omega;
    let d = layout.total_dim();

    let a = embed(&LinearOp::local(annihilation(nf)), 0, &layout)?;
    let num = embed(&LinearOp::local(number(nf)), 0, &layout)?;
    let mut sz = CMatrix::zeros(d, d);
    let mut sx = CMatrix::zeros(d, d);
    for i in 1..=n {
        sz += embed(&LinearOp::local(pauli_z()), i, &layout)?.matrix() * c64(0.5, 0.0);
        sx += embed(&LinearOp::local(pauli_x()), i, &layout)?.matrix() * c64(0.5, 0.0);
    }
    let quad = a.matrix() + a.matrix().adjoint();
    let h = num.matrix() * c64(w, 0.0)
        + &sz * c64(w, 0.0)
        + &sx * &quad * c64(2.0 * cfg.lambda_bar, 0.0);
    let h_total = LinearOp::hermitian(h, layout.clone())?;

    let battery: Vec<usize> = (1..=n).collect();
    let battery_layout = layout.sublayout(&battery)?;
    let db = battery_layout.total_dim();
    let mut h_b = CMatrix::zeros(db, db);
    for i in 0..n {
        let up = (pauli_z() + CMatrix::identity(2, 2)) * c64(0.5 * w, 0.0);
        h_b += embed(&LinearOp::local(up), i, &battery_layout)?.matrix();
    }
    let h_battery = LinearOp::hermitian(h_b, battery_layout)?;

    let jump_op = LinearOp::new(a.matrix() * c64((2.0 * cfg.kappa).sqrt(), 0.0), layout.clone())?;
    let mut digits = vec![0; n + 1];
    digits[0] = n;
    let initial_state = PureState::basis(&layout, &digits)?;

    Ok(ModelInstance {
        label: ModelLabel::DickeFullSpace,
        layout,
        h_total,
        h_battery,
        h_battery_spectrum: BatterySpectrum::binomial(n, w),
        jump_op,
        initial_state,
        battery,
        rate_scale: cfg.rate_scale(),
    })
}

/// Isometry `V` (`2^N × (N+1)`) mapping ladder state `|k⟩` to the normalized
/// symmetric superposition of all bit strings with `k` excitations.
pub fn symmetric_embedding(n_spins: usize) -> CMatrix {
    let full = 1usize << n_spins;
    let mut v = CMatrix::zeros(full, n_spins + 1);
    let mut counts = vec![0usize; n_spins + 1];
    for x in 0..full {
        counts[x.count_ones() as usize] += 1;
    }
    for x in 0..full {
        let k = x.count_ones() as usize;
        v[(x, k)] = c64(1.0 / (counts[k] as f64).sqrt(), 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{expectation, partial_trace, purity, DensityOp};

    #[test]
    fn single_spin_is_rabi_model() {
        let m = build_dicke(&DickeConfig::new(1.0, 0.7, 0.0, 1)).unwrap();
        let f = build_dicke_full_space(&DickeConfig::new(1.0, 0.7, 0.0, 1)).unwrap();
        // N = 1: ladder and full space coincide
        assert!((m.h_total.matrix() - f.h_total.matrix()).norm() < 1e-13);
    }

    #[test]
    fn initial_state_and_battery() {
        let m = build_dicke(&DickeConfig::new(1.0, 1.0, 0.3, 6)).unwrap();
        assert_eq!(m.layout.dims(), &[25, 7]);
        let rb = partial_trace(&m.initial_state, &m.battery).unwrap();
        assert!(expectation(&m.h_battery, &rb).unwrap().norm() < 1e-15);
        assert!((purity(&rb) - 1.0).abs() < 1e-15);
        let photons = expectation(
            &embed(&LinearOp::local(number(25)), 0, &m.layout).unwrap(),
            &m.initial_state,
        )
        .unwrap();
        assert!((photons.re - 6.0).abs() < 1e-14);
    }

    #[test]
    fn fully_charged_ladder_energy() {
        let m = build_dicke(&DickeConfig::new(1.0, 1.0, 0.0, 4)).unwrap();
        let top = PureState::basis(m.h_battery.layout(), &[4]).unwrap();
        let e = expectation(&m.h_battery, &DensityOp::from_pure(&top)).unwrap();
        assert!((e.re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn cutoff_must_hold_initial_state() {
        let mut cfg = DickeConfig::new(1.0, 1.0, 0.0, 6);
        cfg.n_ph = 5;
        assert!(matches!(build_dicke(&cfg), Err(Error::Config { .. })));
    }

    #[test]
    fn ladder_hamiltonian_is_compressed_full_hamiltonian() {
        for n in [2, 3] {
            let mut cfg = DickeConfig::new(1.0, 0.8, 0.0, n);
            cfg.n_ph = 4;
            let lad = build_dicke(&cfg).unwrap();
            let full = build_dicke_full_space(&cfg).unwrap();
            let v = CMatrix::identity(5, 5).kronecker(&symmetric_embedding(n));
            let compressed = v.adjoint() * full.h_total.matrix() * &v;
            assert!((compressed - lad.h_total.matrix()).norm() < 1e-12);
            // the symmetric sector is invariant: (1 - VV†) H V = 0
            let leak = full.h_total.matrix() * &v - &v * v.adjoint() * full.h_total.matrix() * &v;
            assert!(leak.norm() < 1e-12);
            let bv = symmetric_embedding(n);
            let hb = bv.adjoint() * full.h_battery.matrix() * &bv;
            assert!((hb - lad.h_battery.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_embedding_is_isometry() {
        for n in 1..=5 {
            let v = symmetric_embedding(n);
            assert!((v.adjoint() * &v - CMatrix::identity(n + 1, n + 1)).norm() < 1e-13);
        }
    }
}
