//! Work-extraction figures of merit.
//!
//! Passive-state energies are computed spectrally: populations of `ρ` sorted
//! in descending order are paired with battery energy levels (expanded by
//! multiplicity) sorted in ascending order. Any ordering among degenerate
//! populations gives the same sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{expectation, hermitian_eigenvalues, DensityOp, LinearOp};

/// Round-off allowance for energies and ergotropies.
pub const ROUNDOFF: f64 = 1e-10;
/// Below this `E − ε` the daemonic efficiency is reported as degenerate.
pub const EFFICIENCY_DENOMINATOR_FLOOR: f64 = 1e-12;
/// Below this `ε₀` the enhancement ratio is undefined.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSpace {
    /// Every physical battery level, with its degeneracy.
    #[default]
    Full,
    /// Only the levels reachable within the simulated subspace.
    Symmetric,
}

/// Battery energy levels (ascending, lowest = 0) with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpectrum {
    levels: Vec<(f64, usize)>,
    space: SpectrumSpace,
}

impl BatterySpectrum {
    pub fn new(levels: Vec<(f64, usize)>, space: SpectrumSpace) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("spectrum", "no levels"));
        }
        if levels[0].0.abs() > ROUNDOFF {
            return Err(Error::config("spectrum", "lowest level must be 0"));
        }
        if levels.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::config("spectrum", "levels must be strictly ascending"));
        }
        if levels.iter().any(|&(_, m)| m == 0) {
            return Err(Error::config("spectrum", "multiplicities must be >= 1"));
        }
        Ok(Self { levels, space })
    }

    /// Single qubit `{0, ω}`.
    pub fn two_level(omega: f64) -> Self {
        Self {
            levels: vec![(0.0, 1), (omega, 1)],
            space: SpectrumSpace::Full,
        }
    }

    /// `N` independent qubits: levels `kω` with multiplicity `C(N, k)`.
    pub fn binomial(n: usize, omega: f64) -> Self {
        let mut levels = Vec::with_capacity(n + 1);
        let mut c = 1usize;
        for k in 0..=n {
            levels.push((k as f64 * omega, c));
            c = c * (n - k) / (k + 1);
        }
        Self {
            levels,
            space: SpectrumSpace::Full,
        }
    }

    /// Symmetric ladder of `N` qubits: levels `kω`, each non-degenerate.
    pub fn symmetric_ladder(n: usize, omega: f64) -> Self {
        Self {
            levels: (0..=n).map(|k| (k as f64 * omega, 1)).collect(),
            space: SpectrumSpace::Symmetric,
        }
    }

    pub fn levels(&self) -> &[(f64, usize)] {
        &self.levels
    }

    pub fn space(&self) -> SpectrumSpace {
        self.space
    }

    /// Total number of states counted with multiplicity.
    pub fn len(&self) -> usize {
        self.levels.iter().map(|&(_, m)| m).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Shifted copy, for invariance checks.
    pub fn shifted(&self, by: f64) -> Vec<(f64, usize)> {
        self.levels.iter().map(|&(e, m)| (e + by, m)).collect()
    }

    /// The lowest `count` energies with multiplicity, ascending.
    fn lowest(&self, count: usize) -> impl Iterator<Item = f64> + '_ {
        self.levels
            .iter()
            .flat_map(|&(e, m)| std::iter::repeat(e).take(m))
            .take(count)
    }
}

/// `Tr[H_B ρ_B]` with a ground-shifted `H_B`.
pub fn battery_energy(rho: &DensityOp, h_battery: &LinearOp) -> Result<f64> {
    let e = expectation(h_battery, rho)?.re;
    if e < -ROUNDOFF {
        return Err(Error::InvalidState(format!("negative battery energy {e:e}")));
    }
    Ok(e.max(0.0))
}

/// Energy of the passive state with populations `eigenvalues`.
pub fn passive_energy(eigenvalues: &[f64], spectrum: &BatterySpectrum) -> Result<f64> {
    let mut pops = eigenvalues.to_vec();
    pops.sort_by(|a, b| b.total_cmp(a));
    let available = spectrum.len();
    let rank = pops.iter().filter(|&&p| p > ROUNDOFF).count();
    if rank > available {
        return Err(Error::SpectrumTooShort {
            levels: available,
            rank,
        });
    }
    Ok(pops
        .iter()
        .zip(spectrum.lowest(pops.len()))
        .map(|(p, e)| p * e)
        .sum())
}

/// Ergotropy from an energy and the populations of `ρ`.
fn ergotropy_from_parts(energy: f64, eigenvalues: &[f64], spectrum: &BatterySpectrum) -> Result<f64> {
    let erg = energy - passive_energy(eigenvalues, spectrum)?;
    if erg < -ROUNDOFF {
        return Err(Error::NegativeErgotropy(erg));
    }
    Ok(erg.max(0.0))
}

/// Maximum work extractable by a unitary: `E(ρ) − E(passive(ρ))`.
///
/// `h_battery` defines the energy of `ρ` in its own basis; `spectrum` lists
/// the physical levels a passive state may occupy.
pub fn ergotropy(rho: &DensityOp, h_battery: &LinearOp, spectrum: &BatterySpectrum) -> Result<f64> {
    let e = battery_energy(rho, h_battery)?;
    ergotropy_from_parts(e, &rho.eigenvalues(), spectrum)
}

/// Energy and ergotropy together (one expectation, one eigensolve).
pub fn energy_and_ergotropy(
    rho: &DensityOp,
    h_battery: &LinearOp,
    spectrum: &BatterySpectrum,
) -> Result<(f64, f64)> {
    let e = battery_energy(rho, h_battery)?;
    let erg = ergotropy_from_parts(e, &hermitian_eigenvalues(rho.matrix()), spectrum)?;
    Ok((e, erg))
}

/// `P(τ) = E(τ)/τ`, with `P(0) = 0`.
pub fn charging_power(energy: &[f64], times: &[f64]) -> Vec<f64> {
    energy
        .iter()
        .zip(times)
        .map(|(&e, &t)| if t > 0.0 { e / t } else { 0.0 })
        .collect()
}

/// Sample mean and unbiased standard deviation (0 for a single sample).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Ensemble statistics of the conditional ergotropy at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaemonicStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl DaemonicStats {
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let (mean, std) = mean_std(values);
        Ok(Self {
            mean,
            std,
            n: values.len(),
        })
    }

    /// Monte Carlo tolerance `3·std/√n`.
    pub fn mc_tol(&self) -> f64 {
        3.0 * self.std / (self.n as f64).sqrt()
    }
}

/// Daemonic ergotropy per sampled time: the mean conditional ergotropy.
///
/// `conditional[t]` holds one battery state per trajectory at time index `t`.
pub fn daemonic_ergotropy(
    conditional: &[Vec<DensityOp>],
    h_battery: &LinearOp,
    spectrum: &BatterySpectrum,
) -> Result<Vec<DaemonicStats>> {
    conditional
        .iter()
        .map(|states| {
            let ergs = states
                .iter()
                .map(|rho| ergotropy(rho, h_battery, spectrum))
                .collect::<Result<Vec<_>>>()?;
            DaemonicStats::from_samples(&ergs)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub value: f64,
    /// `E − ε` below the floor; `value` is then 0 by convention.
    pub degenerate: bool,
}

/// `η = (Ē − ε)/(E − ε)`.
pub fn daemonic_efficiency(daemonic: f64, ergotropy: f64, energy: f64) -> Efficiency {
    let denom = energy - ergotropy;
    if denom < EFFICIENCY_DENOMINATOR_FLOOR {
        Efficiency {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Efficiency {
            value: (daemonic - ergotropy) / denom,
            degenerate: false,
        }
    }
}

/// `Ē/ε₀` pointwise; `None` where `ε₀` is below the floor.
pub fn enhancement_ratio(daemonic: &[f64], closed_ergotropy: &[f64]) -> Vec<Option<f64>> {
    daemonic
        .iter()
        .zip(closed_ergotropy)
        .map(|(&d, &e0)| ratio(d, e0))
        .collect()
}

pub fn ratio(daemonic: f64, closed_ergotropy: f64) -> Option<f64> {
    if closed_ergotropy < RATIO_DENOMINATOR_FLOOR {
        None
    } else {
        Some(daemonic / closed_ergotropy)
    }
}

/// Per-time daemonic quantities paired with the unconditional run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DaemonicMetrics {
    pub daemonic_ergotropy: f64,
    pub std: f64,
    pub n: usize,
    pub unconditional_ergotropy: f64,
    pub unconditional_energy: f64,
    pub efficiency: Efficiency,
    pub enhancement_ratio: Option<f64>,
}

impl DaemonicMetrics {
    pub fn new(
        stats: DaemonicStats,
        unconditional_energy: f64,
        unconditional_ergotropy: f64,
        closed_ergotropy: f64,
    ) -> Self {
        Self {
            daemonic_ergotropy: stats.mean,
            std: stats.std,
            n: stats.n,
            unconditional_ergotropy,
            unconditional_energy,
            efficiency: daemonic_efficiency(stats.mean, unconditional_ergotropy, unconditional_energy),
            enhancement_ratio: ratio(stats.mean, closed_ergotropy),
        }
    }

    pub fn mc_tol(&self) -> f64 {
        3.0 * self.std / (self.n as f64).sqrt()
    }

    /// `ε − tol ≤ Ē ≤ E + tol` with `tol = 3·std/√n` plus round-off.
    pub fn satisfies_bounds(&self) -> bool {
        let tol = self.mc_tol() + ROUNDOFF;
        self.daemonic_ergotropy >= self.unconditional_ergotropy - tol
            && self.daemonic_ergotropy <= self.unconditional_energy + tol
    }

    /// Tolerance on `η` propagated from the Monte Carlo tolerance on `Ē`.
    pub fn efficiency_tol(&self) -> f64 {
        let denom = self.unconditional_energy - self.unconditional_ergotropy;
        if denom < EFFICIENCY_DENOMINATOR_FLOOR {
            0.0
        } else {
            (self.mc_tol() + ROUNDOFF) / denom
        }
    }

    pub fn efficiency_in_range(&self) -> bool {
        let tol = self.efficiency_tol();
        let eta = self.efficiency.value;
        eta >= -tol && eta <= 1.0 + tol
    }
}

/// Unconditional figures of merit per sampled time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkMetrics {
    pub energy: Vec<f64>,
    pub ergotropy: Vec<f64>,
    pub power: Vec<f64>,
    pub purity: Vec<f64>,
}

impl WorkMetrics {
    pub fn from_states(
        times: &[f64],
        battery_states: &[DensityOp],
        h_battery: &LinearOp,
        spectrum: &BatterySpectrum,
    ) -> Result<Self> {
        let mut energy = Vec::with_capacity(times.len());
        let mut ergotropy = Vec::with_capacity(times.len());
        let mut purity = Vec::with_capacity(times.len());
        for rho in battery_states {
            let (e, erg) = energy_and_ergotropy(rho, h_battery, spectrum)?;
            energy.push(e);
            ergotropy.push(erg);
            purity.push(crate::hilbert::purity(rho));
        }
        let power = charging_power(&energy, times);
        Ok(Self {
            energy,
            ergotropy,
            power,
            purity,
        })
    }
}

/// Index of the first maximum of a series.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= v => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{c64, vector, CMatrix, CVector, PureState, SpaceLayout};
    use proptest::prelude::*;

    fn qubit_h(w: f64) -> LinearOp {
        LinearOp::local(CMatrix::from_diagonal(&vector(&[c64(0.0, 0.0), c64(w, 0.0)])))
    }

    fn diag_rho(p: &[f64]) -> DensityOp {
        let l = SpaceLayout::new(&[p.len()]).unwrap();
        let v: Vec<_> = p.iter().map(|&x| c64(x, 0.0)).collect();
        DensityOp::new(CMatrix::from_diagonal(&vector(&v)), l).unwrap()
    }

    fn random_density(dim: usize, seed: &[f64]) -> DensityOp {
        // A A† / Tr from a deterministic pseudo-random A
        let a = CMatrix::from_fn(dim, dim, |i, j| {
            let k = (i * dim + j) % seed.len();
            c64(seed[k] * (1.0 + i as f64).sin(), seed[(k + 1) % seed.len()] * (j as f64 + 0.5).cos())
        });
        let m = &a * a.adjoint();
        let tr = crate::hilbert::trace(&m).re;
        DensityOp::new(m / c64(tr, 0.0), SpaceLayout::new(&[dim]).unwrap()).unwrap()
    }

    #[test]
    fn energy_examples() {
        let l = SpaceLayout::new(&[2]).unwrap();
        let ground = DensityOp::from_pure(&PureState::basis(&l, &[0]).unwrap());
        assert_eq!(battery_energy(&ground, &qubit_h(1.0)).unwrap(), 0.0);
        assert!((battery_energy(&diag_rho(&[0.5, 0.5]), &qubit_h(1.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn passive_state_has_zero_ergotropy() {
        let spec = BatterySpectrum::new(vec![(0.0, 1), (1.0, 1), (2.5, 1)], SpectrumSpace::Full).unwrap();
        let h = LinearOp::local(CMatrix::from_diagonal(&vector(&[
            c64(0.0, 0.0),
            c64(1.0, 0.0),
            c64(2.5, 0.0),
        ])));
        let rho = diag_rho(&[0.6, 0.3, 0.1]);
        assert_eq!(ergotropy(&rho, &h, &spec).unwrap(), 0.0);
        // population inversion is fully active
        let inverted = diag_rho(&[0.1, 0.3, 0.6]);
        let erg = ergotropy(&inverted, &h, &spec).unwrap();
        let e = 0.3 + 1.5;
        let passive = 0.3 + 0.25;
        assert!((erg - (e - passive)).abs() < 1e-14);
    }

    #[test]
    fn plus_state_ergotropy_is_half() {
        let l = SpaceLayout::new(&[2]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(CVector::from_element(2, c64(s, 0.0)), l).unwrap();
        let rho = DensityOp::from_pure(&plus);
        let spec = BatterySpectrum::two_level(1.0);
        // eigenvalues {1, 0}: passive = |0><0|, energy 0
        assert!((ergotropy(&rho, &qubit_h(1.0), &spec).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_populations_need_no_tie_break() {
        let spec = BatterySpectrum::binomial(2, 1.0); // 0, 1, 1, 2
        let h = LinearOp::local(CMatrix::from_diagonal(&vector(&[
            c64(0.0, 0.0),
            c64(1.0, 0.0),
            c64(1.0, 0.0),
            c64(2.0, 0.0),
        ])));
        for p in [[0.25; 4], [0.1, 0.3, 0.3, 0.3], [0.4, 0.2, 0.2, 0.2]] {
            let rho = diag_rho(&p);
            let mut sorted = p.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let oracle = battery_energy(&rho, &h).unwrap()
                - (sorted[1] + sorted[2] + 2.0 * sorted[3]);
            assert!((ergotropy(&rho, &h, &spec).unwrap() - oracle.max(0.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn short_spectrum_is_an_error() {
        let spec = BatterySpectrum::two_level(1.0);
        let h = LinearOp::local(CMatrix::identity(3, 3));
        let rho = diag_rho(&[0.5, 0.3, 0.2]);
        assert!(matches!(
            ergotropy(&rho, &h, &spec),
            Err(Error::SpectrumTooShort { levels: 2, rank: 3 })
        ));
        // rank-deficient states fit
        let rho = diag_rho(&[0.5, 0.5, 0.0]);
        assert!(ergotropy(&rho, &h, &spec).is_ok());
    }

    #[test]
    fn binomial_spectrum() {
        let s = BatterySpectrum::binomial(6, 1.0);
        let m: Vec<usize> = s.levels().iter().map(|l| l.1).collect();
        assert_eq!(m, vec![1, 6, 15, 20, 15, 6, 1]);
        assert_eq!(s.len(), 64);
        assert_eq!(BatterySpectrum::symmetric_ladder(6, 1.0).len(), 7);
    }

    #[test]
    fn daemonic_examples() {
        let h = qubit_h(1.0);
        let spec = BatterySpectrum::two_level(1.0);
        let mixed = diag_rho(&[0.5, 0.5]);
        assert_eq!(ergotropy(&mixed, &h, &spec).unwrap(), 0.0);
        // measurement learns nothing
        let same = vec![vec![mixed.clone(), mixed.clone(), mixed.clone()]];
        let st = daemonic_ergotropy(&same, &h, &spec).unwrap();
        assert_eq!(st[0].mean, 0.0);
        assert_eq!(st[0].std, 0.0);
        // pure up/down ensemble: unconditional I/2 has none, daemonic = 1/2
        let ens = vec![vec![diag_rho(&[0.0, 1.0]), diag_rho(&[1.0, 0.0])]];
        let st = daemonic_ergotropy(&ens, &h, &spec).unwrap();
        assert!((st[0].mean - 0.5).abs() < 1e-15);
        assert!(matches!(
            daemonic_ergotropy(&[vec![]], &h, &spec),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(daemonic_efficiency(0.3, 0.3, 0.9).value, 0.0);
        assert_eq!(daemonic_efficiency(0.9, 0.3, 0.9).value, 1.0);
        assert!((daemonic_efficiency(0.6, 0.3, 0.9).value - 0.5).abs() < 1e-15);
        let d = daemonic_efficiency(0.5, 0.5, 0.5);
        assert!(d.degenerate);
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn power_examples() {
        let t = [0.0, 1.0, 2.0, 4.0];
        assert_eq!(charging_power(&[3.0; 4], &t), vec![0.0, 3.0, 1.5, 0.75]);
        let lin: Vec<f64> = t.iter().map(|x| 0.7 * x).collect();
        for p in &charging_power(&lin, &t)[1..] {
            assert!((p - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(enhancement_ratio(&[0.4, 0.2], &[0.4, 0.0]), vec![Some(1.0), None]);
    }

    #[test]
    fn argmax_first_maximum() {
        assert_eq!(argmax(&[1.0, 3.0, 2.0, 3.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    proptest! {
        #[test]
        fn ergotropy_between_zero_and_energy(seed in prop::collection::vec(-1.0f64..1.0, 7), dim in 2usize..6) {
            let rho = random_density(dim, &seed);
            let levels: Vec<(f64, usize)> = (0..dim).map(|k| (k as f64 * 0.7 + (k * k) as f64 * 0.1, 1)).collect();
            let spec = BatterySpectrum::new(levels.clone(), SpectrumSpace::Full).unwrap();
            let h = LinearOp::local(CMatrix::from_diagonal(&CVector::from_iterator(dim, levels.iter().map(|l| c64(l.0, 0.0)))));
            let e = battery_energy(&rho, &h).unwrap();
            let erg = ergotropy(&rho, &h, &spec).unwrap();
            prop_assert!(erg >= 0.0);
            prop_assert!(erg <= e + 1e-12);

            // shift invariance
            let shift = 2.3;
            let shifted = levels.iter().map(|l| (l.0 + shift, l.1)).collect::<Vec<_>>();
            let h_shift = LinearOp::local(h.matrix() + CMatrix::identity(dim, dim) * c64(shift, 0.0));
            let e_s = expectation(&h_shift, &rho).unwrap().re;
            let passive_s: f64 = {
                let mut p = rho.eigenvalues();
                p.sort_by(|a, b| b.total_cmp(a));
                p.iter().zip(shifted.iter()).map(|(p, l)| p * l.0).sum()
            };
            prop_assert!(((e_s - passive_s) - erg).abs() < 1e-10);
        }

        #[test]
        fn pure_state_ergotropy_is_energy(re in prop::collection::vec(-1.0f64..1.0, 4), im in prop::collection::vec(-1.0f64..1.0, 4)) {
            let v = CVector::from_fn(4, |i, _| c64(re[i], im[i]));
            prop_assume!(v.norm() > 1e-3);
            let psi = PureState::normalized(v, SpaceLayout::new(&[4]).unwrap()).unwrap();
            let rho = DensityOp::from_pure(&psi);
            let spec = BatterySpectrum::binomial(2, 1.0);
            let h = LinearOp::local(CMatrix::from_diagonal(&vector(&[c64(0.0,0.0), c64(1.0,0.0), c64(1.0,0.0), c64(2.0,0.0)])));
            let e = battery_energy(&rho, &h).unwrap();
            prop_assert!((ergotropy(&rho, &h, &spec).unwrap() - e).abs() < 1e-10);
        }
    }
}
