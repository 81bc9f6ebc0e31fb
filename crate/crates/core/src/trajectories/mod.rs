//! Conditional dynamics under continuous measurement of the cavity output.
//!
//! Photodetection uses the waiting-time algorithm: the unnormalized state
//! evolves under `G = −iH − c†c/2` until its squared norm falls to a uniform
//! threshold, at which point `c` is applied. Homodyne detection steps the
//! diffusive equation with the drift held at the start-of-step expectation
//! value, adds the Itô noise term and renormalizes.

mod ensemble;
mod propagator;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use ensemble::{run_ensemble, EnsembleSummary, NoiseStats};

use crate::error::{Error, Result};
use crate::hilbert::{c64, CVector, DensityOp, PartialTrace, PureState, C64};
use crate::lindblad::{top_fock_indices, IntegratorOptions};
use crate::models::ModelInstance;
pub(crate) use propagator::Propagator;
use propagator::{dotc, norm_sqr, scale};

/// Bisection iterations used to localize a jump inside one step.
const BISECTION_ITERS: usize = 40;
/// Largest tolerated one-step norm deviation in homodyne stepping.
pub const MAX_HD_NORM_DEVIATION: f64 = 0.1;
/// Homodyne steps are capped at `HD_VARIANCE_STEP / Var(c)`, which keeps
/// the one-step norm error `≈ h·Var(c)·(z² − 1)` small. The cap depends only
/// on the current state, so it does not bias the noise.
pub const HD_VARIANCE_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnravelingKind {
    Photodetection,
    /// Homodyne detection with local-oscillator phase `theta ∈ [0, 2π)`.
    Homodyne { theta: f64 },
}

impl UnravelingKind {
    pub fn homodyne(theta: f64) -> Result<Self> {
        let k = Self::Homodyne { theta };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Homodyne { theta } if !(0.0..TAU).contains(&theta) => {
                Err(Error::config("theta", format!("{theta} not in [0, 2π)")))
            }
            _ => Ok(()),
        }
    }
}

/// Measurement outcomes of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementRecord {
    Jumps { times: Vec<f64> },
    /// Per integration step: step size, photocurrent increment `dy` and the
    /// Wiener increment `dw` contained in it. `boundaries[k]` is the number of
    /// steps taken before sampling time `k`.
    Photocurrent {
        dt: Vec<f64>,
        dy: Vec<f64>,
        dw: Vec<f64>,
        boundaries: Vec<usize>,
    },
}

impl MeasurementRecord {
    pub fn jump_count(&self) -> usize {
        match self {
            Self::Jumps { times } => times.len(),
            Self::Photocurrent { .. } => 0,
        }
    }
}

/// One conditional evolution.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub master_seed: u64,
    /// RNG stream, equal to the trajectory index within an ensemble.
    pub stream: u64,
    pub times: Vec<f64>,
    pub conditional_battery_states: Vec<DensityOp>,
    /// Normalized global states at the sampling times (empty unless
    /// `opts.keep_states`).
    pub states: Vec<PureState>,
    pub record: MeasurementRecord,
    /// Largest deviation of the conditional norm from 1: after normalization
    /// at sampling times (photodetection), before renormalization per step
    /// (homodyne).
    pub norms_check: f64,
    pub max_top_fock_population: f64,
}

/// Per-trajectory RNG: ChaCha8 keyed by the master seed, stream = index.
pub fn trajectory_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Builds the sampled part of a record.
struct Sampler<'a> {
    model: &'a ModelInstance,
    opts: &'a IntegratorOptions,
    tracer: PartialTrace,
    top: Vec<usize>,
    battery: Vec<DensityOp>,
    states: Vec<PureState>,
    max_top: f64,
    max_norm_dev: f64,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a ModelInstance, opts: &'a IntegratorOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self {
            model,
            opts,
            tracer: PartialTrace::new(&model.layout, &model.battery)?,
            top: top_fock_indices(model),
            battery: Vec::with_capacity(opts.sampling_times.len()),
            states: Vec::new(),
            max_top: 0.0,
            max_norm_dev: 0.0,
        })
    }

    fn sample(&mut self, psi: &[C64], time: f64) -> Result<()> {
        let n2 = norm_sqr(psi);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidState(format!("conditional state vanished at t = {time}")));
        }
        let mut v = CVector::from_column_slice(psi);
        v.unscale_mut(n2.sqrt());
        self.max_norm_dev = self.max_norm_dev.max((v.norm() - 1.0).abs());
        let pop: f64 = self.top.iter().map(|&g| v[g].norm_sqr()).sum();
        self.max_top = self.max_top.max(pop);
        self.battery.push(DensityOp::from_raw(
            self.tracer.apply_vector(&v),
            self.tracer.reduced_layout().clone(),
        ));
        if self.opts.keep_states {
            self.states.push(PureState::from_raw(v, self.model.layout.clone()));
        }
        Ok(())
    }

    fn finish(self, master_seed: u64, stream: u64, record: MeasurementRecord, norm_dev: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            master_seed,
            stream,
            times: self.opts.sampling_times.clone(),
            conditional_battery_states: self.battery,
            states: self.states,
            record,
            norms_check: self.max_norm_dev.max(norm_dev),
            max_top_fock_population: self.max_top,
        }
    }
}

/// Uniform threshold in `(0, 1]`.
fn threshold(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Photodetection trajectory (waiting-time algorithm).
pub fn run_pd_trajectory(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    let mut sampler = Sampler::new(model, opts)?;
    let mut rng = trajectory_rng(master_seed, stream);
    let mut prop = Propagator::new(model);
    let zero = C64::default();
    let d = model.dim();

    let mut psi: Vec<C64> = model.initial_state.amplitudes().as_slice().to_vec();
    let mut trial = vec![zero; d];
    let mut jumped = vec![zero; d];
    let mut jumps = Vec::new();
    // closed models never jump
    let mut r = if prop.is_closed() { 0.0 } else { threshold(&mut rng) };

    sampler.sample(&psi, 0.0)?;
    let mut t = 0.0;
    for (idx, (steps, h)) in opts.intervals().into_iter().enumerate() {
        for _ in 0..steps {
            let mut remaining = h;
            loop {
                prop.rk4(&psi, &mut trial, remaining, zero, 0.0);
                if norm_sqr(&trial) > r {
                    std::mem::swap(&mut psi, &mut trial);
                    break;
                }
                // the threshold is crossed inside (0, remaining]
                let (mut lo, mut hi) = (0.0, remaining);
                for _ in 0..BISECTION_ITERS {
                    let mid = 0.5 * (lo + hi);
                    prop.rk4(&psi, &mut trial, mid, zero, 0.0);
                    if norm_sqr(&trial) > r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                prop.rk4(&psi, &mut trial, hi, zero, 0.0);
                let t_jump = t + (h - remaining) + hi;
                prop.jump(&trial, &mut jumped);
                let n2 = norm_sqr(&jumped);
                if !(n2 > 0.0) {
                    return Err(Error::NullJump { time: t_jump });
                }
                scale(&mut jumped, 1.0 / n2.sqrt());
                std::mem::swap(&mut psi, &mut jumped);
                jumps.push(t_jump);
                r = threshold(&mut rng);
                remaining -= hi;
                if remaining <= 0.0 {
                    break;
                }
            }
            t += h;
        }
        t = opts.sampling_times[idx + 1];
        sampler.sample(&psi, t)?;
    }
    Ok(sampler.finish(master_seed, stream, MeasurementRecord::Jumps { times: jumps }, 0.0))
}

/// Photodetection by direct Euler sampling of `dN` with probability
/// `⟨c†c⟩dt` per step. Biased at `O(dt)`; kept for cross-checking the
/// waiting-time stepper.
pub fn run_pd_trajectory_euler(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    let mut sampler = Sampler::new(model, opts)?;
    let mut rng = trajectory_rng(master_seed, stream);
    let mut prop = Propagator::new(model);
    let zero = C64::default();
    let d = model.dim();

    let mut psi: Vec<C64> = model.initial_state.amplitudes().as_slice().to_vec();
    let mut next = vec![zero; d];
    let mut cpsi = vec![zero; d];
    let mut jumps = Vec::new();

    sampler.sample(&psi, 0.0)?;
    let mut t = 0.0;
    for (idx, (steps, h)) in opts.intervals().into_iter().enumerate() {
        for _ in 0..steps {
            prop.jump(&psi, &mut cpsi);
            let rate = norm_sqr(&cpsi);
            let u: f64 = rng.random();
            t += h;
            if u < rate * h {
                scale(&mut cpsi, 1.0 / rate.sqrt());
                std::mem::swap(&mut psi, &mut cpsi);
                jumps.push(t);
            } else {
                prop.rk4(&psi, &mut next, h, zero, 0.0);
                let n = norm_sqr(&next).sqrt();
                scale(&mut next, 1.0 / n);
                std::mem::swap(&mut psi, &mut next);
            }
        }
        t = opts.sampling_times[idx + 1];
        sampler.sample(&psi, t)?;
    }
    Ok(sampler.finish(master_seed, stream, MeasurementRecord::Jumps { times: jumps }, 0.0))
}

/// Homodyne trajectory with local-oscillator phase `theta`. Steps are at most
/// the nominal `dt`, shortened where the photocurrent variance is large.
pub fn run_hd_trajectory(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    theta: f64,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    UnravelingKind::Homodyne { theta }.validate()?;
    let mut sampler = Sampler::new(model, opts)?;
    let mut rng = trajectory_rng(master_seed, stream);
    let mut prop = Propagator::new(model);
    let zero = C64::default();
    let d = model.dim();
    let phase = c64(theta.cos(), -theta.sin());

    let mut psi: Vec<C64> = model.initial_state.amplitudes().as_slice().to_vec();
    let mut next = vec![zero; d];
    let mut cpsi = vec![zero; d];
    let total: usize = opts.intervals().iter().map(|(n, _)| n).sum();
    let mut rec_dt = Vec::with_capacity(total);
    let mut rec_dy = Vec::with_capacity(total);
    let mut rec_dw = Vec::with_capacity(total);
    let mut boundaries = Vec::with_capacity(opts.sampling_times.len());
    let mut max_dev: f64 = 0.0;

    sampler.sample(&psi, 0.0)?;
    boundaries.push(0);
    let mut t = 0.0;
    for (idx, (_, h_nominal)) in opts.intervals().into_iter().enumerate() {
        let span = opts.sampling_times[idx + 1] - opts.sampling_times[idx];
        let mut remaining = span;
        while remaining > 0.0 {
            prop.jump(&psi, &mut cpsi);
            // x = ⟨e^{−iθ}c + e^{iθ}c†⟩, var = ‖(e^{−iθ}c − x/2)ψ‖²
            let x = 2.0 * (phase * dotc(&psi, &cpsi)).re;
            let var = (norm_sqr(&cpsi) - 0.25 * x * x).max(0.0);
            let mut h = h_nominal.min(HD_VARIANCE_STEP / var);
            if h >= remaining * (1.0 - 1e-9) {
                h = remaining;
            }
            let alpha = phase * (0.5 * x);
            prop.rk4(&psi, &mut next, h, alpha, -x * x / 8.0);
            let z: f64 = rng.sample(StandardNormal);
            let dw = z * h.sqrt();
            for ((n, c), p) in next.iter_mut().zip(&cpsi).zip(&psi) {
                *n += (phase * c - p * (0.5 * x)) * dw;
            }
            remaining -= h;
            t += h;
            let norm = norm_sqr(&next).sqrt();
            let dev = (norm - 1.0).abs();
            if dev > MAX_HD_NORM_DEVIATION || !norm.is_finite() {
                return Err(Error::NormDeviation { time: t, deviation: dev });
            }
            max_dev = max_dev.max(dev);
            scale(&mut next, 1.0 / norm);
            std::mem::swap(&mut psi, &mut next);
            rec_dt.push(h);
            rec_dy.push(x * h + dw);
            rec_dw.push(dw);
        }
        t = opts.sampling_times[idx + 1];
        sampler.sample(&psi, t)?;
        boundaries.push(rec_dt.len());
    }
    let record = MeasurementRecord::Photocurrent {
        dt: rec_dt,
        dy: rec_dy,
        dw: rec_dw,
        boundaries,
    };
    Ok(sampler.finish(master_seed, stream, record, max_dev))
}

/// Dispatch on the unraveling.
pub fn run_trajectory(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    kind: UnravelingKind,
    master_seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    match kind {
        UnravelingKind::Photodetection => run_pd_trajectory(model, opts, master_seed, stream),
        UnravelingKind::Homodyne { theta } => run_hd_trajectory(model, opts, theta, master_seed, stream),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::ops::{annihilation, number};
    use crate::hilbert::{embed, expectation, LinearOp, SpaceLayout};
    use crate::models::{build_spin_spin, ModelLabel, SpinSpinConfig};
    use crate::thermo::BatterySpectrum;

    /// Bare cavity `H = ω a†a`, jump `√γ a`, starting in `|n0⟩`.
    pub(crate) fn decaying_cavity(gamma: f64, n0: usize, cutoff: usize) -> ModelInstance {
        let dim = cutoff + 1;
        let layout = SpaceLayout::labelled(&[2, dim], &["probe", "cavity"], Some(1)).unwrap();
        let h = embed(&LinearOp::local(number(dim)), 1, &layout).unwrap();
        let a = embed(&LinearOp::local(annihilation(dim)), 1, &layout).unwrap();
        let jump = LinearOp::new(a.matrix() * c64(gamma.sqrt(), 0.0), layout.clone()).unwrap();
        let hb = LinearOp::local(crate::hilbert::CMatrix::zeros(2, 2));
        ModelInstance {
            label: ModelLabel::SpinSpin,
            initial_state: PureState::basis(&layout, &[0, n0]).unwrap(),
            layout,
            h_total: h,
            h_battery: hb,
            h_battery_spectrum: BatterySpectrum::two_level(1.0),
            jump_op: jump,
            battery: vec![0],
            rate_scale: 1.0f64.max(gamma),
        }
    }

    fn small_spin_spin(gamma: f64) -> ModelInstance {
        let mut cfg = SpinSpinConfig::strong(gamma);
        cfg.n_ph = 6;
        build_spin_spin(&cfg).unwrap()
    }

    #[test]
    fn theta_range() {
        assert!(UnravelingKind::homodyne(0.0).is_ok());
        assert!(UnravelingKind::homodyne(TAU - 1e-9).is_ok());
        assert!(UnravelingKind::homodyne(TAU).is_err());
        assert!(UnravelingKind::homodyne(-0.1).is_err());
    }

    #[test]
    fn closed_pd_is_schrodinger_evolution() {
        let m = small_spin_spin(0.0);
        let opts = IntegratorOptions::uniform(2.0, 5, 0.002);
        let rec = run_pd_trajectory(&m, &opts, 7, 0).unwrap();
        assert_eq!(rec.record.jump_count(), 0);
        let lind = crate::lindblad::evolve_unconditional(&m, &opts).unwrap();
        for (psi, rho) in rec.states.iter().zip(&lind.states) {
            let proj = DensityOp::from_pure(psi);
            assert!(crate::hilbert::trace_distance(proj.matrix(), rho.matrix()) < 1e-8);
        }
    }

    #[test]
    fn closed_hd_photocurrent_is_pure_noise() {
        let m = small_spin_spin(0.0);
        let opts = IntegratorOptions::uniform(1.0, 3, 0.01);
        let rec = run_hd_trajectory(&m, &opts, 0.0, 3, 1).unwrap();
        let MeasurementRecord::Photocurrent { dy, dw, .. } = &rec.record else {
            panic!("expected photocurrent")
        };
        assert_eq!(dy, dw);
        let pd = run_pd_trajectory(&m, &opts, 3, 1).unwrap();
        for (a, b) in rec.states.iter().zip(&pd.states) {
            assert!((a.amplitudes() - b.amplitudes()).norm() < 1e-12);
        }
    }

    #[test]
    fn conditional_states_are_normalized_and_jumps_ordered() {
        let m = small_spin_spin(1.0);
        let opts = IntegratorOptions::uniform(6.0, 13, 0.002);
        let rec = run_pd_trajectory(&m, &opts, 11, 4).unwrap();
        for psi in &rec.states {
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-8);
        }
        let MeasurementRecord::Jumps { times } = &rec.record else {
            panic!()
        };
        assert!(times.windows(2).all(|w| w[1] > w[0]));
        assert!(times.iter().all(|&t| t > 0.0 && t <= 6.0));
        let hd = run_hd_trajectory(&m, &opts, 0.0, 11, 4).unwrap();
        for psi in &hd.states {
            assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-8);
        }
        assert!(hd.norms_check < MAX_HD_NORM_DEVIATION);
    }

    #[test]
    fn single_photon_jumps_once() {
        let m = decaying_cavity(1.0, 1, 3);
        let opts = IntegratorOptions::uniform(30.0, 3, 0.01);
        for s in 0..20 {
            let rec = run_pd_trajectory(&m, &opts, 5, s).unwrap();
            // P(no jump by t = 30) = e^{-30}
            assert_eq!(rec.record.jump_count(), 1);
            let n = expectation(&embed(&LinearOp::local(number(4)), 1, &m.layout).unwrap(), &rec.states[2])
                .unwrap()
                .re;
            assert!(n.abs() < 1e-12);
        }
    }

    #[test]
    fn euler_and_waiting_time_agree_in_law() {
        let m = decaying_cavity(1.0, 3, 4);
        let opts = IntegratorOptions::uniform(2.0, 3, 1e-3);
        let n = 400;
        let stats = |euler: bool| {
            let mut counts = Vec::new();
            let mut first = Vec::new();
            for s in 0..n {
                let rec = if euler {
                    run_pd_trajectory_euler(&m, &opts, 21, s).unwrap()
                } else {
                    run_pd_trajectory(&m, &opts, 21, s).unwrap()
                };
                let MeasurementRecord::Jumps { times } = rec.record else { unreachable!() };
                counts.push(times.len() as f64);
                first.extend(times.first());
            }
            (crate::thermo::mean_std(&counts), crate::thermo::mean_std(&first))
        };
        // binomial(3, 1 - e^{-2}) counts, first jump at rate 3
        let p = 1.0 - (-2.0f64).exp();
        let exact_count = 3.0 * p;
        let exact_first = (1.0 - (-6.0f64).exp() * 7.0) / 3.0 / (1.0 - (-6.0f64).exp());
        for euler in [false, true] {
            let ((c, cs), (f, fs)) = stats(euler);
            assert!((c - exact_count).abs() < 4.0 * cs / (n as f64).sqrt(), "euler={euler}: {c}");
            assert!((f - exact_first).abs() < 4.0 * fs / (n as f64).sqrt(), "euler={euler}: {f}");
        }
    }

    #[test]
    fn same_seed_same_record() {
        let m = small_spin_spin(0.5);
        let opts = IntegratorOptions::uniform(2.0, 5, 0.004);
        for kind in [UnravelingKind::Photodetection, UnravelingKind::Homodyne { theta: 1.0 }] {
            let a = run_trajectory(&m, &opts, kind, 99, 3).unwrap();
            let b = run_trajectory(&m, &opts, kind, 99, 3).unwrap();
            assert_eq!(a.record, b.record);
            let c = run_trajectory(&m, &opts, kind, 99, 4).unwrap();
            assert_ne!(a.record, c.record);
        }
    }

    #[test]
    fn oversized_homodyne_step_is_reported() {
        let m = small_spin_spin(50.0);
        let opts = IntegratorOptions::uniform(1.0, 2, 0.5);
        let err = run_hd_trajectory(&m, &opts, 0.0, 1, 0).unwrap_err();
        assert!(matches!(err, Error::NormDeviation { .. }), "{err}");
    }
}
