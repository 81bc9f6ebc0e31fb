use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trajectory, MeasurementRecord, TrajectoryRecord, UnravelingKind};
use crate::error::{Error, Result};
use crate::hilbert::{c64, purity, CMatrix, DensityOp};
use crate::lindblad::IntegratorOptions;
use crate::models::ModelInstance;
use crate::thermo::{energy_and_ergotropy, mean_std, DaemonicStats};

/// Trajectories handed to the worker pool at once. Results are folded in
/// index order, so the value only affects memory use.
const BATCH: usize = 64;

/// Pooled Wiener increments of a homodyne ensemble.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub count: usize,
    pub mean: f64,
    /// Sample variance of `dw` divided by the mean step.
    pub variance_over_dt: f64,
    pub mean_dt: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    pub kind: UnravelingKind,
    pub n_traj: usize,
    pub master_seed: u64,
    pub times: Vec<f64>,
    /// Conditional ergotropy statistics per sampled time.
    pub conditional_ergotropy: Vec<DaemonicStats>,
    /// Conditional ergotropy of every trajectory, indexed `[time][trajectory]`.
    pub ergotropy_samples: Vec<Vec<f64>>,
    pub conditional_energy: Vec<f64>,
    pub conditional_purity: Vec<f64>,
    pub conditional_purity_std: Vec<f64>,
    /// Ensemble mean of the conditional battery states.
    pub averaged_battery: Vec<DensityOp>,
    /// Ensemble mean of the global projectors (empty unless `keep_states`).
    pub averaged_states: Vec<DensityOp>,
    pub jump_counts: Vec<usize>,
    /// Ensemble-mean photocurrent `Σdy/Δt` per sampling interval (homodyne).
    pub photocurrent: Vec<f64>,
    pub noise: Option<NoiseStats>,
    pub max_norm_deviation: f64,
    pub max_top_fock_population: f64,
}

impl EnsembleSummary {
    pub fn mean_jump_count(&self) -> (f64, f64) {
        let v: Vec<f64> = self.jump_counts.iter().map(|&n| n as f64).collect();
        mean_std(&v)
    }
}

/// What the fold keeps from one trajectory.
struct Outcome {
    ergotropy: Vec<f64>,
    energy: Vec<f64>,
    purity: Vec<f64>,
    record: TrajectoryRecord,
    photocurrent: Vec<f64>,
    noise: (f64, f64, f64, usize),
}

fn process(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    kind: UnravelingKind,
    master_seed: u64,
    index: usize,
) -> Result<Outcome> {
    let mut record = run_trajectory(model, opts, kind, master_seed, index as u64)?;
    let n = record.times.len();
    let (mut ergotropy, mut energy, mut pur) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for rho in &record.conditional_battery_states {
        let (e, erg) = energy_and_ergotropy(rho, &model.h_battery, &model.h_battery_spectrum)?;
        energy.push(e);
        ergotropy.push(erg);
        pur.push(purity(rho));
    }
    let mut photocurrent = Vec::new();
    let mut noise = (0.0, 0.0, 0.0, 0);
    if let MeasurementRecord::Photocurrent {
        dt,
        dy,
        dw,
        boundaries,
    } = &mut record.record
    {
        for (k, b) in boundaries.windows(2).enumerate() {
            let span = opts.sampling_times[k + 1] - opts.sampling_times[k];
            photocurrent.push(dy[b[0]..b[1]].iter().sum::<f64>() / span);
        }
        noise = (
            dw.iter().sum(),
            dw.iter().map(|w| w * w).sum(),
            dt.iter().sum(),
            dw.len(),
        );
        // the per-step record is not needed past this point
        *dt = Vec::new();
        *dy = Vec::new();
        *dw = Vec::new();
    }
    Ok(Outcome {
        ergotropy,
        energy,
        purity: pur,
        record,
        photocurrent,
        noise,
    })
}

/// Run `n_traj` trajectories with streams `0..n_traj` of `master_seed` and
/// aggregate them in index order. Bitwise reproducible for any thread count.
pub fn run_ensemble(
    model: &ModelInstance,
    opts: &IntegratorOptions,
    kind: UnravelingKind,
    n_traj: usize,
    master_seed: u64,
) -> Result<EnsembleSummary> {
    if n_traj == 0 {
        return Err(Error::EmptyEnsemble);
    }
    kind.validate()?;
    opts.validate()?;
    let n_t = opts.sampling_times.len();
    let d = model.dim();
    let db = model.h_battery.dim();

    let mut ergotropy_samples = vec![Vec::with_capacity(n_traj); n_t];
    let mut energy_sum = vec![0.0; n_t];
    let mut purity_samples = vec![Vec::with_capacity(n_traj); n_t];
    let mut battery_sum = vec![CMatrix::zeros(db, db); n_t];
    let mut global_sum = if opts.keep_states {
        vec![CMatrix::zeros(d, d); n_t]
    } else {
        Vec::new()
    };
    let mut jump_counts = Vec::with_capacity(n_traj);
    let mut photocurrent = vec![0.0; n_t - 1];
    let (mut w_sum, mut w_sq, mut dt_sum, mut w_n) = (0.0, 0.0, 0.0, 0usize);
    let mut max_norm_deviation: f64 = 0.0;
    let mut max_top: f64 = 0.0;
    let one = c64(1.0, 0.0);

    let mut start = 0;
    while start < n_traj {
        let end = (start + BATCH).min(n_traj);
        let batch: Vec<Result<Outcome>> = (start..end)
            .into_par_iter()
            .map(|i| {
                process(model, opts, kind, master_seed, i).map_err(|e| Error::Trajectory {
                    index: i,
                    source: Box::new(e),
                })
            })
            .collect();
        for out in batch {
            let out = out?;
            for k in 0..n_t {
                ergotropy_samples[k].push(out.ergotropy[k]);
                purity_samples[k].push(out.purity[k]);
                energy_sum[k] += out.energy[k];
                battery_sum[k] += out.record.conditional_battery_states[k].matrix();
            }
            for (acc, psi) in global_sum.iter_mut().zip(&out.record.states) {
                let v = psi.amplitudes();
                acc.gerc(one, v, v, one);
            }
            for (acc, p) in photocurrent.iter_mut().zip(&out.photocurrent) {
                *acc += p;
            }
            w_sum += out.noise.0;
            w_sq += out.noise.1;
            dt_sum += out.noise.2;
            w_n += out.noise.3;
            jump_counts.push(out.record.record.jump_count());
            max_norm_deviation = max_norm_deviation.max(out.record.norms_check);
            max_top = max_top.max(out.record.max_top_fock_population);
        }
        start = end;
    }

    let inv = 1.0 / n_traj as f64;
    let battery_layout = model.h_battery.layout().clone();
    let averaged_battery = battery_sum
        .into_iter()
        .map(|m| DensityOp::from_raw(m * c64(inv, 0.0), battery_layout.clone()))
        .collect();
    let averaged_states = global_sum
        .into_iter()
        .map(|m| DensityOp::from_raw(m * c64(inv, 0.0), model.layout.clone()))
        .collect();
    let conditional_ergotropy = ergotropy_samples
        .iter()
        .map(|v| DaemonicStats::from_samples(v))
        .collect::<Result<Vec<_>>>()?;
    let (conditional_purity, conditional_purity_std) =
        purity_samples.iter().map(|v| mean_std(v)).unzip();
    let noise = matches!(kind, UnravelingKind::Homodyne { .. }).then(|| {
        let mean = w_sum / w_n as f64;
        let var = (w_sq - w_n as f64 * mean * mean) / (w_n as f64 - 1.0).max(1.0);
        let mean_dt = dt_sum / w_n as f64;
        NoiseStats {
            count: w_n,
            mean,
            variance_over_dt: var / mean_dt,
            mean_dt,
        }
    });
    if !matches!(kind, UnravelingKind::Homodyne { .. }) {
        photocurrent.clear();
    }
    if max_top > 1e-6 {
        log::warn!("Fock cutoff: top-two-level population reached {max_top:e} (> 1e-6)");
    }

    Ok(EnsembleSummary {
        kind,
        n_traj,
        master_seed,
        times: opts.sampling_times.clone(),
        conditional_ergotropy,
        ergotropy_samples,
        conditional_energy: energy_sum.into_iter().map(|e| e * inv).collect(),
        conditional_purity,
        conditional_purity_std,
        averaged_battery,
        averaged_states,
        jump_counts,
        photocurrent: photocurrent.into_iter().map(|p| p * inv).collect(),
        noise,
        max_norm_deviation,
        max_top_fock_population: max_top,
    })
}
