use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::config::ExperimentConfig;
use super::output::{fmt_f64, fmt_opt, paths, software, write_json, Table};
use crate::error::Result;
use crate::lindblad::{evolve_unconditional, step_halving_check, StepCheck};
use crate::thermo::{DaemonicMetrics, WorkMetrics};
use crate::trajectories::{run_ensemble, EnsembleSummary};

/// Top-two-level Fock population above which a cutoff warning is raised.
pub const CUTOFF_WARNING: f64 = 1e-6;

/// Everything computed for one experiment, before serialization.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Unconditional dynamics with dissipation.
    pub open: WorkMetrics,
    /// Zero-dissipation baseline.
    pub closed: WorkMetrics,
    pub ensemble: Option<EnsembleSummary>,
    /// Per sampled time; empty without an unraveling.
    pub daemonic: Vec<DaemonicMetrics>,
    pub max_top_fock_population: f64,
    pub step_check: Option<StepCheck>,
    pub warnings: Vec<String>,
}

pub(crate) struct Baselines {
    pub dt: f64,
    pub times: Vec<f64>,
    pub open: WorkMetrics,
    pub closed: WorkMetrics,
    pub max_top: f64,
    pub step_check: Option<StepCheck>,
}

pub(crate) fn baselines(cfg: &ExperimentConfig) -> Result<Baselines> {
    let space = cfg.run.ergotropy_space;
    let model = cfg.model.build(space)?;
    let opts = cfg.run.options(&model);
    let open = evolve_unconditional(&model, &opts)?;
    let (closed, closed_top) = if model.is_closed() {
        (open.metrics.clone(), 0.0)
    } else {
        let cm = cfg.model.without_dissipation().build(space)?;
        // same grid and step as the dissipative run
        let s = evolve_unconditional(&cm, &opts)?;
        (s.metrics, s.max_top_fock_population)
    };
    let step_check = if cfg.run.step_check {
        Some(step_halving_check(&model, &opts)?)
    } else {
        None
    };
    Ok(Baselines {
        dt: opts.dt,
        times: open.times,
        open: open.metrics,
        closed,
        max_top: open.max_top_fock_population.max(closed_top),
        step_check,
    })
}

pub(crate) fn cutoff_warning(max_top: f64) -> Option<String> {
    (max_top > CUTOFF_WARNING).then(|| {
        format!("Fock cutoff: top-two-level population reached {max_top:.3e} (threshold {CUTOFF_WARNING:e})")
    })
}

/// Run the unconditional baselines and, if configured, the conditional
/// ensemble.
pub fn execute_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let base = baselines(cfg)?;
    let mut max_top = base.max_top;
    let (ensemble, daemonic) = match cfg.unraveling.kind() {
        None => (None, Vec::new()),
        Some(kind) => {
            let model = cfg.model.build(cfg.run.ergotropy_space)?;
            let opts = cfg.run.options(&model);
            let ens = run_ensemble(&model, &opts, kind, cfg.run.n_traj, cfg.run.master_seed)?;
            max_top = max_top.max(ens.max_top_fock_population);
            let d = ens
                .conditional_ergotropy
                .iter()
                .enumerate()
                .map(|(k, &stats)| {
                    DaemonicMetrics::new(stats, base.open.energy[k], base.open.ergotropy[k], base.closed.ergotropy[k])
                })
                .collect();
            (Some(ens), d)
        }
    };
    let mut warnings: Vec<String> = cutoff_warning(max_top).into_iter().collect();
    if let Some(sc) = &base.step_check {
        if !sc.passed {
            warnings.push(format!(
                "step halving changed observables by {:.3e} (tolerance {:.1e})",
                sc.max_deviation, sc.tolerance
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        dt: base.dt,
        times: base.times,
        open: base.open,
        closed: base.closed,
        ensemble,
        daemonic,
        max_top_fock_population: max_top,
        step_check: base.step_check,
        warnings,
    })
}

pub const SERIES_COLUMNS: [&str; 11] = [
    "t",
    "energy",
    "power",
    "ergotropy",
    "purity",
    "daemonic_ergotropy",
    "daemonic_std",
    "conditional_purity",
    "efficiency",
    "ergotropy_closed",
    "enhancement_ratio",
];

impl ExperimentResult {
    /// Time series, one row per sampled time.
    pub fn series_table(&self) -> Table {
        let mut t = Table::new(SERIES_COLUMNS);
        for k in 0..self.times.len() {
            let (dm, ds, cp, eta, ratio) = match (self.daemonic.get(k), &self.ensemble) {
                (Some(d), Some(e)) => (
                    d.daemonic_ergotropy,
                    d.std,
                    e.conditional_purity[k],
                    d.efficiency.value,
                    d.enhancement_ratio,
                ),
                _ => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, None),
            };
            t.push(vec![
                fmt_f64(self.times[k]),
                fmt_f64(self.open.energy[k]),
                fmt_f64(self.open.power[k]),
                fmt_f64(self.open.ergotropy[k]),
                fmt_f64(self.open.purity[k]),
                fmt_f64(dm),
                fmt_f64(ds),
                fmt_f64(cp),
                fmt_f64(eta),
                fmt_f64(self.closed.ergotropy[k]),
                fmt_opt(ratio),
            ]);
        }
        t
    }

    pub fn metadata(&self, wall_clock: f64) -> serde_json::Value {
        let ens = self.ensemble.as_ref().map(|e| {
            let (jumps, jumps_std) = e.mean_jump_count();
            json!({
                "n_traj": e.n_traj,
                "master_seed": e.master_seed,
                "streams": format!("0..{}", e.n_traj),
                "mean_jump_count": jumps,
                "jump_count_std": jumps_std,
                "noise": e.noise,
                "max_norm_deviation": e.max_norm_deviation,
            })
        });
        json!({
            "software": software(),
            "config": self.config,
            "resolved": {
                "dt": self.dt,
                "n_samples": self.times.len(),
            },
            "ensemble": ens,
            "max_top_fock_population": self.max_top_fock_population,
            "step_check": self.step_check,
            "warnings": self.warnings,
            "wall_clock_seconds": wall_clock,
            "tolerances": tolerances(),
            "columns": SERIES_COLUMNS,
        })
    }
}

pub(crate) fn tolerances() -> serde_json::Value {
    json!({
        "hermiticity": crate::hilbert::HERMITIAN_TOL,
        "trace_renormalize": crate::lindblad::TRACE_RENORMALIZE,
        "trace_abort": crate::lindblad::TRACE_ABORT,
        "positivity_abort": crate::lindblad::POSITIVITY_ABORT,
        "hd_norm_abort": crate::trajectories::MAX_HD_NORM_DEVIATION,
        "hd_variance_step": crate::trajectories::HD_VARIANCE_STEP,
        "ergotropy_roundoff": crate::thermo::ROUNDOFF,
        "efficiency_denominator_floor": crate::thermo::EFFICIENCY_DENOMINATOR_FLOOR,
        "ratio_denominator_floor": crate::thermo::RATIO_DENOMINATOR_FLOOR,
        "cutoff_warning": CUTOFF_WARNING,
    })
}

/// Files written by a harness operation.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
}

/// Execute and write `name.csv` plus `name.meta.json`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<(ExperimentResult, Artifacts)> {
    let start = Instant::now();
    let result = execute_experiment(cfg)?;
    let dir = cfg.output.resolve_dir(out_dir);
    let (csv, meta) = paths(&dir, &cfg.output.name);
    result.series_table().write_csv(&csv)?;
    write_json(&meta, &result.metadata(start.elapsed().as_secs_f64()))?;
    Ok((result, Artifacts { files: vec![csv, meta] }))
}
