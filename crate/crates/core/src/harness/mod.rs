//! Experiment orchestration: TOML configuration, single runs, parameter
//! sweeps, size-scaling studies and figure presets. Results are written as
//! CSV tables with a JSON metadata sidecar.

mod config;
mod experiment;
pub mod output;
mod presets;
mod scaling;
mod sweep;

pub use config::{
    DickeParams, ExperimentConfig, ModelConfig, OutputConfig, RunConfig, UnravelingConfig, OUT_DIR_ENV,
};
pub use experiment::{execute_experiment, run_experiment, Artifacts, ExperimentResult, CUTOFF_WARNING, SERIES_COLUMNS};
pub use presets::{
    dicke_sweep_spec, fig1_configs, fig2_configs, reproduce_figure, scaling_templates, FigureId, PresetOverrides,
    DEFAULT_SEED, FIG1_GAMMAS, FIG2_KAPPAS, SCALING_N,
};
pub use scaling::{execute_scaling_study, fit_power_law, run_scaling_study, Peak, PowerLawFit, ScalingResult, ScalingRow};
pub use sweep::{
    execute_sweep, run_sweep, unraveling_label, Axis, CellConditional, Readout, SweepCell, SweepResult, SweepSpec,
};
