use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::IntegratorOptions;
use crate::models::{build_dicke, build_spin_spin, default_fock_cutoff, DickeConfig, ModelInstance, SpinSpinConfig};
use crate::thermo::{BatterySpectrum, SpectrumSpace};
use crate::trajectories::UnravelingKind;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "QBATTERY_OUT_DIR";

/// Dicke parameters as written in config files; `n_ph` defaults to the
/// standard cutoff for `n_tls`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DickeParams {
    #[serde(default = "one")]
    pub omega: f64,
    pub lambda_bar: f64,
    pub kappa: f64,
    pub n_tls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ph: Option<usize>,
}

fn one() -> f64 {
    1.0
}

impl DickeParams {
    pub fn resolve(&self) -> DickeConfig {
        DickeConfig {
            omega: self.omega,
            lambda_bar: self.lambda_bar,
            kappa: self.kappa,
            n_tls: self.n_tls,
            n_ph: self.n_ph.unwrap_or_else(|| default_fock_cutoff(self.n_tls.max(1))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    SpinSpin(SpinSpinConfig),
    Dicke(DickeParams),
}

impl ModelConfig {
    pub fn build(&self, space: SpectrumSpace) -> Result<ModelInstance> {
        match self {
            ModelConfig::SpinSpin(c) => build_spin_spin(c),
            ModelConfig::Dicke(p) => {
                let cfg = p.resolve();
                let m = build_dicke(&cfg)?;
                Ok(match space {
                    SpectrumSpace::Full => m,
                    SpectrumSpace::Symmetric => {
                        m.with_spectrum(BatterySpectrum::symmetric_ladder(cfg.n_tls, cfg.omega))
                    }
                })
            }
        }
    }

    /// Same model with the dissipation switched off.
    pub fn without_dissipation(&self) -> Self {
        let mut m = *self;
        match &mut m {
            ModelConfig::SpinSpin(c) => c.gamma = 0.0,
            ModelConfig::Dicke(p) => p.kappa = 0.0,
        }
        m
    }

    /// Set a named scalar parameter (sweep axes).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let bad = || Error::config(name, "unknown parameter for this model");
        match self {
            ModelConfig::SpinSpin(c) => match name {
                "omega" => c.omega = value,
                "g_b" => c.g_b = value,
                "g_c" => c.g_c = value,
                "gamma" => c.gamma = value,
                "n_ph" => c.n_ph = as_count(name, value)?,
                _ => return Err(bad()),
            },
            ModelConfig::Dicke(p) => match name {
                "omega" => p.omega = value,
                "lambda_bar" => p.lambda_bar = value,
                "kappa" => p.kappa = value,
                "n_tls" => p.n_tls = as_count(name, value)?,
                "n_ph" => p.n_ph = Some(as_count(name, value)?),
                _ => return Err(bad()),
            },
        }
        Ok(())
    }

    /// Field names in errors carry a `model.` prefix.
    pub fn validate(&self) -> Result<()> {
        let r = match self {
            ModelConfig::SpinSpin(c) => c.validate(),
            ModelConfig::Dicke(p) => p.resolve().validate(),
        };
        r.map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: format!("model.{field}"),
                reason,
            },
            e => e,
        })
    }
}

fn as_count(name: &str, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        Err(Error::config(name, format!("{value} is not a non-negative integer")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnravelingConfig {
    /// Unconditional dynamics only.
    #[default]
    None,
    Photodetection,
    Homodyne {
        #[serde(default)]
        theta: f64,
    },
}

impl UnravelingConfig {
    pub fn kind(&self) -> Option<UnravelingKind> {
        match *self {
            UnravelingConfig::None => None,
            UnravelingConfig::Photodetection => Some(UnravelingKind::Photodetection),
            UnravelingConfig::Homodyne { theta } => Some(UnravelingKind::Homodyne { theta }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            UnravelingConfig::Homodyne { theta } if !(0.0..TAU).contains(&theta) => {
                Err(Error::config("unraveling.theta", format!("{theta} not in [0, 2π)")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            UnravelingConfig::None => "none",
            UnravelingConfig::Photodetection => "pd",
            UnravelingConfig::Homodyne { .. } => "hd",
        }
    }
}

fn default_n_traj() -> usize {
    1000
}

fn default_n_samples() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub t_max: f64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Integration step; defaults to `10⁻³ / rate_scale` of the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub ergotropy_space: SpectrumSpace,
    /// Re-run the unconditional dynamics at `dt/2` and record the deviation.
    #[serde(default)]
    pub step_check: bool,
}

impl RunConfig {
    pub fn new(t_max: f64, n_samples: usize) -> Self {
        Self {
            n_traj: default_n_traj(),
            master_seed: 0,
            t_max,
            n_samples,
            dt: None,
            ergotropy_space: SpectrumSpace::Full,
            step_check: false,
        }
    }

    pub fn options(&self, model: &ModelInstance) -> IntegratorOptions {
        let dt = self.dt.unwrap_or_else(|| IntegratorOptions::default_dt(model));
        let mut o = IntegratorOptions::uniform(self.t_max, self.n_samples, dt);
        o.keep_states = false;
        o
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// File stem for the emitted files.
    #[serde(default = "default_name")]
    pub name: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            name: default_name(),
        }
    }
}

impl OutputConfig {
    /// Output directory: explicit override, then `QBATTERY_OUT_DIR`, then the
    /// configured directory.
    pub fn resolve_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(d) = override_dir {
            return d.to_path_buf();
        }
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.dir.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub unraveling: UnravelingConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.unraveling.validate()?;
        let r = &self.run;
        if self.unraveling != UnravelingConfig::None && r.n_traj < 1 {
            return Err(Error::config("run.n_traj", "must be >= 1"));
        }
        if !(r.t_max > 0.0) || !r.t_max.is_finite() {
            return Err(Error::config("run.t_max", "must be > 0"));
        }
        if r.n_samples < 2 {
            return Err(Error::config("run.n_samples", "must be >= 2"));
        }
        if let Some(dt) = r.dt {
            if !(dt > 0.0) || dt > r.t_max {
                return Err(Error::config("run.dt", "must be in (0, t_max]"));
            }
        }
        if self.output.name.is_empty() || self.output.name.contains(['/', '\\']) {
            return Err(Error::config("output.name", "must be a plain file stem"));
        }
        Ok(())
    }
}
