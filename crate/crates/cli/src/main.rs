use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qbattery::harness::{
    reproduce_figure, run_experiment, run_scaling_study, run_sweep, Artifacts, ExperimentConfig, FigureId,
    ModelConfig, PresetOverrides, RunConfig, SweepSpec, UnravelingConfig, OUT_DIR_ENV,
};

/// Open quantum battery simulator.
#[derive(Parser)]
#[command(name = "qbattery", version, about)]
struct Cli {
    /// Master seed for the trajectory ensemble.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of trajectories.
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    /// Output directory (overrides the config file and the environment).
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct RunOverrides {
    /// Final time.
    #[arg(long)]
    t_max: Option<f64>,
    /// Number of sampled times.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Output file stem.
    #[arg(long)]
    name: Option<String>,
    /// Override any scalar field, e.g. `model.kappa=0.5` or `unraveling.theta=1.57`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single experiment.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run a two-parameter sweep.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Peak energy, power and ergotropy against the number of Dicke spins.
    Scaling {
        config: PathBuf,
        /// Comma-separated ascending list of N.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,6")]
        n_values: Vec<usize>,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Regenerate the data behind a figure.
    Figure {
        /// fig1, fig2, fig3, fig4, em_scaling, em_efficiency or em_quadratures.
        id: String,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Comma-separated λ̄ grid for sweep presets.
        #[arg(long, value_delimiter = ',')]
        lambda_values: Option<Vec<f64>>,
        /// Comma-separated κ values for sweep presets and fig2.
        #[arg(long, value_delimiter = ',')]
        kappa_values: Option<Vec<f64>>,
    },
    /// Check an experiment config or sweep spec without running it.
    Validate { config: PathBuf },
}

impl RunOverrides {
    fn apply(
        &self,
        model: &mut ModelConfig,
        run: &mut RunConfig,
        mut unraveling: Option<&mut UnravelingConfig>,
        name: &mut String,
    ) -> Result<()> {
        if let Some(t) = self.t_max {
            run.t_max = t;
        }
        if let Some(n) = self.n_samples {
            run.n_samples = n;
        }
        if self.dt.is_some() {
            run.dt = self.dt;
        }
        if let Some(n) = &self.name {
            name.clone_from(n);
        }
        for kv in &self.set {
            let (key, raw) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            let value: f64 = raw
                .trim()
                .parse()
                .with_context(|| format!("{key}: `{raw}` is not a number"))?;
            match key.trim().split_once('.') {
                Some(("model", field)) => model.set(field, value)?,
                Some(("run", "t_max")) => run.t_max = value,
                Some(("run", "dt")) => run.dt = Some(value),
                Some(("run", "n_samples")) => run.n_samples = count(key, value)?,
                Some(("run", "n_traj")) => run.n_traj = count(key, value)?,
                Some(("run", "master_seed")) => run.master_seed = count(key, value)? as u64,
                Some(("unraveling", "theta")) => match unraveling.as_deref_mut() {
                    Some(UnravelingConfig::Homodyne { theta }) => *theta = value,
                    _ => bail!("{key}: only valid for a homodyne unraveling"),
                },
                _ => bail!("{key}: unknown override key"),
            }
        }
        Ok(())
    }
}

fn count(key: &str, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 {
        Ok(value as usize)
    } else {
        bail!("{key}: `{value}` is not a non-negative integer")
    }
}

impl Cli {
    fn apply_globals(&self, run: &mut RunConfig) {
        if let Some(s) = self.seed {
            run.master_seed = s;
        }
        if let Some(n) = self.n_traj {
            run.n_traj = n;
        }
    }
}

fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn report(a: &Artifacts) {
    for f in &a.files {
        println!("{}", f.display());
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let out = cli.out_dir.as_deref();
    match &cli.command {
        Command::Run { config, overrides } => {
            let mut cfg = load_experiment(config)?;
            cli.apply_globals(&mut cfg.run);
            overrides.apply(&mut cfg.model, &mut cfg.run, Some(&mut cfg.unraveling), &mut cfg.output.name)?;
            cfg.validate()?;
            let (res, art) = run_experiment(&cfg, out)?;
            for w in &res.warnings {
                eprintln!("warning: {w}");
            }
            report(&art);
        }
        Command::Sweep { spec, overrides } => {
            let mut s = SweepSpec::load(spec).with_context(|| format!("loading {}", spec.display()))?;
            cli.apply_globals(&mut s.run);
            overrides.apply(&mut s.model, &mut s.run, None, &mut s.output.name)?;
            s.validate()?;
            let (res, art) = run_sweep(&s, out)?;
            let failed = res.cells.iter().filter(|c| c.status.starts_with("error")).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} cells failed; see the status column", res.cells.len());
            }
            report(&art);
        }
        Command::Scaling {
            config,
            n_values,
            overrides,
        } => {
            let mut cfg = load_experiment(config)?;
            cli.apply_globals(&mut cfg.run);
            overrides.apply(&mut cfg.model, &mut cfg.run, Some(&mut cfg.unraveling), &mut cfg.output.name)?;
            cfg.validate()?;
            let (res, art) = run_scaling_study(n_values, &cfg, out)?;
            for f in &res.fits {
                eprintln!("{}: exponent {:.4} ± {:.4}", f.quantity, f.exponent, f.stderr);
            }
            report(&art);
        }
        Command::Figure {
            id,
            t_max,
            n_samples,
            lambda_values,
            kappa_values,
        } => {
            let id: FigureId = id.parse()?;
            let ov = PresetOverrides {
                n_traj: cli.n_traj,
                master_seed: cli.seed,
                t_max: *t_max,
                n_samples: *n_samples,
                lambda_values: lambda_values.clone(),
                kappa_values: kappa_values.clone(),
            };
            eprintln!("{id}: {}", id.recipe());
            report(&reproduce_figure(id, &ov, out)?);
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            if text.lines().any(|l| l.trim_start().starts_with("[axis1]")) {
                SweepSpec::from_toml(&text)?;
                println!("valid sweep spec");
            } else {
                ExperimentConfig::from_toml(&text)?;
                println!("valid experiment config");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
