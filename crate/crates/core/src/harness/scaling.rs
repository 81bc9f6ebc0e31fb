use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, ModelConfig};
use super::experiment::{execute_experiment, tolerances, Artifacts, ExperimentResult};
use super::output::{fmt_f64, paths, software, write_json, Table};
use crate::error::{Error, Result};
use crate::thermo::argmax;

/// Peak of a sampled series and its time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub value: f64,
    pub time: f64,
}

impl Peak {
    fn of(values: &[f64], times: &[f64]) -> Self {
        match argmax(values) {
            Some(k) => Self {
                value: values[k],
                time: times[k],
            },
            None => Self::nan(),
        }
    }

    fn nan() -> Self {
        Self {
            value: f64::NAN,
            time: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_tls: usize,
    pub status: String,
    pub energy: Peak,
    pub power: Peak,
    pub ergotropy: Peak,
    /// Peak daemonic ergotropy; NaN without an unraveling.
    pub daemonic: Peak,
}

/// Least-squares fit `log y = log a + b log N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub quantity: String,
    pub exponent: f64,
    /// Standard error of the exponent; NaN with only two points.
    pub stderr: f64,
    pub prefactor: f64,
    pub points: usize,
}

/// Fit a power law to positive data; `None` with fewer than two points.
pub fn fit_power_law(quantity: &str, n: &[f64], y: &[f64]) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let m = pts.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let stderr = if m > 2 {
        let ssr: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
        (ssr / (mf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(PowerLawFit {
        quantity: quantity.into(),
        exponent: b,
        stderr,
        prefactor: a.exp(),
        points: m,
    })
}

#[derive(Debug, Clone)]
pub struct ScalingResult {
    pub template: ExperimentConfig,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<PowerLawFit>,
    pub warnings: Vec<String>,
}

fn row_from(n: usize, r: &ExperimentResult) -> ScalingRow {
    let daemonic = if r.daemonic.is_empty() {
        Peak::nan()
    } else {
        let d: Vec<f64> = r.daemonic.iter().map(|d| d.daemonic_ergotropy).collect();
        Peak::of(&d, &r.times)
    };
    ScalingRow {
        n_tls: n,
        status: "ok".into(),
        energy: Peak::of(&r.open.energy, &r.times),
        power: Peak::of(&r.open.power, &r.times),
        ergotropy: Peak::of(&r.open.ergotropy, &r.times),
        daemonic,
    }
}

/// Peak energy, power and ergotropy of the Dicke battery for each `N`, with
/// log-log exponents. The Fock cutoff follows the default rule per `N`.
pub fn execute_scaling_study(n_values: &[usize], template: &ExperimentConfig) -> Result<ScalingResult> {
    if n_values.is_empty() {
        return Err(Error::config("n_values", "empty"));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) || n_values[0] < 2 {
        return Err(Error::config("n_values", "must be ascending and >= 2"));
    }
    let ModelConfig::Dicke(params) = template.model else {
        return Err(Error::config("model.kind", "scaling study needs the dicke model"));
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &n in n_values {
        let mut cfg = template.clone();
        let mut p = params;
        p.n_tls = n;
        p.n_ph = None;
        cfg.model = ModelConfig::Dicke(p);
        log::info!("scaling study N = {n}");
        match execute_experiment(&cfg) {
            Ok(r) => {
                warnings.extend(r.warnings.iter().map(|w| format!("N={n}: {w}")));
                rows.push(row_from(n, &r));
            }
            Err(e) => rows.push(ScalingRow {
                n_tls: n,
                status: format!("error: {e}"),
                energy: Peak::nan(),
                power: Peak::nan(),
                ergotropy: Peak::nan(),
                daemonic: Peak::nan(),
            }),
        }
    }
    let ns: Vec<f64> = rows.iter().map(|r| r.n_tls as f64).collect();
    let series: [(&str, Vec<f64>); 4] = [
        ("energy", rows.iter().map(|r| r.energy.value).collect()),
        ("power", rows.iter().map(|r| r.power.value).collect()),
        ("ergotropy", rows.iter().map(|r| r.ergotropy.value).collect()),
        ("daemonic_ergotropy", rows.iter().map(|r| r.daemonic.value).collect()),
    ];
    let fits = series
        .iter()
        .filter_map(|(q, y)| fit_power_law(q, &ns, y))
        .collect();
    Ok(ScalingResult {
        template: template.clone(),
        rows,
        fits,
        warnings,
    })
}

impl ScalingResult {
    pub fn fit(&self, quantity: &str) -> Option<&PowerLawFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }

    pub fn peaks_table(&self) -> Table {
        let mut t = Table::new([
            "n_tls",
            "status",
            "peak_energy",
            "t_energy",
            "peak_power",
            "t_power",
            "peak_ergotropy",
            "t_ergotropy",
            "peak_daemonic",
            "t_daemonic",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.n_tls.to_string(),
                r.status.clone(),
                fmt_f64(r.energy.value),
                fmt_f64(r.energy.time),
                fmt_f64(r.power.value),
                fmt_f64(r.power.time),
                fmt_f64(r.ergotropy.value),
                fmt_f64(r.ergotropy.time),
                fmt_f64(r.daemonic.value),
                fmt_f64(r.daemonic.time),
            ]);
        }
        t
    }

    pub fn fits_table(&self) -> Table {
        let mut t = Table::new(["quantity", "exponent", "stderr", "prefactor", "points"]);
        for f in &self.fits {
            t.push(vec![
                f.quantity.clone(),
                fmt_f64(f.exponent),
                fmt_f64(f.stderr),
                fmt_f64(f.prefactor),
                f.points.to_string(),
            ]);
        }
        t
    }
}

/// Writes `name.csv` (peaks), `name_fits.csv` and `name.meta.json`.
pub fn run_scaling_study(
    n_values: &[usize],
    template: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<(ScalingResult, Artifacts)> {
    let start = Instant::now();
    let result = execute_scaling_study(n_values, template)?;
    let dir = template.output.resolve_dir(out_dir);
    let name = &template.output.name;
    let (csv, meta) = paths(&dir, name);
    let fits = dir.join(format!("{name}_fits.csv"));
    result.peaks_table().write_csv(&csv)?;
    result.fits_table().write_csv(&fits)?;
    write_json(
        &meta,
        &json!({
            "software": software(),
            "n_values": n_values,
            "template": template,
            "fits": result.fits,
            "warnings": result.warnings,
            "wall_clock_seconds": start.elapsed().as_secs_f64(),
            "tolerances": tolerances(),
        }),
    )?;
    Ok((result, Artifacts { files: vec![csv, fits, meta] }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{DickeParams, RunConfig, UnravelingConfig};

    #[test]
    fn exact_power_law_is_recovered() {
        let n = [2.0, 3.0, 4.0, 6.0];
        let y: Vec<f64> = n.iter().map(|x: &f64| 0.7 * x.powf(1.5)).collect();
        let f = fit_power_law("p", &n, &y).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-12);
        assert!((f.prefactor - 0.7).abs() < 1e-12);
        assert!(f.stderr < 1e-10);
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(fit_power_law("e", &[2.0], &[1.0]).is_none());
        let f = fit_power_law("e", &[2.0, 4.0], &[1.0, 2.0]).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12);
        assert!(f.stderr.is_nan());
    }

    fn template() -> ExperimentConfig {
        ExperimentConfig {
            model: ModelConfig::Dicke(DickeParams {
                omega: 1.0,
                lambda_bar: 1.0,
                kappa: 0.0,
                n_tls: 2,
                n_ph: None,
            }),
            unraveling: UnravelingConfig::None,
            run: RunConfig::new(1.0, 51),
            output: Default::default(),
        }
    }

    #[test]
    fn single_size_has_no_fit() {
        let r = execute_scaling_study(&[2], &template()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert!(r.fits.is_empty());
        assert!(r.rows[0].energy.value > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(execute_scaling_study(&[3, 2], &template()).is_err());
        assert!(execute_scaling_study(&[1, 2], &template()).is_err());
        let mut t = template();
        t.model = ModelConfig::SpinSpin(crate::models::SpinSpinConfig::weak(0.0));
        assert!(execute_scaling_study(&[2, 3], &t).is_err());
    }
}
