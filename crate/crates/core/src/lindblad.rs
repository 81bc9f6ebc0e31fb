//! Unconditional evolution under the Lindblad master equation
//!
//! `dρ/dt = −i[H, ρ] + c ρ c† − {c†c, ρ}/2`
//!
//! integrated in matrix form with fixed-step classical RK4. The generator is
//! linear and time independent, so one RK4 step equals the fourth-order
//! Taylor polynomial of `exp(h L)` applied to `ρ`, which is how it is
//! evaluated here. Models without a jump operator are propagated as state
//! vectors with the same scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::sparse::CsrOp;
use crate::hilbert::{
    c64, hermitian_eigenvalues, hermitize, trace, CMatrix, CVector, DensityOp, LinearOp, PartialTrace, C64,
};
use crate::models::ModelInstance;
use crate::thermo::WorkMetrics;
use crate::trajectories::Propagator;

/// Trace drift beyond which the state is renormalized.
pub const TRACE_RENORMALIZE: f64 = 1e-9;
/// Trace drift beyond which integration aborts.
pub const TRACE_ABORT: f64 = 1e-6;
/// Eigenvalue below which integration aborts.
pub const POSITIVITY_ABORT: f64 = -1e-6;
/// Default coefficient `k` in `dt = k / rate_scale`.
pub const DEFAULT_DT_COEFFICIENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub dt: f64,
    pub sampling_times: Vec<f64>,
    pub hermitize: bool,
    /// Step-halving target, absolute, in units of ω.
    pub tolerance: f64,
    /// Keep the full-system density matrices (can be large).
    pub keep_states: bool,
}

impl IntegratorOptions {
    /// `n_samples` equally spaced read-out times on `[0, t_max]`.
    pub fn uniform(t_max: f64, n_samples: usize, dt: f64) -> Self {
        let n = n_samples.max(2);
        let sampling_times = (0..n)
            .map(|i| t_max * i as f64 / (n - 1) as f64)
            .collect();
        Self {
            dt,
            sampling_times,
            hermitize: true,
            tolerance: 1e-6,
            keep_states: true,
        }
    }

    /// Default step for a model: `10⁻³ / rate_scale`.
    pub fn default_dt(model: &ModelInstance) -> f64 {
        DEFAULT_DT_COEFFICIENT / model.rate_scale
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config("dt", "must be > 0"));
        }
        let t = &self.sampling_times;
        if t.is_empty() || t[0] != 0.0 {
            return Err(Error::config("sampling_times", "must start at 0"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("sampling_times", "must be strictly increasing"));
        }
        Ok(())
    }

    /// Sub-step count and size for each sampling interval.
    pub(crate) fn intervals(&self) -> Vec<(usize, f64)> {
        self.sampling_times
            .windows(2)
            .map(|w| {
                let span = w[1] - w[0];
                let n = ((span / self.dt) - 1e-9).ceil().max(1.0) as usize;
                (n, span / n as f64)
            })
            .collect()
    }

    pub fn halved(&self) -> Self {
        Self {
            dt: self.dt / 2.0,
            ..self.clone()
        }
    }
}

/// Sampled unconditional dynamics.
#[derive(Debug, Clone)]
pub struct UnconditionalSeries {
    pub times: Vec<f64>,
    /// Full-system states (empty unless `keep_states`).
    pub states: Vec<DensityOp>,
    pub reduced_battery: Vec<DensityOp>,
    pub metrics: WorkMetrics,
    pub max_trace_drift: f64,
    /// Largest population of the two highest Fock levels over all samples.
    pub max_top_fock_population: f64,
}

/// Right-hand side of the master equation, evaluated densely as written.
pub fn lindblad_rhs(rho: &CMatrix, h: &LinearOp, c: &LinearOp) -> Result<CMatrix> {
    let d = rho.nrows();
    for op in [h, c] {
        if op.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                found: op.dim(),
            });
        }
    }
    let i = c64(0.0, 1.0);
    let hm = h.matrix();
    let cm = c.matrix();
    let cdc = cm.adjoint() * cm;
    Ok((hm * rho - rho * hm) * (-i) + cm * rho * cm.adjoint()
        - (&cdc * rho + rho * &cdc) * c64(0.5, 0.0))
}

/// Matrix-free generator for Hermitian arguments.
///
/// With `G = −iH − c†c/2`: `L(X) = G X + (G X)† + c (c X)†`, valid whenever
/// `X = X†`, which holds for every RK4 stage.
pub(crate) struct Generator {
    g: CsrOp,
    c: Option<CsrOp>,
    y: CMatrix,
    z: CMatrix,
}

impl Generator {
    pub(crate) fn new(h: &LinearOp, c: &LinearOp) -> Self {
        let d = h.dim();
        let cm = c.matrix();
        let g = h.matrix() * c64(0.0, -1.0) - cm.adjoint() * cm * c64(0.5, 0.0);
        let closed = cm.iter().all(|z| z.norm() == 0.0);
        Self {
            g: CsrOp::from_dense(&g),
            c: (!closed).then(|| CsrOp::from_dense(cm)),
            y: CMatrix::zeros(d, d),
            z: CMatrix::zeros(d, d),
        }
    }

    /// `out = L(x)`.
    pub(crate) fn apply(&mut self, x: &CMatrix, out: &mut CMatrix) {
        let d = x.nrows();
        self.g.apply_columns(x, &mut self.y);
        if let Some(c) = &self.c {
            c.apply_columns(x, &mut self.z);
            self.z.adjoint_mut();
            c.apply_columns(&self.z, out);
        } else {
            out.fill(C64::new(0.0, 0.0));
        }
        for j in 0..d {
            for i in 0..d {
                out[(i, j)] += self.y[(i, j)] + self.y[(j, i)].conj();
            }
        }
    }
}

/// One RK4 step of size `h` in place. `scratch` holds two `d×d` buffers.
pub(crate) fn rk4_step(gen: &mut Generator, rho: &mut CMatrix, h: f64, scratch: &mut [CMatrix; 2]) {
    let [term, next] = scratch;
    term.copy_from(rho);
    for k in 1..=4 {
        gen.apply(term, next);
        let s = c64(h / k as f64, 0.0);
        for (t, n) in term.iter_mut().zip(next.iter()) {
            *t = n * s;
        }
        *rho += &*term;
    }
}

enum Engine {
    Closed {
        prop: Propagator,
        psi: Vec<C64>,
        next: Vec<C64>,
    },
    Open {
        gen: Generator,
        scratch: [CMatrix; 2],
    },
}

impl Engine {
    /// Advance by `h`; returns the trace (or squared-norm) drift before any
    /// renormalization. The open engine updates `rho` in place; the closed
    /// engine leaves it to be rebuilt at the sampling time.
    fn step(&mut self, rho: &mut CMatrix, h: f64, repair: bool) -> f64 {
        match self {
            Engine::Closed { prop, psi, next } => {
                prop.rk4(psi, next, h, C64::default(), 0.0);
                std::mem::swap(psi, next);
                let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                let drift = (n2 - 1.0).abs();
                if drift > TRACE_RENORMALIZE {
                    let s = 1.0 / n2.sqrt();
                    psi.iter_mut().for_each(|z| *z *= s);
                }
                drift
            }
            Engine::Open { gen, scratch } => {
                rk4_step(gen, rho, h, scratch);
                if repair {
                    hermitize(rho);
                }
                let tr = trace(rho).re;
                let drift = (tr - 1.0).abs();
                if drift > TRACE_RENORMALIZE && drift.is_finite() {
                    *rho /= c64(tr, 0.0);
                }
                drift
            }
        }
    }
}

/// Indices of basis states with one of the two highest Fock levels occupied.
pub(crate) fn top_fock_indices(model: &ModelInstance) -> Vec<usize> {
    let Some(f) = model.layout.fock_index() else {
        return Vec::new();
    };
    let cut = model.layout.dims()[f].saturating_sub(2).max(1);
    (0..model.dim())
        .filter(|&g| model.layout.digits_of(g)[f] >= cut)
        .collect()
}

fn check_positivity(rho: &CMatrix, time: f64) -> Result<()> {
    let d = rho.nrows();
    let shifted = rho + CMatrix::identity(d, d) * c64(-POSITIVITY_ABORT, 0.0);
    if shifted.cholesky().is_some() {
        return Ok(());
    }
    let min = hermitian_eigenvalues(rho)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if min < POSITIVITY_ABORT {
        Err(Error::Positivity {
            time,
            min_eigenvalue: min,
        })
    } else {
        Ok(())
    }
}

/// Integrate the master equation and sample the state at `opts.sampling_times`.
pub fn evolve_unconditional(model: &ModelInstance, opts: &IntegratorOptions) -> Result<UnconditionalSeries> {
    opts.validate()?;
    let tracer = PartialTrace::new(&model.layout, &model.battery)?;
    let top = top_fock_indices(model);
    let d = model.dim();
    let psi0 = model.initial_state.amplitudes();
    let mut rho: CMatrix = psi0 * psi0.adjoint();
    // Without a jump operator the state stays pure; propagate the vector.
    let mut engine = if model.is_closed() {
        Engine::Closed {
            prop: Propagator::new(model),
            psi: psi0.as_slice().to_vec(),
            next: vec![C64::default(); d],
        }
    } else {
        Engine::Open {
            gen: Generator::new(&model.h_total, &model.jump_op),
            scratch: [CMatrix::zeros(d, d), CMatrix::zeros(d, d)],
        }
    };

    let n = opts.sampling_times.len();
    let mut states = Vec::with_capacity(if opts.keep_states { n } else { 0 });
    let mut battery = Vec::with_capacity(n);
    let mut max_drift: f64 = 0.0;
    let mut max_top: f64 = 0.0;

    let mut record = |rho: &CMatrix, states: &mut Vec<DensityOp>, battery: &mut Vec<DensityOp>| {
        let pop: f64 = top.iter().map(|&g| rho[(g, g)].re).sum();
        max_top = max_top.max(pop);
        battery.push(DensityOp::from_raw(tracer.apply_matrix(rho), tracer.reduced_layout().clone()));
        if opts.keep_states {
            states.push(DensityOp::from_raw(rho.clone(), model.layout.clone()));
        }
    };
    record(&rho, &mut states, &mut battery);

    let mut t = 0.0;
    for (idx, (steps, h)) in opts.intervals().into_iter().enumerate() {
        for _ in 0..steps {
            t += h;
            let drift = engine.step(&mut rho, h, opts.hermitize);
            max_drift = max_drift.max(drift);
            if drift > TRACE_ABORT || !drift.is_finite() {
                return Err(Error::TraceDrift { time: t, drift });
            }
        }
        let ts = opts.sampling_times[idx + 1];
        match &engine {
            Engine::Closed { psi, .. } => {
                let v = CVector::from_column_slice(psi);
                rho = &v * v.adjoint();
            }
            Engine::Open { .. } => check_positivity(&rho, ts)?,
        }
        record(&rho, &mut states, &mut battery);
    }

    let metrics = WorkMetrics::from_states(
        &opts.sampling_times,
        &battery,
        &model.h_battery,
        &model.h_battery_spectrum,
    )?;
    if max_top > 1e-6 {
        log::warn!(
            "Fock cutoff: top-two-level population reached {max_top:e} (> 1e-6)"
        );
    }
    Ok(UnconditionalSeries {
        times: opts.sampling_times.clone(),
        states,
        reduced_battery: battery,
        metrics,
        max_trace_drift: max_drift,
        max_top_fock_population: max_top,
    })
}

/// Outcome of re-running with half the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compare battery energy, ergotropy and purity at `dt` and `dt/2`.
pub fn step_halving_check(model: &ModelInstance, opts: &IntegratorOptions) -> Result<StepCheck> {
    let mut coarse_opts = opts.clone();
    coarse_opts.keep_states = false;
    let coarse = evolve_unconditional(model, &coarse_opts)?;
    let fine = evolve_unconditional(model, &coarse_opts.halved())?;
    let pairs = [
        (&coarse.metrics.energy, &fine.metrics.energy),
        (&coarse.metrics.ergotropy, &fine.metrics.ergotropy),
        (&coarse.metrics.purity, &fine.metrics.purity),
    ];
    let max_deviation = pairs
        .iter()
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok(StepCheck {
        max_deviation,
        tolerance: opts.tolerance,
        passed: max_deviation < opts.tolerance,
    })
}
