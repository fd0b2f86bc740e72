//! Path simulation of the stochastic food chain.
//!
//! The SDE `dX_i = X_i f_i(X) dt + X_i dE_i` with `E = Γᵀ B` is integrated in
//! log coordinates `Y = ln X`, where Itô's formula gives
//! `dY_i = (f_i(e^Y) - σ_ii/2) dt + dE_i`. The noise is additive there, so
//! Euler-Maruyama has strong order 1 and positivity of `X` is structural.
//! Zero noise reduces to the deterministic chain, which also has a classical
//! RK4 integrator here for cross-checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{FoodChain, NoiseModel};
use crate::error::{Error, Result};
use crate::rng::NormalStream;
use crate::stats::{EnsembleStats, PathAccumulator, PathSummary};

/// Log-states above this overflow `exp`.
pub const LOG_OVERFLOW: f64 = 709.0;
/// Cap on the number of recorded samples chosen by [`SimConfig::new`].
pub const MAX_DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub record_stride: usize,
    pub x0: Vec<f64>,
}

impl SimConfig {
    /// Defaults: `dt = 1e-3`, burn-in `0.1 t_end`, stride keeping at most 10⁶ samples.
    pub fn new(x0: Vec<f64>, t_end: f64, seed: u64) -> Self {
        Self::with_dt(x0, 1e-3, t_end, seed)
    }

    pub fn with_dt(x0: Vec<f64>, dt: f64, t_end: f64, seed: u64) -> Self {
        let mut cfg = SimConfig {
            dt,
            t_end,
            burn_in: 0.1 * t_end,
            seed,
            record_stride: 1,
            x0,
        };
        cfg.record_stride = cfg.default_stride();
        cfg
    }

    /// Smallest stride that keeps the recorded sample count at most 10⁶.
    pub fn default_stride(&self) -> usize {
        if !(self.dt > 0.0 && self.t_end > 0.0) {
            return 1;
        }
        let (k_burn, n_steps) = self.step_range();
        let span = n_steps.saturating_sub(k_burn) + 1;
        span.div_ceil(MAX_DEFAULT_SAMPLES).max(1)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.dt > self.t_end {
            return bad("dt must not exceed t_end");
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            return bad("burn_in must lie in [0, t_end)");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch {
                what: "x0",
                expected: n,
                actual: self.x0.len(),
            });
        }
        if self.x0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("x0 must be strictly positive");
        }
        let (k_burn, n_steps) = self.step_range();
        if k_burn >= n_steps {
            return bad("burn_in leaves no steps to record");
        }
        Ok(())
    }

    /// `(first recorded step, total steps)`; step `k` is at time `k·dt`.
    pub fn step_range(&self) -> (usize, usize) {
        let n_steps = (self.t_end / self.dt).round() as usize;
        let k_burn = (self.burn_in / self.dt).round() as usize;
        (k_burn, n_steps)
    }
}

/// Recorded samples of one path, after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub times: Vec<f64>,
    /// Row-major `samples × n`; may underflow to 0 for species far below
    /// `e^-745`, in which case `log_states` still carries the value.
    pub states: Vec<f64>,
    /// Row-major `samples × n`, the integrated `Y = ln X`.
    pub log_states: Vec<f64>,
    /// `(1/(T-t0)) ∫ (f_k(X) - σ_kk/2) dt` over every integration step after burn-in.
    pub drift_average: Vec<f64>,
    /// `(E_k(T) - E_k(t0)) / (T - t0)`.
    pub noise_average: Vec<f64>,
}

impl Trajectory {
    fn with_capacity(n: usize, samples: usize) -> Self {
        Trajectory {
            n,
            times: Vec::with_capacity(samples),
            states: Vec::with_capacity(samples * n),
            log_states: Vec::with_capacity(samples * n),
            drift_average: vec![0.0; n],
            noise_average: vec![0.0; n],
        }
    }

    fn push_log(&mut self, t: f64, y: &[f64]) {
        self.times.push(t);
        self.log_states.extend_from_slice(y);
        self.states.extend(y.iter().map(|v| v.exp()));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State vector of sample `s`.
    pub fn state(&self, s: usize) -> &[f64] {
        &self.states[s * self.n..(s + 1) * self.n]
    }

    pub fn log_state(&self, s: usize) -> &[f64] {
        &self.log_states[s * self.n..(s + 1) * self.n]
    }

    /// Samples of species `k` (1-based).
    pub fn species(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().skip(k - 1).step_by(self.n).copied()
    }

    pub fn log_species(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.log_states.iter().skip(k - 1).step_by(self.n).copied()
    }
}

/// Per-capita growth rates `f_i(x)` of the food chain.
pub fn drift(chain: &FoodChain, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; chain.n()];
    drift_into(chain, x, &mut out);
    out
}

fn drift_into(chain: &FoodChain, x: &[f64], out: &mut [f64]) {
    let n = chain.n();
    for i in 1..=n {
        let mut f = if i == 1 {
            chain.a10() - chain.a11() * x[0]
        } else {
            -chain.death(i) + chain.prey_on(i) * x[i - 2]
        };
        if i < n {
            f -= chain.preyed_by(i) * x[i];
        }
        out[i - 1] = f;
    }
}

/// Precomputed per-step quantities for the log-space scheme.
struct LogStepper<'a> {
    chain: &'a FoodChain,
    n: usize,
    /// `Γᵀ`, row-major.
    gamma_t: Vec<f64>,
    half_var: Vec<f64>,
    noisy: bool,
    x: Vec<f64>,
    f: Vec<f64>,
}

impl<'a> LogStepper<'a> {
    fn new(chain: &'a FoodChain, noise: &NoiseModel) -> Result<Self> {
        let n = chain.n();
        if noise.dim() != n {
            return Err(Error::DimensionMismatch {
                what: "noise dimension",
                expected: n,
                actual: noise.dim(),
            });
        }
        let gamma = match noise.gamma() {
            Some(g) => g.clone(),
            None => crate::chain::factor_noise(noise.clone())?
                .gamma()
                .unwrap()
                .clone(),
        };
        let mut gamma_t = vec![0.0; n * n];
        for i in 0..n {
            for r in 0..n {
                gamma_t[i * n + r] = gamma[(r, i)];
            }
        }
        Ok(LogStepper {
            chain,
            n,
            noisy: gamma_t.iter().any(|&v| v != 0.0),
            gamma_t,
            half_var: (1..=n).map(|i| noise.variance(i) / 2.0).collect(),
            x: vec![0.0; n],
            f: vec![0.0; n],
        })
    }

    /// Advances `y` in place. Writes the drift part `(f - σ/2)·dt` to `drift`
    /// and the noise part `Γᵀz√dt` to `shock`. Returns the 1-based index of a
    /// species whose log-state overflowed.
    fn step(
        &mut self,
        y: &mut [f64],
        dt: f64,
        z: &[f64],
        drift: &mut [f64],
        shock: &mut [f64],
    ) -> Option<usize> {
        let n = self.n;
        for (xi, yi) in self.x.iter_mut().zip(y.iter()) {
            *xi = yi.exp();
        }
        drift_into(self.chain, &self.x, &mut self.f);
        let sq = dt.sqrt();
        for i in 0..n {
            drift[i] = (self.f[i] - self.half_var[i]) * dt;
            shock[i] = if self.noisy {
                let row = &self.gamma_t[i * n..(i + 1) * n];
                row.iter().zip(z).map(|(g, zr)| g * zr).sum::<f64>() * sq
            } else {
                0.0
            };
            y[i] += drift[i] + shock[i];
        }
        y.iter()
            .position(|v| !(v.is_finite() && *v <= LOG_OVERFLOW))
            .map(|i| i + 1)
    }
}

/// One Euler-Maruyama step of the log dynamics with the supplied standard
/// normal draws `z`. A blow-up reports `time = dt`, the offset within the step.
pub fn step_log_em(
    chain: &FoodChain,
    noise: &NoiseModel,
    y: &[f64],
    dt: f64,
    z: &[f64],
) -> Result<Vec<f64>> {
    let n = chain.n();
    if y.len() != n || z.len() != n {
        return Err(Error::DimensionMismatch {
            what: "state or draws",
            expected: n,
            actual: if y.len() != n { y.len() } else { z.len() },
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("log-state"));
    }
    let mut stepper = LogStepper::new(chain, noise)?;
    let mut out = y.to_vec();
    let (mut d, mut s) = (vec![0.0; n], vec![0.0; n]);
    match stepper.step(&mut out, dt, z, &mut d, &mut s) {
        Some(species) => Err(Error::BlowUp { species, time: dt }),
        None => Ok(out),
    }
}

/// Integrates one path, handing each recorded `(t, y)` to `record`.
/// Returns the post-burn-in drift and noise averages.
fn integrate(
    chain: &FoodChain,
    noise: &NoiseModel,
    config: &SimConfig,
    stream: u64,
    mut record: impl FnMut(f64, &[f64]),
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = chain.n();
    config.validate(n)?;
    let mut stepper = LogStepper::new(chain, noise)?;
    let mut rng = NormalStream::new(config.seed, stream);
    let (k_burn, n_steps) = config.step_range();
    let dt = config.dt;

    let mut y: Vec<f64> = config.x0.iter().map(|v| v.ln()).collect();
    let mut z = vec![0.0; n];
    let (mut d, mut s) = (vec![0.0; n], vec![0.0; n]);
    let mut drift_sum = vec![0.0; n];
    let mut noise_sum = vec![0.0; n];

    for k in 0..=n_steps {
        if k >= k_burn && ((k - k_burn) % config.record_stride == 0 || k == n_steps) {
            record(k as f64 * dt, &y);
        }
        if k == n_steps {
            break;
        }
        if stepper.noisy {
            rng.fill(&mut z);
        }
        if let Some(species) = stepper.step(&mut y, dt, &z, &mut d, &mut s) {
            return Err(Error::BlowUp {
                species,
                time: (k + 1) as f64 * dt,
            });
        }
        if k >= k_burn {
            for i in 0..n {
                drift_sum[i] += d[i];
                noise_sum[i] += s[i];
            }
        }
    }
    let span = (n_steps - k_burn) as f64 * dt;
    Ok((
        drift_sum.iter().map(|v| v / span).collect(),
        noise_sum.iter().map(|v| v / span).collect(),
    ))
}

/// Simulates one path with the config's seed (stream 0).
pub fn simulate_path(
    chain: &FoodChain,
    noise: &NoiseModel,
    config: &SimConfig,
) -> Result<Trajectory> {
    simulate_stream(chain, noise, config, 0)
}

/// Simulates path number `stream` of the ensemble seeded by `config.seed`.
pub fn simulate_stream(
    chain: &FoodChain,
    noise: &NoiseModel,
    config: &SimConfig,
    stream: u64,
) -> Result<Trajectory> {
    config.validate(chain.n())?;
    let (k_burn, n_steps) = config.step_range();
    let cap = (n_steps.saturating_sub(k_burn)) / config.record_stride.max(1) + 2;
    let mut traj = Trajectory::with_capacity(chain.n(), cap);
    let (drift_avg, noise_avg) =
        integrate(chain, noise, config, stream, |t, y| traj.push_log(t, y))?;
    traj.drift_average = drift_avg;
    traj.noise_average = noise_avg;
    Ok(traj)
}

/// Streaming summary of path `stream` without storing the trajectory.
pub fn summarize_stream(
    chain: &FoodChain,
    noise: &NoiseModel,
    config: &SimConfig,
    stream: u64,
) -> Result<PathSummary> {
    let checkpoint = config.burn_in + 0.5 * (config.t_end - config.burn_in);
    let mut acc = PathAccumulator::new(chain.n(), checkpoint);
    let (drift_avg, noise_avg) = integrate(chain, noise, config, stream, |t, y| acc.push(t, y))?;
    acc.finish(stream, drift_avg, noise_avg)
}

/// Runs `n_paths` independent paths in parallel on the current rayon pool and
/// reduces them in path order, so the result does not depend on thread count.
pub fn simulate_ensemble(
    chain: &FoodChain,
    noise: &NoiseModel,
    config: &SimConfig,
    n_paths: usize,
) -> Result<EnsembleStats> {
    if n_paths == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    config.validate(chain.n())?;
    let results: Vec<Result<PathSummary>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| summarize_stream(chain, noise, config, p))
        .collect();
    Ok(EnsembleStats::reduce(chain.n(), config, results))
}

/// Classical RK4 on the deterministic chain in the original coordinates.
pub fn simulate_ode(chain: &FoodChain, x0: &[f64], dt: f64, t_end: f64) -> Result<Trajectory> {
    let n = chain.n();
    let cfg = SimConfig {
        dt,
        t_end,
        burn_in: 0.0,
        seed: 0,
        record_stride: 1,
        x0: x0.to_vec(),
    };
    cfg.validate(n)?;
    let stride = cfg.default_stride();
    let (_, n_steps) = cfg.step_range();

    let rhs = |x: &[f64], out: &mut [f64]| {
        drift_into(chain, x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o *= xi;
        }
    };
    let mut traj = Trajectory::with_capacity(n, n_steps / stride + 2);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let push = |traj: &mut Trajectory, t: f64, x: &[f64]| {
        traj.times.push(t);
        traj.states.extend_from_slice(x);
        traj.log_states.extend(x.iter().map(|v| v.ln()));
    };
    for k in 0..=n_steps {
        if k % stride == 0 || k == n_steps {
            push(&mut traj, k as f64 * dt, &x);
        }
        if k == n_steps {
            break;
        }
        rhs(&x, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        rhs(&tmp, &mut k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(i) = x
            .iter()
            .position(|v| !(v.is_finite() && v.ln() <= LOG_OVERFLOW))
        {
            return Err(Error::BlowUp {
                species: i + 1,
                time: (k + 1) as f64 * dt,
            });
        }
    }
    let span = n_steps as f64 * dt;
    let last = traj.len() - 1;
    traj.drift_average = (0..n)
        .map(|i| (traj.log_state(last)[i] - traj.log_state(0)[i]) / span)
        .collect();
    Ok(traj)
}
