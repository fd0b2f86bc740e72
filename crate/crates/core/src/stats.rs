//! Long-run diagnostics of simulated paths: Cesàro time averages, log-growth
//! rates, occupation measures and drift-based Lyapunov estimates.
//!
//! All quantities use the samples recorded after burn-in. Time integrals use
//! the trapezoid rule on the recorded grid; occupation uses left endpoints so
//! masses are additive under box splitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sde::{SimConfig, Trajectory};

/// Trapezoid time average of species `k` (1-based) over the recorded samples.
pub fn time_average(traj: &Trajectory, k: usize) -> Result<f64> {
    check_species(traj, k)?;
    if traj.len() < 2 {
        return traj.species(k).next().ok_or(Error::EmptyTrajectory);
    }
    let mut integral = 0.0;
    let mut horizon = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (t, x) in traj.times.iter().copied().zip(traj.species(k)) {
        if let Some((tp, xp)) = prev {
            let h = t - tp;
            integral += 0.5 * (xp + x) * h;
            horizon += h;
        }
        prev = Some((t, x));
    }
    Ok(integral / horizon)
}

fn check_species(traj: &Trajectory, k: usize) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if k == 0 || k > traj.n {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: traj.n,
        });
    }
    Ok(())
}

/// `(ln X_k(T) - ln X_k(t0)) / (T - t0)` between the first and last recorded samples.
pub fn log_growth_rate(traj: &Trajectory, k: usize) -> Result<f64> {
    check_species(traj, k)?;
    if traj.len() < 2 {
        return Err(Error::EmptyTrajectory);
    }
    let last = traj.len() - 1;
    let span = traj.times[last] - traj.times[0];
    Ok((traj.log_state(last)[k - 1] - traj.log_state(0)[k - 1]) / span)
}

/// Axis-aligned half-open box `[lo_i, hi_i)` in state space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Region { lo, hi }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.lo.len() != n || self.hi.len() != n {
            return Err(Error::DimensionMismatch {
                what: "box dimension",
                expected: n,
                actual: self.lo.len().min(self.hi.len()),
            });
        }
        for (axis, (&lo, &hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            // negated so that NaN bounds are rejected too
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(lo < hi) {
                return Err(Error::MalformedBox {
                    axis: axis + 1,
                    lo,
                    hi,
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *lo <= *v && *v < *hi)
    }
}

/// Fraction of the horizon spent in each box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationMeasure {
    pub boxes: Vec<Region>,
    pub mass: Vec<f64>,
    pub horizon: f64,
}

impl OccupationMeasure {
    /// Time fraction outside every box (boxes are assumed disjoint).
    pub fn residual(&self) -> f64 {
        1.0 - self.mass.iter().sum::<f64>()
    }
}

/// Occupation measure of `boxes`; sample `s` stands for `[t_s, t_{s+1})`.
pub fn occupation(traj: &Trajectory, boxes: &[Region]) -> Result<OccupationMeasure> {
    for b in boxes {
        b.validate(traj.n)?;
    }
    if traj.len() < 2 {
        return Err(Error::EmptyTrajectory);
    }
    let mut time_in = vec![0.0; boxes.len()];
    let mut horizon = 0.0;
    for s in 0..traj.len() - 1 {
        let h = traj.times[s + 1] - traj.times[s];
        horizon += h;
        let x = traj.state(s);
        for (acc, b) in time_in.iter_mut().zip(boxes) {
            if b.contains(x) {
                *acc += h;
            }
        }
    }
    Ok(OccupationMeasure {
        boxes: boxes.to_vec(),
        mass: time_in.iter().map(|t| t / horizon).collect(),
        horizon,
    })
}

/// Ensemble mean of the per-path drift averages `(1/t)∫(f_k - σ_kk/2) dt`.
pub fn lyapunov_estimate(ensemble: &EnsembleStats, k: usize) -> Result<f64> {
    if ensemble.n_paths == ensemble.failed_paths {
        return Err(Error::EmptyTrajectory);
    }
    ensemble
        .lyapunov
        .get(k.wrapping_sub(1))
        .copied()
        .ok_or(Error::IndexOutOfRange {
            index: k,
            max: ensemble.lyapunov.len(),
        })
}

/// Per-path results, computed while integrating.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub path: u64,
    pub time_avg: Vec<f64>,
    /// Time average up to the mid-horizon checkpoint.
    pub checkpoint_avg: Vec<f64>,
    pub log_growth: Vec<f64>,
    pub drift_average: Vec<f64>,
    pub noise_average: Vec<f64>,
}

/// Streaming version of [`time_average`] and [`log_growth_rate`].
#[derive(Debug, Clone)]
pub struct PathAccumulator {
    checkpoint: f64,
    first: Option<(f64, Vec<f64>)>,
    prev_t: f64,
    prev_x: Vec<f64>,
    last_y: Vec<f64>,
    integral: Vec<f64>,
    horizon: f64,
    at_checkpoint: Option<(f64, Vec<f64>)>,
}

impl PathAccumulator {
    pub fn new(n: usize, checkpoint: f64) -> Self {
        PathAccumulator {
            checkpoint,
            first: None,
            prev_t: 0.0,
            prev_x: vec![0.0; n],
            last_y: vec![0.0; n],
            integral: vec![0.0; n],
            horizon: 0.0,
            at_checkpoint: None,
        }
    }

    /// Adds the log-state `y` recorded at time `t`.
    pub fn push(&mut self, t: f64, y: &[f64]) {
        if self.first.is_none() {
            self.first = Some((t, y.to_vec()));
        } else {
            let h = t - self.prev_t;
            for ((acc, prev), yi) in self.integral.iter_mut().zip(&self.prev_x).zip(y) {
                *acc += 0.5 * (prev + yi.exp()) * h;
            }
            self.horizon += h;
        }
        for (prev, yi) in self.prev_x.iter_mut().zip(y) {
            *prev = yi.exp();
        }
        self.last_y.copy_from_slice(y);
        self.prev_t = t;
        if self.at_checkpoint.is_none() && t >= self.checkpoint && self.horizon > 0.0 {
            let avg = self.integral.iter().map(|v| v / self.horizon).collect();
            self.at_checkpoint = Some((t, avg));
        }
    }

    pub fn finish(
        self,
        path: u64,
        drift_average: Vec<f64>,
        noise_average: Vec<f64>,
    ) -> Result<PathSummary> {
        let (t0, y0) = self.first.ok_or(Error::EmptyTrajectory)?;
        if self.horizon <= 0.0 {
            return Err(Error::EmptyTrajectory);
        }
        let span = self.prev_t - t0;
        let time_avg: Vec<f64> = self.integral.iter().map(|v| v / self.horizon).collect();
        Ok(PathSummary {
            path,
            checkpoint_avg: self
                .at_checkpoint
                .map(|(_, a)| a)
                .unwrap_or_else(|| time_avg.clone()),
            time_avg,
            log_growth: self
                .last_y
                .iter()
                .zip(&y0)
                .map(|(a, b)| (a - b) / span)
                .collect(),
            drift_average,
            noise_average,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFailure {
    pub path: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: f64,
    pub time_avg_mean: Vec<f64>,
    pub time_avg_stderr: Vec<f64>,
}

/// Ensemble means and standard errors over the successful paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub failed_paths: usize,
    pub failures: Vec<PathFailure>,
    pub t_burn: f64,
    pub t_end: f64,
    pub time_avg_mean: Vec<f64>,
    pub time_avg_stderr: Vec<f64>,
    /// Per-path mean of `ln X_k(T)/T` over the post-burn-in window.
    pub log_growth: Vec<f64>,
    pub log_growth_stderr: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub lyapunov_stderr: Vec<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub paths: Vec<PathSummary>,
}

/// Mean and standard error of the mean; stderr is 0 for a single value.
pub fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64 / n as f64).sqrt())
}

impl EnsembleStats {
    /// Reduces per-path results in path order.
    pub fn reduce(n: usize, config: &SimConfig, results: Vec<Result<PathSummary>>) -> Self {
        let n_paths = results.len();
        let mut paths = Vec::with_capacity(n_paths);
        let mut failures = Vec::new();
        for (p, r) in results.into_iter().enumerate() {
            match r {
                Ok(s) => paths.push(s),
                Err(e) => failures.push(PathFailure {
                    path: p as u64,
                    error: e.to_string(),
                }),
            }
        }
        let column = |pick: fn(&PathSummary) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
            (0..n)
                .map(|k| mean_stderr(paths.iter().map(move |p| pick(p)[k])))
                .unzip()
        };
        let (time_avg_mean, time_avg_stderr) = column(|p| &p.time_avg);
        let (log_growth, log_growth_stderr) = column(|p| &p.log_growth);
        let (lyapunov, lyapunov_stderr) = column(|p| &p.drift_average);
        let (cp_mean, cp_stderr) = column(|p| &p.checkpoint_avg);
        let (k_burn, n_steps) = config.step_range();
        let t_burn = k_burn as f64 * config.dt;
        let t_end = n_steps as f64 * config.dt;
        let cp_t = {
            // first recorded time at or after the midpoint
            let target = config.burn_in + 0.5 * (config.t_end - config.burn_in);
            let stride = config.record_stride;
            let k_mid = (k_burn..=n_steps)
                .step_by(stride)
                .chain(std::iter::once(n_steps))
                .find(|&k| k as f64 * config.dt >= target)
                .unwrap_or(n_steps);
            k_mid as f64 * config.dt
        };
        let final_checkpoint = Checkpoint {
            t: t_end,
            time_avg_mean: time_avg_mean.clone(),
            time_avg_stderr: time_avg_stderr.clone(),
        };
        EnsembleStats {
            n_paths,
            failed_paths: failures.len(),
            failures,
            t_burn,
            t_end,
            time_avg_mean,
            time_avg_stderr,
            log_growth,
            log_growth_stderr,
            lyapunov,
            lyapunov_stderr,
            checkpoints: vec![
                Checkpoint {
                    t: cp_t,
                    time_avg_mean: cp_mean,
                    time_avg_stderr: cp_stderr,
                },
                final_checkpoint,
            ],
            paths,
        }
    }

    pub fn successful_paths(&self) -> usize {
        self.n_paths - self.failed_paths
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(times: Vec<f64>, xs: Vec<f64>) -> Trajectory {
        Trajectory {
            n: 1,
            log_states: xs.iter().map(|v| v.ln()).collect(),
            states: xs,
            times,
            drift_average: vec![0.0],
            noise_average: vec![0.0],
        }
    }

    #[test]
    fn constant_path() {
        let t = traj((0..11).map(|i| i as f64 * 0.3).collect(), vec![2.5; 11]);
        assert!((time_average(&t, 1).unwrap() - 2.5).abs() < 4.0 * f64::EPSILON);
        let ones = traj(vec![0.0, 0.1, 0.35, 1.0], vec![1.0; 4]);
        assert_eq!(time_average(&ones, 1).unwrap(), 1.0);
    }

    #[test]
    fn linear_ramp() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let t = traj(ts.clone(), ts.iter().map(|v| v.max(1e-300)).collect());
        assert!((time_average(&t, 1).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_rate() {
        let ts: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let t = traj(ts.clone(), ts.iter().map(|s| (-0.7 * s).exp()).collect());
        assert!((log_growth_rate(&t, 1).unwrap() + 0.7).abs() < 1e-14);
    }

    #[test]
    fn empty_and_range_errors() {
        let t = traj(vec![], vec![]);
        assert_eq!(time_average(&t, 1), Err(Error::EmptyTrajectory));
        assert_eq!(log_growth_rate(&t, 1), Err(Error::EmptyTrajectory));
        let t = traj(vec![0.0, 1.0], vec![1.0, 1.0]);
        assert!(matches!(
            time_average(&t, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn occupation_whole_space_and_split() {
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let xs: Vec<f64> = (0..=20).map(|i| 0.1 + i as f64 * 0.05).collect();
        let t = traj(ts, xs);
        let all = occupation(&t, &[Region::new(vec![0.0], vec![10.0])]).unwrap();
        assert_eq!(all.mass, vec![1.0]);
        let parts = occupation(
            &t,
            &[
                Region::new(vec![0.0], vec![0.5]),
                Region::new(vec![0.5], vec![10.0]),
            ],
        )
        .unwrap();
        assert_eq!(parts.mass[0] + parts.mass[1], 1.0);
        assert!(parts.residual().abs() < 1e-15);
        assert!(matches!(
            occupation(&t, &[Region::new(vec![1.0], vec![1.0])]),
            Err(Error::MalformedBox { axis: 1, .. })
        ));
    }

    #[test]
    fn accumulator_matches_batch() {
        let ts: Vec<f64> = (0..=40).map(|i| 1.0 + i as f64 * 0.25).collect();
        let xs: Vec<f64> = ts.iter().map(|s| 1.0 + (0.3 * s).sin()).collect();
        let t = traj(ts.clone(), xs.clone());
        let mut acc = PathAccumulator::new(1, 6.0);
        for (s, x) in ts.iter().zip(&xs) {
            acc.push(*s, &[x.ln()]);
        }
        let sum = acc.finish(0, vec![0.0], vec![0.0]).unwrap();
        assert!((sum.time_avg[0] - time_average(&t, 1).unwrap()).abs() < 1e-14);
        assert!((sum.log_growth[0] - log_growth_rate(&t, 1).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr([3.0].into_iter()), (3.0, 0.0));
    }
}
