//! `verify`: classify, simulate, and test the simulation against the verdicts.
//!
//! Checks, per species:
//! - persistent: ensemble time average within `3·stderr + abs_tol` of the
//!   boundary equilibrium `x^{(j*)}` (or the `--expected` override);
//! - extinct (above `j*`): final time average below 5% of species `j*`'s
//!   and below its mid-horizon value;
//! - exponentially extinct (n = 2): ensemble log-growth within
//!   `max(3·stderr, 3·sqrt(σ_kk/T)) + abs_tol` of the predicted rate.
//!
//! Species with a critical verdict are reported but not checked.

use std::fs;

use foodchain::{classify, simulate_ensemble, ClassificationReport, EnsembleStats, Verdict};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{check_failures, core_err, emit, sim_config, to_json};
use crate::manifest::ManifestBuilder;
use crate::{CliError, VerifyArgs};

/// Extinct species must end below this fraction of the last persistent one.
const EXTINCT_FRACTION: f64 = 0.05;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Expected {
    time_avg: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Check {
    species: usize,
    kind: &'static str,
    observed: f64,
    expected: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    passed: bool,
    checks: Vec<Check>,
    skipped: Vec<usize>,
    classification: &'a ClassificationReport,
    ensemble: serde_json::Value,
}

fn build_checks(
    report: &ClassificationReport,
    stats: &EnsembleStats,
    expected: &[f64],
    sigma_diag: &[f64],
    abs_tol: f64,
) -> (Vec<Check>, Vec<usize>) {
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    let js = report.j_star;
    let span = stats.t_end - stats.t_burn;
    let mid = &stats.checkpoints[0];
    let scale = if js > 0 {
        stats.time_avg_mean[js - 1]
    } else {
        f64::INFINITY
    };

    for k in 1..=report.n {
        let i = k - 1;
        match report.verdict(k) {
            Verdict::Critical => skipped.push(k),
            Verdict::Persistent => {
                let obs = stats.time_avg_mean[i];
                let tol = 3.0 * stats.time_avg_stderr[i] + abs_tol;
                checks.push(Check {
                    species: k,
                    kind: "time_average",
                    observed: obs,
                    expected: expected[i],
                    tolerance: tol,
                    passed: (obs - expected[i]).abs() <= tol,
                });
            }
            Verdict::ExtinctExponentially { rate } => {
                let obs = stats.log_growth[i];
                let band =
                    (3.0 * stats.log_growth_stderr[i]).max(3.0 * (sigma_diag[i] / span).sqrt());
                let tol = band + abs_tol;
                checks.push(Check {
                    species: k,
                    kind: "log_growth",
                    observed: obs,
                    expected: rate,
                    tolerance: tol,
                    passed: (obs - rate).abs() <= tol,
                });
            }
            Verdict::WeakExtinction => {}
        }
        if k > js && report.verdict(k) != Verdict::Critical {
            let obs = stats.time_avg_mean[i];
            if scale.is_finite() {
                let bound = EXTINCT_FRACTION * scale + abs_tol;
                checks.push(Check {
                    species: k,
                    kind: "extinct_fraction",
                    observed: obs,
                    expected: 0.0,
                    tolerance: bound,
                    passed: obs < bound,
                });
            }
            let before = mid.time_avg_mean[i];
            checks.push(Check {
                species: k,
                kind: "extinct_decreasing",
                observed: obs,
                expected: before,
                tolerance: abs_tol,
                passed: obs < before + abs_tol,
            });
        }
    }
    (checks, skipped)
}

pub fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let (_, model) = crate::config::load_model(&args.config)?;
    let cfg = sim_config(&model, &args.sim, args.t_end)?;
    let manifest = ManifestBuilder::start("verify", &args.config)
        .parameters(json!({
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "burn_in": cfg.burn_in,
            "record_stride": cfg.record_stride,
            "x0": cfg.x0,
            "paths": args.paths,
            "abs_tol": args.abs_tol,
            "expected": args.expected.as_ref().map(|p| p.display().to_string()),
        }))
        .seed(cfg.seed);

    let report = classify(&model.chain, &model.noise).map_err(core_err)?;
    let n = report.n;
    let mut expected = vec![0.0; n];
    expected[..report.j_star].copy_from_slice(&report.equilibrium);
    if let Some(path) = &args.expected {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let e: Expected = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if e.time_avg.len() != n {
            return Err(CliError::Input(format!(
                "{}: time_avg has {} entries, expected {n}",
                path.display(),
                e.time_avg.len()
            )));
        }
        expected = e.time_avg;
    }

    let stats = simulate_ensemble(&model.chain, &model.noise, &cfg, args.paths as usize)
        .map_err(core_err)?;
    check_failures(&stats)?;

    let sigma_diag: Vec<f64> = (1..=n).map(|i| model.noise.variance(i)).collect();
    let (checks, skipped) = build_checks(&report, &stats, &expected, &sigma_diag, args.abs_tol);
    let passed = checks.iter().all(|c| c.passed);
    let out = VerifyReport {
        passed,
        checks,
        skipped,
        classification: &report,
        ensemble: json!({
            "n_paths": stats.n_paths,
            "t_burn": stats.t_burn,
            "t_end": stats.t_end,
            "time_avg_mean": stats.time_avg_mean,
            "time_avg_stderr": stats.time_avg_stderr,
            "log_growth": stats.log_growth,
            "log_growth_stderr": stats.log_growth_stderr,
            "checkpoints": stats.checkpoints,
        }),
    };
    emit(&to_json(&out)?, args.out.as_deref(), manifest)?;
    if passed {
        return Ok(());
    }
    let failed: Vec<String> = out
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "species {} {}: observed {}, expected {}, tolerance {}",
                c.species, c.kind, c.observed, c.expected, c.tolerance
            )
        })
        .collect();
    Err(CliError::Verification(format!(
        "{} check(s) failed\n  {}",
        failed.len(),
        failed.join("\n  ")
    )))
}
