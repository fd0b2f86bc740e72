//! `sweep`: classification over a one-parameter grid, as CSV.

use std::cmp::Ordering;

use foodchain::io::fmt_f64;
use foodchain::{classify, validate_chain, ModelConfig, NoiseModel, RawChain};
use serde_json::json;

use crate::commands::{core_err, emit};
use crate::config::load_model;
use crate::manifest::ManifestBuilder;
use crate::{CliError, SweepArgs};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Param {
    /// Diagonal noise variance `σ_ii`; correlations with other species are kept.
    Sigma(usize),
    /// Chain coefficient `a_{i,k}` (`k = 0` for growth/death rates).
    Coef(usize, usize),
}

fn parse_indices(s: &str) -> Option<(usize, usize)> {
    if let Some((a, b)) = s.split_once(',') {
        return Some((a.trim().parse().ok()?, b.trim().parse().ok()?));
    }
    if s.len() == 2 && s.bytes().all(|b| b.is_ascii_digit()) {
        let d: Vec<usize> = s.bytes().map(|b| (b - b'0') as usize).collect();
        return Some((d[0], d[1]));
    }
    None
}

fn parse_param(name: &str, n: usize) -> Result<Param, CliError> {
    let unknown = || {
        CliError::Input(format!(
            "unknown parameter {name:?} for a chain of length {n}"
        ))
    };
    let (p, rest) = if let Some(r) = name.strip_prefix("sigma_") {
        (true, r)
    } else if let Some(r) = name.strip_prefix("a_") {
        (false, r)
    } else if let Some(r) = name.strip_prefix('a') {
        (false, r)
    } else {
        return Err(unknown());
    };
    let rest = rest.trim_start_matches('{').trim_end_matches('}');
    let (i, k) = parse_indices(rest).ok_or_else(unknown)?;
    if i == 0 || i > n {
        return Err(unknown());
    }
    if p {
        return if i == k {
            Ok(Param::Sigma(i))
        } else {
            Err(unknown())
        };
    }
    let ok = match (i, k) {
        (1, 0) | (1, 1) => true,
        (_, 0) => i >= 2,
        _ => (k + 1 == i) || (k == i + 1 && k <= n),
    };
    if ok {
        Ok(Param::Coef(i, k))
    } else {
        Err(unknown())
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::Input(format!("--grid {spec:?}: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected lo:hi:steps"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| bad("lo is not a number"))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| bad("hi is not a number"))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| bad("steps is not a count"))?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(bad("bounds must be finite"));
    }
    match steps {
        0 => Err(bad("grid has zero points")),
        1 => Ok(vec![lo]),
        s => Ok((0..s)
            .map(|k| {
                if k == s - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (s - 1) as f64
                }
            })
            .collect()),
    }
}

fn set_coef(raw: &mut RawChain, i: usize, k: usize, v: f64) {
    match (i, k) {
        (1, 0) => raw.a10 = v,
        (1, 1) => raw.a11 = v,
        (_, 0) => raw.death[i - 2] = v,
        _ if k + 1 == i => raw.prey_on[i - 2] = v,
        _ => raw.preyed_by[i - 1] = v,
    }
}

/// Direction shared by every component, comparing `cur` to `prev`.
fn trend(prev: &[f64], cur: &[f64]) -> &'static str {
    let mut seen: Option<Ordering> = None;
    for (a, b) in prev.iter().zip(cur) {
        let o = match b.partial_cmp(a) {
            Some(o) => o,
            None => return "mixed",
        };
        match seen {
            None => seen = Some(o),
            Some(s) if s == o => {}
            _ => return "mixed",
        }
    }
    match seen {
        Some(Ordering::Less) => "decreasing",
        Some(Ordering::Greater) => "increasing",
        _ => "constant",
    }
}

fn sweep_csv(
    cfg: &ModelConfig,
    noise: &NoiseModel,
    param: Param,
    grid: &[f64],
) -> Result<String, CliError> {
    let n = cfg.n;
    let mut out = String::from("value");
    for j in 1..=n {
        out.push_str(&format!(",kappa_tilde_{j}"));
    }
    for j in 1..=n {
        out.push_str(&format!(",invasion_{j}"));
    }
    out.push_str(",j_star,monotone_in_j,kappa_trend,invasion_trend\n");

    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for &v in grid {
        let mut raw = cfg.raw_chain();
        let mut nz = noise.clone();
        match param {
            Param::Sigma(i) => {
                nz = noise
                    .with_variance(i, v)
                    .map_err(|e| CliError::Input(format!("sigma_{i}{i} = {v}: {e}")))?
            }
            Param::Coef(i, k) => set_coef(&mut raw, i, k, v),
        }
        let chain = validate_chain(&raw).map_err(|e| CliError::Input(format!("value {v}: {e}")))?;
        let report = classify(&chain, &nz).map_err(core_err)?;
        let kt = &report.kappa_tilde;
        let monotone = kt.windows(2).all(|w| w[1] < w[0]);
        let (kt_trend, inv_trend) = match &prev {
            Some((pk, pi)) => (trend(pk, kt), trend(pi, &report.invasion)),
            None => ("", ""),
        };
        out.push_str(&fmt_f64(v));
        for x in kt.iter().chain(&report.invasion) {
            out.push(',');
            out.push_str(&fmt_f64(*x));
        }
        out.push_str(&format!(
            ",{},{monotone},{kt_trend},{inv_trend}\n",
            report.j_star
        ));
        prev = Some((kt.clone(), report.invasion.clone()));
    }
    Ok(out)
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let (cfg, model) = load_model(&args.config)?;
    let param = parse_param(&args.param, cfg.n)?;
    let grid = parse_grid(&args.grid)?;
    let manifest = ManifestBuilder::start("sweep", &args.config)
        .parameters(json!({ "param": args.param, "grid": grid }));
    let csv = sweep_csv(&cfg, &model.noise, param, &grid)?;
    emit(&csv, args.out.as_deref(), manifest)
}
