use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use foodchain::{classify, simulate_ensemble, simulate_stream, EnsembleStats, Model, SimConfig};
use serde_json::json;

use crate::config::load_model;
use crate::manifest::{resolve_seed, sidecar, ManifestBuilder};
use crate::{AnalyzeArgs, CliError, SimArgs, SimulateArgs};

/// Maps library errors onto exit-code classes.
pub fn core_err(e: foodchain::Error) -> CliError {
    use foodchain::Error as E;
    match e {
        E::SingularMatrix
        | E::NumericalBreakdown { .. }
        | E::BlowUp { .. }
        | E::FactorMismatch { .. }
        | E::NonFinite(_) => CliError::Numerical(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

pub fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    foodchain::io::to_json_pretty(v).map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `text` to `out` (plus a manifest sidecar) or to stdout.
pub fn emit(text: &str, out: Option<&Path>, manifest: ManifestBuilder) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            manifest.write(&sidecar(path), &[path.to_path_buf()])
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let manifest = ManifestBuilder::start("analyze", &args.config)
        .parameters(json!({ "strict": args.strict }));
    let (_, model) = load_model(&args.config)?;
    let report = classify(&model.chain, &model.noise).map_err(core_err)?;
    emit(&to_json(&report)?, args.out.as_deref(), manifest)?;
    if args.strict && report.critical {
        let species: Vec<String> = report
            .verdicts
            .iter()
            .filter(|v| v.verdict == foodchain::Verdict::Critical)
            .map(|v| v.species.to_string())
            .collect();
        return Err(CliError::Critical(format!(
            "kappa_tilde is zero within tolerance at j = {}",
            species.join(", ")
        )));
    }
    Ok(())
}

/// Builds a simulation config from the flags, defaulting `x0` to all ones.
pub fn sim_config(model: &Model, sim: &SimArgs, t_end: f64) -> Result<SimConfig, CliError> {
    let seed = resolve_seed(sim.seed)?;
    let x0 = model
        .x0
        .clone()
        .unwrap_or_else(|| vec![1.0; model.chain.n()]);
    let mut cfg = SimConfig::with_dt(x0, sim.dt, t_end, seed);
    if let Some(b) = sim.burn_in {
        cfg.burn_in = b;
    }
    cfg.record_stride = match sim.stride {
        Some(s) => s as usize,
        None => cfg.default_stride(),
    };
    cfg.validate(model.chain.n())
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

/// Fails with exit code 4 if any path blew up.
pub fn check_failures(stats: &EnsembleStats) -> Result<(), CliError> {
    if stats.failed_paths == 0 {
        return Ok(());
    }
    let list: Vec<String> = stats
        .failures
        .iter()
        .map(|f| format!("path {}: {}", f.path, f.error))
        .collect();
    Err(CliError::Numerical(format!(
        "{} of {} paths failed\n  {}",
        stats.failed_paths,
        stats.n_paths,
        list.join("\n  ")
    )))
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (_, model) = load_model(&args.config)?;
    let cfg = sim_config(&model, &args.sim, args.t_end)?;
    let manifest = ManifestBuilder::start("simulate", &args.config)
        .parameters(json!({
            "dt": cfg.dt,
            "t_end": cfg.t_end,
            "burn_in": cfg.burn_in,
            "record_stride": cfg.record_stride,
            "x0": cfg.x0,
            "paths": args.paths,
            "csv_paths": args.csv_paths,
        }))
        .seed(cfg.seed);

    fs::create_dir_all(&args.out)?;
    let stats = simulate_ensemble(&model.chain, &model.noise, &cfg, args.paths as usize)
        .map_err(core_err)?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let stats_path = args.out.join("stats.json");
    fs::write(&stats_path, to_json(&stats)?)?;
    outputs.push(stats_path);

    for p in 0..args.csv_paths.min(args.paths) {
        if stats.failures.iter().any(|f| f.path == p) {
            continue;
        }
        let traj = simulate_stream(&model.chain, &model.noise, &cfg, p).map_err(core_err)?;
        let path = args.out.join(format!("path_{p:04}.csv"));
        let mut file = BufWriter::new(fs::File::create(&path)?);
        foodchain::io::write_trajectory_csv(&mut file, &traj)?;
        file.flush()?;
        outputs.push(path);
    }
    manifest.write(&args.out.join("manifest.json"), &outputs)?;
    check_failures(&stats)
}
