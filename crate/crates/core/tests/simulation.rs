//! Pathwise and statistical properties of the simulator and its diagnostics.

use foodchain::{
    log_growth_rate, occupation, simulate_ensemble, simulate_ode, simulate_path, simulate_stream,
    time_average, validate_chain, FoodChain, NoiseModel, RawChain, Region, SimConfig,
};

fn chain3() -> FoodChain {
    validate_chain(&RawChain {
        n: 3,
        a10: 2.0,
        a11: 1.0,
        death: vec![0.2, 0.3],
        prey_on: vec![1.0, 1.0],
        preyed_by: vec![1.0, 1.0],
    })
    .unwrap()
}

fn short_config(t_end: f64, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(vec![1.0; 3], t_end, seed);
    cfg.burn_in = 0.0;
    cfg
}

#[test]
fn recorded_states_are_positive_and_finite() {
    let noise = NoiseModel::diagonal(&[0.3, 0.2, 0.1]).unwrap();
    let traj = simulate_path(&chain3(), &noise, &short_config(20.0, 3)).unwrap();
    assert!(traj.states.iter().all(|x| *x > 0.0 && x.is_finite()));
    assert!(traj.log_states.iter().all(|y| y.is_finite()));
}

#[test]
fn same_seed_same_path() {
    let noise = NoiseModel::diagonal(&[0.3, 0.2, 0.1]).unwrap();
    let cfg = short_config(5.0, 11);
    let a = simulate_stream(&chain3(), &noise, &cfg, 4).unwrap();
    let b = simulate_stream(&chain3(), &noise, &cfg, 4).unwrap();
    assert_eq!(a, b);
    let c = simulate_stream(&chain3(), &noise, &cfg, 5).unwrap();
    assert_ne!(a.log_states, c.log_states);
}

#[test]
fn ensemble_does_not_depend_on_thread_count() {
    let noise = NoiseModel::diagonal(&[0.3, 0.2, 0.1]).unwrap();
    let cfg = short_config(5.0, 7);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_ensemble(&chain3(), &noise, &cfg, 12).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(
        serde_json::to_string(&one).unwrap(),
        serde_json::to_string(&four).unwrap()
    );
}

#[test]
fn log_growth_splits_into_drift_and_noise() {
    // ln X(T) - ln X(t0) is the integrated drift plus the integrated shocks
    let noise =
        NoiseModel::from_sigma_rows(3, &[0.4, 0.1, 0.0, 0.1, 0.3, 0.05, 0.0, 0.05, 0.2]).unwrap();
    let mut cfg = short_config(10.0, 21);
    cfg.burn_in = 2.0;
    let traj = simulate_path(&chain3(), &noise, &cfg).unwrap();
    for k in 1..=3 {
        let lg = log_growth_rate(&traj, k).unwrap();
        let split = traj.drift_average[k - 1] + traj.noise_average[k - 1];
        assert!(
            (lg - split).abs() <= 1e-9 * (1.0 + lg.abs()),
            "species {k}: {lg} vs {split}"
        );
    }
}

#[test]
fn noise_averages_are_martingale_sized() {
    // E_i(T)/T has standard deviation sqrt(σ_ii/T)
    let var = [0.4, 0.2, 0.1];
    let noise = NoiseModel::diagonal(&var).unwrap();
    let t_end = 4.0;
    let cfg = short_config(t_end, 99);
    let ens = simulate_ensemble(&chain3(), &noise, &cfg, 200).unwrap();
    assert_eq!(ens.failed_paths, 0);
    for (i, v) in var.iter().enumerate() {
        let bound = 4.0 * (v / t_end).sqrt();
        let inside = ens
            .paths
            .iter()
            .filter(|p| p.noise_average[i].abs() <= bound)
            .count();
        assert!(
            inside as f64 >= 0.99 * 200.0,
            "species {}: {inside}/200",
            i + 1
        );
    }
}

#[test]
fn rank_one_noise_moves_species_together() {
    let noise = NoiseModel::from_sigma_rows(3, &[0.2; 9]).unwrap();
    assert_eq!(noise.rank(), 1);
    let traj = simulate_path(&chain3(), &noise, &short_config(5.0, 5)).unwrap();
    let e = &traj.noise_average;
    assert!(e[0] != 0.0);
    for k in 1..3 {
        assert!((e[k] - e[0]).abs() <= 1e-12 * e[0].abs().max(1.0), "{e:?}");
    }
}

#[test]
fn zero_noise_tracks_the_ode() {
    // Euler in log space is first order; the deviation was measured once at
    // dt = 1e-3 over T = 20 (6.2e-4) and the constant is held fixed
    const C: f64 = 1.0;
    let chain = chain3();
    let noise = NoiseModel::zero(3);
    let dt = 1e-3;
    let mut cfg = SimConfig::with_dt(vec![1.0; 3], dt, 20.0, 0);
    cfg.burn_in = 0.0;
    cfg.record_stride = 1;
    let em = simulate_path(&chain, &noise, &cfg).unwrap();
    let ode = simulate_ode(&chain, &[1.0; 3], dt, 20.0).unwrap();
    assert_eq!(em.len(), ode.len());
    let dev = em
        .states
        .iter()
        .zip(&ode.states)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(dev <= C * dt, "max deviation {dev}");
}

#[test]
fn time_average_of_a_constant_is_exact() {
    // one species with zero noise started at its equilibrium a10/a11 = 1
    let chain = validate_chain(&RawChain {
        n: 1,
        a10: 1.5,
        a11: 1.5,
        death: vec![],
        prey_on: vec![],
        preyed_by: vec![],
    })
    .unwrap();
    let mut cfg = SimConfig::new(vec![1.0], 3.0, 0);
    cfg.burn_in = 0.0;
    let traj = simulate_path(&chain, &NoiseModel::zero(1), &cfg).unwrap();
    assert_eq!(time_average(&traj, 1).unwrap(), 1.0);
}

#[test]
fn occupation_is_additive_under_splitting() {
    let noise = NoiseModel::diagonal(&[0.3, 0.2, 0.1]).unwrap();
    let traj = simulate_path(&chain3(), &noise, &short_config(10.0, 8)).unwrap();
    let whole = Region::new(vec![0.0; 3], vec![10.0; 3]);
    let left = Region::new(vec![0.0; 3], vec![1.0, 10.0, 10.0]);
    let right = Region::new(vec![1.0, 0.0, 0.0], vec![10.0; 3]);
    let m = occupation(&traj, &[whole, left, right]).unwrap();
    assert!((m.mass[0] - (m.mass[1] + m.mass[2])).abs() <= 1e-12);
    assert!(m.mass.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn invalid_configs_are_rejected() {
    let noise = NoiseModel::zero(3);
    let mut cfg = short_config(1.0, 0);
    cfg.dt = 0.0;
    assert!(simulate_path(&chain3(), &noise, &cfg).is_err());
    let mut cfg = short_config(1.0, 0);
    cfg.x0 = vec![1.0, -1.0, 1.0];
    assert!(simulate_path(&chain3(), &noise, &cfg).is_err());
    assert!(simulate_ensemble(&chain3(), &noise, &short_config(1.0, 0), 0).is_err());
}
