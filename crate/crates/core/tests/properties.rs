//! Property tests for the analytic side: sweep, closed forms, criteria, noise.

use foodchain::persistence::invasion_rate_closed_form;
use foodchain::{
    apex_extension, build_system, closed_form_c, closed_form_dn, effective_rates, forward_sweep,
    generic_solve, invasion_rate, kappa_deterministic, kappa_tilde, validate_chain, ApexPredator,
    EffectiveRates, Error, FoodChain, NoiseModel, RawChain,
};
use proptest::prelude::*;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(|e| 10f64.powf(e))
}

fn raw_chain(max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = RawChain> {
    (1..=max_n).prop_flat_map(move |n| {
        let c = move || log_uniform(lo, hi);
        (
            c(),
            c(),
            prop::collection::vec(c(), n - 1),
            prop::collection::vec(c(), n - 1),
            prop::collection::vec(c(), n - 1),
        )
            .prop_map(move |(a10, a11, death, prey_on, preyed_by)| RawChain {
                n,
                a10,
                a11,
                death,
                prey_on,
                preyed_by,
            })
    })
}

/// Chain plus diagonal noise; about one variance in eight is exactly zero.
fn noisy_chain(max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = (FoodChain, NoiseModel)> {
    raw_chain(max_n, lo, hi).prop_flat_map(|raw| {
        let n = raw.n;
        let var = prop_oneof![1 => Just(0.0), 7 => log_uniform(-4.0, 0.0)];
        (Just(raw), prop::collection::vec(var, n)).prop_map(|(raw, sig)| {
            (
                validate_chain(&raw).unwrap(),
                NoiseModel::diagonal(&sig).unwrap(),
            )
        })
    })
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn sign(v: f64) -> i8 {
    if v.abs() <= 1e-12 {
        0
    } else if v > 0.0 {
        1
    } else {
        -1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn sweep_agrees_with_dense_solve((chain, noise) in noisy_chain(12, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let (_, sol) = forward_sweep(&chain, &rates, j).unwrap();
            let (a, rhs) = build_system(&chain, &rates, j).unwrap();
            let oracle = generic_solve(&a, &rhs).unwrap();
            for (x, y) in sol.x.iter().zip(&oracle) {
                prop_assert!(rel_diff(*x, *y) <= 1e-9, "j={j}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn solution_has_small_residual((chain, noise) in noisy_chain(12, -1.0, 1.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let (_, sol) = forward_sweep(&chain, &rates, j).unwrap();
            let (a, rhs) = build_system(&chain, &rates, j).unwrap();
            let r = foodchain::equilibrium::residual(&a, &rhs, &sol.x);
            prop_assert!(r <= 1e-9 * (1.0 + rhs.amax()), "j={j}: residual {r}");
        }
    }

    #[test]
    fn residual_is_backward_stable((chain, noise) in noisy_chain(12, -2.0, 2.0)) {
        // with wide coefficient ranges x can reach 1e12, so the absolute
        // residual is bounded by the rounding of |A||x| rather than by |a|
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let (_, sol) = forward_sweep(&chain, &rates, j).unwrap();
            let (a, rhs) = build_system(&chain, &rates, j).unwrap();
            let r = foodchain::equilibrium::residual(&a, &rhs, &sol.x);
            let ax = (0..j)
                .map(|i| (0..j).map(|k| (a[(i, k)] * sol.x[k]).abs()).sum::<f64>())
                .fold(0.0f64, f64::max);
            prop_assert!(r <= 1e-12 * (1.0 + rhs.amax() + ax), "j={j}: residual {r}, |A||x| {ax}");
        }
    }

    #[test]
    fn tail_equals_last_d_prime((chain, noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let (coef, sol) = forward_sweep(&chain, &rates, j).unwrap();
            prop_assert_eq!(sol.tail(), coef.d_prime[j - 1]);
        }
    }

    #[test]
    fn sweep_coefficients_are_positive((chain, _noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = EffectiveRates::deterministic(&chain);
        let (coef, _) = forward_sweep(&chain, &rates, chain.n()).unwrap();
        prop_assert!(coef.c_prime.iter().all(|c| *c > 0.0));
    }

    #[test]
    fn closed_forms_match_recursion((chain, noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        let n = chain.n();
        let (coef, _) = forward_sweep(&chain, &rates, n).unwrap();
        for j in 1..n {
            prop_assert!(rel_diff(closed_form_c(&chain, j).unwrap(), coef.c_prime[j - 1]) <= 1e-12);
        }
        for j in 1..=n {
            let (cj, _) = forward_sweep(&chain, &rates, j).unwrap();
            prop_assert!(rel_diff(closed_form_dn(&chain, &rates, j).unwrap(), cj.d_prime[j - 1]) <= 1e-12);
            prop_assert!(rel_diff(
                invasion_rate_closed_form(&chain, &rates, j).unwrap(),
                invasion_rate(&chain, &rates, j).unwrap()
            ) <= 1e-12);
        }
    }

    #[test]
    fn tail_invasion_rate_and_kappa_share_sign((chain, noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let (_, sol) = forward_sweep(&chain, &rates, j).unwrap();
            let s = sign(sol.tail());
            prop_assert_eq!(s, sign(invasion_rate(&chain, &rates, j).unwrap()));
            prop_assert_eq!(s, sign(kappa_tilde(&chain, &rates, j).unwrap()));
        }
    }

    #[test]
    fn kappa_tilde_strictly_decreases((chain, noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        let kt: Vec<f64> = (1..=chain.n()).map(|j| kappa_tilde(&chain, &rates, j).unwrap()).collect();
        for w in kt.windows(2) {
            prop_assert!(w[1] < w[0], "{kt:?}");
        }
    }

    #[test]
    fn noise_lowers_kappa((chain, noise) in noisy_chain(10, -2.0, 2.0)) {
        let rates = effective_rates(&chain, &noise).unwrap();
        for j in 1..=chain.n() {
            let kt = kappa_tilde(&chain, &rates, j).unwrap();
            let k = kappa_deterministic(&chain, j).unwrap();
            if (1..=j).any(|i| noise.variance(i) > 0.0) {
                prop_assert!(kt < k);
            } else {
                prop_assert_eq!(kt, k);
            }
        }
    }

    #[test]
    fn invasion_rates_fall_with_each_variance(
        (chain, noise) in noisy_chain(6, -1.0, 1.0),
        bump in 0.01f64..1.0,
        pick in 0usize..64,
    ) {
        let n = chain.n();
        let i = 1 + pick % n;
        let rates = effective_rates(&chain, &noise).unwrap();
        let louder = noise.with_variance(i, noise.variance(i) + bump).unwrap();
        let rates2 = effective_rates(&chain, &louder).unwrap();
        for j in i..=n {
            let before = invasion_rate(&chain, &rates, j).unwrap();
            let after = invasion_rate(&chain, &rates2, j).unwrap();
            prop_assert!(after < before, "sigma_{i}{i}+{bump}: I_{j} {before} -> {after}");
        }
        for j in 1..i {
            prop_assert_eq!(
                invasion_rate(&chain, &rates, j).unwrap(),
                invasion_rate(&chain, &rates2, j).unwrap()
            );
        }
    }

    #[test]
    fn apex_extension_matches_direct_evaluation(
        (chain, noise) in noisy_chain(9, -2.0, 2.0),
        death in log_uniform(-2.0, 2.0),
        prey_on in log_uniform(-2.0, 2.0),
        preyed_by in log_uniform(-2.0, 2.0),
        sigma in 0.0f64..1.0,
    ) {
        let rates = effective_rates(&chain, &noise).unwrap();
        let apex = ApexPredator { death, prey_on, preyed_by, sigma };
        let inc = apex_extension(&chain, &rates, &apex).unwrap();
        let big = chain.extend(&apex).unwrap();
        let big_noise = noise.extend(sigma).unwrap();
        let big_rates = effective_rates(&big, &big_noise).unwrap();
        let direct = kappa_tilde(&big, &big_rates, big.n()).unwrap();
        let base = kappa_tilde(&chain, &rates, chain.n()).unwrap();
        // the update is one subtraction, so compare against its operand scale
        let scale = base.abs() + (base - direct).abs();
        prop_assert!((inc - direct).abs() <= 1e-12 * scale.max(1e-300), "{inc} vs {direct}");
    }

    #[test]
    fn effective_rates_move_with_variance(
        (chain, noise) in noisy_chain(6, -1.0, 1.0),
        bump in 1e-3f64..1.0,
        pick in 0usize..64,
    ) {
        let i = 1 + pick % chain.n();
        let before = effective_rates(&chain, &noise).unwrap();
        let after = effective_rates(&chain, &noise.with_variance(i, noise.variance(i) + bump).unwrap()).unwrap();
        for j in 1..=chain.n() {
            let (b, a) = (before.get(j), after.get(j));
            match (j == i, j == 1) {
                (true, true) => prop_assert!(a < b),
                (true, false) => prop_assert!(a > b),
                (false, _) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn validation_accepts_exactly_positive_coefficients(
        raw in raw_chain(6, -2.0, 2.0),
        which in 0usize..32,
        bad in prop_oneof![Just(0.0), Just(-1.0), Just(f64::NAN), -10.0f64..0.0],
    ) {
        prop_assert!(validate_chain(&raw).is_ok());
        let mut broken = raw.clone();
        let slots = 2 + 3 * (raw.n - 1);
        let k = which % slots;
        match k {
            0 => broken.a10 = bad,
            1 => broken.a11 = bad,
            _ => {
                let m = k - 2;
                let v = match m % 3 {
                    0 => &mut broken.death,
                    1 => &mut broken.prey_on,
                    _ => &mut broken.preyed_by,
                };
                v[m / 3] = bad;
            }
        }
        let err = validate_chain(&broken).unwrap_err();
        if k == 1 && bad == 0.0 {
            prop_assert!(matches!(err, Error::ZeroIntracompetition));
        } else {
            prop_assert!(matches!(err, Error::NonPositiveCoefficient { .. }), "{err}");
        }
    }

    #[test]
    fn factor_round_trips(m in prop::collection::vec(-3.0f64..3.0, 9), rank in 1usize..=3) {
        // Σ = MᵀM with the last rows of M zeroed to force rank deficiency
        let mut mm = m.clone();
        for v in mm.iter_mut().skip(3 * rank) {
            *v = 0.0;
        }
        let mut sigma = vec![0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                sigma[3 * r + c] = (0..3).map(|k| mm[3 * k + r] * mm[3 * k + c]).sum();
            }
        }
        let noise = NoiseModel::from_sigma_rows(3, &sigma).unwrap();
        let g = noise.gamma().unwrap();
        let gtg = g.transpose() * g;
        let smax = sigma.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut dev = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                dev = dev.max((gtg[(r, c)] - sigma[3 * r + c]).abs());
            }
        }
        prop_assert!(dev <= 1e-10 * (1.0 + smax), "deviation {dev}");
        prop_assert!(noise.rank() <= rank);
    }
}

#[test]
fn single_species_chain() {
    let raw = RawChain {
        n: 1,
        a10: 1.0,
        a11: 2.0,
        death: vec![],
        prey_on: vec![],
        preyed_by: vec![],
    };
    let chain = validate_chain(&raw).unwrap();
    let noise = NoiseModel::diagonal(&[0.4]).unwrap();
    let rates = effective_rates(&chain, &noise).unwrap();
    assert_eq!(rates.get(1), 0.8);
    let (_, sol) = forward_sweep(&chain, &rates, 1).unwrap();
    assert_eq!(sol.x, vec![0.4]);
    assert_eq!(kappa_tilde(&chain, &rates, 1).unwrap(), 0.8);
}

#[test]
fn perfectly_correlated_noise_has_rank_one() {
    let noise = NoiseModel::from_sigma_rows(2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(noise.rank(), 1);
    assert!(noise.factor_error().unwrap() <= 1e-10);
    assert!(!noise.is_positive_definite());
}

#[test]
fn indefinite_sigma_is_rejected() {
    let err = NoiseModel::from_sigma_rows(2, &[1.0, 2.0, 2.0, 1.0]).unwrap_err();
    assert!(
        matches!(err, Error::NotPositiveSemidefinite { .. }),
        "{err}"
    );
}
