//! Persistence/extinction classification of a stochastic food chain.
//!
//! The scalar `kappa_tilde(j)` decides whether the first `j` species can
//! coexist: it has the same sign as the tail `x_j^{(j)}` of the sub-chain
//! equilibrium and as the invasion rate `I_j` of species `j` into the
//! community of species `1..j-1`. It strictly decreases in `j`, so the
//! persistent species always form a prefix `1..=j_star`.

use serde::Serialize;

use crate::chain::{effective_rates, ApexPredator, EffectiveRates, FoodChain, NoiseModel};
use crate::dd::{ratio, Dd};
use crate::equilibrium::{closed_form_dn_dd, equilibrium, sweep_dd};
use crate::error::{Error, Result};

/// Values with magnitude at or below this are treated as zero when deciding
/// whether a classification is critical.
pub const CRITICAL_TOL: f64 = 1e-12;

fn check_range(j: usize, n: usize) -> Result<()> {
    if j == 0 || j > n {
        Err(Error::IndexOutOfRange { index: j, max: n })
    } else {
        Ok(())
    }
}

/// `kappa(j)` with the supplied growth/death rates.
///
/// ```text
/// kappa = r1 - (a11/a21) [ r2 + Σ_{m=2..k} Π_{i=2..m} (a_{2i-2,2i-1}/a_{2i,2i-1}) r_{2m} ]
///            - Σ_{m=1..l} Π_{i=1..m} (a_{2i-1,2i}/a_{2i+1,2i}) r_{2m+1}
/// ```
/// with `k = floor(j/2)`, `l = floor((j-1)/2)`. For `j = 1` it is `r1`.
fn kappa_with(chain: &FoodChain, r: impl Fn(usize) -> f64, j: usize) -> Dd {
    let a = |i, k| chain.coef(i, k);
    let k = j / 2;
    let l = (j - 1) / 2;
    let mut value = Dd::from(r(1));
    if k >= 1 {
        let mut bracket = Dd::from(r(2));
        let mut prod = Dd::ONE;
        for m in 2..=k {
            prod = prod * ratio(a(2 * m - 2, 2 * m - 1), a(2 * m, 2 * m - 1));
            bracket = bracket + prod * r(2 * m);
        }
        value = value - ratio(a(1, 1), a(2, 1)) * bracket;
    }
    let mut prod = Dd::ONE;
    for m in 1..=l {
        prod = prod * ratio(a(2 * m - 1, 2 * m), a(2 * m + 1, 2 * m));
        value = value - prod * r(2 * m + 1);
    }
    value
}

/// Stochastic persistence criterion `kappa_tilde(j)`.
pub fn kappa_tilde(chain: &FoodChain, rates: &EffectiveRates, j: usize) -> Result<f64> {
    check_range(j, chain.n())?;
    Ok(kappa_with(chain, |i| rates.get(i), j).to_f64())
}

/// Deterministic criterion `kappa(j)` (all noise set to zero).
pub fn kappa_deterministic(chain: &FoodChain, j: usize) -> Result<f64> {
    check_range(j, chain.n())?;
    let rates = EffectiveRates::deterministic(chain);
    Ok(kappa_with(chain, |i| rates.get(i), j).to_f64())
}

/// Invasion rate `I_j`: `I_1 = ã10`, and for `j >= 2`
/// `I_j = -ã_{j0} + a_{j,j-1} x_{j-1}^{(j-1)}` with the equilibrium from the sweep.
pub fn invasion_rate(chain: &FoodChain, rates: &EffectiveRates, j: usize) -> Result<f64> {
    check_range(j, chain.n())?;
    if j == 1 {
        return Ok(rates.get(1));
    }
    let (_, d, _) = sweep_dd(chain, rates, j - 1)?;
    Ok((d[j - 2] * chain.prey_on(j) - rates.get(j)).to_f64())
}

/// `I_j` with `x_{j-1}^{(j-1)}` taken from the `d'` closed forms instead of the sweep.
pub fn invasion_rate_closed_form(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<f64> {
    check_range(j, chain.n())?;
    if j == 1 {
        return Ok(rates.get(1));
    }
    Ok((closed_form_dn_dd(chain, rates, j - 1)? * chain.prey_on(j) - rates.get(j)).to_f64())
}

/// Invasion rate of the deterministic system, the limit of `I_j` as the noise vanishes.
pub fn deterministic_limit_rates(chain: &FoodChain, j: usize) -> Result<f64> {
    invasion_rate(chain, &EffectiveRates::deterministic(chain), j)
}

/// Lyapunov exponents `λ_i = f_i(x̄) - σ_ii/2`, `i = 1..=n`, of an invariant
/// measure supported on species `1..=j` with mean `x̄ = (x^{(j)}, 0, ..., 0)`.
///
/// `f` is affine, so the first moments suffice.
pub fn lyapunov_at_boundary(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<Vec<f64>> {
    let kt = kappa_tilde(chain, rates, j)?;
    if kt <= 0.0 {
        return Err(Error::InfeasibleBoundary { j, kappa_tilde: kt });
    }
    let (_, _, x) = sweep_dd(chain, rates, j)?;
    let mut mean = vec![Dd::ZERO; chain.n()];
    mean[..j].copy_from_slice(&x);
    Ok(log_drift_terms(chain, rates, &mean)
        .into_iter()
        .map(Dd::to_f64)
        .collect())
}

fn log_drift_terms(chain: &FoodChain, rates: &EffectiveRates, x: &[Dd]) -> Vec<Dd> {
    let n = chain.n();
    (1..=n)
        .map(|i| {
            let mut v = if i == 1 {
                Dd::from(rates.get(1)) - x[0] * chain.a11()
            } else {
                x[i - 2] * chain.prey_on(i) - rates.get(i)
            };
            if i < n {
                v = v - x[i] * chain.preyed_by(i);
            }
            v
        })
        .collect()
}

/// `f_i(x) - σ_ii/2` written with the effective rates.
pub fn log_drift(chain: &FoodChain, rates: &EffectiveRates, x: &[f64]) -> Vec<f64> {
    let n = chain.n();
    (1..=n)
        .map(|i| {
            let mut v = if i == 1 {
                rates.get(1) - chain.a11() * x[0]
            } else {
                -rates.get(i) + chain.prey_on(i) * x[i - 2]
            };
            if i < n {
                v -= chain.preyed_by(i) * x[i];
            }
            v
        })
        .collect()
}

/// `kappa_tilde(n+1)` after adding an apex predator, by the one-term update
/// of `kappa_tilde(n)`.
pub fn apex_extension(
    chain: &FoodChain,
    rates: &EffectiveRates,
    predator: &ApexPredator,
) -> Result<f64> {
    for (sym, v) in [
        ("a_{n+1,0}", predator.death),
        ("a_{n+1,n}", predator.prey_on),
        ("a_{n,n+1}", predator.preyed_by),
    ] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::NonPositiveCoefficient {
                symbol: sym.to_string(),
                value: v,
            });
        }
    }
    if predator.sigma.is_nan() || predator.sigma < 0.0 {
        return Err(Error::InvalidConfig(
            "predator noise variance must be >= 0".into(),
        ));
    }
    let n = chain.n();
    let base = kappa_tilde(chain, rates, n)?;
    let extended = chain.extend(predator)?;
    let a = |i, k| extended.coef(i, k);
    let new_rate = predator.death + predator.sigma / 2.0;
    let coefficient = if n.is_multiple_of(2) {
        (1..=n / 2)
            .map(|i| a(2 * i - 1, 2 * i) / a(2 * i + 1, 2 * i))
            .product::<f64>()
    } else {
        a(1, 1) / a(2, 1)
            * (2..=n.div_ceil(2))
                .map(|i| a(2 * i - 2, 2 * i - 1) / a(2 * i, 2 * i - 1))
                .product::<f64>()
    };
    Ok(base - coefficient * new_rate)
}

/// Long-run fate of one species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Persistent,
    WeakExtinction,
    /// Almost-sure exponential extinction with `ln X(t)/t -> rate`.
    ExtinctExponentially {
        rate: f64,
    },
    /// The criterion sits on zero (within [`CRITICAL_TOL`]).
    Critical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeciesVerdict {
    pub species: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Everything `classify` derives about a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub n: usize,
    pub kappa_tilde: Vec<f64>,
    pub kappa_det: Vec<f64>,
    pub invasion: Vec<f64>,
    pub j_star: usize,
    pub verdicts: Vec<SpeciesVerdict>,
    pub critical: bool,
    /// Sigma positive definite and the whole chain persistent: unique interior
    /// invariant measure. Otherwise persistence holds in the time-average sense only.
    pub strong_persistence: bool,
    pub noise_rank: usize,
    /// `x^{(j_star)}`: long-run means of the persistent species (empty if `j_star = 0`).
    pub equilibrium: Vec<f64>,
}

impl ClassificationReport {
    pub fn verdict(&self, species: usize) -> Verdict {
        self.verdicts[species - 1].verdict
    }
}

/// Classifies every species of the chain as persistent or extinct.
pub fn classify(chain: &FoodChain, noise: &NoiseModel) -> Result<ClassificationReport> {
    let n = chain.n();
    let rates = effective_rates(chain, noise)?;
    let kt = (1..=n)
        .map(|j| kappa_tilde(chain, &rates, j))
        .collect::<Result<Vec<_>>>()?;
    let kd = (1..=n)
        .map(|j| kappa_deterministic(chain, j))
        .collect::<Result<Vec<_>>>()?;
    let invasion = (1..=n)
        .map(|j| invasion_rate(chain, &rates, j))
        .collect::<Result<Vec<_>>>()?;

    let mut j_star = 0;
    for (j, &k) in kt.iter().enumerate() {
        if j > 0 {
            debug_assert!(k <= kt[j - 1], "kappa_tilde not monotone at {}", j + 1);
        }
        if k > 0.0 {
            j_star = j + 1;
        } else {
            break;
        }
    }

    let mut verdicts: Vec<Verdict> = (1..=n)
        .map(|i| {
            if i <= j_star {
                Verdict::Persistent
            } else {
                Verdict::WeakExtinction
            }
        })
        .collect();

    if n == 2 {
        let (i1, i2) = (invasion[0], invasion[1]);
        if i1 <= 0.0 {
            verdicts[0] = Verdict::ExtinctExponentially { rate: rates.get(1) };
            verdicts[1] = Verdict::ExtinctExponentially {
                rate: -rates.get(2),
            };
        } else if i2 < 0.0 {
            verdicts[1] = Verdict::ExtinctExponentially { rate: i2 };
        }
    }

    let mut critical = false;
    for (j, &k) in kt.iter().enumerate() {
        if k.abs() <= CRITICAL_TOL {
            critical = true;
            verdicts[j] = Verdict::Critical;
        }
    }

    let equilibrium = if j_star > 0 {
        equilibrium(chain, &rates, j_star)?.x
    } else {
        Vec::new()
    };

    Ok(ClassificationReport {
        n,
        kappa_tilde: kt,
        kappa_det: kd,
        invasion,
        j_star,
        verdicts: verdicts
            .into_iter()
            .enumerate()
            .map(|(i, verdict)| SpeciesVerdict {
                species: i + 1,
                verdict,
            })
            .collect(),
        critical,
        strong_persistence: j_star == n && noise.is_positive_definite(),
        noise_rank: noise.rank(),
        equilibrium,
    })
}
