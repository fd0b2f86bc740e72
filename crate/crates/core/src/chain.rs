//! Food-chain parameters, environmental noise and the noise-shifted rates.
//!
//! Species are labelled `1..=n` in every public accessor (species 1 is the
//! prey, species `n` the apex predator). Storage is 0-based.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for the PSD clamp and the rank cut-off.
pub const PSD_TOL: f64 = 1e-10;
/// Relative tolerance on the symmetry of sigma.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Unvalidated chain coefficients, as they appear in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawChain {
    pub n: usize,
    pub a10: f64,
    pub a11: f64,
    /// `a_{j,0}` for `j = 2..=n`.
    pub death: Vec<f64>,
    /// `a_{j,j-1}` for `j = 2..=n`.
    pub prey_on: Vec<f64>,
    /// `a_{j,j+1}` for `j = 1..=n-1`.
    pub preyed_by: Vec<f64>,
}

/// A validated Lotka-Volterra food chain. All coefficients are strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoodChain {
    n: usize,
    a10: f64,
    a11: f64,
    death: Vec<f64>,
    prey_on: Vec<f64>,
    preyed_by: Vec<f64>,
}

fn symbol(i: usize, j: usize) -> String {
    format!("a_{{{i},{j}}}")
}

fn check_positive(symbol: impl FnOnce() -> String, value: f64) -> Result<()> {
    if value.is_nan() || value <= 0.0 {
        return Err(Error::NonPositiveCoefficient {
            symbol: symbol(),
            value,
        });
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("chain coefficients"));
    }
    Ok(())
}

/// Checks the standing positivity assumptions and builds a [`FoodChain`].
pub fn validate_chain(raw: &RawChain) -> Result<FoodChain> {
    let n = raw.n;
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    for (what, v) in [
        ("death", &raw.death),
        ("prey_on", &raw.prey_on),
        ("preyed_by", &raw.preyed_by),
    ] {
        if v.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                what,
                expected: n - 1,
                actual: v.len(),
            });
        }
    }
    check_positive(|| symbol(1, 0), raw.a10)?;
    if raw.a11 == 0.0 {
        return Err(Error::ZeroIntracompetition);
    }
    check_positive(|| symbol(1, 1), raw.a11)?;
    for j in 2..=n {
        check_positive(|| symbol(j, 0), raw.death[j - 2])?;
        check_positive(|| symbol(j, j - 1), raw.prey_on[j - 2])?;
    }
    for j in 1..n {
        check_positive(|| symbol(j, j + 1), raw.preyed_by[j - 1])?;
    }
    Ok(FoodChain {
        n,
        a10: raw.a10,
        a11: raw.a11,
        death: raw.death.clone(),
        prey_on: raw.prey_on.clone(),
        preyed_by: raw.preyed_by.clone(),
    })
}

impl FoodChain {
    pub fn new(raw: &RawChain) -> Result<Self> {
        validate_chain(raw)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a10(&self) -> f64 {
        self.a10
    }

    pub fn a11(&self) -> f64 {
        self.a11
    }

    /// Death rate `a_{j,0}`, `j = 2..=n`.
    pub fn death(&self, j: usize) -> f64 {
        self.death[j - 2]
    }

    /// Consumption rate `a_{j,j-1}`, `j = 2..=n`.
    pub fn prey_on(&self, j: usize) -> f64 {
        self.prey_on[j - 2]
    }

    /// Loss rate `a_{j,j+1}` to the predator above, `j = 1..=n-1`.
    pub fn preyed_by(&self, j: usize) -> f64 {
        self.preyed_by[j - 1]
    }

    /// The coefficient `a_{i,k}` for the index pairs that exist in the chain
    /// (`k = 0`, `k = i - 1`, `k = i + 1`, and `a_{1,1}`).
    pub fn coef(&self, i: usize, k: usize) -> f64 {
        match (i, k) {
            (1, 0) => self.a10,
            (1, 1) => self.a11,
            (i, 0) => self.death(i),
            (i, k) if k + 1 == i => self.prey_on(i),
            (i, k) if k == i + 1 => self.preyed_by(i),
            _ => panic!("a_{{{i},{k}}} is not a coefficient of the food chain"),
        }
    }

    pub fn to_raw(&self) -> RawChain {
        RawChain {
            n: self.n,
            a10: self.a10,
            a11: self.a11,
            death: self.death.clone(),
            prey_on: self.prey_on.clone(),
            preyed_by: self.preyed_by.clone(),
        }
    }

    /// The first `j` species as a chain of their own.
    pub fn truncate(&self, j: usize) -> Result<FoodChain> {
        if j == 0 || j > self.n {
            return Err(Error::IndexOutOfRange {
                index: j,
                max: self.n,
            });
        }
        Ok(FoodChain {
            n: j,
            a10: self.a10,
            a11: self.a11,
            death: self.death[..j - 1].to_vec(),
            prey_on: self.prey_on[..j - 1].to_vec(),
            preyed_by: self.preyed_by[..j - 1].to_vec(),
        })
    }

    /// Appends a new apex predator eating the current apex.
    pub fn extend(&self, predator: &ApexPredator) -> Result<FoodChain> {
        let mut raw = self.to_raw();
        raw.n += 1;
        raw.death.push(predator.death);
        raw.prey_on.push(predator.prey_on);
        raw.preyed_by.push(predator.preyed_by);
        validate_chain(&raw)
    }
}

/// Coefficients of a predator added on top of an existing chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApexPredator {
    /// `a_{n+1,0}`
    pub death: f64,
    /// `a_{n+1,n}`
    pub prey_on: f64,
    /// `a_{n,n+1}`, the predation pressure it puts on the old apex.
    pub preyed_by: f64,
    /// Noise variance `sigma_{n+1,n+1}` of the new species.
    pub sigma: f64,
}

/// Environmental noise: covariance `sigma` and a factor `gamma` with
/// `gammaᵀ gamma = sigma`. Sigma may be singular.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma: DMatrix<f64>,
    gamma: Option<DMatrix<f64>>,
    rank: usize,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn spectrum(sigma: &DMatrix<f64>) -> Result<(SymmetricEigen<f64, nalgebra::Dyn>, usize)> {
    let eig = SymmetricEigen::new(sigma.clone());
    let lam_max = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = -PSD_TOL * lam_max;
    if let Some(&bad) = eig.eigenvalues.iter().find(|&&v| v < floor) {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: bad });
    }
    let cut = PSD_TOL * lam_max;
    let rank = eig.eigenvalues.iter().filter(|&&v| v > cut).count();
    Ok((eig, rank))
}

impl NoiseModel {
    /// Validates a covariance matrix. The factor is left unset; see [`factor_noise`].
    pub fn from_sigma(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::DimensionMismatch {
                what: "sigma columns",
                expected: sigma.nrows(),
                actual: sigma.ncols(),
            });
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sigma"));
        }
        let scale = max_abs(&sigma);
        let n = sigma.nrows();
        for r in 0..n {
            for c in r + 1..n {
                let diff = (sigma[(r, c)] - sigma[(c, r)]).abs();
                if diff > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric {
                        row: r + 1,
                        col: c + 1,
                        diff,
                    });
                }
            }
        }
        let sym = (&sigma + sigma.transpose()) * 0.5;
        let (_, rank) = spectrum(&sym)?;
        Ok(NoiseModel {
            sigma: sym,
            gamma: None,
            rank,
        })
    }

    /// Builds the model from a factor; sigma is derived as `gammaᵀ gamma`.
    pub fn from_gamma(gamma: DMatrix<f64>) -> Result<Self> {
        if !gamma.is_square() {
            return Err(Error::DimensionMismatch {
                what: "gamma columns",
                expected: gamma.nrows(),
                actual: gamma.ncols(),
            });
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gamma"));
        }
        let sigma = gamma.transpose() * &gamma;
        let (_, rank) = spectrum(&sigma)?;
        Ok(NoiseModel {
            sigma,
            gamma: Some(gamma),
            rank,
        })
    }

    /// Row-major helper for config input.
    pub fn from_sigma_rows(n: usize, values: &[f64]) -> Result<Self> {
        check_square_len("sigma", n, values)?;
        Self::from_sigma(DMatrix::from_row_slice(n, n, values)).and_then(factor_noise)
    }

    pub fn from_gamma_rows(n: usize, values: &[f64]) -> Result<Self> {
        check_square_len("gamma", n, values)?;
        Self::from_gamma(DMatrix::from_row_slice(n, n, values))
    }

    /// Deterministic mode: sigma = 0.
    pub fn zero(n: usize) -> Self {
        NoiseModel {
            sigma: DMatrix::zeros(n, n),
            gamma: Some(DMatrix::zeros(n, n)),
            rank: 0,
        }
    }

    /// Independent noise with the given variances.
    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        let diag = nalgebra::DVector::from_column_slice(variances);
        Self::from_sigma(DMatrix::from_diagonal(&diag)).and_then(factor_noise)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn gamma(&self) -> Option<&DMatrix<f64>> {
        self.gamma.as_ref()
    }

    /// Numerical rank of sigma.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `sigma_{ii}`, 1-based.
    pub fn variance(&self, i: usize) -> f64 {
        self.sigma[(i - 1, i - 1)]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.iter().all(|&v| v == 0.0)
    }

    /// Same noise on the first `j` species only.
    pub fn truncate(&self, j: usize) -> Result<NoiseModel> {
        let sub = self.sigma.view((0, 0), (j, j)).into_owned();
        NoiseModel::from_sigma(sub).and_then(factor_noise)
    }

    /// Block-diagonal extension by one independent species with variance `var`.
    pub fn extend(&self, var: f64) -> Result<NoiseModel> {
        let n = self.dim();
        let mut sigma = DMatrix::zeros(n + 1, n + 1);
        sigma.view_mut((0, 0), (n, n)).copy_from(&self.sigma);
        sigma[(n, n)] = var;
        NoiseModel::from_sigma(sigma).and_then(factor_noise)
    }

    /// `max |gammaᵀ gamma - sigma|`, or `None` if unfactored.
    pub fn factor_error(&self) -> Option<f64> {
        self.gamma
            .as_ref()
            .map(|g| max_abs(&(g.transpose() * g - &self.sigma)))
    }

    /// Replaces `sigma_{ii}` keeping the correlations of the other entries.
    /// Off-diagonal entries in row/column `i` are rescaled so the correlation
    /// coefficients are unchanged.
    pub fn with_variance(&self, i: usize, var: f64) -> Result<NoiseModel> {
        let k = i - 1;
        let mut sigma = self.sigma.clone();
        let old = sigma[(k, k)];
        let n = self.dim();
        for c in 0..n {
            if c == k {
                continue;
            }
            let v = if old > 0.0 {
                sigma[(k, c)] * (var / old).sqrt()
            } else {
                0.0
            };
            sigma[(k, c)] = v;
            sigma[(c, k)] = v;
        }
        sigma[(k, k)] = var;
        NoiseModel::from_sigma(sigma).and_then(factor_noise)
    }
}

fn check_square_len(what: &'static str, n: usize, values: &[f64]) -> Result<()> {
    if values.len() != n * n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n * n,
            actual: values.len(),
        });
    }
    Ok(())
}

/// Populates `gamma` from a symmetric eigendecomposition `sigma = V Λ Vᵀ`,
/// taking `gamma = Λ^{1/2} Vᵀ`. Eigenvalues in `[-tol·‖Σ‖, 0)` are clamped to 0.
pub fn factor_noise(noise: NoiseModel) -> Result<NoiseModel> {
    if noise.gamma.is_some() {
        return Ok(noise);
    }
    let (eig, rank) = spectrum(&noise.sigma)?;
    let n = noise.dim();
    let mut gamma = eig.eigenvectors.transpose();
    for r in 0..n {
        let s = eig.eigenvalues[r].max(0.0).sqrt();
        gamma.row_mut(r).scale_mut(s);
    }
    let deviation = max_abs(&(gamma.transpose() * &gamma - &noise.sigma));
    if deviation > PSD_TOL * (1.0 + max_abs(&noise.sigma)) {
        return Err(Error::FactorMismatch { deviation });
    }
    Ok(NoiseModel {
        sigma: noise.sigma,
        gamma: Some(gamma),
        rank,
    })
}

/// Noise-shifted growth and death rates `ã_{j0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveRates {
    tilde_a: Vec<f64>,
}

impl EffectiveRates {
    /// Rates of the deterministic system (sigma = 0).
    pub fn deterministic(chain: &FoodChain) -> Self {
        let mut tilde_a = Vec::with_capacity(chain.n());
        tilde_a.push(chain.a10());
        tilde_a.extend((2..=chain.n()).map(|j| chain.death(j)));
        EffectiveRates { tilde_a }
    }

    /// Builds rates from explicit values (`ã_{10}, ã_{20}, ...`).
    pub fn from_values(tilde_a: Vec<f64>) -> Self {
        EffectiveRates { tilde_a }
    }

    /// `ã_{j0}`, 1-based.
    pub fn get(&self, j: usize) -> f64 {
        self.tilde_a[j - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.tilde_a
    }

    pub fn len(&self) -> usize {
        self.tilde_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tilde_a.is_empty()
    }
}

/// `ã_{10} = a_{10} - σ_{11}/2`, `ã_{j0} = a_{j0} + σ_{jj}/2` for `j >= 2`.
pub fn effective_rates(chain: &FoodChain, noise: &NoiseModel) -> Result<EffectiveRates> {
    if noise.dim() != chain.n() {
        return Err(Error::DimensionMismatch {
            what: "noise dimension",
            expected: chain.n(),
            actual: noise.dim(),
        });
    }
    let mut tilde_a = Vec::with_capacity(chain.n());
    tilde_a.push(chain.a10() - noise.variance(1) / 2.0);
    tilde_a.extend((2..=chain.n()).map(|j| chain.death(j) + noise.variance(j) / 2.0));
    Ok(EffectiveRates { tilde_a })
}

/// A chain together with its noise, plus an optional initial state.
#[derive(Debug, Clone)]
pub struct Model {
    pub chain: FoodChain,
    pub noise: NoiseModel,
    pub x0: Option<Vec<f64>>,
}

/// On-disk model description (see `schema/chain.schema.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub a10: f64,
    pub a11: f64,
    pub death: Vec<f64>,
    pub prey_on: Vec<f64>,
    pub preyed_by: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl ModelConfig {
    pub fn raw_chain(&self) -> RawChain {
        RawChain {
            n: self.n,
            a10: self.a10,
            a11: self.a11,
            death: self.death.clone(),
            prey_on: self.prey_on.clone(),
            preyed_by: self.preyed_by.clone(),
        }
    }

    pub fn into_model(&self) -> Result<Model> {
        let chain = validate_chain(&self.raw_chain())?;
        let noise = match (&self.sigma, &self.gamma) {
            (Some(s), None) => NoiseModel::from_sigma_rows(self.n, s)?,
            (None, Some(g)) => NoiseModel::from_gamma_rows(self.n, g)?,
            _ => {
                return Err(Error::InvalidConfig(
                    "exactly one of `sigma` or `gamma` must be given".into(),
                ))
            }
        };
        if let Some(x0) = &self.x0 {
            if x0.len() != self.n {
                return Err(Error::DimensionMismatch {
                    what: "x0",
                    expected: self.n,
                    actual: x0.len(),
                });
            }
            if x0.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidConfig("x0 must be strictly positive".into()));
            }
        }
        Ok(Model {
            chain,
            noise,
            x0: self.x0.clone(),
        })
    }
}
