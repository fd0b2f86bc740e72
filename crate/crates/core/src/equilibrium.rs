//! Boundary equilibria of the food chain.
//!
//! For a sub-chain of length `j` the equilibrium solves `A x = a` where `A`
//! has `-a11, -a12` in row 1 and, for rows `i >= 2`, `a_{i,i-1}` below and
//! `-a_{i,i+1}` above a zero diagonal; `a = (-ã10, ã20, ..., ãj0)`.
//! The structure lets a forward sweep (Gaussian elimination without
//! pivoting) solve it in `O(j)`, and the sweep coefficients have closed
//! forms split by parity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chain::{EffectiveRates, FoodChain};
use crate::dd::{ratio, Dd};
use crate::error::{Error, Result};

/// Solution `(x_1^{(j)}, ..., x_j^{(j)})` of the sub-chain equilibrium system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    pub j: usize,
    pub x: Vec<f64>,
    pub feasible: bool,
}

impl EquilibriumSolution {
    fn new(j: usize, x: Vec<f64>) -> Self {
        let feasible = x.iter().all(|&v| v > 0.0);
        EquilibriumSolution { j, x, feasible }
    }

    /// `x_i^{(j)}`, 1-based.
    pub fn component(&self, i: usize) -> f64 {
        self.x[i - 1]
    }

    /// The last component, `x_j^{(j)}`.
    pub fn tail(&self) -> f64 {
        self.x[self.j - 1]
    }
}

/// Primed coefficients of the sweep: after elimination row `i` reads
/// `x_i + c'_i x_{i+1} = d'_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCoefficients {
    /// `c'_1 .. c'_{j-1}`
    pub c_prime: Vec<f64>,
    /// `d'_1 .. d'_j`
    pub d_prime: Vec<f64>,
}

fn check_range(j: usize, max: usize) -> Result<()> {
    if j == 0 || j > max {
        Err(Error::IndexOutOfRange { index: j, max })
    } else {
        Ok(())
    }
}

/// Dense `A` and right-hand side `a` for sub-chain `j`.
pub fn build_system(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_range(j, chain.n())?;
    let mut a = DMatrix::zeros(j, j);
    let mut rhs = DVector::zeros(j);
    a[(0, 0)] = -chain.a11();
    rhs[0] = -rates.get(1);
    for i in 1..=j {
        if i >= 2 {
            a[(i - 1, i - 2)] = chain.prey_on(i);
            rhs[i - 1] = rates.get(i);
        }
        if i < j {
            a[(i - 1, i)] = -chain.preyed_by(i);
        }
    }
    Ok((a, rhs))
}

/// The sweep in double-double: `(c', d', x)` for sub-chain `j`.
///
/// The textbook back-pass `x_i = d'_i - c'_i x_{i+1}` cancels badly here
/// (relative errors of 1e-1 in `f64` on wide-ranging coefficients). Row `k`
/// of the system reads `a_{k,k-1} x_{k-1} - a_{k,k+1} x_{k+1} = ã_k` because
/// the diagonal vanishes, so each `x_{k-1}` follows from `x_{k+1}` by
/// `x_{k-1} = (ã_k + a_{k,k+1} x_{k+1}) / a_{k,k-1}` with `x_{j+1} = 0`.
/// Every term is positive when `x_j > 0`.
pub(crate) fn sweep_dd(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<(Vec<Dd>, Vec<Dd>, Vec<Dd>)> {
    check_range(j, chain.n())?;
    // row 1: -a11 x1 + c1 x2 = d1 with c1 = -a12, d1 = -ã10
    // row i: f_i x_{i-1} + c_i x_{i+1} = d_i with f_i = a_{i,i-1}, c_i = -a_{i,i+1}
    let mut c: Vec<Dd> = Vec::with_capacity(j.saturating_sub(1));
    let mut d: Vec<Dd> = Vec::with_capacity(j);
    if j > 1 {
        c.push(ratio(chain.preyed_by(1), chain.a11()));
    }
    d.push(ratio(rates.get(1), chain.a11()));
    for i in 2..=j {
        let f = chain.prey_on(i);
        // -f_i c'_{i-1}, negated throughout
        let pivot = c[i - 2] * f;
        if pivot.to_f64() == 0.0 || !pivot.is_finite() {
            return Err(Error::NumericalBreakdown { row: i });
        }
        if i < j {
            c.push(Dd::from(chain.preyed_by(i)) / pivot);
        }
        d.push((d[i - 2] * f - rates.get(i)) / pivot);
    }
    let mut x = vec![Dd::ZERO; j];
    x[j - 1] = d[j - 1];
    for k in (2..=j).rev() {
        let above = if k < j {
            x[k] * chain.preyed_by(k)
        } else {
            Dd::ZERO
        };
        x[k - 2] = (above + rates.get(k)) / chain.prey_on(k);
    }
    // a non-finite c' propagates into d'
    if let Some(row) = d
        .iter()
        .zip(&x)
        .position(|(a, b)| !(a.is_finite() && b.is_finite()))
    {
        return Err(Error::NumericalBreakdown { row: row + 1 });
    }
    Ok((c, d, x))
}

fn to_f64s(v: &[Dd]) -> Vec<f64> {
    v.iter().map(|d| d.to_f64()).collect()
}

/// Forward sweep and back-substitution from `x_j = d'_j`.
///
/// Computed in double-double and rounded once, so each reported value is
/// accurate to about one `f64` ulp unless the problem itself loses more
/// than 16 digits to cancellation.
pub fn forward_sweep(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<(SweepCoefficients, EquilibriumSolution)> {
    let (c, d, x) = sweep_dd(chain, rates, j)?;
    Ok((
        SweepCoefficients {
            c_prime: to_f64s(&c),
            d_prime: to_f64s(&d),
        },
        EquilibriumSolution::new(j, to_f64s(&x)),
    ))
}

/// Equilibrium of sub-chain `j` via the forward sweep.
pub fn equilibrium(
    chain: &FoodChain,
    rates: &EffectiveRates,
    j: usize,
) -> Result<EquilibriumSolution> {
    forward_sweep(chain, rates, j).map(|(_, sol)| sol)
}

/// Dense LU with partial pivoting. Used as an independent check of the sweep.
pub fn generic_solve(a: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<Vec<f64>> {
    if !a.is_square() || a.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch {
            what: "linear system",
            expected: a.nrows(),
            actual: rhs.len(),
        });
    }
    let x = a.clone().lu().solve(rhs).ok_or(Error::SingularMatrix)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    Ok(x.iter().copied().collect())
}

/// `‖A x - a‖_∞`.
pub fn residual(a: &DMatrix<f64>, rhs: &DVector<f64>, x: &[f64]) -> f64 {
    let x = DVector::from_column_slice(x);
    (a * x - rhs).amax()
}

/// `l_i = a_{i,i+1} / a_{i,i-1}` for `i >= 2`.
fn l(chain: &FoodChain, i: usize) -> f64 {
    chain.preyed_by(i) / chain.prey_on(i)
}

/// `c'_j` from the parity closed forms, `1 <= j <= n-1`.
pub fn closed_form_c(chain: &FoodChain, j: usize) -> Result<f64> {
    check_range(j, chain.n().saturating_sub(1))?;
    let c1 = chain.preyed_by(1) / chain.a11();
    if j == 1 {
        return Ok(c1);
    }
    if j.is_multiple_of(2) {
        let c2 = l(chain, 2) / c1;
        let prod: f64 = (2..=j / 2)
            .map(|i| l(chain, 2 * i) / l(chain, 2 * i - 1))
            .product();
        Ok(c2 * prod)
    } else {
        let prod: f64 = (1..=(j - 1) / 2)
            .map(|i| l(chain, 2 * i + 1) / l(chain, 2 * i))
            .product();
        Ok(c1 * prod)
    }
}

/// `ã10/a11 - Σ_odd - Σ_even`, the common bracket of the `d'_j` closed forms.
/// Equals `kappa_tilde(j) / a11`.
fn dn_bracket(chain: &FoodChain, rates: &EffectiveRates, j: usize) -> Dd {
    let a = |i, k| chain.coef(i, k);
    let odd: Dd = (1..=(j - 1) / 2)
        .map(|m| {
            let prod: Dd = (2..=m)
                .map(|i| ratio(a(2 * i - 1, 2 * i), a(2 * i - 1, 2 * i - 2)))
                .product();
            ratio(rates.get(2 * m + 1), a(2 * m + 1, 2 * m)) * ratio(a(1, 2), a(1, 1)) * prod
        })
        .sum();
    let even: Dd = (1..=j / 2)
        .map(|m| {
            let prod: Dd = (1..m)
                .map(|i| ratio(a(2 * i, 2 * i + 1), a(2 * i, 2 * i - 1)))
                .product();
            ratio(rates.get(2 * m), a(2 * m, 2 * m - 1)) * prod
        })
        .sum();
    ratio(rates.get(1), chain.a11()) - odd - even
}

fn dn_prefactor_dd(chain: &FoodChain, j: usize) -> Dd {
    let a = |i, k| chain.coef(i, k);
    if j % 2 == 1 {
        (1..=(j - 1) / 2)
            .map(|i| ratio(a(2 * i, 2 * i - 1), a(2 * i, 2 * i + 1)))
            .product()
    } else {
        let prod: Dd = (1..=(j - 2) / 2)
            .map(|i| ratio(a(2 * i + 1, 2 * i), a(2 * i + 1, 2 * i + 2)))
            .product();
        ratio(a(1, 1), a(1, 2)) * prod
    }
}

/// Multiplier `x_j^{(j)} / (kappa_tilde(j) / a11)`; strictly positive.
pub fn dn_prefactor(chain: &FoodChain, j: usize) -> f64 {
    dn_prefactor_dd(chain, j).to_f64()
}

pub(crate) fn closed_form_dn_dd(chain: &FoodChain, rates: &EffectiveRates, j: usize) -> Result<Dd> {
    check_range(j, chain.n())?;
    Ok(dn_prefactor_dd(chain, j) * dn_bracket(chain, rates, j))
}

/// `d'_j` (equivalently `x_j^{(j)}`) from the parity closed forms, `1 <= j <= n`.
pub fn closed_form_dn(chain: &FoodChain, rates: &EffectiveRates, j: usize) -> Result<f64> {
    closed_form_dn_dd(chain, rates, j).map(Dd::to_f64)
}
