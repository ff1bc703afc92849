//! Class-level transition matrices, stationary distributions and the
//! pattern-count weight `α^{m010} / (1-α)^{m1110+m010}`.
//!
//! Distributions here live on rotation classes. A class carries the combined
//! mass of its `orbit_size` configurations, so the per-configuration weight
//! is multiplied by the orbit size before normalizing.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dynamics::{branch_outcomes, expected_flux_sum, FluxRule};
use crate::ensemble::OmegaSet;
use crate::error::{Error, Result};
use crate::prob::ProbExpr;

pub const SOLVE_RESIDUAL_TOL: f64 = 1e-12;
pub const NEGATIVITY_TOL: f64 = 1e-14;
pub const CONJECTURE_REL_TOL: f64 = 1e-8;
pub const VERIFY_ALPHAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

const POWER_MAX_ITER: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub omega: OmegaSet,
    /// `entries[i][j]`: probability of moving from member `i` to member `j`.
    pub entries: Vec<Vec<ProbExpr>>,
}

pub fn build_matrix(omega: &OmegaSet) -> Result<TransitionMatrix> {
    let rule = FluxRule::stoch_v();
    let n = omega.size();
    let mut entries = vec![vec![ProbExpr::zero(); n]; n];
    for (i, member) in omega.members.iter().enumerate() {
        for out in branch_outcomes(&member.representative, &rule) {
            let j = omega.index_of(&out.next).ok_or_else(|| {
                Error::Internal(format!(
                    "{} reaches {} which is outside irreducible set {}",
                    member.representative, out.next, omega.id
                ))
            })?;
            entries[i][j] += &out.probability;
        }
    }
    Ok(TransitionMatrix {
        omega: omega.clone(),
        entries,
    })
}

impl TransitionMatrix {
    pub fn order(&self) -> usize {
        self.entries.len()
    }

    /// Every row sums to the constant polynomial 1.
    pub fn rows_sum_to_one(&self) -> bool {
        self.entries.iter().all(|row| {
            let mut total = ProbExpr::zero();
            for e in row {
                total += e;
            }
            total.to_polynomial().is_one()
        })
    }

    pub fn evaluate(&self, alpha: f64) -> DMatrix<f64> {
        let n = self.order();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j].eval(alpha))
    }

    pub fn evaluate_exact(&self, alpha: &BigRational) -> Vec<Vec<BigRational>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.eval_exact(alpha)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Direct,
    PowerIteration,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryDistribution {
    pub alpha: f64,
    pub probabilities: Vec<f64>,
    pub residual: f64,
    pub method: SolveMethod,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// `max_i |(πP)_i - π_i|`.
pub fn stationarity_residual(p: &DMatrix<f64>, pi: &[f64]) -> f64 {
    let row = DVector::from_column_slice(pi).transpose() * p;
    row.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn direct_solve(p: &DMatrix<f64>) -> Option<Vec<f64>> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let total: f64 = x.iter().sum();
    Some(x.iter().map(|v| v / total).collect())
}

/// Power iteration on the lazy chain `(P + I)/2`, which has the same
/// stationary vector and no periodicity.
pub fn power_iteration(p: &DMatrix<f64>, tol: f64) -> Vec<f64> {
    let n = p.nrows();
    let lazy = (p + DMatrix::<f64>::identity(n, n)) * 0.5;
    let mut pi = DVector::from_element(n, 1.0 / n as f64).transpose();
    for _ in 0..POWER_MAX_ITER {
        let next = &pi * &lazy;
        let delta = (&next - &pi).amax();
        pi = next;
        if delta < tol {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter().map(|v| v / total).collect()
}

fn acceptable(p: &DMatrix<f64>, pi: &[f64]) -> Option<f64> {
    let residual = stationarity_residual(p, pi);
    let min = pi.iter().cloned().fold(f64::INFINITY, f64::min);
    (residual <= SOLVE_RESIDUAL_TOL && min >= -NEGATIVITY_TOL && residual.is_finite()).then_some(residual)
}

/// Normalized left eigenvector for eigenvalue 1.
pub fn stationary(matrix: &TransitionMatrix, alpha: f64) -> Result<StationaryDistribution> {
    check_alpha(alpha)?;
    let p = matrix.evaluate(alpha);
    if let Some(pi) = direct_solve(&p) {
        if let Some(residual) = acceptable(&p, &pi) {
            return Ok(StationaryDistribution {
                alpha,
                probabilities: pi,
                residual,
                method: SolveMethod::Direct,
            });
        }
    }
    let pi = power_iteration(&p, 1e-16);
    match acceptable(&p, &pi) {
        Some(residual) => Ok(StationaryDistribution {
            alpha,
            probabilities: pi,
            residual,
            method: SolveMethod::PowerIteration,
        }),
        None => Err(Error::Numerical {
            message: format!(
                "no stationary vector for irreducible set {} of ({}, {}, {}) at alpha={alpha}",
                matrix.omega.id, matrix.omega.len, matrix.omega.m1, matrix.omega.m110
            ),
            residual: stationarity_residual(&p, &pi),
        }),
    }
}

/// Exact stationary vector at rational α by Gaussian elimination over ℚ.
pub fn stationary_exact(matrix: &TransitionMatrix, alpha: &BigRational) -> Result<Vec<BigRational>> {
    let n = matrix.order();
    let p = matrix.evaluate_exact(alpha);
    // rows of (Pᵀ - I), last replaced by normalization, augmented with rhs
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|j| {
                    let mut v = p[j][i].clone();
                    if i == j {
                        v -= BigRational::one();
                    }
                    v
                })
                .collect();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![BigRational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Numerical {
                message: format!("singular exact system at column {col}"),
                residual: f64::NAN,
            })?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut().skip(col) {
            *v *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *v -= &factor * pv;
                }
            }
        }
    }
    let pi: Vec<BigRational> = a.into_iter().map(|row| row[n].clone()).collect();
    if pi.iter().any(|v| v.is_negative()) {
        return Err(Error::Numerical {
            message: "exact stationary vector has a negative entry".into(),
            residual: f64::NAN,
        });
    }
    Ok(pi)
}

/// Weight data of one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConjectureWeight {
    pub orbit_size: usize,
    pub m1110: usize,
    pub m010: usize,
}

impl ConjectureWeight {
    pub fn weight(&self, alpha: f64) -> f64 {
        self.orbit_size as f64 * alpha.powi(self.m010 as i32)
            / (1.0 - alpha).powi((self.m1110 + self.m010) as i32)
    }

    pub fn weight_exact(&self, alpha: &BigRational) -> BigRational {
        let comp = BigRational::one() - alpha;
        BigRational::from_integer(BigInt::from(self.orbit_size))
            * num_traits::pow(alpha.clone(), self.m010)
            / num_traits::pow(comp, self.m1110 + self.m010)
    }
}

pub fn conjecture_weights(omega: &OmegaSet) -> Vec<ConjectureWeight> {
    omega
        .members
        .iter()
        .map(|c| {
            let (m1110, m010) = c.representative.weight_exponents();
            ConjectureWeight {
                orbit_size: c.orbit_size,
                m1110,
                m010,
            }
        })
        .collect()
}

/// Normalized per-class distribution predicted by the pattern-count weight.
pub fn conjecture_vector(omega: &OmegaSet, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let w: Vec<f64> = conjecture_weights(omega).iter().map(|c| c.weight(alpha)).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

pub fn conjecture_vector_exact(omega: &OmegaSet, alpha: &BigRational) -> Vec<BigRational> {
    let w: Vec<BigRational> = conjecture_weights(omega)
        .iter()
        .map(|c| c.weight_exact(alpha))
        .collect();
    let total = w.iter().fold(BigRational::zero(), |a, b| a + b);
    w.into_iter().map(|v| v / &total).collect()
}

/// Largest `|a_i - b_i| / b_i`.
pub fn max_relative_error(actual: &[f64], reference: &[f64]) -> f64 {
    actual
        .iter()
        .zip(reference)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureCheck {
    pub alpha: f64,
    pub max_rel_error: f64,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    pub len: usize,
    pub m1: usize,
    pub m110: usize,
    pub omega_id: usize,
    pub size: usize,
    pub tolerance: f64,
    pub checks: Vec<ConjectureCheck>,
}

impl ConjectureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn worst_error(&self) -> f64 {
        self.checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max)
    }
}

pub fn verify_conjecture(omega: &OmegaSet, alphas: &[f64], tol: f64) -> Result<ConjectureReport> {
    let matrix = build_matrix(omega)?;
    verify_conjecture_with(&matrix, alphas, tol)
}

pub fn verify_conjecture_with(
    matrix: &TransitionMatrix,
    alphas: &[f64],
    tol: f64,
) -> Result<ConjectureReport> {
    let omega = &matrix.omega;
    let checks = alphas
        .iter()
        .map(|&alpha| {
            let st = stationary(matrix, alpha)?;
            let conj = conjecture_vector(omega, alpha)?;
            let err = max_relative_error(&st.probabilities, &conj);
            Ok(ConjectureCheck {
                alpha,
                max_rel_error: err,
                residual: st.residual,
                passed: err <= tol,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConjectureReport {
        len: omega.len,
        m1: omega.m1,
        m110: omega.m110,
        omega_id: omega.id,
        size: omega.size(),
        tolerance: tol,
        checks,
    })
}

/// `Σ_x π(x) (α ρ1110(x) + ρ010(x))` over the classes of `omega`.
pub fn stationary_flux(omega: &OmegaSet, pi: &[f64], alpha: f64) -> f64 {
    let rule = FluxRule::stoch_v();
    omega
        .members
        .iter()
        .zip(pi)
        .map(|(c, p)| p * expected_flux_sum(&c.representative, &rule).eval(alpha))
        .sum::<f64>()
        / omega.len as f64
}

pub fn stationary_flux_exact(omega: &OmegaSet, pi: &[BigRational], alpha: &BigRational) -> BigRational {
    let rule = FluxRule::stoch_v();
    let total = omega
        .members
        .iter()
        .zip(pi)
        .map(|(c, p)| p * expected_flux_sum(&c.representative, &rule).eval_exact(alpha))
        .fold(BigRational::zero(), |a, b| a + b);
    total / BigRational::from_integer(BigInt::from(omega.len))
}
