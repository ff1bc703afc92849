//! Exact transition probabilities as sums of `c * α^i * (1-α)^k`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// `multiplicity * α^alpha_exp * (1-α)^comp_exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub multiplicity: u64,
    pub alpha_exp: u32,
    pub comp_exp: u32,
}

impl Term {
    pub fn new(multiplicity: u64, alpha_exp: u32, comp_exp: u32) -> Self {
        Term {
            multiplicity,
            alpha_exp,
            comp_exp,
        }
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.multiplicity as f64 * alpha.powi(self.alpha_exp as i32) * (1.0 - alpha).powi(self.comp_exp as i32)
    }
}

/// A nonnegative combination of [`Term`]s, merged by exponent pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbExpr {
    terms: BTreeMap<(u32, u32), u64>,
}

impl ProbExpr {
    pub fn zero() -> Self {
        ProbExpr::default()
    }

    pub fn one() -> Self {
        ProbExpr::from_term(Term::new(1, 0, 0))
    }

    pub fn from_term(t: Term) -> Self {
        let mut e = ProbExpr::zero();
        e.add_term(t);
        e
    }

    pub fn add_term(&mut self, t: Term) {
        if t.multiplicity == 0 {
            return;
        }
        *self.terms.entry((t.alpha_exp, t.comp_exp)).or_insert(0) += t.multiplicity;
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.terms
            .iter()
            .map(|(&(i, k), &m)| Term::new(m, i, k))
    }

    /// Every term is strictly positive on `(0,1)`, so an expression vanishes
    /// identically there iff it has no terms.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, alpha: f64) -> f64 {
        self.terms().map(|t| t.eval(alpha)).sum()
    }

    pub fn eval_exact(&self, alpha: &BigRational) -> BigRational {
        let comp = BigRational::one() - alpha;
        self.terms()
            .map(|t| {
                BigRational::from_integer(BigInt::from(t.multiplicity))
                    * num_traits::pow(alpha.clone(), t.alpha_exp as usize)
                    * num_traits::pow(comp.clone(), t.comp_exp as usize)
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }

    /// Expansion in the monomial basis of α.
    pub fn to_polynomial(&self) -> Polynomial {
        self.terms()
            .map(|t| {
                Polynomial::constant(BigInt::from(t.multiplicity))
                    * Polynomial::alpha_pow(t.alpha_exp)
                    * Polynomial::one_minus_alpha_pow(t.comp_exp)
            })
            .fold(Polynomial::zero(), |a, b| a + b)
    }

    /// Identity as functions of α (not merely as term lists).
    pub fn same_function(&self, other: &ProbExpr) -> bool {
        self.to_polynomial() == other.to_polynomial()
    }
}

impl AddAssign<&ProbExpr> for ProbExpr {
    fn add_assign(&mut self, rhs: &ProbExpr) {
        for t in rhs.terms() {
            self.add_term(t);
        }
    }
}

impl Mul<&ProbExpr> for &ProbExpr {
    type Output = ProbExpr;

    fn mul(self, rhs: &ProbExpr) -> ProbExpr {
        let mut out = ProbExpr::zero();
        for a in self.terms() {
            for b in rhs.terms() {
                out.add_term(Term::new(
                    a.multiplicity * b.multiplicity,
                    a.alpha_exp + b.alpha_exp,
                    a.comp_exp + b.comp_exp,
                ));
            }
        }
        out
    }
}

impl fmt::Display for ProbExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (n, t) in self.terms().enumerate() {
            if n > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}·α^{}·(1-α)^{}", t.multiplicity, t.alpha_exp, t.comp_exp)?;
        }
        Ok(())
    }
}

/// Polynomial in α with exact integer coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    coeffs: Vec<BigInt>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: BigInt) -> Self {
        Polynomial::from_coeffs(vec![c])
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn alpha_pow(n: u32) -> Self {
        let mut coeffs = vec![BigInt::zero(); n as usize + 1];
        coeffs[n as usize] = BigInt::one();
        Polynomial::from_coeffs(coeffs)
    }

    pub fn one_minus_alpha_pow(n: u32) -> Self {
        // binomial expansion of (1 - α)^n
        let n = n as usize;
        let mut coeffs = Vec::with_capacity(n + 1);
        let mut binom = BigInt::one();
        for k in 0..=n {
            let c = if k % 2 == 0 { binom.clone() } else { -binom.clone() };
            coeffs.push(c);
            binom = binom * BigInt::from(n - k) / BigInt::from(k + 1);
        }
        Polynomial::from_coeffs(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    pub fn has_negative_coefficient(&self) -> bool {
        self.coeffs.iter().any(|c| c.is_negative())
    }
}

impl Add for Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| {
                self.coeffs.get(i).cloned().unwrap_or_default()
                    + rhs.coeffs.get(i).cloned().unwrap_or_default()
            })
            .collect();
        Polynomial::from_coeffs(coeffs)
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(coeffs)
    }
}
