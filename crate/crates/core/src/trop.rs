//! Max-plus tropical arithmetic and its smooth deformation.
//!
//! The tropical semiring replaces addition with `max` and multiplication
//! with `+`; the additive identity is the bottom element (minus infinity)
//! and the multiplicative identity is `0`. The deformed operations replace
//! `max` with the temperature-scaled LogSumExp
//! `a (+)_tau b = tau * log(exp(a/tau) + exp(b/tau))`, which recovers `max`
//! in the zero-temperature limit. Tropical polynomials
//! `P(x) = max_j (c_j + <alpha_j, x>)` evaluate under either regime and
//! report the set of active terms.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_finite, dot};
use crate::scalar::Scalar;

/// Softmax mass a term must carry to count as active at finite temperature.
pub const DOMINANCE_MASS: f64 = 1e-6;

/// Extended real with a distinguished bottom element.
///
/// Bottom is kept as a variant rather than a sentinel float so that the
/// deformed arithmetic never feeds infinities through `exp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TropScalar<S> {
    Bottom,
    Finite(S),
}

impl<S: Scalar> TropScalar<S> {
    pub fn finite(v: S) -> Self {
        debug_assert!(v.is_finite());
        TropScalar::Finite(v)
    }

    pub fn bottom() -> Self {
        TropScalar::Bottom
    }

    /// Additive identity (bottom).
    pub fn zero() -> Self {
        TropScalar::Bottom
    }

    /// Multiplicative identity (the real number 0).
    pub fn one() -> Self {
        TropScalar::Finite(S::zero())
    }

    pub fn value(self) -> Option<S> {
        match self {
            TropScalar::Bottom => None,
            TropScalar::Finite(v) => Some(v),
        }
    }

    /// Tropical addition: `a (+) b = max(a, b)`; bottom is the identity.
    pub fn trop_add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (TropScalar::Bottom, x) | (x, TropScalar::Bottom) => x,
            (TropScalar::Finite(a), TropScalar::Finite(b)) => TropScalar::Finite(a.max(b)),
        }
    }

    /// Tropical multiplication: `a (x) b = a + b`; bottom is absorbing.
    pub fn trop_mul(self, rhs: Self) -> Self {
        match (self, rhs) {
            (TropScalar::Bottom, _) | (_, TropScalar::Bottom) => TropScalar::Bottom,
            (TropScalar::Finite(a), TropScalar::Finite(b)) => TropScalar::Finite(a + b),
        }
    }
}

impl<S: Scalar> Add for TropScalar<S> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.trop_add(rhs)
    }
}

impl<S: Scalar> Mul for TropScalar<S> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.trop_mul(rhs)
    }
}

impl<S: Scalar> From<S> for TropScalar<S> {
    fn from(v: S) -> Self {
        TropScalar::finite(v)
    }
}

/// Dequantization temperature: either the exact zero-temperature limit or a
/// strictly positive finite value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Temperature<S> {
    Zero,
    Finite(S),
}

impl<S: Scalar> Temperature<S> {
    pub fn zero() -> Self {
        Temperature::Zero
    }

    pub fn finite(tau: S) -> Result<Self> {
        if !(tau.is_finite() && tau > S::zero()) {
            return Err(Error::InvalidTemperature);
        }
        Ok(Temperature::Finite(tau))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Temperature::Zero)
    }

    pub fn tau(&self) -> Option<S> {
        match self {
            Temperature::Zero => None,
            Temperature::Finite(t) => Some(*t),
        }
    }
}

/// Deformed sum `tau * log(sum_j exp(v_j / tau))`, computed in max-shifted
/// form so no overflow occurs for any finite inputs. The zero-temperature
/// marker gives the exact maximum.
pub fn lse_add<S: Scalar>(values: &[S], temp: Temperature<S>) -> Result<S> {
    if values.is_empty() {
        return Err(Error::EmptyOperands);
    }
    let m = values.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
    match temp {
        Temperature::Zero => Ok(m),
        Temperature::Finite(tau) => {
            let mut acc = S::zero();
            for &v in values {
                acc = acc + ((v - m) / tau).exp();
            }
            Ok(m + tau * acc.ln())
        }
    }
}

/// Softmax masses of `values` at temperature `tau`, max-shifted, with a
/// compensated sum so the masses add to one at full precision.
pub fn softmax_masses<S: Scalar>(values: &[S], tau: S) -> Vec<S> {
    let m = values.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
    let mut exps: Vec<S> = values.iter().map(|&v| ((v - m) / tau).exp()).collect();
    // Kahan sum keeps the normalizer error at one ulp of the total.
    let mut sum = S::zero();
    let mut comp = S::zero();
    for &e in &exps {
        let y = e - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    for e in exps.iter_mut() {
        *e = *e / sum;
    }
    exps
}

/// Tropical polynomial: a non-empty list of `(coefficient, exponent)` terms
/// over a fixed ambient dimension. Construction merges duplicate exponent
/// vectors, keeping the larger coefficient (the tropical sum of like terms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct TropicalPolynomial<S: Scalar> {
    terms: Vec<(S, Vec<S>)>,
    dim: usize,
}

impl<S: Scalar> TropicalPolynomial<S> {
    pub fn new(terms: Vec<(S, Vec<S>)>, dim: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyOperands);
        }
        let mut merged: Vec<(S, Vec<S>)> = Vec::with_capacity(terms.len());
        for (coeff, exponent) in terms {
            if !coeff.is_finite() {
                return Err(Error::NonFinite);
            }
            check_dim(&exponent, dim)?;
            check_finite(&exponent)?;
            match merged.iter_mut().find(|(_, e)| *e == exponent) {
                Some((c, _)) => *c = c.max(coeff),
                None => merged.push((coeff, exponent)),
            }
        }
        Ok(Self { terms: merged, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(S, Vec<S>)] {
        &self.terms
    }

    /// Exponent vectors, i.e. the generating points of the Newton polytope.
    pub fn exponents(&self) -> impl Iterator<Item = &[S]> {
        self.terms.iter().map(|(_, e)| e.as_slice())
    }

    /// Evaluate at `x`, returning the value and the set of active term
    /// indices. At zero temperature the active set is every term within the
    /// tie tolerance of the maximum; at finite temperature it is every term
    /// whose softmax mass reaches [`DOMINANCE_MASS`].
    pub fn eval(&self, x: &[S], temp: Temperature<S>) -> Result<(S, Vec<usize>)> {
        check_dim(x, self.dim)?;
        let scores: Vec<S> = self
            .terms
            .iter()
            .map(|(c, e)| *c + dot(e, x))
            .collect();
        match temp {
            Temperature::Zero => {
                let m = scores.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
                let tol = S::tie_tol();
                let active = scores
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| m - s <= tol)
                    .map(|(i, _)| i)
                    .collect();
                Ok((m, active))
            }
            Temperature::Finite(tau) => {
                let value = lse_add(&scores, temp)?;
                let masses = softmax_masses(&scores, tau);
                let threshold = S::c(DOMINANCE_MASS);
                let active = masses
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p >= threshold)
                    .map(|(i, _)| i)
                    .collect();
                Ok((value, active))
            }
        }
    }
}

/// Free-function form of [`TropicalPolynomial::eval`].
pub fn eval_trop_poly<S: Scalar>(
    p: &TropicalPolynomial<S>,
    x: &[S],
    temp: Temperature<S>,
) -> Result<(S, Vec<usize>)> {
    p.eval(x, temp)
}
