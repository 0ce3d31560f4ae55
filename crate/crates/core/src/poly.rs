//! Polynomial grades over one indeterminate `i` (the security parameter).
//!
//! Grades live in the semiring generated by `1`, `i`, `+` and `×`, so every
//! coefficient is a natural number and the polynomial is never zero. They are
//! kept in a dense canonical form: index `k` holds the coefficient of `i^k`
//! and the trailing coefficient is nonzero.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::PolyError;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Polynomial {
    coeffs: Vec<BigUint>,
}

impl Polynomial {
    /// Builds a polynomial from its coefficients (lowest degree first).
    ///
    /// Fails when every coefficient is zero: the zero polynomial is not a grade.
    pub fn from_coeffs<I, C>(coeffs: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = C>,
        C: Into<BigUint>,
    {
        let mut coeffs: Vec<BigUint> = coeffs.into_iter().map(Into::into).collect();
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(PolyError::Zero);
        }
        Ok(Polynomial { coeffs })
    }

    pub fn one() -> Self {
        Polynomial::constant(1u32)
    }

    /// The indeterminate `i`.
    pub fn var() -> Self {
        Polynomial { coeffs: vec![BigUint::zero(), BigUint::one()] }
    }

    /// Constant polynomial `c`. Panics on `c = 0`.
    pub fn constant(c: impl Into<BigUint>) -> Self {
        let c = c.into();
        assert!(!c.is_zero(), "grades are positive");
        Polynomial { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// The value of a constant polynomial.
    pub fn as_constant(&self) -> Option<&BigUint> {
        if self.is_constant() {
            self.coeffs.first()
        } else {
            None
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                let a = self.coeffs.get(k).cloned().unwrap_or_default();
                let b = other.coeffs.get(k).cloned().unwrap_or_default();
                a + b
            })
            .collect();
        Polynomial { coeffs }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut coeffs = vec![BigUint::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, b) in other.coeffs.iter().enumerate() {
                coeffs[j + k] += a * b;
            }
        }
        // Product of two nonzero ℕ-polynomials keeps a nonzero leading term.
        Polynomial { coeffs }
    }

    /// `Σ_k coeffs[k]·n^k`. Rejects `n = 0`, outside the parameter domain.
    pub fn eval(&self, n: &BigUint) -> Result<BigUint, PolyError> {
        if n.is_zero() {
            return Err(PolyError::ZeroParameter);
        }
        Ok(self.horner(n))
    }

    /// Evaluation at a machine-sized parameter, for lengths and counts.
    pub fn eval_usize(&self, n: usize) -> Result<usize, PolyError> {
        let v = self.eval(&BigUint::from(n))?;
        v.to_usize().ok_or(PolyError::Overflow)
    }

    fn horner(&self, n: &BigUint) -> BigUint {
        self.coeffs.iter().rev().fold(BigUint::zero(), |acc, c| acc * n + c)
    }

    /// Replaces `i` by `q`.
    pub fn subst(&self, q: &Polynomial) -> Polynomial {
        let mut acc: Option<Polynomial> = None;
        // Horner over polynomials; zero coefficients are skipped by tracking
        // an additive constant separately.
        for c in self.coeffs.iter().rev() {
            acc = match acc {
                None => Some(Polynomial { coeffs: vec![c.clone()] }),
                Some(p) => {
                    let mut prod = p.mul(q);
                    prod.coeffs[0] += c;
                    Some(prod)
                }
            };
        }
        acc.expect("nonempty coefficients")
    }

    /// Coefficient-wise `self ≥ other`. This is the order used when a grade
    /// must cover a demand (`self = other + r` for some `r` with natural
    /// coefficients).
    pub fn covers(&self, other: &Polynomial) -> bool {
        if other.coeffs.len() > self.coeffs.len() {
            return false;
        }
        other.coeffs.iter().zip(&self.coeffs).all(|(b, a)| a >= b)
    }

    /// Coefficient-wise maximum; pointwise an upper bound of both arguments.
    pub fn join(&self, other: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| {
                let a = self.coeffs.get(k).cloned().unwrap_or_default();
                let b = other.coeffs.get(k).cloned().unwrap_or_default();
                a.max(b)
            })
            .collect();
        Polynomial { coeffs }
    }
}

impl From<u32> for Polynomial {
    fn from(c: u32) -> Self {
        Polynomial::constant(c)
    }
}

impl fmt::Display for Polynomial {
    /// Highest degree first, e.g. `2*i*i + 3*i + 1`; parses back to itself.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if k == 0 {
                write!(f, "{c}")?;
                continue;
            }
            let mut parts = Vec::with_capacity(k + 1);
            if !c.is_one() {
                parts.push(c.to_string());
            }
            parts.extend(std::iter::repeat_n("i".to_string(), k));
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(cs: &[u32]) -> Polynomial {
        Polynomial::from_coeffs(cs.iter().copied()).unwrap()
    }

    #[test]
    fn add_examples() {
        assert_eq!(p(&[1]).add(&p(&[1])), p(&[2]));
        assert_eq!(Polynomial::var().add(&Polynomial::one()), p(&[1, 1]));
        assert_eq!(p(&[1, 1]).add(&p(&[0, 0, 1])), p(&[1, 1, 1]));
    }

    #[test]
    fn mul_examples() {
        let i = Polynomial::var();
        assert_eq!(i.mul(&i), p(&[0, 0, 1]));
        assert_eq!(Polynomial::one().mul(&p(&[3, 0, 2])), p(&[3, 0, 2]));
        assert_eq!(p(&[1, 1]).mul(&p(&[1, 1])), p(&[1, 2, 1]));
    }

    #[test]
    fn eval_examples() {
        let e = |q: &Polynomial, n: u32| q.eval(&BigUint::from(n)).unwrap();
        assert_eq!(e(&p(&[1, 0, 1]), 3), BigUint::from(10u32));
        assert_eq!(e(&p(&[1]), 7), BigUint::from(1u32));
        assert_eq!(e(&p(&[3, 2]), 5), BigUint::from(13u32));
        assert_eq!(p(&[1]).eval(&BigUint::zero()), Err(PolyError::ZeroParameter));
    }

    #[test]
    fn subst_examples() {
        let i = Polynomial::var();
        assert_eq!(p(&[0, 0, 1]).subst(&p(&[1, 1])), p(&[1, 2, 1]));
        let q = p(&[4, 0, 3]);
        assert_eq!(q.subst(&i), q);
        assert_eq!(p(&[1]).subst(&p(&[5, 5])), p(&[1]));
    }

    #[test]
    fn zero_is_rejected() {
        assert_eq!(Polynomial::from_coeffs([0u32, 0]), Err(PolyError::Zero));
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(p(&[1, 3, 2]).to_string(), "2*i*i + 3*i + 1");
        assert_eq!(p(&[0, 1]).to_string(), "i");
        assert_eq!(p(&[5]).to_string(), "5");
    }

    #[test]
    fn covers_is_coefficientwise() {
        assert!(p(&[2, 1]).covers(&p(&[1, 1])));
        assert!(p(&[2, 1]).covers(&p(&[2, 1])));
        assert!(!p(&[0, 2]).covers(&p(&[1])));
    }
}
