use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rational = BigRational;

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `1/2^k`.
pub fn pow2_inv(k: usize) -> Rational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

/// A finite distribution with exact weights. Zero-weight outcomes are never
/// stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dist<T: Ord> {
    weights: BTreeMap<T, Rational>,
}

impl<T: Ord> Default for Dist<T> {
    fn default() -> Self {
        Dist { weights: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> Dist<T> {
    /// The empty sub-distribution; useful as an accumulator.
    pub fn empty() -> Self {
        Dist::default()
    }

    pub fn dirac(x: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(x, Rational::one());
        Dist { weights }
    }

    /// Uniform over the given outcomes (duplicates accumulate).
    pub fn uniform<I: IntoIterator<Item = T>>(items: I) -> Self {
        let items: Vec<T> = items.into_iter().collect();
        assert!(!items.is_empty(), "uniform distribution over nothing");
        let w = BigRational::new(BigInt::one(), BigInt::from(items.len()));
        Dist::from_pairs(items.into_iter().map(|x| (x, w.clone())))
    }

    pub fn from_pairs<I: IntoIterator<Item = (T, Rational)>>(pairs: I) -> Self {
        let mut d = Dist::empty();
        for (x, w) in pairs {
            d.add(x, w);
        }
        d
    }

    pub fn add(&mut self, x: T, w: Rational) {
        if w.is_zero() {
            return;
        }
        let slot = self.weights.entry(x).or_insert_with(Rational::zero);
        *slot += w;
    }

    pub fn add_scaled(&mut self, other: &Dist<T>, factor: &Rational) {
        for (x, w) in &other.weights {
            self.add(x.clone(), w * factor);
        }
    }

    pub fn prob(&self, x: &T) -> Rational {
        self.weights.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |a, b| a + b)
    }

    /// Every weight positive and the total exactly one.
    pub fn is_proper(&self) -> bool {
        self.weights.values().all(|w| *w > Rational::zero()) && self.total().is_one()
    }

    pub fn bind<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> Dist<U>) -> Dist<U> {
        let mut out = Dist::empty();
        for (x, w) in &self.weights {
            out.add_scaled(&f(x), w);
        }
        out
    }

    pub fn try_bind<U: Ord + Clone, E>(&self, mut f: impl FnMut(&T) -> Result<Dist<U>, E>) -> Result<Dist<U>, E> {
        let mut out = Dist::empty();
        for (x, w) in &self.weights {
            out.add_scaled(&f(x)?, w);
        }
        Ok(out)
    }

    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Dist<U> {
        Dist::from_pairs(self.weights.iter().map(|(x, w)| (f(x), w.clone())))
    }

    pub fn into_map(self) -> BTreeMap<T, Rational> {
        self.weights
    }
}

impl<T: Ord + fmt::Display> fmt::Display for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (x, w)) in self.weights.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}: {w}")?;
        }
        f.write_str("}")
    }
}
