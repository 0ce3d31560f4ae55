//! Distances over the Łukasiewicz quantale `([0,1], ⊕)`.

pub mod transport;

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::MetricError;
use crate::eval::{bigstep, probe_stores, store_space, Dist, Outcome, Rational, Store};
use crate::poly::Polynomial;
use crate::syntax::{subst_value, Bits, Ground, RefContext, Term, Type};

pub use transport::{solve, CostMatrix, Transport};

/// Default bound on the number of stores enumerated by a supremum.
pub const DEFAULT_STORE_CAP: u128 = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricValue(Rational);

impl MetricValue {
    pub fn new(r: Rational) -> Result<Self, MetricError> {
        if r.is_negative() || r > Rational::one() {
            return Err(MetricError::OutOfRange(r.to_string()));
        }
        Ok(MetricValue(r))
    }

    pub fn zero() -> Self {
        MetricValue(Rational::zero())
    }

    pub fn one() -> Self {
        MetricValue(Rational::one())
    }

    pub fn from_bool(differ: bool) -> Self {
        if differ {
            Self::one()
        } else {
            Self::zero()
        }
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `k`-fold truncated self-addition.
    pub fn times(&self, k: usize) -> Self {
        let r = &self.0 * Rational::from_integer(BigInt::from(k));
        MetricValue(r.min(Rational::one()))
    }

    pub fn max(self, other: Self) -> Self {
        Ord::max(self, other)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `x ⊕ y = min(1, x + y)`.
pub fn trunc_add(x: &MetricValue, y: &MetricValue) -> MetricValue {
    MetricValue((&x.0 + &y.0).min(Rational::one()))
}

/// `½ Σ |μ(x) − ν(x)|`.
pub fn statistical_distance<T: Ord + Clone>(mu: &Dist<T>, nu: &Dist<T>) -> MetricValue {
    let mut sum = Rational::zero();
    for (x, w) in mu.iter() {
        sum += (w - nu.prob(x)).abs();
    }
    for (x, w) in nu.iter() {
        if mu.prob(x).is_zero() {
            sum += w;
        }
    }
    MetricValue((sum / Rational::from_integer(2.into())).min(Rational::one()))
}

/// A joint distribution over pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling<X: Ord, Y: Ord> {
    pub joint: Dist<(X, Y)>,
}

impl<X: Ord + Clone, Y: Ord + Clone> Coupling<X, Y> {
    pub fn independent(mu: &Dist<X>, nu: &Dist<Y>) -> Self {
        Coupling { joint: mu.bind(|x| nu.map(|y| (x.clone(), y.clone()))) }
    }

    pub fn left(&self) -> Dist<X> {
        self.joint.map(|(x, _)| x.clone())
    }

    pub fn right(&self) -> Dist<Y> {
        self.joint.map(|(_, y)| y.clone())
    }

    pub fn cost(&self, mut c: impl FnMut(&X, &Y) -> Rational) -> Rational {
        self.joint.iter().map(|((x, y), w)| w * c(x, y)).sum()
    }
}

pub fn validate_coupling<X: Ord + Clone, Y: Ord + Clone>(g: &Coupling<X, Y>, mu: &Dist<X>, nu: &Dist<Y>) -> bool {
    g.left() == *mu && g.right() == *nu
}

/// An optimal coupling and its cost.
pub struct Plan<X: Ord, Y: Ord> {
    pub distance: MetricValue,
    pub coupling: Coupling<X, Y>,
    pub transport: Transport,
}

fn masses<T: Ord + Clone>(d: &Dist<T>) -> (Vec<T>, Vec<Rational>) {
    d.iter().map(|(x, w)| (x.clone(), w.clone())).unzip()
}

/// `K(d)(μ, ν)` with rows indexed by `supp μ` and columns by `supp ν`, both
/// in their natural order.
pub fn kantorovich<X: Ord + Clone, Y: Ord + Clone>(
    cost: &CostMatrix,
    mu: &Dist<X>,
    nu: &Dist<Y>,
) -> Result<MetricValue, MetricError> {
    Ok(kantorovich_plan(cost, mu, nu)?.distance)
}

pub fn kantorovich_plan<X: Ord + Clone, Y: Ord + Clone>(
    cost: &CostMatrix,
    mu: &Dist<X>,
    nu: &Dist<Y>,
) -> Result<Plan<X, Y>, MetricError> {
    if cost.rows() != mu.len() || cost.cols() != nu.len() {
        return Err(MetricError::Dimension { rows: cost.rows(), cols: cost.cols(), left: mu.len(), right: nu.len() });
    }
    let (xs, a) = masses(mu);
    let (ys, b) = masses(nu);
    let t = solve(cost, &a, &b)?;
    let coupling = Coupling {
        joint: Dist::from_pairs(t.plan.iter().map(|(i, j, w)| ((xs[*i].clone(), ys[*j].clone()), w.clone()))),
    };
    Ok(Plan { distance: MetricValue::new(t.value.clone())?, coupling, transport: t })
}

/// Kantorovich distance with the cost given pointwise.
pub fn kantorovich_by<X: Ord + Clone, Y: Ord + Clone>(
    mu: &Dist<X>,
    nu: &Dist<Y>,
    mut d: impl FnMut(&X, &Y) -> Result<MetricValue, MetricError>,
) -> Result<MetricValue, MetricError> {
    let xs: Vec<&X> = mu.support().collect();
    let ys: Vec<&Y> = nu.support().collect();
    let cost = CostMatrix::from_fn(xs.len(), ys.len(), |i, j| Ok(d(xs[i], ys[j])?.0))?;
    kantorovich(&cost, mu, nu)
}

/// Every closed value of an enumerable type at `n`.
pub fn enumerate_values(a: &Type, n: usize) -> Result<Vec<Term>, MetricError> {
    match a {
        Type::Ground(g) => Ok(crate::eval::ground_values(g, n)?),
        Type::Tensor(l, r) => {
            let ls = enumerate_values(l, n)?;
            let rs = enumerate_values(r, n)?;
            Ok(ls.iter().flat_map(|x| rs.iter().map(move |y| Term::pair(x.clone(), y.clone()))).collect())
        }
        _ => Err(MetricError::NotEnumerable(a.clone())),
    }
}

fn shape(t: &Term) -> MetricError {
    MetricError::Shape(t.to_string())
}

/// Logical metric at a fixed security parameter and store cap.
#[derive(Clone, Copy, Debug)]
pub struct Metric {
    pub n: usize,
    pub store_cap: u128,
}

impl Metric {
    pub fn new(n: usize) -> Self {
        Metric { n, store_cap: DEFAULT_STORE_CAP }
    }

    pub fn with_cap(n: usize, store_cap: u128) -> Self {
        Metric { n, store_cap }
    }

    /// `T̄_Θ(d_X)(φ, ψ)`: the supremum over stores of the Kantorovich
    /// distance with cost `d_X ⊕ disc` on (value, store) outcomes.
    pub fn lax_t(
        &self,
        theta: &RefContext,
        dx: impl FnMut(&Term, &Term) -> Result<MetricValue, MetricError>,
        phi: impl FnMut(&Store) -> Result<Dist<Outcome>, MetricError>,
        psi: impl FnMut(&Store) -> Result<Dist<Outcome>, MetricError>,
    ) -> Result<MetricValue, MetricError> {
        lax_over(store_space(theta, self.n, self.store_cap)?, dx, phi, psi)
    }

    /// `dV^A_n(V, W)`.
    pub fn dv(&self, a: &Type, v: &Term, w: &Term) -> Result<MetricValue, MetricError> {
        let n = self.n;
        match a {
            Type::Ground(g) => {
                let ok = match g {
                    Ground::Unit => matches!(v, Term::Star) && matches!(w, Term::Star),
                    Ground::Bool => v.as_bool().is_some() && w.as_bool().is_some(),
                    Ground::Str(p) => {
                        let len = p.eval_usize(n)?;
                        let fits = |t: &Term| t.as_bits().map(Bits::len) == Some(len);
                        fits(v) && fits(w)
                    }
                };
                if !ok {
                    return Err(shape(if v.is_ground_value() { w } else { v }));
                }
                Ok(MetricValue::from_bool(v != w))
            }
            Type::Tensor(l, r) => match (v, w) {
                (Term::Pair(v1, v2), Term::Pair(w1, w2)) => Ok(trunc_add(&self.dv(l, v1, w1)?, &self.dv(r, v2, w2)?)),
                _ => Err(shape(if matches!(v, Term::Pair(..)) { w } else { v })),
            },
            Type::Bang(p, theta, body) => match (v, w) {
                (Term::Bang(_, m), Term::Bang(_, k)) => {
                    let d = self.dc(theta, body, m, k)?;
                    Ok(d.times(p.eval_usize(n)?))
                }
                _ => Err(shape(if matches!(v, Term::Bang(..)) { w } else { v })),
            },
            Type::Arrow(p, theta, c) => match (v, w) {
                (Term::Lam(x, _, m), Term::Lam(y, _, k)) => {
                    if !p.is_enumerable() {
                        return Err(MetricError::NotEnumerable((**p).clone()));
                    }
                    let mut sup = MetricValue::zero();
                    for u in enumerate_values(&p.subst(&Polynomial::constant(n as u64)), n)? {
                        let d = self.dc(theta, c, &subst_value(m, x, &u), &subst_value(k, y, &u))?;
                        sup = sup.max(d);
                    }
                    Ok(sup)
                }
                _ => Err(shape(if matches!(v, Term::Lam(..)) { w } else { v })),
            },
        }
    }

    /// `dC^A_n(M, N) = T̄_Θ(dV^A)(⟦M⟧_n, ⟦N⟧_n)`.
    pub fn dc(&self, theta: &RefContext, a: &Type, m: &Term, k: &Term) -> Result<MetricValue, MetricError> {
        let n = self.n;
        lax_over(
            probe_stores(&[m, k], theta, n, self.store_cap, false)?,
            |x, y| self.dv(a, x, y),
            |e| Ok(bigstep(m, e, n)?),
            |e| Ok(bigstep(k, e, n)?),
        )
    }
}

fn lax_over(
    stores: Vec<Store>,
    mut dx: impl FnMut(&Term, &Term) -> Result<MetricValue, MetricError>,
    mut phi: impl FnMut(&Store) -> Result<Dist<Outcome>, MetricError>,
    mut psi: impl FnMut(&Store) -> Result<Dist<Outcome>, MetricError>,
) -> Result<MetricValue, MetricError> {
    let mut sup = MetricValue::zero();
    for e in stores {
        let (mu, nu) = (phi(&e)?, psi(&e)?);
        let d =
            kantorovich_by(&mu, &nu, |(x, e1), (y, e2)| Ok(trunc_add(&dx(x, y)?, &MetricValue::from_bool(e1 != e2))))?;
        sup = sup.max(d);
        if sup == MetricValue::one() {
            break;
        }
    }
    Ok(sup)
}

pub fn dv(a: &Type, n: usize, v: &Term, w: &Term) -> Result<MetricValue, MetricError> {
    Metric::new(n).dv(a, v, w)
}

pub fn dc(theta: &RefContext, a: &Type, n: usize, m: &Term, k: &Term) -> Result<MetricValue, MetricError> {
    Metric::new(n).dc(theta, a, m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ratio;

    #[test]
    fn truncated_addition() {
        let half = MetricValue::new(ratio(1, 2)).unwrap();
        let three_quarters = MetricValue::new(ratio(3, 4)).unwrap();
        assert_eq!(trunc_add(&MetricValue::one(), &MetricValue::one()), MetricValue::one());
        assert_eq!(trunc_add(&MetricValue::zero(), &half), half);
        assert_eq!(trunc_add(&half, &three_quarters), MetricValue::one());
        assert_eq!(half.times(3), MetricValue::one());
        assert!(MetricValue::new(ratio(3, 2)).is_err());
    }

    #[test]
    fn statistical_distance_examples() {
        let coin = Dist::uniform([true, false]);
        assert!(statistical_distance(&coin, &coin).is_zero());
        assert_eq!(statistical_distance(&Dist::dirac(true), &coin).value(), &ratio(1, 2));
    }

    #[test]
    fn kantorovich_examples() {
        let coin = Dist::uniform([true, false]);
        let t = Dist::dirac(true);
        let disc = |x: &bool, y: &bool| Ok(MetricValue::from_bool(x != y));
        assert!(kantorovich_by(&coin, &coin, disc).unwrap().is_zero());
        assert_eq!(kantorovich_by(&t, &coin, disc).unwrap().value(), &ratio(1, 2));
        assert!(kantorovich_by(&t, &coin, |_, _| Ok(MetricValue::zero())).unwrap().is_zero());
    }

    #[test]
    fn degenerate_transport() {
        let a = vec![ratio(1, 2), ratio(1, 2)];
        let cost = CostMatrix::new(2, 2, vec![ratio(1, 1), ratio(0, 1), ratio(0, 1), ratio(1, 1)]).unwrap();
        let t = solve(&cost, &a, &a).unwrap();
        assert!(t.value.is_zero());
        assert!(t.certifies(&cost, &a, &a));
    }
}
