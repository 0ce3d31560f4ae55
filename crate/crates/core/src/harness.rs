//! Security-parameter sweeps and bound checking.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::MetricError;
use crate::eval::{bigstep, probe_stores, values, Rational};
use crate::metric::{statistical_distance, Metric, MetricValue, DEFAULT_STORE_CAP};
use crate::syntax::{RefContext, Term, Type, VarContext};
use crate::typing::check_comp_against;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub store_cap: u128,
    /// Worker threads for per-`n` rows; 0 lets rayon decide.
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { store_cap: DEFAULT_STORE_CAP, jobs: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub n: usize,
    pub distance: Result<MetricValue, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn from_values(rows: impl IntoIterator<Item = (usize, MetricValue)>) -> Self {
        SweepTable { rows: rows.into_iter().map(|(n, d)| SweepRow { n, distance: Ok(d) }).collect() }
    }

    pub fn errors(&self) -> impl Iterator<Item = (usize, &str)> {
        self.rows.iter().filter_map(|r| r.distance.as_ref().err().map(|e| (r.n, e.as_str())))
    }

    pub fn distances(&self) -> Vec<Option<&MetricValue>> {
        self.rows.iter().map(|r| r.distance.as_ref().ok()).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| match &r.distance {
                    Ok(d) => json!({"n": r.n, "distance": d.to_string(), "mode": "exact"}),
                    Err(e) => json!({"n": r.n, "error": e}),
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,distance\n");
        for r in &self.rows {
            match &r.distance {
                Ok(d) => out.push_str(&format!("{},{}\n", r.n, d)),
                Err(_) => out.push_str(&format!("{},error\n", r.n)),
            }
        }
        out
    }
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool")
}

/// Rows computed independently and reported in increasing `n`.
pub fn rows<T: Send>(range: RangeInclusive<usize>, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<(usize, T)> {
    let ns: Vec<usize> = range.collect();
    pool(jobs).install(|| ns.par_iter().map(|&n| (n, f(n))).collect())
}

fn check_both(m: &Term, k: &Term, theta: &RefContext, a: &Type) -> Result<(), MetricError> {
    let g = VarContext::new();
    check_comp_against(&g, theta, m, a)?;
    check_comp_against(&g, theta, k, a)?;
    Ok(())
}

/// `dC_n(M{n}, N{n})` for every `n` in range.
pub fn sweep(
    m: &Term,
    k: &Term,
    theta: &RefContext,
    a: &Type,
    range: RangeInclusive<usize>,
    opts: Options,
) -> Result<SweepTable, MetricError> {
    check_both(m, k, theta, a)?;
    let rows =
        rows(range, opts.jobs, |n| Metric::with_cap(n, opts.store_cap).dc(theta, a, m, k).map_err(|e| e.to_string()));
    Ok(SweepTable { rows: rows.into_iter().map(|(n, distance)| SweepRow { n, distance }).collect() })
}

/// A closed-form candidate bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundSpec {
    Zero,
    /// `c / 2^n`
    Exp {
        c: Rational,
    },
    /// `c / 2^(n/k)`
    ExpRoot {
        c: Rational,
        k: u32,
    },
    /// `c / n^k`
    Poly {
        c: Rational,
        k: u32,
    },
}

fn pow(r: &Rational, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * r)
}

fn two_pow(n: usize) -> Rational {
    Rational::from_integer(BigInt::one() << n)
}

impl BoundSpec {
    /// The bound at `n`, when it is rational.
    pub fn value(&self, n: usize) -> Option<Rational> {
        match self {
            BoundSpec::Zero => Some(Rational::zero()),
            BoundSpec::Exp { c } => Some(c / two_pow(n)),
            BoundSpec::ExpRoot { c, k } if n.is_multiple_of(*k as usize) => Some(c / two_pow(n / *k as usize)),
            BoundSpec::ExpRoot { .. } => None,
            BoundSpec::Poly { c, k } => Some(c / pow(&Rational::from_integer(BigInt::from(n)), *k)),
        }
    }

    /// `d ≤ b(n)`, decided exactly.
    pub fn admits(&self, n: usize, d: &Rational) -> bool {
        match self {
            BoundSpec::ExpRoot { c, k } => pow(d, *k) * two_pow(n) <= pow(c, *k),
            _ => d <= &self.value(n).expect("rational bound"),
        }
    }
}

impl fmt::Display for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSpec::Zero => f.write_str("0"),
            BoundSpec::Exp { c } => write!(f, "{c}/2^n"),
            BoundSpec::ExpRoot { c, k } => write!(f, "{c}/2^(n/{k})"),
            BoundSpec::Poly { c, k } => write!(f, "{c}/n^{k}"),
        }
    }
}

impl FromStr for BoundSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s == "0" {
            return Ok(BoundSpec::Zero);
        }
        let bad = || format!("unrecognised bound `{s}`; expected c/2^n, c/2^(n/k), c/n^k or 0");
        let parse_c = |c: &str| -> Result<Rational, String> {
            let r: Rational = c.parse().map_err(|_| bad())?;
            if r.is_positive() {
                Ok(r)
            } else {
                Err(bad())
            }
        };
        let parse_k = |k: &str| -> Result<u32, String> {
            match k.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(k),
                _ => Err(bad()),
            }
        };
        if let Some(c) = s.strip_suffix("/2^n") {
            return Ok(BoundSpec::Exp { c: parse_c(c)? });
        }
        if let Some(rest) = s.strip_suffix(')') {
            if let Some((c, k)) = rest.split_once("/2^(n/") {
                return Ok(BoundSpec::ExpRoot { c: parse_c(c)?, k: parse_k(k)? });
            }
        }
        if let Some((c, k)) = s.split_once("/n^") {
            return Ok(BoundSpec::Poly { c: parse_c(c)?, k: parse_k(k)? });
        }
        Err(bad())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub pass: bool,
    /// First row above the bound, or the first row that failed to compute.
    pub first_violation: Option<usize>,
    /// `b(n) − d(n)` where the bound is rational.
    pub margins: Vec<(usize, Option<Rational>)>,
}

impl Verdict {
    pub fn to_json(&self, bound: &BoundSpec) -> Value {
        json!({
            "bound": bound.to_string(),
            "pass": self.pass,
            "first_violation": self.first_violation,
            "margins": self.margins.iter().map(|(n, m)| json!({
                "n": n,
                "margin": m.as_ref().map(|m| m.to_string()),
            })).collect::<Vec<_>>(),
        })
    }
}

pub fn check_bound(t: &SweepTable, b: &BoundSpec) -> Verdict {
    let mut first_violation = None;
    let mut margins = Vec::new();
    for r in &t.rows {
        match &r.distance {
            Ok(d) => {
                margins.push((r.n, b.value(r.n).map(|v| v - d.value())));
                if first_violation.is_none() && !b.admits(r.n, d.value()) {
                    first_violation = Some(r.n);
                }
            }
            Err(_) => {
                margins.push((r.n, None));
                first_violation.get_or_insert(r.n);
            }
        }
    }
    Verdict { pass: first_violation.is_none(), first_violation, margins }
}

/// Equal big-step semantics at every store for every `n` in range.
pub fn kleene_equiv(
    m: &Term,
    k: &Term,
    theta: &RefContext,
    a: &Type,
    range: RangeInclusive<usize>,
    opts: Options,
) -> Result<bool, MetricError> {
    check_both(m, k, theta, a)?;
    for (_, r) in rows(range, opts.jobs, |n| -> Result<bool, MetricError> {
        for e in probe_stores(&[m, k], theta, n, opts.store_cap, false)? {
            if bigstep(m, &e, n)? != bigstep(k, &e, n)? {
                return Ok(false);
            }
        }
        Ok(true)
    }) {
        if !r? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Supremum over stores of the statistical distance between the joint
/// (value, store) outcomes.
pub fn obs_distance(
    m: &Term,
    k: &Term,
    theta: &RefContext,
    n: usize,
    opts: Options,
) -> Result<MetricValue, MetricError> {
    let mut sup = MetricValue::zero();
    for e in probe_stores(&[m, k], theta, n, opts.store_cap, false)? {
        sup = sup.max(statistical_distance(&bigstep(m, &e, n)?, &bigstep(k, &e, n)?));
    }
    Ok(sup)
}

/// As [`obs_distance`], with final stores projected away.
pub fn marginal_distance(
    m: &Term,
    k: &Term,
    theta: &RefContext,
    n: usize,
    opts: Options,
) -> Result<MetricValue, MetricError> {
    let mut sup = MetricValue::zero();
    for e in probe_stores(&[m, k], theta, n, opts.store_cap, true)? {
        sup = sup.max(statistical_distance(&values(&bigstep(m, &e, n)?), &values(&bigstep(k, &e, n)?)));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ratio;

    #[test]
    fn bound_specs_round_trip() {
        for s in ["0", "1/2^n", "3/2/2^n", "1/2^(n/2)", "5/n^2"] {
            let b: BoundSpec = s.parse().unwrap();
            assert_eq!(b.to_string().parse::<BoundSpec>().unwrap(), b);
        }
        assert!("1/3^n".parse::<BoundSpec>().is_err());
        assert!("0/2^n".parse::<BoundSpec>().is_err());
        assert!("1/n^0".parse::<BoundSpec>().is_err());
    }

    #[test]
    fn root_bounds_are_exact() {
        let b: BoundSpec = "1/2^(n/2)".parse().unwrap();
        // 1/2^(3/2) ≈ 0.3536
        assert!(b.admits(3, &ratio(35, 100)));
        assert!(!b.admits(3, &ratio(36, 100)));
    }

    #[test]
    fn check_bound_examples() {
        let half = MetricValue::new(ratio(1, 2)).unwrap();
        let t = SweepTable::from_values((1..=4).map(|n| (n, half.clone())));
        let v = check_bound(&t, &"1/n^2".parse().unwrap());
        assert!(!v.pass);
        assert_eq!(v.first_violation, Some(2));
        let zeros = SweepTable::from_values((1..=4).map(|n| (n, MetricValue::zero())));
        assert!(check_bound(&zeros, &BoundSpec::Zero).pass);
    }
}
