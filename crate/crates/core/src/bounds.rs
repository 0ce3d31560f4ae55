//! Polynomial step bounds extracted from typing derivations.
//!
//! Weights per rule (`ε` is the excess of a value over 1):
//!
//! ```text
//! values        w(V) = 1 + ε(V)
//!   ground, var   ε = 0
//!   tensor        ε = ε(V₁) + ε(V₂)
//!   bang at p     ε = p · w(M)
//!   lam           ε = 1 + w(M)
//! computations
//!   return V      1 + w(V)          der Z          1 + w(Z)
//!   V Z           1 + w(V) + w(Z)   let            1 + w(N) + w(M)
//!   let-pair      1 + w(Z) + w(M)   if             1 + w(Z) + max(w(M), w(N))
//!   loop[p]       p·w(V) + w(M) + p + 1
//!   r := Z        2 + w(Z)          get r          3
//!   f[p](Z…)      3 + Σ w(Zₖ)
//! ```
//!
//! `max` is taken coefficient-wise, which bounds the pointwise maximum.

use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::error::{BoundsError, TypeError};
use crate::eval::{registry, step, step_count, Config, Store};
use crate::poly::Polynomial;
use crate::syntax::{subst_secparam, Bits, Ground, RefContext, Term, Type, VarContext};
use crate::typing::{check_comp_against, Derivation, Rule};

fn add_opt(a: Option<Polynomial>, b: Option<Polynomial>) -> Option<Polynomial> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.add(&y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn plus(p: &Polynomial, k: u32) -> Polynomial {
    p.add(&Polynomial::from(k))
}

fn excess(d: &Derivation) -> Option<Polynomial> {
    match d.rule {
        Rule::Var | Rule::True | Rule::False | Rule::String | Rule::Unit => None,
        Rule::Tensor => add_opt(excess(&d.children[0]), excess(&d.children[1])),
        Rule::Bang => {
            let p = d.grade.clone().unwrap_or_else(Polynomial::one);
            Some(p.mul(&weight(&d.children[0])))
        }
        Rule::Lam => Some(plus(&weight(&d.children[0]), 1)),
        _ => unreachable!("excess of a computation"),
    }
}

/// `q_π`.
pub fn weight(d: &Derivation) -> Polynomial {
    let w = |k: usize| weight(&d.children[k]);
    match d.rule {
        Rule::Var | Rule::True | Rule::False | Rule::String | Rule::Unit | Rule::Tensor | Rule::Bang | Rule::Lam => {
            match excess(d) {
                Some(e) => plus(&e, 1),
                None => Polynomial::one(),
            }
        }
        Rule::Eta | Rule::Der => plus(&w(0), 1),
        Rule::App | Rule::Let | Rule::LetPair => plus(&w(0).add(&w(1)), 1),
        Rule::Case => plus(&w(0).add(&w(1).join(&w(2))), 1),
        Rule::Loop => {
            let p = d.grade.clone().unwrap_or_else(Polynomial::one);
            plus(&p.mul(&w(0)).add(&w(1)).add(&p), 1)
        }
        Rule::Set => plus(&w(0), 2),
        Rule::Get => Polynomial::from(3),
        Rule::Fun => d.children.iter().fold(Polynomial::from(3), |acc, c| acc.add(&weight(c))),
    }
}

/// `q_π{p}`; equals the weight of the derivation re-checked at `A{p}`.
pub fn subst_weight(d: &Derivation, p: &Polynomial) -> Polynomial {
    weight(d).subst(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertReport {
    pub term: String,
    pub n: usize,
    pub steps: usize,
    pub bound: BigUint,
    pub ok: bool,
    /// False when `steps` is an upper bound from the abstract exploration
    /// rather than an exact count.
    pub exact: bool,
}

impl CertReport {
    pub fn to_json(&self) -> Value {
        json!({
            "term": self.term,
            "n": self.n,
            "steps": self.steps,
            "bound": self.bound.to_string(),
            "ok": self.ok,
            "exact": self.exact,
        })
    }
}

fn report(term: &Term, n: usize, steps: usize, bound: BigUint, exact: bool) -> CertReport {
    CertReport { term: term.to_string(), n, ok: BigUint::from(steps) <= bound, steps, bound, exact }
}

/// Runs `(M{n}, e)` to completion and compares the number of steps with
/// `q_π(n)`.
pub fn certify(m: &Term, d: &Derivation, e: &Store, n: usize) -> Result<CertReport, BoundsError> {
    let (_, steps) = step_count(m, e, n)?;
    let bound = weight(d).eval(&BigUint::from(n)).map_err(TypeError::from)?;
    let r = report(m, n, steps, bound, true);
    if r.ok {
        Ok(r)
    } else {
        Err(BoundsError::Violation { term: r.term, n, steps, bound: r.bound.to_string() })
    }
}

/// Weights of closed instantiated terms, re-derived at a fixed type.
struct Weigher {
    theta: RefContext,
    ty: Type,
    n: usize,
    memo: HashMap<Term, BigUint>,
}

impl Weigher {
    fn new(theta: &RefContext, ty: &Type, n: usize) -> Self {
        let np = Polynomial::constant(n as u64);
        Weigher { theta: theta.subst(&np), ty: ty.subst(&np), n, memo: HashMap::new() }
    }

    fn weight(&mut self, t: &Term) -> Result<BigUint, BoundsError> {
        if let Some(w) = self.memo.get(t) {
            return Ok(w.clone());
        }
        let c = check_comp_against(&VarContext::new(), &self.theta, t, &self.ty)
            .map_err(|source| BoundsError::SubjectReduction { term: t.to_string(), source })?;
        let w = weight(&c.derivation).eval(&BigUint::from(self.n)).map_err(TypeError::from)?;
        self.memo.insert(t.clone(), w.clone());
        Ok(w)
    }

    fn compare(&mut self, from: &Term, to: &Term) -> Result<(), BoundsError> {
        let before = self.weight(from)?;
        let after = self.weight(to)?;
        if after >= before {
            return Err(BoundsError::NoDecrease {
                n: self.n,
                from: from.to_string(),
                to: to.to_string(),
                before: before.to_string(),
                after: after.to_string(),
            });
        }
        Ok(())
    }
}

/// Checks that every reduction reachable from `(M{n}, e)` strictly lowers
/// the weight, re-deriving each reduct at `A{n}`. Returns the number of
/// transitions checked.
pub fn check_decrease(
    m: &Term,
    theta: &RefContext,
    ty: &Type,
    e: &Store,
    n: usize,
    max_configs: usize,
) -> Result<usize, BoundsError> {
    let mut weigher = Weigher::new(theta, ty, n);
    let start = Config::new(subst_secparam(m, n), e.clone());
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut todo = vec![start];
    let mut transitions = 0;
    while let Some(cfg) = todo.pop() {
        if matches!(cfg.term, Term::Return(_)) {
            continue;
        }
        for next in step(&cfg, n)?.support() {
            weigher.compare(&cfg.term, &next.term)?;
            transitions += 1;
            if seen.insert(next.clone()) {
                if seen.len() > max_configs {
                    return Err(BoundsError::TooManyConfigs(max_configs));
                }
                todo.push(next.clone());
            }
        }
    }
    Ok(transitions)
}

/// Replaces every ground literal by a fixed representative of its type:
/// strings by zeros, booleans by `tt`.
fn blur(t: &Term) -> Term {
    match t {
        Term::Str(b) => Term::Str(Bits::zeros(b.len())),
        Term::False => Term::True,
        Term::Var(_) | Term::Star | Term::True | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(blur(a), blur(b)),
        Term::Bang(p, m) => Term::bang(p.clone(), blur(m)),
        Term::Lam(x, ty, m) => Term::lam(x.clone(), ty.clone(), blur(m)),
        Term::Return(v) => Term::ret(blur(v)),
        Term::Der(v) => Term::der(blur(v)),
        Term::App(v, z) => Term::app(blur(v), blur(z)),
        Term::Let(x, n, m) => Term::let_(x.clone(), blur(n), blur(m)),
        Term::LetPair(x, y, z, m) => Term::let_pair(x.clone(), y.clone(), blur(z), blur(m)),
        Term::If(z, m, n) => Term::if_(blur(z), blur(m), blur(n)),
        Term::Loop(p, v, m) => Term::loop_(p.clone(), blur(v), blur(m)),
        Term::Set(r, z) => Term::set(r.clone(), blur(z)),
        Term::Call(f, p, args) => Term::call(f.clone(), p.clone(), args.iter().map(blur).collect()),
    }
}

fn blur_store(e: &Store) -> Store {
    e.iter().map(|(r, v)| (r.clone(), blur(v))).collect()
}

fn representative(g: &Ground, n: usize) -> Result<Term, BoundsError> {
    Ok(match g {
        Ground::Unit => Term::Star,
        Ground::Bool => Term::True,
        Ground::Str(p) => Term::Str(Bits::zeros(p.eval_usize(n).map_err(TypeError::from)?)),
    })
}

/// Successors in the abstract system: conditionals on a literal take both
/// branches and function symbols return the representative of their
/// result type. Every concrete transition maps onto an abstract one.
fn abstract_step(cfg: &Config, n: usize) -> Result<Vec<Config>, BoundsError> {
    let e = &cfg.store;
    match &cfg.term {
        Term::Let(x, bound, body) if !matches!(**bound, Term::Return(_)) => {
            let inner = abstract_step(&Config::new((**bound).clone(), e.clone()), n)?;
            Ok(inner
                .into_iter()
                .map(|c| Config::new(Term::Let(x.clone(), Box::new(c.term), body.clone()), c.store))
                .collect())
        }
        Term::If(z, m, other) if z.as_bool().is_some() => {
            Ok(vec![Config::new((**m).clone(), e.clone()), Config::new((**other).clone(), e.clone())])
        }
        Term::Call(name, p, args) if args.iter().all(Term::is_ground_value) => {
            let (params, result) = registry::signature(name).ok_or_else(|| TypeError::UnknownSymbol(name.clone()))?;
            if params.len() != args.len() {
                return Err(TypeError::Arity { name: name.clone(), expected: params.len(), found: args.len() }.into());
            }
            let k = p.eval_usize(n).map_err(TypeError::from)?;
            let v = representative(&result.subst(&Polynomial::constant(k as u64)), n)?;
            Ok(vec![Config::new(Term::ret(v), e.clone())])
        }
        _ => Ok(step(cfg, n)?.support().map(|c| Config::new(blur(&c.term), blur_store(&c.store))).collect()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractReport {
    /// Longest path in the abstract system; bounds the step count of every
    /// concrete run from any store.
    pub depth: usize,
    pub configs: usize,
    pub transitions: usize,
}

/// Explores the abstract transition system from `M{n}` with every store
/// value blurred, checking weight decrease on each abstract transition.
/// Blurring preserves types, so weights are unchanged; decrease there
/// implies decrease along every concrete trace, and the abstract depth
/// bounds every concrete step count.
pub fn abstract_certify(
    m: &Term,
    theta: &RefContext,
    ty: &Type,
    e: &Store,
    n: usize,
    max_configs: usize,
) -> Result<AbstractReport, BoundsError> {
    let mut weigher = Weigher::new(theta, ty, n);
    let start = Config::new(blur(&subst_secparam(m, n)), blur_store(e));
    let mut depth: HashMap<Config, usize> = HashMap::new();
    let mut transitions = 0;
    // Iterative post-order traversal.
    let mut stack: Vec<(Config, Option<Vec<Config>>)> = vec![(start.clone(), None)];
    while let Some((cfg, succ)) = stack.pop() {
        if depth.contains_key(&cfg) {
            continue;
        }
        if matches!(cfg.term, Term::Return(_)) {
            depth.insert(cfg, 0);
            continue;
        }
        match succ {
            None => {
                let next = abstract_step(&cfg, n)?;
                for s in &next {
                    weigher.compare(&cfg.term, &s.term)?;
                    transitions += 1;
                }
                let pending: Vec<Config> = next.iter().filter(|s| !depth.contains_key(*s)).cloned().collect();
                stack.push((cfg, Some(next)));
                for s in pending {
                    stack.push((s, None));
                }
            }
            Some(next) => {
                let d = 1 + next.iter().map(|s| depth[s]).max().unwrap_or(0);
                depth.insert(cfg, d);
                if depth.len() > max_configs {
                    return Err(BoundsError::TooManyConfigs(max_configs));
                }
            }
        }
    }
    Ok(AbstractReport { depth: depth[&start], configs: depth.len(), transitions })
}

/// Certification through the abstract system: the reported step count is
/// the abstract depth, an upper bound on the exact count.
pub fn certify_abstract(
    m: &Term,
    d: &Derivation,
    theta: &RefContext,
    e: &Store,
    n: usize,
    max_configs: usize,
) -> Result<CertReport, BoundsError> {
    let a = abstract_certify(m, theta, &d.ty, e, n, max_configs)?;
    let bound = weight(d).eval(&BigUint::from(n)).map_err(TypeError::from)?;
    let r = report(m, n, a.depth, bound, false);
    if r.ok {
        Ok(r)
    } else {
        Err(BoundsError::Violation { term: r.term, n, steps: a.depth, bound: r.bound.to_string() })
    }
}

/// `q_π(n)` as a machine integer, saturating.
pub fn bound_at(d: &Derivation, n: usize) -> usize {
    weight(d).eval(&BigUint::from(n)).ok().and_then(|b| b.to_usize()).unwrap_or(usize::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;
    use crate::typing::check_comp;

    fn derive(s: &str) -> (Term, Derivation) {
        let t = parse_term(s).unwrap();
        let c = check_comp(&VarContext::new(), &RefContext::new(), &t).unwrap();
        (t, c.derivation)
    }

    #[test]
    fn eta_over_leaf_weighs_two() {
        assert_eq!(weight(&derive("return tt").1), Polynomial::from(2));
    }

    #[test]
    fn beta_redex_weight() {
        let w = weight(&derive("(\\x : Bool. return x) tt").1);
        assert!(w.as_constant().unwrap() >= &BigUint::from(2u32));
    }

    #[test]
    fn loop_weight_is_symbolic() {
        let (_, d) = derive("loop[i](\\x : Bool. return x, return tt)");
        // w(V) = 1 + (1 + 2) = 4, w(M) = 2: 4i + 2 + i + 1.
        let expected = Polynomial::from_coeffs([3u32, 5]).unwrap();
        assert_eq!(weight(&d), expected);
    }

    #[test]
    fn certify_examples() {
        let (t, d) = derive("return tt");
        let r = certify(&t, &d, &Store::new(), 5).unwrap();
        assert_eq!(r.steps, 0);
        let (t, d) = derive("loop[i](\\x : Bool. return x, return tt)");
        let r = certify(&t, &d, &Store::new(), 3).unwrap();
        assert!(r.ok && r.steps <= 18);
    }

    #[test]
    fn subst_weight_matches_evaluation() {
        let (_, d) = derive("loop[i](\\x : Bool. return x, return tt)");
        let w = weight(&d);
        assert_eq!(subst_weight(&d, &Polynomial::var()), w);
        let two = subst_weight(&d, &Polynomial::from(2));
        assert_eq!(two.eval_usize(7).unwrap(), w.eval_usize(2).unwrap());
        let shifted = subst_weight(&d, &Polynomial::var().add(&Polynomial::one()));
        assert_eq!(shifted.eval_usize(1).unwrap(), w.eval_usize(2).unwrap());
    }

    #[test]
    fn abstract_depth_bounds_exact_count() {
        let src = "let c = flipcoin[1]() in if c then loop[i](\\x : Bool. return x, return tt) else return ff";
        let (t, d) = derive(src);
        for n in 1..=4 {
            let exact = certify(&t, &d, &Store::new(), n).unwrap();
            let abs = certify_abstract(&t, &d, &RefContext::new(), &Store::new(), n, 10_000).unwrap();
            assert!(abs.steps >= exact.steps);
            assert!(abs.ok);
        }
    }
}
