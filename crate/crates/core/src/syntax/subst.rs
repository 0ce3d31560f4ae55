//! Capture-avoiding substitution, security-parameter substitution and
//! α-normalisation.

use std::collections::{BTreeMap, BTreeSet};

use super::{RefContext, Term, Type};
use crate::error::TypeError;
use crate::poly::Polynomial;

pub fn free_vars(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(t, &mut Vec::new(), &mut out);
    out
}

fn collect_free(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        Term::Lam(x, _, m) => {
            bound.push(x.clone());
            collect_free(m, bound, out);
            bound.pop();
        }
        Term::Let(x, n, m) => {
            collect_free(n, bound, out);
            bound.push(x.clone());
            collect_free(m, bound, out);
            bound.pop();
        }
        Term::LetPair(x, y, z, m) => {
            collect_free(z, bound, out);
            bound.push(x.clone());
            bound.push(y.clone());
            collect_free(m, bound, out);
            bound.truncate(bound.len() - 2);
        }
        _ => {
            for c in t.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// A variant of `base` not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "x" } else { stem };
    (1..).map(|k| format!("{stem}{k}")).find(|c| !avoid.contains(c)).expect("infinitely many candidates")
}

/// `t[v/x]`, renaming binders of `t` that would capture free variables of `v`.
pub fn subst_value(t: &Term, x: &str, v: &Term) -> Term {
    let mut map = BTreeMap::new();
    map.insert(x.to_string(), v.clone());
    subst_many(t, &map)
}

/// Simultaneous capture-avoiding substitution.
pub fn subst_many(t: &Term, map: &BTreeMap<String, Term>) -> Term {
    if map.is_empty() {
        return t.clone();
    }
    if map.values().all(|v| free_vars(v).is_empty()) {
        return subst_closed(t, map);
    }
    match t {
        Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(subst_many(a, map), subst_many(b, map)),
        Term::Bang(p, m) => Term::bang(p.clone(), subst_many(m, map)),
        Term::Lam(x, ty, m) => {
            let (names, body) = under_binders(&[x], m, map);
            Term::lam(names[0].clone(), ty.clone(), body)
        }
        Term::Return(v) => Term::ret(subst_many(v, map)),
        Term::Der(v) => Term::der(subst_many(v, map)),
        Term::App(v, z) => Term::app(subst_many(v, map), subst_many(z, map)),
        Term::Let(x, n, m) => {
            let n = subst_many(n, map);
            let (names, body) = under_binders(&[x], m, map);
            Term::let_(names[0].clone(), n, body)
        }
        Term::LetPair(x, y, z, m) => {
            let z = subst_many(z, map);
            let (names, body) = under_binders(&[x, y], m, map);
            Term::let_pair(names[0].clone(), names[1].clone(), z, body)
        }
        Term::If(z, m, n) => Term::if_(subst_many(z, map), subst_many(m, map), subst_many(n, map)),
        Term::Loop(p, v, m) => Term::loop_(p.clone(), subst_many(v, map), subst_many(m, map)),
        Term::Set(r, z) => Term::set(r.clone(), subst_many(z, map)),
        Term::Call(f, p, args) => Term::call(f.clone(), p.clone(), args.iter().map(|a| subst_many(a, map)).collect()),
    }
}

/// Substitution of closed terms: nothing can be captured, so binders only
/// shadow.
fn subst_closed(t: &Term, map: &BTreeMap<String, Term>) -> Term {
    let shadowed = |xs: &[&String]| -> Option<BTreeMap<String, Term>> {
        if xs.iter().any(|x| map.contains_key(*x)) {
            Some(map.iter().filter(|(k, _)| !xs.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect())
        } else {
            None
        }
    };
    let under = |xs: &[&String], m: &Term| match shadowed(xs) {
        Some(inner) if inner.is_empty() => m.clone(),
        Some(inner) => subst_closed(m, &inner),
        None => subst_closed(m, map),
    };
    let go = |u: &Term| subst_closed(u, map);
    match t {
        Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(go(a), go(b)),
        Term::Bang(p, m) => Term::bang(p.clone(), go(m)),
        Term::Lam(x, ty, m) => Term::lam(x.clone(), ty.clone(), under(&[x], m)),
        Term::Return(v) => Term::ret(go(v)),
        Term::Der(v) => Term::der(go(v)),
        Term::App(v, z) => Term::app(go(v), go(z)),
        Term::Let(x, n, m) => Term::let_(x.clone(), go(n), under(&[x], m)),
        Term::LetPair(x, y, z, m) => Term::let_pair(x.clone(), y.clone(), go(z), under(&[x, y], m)),
        Term::If(z, m, n) => Term::if_(go(z), go(m), go(n)),
        Term::Loop(p, v, m) => Term::loop_(p.clone(), go(v), go(m)),
        Term::Set(r, z) => Term::set(r.clone(), go(z)),
        Term::Call(f, p, args) => Term::call(f.clone(), p.clone(), args.iter().map(go).collect()),
    }
}

fn under_binders(binders: &[&String], body: &Term, map: &BTreeMap<String, Term>) -> (Vec<String>, Term) {
    let mut inner: BTreeMap<String, Term> =
        map.iter().filter(|(k, _)| !binders.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
    let body_free = free_vars(body);
    inner.retain(|k, _| body_free.contains(k));
    if inner.is_empty() {
        return (binders.iter().map(|b| (*b).clone()).collect(), body.clone());
    }
    let incoming: BTreeSet<String> = inner.values().flat_map(free_vars).collect();
    let mut avoid: BTreeSet<String> = incoming.clone();
    avoid.extend(body_free);
    avoid.extend(inner.keys().cloned());
    let mut names = Vec::with_capacity(binders.len());
    let mut renaming = BTreeMap::new();
    for b in binders {
        if incoming.contains(*b) {
            let fresh = fresh_name(b, &avoid);
            avoid.insert(fresh.clone());
            renaming.insert((*b).clone(), Term::Var(fresh.clone()));
            names.push(fresh);
        } else {
            avoid.insert((*b).clone());
            names.push((*b).clone());
        }
    }
    let renamed = subst_many(body, &renaming);
    (names, subst_many(&renamed, &inner))
}

/// `M{q}`: substitutes `q` for the security parameter in every grade and
/// type annotation.
pub fn subst_poly(t: &Term, q: &Polynomial) -> Term {
    match t {
        Term::Var(_) | Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(subst_poly(a, q), subst_poly(b, q)),
        Term::Bang(p, m) => Term::bang(p.subst(q), subst_poly(m, q)),
        Term::Lam(x, ty, m) => Term::lam(x.clone(), ty.subst(q), subst_poly(m, q)),
        Term::Return(v) => Term::ret(subst_poly(v, q)),
        Term::Der(v) => Term::der(subst_poly(v, q)),
        Term::App(v, z) => Term::app(subst_poly(v, q), subst_poly(z, q)),
        Term::Let(x, n, m) => Term::let_(x.clone(), subst_poly(n, q), subst_poly(m, q)),
        Term::LetPair(x, y, z, m) => Term::let_pair(x.clone(), y.clone(), subst_poly(z, q), subst_poly(m, q)),
        Term::If(z, m, n) => Term::if_(subst_poly(z, q), subst_poly(m, q), subst_poly(n, q)),
        Term::Loop(p, v, m) => Term::loop_(p.subst(q), subst_poly(v, q), subst_poly(m, q)),
        Term::Set(r, z) => Term::set(r.clone(), subst_poly(z, q)),
        Term::Call(f, p, args) => Term::call(f.clone(), p.subst(q), args.iter().map(|a| subst_poly(a, q)).collect()),
    }
}

/// `M{n}` for a concrete parameter `n ≥ 1`.
pub fn subst_secparam(t: &Term, n: usize) -> Term {
    assert!(n >= 1, "security parameter starts at 1");
    subst_poly(t, &Polynomial::constant(n as u64))
}

/// α-normal form: bound variables renamed `v0, v1, …` in binding order,
/// skipping names that occur free. α-equivalent terms have equal normal forms.
pub fn canonical(t: &Term) -> Term {
    let free = free_vars(t);
    let mut next = 0usize;
    canon(t, &free, &mut next, &BTreeMap::new())
}

fn canon(t: &Term, free: &BTreeSet<String>, next: &mut usize, env: &BTreeMap<String, String>) -> Term {
    let fresh = |next: &mut usize| loop {
        let c = format!("v{next}");
        *next += 1;
        if !free.contains(&c) {
            return c;
        }
    };
    match t {
        Term::Var(x) => Term::Var(env.get(x).cloned().unwrap_or_else(|| x.clone())),
        Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(canon(a, free, next, env), canon(b, free, next, env)),
        Term::Bang(p, m) => Term::bang(p.clone(), canon(m, free, next, env)),
        Term::Lam(x, ty, m) => {
            let nx = fresh(next);
            let mut e = env.clone();
            e.insert(x.clone(), nx.clone());
            Term::lam(nx, ty.clone(), canon(m, free, next, &e))
        }
        Term::Return(v) => Term::ret(canon(v, free, next, env)),
        Term::Der(v) => Term::der(canon(v, free, next, env)),
        Term::App(v, z) => Term::app(canon(v, free, next, env), canon(z, free, next, env)),
        Term::Let(x, n, m) => {
            let n = canon(n, free, next, env);
            let nx = fresh(next);
            let mut e = env.clone();
            e.insert(x.clone(), nx.clone());
            Term::let_(nx, n, canon(m, free, next, &e))
        }
        Term::LetPair(x, y, z, m) => {
            let z = canon(z, free, next, env);
            let nx = fresh(next);
            let ny = fresh(next);
            let mut e = env.clone();
            e.insert(x.clone(), nx.clone());
            e.insert(y.clone(), ny.clone());
            Term::let_pair(nx, ny, z, canon(m, free, next, &e))
        }
        Term::If(z, m, n) => Term::if_(canon(z, free, next, env), canon(m, free, next, env), canon(n, free, next, env)),
        Term::Loop(p, v, m) => Term::loop_(p.clone(), canon(v, free, next, env), canon(m, free, next, env)),
        Term::Set(r, z) => Term::set(r.clone(), canon(z, free, next, env)),
        Term::Call(f, p, args) => {
            Term::call(f.clone(), p.clone(), args.iter().map(|a| canon(a, free, next, env)).collect())
        }
    }
}

pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    canonical(a) == canonical(b)
}

/// Appends `xi` to the reference annotations of every binder type in `t`,
/// so that a term typed under `Θ` can be re-typed under `Θ, Ξ`.
pub fn shift_term(t: &Term, xi: &RefContext) -> Result<Term, TypeError> {
    let go = |u: &Term| shift_term(u, xi);
    Ok(match t {
        Term::Var(_) | Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => t.clone(),
        Term::Pair(a, b) => Term::pair(go(a)?, go(b)?),
        Term::Bang(p, m) => Term::bang(p.clone(), go(m)?),
        Term::Lam(x, ty, m) => Term::lam(x.clone(), shift_annotation(ty, xi)?, go(m)?),
        Term::Return(v) => Term::ret(go(v)?),
        Term::Der(v) => Term::der(go(v)?),
        Term::App(v, z) => Term::app(go(v)?, go(z)?),
        Term::Let(x, n, m) => Term::let_(x.clone(), go(n)?, go(m)?),
        Term::LetPair(x, y, z, m) => Term::let_pair(x.clone(), y.clone(), go(z)?, go(m)?),
        Term::If(z, m, n) => Term::if_(go(z)?, go(m)?, go(n)?),
        Term::Loop(p, v, m) => Term::loop_(p.clone(), go(v)?, go(m)?),
        Term::Set(r, z) => Term::set(r.clone(), go(z)?),
        Term::Call(f, p, args) => Term::call(f.clone(), p.clone(), args.iter().map(go).collect::<Result<_, _>>()?),
    })
}

fn shift_annotation(ty: &Type, xi: &RefContext) -> Result<Type, TypeError> {
    crate::typing::shift_type(ty, xi)
}
