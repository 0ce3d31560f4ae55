//! Exact probabilistic evaluation with stores.

pub mod dist;
pub mod independence;
pub mod registry;

use std::collections::BTreeMap;

use crate::error::EvalError;
use crate::poly::Polynomial;
use crate::syntax::{canonical, subst_many, subst_secparam, subst_value, Bits, Ground, RefContext, Term};

pub use dist::{pow2_inv, ratio, Dist, Rational};
pub use independence::probe_stores;
pub use registry::LedgerCodec;

/// Reference name to closed ground value.
pub type Store = BTreeMap<String, Term>;

/// A final outcome: a closed value and the store it leaves behind.
pub type Outcome = (Term, Store);

/// Rounds of breadth-first expansion before evaluation gives up.
pub const MAX_ROUNDS: usize = 1_000_000;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Config {
    pub term: Term,
    pub store: Store,
}

impl Config {
    pub fn new(term: Term, store: Store) -> Self {
        Config { term, store }
    }
}

fn at(p: &Polynomial, n: usize) -> Result<usize, EvalError> {
    Ok(p.eval_usize(n)?)
}

/// `⟦G⟧_n` in lexicographic order.
pub fn ground_values(g: &Ground, n: usize) -> Result<Vec<Term>, EvalError> {
    Ok(match g {
        Ground::Unit => vec![Term::Star],
        Ground::Bool => vec![Term::True, Term::False],
        Ground::Str(p) => {
            let m = at(p, n)?;
            if m >= 63 {
                return Err(EvalError::StoreSpaceExceeded { size: u128::MAX, cap: 1 << 62 });
            }
            Bits::all(m).map(Term::Str).collect()
        }
    })
}

/// `⋆` for Unit, `ff` for Bool and `0^{p(n)}` for `Str[p]`.
pub fn default_value(g: &Ground, n: usize) -> Result<Term, EvalError> {
    Ok(match g {
        Ground::Unit => Term::Star,
        Ground::Bool => Term::False,
        Ground::Str(p) => Term::Str(Bits::zeros(at(p, n)?)),
    })
}

pub fn default_store(theta: &RefContext, n: usize) -> Result<Store, EvalError> {
    theta.iter().map(|(r, g)| Ok((r.clone(), default_value(g, n)?))).collect()
}

/// Number of stores of `Θ{n}`, saturating.
pub fn store_space_size(theta: &RefContext, n: usize) -> Result<u128, EvalError> {
    let mut size: u128 = 1;
    for (_, g) in theta.iter() {
        let k: u128 = match g {
            Ground::Unit => 1,
            Ground::Bool => 2,
            Ground::Str(p) => {
                let m = at(p, n)?;
                if m >= 127 {
                    u128::MAX
                } else {
                    1u128 << m
                }
            }
        };
        size = size.saturating_mul(k);
    }
    Ok(size)
}

/// Every store of `Θ{n}`, or an error when there are more than `cap`.
pub fn store_space(theta: &RefContext, n: usize, cap: u128) -> Result<Vec<Store>, EvalError> {
    let size = store_space_size(theta, n)?;
    if size > cap {
        return Err(EvalError::StoreSpaceExceeded { size, cap });
    }
    let mut stores = vec![Store::new()];
    for (r, g) in theta.iter() {
        let vals = ground_values(g, n)?;
        stores = stores
            .into_iter()
            .flat_map(|s| {
                vals.iter().map(move |v| {
                    let mut s = s.clone();
                    s.insert(r.clone(), v.clone());
                    s
                })
            })
            .collect();
    }
    Ok(stores)
}

fn stuck(t: &Term) -> EvalError {
    EvalError::Stuck(t.to_string())
}

/// One step of the small-step relation `→_n`.
pub fn step(cfg: &Config, n: usize) -> Result<Dist<Config>, EvalError> {
    let e = &cfg.store;
    let same = |t: Term| Ok(Dist::dirac(Config::new(t, e.clone())));
    match &cfg.term {
        Term::Let(x, bound, body) => match &**bound {
            Term::Return(v) => same(subst_value(body, x, v)),
            _ => {
                let inner = step(&Config::new((**bound).clone(), e.clone()), n)?;
                Ok(inner.map(|c| {
                    Config::new(Term::Let(x.clone(), Box::new(c.term.clone()), body.clone()), c.store.clone())
                }))
            }
        },
        Term::LetPair(x, y, z, body) => match &**z {
            Term::Pair(v, w) => {
                let mut map = BTreeMap::new();
                map.insert(x.clone(), (**v).clone());
                map.insert(y.clone(), (**w).clone());
                same(subst_many(body, &map))
            }
            _ => Err(stuck(&cfg.term)),
        },
        Term::Der(z) => match &**z {
            Term::Bang(_, m) => same((**m).clone()),
            _ => Err(stuck(&cfg.term)),
        },
        Term::App(f, v) => match &**f {
            Term::Lam(x, _, m) => same(subst_value(m, x, v)),
            _ => Err(stuck(&cfg.term)),
        },
        Term::If(z, m, other) => match &**z {
            Term::True => same((**m).clone()),
            Term::False => same((**other).clone()),
            _ => Err(stuck(&cfg.term)),
        },
        Term::Set(r, v) => {
            if !v.is_ground_value() {
                return Err(stuck(&cfg.term));
            }
            if !e.contains_key(r) {
                return Err(EvalError::MissingRef(r.clone()));
            }
            let mut e2 = e.clone();
            e2.insert(r.clone(), (**v).clone());
            Ok(Dist::dirac(Config::new(Term::ret(Term::Star), e2)))
        }
        Term::Get(r) => {
            let v = e.get(r).ok_or_else(|| EvalError::MissingRef(r.clone()))?;
            same(Term::ret(v.clone()))
        }
        Term::Loop(p, f, init) => {
            let Term::Lam(x, _, body) = &**f else { return Err(stuck(&cfg.term)) };
            let k = at(p, n)?;
            let bound = if k <= 1 {
                (**init).clone()
            } else {
                Term::loop_(Polynomial::constant((k - 1) as u64), (**f).clone(), (**init).clone())
            };
            same(Term::Let(x.clone(), Box::new(bound), body.clone()))
        }
        Term::Call(name, p, args) => {
            if !args.iter().all(Term::is_ground_value) {
                return Err(stuck(&cfg.term));
            }
            let out = registry::apply(name, at(p, n)?, args)?;
            Ok(out.map(|v| Config::new(Term::ret(v.clone()), e.clone())))
        }
        _ => Err(stuck(&cfg.term)),
    }
}

fn outcome(t: &Term, e: &Store) -> Option<Outcome> {
    match t {
        Term::Return(v) => Some((canonical(v), e.clone())),
        _ => None,
    }
}

/// Breadth-first expansion of `(M{n}, e)` to its final distribution,
/// together with the number of rounds, which is the step index `m` of
/// `(M, e) ⇓ᵐ_n D`.
pub fn step_count(m: &Term, e: &Store, n: usize) -> Result<(Dist<Outcome>, usize), EvalError> {
    let mut frontier = Dist::dirac(Config::new(subst_secparam(m, n), e.clone()));
    let mut done = Dist::empty();
    let mut rounds = 0;
    loop {
        let mut next = Dist::empty();
        for (cfg, w) in frontier.iter() {
            match outcome(&cfg.term, &cfg.store) {
                Some(o) => done.add(o, w.clone()),
                None => next.add_scaled(&step(cfg, n)?, w),
            }
        }
        if next.is_empty() {
            return Ok((done, rounds));
        }
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(EvalError::IterationCap(MAX_ROUNDS));
        }
        frontier = next;
    }
}

/// `⟦M⟧_n(e)`, computed compositionally: the bound part of a `let` is
/// evaluated on its own and its outcomes merged before the body runs.
pub fn bigstep(m: &Term, e: &Store, n: usize) -> Result<Dist<Outcome>, EvalError> {
    let mut fuel = MAX_ROUNDS as u64 * 64;
    denote(&subst_secparam(m, n), e, n, 0, &mut fuel)
}

/// Nesting of `let`-bound subcomputations before evaluation gives up.
const MAX_DEPTH: usize = 1_000;

fn denote(m: &Term, e: &Store, n: usize, depth: usize, fuel: &mut u64) -> Result<Dist<Outcome>, EvalError> {
    if depth > MAX_DEPTH {
        return Err(EvalError::IterationCap(MAX_DEPTH));
    }
    let mut cur = m.clone();
    let mut store = e.clone();
    loop {
        if *fuel == 0 {
            return Err(EvalError::IterationCap(MAX_ROUNDS));
        }
        *fuel -= 1;
        let next = match &cur {
            Term::Return(_) => return Ok(Dist::dirac(outcome(&cur, &store).expect("return"))),
            Term::Let(x, bound, body) => {
                let d = denote(bound, &store, n, depth + 1, fuel)?;
                if d.len() == 1 {
                    let ((v, e2), _) = d.iter().next().expect("one outcome");
                    store = e2.clone();
                    subst_value(body, x, v)
                } else {
                    return d.try_bind(|(v, e2)| denote(&subst_value(body, x, v), e2, n, depth + 1, fuel));
                }
            }
            Term::Loop(p, f, init) => {
                let Term::Lam(x, _, body) = &**f else { return Err(stuck(&cur)) };
                let mut d = denote(init, &store, n, depth + 1, fuel)?;
                for _ in 1..at(p, n)?.max(1) {
                    d = d.try_bind(|(v, e2)| denote(&subst_value(body, x, v), e2, n, depth + 1, fuel))?;
                }
                return d.try_bind(|(v, e2)| denote(&subst_value(body, x, v), e2, n, depth + 1, fuel));
            }
            Term::Set(..) | Term::Get(_) | Term::Call(..) => {
                let d = step(&Config::new(cur.clone(), store.clone()), n)?;
                return Ok(d.map(|c| outcome(&c.term, &c.store).expect("primitive steps return")));
            }
            _ => {
                let d = step(&Config::new(cur, store), n)?;
                let (c, _) = d.iter().next().ok_or_else(|| EvalError::Stuck(m.to_string()))?;
                store = c.store.clone();
                c.term.clone()
            }
        };
        cur = next;
    }
}

/// The `⇓` relation computed by recursion on the reduction tree rather than
/// level by level. Expects an already instantiated term.
pub fn expand(m: &Term, e: &Store, n: usize) -> Result<(Dist<Outcome>, usize), EvalError> {
    if let Some(o) = outcome(m, e) {
        return Ok((Dist::dirac(o), 0));
    }
    let next = step(&Config::new(m.clone(), e.clone()), n)?;
    let mut out = Dist::empty();
    let mut depth = 0;
    for (cfg, w) in next.iter() {
        let (d, k) = expand(&cfg.term, &cfg.store, n)?;
        out.add_scaled(&d, w);
        depth = depth.max(k);
    }
    Ok((out, depth + 1))
}

/// The approximant `⟦M⟧_{n,k}(e)`; `None` is `⊥`. Expects an already
/// instantiated term.
pub fn sem(m: &Term, e: &Store, n: usize, k: usize) -> Result<Dist<Option<Outcome>>, EvalError> {
    if k == 0 {
        return Ok(Dist::dirac(None));
    }
    let k = k - 1;
    let then = |d: Dist<Option<Outcome>>, x: &String, body: &Term| {
        d.try_bind(|o| match o {
            None => Ok(Dist::dirac(None)),
            Some((u, e2)) => sem(&subst_value(body, x, u), e2, n, k),
        })
    };
    match m {
        Term::Return(v) => Ok(Dist::dirac(Some((canonical(v), e.clone())))),
        Term::If(z, a, b) => match &**z {
            Term::True => sem(a, e, n, k),
            Term::False => sem(b, e, n, k),
            _ => Err(stuck(m)),
        },
        Term::Der(z) => match &**z {
            Term::Bang(_, body) => sem(body, e, n, k),
            _ => Err(stuck(m)),
        },
        Term::App(f, v) => match &**f {
            Term::Lam(x, _, body) => sem(&subst_value(body, x, v), e, n, k),
            _ => Err(stuck(m)),
        },
        Term::Set(..) | Term::Get(_) | Term::Call(..) => {
            let d = step(&Config::new(m.clone(), e.clone()), n)?;
            Ok(d.map(|c| outcome(&c.term, &c.store)))
        }
        Term::Let(x, bound, body) => then(sem(bound, e, n, k)?, x, body),
        Term::LetPair(x, y, z, body) => match &**z {
            Term::Pair(v, w) => {
                let mut map = BTreeMap::new();
                map.insert(x.clone(), (**v).clone());
                map.insert(y.clone(), (**w).clone());
                sem(&subst_many(body, &map), e, n, k)
            }
            _ => Err(stuck(m)),
        },
        Term::Loop(p, f, init) => {
            let Term::Lam(x, _, body) = &**f else { return Err(stuck(m)) };
            let count = at(p, n)?;
            let first = if count <= 1 {
                sem(init, e, n, k)?
            } else {
                let shorter = Term::loop_(Polynomial::constant((count - 1) as u64), (**f).clone(), (**init).clone());
                sem(&shorter, e, n, k)?
            };
            then(first, x, body)
        }
        _ => Err(stuck(m)),
    }
}

/// Drops `⊥` when it carries no mass.
pub fn total_part(d: &Dist<Option<Outcome>>) -> Option<Dist<Outcome>> {
    let mut out = Dist::empty();
    for (o, w) in d.iter() {
        out.add(o.clone()?, w.clone());
    }
    Some(out)
}

/// Value marginal of an outcome distribution.
pub fn values(d: &Dist<Outcome>) -> Dist<Term> {
    d.map(|(v, _)| v.clone())
}
