//! Term corpora: a handwritten suite, the crypto terms, and a seeded
//! type-directed generator of closed well-typed programs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::crypto::{adversaries, build_flipcoin, build_rand_f, build_rand_xor, build_square};
use crate::error::TypeError;
use crate::poly::Polynomial;
use crate::syntax::{parse_program, Ground, RefContext, Term, Type};
use crate::typing::{check_program, Checked};

/// A closed program with its references and checked type.
#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub refs: RefContext,
    pub term: Term,
    pub checked: Checked,
}

impl Entry {
    pub fn new(name: impl Into<String>, refs: RefContext, term: Term) -> Result<Self, TypeError> {
        let checked = check_program(&refs, &term)?;
        Ok(Entry { name: name.into(), refs, term, checked })
    }

    pub fn ty(&self) -> &Type {
        &self.checked.ty
    }
}

const HANDWRITTEN: &[(&str, &str)] = &[
    ("return", "return tt"),
    ("beta", "(\\x : Bool. return x) tt"),
    ("let-chain", "let x = return ff in let y = return x in return (x, y)"),
    ("case", "let b = flipcoin[1]() in if b then return ff else return tt"),
    ("der", "der !{1} flipcoin[1]()"),
    ("bang-twice", "let t = return !{2} random[i]() in let a = der t in let b = der t in equal[i](a, b)"),
    ("loop-id", "loop[i](\\x : Bool. return x, return tt)"),
    ("loop-flip", "loop[i](\\x : Bool. if x then return ff else return tt, return tt)"),
    ("loop-shift", "loop[i](\\s : Str[i]. shift[i](s), ones[i]())"),
    ("loop-coin", "loop[2](\\x : Bool. let c = flipcoin[1]() in beq[1](x, c), return tt)"),
    ("pair-split", "let p = return (tt, ff) in let (x, y) = p in beq[1](x, y)"),
    ("xor-self", "let x = random[i]() in xor[i](x, x)"),
    ("rand-f", "let y = zeros[i]() in let x = random[i]() in equal[i](x, y)"),
    ("rand-xor", "let y = ones[i]() in let x = random[i]() in xor[i](x, y)"),
    ("concat", "let a = zeros[i]() in let b = random[i]() in concat[i](a, b)"),
    ("halves", "let a = random[i]() in let b = ones[i]() in let c = concat[i](a, b) in snd_half[i](c)"),
    ("firstbit", "let s = random[i]() in firstbit[i](s)"),
    ("prf", "let k = random[i]() in let r = zeros[i]() in prf[i](k, r)"),
    ("ref-toggle", "ref r : Bool; let x = get r in if x then r := ff else r := tt"),
    ("ref-store", "ref s : Str[i]; let x = random[i]() in let u = s := x in get s"),
    ("ref-count", "ref r : Bool; loop[i](\\u : Unit. let x = get r in if x then r := ff else r := tt, return *)"),
    ("ref-pair", "ref r : Bool; ref s : Str[i]; let b = get r in let x = get s in return (b, x)"),
];

pub fn handwritten() -> Vec<Entry> {
    HANDWRITTEN
        .iter()
        .map(|(name, s)| {
            let p = parse_program(s).unwrap_or_else(|e| panic!("corpus term `{name}` does not parse: {e}"));
            Entry::new(*name, p.refs, p.term).unwrap_or_else(|e| panic!("corpus term `{name}` is ill-typed: {e}"))
        })
        .collect()
}

/// Every closed computation built by the crypto module.
pub fn crypto_terms() -> Vec<Entry> {
    let closed = |name: &str, t: Term| Entry::new(name, RefContext::new(), t).expect("crypto term");
    let mut out = vec![closed("flipcoin", build_flipcoin())];
    let m = Term::call("zeros", Polynomial::var(), vec![]);
    let (l, r) = build_rand_f(&m).expect("randF");
    out.push(closed("randF-lhs", l));
    out.push(closed("randF-rhs", r));
    let (l, r) = build_rand_xor(&m).expect("randXOR");
    out.push(closed("randXOR-lhs", l));
    out.push(closed("randXOR-rhs", r));
    for adv in adversaries() {
        let sq = build_square("prf", &adv).expect("square");
        out.push(closed(&format!("privk-keyed/{}", adv.name), sq.privk_keyed));
        out.push(closed(&format!("distinguisher-keyed/{}", adv.name), sq.game_keyed));
        let ledger = |name: String, t: Term| Entry::new(name, sq.refs.clone(), t).expect("ledger term");
        out.push(ledger(format!("privk-random/{}", adv.name), sq.privk_random));
        out.push(ledger(format!("distinguisher-random/{}", adv.name), sq.game_random));
    }
    out
}

/// Shape limits for [`Generator`].
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub depth: usize,
    /// Allow `random` inside loop bodies.
    pub random_in_loops: bool,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { depth: 3, random_in_loops: false }
    }
}

/// Type-directed generator of closed programs over ground types.
pub struct Generator {
    rng: ChaCha8Rng,
    shape: Shape,
    fresh: usize,
}

type Env = Vec<(String, Type)>;

fn str_i() -> Type {
    Type::str(Polynomial::var())
}

fn call(f: &str, args: Vec<Term>) -> Term {
    let p = if matches!(f, "flipcoin" | "beq") { Polynomial::one() } else { Polynomial::var() };
    Term::call(f, p, args)
}

impl Generator {
    pub fn new(seed: u64, shape: Shape) -> Self {
        Generator { rng: ChaCha8Rng::seed_from_u64(seed), shape, fresh: 0 }
    }

    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn ground(&mut self) -> Type {
        match self.rng.gen_range(0..7) {
            0 => Type::unit(),
            1..=3 => Type::bool(),
            4 | 5 => str_i(),
            _ => Type::tensor(Type::bool(), str_i()),
        }
    }

    fn refs(&mut self) -> RefContext {
        let mut theta = RefContext::new();
        if self.rng.gen_bool(0.4) {
            theta.0.insert("r".into(), Ground::Bool);
            if self.rng.gen_bool(0.5) {
                theta.0.insert("s".into(), Ground::Str(Polynomial::var()));
            }
        }
        theta
    }

    fn pick_var(&mut self, env: &Env, ty: &Type) -> Option<Term> {
        let found: Vec<&String> = env.iter().filter(|(_, t)| t == ty).map(|(x, _)| x).collect();
        found.choose(&mut self.rng).map(|x| Term::var((*x).clone()))
    }

    /// A value of `ty` built from literals and variables, if one exists.
    fn value(&mut self, env: &Env, ty: &Type) -> Option<Term> {
        if let Some(v) = self.pick_var(env, ty).filter(|_| self.rng.gen_bool(0.7)) {
            return Some(v);
        }
        match ty {
            Type::Ground(Ground::Unit) => Some(Term::Star),
            Type::Ground(Ground::Bool) => Some(Term::from_bool(self.rng.gen())),
            Type::Tensor(a, b) => Some(Term::pair(self.value(env, a)?, self.value(env, b)?)),
            _ => self.pick_var(env, ty),
        }
    }

    /// A computation producing a value of `ty` without further structure.
    fn leaf(&mut self, env: &Env, theta: &RefContext, ty: &Type, in_loop: bool) -> Term {
        let random_ok = !in_loop || self.shape.random_in_loops;
        if let Some(v) = self.value(env, ty) {
            if self.rng.gen_bool(0.5) {
                return Term::ret(v);
            }
        }
        match ty {
            Type::Ground(Ground::Bool) => {
                if let Some(r) = theta.iter().find(|(_, g)| **g == Ground::Bool).map(|(r, _)| r.clone()) {
                    if self.rng.gen_bool(0.3) {
                        return Term::get(r);
                    }
                }
                call("flipcoin", vec![])
            }
            Type::Ground(Ground::Unit) => match theta.iter().next().map(|(r, g)| (r.clone(), g.clone())) {
                Some((r, Ground::Bool)) if self.rng.gen_bool(0.5) => Term::set(r, Term::from_bool(self.rng.gen())),
                _ => Term::ret(Term::Star),
            },
            Type::Ground(Ground::Str(_)) => {
                let opts: &[&str] = if random_ok { &["zeros", "ones", "random"] } else { &["zeros", "ones"] };
                call(opts.choose(&mut self.rng).unwrap(), vec![])
            }
            Type::Tensor(a, b) => {
                let (x, y) = (self.name("a"), self.name("b"));
                let (ma, mb) = ((**a).clone(), (**b).clone());
                let first = self.leaf(env, theta, &ma, in_loop);
                let second = self.leaf(env, theta, &mb, in_loop);
                Term::let_(
                    x.clone(),
                    first,
                    Term::let_(y.clone(), second, Term::ret(Term::pair(Term::var(x), Term::var(y)))),
                )
            }
            _ => unreachable!("generator only targets ground types"),
        }
    }

    /// A ground-typed symbol call returning `ty`, when the arguments exist.
    fn symbol(&mut self, env: &Env, ty: &Type) -> Option<Term> {
        let s = str_i();
        let strs: Vec<Term> = env.iter().filter(|(_, t)| *t == s).map(|(x, _)| Term::var(x.clone())).collect();
        let bools: Vec<Term> =
            env.iter().filter(|(_, t)| *t == Type::bool()).map(|(x, _)| Term::var(x.clone())).collect();
        let mut two = |v: &Vec<Term>| -> Option<Vec<Term>> {
            let a = v.choose(&mut self.rng)?.clone();
            let b = v.choose(&mut self.rng)?.clone();
            Some(vec![a, b])
        };
        let candidates: Vec<(&str, Option<Vec<Term>>)> = match ty {
            Type::Ground(Ground::Bool) => {
                vec![("equal", two(&strs)), ("firstbit", strs.first().map(|x| vec![x.clone()])), ("beq", two(&bools))]
            }
            Type::Ground(Ground::Str(_)) => {
                vec![("xor", two(&strs)), ("prf", two(&strs)), ("shift", strs.last().map(|x| vec![x.clone()]))]
            }
            _ => vec![],
        };
        let live: Vec<(&str, Vec<Term>)> = candidates.into_iter().filter_map(|(f, a)| a.map(|a| (f, a))).collect();
        live.choose(&mut self.rng).map(|(f, a)| call(f, a.clone()))
    }

    fn comp(&mut self, env: &Env, theta: &RefContext, ty: &Type, depth: usize, in_loop: bool) -> Term {
        if depth == 0 {
            return self
                .symbol(env, ty)
                .filter(|_| self.rng.gen_bool(0.5))
                .unwrap_or_else(|| self.leaf(env, theta, ty, in_loop));
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0..=2 => {
                let g = self.ground();
                let x = self.name("x");
                let bound = self.comp(env, theta, &g, d, in_loop);
                let mut inner = env.clone();
                inner.push((x.clone(), g));
                Term::let_(x, bound, self.comp(&inner, theta, ty, d, in_loop))
            }
            3 => {
                let c = self.value(env, &Type::bool()).unwrap();
                Term::if_(c, self.comp(env, theta, ty, d, in_loop), self.comp(env, theta, ty, d, in_loop))
            }
            4 => {
                let g = self.ground();
                let x = self.name("y");
                let mut inner = env.clone();
                inner.push((x.clone(), g.clone()));
                let body = self.comp(&inner, theta, ty, d, in_loop);
                match self.value(env, &g) {
                    Some(arg) => Term::app(Term::lam(x, g, body), arg),
                    None => {
                        let z = self.name("z");
                        let init = self.leaf(env, theta, &g, in_loop);
                        Term::let_(z.clone(), init, Term::app(Term::lam(x, g, body), Term::var(z)))
                    }
                }
            }
            5 => Term::der(Term::bang(Polynomial::one(), self.comp(env, theta, ty, d, in_loop))),
            6 => {
                let g = self.ground();
                let (t, a, b) = (self.name("t"), self.name("u"), self.name("v"));
                let thunk = Term::bang(Polynomial::from(2), self.comp(env, theta, &g, d, in_loop));
                let mut inner = env.clone();
                inner.push((a.clone(), g.clone()));
                inner.push((b.clone(), g));
                let rest = self.comp(&inner, theta, ty, d, in_loop);
                Term::let_(
                    t.clone(),
                    Term::ret(thunk),
                    Term::let_(a, Term::der(Term::var(t.clone())), Term::let_(b, Term::der(Term::var(t)), rest)),
                )
            }
            7 => {
                let p = match self.rng.gen_range(0..3) {
                    0 => Polynomial::one(),
                    1 => Polynomial::from(2),
                    _ => Polynomial::var(),
                };
                let x = self.name("w");
                let mut inner = env.clone();
                inner.push((x.clone(), ty.clone()));
                let body = self.comp(&inner, theta, ty, d.min(1), true);
                let init = self.comp(env, theta, ty, d, in_loop);
                Term::loop_(p, Term::lam(x, ty.clone(), body), init)
            }
            8 => match ty {
                Type::Tensor(a, b) => {
                    let (a, b) = ((**a).clone(), (**b).clone());
                    let x = self.comp(env, theta, &a, d, in_loop);
                    let y = self.comp(env, theta, &b, d, in_loop);
                    let (vx, vy) = (self.name("p"), self.name("q"));
                    Term::let_(
                        vx.clone(),
                        x,
                        Term::let_(vy.clone(), y, Term::ret(Term::pair(Term::var(vx), Term::var(vy)))),
                    )
                }
                _ => {
                    let pair_ty = Type::tensor(Type::bool(), str_i());
                    let (p, x, y) = (self.name("p"), self.name("l"), self.name("r"));
                    let bound = self.comp(env, theta, &pair_ty, d, in_loop);
                    let mut inner = env.clone();
                    inner.push((x.clone(), Type::bool()));
                    inner.push((y.clone(), str_i()));
                    let body = self.comp(&inner, theta, ty, d, in_loop);
                    Term::let_(p.clone(), bound, Term::let_pair(x, y, Term::var(p), body))
                }
            },
            _ => match theta.iter().next().map(|(r, g)| (r.clone(), g.clone())) {
                Some((r, g)) => {
                    let gty = Type::Ground(g);
                    let x = self.name("g");
                    let mut inner = env.clone();
                    inner.push((x.clone(), gty.clone()));
                    let v = self.value(&inner, &gty).unwrap_or_else(|| Term::var(x.clone()));
                    let u = self.name("e");
                    Term::let_(
                        x,
                        Term::get(r.clone()),
                        Term::let_(u, Term::set(r, v), self.comp(&inner, theta, ty, d, in_loop)),
                    )
                }
                None => self.symbol(env, ty).unwrap_or_else(|| self.comp(env, theta, ty, d, in_loop)),
            },
        }
    }

    /// One program, together with its reference context.
    pub fn program(&mut self) -> (RefContext, Term) {
        let theta = self.refs();
        let ty = self.ground();
        let depth = self.rng.gen_range(1..=self.shape.depth);
        let t = self.comp(&Env::new(), &theta, &ty, depth, false);
        (theta, t)
    }

    /// A computation whose free variables are among `holes`, with its
    /// reference context and result type.
    pub fn context(&mut self, holes: &[(String, Type)]) -> (RefContext, Term, Type) {
        let theta = self.refs();
        let ty = self.ground();
        let depth = self.rng.gen_range(1..=self.shape.depth);
        let t = self.comp(&holes.to_vec(), &theta, &ty, depth, false);
        (theta, t, ty)
    }

    /// `count` well-typed programs; candidates the checker rejects are
    /// skipped.
    pub fn corpus(&mut self, count: usize) -> Vec<Entry> {
        let mut out = Vec::with_capacity(count);
        let mut tries = 0;
        while out.len() < count {
            tries += 1;
            assert!(tries < count * 50, "generator rejected too many candidates");
            let (theta, t) = self.program();
            if let Ok(e) = Entry::new(format!("gen{}", out.len()), theta, t) {
                out.push(e);
            }
        }
        out
    }
}

/// `count` generated programs from a fixed seed.
pub fn generated(seed: u64, count: usize) -> Vec<Entry> {
    Generator::new(seed, Shape::default()).corpus(count)
}
