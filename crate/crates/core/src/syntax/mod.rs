//! Abstract syntax: grades, types, reference contexts and terms.
//!
//! Values and computations share one [`Term`] enum; [`Term::is_value`]
//! separates them. Lambda binders carry their argument type and bang thunks
//! carry a grade, so checking never has to guess either.

mod parse;
mod print;
mod subst;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::TypeError;
use crate::poly::Polynomial;

pub use parse::{parse_poly, parse_program, parse_term, parse_type, Program};
pub use subst::{
    alpha_eq, canonical, free_vars, fresh_name, shift_term, subst_many, subst_poly, subst_secparam, subst_value,
};

/// A bit string, the carrier of `Str[p]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Bits(pub Vec<bool>);

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Bits(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All strings of length `len`, in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = Bits> {
        assert!(len < 64, "string space too large to enumerate");
        (0u64..(1u64 << len)).map(move |k| Bits::from_index(k, len))
    }

    /// Big-endian: the first character is the most significant bit.
    pub fn from_index(k: u64, len: usize) -> Bits {
        Bits((0..len).map(|j| (k >> (len - 1 - j)) & 1 == 1).collect())
    }

    /// Big-endian value, modulo 2^64 for very long strings.
    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| acc.wrapping_shl(1) | u64::from(b))
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    pub fn parse(s: &str) -> Option<Bits> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Bits)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Ground {
    Unit,
    Bool,
    Str(Polynomial),
}

impl Ground {
    pub fn subst(&self, q: &Polynomial) -> Ground {
        match self {
            Ground::Str(p) => Ground::Str(p.subst(q)),
            g => g.clone(),
        }
    }
}

/// Reference context `Θ`: reference names mapped to ground types, kept
/// sorted by name so equal contexts compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct RefContext(pub BTreeMap<String, Ground>);

impl RefContext {
    pub fn new() -> Self {
        RefContext::default()
    }

    pub fn single(name: impl Into<String>, g: Ground) -> Self {
        let mut m = BTreeMap::new();
        m.insert(name.into(), g);
        RefContext(m)
    }

    pub fn get(&self, name: &str) -> Option<&Ground> {
        self.0.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Ground)> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &RefContext) -> bool {
        self.0.iter().all(|(r, g)| other.0.get(r) == Some(g))
    }

    /// Union of two contexts; fails when a name is bound at two ground types.
    pub fn union(&self, other: &RefContext) -> Result<RefContext, TypeError> {
        let mut out = self.0.clone();
        for (r, g) in &other.0 {
            match out.get(r) {
                Some(h) if h != g => {
                    return Err(TypeError::RefTypeClash {
                        name: r.clone(),
                        declared: Type::Ground(h.clone()).to_string(),
                        used: Type::Ground(g.clone()).to_string(),
                    })
                }
                _ => {
                    out.insert(r.clone(), g.clone());
                }
            }
        }
        Ok(RefContext(out))
    }

    pub fn subst(&self, q: &Polynomial) -> RefContext {
        RefContext(self.0.iter().map(|(r, g)| (r.clone(), g.subst(q))).collect())
    }
}

/// Types. Positive types are those without a top-level arrow; see
/// [`Type::is_positive`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Type {
    Ground(Ground),
    Tensor(Box<Type>, Box<Type>),
    Bang(Polynomial, RefContext, Box<Type>),
    Arrow(Box<Type>, RefContext, Box<Type>),
}

impl Type {
    pub fn unit() -> Type {
        Type::Ground(Ground::Unit)
    }

    pub fn bool() -> Type {
        Type::Ground(Ground::Bool)
    }

    pub fn str(p: Polynomial) -> Type {
        Type::Ground(Ground::Str(p))
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    pub fn bang(p: Polynomial, theta: RefContext, a: Type) -> Type {
        Type::Bang(p, theta, Box::new(a))
    }

    pub fn arrow(p: Type, theta: RefContext, a: Type) -> Type {
        Type::Arrow(Box::new(p), theta, Box::new(a))
    }

    pub fn is_positive(&self) -> bool {
        !matches!(self, Type::Arrow(..))
    }

    /// Checks the positive/general stratification: tensor components and
    /// arrow domains are positive.
    pub fn well_formed(&self) -> Result<(), TypeError> {
        match self {
            Type::Ground(_) => Ok(()),
            Type::Tensor(a, b) => {
                for t in [a, b] {
                    if !t.is_positive() {
                        return Err(TypeError::NotPositive((**t).clone()));
                    }
                    t.well_formed()?;
                }
                Ok(())
            }
            Type::Bang(_, _, a) => a.well_formed(),
            Type::Arrow(p, _, a) => {
                if !p.is_positive() {
                    return Err(TypeError::NotPositive((**p).clone()));
                }
                p.well_formed()?;
                a.well_formed()
            }
        }
    }

    /// `A{q}`: every grade and string length with `i` replaced by `q`.
    pub fn subst(&self, q: &Polynomial) -> Type {
        match self {
            Type::Ground(g) => Type::Ground(g.subst(q)),
            Type::Tensor(a, b) => Type::tensor(a.subst(q), b.subst(q)),
            Type::Bang(p, th, a) => Type::bang(p.subst(q), th.subst(q), a.subst(q)),
            Type::Arrow(p, th, a) => Type::arrow(p.subst(q), th.subst(q), a.subst(q)),
        }
    }

    /// True for types built from ground types and tensors only.
    pub fn is_enumerable(&self) -> bool {
        match self {
            Type::Ground(_) => true,
            Type::Tensor(a, b) => a.is_enumerable() && b.is_enumerable(),
            _ => false,
        }
    }
}

/// Variable context `Γ`.
pub type VarContext = BTreeMap<String, Type>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    // values
    Var(String),
    Star,
    True,
    False,
    Str(Bits),
    Pair(Box<Term>, Box<Term>),
    Bang(Polynomial, Box<Term>),
    Lam(String, Type, Box<Term>),
    // computations
    Return(Box<Term>),
    Der(Box<Term>),
    App(Box<Term>, Box<Term>),
    Let(String, Box<Term>, Box<Term>),
    LetPair(String, String, Box<Term>, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    Loop(Polynomial, Box<Term>, Box<Term>),
    Set(String, Box<Term>),
    Get(String),
    Call(String, Polynomial, Vec<Term>),
}

impl Term {
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into())
    }

    pub fn bits(s: &str) -> Term {
        Term::Str(Bits::parse(s).expect("bit string literal"))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn bang(p: Polynomial, m: Term) -> Term {
        Term::Bang(p, Box::new(m))
    }

    pub fn lam(x: impl Into<String>, ty: Type, body: Term) -> Term {
        Term::Lam(x.into(), ty, Box::new(body))
    }

    pub fn ret(v: Term) -> Term {
        Term::Return(Box::new(v))
    }

    pub fn der(v: Term) -> Term {
        Term::Der(Box::new(v))
    }

    pub fn app(f: Term, z: Term) -> Term {
        Term::App(Box::new(f), Box::new(z))
    }

    pub fn let_(x: impl Into<String>, n: Term, m: Term) -> Term {
        Term::Let(x.into(), Box::new(n), Box::new(m))
    }

    pub fn let_pair(x: impl Into<String>, y: impl Into<String>, z: Term, m: Term) -> Term {
        Term::LetPair(x.into(), y.into(), Box::new(z), Box::new(m))
    }

    pub fn if_(z: Term, m: Term, n: Term) -> Term {
        Term::If(Box::new(z), Box::new(m), Box::new(n))
    }

    pub fn loop_(p: Polynomial, v: Term, m: Term) -> Term {
        Term::Loop(p, Box::new(v), Box::new(m))
    }

    pub fn set(r: impl Into<String>, z: Term) -> Term {
        Term::Set(r.into(), Box::new(z))
    }

    pub fn get(r: impl Into<String>) -> Term {
        Term::Get(r.into())
    }

    pub fn call(f: impl Into<String>, p: Polynomial, args: Vec<Term>) -> Term {
        Term::Call(f.into(), p, args)
    }

    pub fn is_value(&self) -> bool {
        matches!(
            self,
            Term::Var(_)
                | Term::Star
                | Term::True
                | Term::False
                | Term::Str(_)
                | Term::Pair(..)
                | Term::Bang(..)
                | Term::Lam(..)
        )
    }

    /// Closed ground values: `*`, booleans and string literals.
    pub fn is_ground_value(&self) -> bool {
        matches!(self, Term::Star | Term::True | Term::False | Term::Str(_))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Term::True => Some(true),
            Term::False => Some(false),
            _ => None,
        }
    }

    pub fn as_bits(&self) -> Option<&Bits> {
        match self {
            Term::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn from_bool(b: bool) -> Term {
        if b {
            Term::True
        } else {
            Term::False
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Star | Term::True | Term::False | Term::Str(_) | Term::Get(_) => {
                vec![]
            }
            Term::Pair(a, b) | Term::App(a, b) => vec![a, b],
            Term::Bang(_, m) | Term::Lam(_, _, m) | Term::Return(m) | Term::Der(m) => vec![m],
            Term::Set(_, z) => vec![z],
            Term::Let(_, n, m) | Term::LetPair(_, _, n, m) | Term::Loop(_, n, m) => vec![n, m],
            Term::If(z, m, n) => vec![z, m, n],
            Term::Call(_, _, args) => args.iter().collect(),
        }
    }
}
