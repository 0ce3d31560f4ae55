//! Graded type checking.
//!
//! The checker is bidirectional and syntax-directed. Instead of guessing how
//! a context splits between premises, every judgment reports the *demand* it
//! places on each free variable; sibling demands are merged with
//! [`box_plus`] and bangs and loops scale them with [`scale`].

mod check;

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::TypeError;
use crate::poly::Polynomial;
use crate::syntax::{RefContext, Term, Type, VarContext};

pub use check::{check_comp, check_comp_against, check_value, check_value_against, check_value_in, Checked};

/// `P ⊞ Q`, defined when the shapes agree.
pub fn box_plus(p: &Type, q: &Type) -> Result<Type, TypeError> {
    let undefined = || TypeError::Undefined(p.clone(), q.clone());
    match (p, q) {
        (Type::Ground(g), Type::Ground(h)) if g == h => Ok(p.clone()),
        (Type::Tensor(a, b), Type::Tensor(c, d)) => {
            let l = box_plus(a, c).map_err(|_| undefined())?;
            let r = box_plus(b, d).map_err(|_| undefined())?;
            Ok(Type::tensor(l, r))
        }
        (Type::Bang(g1, th1, a1), Type::Bang(g2, th2, a2)) if th1 == th2 && a1 == a2 => {
            Ok(Type::bang(g1.add(g2), th1.clone(), (**a1).clone()))
        }
        _ => Err(undefined()),
    }
}

/// `p ∗ P`. Total on positive types; an arrow may only be scaled by 1.
pub fn scale(p: &Polynomial, ty: &Type) -> Result<Type, TypeError> {
    match ty {
        Type::Ground(_) => Ok(ty.clone()),
        Type::Tensor(a, b) => Ok(Type::tensor(scale(p, a)?, scale(p, b)?)),
        Type::Bang(q, th, a) => Ok(Type::bang(p.mul(q), th.clone(), (**a).clone())),
        Type::Arrow(..) if *p == Polynomial::one() => Ok(ty.clone()),
        Type::Arrow(..) => Err(TypeError::NotPositive(ty.clone())),
    }
}

/// `A{p}`.
pub fn type_subst(ty: &Type, p: &Polynomial) -> Type {
    ty.subst(p)
}

/// `A·Ξ`: appends `xi` to every reference annotation in `ty`.
pub fn shift_type(ty: &Type, xi: &RefContext) -> Result<Type, TypeError> {
    let extend = |th: &RefContext| -> Result<RefContext, TypeError> {
        if let Some((r, _)) = xi.iter().find(|(r, _)| th.get(r).is_some()) {
            return Err(TypeError::NameClash(r.clone()));
        }
        th.union(xi)
    };
    match ty {
        Type::Ground(_) => Ok(ty.clone()),
        Type::Tensor(a, b) => Ok(Type::tensor(shift_type(a, xi)?, shift_type(b, xi)?)),
        Type::Bang(p, th, a) => Ok(Type::bang(p.clone(), extend(th)?, shift_type(a, xi)?)),
        Type::Arrow(p, th, a) => Ok(Type::arrow(shift_type(p, xi)?, extend(th)?, shift_type(a, xi)?)),
    }
}

/// `declared` can serve a use at `used`: same shape, and every bang grade
/// of `declared` covers the corresponding grade of `used` coefficient-wise.
pub fn dominates(declared: &Type, used: &Type) -> bool {
    match (declared, used) {
        (Type::Ground(g), Type::Ground(h)) => g == h,
        (Type::Tensor(a, b), Type::Tensor(c, d)) => dominates(a, c) && dominates(b, d),
        (Type::Bang(p, th1, a1), Type::Bang(q, th2, a2)) => th1 == th2 && a1 == a2 && p.covers(q),
        (Type::Arrow(..), Type::Arrow(..)) => declared == used,
        _ => false,
    }
}

/// Per-variable demand of a judgment.
pub type Demand = BTreeMap<String, Type>;

pub(crate) fn merge(a: &Demand, b: &Demand) -> Result<Demand, TypeError> {
    let mut out = a.clone();
    for (x, t) in b {
        let merged = match out.get(x) {
            Some(s) => box_plus(s, t)?,
            None => t.clone(),
        };
        out.insert(x.clone(), merged);
    }
    Ok(out)
}

pub(crate) fn scale_demand(p: &Polynomial, d: &Demand) -> Result<Demand, TypeError> {
    d.iter().map(|(x, t)| Ok((x.clone(), scale(p, t)?))).collect()
}

/// Coefficient-wise least upper bound of two demands of the same shape,
/// used for the branches of a conditional.
pub(crate) fn join_type(a: &Type, b: &Type) -> Result<Type, TypeError> {
    match (a, b) {
        (Type::Ground(g), Type::Ground(h)) if g == h => Ok(a.clone()),
        (Type::Tensor(x, y), Type::Tensor(z, w)) => Ok(Type::tensor(join_type(x, z)?, join_type(y, w)?)),
        (Type::Bang(p, th1, a1), Type::Bang(q, th2, a2)) if th1 == th2 && a1 == a2 => {
            Ok(Type::bang(p.join(q), th1.clone(), (**a1).clone()))
        }
        (Type::Arrow(..), Type::Arrow(..)) if a == b => Ok(a.clone()),
        _ => Err(TypeError::Undefined(a.clone(), b.clone())),
    }
}

pub(crate) fn join_demand(a: &Demand, b: &Demand) -> Result<Demand, TypeError> {
    let mut out = a.clone();
    for (x, t) in b {
        let j = match out.get(x) {
            Some(s) => join_type(s, t)?,
            None => t.clone(),
        };
        out.insert(x.clone(), j);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Var,
    True,
    False,
    String,
    Unit,
    Tensor,
    Bang,
    Lam,
    Der,
    App,
    Eta,
    Let,
    LetPair,
    Loop,
    Set,
    Get,
    Case,
    Fun,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Var => "var",
            Rule::True => "true",
            Rule::False => "false",
            Rule::String => "string",
            Rule::Unit => "unit",
            Rule::Tensor => "tensor",
            Rule::Bang => "bang",
            Rule::Lam => "lam",
            Rule::Der => "der",
            Rule::App => "app",
            Rule::Eta => "eta",
            Rule::Let => "let",
            Rule::LetPair => "let-pair",
            Rule::Loop => "loop",
            Rule::Set => "set",
            Rule::Get => "get",
            Rule::Case => "case",
            Rule::Fun => "fun",
        }
    }
}

/// A typing derivation. `demand` records the part of the context the node
/// consumes; `grade` is the bang grade, loop count or symbol instantiation
/// where the rule has one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub rule: Rule,
    pub demand: Demand,
    pub theta: RefContext,
    pub subject: Term,
    pub ty: Type,
    pub grade: Option<Polynomial>,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn to_json(&self) -> Value {
        let gamma: serde_json::Map<String, Value> =
            self.demand.iter().map(|(x, t)| (x.clone(), json!(t.to_string()))).collect();
        let theta: serde_json::Map<String, Value> =
            self.theta.iter().map(|(r, g)| (r.clone(), json!(Type::Ground(g.clone()).to_string()))).collect();
        let mut node = json!({
            "rule": self.rule.name(),
            "conclusion": {
                "gamma": gamma,
                "theta": theta,
                "term": self.subject.to_string(),
                "type": self.ty.to_string(),
            },
            "children": self.children.iter().map(Derivation::to_json).collect::<Vec<_>>(),
        });
        if let Some(p) = &self.grade {
            node["grade"] = json!(p.to_string());
        }
        node
    }
}

/// Checks a closed program: the term under its declared references.
pub fn check_program(theta: &RefContext, t: &Term) -> Result<Checked, TypeError> {
    if t.is_value() {
        check_value_in(&VarContext::new(), theta, t)
    } else {
        check_comp(&VarContext::new(), theta, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Ground;

    fn bang(p: u32, a: Type) -> Type {
        Type::bang(Polynomial::from(p), RefContext::new(), a)
    }

    #[test]
    fn box_plus_examples() {
        assert_eq!(box_plus(&Type::bool(), &Type::bool()).unwrap(), Type::bool());
        assert_eq!(box_plus(&bang(2, Type::bool()), &bang(3, Type::bool())).unwrap(), bang(5, Type::bool()));
        assert!(matches!(box_plus(&Type::bool(), &Type::unit()), Err(TypeError::Undefined(..))));
    }

    #[test]
    fn box_plus_requires_equal_theta() {
        let a = Type::bang(Polynomial::one(), RefContext::single("r", Ground::Bool), Type::bool());
        assert!(box_plus(&a, &bang(1, Type::bool())).is_err());
    }

    #[test]
    fn scale_examples() {
        let i = Polynomial::var();
        assert_eq!(scale(&i, &Type::bool()).unwrap(), Type::bool());
        assert_eq!(
            scale(&i, &bang(2, Type::bool())).unwrap(),
            Type::bang(i.mul(&Polynomial::from(2)), RefContext::new(), Type::bool())
        );
        let t = Type::tensor(Type::bool(), Type::str(i.clone()));
        assert_eq!(scale(&Polynomial::one(), &t).unwrap(), t);
    }

    #[test]
    fn type_subst_examples() {
        let i = Polynomial::var();
        assert_eq!(type_subst(&Type::str(i.clone()), &Polynomial::from(3)), Type::str(Polynomial::from(3)));
        assert_eq!(type_subst(&Type::bool(), &i), Type::bool());
    }

    #[test]
    fn shift_examples() {
        let xi = RefContext::single("ledger", Ground::Str(Polynomial::var()));
        assert_eq!(shift_type(&Type::bool(), &xi).unwrap(), Type::bool());
        let b = bang(2, Type::arrow(Type::bool(), RefContext::new(), Type::bool()));
        let shifted = shift_type(&b, &xi).unwrap();
        assert_eq!(
            shifted,
            Type::bang(Polynomial::from(2), xi.clone(), Type::arrow(Type::bool(), xi.clone(), Type::bool()))
        );
        assert!(matches!(shift_type(&shifted, &xi), Err(TypeError::NameClash(_))));
    }
}
