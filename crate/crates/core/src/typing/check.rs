use crate::error::TypeError;
use crate::eval::registry;
use crate::poly::Polynomial;
use crate::syntax::{RefContext, Term, Type, VarContext};

use super::{dominates, join_demand, merge, scale_demand, Demand, Derivation, Rule};

/// Result of a successful check: the type, the derivation, and the
/// references the term touches when run.
#[derive(Clone, Debug)]
pub struct Checked {
    pub ty: Type,
    pub derivation: Derivation,
    pub effects: RefContext,
}

struct Out {
    ty: Type,
    demand: Demand,
    effects: RefContext,
    /// For λ and bang literals: the references their body touches.
    latent: RefContext,
    deriv: Derivation,
}

fn short(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 80 {
        let head: String = s.chars().take(77).collect();
        format!("{head}...")
    } else {
        s
    }
}

fn mismatch(t: &Term, expected: &Type, found: &Type) -> TypeError {
    TypeError::Mismatch { term: short(t), expected: expected.clone(), found: found.clone() }
}

fn node(
    rule: Rule,
    demand: &Demand,
    theta: &RefContext,
    subject: &Term,
    ty: &Type,
    grade: Option<Polynomial>,
    children: Vec<Derivation>,
) -> Derivation {
    Derivation {
        rule,
        demand: demand.clone(),
        theta: theta.clone(),
        subject: subject.clone(),
        ty: ty.clone(),
        grade,
        children,
    }
}

fn leaf(rule: Rule, theta: &RefContext, t: &Term, ty: Type, expected: Option<&Type>) -> Result<Out, TypeError> {
    if let Some(e) = expected {
        if *e != ty {
            return Err(mismatch(t, e, &ty));
        }
    }
    let demand = Demand::new();
    Ok(Out {
        deriv: node(rule, &demand, theta, t, &ty, None, vec![]),
        ty,
        demand,
        effects: RefContext::new(),
        latent: RefContext::new(),
    })
}

fn positive(ty: &Type) -> Result<(), TypeError> {
    if !ty.is_positive() {
        return Err(TypeError::NotPositive(ty.clone()));
    }
    ty.well_formed()
}

/// Removes `x` from `d` after checking the body's use of it against the
/// binder type.
fn bind(d: &mut Demand, x: &str, declared: &Type) -> Result<(), TypeError> {
    if let Some(used) = d.remove(x) {
        if !dominates(declared, &used) {
            return Err(TypeError::DemandExceeds { var: x.to_string(), declared: declared.clone(), demand: used });
        }
    }
    Ok(())
}

/// Equal up to bang grades. Whether the grades suffice is decided where the
/// variable is bound, once every use has been counted.
fn same_shape(a: &Type, b: &Type) -> bool {
    match (a, b) {
        (Type::Tensor(x, y), Type::Tensor(z, w)) => same_shape(x, z) && same_shape(y, w),
        (Type::Bang(_, th1, a1), Type::Bang(_, th2, a2)) => th1 == th2 && a1 == a2,
        _ => a == b,
    }
}

fn within(used: &RefContext, theta: &RefContext) -> Result<(), TypeError> {
    for (r, g) in used.iter() {
        match theta.get(r) {
            None => return Err(TypeError::EffectNotAllowed(r.clone())),
            Some(h) if h != g => {
                return Err(TypeError::RefTypeClash {
                    name: r.clone(),
                    declared: Type::Ground(h.clone()).to_string(),
                    used: Type::Ground(g.clone()).to_string(),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

fn value(g: &VarContext, theta: &RefContext, v: &Term, expected: Option<&Type>) -> Result<Out, TypeError> {
    match v {
        Term::Var(x) => {
            let declared = g.get(x).ok_or_else(|| TypeError::Unbound(x.clone()))?;
            let ty = match expected {
                None => declared.clone(),
                Some(e) if same_shape(declared, e) => e.clone(),
                Some(e) => return Err(mismatch(v, e, declared)),
            };
            let mut demand = Demand::new();
            demand.insert(x.clone(), ty.clone());
            Ok(Out {
                deriv: node(Rule::Var, &demand, theta, v, &ty, None, vec![]),
                ty,
                demand,
                effects: RefContext::new(),
                latent: RefContext::new(),
            })
        }
        Term::Star => leaf(Rule::Unit, theta, v, Type::unit(), expected),
        Term::True => leaf(Rule::True, theta, v, Type::bool(), expected),
        Term::False => leaf(Rule::False, theta, v, Type::bool(), expected),
        Term::Str(s) => {
            if s.is_empty() {
                return Err(TypeError::EmptyString);
            }
            leaf(Rule::String, theta, v, Type::str(Polynomial::constant(s.len() as u64)), expected)
        }
        Term::Pair(a, b) => {
            let (ea, eb) = match expected {
                Some(Type::Tensor(p, q)) => (Some(&**p), Some(&**q)),
                Some(e) => {
                    let found = value(g, theta, v, None)?.ty;
                    return Err(mismatch(v, e, &found));
                }
                None => (None, None),
            };
            let oa = value(g, theta, a, ea)?;
            let ob = value(g, theta, b, eb)?;
            positive(&oa.ty)?;
            positive(&ob.ty)?;
            let ty = Type::tensor(oa.ty, ob.ty);
            let demand = merge(&oa.demand, &ob.demand)?;
            Ok(Out {
                deriv: node(Rule::Tensor, &demand, theta, v, &ty, None, vec![oa.deriv, ob.deriv]),
                ty,
                demand,
                effects: RefContext::new(),
                latent: RefContext::new(),
            })
        }
        Term::Bang(p, m) => {
            let (grade, body_theta, body_expected) = match expected {
                Some(Type::Bang(q, th, a)) => (q.clone(), th.clone(), Some(&**a)),
                Some(e) => {
                    let found = value(g, theta, v, None)?.ty;
                    return Err(mismatch(v, e, &found));
                }
                None => (p.clone(), theta.clone(), None),
            };
            let body = comp(g, &body_theta, m, body_expected)?;
            let th = if expected.is_some() { body_theta } else { body.effects.clone() };
            let ty = Type::bang(grade.clone(), th, body.ty);
            let demand = scale_demand(&grade, &body.demand)?;
            Ok(Out {
                deriv: node(Rule::Bang, &demand, theta, v, &ty, Some(grade), vec![body.deriv]),
                ty,
                demand,
                effects: RefContext::new(),
                latent: body.effects,
            })
        }
        Term::Lam(x, p, m) => {
            positive(p)?;
            let (body_theta, body_expected) = match expected {
                Some(Type::Arrow(q, th, a)) => {
                    if **q != *p {
                        let found = Type::arrow(p.clone(), th.clone(), (**a).clone());
                        return Err(mismatch(v, expected.unwrap(), &found));
                    }
                    (th.clone(), Some(&**a))
                }
                Some(e) => return Err(TypeError::Expected { term: short(v), what: "a function", found: e.clone() }),
                None => (theta.clone(), None),
            };
            let mut inner = g.clone();
            inner.insert(x.clone(), p.clone());
            let body = comp(&inner, &body_theta, m, body_expected)?;
            let mut demand = body.demand.clone();
            bind(&mut demand, x, p)?;
            let th = if expected.is_some() { body_theta } else { body.effects.clone() };
            let ty = Type::arrow(p.clone(), th, body.ty);
            Ok(Out {
                deriv: node(Rule::Lam, &demand, theta, v, &ty, None, vec![body.deriv]),
                ty,
                demand,
                effects: RefContext::new(),
                latent: body.effects,
            })
        }
        _ => Err(TypeError::NotValue(short(v))),
    }
}

fn check_result(t: &Term, ty: &Type, expected: Option<&Type>) -> Result<(), TypeError> {
    match expected {
        Some(e) if e != ty => Err(mismatch(t, e, ty)),
        _ => Ok(()),
    }
}

fn comp(g: &VarContext, theta: &RefContext, m: &Term, expected: Option<&Type>) -> Result<Out, TypeError> {
    let simple = |rule: Rule, ty: Type, demand: Demand, effects: RefContext, grade, children| {
        check_result(m, &ty, expected)?;
        within(&effects, theta)?;
        Ok(Out {
            deriv: node(rule, &demand, theta, m, &ty, grade, children),
            ty,
            demand,
            effects,
            latent: RefContext::new(),
        })
    };
    match m {
        Term::Return(v) => {
            let o = value(g, theta, v, expected)?;
            simple(Rule::Eta, o.ty, o.demand, RefContext::new(), None, vec![o.deriv])
        }
        Term::Der(z) => {
            let (o, th) = match &**z {
                Term::Var(x) => {
                    let declared = g.get(x).ok_or_else(|| TypeError::Unbound(x.clone()))?;
                    let Type::Bang(_, th, a) = declared else {
                        return Err(TypeError::Expected { term: short(z), what: "a bang", found: declared.clone() });
                    };
                    let once = Type::bang(Polynomial::one(), th.clone(), (**a).clone());
                    (value(g, theta, z, Some(&once))?, th.clone())
                }
                Term::Bang(_, body) => {
                    let b = comp(g, theta, body, expected)?;
                    let once = Type::bang(Polynomial::one(), theta.clone(), b.ty.clone());
                    (value(g, theta, z, Some(&once))?, b.effects)
                }
                other => {
                    let found = value(g, theta, other, None)?.ty;
                    return Err(TypeError::Expected { term: short(other), what: "a bang", found });
                }
            };
            let effects = if matches!(&**z, Term::Bang(..)) { o.latent.clone() } else { th };
            let Type::Bang(_, _, a) = &o.ty else { unreachable!() };
            simple(Rule::Der, (**a).clone(), o.demand.clone(), effects, None, vec![o.deriv])
        }
        Term::App(f, z) => {
            let head = match &**f {
                Term::Lam(_, p, _) => {
                    let want = expected.map(|e| Type::arrow(p.clone(), theta.clone(), e.clone()));
                    value(g, theta, f, want.as_ref())?
                }
                Term::Var(_) => value(g, theta, f, None)?,
                other => {
                    let found = value(g, theta, other, None)?.ty;
                    return Err(TypeError::Expected { term: short(other), what: "a function", found });
                }
            };
            let Type::Arrow(p, th, a) = &head.ty else {
                return Err(TypeError::Expected { term: short(f), what: "a function", found: head.ty.clone() });
            };
            let effects = if matches!(&**f, Term::Lam(..)) { head.latent.clone() } else { th.clone() };
            let arg = value(g, theta, z, Some(p))?;
            let demand = merge(&head.demand, &arg.demand)?;
            simple(Rule::App, (**a).clone(), demand, effects, None, vec![head.deriv, arg.deriv])
        }
        Term::Let(x, n, body) => {
            let on = comp(g, theta, n, None)?;
            on.ty.well_formed()?;
            let mut inner = g.clone();
            inner.insert(x.clone(), on.ty.clone());
            let ob = comp(&inner, theta, body, expected)?;
            let mut bd = ob.demand.clone();
            bind(&mut bd, x, &on.ty)?;
            let demand = merge(&on.demand, &bd)?;
            let effects = on.effects.union(&ob.effects)?;
            simple(Rule::Let, ob.ty, demand, effects, None, vec![on.deriv, ob.deriv])
        }
        Term::LetPair(x, y, z, body) => {
            let oz = value(g, theta, z, None)?;
            let Type::Tensor(p, q) = &oz.ty else {
                return Err(TypeError::Expected { term: short(z), what: "a pair", found: oz.ty.clone() });
            };
            if x == y {
                return Err(TypeError::Mismatch { term: short(m), expected: oz.ty.clone(), found: oz.ty.clone() });
            }
            let mut inner = g.clone();
            inner.insert(x.clone(), (**p).clone());
            inner.insert(y.clone(), (**q).clone());
            let ob = comp(&inner, theta, body, expected)?;
            let mut bd = ob.demand.clone();
            bind(&mut bd, x, p)?;
            bind(&mut bd, y, q)?;
            let demand = merge(&oz.demand, &bd)?;
            simple(Rule::LetPair, ob.ty, demand, ob.effects, None, vec![oz.deriv, ob.deriv])
        }
        Term::If(z, a, b) => {
            let oz = value(g, theta, z, Some(&Type::bool()))?;
            let oa = comp(g, theta, a, expected)?;
            let ob = comp(g, theta, b, Some(&oa.ty))?;
            let demand = merge(&oz.demand, &join_demand(&oa.demand, &ob.demand)?)?;
            let effects = oa.effects.union(&ob.effects)?;
            simple(Rule::Case, oa.ty, demand, effects, None, vec![oz.deriv, oa.deriv, ob.deriv])
        }
        Term::Loop(p, f, init) => {
            let oi = comp(g, theta, init, expected)?;
            positive(&oi.ty)?;
            let step_ty = Type::arrow(oi.ty.clone(), theta.clone(), oi.ty.clone());
            let (of, effects) = match &**f {
                Term::Lam(..) => {
                    let o = value(g, theta, f, Some(&step_ty))?;
                    let e = o.latent.clone();
                    (o, e)
                }
                Term::Var(_) => {
                    let o = value(g, theta, f, None)?;
                    match &o.ty {
                        Type::Arrow(a, th, b) if **a == oi.ty && **b == oi.ty => {
                            let th = th.clone();
                            (o, th)
                        }
                        _ => return Err(mismatch(f, &step_ty, &o.ty)),
                    }
                }
                other => {
                    let found = value(g, theta, other, None)?.ty;
                    return Err(mismatch(other, &step_ty, &found));
                }
            };
            let demand = merge(&scale_demand(p, &of.demand)?, &oi.demand)?;
            let effects = effects.union(&oi.effects)?;
            simple(Rule::Loop, oi.ty, demand, effects, Some(p.clone()), vec![of.deriv, oi.deriv])
        }
        Term::Set(r, z) => {
            let gr = theta.get(r).ok_or_else(|| TypeError::UnboundRef(r.clone()))?.clone();
            let oz = value(g, theta, z, Some(&Type::Ground(gr.clone())))?;
            simple(Rule::Set, Type::unit(), oz.demand, RefContext::single(r.clone(), gr), None, vec![oz.deriv])
        }
        Term::Get(r) => {
            let gr = theta.get(r).ok_or_else(|| TypeError::UnboundRef(r.clone()))?.clone();
            simple(Rule::Get, Type::Ground(gr.clone()), Demand::new(), RefContext::single(r.clone(), gr), None, vec![])
        }
        Term::Call(f, p, args) => {
            let (params, result) = registry::signature(f).ok_or_else(|| TypeError::UnknownSymbol(f.clone()))?;
            if params.len() != args.len() {
                return Err(TypeError::Arity { name: f.clone(), expected: params.len(), found: args.len() });
            }
            let mut demand = Demand::new();
            let mut children = Vec::with_capacity(args.len());
            for (a, gk) in args.iter().zip(&params) {
                let oa = value(g, theta, a, Some(&Type::Ground(gk.subst(p))))?;
                demand = merge(&demand, &oa.demand)?;
                children.push(oa.deriv);
            }
            simple(Rule::Fun, Type::Ground(result.subst(p)), demand, RefContext::new(), Some(p.clone()), children)
        }
        _ => Err(TypeError::NotComputation(short(m))),
    }
}

fn finish(g: &VarContext, o: Out) -> Result<Checked, TypeError> {
    for (x, used) in &o.demand {
        let declared = g.get(x).ok_or_else(|| TypeError::Unbound(x.clone()))?;
        if !dominates(declared, used) {
            return Err(TypeError::DemandExceeds { var: x.clone(), declared: declared.clone(), demand: used.clone() });
        }
    }
    Ok(Checked { ty: o.ty, derivation: o.deriv, effects: o.effects })
}

fn context_ok(g: &VarContext) -> Result<(), TypeError> {
    for t in g.values() {
        t.well_formed()?;
    }
    Ok(())
}

/// `Γ ⊢ V : A` with no references in scope.
pub fn check_value(g: &VarContext, v: &Term) -> Result<Checked, TypeError> {
    check_value_in(g, &RefContext::new(), v)
}

/// `Γ ⊢ V : A`, where λ and bang bodies may use the references of `theta`.
pub fn check_value_in(g: &VarContext, theta: &RefContext, v: &Term) -> Result<Checked, TypeError> {
    context_ok(g)?;
    finish(g, value(g, theta, v, None)?)
}

pub fn check_value_against(g: &VarContext, theta: &RefContext, v: &Term, ty: &Type) -> Result<Checked, TypeError> {
    context_ok(g)?;
    ty.well_formed()?;
    finish(g, value(g, theta, v, Some(ty))?)
}

/// `Γ; Θ ⊢ M : A`, synthesizing `A`.
pub fn check_comp(g: &VarContext, theta: &RefContext, m: &Term) -> Result<Checked, TypeError> {
    context_ok(g)?;
    finish(g, comp(g, theta, m, None)?)
}

pub fn check_comp_against(g: &VarContext, theta: &RefContext, m: &Term, ty: &Type) -> Result<Checked, TypeError> {
    context_ok(g)?;
    ty.well_formed()?;
    finish(g, comp(g, theta, m, Some(ty))?)
}
