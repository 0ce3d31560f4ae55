//! Concrete syntax printer. Output parses back to the same tree.

use std::fmt;

use super::{Ground, RefContext, Term, Type};

impl fmt::Display for Ground {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ground::Unit => f.write_str("Unit"),
            Ground::Bool => f.write_str("Bool"),
            Ground::Str(p) => write!(f, "Str[{p}]"),
        }
    }
}

impl fmt::Display for RefContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(r, g)| format!("{r}: {g}")).collect();
        f.write_str(&parts.join(", "))
    }
}

fn fmt_atom(t: &Type, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Type::Tensor(..) => write!(f, "({t})"),
        _ => write!(f, "{t}"),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Ground(g) => write!(f, "{g}"),
            Type::Tensor(a, b) => {
                fmt_atom(a, f)?;
                f.write_str(" * ")?;
                write!(f, "{b}")
            }
            Type::Bang(p, th, a) => {
                if th.is_empty() {
                    write!(f, "!{{{p}}}")?;
                } else {
                    write!(f, "!{{{p}; {th}}}")?;
                }
                fmt_atom(a, f)
            }
            Type::Arrow(p, th, a) => {
                if th.is_empty() {
                    write!(f, "({p} -> {a})")
                } else {
                    write!(f, "({p} -[{th}]> {a})")
                }
            }
        }
    }
}

/// Values in argument and component positions: lambdas get parentheses so
/// their greedy bodies stop where they should.
fn fmt_arg(v: &Term, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Term::Lam(..) | Term::Bang(..) => write!(f, "({v})"),
        _ => write!(f, "{v}"),
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => f.write_str(x),
            Term::Star => f.write_str("*"),
            Term::True => f.write_str("tt"),
            Term::False => f.write_str("ff"),
            Term::Str(s) => write!(f, "\"{s}\""),
            Term::Pair(a, b) => {
                f.write_str("(")?;
                fmt_arg(a, f)?;
                f.write_str(", ")?;
                fmt_arg(b, f)?;
                f.write_str(")")
            }
            Term::Bang(p, m) => write!(f, "!{{{p}}} ({m})"),
            Term::Lam(x, ty, m) => write!(f, "\\{x} : {ty}. {m}"),
            Term::Return(v) => write!(f, "return {v}"),
            Term::Der(v) => {
                f.write_str("der ")?;
                fmt_arg(v, f)
            }
            Term::App(v, z) => {
                fmt_arg(v, f)?;
                f.write_str(" ")?;
                fmt_arg(z, f)
            }
            Term::Let(x, n, m) => write!(f, "let {x} = {n} in {m}"),
            Term::LetPair(x, y, z, m) => write!(f, "let ({x}, {y}) = {z} in {m}"),
            Term::If(z, m, n) => write!(f, "if {z} then {m} else {n}"),
            Term::Loop(p, v, m) => write!(f, "loop[{p}]({v}, {m})"),
            Term::Set(r, z) => write!(f, "{r} := {z}"),
            Term::Get(r) => write!(f, "get {r}"),
            Term::Call(name, p, args) => {
                write!(f, "{name}[{p}](")?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    fmt_arg(a, f)?;
                }
                f.write_str(")")
            }
        }
    }
}
