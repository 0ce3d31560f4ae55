//! Which references a term's semantics can observe.
//!
//! A reference that a term overwrites before anything else happens, or never
//! mentions, does not influence its output values. Suprema over stores only
//! need to range over the remaining references.

use std::collections::BTreeSet;

use crate::error::EvalError;
use crate::syntax::{RefContext, Term};

use super::{default_value, ground_values, store_space_size, Store};

/// References written on the leading `let` spine before any other effect.
/// Only constant producers (`zeros`, `ones`, literal returns) may precede.
pub fn resets(t: &Term) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut constants: BTreeSet<&str> = BTreeSet::new();
    let mut cur = t;
    while let Term::Let(x, n, m) = cur {
        let constant_arg =
            |v: &Term| v.is_ground_value() || matches!(v, Term::Var(y) if constants.contains(y.as_str()));
        match &**n {
            Term::Call(f, _, args) if args.is_empty() && (f == "zeros" || f == "ones") => {
                constants.insert(x);
            }
            Term::Return(v) if v.is_ground_value() => {
                constants.insert(x);
            }
            Term::Set(r, v) if constant_arg(v) => {
                out.insert(r.clone());
                constants.remove(x.as_str());
            }
            _ => break,
        }
        cur = m;
    }
    out
}

pub fn mentions_ref(t: &Term, r: &str) -> bool {
    match t {
        Term::Get(s) => s == r,
        Term::Set(s, _) if s == r => true,
        _ => t.children().into_iter().any(|c| mentions_ref(c, r)),
    }
}

/// Stores that exhaust every behaviour of `terms` relative to each other.
/// With `marginal`, only output values matter; otherwise final stores are
/// compared too, so a reference is pinned only when all terms agree on
/// how they treat it.
pub fn probe_stores(
    terms: &[&Term],
    theta: &RefContext,
    n: usize,
    cap: u128,
    marginal: bool,
) -> Result<Vec<Store>, EvalError> {
    let sets: Vec<BTreeSet<String>> = terms.iter().map(|t| resets(t)).collect();
    let mut free = RefContext::new();
    let mut pinned = Store::new();
    for (r, g) in theta.iter() {
        let reset: Vec<bool> = sets.iter().map(|s| s.contains(r)).collect();
        let silent: Vec<bool> = terms.iter().map(|t| !mentions_ref(t, r)).collect();
        let fixable = if marginal {
            reset.iter().zip(&silent).all(|(a, b)| *a || *b)
        } else {
            reset.iter().all(|x| *x) || silent.iter().all(|x| *x)
        };
        if fixable {
            pinned.insert(r.clone(), default_value(g, n)?);
        } else {
            free = free.union(&RefContext::single(r.clone(), g.clone())).expect("distinct names");
        }
    }
    let size = store_space_size(&free, n)?;
    if size > cap {
        return Err(EvalError::StoreSpaceExceeded { size, cap });
    }
    let mut stores = vec![pinned];
    for (r, g) in free.iter() {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::syntax::{parse_term, Ground};

    #[test]
    fn reset_prefix() {
        let t = parse_term("let z = zeros[2*i]() in let u = r := z in let v = s := tt in get r").unwrap();
        assert_eq!(resets(&t), BTreeSet::from(["r".to_string(), "s".to_string()]));
        let t = parse_term("let x = get r in let u = r := \"0\" in return x").unwrap();
        assert!(resets(&t).is_empty());
    }

    #[test]
    fn pinned_references() {
        let theta = RefContext::single("r", Ground::Str(Polynomial::var()));
        let reader = parse_term("get r").unwrap();
        let silent = parse_term("return tt").unwrap();
        let writer = parse_term("let z = ones[i]() in let u = r := z in return tt").unwrap();
        assert_eq!(probe_stores(&[&reader, &silent], &theta, 3, 1 << 10, true).unwrap().len(), 8);
        assert_eq!(probe_stores(&[&writer, &silent], &theta, 3, 1 << 10, true).unwrap().len(), 1);
        assert_eq!(probe_stores(&[&writer, &silent], &theta, 3, 1 << 10, false).unwrap().len(), 8);
        assert_eq!(probe_stores(&[&writer, &writer], &theta, 3, 1 << 10, false).unwrap().len(), 1);
    }
}
