//! The fixed table of function symbols.
//!
//! | symbol              | type                                  | meaning                                   |
//! |---------------------|---------------------------------------|-------------------------------------------|
//! | `random`            | `→ Str[i]`                            | uniform string                            |
//! | `flipcoin`          | `→ Bool`                              | fair coin                                 |
//! | `zeros`, `ones`     | `→ Str[i]`                            | constant strings                          |
//! | `xor`               | `Str[i] × Str[i] → Str[i]`            | bitwise exclusive or                      |
//! | `equal`             | `Str[i] × Str[i] → Bool`              | string equality                           |
//! | `shift`             | `Str[i] → Str[i]`                     | cyclic shift left by one                  |
//! | `firstbit`          | `Str[i] → Bool`                       | first character is `1`                    |
//! | `concat`            | `Str[i] × Str[i] → Str[2i]`           | concatenation                             |
//! | `fst_half`          | `Str[2i] → Str[i]`                    | first half                                |
//! | `snd_half`          | `Str[2i] → Str[i]`                    | second half                               |
//! | `beq`               | `Bool × Bool → Bool`                  | boolean equality                          |
//! | `prf`               | `Str[i] × Str[i] → Str[i]`            | toy keyed function `rot(r, k) ⊕ k`        |
//! | `ledgerQ_has`       | `Str[Q(2i+1)] × Str[i] → Bool`        | query present in the ledger               |
//! | `ledgerQ_get`       | `Str[Q(2i+1)] × Str[i] → Str[i]`      | stored answer, zeros when absent          |
//! | `ledgerQ_put`       | `Str[Q(2i+1)] × Str[i] × Str[i] → …`  | record an answer                          |
//!
//! `Q` ranges over `1..=4`. All symbols are deterministic except `random`
//! and `flipcoin`.

use crate::error::{EvalError, LedgerError};
use crate::poly::Polynomial;
use crate::syntax::{Bits, Ground, Term};

use super::dist::Dist;

/// Largest string length `random` will enumerate.
pub const MAX_RANDOM_BITS: usize = 20;

pub const LEDGER_CAPACITIES: std::ops::RangeInclusive<usize> = 1..=4;

fn s(p: Polynomial) -> Ground {
    Ground::Str(p)
}

fn i() -> Polynomial {
    Polynomial::var()
}

fn two_i() -> Polynomial {
    Polynomial::from(2).mul(&i())
}

/// Ledger length `Q(2i+1)`.
pub fn ledger_length(q: usize) -> Polynomial {
    Polynomial::constant(q as u64).mul(&two_i().add(&Polynomial::one()))
}

fn ledger_symbol(name: &str) -> Option<(usize, &str)> {
    let rest = name.strip_prefix("ledger")?;
    let (digits, op) = rest.split_once('_')?;
    let q: usize = digits.parse().ok()?;
    if !LEDGER_CAPACITIES.contains(&q) || !matches!(op, "has" | "get" | "put") {
        return None;
    }
    Some((q, op))
}

/// `typeof(f)` with the security parameter free.
pub fn signature(name: &str) -> Option<(Vec<Ground>, Ground)> {
    let st = || s(i());
    Some(match name {
        "random" | "zeros" | "ones" => (vec![], st()),
        "flipcoin" => (vec![], Ground::Bool),
        "xor" | "prf" => (vec![st(), st()], st()),
        "equal" => (vec![st(), st()], Ground::Bool),
        "shift" => (vec![st()], st()),
        "firstbit" => (vec![st()], Ground::Bool),
        "concat" => (vec![st(), st()], s(two_i())),
        "fst_half" | "snd_half" => (vec![s(two_i())], st()),
        "beq" => (vec![Ground::Bool, Ground::Bool], Ground::Bool),
        _ => {
            let (q, op) = ledger_symbol(name)?;
            let l = s(ledger_length(q));
            match op {
                "has" => (vec![l, st()], Ground::Bool),
                "get" => (vec![l, st()], st()),
                _ => (vec![l.clone(), st(), st()], l),
            }
        }
    })
}

pub fn symbols() -> Vec<String> {
    let mut out: Vec<String> = [
        "random", "flipcoin", "zeros", "ones", "xor", "equal", "shift", "firstbit", "concat", "fst_half", "snd_half",
        "beq", "prf",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for q in LEDGER_CAPACITIES {
        for op in ["has", "get", "put"] {
            out.push(format!("ledger{q}_{op}"));
        }
    }
    out
}

fn bad(name: &str, reason: impl Into<String>) -> EvalError {
    EvalError::BadArgument { name: name.to_string(), reason: reason.into() }
}

fn bits_arg<'a>(name: &str, t: &'a Term, len: usize) -> Result<&'a Bits, EvalError> {
    match t {
        Term::Str(b) if b.len() == len => Ok(b),
        Term::Str(b) => Err(bad(name, format!("string of length {}, expected {len}", b.len()))),
        other => Err(bad(name, format!("`{other}` is not a string"))),
    }
}

fn bool_arg(name: &str, t: &Term) -> Result<bool, EvalError> {
    t.as_bool().ok_or_else(|| bad(name, format!("`{t}` is not a boolean")))
}

/// Rotates left by `k` positions.
pub fn rotate(b: &Bits, k: usize) -> Bits {
    let n = b.len();
    if n == 0 {
        return b.clone();
    }
    Bits((0..n).map(|j| b.0[(j + k) % n]).collect())
}

/// The toy keyed function: `r` rotated left by `int(k) mod |r|`, xored with `k`.
pub fn prf(k: &Bits, r: &Bits) -> Bits {
    let m = r.len();
    let amount = k.0.iter().fold(0usize, |acc, &b| (acc * 2 + usize::from(b)) % m.max(1));
    rotate(r, amount).xor(k)
}

/// Interprets `name` instantiated at length `m = p(n)` on closed ground
/// arguments.
pub fn apply(name: &str, m: usize, args: &[Term]) -> Result<Dist<Term>, EvalError> {
    let (params, _) = signature(name).ok_or_else(|| EvalError::UnknownSymbol(name.to_string()))?;
    if params.len() != args.len() {
        return Err(EvalError::Arity { name: name.to_string(), expected: params.len(), found: args.len() });
    }
    let det = |t: Term| Ok(Dist::dirac(t));
    match name {
        "random" => {
            if m > MAX_RANDOM_BITS {
                return Err(bad(name, format!("{m}-bit strings are too many to enumerate")));
            }
            Ok(Dist::uniform(Bits::all(m).map(Term::Str)))
        }
        "flipcoin" => Ok(Dist::uniform([Term::True, Term::False])),
        "zeros" => det(Term::Str(Bits::zeros(m))),
        "ones" => det(Term::Str(Bits::ones(m))),
        "xor" => det(Term::Str(bits_arg(name, &args[0], m)?.xor(bits_arg(name, &args[1], m)?))),
        "equal" => det(Term::from_bool(bits_arg(name, &args[0], m)? == bits_arg(name, &args[1], m)?)),
        "shift" => det(Term::Str(rotate(bits_arg(name, &args[0], m)?, 1))),
        "firstbit" => det(Term::from_bool(bits_arg(name, &args[0], m)?.0.first() == Some(&true))),
        "concat" => {
            let mut v = bits_arg(name, &args[0], m)?.0.clone();
            v.extend_from_slice(&bits_arg(name, &args[1], m)?.0);
            det(Term::Str(Bits(v)))
        }
        "fst_half" => det(Term::Str(Bits(bits_arg(name, &args[0], 2 * m)?.0[..m].to_vec()))),
        "snd_half" => det(Term::Str(Bits(bits_arg(name, &args[0], 2 * m)?.0[m..].to_vec()))),
        "beq" => det(Term::from_bool(bool_arg(name, &args[0])? == bool_arg(name, &args[1])?)),
        "prf" => det(Term::Str(prf(bits_arg(name, &args[0], m)?, bits_arg(name, &args[1], m)?))),
        _ => {
            let (q, op) = ledger_symbol(name).expect("signature accepted the name");
            let codec = LedgerCodec::new(q, m);
            let l = bits_arg(name, &args[0], codec.length())?;
            let query = bits_arg(name, &args[1], m)?;
            match op {
                "has" => det(Term::from_bool(codec.lookup(l, query).is_some())),
                "get" => det(Term::Str(codec.lookup(l, query).unwrap_or_else(|| Bits::zeros(m)))),
                _ => {
                    let answer = bits_arg(name, &args[2], m)?;
                    det(Term::Str(codec.insert(l, query, answer)))
                }
            }
        }
    }
}

/// Fixed-width packing of an association list of `(query, answer)` pairs.
///
/// A ledger holds `capacity` slots of `1 + 2·width` bits: a valid bit, the
/// query, the answer. Valid slots come first and empty slots are all zeros,
/// so the all-zero string is the empty ledger. The string whose first slot
/// has valid bit 0 and every other bit 1 marks a ledger that overflowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerCodec {
    pub capacity: usize,
    pub width: usize,
}

impl LedgerCodec {
    pub fn new(capacity: usize, width: usize) -> Self {
        LedgerCodec { capacity, width }
    }

    fn slot(&self) -> usize {
        1 + 2 * self.width
    }

    pub fn length(&self) -> usize {
        self.capacity * self.slot()
    }

    pub fn full_marker(&self) -> Bits {
        let mut b = Bits::ones(self.length());
        b.0[0] = false;
        b
    }

    pub fn encode(&self, entries: &[(Bits, Bits)]) -> Result<Bits, LedgerError> {
        if entries.len() > self.capacity {
            return Err(LedgerError::Full);
        }
        let mut out = Vec::with_capacity(self.length());
        for (q, a) in entries {
            for part in [q, a] {
                if part.len() != self.width {
                    return Err(LedgerError::Length { expected: self.width, found: part.len() });
                }
            }
            out.push(true);
            out.extend_from_slice(&q.0);
            out.extend_from_slice(&a.0);
        }
        out.resize(self.length(), false);
        Ok(Bits(out))
    }

    pub fn decode(&self, l: &Bits) -> Result<Vec<(Bits, Bits)>, LedgerError> {
        if l.len() != self.length() {
            return Err(LedgerError::Length { expected: self.length(), found: l.len() });
        }
        if *l == self.full_marker() {
            return Err(LedgerError::Full);
        }
        let w = self.width;
        let mut entries = Vec::new();
        let mut ended = false;
        for (k, chunk) in l.0.chunks(self.slot()).enumerate() {
            if chunk[0] {
                if ended {
                    return Err(LedgerError::Malformed(k));
                }
                entries.push((Bits(chunk[1..=w].to_vec()), Bits(chunk[w + 1..].to_vec())));
            } else {
                if chunk.iter().any(|&b| b) {
                    return Err(LedgerError::Malformed(k));
                }
                ended = true;
            }
        }
        Ok(entries)
    }

    /// Stored answer for `query`; `None` for absent queries and for ledgers
    /// that do not decode.
    pub fn lookup(&self, l: &Bits, query: &Bits) -> Option<Bits> {
        let entries = self.decode(l).ok()?;
        entries.into_iter().find(|(q, _)| q == query).map(|(_, a)| a)
    }

    /// Records `query ↦ answer`, replacing an earlier answer for the same
    /// query. Overflow and undecodable input yield the overflow marker.
    pub fn insert(&self, l: &Bits, query: &Bits, answer: &Bits) -> Bits {
        let Ok(mut entries) = self.decode(l) else {
            return self.full_marker();
        };
        match entries.iter_mut().find(|(q, _)| q == query) {
            Some(slot) => slot.1 = answer.clone(),
            None => entries.push((query.clone(), answer.clone())),
        }
        self.encode(&entries).unwrap_or_else(|_| self.full_marker())
    }
}
