//! Worked terms: coin flips, the `randF`/`randXOR` equations, a toy
//! encryption scheme, a ledger-backed random function and the CPA
//! experiment wired into the distances of the security argument.

use std::ops::RangeInclusive;

use serde_json::{json, Value};

use crate::error::{MetricError, TypeError};
use crate::eval::registry::{ledger_length, signature, LEDGER_CAPACITIES};
use crate::eval::{bigstep, probe_stores, values};
use crate::harness::{rows, Options};
use crate::metric::{statistical_distance, trunc_add, MetricValue};
use crate::poly::Polynomial;
use crate::syntax::{parse_term, parse_type, shift_term, Ground, RefContext, Term, Type, VarContext};
use crate::typing::{check_comp_against, check_value_against, shift_type};

/// The reference holding the random function's table.
pub const LEDGER: &str = "ledger";

fn src(s: &str) -> Term {
    parse_term(s).unwrap_or_else(|e| panic!("built-in term does not parse: {e}\n{s}"))
}

fn ty(s: &str) -> Type {
    parse_type(s).unwrap_or_else(|e| panic!("built-in type does not parse: {e}\n{s}"))
}

fn str_i() -> Type {
    Type::str(Polynomial::var())
}

fn check_str(m: &Term) -> Result<(), TypeError> {
    check_comp_against(&VarContext::new(), &RefContext::new(), m, &str_i()).map(|_| ())
}

pub fn build_flipcoin() -> Term {
    src("flipcoin[1]()")
}

/// `(return ff, let y = M in let x = random in equal(x, y))`.
pub fn build_rand_f(m: &Term) -> Result<(Term, Term), TypeError> {
    check_str(m)?;
    let rhs = Term::let_("y", m.clone(), src("let x = random[i]() in equal[i](x, y)"));
    Ok((src("return ff"), rhs))
}

/// `(random, let y = M in let x = random in xor(x, y))`.
pub fn build_rand_xor(m: &Term) -> Result<(Term, Term), TypeError> {
    check_str(m)?;
    let rhs = Term::let_("y", m.clone(), src("let x = random[i]() in xor[i](x, y)"));
    Ok((src("random[i]()"), rhs))
}

/// Gen, Enc and Oracle of a scheme, with the references they need.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeInstance {
    pub gen: Term,
    pub enc: Term,
    pub oracle: Term,
    pub refs: RefContext,
}

pub fn gen_type() -> Type {
    ty("(Unit -> Str[i])")
}

impl SchemeInstance {
    pub fn enc_type(&self) -> Result<Type, TypeError> {
        shift_type(&ty("(Str[i] * Str[i] -> Str[2*i])"), &self.refs)
    }

    pub fn oracle_type(&self) -> Result<Type, TypeError> {
        let inner = shift_type(&ty("(Str[i] -> Str[2*i])"), &self.refs)?;
        Ok(Type::arrow(str_i(), RefContext::new(), inner))
    }

    /// Checks every component at its type.
    pub fn check(&self) -> Result<(), TypeError> {
        let g = VarContext::new();
        check_value_against(&g, &RefContext::new(), &self.gen, &gen_type())?;
        check_value_against(&g, &self.refs, &self.enc, &self.enc_type()?)?;
        check_value_against(&g, &self.refs, &self.oracle, &self.oracle_type()?)?;
        Ok(())
    }
}

const GEN: &str = "\\u : Unit. random[i]()";

/// `Π_F`: `Enc(k, m) = r ‖ (F(k, r) ⊕ m)` with `r` fresh.
pub fn build_scheme(f: &str) -> Result<SchemeInstance, TypeError> {
    let (params, result) = signature(f).ok_or_else(|| TypeError::UnknownSymbol(f.to_string()))?;
    let s = Ground::Str(Polynomial::var());
    if params != vec![s.clone(), s.clone()] || result != s {
        return Err(TypeError::Mismatch {
            term: f.to_string(),
            expected: Type::arrow(Type::tensor(str_i(), str_i()), RefContext::new(), str_i()),
            found: Type::arrow(
                params.iter().cloned().map(Type::Ground).reduce(Type::tensor).unwrap_or(Type::unit()),
                RefContext::new(),
                Type::Ground(result),
            ),
        });
    }
    let body = format!("let r = random[i]() in let y = {f}[i](k, r) in let c = xor[i](y, m) in concat[i](r, c)");
    let scheme = SchemeInstance {
        gen: src(GEN),
        enc: src(&format!("\\km : Str[i] * Str[i]. let (k, m) = km in {body}")),
        oracle: src(&format!("\\k : Str[i]. return \\m : Str[i]. {body}")),
        refs: RefContext::new(),
    };
    scheme.check()?;
    Ok(scheme)
}

pub fn ledger_context(capacity: usize) -> RefContext {
    RefContext::single(LEDGER, Ground::Str(ledger_length(capacity)))
}

/// Lazily sampled random function over the ledger: answers stored queries
/// from the table and records fresh uniform answers for new ones. Once the
/// table is full it keeps answering with fresh samples.
pub fn build_random_function(capacity: usize) -> Result<Term, TypeError> {
    if !LEDGER_CAPACITIES.contains(&capacity) {
        return Err(TypeError::UnknownSymbol(format!("ledger{capacity}_put")));
    }
    let q = capacity;
    Ok(src(&format!(
        "\\s : Str[i]. let l = get {LEDGER} in let h = ledger{q}_has[i](l, s) in \
         if h then ledger{q}_get[i](l, s) \
         else let a = random[i]() in let l2 = ledger{q}_put[i](l, s, a) in let u = {LEDGER} := l2 in return a"
    )))
}

pub fn random_function_type(capacity: usize) -> Type {
    Type::arrow(str_i(), ledger_context(capacity), str_i())
}

/// `Π_f`: as [`build_scheme`] with the keyed function replaced by the
/// random function; the key is ignored.
pub fn build_random_scheme(capacity: usize) -> Result<SchemeInstance, TypeError> {
    let rf = build_random_function(capacity)?;
    let body =
        |m: &str| format!("let r = random[i]() in let y = ({rf}) r in let c = xor[i](y, {m}) in concat[i](r, c)");
    let scheme = SchemeInstance {
        gen: src(GEN),
        enc: src(&format!("\\km : Str[i] * Str[i]. let (k, m) = km in {}", body("m"))),
        oracle: src(&format!("\\k : Str[i]. return \\m : Str[i]. {}", body("m"))),
        refs: ledger_context(capacity),
    };
    scheme.check()?;
    Ok(scheme)
}

/// A closed adversary
/// `!_q(Str[i] ⊸ Str[2i]) ⊸ Str[i] ⊗ Str[i] ⊗ !_1(Str[2i] ⊸ Bool)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adversary {
    pub name: String,
    pub q: u32,
    pub term: Term,
}

impl Adversary {
    pub fn new(name: &str, q: u32, term: Term) -> Result<Self, TypeError> {
        let adv = Adversary { name: name.to_string(), q, term };
        check_value_against(&VarContext::new(), &RefContext::new(), &adv.term, &adversary_type(q))?;
        Ok(adv)
    }

    pub fn shifted(&self, xi: &RefContext) -> Result<Term, TypeError> {
        shift_term(&self.term, xi)
    }
}

pub fn oracle_access_type(q: u32) -> Type {
    ty(&format!("!{{{q}}}(Str[i] -> Str[2*i])"))
}

pub fn adversary_type(q: u32) -> Type {
    let out = ty("Str[i] * Str[i] * !{1}(Str[2*i] -> Bool)");
    Type::arrow(oracle_access_type(q), RefContext::new(), out)
}

/// Fixed messages; the guesser ignores the challenge and answers `tt`.
pub fn trivial_adversary() -> Adversary {
    let t = src("\\o : !{1}(Str[i] -> Str[2*i]). let m0 = zeros[i]() in let m1 = ones[i]() in \
         return (m0, (m1, !{1} (return \\c : Str[2*i]. return tt)))");
    Adversary::new("trivial", 1, t).expect("trivial adversary is well typed")
}

/// Encrypts `m0` once. If the challenge reuses the same nonce it unmasks the
/// message with the recovered pad; otherwise it guesses at random.
pub fn one_query_adversary() -> Adversary {
    let t = src("\\o : !{1}(Str[i] -> Str[2*i]). let m0 = zeros[i]() in let m1 = ones[i]() in \
         let f = der o in let c0 = f m0 in \
         let r0 = fst_half[i](c0) in let s0 = snd_half[i](c0) in let pad = xor[i](s0, m0) in \
         return (m0, (m1, !{1} (return \\c : Str[2*i]. \
           let r = fst_half[i](c) in let s = snd_half[i](c) in let hit = equal[i](r, r0) in \
           if hit then let m = xor[i](s, pad) in equal[i](m, m1) else flipcoin[1]())))");
    Adversary::new("onequery", 1, t).expect("one-query adversary is well typed")
}

/// Never queries; guesses the first bit of the masked half of the challenge.
pub fn first_bit_adversary() -> Adversary {
    let t = src("\\o : !{1}(Str[i] -> Str[2*i]). let m0 = zeros[i]() in let m1 = ones[i]() in \
         return (m0, (m1, !{1} (return \\c : Str[2*i]. let s = snd_half[i](c) in firstbit[i](s))))");
    Adversary::new("firstbit", 1, t).expect("first-bit adversary is well typed")
}

pub fn adversaries() -> Vec<Adversary> {
    vec![trivial_adversary(), one_query_adversary(), first_bit_adversary()]
}

pub fn adversary_by_name(name: &str) -> Option<Adversary> {
    adversaries().into_iter().find(|a| a.name == name)
}

/// Prefixes `M` with an assignment of zeros to every string reference, so
/// the ledger starts empty.
fn with_fresh_refs(refs: &RefContext, m: Term) -> Term {
    let mut out = m;
    let refs: Vec<(&String, &Ground)> = refs.iter().collect();
    for (k, (r, g)) in refs.into_iter().enumerate().rev() {
        let Ground::Str(p) = g else { continue };
        let z = format!("z{k}");
        out = Term::let_(
            z.clone(),
            Term::call("zeros", p.clone(), vec![]),
            Term::let_(format!("u{k}"), Term::set(r.clone(), Term::var(z)), out),
        );
    }
    out
}

/// The experiment tail after the adversary has answered: flip `b`, encrypt
/// `m_b` with `encrypt`, run the guesser and compare.
fn experiment_tail(encrypt: Term) -> Term {
    let pick = src("if b then return m1 else return m0");
    let finish = src("let h = der g in let guess = h c in beq[1](guess, b)");
    Term::let_pair(
        "m0",
        "rest",
        Term::var("res"),
        Term::let_pair(
            "m1",
            "g",
            Term::var("rest"),
            Term::let_("b", build_flipcoin(), Term::let_("m", pick, Term::let_("c", encrypt, finish))),
        ),
    )
}

/// `PrivKCPA`: `k ← Gen; (m₀, m₁, g) ← Adv(!Oracle(k)); b ← flip;
/// c ← Enc(k, m_b); return g(c) == b`.
pub fn build_privk(scheme: &SchemeInstance, adv: &Adversary) -> Result<Term, TypeError> {
    let a = adv.shifted(&scheme.refs)?;
    let access = Term::bang(Polynomial::from(adv.q), Term::app(scheme.oracle.clone(), Term::var("k")));
    let encrypt = Term::app(scheme.enc.clone(), Term::pair(Term::var("k"), Term::var("m")));
    let body = Term::let_(
        "k",
        Term::app(scheme.gen.clone(), Term::Star),
        Term::let_("res", Term::app(a, access), experiment_tail(encrypt)),
    );
    let t = with_fresh_refs(&scheme.refs, body);
    check_comp_against(&VarContext::new(), &scheme.refs, &t, &Type::bool())?;
    Ok(t)
}

/// `D : !_{q+1}(Str[i] ⊸ Str[2i]) ⊸ Bool`, shifted by `xi`: plays the
/// experiment around the adversary, spending the extra oracle use on the
/// challenge.
pub fn build_distinguisher(adv: &Adversary, xi: &RefContext) -> Result<Term, TypeError> {
    let a = adv.shifted(xi)?;
    let access = shift_type(&oracle_access_type(adv.q + 1), xi)?;
    let encrypt = src("let e = der o in e m");
    let body = Term::let_("res", Term::app(a, Term::var("o")), experiment_tail(encrypt));
    let d = Term::lam("o", access.clone(), body);
    check_value_against(&VarContext::new(), xi, &d, &Type::arrow(access, xi.clone(), Type::bool()))?;
    Ok(d)
}

/// `D^X`: the distinguisher run against the scheme's oracle under a fresh key.
pub fn build_distinguisher_game(scheme: &SchemeInstance, adv: &Adversary) -> Result<Term, TypeError> {
    let d = build_distinguisher(adv, &scheme.refs)?;
    let access = Term::bang(Polynomial::from(adv.q + 1), Term::app(scheme.oracle.clone(), Term::var("k")));
    let body = Term::let_("k", Term::app(scheme.gen.clone(), Term::Star), Term::app(d, access));
    let t = with_fresh_refs(&scheme.refs, body);
    check_comp_against(&VarContext::new(), &scheme.refs, &t, &Type::bool())?;
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineRow {
    pub n: usize,
    /// `d(PrivKCPA^F, flipcoin)`
    pub keyed_vs_coin: MetricValue,
    /// `d(PrivKCPA^f, flipcoin)`
    pub random_vs_coin: MetricValue,
    /// `d(PrivKCPA^F, D^F)`
    pub keyed_vs_distinguisher: MetricValue,
    /// `d(PrivKCPA^f, D^f)`
    pub random_vs_distinguisher: MetricValue,
    /// `d(D^F, D^f)`
    pub distinguisher_gap: MetricValue,
    /// `d(PrivKCPA^F, flipcoin) ≤ d(PrivKCPA^F, D^F) ⊕ d(D^F, D^f) ⊕ d(D^f, PrivKCPA^f) ⊕ d(PrivKCPA^f, flipcoin)`
    pub triangle: bool,
}

impl PipelineRow {
    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "privk_F_vs_flipcoin": self.keyed_vs_coin.to_string(),
            "privk_f_vs_flipcoin": self.random_vs_coin.to_string(),
            "privk_F_vs_D_F": self.keyed_vs_distinguisher.to_string(),
            "privk_f_vs_D_f": self.random_vs_distinguisher.to_string(),
            "D_F_vs_D_f": self.distinguisher_gap.to_string(),
            "triangle": self.triangle,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineReport {
    pub function: String,
    pub adversary: String,
    pub q: u32,
    pub rows: Vec<PipelineRow>,
}

impl PipelineReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.triangle)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "function": self.function,
            "adversary": self.adversary,
            "q": self.q,
            "rows": self.rows.iter().map(PipelineRow::to_json).collect::<Vec<_>>(),
            "pass": self.pass(),
        })
    }
}

/// Every term of the security square for one adversary.
pub struct Square {
    pub privk_keyed: Term,
    pub privk_random: Term,
    pub game_keyed: Term,
    pub game_random: Term,
    pub refs: RefContext,
}

pub fn build_square(f: &str, adv: &Adversary) -> Result<Square, TypeError> {
    let keyed = build_scheme(f)?;
    let random = build_random_scheme(adv.q as usize + 1)?;
    Ok(Square {
        privk_keyed: build_privk(&keyed, adv)?,
        privk_random: build_privk(&random, adv)?,
        game_keyed: build_distinguisher_game(&keyed, adv)?,
        game_random: build_distinguisher_game(&random, adv)?,
        refs: random.refs.clone(),
    })
}

/// The distances of the security square under the marginal observation,
/// for each `n` in range.
pub fn run_pipeline(
    f: &str,
    adv: &Adversary,
    range: RangeInclusive<usize>,
    opts: Options,
) -> Result<PipelineReport, MetricError> {
    let sq = build_square(f, adv)?;
    let coin = build_flipcoin();
    let rows = rows(range, opts.jobs, |n| -> Result<PipelineRow, MetricError> {
        let games = [&sq.privk_keyed, &sq.privk_random, &sq.game_keyed, &sq.game_random, &coin];
        let mut sup =
            [MetricValue::zero(), MetricValue::zero(), MetricValue::zero(), MetricValue::zero(), MetricValue::zero()];
        for e in probe_stores(&games, &sq.refs, n, opts.store_cap, true)? {
            let out = games.iter().map(|g| Ok(values(&bigstep(g, &e, n)?))).collect::<Result<Vec<_>, MetricError>>()?;
            let pairs = [(0, 4), (1, 4), (0, 2), (1, 3), (2, 3)];
            for (slot, (a, b)) in sup.iter_mut().zip(pairs) {
                *slot = slot.clone().max(statistical_distance(&out[a], &out[b]));
            }
        }
        let [keyed_vs_coin, random_vs_coin, keyed_vs_distinguisher, random_vs_distinguisher, distinguisher_gap] = sup;
        let rhs = [&distinguisher_gap, &random_vs_distinguisher, &random_vs_coin]
            .into_iter()
            .fold(keyed_vs_distinguisher.clone(), |acc, x| trunc_add(&acc, x));
        Ok(PipelineRow {
            n,
            triangle: keyed_vs_coin <= rhs,
            keyed_vs_coin,
            random_vs_coin,
            keyed_vs_distinguisher,
            random_vs_distinguisher,
            distinguisher_gap,
        })
    });
    Ok(PipelineReport {
        function: f.to_string(),
        adversary: adv.name.clone(),
        q: adv.q,
        rows: rows.into_iter().map(|(_, r)| r).collect::<Result<_, _>>()?,
    })
}
