use lbll::crypto::*;
use lbll::eval::registry::{prf, LedgerCodec};
use lbll::eval::{bigstep, default_store, pow2_inv, ratio, values, Dist, Rational, Store};
use lbll::harness::{kleene_equiv, marginal_distance, obs_distance, Options};
use lbll::syntax::{parse_term, Bits, RefContext, Term, Type, VarContext};
use lbll::typing::{check_comp_against, check_value_against};
use num_traits::{One, Zero};

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn bits(k: u64, n: usize) -> Bits {
    Bits::from_index(k, n)
}

fn success(d: &Dist<Term>) -> Rational {
    d.prob(&Term::True)
}

/// Success probability of the one-query adversary, summed over every draw.
fn one_query_oracle(n: usize, keyed: bool) -> Rational {
    let size = 1u64 << n;
    let m0 = Bits::zeros(n);
    let m1 = Bits::ones(n);
    let mut total = Rational::zero();
    let half = ratio(1, 2);
    let keys: Vec<u64> = if keyed { (0..size).collect() } else { vec![0] };
    for &k in &keys {
        let key = bits(k, n);
        for r0 in 0..size {
            let answers0: Vec<Bits> =
                if keyed { vec![prf(&key, &bits(r0, n))] } else { (0..size).map(|a| bits(a, n)).collect() };
            for a0 in &answers0 {
                let pad = a0.clone();
                for b in [false, true] {
                    let mb = if b { &m1 } else { &m0 };
                    for r in 0..size {
                        let fresh: Vec<Bits> = if keyed {
                            vec![prf(&key, &bits(r, n))]
                        } else if r == r0 {
                            vec![a0.clone()]
                        } else {
                            (0..size).map(|a| bits(a, n)).collect()
                        };
                        for a in &fresh {
                            let s = a.xor(mb);
                            let p_right = if r == r0 {
                                if (s.xor(&pad) == m1) == b {
                                    Rational::one()
                                } else {
                                    Rational::zero()
                                }
                            } else {
                                half.clone()
                            };
                            let w = Rational::one()
                                / Rational::from_integer(
                                    (keys.len() as u64 * size * answers0.len() as u64 * 2 * size * fresh.len() as u64)
                                        .into(),
                                );
                            total += w * p_right;
                        }
                    }
                }
            }
        }
    }
    total
}

#[test]
fn flipcoin_is_fair() {
    let coin = build_flipcoin();
    check_comp_against(&VarContext::new(), &RefContext::new(), &coin, &Type::bool()).unwrap();
    let d = values(&bigstep(&coin, &Store::new(), 1).unwrap());
    assert_eq!(d, Dist::uniform([Term::True, Term::False]));
    assert!(obs_distance(&coin, &coin, &RefContext::new(), 2, Options::default()).unwrap().is_zero());
}

#[test]
fn rand_f_collision_mass() {
    for m in [t("zeros[i]()"), t("random[i]()")] {
        let (lhs, rhs) = build_rand_f(&m).unwrap();
        for n in 1..=5 {
            let d = values(&bigstep(&rhs, &Store::new(), n).unwrap());
            assert_eq!(d.prob(&Term::True), pow2_inv(n));
            assert_eq!(
                obs_distance(&lhs, &rhs, &RefContext::new(), n, Options::default()).unwrap().value(),
                &pow2_inv(n)
            );
        }
    }
}

#[test]
fn rand_xor_is_uniform() {
    let (lhs, rhs) = build_rand_xor(&t("ones[i]()")).unwrap();
    let s = Type::str(lbll::poly::Polynomial::var());
    assert!(kleene_equiv(&lhs, &rhs, &RefContext::new(), &s, 1..=4, Options::default()).unwrap());
}

#[test]
fn scheme_components() {
    let scheme = build_scheme("prf").unwrap();
    let gen = Term::app(scheme.gen.clone(), Term::Star);
    let keys = values(&bigstep(&gen, &Store::new(), 2).unwrap());
    assert_eq!(keys, Dist::uniform((0..4).map(|k| Term::Str(bits(k, 2)))));
    // Decryption recovers every message at n = 1.
    for k in 0..2 {
        for m in 0..2 {
            let (key, msg) = (bits(k, 1), bits(m, 1));
            let enc = Term::app(scheme.enc.clone(), Term::pair(Term::Str(key.clone()), Term::Str(msg.clone())));
            for (c, _) in values(&bigstep(&enc, &Store::new(), 1).unwrap()).iter() {
                let c = c.as_bits().unwrap();
                assert_eq!(c.len(), 2);
                let (r, body) = (bits(c.to_index() >> 1, 1), bits(c.to_index() & 1, 1));
                assert_eq!(prf(&key, &r).xor(&body), msg);
            }
        }
    }
}

fn ledger_store(capacity: usize, n: usize) -> Store {
    default_store(&ledger_context(capacity), n).unwrap()
}

#[test]
fn random_function_is_consistent_and_uniform() {
    let rf = build_random_function(2).unwrap();
    let theta = ledger_context(2);
    check_value_against(&VarContext::new(), &theta, &rf, &random_function_type(2)).unwrap();
    let rf_src = rf.to_string();
    let twice = t(&format!("let a = ({rf_src}) \"0\" in let b = ({rf_src}) \"0\" in equal[i](a, b)"));
    let d = values(&bigstep(&twice, &ledger_store(2, 1), 1).unwrap());
    assert_eq!(d, Dist::dirac(Term::True));
    let pair = t(&format!("let a = ({rf_src}) \"0\" in let b = ({rf_src}) \"1\" in return (a, b)"));
    let d = values(&bigstep(&pair, &ledger_store(2, 1), 1).unwrap());
    let all = (0..2).flat_map(|a| (0..2).map(move |b| Term::pair(Term::Str(bits(a, 1)), Term::Str(bits(b, 1)))));
    assert_eq!(d, Dist::uniform(all));
    for n in 1..=2 {
        let once = Term::app(rf.clone(), Term::Str(Bits::zeros(n)));
        let d = values(&bigstep(&once, &ledger_store(2, n), n).unwrap());
        assert_eq!(d, Dist::uniform((0..1u64 << n).map(|a| Term::Str(bits(a, n)))));
    }
}

#[test]
fn ledger_records_queries() {
    let rf = build_random_function(2).unwrap();
    let once = Term::app(rf, Term::Str(bits(1, 2)));
    let out = bigstep(&once, &ledger_store(2, 2), 2).unwrap();
    let codec = LedgerCodec::new(2, 2);
    for ((v, e), _) in out.iter() {
        let table = codec.decode(e[LEDGER].as_bits().unwrap()).unwrap();
        assert_eq!(table, vec![(bits(1, 2), v.as_bits().unwrap().clone())]);
    }
}

#[test]
fn trivial_adversary_cannot_win() {
    let adv = trivial_adversary();
    let coin = build_flipcoin();
    let sq = build_square("prf", &adv).unwrap();
    for n in 1..=2 {
        for game in [&sq.privk_keyed, &sq.privk_random, &sq.game_keyed, &sq.game_random] {
            let d = values(&bigstep(game, &ledger_store(2, n), n).unwrap());
            assert_eq!(d, Dist::uniform([Term::True, Term::False]));
            assert!(marginal_distance(game, &coin, &sq.refs, n, Options::default()).unwrap().is_zero());
        }
    }
}

#[test]
fn one_query_adversary_matches_brute_force() {
    let adv = one_query_adversary();
    let sq = build_square("prf", &adv).unwrap();
    for n in 1..=2 {
        let e = ledger_store(2, n);
        let random = values(&bigstep(&sq.privk_random, &e, n).unwrap());
        assert_eq!(success(&random), one_query_oracle(n, false));
        let keyed = values(&bigstep(&sq.privk_keyed, &e, n).unwrap());
        assert_eq!(success(&keyed), one_query_oracle(n, true));
        let d = marginal_distance(&sq.privk_random, &build_flipcoin(), &sq.refs, n, Options::default()).unwrap();
        assert!(d.value() <= &pow2_inv(n));
    }
}

#[test]
fn distinguisher_games_replay_the_experiment() {
    for adv in adversaries() {
        let sq = build_square("prf", &adv).unwrap();
        let b = Type::bool();
        let opts = Options::default();
        assert!(kleene_equiv(&sq.privk_keyed, &sq.game_keyed, &sq.refs, &b, 1..=2, opts).unwrap());
        assert!(kleene_equiv(&sq.privk_random, &sq.game_random, &sq.refs, &b, 1..=2, opts).unwrap());
    }
}

#[test]
fn pipeline_rows() {
    for adv in adversaries() {
        let report = run_pipeline("prf", &adv, 1..=2, Options::default()).unwrap();
        assert!(report.pass(), "{}", report.to_json());
        for row in &report.rows {
            assert!(row.keyed_vs_distinguisher.is_zero());
            assert!(row.random_vs_distinguisher.is_zero());
        }
    }
}
