#![allow(clippy::result_large_err)]

use lbll::error::TypeError;
use lbll::poly::Polynomial;
use lbll::syntax::{parse_program, parse_term, parse_type, Ground, RefContext, Term, Type, VarContext};
use lbll::typing::{box_plus, check_comp, check_comp_against, check_program, check_value, scale, shift_type, Rule};

fn t(s: &str) -> Term {
    parse_term(s).unwrap()
}

fn ty(s: &str) -> Type {
    parse_type(s).unwrap()
}

fn comp(theta: &RefContext, s: &str) -> Result<Type, TypeError> {
    check_comp(&VarContext::new(), theta, &t(s)).map(|c| c.ty)
}

#[test]
fn value_examples() {
    let g = VarContext::new();
    let c = check_value(&g, &Term::True).unwrap();
    assert_eq!(c.ty, Type::bool());
    assert_eq!(c.derivation.rule, Rule::True);
    let c = check_value(&g, &t("\"01\"")).unwrap();
    assert_eq!(c.ty, Type::str(Polynomial::from(2)));
    assert_eq!(c.derivation.rule, Rule::String);
    let c = check_value(&g, &t("\\x : Str[i]. return x")).unwrap();
    assert_eq!(c.ty, ty("(Str[i] -> Str[i])"));
    assert_eq!(c.derivation.rule, Rule::Lam);
}

#[test]
fn computation_examples() {
    let none = RefContext::new();
    assert_eq!(comp(&none, "return tt").unwrap(), Type::bool());
    let r = RefContext::single("r", Ground::Bool);
    assert_eq!(comp(&r, "r := tt").unwrap(), Type::unit());
    assert_eq!(comp(&none, "random[i]()").unwrap(), ty("Str[i]"));
    assert_eq!(comp(&none, "let a = zeros[i]() in let b = ones[i]() in concat[i](a, b)").unwrap(), ty("Str[2*i]"));
}

#[test]
fn references_must_be_declared() {
    assert!(matches!(comp(&RefContext::new(), "get r"), Err(TypeError::UnboundRef(_))));
    let r = RefContext::single("r", Ground::Bool);
    assert!(matches!(comp(&r, "r := \"0\""), Err(TypeError::Mismatch { .. })));
}

#[test]
fn unbound_variable() {
    assert!(matches!(comp(&RefContext::new(), "return x"), Err(TypeError::Unbound(_))));
}

#[test]
fn ground_variables_are_duplicable() {
    let none = RefContext::new();
    assert_eq!(comp(&none, "let x = random[i]() in equal[i](x, x)").unwrap(), Type::bool());
}

#[test]
fn bang_grades_are_counted() {
    let none = RefContext::new();
    let two = "let f = return !{2} (return tt) in let a = der f in let b = der f in return (a, b)";
    assert!(comp(&none, two).is_ok());
    let three =
        "let f = return !{2} (return tt) in let a = der f in let b = der f in let c = der f in return (a, (b, c))";
    assert!(matches!(comp(&none, three), Err(TypeError::DemandExceeds { .. })));
}

#[test]
fn loop_scales_demand() {
    let none = RefContext::new();
    let ok = "let f = return !{i} (return tt) in loop[i](\\b : Bool. der f, return ff)";
    comp(&none, ok).unwrap();
    let bad = "let f = return !{i} (return tt) in loop[2*i](\\b : Bool. der f, return ff)";
    assert!(comp(&none, bad).is_err());
}

#[test]
fn arrows_are_linear() {
    let none = RefContext::new();
    let once = "let f = return \\x : Bool. return x in f tt";
    assert_eq!(comp(&none, once).unwrap(), Type::bool());
    let twice = "let f = return \\x : Bool. return x in let a = f tt in f a";
    assert!(matches!(comp(&none, twice), Err(TypeError::Undefined(..))));
}

#[test]
fn effects_are_inferred() {
    let theta = RefContext::single("r", Ground::Bool);
    let c = check_comp(&VarContext::new(), &theta, &t("return \\x : Bool. r := x")).unwrap();
    assert_eq!(c.ty, ty("(Bool -[r: Bool]> Unit)"));
    let c = check_comp(&VarContext::new(), &theta, &t("return tt")).unwrap();
    assert!(c.effects.is_empty());
}

#[test]
fn case_joins_branches() {
    let none = RefContext::new();
    let src = "let f = return !{2} (return tt) in let c = flipcoin[1]() in if c then let a = der f in der f else der f";
    assert_eq!(comp(&none, src).unwrap(), Type::bool());
    assert!(matches!(comp(&none, "if tt then return tt else return *"), Err(TypeError::Mismatch { .. })));
}

#[test]
fn checking_against_expected_types() {
    let theta = RefContext::single("r", Ground::Bool);
    let expected = ty("!{3; r: Bool}(Bool -[r: Bool]> Unit)");
    let c = check_comp_against(&VarContext::new(), &theta, &t("return !{3} (return \\x : Bool. r := x)"), &expected)
        .unwrap();
    assert_eq!(c.ty, expected);
}

#[test]
fn box_plus_laws() {
    let a = ty("!{2}Bool");
    let b = ty("!{i}Bool");
    let c = ty("!{1}Bool");
    assert_eq!(box_plus(&a, &b).unwrap(), box_plus(&b, &a).unwrap());
    assert_eq!(box_plus(&box_plus(&a, &b).unwrap(), &c).unwrap(), box_plus(&a, &box_plus(&b, &c).unwrap()).unwrap());
    let p = Polynomial::var();
    assert_eq!(
        scale(&p, &box_plus(&a, &b).unwrap()).unwrap(),
        box_plus(&scale(&p, &a).unwrap(), &scale(&p, &b).unwrap()).unwrap()
    );
}

#[test]
fn shift_preserves_typing() {
    let xi = RefContext::single("ledger", Ground::Str(Polynomial::var()));
    let src = "return !{2} (return \\x : Bool. return x)";
    let c = comp(&RefContext::new(), src).unwrap();
    let shifted_ty = shift_type(&c, &xi).unwrap();
    let shifted = lbll::syntax::shift_term(&t(src), &xi).unwrap();
    let c2 = check_comp_against(&VarContext::new(), &xi, &shifted, &shifted_ty).unwrap();
    assert_eq!(c2.ty, shifted_ty);
}

#[test]
fn programs_declare_references() {
    let p = parse_program("ref r : Bool;\nlet u = r := tt in get r").unwrap();
    let c = check_program(&p.refs, &p.term).unwrap();
    assert_eq!(c.ty, Type::bool());
    assert_eq!(c.effects, p.refs);
}

#[test]
fn derivation_json_has_rule_tree() {
    let c = check_comp(&VarContext::new(), &RefContext::new(), &t("return tt")).unwrap();
    let j = c.derivation.to_json();
    assert_eq!(j["rule"], "eta");
    assert_eq!(j["children"][0]["rule"], "true");
    assert_eq!(j["conclusion"]["type"], "Bool");
}
