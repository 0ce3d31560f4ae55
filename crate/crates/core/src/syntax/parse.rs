//! Recursive-descent parser for the concrete syntax.
//!
//! ```text
//! type  := atom ("*" type)?
//! atom  := "Unit" | "Bool" | "Str[" poly "]" | "!{" poly [";" refs] "}" atom
//!        | "(" type ")" | "(" type "->" type ")" | "(" type "-[" refs "]>" type ")"
//! comp  := "return" value | "der" value | value value
//!        | "let" x "=" comp "in" comp | "let" "(" x "," y ")" "=" value "in" comp
//!        | "if" value "then" comp "else" comp | "loop[" poly "](" value "," comp ")"
//!        | r ":=" value | "get" r | f "[" poly "](" values ")" | "(" comp ")"
//! value := x | "*" | "tt" | "ff" | "\"0101\"" | "(" value "," value ")" | "(" value ")"
//!        | "!{" poly "}" comp | "\" x ":" type "." comp
//! ```
//!
//! A source file is a list of `ref r : G;` declarations followed by one term.
//! `#` starts a comment running to the end of the line.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Bits, Ground, RefContext, Term, Type};
use crate::error::ParseError;
use crate::poly::Polynomial;

const KEYWORDS: &[&str] =
    &["return", "der", "let", "in", "if", "then", "else", "loop", "get", "tt", "ff", "ref", "Unit", "Bool", "Str"];

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(BigUint),
    Bits(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("`{n}`"),
            Tok::Bits(s) => format!("\"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: &[&str] =
    &[":=", "->", "-[", "]>", "(", ")", "[", "]", "{", "}", ",", ".", ":", ";", "=", "*", "+", "\\", "!"];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut k, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String| ParseError { line, col, expected: vec!["a token".to_string()], found };
    while k < chars.len() {
        let c = chars[k];
        if c == '\n' {
            k += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            k += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while k < chars.len() && chars[k] != '\n' {
                k += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_' || chars[k] == '\'') {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            col += k - start;
            out.push(Spanned { tok: Tok::Ident(s), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            col += k - start;
            let n: BigUint = s.parse().expect("digits");
            out.push(Spanned { tok: Tok::Num(n), line: start_line, col: start_col });
            continue;
        }
        if c == '"' {
            let start = k + 1;
            k += 1;
            while k < chars.len() && chars[k] != '"' {
                if chars[k] != '0' && chars[k] != '1' {
                    return Err(err(line, col + (k - start) + 1, format!("`{}` in string", chars[k])));
                }
                k += 1;
            }
            if k >= chars.len() {
                return Err(err(start_line, start_col, "unterminated string".to_string()));
            }
            let s: String = chars[start..k].iter().collect();
            k += 1;
            col += s.len() + 2;
            out.push(Spanned { tok: Tok::Bits(s), line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[k..chars.len().min(k + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                k += s.len();
                col += s.len();
                out.push(Spanned { tok: Tok::Sym(s), line: start_line, col: start_col });
            }
            None => return Err(err(line, col, format!("`{c}`"))),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// A parsed source file: declared references plus the term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub refs: RefContext,
    pub term: Term,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    furthest: usize,
    expected: BTreeSet<String>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0, furthest: 0, expected: BTreeSet::new() })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let k = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[k].tok
    }

    fn fail<T>(&mut self, what: &str) -> PResult<T> {
        if self.pos > self.furthest {
            self.furthest = self.pos;
            self.expected.clear();
        }
        if self.pos == self.furthest {
            self.expected.insert(what.to_string());
        }
        Err(())
    }

    fn error(&self) -> ParseError {
        let at = &self.toks[self.furthest];
        ParseError {
            line: at.line,
            col: at.col,
            expected: self.expected.iter().cloned().collect(),
            found: at.tok.describe(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn sym(&mut self, s: &'static str) -> PResult<()> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("`{s}`"))
        }
    }

    fn kw(&mut self, s: &'static str) -> PResult<()> {
        if self.is_kw(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("`{s}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail("identifier"),
        }
    }

    fn eof(&mut self) -> PResult<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.fail("end of input")
        }
    }

    // ---- polynomials ----

    fn poly(&mut self) -> PResult<Polynomial> {
        let mut acc = self.poly_product()?;
        while self.is_sym("+") {
            self.pos += 1;
            acc = acc.add(&self.poly_product()?);
        }
        Ok(acc)
    }

    fn poly_product(&mut self) -> PResult<Polynomial> {
        let mut acc = self.poly_factor()?;
        while self.is_sym("*") {
            self.pos += 1;
            acc = acc.mul(&self.poly_factor()?);
        }
        Ok(acc)
    }

    fn poly_factor(&mut self) -> PResult<Polynomial> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "i" => {
                self.pos += 1;
                Ok(Polynomial::var())
            }
            Tok::Num(n) if !n.is_zero() => {
                self.pos += 1;
                Ok(Polynomial::constant(n))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let p = self.poly()?;
                self.sym(")")?;
                Ok(p)
            }
            _ => self.fail("polynomial (`i`, a positive literal or `(`)"),
        }
    }

    // ---- types ----

    fn ground(&mut self) -> PResult<Ground> {
        match self.ty()? {
            Type::Ground(g) => Ok(g),
            _ => self.fail("ground type"),
        }
    }

    fn refs(&mut self, close: &'static str) -> PResult<RefContext> {
        let mut ctx = RefContext::new();
        if self.is_sym(close) {
            return Ok(ctx);
        }
        loop {
            let r = self.ident()?;
            self.sym(":")?;
            let g = self.ground()?;
            ctx.0.insert(r, g);
            if self.is_sym(",") {
                self.pos += 1;
            } else {
                return Ok(ctx);
            }
        }
    }

    fn ty(&mut self) -> PResult<Type> {
        let a = self.ty_atom()?;
        if self.is_sym("*") {
            self.pos += 1;
            let b = self.ty()?;
            return Ok(Type::tensor(a, b));
        }
        Ok(a)
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        if self.is_kw("Unit") {
            self.pos += 1;
            return Ok(Type::unit());
        }
        if self.is_kw("Bool") {
            self.pos += 1;
            return Ok(Type::bool());
        }
        if self.is_kw("Str") {
            self.pos += 1;
            self.sym("[")?;
            let p = self.poly()?;
            self.sym("]")?;
            return Ok(Type::str(p));
        }
        if self.is_sym("!") {
            self.pos += 1;
            self.sym("{")?;
            let p = self.poly()?;
            let th = if self.is_sym(";") {
                self.pos += 1;
                self.refs("}")?
            } else {
                RefContext::new()
            };
            self.sym("}")?;
            let a = self.ty_atom()?;
            return Ok(Type::bang(p, th, a));
        }
        if self.is_sym("(") {
            self.pos += 1;
            let a = self.ty()?;
            if self.is_sym("->") {
                self.pos += 1;
                let b = self.ty()?;
                self.sym(")")?;
                return Ok(Type::arrow(a, RefContext::new(), b));
            }
            if self.is_sym("-[") {
                self.pos += 1;
                let th = self.refs("]>")?;
                self.sym("]>")?;
                let b = self.ty()?;
                self.sym(")")?;
                return Ok(Type::arrow(a, th, b));
            }
            self.sym(")")?;
            return Ok(a);
        }
        self.fail("type")
    }

    // ---- terms ----

    fn starts_value(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => s == "tt" || s == "ff" || !KEYWORDS.contains(&s.as_str()),
            Tok::Bits(_) => true,
            Tok::Sym(s) => matches!(*s, "*" | "(" | "!" | "\\"),
            _ => false,
        }
    }

    fn value(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "tt" => {
                self.pos += 1;
                Ok(Term::True)
            }
            Tok::Ident(s) if s == "ff" => {
                self.pos += 1;
                Ok(Term::False)
            }
            Tok::Ident(_) => Ok(Term::Var(self.ident()?)),
            Tok::Bits(s) => {
                self.pos += 1;
                Ok(Term::Str(Bits::parse(&s).expect("lexer checked bits")))
            }
            Tok::Sym("*") => {
                self.pos += 1;
                Ok(Term::Star)
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let a = self.value()?;
                if self.is_sym(",") {
                    self.pos += 1;
                    let b = self.value()?;
                    self.sym(")")?;
                    return Ok(Term::pair(a, b));
                }
                self.sym(")")?;
                Ok(a)
            }
            Tok::Sym("!") => {
                self.pos += 1;
                self.sym("{")?;
                let p = self.poly()?;
                self.sym("}")?;
                let m = self.comp()?;
                Ok(Term::bang(p, m))
            }
            Tok::Sym("\\") => {
                self.pos += 1;
                let x = self.ident()?;
                self.sym(":")?;
                let ty = self.ty()?;
                self.sym(".")?;
                let m = self.comp()?;
                Ok(Term::lam(x, ty, m))
            }
            _ => self.fail("value"),
        }
    }

    fn application(&mut self) -> PResult<Term> {
        let v = self.value()?;
        if self.starts_value() {
            let z = self.value()?;
            return Ok(Term::app(v, z));
        }
        self.fail("argument")
    }

    fn comp(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "return" => {
                self.pos += 1;
                Ok(Term::ret(self.value()?))
            }
            Tok::Ident(s) if s == "der" => {
                self.pos += 1;
                Ok(Term::der(self.value()?))
            }
            Tok::Ident(s) if s == "get" => {
                self.pos += 1;
                Ok(Term::get(self.ident()?))
            }
            Tok::Ident(s) if s == "let" => {
                self.pos += 1;
                if self.is_sym("(") {
                    self.pos += 1;
                    let x = self.ident()?;
                    self.sym(",")?;
                    let y = self.ident()?;
                    self.sym(")")?;
                    self.sym("=")?;
                    let z = self.value()?;
                    self.kw("in")?;
                    let m = self.comp()?;
                    return Ok(Term::let_pair(x, y, z, m));
                }
                let x = self.ident()?;
                self.sym("=")?;
                let n = self.comp()?;
                self.kw("in")?;
                let m = self.comp()?;
                Ok(Term::let_(x, n, m))
            }
            Tok::Ident(s) if s == "if" => {
                self.pos += 1;
                let z = self.value()?;
                self.kw("then")?;
                let m = self.comp()?;
                self.kw("else")?;
                let n = self.comp()?;
                Ok(Term::if_(z, m, n))
            }
            Tok::Ident(s) if s == "loop" => {
                self.pos += 1;
                self.sym("[")?;
                let p = self.poly()?;
                self.sym("]")?;
                self.sym("(")?;
                let v = self.value()?;
                self.sym(",")?;
                let m = self.comp()?;
                self.sym(")")?;
                Ok(Term::loop_(p, v, m))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && self.peek_at(1) == &Tok::Sym(":=") => {
                self.pos += 2;
                Ok(Term::set(s, self.value()?))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && self.peek_at(1) == &Tok::Sym("[") => {
                self.pos += 2;
                let p = self.poly()?;
                self.sym("]")?;
                self.sym("(")?;
                let mut args = Vec::new();
                if !self.is_sym(")") {
                    loop {
                        args.push(self.value()?);
                        if self.is_sym(",") {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.sym(")")?;
                Ok(Term::call(s, p, args))
            }
            Tok::Sym("(") => {
                let save = self.pos;
                if let Ok(t) = self.application() {
                    return Ok(t);
                }
                self.pos = save + 1;
                let m = self.comp()?;
                self.sym(")")?;
                Ok(m)
            }
            _ => {
                if self.starts_value() {
                    self.application()
                } else {
                    self.fail("computation")
                }
            }
        }
    }

    fn term(&mut self) -> PResult<Term> {
        let save = self.pos;
        if let Ok(m) = self.comp() {
            if self.eof().is_ok() {
                return Ok(m);
            }
        }
        self.pos = save;
        let v = self.value()?;
        self.eof()?;
        Ok(v)
    }

    fn program(&mut self) -> PResult<Program> {
        let mut refs = RefContext::new();
        while self.is_kw("ref") {
            self.pos += 1;
            let r = self.ident()?;
            self.sym(":")?;
            let g = self.ground()?;
            self.sym(";")?;
            refs.0.insert(r, g);
        }
        let term = self.term()?;
        Ok(Program { refs, term })
    }
}

fn run<T>(src: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, ParseError> {
    let mut p = Parser::new(src)?;
    match f(&mut p) {
        Ok(t) => Ok(t),
        Err(()) => Err(p.error()),
    }
}

/// Parses a single term: a computation or a value.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    run(src, Parser::term)
}

/// Parses a source file: `ref` declarations followed by a term.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    run(src, Parser::program)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    run(src, |p| {
        let t = p.ty()?;
        p.eof()?;
        Ok(t)
    })
}

pub fn parse_poly(src: &str) -> Result<Polynomial, ParseError> {
    run(src, |p| {
        let q = p.poly()?;
        p.eof()?;
        Ok(q)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i() -> Polynomial {
        Polynomial::var()
    }

    #[test]
    fn parses_examples() {
        assert_eq!(parse_term("return tt").unwrap(), Term::ret(Term::True));
        let t = parse_term("let x = random[i]() in equal[i](x, x)").unwrap();
        let expect = Term::let_(
            "x",
            Term::call("random", i(), vec![]),
            Term::call("equal", i(), vec![Term::var("x"), Term::var("x")]),
        );
        assert_eq!(t, expect);
        let l = parse_term("\\x : Str[i]. return x").unwrap();
        assert_eq!(l, Term::lam("x", Type::str(i()), Term::ret(Term::var("x"))));
    }

    #[test]
    fn parses_natural_literal_grades() {
        assert_eq!(parse_poly("3").unwrap(), Polynomial::constant(3u32));
        assert_eq!(parse_poly("1+1+1").unwrap(), Polynomial::constant(3u32));
        assert_eq!(parse_poly("(i+1)*(i+1)").unwrap().to_string(), "i*i + 2*i + 1");
        assert!(parse_poly("0").is_err());
    }

    #[test]
    fn parses_types() {
        let t = parse_type("!{2*i; r: Bool}(Str[i] -[r: Bool]> Bool)").unwrap();
        assert_eq!(t.to_string(), "!{2*i; r: Bool}(Str[i] -[r: Bool]> Bool)");
        let t = parse_type("Bool * Unit * Str[i]").unwrap();
        assert_eq!(t, Type::tensor(Type::bool(), Type::tensor(Type::unit(), Type::str(i()))));
    }

    #[test]
    fn parses_application_and_grouping() {
        let t = parse_term("(\\x : Bool. return x) tt").unwrap();
        assert!(matches!(t, Term::App(..)));
        let t = parse_term("(return tt)").unwrap();
        assert_eq!(t, Term::ret(Term::True));
        let t = parse_term("let (a, b) = (tt, \"01\") in r := b").unwrap();
        assert!(matches!(t, Term::LetPair(..)));
    }

    #[test]
    fn parses_program_header() {
        let p = parse_program("# demo\nref r : Bool;\nref s : Str[i];\nr := tt").unwrap();
        assert_eq!(p.refs.0.len(), 2);
        assert_eq!(p.term, Term::set("r", Term::True));
    }

    #[test]
    fn reports_location() {
        let e = parse_term("let x = return tt\nin if x then").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.found.contains("end of input"), "{e}");
    }
}
