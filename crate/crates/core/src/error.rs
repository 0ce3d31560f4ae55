use thiserror::Error;

use crate::syntax::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("the zero polynomial is not a grade")]
    Zero,
    #[error("polynomials are only evaluated at n >= 1")]
    ZeroParameter,
    #[error("polynomial value does not fit in a machine word")]
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: syntax error: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("reference `{0}` is not declared")]
    UnboundRef(String),
    #[error("cannot merge `{0}` with `{1}`: the types are not box-plus compatible")]
    Undefined(Type, Type),
    #[error("type mismatch in `{term}`: expected `{expected}`, found `{found}`")]
    Mismatch { term: String, expected: Type, found: Type },
    #[error("`{0}` is not a positive type")]
    NotPositive(Type),
    #[error("`{term}` has type `{found}`, expected {what}")]
    Expected { term: String, what: &'static str, found: Type },
    #[error("string literals have constant length at least one")]
    EmptyString,
    #[error("unknown function symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("variable `{var}` is used at `{demand}` but declared `{declared}`")]
    DemandExceeds { var: String, declared: Type, demand: Type },
    #[error("reference `{0}` is used outside the allowed reference context")]
    EffectNotAllowed(String),
    #[error("reference `{name}` declared at `{declared}` but used at `{used}`")]
    RefTypeClash { name: String, declared: String, used: String },
    #[error("`{0}` is not a value")]
    NotValue(String),
    #[error("`{0}` is not a computation")]
    NotComputation(String),
    #[error("reference `{0}` already occurs in the type")]
    NameClash(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("ledger is full")]
    Full,
    #[error("ledger has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("ledger slot {0} is malformed")]
    Malformed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no reduction rule applies to `{0}`")]
    Stuck(String),
    #[error("unknown function symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("bad argument to `{name}`: {reason}")]
    BadArgument { name: String, reason: String },
    #[error("grade `{0}` still mentions the security parameter")]
    NotInstantiated(String),
    #[error("reference `{0}` is missing from the store")]
    MissingRef(String),
    #[error("evaluation exceeded {0} rounds")]
    IterationCap(usize),
    #[error("store space of size {size} exceeds the cap {cap}")]
    StoreSpaceExceeded { size: u128, cap: u128 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("values of `{0}` cannot be enumerated")]
    NotEnumerable(Type),
    #[error("store space of size {size} exceeds the cap {cap}")]
    StoreSpaceExceeded { size: u128, cap: u128 },
    #[error("cost matrix is {rows}x{cols}, distributions have supports {left} and {right}")]
    Dimension { rows: usize, cols: usize, left: usize, right: usize },
    #[error("`{0}` is not a value of the expected shape")]
    Shape(String),
    #[error("distributions have different total mass: {left} and {right}")]
    Unbalanced { left: String, right: String },
    #[error("metric value {0} outside [0, 1]")]
    OutOfRange(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("{steps} steps exceed the bound {bound} at n = {n} for `{term}`")]
    Violation { term: String, n: usize, steps: usize, bound: String },
    #[error("weight does not decrease at n = {n}: `{from}` ({before}) steps to `{to}` ({after})")]
    NoDecrease { n: usize, from: String, to: String, before: String, after: String },
    #[error("reduct `{term}` does not type-check: {source}")]
    SubjectReduction { term: String, source: TypeError },
    #[error("more than {0} configurations are reachable")]
    TooManyConfigs(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Type(#[from] TypeError),
}
