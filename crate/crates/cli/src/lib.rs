//! The `lbll` command line: type checking, exact evaluation, step-bound
//! certification, distance sweeps and the worked crypto demos.

#![allow(clippy::result_large_err)]

use std::fs;
use std::ops::RangeInclusive;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use lbll::bounds::{certify, certify_abstract, CertReport};
use lbll::crypto::{adversary_by_name, build_rand_f, build_rand_xor, run_pipeline};
use lbll::error::{BoundsError, EvalError, MetricError, TypeError};
use lbll::eval::{bigstep, default_store, values, Store};
use lbll::harness::{check_bound, rows, BoundSpec, Options, SweepRow, SweepTable};
use lbll::metric::{Metric, DEFAULT_STORE_CAP};
use lbll::syntax::{parse_program, parse_term, Ground, Program, RefContext, Term, Type};
use lbll::typing::{check_program, Checked};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Largest security parameter accepted on the command line.
pub const MAX_N: usize = 32;

#[derive(Parser, Debug)]
#[command(name = "lbll", version, about = "Type, run and compare bounded linear lambda terms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the type and reference context of a program.
    Check {
        file: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact output distribution at one security parameter.
    Eval {
        file: String,
        #[arg(long, default_value = "1")]
        n: NRange,
        /// JSON object giving initial reference values, e.g. {"r": "tt"}.
        #[arg(long)]
        store: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Certify the step bound of the typing derivation.
    Bound {
        file: String,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Bound the step count through the value-abstracted system.
        #[arg(long = "abstract")]
        abstracted: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Logical distance between two programs over a parameter range.
    Dist {
        left: String,
        right: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        bound: Option<BoundSpec>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Built-in examples.
    Demo {
        #[command(subcommand)]
        demo: Demo,
    },
}

#[derive(Subcommand, Debug)]
pub enum Demo {
    /// `return ff` against testing a fresh random string for equality.
    Randf {
        /// The string computation compared against.
        #[arg(long, default_value = "zeros[i]()")]
        m: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value = "1/2^n")]
        bound: BoundSpec,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// `random` against xoring a fresh random string into another.
    Randxor {
        #[arg(long, default_value = "ones[i]()")]
        m: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, default_value = "0")]
        bound: BoundSpec,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// The CPA experiment square for one adversary.
    Privk {
        #[arg(long, default_value = "trivial")]
        adv: String,
        /// Keyed function symbol of the scheme.
        #[arg(long, default_value = "prf")]
        f: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// A single parameter or a range `A..B`.
    #[arg(long)]
    pub n: Option<NRange>,
    #[arg(long, conflicts_with = "n")]
    pub range: Option<NRange>,
    /// Largest store space enumerated per distance.
    #[arg(long, env = "LBLL_CAP", default_value_t = DEFAULT_STORE_CAP)]
    pub cap: u128,
    /// Worker threads; 0 picks automatically.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl SweepArgs {
    fn range(&self, default: RangeInclusive<usize>) -> RangeInclusive<usize> {
        self.range.as_ref().or(self.n.as_ref()).map(|r| r.0.clone()).unwrap_or(default)
    }

    fn options(&self) -> Options {
        Options { store_cap: self.cap, jobs: self.jobs }
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct OutputArgs {
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl OutputArgs {
    pub fn format(&self) -> Format {
        match (self.json, self.csv) {
            (true, _) => Format::Json,
            (_, true) => Format::Csv,
            _ => Format::Text,
        }
    }
}

/// `N` or `A..B`, within `1..=MAX_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NRange(pub RangeInclusive<usize>);

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a natural number"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.trim_start_matches('='))?),
            None => {
                let n = num(s)?;
                (n, n)
            }
        };
        if a < 1 || b > MAX_N || a > b {
            return Err(format!("range {a}..{b} must lie within 1..{MAX_N} and be non-empty"));
        }
        Ok(NRange(a..=b))
    }
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: EXIT_OK, stdout, stderr: String::new() }
    }

    fn with_code(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }

    fn fail(code: i32, msg: impl Into<String>) -> Self {
        Outcome { code, stdout: String::new(), stderr: msg.into() }
    }
}

/// Failures mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
    Cap(String),
}

impl Failure {
    fn into_outcome(self) -> Outcome {
        match self {
            Failure::Usage(m) => Outcome::fail(EXIT_USAGE, m),
            Failure::Domain(m) => Outcome::fail(EXIT_FAIL, m),
            Failure::Cap(m) => Outcome::fail(EXIT_CAP, m),
        }
    }
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::StoreSpaceExceeded { .. } | EvalError::IterationCap(_) => Failure::Cap(e.to_string()),
        e => Failure::Domain(e.to_string()),
    }
}

fn metric_is_cap(e: &MetricError) -> bool {
    matches!(
        e,
        MetricError::StoreSpaceExceeded { .. }
            | MetricError::Eval(EvalError::StoreSpaceExceeded { .. } | EvalError::IterationCap(_))
    )
}

fn metric_failure(e: MetricError) -> Failure {
    if metric_is_cap(&e) {
        Failure::Cap(e.to_string())
    } else {
        Failure::Domain(e.to_string())
    }
}

fn bounds_failure(e: BoundsError) -> Failure {
    match e {
        BoundsError::TooManyConfigs(_) => Failure::Cap(e.to_string()),
        BoundsError::Eval(e) => eval_failure(e),
        e => Failure::Domain(e.to_string()),
    }
}

fn type_failure(path: &str, e: TypeError) -> Failure {
    Failure::Domain(format!("{path}: type error: {e}"))
}

fn load(path: &str) -> Result<Program, Failure> {
    let src = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    parse_program(&src).map_err(|e| Failure::Domain(format!("{path}:{e}")))
}

fn load_checked(path: &str) -> Result<(Program, Checked), Failure> {
    let p = load(path)?;
    if p.term.is_value() {
        return Err(Failure::Domain(format!("{path}: expected a computation, found the value `{}`", p.term)));
    }
    let c = check_program(&p.refs, &p.term).map_err(|e| type_failure(path, e))?;
    Ok((p, c))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK { Outcome::ok(text) } else { Outcome::fail(code, text) };
        }
    };
    execute(&cli.command).unwrap_or_else(Failure::into_outcome)
}

fn execute(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Check { file, out } => cmd_check(file, out.format()),
        Command::Eval { file, n, store, out } => {
            if n.0.start() != n.0.end() {
                return Err(Failure::Usage("eval takes a single --n".into()));
            }
            cmd_eval(file, *n.0.start(), store.as_deref(), out.format())
        }
        Command::Bound { file, sweep, abstracted, out } => cmd_bound(file, sweep, *abstracted, out.format()),
        Command::Dist { left, right, sweep, bound, out } => {
            let (l, lt) = load_checked(left)?;
            let (r, rt) = load_checked(right)?;
            let (lt, rt) = (lt.ty, rt.ty);
            if lt != rt {
                return Err(Failure::Domain(format!("{left} has type `{lt}` but {right} has type `{rt}`")));
            }
            let theta = l.refs.union(&r.refs).map_err(|e| type_failure(right, e))?;
            cmd_dist(&l.term, &r.term, &theta, &lt, sweep.range(1..=1), sweep.options(), bound.as_ref(), out.format())
        }
        Command::Demo { demo } => match demo {
            Demo::Randf { m, sweep, bound, out } => {
                let m = parse_term(m).map_err(|e| Failure::Usage(format!("--m: {e}")))?;
                let (l, r) = build_rand_f(&m).map_err(|e| type_failure("--m", e))?;
                let range = sweep.range(1..=8);
                cmd_dist(&l, &r, &RefContext::new(), &Type::bool(), range, sweep.options(), Some(bound), out.format())
            }
            Demo::Randxor { m, sweep, bound, out } => {
                let m = parse_term(m).map_err(|e| Failure::Usage(format!("--m: {e}")))?;
                let (l, r) = build_rand_xor(&m).map_err(|e| type_failure("--m", e))?;
                let s = Type::str(lbll::poly::Polynomial::var());
                let range = sweep.range(1..=6);
                cmd_dist(&l, &r, &RefContext::new(), &s, range, sweep.options(), Some(bound), out.format())
            }
            Demo::Privk { adv, f, sweep, out } => {
                let a = adversary_by_name(adv).ok_or_else(|| {
                    Failure::Usage(format!("unknown adversary `{adv}`; expected trivial, onequery or firstbit"))
                })?;
                let report = run_pipeline(f, &a, sweep.range(1..=2), sweep.options()).map_err(metric_failure)?;
                let code = if report.pass() { EXIT_OK } else { EXIT_FAIL };
                let text = match out.format() {
                    Format::Json => pretty(&report.to_json()),
                    _ => {
                        let mut s = format!("adversary {} (q = {}) against {f}\n", report.adversary, report.q);
                        for r in &report.rows {
                            s.push_str(&format!(
                                "n={} keyed~coin={} random~coin={} keyed~D={} random~D={} D gap={} triangle={}\n",
                                r.n,
                                r.keyed_vs_coin,
                                r.random_vs_coin,
                                r.keyed_vs_distinguisher,
                                r.random_vs_distinguisher,
                                r.distinguisher_gap,
                                if r.triangle { "pass" } else { "FAIL" }
                            ));
                        }
                        s
                    }
                };
                Ok(Outcome::with_code(code, text))
            }
        },
    }
}

fn refs_text(theta: &RefContext) -> String {
    format!("{{{theta}}}")
}

fn cmd_check(path: &str, fmt: Format) -> Result<Outcome, Failure> {
    let p = load(path)?;
    let c = check_program(&p.refs, &p.term).map_err(|e| type_failure(path, e))?;
    Ok(Outcome::ok(match fmt {
        Format::Json => pretty(&json!({
            "type": c.ty.to_string(),
            "refs": refs_json(&c.effects),
            "derivation": c.derivation.to_json(),
        })),
        _ => format!("{} under {}\n", c.ty, refs_text(&c.effects)),
    }))
}

fn refs_json(theta: &RefContext) -> Value {
    Value::Object(theta.iter().map(|(r, g)| (r.clone(), json!(g.to_string()))).collect())
}

/// Initial store from a JSON object of value literals, defaults elsewhere.
fn read_store(path: &str, theta: &RefContext, n: usize) -> Result<Store, Failure> {
    let mut store = default_store(theta, n).map_err(eval_failure)?;
    let src = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    let obj: Map<String, Value> =
        serde_json::from_str(&src).map_err(|e| Failure::Usage(format!("{path}: expected a JSON object: {e}")))?;
    for (r, v) in obj {
        let g = theta.get(&r).ok_or_else(|| Failure::Usage(format!("{path}: reference `{r}` is not declared")))?;
        let lit = v.as_str().ok_or_else(|| Failure::Usage(format!("{path}: `{r}` must map to a string")))?;
        let quoted = if lit.chars().all(|c| c == '0' || c == '1') && !lit.is_empty() {
            format!("\"{lit}\"")
        } else {
            lit.to_string()
        };
        let t = parse_term(&quoted).map_err(|e| Failure::Usage(format!("{path}: `{r}`: {e}")))?;
        let fits = match g {
            Ground::Unit => t == Term::Star,
            Ground::Bool => t.as_bool().is_some(),
            Ground::Str(p) => {
                let len = p.eval_usize(n).map_err(|e| Failure::Usage(e.to_string()))?;
                t.as_bits().map(|b| b.len()) == Some(len)
            }
        };
        if !fits {
            return Err(Failure::Usage(format!(
                "{path}: `{lit}` is not a value of `{}` at n = {n}",
                g.subst(&lbll::poly::Polynomial::constant(n as u64))
            )));
        }
        store.insert(r, t);
    }
    Ok(store)
}

fn store_json(e: &Store) -> Value {
    Value::Object(e.iter().map(|(r, v)| (r.clone(), json!(v.to_string()))).collect())
}

fn cmd_eval(path: &str, n: usize, store: Option<&str>, fmt: Format) -> Result<Outcome, Failure> {
    let (p, _) = load_checked(path)?;
    let e = match store {
        Some(f) => read_store(f, &p.refs, n)?,
        None => default_store(&p.refs, n).map_err(eval_failure)?,
    };
    let d = bigstep(&p.term, &e, n).map_err(eval_failure)?;
    let marginal = values(&d);
    Ok(Outcome::ok(match fmt {
        Format::Json => {
            let dist: Map<String, Value> =
                marginal.iter().map(|(v, w)| (v.to_string(), json!(w.to_string()))).collect();
            let support: Vec<Value> = d
                .iter()
                .map(|((v, st), w)| json!({"value": v.to_string(), "store": store_json(st), "prob": w.to_string()}))
                .collect();
            let out = json!({"n": n, "distribution": dist, "support": support});
            pretty(&out)
        }
        Format::Csv => {
            let mut s = String::from("value,probability\n");
            for (v, w) in marginal.iter() {
                s.push_str(&format!("\"{}\",{w}\n", v.to_string().replace('"', "\"\"")));
            }
            s
        }
        Format::Text => marginal.iter().map(|(v, w)| format!("{v}\t{w}\n")).collect(),
    }))
}

fn cmd_bound(path: &str, sweep: &SweepArgs, abstracted: bool, fmt: Format) -> Result<Outcome, Failure> {
    let (p, c) = load_checked(path)?;
    let d = &c.derivation;
    let results = rows(sweep.range(1..=1), sweep.jobs, |n| -> Result<CertReport, BoundsError> {
        let e = default_store(&p.refs, n)?;
        if abstracted {
            certify_abstract(&p.term, d, &p.refs, &e, n, 1 << 20)
        } else {
            certify(&p.term, d, &e, n)
        }
    });
    let mut reports = Vec::new();
    let mut violation = None;
    for (_, r) in results {
        match r {
            Ok(r) => reports.push(r),
            Err(BoundsError::Violation { term, n, steps, bound }) => {
                violation.get_or_insert(n);
                reports.push(CertReport {
                    term,
                    n,
                    steps,
                    bound: bound.parse().expect("bound"),
                    ok: false,
                    exact: !abstracted,
                });
            }
            Err(e) => return Err(bounds_failure(e)),
        }
    }
    let text = match fmt {
        Format::Json => pretty(&Value::Array(reports.iter().map(CertReport::to_json).collect())),
        Format::Csv => {
            let mut s = String::from("n,steps,bound,ok\n");
            for r in &reports {
                s.push_str(&format!("{},{},{},{}\n", r.n, r.steps, r.bound, r.ok));
            }
            s
        }
        Format::Text => reports
            .iter()
            .map(|r| {
                format!("n={} steps={} bound={} {}\n", r.n, r.steps, r.bound, if r.ok { "ok" } else { "VIOLATION" })
            })
            .collect(),
    };
    Ok(Outcome::with_code(if violation.is_some() { EXIT_FAIL } else { EXIT_OK }, text))
}

#[allow(clippy::too_many_arguments)]
fn cmd_dist(
    m: &Term,
    k: &Term,
    theta: &RefContext,
    a: &Type,
    range: RangeInclusive<usize>,
    opts: Options,
    bound: Option<&BoundSpec>,
    fmt: Format,
) -> Result<Outcome, Failure> {
    let results = rows(range, opts.jobs, |n| Metric::with_cap(n, opts.store_cap).dc(theta, a, m, k));
    let capped = results.iter().any(|(_, r)| r.as_ref().err().is_some_and(metric_is_cap));
    let table = SweepTable {
        rows: results.into_iter().map(|(n, r)| SweepRow { n, distance: r.map_err(|e| e.to_string()) }).collect(),
    };
    let verdict = bound.map(|b| (b, check_bound(&table, b)));
    let code = if capped {
        EXIT_CAP
    } else if table.errors().next().is_some() || verdict.as_ref().is_some_and(|(_, v)| !v.pass) {
        EXIT_FAIL
    } else {
        EXIT_OK
    };
    let text = match fmt {
        Format::Json => {
            let mut out = json!({"rows": table.to_json()});
            if let Some((b, v)) = &verdict {
                out["verdict"] = v.to_json(b);
            }
            pretty(&out)
        }
        Format::Csv => table.to_csv(),
        Format::Text => {
            let mut s = String::new();
            for r in &table.rows {
                match &r.distance {
                    Ok(d) => s.push_str(&format!("n={} distance={d}\n", r.n)),
                    Err(e) => s.push_str(&format!("n={} error: {e}\n", r.n)),
                }
            }
            if let Some((b, v)) = &verdict {
                match v.first_violation {
                    None => s.push_str(&format!("bound {b}: pass\n")),
                    Some(n) => s.push_str(&format!("bound {b}: fails first at n={n}\n")),
                }
            }
            s
        }
    };
    Ok(Outcome::with_code(code, text))
}
