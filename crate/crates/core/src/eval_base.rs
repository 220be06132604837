//! Values, runtime errors, and the big-step evaluator.
//!
//! A [`Machine`] owns the heap, the core store and the effect trace of one
//! run. In [`Mode::Base`] it implements the unconstrained lazy semantics and
//! its call-by-name and eager variants; in [`Mode::Constrained`] close and
//! location evaluation are delegated to the constrained rules.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{
    map_compose, map_union, BinOp, Expr, Ident, LiteralOrigin, Loc, LocalConstraint,
    MapError, Name, Renaming, StructLit, Structure, Tying, UnOp,
};
use crate::constraints::{PureLazy, Strategy};
use crate::effects::{Store, Trace, WidgetHandle};
use crate::eval_constrained::ConstraintState;
use crate::heap::{Heap, HeapError, HeapObject, SentinelTag};

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Str(String),
    Unit,
    Bool(bool),
    List(Vec<Value>),
    /// `None` parameter is the unit pattern.
    Closure { param: Option<Ident>, body: Arc<Expr> },
    Ref(usize),
    Widget(WidgetHandle),
    Mixin(Arc<Structure>),
}

impl Value {
    /// Rendering used by `print`: a top-level string is shown without quotes.
    pub fn render_print(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            v => v.to_string(),
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::List(_) => "list",
            Value::Closure { .. } => "function",
            Value::Ref(_) => "ref",
            Value::Widget(_) => "widget",
            Value::Mixin(_) => "mixin",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Closure { .. } => f.write_str("<fun>"),
            Value::Ref(n) => write!(f, "<ref#{n}>"),
            Value::Widget(w) => write!(f, "<{w}>"),
            Value::Mixin(s) => {
                let names: Vec<String> = s.output_names().iter().map(|n| n.to_string()).collect();
                write!(f, "<mixin: {}>", names.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    CyclicDependency,
    ConstraintViolation,
    UnresolvedComponent,
    OpenMixinOperation,
    NameClash,
    CompositionUndefined,
    FreezeMismatch,
    UnknownProjection,
    CoreTypeError,
    StrategyRestriction,
    UnhousedAtom,
    StepBudgetExceeded,
    InvariantViolation,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}: {detail}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub detail: String,
}

impl RuntimeError {
    pub fn new(kind: ErrorKind, detail: impl Into<String>) -> RuntimeError {
        RuntimeError { kind, detail: detail.into() }
    }
}

impl From<HeapError> for RuntimeError {
    fn from(e: HeapError) -> RuntimeError {
        RuntimeError::new(ErrorKind::InvariantViolation, e.to_string())
    }
}

pub type EvalResult<T = Value> = Result<T, RuntimeError>;

fn type_error(detail: impl Into<String>) -> RuntimeError {
    RuntimeError::new(ErrorKind::CoreTypeError, detail)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Lazy,
    Cbn,
    Eager,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Base(Variant),
    Constrained,
}

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 40_000;

/// Counters inspected by property tests.
#[derive(Clone, Debug, Default)]
pub struct Stats {
    /// How many times each cell's expression was evaluated.
    pub cell_evals: HashMap<Loc, usize>,
    pub memo_hits: usize,
    /// Cells found holding a value while an edge still pointed into them.
    pub memo_edge_violations: usize,
    /// Cells found holding a value while still listed in a trigger set.
    pub exclusivity_violations: usize,
    pub closes: usize,
}

pub struct Machine {
    pub heap: Heap,
    pub store: Store,
    pub trace: Trace,
    pub stats: Stats,
    pub(crate) cx: ConstraintState,
    mode: Mode,
    steps: u64,
    budget: u64,
    depth: usize,
    max_depth: usize,
}

impl Machine {
    pub fn new(mode: Mode) -> Machine {
        Machine::with_strategy(mode, Arc::new(PureLazy))
    }

    pub fn with_strategy(mode: Mode, strategy: Arc<dyn Strategy>) -> Machine {
        Machine {
            heap: Heap::new(),
            store: Store::default(),
            trace: Trace::default(),
            stats: Stats::default(),
            cx: ConstraintState::new(strategy),
            mode,
            steps: 0,
            budget: DEFAULT_STEP_BUDGET,
            depth: 0,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_step_budget(&mut self, budget: u64) {
        self.budget = budget;
    }

    pub fn set_max_depth(&mut self, depth: usize) {
        self.max_depth = depth;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub(crate) fn enter(&mut self) -> EvalResult<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(RuntimeError::new(
                ErrorKind::StepBudgetExceeded,
                format!("more than {} evaluation steps", self.budget),
            ));
        }
        self.depth += 1;
        if self.depth > self.max_depth {
            self.depth -= 1;
            return Err(RuntimeError::new(
                ErrorKind::StepBudgetExceeded,
                format!("evaluation nested deeper than {}", self.max_depth),
            ));
        }
        Ok(())
    }

    pub(crate) fn leave(&mut self) {
        self.depth -= 1;
    }

    pub fn eval(&mut self, e: &Expr) -> EvalResult {
        self.enter()?;
        let r = self.eval_inner(e);
        self.leave();
        r
    }

    fn eval_inner(&mut self, e: &Expr) -> EvalResult {
        match e {
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Str(s) => Ok(Value::Str(s.clone())),
            Expr::Unit => Ok(Value::Unit),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Value(v) => Ok((**v).clone()),
            Expr::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(self.eval(item)?);
                }
                Ok(Value::List(out))
            }
            Expr::Unary(op, a) => match (op, self.eval(a)?) {
                (UnOp::Neg, Value::Int(n)) => {
                    n.checked_neg().map(Value::Int).ok_or_else(|| type_error("integer overflow"))
                }
                (UnOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
                (op, v) => Err(type_error(format!("{op:?} applied to {}", v.type_name()))),
            },
            Expr::Binary(op, a, b) => self.eval_binary(*op, a, b),
            Expr::If(c, t, f) => match self.eval(c)? {
                Value::Bool(true) => self.eval(t),
                Value::Bool(false) => self.eval(f),
                v => Err(type_error(format!("if condition is a {}", v.type_name()))),
            },
            Expr::Lambda(param, body) => {
                Ok(Value::Closure { param: param.clone(), body: body.clone() })
            }
            Expr::App(f, a) => {
                let f = self.eval(f)?;
                let a = self.eval(a)?;
                self.apply(f, a)
            }
            Expr::Let(x, a, b) => {
                let v = self.eval(a)?;
                self.eval(&subst_value(b, x, v))
            }
            Expr::Seq(a, b) => {
                self.eval(a)?;
                self.eval(b)
            }
            Expr::Builtin(b, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?);
                }
                self.apply_builtin(*b, vals)
            }
            Expr::Struct(lit) => self.eval_literal(lit),
            Expr::Sum(a, b) => {
                let s1 = self.eval_mixin(a, "sum")?;
                let s2 = self.eval_mixin(b, "sum")?;
                self.eval_sum(&s1, &s2).map(mixin)
            }
            Expr::Rename(phi1, m, phi2) => {
                let s = self.eval_mixin(m, "rename")?;
                eval_rename(phi1, &s, phi2).map(mixin)
            }
            Expr::Hide(x, m) => {
                let s = self.eval_mixin(m, "hide")?;
                Ok(mixin(eval_hide(x, &s)))
            }
            Expr::Freeze(psi, m) => {
                let s = self.eval_mixin(m, "freeze")?;
                eval_freeze(psi, &s).map(mixin)
            }
            Expr::Close(m) => {
                let s = self.eval_mixin(m, "close")?;
                self.eval_close(&s).map(mixin)
            }
            Expr::Project(m, x) => {
                let s = self.eval_mixin(m, "projection")?;
                self.eval_project(&s, x)
            }
            Expr::Loc(l) => self.eval_loc(*l),
            Expr::Var(x) => Err(RuntimeError::new(
                ErrorKind::UnresolvedComponent,
                format!("identifier {x} is not bound to a location"),
            )),
            Expr::NameRef(n) => Err(RuntimeError::new(
                ErrorKind::UnresolvedComponent,
                format!("name {n} is not resolved"),
            )),
            Expr::Unbound(s) => Err(RuntimeError::new(
                ErrorKind::UnresolvedComponent,
                format!("unbound identifier {s}"),
            )),
        }
    }

    fn eval_mixin(&mut self, e: &Expr, what: &str) -> EvalResult<Arc<Structure>> {
        match self.eval(e)? {
            Value::Mixin(s) => Ok(s),
            v => Err(type_error(format!("{what} expects a mixin, got a {}", v.type_name()))),
        }
    }

    fn eval_binary(&mut self, op: BinOp, a: &Expr, b: &Expr) -> EvalResult {
        if matches!(op, BinOp::And | BinOp::Or) {
            let short = op == BinOp::Or;
            return match self.eval(a)? {
                Value::Bool(x) if x == short => Ok(Value::Bool(x)),
                Value::Bool(_) => match self.eval(b)? {
                    Value::Bool(y) => Ok(Value::Bool(y)),
                    v => Err(type_error(format!("{} applied to {}", op.symbol(), v.type_name()))),
                },
                v => Err(type_error(format!("{} applied to {}", op.symbol(), v.type_name()))),
            };
        }
        let x = self.eval(a)?;
        let y = self.eval(b)?;
        binary(op, &x, &y)
    }

    pub fn apply(&mut self, f: Value, arg: Value) -> EvalResult {
        match f {
            Value::Closure { param: Some(x), body } => self.eval(&subst_value(&body, &x, arg)),
            Value::Closure { param: None, body } => match arg {
                Value::Unit => self.eval(&body),
                v => Err(type_error(format!("expected (), got a {}", v.type_name()))),
            },
            v => Err(type_error(format!("cannot apply a {}", v.type_name()))),
        }
    }

    fn eval_literal(&mut self, lit: &StructLit) -> EvalResult {
        let mut s = lit.structure.clone();
        if self.mode == Mode::Constrained {
            s.constraint = match lit.origin {
                LiteralOrigin::TopLevel => LocalConstraint::empty(),
                LiteralOrigin::User => {
                    let strategy = self.cx.strategy.clone();
                    strategy
                        .check_literal(lit)
                        .map_err(|d| RuntimeError::new(ErrorKind::StrategyRestriction, d))?;
                    strategy.annotate(lit)
                }
            };
        }
        Ok(mixin(s))
    }

    /// `⟨ι1 ∪ ι2; o1 ∪ o2; ρ1 ∪ ρ2⟩`, with the right operand α-renamed apart.
    pub fn eval_sum(&mut self, s1: &Structure, s2: &Structure) -> EvalResult<Structure> {
        let s2 = s2.alpha_refresh();
        let output = map_union(&s1.output, &s2.output).map_err(|_| {
            let clash: Vec<&str> = s1
                .output
                .keys()
                .filter(|n| s2.output.contains_key(n))
                .map(|n| n.as_str())
                .collect();
            RuntimeError::new(ErrorKind::NameClash, format!("both operands define {}", clash.join(", ")))
        })?;
        let invariant = |e: MapError| RuntimeError::new(ErrorKind::InvariantViolation, e.to_string());
        let input = map_union(&s1.input, &s2.input).map_err(invariant)?;
        let binding = map_union(&s1.binding, &s2.binding).map_err(invariant)?;
        let constraint = if self.mode == Mode::Constrained {
            let strategy = self.cx.strategy.clone();
            strategy
                .check_sum(s1, &s2)
                .map_err(|d| RuntimeError::new(ErrorKind::StrategyRestriction, d))?;
            strategy.nu(&s1.identifiers(), &s1.constraint, &s2.identifiers(), &s2.constraint)
        } else {
            s1.constraint.union(&s2.constraint)
        };
        Ok(Structure { input, output, binding, constraint })
    }

    pub fn eval_close(&mut self, s: &Structure) -> EvalResult<Structure> {
        check_no_holes(s)?;
        self.stats.closes += 1;
        match self.mode {
            Mode::Constrained => self.ceval_close(s),
            Mode::Base(Variant::Eager) => self.eval_close_eager(s),
            Mode::Base(_) => Ok(self.alloc_components(s).0),
        }
    }

    /// Allocates one cell per defined component; shared by the lazy and cbn variants.
    fn alloc_components(&mut self, s: &Structure) -> (Structure, Vec<Loc>) {
        let base = self.heap.next_loc().0;
        let locs: HashMap<Ident, Loc> =
            s.binding.keys().enumerate().map(|(i, x)| (x.clone(), Loc(base + i))).collect();
        let mut order = Vec::new();
        for body in s.binding.values() {
            order.push(self.heap.alloc(HeapObject::Expr(body.subst_locs(&locs))));
        }
        let binding = s.binding.keys().map(|x| (x.clone(), Expr::Loc(locs[x]))).collect();
        let closed = Structure {
            input: Default::default(),
            output: s.output.clone(),
            binding,
            constraint: LocalConstraint::empty(),
        };
        (closed, order)
    }

    /// Close, then force every component in binding order.
    pub fn eval_close_eager(&mut self, s: &Structure) -> EvalResult<Structure> {
        check_no_holes(s)?;
        let (closed, locs) = self.alloc_components(s);
        for l in locs {
            self.eval_loc(l)?;
        }
        Ok(closed)
    }

    pub fn eval_project(&mut self, s: &Structure, x: &Name) -> EvalResult {
        let Some(id) = s.output.get(x) else {
            return Err(RuntimeError::new(
                ErrorKind::UnknownProjection,
                format!("no component named {x} in {}", Value::Mixin(Arc::new(s.clone()))),
            ));
        };
        let Some(body) = s.binding.get(id) else {
            return Err(RuntimeError::new(
                ErrorKind::UnresolvedComponent,
                format!("component {x} is deferred"),
            ));
        };
        if body.has_unresolved() {
            return Err(RuntimeError::new(
                ErrorKind::UnresolvedComponent,
                format!("component {x} refers to components of an open mixin"),
            ));
        }
        let body = body.clone();
        self.eval(&body)
    }

    pub fn eval_loc(&mut self, l: Loc) -> EvalResult {
        self.enter()?;
        let r = match self.mode {
            Mode::Constrained => self.ceval_loc(l),
            Mode::Base(Variant::Cbn) => self.eval_loc_cbn(l),
            Mode::Base(_) => self.eval_loc_lazy(l),
        };
        self.leave();
        r
    }

    fn eval_loc_lazy(&mut self, l: Loc) -> EvalResult {
        match self.heap.get(l)? {
            HeapObject::Value(v) => Ok(v.clone()),
            HeapObject::Error(_) => Err(RuntimeError::new(
                ErrorKind::CyclicDependency,
                format!("{l} is needed to compute itself"),
            )),
            HeapObject::Expr(_) => {
                let HeapObject::Expr(e) = self.heap.blackhole(l, SentinelTag::Cycle)? else {
                    unreachable!()
                };
                *self.stats.cell_evals.entry(l).or_default() += 1;
                let v = self.eval(&e)?;
                self.heap.memoize(l, v.clone())?;
                Ok(v)
            }
        }
    }

    fn eval_loc_cbn(&mut self, l: Loc) -> EvalResult {
        match self.heap.get(l)? {
            HeapObject::Expr(e) => {
                let e = e.clone();
                *self.stats.cell_evals.entry(l).or_default() += 1;
                self.eval(&e)
            }
            HeapObject::Value(v) => Ok(v.clone()),
            HeapObject::Error(_) => Err(RuntimeError::new(
                ErrorKind::InvariantViolation,
                format!("{l} is blackholed under call-by-name"),
            )),
        }
    }
}

fn mixin(s: Structure) -> Value {
    Value::Mixin(Arc::new(s))
}

fn check_no_holes(s: &Structure) -> EvalResult<()> {
    if s.input.is_empty() {
        return Ok(());
    }
    let holes: BTreeSet<&str> = s.input.values().map(|n| n.as_str()).collect();
    Err(RuntimeError::new(
        ErrorKind::OpenMixinOperation,
        format!("cannot close a mixin with deferred components {}", holes.into_iter().collect::<Vec<_>>().join(", ")),
    ))
}

pub(crate) fn subst_value(body: &Expr, x: &Ident, v: Value) -> Expr {
    body.map_vars(&|y| (y == x).then(|| Expr::Value(Box::new(v.clone()))))
}

/// `⟨φ1 ∘ ι; o ∘ φ2; ρ⟩`.
pub fn eval_rename(phi1: &Renaming, s: &Structure, phi2: &Renaming) -> EvalResult<Structure> {
    let undefined = |what: &str, e: MapError| {
        let key = match e {
            MapError::CompositionUndefined(k) | MapError::DisjointnessViolation(k) => k,
        };
        RuntimeError::new(ErrorKind::CompositionUndefined, format!("{what} does not cover {key}"))
    };
    let input = map_compose(phi1, &s.input).map_err(|e| undefined("deferred renaming", e))?;
    let output = map_compose(&s.output, phi2).map_err(|e| undefined("output assignment", e))?;
    Ok(Structure { input, output, binding: s.binding.clone(), constraint: s.constraint.clone() })
}

pub fn eval_hide(x: &Name, s: &Structure) -> Structure {
    Structure { output: s.output.without(x), ..s.clone() }
}

/// Binds every deferred component whose name is tied by `psi`, replacing the
/// names in the tying with the identifiers they are output as.
pub fn eval_freeze(psi: &Tying, s: &Structure) -> EvalResult<Structure> {
    let mismatch = |d: String| RuntimeError::new(ErrorKind::FreezeMismatch, d);
    for n in psi.keys() {
        if !s.input.values().any(|m| m == n) {
            return Err(mismatch(format!("no deferred component named {n}")));
        }
    }
    let mut out = s.clone();
    for (x, n) in s.input.iter() {
        let Some(e) = psi.get(n) else { continue };
        let mut missing = None;
        let body = e.map_names(&|m| s.output.get(m).map(|y| Expr::Var(y.clone())));
        body.walk(&mut |node| {
            if let Expr::NameRef(m) = node {
                missing.get_or_insert_with(|| m.clone());
            }
        });
        if let Some(m) = missing {
            return Err(mismatch(format!("{m} in the tying for {n} is not an output of the mixin")));
        }
        out.input.remove(x);
        out.binding.insert(x.clone(), body);
    }
    Ok(out)
}

pub fn values_equal(a: &Value, b: &Value) -> EvalResult<bool> {
    Ok(match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Unit, Value::Unit) => true,
        (Value::Ref(x), Value::Ref(y)) => x == y,
        (Value::Widget(x), Value::Widget(y)) => x.id == y.id,
        (Value::List(xs), Value::List(ys)) => {
            if xs.len() != ys.len() {
                return Ok(false);
            }
            for (x, y) in xs.iter().zip(ys) {
                if !values_equal(x, y)? {
                    return Ok(false);
                }
            }
            true
        }
        _ => {
            return Err(type_error(format!(
                "cannot compare a {} with a {}",
                a.type_name(),
                b.type_name()
            )))
        }
    })
}

fn binary(op: BinOp, x: &Value, y: &Value) -> EvalResult {
    use BinOp::*;
    let overflow = || type_error("integer overflow");
    match (op, x, y) {
        (Eq, _, _) => values_equal(x, y).map(Value::Bool),
        (Ne, _, _) => values_equal(x, y).map(|b| Value::Bool(!b)),
        (Add, Value::Int(a), Value::Int(b)) => a.checked_add(*b).map(Value::Int).ok_or_else(overflow),
        (Sub, Value::Int(a), Value::Int(b)) => a.checked_sub(*b).map(Value::Int).ok_or_else(overflow),
        (Mul, Value::Int(a), Value::Int(b)) => a.checked_mul(*b).map(Value::Int).ok_or_else(overflow),
        (Div | Mod, Value::Int(_), Value::Int(0)) => Err(type_error("division by zero")),
        (Div, Value::Int(a), Value::Int(b)) => a.checked_div(*b).map(Value::Int).ok_or_else(overflow),
        (Mod, Value::Int(a), Value::Int(b)) => a.checked_rem(*b).map(Value::Int).ok_or_else(overflow),
        (Concat, Value::Str(a), Value::Str(b)) => Ok(Value::Str(format!("{a}{b}"))),
        (Lt | Gt | Le | Ge, Value::Int(a), Value::Int(b)) => Ok(Value::Bool(compare(op, a, b))),
        (Lt | Gt | Le | Ge, Value::Str(a), Value::Str(b)) => Ok(Value::Bool(compare(op, a, b))),
        _ => Err(type_error(format!(
            "{} applied to {} and {}",
            op.symbol(),
            x.type_name(),
            y.type_name()
        ))),
    }
}

fn compare<T: Ord>(op: BinOp, a: &T, b: &T) -> bool {
    match op {
        BinOp::Lt => a < b,
        BinOp::Gt => a > b,
        BinOp::Le => a <= b,
        _ => a >= b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Sort;
    use crate::parser::{desugar, parse, parse_expr};

    fn run(src: &str, mode: Mode) -> (EvalResult, Vec<String>) {
        let e = desugar(&parse(src).unwrap()).unwrap();
        let mut m = Machine::new(mode);
        let r = m.eval(&e);
        (r, m.trace.prints())
    }

    fn lazy(src: &str) -> EvalResult {
        run(src, Mode::Base(Variant::Lazy)).0
    }

    fn expr(src: &str) -> EvalResult {
        Machine::new(Mode::Base(Variant::Lazy)).eval(&parse_expr(src).unwrap())
    }

    fn structure(src: &str) -> Structure {
        match expr(src).unwrap() {
            Value::Mixin(s) => (*s).clone(),
            v => panic!("not a mixin: {v}"),
        }
    }

    #[test]
    fn literals_and_arithmetic() {
        assert!(matches!(lazy("let main = 42"), Ok(Value::Int(42))));
        assert!(matches!(expr("let x = 2 in x * (3 + 4) - 1"), Ok(Value::Int(13))));
        assert!(matches!(expr("7 mod 3 = 1 && not false"), Ok(Value::Bool(true))));
        assert_eq!(expr("1 / 0").unwrap_err().kind, ErrorKind::CoreTypeError);
        assert_eq!(expr("1 + true").unwrap_err().kind, ErrorKind::CoreTypeError);
        assert!(matches!(expr("false && 1 / 0 = 0"), Ok(Value::Bool(false))));
        assert!(matches!(expr(r#""a" ^ "b""#), Ok(Value::Str(s)) if s == "ab"));
    }

    #[test]
    fn functions() {
        assert!(matches!(expr("(fun x y -> x - y) 5 3"), Ok(Value::Int(2))));
        assert!(matches!(expr("(fun () -> 1) ()"), Ok(Value::Int(1))));
        assert_eq!(expr("(fun () -> 1) 2").unwrap_err().kind, ErrorKind::CoreTypeError);
        let fact = "let fact n = if n = 0 then 1 else n * fact (n - 1) let main = fact 10";
        assert!(matches!(lazy(fact), Ok(Value::Int(3628800))));
    }

    #[test]
    fn literal_evaluates_to_itself() {
        let mut m = Machine::new(Mode::Base(Variant::Lazy));
        let v = m.eval(&parse_expr("{ let x = 1 }").unwrap()).unwrap();
        assert!(matches!(v, Value::Mixin(_)));
        assert!(m.heap.is_empty());
        assert_eq!(v.to_string(), "<mixin: x>");
    }

    #[test]
    fn self_cycle() {
        let err = lazy("mixin M = close({ let c = c }) let main = M.c").unwrap_err();
        assert_eq!(err.kind, ErrorKind::CyclicDependency);
    }

    #[test]
    fn sum_with_empty_and_clash() {
        let s = structure("{ } <- { val a let b = a }");
        assert_eq!(s.input.len(), 1);
        assert_eq!(s.output_names(), vec![Name::new("b")]);
        let err = expr("{ let b = 1 } <- { let b = 2 }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::NameClash);
        // Deferred and defined components may share a name across operands.
        let s = structure("{ val b } <- { let b = 2 }");
        assert_eq!(s.input.len(), 1);
        assert_eq!(s.binding.len(), 1);
    }

    #[test]
    fn sum_with_itself() {
        let src = "mixin V = { let x = 1 } mixin H = hide[x](V) let main = (V <- V).x";
        assert_eq!(lazy(src).unwrap_err().kind, ErrorKind::NameClash);
        let src = "mixin V = { let x = 1 } mixin H = hide[x](V) let main = close(H <- H <- V).x";
        assert!(matches!(lazy(src), Ok(Value::Int(1))));
    }

    #[test]
    fn rename_directions() {
        let s = structure("rename[(other -> item2), (item1 -> item)]({ val other let item = other })");
        assert_eq!(s.input.values().next().unwrap().as_str(), "item2");
        assert_eq!(s.output_names(), vec![Name::new("item1")]);
        let err = expr("rename[(), ()]({ val a })").unwrap_err();
        assert_eq!(err.kind, ErrorKind::CompositionUndefined);
        let err = expr("rename[(), (y -> nope)]({ let a = 1 })").unwrap_err();
        assert_eq!(err.kind, ErrorKind::CompositionUndefined);
        // Identity mappings leave the structure alone.
        let s = structure("rename[(a -> a), (b -> b)]({ val a let b = a })");
        assert_eq!(s.input.len(), 1);
        assert_eq!(s.output_names(), vec![Name::new("b")]);
    }

    #[test]
    fn two_holes_renamed_together() {
        let src = "mixin M = freeze[h -> z](rename[(a -> h; b -> h), (z -> z; s -> s)]({ val a val b let z = 5 let s = a + b }))
                   let main = close(M).s";
        assert!(matches!(lazy(src), Ok(Value::Int(10))));
    }

    #[test]
    fn hide() {
        let s = structure("hide[nope]({ let x = 1 })");
        assert_eq!(s.output_names(), vec![Name::new("x")]);
        let err = lazy("let main = close(hide[x]({ let x = 1 })).x").unwrap_err();
        assert_eq!(err.kind, ErrorKind::UnknownProjection);
    }

    #[test]
    fn freeze() {
        let s = structure("freeze[items -> [i1; i2]]({ val items let i1 = 1 let i2 = 2 })");
        assert!(s.input.is_empty());
        assert_eq!(s.binding.len(), 3);
        let items = s.binding.values().find(|e| matches!(e, Expr::List(_))).unwrap();
        let Expr::List(elems) = items else { unreachable!() };
        assert!(elems.iter().all(|e| matches!(e, Expr::Var(x) if x.sort() == Sort::Core)));
        let s = structure("freeze[]({ let a = 1 })");
        assert_eq!(s.binding.len(), 1);
        let err = expr("freeze[b -> 1]({ val a })").unwrap_err();
        assert_eq!(err.kind, ErrorKind::FreezeMismatch);
        let err = expr("freeze[a -> nope]({ val a })").unwrap_err();
        assert_eq!(err.kind, ErrorKind::FreezeMismatch);
    }

    #[test]
    fn close_requires_no_holes() {
        let err = expr("close({ val a let b = 1 })").unwrap_err();
        assert_eq!(err.kind, ErrorKind::OpenMixinOperation);
        let mut m = Machine::new(Mode::Base(Variant::Lazy));
        let v = m.eval(&parse_expr("close({ })").unwrap()).unwrap();
        assert!(matches!(v, Value::Mixin(s) if s.binding.is_empty()));
        assert!(m.heap.is_empty());
    }

    #[test]
    fn projection_from_open_mixin() {
        let src = "mixin F = { let count = ref 0 let get () = !count } let main = F.get ()";
        assert_eq!(lazy(src).unwrap_err().kind, ErrorKind::UnresolvedComponent);
        assert!(matches!(lazy("let main = { let x = 1 }.x"), Ok(Value::Int(1))));
    }

    #[test]
    fn memoization_and_call_by_name() {
        let src = r#"mixin M = close({ let c = print "hi" }) let main = M.c; M.c"#;
        assert_eq!(run(src, Mode::Base(Variant::Lazy)).1, vec!["hi"]);
        assert_eq!(run(src, Mode::Base(Variant::Cbn)).1, vec!["hi", "hi"]);
    }

    #[test]
    fn eager_close() {
        let src = "mixin M = close({ let a = print 1 let b = print 2 }) let main = print 0; M.b";
        let (r, prints) = run(src, Mode::Base(Variant::Eager));
        assert!(matches!(r, Ok(Value::Int(2))));
        // M is a top-level component before main, so its close runs first.
        assert_eq!(prints, vec!["1", "2", "0"]);
        let src = "mixin M = close({ let a = b + 1 let b = 2 }) let main = M.a";
        assert!(matches!(run(src, Mode::Base(Variant::Eager)).0, Ok(Value::Int(3))));
        let (_, prints) = run("mixin M = close({ }) let main = 0", Mode::Base(Variant::Eager));
        assert!(prints.is_empty());
    }

    #[test]
    fn step_budget() {
        let mut m = Machine::new(Mode::Base(Variant::Lazy));
        m.set_step_budget(100);
        let e = desugar(&parse("let f n = f (n + 1) let main = f 0").unwrap()).unwrap();
        assert_eq!(m.eval(&e).unwrap_err().kind, ErrorKind::StepBudgetExceeded);
    }
}
