//! Surface syntax: `.lyre` programs are parsed into [`Program`]s and then
//! desugared into a single expression of the calculus.
//!
//! A program is a sequence of `mixin N = M` and `let x = e` bindings ending in
//! `let main = e`. Top-level binders, like the components of a structure
//! literal, may refer to each other in any order.

mod desugar;
mod lexer;
mod pretty;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{
    AtomMode, BinOp, Builtin, Expr, Ident, LiteralOrigin, Name, Sort, StructLit, Structure, Tying,
    UnOp,
};
use lexer::{Kw, Tok};

pub use desugar::{desugar, desugar_expr, DesugarError};
pub use pretty::{pretty_expr, pretty_program};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: duplicate {kind} component `{name}`")]
    DuplicateBinder { pos: Pos, name: String, kind: &'static str },
    #[error("unbound identifier `{0}`")]
    Unbound(String),
}

impl ParseError {
    fn syntax(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { pos, message: message.into() }
    }
}

/// A binder in a constraint annotation, optionally in internal or external mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentRef {
    pub mode: AtomMode,
    pub binder: String,
}

/// `order {(a, b), (b, ext a)} trigger {{a, b}}` as written after a literal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurfaceConstraintAnnotation {
    pub pairs: Vec<(ComponentRef, ComponentRef)>,
    pub triggers: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BindingKind {
    Let,
    Mixin,
}

#[derive(Clone, Debug)]
pub struct Binding {
    pub name: String,
    pub ident: Ident,
    pub kind: BindingKind,
    pub expr: Expr,
}

#[derive(Clone, Debug)]
pub struct Program {
    /// Top-level bindings in textual order; the last one is `main`.
    pub bindings: Vec<Binding>,
}

impl Program {
    pub fn main(&self) -> &Expr {
        &self.bindings.last().expect("a program has a main binding").expr
    }
}

pub fn parse(source: &str) -> Result<Program, ParseError> {
    let toks = lexer::tokenize(source)?;
    let mut p = Parser { toks, i: 0, scopes: Vec::new() };
    p.program()
}

/// Parses a single expression; free identifiers are reported as unbound.
pub fn parse_expr(source: &str) -> Result<Expr, ParseError> {
    let toks = lexer::tokenize(source)?;
    let mut p = Parser { toks, i: 0, scopes: Vec::new() };
    let e = p.expr()?;
    p.expect_eof()?;
    check_resolved(&e)?;
    Ok(e)
}

enum Scope {
    Var(String, Ident),
    Barrier,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    i: usize,
    scopes: Vec<Scope>,
}

struct Component {
    name: String,
    ident: Ident,
    pos: Pos,
    body: Option<Expr>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: Kw) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(ParseError::syntax(self.pos(), format!("expected {wanted}, found {:?}", self.peek())))
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.unexpected(&format!("`{s}`"))
        }
    }

    fn expect_kw(&mut self, k: Kw) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.unexpected(&format!("{k:?}"))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if s != "_" && s != "not" && Builtin::from_name(&s).is_none() => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("an identifier"),
        }
    }

    fn lookup(&self, name: &str) -> Option<Ident> {
        for scope in self.scopes.iter().rev() {
            match scope {
                Scope::Barrier => return None,
                Scope::Var(n, x) if n == name => return Some(x.clone()),
                Scope::Var(..) => {}
            }
        }
        None
    }

    fn program(&mut self) -> PResult<Program> {
        let mut bindings: Vec<Binding> = Vec::new();
        let mut seen: HashMap<String, Pos> = HashMap::new();
        while *self.peek() != Tok::Eof {
            let pos = self.pos();
            let kind = if self.eat_kw(Kw::Mixin) {
                BindingKind::Mixin
            } else if self.eat_kw(Kw::Let) {
                BindingKind::Let
            } else {
                return self.unexpected("`mixin` or `let`");
            };
            let name = self.ident()?;
            let expr = match kind {
                BindingKind::Mixin => {
                    self.expect_sym("=")?;
                    self.expr()?
                }
                BindingKind::Let => self.function_rhs()?,
            };
            if seen.insert(name.clone(), pos).is_some() {
                return Err(ParseError::DuplicateBinder { pos, name, kind: "top-level" });
            }
            let sort = if kind == BindingKind::Mixin || expr.is_mixin_form() {
                Sort::Mixin
            } else {
                Sort::Core
            };
            let ident = Ident::fresh(&name, sort);
            bindings.push(Binding { name, ident, kind, expr });
        }
        match bindings.last() {
            Some(b) if b.name == "main" => {}
            _ => {
                return Err(ParseError::syntax(self.pos(), "the last binding must be `let main = ...`"))
            }
        }
        let binders: HashMap<String, Ident> =
            bindings.iter().map(|b| (b.name.clone(), b.ident.clone())).collect();
        for b in &mut bindings {
            resolve_unbound(&mut b.expr, &|s| binders.get(s).map(|x| Expr::Var(x.clone())));
            check_resolved(&b.expr)?;
        }
        Ok(Program { bindings })
    }

    /// `x y ... = e` after the binder of a `let`; parameters become lambdas.
    fn function_rhs(&mut self) -> PResult<Expr> {
        let params = self.params()?;
        self.expect_sym("=")?;
        self.lambda_body(params, |p| p.expr())
    }

    fn params(&mut self) -> PResult<Vec<Option<(String, Ident)>>> {
        let mut params = Vec::new();
        loop {
            if self.is_sym("(") && *self.peek_at(1) == Tok::Sym(")") {
                self.advance();
                self.advance();
                params.push(None);
            } else if matches!(self.peek(), Tok::Ident(_)) {
                let name = self.ident()?;
                let x = Ident::fresh(&name, Sort::Core);
                params.push(Some((name, x)));
            } else {
                return Ok(params);
            }
        }
    }

    fn lambda_body(
        &mut self,
        params: Vec<Option<(String, Ident)>>,
        body: impl FnOnce(&mut Self) -> PResult<Expr>,
    ) -> PResult<Expr> {
        let depth = self.scopes.len();
        for (name, x) in params.iter().flatten() {
            self.scopes.push(Scope::Var(name.clone(), x.clone()));
        }
        let result = body(self);
        self.scopes.truncate(depth);
        let mut e = result?;
        for p in params.into_iter().rev() {
            e = Expr::Lambda(p.map(|(_, x)| x), Arc::new(e));
        }
        Ok(e)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let first = self.assign()?;
        if self.eat_sym(";") {
            let rest = self.expr()?;
            Ok(Expr::Seq(Box::new(first), Box::new(rest)))
        } else {
            Ok(first)
        }
    }

    fn assign(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        if self.eat_sym(":=") {
            let rhs = self.assign()?;
            Ok(Expr::Builtin(Builtin::Assign, vec![lhs, rhs]))
        } else {
            Ok(lhs)
        }
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.binary(0)?;
        while self.eat_sym("<-") {
            let rhs = self.binary(0)?;
            lhs = Expr::Sum(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn binop_at(&self, level: usize) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Sym(s) => match *s {
                "||" => BinOp::Or,
                "&&" => BinOp::And,
                "=" => BinOp::Eq,
                "<>" => BinOp::Ne,
                "<" => BinOp::Lt,
                ">" => BinOp::Gt,
                "<=" => BinOp::Le,
                ">=" => BinOp::Ge,
                "^" => BinOp::Concat,
                "+" => BinOp::Add,
                "-" => BinOp::Sub,
                "*" => BinOp::Mul,
                "/" => BinOp::Div,
                _ => return None,
            },
            Tok::Kw(Kw::Mod) => BinOp::Mod,
            _ => return None,
        };
        (level_of(op) == level).then_some(op)
    }

    /// Left-associative binary operators by precedence level; `^` associates right.
    fn binary(&mut self, level: usize) -> PResult<Expr> {
        if level == LEVELS {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = self.binop_at(level) {
            self.advance();
            let rhs = if op == BinOp::Concat { self.binary(level)? } else { self.binary(level + 1)? };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
            if op == BinOp::Concat {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        if matches!(self.peek(), Tok::Ident(s) if s == "not") {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.application()
    }

    fn starts_argument(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::Str(_) => true,
            Tok::Ident(s) => s != "_" && s != "not",
            Tok::Kw(k) => matches!(
                k,
                Kw::True | Kw::False | Kw::Close | Kw::Rename | Kw::Hide | Kw::Freeze
            ),
            Tok::Sym(s) => matches!(*s, "(" | "[" | "{" | "!"),
            Tok::Eof => false,
        }
    }

    fn application(&mut self) -> PResult<Expr> {
        let mut f = self.postfix()?;
        while self.starts_argument() {
            let arg = self.postfix()?;
            f = Expr::App(Box::new(f), Box::new(arg));
        }
        Ok(f)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.is_sym(".") {
            self.advance();
            let name = self.ident()?;
            e = Expr::Project(Box::new(e), Name::new(&name));
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Kw(Kw::True) => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::Kw(Kw::False) => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Sym("!") => {
                self.advance();
                let e = self.postfix()?;
                Ok(Expr::Builtin(Builtin::Deref, vec![e]))
            }
            Tok::Sym("(") => {
                self.advance();
                if self.eat_sym(")") {
                    return Ok(Expr::Unit);
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.advance();
                let mut items = Vec::new();
                while !self.is_sym("]") {
                    items.push(self.assign()?);
                    if !self.eat_sym(";") {
                        break;
                    }
                }
                self.expect_sym("]")?;
                Ok(Expr::List(items))
            }
            Tok::Sym("{") => self.struct_lit(),
            Tok::Ident(s) => {
                if let Some(b) = Builtin::from_name(&s) {
                    self.advance();
                    return self.builtin_call(b);
                }
                if s == "_" {
                    return Err(ParseError::syntax(pos, "`_` is not an expression"));
                }
                self.advance();
                Ok(match self.lookup(&s) {
                    Some(x) => Expr::Var(x),
                    None => Expr::Unbound(s),
                })
            }
            Tok::Kw(Kw::Fun) => {
                self.advance();
                let params = self.params()?;
                if params.is_empty() {
                    return self.unexpected("a parameter");
                }
                self.expect_sym("->")?;
                self.lambda_body(params, |p| p.expr())
            }
            Tok::Kw(Kw::If) => {
                self.advance();
                let c = self.expr()?;
                self.expect_kw(Kw::Then)?;
                let t = self.assign()?;
                self.expect_kw(Kw::Else)?;
                let e = self.assign()?;
                Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)))
            }
            Tok::Kw(Kw::Let) => {
                self.advance();
                let name = self.ident()?;
                let x = Ident::fresh(&name, Sort::Core);
                let rhs = self.function_rhs()?;
                self.expect_kw(Kw::In)?;
                self.scopes.push(Scope::Var(name, x.clone()));
                let body = self.expr();
                self.scopes.pop();
                Ok(Expr::Let(x, Box::new(rhs), Box::new(body?)))
            }
            Tok::Kw(Kw::Close) => {
                self.advance();
                let m = self.paren_expr()?;
                Ok(Expr::Close(Box::new(m)))
            }
            Tok::Kw(Kw::Hide) => {
                self.advance();
                self.expect_sym("[")?;
                let mut names = Vec::new();
                while !self.is_sym("]") {
                    names.push(Name::new(&self.ident()?));
                    if !self.eat_sym(";") && !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym("]")?;
                let mut m = self.paren_expr()?;
                for n in names {
                    m = Expr::Hide(n, Box::new(m));
                }
                Ok(m)
            }
            Tok::Kw(Kw::Rename) => {
                self.advance();
                self.expect_sym("[")?;
                let phi1 = self.renaming()?;
                self.expect_sym(",")?;
                let phi2 = self.renaming()?;
                self.expect_sym("]")?;
                let m = self.paren_expr()?;
                Ok(Expr::Rename(phi1, Box::new(m), phi2))
            }
            Tok::Kw(Kw::Freeze) => {
                self.advance();
                self.expect_sym("[")?;
                let mut psi = Tying::new();
                while !self.is_sym("]") {
                    let pos = self.pos();
                    let name = Name::new(&self.ident()?);
                    self.expect_sym("->")?;
                    self.scopes.push(Scope::Barrier);
                    let value = self.assign();
                    self.scopes.pop();
                    let mut value = value?;
                    resolve_unbound(&mut value, &|s| Some(Expr::NameRef(Name::new(s))));
                    if psi.insert(name.clone(), value).is_some() {
                        return Err(ParseError::syntax(pos, format!("`{name}` tied twice")));
                    }
                    if !self.eat_sym(";") {
                        break;
                    }
                }
                self.expect_sym("]")?;
                let m = self.paren_expr()?;
                Ok(Expr::Freeze(psi, Box::new(m)))
            }
            _ => self.unexpected("an expression"),
        }
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_sym("(")?;
        let e = self.expr()?;
        self.expect_sym(")")?;
        Ok(e)
    }

    fn renaming(&mut self) -> PResult<crate::ast::Renaming> {
        self.expect_sym("(")?;
        let mut phi = crate::ast::Renaming::new();
        while !self.is_sym(")") {
            let pos = self.pos();
            let from = Name::new(&self.ident()?);
            self.expect_sym("->")?;
            let to = Name::new(&self.ident()?);
            if phi.insert(from.clone(), to).is_some() {
                return Err(ParseError::syntax(pos, format!("`{from}` renamed twice")));
            }
            if !self.eat_sym(";") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(phi)
    }

    fn builtin_call(&mut self, b: Builtin) -> PResult<Expr> {
        if b.arity() == 1 {
            let arg = self.postfix()?;
            return Ok(Expr::Builtin(b, vec![arg]));
        }
        self.expect_sym("(")?;
        let first = self.assign()?;
        self.expect_sym(",")?;
        let second = self.assign()?;
        self.expect_sym(")")?;
        Ok(Expr::Builtin(b, vec![first, second]))
    }

    /// Skips a discarded type annotation up to the next component or `}`.
    fn skip_type(&mut self) -> PResult<()> {
        if !self.eat_sym(":") {
            return Ok(());
        }
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return self.unexpected("`}`"),
                Tok::Kw(Kw::Val | Kw::Let | Kw::Mixin) if depth == 0 => return Ok(()),
                Tok::Sym("}") if depth == 0 => return Ok(()),
                Tok::Sym("(" | "[" | "{") => depth += 1,
                Tok::Sym(")" | "]" | "}") => depth -= 1,
                _ => {}
            }
            self.advance();
        }
    }

    fn struct_lit(&mut self) -> PResult<Expr> {
        self.expect_sym("{")?;
        self.scopes.push(Scope::Barrier);
        let parsed = self.components();
        self.scopes.pop();
        let components = parsed?;
        self.expect_sym("}")?;
        let annotation = self.annotation()?;

        let mut structure = Structure::empty();
        let mut layout = Vec::new();
        let mut anonymous = Vec::new();
        let mut defined: HashMap<&str, Ident> = HashMap::new();
        let mut deferred: HashMap<&str, Ident> = HashMap::new();
        for c in &components {
            layout.push(c.ident.clone());
            let anon = c.name == "_";
            let table = if c.body.is_some() { &mut defined } else { &mut deferred };
            if !anon && table.insert(&c.name, c.ident.clone()).is_some() {
                return Err(ParseError::DuplicateBinder {
                    pos: c.pos,
                    name: c.name.clone(),
                    kind: if c.body.is_some() { "defined" } else { "deferred" },
                });
            }
        }
        let lookup = |s: &str| {
            defined
                .get(s)
                .or_else(|| deferred.get(s))
                .map(|x| Expr::Var(x.clone()))
                .or_else(|| self.lookup(s).map(Expr::Var))
        };
        for c in &components {
            match &c.body {
                Some(body) => {
                    let mut body = body.clone();
                    resolve_unbound(&mut body, &lookup);
                    structure.binding.insert(c.ident.clone(), body);
                    if c.name == "_" {
                        anonymous.push(c.ident.clone());
                    } else {
                        structure.output.insert(Name::new(&c.name), c.ident.clone());
                    }
                }
                None => {
                    structure.input.insert(c.ident.clone(), Name::new(&c.name));
                }
            }
        }
        Ok(Expr::Struct(Box::new(StructLit {
            structure,
            layout,
            anonymous,
            annotation,
            origin: LiteralOrigin::User,
        })))
    }

    fn components(&mut self) -> PResult<Vec<Component>> {
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Kw(Kw::Val) => {
                    self.advance();
                    let name = self.ident()?;
                    self.skip_type()?;
                    let ident = Ident::fresh(&name, Sort::Core);
                    out.push(Component { name, ident, pos, body: None });
                }
                Tok::Kw(Kw::Mixin) => {
                    self.advance();
                    let name = self.ident()?;
                    let ident = Ident::fresh(&name, Sort::Mixin);
                    let body = if self.eat_sym("=") {
                        Some(self.expr()?)
                    } else {
                        self.skip_type()?;
                        None
                    };
                    out.push(Component { name, ident, pos, body });
                }
                Tok::Kw(Kw::Let) => {
                    self.advance();
                    let name = if matches!(self.peek(), Tok::Ident(s) if s == "_") {
                        self.advance();
                        "_".to_string()
                    } else {
                        self.ident()?
                    };
                    let body = self.function_rhs()?;
                    let sort = if body.is_mixin_form() { Sort::Mixin } else { Sort::Core };
                    let ident = Ident::fresh(&name, sort);
                    out.push(Component { name, ident, pos, body: Some(body) });
                }
                Tok::Sym("}") => return Ok(out),
                _ => return self.unexpected("a component or `}`"),
            }
        }
    }

    fn component_ref(&mut self) -> PResult<ComponentRef> {
        let mode = match self.peek() {
            Tok::Ident(s) if (s == "int" || s == "ext") && matches!(self.peek_at(1), Tok::Ident(_)) => {
                let m = if s == "int" { AtomMode::Internal } else { AtomMode::External };
                self.advance();
                m
            }
            _ => AtomMode::Ordinary,
        };
        Ok(ComponentRef { mode, binder: self.ident()? })
    }

    fn annotation(&mut self) -> PResult<Option<SurfaceConstraintAnnotation>> {
        if !self.is_kw(Kw::Order) && !self.is_kw(Kw::Trigger) {
            return Ok(None);
        }
        let mut ann = SurfaceConstraintAnnotation::default();
        if self.eat_kw(Kw::Order) {
            self.expect_sym("{")?;
            while !self.is_sym("}") {
                self.expect_sym("(")?;
                let a = self.component_ref()?;
                self.expect_sym(",")?;
                let b = self.component_ref()?;
                self.expect_sym(")")?;
                ann.pairs.push((a, b));
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
        }
        if self.eat_kw(Kw::Trigger) {
            self.expect_sym("{")?;
            while !self.is_sym("}") {
                self.expect_sym("{")?;
                let mut set = Vec::new();
                while !self.is_sym("}") {
                    set.push(self.ident()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym("}")?;
                ann.triggers.push(set);
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym("}")?;
        }
        Ok(Some(ann))
    }
}

const LEVELS: usize = 6;

fn level_of(op: BinOp) -> usize {
    match op {
        BinOp::Or => 0,
        BinOp::And => 1,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 2,
        BinOp::Concat => 3,
        BinOp::Add | BinOp::Sub => 4,
        BinOp::Mul | BinOp::Div | BinOp::Mod => 5,
    }
}

fn resolve_unbound(e: &mut Expr, lookup: &dyn Fn(&str) -> Option<Expr>) {
    e.walk_mut(&mut |node| {
        if let Expr::Unbound(s) = node {
            if let Some(r) = lookup(s) {
                *node = r;
            }
        }
    });
}

fn check_resolved(e: &Expr) -> PResult<()> {
    let mut missing = None;
    e.walk(&mut |node| {
        if let Expr::Unbound(s) = node {
            missing.get_or_insert_with(|| s.clone());
        }
    });
    match missing {
        Some(s) => Err(ParseError::Unbound(s)),
        None => Ok(()),
    }
}
