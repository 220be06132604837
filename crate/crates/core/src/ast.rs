//! Identifiers, names, locations, the expression tree and mixin structures.
//!
//! Components of a mixin are referred to internally by [`Ident`]s, which carry
//! a globally unique id and can be freshened at will, and externally by
//! [`Name`]s, which are never renamed. A [`Structure`] is the quadruple of
//! input assignment, output assignment, local binding and local constraint
//! shared by structure literals and structure values.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::eval_base::Value;
use crate::parser::SurfaceConstraintAnnotation;

static NEXT_UID: AtomicU64 = AtomicU64::new(0);

/// Whether an identifier is bound to a core expression or to a mixin expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Core,
    Mixin,
}

/// An alpha-convertible identifier. Equality, hashing and ordering use the uid only.
#[derive(Clone, Debug)]
pub struct Ident {
    base: Arc<str>,
    uid: u64,
    sort: Sort,
}

impl Ident {
    pub fn fresh(base: &str, sort: Sort) -> Ident {
        Ident {
            base: Arc::from(base),
            uid: NEXT_UID.fetch_add(1, Ordering::Relaxed),
            sort,
        }
    }

    /// A new identifier with the same base and sort.
    pub fn refresh(&self) -> Ident {
        Ident {
            base: self.base.clone(),
            uid: NEXT_UID.fetch_add(1, Ordering::Relaxed),
            sort: self.sort,
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn uid(&self) -> u64 {
        self.uid
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn is_core(&self) -> bool {
        self.sort == Sort::Core
    }
}

pub fn fresh_ident(base: &str, sort: Sort) -> Ident {
    Ident::fresh(base, sort)
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.uid == other.uid
    }
}

impl Eq for Ident {}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.uid.hash(state)
    }
}

impl PartialOrd for Ident {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ident {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.uid.cmp(&other.uid)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)
    }
}

/// Prefix of names introduced for anonymous components. It cannot be lexed.
pub const HIDDEN_PREFIX: &str = "%anon";

/// An external component name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(text: &str) -> Name {
        debug_assert!(!text.is_empty(), "names are non-empty");
        Name(Arc::from(text))
    }

    pub fn hidden(n: u64) -> Name {
        Name(Arc::from(format!("{HIDDEN_PREFIX}{n}")))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_hidden(&self) -> bool {
        self.0.starts_with(HIDDEN_PREFIX)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A heap location. Indices are handed out in allocation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Loc(pub usize);

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("domains overlap at {0}")]
    DisjointnessViolation(String),
    #[error("{0} is not in the domain of the outer mapping")]
    CompositionUndefined(String),
}

/// A finite mapping that remembers insertion order.
#[derive(Clone, Debug)]
pub struct FiniteMap<K: Hash + Eq, V>(IndexMap<K, V>);

impl<K: Hash + Eq, V> Default for FiniteMap<K, V> {
    fn default() -> Self {
        FiniteMap(IndexMap::new())
    }
}

impl<K: Hash + Eq, V: PartialEq> PartialEq for FiniteMap<K, V> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<K: Hash + Eq + Clone + fmt::Debug, V: Clone> FiniteMap<K, V> {
    pub fn new() -> Self {
        FiniteMap(IndexMap::new())
    }

    /// Returns the previous value if `key` was already mapped.
    pub fn insert(&mut self, key: K, value: V) -> Option<V> {
        self.0.insert(key, value)
    }

    pub fn get(&self, key: &K) -> Option<&V> {
        self.0.get(key)
    }

    pub fn get_mut(&mut self, key: &K) -> Option<&mut V> {
        self.0.get_mut(key)
    }

    pub fn contains_key(&self, key: &K) -> bool {
        self.0.contains_key(key)
    }

    pub fn remove(&mut self, key: &K) -> Option<V> {
        self.0.shift_remove(key)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = &V> {
        self.0.values()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut V> {
        self.0.values_mut()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.0.iter()
    }

    /// Restriction of the mapping to `dom \ {key}`.
    pub fn without(&self, key: &K) -> Self {
        let mut out = self.clone();
        out.remove(key);
        out
    }
}

impl<K: Hash + Eq, V> FromIterator<(K, V)> for FiniteMap<K, V> {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        FiniteMap(iter.into_iter().collect())
    }
}

/// Union of two mappings with disjoint domains.
pub fn map_union<K, V>(f: &FiniteMap<K, V>, g: &FiniteMap<K, V>) -> Result<FiniteMap<K, V>, MapError>
where
    K: Hash + Eq + Clone + fmt::Debug,
    V: Clone,
{
    let mut out = f.clone();
    for (k, v) in g.iter() {
        if out.insert(k.clone(), v.clone()).is_some() {
            return Err(MapError::DisjointnessViolation(format!("{k:?}")));
        }
    }
    Ok(out)
}

/// `outer ∘ inner`, defined only when `range(inner) ⊆ dom(outer)`.
pub fn map_compose<A, B, C>(
    outer: &FiniteMap<B, C>,
    inner: &FiniteMap<A, B>,
) -> Result<FiniteMap<A, C>, MapError>
where
    A: Hash + Eq + Clone + fmt::Debug,
    B: Hash + Eq + Clone + fmt::Debug,
    C: Clone,
{
    inner
        .iter()
        .map(|(a, b)| match outer.get(b) {
            Some(c) => Ok((a.clone(), c.clone())),
            None => Err(MapError::CompositionUndefined(format!("{b:?}"))),
        })
        .collect()
}

pub type InputAssignment = FiniteMap<Ident, Name>;
pub type OutputAssignment = FiniteMap<Name, Ident>;
pub type LocalBinding = FiniteMap<Ident, Expr>;
pub type Renaming = FiniteMap<Name, Name>;
pub type Tying = FiniteMap<Name, Expr>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomMode {
    Ordinary,
    Internal,
    External,
}

/// An identifier in one of its three constraint roles.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub ident: Ident,
    pub mode: AtomMode,
}

impl Atom {
    pub fn ordinary(ident: &Ident) -> Atom {
        Atom { ident: ident.clone(), mode: AtomMode::Ordinary }
    }

    pub fn internal(ident: &Ident) -> Atom {
        Atom { ident: ident.clone(), mode: AtomMode::Internal }
    }

    pub fn external(ident: &Ident) -> Atom {
        Atom { ident: ident.clone(), mode: AtomMode::External }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            AtomMode::Ordinary => write!(f, "{}", self.ident),
            AtomMode::Internal => write!(f, "int {}", self.ident),
            AtomMode::External => write!(f, "ext {}", self.ident),
        }
    }
}

/// Ordering relation over atoms plus trigger sets over ordinary identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocalConstraint {
    pub theta: BTreeSet<(Atom, Atom)>,
    pub delta: BTreeSet<BTreeSet<Ident>>,
}

impl LocalConstraint {
    pub fn empty() -> LocalConstraint {
        LocalConstraint::default()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty() && self.delta.is_empty()
    }

    pub fn union(&self, other: &LocalConstraint) -> LocalConstraint {
        LocalConstraint {
            theta: self.theta.union(&other.theta).cloned().collect(),
            delta: self.delta.union(&other.delta).cloned().collect(),
        }
    }

    /// Every identifier mentioned by an atom or a trigger set.
    pub fn idents(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        for (a, b) in &self.theta {
            out.insert(a.ident.clone());
            out.insert(b.ident.clone());
        }
        for set in &self.delta {
            out.extend(set.iter().cloned());
        }
        out
    }

    pub fn rename(&self, map: &HashMap<Ident, Ident>) -> LocalConstraint {
        let re = |x: &Ident| map.get(x).cloned().unwrap_or_else(|| x.clone());
        let re_atom = |a: &Atom| Atom { ident: re(&a.ident), mode: a.mode };
        LocalConstraint {
            theta: self.theta.iter().map(|(a, b)| (re_atom(a), re_atom(b))).collect(),
            delta: self.delta.iter().map(|s| s.iter().map(re).collect()).collect(),
        }
    }
}

/// `⟨ι; o; ρ; π⟩`, used both for structure literals and structure values.
#[derive(Clone, Debug, Default)]
pub struct Structure {
    pub input: InputAssignment,
    pub output: OutputAssignment,
    pub binding: LocalBinding,
    pub constraint: LocalConstraint,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedError {
    #[error("identifier {0} is both deferred and defined")]
    DeferredAndDefined(String),
    #[error("output name {0} maps outside the structure")]
    DanglingOutput(String),
    #[error("the body of {0} mentions a name")]
    NameInBody(String),
    #[error("constraint mentions foreign identifier {0}")]
    ForeignAtom(String),
}

impl Structure {
    pub fn empty() -> Structure {
        Structure::default()
    }

    /// `dom(ι) ∪ dom(ρ)`.
    pub fn identifiers(&self) -> BTreeSet<Ident> {
        self.input.keys().chain(self.binding.keys()).cloned().collect()
    }

    pub fn defined(&self) -> BTreeSet<Ident> {
        self.binding.keys().cloned().collect()
    }

    pub fn output_names(&self) -> Vec<Name> {
        let mut names: Vec<Name> = self.output.keys().cloned().collect();
        names.sort();
        names
    }

    /// True for the result of a close: no holes and every body is a location.
    pub fn is_closed(&self) -> bool {
        self.input.is_empty()
            && !self.binding.is_empty()
            && self.binding.values().all(|e| matches!(e, Expr::Loc(_)))
    }

    pub fn check_wellformed(&self) -> Result<(), WellFormedError> {
        for x in self.input.keys() {
            if self.binding.contains_key(x) {
                return Err(WellFormedError::DeferredAndDefined(x.to_string()));
            }
        }
        for (name, x) in self.output.iter() {
            if !self.binding.contains_key(x) && !self.input.contains_key(x) {
                return Err(WellFormedError::DanglingOutput(name.to_string()));
            }
        }
        for (x, body) in self.binding.iter() {
            if body.mentions_name() {
                return Err(WellFormedError::NameInBody(x.to_string()));
            }
        }
        let ids = self.identifiers();
        if let Some(x) = self.constraint.idents().into_iter().find(|x| !ids.contains(x)) {
            return Err(WellFormedError::ForeignAtom(x.to_string()));
        }
        Ok(())
    }

    /// An alpha-equivalent copy whose identifiers are all fresh.
    pub fn alpha_refresh(&self) -> Structure {
        let map: HashMap<Ident, Ident> =
            self.identifiers().into_iter().map(|x| { let y = x.refresh(); (x, y) }).collect();
        self.rename_idents(&map)
    }

    pub fn rename_idents(&self, map: &HashMap<Ident, Ident>) -> Structure {
        let re = |x: &Ident| map.get(x).cloned().unwrap_or_else(|| x.clone());
        Structure {
            input: self.input.iter().map(|(x, n)| (re(x), n.clone())).collect(),
            output: self.output.iter().map(|(n, x)| (n.clone(), re(x))).collect(),
            binding: self
                .binding
                .iter()
                .map(|(x, e)| (re(x), e.rename_vars(map)))
                .collect(),
            constraint: self.constraint.rename(map),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Concat => "^",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    Print,
    Ref,
    Deref,
    Assign,
    Incr,
    CreateForm,
    CreateMenu,
    CreateMenuItem,
    SetMenus,
    SetMenuItems,
    SetAction,
    Toggle,
}

impl Builtin {
    pub const ALL: [Builtin; 12] = [
        Builtin::Print,
        Builtin::Ref,
        Builtin::Deref,
        Builtin::Assign,
        Builtin::Incr,
        Builtin::CreateForm,
        Builtin::CreateMenu,
        Builtin::CreateMenuItem,
        Builtin::SetMenus,
        Builtin::SetMenuItems,
        Builtin::SetAction,
        Builtin::Toggle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Print => "print",
            Builtin::Ref => "ref",
            Builtin::Deref => "!",
            Builtin::Assign => ":=",
            Builtin::Incr => "incr",
            Builtin::CreateForm => "createForm",
            Builtin::CreateMenu => "createMenu",
            Builtin::CreateMenuItem => "createMenuItem",
            Builtin::SetMenus => "setMenus",
            Builtin::SetMenuItems => "setMenuItems",
            Builtin::SetAction => "setAction",
            Builtin::Toggle => "toggle",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Assign | Builtin::SetMenus | Builtin::SetMenuItems | Builtin::SetAction => 2,
            _ => 1,
        }
    }

    /// Builtins that are called by name in the surface syntax.
    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL
            .into_iter()
            .find(|b| !matches!(b, Builtin::Deref | Builtin::Assign) && b.name() == name)
    }
}

/// Where a structure literal came from. The implicit program structure never
/// receives strategy constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiteralOrigin {
    User,
    TopLevel,
}

#[derive(Clone, Debug)]
pub struct StructLit {
    pub structure: Structure,
    /// Component identifiers in textual order, deferred and defined interleaved.
    pub layout: Vec<Ident>,
    /// `let _ = E` components; emptied by desugaring.
    pub anonymous: Vec<Ident>,
    /// Surface annotation; compiled into `structure.constraint` by desugaring.
    pub annotation: Option<SurfaceConstraintAnnotation>,
    pub origin: LiteralOrigin,
}

impl StructLit {
    pub fn new(structure: Structure, origin: LiteralOrigin) -> StructLit {
        let layout = structure.identifiers().into_iter().collect();
        StructLit { structure, layout, anonymous: Vec::new(), annotation: None, origin }
    }

    pub fn alpha_refresh(&self) -> StructLit {
        let map: HashMap<Ident, Ident> = self
            .structure
            .identifiers()
            .into_iter()
            .map(|x| { let y = x.refresh(); (x, y) })
            .collect();
        let re = |x: &Ident| map.get(x).cloned().unwrap_or_else(|| x.clone());
        StructLit {
            structure: self.structure.rename_idents(&map),
            layout: self.layout.iter().map(re).collect(),
            anonymous: self.anonymous.iter().map(re).collect(),
            annotation: self.annotation.clone(),
            origin: self.origin,
        }
    }
}

/// Core and mixin expressions in one tree.
#[derive(Clone, Debug)]
pub enum Expr {
    Int(i64),
    Str(String),
    Unit,
    Bool(bool),
    List(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `None` is the unit pattern `()`.
    Lambda(Option<Ident>, Arc<Expr>),
    App(Box<Expr>, Box<Expr>),
    Let(Ident, Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    Builtin(Builtin, Vec<Expr>),
    Struct(Box<StructLit>),
    Sum(Box<Expr>, Box<Expr>),
    Rename(Renaming, Box<Expr>, Renaming),
    Hide(Name, Box<Expr>),
    Freeze(Tying, Box<Expr>),
    Close(Box<Expr>),
    Project(Box<Expr>, Name),
    Var(Ident),
    NameRef(Name),
    Loc(Loc),
    /// An already computed value, produced by substitution during evaluation.
    Value(Box<Value>),
    /// A reference not yet resolved by the parser. Never survives parsing.
    Unbound(String),
}

impl Expr {
    pub fn is_mixin_form(&self) -> bool {
        matches!(
            self,
            Expr::Struct(_)
                | Expr::Sum(..)
                | Expr::Rename(..)
                | Expr::Hide(..)
                | Expr::Freeze(..)
                | Expr::Close(_)
        )
    }

    /// Applies `f` to every variable occurrence, keeping the rest of the tree.
    pub fn map_vars(&self, f: &dyn Fn(&Ident) -> Option<Expr>) -> Expr {
        self.map_leaves(f, &|_| None)
    }

    pub fn map_names(&self, f: &dyn Fn(&Name) -> Option<Expr>) -> Expr {
        self.map_leaves(&|_| None, f)
    }

    pub fn rename_vars(&self, map: &HashMap<Ident, Ident>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        self.map_vars(&|x| map.get(x).map(|y| Expr::Var(y.clone())))
    }

    pub fn subst_locs(&self, map: &HashMap<Ident, Loc>) -> Expr {
        self.map_vars(&|x| map.get(x).map(|l| Expr::Loc(*l)))
    }

    fn map_leaves(
        &self,
        on_var: &dyn Fn(&Ident) -> Option<Expr>,
        on_name: &dyn Fn(&Name) -> Option<Expr>,
    ) -> Expr {
        let go = |e: &Expr| Box::new(e.map_leaves(on_var, on_name));
        match self {
            Expr::Var(x) => on_var(x).unwrap_or_else(|| self.clone()),
            Expr::NameRef(n) => on_name(n).unwrap_or_else(|| self.clone()),
            Expr::Int(_)
            | Expr::Str(_)
            | Expr::Unit
            | Expr::Bool(_)
            | Expr::Loc(_)
            | Expr::Value(_)
            | Expr::Unbound(_) => self.clone(),
            Expr::List(items) => {
                Expr::List(items.iter().map(|e| e.map_leaves(on_var, on_name)).collect())
            }
            Expr::Unary(op, e) => Expr::Unary(*op, go(e)),
            Expr::Binary(op, a, b) => Expr::Binary(*op, go(a), go(b)),
            Expr::If(c, t, e) => Expr::If(go(c), go(t), go(e)),
            Expr::Lambda(p, body) => {
                Expr::Lambda(p.clone(), Arc::new(body.map_leaves(on_var, on_name)))
            }
            Expr::App(f, a) => Expr::App(go(f), go(a)),
            Expr::Let(x, a, b) => Expr::Let(x.clone(), go(a), go(b)),
            Expr::Seq(a, b) => Expr::Seq(go(a), go(b)),
            Expr::Builtin(b, args) => {
                Expr::Builtin(*b, args.iter().map(|e| e.map_leaves(on_var, on_name)).collect())
            }
            Expr::Struct(lit) => {
                let mut lit = lit.clone();
                for body in lit.structure.binding.values_mut() {
                    *body = body.map_leaves(on_var, on_name);
                }
                Expr::Struct(lit)
            }
            Expr::Sum(a, b) => Expr::Sum(go(a), go(b)),
            Expr::Rename(p1, m, p2) => Expr::Rename(p1.clone(), go(m), p2.clone()),
            Expr::Hide(n, m) => Expr::Hide(n.clone(), go(m)),
            Expr::Freeze(psi, m) => {
                // Names inside a tying belong to the frozen mixin, not to us.
                let psi = psi
                    .iter()
                    .map(|(n, e)| (n.clone(), e.map_leaves(on_var, &|_| None)))
                    .collect();
                Expr::Freeze(psi, go(m))
            }
            Expr::Close(m) => Expr::Close(go(m)),
            Expr::Project(m, n) => Expr::Project(go(m), n.clone()),
        }
    }

    /// Visits every subexpression, including bodies of nested literals and tyings.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Int(_)
            | Expr::Str(_)
            | Expr::Unit
            | Expr::Bool(_)
            | Expr::Loc(_)
            | Expr::Value(_)
            | Expr::Unbound(_)
            | Expr::Var(_)
            | Expr::NameRef(_) => {}
            Expr::List(items) | Expr::Builtin(_, items) => items.iter().for_each(|e| e.walk(f)),
            Expr::Unary(_, e)
            | Expr::Close(e)
            | Expr::Hide(_, e)
            | Expr::Project(e, _)
            | Expr::Rename(_, e, _) => e.walk(f),
            Expr::Lambda(_, body) => body.walk(f),
            Expr::Binary(_, a, b) | Expr::App(a, b) | Expr::Let(_, a, b) | Expr::Seq(a, b)
            | Expr::Sum(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::If(c, t, e) => {
                c.walk(f);
                t.walk(f);
                e.walk(f);
            }
            Expr::Struct(lit) => lit.structure.binding.values().for_each(|e| e.walk(f)),
            Expr::Freeze(psi, m) => {
                psi.values().for_each(|e| e.walk(f));
                m.walk(f);
            }
        }
    }

    pub fn walk_mut(&mut self, f: &mut dyn FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Int(_)
            | Expr::Str(_)
            | Expr::Unit
            | Expr::Bool(_)
            | Expr::Loc(_)
            | Expr::Value(_)
            | Expr::Unbound(_)
            | Expr::Var(_)
            | Expr::NameRef(_) => {}
            Expr::List(items) | Expr::Builtin(_, items) => {
                items.iter_mut().for_each(|e| e.walk_mut(f))
            }
            Expr::Unary(_, e)
            | Expr::Close(e)
            | Expr::Hide(_, e)
            | Expr::Project(e, _)
            | Expr::Rename(_, e, _) => e.walk_mut(f),
            Expr::Lambda(_, body) => Arc::make_mut(body).walk_mut(f),
            Expr::Binary(_, a, b) | Expr::App(a, b) | Expr::Let(_, a, b) | Expr::Seq(a, b)
            | Expr::Sum(a, b) => {
                a.walk_mut(f);
                b.walk_mut(f);
            }
            Expr::If(c, t, e) => {
                c.walk_mut(f);
                t.walk_mut(f);
                e.walk_mut(f);
            }
            Expr::Struct(lit) => lit.structure.binding.values_mut().for_each(|e| e.walk_mut(f)),
            Expr::Freeze(psi, m) => {
                psi.0.values_mut().for_each(|e| e.walk_mut(f));
                m.walk_mut(f);
            }
        }
    }

    /// True if a name occurs outside of any tying.
    pub fn mentions_name(&self) -> bool {
        match self {
            Expr::NameRef(_) => true,
            Expr::Freeze(_, m) => m.mentions_name(),
            _ => {
                let mut found = false;
                self.for_each_child(&mut |c| found = found || c.mentions_name());
                found
            }
        }
    }

    /// True if the expression still refers to a component that no close has
    /// replaced by a location: a free identifier or a free name.
    pub fn has_unresolved(&self) -> bool {
        let mut bound = Vec::new();
        self.unresolved_in(&mut bound, false)
    }

    fn unresolved_in(&self, bound: &mut Vec<Ident>, names_ok: bool) -> bool {
        match self {
            Expr::Var(x) => !bound.contains(x),
            Expr::NameRef(_) => !names_ok,
            Expr::Unbound(_) => true,
            Expr::Lambda(p, body) => {
                let n = bound.len();
                bound.extend(p.iter().cloned());
                let r = body.unresolved_in(bound, names_ok);
                bound.truncate(n);
                r
            }
            Expr::Let(x, a, b) => {
                if a.unresolved_in(bound, names_ok) {
                    return true;
                }
                bound.push(x.clone());
                let r = b.unresolved_in(bound, names_ok);
                bound.pop();
                r
            }
            Expr::Struct(lit) => {
                let n = bound.len();
                bound.extend(lit.structure.identifiers());
                let r = lit.structure.binding.values().any(|e| e.unresolved_in(bound, names_ok));
                bound.truncate(n);
                r
            }
            // Names in a tying are resolved by the freeze itself.
            Expr::Freeze(psi, m) => {
                psi.values().any(|e| e.unresolved_in(bound, true)) || m.unresolved_in(bound, names_ok)
            }
            _ => {
                let mut found = false;
                self.for_each_child(&mut |c| found = found || c.unresolved_in(bound, names_ok));
                found
            }
        }
    }

    fn for_each_child(&self, f: &mut dyn FnMut(&Expr)) {
        match self {
            Expr::Int(_)
            | Expr::Str(_)
            | Expr::Unit
            | Expr::Bool(_)
            | Expr::Loc(_)
            | Expr::Value(_)
            | Expr::Unbound(_)
            | Expr::Var(_)
            | Expr::NameRef(_) => {}
            Expr::List(items) | Expr::Builtin(_, items) => items.iter().for_each(f),
            Expr::Unary(_, e)
            | Expr::Close(e)
            | Expr::Hide(_, e)
            | Expr::Project(e, _)
            | Expr::Rename(_, e, _) => f(e),
            Expr::Lambda(_, body) => f(body),
            Expr::Binary(_, a, b) | Expr::App(a, b) | Expr::Let(_, a, b) | Expr::Seq(a, b)
            | Expr::Sum(a, b) => {
                f(a);
                f(b);
            }
            Expr::If(c, t, e) => {
                f(c);
                f(t);
                f(e);
            }
            Expr::Struct(lit) => lit.structure.binding.values().for_each(f),
            Expr::Freeze(psi, m) => {
                psi.values().for_each(&mut *f);
                f(m);
            }
        }
    }

    /// Replaces every structure literal with an alpha-equivalent fresh copy.
    pub fn refresh_literals(&self) -> Expr {
        let mut out = self.clone();
        out.walk_mut(&mut |e| {
            if let Expr::Struct(lit) = e {
                **lit = lit.alpha_refresh();
            }
        });
        out
    }
}
