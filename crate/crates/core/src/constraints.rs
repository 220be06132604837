//! Global constraints over locations and the strategies that produce local
//! constraints for literals, sums and closes.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use thiserror::Error;

use crate::ast::{Atom, AtomMode, Ident, Loc, LocalConstraint, Sort, StructLit, Structure};

/// `(Θ, Δ)`: ordering edges between locations and pending trigger sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalConstraint {
    /// Stored as `(target, source)` so the predecessors of a location are a range.
    by_target: BTreeSet<(Loc, Loc)>,
    delta: Vec<BTreeSet<Loc>>,
}

impl GlobalConstraint {
    pub fn new() -> GlobalConstraint {
        GlobalConstraint::default()
    }

    pub fn add_edge(&mut self, from: Loc, to: Loc) {
        self.by_target.insert((to, from));
    }

    pub fn add_edges(&mut self, edges: impl IntoIterator<Item = (Loc, Loc)>) {
        for (from, to) in edges {
            self.add_edge(from, to);
        }
    }

    /// Empty sets trigger nothing and are dropped.
    pub fn add_trigger(&mut self, set: BTreeSet<Loc>) {
        if !set.is_empty() && !self.delta.contains(&set) {
            self.delta.push(set);
        }
    }

    /// Sources of edges into `l`, in ascending order.
    pub fn predecessors(&self, l: Loc) -> Vec<Loc> {
        self.by_target.range((l, Loc(0))..=(l, Loc(usize::MAX))).map(|(_, from)| *from).collect()
    }

    pub fn has_edge_into(&self, l: Loc) -> bool {
        self.by_target.range((l, Loc(0))..=(l, Loc(usize::MAX))).next().is_some()
    }

    pub fn remove_edge(&mut self, from: Loc, to: Loc) -> bool {
        self.by_target.remove(&(to, from))
    }

    pub fn in_trigger(&self, l: Loc) -> bool {
        self.delta.iter().any(|s| s.contains(&l))
    }

    /// Removes and returns the first trigger set containing `l`.
    pub fn take_trigger(&mut self, l: Loc) -> Option<BTreeSet<Loc>> {
        let i = self.delta.iter().position(|s| s.contains(&l))?;
        Some(self.delta.remove(i))
    }

    /// Edges as `(from, to)`, sorted.
    pub fn edges(&self) -> Vec<(Loc, Loc)> {
        let mut out: Vec<(Loc, Loc)> = self.by_target.iter().map(|(to, from)| (*from, *to)).collect();
        out.sort();
        out
    }

    pub fn triggers(&self) -> &[BTreeSet<Loc>] {
        &self.delta
    }

    pub fn is_empty(&self) -> bool {
        self.by_target.is_empty() && self.delta.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (from, to) in self.edges() {
            let _ = writeln!(out, "{from} -> {to}");
        }
        for set in &self.delta {
            let locs: Vec<String> = set.iter().map(|l| l.to_string()).collect();
            let _ = writeln!(out, "{{{}}}", locs.join(", "));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("atom {0} has no location")]
pub struct UnhousedAtom(pub String);

/// The three location maps a close produces.
pub struct Housing<'a> {
    pub ordinary: &'a HashMap<Ident, Loc>,
    pub internal: &'a HashMap<Ident, Loc>,
    pub external: &'a HashMap<Ident, Loc>,
}

impl Housing<'_> {
    fn house(&self, a: &Atom) -> Result<Loc, UnhousedAtom> {
        let map = match a.mode {
            AtomMode::Ordinary => self.ordinary,
            AtomMode::Internal => self.internal,
            AtomMode::External => self.external,
        };
        map.get(&a.ident).copied().ok_or_else(|| UnhousedAtom(a.to_string()))
    }
}

pub fn instantiate(
    theta: &BTreeSet<(Atom, Atom)>,
    housing: &Housing<'_>,
) -> Result<BTreeSet<(Loc, Loc)>, UnhousedAtom> {
    theta.iter().map(|(a, b)| Ok((housing.house(a)?, housing.house(b)?))).collect()
}

pub fn instantiate_delta(
    delta: &BTreeSet<BTreeSet<Ident>>,
    housing: &Housing<'_>,
) -> Result<BTreeSet<BTreeSet<Loc>>, UnhousedAtom> {
    delta
        .iter()
        .map(|set| set.iter().map(|x| housing.house(&Atom::ordinary(x))).collect())
        .collect()
}

/// An evaluation strategy: how literals are annotated and how constraints
/// survive closes (`mu`) and combine under sums (`nu`).
pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// The local constraint of a user-written literal, including its annotation.
    fn annotate(&self, lit: &StructLit) -> LocalConstraint;

    fn mu(&self, defined: &BTreeSet<Ident>, c: &LocalConstraint) -> LocalConstraint;

    fn nu(
        &self,
        x1: &BTreeSet<Ident>,
        c1: &LocalConstraint,
        x2: &BTreeSet<Ident>,
        c2: &LocalConstraint,
    ) -> LocalConstraint;

    fn check_literal(&self, _lit: &StructLit) -> Result<(), String> {
        Ok(())
    }

    fn check_sum(&self, _s1: &Structure, _s2: &Structure) -> Result<(), String> {
        Ok(())
    }
}

pub const STRATEGY_NAMES: [&str; 4] = ["pure-lazy", "recmod", "objinit", "trigger-topdown"];

pub fn strategy_by_name(name: &str) -> Option<std::sync::Arc<dyn Strategy>> {
    Some(match name {
        "pure-lazy" => std::sync::Arc::new(PureLazy),
        "recmod" => std::sync::Arc::new(Recmod),
        "objinit" => std::sync::Arc::new(ObjInit),
        "trigger-topdown" => std::sync::Arc::new(TriggerTopDown),
        _ => return None,
    })
}

/// Only user annotations order evaluation; nothing survives a close.
pub struct PureLazy;

/// Top-down over core components, internally lazy-field, externally lazy-record.
pub struct Recmod;

/// Objects initialized at once; superclass fields before subclass fields.
pub struct ObjInit;

/// Top-down, lazy-field both ways, every literal a trigger set.
pub struct TriggerTopDown;

fn defined_in_order(lit: &StructLit) -> Vec<Ident> {
    lit.layout.iter().filter(|x| lit.structure.binding.contains_key(x)).cloned().collect()
}

fn top_down(lit: &StructLit) -> BTreeSet<(Atom, Atom)> {
    let defined = defined_in_order(lit);
    let mut theta = BTreeSet::new();
    for (i, xi) in defined.iter().enumerate() {
        if !xi.is_core() {
            continue;
        }
        for xj in &defined[i + 1..] {
            theta.insert((Atom::ordinary(xi), Atom::ordinary(xj)));
        }
    }
    theta
}

fn core_before_external(ids: &BTreeSet<Ident>) -> BTreeSet<(Atom, Atom)> {
    let mut theta = BTreeSet::new();
    for xi in ids.iter().filter(|x| x.is_core()) {
        for xj in ids {
            theta.insert((Atom::ordinary(xi), Atom::external(xj)));
        }
    }
    theta
}

fn union_all(c1: &LocalConstraint, c2: &LocalConstraint) -> LocalConstraint {
    c1.union(c2)
}

impl Strategy for PureLazy {
    fn name(&self) -> &'static str {
        "pure-lazy"
    }

    fn annotate(&self, lit: &StructLit) -> LocalConstraint {
        lit.structure.constraint.clone()
    }

    fn mu(&self, _: &BTreeSet<Ident>, _: &LocalConstraint) -> LocalConstraint {
        LocalConstraint::empty()
    }

    fn nu(
        &self,
        _: &BTreeSet<Ident>,
        c1: &LocalConstraint,
        _: &BTreeSet<Ident>,
        c2: &LocalConstraint,
    ) -> LocalConstraint {
        union_all(c1, c2)
    }
}

impl Strategy for Recmod {
    fn name(&self) -> &'static str {
        "recmod"
    }

    fn annotate(&self, lit: &StructLit) -> LocalConstraint {
        let mut theta = top_down(lit);
        theta.extend(core_before_external(&lit.structure.identifiers()));
        lit.structure.constraint.union(&LocalConstraint { theta, delta: BTreeSet::new() })
    }

    fn mu(&self, _: &BTreeSet<Ident>, _: &LocalConstraint) -> LocalConstraint {
        LocalConstraint::empty()
    }

    fn nu(
        &self,
        x1: &BTreeSet<Ident>,
        c1: &LocalConstraint,
        x2: &BTreeSet<Ident>,
        c2: &LocalConstraint,
    ) -> LocalConstraint {
        let all: BTreeSet<Ident> = x1.union(x2).cloned().collect();
        let cross = LocalConstraint { theta: core_before_external(&all), delta: BTreeSet::new() };
        c1.union(c2).union(&cross)
    }
}

impl Strategy for ObjInit {
    fn name(&self) -> &'static str {
        "objinit"
    }

    fn annotate(&self, lit: &StructLit) -> LocalConstraint {
        let ids = lit.structure.identifiers();
        let mut theta = BTreeSet::new();
        for xi in &ids {
            for xj in &ids {
                theta.insert((Atom::ordinary(xi), Atom::external(xj)));
                theta.insert((Atom::ordinary(xi), Atom::internal(xj)));
            }
        }
        let mut delta = BTreeSet::new();
        if !ids.is_empty() {
            delta.insert(ids);
        }
        lit.structure.constraint.union(&LocalConstraint { theta, delta })
    }

    fn mu(&self, _: &BTreeSet<Ident>, _: &LocalConstraint) -> LocalConstraint {
        LocalConstraint::empty()
    }

    fn nu(
        &self,
        x1: &BTreeSet<Ident>,
        c1: &LocalConstraint,
        x2: &BTreeSet<Ident>,
        c2: &LocalConstraint,
    ) -> LocalConstraint {
        let mut theta: BTreeSet<(Atom, Atom)> = c1.theta.union(&c2.theta).cloned().collect();
        for xi in x1 {
            for xj in x2 {
                theta.insert((Atom::ordinary(xi), Atom::ordinary(xj)));
            }
        }
        let all: BTreeSet<Ident> = x1.union(x2).cloned().collect();
        let mut delta = BTreeSet::new();
        if !all.is_empty() {
            delta.insert(all);
        }
        LocalConstraint { theta, delta }
    }

    fn check_literal(&self, lit: &StructLit) -> Result<(), String> {
        match lit.structure.identifiers().into_iter().find(|x| x.sort() == Sort::Mixin) {
            Some(x) => Err(format!("object structures cannot contain the sub-mixin {x}")),
            None => Ok(()),
        }
    }

    fn check_sum(&self, s1: &Structure, s2: &Structure) -> Result<(), String> {
        if s1.is_closed() || s2.is_closed() {
            return Err("sums of objects take open mixins only".to_string());
        }
        Ok(())
    }
}

impl Strategy for TriggerTopDown {
    fn name(&self) -> &'static str {
        "trigger-topdown"
    }

    fn annotate(&self, lit: &StructLit) -> LocalConstraint {
        let defined = defined_in_order(lit);
        let mut theta = BTreeSet::new();
        for (i, xi) in defined.iter().enumerate() {
            if !xi.is_core() {
                continue;
            }
            for xj in defined[i + 1..].iter().filter(|x| x.is_core()) {
                theta.insert((Atom::ordinary(xi), Atom::ordinary(xj)));
            }
        }
        let mut delta = BTreeSet::new();
        if !defined.is_empty() {
            delta.insert(defined.into_iter().collect());
        }
        lit.structure.constraint.union(&LocalConstraint { theta, delta })
    }

    fn mu(&self, _: &BTreeSet<Ident>, _: &LocalConstraint) -> LocalConstraint {
        LocalConstraint::empty()
    }

    fn nu(
        &self,
        _: &BTreeSet<Ident>,
        c1: &LocalConstraint,
        _: &BTreeSet<Ident>,
        c2: &LocalConstraint,
    ) -> LocalConstraint {
        union_all(c1, c2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Expr, Sort};
    use crate::parser::{desugar_expr, parse_expr};

    fn lit(src: &str) -> StructLit {
        match parse_expr(src).unwrap() {
            Expr::Struct(l) => *l,
            _ => panic!(),
        }
    }

    fn idents(n: usize) -> Vec<Ident> {
        (0..n).map(|i| Ident::fresh(&format!("c{}", i + 1), Sort::Core)).collect()
    }

    fn maps(ids: &[Ident], base: usize) -> [HashMap<Ident, Loc>; 3] {
        let n = ids.len();
        let m = |off: usize| ids.iter().enumerate().map(|(i, x)| (x.clone(), Loc(base + off + i))).collect();
        [m(0), m(n), m(2 * n)]
    }

    #[test]
    fn instantiate_pointwise() {
        let ids = idents(2);
        let [l, li, le] = maps(&ids, 1);
        let h = Housing { ordinary: &l, internal: &li, external: &le };
        let theta: BTreeSet<_> = [(Atom::ordinary(&ids[0]), Atom::external(&ids[1]))].into_iter().collect();
        assert_eq!(instantiate(&theta, &h).unwrap(), [(Loc(1), Loc(6))].into_iter().collect());
        let theta: BTreeSet<_> = [(Atom::ordinary(&ids[0]), Atom::internal(&ids[0]))].into_iter().collect();
        assert_eq!(instantiate(&theta, &h).unwrap(), [(Loc(1), Loc(3))].into_iter().collect());
        assert!(instantiate(&BTreeSet::new(), &h).unwrap().is_empty());
        let stranger = Ident::fresh("z", Sort::Core);
        let theta: BTreeSet<_> = [(Atom::ordinary(&stranger), Atom::ordinary(&ids[0]))].into_iter().collect();
        assert!(instantiate(&theta, &h).is_err());
    }

    #[test]
    fn instantiate_delta_elementwise() {
        let ids = idents(2);
        let [l, li, le] = maps(&ids, 1);
        let h = Housing { ordinary: &l, internal: &li, external: &le };
        let together: BTreeSet<BTreeSet<Ident>> = [ids.iter().cloned().collect()].into_iter().collect();
        let expect: BTreeSet<BTreeSet<Loc>> = [[Loc(1), Loc(2)].into_iter().collect()].into_iter().collect();
        assert_eq!(instantiate_delta(&together, &h).unwrap(), expect);
        let apart: BTreeSet<BTreeSet<Ident>> =
            ids.iter().map(|x| [x.clone()].into_iter().collect()).collect();
        let expect: BTreeSet<BTreeSet<Loc>> =
            [[Loc(1)].into_iter().collect(), [Loc(2)].into_iter().collect()].into_iter().collect();
        assert_eq!(instantiate_delta(&apart, &h).unwrap(), expect);
        assert!(instantiate_delta(&BTreeSet::new(), &h).unwrap().is_empty());
    }

    /// Direct transcription of the recmod comprehension, for comparison.
    fn recmod_oracle(defined: &[Ident], deferred: &[Ident]) -> BTreeSet<(Atom, Atom)> {
        let mut out = BTreeSet::new();
        for i in 0..defined.len() {
            for j in 0..defined.len() {
                if defined[i].is_core() && i < j {
                    out.insert((Atom::ordinary(&defined[i]), Atom::ordinary(&defined[j])));
                }
            }
        }
        let all: Vec<&Ident> = deferred.iter().chain(defined).collect();
        for xi in &all {
            for xj in &all {
                if xi.is_core() {
                    out.insert((Atom::ordinary(xi), Atom::external(xj)));
                }
            }
        }
        out
    }

    #[test]
    fn recmod_matches_comprehension() {
        for src in [
            r#"{ let c1 = 1 + 2 let c2 = c1 + 4 let c3 = print "ok" }"#,
            "{ val a mixin m let b = 1 mixin n = { } let c = b }",
            "{ mixin m = { } }",
            "{ }",
        ] {
            let l = lit(src);
            let defined = defined_in_order(&l);
            let deferred: Vec<Ident> = l.structure.input.keys().cloned().collect();
            assert_eq!(Recmod.annotate(&l).theta, recmod_oracle(&defined, &deferred), "{src}");
        }
        let m4 = lit(r#"{ let c1 = 1 + 2 let c2 = c1 + 4 let c3 = print "ok" }"#);
        assert_eq!(Recmod.annotate(&m4).theta.len(), 3 + 9);
        assert!(Recmod.annotate(&lit("{ mixin m = { } }")).theta.is_empty());
    }

    #[test]
    fn presets_keep_user_annotation() {
        let Ok(Expr::Struct(l)) = desugar_expr(Expr::Struct(Box::new(lit("{ let a = 1 let b = 2 } order {(b, a)}")))) else {
            panic!()
        };
        for name in STRATEGY_NAMES {
            let s = strategy_by_name(name).unwrap();
            let c = s.annotate(&l);
            assert!(c.theta.iter().any(|(x, y)| x.ident.base() == "b" && y.ident.base() == "a"), "{name}");
        }
    }

    #[test]
    fn presets_are_well_scoped() {
        let l = lit("{ val h mixin m let a = 1 let b = close(m) let _ = 3 }");
        for name in STRATEGY_NAMES {
            let s = strategy_by_name(name).unwrap();
            let c = s.annotate(&l);
            assert!(c.idents().is_subset(&l.structure.identifiers()), "{name}");
            assert!(s.mu(&l.structure.defined(), &c).is_empty());
        }
    }

    #[test]
    fn objinit_annotation_and_sum() {
        let l = lit("{ let a1 = 1 let a2 = 2 }");
        let c = ObjInit.annotate(&l);
        assert_eq!(c.theta.len(), 8);
        assert_eq!(c.delta.len(), 1);
        let ids = l.structure.identifiers();
        let other = idents(1).into_iter().collect::<BTreeSet<_>>();
        let nu = ObjInit.nu(&ids, &c, &other, &LocalConstraint::empty());
        assert_eq!(nu.theta.len(), 8 + 2);
        assert_eq!(nu.delta.len(), 1);
        assert_eq!(nu.delta.iter().next().unwrap().len(), 3);
        assert!(ObjInit.check_literal(&lit("{ mixin m = { } }")).is_err());
        assert!(ObjInit.check_literal(&lit("{ let x = 1 }")).is_ok());
    }

    #[test]
    fn trigger_topdown_annotation() {
        let c = TriggerTopDown.annotate(&lit("{ let c1 = 1 let c2 = 2 let c3 = 3 mixin m = { } }"));
        assert_eq!(c.theta.len(), 3);
        assert_eq!(c.delta.iter().next().unwrap().len(), 4);
    }

    #[test]
    fn global_constraint_queries() {
        let mut g = GlobalConstraint::new();
        g.add_edges([(Loc(3), Loc(1)), (Loc(2), Loc(1)), (Loc(1), Loc(4))]);
        g.add_trigger([Loc(1), Loc(4)].into_iter().collect());
        g.add_trigger(BTreeSet::new());
        assert_eq!(g.predecessors(Loc(1)), vec![Loc(2), Loc(3)]);
        assert!(g.has_edge_into(Loc(4)));
        assert!(!g.has_edge_into(Loc(2)));
        assert_eq!(g.render(), "l1 -> l4\nl2 -> l1\nl3 -> l1\n{l1, l4}\n");
        assert!(g.remove_edge(Loc(2), Loc(1)));
        assert!(!g.remove_edge(Loc(2), Loc(1)));
        assert_eq!(g.take_trigger(Loc(4)).unwrap().len(), 2);
        assert!(!g.in_trigger(Loc(1)));
    }
}
