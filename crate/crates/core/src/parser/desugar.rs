use std::collections::BTreeSet;

use thiserror::Error;

use super::{ComponentRef, Program, SurfaceConstraintAnnotation};
use crate::ast::{
    Atom, Expr, Ident, LiteralOrigin, LocalConstraint, Name, StructLit, Structure,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesugarError {
    #[error("annotation refers to `{0}`, which the literal does not declare")]
    UnknownConstraintTarget(String),
}

/// Turns a program into `close({ top-level bindings }).main`, compiling
/// annotations and hiding anonymous components along the way.
pub fn desugar(program: &Program) -> Result<Expr, DesugarError> {
    let mut structure = Structure::empty();
    for b in &program.bindings {
        let mut e = b.expr.clone();
        desugar_literals(&mut e)?;
        structure.binding.insert(b.ident.clone(), e);
        structure.output.insert(Name::new(&b.name), b.ident.clone());
    }
    let top = StructLit::new(structure, LiteralOrigin::TopLevel);
    let top = StructLit {
        layout: program.bindings.iter().map(|b| b.ident.clone()).collect(),
        ..top
    };
    Ok(Expr::Project(Box::new(Expr::Close(Box::new(Expr::Struct(Box::new(top))))), Name::new("main")))
}

/// Desugars a standalone expression the way top-level bindings are.
pub fn desugar_expr(mut e: Expr) -> Result<Expr, DesugarError> {
    desugar_literals(&mut e)?;
    Ok(e)
}

fn desugar_literals(e: &mut Expr) -> Result<(), DesugarError> {
    let mut failure = None;
    e.walk_mut(&mut |node| {
        if failure.is_some() {
            return;
        }
        let Expr::Struct(lit) = node else { return };
        if let Some(ann) = lit.annotation.take() {
            match compile_annotation(lit, &ann) {
                Ok(c) => lit.structure.constraint = lit.structure.constraint.union(&c),
                Err(err) => {
                    failure = Some(err);
                    return;
                }
            }
        }
        if lit.anonymous.is_empty() {
            return;
        }
        let mut hidden = Vec::new();
        for x in std::mem::take(&mut lit.anonymous) {
            let name = Name::hidden(x.uid());
            lit.structure.output.insert(name.clone(), x);
            hidden.push(name);
        }
        let mut wrapped = Expr::Struct(lit.clone());
        for name in hidden {
            wrapped = Expr::Hide(name, Box::new(wrapped));
        }
        *node = wrapped;
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

/// Defined components take precedence when a deferred one shares the binder.
fn lookup_binder(lit: &StructLit, binder: &str) -> Result<Ident, DesugarError> {
    let mut deferred = None;
    for x in &lit.layout {
        if lit.anonymous.contains(x) || x.base() != binder {
            continue;
        }
        if lit.structure.binding.contains_key(x) {
            return Ok(x.clone());
        }
        deferred = Some(x.clone());
    }
    deferred.ok_or_else(|| DesugarError::UnknownConstraintTarget(binder.to_string()))
}

fn compile_annotation(
    lit: &StructLit,
    ann: &SurfaceConstraintAnnotation,
) -> Result<LocalConstraint, DesugarError> {
    let atom = |r: &ComponentRef| -> Result<Atom, DesugarError> {
        let x = lookup_binder(lit, &r.binder)?;
        Ok(Atom { ident: x, mode: r.mode })
    };
    let mut c = LocalConstraint::empty();
    for (a, b) in &ann.pairs {
        c.theta.insert((atom(a)?, atom(b)?));
    }
    for set in &ann.triggers {
        let idents: BTreeSet<Ident> =
            set.iter().map(|s| lookup_binder(lit, s)).collect::<Result<_, _>>()?;
        c.delta.insert(idents);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::AtomMode;
    use crate::parser::parse;

    fn desugared(src: &str) -> Result<Expr, DesugarError> {
        desugar(&parse(src).unwrap())
    }

    #[test]
    fn main_only_program() {
        let e = desugared("let main = 42").unwrap();
        let Expr::Project(inner, name) = e else { panic!() };
        assert_eq!(name.as_str(), "main");
        let Expr::Close(lit) = *inner else { panic!() };
        let Expr::Struct(lit) = *lit else { panic!() };
        assert_eq!(lit.origin, LiteralOrigin::TopLevel);
        assert!(lit.structure.constraint.is_empty());
        assert_eq!(lit.structure.binding.len(), 1);
    }

    #[test]
    fn anonymous_components_are_hidden() {
        let e = desugared("mixin M = { let _ = 1 let _ = 2 let _ = 3 let x = 4 } let main = 0").unwrap();
        let mut hides = 0;
        let mut outputs = Vec::new();
        e.walk(&mut |n| match n {
            Expr::Hide(name, _) => {
                assert!(name.is_hidden());
                hides += 1;
            }
            Expr::Struct(lit) if lit.origin == LiteralOrigin::User => {
                outputs = lit.structure.output_names();
                assert!(lit.anonymous.is_empty());
            }
            _ => {}
        });
        assert_eq!(hides, 3);
        assert_eq!(outputs.len(), 4);
    }

    #[test]
    fn annotations_compile_to_idents() {
        let e = desugared(
            "mixin M = { let c1 = 1 let c2 = 2 } order {(c1, c2), (c2, ext c1)} trigger {{c1, c2}} let main = 0",
        )
        .unwrap();
        let mut found = None;
        e.walk(&mut |n| {
            if let Expr::Struct(lit) = n {
                if lit.origin == LiteralOrigin::User {
                    found = Some(lit.structure.clone());
                }
            }
        });
        let s = found.unwrap();
        assert_eq!(s.constraint.theta.len(), 2);
        assert_eq!(s.constraint.delta.len(), 1);
        s.check_wellformed().unwrap();
        assert!(s
            .constraint
            .theta
            .iter()
            .any(|(a, b)| a.ident.base() == "c2" && b.mode == AtomMode::External));
    }

    #[test]
    fn unknown_annotation_target() {
        let err = desugared("mixin M = { let c1 = 1 } order {(c1, nope)} let main = 0").unwrap_err();
        assert_eq!(err, DesugarError::UnknownConstraintTarget("nope".into()));
    }
}
