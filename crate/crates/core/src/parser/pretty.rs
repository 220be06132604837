//! Printer producing parseable, fully parenthesized source.

use std::fmt::Write;

use super::{BindingKind, ComponentRef, Program, SurfaceConstraintAnnotation};
use crate::ast::{AtomMode, Builtin, Expr, Renaming, Sort, StructLit, UnOp};

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for b in &p.bindings {
        let kw = match b.kind {
            BindingKind::Mixin => "mixin",
            BindingKind::Let => "let",
        };
        let _ = writeln!(out, "{kw} {} = {}", b.name, pretty_expr(&b.expr));
    }
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    pp(e, &mut out);
    out
}

fn quote(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn renaming(phi: &Renaming, out: &mut String) {
    out.push('(');
    for (i, (a, b)) in phi.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{a} -> {b}");
    }
    out.push(')');
}

fn pp(e: &Expr, out: &mut String) {
    match e {
        Expr::Int(n) if *n < 0 => {
            let _ = write!(out, "(-{})", n.unsigned_abs());
        }
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Str(s) => quote(s, out),
        Expr::Unit => out.push_str("()"),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                pp(item, out);
            }
            out.push(']');
        }
        Expr::Unary(op, a) => {
            out.push_str(match op {
                UnOp::Neg => "(-",
                UnOp::Not => "(not ",
            });
            pp(a, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            out.push('(');
            pp(a, out);
            let _ = write!(out, " {} ", op.symbol());
            pp(b, out);
            out.push(')');
        }
        Expr::If(c, t, f) => {
            out.push_str("(if ");
            pp(c, out);
            out.push_str(" then ");
            pp(t, out);
            out.push_str(" else ");
            pp(f, out);
            out.push(')');
        }
        Expr::Lambda(p, body) => {
            match p {
                Some(x) => {
                    let _ = write!(out, "(fun {x} -> ");
                }
                None => out.push_str("(fun () -> "),
            }
            pp(body, out);
            out.push(')');
        }
        Expr::App(f, a) => {
            out.push('(');
            pp(f, out);
            out.push(' ');
            pp(a, out);
            out.push(')');
        }
        Expr::Let(x, a, b) => {
            let _ = write!(out, "(let {x} = ");
            pp(a, out);
            out.push_str(" in ");
            pp(b, out);
            out.push(')');
        }
        Expr::Seq(a, b) => {
            out.push('(');
            pp(a, out);
            out.push_str("; ");
            pp(b, out);
            out.push(')');
        }
        Expr::Builtin(Builtin::Deref, args) => {
            out.push_str("(!");
            pp(&args[0], out);
            out.push(')');
        }
        Expr::Builtin(Builtin::Assign, args) => {
            out.push('(');
            pp(&args[0], out);
            out.push_str(" := ");
            pp(&args[1], out);
            out.push(')');
        }
        Expr::Builtin(b, args) if args.len() == 1 => {
            let _ = write!(out, "({} ", b.name());
            pp(&args[0], out);
            out.push(')');
        }
        Expr::Builtin(b, args) => {
            let _ = write!(out, "{}(", b.name());
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                pp(a, out);
            }
            out.push(')');
        }
        Expr::Struct(lit) => literal(lit, out),
        Expr::Sum(a, b) => {
            out.push('(');
            pp(a, out);
            out.push_str(" <- ");
            pp(b, out);
            out.push(')');
        }
        Expr::Rename(phi1, m, phi2) => {
            out.push_str("rename[");
            renaming(phi1, out);
            out.push_str(", ");
            renaming(phi2, out);
            out.push_str("](");
            pp(m, out);
            out.push(')');
        }
        Expr::Hide(n, m) => {
            let _ = write!(out, "hide[{n}](");
            pp(m, out);
            out.push(')');
        }
        Expr::Freeze(psi, m) => {
            out.push_str("freeze[");
            for (i, (n, v)) in psi.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "{n} -> ");
                pp(v, out);
            }
            out.push_str("](");
            pp(m, out);
            out.push(')');
        }
        Expr::Close(m) => {
            out.push_str("close(");
            pp(m, out);
            out.push(')');
        }
        Expr::Project(m, n) => {
            pp(m, out);
            let _ = write!(out, ".{n}");
        }
        Expr::Var(x) => {
            let _ = write!(out, "{x}");
        }
        Expr::NameRef(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Loc(l) => {
            let _ = write!(out, "{l}");
        }
        Expr::Value(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Unbound(s) => out.push_str(s),
    }
}

fn literal(lit: &StructLit, out: &mut String) {
    let s = &lit.structure;
    out.push('{');
    for x in &lit.layout {
        if let Some(body) = s.binding.get(x) {
            let kw = if x.sort() == Sort::Mixin { "mixin" } else { "let" };
            let name = if lit.anonymous.contains(x) { "_".to_string() } else { x.to_string() };
            let _ = write!(out, " {kw} {name} = ");
            pp(body, out);
        } else if s.input.contains_key(x) {
            let kw = if x.sort() == Sort::Mixin { "mixin" } else { "val" };
            let _ = write!(out, " {kw} {x}");
        }
    }
    out.push_str(" }");
    if let Some(ann) = &lit.annotation {
        annotation(ann, out);
    } else if !s.constraint.is_empty() {
        let ann = SurfaceConstraintAnnotation {
            pairs: s
                .constraint
                .theta
                .iter()
                .map(|(a, b)| {
                    let r = |atom: &crate::ast::Atom| ComponentRef {
                        mode: atom.mode,
                        binder: atom.ident.to_string(),
                    };
                    (r(a), r(b))
                })
                .collect(),
            triggers: s
                .constraint
                .delta
                .iter()
                .map(|set| set.iter().map(|x| x.to_string()).collect())
                .collect(),
        };
        annotation(&ann, out);
    }
}

fn annotation(ann: &SurfaceConstraintAnnotation, out: &mut String) {
    let cref = |r: &ComponentRef| match r.mode {
        AtomMode::Ordinary => r.binder.clone(),
        AtomMode::Internal => format!("int {}", r.binder),
        AtomMode::External => format!("ext {}", r.binder),
    };
    if !ann.pairs.is_empty() || ann.triggers.is_empty() {
        let pairs: Vec<String> =
            ann.pairs.iter().map(|(a, b)| format!("({}, {})", cref(a), cref(b))).collect();
        let _ = write!(out, " order {{{}}}", pairs.join(", "));
    }
    if !ann.triggers.is_empty() {
        let sets: Vec<String> = ann.triggers.iter().map(|s| format!("{{{}}}", s.join(", "))).collect();
        let _ = write!(out, " trigger {{{}}}", sets.join(", "));
    }
}
