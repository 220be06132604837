//! The store of lazily evaluated components.

use std::fmt;

use thiserror::Error;

use crate::ast::{Expr, Loc};
use crate::eval_base::Value;

/// Why a cell is blackholed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SentinelTag {
    /// The cell is being evaluated; reaching it again is a cyclic definition.
    Cycle,
    /// The cell is waiting for a predecessor; reaching it is an order violation.
    Constraint,
}

impl fmt::Display for SentinelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SentinelTag::Cycle => "cycle",
            SentinelTag::Constraint => "constraint",
        })
    }
}

#[derive(Clone, Debug)]
pub enum HeapObject {
    Expr(Expr),
    Value(Value),
    Error(SentinelTag),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeapError {
    #[error("location {0} is not allocated")]
    Dangling(Loc),
    #[error("location {0} already holds a value")]
    AlreadyMemoized(Loc),
}

#[derive(Clone, Debug, Default)]
pub struct Heap {
    cells: Vec<HeapObject>,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn alloc(&mut self, obj: HeapObject) -> Loc {
        self.cells.push(obj);
        Loc(self.cells.len() - 1)
    }

    /// The location the next `alloc` will return.
    pub fn next_loc(&self) -> Loc {
        Loc(self.cells.len())
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, l: Loc) -> Result<&HeapObject, HeapError> {
        self.cells.get(l.0).ok_or(HeapError::Dangling(l))
    }

    fn cell(&mut self, l: Loc) -> Result<&mut HeapObject, HeapError> {
        self.cells.get_mut(l.0).ok_or(HeapError::Dangling(l))
    }

    /// Replaces the cell with a sentinel and hands back what was there.
    pub fn blackhole(&mut self, l: Loc, tag: SentinelTag) -> Result<HeapObject, HeapError> {
        Ok(std::mem::replace(self.cell(l)?, HeapObject::Error(tag)))
    }

    pub fn restore(&mut self, l: Loc, obj: HeapObject) -> Result<(), HeapError> {
        *self.cell(l)? = obj;
        Ok(())
    }

    /// Stores a value. A cell that already holds a value is never overwritten.
    pub fn memoize(&mut self, l: Loc, v: Value) -> Result<(), HeapError> {
        let cell = self.cell(l)?;
        if matches!(cell, HeapObject::Value(_)) {
            return Err(HeapError::AlreadyMemoized(l));
        }
        *cell = HeapObject::Value(v);
        Ok(())
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, cell) in self.cells.iter().enumerate() {
            let what = match cell {
                HeapObject::Expr(_) => "EXPR".to_string(),
                HeapObject::Value(_) => "VALUE".to_string(),
                HeapObject::Error(tag) => format!("ERROR({tag})"),
            };
            out.push_str(&format!("{}: {what}\n", Loc(i)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alloc_and_read() {
        let mut h = Heap::new();
        let a = h.alloc(HeapObject::Expr(Expr::Int(1)));
        let b = h.alloc(HeapObject::Expr(Expr::Loc(a)));
        assert_ne!(a, b);
        assert!(matches!(h.get(a), Ok(HeapObject::Expr(Expr::Int(1)))));
        assert!(matches!(h.get(b), Ok(HeapObject::Expr(Expr::Loc(l))) if *l == a));
        assert_eq!(h.get(Loc(7)).unwrap_err(), HeapError::Dangling(Loc(7)));
    }

    #[test]
    fn blackhole_and_restore() {
        let mut h = Heap::new();
        let a = h.alloc(HeapObject::Expr(Expr::Int(1)));
        let old = h.blackhole(a, SentinelTag::Constraint).unwrap();
        assert!(matches!(h.get(a), Ok(HeapObject::Error(SentinelTag::Constraint))));
        h.restore(a, old).unwrap();
        assert!(matches!(h.get(a), Ok(HeapObject::Expr(Expr::Int(1)))));
    }

    #[test]
    fn memoization_is_write_once() {
        let mut h = Heap::new();
        let a = h.alloc(HeapObject::Expr(Expr::Int(1)));
        h.blackhole(a, SentinelTag::Cycle).unwrap();
        h.memoize(a, Value::Int(1)).unwrap();
        assert_eq!(h.memoize(a, Value::Int(2)).unwrap_err(), HeapError::AlreadyMemoized(a));
        assert!(matches!(h.get(a), Ok(HeapObject::Value(Value::Int(1)))));
    }

    #[test]
    fn dump_format() {
        let mut h = Heap::new();
        h.alloc(HeapObject::Expr(Expr::Unit));
        h.alloc(HeapObject::Value(Value::Unit));
        h.alloc(HeapObject::Error(SentinelTag::Cycle));
        assert_eq!(h.dump(), "l0: EXPR\nl1: VALUE\nl2: ERROR(cycle)\n");
    }

    proptest! {
        #[test]
        fn heap_only_grows(ops in proptest::collection::vec(0u8..4, 1..60)) {
            let mut h = Heap::new();
            let mut prev = 0;
            for op in ops {
                match op {
                    0 => { h.alloc(HeapObject::Expr(Expr::Unit)); }
                    1 if !h.is_empty() => { h.blackhole(Loc(0), SentinelTag::Cycle).unwrap(); }
                    2 if !h.is_empty() => { let _ = h.memoize(Loc(h.len() - 1), Value::Unit); }
                    _ => { let _ = h.get(Loc(0)); }
                }
                prop_assert!(h.len() >= prev);
                prev = h.len();
            }
        }
    }
}
