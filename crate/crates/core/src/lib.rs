//! Lyre: an interpreter for a lazy mixin calculus with constraint-directed
//! evaluation order.
//!
//! The pipeline is [`parser::parse`], [`parser::desugar`], then
//! [`eval_base::Machine::eval`]. [`cli::run_source`] wires these together
//! the way the `lyre` binary does.

pub mod ast;
pub mod cli;
pub mod constraints;
pub mod effects;
pub mod eval_base;
pub mod eval_constrained;
pub mod heap;
pub mod parser;

pub use cli::{run_source, RunOptions, RunReport};
pub use eval_base::{ErrorKind, Machine, Mode, RuntimeError, Value, Variant};
