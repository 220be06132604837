//! Close and location evaluation under a global constraint.
//!
//! Closing allocates three cells per component: `l` holds the body, `l′`
//! (internal access) and `l″` (external access) hold indirections to `l`.
//! Forcing a location first fires any trigger set containing it, then
//! evaluates its predecessors one edge at a time, and only then evaluates
//! the cell itself.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::ast::{Expr, Ident, Loc, Structure};
use crate::constraints::{instantiate, instantiate_delta, GlobalConstraint, Housing, Strategy};
use crate::eval_base::{ErrorKind, EvalResult, Machine, RuntimeError};
use crate::heap::{HeapObject, SentinelTag};

/// Picks which predecessor edge to consume when several are pending.
#[derive(Clone, Debug, Default)]
pub enum Chooser {
    /// The predecessor with the smallest location.
    #[default]
    Smallest,
    /// Follows `script` at successive choice points, then picks the first;
    /// records every `(choice, options)` pair with more than one option.
    Scripted { script: Vec<usize>, pos: usize, taken: Vec<(usize, usize)> },
}

impl Chooser {
    pub fn scripted(script: Vec<usize>) -> Chooser {
        Chooser::Scripted { script, pos: 0, taken: Vec::new() }
    }

    fn choose(&mut self, n: usize) -> usize {
        match self {
            Chooser::Smallest => 0,
            Chooser::Scripted { script, pos, taken } => {
                if n <= 1 {
                    return 0;
                }
                let c = script.get(*pos).copied().unwrap_or(0).min(n - 1);
                *pos += 1;
                taken.push((c, n));
                c
            }
        }
    }

    pub fn taken(&self) -> &[(usize, usize)] {
        match self {
            Chooser::Smallest => &[],
            Chooser::Scripted { taken, .. } => taken,
        }
    }
}

pub struct ConstraintState {
    pub strategy: Arc<dyn Strategy>,
    pub pi: GlobalConstraint,
    pub chooser: Chooser,
    pub trace_constraints: bool,
    pub dump_constraints: bool,
    /// Number of predecessor detours currently in progress.
    detour_depth: usize,
    /// Detour depth at which each cell under evaluation started.
    activation: HashMap<Loc, usize>,
}

impl ConstraintState {
    pub fn new(strategy: Arc<dyn Strategy>) -> ConstraintState {
        ConstraintState {
            strategy,
            pi: GlobalConstraint::new(),
            chooser: Chooser::Smallest,
            trace_constraints: false,
            dump_constraints: false,
            detour_depth: 0,
            activation: HashMap::new(),
        }
    }
}

impl Machine {
    fn constraint_note(&mut self, text: String) {
        if self.cx.trace_constraints {
            self.trace.note(text);
        }
    }

    pub(crate) fn ceval_close(&mut self, s: &Structure) -> EvalResult<Structure> {
        let defined: Vec<Ident> = s.binding.keys().cloned().collect();
        let n = defined.len();
        let base = self.heap.next_loc().0;
        let at = |off: usize| -> HashMap<Ident, Loc> {
            defined.iter().enumerate().map(|(i, x)| (x.clone(), Loc(base + off + i))).collect()
        };
        let (ordinary, internal, external) = (at(0), at(n), at(2 * n));
        for body in s.binding.values() {
            self.heap.alloc(HeapObject::Expr(body.subst_locs(&internal)));
        }
        for _ in 0..2 {
            for x in &defined {
                self.heap.alloc(HeapObject::Expr(Expr::Loc(ordinary[x])));
            }
        }
        let housing = Housing { ordinary: &ordinary, internal: &internal, external: &external };
        let unhoused = |e: crate::constraints::UnhousedAtom| {
            RuntimeError::new(ErrorKind::UnhousedAtom, e.to_string())
        };
        let edges = instantiate(&s.constraint.theta, &housing).map_err(unhoused)?;
        let sets = instantiate_delta(&s.constraint.delta, &housing).map_err(unhoused)?;
        self.cx.pi.add_edges(edges);
        for set in sets {
            self.cx.pi.add_trigger(set);
        }
        if self.cx.dump_constraints {
            let dump = self.cx.pi.render();
            self.trace.note(format!("constraints after close:\n{}", dump.trim_end()));
        }
        let binding = defined.iter().map(|x| (x.clone(), Expr::Loc(external[x]))).collect();
        let defined_set: BTreeSet<Ident> = defined.iter().cloned().collect();
        Ok(Structure {
            input: Default::default(),
            output: s.output.clone(),
            binding,
            constraint: self.cx.strategy.mu(&defined_set, &s.constraint),
        })
    }

    pub(crate) fn ceval_loc(&mut self, l: Loc) -> EvalResult {
        loop {
            if self.cx.pi.in_trigger(l) {
                if matches!(self.heap.get(l)?, HeapObject::Value(_)) {
                    self.stats.exclusivity_violations += 1;
                }
                let set = self.cx.pi.take_trigger(l).expect("trigger set present");
                let members: Vec<String> = set.iter().map(|m| m.to_string()).collect();
                self.constraint_note(format!("TRIGGER {{{}}} fired", members.join(",")));
                let v = self.eval_loc(l)?;
                for m in set.into_iter().filter(|m| *m != l) {
                    self.eval_loc(m)?;
                }
                return Ok(v);
            }
            match self.heap.get(l)? {
                HeapObject::Value(v) => {
                    let v = v.clone();
                    self.stats.memo_hits += 1;
                    if self.cx.pi.has_edge_into(l) {
                        self.stats.memo_edge_violations += 1;
                    }
                    debug_assert!(!self.cx.pi.has_edge_into(l), "edge into evaluated {l}");
                    return Ok(v);
                }
                HeapObject::Error(SentinelTag::Constraint) => {
                    return Err(RuntimeError::new(
                        ErrorKind::ConstraintViolation,
                        format!("{l} is demanded before the components ordered ahead of it"),
                    ));
                }
                HeapObject::Error(SentinelTag::Cycle) => {
                    let started = self.cx.activation.get(&l).copied().unwrap_or(usize::MAX);
                    return Err(if self.cx.detour_depth > started {
                        RuntimeError::new(
                            ErrorKind::ConstraintViolation,
                            format!("{l} is demanded by a component ordered ahead of it"),
                        )
                    } else {
                        RuntimeError::new(
                            ErrorKind::CyclicDependency,
                            format!("{l} is needed to compute itself"),
                        )
                    });
                }
                HeapObject::Expr(_) => {}
            }
            let preds = self.cx.pi.predecessors(l);
            if !preds.is_empty() {
                let from = preds[self.cx.chooser.choose(preds.len())];
                let displaced = self.heap.blackhole(l, SentinelTag::Constraint)?;
                self.cx.pi.remove_edge(from, l);
                self.constraint_note(format!("EDGE {from} -> {l} consumed"));
                self.cx.detour_depth += 1;
                let r = self.eval_loc(from);
                self.cx.detour_depth -= 1;
                self.heap.restore(l, displaced)?;
                r?;
                continue;
            }
            self.constraint_note(format!("FORCE {l}"));
            let HeapObject::Expr(e) = self.heap.blackhole(l, SentinelTag::Cycle)? else {
                unreachable!("checked above")
            };
            self.cx.activation.insert(l, self.cx.detour_depth);
            *self.stats.cell_evals.entry(l).or_default() += 1;
            let r = self.eval(&e);
            self.cx.activation.remove(&l);
            let v = r?;
            self.heap.memoize(l, v.clone())?;
            self.constraint_note(format!("MEMO {l}"));
            return Ok(v);
        }
    }
}

/// Explores every sequence of predecessor choices depth first. `run` executes
/// the program under a scripted chooser and reports the choices it made.
/// Returns the outcomes and whether the exploration finished within `max_runs`.
pub fn enumerate_choices<T>(
    max_runs: usize,
    mut run: impl FnMut(Chooser) -> (T, Chooser),
) -> (Vec<T>, bool) {
    let mut outcomes = Vec::new();
    let mut script: Vec<usize> = Vec::new();
    loop {
        if outcomes.len() >= max_runs {
            return (outcomes, false);
        }
        let (outcome, chooser) = run(Chooser::scripted(script.clone()));
        outcomes.push(outcome);
        let taken = chooser.taken().to_vec();
        let Some(i) = taken.iter().rposition(|(c, n)| c + 1 < *n) else {
            return (outcomes, true);
        };
        script = taken[..i].iter().map(|(c, _)| *c).collect();
        script.push(taken[i].0 + 1);
    }
}
