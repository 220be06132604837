//! Invariants checked on randomly generated two-module programs.

use lyre::{run_source, RunOptions, RunReport, Variant};
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Component {
    local: Vec<usize>,
    remote: Vec<usize>,
}

#[derive(Clone, Debug)]
struct Gen {
    m: Vec<Component>,
    n: Vec<Component>,
    order: Vec<(usize, usize, u8)>,
    roots: Vec<(bool, usize)>,
}

fn component(size: usize) -> impl Strategy<Value = Component> {
    (prop::collection::vec(0..size, 0..3), prop::collection::vec(0..size, 0..2))
        .prop_map(|(local, remote)| Component { local, remote })
}

fn program() -> impl Strategy<Value = Gen> {
    (2usize..5).prop_flat_map(|size| {
        (
            prop::collection::vec(component(size), size),
            prop::collection::vec(component(size), size),
            prop::collection::vec((0..size, 0..size, 0u8..3), 0..4),
            prop::collection::vec((any::<bool>(), 0..size), 1..3),
        )
            .prop_map(|(m, n, order, roots)| Gen { m, n, order, roots })
    })
}

fn module(name: &str, other: &str, prefix: char, comps: &[Component], annotation: &str) -> String {
    let other_prefix = if prefix == 'a' { 'b' } else { 'a' };
    let mut s = format!("mixin {name} = close({{\n");
    for (i, c) in comps.iter().enumerate() {
        let mut terms = vec![format!("print {i}{}", if prefix == 'a' { 0 } else { 1 })];
        terms.extend(c.local.iter().map(|j| format!("{prefix}{j}")));
        terms.extend(c.remote.iter().map(|j| format!("{other}.{other_prefix}{j}")));
        s.push_str(&format!("  let {prefix}{i} = {}\n", terms.join(" + ")));
    }
    s.push_str(&format!("}}{annotation})\n"));
    s
}

impl Gen {
    fn source(&self, annotated: bool) -> String {
        let annotation = if annotated && !self.order.is_empty() {
            let pairs: Vec<String> = self
                .order
                .iter()
                .map(|&(i, j, mode)| match mode {
                    0 => format!("(a{i}, a{j})"),
                    1 => format!("(a{i}, int a{j})"),
                    _ => format!("(a{i}, ext a{j})"),
                })
                .collect();
            format!(" order {{{}}}", pairs.join(", "))
        } else {
            String::new()
        };
        let roots: Vec<String> =
            self.roots.iter().map(|&(m, i)| if m { format!("M.a{i}") } else { format!("N.b{i}") }).collect();
        format!(
            "{}{}let main = {}\n",
            module("M", "N", 'a', &self.m, &annotation),
            module("N", "M", 'b', &self.n, ""),
            roots.join("; ")
        )
    }
}

const STRATEGIES: [&str; 4] = ["pure-lazy", "recmod", "objinit", "trigger-topdown"];

fn run(src: &str, strategy: &str, extra: impl FnOnce(RunOptions) -> RunOptions) -> RunReport {
    run_source(src, &extra(RunOptions { strategy: strategy.into(), step_budget: 200_000, ..RunOptions::default() }))
}

fn outcome(r: &RunReport) -> String {
    r.stdout.lines().last().map(|l| l.split(':').take(2).collect::<Vec<_>>().join(":")).unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constrained_runs_keep_their_invariants(g in program(), s in 0..STRATEGIES.len()) {
        let src = g.source(true);
        let r = run(&src, STRATEGIES[s], |o| o);
        prop_assert!(r.exit == 0 || r.exit == 1, "{}\n{}", src, r.stdout);
        let stats = r.stats.unwrap();
        prop_assert!(stats.cell_evals.values().all(|&n| n <= 1), "{}", src);
        prop_assert_eq!(stats.memo_edge_violations, 0);
        prop_assert_eq!(stats.exclusivity_violations, 0);
    }

    #[test]
    fn alpha_refresh_preserves_traces(g in program(), s in 0..STRATEGIES.len()) {
        let src = g.source(true);
        let a = run(&src, STRATEGIES[s], |o| o);
        let b = run(&src, STRATEGIES[s], |o| RunOptions { refresh: true, ..o });
        prop_assert_eq!(&a.events, &b.events);
        prop_assert_eq!(a.exit, b.exit);
    }

    #[test]
    fn unannotated_pure_lazy_matches_base_lazy(g in program()) {
        let src = g.source(false);
        let a = run(&src, "pure-lazy", |o| o);
        let b = run(&src, "pure-lazy", |o| RunOptions { unconstrained: true, ..o });
        prop_assert_eq!(&a.events, &b.events, "{}", src);
        prop_assert_eq!(outcome(&a), outcome(&b));
    }

    #[test]
    fn strict_variants_agree_on_terminating_results(g in program()) {
        let src = g.source(false);
        let lazy = run(&src, "pure-lazy", |o| o);
        let cbn = run(&src, "pure-lazy", |o| RunOptions { variant: Variant::Cbn, ..o });
        if lazy.exit == 0 && cbn.exit == 0 {
            prop_assert_eq!(outcome(&lazy), outcome(&cbn));
        }
    }
}
