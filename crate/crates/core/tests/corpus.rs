mod common;

use common::corpus;
use lyre::cli::{golden_matches, run_corpus};
use lyre::parser::{parse, pretty_program};
use lyre::run_source;

#[test]
fn golden_outputs() {
    let outcomes = run_corpus(&common::corpus_dir()).unwrap();
    assert!(outcomes.len() >= 20);
    let failures: Vec<String> =
        outcomes.iter().filter(|o| !o.passed).map(|o| format!("{}: {}", o.name, o.message)).collect();
    assert!(failures.is_empty(), "{}", failures.join("\n\n"));
}

#[test]
fn pretty_printing_is_a_fixpoint() {
    for p in corpus() {
        let Ok(program) = parse(&p.source) else { continue };
        let once = pretty_program(&program);
        let again = pretty_program(&parse(&once).unwrap_or_else(|e| panic!("{}: {e}\n{once}", p.name)));
        assert_eq!(once, again, "{}", p.name);
    }
}

#[test]
fn pretty_printed_programs_behave_the_same() {
    for p in corpus() {
        let Ok(program) = parse(&p.source) else { continue };
        let report = run_source(&pretty_program(&program), &p.opts);
        assert!(golden_matches(&p.golden, &report.stdout, report.exit), "{}: {}", p.name, report.stdout);
    }
}
