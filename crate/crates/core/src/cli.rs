//! Command-line driver and golden-file corpus runner.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ast::Expr;
use crate::constraints::{strategy_by_name, STRATEGY_NAMES};
use crate::effects::{EffectKind, LogEntry};
use crate::eval_base::{ErrorKind, Machine, Mode, RuntimeError, Value, Variant, DEFAULT_STEP_BUDGET};
use crate::eval_constrained::{enumerate_choices, Chooser};
use crate::parser::{desugar, parse, ParseError, Program};

const STACK_SIZE: usize = 512 * 1024 * 1024;
const MAX_ENUMERATION_RUNS: usize = 10_000;

#[derive(Parser, Debug)]
#[command(name = "lyre", version, about = "Interpreter for a lazy mixin calculus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a program.
    Run(RunArgs),
    /// Check every `<name>.lyre` in a directory against `<name>.expected`.
    Corpus { dir: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Lazy,
    Cbn,
    Eager,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Lazy => Variant::Lazy,
            VariantArg::Cbn => Variant::Cbn,
            VariantArg::Eager => Variant::Eager,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "pure-lazy", value_parser = STRATEGY_NAMES)]
    pub strategy: String,
    #[arg(long, value_enum, default_value = "lazy")]
    pub variant: VariantArg,
    /// Print every effect event as `<seq>\t<kind>\t<payload>`.
    #[arg(long)]
    pub trace: bool,
    /// Log constraint rule firings.
    #[arg(long)]
    pub trace_constraints: bool,
    /// Print the global constraint after each close.
    #[arg(long)]
    pub dump_constraints: bool,
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    pub step_budget: u64,
    /// Run under every order of predecessor choices and list the outcomes.
    #[arg(long)]
    pub enumerate: bool,
    /// Print the heap after the run.
    #[arg(long)]
    pub dump_heap: bool,
}

/// Everything a run needs besides the source text.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub strategy: String,
    pub variant: Variant,
    /// Use the unconstrained lazy evaluator even for the lazy variant.
    pub unconstrained: bool,
    pub trace: bool,
    pub trace_constraints: bool,
    pub dump_constraints: bool,
    pub step_budget: u64,
    pub enumerate: bool,
    pub dump_heap: bool,
    /// Apply a fresh alpha-renaming to every literal before running.
    pub refresh: bool,
}

impl Default for RunOptions {
    fn default() -> RunOptions {
        RunOptions {
            strategy: "pure-lazy".to_string(),
            variant: Variant::Lazy,
            unconstrained: false,
            trace: false,
            trace_constraints: false,
            dump_constraints: false,
            step_budget: DEFAULT_STEP_BUDGET,
            enumerate: false,
            dump_heap: false,
            refresh: false,
        }
    }
}

impl From<&RunArgs> for RunOptions {
    fn from(a: &RunArgs) -> RunOptions {
        RunOptions {
            strategy: a.strategy.clone(),
            variant: a.variant.into(),
            trace: a.trace,
            trace_constraints: a.trace_constraints,
            dump_constraints: a.dump_constraints,
            step_budget: a.step_budget,
            enumerate: a.enumerate,
            dump_heap: a.dump_heap,
            ..RunOptions::default()
        }
    }
}

/// Statistics and outputs of one run, for callers that inspect more than stdout.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub stdout: String,
    pub exit: i32,
    pub result: Option<Result<Value, RuntimeError>>,
    pub events: Vec<String>,
    pub stats: Option<crate::eval_base::Stats>,
}

impl RunReport {
    fn early(line: String, exit: i32) -> RunReport {
        RunReport { stdout: line + "\n", exit, result: None, events: Vec::new(), stats: None }
    }
}

fn parse_error_line(e: &ParseError) -> String {
    let kind = match e {
        ParseError::DuplicateBinder { .. } => "DuplicateBinder",
        _ => "ParseError",
    };
    format!("error: {kind}: {e}")
}

fn has_annotation(p: &Program) -> bool {
    let mut found = false;
    for b in &p.bindings {
        b.expr.walk(&mut |e| {
            if let Expr::Struct(lit) = e {
                found |= lit.annotation.is_some();
            }
        });
    }
    found
}

fn exit_code(e: &RuntimeError) -> i32 {
    if e.kind == ErrorKind::StepBudgetExceeded {
        3
    } else {
        1
    }
}

/// Parses, checks flags, and evaluates on a thread with a large stack.
pub fn run_source(source: &str, opts: &RunOptions) -> RunReport {
    let source = source.to_string();
    let opts = opts.clone();
    std::thread::Builder::new()
        .stack_size(STACK_SIZE)
        .spawn(move || run_here(&source, &opts))
        .expect("spawn evaluation thread")
        .join()
        .unwrap_or_else(|_| RunReport::early("error: InvariantViolation: evaluator panicked".into(), 1))
}

fn run_here(source: &str, opts: &RunOptions) -> RunReport {
    let program = match parse(source) {
        Ok(p) => p,
        Err(e) => return RunReport::early(parse_error_line(&e), 2),
    };
    if opts.variant != Variant::Lazy {
        let conflict = if opts.strategy != "pure-lazy" {
            Some(format!("strategy {} requires the lazy variant", opts.strategy))
        } else if has_annotation(&program) {
            Some("constraint annotations require the lazy variant".to_string())
        } else if opts.enumerate {
            Some("--enumerate requires the lazy variant".to_string())
        } else {
            None
        };
        if let Some(c) = conflict {
            return RunReport::early(format!("error: FlagConflict: {c}"), 2);
        }
    }
    let mut expr = match desugar(&program) {
        Ok(e) => e,
        Err(e) => return RunReport::early(format!("error: UnknownConstraintTarget: {e}"), 2),
    };
    if opts.refresh {
        expr = expr.refresh_literals();
    }
    if opts.enumerate {
        return enumerate(&expr, opts);
    }
    let mut m = machine(opts, Chooser::Smallest);
    let result = m.eval(&expr);
    let mut out = String::new();
    for entry in m.trace.entries() {
        match entry {
            LogEntry::Effect(ev) if opts.trace => out.push_str(&ev.serialize()),
            LogEntry::Effect(ev) if ev.kind == EffectKind::Print => out.push_str(&ev.payload),
            LogEntry::Effect(_) => continue,
            LogEntry::Note(n) => out.push_str(n),
        }
        out.push('\n');
    }
    let exit = match &result {
        Ok(v) => {
            let _ = writeln!(out, "result: {v}");
            0
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            exit_code(e)
        }
    };
    if opts.dump_heap {
        out.push_str(&m.heap.dump());
    }
    RunReport {
        stdout: out,
        exit,
        events: m.trace.events().map(|e| e.serialize()).collect(),
        stats: Some(m.stats.clone()),
        result: Some(result),
    }
}

fn machine(opts: &RunOptions, chooser: Chooser) -> Machine {
    let mode = match opts.variant {
        Variant::Lazy if !opts.unconstrained => Mode::Constrained,
        v => Mode::Base(v),
    };
    let strategy = strategy_by_name(&opts.strategy).expect("strategy names are validated");
    let mut m = Machine::with_strategy(mode, Arc::clone(&strategy));
    m.set_step_budget(opts.step_budget);
    m.cx.chooser = chooser;
    m.cx.trace_constraints = opts.trace_constraints;
    m.cx.dump_constraints = opts.dump_constraints;
    m
}

fn enumerate(expr: &Expr, opts: &RunOptions) -> RunReport {
    let (outcomes, complete) = enumerate_choices(MAX_ENUMERATION_RUNS, |chooser| {
        let mut m = machine(opts, chooser);
        let result = match m.eval(expr) {
            Ok(v) => format!("result: {v}"),
            Err(e) => format!("error: {}", e.kind),
        };
        let line = format!("trace: {} | {result}", m.trace.prints().join(" "));
        (line, std::mem::take(&mut m.cx.chooser))
    });
    let runs = outcomes.len();
    let mut distinct: Vec<String> = Vec::new();
    for o in outcomes {
        if !distinct.contains(&o) {
            distinct.push(o);
        }
    }
    let mut out = String::new();
    for line in &distinct {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "explored {runs} runs, {} distinct outcomes", distinct.len());
    if !complete {
        let _ = writeln!(out, "enumeration stopped after {runs} runs");
    }
    RunReport { stdout: out, exit: 0, result: None, events: Vec::new(), stats: None }
}

/// Expected output of a corpus program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Golden {
    pub flags: Vec<String>,
    pub exit: i32,
    pub lines: Vec<String>,
}

pub fn parse_golden(text: &str) -> Result<Golden, String> {
    let mut flags = Vec::new();
    let mut exit = 0;
    let mut lines = text.lines();
    for line in lines.by_ref() {
        if line == "---" {
            let lines = lines.map(str::to_string).collect();
            return Ok(Golden { flags, exit, lines });
        }
        if let Some(f) = line.strip_prefix("flags:") {
            flags = f.split_whitespace().map(str::to_string).collect();
        } else if let Some(e) = line.strip_prefix("exit:") {
            exit = e.trim().parse().map_err(|_| format!("bad exit line {line:?}"))?;
        } else if !line.trim().is_empty() {
            return Err(format!("unexpected header line {line:?}"));
        }
    }
    Err("missing `---` separator".to_string())
}

/// Error lines are compared on their `error: <Kind>` prefix only.
fn line_matches(expected: &str, actual: &str) -> bool {
    match expected.strip_prefix("error: ") {
        Some(rest) => {
            let kind = rest.split(':').next().unwrap_or(rest);
            actual.strip_prefix("error: ").and_then(|a| a.split(':').next()) == Some(kind)
        }
        None => expected == actual,
    }
}

pub fn golden_matches(g: &Golden, stdout: &str, exit: i32) -> bool {
    let actual: Vec<&str> = stdout.lines().collect();
    exit == g.exit
        && actual.len() == g.lines.len()
        && g.lines.iter().zip(&actual).all(|(e, a)| line_matches(e, a))
}

/// Options for a program given its flag list, as written in a golden file.
pub fn options_from_flags(file: &Path, flags: &[String]) -> Result<RunOptions, String> {
    let mut argv: Vec<OsString> = vec!["lyre".into(), "run".into(), file.into()];
    argv.extend(flags.iter().map(OsString::from));
    match Cli::try_parse_from(argv) {
        Ok(Cli { command: Command::Run(args) }) => Ok(RunOptions::from(&args)),
        Ok(_) => unreachable!(),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct CorpusOutcome {
    pub name: String,
    pub passed: bool,
    pub message: String,
}

pub fn check_program(lyre: &Path) -> CorpusOutcome {
    let name = lyre.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let fail = |message: String| CorpusOutcome { name: name.clone(), passed: false, message };
    let golden = match std::fs::read_to_string(lyre.with_extension("expected")) {
        Ok(t) => match parse_golden(&t) {
            Ok(g) => g,
            Err(e) => return fail(e),
        },
        Err(e) => return fail(format!("no expected file: {e}")),
    };
    let source = match std::fs::read_to_string(lyre) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let opts = match options_from_flags(lyre, &golden.flags) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let report = run_source(&source, &opts);
    if golden_matches(&golden, &report.stdout, report.exit) {
        CorpusOutcome { name, passed: true, message: String::new() }
    } else {
        fail(format!(
            "expected exit {} and\n{}\ngot exit {} and\n{}",
            golden.exit,
            golden.lines.join("\n"),
            report.exit,
            report.stdout.trim_end()
        ))
    }
}

/// Corpus programs in a directory, sorted by name.
pub fn corpus_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "lyre"))
        .collect();
    files.sort();
    Ok(files)
}

/// Checks every program, spreading the work over the available cores.
pub fn run_corpus(dir: &Path) -> std::io::Result<Vec<CorpusOutcome>> {
    let files = corpus_files(dir)?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(files.len().max(1));
    let chunk = files.len().div_ceil(workers).max(1);
    let mut outcomes: Vec<CorpusOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|f| check_program(f)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("corpus worker")).collect()
    });
    outcomes.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(outcomes)
}

/// Entry point shared by the binary and tests. Returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => {
            let source = match std::fs::read_to_string(&args.file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", args.file.display());
                    return 2;
                }
            };
            let report = run_source(&source, &RunOptions::from(&args));
            print!("{}", report.stdout);
            report.exit
        }
        Command::Corpus { dir } => match run_corpus(&dir) {
            Ok(outcomes) => {
                let failed = outcomes.iter().filter(|o| !o.passed).count();
                for o in &outcomes {
                    if o.passed {
                        println!("PASS {}", o.name);
                    } else {
                        println!("FAIL {}\n{}", o.name, o.message);
                    }
                }
                println!("{} passed, {failed} failed", outcomes.len() - failed);
                i32::from(failed > 0)
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", dir.display());
                2
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, opts: &RunOptions) -> RunReport {
        run_source(src, opts)
    }

    #[test]
    fn result_and_prints() {
        let r = run(r#"let main = print "hi"; [1; 2]"#, &RunOptions::default());
        assert_eq!(r.stdout, "hi\nresult: [1; 2]\n");
        assert_eq!(r.exit, 0);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run("let main = (", &RunOptions::default()).exit, 2);
        let r = run("mixin M = close({ let c = c }) let main = M.c", &RunOptions::default());
        assert_eq!(r.exit, 1);
        assert!(r.stdout.starts_with("error: CyclicDependency: "));
        let opts = RunOptions { step_budget: 50, ..RunOptions::default() };
        assert_eq!(run("let f n = f n let main = f 0", &opts).exit, 3);
        let r = run("let main = { } order {(a, b)}", &RunOptions::default());
        assert_eq!(r.exit, 2);
        assert!(r.stdout.starts_with("error: UnknownConstraintTarget"));
    }

    #[test]
    fn deep_recursion_is_a_budget_error() {
        let src = "let f n = if n = 0 then 0 else 1 + f (n - 1) let main = f 1000000";
        let r = run(src, &RunOptions::default());
        assert_eq!(r.exit, 3, "{}", r.stdout);
        let src = "let f n = if n = 0 then 0 else 1 + f (n - 1) let main = f 5000";
        assert_eq!(run(src, &RunOptions::default()).stdout, "result: 5000\n");
    }

    #[test]
    fn flag_conflicts() {
        let opts = RunOptions { variant: Variant::Eager, strategy: "recmod".into(), ..RunOptions::default() };
        let r = run("let main = 1", &opts);
        assert_eq!(r.exit, 2);
        assert!(r.stdout.starts_with("error: FlagConflict"));
        let opts = RunOptions { variant: Variant::Cbn, ..RunOptions::default() };
        let r = run("mixin M = { let a = 1 } order {(a, a)} let main = 1", &opts);
        assert_eq!(r.exit, 2);
    }

    #[test]
    fn trace_serialization() {
        let opts = RunOptions { trace: true, ..RunOptions::default() };
        let r = run(r#"let main = print 1; createForm "F""#, &opts);
        assert_eq!(r.stdout, "1\tprint\t1\n2\twidget-create\tform#1 \"F\"\nresult: <form#1>\n");
    }

    #[test]
    fn constraint_tracing() {
        let src = "mixin M = close({ let a = 1 let b = a } order {(a, b)}) let main = M.b";
        let opts = RunOptions { trace_constraints: true, dump_constraints: true, ..RunOptions::default() };
        let out = run(src, &opts).stdout;
        assert!(out.contains("EDGE "), "{out}");
        assert!(out.contains("FORCE "));
        assert!(out.contains("MEMO "));
        assert!(out.contains("constraints after close:"));
    }

    #[test]
    fn golden_format() {
        let g = parse_golden("flags: --variant cbn\nexit: 1\n---\nhi\nerror: NameClash: whatever\n").unwrap();
        assert_eq!(g.flags, vec!["--variant", "cbn"]);
        assert!(golden_matches(&g, "hi\nerror: NameClash: both operands define x\n", 1));
        assert!(!golden_matches(&g, "hi\nerror: FreezeMismatch: x\n", 1));
        assert!(!golden_matches(&g, "hi\nerror: NameClash: x\n", 0));
        assert!(parse_golden("exit: 0\n").is_err());
    }

    #[test]
    fn flags_parse_like_the_command_line() {
        let o = options_from_flags(Path::new("x.lyre"), &["--strategy".into(), "recmod".into()]).unwrap();
        assert_eq!(o.strategy, "recmod");
        assert!(options_from_flags(Path::new("x.lyre"), &["--strategy".into(), "nope".into()]).is_err());
    }
}
