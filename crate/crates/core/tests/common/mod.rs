#![allow(dead_code)]

use std::path::{Path, PathBuf};

use lyre::cli::{corpus_files, options_from_flags, parse_golden, Golden};
use lyre::RunOptions;

pub struct CorpusProgram {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub golden: Golden,
    pub opts: RunOptions,
}

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus() -> Vec<CorpusProgram> {
    corpus_files(&corpus_dir())
        .expect("corpus directory")
        .into_iter()
        .map(|path| {
            let golden = parse_golden(&std::fs::read_to_string(path.with_extension("expected")).unwrap()).unwrap();
            let opts = options_from_flags(&path, &golden.flags).unwrap();
            CorpusProgram {
                name: path.file_stem().unwrap().to_string_lossy().into_owned(),
                source: std::fs::read_to_string(&path).unwrap(),
                path,
                golden,
                opts,
            }
        })
        .collect()
}

pub fn program(name: &str) -> CorpusProgram {
    corpus().into_iter().find(|p| p.name == name).unwrap_or_else(|| panic!("no corpus program {name}"))
}

/// Stdout lines that are not `result:` or `error:` lines.
pub fn output_lines(stdout: &str) -> Vec<&str> {
    stdout.lines().filter(|l| !l.starts_with("result: ") && !l.starts_with("error: ")).collect()
}

pub fn error_kind(stdout: &str) -> Option<&str> {
    stdout.lines().find_map(|l| l.strip_prefix("error: ")).map(|r| r.split(':').next().unwrap())
}
