#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mnm_core::cli::main_with_args;
use mnm_core::corpus::{corpus_vocabulary, ingest_annotations, AnnotatedDocument, WordEmbeddings};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_docs() -> Vec<AnnotatedDocument> {
    let text = std::fs::read_to_string(fixture_dir().join("corpus.pubtator")).unwrap();
    ingest_annotations(text.as_bytes()).unwrap().documents
}

/// Seeded random vectors over the lower-cased corpus vocabulary, the same
/// way the CLI builds them when no vector file is configured.
pub fn random_words(docs: &[AnnotatedDocument], dim: usize, seed: u64) -> WordEmbeddings {
    let vocab = corpus_vocabulary(docs);
    WordEmbeddings::random(vocab.iter().map(String::as_str), dim, seed).unwrap()
}

/// Copies the bundled fixtures into `dir`.
pub fn stage_fixtures(dir: &Path) {
    for e in std::fs::read_dir(fixture_dir()).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), dir.join(e.file_name())).unwrap();
    }
}

pub fn mnm(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("mnm").chain(args.iter().copied()))
}

pub const CHAIN: [&str; 9] = [
    "preprocess",
    "kb-train",
    "train",
    "predict",
    "rules",
    "merge",
    "evaluate",
    "attention-dump",
    "top-words",
];

/// Runs the whole command chain on fixtures staged in `dir`; returns the
/// first failing command and its exit code.
pub fn run_chain(dir: &Path, threads: usize) -> Result<(), (String, i32)> {
    stage_fixtures(dir);
    let config = dir.join("config.toml");
    let config = config.to_str().unwrap();
    let threads = threads.to_string();
    for cmd in CHAIN {
        let code = mnm(&[cmd, "--config", config, "--threads", &threads]);
        if code != 0 {
            return Err((cmd.to_string(), code));
        }
    }
    Ok(())
}
