//! Serves a synthetic vocabulary over the bridge protocol on stdin/stdout.
//!
//! Usage: `oasis-toy-bridge VOCAB.json`

use std::io::{self, BufReader};
use std::process::ExitCode;

use oasis_core::stop::bridge::serve;
use oasis_core::stop::SyntheticVocab;

fn load(path: &str) -> Result<SyntheticVocab, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))?;
    let vocab: SyntheticVocab =
        serde_json::from_str(&text).map_err(|e| format!("parsing {path}: {e}"))?;
    vocab.validate().map_err(|e| e.to_string())?;
    Ok(vocab)
}

fn main() -> ExitCode {
    let Some(path) = std::env::args().nth(1) else {
        eprintln!("usage: oasis-toy-bridge VOCAB.json");
        return ExitCode::from(1);
    };
    let vocab = match load(&path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let stdin = BufReader::new(io::stdin().lock());
    match serve(&vocab, &vocab.start, stdin, io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
