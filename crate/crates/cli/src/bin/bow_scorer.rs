//! Reference remote scorer speaking the stdio JSON protocol.
//!
//! Reads newline-delimited requests `{"tokens": [ids], "position": i}`
//! on stdin and answers `{"logprob": x}` per line, backed by an
//! add-one-smoothed unigram model over a tokenized corpus. Useful as a
//! protocol peer for `typometrics blimp --scorer cmd:"..."` and as a
//! template for adapters that wrap real masked LMs.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};
use typometrics::scoring::{BagOfWordsScorer, MaskedScorer};
use typometrics::tokenizer::{TokenId, TokenizerModel, TokenStream};

#[derive(Parser)]
#[command(name = "typometrics-bow-scorer", version)]
struct Cli {
    /// Trained tokenizer model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Text corpus used to estimate unigram counts.
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Deserialize)]
struct Request {
    tokens: Vec<TokenId>,
    position: usize,
}

#[derive(Serialize)]
struct Response {
    logprob: f64,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let model = TokenizerModel::read_json_file(&cli.model)?;
    let corpus = std::fs::read_to_string(&cli.corpus)?;
    let streams: Vec<TokenStream> = corpus.lines().map(|line| model.encode(line)).collect();
    let scorer = BagOfWordsScorer::from_streams(&streams, model.vocab_len());

    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for line in stdin.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)?;
        let logprob = scorer.score(&request.tokens, request.position)?;
        serde_json::to_writer(&mut out, &Response { logprob })?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}
