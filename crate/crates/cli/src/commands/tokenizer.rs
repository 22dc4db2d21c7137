use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::Args;
use typometrics::tokenizer::{train_bpe, PretokenizerRule, TokenizerModel};

use crate::manifest::ManifestBuilder;

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus file, one document per line, UTF-8.
    #[arg(long)]
    pub input: PathBuf,
    /// Target vocabulary size (including base symbols).
    #[arg(long)]
    pub vocab_size: usize,
    /// Model output path (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Also split non-alphanumeric characters into their own pretokens.
    #[arg(long)]
    pub punct_split: bool,
}

pub fn train(args: TrainArgs, seed: u64) -> anyhow::Result<()> {
    let rule = if args.punct_split {
        PretokenizerRule::WhitespacePunct
    } else {
        PretokenizerRule::Whitespace
    };
    let manifest = ManifestBuilder::new("tokenizer train", seed)
        .flag("vocab_size", args.vocab_size)
        .flag("pretokenizer", rule)
        .input(&args.input)?;
    let lines = super::collect_lines(&args.input)?;
    let model = train_bpe(lines.iter().map(String::as_str), args.vocab_size, rule)?;
    super::write_output(&args.out, &(model.to_json()? + "\n"))?;
    manifest.write_sidecar(&args.out)?;
    eprintln!(
        "trained {} tokens, {} merges -> {}",
        model.vocab_len(),
        model.merges().len(),
        args.out.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct EncodeArgs {
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
}

/// stdin -> stdout, token strings space-joined, one line per input line.
pub fn encode(args: EncodeArgs) -> anyhow::Result<()> {
    let model = TokenizerModel::read_json_file(&args.model)?;
    let stdin = std::io::stdin().lock();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    for line in stdin.lines() {
        let line = line?;
        let stream = model.encode(&line);
        let mut first = true;
        for id in stream.iter() {
            if !first {
                out.write_all(b" ")?;
            }
            first = false;
            match model.token(id) {
                Some(tok) => out.write_all(tok.as_bytes())?,
                None => out.write_all("\u{FFFD}".as_bytes())?,
            }
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
