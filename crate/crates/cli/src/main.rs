//! `typometrics` — corpus-scale typology metrics from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "typometrics", version, about = "Subword complexity, word-order entropy, language sampling and pseudo-likelihood scoring")]
struct Cli {
    /// Seed for every random choice (sampling, shuffles). Defaults to
    /// 0, or to the config's seed for `pipeline`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap worker parallelism; outputs are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Subcommand)]
enum CommandKind {
    /// Train or apply a BPE tokenizer.
    Tokenizer {
        #[command(subcommand)]
        command: TokenizerCommand,
    },
    /// Corpus or treebank metrics.
    Metrics {
        #[command(subcommand)]
        command: MetricsCommand,
    },
    /// Parse a CoNLL-U file and report sentence/drop counts.
    Parse(commands::parse::ParseArgs),
    /// Select a typologically diverse language sample.
    Sample(commands::sample::SampleArgs),
    /// Score grammaticality minimal pairs by pseudo-log-likelihood.
    Blimp(commands::blimp::BlimpArgs),
    /// Rank-correlate metric tables against performance tables.
    Correlate(commands::correlate::CorrelateArgs),
    /// Emit long-form scatter data for one metric and task.
    Scatter(commands::correlate::ScatterArgs),
    /// Run the whole corpus + treebank metric sequence from a config.
    Pipeline(commands::pipeline::PipelineArgs),
}

#[derive(Subcommand)]
enum TokenizerCommand {
    /// Train a BPE model on a line corpus.
    Train(commands::tokenizer::TrainArgs),
    /// Tokenize stdin to stdout, tokens space-joined per line.
    Encode(commands::tokenizer::EncodeArgs),
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Sliding-window MATTR / AV / eta plus fertility over a corpus.
    Corpus(commands::metrics::CorpusArgs),
    /// HDE / ROE / SO-ROE over a CoNLL-U treebank.
    Ud(commands::metrics::UdArgs),
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        CommandKind::Tokenizer { command } => match command {
            TokenizerCommand::Train(args) => commands::tokenizer::train(args, seed),
            TokenizerCommand::Encode(args) => commands::tokenizer::encode(args),
        },
        CommandKind::Metrics { command } => match command {
            MetricsCommand::Corpus(args) => commands::metrics::corpus(args, seed),
            MetricsCommand::Ud(args) => commands::metrics::ud(args, seed),
        },
        CommandKind::Parse(args) => commands::parse::run(args),
        CommandKind::Sample(args) => commands::sample::run(args, seed),
        CommandKind::Blimp(args) => commands::blimp::run(args, seed),
        CommandKind::Correlate(args) => commands::correlate::correlate(args, seed),
        CommandKind::Scatter(args) => commands::correlate::scatter(args, seed),
        CommandKind::Pipeline(args) => commands::pipeline::run(args, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Clap renders help to stdout, errors to stderr.
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    let run = || match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    };
    match threads {
        Some(n) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool,
                Err(err) => {
                    eprintln!("error: {err}");
                    return ExitCode::from(2);
                }
            };
            pool.install(run)
        }
        None => run(),
    }
}
