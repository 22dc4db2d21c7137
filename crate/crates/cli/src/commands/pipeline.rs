use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use typometrics::corpus::{StreamOptions, WindowAccumulator, WindowConfig};
use typometrics::tokenizer::{train_bpe, PretokenizerRule, TokenizerModel};
use typometrics::word_order::{WordOrderOptions, WordOrderReport};

use crate::manifest::ManifestBuilder;

#[derive(Args)]
pub struct PipelineArgs {
    /// Pipeline config (TOML, key = value sections).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's out_dir).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_vocab_size() -> usize {
    4096
}

fn default_window() -> usize {
    1000
}

fn default_step() -> usize {
    1
}

fn default_max_deps() -> usize {
    5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineConfig {
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out_dir")]
    out_dir: String,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default = "default_step")]
    step: usize,
    #[serde(default = "default_vocab_size")]
    vocab_size: usize,
    /// 0 means use the whole corpus.
    #[serde(default)]
    sample_lines: usize,
    /// 0 means use the whole treebank.
    #[serde(default)]
    sentences: usize,
    #[serde(default)]
    punct_split: bool,
    #[serde(default)]
    prefix: bool,
    #[serde(default)]
    root_only: bool,
    #[serde(default = "default_max_deps")]
    max_deps: usize,
    languages: Vec<LanguageConfig>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LanguageConfig {
    code: String,
    corpus: String,
    treebank: String,
    vocab_size: Option<usize>,
}

struct LanguageRow {
    code: String,
    word_order: WordOrderReport,
    mattr: f64,
    av: f64,
    eta: f64,
    ttr: f64,
    fertility: f64,
    tokens: u64,
    windows: u64,
}

/// Run the full metric sequence for every configured language:
/// sample corpus lines, train a tokenizer, window metrics + fertility,
/// treebank word-order metrics, one CSV row per language.
pub fn run(args: PipelineArgs, seed: Option<u64>) -> anyhow::Result<()> {
    let config_dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let raw = std::fs::read_to_string(&args.config)
        .map_err(|e| anyhow::anyhow!("read {}: {e}", args.config.display()))?;
    let config: PipelineConfig =
        toml::from_str(&raw).map_err(|e| anyhow::anyhow!("parse {}: {e}", args.config.display()))?;
    let seed = seed.unwrap_or(config.seed);
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| config_dir.join(&config.out_dir));
    let window_config = WindowConfig::new(config.window, config.step)?;
    let rule = if config.punct_split {
        PretokenizerRule::WhitespacePunct
    } else {
        PretokenizerRule::Whitespace
    };

    let mut manifest = ManifestBuilder::new("pipeline", seed)
        .flag("window", config.window)
        .flag("step", config.step)
        .flag("sample_lines", config.sample_lines)
        .flag("sentences", config.sentences)
        .input(&args.config)?;

    let mut rows = Vec::new();
    for language in &config.languages {
        let corpus_path = config_dir.join(&language.corpus);
        let treebank_path = config_dir.join(&language.treebank);
        manifest = manifest.input(&corpus_path)?.input(&treebank_path)?;

        // Two passes over the corpus (train, then measure); only a
        // reservoir sample is ever held in memory.
        let sampled: Option<Vec<String>> = if config.sample_lines > 0 {
            Some(super::sample_file_lines(
                &corpus_path,
                config.sample_lines,
                seed,
            )?)
        } else {
            None
        };
        let vocab_size = language.vocab_size.unwrap_or(config.vocab_size);
        let model = match &sampled {
            Some(lines) => train_bpe(lines.iter().map(String::as_str), vocab_size, rule)?,
            None => {
                let mut lines = super::read_lines(&corpus_path)?;
                let mut io_error = None;
                let model = train_bpe(
                    std::iter::from_fn(|| match lines.next()? {
                        Ok(line) => Some(line),
                        Err(e) => {
                            io_error = Some(e);
                            None
                        }
                    }),
                    vocab_size,
                    rule,
                )?;
                if let Some(e) = io_error {
                    anyhow::bail!("read {}: {e}", corpus_path.display());
                }
                model
            }
        };

        let mut acc = WindowAccumulator::new(
            window_config,
            StreamOptions {
                unknown: Some(model.unknown_id()),
                ..StreamOptions::default()
            },
        );
        let mut tokens = 0u64;
        let mut words = 0u64;
        let mut feed = |model: &TokenizerModel, line: &str| {
            let stream = model.encode(line);
            tokens += stream.len() as u64;
            words += stream.word_count() as u64;
            for id in stream.iter() {
                acc.push(id);
            }
        };
        match &sampled {
            Some(lines) => {
                for line in lines {
                    feed(&model, line);
                }
            }
            None => {
                for line in super::read_lines(&corpus_path)? {
                    feed(&model, &line?);
                }
            }
        }
        let metrics = acc
            .finish()
            .map_err(|e| anyhow::anyhow!("{}: {e}", language.code))?;
        if words == 0 {
            anyhow::bail!("{}: no words in corpus", language.code);
        }

        let word_order = super::metrics::compute_ud_report(
            &treebank_path,
            config.sentences,
            config.prefix,
            seed,
            WordOrderOptions {
                max_dependents: config.max_deps,
                root_only_so: config.root_only,
            },
        )
        .map_err(|e| anyhow::anyhow!("{}: {e}", language.code))?;

        rows.push(LanguageRow {
            code: language.code.clone(),
            word_order,
            mattr: metrics.mattr,
            av: metrics.av,
            eta: metrics.eta,
            ttr: metrics.ttr_global,
            fertility: tokens as f64 / words as f64,
            tokens: metrics.token_count,
            windows: metrics.window_count,
        });
    }

    std::fs::create_dir_all(&out_dir)?;
    let csv_path = out_dir.join("metrics.csv");
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "language",
        "hde",
        "roe",
        "so_roe",
        "av",
        "eta",
        "mattr",
        "ttr",
        "fertility",
        "tokens",
        "windows",
        "sentences",
    ])?;
    for row in &rows {
        wtr.write_record([
            row.code.as_str(),
            &row.word_order.hde.to_string(),
            &row.word_order.roe.to_string(),
            &row.word_order.so_roe.map(|v| v.to_string()).unwrap_or_default(),
            &row.av.to_string(),
            &row.eta.to_string(),
            &row.mattr.to_string(),
            &row.ttr.to_string(),
            &row.fertility.to_string(),
            &row.tokens.to_string(),
            &row.windows.to_string(),
            &row.word_order.sentence_count.to_string(),
        ])?;
    }
    let csv_text = String::from_utf8(wtr.into_inner()?)?;
    std::fs::write(&csv_path, &csv_text)?;
    manifest.write_sidecar(&csv_path)?;
    eprintln!("wrote {}", csv_path.display());
    Ok(())
}
