use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use typometrics::conllu::{parse_conllu, take_first, take_sentences};
use typometrics::corpus::{StreamOptions, WindowAccumulator, WindowConfig, WindowMetrics};
use typometrics::tokenizer::TokenizerModel;
use typometrics::word_order::{word_order_report, WordOrderOptions, WordOrderReport};

use crate::manifest::{to_json_with_manifest, ManifestBuilder};

#[derive(Args)]
pub struct CorpusArgs {
    /// Trained tokenizer model (not needed with --ids).
    #[arg(long, required_unless_present = "ids")]
    pub model: Option<PathBuf>,
    /// Corpus file: text lines, or space-separated token ids with --ids.
    #[arg(long)]
    pub input: PathBuf,
    /// Treat the input as pre-tokenized id lines.
    #[arg(long)]
    pub ids: bool,
    /// Reservoir-sample this many lines first (0 = use all).
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    /// Sliding window size in tokens.
    #[arg(long, default_value_t = 1000)]
    pub window: usize,
    /// Window step in tokens.
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    /// Language label for CSV rows.
    #[arg(long, default_value = "und")]
    pub language: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a CSV row (header written when the file is new).
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CorpusReport {
    language: String,
    metrics: WindowMetrics,
}

pub fn corpus(args: CorpusArgs, seed: u64) -> anyhow::Result<()> {
    let config = WindowConfig::new(args.window, args.step)?;
    let mut manifest = ManifestBuilder::new("metrics corpus", seed)
        .flag("window", args.window)
        .flag("step", args.step)
        .flag("sample", args.sample)
        .flag("language", &args.language)
        .flag("ids", args.ids)
        .input(&args.input)?;

    let model = match &args.model {
        Some(path) => {
            manifest = manifest.input(path)?;
            Some(TokenizerModel::read_json_file(path)?)
        }
        None => None,
    };

    let metrics = compute_corpus_metrics(
        &args.input,
        model.as_ref(),
        args.ids,
        args.sample,
        seed,
        config,
    )?;
    let report = CorpusReport {
        language: args.language.clone(),
        metrics: metrics.clone(),
    };
    let json = to_json_with_manifest(&manifest, report)?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &(json + "\n"))?;
            manifest.write_sidecar(path)?;
        }
        None => println!("{json}"),
    }
    if let Some(csv_path) = &args.csv_out {
        append_corpus_csv(csv_path, &args.language, &metrics)?;
        manifest.write_sidecar(csv_path)?;
    }
    Ok(())
}

/// Stream the corpus through the window accumulator; with a model,
/// fertility is tallied on the same pass.
pub fn compute_corpus_metrics(
    input: &Path,
    model: Option<&TokenizerModel>,
    id_lines: bool,
    sample: usize,
    seed: u64,
    config: WindowConfig,
) -> anyhow::Result<WindowMetrics> {
    let opts = StreamOptions {
        unknown: model.map(|m| m.unknown_id()),
        ..StreamOptions::default()
    };
    let mut acc = WindowAccumulator::new(config, opts);
    let mut tokens = 0u64;
    let mut words = 0u64;

    let mut feed_line = |line: &str| -> anyhow::Result<()> {
        if id_lines {
            for field in line.split_whitespace() {
                let id: u32 = field
                    .parse()
                    .map_err(|_| anyhow::anyhow!("bad token id {field:?}"))?;
                acc.push(id);
            }
        } else {
            let model = model.expect("model required for text input");
            let stream = model.encode(line);
            tokens += stream.len() as u64;
            words += stream.word_count() as u64;
            for id in stream.iter() {
                acc.push(id);
            }
        }
        Ok(())
    };

    if sample > 0 {
        for line in super::sample_file_lines(input, sample, seed)? {
            feed_line(&line)?;
        }
    } else {
        for line in super::read_lines(input)? {
            feed_line(&line?)?;
        }
    }

    let mut metrics = acc.finish()?;
    if !id_lines && words > 0 {
        metrics.fertility = Some(tokens as f64 / words as f64);
    }
    Ok(metrics)
}

fn append_corpus_csv(
    path: &Path,
    language: &str,
    metrics: &WindowMetrics,
) -> anyhow::Result<()> {
    let new_file = !path.exists();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut wtr = csv::Writer::from_writer(file);
    if new_file {
        wtr.write_record([
            "language", "mattr", "av", "eta", "ttr", "fertility", "window_size", "step", "tokens",
        ])?;
    }
    wtr.write_record([
        language,
        &metrics.mattr.to_string(),
        &metrics.av.to_string(),
        &metrics.eta.to_string(),
        &metrics.ttr_global.to_string(),
        &metrics.fertility.map(|f| f.to_string()).unwrap_or_default(),
        &metrics.config.window_size.to_string(),
        &metrics.config.step.to_string(),
        &metrics.token_count.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}

#[derive(Args)]
pub struct UdArgs {
    /// CoNLL-U treebank file.
    #[arg(long)]
    pub conllu: PathBuf,
    /// Sentence budget (0 = whole treebank).
    #[arg(long, default_value_t = 1000)]
    pub sentences: usize,
    /// Take the first N sentences instead of a seeded random sample.
    #[arg(long)]
    pub prefix: bool,
    /// Restrict SO-ROE to root predicates.
    #[arg(long)]
    pub root_only: bool,
    /// Skip heads with more immediate dependents than this.
    #[arg(long, default_value_t = 5)]
    pub max_deps: usize,
    /// Language label for CSV rows.
    #[arg(long, default_value = "und")]
    pub language: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a CSV row (header written when the file is new).
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Serialize)]
struct UdReport {
    language: String,
    #[serde(flatten)]
    word_order: WordOrderReport,
}

pub fn ud(args: UdArgs, seed: u64) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::new("metrics ud", seed)
        .flag("sentences", args.sentences)
        .flag("prefix", args.prefix)
        .flag("root_only", args.root_only)
        .flag("max_deps", args.max_deps)
        .flag("language", &args.language)
        .input(&args.conllu)?;
    let report = compute_ud_report(
        &args.conllu,
        args.sentences,
        args.prefix,
        seed,
        WordOrderOptions {
            max_dependents: args.max_deps,
            root_only_so: args.root_only,
        },
    )?;

    let json = to_json_with_manifest(
        &manifest,
        UdReport {
            language: args.language.clone(),
            word_order: report.clone(),
        },
    )?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &(json + "\n"))?;
            manifest.write_sidecar(path)?;
        }
        None => println!("{json}"),
    }
    if let Some(csv_path) = &args.csv_out {
        append_ud_csv(csv_path, &args.language, &report)?;
        manifest.write_sidecar(csv_path)?;
    }
    Ok(())
}

pub fn compute_ud_report(
    conllu: &Path,
    sentences: usize,
    prefix: bool,
    seed: u64,
    opts: WordOrderOptions,
) -> anyhow::Result<WordOrderReport> {
    let file = std::fs::File::open(conllu)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", conllu.display()))?;
    let forest = parse_conllu(std::io::BufReader::new(file))?;
    let dropped = forest.dropped;
    let budgeted = if sentences == 0 || sentences >= forest.len() {
        forest
    } else if prefix {
        take_first(&forest, sentences)
    } else {
        take_sentences(&forest, sentences, seed)
    };
    let mut report = word_order_report(&budgeted, opts)?;
    report.dropped_sentences = dropped as u64;
    Ok(report)
}

fn append_ud_csv(path: &Path, language: &str, report: &WordOrderReport) -> anyhow::Result<()> {
    let new_file = !path.exists();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    let mut wtr = csv::Writer::from_writer(file);
    if new_file {
        wtr.write_record([
            "language",
            "hde",
            "roe",
            "so_roe",
            "sentences",
            "so_clauses",
            "roe_skipped_heads",
        ])?;
    }
    wtr.write_record([
        language,
        &report.hde.to_string(),
        &report.roe.to_string(),
        &report.so_roe.map(|v| v.to_string()).unwrap_or_default(),
        &report.sentence_count.to_string(),
        &report.so_clause_count.to_string(),
        &report.roe_skipped_heads.to_string(),
    ])?;
    wtr.flush()?;
    Ok(())
}
