use std::path::PathBuf;

use clap::Args;
use typometrics::scoring::{
    minimal_pair_accuracy, parse_pairs_tsv, BagOfWordsScorer, CmdScorer, MaskedScorer,
};
use typometrics::tokenizer::{TokenizerModel, TokenStream};

use crate::manifest::{to_json_with_manifest, ManifestBuilder};

#[derive(Args)]
pub struct BlimpArgs {
    /// Trained tokenizer model.
    #[arg(long)]
    pub model: PathBuf,
    /// Minimal pairs TSV: id, sentence_good, sentence_bad, phenomenon.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Scorer: `bow:<corpus.txt>` (add-one unigram over the corpus) or
    /// `cmd:<shell command>` speaking the stdio JSON protocol.
    #[arg(long)]
    pub scorer: String,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: BlimpArgs, seed: u64) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::new("blimp", seed)
        .flag("scorer", &args.scorer)
        .input(&args.model)?
        .input(&args.pairs)?;

    let model = TokenizerModel::read_json_file(&args.model)?;
    let pairs_file = std::fs::File::open(&args.pairs)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", args.pairs.display()))?;
    let pairs = parse_pairs_tsv(std::io::BufReader::new(pairs_file))?;

    let scorer: Box<dyn MaskedScorer> = match args.scorer.split_once(':') {
        Some(("bow", corpus_path)) => {
            let path = PathBuf::from(corpus_path);
            manifest = manifest.input(&path)?;
            let streams: Vec<TokenStream> = super::collect_lines(&path)?
                .iter()
                .map(|line| model.encode(line))
                .collect();
            Box::new(BagOfWordsScorer::from_streams(&streams, model.vocab_len()))
        }
        Some(("cmd", command)) => Box::new(CmdScorer::spawn(command)?),
        _ => anyhow::bail!(
            "unrecognized --scorer {:?}; expected bow:<corpus> or cmd:<command>",
            args.scorer
        ),
    };

    let report = minimal_pair_accuracy(scorer.as_ref(), &model, &pairs)?;
    let json = to_json_with_manifest(&manifest, report)?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &(json + "\n"))?;
            manifest.write_sidecar(path)?;
        }
        None => println!("{json}"),
    }
    Ok(())
}
