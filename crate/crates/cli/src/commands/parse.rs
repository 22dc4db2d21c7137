use std::path::PathBuf;

use clap::Args;
use typometrics::conllu::parse_conllu;

#[derive(Args)]
pub struct ParseArgs {
    /// CoNLL-U treebank file.
    #[arg(long)]
    pub conllu: PathBuf,
    /// Print sentence and drop counts.
    #[arg(long)]
    pub stats: bool,
}

pub fn run(args: ParseArgs) -> anyhow::Result<()> {
    let file = std::fs::File::open(&args.conllu)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", args.conllu.display()))?;
    let forest = parse_conllu(std::io::BufReader::new(file))?;
    if args.stats {
        println!("sentences: {}", forest.len());
        println!("dropped: {}", forest.dropped);
        for diagnostic in forest.diagnostics.iter().take(10) {
            println!("dropped sentence {diagnostic}");
        }
    }
    Ok(())
}
