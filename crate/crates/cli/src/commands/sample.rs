use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use typometrics::typology::{
    quality, saturation_curve, select_maxsum, FeatureMatrix, SampleQualityReport, SelectionMode,
};

use crate::manifest::{to_json_with_manifest, ManifestBuilder};

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    Exact,
    Greedy,
}

impl From<Mode> for SelectionMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Exact => SelectionMode::Exact,
            Mode::Greedy => SelectionMode::Greedy,
        }
    }
}

#[derive(Args)]
pub struct SampleArgs {
    /// Feature matrix CSV: `language,FEAT1,...`, empty cells missing.
    #[arg(long)]
    pub features: PathBuf,
    /// Sample size.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = Mode::Greedy)]
    pub mode: Mode,
    /// Also emit the saturation curve for sizes 2..=k.
    #[arg(long)]
    pub curve: bool,
    /// Where to write the curve CSV (default: stdout after the report).
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SampleReport {
    sample: Vec<String>,
    quality: SampleQualityReport,
}

pub fn run(args: SampleArgs, seed: u64) -> anyhow::Result<()> {
    let mode: SelectionMode = args.mode.into();
    let manifest = ManifestBuilder::new("sample", seed)
        .flag("k", args.k)
        .flag(
            "mode",
            match mode {
                SelectionMode::Exact => "exact",
                SelectionMode::Greedy => "greedy",
            },
        )
        .flag("curve", args.curve)
        .input(&args.features)?;

    let file = std::fs::File::open(&args.features)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", args.features.display()))?;
    let matrix = FeatureMatrix::from_csv(std::io::BufReader::new(file))?;
    let sample = select_maxsum(&matrix, args.k, mode)?;
    let report = SampleReport {
        quality: quality(&matrix, &sample)?,
        sample,
    };
    let json = to_json_with_manifest(&manifest, report)?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &(json + "\n"))?;
            manifest.write_sidecar(path)?;
        }
        None => println!("{json}"),
    }

    if args.curve {
        let curve = saturation_curve(&matrix, args.k, mode)?;
        let csv_text = curve_csv(&curve)?;
        match &args.curve_out {
            Some(path) => {
                super::write_output(path, &csv_text)?;
                manifest.write_sidecar(path)?;
            }
            None => print!("{csv_text}"),
        }
    }
    Ok(())
}

fn curve_csv(curve: &[SampleQualityReport]) -> anyhow::Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["k", "mpd", "fvi", "fvo", "entropy", "sample"])?;
    for report in curve {
        wtr.write_record([
            &report.sample.len().to_string(),
            &report.mpd.to_string(),
            &report.fvi.to_string(),
            &report.fvo.to_string(),
            &report.entropy.to_string(),
            &report.sample.join(" "),
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}
