use std::path::{Path, PathBuf};

use clap::Args;
use typometrics::analysis::{
    correlate_metrics_with, emit_scatter, read_correlation_specs, write_scatter_csv,
    CorrelationReport, MetricTable, PerformanceTable, PermutationTest,
};

use crate::manifest::ManifestBuilder;

fn load_tables(
    metrics_path: &Path,
    perf_path: &Path,
) -> anyhow::Result<(MetricTable, PerformanceTable)> {
    let metrics_file = std::fs::File::open(metrics_path)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", metrics_path.display()))?;
    let metrics = MetricTable::from_csv(std::io::BufReader::new(metrics_file))?;
    let perf_file = std::fs::File::open(perf_path)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", perf_path.display()))?;
    let perf = PerformanceTable::from_csv(std::io::BufReader::new(perf_file))?;
    Ok((metrics, perf))
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Wide metric table CSV: `language,<metric>,...`.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Long performance table CSV: `language,task,pos_type,score,stddev`.
    #[arg(long)]
    pub perf: PathBuf,
    /// Requested correlations CSV: `metric,task,baseline,ablated`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Attach a seeded permutation p-value to each rho (0 = off).
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    /// Write the report CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn correlate(args: CorrelateArgs, seed: u64) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::new("correlate", seed)
        .flag("permutations", args.permutations)
        .input(&args.metrics)?
        .input(&args.perf)?
        .input(&args.spec)?;
    let (metrics, perf) = load_tables(&args.metrics, &args.perf)?;
    let spec_file = std::fs::File::open(&args.spec)
        .map_err(|e| anyhow::anyhow!("open {}: {e}", args.spec.display()))?;
    let specs = read_correlation_specs(std::io::BufReader::new(spec_file))?;
    let reports = correlate_metrics_with(
        &metrics,
        &perf,
        &specs,
        PermutationTest {
            permutations: args.permutations,
            seed,
        },
    )?;
    let csv_text = reports_csv(&reports)?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &csv_text)?;
            manifest.write_sidecar(path)?;
        }
        None => print!("{csv_text}"),
    }
    Ok(())
}

fn reports_csv(reports: &[CorrelationReport]) -> anyhow::Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "metric",
        "task",
        "pos_contrast",
        "spearman_rho",
        "pearson_r",
        "p_value",
        "n",
        "dropped_languages",
    ])?;
    for r in reports {
        wtr.write_record([
            r.metric.as_str(),
            r.task.as_str(),
            r.pos_contrast.as_str(),
            &r.spearman_rho.map(|v| v.to_string()).unwrap_or_default(),
            &r.pearson_r.map(|v| v.to_string()).unwrap_or_default(),
            &r.p_value.map(|v| v.to_string()).unwrap_or_default(),
            &r.n.to_string(),
            &r.dropped_languages.to_string(),
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

#[derive(Args)]
pub struct ScatterArgs {
    /// Wide metric table CSV.
    #[arg(long)]
    pub metrics: PathBuf,
    /// Long performance table CSV.
    #[arg(long)]
    pub perf: PathBuf,
    /// Metric column to plot.
    #[arg(long)]
    pub metric: String,
    /// Task to plot.
    #[arg(long)]
    pub task: String,
    /// Write the scatter CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn scatter(args: ScatterArgs, seed: u64) -> anyhow::Result<()> {
    let manifest = ManifestBuilder::new("scatter", seed)
        .flag("metric", &args.metric)
        .flag("task", &args.task)
        .input(&args.metrics)?
        .input(&args.perf)?;
    let (metrics, perf) = load_tables(&args.metrics, &args.perf)?;
    let rows = emit_scatter(&metrics, &perf, &args.metric, &args.task)?;
    let mut buf = Vec::new();
    write_scatter_csv(&rows, &mut buf)?;
    let csv_text = String::from_utf8(buf)?;
    match &args.out {
        Some(path) => {
            super::write_output(path, &csv_text)?;
            manifest.write_sidecar(path)?;
        }
        None => print!("{csv_text}"),
    }
    Ok(())
}
