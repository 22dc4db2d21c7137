//! Joining metric tables with task-performance tables: relative
//! performance drops, rank correlations, and scatter-plot data.
//!
//! Metric tables are wide CSV (`language,metric1,metric2,...`);
//! performance tables are long CSV
//! (`language,task,pos_type,score,stddev`). Both are external inputs —
//! model training happens elsewhere — so everything here is pure table
//! algebra.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown pos type {0:?} (expected no-pos, absolute or relative)")]
    UnknownPosType(String),
    #[error("duplicate key {0}")]
    DuplicateKey(String),
    #[error("missing cell: {0}")]
    MissingCell(String),
    #[error("baseline score for {0} is zero")]
    ZeroBaseline(String),
    #[error("input vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} paired observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("correlation undefined: {0} input is constant")]
    ConstantInput(&'static str),
    #[error("non-finite value at {0}")]
    NonFinite(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Positional-encoding variant of a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PosType {
    #[serde(rename = "no-pos")]
    NoPos,
    #[serde(rename = "absolute")]
    Absolute,
    #[serde(rename = "relative")]
    Relative,
}

impl PosType {
    pub const ALL: [PosType; 3] = [PosType::NoPos, PosType::Absolute, PosType::Relative];

    pub fn as_str(&self) -> &'static str {
        match self {
            PosType::NoPos => "no-pos",
            PosType::Absolute => "absolute",
            PosType::Relative => "relative",
        }
    }

    pub fn parse(s: &str) -> Result<Self, AnalysisError> {
        match s {
            "no-pos" | "nopos" | "no_pos" => Ok(PosType::NoPos),
            "absolute" => Ok(PosType::Absolute),
            "relative" => Ok(PosType::Relative),
            other => Err(AnalysisError::UnknownPosType(other.to_string())),
        }
    }
}

impl std::fmt::Display for PosType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// (language, metric) -> value.
#[derive(Debug, Clone, Default)]
pub struct MetricTable {
    values: BTreeMap<(String, String), f64>,
    metrics: Vec<String>,
}

impl MetricTable {
    pub fn insert(&mut self, language: &str, metric: &str, value: f64) -> Result<(), AnalysisError> {
        if !value.is_finite() {
            return Err(AnalysisError::NonFinite(format!("{language}/{metric}")));
        }
        if !self.metrics.iter().any(|m| m == metric) {
            self.metrics.push(metric.to_string());
        }
        if self
            .values
            .insert((language.to_string(), metric.to_string()), value)
            .is_some()
        {
            return Err(AnalysisError::DuplicateKey(format!("{language}/{metric}")));
        }
        Ok(())
    }

    pub fn get(&self, language: &str, metric: &str) -> Option<f64> {
        self.values
            .get(&(language.to_string(), metric.to_string()))
            .copied()
    }

    pub fn metrics(&self) -> &[String] {
        &self.metrics
    }

    pub fn languages(&self) -> Vec<String> {
        let mut langs: Vec<String> = self.values.keys().map(|(l, _)| l.clone()).collect();
        langs.dedup();
        langs
    }

    /// Wide CSV: header `language,<metric>,...`, one row per language.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let metrics: Vec<String> = headers.iter().skip(1).map(String::from).collect();
        let mut table = MetricTable::default();
        for record in rdr.records() {
            let record = record?;
            let language = record.get(0).unwrap_or("").to_string();
            for (metric, cell) in metrics.iter().zip(record.iter().skip(1)) {
                if cell.trim().is_empty() {
                    continue;
                }
                let value: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| AnalysisError::NonFinite(format!("{language}/{metric}")))?;
                table.insert(&language, metric, value)?;
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Score {
    pub score: f64,
    pub stddev: Option<f64>,
}

/// (language, task, pos_type) -> score.
#[derive(Debug, Clone, Default)]
pub struct PerformanceTable {
    cells: BTreeMap<(String, String, PosType), Score>,
}

impl PerformanceTable {
    pub fn insert(
        &mut self,
        language: &str,
        task: &str,
        pos: PosType,
        score: Score,
    ) -> Result<(), AnalysisError> {
        if !score.score.is_finite() {
            return Err(AnalysisError::NonFinite(format!(
                "{language}/{task}/{pos}"
            )));
        }
        if self
            .cells
            .insert((language.to_string(), task.to_string(), pos), score)
            .is_some()
        {
            return Err(AnalysisError::DuplicateKey(format!(
                "{language}/{task}/{pos}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, language: &str, task: &str, pos: PosType) -> Option<Score> {
        self.cells
            .get(&(language.to_string(), task.to_string(), pos))
            .copied()
    }

    pub fn languages(&self) -> Vec<String> {
        let mut langs: Vec<String> = self.cells.keys().map(|(l, _, _)| l.clone()).collect();
        langs.dedup();
        langs
    }

    pub fn tasks(&self) -> Vec<String> {
        let mut tasks: Vec<String> = self.cells.keys().map(|(_, t, _)| t.clone()).collect();
        tasks.sort();
        tasks.dedup();
        tasks
    }

    /// Long CSV: `language,task,pos_type,score,stddev` with header;
    /// stddev may be empty.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, AnalysisError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut table = PerformanceTable::default();
        for record in rdr.records() {
            let record = record?;
            let language = record.get(0).unwrap_or("");
            let task = record.get(1).unwrap_or("");
            let pos = PosType::parse(record.get(2).unwrap_or(""))?;
            let score: f64 = record
                .get(3)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| AnalysisError::NonFinite(format!("{language}/{task}/{pos}")))?;
            let stddev = match record.get(4).map(str::trim) {
                None | Some("") => None,
                Some(s) => Some(s.parse().map_err(|_| {
                    AnalysisError::NonFinite(format!("{language}/{task}/{pos} stddev"))
                })?),
            };
            table.insert(language, task, pos, Score { score, stddev })?;
        }
        Ok(table)
    }
}

/// (baseline - ablated) / baseline.
pub fn relative_drop(
    perf: &PerformanceTable,
    language: &str,
    task: &str,
    baseline: PosType,
    ablated: PosType,
) -> Result<f64, AnalysisError> {
    let base = perf
        .get(language, task, baseline)
        .ok_or_else(|| AnalysisError::MissingCell(format!("{language}/{task}/{baseline}")))?;
    let abl = perf
        .get(language, task, ablated)
        .ok_or_else(|| AnalysisError::MissingCell(format!("{language}/{task}/{ablated}")))?;
    if base.score == 0.0 {
        return Err(AnalysisError::ZeroBaseline(format!("{language}/{task}")));
    }
    Ok((base.score - abl.score) / base.score)
}

/// Average ranks (1-based), ties averaged.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j share the same value; assign the mean rank.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

fn validate_paired(xs: &[f64], ys: &[f64]) -> Result<(), AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(AnalysisError::TooFewObservations {
            needed: 3,
            found: xs.len(),
        });
    }
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        if !x.is_finite() || !y.is_finite() {
            return Err(AnalysisError::NonFinite(format!("observation {i}")));
        }
    }
    Ok(())
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    validate_paired(xs, ys)?;
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 {
        return Err(AnalysisError::ConstantInput("x"));
    }
    if var_y == 0.0 {
        return Err(AnalysisError::ConstantInput("y"));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Spearman rank correlation: Pearson over average-rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    validate_paired(xs, ys)?;
    pearson(&ranks(xs), &ranks(ys))
}

/// Two-sided permutation p-value for the observed Spearman rho:
/// the share of seeded shuffles of `ys` whose |rho| reaches the
/// observed |rho|, with the add-one correction so p is never 0.
pub fn spearman_permutation_p(
    xs: &[f64],
    ys: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<f64, AnalysisError> {
    use rand::Rng;
    use rand::SeedableRng;
    let observed = spearman(xs, ys)?.abs();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = ys.to_vec();
    let mut hits = 0usize;
    for _ in 0..permutations {
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        if spearman(xs, &shuffled)?.abs() >= observed - 1e-15 {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (permutations + 1) as f64)
}

/// One requested correlation: metric vs relative drop between two
/// positional variants on a task.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSpec {
    pub metric: String,
    pub task: String,
    pub baseline: PosType,
    pub ablated: PosType,
}

/// Read `metric,task,baseline,ablated` CSV with header.
pub fn read_correlation_specs<R: Read>(reader: R) -> Result<Vec<CorrelationSpec>, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let mut specs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        specs.push(CorrelationSpec {
            metric: record.get(0).unwrap_or("").to_string(),
            task: record.get(1).unwrap_or("").to_string(),
            baseline: PosType::parse(record.get(2).unwrap_or(""))?,
            ablated: PosType::parse(record.get(3).unwrap_or(""))?,
        });
    }
    Ok(specs)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub metric: String,
    pub task: String,
    pub pos_contrast: String,
    /// None when the correlation is undefined (constant input).
    pub spearman_rho: Option<f64>,
    pub pearson_r: Option<f64>,
    /// Permutation p-value for rho; only present when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub n: usize,
    /// Languages present in one table but not the other.
    pub dropped_languages: usize,
}

/// Optional significance testing for [`correlate_metrics`].
#[derive(Debug, Clone, Copy, Default)]
pub struct PermutationTest {
    /// Number of shuffles; 0 disables the test.
    pub permutations: usize,
    pub seed: u64,
}

/// Correlate each spec entry's metric against the relative performance
/// drop, over the languages shared by both tables. Languages missing
/// either value are dropped and counted; fewer than 3 shared languages
/// is an error.
pub fn correlate_metrics(
    metrics: &MetricTable,
    perf: &PerformanceTable,
    specs: &[CorrelationSpec],
) -> Result<Vec<CorrelationReport>, AnalysisError> {
    correlate_metrics_with(metrics, perf, specs, PermutationTest::default())
}

/// [`correlate_metrics`] with a permutation test attached to each
/// defined coefficient.
pub fn correlate_metrics_with(
    metrics: &MetricTable,
    perf: &PerformanceTable,
    specs: &[CorrelationSpec],
    permutation: PermutationTest,
) -> Result<Vec<CorrelationReport>, AnalysisError> {
    let mut union: Vec<String> = metrics.languages();
    for l in perf.languages() {
        if !union.contains(&l) {
            union.push(l);
        }
    }
    union.sort();

    let mut reports = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut dropped = 0usize;
        for language in &union {
            let metric = metrics.get(language, &spec.metric);
            let drop = relative_drop(perf, language, &spec.task, spec.baseline, spec.ablated).ok();
            match (metric, drop) {
                (Some(x), Some(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ => dropped += 1,
            }
        }
        if xs.len() < 3 {
            return Err(AnalysisError::TooFewObservations {
                needed: 3,
                found: xs.len(),
            });
        }
        let undefined_ok = |r: Result<f64, AnalysisError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(AnalysisError::ConstantInput(_)) => Ok(None),
            Err(e) => Err(e),
        };
        let rho = undefined_ok(spearman(&xs, &ys))?;
        let p_value = match (rho, permutation.permutations) {
            (Some(_), n) if n > 0 => Some(spearman_permutation_p(
                &xs,
                &ys,
                n,
                permutation.seed,
            )?),
            _ => None,
        };
        reports.push(CorrelationReport {
            metric: spec.metric.clone(),
            task: spec.task.clone(),
            pos_contrast: format!("{}-vs-{}", spec.baseline, spec.ablated),
            spearman_rho: rho,
            pearson_r: undefined_ok(pearson(&xs, &ys))?,
            p_value,
            n: xs.len(),
            dropped_languages: dropped,
        });
    }
    Ok(reports)
}

/// One scatter point: a language's metric value against its score
/// under one positional variant.
#[derive(Debug, Clone, Serialize)]
pub struct ScatterRow {
    pub language: String,
    pub metric_value: f64,
    pub pos_type: PosType,
    pub score: f64,
}

/// Long-form scatter data for one (metric, task): rows sorted by
/// metric value within each pos type.
pub fn emit_scatter(
    metrics: &MetricTable,
    perf: &PerformanceTable,
    metric: &str,
    task: &str,
) -> Result<Vec<ScatterRow>, AnalysisError> {
    let mut rows = Vec::new();
    let mut shared = 0usize;
    let mut languages = metrics.languages();
    languages.sort();
    for pos in PosType::ALL {
        let mut group: Vec<ScatterRow> = Vec::new();
        for language in &languages {
            let (Some(value), Some(cell)) =
                (metrics.get(language, metric), perf.get(language, task, pos))
            else {
                continue;
            };
            group.push(ScatterRow {
                language: language.clone(),
                metric_value: value,
                pos_type: pos,
                score: cell.score,
            });
        }
        group.sort_by(|a, b| {
            a.metric_value
                .partial_cmp(&b.metric_value)
                .expect("finite")
                .then_with(|| a.language.cmp(&b.language))
        });
        shared = shared.max(group.len());
        rows.extend(group);
    }
    if shared < 3 {
        return Err(AnalysisError::TooFewObservations {
            needed: 3,
            found: shared,
        });
    }
    Ok(rows)
}

/// Write scatter rows as `language,metric_value,pos_type,score` CSV.
/// Values print in shortest round-trip form, so re-reading reproduces
/// them exactly.
pub fn write_scatter_csv<W: Write>(rows: &[ScatterRow], writer: W) -> Result<(), AnalysisError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["language", "metric_value", "pos_type", "score"])?;
    for row in rows {
        wtr.write_record([
            row.language.as_str(),
            &row.metric_value.to_string(),
            row.pos_type.as_str(),
            &row.score.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
