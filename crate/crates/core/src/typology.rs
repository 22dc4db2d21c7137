//! Typological language sampling over categorical feature matrices.
//!
//! Languages are rows of a rectangular matrix of categorical features
//! (Grambank-style), possibly with missing cells. Pairwise distance is
//! normalized Hamming over jointly-defined features; MaxSum selection
//! picks the k-subset maximizing summed pairwise distance, either
//! exactly (subset enumeration, small frames) or greedily (farthest
//! pair seed, then best marginal addition). Sample quality is reported
//! as MPD / FVI / FVO / summed feature entropy saturation diagnostics.

use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;
use thiserror::Error;

use crate::entropy::shannon_bits;

#[derive(Debug, Error)]
pub enum TypologyError {
    #[error("unknown language {0:?}")]
    UnknownLanguage(String),
    #[error("languages {0:?} and {1:?} share no jointly-defined feature")]
    NoJointFeatures(String, String),
    #[error("sample size {k} out of range 2..={max}")]
    SampleSizeOutOfRange { k: usize, max: usize },
    #[error("exact search over {0} languages exceeds the cap of {1}")]
    ExactSearchTooLarge(usize, usize),
    #[error("sample must contain at least 2 languages")]
    SampleTooSmall,
    #[error("feature {0:?} has no non-missing value")]
    EmptyFeature(String),
    #[error("matrix row for {language:?} has {got} values, expected {expected}")]
    RaggedRow {
        language: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate language {0:?}")]
    DuplicateLanguage(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Largest frame the exact subset search accepts.
pub const EXACT_SEARCH_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMode {
    Exact,
    Greedy,
}

/// Rectangular languages x features matrix of categorical values.
/// Empty cells are missing data.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    languages: Vec<String>,
    features: Vec<String>,
    /// Row-major; None is missing.
    values: Vec<Option<String>>,
}

impl FeatureMatrix {
    pub fn new(
        languages: Vec<String>,
        features: Vec<String>,
        rows: Vec<Vec<Option<String>>>,
    ) -> Result<Self, TypologyError> {
        let mut seen = BTreeMap::new();
        for (i, lang) in languages.iter().enumerate() {
            if seen.insert(lang.clone(), i).is_some() {
                return Err(TypologyError::DuplicateLanguage(lang.clone()));
            }
        }
        for (lang, row) in languages.iter().zip(&rows) {
            if row.len() != features.len() {
                return Err(TypologyError::RaggedRow {
                    language: lang.clone(),
                    got: row.len(),
                    expected: features.len(),
                });
            }
        }
        let mut values = Vec::with_capacity(languages.len() * features.len());
        for row in rows {
            values.extend(row);
        }
        for (j, feature) in features.iter().enumerate() {
            let defined = (0..languages.len()).any(|i| values[i * features.len() + j].is_some());
            if !defined {
                return Err(TypologyError::EmptyFeature(feature.clone()));
            }
        }
        Ok(Self {
            languages,
            features,
            values,
        })
    }

    /// Read `language,FEAT1,FEAT2,...` CSV; empty cells (or `?`) are
    /// missing.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, TypologyError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let features: Vec<String> = headers.iter().skip(1).map(String::from).collect();
        let mut languages = Vec::new();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let mut iter = record.iter();
            let lang = iter.next().unwrap_or("").to_string();
            let row: Vec<Option<String>> = iter
                .map(|cell| {
                    let cell = cell.trim();
                    if cell.is_empty() || cell == "?" {
                        None
                    } else {
                        Some(cell.to_string())
                    }
                })
                .collect();
            languages.push(lang);
            rows.push(row);
        }
        Self::new(languages, features, rows)
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn value(&self, language: usize, feature: usize) -> Option<&str> {
        self.values[language * self.features.len() + feature].as_deref()
    }

    pub fn language_index(&self, code: &str) -> Result<usize, TypologyError> {
        self.languages
            .iter()
            .position(|l| l == code)
            .ok_or_else(|| TypologyError::UnknownLanguage(code.to_string()))
    }

    /// Normalized Hamming distance over jointly-defined features, with
    /// the number of jointly-defined features it was computed on.
    pub fn distance_with_coverage(
        &self,
        a: usize,
        b: usize,
    ) -> Result<(f64, usize), TypologyError> {
        let mut joint = 0usize;
        let mut disagree = 0usize;
        for j in 0..self.features.len() {
            if let (Some(va), Some(vb)) = (self.value(a, j), self.value(b, j)) {
                joint += 1;
                if va != vb {
                    disagree += 1;
                }
            }
        }
        if joint == 0 {
            return Err(TypologyError::NoJointFeatures(
                self.languages[a].clone(),
                self.languages[b].clone(),
            ));
        }
        Ok((disagree as f64 / joint as f64, joint))
    }

    pub fn pairwise_distance(&self, a: &str, b: &str) -> Result<f64, TypologyError> {
        let ia = self.language_index(a)?;
        let ib = self.language_index(b)?;
        self.distance_with_coverage(ia, ib).map(|(d, _)| d)
    }

    /// Full pairwise distance table; errors if any pair has no joint
    /// feature coverage.
    #[allow(clippy::needless_range_loop)]
    fn distance_table(&self) -> Result<Vec<Vec<f64>>, TypologyError> {
        let n = self.languages.len();
        let mut table = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in (a + 1)..n {
                let (d, _) = self.distance_with_coverage(a, b)?;
                table[a][b] = d;
                table[b][a] = d;
            }
        }
        Ok(table)
    }

    /// Distinct attested (feature, value) pairs among the given rows.
    fn attested_pairs(&self, rows: &[usize]) -> usize {
        let mut set: BTreeMap<(usize, &str), ()> = BTreeMap::new();
        for &i in rows {
            for j in 0..self.features.len() {
                if let Some(v) = self.value(i, j) {
                    set.insert((j, v), ());
                }
            }
        }
        set.len()
    }
}

/// Select the sample of size `k` maximizing summed pairwise distance.
///
/// Exact mode enumerates k-subsets (frames up to [`EXACT_SEARCH_CAP`]
/// languages) and breaks objective ties toward the lexicographically
/// smallest subset of language codes. Greedy mode seeds with the
/// farthest pair and adds the language with the best summed distance to
/// the current sample, ties again to the smallest code.
pub fn select_maxsum(
    matrix: &FeatureMatrix,
    k: usize,
    mode: SelectionMode,
) -> Result<Vec<String>, TypologyError> {
    let n = matrix.languages.len();
    if k < 2 || k > n {
        return Err(TypologyError::SampleSizeOutOfRange { k, max: n });
    }
    // Work in code-sorted order so "first found" ties are
    // lexicographically smallest.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| matrix.languages[a].cmp(&matrix.languages[b]));
    let dist = matrix.distance_table()?;

    let picked: Vec<usize> = match mode {
        SelectionMode::Exact => {
            if n > EXACT_SEARCH_CAP {
                return Err(TypologyError::ExactSearchTooLarge(n, EXACT_SEARCH_CAP));
            }
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut subset: Vec<usize> = Vec::with_capacity(k);
            enumerate_subsets(&order, k, &mut subset, &mut |subset| {
                let mut objective = 0.0;
                for i in 0..subset.len() {
                    for j in (i + 1)..subset.len() {
                        objective += dist[subset[i]][subset[j]];
                    }
                }
                let better = match &best {
                    None => true,
                    Some((b, _)) => objective > *b,
                };
                if better {
                    best = Some((objective, subset.to_vec()));
                }
            });
            best.expect("k <= n guarantees at least one subset").1
        }
        SelectionMode::Greedy => {
            let mut seed = (order[0], order[1]);
            let mut best_d = f64::NEG_INFINITY;
            for (i, &a) in order.iter().enumerate() {
                for &b in &order[i + 1..] {
                    if dist[a][b] > best_d {
                        best_d = dist[a][b];
                        seed = (a, b);
                    }
                }
            }
            let mut sample = vec![seed.0, seed.1];
            while sample.len() < k {
                let mut choice: Option<(f64, usize)> = None;
                for &cand in &order {
                    if sample.contains(&cand) {
                        continue;
                    }
                    let gain: f64 = sample.iter().map(|&s| dist[cand][s]).sum();
                    if choice.is_none_or(|(g, _)| gain > g) {
                        choice = Some((gain, cand));
                    }
                }
                sample.push(choice.expect("k <= n leaves a candidate").1);
            }
            sample
        }
    };

    let mut codes: Vec<String> = picked
        .into_iter()
        .map(|i| matrix.languages[i].clone())
        .collect();
    codes.sort();
    Ok(codes)
}

fn enumerate_subsets(
    order: &[usize],
    k: usize,
    subset: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    fn rec(
        order: &[usize],
        k: usize,
        from: usize,
        subset: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if subset.len() == k {
            visit(subset);
            return;
        }
        let need = k - subset.len();
        for i in from..=(order.len() - need) {
            subset.push(order[i]);
            rec(order, k, i + 1, subset, visit);
            subset.pop();
        }
    }
    rec(order, k, 0, subset, visit);
}

/// Joint feature coverage behind one pairwise distance.
#[derive(Debug, Clone, Serialize)]
pub struct PairCoverage {
    pub a: String,
    pub b: String,
    pub distance: f64,
    /// Features defined for both languages; the distance denominator.
    pub jointly_defined: usize,
}

/// Saturation diagnostics for one sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampleQualityReport {
    pub sample: Vec<String>,
    /// Mean pairwise distance within the sample.
    pub mpd: f64,
    /// Fraction of the frame's attested (feature, value) pairs present
    /// in the sample.
    pub fvi: f64,
    /// Mean redundancy of each feature's modal value within the
    /// sample: 0 when all sampled values are distinct, 1 when every
    /// sampled language agrees.
    pub fvo: f64,
    /// Summed Shannon entropy (bits) of per-feature value
    /// distributions within the sample.
    pub entropy: f64,
    /// Features with no non-missing sample value are skipped from FVO
    /// (their entropy contribution would be zero anyway).
    pub fvo_skipped_features: usize,
    /// Per-pair distances with their joint-coverage denominators, so
    /// missing-data normalization is visible.
    pub pair_coverage: Vec<PairCoverage>,
}

/// Compute MPD / FVI / FVO / entropy for a sample of language codes.
/// Missing values are excluded from all counts.
pub fn quality(
    matrix: &FeatureMatrix,
    sample: &[String],
) -> Result<SampleQualityReport, TypologyError> {
    if sample.len() < 2 {
        return Err(TypologyError::SampleTooSmall);
    }
    let rows: Vec<usize> = sample
        .iter()
        .map(|code| matrix.language_index(code))
        .collect::<Result<_, _>>()?;

    let mut mpd_sum = 0.0;
    let mut pair_coverage = Vec::new();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let (d, joint) = matrix.distance_with_coverage(rows[i], rows[j])?;
            mpd_sum += d;
            pair_coverage.push(PairCoverage {
                a: sample[i].clone(),
                b: sample[j].clone(),
                distance: d,
                jointly_defined: joint,
            });
        }
    }

    let frame_rows: Vec<usize> = (0..matrix.languages.len()).collect();
    let attested_frame = matrix.attested_pairs(&frame_rows);
    let attested_sample = matrix.attested_pairs(&rows);

    let mut fvo_sum = 0.0;
    let mut fvo_features = 0usize;
    let mut fvo_skipped = 0usize;
    let mut entropy = 0.0;
    for j in 0..matrix.features.len() {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for &i in &rows {
            if let Some(v) = matrix.value(i, j) {
                *counts.entry(v).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            fvo_skipped += 1;
            continue;
        }
        let modal = *counts.values().max().expect("nonempty");
        fvo_sum += (modal.saturating_sub(1)) as f64 / (sample.len() - 1) as f64;
        fvo_features += 1;
        entropy += shannon_bits(counts.values().copied());
    }

    Ok(SampleQualityReport {
        sample: sample.to_vec(),
        mpd: mpd_sum / pair_coverage.len() as f64,
        fvi: attested_sample as f64 / attested_frame as f64,
        fvo: if fvo_features > 0 {
            fvo_sum / fvo_features as f64
        } else {
            0.0
        },
        entropy,
        fvo_skipped_features: fvo_skipped,
        pair_coverage,
    })
}

/// Quality reports for MaxSum samples of every size 2..=k_max.
pub fn saturation_curve(
    matrix: &FeatureMatrix,
    k_max: usize,
    mode: SelectionMode,
) -> Result<Vec<SampleQualityReport>, TypologyError> {
    let mut reports = Vec::new();
    for k in 2..=k_max {
        let sample = select_maxsum(matrix, k, mode)?;
        reports.push(quality(matrix, &sample)?);
    }
    Ok(reports)
}
