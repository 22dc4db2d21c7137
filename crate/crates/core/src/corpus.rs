//! Sliding-window lexical metrics over token streams.
//!
//! A single pass maintains the current window's type counts and
//! within-window successor table incrementally, so a stream of any
//! length is processed in memory proportional to the window size, never
//! materializing the stream. Per-window values are exact integer ratios
//! where possible (MATTR, AV); the accessor-efficiency sum is kept in a
//! compensated accumulator so the streaming result stays within oracle
//! tolerance of a per-window recount.
//!
//! Windows start at positions 0, step, 2*step, ... and are
//! self-contained: successor relations never cross a window boundary.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::CompensatedSum;
use crate::tokenizer::TokenId;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid window config: {0}")]
    InvalidConfig(String),
    #[error("stream has {token_count} tokens, shorter than window size {window_size}")]
    StreamTooShort { token_count: u64, window_size: usize },
    #[error("empty stream")]
    EmptyStream,
}

/// Sliding-window parameters. `window_size >= 2`, `1 <= step <= window_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_size: usize,
    pub step: usize,
}

impl WindowConfig {
    pub fn new(window_size: usize, step: usize) -> Result<Self, CorpusError> {
        if window_size < 2 {
            return Err(CorpusError::InvalidConfig(format!(
                "window_size must be >= 2, got {window_size}"
            )));
        }
        if step < 1 || step > window_size {
            return Err(CorpusError::InvalidConfig(format!(
                "step must be in 1..={window_size}, got {step}"
            )));
        }
        Ok(Self { window_size, step })
    }
}

/// Which neighbor counts as a type's accessor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccessorSide {
    /// Immediate right neighbor (successor). The default.
    #[default]
    Right,
    /// Immediate left neighbor (predecessor).
    Left,
}

/// Stream-level options for the window metrics.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamOptions {
    /// Tokens with this id count for MATTR/TTR but are excluded from
    /// accessor statistics on either side of a bigram.
    pub unknown: Option<TokenId>,
    pub side: AccessorSide,
}

/// How the aggregates were formed; carried in reports so alternative
/// aggregation choices can be compared downstream.
#[derive(Debug, Clone, Serialize)]
pub struct AggregationNotes {
    pub accessor_side: AccessorSide,
    /// AV averages distinct-accessor counts per type, unweighted by
    /// type frequency.
    pub av_weighting: &'static str,
    /// Entropies are base 2.
    pub entropy_unit: &'static str,
    pub unknown_excluded_from_accessors: bool,
}

/// Windowed metrics plus global TTR for one token stream.
#[derive(Debug, Clone, Serialize)]
pub struct WindowMetrics {
    pub mattr: f64,
    pub av: f64,
    pub eta: f64,
    /// True when no window had a type with two distinct accessors, so
    /// eta is reported as 0 rather than a mean.
    pub eta_undefined: bool,
    pub ttr_global: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fertility: Option<f64>,
    pub window_count: u64,
    pub av_defined_windows: u64,
    pub eta_defined_windows: u64,
    pub token_count: u64,
    pub config: WindowConfig,
    pub aggregation: AggregationNotes,
}

/// Result of [`accessor_variety`].
#[derive(Debug, Clone, Copy)]
pub struct AccessorVariety {
    pub av: f64,
    pub eta: f64,
    pub eta_undefined: bool,
}

#[derive(Default)]
struct AccessorStats {
    total: u32,
    counts: FxHashMap<TokenId, u32>,
}

impl AccessorStats {
    /// Shannon efficiency of the accessor distribution; only defined
    /// for two or more distinct accessors.
    fn efficiency(&self) -> f64 {
        let n = self.total as f64;
        let mut sum_c_log_c = 0.0;
        for &c in self.counts.values() {
            if c > 1 {
                sum_c_log_c += (c as f64) * (c as f64).log2();
            }
        }
        let h = n.log2() - sum_c_log_c / n;
        h / (self.counts.len() as f64).log2()
    }
}

struct WindowState {
    config: WindowConfig,
    opts: StreamOptions,
    buf: VecDeque<TokenId>,
    type_counts: FxHashMap<TokenId, u32>,
    distinct: usize,
    accessors: FxHashMap<TokenId, AccessorStats>,
    /// Sum over types of their distinct-accessor count.
    pair_distinct_total: usize,
    eta_sum: CompensatedSum,
    eta_qualifying: usize,
    // Global (whole-stream) counts.
    global_types: FxHashSet<TokenId>,
    token_count: u64,
    // Per-window accumulators.
    window_count: u64,
    mattr_sum: f64,
    av_sum: f64,
    av_windows: u64,
    eta_outer_sum: f64,
    eta_windows: u64,
}

impl WindowState {
    fn new(config: WindowConfig, opts: StreamOptions) -> Self {
        Self {
            config,
            opts,
            buf: VecDeque::with_capacity(config.window_size),
            type_counts: FxHashMap::default(),
            distinct: 0,
            accessors: FxHashMap::default(),
            pair_distinct_total: 0,
            eta_sum: CompensatedSum::default(),
            eta_qualifying: 0,
            global_types: FxHashSet::default(),
            token_count: 0,
            window_count: 0,
            mattr_sum: 0.0,
            av_sum: 0.0,
            av_windows: 0,
            eta_outer_sum: 0.0,
            eta_windows: 0,
        }
    }

    fn bigram_key(&self, left: TokenId, right: TokenId) -> Option<(TokenId, TokenId)> {
        if let Some(unk) = self.opts.unknown {
            if left == unk || right == unk {
                return None;
            }
        }
        Some(match self.opts.side {
            AccessorSide::Right => (left, right),
            AccessorSide::Left => (right, left),
        })
    }

    fn add_bigram(&mut self, left: TokenId, right: TokenId) {
        let Some((key, val)) = self.bigram_key(left, right) else {
            return;
        };
        let stats = self.accessors.entry(key).or_default();
        if stats.counts.len() >= 2 {
            self.eta_sum.sub(stats.efficiency());
            self.eta_qualifying -= 1;
        }
        let c = stats.counts.entry(val).or_insert(0);
        if *c == 0 {
            self.pair_distinct_total += 1;
        }
        *c += 1;
        stats.total += 1;
        if stats.counts.len() >= 2 {
            self.eta_sum.add(stats.efficiency());
            self.eta_qualifying += 1;
        }
    }

    fn remove_bigram(&mut self, left: TokenId, right: TokenId) {
        let Some((key, val)) = self.bigram_key(left, right) else {
            return;
        };
        let stats = self.accessors.get_mut(&key).expect("bigram was added");
        if stats.counts.len() >= 2 {
            self.eta_sum.sub(stats.efficiency());
            self.eta_qualifying -= 1;
        }
        let c = stats.counts.get_mut(&val).expect("accessor was added");
        *c -= 1;
        stats.total -= 1;
        if *c == 0 {
            stats.counts.remove(&val);
            self.pair_distinct_total -= 1;
        }
        if stats.total == 0 {
            self.accessors.remove(&key);
        } else if stats.counts.len() >= 2 {
            self.eta_sum.add(stats.efficiency());
            self.eta_qualifying += 1;
        }
    }

    fn push(&mut self, token: TokenId) {
        let w = self.config.window_size;
        if self.buf.len() == w {
            let front = self.buf.pop_front().expect("window is full");
            let next = *self.buf.front().expect("window size >= 2");
            self.remove_bigram(front, next);
            let c = self.type_counts.get_mut(&front).expect("type was counted");
            *c -= 1;
            if *c == 0 {
                self.type_counts.remove(&front);
                self.distinct -= 1;
            }
        }
        if let Some(&last) = self.buf.back() {
            self.add_bigram(last, token);
        }
        self.buf.push_back(token);
        let c = self.type_counts.entry(token).or_insert(0);
        if *c == 0 {
            self.distinct += 1;
        }
        *c += 1;

        self.global_types.insert(token);
        self.token_count += 1;

        if self.buf.len() == w {
            let start = self.token_count - w as u64;
            if start.is_multiple_of(self.config.step as u64) {
                self.evaluate_window();
            }
        }
    }

    fn evaluate_window(&mut self) {
        let w = self.config.window_size;
        self.window_count += 1;
        self.mattr_sum += self.distinct as f64 / w as f64;
        if !self.accessors.is_empty() {
            self.av_sum += self.pair_distinct_total as f64 / self.accessors.len() as f64;
            self.av_windows += 1;
        }
        if self.eta_qualifying > 0 {
            self.eta_outer_sum += self.eta_sum.value() / self.eta_qualifying as f64;
            self.eta_windows += 1;
        }
    }

    fn finish(self) -> Result<WindowMetrics, CorpusError> {
        if self.token_count < self.config.window_size as u64 {
            return Err(CorpusError::StreamTooShort {
                token_count: self.token_count,
                window_size: self.config.window_size,
            });
        }
        let eta_undefined = self.eta_windows == 0;
        Ok(WindowMetrics {
            mattr: self.mattr_sum / self.window_count as f64,
            av: if self.av_windows > 0 {
                self.av_sum / self.av_windows as f64
            } else {
                0.0
            },
            eta: if eta_undefined {
                0.0
            } else {
                self.eta_outer_sum / self.eta_windows as f64
            },
            eta_undefined,
            ttr_global: self.global_types.len() as f64 / self.token_count as f64,
            fertility: None,
            window_count: self.window_count,
            av_defined_windows: self.av_windows,
            eta_defined_windows: self.eta_windows,
            token_count: self.token_count,
            config: self.config,
            aggregation: AggregationNotes {
                accessor_side: self.opts.side,
                av_weighting: "type-mean",
                entropy_unit: "bits",
                unknown_excluded_from_accessors: self.opts.unknown.is_some(),
            },
        })
    }
}

/// Push-style interface to the single-pass window metrics, for callers
/// that produce tokens incrementally (line-by-line encoding).
pub struct WindowAccumulator {
    state: WindowState,
}

impl WindowAccumulator {
    pub fn new(config: WindowConfig, opts: StreamOptions) -> Self {
        Self {
            state: WindowState::new(config, opts),
        }
    }

    pub fn push(&mut self, token: TokenId) {
        self.state.push(token);
    }

    pub fn tokens_seen(&self) -> u64 {
        self.state.token_count
    }

    pub fn finish(self) -> Result<WindowMetrics, CorpusError> {
        self.state.finish()
    }
}

/// Single-pass computation of MATTR, AV, eta and global TTR.
pub fn window_metrics<I>(
    tokens: I,
    config: WindowConfig,
    opts: StreamOptions,
) -> Result<WindowMetrics, CorpusError>
where
    I: IntoIterator<Item = TokenId>,
{
    let mut state = WindowState::new(config, opts);
    for token in tokens {
        state.push(token);
    }
    state.finish()
}

/// Moving-average type-token ratio: mean over windows of
/// distinct-types / window-size.
pub fn mattr<I>(tokens: I, config: WindowConfig) -> Result<f64, CorpusError>
where
    I: IntoIterator<Item = TokenId>,
{
    window_metrics(tokens, config, StreamOptions::default()).map(|m| m.mattr)
}

/// Accessor variety and accessor efficiency, averaged over windows.
pub fn accessor_variety<I>(
    tokens: I,
    config: WindowConfig,
    opts: StreamOptions,
) -> Result<AccessorVariety, CorpusError>
where
    I: IntoIterator<Item = TokenId>,
{
    window_metrics(tokens, config, opts).map(|m| AccessorVariety {
        av: m.av,
        eta: m.eta,
        eta_undefined: m.eta_undefined,
    })
}

/// Whole-stream type-token ratio.
pub fn global_ttr<I>(tokens: I) -> Result<f64, CorpusError>
where
    I: IntoIterator<Item = TokenId>,
{
    let mut types = FxHashSet::default();
    let mut total = 0u64;
    for t in tokens {
        types.insert(t);
        total += 1;
    }
    if total == 0 {
        return Err(CorpusError::EmptyStream);
    }
    Ok(types.len() as f64 / total as f64)
}

/// Uniform sample without replacement of `min(n, |corpus|)` lines via
/// single-pass reservoir sampling; deterministic for a fixed seed. The
/// sample preserves corpus order.
pub fn sample_lines<I, S>(corpus: I, n: usize, seed: u64) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reservoir: Vec<(usize, String)> = Vec::with_capacity(n);
    for (i, line) in corpus.into_iter().enumerate() {
        if i < n {
            reservoir.push((i, line.into()));
        } else {
            let j = rng.random_range(0..=i);
            if j < n {
                reservoir[j] = (i, line.into());
            }
        }
    }
    reservoir.sort_unstable_by_key(|(i, _)| *i);
    reservoir.into_iter().map(|(_, line)| line).collect()
}
