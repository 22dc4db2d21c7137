//! Pseudo-log-likelihood scoring and minimal-pair evaluation.
//!
//! A [`MaskedScorer`] answers one query: the log-probability of the
//! true token at a position given all other tokens. Pseudo-log-
//! likelihood sums those per-position scores; minimal-pair accuracy
//! compares the PLL of a grammatical sentence against its minimally
//! different ungrammatical twin. Scorers are pluggable so a toy
//! count-based model, a subprocess speaking the stdio protocol, or a
//! real masked LM behind it all evaluate identically.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{TokenId, TokenStream, TokenizerModel};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("empty token stream")]
    EmptyStream,
    #[error("scorer returned a non-finite value at position {0}")]
    NonFinite(usize),
    #[error("no pairs to evaluate")]
    NoPairs,
    #[error("pair {0:?}: {1} sentence tokenized to an empty stream")]
    EmptySentence(String, &'static str),
    #[error("pair file line {0}: expected 4 tab-separated fields, found {1}")]
    MalformedPair(usize, usize),
    #[error("scorer process: {0}")]
    Process(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Log-probability (natural log) of the token at `position` given the
/// rest of the stream. Implementations must be deterministic and safe
/// for concurrent read-only queries.
pub trait MaskedScorer: Sync {
    fn score(&self, tokens: &[TokenId], position: usize) -> Result<f64, ScoringError>;
}

/// Pseudo-log-likelihood of a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PllScore {
    /// Sum of per-position log-probabilities, natural log.
    pub pll: f64,
    pub token_count: usize,
}

impl PllScore {
    /// exp(-PLL / length); always >= 1 for log-probabilities <= 0.
    pub fn pseudo_perplexity(&self) -> f64 {
        (-self.pll / self.token_count as f64).exp()
    }
}

/// Sum the scorer over every position of the stream.
///
/// Positions are scored independently (possibly in parallel) and the
/// results summed in position order, so the value is identical
/// regardless of worker count.
pub fn pseudo_log_likelihood(
    scorer: &dyn MaskedScorer,
    tokens: &[TokenId],
) -> Result<PllScore, ScoringError> {
    if tokens.is_empty() {
        return Err(ScoringError::EmptyStream);
    }
    let scores: Vec<f64> = (0..tokens.len())
        .into_par_iter()
        .map(|i| scorer.score(tokens, i))
        .collect::<Result<_, _>>()?;
    let mut pll = 0.0;
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(ScoringError::NonFinite(i));
        }
        pll += s;
    }
    Ok(PllScore {
        pll,
        token_count: tokens.len(),
    })
}

/// A grammatical sentence and its minimally different ungrammatical
/// counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPair {
    pub id: String,
    pub sentence_good: String,
    pub sentence_bad: String,
    pub phenomenon: String,
}

/// Parse `id<TAB>sentence_good<TAB>sentence_bad<TAB>phenomenon` TSV
/// with a header row.
pub fn parse_pairs_tsv<R: BufRead>(reader: R) -> Result<Vec<MinimalPair>, ScoringError> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(ScoringError::MalformedPair(i + 1, fields.len()));
        }
        pairs.push(MinimalPair {
            id: fields[0].to_string(),
            sentence_good: fields[1].to_string(),
            sentence_bad: fields[2].to_string(),
            phenomenon: fields[3].to_string(),
        });
    }
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AccuracyTally {
    pub pairs: u64,
    pub correct: u64,
    pub ties: u64,
}

impl AccuracyTally {
    /// Strict wins count 1, exact ties count 1/2.
    pub fn accuracy(&self) -> f64 {
        (self.correct as f64 + 0.5 * self.ties as f64) / self.pairs as f64
    }
}

/// Accuracy over all pairs plus a per-phenomenon breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct PairAccuracyReport {
    pub accuracy: f64,
    pub overall: AccuracyTally,
    pub by_phenomenon: std::collections::BTreeMap<String, AccuracyTally>,
}

/// Fraction of pairs where the grammatical sentence has strictly
/// higher PLL; exact ties contribute one half and are reported.
pub fn minimal_pair_accuracy(
    scorer: &dyn MaskedScorer,
    model: &TokenizerModel,
    pairs: &[MinimalPair],
) -> Result<PairAccuracyReport, ScoringError> {
    if pairs.is_empty() {
        return Err(ScoringError::NoPairs);
    }
    // Score pairs in parallel; fold tallies in input order.
    let outcomes: Vec<(String, i8)> = pairs
        .par_iter()
        .map(|pair| {
            let good = model.encode(&pair.sentence_good);
            let bad = model.encode(&pair.sentence_bad);
            if good.is_empty() {
                return Err(ScoringError::EmptySentence(pair.id.clone(), "good"));
            }
            if bad.is_empty() {
                return Err(ScoringError::EmptySentence(pair.id.clone(), "bad"));
            }
            let pll_good = pseudo_log_likelihood(scorer, good.ids())?.pll;
            let pll_bad = pseudo_log_likelihood(scorer, bad.ids())?.pll;
            let outcome = if pll_good > pll_bad {
                1
            } else if pll_good == pll_bad {
                0
            } else {
                -1
            };
            Ok((pair.phenomenon.clone(), outcome))
        })
        .collect::<Result<_, _>>()?;

    let mut overall = AccuracyTally::default();
    let mut by_phenomenon: std::collections::BTreeMap<String, AccuracyTally> =
        std::collections::BTreeMap::new();
    for (phenomenon, outcome) in outcomes {
        let slot = by_phenomenon.entry(phenomenon).or_default();
        for tally in [&mut overall, slot] {
            tally.pairs += 1;
            match outcome {
                1 => tally.correct += 1,
                0 => tally.ties += 1,
                _ => {}
            }
        }
    }
    Ok(PairAccuracyReport {
        accuracy: overall.accuracy(),
        overall,
        by_phenomenon,
    })
}

/// Position-free unigram scorer with add-one smoothing: the masked
/// token's probability is (count + 1) / (N + V) regardless of where it
/// sits. Embodies the no-position extreme.
#[derive(Debug, Clone)]
pub struct BagOfWordsScorer {
    counts: FxHashMap<TokenId, u64>,
    total: u64,
    vocab_size: u64,
}

impl BagOfWordsScorer {
    /// Count unigrams over token streams; `vocab_size` is the
    /// smoothing denominator's V (the tokenizer vocabulary size).
    pub fn from_streams<'a, I>(corpus: I, vocab_size: usize) -> Self
    where
        I: IntoIterator<Item = &'a TokenStream>,
    {
        let mut counts = FxHashMap::default();
        let mut total = 0u64;
        for stream in corpus {
            for id in stream.iter() {
                *counts.entry(id).or_insert(0) += 1;
                total += 1;
            }
        }
        Self {
            counts,
            total,
            vocab_size: vocab_size as u64,
        }
    }

    pub fn token_log_prob(&self, token: TokenId) -> f64 {
        let c = self.counts.get(&token).copied().unwrap_or(0);
        ((c + 1) as f64 / (self.total + self.vocab_size) as f64).ln()
    }
}

impl MaskedScorer for BagOfWordsScorer {
    fn score(&self, tokens: &[TokenId], position: usize) -> Result<f64, ScoringError> {
        Ok(self.token_log_prob(tokens[position]))
    }
}

/// Uniform scorer: every token has probability 1/V.
#[derive(Debug, Clone, Copy)]
pub struct UniformScorer {
    pub vocab_size: usize,
}

impl MaskedScorer for UniformScorer {
    fn score(&self, _tokens: &[TokenId], _position: usize) -> Result<f64, ScoringError> {
        Ok(-((self.vocab_size as f64).ln()))
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    tokens: &'a [TokenId],
    position: usize,
}

#[derive(Deserialize)]
struct ScoreResponse {
    logprob: f64,
}

/// Client for an external scorer process speaking newline-delimited
/// JSON over stdio: request `{"tokens": [...], "position": i}`,
/// response `{"logprob": x}`.
pub struct CmdScorer {
    child: Mutex<CmdScorerInner>,
}

struct CmdScorerInner {
    process: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl CmdScorer {
    /// Spawn `command` via `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, ScoringError> {
        let mut process = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ScoringError::Process(format!("spawn {command:?}: {e}")))?;
        let stdin = process
            .stdin
            .take()
            .ok_or_else(|| ScoringError::Process("no stdin".into()))?;
        let stdout = BufReader::new(
            process
                .stdout
                .take()
                .ok_or_else(|| ScoringError::Process("no stdout".into()))?,
        );
        Ok(Self {
            child: Mutex::new(CmdScorerInner {
                process,
                stdin,
                stdout,
            }),
        })
    }
}

impl MaskedScorer for CmdScorer {
    fn score(&self, tokens: &[TokenId], position: usize) -> Result<f64, ScoringError> {
        let mut inner = self.child.lock().expect("scorer mutex poisoned");
        let request = serde_json::to_string(&ScoreRequest { tokens, position })
            .map_err(|e| ScoringError::Process(e.to_string()))?;
        inner.stdin.write_all(request.as_bytes())?;
        inner.stdin.write_all(b"\n")?;
        inner.stdin.flush()?;
        let mut line = String::new();
        inner.stdout.read_line(&mut line)?;
        if line.is_empty() {
            return Err(ScoringError::Process("scorer closed its stdout".into()));
        }
        let response: ScoreResponse = serde_json::from_str(line.trim())
            .map_err(|e| ScoringError::Process(format!("bad response {line:?}: {e}")))?;
        Ok(response.logprob)
    }
}

impl Drop for CmdScorer {
    fn drop(&mut self) {
        if let Ok(mut inner) = self.child.lock() {
            let _ = inner.process.kill();
            let _ = inner.process.wait();
        }
    }
}
