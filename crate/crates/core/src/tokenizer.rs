//! Monolingual byte-pair-encoding tokenizers.
//!
//! Training is greedy BPE over Unicode scalar characters: repeatedly
//! merge the most frequent adjacent symbol pair within pretokens until
//! the vocabulary reaches its target size or no pair occurs at least
//! twice. Ties are broken by the lexicographically smallest pair, so a
//! fixed corpus always yields a byte-identical model.
//!
//! The unit of pretokenization is the whitespace word (optionally with
//! punctuation split off), which keeps the fertility denominator and
//! the window-metric token stream well defined.

use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense token identifier; ids run 0..vocab_len with no gaps.
pub type TokenId = u32;

/// Pretokenization applied before merges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PretokenizerRule {
    /// Split on Unicode whitespace only.
    #[serde(rename = "whitespace")]
    Whitespace,
    /// Split on whitespace, then split non-alphanumeric scalars into
    /// their own single-character pretokens.
    #[serde(rename = "whitespace+punct-split")]
    WhitespacePunct,
}

impl fmt::Display for PretokenizerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PretokenizerRule::Whitespace => write!(f, "whitespace"),
            PretokenizerRule::WhitespacePunct => write!(f, "whitespace+punct-split"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("vocab size target {requested} is below the base alphabet size; at least {required} required")]
    VocabTooSmall { requested: usize, required: usize },
    #[error("unknown token id {0} (vocabulary has {1} entries)")]
    UnknownId(TokenId, usize),
    #[error("no words in corpus")]
    NoWords,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model io")]
    Io(#[from] std::io::Error),
    #[error("model json")]
    Json(#[from] serde_json::Error),
}

/// A sequence of token ids with word-boundary flags marking the first
/// token of each pretoken.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream {
    ids: Vec<TokenId>,
    word_starts: Vec<bool>,
}

impl TokenStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a stream from raw ids, treating every token as its own word.
    pub fn from_ids(ids: Vec<TokenId>) -> Self {
        let word_starts = vec![true; ids.len()];
        Self { ids, word_starts }
    }

    pub fn from_parts(ids: Vec<TokenId>, word_starts: Vec<bool>) -> Self {
        assert_eq!(ids.len(), word_starts.len());
        if let Some(first) = word_starts.first() {
            assert!(*first, "first token of a nonempty stream starts a word");
        }
        Self { ids, word_starts }
    }

    pub fn push(&mut self, id: TokenId, word_start: bool) {
        let word_start = word_start || self.ids.is_empty();
        self.ids.push(id);
        self.word_starts.push(word_start);
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn word_starts(&self) -> &[bool] {
        &self.word_starts
    }

    pub fn word_count(&self) -> usize {
        self.word_starts.iter().filter(|b| **b).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.ids.iter().copied()
    }
}

/// Serialized form of a model: version, pretokenizer, vocab in id
/// order, merges in training order.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    pretokenizer_rule: PretokenizerRule,
    vocab: Vec<String>,
    merges: Vec<[String; 2]>,
}

const MODEL_VERSION: u32 = 1;

/// A trained BPE vocabulary plus its ordered merge list.
#[derive(Debug, Clone)]
pub struct TokenizerModel {
    vocab: Vec<String>,
    ids: FxHashMap<String, TokenId>,
    merges: Vec<(String, String)>,
    /// (left id, right id) -> (merge rank, product id)
    merge_table: FxHashMap<(TokenId, TokenId), (u32, TokenId)>,
    vocab_size_target: usize,
    pretokenizer: PretokenizerRule,
}

impl TokenizerModel {
    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab_size_target(&self) -> usize {
        self.vocab_size_target
    }

    pub fn pretokenizer(&self) -> PretokenizerRule {
        self.pretokenizer
    }

    /// Reserved id for out-of-vocabulary base symbols: one past the
    /// dense vocabulary range.
    pub fn unknown_id(&self) -> TokenId {
        self.vocab.len() as TokenId
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Split a line into pretokens according to the model's rule.
    pub fn pretokenize(rule: PretokenizerRule, line: &str) -> Vec<&str> {
        let mut out = Vec::new();
        for chunk in line.split_whitespace() {
            match rule {
                PretokenizerRule::Whitespace => out.push(chunk),
                PretokenizerRule::WhitespacePunct => {
                    let mut start = None::<usize>;
                    for (i, ch) in chunk.char_indices() {
                        if ch.is_alphanumeric() {
                            if start.is_none() {
                                start = Some(i);
                            }
                        } else {
                            if let Some(s) = start.take() {
                                out.push(&chunk[s..i]);
                            }
                            out.push(&chunk[i..i + ch.len_utf8()]);
                        }
                    }
                    if let Some(s) = start {
                        out.push(&chunk[s..]);
                    }
                }
            }
        }
        out
    }

    /// Tokenize one line. Out-of-vocabulary base symbols map to the
    /// reserved unknown id; the first token of each pretoken carries a
    /// word-boundary flag.
    pub fn encode(&self, text: &str) -> TokenStream {
        self.encode_limited(text, self.merges.len())
    }

    /// Tokenize using only the first `merge_limit` merges.
    pub fn encode_limited(&self, text: &str, merge_limit: usize) -> TokenStream {
        let mut stream = TokenStream::new();
        for pretoken in Self::pretokenize(self.pretokenizer, text) {
            let symbols = self.encode_pretoken(pretoken, merge_limit);
            for (i, id) in symbols.into_iter().enumerate() {
                stream.push(id, i == 0);
            }
        }
        stream
    }

    fn encode_pretoken(&self, pretoken: &str, merge_limit: usize) -> Vec<TokenId> {
        let unk = self.unknown_id();
        let mut symbols: Vec<TokenId> = pretoken
            .chars()
            .map(|c| {
                let mut buf = [0u8; 4];
                self.id_of(c.encode_utf8(&mut buf)).unwrap_or(unk)
            })
            .collect();
        // Apply merges in training order: repeatedly take the lowest-
        // ranked pair present, merging its occurrences left to right.
        loop {
            let mut best: Option<(u32, TokenId, (TokenId, TokenId))> = None;
            for window in symbols.windows(2) {
                if let Some(&(rank, product)) = self.merge_table.get(&(window[0], window[1])) {
                    if (rank as usize) < merge_limit
                        && best.is_none_or(|(r, _, _)| rank < r)
                    {
                        best = Some((rank, product, (window[0], window[1])));
                    }
                }
            }
            let Some((_, product, pair)) = best else {
                break;
            };
            symbols = merge_pair(&symbols, pair, product);
        }
        symbols
    }

    /// Reconstruct text: token strings concatenated, with a space at
    /// each word boundary after the first. The unknown id renders as
    /// U+FFFD; ids outside the model's range are an error.
    pub fn decode(&self, stream: &TokenStream) -> Result<String, TokenizerError> {
        let mut out = String::new();
        for (i, (&id, &start)) in stream.ids.iter().zip(&stream.word_starts).enumerate() {
            if start && i > 0 {
                out.push(' ');
            }
            if id == self.unknown_id() {
                out.push('\u{FFFD}');
            } else {
                match self.token(id) {
                    Some(tok) => out.push_str(tok),
                    None => return Err(TokenizerError::UnknownId(id, self.vocab.len())),
                }
            }
        }
        Ok(out)
    }

    /// Mean subword tokens per pretoken over a corpus of lines.
    pub fn fertility<I, S>(&self, corpus: I) -> Result<f64, TokenizerError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens = 0u64;
        let mut words = 0u64;
        for line in corpus {
            let stream = self.encode(line.as_ref());
            tokens += stream.len() as u64;
            words += stream.word_count() as u64;
        }
        if words == 0 {
            return Err(TokenizerError::NoWords);
        }
        Ok(tokens as f64 / words as f64)
    }

    pub fn to_json(&self) -> Result<String, TokenizerError> {
        let file = ModelFile {
            version: MODEL_VERSION,
            pretokenizer_rule: self.pretokenizer,
            vocab: self.vocab.clone(),
            merges: self
                .merges
                .iter()
                .map(|(l, r)| [l.clone(), r.clone()])
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<(), TokenizerError> {
        let json = self.to_json()?;
        writer.write_all(json.as_bytes())?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Load and validate a serialized model. Validation replays the
    /// merge list over the single-character entries and checks that it
    /// reproduces the vocabulary exactly.
    pub fn from_json(json: &str) -> Result<Self, TokenizerError> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.version != MODEL_VERSION {
            return Err(TokenizerError::InvalidModel(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let merges: Vec<(String, String)> = file
            .merges
            .into_iter()
            .map(|[l, r]| (l, r))
            .collect();
        Self::assemble(file.vocab, merges, None, file.pretokenizer_rule)
    }

    pub fn read_json_file(path: &std::path::Path) -> Result<Self, TokenizerError> {
        let json = std::fs::read_to_string(path)?;
        Self::from_json(&json)
    }

    fn assemble(
        vocab: Vec<String>,
        merges: Vec<(String, String)>,
        vocab_size_target: Option<usize>,
        pretokenizer: PretokenizerRule,
    ) -> Result<Self, TokenizerError> {
        let mut ids = FxHashMap::default();
        for (i, tok) in vocab.iter().enumerate() {
            if tok.is_empty() {
                return Err(TokenizerError::InvalidModel("empty token".into()));
            }
            if ids.insert(tok.clone(), i as TokenId).is_some() {
                return Err(TokenizerError::InvalidModel(format!(
                    "duplicate token {tok:?}"
                )));
            }
        }
        let mut merge_table = FxHashMap::default();
        let mut replay: Vec<&String> = vocab
            .iter()
            .filter(|t| t.chars().count() == 1)
            .collect();
        for (rank, (left, right)) in merges.iter().enumerate() {
            let (Some(&l), Some(&r)) = (ids.get(left), ids.get(right)) else {
                return Err(TokenizerError::InvalidModel(format!(
                    "merge ({left:?}, {right:?}) references a token outside the vocabulary"
                )));
            };
            let product = format!("{left}{right}");
            let Some(&p) = ids.get(&product) else {
                return Err(TokenizerError::InvalidModel(format!(
                    "merge product {product:?} missing from vocabulary"
                )));
            };
            merge_table.insert((l, r), (rank as u32, p));
            replay.push(&vocab[p as usize]);
        }
        if replay.len() != vocab.len() || replay.iter().zip(&vocab).any(|(a, b)| *a != b) {
            return Err(TokenizerError::InvalidModel(
                "replaying merges does not reproduce the vocabulary".into(),
            ));
        }
        let target = vocab_size_target.unwrap_or(vocab.len());
        Ok(Self {
            vocab,
            ids,
            merges,
            merge_table,
            vocab_size_target: target,
            pretokenizer,
        })
    }
}

fn merge_pair(symbols: &[TokenId], pair: (TokenId, TokenId), product: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == pair.0 && symbols[i + 1] == pair.1 {
            out.push(product);
            i += 2;
        } else {
            out.push(symbols[i]);
            i += 1;
        }
    }
    out
}

/// Heap entry ordered by count descending, then pair ascending, so the
/// most frequent pair wins and ties go to the lexicographically
/// smallest pair.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    left: String,
    right: String,
    pair: (TokenId, TokenId),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Train a BPE model over a line corpus.
///
/// Merging stops when the vocabulary reaches `vocab_size_target` or the
/// best remaining pair occurs fewer than twice.
pub fn train_bpe<I, S>(
    corpus: I,
    vocab_size_target: usize,
    pretokenizer: PretokenizerRule,
) -> Result<TokenizerModel, TokenizerError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    // Pretoken frequency table; training cost then scales with the
    // number of distinct words, not corpus length.
    let mut word_counts: FxHashMap<String, u64> = FxHashMap::default();
    for line in corpus {
        for pretoken in TokenizerModel::pretokenize(pretokenizer, line.as_ref()) {
            *word_counts.entry(pretoken.to_string()).or_insert(0) += 1;
        }
    }
    if word_counts.is_empty() {
        return Err(TokenizerError::EmptyCorpus);
    }

    let mut alphabet: Vec<String> = {
        let mut set = FxHashSet::default();
        for word in word_counts.keys() {
            set.extend(word.chars());
        }
        set.into_iter().map(String::from).collect()
    };
    alphabet.sort_unstable();
    if vocab_size_target < alphabet.len() {
        return Err(TokenizerError::VocabTooSmall {
            requested: vocab_size_target,
            required: alphabet.len(),
        });
    }

    let mut vocab: Vec<String> = alphabet;
    let mut ids: FxHashMap<String, TokenId> = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as TokenId))
        .collect();

    // Words as symbol-id sequences, sorted for determinism.
    let mut entries: Vec<(Vec<TokenId>, u64)> = {
        let mut sorted: Vec<(String, u64)> = word_counts.into_iter().collect();
        sorted.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        sorted
            .into_iter()
            .map(|(word, count)| {
                let syms = word
                    .chars()
                    .map(|c| {
                        let mut buf = [0u8; 4];
                        ids[c.encode_utf8(&mut buf)]
                    })
                    .collect();
                (syms, count)
            })
            .collect()
    };

    let mut pair_counts: FxHashMap<(TokenId, TokenId), u64> = FxHashMap::default();
    let mut pair_words: FxHashMap<(TokenId, TokenId), FxHashSet<usize>> = FxHashMap::default();
    for (idx, (syms, count)) in entries.iter().enumerate() {
        for w in syms.windows(2) {
            let pair = (w[0], w[1]);
            *pair_counts.entry(pair).or_insert(0) += count;
            pair_words.entry(pair).or_default().insert(idx);
        }
    }

    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| Candidate {
            count,
            left: vocab[pair.0 as usize].clone(),
            right: vocab[pair.1 as usize].clone(),
            pair,
        })
        .collect();

    let mut merges: Vec<(String, String)> = Vec::new();

    while vocab.len() < vocab_size_target {
        // Lazy-deletion heap: entries whose count went stale are skipped.
        let Some(cand) = heap.pop() else { break };
        let current = pair_counts.get(&cand.pair).copied().unwrap_or(0);
        if current != cand.count {
            if current >= 2 {
                heap.push(Candidate {
                    count: current,
                    ..cand
                });
            }
            continue;
        }
        if cand.count < 2 {
            break;
        }

        let pair = cand.pair;
        let product = format!("{}{}", cand.left, cand.right);
        let product_id = vocab.len() as TokenId;
        vocab.push(product.clone());
        ids.insert(product, product_id);
        merges.push((cand.left, cand.right));

        let affected: Vec<usize> = pair_words
            .remove(&pair)
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .unwrap_or_default();
        pair_counts.remove(&pair);

        let mut touched: FxHashSet<(TokenId, TokenId)> = FxHashSet::default();
        for idx in affected {
            let (syms, count) = &entries[idx];
            let count = *count;
            if !syms.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            for w in syms.windows(2) {
                let p = (w[0], w[1]);
                if let Some(c) = pair_counts.get_mut(&p) {
                    *c -= count;
                    touched.insert(p);
                }
                if let Some(ws) = pair_words.get_mut(&p) {
                    ws.remove(&idx);
                }
            }
            let merged = merge_pair(syms, pair, product_id);
            for w in merged.windows(2) {
                let p = (w[0], w[1]);
                *pair_counts.entry(p).or_insert(0) += count;
                pair_words.entry(p).or_default().insert(idx);
                touched.insert(p);
            }
            entries[idx].0 = merged;
        }
        for p in touched {
            let c = pair_counts.get(&p).copied().unwrap_or(0);
            if c == 0 {
                pair_counts.remove(&p);
                pair_words.remove(&p);
            } else if c >= 2 {
                heap.push(Candidate {
                    count: c,
                    left: vocab[p.0 as usize].clone(),
                    right: vocab[p.1 as usize].clone(),
                    pair: p,
                });
            }
        }
    }

    TokenizerModel::assemble(vocab, merges, Some(vocab_size_target), pretokenizer)
}
