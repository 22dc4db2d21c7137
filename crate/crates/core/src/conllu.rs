//! CoNLL-U treebank parsing.
//!
//! Only the columns the word-order metrics consume are modeled: ID,
//! FORM, UPOS, HEAD, DEPREL. Multiword-token ranges and empty nodes are
//! skipped. Sentences that violate the tree invariants (single root,
//! referential heads, acyclicity) are dropped and counted rather than
//! failing the whole file; real treebank releases contain occasional
//! defects and a corpus-scale metric run must survive them.

use std::io::BufRead;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("line {line}: expected 10 tab-separated columns, found {columns}")]
    MalformedLine { line: usize, columns: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One syntactic word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub upos: String,
    /// Index of the head token; 0 means the artificial root.
    pub head: usize,
    pub deprel: String,
}

impl DepToken {
    /// Relation label with any subtype stripped ("nsubj:pass" -> "nsubj").
    pub fn base_deprel(&self) -> &str {
        self.deprel.split(':').next().unwrap_or(&self.deprel)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSentence {
    pub tokens: Vec<DepToken>,
    pub sentence_id: String,
}

impl DepSentence {
    /// Tokens whose head is `index`.
    pub fn dependents_of(&self, index: usize) -> impl Iterator<Item = &DepToken> {
        self.tokens.iter().filter(move |t| t.head == index)
    }

    pub fn root(&self) -> &DepToken {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .expect("validated sentence has a root")
    }

    /// The five consumed columns, tab-separated, one line per token.
    pub fn to_tsv5(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                t.index, t.form, t.upos, t.head, t.deprel
            ));
        }
        out
    }

    /// Checks the tree invariants: contiguous 1-based indices, exactly
    /// one root-attached token labeled "root", referential heads,
    /// no self-heads, acyclic head chains.
    fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("empty sentence".into());
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(format!("non-contiguous token index {}", t.index));
            }
            if t.head > n {
                return Err(format!("head {} out of range", t.head));
            }
            if t.head == t.index {
                return Err(format!("token {} heads itself", t.index));
            }
        }
        let roots: Vec<&DepToken> = self.tokens.iter().filter(|t| t.head == 0).collect();
        if roots.len() != 1 {
            return Err(format!("{} root-attached tokens", roots.len()));
        }
        if roots[0].base_deprel() != "root" {
            return Err(format!("root token labeled {:?}", roots[0].deprel));
        }
        // Walk head chains; every token must reach 0 without revisiting.
        let mut state = vec![0u8; n + 1]; // 0 unvisited, 1 on path, 2 done
        for start in 1..=n {
            let mut path = Vec::new();
            let mut cur = start;
            while cur != 0 && state[cur] == 0 {
                state[cur] = 1;
                path.push(cur);
                cur = self.tokens[cur - 1].head;
            }
            if cur != 0 && state[cur] == 1 {
                return Err(format!("head cycle through token {cur}"));
            }
            for v in path {
                state[v] = 2;
            }
        }
        Ok(())
    }
}

/// Parsed sentences plus the count of sentences dropped for invariant
/// violations.
#[derive(Debug, Clone, Default)]
pub struct DepForest {
    pub sentences: Vec<DepSentence>,
    pub dropped: usize,
    /// One message per dropped sentence, in input order.
    pub diagnostics: Vec<String>,
}

impl DepForest {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Parse a CoNLL-U document from a reader.
///
/// A non-comment, non-blank line without 10 tab-separated columns is a
/// hard error carrying the line number. A HEAD field that is not an
/// integer drops the sentence with a diagnostic instead.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<DepForest, ConlluError> {
    let mut forest = DepForest::default();
    let mut tokens: Vec<DepToken> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut poisoned: Option<String> = None;
    let mut ordinal = 0usize;

    let finish = |tokens: &mut Vec<DepToken>,
                      sent_id: &mut Option<String>,
                      poisoned: &mut Option<String>,
                      forest: &mut DepForest,
                      ordinal: &mut usize| {
        if tokens.is_empty() && poisoned.is_none() {
            *sent_id = None;
            return;
        }
        *ordinal += 1;
        let id = sent_id
            .take()
            .unwrap_or_else(|| format!("sentence-{ordinal}"));
        let sentence = DepSentence {
            tokens: std::mem::take(tokens),
            sentence_id: id,
        };
        let verdict = match poisoned.take() {
            Some(reason) => Err(reason),
            None => sentence.validate(),
        };
        match verdict {
            Ok(()) => forest.sentences.push(sentence),
            Err(reason) => {
                forest.dropped += 1;
                forest
                    .diagnostics
                    .push(format!("{}: {}", sentence.sentence_id, reason));
            }
        }
    };

    for (line_number, line) in reader.lines().enumerate() {
        let line = line?;
        let line_number = line_number + 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            finish(&mut tokens, &mut sent_id, &mut poisoned, &mut forest, &mut ordinal);
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::MalformedLine {
                line: line_number,
                columns: cols.len(),
            });
        }
        // Multiword-token ranges ("3-4") and empty nodes ("5.1") carry
        // no tree structure; skip them.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if poisoned.is_some() {
            continue;
        }
        let Ok(index) = cols[0].parse::<usize>() else {
            poisoned = Some(format!("line {line_number}: non-integer ID {:?}", cols[0]));
            continue;
        };
        let Ok(head) = cols[6].parse::<usize>() else {
            poisoned = Some(format!("line {line_number}: non-integer HEAD {:?}", cols[6]));
            continue;
        };
        tokens.push(DepToken {
            index,
            form: cols[1].to_string(),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    finish(&mut tokens, &mut sent_id, &mut poisoned, &mut forest, &mut ordinal);
    Ok(forest)
}

/// Convenience wrapper for in-memory documents.
pub fn parse_conllu_str(input: &str) -> Result<DepForest, ConlluError> {
    parse_conllu(input.as_bytes())
}

/// Uniform random subsample of `min(n, len)` sentences, deterministic
/// per seed; sentence order is preserved.
pub fn take_sentences(forest: &DepForest, n: usize, seed: u64) -> DepForest {
    if n == 0 {
        return DepForest::default();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = Vec::with_capacity(n);
    for i in 0..forest.sentences.len() {
        if i < n {
            picked.push(i);
        } else {
            let j = rng.random_range(0..=i);
            if j < n {
                picked[j] = i;
            }
        }
    }
    picked.sort_unstable();
    DepForest {
        sentences: picked
            .into_iter()
            .map(|i| forest.sentences[i].clone())
            .collect(),
        dropped: 0,
        diagnostics: Vec::new(),
    }
}

/// The first `n` sentences in input order.
pub fn take_first(forest: &DepForest, n: usize) -> DepForest {
    DepForest {
        sentences: forest.sentences.iter().take(n).cloned().collect(),
        dropped: 0,
        diagnostics: Vec::new(),
    }
}
