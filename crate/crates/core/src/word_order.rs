//! Word-order flexibility metrics over dependency forests.
//!
//! All three metrics are plug-in (maximum-likelihood) conditional
//! entropies in bits, with no smoothing: conditions are weighted by
//! their observed frequency. Relation subtypes fold to the base label
//! before ':' everywhere, so passive subjects count as subjects.
//!
//! Count collection is an associative merge of per-sentence tables and
//! runs over sentences in parallel; entropy evaluation walks the merged
//! tables in key order, so results are identical regardless of worker
//! count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conllu::{DepForest, DepSentence, DepToken};
use crate::entropy::{binary_entropy_bits, shannon_bits};

#[derive(Debug, Error)]
pub enum WordOrderError {
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("forest has no non-root arcs")]
    NoArcs,
    #[error("no head had 1..=max_dependents dependents")]
    NoSubtrees,
    #[error("no clause with both a subject and an object (so_clause_count = 0)")]
    NoCoreClauses,
}

/// Counts of outcomes per condition.
///
/// Keys are ordered so entropy evaluation has a fixed fold order, and
/// merging two tables is an associative integer addition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConditionalDistribution<C: Ord, O: Ord> {
    counts: BTreeMap<C, BTreeMap<O, u64>>,
}

impl<C: Ord, O: Ord> ConditionalDistribution<C, O> {
    pub fn new() -> Self {
        Self {
            counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, condition: C, outcome: O) {
        *self
            .counts
            .entry(condition)
            .or_default()
            .entry(outcome)
            .or_insert(0) += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (condition, outcomes) in other.counts {
            let slot = self.counts.entry(condition).or_default();
            for (outcome, count) in outcomes {
                *slot.entry(outcome).or_insert(0) += count;
            }
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.values().flat_map(|o| o.values()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn condition_count(&self) -> usize {
        self.counts.len()
    }

    /// H(outcome | condition) in bits: the frequency-weighted mean of
    /// per-condition Shannon entropies.
    pub fn conditional_entropy(&self) -> Result<f64, WordOrderError> {
        let total = self.total();
        if total == 0 {
            return Err(WordOrderError::EmptyDistribution);
        }
        let mut h = 0.0;
        for outcomes in self.counts.values() {
            let n: u64 = outcomes.values().sum();
            if n == 0 {
                continue;
            }
            h += (n as f64 / total as f64) * shannon_bits(outcomes.values().copied());
        }
        Ok(h)
    }
}

/// Free-function form of [`ConditionalDistribution::conditional_entropy`].
pub fn conditional_entropy<C: Ord, O: Ord>(
    dist: &ConditionalDistribution<C, O>,
) -> Result<f64, WordOrderError> {
    dist.conditional_entropy()
}

/// Whether the head precedes or follows its dependent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HeadDirection {
    HeadLeft,
    HeadRight,
}

/// Conditioning context of one arc: base relation, head UPOS,
/// dependent UPOS.
pub type ArcContext = (String, String, String);

fn sentence_direction_counts(
    sentence: &DepSentence,
) -> ConditionalDistribution<ArcContext, HeadDirection> {
    let mut dist = ConditionalDistribution::new();
    for token in &sentence.tokens {
        if token.head == 0 {
            continue;
        }
        let head = &sentence.tokens[token.head - 1];
        let direction = if head.index < token.index {
            HeadDirection::HeadLeft
        } else {
            HeadDirection::HeadRight
        };
        dist.add(
            (
                token.base_deprel().to_string(),
                head.upos.clone(),
                token.upos.clone(),
            ),
            direction,
        );
    }
    dist
}

/// Head direction entropy: conditional entropy of head-left vs
/// head-right per (base relation, head UPOS, dependent UPOS) context.
pub fn head_direction_entropy(forest: &DepForest) -> Result<f64, WordOrderError> {
    let dist = forest
        .sentences
        .par_iter()
        .map(sentence_direction_counts)
        .reduce(ConditionalDistribution::new, ConditionalDistribution::merge);
    if dist.is_empty() {
        return Err(WordOrderError::NoArcs);
    }
    dist.conditional_entropy()
}

/// One slot in the linear arrangement of a local subtree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Head,
    Dependent(String),
}

/// Conditioning context of a subtree: head UPOS plus the sorted
/// multiset of its dependents' base relations.
pub type SubtreeContext = (String, Vec<String>);

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelationOrder {
    pub entropy: f64,
    /// Heads that entered the distribution.
    pub head_count: u64,
    /// Heads skipped for exceeding `max_dependents`.
    pub skipped_heads: u64,
}

fn sentence_arrangements(
    sentence: &DepSentence,
    max_dependents: usize,
) -> (ConditionalDistribution<SubtreeContext, Vec<Slot>>, u64) {
    let mut dist = ConditionalDistribution::new();
    let mut skipped = 0;
    for head in &sentence.tokens {
        let dependents: Vec<&DepToken> = sentence.dependents_of(head.index).collect();
        if dependents.is_empty() {
            continue;
        }
        if dependents.len() > max_dependents {
            skipped += 1;
            continue;
        }
        let mut labels: Vec<String> = dependents
            .iter()
            .map(|d| d.base_deprel().to_string())
            .collect();
        labels.sort_unstable();
        // Dependents are in index order already; place the head marker
        // among them by position.
        let mut arrangement: Vec<Slot> = Vec::with_capacity(dependents.len() + 1);
        let mut head_placed = false;
        for d in &dependents {
            if !head_placed && head.index < d.index {
                arrangement.push(Slot::Head);
                head_placed = true;
            }
            arrangement.push(Slot::Dependent(d.base_deprel().to_string()));
        }
        if !head_placed {
            arrangement.push(Slot::Head);
        }
        dist.add((head.upos.clone(), labels), arrangement);
    }
    (dist, skipped)
}

/// Relation order entropy: conditional entropy of the left-to-right
/// arrangement of a head and its immediate dependents, conditioned on
/// head UPOS and the dependents' relation multiset.
pub fn relation_order_entropy(
    forest: &DepForest,
    max_dependents: usize,
) -> Result<RelationOrder, WordOrderError> {
    let (dist, skipped) = forest
        .sentences
        .par_iter()
        .map(|s| sentence_arrangements(s, max_dependents))
        .reduce(
            || (ConditionalDistribution::new(), 0),
            |(da, sa), (db, sb)| (da.merge(db), sa + sb),
        );
    if dist.is_empty() {
        return Err(WordOrderError::NoSubtrees);
    }
    Ok(RelationOrder {
        entropy: dist.conditional_entropy()?,
        head_count: dist.total(),
        skipped_heads: skipped,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubjectObjectOrder {
    /// Binary entropy in bits of subject-before-object vs
    /// object-before-subject.
    pub entropy: f64,
    pub clause_count: u64,
    pub subject_first: u64,
}

/// Subject/object order entropy over clauses whose head has exactly
/// one "nsubj" and exactly one "obj" dependent (base relations); heads
/// with duplicated core arguments are skipped so the outcome is
/// well-defined and mirror-symmetric. With `root_only`, only
/// root-attached predicates qualify.
pub fn subject_object_roe(
    forest: &DepForest,
    root_only: bool,
) -> Result<SubjectObjectOrder, WordOrderError> {
    let (subject_first, object_first) = forest
        .sentences
        .par_iter()
        .map(|sentence| {
            let mut sf = 0u64;
            let mut of = 0u64;
            for head in &sentence.tokens {
                if root_only && head.head != 0 {
                    continue;
                }
                let mut subjects = sentence
                    .dependents_of(head.index)
                    .filter(|d| d.base_deprel() == "nsubj")
                    .map(|d| d.index);
                let mut objects = sentence
                    .dependents_of(head.index)
                    .filter(|d| d.base_deprel() == "obj")
                    .map(|d| d.index);
                let (subject, object) = (subjects.next(), objects.next());
                if subjects.next().is_some() || objects.next().is_some() {
                    continue;
                }
                if let (Some(s), Some(o)) = (subject, object) {
                    if s < o {
                        sf += 1;
                    } else {
                        of += 1;
                    }
                }
            }
            (sf, of)
        })
        .reduce(|| (0, 0), |(a, b), (c, d)| (a + c, b + d));
    let clause_count = subject_first + object_first;
    if clause_count == 0 {
        return Err(WordOrderError::NoCoreClauses);
    }
    Ok(SubjectObjectOrder {
        entropy: binary_entropy_bits(subject_first, object_first),
        clause_count,
        subject_first,
    })
}

/// Options for [`word_order_report`].
#[derive(Debug, Clone, Copy)]
pub struct WordOrderOptions {
    pub max_dependents: usize,
    pub root_only_so: bool,
}

impl Default for WordOrderOptions {
    fn default() -> Self {
        Self {
            max_dependents: 5,
            root_only_so: false,
        }
    }
}

/// The three metrics plus the conditioning metadata they were computed
/// under.
#[derive(Debug, Clone, Serialize)]
pub struct WordOrderReport {
    pub hde: f64,
    pub roe: f64,
    /// None when no clause carried both core arguments.
    pub so_roe: Option<f64>,
    pub sentence_count: u64,
    pub dropped_sentences: u64,
    pub so_clause_count: u64,
    pub roe_head_count: u64,
    pub roe_skipped_heads: u64,
    pub max_dependents: usize,
    pub conditioning: ConditioningNotes,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditioningNotes {
    pub hde_condition: &'static str,
    pub roe_condition: &'static str,
    pub so_scope: &'static str,
    pub relation_subtypes: &'static str,
    pub estimator: &'static str,
}

/// Compute HDE, ROE and SO-ROE together over one forest.
pub fn word_order_report(
    forest: &DepForest,
    opts: WordOrderOptions,
) -> Result<WordOrderReport, WordOrderError> {
    let hde = head_direction_entropy(forest)?;
    let roe = relation_order_entropy(forest, opts.max_dependents)?;
    let so = match subject_object_roe(forest, opts.root_only_so) {
        Ok(so) => Some(so),
        Err(WordOrderError::NoCoreClauses) => None,
        Err(e) => return Err(e),
    };
    Ok(WordOrderReport {
        hde,
        roe: roe.entropy,
        so_roe: so.map(|s| s.entropy),
        sentence_count: forest.len() as u64,
        dropped_sentences: forest.dropped as u64,
        so_clause_count: so.map_or(0, |s| s.clause_count),
        roe_head_count: roe.head_count,
        roe_skipped_heads: roe.skipped_heads,
        max_dependents: opts.max_dependents,
        conditioning: ConditioningNotes {
            hde_condition: "base-deprel+head-upos+dependent-upos",
            roe_condition: "head-upos+dependent-deprel-multiset",
            so_scope: if opts.root_only_so {
                "root-predicates-with-unique-core-arguments"
            } else {
                "any-head-with-unique-core-arguments"
            },
            relation_subtypes: "folded-to-base-before-colon",
            estimator: "plug-in-mle-bits",
        },
    })
}
