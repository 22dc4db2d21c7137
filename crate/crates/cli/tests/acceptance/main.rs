//! Acceptance suite: oracle equivalences, invariants, reference-value
//! reproduction, fixture analysis, throughput and determinism. One
//! pass/fail line per check (run with `--nocapture` to see them).


use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use bigram::BigramScorer;
use typometrics::analysis::{
    correlate_metrics, relative_drop, spearman, CorrelationSpec, MetricTable, PerformanceTable,
    PosType,
};
use typometrics::conllu::{parse_conllu, parse_conllu_str, take_sentences, DepForest};
use typometrics::corpus::{window_metrics, StreamOptions, WindowConfig};
use typometrics::scoring::{pseudo_log_likelihood, BagOfWordsScorer, MaskedScorer};
use typometrics::tokenizer::{train_bpe, PretokenizerRule, TokenId, TokenStream};
use typometrics::typology::{quality, select_maxsum, SelectionMode};
use typometrics::word_order::{
    head_direction_entropy, relation_order_entropy, subject_object_roe, word_order_report,
    WordOrderOptions,
};

const TOL: f64 = 1e-12;

fn pass(label: &str) {
    println!("[PASS] {label}");
}

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

/// Count-based masked bigram scorer used as a PLL test subject: the
/// masked token is conditioned on its left neighbor (unigram at the
/// first position), with add-one smoothing.
mod bigram {
    use super::*;
    use typometrics::scoring::ScoringError;

    pub struct BigramScorer {
        pub unigrams: BTreeMap<TokenId, u64>,
        pub bigrams: BTreeMap<(TokenId, TokenId), u64>,
        pub left_totals: BTreeMap<TokenId, u64>,
        pub total: u64,
        pub vocab: u64,
    }

    impl BigramScorer {
        pub fn train(streams: &[Vec<TokenId>], vocab: u64) -> Self {
            let mut unigrams = BTreeMap::new();
            let mut bigrams = BTreeMap::new();
            let mut left_totals = BTreeMap::new();
            let mut total = 0;
            for stream in streams {
                for &t in stream {
                    *unigrams.entry(t).or_insert(0) += 1;
                    total += 1;
                }
                for pair in stream.windows(2) {
                    *bigrams.entry((pair[0], pair[1])).or_insert(0) += 1;
                    *left_totals.entry(pair[0]).or_insert(0) += 1;
                }
            }
            Self {
                unigrams,
                bigrams,
                left_totals,
                total,
                vocab,
            }
        }
    }

    impl MaskedScorer for BigramScorer {
        fn score(&self, tokens: &[TokenId], position: usize) -> Result<f64, ScoringError> {
            Ok(if position == 0 {
                let c = self.unigrams.get(&tokens[0]).copied().unwrap_or(0);
                ((c + 1) as f64 / (self.total + self.vocab) as f64).ln()
            } else {
                let prev = tokens[position - 1];
                let c = self
                    .bigrams
                    .get(&(prev, tokens[position]))
                    .copied()
                    .unwrap_or(0);
                let n = self.left_totals.get(&prev).copied().unwrap_or(0);
                ((c + 1) as f64 / (n + self.vocab) as f64).ln()
            })
        }
    }
}

// =====================================================================
// Oracle suites: streaming/fast paths vs brute force, >= 1000 random
// small instances each, within 1e-12.
// =====================================================================

#[test]
fn oracle_window_metrics_match_per_window_recount() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for round in 0..1000 {
        let w = rng.random_range(2..=50usize);
        let step = rng.random_range(1..=w);
        let n = rng.random_range(w..=w + 260);
        let vocab = rng.random_range(2..25u32);
        let tokens = gen::stream(&mut rng, n, vocab);
        let unknown = (rng.random_range(0..4) == 0).then_some(0);

        let config = WindowConfig::new(w, step).unwrap();
        let opts = StreamOptions {
            unknown,
            ..StreamOptions::default()
        };
        let fast = window_metrics(tokens.iter().copied(), config, opts).unwrap();
        let slow = naive::window_metrics(&tokens, w, step, unknown);
        assert_eq!(fast.window_count, slow.window_count, "round {round}");
        assert!((fast.mattr - slow.mattr).abs() <= TOL, "round {round} mattr");
        assert!((fast.av - slow.av).abs() <= TOL, "round {round} av");
        assert!((fast.eta - slow.eta).abs() <= TOL, "round {round} eta");
        assert!(
            (fast.ttr_global - slow.ttr_global).abs() <= TOL,
            "round {round} ttr"
        );
        assert_eq!(fast.eta_undefined, slow.eta_undefined, "round {round}");
    }
    // A handful at the full stated scale.
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
        let tokens = gen::stream(&mut rng, 5000, 60);
        let fast = window_metrics(
            tokens.iter().copied(),
            WindowConfig::new(50, 1).unwrap(),
            StreamOptions::default(),
        )
        .unwrap();
        let slow = naive::window_metrics(&tokens, 50, 1, None);
        assert!((fast.mattr - slow.mattr).abs() <= TOL);
        assert!((fast.av - slow.av).abs() <= TOL);
        assert!((fast.eta - slow.eta).abs() <= TOL);
    }
    assert!(started.elapsed() < Duration::from_secs(45));
    pass("oracle: streaming MATTR/AV/eta match per-window recount on 1000 random streams");
}

#[test]
fn oracle_word_order_matches_flat_enumeration() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..1000 {
        let sentence_count = rng.random_range(1..=40);
        let forest = gen::forest(&mut rng, sentence_count, 9);
        let max_deps = rng.random_range(1..=6);

        let fast = head_direction_entropy(&forest).unwrap();
        let slow = naive::hde(&forest).unwrap();
        assert!((fast - slow).abs() <= TOL, "round {round} hde");

        match (
            relation_order_entropy(&forest, max_deps),
            naive::roe(&forest, max_deps),
        ) {
            (Ok(fast), Some(slow)) => {
                assert!((fast.entropy - slow).abs() <= TOL, "round {round} roe")
            }
            (Err(_), None) => {}
            (got, want) => panic!("round {round} roe: {got:?} vs {want:?}"),
        }

        match (subject_object_roe(&forest, false), naive::so_roe(&forest)) {
            (Ok(fast), Some(slow)) => {
                assert!((fast.entropy - slow).abs() <= TOL, "round {round} so_roe")
            }
            (Err(_), None) => {}
            (got, want) => panic!("round {round} so_roe: {got:?} vs {want:?}"),
        }
    }
    assert!(started.elapsed() < Duration::from_secs(45));
    pass("oracle: HDE/ROE/SO-ROE match flat-enumeration recomputation on 1000 random forests");
}

#[test]
fn oracle_pll_matches_hand_summed_conditionals() {
    let started = Instant::now();

    // Frozen fixture: corpus [a b a c], sentence [a b a c].
    // unigram a:2 b:1 c:1 (N=4, V=3); bigrams (a,b):1 (b,a):1 (a,c):1.
    let corpus = vec![vec![0u32, 1, 0, 2]];
    let scorer = BigramScorer::train(&corpus, 3);
    let fixture = pseudo_log_likelihood(&scorer, &[0, 1, 0, 2]).unwrap();
    let expected = (3.0f64 / 7.0).ln()  // P(a) = (2+1)/(4+3)
        + (2.0f64 / 5.0).ln()           // P(b|a) = (1+1)/(2+3)
        + (2.0f64 / 4.0).ln()           // P(a|b) = (1+1)/(1+3)
        + (2.0f64 / 5.0).ln(); //          P(c|a) = (1+1)/(2+3)
    assert!((fixture.pll - expected).abs() <= TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for round in 0..1000 {
        let vocab = rng.random_range(2..12u32);
        let corpus: Vec<Vec<TokenId>> = (0..rng.random_range(1..6))
            .map(|_| {
                let len = rng.random_range(2..40);
                gen::stream(&mut rng, len, vocab)
            })
            .collect();
        let scorer = BigramScorer::train(&corpus, vocab as u64);
        let sentence_len = rng.random_range(1..30);
        let sentence = gen::stream(&mut rng, sentence_len, vocab);

        let fast = pseudo_log_likelihood(&scorer, &sentence).unwrap();
        // Hand-summed oracle: query each position independently.
        let mut slow = 0.0;
        for i in 0..sentence.len() {
            slow += scorer.score(&sentence, i).unwrap();
        }
        assert!((fast.pll - slow).abs() <= TOL, "round {round}");
        assert!(fast.pseudo_perplexity() >= 1.0 - TOL, "round {round}");
    }
    assert!(started.elapsed() < Duration::from_secs(45));
    pass("oracle: PLL equals independently summed per-position conditionals on 1000 instances");
}

#[test]
fn oracle_minimal_pairs_with_a_bigram_scorer() {
    // Synthetic agreement: singular subjects pair with singular verbs,
    // plural with plural. The scorer is trained on grammatical
    // sentences only; every ungrammatical variant contains an
    // unattested subject-verb bigram, so it must score lower.
    let subjects = [("aa", "cc"), ("bb", "dd")]; // (subject, agreeing verb)
    let objects = ["ee", "ff", "gg", "hh", "ii", "jj", "kk", "ll", "mm", "nn"];
    let mut good_sentences = Vec::new();
    for (subject, verb) in subjects {
        for object in objects {
            good_sentences.push(format!("{subject} {verb} {object}"));
        }
    }
    let model = train_bpe(
        good_sentences.iter().map(String::as_str),
        40,
        PretokenizerRule::Whitespace,
    )
    .unwrap();
    let streams: Vec<Vec<TokenId>> = good_sentences
        .iter()
        .map(|s| model.encode(s).ids().to_vec())
        .collect();
    let scorer = BigramScorer::train(&streams, model.vocab_len() as u64);

    let mut pairs = Vec::new();
    for (i, (subject, verb)) in subjects.iter().enumerate() {
        let (_, wrong_verb) = subjects[1 - i];
        for object in objects {
            pairs.push(typometrics::scoring::MinimalPair {
                id: format!("{subject}-{object}"),
                sentence_good: format!("{subject} {verb} {object}"),
                sentence_bad: format!("{subject} {wrong_verb} {object}"),
                phenomenon: "agreement".to_string(),
            });
        }
    }
    assert_eq!(pairs.len(), 20);
    let report =
        typometrics::scoring::minimal_pair_accuracy(&scorer, &model, &pairs).unwrap();
    assert!(
        report.accuracy >= 0.9,
        "bigram scorer accuracy {}",
        report.accuracy
    );
    pass("oracle: bigram scorer separates 20 synthetic agreement pairs with accuracy >= 0.9");
}

#[test]
fn oracle_spearman_matches_rank_difference_formula() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for round in 0..1000 {
        let n = rng.random_range(3..40usize);
        let with_ties = rng.random_range(0..3) == 0;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if with_ties {
                        rng.random_range(0..6) as f64
                    } else {
                        rng.random_range(0..1_000_000) as f64 / 7.0
                    }
                })
                .collect()
        };
        let xs = draw(&mut rng);
        let ys = draw(&mut rng);
        let slow = naive::spearman(&xs, &ys);
        let fast = spearman(&xs, &ys);
        match (fast, slow) {
            (Ok(fast), Some(slow)) => {
                assert!((fast - slow).abs() <= TOL, "round {round}: {fast} vs {slow}")
            }
            (Err(_), None) => {}
            (got, want) => panic!("round {round}: {got:?} vs {want:?}"),
        }
    }
    // Frozen spot value: one adjacent swap in four.
    assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() <= TOL);
    assert!(started.elapsed() < Duration::from_secs(45));
    pass("oracle: Spearman matches the tie-corrected rank-difference formula on 1000 vectors");
}

#[test]
fn oracle_exact_maxsum_matches_subset_enumeration() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    // Exactly representable distances: subset identity must agree.
    for round in 0..250 {
        let langs = rng.random_range(3..=12usize);
        let features = if rng.random_range(0..2) == 0 { 4 } else { 8 };
        let matrix = gen::full_matrix(&mut rng, langs, features);
        let k = rng.random_range(2..=langs.min(6));
        let fast = select_maxsum(&matrix, k, SelectionMode::Exact).unwrap();
        let dist = |a: usize, b: usize| matrix.distance_with_coverage(a, b).unwrap().0;
        let (slow, _) = naive::maxsum_exact(matrix.languages(), &dist, k);
        assert_eq!(fast, slow, "round {round}");
    }
    // With missing data the objective value must agree even if a
    // knife-edge tie could pick a different witness.
    for round in 0..100 {
        let langs = rng.random_range(3..=10usize);
        let matrix = gen::sparse_matrix(&mut rng, langs, 6);
        let k = rng.random_range(2..=langs.min(5));
        let fast = select_maxsum(&matrix, k, SelectionMode::Exact).unwrap();
        let dist = |a: usize, b: usize| matrix.distance_with_coverage(a, b).unwrap().0;
        let (_, slow_objective) = naive::maxsum_exact(matrix.languages(), &dist, k);
        let fast_objective: f64 = {
            let idx: Vec<usize> = fast
                .iter()
                .map(|c| matrix.language_index(c).unwrap())
                .collect();
            let mut sum = 0.0;
            for a in 0..idx.len() {
                for b in (a + 1)..idx.len() {
                    sum += dist(idx[a], idx[b]);
                }
            }
            sum
        };
        assert!(
            (fast_objective - slow_objective).abs() <= 1e-9,
            "round {round}"
        );
    }
    // Greedy sanity bound vs exact, fully-defined matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..1000 {
        let langs = rng.random_range(3..=10usize);
        let matrix = gen::full_matrix(&mut rng, langs, 8);
        let k = rng.random_range(2..=langs.min(5));
        let dist = |a: usize, b: usize| matrix.distance_with_coverage(a, b).unwrap().0;
        let objective = |codes: &[String]| -> f64 {
            let idx: Vec<usize> = codes
                .iter()
                .map(|c| matrix.language_index(c).unwrap())
                .collect();
            let mut sum = 0.0;
            for a in 0..idx.len() {
                for b in (a + 1)..idx.len() {
                    sum += dist(idx[a], idx[b]);
                }
            }
            sum
        };
        let exact = select_maxsum(&matrix, k, SelectionMode::Exact).unwrap();
        let greedy = select_maxsum(&matrix, k, SelectionMode::Greedy).unwrap();
        assert!(objective(&greedy) >= 0.5 * objective(&exact) - TOL);
    }
    assert!(started.elapsed() < Duration::from_secs(45));
    pass("oracle: exact MaxSum matches bitmask subset enumeration (<=12 languages); greedy >= 0.5 x exact");
}

// =====================================================================
// Invariant suites.
// =====================================================================

#[test]
fn invariant_tokenizer_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let alphabet: Vec<char> = "abcdefghij".chars().collect();
    for _ in 0..100 {
        let corpus: Vec<String> = (0..rng.random_range(5..40))
            .map(|_| {
                (0..rng.random_range(1..8))
                    .map(|_| {
                        (0..rng.random_range(1..8))
                            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                            .collect::<String>()
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let target = rng.random_range(10..70);
        let model = train_bpe(
            corpus.iter().map(String::as_str),
            target,
            PretokenizerRule::Whitespace,
        )
        .unwrap();
        for line in corpus.iter().take(8) {
            let normalized = line.split_whitespace().collect::<Vec<_>>().join(" ");
            assert_eq!(model.decode(&model.encode(line)).unwrap(), normalized);
        }
        // Fertility is never below one token per word.
        assert!(model.fertility(corpus.iter()).unwrap() >= 1.0);
    }
    pass("invariant: decode(encode(x)) round-trips whitespace-normalized text; fertility >= 1");
}

#[test]
fn invariant_bow_pll_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    for _ in 0..300 {
        let vocab = rng.random_range(2..20u32);
        let corpus_len = rng.random_range(5..200);
        let corpus_ids = gen::stream(&mut rng, corpus_len, vocab);
        let corpus = TokenStream::from_ids(corpus_ids);
        let scorer = BagOfWordsScorer::from_streams([&corpus], vocab as usize);
        let sentence_len = rng.random_range(1..30);
        let mut sentence = gen::stream(&mut rng, sentence_len, vocab);
        let before = pseudo_log_likelihood(&scorer, &sentence).unwrap().pll;
        // Fisher-Yates with the shared rng.
        for i in (1..sentence.len()).rev() {
            sentence.swap(i, rng.random_range(0..=i));
        }
        let after = pseudo_log_likelihood(&scorer, &sentence).unwrap().pll;
        // Identical score multisets summed in permuted order; only the
        // final rounding may differ.
        assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
    }
    pass("invariant: bag-of-words PLL is invariant under any token permutation");
}

#[test]
fn invariant_word_order_mirror_and_duplication() {
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    for _ in 0..150 {
        let sentence_count = rng.random_range(2..=30);
        let forest = gen::forest(&mut rng, sentence_count, 9);

        // Mirror: reverse every sentence's token order.
        let mirrored = DepForest {
            sentences: forest
                .sentences
                .iter()
                .map(|s| {
                    let n = s.tokens.len();
                    let mut tokens: Vec<_> = s
                        .tokens
                        .iter()
                        .map(|t| typometrics::conllu::DepToken {
                            index: n + 1 - t.index,
                            form: t.form.clone(),
                            upos: t.upos.clone(),
                            head: if t.head == 0 { 0 } else { n + 1 - t.head },
                            deprel: t.deprel.clone(),
                        })
                        .collect();
                    tokens.sort_by_key(|t| t.index);
                    typometrics::conllu::DepSentence {
                        tokens,
                        sentence_id: s.sentence_id.clone(),
                    }
                })
                .collect(),
            dropped: 0,
            diagnostics: Vec::new(),
        };
        let a = word_order_report(&forest, WordOrderOptions::default()).unwrap();
        let b = word_order_report(&mirrored, WordOrderOptions::default()).unwrap();
        assert!((a.hde - b.hde).abs() <= TOL);
        assert!((a.roe - b.roe).abs() <= TOL);
        match (a.so_roe, b.so_roe) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= TOL),
            (None, None) => {}
            other => panic!("so_roe mismatch {other:?}"),
        }
        assert!(a.hde <= 1.0 + TOL, "HDE is capped at one bit");
        assert!(a.so_roe.unwrap_or(0.0) <= 1.0 + TOL);

        // Duplication: doubling every sentence changes nothing.
        let doubled = DepForest {
            sentences: forest
                .sentences
                .iter()
                .chain(&forest.sentences)
                .cloned()
                .collect(),
            dropped: 0,
            diagnostics: Vec::new(),
        };
        let c = word_order_report(&doubled, WordOrderOptions::default()).unwrap();
        assert_eq!(a.hde, c.hde);
        assert_eq!(a.roe, c.roe);
        assert_eq!(a.so_roe, c.so_roe);
    }
    pass("invariant: word-order metrics survive mirroring and forest duplication");
}

#[test]
fn invariant_relabeling_corpus_and_sampling_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    // Corpus metrics: permute token ids.
    for _ in 0..100 {
        let vocab = rng.random_range(2..20u32);
        let stream_len = rng.random_range(30..300);
        let tokens = gen::stream(&mut rng, stream_len, vocab);
        let w = rng.random_range(2..=15usize);
        if tokens.len() < w {
            continue;
        }
        let mut perm: Vec<u32> = (0..vocab).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let relabeled: Vec<TokenId> = tokens.iter().map(|&t| perm[t as usize]).collect();
        let config = WindowConfig::new(w, rng.random_range(1..=w)).unwrap();
        let a = window_metrics(tokens.iter().copied(), config, StreamOptions::default()).unwrap();
        let b = window_metrics(relabeled.iter().copied(), config, StreamOptions::default())
            .unwrap();
        assert!((a.mattr - b.mattr).abs() <= TOL);
        assert!((a.av - b.av).abs() <= TOL);
        assert!((a.eta - b.eta).abs() <= TOL);
        assert!((a.ttr_global - b.ttr_global).abs() <= TOL);
    }

    // Sampling metrics: per-feature value bijections.
    for _ in 0..100 {
        let langs = rng.random_range(4..=10usize);
        let matrix = gen::full_matrix(&mut rng, langs, 8);
        let relabeled = {
            let rows: Vec<Vec<Option<String>>> = (0..langs)
                .map(|i| {
                    (0..8)
                        .map(|j| {
                            matrix.value(i, j).map(|v| match v {
                                "0" => "2".to_string(),
                                "2" => "0".to_string(),
                                other => other.to_string(),
                            })
                        })
                        .collect()
                })
                .collect();
            typometrics::typology::FeatureMatrix::new(
                matrix.languages().to_vec(),
                matrix.features().to_vec(),
                rows,
            )
            .unwrap()
        };
        let k = rng.random_range(2..=langs.min(5));
        let sa = select_maxsum(&matrix, k, SelectionMode::Exact).unwrap();
        let sb = select_maxsum(&relabeled, k, SelectionMode::Exact).unwrap();
        assert_eq!(sa, sb);
        let qa = quality(&matrix, &sa).unwrap();
        let qb = quality(&relabeled, &sb).unwrap();
        assert!((qa.mpd - qb.mpd).abs() <= TOL);
        assert!((qa.fvi - qb.fvi).abs() <= TOL);
        assert!((qa.fvo - qb.fvo).abs() <= TOL);
        assert!((qa.entropy - qb.entropy).abs() <= TOL);
    }
    pass("invariant: relabeling token ids / feature values changes no metric and no selection");
}

#[test]
fn invariant_fvi_is_monotone_under_greedy_nesting() {
    let mut rng = ChaCha8Rng::seed_from_u64(114);
    for _ in 0..150 {
        let langs = rng.random_range(3..=12usize);
        let matrix = gen::sparse_matrix(&mut rng, langs, 6);
        let mut previous = 0.0;
        for k in 2..=langs {
            let sample = select_maxsum(&matrix, k, SelectionMode::Greedy).unwrap();
            let q = quality(&matrix, &sample).unwrap();
            assert!(
                q.fvi >= previous - TOL,
                "FVI decreased from {previous} to {} at k={k}",
                q.fvi
            );
            assert!((0.0..=1.0 + TOL).contains(&q.fvi));
            previous = q.fvi;
        }
        // The full frame attains inclusion 1.
        let full = quality(&matrix, matrix.languages()).unwrap();
        assert!((full.fvi - 1.0).abs() <= TOL);
    }
    pass("invariant: FVI never decreases along the greedy nesting and hits 1.0 at the full frame");
}

// =====================================================================
// Reference word-order values on real treebanks (network-optional).
// =====================================================================

fn find_treebank(dir: &Path, prefix: &str) -> Option<PathBuf> {
    let mut candidates: Vec<PathBuf> = std::fs::read_dir(dir)
        .ok()?
        .flatten()
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with(prefix) && n.ends_with(".conllu"))
                .unwrap_or(false)
        })
        .collect();
    candidates.sort();
    // Prefer the train split when several are present.
    candidates
        .iter()
        .find(|p| p.to_string_lossy().contains("train"))
        .cloned()
        .or_else(|| candidates.into_iter().next())
}

fn ud_dir() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("TYPOMETRICS_UD_DIR") {
        let dir = PathBuf::from(dir);
        if dir.is_dir() {
            return Some(dir);
        }
    }
    let local = data("ud");
    local.is_dir().then_some(local)
}

#[test]
fn reference_word_order_values_on_ud_treebanks() {
    let Some(dir) = ud_dir() else {
        println!(
            "[SKIP] reference word-order values: no treebanks found \
             (set TYPOMETRICS_UD_DIR or populate data/ud/ with en_ewt/ta_ttb/eu_bdt .conllu files)"
        );
        return;
    };
    let budget = |forest: &DepForest| -> DepForest {
        if forest.len() <= 1000 {
            forest.clone()
        } else {
            take_sentences(forest, 1000, 0)
        }
    };
    let mut checked = 0;
    if let Some(path) = find_treebank(&dir, "en_ewt") {
        let forest = budget(
            &parse_conllu(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap(),
        );
        let report = word_order_report(&forest, WordOrderOptions::default()).unwrap();
        assert!(
            (report.hde - 0.16).abs() <= 0.10,
            "en_ewt HDE {} not within 0.16 +/- 0.10",
            report.hde
        );
        assert!(
            (report.so_roe.unwrap() - 0.20).abs() <= 0.10,
            "en_ewt SO-ROE {:?} not within 0.20 +/- 0.10",
            report.so_roe
        );
        checked += 1;
    }
    if let Some(path) = find_treebank(&dir, "ta_ttb") {
        let forest = budget(
            &parse_conllu(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap(),
        );
        let report = word_order_report(&forest, WordOrderOptions::default()).unwrap();
        assert!(
            (report.so_roe.unwrap() - 0.94).abs() <= 0.10,
            "ta_ttb SO-ROE {:?} not within 0.94 +/- 0.10",
            report.so_roe
        );
        checked += 1;
    }
    if let Some(path) = find_treebank(&dir, "eu_bdt") {
        let forest = budget(
            &parse_conllu(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap(),
        );
        let report = word_order_report(&forest, WordOrderOptions::default()).unwrap();
        assert!(
            (report.hde - 0.50).abs() <= 0.10,
            "eu_bdt HDE {} not within 0.50 +/- 0.10",
            report.hde
        );
        checked += 1;
    }
    assert!(checked > 0, "treebank directory {dir:?} has no usable files");
    pass("reference: UD treebank HDE/SO-ROE within +/-0.10 of published values");
}

// =====================================================================
// Analysis fixture reproduction.
// =====================================================================

#[test]
fn analysis_fixture_reproduction() {
    let started = Instant::now();
    let metrics = MetricTable::from_csv(
        std::fs::File::open(data("reference/language_metrics.csv")).unwrap(),
    )
    .unwrap();
    let perf = PerformanceTable::from_csv(
        std::fs::File::open(data("reference/task_scores.csv")).unwrap(),
    )
    .unwrap();

    let drop = relative_drop(&perf, "english", "ud", PosType::Relative, PosType::NoPos).unwrap();
    let expected = (86.61 - 13.87) / 86.61;
    assert!((drop - expected).abs() <= 1e-12);
    assert!((drop - 0.8398).abs() <= 1e-4, "got {drop}");

    let specs: Vec<CorrelationSpec> = ["av", "eta", "mattr", "hde", "roe", "so_roe"]
        .iter()
        .flat_map(|metric| {
            ["ud", "wikiann", "sib200", "multiblimp"]
                .iter()
                .map(move |task| CorrelationSpec {
                    metric: metric.to_string(),
                    task: task.to_string(),
                    baseline: PosType::Relative,
                    ablated: PosType::NoPos,
                })
        })
        .collect();
    let reports = correlate_metrics(&metrics, &perf, &specs).unwrap();
    assert_eq!(reports.len(), 24);
    for report in &reports {
        assert_eq!(report.n, 7, "{}/{}", report.metric, report.task);
        let rho = report
            .spearman_rho
            .unwrap_or_else(|| panic!("{}/{} undefined", report.metric, report.task));
        assert!(rho.is_finite() && (-1.0..=1.0).contains(&rho));
        let r = report.pearson_r.expect("pearson defined");
        assert!(r.is_finite());
    }
    assert!(
        started.elapsed() < Duration::from_secs(1),
        "analysis took {:?}",
        started.elapsed()
    );
    pass("analysis: relative drop 0.8398 +/- 1e-4 and 24 finite correlations over n=7 in < 1 s");
}

// =====================================================================
// Throughput.
// =====================================================================

#[test]
fn throughput_window_metrics_on_ten_million_tokens() {
    // The stream is generated lazily; only the window state is held.
    let mut rng = ChaCha8Rng::seed_from_u64(120);
    let stream = std::iter::from_fn(move || Some(rng.random_range(0..50_000u32))).take(10_000_000);
    let started = Instant::now();
    let metrics = window_metrics(
        stream,
        WindowConfig::new(1000, 1).unwrap(),
        StreamOptions::default(),
    )
    .unwrap();
    let elapsed = started.elapsed();
    assert_eq!(metrics.token_count, 10_000_000);
    assert_eq!(metrics.window_count, 10_000_000 - 1000 + 1);
    assert!(
        elapsed < Duration::from_secs(60),
        "10M-token pass took {elapsed:?}"
    );
    pass(&format!(
        "throughput: 10M tokens, window 1000, step 1 in {elapsed:?} (< 60 s)"
    ));
}

#[test]
fn throughput_conllu_parsing_rate() {
    // 50k synthetic sentences; the rate floor is 50k sentences/minute.
    let mut doc = String::with_capacity(50_000 * 130);
    for i in 0..50_000 {
        doc.push_str(&format!("# sent_id = s{i}\n"));
        doc.push_str("1\tthe\t_\tDET\t_\t_\t2\tdet\t_\t_\n");
        doc.push_str("2\tdog\t_\tNOUN\t_\t_\t3\tnsubj\t_\t_\n");
        doc.push_str("3\tsees\t_\tVERB\t_\t_\t0\troot\t_\t_\n");
        doc.push_str("4\tcats\t_\tNOUN\t_\t_\t3\tobj\t_\t_\n\n");
    }
    let started = Instant::now();
    let forest = parse_conllu_str(&doc).unwrap();
    let elapsed = started.elapsed();
    assert_eq!(forest.len(), 50_000);
    assert!(
        elapsed < Duration::from_secs(60),
        "parsing 50k sentences took {elapsed:?}"
    );
    pass(&format!(
        "throughput: 50k CoNLL-U sentences parsed in {elapsed:?} (>= 50k/minute)"
    ));
}

// =====================================================================
// Pipeline determinism against the committed golden file.
// =====================================================================

fn run_pipeline(out_dir: &Path, extra: &[&str]) -> String {
    let config = data("demo/config.toml");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_typometrics"))
        .arg("pipeline")
        .arg("--config")
        .arg(&config)
        .arg("--out-dir")
        .arg(out_dir)
        .args(extra)
        .status()
        .expect("spawn typometrics");
    assert!(status.success());
    std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap()
}

#[test]
fn determinism_pipeline_reproduces_the_golden_file() {
    let golden = std::fs::read_to_string(data("demo/golden/metrics.csv")).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let runs = [
        run_pipeline(&dir.path().join("a"), &[]),
        run_pipeline(&dir.path().join("b"), &[]),
        run_pipeline(&dir.path().join("t1"), &["--threads", "1"]),
        run_pipeline(&dir.path().join("t4"), &["--threads", "4"]),
    ];
    for (i, run) in runs.iter().enumerate() {
        assert_eq!(run.as_str(), golden.as_str(), "run {i} diverged from golden");
    }
    pass("determinism: pipeline output is byte-identical across runs and thread counts");
}

#[test]
fn determinism_golden_values_match_independent_oracles() {
    // Recompute each golden row with the naive oracles over the same
    // inputs and tokenizer.
    let golden = std::fs::read_to_string(data("demo/golden/metrics.csv")).unwrap();
    let mut rows: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in golden.lines().skip(1) {
        let fields: Vec<String> = line.split(',').map(String::from).collect();
        rows.insert(fields[0].clone(), fields);
    }
    assert_eq!(rows.len(), 2);

    for code in ["alpha", "beta"] {
        let fields = &rows[code];
        let corpus: Vec<String> = std::fs::read_to_string(data(&format!("demo/{code}.txt")))
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        let model = train_bpe(
            corpus.iter().map(String::as_str),
            58,
            PretokenizerRule::Whitespace,
        )
        .unwrap();
        let mut tokens: Vec<TokenId> = Vec::new();
        let mut token_total = 0u64;
        let mut word_total = 0u64;
        for line in &corpus {
            let stream = model.encode(line);
            token_total += stream.len() as u64;
            word_total += stream.word_count() as u64;
            tokens.extend(stream.iter());
        }
        let slow = naive::window_metrics(&tokens, 20, 1, Some(model.unknown_id()));
        let fertility = token_total as f64 / word_total as f64;

        let forest = parse_conllu_str(
            &std::fs::read_to_string(data(&format!("demo/{code}.conllu"))).unwrap(),
        )
        .unwrap();
        let hde = naive::hde(&forest).unwrap();
        let roe = naive::roe(&forest, 5).unwrap();
        let so = naive::so_roe(&forest).unwrap();

        let col = |i: usize| -> f64 { fields[i].parse().unwrap() };
        assert!((col(1) - hde).abs() <= 1e-9, "{code} hde");
        assert!((col(2) - roe).abs() <= 1e-9, "{code} roe");
        assert!((col(3) - so).abs() <= 1e-9, "{code} so_roe");
        assert!((col(4) - slow.av).abs() <= 1e-9, "{code} av");
        assert!((col(5) - slow.eta).abs() <= 1e-9, "{code} eta");
        assert!((col(6) - slow.mattr).abs() <= 1e-9, "{code} mattr");
        assert!((col(7) - slow.ttr_global).abs() <= 1e-9, "{code} ttr");
        assert!((col(8) - fertility).abs() <= 1e-9, "{code} fertility");
        assert_eq!(col(9) as u64, token_total, "{code} tokens");
    }
    pass("determinism: golden metrics.csv values verified against the independent oracles");
}
