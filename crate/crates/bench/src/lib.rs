//! Shared input builders for the benchmark targets.

use typometrics::tokenizer::TokenId;

/// Deterministic pseudo-random token stream with a Zipf-flavored
/// skew: low ids are frequent, high ids rare.
pub fn synthetic_stream(len: usize, vocab: u32, seed: u64) -> Vec<TokenId> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    (0..len)
        .map(|_| {
            let a = next() % vocab as u64;
            let b = next() % vocab as u64;
            a.min(b) as TokenId
        })
        .collect()
}

/// A synthetic CoNLL-U document of simple three-token clauses.
pub fn synthetic_conllu(sentences: usize) -> String {
    let mut out = String::with_capacity(sentences * 120);
    for i in 0..sentences {
        let flip = i % 3 == 0;
        out.push_str(&format!("# sent_id = s{i}\n"));
        if flip {
            out.push_str("1\tobj\t_\tNOUN\t_\t_\t2\tobj\t_\t_\n");
            out.push_str("2\tverb\t_\tVERB\t_\t_\t0\troot\t_\t_\n");
            out.push_str("3\tsubj\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n");
        } else {
            out.push_str("1\tsubj\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_\n");
            out.push_str("2\tverb\t_\tVERB\t_\t_\t0\troot\t_\t_\n");
            out.push_str("3\tobj\t_\tNOUN\t_\t_\t2\tobj\t_\t_\n");
        }
        out.push('\n');
    }
    out
}
