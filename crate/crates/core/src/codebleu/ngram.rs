//! BLEU-style n-gram components: modified precision with clipping, add-one
//! smoothing for n >= 2, geometric mean, brevity penalty. The weighted
//! variant gives keyword unigrams extra mass in both numerator and
//! denominator of p_1.

use std::collections::HashMap;

use super::lexer::{CodeToken, TokenKind};

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(|t| t.as_ref()).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped match count and candidate n-gram total for one order.
fn clipped_matches<T: AsRef<str>>(ref_tokens: &[T], cand_tokens: &[T], n: usize) -> (usize, usize) {
    let ref_counts = ngram_counts(ref_tokens, n);
    let cand_counts = ngram_counts(cand_tokens, n);
    let total: usize = cand_counts.values().sum();
    let matched: usize = cand_counts
        .iter()
        .map(|(gram, &count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, total)
}

fn brevity_penalty(ref_len: usize, cand_len: usize) -> f64 {
    if cand_len == 0 {
        return 0.0;
    }
    (1.0 - ref_len as f64 / cand_len as f64).exp().min(1.0)
}

fn combine(precisions: &[f64], ref_len: usize, cand_len: usize) -> f64 {
    if precisions.iter().any(|&p| p <= 0.0) {
        return 0.0;
    }
    let log_sum: f64 = precisions.iter().map(|p| p.ln()).sum();
    let geo_mean = (log_sum / precisions.len() as f64).exp();
    brevity_penalty(ref_len, cand_len) * geo_mean
}

pub fn bleu<T: AsRef<str>>(ref_tokens: &[T], cand_tokens: &[T], max_n: usize) -> f64 {
    assert!(max_n >= 1);
    if cand_tokens.is_empty() {
        return 0.0;
    }
    let mut precisions = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let (matched, total) = clipped_matches(ref_tokens, cand_tokens, n);
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        precisions.push(p);
    }
    combine(&precisions, ref_tokens.len(), cand_tokens.len())
}

/// BLEU with keyword-weighted unigram precision. Higher orders are
/// unweighted and share the plain BLEU smoothing.
pub fn weighted_bleu(
    ref_tokens: &[CodeToken],
    cand_tokens: &[CodeToken],
    keyword_weight: f64,
    max_n: usize,
) -> f64 {
    assert!(max_n >= 1);
    assert!(keyword_weight >= 1.0);
    if cand_tokens.is_empty() {
        return 0.0;
    }
    let ref_texts: Vec<&str> = ref_tokens.iter().map(|t| t.text.as_str()).collect();
    let cand_texts: Vec<&str> = cand_tokens.iter().map(|t| t.text.as_str()).collect();

    let ref_counts = ngram_counts(&ref_texts, 1);
    let mut cand_counts: HashMap<&str, (usize, f64)> = HashMap::new();
    for token in cand_tokens {
        let weight = if token.kind == TokenKind::Keyword {
            keyword_weight
        } else {
            1.0
        };
        let entry = cand_counts
            .entry(token.text.as_str())
            .or_insert((0, weight));
        entry.0 += 1;
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (text, (count, weight)) in &cand_counts {
        let ref_count = ref_counts.get(&vec![*text]).copied().unwrap_or(0);
        numerator += *weight * (*count).min(ref_count) as f64;
        denominator += *weight * *count as f64;
    }
    let mut precisions = vec![numerator / denominator];
    for n in 2..=max_n {
        let (matched, total) = clipped_matches(&ref_texts, &cand_texts, n);
        precisions.push((matched + 1) as f64 / (total + 1) as f64);
    }
    combine(&precisions, ref_tokens.len(), cand_tokens.len())
}
