//! Output similarity: numeric-normalizing tokenizer plus Jaro-Winkler
//! scoring over the canonical joined token string.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedOutput {
    pub tokens: Vec<String>,
    pub joined: String,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputComparison {
    pub jaro_winkler: f64,
    pub ref_tokens: usize,
    pub cand_tokens: usize,
}

/// Split raw program output into tokens. At each non-whitespace position the
/// longest numeric literal wins, then an identifier, else a single character.
pub fn tokenize_output(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        if let Some(len) = match_numeric(&chars[i..]) {
            tokens.push(chars[i..i + len].iter().collect());
            i += len;
        } else if let Some(len) = match_identifier(&chars[i..]) {
            tokens.push(chars[i..i + len].iter().collect());
            i += len;
        } else {
            tokens.push(chars[i].to_string());
            i += 1;
        }
    }
    tokens
}

/// Numeric literal: `[+-]?((\d+\.?\d*)|(\.\d+))([eE][+-]?\d+)?`.
fn match_numeric(chars: &[char]) -> Option<usize> {
    let mut i = 0;
    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
        i += 1;
    }
    let mantissa_start = i;
    let mut saw_digit = false;
    while i < chars.len() && chars[i].is_ascii_digit() {
        saw_digit = true;
        i += 1;
    }
    if i < chars.len() && chars[i] == '.' {
        if saw_digit {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        } else {
            // `.d+` form requires at least one digit after the dot.
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j == i + 1 {
                return None;
            }
            saw_digit = true;
            i = j;
        }
    }
    if !saw_digit || i == mantissa_start {
        return None;
    }
    // Optional exponent; only consumed when digits follow.
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        let exp_digits_start = j;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_digits_start {
            i = j;
        }
    }
    Some(i)
}

fn match_identifier(chars: &[char]) -> Option<usize> {
    if chars.is_empty() || !(chars[0].is_ascii_alphabetic() || chars[0] == '_') {
        return None;
    }
    let mut i = 1;
    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
        i += 1;
    }
    Some(i)
}

/// Round every parseable numeric token half-to-even to 4 decimal places and
/// re-render it canonically; everything else passes through.
pub fn normalize_tokens(tokens: &[String]) -> NormalizedOutput {
    let normalized: Vec<String> = tokens.iter().map(|t| normalize_token(t)).collect();
    let joined = normalized.join(" ");
    NormalizedOutput {
        tokens: normalized,
        joined,
        truncated: false,
    }
}

fn normalize_token(token: &str) -> String {
    match token.parse::<f64>() {
        Ok(value) if value.is_finite() => render_rounded(value),
        _ => token.to_string(),
    }
}

fn render_rounded(value: f64) -> String {
    let scaled = value * 10000.0;
    let rounded = round_ties_even(scaled) / 10000.0;
    // -0 -> 0; f64 Display is already canonical otherwise: shortest digits,
    // no trailing zeros, integers without a decimal point.
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded}")
}

fn round_ties_even(x: f64) -> f64 {
    let floor = x.floor();
    let frac = x - floor;
    if frac > 0.5 || (frac == 0.5 && (floor as i64) % 2 != 0) {
        floor + 1.0
    } else {
        floor
    }
}

/// Jaro-Winkler similarity over character sequences. Prefix weight 0.1,
/// prefix cap 4; both empty scores 1, exactly one empty scores 0.
pub fn jaro_winkler(s1: &str, s2: &str) -> f64 {
    let a: Vec<char> = s1.chars().collect();
    let b: Vec<char> = s2.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let jaro = jaro_similarity(&a, &b);
    let prefix = a
        .iter()
        .zip(b.iter())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count() as f64;
    jaro + prefix * 0.1 * (1.0 - jaro)
}

fn jaro_similarity(a: &[char], b: &[char]) -> f64 {
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && b[j] == *ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let mut transpositions = 0usize;
    let mut j = 0usize;
    for (i, _) in a.iter().enumerate().filter(|(i, _)| a_matched[*i]) {
        while !b_matched[j] {
            j += 1;
        }
        if a[i] != b[j] {
            transpositions += 1;
        }
        j += 1;
    }
    let m = matches as f64;
    let t = transpositions as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// End-to-end scoring of two program outputs.
pub fn output_similarity(ref_stdout: &str, cand_stdout: &str) -> OutputComparison {
    let ref_norm = normalize_tokens(&tokenize_output(ref_stdout));
    let cand_norm = normalize_tokens(&tokenize_output(cand_stdout));
    OutputComparison {
        jaro_winkler: jaro_winkler(&ref_norm.joined, &cand_norm.joined),
        ref_tokens: ref_norm.tokens.len(),
        cand_tokens: cand_norm.tokens.len(),
    }
}

/// Canonical joined string for one raw output, for report/CLI display.
pub fn canonical_output(text: &str) -> String {
    normalize_tokens(&tokenize_output(text)).joined
}
