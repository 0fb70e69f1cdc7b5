//! CodeBLEU: weighted sum of n-gram, keyword-weighted n-gram, syntax-subtree,
//! and data-flow similarity between candidate and ground-truth code.

pub mod dataflow;
pub mod lexer;
pub mod ngram;
pub mod syntax;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::lang::Lang;

pub use dataflow::{dataflow_match, extract_dataflow, DataFlowEdge, Relation};
pub use lexer::{lex, CodeToken, LexResult, TokenKind};
pub use ngram::{bleu, weighted_bleu};
pub use syntax::{parse_syntax, syntax_match, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        CodeBleuWeights {
            alpha: 0.25,
            beta: 0.25,
            gamma: 0.25,
            delta: 0.25,
        }
    }
}

impl CodeBleuWeights {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.alpha, self.beta, self.gamma, self.delta];
        if parts.iter().any(|&w| w < 0.0) {
            return Err(HarnessError::Config("codebleu weights must be >= 0".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HarnessError::Config(format!(
                "codebleu weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

pub const DEFAULT_KEYWORD_WEIGHT: f64 = 5.0;
pub const DEFAULT_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBundle {
    pub bleu: f64,
    pub weighted_bleu: f64,
    pub syntax_match: f64,
    pub dataflow_match: f64,
    pub codebleu: f64,
    pub bias: f64,
}

/// Compute all four components on lexed/parsed inputs and combine them.
pub fn codebleu_score(
    ref_source: &str,
    cand_source: &str,
    lang: Lang,
    weights: CodeBleuWeights,
) -> Result<ScoreBundle> {
    weights.validate()?;
    let ref_lex = lex(ref_source, lang);
    let cand_lex = lex(cand_source, lang);

    let ref_texts: Vec<&str> = ref_lex.tokens.iter().map(|t| t.text.as_str()).collect();
    let cand_texts: Vec<&str> = cand_lex.tokens.iter().map(|t| t.text.as_str()).collect();
    let bleu_score = bleu(&ref_texts, &cand_texts, DEFAULT_MAX_N);
    let weighted = weighted_bleu(
        &ref_lex.tokens,
        &cand_lex.tokens,
        DEFAULT_KEYWORD_WEIGHT,
        DEFAULT_MAX_N,
    );

    let ref_tree = parse_syntax(&ref_lex.tokens);
    let cand_tree = parse_syntax(&cand_lex.tokens);
    let syntax = syntax_match(&ref_tree, &cand_tree);

    let ref_edges = extract_dataflow(&ref_lex.tokens);
    let cand_edges = extract_dataflow(&cand_lex.tokens);
    let dataflow = dataflow_match(&ref_edges, &cand_edges);

    let codebleu = weights.alpha * bleu_score
        + weights.beta * weighted
        + weights.gamma * syntax
        + weights.delta * dataflow;
    Ok(ScoreBundle {
        bleu: bleu_score,
        weighted_bleu: weighted,
        syntax_match: syntax,
        dataflow_match: dataflow,
        codebleu,
        bias: 1.0 - codebleu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF_PROGRAM: &str = r#"#include <iostream>
int main() {
    int total = 0;
    for (int i = 0; i < 10; i++) {
        total = total + i;
    }
    std::cout << total << std::endl;
    return 0;
}
"#;

    #[test]
    fn identity_scores_one_everywhere() {
        let bundle = codebleu_score(
            REF_PROGRAM,
            REF_PROGRAM,
            Lang::Cpp,
            CodeBleuWeights::default(),
        )
        .unwrap();
        assert!((bundle.bleu - 1.0).abs() < 1e-12);
        assert!((bundle.weighted_bleu - 1.0).abs() < 1e-12);
        assert!((bundle.syntax_match - 1.0).abs() < 1e-12);
        assert!((bundle.dataflow_match - 1.0).abs() < 1e-12);
        assert!((bundle.codebleu - 1.0).abs() < 1e-12);
        assert!(bundle.bias.abs() < 1e-12);
    }

    #[test]
    fn consistent_renaming_keeps_structural_components_at_one() {
        let renamed = REF_PROGRAM.replace("total", "sum");
        let bundle =
            codebleu_score(REF_PROGRAM, &renamed, Lang::Cpp, CodeBleuWeights::default()).unwrap();
        assert!((bundle.syntax_match - 1.0).abs() < 1e-12);
        assert!((bundle.dataflow_match - 1.0).abs() < 1e-12);
        assert!(bundle.bleu < 1.0);
        assert!(
            bundle.codebleu > 0.5 && bundle.codebleu < 1.0,
            "{}",
            bundle.codebleu
        );
    }

    #[test]
    fn token_disjoint_candidate_scores_low() {
        // Reference carries dataflow so the empty-reference-edges rule does
        // not apply here.
        let reference = "alpha = beta ; gamma = alpha ;";
        let candidate = "zeta eta theta iota";
        let bundle =
            codebleu_score(reference, candidate, Lang::Cpp, CodeBleuWeights::default()).unwrap();
        assert!(bundle.codebleu < 0.2, "{}", bundle.codebleu);
        assert!((bundle.bias - (1.0 - bundle.codebleu)).abs() < 1e-15);
    }

    #[test]
    fn bad_weights_are_rejected() {
        let weights = CodeBleuWeights {
            alpha: 0.5,
            beta: 0.5,
            gamma: 0.5,
            delta: 0.5,
        };
        assert!(codebleu_score("a", "a", Lang::Cpp, weights).is_err());
    }

    #[test]
    fn components_stay_in_unit_interval() {
        let pairs = [
            ("", ""),
            ("int a ;", ""),
            ("", "int a ;"),
            ("a = b ;", "b = a ;"),
            (REF_PROGRAM, "int main() { return 1; }"),
        ];
        for (r, c) in pairs {
            let bundle = codebleu_score(r, c, Lang::Cpp, CodeBleuWeights::default()).unwrap();
            for v in [
                bundle.bleu,
                bundle.weighted_bleu,
                bundle.syntax_match,
                bundle.dataflow_match,
                bundle.codebleu,
            ] {
                assert!((0.0..=1.0).contains(&v), "{r:?} vs {c:?}: {v}");
            }
        }
    }
}
