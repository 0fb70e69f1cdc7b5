//! Delimiter-nesting parse tree with identifier abstraction, and the
//! subtree-overlap score computed on it. Nesting follows {} () []; within a
//! nesting level, statements split at top-level ';'. Identifier names are
//! abstracted away so consistent renaming does not change the tree.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lexer::{CodeToken, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxTree {
    pub label: String,
    pub children: Vec<SyntaxTree>,
}

impl SyntaxTree {
    fn leaf(label: impl Into<String>) -> SyntaxTree {
        SyntaxTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn serialize(&self) -> String {
        if self.children.is_empty() {
            return self.label.clone();
        }
        let inner: Vec<String> = self.children.iter().map(|c| c.serialize()).collect();
        format!("{}[{}]", self.label, inner.join(","))
    }
}

/// Structural parse that keeps the actual tokens; the abstracted
/// [`SyntaxTree`] and the data-flow pass are both derived from it.
#[derive(Debug, Clone)]
pub(crate) enum StructNode {
    Token(CodeToken),
    /// Group label ("block", "paren", "bracket") and its statements.
    Group(&'static str, Vec<StructStmt>),
}

#[derive(Debug, Clone)]
pub(crate) struct StructStmt {
    pub children: Vec<StructNode>,
}

fn closer_for(open: &str) -> (&'static str, &'static str) {
    match open {
        "{" => ("}", "block"),
        "(" => (")", "paren"),
        _ => ("]", "bracket"),
    }
}

pub(crate) fn parse_structure(tokens: &[CodeToken]) -> Vec<StructStmt> {
    let mut index = 0;
    parse_level(tokens, &mut index, None)
}

fn parse_level(tokens: &[CodeToken], index: &mut usize, closer: Option<&str>) -> Vec<StructStmt> {
    let mut stmts = Vec::new();
    let mut current: Vec<StructNode> = Vec::new();
    while *index < tokens.len() {
        let token = &tokens[*index];
        let text = token.text.as_str();
        if token.kind == TokenKind::Punct {
            match text {
                "{" | "(" | "[" => {
                    *index += 1;
                    let (close, label) = closer_for(text);
                    let inner = parse_level(tokens, index, Some(close));
                    current.push(StructNode::Group(label, inner));
                    continue;
                }
                "}" | ")" | "]" => {
                    *index += 1;
                    if Some(text) == closer {
                        if !current.is_empty() {
                            stmts.push(StructStmt { children: current });
                        }
                        return stmts;
                    }
                    // Stray closer: dropped, parsing continues.
                    continue;
                }
                ";" => {
                    *index += 1;
                    current.push(StructNode::Token(token.clone()));
                    stmts.push(StructStmt {
                        children: std::mem::take(&mut current),
                    });
                    continue;
                }
                _ => {}
            }
        }
        current.push(StructNode::Token(token.clone()));
        *index += 1;
    }
    // Unmatched opener: closed at end of input.
    if !current.is_empty() {
        stmts.push(StructStmt { children: current });
    }
    stmts
}

fn token_label(token: &CodeToken) -> String {
    match token.kind {
        TokenKind::Identifier => "token:Identifier".to_string(),
        TokenKind::Number => "token:Number".to_string(),
        TokenKind::StringLit => "token:StringLit".to_string(),
        TokenKind::Other => "token:Other".to_string(),
        // Keywords, operators, and punctuation keep their surface text.
        TokenKind::Keyword | TokenKind::Operator | TokenKind::Punct => token.text.clone(),
    }
}

fn abstract_stmt(stmt: &StructStmt) -> SyntaxTree {
    SyntaxTree {
        label: "stmt".to_string(),
        children: stmt.children.iter().map(abstract_node).collect(),
    }
}

fn abstract_node(node: &StructNode) -> SyntaxTree {
    match node {
        StructNode::Token(token) => SyntaxTree::leaf(token_label(token)),
        StructNode::Group(label, stmts) => SyntaxTree {
            label: (*label).to_string(),
            children: stmts.iter().map(abstract_stmt).collect(),
        },
    }
}

pub fn parse_syntax(tokens: &[CodeToken]) -> SyntaxTree {
    let stmts = parse_structure(tokens);
    SyntaxTree {
        label: "unit".to_string(),
        children: stmts.iter().map(abstract_stmt).collect(),
    }
}

/// All internal subtrees (nodes with at least one child), serialized.
fn subtree_multiset(tree: &SyntaxTree) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    collect_subtrees(tree, &mut counts);
    counts
}

fn collect_subtrees(tree: &SyntaxTree, counts: &mut HashMap<String, usize>) {
    if !tree.children.is_empty() {
        *counts.entry(tree.serialize()).or_insert(0) += 1;
        for child in &tree.children {
            collect_subtrees(child, counts);
        }
    }
}

/// Fraction of reference subtrees whose serialization occurs among candidate
/// subtrees, with multiplicity clipping.
pub fn syntax_match(ref_tree: &SyntaxTree, cand_tree: &SyntaxTree) -> f64 {
    let ref_counts = subtree_multiset(ref_tree);
    let total: usize = ref_counts.values().sum();
    if total == 0 {
        let cand_total: usize = subtree_multiset(cand_tree).values().sum();
        return if cand_total == 0 { 1.0 } else { 0.0 };
    }
    let cand_counts = subtree_multiset(cand_tree);
    let matched: usize = ref_counts
        .iter()
        .map(|(key, &count)| count.min(cand_counts.get(key).copied().unwrap_or(0)))
        .sum();
    matched as f64 / total as f64
}
