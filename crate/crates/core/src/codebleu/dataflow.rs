//! Statement-local def-use extraction and the edge-overlap score. Variable
//! ids are first-occurrence ordinals, so the edge list is invariant under
//! consistent identifier renaming.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::lexer::{CodeToken, TokenKind};
use super::syntax::{parse_structure, StructNode, StructStmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    ComesFrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DataFlowEdge {
    pub def_var: usize,
    pub use_var: usize,
    pub relation: Relation,
}

/// Extract def-use edges: in each statement, the identifier immediately left
/// of a top-level `=` defines; identifiers on the right side use. A use
/// links to the most recent prior def of the same surface name; uses of
/// never-defined names are dropped.
pub fn extract_dataflow(tokens: &[CodeToken]) -> Vec<DataFlowEdge> {
    let stmts = parse_structure(tokens);
    let mut defined: HashSet<String> = HashSet::new();
    let mut named_edges: Vec<(String, String)> = Vec::new();
    for stmt in &stmts {
        walk_stmt(stmt, &mut defined, &mut named_edges);
    }
    normalize(&named_edges)
}

fn walk_stmt(stmt: &StructStmt, defined: &mut HashSet<String>, edges: &mut Vec<(String, String)>) {
    // Locate the first top-level plain assignment in this statement.
    let assign_pos = stmt.children.iter().position(|node| {
        matches!(node, StructNode::Token(t) if t.kind == TokenKind::Operator && t.text == "=")
    });
    if let Some(pos) = assign_pos {
        let def_name = match pos.checked_sub(1).and_then(|p| stmt.children.get(p)) {
            Some(StructNode::Token(t)) if t.kind == TokenKind::Identifier => Some(t.text.clone()),
            _ => None,
        };
        let mut uses = Vec::new();
        for node in &stmt.children[pos + 1..] {
            collect_identifiers(node, &mut uses);
        }
        if let Some(def_name) = def_name {
            for use_name in &uses {
                if defined.contains(use_name) {
                    edges.push((def_name.clone(), use_name.clone()));
                }
            }
            defined.insert(def_name);
        }
        // Nested groups on the right side may hold their own statements.
        for node in &stmt.children[pos + 1..] {
            walk_nested(node, defined, edges);
        }
        for node in &stmt.children[..pos] {
            walk_nested(node, defined, edges);
        }
    } else {
        for node in &stmt.children {
            walk_nested(node, defined, edges);
        }
    }
}

fn walk_nested(
    node: &StructNode,
    defined: &mut HashSet<String>,
    edges: &mut Vec<(String, String)>,
) {
    if let StructNode::Group(_, stmts) = node {
        for stmt in stmts {
            walk_stmt(stmt, defined, edges);
        }
    }
}

fn collect_identifiers(node: &StructNode, out: &mut Vec<String>) {
    match node {
        StructNode::Token(t) if t.kind == TokenKind::Identifier => out.push(t.text.clone()),
        StructNode::Token(_) => {}
        StructNode::Group(_, stmts) => {
            for stmt in stmts {
                for child in &stmt.children {
                    collect_identifiers(child, out);
                }
            }
        }
    }
}

/// Replace surface names with first-occurrence ordinals over the edge list.
fn normalize(named: &[(String, String)]) -> Vec<DataFlowEdge> {
    let mut next = 0usize;
    let mut table: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::with_capacity(named.len());
    for (def_name, use_name) in named {
        let def_var = *table.entry(def_name.clone()).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        let use_var = *table.entry(use_name.clone()).or_insert_with(|| {
            let id = next;
            next += 1;
            id
        });
        edges.push(DataFlowEdge {
            def_var,
            use_var,
            relation: Relation::ComesFrom,
        });
    }
    edges
}

/// Multiset overlap of reference edges in the candidate. An empty reference
/// imposes no constraint and scores 1.
pub fn dataflow_match(ref_edges: &[DataFlowEdge], cand_edges: &[DataFlowEdge]) -> f64 {
    if ref_edges.is_empty() {
        return 1.0;
    }
    let mut cand_counts: HashMap<DataFlowEdge, usize> = HashMap::new();
    for edge in cand_edges {
        *cand_counts.entry(*edge).or_insert(0) += 1;
    }
    let mut matched = 0usize;
    for edge in ref_edges {
        if let Some(count) = cand_counts.get_mut(edge) {
            if *count > 0 {
                *count -= 1;
                matched += 1;
            }
        }
    }
    matched as f64 / ref_edges.len() as f64
}
