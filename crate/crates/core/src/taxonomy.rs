//! Classification of compiler stderr into ten error categories via ordered
//! literal-substring rules. Rules live in a data file so compiler-version
//! drift in diagnostic wording is a data change, not a code change.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::exec::{CompileResult, CompileStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorCategory {
    Syntax,
    Type,
    Linker,
    Declaration,
    Semantic,
    Scope,
    Template,
    FileIO,
    Memory,
    Other,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 10] = [
        ErrorCategory::Syntax,
        ErrorCategory::Type,
        ErrorCategory::Linker,
        ErrorCategory::Declaration,
        ErrorCategory::Semantic,
        ErrorCategory::Scope,
        ErrorCategory::Template,
        ErrorCategory::FileIO,
        ErrorCategory::Memory,
        ErrorCategory::Other,
    ];
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ErrorCategory::Syntax => "Syntax",
            ErrorCategory::Type => "Type",
            ErrorCategory::Linker => "Linker",
            ErrorCategory::Declaration => "Declaration",
            ErrorCategory::Semantic => "Semantic",
            ErrorCategory::Scope => "Scope",
            ErrorCategory::Template => "Template",
            ErrorCategory::FileIO => "FileIO",
            ErrorCategory::Memory => "Memory",
            ErrorCategory::Other => "Other",
        };
        f.write_str(name)
    }
}

impl FromStr for ErrorCategory {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Syntax" => Ok(ErrorCategory::Syntax),
            "Type" => Ok(ErrorCategory::Type),
            "Linker" => Ok(ErrorCategory::Linker),
            "Declaration" => Ok(ErrorCategory::Declaration),
            "Semantic" => Ok(ErrorCategory::Semantic),
            "Scope" => Ok(ErrorCategory::Scope),
            "Template" => Ok(ErrorCategory::Template),
            "FileIO" => Ok(ErrorCategory::FileIO),
            "Memory" => Ok(ErrorCategory::Memory),
            "Other" => Ok(ErrorCategory::Other),
            other => Err(format!("unknown error category '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatcherRule {
    pub priority: u32,
    pub category: ErrorCategory,
    /// true = every pattern must occur (conjunction); false = any one suffices.
    pub requires_all: bool,
    pub patterns: Vec<String>,
}

impl MatcherRule {
    fn matches(&self, line: &str) -> bool {
        if self.requires_all {
            self.patterns.iter().all(|p| line.contains(p.as_str()))
        } else {
            self.patterns.iter().any(|p| line.contains(p.as_str()))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<MatcherRule>,
}

const DEFAULT_RULES_TSV: &str = include_str!("../data/error_rules.tsv");

impl RuleSet {
    /// The shipped default order: one rule per table row, with the Memory
    /// conjunction moved ahead of Semantic and the generic Syntax patterns
    /// ("expected", "before") demoted below the specific Syntax patterns.
    pub fn default_rules() -> RuleSet {
        RuleSet::parse(DEFAULT_RULES_TSV).expect("embedded rules file is well-formed")
    }

    /// Literal top-to-bottom table order, without the two repairs. Under this
    /// order the Memory patterns are shadowed by Semantic's "invalid use of".
    pub fn strict_table_order() -> RuleSet {
        let mut rules = RuleSet::default_rules().rules;
        // Merge the two Syntax rules back, generic patterns first.
        let generic = rules.remove(1);
        let mut syntax_patterns = generic.patterns;
        syntax_patterns.append(&mut rules[0].patterns);
        rules[0].patterns = syntax_patterns;
        // Memory goes back to the bottom as a disjunction.
        let memory_pos = rules
            .iter()
            .position(|r| r.category == ErrorCategory::Memory)
            .expect("default rules include Memory");
        let mut memory = rules.remove(memory_pos);
        memory.requires_all = false;
        memory.priority = rules.last().map(|r| r.priority + 10).unwrap_or(10);
        rules.push(memory);
        RuleSet { rules }
    }

    /// Parse the TSV rule format:
    /// `priority<TAB>category<TAB>ALL|ANY<TAB>pattern[<TAB>pattern...]`.
    pub fn parse(text: &str) -> Result<RuleSet> {
        let mut rules = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 4 {
                return Err(HarnessError::Config(format!(
                    "rules line {}: expected at least 4 tab-separated fields",
                    lineno + 1
                )));
            }
            let priority: u32 = fields[0].parse().map_err(|_| {
                HarnessError::Config(format!("rules line {}: bad priority", lineno + 1))
            })?;
            let category: ErrorCategory = fields[1]
                .parse()
                .map_err(|e| HarnessError::Config(format!("rules line {}: {e}", lineno + 1)))?;
            let requires_all = match fields[2] {
                "ALL" => true,
                "ANY" => false,
                other => {
                    return Err(HarnessError::Config(format!(
                        "rules line {}: expected ALL or ANY, got '{other}'",
                        lineno + 1
                    )))
                }
            };
            let patterns: Vec<String> = fields[3..].iter().map(|s| s.to_string()).collect();
            if patterns.iter().any(|p| p.is_empty()) {
                return Err(HarnessError::Config(format!(
                    "rules line {}: empty pattern",
                    lineno + 1
                )));
            }
            rules.push(MatcherRule {
                priority,
                category,
                requires_all,
                patterns,
            });
        }
        let set = RuleSet { rules };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for rule in &self.rules {
            if !seen.insert(rule.priority) {
                return Err(HarnessError::Config(format!(
                    "duplicate rule priority {}",
                    rule.priority
                )));
            }
            if rule.patterns.is_empty() {
                return Err(HarnessError::Config("rule with no patterns".into()));
            }
        }
        Ok(())
    }

    /// Rules in evaluation order, regardless of storage order.
    fn ordered(&self) -> Vec<&MatcherRule> {
        let mut rules: Vec<&MatcherRule> = self.rules.iter().collect();
        rules.sort_by_key(|r| r.priority);
        rules
    }

    pub fn rules(&self) -> &[MatcherRule] {
        &self.rules
    }

    /// Shuffle storage order while keeping priorities; classification must
    /// not change. Used by order-stability tests.
    #[doc(hidden)]
    pub fn with_storage_order(mut self, permutation: &[usize]) -> RuleSet {
        let rules = std::mem::take(&mut self.rules);
        let mut out = Vec::with_capacity(rules.len());
        for &i in permutation {
            out.push(rules[i].clone());
        }
        RuleSet { rules: out }
    }
}

/// Classify one stderr line: first rule (by priority) that matches wins,
/// Other if none does.
pub fn classify_line(stderr_line: &str, rules: &RuleSet) -> ErrorCategory {
    for rule in rules.ordered() {
        if rule.matches(stderr_line) {
            return rule.category;
        }
    }
    ErrorCategory::Other
}

/// Outcome of classifying one failed compile: the category of the first
/// diagnostic line plus a multiset over all diagnostic lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureClassification {
    pub primary: ErrorCategory,
    pub all: BTreeMap<ErrorCategory, usize>,
}

/// Classify a failed compile. Diagnostic lines are those containing the
/// "error:" marker plus linker lines containing "undefined reference".
/// Timeouts and empty stderr classify as Other.
pub fn classify_compile_failure(result: &CompileResult, rules: &RuleSet) -> FailureClassification {
    let mut all = BTreeMap::new();
    if result.status == CompileStatus::Timeout {
        all.insert(ErrorCategory::Other, 1);
        return FailureClassification {
            primary: ErrorCategory::Other,
            all,
        };
    }
    let mut primary = None;
    for line in result.stderr_text.lines() {
        if !(line.contains("error:") || line.contains("undefined reference")) {
            continue;
        }
        let category = classify_line(line, rules);
        primary.get_or_insert(category);
        *all.entry(category).or_insert(0) += 1;
    }
    match primary {
        Some(primary) => FailureClassification { primary, all },
        None => {
            all.insert(ErrorCategory::Other, 1);
            FailureClassification {
                primary: ErrorCategory::Other,
                all,
            }
        }
    }
}
