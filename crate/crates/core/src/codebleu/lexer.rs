//! Tokenizer feeding the n-gram and syntax components. Comments are
//! dropped, string contents are opaque, and keywords come from per-language
//! data files.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::lang::Lang;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    StringLit,
    Operator,
    Punct,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeToken {
    pub text: String,
    pub kind: TokenKind,
    pub position: usize,
}

#[derive(Debug, Clone)]
pub struct LexResult {
    pub tokens: Vec<CodeToken>,
    /// Set when an unterminated string or comment forced recovery.
    pub diagnostic: Option<String>,
}

const CPP_KEYWORDS: &str = include_str!("../../data/cpp_keywords.txt");
const FORTRAN_KEYWORDS: &str = include_str!("../../data/fortran_keywords.txt");

fn keyword_set(lang: Lang) -> &'static HashSet<String> {
    static CPP: OnceLock<HashSet<String>> = OnceLock::new();
    static FORTRAN: OnceLock<HashSet<String>> = OnceLock::new();
    let (cell, data) = match lang {
        Lang::Cpp | Lang::C => (&CPP, CPP_KEYWORDS),
        Lang::Fortran => (&FORTRAN, FORTRAN_KEYWORDS),
    };
    cell.get_or_init(|| {
        data.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    })
}

/// Parse a keyword list file: one keyword per line, UTF-8. `#`-prefixed
/// entries are preprocessor directives, not comments.
pub fn parse_keyword_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

// Multi-character operators, longest first for maximal munch.
const OPERATORS: &[&str] = &[
    "<<=", ">>=", "<=>", "->*", "...", "::", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "=>", "**", "//", "+", "-", "*",
    "/", "%", "=", "<", ">", "!", "&", "|", "^", "~", "?", ".", ":",
];

const PUNCT: &[char] = &[';', ',', '(', ')', '{', '}', '[', ']'];

pub fn lex(source: &str, lang: Lang) -> LexResult {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut diagnostic = None;
    let keywords = keyword_set(lang);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        // Comments.
        if lang == Lang::Fortran && c == '!' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if (lang == Lang::Cpp || lang == Lang::C) && c == '/' && i + 1 < chars.len() {
            if chars[i + 1] == '/' {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            if chars[i + 1] == '*' {
                let mut j = i + 2;
                let mut closed = false;
                while j + 1 < chars.len() {
                    if chars[j] == '*' && chars[j + 1] == '/' {
                        closed = true;
                        j += 2;
                        break;
                    }
                    j += 1;
                }
                if !closed {
                    diagnostic = Some("unterminated block comment".to_string());
                    j = chars.len();
                }
                i = j;
                continue;
            }
        }
        // String and character literals: one opaque token each.
        if c == '"' || c == '\'' {
            let quote = c;
            let start = i;
            let mut j = i + 1;
            let mut closed = false;
            while j < chars.len() {
                if chars[j] == '\\' && lang != Lang::Fortran {
                    j += 2;
                    continue;
                }
                if chars[j] == quote {
                    closed = true;
                    j += 1;
                    break;
                }
                if chars[j] == '\n' {
                    break;
                }
                j += 1;
            }
            if !closed {
                diagnostic = Some("unterminated string literal".to_string());
            }
            let j = j.min(chars.len());
            tokens.push(CodeToken {
                text: chars[start..j].iter().collect(),
                kind: TokenKind::StringLit,
                position: start,
            });
            i = j;
            continue;
        }
        // Preprocessor directives lex as one word ("#include", ...).
        if c == '#' && i + 1 < chars.len() && chars[i + 1].is_ascii_alphabetic() {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_alphanumeric() {
                j += 1;
            }
            let text: String = chars[start..j].iter().collect();
            let kind = if keywords.contains(&text) {
                TokenKind::Keyword
            } else {
                TokenKind::Other
            };
            tokens.push(CodeToken {
                text,
                kind,
                position: start,
            });
            i = j;
            continue;
        }
        // Identifiers and keywords.
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let text: String = chars[start..j].iter().collect();
            let matches_keyword = match lang {
                Lang::Fortran => keywords.contains(&text.to_ascii_lowercase()),
                _ => keywords.contains(&text),
            };
            tokens.push(CodeToken {
                kind: if matches_keyword {
                    TokenKind::Keyword
                } else {
                    TokenKind::Identifier
                },
                text,
                position: start,
            });
            i = j;
            continue;
        }
        // Numeric literals, including hex, floats, exponents, and suffixes.
        if c.is_ascii_digit() || (c == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit())
        {
            let start = i;
            let mut j = i;
            if c == '0' && i + 1 < chars.len() && (chars[i + 1] == 'x' || chars[i + 1] == 'X') {
                j += 2;
                while j < chars.len() && chars[j].is_ascii_hexdigit() {
                    j += 1;
                }
            } else {
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '.' {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    let digits = k;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    if k > digits {
                        j = k;
                    }
                }
            }
            while j < chars.len() && matches!(chars[j], 'u' | 'U' | 'l' | 'L' | 'f' | 'F') {
                j += 1;
            }
            tokens.push(CodeToken {
                text: chars[start..j].iter().collect(),
                kind: TokenKind::Number,
                position: start,
            });
            i = j;
            continue;
        }
        // Punctuation.
        if PUNCT.contains(&c) {
            tokens.push(CodeToken {
                text: c.to_string(),
                kind: TokenKind::Punct,
                position: i,
            });
            i += 1;
            continue;
        }
        // Operators, maximal munch.
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            tokens.push(CodeToken {
                text: op.to_string(),
                kind: TokenKind::Operator,
                position: i,
            });
            i += op.chars().count();
            continue;
        }
        tokens.push(CodeToken {
            text: c.to_string(),
            kind: TokenKind::Other,
            position: i,
        });
        i += 1;
    }
    LexResult { tokens, diagnostic }
}

#[cfg(test)]
pub(crate) fn tokens_from(words: &[&str]) -> Vec<CodeToken> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| CodeToken {
            text: w.to_string(),
            kind: TokenKind::Identifier,
            position: i,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_declaration_lexes_to_expected_kinds() {
        let result = lex("int a = 1; // x", Lang::Cpp);
        assert!(result.diagnostic.is_none());
        let kinds: Vec<(&str, TokenKind)> = result
            .tokens
            .iter()
            .map(|t| (t.text.as_str(), t.kind))
            .collect();
        assert_eq!(
            kinds,
            vec![
                ("int", TokenKind::Keyword),
                ("a", TokenKind::Identifier),
                ("=", TokenKind::Operator),
                ("1", TokenKind::Number),
                (";", TokenKind::Punct),
            ]
        );
    }

    #[test]
    fn empty_source_lexes_to_nothing() {
        assert!(lex("", Lang::Cpp).tokens.is_empty());
    }

    #[test]
    fn string_contents_are_opaque() {
        let result = lex(r#"printf("a;b");"#, Lang::Cpp);
        let texts: Vec<&str> = result.tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["printf", "(", "\"a;b\"", ")", ";"]);
        assert_eq!(result.tokens[2].kind, TokenKind::StringLit);
    }

    #[test]
    fn unterminated_string_sets_diagnostic() {
        let result = lex(r#"x = "oops"#, Lang::Cpp);
        assert!(result.diagnostic.is_some());
        assert_eq!(result.tokens.last().unwrap().kind, TokenKind::StringLit);
    }

    #[test]
    fn include_directive_is_one_keyword_token() {
        let result = lex("#include <iostream>", Lang::Cpp);
        assert_eq!(result.tokens[0].text, "#include");
        assert_eq!(result.tokens[0].kind, TokenKind::Keyword);
    }

    #[test]
    fn multichar_operators_use_maximal_munch() {
        let result = lex("a <<= b >> c == d", Lang::Cpp);
        let ops: Vec<&str> = result
            .tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Operator)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(ops, vec!["<<=", ">>", "=="]);
    }

    #[test]
    fn fortran_comments_and_keywords() {
        let result = lex("program main ! comment\nend program", Lang::Fortran);
        let texts: Vec<&str> = result.tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["program", "main", "end", "program"]);
        assert_eq!(result.tokens[0].kind, TokenKind::Keyword);
        assert_eq!(result.tokens[1].kind, TokenKind::Identifier);
    }

    #[test]
    fn lexing_is_deterministic() {
        let src = "int main() { return 1.5e3; }";
        assert_eq!(lex(src, Lang::Cpp).tokens, lex(src, Lang::Cpp).tokens);
    }
}
