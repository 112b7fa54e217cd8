//! Tokenization shared by chunking, the offline embedder, entity matching and
//! the offline summarizer.

use alloc::string::String;
use alloc::vec::Vec;

/// Whitespace token count, the unit for chunk budgets and context budgets.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased maximal runs of alphanumeric characters.
///
/// `"HLA-B*57:01"` yields `["hla", "b", "57", "01"]`.
pub fn alnum_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "before", "being", "both", "but", "by", "can", "could", "did", "do", "does", "for", "from",
    "had", "has", "have", "how", "i", "if", "in", "into", "is", "it", "its", "may", "me", "my",
    "no", "not", "of", "on", "or", "our", "should", "so", "such", "than", "that", "the", "their",
    "them", "then", "there", "these", "they", "this", "those", "to", "was", "we", "were", "what",
    "when", "which", "while", "who", "why", "will", "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased alphanumeric tokens with stopwords removed.
pub fn content_words(text: &str) -> Vec<String> {
    alnum_tokens(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect()
}

/// Splits prose into sentences at `.`, `!` or `?` followed by whitespace or the
/// end of input. Line breaks inside a sentence are folded into single spaces.
pub fn sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            push_sentence(&mut out, &current);
            current.clear();
        }
    }
    push_sentence(&mut out, &current);
    out
}

fn push_sentence(out: &mut Vec<String>, raw: &str) {
    let folded: Vec<&str> = raw.split_whitespace().collect();
    if !folded.is_empty() {
        out.push(folded.join(" "));
    }
}
