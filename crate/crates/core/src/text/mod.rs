//! Textual features of review comments.
//!
//! Tokenization rules (shared by every feature here):
//!
//! * word tokens: maximal runs of letters, digits and `_`, optionally
//!   followed by apostrophe suffixes (`don't`), lowercased;
//! * sentences: text split after runs of `.`, `!` or `?` that are followed by
//!   whitespace or the end of input; a trailing fragment is a sentence;
//! * code elements: matches of the fixed pattern set in [`extract_code_elements`];
//! * prose text: the body with every code-element span blanked out.

mod lexicon;

use std::collections::HashMap;
use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::{InlineComment, PullRequest};

pub use lexicon::{parse_lexicon, LexiconKind, Lexicons};

static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\p{L}\p{N}_]+(?:['’]\p{L}+)*").unwrap());

static SENTENCE_END: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[.!?]+(?:\s+|$)").unwrap());

/// Code-element patterns, tried in this order at each position.
static CODE_ELEMENT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        // 1: backtick span, element is the inner text
        r"`([^`\n]+)`",
        // 2: call expression, optionally dotted
        r"|\b[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*\([^()\n]*\)",
        // 3: dotted path
        r"|\b[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)+\b",
        // 4: snake_case (at least one underscore)
        r"|\b[A-Za-z0-9_]*_[A-Za-z0-9_]*\b",
        // 5: camelCase
        r"|\b[a-z][a-z0-9]*(?:[A-Z][a-z0-9]*)+\b",
        // 6: multi-hump PascalCase
        r"|\b[A-Z][a-z0-9]+(?:[A-Z][a-z0-9]*)+\b",
        // 7: language literals
        r"|\b(?:None|True|False)\b",
    ))
    .unwrap()
});

/// A comment body broken into the units the features count.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedComment {
    pub sentences: Vec<String>,
    pub word_tokens: Vec<String>,
    pub code_elements: Vec<String>,
    pub prose_text: String,
}

impl TokenizedComment {
    pub fn new(body: &str) -> Self {
        let spans = code_element_spans(body);
        let mut prose = String::with_capacity(body.len());
        let mut cursor = 0;
        for (range, _) in &spans {
            prose.push_str(&body[cursor..range.start]);
            prose.push(' ');
            cursor = range.end;
        }
        prose.push_str(&body[cursor..]);
        TokenizedComment {
            sentences: split_sentences(body),
            word_tokens: word_tokens(body),
            code_elements: spans.into_iter().map(|(_, e)| e).collect(),
            prose_text: prose,
        }
    }

    pub fn prose_tokens(&self) -> Vec<String> {
        word_tokens(&self.prose_text)
    }
}

pub fn word_tokens(text: &str) -> Vec<String> {
    WORD.find_iter(text)
        .map(|m| m.as_str().replace('’', "'").to_lowercase())
        .collect()
}

pub fn split_sentences(body: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    for m in SENTENCE_END.find_iter(body) {
        push_sentence(&mut out, &body[start..m.end()]);
        start = m.end();
    }
    push_sentence(&mut out, &body[start..]);
    out
}

fn push_sentence(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Syllables by vowel groups: count maximal `[aeiouy]+` runs, drop a final
/// silent `e` unless the word ends in `le`, never below one.
pub fn count_syllables(word: &str) -> usize {
    let w = word.to_lowercase();
    let mut groups = 0;
    let mut in_group = false;
    for c in w.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            groups += 1;
        }
        in_group = vowel;
    }
    if w.ends_with('e') && !w.ends_with("le") && groups > 0 {
        groups -= 1;
    }
    groups.max(1)
}

/// Flesch reading ease of a text, `None` when it has no words.
pub fn flesch_reading_ease(text: &str) -> Option<f64> {
    let words = word_tokens(text);
    if words.is_empty() {
        return None;
    }
    let sentences = split_sentences(text).len().max(1) as f64;
    let syllables: usize = words.iter().map(|w| count_syllables(w)).sum();
    let n = words.len() as f64;
    Some(206.835 - 1.015 * (n / sentences) - 84.6 * (syllables as f64 / n))
}

pub fn reading_ease(tok: &TokenizedComment, prose_only: bool) -> Option<f64> {
    if prose_only {
        flesch_reading_ease(&tok.prose_text)
    } else {
        let text = tok.sentences.join(" ");
        flesch_reading_ease(&text)
    }
}

pub fn stop_word_ratio(tok: &TokenizedComment, include_keywords: bool, lex: &Lexicons) -> f64 {
    if tok.word_tokens.is_empty() {
        return 0.0;
    }
    let hits = tok
        .word_tokens
        .iter()
        .filter(|w| lex.stop_words.contains(*w) || (include_keywords && lex.prog_keywords.contains(*w)))
        .count();
    hits as f64 / tok.word_tokens.len() as f64
}

pub fn question_ratio(tok: &TokenizedComment) -> f64 {
    if tok.sentences.is_empty() {
        return 0.0;
    }
    let questions = tok.sentences.iter().filter(|s| s.ends_with('?')).count();
    questions as f64 / tok.sentences.len() as f64
}

fn code_element_spans(body: &str) -> Vec<(Range<usize>, String)> {
    let mut out = Vec::new();
    for caps in CODE_ELEMENT.captures_iter(body) {
        let whole = caps.get(0).unwrap();
        let element = match caps.get(1) {
            Some(inner) => inner.as_str(),
            None => whole.as_str(),
        };
        if caps.get(1).is_none() && !plausible_code(element) {
            continue;
        }
        out.push((whole.range(), element.to_string()));
    }
    out
}

fn plausible_code(s: &str) -> bool {
    if !s.chars().any(|c| c.is_ascii_alphabetic()) {
        return false;
    }
    // Abbreviations such as "e.g" are dotted but not code.
    if s.contains('.') && !s.contains('(') {
        return s.split('.').any(|seg| seg.len() > 1);
    }
    true
}

/// Code-like fragments embedded in a comment, in order of appearance.
///
/// Patterns: backtick spans (inner text), call expressions `name(...)`,
/// dotted paths `a.b`, snake_case identifiers, camelCase and multi-hump
/// PascalCase identifiers, and the literals `None`, `True`, `False`.
pub fn extract_code_elements(body: &str) -> Vec<String> {
    code_element_spans(body).into_iter().map(|(_, e)| e).collect()
}

/// Splits an identifier-ish string into lowercase sub-tokens on
/// non-alphanumeric characters, camel humps and letter/digit boundaries.
pub fn split_identifier(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in s.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_alphabetic() && cur.is_numeric())
                || (prev.is_numeric() && cur.is_alphabetic());
            if boundary {
                out.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    out
}

/// Source sub-tokens over all tokens (prose words plus source sub-tokens).
pub fn source_token_ratio(tok: &TokenizedComment) -> f64 {
    let source: usize = tok.code_elements.iter().map(|e| split_identifier(e).len()).sum();
    let total = source + tok.prose_tokens().len();
    if total == 0 {
        0.0
    } else {
        source as f64 / total as f64
    }
}

/// Preprocessing for lexical similarity: identifier splitting, lowercasing,
/// stop-word and pure-number removal.
pub fn concept_terms(text: &str, lex: &Lexicons) -> Vec<String> {
    split_identifier(text)
        .into_iter()
        .filter(|t| !t.is_empty() && !t.chars().all(|c| c.is_numeric()) && !lex.stop_words.contains(t))
        .collect()
}

pub fn term_frequencies<S: AsRef<str>>(terms: &[S]) -> HashMap<&str, f64> {
    let mut tf = HashMap::new();
    for t in terms {
        *tf.entry(t.as_ref()).or_insert(0.0) += 1.0;
    }
    tf
}

/// Cosine of two raw term-frequency vectors; 0 when either is empty.
pub fn cosine(a: &HashMap<&str, f64>, b: &HashMap<&str, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().map(|(k, v)| v * large.get(k).copied().unwrap_or(0.0)).sum();
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Maximum cosine between a comment and any candidate source line.
pub fn max_line_similarity<'a>(body: &str, lines: impl IntoIterator<Item = &'a str>, lex: &Lexicons) -> f64 {
    let comment_terms = concept_terms(body, lex);
    let comment_tf = term_frequencies(&comment_terms);
    if comment_tf.is_empty() {
        return 0.0;
    }
    lines
        .into_iter()
        .map(|line| {
            let terms = concept_terms(line, lex);
            cosine(&comment_tf, &term_frequencies(&terms))
        })
        .fold(0.0, f64::max)
}

/// Changed lines of the comment's file in commits of the same pull request
/// made at or before the comment.
pub fn candidate_lines<'a>(comment: &InlineComment, pr: &'a PullRequest) -> Vec<&'a str> {
    pr.commits
        .iter()
        .filter(|c| c.timestamp <= comment.timestamp)
        .flat_map(|c| c.file_diffs.iter())
        .filter(|d| d.path == comment.anchor_path || d.old_path.as_deref() == Some(comment.anchor_path.as_str()))
        .flat_map(|d| d.hunks.iter())
        .flat_map(|h| h.texts())
        .collect()
}

pub fn conceptual_similarity(comment: &InlineComment, pr: &PullRequest, lex: &Lexicons) -> f64 {
    max_line_similarity(&comment.body, candidate_lines(comment, pr), lex)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentGroup {
    Negative,
    Neutral,
    Positive,
}

impl SentimentGroup {
    pub fn as_f64(self) -> f64 {
        match self {
            SentimentGroup::Negative => -1.0,
            SentimentGroup::Neutral => 0.0,
            SentimentGroup::Positive => 1.0,
        }
    }
}

/// Width of the neutral band around zero.
pub const NEUTRAL_BAND: f64 = 0.05;

pub fn sentiment_score(body: &str, lex: &Lexicons) -> (f64, SentimentGroup) {
    let words = word_tokens(body);
    if words.is_empty() {
        return (0.0, SentimentGroup::Neutral);
    }
    let pos = words.iter().filter(|w| lex.sentiment_positive.contains(*w)).count() as f64;
    let neg = words.iter().filter(|w| lex.sentiment_negative.contains(*w)).count() as f64;
    let score = (pos - neg) / words.len() as f64;
    let group = if score.abs() < NEUTRAL_BAND {
        SentimentGroup::Neutral
    } else if score > 0.0 {
        SentimentGroup::Positive
    } else {
        SentimentGroup::Negative
    };
    (score, group)
}

/// Occurrences of baseline review keywords in the comment.
pub fn keyword_count(body: &str, lex: &Lexicons) -> usize {
    word_tokens(body)
        .iter()
        .filter(|w| lex.baseline_keywords.contains(*w))
        .count()
}
