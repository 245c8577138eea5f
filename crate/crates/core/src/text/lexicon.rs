use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const STOP_WORDS: &str = include_str!("../../lexicons/stop_words.txt");
const PYTHON_KEYWORDS: &str = include_str!("../../lexicons/python_keywords.txt");
const POSITIVE: &str = include_str!("../../lexicons/sentiment_positive.txt");
const NEGATIVE: &str = include_str!("../../lexicons/sentiment_negative.txt");
const BASELINE_KEYWORDS: &str = include_str!("../../lexicons/baseline_keywords.txt");

/// Word lists consulted by the textual features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    pub stop_words: HashSet<String>,
    pub prog_keywords: HashSet<String>,
    pub sentiment_positive: HashSet<String>,
    pub sentiment_negative: HashSet<String>,
    pub baseline_keywords: HashSet<String>,
}

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons {
            stop_words: parse_lexicon(STOP_WORDS),
            prog_keywords: parse_lexicon(PYTHON_KEYWORDS),
            sentiment_positive: parse_lexicon(POSITIVE),
            sentiment_negative: parse_lexicon(NEGATIVE),
            baseline_keywords: parse_lexicon(BASELINE_KEYWORDS),
        }
    }
}

/// Which list an override file replaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconKind {
    StopWords,
    ProgKeywords,
    SentimentPositive,
    SentimentNegative,
    BaselineKeywords,
}

impl Lexicons {
    pub fn replace_from_file(&mut self, kind: LexiconKind, path: impl AsRef<Path>) -> Result<()> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let words = parse_lexicon(&text);
        if words.is_empty() && matches!(kind, LexiconKind::StopWords | LexiconKind::ProgKeywords) {
            return Err(Error::contract(format!(
                "lexicon {} must not be empty",
                path.as_ref().display()
            )));
        }
        let slot = match kind {
            LexiconKind::StopWords => &mut self.stop_words,
            LexiconKind::ProgKeywords => &mut self.prog_keywords,
            LexiconKind::SentimentPositive => &mut self.sentiment_positive,
            LexiconKind::SentimentNegative => &mut self.sentiment_negative,
            LexiconKind::BaselineKeywords => &mut self.baseline_keywords,
        };
        *slot = words;
        Ok(())
    }
}

/// One lowercase token per line; `#` starts a comment.
pub fn parse_lexicon(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sizes() {
        let lex = Lexicons::default();
        assert_eq!(lex.stop_words.len(), 179);
        assert_eq!(lex.prog_keywords.len(), 35);
        assert!(lex.stop_words.contains("only"));
        assert!(!lex.stop_words.contains("lambda"));
        assert!(lex.prog_keywords.contains("lambda"));
    }

    #[test]
    fn comments_and_case() {
        let set = parse_lexicon("# header\nFoo\n bar # trailing\n\n");
        assert_eq!(set, ["foo".to_string(), "bar".to_string()].into());
    }
}
