//! Word-level text matching shared by the judge, the cue detectors and the mock backend.
//!
//! Matching works on word tokens rather than raw substrings so that "no" never
//! matches inside "know", while every match still maps back to a byte range of
//! the original utterance (evidence spans are quoted verbatim).

use std::ops::Range;

/// One word of an utterance: lowercased alphanumerics with apostrophes dropped
/// ("Don't" becomes "dont"), plus the byte range it covers in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub norm: String,
    pub span: Range<usize>,
}

pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = None;
    let mut end = 0;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(idx);
            }
            current.extend(ch.to_lowercase());
            end = idx + ch.len_utf8();
        } else if (ch == '\'' || ch == '\u{2019}') && start.is_some() {
            // apostrophes inside a word are swallowed
            end = idx + ch.len_utf8();
        } else if let Some(s) = start.take() {
            tokens.push(Token {
                norm: std::mem::take(&mut current),
                span: s..trim_apostrophe(text, s, end),
            });
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            norm: current,
            span: s..trim_apostrophe(text, s, end),
        });
    }
    tokens
}

fn trim_apostrophe(text: &str, start: usize, mut end: usize) -> usize {
    while end > start {
        let tail = &text[start..end];
        match tail.chars().last() {
            Some('\'') | Some('\u{2019}') => end -= tail.chars().last().map_or(1, char::len_utf8),
            _ => break,
        }
    }
    end
}

/// Normalized token sequence for a phrase from a lexicon or table.
pub fn phrase_tokens(phrase: &str) -> Vec<String> {
    tokenize(phrase).into_iter().map(|t| t.norm).collect()
}

/// A phrase located in a token stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch {
    pub phrase: String,
    /// Token index range.
    pub tokens: Range<usize>,
    /// Byte range in the original text.
    pub span: Range<usize>,
}

/// Every occurrence of every phrase, in text order.
pub fn find_all<'a, I>(tokens: &[Token], phrases: I) -> Vec<PhraseMatch>
where
    I: IntoIterator<Item = &'a String>,
{
    let mut out = Vec::new();
    for phrase in phrases {
        let needle = phrase_tokens(phrase);
        if needle.is_empty() || needle.len() > tokens.len() {
            continue;
        }
        for start in 0..=tokens.len() - needle.len() {
            if tokens[start..start + needle.len()]
                .iter()
                .zip(&needle)
                .all(|(t, n)| &t.norm == n)
            {
                let last = &tokens[start + needle.len() - 1];
                out.push(PhraseMatch {
                    phrase: phrase.clone(),
                    tokens: start..start + needle.len(),
                    span: tokens[start].span.start..last.span.end,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        a.tokens
            .start
            .cmp(&b.tokens.start)
            .then(b.tokens.len().cmp(&a.tokens.len()))
    });
    out
}

/// Like [`find_all`] but drops matches contained in a longer one
/// ("every day" inside "nearly every day").
pub fn find_longest<'a, I>(tokens: &[Token], phrases: I) -> Vec<PhraseMatch>
where
    I: IntoIterator<Item = &'a String>,
{
    let all = find_all(tokens, phrases);
    all.iter()
        .filter(|m| {
            !all.iter().any(|o| {
                o.tokens.len() > m.tokens.len()
                    && o.tokens.start <= m.tokens.start
                    && o.tokens.end >= m.tokens.end
            })
        })
        .cloned()
        .collect()
}

/// Negation cue tokens that are not part of any of the `covered` matches.
pub fn free_negations<'t>(
    tokens: &'t [Token],
    negations: &[String],
    covered: &[PhraseMatch],
) -> Vec<&'t Token> {
    tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| {
            negations.iter().any(|n| n == &t.norm)
                && !covered.iter().any(|m| m.tokens.contains(i))
        })
        .map(|(_, t)| t)
        .collect()
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
    "been", "before", "being", "but", "by", "can", "could", "did", "do", "does", "during", "each",
    "even", "ever", "for", "from", "had", "has", "have", "having", "how", "i", "if", "in", "into",
    "is", "it", "its", "just", "like", "me", "more", "most", "much", "my", "of", "on", "or",
    "other", "our", "out", "over", "so", "some", "such", "than", "that", "the", "their", "them",
    "then", "there", "these", "they", "things", "this", "those", "to", "too", "up", "very", "was",
    "we", "were", "what", "when", "where", "which", "while", "who", "why", "will", "with",
    "would", "you", "your", "yes", "yeah", "really", "well",
];

/// Content words after stop-word removal, lightly stemmed so "worrying" and
/// "worries" meet "worry".
pub fn content_words(text: &str) -> std::collections::BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !STOP_WORDS.contains(&t.norm.as_str()))
        .map(|t| stem(&t.norm))
        .collect()
}

fn stem(word: &str) -> String {
    for suffix in ["ing", "ies", "ied", "ed", "es", "s", "y"] {
        if word.len() > suffix.len() + 3 && word.ends_with(suffix) {
            return word[..word.len() - suffix.len()].to_string();
        }
    }
    word.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apostrophes_fold_into_words() {
        let toks = tokenize("I don't know, it's fine");
        let norms: Vec<_> = toks.iter().map(|t| t.norm.as_str()).collect();
        assert_eq!(norms, ["i", "dont", "know", "its", "fine"]);
        assert_eq!(&"I don't know, it's fine"[toks[1].span.clone()], "don't");
    }

    #[test]
    fn no_does_not_match_inside_know() {
        let toks = tokenize("I know");
        let hits = free_negations(&toks, &["no".to_string()], &[]);
        assert!(hits.is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let text = "It happens nearly every day";
        let toks = tokenize(text);
        let phrases = vec!["every day".to_string(), "nearly every day".to_string()];
        let hits = find_longest(&toks, &phrases);
        assert_eq!(hits.len(), 1);
        assert_eq!(&text[hits[0].span.clone()], "nearly every day");
    }

    #[test]
    fn negation_inside_phrase_is_not_free() {
        let text = "life is not worth living";
        let toks = tokenize(text);
        let phrases = vec!["not worth living".to_string()];
        let hits = find_all(&toks, &phrases);
        assert!(free_negations(&toks, &["not".to_string()], &hits).is_empty());
    }

    #[test]
    fn content_words_drop_stop_words() {
        let words = content_words("Do you feel anxious about several things?");
        assert!(words.contains("anxiou") || words.contains("anxious"));
        assert!(!words.contains("you"));
    }

    #[test]
    fn spans_cover_unicode_text() {
        let text = "Ça va, I’m overwhelmed";
        let toks = tokenize(text);
        assert_eq!(&text[toks[2].span.clone()], "I’m");
        assert_eq!(toks[2].norm, "im");
    }
}
