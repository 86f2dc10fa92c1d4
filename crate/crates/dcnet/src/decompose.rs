//! Text decomposition: tokenize raw text and split it into a literal
//! channel (sentiment words) and an implied channel (everything else).
//!
//! Tokenization is deliberately simple and documented here so it can be
//! replaced wholesale: lowercase, split on whitespace, then peel leading
//! and trailing ASCII punctuation off each word into separate single-char
//! tokens. `#` and `@` are not peeled (hashtags and mentions stay intact),
//! and non-ASCII characters such as emoji pass through untouched.

use serde::{Deserialize, Serialize};

use crate::lexicon::SentimentLexicon;

/// Ordered sequence of lowercase tokens. Never contains empty strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Wrap pre-tokenized input. Empty tokens are discarded; everything
    /// else is lowercased to restore the type invariant.
    pub fn from_tokens<I, S>(tokens: I) -> TokenSequence
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenSequence(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self, sep: &str) -> String {
        self.0.join(sep)
    }
}

impl<'a> IntoIterator for &'a TokenSequence {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A text split into its literal and implied channel inputs.
///
/// When `fallback_used` is false, `w_l` and `w_d` partition `w_t`: every
/// `w_l` token is a sentiment word, no `w_d` token is, and both preserve
/// surface order. When no sentiment word matches, both channels receive
/// the full text and `fallback_used` is true.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecomposedExample {
    pub w_t: TokenSequence,
    pub w_l: TokenSequence,
    pub w_d: TokenSequence,
    pub fallback_used: bool,
}

fn is_peelable_punct(c: char) -> bool {
    c.is_ascii_punctuation() && c != '#' && c != '@'
}

/// Lowercase and split `text` into tokens.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut out = Vec::new();
    for word in text.to_lowercase().split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && is_peelable_punct(chars[start]) {
            start += 1;
        }
        while end > start && is_peelable_punct(chars[end - 1]) {
            end -= 1;
        }
        for &c in &chars[..start] {
            out.push(c.to_string());
        }
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            out.push(c.to_string());
        }
    }
    TokenSequence(out)
}

/// Split `tokens` into the literal channel (lexicon hits) and the implied
/// channel (the rest). If nothing matches, both channels fall back to the
/// full sequence.
pub fn decompose(tokens: &TokenSequence, lexicon: &SentimentLexicon) -> DecomposedExample {
    let mut literal = Vec::new();
    let mut implied = Vec::new();
    for token in tokens {
        if lexicon.polarity(token).is_some() {
            literal.push(token.clone());
        } else {
            implied.push(token.clone());
        }
    }

    if literal.is_empty() {
        DecomposedExample {
            w_t: tokens.clone(),
            w_l: tokens.clone(),
            w_d: tokens.clone(),
            fallback_used: true,
        }
    } else {
        DecomposedExample {
            w_t: tokens.clone(),
            w_l: TokenSequence(literal),
            w_d: TokenSequence(implied),
            fallback_used: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Polarity;
    use proptest::prelude::*;

    fn toks(seq: &TokenSequence) -> Vec<&str> {
        seq.iter().map(|s| s.as_str()).collect()
    }

    #[test]
    fn tokenize_strips_trailing_punctuation() {
        assert_eq!(toks(&tokenize("Final exam!")), ["final", "exam", "!"]);
    }

    #[test]
    fn tokenize_empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t\n").is_empty());
    }

    #[test]
    fn tokenize_lowercases() {
        assert_eq!(toks(&tokenize("Best GIFT")), ["best", "gift"]);
    }

    #[test]
    fn tokenize_keeps_hashtags_mentions_emoji() {
        assert_eq!(
            toks(&tokenize("#blessed @you 🙂 right...")),
            ["#blessed", "@you", "🙂", "right", ".", ".", "."]
        );
    }

    #[test]
    fn tokenize_peels_both_ends() {
        assert_eq!(toks(&tokenize("(hello!)")), ["(", "hello", "!", ")"]);
        assert_eq!(toks(&tokenize("don't")), ["don't"]);
        assert_eq!(toks(&tokenize("!!!")), ["!", "!", "!"]);
    }

    fn paper_lexicon() -> SentimentLexicon {
        SentimentLexicon::from_entries([("best", Polarity::Positive), ("gift", Polarity::Positive)])
    }

    #[test]
    fn decompose_splits_sentiment_words() {
        let tokens = tokenize("final exam is the best gift on my birthday");
        let ex = decompose(&tokens, &paper_lexicon());
        assert!(!ex.fallback_used);
        assert_eq!(toks(&ex.w_l), ["best", "gift"]);
        assert_eq!(
            toks(&ex.w_d),
            ["final", "exam", "is", "the", "on", "my", "birthday"]
        );
    }

    #[test]
    fn decompose_falls_back_without_matches() {
        let tokens = TokenSequence::from_tokens(["the", "exam", "happens"]);
        let ex = decompose(
            &tokens,
            &SentimentLexicon::from_entries::<[(&str, Polarity); 0], &str>([]),
        );
        assert!(ex.fallback_used);
        assert_eq!(ex.w_l, ex.w_t);
        assert_eq!(ex.w_d, ex.w_t);
    }

    #[test]
    fn decompose_empty_input_falls_back() {
        let ex = decompose(&tokenize(""), &paper_lexicon());
        assert!(ex.fallback_used);
        assert!(ex.w_l.is_empty() && ex.w_d.is_empty());
    }

    fn sorted_multiset(seq: &TokenSequence) -> Vec<&String> {
        let mut v: Vec<&String> = seq.iter().collect();
        v.sort();
        v
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn partition_property(
            words in proptest::collection::vec("[a-f]{1,3}", 0..20),
            lex_words in proptest::collection::vec("[a-f]{1,3}", 0..8),
        ) {
            let lexicon = SentimentLexicon::from_entries(
                lex_words.iter().map(|w| (w.as_str(), Polarity::Positive)),
            );
            let tokens = TokenSequence::from_tokens(words);
            let ex = decompose(&tokens, &lexicon);

            if ex.fallback_used {
                prop_assert_eq!(&ex.w_l, &ex.w_t);
                prop_assert_eq!(&ex.w_d, &ex.w_t);
            } else {
                // multiset(w_l) + multiset(w_d) == multiset(w_t)
                let mut merged: Vec<&String> = ex.w_l.iter().chain(ex.w_d.iter()).collect();
                merged.sort();
                prop_assert_eq!(merged, sorted_multiset(&ex.w_t));
                prop_assert!(!ex.w_l.is_empty());
                for t in &ex.w_l {
                    prop_assert!(lexicon.polarity(t).is_some());
                }
                for t in &ex.w_d {
                    prop_assert!(lexicon.polarity(t).is_none());
                }
            }
        }
    }

    #[test]
    fn relative_order_is_preserved() {
        let lexicon =
            SentimentLexicon::from_entries([("b", Polarity::Positive), ("d", Polarity::Negative)]);
        let tokens = TokenSequence::from_tokens(["a", "b", "c", "d", "e"]);
        let ex = decompose(&tokens, &lexicon);
        assert_eq!(toks(&ex.w_l), ["b", "d"]);
        assert_eq!(toks(&ex.w_d), ["a", "c", "e"]);
    }
}
