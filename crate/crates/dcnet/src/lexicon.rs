//! Sentiment lexicon: word -> prior polarity, loaded from MPQA-style clue
//! files or a plain `word<TAB>polarity` fallback format.
//!
//! Only positive and negative single-word clues are kept; neutral/both
//! entries and multi-word clues are dropped at load time. Lookup is
//! case-insensitive.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prior polarity of a sentiment word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// Class index used by the sentiment heads: negative = 0, positive = 1.
    pub fn class_index(self) -> usize {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Positive => write!(f, "positive"),
            Polarity::Negative => write!(f, "negative"),
        }
    }
}

/// Counters describing what a loader kept and what it dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub total_lines: usize,
    pub entries: usize,
    pub skipped_neutral: usize,
    pub skipped_multiword: usize,
    pub malformed: usize,
    pub conflicts: usize,
    /// Human-readable warnings (line numbers included), capped at
    /// [`LoadStats::MAX_WARNINGS`] to keep pathological files cheap.
    pub warnings: Vec<String>,
}

impl LoadStats {
    pub const MAX_WARNINGS: usize = 20;

    fn warn(&mut self, msg: String) {
        if self.warnings.len() < Self::MAX_WARNINGS {
            self.warnings.push(msg);
        }
    }
}

/// Word -> prior polarity map.
///
/// Immutable after load; safe to share across threads.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    entries: HashMap<String, Polarity>,
    source_path: String,
    stats: LoadStats,
}

impl SentimentLexicon {
    /// Build a lexicon from in-memory entries. Words are lowercased;
    /// conflicting duplicates keep the first occurrence.
    pub fn from_entries<I, S>(entries: I) -> SentimentLexicon
    where
        I: IntoIterator<Item = (S, Polarity)>,
        S: AsRef<str>,
    {
        let mut lex = SentimentLexicon {
            entries: HashMap::new(),
            source_path: "<memory>".to_string(),
            stats: LoadStats::default(),
        };
        for (word, polarity) in entries {
            lex.insert(word.as_ref(), polarity, 0);
        }
        lex.stats.entries = lex.entries.len();
        lex
    }

    /// Load an MPQA subjectivity-clues file: one clue per line of
    /// space-separated `key=value` pairs, e.g.
    ///
    /// ```text
    /// type=weaksubj len=1 word1=abandoned pos1=adj stemmed1=n priorpolarity=negative
    /// ```
    ///
    /// Clues with `priorpolarity` other than positive/negative and clues
    /// with `len` > 1 are skipped; malformed lines are skipped and counted.
    pub fn load_mpqa(path: impl AsRef<Path>) -> Result<SentimentLexicon> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

        let mut lex = SentimentLexicon {
            entries: HashMap::new(),
            source_path: path.display().to_string(),
            stats: LoadStats::default(),
        };

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            lex.stats.total_lines += 1;

            let mut word = None;
            let mut polarity = None;
            let mut len = None;
            for field in line.split_whitespace() {
                match field.split_once('=') {
                    Some(("word1", v)) => word = Some(v),
                    Some(("priorpolarity", v)) => polarity = Some(v),
                    Some(("len", v)) => len = Some(v),
                    _ => {}
                }
            }

            let (word, polarity) = match (word, polarity) {
                (Some(w), Some(p)) if !w.is_empty() => (w, p),
                _ => {
                    lex.stats.malformed += 1;
                    lex.stats
                        .warn(format!("line {lineno}: missing word1/priorpolarity"));
                    continue;
                }
            };

            if let Some(len) = len {
                if len != "1" {
                    lex.stats.skipped_multiword += 1;
                    continue;
                }
            }

            match polarity {
                "positive" => lex.insert(word, Polarity::Positive, lineno),
                "negative" => lex.insert(word, Polarity::Negative, lineno),
                "neutral" | "both" => lex.stats.skipped_neutral += 1,
                other => {
                    lex.stats.malformed += 1;
                    lex.stats
                        .warn(format!("line {lineno}: unknown priorpolarity `{other}`"));
                }
            }
        }

        lex.stats.entries = lex.entries.len();
        Ok(lex)
    }

    /// Load the fallback TSV format: `word<TAB>positive|negative`, one per line.
    pub fn load_tsv(path: impl AsRef<Path>) -> Result<SentimentLexicon> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

        let mut lex = SentimentLexicon {
            entries: HashMap::new(),
            source_path: path.display().to_string(),
            stats: LoadStats::default(),
        };

        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            lex.stats.total_lines += 1;

            let Some((word, polarity)) = line.split_once('\t') else {
                lex.stats.malformed += 1;
                lex.stats
                    .warn(format!("line {lineno}: expected word<TAB>polarity"));
                continue;
            };
            let word = word.trim();
            if word.is_empty() {
                lex.stats.malformed += 1;
                lex.stats.warn(format!("line {lineno}: empty word"));
                continue;
            }
            match polarity.trim() {
                "positive" => lex.insert(word, Polarity::Positive, lineno),
                "negative" => lex.insert(word, Polarity::Negative, lineno),
                other => {
                    lex.stats.malformed += 1;
                    lex.stats
                        .warn(format!("line {lineno}: unsupported polarity `{other}`"));
                }
            }
        }

        lex.stats.entries = lex.entries.len();
        Ok(lex)
    }

    fn insert(&mut self, word: &str, polarity: Polarity, lineno: usize) {
        let key = word.to_lowercase();
        match self.entries.get(&key) {
            None => {
                self.entries.insert(key, polarity);
            }
            Some(&existing) if existing != polarity => {
                // First occurrence wins on conflict.
                self.stats.conflicts += 1;
                self.stats.warn(format!(
                    "line {lineno}: `{key}` already {existing}, ignoring {polarity}"
                ));
            }
            Some(_) => {}
        }
    }

    /// Prior polarity of `word`, if it is a sentiment word. Case-insensitive.
    pub fn polarity(&self, word: &str) -> Option<Polarity> {
        let lower = word.to_lowercase();
        self.entries.get(&lower).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub fn stats(&self) -> &LoadStats {
        &self.stats
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Polarity)> {
        self.entries.iter().map(|(w, &p)| (w.as_str(), p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
        let path =
            std::env::temp_dir().join(format!("dcnet-lexicon-{}-{}", std::process::id(), name));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn mpqa_keeps_positive_and_negative() {
        let path = temp_file(
            "basic.tff",
            "type=weaksubj len=1 word1=abandoned pos1=adj stemmed1=n priorpolarity=negative\n\
             type=strongsubj len=1 word1=Best pos1=adj stemmed1=n priorpolarity=positive\n",
        );
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        assert_eq!(lex.polarity("abandoned"), Some(Polarity::Negative));
        assert_eq!(lex.polarity("best"), Some(Polarity::Positive));
        assert_eq!(lex.len(), 2);
        fs::remove_file(path).ok();
    }

    #[test]
    fn mpqa_drops_neutral() {
        let path = temp_file(
            "neutral.tff",
            "type=weaksubj len=1 word1=absolute pos1=adj stemmed1=n priorpolarity=neutral\n",
        );
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        assert!(lex.is_empty());
        assert_eq!(lex.stats().skipped_neutral, 1);
        fs::remove_file(path).ok();
    }

    #[test]
    fn mpqa_empty_file_is_empty_lexicon() {
        let path = temp_file("empty.tff", "");
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        assert!(lex.is_empty());
        assert_eq!(lex.stats().total_lines, 0);
        fs::remove_file(path).ok();
    }

    #[test]
    fn mpqa_counts_malformed_and_multiword() {
        let path = temp_file(
            "mixed.tff",
            "this line has no fields\n\
             type=weaksubj len=2 word1=sort pos1=adj priorpolarity=negative\n\
             type=weaksubj len=1 word1=good pos1=adj priorpolarity=positive\n\
             type=weaksubj len=1 word1=odd pos1=adj priorpolarity=mystery\n",
        );
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.stats().malformed, 2);
        assert_eq!(lex.stats().skipped_multiword, 1);
        assert!(!lex.stats().warnings.is_empty());
        fs::remove_file(path).ok();
    }

    #[test]
    fn conflicting_duplicate_keeps_first() {
        let path = temp_file(
            "dup.tff",
            "type=weaksubj len=1 word1=mixed priorpolarity=positive\n\
             type=weaksubj len=1 word1=mixed priorpolarity=negative\n",
        );
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        assert_eq!(lex.polarity("mixed"), Some(Polarity::Positive));
        assert_eq!(lex.stats().conflicts, 1);
        fs::remove_file(path).ok();
    }

    #[test]
    fn tsv_roundtrip_and_neutral_skip() {
        let path = temp_file(
            "fallback.tsv",
            "best\tpositive\nawful\tnegative\nword\tneutral\n",
        );
        let lex = SentimentLexicon::load_tsv(&path).unwrap();
        assert_eq!(lex.polarity("best"), Some(Polarity::Positive));
        assert_eq!(lex.polarity("awful"), Some(Polarity::Negative));
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.stats().malformed, 1);
        fs::remove_file(path).ok();
    }

    #[test]
    fn lookup_is_case_insensitive() {
        let lex = SentimentLexicon::from_entries([("best", Polarity::Positive)]);
        assert_eq!(lex.polarity("BEST"), Some(Polarity::Positive));
        assert_eq!(lex.polarity("Best"), Some(Polarity::Positive));
        assert_eq!(lex.polarity("exam"), None);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = SentimentLexicon::load_mpqa("/nonexistent/clues.tff").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn loader_entries_roundtrip_through_polarity() {
        let path = temp_file(
            "roundtrip.tff",
            "type=weaksubj len=1 word1=happy priorpolarity=positive\n\
             type=weaksubj len=1 word1=Grim priorpolarity=negative\n",
        );
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        for (word, polarity) in lex.iter().collect::<Vec<_>>() {
            assert_eq!(lex.polarity(word), Some(polarity));
        }
        // entry count never exceeds well-formed line count
        assert!(lex.len() <= lex.stats().total_lines);
        fs::remove_file(path).ok();
    }

    #[test]
    fn polarity_agrees_with_linear_file_scan() {
        use rand::{Rng, SeedableRng};

        let words: Vec<String> = (0..60).map(|i| format!("word{i}")).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let mut body = String::new();
        for w in &words {
            let polarity = if rng.gen_bool(0.5) {
                "positive"
            } else {
                "negative"
            };
            body.push_str(&format!(
                "type=weaksubj len=1 word1={w} pos1=adj priorpolarity={polarity}\n"
            ));
        }
        let path = temp_file("scan.tff", &body);
        let lex = SentimentLexicon::load_mpqa(&path).unwrap();
        let source = fs::read_to_string(&path).unwrap();

        // independent oracle: first matching line wins, read straight off disk
        let scan = |query: &str| -> Option<Polarity> {
            for line in source.lines() {
                let mut word = None;
                let mut polarity = None;
                for field in line.split_whitespace() {
                    if let Some(v) = field.strip_prefix("word1=") {
                        word = Some(v);
                    } else if let Some(v) = field.strip_prefix("priorpolarity=") {
                        polarity = Some(v);
                    }
                }
                if word == Some(query) {
                    return match polarity {
                        Some("positive") => Some(Polarity::Positive),
                        Some("negative") => Some(Polarity::Negative),
                        _ => None,
                    };
                }
            }
            None
        };

        for _ in 0..100 {
            // half the queries hit, half miss
            let query = if rng.gen_bool(0.5) {
                words[rng.gen_range(0..words.len())].clone()
            } else {
                format!("absent{}", rng.gen_range(0..50))
            };
            assert_eq!(lex.polarity(&query), scan(&query), "query `{query}`");
        }
        fs::remove_file(path).ok();
    }

    #[test]
    fn opposite_involutes() {
        assert_eq!(Polarity::Positive.opposite(), Polarity::Negative);
        assert_eq!(Polarity::Negative.opposite(), Polarity::Positive);
        assert_eq!(Polarity::Positive.opposite().opposite(), Polarity::Positive);
    }
}
