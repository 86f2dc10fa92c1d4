//! Weak sentiment labels derived from lexicon hit counts over the full text.
//!
//! The literal label follows the majority sentiment-word polarity. For a
//! sarcastic text the implied label is its opposite; for a non-sarcastic
//! text the two agree. Ties (including zero hits) produce no labels and
//! disable the auxiliary losses for that example via `aux_mask`.

use serde::{Deserialize, Serialize};

use crate::decompose::TokenSequence;
use crate::lexicon::{Polarity, SentimentLexicon};

/// Per-example training labels: the gold sarcasm label plus the two
/// approximate sentiment labels, when defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabels {
    /// 0 = non-sarcastic, 1 = sarcastic.
    pub y_s: u8,
    pub y_l: Option<Polarity>,
    pub y_d: Option<Polarity>,
    /// True iff both sentiment labels are present.
    pub aux_mask: bool,
}

impl WeakLabels {
    /// Sarcasm class index for the classifier head.
    pub fn sarcasm_class(&self) -> usize {
        self.y_s as usize
    }
}

/// Count positive and negative lexicon hits over `tokens`.
pub fn count_polarities(tokens: &TokenSequence, lexicon: &SentimentLexicon) -> (usize, usize) {
    let mut n_pos = 0;
    let mut n_neg = 0;
    for token in tokens {
        match lexicon.polarity(token) {
            Some(Polarity::Positive) => n_pos += 1,
            Some(Polarity::Negative) => n_neg += 1,
            None => {}
        }
    }
    (n_pos, n_neg)
}

/// Derive weak labels from the polarity counts and the gold sarcasm label.
pub fn weak_labels(counts: (usize, usize), y_s: u8) -> WeakLabels {
    debug_assert!(y_s <= 1, "sarcasm label must be 0 or 1");
    let (n_pos, n_neg) = counts;

    let literal = if n_pos > n_neg {
        Some(Polarity::Positive)
    } else if n_pos < n_neg {
        Some(Polarity::Negative)
    } else {
        None
    };

    match literal {
        Some(lit) => {
            let implied = if y_s == 1 { lit.opposite() } else { lit };
            WeakLabels {
                y_s,
                y_l: Some(lit),
                y_d: Some(implied),
                aux_mask: true,
            }
        }
        None => WeakLabels {
            y_s,
            y_l: None,
            y_d: None,
            aux_mask: false,
        },
    }
}
