//! Corpus loading, vocabulary construction, pretrained embeddings, splits,
//! batching, and the synthetic benchmark generator.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{decompose, tokenize};
use crate::error::{Error, Result};
use crate::labels::{count_polarities, weak_labels, WeakLabels};
use crate::lexicon::{Polarity, SentimentLexicon};
use crate::model::ChannelIndices;
use crate::numerics::Tensor;

/// One labeled text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawExample {
    pub id: String,
    pub text: String,
    /// 0 = non-sarcastic, 1 = sarcastic.
    pub y_s: u8,
}

/// A loaded corpus with unique example ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub examples: Vec<RawExample>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Count of (non-sarcastic, sarcastic) examples.
    pub fn label_counts(&self) -> (usize, usize) {
        let sarcastic = self.examples.iter().filter(|e| e.y_s == 1).count();
        (self.examples.len() - sarcastic, sarcastic)
    }
}

/// On-disk corpus layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// `label<TAB>text`, one example per line.
    Tsv,
    /// SemEval-2018 task 3 layout: `index<TAB>label<TAB>text` with an
    /// optional header line.
    Semeval,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<CorpusFormat> {
        match s {
            "tsv" => Ok(CorpusFormat::Tsv),
            "semeval" => Ok(CorpusFormat::Semeval),
            other => Err(Error::Config(format!("unknown corpus format `{other}`"))),
        }
    }
}

fn parse_label(raw: &str, path: &Path, lineno: usize) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::parse(
            path,
            lineno,
            format!("label must be 0 or 1, got `{other}`"),
        )),
    }
}

/// Load a corpus file. Malformed rows abort with their line number.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match format {
            CorpusFormat::Tsv => {
                let (label, body) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(path, lineno, "expected label<TAB>text"))?;
                examples.push(RawExample {
                    id: format!("line-{lineno}"),
                    text: body.to_string(),
                    y_s: parse_label(label, path, lineno)?,
                });
            }
            CorpusFormat::Semeval => {
                if lineno == 1 && line.to_lowercase().starts_with("tweet index") {
                    continue;
                }
                let mut parts = line.splitn(3, '\t');
                let (index, label, body) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(i), Some(l), Some(b)) => (i, l, b),
                    _ => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            "expected index<TAB>label<TAB>text",
                        ))
                    }
                };
                examples.push(RawExample {
                    id: format!("tweet-{}", index.trim()),
                    text: body.to_string(),
                    y_s: parse_label(label, path, lineno)?,
                });
            }
        }
    }

    if examples.is_empty() {
        return Err(Error::parse(path, 0, "no examples"));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    Ok(Corpus { name, examples })
}

/// Deterministic stratified split: `frac` of each label class goes to the
/// held-out side, largest-remainder rounding, order shuffled under `seed`.
pub fn split_stratified(corpus: &Corpus, frac: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(0.0..1.0).contains(&frac) || frac == 0.0 {
        return Err(Error::Config(format!(
            "split fraction must be in (0,1), got {frac}"
        )));
    }
    let n = corpus.len();
    let target = ((n as f64 * frac).round() as usize).max(1);
    if target >= n {
        return Err(Error::Config(format!(
            "corpus of {n} examples is too small for a {frac} held-out split"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in corpus.examples.iter().enumerate() {
        by_class[ex.y_s as usize].push(i);
    }
    for class in &mut by_class {
        class.shuffle(&mut rng);
    }

    // Per-class quotas by largest remainder.
    let quota_exact: [f64; 2] = [
        by_class[0].len() as f64 * target as f64 / n as f64,
        by_class[1].len() as f64 * target as f64 / n as f64,
    ];
    let mut quota = [
        quota_exact[0].floor() as usize,
        quota_exact[1].floor() as usize,
    ];
    let mut leftover = target - quota[0] - quota[1];
    let order = if quota_exact[0] - quota[0] as f64 >= quota_exact[1] - quota[1] as f64 {
        [0, 1]
    } else {
        [1, 0]
    };
    for class in order {
        while leftover > 0 && quota[class] < by_class[class].len() {
            quota[class] += 1;
            leftover -= 1;
        }
    }

    let held_set: std::collections::HashSet<usize> = by_class[0][..quota[0]]
        .iter()
        .chain(&by_class[1][..quota[1]])
        .copied()
        .collect();

    let mut rest = Vec::with_capacity(n - target);
    let mut held = Vec::with_capacity(target);
    for (i, ex) in corpus.examples.iter().enumerate() {
        if held_set.contains(&i) {
            held.push(ex.clone());
        } else {
            rest.push(ex.clone());
        }
    }
    Ok((
        Corpus {
            name: corpus.name.clone(),
            examples: rest,
        },
        Corpus {
            name: format!("{}-held", corpus.name),
            examples: held,
        },
    ))
}

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Token index map with PAD at 0 and UNK at 1. Built from the training
/// split only; sorted insertion keeps it deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD: &'static str = "<pad>";
    pub const UNK: &'static str = "<unk>";

    /// Build from training texts.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Vocabulary {
        let mut unique: Vec<String> = texts
            .into_iter()
            .flat_map(|t| tokenize(t).as_slice().to_vec())
            .collect();
        unique.sort_unstable();
        unique.dedup();
        Vocabulary::from_sorted_tokens(unique)
    }

    fn from_sorted_tokens(unique: Vec<String>) -> Vocabulary {
        let mut tokens = Vec::with_capacity(unique.len() + 2);
        tokens.push(Self::PAD.to_string());
        tokens.push(Self::UNK.to_string());
        tokens.extend(unique);
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Rebuild from a stored non-reserved token list (checkpoint loading).
    pub fn from_stored_tokens(stored: Vec<String>) -> Vocabulary {
        Vocabulary::from_sorted_tokens(stored)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Never true: PAD and UNK are always present.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(|s| s.as_str())
    }

    /// Tokens after the two reserved slots, in index order.
    pub fn stored_tokens(&self) -> &[String] {
        &self.tokens[2..]
    }

    pub fn encode(&self, tokens: &crate::decompose::TokenSequence) -> Vec<usize> {
        tokens.iter().map(|t| self.index_of(t)).collect()
    }
}

/// Embedding matrix plus the fraction of vocabulary entries that were
/// found in the pretrained file.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub tensor: Tensor,
    pub coverage: f64,
}

impl EmbeddingMatrix {
    /// All-random initialization (uniform in (-0.05, 0.05), PAD row zero).
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = vec![0.0; vocab.len() * dim];
        for (i, value) in values.iter_mut().enumerate() {
            if i >= dim {
                // row 0 is PAD and stays zero
                *value = rng.gen_range(-0.05..0.05);
            }
        }
        EmbeddingMatrix {
            tensor: Tensor::new(vec![vocab.len(), dim], values).expect("consistent shape"),
            coverage: 0.0,
        }
    }
}

/// Load pretrained text-format embeddings (`word v1 .. vN` per line).
/// Vocabulary words missing from the file initialize uniform(-0.05, 0.05)
/// under `seed`; the PAD row is zero.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut matrix = EmbeddingMatrix::random(vocab, dim, seed);
    let values = matrix.tensor.values_mut();
    let mut matched = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let Some(&idx) = vocab.index.get(word) else {
            continue;
        };
        if idx == PAD_INDEX || idx == UNK_INDEX {
            continue;
        }
        let row: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad float `{p}`")))
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("vector for `{word}` has {} dims, expected {dim}", row.len()),
            ));
        }
        values[idx * dim..(idx + 1) * dim].copy_from_slice(&row);
        matched += 1;
    }

    let countable = vocab.len().saturating_sub(2);
    matrix.coverage = if countable == 0 {
        0.0
    } else {
        matched as f64 / countable as f64
    };
    Ok(matrix)
}

/// A decomposed, weakly labeled, vocabulary-indexed example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedExample {
    pub id: String,
    pub w_t: Vec<usize>,
    pub w_l: Vec<usize>,
    pub w_d: Vec<usize>,
    pub fallback_used: bool,
    pub labels: WeakLabels,
}

impl PreparedExample {
    pub fn channels(&self) -> ChannelIndices<'_> {
        ChannelIndices {
            w_t: &self.w_t,
            w_l: &self.w_l,
            w_d: &self.w_d,
        }
    }
}

/// Tokenize, decompose, weak-label, and index a set of raw examples.
pub fn prepare_examples(
    examples: &[RawExample],
    lexicon: &SentimentLexicon,
    vocab: &Vocabulary,
) -> Vec<PreparedExample> {
    examples
        .iter()
        .map(|raw| {
            let tokens = tokenize(&raw.text);
            let split = decompose(&tokens, lexicon);
            let counts = count_polarities(&tokens, lexicon);
            let labels = weak_labels(counts, raw.y_s);
            PreparedExample {
                id: raw.id.clone(),
                w_t: vocab.encode(&split.w_t),
                w_l: vocab.encode(&split.w_l),
                w_d: vocab.encode(&split.w_d),
                fallback_used: split.fallback_used,
                labels,
            }
        })
        .collect()
}

/// One channel's padded index block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedBlock {
    /// Row per example, right-padded with PAD to the batch max length.
    pub rows: Vec<Vec<usize>>,
    /// True sequence lengths; encoders read only `rows[i][..lens[i]]`.
    pub lens: Vec<usize>,
}

impl PaddedBlock {
    fn build(sequences: Vec<&[usize]>) -> PaddedBlock {
        let max_len = sequences.iter().map(|s| s.len()).max().unwrap_or(0);
        let lens = sequences.iter().map(|s| s.len()).collect();
        let rows = sequences
            .into_iter()
            .map(|s| {
                let mut row = s.to_vec();
                row.resize(max_len, PAD_INDEX);
                row
            })
            .collect();
        PaddedBlock { rows, lens }
    }

    /// The live prefix of row `i`.
    pub fn seq(&self, i: usize) -> &[usize] {
        &self.rows[i][..self.lens[i]]
    }
}

/// A mini-batch over positions into the prepared example slice, with each
/// channel padded independently to its own max length.
#[derive(Debug, Clone)]
pub struct Batch {
    pub positions: Vec<usize>,
    pub w_t: PaddedBlock,
    pub w_l: PaddedBlock,
    pub w_d: PaddedBlock,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn channels(&self, i: usize) -> ChannelIndices<'_> {
        ChannelIndices {
            w_t: self.w_t.seq(i),
            w_l: self.w_l.seq(i),
            w_d: self.w_d.seq(i),
        }
    }
}

/// Shuffle examples under `seed` and group them into batches; the final
/// partial batch is kept.
pub fn make_batches(examples: &[PreparedExample], batch_size: usize, seed: u64) -> Vec<Batch> {
    assert!(batch_size > 0, "batch size must be positive");
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    order
        .chunks(batch_size)
        .map(|chunk| {
            let w_t =
                PaddedBlock::build(chunk.iter().map(|&i| examples[i].w_t.as_slice()).collect());
            let w_l =
                PaddedBlock::build(chunk.iter().map(|&i| examples[i].w_l.as_slice()).collect());
            let w_d =
                PaddedBlock::build(chunk.iter().map(|&i| examples[i].w_d.as_slice()).collect());
            Batch {
                positions: chunk.to_vec(),
                w_t,
                w_l,
                w_d,
            }
        })
        .collect()
}

const SYNTHETIC_POSITIVE_WORDS: [&str; 20] = [
    "amazing",
    "awesome",
    "brilliant",
    "delightful",
    "excellent",
    "fabulous",
    "fantastic",
    "glorious",
    "great",
    "lovely",
    "marvelous",
    "nice",
    "perfect",
    "pleasant",
    "splendid",
    "super",
    "superb",
    "terrific",
    "wonderful",
    "charming",
];

const SYNTHETIC_NEGATIVE_WORDS: [&str; 20] = [
    "awful",
    "terrible",
    "horrible",
    "dreadful",
    "nasty",
    "miserable",
    "lousy",
    "pathetic",
    "disgusting",
    "annoying",
    "painful",
    "unpleasant",
    "boring",
    "dire",
    "gloomy",
    "grim",
    "ugly",
    "rotten",
    "dismal",
    "wretched",
];

const SYNTHETIC_POSITIVE_SITUATIONS: [&str; 12] = [
    "i won the lottery this morning",
    "my team won the championship game",
    "i got a raise at work today",
    "we leave for vacation tomorrow morning",
    "my old friend is visiting this weekend",
    "the bakery gave me a free cake",
    "i finally finished paying off my loan",
    "our garden bloomed early this spring",
    "i found twenty dollars in my coat",
    "the concert tickets arrived in the mail",
    "my paper got accepted yesterday",
    "the sun came out for the picnic",
];

const SYNTHETIC_NEGATIVE_SITUATIONS: [&str; 12] = [
    "the final exam is on my birthday",
    "my flight got cancelled at midnight",
    "the printer jammed before my deadline",
    "i locked my keys inside the car",
    "it rained through the whole camping trip",
    "my phone screen cracked this morning",
    "the dentist found three cavities today",
    "traffic made me miss the interview",
    "my laptop died during the presentation",
    "the landlord raised my rent again",
    "i spilled coffee on the report",
    "my tooth started aching on sunday",
];

const SYNTHETIC_TEMPLATES: [&str; 6] = [
    "{situation} , how {word}",
    "{situation} , that is just {word}",
    "oh {word} , {situation}",
    "what a {word} day , {situation}",
    "this is {word} , {situation}",
    "{situation} , so {word}",
];

/// The lexicon used by the synthetic generator.
pub fn synthetic_lexicon() -> SentimentLexicon {
    SentimentLexicon::from_entries(
        SYNTHETIC_POSITIVE_WORDS
            .iter()
            .map(|w| (*w, Polarity::Positive))
            .chain(
                SYNTHETIC_NEGATIVE_WORDS
                    .iter()
                    .map(|w| (*w, Polarity::Negative)),
            ),
    )
}

/// Generate a class-balanced synthetic corpus where an example is
/// sarcastic exactly when its sentiment word's polarity conflicts with its
/// situation phrase's polarity. `n` must be at least 4; odd counts round
/// the sarcastic half up.
pub fn gen_synthetic(n: usize, seed: u64) -> Result<(Corpus, SentimentLexicon)> {
    if n < 4 {
        return Err(Error::Config(format!(
            "synthetic corpus needs n >= 4, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicon = synthetic_lexicon();

    let n_sarcastic = n.div_ceil(2);
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let y_s = u8::from(i < n_sarcastic);
        let word_positive = rng.gen_bool(0.5);
        let situation_positive = if y_s == 1 {
            !word_positive
        } else {
            word_positive
        };

        let word = if word_positive {
            SYNTHETIC_POSITIVE_WORDS[rng.gen_range(0..SYNTHETIC_POSITIVE_WORDS.len())]
        } else {
            SYNTHETIC_NEGATIVE_WORDS[rng.gen_range(0..SYNTHETIC_NEGATIVE_WORDS.len())]
        };
        let situation = if situation_positive {
            SYNTHETIC_POSITIVE_SITUATIONS[rng.gen_range(0..SYNTHETIC_POSITIVE_SITUATIONS.len())]
        } else {
            SYNTHETIC_NEGATIVE_SITUATIONS[rng.gen_range(0..SYNTHETIC_NEGATIVE_SITUATIONS.len())]
        };
        let template = SYNTHETIC_TEMPLATES[rng.gen_range(0..SYNTHETIC_TEMPLATES.len())];
        let text = template
            .replace("{word}", word)
            .replace("{situation}", situation);
        examples.push(RawExample {
            id: format!("syn-{i}"),
            text,
            y_s,
        });
    }

    examples.shuffle(&mut rng);
    Ok((
        Corpus {
            name: "synthetic".to_string(),
            examples,
        },
        lexicon,
    ))
}
