//! Command-line pipeline for dual-channel sarcasm recognition.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure
//! (diverged loss or a failed gradient check). All randomness flows from
//! `--seed` / the config file; identical invocations write identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dcnet::data::{self, Corpus, CorpusFormat};
use dcnet::decompose::{decompose, tokenize};
use dcnet::error::Error;
use dcnet::experiment::{prepare_splits, run_ablation, run_gradcheck_suite, train_once, RunConfig};
use dcnet::labels::{count_polarities, weak_labels};
use dcnet::lexicon::{Polarity, SentimentLexicon};
use dcnet::metrics::Metrics;
use dcnet::model::AnalyzerMode;
use dcnet::trainer::export_representations_file;
use dcnet::{checkpoint, Result};

const CONFIG_ENV: &str = "DCNET_CONFIG";

#[derive(Parser)]
#[command(
    name = "dcnet",
    version,
    about = "Dual-channel sarcasm recognition pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum LexiconFormat {
    Mpqa,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CorpusFormatArg {
    Tsv,
    Semeval,
}

impl From<CorpusFormatArg> for CorpusFormat {
    fn from(arg: CorpusFormatArg) -> CorpusFormat {
        match arg {
            CorpusFormatArg::Tsv => CorpusFormat::Tsv,
            CorpusFormatArg::Semeval => CorpusFormat::Semeval,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AnalyzerArg {
    Concat,
    Subtract,
}

impl From<AnalyzerArg> for AnalyzerMode {
    fn from(arg: AnalyzerArg) -> AnalyzerMode {
        match arg {
            AnalyzerArg::Concat => AnalyzerMode::Concat,
            AnalyzerArg::Subtract => AnalyzerMode::Subtract,
        }
    }
}

#[derive(Args)]
struct LexiconArgs {
    /// Sentiment lexicon file.
    #[arg(long)]
    lexicon: PathBuf,
    /// Lexicon file format.
    #[arg(long, value_enum, default_value = "mpqa")]
    lexicon_format: LexiconFormat,
}

impl LexiconArgs {
    fn load(&self) -> Result<SentimentLexicon> {
        let lexicon = match self.lexicon_format {
            LexiconFormat::Mpqa => SentimentLexicon::load_mpqa(&self.lexicon)?,
            LexiconFormat::Tsv => SentimentLexicon::load_tsv(&self.lexicon)?,
        };
        let stats = lexicon.stats();
        for warning in &stats.warnings {
            eprintln!("lexicon: {warning}");
        }
        if stats.malformed > 0 {
            eprintln!("lexicon: skipped {} malformed line(s)", stats.malformed);
        }
        eprintln!(
            "lexicon: {} entries from {}",
            lexicon.len(),
            self.lexicon.display()
        );
        Ok(lexicon)
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus file format.
    #[arg(long, value_enum, default_value = "tsv")]
    format: CorpusFormatArg,
}

impl CorpusArgs {
    fn load(&self) -> Result<Corpus> {
        let corpus = data::load_corpus(&self.corpus, self.format.into())?;
        let (zeros, ones) = corpus.label_counts();
        eprintln!(
            "corpus: {} examples ({zeros} non-sarcastic / {ones} sarcastic) from {}",
            corpus.len(),
            self.corpus.display()
        );
        Ok(corpus)
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; falls back to $DCNET_CONFIG, then defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Random seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Analyzer head variant (overrides the config file).
    #[arg(long, value_enum)]
    analyzer: Option<AnalyzerArg>,
    /// Sarcasm loss weight (overrides the config file).
    #[arg(long)]
    lambda1: Option<f64>,
    /// Literal sentiment loss weight (overrides the config file).
    #[arg(long)]
    lambda2: Option<f64>,
    /// Implied sentiment loss weight (overrides the config file).
    #[arg(long)]
    lambda3: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let path = self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut config = match path {
            Some(path) => {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.train.seed = seed;
        }
        if let Some(analyzer) = self.analyzer {
            config.model.analyzer = analyzer.into();
        }
        if let Some(l1) = self.lambda1 {
            config.train.lambda1 = l1;
        }
        if let Some(l2) = self.lambda2 {
            config.train.lambda2 = l2;
        }
        if let Some(l3) = self.lambda3 {
            config.train.lambda3 = l3;
        }
        config.train.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split a corpus into literal/implied channel inputs (JSON lines out).
    Decompose {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output JSON-lines file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive weak sentiment labels from decomposed examples.
    Label {
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// Decomposed JSON-lines input (from `decompose`).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output JSON-lines file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and keep the best validation checkpoint.
    Train {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Pretrained embedding text file (GloVe layout); random init if absent.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Held-out test corpus to score the selected model on.
        #[arg(long)]
        test_corpus: Option<PathBuf>,
        /// Carve a test split of this fraction instead of `--test-corpus`.
        #[arg(long)]
        test_frac: Option<f64>,
        /// Output directory (checkpoint, history, manifest, metrics).
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a checkpoint on a corpus.
    Eval {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Trained checkpoint file.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Metrics JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the four objective configurations and tabulate their scores.
    Ablate {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Pretrained embedding text file; random init if absent.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Test fraction carved from the corpus for the comparison.
        #[arg(long, default_value_t = 0.2)]
        test_frac: f64,
        /// Ablation table JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify analytic gradients against finite differences.
    Gradcheck {
        /// Random seed for probe-coordinate choice.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Export projected channel representations of a trained model as TSV.
    ExportReps {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Trained checkpoint file.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output TSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the synthetic conflict corpus and its lexicon.
    GenSynthetic {
        /// Number of examples.
        #[arg(long, default_value_t = 800)]
        n: usize,
        #[arg(long, default_value_t = 13)]
        seed: u64,
        /// Corpus TSV output path.
        #[arg(long)]
        out_corpus: PathBuf,
        /// Lexicon TSV output path.
        #[arg(long)]
        out_lexicon: PathBuf,
    },
}

#[derive(Serialize)]
struct DecomposedRecord<'a> {
    id: &'a str,
    text: &'a str,
    y_s: u8,
    tokens: Vec<&'a str>,
    w_l: Vec<&'a str>,
    w_d: Vec<&'a str>,
    fallback_used: bool,
}

#[derive(serde::Deserialize)]
struct DecomposedIn {
    id: String,
    y_s: u8,
    tokens: Vec<String>,
}

#[derive(Serialize)]
struct LabelRecord<'a> {
    id: &'a str,
    y_s: u8,
    y_l: Option<Polarity>,
    y_d: Option<Polarity>,
    aux_mask: bool,
}

#[derive(Serialize)]
struct TrainReport<'a> {
    valid: &'a Metrics,
    test: Option<&'a Metrics>,
    best_step: u64,
    total_steps: u64,
    stopped_early: bool,
    embedding_coverage: f64,
}

fn create_writer(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut writer = create_writer(path)?;
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::Config(format!("cannot serialize {}: {e}", path.display())))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

fn cmd_decompose(lexicon: &LexiconArgs, corpus: &CorpusArgs, out: &Path) -> Result<()> {
    let lexicon = lexicon.load()?;
    let corpus = corpus.load()?;
    let mut writer = create_writer(out)?;
    let mut fallbacks = 0usize;
    for example in &corpus.examples {
        let tokens = tokenize(&example.text);
        let split = decompose(&tokens, &lexicon);
        if split.fallback_used {
            fallbacks += 1;
        }
        let record = DecomposedRecord {
            id: &example.id,
            text: &example.text,
            y_s: example.y_s,
            tokens: split.w_t.iter().map(|s| s.as_str()).collect(),
            w_l: split.w_l.iter().map(|s| s.as_str()).collect(),
            w_d: split.w_d.iter().map(|s| s.as_str()).collect(),
            fallback_used: split.fallback_used,
        };
        serde_json::to_writer(&mut writer, &record)
            .map_err(|e| Error::Config(format!("cannot serialize record: {e}")))?;
        writer.write_all(b"\n").map_err(|e| Error::io(out, e))?;
    }
    writer.flush().map_err(|e| Error::io(out, e))?;
    let matched = corpus.len() - fallbacks;
    println!(
        "decomposed {} examples -> {} ({matched} with sentiment words, {fallbacks} fallback)",
        corpus.len(),
        out.display()
    );
    Ok(())
}

fn cmd_label(lexicon: &LexiconArgs, input: &Path, out: &Path) -> Result<()> {
    let lexicon = lexicon.load()?;
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let mut writer = create_writer(out)?;
    let mut masked = 0usize;
    let mut total = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: DecomposedIn = serde_json::from_str(line)
            .map_err(|e| Error::parse(input, lineno + 1, format!("bad record: {e}")))?;
        let tokens = dcnet::decompose::TokenSequence::from_tokens(record.tokens.iter());
        let counts = count_polarities(&tokens, &lexicon);
        let labels = weak_labels(counts, record.y_s);
        if !labels.aux_mask {
            masked += 1;
        }
        total += 1;
        let out_record = LabelRecord {
            id: &record.id,
            y_s: labels.y_s,
            y_l: labels.y_l,
            y_d: labels.y_d,
            aux_mask: labels.aux_mask,
        };
        serde_json::to_writer(&mut writer, &out_record)
            .map_err(|e| Error::Config(format!("cannot serialize record: {e}")))?;
        writer.write_all(b"\n").map_err(|e| Error::io(out, e))?;
    }
    writer.flush().map_err(|e| Error::io(out, e))?;
    println!(
        "labeled {total} examples -> {} ({masked} tie-masked)",
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    lexicon: &LexiconArgs,
    corpus: &CorpusArgs,
    config: &ConfigArgs,
    embeddings: Option<&Path>,
    test_corpus: Option<&Path>,
    test_frac: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let lexicon = lexicon.load()?;
    let corpus_data = corpus.load()?;
    let run_config = config.resolve()?;

    let test_loaded = match test_corpus {
        Some(path) => Some(data::load_corpus(path, corpus.format.into())?),
        None => None,
    };

    let splits = prepare_splits(
        &corpus_data,
        test_loaded.as_ref(),
        test_frac,
        &lexicon,
        embeddings,
        run_config.model.input_dim,
        run_config.train.valid_frac,
        run_config.train.seed,
    )?;
    if embeddings.is_some() {
        eprintln!(
            "embeddings: {:.1}% of vocabulary covered",
            100.0 * splits.embeddings.coverage
        );
    }

    let artifacts = train_once(&run_config.model, &run_config.train, &splits)?;

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ckpt_path = out_dir.join("checkpoint.ckpt");
    checkpoint::save_checkpoint(
        &ckpt_path,
        &artifacts.model_config,
        &splits.vocab,
        &artifacts.store,
    )?;

    let history_path = out_dir.join("history.jsonl");
    {
        let mut writer = create_writer(&history_path)?;
        for record in &artifacts.history.records {
            serde_json::to_writer(&mut writer, record)
                .map_err(|e| Error::Config(format!("cannot serialize history: {e}")))?;
            writer
                .write_all(b"\n")
                .map_err(|e| Error::io(&history_path, e))?;
        }
        writer.flush().map_err(|e| Error::io(&history_path, e))?;
    }

    write_json(&out_dir.join("split_manifest.json"), &splits.manifest)?;

    let best = artifacts
        .history
        .records
        .iter()
        .rfind(|r| r.is_best)
        .ok_or_else(|| Error::Config("no checkpoint was recorded".into()))?;
    let report = TrainReport {
        valid: &best.valid,
        test: artifacts.test_metrics.as_ref(),
        best_step: artifacts.history.best_step,
        total_steps: artifacts.history.total_steps,
        stopped_early: artifacts.history.stopped_early,
        embedding_coverage: splits.embeddings.coverage,
    };
    write_json(&out_dir.join("metrics.json"), &report)?;

    println!(
        "trained {} steps; best checkpoint at step {} (valid macro-F1 {:.4}) -> {}",
        artifacts.history.total_steps,
        artifacts.history.best_step,
        artifacts.history.best_valid_macro_f1,
        ckpt_path.display()
    );
    if let Some(test) = &artifacts.test_metrics {
        println!(
            "test: precision {:.4} recall {:.4} macro-F1 {:.4} accuracy {:.4}",
            test.precision, test.recall, test.macro_f1, test.accuracy
        );
    }
    Ok(())
}

fn cmd_eval(lexicon: &LexiconArgs, corpus: &CorpusArgs, ckpt: &Path, out: &Path) -> Result<()> {
    let lexicon = lexicon.load()?;
    let corpus = corpus.load()?;
    let (_, vocab, model, store) = checkpoint::load_checkpoint(ckpt)?;
    let prepared = data::prepare_examples(&corpus.examples, &lexicon, &vocab);
    let metrics = dcnet::trainer::evaluate(&model, &store, &prepared)?;
    write_json(out, &metrics)?;
    println!(
        "precision {:.4} recall {:.4} macro-F1 {:.4} accuracy {:.4} -> {}",
        metrics.precision,
        metrics.recall,
        metrics.macro_f1,
        metrics.accuracy,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ablate(
    lexicon: &LexiconArgs,
    corpus: &CorpusArgs,
    config: &ConfigArgs,
    embeddings: Option<&Path>,
    test_frac: f64,
    out: &Path,
) -> Result<()> {
    let lexicon = lexicon.load()?;
    let corpus_data = corpus.load()?;
    let run_config = config.resolve()?;

    let splits = prepare_splits(
        &corpus_data,
        None,
        Some(test_frac),
        &lexicon,
        embeddings,
        run_config.model.input_dim,
        run_config.train.valid_frac,
        run_config.train.seed,
    )?;

    let rows = run_ablation(&run_config.model, &run_config.train, &splits)?;
    write_json(out, &rows)?;

    println!(
        "{:<26} {:>9} {:>9} {:>9} {:>9}",
        "objective", "precision", "recall", "macro-F1", "accuracy"
    );
    for row in &rows {
        println!(
            "{:<26} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            row.objective,
            row.test.precision,
            row.test.recall,
            row.test.macro_f1,
            row.test.accuracy
        );
    }
    println!("table -> {}", out.display());
    Ok(())
}

fn cmd_gradcheck(seed: u64) -> Result<ExitCode> {
    let suite = run_gradcheck_suite(seed)?;
    println!(
        "{:<16} {:>12} {:>10}  result",
        "check", "max rel err", "tolerance"
    );
    for (name, report, tolerance) in suite.rows() {
        println!(
            "{:<16} {:>12.3e} {:>10.0e}  {}",
            name,
            report.max_rel_err,
            tolerance,
            if report.passes(tolerance) {
                "ok"
            } else {
                "FAIL"
            }
        );
    }
    if suite.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("gradient check failed");
        Ok(ExitCode::from(3))
    }
}

fn cmd_export_reps(
    lexicon: &LexiconArgs,
    corpus: &CorpusArgs,
    ckpt: &Path,
    out: &Path,
) -> Result<()> {
    let lexicon = lexicon.load()?;
    let corpus = corpus.load()?;
    let (_, vocab, model, store) = checkpoint::load_checkpoint(ckpt)?;
    let prepared = data::prepare_examples(&corpus.examples, &lexicon, &vocab);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let rows = export_representations_file(&model, &store, &prepared, out)?;
    println!(
        "wrote {rows} rows ({} examples) -> {}",
        prepared.len(),
        out.display()
    );
    Ok(())
}

fn cmd_gen_synthetic(n: usize, seed: u64, out_corpus: &Path, out_lexicon: &Path) -> Result<()> {
    let (corpus, lexicon) = data::gen_synthetic(n, seed)?;
    {
        let mut writer = create_writer(out_corpus)?;
        for example in &corpus.examples {
            writeln!(writer, "{}\t{}", example.y_s, example.text)
                .map_err(|e| Error::io(out_corpus, e))?;
        }
        writer.flush().map_err(|e| Error::io(out_corpus, e))?;
    }
    {
        let mut entries: Vec<(String, Polarity)> =
            lexicon.iter().map(|(w, p)| (w.to_string(), p)).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut writer = create_writer(out_lexicon)?;
        for (word, polarity) in entries {
            writeln!(writer, "{word}\t{polarity}").map_err(|e| Error::io(out_lexicon, e))?;
        }
        writer.flush().map_err(|e| Error::io(out_lexicon, e))?;
    }
    let (zeros, ones) = corpus.label_counts();
    println!(
        "generated {} examples ({zeros}/{ones}) -> {} ; lexicon -> {}",
        corpus.len(),
        out_corpus.display(),
        out_lexicon.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Decompose {
            lexicon,
            corpus,
            out,
        } => {
            cmd_decompose(lexicon, corpus, out)?;
        }
        Command::Label {
            lexicon,
            input,
            out,
        } => {
            cmd_label(lexicon, input, out)?;
        }
        Command::Train {
            lexicon,
            corpus,
            config,
            embeddings,
            test_corpus,
            test_frac,
            out_dir,
        } => {
            cmd_train(
                lexicon,
                corpus,
                config,
                embeddings.as_deref(),
                test_corpus.as_deref(),
                *test_frac,
                out_dir,
            )?;
        }
        Command::Eval {
            lexicon,
            corpus,
            checkpoint,
            out,
        } => {
            cmd_eval(lexicon, corpus, checkpoint, out)?;
        }
        Command::Ablate {
            lexicon,
            corpus,
            config,
            embeddings,
            test_frac,
            out,
        } => {
            cmd_ablate(
                lexicon,
                corpus,
                config,
                embeddings.as_deref(),
                *test_frac,
                out,
            )?;
        }
        Command::Gradcheck { seed } => {
            return cmd_gradcheck(*seed);
        }
        Command::ExportReps {
            lexicon,
            corpus,
            checkpoint,
            out,
        } => {
            cmd_export_reps(lexicon, corpus, checkpoint, out)?;
        }
        Command::GenSynthetic {
            n,
            seed,
            out_corpus,
            out_lexicon,
        } => {
            cmd_gen_synthetic(*n, *seed, out_corpus, out_lexicon)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_numeric() { 3 } else { 2 })
        }
    }
}
