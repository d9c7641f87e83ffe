use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use newslens::classifier::{
    linear_evaluate, Grid, GridPoint, HeadFile, LabeledSet, Selection, TrainConfig,
};
use newslens::corpus::{load_csv, split, Corpus, SourceFile, SplitManifest, FAKE, REAL};
use newslens::encoder::{EncoderConfig, EncoderWeights};
use newslens::interpret::{correlation_matrix, pca_fit, pca_project, projections_csv, render, RenderFormat};
use newslens::pipeline::{
    Backend, EncoderBackend, RepresentationStats, StaticBackend, WordTokenizer,
};
use newslens::runconfig::{ConfigFile, List, Manifest, Resolver};
use newslens::static_embed::EmbeddingTable;
use newslens::tfidf::{TfidfConfig, TfidfModel};
use newslens::tokenize::WordPieceVocab;
use newslens::{archive::TensorArchive, Error, Result};

const OOV_POLICY: &str = "tokens without a vector are skipped before pooling; documents with none pool to zero";

#[derive(Parser)]
#[command(name = "newslens", version, about = "Real/fake news classification and representation analysis")]
struct Cli {
    /// Flat key=value file of option values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the real and fake CSVs, clean datelines, and write a seeded train/test split.
    Prepare(PrepareArgs),
    /// Train linear heads on frozen representations over the hyper-parameter grid.
    LinearEval(LinearEvalArgs),
    /// Explain one prediction with token-level class activation maps.
    Cam(CamArgs),
    /// Project test-set representations onto their first two principal components.
    Pca(PcaArgs),
    /// Token correlation matrices of static and contextual representations of one text.
    Corr(CorrArgs),
    /// Write the encoder's word-embedding matrix as a text embedding table.
    ExtractWordEmbeddings(ExtractArgs),
}

#[derive(Args)]
struct PrepareArgs {
    #[arg(long)]
    real: Option<String>,
    #[arg(long)]
    fake: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of documents assigned to the training set.
    #[arg(long)]
    fraction: Option<f64>,
    /// Strip the "(Reuters) -" dateline prefix from the real file.
    #[arg(long)]
    clean_real: Option<bool>,
}

#[derive(Args)]
struct EncoderArgs {
    /// Tensor archive of encoder weights.
    #[arg(long)]
    weights: Option<String>,
    /// WordPiece vocabulary, one token per line.
    #[arg(long)]
    vocab: Option<String>,
    /// JSON encoder geometry; inferred from the archive when absent.
    #[arg(long)]
    encoder_config: Option<String>,
    /// Attention heads, used when the geometry is inferred.
    #[arg(long)]
    num_heads: Option<usize>,
    #[arg(long)]
    max_length: Option<usize>,
}

#[derive(Args)]
struct BackendArgs {
    /// tfidf, static or bert.
    #[arg(long)]
    backend: Option<String>,
    /// TF-IDF n-gram size (1 or 2).
    #[arg(long)]
    ngram: Option<usize>,
    /// TF-IDF stopword removal.
    #[arg(long)]
    stopwords: Option<bool>,
    #[arg(long)]
    max_features: Option<usize>,
    /// Static embedding table (word2vec/GloVe text format).
    #[arg(long)]
    embeddings: Option<String>,
    /// Static backend tokenizer: basic or wordpiece.
    #[arg(long)]
    tokenizer: Option<String>,
    /// Lowercase before the basic tokenizer.
    #[arg(long)]
    lowercase: Option<bool>,
    #[command(flatten)]
    encoder: EncoderArgs,
}

#[derive(Args)]
struct LinearEvalArgs {
    /// split.json written by `prepare`.
    #[arg(long)]
    split: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Comma-separated weight decays.
    #[arg(long)]
    weight_decays: Option<List<f64>>,
    /// Comma-separated epoch counts.
    #[arg(long)]
    epochs: Option<List<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    /// test (best test accuracy) or validation (best on a training hold-out).
    #[arg(long)]
    selection: Option<String>,
    #[arg(long)]
    validation_fraction: Option<f64>,
    /// Label for the result row.
    #[arg(long)]
    row: Option<String>,
    /// Metrics JSON path.
    #[arg(long)]
    out: Option<String>,
    /// Where to save the selected head.
    #[arg(long)]
    head_out: Option<String>,
}

#[derive(Args)]
struct CamArgs {
    /// Trained head JSON.
    #[arg(long)]
    head: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, conflicts_with = "input")]
    text: Option<String>,
    /// File whose whole content is the text to explain.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    fraction: Option<f64>,
    /// ansi or html.
    #[arg(long)]
    format: Option<String>,
    /// predicted, or a class index.
    #[arg(long)]
    class: Option<String>,
    /// JSON report path.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    split: Option<String>,
    #[command(flatten)]
    backend: BackendArgs,
    /// CSV output path.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct CorrArgs {
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long, conflicts_with = "input")]
    text: Option<String>,
    #[arg(long)]
    input: Option<String>,
    /// Writes <prefix>.static.csv and <prefix>.contextual.csv.
    #[arg(long)]
    out_prefix: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    encoder: EncoderArgs,
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = hint(&e) {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

fn hint(e: &Error) -> Option<&'static str> {
    match e {
        Error::Io { .. } => Some(
            "check the path; splits come from `newslens prepare`, static tables from \
             `newslens extract-word-embeddings` or a word2vec/GloVe text file, heads from \
             `newslens linear-eval --head-out`",
        ),
        Error::Tensor { .. } => Some(
            "the archive must hold the encoder tensors under their standard names; \
             convert checkpoints with scripts/convert_hf_bert.py",
        ),
        _ => None,
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    match cli.command {
        Command::Prepare(a) => prepare(Resolver::new("prepare", file)?, a),
        Command::LinearEval(a) => linear_eval(Resolver::new("linear-eval", file)?, a),
        Command::Cam(a) => cam_cmd(Resolver::new("cam", file)?, a),
        Command::Pca(a) => pca_cmd(Resolver::new("pca", file)?, a),
        Command::Corr(a) => corr_cmd(Resolver::new("corr", file)?, a),
        Command::ExtractWordEmbeddings(a) => extract(Resolver::new("extract-word-embeddings", file)?, a),
    }
}

fn write_text(path: &str, text: &str) -> Result<()> {
    if let Some(dir) = Path::new(path).parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn finish(r: Resolver, path: &str) -> Result<()> {
    let manifest: Manifest = r.finish()?;
    write_text(path, &manifest.render())
}

fn unused(flags: &[(&str, bool)], context: &str) -> Result<()> {
    match flags.iter().find(|(_, set)| *set) {
        Some((name, _)) => Err(Error::InvalidArgument(format!("--{name} does not apply to {context}"))),
        None => Ok(()),
    }
}

fn prepare(mut r: Resolver, a: PrepareArgs) -> Result<()> {
    let real = r.required::<String>("real", a.real)?;
    let fake = r.required::<String>("fake", a.fake)?;
    let out_dir = r.required::<String>("out_dir", a.out_dir)?;
    let seed = r.with_default("seed", a.seed, 42)?;
    let fraction = r.with_default("fraction", a.fraction, 0.8)?;
    let clean_real = r.with_default("clean_real", a.clean_real, true)?;

    let mut real_docs = load_csv(&real, REAL)?;
    if clean_real {
        real_docs = real_docs.clean_reuters();
    }
    let fake_docs = load_csv(&fake, FAKE)?;
    let sources = vec![
        SourceFile {
            path: real.clone(),
            label: REAL,
            cleaned: clean_real,
            documents: real_docs.len(),
            dropped: real_docs.dropped,
        },
        SourceFile {
            path: fake.clone(),
            label: FAKE,
            cleaned: false,
            documents: fake_docs.len(),
            dropped: fake_docs.dropped,
        },
    ];
    let corpus = Corpus::concat([real_docs, fake_docs]);
    let s = split(&corpus, fraction, seed)?;
    let manifest = SplitManifest::new(sources, &s);
    write_json(&format!("{out_dir}/split.json"), &manifest)?;
    finish(r, &format!("{out_dir}/prepare.manifest"))?;
    println!(
        "{} documents: {} train, {} test (seed {seed})",
        corpus.len(),
        s.train.len(),
        s.test.len()
    );
    Ok(())
}

fn encoder_backend(r: &mut Resolver, a: &EncoderArgs) -> Result<EncoderBackend> {
    let weights = r.required::<String>("weights", a.weights.clone())?;
    let vocab_path = r.required::<String>("vocab", a.vocab.clone())?;
    let config_path = r.optional::<String>("encoder_config", a.encoder_config.clone(), None)?;
    let num_heads = if config_path.is_none() {
        Some(r.with_default("num_heads", a.num_heads, 12)?)
    } else {
        unused(&[("num-heads", a.num_heads.is_some())], "an explicit --encoder-config")?;
        None
    };
    let vocab = WordPieceVocab::load(&vocab_path)?;
    let archive = TensorArchive::read(&weights)?;
    let config = match (config_path, num_heads) {
        (Some(p), _) => {
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_slice::<EncoderConfig>(&bytes)?
        }
        (None, Some(h)) => EncoderConfig::infer(&archive, h)?,
        (None, None) => unreachable!("one of the two is resolved"),
    };
    info!("encoder geometry {config:?}");
    let max_length = r.with_default("max_length", a.max_length, config.max_positions.min(512))?;
    EncoderBackend::new(EncoderWeights::from_archive(&archive, config)?, vocab, max_length)
}

fn no_encoder_flags(a: &EncoderArgs, context: &str) -> Result<()> {
    unused(
        &[
            ("weights", a.weights.is_some()),
            ("encoder-config", a.encoder_config.is_some()),
            ("num-heads", a.num_heads.is_some()),
            ("max-length", a.max_length.is_some()),
        ],
        context,
    )
}

/// Resolves and builds the representation backend. `fit_texts` fits TF-IDF; `texts` are
/// everything that will be represented and bound what is read from a static table.
fn backend(
    r: &mut Resolver,
    a: &BackendArgs,
    default: &str,
    allowed: &[&str],
    fit_texts: &[&str],
    texts: &[&str],
) -> Result<Backend> {
    let name = r.with_default("backend", a.backend.clone(), default.to_string())?;
    if !allowed.contains(&name.as_str()) {
        return Err(Error::InvalidArgument(format!(
            "backend {name:?} not supported here; choose one of {allowed:?}"
        )));
    }
    let context = format!("the {name} backend");
    match name.as_str() {
        "tfidf" => {
            no_encoder_flags(&a.encoder, &context)?;
            unused(
                &[
                    ("embeddings", a.embeddings.is_some()),
                    ("tokenizer", a.tokenizer.is_some()),
                    ("lowercase", a.lowercase.is_some()),
                    ("vocab", a.encoder.vocab.is_some()),
                ],
                &context,
            )?;
            let defaults = TfidfConfig::default();
            let config = TfidfConfig {
                ngram: r.with_default("ngram", a.ngram, defaults.ngram)?,
                stopword_removal: r.with_default("stopwords", a.stopwords, defaults.stopword_removal)?,
                max_features: r.with_default("max_features", a.max_features, defaults.max_features)?,
            };
            let model = TfidfModel::fit(fit_texts.iter().copied(), config)?;
            if model.dim() < config.max_features {
                warn!("vocabulary smaller than max_features: {} terms", model.dim());
            }
            Ok(Backend::Tfidf(model))
        }
        "static" => {
            no_encoder_flags(&a.encoder, &context)?;
            unused(
                &[
                    ("ngram", a.ngram.is_some()),
                    ("stopwords", a.stopwords.is_some()),
                    ("max-features", a.max_features.is_some()),
                ],
                &context,
            )?;
            let table_path = r.required::<String>("embeddings", a.embeddings.clone())?;
            let kind = r.with_default("tokenizer", a.tokenizer.clone(), "basic".to_string())?;
            let tokenizer = match kind.as_str() {
                "basic" => {
                    unused(&[("vocab", a.encoder.vocab.is_some())], "the basic tokenizer")?;
                    WordTokenizer::Basic {
                        lowercase: r.with_default("lowercase", a.lowercase, true)?,
                    }
                }
                "wordpiece" => {
                    unused(&[("lowercase", a.lowercase.is_some())], "the wordpiece tokenizer")?;
                    let vocab = r.required::<String>("vocab", a.encoder.vocab.clone())?;
                    WordTokenizer::WordPiece(WordPieceVocab::load(&vocab)?)
                }
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "unknown tokenizer {other:?}; expected basic or wordpiece"
                    )))
                }
            };
            let needed: HashSet<String> = texts
                .iter()
                .flat_map(|t| tokenizer.tokenize(t).tokens)
                .collect();
            let table = EmbeddingTable::load_filtered(&table_path, Some(&needed))?;
            info!("loaded {} of {} distinct tokens from {table_path}", table.len(), needed.len());
            Ok(Backend::Static(StaticBackend { table, tokenizer }))
        }
        "bert" => {
            unused(
                &[
                    ("ngram", a.ngram.is_some()),
                    ("stopwords", a.stopwords.is_some()),
                    ("max-features", a.max_features.is_some()),
                    ("embeddings", a.embeddings.is_some()),
                    ("tokenizer", a.tokenizer.is_some()),
                    ("lowercase", a.lowercase.is_some()),
                ],
                &context,
            )?;
            Ok(Backend::Encoder(encoder_backend(r, &a.encoder)?))
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown backend {other:?}; expected tfidf, static or bert"
        ))),
    }
}

fn load_split(r: &mut Resolver, flag: Option<String>) -> Result<newslens::corpus::SplitCorpus> {
    let path = r.required::<String>("split", flag)?;
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: SplitManifest = serde_json::from_slice(&bytes)?;
    manifest.load_split()
}

#[derive(Serialize)]
struct RepresentationReport {
    backend: String,
    dim: usize,
    oov_policy: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    train: RepresentationStats,
    test: RepresentationStats,
}

#[derive(Serialize)]
struct LinearEvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    row: Option<String>,
    test_accuracy: f64,
    weight_decay: f64,
    epochs: usize,
    selection: Selection,
    train_size: usize,
    test_size: usize,
    representation: RepresentationReport,
    best: GridPoint,
    grid: Vec<GridPoint>,
}

fn linear_eval(mut r: Resolver, a: LinearEvalArgs) -> Result<()> {
    let data = load_split(&mut r, a.split)?;
    let train_texts: Vec<&str> = data.train.texts().collect();
    let test_texts: Vec<&str> = data.test.texts().collect();
    let all: Vec<&str> = train_texts.iter().chain(&test_texts).copied().collect();
    let backend = backend(&mut r, &a.backend, "tfidf", &["tfidf", "static", "bert"], &train_texts, &all)?;

    let defaults = TrainConfig::default();
    let base = TrainConfig {
        lr: r.with_default("lr", a.lr, defaults.lr)?,
        batch_size: r.with_default("batch_size", a.batch_size, defaults.batch_size)?,
        seed: r.with_default("seed", a.seed, defaults.seed)?,
        ..defaults
    };
    base.validate()?;
    let grid_default = Grid::default();
    let grid = Grid {
        weight_decays: r.with_default("weight_decays", a.weight_decays, List(grid_default.weight_decays))?.0,
        epochs: r.with_default("epochs", a.epochs, List(grid_default.epochs))?.0,
    };
    let selection = match r.with_default("selection", a.selection, "test".to_string())?.as_str() {
        "test" => {
            unused(&[("validation-fraction", a.validation_fraction.is_some())], "test selection")?;
            Selection::Test
        }
        "validation" => Selection::Validation {
            fraction: r.with_default("validation_fraction", a.validation_fraction, 0.1)?,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown selection {other:?}; expected test or validation"
            )))
        }
    };
    let row = r.optional::<String>("row", a.row, None)?;
    let out = r.required::<String>("out", a.out)?;
    let head_out = r.optional::<String>("head_out", a.head_out, None)?;

    let train_rep = backend.represent(&train_texts)?;
    let test_rep = backend.represent(&test_texts)?;
    let train_set = LabeledSet::new(train_rep.features, data.train.labels())?;
    let test_set = LabeledSet::new(test_rep.features, data.test.labels())?;
    let eval = linear_evaluate(&train_set, &test_set, &grid, &base, selection)?;
    let best = eval.best_point().clone();

    let note = match &backend {
        Backend::Tfidf(m) if m.dim() < m.config.max_features => Some(format!(
            "vocabulary has only {} terms, below max_features {}",
            m.dim(),
            m.config.max_features
        )),
        _ => None,
    };
    let report = LinearEvalReport {
        row,
        test_accuracy: best.metrics.test_accuracy,
        weight_decay: best.weight_decay,
        epochs: best.epochs,
        selection,
        train_size: train_set.len(),
        test_size: test_set.len(),
        representation: RepresentationReport {
            backend: backend.name().to_string(),
            dim: backend.dim(),
            oov_policy: OOV_POLICY,
            note,
            train: train_rep.stats,
            test: test_rep.stats,
        },
        best: best.clone(),
        grid: eval.points.clone(),
    };
    if let Some(path) = &head_out {
        let config = TrainConfig {
            weight_decay: best.weight_decay,
            epochs: best.epochs,
            ..base
        };
        HeadFile::new(&eval.best_head, Some(config), base.seed).save(path)?;
    }
    write_json(&out, &report)?;
    finish(r, &format!("{out}.manifest"))?;
    println!(
        "{} test accuracy {:.4} (weight decay {}, {} epochs)",
        backend.name(),
        best.metrics.test_accuracy,
        best.weight_decay,
        best.epochs
    );
    Ok(())
}

fn input_text(r: &mut Resolver, text: Option<String>, input: Option<String>) -> Result<String> {
    let text = r.optional::<String>("text", text, None)?;
    let input = r.optional::<String>("input", input, None)?;
    match (text, input) {
        (Some(t), None) => Ok(t),
        (None, Some(p)) => fs::read_to_string(&p).map_err(|e| Error::io(&p, e)),
        (Some(_), Some(_)) => Err(Error::InvalidArgument("give either --text or --input, not both".into())),
        (None, None) => Err(Error::InvalidArgument("missing required option --text or --input".into())),
    }
}

fn cam_cmd(mut r: Resolver, a: CamArgs) -> Result<()> {
    let head_path = r.required::<String>("head", a.head)?;
    let text = input_text(&mut r, a.text, a.input)?;
    let backend = backend(&mut r, &a.backend, "bert", &["bert", "static"], &[], &[text.as_str()])?;
    let fraction = r.with_default("fraction", a.fraction, 0.1)?;
    let format: RenderFormat = r
        .with_default("format", a.format, "ansi".to_string())?
        .parse()?;
    let class_arg = r.with_default("class", a.class, "predicted".to_string())?;
    let out = r.optional::<String>("out", a.out, None)?;

    let head_file = HeadFile::load(&head_path)?;
    if head_file.config.is_none() {
        return Err(Error::Format(format!(
            "{head_path} holds an untrained head; train one with `newslens linear-eval --head-out`"
        )));
    }
    let head = head_file.head()?;
    let class = match class_arg.as_str() {
        "predicted" => None,
        n => Some(
            n.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("--class must be predicted or an index, got {n:?}")))?,
        ),
    };
    let report = backend.explain(&head, &text, class, fraction)?;
    if let Some(path) = &out {
        write_json(path, &report)?;
        finish(r, &format!("{path}.manifest"))?;
    } else {
        r.finish()?;
    }
    println!("{}", render(&report.annotated(), format));
    Ok(())
}

fn pca_cmd(mut r: Resolver, a: PcaArgs) -> Result<()> {
    let data = load_split(&mut r, a.split)?;
    let train_texts: Vec<&str> = data.train.texts().collect();
    let test_texts: Vec<&str> = data.test.texts().collect();
    let backend = backend(&mut r, &a.backend, "bert", &["tfidf", "static", "bert"], &train_texts, &test_texts)?;
    let out = r.required::<String>("out", a.out)?;

    let rep = backend.represent(&test_texts)?;
    let model = pca_fit(&rep.features)?;
    let points = rep
        .features
        .iter()
        .map(|z| pca_project(&model, z))
        .collect::<Result<Vec<_>>>()?;
    write_text(&out, &projections_csv(&points, &data.test.labels())?)?;
    finish(r, &format!("{out}.manifest"))?;
    println!(
        "{} test points; eigenvalues {:.6e} {:.6e}",
        points.len(),
        model.eigenvalues[0],
        model.eigenvalues[1]
    );
    Ok(())
}

fn corr_cmd(mut r: Resolver, a: CorrArgs) -> Result<()> {
    let text = input_text(&mut r, a.text, a.input)?;
    let encoder = encoder_backend(&mut r, &a.encoder)?;
    let prefix = r.required::<String>("out_prefix", a.out_prefix)?;

    let static_view = encoder.static_view(&text)?;
    let contextual = encoder.token_view(&text)?;
    let rows = contextual.matrix.active_rows();
    let tokens: Vec<String> = contextual
        .matrix
        .active_indices()
        .map(|i| contextual.tokens.tokens[i].clone())
        .collect();
    debug_assert_eq!(tokens, static_view.tokens.tokens);
    let static_corr = correlation_matrix(&static_view.matrix.rows, &static_view.tokens.tokens)?;
    let contextual_corr = correlation_matrix(&rows, &tokens)?;
    write_text(&format!("{prefix}.static.csv"), &static_corr.to_csv()?)?;
    write_text(&format!("{prefix}.contextual.csv"), &contextual_corr.to_csv()?)?;
    finish(r, &format!("{prefix}.manifest"))?;
    println!("{} tokens", tokens.len());
    Ok(())
}

fn extract(mut r: Resolver, a: ExtractArgs) -> Result<()> {
    unused(&[("max-length", a.encoder.max_length.is_some())], "extract-word-embeddings")?;
    let encoder = encoder_backend(&mut r, &a.encoder)?;
    let out = r.required::<String>("out", a.out)?;
    let table = encoder.weights.word_embedding_table(&encoder.vocab)?;
    let order: Vec<String> = encoder.vocab.tokens().to_vec();
    table.write(&out, &order)?;
    finish(r, &format!("{out}.manifest"))?;
    println!("{} vectors of dimension {}", table.len(), table.dim());
    Ok(())
}
