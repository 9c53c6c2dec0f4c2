//! `drugmatch` command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! input-data errors. Diagnostics go to stderr.

mod config;
mod output;

use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use drugmatch::bayes::{self, NBModel};
use drugmatch::correction::{self, run_pipeline};
use drugmatch::druginfo::{build_index, query, records_of};
use drugmatch::fuzzy::dedup_manufacturers;
use drugmatch::matcher::{evaluate, predict_batch, MatcherConfig, Metrics};
use drugmatch::records::{load_dataset, write_dataset, Dataset};
use drugmatch::synth::{self, GeneratorConfig};
use drugmatch::textnorm::{BrandLexicon, TokenMode};
use rust_decimal::Decimal;

use crate::config::FileConfig;

#[derive(Parser)]
#[command(
    name = "drugmatch",
    version,
    about = "Drug-product matching and approval-number correction"
)]
struct Cli {
    /// JSON file providing defaults for any flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Brand lexicon, one brand per line
    #[arg(long, global = true)]
    brands: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Predict match labels for every pair
    Match(MatchArgs),
    /// Fit the drug-type classifier on names labelled by approval letter
    Train(TrainArgs),
    /// Classify one drug name
    Classify(ClassifyArgs),
    /// Match, then check and correct approval numbers on matched pairs
    Correct(CorrectArgs),
    /// Popularity and manufacturers of a drug
    Query(QueryArgs),
    /// Group near-duplicate manufacturer names
    Dedup(DedupArgs),
    /// Parse dosage strings from stdin, one per line
    ParseDosage,
    /// Write a synthetic labelled corpus
    Gen(GenArgs),
}

#[derive(Args)]
struct MatcherFlags {
    /// Minimum cleaned-name similarity (0-100) for a match
    #[arg(long)]
    name_threshold: Option<u8>,
    /// Match on name alone when neither strength nor package can be compared
    #[arg(long)]
    allow_name_only: bool,
    /// Relative tolerance for strength equality
    #[arg(long)]
    strength_tol: Option<Decimal>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    matcher: MatcherFlags,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RecordFormat::Csv)]
    format: RecordFormat,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    token_mode: Option<TokenMode>,
    /// Most frequent tokens to list per class
    #[arg(long)]
    top_tokens: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    name: String,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct CorrectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    min_confidence: Option<f64>,
    #[command(flatten)]
    matcher: MatcherFlags,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    name: String,
    /// Manufacturer merge threshold; pairs must score strictly above it
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct DedupArgs {
    /// Manufacturer names, one per line
    #[arg(long)]
    manufacturers: PathBuf,
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    /// Planted-flip truth file [default: <out>.truth.csv]
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    n_pairs: Option<usize>,
    #[arg(long)]
    match_fraction: Option<f64>,
    #[arg(long)]
    znz_flip_fraction: Option<f64>,
    #[arg(long)]
    digit_flip_fraction: Option<f64>,
    #[arg(long)]
    name_overlap: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_unit_rescale: bool,
    #[arg(long)]
    no_package_refactor: bool,
    #[arg(long)]
    no_brand_prefix: bool,
    #[arg(long)]
    no_symbol_noise: bool,
    #[arg(long)]
    no_dosage_drop: bool,
    #[arg(long)]
    no_manufacturer_noise: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RecordFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    #[value(alias = "table")]
    Text,
    Json,
}

/// Error tagged with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

trait FailWith<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> FailWith<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 1,
            error: e.into(),
        })
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: 2,
            error: e.into(),
        })
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

struct Env {
    file: FileConfig,
    lexicon: BrandLexicon,
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).usage()?,
        None => FileConfig::default(),
    };
    let lexicon = match cli.brands.as_ref().or(file.brands.as_ref()) {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading brand lexicon {}", path.display()))
                .data()?;
            BrandLexicon::parse(&text)
        }
        None => BrandLexicon::default(),
    };
    let ctx = Env { file, lexicon };
    match cli.command {
        Command::Match(args) => cmd_match(&ctx, args),
        Command::Train(args) => cmd_train(&ctx, args),
        Command::Classify(args) => cmd_classify(&ctx, args),
        Command::Correct(args) => cmd_correct(&ctx, args),
        Command::Query(args) => cmd_query(&ctx, args),
        Command::Dedup(args) => cmd_dedup(&ctx, args),
        Command::ParseDosage => cmd_parse_dosage(),
        Command::Gen(args) => cmd_gen(&ctx, args),
    }
}

fn matcher_config(file: &FileConfig, flags: &MatcherFlags) -> Result<MatcherConfig, Failure> {
    let defaults = MatcherConfig::default();
    let cfg = MatcherConfig {
        name_threshold: flags
            .name_threshold
            .or(file.name_threshold)
            .unwrap_or(defaults.name_threshold),
        require_quantity_evidence: if flags.allow_name_only {
            false
        } else {
            file.require_quantity_evidence
                .unwrap_or(defaults.require_quantity_evidence)
        },
        strength_rel_tol: flags
            .strength_tol
            .or(file.strength_rel_tol)
            .unwrap_or(defaults.strength_rel_tol),
    };
    cfg.validate().usage()?;
    Ok(cfg)
}

fn check_threshold(t: u8) -> Result<u8, Failure> {
    if t > 100 {
        return Err(anyhow!("threshold {t} is outside 0..=100")).usage();
    }
    Ok(t)
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let file = File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .data()?;
    let dataset = load_dataset(io::BufReader::new(file))
        .with_context(|| format!("loading {}", path.display()))
        .data()?;
    for bad in &dataset.rejected {
        eprintln!("warning: {}: rejected {bad}", path.display());
    }
    Ok(dataset)
}

fn read_model(path: &Path) -> Result<NBModel, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading model {}", path.display()))
        .data()?;
    NBModel::from_json(&text)
        .with_context(|| format!("loading model {}", path.display()))
        .data()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .data()?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_match(ctx: &Env, args: MatchArgs) -> CmdResult {
    let cfg = matcher_config(&ctx.file, &args.matcher)?;
    let dataset = read_dataset(&args.input)?;
    let decisions = predict_batch(&dataset.pairs, &cfg, &ctx.lexicon);

    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        RecordFormat::Csv => output::write_decisions_csv(&mut out, &dataset.pairs, &decisions),
        RecordFormat::Json => output::write_decisions_json(&mut out, &dataset.pairs, &decisions),
    }
    .data()?;
    out.flush().data()?;
    drop(out);

    let (pred, gold): (Vec<_>, Vec<_>) = dataset
        .pairs
        .iter()
        .zip(&decisions)
        .filter_map(|(p, d)| p.gold_label.map(|g| (d.label, g)))
        .unzip();
    if !gold.is_empty() {
        let metrics = evaluate(&pred, &gold).data()?;
        let block = output::metrics_block("match", &metrics);
        if args.output.is_some() {
            print!("{block}");
        } else {
            eprint!("{block}");
        }
    }
    Ok(())
}

fn cmd_train(ctx: &Env, args: TrainArgs) -> CmdResult {
    let f = &ctx.file;
    let alpha = args.alpha.or(f.alpha).unwrap_or(1.0);
    let test_fraction = args.test_fraction.or(f.test_fraction).unwrap_or(0.1);
    let seed = args.seed.or(f.seed).unwrap_or(0);
    let mode = args.token_mode.or(f.token_mode).unwrap_or_default();
    let top_k = args.top_tokens.or(f.top_tokens).unwrap_or(10);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(anyhow!("--alpha must be positive")).usage();
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(anyhow!("--test-fraction must lie strictly between 0 and 1")).usage();
    }

    let dataset = read_dataset(&args.input)?;
    let data = bayes::derive_training_labels(&dataset.pairs, &ctx.lexicon, mode);
    let (train, test) = bayes::train_test_split(&data, test_fraction, seed).data()?;
    let vocab = bayes::build_vocabulary(&train).data()?;
    let model = bayes::fit(&train, vocab, alpha).data()?.with_token_mode(mode);

    let metrics = Metrics::from_outcomes(test.iter().map(|d| {
        let p = model.predict(&d.tokens).drug_type;
        (
            p == drugmatch::DrugType::TraditionalChinese,
            d.klass == drugmatch::DrugType::TraditionalChinese,
        )
    }));
    let json = model.to_json().data()?;
    std::fs::write(&args.model, json + "\n")
        .with_context(|| format!("writing model {}", args.model.display()))
        .data()?;

    let report = output::TrainReport {
        documents: data.len(),
        train: train.len(),
        test: test.len(),
        vocabulary: model.vocabulary().size(),
        metrics,
        top_tokens: bayes::top_tokens(&data, top_k),
    };
    let mut out = open_output(None)?;
    match args.format {
        ReportFormat::Text => output::write_train_text(&mut out, &report),
        ReportFormat::Json => output::write_json_line(&mut out, &report.to_json()),
    }
    .data()?;
    out.flush().data()
}

fn cmd_classify(ctx: &Env, args: ClassifyArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    let prediction = model
        .predict_name(&args.name, &ctx.lexicon)
        .ok_or_else(|| anyhow!("name {:?} is empty after cleaning", args.name))
        .data()?;
    let mut out = open_output(None)?;
    match args.format {
        ReportFormat::Text => {
            writeln!(out, "{}\t{:.6}", prediction.drug_type, prediction.confidence()).map_err(Into::into)
        }
        ReportFormat::Json => output::write_json_line(&mut out, &output::classification_json(&args.name, &prediction)),
    }
    .data()?;
    out.flush().data()
}

fn cmd_correct(ctx: &Env, args: CorrectArgs) -> CmdResult {
    let cfg = matcher_config(&ctx.file, &args.matcher)?;
    let min_confidence = args
        .min_confidence
        .or(ctx.file.min_confidence)
        .unwrap_or(correction::DEFAULT_MIN_CONFIDENCE);
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(anyhow!("--min-confidence must lie in [0, 1]")).usage();
    }
    let model = read_model(&args.model)?;
    let dataset = read_dataset(&args.input)?;
    let report = run_pipeline(&dataset.pairs, &cfg, &model, &ctx.lexicon, min_confidence);
    let mut out = open_output(args.output.as_deref())?;
    output::write_correction_report(&mut out, &dataset.pairs, &report).data()?;
    out.flush().data()
}

fn cmd_query(ctx: &Env, args: QueryArgs) -> CmdResult {
    let threshold = check_threshold(args.threshold.or(ctx.file.threshold).unwrap_or(90))?;
    let dataset = read_dataset(&args.input)?;
    let index = build_index(&records_of(&dataset.pairs), threshold, &ctx.lexicon);
    let report = query(&index, &args.name, &ctx.lexicon);
    let mut out = open_output(None)?;
    match args.format {
        ReportFormat::Text => output::write_info_text(&mut out, &report),
        ReportFormat::Json => output::write_json_line(&mut out, &output::info_json(&report)),
    }
    .data()?;
    out.flush().data()
}

fn cmd_dedup(ctx: &Env, args: DedupArgs) -> CmdResult {
    let threshold = check_threshold(args.threshold.or(ctx.file.threshold).unwrap_or(90))?;
    let text = std::fs::read_to_string(&args.manufacturers)
        .with_context(|| format!("reading {}", args.manufacturers.display()))
        .data()?;
    let names = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let clusters = dedup_manufacturers(names, threshold);
    let mut out = open_output(None)?;
    match args.format {
        ReportFormat::Text => output::write_dedup_text(&mut out, &clusters),
        ReportFormat::Json => output::write_json_line(&mut out, &output::dedup_json(&clusters)),
    }
    .data()?;
    out.flush().data()
}

fn cmd_parse_dosage() -> CmdResult {
    let mut out = open_output(None)?;
    for line in io::stdin().lock().lines() {
        let line = line.context("reading stdin").data()?;
        let line = line.trim_end_matches('\r');
        output::write_json_line(&mut out, &output::dosage_json(line)).data()?;
    }
    out.flush().data()
}

fn cmd_gen(ctx: &Env, args: GenArgs) -> CmdResult {
    let base = ctx.file.generator.clone().unwrap_or_default();
    let cfg = GeneratorConfig {
        n_pairs: args.n_pairs.unwrap_or(base.n_pairs),
        match_fraction: args.match_fraction.unwrap_or(base.match_fraction),
        unit_rescale: base.unit_rescale && !args.no_unit_rescale,
        package_refactor: base.package_refactor && !args.no_package_refactor,
        brand_prefix: base.brand_prefix && !args.no_brand_prefix,
        symbol_noise: base.symbol_noise && !args.no_symbol_noise,
        dosage_drop: base.dosage_drop && !args.no_dosage_drop,
        manufacturer_noise: base.manufacturer_noise && !args.no_manufacturer_noise,
        znz_flip_fraction: args.znz_flip_fraction.unwrap_or(base.znz_flip_fraction),
        digit_flip_fraction: args.digit_flip_fraction.unwrap_or(base.digit_flip_fraction),
        name_overlap: args.name_overlap.unwrap_or(base.name_overlap),
        seed: args.seed.or(ctx.file.seed).unwrap_or(base.seed),
    };
    let corpus = synth::generate(&cfg).usage()?;

    let truth_path = args.truth.unwrap_or_else(|| {
        let mut name = args.out.clone().into_os_string();
        name.push(".truth.csv");
        PathBuf::from(name)
    });
    let out = open_output(Some(&args.out))?;
    write_dataset(out, &corpus.pairs).data()?;
    let truth = open_output(Some(&truth_path))?;
    synth::write_truth(truth, &corpus.planted).data()?;
    eprintln!(
        "wrote {} pairs to {} and {} planted flips to {}",
        corpus.pairs.len(),
        args.out.display(),
        corpus.planted.len(),
        truth_path.display()
    );
    Ok(())
}
