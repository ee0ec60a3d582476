//! Command-line front end for the mrsynth toolkit.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use num_traits::ToPrimitive;

use mrsynth::{
    augment, binarize, build_report, enumerate_language, estimate_mle, load_dataset, load_grammar,
    parse_all, read_mr_corpus, sample_unique, store_grammar, uniform_weights, AnalyticsError,
    AugmentConfig, BacktranslatorSpec, DatasetError, DatasetFormat, EnumerateError,
    EstimationConfig, EstimationError, FilterSpec, GrammarError, Layout, PipelineError,
    ReportOptions, SampleConfig, SampleError, Severity, TreeCount, WeightSource,
    WeightedGrammarF64,
};

#[derive(Parser)]
#[command(
    name = "mrsynth",
    version,
    about = "Parse, estimate, sample, and augment meaning representations under a context-free grammar"
)]
struct Cli {
    /// Base RNG seed for sampling and shuffling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sampling (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Log verbosity: error, warn, info, debug, or trace.
    #[arg(long, global = true, default_value = "warn", value_parser = parse_log_level)]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

fn parse_log_level(s: &str) -> Result<log::LevelFilter, String> {
    log::LevelFilter::from_str(s)
        .map_err(|_| format!("unknown log level '{s}' (expected error, warn, info, debug, or trace)"))
}

fn parse_weight_source(s: &str) -> Result<WeightSource, String> {
    match s {
        "uniform" => Ok(WeightSource::Uniform),
        "grammar-file" => Ok(WeightSource::GrammarFile),
        _ => match s.strip_prefix("mle:") {
            Some(path) if !path.is_empty() => Ok(WeightSource::MleCorpus(PathBuf::from(path))),
            _ => Err(format!(
                "unknown weight source '{s}' (expected uniform, grammar-file, or mle:CORPUS)"
            )),
        },
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus of MRs and report tree counts per instance as JSONL.
    Parse(ParseArgs),
    /// Estimate rule weights from a corpus and write a weighted grammar.
    Estimate(EstimateArgs),
    /// Sample unique MRs from a weighted grammar as JSONL.
    Sample(SampleArgs),
    /// Enumerate the language of a grammar, one MR per line.
    Enumerate(EnumerateArgs),
    /// Compute the coverage report for a train/test split.
    Analyze(AnalyzeArgs),
    /// Run the full sample -> backtranslate -> assemble pipeline.
    Augment(AugmentArgs),
}

#[derive(Args)]
struct ParseArgs {
    /// Grammar file.
    #[arg(long)]
    grammar: PathBuf,
    /// MR corpus: one MR per line, or the MR field of a .tsv/.jsonl dataset.
    #[arg(long)]
    corpus: PathBuf,
    /// Include the first parse tree of each instance as an s-expression.
    #[arg(long)]
    show_tree: bool,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// MR corpus the weights are estimated from.
    #[arg(long)]
    corpus: PathBuf,
    /// Estimation mode.
    #[arg(long, default_value = "mle", value_parser = ["mle", "uniform"])]
    mode: String,
    /// Add-lambda smoothing; 0 keeps unobserved rules at weight 0.
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
    /// Skip instances with too many parses instead of failing.
    #[arg(long)]
    skip_over_cap: bool,
    /// Where to write the weighted grammar.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Number of unique MRs to sample.
    #[arg(long)]
    count: usize,
    /// Reject derivations deeper than this.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Reject MRs longer than this many tokens.
    #[arg(long)]
    max_len: Option<usize>,
    /// Corpus of MRs that must not be sampled (e.g. the training set).
    #[arg(long)]
    exclude: Option<PathBuf>,
    /// Filter such as 'max-depth-of(NP, 3)' or 'must-contain(tok)'.
    #[arg(long, value_parser = parse_filter)]
    filter: Option<FilterSpec>,
    /// Total attempt budget (default: 100 per requested sample).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_filter(s: &str) -> Result<FilterSpec, String> {
    FilterSpec::parse(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Length bound; required for recursive grammars.
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Training dataset (.tsv or .jsonl).
    #[arg(long)]
    train: PathBuf,
    /// Test dataset (.tsv or .jsonl).
    #[arg(long)]
    test: PathBuf,
    /// Augmented dataset to report as a second train row.
    #[arg(long)]
    augmented: Option<PathBuf>,
    /// N-gram orders to report (repeatable; default: 2).
    #[arg(long = "ngram")]
    ngram: Vec<usize>,
    /// Nonterminals to histogram by nesting depth (repeatable).
    #[arg(long = "depth-target")]
    depth_target: Vec<String>,
    /// Where to write the JSON report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    grammar: PathBuf,
    /// Original training dataset (.tsv or .jsonl).
    #[arg(long)]
    original: PathBuf,
    /// Number of unique synthetic MRs to sample.
    #[arg(long)]
    count: usize,
    /// Sampling weights: uniform, grammar-file, or mle:CORPUS.
    #[arg(long, default_value = "uniform", value_parser = parse_weight_source)]
    weights: WeightSource,
    /// Backtranslator: echo, table:PATH, command:CMDLINE, or an http(s) URL.
    #[arg(long, default_value = "echo", value_parser = parse_backtranslator)]
    backtranslator: BacktranslatorSpec,
    /// MRs per backtranslation request.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Backtranslation timeout in seconds.
    #[arg(long)]
    timeout_secs: Option<u64>,
    /// Dataset layout.
    #[arg(long, default_value = "concat", value_parser = Layout::from_str)]
    layout: Layout,
    /// Output directory for the emitted files and manifest.
    #[arg(long)]
    out_dir: PathBuf,
    /// Format of the emitted dataset files.
    #[arg(long, default_value = "tsv", value_parser = DatasetFormat::from_str)]
    out_format: DatasetFormat,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Corpus of MRs that must not be sampled.
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long, value_parser = parse_filter)]
    filter: Option<FilterSpec>,
    #[arg(long)]
    budget: Option<u64>,
    /// Add-lambda smoothing for mle weights.
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
}

fn parse_backtranslator(s: &str) -> Result<BacktranslatorSpec, String> {
    BacktranslatorSpec::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_BACKTRANSLATOR: i32 = 3;

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(PipelineError::Backtranslate(_)) => EXIT_BACKTRANSLATOR,
            _ => EXIT_DATA,
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            log::warn!("could not configure {} worker threads: {e}", cli.jobs);
        }
    }
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Parse(args) => cmd_parse(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Sample(args) => cmd_sample(args, cli.seed),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Augment(args) => cmd_augment(args, cli.seed),
    }
}

/// Loads a grammar and logs any validation warnings.
fn load_checked(path: &Path) -> Result<WeightedGrammarF64, CliError> {
    let wg = load_grammar::<f64>(path)?;
    for diagnostic in wg.validate() {
        match diagnostic.severity {
            Severity::Error => log::error!("{}: {}", path.display(), diagnostic.message),
            Severity::Warning => log::warn!("{}: {}", path.display(), diagnostic.message),
        }
    }
    Ok(wg)
}

/// Writes lines to the given file, or to standard output when absent.
fn emit_lines(out: Option<&Path>, lines: &[String]) -> Result<(), CliError> {
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    match out {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn cmd_parse(args: ParseArgs) -> Result<(), CliError> {
    let wg = load_checked(&args.grammar)?;
    let bin = binarize(wg.grammar())?;
    let corpus = read_mr_corpus(&args.corpus)?;
    let mut lines = Vec::with_capacity(corpus.len());
    let mut unparseable = 0usize;
    for instance in &corpus {
        let forest = parse_all(&bin, instance);
        let count = forest.count();
        if !forest.is_parseable() {
            unparseable += 1;
        }
        let mut record = serde_json::json!({
            "mr": instance.join(" "),
            "trees": count.lower_bound(),
            "exact": matches!(count, TreeCount::Exact(_)),
        });
        if args.show_tree {
            record["tree"] = match forest.first_tree() {
                Some(tree) => serde_json::Value::String(tree.render(wg.grammar())),
                None => serde_json::Value::Null,
            };
        }
        lines.push(record.to_string());
    }
    emit_lines(args.out.as_deref(), &lines)?;
    eprintln!(
        "parsed {} instances, {} unparseable",
        corpus.len(),
        unparseable
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let wg = load_checked(&args.grammar)?;
    let corpus = read_mr_corpus(&args.corpus)?;
    let estimated: WeightedGrammarF64 = match args.mode.as_str() {
        "uniform" => uniform_weights(wg.grammar()),
        _ => {
            let config = EstimationConfig {
                smoothing: args.smoothing,
                skip_over_cap: args.skip_over_cap,
                ..EstimationConfig::default()
            };
            let (estimated, report) = estimate_mle(wg.grammar(), &corpus, &config)?;
            eprintln!(
                "estimated from {} instances ({} unparseable skipped, {} over cap)",
                report.counted, report.skipped_unparseable, report.skipped_over_cap
            );
            for nt in &report.fallback_nonterminals {
                log::warn!("nonterminal {nt} unobserved in the corpus; weights left uniform");
            }
            estimated
        }
    };
    store_grammar(&estimated, &args.out)?;
    Ok(())
}

fn cmd_sample(args: SampleArgs, seed: u64) -> Result<(), CliError> {
    let wg = load_checked(&args.grammar)?;
    let mut config = SampleConfig::new(args.count);
    config.seed = seed;
    if let Some(depth) = args.max_depth {
        config.max_depth = depth;
    }
    if let Some(len) = args.max_len {
        config.max_len = len;
    }
    config.budget = args.budget.or(config.budget);
    config.filter = args.filter;
    if let Some(exclude) = &args.exclude {
        config.exclude = read_mr_corpus(exclude)?.into_iter().collect::<HashSet<_>>();
    }
    let (samples, stats) = sample_unique(&wg, &config)?;
    let lines: Vec<String> = samples
        .iter()
        .map(|s| {
            serde_json::json!({
                "mr": s.tokens.join(" "),
                "logprob": s.logprob.to_f64(),
                "depth": s.depths,
            })
            .to_string()
        })
        .collect();
    emit_lines(args.out.as_deref(), &lines)?;
    eprintln!(
        "{}",
        serde_json::to_string(&stats).expect("stats serialization")
    );
    Ok(())
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<(), CliError> {
    let wg = load_checked(&args.grammar)?;
    let language = enumerate_language(wg.grammar(), args.max_len)?;
    let lines: Vec<String> = language.strings.iter().map(|s| s.join(" ")).collect();
    emit_lines(args.out.as_deref(), &lines)?;
    eprintln!(
        "{} strings (finite: {}, complete: {}, language size: {})",
        language.strings.len(),
        language.finite,
        language.complete,
        language
            .language_size
            .map(|n| n.to_string())
            .unwrap_or_else(|| "unknown".to_string()),
    );
    Ok(())
}

fn dataset_format(path: &Path) -> Result<DatasetFormat, CliError> {
    DatasetFormat::infer(path).ok_or_else(|| {
        CliError::Usage(format!(
            "cannot infer dataset format of {} (expected a .tsv or .jsonl extension)",
            path.display()
        ))
    })
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let wg = load_checked(&args.grammar)?;
    let train = load_dataset(&args.train, dataset_format(&args.train)?)?;
    let test = load_dataset(&args.test, dataset_format(&args.test)?)?;
    let augmented = args
        .augmented
        .as_deref()
        .map(|path| Ok::<_, CliError>(load_dataset(path, dataset_format(path)?)?))
        .transpose()?;
    let mut options = ReportOptions {
        depth_targets: args.depth_target,
        ..ReportOptions::default()
    };
    if !args.ngram.is_empty() {
        options.ngram_orders = args.ngram;
    }
    let report = build_report(wg.grammar(), &train, &test, augmented.as_ref(), &options)?;
    let mut json = serde_json::to_vec_pretty(&report).expect("report serialization");
    json.push(b'\n');
    fs::write(&args.out, json).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    print!("{}", report.to_table());
    Ok(())
}

fn cmd_augment(args: AugmentArgs, seed: u64) -> Result<(), CliError> {
    let mut sample = SampleConfig::new(args.count);
    sample.seed = seed;
    if let Some(depth) = args.max_depth {
        sample.max_depth = depth;
    }
    if let Some(len) = args.max_len {
        sample.max_len = len;
    }
    sample.budget = args.budget.or(sample.budget);
    sample.filter = args.filter;
    if let Some(exclude) = &args.exclude {
        sample.exclude = read_mr_corpus(exclude)?.into_iter().collect::<HashSet<_>>();
    }
    let mut backtranslator = args.backtranslator;
    if let Some(batch) = args.batch_size {
        backtranslator.batch_size = batch;
    }
    if let Some(secs) = args.timeout_secs {
        backtranslator.timeout = Duration::from_secs(secs);
    }
    let config = AugmentConfig {
        grammar_path: args.grammar,
        weights: args.weights,
        sample,
        backtranslator,
        layout: args.layout,
        original_format: dataset_format(&args.original)?,
        original_path: args.original,
        out_dir: args.out_dir,
        out_format: args.out_format,
        estimation: EstimationConfig {
            smoothing: args.smoothing,
            ..EstimationConfig::default()
        },
    };
    let outcome = augment(&config)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.manifest).expect("manifest serialization")
    );
    for path in &outcome.written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
