//! End-to-end augmentation: sample MRs, backtranslate them, and assemble
//! augmented datasets with a reproducible run manifest.

mod backtranslate;
mod dataset;

pub use backtranslate::{
    backtranslate, BacktranslateError, BacktranslatorKind, BacktranslatorSpec,
};
pub use dataset::{
    load_dataset, write_dataset, DatasetError, DatasetFormat, Origin, ParallelDataset, Record,
};
pub(crate) use dataset::write_atomic;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{detokenize, read_corpus, TokenSeq};
use crate::estimation::{estimate_mle, uniform_weights, EstimationConfig, EstimationError};
use crate::grammar::{parse_grammar, GrammarError, WeightedGrammar};
use crate::sampler::{sample_unique, SampleConfig, SampleError, SampleStats};

/// RNG stream reserved for the assembly shuffle, distinct from the
/// per-attempt streams used by the sampler.
const SHUFFLE_STREAM: u64 = u64::MAX;

/// How synthetic data is combined with the original training data.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Layout {
    /// One file: original and synthetic records shuffled together.
    Concat,
    /// Two files: a synthetic-only pretraining stage and an original-only
    /// fine-tuning stage.
    Pretrain,
}

impl Layout {
    pub fn as_str(&self) -> &'static str {
        match self {
            Layout::Concat => "concat",
            Layout::Pretrain => "pretrain",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concat" => Ok(Layout::Concat),
            "pretrain" => Ok(Layout::Pretrain),
            _ => Err(format!("unknown layout '{s}' (expected concat or pretrain)")),
        }
    }
}

/// The dataset files produced by [`assemble`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum AssembledDatasets {
    Concat { combined: ParallelDataset },
    Pretrain {
        pretrain: ParallelDataset,
        finetune: ParallelDataset,
    },
}

impl AssembledDatasets {
    /// File stem and contents of each dataset this layout emits.
    pub fn files(&self) -> Vec<(&'static str, &ParallelDataset)> {
        match self {
            AssembledDatasets::Concat { combined } => vec![("train_augmented", combined)],
            AssembledDatasets::Pretrain { pretrain, finetune } => {
                vec![("pretrain", pretrain), ("finetune", finetune)]
            }
        }
    }
}

/// Combines original and synthetic records according to the layout. The
/// concat layout shuffles the union with a seeded RNG so original and
/// synthetic records interleave; the pretrain layout keeps both stages in
/// their input order.
pub fn assemble(
    original: &ParallelDataset,
    synthetic: &ParallelDataset,
    layout: Layout,
    seed: u64,
) -> AssembledDatasets {
    match layout {
        Layout::Concat => {
            let mut records = original.records.clone();
            records.extend(synthetic.records.iter().cloned());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SHUFFLE_STREAM);
            records.shuffle(&mut rng);
            AssembledDatasets::Concat {
                combined: ParallelDataset { records },
            }
        }
        Layout::Pretrain => AssembledDatasets::Pretrain {
            pretrain: synthetic.clone(),
            finetune: original.clone(),
        },
    }
}

/// Where the sampling weights come from.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum WeightSource {
    /// Maximum-likelihood estimation from the MR side of a corpus file
    /// (a plain MR-per-line file or a tsv/jsonl dataset).
    MleCorpus(PathBuf),
    /// Uniform weights over each left-hand side's rules.
    Uniform,
    /// The weight annotations in the grammar file itself.
    GrammarFile,
}

impl WeightSource {
    pub fn mode_name(&self) -> &'static str {
        match self {
            WeightSource::MleCorpus(_) => "mle-corpus",
            WeightSource::Uniform => "uniform",
            WeightSource::GrammarFile => "weighted-grammar-file",
        }
    }
}

/// Everything an [`augment`] run needs.
#[derive(Clone, Debug)]
pub struct AugmentConfig {
    pub grammar_path: PathBuf,
    pub weights: WeightSource,
    pub sample: SampleConfig,
    pub backtranslator: BacktranslatorSpec,
    pub layout: Layout,
    pub original_path: PathBuf,
    pub original_format: DatasetFormat,
    pub out_dir: PathBuf,
    pub out_format: DatasetFormat,
    /// Estimation options used when `weights` is [`WeightSource::MleCorpus`].
    pub estimation: EstimationConfig,
}

/// Record of one augmentation run; written as `manifest.json` and sufficient
/// to reproduce the run byte for byte.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub grammar_sha256: String,
    pub weights_mode: String,
    pub corpus_paths: Vec<PathBuf>,
    pub seed: u64,
    pub requested: u64,
    pub returned: u64,
    pub rejected_by_reason: BTreeMap<String, u64>,
    /// Estimation-corpus instances skipped because they did not parse.
    pub skipped_unparseable: u64,
    pub layout: String,
    pub version: String,
}

#[derive(Clone, Debug)]
pub struct AugmentOutcome {
    pub manifest: RunManifest,
    /// Every file the run wrote, including the manifest.
    pub written: Vec<PathBuf>,
    pub stats: SampleStats,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Backtranslate(#[from] BacktranslateError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("grammar file {path} is not valid UTF-8")]
    GrammarEncoding { path: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the MR side of a corpus file: tsv/jsonl files are parsed as
/// parallel datasets, anything else as one whitespace-tokenized MR per line.
pub fn read_mr_corpus(path: &Path) -> Result<Vec<TokenSeq>, PipelineError> {
    match DatasetFormat::infer(path) {
        Some(format) => Ok(load_dataset(path, format)?.mr_corpus()),
        None => read_corpus(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs the full augmentation flow: load the grammar, derive sampling
/// weights, sample unique MRs, backtranslate them, assemble the layout, and
/// write the dataset files plus `manifest.json` into the output directory.
/// All writes are atomic and happen only after every stage has succeeded.
pub fn augment(config: &AugmentConfig) -> Result<AugmentOutcome, PipelineError> {
    let grammar_bytes = fs::read(&config.grammar_path).map_err(io_err(&config.grammar_path))?;
    let grammar_sha256 = sha256_hex(&grammar_bytes);
    let grammar_text =
        String::from_utf8(grammar_bytes).map_err(|_| PipelineError::GrammarEncoding {
            path: config.grammar_path.clone(),
        })?;
    let file_weights = parse_grammar::<f64>(&grammar_text)?;

    let mut corpus_paths = vec![config.original_path.clone()];
    let mut skipped_unparseable = 0;
    let weighted: WeightedGrammar<f64> = match &config.weights {
        WeightSource::GrammarFile => file_weights,
        WeightSource::Uniform => uniform_weights(file_weights.grammar()),
        WeightSource::MleCorpus(corpus_path) => {
            let corpus = read_mr_corpus(corpus_path)?;
            let (wg, report) =
                estimate_mle(file_weights.grammar(), &corpus, &config.estimation)?;
            skipped_unparseable = report.skipped_unparseable as u64;
            if corpus_path != &config.original_path {
                corpus_paths.push(corpus_path.clone());
            }
            wg
        }
    };

    let (samples, stats) = sample_unique(&weighted, &config.sample)?;
    let mrs: Vec<String> = samples.iter().map(|s| detokenize(&s.tokens)).collect();
    let sentences = backtranslate(&mrs, &config.backtranslator)?;
    let synthetic = ParallelDataset {
        records: sentences
            .into_iter()
            .zip(&mrs)
            .map(|(sentence, mr)| Record {
                sentence,
                mr: mr.clone(),
                origin: Origin::Synthetic,
            })
            .collect(),
    };

    let original = load_dataset(&config.original_path, config.original_format)?;
    let assembled = assemble(&original, &synthetic, config.layout, config.sample.seed);

    let manifest = RunManifest {
        grammar_sha256,
        weights_mode: config.weights.mode_name().to_string(),
        corpus_paths,
        seed: config.sample.seed,
        requested: stats.requested as u64,
        returned: stats.returned as u64,
        rejected_by_reason: stats.rejected_by_reason(),
        skipped_unparseable,
        layout: config.layout.as_str().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };

    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let mut written = Vec::new();
    let ext = config.out_format.extension();
    let synthetic_path = config.out_dir.join(format!("synthetic.{ext}"));
    write_dataset(&synthetic_path, &synthetic, config.out_format)?;
    written.push(synthetic_path);
    for (stem, dataset) in assembled.files() {
        let path = config.out_dir.join(format!("{stem}.{ext}"));
        write_dataset(&path, dataset, config.out_format)?;
        written.push(path);
    }
    let manifest_path = config.out_dir.join("manifest.json");
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serialization");
    manifest_bytes.push(b'\n');
    write_atomic(&manifest_path, &manifest_bytes)?;
    written.push(manifest_path);

    Ok(AugmentOutcome {
        manifest,
        written,
        stats,
    })
}
