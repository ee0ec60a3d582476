//! Grammar-based synthesis of meaning representations.
//!
//! This crate parses meaning representations (MRs) under a context-free
//! grammar, estimates rule weights from a corpus, samples fresh unique MRs
//! from the weighted grammar, and assembles augmented parallel datasets by
//! pairing sampled MRs with backtranslated sentences. Around that core it
//! provides corpus diagnostics: n-gram, instance, and structure coverage,
//! depth histograms, and grammar-based perplexity.
//!
//! Everything weight-valued is generic over the scalar type via [`Weight`],
//! instantiable at `f64` (the default everywhere) or `f32`; the
//! [`WeightedGrammarF64`]-style aliases at the crate root pick the scalar for
//! you. Grammars, parse forests, and trees are plain immutable data and can
//! be shared freely across threads.

pub mod analytics;
pub mod chart;
pub mod corpus;
pub mod estimation;
pub mod grammar;
pub mod num;
pub mod pipeline;
pub mod sampler;

pub use chart::{
    count_rules, local_structures, parse_all, parse_all_capped, tree_depth, ChartError,
    CountError, ParseForest, ParseTree, RuleCountTable, StructureKey, TreeCount,
    DEFAULT_TREE_CAP,
};
pub use grammar::{
    binarize, load_grammar, parse_grammar, render_grammar, store_grammar, BinarizedGrammar,
    Diagnostic, Grammar, GrammarError, NonterminalId, Rule, RuleId, RuleOrigin, Severity, Sym,
    Symbol, SymbolKind, TerminalId, WeightedGrammar,
};
pub use num::Weight;

pub use estimation::{
    compare_distributions, estimate_mle, uniform_weights, DistributionComparison,
    EstimationConfig, EstimationError, EstimationReport, WeightDelta,
};
pub use sampler::{
    enumerate_language, sample_one, sample_unique, sample_unique_with, EnumeratedLanguage,
    EnumerateError, FilterRegistry, FilterSpec, MrSample, Rejection, SampleConfig, SampleError,
    SampleOutcome, SampleStats,
};

pub use analytics::{
    build_report, depth_histogram, instance_coverage, mr_perplexity, ngram_coverage,
    structure_coverage, AnalysisReport, AnalyticsError, DepthHistogram, PerplexityReport,
    ReportOptions, ReportRow, SideStats, StructureCoverage,
};
pub use pipeline::{
    assemble, augment, backtranslate, load_dataset, read_mr_corpus, write_dataset,
    AssembledDatasets, AugmentConfig, AugmentOutcome, BacktranslateError, BacktranslatorKind,
    BacktranslatorSpec, DatasetError, DatasetFormat, Layout, Origin, ParallelDataset,
    PipelineError, Record, RunManifest, WeightSource,
};

/// Weighted grammar over `f64`, the default scalar.
pub type WeightedGrammarF64 = WeightedGrammar<f64>;
/// Weighted grammar over `f32` for memory-constrained settings.
pub type WeightedGrammarF32 = WeightedGrammar<f32>;
/// Fractional rule counts over `f64`.
pub type RuleCountTableF64 = RuleCountTable<f64>;
/// A sampled meaning representation with `f64` log probability.
pub type MrSampleF64 = MrSample<f64>;
/// Perplexity summary over `f64`.
pub type PerplexityReportF64 = PerplexityReport<f64>;

/// Grammar files bundled with the crate, usable directly with
/// [`parse_grammar`] or written to disk for the command-line tools.
pub mod bundled {
    /// Toy geographical-query grammar: `answer ( ... )` expressions over
    /// cities, states, and places.
    pub const GEOQUERY_FRAGMENT: &str = include_str!("../grammars/geoquery_fragment.gr");
    /// Full grammar of compositional navigation-command action sequences.
    pub const SCAN_ACTIONS: &str = include_str!("../grammars/scan_actions.gr");
    /// Right-recursive toy grammar `S -> 'a' S | 'b'`.
    pub const TOY_RIGHT_RECURSIVE: &str = include_str!("../grammars/toy_right_recursive.gr");
    /// Maximally ambiguous toy grammar `S -> S S | 'x'`.
    pub const TOY_AMBIGUOUS: &str = include_str!("../grammars/toy_ambiguous.gr");
    /// Toy grammar mixing unit chains, long rules, and three terminals.
    pub const TOY_MIXED: &str = include_str!("../grammars/toy_mixed.gr");
}
