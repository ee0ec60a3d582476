//! Sampling unique meaning representations from a weighted grammar.
//!
//! Derivations are drawn top-down: starting from the start symbol, each
//! nonterminal picks one of its rules with probability proportional to the
//! rule's weight and expands left to right. An attempt restarts from scratch
//! (rejection sampling) whenever the derivation exceeds the depth cap, the
//! yield exceeds the length cap, or the configured post-filter says no.
//!
//! Determinism: attempt `i` always runs on its own counter-derived random
//! stream of the configured seed, and attempts are consumed in index order.
//! The returned list is therefore a pure function of (grammar, config), no
//! matter how many worker threads participate.

mod enumerate;
mod filters;

pub use enumerate::{enumerate_language, EnumerateError, EnumeratedLanguage};
pub use filters::{FilterError, FilterFactory, FilterFn, FilterRegistry, FilterSpec};

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chart::{tree_depth, ParseTree};
use crate::corpus::TokenSeq;
use crate::grammar::{RuleId, Sym, WeightedGrammar};
use crate::num::Weight;

/// Default cap on derivation depth (rule applications along one path).
pub const DEFAULT_MAX_DEPTH: usize = 50;
/// Default cap on yield length in tokens.
pub const DEFAULT_MAX_LEN: usize = 512;
/// Default attempt budget per requested sample.
pub const DEFAULT_BUDGET_PER_SAMPLE: u64 = 100;

/// How many attempts run per parallel batch. Consumption stays in attempt
/// order, so this only tunes throughput, never results.
const BATCH: usize = 1024;

/// Languages larger than this are not pre-counted for exhaustion detection.
const LANGUAGE_PROBE_CAP: usize = 200_000;

/// Configuration for [`sample_one`] and [`sample_unique`].
#[derive(Clone, Debug)]
pub struct SampleConfig {
    /// Number of unique samples requested.
    pub target: usize,
    /// Seed for the deterministic sampling streams.
    pub seed: u64,
    /// Reject derivations deeper than this many stacked rule applications.
    pub max_depth: usize,
    /// Reject derivations yielding more than this many tokens.
    pub max_len: usize,
    /// Total attempt budget; defaults to 100 per requested sample.
    pub budget: Option<u64>,
    /// Optional post-filter applied to complete samples.
    pub filter: Option<FilterSpec>,
    /// Token sequences that must not be returned (on top of within-run
    /// deduplication), e.g. an existing train or test split.
    pub exclude: HashSet<TokenSeq>,
}

impl SampleConfig {
    pub fn new(target: usize) -> Self {
        SampleConfig {
            target,
            seed: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            max_len: DEFAULT_MAX_LEN,
            budget: None,
            filter: None,
            exclude: HashSet::new(),
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
            .unwrap_or(DEFAULT_BUDGET_PER_SAMPLE * self.target as u64)
    }
}

/// One sampled meaning representation.
#[derive(Clone, PartialEq, Debug)]
pub struct MrSample<W> {
    pub tokens: TokenSeq,
    pub derivation: ParseTree,
    /// Log probability of the derivation under the sampling distribution.
    pub logprob: W,
    /// Nesting depth per nonterminal occurring in the derivation.
    pub depths: BTreeMap<String, i64>,
}

/// Why one attempt produced no sample.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rejection {
    DepthCap,
    LengthCap,
    Filtered,
}

/// Result of one sampling attempt.
#[derive(Clone, PartialEq, Debug)]
pub enum SampleOutcome<W> {
    Sampled(MrSample<W>),
    Rejected(Rejection),
}

/// Tallies from a [`sample_unique`] run.
#[derive(Clone, PartialEq, Eq, Debug, Default, serde::Serialize)]
pub struct SampleStats {
    pub requested: usize,
    pub returned: usize,
    /// Attempts consumed, including rejected and duplicate ones.
    pub attempts: u64,
    pub rejected_depth: u64,
    pub rejected_len: u64,
    pub rejected_filter: u64,
    /// Successful derivations whose string was already in this run's output.
    pub duplicates: u64,
    /// Successful derivations suppressed by the exclusion set.
    pub excluded: u64,
    /// The attempt budget ran out before the target was reached.
    pub budget_exhausted: bool,
    /// Exact number of distinct strings the grammar generates, when the
    /// language is finite and small enough to count.
    pub language_size: Option<u64>,
    /// Every distinct string of the language was seen; fewer than `target`
    /// samples can ever be returned.
    pub distinct_exhausted: bool,
}

impl SampleStats {
    /// Rejection tallies keyed by reason name, for run manifests.
    pub fn rejected_by_reason(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("depth-cap".to_string(), self.rejected_depth),
            ("length-cap".to_string(), self.rejected_len),
            ("filter".to_string(), self.rejected_filter),
            ("duplicate".to_string(), self.duplicates),
            ("excluded".to_string(), self.excluded),
        ])
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("requested sample count must be >= 1")]
    ZeroTarget,
    #[error("max_depth and max_len must both be >= 1")]
    ZeroCaps,
    #[error("budget {budget} is smaller than the requested count {target}")]
    BudgetTooSmall { budget: u64, target: usize },
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Runs a single sampling attempt against `rng`. Depth, length, and filter
/// violations come back as [`SampleOutcome::Rejected`]; configuration
/// problems (such as an unknown filter) are errors.
pub fn sample_one<W: Weight>(
    wg: &WeightedGrammar<W>,
    config: &SampleConfig,
    rng: &mut impl Rng,
) -> Result<SampleOutcome<W>, SampleError> {
    let core = SamplerCore::prepare(wg, config, &FilterRegistry::with_builtins())?;
    Ok(core.attempt(rng))
}

/// Samples `config.target` unique meaning representations, using the
/// built-in filter registry. See [`sample_unique_with`].
pub fn sample_unique<W: Weight>(
    wg: &WeightedGrammar<W>,
    config: &SampleConfig,
) -> Result<(Vec<MrSample<W>>, SampleStats), SampleError> {
    sample_unique_with(wg, config, &FilterRegistry::with_builtins())
}

/// Samples unique meaning representations until the target count, the
/// attempt budget, or the language itself is exhausted.
///
/// Duplicates within the run and strings in `config.exclude` are suppressed.
/// For finite languages small enough to count, the sampler stops as soon as
/// every distinct string has been seen instead of burning the whole budget.
pub fn sample_unique_with<W: Weight>(
    wg: &WeightedGrammar<W>,
    config: &SampleConfig,
    registry: &FilterRegistry<W>,
) -> Result<(Vec<MrSample<W>>, SampleStats), SampleError> {
    let core = SamplerCore::prepare(wg, config, registry)?;
    let budget = config.budget();

    let mut stats = SampleStats {
        requested: config.target,
        language_size: probe_language_size(wg),
        ..SampleStats::default()
    };
    let mut out: Vec<MrSample<W>> = Vec::with_capacity(config.target);
    let mut seen: HashSet<TokenSeq> = HashSet::new();

    let mut next = 0u64;
    'outer: while next < budget {
        let end = (next + BATCH as u64).min(budget);
        let outcomes: Vec<SampleOutcome<W>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(i);
                core.attempt(&mut rng)
            })
            .collect();
        for outcome in outcomes {
            stats.attempts += 1;
            match outcome {
                SampleOutcome::Rejected(Rejection::DepthCap) => stats.rejected_depth += 1,
                SampleOutcome::Rejected(Rejection::LengthCap) => stats.rejected_len += 1,
                SampleOutcome::Rejected(Rejection::Filtered) => stats.rejected_filter += 1,
                SampleOutcome::Sampled(sample) => {
                    if !seen.insert(sample.tokens.clone()) {
                        stats.duplicates += 1;
                    } else if config.exclude.contains(&sample.tokens) {
                        stats.excluded += 1;
                    } else {
                        out.push(sample);
                    }
                    if out.len() == config.target {
                        break 'outer;
                    }
                    if stats.language_size == Some(seen.len() as u64)
                        && out.len() < config.target
                    {
                        stats.distinct_exhausted = true;
                        log::warn!(
                            "sampler: all {} distinct strings of the language seen; returning {} of {} requested",
                            seen.len(),
                            out.len(),
                            config.target
                        );
                        break 'outer;
                    }
                }
            }
        }
        next = end;
    }
    if out.len() < config.target && !stats.distinct_exhausted {
        stats.budget_exhausted = true;
        log::warn!(
            "sampler: budget of {} attempts exhausted with {} of {} samples",
            budget,
            out.len(),
            config.target
        );
    }
    stats.returned = out.len();
    Ok((out, stats))
}

/// Precomputed sampling tables shared (immutably) by all attempts.
struct SamplerCore<'a, W> {
    wg: &'a WeightedGrammar<W>,
    config: &'a SampleConfig,
    /// Per nonterminal: positive-weight rules with cumulative probabilities.
    /// Zero-weight rules are absent and thus unsampleable by construction.
    choices: Vec<Vec<(f64, RuleId)>>,
    filter: Option<FilterFn<W>>,
}

impl<'a, W: Weight> SamplerCore<'a, W> {
    fn prepare(
        wg: &'a WeightedGrammar<W>,
        config: &'a SampleConfig,
        registry: &FilterRegistry<W>,
    ) -> Result<Self, SampleError> {
        if config.target == 0 {
            return Err(SampleError::ZeroTarget);
        }
        if config.max_depth == 0 || config.max_len == 0 {
            return Err(SampleError::ZeroCaps);
        }
        if config.budget() < config.target as u64 {
            return Err(SampleError::BudgetTooSmall {
                budget: config.budget(),
                target: config.target,
            });
        }
        let filter = config
            .filter
            .as_ref()
            .map(|spec| registry.compile(spec))
            .transpose()?;
        let g = wg.grammar();
        let choices = (0..g.num_nonterminals())
            .map(|nt| {
                let mut cum = 0.0;
                let mut table = Vec::new();
                for &rule in g.rules_for(nt) {
                    let w = wg.weight(rule).to_f64().expect("weight fits f64");
                    if w > 0.0 {
                        cum += w;
                        table.push((cum, rule));
                    }
                }
                // Guard the last bucket against f64 rounding shortfall.
                if let Some(last) = table.last_mut() {
                    last.0 = f64::INFINITY;
                }
                table
            })
            .collect();
        Ok(SamplerCore {
            wg,
            config,
            choices,
            filter,
        })
    }

    fn attempt(&self, rng: &mut impl Rng) -> SampleOutcome<W> {
        let mut tokens = Vec::new();
        let mut logprob = W::zero();
        let derivation =
            match self.expand(self.wg.grammar().start(), 1, &mut tokens, &mut logprob, rng) {
                Ok(tree) => tree,
                Err(rejection) => return SampleOutcome::Rejected(rejection),
            };
        let g = self.wg.grammar();
        let mut nts: Vec<usize> = Vec::new();
        collect_lhs(&derivation, g, &mut nts);
        nts.sort_unstable();
        nts.dedup();
        let depths: BTreeMap<String, i64> = nts
            .into_iter()
            .map(|nt| {
                let name = g.nonterminal_name(nt);
                (name.to_string(), tree_depth(&derivation, g, name))
            })
            .collect();
        let sample = MrSample {
            tokens,
            derivation,
            logprob,
            depths,
        };
        if let Some(filter) = &self.filter {
            if !filter(&sample) {
                return SampleOutcome::Rejected(Rejection::Filtered);
            }
        }
        SampleOutcome::Sampled(sample)
    }

    fn expand(
        &self,
        nt: usize,
        depth: usize,
        tokens: &mut TokenSeq,
        logprob: &mut W,
        rng: &mut impl Rng,
    ) -> Result<ParseTree, Rejection> {
        if depth > self.config.max_depth {
            return Err(Rejection::DepthCap);
        }
        let table = &self.choices[nt];
        debug_assert!(!table.is_empty(), "normalized weights leave every nonterminal sampleable");
        let u: f64 = rng.random();
        let idx = table.partition_point(|&(cum, _)| cum <= u);
        let rule = table[idx.min(table.len() - 1)].1;
        *logprob += self.wg.weight(rule).ln();
        let g = self.wg.grammar();
        let mut children = Vec::new();
        for sym in &g.rule(rule).rhs {
            match sym {
                Sym::Terminal(t) => {
                    tokens.push(g.terminal_name(*t).to_string());
                    if tokens.len() > self.config.max_len {
                        return Err(Rejection::LengthCap);
                    }
                }
                Sym::Nonterminal(child) => {
                    children.push(self.expand(*child, depth + 1, tokens, logprob, rng)?);
                }
            }
        }
        Ok(ParseTree { rule, children })
    }
}

fn collect_lhs(tree: &ParseTree, g: &crate::grammar::Grammar, out: &mut Vec<usize>) {
    out.push(g.rule(tree.rule).lhs);
    for child in &tree.children {
        collect_lhs(child, g, out);
    }
}

/// Exact distinct-string count for finite languages small enough to matter
/// for exhaustion detection; `None` otherwise.
fn probe_language_size<W: Weight>(wg: &WeightedGrammar<W>) -> Option<u64> {
    enumerate::exact_language_size(wg.grammar(), LANGUAGE_PROBE_CAP)
}
