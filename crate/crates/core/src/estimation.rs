//! Rule-weight estimation from meaning-representation corpora.
//!
//! [`estimate_mle`] is relative-frequency estimation: the weight of a rule is
//! its fractional count divided by the total count of its left-hand side.
//! Ambiguous instances spread their mass evenly over their parse trees (1/N
//! per tree), so each instance contributes one unit of evidence regardless of
//! ambiguity. With no smoothing, rules never observed in the corpus get
//! weight exactly zero — deliberately, since downstream sampling treats those
//! rules as impossible. Additive smoothing (`smoothing` > 0) lifts every rule
//! off zero when that regime is not wanted.

use std::collections::BTreeMap;

use crate::chart::{count_rules, parse_all_capped, CountError, RuleCountTable, DEFAULT_TREE_CAP};
use crate::corpus::{detokenize, TokenSeq};
use crate::grammar::{binarize, Grammar, GrammarError, RuleId, WeightedGrammar};
use crate::num::Weight;

/// Knobs for [`estimate_mle`].
#[derive(Clone, Debug)]
pub struct EstimationConfig {
    /// Additive (add-lambda) smoothing constant; 0 disables smoothing and
    /// preserves exact zeros for unobserved rules.
    pub smoothing: f64,
    /// Skip instances whose tree count exceeds the enumeration cap instead of
    /// failing the whole estimation.
    pub skip_over_cap: bool,
    /// Cap on exact tree counting per instance.
    pub enumeration_cap: u64,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            smoothing: 0.0,
            skip_over_cap: false,
            enumeration_cap: DEFAULT_TREE_CAP,
        }
    }
}

/// What happened during an estimation run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EstimationReport {
    /// Instances that parsed and contributed counts.
    pub counted: usize,
    /// Instances with no parse, skipped with a warning.
    pub skipped_unparseable: usize,
    /// Instances skipped because their tree count exceeded the cap.
    pub skipped_over_cap: usize,
    /// Nonterminals never observed in any counted parse; their rules fall
    /// back to uniform weights.
    pub fallback_nonterminals: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum EstimationError {
    #[error("no corpus instance parsed under the grammar; cannot estimate weights")]
    NoUsableInstances,
    #[error("instance {index} ('{instance}') has at least {lower_bound} parses, above the cap {cap}; enable skip_over_cap or raise the cap")]
    OverCap {
        index: usize,
        instance: String,
        lower_bound: u64,
        cap: u64,
    },
    #[error("smoothing constant must be finite and >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("grammars differ; distributions are only comparable over the same rule set")]
    GrammarMismatch,
}

/// Maximum-likelihood weights for `g` from a corpus of token sequences.
///
/// Unparseable instances are skipped with a warning and tallied in the
/// report. Nonterminals with zero total count (with smoothing off) fall back
/// to uniform weights over their rules and are listed in the report.
pub fn estimate_mle<W: Weight>(
    g: &Grammar,
    corpus: &[TokenSeq],
    config: &EstimationConfig,
) -> Result<(WeightedGrammar<W>, EstimationReport), EstimationError> {
    if !(config.smoothing.is_finite() && config.smoothing >= 0.0) {
        return Err(EstimationError::InvalidSmoothing(config.smoothing));
    }
    let bin = binarize(g)?;
    let mut totals = RuleCountTable::<W>::zeros(g.num_rules());
    let mut report = EstimationReport::default();
    for (index, instance) in corpus.iter().enumerate() {
        let forest = parse_all_capped(&bin, instance, config.enumeration_cap);
        match count_rules::<W>(&forest) {
            Ok(table) => {
                totals.merge(&table);
                report.counted += 1;
            }
            Err(CountError::Unparseable) => {
                log::warn!(
                    "estimation: instance {} ('{}') has no parse; skipping",
                    index,
                    detokenize(instance)
                );
                report.skipped_unparseable += 1;
            }
            Err(CountError::OverCap { lower_bound, cap }) => {
                if config.skip_over_cap {
                    log::warn!(
                        "estimation: instance {} has >= {} parses (cap {}); skipping",
                        index,
                        lower_bound,
                        cap
                    );
                    report.skipped_over_cap += 1;
                } else {
                    return Err(EstimationError::OverCap {
                        index,
                        instance: detokenize(instance),
                        lower_bound,
                        cap,
                    });
                }
            }
        }
    }
    if report.counted == 0 {
        return Err(EstimationError::NoUsableInstances);
    }

    let lambda = W::from_config(config.smoothing);
    let mut raw = vec![W::zero(); g.num_rules()];
    for nt in 0..g.num_nonterminals() {
        let rule_ids = g.rules_for(nt);
        let family_total: W = rule_ids.iter().map(|&r| totals.get(r)).sum();
        if lambda > W::zero() {
            for &r in rule_ids {
                raw[r] = totals.get(r) + lambda;
            }
        } else if family_total > W::zero() {
            for &r in rule_ids {
                raw[r] = totals.get(r);
            }
        } else {
            // Nothing observed for this nonterminal: uniform fallback.
            report
                .fallback_nonterminals
                .push(g.nonterminal_name(nt).to_string());
            for &r in rule_ids {
                raw[r] = W::one();
            }
        }
    }
    let wg = WeightedGrammar::new(g.clone(), raw)?;
    Ok((wg, report))
}

/// Uniform weights: each of a nonterminal's `k` rules gets `1/k`.
pub fn uniform_weights<W: Weight>(g: &Grammar) -> WeightedGrammar<W> {
    WeightedGrammar::uniform(g.clone())
}

/// Per-rule weight difference between two distributions over one grammar.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct WeightDelta<W> {
    pub rule: RuleId,
    pub a: W,
    pub b: W,
    /// `b - a`.
    pub delta: W,
}

/// Side-by-side comparison of two weightings of the same grammar.
#[derive(Clone, PartialEq, Debug)]
pub struct DistributionComparison<W> {
    pub per_rule: Vec<WeightDelta<W>>,
    /// Total variation distance per nonterminal: half the L1 distance between
    /// the two rule distributions of that left-hand side.
    pub total_variation: BTreeMap<String, W>,
}

/// Compares two weightings rule-by-rule. The grammars must be identical.
pub fn compare_distributions<W: Weight>(
    a: &WeightedGrammar<W>,
    b: &WeightedGrammar<W>,
) -> Result<DistributionComparison<W>, EstimationError> {
    if a.grammar() != b.grammar() {
        return Err(EstimationError::GrammarMismatch);
    }
    let g = a.grammar();
    let per_rule = (0..g.num_rules())
        .map(|rule| WeightDelta {
            rule,
            a: a.weight(rule),
            b: b.weight(rule),
            delta: b.weight(rule) - a.weight(rule),
        })
        .collect();
    let half = W::from_config(0.5);
    let total_variation = (0..g.num_nonterminals())
        .map(|nt| {
            let tv: W = g
                .rules_for(nt)
                .iter()
                .map(|&r| (a.weight(r) - b.weight(r)).abs())
                .sum();
            (g.nonterminal_name(nt).to_string(), tv * half)
        })
        .collect();
    Ok(DistributionComparison {
        per_rule,
        total_variation,
    })
}
