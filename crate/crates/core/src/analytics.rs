//! Corpus diagnostics: coverage, depth, and perplexity.
//!
//! All coverage metrics are type-level: they compare sets of distinct
//! objects (n-grams, whole instances, rule shapes), not token frequencies. A
//! metric answers "what fraction of the distinct things in the test corpus
//! also occurs in the reference corpus", so 100% means the test set holds no
//! novelty of that kind.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chart::{local_structures, parse_all, tree_depth, ChartError, StructureKey};
use crate::corpus::{detokenize, TokenSeq};
use crate::grammar::{binarize, BinarizedGrammar, Grammar, GrammarError, WeightedGrammar};
use crate::num::Weight;
use crate::pipeline::ParallelDataset;

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("test corpus is empty")]
    EmptyTest,
    #[error("n-gram order must be >= 1")]
    ZeroOrder,
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

fn percentage(covered: usize, total: usize) -> f64 {
    if total == 0 {
        // No distinct test objects of this kind: nothing is missing.
        100.0
    } else {
        100.0 * covered as f64 / total as f64
    }
}

fn ngrams(corpus: &[TokenSeq], n: usize) -> BTreeSet<Vec<String>> {
    let mut set = BTreeSet::new();
    for seq in corpus {
        for window in seq.windows(n) {
            set.insert(window.to_vec());
        }
    }
    set
}

/// Percentage of distinct test n-grams that also occur in the reference
/// corpus. Sequences shorter than `n` contribute no n-grams; if the test
/// corpus has no n-grams at all the coverage is 100 by convention.
pub fn ngram_coverage(
    reference: &[TokenSeq],
    test: &[TokenSeq],
    n: usize,
) -> Result<f64, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::ZeroOrder);
    }
    if test.is_empty() {
        return Err(AnalyticsError::EmptyTest);
    }
    let reference = ngrams(reference, n);
    let test = ngrams(test, n);
    let covered = test.iter().filter(|g| reference.contains(*g)).count();
    Ok(percentage(covered, test.len()))
}

/// Percentage of distinct test instances that occur verbatim in the
/// reference corpus.
pub fn instance_coverage(
    reference: &[TokenSeq],
    test: &[TokenSeq],
) -> Result<f64, AnalyticsError> {
    if test.is_empty() {
        return Err(AnalyticsError::EmptyTest);
    }
    let reference: BTreeSet<&TokenSeq> = reference.iter().collect();
    let distinct: BTreeSet<&TokenSeq> = test.iter().collect();
    let covered = distinct.iter().filter(|i| reference.contains(**i)).count();
    Ok(percentage(covered, distinct.len()))
}

/// Structure coverage of a test corpus against a reference corpus.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct StructureCoverage {
    pub percentage: f64,
    /// Test-side rule shapes absent from the reference corpus, sorted.
    pub uncovered: Vec<StructureKey>,
    /// Unparseable instances skipped on each side.
    pub skipped_reference: usize,
    pub skipped_test: usize,
}

fn corpus_structures(
    bin: &BinarizedGrammar,
    corpus: &[TokenSeq],
    side: &str,
) -> Result<(BTreeSet<StructureKey>, usize), AnalyticsError> {
    let mut keys = BTreeSet::new();
    let mut skipped = 0;
    for instance in corpus {
        let forest = parse_all(bin, instance);
        match forest.first_tree() {
            Some(tree) => {
                keys.extend(local_structures(&tree, bin.grammar(), 2)?);
            }
            None => {
                log::warn!(
                    "structure coverage: {side} instance '{}' has no parse; skipping",
                    detokenize(instance)
                );
                skipped += 1;
            }
        }
    }
    Ok((keys, skipped))
}

/// Percentage of distinct rule shapes in the canonical parses of the test
/// corpus that also occur in canonical parses of the reference corpus.
/// Unparseable instances are skipped with a warning and tallied.
pub fn structure_coverage(
    g: &Grammar,
    reference: &[TokenSeq],
    test: &[TokenSeq],
) -> Result<StructureCoverage, AnalyticsError> {
    if test.is_empty() {
        return Err(AnalyticsError::EmptyTest);
    }
    let bin = binarize(g)?;
    let (ref_keys, skipped_reference) = corpus_structures(&bin, reference, "reference")?;
    let (test_keys, skipped_test) = corpus_structures(&bin, test, "test")?;
    let uncovered: Vec<StructureKey> = test_keys.difference(&ref_keys).cloned().collect();
    Ok(StructureCoverage {
        percentage: percentage(test_keys.len() - uncovered.len(), test_keys.len()),
        uncovered,
        skipped_reference,
        skipped_test,
    })
}

/// Depth histogram of a corpus for a set of target nonterminals.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct DepthHistogram {
    /// target nonterminal -> nesting depth -> number of instances. Depth -1
    /// collects instances whose canonical parse never uses the target.
    pub counts: BTreeMap<String, BTreeMap<i64, u64>>,
    /// Unparseable instances skipped.
    pub skipped: usize,
}

/// Computes nesting-depth histograms over the canonical parse of each
/// instance. Unparseable instances are skipped with a warning.
pub fn depth_histogram(
    g: &Grammar,
    corpus: &[TokenSeq],
    targets: &[String],
) -> Result<DepthHistogram, AnalyticsError> {
    let bin = binarize(g)?;
    let mut hist = DepthHistogram::default();
    for target in targets {
        hist.counts.entry(target.clone()).or_default();
    }
    for instance in corpus {
        let forest = parse_all(&bin, instance);
        match forest.first_tree() {
            Some(tree) => {
                for target in targets {
                    let d = tree_depth(&tree, g, target);
                    *hist
                        .counts
                        .get_mut(target)
                        .expect("prepopulated")
                        .entry(d)
                        .or_insert(0) += 1;
                }
            }
            None => {
                log::warn!(
                    "depth histogram: instance '{}' has no parse; skipping",
                    detokenize(instance)
                );
                hist.skipped += 1;
            }
        }
    }
    Ok(hist)
}

/// Perplexity of a corpus under a weighted grammar.
#[derive(Clone, PartialEq, Debug)]
pub struct PerplexityReport<W> {
    /// `exp(-total_log_prob / total_tokens)` over scored instances; `None`
    /// when nothing could be scored.
    pub perplexity: Option<W>,
    /// Sum of natural-log string probabilities of scored instances.
    pub total_log_prob: W,
    /// Token count of scored instances.
    pub total_tokens: u64,
    pub scored: usize,
    pub skipped_unparseable: usize,
    /// Instances that parse but whose every derivation uses a zero-weight
    /// rule. They are excluded from the average and tallied here.
    pub skipped_zero_probability: usize,
}

/// Token-level perplexity of the corpus: string probabilities sum over all
/// derivations (inside probabilities), and the exponent averages over the
/// tokens of scored instances. Unparseable and zero-probability instances
/// are excluded and tallied.
pub fn mr_perplexity<W: Weight>(
    wg: &WeightedGrammar<W>,
    corpus: &[TokenSeq],
) -> Result<PerplexityReport<W>, AnalyticsError> {
    let bin = binarize(wg.grammar())?;
    let mut report = PerplexityReport {
        perplexity: None,
        total_log_prob: W::zero(),
        total_tokens: 0,
        scored: 0,
        skipped_unparseable: 0,
        skipped_zero_probability: 0,
    };
    for instance in corpus {
        let forest = parse_all(&bin, instance);
        if !forest.is_parseable() {
            report.skipped_unparseable += 1;
            continue;
        }
        let p = forest.inside_probability(wg);
        if p <= W::zero() {
            report.skipped_zero_probability += 1;
            continue;
        }
        report.total_log_prob += p.ln();
        report.total_tokens += instance.len() as u64;
        report.scored += 1;
    }
    if report.scored > 0 && report.total_tokens > 0 {
        let tokens = W::from_u64(report.total_tokens).expect("token count");
        report.perplexity = Some((-report.total_log_prob / tokens).exp());
    }
    Ok(report)
}

/// Which statistics [`build_report`] computes.
#[derive(Clone, Debug)]
pub struct ReportOptions {
    /// N-gram orders to report; defaults to bigrams only.
    pub ngram_orders: Vec<usize>,
    /// Nonterminals to histogram by nesting depth (over the test MRs).
    pub depth_targets: Vec<String>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            ngram_orders: vec![2],
            depth_targets: Vec::new(),
        }
    }
}

/// Per-side statistics of one dataset row against the test corpus.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct SideStats {
    /// Average instance length of the row's own data, in tokens.
    pub avg_length: f64,
    /// order -> coverage % of distinct test n-grams.
    pub ngram_coverage: BTreeMap<usize, f64>,
    /// Coverage % of distinct test instances.
    pub instance_coverage: f64,
    /// Rule-shape coverage of test MRs; meaning-representation side only.
    pub structure: Option<StructureCoverage>,
}

/// One row of the report: a dataset variant measured on both sides.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub sentences: SideStats,
    pub mrs: SideStats,
}

/// Coverage report over a train/test split, optionally with an augmented
/// variant of the training data as a second row.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub rows: Vec<ReportRow>,
    pub test_instances: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth_histogram: Option<DepthHistogram>,
}

fn side_stats(
    row: &[TokenSeq],
    test: &[TokenSeq],
    orders: &[usize],
    structure: Option<(&Grammar, &[TokenSeq])>,
) -> Result<SideStats, AnalyticsError> {
    let total: usize = row.iter().map(Vec::len).sum();
    let avg_length = if row.is_empty() {
        0.0
    } else {
        total as f64 / row.len() as f64
    };
    let mut per_order = BTreeMap::new();
    for &n in orders {
        per_order.insert(n, ngram_coverage(row, test, n)?);
    }
    Ok(SideStats {
        avg_length,
        ngram_coverage: per_order,
        instance_coverage: instance_coverage(row, test)?,
        structure: match structure {
            Some((g, row_mrs)) => Some(structure_coverage(g, row_mrs, test)?),
            None => None,
        },
    })
}

/// Builds the full coverage report: one row for the training data and, when
/// given, one for training plus augmented data, each measured against the
/// test split on both the sentence and the MR side.
pub fn build_report(
    g: &Grammar,
    train: &ParallelDataset,
    test: &ParallelDataset,
    augmented: Option<&ParallelDataset>,
    options: &ReportOptions,
) -> Result<AnalysisReport, AnalyticsError> {
    if test.records.is_empty() {
        return Err(AnalyticsError::EmptyTest);
    }
    let test_sentences = test.sentence_corpus();
    let test_mrs = test.mr_corpus();

    let mut rows = Vec::new();
    let make_row = |name: &str, ds_sentences: Vec<TokenSeq>, ds_mrs: Vec<TokenSeq>| {
        let sentences = side_stats(&ds_sentences, &test_sentences, &options.ngram_orders, None)?;
        let mrs = side_stats(
            &ds_mrs,
            &test_mrs,
            &options.ngram_orders,
            Some((g, &ds_mrs)),
        )?;
        Ok::<ReportRow, AnalyticsError>(ReportRow {
            dataset: name.to_string(),
            sentences,
            mrs,
        })
    };
    rows.push(make_row(
        "train",
        train.sentence_corpus(),
        train.mr_corpus(),
    )?);
    if let Some(aug) = augmented {
        let mut sentences = train.sentence_corpus();
        sentences.extend(aug.sentence_corpus());
        let mut mrs = train.mr_corpus();
        mrs.extend(aug.mr_corpus());
        rows.push(make_row("train+augmented", sentences, mrs)?);
    }
    let depth = if options.depth_targets.is_empty() {
        None
    } else {
        Some(depth_histogram(g, &test_mrs, &options.depth_targets)?)
    };
    Ok(AnalysisReport {
        rows,
        test_instances: test.records.len(),
        depth_histogram: depth,
    })
}

impl AnalysisReport {
    /// Renders the report as an aligned plain-text table.
    pub fn to_table(&self) -> String {
        let orders: Vec<usize> = self
            .rows
            .first()
            .map(|r| r.mrs.ngram_coverage.keys().copied().collect())
            .unwrap_or_default();
        let mut header = vec!["dataset".to_string(), "side".to_string(), "avg-len".to_string()];
        for n in &orders {
            header.push(format!("{n}-grams%"));
        }
        header.push("instances%".to_string());
        header.push("structures%".to_string());

        let mut table: Vec<Vec<String>> = vec![header];
        for row in &self.rows {
            for (side_name, side) in [("sentences", &row.sentences), ("mrs", &row.mrs)] {
                let mut cells = vec![
                    row.dataset.clone(),
                    side_name.to_string(),
                    format!("{:.2}", side.avg_length),
                ];
                for n in &orders {
                    cells.push(format!("{:.1}", side.ngram_coverage[n]));
                }
                cells.push(format!("{:.1}", side.instance_coverage));
                cells.push(match &side.structure {
                    Some(s) => format!("{:.1}", s.percentage),
                    None => "-".to_string(),
                });
                table.push(cells);
            }
        }

        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| format!("{:<width$}", cell, width = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        let uncovered: Vec<&String> = self
            .rows
            .iter()
            .flat_map(|r| r.mrs.structure.iter().flat_map(|s| s.uncovered.iter()))
            .collect();
        if !uncovered.is_empty() {
            out.push_str("\nuncovered structures (test-only rule shapes):\n");
            for key in uncovered.iter().take(10) {
                out.push_str("  ");
                out.push_str(key);
                out.push('\n');
            }
            if uncovered.len() > 10 {
                out.push_str(&format!("  ... and {} more\n", uncovered.len() - 10));
            }
        }
        if let Some(hist) = &self.depth_histogram {
            out.push_str("\ndepth histogram (test MRs):\n");
            for (target, buckets) in &hist.counts {
                let parts: Vec<String> = buckets
                    .iter()
                    .map(|(depth, n)| format!("{depth}: {n}"))
                    .collect();
                out.push_str(&format!("  {target}: {{{}}}\n", parts.join(", ")));
            }
            if hist.skipped > 0 {
                out.push_str(&format!("  ({} unparseable instances skipped)\n", hist.skipped));
            }
        }
        out
    }
}
