//! Fractional rule counts extracted from parse forests.
//!
//! An instance with N parse trees contributes 1/N of a count to each rule
//! application in each tree, so every instance adds exactly one unit of count
//! per tree-average rule application and ambiguous instances are not counted
//! double.

use crate::chart::{ParseForest, TreeCount};
use crate::num::Weight;

/// Dense per-rule fractional counts, indexed by rule id.
#[derive(Clone, PartialEq, Debug)]
pub struct RuleCountTable<W> {
    counts: Vec<W>,
}

/// Why counts could not be extracted from a forest.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CountError {
    #[error("instance has no parse under the grammar")]
    Unparseable,
    #[error("instance has at least {lower_bound} parse trees, above the enumeration cap {cap}")]
    OverCap { lower_bound: u64, cap: u64 },
}

impl<W: Weight> RuleCountTable<W> {
    pub fn zeros(num_rules: usize) -> Self {
        RuleCountTable {
            counts: vec![W::zero(); num_rules],
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, rule: usize) -> W {
        self.counts[rule]
    }

    pub fn add(&mut self, rule: usize, amount: W) {
        self.counts[rule] += amount;
    }

    /// Adds another table rule-by-rule. Tables must come from the same
    /// grammar.
    pub fn merge(&mut self, other: &RuleCountTable<W>) {
        assert_eq!(self.counts.len(), other.counts.len(), "table size mismatch");
        for (into, from) in self.counts.iter_mut().zip(&other.counts) {
            *into += *from;
        }
    }

    pub fn counts(&self) -> &[W] {
        &self.counts
    }
}

/// Averages rule occurrences over all parse trees of one forest: with N
/// trees, each tree's applications count 1/N. Fails on unparseable input and
/// on forests whose tree count exceeds the enumeration cap.
pub fn count_rules<W: Weight>(forest: &ParseForest<'_>) -> Result<RuleCountTable<W>, CountError> {
    let n = match forest.count() {
        TreeCount::Exact(0) => return Err(CountError::Unparseable),
        TreeCount::AtLeast(lower_bound) => {
            return Err(CountError::OverCap {
                lower_bound,
                cap: forest.cap(),
            })
        }
        TreeCount::Exact(n) => n,
    };
    let num_rules = forest.grammar().grammar().num_rules();
    let trees = forest.trees(n as usize);
    debug_assert_eq!(trees.len() as u64, n);
    let mut occurrences = vec![0u64; num_rules];
    for tree in &trees {
        for (rule, occ) in tree.rule_occurrences(num_rules).into_iter().enumerate() {
            occurrences[rule] += occ;
        }
    }
    let mut table = RuleCountTable::zeros(num_rules);
    let denom = W::from_u64(n).expect("tree count fits the scalar");
    for (rule, occ) in occurrences.into_iter().enumerate() {
        if occ > 0 {
            table.counts[rule] = W::from_u64(occ).expect("occurrence count") / denom;
        }
    }
    Ok(table)
}
