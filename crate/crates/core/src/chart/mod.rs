//! Exhaustive CYK parsing over binarized grammars.
//!
//! [`parse_all`] builds a packed parse forest for a token sequence: a
//! triangular chart whose cells record, per symbol, every way a span derives
//! that symbol. The forest supports exact tree counting (clamped at a
//! configurable cap), deterministic tree enumeration, and inside-probability
//! computation, all without ever materializing more trees than asked for.
//!
//! Enumeration order is fixed: entries within a cell are ordered by (split
//! point, rule id) and subtrees compose left-to-right, so two parses of the
//! same input under the same grammar always list trees identically.

mod counts;
mod tree;

pub use counts::{count_rules, CountError, RuleCountTable};
pub use tree::{local_structures, tree_depth, ParseTree, StructureKey};

use std::collections::BTreeMap;
use std::fmt;

use crate::grammar::binarize::{BinRhs, BinRuleId, BinSymId};
use crate::grammar::{BinarizedGrammar, RuleOrigin, WeightedGrammar};
use crate::num::Weight;

/// Default clamp for exact tree counting and enumeration.
pub const DEFAULT_TREE_CAP: u64 = 1000;

/// Errors from tree-level operations.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChartError {
    #[error("local structures of order {order} are not supported (only order 2)")]
    UnsupportedOrder { order: usize },
}

/// Number of parse trees of a string, exact up to the enumeration cap.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TreeCount {
    Exact(u64),
    /// The true count is `cap` or more; the exact value was not computed.
    AtLeast(u64),
}

impl TreeCount {
    pub fn is_zero(&self) -> bool {
        matches!(self, TreeCount::Exact(0))
    }

    /// Smallest count consistent with this value.
    pub fn lower_bound(&self) -> u64 {
        match *self {
            TreeCount::Exact(n) => n,
            TreeCount::AtLeast(n) => n,
        }
    }
}

impl fmt::Display for TreeCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeCount::Exact(n) => write!(f, "{n}"),
            TreeCount::AtLeast(n) => write!(f, ">= {n}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Entry {
    /// Absolute split position for pair entries; 0 for lexical and unit
    /// entries, which sorts them first.
    split: usize,
    rule: BinRuleId,
}

#[derive(Clone, Debug, Default)]
struct CellSym {
    entries: Vec<Entry>,
    count: u64,
}

type Cell = BTreeMap<BinSymId, CellSym>;

/// Packed parse forest of one token sequence under one binarized grammar.
pub struct ParseForest<'g> {
    bin: &'g BinarizedGrammar,
    tokens: Vec<String>,
    /// Position and text of the first token missing from the grammar's
    /// terminal alphabet, if any. Such inputs have zero parses.
    unknown: Option<(usize, String)>,
    /// cells[len - 1][start]; empty when the input is unparseable early.
    cells: Vec<Vec<Cell>>,
    cap: u64,
    count: TreeCount,
}

/// Parses with the default tree-count cap of [`DEFAULT_TREE_CAP`].
pub fn parse_all<'g>(bin: &'g BinarizedGrammar, tokens: &[String]) -> ParseForest<'g> {
    parse_all_capped(bin, tokens, DEFAULT_TREE_CAP)
}

/// Parses a token sequence, counting trees exactly up to `cap`. Counts at or
/// above the cap are reported as [`TreeCount::AtLeast`] and enumeration stops
/// at the cap.
pub fn parse_all_capped<'g>(
    bin: &'g BinarizedGrammar,
    tokens: &[String],
    cap: u64,
) -> ParseForest<'g> {
    let g = bin.grammar();
    let owned: Vec<String> = tokens.to_vec();
    let mut empty = ParseForest {
        bin,
        tokens: owned,
        unknown: None,
        cells: Vec::new(),
        cap,
        count: TreeCount::Exact(0),
    };
    let mut ids = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        match g.terminal_id(tok) {
            Some(id) => ids.push(id),
            None => {
                empty.unknown = Some((i, tok.clone()));
                return empty;
            }
        }
    }
    let n = ids.len();
    if n == 0 {
        return empty;
    }

    // Counts are clamped at cap + 1; any clamped value propagates upward, so
    // a root count of cap + 1 means "at least cap".
    let clamp = cap.saturating_add(1);
    let add = |a: u64, b: u64| a.saturating_add(b).min(clamp);
    let mul = |a: u64, b: u64| ((a as u128) * (b as u128)).min(clamp as u128) as u64;

    let mut cells: Vec<Vec<Cell>> = (1..=n).map(|len| vec![Cell::new(); n - len + 1]).collect();

    for len in 1..=n {
        for start in 0..=(n - len) {
            let mut cell = Cell::new();
            if len == 1 {
                if let Some(rules) = bin.lex.get(&ids[start]) {
                    for &rid in rules {
                        let slot = cell.entry(bin.rules[rid].lhs).or_default();
                        slot.entries.push(Entry { split: 0, rule: rid });
                        slot.count = add(slot.count, 1);
                    }
                }
            } else {
                for split in (start + 1)..(start + len) {
                    let left_cell = &cells[split - start - 1][start];
                    let right_cell = &cells[len - (split - start) - 1][split];
                    for (&lsym, lcs) in left_cell {
                        for (&rsym, rcs) in right_cell {
                            let Some(rules) = bin.pair_index.get(&(lsym, rsym)) else {
                                continue;
                            };
                            let pair_count = mul(lcs.count, rcs.count);
                            for &rid in rules {
                                let slot = cell.entry(bin.rules[rid].lhs).or_default();
                                slot.entries.push(Entry { split, rule: rid });
                                slot.count = add(slot.count, pair_count);
                            }
                        }
                    }
                }
            }
            // Unit closure in child-before-parent order, so chains resolve in
            // one pass.
            for order_idx in 0..bin.unit_order.len() {
                let child = bin.unit_order[order_idx];
                let Some(child_count) = cell.get(&child).map(|cs| cs.count) else {
                    continue;
                };
                for &rid in &bin.units_by_child[child] {
                    let slot = cell.entry(bin.rules[rid].lhs).or_default();
                    slot.entries.push(Entry { split: 0, rule: rid });
                    slot.count = add(slot.count, child_count);
                }
            }
            for slot in cell.values_mut() {
                slot.entries.sort_by_key(|e| (e.split, e.rule));
            }
            cells[len - 1][start] = cell;
        }
    }

    let root = cells[n - 1][0].get(&bin.start).map(|cs| cs.count).unwrap_or(0);
    let count = if root > cap {
        TreeCount::AtLeast(cap)
    } else {
        TreeCount::Exact(root)
    };
    ParseForest {
        bin,
        tokens: empty.tokens,
        unknown: None,
        cells,
        cap,
        count,
    }
}

impl<'g> ParseForest<'g> {
    pub fn grammar(&self) -> &BinarizedGrammar {
        self.bin
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Exact number of parse trees, clamped at the cap.
    pub fn count(&self) -> TreeCount {
        self.count
    }

    pub fn is_parseable(&self) -> bool {
        !self.count.is_zero()
    }

    /// First input token not in the grammar's terminal alphabet, if any.
    pub fn unknown_token(&self) -> Option<(usize, &str)> {
        self.unknown.as_ref().map(|(i, t)| (*i, t.as_str()))
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Enumerates up to `limit` parse trees in the forest's deterministic
    /// order. The same forest always yields the same list.
    pub fn trees(&self, limit: usize) -> Vec<ParseTree> {
        let n = self.tokens.len();
        if n == 0 || self.cells.is_empty() || limit == 0 {
            return Vec::new();
        }
        let bins = self.gen(0, n, self.bin.start, limit.min(self.cap as usize));
        bins.iter().map(|b| self.to_original(b)).collect()
    }

    /// First parse tree in enumeration order, the canonical parse.
    pub fn first_tree(&self) -> Option<ParseTree> {
        self.trees(1).into_iter().next()
    }

    fn gen(&self, start: usize, len: usize, sym: BinSymId, limit: usize) -> Vec<BinNode> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        let Some(cs) = self.cells[len - 1][start].get(&sym) else {
            return out;
        };
        for entry in &cs.entries {
            if out.len() >= limit {
                break;
            }
            let remaining = limit - out.len();
            match self.bin.rules[entry.rule].rhs {
                BinRhs::Term(_) => out.push(BinNode {
                    rule: entry.rule,
                    children: Vec::new(),
                }),
                BinRhs::Unit(child) => {
                    for sub in self.gen(start, len, child, remaining) {
                        out.push(BinNode {
                            rule: entry.rule,
                            children: vec![sub],
                        });
                    }
                }
                BinRhs::Pair(lsym, rsym) => {
                    let left_len = entry.split - start;
                    let lefts = self.gen(start, left_len, lsym, remaining);
                    'outer: for lt in lefts {
                        let room = limit - out.len();
                        if room == 0 {
                            break;
                        }
                        let rights = self.gen(entry.split, len - left_len, rsym, room);
                        for rt in rights {
                            out.push(BinNode {
                                rule: entry.rule,
                                children: vec![lt.clone(), rt],
                            });
                            if out.len() >= limit {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn to_original(&self, node: &BinNode) -> ParseTree {
        let RuleOrigin::Complete(rule) = self.bin.rules[node.rule].origin else {
            unreachable!("original nonterminals only carry Complete rules at the top");
        };
        let mut children = Vec::new();
        match self.bin.rules[node.rule].rhs {
            BinRhs::Term(_) => {}
            BinRhs::Unit(_) => children.push(self.to_original(&node.children[0])),
            BinRhs::Pair(..) => {
                self.flatten(&node.children[0], &mut children);
                self.flatten(&node.children[1], &mut children);
            }
        }
        ParseTree { rule, children }
    }

    fn flatten(&self, node: &BinNode, out: &mut Vec<ParseTree>) {
        match self.bin.rules[node.rule].origin {
            RuleOrigin::Preterminal => {}
            RuleOrigin::Partial(_) => {
                self.flatten(&node.children[0], out);
                self.flatten(&node.children[1], out);
            }
            RuleOrigin::Complete(_) => out.push(self.to_original(node)),
        }
    }

    /// Total probability of the token sequence: the sum over all derivations
    /// of the product of rule weights. Weights attach to complete rules only,
    /// so the value matches the original (unbinarized) grammar. `wg` must
    /// carry the same grammar this forest was parsed under.
    pub fn inside_probability<W: Weight>(&self, wg: &WeightedGrammar<W>) -> W {
        debug_assert_eq!(
            wg.grammar(),
            self.bin.grammar(),
            "weighted grammar must match the parsed grammar"
        );
        let n = self.tokens.len();
        if n == 0 || self.cells.is_empty() {
            return W::zero();
        }
        let weight_of = |rid: BinRuleId| match self.bin.rules[rid].origin {
            RuleOrigin::Complete(orig) => wg.weight(orig),
            RuleOrigin::Partial(_) | RuleOrigin::Preterminal => W::one(),
        };
        let mut inside: Vec<Vec<BTreeMap<BinSymId, W>>> = (1..=n)
            .map(|len| vec![BTreeMap::new(); n - len + 1])
            .collect();
        for len in 1..=n {
            for start in 0..=(n - len) {
                let cell = &self.cells[len - 1][start];
                // Unit order guarantees children are valued before parents.
                for &sym in &self.bin.unit_order {
                    let Some(cs) = cell.get(&sym) else { continue };
                    let mut total = W::zero();
                    for entry in &cs.entries {
                        let contrib = match self.bin.rules[entry.rule].rhs {
                            BinRhs::Term(_) => weight_of(entry.rule),
                            BinRhs::Unit(child) => {
                                let sub = inside[len - 1][start]
                                    .get(&child)
                                    .copied()
                                    .unwrap_or_else(W::zero);
                                weight_of(entry.rule) * sub
                            }
                            BinRhs::Pair(lsym, rsym) => {
                                let left_len = entry.split - start;
                                let lv = inside[left_len - 1][start]
                                    .get(&lsym)
                                    .copied()
                                    .unwrap_or_else(W::zero);
                                let rv = inside[len - left_len - 1][entry.split]
                                    .get(&rsym)
                                    .copied()
                                    .unwrap_or_else(W::zero);
                                weight_of(entry.rule) * lv * rv
                            }
                        };
                        total += contrib;
                    }
                    inside[len - 1][start].insert(sym, total);
                }
            }
        }
        inside[n - 1][0]
            .get(&self.bin.start)
            .copied()
            .unwrap_or_else(W::zero)
    }
}

#[derive(Clone, Debug)]
struct BinNode {
    rule: BinRuleId,
    children: Vec<BinNode>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::grammar::{binarize, parse_grammar};

    fn bin_of(text: &str) -> BinarizedGrammar {
        let g = parse_grammar::<f64>(text).expect("grammar").into_parts().0;
        binarize(&g).expect("binarizable")
    }

    const RIGHT_REC: &str = "S -> 'a' S\nS -> 'b'\n";
    const AMBIG: &str = "S -> S S\nS -> 'x'\n";

    #[test]
    fn unambiguous_string_has_one_tree() {
        let bin = bin_of(RIGHT_REC);
        let forest = parse_all(&bin, &tokenize("a a b"));
        assert_eq!(forest.count(), TreeCount::Exact(1));
        let trees = forest.trees(10);
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].yield_tokens(bin.grammar()), tokenize("a a b"));
    }

    #[test]
    fn ambiguous_string_counts_all_trees() {
        let bin = bin_of(AMBIG);
        let forest = parse_all(&bin, &tokenize("x x x"));
        assert_eq!(forest.count(), TreeCount::Exact(2));
        let trees = forest.trees(10);
        assert_eq!(trees.len(), 2);
        assert_ne!(trees[0], trees[1]);
        for t in &trees {
            assert_eq!(t.yield_tokens(bin.grammar()), tokenize("x x x"));
        }
    }

    #[test]
    fn tree_enumeration_is_deterministic_and_distinct() {
        let bin = bin_of(AMBIG);
        let forest = parse_all(&bin, &tokenize("x x x x x"));
        // Catalan(4) = 14 binary bracketings.
        assert_eq!(forest.count(), TreeCount::Exact(14));
        let a = forest.trees(14);
        let b = forest.trees(14);
        assert_eq!(a, b);
        for i in 0..a.len() {
            for j in (i + 1)..a.len() {
                assert_ne!(a[i], a[j], "trees {i} and {j} must differ");
            }
        }
    }

    #[test]
    fn counts_above_the_cap_clamp_to_at_least() {
        let bin = bin_of(AMBIG);
        let tokens = tokenize("x x x x x");
        let forest = parse_all_capped(&bin, &tokens, 10);
        assert_eq!(forest.count(), TreeCount::AtLeast(10));
        assert_eq!(forest.trees(100).len(), 10, "enumeration stops at the cap");
        // Catalan(9) = 4862 exceeds the default cap tier too.
        let long = tokenize("x x x x x x x x x x");
        let forest = parse_all_capped(&bin, &long, 1000);
        assert_eq!(forest.count(), TreeCount::AtLeast(1000));
    }

    #[test]
    fn unknown_tokens_yield_empty_forest_with_position() {
        let bin = bin_of(RIGHT_REC);
        let forest = parse_all(&bin, &tokenize("a y b"));
        assert!(!forest.is_parseable());
        assert_eq!(forest.unknown_token(), Some((1, "y")));
        assert!(forest.trees(10).is_empty());
    }

    #[test]
    fn grammatical_tokens_in_wrong_order_are_unparseable() {
        let bin = bin_of(RIGHT_REC);
        let forest = parse_all(&bin, &tokenize("b a"));
        assert_eq!(forest.count(), TreeCount::Exact(0));
        assert_eq!(forest.unknown_token(), None);
    }

    #[test]
    fn empty_input_is_unparseable() {
        let bin = bin_of(RIGHT_REC);
        let forest = parse_all(&bin, &[]);
        assert!(!forest.is_parseable());
    }

    #[test]
    fn unit_chains_parse_through_closure() {
        let bin = bin_of("%start A\nA -> B\nB -> C\nC -> 'c'\nA -> 'a'\n");
        let forest = parse_all(&bin, &tokenize("c"));
        assert_eq!(forest.count(), TreeCount::Exact(1));
        let tree = forest.first_tree().unwrap();
        assert_eq!(tree.yield_tokens(bin.grammar()), tokenize("c"));
        // A -> B, B -> C, C -> 'c': three rule applications stacked.
        assert_eq!(tree.internal_nodes(), 3);
    }

    #[test]
    fn long_rules_round_trip_through_binarization() {
        let bin = bin_of("S -> 'answer' '(' Var ')'\nVar -> 'x'\nVar -> Var Var\n");
        let forest = parse_all(&bin, &tokenize("answer ( x x )"));
        assert_eq!(forest.count(), TreeCount::Exact(1));
        let tree = forest.first_tree().unwrap();
        assert_eq!(
            tree.yield_tokens(bin.grammar()),
            tokenize("answer ( x x )")
        );
        assert_eq!(tree.rule, 0, "root applies the long rule");
    }

    #[test]
    fn inside_probability_sums_over_derivations() {
        let wg = parse_grammar::<f64>("S -> S S @ 0.25\nS -> 'x' @ 0.75\n").unwrap();
        let bin = binarize(wg.grammar()).unwrap();
        // "x x": one tree, p = 0.25 * 0.75^2.
        let forest = parse_all(&bin, &tokenize("x x"));
        let p = forest.inside_probability(&wg);
        assert!((p - 0.25 * 0.75 * 0.75).abs() < 1e-12);
        // "x x x": two trees, each 0.25^2 * 0.75^3.
        let forest = parse_all(&bin, &tokenize("x x x"));
        let p = forest.inside_probability(&wg);
        assert!((p - 2.0 * 0.25f64.powi(2) * 0.75f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn inside_probability_of_unparseable_input_is_zero() {
        let wg = parse_grammar::<f64>(RIGHT_REC).unwrap();
        let bin = binarize(wg.grammar()).unwrap();
        let forest = parse_all(&bin, &tokenize("b b"));
        assert_eq!(forest.inside_probability(&wg), 0.0);
    }

    #[test]
    fn forest_count_agrees_between_f32_and_f64_weighting() {
        let bin = bin_of(AMBIG);
        let forest = parse_all(&bin, &tokenize("x x x"));
        let wg64 = parse_grammar::<f64>("S -> S S @ 0.5\nS -> 'x' @ 0.5\n").unwrap();
        let wg32 = parse_grammar::<f32>("S -> S S @ 0.5\nS -> 'x' @ 0.5\n").unwrap();
        let p64 = forest.inside_probability(&wg64);
        let p32 = forest.inside_probability(&wg32);
        assert!((p64 - p32 as f64).abs() < 1e-6);
    }
}
