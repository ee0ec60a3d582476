//! Parse trees of the original grammar and the statistics read off them.

use std::collections::BTreeSet;

use crate::chart::ChartError;
use crate::grammar::{Grammar, RuleId, Sym, WeightedGrammar};
use crate::num::Weight;

/// Canonical string key of one rule shape, `Lhs -> sym1 sym2 ...` with
/// terminals quoted. Stable across reloads of the same grammar text.
pub type StructureKey = String;

/// One derivation: the rule applied at this node plus subtrees for each
/// nonterminal on the rule's right-hand side, in order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseTree {
    pub rule: RuleId,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    /// Reconstructs the token sequence this tree derives.
    pub fn yield_tokens(&self, g: &Grammar) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_yield(g, &mut out);
        out
    }

    fn collect_yield(&self, g: &Grammar, out: &mut Vec<String>) {
        let mut kids = self.children.iter();
        for sym in &g.rule(self.rule).rhs {
            match sym {
                Sym::Terminal(t) => out.push(g.terminal_name(*t).to_string()),
                Sym::Nonterminal(_) => kids
                    .next()
                    .expect("one subtree per rhs nonterminal")
                    .collect_yield(g, out),
            }
        }
    }

    /// Number of rule applications in the tree.
    pub fn internal_nodes(&self) -> usize {
        1 + self.children.iter().map(ParseTree::internal_nodes).sum::<usize>()
    }

    /// How many times each rule is applied, as a dense per-rule vector.
    pub fn rule_occurrences(&self, num_rules: usize) -> Vec<u64> {
        let mut counts = vec![0u64; num_rules];
        self.accumulate(&mut counts);
        counts
    }

    fn accumulate(&self, counts: &mut [u64]) {
        counts[self.rule] += 1;
        for child in &self.children {
            child.accumulate(counts);
        }
    }

    /// Log probability of this derivation under `wg`: the sum of the log
    /// weights of every rule application. `-inf` if any applied rule has
    /// weight zero.
    pub fn log_weight<W: Weight>(&self, wg: &WeightedGrammar<W>) -> W {
        let mut total = wg.weight(self.rule).ln();
        for child in &self.children {
            total += child.log_weight(wg);
        }
        total
    }

    /// Renders the tree as an s-expression with quoted terminals, e.g.
    /// `(S 'a' (S 'b'))`.
    pub fn render(&self, g: &Grammar) -> String {
        let rule = g.rule(self.rule);
        let mut out = String::new();
        out.push('(');
        out.push_str(g.nonterminal_name(rule.lhs));
        let mut kids = self.children.iter();
        for sym in &rule.rhs {
            out.push(' ');
            match sym {
                Sym::Terminal(t) => {
                    out.push('\'');
                    out.push_str(g.terminal_name(*t));
                    out.push('\'');
                }
                Sym::Nonterminal(_) => {
                    out.push_str(&kids.next().expect("subtree").render(g));
                }
            }
        }
        out.push(')');
        out
    }
}

/// Nesting depth of `target` in the tree: the maximum, over root-to-leaf
/// paths, of the number of nodes labeled `target`, minus one. A tree that
/// never uses `target` has depth -1; a single un-nested use has depth 0.
pub fn tree_depth(tree: &ParseTree, g: &Grammar, target: &str) -> i64 {
    let Some(target_id) = g.nonterminal_id(target) else {
        return -1;
    };
    max_on_path(tree, g, target_id) as i64 - 1
}

fn max_on_path(tree: &ParseTree, g: &Grammar, target: usize) -> u64 {
    let own = u64::from(g.rule(tree.rule).lhs == target);
    own + tree
        .children
        .iter()
        .map(|c| max_on_path(c, g, target))
        .max()
        .unwrap_or(0)
}

/// The set of order-2 local structures of a tree: one key per rule
/// application, naming the parent label and the full ordered right-hand
/// side. Only order 2 is implemented; other orders are an error.
pub fn local_structures(
    tree: &ParseTree,
    g: &Grammar,
    order: usize,
) -> Result<BTreeSet<StructureKey>, ChartError> {
    if order != 2 {
        return Err(ChartError::UnsupportedOrder { order });
    }
    let mut keys = BTreeSet::new();
    collect_structures(tree, g, &mut keys);
    Ok(keys)
}

fn collect_structures(tree: &ParseTree, g: &Grammar, keys: &mut BTreeSet<StructureKey>) {
    keys.insert(g.render_rule(tree.rule));
    for child in &tree.children {
        collect_structures(child, g, keys);
    }
}
