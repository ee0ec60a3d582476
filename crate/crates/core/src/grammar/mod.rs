//! Context-free grammars over meaning-representation token streams.
//!
//! A [`Grammar`] is an immutable, validated rule set: every nonterminal that
//! occurs on a right-hand side has at least one rule of its own, the start
//! symbol has rules, and rule ids are dense indices in declaration order.
//! [`WeightedGrammar`] layers a per-rule probability on top, normalized so
//! that the weights of each left-hand side's rules sum to one.
//!
//! Both types are plain data with no interior mutability; they are `Send +
//! Sync` and safe to share across worker threads by reference.

pub(crate) mod binarize;
mod format;

pub use binarize::{binarize, BinRuleId, BinSymId, BinarizedGrammar, RuleOrigin};
pub use format::{load_grammar, parse_grammar, render_grammar, store_grammar};

use std::collections::HashMap;
use std::fmt;

use crate::num::Weight;

/// Dense rule identifier: the index of the rule in declaration order.
pub type RuleId = usize;
/// Dense nonterminal identifier, assigned in order of first appearance.
pub type NonterminalId = usize;
/// Dense terminal identifier, assigned in order of first appearance.
pub type TerminalId = usize;

/// One symbol occurrence on a right-hand side.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sym {
    Nonterminal(NonterminalId),
    Terminal(TerminalId),
}

/// Whether a symbol rewrites (nonterminal) or is a surface token (terminal).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymbolKind {
    Nonterminal,
    Terminal,
}

/// Resolved view of a symbol: its surface name, kind, and dense id within
/// that kind's namespace.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Symbol<'g> {
    pub name: &'g str,
    pub kind: SymbolKind,
    pub id: usize,
}

/// A production `lhs -> rhs`, identified externally by its [`RuleId`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Rule {
    pub lhs: NonterminalId,
    pub rhs: Vec<Sym>,
}

/// Errors from loading, building, or storing grammars.
#[derive(Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: negative weight {weight} (weights must be >= 0)")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("line {line}: duplicate %start directive")]
    DuplicateStart { line: usize },
    #[error("start symbol '{name}' has no rules")]
    StartWithoutRules { name: String },
    #[error("nonterminal '{name}' is used on a right-hand side but has no rules")]
    UndefinedNonterminal { name: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("weights for '{lhs}' sum to zero; at least one rule per nonterminal must have positive weight")]
    ZeroWeightSum { lhs: String },
    #[error("weight for rule {rule} is not a finite nonnegative number")]
    InvalidWeight { rule: RuleId },
    #[error("expected {expected} weights for {rules} rules")]
    WeightCount { expected: usize, rules: usize },
    #[error("unit-rule cycle through {cycle}: derivation counts would be unbounded")]
    UnitCycle { cycle: String },
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An immutable context-free grammar with interned symbol names.
#[derive(Clone, PartialEq, Debug)]
pub struct Grammar {
    nt_names: Vec<String>,
    term_names: Vec<String>,
    nt_ids: HashMap<String, NonterminalId>,
    term_ids: HashMap<String, TerminalId>,
    rules: Vec<Rule>,
    by_lhs: Vec<Vec<RuleId>>,
    start: NonterminalId,
}

impl Grammar {
    /// Builds a grammar from already-resolved parts. Used by the text-format
    /// loader; enforces the structural invariants shared by every entry path.
    pub(crate) fn from_parts(
        nt_names: Vec<String>,
        term_names: Vec<String>,
        rules: Vec<Rule>,
        start: NonterminalId,
    ) -> Result<Grammar, GrammarError> {
        if rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        let nt_ids: HashMap<String, NonterminalId> = nt_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let term_ids: HashMap<String, TerminalId> = term_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut by_lhs = vec![Vec::new(); nt_names.len()];
        for (id, rule) in rules.iter().enumerate() {
            by_lhs[rule.lhs].push(id);
        }
        if by_lhs.get(start).is_none_or(|r| r.is_empty()) {
            return Err(GrammarError::StartWithoutRules {
                name: nt_names
                    .get(start)
                    .cloned()
                    .unwrap_or_else(|| "?".to_string()),
            });
        }
        for (nt, rule_ids) in by_lhs.iter().enumerate() {
            if rule_ids.is_empty() {
                return Err(GrammarError::UndefinedNonterminal {
                    name: nt_names[nt].clone(),
                });
            }
        }
        Ok(Grammar {
            nt_names,
            term_names,
            nt_ids,
            term_ids,
            rules,
            by_lhs,
            start,
        })
    }

    pub fn start(&self) -> NonterminalId {
        self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id]
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn num_nonterminals(&self) -> usize {
        self.nt_names.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.term_names.len()
    }

    /// Rule ids with the given left-hand side, in rule-id order.
    pub fn rules_for(&self, nt: NonterminalId) -> &[RuleId] {
        &self.by_lhs[nt]
    }

    pub fn nonterminal_name(&self, id: NonterminalId) -> &str {
        &self.nt_names[id]
    }

    pub fn terminal_name(&self, id: TerminalId) -> &str {
        &self.term_names[id]
    }

    pub fn nonterminal_id(&self, name: &str) -> Option<NonterminalId> {
        self.nt_ids.get(name).copied()
    }

    pub fn terminal_id(&self, name: &str) -> Option<TerminalId> {
        self.term_ids.get(name).copied()
    }

    pub fn symbol(&self, sym: Sym) -> Symbol<'_> {
        match sym {
            Sym::Nonterminal(id) => Symbol {
                name: &self.nt_names[id],
                kind: SymbolKind::Nonterminal,
                id,
            },
            Sym::Terminal(id) => Symbol {
                name: &self.term_names[id],
                kind: SymbolKind::Terminal,
                id,
            },
        }
    }

    /// Renders a symbol the way the text format writes it: terminals quoted,
    /// nonterminals bare.
    pub fn render_sym(&self, sym: Sym) -> String {
        match sym {
            Sym::Nonterminal(id) => self.nt_names[id].clone(),
            Sym::Terminal(id) => format!("'{}'", self.term_names[id]),
        }
    }

    /// Renders `lhs -> rhs` without any weight annotation. This string is the
    /// canonical shape key for a rule and is stable across reloads.
    pub fn render_rule(&self, id: RuleId) -> String {
        let rule = &self.rules[id];
        let mut out = String::new();
        out.push_str(&self.nt_names[rule.lhs]);
        out.push_str(" ->");
        for sym in &rule.rhs {
            out.push(' ');
            out.push_str(&self.render_sym(*sym));
        }
        out
    }

    /// Minimum yield length of each nonterminal, or `None` for nonterminals
    /// that derive no finite token string (nonproductive).
    pub fn min_yield_lengths(&self) -> Vec<Option<usize>> {
        let mut lens: Vec<Option<usize>> = vec![None; self.nt_names.len()];
        loop {
            let mut changed = false;
            for rule in &self.rules {
                let mut total = 0usize;
                let mut ok = true;
                for sym in &rule.rhs {
                    match sym {
                        Sym::Terminal(_) => total += 1,
                        Sym::Nonterminal(nt) => match lens[*nt] {
                            Some(l) => total += l,
                            None => {
                                ok = false;
                                break;
                            }
                        },
                    }
                }
                if ok && lens[rule.lhs].is_none_or(|cur| total < cur) {
                    lens[rule.lhs] = Some(total);
                    changed = true;
                }
            }
            if !changed {
                return lens;
            }
        }
    }

    /// Nonterminals reachable from the start symbol.
    pub fn reachable_nonterminals(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nt_names.len()];
        let mut stack = vec![self.start];
        seen[self.start] = true;
        while let Some(nt) = stack.pop() {
            for &rid in &self.by_lhs[nt] {
                for sym in &self.rules[rid].rhs {
                    if let Sym::Nonterminal(child) = sym {
                        if !seen[*child] {
                            seen[*child] = true;
                            stack.push(*child);
                        }
                    }
                }
            }
        }
        seen
    }

    /// Terminals that occur in some rule of a reachable nonterminal.
    pub fn reachable_terminals(&self) -> Vec<bool> {
        let nts = self.reachable_nonterminals();
        let mut seen = vec![false; self.term_names.len()];
        for rule in &self.rules {
            if nts[rule.lhs] {
                for sym in &rule.rhs {
                    if let Sym::Terminal(t) = sym {
                        seen[*t] = true;
                    }
                }
            }
        }
        seen
    }

    /// Transitive reachability over edges `lhs -> nt` for every nonterminal
    /// occurrence on a right-hand side, restricted to `filter`.
    fn nt_closure(&self, mut edge: impl FnMut(&Rule) -> Vec<NonterminalId>) -> Vec<Vec<bool>> {
        let n = self.nt_names.len();
        let mut reach = vec![vec![false; n]; n];
        for rule in &self.rules {
            for child in edge(rule) {
                reach[rule.lhs][child] = true;
            }
        }
        // Floyd-Warshall style closure; grammars are small enough for O(n^3).
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    /// True if some nonterminal can derive a sentential form containing
    /// itself, i.e. the language may be infinite.
    pub fn is_recursive(&self) -> bool {
        let reach = self.nt_closure(|rule| {
            rule.rhs
                .iter()
                .filter_map(|s| match s {
                    Sym::Nonterminal(nt) => Some(*nt),
                    Sym::Terminal(_) => None,
                })
                .collect()
        });
        (0..self.nt_names.len()).any(|i| reach[i][i])
    }

    /// Nonterminals that sit on a cycle of unit rules (`A -> B` with a single
    /// nonterminal on the right-hand side). Such cycles make the number of
    /// derivations of a string unbounded, so parsing refuses them.
    pub fn unit_cycle_members(&self) -> Vec<NonterminalId> {
        let reach = self.nt_closure(|rule| match rule.rhs.as_slice() {
            [Sym::Nonterminal(nt)] => vec![*nt],
            _ => Vec::new(),
        });
        (0..self.nt_names.len()).filter(|&i| reach[i][i]).collect()
    }
}

/// How serious a [`Diagnostic`] is.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Severity {
    Warning,
    Error,
}

/// One finding from [`WeightedGrammar::validate`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{}: {}", tag, self.message)
    }
}

/// A grammar plus one probability per rule. Construction normalizes the
/// weights of each left-hand side to sum to one, so a `WeightedGrammar` is a
/// proper conditional distribution over rules by construction.
#[derive(Clone, PartialEq, Debug)]
pub struct WeightedGrammar<W> {
    grammar: Grammar,
    weights: Vec<W>,
}

impl<W: Weight> WeightedGrammar<W> {
    /// Normalizes `raw` per left-hand side and pairs it with the grammar.
    /// Raw weights must be finite and nonnegative, and each left-hand side
    /// needs at least one positive entry.
    pub fn new(grammar: Grammar, raw: Vec<W>) -> Result<Self, GrammarError> {
        if raw.len() != grammar.num_rules() {
            return Err(GrammarError::WeightCount {
                expected: raw.len(),
                rules: grammar.num_rules(),
            });
        }
        for (rule, w) in raw.iter().enumerate() {
            if !w.is_finite() || *w < W::zero() {
                return Err(GrammarError::InvalidWeight { rule });
            }
        }
        let mut weights = raw;
        for nt in 0..grammar.num_nonterminals() {
            let rule_ids = grammar.rules_for(nt);
            let total: W = rule_ids.iter().map(|&r| weights[r]).sum();
            if total <= W::zero() {
                return Err(GrammarError::ZeroWeightSum {
                    lhs: grammar.nonterminal_name(nt).to_string(),
                });
            }
            for &r in rule_ids {
                weights[r] = weights[r] / total;
            }
        }
        Ok(WeightedGrammar { grammar, weights })
    }

    /// Uniform distribution: each of a nonterminal's `k` rules gets `1/k`.
    pub fn uniform(grammar: Grammar) -> Self {
        let mut weights = vec![W::zero(); grammar.num_rules()];
        for nt in 0..grammar.num_nonterminals() {
            let rule_ids = grammar.rules_for(nt);
            let share = W::one() / W::from_usize(rule_ids.len()).expect("rule family size");
            for &r in rule_ids {
                weights[r] = share;
            }
        }
        WeightedGrammar { grammar, weights }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn weight(&self, rule: RuleId) -> W {
        self.weights[rule]
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    pub fn into_parts(self) -> (Grammar, Vec<W>) {
        (self.grammar, self.weights)
    }

    /// Checks distributional and structural health. Errors make parsing or
    /// sampling unsound (weight families off by more than the scalar's
    /// tolerance, unit-rule cycles); warnings flag suspicious but legal
    /// structure (unreachable or nonproductive symbols, duplicate rules).
    pub fn validate(&self) -> Vec<Diagnostic> {
        let g = &self.grammar;
        let mut out = Vec::new();
        let tol = W::normalization_tolerance();
        for nt in 0..g.num_nonterminals() {
            let total: W = g.rules_for(nt).iter().map(|&r| self.weights[r]).sum();
            if (total - W::one()).abs() > tol {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    message: format!(
                        "weights for '{}' sum to {} instead of 1",
                        g.nonterminal_name(nt),
                        total
                    ),
                });
            }
        }
        for (rule, w) in self.weights.iter().enumerate() {
            if !w.is_finite() || *w < W::zero() || *w > W::one() + tol {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    message: format!(
                        "weight {} of rule [{}] is outside [0, 1]",
                        w,
                        g.render_rule(rule)
                    ),
                });
            }
        }
        let cycle = g.unit_cycle_members();
        if !cycle.is_empty() {
            let names: Vec<&str> = cycle.iter().map(|&nt| g.nonterminal_name(nt)).collect();
            out.push(Diagnostic {
                severity: Severity::Error,
                message: format!("unit-rule cycle through {{{}}}", names.join(", ")),
            });
        }
        let productive = g.min_yield_lengths();
        for nt in 0..g.num_nonterminals() {
            if productive[nt].is_none() {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!(
                        "nonterminal '{}' is nonproductive: it derives no finite token string",
                        g.nonterminal_name(nt)
                    ),
                });
            }
        }
        let reachable = g.reachable_nonterminals();
        for nt in 0..g.num_nonterminals() {
            if !reachable[nt] {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!(
                        "nonterminal '{}' is unreachable from the start symbol",
                        g.nonterminal_name(nt)
                    ),
                });
            }
        }
        let term_reach = g.reachable_terminals();
        for t in 0..g.num_terminals() {
            if !term_reach[t] {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!("terminal '{}' is unreachable", g.terminal_name(t)),
                });
            }
        }
        let mut seen: HashMap<(NonterminalId, &[Sym]), RuleId> = HashMap::new();
        for (id, rule) in g.rules.iter().enumerate() {
            if let Some(first) = seen.insert((rule.lhs, rule.rhs.as_slice()), id) {
                out.push(Diagnostic {
                    severity: Severity::Warning,
                    message: format!(
                        "rule [{}] duplicates rule {}",
                        g.render_rule(id),
                        first
                    ),
                });
            }
        }
        out
    }

    /// True if no error-level diagnostic is present.
    pub fn is_sound(&self) -> bool {
        self.validate()
            .iter()
            .all(|d| d.severity != Severity::Error)
    }
}
