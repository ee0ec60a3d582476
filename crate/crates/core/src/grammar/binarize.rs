//! Left-branching binarization for CYK parsing.
//!
//! Every rule with three or more right-hand-side symbols is folded into a
//! chain of binary rules through fresh intermediate symbols, terminals inside
//! longer rules are lifted through fresh preterminal wrappers, and every
//! synthesized rule remembers the original rule it came from. The mapping is
//! a bijection on derivations: each parse tree of the binarized grammar
//! reconstructs exactly one parse tree of the original grammar, so parse
//! counts and rule statistics transfer without correction.
//!
//! Fresh symbols are named `@r<rule>.<k>` (chain intermediates) and
//! `@t:<terminal>` (preterminal wrappers). Names starting with `@` are
//! rejected by the grammar loader, so these can never collide with symbols
//! from a grammar file.

use std::collections::HashMap;

use crate::grammar::{Grammar, GrammarError, RuleId, Sym, TerminalId};

/// Identifier of a symbol in the binarized grammar. Ids below
/// `Grammar::num_nonterminals()` are the original nonterminals.
pub type BinSymId = usize;
/// Identifier of a binarized rule.
pub type BinRuleId = usize;

/// Where a binarized rule came from.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum RuleOrigin {
    /// Completes one application of the original rule.
    Complete(RuleId),
    /// Interior link of the binarization chain of the original rule.
    Partial(RuleId),
    /// Preterminal wrapper introduced for a terminal inside a longer rule.
    Preterminal,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum BinRhs {
    Term(TerminalId),
    Unit(BinSymId),
    Pair(BinSymId, BinSymId),
}

#[derive(Clone, Debug)]
pub(crate) struct BinRule {
    pub lhs: BinSymId,
    pub rhs: BinRhs,
    pub origin: RuleOrigin,
}

/// A grammar in binary form plus the lookup tables CYK needs. Owns a copy of
/// the source grammar so parses can resolve names and map back to original
/// rules without extra bookkeeping at the call site.
#[derive(Clone, Debug)]
pub struct BinarizedGrammar {
    grammar: Grammar,
    sym_names: Vec<String>,
    pub(crate) rules: Vec<BinRule>,
    pub(crate) lex: HashMap<TerminalId, Vec<BinRuleId>>,
    pub(crate) pair_index: HashMap<(BinSymId, BinSymId), Vec<BinRuleId>>,
    pub(crate) units_by_child: Vec<Vec<BinRuleId>>,
    pub(crate) unit_order: Vec<BinSymId>,
    pub(crate) start: BinSymId,
}

impl BinarizedGrammar {
    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn num_symbols(&self) -> usize {
        self.sym_names.len()
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn sym_name(&self, id: BinSymId) -> &str {
        &self.sym_names[id]
    }

    pub fn origin(&self, rule: BinRuleId) -> RuleOrigin {
        self.rules[rule].origin
    }

    /// True when the symbol is a nonterminal of the original grammar rather
    /// than a synthesized chain or preterminal symbol.
    pub fn is_original(&self, id: BinSymId) -> bool {
        id < self.grammar.num_nonterminals()
    }
}

/// Binarizes a grammar. Fails on unit-rule cycles, which would give some
/// strings unboundedly many derivations.
pub fn binarize(g: &Grammar) -> Result<BinarizedGrammar, GrammarError> {
    let cycle = g.unit_cycle_members();
    if !cycle.is_empty() {
        let names: Vec<&str> = cycle.iter().map(|&nt| g.nonterminal_name(nt)).collect();
        return Err(GrammarError::UnitCycle {
            cycle: names.join(", "),
        });
    }

    let mut sym_names: Vec<String> = (0..g.num_nonterminals())
        .map(|nt| g.nonterminal_name(nt).to_string())
        .collect();
    let mut rules: Vec<BinRule> = Vec::new();
    let mut preterm: HashMap<TerminalId, BinSymId> = HashMap::new();

    let mut preterm_sym = |t: TerminalId,
                           sym_names: &mut Vec<String>,
                           rules: &mut Vec<BinRule>|
     -> BinSymId {
        *preterm.entry(t).or_insert_with(|| {
            let id = sym_names.len();
            sym_names.push(format!("@t:{}", g.terminal_name(t)));
            rules.push(BinRule {
                lhs: id,
                rhs: BinRhs::Term(t),
                origin: RuleOrigin::Preterminal,
            });
            id
        })
    };

    for (rid, rule) in g.rules().iter().enumerate() {
        match rule.rhs.as_slice() {
            [Sym::Terminal(t)] => rules.push(BinRule {
                lhs: rule.lhs,
                rhs: BinRhs::Term(*t),
                origin: RuleOrigin::Complete(rid),
            }),
            [Sym::Nonterminal(nt)] => rules.push(BinRule {
                lhs: rule.lhs,
                rhs: BinRhs::Unit(*nt),
                origin: RuleOrigin::Complete(rid),
            }),
            rhs => {
                let syms: Vec<BinSymId> = rhs
                    .iter()
                    .map(|s| match s {
                        Sym::Nonterminal(nt) => *nt,
                        Sym::Terminal(t) => preterm_sym(*t, &mut sym_names, &mut rules),
                    })
                    .collect();
                let mut left = syms[0];
                for (k, &right) in syms[1..syms.len() - 1].iter().enumerate() {
                    let fresh = sym_names.len();
                    sym_names.push(format!("@r{rid}.{}", k + 2));
                    rules.push(BinRule {
                        lhs: fresh,
                        rhs: BinRhs::Pair(left, right),
                        origin: RuleOrigin::Partial(rid),
                    });
                    left = fresh;
                }
                rules.push(BinRule {
                    lhs: rule.lhs,
                    rhs: BinRhs::Pair(left, syms[syms.len() - 1]),
                    origin: RuleOrigin::Complete(rid),
                });
            }
        }
    }

    let mut lex: HashMap<TerminalId, Vec<BinRuleId>> = HashMap::new();
    let mut pair_index: HashMap<(BinSymId, BinSymId), Vec<BinRuleId>> = HashMap::new();
    let mut units_by_child: Vec<Vec<BinRuleId>> = vec![Vec::new(); sym_names.len()];
    for (id, rule) in rules.iter().enumerate() {
        match rule.rhs {
            BinRhs::Term(t) => lex.entry(t).or_default().push(id),
            BinRhs::Unit(child) => units_by_child[child].push(id),
            BinRhs::Pair(l, r) => pair_index.entry((l, r)).or_default().push(id),
        }
    }

    // Topological order over unit rules, child before parent, so one pass of
    // unit closure per chart cell is enough. Unit rules only ever connect
    // original nonterminals.
    let n = sym_names.len();
    let mut indegree = vec![0usize; n];
    for rule in &rules {
        if matches!(rule.rhs, BinRhs::Unit(_)) {
            indegree[rule.lhs] += 1;
        }
    }
    let mut queue: Vec<BinSymId> = (0..n).filter(|&s| indegree[s] == 0).collect();
    let mut unit_order = Vec::with_capacity(n);
    while let Some(sym) = queue.pop() {
        unit_order.push(sym);
        for &rid in &units_by_child[sym] {
            let parent = rules[rid].lhs;
            indegree[parent] -= 1;
            if indegree[parent] == 0 {
                queue.push(parent);
            }
        }
    }
    debug_assert_eq!(unit_order.len(), n, "unit graph must be acyclic here");

    Ok(BinarizedGrammar {
        grammar: g.clone(),
        sym_names,
        rules,
        lex,
        pair_index,
        units_by_child,
        unit_order,
        start: g.start(),
    })
}
