//! Exhaustive enumeration of a grammar's string language.
//!
//! For grammars whose reachable, productive part is non-recursive the
//! language is finite: it is materialized exactly, with an exact distinct
//! count, by a bottom-up product over per-nonterminal string sets. Recursive
//! grammars require a length bound and get a bounded fixpoint instead: the
//! result is every string up to that length, with no finiteness claim.
//!
//! Strings come back deduplicated and ordered by length, then
//! lexicographically by token text.

use std::collections::BTreeSet;

use crate::corpus::TokenSeq;
use crate::grammar::{Grammar, Sym, TerminalId};

/// Hard ceiling on materialized set sizes, to fail loudly instead of eating
/// all memory on combinatorial grammars.
const MATERIALIZE_CAP: usize = 1_000_000;

/// Result of [`enumerate_language`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnumeratedLanguage {
    /// Deduplicated strings in (length, lexicographic) order.
    pub strings: Vec<TokenSeq>,
    /// The whole language is finite (the usable part of the grammar is
    /// non-recursive).
    pub finite: bool,
    /// `strings` is the entire language, not a length-bounded slice.
    pub complete: bool,
    /// Exact number of distinct strings in the full language, when finite.
    pub language_size: Option<u64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EnumerateError {
    #[error("grammar is recursive: enumeration needs a max_len bound")]
    RecursiveNeedsMaxLen,
    #[error("language has more than {cap} strings; refusing to materialize")]
    TooLarge { cap: usize },
}

/// Enumerates the grammar's language, completely when it is finite or up to
/// `max_len` tokens otherwise.
pub fn enumerate_language(
    g: &Grammar,
    max_len: Option<usize>,
) -> Result<EnumeratedLanguage, EnumerateError> {
    let recursive = effectively_recursive(g);
    if recursive {
        let Some(bound) = max_len else {
            return Err(EnumerateError::RecursiveNeedsMaxLen);
        };
        let set = bounded_language(g, bound, MATERIALIZE_CAP)?;
        return Ok(EnumeratedLanguage {
            strings: into_sorted_strings(g, set),
            finite: false,
            complete: false,
            language_size: None,
        });
    }
    let full = full_language(g, MATERIALIZE_CAP)?;
    let size = full.len() as u64;
    let kept: BTreeSet<Vec<TerminalId>> = match max_len {
        Some(bound) => full.into_iter().filter(|s| s.len() <= bound).collect(),
        None => full,
    };
    let complete = kept.len() as u64 == size;
    Ok(EnumeratedLanguage {
        strings: into_sorted_strings(g, kept),
        finite: true,
        complete,
        language_size: Some(size),
    })
}

/// Distinct-string count of a finite language, or `None` when the language
/// is infinite or larger than `cap`.
pub(crate) fn exact_language_size(g: &Grammar, cap: usize) -> Option<u64> {
    if effectively_recursive(g) {
        return None;
    }
    full_language(g, cap).ok().map(|set| set.len() as u64)
}

/// Recursion that can actually pump strings: a cycle among nonterminals that
/// are both reachable from the start symbol and productive, over rules whose
/// right-hand sides are fully productive.
fn effectively_recursive(g: &Grammar) -> bool {
    let reachable = g.reachable_nonterminals();
    let productive = g.min_yield_lengths();
    let usable = |nt: usize| reachable[nt] && productive[nt].is_some();
    let n = g.num_nonterminals();
    let mut reach = vec![vec![false; n]; n];
    for rule in g.rules() {
        if !usable(rule.lhs) {
            continue;
        }
        let rhs_nts: Vec<usize> = rule
            .rhs
            .iter()
            .filter_map(|s| match s {
                Sym::Nonterminal(nt) => Some(*nt),
                Sym::Terminal(_) => None,
            })
            .collect();
        if rhs_nts.iter().any(|&nt| productive[nt].is_none()) {
            continue;
        }
        for &child in &rhs_nts {
            if usable(child) {
                reach[rule.lhs][child] = true;
            }
        }
    }
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
    (0..n).any(|i| reach[i][i])
}

type StringSet = BTreeSet<Vec<TerminalId>>;

/// Concatenation product of one rule's components, bounded and capped.
fn rule_product(
    rule_rhs: &[Sym],
    sets: &[StringSet],
    min_len: &[Option<usize>],
    bound: Option<usize>,
    cap: usize,
) -> Result<Vec<Vec<TerminalId>>, EnumerateError> {
    // Minimal token count still to come after each position, for pruning.
    let mut suffix_min = vec![0usize; rule_rhs.len() + 1];
    for (i, sym) in rule_rhs.iter().enumerate().rev() {
        let this = match sym {
            Sym::Terminal(_) => 1,
            // Unusable rules are filtered by the caller.
            Sym::Nonterminal(nt) => min_len[*nt].unwrap_or(usize::MAX / 2),
        };
        suffix_min[i] = suffix_min[i + 1].saturating_add(this);
    }
    let mut partial: Vec<Vec<TerminalId>> = vec![Vec::new()];
    for (i, sym) in rule_rhs.iter().enumerate() {
        let mut next = Vec::new();
        match sym {
            Sym::Terminal(t) => {
                for mut s in partial {
                    s.push(*t);
                    if bound.is_none_or(|b| s.len() + suffix_min[i + 1] <= b) {
                        next.push(s);
                    }
                }
            }
            Sym::Nonterminal(nt) => {
                for s in &partial {
                    for ext in &sets[*nt] {
                        if bound.is_some_and(|b| s.len() + ext.len() + suffix_min[i + 1] > b) {
                            continue;
                        }
                        let mut joined = s.clone();
                        joined.extend_from_slice(ext);
                        next.push(joined);
                        if next.len() > cap {
                            return Err(EnumerateError::TooLarge { cap });
                        }
                    }
                }
            }
        }
        partial = next;
        if partial.len() > cap {
            return Err(EnumerateError::TooLarge { cap });
        }
    }
    Ok(partial)
}

/// Exact language of a grammar whose usable part is non-recursive, via
/// memoized bottom-up evaluation from the start symbol.
fn full_language(g: &Grammar, cap: usize) -> Result<StringSet, EnumerateError> {
    let productive = g.min_yield_lengths();
    let mut sets: Vec<StringSet> = vec![StringSet::new(); g.num_nonterminals()];
    let mut done = vec![false; g.num_nonterminals()];
    let mut in_progress = vec![false; g.num_nonterminals()];

    fn eval(
        g: &Grammar,
        nt: usize,
        sets: &mut Vec<StringSet>,
        done: &mut Vec<bool>,
        in_progress: &mut Vec<bool>,
        productive: &[Option<usize>],
        cap: usize,
    ) -> Result<(), EnumerateError> {
        if done[nt] {
            return Ok(());
        }
        assert!(!in_progress[nt], "usable part checked non-recursive");
        in_progress[nt] = true;
        let mut out = StringSet::new();
        for &rid in g.rules_for(nt) {
            let rhs = &g.rule(rid).rhs;
            let usable = rhs.iter().all(|s| match s {
                Sym::Terminal(_) => true,
                Sym::Nonterminal(child) => productive[*child].is_some(),
            });
            if !usable {
                continue;
            }
            for sym in rhs {
                if let Sym::Nonterminal(child) = sym {
                    eval(g, *child, sets, done, in_progress, productive, cap)?;
                }
            }
            for s in rule_product(rhs, sets, productive, None, cap)? {
                out.insert(s);
                if out.len() > cap {
                    return Err(EnumerateError::TooLarge { cap });
                }
            }
        }
        sets[nt] = out;
        done[nt] = true;
        in_progress[nt] = false;
        Ok(())
    }

    eval(
        g,
        g.start(),
        &mut sets,
        &mut done,
        &mut in_progress,
        &productive,
        cap,
    )?;
    Ok(std::mem::take(&mut sets[g.start()]))
}

/// All strings of length at most `bound`, by monotone fixpoint iteration.
fn bounded_language(g: &Grammar, bound: usize, cap: usize) -> Result<StringSet, EnumerateError> {
    let min_len = g.min_yield_lengths();
    let mut sets: Vec<StringSet> = vec![StringSet::new(); g.num_nonterminals()];
    loop {
        let mut changed = false;
        for rule in g.rules() {
            let usable = rule.rhs.iter().all(|s| match s {
                Sym::Terminal(_) => true,
                Sym::Nonterminal(child) => min_len[*child].is_some(),
            });
            if !usable {
                continue;
            }
            for s in rule_product(&rule.rhs, &sets, &min_len, Some(bound), cap)? {
                if sets[rule.lhs].insert(s) {
                    changed = true;
                }
            }
            if sets[rule.lhs].len() > cap {
                return Err(EnumerateError::TooLarge { cap });
            }
        }
        if !changed {
            break;
        }
    }
    Ok(std::mem::take(&mut sets[g.start()]))
}

fn into_sorted_strings(g: &Grammar, set: StringSet) -> Vec<TokenSeq> {
    let mut named: Vec<TokenSeq> = set
        .into_iter()
        .map(|s| {
            s.into_iter()
                .map(|t| g.terminal_name(t).to_string())
                .collect()
        })
        .collect();
    named.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    named
}
