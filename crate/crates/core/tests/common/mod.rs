//! Brute-force oracles shared by the integration tests. These deliberately
//! avoid the library's chart parser and enumerator so they can serve as
//! independent ground truth: the oracle works on the original n-ary rules by
//! naive span splitting and leftmost rewriting.

// Each test target compiles its own copy and uses a different subset.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use mrsynth::grammar::{Grammar, NonterminalId, Sym, TerminalId};

type SpanKey = (NonterminalId, usize, usize);

/// Counts the derivation trees of `tokens` under `g` by memoized span
/// splitting. Panics on unit cycles (which the library rejects anyway); only
/// valid for the epsilon-free grammars this crate accepts.
pub fn oracle_tree_count(g: &Grammar, tokens: &[String]) -> u64 {
    let ids: Option<Vec<TerminalId>> = tokens.iter().map(|t| g.terminal_id(t)).collect();
    let Some(ids) = ids else {
        return 0;
    };
    if ids.is_empty() {
        return 0;
    }
    let mut memo: HashMap<SpanKey, Option<u64>> = HashMap::new();
    count_nt(g, g.start(), &ids, 0, ids.len(), &mut memo)
}

fn count_nt(
    g: &Grammar,
    nt: NonterminalId,
    toks: &[TerminalId],
    i: usize,
    j: usize,
    memo: &mut HashMap<SpanKey, Option<u64>>,
) -> u64 {
    if let Some(state) = memo.get(&(nt, i, j)) {
        return state.expect("unit cycle reached the oracle");
    }
    memo.insert((nt, i, j), None);
    let mut total = 0u64;
    for &rid in g.rules_for(nt) {
        total += count_seq(g, &g.rule(rid).rhs, toks, i, j, memo);
    }
    memo.insert((nt, i, j), Some(total));
    total
}

fn count_seq(
    g: &Grammar,
    syms: &[Sym],
    toks: &[TerminalId],
    i: usize,
    j: usize,
    memo: &mut HashMap<SpanKey, Option<u64>>,
) -> u64 {
    match syms {
        [] => (i == j) as u64,
        [sym, rest @ ..] => match sym {
            Sym::Terminal(t) => {
                if i < j && toks[i] == *t {
                    count_seq(g, rest, toks, i + 1, j, memo)
                } else {
                    0
                }
            }
            Sym::Nonterminal(nt) => {
                let mut total = 0;
                // Epsilon-free: every symbol consumes at least one token, so
                // the first one can reach at most j - |rest|. This bound also
                // keeps left-recursive rules off the identical span.
                for k in (i + 1)..=j.saturating_sub(rest.len()) {
                    let left = count_nt(g, *nt, toks, i, k, memo);
                    if left > 0 {
                        total += left * count_seq(g, rest, toks, k, j, memo);
                    }
                }
                total
            }
        },
    }
}

/// Enumerates the full language of a finite grammar by exhaustive leftmost
/// rewriting. Diverges on grammars with usable recursion — only call it on
/// finite languages.
pub fn oracle_language(g: &Grammar) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<Vec<Sym>> = vec![vec![Sym::Nonterminal(g.start())]];
    while let Some(form) = stack.pop() {
        match form
            .iter()
            .position(|s| matches!(s, Sym::Nonterminal(_)))
        {
            None => {
                out.insert(
                    form.iter()
                        .map(|s| match s {
                            Sym::Terminal(t) => g.terminal_name(*t).to_string(),
                            Sym::Nonterminal(_) => unreachable!(),
                        })
                        .collect(),
                );
            }
            Some(pos) => {
                let Sym::Nonterminal(nt) = form[pos] else {
                    unreachable!()
                };
                for &rid in g.rules_for(nt) {
                    let mut next = Vec::with_capacity(form.len() + 3);
                    next.extend_from_slice(&form[..pos]);
                    next.extend_from_slice(&g.rule(rid).rhs);
                    next.extend_from_slice(&form[pos + 1..]);
                    stack.push(next);
                }
            }
        }
    }
    out
}

/// Every string over `alphabet` of length 1..=max_len, in counting order.
pub fn all_strings(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut indices = vec![0usize; len];
        loop {
            out.push(indices.iter().map(|&i| alphabet[i].to_string()).collect());
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                indices[pos] += 1;
                if indices[pos] < alphabet.len() {
                    break;
                }
                indices[pos] = 0;
            }
            if indices.iter().all(|&i| i == 0) {
                break;
            }
        }
    }
    out
}
