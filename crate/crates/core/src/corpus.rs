//! Token sequences and small helpers shared by estimation, analytics, and the
//! command-line tools. Meaning representations are whitespace-tokenized: one
//! instance is one line, one token is one maximal run of non-whitespace.

use std::path::Path;

/// One tokenized instance.
pub type TokenSeq = Vec<String>;

/// Splits an instance into tokens on whitespace. Empty lines tokenize to an
/// empty sequence, which callers treat as "no instance".
pub fn tokenize(line: &str) -> TokenSeq {
    line.split_whitespace().map(str::to_string).collect()
}

/// Joins tokens back into the canonical single-space surface form.
pub fn detokenize(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Reads a corpus of one instance per line, skipping blank lines.
pub fn read_corpus(path: impl AsRef<Path>) -> std::io::Result<Vec<TokenSeq>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(tokenize)
        .filter(|t| !t.is_empty())
        .collect())
}
