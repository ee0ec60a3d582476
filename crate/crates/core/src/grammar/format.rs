//! Plain-text grammar files.
//!
//! One rule per line: `LHS -> sym1 sym2 ... [@ weight]`. Terminals are
//! single-quoted, nonterminals are bare names, `#` starts a comment line, and
//! an optional `%start NT` directive overrides the default start symbol (the
//! left-hand side of the first rule). Rules without a `@ weight` annotation
//! get a raw weight of 1, so a family of unannotated rules comes out uniform
//! after per-lhs normalization, and mixed annotated/unannotated families
//! still normalize sensibly.

use std::collections::HashMap;
use std::path::Path;

use crate::grammar::{Grammar, GrammarError, NonterminalId, Rule, Sym, TerminalId, WeightedGrammar};
use crate::num::Weight;

/// Loads and normalizes a weighted grammar from a text file.
pub fn load_grammar<W: Weight>(path: impl AsRef<Path>) -> Result<WeightedGrammar<W>, GrammarError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GrammarError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_grammar(&text)
}

/// Writes the grammar back out in the same text format, one rule per line in
/// rule-id order, weights printed with 12 significant digits.
pub fn store_grammar<W: Weight>(
    wg: &WeightedGrammar<W>,
    path: impl AsRef<Path>,
) -> Result<(), GrammarError> {
    let path = path.as_ref();
    std::fs::write(path, render_grammar(wg)).map_err(|source| GrammarError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Parses grammar text. See the module docs for the format.
pub fn parse_grammar<W: Weight>(text: &str) -> Result<WeightedGrammar<W>, GrammarError> {
    let mut builder = Builder::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_start_matches('\u{feff}').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('%') {
            builder.directive(rest, line_no)?;
            continue;
        }
        let tokens = tokenize(line, line_no)?;
        builder.rule(tokens, line_no)?;
    }
    builder.finish()
}

/// Renders the grammar as text; the inverse of [`parse_grammar`] up to weight
/// rounding at 12 significant digits.
pub fn render_grammar<W: Weight>(wg: &WeightedGrammar<W>) -> String {
    let g = wg.grammar();
    let mut out = String::new();
    out.push_str("%start ");
    out.push_str(g.nonterminal_name(g.start()));
    out.push('\n');
    for id in 0..g.num_rules() {
        out.push_str(&g.render_rule(id));
        out.push_str(" @ ");
        out.push_str(&format_weight(
            wg.weight(id).to_f64().expect("weight fits in f64"),
        ));
        out.push('\n');
    }
    out
}

/// Formats a probability with 12 significant digits, preferring positional
/// notation for human-readable files and falling back to scientific form for
/// very small magnitudes.
fn format_weight(w: f64) -> String {
    if w == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", 11, w);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exponent.parse().expect("exponent");
    if !(-4..12).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{}e{}", mantissa, exp);
    }
    // Shift the 12 significant digits into positional form.
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if w < 0.0 {
        out.push('-');
    }
    let point = exp + 1; // digits before the decimal point
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..-point {
            out.push('0');
        }
        out.push_str(&digits);
    } else if (point as usize) >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        out = trimmed.to_string();
    }
    out
}

#[derive(Debug, PartialEq)]
enum Tok {
    Name(String),
    Term(String),
    Arrow,
    At,
}

fn syntax(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        message: message.into(),
    }
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>, GrammarError> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '\'' {
            chars.next();
            let mut name = String::new();
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                if c == '\'' {
                    closed = true;
                    break;
                }
                name.push(c);
            }
            if !closed {
                return Err(syntax(line_no, "unterminated quoted terminal"));
            }
            if name.is_empty() {
                return Err(syntax(line_no, "empty quoted terminal"));
            }
            if name.chars().any(char::is_whitespace) {
                return Err(syntax(
                    line_no,
                    format!("terminal '{name}' contains whitespace; terminals must be single tokens"),
                ));
            }
            if let Some(&(_, next)) = chars.peek() {
                if !next.is_whitespace() {
                    return Err(syntax(
                        line_no,
                        "quoted terminal must be followed by whitespace",
                    ));
                }
            }
            tokens.push(Tok::Term(name));
            continue;
        }
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        let chunk = &line[start..end];
        match chunk {
            "->" => tokens.push(Tok::Arrow),
            "@" => tokens.push(Tok::At),
            _ => {
                if chunk.contains("->") {
                    return Err(syntax(
                        line_no,
                        format!("missing spaces around '->' in '{chunk}'"),
                    ));
                }
                if chunk.contains('\'') {
                    return Err(syntax(
                        line_no,
                        format!("stray quote in '{chunk}'; terminals must be fully quoted"),
                    ));
                }
                tokens.push(Tok::Name(chunk.to_string()));
            }
        }
    }
    Ok(tokens)
}

/// Symbol names may not collide with the format's own markers. `@` is also
/// reserved as a prefix for synthesized binarization symbols, which keeps
/// those out of the user's namespace.
fn check_name(name: &str, line: usize) -> Result<(), GrammarError> {
    if name.starts_with('@') || name.starts_with('%') || name.starts_with('#') {
        return Err(syntax(
            line,
            format!("symbol name '{name}' may not start with '@', '%', or '#'"),
        ));
    }
    if name.contains('|') {
        return Err(syntax(
            line,
            format!("symbol name '{name}' may not contain '|'"),
        ));
    }
    Ok(())
}

#[derive(Default)]
struct Builder {
    nt_names: Vec<String>,
    term_names: Vec<String>,
    nt_ids: HashMap<String, NonterminalId>,
    term_ids: HashMap<String, TerminalId>,
    rules: Vec<Rule>,
    raw_weights: Vec<f64>,
    start: Option<NonterminalId>,
}

impl Builder {
    fn intern_nt(&mut self, name: &str) -> NonterminalId {
        if let Some(&id) = self.nt_ids.get(name) {
            return id;
        }
        let id = self.nt_names.len();
        self.nt_names.push(name.to_string());
        self.nt_ids.insert(name.to_string(), id);
        id
    }

    fn intern_term(&mut self, name: &str) -> TerminalId {
        if let Some(&id) = self.term_ids.get(name) {
            return id;
        }
        let id = self.term_names.len();
        self.term_names.push(name.to_string());
        self.term_ids.insert(name.to_string(), id);
        id
    }

    fn directive(&mut self, rest: &str, line: usize) -> Result<(), GrammarError> {
        let mut parts = rest.split_whitespace();
        match parts.next() {
            Some("start") => {
                let name = parts
                    .next()
                    .ok_or_else(|| syntax(line, "%start needs a nonterminal name"))?;
                if parts.next().is_some() {
                    return Err(syntax(line, "%start takes exactly one name"));
                }
                check_name(name, line)?;
                if self.start.is_some() {
                    return Err(GrammarError::DuplicateStart { line });
                }
                self.start = Some(self.intern_nt(name));
                Ok(())
            }
            Some(other) => Err(syntax(line, format!("unknown directive '%{other}'"))),
            None => Err(syntax(line, "empty directive")),
        }
    }

    fn rule(&mut self, tokens: Vec<Tok>, line: usize) -> Result<(), GrammarError> {
        let mut iter = tokens.into_iter();
        let lhs = match iter.next() {
            Some(Tok::Name(name)) => {
                check_name(&name, line)?;
                self.intern_nt(&name)
            }
            Some(Tok::Term(_)) => {
                return Err(syntax(line, "left-hand side must be a bare nonterminal"))
            }
            _ => return Err(syntax(line, "expected a rule `LHS -> sym ...`")),
        };
        match iter.next() {
            Some(Tok::Arrow) => {}
            _ => return Err(syntax(line, "expected '->' after the left-hand side")),
        }
        let mut rhs = Vec::new();
        let mut weight = None;
        while let Some(tok) = iter.next() {
            match tok {
                Tok::Name(name) => {
                    check_name(&name, line)?;
                    rhs.push(Sym::Nonterminal(self.intern_nt(&name)));
                }
                Tok::Term(name) => rhs.push(Sym::Terminal(self.intern_term(&name))),
                Tok::Arrow => return Err(syntax(line, "unexpected second '->'")),
                Tok::At => {
                    let value = match iter.next() {
                        Some(Tok::Name(text)) => text
                            .parse::<f64>()
                            .map_err(|_| syntax(line, format!("invalid weight '{text}'")))?,
                        _ => return Err(syntax(line, "expected a number after '@'")),
                    };
                    if iter.next().is_some() {
                        return Err(syntax(line, "unexpected tokens after the weight"));
                    }
                    if value < 0.0 {
                        return Err(GrammarError::NegativeWeight {
                            line,
                            weight: value,
                        });
                    }
                    if !value.is_finite() {
                        return Err(syntax(line, "weight must be finite"));
                    }
                    weight = Some(value);
                    break;
                }
            }
        }
        if rhs.is_empty() {
            return Err(syntax(line, "empty right-hand side"));
        }
        self.rules.push(Rule { lhs, rhs });
        self.raw_weights.push(weight.unwrap_or(1.0));
        Ok(())
    }

    fn finish<W: Weight>(self) -> Result<WeightedGrammar<W>, GrammarError> {
        if self.rules.is_empty() {
            return Err(GrammarError::Empty);
        }
        let start = self.start.unwrap_or(self.rules[0].lhs);
        let grammar = Grammar::from_parts(self.nt_names, self.term_names, self.rules, start)?;
        let raw = self.raw_weights.iter().map(|&w| W::from_config(w)).collect();
        WeightedGrammar::new(grammar, raw)
    }
}
