//! Post-filters applied to fully derived samples.
//!
//! A filter sees the complete sample (tokens, derivation, depths) and votes
//! keep/reject. Filters are created from a textual spec `name` or
//! `name(arg1, arg2)` through a [`FilterRegistry`], which ships with three
//! built-ins and accepts custom factories under fresh names.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::num::Weight;
use crate::sampler::MrSample;

/// Predicate over a finished sample: `true` keeps, `false` rejects.
pub type FilterFn<W> = Arc<dyn Fn(&MrSample<W>) -> bool + Send + Sync>;

/// Builds a filter from its textual arguments.
pub type FilterFactory<W> = Box<dyn Fn(&[String]) -> Result<FilterFn<W>, FilterError> + Send + Sync>;

/// Parsed filter invocation: a name plus raw string arguments.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FilterSpec {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FilterError {
    #[error("unknown filter '{name}'")]
    UnknownFilter { name: String },
    #[error("a filter named '{name}' is already registered")]
    DuplicateName { name: String },
    #[error("filter '{name}': {reason}")]
    BadArgs { name: String, reason: String },
    #[error("malformed filter spec '{spec}': {reason}")]
    BadSpec { spec: String, reason: String },
}

impl FilterSpec {
    /// Parses `name` or `name(arg, arg, ...)`. Arguments are comma-separated
    /// and whitespace-trimmed; there is no quoting or nesting.
    pub fn parse(text: &str) -> Result<FilterSpec, FilterError> {
        let text = text.trim();
        let bad = |reason: &str| FilterError::BadSpec {
            spec: text.to_string(),
            reason: reason.to_string(),
        };
        if text.is_empty() {
            return Err(bad("empty spec"));
        }
        let Some(open) = text.find('(') else {
            if text.contains(')') {
                return Err(bad("')' without '('"));
            }
            return Ok(FilterSpec {
                name: text.to_string(),
                args: Vec::new(),
            });
        };
        if !text.ends_with(')') {
            return Err(bad("missing closing ')'"));
        }
        let name = text[..open].trim();
        if name.is_empty() {
            return Err(bad("missing filter name"));
        }
        let inner = &text[open + 1..text.len() - 1];
        if inner.contains('(') || inner.contains(')') {
            return Err(bad("nested parentheses are not supported"));
        }
        let args: Vec<String> = if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner.split(',').map(|a| a.trim().to_string()).collect()
        };
        if args.iter().any(String::is_empty) {
            return Err(bad("empty argument"));
        }
        Ok(FilterSpec {
            name: name.to_string(),
            args,
        })
    }
}

/// Named filter factories. Iteration order (and thus error reporting) is
/// alphabetical; compilation is pure lookup, so a registry can be shared
/// freely once built.
pub struct FilterRegistry<W> {
    factories: BTreeMap<String, FilterFactory<W>>,
}

impl<W: Weight> FilterRegistry<W> {
    /// Registry with no filters at all.
    pub fn empty() -> Self {
        FilterRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with the built-in filters:
    ///
    /// * `max-depth-of(NT, d)` — keep samples whose nesting depth of `NT` is
    ///   at most `d` (samples not using `NT` have depth -1 and always pass);
    /// * `must-contain(token)` — keep samples containing the token;
    /// * `forbid-adjacent(a, b)` — reject samples where token `a` is
    ///   immediately followed by token `b`.
    pub fn with_builtins() -> Self {
        let mut reg = FilterRegistry::empty();
        reg.register("max-depth-of", Box::new(max_depth_of))
            .expect("fresh registry");
        reg.register("must-contain", Box::new(must_contain))
            .expect("fresh registry");
        reg.register("forbid-adjacent", Box::new(forbid_adjacent))
            .expect("fresh registry");
        reg
    }

    /// Adds a factory under a new name; registering an existing name is an
    /// error rather than an override.
    pub fn register(
        &mut self,
        name: &str,
        factory: FilterFactory<W>,
    ) -> Result<(), FilterError> {
        if self.factories.contains_key(name) {
            return Err(FilterError::DuplicateName {
                name: name.to_string(),
            });
        }
        self.factories.insert(name.to_string(), factory);
        Ok(())
    }

    /// Instantiates the filter a spec names.
    pub fn compile(&self, spec: &FilterSpec) -> Result<FilterFn<W>, FilterError> {
        let factory = self
            .factories
            .get(&spec.name)
            .ok_or_else(|| FilterError::UnknownFilter {
                name: spec.name.clone(),
            })?;
        factory(&spec.args)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

impl<W: Weight> Default for FilterRegistry<W> {
    fn default() -> Self {
        FilterRegistry::with_builtins()
    }
}

fn arg_error<T>(name: &str, reason: impl Into<String>) -> Result<T, FilterError> {
    Err(FilterError::BadArgs {
        name: name.to_string(),
        reason: reason.into(),
    })
}

fn max_depth_of<W: Weight>(args: &[String]) -> Result<FilterFn<W>, FilterError> {
    let [nt, depth] = args else {
        return arg_error("max-depth-of", "expected (nonterminal, max-depth)");
    };
    let max: i64 = match depth.parse() {
        Ok(d) => d,
        Err(_) => return arg_error("max-depth-of", format!("'{depth}' is not an integer")),
    };
    let nt = nt.clone();
    Ok(Arc::new(move |sample: &MrSample<W>| {
        sample.depths.get(&nt).copied().unwrap_or(-1) <= max
    }))
}

fn must_contain<W: Weight>(args: &[String]) -> Result<FilterFn<W>, FilterError> {
    let [token] = args else {
        return arg_error("must-contain", "expected (token)");
    };
    let token = token.clone();
    Ok(Arc::new(move |sample: &MrSample<W>| {
        sample.tokens.iter().any(|t| *t == token)
    }))
}

fn forbid_adjacent<W: Weight>(args: &[String]) -> Result<FilterFn<W>, FilterError> {
    let [a, b] = args else {
        return arg_error("forbid-adjacent", "expected (first, second)");
    };
    let (a, b) = (a.clone(), b.clone());
    Ok(Arc::new(move |sample: &MrSample<W>| {
        !sample
            .tokens
            .windows(2)
            .any(|w| w[0] == a && w[1] == b)
    }))
}
