//! Snort-like single-line rules and their canonical form.
//!
//! ```text
//! alert tcp $EXTERNAL_NET any -> $HOME_NET 80 (msg:"x"; content:"abc"; sid:1;)
//! ```
//!
//! The canonical form collapses header whitespace, trims every option, drops
//! whitespace around the option key separator, collapses whitespace outside
//! quoted strings and sorts the options. Two rules are duplicates iff their
//! canonical forms are byte-equal.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("empty rule")]
    Empty,
    #[error("rule has no parenthesised option list")]
    MissingOptions,
    #[error("bad rule header: {0}")]
    Header(String),
    #[error("unterminated quoted string in options")]
    UnterminatedQuote,
    #[error("rule has no options")]
    NoOptions,
}

const HEADER_FIELDS: usize = 7;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DetectionRule {
    rule_text: String,
    canonical_form: String,
}

impl DetectionRule {
    pub fn parse(rule_text: &str) -> Result<Self, RuleError> {
        let canonical_form = canonicalize(rule_text)?;
        Ok(Self {
            rule_text: rule_text.to_string(),
            canonical_form,
        })
    }

    pub fn rule_text(&self) -> &str {
        &self.rule_text
    }

    pub fn canonical_form(&self) -> &str {
        &self.canonical_form
    }

    pub fn is_duplicate_of(&self, other: &DetectionRule) -> bool {
        self.canonical_form == other.canonical_form
    }

    /// Value of the first option with this key, unquoted.
    pub fn option(&self, key: &str) -> Option<String> {
        let body = self.canonical_form.split_once(" (")?.1;
        split_options(body.strip_suffix(')')?)
            .ok()?
            .into_iter()
            .find_map(|opt| {
                let (k, v) = opt.split_once(':')?;
                (k == key).then(|| v.trim_matches('"').to_string())
            })
    }

    /// Re-spells the rule with rotated option order and padded whitespace.
    /// The canonical form is unchanged.
    pub fn cosmetic_variant(&self, salt: usize) -> DetectionRule {
        let canonical = self.canonical_form();
        let open = canonical.find('(').expect("canonical form has options");
        let body = &canonical[open + 1..canonical.len() - 1];
        let mut options = split_options(body).expect("canonical form re-splits");
        let n = options.len();
        options.rotate_left(salt % n);
        let sep = if salt.is_multiple_of(2) { ";  " } else { " ; " };
        let header = canonical[..open].split_whitespace().collect::<Vec<_>>().join("  ");
        let text = format!("{header} ( {} )", options.join(sep));
        DetectionRule::parse(&text).expect("variant of a valid rule parses")
    }
}

impl fmt::Debug for DetectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DetectionRule({:?})", self.canonical_form)
    }
}

impl fmt::Display for DetectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rule_text)
    }
}

impl Serialize for DetectionRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.rule_text)
    }
}

impl<'de> Deserialize<'de> for DetectionRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DetectionRule::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub fn canonicalize(rule_text: &str) -> Result<String, RuleError> {
    let text = rule_text.trim();
    if text.is_empty() {
        return Err(RuleError::Empty);
    }
    let open = text.find('(').ok_or(RuleError::MissingOptions)?;
    let body = text[open + 1..]
        .strip_suffix(')')
        .ok_or(RuleError::MissingOptions)?;

    let header: Vec<&str> = text[..open].split_whitespace().collect();
    if header.len() != HEADER_FIELDS {
        return Err(RuleError::Header(format!(
            "expected {HEADER_FIELDS} fields, found {}",
            header.len()
        )));
    }
    if !matches!(header[4], "->" | "<>") {
        return Err(RuleError::Header(format!("bad direction {:?}", header[4])));
    }

    let mut options = split_options(body)?;
    if options.is_empty() {
        return Err(RuleError::NoOptions);
    }
    options.sort();
    Ok(format!("{} ({};)", header.join(" "), options.join("; ")))
}

/// Splits an option body on `;` outside quotes and normalises each option.
fn split_options(body: &str) -> Result<Vec<String>, RuleError> {
    let mut options = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' if in_quotes => {
                current.push(c);
                if let Some(next) = chars.next() {
                    current.push(next);
                }
            }
            '"' => {
                in_quotes = !in_quotes;
                current.push(c);
            }
            ';' if !in_quotes => {
                push_option(&mut options, &current);
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if in_quotes {
        return Err(RuleError::UnterminatedQuote);
    }
    push_option(&mut options, &current);
    Ok(options)
}

fn push_option(options: &mut Vec<String>, raw: &str) {
    let normalized = normalize_option(raw);
    if !normalized.is_empty() {
        options.push(normalized);
    }
}

fn normalize_option(raw: &str) -> String {
    let collapsed = collapse_unquoted_whitespace(raw.trim());
    match find_unquoted(&collapsed, ':') {
        Some(idx) => format!(
            "{}:{}",
            collapsed[..idx].trim_end(),
            collapsed[idx + 1..].trim_start()
        ),
        None => collapsed,
    }
}

fn collapse_unquoted_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_quotes = false;
    let mut escaped = false;
    let mut pending_space = false;
    for c in s.chars() {
        if in_quotes {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_quotes = false;
            }
            continue;
        }
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        if c == '"' {
            in_quotes = true;
        }
        out.push(c);
    }
    out
}

fn find_unquoted(s: &str, needle: char) -> Option<usize> {
    let mut in_quotes = false;
    let mut escaped = false;
    for (idx, c) in s.char_indices() {
        if in_quotes {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_quotes = false;
            }
        } else if c == '"' {
            in_quotes = true;
        } else if c == needle {
            return Some(idx);
        }
    }
    None
}
