//! Rule bundles: a rule, its IDMEF-style description, and the contributor.
//!
//! The serialized form (also the `.bundle` file format) is UTF-8 text with
//! one `key=value` line per field, keys in ascending order, every line
//! terminated by `\n`. Backslash, newline and carriage return inside values
//! are escaped as `\\`, `\n` and `\r`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rule::{DetectionRule, RuleError};
use crate::identity::{content_address, ContentAddress, IdentityError, PublicKey};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BundleError {
    #[error("metadata field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, BundleError> {
        match s {
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            other => Err(BundleError::Malformed(format!("unknown severity {other:?}"))),
        }
    }
}

/// Minimal IDMEF-inspired description of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMetadata {
    pub classification: String,
    pub severity: Severity,
    pub description: String,
    pub created_at: u64,
    pub analyzer_id: String,
}

impl RuleMetadata {
    pub fn validate(&self) -> Result<(), BundleError> {
        if self.classification.trim().is_empty() {
            return Err(BundleError::EmptyField("classification"));
        }
        if self.description.trim().is_empty() {
            return Err(BundleError::EmptyField("description"));
        }
        if self.analyzer_id.trim().is_empty() {
            return Err(BundleError::EmptyField("analyzer_id"));
        }
        Ok(())
    }

    /// Builds metadata from the rule's own `msg` and `classtype` options.
    pub fn describe(rule: &DetectionRule, analyzer_id: &str, created_at: u64) -> Self {
        let classification = rule
            .option("classtype")
            .unwrap_or_else(|| "misc-activity".to_string());
        let severity = match rule.option("priority").and_then(|p| p.parse::<u8>().ok()) {
            Some(1) => Severity::High,
            Some(2) => Severity::Medium,
            Some(_) => Severity::Low,
            None => severity_for_class(&classification),
        };
        Self {
            description: rule.option("msg").unwrap_or_else(|| "unnamed rule".to_string()),
            classification,
            severity,
            created_at,
            analyzer_id: analyzer_id.to_string(),
        }
    }
}

fn severity_for_class(classtype: &str) -> Severity {
    match classtype {
        "trojan-activity" | "web-application-attack" | "attempted-admin" | "shellcode-detect" => {
            Severity::High
        }
        "attempted-recon" | "misc-activity" | "policy-violation" | "not-suspicious" => Severity::Low,
        _ => Severity::Medium,
    }
}

/// The stored unit `Z = (rule, metadata)` plus the contributor's key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBundle {
    pub rule: DetectionRule,
    pub metadata: RuleMetadata,
    pub contributor: PublicKey,
}

impl RuleBundle {
    pub fn new(
        rule: DetectionRule,
        metadata: RuleMetadata,
        contributor: PublicKey,
    ) -> Result<Self, BundleError> {
        metadata.validate()?;
        Ok(Self {
            rule,
            metadata,
            contributor,
        })
    }

    pub fn to_canonical_string(&self) -> String {
        let m = &self.metadata;
        let fields: [(&str, String); 7] = [
            ("analyzer_id", m.analyzer_id.clone()),
            ("classification", m.classification.clone()),
            ("contributor", self.contributor.to_hex()),
            ("created_at", m.created_at.to_string()),
            ("description", m.description.clone()),
            ("rule", self.rule.rule_text().to_string()),
            ("severity", m.severity.to_string()),
        ];
        let mut out = String::new();
        for (key, value) in fields {
            out.push_str(key);
            out.push('=');
            out.push_str(&escape(&value));
            out.push('\n');
        }
        out
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        self.to_canonical_string().into_bytes()
    }

    pub fn address(&self) -> ContentAddress {
        content_address(&self.to_canonical_bytes())
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self, BundleError> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| BundleError::Malformed(format!("not UTF-8: {e}")))?;
        text.parse()
    }
}

impl FromStr for RuleBundle {
    type Err = BundleError;

    /// Strict: exactly the seven keys, in order, each line `\n`-terminated.
    fn from_str(text: &str) -> Result<Self, BundleError> {
        const KEYS: [&str; 7] = [
            "analyzer_id",
            "classification",
            "contributor",
            "created_at",
            "description",
            "rule",
            "severity",
        ];
        let body = text
            .strip_suffix('\n')
            .ok_or_else(|| BundleError::Malformed("missing trailing newline".into()))?;
        let lines: Vec<&str> = body.split('\n').collect();
        if lines.len() != KEYS.len() {
            return Err(BundleError::Malformed(format!(
                "expected {} fields, found {}",
                KEYS.len(),
                lines.len()
            )));
        }
        let mut values = Vec::with_capacity(KEYS.len());
        for (line, key) in lines.iter().zip(KEYS) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BundleError::Malformed(format!("no `=` in {line:?}")))?;
            if k != key {
                return Err(BundleError::Malformed(format!("expected key {key}, found {k}")));
            }
            values.push(unescape(v)?);
        }
        let [analyzer_id, classification, contributor, created_at, description, rule, severity]: [String; 7] =
            values.try_into().expect("length checked");
        let metadata = RuleMetadata {
            classification,
            severity: severity.parse()?,
            description,
            created_at: created_at
                .parse()
                .map_err(|_| BundleError::Malformed(format!("bad created_at {created_at:?}")))?,
            analyzer_id,
        };
        RuleBundle::new(DetectionRule::parse(&rule)?, metadata, contributor.parse()?)
    }
}

fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(value: &str) -> Result<String, BundleError> {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(BundleError::Malformed(format!("bad escape \\{other:?}")));
            }
        }
    }
    Ok(out)
}
