//! Ground-truth rule corpus.
//!
//! Layout on disk:
//!
//! ```text
//! corpus/valid/*.rule
//! corpus/invalid/*.rule
//! ```
//!
//! Each `.rule` file holds one rule per line; blank lines and lines starting
//! with `#` are skipped. Files are read in name order.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::rule::{DetectionRule, RuleError};

pub const RULE_EXTENSION: &str = "rule";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus directory {0} not found")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin} line {line}: {source}")]
    Rule {
        origin: String,
        line: usize,
        source: RuleError,
    },
    #[error("rule appears more than once in the corpus: {0}")]
    Duplicate(String),
    #[error("corpus has no {0} rules")]
    Empty(&'static str),
}

#[derive(Debug, Clone)]
pub struct Corpus {
    valid: Vec<DetectionRule>,
    invalid: Vec<DetectionRule>,
}

impl Corpus {
    pub fn from_rules(
        valid: Vec<DetectionRule>,
        invalid: Vec<DetectionRule>,
    ) -> Result<Self, CorpusError> {
        if valid.is_empty() {
            return Err(CorpusError::Empty("valid"));
        }
        if invalid.is_empty() {
            return Err(CorpusError::Empty("invalid"));
        }
        let mut seen = BTreeSet::new();
        for rule in valid.iter().chain(&invalid) {
            if !seen.insert(rule.canonical_form()) {
                return Err(CorpusError::Duplicate(rule.canonical_form().to_string()));
            }
        }
        Ok(Self { valid, invalid })
    }

    pub fn from_texts(valid: &str, invalid: &str) -> Result<Self, CorpusError> {
        Self::from_rules(parse_lines(valid, "valid")?, parse_lines(invalid, "invalid")?)
    }

    pub fn load_dir(root: &Path) -> Result<Self, CorpusError> {
        if !root.is_dir() {
            return Err(CorpusError::Missing(root.to_path_buf()));
        }
        Self::from_rules(
            load_split(&root.join("valid"))?,
            load_split(&root.join("invalid"))?,
        )
    }

    pub fn valid(&self) -> &[DetectionRule] {
        &self.valid
    }

    pub fn invalid(&self) -> &[DetectionRule] {
        &self.invalid
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            valid: self.valid.iter().map(|r| r.canonical_form().to_string()).collect(),
            invalid: self.invalid.iter().map(|r| r.canonical_form().to_string()).collect(),
        }
    }
}

fn load_split(dir: &Path) -> Result<Vec<DetectionRule>, CorpusError> {
    if !dir.is_dir() {
        return Err(CorpusError::Missing(dir.to_path_buf()));
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == RULE_EXTENSION))
        .collect();
    files.sort();
    let mut rules = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(io(&file))?;
        rules.extend(parse_lines(&text, &file.display().to_string())?);
    }
    Ok(rules)
}

fn parse_lines(text: &str, origin: &str) -> Result<Vec<DetectionRule>, CorpusError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map(|(idx, l)| {
            DetectionRule::parse(l).map_err(|source| CorpusError::Rule {
                origin: origin.to_string(),
                line: idx + 1,
                source,
            })
        })
        .collect()
}

/// A validator's local reference database, keyed by canonical form.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    valid: BTreeSet<String>,
    invalid: BTreeSet<String>,
}

impl GroundTruth {
    pub fn is_valid(&self, rule: &DetectionRule) -> bool {
        self.valid.contains(rule.canonical_form())
    }

    pub fn is_known_invalid(&self, rule: &DetectionRule) -> bool {
        self.invalid.contains(rule.canonical_form())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: &str = "# valid\nalert tcp any any -> any 80 (sid:1;)\n\nalert tcp any any -> any 81 (sid:2;)\n";
    const I: &str = "alert ip any any -> any any (sid:3;)\n";

    #[test]
    fn parses_texts_and_builds_ground_truth() {
        let c = Corpus::from_texts(V, I).unwrap();
        assert_eq!(c.valid().len(), 2);
        let gt = c.ground_truth();
        let cosmetic = DetectionRule::parse("alert  tcp any any -> any 80 ( sid : 1 ; )").unwrap();
        assert!(gt.is_valid(&cosmetic));
        assert!(gt.is_known_invalid(&c.invalid()[0]));
    }

    #[test]
    fn rejects_overlap_and_bad_lines() {
        assert!(matches!(
            Corpus::from_texts(V, "alert tcp any any -> any 80 (sid:1;)"),
            Err(CorpusError::Duplicate(_))
        ));
        assert!(matches!(
            Corpus::from_texts("nonsense", I),
            Err(CorpusError::Rule { line: 1, .. })
        ));
        assert!(matches!(Corpus::from_texts(V, "# none"), Err(CorpusError::Empty("invalid"))));
    }

    #[test]
    fn loads_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("valid")).unwrap();
        fs::create_dir_all(dir.path().join("invalid")).unwrap();
        fs::write(dir.path().join("valid/a.rule"), V).unwrap();
        fs::write(dir.path().join("valid/ignored.txt"), "junk").unwrap();
        fs::write(dir.path().join("invalid/b.rule"), I).unwrap();
        let c = Corpus::load_dir(dir.path()).unwrap();
        assert_eq!((c.valid().len(), c.invalid().len()), (2, 1));

        assert!(matches!(
            Corpus::load_dir(&dir.path().join("nope")),
            Err(CorpusError::Missing(_))
        ));
    }
}
