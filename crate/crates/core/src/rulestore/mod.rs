//! Content-addressed storage for rule bundles, standing in for the shared
//! decentralised storage network.

mod bundle;
mod corpus;
mod rule;
mod store;

use std::collections::BTreeSet;

pub use bundle::{BundleError, RuleBundle, RuleMetadata, Severity};
pub use corpus::{Corpus, CorpusError, GroundTruth, RULE_EXTENSION};
pub use rule::{canonicalize, DetectionRule, RuleError};
pub use store::{audit_bundle_dir, DirAudit, RuleStore, StoreAccess, StoreError, BUNDLE_EXTENSION};

/// True iff `rule` has already been seen, by canonical form.
pub fn is_duplicate(rule: &DetectionRule, seen: &BTreeSet<String>) -> bool {
    seen.contains(rule.canonical_form())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_lookup() {
        let a = DetectionRule::parse("alert tcp any any -> any 80 (content:\"a\"; sid:1;)").unwrap();
        let a2 = DetectionRule::parse("alert tcp any any  -> any 80 (sid:1;  content:\"a\")").unwrap();
        let b = DetectionRule::parse("alert tcp any any -> any 80 (content:\"b\"; sid:2;)").unwrap();
        let seen: BTreeSet<String> = [a.canonical_form().to_string()].into();
        assert!(is_duplicate(&a2, &seen));
        assert!(!is_duplicate(&b, &seen));
    }
}
