//! Trust-managed collaborative intrusion detection.
//!
//! Contributor nodes share detection rules; a fixed validator set scores each
//! rule, a ledger-hosted contract turns those scores into a per-rule trust
//! value, a decayed contributor reputation and an accept/reject decision, and
//! accepted rules become available to regular nodes through a
//! content-addressed store. [`harness`] drives honest and adversarial agents
//! through that workflow deterministically.

pub mod agents;
pub mod chain;
pub mod harness;
pub mod identity;
pub mod rulestore;
pub mod trm;
