//! Scenario runner: loads a scenario, drives agents round by round through
//! registration, submission, validation and confirmation, and writes
//! plot-ready CSV artifacts.
//!
//! One round is one full submit, vote, decide cycle for every contributor,
//! taken in scenario order. Time is logical; the only clock is the ledger's
//! transaction count.

mod config;
mod output;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use config::ScenarioConfig;
pub use output::{emit_csv, ARTIFACT_FILES};
pub use run::{
    run_scenario, run_with_corpus, Rejection, RunArtifacts, SubmissionRecord, TrajectoryPoint,
    TrustTrajectory,
};

use crate::agents::AgentError;
use crate::chain::{DecisionRecord, Ledger, TransactionLog};
use crate::rulestore::CorpusError;
use crate::trm::{
    aggregate_rule_trust, decide_validity, reputation_bounds, rule_trust_bounds, TrmParams,
    BOUND_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invariant violated: {}", .0.join("; "))]
    Invariant(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code for this error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant(_) => 3,
            HarnessError::Io { .. } => 4,
        }
    }
}

impl From<CorpusError> for HarnessError {
    fn from(e: CorpusError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<AgentError> for HarnessError {
    fn from(e: AgentError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// Checks every recorded rule trust and reputation against the analytic
/// bounds, and re-derives each trust value and decision from its votes.
pub fn verify_decision_bounds(params: &TrmParams, decisions: &[DecisionRecord]) -> Vec<String> {
    let rule_bounds = rule_trust_bounds(params);
    let mut violations = Vec::new();
    for d in decisions {
        if !rule_bounds.contains(d.trust.t) {
            violations.push(format!("rule {}: t = {} outside {rule_bounds:?}", d.rule, d.trust.t));
        }
        let rep_bounds = reputation_bounds(params, d.contributions_after);
        if !rep_bounds.contains(d.reputation_after) {
            violations.push(format!(
                "contributor {} at m = {}: T = {} outside {rep_bounds:?}",
                d.contributor, d.contributions_after, d.reputation_after
            ));
        }
        match (aggregate_rule_trust(&d.votes, params), decide_validity(&d.votes, params)) {
            (Ok(t), Ok(decision)) => {
                if (t - d.trust.t).abs() > BOUND_TOLERANCE || decision != d.trust.decision {
                    violations.push(format!("rule {}: recorded trust does not match votes", d.rule));
                }
            }
            (Err(e), _) | (_, Err(e)) => violations.push(format!("rule {}: {e}", d.rule)),
        }
    }
    violations
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub transactions: usize,
    pub decisions: usize,
    pub state_digest: String,
    /// `None` when the log carries no checkpoint.
    pub checkpoint_matches: Option<bool>,
}

/// Re-folds a transaction log from its genesis record.
pub fn replay_log(log: &TransactionLog) -> Result<(Ledger, ReplayReport), HarnessError> {
    let ledger = Ledger::replay(log.genesis.clone(), &log.transactions)
        .map_err(|e| HarnessError::Invariant(vec![e.to_string()]))?;
    let state_digest = ledger.state_digest();
    let checkpoint_matches = log.checkpoint.as_ref().map(|cp| {
        cp.transactions == log.transactions.len() && cp.state_digest == state_digest
    });
    let report = ReplayReport {
        transactions: log.transactions.len(),
        decisions: ledger.state().decisions.len(),
        state_digest,
        checkpoint_matches,
    };
    Ok((ledger, report))
}
