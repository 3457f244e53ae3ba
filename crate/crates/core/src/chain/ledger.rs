//! The simulated permissioned ledger and the trust/storage contracts it
//! hosts.
//!
//! Transactions are applied one at a time in submission order. Only
//! transactions that pass admission are appended to the log, so the ledger
//! state is a pure fold over the log and [`Ledger::replay`] reproduces it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::tx::{
    ChainEvent, ChainTransaction, EventKind, NodeRole, RegistrationRequest, RegistrationResponse,
    TxKind, TxPayload,
};
use crate::identity::{ContentAddress, PublicKey};
use crate::rulestore::RuleStore;
use crate::trm::{
    evaluate_rule, update_reputation, ContributorReputation, Decision, RuleTrust, TrmError,
    TrmParams, VoteScore,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("rule {0} is already pending or confirmed")]
    RejectedDuplicate(ContentAddress),
    #[error("not authorised: {0}")]
    RejectedAuth(String),
    #[error("no stored bundle at {0}")]
    RejectedMissingBundle(ContentAddress),
    #[error("rule {0} is not pending validation")]
    RejectedMissing(ContentAddress),
    #[error("validator {validator} already voted on {rule}")]
    RejectedDoubleVote {
        rule: ContentAddress,
        validator: PublicKey,
    },
    #[error("public key {0} is already registered")]
    RejectedKnownIdentity(PublicKey),
    #[error("wrong transaction kind: expected {expected:?}, got {actual:?}")]
    WrongKind { expected: TxKind, actual: TxKind },
    #[error("unknown subject {0}")]
    NotFound(String),
    #[error("invalid genesis: {0}")]
    InvalidGenesis(String),
    #[error("replay diverged at log position {position}: {reason}")]
    ReplayDivergence { position: usize, reason: String },
    #[error(transparent)]
    Trm(#[from] TrmError),
}

/// Lookup used by the trust contract to confirm a submitted address is
/// actually stored.
pub trait BundleCatalog {
    fn contains_bundle(&self, address: &ContentAddress) -> bool;
}

impl BundleCatalog for RuleStore {
    fn contains_bundle(&self, address: &ContentAddress) -> bool {
        self.contains(address)
    }
}

/// Initial validator set, byzantine budget and trust parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genesis {
    pub validators: Vec<PublicKey>,
    pub byzantine_budget: usize,
    pub trm: TrmParams,
}

impl Genesis {
    pub fn validate(&self) -> Result<(), ChainError> {
        self.trm
            .validate_byzantine(self.byzantine_budget)
            .map_err(|e| ChainError::InvalidGenesis(e.to_string()))?;
        if self.validators.len() != self.trm.n_validators {
            return Err(ChainError::InvalidGenesis(format!(
                "{} validator keys for n_validators = {}",
                self.validators.len(),
                self.trm.n_validators
            )));
        }
        let distinct: BTreeSet<_> = self.validators.iter().collect();
        if distinct.len() != self.validators.len() {
            return Err(ChainError::InvalidGenesis("duplicate validator key".into()));
        }
        Ok(())
    }

    fn handle(&self, contract: &str) -> String {
        let mut h = Sha256::new();
        h.update(contract.as_bytes());
        for v in &self.validators {
            h.update(v.as_bytes());
        }
        format!("0x{}", &hex::encode(h.finalize())[..40])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingRule {
    pub contributor: PublicKey,
    pub submitted_at: u64,
    /// Votes in arrival order.
    pub votes: Vec<(PublicKey, VoteScore)>,
    /// Algorithm counter: votes received so far.
    pub r_count: usize,
}

/// Outcome of a completed vote round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub rule: ContentAddress,
    pub contributor: PublicKey,
    pub trust: RuleTrust,
    /// Ordered by validator index.
    pub votes: Vec<VoteScore>,
    pub reputation_after: f64,
    pub contributions_after: usize,
    pub decided_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustLedgerState {
    pub validator_set: Vec<PublicKey>,
    pub byzantine_budget: usize,
    pub registry: BTreeMap<PublicKey, NodeRole>,
    pub pending_rules: BTreeMap<ContentAddress, PendingRule>,
    pub reputations: BTreeMap<PublicKey, ContributorReputation>,
    pub rule_trusts: BTreeMap<ContentAddress, RuleTrust>,
    /// Trusted rule database: confirmed address and its trust at confirmation.
    pub r_db: BTreeMap<ContentAddress, f64>,
    pub decisions: Vec<DecisionRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrustSubject {
    Rule(ContentAddress),
    Contributor(PublicKey),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrustRecord {
    Rule(RuleTrust),
    Contributor(ContributorReputation),
}

#[derive(Debug, Clone)]
pub struct Ledger {
    genesis: Genesis,
    state: TrustLedgerState,
    log: Vec<ChainTransaction>,
    events: Vec<ChainEvent>,
}

impl Ledger {
    pub fn new(genesis: Genesis) -> Result<Self, ChainError> {
        genesis.validate()?;
        let registry = genesis
            .validators
            .iter()
            .map(|v| (*v, NodeRole::Validator))
            .collect();
        let state = TrustLedgerState {
            validator_set: genesis.validators.clone(),
            byzantine_budget: genesis.byzantine_budget,
            registry,
            pending_rules: BTreeMap::new(),
            reputations: BTreeMap::new(),
            rule_trusts: BTreeMap::new(),
            r_db: BTreeMap::new(),
            decisions: Vec::new(),
        };
        Ok(Self {
            genesis,
            state,
            log: Vec::new(),
            events: Vec::new(),
        })
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn params(&self) -> &TrmParams {
        &self.genesis.trm
    }

    pub fn state(&self) -> &TrustLedgerState {
        &self.state
    }

    pub fn log(&self) -> &[ChainTransaction] {
        &self.log
    }

    pub fn events(&self) -> &[ChainEvent] {
        &self.events
    }

    /// Logical clock: number of applied transactions.
    pub fn clock(&self) -> u64 {
        self.log.len() as u64
    }

    pub fn role_of(&self, node: &PublicKey) -> Option<NodeRole> {
        self.state.registry.get(node).copied()
    }

    pub fn is_validator(&self, node: &PublicKey) -> bool {
        self.state.validator_set.contains(node)
    }

    /// SHA-256 over the JSON encoding of the full ledger state.
    pub fn state_digest(&self) -> String {
        let bytes = serde_json::to_vec(&self.state).expect("ledger state serialises");
        hex::encode(Sha256::digest(bytes))
    }

    fn append(&mut self, tx: ChainTransaction) -> u64 {
        self.log.push(tx);
        self.clock()
    }

    fn emit(&mut self, kind: EventKind, rule_address: ContentAddress, emitted_at: u64) -> ChainEvent {
        let event = ChainEvent {
            kind,
            rule_address,
            emitted_at,
            sequence: self.events.len() as u64,
        };
        self.events.push(event);
        event
    }

    pub fn register_node(
        &mut self,
        request: RegistrationRequest,
        approver: &PublicKey,
    ) -> Result<RegistrationResponse, ChainError> {
        if !self.is_validator(approver) {
            return Err(ChainError::RejectedAuth(format!(
                "approver {approver} is not a validator"
            )));
        }
        if !request.verify() {
            return Err(ChainError::RejectedAuth("registration signature invalid".into()));
        }
        if self.state.registry.contains_key(&request.public_key) {
            return Err(ChainError::RejectedKnownIdentity(request.public_key));
        }
        if request.attributes.role == NodeRole::Validator {
            return Err(ChainError::RejectedAuth(
                "validators are fixed at genesis".into(),
            ));
        }
        let role = request.attributes.role;
        let key = request.public_key;
        self.state.registry.insert(key, role);
        if role == NodeRole::Contributor {
            self.state
                .reputations
                .insert(key, ContributorReputation::new(key));
        }
        self.append(ChainTransaction::registration(request, *approver));
        Ok(RegistrationResponse {
            role,
            storage_bootstrap: format!("/sim/store/{}", self.genesis.handle("bootstrap")),
            trm_contract: self.genesis.handle("trm"),
            storage_contract: self.genesis.handle("str"),
        })
    }

    fn submission_checks(&self, tx: &ChainTransaction) -> Result<ContentAddress, ChainError> {
        let TxPayload::RuleSubmission { rule } = tx.payload else {
            return Err(ChainError::WrongKind {
                expected: TxKind::RuleSubmission,
                actual: tx.kind(),
            });
        };
        let sender = tx
            .sender()
            .ok_or_else(|| ChainError::RejectedAuth("rule submission without sender".into()))?;
        if self.role_of(&sender) != Some(NodeRole::Contributor) {
            return Err(ChainError::RejectedAuth(format!(
                "{sender} is not a registered contributor"
            )));
        }
        if !tx.verify() {
            return Err(ChainError::RejectedAuth("bad signature on rule submission".into()));
        }
        if self.state.pending_rules.contains_key(&rule) || self.state.r_db.contains_key(&rule) {
            return Err(ChainError::RejectedDuplicate(rule));
        }
        Ok(rule)
    }

    /// Accepts a `Tx_r`, queues the rule and raises the validation event.
    pub fn submit_rule(
        &mut self,
        tx: ChainTransaction,
        catalog: &impl BundleCatalog,
    ) -> Result<ChainEvent, ChainError> {
        let rule = self.submission_checks(&tx)?;
        if !catalog.contains_bundle(&rule) {
            return Err(ChainError::RejectedMissingBundle(rule));
        }
        Ok(self.apply_submission(tx, rule))
    }

    fn apply_submission(&mut self, tx: ChainTransaction, rule: ContentAddress) -> ChainEvent {
        let contributor = tx.sender().expect("checked");
        let at = self.append(tx);
        self.state.pending_rules.insert(
            rule,
            PendingRule {
                contributor,
                submitted_at: at,
                votes: Vec::new(),
                r_count: 0,
            },
        );
        self.emit(EventKind::NewRuleForValidation, rule, at)
    }

    /// Accepts a `Tx_c`. The `n`-th distinct validator vote closes the round:
    /// rule trust and contributor reputation are updated, the decision rule
    /// runs, and an accepted rule produces `Tx_f` plus the confirmation event.
    pub fn submit_vote(&mut self, tx: ChainTransaction) -> Result<Option<ChainEvent>, ChainError> {
        let TxPayload::ValidationVote { rule, phi, score } = tx.payload else {
            return Err(ChainError::WrongKind {
                expected: TxKind::ValidationVote,
                actual: tx.kind(),
            });
        };
        let sender = tx
            .sender()
            .ok_or_else(|| ChainError::RejectedAuth("vote without sender".into()))?;
        let Some(validator_index) = self.state.validator_set.iter().position(|v| *v == sender)
        else {
            return Err(ChainError::RejectedAuth(format!("{sender} is not a validator")));
        };
        if !tx.verify() {
            return Err(ChainError::RejectedAuth("bad signature on vote".into()));
        }
        let pending = self
            .state
            .pending_rules
            .get(&rule)
            .ok_or(ChainError::RejectedMissing(rule))?;
        if pending.votes.iter().any(|(v, _)| *v == sender) {
            return Err(ChainError::RejectedDoubleVote {
                rule,
                validator: sender,
            });
        }
        let vote = VoteScore::new(phi, score, validator_index)?;
        let n = self.genesis.trm.n_validators;
        let all_received = pending.r_count == n - 1;

        if !all_received {
            self.append(tx);
            let pending = self.state.pending_rules.get_mut(&rule).expect("checked");
            pending.votes.push((sender, vote));
            pending.r_count += 1;
            return Ok(None);
        }

        let mut pending = self.state.pending_rules.remove(&rule).expect("checked");
        pending.votes.push((sender, vote));
        let mut votes: Vec<VoteScore> = pending.votes.iter().map(|(_, v)| *v).collect();
        votes.sort_by_key(|v| v.validator_index());
        let trust = evaluate_rule(&votes, &self.genesis.trm)?;
        let current = self
            .state
            .reputations
            .get(&pending.contributor)
            .cloned()
            .unwrap_or_else(|| ContributorReputation::new(pending.contributor));
        let updated = update_reputation(&current, trust.t, &self.genesis.trm)?;
        let vote_at = self.append(tx);

        self.state.decisions.push(DecisionRecord {
            rule,
            contributor: pending.contributor,
            trust,
            votes,
            reputation_after: updated.value,
            contributions_after: updated.m(),
            decided_at: vote_at,
        });
        self.state.reputations.insert(pending.contributor, updated);
        self.state.rule_trusts.insert(rule, trust);

        if trust.decision == Decision::Accept {
            self.state.r_db.insert(rule, trust.t);
            let at = self.append(ChainTransaction::confirmation(rule, trust.t, vote_at));
            Ok(Some(self.emit(EventKind::RuleConfirmed, rule, at)))
        } else {
            Ok(None)
        }
    }

    pub fn query_trust(&self, subject: TrustSubject) -> Result<TrustRecord, ChainError> {
        match subject {
            TrustSubject::Rule(addr) => self.query_rule(&addr).map(TrustRecord::Rule),
            TrustSubject::Contributor(pk) => {
                self.query_contributor(&pk).map(TrustRecord::Contributor)
            }
        }
    }

    pub fn query_rule(&self, address: &ContentAddress) -> Result<RuleTrust, ChainError> {
        self.state
            .rule_trusts
            .get(address)
            .copied()
            .ok_or_else(|| ChainError::NotFound(address.to_hex()))
    }

    pub fn query_contributor(&self, key: &PublicKey) -> Result<ContributorReputation, ChainError> {
        self.state
            .reputations
            .get(key)
            .cloned()
            .ok_or_else(|| ChainError::NotFound(key.to_hex()))
    }

    /// Re-folds a transaction log from genesis. Contract transactions are
    /// not applied; each one must match the transaction the replayed
    /// contract produces at the same position.
    pub fn replay<'a>(
        genesis: Genesis,
        log: impl IntoIterator<Item = &'a ChainTransaction>,
    ) -> Result<Self, ChainError> {
        let mut ledger = Ledger::new(genesis)?;
        for (position, tx) in log.into_iter().enumerate() {
            let diverged = |reason: String| ChainError::ReplayDivergence { position, reason };
            match &tx.payload {
                TxPayload::RuleConfirmation { .. } => {
                    if ledger.log.get(position) != Some(tx) {
                        return Err(diverged("confirmation not reproduced".into()));
                    }
                    continue;
                }
                TxPayload::Registration { request, approver } => {
                    ledger
                        .register_node(request.clone(), approver)
                        .map_err(|e| diverged(e.to_string()))?;
                }
                TxPayload::RuleSubmission { .. } => {
                    let rule = ledger
                        .submission_checks(tx)
                        .map_err(|e| diverged(e.to_string()))?;
                    ledger.apply_submission(tx.clone(), rule);
                }
                TxPayload::ValidationVote { .. } => {
                    ledger
                        .submit_vote(tx.clone())
                        .map_err(|e| diverged(e.to_string()))?;
                }
            }
            if ledger.log.get(position) != Some(tx) {
                return Err(diverged("transaction not reproduced".into()));
            }
        }
        Ok(ledger)
    }

    /// Structural checks over log, events and state. Returns every violation
    /// found; an empty list means the ledger is consistent.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut violations = Vec::new();
        let n = self.genesis.trm.n_validators;
        let mut voters: BTreeMap<ContentAddress, BTreeSet<PublicKey>> = BTreeMap::new();
        let mut confirmations: BTreeMap<ContentAddress, usize> = BTreeMap::new();
        let mut submitted_at: BTreeMap<ContentAddress, usize> = BTreeMap::new();
        let mut last_vote_position: BTreeMap<ContentAddress, usize> = BTreeMap::new();

        for (idx, tx) in self.log.iter().enumerate() {
            if !tx.verify() {
                violations.push(format!("log[{idx}]: signature does not verify"));
            }
            if let Some(sender) = tx.sender() {
                let registered = self.state.registry.contains_key(&sender);
                if !registered {
                    violations.push(format!("log[{idx}]: unregistered sender {sender}"));
                }
            }
            match &tx.payload {
                TxPayload::RuleSubmission { rule } => {
                    submitted_at.insert(*rule, idx);
                    voters.insert(*rule, BTreeSet::new());
                }
                TxPayload::ValidationVote { rule, .. } => {
                    let sender = tx.sender().unwrap_or_else(|| PublicKey::from_bytes([0; 32]));
                    if !self.is_validator(&sender) {
                        violations.push(format!("log[{idx}]: vote from non-validator"));
                    }
                    match submitted_at.get(rule) {
                        Some(_) => {
                            let set = voters.entry(*rule).or_default();
                            if !set.insert(sender) {
                                violations.push(format!("log[{idx}]: repeated vote"));
                            }
                        }
                        None => violations.push(format!("log[{idx}]: vote before submission")),
                    }
                    last_vote_position.insert(*rule, idx);
                }
                TxPayload::RuleConfirmation { rule, trust } => {
                    *confirmations.entry(*rule).or_default() += 1;
                    let count = voters.get(rule).map_or(0, BTreeSet::len);
                    if count != n {
                        violations.push(format!(
                            "log[{idx}]: confirmation after {count} of {n} votes"
                        ));
                    }
                    if idx == 0 || last_vote_position.get(rule) != Some(&(idx - 1)) {
                        violations.push(format!(
                            "log[{idx}]: confirmation does not follow the closing vote"
                        ));
                    }
                    if self.state.r_db.get(rule) != Some(trust) {
                        violations.push(format!("log[{idx}]: confirmed rule missing from r_db"));
                    }
                }
                TxPayload::Registration { .. } => {}
            }
        }

        for (rule, count) in &confirmations {
            if *count > 1 {
                violations.push(format!("rule {rule} confirmed {count} times"));
            }
        }
        if confirmations.len() != self.state.r_db.len() {
            violations.push(format!(
                "{} confirmations but r_db holds {}",
                confirmations.len(),
                self.state.r_db.len()
            ));
        }
        let accepted: BTreeSet<_> = self
            .state
            .decisions
            .iter()
            .filter(|d| d.trust.decision.is_accept())
            .map(|d| d.rule)
            .collect();
        let in_db: BTreeSet<_> = self.state.r_db.keys().copied().collect();
        if accepted != in_db {
            violations.push("r_db differs from the set of accepted rules".into());
        }

        let confirmed_events = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::RuleConfirmed)
            .count();
        if confirmed_events != self.state.r_db.len() {
            violations.push(format!(
                "{confirmed_events} confirmation events for {} rules",
                self.state.r_db.len()
            ));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.sequence != i as u64 {
                violations.push(format!("event {i} has sequence {}", e.sequence));
            }
            let tx = usize::try_from(e.emitted_at)
                .ok()
                .and_then(|p| p.checked_sub(1))
                .and_then(|p| self.log.get(p));
            let expected = match e.kind {
                EventKind::NewRuleForValidation => TxKind::RuleSubmission,
                EventKind::RuleConfirmed => TxKind::RuleConfirmation,
            };
            if tx.map(|t| (t.kind(), t.rule())) != Some((expected, Some(e.rule_address))) {
                violations.push(format!("event {i} does not point at its transaction"));
            }
        }
        for (rule, pending) in &self.state.pending_rules {
            if pending.r_count > n - 1 || pending.r_count != pending.votes.len() {
                violations.push(format!("pending rule {rule} has r_count {}", pending.r_count));
            }
        }
        violations
    }
}
