use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{verify_decision_bounds, HarnessError, ScenarioConfig};
use crate::agents::{
    ContributorAgent, InclusionOutcome, Rationale, RegularAgent, RulePool, SubmissionKind,
    ValidatorAgent,
};
use crate::chain::{
    ChainError, ChainTransaction, DecisionRecord, Genesis, Ledger, NodeAttributes, NodeRole,
    RegistrationRequest, TxKind,
};
use crate::identity::{ContentAddress, NodeKeyPair, PublicKey};
use crate::rulestore::{Corpus, RuleStore, StoreAccess};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub round: usize,
    pub t: f64,
    #[serde(rename = "T")]
    pub reputation: f64,
}

/// One contributor identity's trust history, one point per decided
/// submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustTrajectory {
    /// Agent name, suffixed `/k` for the k-th re-registered identity.
    pub contributor: String,
    pub key: PublicKey,
    pub series: Vec<TrajectoryPoint>,
}

impl TrustTrajectory {
    /// Reputation after the last decision at or before `round`.
    pub fn reputation_at(&self, round: usize) -> Option<f64> {
        self.series
            .iter()
            .take_while(|p| p.round <= round)
            .last()
            .map(|p| p.reputation)
    }

    pub fn final_reputation(&self) -> f64 {
        self.series.last().map_or(0.0, |p| p.reputation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub round: usize,
    pub agent: String,
    pub kind: TxKind,
    pub reason: String,
}

/// What happened to one submission attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmissionRecord {
    pub round: usize,
    pub contributor: String,
    pub kind: SubmissionKind,
    pub address: ContentAddress,
    /// Validator rationales in validator-index order; empty when the
    /// submission was rejected on chain.
    pub rationales: Vec<Rationale>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: ScenarioConfig,
    pub ledger: Ledger,
    pub store: RuleStore,
    pub trajectories: Vec<TrustTrajectory>,
    pub submissions: Vec<SubmissionRecord>,
    pub rejections: Vec<Rejection>,
    /// Regular node name to its local rule database.
    pub local_rules: BTreeMap<String, BTreeMap<ContentAddress, String>>,
}

impl RunArtifacts {
    pub fn decisions(&self) -> &[DecisionRecord] {
        &self.ledger.state().decisions
    }

    pub fn trajectory(&self, contributor: &str) -> Option<&TrustTrajectory> {
        self.trajectories.iter().find(|t| t.contributor == contributor)
    }

    /// Label used in the artifacts for a contributor key.
    pub fn label_of(&self, key: &PublicKey) -> String {
        self.trajectories
            .iter()
            .find(|t| t.key == *key)
            .map_or_else(|| key.to_hex(), |t| t.contributor.clone())
    }
}

/// Loads the corpus named in the config and runs the scenario.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunArtifacts, HarnessError> {
    config.validate()?;
    let corpus = Corpus::load_dir(&config.corpus_path)?;
    run_with_corpus(config, &corpus)
}

struct Contributor {
    agent: ContributorAgent,
    rng: ChaCha8Rng,
    trajectory: usize,
}

struct Validator {
    agent: ValidatorAgent,
    rng: ChaCha8Rng,
}

fn agent_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn run_with_corpus(config: &ScenarioConfig, corpus: &Corpus) -> Result<RunArtifacts, HarnessError> {
    config.validate()?;
    let mut validators = Vec::new();
    let mut contributors = Vec::new();
    let mut regulars = Vec::new();
    for (index, profile) in config.agents.iter().enumerate() {
        let rng = agent_rng(config.seed, index as u64);
        match profile.role {
            NodeRole::Validator => validators.push(Validator {
                agent: ValidatorAgent::new(profile.clone())?,
                rng,
            }),
            NodeRole::Contributor => contributors.push(Contributor {
                agent: ContributorAgent::new(profile.clone())?,
                rng,
                trajectory: 0,
            }),
            NodeRole::Regular => {
                regulars.push(RegularAgent::new(profile.clone(), config.regular_threshold)?)
            }
        }
    }
    let mut scheduler = agent_rng(config.seed, config.agents.len() as u64);

    let genesis = Genesis {
        validators: validators.iter().map(|v| v.agent.public_key()).collect(),
        byzantine_budget: config.byzantine_budget,
        trm: config.trm,
    };
    let mut ledger = Ledger::new(genesis).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut store = RuleStore::new();
    for v in &validators {
        store.grant(v.agent.public_key(), StoreAccess::Subscribed);
    }

    let mut trajectories = Vec::new();
    let mut approvals = 0usize;
    let mut register = |ledger: &mut Ledger,
                        store: &mut RuleStore,
                        key: &NodeKeyPair,
                        role: NodeRole,
                        validators: &[Validator]|
     -> Result<(), HarnessError> {
        let approver = validators[approvals % validators.len()].agent.public_key();
        approvals += 1;
        let attributes = NodeAttributes {
            ip_address: format!("10.0.{}.{}", approvals / 250, approvals % 250 + 1),
            node_uid: key.public_key().to_hex()[..16].to_string(),
            role,
        };
        let request = RegistrationRequest::signed(key, attributes, ledger.clock());
        ledger
            .register_node(request, &approver)
            .map_err(|e| HarnessError::Invariant(vec![format!("registration failed: {e}")]))?;
        let access = match role {
            NodeRole::Contributor => StoreAccess::WriteOnly,
            NodeRole::Validator | NodeRole::Regular => StoreAccess::Subscribed,
        };
        store.grant(key.public_key(), access);
        Ok(())
    };

    for c in &mut contributors {
        register(&mut ledger, &mut store, c.agent.key(), NodeRole::Contributor, &validators)?;
        c.trajectory = trajectories.len();
        trajectories.push(TrustTrajectory {
            contributor: c.agent.name().to_string(),
            key: c.agent.public_key(),
            series: Vec::new(),
        });
    }
    for r in &regulars {
        register(&mut ledger, &mut store, r.key(), NodeRole::Regular, &validators)?;
    }
    for v in &mut validators {
        if let Some(target) = v.agent.target_name().map(str::to_string) {
            for c in contributors.iter().filter(|c| c.agent.name() == target) {
                v.agent.add_target_key(c.agent.public_key());
            }
        }
    }

    let truth = corpus.ground_truth();
    let mut pool = RulePool::from_corpus(corpus);
    let mut submissions = Vec::new();
    let mut rejections = Vec::new();
    let mut vote_order: Vec<usize> = (0..validators.len()).collect();

    for round in 1..=config.rounds {
        for c in &mut contributors {
            let name = c.agent.name().to_string();
            if c.agent.should_rejoin(round) {
                let key = c.agent.rejoin().clone();
                register(&mut ledger, &mut store, &key, NodeRole::Contributor, &validators)?;
                for v in validators.iter_mut().filter(|v| v.agent.target_name() == Some(&name)) {
                    v.agent.add_target_key(key.public_key());
                }
                c.trajectory = trajectories.len();
                trajectories.push(TrustTrajectory {
                    contributor: format!("{name}/{}", c.agent.identities().len() - 1),
                    key: key.public_key(),
                    series: Vec::new(),
                });
            }

            let submission = c.agent.step(round, &mut pool, &mut c.rng)?;
            let key = c.agent.key().clone();
            let address = store
                .put_bundle(&submission.bundle, &key.public_key())
                .map_err(|e| HarnessError::Invariant(vec![format!("store write failed: {e}")]))?;
            let tx = ChainTransaction::rule_submission(&key, address, ledger.clock());
            let mut record = SubmissionRecord {
                round,
                contributor: name.clone(),
                kind: submission.kind,
                address,
                rationales: Vec::new(),
            };
            if let Err(e) = ledger.submit_rule(tx, &store) {
                rejections.push(Rejection {
                    round,
                    agent: name,
                    kind: TxKind::RuleSubmission,
                    reason: e.to_string(),
                });
                submissions.push(record);
                continue;
            }

            if let Some(tx) = c.agent.self_vote(address, ledger.clock()) {
                match ledger.submit_vote(tx) {
                    Err(e) => rejections.push(Rejection {
                        round,
                        agent: name.clone(),
                        kind: TxKind::ValidationVote,
                        reason: e.to_string(),
                    }),
                    Ok(_) => {
                        return Err(HarnessError::Invariant(vec![format!(
                            "round {round}: self-vote by {name} was accepted"
                        )]))
                    }
                }
            }

            let mut verdicts = Vec::with_capacity(validators.len());
            for v in &mut validators {
                let bundle = store
                    .get_bundle(&address, &v.agent.public_key())
                    .map_err(|e| HarnessError::Invariant(vec![format!("validator read failed: {e}")]))?;
                verdicts.push(v.agent.step(&bundle, &truth, &mut v.rng));
            }
            record.rationales = verdicts.iter().map(|v| v.rationale).collect();

            vote_order.shuffle(&mut scheduler);
            let mut confirmation = None;
            for &i in &vote_order {
                let verdict = verdicts[i];
                let tx = ChainTransaction::validation_vote(
                    validators[i].agent.key(),
                    address,
                    verdict.phi,
                    verdict.s,
                    ledger.clock(),
                );
                match ledger.submit_vote(tx) {
                    Ok(event) => confirmation = confirmation.or(event),
                    Err(e) => return Err(unexpected(round, &name, e)),
                }
            }

            let decision = ledger
                .state()
                .decisions
                .last()
                .filter(|d| d.rule == address)
                .ok_or_else(|| {
                    HarnessError::Invariant(vec![format!("round {round}: no decision for {address}")])
                })?;
            trajectories[c.trajectory].series.push(TrajectoryPoint {
                round,
                t: decision.trust.t,
                reputation: decision.reputation_after,
            });

            if let Some(event) = confirmation {
                for r in &mut regulars {
                    if let InclusionOutcome::RetrievalFailed(reason) = r.step(&event, &store, &ledger) {
                        return Err(HarnessError::Invariant(vec![format!(
                            "round {round}: regular node could not fetch {address}: {reason}"
                        )]));
                    }
                }
            }
            submissions.push(record);
        }
    }

    let local_rules = regulars
        .iter()
        .map(|r| (r.profile().name.clone(), r.local_rules().clone()))
        .collect();
    let artifacts = RunArtifacts {
        config: config.clone(),
        ledger,
        store,
        trajectories,
        submissions,
        rejections,
        local_rules,
    };
    let violations = end_of_run_checks(&artifacts);
    if !violations.is_empty() {
        return Err(HarnessError::Invariant(violations));
    }
    Ok(artifacts)
}

fn unexpected(round: usize, contributor: &str, e: ChainError) -> HarnessError {
    HarnessError::Invariant(vec![format!(
        "round {round}: validator vote on {contributor}'s rule rejected: {e}"
    )])
}

fn end_of_run_checks(artifacts: &RunArtifacts) -> Vec<String> {
    let ledger = &artifacts.ledger;
    let mut violations = ledger.check_invariants();
    if let Err(e) = artifacts.store.audit() {
        violations.push(format!("store audit: {e}"));
    }
    violations.extend(verify_decision_bounds(ledger.params(), artifacts.decisions()));
    let r_db = &ledger.state().r_db;
    for (name, rules) in &artifacts.local_rules {
        if let Some(extra) = rules.keys().find(|a| !r_db.contains_key(a)) {
            violations.push(format!("{name} holds {extra}, which is not in r_db"));
        }
    }
    for traj in &artifacts.trajectories {
        let decided = artifacts
            .decisions()
            .iter()
            .filter(|d| d.contributor == traj.key)
            .count();
        if decided != traj.series.len() {
            violations.push(format!(
                "{} has {} trajectory points for {decided} decisions",
                traj.contributor,
                traj.series.len()
            ));
        }
    }
    violations
}
