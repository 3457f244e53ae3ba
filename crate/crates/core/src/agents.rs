//! Programmable node behaviours: honest validators, contributors and
//! regular nodes, plus the adversaries from the threat model.
//!
//! Agents never touch the ledger themselves. The harness asks them what to
//! do (which bundle to submit, how to vote, whether to keep a confirmed
//! rule) and serialises every ledger interaction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainEvent, ChainTransaction, EventKind, Ledger, NodeRole};
use crate::identity::{generate_keypair, seed_from_label, ContentAddress, NodeKeyPair, PublicKey};
use crate::rulestore::{Corpus, DetectionRule, GroundTruth, RuleBundle, RuleMetadata, RuleStore};
use crate::trm::{Verdict, VALID_SCORE_FLOOR};

/// Score a byzantine validator attaches when voting a valid rule down: the
/// largest value still inside the invalid band.
pub const BYZANTINE_REJECT_SCORE: f64 = 0.49;
/// Score a byzantine validator attaches when voting an invalid rule up.
pub const BYZANTINE_ACCEPT_SCORE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("agent {agent}: {reason}")]
    InvalidProfile { agent: String, reason: String },
    #[error("corpus exhausted: no {0} rules left to draw")]
    CorpusExhausted(RuleClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleClass {
    Valid,
    Invalid,
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleClass::Valid => "valid",
            RuleClass::Invalid => "invalid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Honest,
    /// Contributes valid rules for rounds `1..=switch_at`, invalid ones after.
    Turncoat { switch_at: usize },
    AlwaysMalicious,
    /// Submits poor rules and tries to vote for them itself.
    SelfPromoter,
    /// Validator that votes every rule from `target` invalid.
    BadMouther { target: String },
    /// Resubmits its first rule, alternating cosmetic variants and verbatim
    /// copies.
    BallotStuffer,
    /// Malicious contributor that re-registers under a fresh key at
    /// `rejoin_at`.
    Whitewasher { rejoin_at: usize },
    /// Validator inverting every honest verdict with worst-case scores.
    Byzantine,
}

impl Behavior {
    fn allowed_for(&self, role: NodeRole) -> bool {
        use Behavior::*;
        match role {
            NodeRole::Validator => matches!(self, Honest | BadMouther { .. } | Byzantine),
            NodeRole::Contributor => matches!(
                self,
                Honest
                    | Turncoat { .. }
                    | AlwaysMalicious
                    | SelfPromoter
                    | BallotStuffer
                    | Whitewasher { .. }
            ),
            NodeRole::Regular => matches!(self, Honest),
        }
    }

    pub fn is_adversarial(&self) -> bool {
        !matches!(self, Behavior::Honest)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreDistribution {
    Constant { value: f64 },
    /// Uniform on `[low, high)`.
    Uniform { low: f64, high: f64 },
}

impl ScoreDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScoreDistribution::Constant { value } => value,
            ScoreDistribution::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
        }
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            ScoreDistribution::Constant { value } => (value, value),
            ScoreDistribution::Uniform { low, high } => (low, high),
        }
    }

    pub fn mean(&self) -> f64 {
        let (lo, hi) = self.range();
        (lo + hi) / 2.0
    }
}

/// How an honest validator picks `S` once the verdict is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorePolicy {
    pub valid: ScoreDistribution,
    pub invalid: ScoreDistribution,
}

impl Default for ScorePolicy {
    fn default() -> Self {
        Self {
            valid: ScoreDistribution::Uniform { low: 0.9, high: 1.0 },
            invalid: ScoreDistribution::Uniform { low: 0.0, high: 0.1 },
        }
    }
}

impl ScorePolicy {
    pub fn constant(valid: f64, invalid: f64) -> Self {
        Self {
            valid: ScoreDistribution::Constant { value: valid },
            invalid: ScoreDistribution::Constant { value: invalid },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let (vlo, vhi) = self.valid.range();
        if !(VALID_SCORE_FLOOR <= vlo && vlo <= vhi && vhi <= 1.0) {
            return Err(format!("valid scores [{vlo}, {vhi}] leave [0.5, 1]"));
        }
        let (ilo, ihi) = self.invalid.range();
        let inside = 0.0 <= ilo && ilo <= ihi && ihi <= VALID_SCORE_FLOOR;
        let open_top = match self.invalid {
            ScoreDistribution::Constant { value } => value < VALID_SCORE_FLOOR,
            ScoreDistribution::Uniform { .. } => true,
        };
        if !(inside && open_top) {
            return Err(format!("invalid scores [{ilo}, {ihi}] leave [0, 0.5)"));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, phi: Verdict, rng: &mut R) -> f64 {
        match phi {
            Verdict::Valid => self.valid.sample(rng),
            Verdict::Invalid => self.invalid.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub role: NodeRole,
    #[serde(default)]
    pub behavior: Behavior,
    /// Label hashed into the signing-key seed; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_seed: Option<String>,
    #[serde(default)]
    pub score_policy: ScorePolicy,
}

impl AgentProfile {
    pub fn new(name: impl Into<String>, role: NodeRole) -> Self {
        Self {
            name: name.into(),
            role,
            behavior: Behavior::Honest,
            key_seed: None,
            score_policy: ScorePolicy::default(),
        }
    }

    pub fn with_behavior(mut self, behavior: Behavior) -> Self {
        self.behavior = behavior;
        self
    }

    pub fn with_policy(mut self, policy: ScorePolicy) -> Self {
        self.score_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |reason: String| AgentError::InvalidProfile {
            agent: self.name.clone(),
            reason,
        };
        if self.name.trim().is_empty() {
            return Err(bad("empty name".into()));
        }
        if !self.behavior.allowed_for(self.role) {
            return Err(bad(format!("{:?} is not a {} behaviour", self.behavior, self.role)));
        }
        match &self.behavior {
            Behavior::Turncoat { switch_at: 0 } => {
                return Err(bad("turncoat switch_at must be at least 1".into()))
            }
            Behavior::Whitewasher { rejoin_at: 0 } => {
                return Err(bad("whitewasher rejoin_at must be at least 1".into()))
            }
            Behavior::BadMouther { target } if target == &self.name => {
                return Err(bad("bad-mouther cannot target itself".into()))
            }
            _ => {}
        }
        self.score_policy.validate().map_err(bad)
    }

    pub fn key_label(&self) -> &str {
        self.key_seed.as_deref().unwrap_or(&self.name)
    }

    pub fn keypair(&self) -> NodeKeyPair {
        generate_keypair(seed_from_label(self.key_label()))
    }

    fn expect_role(&self, role: NodeRole) -> Result<(), AgentError> {
        self.validate()?;
        if self.role != role {
            return Err(AgentError::InvalidProfile {
                agent: self.name.clone(),
                reason: format!("expected a {role}, profile says {}", self.role),
            });
        }
        Ok(())
    }
}

/// Rules not yet handed out, shared by every contributor of a run so no
/// rule is submitted fresh twice.
#[derive(Debug, Clone)]
pub struct RulePool {
    valid: Vec<DetectionRule>,
    invalid: Vec<DetectionRule>,
}

impl RulePool {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self {
            valid: corpus.valid().to_vec(),
            invalid: corpus.invalid().to_vec(),
        }
    }

    pub fn remaining(&self, class: RuleClass) -> usize {
        match class {
            RuleClass::Valid => self.valid.len(),
            RuleClass::Invalid => self.invalid.len(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(
        &mut self,
        class: RuleClass,
        rng: &mut R,
    ) -> Result<DetectionRule, AgentError> {
        let pool = match class {
            RuleClass::Valid => &mut self.valid,
            RuleClass::Invalid => &mut self.invalid,
        };
        if pool.is_empty() {
            return Err(AgentError::CorpusExhausted(class));
        }
        let idx = rng.gen_range(0..pool.len());
        Ok(pool.swap_remove(idx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmissionKind {
    Fresh(RuleClass),
    /// Byte-identical copy of an earlier bundle.
    Verbatim,
    /// Earlier rule re-spelled; same canonical form, new bundle.
    Cosmetic,
}

#[derive(Debug, Clone)]
pub struct Submission {
    pub bundle: RuleBundle,
    pub kind: SubmissionKind,
}

#[derive(Debug, Clone)]
pub struct ContributorAgent {
    profile: AgentProfile,
    key: NodeKeyPair,
    retired: Vec<PublicKey>,
    history: Vec<RuleBundle>,
}

impl ContributorAgent {
    pub fn new(profile: AgentProfile) -> Result<Self, AgentError> {
        profile.expect_role(NodeRole::Contributor)?;
        Ok(Self {
            key: profile.keypair(),
            profile,
            retired: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    pub fn name(&self) -> &str {
        &self.profile.name
    }

    pub fn key(&self) -> &NodeKeyPair {
        &self.key
    }

    pub fn public_key(&self) -> PublicKey {
        self.key.public_key()
    }

    /// Every key this agent has used, oldest first.
    pub fn identities(&self) -> Vec<PublicKey> {
        let mut all = self.retired.clone();
        all.push(self.public_key());
        all
    }

    pub fn should_rejoin(&self, round: usize) -> bool {
        matches!(self.profile.behavior, Behavior::Whitewasher { rejoin_at } if rejoin_at == round)
            && self.retired.is_empty()
    }

    /// Drops the current identity for a fresh one. The caller registers it.
    pub fn rejoin(&mut self) -> &NodeKeyPair {
        let label = format!("{}#rejoin{}", self.profile.key_label(), self.retired.len() + 1);
        self.retired.push(self.key.public_key());
        self.key = generate_keypair(seed_from_label(&label));
        &self.key
    }

    /// Picks this round's submission. Rounds count from 1.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        round: usize,
        pool: &mut RulePool,
        rng: &mut R,
    ) -> Result<Submission, AgentError> {
        let class = match self.profile.behavior {
            Behavior::Honest => RuleClass::Valid,
            Behavior::Turncoat { switch_at } if round <= switch_at => RuleClass::Valid,
            Behavior::Turncoat { .. }
            | Behavior::AlwaysMalicious
            | Behavior::SelfPromoter
            | Behavior::Whitewasher { .. } => RuleClass::Invalid,
            Behavior::BallotStuffer => match self.history.first() {
                None => RuleClass::Valid,
                Some(original) if round.is_multiple_of(2) => {
                    let rule = original.rule.cosmetic_variant(round);
                    let bundle = self.bundle(rule, round);
                    return Ok(Submission {
                        bundle,
                        kind: SubmissionKind::Cosmetic,
                    });
                }
                Some(original) => {
                    return Ok(Submission {
                        bundle: original.clone(),
                        kind: SubmissionKind::Verbatim,
                    })
                }
            },
            Behavior::BadMouther { .. } | Behavior::Byzantine => {
                unreachable!("validator behaviour on a contributor")
            }
        };
        let rule = pool.draw(class, rng)?;
        let bundle = self.bundle(rule, round);
        self.history.push(bundle.clone());
        Ok(Submission {
            bundle,
            kind: SubmissionKind::Fresh(class),
        })
    }

    fn bundle(&self, rule: DetectionRule, round: usize) -> RuleBundle {
        let metadata = RuleMetadata::describe(&rule, &self.profile.name, round as u64);
        RuleBundle::new(rule, metadata, self.public_key()).expect("describe fills every field")
    }

    /// A self-promoter's attempt to vote for its own rule.
    pub fn self_vote(&self, rule: ContentAddress, timestamp: u64) -> Option<ChainTransaction> {
        (self.profile.behavior == Behavior::SelfPromoter).then(|| {
            ChainTransaction::validation_vote(&self.key, rule, Verdict::Valid, 1.0, timestamp)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    MatchesGroundTruth,
    ContradictsGroundTruth,
    DuplicateDetected,
    AdversarialOverride,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub phi: Verdict,
    pub s: f64,
    pub rationale: Rationale,
}

#[derive(Debug, Clone)]
pub struct ValidatorAgent {
    profile: AgentProfile,
    key: NodeKeyPair,
    seen: BTreeSet<String>,
    targets: BTreeSet<PublicKey>,
}

impl ValidatorAgent {
    pub fn new(profile: AgentProfile) -> Result<Self, AgentError> {
        profile.expect_role(NodeRole::Validator)?;
        Ok(Self {
            key: profile.keypair(),
            profile,
            seen: BTreeSet::new(),
            targets: BTreeSet::new(),
        })
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    pub fn key(&self) -> &NodeKeyPair {
        &self.key
    }

    pub fn public_key(&self) -> PublicKey {
        self.key.public_key()
    }

    /// Name of the contributor a bad-mouther is after.
    pub fn target_name(&self) -> Option<&str> {
        match &self.profile.behavior {
            Behavior::BadMouther { target } => Some(target),
            _ => None,
        }
    }

    pub fn add_target_key(&mut self, key: PublicKey) {
        self.targets.insert(key);
    }

    /// Off-chain check of a pending rule: duplicate lookup, then ground-truth
    /// membership, then this agent's behaviour.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        bundle: &RuleBundle,
        truth: &GroundTruth,
        rng: &mut R,
    ) -> ValidationVerdict {
        let duplicate = !self.seen.insert(bundle.rule.canonical_form().to_string());
        let (honest_phi, rationale) = if duplicate {
            (Verdict::Invalid, Rationale::DuplicateDetected)
        } else if truth.is_valid(&bundle.rule) {
            (Verdict::Valid, Rationale::MatchesGroundTruth)
        } else {
            (Verdict::Invalid, Rationale::ContradictsGroundTruth)
        };

        let policy = self.profile.score_policy;
        match &self.profile.behavior {
            Behavior::Byzantine => {
                let phi = honest_phi.flipped();
                let s = match phi {
                    Verdict::Valid => BYZANTINE_ACCEPT_SCORE,
                    Verdict::Invalid => BYZANTINE_REJECT_SCORE,
                };
                ValidationVerdict {
                    phi,
                    s,
                    rationale: Rationale::AdversarialOverride,
                }
            }
            Behavior::BadMouther { .. } if self.targets.contains(&bundle.contributor) => {
                ValidationVerdict {
                    phi: Verdict::Invalid,
                    s: policy.sample(Verdict::Invalid, rng),
                    rationale: Rationale::AdversarialOverride,
                }
            }
            _ => ValidationVerdict {
                phi: honest_phi,
                s: policy.sample(honest_phi, rng),
                rationale,
            },
        }
    }
}

/// Why a regular node did or did not keep a confirmed rule.
#[derive(Debug, Clone, PartialEq)]
pub enum InclusionOutcome {
    Included,
    AlreadyHeld,
    BelowThreshold { t: f64, reputation: f64 },
    RetrievalFailed(String),
    NotAConfirmation,
}

/// Regular-node acceptance test: both the rule trust and its contributor's
/// reputation must reach the local threshold.
pub fn admits(t: f64, reputation: f64, threshold: f64) -> bool {
    t >= threshold && reputation >= threshold
}

#[derive(Debug, Clone)]
pub struct RegularAgent {
    profile: AgentProfile,
    key: NodeKeyPair,
    threshold: f64,
    r_loc: BTreeMap<ContentAddress, String>,
}

impl RegularAgent {
    pub fn new(profile: AgentProfile, threshold: f64) -> Result<Self, AgentError> {
        profile.expect_role(NodeRole::Regular)?;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(AgentError::InvalidProfile {
                agent: profile.name,
                reason: format!("threshold {threshold} outside [0, 1]"),
            });
        }
        Ok(Self {
            key: profile.keypair(),
            profile,
            threshold,
            r_loc: BTreeMap::new(),
        })
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    pub fn key(&self) -> &NodeKeyPair {
        &self.key
    }

    pub fn public_key(&self) -> PublicKey {
        self.key.public_key()
    }

    /// Local rule database: address to canonical form.
    pub fn local_rules(&self) -> &BTreeMap<ContentAddress, String> {
        &self.r_loc
    }

    pub fn step(&mut self, event: &ChainEvent, store: &RuleStore, ledger: &Ledger) -> InclusionOutcome {
        if event.kind != EventKind::RuleConfirmed {
            return InclusionOutcome::NotAConfirmation;
        }
        let address = event.rule_address;
        if self.r_loc.contains_key(&address) {
            return InclusionOutcome::AlreadyHeld;
        }
        let bundle = match store.get_bundle(&address, &self.public_key()) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{}: cannot fetch {address}: {e}", self.profile.name);
                return InclusionOutcome::RetrievalFailed(e.to_string());
            }
        };
        let trust = ledger.query_rule(&address);
        let reputation = ledger.query_contributor(&bundle.contributor);
        let (t, reputation) = match (trust, reputation) {
            (Ok(t), Ok(r)) => (t.t, r.value),
            (Err(e), _) | (_, Err(e)) => {
                log::warn!("{}: no trust record for {address}: {e}", self.profile.name);
                return InclusionOutcome::RetrievalFailed(e.to_string());
            }
        };
        if admits(t, reputation, self.threshold) {
            self.r_loc.insert(address, bundle.rule.canonical_form().to_string());
            InclusionOutcome::Included
        } else {
            InclusionOutcome::BelowThreshold { t, reputation }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus() -> Corpus {
        let valid: String = (1..=6)
            .map(|i| format!("alert tcp any any -> $HOME_NET {} (msg:\"v{i}\"; content:\"good{i}\"; sid:{i};)\n", 1000 + i))
            .collect();
        let invalid: String = (1..=6)
            .map(|i| format!("alert ip any any -> any any (msg:\"x{i}\"; content:\"a\"; sid:{};)\n", 100 + i))
            .collect();
        Corpus::from_texts(&valid, &invalid).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn contributor(behavior: Behavior) -> ContributorAgent {
        ContributorAgent::new(AgentProfile::new("cc", NodeRole::Contributor).with_behavior(behavior)).unwrap()
    }

    #[test]
    fn profile_validation() {
        let v = AgentProfile::new("v", NodeRole::Validator);
        assert!(v.validate().is_ok());
        assert!(v.clone().with_behavior(Behavior::BallotStuffer).validate().is_err());
        let c = AgentProfile::new("c", NodeRole::Contributor);
        assert!(c.clone().with_behavior(Behavior::Turncoat { switch_at: 0 }).validate().is_err());
        assert!(c.clone().with_behavior(Behavior::Byzantine).validate().is_err());
        assert!(v.clone().with_policy(ScorePolicy::constant(0.4, 0.1)).validate().is_err());
        assert!(v.clone().with_policy(ScorePolicy::constant(1.0, 0.5)).validate().is_err());
        assert!(v.with_policy(ScorePolicy::constant(0.5, 0.49)).validate().is_ok());
        assert!(AgentProfile::new("r", NodeRole::Regular).with_behavior(Behavior::SelfPromoter).validate().is_err());
    }

    #[test]
    fn pool_draws_without_replacement() {
        let mut pool = RulePool::from_corpus(&corpus());
        let mut rng = rng();
        let mut seen = BTreeSet::new();
        for _ in 0..6 {
            let r = pool.draw(RuleClass::Valid, &mut rng).unwrap();
            assert!(seen.insert(r.canonical_form().to_string()));
        }
        assert_eq!(pool.draw(RuleClass::Valid, &mut rng), Err(AgentError::CorpusExhausted(RuleClass::Valid)));
        assert_eq!(pool.remaining(RuleClass::Invalid), 6);
    }

    #[test]
    fn turncoat_switches_after_switch_at() {
        let truth = corpus().ground_truth();
        let mut pool = RulePool::from_corpus(&corpus());
        let mut agent = contributor(Behavior::Turncoat { switch_at: 2 });
        let mut rng = rng();
        let classes: Vec<bool> = (1..=4)
            .map(|round| truth.is_valid(&agent.step(round, &mut pool, &mut rng).unwrap().bundle.rule))
            .collect();
        assert_eq!(classes, [true, true, false, false]);
    }

    #[test]
    fn ballot_stuffer_repeats_first_rule() {
        let truth = corpus().ground_truth();
        let mut pool = RulePool::from_corpus(&corpus());
        let mut agent = contributor(Behavior::BallotStuffer);
        let mut rng = rng();
        let first = agent.step(1, &mut pool, &mut rng).unwrap();
        assert_eq!(first.kind, SubmissionKind::Fresh(RuleClass::Valid));
        let second = agent.step(2, &mut pool, &mut rng).unwrap();
        assert_eq!(second.kind, SubmissionKind::Cosmetic);
        assert!(second.bundle.rule.is_duplicate_of(&first.bundle.rule));
        assert_ne!(second.bundle.address(), first.bundle.address());
        let third = agent.step(3, &mut pool, &mut rng).unwrap();
        assert_eq!(third.kind, SubmissionKind::Verbatim);
        assert_eq!(third.bundle.address(), first.bundle.address());

        let mut validator = ValidatorAgent::new(AgentProfile::new("v", NodeRole::Validator)).unwrap();
        let v1 = validator.step(&first.bundle, &truth, &mut rng);
        assert_eq!((v1.phi, v1.rationale), (Verdict::Valid, Rationale::MatchesGroundTruth));
        let v2 = validator.step(&second.bundle, &truth, &mut rng);
        assert_eq!((v2.phi, v2.rationale), (Verdict::Invalid, Rationale::DuplicateDetected));
        assert!(v2.s < 0.5);
    }

    #[test]
    fn honest_validator_with_constant_policy() {
        let truth = corpus().ground_truth();
        let mut pool = RulePool::from_corpus(&corpus());
        let mut rng = rng();
        let bundle = contributor(Behavior::Honest).step(1, &mut pool, &mut rng).unwrap().bundle;
        let mut v = ValidatorAgent::new(
            AgentProfile::new("v", NodeRole::Validator).with_policy(ScorePolicy::constant(1.0, 0.0)),
        )
        .unwrap();
        let verdict = v.step(&bundle, &truth, &mut rng);
        assert_eq!((verdict.phi, verdict.s), (Verdict::Valid, 1.0));
    }

    #[test]
    fn bad_mouther_only_hits_its_target() {
        let truth = corpus().ground_truth();
        let mut pool = RulePool::from_corpus(&corpus());
        let mut rng = rng();
        let mut target = contributor(Behavior::Honest);
        let mut bystander = ContributorAgent::new(AgentProfile::new("other", NodeRole::Contributor)).unwrap();
        let mut v = ValidatorAgent::new(
            AgentProfile::new("v", NodeRole::Validator).with_behavior(Behavior::BadMouther { target: "cc".into() }),
        )
        .unwrap();
        assert_eq!(v.target_name(), Some("cc"));
        v.add_target_key(target.public_key());

        let hit = v.step(&target.step(1, &mut pool, &mut rng).unwrap().bundle, &truth, &mut rng);
        assert_eq!((hit.phi, hit.rationale), (Verdict::Invalid, Rationale::AdversarialOverride));
        assert!(hit.s < 0.5);
        let miss = v.step(&bystander.step(1, &mut pool, &mut rng).unwrap().bundle, &truth, &mut rng);
        assert_eq!(miss.phi, Verdict::Valid);
    }

    #[test]
    fn byzantine_inverts_with_worst_case_scores() {
        let truth = corpus().ground_truth();
        let mut pool = RulePool::from_corpus(&corpus());
        let mut rng = rng();
        let good = contributor(Behavior::Honest).step(1, &mut pool, &mut rng).unwrap().bundle;
        let bad = contributor(Behavior::AlwaysMalicious).step(1, &mut pool, &mut rng).unwrap().bundle;
        let mut v = ValidatorAgent::new(AgentProfile::new("b", NodeRole::Validator).with_behavior(Behavior::Byzantine)).unwrap();
        let on_good = v.step(&good, &truth, &mut rng);
        assert_eq!((on_good.phi, on_good.s), (Verdict::Invalid, BYZANTINE_REJECT_SCORE));
        let on_bad = v.step(&bad, &truth, &mut rng);
        assert_eq!((on_bad.phi, on_bad.s), (Verdict::Valid, BYZANTINE_ACCEPT_SCORE));
    }

    #[test]
    fn whitewasher_gets_one_fresh_identity() {
        let mut agent = contributor(Behavior::Whitewasher { rejoin_at: 3 });
        let old = agent.public_key();
        assert!(!agent.should_rejoin(2));
        assert!(agent.should_rejoin(3));
        let new = agent.rejoin().public_key();
        assert_ne!(old, new);
        assert_eq!(agent.identities(), vec![old, new]);
        assert!(!agent.should_rejoin(3));
    }

    #[test]
    fn self_vote_only_for_self_promoters() {
        let rule = crate::identity::content_address(b"r");
        assert!(contributor(Behavior::Honest).self_vote(rule, 1).is_none());
        let tx = contributor(Behavior::SelfPromoter).self_vote(rule, 1).unwrap();
        assert!(tx.verify());
    }

    #[test]
    fn regular_inclusion_needs_both_scores() {
        assert!(admits(0.85, 0.8, 0.5));
        assert!(!admits(0.85, 0.1, 0.5));
        assert!(!admits(0.4, 0.9, 0.5));
        assert!(admits(0.5, 0.5, 0.5));
    }

    #[test]
    fn uniform_samples_stay_in_band() {
        let policy = ScorePolicy::default();
        let mut rng = rng();
        for _ in 0..1000 {
            let v = policy.sample(Verdict::Valid, &mut rng);
            let i = policy.sample(Verdict::Invalid, &mut rng);
            assert!((0.9..1.0).contains(&v) && (0.0..0.1).contains(&i));
        }
    }
}
