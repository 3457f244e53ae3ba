//! Trust and reputation mathematics.
//!
//! Everything in here is a pure function of its inputs. Per-rule trust `t` is
//! the weighted mean of the validators' quality scores, contributor
//! reputation `T` is an exponentially decayed average of the contributor's
//! per-rule trust values, and the accept/reject decision is a weighted
//! majority over `(verdict, score)` pairs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::identity::PublicKey;

/// Scores at or above this value count as a "valid" vote.
pub const VALID_SCORE_FLOOR: f64 = 0.5;

/// Slack allowed on inclusive upper bounds to absorb binary64 rounding in
/// sums such as `0.85 + 0.85 + 0.85 + 0.85`.
pub const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("expected {expected} votes, got {actual}")]
    WrongVoteCount { expected: usize, actual: usize },
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("verdict {phi:+} inconsistent with score {score}")]
    VerdictScoreMismatch { phi: i8, score: f64 },
    #[error("verdict must be +1 or -1, got {0}")]
    BadVerdict(i8),
    #[error("rule trust {0} violates its bounds")]
    RuleTrustOutOfBounds(f64),
}

/// Tunable constants of the trust model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrmParams {
    pub delta_val: f64,
    pub delta_inv: f64,
    pub gamma: f64,
    #[serde(default = "default_q_threshold")]
    pub q_threshold: f64,
    pub n_validators: usize,
}

fn default_q_threshold() -> f64 {
    TrmParams::DEFAULT_Q_THRESHOLD
}

impl TrmParams {
    pub const DEFAULT_Q_THRESHOLD: f64 = 0.5;

    pub fn new(
        delta_val: f64,
        delta_inv: f64,
        gamma: f64,
        q_threshold: f64,
        n_validators: usize,
    ) -> Result<Self, TrmError> {
        let params = Self {
            delta_val,
            delta_inv,
            gamma,
            q_threshold,
            n_validators,
        };
        params.validate()?;
        Ok(params)
    }

    /// `δ_val = 0.85, δ_inv = 0.9, γ = 0.85, q = 0.5, n = 4`.
    pub fn reference() -> Self {
        Self {
            delta_val: 0.85,
            delta_inv: 0.9,
            gamma: 0.85,
            q_threshold: Self::DEFAULT_Q_THRESHOLD,
            n_validators: 4,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<(), TrmError> {
        let bad = |msg: String| Err(TrmError::InvalidParams(msg));
        if !(self.delta_val > 0.0 && self.delta_val < self.delta_inv && self.delta_inv <= 1.0) {
            return bad(format!(
                "need 0 < delta_val < delta_inv <= 1, got delta_val={} delta_inv={}",
                self.delta_val, self.delta_inv
            ));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("need 0 < gamma <= 1, got {}", self.gamma));
        }
        if !(self.q_threshold > 0.0 && self.q_threshold <= 1.0) {
            return bad(format!("need 0 < q_threshold <= 1, got {}", self.q_threshold));
        }
        if self.n_validators == 0 {
            return bad("n_validators must be positive".into());
        }
        Ok(())
    }

    /// Checks the validator count against a byzantine budget `ℓ`: any
    /// `ℓ >= 1` requires exactly `n = 3ℓ + 1` validators.
    pub fn validate_byzantine(&self, byzantine_budget: usize) -> Result<(), TrmError> {
        self.validate()?;
        if byzantine_budget >= 1 && self.n_validators != 3 * byzantine_budget + 1 {
            return Err(TrmError::InvalidParams(format!(
                "byzantine budget {byzantine_budget} needs {} validators, got {}",
                3 * byzantine_budget + 1,
                self.n_validators
            )));
        }
        Ok(())
    }

    /// Which bound family applies: `δ_inv < 2·δ_val` gives the tighter `δ_val` cap.
    pub fn regime(&self) -> BoundRegime {
        if self.delta_inv < 2.0 * self.delta_val {
            BoundRegime::ValidWeightCap
        } else {
            BoundRegime::HalfInvalidWeightCap
        }
    }

    /// Per-vote weight `δ_e`.
    pub fn weight_for(&self, score: f64) -> f64 {
        if score >= VALID_SCORE_FLOOR {
            self.delta_val
        } else {
            self.delta_inv
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundRegime {
    /// `δ_inv < 2·δ_val`: upper bound `δ_val`, inclusive.
    ValidWeightCap,
    /// `δ_inv >= 2·δ_val`: upper bound `δ_inv / 2`, exclusive.
    HalfInvalidWeightCap,
}

/// A validator's verdict on a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Verdict {
    Valid,
    Invalid,
}

impl Verdict {
    pub fn sign(self) -> i8 {
        match self {
            Verdict::Valid => 1,
            Verdict::Invalid => -1,
        }
    }

    pub fn from_sign(phi: i8) -> Result<Self, TrmError> {
        match phi {
            1 => Ok(Verdict::Valid),
            -1 => Ok(Verdict::Invalid),
            other => Err(TrmError::BadVerdict(other)),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Verdict::Valid => Verdict::Invalid,
            Verdict::Invalid => Verdict::Valid,
        }
    }
}

impl From<Verdict> for i8 {
    fn from(v: Verdict) -> i8 {
        v.sign()
    }
}

impl TryFrom<i8> for Verdict {
    type Error = TrmError;
    fn try_from(phi: i8) -> Result<Self, TrmError> {
        Verdict::from_sign(phi)
    }
}

/// One validator's `(φ, S)` vote. The sign and the score band are coupled:
/// a valid verdict needs `S ∈ [0.5, 1]`, an invalid one `S ∈ [0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVote")]
pub struct VoteScore {
    phi: Verdict,
    s: f64,
    validator_index: usize,
}

#[derive(Deserialize)]
struct RawVote {
    phi: Verdict,
    s: f64,
    validator_index: usize,
}

impl TryFrom<RawVote> for VoteScore {
    type Error = TrmError;
    fn try_from(raw: RawVote) -> Result<Self, TrmError> {
        VoteScore::new(raw.phi, raw.s, raw.validator_index)
    }
}

impl VoteScore {
    pub fn new(phi: Verdict, s: f64, validator_index: usize) -> Result<Self, TrmError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(TrmError::ScoreOutOfRange(s));
        }
        let band_ok = match phi {
            Verdict::Valid => s >= VALID_SCORE_FLOOR,
            Verdict::Invalid => s < VALID_SCORE_FLOOR,
        };
        if !band_ok {
            return Err(TrmError::VerdictScoreMismatch { phi: phi.sign(), score: s });
        }
        Ok(Self { phi, s, validator_index })
    }

    pub fn from_sign(phi: i8, s: f64, validator_index: usize) -> Result<Self, TrmError> {
        Self::new(Verdict::from_sign(phi)?, s, validator_index)
    }

    pub fn phi(&self) -> Verdict {
        self.phi
    }

    pub fn score(&self) -> f64 {
        self.s
    }

    pub fn validator_index(&self) -> usize {
        self.validator_index
    }
}

/// Outcome of the weighted-majority rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn sign(self) -> i8 {
        match self {
            Decision::Accept => 1,
            Decision::Reject => -1,
        }
    }

    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

impl From<Decision> for i8 {
    fn from(d: Decision) -> i8 {
        d.sign()
    }
}

impl TryFrom<i8> for Decision {
    type Error = TrmError;
    fn try_from(v: i8) -> Result<Self, TrmError> {
        match v {
            1 => Ok(Decision::Accept),
            -1 => Ok(Decision::Reject),
            other => Err(TrmError::BadVerdict(other)),
        }
    }
}

/// Aggregated trust of one rule together with the decision it received.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleTrust {
    pub t: f64,
    pub decision: Decision,
    pub vote_count: usize,
}

fn check_votes(votes: &[VoteScore], params: &TrmParams) -> Result<(), TrmError> {
    if votes.len() != params.n_validators {
        return Err(TrmError::WrongVoteCount {
            expected: params.n_validators,
            actual: votes.len(),
        });
    }
    // VoteScore enforces the band at construction, but deserialised or
    // hand-built values are re-checked here.
    for v in votes {
        if !(0.0..=1.0).contains(&v.s) {
            return Err(TrmError::ScoreOutOfRange(v.s));
        }
    }
    Ok(())
}

/// `t = (1/n) Σ S_e·δ_e`.
pub fn aggregate_rule_trust(votes: &[VoteScore], params: &TrmParams) -> Result<f64, TrmError> {
    check_votes(votes, params)?;
    let sum: f64 = votes.iter().map(|v| v.s * params.weight_for(v.s)).sum();
    Ok(sum / params.n_validators as f64)
}

/// Accept iff `(1/n) Σ S_e·φ_e >= q`. Ties accept.
pub fn decide_validity(votes: &[VoteScore], params: &TrmParams) -> Result<Decision, TrmError> {
    check_votes(votes, params)?;
    let sum: f64 = votes.iter().map(|v| v.s * f64::from(v.phi.sign())).sum();
    if sum / params.n_validators as f64 >= params.q_threshold {
        Ok(Decision::Accept)
    } else {
        Ok(Decision::Reject)
    }
}

/// Trust, decision and count in one pass over the same vote vector.
pub fn evaluate_rule(votes: &[VoteScore], params: &TrmParams) -> Result<RuleTrust, TrmError> {
    Ok(RuleTrust {
        t: aggregate_rule_trust(votes, params)?,
        decision: decide_validity(votes, params)?,
        vote_count: votes.len(),
    })
}

/// Lower/upper limits on a trust value. `upper_inclusive = false` means the
/// upper limit itself is unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrustBounds {
    pub lower: f64,
    pub upper: f64,
    pub upper_inclusive: bool,
}

impl TrustBounds {
    pub fn contains(&self, value: f64) -> bool {
        if !value.is_finite() || value < self.lower {
            return false;
        }
        if self.upper_inclusive {
            value <= self.upper + BOUND_TOLERANCE
        } else {
            value < self.upper
        }
    }
}

/// Range of a single rule's trust `t`.
///
/// At exactly `δ_inv = 2·δ_val` the half-invalid-weight cap equals `δ_val`
/// and is reached by a unanimous `S = 1` vote, so the cap is treated as
/// inclusive there.
pub fn rule_trust_bounds(params: &TrmParams) -> TrustBounds {
    match params.regime() {
        BoundRegime::ValidWeightCap => TrustBounds {
            lower: 0.0,
            upper: params.delta_val,
            upper_inclusive: true,
        },
        BoundRegime::HalfInvalidWeightCap => TrustBounds {
            lower: 0.0,
            upper: params.delta_inv / 2.0,
            upper_inclusive: params.delta_inv == 2.0 * params.delta_val,
        },
    }
}

/// Range of a contributor's reputation after `m` contributions.
pub fn reputation_bounds(params: &TrmParams, m: usize) -> TrustBounds {
    let per_rule = rule_trust_bounds(params);
    let scale = 1.0 - params.gamma.powi(m as i32);
    TrustBounds {
        lower: 0.0,
        upper: scale * per_rule.upper,
        // m = 0 pins T at exactly 0 = upper.
        upper_inclusive: per_rule.upper_inclusive || m == 0,
    }
}

/// A contributor's running reputation plus the per-rule history it was
/// computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributorReputation {
    pub contributor: PublicKey,
    #[serde(rename = "T")]
    pub value: f64,
    pub history: Vec<f64>,
}

impl ContributorReputation {
    pub fn new(contributor: PublicKey) -> Self {
        Self {
            contributor,
            value: 0.0,
            history: Vec::new(),
        }
    }

    /// Number of scored contributions `m`.
    pub fn m(&self) -> usize {
        self.history.len()
    }
}

/// Folds one more rule trust into the reputation:
/// `T_m = γ·T_{m-1} + (1-γ)·t_m`.
pub fn update_reputation(
    current: &ContributorReputation,
    new_t: f64,
    params: &TrmParams,
) -> Result<ContributorReputation, TrmError> {
    if !rule_trust_bounds(params).contains(new_t) {
        return Err(TrmError::RuleTrustOutOfBounds(new_t));
    }
    let mut next = current.clone();
    next.value = params.gamma * current.value + (1.0 - params.gamma) * new_t;
    next.history.push(new_t);
    Ok(next)
}

/// Fewest contributions after which a constant per-rule trust `t` lifts the
/// reputation to at least `fraction·t`, i.e. smallest `m` with
/// `1 - γ^m >= fraction`. `None` if `γ = 1` (the reputation never moves).
pub fn rounds_to_fraction(gamma: f64, fraction: f64) -> Option<usize> {
    if gamma >= 1.0 || !(0.0..1.0).contains(&fraction) {
        return None;
    }
    let mut m = 0usize;
    let mut remaining = 1.0;
    while 1.0 - remaining < fraction {
        remaining *= gamma;
        m += 1;
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vote(phi: i8, s: f64, i: usize) -> VoteScore {
        VoteScore::from_sign(phi, s, i).unwrap()
    }

    fn key() -> PublicKey {
        PublicKey::from_bytes([7; 32])
    }

    /// Literal `(1-γ) Σ γ^(m-j) t_j`, kept independent of the recurrence.
    fn direct_sum(history: &[f64], gamma: f64) -> f64 {
        let m = history.len();
        (1.0 - gamma)
            * history
                .iter()
                .enumerate()
                .map(|(idx, t)| gamma.powi((m - (idx + 1)) as i32) * t)
                .sum::<f64>()
    }

    #[test]
    fn unanimous_valid_trust_is_delta_val() {
        let p = TrmParams::reference();
        let votes: Vec<_> = (0..4).map(|i| vote(1, 1.0, i)).collect();
        let t = aggregate_rule_trust(&votes, &p).unwrap();
        assert!((t - 0.85).abs() < 1e-9);
    }

    #[test]
    fn zero_scores_give_zero_trust() {
        let p = TrmParams::reference();
        let votes: Vec<_> = (0..4).map(|i| vote(-1, 0.0, i)).collect();
        assert_eq!(aggregate_rule_trust(&votes, &p).unwrap(), 0.0);
    }

    #[test]
    fn mixed_votes_weight_each_band() {
        let p = TrmParams::reference();
        let votes = [vote(1, 1.0, 0), vote(1, 1.0, 1), vote(1, 1.0, 2), vote(-1, 0.4, 3)];
        let t = aggregate_rule_trust(&votes, &p).unwrap();
        assert!((t - 0.7275).abs() < 1e-9, "{t}");
    }

    #[test]
    fn wrong_vote_count_is_rejected() {
        let p = TrmParams::reference();
        let votes = [vote(1, 1.0, 0)];
        assert_eq!(
            aggregate_rule_trust(&votes, &p),
            Err(TrmError::WrongVoteCount { expected: 4, actual: 1 })
        );
        assert!(decide_validity(&votes, &p).is_err());
    }

    #[test]
    fn score_domain_and_band_coupling() {
        assert_eq!(VoteScore::from_sign(1, 1.5, 0), Err(TrmError::ScoreOutOfRange(1.5)));
        assert_eq!(VoteScore::from_sign(-1, -0.1, 0), Err(TrmError::ScoreOutOfRange(-0.1)));
        assert!(matches!(
            VoteScore::from_sign(1, 0.3, 0),
            Err(TrmError::VerdictScoreMismatch { .. })
        ));
        assert!(matches!(
            VoteScore::from_sign(-1, 0.5, 0),
            Err(TrmError::VerdictScoreMismatch { .. })
        ));
        assert_eq!(VoteScore::from_sign(0, 0.3, 0), Err(TrmError::BadVerdict(0)));
        assert!(VoteScore::from_sign(1, 0.5, 0).is_ok());
    }

    #[test]
    fn deserialising_a_vote_rechecks_the_band() {
        let ok: VoteScore = serde_json::from_str(r#"{"phi":1,"s":0.9,"validator_index":2}"#).unwrap();
        assert_eq!(ok.validator_index(), 2);
        assert!(serde_json::from_str::<VoteScore>(r#"{"phi":1,"s":0.2,"validator_index":0}"#).is_err());
    }

    #[test]
    fn decision_examples() {
        let p = TrmParams::reference();
        let all_good: Vec<_> = (0..4).map(|i| vote(1, 0.9, i)).collect();
        assert_eq!(decide_validity(&all_good, &p).unwrap(), Decision::Accept);

        let all_bad: Vec<_> = (0..4).map(|i| vote(-1, 0.0, i)).collect();
        assert_eq!(decide_validity(&all_bad, &p).unwrap(), Decision::Reject);

        // (3 - 0.49) / 4 = 0.6275
        let one_flip = [vote(1, 1.0, 0), vote(1, 1.0, 1), vote(1, 1.0, 2), vote(-1, 0.49, 3)];
        assert_eq!(decide_validity(&one_flip, &p).unwrap(), Decision::Accept);
    }

    #[test]
    fn threshold_tie_accepts() {
        let mut p = TrmParams::reference();
        p.q_threshold = 0.75;
        // weighted sum is exactly 3.0, mean exactly 0.75
        let votes = [vote(1, 1.0, 0), vote(1, 1.0, 1), vote(1, 1.0, 2), vote(-1, 0.0, 3)];
        assert_eq!(decide_validity(&votes, &p).unwrap(), Decision::Accept);
        p.q_threshold = 0.76;
        assert_eq!(decide_validity(&votes, &p).unwrap(), Decision::Reject);
    }

    #[test]
    fn first_update_from_zero() {
        let p = TrmParams::reference();
        let r = update_reputation(&ContributorReputation::new(key()), 0.85, &p).unwrap();
        assert_eq!(r.m(), 1);
        assert!((r.value - 0.1275).abs() < 1e-12);
    }

    #[test]
    fn constant_trust_matches_closed_form_and_direct_sum() {
        let p = TrmParams::reference();
        let mut r = ContributorReputation::new(key());
        for _ in 0..55 {
            r = update_reputation(&r, 0.85, &p).unwrap();
        }
        let closed = (1.0 - 0.85f64.powi(55)) * 0.85;
        assert!((r.value - closed).abs() < 1e-12);
        assert!((r.value - direct_sum(&r.history, p.gamma)).abs() < 1e-12);
        assert!((r.value - 0.84989).abs() < 1e-5);
    }

    #[test]
    fn zero_trust_decays_geometrically() {
        let p = TrmParams::reference();
        let mut r = ContributorReputation::new(key());
        r = update_reputation(&r, 0.8, &p).unwrap();
        let start = r.value;
        for k in 1..=20 {
            r = update_reputation(&r, 0.0, &p).unwrap();
            assert!((r.value - start * p.gamma.powi(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn update_rejects_out_of_bounds_trust() {
        let p = TrmParams::reference();
        let r = ContributorReputation::new(key());
        assert_eq!(update_reputation(&r, 0.9, &p), Err(TrmError::RuleTrustOutOfBounds(0.9)));
        assert!(update_reputation(&r, -0.01, &p).is_err());
    }

    #[test]
    fn bounds_examples() {
        let p = TrmParams::reference();
        let b = reputation_bounds(&p, 10_000);
        assert!((b.upper - 0.85).abs() < 1e-12 && b.upper_inclusive);

        let zero = reputation_bounds(&p, 0);
        assert_eq!((zero.lower, zero.upper), (0.0, 0.0));
        assert!(zero.contains(0.0));

        let second = TrmParams::new(0.3, 0.9, 0.5, 0.5, 4).unwrap();
        assert_eq!(second.regime(), BoundRegime::HalfInvalidWeightCap);
        let b = reputation_bounds(&second, 2);
        assert!((b.upper - 0.3375).abs() < 1e-12);
        assert!(!b.upper_inclusive);
        assert!(!b.contains(0.3375));
    }

    #[test]
    fn equal_weights_boundary_is_inclusive() {
        let p = TrmParams::new(0.4, 0.8, 0.85, 0.5, 4).unwrap();
        let votes: Vec<_> = (0..4).map(|i| vote(1, 1.0, i)).collect();
        let t = aggregate_rule_trust(&votes, &p).unwrap();
        assert!(rule_trust_bounds(&p).contains(t));
    }

    #[test]
    fn param_validation() {
        assert!(TrmParams::new(0.9, 0.85, 0.85, 0.5, 4).is_err());
        assert!(TrmParams::new(0.85, 1.1, 0.85, 0.5, 4).is_err());
        assert!(TrmParams::new(0.85, 0.9, 0.0, 0.5, 4).is_err());
        assert!(TrmParams::new(0.85, 0.9, 0.85, 0.0, 4).is_err());
        assert!(TrmParams::new(0.85, 0.9, 1.0, 1.0, 4).is_ok());
        let p = TrmParams::reference();
        assert!(p.validate_byzantine(1).is_ok());
        assert!(p.validate_byzantine(2).is_err());
        assert!(p.validate_byzantine(0).is_ok());
        let seven = TrmParams { n_validators: 7, ..p };
        assert!(seven.validate_byzantine(2).is_ok());
    }

    #[test]
    fn rounds_to_fraction_matches_log_ratio() {
        for gamma in [0.8, 0.85, 0.9] {
            let m = rounds_to_fraction(gamma, 0.99).unwrap();
            let exact = (0.01f64.ln() / gamma.ln()).ceil() as usize;
            assert_eq!(m, exact, "gamma {gamma}");
        }
        assert_eq!(rounds_to_fraction(1.0, 0.99), None);
    }

    fn arb_vote(i: usize) -> impl Strategy<Value = VoteScore> {
        prop_oneof![
            (0.5f64..=1.0).prop_map(move |s| vote(1, s, i)),
            (0.0f64..0.5).prop_map(move |s| vote(-1, s, i)),
        ]
    }

    fn arb_votes(n: usize) -> impl Strategy<Value = Vec<VoteScore>> {
        (0..n).map(arb_vote).collect::<Vec<_>>()
    }

    fn arb_params() -> impl Strategy<Value = TrmParams> {
        (0.05f64..0.95, 0.0f64..1.0, 0.05f64..=1.0).prop_filter_map(
            "ordered deltas",
            |(dv, frac, gamma)| {
                let di = dv + (1.0 - dv) * frac;
                TrmParams::new(dv, di, gamma, 0.5, 4).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn rule_trust_within_bounds(p in arb_params(), votes in arb_votes(4)) {
            let t = aggregate_rule_trust(&votes, &p).unwrap();
            prop_assert!(rule_trust_bounds(&p).contains(t), "t={t} p={p:?}");
        }

        #[test]
        fn decision_ignores_vote_order(votes in arb_votes(4), seed in any::<u64>()) {
            let p = TrmParams::reference();
            let mut shuffled = votes.clone();
            let len = shuffled.len();
            shuffled.rotate_left((seed as usize) % len);
            shuffled.swap(0, (seed as usize / 7) % len);
            prop_assert_eq!(decide_validity(&votes, &p), decide_validity(&shuffled, &p));
            let a = aggregate_rule_trust(&votes, &p).unwrap();
            let b = aggregate_rule_trust(&shuffled, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn recurrence_equals_direct_sum(
            gamma in 0.05f64..=1.0,
            history in proptest::collection::vec(0.0f64..=0.85, 0..1000),
        ) {
            let p = TrmParams::reference().with_gamma(gamma);
            let mut r = ContributorReputation::new(key());
            for t in &history {
                r = update_reputation(&r, *t, &p).unwrap();
                prop_assert!(reputation_bounds(&p, r.m()).contains(r.value));
            }
            prop_assert!((r.value - direct_sum(&history, gamma)).abs() < 1e-12);
        }

        #[test]
        fn constant_trust_strictly_increases(gamma in 0.05f64..0.99, t in 0.01f64..=0.85) {
            let p = TrmParams::reference().with_gamma(gamma);
            let mut r = ContributorReputation::new(key());
            let mut prev = 0.0;
            for _ in 0..40 {
                r = update_reputation(&r, t, &p).unwrap();
                if (t - r.value).abs() > 1e-15 {
                    prop_assert!(r.value > prev);
                }
                prop_assert!(r.value <= t + 1e-15);
                prev = r.value;
            }
        }
    }
}
