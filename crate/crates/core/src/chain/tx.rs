use std::fmt;

use serde::{Deserialize, Serialize};

use crate::identity::{
    sign_message, verify_signature, CanonicalEncoder, ContentAddress, NodeKeyPair, PublicKey,
    Signature,
};
use crate::trm::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Validator,
    Contributor,
    Regular,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Validator => "validator",
            NodeRole::Contributor => "contributor",
            NodeRole::Regular => "regular",
        }
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `attr_cr`: network address, a unique identifier and the requested role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAttributes {
    pub ip_address: String,
    pub node_uid: String,
    pub role: NodeRole,
}

/// `Req = <k_p, attr, timestamp, Sig>`, signed by the joining node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationRequest {
    pub public_key: PublicKey,
    pub attributes: NodeAttributes,
    pub timestamp: u64,
    pub signature: Signature,
}

impl RegistrationRequest {
    pub fn signed(key: &NodeKeyPair, attributes: NodeAttributes, timestamp: u64) -> Self {
        let payload = Self::signing_payload(&key.public_key(), &attributes, timestamp);
        Self {
            public_key: key.public_key(),
            signature: sign_message(key, &payload),
            attributes,
            timestamp,
        }
    }

    fn signing_payload(public_key: &PublicKey, attrs: &NodeAttributes, timestamp: u64) -> Vec<u8> {
        CanonicalEncoder::new()
            .str("req")
            .field(public_key.as_bytes())
            .str(&attrs.ip_address)
            .str(&attrs.node_uid)
            .str(attrs.role.as_str())
            .u64(timestamp)
            .finish()
    }

    pub fn verify(&self) -> bool {
        let payload = Self::signing_payload(&self.public_key, &self.attributes, self.timestamp);
        verify_signature(&self.public_key, &payload, &self.signature)
    }
}

/// Connection details handed back to a newly registered node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistrationResponse {
    pub role: NodeRole,
    pub storage_bootstrap: String,
    pub trm_contract: String,
    pub storage_contract: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Registration,
    RuleSubmission,
    ValidationVote,
    RuleConfirmation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TxPayload {
    Registration {
        request: RegistrationRequest,
        approver: PublicKey,
    },
    /// `Tx_r`: the hash address of the stored bundle.
    RuleSubmission { rule: ContentAddress },
    /// `Tx_c`: one validator's verdict and score on a pending rule.
    ValidationVote {
        rule: ContentAddress,
        phi: Verdict,
        score: f64,
    },
    /// `Tx_f`: emitted by the contract when a rule is accepted.
    RuleConfirmation { rule: ContentAddress, trust: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Node(PublicKey),
    Contract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTransaction {
    pub payload: TxPayload,
    pub timestamp: u64,
    pub origin: Origin,
    pub signature: Option<Signature>,
}

impl ChainTransaction {
    pub fn registration(request: RegistrationRequest, approver: PublicKey) -> Self {
        Self {
            timestamp: request.timestamp,
            origin: Origin::Node(request.public_key),
            signature: Some(request.signature),
            payload: TxPayload::Registration { request, approver },
        }
    }

    pub fn rule_submission(key: &NodeKeyPair, rule: ContentAddress, timestamp: u64) -> Self {
        Self::signed(key, TxPayload::RuleSubmission { rule }, timestamp)
    }

    pub fn validation_vote(
        key: &NodeKeyPair,
        rule: ContentAddress,
        phi: Verdict,
        score: f64,
        timestamp: u64,
    ) -> Self {
        Self::signed(key, TxPayload::ValidationVote { rule, phi, score }, timestamp)
    }

    pub(crate) fn confirmation(rule: ContentAddress, trust: f64, timestamp: u64) -> Self {
        Self {
            payload: TxPayload::RuleConfirmation { rule, trust },
            timestamp,
            origin: Origin::Contract,
            signature: None,
        }
    }

    fn signed(key: &NodeKeyPair, payload: TxPayload, timestamp: u64) -> Self {
        let mut tx = Self {
            payload,
            timestamp,
            origin: Origin::Node(key.public_key()),
            signature: None,
        };
        tx.signature = Some(sign_message(key, &tx.signing_payload()));
        tx
    }

    pub fn kind(&self) -> TxKind {
        match self.payload {
            TxPayload::Registration { .. } => TxKind::Registration,
            TxPayload::RuleSubmission { .. } => TxKind::RuleSubmission,
            TxPayload::ValidationVote { .. } => TxKind::ValidationVote,
            TxPayload::RuleConfirmation { .. } => TxKind::RuleConfirmation,
        }
    }

    pub fn sender(&self) -> Option<PublicKey> {
        match self.origin {
            Origin::Node(pk) => Some(pk),
            Origin::Contract => None,
        }
    }

    /// Rule address this transaction concerns, if any.
    pub fn rule(&self) -> Option<ContentAddress> {
        match &self.payload {
            TxPayload::Registration { .. } => None,
            TxPayload::RuleSubmission { rule }
            | TxPayload::ValidationVote { rule, .. }
            | TxPayload::RuleConfirmation { rule, .. } => Some(*rule),
        }
    }

    /// Bytes covered by the sender's signature.
    pub fn signing_payload(&self) -> Vec<u8> {
        match &self.payload {
            TxPayload::Registration { request, .. } => RegistrationRequest::signing_payload(
                &request.public_key,
                &request.attributes,
                request.timestamp,
            ),
            TxPayload::RuleSubmission { rule } => CanonicalEncoder::new()
                .str("tx_r")
                .field(rule.as_bytes())
                .u64(self.timestamp)
                .finish(),
            TxPayload::ValidationVote { rule, phi, score } => CanonicalEncoder::new()
                .str("tx_c")
                .field(rule.as_bytes())
                .i8(phi.sign())
                .f64(*score)
                .u64(self.timestamp)
                .finish(),
            TxPayload::RuleConfirmation { rule, trust } => CanonicalEncoder::new()
                .str("tx_f")
                .field(rule.as_bytes())
                .f64(*trust)
                .u64(self.timestamp)
                .finish(),
        }
    }

    /// Node transactions need a valid signature from their origin; contract
    /// transactions carry none.
    pub fn verify(&self) -> bool {
        match (&self.origin, &self.signature) {
            (Origin::Node(pk), Some(sig)) => {
                if let TxPayload::Registration { request, .. } = &self.payload {
                    if request.public_key != *pk || request.signature != *sig {
                        return false;
                    }
                }
                verify_signature(pk, &self.signing_payload(), sig)
            }
            (Origin::Contract, None) => matches!(self.payload, TxPayload::RuleConfirmation { .. }),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A rule is queued for validation.
    NewRuleForValidation,
    /// A rule has been accepted into the trusted database.
    RuleConfirmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEvent {
    pub kind: EventKind,
    pub rule_address: ContentAddress,
    /// Log position (1-based) of the transaction that raised the event.
    pub emitted_at: u64,
    pub sequence: u64,
}
