//! In-process permissioned ledger: node registration, rule submission,
//! validator votes and confirmations, with an append-only transaction log.

mod ledger;
mod tx;
mod txlog;

pub use ledger::{
    BundleCatalog, ChainError, DecisionRecord, Genesis, Ledger, PendingRule, TrustLedgerState,
    TrustRecord, TrustSubject,
};
pub use tx::{
    ChainEvent, ChainTransaction, EventKind, NodeAttributes, NodeRole, Origin,
    RegistrationRequest, RegistrationResponse, TxKind, TxPayload,
};
pub use txlog::{Checkpoint, LogRecord, TransactionLog, TxLogError};
