//! Newline-delimited transaction log export.
//!
//! One JSON record per line: a `genesis` record first, then one
//! `transaction` record per applied transaction, then a `checkpoint` with
//! the transaction count and the ledger state digest.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ledger::{Genesis, Ledger};
use super::tx::ChainTransaction;

#[derive(Debug, Error)]
pub enum TxLogError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("log does not start with a genesis record")]
    MissingGenesis,
    #[error("line {0}: record out of place")]
    OutOfOrder(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Genesis(Genesis),
    Transaction(Box<ChainTransaction>),
    Checkpoint {
        transactions: usize,
        state_digest: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub transactions: usize,
    pub state_digest: String,
}

#[derive(Debug, Clone)]
pub struct TransactionLog {
    pub genesis: Genesis,
    pub transactions: Vec<ChainTransaction>,
    pub checkpoint: Option<Checkpoint>,
}

impl TransactionLog {
    pub fn from_ledger(ledger: &Ledger) -> Self {
        Self {
            genesis: ledger.genesis().clone(),
            transactions: ledger.log().to_vec(),
            checkpoint: Some(Checkpoint {
                transactions: ledger.log().len(),
                state_digest: ledger.state_digest(),
            }),
        }
    }

    pub fn write_to(&self, mut out: impl Write) -> Result<(), TxLogError> {
        let mut line = |record: &LogRecord| -> Result<(), TxLogError> {
            serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
            Ok(())
        };
        line(&LogRecord::Genesis(self.genesis.clone()))?;
        for tx in &self.transactions {
            line(&LogRecord::Transaction(Box::new(tx.clone())))?;
        }
        if let Some(cp) = &self.checkpoint {
            line(&LogRecord::Checkpoint {
                transactions: cp.transactions,
                state_digest: cp.state_digest.clone(),
            })?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_from(input: impl BufRead) -> Result<Self, TxLogError> {
        let mut genesis = None;
        let mut transactions = Vec::new();
        let mut checkpoint = None;
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let number = idx + 1;
            let record: LogRecord = serde_json::from_str(&line)
                .map_err(|source| TxLogError::Parse { line: number, source })?;
            match record {
                LogRecord::Genesis(g) if genesis.is_none() => genesis = Some(g),
                LogRecord::Transaction(tx) if genesis.is_some() && checkpoint.is_none() => {
                    transactions.push(*tx)
                }
                LogRecord::Checkpoint {
                    transactions: count,
                    state_digest,
                } if genesis.is_some() && checkpoint.is_none() => {
                    checkpoint = Some(Checkpoint {
                        transactions: count,
                        state_digest,
                    })
                }
                LogRecord::Genesis(_) | LogRecord::Transaction(_) | LogRecord::Checkpoint { .. } => {
                    return Err(if genesis.is_none() {
                        TxLogError::MissingGenesis
                    } else {
                        TxLogError::OutOfOrder(number)
                    });
                }
            }
        }
        Ok(Self {
            genesis: genesis.ok_or(TxLogError::MissingGenesis)?,
            transactions,
            checkpoint,
        })
    }
}
