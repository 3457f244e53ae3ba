use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bundle::{BundleError, RuleBundle};
use crate::identity::{content_address, ContentAddress, PublicKey};

pub const BUNDLE_EXTENSION: &str = "bundle";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("access denied for {0}")]
    AccessDenied(PublicKey),
    #[error("no bundle stored at {0}")]
    NotFound(ContentAddress),
    #[error("bundle at {address} hashes to {actual}")]
    Integrity {
        address: ContentAddress,
        actual: ContentAddress,
    },
    #[error("bad bundle at {path}: {source}")]
    Malformed { path: PathBuf, source: BundleError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What a registered node may do against the store. Only subscribed nodes
/// may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoreAccess {
    WriteOnly,
    Subscribed,
}

/// Append-only content-addressed bundle store with a registry-backed
/// access list.
#[derive(Debug, Default, Clone)]
pub struct RuleStore {
    bundles: BTreeMap<ContentAddress, Vec<u8>>,
    access: BTreeMap<PublicKey, StoreAccess>,
}

impl RuleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grant(&mut self, node: PublicKey, access: StoreAccess) {
        self.access.insert(node, access);
    }

    pub fn access_of(&self, node: &PublicKey) -> Option<StoreAccess> {
        self.access.get(node).copied()
    }

    pub fn put_bundle(
        &mut self,
        bundle: &RuleBundle,
        caller: &PublicKey,
    ) -> Result<ContentAddress, StoreError> {
        if self.access_of(caller).is_none() {
            return Err(StoreError::AccessDenied(*caller));
        }
        let bytes = bundle.to_canonical_bytes();
        let address = content_address(&bytes);
        self.bundles.entry(address).or_insert(bytes);
        Ok(address)
    }

    pub fn get_bundle(
        &self,
        address: &ContentAddress,
        caller: &PublicKey,
    ) -> Result<RuleBundle, StoreError> {
        if self.access_of(caller) != Some(StoreAccess::Subscribed) {
            return Err(StoreError::AccessDenied(*caller));
        }
        let bytes = self
            .bundles
            .get(address)
            .ok_or(StoreError::NotFound(*address))?;
        RuleBundle::from_canonical_bytes(bytes).map_err(|source| StoreError::Malformed {
            path: PathBuf::from(address.to_hex()),
            source,
        })
    }

    pub fn contains(&self, address: &ContentAddress) -> bool {
        self.bundles.contains_key(address)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentAddress, &[u8])> {
        self.bundles.iter().map(|(a, b)| (a, b.as_slice()))
    }

    /// Re-hashes every stored bundle; returns how many were checked.
    pub fn audit(&self) -> Result<usize, StoreError> {
        for (address, bytes) in &self.bundles {
            let actual = content_address(bytes);
            if actual != *address {
                return Err(StoreError::Integrity {
                    address: *address,
                    actual,
                });
            }
        }
        Ok(self.bundles.len())
    }

    /// Writes one `<hex address>.bundle` file per stored bundle.
    pub fn write_dir(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir).map_err(|source| StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (address, bytes) in &self.bundles {
            let path = dir.join(format!("{}.{BUNDLE_EXTENSION}", address.to_hex()));
            fs::write(&path, bytes).map_err(|source| StoreError::Io { path, source })?;
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn corrupt(&mut self, address: &ContentAddress) {
        if let Some(bytes) = self.bundles.get_mut(address) {
            bytes.push(b'!');
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirAudit {
    pub checked: usize,
    pub mismatched: Vec<PathBuf>,
    pub malformed: Vec<PathBuf>,
}

impl DirAudit {
    pub fn is_clean(&self) -> bool {
        self.mismatched.is_empty() && self.malformed.is_empty()
    }
}

/// Audits a directory of `.bundle` files: each file's SHA-256 must equal
/// its file stem, and its contents must parse as a bundle.
pub fn audit_bundle_dir(dir: &Path) -> Result<DirAudit, StoreError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StoreError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == BUNDLE_EXTENSION))
        .collect();
    paths.sort();

    let mut audit = DirAudit {
        checked: 0,
        mismatched: Vec::new(),
        malformed: Vec::new(),
    };
    for path in paths {
        let bytes = fs::read(&path).map_err(io(&path))?;
        audit.checked += 1;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        match stem.parse::<ContentAddress>() {
            Ok(expected) if expected == content_address(&bytes) => {}
            _ => audit.mismatched.push(path.clone()),
        }
        if RuleBundle::from_canonical_bytes(&bytes).is_err() {
            audit.malformed.push(path);
        }
    }
    Ok(audit)
}
