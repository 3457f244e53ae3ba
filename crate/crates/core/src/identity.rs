//! Node identities, signatures and content hashing.
//!
//! Keys are Ed25519, derived deterministically from a 32-byte seed so that a
//! scenario always produces the same identities. Every signature covers the
//! SHA-256 digest of a canonical, length-prefixed field encoding rather than
//! the raw payload.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdentityError {
    #[error("invalid hex: {0}")]
    Hex(String),
    #[error("expected {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("bytes are not a valid public key")]
    BadKey,
}

fn decode_fixed<const N: usize>(s: &str) -> Result<[u8; N], IdentityError> {
    let bytes = hex::decode(s).map_err(|e| IdentityError::Hex(e.to_string()))?;
    let actual = bytes.len();
    bytes
        .try_into()
        .map_err(|_| IdentityError::Length { expected: N, actual })
}

macro_rules! hex_newtype {
    ($name:ident, $len:expr) => {
        impl $name {
            pub fn from_bytes(bytes: [u8; $len]) -> Self {
                Self(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.to_hex())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({}…)", stringify!($name), &self.to_hex()[..12])
            }
        }

        impl FromStr for $name {
            type Err = IdentityError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                decode_fixed::<$len>(s).map(Self)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

/// A node's public key `k_p`; also its identifier everywhere in the system.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey([u8; 32]);
hex_newtype!(PublicKey, 32);

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature([u8; 64]);
hex_newtype!(Signature, 64);

/// SHA-256 digest of a stored byte string.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentAddress([u8; 32]);
hex_newtype!(ContentAddress, 32);

pub struct NodeKeyPair {
    signing: SigningKey,
    public: PublicKey,
}

impl NodeKeyPair {
    pub fn public_key(&self) -> PublicKey {
        self.public
    }

    pub fn secret_key(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }
}

impl fmt::Debug for NodeKeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeKeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

impl Clone for NodeKeyPair {
    fn clone(&self) -> Self {
        generate_keypair(self.signing.to_bytes())
    }
}

pub fn generate_keypair(seed: [u8; 32]) -> NodeKeyPair {
    let signing = SigningKey::from_bytes(&seed);
    let public = PublicKey(signing.verifying_key().to_bytes());
    NodeKeyPair { signing, public }
}

/// Seed derived from a human-readable label, for scenario files.
pub fn seed_from_label(label: &str) -> [u8; 32] {
    Sha256::digest(label.as_bytes()).into()
}

/// Length-prefixed concatenation: each field is written as a big-endian
/// `u32` length followed by its bytes.
#[derive(Debug, Default, Clone)]
pub struct CanonicalEncoder {
    buf: Vec<u8>,
}

impl CanonicalEncoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, bytes: &[u8]) -> Self {
        let len = u32::try_from(bytes.len()).expect("field longer than u32::MAX");
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn str(self, s: &str) -> Self {
        self.field(s.as_bytes())
    }

    pub fn u64(self, v: u64) -> Self {
        self.field(&v.to_be_bytes())
    }

    pub fn i8(self, v: i8) -> Self {
        self.field(&v.to_be_bytes())
    }

    /// Exact bit pattern, so signatures bind the precise float.
    pub fn f64(self, v: f64) -> Self {
        self.field(&v.to_bits().to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

fn digest(payload: &[u8]) -> [u8; 32] {
    Sha256::digest(payload).into()
}

/// Signs `sha256(payload)`.
pub fn sign_message(key: &NodeKeyPair, payload: &[u8]) -> Signature {
    Signature(key.signing.sign(&digest(payload)).to_bytes())
}

pub fn verify_signature(public_key: &PublicKey, payload: &[u8], signature: &Signature) -> bool {
    let Ok(vk) = VerifyingKey::from_bytes(&public_key.0) else {
        return false;
    };
    let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
    vk.verify(&digest(payload), &sig).is_ok()
}

pub fn content_address(bundle_bytes: &[u8]) -> ContentAddress {
    ContentAddress(digest(bundle_bytes))
}
