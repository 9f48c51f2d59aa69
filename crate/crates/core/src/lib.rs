//! Ciphertext-policy attribute-based encryption with reusable two-party
//! encryption tokens.
//!
//! * [`group`]: pairing backends (BLS12-381 and an insecure exponent-tracking
//!   toy used for exact algebraic tests).
//! * [`policy`]: access trees, the policy grammar, share assignment and
//!   Lagrange recombination.
//! * [`scheme`]: setup, partial and combined tokens, token-based hybrid
//!   encryption, key generation and recursive decryption.
//! * [`wire`]: the field encoding used by every binary record.

pub mod group;
pub mod policy;
pub mod scheme;
pub mod wire;

pub use group::{Bls12, GroupError, PairingBackend, ScalarField};
pub use policy::{AccessTree, AttributeLabel, PolicyError};
pub use scheme::{
    combine_tokens, decrypt, decrypt_node, encrypt_with_token, gen_partial_token, keygen, setup, AttributeKey,
    Ciphertext, CombinedToken, FormatError, MasterPublicKey, MasterSecretKey, PartialToken, Record, RecordHeader,
    RecordKind, SchemeError,
};
