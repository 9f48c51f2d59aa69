//! Prime-order group arithmetic behind a symmetric pairing contract.
//!
//! Everything in the scheme is written against [`PairingBackend`]. Two
//! implementations exist:
//!
//! * [`Bls12`]: BLS12-381, where each logical source element is carried as a
//!   correlated (G1, G2) pair so the asymmetric curve can stand in for a
//!   symmetric `e: G0 x G0 -> G1`.
//! * [`toy::Toy`]: exponent bookkeeping over a 61-bit prime. **Not secure.**
//!   Elements are their own discrete logarithms, which makes every algebraic
//!   identity in the scheme checkable exactly.
//!
//! Group operations in source and target groups are written
//! multiplicatively, matching the usual pairing notation.

mod bls;
pub mod toy;

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, RngCore};

pub use bls::{Bls12, Bls12Scalar, Bls12Source, Bls12Target};

/// Domain separation tag for attribute hashing. Format constant: changing it
/// invalidates every stored key and ciphertext.
pub const HASH_TO_GROUP_DST: &[u8] = b"PRIVLOCKER-V01-CS01-with-BLS12381G_XMD:SHA-256_SSWU_RO_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("malformed {what} encoding: expected {expected} bytes, got {actual}")]
    Length {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("malformed {0} encoding")]
    Malformed(&'static str),
    #[error("{0} encoding is not a valid group element")]
    OffGroup(&'static str),
}

impl GroupError {
    pub fn code(&self) -> &'static str {
        match self {
            GroupError::Length { .. } | GroupError::Malformed(_) => "malformed-encoding",
            GroupError::OffGroup(_) => "off-group-point",
        }
    }
}

/// Arithmetic in `Z_p`.
pub trait ScalarField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    /// Multiplicative inverse; `None` for zero.
    fn inverse(&self) -> Option<Self>;
}

/// A prime-order group with a symmetric bilinear map, a hash onto the
/// source group, and canonical fixed-length encodings.
///
/// `pair` is bilinear and non-degenerate. It is symmetric for any two
/// elements derived from the generator by exponentiation. Outputs of
/// [`hash_to_group`](Self::hash_to_group) must only ever appear as the
/// *second* argument of `pair` (see [`Bls12`] for why).
pub trait PairingBackend: Copy + Debug + Default + PartialEq + Eq + Send + Sync + 'static {
    /// Identifier byte written into every serialized record.
    const ID: u8;
    const NAME: &'static str;
    const SCALAR_BYTES: usize;
    const SOURCE_BYTES: usize;
    const TARGET_BYTES: usize;

    type Scalar: ScalarField;
    type Source: Copy + Eq + Debug + Send + Sync + 'static;
    type Target: Copy + Eq + Debug + Send + Sync + 'static;

    /// Uniform scalar in `[1, p-1]`.
    fn random_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self::Scalar;

    fn generator() -> Self::Source;
    fn source_identity() -> Self::Source;
    fn source_mul(a: &Self::Source, b: &Self::Source) -> Self::Source;
    fn exp(base: &Self::Source, e: &Self::Scalar) -> Self::Source;

    fn target_identity() -> Self::Target;
    fn target_mul(a: &Self::Target, b: &Self::Target) -> Self::Target;
    fn target_inverse(a: &Self::Target) -> Self::Target;
    fn target_exp(base: &Self::Target, e: &Self::Scalar) -> Self::Target;
    fn target_div(a: &Self::Target, b: &Self::Target) -> Self::Target {
        Self::target_mul(a, &Self::target_inverse(b))
    }

    fn pair(p: &Self::Source, q: &Self::Source) -> Self::Target;

    /// `pair(a, b) / pair(c, d)`; backends may share the final exponentiation.
    fn pair_ratio(a: &Self::Source, b: &Self::Source, c: &Self::Source, d: &Self::Source) -> Self::Target {
        Self::target_div(&Self::pair(a, b), &Self::pair(c, d))
    }

    /// `pair(g, g)`.
    fn target_generator() -> Self::Target;

    fn hash_to_group(msg: &[u8]) -> Self::Source;

    fn encode_scalar(s: &Self::Scalar) -> Vec<u8>;
    fn decode_scalar(bytes: &[u8]) -> Result<Self::Scalar, GroupError>;
    fn encode_source(p: &Self::Source) -> Vec<u8>;
    fn decode_source(bytes: &[u8]) -> Result<Self::Source, GroupError>;
    fn encode_target(t: &Self::Target) -> Vec<u8>;
    fn decode_target(bytes: &[u8]) -> Result<Self::Target, GroupError>;
}

pub(crate) fn check_len(what: &'static str, expected: usize, bytes: &[u8]) -> Result<(), GroupError> {
    if bytes.len() != expected {
        return Err(GroupError::Length {
            what,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(())
}
