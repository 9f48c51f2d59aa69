//! Exponent-bookkeeping backend. **Not secure: discrete logs are in the clear.**
//!
//! Every source element is stored as its discrete log with respect to `g`,
//! every target element as its log with respect to `e(g, g)`. Pairing is
//! multiplication of logs. This turns each exponent identity of the scheme
//! into an exact equality over `Z_p` that tests can assert directly.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::{check_len, GroupError, PairingBackend, ScalarField, HASH_TO_GROUP_DST};

/// The Mersenne prime `2^61 - 1`.
pub const TOY_ORDER: u64 = (1 << 61) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ToyScalar(u64);

impl ToyScalar {
    pub fn new(v: u64) -> Self {
        ToyScalar(v % TOY_ORDER)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    fn pow(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = ToyScalar(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl fmt::Debug for ToyScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for ToyScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyScalar((self.0 + rhs.0) % TOY_ORDER)
    }
}

impl Sub for ToyScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ToyScalar((self.0 + TOY_ORDER - rhs.0) % TOY_ORDER)
    }
}

impl Mul for ToyScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ToyScalar(((self.0 as u128 * rhs.0 as u128) % TOY_ORDER as u128) as u64)
    }
}

impl Neg for ToyScalar {
    type Output = Self;
    fn neg(self) -> Self {
        ToyScalar((TOY_ORDER - self.0) % TOY_ORDER)
    }
}

impl ScalarField for ToyScalar {
    fn zero() -> Self {
        ToyScalar(0)
    }

    fn one() -> Self {
        ToyScalar(1)
    }

    fn from_u64(v: u64) -> Self {
        ToyScalar::new(v)
    }

    fn inverse(&self) -> Option<Self> {
        (self.0 != 0).then(|| self.pow(TOY_ORDER - 2))
    }
}

/// Source element `g^log`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ToySource(pub ToyScalar);

/// Target element `e(g, g)^log`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ToyTarget(pub ToyScalar);

impl ToySource {
    pub fn log(&self) -> ToyScalar {
        self.0
    }
}

impl ToyTarget {
    pub fn log(&self) -> ToyScalar {
        self.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Toy;

const ELEMENT_TAG: u8 = 0xA5;

fn encode_tagged(v: ToyScalar) -> Vec<u8> {
    let mut out = Vec::with_capacity(9);
    out.push(ELEMENT_TAG);
    out.extend_from_slice(&v.0.to_be_bytes());
    out
}

fn decode_tagged(what: &'static str, bytes: &[u8]) -> Result<ToyScalar, GroupError> {
    check_len(what, 9, bytes)?;
    if bytes[0] != ELEMENT_TAG {
        return Err(GroupError::OffGroup(what));
    }
    let v = u64::from_be_bytes(bytes[1..].try_into().expect("length checked"));
    if v >= TOY_ORDER {
        return Err(GroupError::OffGroup(what));
    }
    Ok(ToyScalar(v))
}

impl PairingBackend for Toy {
    const ID: u8 = 0xF0;
    const NAME: &'static str = "toy-insecure";
    const SCALAR_BYTES: usize = 8;
    const SOURCE_BYTES: usize = 9;
    const TARGET_BYTES: usize = 9;

    type Scalar = ToyScalar;
    type Source = ToySource;
    type Target = ToyTarget;

    fn random_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> ToyScalar {
        loop {
            // 61 uniform bits; reject the two out-of-range values and zero.
            let v = rng.next_u64() >> 3;
            if v != 0 && v < TOY_ORDER {
                return ToyScalar(v);
            }
        }
    }

    fn generator() -> ToySource {
        ToySource(ToyScalar(1))
    }

    fn source_identity() -> ToySource {
        ToySource(ToyScalar(0))
    }

    fn source_mul(a: &ToySource, b: &ToySource) -> ToySource {
        ToySource(a.0 + b.0)
    }

    fn exp(base: &ToySource, e: &ToyScalar) -> ToySource {
        ToySource(base.0 * *e)
    }

    fn target_identity() -> ToyTarget {
        ToyTarget(ToyScalar(0))
    }

    fn target_mul(a: &ToyTarget, b: &ToyTarget) -> ToyTarget {
        ToyTarget(a.0 + b.0)
    }

    fn target_inverse(a: &ToyTarget) -> ToyTarget {
        ToyTarget(-a.0)
    }

    fn target_exp(base: &ToyTarget, e: &ToyScalar) -> ToyTarget {
        ToyTarget(base.0 * *e)
    }

    fn pair(p: &ToySource, q: &ToySource) -> ToyTarget {
        ToyTarget(p.0 * q.0)
    }

    fn target_generator() -> ToyTarget {
        ToyTarget(ToyScalar(1))
    }

    fn hash_to_group(msg: &[u8]) -> ToySource {
        let digest = Sha256::new().chain_update(HASH_TO_GROUP_DST).chain_update(msg).finalize();
        let v = u64::from_be_bytes(digest[..8].try_into().expect("sha256 is 32 bytes")) % TOY_ORDER;
        ToySource(ToyScalar(v.max(1)))
    }

    fn encode_scalar(s: &ToyScalar) -> Vec<u8> {
        s.0.to_be_bytes().to_vec()
    }

    fn decode_scalar(bytes: &[u8]) -> Result<ToyScalar, GroupError> {
        check_len("scalar", 8, bytes)?;
        let v = u64::from_be_bytes(bytes.try_into().expect("length checked"));
        if v >= TOY_ORDER {
            return Err(GroupError::Malformed("scalar"));
        }
        Ok(ToyScalar(v))
    }

    fn encode_source(p: &ToySource) -> Vec<u8> {
        encode_tagged(p.0)
    }

    fn decode_source(bytes: &[u8]) -> Result<ToySource, GroupError> {
        decode_tagged("source element", bytes).map(ToySource)
    }

    fn encode_target(t: &ToyTarget) -> Vec<u8> {
        encode_tagged(t.0)
    }

    fn decode_target(bytes: &[u8]) -> Result<ToyTarget, GroupError> {
        decode_tagged("target element", bytes).map(ToyTarget)
    }
}
