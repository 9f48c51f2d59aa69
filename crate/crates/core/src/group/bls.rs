use std::sync::OnceLock;

use ark_bls12_381::{g1, g2, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::{CurveGroup, PrimeGroup};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{Field, UniformRand, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use super::{check_len, GroupError, PairingBackend, ScalarField, HASH_TO_GROUP_DST};

pub type Bls12Scalar = Fr;
pub type Bls12Target = PairingOutput<Bls12_381>;

/// A logical element `g^x` of the symmetric source group, held as
/// `(g1^x, g2^x)` and exponentiated in lockstep.
///
/// `pair(P, Q)` is `e(P.g1, Q.g2)`, which equals `e(Q.g1, P.g2)` whenever both
/// sides of each operand share a discrete log. Hash outputs are the exception:
/// the two sides are hashed independently, so their logs are unrelated, and
/// only their G2 side enters a pairing (as the second argument).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bls12Source {
    g1: G1Projective,
    g2: G2Projective,
}

/// BLS12-381 with the symmetric source-group emulation described on
/// [`Bls12Source`]. Group order is the 255-bit prime `r` of the curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bls12;

impl ScalarField for Fr {
    fn zero() -> Self {
        <Fr as Zero>::zero()
    }

    fn one() -> Self {
        <Fr as ark_ff::One>::one()
    }

    fn from_u64(v: u64) -> Self {
        Fr::from(v)
    }

    fn inverse(&self) -> Option<Self> {
        Field::inverse(self)
    }
}

const G1_BYTES: usize = 48;
const G2_BYTES: usize = 96;

fn target_generator() -> &'static Bls12Target {
    static EGG: OnceLock<Bls12Target> = OnceLock::new();
    EGG.get_or_init(|| Bls12_381::pairing(G1Projective::generator(), G2Projective::generator()))
}

impl PairingBackend for Bls12 {
    const ID: u8 = 0x01;
    const NAME: &'static str = "bls12-381";
    const SCALAR_BYTES: usize = 32;
    const SOURCE_BYTES: usize = G1_BYTES + G2_BYTES;
    const TARGET_BYTES: usize = 576;

    type Scalar = Fr;
    type Source = Bls12Source;
    type Target = Bls12Target;

    fn random_scalar<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Fr {
        loop {
            let s = Fr::rand(rng);
            if !Zero::is_zero(&s) {
                return s;
            }
        }
    }

    fn generator() -> Bls12Source {
        Bls12Source {
            g1: G1Projective::generator(),
            g2: G2Projective::generator(),
        }
    }

    fn source_identity() -> Bls12Source {
        Bls12Source {
            g1: G1Projective::zero(),
            g2: G2Projective::zero(),
        }
    }

    fn source_mul(a: &Bls12Source, b: &Bls12Source) -> Bls12Source {
        Bls12Source {
            g1: a.g1 + b.g1,
            g2: a.g2 + b.g2,
        }
    }

    fn exp(base: &Bls12Source, e: &Fr) -> Bls12Source {
        Bls12Source {
            g1: base.g1 * e,
            g2: base.g2 * e,
        }
    }

    fn target_identity() -> Bls12Target {
        PairingOutput::zero()
    }

    fn target_mul(a: &Bls12Target, b: &Bls12Target) -> Bls12Target {
        *a + *b
    }

    fn target_inverse(a: &Bls12Target) -> Bls12Target {
        -*a
    }

    fn target_exp(base: &Bls12Target, e: &Fr) -> Bls12Target {
        *base * e
    }

    fn pair(p: &Bls12Source, q: &Bls12Source) -> Bls12Target {
        Bls12_381::pairing(p.g1, q.g2)
    }

    fn pair_ratio(a: &Bls12Source, b: &Bls12Source, c: &Bls12Source, d: &Bls12Source) -> Bls12Target {
        Bls12_381::multi_pairing([a.g1, -c.g1], [b.g2, d.g2])
    }

    fn target_generator() -> Bls12Target {
        *target_generator()
    }

    fn hash_to_group(msg: &[u8]) -> Bls12Source {
        let h1 = MapToCurveBasedHasher::<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>::new(
            HASH_TO_GROUP_DST,
        )
        .and_then(|h| h.hash(msg))
        .expect("hash-to-curve over G1 is total");
        let h2 = MapToCurveBasedHasher::<G2Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g2::Config>>::new(
            HASH_TO_GROUP_DST,
        )
        .and_then(|h| h.hash(msg))
        .expect("hash-to-curve over G2 is total");
        Bls12Source {
            g1: h1.into(),
            g2: h2.into(),
        }
    }

    fn encode_scalar(s: &Fr) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::SCALAR_BYTES);
        s.serialize_compressed(&mut out).expect("vec write");
        out
    }

    fn decode_scalar(bytes: &[u8]) -> Result<Fr, GroupError> {
        check_len("scalar", Self::SCALAR_BYTES, bytes)?;
        Fr::deserialize_compressed(bytes).map_err(|_| GroupError::Malformed("scalar"))
    }

    fn encode_source(p: &Bls12Source) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::SOURCE_BYTES);
        p.g1.into_affine().serialize_compressed(&mut out).expect("vec write");
        p.g2.into_affine().serialize_compressed(&mut out).expect("vec write");
        out
    }

    fn decode_source(bytes: &[u8]) -> Result<Bls12Source, GroupError> {
        check_len("source element", Self::SOURCE_BYTES, bytes)?;
        let (b1, b2) = bytes.split_at(G1_BYTES);
        // Compressed decoding checks the point is on the curve and in the
        // prime-order subgroup.
        let g1 = G1Affine::deserialize_compressed(b1).map_err(|_| GroupError::OffGroup("G1"))?;
        let g2 = G2Affine::deserialize_compressed(b2).map_err(|_| GroupError::OffGroup("G2"))?;
        Ok(Bls12Source {
            g1: g1.into(),
            g2: g2.into(),
        })
    }

    fn encode_target(t: &Bls12Target) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::TARGET_BYTES);
        t.serialize_compressed(&mut out).expect("vec write");
        out
    }

    fn decode_target(bytes: &[u8]) -> Result<Bls12Target, GroupError> {
        check_len("target element", Self::TARGET_BYTES, bytes)?;
        PairingOutput::deserialize_compressed(bytes).map_err(|_| GroupError::OffGroup("target"))
    }
}
