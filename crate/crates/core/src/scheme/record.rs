//! Versioned binary records for keys, tokens and ciphertexts.
//!
//! Every record starts with a 7-byte header:
//!
//! ```text
//! magic "PLKR" | version u8 | kind u8 | backend id u8
//! ```
//!
//! followed by the body. Group elements are written at their backend's fixed
//! width with no prefix; trees, strings and the sealed document carry a
//! big-endian `u32` length. Bodies, in field order:
//!
//! | kind | body |
//! |------|------|
//! | 1 master public key | `g`, `g^β`, `e(g,g)^α` |
//! | 2 master secret key | `β`, `g^α` |
//! | 3 partial token | tree, `C1`, `C2`, `u32` n, n × (`C3_y`, `C4_y`) |
//! | 4 combined token | same as partial token |
//! | 5 ciphertext | tree, `C1`, `C2`, `u32` n, n × (`C3_y`, `C4_y`), dem id `u8`, nonce (12), `C5` |
//! | 6 attribute key | holder, `u16` m, m × issuer, `D`, `u32` n, n × (label, `D_j`, `D_j'`) |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{
    AttributeKey, Ciphertext, CombinedToken, KeyComponent, LeafPart, MasterPublicKey, MasterSecretKey, PartialToken,
    DEM_ID, NONCE_BYTES,
};
use crate::group::{GroupError, PairingBackend, ScalarField};
use crate::policy::{AccessTree, AttributeLabel, PolicyError};
use crate::wire::{Reader, WireError, Writer};

pub const RECORD_MAGIC: [u8; 4] = *b"PLKR";
pub const FORMAT_VERSION: u8 = 1;
const HEADER_BYTES: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("not a record: bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    VersionMismatch(u8),
    #[error("unknown record kind {0}")]
    UnknownKind(u8),
    #[error("expected a {expected} record, found {found}")]
    WrongKind { expected: RecordKind, found: RecordKind },
    #[error("record was written by backend {found:#04x}, expected {expected:#04x}")]
    BackendMismatch { expected: u8, found: u8 },
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("inconsistent record: {0}")]
    Inconsistent(&'static str),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::VersionMismatch(_) => "version-mismatch",
            FormatError::Group(e) => e.code(),
            _ => "malformed-encoding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    MasterPublicKey = 1,
    MasterSecretKey = 2,
    PartialToken = 3,
    CombinedToken = 4,
    Ciphertext = 5,
    AttributeKey = 6,
}

impl RecordKind {
    fn from_u8(v: u8) -> Result<Self, FormatError> {
        Ok(match v {
            1 => RecordKind::MasterPublicKey,
            2 => RecordKind::MasterSecretKey,
            3 => RecordKind::PartialToken,
            4 => RecordKind::CombinedToken,
            5 => RecordKind::Ciphertext,
            6 => RecordKind::AttributeKey,
            other => return Err(FormatError::UnknownKind(other)),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordKind::MasterPublicKey => "master-public-key",
            RecordKind::MasterSecretKey => "master-secret-key",
            RecordKind::PartialToken => "partial-token",
            RecordKind::CombinedToken => "combined-token",
            RecordKind::Ciphertext => "ciphertext",
            RecordKind::AttributeKey => "attribute-key",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub kind: RecordKind,
    pub backend: u8,
}

impl RecordHeader {
    /// Reads and checks the header of any record.
    pub fn peek(bytes: &[u8]) -> Result<RecordHeader, FormatError> {
        if bytes.len() < HEADER_BYTES {
            return Err(if bytes.starts_with(&RECORD_MAGIC[..bytes.len().min(4)]) {
                FormatError::Wire(WireError::Truncated)
            } else {
                FormatError::BadMagic
            });
        }
        if bytes[..4] != RECORD_MAGIC {
            return Err(FormatError::BadMagic);
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(FormatError::VersionMismatch(bytes[4]));
        }
        Ok(RecordHeader {
            kind: RecordKind::from_u8(bytes[5])?,
            backend: bytes[6],
        })
    }
}

/// A serializable scheme value.
pub trait Record<B: PairingBackend>: Sized {
    const KIND: RecordKind;

    fn encode_body(&self, w: &mut Writer);
    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError>;

    fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&RECORD_MAGIC).u8(FORMAT_VERSION).u8(Self::KIND as u8).u8(B::ID);
        self.encode_body(&mut w);
        w.into_bytes()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let header = RecordHeader::peek(bytes)?;
        if header.kind != Self::KIND {
            return Err(FormatError::WrongKind {
                expected: Self::KIND,
                found: header.kind,
            });
        }
        if header.backend != B::ID {
            return Err(FormatError::BackendMismatch {
                expected: B::ID,
                found: header.backend,
            });
        }
        let mut r = Reader::new(&bytes[HEADER_BYTES..]);
        let value = Self::decode_body(&mut r)?;
        r.finish()?;
        Ok(value)
    }
}

fn put_source<B: PairingBackend>(w: &mut Writer, p: &B::Source) {
    w.raw(&B::encode_source(p));
}

fn put_target<B: PairingBackend>(w: &mut Writer, t: &B::Target) {
    w.raw(&B::encode_target(t));
}

fn get_source<B: PairingBackend>(r: &mut Reader<'_>) -> Result<B::Source, FormatError> {
    Ok(B::decode_source(r.raw(B::SOURCE_BYTES)?)?)
}

fn get_target<B: PairingBackend>(r: &mut Reader<'_>) -> Result<B::Target, FormatError> {
    Ok(B::decode_target(r.raw(B::TARGET_BYTES)?)?)
}

fn put_tree(w: &mut Writer, tree: &AccessTree) {
    w.bytes(&tree.to_bytes());
}

fn get_tree(r: &mut Reader<'_>) -> Result<AccessTree, FormatError> {
    Ok(AccessTree::from_bytes(r.bytes()?)?)
}

fn put_token_body<B: PairingBackend>(
    w: &mut Writer,
    tree: &AccessTree,
    c1: &B::Target,
    c2: &B::Source,
    parts: &[LeafPart<B>],
) {
    put_tree(w, tree);
    put_target::<B>(w, c1);
    put_source::<B>(w, c2);
    w.u32(parts.len() as u32);
    for p in parts {
        put_source::<B>(w, &p.c3);
        put_source::<B>(w, &p.c4);
    }
}

type TokenBody<B> = (
    AccessTree,
    <B as PairingBackend>::Target,
    <B as PairingBackend>::Source,
    Vec<LeafPart<B>>,
);

fn get_token_body<B: PairingBackend>(r: &mut Reader<'_>) -> Result<TokenBody<B>, FormatError> {
    let tree = get_tree(r)?;
    let c1 = get_target::<B>(r)?;
    let c2 = get_source::<B>(r)?;
    let n = r.u32()? as usize;
    if n != tree.leaves().len() {
        return Err(FormatError::Inconsistent("leaf component count differs from tree leaves"));
    }
    let parts = (0..n)
        .map(|_| {
            Ok(LeafPart {
                c3: get_source::<B>(r)?,
                c4: get_source::<B>(r)?,
            })
        })
        .collect::<Result<_, FormatError>>()?;
    Ok((tree, c1, c2, parts))
}

pub(crate) fn ciphertext_header<B: PairingBackend>(
    tree: &AccessTree,
    c1: &B::Target,
    c2: &B::Source,
    parts: &[LeafPart<B>],
    dem: u8,
    nonce: &[u8; NONCE_BYTES],
) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(&RECORD_MAGIC).u8(FORMAT_VERSION).u8(RecordKind::Ciphertext as u8).u8(B::ID);
    put_token_body::<B>(&mut w, tree, c1, c2, parts);
    w.u8(dem).raw(nonce);
    w.into_bytes()
}

impl<B: PairingBackend> Record<B> for MasterPublicKey<B> {
    const KIND: RecordKind = RecordKind::MasterPublicKey;

    fn encode_body(&self, w: &mut Writer) {
        put_source::<B>(w, &self.generator);
        put_source::<B>(w, &self.g_beta);
        put_target::<B>(w, &self.egg_alpha);
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let mpk = MasterPublicKey {
            generator: get_source::<B>(r)?,
            g_beta: get_source::<B>(r)?,
            egg_alpha: get_target::<B>(r)?,
        };
        if mpk.egg_alpha == B::target_identity() {
            return Err(FormatError::Inconsistent("e(g,g)^alpha is the identity"));
        }
        Ok(mpk)
    }
}

impl<B: PairingBackend> Record<B> for MasterSecretKey<B> {
    const KIND: RecordKind = RecordKind::MasterSecretKey;

    fn encode_body(&self, w: &mut Writer) {
        w.raw(&B::encode_scalar(&self.beta));
        put_source::<B>(w, &self.g_alpha);
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let beta = B::decode_scalar(r.raw(B::SCALAR_BYTES)?)?;
        if beta.is_zero() {
            return Err(FormatError::Inconsistent("beta is zero"));
        }
        Ok(MasterSecretKey {
            beta,
            g_alpha: get_source::<B>(r)?,
        })
    }
}

impl<B: PairingBackend> Record<B> for PartialToken<B> {
    const KIND: RecordKind = RecordKind::PartialToken;

    fn encode_body(&self, w: &mut Writer) {
        put_token_body::<B>(w, &self.subtree, &self.c1, &self.c2, &self.leaf_parts);
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let (subtree, c1, c2, leaf_parts) = get_token_body::<B>(r)?;
        Ok(PartialToken {
            subtree,
            c1,
            c2,
            leaf_parts,
        })
    }
}

impl<B: PairingBackend> Record<B> for CombinedToken<B> {
    const KIND: RecordKind = RecordKind::CombinedToken;

    fn encode_body(&self, w: &mut Writer) {
        put_token_body::<B>(w, &self.tree, &self.c1, &self.c2, &self.leaf_parts);
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let (tree, c1, c2, leaf_parts) = get_token_body::<B>(r)?;
        Ok(CombinedToken {
            tree,
            c1,
            c2,
            leaf_parts,
        })
    }
}

impl<B: PairingBackend> Record<B> for Ciphertext<B> {
    const KIND: RecordKind = RecordKind::Ciphertext;

    fn encode_body(&self, w: &mut Writer) {
        put_token_body::<B>(w, &self.tree, &self.c1, &self.c2, &self.leaf_parts);
        w.u8(self.dem).raw(&self.nonce).bytes(&self.c5);
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let (tree, c1, c2, leaf_parts) = get_token_body::<B>(r)?;
        let dem = r.u8()?;
        if dem != DEM_ID {
            return Err(FormatError::Inconsistent("unknown document encryption id"));
        }
        let nonce = r.raw(NONCE_BYTES)?.try_into().expect("fixed width");
        let c5 = r.bytes()?.to_vec();
        if c5.is_empty() {
            return Err(FormatError::Inconsistent("empty sealed document"));
        }
        Ok(Ciphertext {
            tree,
            c1,
            c2,
            leaf_parts,
            dem,
            nonce,
            c5,
        })
    }
}

impl<B: PairingBackend> Record<B> for AttributeKey<B> {
    const KIND: RecordKind = RecordKind::AttributeKey;

    fn encode_body(&self, w: &mut Writer) {
        w.str(&self.holder);
        w.u16(self.issuer_set.len() as u16);
        self.issuer_set.iter().for_each(|i| {
            w.str(i);
        });
        put_source::<B>(w, &self.d);
        w.u32(self.per_attr.len() as u32);
        for (label, c) in &self.per_attr {
            w.str(&label.to_string());
            put_source::<B>(w, &c.d_j);
            put_source::<B>(w, &c.d_j_prime);
        }
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, FormatError> {
        let holder = r.str()?.to_string();
        let issuers = (0..r.u16()?)
            .map(|_| Ok(r.str()?.to_string()))
            .collect::<Result<BTreeSet<_>, FormatError>>()?;
        let d = get_source::<B>(r)?;
        let n = r.u32()? as usize;
        if n.saturating_mul(2 * B::SOURCE_BYTES) > r.remaining() {
            return Err(FormatError::Wire(WireError::Truncated));
        }
        let mut per_attr = BTreeMap::new();
        for _ in 0..n {
            let label: AttributeLabel = r.str()?.parse()?;
            let comp = KeyComponent {
                d_j: get_source::<B>(r)?,
                d_j_prime: get_source::<B>(r)?,
            };
            if per_attr.insert(label, comp).is_some() {
                return Err(FormatError::Inconsistent("duplicate attribute"));
            }
        }
        let key = AttributeKey::from_components(holder, d, per_attr)
            .map_err(|_| FormatError::Inconsistent("key holds no attributes"))?;
        if key.issuer_set != issuers {
            return Err(FormatError::Inconsistent("issuer set does not match attributes"));
        }
        Ok(key)
    }
}
