//! One versioned, checksummed binary file per store.
//!
//! ```text
//! magic "PLST" | version u8 | store kind u8 | backend id u8 | u32 len | body | SHA-256 of all preceding bytes
//! ```
//!
//! Bodies use the core field encoding, with scheme values embedded as their
//! own length-prefixed records. Loading reads and validates every file before
//! any state is built, so a bad file never yields a partial service.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use privlocker_core::wire::{Reader, Writer};
use privlocker_core::{
    AttributeKey, AttributeLabel, Ciphertext, CombinedToken, MasterPublicKey, MasterSecretKey, PairingBackend, Record,
};
use sha2::{Digest, Sha256};

use crate::registry::{AttributeEntry, AttributeRegistry};
use crate::service::{IssuerRecord, State};
use crate::store::{DocumentStore, EDocument, KeyStore, TokenKey, TokenStats, TokenStore};
use crate::uri::DocumentUri;
use crate::LockerError;

pub const STORE_MAGIC: [u8; 4] = *b"PLST";
pub const STORE_VERSION: u8 = 1;
const CHECKSUM_BYTES: usize = 32;
const PREAMBLE_BYTES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StoreKind {
    Authority = 1,
    Registry = 2,
    Keys = 3,
    Tokens = 4,
    Documents = 5,
}

impl StoreKind {
    pub const ALL: [StoreKind; 5] = [
        StoreKind::Authority,
        StoreKind::Registry,
        StoreKind::Keys,
        StoreKind::Tokens,
        StoreKind::Documents,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            StoreKind::Authority => "authority.plst",
            StoreKind::Registry => "registry.plst",
            StoreKind::Keys => "keys.plst",
            StoreKind::Tokens => "tokens.plst",
            StoreKind::Documents => "documents.plst",
        }
    }
}

fn corrupt(what: &'static str) -> LockerError {
    LockerError::CorruptStore(what)
}

fn seal_file<B: PairingBackend>(kind: StoreKind, body: &[u8]) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(&STORE_MAGIC).u8(STORE_VERSION).u8(kind as u8).u8(B::ID).bytes(body);
    let mut out = w.into_bytes();
    let sum = Sha256::digest(&out);
    out.extend_from_slice(&sum);
    out
}

/// Checks framing and checksum; returns the body.
fn open_file<B: PairingBackend>(kind: StoreKind, bytes: &[u8]) -> Result<&[u8], LockerError> {
    if bytes.len() < PREAMBLE_BYTES || bytes[..4] != STORE_MAGIC {
        return Err(corrupt("bad store magic"));
    }
    if bytes[4] != STORE_VERSION {
        return Err(LockerError::StoreVersion(bytes[4]));
    }
    if bytes.len() < PREAMBLE_BYTES + 4 + CHECKSUM_BYTES {
        return Err(LockerError::ChecksumMismatch(kind.file_name()));
    }
    let (framed, sum) = bytes.split_at(bytes.len() - CHECKSUM_BYTES);
    if Sha256::digest(framed).as_slice() != sum {
        return Err(LockerError::ChecksumMismatch(kind.file_name()));
    }
    if bytes[5] != kind as u8 {
        return Err(corrupt("store kind does not match file"));
    }
    if bytes[6] != B::ID {
        return Err(corrupt("store was written by another backend"));
    }
    let mut r = Reader::new(&framed[PREAMBLE_BYTES..]);
    let body = r.bytes().map_err(|_| corrupt("body length"))?;
    r.finish().map_err(|_| corrupt("bytes after body"))?;
    Ok(body)
}

fn record<B: PairingBackend, T: Record<B>>(r: &mut Reader<'_>) -> Result<T, LockerError> {
    let bytes = r.bytes().map_err(|_| corrupt("truncated record"))?;
    Ok(T::from_bytes(bytes)?)
}

fn string(r: &mut Reader<'_>) -> Result<String, LockerError> {
    r.str().map(str::to_string).map_err(|_| corrupt("truncated string"))
}

fn u64_(r: &mut Reader<'_>) -> Result<u64, LockerError> {
    r.u64().map_err(|_| corrupt("truncated integer"))
}

fn count(r: &mut Reader<'_>) -> Result<usize, LockerError> {
    let n = r.u32().map_err(|_| corrupt("truncated count"))? as usize;
    // Every entry takes at least four bytes; reject absurd counts early.
    if n > r.remaining() / 4 + 1 {
        return Err(corrupt("entry count exceeds file"));
    }
    Ok(n)
}

fn put_len(w: &mut Writer, n: usize) {
    w.u32(u32::try_from(n).expect("fewer than 2^32 entries"));
}

fn encode_authority<B: PairingBackend>(s: &State<B>) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(&s.msk.to_bytes()).bytes(&s.mpk.to_bytes()).u64(s.clock);
    put_len(&mut w, s.issuers.len());
    for (id, rec) in &s.issuers {
        w.str(id).u64(rec.registered_at);
        put_len(&mut w, rec.catalog.len());
        for name in &rec.catalog {
            w.str(name);
        }
    }
    w.into_bytes()
}

type AuthorityParts<B> = (MasterSecretKey<B>, MasterPublicKey<B>, u64, BTreeMap<String, IssuerRecord>);

fn decode_authority<B: PairingBackend>(body: &[u8]) -> Result<AuthorityParts<B>, LockerError> {
    let mut r = Reader::new(body);
    let msk = record::<B, MasterSecretKey<B>>(&mut r)?;
    let mpk = record::<B, MasterPublicKey<B>>(&mut r)?;
    let clock = u64_(&mut r)?;
    let mut issuers = BTreeMap::new();
    for _ in 0..count(&mut r)? {
        let id = string(&mut r)?;
        let registered_at = u64_(&mut r)?;
        let catalog = (0..count(&mut r)?).map(|_| string(&mut r)).collect::<Result<BTreeSet<_>, _>>()?;
        if issuers.insert(id, IssuerRecord { catalog, registered_at }).is_some() {
            return Err(corrupt("duplicate issuer"));
        }
    }
    r.finish().map_err(|_| corrupt("trailing authority bytes"))?;
    Ok((msk, mpk, clock, issuers))
}

fn encode_registry(reg: &AttributeRegistry) -> Vec<u8> {
    let mut w = Writer::new();
    put_len(&mut w, reg.raw().len());
    for (id, entries) in reg.raw() {
        w.str(id);
        put_len(&mut w, entries.len());
        for (label, e) in entries {
            w.str(&label.to_string()).str(&e.issuer).u64(e.updated_at);
        }
    }
    w.into_bytes()
}

fn decode_registry(body: &[u8]) -> Result<AttributeRegistry, LockerError> {
    let mut r = Reader::new(body);
    let mut identities = BTreeMap::new();
    for _ in 0..count(&mut r)? {
        let id = string(&mut r)?;
        let mut entries = BTreeMap::new();
        for _ in 0..count(&mut r)? {
            let label: AttributeLabel = string(&mut r)?.parse()?;
            let issuer = string(&mut r)?;
            let updated_at = u64_(&mut r)?;
            if issuer != label.authority() {
                return Err(corrupt("attribute issuer differs from label authority"));
            }
            entries.insert(label, AttributeEntry { issuer, updated_at });
        }
        identities.insert(id, entries);
    }
    r.finish().map_err(|_| corrupt("trailing registry bytes"))?;
    Ok(AttributeRegistry::from_raw(identities))
}

fn encode_keys<B: PairingBackend>(keys: &KeyStore<B>) -> Vec<u8> {
    let mut w = Writer::new();
    put_len(&mut w, keys.len());
    for (_, key) in keys.iter() {
        w.bytes(&key.to_bytes());
    }
    w.into_bytes()
}

fn decode_keys<B: PairingBackend>(body: &[u8]) -> Result<KeyStore<B>, LockerError> {
    let mut r = Reader::new(body);
    let mut keys = KeyStore::default();
    for _ in 0..count(&mut r)? {
        let key = record::<B, AttributeKey<B>>(&mut r)?;
        // A saved store already satisfies the redundancy rule, so every
        // insert must land without evicting anything.
        match keys.insert(key) {
            crate::store::KeyInsert::Stored { evicted, .. } if evicted.is_empty() => {}
            _ => return Err(corrupt("key store violates the redundancy rule")),
        }
    }
    r.finish().map_err(|_| corrupt("trailing key bytes"))?;
    Ok(keys)
}

fn encode_tokens<B: PairingBackend>(tokens: &TokenStore<B>) -> Vec<u8> {
    let mut w = Writer::new();
    let stats = tokens.stats();
    w.u64(stats.hits).u64(stats.handshakes);
    put_len(&mut w, tokens.len());
    for (k, t) in tokens.iter() {
        w.str(&k.subscriber).str(&k.issuer).raw(&k.policy_hash).bytes(&t.to_bytes());
    }
    w.into_bytes()
}

fn decode_tokens<B: PairingBackend>(body: &[u8]) -> Result<TokenStore<B>, LockerError> {
    let mut r = Reader::new(body);
    let mut tokens = TokenStore::default();
    tokens.stats = TokenStats {
        hits: u64_(&mut r)?,
        handshakes: u64_(&mut r)?,
    };
    for _ in 0..count(&mut r)? {
        let subscriber = string(&mut r)?;
        let issuer = string(&mut r)?;
        let hash: [u8; 32] = r
            .raw(32)
            .map_err(|_| corrupt("truncated policy hash"))?
            .try_into()
            .expect("32 bytes");
        let token = record::<B, CombinedToken<B>>(&mut r)?;
        let key = TokenKey::new(&subscriber, &issuer, token.tree());
        if key.policy_hash != hash {
            return Err(corrupt("token policy hash mismatch"));
        }
        tokens.insert_raw(key, token);
    }
    r.finish().map_err(|_| corrupt("trailing token bytes"))?;
    Ok(tokens)
}

fn encode_documents<B: PairingBackend>(docs: &DocumentStore<B>) -> Vec<u8> {
    let mut w = Writer::new();
    put_len(&mut w, docs.len());
    for (uri, doc) in docs.iter() {
        w.str(&uri.to_string())
            .u64(doc.created_at)
            .bytes(&doc.issuer_signature)
            .bytes(&doc.ciphertext.to_bytes());
    }
    w.into_bytes()
}

fn decode_documents<B: PairingBackend>(body: &[u8]) -> Result<DocumentStore<B>, LockerError> {
    let mut r = Reader::new(body);
    let mut docs = DocumentStore::default();
    for _ in 0..count(&mut r)? {
        let uri: DocumentUri = string(&mut r)?.parse()?;
        let created_at = u64_(&mut r)?;
        let issuer_signature = r.bytes().map_err(|_| corrupt("truncated signature"))?.to_vec();
        let ciphertext = record::<B, Ciphertext<B>>(&mut r)?;
        let doc = EDocument {
            uri,
            ciphertext,
            issuer_signature,
            created_at,
        };
        if !docs.insert(doc) {
            return Err(corrupt("duplicate document URI"));
        }
    }
    r.finish().map_err(|_| corrupt("trailing document bytes"))?;
    Ok(docs)
}

pub(crate) fn encode_state<B: PairingBackend>(s: &State<B>) -> Vec<(StoreKind, Vec<u8>)> {
    let bodies = [
        (StoreKind::Authority, encode_authority(s)),
        (StoreKind::Registry, encode_registry(&s.registry)),
        (StoreKind::Keys, encode_keys(&s.keys)),
        (StoreKind::Tokens, encode_tokens(&s.tokens)),
        (StoreKind::Documents, encode_documents(&s.documents)),
    ];
    bodies.into_iter().map(|(k, body)| (k, seal_file::<B>(k, &body))).collect()
}

pub(crate) fn decode_state<B: PairingBackend>(files: &[(StoreKind, Vec<u8>)]) -> Result<State<B>, LockerError> {
    let body = |kind: StoreKind| -> Result<&[u8], LockerError> {
        let (_, bytes) = files.iter().find(|(k, _)| *k == kind).ok_or(corrupt("missing store file"))?;
        open_file::<B>(kind, bytes)
    };
    let (msk, mpk, clock, issuers) = decode_authority::<B>(body(StoreKind::Authority)?)?;
    Ok(State {
        msk,
        mpk,
        clock,
        issuers,
        registry: decode_registry(body(StoreKind::Registry)?)?,
        keys: decode_keys(body(StoreKind::Keys)?)?,
        tokens: decode_tokens(body(StoreKind::Tokens)?)?,
        documents: decode_documents(body(StoreKind::Documents)?)?,
    })
}

pub fn is_initialized(dir: &Path) -> bool {
    dir.join(StoreKind::Authority.file_name()).is_file()
}

pub(crate) fn read_dir<B: PairingBackend>(dir: &Path) -> Result<State<B>, LockerError> {
    if !is_initialized(dir) {
        return Err(LockerError::StoreMissing(dir.display().to_string()));
    }
    let files = StoreKind::ALL
        .iter()
        .map(|&k| Ok((k, fs::read(dir.join(k.file_name()))?)))
        .collect::<Result<Vec<_>, LockerError>>()?;
    decode_state(&files)
}

/// Writes every store to a temporary sibling, syncs it, then renames all of
/// them into place.
pub(crate) fn write_dir<B: PairingBackend>(dir: &Path, s: &State<B>) -> Result<(), LockerError> {
    fs::create_dir_all(dir)?;
    let files = encode_state(s);
    let mut staged = Vec::with_capacity(files.len());
    for (kind, bytes) in &files {
        let tmp = dir.join(format!("{}.tmp", kind.file_name()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        staged.push((tmp, dir.join(kind.file_name())));
    }
    for (tmp, dst) in staged {
        fs::rename(tmp, dst)?;
    }
    Ok(())
}
