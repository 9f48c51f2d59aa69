use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use privlocker_core::{AccessTree, AttributeKey, Ciphertext, CombinedToken, PairingBackend};
use sha2::{Digest, Sha256};

use crate::uri::DocumentUri;

/// Names a stored key: its holder and the issuers it covers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyHandle {
    pub identity: String,
    pub issuers: BTreeSet<String>,
}

impl fmt::Display for KeyHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let issuers: Vec<&str> = self.issuers.iter().map(String::as_str).collect();
        write!(f, "{}[{}]", self.identity, issuers.join(","))
    }
}

/// What [`KeyStore::insert`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeyInsert {
    /// Stored under `handle`; `evicted` keys covered a proper subset of its
    /// issuers.
    Stored { handle: KeyHandle, evicted: Vec<KeyHandle> },
    /// Not stored: `by` already covers a proper superset of the issuers.
    Dominated { by: KeyHandle },
}

/// Attribute keys by (identity, issuer set). For one identity no stored
/// issuer set is a proper subset of another.
#[derive(Debug, Clone)]
pub struct KeyStore<B: PairingBackend> {
    keys: BTreeMap<KeyHandle, AttributeKey<B>>,
}

impl<B: PairingBackend> Default for KeyStore<B> {
    fn default() -> Self {
        KeyStore { keys: BTreeMap::new() }
    }
}

fn proper_subset(a: &BTreeSet<String>, b: &BTreeSet<String>) -> bool {
    a.len() < b.len() && a.is_subset(b)
}

/// Smallest issuer set first, then the lexicographically smaller list.
fn selection_order(a: &KeyHandle, b: &KeyHandle) -> std::cmp::Ordering {
    a.issuers.len().cmp(&b.issuers.len()).then_with(|| a.issuers.iter().cmp(b.issuers.iter()))
}

impl<B: PairingBackend> KeyStore<B> {
    pub fn insert(&mut self, key: AttributeKey<B>) -> KeyInsert {
        let handle = KeyHandle {
            identity: key.holder().to_string(),
            issuers: key.issuer_set().clone(),
        };
        let mine = || self.keys.keys().filter(|h| h.identity == handle.identity);
        if let Some(by) = mine().filter(|h| proper_subset(&handle.issuers, &h.issuers)).min_by(|a, b| selection_order(a, b)) {
            return KeyInsert::Dominated { by: by.clone() };
        }
        let evicted: Vec<KeyHandle> = mine().filter(|h| proper_subset(&h.issuers, &handle.issuers)).cloned().collect();
        for h in &evicted {
            self.keys.remove(h);
        }
        self.keys.insert(handle.clone(), key);
        KeyInsert::Stored { handle, evicted }
    }

    pub fn get(&self, handle: &KeyHandle) -> Option<&AttributeKey<B>> {
        self.keys.get(handle)
    }

    /// The key of `identity` covering `needed` with the fewest issuers.
    pub fn covering(&self, identity: &str, needed: &BTreeSet<String>) -> Option<(&KeyHandle, &AttributeKey<B>)> {
        self.keys
            .iter()
            .filter(|(h, _)| h.identity == identity && needed.is_subset(&h.issuers))
            .min_by(|(a, _), (b, _)| selection_order(a, b))
    }

    pub fn handles_for<'a>(&'a self, identity: &'a str) -> impl Iterator<Item = &'a KeyHandle> + 'a {
        self.keys.keys().filter(move |h| h.identity == identity)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KeyHandle, &AttributeKey<B>)> {
        self.keys.iter()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Cache key of a combined token: exact on the canonical encoding of the
/// composed policy.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenKey {
    pub subscriber: String,
    pub issuer: String,
    pub policy_hash: [u8; 32],
}

impl TokenKey {
    pub fn new(subscriber: &str, issuer: &str, composed: &AccessTree) -> Self {
        TokenKey {
            subscriber: subscriber.to_string(),
            issuer: issuer.to_string(),
            policy_hash: Sha256::digest(composed.to_bytes()).into(),
        }
    }
}

impl fmt::Display for TokenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subscriber, self.issuer, hex::encode(&self.policy_hash[..8]))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenStats {
    /// Lookups answered from the cache.
    pub hits: u64,
    /// Partial-token exchanges performed to fill the cache.
    pub handshakes: u64,
}

#[derive(Debug, Clone)]
pub struct TokenStore<B: PairingBackend> {
    tokens: BTreeMap<TokenKey, CombinedToken<B>>,
    pub(crate) stats: TokenStats,
}

impl<B: PairingBackend> Default for TokenStore<B> {
    fn default() -> Self {
        TokenStore {
            tokens: BTreeMap::new(),
            stats: TokenStats::default(),
        }
    }
}

impl<B: PairingBackend> TokenStore<B> {
    /// Counts a hit when present.
    pub fn lookup(&mut self, key: &TokenKey) -> Option<&CombinedToken<B>> {
        let found = self.tokens.get(key);
        if found.is_some() {
            self.stats.hits += 1;
        }
        found
    }

    /// Stores the outcome of a handshake.
    pub fn record_handshake(&mut self, key: TokenKey, token: CombinedToken<B>) {
        self.stats.handshakes += 1;
        self.tokens.insert(key, token);
    }

    pub fn get(&self, key: &TokenKey) -> Option<&CombinedToken<B>> {
        self.tokens.get(key)
    }

    pub fn stats(&self) -> TokenStats {
        self.stats
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TokenKey, &CombinedToken<B>)> {
        self.tokens.iter()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub(crate) fn insert_raw(&mut self, key: TokenKey, token: CombinedToken<B>) {
        self.tokens.insert(key, token);
    }
}

/// A stored privacy-enhanced document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EDocument<B: PairingBackend> {
    pub uri: DocumentUri,
    pub ciphertext: Ciphertext<B>,
    pub issuer_signature: Vec<u8>,
    /// Logical service time of issuance.
    pub created_at: u64,
}

#[derive(Debug, Clone)]
pub struct DocumentStore<B: PairingBackend> {
    docs: BTreeMap<DocumentUri, EDocument<B>>,
}

impl<B: PairingBackend> Default for DocumentStore<B> {
    fn default() -> Self {
        DocumentStore { docs: BTreeMap::new() }
    }
}

impl<B: PairingBackend> DocumentStore<B> {
    /// `false` (and no change) if the URI is taken.
    pub fn insert(&mut self, doc: EDocument<B>) -> bool {
        if self.docs.contains_key(&doc.uri) {
            return false;
        }
        self.docs.insert(doc.uri.clone(), doc);
        true
    }

    pub fn get(&self, uri: &DocumentUri) -> Option<&EDocument<B>> {
        self.docs.get(uri)
    }

    pub fn contains(&self, uri: &DocumentUri) -> bool {
        self.docs.contains_key(uri)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DocumentUri, &EDocument<B>)> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}
