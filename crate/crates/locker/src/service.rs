use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use privlocker_core::{
    combine_tokens, decrypt, encrypt_with_token, gen_partial_token, keygen, setup, AccessTree, AttributeKey,
    AttributeLabel, CombinedToken, MasterPublicKey, MasterSecretKey, PairingBackend, Record,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::auth::{Authenticator, NoopAuthenticator};
use crate::persist;
use crate::registry::AttributeRegistry;
use crate::store::{DocumentStore, EDocument, KeyHandle, KeyInsert, KeyStore, TokenKey, TokenStore};
use crate::uri::{DocumentUri, PRIV_DOCTYPE};
use crate::LockerError;

const DOC_ID_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuerRecord {
    /// Attribute names the issuer may assign. Empty means any name in its
    /// namespace.
    pub catalog: BTreeSet<String>,
    pub registered_at: u64,
}

/// Everything that is persisted.
#[derive(Debug, Clone)]
pub(crate) struct State<B: PairingBackend> {
    pub msk: MasterSecretKey<B>,
    pub mpk: MasterPublicKey<B>,
    /// Logical time; advances on every mutation.
    pub clock: u64,
    pub issuers: BTreeMap<String, IssuerRecord>,
    pub registry: AttributeRegistry,
    pub keys: KeyStore<B>,
    pub tokens: TokenStore<B>,
    pub documents: DocumentStore<B>,
}

/// Whether a token came from the cache or needed a fresh exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenSource {
    Cached,
    Handshake,
}

/// The locker acting as attribute authority manager and document
/// repository. Mutations take `&mut self`, so callers serialize them.
pub struct LockerService<B: PairingBackend> {
    state: State<B>,
    rng: ChaCha20Rng,
    auth: Box<dyn Authenticator>,
}

fn non_empty(what: &str, v: &str) -> Result<(), LockerError> {
    if v.trim().is_empty() {
        return Err(LockerError::InvalidInput(format!("{what} is empty")));
    }
    Ok(())
}

impl<B: PairingBackend> LockerService<B> {
    /// Fresh authority with new master keys.
    pub fn setup(mut rng: ChaCha20Rng) -> Self {
        let (msk, mpk) = setup::<B, _>(&mut rng);
        LockerService {
            state: State {
                msk,
                mpk,
                clock: 0,
                issuers: BTreeMap::new(),
                registry: AttributeRegistry::default(),
                keys: KeyStore::default(),
                tokens: TokenStore::default(),
                documents: DocumentStore::default(),
            },
            rng,
            auth: Box::new(NoopAuthenticator),
        }
    }

    pub fn with_authenticator(mut self, auth: impl Authenticator + 'static) -> Self {
        self.auth = Box::new(auth);
        self
    }

    /// Deterministic randomness for reproducible runs. The stream depends on
    /// the logical clock, so successive sessions over one store never replay
    /// the same draws.
    pub fn reseed(&mut self, seed: u64) {
        let digest = Sha256::new()
            .chain_update(b"privlocker/session-seed")
            .chain_update(seed.to_be_bytes())
            .chain_update(self.state.clock.to_be_bytes())
            .finalize();
        self.rng = ChaCha20Rng::from_seed(digest.into());
    }

    pub fn mpk(&self) -> &MasterPublicKey<B> {
        &self.state.mpk
    }

    pub fn clock(&self) -> u64 {
        self.state.clock
    }

    pub fn issuer(&self, id: &str) -> Option<&IssuerRecord> {
        self.state.issuers.get(id)
    }

    pub fn issuers(&self) -> impl Iterator<Item = (&str, &IssuerRecord)> {
        self.state.issuers.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn registry(&self) -> &AttributeRegistry {
        &self.state.registry
    }

    pub fn keys(&self) -> &KeyStore<B> {
        &self.state.keys
    }

    pub fn key(&self, handle: &KeyHandle) -> Option<&AttributeKey<B>> {
        self.state.keys.get(handle)
    }

    pub fn tokens(&self) -> &TokenStore<B> {
        &self.state.tokens
    }

    pub fn documents(&self) -> &DocumentStore<B> {
        &self.state.documents
    }

    fn tick(&mut self) -> u64 {
        self.state.clock += 1;
        self.state.clock
    }

    pub fn register_issuer(
        &mut self,
        issuer_id: &str,
        catalog: impl IntoIterator<Item = String>,
    ) -> Result<IssuerRecord, LockerError> {
        non_empty("issuer id", issuer_id)?;
        // The issuer id becomes the authority half of its labels.
        AttributeLabel::new(issuer_id, "probe").map_err(|_| LockerError::InvalidInput(format!("issuer id {issuer_id:?}")))?;
        if self.state.issuers.contains_key(issuer_id) {
            return Err(LockerError::DuplicateIssuer(issuer_id.to_string()));
        }
        let catalog: BTreeSet<String> = catalog.into_iter().collect();
        for name in &catalog {
            AttributeLabel::new(issuer_id, name.as_str())?;
        }
        let record = IssuerRecord {
            catalog,
            registered_at: self.tick(),
        };
        self.state.issuers.insert(issuer_id.to_string(), record.clone());
        Ok(record)
    }

    /// Makes an identity known without attributes. `false` if it already was.
    pub fn register_identity(&mut self, identity: &str) -> Result<bool, LockerError> {
        non_empty("identity", identity)?;
        let fresh = self.state.registry.register(identity);
        if fresh {
            self.tick();
        }
        Ok(fresh)
    }

    fn check_labels(&self, attrs: &BTreeSet<AttributeLabel>) -> Result<(), LockerError> {
        for label in attrs {
            let issuer = self
                .state
                .issuers
                .get(label.authority())
                .ok_or_else(|| LockerError::UnknownIssuer(label.authority().to_string()))?;
            if !issuer.catalog.is_empty() && !issuer.catalog.contains(label.name()) {
                return Err(LockerError::UnknownAttribute(label.to_string()));
            }
        }
        Ok(())
    }

    /// Merges `attrs` into the identity's registry entry, registering the
    /// identity if needed. Returns the full current set.
    pub fn push_attrs(
        &mut self,
        identity: &str,
        attrs: &BTreeSet<AttributeLabel>,
    ) -> Result<BTreeSet<AttributeLabel>, LockerError> {
        let at = self.state.clock + 1;
        self.push_attrs_at(identity, attrs, at)
    }

    /// As [`push_attrs`](Self::push_attrs) with an explicit update time;
    /// entries already written later than `at` are kept.
    pub fn push_attrs_at(
        &mut self,
        identity: &str,
        attrs: &BTreeSet<AttributeLabel>,
        at: u64,
    ) -> Result<BTreeSet<AttributeLabel>, LockerError> {
        non_empty("identity", identity)?;
        self.check_labels(attrs)?;
        self.state.registry.merge(identity, attrs, at);
        self.state.clock = self.state.clock.max(at);
        self.tick();
        Ok(self.pull_attrs(identity).expect("identity just merged"))
    }

    pub fn pull_attrs(&self, identity: &str) -> Result<BTreeSet<AttributeLabel>, LockerError> {
        self.state
            .registry
            .attributes(identity)
            .ok_or_else(|| LockerError::UnknownIdentity(identity.to_string()))
    }

    /// Looks up, or builds through a partial-token exchange, the combined
    /// token for (subscriber, issuer, policy).
    pub fn prepare_token(
        &mut self,
        issuer_id: &str,
        subscriber_id: &str,
        policy_issuer: &AccessTree,
        policy_subscriber: &AccessTree,
    ) -> Result<(TokenKey, TokenSource), LockerError> {
        if !self.state.issuers.contains_key(issuer_id) {
            return Err(LockerError::UnknownIssuer(issuer_id.to_string()));
        }
        if !self.state.registry.contains(subscriber_id) {
            return Err(LockerError::UnknownIdentity(subscriber_id.to_string()));
        }
        let composed = AccessTree::compose(policy_subscriber, policy_issuer);
        let key = TokenKey::new(subscriber_id, issuer_id, &composed);
        if self.state.tokens.lookup(&key).is_some() {
            return Ok((key, TokenSource::Cached));
        }
        // Both sides run in-process: the subscriber's part is produced by
        // calling its token routine directly.
        let subscriber_part = gen_partial_token(&self.state.mpk, policy_subscriber, &mut self.rng);
        let issuer_part = gen_partial_token(&self.state.mpk, policy_issuer, &mut self.rng);
        let token = combine_tokens(&subscriber_part, &issuer_part)?;
        self.state.tokens.record_handshake(key.clone(), token);
        self.tick();
        Ok((key, TokenSource::Handshake))
    }

    pub fn token(&self, key: &TokenKey) -> Option<&CombinedToken<B>> {
        self.state.tokens.get(key)
    }

    fn signed_payload(uri: &DocumentUri, ct_bytes: &[u8]) -> Vec<u8> {
        let mut out = uri.to_string().into_bytes();
        out.push(0);
        out.extend_from_slice(ct_bytes);
        out
    }

    /// Encrypts `document` under `policy_subscriber AND policy_issuer` and
    /// files it under a fresh `issuer::PRIV::<id>` URI.
    pub fn issue_priv_document(
        &mut self,
        issuer_id: &str,
        subscriber_id: &str,
        policy_issuer: &AccessTree,
        policy_subscriber: &AccessTree,
        document: &[u8],
    ) -> Result<DocumentUri, LockerError> {
        if document.is_empty() {
            return Err(LockerError::InvalidInput("document is empty".into()));
        }
        let (key, _) = self.prepare_token(issuer_id, subscriber_id, policy_issuer, policy_subscriber)?;
        let token = self.state.tokens.get(&key).expect("token was just prepared");
        let ciphertext = encrypt_with_token(&self.state.mpk, token, document, &mut self.rng)?;
        let uri = loop {
            let mut id = [0u8; DOC_ID_BYTES];
            self.rng.fill_bytes(&mut id);
            let uri = DocumentUri::new(issuer_id, PRIV_DOCTYPE, hex::encode(id))?;
            if !self.state.documents.contains(&uri) {
                break uri;
            }
        };
        let issuer_signature = self.auth.sign(issuer_id, &Self::signed_payload(&uri, &ciphertext.to_bytes()));
        let doc = EDocument {
            uri: uri.clone(),
            ciphertext,
            issuer_signature,
            created_at: self.tick(),
        };
        self.state.documents.insert(doc);
        Ok(uri)
    }

    /// Issues a key over all of the identity's attributes from `issuer_set`
    /// and files it under the redundancy rule.
    pub fn gen_ab_pvt_key(&mut self, identity: &str, issuer_set: &BTreeSet<String>) -> Result<KeyInsert, LockerError> {
        if !self.state.registry.contains(identity) {
            return Err(LockerError::UnknownIdentity(identity.to_string()));
        }
        if issuer_set.is_empty() {
            return Err(LockerError::InvalidInput("issuer set is empty".into()));
        }
        for issuer in issuer_set {
            if !self.state.issuers.contains_key(issuer) {
                return Err(LockerError::UnknownIssuer(issuer.clone()));
            }
            if self.state.registry.attributes_from(identity, &BTreeSet::from([issuer.clone()])).is_empty() {
                return Err(LockerError::MissingAttributes {
                    identity: identity.to_string(),
                    issuer: issuer.clone(),
                });
            }
        }
        let attrs = self.state.registry.attributes_from(identity, issuer_set);
        let key = keygen(&self.state.msk, &self.state.mpk, identity, &attrs, &mut self.rng)?;
        let outcome = self.state.keys.insert(key);
        self.tick();
        Ok(outcome)
    }

    /// Decrypts a PRIV document with the requester's smallest key covering
    /// the issuers named in its policy.
    pub fn fetch_priv_doc(&self, requester_id: &str, uri: &DocumentUri) -> Result<Vec<u8>, LockerError> {
        if !uri.is_priv() {
            return Err(LockerError::WrongDocType(uri.doc_type().to_string()));
        }
        let doc = self.state.documents.get(uri).ok_or_else(|| LockerError::UnknownUri(uri.to_string()))?;
        let payload = Self::signed_payload(uri, &doc.ciphertext.to_bytes());
        if !self.auth.verify(uri.issuer_id(), &payload, &doc.issuer_signature) {
            return Err(LockerError::BadSignature(uri.to_string()));
        }
        let needed = doc.ciphertext.issuer_set();
        let (_, key) = self
            .state
            .keys
            .covering(requester_id, &needed)
            .ok_or_else(|| LockerError::NoCoveringKey {
                identity: requester_id.to_string(),
                issuers: needed.iter().cloned().collect::<Vec<_>>().join(","),
            })?;
        Ok(decrypt(&doc.ciphertext, key)?)
    }

    /// Plain (non-PRIV) document retrieval is not provided.
    pub fn pull_doc(&self, uri: &DocumentUri) -> Result<Vec<u8>, LockerError> {
        Err(LockerError::NotImplemented(format!("pull_doc {uri}")))
    }

    pub fn save(&self, dir: &Path) -> Result<(), LockerError> {
        persist::write_dir(dir, &self.state)
    }

    /// Loads a saved service with a fresh entropy-seeded generator.
    pub fn load(dir: &Path) -> Result<Self, LockerError> {
        Ok(LockerService {
            state: persist::read_dir(dir)?,
            rng: ChaCha20Rng::from_entropy(),
            auth: Box::new(NoopAuthenticator),
        })
    }

    /// Replaces this service's state with the one in `dir`. On error the
    /// current state is untouched.
    pub fn reload(&mut self, dir: &Path) -> Result<(), LockerError> {
        self.state = persist::read_dir(dir)?;
        Ok(())
    }
}
