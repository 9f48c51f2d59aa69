//! Token-based ciphertext-policy ABE.
//!
//! Encryption is split in two. A [`CombinedToken`] is precomputed once per
//! (subscriber, issuer, policy) by two parties, each contributing a
//! [`PartialToken`] over its own subtree with its own secret. The token is
//! then reused: every document encryption only raises it to a fresh `r_ie`
//! and multiplies a fresh wrapped key into `C1`.
//!
//! With `s = r_s + r_i` the secret of the composed tree, a ciphertext is
//!
//! ```text
//! C1   = e(g,g)^(α·s·r_ie) · K         C2 = g^(β·s·r_ie)
//! C3_y = g^(r_ie·q_y(0))                C4_y = H(attr(y))^(r_ie·q_y(0))
//! C5   = AEAD_{KDF(K)}(m)
//! ```
//!
//! and a key for attribute set `S` is `D = g^((α+r)/β)`,
//! `D_j = g^r·H(j)^(r_j)`, `D_j' = g^(r_j)` for `j ∈ S`.

mod dem;
mod record;

use std::collections::{BTreeMap, BTreeSet};

use rand::{CryptoRng, RngCore};

use crate::group::{GroupError, PairingBackend, ScalarField};
use crate::policy::{assign_shares, AccessTree, AttributeLabel, Node, PolicyError};
pub use dem::{DEM_ID, NONCE_BYTES};
use dem::DocumentKey;
pub use record::{FormatError, Record, RecordHeader, RecordKind, FORMAT_VERSION, RECORD_MAGIC};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemeError {
    #[error("attributes do not satisfy the ciphertext policy")]
    PolicyNotSatisfied,
    #[error("authenticated decryption failed")]
    AuthenticationFailed,
    #[error("attribute set is empty")]
    EmptyAttributes,
    #[error("message is empty")]
    EmptyMessage,
    #[error("partial tokens overlap")]
    OverlappingTokens,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl SchemeError {
    pub fn code(&self) -> &'static str {
        match self {
            SchemeError::PolicyNotSatisfied => "policy-not-satisfied",
            SchemeError::AuthenticationFailed => "authentication-failed",
            SchemeError::EmptyAttributes | SchemeError::EmptyMessage => "invalid-input",
            SchemeError::OverlappingTokens => "overlapping-tokens",
            SchemeError::Policy(e) => e.code(),
            SchemeError::Group(e) => e.code(),
            SchemeError::Format(e) => e.code(),
        }
    }
}

/// `ASK = {β, g^α}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterSecretKey<B: PairingBackend> {
    pub(crate) beta: B::Scalar,
    pub(crate) g_alpha: B::Source,
}

/// `APK = {g^β, e(g,g)^α, g}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MasterPublicKey<B: PairingBackend> {
    pub(crate) generator: B::Source,
    pub(crate) g_beta: B::Source,
    pub(crate) egg_alpha: B::Target,
}

/// `(C3_y, C4_y)` for one leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafPart<B: PairingBackend> {
    pub c3: B::Source,
    pub c4: B::Source,
}

/// One party's share of an encryption token over its own subtree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialToken<B: PairingBackend> {
    pub(crate) subtree: AccessTree,
    pub(crate) c1: B::Target,
    pub(crate) c2: B::Source,
    pub(crate) leaf_parts: Vec<LeafPart<B>>,
}

/// Reusable encryption skeleton over the composed tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombinedToken<B: PairingBackend> {
    pub(crate) tree: AccessTree,
    pub(crate) c1: B::Target,
    pub(crate) c2: B::Source,
    pub(crate) leaf_parts: Vec<LeafPart<B>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext<B: PairingBackend> {
    pub(crate) tree: AccessTree,
    pub(crate) c1: B::Target,
    pub(crate) c2: B::Source,
    pub(crate) leaf_parts: Vec<LeafPart<B>>,
    pub(crate) dem: u8,
    pub(crate) nonce: [u8; NONCE_BYTES],
    pub(crate) c5: Vec<u8>,
}

/// `(D_j, D_j')`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyComponent<B: PairingBackend> {
    pub d_j: B::Source,
    pub d_j_prime: B::Source,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeKey<B: PairingBackend> {
    pub(crate) holder: String,
    pub(crate) issuer_set: BTreeSet<String>,
    pub(crate) d: B::Source,
    pub(crate) per_attr: BTreeMap<AttributeLabel, KeyComponent<B>>,
}

impl<B: PairingBackend> MasterSecretKey<B> {
    pub fn beta(&self) -> &B::Scalar {
        &self.beta
    }

    pub fn g_alpha(&self) -> &B::Source {
        &self.g_alpha
    }
}

impl<B: PairingBackend> MasterPublicKey<B> {
    pub fn generator(&self) -> &B::Source {
        &self.generator
    }

    pub fn g_beta(&self) -> &B::Source {
        &self.g_beta
    }

    pub fn egg_alpha(&self) -> &B::Target {
        &self.egg_alpha
    }
}

macro_rules! token_accessors {
    ($ty:ident, $tree:ident) => {
        impl<B: PairingBackend> $ty<B> {
            pub fn tree(&self) -> &AccessTree {
                &self.$tree
            }

            pub fn c1(&self) -> &B::Target {
                &self.c1
            }

            pub fn c2(&self) -> &B::Source {
                &self.c2
            }

            /// Leaf components in preorder leaf order.
            pub fn leaf_parts(&self) -> &[LeafPart<B>] {
                &self.leaf_parts
            }
        }
    };
}

token_accessors!(PartialToken, subtree);
token_accessors!(CombinedToken, tree);
token_accessors!(Ciphertext, tree);

impl<B: PairingBackend> Ciphertext<B> {
    pub fn c5(&self) -> &[u8] {
        &self.c5
    }

    pub fn nonce(&self) -> &[u8; NONCE_BYTES] {
        &self.nonce
    }

    /// Issuers whose attributes the policy mentions.
    pub fn issuer_set(&self) -> BTreeSet<String> {
        self.tree.authorities()
    }

    /// Authenticated header: everything except the sealed document.
    fn header_bytes(&self) -> Vec<u8> {
        record::ciphertext_header::<B>(&self.tree, &self.c1, &self.c2, &self.leaf_parts, self.dem, &self.nonce)
    }
}

impl<B: PairingBackend> AttributeKey<B> {
    /// Assembles a key from raw components. No consistency check is possible
    /// without the master secret; a mismatched key simply fails to decrypt.
    pub fn from_components(
        holder: impl Into<String>,
        d: B::Source,
        per_attr: BTreeMap<AttributeLabel, KeyComponent<B>>,
    ) -> Result<Self, SchemeError> {
        if per_attr.is_empty() {
            return Err(SchemeError::EmptyAttributes);
        }
        let issuer_set = per_attr.keys().map(|l| l.authority().to_string()).collect();
        Ok(AttributeKey {
            holder: holder.into(),
            issuer_set,
            d,
            per_attr,
        })
    }

    pub fn holder(&self) -> &str {
        &self.holder
    }

    pub fn issuer_set(&self) -> &BTreeSet<String> {
        &self.issuer_set
    }

    pub fn d(&self) -> &B::Source {
        &self.d
    }

    pub fn components(&self) -> &BTreeMap<AttributeLabel, KeyComponent<B>> {
        &self.per_attr
    }

    pub fn attributes(&self) -> BTreeSet<AttributeLabel> {
        self.per_attr.keys().cloned().collect()
    }

    pub fn holds(&self, label: &AttributeLabel) -> bool {
        self.per_attr.contains_key(label)
    }
}

/// Draws `α, β` and publishes `g^β, e(g,g)^α`.
pub fn setup<B, R>(rng: &mut R) -> (MasterSecretKey<B>, MasterPublicKey<B>)
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let alpha = B::random_scalar(rng);
    let beta = B::random_scalar(rng);
    let g = B::generator();
    let msk = MasterSecretKey {
        beta,
        g_alpha: B::exp(&g, &alpha),
    };
    let mpk = MasterPublicKey {
        generator: g,
        g_beta: B::exp(&g, &beta),
        egg_alpha: B::target_exp(&B::target_generator(), &alpha),
    };
    (msk, mpk)
}

/// One party's token: a fresh secret `r_part` shared over `subtree`.
pub fn gen_partial_token<B, R>(mpk: &MasterPublicKey<B>, subtree: &AccessTree, rng: &mut R) -> PartialToken<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let r_part = B::random_scalar(rng);
    partial_token_with_secret(mpk, subtree, r_part, rng)
}

fn partial_token_with_secret<B, R>(
    mpk: &MasterPublicKey<B>,
    subtree: &AccessTree,
    r_part: B::Scalar,
    rng: &mut R,
) -> PartialToken<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let shares = assign_shares::<B, R>(subtree, r_part, rng);
    let leaf_parts = subtree
        .leaves()
        .into_iter()
        .zip(shares.leaf_shares(subtree))
        .map(|(label, q)| LeafPart {
            c3: B::exp(&mpk.generator, &q),
            c4: B::exp(&B::hash_to_group(&label.canonical_bytes()), &q),
        })
        .collect();
    PartialToken {
        subtree: subtree.clone(),
        c1: B::target_exp(&mpk.egg_alpha, &r_part),
        c2: B::exp(&mpk.g_beta, &r_part),
        leaf_parts,
    }
}

/// Joins the subscriber's and issuer's partial tokens. The composed tree is
/// an additive AND over `[subscriber subtree, issuer subtree]`, so its
/// secret is `r_s + r_i` and `C1`, `C2` multiply.
pub fn combine_tokens<B: PairingBackend>(
    subscriber: &PartialToken<B>,
    issuer: &PartialToken<B>,
) -> Result<CombinedToken<B>, SchemeError> {
    // Equal C2 means the same secret was used twice: a duplicated token.
    if subscriber.c2 == issuer.c2 || subscriber.leaf_parts.iter().any(|p| issuer.leaf_parts.contains(p)) {
        return Err(SchemeError::OverlappingTokens);
    }
    Ok(CombinedToken {
        tree: AccessTree::compose(&subscriber.subtree, &issuer.subtree),
        c1: B::target_mul(&subscriber.c1, &issuer.c1),
        c2: B::source_mul(&subscriber.c2, &issuer.c2),
        leaf_parts: subscriber.leaf_parts.iter().chain(&issuer.leaf_parts).copied().collect(),
    })
}

/// Finalizes a token into a ciphertext of `message` with fresh `r_ie` and a
/// fresh wrapped document key.
pub fn encrypt_with_token<B, R>(
    mpk: &MasterPublicKey<B>,
    token: &CombinedToken<B>,
    message: &[u8],
    rng: &mut R,
) -> Result<Ciphertext<B>, SchemeError>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let r_ie = B::random_scalar(rng);
    encrypt_with_exponent(mpk, token, message, r_ie, rng)
}

fn encrypt_with_exponent<B, R>(
    _mpk: &MasterPublicKey<B>,
    token: &CombinedToken<B>,
    message: &[u8],
    r_ie: B::Scalar,
    rng: &mut R,
) -> Result<Ciphertext<B>, SchemeError>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    if message.is_empty() {
        return Err(SchemeError::EmptyMessage);
    }
    let wrapped = B::target_exp(&B::target_generator(), &B::random_scalar(rng));
    let mut ct = Ciphertext {
        tree: token.tree.clone(),
        c1: B::target_mul(&B::target_exp(&token.c1, &r_ie), &wrapped),
        c2: B::exp(&token.c2, &r_ie),
        leaf_parts: token
            .leaf_parts
            .iter()
            .map(|p| LeafPart {
                c3: B::exp(&p.c3, &r_ie),
                c4: B::exp(&p.c4, &r_ie),
            })
            .collect(),
        dem: DEM_ID,
        nonce: [0; NONCE_BYTES],
        c5: Vec::new(),
    };
    rng.fill_bytes(&mut ct.nonce);
    let key = DocumentKey::derive(&B::encode_target(&wrapped));
    let sealed = key.seal(&ct.nonce, message, &ct.header_bytes());
    ct.c5 = sealed;
    Ok(ct)
}

/// Attribute key with fresh `r` and per-attribute `r_j`.
pub fn keygen<B, R>(
    msk: &MasterSecretKey<B>,
    mpk: &MasterPublicKey<B>,
    holder: &str,
    attrs: &BTreeSet<AttributeLabel>,
    rng: &mut R,
) -> Result<AttributeKey<B>, SchemeError>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    if attrs.is_empty() {
        return Err(SchemeError::EmptyAttributes);
    }
    let g = &mpk.generator;
    let r = B::random_scalar(rng);
    let g_r = B::exp(g, &r);
    let beta_inv = msk.beta.inverse().expect("beta is nonzero");
    let d = B::exp(&B::source_mul(&msk.g_alpha, &g_r), &beta_inv);
    let per_attr = attrs
        .iter()
        .map(|label| {
            let r_j = B::random_scalar(rng);
            let h = B::hash_to_group(&label.canonical_bytes());
            let component = KeyComponent {
                d_j: B::source_mul(&g_r, &B::exp(&h, &r_j)),
                d_j_prime: B::exp(g, &r_j),
            };
            (label.clone(), component)
        })
        .collect();
    AttributeKey::from_components(holder, d, per_attr)
}

fn leaf_count(n: &Node) -> usize {
    match n {
        Node::Leaf(_) => 1,
        Node::Gate(g) => g.children().iter().map(leaf_count).sum(),
    }
}

/// `e(g,g)^(r·r_ie·q_x(0))` for the subtree at `node`, or `None` when the
/// key's attributes do not satisfy it. `first_leaf` is the preorder index of
/// the subtree's first leaf in `ct.leaf_parts`.
fn eval_node<B: PairingBackend>(
    ct: &Ciphertext<B>,
    key: &AttributeKey<B>,
    node: &Node,
    first_leaf: usize,
) -> Option<B::Target> {
    match node {
        Node::Leaf(label) => {
            let comp = key.per_attr.get(label)?;
            let part = ct.leaf_parts.get(first_leaf)?;
            // e(C3, D_j) / e(D_j', C4): hash-derived D_j and C4 sit in the
            // second pairing slot.
            Some(B::pair_ratio(&part.c3, &comp.d_j, &comp.d_j_prime, &part.c4))
        }
        Node::Gate(gate) => {
            let mut results: Vec<Option<B::Target>> = Vec::with_capacity(gate.children().len());
            let mut successes = 0;
            let mut offset = first_leaf;
            for child in gate.children() {
                // Lowest indices win, so later children are never needed
                // once k have succeeded.
                let r = if successes < gate.threshold() {
                    eval_node(ct, key, child, offset)
                } else {
                    None
                };
                successes += usize::from(r.is_some());
                results.push(r);
                offset += leaf_count(child);
            }
            let chosen = gate.select_satisfying_children(&results)?;
            let coeffs = gate.recombination_coefficients::<B::Scalar>(&chosen);
            Some(chosen.iter().zip(coeffs).fold(B::target_identity(), |acc, (&i, c)| {
                let f = results[i as usize - 1].expect("chosen children succeeded");
                B::target_mul(&acc, &B::target_exp(&f, &c))
            }))
        }
    }
}

/// Recursive node decryption for the node with preorder id `node_id`.
pub fn decrypt_node<B: PairingBackend>(ct: &Ciphertext<B>, key: &AttributeKey<B>, node_id: usize) -> Option<B::Target> {
    let (node, first_leaf) = *ct.tree.preorder().get(node_id)?;
    eval_node(ct, key, node, first_leaf)
}

/// Recovers the wrapped element `K` from `C1 / (e(C2, D) / A)`.
fn unwrap_element<B: PairingBackend>(ct: &Ciphertext<B>, key: &AttributeKey<B>) -> Result<B::Target, SchemeError> {
    let a = eval_node(ct, key, ct.tree.root(), 0).ok_or(SchemeError::PolicyNotSatisfied)?;
    let blinding = B::target_div(&B::pair(&ct.c2, &key.d), &a);
    Ok(B::target_div(&ct.c1, &blinding))
}

pub fn decrypt<B: PairingBackend>(ct: &Ciphertext<B>, key: &AttributeKey<B>) -> Result<Vec<u8>, SchemeError> {
    let wrapped = unwrap_element(ct, key)?;
    DocumentKey::derive(&B::encode_target(&wrapped))
        .open(&ct.nonce, &ct.c5, &ct.header_bytes())
        .ok_or(SchemeError::AuthenticationFailed)
}

/// Fixed-randomness entry points for algebraic identity tests.
#[cfg(any(test, feature = "test-hooks"))]
pub mod hooks {
    use super::*;

    pub fn partial_token_with_secret<B, R>(
        mpk: &MasterPublicKey<B>,
        subtree: &AccessTree,
        r_part: B::Scalar,
        rng: &mut R,
    ) -> PartialToken<B>
    where
        B: PairingBackend,
        R: RngCore + CryptoRng + ?Sized,
    {
        super::partial_token_with_secret(mpk, subtree, r_part, rng)
    }

    pub fn encrypt_with_exponent<B, R>(
        mpk: &MasterPublicKey<B>,
        token: &CombinedToken<B>,
        message: &[u8],
        r_ie: B::Scalar,
        rng: &mut R,
    ) -> Result<Ciphertext<B>, SchemeError>
    where
        B: PairingBackend,
        R: RngCore + CryptoRng + ?Sized,
    {
        super::encrypt_with_exponent(mpk, token, message, r_ie, rng)
    }

    /// The wrapped element a key recovers, whether or not it is the right one.
    pub fn unwrap_element<B: PairingBackend>(ct: &Ciphertext<B>, key: &AttributeKey<B>) -> Result<B::Target, SchemeError> {
        super::unwrap_element(ct, key)
    }

    /// Document key derived from a wrapped element.
    pub fn document_key<B: PairingBackend>(wrapped: &B::Target) -> [u8; 32] {
        DocumentKey::derive(&B::encode_target(wrapped)).bytes()
    }
}
