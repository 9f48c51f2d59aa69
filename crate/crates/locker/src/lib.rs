//! Document locker for privacy-enhanced documents.
//!
//! The service plays the attribute authority manager and repository roles:
//! issuers register and push subscriber attributes, issue documents under
//! the `PRIV` doctype encrypted with a cached two-party token, and requesters
//! obtain attribute keys and fetch documents their attributes satisfy.

mod auth;
mod persist;
mod registry;
mod service;
mod store;
mod uri;

pub use auth::{Authenticator, NoopAuthenticator};
pub use persist::{is_initialized, StoreKind, STORE_MAGIC, STORE_VERSION};
pub use registry::{AttributeEntry, AttributeRegistry};
pub use service::{IssuerRecord, LockerService, TokenSource};
pub use store::{DocumentStore, EDocument, KeyHandle, KeyInsert, KeyStore, TokenKey, TokenStats, TokenStore};
pub use uri::{DocumentUri, PRIV_DOCTYPE};

use privlocker_core::{FormatError, PolicyError, SchemeError};

#[derive(Debug, thiserror::Error)]
pub enum LockerError {
    #[error("issuer {0:?} is already registered")]
    DuplicateIssuer(String),
    #[error("unknown issuer {0:?}")]
    UnknownIssuer(String),
    #[error("attribute {0} is not in its issuer's catalog")]
    UnknownAttribute(String),
    #[error("unknown identity {0:?}")]
    UnknownIdentity(String),
    #[error("{identity:?} holds no attributes from issuer {issuer:?}")]
    MissingAttributes { identity: String, issuer: String },
    #[error("invalid document URI {0:?}")]
    InvalidUri(String),
    #[error("no document at {0}")]
    UnknownUri(String),
    #[error("doctype {0:?} is not PRIV")]
    WrongDocType(String),
    #[error("{identity:?} has no key covering issuers {issuers}")]
    NoCoveringKey { identity: String, issuers: String },
    #[error("issuer signature on {0} does not verify")]
    BadSignature(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no store at {0}")]
    StoreMissing(String),
    #[error("store format version {0} is not supported")]
    StoreVersion(u8),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(&'static str),
    #[error("corrupt store: {0}")]
    CorruptStore(&'static str),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LockerError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            LockerError::DuplicateIssuer(_) => "duplicate-issuer",
            LockerError::UnknownIssuer(_) => "unknown-issuer",
            LockerError::UnknownAttribute(_) => "unknown-attribute",
            LockerError::UnknownIdentity(_) => "unknown-identity",
            LockerError::MissingAttributes { .. } => "missing-attributes",
            LockerError::InvalidUri(_) => "invalid-uri",
            LockerError::UnknownUri(_) => "unknown-uri",
            LockerError::WrongDocType(_) => "wrong-doctype",
            LockerError::NoCoveringKey { .. } => "no-covering-key",
            LockerError::BadSignature(_) => "bad-signature",
            LockerError::NotImplemented(_) => "not-implemented",
            LockerError::InvalidInput(_) => "invalid-input",
            LockerError::StoreMissing(_) => "store-missing",
            LockerError::StoreVersion(_) => "version-mismatch",
            LockerError::ChecksumMismatch(_) => "checksum-mismatch",
            LockerError::CorruptStore(_) => "corrupt-store",
            LockerError::Scheme(e) => e.code(),
            LockerError::Policy(e) => e.code(),
            LockerError::Format(e) => e.code(),
            LockerError::Io(_) => "io-error",
        }
    }
}
