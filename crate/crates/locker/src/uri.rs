use std::fmt;
use std::str::FromStr;

use crate::LockerError;

/// Doctype for documents whose body is an attribute-encrypted ciphertext.
pub const PRIV_DOCTYPE: &str = "PRIV";

const SEP: &str = "::";

/// `IssuerID::DocType::DocID`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocumentUri {
    issuer_id: String,
    doc_type: String,
    doc_id: String,
}

// Edge colons would make the rendered separators ambiguous ("a:" + "::").
fn valid_component(c: &str) -> bool {
    !c.is_empty()
        && !c.contains(SEP)
        && !c.starts_with(':')
        && !c.ends_with(':')
        && !c.chars().any(char::is_whitespace)
}

impl DocumentUri {
    pub fn new(
        issuer_id: impl Into<String>,
        doc_type: impl Into<String>,
        doc_id: impl Into<String>,
    ) -> Result<Self, LockerError> {
        let uri = DocumentUri {
            issuer_id: issuer_id.into(),
            doc_type: doc_type.into(),
            doc_id: doc_id.into(),
        };
        if [&uri.issuer_id, &uri.doc_type, &uri.doc_id].iter().all(|c| valid_component(c)) {
            Ok(uri)
        } else {
            Err(LockerError::InvalidUri(uri.to_string()))
        }
    }

    pub fn issuer_id(&self) -> &str {
        &self.issuer_id
    }

    pub fn doc_type(&self) -> &str {
        &self.doc_type
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn is_priv(&self) -> bool {
        self.doc_type == PRIV_DOCTYPE
    }
}

impl fmt::Display for DocumentUri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{SEP}{}{SEP}{}", self.issuer_id, self.doc_type, self.doc_id)
    }
}

impl FromStr for DocumentUri {
    type Err = LockerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(SEP).collect();
        match parts.as_slice() {
            [issuer, doc_type, doc_id] => DocumentUri::new(*issuer, *doc_type, *doc_id),
            _ => Err(LockerError::InvalidUri(s.to_string())),
        }
    }
}
