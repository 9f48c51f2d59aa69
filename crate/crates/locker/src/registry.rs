use std::collections::{BTreeMap, BTreeSet};

use privlocker_core::AttributeLabel;

/// Where an attribute came from and when it was last written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeEntry {
    pub issuer: String,
    pub updated_at: u64,
}

/// Identity to attributes, one entry per (identity, label), last writer wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeRegistry {
    identities: BTreeMap<String, BTreeMap<AttributeLabel, AttributeEntry>>,
}

impl AttributeRegistry {
    /// Returns `false` if the identity was already known.
    pub fn register(&mut self, identity: &str) -> bool {
        if self.identities.contains_key(identity) {
            return false;
        }
        self.identities.insert(identity.to_string(), BTreeMap::new());
        true
    }

    pub fn contains(&self, identity: &str) -> bool {
        self.identities.contains_key(identity)
    }

    /// Writes each label stamped `at`. An entry already stamped later than
    /// `at` is kept. Returns how many entries were written.
    pub fn merge<'a>(&mut self, identity: &str, labels: impl IntoIterator<Item = &'a AttributeLabel>, at: u64) -> usize {
        let entries = self.identities.entry(identity.to_string()).or_default();
        let mut written = 0;
        for label in labels {
            match entries.get(label) {
                Some(e) if e.updated_at > at => {}
                _ => {
                    entries.insert(
                        label.clone(),
                        AttributeEntry {
                            issuer: label.authority().to_string(),
                            updated_at: at,
                        },
                    );
                    written += 1;
                }
            }
        }
        written
    }

    pub fn attributes(&self, identity: &str) -> Option<BTreeSet<AttributeLabel>> {
        self.identities.get(identity).map(|e| e.keys().cloned().collect())
    }

    /// The identity's attributes issued by any of `issuers`.
    pub fn attributes_from(&self, identity: &str, issuers: &BTreeSet<String>) -> BTreeSet<AttributeLabel> {
        self.identities
            .get(identity)
            .into_iter()
            .flat_map(|e| e.iter())
            .filter(|(_, entry)| issuers.contains(&entry.issuer))
            .map(|(l, _)| l.clone())
            .collect()
    }

    pub fn entries(&self, identity: &str) -> Option<&BTreeMap<AttributeLabel, AttributeEntry>> {
        self.identities.get(identity)
    }

    pub fn identities(&self) -> impl Iterator<Item = &str> {
        self.identities.keys().map(String::as_str)
    }

    pub(crate) fn raw(&self) -> &BTreeMap<String, BTreeMap<AttributeLabel, AttributeEntry>> {
        &self.identities
    }

    pub(crate) fn from_raw(identities: BTreeMap<String, BTreeMap<AttributeLabel, AttributeEntry>>) -> Self {
        AttributeRegistry { identities }
    }
}
