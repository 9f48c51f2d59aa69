//! Document encryption under a key derived from a target-group element.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use sha2::Sha256;

/// Identifies HKDF-SHA256 key derivation followed by ChaCha20-Poly1305.
pub const DEM_ID: u8 = 0x01;
pub const NONCE_BYTES: usize = 12;
pub(crate) const KDF_INFO: &[u8] = b"privlocker/v1/document-key";

/// Symmetric key derived from the encoding of the wrapped group element.
pub(crate) struct DocumentKey([u8; 32]);

impl DocumentKey {
    pub(crate) fn derive(wrapped_element: &[u8]) -> Self {
        let mut okm = [0u8; 32];
        Hkdf::<Sha256>::new(None, wrapped_element)
            .expand(KDF_INFO, &mut okm)
            .expect("32 bytes is a valid HKDF-SHA256 output length");
        DocumentKey(okm)
    }

    #[cfg(any(test, feature = "test-hooks"))]
    pub(crate) fn bytes(&self) -> [u8; 32] {
        self.0
    }

    pub(crate) fn seal(&self, nonce: &[u8; NONCE_BYTES], message: &[u8], aad: &[u8]) -> Vec<u8> {
        ChaCha20Poly1305::new(Key::from_slice(&self.0))
            .encrypt(Nonce::from_slice(nonce), Payload { msg: message, aad })
            .expect("in-memory encryption does not fail")
    }

    pub(crate) fn open(&self, nonce: &[u8; NONCE_BYTES], sealed: &[u8], aad: &[u8]) -> Option<Vec<u8>> {
        ChaCha20Poly1305::new(Key::from_slice(&self.0))
            .decrypt(Nonce::from_slice(nonce), Payload { msg: sealed, aad })
            .ok()
    }
}

impl Drop for DocumentKey {
    fn drop(&mut self) {
        self.0 = [0; 32];
    }
}
