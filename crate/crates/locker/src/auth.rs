/// Signs and checks issuer payloads. Real signature schemes plug in here.
pub trait Authenticator: Send + Sync {
    fn sign(&self, issuer: &str, payload: &[u8]) -> Vec<u8>;
    fn verify(&self, issuer: &str, payload: &[u8], tag: &[u8]) -> bool;
}

/// Accepts everything and produces an empty tag.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoopAuthenticator;

impl Authenticator for NoopAuthenticator {
    fn sign(&self, _issuer: &str, _payload: &[u8]) -> Vec<u8> {
        Vec::new()
    }

    fn verify(&self, _issuer: &str, _payload: &[u8], _tag: &[u8]) -> bool {
        true
    }
}
