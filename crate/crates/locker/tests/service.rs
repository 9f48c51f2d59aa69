use std::collections::BTreeSet;
use std::fs;

use privlocker_core::group::toy::Toy;
use privlocker_core::{AccessTree, AttributeLabel, Bls12, PairingBackend};
use privlocker_service::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn labels(items: &[&str]) -> BTreeSet<AttributeLabel> {
    items.iter().map(|s| s.parse().unwrap()).collect()
}

fn issuers(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn policy(s: &str) -> AccessTree {
    s.parse().unwrap()
}

fn service<B: PairingBackend>(seed: u64) -> LockerService<B> {
    LockerService::setup(ChaCha20Rng::seed_from_u64(seed))
}

/// Two issuers, one subscriber, two requesters; `bank` qualifies, `shop`
/// holds a key over the right issuers but the wrong attributes.
fn populated<B: PairingBackend>(seed: u64) -> (LockerService<B>, DocumentUri) {
    let mut svc = service::<B>(seed);
    svc.register_issuer("CBSE", []).unwrap();
    svc.register_issuer("UIDAI", []).unwrap();
    svc.push_attrs("alice", &labels(&["CBSE/student"])).unwrap();
    svc.push_attrs("bank", &labels(&["UIDAI/kyc-verified", "CBSE/employer"])).unwrap();
    svc.push_attrs("shop", &labels(&["UIDAI/kyc-verified", "CBSE/merchant"])).unwrap();
    let uri = svc
        .issue_priv_document(
            "CBSE",
            "alice",
            &policy("(CBSE/employer OR CBSE/university)"),
            &policy("UIDAI/kyc-verified"),
            b"marksheet 2024: distinction",
        )
        .unwrap();
    (svc, uri)
}

#[test]
fn issuer_registration() {
    let mut svc = service::<Toy>(1);
    svc.register_issuer("CBSE", []).unwrap();
    svc.push_attrs("alice", &labels(&["CBSE/student"])).unwrap();
    assert_eq!(svc.register_issuer("CBSE", []).unwrap_err().code(), "duplicate-issuer");
    assert_eq!(svc.register_issuer("", []).unwrap_err().code(), "invalid-input");
    assert_eq!(svc.register_issuer("bad/id", []).unwrap_err().code(), "invalid-input");
}

#[test]
fn issuer_catalog_limits_names() {
    let mut svc = service::<Toy>(1);
    svc.register_issuer("NHA", ["vaccinated".to_string()]).unwrap();
    svc.push_attrs("u", &labels(&["NHA/vaccinated"])).unwrap();
    assert_eq!(svc.push_attrs("u", &labels(&["NHA/other"])).unwrap_err().code(), "unknown-attribute");
}

#[test]
fn push_and_pull_attributes() {
    let mut svc = service::<Toy>(2);
    svc.register_issuer("CBSE", []).unwrap();
    svc.push_attrs("u", &labels(&["CBSE/student"])).unwrap();
    let all = svc.push_attrs("u", &labels(&["CBSE/alumnus"])).unwrap();
    assert_eq!(all, labels(&["CBSE/student", "CBSE/alumnus"]));
    assert_eq!(svc.pull_attrs("u").unwrap(), all);

    let err = svc.push_attrs("u", &labels(&["NOPE/x"])).unwrap_err();
    assert_eq!(err.code(), "unknown-issuer");
    assert_eq!(svc.pull_attrs("u").unwrap(), all);

    let before = svc.registry().entries("u").unwrap()[&"CBSE/student".parse().unwrap()].updated_at;
    svc.push_attrs("u", &labels(&["CBSE/student"])).unwrap();
    let after = svc.registry().entries("u").unwrap()[&"CBSE/student".parse().unwrap()].updated_at;
    assert!(after > before);
    assert_eq!(svc.pull_attrs("u").unwrap(), all);

    assert_eq!(svc.pull_attrs("ghost").unwrap_err().code(), "unknown-identity");
    svc.register_identity("quiet").unwrap();
    assert!(svc.pull_attrs("quiet").unwrap().is_empty());
}

#[test]
fn stale_push_loses() {
    let mut svc = service::<Toy>(2);
    svc.register_issuer("CBSE", []).unwrap();
    svc.push_attrs_at("u", &labels(&["CBSE/student"]), 50).unwrap();
    svc.push_attrs_at("u", &labels(&["CBSE/student"]), 10).unwrap();
    assert_eq!(svc.registry().entries("u").unwrap()[&"CBSE/student".parse().unwrap()].updated_at, 50);
}

#[test]
fn issuance_and_token_cache() {
    let (mut svc, uri) = populated::<Toy>(3);
    assert_eq!(uri.issuer_id(), "CBSE");
    assert_eq!(uri.doc_type(), "PRIV");
    assert_eq!(uri.doc_id().len(), 32);
    assert!(uri.doc_id().chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(svc.tokens().stats(), TokenStats { hits: 0, handshakes: 1 });

    let again = svc
        .issue_priv_document(
            "CBSE",
            "alice",
            &policy("(CBSE/employer OR CBSE/university)"),
            &policy("UIDAI/kyc-verified"),
            b"second",
        )
        .unwrap();
    assert_ne!(again, uri);
    assert_eq!(svc.tokens().stats(), TokenStats { hits: 1, handshakes: 1 });

    let other = svc
        .issue_priv_document("CBSE", "alice", &policy("CBSE/employer"), &policy("UIDAI/kyc-verified"), b"third")
        .unwrap();
    assert_ne!(other, uri);
    assert_eq!(svc.tokens().stats(), TokenStats { hits: 1, handshakes: 2 });

    let p = policy("CBSE/employer");
    assert_eq!(svc.issue_priv_document("CBSE", "alice", &p, &p, b"").unwrap_err().code(), "invalid-input");
    assert_eq!(svc.issue_priv_document("NOPE", "alice", &p, &p, b"x").unwrap_err().code(), "unknown-issuer");
    assert_eq!(svc.issue_priv_document("CBSE", "ghost", &p, &p, b"x").unwrap_err().code(), "unknown-identity");
    assert_eq!(svc.documents().len(), 3);
    for (uri, doc) in svc.documents().iter() {
        assert_eq!(&doc.uri, uri);
        assert_eq!(uri.to_string().parse::<DocumentUri>().unwrap(), *uri);
    }
}

#[test]
fn key_generation_and_redundancy() {
    let (mut svc, _) = populated::<Toy>(4);
    let first = svc.gen_ab_pvt_key("bank", &issuers(&["UIDAI"])).unwrap();
    let KeyInsert::Stored { handle, evicted } = first else {
        panic!("expected a stored key")
    };
    assert!(evicted.is_empty());
    assert_eq!(svc.key(&handle).unwrap().attributes(), labels(&["UIDAI/kyc-verified"]));

    let second = svc.gen_ab_pvt_key("bank", &issuers(&["CBSE", "UIDAI"])).unwrap();
    let KeyInsert::Stored { handle: wide, evicted } = second else {
        panic!("expected a stored key")
    };
    assert_eq!(evicted, vec![handle.clone()]);
    assert!(svc.key(&handle).is_none());
    assert_eq!(svc.key(&wide).unwrap().attributes(), labels(&["UIDAI/kyc-verified", "CBSE/employer"]));
    assert_eq!(svc.keys().handles_for("bank").count(), 1);

    assert_eq!(
        svc.gen_ab_pvt_key("bank", &issuers(&["UIDAI"])).unwrap(),
        KeyInsert::Dominated { by: wide }
    );

    svc.register_issuer("NHA", []).unwrap();
    assert_eq!(svc.gen_ab_pvt_key("bank", &issuers(&["NHA"])).unwrap_err().code(), "missing-attributes");
    assert_eq!(svc.gen_ab_pvt_key("bank", &issuers(&["ZZZ"])).unwrap_err().code(), "unknown-issuer");
    assert_eq!(svc.gen_ab_pvt_key("ghost", &issuers(&["CBSE"])).unwrap_err().code(), "unknown-identity");
}

#[test]
fn fetch_outcomes() {
    let (mut svc, uri) = populated::<Toy>(5);
    assert_eq!(svc.fetch_priv_doc("bank", &uri).unwrap_err().code(), "no-covering-key");
    svc.gen_ab_pvt_key("bank", &issuers(&["CBSE", "UIDAI"])).unwrap();
    svc.gen_ab_pvt_key("shop", &issuers(&["CBSE", "UIDAI"])).unwrap();
    assert_eq!(svc.fetch_priv_doc("bank", &uri).unwrap(), b"marksheet 2024: distinction");
    assert_eq!(svc.fetch_priv_doc("shop", &uri).unwrap_err().code(), "policy-not-satisfied");

    let mstn: DocumentUri = "CBSE::MSTN::123".parse().unwrap();
    assert_eq!(svc.fetch_priv_doc("bank", &mstn).unwrap_err().code(), "wrong-doctype");
    let missing: DocumentUri = "CBSE::PRIV::00".parse().unwrap();
    assert_eq!(svc.fetch_priv_doc("bank", &missing).unwrap_err().code(), "unknown-uri");
    assert_eq!(svc.pull_doc(&mstn).unwrap_err().code(), "not-implemented");
}

#[test]
fn key_only_for_one_issuer_does_not_cover() {
    let (mut svc, uri) = populated::<Toy>(6);
    svc.gen_ab_pvt_key("bank", &issuers(&["UIDAI"])).unwrap();
    assert_eq!(svc.fetch_priv_doc("bank", &uri).unwrap_err().code(), "no-covering-key");
}

struct Tagging;

impl Authenticator for Tagging {
    fn sign(&self, issuer: &str, payload: &[u8]) -> Vec<u8> {
        let mut tag = issuer.as_bytes().to_vec();
        tag.extend_from_slice(&(payload.len() as u64).to_be_bytes());
        tag
    }

    fn verify(&self, issuer: &str, payload: &[u8], tag: &[u8]) -> bool {
        self.sign(issuer, payload) == tag
    }
}

#[test]
fn authenticator_is_consulted() {
    let mut svc = service::<Toy>(7).with_authenticator(Tagging);
    svc.register_issuer("CBSE", []).unwrap();
    svc.push_attrs("alice", &labels(&["CBSE/student"])).unwrap();
    svc.push_attrs("bank", &labels(&["CBSE/employer"])).unwrap();
    let p = policy("CBSE/employer");
    let uri = svc.issue_priv_document("CBSE", "alice", &p, &p, b"doc").unwrap();
    assert_eq!(svc.documents().get(&uri).unwrap().issuer_signature.len(), 12);
    svc.gen_ab_pvt_key("bank", &issuers(&["CBSE"])).unwrap();
    assert_eq!(svc.fetch_priv_doc("bank", &uri).unwrap(), b"doc");

    // A service that does not know the signing scheme rejects the tag.
    struct Rejecting;
    impl Authenticator for Rejecting {
        fn sign(&self, _: &str, _: &[u8]) -> Vec<u8> {
            Vec::new()
        }
        fn verify(&self, _: &str, _: &[u8], _: &[u8]) -> bool {
            false
        }
    }
    let dir = tempfile::tempdir().unwrap();
    svc.save(dir.path()).unwrap();
    let strict = LockerService::<Toy>::load(dir.path()).unwrap().with_authenticator(Rejecting);
    assert_eq!(strict.fetch_priv_doc("bank", &uri).unwrap_err().code(), "bad-signature");
}

fn views<B: PairingBackend>(svc: &LockerService<B>) -> String {
    let mut out = String::new();
    for id in svc.registry().identities() {
        out += &format!("{id}: {:?}\n", svc.registry().entries(id));
    }
    for (h, k) in svc.keys().iter() {
        out += &format!("{h} {:?}\n", k);
    }
    for (k, t) in svc.tokens().iter() {
        out += &format!("{k} {:?}\n", t);
    }
    for (u, d) in svc.documents().iter() {
        out += &format!("{u} {:?}\n", d);
    }
    out += &format!("{:?} {:?} {}", svc.tokens().stats(), svc.mpk(), svc.clock());
    out
}

#[test]
fn save_load_round_trip() {
    let (mut svc, _) = populated::<Toy>(8);
    svc.register_issuer("NHA", ["vaccinated".to_string()]).unwrap();
    svc.gen_ab_pvt_key("bank", &issuers(&["CBSE", "UIDAI"])).unwrap();
    let dir = tempfile::tempdir().unwrap();
    svc.save(dir.path()).unwrap();
    let back = LockerService::<Toy>::load(dir.path()).unwrap();
    assert_eq!(views(&back), views(&svc));
    assert_eq!(back.issuer("NHA"), svc.issuer("NHA"));
    // No temporaries are left behind.
    let names: BTreeSet<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    let expected: BTreeSet<String> = StoreKind::ALL.iter().map(|k| k.file_name().to_string()).collect();
    assert_eq!(names, expected);
}

#[test]
fn corrupt_stores_fail_atomically() {
    let (svc, uri) = populated::<Toy>(9);
    let dir = tempfile::tempdir().unwrap();
    svc.save(dir.path()).unwrap();

    let (mut other, other_uri) = populated::<Toy>(10);
    let before = views(&other);
    let docs = dir.path().join(StoreKind::Documents.file_name());
    let good = fs::read(&docs).unwrap();

    fs::write(&docs, &good[..good.len() / 2]).unwrap();
    assert_eq!(other.reload(dir.path()).unwrap_err().code(), "checksum-mismatch");
    assert_eq!(views(&other), before);
    assert!(other.documents().contains(&other_uri));

    let mut flipped = good.clone();
    flipped[40] ^= 1;
    fs::write(&docs, &flipped).unwrap();
    assert_eq!(other.reload(dir.path()).unwrap_err().code(), "checksum-mismatch");

    let mut bumped = good.clone();
    bumped[4] = STORE_VERSION + 1;
    fs::write(&docs, &bumped).unwrap();
    assert_eq!(other.reload(dir.path()).unwrap_err().code(), "version-mismatch");
    assert_eq!(views(&other), before);

    fs::write(&docs, &good).unwrap();
    other.reload(dir.path()).unwrap();
    assert!(other.documents().contains(&uri));

    let empty = tempfile::tempdir().unwrap();
    assert_eq!(LockerService::<Toy>::load(empty.path()).err().unwrap().code(), "store-missing");
}

#[test]
fn wrong_backend_store_is_rejected() {
    let (svc, _) = populated::<Toy>(11);
    let dir = tempfile::tempdir().unwrap();
    svc.save(dir.path()).unwrap();
    assert_eq!(LockerService::<Bls12>::load(dir.path()).err().unwrap().code(), "corrupt-store");
}

#[test]
fn end_to_end_across_save_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let (mut svc, uri) = populated::<Bls12>(12);
    svc.gen_ab_pvt_key("bank", &issuers(&["UIDAI"])).unwrap();
    svc.save(dir.path()).unwrap();

    let mut svc = LockerService::<Bls12>::load(dir.path()).unwrap();
    let out = svc.gen_ab_pvt_key("bank", &issuers(&["CBSE", "UIDAI"])).unwrap();
    assert!(matches!(out, KeyInsert::Stored { ref evicted, .. } if evicted.len() == 1));
    svc.gen_ab_pvt_key("shop", &issuers(&["CBSE", "UIDAI"])).unwrap();
    svc.save(dir.path()).unwrap();

    let svc = LockerService::<Bls12>::load(dir.path()).unwrap();
    assert_eq!(svc.keys().handles_for("bank").count(), 1);
    assert_eq!(svc.fetch_priv_doc("bank", &uri).unwrap(), b"marksheet 2024: distinction");
    assert_eq!(svc.fetch_priv_doc("shop", &uri).unwrap_err().code(), "policy-not-satisfied");
}

#[test]
fn reseeding_is_reproducible() {
    let run = || {
        let mut svc = service::<Toy>(13);
        svc.reseed(99);
        svc.register_issuer("CBSE", []).unwrap();
        svc.push_attrs("alice", &labels(&["CBSE/student"])).unwrap();
        let p = policy("CBSE/student");
        svc.issue_priv_document("CBSE", "alice", &p, &p, b"x").unwrap()
    };
    assert_eq!(run(), run());
}
