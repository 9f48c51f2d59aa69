//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use privlocker_core::group::toy::{Toy, ToyScalar, TOY_ORDER};
use privlocker_core::policy::{assign_shares, Node};
use privlocker_core::scheme::hooks;
use privlocker_core::*;
use privlocker_service::{LockerService, TokenStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const POOL: [&str; 5] = ["I1/a", "I1/b", "I1/c", "I2/d", "I2/e"];

fn label(i: usize) -> AttributeLabel {
    POOL[i].parse().unwrap()
}

fn leaf(i: usize) -> Node {
    Node::leaf(label(i))
}

#[derive(Clone, Copy)]
enum Kind {
    And,
    Or,
    Two,
}

fn gate(kind: Kind, children: Vec<Node>) -> Node {
    match kind {
        Kind::And => Node::and(children),
        Kind::Or => Node::or(children),
        Kind::Two => Node::threshold(2, children),
    }
    .unwrap()
}

fn pairs() -> Vec<(usize, usize)> {
    (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect()
}

fn rest(used: &[usize]) -> Vec<usize> {
    (0..5).filter(|i| !used.contains(i)).collect()
}

/// Trees of depth at most 3 over the five-attribute pool with AND, OR and
/// 2-of-3 gates, built from distinct attributes.
fn corpus() -> Vec<AccessTree> {
    let mut out: Vec<Node> = (0..5).map(leaf).collect();
    for (i, j) in pairs() {
        out.push(gate(Kind::And, vec![leaf(i), leaf(j)]));
        out.push(gate(Kind::Or, vec![leaf(i), leaf(j)]));
        for k in rest(&[i, j]).into_iter().filter(|&k| k > j) {
            for kind in [Kind::And, Kind::Or, Kind::Two] {
                out.push(gate(kind, vec![leaf(i), leaf(j), leaf(k)]));
            }
        }
    }
    for (i, j) in pairs() {
        let others = rest(&[i, j]);
        for inner in [Kind::And, Kind::Or] {
            for &k in &others {
                for outer in [Kind::And, Kind::Or] {
                    out.push(gate(outer, vec![gate(inner, vec![leaf(i), leaf(j)]), leaf(k)]));
                }
            }
            for (x, &k) in others.iter().enumerate() {
                for &l in &others[x + 1..] {
                    out.push(gate(Kind::Two, vec![gate(inner, vec![leaf(i), leaf(j)]), leaf(k), leaf(l)]));
                }
            }
        }
        for (k, l) in pairs().into_iter().filter(|(k, l)| *k > i && ![i, j].contains(k) && ![i, j].contains(l)) {
            for (left, right) in [(Kind::And, Kind::Or), (Kind::Or, Kind::And), (Kind::And, Kind::And), (Kind::Or, Kind::Or)] {
                for outer in [Kind::And, Kind::Or] {
                    out.push(gate(
                        outer,
                        vec![gate(left, vec![leaf(i), leaf(j)]), gate(right, vec![leaf(k), leaf(l)])],
                    ));
                }
            }
        }
    }
    out.into_iter().map(AccessTree::new).collect()
}

fn subsets() -> Vec<BTreeSet<AttributeLabel>> {
    (0u32..32)
        .map(|m| (0..5).filter(|i| m & (1 << i) != 0).map(label).collect())
        .collect()
}

/// Independent satisfaction oracle.
fn oracle_satisfies(n: &Node, attrs: &BTreeSet<AttributeLabel>) -> bool {
    match n {
        Node::Leaf(l) => attrs.contains(l),
        Node::Gate(g) => g.children().iter().filter(|c| oracle_satisfies(c, attrs)).count() >= g.threshold(),
    }
}

fn mulp(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % TOY_ORDER as u128) as u64
}

fn invp(a: u64) -> u64 {
    let (mut acc, mut base, mut e) = (1u64, a, TOY_ORDER - 2);
    while e > 0 {
        if e & 1 == 1 {
            acc = mulp(acc, base);
        }
        base = mulp(base, base);
        e >>= 1;
    }
    acc
}

/// Reconstructs a node's share from leaf shares with an independently
/// written Lagrange interpolation, using the last k satisfied children.
fn oracle_reconstruct(n: &Node, shares: &[ToyScalar], id: &mut usize, attrs: &BTreeSet<AttributeLabel>) -> Option<u64> {
    let my = *id;
    *id += 1;
    match n {
        Node::Leaf(l) => attrs.contains(l).then(|| shares[my].value()),
        Node::Gate(g) => {
            let vals: Vec<Option<u64>> = g.children().iter().map(|c| oracle_reconstruct(c, shares, id, attrs)).collect();
            let ok: Vec<u64> = (1..=vals.len() as u64).filter(|&i| vals[i as usize - 1].is_some()).collect();
            if ok.len() < g.threshold() {
                return None;
            }
            let set = &ok[ok.len() - g.threshold()..];
            Some(set.iter().fold(0, |acc, &i| {
                let coeff = set.iter().filter(|&&j| j != i).fold(1, |c, &j| {
                    mulp(c, mulp(TOY_ORDER - j, invp((i + TOY_ORDER - j) % TOY_ORDER)))
                });
                (acc + mulp(vals[i as usize - 1].unwrap(), coeff)) % TOY_ORDER
            }))
        }
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn pairing_algebra() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(0xA1);
    let g = Bls12::generator();
    let h = Bls12::hash_to_group(b"acceptance/hash-point");
    let egg = Bls12::target_generator();
    let egh = Bls12::pair(&g, &h);
    let mut ok = 0;
    for _ in 0..100 {
        let (a, b) = (Bls12::random_scalar(&mut rng), Bls12::random_scalar(&mut rng));
        let (ga, gb) = (Bls12::exp(&g, &a), Bls12::exp(&g, &b));
        let e_ab = Bls12::pair(&ga, &gb);
        let bilinear = e_ab == Bls12::target_exp(&egg, &(a * b))
            && Bls12::pair(&ga, &Bls12::exp(&h, &b)) == Bls12::target_exp(&egh, &(a * b));
        let symmetric = e_ab == Bls12::pair(&gb, &ga);
        let non_degenerate = Bls12::pair(&ga, &g) != Bls12::target_identity();
        ok += usize::from(bilinear && symmetric && non_degenerate);
    }
    verdict(ok == 100, format!("{ok}/100 checks"))
}

fn alpha(mpk: &MasterPublicKey<Toy>) -> ToyScalar {
    mpk.egg_alpha().log()
}

/// `r` of a toy key, from `D = g^((α + r)/β)`.
fn key_r(msk: &MasterSecretKey<Toy>, mpk: &MasterPublicKey<Toy>, key: &AttributeKey<Toy>) -> ToyScalar {
    key.d().log() * *msk.beta() - alpha(mpk)
}

fn secret_sharing_oracle() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(0xA2);
    let (msk, mpk) = setup::<Toy, _>(&mut rng);
    let subsets = subsets();
    let keys: Vec<Option<AttributeKey<Toy>>> =
        subsets.iter().map(|s| keygen(&msk, &mpk, "k", s, &mut rng).ok()).collect();
    let other: AccessTree = "I2/e".parse().unwrap();
    let r_ie = ToyScalar::new(0x1234_5678);
    let (mut checks, mut mismatches) = (0usize, 0usize);
    let trees = corpus();
    for tree in &trees {
        let secret = Toy::random_scalar(&mut rng);
        // Replay the share assignment the token draws.
        let shares = assign_shares::<Toy, _>(tree, secret, &mut rng.clone());
        let part = hooks::partial_token_with_secret(&mpk, tree, secret, &mut rng);
        let issuer = gen_partial_token(&mpk, &other, &mut rng);
        let token = combine_tokens(&part, &issuer).unwrap();
        let ct = hooks::encrypt_with_exponent(&mpk, &token, b"m", r_ie, &mut rng).unwrap();
        for (attrs, key) in subsets.iter().zip(&keys) {
            let expected = oracle_satisfies(tree.root(), attrs);
            let independent = oracle_reconstruct(tree.root(), shares.shares(), &mut 0, attrs);
            checks += 1;
            if independent.is_some() != expected || independent.is_some_and(|v| v != secret.value()) {
                mismatches += 1;
            }
            // Node 1 of the composed tree is this tree's root.
            let via_scheme = key.as_ref().and_then(|k| decrypt_node(&ct, k, 1).map(|t| (t, k)));
            checks += 1;
            let good = match via_scheme {
                Some((t, k)) => expected && t.log() == key_r(&msk, &mpk, k) * r_ie * secret,
                None => !expected,
            };
            mismatches += usize::from(!good);
        }
    }
    verdict(
        mismatches == 0,
        format!("{} trees x {} subsets, {checks} checks, {mismatches} mismatches", trees.len(), subsets.len()),
    )
}

fn end_to_end() -> Verdict {
    const SUBSETS_PER_CIPHERTEXT: usize = 5;
    const CIPHERTEXTS: usize = 100;
    let mut rng = ChaCha20Rng::seed_from_u64(0xA3);
    let (msk, mpk) = setup::<Bls12, _>(&mut rng);
    let subsets: Vec<BTreeSet<AttributeLabel>> = subsets().into_iter().filter(|s| !s.is_empty()).collect();
    let keys: Vec<AttributeKey<Bls12>> = subsets.iter().map(|s| keygen(&msk, &mpk, "k", s, &mut rng).unwrap()).collect();
    let trees = corpus();
    let (mut cases, mut failures, mut positives) = (0usize, 0usize, 0usize);
    for c in 0..CIPHERTEXTS {
        // Spread issuer parts over the whole corpus; pair each with a
        // different subscriber part.
        let issuer_tree = &trees[c * trees.len() / CIPHERTEXTS];
        let subscriber_tree = &trees[(c * 37 + 11) % trees.len()];
        let message = format!("document {c}").into_bytes();
        let ps = gen_partial_token(&mpk, subscriber_tree, &mut rng);
        let pi = gen_partial_token(&mpk, issuer_tree, &mut rng);
        let token = combine_tokens(&ps, &pi).unwrap();
        let ct = encrypt_with_token(&mpk, &token, &message, &mut rng).unwrap();
        // The full set always satisfies; the others are drawn at random.
        let mut picks = vec![subsets.len() - 1];
        while picks.len() < SUBSETS_PER_CIPHERTEXT {
            let p = rng.gen_range(0..subsets.len() - 1);
            if !picks.contains(&p) {
                picks.push(p);
            }
        }
        for p in picks {
            let expected = oracle_satisfies(token.tree().root(), &subsets[p]);
            let ok = match decrypt(&ct, &keys[p]) {
                Ok(m) => expected && m == message,
                Err(SchemeError::PolicyNotSatisfied) => !expected,
                Err(_) => false,
            };
            cases += 1;
            positives += usize::from(expected);
            failures += usize::from(!ok);
        }
    }
    verdict(
        cases >= 500 && failures == 0,
        format!("{cases} cases ({positives} satisfying), {failures} failures"),
    )
}

fn cancellation_identities() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(0xA4);
    let (msk, mpk) = setup::<Toy, _>(&mut rng);
    let sub: AccessTree = "(I1/a AND THRESHOLD(2; I1/b, I1/c, I2/d))".parse().unwrap();
    let iss: AccessTree = "(I2/d OR I2/e)".parse().unwrap();
    let (r_s, r_i, r_ie) = (ToyScalar::new(1111), ToyScalar::new(2222), ToyScalar::new(3333));
    let shares_s = assign_shares::<Toy, _>(&sub, r_s, &mut rng.clone());
    let ps = hooks::partial_token_with_secret(&mpk, &sub, r_s, &mut rng);
    let shares_i = assign_shares::<Toy, _>(&iss, r_i, &mut rng.clone());
    let pi = hooks::partial_token_with_secret(&mpk, &iss, r_i, &mut rng);
    let token = combine_tokens(&ps, &pi).unwrap();
    let ct = hooks::encrypt_with_exponent(&mpk, &token, b"identity check", r_ie, &mut rng).unwrap();
    let attrs: BTreeSet<AttributeLabel> = ["I1/a", "I1/b", "I2/d"].iter().map(|s| s.parse().unwrap()).collect();
    let key = keygen(&msk, &mpk, "k", &attrs, &mut rng).unwrap();
    let r = key_r(&msk, &mpk, &key);

    // Preorder ids of the composed tree: 0 root, then the subscriber
    // subtree, then the issuer subtree.
    let offset_i = 1 + sub.node_count();
    let mut leaf_checks = 0;
    let mut leaf_ok = true;
    for (tree, shares, base) in [(&sub, &shares_s, 1), (&iss, &shares_i, offset_i)] {
        for (id, (node, _)) in tree.preorder().iter().enumerate() {
            if let Node::Leaf(l) = node {
                if attrs.contains(l) {
                    let got = decrypt_node(&ct, &key, base + id).map(|t| t.log());
                    leaf_ok &= got == Some(r * r_ie * shares.share(id));
                    leaf_checks += 1;
                }
            }
        }
    }
    let a = decrypt_node(&ct, &key, 0).map(|t| t.log());
    let root_ok = a == Some(r * r_ie * (r_s + r_i));
    let blinding = Toy::pair(ct.c2(), key.d()).log() - a.unwrap_or_default();
    let blinding_ok = blinding == alpha(&mpk) * (r_s + r_i) * r_ie;
    let plain_ok = decrypt(&ct, &key).as_deref() == Ok(b"identity check".as_slice());
    verdict(
        leaf_ok && root_ok && blinding_ok && plain_ok && leaf_checks == 4,
        format!("leaves {leaf_checks} ok={leaf_ok}, root ok={root_ok}, blinding ok={blinding_ok}"),
    )
}

fn collusion() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(0xA5);
    let a: AccessTree = "I1/a".parse().unwrap();
    let b: AccessTree = "I2/d".parse().unwrap();
    let (la, lb) = (label(0), label(3));
    let mut rejected = 0;
    let mut honest = 0;
    for trial in 0..100 {
        let (msk, mpk) = setup::<Bls12, _>(&mut rng);
        let token = combine_tokens(&gen_partial_token(&mpk, &a, &mut rng), &gen_partial_token(&mpk, &b, &mut rng)).unwrap();
        let ct = encrypt_with_token(&mpk, &token, b"collusion", &mut rng).unwrap();
        let ka = keygen(&msk, &mpk, "u1", &BTreeSet::from([la.clone()]), &mut rng).unwrap();
        let kb = keygen(&msk, &mpk, "u2", &BTreeSet::from([lb.clone()]), &mut rng).unwrap();
        let mix = |d: &<Bls12 as PairingBackend>::Source| {
            let comps = [(la.clone(), ka.components()[&la]), (lb.clone(), kb.components()[&lb])].into();
            AttributeKey::from_components("colluder", *d, comps).unwrap()
        };
        let both_fail = [ka.d(), kb.d()]
            .iter()
            .all(|d| decrypt(&ct, &mix(d)) == Err(SchemeError::AuthenticationFailed));
        rejected += usize::from(both_fail);
        // Control: a single key over both attributes works.
        if trial % 10 == 0 {
            let k = keygen(&msk, &mpk, "u3", &BTreeSet::from([la.clone(), lb.clone()]), &mut rng).unwrap();
            honest += usize::from(decrypt(&ct, &k).is_ok());
        }
    }
    verdict(
        rejected == 100 && honest == 10,
        format!("{rejected}/100 mixed keys rejected, {honest}/10 honest controls decrypt"),
    )
}

fn token_reuse() -> Verdict {
    let mut svc = LockerService::<Bls12>::setup(ChaCha20Rng::seed_from_u64(0xA6));
    svc.register_issuer("I1", []).unwrap();
    svc.register_issuer("I2", []).unwrap();
    let s = |items: &[&str]| items.iter().map(|x| x.parse().unwrap()).collect::<BTreeSet<AttributeLabel>>();
    svc.push_attrs("subscriber", &s(&["I1/a"])).unwrap();
    svc.push_attrs("requester", &s(&["I1/b", "I2/d"])).unwrap();
    svc.gen_ab_pvt_key("requester", &["I1".to_string(), "I2".to_string()].into()).unwrap();
    let pi: AccessTree = "(I2/d OR I2/e)".parse().unwrap();
    let ps: AccessTree = "(I1/b OR I1/c)".parse().unwrap();
    let uris: Vec<_> = (0..10)
        .map(|i| svc.issue_priv_document("I2", "subscriber", &pi, &ps, format!("doc {i}").as_bytes()).unwrap())
        .collect();
    let stats = svc.tokens().stats();
    let decrypted = uris
        .iter()
        .enumerate()
        .filter(|(i, u)| svc.fetch_priv_doc("requester", u).ok() == Some(format!("doc {i}").into_bytes()))
        .count();
    let (_, key) = svc.keys().covering("requester", &["I1".to_string(), "I2".to_string()].into()).unwrap();
    let wrapped: BTreeSet<Vec<u8>> = uris
        .iter()
        .map(|u| {
            let ct = &svc.documents().get(u).unwrap().ciphertext;
            Bls12::encode_target(&hooks::unwrap_element(ct, key).unwrap())
        })
        .collect();
    verdict(
        stats == TokenStats { hits: 9, handshakes: 1 } && decrypted == 10 && wrapped.len() == 10,
        format!(
            "handshakes={} hits={}, {decrypted}/10 decrypt, {} distinct wrapped keys",
            stats.handshakes,
            stats.hits,
            wrapped.len()
        ),
    )
}

fn performance() -> Verdict {
    let mut rng = ChaCha20Rng::seed_from_u64(0xA7);
    let (msk, mpk) = setup::<Bls12, _>(&mut rng);
    let ps: AccessTree = "(I1/a AND I1/b AND I1/c)".parse().unwrap();
    let pi: AccessTree = "THRESHOLD(2; I2/d, I2/e, I2/f)".parse().unwrap();
    let token = combine_tokens(&gen_partial_token(&mpk, &ps, &mut rng), &gen_partial_token(&mpk, &pi, &mut rng)).unwrap();
    let attrs: BTreeSet<AttributeLabel> =
        ["I1/a", "I1/b", "I1/c", "I2/d", "I2/f"].iter().map(|s| s.parse().unwrap()).collect();
    let key = keygen(&msk, &mpk, "k", &attrs, &mut rng).unwrap();
    let mut doc = vec![0u8; 1 << 20];
    rng.fill(doc.as_mut_slice());

    let t = Instant::now();
    let ct = encrypt_with_token(&mpk, &token, &doc, &mut rng).unwrap();
    let enc = t.elapsed();
    let t = Instant::now();
    let back = decrypt(&ct, &key).unwrap();
    let dec = t.elapsed();
    let limit = Duration::from_secs(1);
    verdict(
        token.tree().leaves().len() == 6 && back == doc && enc < limit && dec < limit,
        format!("1 MiB, 6 leaves: encrypt {enc:.2?}, decrypt {dec:.2?}"),
    )
}

fn service_lifecycle() -> Verdict {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store");
    let out = Command::new(env!("CARGO_BIN_EXE_privlocker"))
        .arg("--store")
        .arg(&store)
        .args(["--seed", "2024", "run-scenario"])
        .arg(scenarios.join("demo.txt"))
        .output()
        .unwrap();
    let recovered = std::fs::read(store.join("bank.out")).ok();
    let original = std::fs::read(scenarios.join("marksheet.txt")).unwrap();
    let exact = recovered.as_deref() == Some(original.as_slice());
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    verdict(
        out.status.success() && exact,
        format!(
            "exit {:?}, {}, document recovered byte-exact: {exact}",
            out.status.code(),
            String::from_utf8_lossy(&out.stdout).trim()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("pairing-algebra", pairing_algebra),
        ("secret-sharing-oracle", secret_sharing_oracle),
        ("end-to-end-correctness", end_to_end),
        ("cancellation-identities", cancellation_identities),
        ("collusion-resistance", collusion),
        ("token-reuse", token_reuse),
        ("performance", performance),
        ("service-lifecycle", service_lifecycle),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {}. {name}: {} [{:.1?}]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            t.elapsed()
        );
    }
    println!("acceptance: {}/{} passed in {:.1?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
