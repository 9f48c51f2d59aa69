use privlocker_core::group::toy::Toy;
use privlocker_core::{
    AttributeKey, Bls12, Ciphertext, CombinedToken, MasterPublicKey, MasterSecretKey, PairingBackend, PartialToken,
    Record, RecordHeader, RecordKind,
};

use crate::{CliError, Output};

fn push(out: &mut Output, k: &str, v: impl ToString) {
    out.push((k.to_string(), v.to_string()));
}

fn token_sizes<B: PairingBackend>(out: &mut Output, policy: String, leaves: usize) {
    push(out, "policy", policy);
    push(out, "c1_bytes", B::TARGET_BYTES);
    push(out, "c2_bytes", B::SOURCE_BYTES);
    push(out, "leaf_parts", leaves);
    push(out, "leaf_part_bytes", 2 * B::SOURCE_BYTES);
}

fn describe<B: PairingBackend>(kind: RecordKind, bytes: &[u8], out: &mut Output) -> Result<(), CliError> {
    match kind {
        RecordKind::MasterPublicKey => {
            MasterPublicKey::<B>::from_bytes(bytes)?;
            push(out, "generator_bytes", B::SOURCE_BYTES);
            push(out, "g_beta_bytes", B::SOURCE_BYTES);
            push(out, "egg_alpha_bytes", B::TARGET_BYTES);
        }
        RecordKind::MasterSecretKey => {
            // Sizes only; the secret itself is never printed.
            MasterSecretKey::<B>::from_bytes(bytes)?;
            push(out, "beta_bytes", B::SCALAR_BYTES);
            push(out, "g_alpha_bytes", B::SOURCE_BYTES);
        }
        RecordKind::PartialToken => {
            let t = PartialToken::<B>::from_bytes(bytes)?;
            token_sizes::<B>(out, t.tree().to_string(), t.leaf_parts().len());
        }
        RecordKind::CombinedToken => {
            let t = CombinedToken::<B>::from_bytes(bytes)?;
            token_sizes::<B>(out, t.tree().to_string(), t.leaf_parts().len());
        }
        RecordKind::Ciphertext => {
            let ct = Ciphertext::<B>::from_bytes(bytes)?;
            token_sizes::<B>(out, ct.tree().to_string(), ct.leaf_parts().len());
            push(out, "issuers", ct.issuer_set().into_iter().collect::<Vec<_>>().join(","));
            push(out, "nonce_bytes", ct.nonce().len());
            push(out, "c5_bytes", ct.c5().len());
        }
        RecordKind::AttributeKey => {
            let k = AttributeKey::<B>::from_bytes(bytes)?;
            push(out, "holder", k.holder());
            push(out, "issuers", k.issuer_set().iter().cloned().collect::<Vec<_>>().join(","));
            push(
                out,
                "attributes",
                k.attributes().iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            );
            push(out, "d_bytes", B::SOURCE_BYTES);
            push(out, "component_bytes", 2 * B::SOURCE_BYTES);
        }
    }
    Ok(())
}

pub(crate) fn inspect(bytes: &[u8]) -> Result<Output, CliError> {
    let header = RecordHeader::peek(bytes)?;
    let mut out = Output::new();
    push(&mut out, "kind", header.kind);
    match header.backend {
        id if id == Bls12::ID => {
            push(&mut out, "backend", Bls12::NAME);
            describe::<Bls12>(header.kind, bytes, &mut out)?;
        }
        id if id == Toy::ID => {
            push(&mut out, "backend", Toy::NAME);
            describe::<Toy>(header.kind, bytes, &mut out)?;
        }
        other => {
            return Err(CliError::new("malformed-encoding", format!("unknown backend id {other:#04x}")));
        }
    }
    push(&mut out, "total_bytes", bytes.len());
    Ok(out)
}
