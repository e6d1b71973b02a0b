#![allow(dead_code)]

use fht_core::numerics::{FieldElement, Rational};
use fht_core::protocol::{
    cipher_crs, generate_owner_key, owner_prepare_random, verifier_check, KeySpec, OwnerKey, Payload, SchemeId,
    VerificationBundle, Verdict, VerifierSession,
};
use fht_core::masked::Noise;
use fht_core::Result;
use rand::{Rng, RngCore};

pub fn random_bytes(rng: &mut dyn RngCore, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

pub fn random_key(scheme: SchemeId, rng: &mut dyn RngCore) -> OwnerKey {
    generate_owner_key(&KeySpec::new(scheme), rng).expect("keygen")
}

/// Owner-side bundle plus, for the verifier-random scheme, the session that
/// supplied the array.
pub struct Prepared {
    pub bundle: VerificationBundle,
    pub session: Option<VerifierSession>,
}

pub fn prepare(key: &OwnerKey, msg: &[u8], rng: &mut dyn RngCore) -> Result<Prepared> {
    let session = match key.scheme() {
        SchemeId::NativeVerifier => {
            let groups = (msg.len() / 4).max(1);
            Some(VerifierSession::new(groups, key.field().expect("modular"), rng)?)
        }
        _ => None,
    };
    let rv = session.as_ref().map(VerifierSession::rv_for_owner);
    let bundle = owner_prepare_random(msg, key, rng, rv)?;
    Ok(Prepared { bundle, session })
}

/// Runs the verifier side once.
pub fn verify(key: &OwnerKey, prepared: &mut Prepared, bundle: &VerificationBundle) -> Result<Verdict> {
    let material = key.verifier_material();
    match &mut prepared.session {
        Some(s) => s.check(bundle, &material),
        None => verifier_check(bundle, &material),
    }
}

pub fn session_rv(prepared: &Prepared) -> Option<&Noise> {
    prepared.session.as_ref().map(VerifierSession::rv_for_owner)
}

fn bump(e: &FieldElement, rng: &mut dyn RngCore) -> FieldElement {
    let p = u64::try_from(e.field().modulus()).expect("small prime");
    let delta = rng.gen_range(1..p);
    e + &e.field().elem_u64(delta)
}

/// Changes one ciphertext symbol. Returns `None` when the payload is empty.
pub fn tamper(bundle: &VerificationBundle, rng: &mut dyn RngCore) -> Option<VerificationBundle> {
    let mut out = bundle.clone();
    let coord = rng.gen_bool(0.5);
    match &mut out.ciphertext {
        Payload::Projective(ct) => {
            if ct.0.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..ct.0.len());
            let delta = Rational::new(rng.gen_range(1..50).into(), rng.gen_range(1..50).into()).unwrap();
            let p = &mut ct.0[i];
            if coord {
                p.x = &p.x + &delta;
            } else {
                p.y = &p.y + &delta;
            }
        }
        Payload::ProjectiveMod(ct) => {
            if ct.points.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..ct.points.len());
            let p = &mut ct.points[i];
            if coord {
                p.x = bump(&p.x, rng);
            } else {
                p.y = bump(&p.y, rng);
            }
        }
        Payload::Masked(ct) => {
            if ct.groups.is_empty() {
                return None;
            }
            let g = rng.gen_range(0..ct.groups.len());
            let pts = &mut ct.groups[g].points;
            let i = rng.gen_range(0..pts.len());
            if coord {
                pts[i].x = bump(&pts[i].x, rng);
            } else {
                pts[i].y = bump(&pts[i].y, rng);
            }
        }
        Payload::Native(ct) => {
            if ct.c2.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..ct.c2.len());
            ct.c2[i] = bump(&ct.c2[i], rng);
            // keep it a valid ElGamal symbol
            if ct.c2[i].is_zero() {
                ct.c2[i] = bump(&ct.c2[i], rng);
            }
        }
        Payload::Sums(ct) => {
            let i = rng.gen_range(0..ct.inner.c2.len());
            ct.inner.c2[i] = bump(&ct.inner.c2[i], rng);
            if ct.inner.c2[i].is_zero() {
                ct.inner.c2[i] = bump(&ct.inner.c2[i], rng);
            }
        }
    }
    Some(out)
}

/// Whether the change reaches the cross-ratio sequence at all; symbols in a
/// trailing partial group do not.
pub fn changes_crs(original: &VerificationBundle, tampered: &VerificationBundle, rv: Option<&Noise>) -> bool {
    match (cipher_crs(original, rv), cipher_crs(tampered, rv)) {
        (Ok(a), Ok(b)) => a != b,
        _ => true,
    }
}
