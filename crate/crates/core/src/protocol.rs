//! Owner/verifier flows over every scheme.
//!
//! The owner encrypts, computes the feature value of the plaintext, and ships
//! both (plus any compensation residues) in a [`VerificationBundle`]. The
//! verifier recomputes the feature value from the ciphertext using only
//! public material and compares digests. Key files split owner secrets from
//! verifier material so the verifier side cannot read a decryption key.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::ToPrimitive;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::crossratio::{hfv, line_crs, line_crs_mod, planar_crs, planar_crs_mod, CrossRatioSeq, Hfv, GROUP};
use crate::elgamal::{ElGamalKey, ExponentSource, RandomExponents};
use crate::error::{Error, Result};
use crate::masked::{
    masked_crs_cipher, masked_crs_plain, masked_decrypt, masked_encrypt, MaskedCiphertext, MaskedGroup,
    MaskedKey, Noise,
};
use crate::native::{
    eg_decrypt, eg_encrypt, encode, kf_bundles, native_crs_cipher, native_crs_plain, random_kfs,
    sum_crs, sum_crs_plain, sum_decrypt, sum_encrypt, Encoding, KfBundle, NativeCiphertext,
    PlainVariant, SumCiphertext, SumKey, BLOCK,
};
use crate::numerics::{FieldElement, PrimeField};
use crate::projective::{
    decrypt_a, decrypt_mod, encrypt_a, encrypt_mod, reduced_fraction, CipherPoint, CiphertextA,
    CiphertextMod, ModPoint, ProjectiveKey, ProjectiveParams,
};

/// The seven scheme identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeId {
    Projective,
    ProjectiveMod,
    Masked,
    MaskedNoise,
    NativeKf,
    NativeVerifier,
    NativeSums,
}

impl SchemeId {
    pub const ALL: [SchemeId; 7] = [
        SchemeId::Projective,
        SchemeId::ProjectiveMod,
        SchemeId::Masked,
        SchemeId::MaskedNoise,
        SchemeId::NativeKf,
        SchemeId::NativeVerifier,
        SchemeId::NativeSums,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Projective => "projective",
            SchemeId::ProjectiveMod => "projective-mod",
            SchemeId::Masked => "masked",
            SchemeId::MaskedNoise => "masked-noise",
            SchemeId::NativeKf => "native-kf",
            SchemeId::NativeVerifier => "native-verifier",
            SchemeId::NativeSums => "native-sums",
        }
    }

    /// Whether bundles carry compensation residues.
    pub fn needs_aux(self) -> bool {
        matches!(self, SchemeId::NativeKf | SchemeId::NativeVerifier)
    }

    pub fn is_modular(self) -> bool {
        self != SchemeId::Projective
    }

    pub fn is_native(self) -> bool {
        matches!(self, SchemeId::NativeKf | SchemeId::NativeVerifier | SchemeId::NativeSums)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::param("scheme", format!("unknown scheme {s:?}")))
    }
}

/// Everything the data owner holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OwnerKey {
    Projective(ProjectiveKey),
    ProjectiveMod(ProjectiveKey),
    Masked(MaskedKey),
    /// `noise` folds a random factor into each group's first compensation residue.
    NativeKf { key: ElGamalKey, encoding: Encoding, noise: Option<Noise> },
    NativeVerifier { key: ElGamalKey, encoding: Encoding },
    NativeSums { key: ElGamalKey, encoding: Encoding },
}

impl OwnerKey {
    pub fn scheme(&self) -> SchemeId {
        match self {
            OwnerKey::Projective(_) => SchemeId::Projective,
            OwnerKey::ProjectiveMod(_) => SchemeId::ProjectiveMod,
            OwnerKey::Masked(k) if k.noise().is_some() => SchemeId::MaskedNoise,
            OwnerKey::Masked(_) => SchemeId::Masked,
            OwnerKey::NativeKf { .. } => SchemeId::NativeKf,
            OwnerKey::NativeVerifier { .. } => SchemeId::NativeVerifier,
            OwnerKey::NativeSums { .. } => SchemeId::NativeSums,
        }
    }

    pub fn field(&self) -> Option<&PrimeField> {
        match self {
            OwnerKey::Projective(_) => None,
            OwnerKey::ProjectiveMod(k) => k.field(),
            OwnerKey::Masked(k) => Some(k.field()),
            OwnerKey::NativeKf { key, .. }
            | OwnerKey::NativeVerifier { key, .. }
            | OwnerKey::NativeSums { key, .. } => Some(key.field()),
        }
    }

    /// Public parameters a verifier needs.
    pub fn verifier_material(&self) -> VerifierMaterial {
        VerifierMaterial { scheme: self.scheme(), field: self.field().cloned() }
    }
}

/// Prime used when a modular key is generated without one.
pub const DEFAULT_PRIME: u64 = 100_043;

/// Key generation request; unset parts are drawn at random.
#[derive(Clone, Debug)]
pub struct KeySpec {
    pub scheme: SchemeId,
    pub p: Option<BigUint>,
    pub g: Option<BigUint>,
    pub x: Option<BigUint>,
    pub projective: Option<ProjectiveParams>,
    pub alphabet: u32,
    /// Noise factors (masked-noise, or native-kf with noise).
    pub rv: Option<Vec<BigUint>>,
    pub encoding: Encoding,
}

impl KeySpec {
    pub fn new(scheme: SchemeId) -> Self {
        KeySpec {
            scheme,
            p: None,
            g: None,
            x: None,
            projective: None,
            alphabet: crate::projective::DEFAULT_ALPHABET,
            rv: None,
            encoding: Encoding::Offset,
        }
    }
}

/// Bound on randomly drawn projective coefficients.
const COEFF_RANGE: i64 = 1000;

/// Length of a generated masked-noise array.
const NOISE_LEN: usize = 8;

fn random_params(
    rng: &mut dyn RngCore,
    field: Option<&PrimeField>,
    alphabet: u32,
) -> Result<(ProjectiveParams, ProjectiveKey)> {
    use rand::Rng;
    for _ in 0..10_000 {
        let mut v = || rng.gen_range(-COEFF_RANGE..=COEFF_RANGE);
        let params = ProjectiveParams::new(v(), v(), v(), v(), v());
        let key = match field {
            Some(f) => ProjectiveKey::modular(params.clone(), f.clone(), alphabet),
            None => crate::projective::validate_key(params.clone(), alphabet, None),
        };
        if let Ok(k) = key {
            return Ok((params, k));
        }
    }
    Err(Error::param("key", "no valid projective key found; the prime may be too small for the alphabet"))
}

/// Whether `v·s` hits a singular symbol for some `s` in the alphabet.
fn noise_factor_is_singular(v: &FieldElement, params: &ProjectiveParams, field: &PrimeField, alphabet: u32) -> bool {
    let a = field.elem(&params.a);
    let base = &(&a * &field.elem(&params.x0)) + &(&field.elem(&params.b) * &field.elem(&params.y0));
    let av = &a * v;
    (0..alphabet).any(|s| (&base - &(&av * &field.elem_u64(u64::from(s)))).is_zero())
}

/// Builds an owner key, drawing the unset parts from `rng`.
pub fn generate_owner_key(spec: &KeySpec, rng: &mut dyn RngCore) -> Result<OwnerKey> {
    let field = || PrimeField::new(spec.p.clone().unwrap_or_else(|| DEFAULT_PRIME.into()));
    let projective = |field: Option<&PrimeField>, rng: &mut dyn RngCore| -> Result<ProjectiveKey> {
        match (&spec.projective, field) {
            (Some(p), Some(f)) => ProjectiveKey::modular(p.clone(), f.clone(), spec.alphabet),
            (Some(p), None) => crate::projective::validate_key(p.clone(), spec.alphabet, None),
            (None, f) => Ok(random_params(rng, f, spec.alphabet)?.1),
        }
    };
    let elgamal = |field: PrimeField, rng: &mut dyn RngCore| -> Result<ElGamalKey> {
        let g = match &spec.g {
            Some(g) => g.clone(),
            None => crate::elgamal::find_generator(&field)?,
        };
        match &spec.x {
            Some(x) => ElGamalKey::new(field, g, x.clone()),
            None => ElGamalKey::generate(field, g, rng),
        }
    };
    let native_field = || -> Result<PrimeField> {
        let f = field()?;
        if f.modulus() <= &BigUint::from(256u32) {
            return Err(Error::param("prime", "native schemes need p > 256 to encode every byte"));
        }
        Ok(f)
    };
    Ok(match spec.scheme {
        SchemeId::Projective => OwnerKey::Projective(projective(None, rng)?),
        SchemeId::ProjectiveMod => {
            let f = field()?;
            OwnerKey::ProjectiveMod(projective(Some(&f), rng)?)
        }
        SchemeId::Masked | SchemeId::MaskedNoise => {
            let f = field()?;
            let proj = projective(Some(&f), rng)?;
            let eg = elgamal(f.clone(), rng)?;
            let rv = match (&spec.rv, spec.scheme) {
                (Some(_), SchemeId::Masked) => {
                    return Err(Error::param("random array", "scheme masked takes no noise; use masked-noise"))
                }
                (Some(v), _) => Some(v.clone()),
                (None, SchemeId::MaskedNoise) => {
                    // skip factors that would send a byte onto a singular symbol
                    let mut picked = Vec::with_capacity(NOISE_LEN);
                    while picked.len() < NOISE_LEN {
                        let v = Noise::random(1, &f, rng)?.values()[0].clone();
                        if !noise_factor_is_singular(&v, proj.params(), &f, spec.alphabet) {
                            picked.push(v.value().clone());
                        }
                    }
                    Some(picked)
                }
                (None, _) => None,
            };
            OwnerKey::Masked(crate::masked::masked_keygen(
                f,
                eg.g().value().clone(),
                eg.x().clone(),
                proj.params().clone(),
                spec.alphabet,
                rv.as_deref(),
            )?)
        }
        SchemeId::NativeKf => {
            let key = elgamal(native_field()?, rng)?;
            let noise = spec.rv.as_deref().map(|v| Noise::new(v, key.field())).transpose()?;
            OwnerKey::NativeKf { key, encoding: spec.encoding, noise }
        }
        SchemeId::NativeVerifier | SchemeId::NativeSums if spec.rv.is_some() => {
            return Err(Error::param(
                "random array",
                format!("scheme {} takes no owner-side noise", spec.scheme),
            ))
        }
        SchemeId::NativeVerifier => OwnerKey::NativeVerifier { key: elgamal(native_field()?, rng)?, encoding: spec.encoding },
        SchemeId::NativeSums => OwnerKey::NativeSums { key: elgamal(native_field()?, rng)?, encoding: spec.encoding },
    })
}

/// What a verifier holds: the scheme and, for modular schemes, p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifierMaterial {
    pub scheme: SchemeId,
    pub field: Option<PrimeField>,
}

/// Scheme-specific ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Projective(CiphertextA),
    ProjectiveMod(CiphertextMod),
    Masked(MaskedCiphertext),
    Native(NativeCiphertext),
    Sums(SumCiphertext),
}

impl Payload {
    /// Listing in the scheme's text form.
    pub fn to_text(&self) -> String {
        match self {
            Payload::Projective(ct) => ct.to_string(),
            Payload::ProjectiveMod(ct) => ct.to_string(),
            Payload::Masked(ct) => ct.to_string(),
            Payload::Native(ct) => ct.to_string(),
            Payload::Sums(ct) => ct.to_string(),
        }
    }
}

/// Ciphertext, feature digest and auxiliary residues for one message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationBundle {
    pub scheme: SchemeId,
    pub field: Option<PrimeField>,
    pub ciphertext: Payload,
    pub hfv: Hfv,
    pub aux: Option<KfBundle>,
}

/// Outcome of a check on a well-formed bundle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent(String),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent)
    }
}

/// Randomness and optional pinned values used while preparing a bundle.
pub struct OwnerInputs<'a> {
    pub exponents: &'a mut dyn ExponentSource,
    pub rng: &'a mut dyn RngCore,
    /// Common factors per group, cycled; drawn from `rng` when absent.
    pub kfs: Option<&'a [BigUint]>,
    /// Block keys for equalize-sums; generated from `rng` when absent.
    pub sum_keys: Option<&'a [SumKey]>,
    /// The verifier's random array (verifier-random scheme only).
    pub verifier_rv: Option<&'a Noise>,
}

impl<'a> OwnerInputs<'a> {
    pub fn new(exponents: &'a mut dyn ExponentSource, rng: &'a mut dyn RngCore) -> Self {
        OwnerInputs { exponents, rng, kfs: None, sum_keys: None, verifier_rv: None }
    }
}

/// Encrypts with fresh randomness drawn from `rng`.
pub fn owner_prepare_random(plaintext: &[u8], key: &OwnerKey, rng: &mut dyn RngCore, verifier_rv: Option<&Noise>) -> Result<VerificationBundle> {
    use rand::SeedableRng;
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let mut exps = RandomExponents::new(rand::rngs::StdRng::from_seed(seed));
    let mut inputs = OwnerInputs::new(&mut exps, rng);
    inputs.verifier_rv = verifier_rv;
    owner_prepare(plaintext, key, &mut inputs)
}

fn require_rv(scheme: SchemeId, rv: Option<&Noise>) -> Result<&Noise> {
    rv.ok_or_else(|| Error::param("random array", format!("scheme {scheme} needs the verifier's random array")))
}

/// Plaintext-side cross-ratios for the owner's scheme.
pub fn plain_crs(plaintext: &[u8], key: &OwnerKey, verifier_rv: Option<&Noise>) -> Result<CrossRatioSeq> {
    Ok(match key {
        OwnerKey::Projective(_) => line_crs(plaintext),
        OwnerKey::ProjectiveMod(k) => {
            line_crs_mod(plaintext, k.field().ok_or_else(|| Error::param("key", "missing p"))?)
        }
        OwnerKey::Masked(k) => masked_crs_plain(plaintext, k.field(), k.noise()),
        OwnerKey::NativeKf { key, encoding, noise } => {
            let values = encode(plaintext, *encoding, key.field())?;
            let variant = noise.as_ref().map_or(PlainVariant::Plain, PlainVariant::BundleNoise);
            native_crs_plain(&values, key.field(), variant)
        }
        OwnerKey::NativeVerifier { key, encoding } => {
            let rv = require_rv(SchemeId::NativeVerifier, verifier_rv)?;
            let values = encode(plaintext, *encoding, key.field())?;
            native_crs_plain(&values, key.field(), PlainVariant::VerifierRandom(rv))
        }
        OwnerKey::NativeSums { key, encoding } => sum_crs_plain(plaintext, *encoding, key.field())?,
    })
}

/// Encrypts and attaches the plaintext feature value.
pub fn owner_prepare(plaintext: &[u8], key: &OwnerKey, inputs: &mut OwnerInputs<'_>) -> Result<VerificationBundle> {
    let scheme = key.scheme();
    let crs = plain_crs(plaintext, key, inputs.verifier_rv)?;
    let (ciphertext, aux) = match key {
        OwnerKey::Projective(k) => (Payload::Projective(encrypt_a(plaintext, k)?), None),
        OwnerKey::ProjectiveMod(k) => (Payload::ProjectiveMod(encrypt_mod(plaintext, k)?), None),
        OwnerKey::Masked(k) => (Payload::Masked(masked_encrypt(plaintext, k, inputs.exponents)?), None),
        OwnerKey::NativeKf { key, encoding, noise } => {
            let (ct, b) = native_with_bundle(plaintext, key, *encoding, noise.as_ref(), inputs)?;
            (Payload::Native(ct), Some(b))
        }
        OwnerKey::NativeVerifier { key, encoding } => {
            let (ct, b) = native_with_bundle(plaintext, key, *encoding, None, inputs)?;
            (Payload::Native(ct), Some(b))
        }
        OwnerKey::NativeSums { key, encoding } => {
            let blocks = plaintext.len().div_ceil(BLOCK).max(1);
            let generated;
            let keys = match inputs.sum_keys {
                Some(k) if !k.is_empty() => k,
                _ => {
                    generated = (0..blocks)
                        .map(|_| SumKey::generate(key.field(), inputs.rng))
                        .collect::<Result<Vec<_>>>()?;
                    &generated[..]
                }
            };
            (Payload::Sums(sum_encrypt(plaintext, key, keys, *encoding)?), None)
        }
    };
    Ok(VerificationBundle { scheme, field: key.field().cloned(), ciphertext, hfv: hfv(&crs), aux })
}

fn native_with_bundle(
    plaintext: &[u8],
    key: &ElGamalKey,
    encoding: Encoding,
    noise: Option<&Noise>,
    inputs: &mut OwnerInputs<'_>,
) -> Result<(NativeCiphertext, KfBundle)> {
    let enc = eg_encrypt(plaintext, key, encoding, inputs.exponents)?;
    let groups = plaintext.len() / GROUP;
    let kfs: Vec<BigUint> = match inputs.kfs {
        Some(fixed) if !fixed.is_empty() => (0..groups).map(|n| fixed[n % fixed.len()].clone()).collect(),
        _ => random_kfs(groups, key.field(), inputs.rng),
    };
    let bundle = kf_bundles(&enc.exponents, &kfs, key.y(), noise)?;
    Ok((enc.ciphertext, bundle))
}

/// Ciphertext-side cross-ratios from public material only.
pub fn cipher_crs(bundle: &VerificationBundle, verifier_rv: Option<&Noise>) -> Result<CrossRatioSeq> {
    let no_aux = || Error::MalformedBundle(format!("scheme {} needs compensation residues", bundle.scheme));
    match (&bundle.ciphertext, bundle.scheme) {
        (Payload::Projective(ct), SchemeId::Projective) => Ok(planar_crs(&ct.0)),
        (Payload::ProjectiveMod(ct), SchemeId::ProjectiveMod) => Ok(planar_crs_mod(&ct.points, &ct.field)),
        (Payload::Masked(ct), SchemeId::Masked | SchemeId::MaskedNoise) => Ok(masked_crs_cipher(ct)),
        (Payload::Native(ct), SchemeId::NativeKf) => {
            native_crs_cipher(ct, bundle.aux.as_ref().ok_or_else(no_aux)?, None)
        }
        (Payload::Native(ct), SchemeId::NativeVerifier) => {
            let rv = require_rv(SchemeId::NativeVerifier, verifier_rv)?;
            native_crs_cipher(ct, bundle.aux.as_ref().ok_or_else(no_aux)?, Some(rv))
        }
        (Payload::Sums(ct), SchemeId::NativeSums) => sum_crs(&ct.inner.c2),
        (_, scheme) => Err(Error::MalformedBundle(format!("ciphertext does not match scheme {scheme}"))),
    }
}

fn check_with(bundle: &VerificationBundle, material: &VerifierMaterial, rv: Option<&Noise>) -> Result<Verdict> {
    if bundle.scheme != material.scheme {
        return Err(Error::SchemeMismatch {
            expected: material.scheme.to_string(),
            found: bundle.scheme.to_string(),
        });
    }
    if material.field.is_some() && bundle.field != material.field {
        return Ok(Verdict::Inconsistent("bundle prime differs from the verifier's".into()));
    }
    let seq = match cipher_crs(bundle, rv) {
        Ok(seq) => seq,
        Err(Error::InconsistentBundle(detail)) => return Ok(Verdict::Inconsistent(detail)),
        Err(e) => return Err(e),
    };
    let computed = hfv(&seq);
    if computed == bundle.hfv {
        Ok(Verdict::Consistent)
    } else {
        Ok(Verdict::Inconsistent(format!("ciphertext HFV {computed} differs from claimed {}", bundle.hfv)))
    }
}

/// Recomputes the ciphertext feature value and compares it with the claim.
/// The verifier-random scheme must go through a [`VerifierSession`].
pub fn verifier_check(bundle: &VerificationBundle, material: &VerifierMaterial) -> Result<Verdict> {
    if material.scheme == SchemeId::NativeVerifier {
        return Err(Error::param("verifier", "scheme native-verifier is checked through a verifier session"));
    }
    check_with(bundle, material, None)
}

/// Verifier-held random array for one bundle.
#[derive(Debug)]
pub struct VerifierSession {
    rv: Noise,
    consumed: bool,
}

impl VerifierSession {
    /// Draws a fresh array of `len` nonzero residues.
    pub fn new(len: usize, field: &PrimeField, rng: &mut dyn RngCore) -> Result<Self> {
        Ok(Self::from_rv(crate::native::verifier_random_array(len, field, rng)?))
    }

    pub fn from_rv(rv: Noise) -> Self {
        VerifierSession { rv, consumed: false }
    }

    /// The array handed to the owner.
    pub fn rv_for_owner(&self) -> &Noise {
        &self.rv
    }

    /// Checks one bundle; a session cannot be used twice.
    pub fn check(&mut self, bundle: &VerificationBundle, material: &VerifierMaterial) -> Result<Verdict> {
        if self.consumed {
            return Err(Error::SessionReplay);
        }
        self.consumed = true;
        check_with(bundle, material, Some(&self.rv))
    }
}

/// Decrypts a bundle's ciphertext with the owner key.
pub fn decrypt_bundle(bundle: &VerificationBundle, key: &OwnerKey) -> Result<Vec<u8>> {
    if bundle.scheme != key.scheme() {
        return Err(Error::SchemeMismatch { expected: key.scheme().to_string(), found: bundle.scheme.to_string() });
    }
    match (&bundle.ciphertext, key) {
        (Payload::Projective(ct), OwnerKey::Projective(k)) => decrypt_a(ct, &k.center()),
        (Payload::ProjectiveMod(ct), OwnerKey::ProjectiveMod(k)) => decrypt_mod(ct, &k.center()),
        (Payload::Masked(ct), OwnerKey::Masked(k)) => masked_decrypt(ct, k),
        (Payload::Native(ct), OwnerKey::NativeKf { key, encoding, .. })
        | (Payload::Native(ct), OwnerKey::NativeVerifier { key, encoding }) => eg_decrypt(ct, key, *encoding),
        (Payload::Sums(ct), OwnerKey::NativeSums { key, encoding }) => sum_decrypt(ct, key, *encoding),
        _ => Err(Error::MalformedBundle("ciphertext does not match the key's scheme".into())),
    }
}

/// 16-byte header of the binary bundle format.
pub const MAGIC: [u8; 16] = *b"FHTBUNDLE\x01\0\0\0\0\0\0";

type Arrays = BTreeMap<String, Vec<BigInt>>;

fn residues_to_ints<'a>(v: impl IntoIterator<Item = &'a FieldElement>) -> Vec<BigInt> {
    v.into_iter().map(|e| BigInt::from(e.value().clone())).collect()
}

fn points_to_ints(points: &[ModPoint]) -> Vec<BigInt> {
    residues_to_ints(points.iter().flat_map(|p| [&p.x, &p.y]))
}

impl VerificationBundle {
    fn arrays(&self) -> Arrays {
        let mut a = Arrays::new();
        match &self.ciphertext {
            Payload::Projective(ct) => {
                let flat = ct
                    .0
                    .iter()
                    .flat_map(|p| [p.x.numer(), p.x.denom(), p.y.numer(), p.y.denom()].map(Clone::clone))
                    .collect();
                a.insert("points".into(), flat);
            }
            Payload::ProjectiveMod(ct) => {
                a.insert("points".into(), points_to_ints(&ct.points));
            }
            Payload::Masked(ct) => {
                a.insert("c1".into(), residues_to_ints(ct.groups.iter().map(|g| &g.c1)));
                let pts: Vec<ModPoint> = ct.points().cloned().collect();
                a.insert("points".into(), points_to_ints(&pts));
            }
            Payload::Native(ct) => {
                a.insert("c2".into(), residues_to_ints(&ct.c2));
                a.insert("c1".into(), residues_to_ints(&ct.c1));
            }
            Payload::Sums(ct) => {
                a.insert("c2".into(), residues_to_ints(&ct.inner.c2));
                a.insert("c1".into(), residues_to_ints(&ct.inner.c1));
                a.insert("length".into(), vec![BigInt::from(ct.length)]);
            }
        }
        if let Some(aux) = &self.aux {
            a.insert("kf".into(), residues_to_ints(aux.groups.iter().flatten()));
        }
        a
    }

    fn from_parts(scheme: SchemeId, p: Option<BigUint>, hfv: Hfv, mut arrays: Arrays) -> Result<Self> {
        let bad = |m: String| Error::MalformedBundle(m);
        let field = match (scheme.is_modular(), p) {
            (true, Some(p)) => Some(PrimeField::new(p).map_err(|e| bad(e.to_string()))?),
            (false, None) => None,
            (true, None) => return Err(bad(format!("scheme {scheme} needs p"))),
            (false, Some(_)) => return Err(bad(format!("scheme {scheme} takes no p"))),
        };
        let mut take = |name: &str| arrays.remove(name).ok_or_else(|| bad(format!("missing array {name:?}")));
        let ciphertext = match scheme {
            SchemeId::Projective => {
                let flat = take("points")?;
                if flat.len() % 4 != 0 {
                    return Err(bad("projective points need 4 integers each".into()));
                }
                let pts = flat
                    .chunks(4)
                    .enumerate()
                    .map(|(i, c)| {
                        Ok(CipherPoint { x: reduced_fraction(&c[0], &c[1], i)?, y: reduced_fraction(&c[2], &c[3], i)? })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| bad(e.to_string()))?;
                Payload::Projective(CiphertextA(pts))
            }
            _ => {
                let field = field.as_ref().expect("modular scheme");
                match scheme {
                    SchemeId::ProjectiveMod => {
                        let points = to_points(&take("points")?, field)?;
                        Payload::ProjectiveMod(CiphertextMod { field: field.clone(), points })
                    }
                    SchemeId::Masked | SchemeId::MaskedNoise => {
                        let c1 = to_residues(&take("c1")?, field)?;
                        let points = to_points(&take("points")?, field)?;
                        if c1.len() != points.len().div_ceil(GROUP) || c1.iter().any(FieldElement::is_zero) {
                            return Err(bad("one nonzero c1 per group of four points is required".into()));
                        }
                        let groups = points
                            .chunks(GROUP)
                            .zip(c1)
                            .map(|(p, c1)| MaskedGroup { c1, points: p.to_vec() })
                            .collect();
                        Payload::Masked(MaskedCiphertext {
                            field: field.clone(),
                            noised: scheme == SchemeId::MaskedNoise,
                            groups,
                        })
                    }
                    SchemeId::NativeKf | SchemeId::NativeVerifier => {
                        let ct = native_from(&take("c2")?, &take("c1")?, field)?;
                        Payload::Native(ct)
                    }
                    SchemeId::NativeSums => {
                        let inner = native_from(&take("c2")?, &take("c1")?, field)?;
                        let length = match take("length")?.as_slice() {
                            [n] => n.to_usize().ok_or_else(|| bad("bad length".into()))?,
                            _ => return Err(bad("length array must hold one value".into())),
                        };
                        let text = SumCiphertext { inner, length }.to_string();
                        Payload::Sums(SumCiphertext::parse(&text, field).map_err(|e| bad(e.to_string()))?)
                    }
                    SchemeId::Projective => unreachable!("handled above"),
                }
            }
        };
        let aux = if scheme.needs_aux() {
            let field = field.as_ref().expect("native schemes are modular");
            let flat = to_residues(&take("kf")?, field)?;
            if flat.len() % 4 != 0 {
                return Err(bad("compensation residues come in groups of four".into()));
            }
            let groups = flat.chunks(4).map(|c| [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()]).collect();
            Some(KfBundle { groups })
        } else {
            None
        };
        if let Some(extra) = arrays.keys().next() {
            return Err(bad(format!("unexpected array {extra:?} for scheme {scheme}")));
        }
        Ok(VerificationBundle { scheme, field, ciphertext, hfv, aux })
    }

    /// Canonical binary encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        let id = self.scheme.as_str().as_bytes();
        out.extend((id.len() as u16).to_be_bytes());
        out.extend(id);
        let p = self.field.as_ref().map(|f| f.modulus().to_bytes_be()).unwrap_or_default();
        out.extend((p.len() as u32).to_be_bytes());
        out.extend(&p);
        out.extend(self.hfv.as_bytes());
        let arrays = self.arrays();
        out.extend((arrays.len() as u32).to_be_bytes());
        for (name, values) in &arrays {
            out.extend((name.len() as u16).to_be_bytes());
            out.extend(name.as_bytes());
            out.extend((values.len() as u32).to_be_bytes());
            for v in values {
                let b = v.to_signed_bytes_be();
                out.extend((b.len() as u32).to_be_bytes());
                out.extend(b);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(Error::MalformedBundle("bad magic header".into()));
        }
        let id_len = r.u16()? as usize;
        let id = std::str::from_utf8(r.take(id_len)?).map_err(|_| Error::MalformedBundle("scheme id is not UTF-8".into()))?;
        let scheme: SchemeId = id.parse().map_err(|_| Error::MalformedBundle(format!("unknown scheme {id:?}")))?;
        let p_len = r.u32()? as usize;
        let p = (p_len > 0).then(|| r.take(p_len).map(BigUint::from_bytes_be)).transpose()?;
        let hfv = Hfv(r.take(32)?.try_into().expect("32 bytes"));
        let count = r.u32()?;
        let mut arrays = Arrays::new();
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::MalformedBundle("array name is not UTF-8".into()))?
                .to_string();
            let n = r.u32()? as usize;
            let mut values = Vec::with_capacity(n.min(1 << 20));
            for _ in 0..n {
                let len = r.u32()? as usize;
                values.push(BigInt::from_signed_bytes_be(r.take(len)?));
            }
            if arrays.insert(name.clone(), values).is_some() {
                return Err(Error::MalformedBundle(format!("duplicate array {name:?}")));
            }
        }
        if r.pos != bytes.len() {
            return Err(Error::MalformedBundle("trailing bytes".into()));
        }
        Self::from_parts(scheme, p, hfv, arrays)
    }

    /// JSON twin of the binary form, integers as decimal strings.
    pub fn to_json(&self) -> String {
        let doc = BundleJson {
            scheme: self.scheme.to_string(),
            p: self.field.as_ref().map(|f| f.modulus().to_string()),
            hfv: self.hfv.to_string(),
            arrays: self
                .arrays()
                .into_iter()
                .map(|(k, v)| (k, v.iter().map(ToString::to_string).collect()))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let bad = |m: String| Error::MalformedBundle(m);
        let doc: BundleJson = serde_json::from_str(s).map_err(|e| bad(e.to_string()))?;
        let scheme: SchemeId = doc.scheme.parse().map_err(|_| bad(format!("unknown scheme {:?}", doc.scheme)))?;
        let p = doc.p.map(|p| p.parse::<BigUint>().map_err(|_| bad(format!("bad p {p:?}")))).transpose()?;
        let hfv: Hfv = doc.hfv.parse().map_err(|_| bad("bad hfv".into()))?;
        let arrays = doc
            .arrays
            .into_iter()
            .map(|(k, v)| {
                let ints = v
                    .iter()
                    .map(|s| s.parse::<BigInt>().map_err(|_| bad(format!("bad integer {s:?} in {k:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok((k, ints))
            })
            .collect::<Result<Arrays>>()?;
        Self::from_parts(scheme, p, hfv, arrays)
    }

    /// Reads either form, detected by the magic header.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(&MAGIC[..9]) {
            Self::from_bytes(bytes)
        } else {
            let text = std::str::from_utf8(bytes).map_err(|_| Error::MalformedBundle("neither binary nor JSON".into()))?;
            Self::from_json(text)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleJson {
    scheme: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    p: Option<String>,
    hfv: String,
    arrays: BTreeMap<String, Vec<String>>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::MalformedBundle("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

fn to_residues(v: &[BigInt], field: &PrimeField) -> Result<Vec<FieldElement>> {
    let p = BigInt::from(field.modulus().clone());
    v.iter()
        .map(|n| {
            if n.sign() == Sign::Minus || n >= &p {
                Err(Error::MalformedBundle(format!("{n} is not a residue mod p")))
            } else {
                Ok(field.elem(n))
            }
        })
        .collect()
}

fn to_points(v: &[BigInt], field: &PrimeField) -> Result<Vec<ModPoint>> {
    if !v.len().is_multiple_of(2) {
        return Err(Error::MalformedBundle("point coordinates come in pairs".into()));
    }
    let r = to_residues(v, field)?;
    Ok(r.chunks(2).map(|c| ModPoint { x: c[0].clone(), y: c[1].clone() }).collect())
}

fn native_from(c2: &[BigInt], c1: &[BigInt], field: &PrimeField) -> Result<NativeCiphertext> {
    let c2 = to_residues(c2, field)?;
    let c1 = to_residues(c1, field)?;
    if c1.len() != c2.len() || c1.iter().any(FieldElement::is_zero) {
        return Err(Error::MalformedBundle("c1 and c2 must pair up and c1 must be nonzero".into()));
    }
    Ok(NativeCiphertext { field: field.clone(), c2, c1 })
}

/// Key file: scheme id plus owner and verifier sections, integers as decimal strings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeyFile {
    pub scheme: String,
    pub owner: OwnerSection,
    pub verifier: VerifierSection,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnerSection {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<String>,
    /// Derived from g and x; checked when present.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alphabet: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rv: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub encoding: Option<String>,
}

/// Only p, plus the verifier's own random array in the verifier-random scheme.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifierSection {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rv: Option<Vec<String>>,
}

fn dec<T: ToString>(v: &T) -> String {
    v.to_string()
}

fn int(field: &Option<String>, name: &str) -> Result<BigInt> {
    let s = field.as_ref().ok_or_else(|| Error::MalformedKeyFile(format!("missing {name}")))?;
    s.parse().map_err(|_| Error::MalformedKeyFile(format!("{name} is not an integer: {s:?}")))
}

fn uint(field: &Option<String>, name: &str) -> Result<BigUint> {
    int(field, name)?.to_biguint().ok_or_else(|| Error::MalformedKeyFile(format!("{name} must be non-negative")))
}

fn uints(v: &[String], name: &str) -> Result<Vec<BigUint>> {
    v.iter().map(|s| uint(&Some(s.clone()), name)).collect()
}

impl KeyFile {
    /// Serializes an owner key; `verifier_rv` is recorded for the verifier-random scheme.
    pub fn from_owner(key: &OwnerKey, verifier_rv: Option<&Noise>) -> Self {
        let mut owner = OwnerSection::default();
        let put_projective = |owner: &mut OwnerSection, k: &ProjectiveKey| {
            let p = k.params();
            owner.x0 = Some(dec(&p.x0));
            owner.y0 = Some(dec(&p.y0));
            owner.a = Some(dec(&p.a));
            owner.b = Some(dec(&p.b));
            owner.c = Some(dec(&p.c));
            owner.alphabet = Some(k.alphabet());
        };
        let put_elgamal = |owner: &mut OwnerSection, k: &ElGamalKey| {
            owner.p = Some(dec(k.field().modulus()));
            owner.g = Some(dec(k.g()));
            owner.x = Some(dec(k.x()));
            owner.y = Some(dec(k.y()));
        };
        let rv_strings = |n: &Noise| n.values().iter().map(dec).collect::<Vec<_>>();
        match key {
            OwnerKey::Projective(k) => put_projective(&mut owner, k),
            OwnerKey::ProjectiveMod(k) => {
                put_projective(&mut owner, k);
                owner.p = k.field().map(|f| dec(f.modulus()));
            }
            OwnerKey::Masked(k) => {
                put_projective(&mut owner, k.projective());
                put_elgamal(&mut owner, k.elgamal());
                owner.rv = k.noise().map(rv_strings);
            }
            OwnerKey::NativeKf { key, encoding, noise } => {
                put_elgamal(&mut owner, key);
                owner.encoding = Some(encoding.name().into());
                owner.rv = noise.as_ref().map(rv_strings);
            }
            OwnerKey::NativeVerifier { key, encoding } | OwnerKey::NativeSums { key, encoding } => {
                put_elgamal(&mut owner, key);
                owner.encoding = Some(encoding.name().into());
            }
        }
        let verifier = VerifierSection {
            p: key.field().map(|f| dec(f.modulus())),
            rv: match key.scheme() {
                SchemeId::NativeVerifier => verifier_rv.map(rv_strings),
                _ => None,
            },
        };
        KeyFile { scheme: key.scheme().to_string(), owner, verifier }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let kf: KeyFile = serde_json::from_str(s).map_err(|e| Error::MalformedKeyFile(e.to_string()))?;
        let scheme = kf.scheme_id()?;
        if kf.verifier.rv.is_some() && scheme != SchemeId::NativeVerifier {
            return Err(Error::MalformedKeyFile(format!(
                "verifier section of scheme {scheme} must not carry a random array"
            )));
        }
        Ok(kf)
    }

    pub fn scheme_id(&self) -> Result<SchemeId> {
        self.scheme.parse().map_err(|_| Error::MalformedKeyFile(format!("unknown scheme {:?}", self.scheme)))
    }

    fn field(&self, p: &Option<String>) -> Result<PrimeField> {
        PrimeField::new(uint(p, "p")?)
    }

    fn projective_params(&self) -> Result<ProjectiveParams> {
        let o = &self.owner;
        Ok(ProjectiveParams {
            x0: int(&o.x0, "x0")?,
            y0: int(&o.y0, "y0")?,
            a: int(&o.a, "a")?,
            b: int(&o.b, "b")?,
            c: int(&o.c, "c")?,
        })
    }

    fn elgamal(&self) -> Result<ElGamalKey> {
        let o = &self.owner;
        let key = ElGamalKey::new(self.field(&o.p)?, uint(&o.g, "g")?, uint(&o.x, "x")?)?;
        if let Some(y) = &o.y {
            if &key.y().to_string() != y {
                return Err(Error::MalformedKeyFile(format!("y = {y} does not equal g^x mod p")));
            }
        }
        Ok(key)
    }

    fn encoding(&self) -> Result<Encoding> {
        self.owner.encoding.as_deref().map_or(Ok(Encoding::Offset), Encoding::parse)
    }

    /// Rebuilds and validates the owner key.
    pub fn owner_key(&self) -> Result<OwnerKey> {
        let o = &self.owner;
        let alphabet = o.alphabet.unwrap_or(crate::projective::DEFAULT_ALPHABET);
        let rv = o.rv.as_deref().map(|v| uints(v, "rv")).transpose()?;
        Ok(match self.scheme_id()? {
            SchemeId::Projective => {
                OwnerKey::Projective(crate::projective::validate_key(self.projective_params()?, alphabet, None)?)
            }
            SchemeId::ProjectiveMod => {
                OwnerKey::ProjectiveMod(ProjectiveKey::modular(self.projective_params()?, self.field(&o.p)?, alphabet)?)
            }
            scheme @ (SchemeId::Masked | SchemeId::MaskedNoise) => {
                if rv.is_some() != (scheme == SchemeId::MaskedNoise) {
                    return Err(Error::MalformedKeyFile(format!("scheme {scheme} and the presence of rv disagree")));
                }
                let eg = self.elgamal()?;
                OwnerKey::Masked(crate::masked::masked_keygen(
                    eg.field().clone(),
                    eg.g().value().clone(),
                    eg.x().clone(),
                    self.projective_params()?,
                    alphabet,
                    rv.as_deref(),
                )?)
            }
            SchemeId::NativeKf => {
                let key = self.elgamal()?;
                let noise = rv.as_deref().map(|v| Noise::new(v, key.field())).transpose()?;
                OwnerKey::NativeKf { key, encoding: self.encoding()?, noise }
            }
            SchemeId::NativeVerifier => OwnerKey::NativeVerifier { key: self.elgamal()?, encoding: self.encoding()? },
            SchemeId::NativeSums => OwnerKey::NativeSums { key: self.elgamal()?, encoding: self.encoding()? },
        })
    }

    /// Verifier material from the verifier section alone.
    pub fn verifier_material(&self) -> Result<VerifierMaterial> {
        let scheme = self.scheme_id()?;
        let field = match (&self.verifier.p, scheme.is_modular()) {
            (Some(_), _) => Some(self.field(&self.verifier.p)?),
            (None, false) => None,
            (None, true) => return Err(Error::MalformedKeyFile(format!("verifier section of {scheme} needs p"))),
        };
        Ok(VerifierMaterial { scheme, field })
    }

    /// The verifier's random array, if recorded.
    pub fn verifier_rv(&self) -> Result<Option<Noise>> {
        let Some(v) = &self.verifier.rv else { return Ok(None) };
        let field = self.field(&self.verifier.p)?;
        Ok(Some(Noise::new(&uints(v, "rv")?, &field)?))
    }
}
