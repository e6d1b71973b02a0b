//! Plain ElGamal on symbol values with auxiliary keys that let a verifier
//! compute the plaintext cross-ratio from `c2` alone.
//!
//! Each `c2_i = m_i·y^{r_i}` carries its own mask, so the six pairwise
//! products of a group carry different powers of `y`. The owner publishes
//! `K_i = y^{kf_i}` per group, which lifts every product to the same
//! `y^{kf}`; the common factor then cancels in the ratio. The equalize-sums
//! variant instead picks exponents so that column products of a 4×4 block
//! all carry `y^{rS}`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use rand::RngCore;

use crate::crossratio::{line_ratio_mod, ratio_from_terms, CrossRatioSeq, PairTerms, GROUP};
use crate::elgamal::{check_exponent_range, ElGamalKey, ExponentSource};
use crate::error::{Error, Result};
use crate::masked::Noise;
use crate::numerics::{FieldElement, PrimeField};
use crate::projective::parse_ints;

/// How bytes become nonzero ElGamal plaintexts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    /// `m = byte + 1`, so every byte is encryptable.
    #[default]
    Offset,
    /// `m = byte`; zero bytes are rejected.
    Raw,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Offset => "offset",
            Encoding::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "offset" => Ok(Encoding::Offset),
            "raw" => Ok(Encoding::Raw),
            other => Err(Error::param("encoding", format!("unknown encoding {other:?}"))),
        }
    }
}

/// Maps bytes to plaintext residues.
pub fn encode(bytes: &[u8], encoding: Encoding, field: &PrimeField) -> Result<Vec<FieldElement>> {
    if field.modulus() <= &BigUint::from(256u32) {
        return Err(Error::param("prime", "native schemes need p > 256"));
    }
    bytes
        .iter()
        .enumerate()
        .map(|(index, &b)| match encoding {
            Encoding::Offset => Ok(field.elem_u64(u64::from(b) + 1)),
            Encoding::Raw if b == 0 => Err(Error::ZeroPlaintext { index }),
            Encoding::Raw => Ok(field.elem_u64(u64::from(b))),
        })
        .collect()
}

/// Inverse of [`encode`].
pub fn decode(values: &[FieldElement], encoding: Encoding) -> Result<Vec<u8>> {
    values
        .iter()
        .enumerate()
        .map(|(index, v)| {
            let n = u64::try_from(v.value()).ok();
            let byte = match (encoding, n) {
                (Encoding::Offset, Some(n @ 1..=256)) => Some((n - 1) as u8),
                (Encoding::Raw, Some(n @ 1..=255)) => Some(n as u8),
                _ => None,
            };
            byte.ok_or_else(|| Error::CorruptCiphertext {
                index,
                detail: format!("decrypts to {v}, outside the {} byte range", encoding.name()),
            })
        })
        .collect()
}

/// `c2_i = m_i·y^{r_i}`, `c1_i = g^{r_i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NativeCiphertext {
    pub field: PrimeField,
    pub c2: Vec<FieldElement>,
    pub c1: Vec<FieldElement>,
}

impl NativeCiphertext {
    pub fn len(&self) -> usize {
        self.c2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c2.is_empty()
    }

    pub fn parse(s: &str, field: &PrimeField) -> Result<Self> {
        let (c2, c1) = s
            .split_once('/')
            .ok_or_else(|| Error::MalformedCiphertext("expected \"c2: ... / c1: ...\"".into()))?;
        let section = |part: &str, tag: &str| -> Result<Vec<FieldElement>> {
            let body = part
                .trim()
                .strip_prefix(tag)
                .ok_or_else(|| Error::MalformedCiphertext(format!("missing {tag:?}")))?;
            parse_residues(body, field)
        };
        let c2 = section(c2, "c2:")?;
        let c1 = section(c1, "c1:")?;
        let ct = NativeCiphertext { field: field.clone(), c2, c1 };
        ct.check()?;
        Ok(ct)
    }

    fn check(&self) -> Result<()> {
        if self.c1.len() != self.c2.len() {
            return Err(Error::MalformedCiphertext(format!(
                "{} c2 values but {} c1 values",
                self.c2.len(),
                self.c1.len()
            )));
        }
        if let Some(i) = self.c1.iter().position(FieldElement::is_zero) {
            return Err(Error::MalformedCiphertext(format!("c1 at index {i} is zero")));
        }
        Ok(())
    }
}

pub(crate) fn parse_residues(s: &str, field: &PrimeField) -> Result<Vec<FieldElement>> {
    let p = BigInt::from(field.modulus().clone());
    parse_ints(s)?
        .into_iter()
        .map(|n| {
            if n < BigInt::zero() || n >= p {
                Err(Error::MalformedCiphertext(format!("{n} is not a residue mod p")))
            } else {
                Ok(field.elem(&n))
            }
        })
        .collect()
}

fn join(v: &[FieldElement]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for NativeCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c2: {} / c1: {}", join(&self.c2), join(&self.c1))
    }
}

/// A ciphertext together with the exponents used; the owner needs the
/// exponents to build verification bundles.
#[derive(Clone, Debug)]
pub struct NativeEncryption {
    pub ciphertext: NativeCiphertext,
    pub exponents: Vec<BigUint>,
}

/// Encrypts already-encoded residues with the given per-symbol exponents.
pub fn eg_encrypt_values(
    values: &[FieldElement],
    key: &ElGamalKey,
    exponents: &[BigUint],
) -> Result<NativeCiphertext> {
    if values.len() != exponents.len() {
        return Err(Error::param("exponents", "one exponent per symbol is required"));
    }
    let field = key.field();
    let mut c2 = Vec::with_capacity(values.len());
    let mut c1 = Vec::with_capacity(values.len());
    for (index, (m, r)) in values.iter().zip(exponents).enumerate() {
        if m.field() != field {
            return Err(Error::FieldMismatch);
        }
        if m.is_zero() {
            return Err(Error::ZeroPlaintext { index });
        }
        check_exponent_range(r, field)?;
        c2.push(m * &key.y().pow(r));
        c1.push(key.g().pow(r));
    }
    Ok(NativeCiphertext { field: field.clone(), c2, c1 })
}

pub fn eg_encrypt(
    bytes: &[u8],
    key: &ElGamalKey,
    encoding: Encoding,
    source: &mut dyn ExponentSource,
) -> Result<NativeEncryption> {
    let values = encode(bytes, encoding, key.field())?;
    let exponents = (0..values.len())
        .map(|_| source.next_exponent(key.field()))
        .collect::<Result<Vec<_>>>()?;
    let ciphertext = eg_encrypt_values(&values, key, &exponents)?;
    Ok(NativeEncryption { ciphertext, exponents })
}

/// `c2·c1^{-x}` per symbol.
pub fn eg_decrypt_values(ct: &NativeCiphertext, key: &ElGamalKey) -> Result<Vec<FieldElement>> {
    ct.check()?;
    if &ct.field != key.field() {
        return Err(Error::FieldMismatch);
    }
    ct.c2
        .iter()
        .zip(&ct.c1)
        .map(|(c2, c1)| Ok(c2 * &key.shared_secret(c1).inv()?))
        .collect()
}

pub fn eg_decrypt(ct: &NativeCiphertext, key: &ElGamalKey, encoding: Encoding) -> Result<Vec<u8>> {
    decode(&eg_decrypt_values(ct, key)?, encoding)
}

/// The four residues `y^{kf_1..4}` that compensate one group.
pub type GroupBundle = [FieldElement; 4];

/// Per-group compensation residues for every full group of a ciphertext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KfBundle {
    pub groups: Vec<GroupBundle>,
}

impl KfBundle {
    /// `K1 K2 K3 K4 | K1 K2 K3 K4 | ...`
    pub fn parse(s: &str, field: &PrimeField) -> Result<Self> {
        let groups = crate::projective::split_groups(s)
            .map(|g| {
                let v = parse_residues(g, field)?;
                <[FieldElement; 4]>::try_from(v)
                    .map_err(|_| Error::MalformedBundle("each group needs four residues".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KfBundle { groups })
    }
}

impl fmt::Display for KfBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.groups.iter().map(|g| join(g)).collect();
        f.write_str(&parts.join(" | "))
    }
}

/// `kf − r_i − r_j` reduced mod `p − 1`.
fn exponent(kf: &BigUint, subtract: &[&BigUint], field: &PrimeField) -> BigUint {
    let order = BigInt::from(field.group_order());
    let mut e = BigInt::from(kf.clone());
    for r in subtract {
        e -= BigInt::from((*r).clone());
    }
    e.mod_floor(&order).to_biguint().expect("non-negative after mod_floor")
}

/// The four compensation exponents of a group:
/// `kf − r1 − r2`, `kf − r3 − r4`, `kf − r1 − r4`, `kf − r1 − r3` (mod p − 1).
pub fn kf_exponents(r: [&BigUint; 4], kf: &BigUint, field: &PrimeField) -> [BigUint; 4] {
    let [r1, r2, r3, r4] = r;
    [
        exponent(kf, &[r1, r2], field),
        exponent(kf, &[r3, r4], field),
        exponent(kf, &[r1, r4], field),
        exponent(kf, &[r1, r3], field),
    ]
}

/// `K_i = y^{kf_i}`; with `rv`, `K1` is pre-multiplied by it.
pub fn kf_bundle(r: [&BigUint; 4], kf: &BigUint, y: &FieldElement, rv: Option<&FieldElement>) -> GroupBundle {
    let [e1, e2, e3, e4] = kf_exponents(r, kf, y.field());
    let k1 = y.pow(&e1);
    let k1 = match rv {
        Some(rv) => &k1 * rv,
        None => k1,
    };
    [k1, y.pow(&e2), y.pow(&e3), y.pow(&e4)]
}

/// Bundles for every full group, with one common factor `kf` per group.
pub fn kf_bundles(
    exponents: &[BigUint],
    kfs: &[BigUint],
    y: &FieldElement,
    rv: Option<&Noise>,
) -> Result<KfBundle> {
    let full = exponents.len() / GROUP;
    if kfs.len() < full {
        return Err(Error::param("common factors", format!("{full} groups need {full} values, got {}", kfs.len())));
    }
    let groups = exponents
        .chunks_exact(GROUP)
        .zip(kfs)
        .enumerate()
        .map(|(n, (r, kf))| kf_bundle([&r[0], &r[1], &r[2], &r[3]], kf, y, rv.map(|v| v.factor(n))))
        .collect();
    Ok(KfBundle { groups })
}

/// Random common factors, one per full group.
pub fn random_kfs(groups: usize, field: &PrimeField, rng: &mut dyn RngCore) -> Vec<BigUint> {
    use num_bigint::RandBigInt;
    (0..groups).map(|_| rng.gen_biguint_below(&field.group_order())).collect()
}

/// Unsquared cross-ratio of a ciphertext group with every pairwise product
/// lifted to the common factor `y^{kf}` by the bundle; 1 when degenerate.
pub fn cr_native_with_kf(c2: [&FieldElement; 4], bundle: &GroupBundle) -> FieldElement {
    let field = c2[0].field().clone();
    let [k1, k2, k3, k4] = bundle;
    let t = PairTerms::of(c2);
    let k12 = k1 * k2;
    let (Ok(k3_inv), Ok(k4_inv)) = (k3.inv(), k4.inv()) else {
        return field.one();
    };
    let lifted = PairTerms {
        t12: &t.t12 * k1,
        t34: &t.t34 * k2,
        t14: &t.t14 * k3,
        t13: &t.t13 * k4,
        t23: &t.t23 * &(&k12 * &k3_inv),
        t24: &t.t24 * &(&k12 * &k4_inv),
    };
    ratio_from_terms(&lifted).unwrap_or_else(|| field.one())
}

/// Unsquared line cross-ratio of plaintext residues; 1 when degenerate.
pub fn cr_plain_native(x: [&FieldElement; 4]) -> FieldElement {
    let one = x[0].field().one();
    line_ratio_mod(x).unwrap_or(one)
}

/// Plaintext side when the bundle's `K1` carries `rv`: the factor lands on
/// the three products containing `x2`, i.e. on `x2` itself.
pub fn cr_plain_noised_native(x: [&FieldElement; 4], rv: &FieldElement) -> FieldElement {
    let x2 = x[1] * rv;
    cr_plain_native([x[0], &x2, x[2], x[3]])
}

/// Owner side of the verifier-random protocol: the verifier's factor scales `x1`.
pub fn cr_verifier_owner(x: [&FieldElement; 4], rv: &FieldElement) -> FieldElement {
    let x1 = x[0] * rv;
    cr_plain_native([&x1, x[1], x[2], x[3]])
}

/// Verifier side: scale `c2_1` by the same factor, then compensate.
pub fn cr_verifier_cipher(c2: [&FieldElement; 4], bundle: &GroupBundle, rv: &FieldElement) -> FieldElement {
    let c = c2[0] * rv;
    cr_native_with_kf([&c, c2[1], c2[2], c2[3]], bundle)
}

/// Which plaintext-side factor placement the sequence uses.
#[derive(Clone, Copy, Debug)]
pub enum PlainVariant<'a> {
    Plain,
    /// `rv` folded into the bundle's `K1`.
    BundleNoise(&'a Noise),
    /// `rv` chosen by the verifier.
    VerifierRandom(&'a Noise),
}

/// Unsquared per-group cross-ratios of plaintext residues; tails give 1.
pub fn native_crs_plain(values: &[FieldElement], field: &PrimeField, variant: PlainVariant<'_>) -> CrossRatioSeq {
    let out = values
        .chunks(GROUP)
        .enumerate()
        .map(|(n, g)| match g {
            [a, b, c, d] => match variant {
                PlainVariant::Plain => cr_plain_native([a, b, c, d]),
                PlainVariant::BundleNoise(rv) => cr_plain_noised_native([a, b, c, d], rv.factor(n)),
                PlainVariant::VerifierRandom(rv) => cr_verifier_owner([a, b, c, d], rv.factor(n)),
            },
            _ => field.one(),
        })
        .collect();
    CrossRatioSeq::Field(out)
}

/// Ciphertext-side sequence; `verifier_rv` applies the verifier's factors.
pub fn native_crs_cipher(
    ct: &NativeCiphertext,
    bundle: &KfBundle,
    verifier_rv: Option<&Noise>,
) -> Result<CrossRatioSeq> {
    let full = ct.c2.len() / GROUP;
    if bundle.groups.len() != full {
        return Err(Error::InconsistentBundle(format!(
            "{full} full groups but {} compensation groups",
            bundle.groups.len()
        )));
    }
    for (n, g) in bundle.groups.iter().enumerate() {
        if g.iter().any(|k| k.field() != &ct.field) {
            return Err(Error::FieldMismatch);
        }
        if g.iter().any(FieldElement::is_zero) {
            return Err(Error::InconsistentBundle(format!("group {n} has a zero residue")));
        }
    }
    let out = ct
        .c2
        .chunks(GROUP)
        .enumerate()
        .map(|(n, g)| match g {
            [a, b, c, d] => match verifier_rv {
                Some(rv) => cr_verifier_cipher([a, b, c, d], &bundle.groups[n], rv.factor(n)),
                None => cr_native_with_kf([a, b, c, d], &bundle.groups[n]),
            },
            _ => ct.field.one(),
        })
        .collect();
    Ok(CrossRatioSeq::Field(out))
}

/// Symbols per equalize-sums block.
pub const BLOCK: usize = 16;

/// First pad value for short blocks; later pad bytes count up from it.
pub const PAD_START: u8 = 123;

/// Pads to a multiple of 16 bytes with 123, 124, 125, ...
pub fn pad_block(bytes: &[u8]) -> Vec<u8> {
    let mut out = bytes.to_vec();
    let missing = (BLOCK - bytes.len() % BLOCK) % BLOCK;
    out.extend((0..missing).map(|i| PAD_START + i as u8));
    if out.is_empty() {
        out.extend((0..BLOCK).map(|i| PAD_START + i as u8));
    }
    out
}

fn padded_len(len: usize) -> usize {
    len.div_ceil(BLOCK).max(1) * BLOCK
}

/// Sixteen exponents whose stride-4 columns `{i, i+4, i+8, i+12}` each sum to `rS`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumKey {
    rs: BigUint,
    r: [BigUint; BLOCK],
}

impl SumKey {
    /// Checks the column sums exactly and every exponent's range.
    pub fn new(r: [BigUint; BLOCK], rs: BigUint, field: &PrimeField) -> Result<Self> {
        for (i, v) in r.iter().enumerate() {
            check_exponent_range(v, field).map_err(|_| {
                Error::param("sum key", format!("r[{i}] = {v} is outside [2, p - 2]"))
            })?;
        }
        for col in 0..GROUP {
            let sum: BigUint = (0..GROUP).map(|row| &r[col + GROUP * row]).sum();
            if sum != rs {
                return Err(Error::param(
                    "sum key",
                    format!("column {col} sums to {sum}, expected rS = {rs}"),
                ));
            }
        }
        Ok(SumKey { rs, r })
    }

    pub fn from_u64s(r: [u64; BLOCK], rs: u64, field: &PrimeField) -> Result<Self> {
        Self::new(r.map(BigUint::from), rs.into(), field)
    }

    /// Random key: each exponent in `[2, p - 2]` and coprime to `p - 1`.
    pub fn generate(field: &PrimeField, rng: &mut dyn RngCore) -> Result<Self> {
        use num_bigint::RandBigInt;
        let order = field.group_order();
        let upper = field.modulus() - 2u32;
        if upper < BigUint::from(64u32) {
            return Err(Error::param("prime", "p is too small for equalize-sums keys"));
        }
        // four odd exponents (coprime to the even p - 1) need an even sum
        let mut rs = rng.gen_biguint_range(&BigUint::from(32u32), &upper);
        if rs.is_odd() {
            rs -= 1u32;
        }
        let two = BigUint::from(2u32);
        let third = &rs / 3u32;
        let usable = |v: &BigUint| v >= &two && v <= &upper && v.gcd(&order).is_one();
        let mut r: [BigUint; BLOCK] = std::array::from_fn(|_| BigUint::zero());
        for col in 0..GROUP {
            loop {
                let picks: Vec<BigUint> =
                    (0..3).map(|_| rng.gen_biguint_range(&two, &(&third + 1u32))).collect();
                if !picks.iter().all(&usable) {
                    continue;
                }
                let sum: BigUint = picks.iter().sum();
                if sum >= rs {
                    continue;
                }
                let last = &rs - &sum;
                if !usable(&last) {
                    continue;
                }
                for (row, v) in picks.into_iter().chain(std::iter::once(last)).enumerate() {
                    r[col + GROUP * row] = v;
                }
                break;
            }
        }
        Self::new(r, rs, field)
    }

    pub fn rs(&self) -> &BigUint {
        &self.rs
    }

    pub fn exponents(&self) -> &[BigUint; BLOCK] {
        &self.r
    }
}

/// Equalize-sums ciphertext; `length` is the unpadded plaintext length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumCiphertext {
    pub inner: NativeCiphertext,
    pub length: usize,
}

impl fmt::Display for SumCiphertext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "len: {} / {}", self.length, self.inner)
    }
}

impl SumCiphertext {
    pub fn parse(s: &str, field: &PrimeField) -> Result<Self> {
        let (len, rest) = s
            .trim()
            .strip_prefix("len:")
            .and_then(|t| t.split_once('/'))
            .ok_or_else(|| Error::MalformedCiphertext("expected \"len: n / c2: ... / c1: ...\"".into()))?;
        let length: usize = len
            .trim()
            .parse()
            .map_err(|_| Error::MalformedCiphertext(format!("bad length {len:?}")))?;
        let inner = NativeCiphertext::parse(rest, field)?;
        if inner.len() != padded_len(length) {
            return Err(Error::MalformedCiphertext("length does not match padded blocks".into()));
        }
        Ok(SumCiphertext { inner, length })
    }
}

/// Pads, then encrypts block `k` with `keys[k % keys.len()]`.
pub fn sum_encrypt(
    bytes: &[u8],
    key: &ElGamalKey,
    keys: &[SumKey],
    encoding: Encoding,
) -> Result<SumCiphertext> {
    if keys.is_empty() {
        return Err(Error::param("sum key", "no key supplied"));
    }
    let padded = pad_block(bytes);
    let values = encode(&padded, encoding, key.field())?;
    let exponents: Vec<BigUint> = (0..values.len())
        .map(|i| keys[(i / BLOCK) % keys.len()].r[i % BLOCK].clone())
        .collect();
    let inner = eg_encrypt_values(&values, key, &exponents)?;
    Ok(SumCiphertext { inner, length: bytes.len() })
}

pub fn sum_decrypt(ct: &SumCiphertext, key: &ElGamalKey, encoding: Encoding) -> Result<Vec<u8>> {
    let mut out = eg_decrypt(&ct.inner, key, encoding)?;
    out.truncate(ct.length);
    Ok(out)
}

/// Cross-ratio of the four stride-4 column products of one 16-value block
/// (unsquared; 1 when degenerate). The same formula serves plaintext residues
/// and `c2` values, since each column of `c2` carries exactly `y^{rS}`.
pub fn cr_sum(block: &[FieldElement]) -> Result<FieldElement> {
    if block.len() != BLOCK {
        return Err(Error::param("block", format!("expected {BLOCK} values, got {}", block.len())));
    }
    let col = |c: usize| (0..GROUP).map(|row| block[c + GROUP * row].clone()).reduce(|a, b| a * b).expect("four rows");
    let [xa, xb, xc, xd] = [col(0), col(1), col(2), col(3)];
    Ok(cr_plain_native([&xa, &xb, &xc, &xd]))
}

/// Per-block cross-ratios over padded values.
pub fn sum_crs(values: &[FieldElement]) -> Result<CrossRatioSeq> {
    if !values.len().is_multiple_of(BLOCK) {
        return Err(Error::param("block", "values are not a whole number of 16-symbol blocks"));
    }
    values.chunks(BLOCK).map(cr_sum).collect::<Result<Vec<_>>>().map(CrossRatioSeq::Field)
}

/// Plaintext-side sequence for the equalize-sums scheme.
pub fn sum_crs_plain(bytes: &[u8], encoding: Encoding, field: &PrimeField) -> Result<CrossRatioSeq> {
    sum_crs(&encode(&pad_block(bytes), encoding, field)?)
}

/// Result of multiplying the first two groups of a ciphertext together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplyReport {
    pub product_c2: Vec<FieldElement>,
    pub product_c1: Vec<FieldElement>,
    pub decrypted: Vec<FieldElement>,
    pub combined_bundle: GroupBundle,
    pub plain_cr: FieldElement,
    pub cipher_cr: FieldElement,
}

impl MultiplyReport {
    pub fn consistent(&self) -> bool {
        self.plain_cr == self.cipher_cr
    }
}

impl fmt::Display for MultiplyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "product c2: {}", join(&self.product_c2))?;
        writeln!(f, "product c1: {}", join(&self.product_c1))?;
        writeln!(f, "decrypted products: {}", join(&self.decrypted))?;
        writeln!(f, "combined compensation: {}", join(&self.combined_bundle))?;
        writeln!(f, "plaintext cross-ratio: {}", self.plain_cr)?;
        write!(f, "ciphertext cross-ratio: {}", self.cipher_cr)
    }
}

/// Multiplies symbols 1..4 with 5..8 homomorphically, decrypts the products
/// and checks that the cross-ratio survives under the combined compensation.
pub fn homomorphic_multiply_demo(
    ct: &NativeCiphertext,
    key: &ElGamalKey,
    bundle: &KfBundle,
) -> Result<MultiplyReport> {
    if ct.len() < 2 * GROUP || bundle.groups.len() < 2 {
        return Err(Error::InsufficientData("need two full groups and their compensation residues".into()));
    }
    let product_c2: Vec<FieldElement> = (0..GROUP).map(|i| &ct.c2[i] * &ct.c2[i + GROUP]).collect();
    let product_c1: Vec<FieldElement> = (0..GROUP).map(|i| &ct.c1[i] * &ct.c1[i + GROUP]).collect();
    let product = NativeCiphertext { field: ct.field.clone(), c2: product_c2.clone(), c1: product_c1.clone() };
    let decrypted = eg_decrypt_values(&product, key)?;
    let combined_bundle: GroupBundle =
        std::array::from_fn(|i| &bundle.groups[0][i] * &bundle.groups[1][i]);
    let plain_cr = cr_plain_native([&decrypted[0], &decrypted[1], &decrypted[2], &decrypted[3]]);
    let cipher_cr = cr_native_with_kf(
        [&product_c2[0], &product_c2[1], &product_c2[2], &product_c2[3]],
        &combined_bundle,
    );
    Ok(MultiplyReport { product_c2, product_c1, decrypted, combined_bundle, plain_cr, cipher_cr })
}

/// Draws a verifier's random array of nonzero residues.
pub fn verifier_random_array(len: usize, field: &PrimeField, rng: &mut dyn RngCore) -> Result<Noise> {
    if len == 0 {
        return Err(Error::param("random array", "length must be at least 1"));
    }
    Noise::random(len, field, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossratio::serialize_crs;
    use crate::elgamal::{FixedExponents, RandomExponents};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MSG: &[u8] = b"#Hello world!";
    const R: [u64; 13] = [11, 31, 23, 53, 42, 18, 26, 34, 9, 57, 73, 82, 45];

    fn field() -> PrimeField {
        PrimeField::from_u64(100_043).unwrap()
    }

    fn key(g: u32) -> ElGamalKey {
        ElGamalKey::new(field(), g.into(), 16u32.into()).unwrap()
    }

    fn listing(v: &[FieldElement]) -> String {
        join(v)
    }

    fn reference_encryption() -> NativeEncryption {
        eg_encrypt(MSG, &key(83), Encoding::Raw, &mut FixedExponents::from_u64s(&R).unwrap()).unwrap()
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn elgamal_vector() {
        let enc = reference_encryption();
        assert_eq!(
            listing(&enc.ciphertext.c2),
            "5308 53413 65797 65065 11191 96387 41219 39237 54656 48716 74865 92388 20022"
        );
        assert_eq!(
            listing(&enc.ciphertext.c1),
            "43944 92349 45859 65239 40204 63214 9604 61747 71920 38601 3380 85153 43922"
        );
        assert_eq!(eg_decrypt(&enc.ciphertext, &key(83), Encoding::Raw).unwrap(), MSG);
        let values = eg_decrypt_values(&enc.ciphertext, &key(83)).unwrap();
        assert_eq!(listing(&values), "35 72 101 108 108 111 32 119 111 114 108 100 33");
    }

    #[test]
    fn unit_plaintext_gives_mask() {
        let k = key(83);
        let f = field();
        let ct = eg_encrypt_values(&[f.one()], &k, &big(&[13])).unwrap();
        assert_eq!(ct.c2[0], k.y().pow(&13u32.into()));
    }

    #[test]
    fn zero_and_range_errors() {
        let k = key(83);
        let mut src = FixedExponents::from_u64s(&[13]).unwrap();
        assert_eq!(eg_encrypt(&[5, 0], &k, Encoding::Raw, &mut src).unwrap_err(), Error::ZeroPlaintext { index: 1 });
        assert!(eg_encrypt(&[5, 0], &k, Encoding::Offset, &mut src).is_ok());
        let mut bad = FixedExponents::from_u64s(&[100_042]).unwrap();
        assert!(eg_encrypt(&[5], &k, Encoding::Raw, &mut bad).is_err());
        let small = PrimeField::from_u64(167).unwrap();
        assert!(encode(&[1], Encoding::Offset, &small).is_err());
    }

    #[test]
    fn bundle_vectors() {
        let y = key(83).y().clone();
        let b = kf_bundles(&big(&R), &big(&[157, 593, 348]), &y, None).unwrap();
        assert_eq!(listing(&b.groups[0]), "18128 97714 64995 41197");
        assert_eq!(listing(&b.groups[1]), "60780 60780 14578 60160");
        assert_eq!(b.groups.len(), 3);
        assert_eq!(KfBundle::parse(&b.to_string(), &field()).unwrap(), b);
    }

    #[test]
    fn compensated_cross_ratios_match_vector() {
        let enc = reference_encryption();
        let y = key(83).y().clone();
        let b = kf_bundles(&enc.exponents, &big(&[157, 593, 348]), &y, None).unwrap();
        let cipher = native_crs_cipher(&enc.ciphertext, &b, None).unwrap();
        assert_eq!(serialize_crs(&cipher), "48345 91985 81854 1");
        let values = encode(MSG, Encoding::Raw, &field()).unwrap();
        assert_eq!(native_crs_plain(&values, &field(), PlainVariant::Plain), cipher);
    }

    #[test]
    fn exponent_identity_and_lattice() {
        // each lifted product carries exactly y^kf
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let order = BigInt::from(f.group_order());
        for _ in 0..1000 {
            let r: Vec<BigUint> = (0..4).map(|_| BigUint::from(rng.gen_range(2u32..100_042))).collect();
            let kf = BigUint::from(rng.gen_range(0u32..100_042));
            let [e1, e2, e3, e4] = kf_exponents([&r[0], &r[1], &r[2], &r[3]], &kf, &f).map(BigInt::from);
            let ri: Vec<BigInt> = r.iter().cloned().map(BigInt::from).collect();
            let kfi = BigInt::from(kf);
            let m = |v: BigInt| v.mod_floor(&order);
            // the two pairs of exponents differ by r1 - r2, not by zero
            assert_eq!(m(&e1 + &e2 - &e3 - &e4), m(&ri[0] - &ri[1]));
            assert_eq!(m(&ri[0] + &ri[1] + &e1), m(kfi.clone()));
            assert_eq!(m(&ri[2] + &ri[3] + &e2), m(kfi.clone()));
            assert_eq!(m(&ri[0] + &ri[3] + &e3), m(kfi.clone()));
            assert_eq!(m(&ri[0] + &ri[2] + &e4), m(kfi.clone()));
            assert_eq!(m(&ri[1] + &ri[2] + &e1 + &e2 - &e3), m(kfi.clone()));
            assert_eq!(m(&ri[1] + &ri[3] + &e1 + &e2 - &e4), m(kfi));
        }
    }

    #[test]
    fn kf_scheme_random_agreement() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut src = RandomExponents::new(ChaCha8Rng::seed_from_u64(13));
        for _ in 0..300 {
            let k = ElGamalKey::generate(f.clone(), 83u32.into(), &mut rng).unwrap();
            let len = rng.gen_range(0..24);
            let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let enc = eg_encrypt(&msg, &k, Encoding::Offset, &mut src).unwrap();
            let kfs = random_kfs(len / 4, &f, &mut rng);
            let noisy = rng.gen_bool(0.5);
            let rv = Noise::random(2, &f, &mut rng).unwrap();
            let b = kf_bundles(&enc.exponents, &kfs, k.y(), noisy.then_some(&rv)).unwrap();
            let values = encode(&msg, Encoding::Offset, &f).unwrap();
            let variant = if noisy { PlainVariant::BundleNoise(&rv) } else { PlainVariant::Plain };
            assert_eq!(native_crs_plain(&values, &f, variant), native_crs_cipher(&enc.ciphertext, &b, None).unwrap());
            assert_eq!(eg_decrypt(&enc.ciphertext, &k, Encoding::Offset).unwrap(), msg);
        }
    }

    #[test]
    fn bundle_noise_with_unit_factor_is_plain() {
        let f = field();
        let x = [3u64, 9, 27, 81].map(|v| f.elem_u64(v));
        let r = [&x[0], &x[1], &x[2], &x[3]];
        assert_eq!(cr_plain_noised_native(r, &f.one()), cr_plain_native(r));
        let same = [5u64, 5, 7, 7].map(|v| f.elem_u64(v));
        assert!(cr_plain_noised_native([&same[0], &same[1], &same[2], &same[3]], &f.one()).is_one());
    }

    #[test]
    fn verifier_random_agreement_and_wrong_rv() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut src = RandomExponents::new(ChaCha8Rng::seed_from_u64(32));
        let k = ElGamalKey::generate(f.clone(), 83u32.into(), &mut rng).unwrap();
        let mut differ = 0;
        for _ in 0..200 {
            let msg: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
            let enc = eg_encrypt(&msg, &k, Encoding::Offset, &mut src).unwrap();
            let b = kf_bundles(&enc.exponents, &random_kfs(4, &f, &mut rng), k.y(), None).unwrap();
            let rv = verifier_random_array(4, &f, &mut rng).unwrap();
            let values = encode(&msg, Encoding::Offset, &f).unwrap();
            let owner = native_crs_plain(&values, &f, PlainVariant::VerifierRandom(&rv));
            assert_eq!(owner, native_crs_cipher(&enc.ciphertext, &b, Some(&rv)).unwrap());
            let wrong = verifier_random_array(4, &f, &mut rng).unwrap();
            if native_crs_plain(&values, &f, PlainVariant::VerifierRandom(&wrong)) != owner {
                differ += 1;
            }
        }
        assert_eq!(differ, 200);
        let ones = Noise::new(&[BigUint::one()], &f).unwrap();
        let values = encode(MSG, Encoding::Raw, &f).unwrap();
        assert_eq!(
            native_crs_plain(&values, &f, PlainVariant::VerifierRandom(&ones)),
            native_crs_plain(&values, &f, PlainVariant::Plain)
        );
    }

    #[test]
    fn bundle_shape_checked() {
        let enc = reference_encryption();
        let y = key(83).y().clone();
        let b = kf_bundles(&enc.exponents, &big(&[157, 593]), &y, None);
        assert!(b.is_err());
        let mut b = kf_bundles(&enc.exponents, &big(&[157, 593, 348]), &y, None).unwrap();
        b.groups.pop();
        assert!(matches!(native_crs_cipher(&enc.ciphertext, &b, None), Err(Error::InconsistentBundle(_))));
    }

    const SUM_R: [u64; 16] = [11, 31, 23, 53, 23, 15, 17, 10, 36, 21, 25, 9, 30, 33, 35, 28];

    #[test]
    fn sum_vector() {
        let f = field();
        let k = key(73);
        assert_eq!(k.y().value(), &72_212u32.into());
        let sk = SumKey::from_u64s(SUM_R, 100, &f).unwrap();
        let ct = sum_encrypt(MSG, &k, &[sk], Encoding::Raw).unwrap();
        assert_eq!(
            listing(&ct.inner.c2),
            "35380 83 16766 38951 17928 52226 88421 35191 79436 80961 66944 72379 35445 57344 74581 46267"
        );
        let padded = eg_decrypt_values(&ct.inner, &k).unwrap();
        assert_eq!(listing(&padded), "35 72 101 108 108 111 32 119 111 114 108 100 33 123 124 125");
        assert_eq!(sum_decrypt(&ct, &k, Encoding::Raw).unwrap(), MSG);
        assert_eq!(serialize_crs(&sum_crs(&ct.inner.c2).unwrap()), "39055");
        assert_eq!(serialize_crs(&sum_crs_plain(MSG, Encoding::Raw, &f).unwrap()), "39055");
        assert_eq!(SumCiphertext::parse(&ct.to_string(), &f).unwrap(), ct);
    }

    #[test]
    fn sum_key_validation() {
        let f = field();
        let mut r = SUM_R;
        r[0] += 1;
        assert!(SumKey::from_u64s(r, 100, &f).is_err());
        let mut r = SUM_R;
        r[0] = 1;
        r[4] += 10;
        assert!(SumKey::from_u64s(r, 100, &f).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let sk = SumKey::generate(&f, &mut rng).unwrap();
            let order = f.group_order();
            assert!(sk.exponents().iter().all(|v| v.gcd(&order).is_one()));
        }
    }

    #[test]
    fn sum_scheme_random_agreement() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..100 {
            let k = ElGamalKey::generate(f.clone(), 83u32.into(), &mut rng).unwrap();
            let len = rng.gen_range(0..40);
            let msg: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
            let keys: Vec<SumKey> = (0..3).map(|_| SumKey::generate(&f, &mut rng).unwrap()).collect();
            let ct = sum_encrypt(&msg, &k, &keys, Encoding::Offset).unwrap();
            assert_eq!(sum_crs(&ct.inner.c2).unwrap(), sum_crs_plain(&msg, Encoding::Offset, &f).unwrap());
            assert_eq!(sum_decrypt(&ct, &k, Encoding::Offset).unwrap(), msg);
        }
    }

    #[test]
    fn padding() {
        assert_eq!(pad_block(MSG)[13..], [123, 124, 125]);
        assert_eq!(pad_block(&[0; 16]).len(), 16);
        assert_eq!(pad_block(&[]).len(), 16);
        assert_eq!(pad_block(&[1]).last(), Some(&137));
    }

    #[test]
    fn multiply_demo_vector() {
        let enc = reference_encryption();
        let k = key(83);
        let b = kf_bundles(&enc.exponents, &big(&[157, 593, 348]), k.y(), None).unwrap();
        let rep = homomorphic_multiply_demo(&enc.ciphertext, &k, &b).unwrap();
        assert_eq!(listing(&rep.product_c2), "76329 6008 20856 58131");
        assert_eq!(listing(&rep.product_c1), "65239 40550 40550 81138");
        assert_eq!(listing(&rep.decrypted), "3780 7992 3232 12852");
        assert_eq!(listing(&rep.combined_bundle), "46281 4225 89900 46281");
        assert_eq!(rep.cipher_cr.value(), &83_094u32.into());
        assert!(rep.consistent());
    }

    #[test]
    fn text_round_trip() {
        let enc = reference_encryption();
        let f = field();
        let text = enc.ciphertext.to_string();
        assert!(text.starts_with("c2: 5308 53413"));
        assert_eq!(NativeCiphertext::parse(&text, &f).unwrap(), enc.ciphertext);
        assert!(NativeCiphertext::parse("c2: 1 2 / c1: 3", &f).is_err());
        assert!(NativeCiphertext::parse("c2: 1 / c1: 0", &f).is_err());
    }
}
