//! Projective encryption mod p with an ElGamal mask.
//!
//! Every point of a 4-symbol group is multiplied by the same `y^r`, and
//! `c1 = g^r` travels with the group. A common factor on all four points does
//! not change the squared-distance cross-ratio, so anyone can still compute
//! the feature value of the ciphertext. In noise mode the first symbol of each
//! group is multiplied by an element of a random array `rv` before
//! projection; the plaintext side must then fold the same factor in.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use rand::RngCore;

use crate::crossratio::{
    cr_cipher_noised, cr_line_mod, cr_line_mod_noised, group_plaintext, hfv, CrossRatioSeq, Group,
    Hfv, GROUP,
};
use crate::elgamal::{ElGamalKey, ExponentSource};
use crate::error::{Error, Result};
use crate::numerics::{FieldElement, PrimeField};
use crate::projective::{
    format_mod_points, parse_ints, parse_mod_points, project_point_reduced, residue_to_byte,
    unproject_mod, ModPoint, ProjectiveKey, ProjectiveParams,
};

/// Random array for noise mode, with precomputed inverses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Noise {
    rv: Vec<FieldElement>,
    rv_inv: Vec<FieldElement>,
}

impl Noise {
    pub fn new(rv: &[BigUint], field: &PrimeField) -> Result<Self> {
        if rv.is_empty() {
            return Err(Error::param("random array", "empty"));
        }
        let rv: Vec<FieldElement> = rv.iter().map(|v| field.elem_u(v)).collect();
        let rv_inv = rv
            .iter()
            .map(|v| v.inv().map_err(|_| Error::param("random array", format!("{v} is zero mod p"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Noise { rv, rv_inv })
    }

    /// Draws `len` nonzero residues.
    pub fn random(len: usize, field: &PrimeField, rng: &mut dyn RngCore) -> Result<Self> {
        use num_bigint::RandBigInt;
        let rv: Vec<BigUint> =
            (0..len).map(|_| rng.gen_biguint_range(&BigUint::from(1u32), field.modulus())).collect();
        Self::new(&rv, field)
    }

    /// Factor for group `n` (the array is used cyclically).
    pub fn factor(&self, group: usize) -> &FieldElement {
        &self.rv[group % self.rv.len()]
    }

    pub fn inverse(&self, group: usize) -> &FieldElement {
        &self.rv_inv[group % self.rv_inv.len()]
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.rv
    }
}

/// Projective key plus ElGamal key sharing one prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedKey {
    projective: ProjectiveKey,
    elgamal: ElGamalKey,
    noise: Option<Noise>,
}

/// Validates and assembles a masked key. `alphabet` bounds plaintext symbols
/// and must not exceed p.
pub fn masked_keygen(
    field: PrimeField,
    g: BigUint,
    x: BigUint,
    params: ProjectiveParams,
    alphabet: u32,
    rv: Option<&[BigUint]>,
) -> Result<MaskedKey> {
    let projective = ProjectiveKey::modular(params, field.clone(), alphabet)?;
    let elgamal = ElGamalKey::new(field.clone(), g, x)?;
    let noise = rv.map(|v| Noise::new(v, &field)).transpose()?;
    Ok(MaskedKey { projective, elgamal, noise })
}

impl MaskedKey {
    pub fn field(&self) -> &PrimeField {
        self.elgamal.field()
    }

    pub fn projective(&self) -> &ProjectiveKey {
        &self.projective
    }

    pub fn elgamal(&self) -> &ElGamalKey {
        &self.elgamal
    }

    pub fn noise(&self) -> Option<&Noise> {
        self.noise.as_ref()
    }

    pub fn y(&self) -> &FieldElement {
        self.elgamal.y()
    }
}

/// One group: `c1 = g^r` and up to four masked points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedGroup {
    pub c1: FieldElement,
    pub points: Vec<ModPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedCiphertext {
    pub field: PrimeField,
    /// Whether the first point of each group carries a noise factor.
    pub noised: bool,
    pub groups: Vec<MaskedGroup>,
}

impl MaskedCiphertext {
    pub fn points(&self) -> impl Iterator<Item = &ModPoint> {
        self.groups.iter().flat_map(|g| g.points.iter())
    }

    pub fn symbol_count(&self) -> usize {
        self.groups.iter().map(|g| g.points.len()).sum()
    }

    /// Point pairs only, `x y | x y | ...`, as in published listings.
    pub fn points_listing(&self) -> String {
        format_mod_points(&self.points().cloned().collect::<Vec<_>>())
    }

    /// Parses the per-group line format produced by `Display`.
    pub fn parse(s: &str, field: &PrimeField, noised: bool) -> Result<Self> {
        let mut groups = Vec::new();
        let lines: Vec<&str> = s.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        for (n, line) in lines.iter().enumerate() {
            let (c1, rest) = line
                .split_once(';')
                .ok_or_else(|| Error::MalformedCiphertext(format!("group {n}: missing c1")))?;
            let c1 = parse_ints(c1)?;
            let [c1] = c1.as_slice() else {
                return Err(Error::MalformedCiphertext(format!("group {n}: expected one c1 value")));
            };
            let c1 = residue(c1, field, n)?;
            if c1.is_zero() {
                return Err(Error::MalformedCiphertext(format!("group {n}: c1 is zero")));
            }
            let ints = parse_ints(rest)?;
            if ints.is_empty() || ints.len() % 2 != 0 || ints.len() > 2 * GROUP {
                return Err(Error::MalformedCiphertext(format!(
                    "group {n}: expected 1 to 4 coordinate pairs, found {} values",
                    ints.len()
                )));
            }
            let points = ints
                .chunks(2)
                .map(|c| Ok(ModPoint { x: residue(&c[0], field, n)?, y: residue(&c[1], field, n)? }))
                .collect::<Result<Vec<_>>>()?;
            if points.len() < GROUP && n + 1 != lines.len() {
                return Err(Error::MalformedCiphertext(format!("group {n}: short group before the end")));
            }
            groups.push(MaskedGroup { c1, points });
        }
        Ok(MaskedCiphertext { field: field.clone(), noised, groups })
    }

    /// Rebuilds groups from a bare point listing with every group sharing `c1`
    /// (the fixed-exponent case of published examples).
    pub fn from_listing(s: &str, c1: FieldElement, noised: bool) -> Result<Self> {
        let field = c1.field().clone();
        let points = parse_mod_points(s, &field)?;
        let groups = points
            .chunks(GROUP)
            .map(|c| MaskedGroup { c1: c1.clone(), points: c.to_vec() })
            .collect();
        Ok(MaskedCiphertext { field, noised, groups })
    }
}

fn residue(n: &BigInt, field: &PrimeField, group: usize) -> Result<FieldElement> {
    if n < &BigInt::from(0) || n >= &BigInt::from(field.modulus().clone()) {
        return Err(Error::MalformedCiphertext(format!("group {group}: {n} is not a residue mod p")));
    }
    Ok(field.elem(n))
}

impl fmt::Display for MaskedCiphertext {
    /// One line per group: `c1 ; p1x p1y p2x p2y ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, g) in self.groups.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            write!(f, "{} ;", g.c1)?;
            for p in &g.points {
                write!(f, " {} {}", p.x, p.y)?;
            }
        }
        Ok(())
    }
}

pub fn masked_encrypt(
    plaintext: &[u8],
    key: &MaskedKey,
    exponents: &mut dyn ExponentSource,
) -> Result<MaskedCiphertext> {
    let field = key.field();
    let params = key.projective.params();
    let mut groups = Vec::with_capacity(plaintext.len().div_ceil(GROUP));
    for (n, chunk) in plaintext.chunks(GROUP).enumerate() {
        let r = exponents.next_exponent(field)?;
        let mask = key.y().pow(&r);
        let c1 = key.elgamal.g().pow(&r);
        let mut points = Vec::with_capacity(chunk.len());
        for (j, &byte) in chunk.iter().enumerate() {
            let index = n * GROUP + j;
            if u32::from(byte) >= key.projective.alphabet() {
                return Err(Error::param(
                    "plaintext",
                    format!(
                        "byte {byte} at index {index} is outside the alphabet of {}",
                        key.projective.alphabet()
                    ),
                ));
            }
            let mut s = BigInt::from(byte);
            if j == 0 {
                if let Some(noise) = &key.noise {
                    s *= BigInt::from(noise.factor(n).value().clone());
                }
            }
            let point = project_point_reduced(&s, params, field, index).map_err(|e| match e {
                Error::SingularProjection { .. } => Error::NonInvertibleDenominator { index },
                other => other,
            })?;
            points.push(point.scale(&mask));
        }
        groups.push(MaskedGroup { c1, points });
    }
    Ok(MaskedCiphertext { field: field.clone(), noised: key.noise.is_some(), groups })
}

fn check_shape(ct: &MaskedCiphertext, key: &MaskedKey) -> Result<()> {
    if &ct.field != key.field() {
        return Err(Error::FieldMismatch);
    }
    if ct.noised != key.noise.is_some() {
        return Err(Error::param("key", "noise mode of key and ciphertext differ"));
    }
    for (n, g) in ct.groups.iter().enumerate() {
        if g.points.is_empty() || g.points.len() > GROUP {
            return Err(Error::MalformedCiphertext(format!("group {n} has {} points", g.points.len())));
        }
        if g.c1.is_zero() {
            return Err(Error::MalformedCiphertext(format!("group {n}: c1 is zero")));
        }
    }
    Ok(())
}

/// Recovered residues, one per symbol. With `correct_noise` false the first
/// symbol of each group still carries its noise factor.
fn recover(
    ct: &MaskedCiphertext,
    key: &MaskedKey,
    correct_noise: bool,
    strip_first: bool,
) -> Result<Vec<FieldElement>> {
    check_shape(ct, key)?;
    let center = key.projective.center();
    let field = key.field();
    let y0 = field.elem(&center.y0);
    let x0 = field.elem(&center.x0);
    let mut out = Vec::with_capacity(ct.symbol_count());
    for (n, g) in ct.groups.iter().enumerate() {
        let mask = key.elgamal.shared_secret(&g.c1);
        let mask_inv = mask.inv()?;
        for (j, p) in g.points.iter().enumerate() {
            let index = n * GROUP + j;
            let v = if strip_first {
                // remove y^r, then invert the projection
                unproject_mod(&p.scale(&mask_inv), &center, index)?
            } else if p.y.is_zero() {
                &p.x * &mask_inv
            } else {
                // (X·y0 - x0·Y) / (y0·y^r - Y)
                let num = &p.x * &y0 - &x0 * &p.y;
                let den = &y0 * &mask - &p.y;
                let inv = den.inv().map_err(|_| Error::NonInvertibleDenominator { index })?;
                &num * &inv
            };
            let v = match (&key.noise, j == 0 && correct_noise) {
                (Some(noise), true) => &v * noise.inverse(n),
                _ => v,
            };
            out.push(v);
        }
    }
    Ok(out)
}

fn to_bytes(values: &[FieldElement]) -> Result<Vec<u8>> {
    values.iter().enumerate().map(|(i, v)| residue_to_byte(v, i)).collect()
}

/// Decryption by first stripping the mask with `c1^-x`.
pub fn masked_decrypt_strip(ct: &MaskedCiphertext, key: &MaskedKey) -> Result<Vec<u8>> {
    to_bytes(&recover(ct, key, true, true)?)
}

/// Decryption with the mask folded into the center: `y0` becomes `y0·y^r`.
pub fn masked_decrypt_direct(ct: &MaskedCiphertext, key: &MaskedKey) -> Result<Vec<u8>> {
    to_bytes(&recover(ct, key, true, false)?)
}

pub fn masked_decrypt(ct: &MaskedCiphertext, key: &MaskedKey) -> Result<Vec<u8>> {
    masked_decrypt_direct(ct, key)
}

/// Residues recovered without undoing the noise factor.
pub fn masked_decrypt_uncorrected(ct: &MaskedCiphertext, key: &MaskedKey) -> Result<Vec<BigUint>> {
    Ok(recover(ct, key, false, false)?.into_iter().map(FieldElement::into_value).collect())
}

/// Plaintext-side cross-ratios; noise mode folds `rv` into each group's first symbol.
pub fn masked_crs_plain(bytes: &[u8], field: &PrimeField, noise: Option<&Noise>) -> CrossRatioSeq {
    let values = group_plaintext(bytes)
        .into_iter()
        .enumerate()
        .map(|(n, g)| match g {
            Group::Full(x) => {
                let x = x.map(BigInt::from);
                match noise {
                    Some(noise) => cr_line_mod_noised(&x, noise.factor(n), field),
                    None => cr_line_mod(&x, field),
                }
            }
            Group::Partial(_) => field.one(),
        })
        .collect();
    CrossRatioSeq::Field(values)
}

/// Ciphertext-side cross-ratios; needs no key material.
pub fn masked_crs_cipher(ct: &MaskedCiphertext) -> CrossRatioSeq {
    let field = &ct.field;
    let values = ct
        .groups
        .iter()
        .map(|g| match g.points.as_slice() {
            [a, b, c, d] => cr_cipher_noised([a, b, c, d], field),
            _ => field.one(),
        })
        .collect();
    CrossRatioSeq::Field(values)
}

pub fn masked_hfv_plain(bytes: &[u8], key: &MaskedKey) -> Hfv {
    hfv(&masked_crs_plain(bytes, key.field(), key.noise()))
}

pub fn masked_hfv_cipher(ct: &MaskedCiphertext) -> Hfv {
    hfv(&masked_crs_cipher(ct))
}
