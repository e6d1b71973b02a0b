//! Cross-ratios of four symbols and the feature value (HFV) built from them.
//!
//! Plaintext bytes are points on the X-axis, so their cross-ratio is the
//! one-dimensional `(x1 - x3)(x2 - x4) / ((x1 - x4)(x2 - x3))`. Ciphertext
//! points sit anywhere on the line `l`; there the same value is obtained from
//! squared Euclidean distances, which is why both sides are squared. The
//! sequence of per-group values is serialized and hashed with SHA-256.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{FieldElement, PrimeField, Rational};
use crate::projective::{CipherPoint, ModPoint};

/// Symbols per cross-ratio group.
pub const GROUP: usize = 4;

/// A chunk of the input: four symbols, or a shorter tail whose cross-ratio is 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group<'a, T> {
    Full(&'a [T; GROUP]),
    Partial(&'a [T]),
}

/// Splits `items` into consecutive groups of four.
pub fn group_plaintext<T>(items: &[T]) -> Vec<Group<'_, T>> {
    items
        .chunks(GROUP)
        .map(|c| match c.try_into() {
            Ok(full) => Group::Full(full),
            Err(_) => Group::Partial(c),
        })
        .collect()
}

/// Applies `f` to every full group; partial tails map to `one`.
pub fn map_groups<T, V: Clone>(items: &[T], one: V, mut f: impl FnMut(&[T; GROUP]) -> V) -> Vec<V> {
    group_plaintext(items)
        .into_iter()
        .map(|g| match g {
            Group::Full(x) => f(x),
            Group::Partial(_) => one.clone(),
        })
        .collect()
}

/// `(x1 - x3)(x2 - x4) / ((x1 - x4)(x2 - x3))`, or 1 when the denominator vanishes.
pub fn cr_line_rational(x: [&Rational; 4]) -> Rational {
    let [x1, x2, x3, x4] = x;
    let num = (x1 - x3) * (x2 - x4);
    let den = (x1 - x4) * (x2 - x3);
    num.checked_div(&den).unwrap_or_else(|_| Rational::one())
}

/// Line cross-ratio of four integers (unsquared).
pub fn cr_line(x: &[BigInt; 4]) -> Rational {
    let [x1, x2, x3, x4] = x.clone().map(Rational::from_integer);
    cr_line_rational([&x1, &x2, &x3, &x4])
}

fn dist_sq(p: &CipherPoint, q: &CipherPoint) -> Rational {
    let dx = &p.x - &q.x;
    let dy = &p.y - &q.y;
    dx.square() + dy.square()
}

/// Squared cross-ratio of four collinear planar points from squared distances.
pub fn cr_planar_sq(p: [&CipherPoint; 4]) -> Rational {
    let [p1, p2, p3, p4] = p;
    let num = dist_sq(p3, p1) * dist_sq(p4, p2);
    let den = dist_sq(p3, p2) * dist_sq(p4, p1);
    num.checked_div(&den).unwrap_or_else(|_| Rational::one())
}

/// Unsquared line cross-ratio in Z_p; `None` when the denominator is not invertible.
pub fn line_ratio_mod(x: [&FieldElement; 4]) -> Option<FieldElement> {
    let [x1, x2, x3, x4] = x;
    let num = (x1 - x3) * (x2 - x4);
    let den = (x1 - x4) * (x2 - x3);
    den.inv().ok().map(|d| &num * &d)
}

/// Cross-ratio from its six pairwise products:
/// `(t12 - t14 - t23 + t34) / (t12 - t13 - t24 + t34)`.
///
/// Lets callers substitute products that carry a common extra factor.
pub fn ratio_from_terms(t: &PairTerms) -> Option<FieldElement> {
    let num = &t.t12 - &t.t14 - &t.t23 + &t.t34;
    let den = &t.t12 - &t.t13 - &t.t24 + &t.t34;
    den.inv().ok().map(|d| &num * &d)
}

/// The six products `x_i * x_j` of a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairTerms {
    pub t12: FieldElement,
    pub t13: FieldElement,
    pub t14: FieldElement,
    pub t23: FieldElement,
    pub t24: FieldElement,
    pub t34: FieldElement,
}

impl PairTerms {
    pub fn of(x: [&FieldElement; 4]) -> Self {
        let [x1, x2, x3, x4] = x;
        PairTerms {
            t12: x1 * x2,
            t13: x1 * x3,
            t14: x1 * x4,
            t23: x2 * x3,
            t24: x2 * x4,
            t34: x3 * x4,
        }
    }
}

fn field_group(x: &[BigInt; 4], field: &PrimeField) -> [FieldElement; 4] {
    [field.elem(&x[0]), field.elem(&x[1]), field.elem(&x[2]), field.elem(&x[3])]
}

/// Squared line cross-ratio mod p; 1 when degenerate.
pub fn cr_line_mod(x: &[BigInt; 4], field: &PrimeField) -> FieldElement {
    let [x1, x2, x3, x4] = field_group(x, field);
    line_ratio_mod([&x1, &x2, &x3, &x4]).map_or_else(|| field.one(), |v| &v * &v)
}

/// Squared line cross-ratio mod p with the first symbol scaled by `rv`.
pub fn cr_line_mod_noised(x: &[BigInt; 4], rv: &FieldElement, field: &PrimeField) -> FieldElement {
    let [x1, x2, x3, x4] = field_group(x, field);
    let x1 = &x1 * rv;
    line_ratio_mod([&x1, &x2, &x3, &x4]).map_or_else(|| field.one(), |v| &v * &v)
}

fn dist_sq_mod(p: &ModPoint, q: &ModPoint) -> FieldElement {
    let dx = &p.x - &q.x;
    let dy = &p.y - &q.y;
    &dx * &dx + &dy * &dy
}

/// Squared-distance cross-ratio of four points in Z_p²; 1 when degenerate.
pub fn cr_planar_sq_mod(p: [&ModPoint; 4], field: &PrimeField) -> FieldElement {
    let [p1, p2, p3, p4] = p;
    let num = dist_sq_mod(p3, p1) * dist_sq_mod(p4, p2);
    let den = dist_sq_mod(p3, p2) * dist_sq_mod(p4, p1);
    match den.inv() {
        Ok(d) => &num * &d,
        Err(_) => field.one(),
    }
}

/// Ciphertext-side cross-ratio when the first point of the group already
/// carries a noise factor. The noise lives inside the point, so this is the
/// plain squared-distance computation; it matches [`cr_line_mod_noised`].
pub fn cr_cipher_noised(p: [&ModPoint; 4], field: &PrimeField) -> FieldElement {
    cr_planar_sq_mod(p, field)
}

/// Per-group cross-ratios in one of two value domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossRatioSeq {
    /// Exact squared values, serialized as `num den` pairs.
    RationalSquared(Vec<Rational>),
    /// Residues mod p.
    Field(Vec<FieldElement>),
}

impl CrossRatioSeq {
    pub fn len(&self) -> usize {
        match self {
            CrossRatioSeq::RationalSquared(v) => v.len(),
            CrossRatioSeq::Field(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for CrossRatioSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_crs(self))
    }
}

/// Canonical text: decimals joined by single spaces; rationals as `num den`.
pub fn serialize_crs(seq: &CrossRatioSeq) -> String {
    let parts: Vec<String> = match seq {
        CrossRatioSeq::RationalSquared(v) => {
            v.iter().map(|r| format!("{} {}", r.numer(), r.denom())).collect()
        }
        CrossRatioSeq::Field(v) => v.iter().map(ToString::to_string).collect(),
    };
    parts.join(" ")
}

/// Homomorphic feature value: SHA-256 of the serialized cross-ratio sequence.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Hfv(pub [u8; 32]);

impl Hfv {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Number of differing bits.
    pub fn hamming(&self, other: &Hfv) -> u32 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

impl fmt::Display for Hfv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Hfv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hfv({self})")
    }
}

impl FromStr for Hfv {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().strip_prefix("0x").unwrap_or(s.trim());
        let mut out = [0u8; 32];
        hex::decode_to_slice(digits, &mut out)
            .map_err(|e| Error::param("hfv", format!("{e}: expected 64 hex digits")))?;
        Ok(Hfv(out))
    }
}

pub fn hfv(seq: &CrossRatioSeq) -> Hfv {
    Hfv(Sha256::digest(serialize_crs(seq).as_bytes()).into())
}

fn ints(bytes: &[u8]) -> Vec<BigInt> {
    bytes.iter().map(|&b| BigInt::from(b)).collect()
}

/// Squared exact cross-ratios of plaintext bytes.
pub fn line_crs(bytes: &[u8]) -> CrossRatioSeq {
    CrossRatioSeq::RationalSquared(map_groups(&ints(bytes), Rational::one(), |g| cr_line(g).square()))
}

/// Squared exact cross-ratios of ciphertext points.
pub fn planar_crs(points: &[CipherPoint]) -> CrossRatioSeq {
    CrossRatioSeq::RationalSquared(map_groups(points, Rational::one(), |g| {
        cr_planar_sq([&g[0], &g[1], &g[2], &g[3]])
    }))
}

/// Squared cross-ratios of plaintext bytes mod p.
pub fn line_crs_mod(bytes: &[u8], field: &PrimeField) -> CrossRatioSeq {
    CrossRatioSeq::Field(map_groups(&ints(bytes), field.one(), |g| cr_line_mod(g, field)))
}

/// Squared cross-ratios of modular ciphertext points.
pub fn planar_crs_mod(points: &[ModPoint], field: &PrimeField) -> CrossRatioSeq {
    CrossRatioSeq::Field(map_groups(points, field.one(), |g| {
        cr_planar_sq_mod([&g[0], &g[1], &g[2], &g[3]], field)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::{encrypt_a, encrypt_mod, project_point, ProjectiveKey, ProjectiveParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn b4(x: [i64; 4]) -> [BigInt; 4] {
        x.map(BigInt::from)
    }

    fn frac(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into()).unwrap()
    }

    fn fp(p: u64) -> PrimeField {
        PrimeField::from_u64(p).unwrap()
    }

    /// Cross-ratio straight from the expanded six-term formula.
    fn expanded(x: [i64; 4]) -> Option<(i64, i64)> {
        let [x1, x2, x3, x4] = x;
        let num = x1 * x2 - x1 * x4 - x2 * x3 + x3 * x4;
        let den = x1 * x2 - x1 * x3 - x2 * x4 + x3 * x4;
        (den != 0).then_some((num, den))
    }

    #[test]
    fn line_examples() {
        assert_eq!(cr_line(&b4([35, 72, 101, 108])), frac(2376, 2117));
        assert_eq!(cr_line(&b4([35, 72, 101, 108])).square(), frac(5_645_376, 4_481_689));
        assert_eq!(cr_line(&b4([0, 1, 2, 3])), frac(4, 3));
        assert_eq!(cr_line(&b4([111, 32, 119, 111])), Rational::one());
    }

    #[test]
    fn line_matches_expanded_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let x = [0; 4].map(|_| rng.gen_range(0i64..256));
            let expected = expanded(x).map_or(Rational::one(), |(n, d)| frac(n, d));
            assert_eq!(cr_line(&b4(x)), expected, "{x:?}");
        }
    }

    #[test]
    fn planar_examples() {
        let pts: Vec<CipherPoint> = [0, 1, 2, 3]
            .iter()
            .map(|&v| CipherPoint { x: frac(v, 1), y: frac(v, 1) })
            .collect();
        assert_eq!(cr_planar_sq([&pts[0], &pts[1], &pts[2], &pts[3]]), frac(16, 9));
        let key = ProjectiveParams::new(5, 6, 2, -3, 4);
        let proj: Vec<CipherPoint> =
            [35, 72, 101, 108].iter().map(|&s| project_point(&s.into(), &key).unwrap()).collect();
        assert_eq!(cr_planar_sq([&proj[0], &proj[1], &proj[2], &proj[3]]), frac(5_645_376, 4_481_689));
    }

    #[test]
    fn reference_sequence_both_sides() {
        let key = ProjectiveKey::new(ProjectiveParams::new(5, 6, 2, -3, 4)).unwrap();
        let msg = b"#Hello world!";
        let plain = line_crs(msg);
        assert_eq!(serialize_crs(&plain), "5645376 4481689 369664 755161 49 121 1 1");
        let ct = encrypt_a(msg, &key).unwrap();
        let cipher = planar_crs(&ct.0);
        assert_eq!(plain, cipher);
        assert_eq!(hfv(&plain), hfv(&cipher));
    }

    #[test]
    fn projective_invariance_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut done = 0;
        while done < 1000 {
            let params = ProjectiveParams::new(
                rng.gen_range(-50..50),
                rng.gen_range(-50..50),
                rng.gen_range(-20..20),
                rng.gen_range(-20..20),
                rng.gen_range(-50..50),
            );
            let Ok(key) = ProjectiveKey::new(params) else { continue };
            let bytes: Vec<u8> = (0..4).map(|_| rng.gen()).collect();
            let ct = encrypt_a(&bytes, &key).unwrap();
            assert_eq!(line_crs(&bytes), planar_crs(&ct.0), "{bytes:?} {}", key.params());
            done += 1;
        }
    }

    #[test]
    fn mod_examples() {
        assert_eq!(cr_line_mod(&b4([35, 72, 101, 108]), &fp(167)).value(), &99u32.into());
        assert_eq!(cr_line_mod(&b4([35, 72, 101, 108]), &fp(100_043)).value(), &34_459u32.into());
        assert!(cr_line_mod(&b4([111, 32, 119, 111]), &fp(167)).is_one());
        let f = fp(167);
        assert_eq!(serialize_crs(&line_crs_mod(b"#Hello world!", &f)), "99 147 126 1");
    }

    #[test]
    fn noised_examples() {
        let x = b4([35, 72, 101, 108]);
        let f = fp(167);
        assert_eq!(cr_line_mod_noised(&x, &f.elem_u64(39), &f).value(), &19u32.into());
        let f = fp(100_043);
        assert_eq!(cr_line_mod_noised(&x, &f.elem_u64(39), &f).value(), &34_552u32.into());
        assert_eq!(cr_line_mod_noised(&x, &f.one(), &f), cr_line_mod(&x, &f));
    }

    #[test]
    fn planar_mod_degenerate_and_scaled() {
        let f = fp(167);
        let pt = ModPoint { x: f.elem_u64(3), y: f.elem_u64(9) };
        assert!(cr_planar_sq_mod([&pt, &pt, &pt, &pt], &f).is_one());
        let key =
            ProjectiveKey::modular(ProjectiveParams::new(8, 12, 25, 78, 34), f.clone(), 128).unwrap();
        let ct = encrypt_mod(b"#Hel", &key).unwrap();
        let g = &ct.points;
        let base = cr_planar_sq_mod([&g[0], &g[1], &g[2], &g[3]], &f);
        assert_eq!(base.value(), &99u32.into());
        for lambda in 1..167u64 {
            let l = f.elem_u64(lambda);
            let s: Vec<ModPoint> = g.iter().map(|p| p.scale(&l)).collect();
            assert_eq!(cr_planar_sq_mod([&s[0], &s[1], &s[2], &s[3]], &f), base);
        }
    }

    #[test]
    fn serialize_examples() {
        let seq = CrossRatioSeq::RationalSquared(vec![
            frac(5_645_376, 4_481_689),
            frac(369_664, 755_161),
            frac(49, 121),
            Rational::one(),
        ]);
        assert_eq!(serialize_crs(&seq), "5645376 4481689 369664 755161 49 121 1 1");
        let f = fp(167);
        let seq = CrossRatioSeq::Field([99, 147, 126, 1].map(|v| f.elem_u64(v)).to_vec());
        assert_eq!(seq.to_string(), "99 147 126 1");
        assert_eq!(serialize_crs(&CrossRatioSeq::Field(vec![])), "");
    }

    #[test]
    fn hfv_is_sha256_of_text() {
        let empty = hfv(&CrossRatioSeq::Field(vec![]));
        assert_eq!(
            empty.to_string(),
            "0xe3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(empty.to_string().parse::<Hfv>().unwrap(), empty);
        assert!("0x12".parse::<Hfv>().is_err());
    }

    #[test]
    fn grouping() {
        let g = group_plaintext(b"#Hello world!");
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], Group::Partial(&b"!"[..]));
        assert_eq!(group_plaintext(&[0u8; 16]).len(), 4);
        assert!(group_plaintext::<u8>(&[]).is_empty());
        assert!(line_crs(b"").is_empty());
    }

    #[test]
    fn hfv_avalanche() {
        // single-byte perturbations that change some group's cross-ratio
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1000;
        let mut total = 0u64;
        let mut count = 0;
        while count < n {
            let msg: Vec<u8> = (0..32).map(|_| rng.gen()).collect();
            let mut other = msg.clone();
            let i = rng.gen_range(0..msg.len());
            other[i] = rng.gen();
            let (a, b) = (line_crs(&msg), line_crs(&other));
            if a == b {
                continue;
            }
            let d = hfv(&a).hamming(&hfv(&b));
            assert!(d > 0);
            total += u64::from(d);
            count += 1;
        }
        let mean = total as f64 / n as f64;
        // per-sample std of a Binomial(256, 1/2) is 8
        let bound = 3.0 * 8.0 / (n as f64).sqrt();
        assert!((mean - 128.0).abs() <= bound, "mean Hamming distance {mean}");
    }

    proptest! {
        #[test]
        fn affine_collisions(x in proptest::array::uniform4(0i64..1000), t in -500i64..500, s in 1i64..50) {
            let base = cr_line(&b4(x));
            prop_assert_eq!(cr_line(&b4(x.map(|v| v + t))), base.clone());
            prop_assert_eq!(cr_line(&b4(x.map(|v| v * s))), base.clone());
            prop_assert_eq!(cr_line(&b4(x.map(|v| -v))), base);
        }

        #[test]
        fn mod_line_is_reduction_of_rational(x in proptest::array::uniform4(0i64..256)) {
            let f = fp(100_043);
            let exact = cr_line(&b4(x)).square();
            let m = cr_line_mod(&b4(x), &f);
            // the rational denominator only vanishes mod p when it vanishes outright here
            prop_assert_eq!(exact.reduce_mod(&f).unwrap(), m);
        }

        #[test]
        fn terms_agree_with_direct_ratio(x in proptest::array::uniform4(1u64..100_043)) {
            let f = fp(100_043);
            let e = x.map(|v| f.elem_u64(v));
            let r = [&e[0], &e[1], &e[2], &e[3]];
            prop_assert_eq!(ratio_from_terms(&PairTerms::of(r)), line_ratio_mod(r));
        }
    }
}
