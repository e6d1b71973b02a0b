//! Central-projection encryption.
//!
//! Each plaintext byte `s` is read as the point `(s, 0)` on the X-axis and
//! projected through the center `O(x0, y0)` onto the line `l: ax + by + c = 0`.
//! The ciphertext is the projected point, either as an exact reduced fraction
//! pair or, in modular mode, reduced into Z_p. Decryption projects back
//! through `O`. Because central projection preserves the cross-ratio of four
//! collinear points, the cross-ratio of any four plaintext bytes can be
//! recomputed from their ciphertext without the key.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::{FieldElement, PrimeField, Rational};

/// Bits per plaintext symbol.
pub const BLOCK_BITS: u32 = 8;

/// Symbols are bytes unless a key narrows the alphabet.
pub const DEFAULT_ALPHABET: u32 = 1 << BLOCK_BITS;

/// The five integers `(x0, y0, a, b, c)`: center `O(x0, y0)` and line
/// `ax + by + c = 0`. Unvalidated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveParams {
    pub x0: BigInt,
    pub y0: BigInt,
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
}

impl ProjectiveParams {
    pub fn new(x0: i64, y0: i64, a: i64, b: i64, c: i64) -> Self {
        ProjectiveParams {
            x0: x0.into(),
            y0: y0.into(),
            a: a.into(),
            b: b.into(),
            c: c.into(),
        }
    }

    pub fn center(&self) -> Center {
        Center { x0: self.x0.clone(), y0: self.y0.clone() }
    }

    /// Denominator of the projection formula for symbol `s`.
    fn projection_denominator(&self, s: &BigInt) -> BigInt {
        &self.a * &self.x0 - &self.a * s + &self.b * &self.y0
    }
}

impl fmt::Display for ProjectiveParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {}, {})", self.x0, self.y0, self.a, self.b, self.c)
    }
}

impl FromStr for ProjectiveParams {
    type Err = Error;

    /// Parses `x0,y0,a,b,c`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<BigInt>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::param("projective parameters", e.to_string()))?;
        let [x0, y0, a, b, c]: [BigInt; 5] = parts
            .try_into()
            .map_err(|_| Error::param("projective parameters", "expected x0,y0,a,b,c"))?;
        Ok(ProjectiveParams { x0, y0, a, b, c })
    }
}

/// The decryption key: just the projection center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Center {
    pub x0: BigInt,
    pub y0: BigInt,
}

/// A constraint a projective key fails to meet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeyViolation {
    CenterOnLine,
    CenterOnAxis,
    NotALine,
    LineIsAxis,
    SingularSymbol { symbol: u32 },
    BadAlphabet { alphabet: u32 },
    ModulusTooSmall { alphabet: u32 },
    DegenerateModulo,
    IsotropicLine,
}

impl fmt::Display for KeyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyViolation::CenterOnLine => write!(f, "a*x0 + b*y0 + c ≠ 0 violated (O lies on l)"),
            KeyViolation::CenterOnAxis => write!(f, "y0 ≠ 0 violated (O lies on the X-axis)"),
            KeyViolation::NotALine => write!(f, "|a| + |b| ≠ 0 violated (l is not a line)"),
            KeyViolation::LineIsAxis => write!(f, "|a| + |c| ≠ 0 violated (l is the X-axis)"),
            KeyViolation::SingularSymbol { symbol } => write!(
                f,
                "a*x0 - a*s + b*y0 ≠ 0 violated for s = {symbol} (symbol projects to infinity)"
            ),
            KeyViolation::BadAlphabet { alphabet } => {
                write!(f, "1 ≤ N ≤ 256 violated (alphabet N = {alphabet})")
            }
            KeyViolation::ModulusTooSmall { alphabet } => {
                write!(f, "p ≥ N violated (alphabet N = {alphabet})")
            }
            KeyViolation::DegenerateModulo => {
                write!(f, "b*y0*(a*x0 + b*y0 + c) ≢ 0 (mod p) violated (projection collapses mod p)")
            }
            KeyViolation::IsotropicLine => {
                write!(f, "a² + b² ≢ 0 (mod p) violated (distances on l vanish mod p)")
            }
        }
    }
}

/// A validated projective key, optionally bound to a prime field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveKey {
    params: ProjectiveParams,
    alphabet: u32,
    field: Option<PrimeField>,
}

impl ProjectiveKey {
    /// Exact-rational key over the full byte alphabet.
    pub fn new(params: ProjectiveParams) -> Result<Self> {
        validate_key(params, DEFAULT_ALPHABET, None)
    }

    /// Modular key; `alphabet` bounds the plaintext symbols (`p ≥ alphabet`).
    pub fn modular(params: ProjectiveParams, field: PrimeField, alphabet: u32) -> Result<Self> {
        validate_key(params, alphabet, Some(field))
    }

    pub fn params(&self) -> &ProjectiveParams {
        &self.params
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn field(&self) -> Option<&PrimeField> {
        self.field.as_ref()
    }

    pub fn center(&self) -> Center {
        self.params.center()
    }

    fn require_field(&self) -> Result<&PrimeField> {
        self.field
            .as_ref()
            .ok_or_else(|| Error::param("key", "modular operation needs a key with a prime p"))
    }

    fn check_symbol(&self, index: usize, byte: u8) -> Result<()> {
        if u32::from(byte) >= self.alphabet {
            return Err(Error::param(
                "plaintext",
                format!("byte {byte} at index {index} is outside the alphabet of {}", self.alphabet),
            ));
        }
        Ok(())
    }
}

/// Checks every key constraint and reports all that fail.
pub fn validate_key(
    params: ProjectiveParams,
    alphabet: u32,
    field: Option<PrimeField>,
) -> Result<ProjectiveKey> {
    let ProjectiveParams { x0, y0, a, b, c } = &params;
    let mut violations = Vec::new();

    let offset = a * x0 + b * y0 + c;
    if offset.is_zero() {
        violations.push(KeyViolation::CenterOnLine);
    }
    if y0.is_zero() {
        violations.push(KeyViolation::CenterOnAxis);
    }
    if a.is_zero() && b.is_zero() {
        violations.push(KeyViolation::NotALine);
    }
    if a.is_zero() && c.is_zero() {
        violations.push(KeyViolation::LineIsAxis);
    }
    if alphabet == 0 || alphabet > DEFAULT_ALPHABET {
        violations.push(KeyViolation::BadAlphabet { alphabet });
    } else {
        // a*x0 - a*s + b*y0 = 0 has at most one solution in s when a ≠ 0
        if !a.is_zero() {
            let base = a * x0 + b * y0;
            if (&base % a).is_zero() {
                let s = &base / a;
                if !s.is_negative() && s < BigInt::from(alphabet) {
                    violations.push(KeyViolation::SingularSymbol {
                        symbol: s.to_u32().expect("below alphabet"),
                    });
                }
            }
        } else if (b * y0).is_zero() {
            // a = 0 and b*y0 = 0: every symbol is singular
            violations.push(KeyViolation::SingularSymbol { symbol: 0 });
        }
    }

    if let Some(fp) = &field {
        if fp.modulus() < &alphabet.into() {
            violations.push(KeyViolation::ModulusTooSmall { alphabet });
        }
        if fp.elem(&(b * y0 * &offset)).is_zero() {
            violations.push(KeyViolation::DegenerateModulo);
        }
        if fp.elem(&(a * a + b * b)).is_zero() {
            violations.push(KeyViolation::IsotropicLine);
        }
    }

    violations.dedup();
    if violations.is_empty() {
        Ok(ProjectiveKey { params, alphabet, field })
    } else {
        Err(Error::InvalidKey(violations))
    }
}

/// A ciphertext point on `l`, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherPoint {
    pub x: Rational,
    pub y: Rational,
}

/// Projects the X-axis point `(s, 0)` through `O` onto `l`.
pub fn project_point(s: &BigInt, params: &ProjectiveParams) -> Result<CipherPoint> {
    let ProjectiveParams { x0, y0, a, b, c } = params;
    let singular = || Error::SingularProjection { symbol: s.to_u64().unwrap_or(u64::MAX) };

    if s == x0 {
        // vertical ray through O
        if b.is_zero() {
            return Err(singular());
        }
        let y = Rational::new(-(a * s + c), b.clone())?;
        return Ok(CipherPoint { x: Rational::from_integer(s.clone()), y });
    }
    let den = params.projection_denominator(s);
    if den.is_zero() {
        return Err(singular());
    }
    let x = Rational::new(-(c * x0) + c * s + b * s * y0, den.clone())?;
    let y = Rational::new(-(a * s * y0) - c * y0, den)?;
    Ok(CipherPoint { x, y })
}

/// Scheme A ciphertext: one exact point per plaintext byte.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CiphertextA(pub Vec<CipherPoint>);

impl CiphertextA {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for CiphertextA {
    /// `x̲ x̄ y̲ ȳ` per symbol, symbols separated by ` | `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|p| format!("{} {} {} {}", p.x.numer(), p.x.denom(), p.y.numer(), p.y.denom()))
            .collect();
        f.write_str(&parts.join(" | "))
    }
}

impl FromStr for CiphertextA {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, group) in split_groups(s).enumerate() {
            let v = parse_ints(group)?;
            if v.len() != 4 {
                return Err(Error::MalformedCiphertext(format!(
                    "symbol {i}: expected 4 integers, found {}",
                    v.len()
                )));
            }
            let x = reduced_fraction(&v[0], &v[1], i)?;
            let y = reduced_fraction(&v[2], &v[3], i)?;
            points.push(CipherPoint { x, y });
        }
        Ok(CiphertextA(points))
    }
}

pub(crate) fn reduced_fraction(num: &BigInt, den: &BigInt, index: usize) -> Result<Rational> {
    if !den.is_positive() {
        return Err(Error::MalformedCiphertext(format!(
            "symbol {index}: denominator {den} is not positive"
        )));
    }
    let r = Rational::new(num.clone(), den.clone())?;
    if r.numer() != num || r.denom() != den {
        return Err(Error::MalformedCiphertext(format!(
            "symbol {index}: {num}/{den} is not in lowest terms"
        )));
    }
    Ok(r)
}

pub(crate) fn split_groups(s: &str) -> impl Iterator<Item = &str> {
    let trimmed = s.trim();
    let empty = trimmed.is_empty();
    trimmed.split('|').map(str::trim).filter(move |_| !empty)
}

pub(crate) fn parse_ints(s: &str) -> Result<Vec<BigInt>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<BigInt>()
                .map_err(|_| Error::MalformedCiphertext(format!("not an integer: {t:?}")))
        })
        .collect()
}

pub fn encrypt_a(plaintext: &[u8], key: &ProjectiveKey) -> Result<CiphertextA> {
    plaintext
        .iter()
        .enumerate()
        .map(|(i, &byte)| {
            key.check_symbol(i, byte)?;
            project_point(&BigInt::from(byte), &key.params)
        })
        .collect::<Result<Vec<_>>>()
        .map(CiphertextA)
}

/// Projects a ciphertext point back through `O` onto the X-axis.
pub fn unproject_point(point: &CipherPoint, center: &Center) -> Result<Rational> {
    let x0 = Rational::from_integer(center.x0.clone());
    let y0 = Rational::from_integer(center.y0.clone());
    if point.x == x0 || point.y.is_zero() {
        return Ok(point.x.clone());
    }
    let num = &point.x * &y0 - &x0 * &point.y;
    let den = &y0 - &point.y;
    num.checked_div(&den)
}

pub fn decrypt_a(ct: &CiphertextA, center: &Center) -> Result<Vec<u8>> {
    let y0 = Rational::from_integer(center.y0.clone());
    ct.0.iter()
        .enumerate()
        .map(|(index, point)| {
            if point.y == y0 {
                return Err(Error::PointAtInfinity { index });
            }
            let x = unproject_point(point, center)?;
            rational_to_byte(&x).ok_or_else(|| Error::CorruptCiphertext {
                index,
                detail: format!("decrypts to {x}, not a byte"),
            })
        })
        .collect()
}

fn rational_to_byte(x: &Rational) -> Option<u8> {
    x.to_integer()?.to_u8()
}

/// One modular ciphertext symbol `(|x'|, |y'|)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPoint {
    pub x: FieldElement,
    pub y: FieldElement,
}

impl ModPoint {
    pub fn scale(&self, k: &FieldElement) -> ModPoint {
        ModPoint { x: &self.x * k, y: &self.y * k }
    }
}

/// Modular-mode ciphertext; all residues share one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiphertextMod {
    pub field: PrimeField,
    pub points: Vec<ModPoint>,
}

impl CiphertextMod {
    /// Parses the `|x'| |y'| | ...` listing.
    pub fn parse(s: &str, field: &PrimeField) -> Result<Self> {
        let points = parse_mod_points(s, field)?;
        Ok(CiphertextMod { field: field.clone(), points })
    }
}

impl fmt::Display for CiphertextMod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_mod_points(&self.points))
    }
}

pub(crate) fn format_mod_points(points: &[ModPoint]) -> String {
    points.iter().map(|p| format!("{} {}", p.x, p.y)).collect::<Vec<_>>().join(" | ")
}

pub(crate) fn parse_mod_points(s: &str, field: &PrimeField) -> Result<Vec<ModPoint>> {
    split_groups(s)
        .enumerate()
        .map(|(i, group)| {
            let v = parse_ints(group)?;
            if v.len() != 2 {
                return Err(Error::MalformedCiphertext(format!(
                    "symbol {i}: expected 2 residues, found {}",
                    v.len()
                )));
            }
            let residue = |n: &BigInt| {
                if n.is_negative() || n >= &BigInt::from(field.modulus().clone()) {
                    Err(Error::MalformedCiphertext(format!("symbol {i}: {n} is not a residue mod p")))
                } else {
                    Ok(field.elem(n))
                }
            };
            Ok(ModPoint { x: residue(&v[0])?, y: residue(&v[1])? })
        })
        .collect()
}

/// Projects symbol `s` and reduces both coordinates into Z_p.
pub(crate) fn project_point_reduced(
    s: &BigInt,
    params: &ProjectiveParams,
    field: &PrimeField,
    index: usize,
) -> Result<ModPoint> {
    let point = project_point(s, params)?;
    let reduce = |r: &Rational| {
        r.reduce_mod(field).map_err(|e| match e {
            Error::NotInvertible { .. } => Error::NonInvertibleDenominator { index },
            other => other,
        })
    };
    Ok(ModPoint { x: reduce(&point.x)?, y: reduce(&point.y)? })
}

pub fn encrypt_mod(plaintext: &[u8], key: &ProjectiveKey) -> Result<CiphertextMod> {
    let field = key.require_field()?;
    let points = plaintext
        .iter()
        .enumerate()
        .map(|(i, &byte)| {
            key.check_symbol(i, byte)?;
            project_point_reduced(&BigInt::from(byte), &key.params, field, i)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CiphertextMod { field: field.clone(), points })
}

/// `(|x'|·y0 − x0·|y'|) / (y0 − |y'|)` in Z_p; `|x'|` directly when `|y'| = 0`.
pub(crate) fn unproject_mod(point: &ModPoint, center: &Center, index: usize) -> Result<FieldElement> {
    let field = point.x.field();
    if point.y.is_zero() {
        return Ok(point.x.clone());
    }
    let x0 = field.elem(&center.x0);
    let y0 = field.elem(&center.y0);
    let num = &point.x * &y0 - &x0 * &point.y;
    let den = &y0 - &point.y;
    let inv = den.inv().map_err(|_| Error::NonInvertibleDenominator { index })?;
    Ok(&num * &inv)
}

pub(crate) fn residue_to_byte(v: &FieldElement, index: usize) -> Result<u8> {
    v.value().to_u8().ok_or_else(|| Error::CorruptCiphertext {
        index,
        detail: format!("decrypts to {}, not a byte", v.value()),
    })
}

pub fn decrypt_mod(ct: &CiphertextMod, center: &Center) -> Result<Vec<u8>> {
    ct.points
        .iter()
        .enumerate()
        .map(|(i, p)| residue_to_byte(&unproject_mod(p, center, i)?, i))
        .collect()
}

/// Whether the point lies on `l` (exact).
pub fn on_line(point: &CipherPoint, params: &ProjectiveParams) -> bool {
    let a = Rational::from_integer(params.a.clone());
    let b = Rational::from_integer(params.b.clone());
    let c = Rational::from_integer(params.c.clone());
    (&a * &point.x + &b * &point.y + c).is_zero()
}

/// Symbols in `[0, alphabet)` whose projection denominator vanishes mod p.
pub fn singular_symbols_mod(params: &ProjectiveParams, field: &PrimeField, alphabet: u32) -> Vec<u32> {
    (0..alphabet)
        .filter(|&s| field.elem(&params.projection_denominator(&BigInt::from(s))).is_zero())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HELLO_CT: &str = "85 13 74 13 | 257 38 111 19 | 239 35 206 35 | 383 56 165 28 | \
        383 56 165 28 | 787 115 678 115 | 13 2 17 3 | 281 41 242 41 | 787 115 678 115 | \
        404 59 348 59 | 383 56 165 28 | 355 52 153 26 | 241 37 210 37";

    fn hello_key() -> ProjectiveKey {
        ProjectiveKey::new(ProjectiveParams::new(5, 6, 2, -3, 4)).unwrap()
    }

    fn frac(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into()).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(ProjectiveKey::new(ProjectiveParams::new(5, 6, 2, -3, 4)).is_ok());
        match ProjectiveKey::new(ProjectiveParams::new(5, 0, 2, -3, 4)) {
            Err(Error::InvalidKey(v)) => assert!(v.contains(&KeyViolation::CenterOnAxis)),
            other => panic!("{other:?}"),
        }
        match ProjectiveKey::new(ProjectiveParams::new(5, 6, 0, 1, 0)) {
            Err(Error::InvalidKey(v)) => assert_eq!(v, vec![KeyViolation::LineIsAxis]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validate_lists_every_violation() {
        // O = (1, 0) on l: x - 1 = 0, and a = 1 makes s = 1 singular
        match ProjectiveKey::new(ProjectiveParams::new(1, 0, 1, 0, -1)) {
            Err(Error::InvalidKey(v)) => {
                assert!(v.contains(&KeyViolation::CenterOnLine));
                assert!(v.contains(&KeyViolation::CenterOnAxis));
                assert!(v.contains(&KeyViolation::SingularSymbol { symbol: 1 }));
            }
            other => panic!("{other:?}"),
        }
        match ProjectiveKey::new(ProjectiveParams::new(1, 1, 0, 0, 3)) {
            Err(Error::InvalidKey(v)) => assert!(v.contains(&KeyViolation::NotALine)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn singular_symbol_detected() {
        // a*x0 - a*s + b*y0 = 0 at s = 5 + (-3*6)/2 = -4: outside the alphabet
        assert!(ProjectiveKey::new(ProjectiveParams::new(5, 6, 2, -3, 4)).is_ok());
        // x0 = 10, y0 = 2, a = 1, b = 1: s = 12 is singular
        let err = ProjectiveKey::new(ProjectiveParams::new(10, 2, 1, 1, 3)).unwrap_err();
        assert_eq!(err, Error::InvalidKey(vec![KeyViolation::SingularSymbol { symbol: 12 }]));
        assert!(err.to_string().contains("s = 12"));
    }

    #[test]
    fn modular_constraints() {
        let p167 = PrimeField::from_u64(167).unwrap();
        let p = ProjectiveParams::new(5, 6, 2, -3, 4);
        assert!(ProjectiveKey::modular(p.clone(), p167.clone(), 128).is_ok());
        let err = ProjectiveKey::modular(p, p167, 256).unwrap_err();
        assert_eq!(err, Error::InvalidKey(vec![KeyViolation::ModulusTooSmall { alphabet: 256 }]));
        // a² + b² = 1 + 4 = 5 ≡ 0 mod 5... use p = 13: 2² + 3² = 13
        let p13 = PrimeField::from_u64(13).unwrap();
        let err = ProjectiveKey::modular(ProjectiveParams::new(1, 5, 2, 3, 1), p13, 4).unwrap_err();
        assert!(matches!(err, Error::InvalidKey(v) if v.contains(&KeyViolation::IsotropicLine)));
    }

    #[test]
    fn project_point_examples() {
        let k = hello_key();
        let p = project_point(&35.into(), k.params()).unwrap();
        assert_eq!((p.x, p.y), (frac(85, 13), frac(74, 13)));
        let p = project_point(&5.into(), k.params()).unwrap();
        assert_eq!((p.x, p.y), (frac(5, 1), frac(14, 3)));
        let p = project_point(&72.into(), k.params()).unwrap();
        assert_eq!((p.x, p.y), (frac(257, 38), frac(111, 19)));
    }

    #[test]
    fn fixed_point_of_line_and_axis() {
        // l meets the X-axis at x = -c/a = 3 for a = 1, c = -3; that symbol maps to itself
        let params = ProjectiveParams::new(7, 4, 1, 2, -3);
        let p = project_point(&3.into(), &params).unwrap();
        assert_eq!((p.x, p.y), (frac(3, 1), frac(0, 1)));
    }

    #[test]
    fn singular_projection_error() {
        let params = ProjectiveParams::new(10, 2, 1, 1, 3);
        let err = project_point(&12.into(), &params).unwrap_err();
        assert_eq!(err, Error::SingularProjection { symbol: 12 });
        assert!(err.is_retriable());
    }

    #[test]
    fn reference_vector_round_trip() {
        let k = hello_key();
        let ct = encrypt_a(b"#Hello world!", &k).unwrap();
        assert_eq!(ct.to_string(), HELLO_CT.split_whitespace().collect::<Vec<_>>().join(" "));
        assert_eq!(decrypt_a(&ct, &k.center()).unwrap(), b"#Hello world!");
        let parsed: CiphertextA = HELLO_CT.parse().unwrap();
        assert_eq!(parsed, ct);
    }

    #[test]
    fn empty_and_single() {
        let k = hello_key();
        assert!(encrypt_a(b"", &k).unwrap().is_empty());
        assert_eq!(encrypt_a(&[35], &k).unwrap().to_string(), "85 13 74 13");
        assert_eq!("".parse::<CiphertextA>().unwrap(), CiphertextA::default());
    }

    #[test]
    fn decrypt_branches() {
        let c = Center { x0: 5.into(), y0: 6.into() };
        let ct = CiphertextA(vec![CipherPoint { x: frac(5, 1), y: frac(14, 3) }]);
        assert_eq!(decrypt_a(&ct, &c).unwrap(), vec![5]);
        let inf = CiphertextA(vec![CipherPoint { x: frac(1, 1), y: frac(6, 1) }]);
        assert_eq!(decrypt_a(&inf, &c), Err(Error::PointAtInfinity { index: 0 }));
        // (7, 3): (7*6 - 5*3)/(6 - 3) = 9
        let ok = CiphertextA(vec![CipherPoint { x: frac(7, 1), y: frac(3, 1) }]);
        assert_eq!(decrypt_a(&ok, &c).unwrap(), vec![9]);
        // (7, 4): (42 - 20)/2 = 11; (7, 5): (42-25)/1 = 17; (1, 2): (6 - 10)/4 = -1
        let neg = CiphertextA(vec![CipherPoint { x: frac(1, 1), y: frac(2, 1) }]);
        assert!(matches!(decrypt_a(&neg, &c), Err(Error::CorruptCiphertext { index: 0, .. })));
    }

    #[test]
    fn malformed_text_rejected() {
        assert!("86 26 74 13".parse::<CiphertextA>().is_err());
        assert!("85 13 74".parse::<CiphertextA>().is_err());
        assert!("85 -13 74 13".parse::<CiphertextA>().is_err());
        assert!("85 x 74 13".parse::<CiphertextA>().is_err());
    }

    #[test]
    fn mod_reference_comparison_vector() {
        let fp = PrimeField::from_u64(167).unwrap();
        let k = ProjectiveKey::modular(ProjectiveParams::new(8, 12, 25, 78, 34), fp.clone(), 128)
            .unwrap();
        let ct = encrypt_mod(b"#Hello world!", &k).unwrap();
        assert_eq!(
            ct.to_string(),
            "106 154 | 24 9 | 22 91 | 31 56 | 31 56 | 146 17 | 20 6 | 36 18 | 146 17 | 165 73 | \
             31 56 | 124 84 | 65 165"
        );
        assert_eq!(decrypt_mod(&ct, &k.center()).unwrap(), b"#Hello world!");
        assert_eq!(CiphertextMod::parse(&ct.to_string(), &fp).unwrap(), ct);
    }

    #[test]
    fn mod_single_byte_matches_field_oracle() {
        let fp = PrimeField::from_u64(167).unwrap();
        let k = ProjectiveKey::modular(ProjectiveParams::new(5, 6, 2, -3, 4), fp.clone(), 128).unwrap();
        let ct = encrypt_mod(&[35], &k).unwrap();
        let inv13 = fp.elem_u64(13).pow(&165u32.into());
        assert_eq!(ct.points[0].x, &fp.elem_u64(85) * &inv13);
        assert_eq!(ct.points[0].y, &fp.elem_u64(74) * &inv13);
        assert!(encrypt_mod(b"", &k).unwrap().points.is_empty());
    }

    #[test]
    fn mod_decrypt_y_zero_branch() {
        let fp = PrimeField::from_u64(167).unwrap();
        let ct = CiphertextMod { field: fp.clone(), points: vec![ModPoint { x: fp.elem_u64(42), y: fp.zero() }] };
        assert_eq!(decrypt_mod(&ct, &Center { x0: 5.into(), y0: 6.into() }).unwrap(), vec![42]);
    }

    #[test]
    fn mod_non_invertible_denominator_is_retriable() {
        // denominator 200 - s - 18 = 182 - s hits 167 at s = 15
        let fp = PrimeField::from_u64(167).unwrap();
        let params = ProjectiveParams::new(200, 6, 1, -3, 4);
        assert_eq!(singular_symbols_mod(&params, &fp, 128), vec![15]);
        let k = ProjectiveKey::modular(params, fp, 128).unwrap();
        let err = encrypt_mod(&[1, 2, 15], &k).unwrap_err();
        assert_eq!(err, Error::NonInvertibleDenominator { index: 2 });
        assert!(err.is_retriable());
    }

    #[test]
    fn mod_encrypt_requires_field() {
        assert!(encrypt_mod(b"a", &hello_key()).is_err());
        let fp = PrimeField::from_u64(167).unwrap();
        let k = ProjectiveKey::modular(ProjectiveParams::new(5, 6, 2, -3, 4), fp, 128).unwrap();
        assert!(encrypt_mod(&[200], &k).is_err());
    }
}
