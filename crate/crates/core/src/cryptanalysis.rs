//! Attacks on the reference schemes.
//!
//! Exact central projection leaks a lot: every ciphertext point lies on `l`,
//! so two points give the line; one known plaintext pair pins the center to
//! a line, and integrality of the remaining decryptions pins it down. The
//! cross-ratio is invariant under affine maps of the plaintext, so shifted or
//! scaled groups collide, and over a small alphabet every feature value can be
//! tabulated.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::Serialize;

use crate::crossratio::{cr_line, cr_line_mod, GROUP};
use crate::error::{Error, Result};
use crate::native::{kf_bundle, Encoding, KfBundle, NativeCiphertext};
use crate::numerics::{FieldElement, PrimeField, Rational};
use crate::projective::{encrypt_a, CipherPoint, CiphertextA, Center, ProjectiveKey, ProjectiveParams};
use crate::protocol::{Payload, VerificationBundle};

/// Outcome of one attack run.
#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub attack: String,
    pub success: bool,
    /// Recovered key fragment, by parameter name.
    pub recovered: Option<BTreeMap<String, String>>,
    pub work_count: u64,
    pub work_bound: Option<u64>,
    pub elapsed_secs: f64,
    pub details: Vec<String>,
}

impl AttackReport {
    fn new(attack: &str, started: Instant) -> Self {
        AttackReport {
            attack: attack.into(),
            success: false,
            recovered: None,
            work_count: 0,
            work_bound: None,
            elapsed_secs: started.elapsed().as_secs_f64(),
            details: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

impl fmt::Display for AttackReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "attack: {}", self.attack)?;
        writeln!(f, "success: {}", self.success)?;
        if let Some(r) = &self.recovered {
            let parts: Vec<String> = r.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(f, "recovered: {}", parts.join(" "))?;
        }
        match self.work_bound {
            Some(b) => writeln!(f, "work: {} (bound {b})", self.work_count)?,
            None => writeln!(f, "work: {}", self.work_count)?,
        }
        write!(f, "elapsed: {:.3}s", self.elapsed_secs)?;
        for d in &self.details {
            write!(f, "\n{d}")?;
        }
        Ok(())
    }
}

/// `a·x + b·y + c = 0` over the rationals.
#[derive(Clone, Debug)]
struct Line {
    a: Rational,
    b: Rational,
    c: Rational,
}

impl Line {
    fn through(p: (&Rational, &Rational), q: (&Rational, &Rational)) -> Line {
        let (x1, y1) = p;
        let (x2, y2) = q;
        Line { a: y2 - y1, b: x1 - x2, c: x2 * y1 - x1 * y2 }
    }

    fn intersect(&self, o: &Line) -> Option<(Rational, Rational)> {
        let det = &self.a * &o.b - &o.a * &self.b;
        if det.is_zero() {
            return None;
        }
        let x = (&self.b * &o.c - &o.b * &self.c).checked_div(&det).ok()?;
        let y = (&self.c * &o.a - &o.c * &self.a).checked_div(&det).ok()?;
        Some((x, y))
    }

    fn contains(&self, x: &Rational, y: &Rational) -> bool {
        (&self.a * x + &self.b * y + &self.c).is_zero()
    }
}

/// The line through the ciphertext points as coprime integers `(a, b, c)`
/// with `a > 0`, or `a = 0` and `b > 0`.
pub fn coa_recover_line(ct: &CiphertextA) -> Result<(BigInt, BigInt, BigInt)> {
    let first = ct.0.first().ok_or_else(|| Error::InsufficientData("empty ciphertext".into()))?;
    let second = ct
        .0
        .iter()
        .find(|p| *p != first)
        .ok_or_else(|| Error::InsufficientData("all ciphertext points coincide".into()))?;
    let line = Line::through((&first.x, &first.y), (&second.x, &second.y));
    if let Some(i) = ct.0.iter().position(|p| !line.contains(&p.x, &p.y)) {
        return Err(Error::MalformedCiphertext(format!("point {i} is not on the line of the others")));
    }
    let denoms = [&line.a, &line.b, &line.c].map(|r| r.denom().clone());
    let lcm = denoms.iter().fold(BigInt::one(), |acc, d| acc.lcm(d));
    let mut ints = [&line.a, &line.b, &line.c].map(|r| r.numer() * (&lcm / r.denom()));
    let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    for v in &mut ints {
        *v /= &g;
    }
    if ints[0].is_negative() || (ints[0].is_zero() && ints[1].is_negative()) {
        for v in &mut ints {
            *v = -&*v;
        }
    }
    let [a, b, c] = ints;
    Ok((a, b, c))
}

fn integer_center(o: &(Rational, Rational)) -> Option<Center> {
    let x0 = o.0.to_integer()?;
    let y0 = o.1.to_integer()?;
    (!y0.is_zero()).then_some(Center { x0, y0 })
}

/// Whether every point decrypts to an integer in `[0, alphabet)` under `center`.
fn decrypts_in_range(points: &[CipherPoint], center: &Center, alphabet: u32) -> bool {
    let x0 = Rational::from_integer(center.x0.clone());
    let y0 = Rational::from_integer(center.y0.clone());
    let n = BigInt::from(alphabet);
    points.iter().all(|p| {
        let den = &y0 - &p.y;
        let Ok(x) = (&p.x * &y0 - &x0 * &p.y).checked_div(&den) else { return false };
        match x.to_integer() {
            Some(v) => !v.is_negative() && v < n,
            None => false,
        }
    })
}

fn axis_point(u: u32) -> (Rational, Rational) {
    (Rational::from_integer(u.into()), Rational::zero())
}

/// Result of a center search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CenterSearch {
    pub candidates: Vec<Center>,
    pub work: u64,
}

impl CenterSearch {
    /// The center when the search left exactly one candidate.
    pub fn unique(&self) -> Option<&Center> {
        match self.candidates.as_slice() {
            [c] => Some(c),
            _ => None,
        }
    }
}

/// Known-plaintext recovery of `(x0, y0)`.
///
/// The center lies on the line through each known `(s, 0)` and its image. Two
/// usable pairs intersect directly. With a single pair, the line is crossed
/// with the line through each possible preimage `(u, 0)` of another ciphertext
/// point (`alphabet` tries); a candidate survives when it is an integer point
/// off the X-axis and every ciphertext point decrypts into the alphabet.
pub fn kpa_recover_center(
    pairs: &[(u8, CipherPoint)],
    ct: &CiphertextA,
    alphabet: u32,
) -> Result<CenterSearch> {
    let usable: Vec<(Line, &CipherPoint)> = pairs
        .iter()
        .filter(|(_, p)| !p.y.is_zero())
        .map(|(s, p)| {
            let (sx, sy) = axis_point(u32::from(*s));
            (Line::through((&sx, &sy), (&p.x, &p.y)), p)
        })
        .collect();
    let Some((first, known)) = usable.first() else {
        return Err(Error::NeedsMorePairs(
            "every known ciphertext point lies on the X-axis, which carries no center information".into(),
        ));
    };
    let mut work = 0u64;
    for (other, _) in usable.iter().skip(1) {
        work += 1;
        if let Some(center) = first.intersect(other).as_ref().and_then(integer_center) {
            if decrypts_in_range(&ct.0, &center, alphabet) {
                return Ok(CenterSearch { candidates: vec![center], work });
            }
        }
    }
    let Some(probe) = ct.0.iter().find(|p| *p != *known && !p.y.is_zero()) else {
        return Err(Error::NeedsMorePairs(
            "the ciphertext has no second point off the X-axis to pin the center".into(),
        ));
    };
    let mut candidates = Vec::new();
    for u in 0..alphabet {
        work += 1;
        let (ux, uy) = axis_point(u);
        let line = Line::through((&ux, &uy), (&probe.x, &probe.y));
        if let Some(center) = first.intersect(&line).as_ref().and_then(integer_center) {
            if decrypts_in_range(&ct.0, &center, alphabet) && !candidates.contains(&center) {
                candidates.push(center);
            }
        }
    }
    Ok(CenterSearch { candidates, work })
}

/// Two ciphertext points over a common denominator `m`.
struct Scaled {
    m: i128,
    px: i128,
    py: i128,
    qx: i128,
    qy: i128,
}

impl Scaled {
    fn new(p: &CipherPoint, q: &CipherPoint) -> Option<Scaled> {
        let m = [&p.x, &p.y, &q.x, &q.y].iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let s = |r: &Rational| (r.numer() * (&m / r.denom())).to_i128();
        Some(Scaled { m: m.to_i128()?, px: s(&p.x)?, py: s(&p.y)?, qx: s(&q.x)?, qy: s(&q.y)? })
    }

    /// Integer intersection of the lines through `(u, 0), P` and `(v, 0), Q`
    /// with `y0 != 0`. The outer `None` reports overflow.
    fn center(&self, u: i128, v: i128) -> Option<Option<(i128, i128)>> {
        let pu = self.px.checked_sub(u.checked_mul(self.m)?)?;
        let qv = self.qx.checked_sub(v.checked_mul(self.m)?)?;
        let den = self.qy.checked_mul(pu)?.checked_sub(self.py.checked_mul(qv)?)?;
        if den == 0 || u == v {
            return Some(None);
        }
        let y_num = self.py.checked_mul(self.qy)?.checked_mul(v - u)?;
        if y_num % den != 0 {
            return Some(None);
        }
        let x_num = self.qy.checked_mul(pu)?.checked_mul(v - u)?;
        if x_num % den != 0 {
            return Some(None);
        }
        Some(Some((u + x_num / den, y_num / den)))
    }
}

/// Ciphertext-only search over plaintext guesses for two distinct points;
/// at most `alphabet²` center evaluations.
pub fn coa_brute_force(ct: &CiphertextA, alphabet: u32) -> Result<(CenterSearch, (BigInt, BigInt, BigInt))> {
    let line = coa_recover_line(ct)?;
    let mut distinct: Vec<&CipherPoint> = Vec::new();
    for p in ct.0.iter().filter(|p| !p.y.is_zero()) {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    let [p, q, ..] = distinct.as_slice() else {
        return Err(Error::InsufficientData("need two distinct ciphertext points off the X-axis".into()));
    };
    let scaled = Scaled::new(p, q);
    let exact = |u: u32, v: u32| {
        let (ux, uy) = axis_point(u);
        let (vx, vy) = axis_point(v);
        let lp = Line::through((&ux, &uy), (&p.x, &p.y));
        let lq = Line::through((&vx, &vy), (&q.x, &q.y));
        lp.intersect(&lq).as_ref().and_then(integer_center)
    };
    let mut work = 0u64;
    let mut candidates = Vec::new();
    for u in 0..alphabet {
        for v in 0..alphabet {
            work += 1;
            let fast = scaled.as_ref().and_then(|s| s.center(i128::from(u), i128::from(v)));
            let center = match fast {
                Some(hit) => hit.map(|(x0, y0)| Center { x0: x0.into(), y0: y0.into() }),
                None => exact(u, v),
            };
            if let Some(center) = center {
                if decrypts_in_range(&ct.0, &center, alphabet) && !candidates.contains(&center) {
                    candidates.push(center);
                }
            }
        }
    }
    Ok((CenterSearch { candidates, work }, line))
}

fn center_map(c: &Center) -> BTreeMap<String, String> {
    BTreeMap::from([("x0".to_string(), c.x0.to_string()), ("y0".to_string(), c.y0.to_string())])
}

/// Report wrapper for [`coa_recover_line`].
pub fn coa_line_report(ct: &CiphertextA) -> AttackReport {
    let started = Instant::now();
    let result = coa_recover_line(ct);
    let mut r = AttackReport::new("coa-line", started);
    r.work_count = ct.len() as u64;
    match result {
        Ok((a, b, c)) => {
            r.success = true;
            r.recovered = Some(BTreeMap::from([
                ("a".to_string(), a.to_string()),
                ("b".to_string(), b.to_string()),
                ("c".to_string(), c.to_string()),
            ]));
        }
        Err(e) => r.details.push(e.to_string()),
    }
    r.elapsed_secs = started.elapsed().as_secs_f64();
    r
}

/// Report wrapper for [`kpa_recover_center`]; success means a unique candidate.
pub fn kpa_report(pairs: &[(u8, CipherPoint)], ct: &CiphertextA, alphabet: u32) -> AttackReport {
    let started = Instant::now();
    let result = kpa_recover_center(pairs, ct, alphabet);
    let mut r = AttackReport::new("kpa", started);
    r.work_bound = Some(u64::from(alphabet) + pairs.len() as u64);
    match result {
        Ok(search) => {
            r.work_count = search.work;
            r.details.push(format!("candidates: {}", search.candidates.len()));
            if let Some(c) = search.unique() {
                r.success = true;
                r.recovered = Some(center_map(c));
            }
        }
        Err(e) => r.details.push(e.to_string()),
    }
    r.elapsed_secs = started.elapsed().as_secs_f64();
    r
}

/// Report wrapper for [`coa_brute_force`]. Without the true key the attacker
/// only learns the candidate set; `truth` marks success when it is included.
pub fn coa_brute_report(ct: &CiphertextA, alphabet: u32, truth: Option<&Center>) -> AttackReport {
    let started = Instant::now();
    let result = coa_brute_force(ct, alphabet);
    let mut r = AttackReport::new("coa-brute", started);
    r.work_bound = Some(u64::from(alphabet) * u64::from(alphabet));
    match result {
        Ok((search, (a, b, c))) => {
            r.work_count = search.work;
            r.details.push(format!("line: ({a}, {b}, {c})"));
            r.details.push(format!("candidates: {}", search.candidates.len()));
            for cand in search.candidates.iter().take(16) {
                r.details.push(format!("  center ({}, {})", cand.x0, cand.y0));
            }
            r.success = match truth {
                Some(t) => search.candidates.contains(t),
                None => search.unique().is_some(),
            };
            if let Some(c) = truth.filter(|t| search.candidates.contains(t)).or(search.unique()) {
                r.recovered = Some(center_map(c));
            }
        }
        Err(e) => {
            r.details.push(format!("underdetermined: {e}"));
            r.details.push(format!("every center on a line through any of the {alphabet} axis points fits"));
        }
    }
    r.elapsed_secs = started.elapsed().as_secs_f64();
    r
}

/// Affine image used to forge a colliding group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AffineForgery {
    Shift(BigInt),
    Scale(BigInt),
}

/// A colliding group and the cross-ratio it shares with the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Collision {
    pub original: [BigInt; 4],
    pub forged: [BigInt; 4],
    pub map: AffineForgery,
    pub cross_ratio: String,
    /// The original group was already degenerate (cross-ratio 1 by convention).
    pub degenerate: bool,
}

fn is_degenerate(x: &[BigInt; 4], field: Option<&PrimeField>) -> bool {
    let den = (&x[0] - &x[3]) * (&x[1] - &x[2]);
    match field {
        Some(f) => f.elem(&den).is_zero(),
        None => den.is_zero(),
    }
}

/// Applies the shift or scale; modular results are reduced into `[0, p)`.
pub fn forge_collision(x: &[BigInt; 4], map: AffineForgery, field: Option<&PrimeField>) -> Result<Collision> {
    let forged = match &map {
        AffineForgery::Shift(t) => x.clone().map(|v| v + t),
        AffineForgery::Scale(s) => x.clone().map(|v| v * s),
    };
    let forged = match field {
        Some(f) => forged.map(|v| BigInt::from(f.elem(&v).into_value())),
        None => forged,
    };
    if &forged == x {
        return Err(Error::param("forgery", "the map leaves the group unchanged"));
    }
    let (before, after) = match field {
        Some(f) => (cr_line_mod(x, f).to_string(), cr_line_mod(&forged, f).to_string()),
        None => (cr_line(x).square().to_string(), cr_line(&forged).square().to_string()),
    };
    debug_assert_eq!(before, after);
    if before != after {
        return Err(Error::param("forgery", "affine image changed the cross-ratio"));
    }
    Ok(Collision { original: x.clone(), degenerate: is_degenerate(x, field), forged, map, cross_ratio: before })
}

/// Smallest positive shift keeping every byte of the group in `[0, 256)`.
pub fn byte_shift(group: &[u8; 4]) -> Option<i32> {
    let lo = i32::from(*group.iter().min().expect("four bytes"));
    let hi = i32::from(*group.iter().max().expect("four bytes"));
    if hi < 255 {
        Some(1)
    } else if lo > 0 {
        Some(-1)
    } else {
        None
    }
}

/// Replaces group `n` of `plaintext` by its shifted image and re-encrypts the
/// whole message under an attacker-chosen key, keeping the owner's digest.
/// Returns the forged plaintext with the forged bundle.
pub fn forge_projective_bundle(
    bundle: &VerificationBundle,
    plaintext: &[u8],
    group: usize,
    attacker_key: &ProjectiveKey,
) -> Result<(Vec<u8>, VerificationBundle)> {
    let forged = shifted_plaintext(plaintext, group)?;
    let ct = encrypt_a(&forged, attacker_key)?;
    let mut out = bundle.clone();
    out.ciphertext = Payload::Projective(ct);
    Ok((forged, out))
}

fn shifted_plaintext(plaintext: &[u8], group: usize) -> Result<Vec<u8>> {
    let start = group * GROUP;
    let g: [u8; 4] = plaintext
        .get(start..start + GROUP)
        .and_then(|s| s.try_into().ok())
        .ok_or_else(|| Error::param("forgery", format!("no full group {group}")))?;
    let t = byte_shift(&g).ok_or_else(|| Error::param("forgery", "group spans the whole byte range"))?;
    let mut forged = plaintext.to_vec();
    for b in &mut forged[start..start + GROUP] {
        *b = (i32::from(*b) + t) as u8;
    }
    Ok(forged)
}

/// Public values an outsider may know about a native key.
#[derive(Clone, Debug)]
pub struct PublicElGamal {
    pub g: FieldElement,
    pub y: FieldElement,
}

/// The same forgery against a native bundle: the attacker re-encrypts the
/// shifted message under the public `y` with its own exponents and common
/// factors, and keeps the owner's digest. Without the verifier's random
/// array the forged cross-ratios no longer match.
pub fn forge_native_bundle(
    bundle: &VerificationBundle,
    plaintext: &[u8],
    group: usize,
    public: &PublicElGamal,
    encoding: Encoding,
    rng: &mut dyn RngCore,
) -> Result<(Vec<u8>, VerificationBundle)> {
    use num_bigint::RandBigInt;
    let field = public.y.field().clone();
    let forged = shifted_plaintext(plaintext, group)?;
    let values = crate::native::encode(&forged, encoding, &field)?;
    let order = field.group_order();
    let exps: Vec<BigUint> = values
        .iter()
        .map(|_| rng.gen_biguint_range(&BigUint::from(2u32), &(&order - 1u32)))
        .collect();
    let c2 = values.iter().zip(&exps).map(|(m, r)| m * &public.y.pow(r)).collect();
    let c1 = exps.iter().map(|r| public.g.pow(r)).collect();
    let groups = exps
        .chunks_exact(GROUP)
        .map(|r| {
            let kf = rng.gen_biguint_below(&order);
            kf_bundle([&r[0], &r[1], &r[2], &r[3]], &kf, &public.y, None)
        })
        .collect();
    let mut out = bundle.clone();
    out.ciphertext = Payload::Native(NativeCiphertext { field, c2, c1 });
    out.aux = Some(KfBundle { groups });
    Ok((forged, out))
}

/// Ordered 4-tuples of distinct symbols: `n(n-1)(n-2)(n-3)`.
pub fn dictionary_count(n: u64) -> u128 {
    if n < 4 {
        return 0;
    }
    let n = u128::from(n);
    n * (n - 1) * (n - 2) * (n - 3)
}

/// Bytes per stored dictionary entry.
pub const DICTIONARY_ENTRY_BYTES: u128 = 4;

/// Squared cross-ratio residue of every ordered 4-tuple of distinct symbols,
/// stored in lexicographic tuple order.
#[derive(Clone, Debug)]
pub struct Dictionary {
    pub n: u32,
    pub p: u32,
    pub values: Vec<u32>,
}

/// Preimage statistics of a dictionary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Multiplicity {
    pub distinct_values: u64,
    pub max_preimages: u64,
    pub mean_preimages: f64,
}

impl Dictionary {
    /// Decodes the tuple stored at `index`.
    pub fn tuple_at(&self, mut index: usize) -> [u32; 4] {
        let n = self.n as usize;
        let sizes = [(n - 1) * (n - 2) * (n - 3), (n - 2) * (n - 3), n - 3, 1];
        let mut used: Vec<u32> = Vec::with_capacity(4);
        let mut out = [0u32; 4];
        for (k, size) in sizes.iter().enumerate() {
            let mut rank = index / size;
            index %= size;
            let v = (0..self.n)
                .filter(|v| !used.contains(v))
                .find(|_| {
                    let hit = rank == 0;
                    rank = rank.wrapping_sub(1);
                    hit
                })
                .expect("rank within range");
            used.push(v);
            out[k] = v;
        }
        out
    }

    /// Every tuple whose cross-ratio equals `value`.
    pub fn preimages(&self, value: u32) -> Vec<[u32; 4]> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == value)
            .map(|(i, _)| self.tuple_at(i))
            .collect()
    }

    pub fn multiplicity(&self) -> Multiplicity {
        let mut sorted = self.values.clone();
        sorted.sort_unstable();
        let mut distinct = 0u64;
        let mut max = 0u64;
        let mut run = 0u64;
        for (i, v) in sorted.iter().enumerate() {
            if i > 0 && sorted[i - 1] == *v {
                run += 1;
            } else {
                distinct += 1;
                run = 1;
            }
            max = max.max(run);
        }
        let mean = if distinct == 0 { 0.0 } else { sorted.len() as f64 / distinct as f64 };
        Multiplicity { distinct_values: distinct, max_preimages: max, mean_preimages: mean }
    }
}

/// Enumerates the dictionary for alphabet `n` mod `p`, refusing when the
/// table would exceed `budget_bytes`.
pub fn hfv_dictionary(p: &PrimeField, n: u32, budget_bytes: u128) -> Result<Dictionary> {
    let entries = dictionary_count(u64::from(n));
    let bytes = entries * DICTIONARY_ENTRY_BYTES;
    if bytes > budget_bytes {
        return Err(Error::BudgetExceeded { entries, bytes, budget: budget_bytes });
    }
    let pm = p
        .modulus()
        .to_u32()
        .ok_or_else(|| Error::param("prime", "dictionary residues are stored as u32; p must be below 2^32"))?;
    if n < 4 {
        return Ok(Dictionary { n, p: pm, values: Vec::new() });
    }
    let pu = u64::from(pm);
    let max_d = i64::from(n - 1) * i64::from(n - 1);
    let residue = |v: i64| -> u64 { v.rem_euclid(pu as i64) as u64 };
    // inverse of every possible denominator value, 0 marking non-invertible
    let inverses: Vec<u64> = (-max_d..=max_d)
        .map(|d| {
            let r = residue(d);
            if r == 0 {
                0
            } else {
                BigUint::from(r).modpow(&BigUint::from(pu - 2), &BigUint::from(pu)).to_u64().expect("below p")
            }
        })
        .collect();
    let mut values = Vec::with_capacity(entries as usize);
    let n = i64::from(n);
    for x1 in 0..n {
        for x2 in (0..n).filter(|&v| v != x1) {
            for x3 in (0..n).filter(|&v| v != x1 && v != x2) {
                for x4 in (0..n).filter(|&v| v != x1 && v != x2 && v != x3) {
                    let num = residue((x1 - x3) * (x2 - x4));
                    let inv = inverses[((x1 - x4) * (x2 - x3) + max_d) as usize];
                    let v = if inv == 0 {
                        1
                    } else {
                        let cr = num * inv % pu;
                        cr * cr % pu
                    };
                    values.push(v as u32);
                }
            }
        }
    }
    Ok(Dictionary { n: n as u32, p: pm, values })
}

/// Report wrapper for [`hfv_dictionary`].
pub fn dictionary_report(p: &PrimeField, n: u32, budget_bytes: u128) -> AttackReport {
    let started = Instant::now();
    let mut r = AttackReport::new("dictionary", started);
    let count = dictionary_count(u64::from(n));
    r.details.push(format!("tuples: {count}"));
    r.work_bound = u64::try_from(count).ok();
    match hfv_dictionary(p, n, budget_bytes) {
        Ok(d) => {
            r.success = true;
            r.work_count = d.values.len() as u64;
            let m = d.multiplicity();
            r.details.push(format!("distinct cross-ratio values: {}", m.distinct_values));
            r.details.push(format!("max preimages per value: {}", m.max_preimages));
            r.details.push(format!("mean preimages per value: {:.2}", m.mean_preimages));
        }
        Err(e) => r.details.push(format!("refused: {e}")),
    }
    r.elapsed_secs = started.elapsed().as_secs_f64();
    r
}

/// Report wrapper for [`forge_collision`].
pub fn collision_report(x: &[BigInt; 4], map: AffineForgery, field: Option<&PrimeField>) -> AttackReport {
    let started = Instant::now();
    let mut r = AttackReport::new("collide", started);
    r.work_count = 1;
    match forge_collision(x, map, field) {
        Ok(c) => {
            r.success = true;
            let join = |v: &[BigInt; 4]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
            r.details.push(format!("original: {}", join(&c.original)));
            r.details.push(format!("forged: {}", join(&c.forged)));
            r.details.push(format!("shared cross-ratio: {}", c.cross_ratio));
            if c.degenerate {
                r.details.push("group is degenerate: its cross-ratio is 1 by convention, no forgery needed".into());
            }
        }
        Err(e) => r.details.push(e.to_string()),
    }
    r.elapsed_secs = started.elapsed().as_secs_f64();
    r
}

/// The key an attacker would try first when it holds none.
pub fn attacker_key(rng: &mut dyn RngCore) -> ProjectiveKey {
    use rand::Rng;
    loop {
        let mut v = || i64::from(rng.gen_range(-40i32..40));
        let params = ProjectiveParams::new(v(), v(), v(), v(), v());
        if let Ok(k) = ProjectiveKey::new(params) {
            return k;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projective::encrypt_a;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MSG: &[u8] = b"#Hello world!";

    fn hello() -> (ProjectiveKey, CiphertextA) {
        let k = ProjectiveKey::new(ProjectiveParams::new(5, 6, 2, -3, 4)).unwrap();
        let ct = encrypt_a(MSG, &k).unwrap();
        (k, ct)
    }

    fn b4(x: [i64; 4]) -> [BigInt; 4] {
        x.map(BigInt::from)
    }

    #[test]
    fn line_from_reference_ciphertext() {
        let (_, ct) = hello();
        assert_eq!(coa_recover_line(&ct).unwrap(), (2.into(), (-3).into(), 4.into()));
    }

    #[test]
    fn line_vertical_and_identical() {
        let pt = |x: i64, y: i64| CipherPoint { x: x.into(), y: y.into() };
        let vertical = CiphertextA(vec![pt(3, 1), pt(3, 7)]);
        assert_eq!(coa_recover_line(&vertical).unwrap(), (1.into(), 0.into(), (-3).into()));
        let horizontal = CiphertextA(vec![pt(1, 4), pt(9, 4)]);
        assert_eq!(coa_recover_line(&horizontal).unwrap(), (0.into(), 1.into(), (-4).into()));
        let same = CiphertextA(vec![pt(1, 4), pt(1, 4)]);
        assert!(matches!(coa_recover_line(&same), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn line_random_keys() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let k = attacker_key(&mut rng);
            let msg: Vec<u8> = (0..8).map(|_| rng.gen()).collect();
            let ct = encrypt_a(&msg, &k).unwrap();
            let Ok((a, b, c)) = coa_recover_line(&ct) else { continue };
            let p = k.params();
            // proportional: cross products vanish
            assert_eq!(&a * &p.b, &b * &p.a);
            assert_eq!(&a * &p.c, &c * &p.a);
            assert_eq!(&b * &p.c, &c * &p.b);
        }
    }

    #[test]
    fn kpa_single_pair_hello() {
        let (_, ct) = hello();
        let pair = (35u8, ct.0[0].clone());
        let s = kpa_recover_center(&[pair], &ct, 256).unwrap();
        assert_eq!(s.unique(), Some(&Center { x0: 5.into(), y0: 6.into() }));
        assert!(s.work <= 256);
    }

    #[test]
    fn kpa_axis_point_needs_more_pairs() {
        // for a = 1, c = -3 the symbol 3 is its own image on the X-axis
        let k = ProjectiveKey::new(ProjectiveParams::new(5, 6, 1, 300, -3)).unwrap();
        let ct = encrypt_a(&[3, 10, 20], &k).unwrap();
        let err = kpa_recover_center(&[(3, ct.0[0].clone())], &ct, 256).unwrap_err();
        assert!(matches!(err, Error::NeedsMorePairs(_)));
    }

    #[test]
    fn kpa_two_pairs() {
        let (_, ct) = hello();
        let s = kpa_recover_center(&[(35, ct.0[0].clone()), (72, ct.0[1].clone())], &ct, 256).unwrap();
        assert_eq!(s.unique(), Some(&Center { x0: 5.into(), y0: 6.into() }));
        assert_eq!(s.work, 1);
    }

    #[test]
    fn brute_force_hello() {
        let (_, ct) = hello();
        let (s, line) = coa_brute_force(&ct, 256).unwrap();
        assert_eq!(line, (2.into(), (-3).into(), 4.into()));
        assert!(s.work <= 65_536);
        assert!(s.candidates.contains(&Center { x0: 5.into(), y0: 6.into() }));
        let rep = coa_brute_report(&ct, 256, Some(&Center { x0: 5.into(), y0: 6.into() }));
        assert!(rep.success);
    }

    #[test]
    fn integer_intersection_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let k = attacker_key(&mut rng);
            let ct = encrypt_a(&[rng.gen(), rng.gen()], &k).unwrap();
            let (p, q) = (&ct.0[0], &ct.0[1]);
            if p == q || p.y.is_zero() || q.y.is_zero() {
                continue;
            }
            let s = Scaled::new(p, q).unwrap();
            for _ in 0..50 {
                let (u, v) = (rng.gen_range(0..256u32), rng.gen_range(0..256u32));
                let (ux, uy) = axis_point(u);
                let (vx, vy) = axis_point(v);
                let exact = Line::through((&ux, &uy), (&p.x, &p.y))
                    .intersect(&Line::through((&vx, &vy), (&q.x, &q.y)))
                    .as_ref()
                    .and_then(integer_center);
                let fast = s.center(u.into(), v.into()).unwrap().map(|(x0, y0)| Center { x0: x0.into(), y0: y0.into() });
                assert_eq!(fast, exact);
            }
        }
    }

    #[test]
    fn brute_force_two_identical_bytes() {
        let (k, _) = hello();
        let ct = encrypt_a(&[65, 65], &k).unwrap();
        assert!(coa_brute_force(&ct, 256).is_err());
        let rep = coa_brute_report(&ct, 256, None);
        assert!(!rep.success);
        assert!(rep.details.iter().any(|d| d.contains("underdetermined")));
    }

    #[test]
    fn collisions() {
        let c = forge_collision(&b4([35, 72, 101, 108]), AffineForgery::Shift(1.into()), None).unwrap();
        assert_eq!(c.forged, b4([36, 73, 102, 109]));
        assert_eq!(cr_line(&c.forged), Rational::new(2376.into(), 2117.into()).unwrap());
        let f = PrimeField::from_u64(167).unwrap();
        let c = forge_collision(&b4([35, 72, 101, 108]), AffineForgery::Scale(2.into()), Some(&f)).unwrap();
        assert_eq!(c.cross_ratio, "99");
        assert_eq!(c.forged, b4([70, 144, 35, 49]));
        let d = forge_collision(&b4([111, 32, 119, 111]), AffineForgery::Shift(1.into()), None).unwrap();
        assert!(d.degenerate);
        assert!(forge_collision(&b4([1, 2, 3, 4]), AffineForgery::Scale(1.into()), None).is_err());
    }

    #[test]
    fn dictionary_small() {
        assert_eq!(dictionary_count(256), 4_195_023_360);
        assert_eq!(dictionary_count(64), 15_249_024);
        assert_eq!(dictionary_count(4), 24);
        let f = PrimeField::from_u64(100_043).unwrap();
        let d = hfv_dictionary(&f, 4, 1 << 20).unwrap();
        assert_eq!(d.values.len(), 24);
        // every stored value agrees with the direct computation
        for (i, v) in d.values.iter().enumerate() {
            let t = d.tuple_at(i);
            let x = t.map(BigInt::from);
            assert_eq!(cr_line_mod(&x, &f).value(), &BigUint::from(*v), "{t:?}");
        }
        let d = hfv_dictionary(&f, 9, 1 << 20).unwrap();
        assert_eq!(d.tuple_at(0), [0, 1, 2, 3]);
        assert_eq!(d.tuple_at(d.values.len() - 1), [8, 7, 6, 5]);
        let sample = d.tuple_at(777);
        assert_eq!(cr_line_mod(&sample.map(BigInt::from), &f).value(), &BigUint::from(d.values[777]));
        // the orbit of a value includes its affine images
        let pre = d.preimages(d.values[0]);
        assert!(pre.contains(&[1, 2, 3, 4]));
        let m = d.multiplicity();
        assert!(m.max_preimages >= 2);
    }

    #[test]
    fn dictionary_budget() {
        let f = PrimeField::from_u64(100_043).unwrap();
        match hfv_dictionary(&f, 256, 256 << 20) {
            Err(Error::BudgetExceeded { entries, bytes, .. }) => {
                assert_eq!(entries, 4_195_023_360);
                assert_eq!(bytes, 4 * 4_195_023_360);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reports_render() {
        let (_, ct) = hello();
        let r = coa_line_report(&ct);
        assert!(r.to_string().contains("a=2 b=-3 c=4"));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["attack"], "coa-line");
        assert_eq!(json["success"], true);
    }
}
