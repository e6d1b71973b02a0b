//! ElGamal key material and sources of per-group exponents `r`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::One;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::numerics::{FieldElement, PrimeField};

/// `(p, g, x)` with the derived public value `y = g^x mod p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElGamalKey {
    field: PrimeField,
    g: FieldElement,
    x: BigUint,
    y: FieldElement,
}

impl ElGamalKey {
    /// Checks that `g` generates Z_p* and that `2 ≤ x ≤ p - 2`.
    pub fn new(field: PrimeField, g: BigUint, x: BigUint) -> Result<Self> {
        if !field.is_generator(&g)? {
            return Err(Error::param("generator", format!("{g} does not generate Z_{}*", field.modulus())));
        }
        let upper = field.modulus() - 2u32;
        if x < BigUint::from(2u32) || x > upper {
            return Err(Error::param("private exponent", format!("x = {x} is outside [2, {upper}]")));
        }
        let g = field.elem_u(&g);
        let y = g.pow(&x);
        Ok(ElGamalKey { field, g, x, y })
    }

    /// Fresh key with `x` drawn uniformly from `[2, p - 2]`.
    pub fn generate(field: PrimeField, g: BigUint, rng: &mut dyn RngCore) -> Result<Self> {
        let x = rng.gen_biguint_range(&BigUint::from(2u32), &(field.modulus() - 1u32));
        Self::new(field, g, x)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn g(&self) -> &FieldElement {
        &self.g
    }

    pub fn x(&self) -> &BigUint {
        &self.x
    }

    pub fn y(&self) -> &FieldElement {
        &self.y
    }

    /// `c1^x`, the mask `y^r` recovered from `c1 = g^r`.
    pub fn shared_secret(&self, c1: &FieldElement) -> FieldElement {
        c1.pow(&self.x)
    }
}

/// Smallest generator of Z_p*.
pub fn find_generator(field: &PrimeField) -> Result<BigUint> {
    let mut g = BigUint::from(2u32);
    while &g < field.modulus() {
        if field.is_generator(&g)? {
            return Ok(g);
        }
        g += 1u32;
    }
    // p = 2: 1 generates the trivial group
    Ok(BigUint::one())
}

/// Supplies the ElGamal exponent for each group (or symbol).
pub trait ExponentSource {
    fn next_exponent(&mut self, field: &PrimeField) -> Result<BigUint>;
}

/// Replays a fixed list cyclically. Values are only range-checked, so
/// published test vectors with `gcd(r, p - 1) ≠ 1` can be reproduced.
#[derive(Clone, Debug)]
pub struct FixedExponents {
    values: Vec<BigUint>,
    pos: usize,
}

impl FixedExponents {
    pub fn new(values: Vec<BigUint>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("exponents", "empty list"));
        }
        Ok(FixedExponents { values, pos: 0 })
    }

    pub fn from_u64s(values: &[u64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| BigUint::from(v)).collect())
    }
}

impl ExponentSource for FixedExponents {
    fn next_exponent(&mut self, field: &PrimeField) -> Result<BigUint> {
        let r = self.values[self.pos % self.values.len()].clone();
        self.pos += 1;
        check_exponent_range(&r, field)?;
        Ok(r)
    }
}

pub(crate) fn check_exponent_range(r: &BigUint, field: &PrimeField) -> Result<()> {
    let upper = field.modulus() - 2u32;
    if r < &BigUint::from(2u32) || r > &upper {
        return Err(Error::param("exponent", format!("r = {r} is outside [2, {upper}]")));
    }
    Ok(())
}

/// Uniform exponents in `[2, p - 2]` coprime to `p - 1`.
pub struct RandomExponents<R> {
    rng: R,
}

impl<R: RngCore> RandomExponents<R> {
    pub fn new(rng: R) -> Self {
        RandomExponents { rng }
    }
}

impl<R: RngCore> ExponentSource for RandomExponents<R> {
    fn next_exponent(&mut self, field: &PrimeField) -> Result<BigUint> {
        sample_coprime_exponent(&mut self.rng, field)
    }
}

pub(crate) fn sample_coprime_exponent(rng: &mut dyn RngCore, field: &PrimeField) -> Result<BigUint> {
    let order = field.group_order();
    if order <= BigUint::from(3u32) {
        return Err(Error::param("prime", "p is too small to draw exponents from [2, p - 2]"));
    }
    loop {
        let r = rng.gen_biguint_range(&BigUint::from(2u32), &order);
        if r.gcd(&order).is_one() {
            return Ok(r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hello_keys() {
        let f = PrimeField::from_u64(167).unwrap();
        let k = ElGamalKey::new(f, 83u32.into(), 16u32.into()).unwrap();
        assert_eq!(k.y().value(), &58u32.into());
        let f = PrimeField::from_u64(100_043).unwrap();
        let k = ElGamalKey::new(f.clone(), 83u32.into(), 16u32.into()).unwrap();
        assert_eq!(k.y().value(), &11_046u32.into());
        let k = ElGamalKey::new(f, 73u32.into(), 16u32.into()).unwrap();
        assert_eq!(k.y().value(), &72_212u32.into());
    }

    #[test]
    fn smallest_generators() {
        for (p, g) in [(167u64, 5u32), (100_043, 2), (7, 3), (23, 5)] {
            let f = PrimeField::from_u64(p).unwrap();
            assert_eq!(find_generator(&f).unwrap(), BigUint::from(g), "p = {p}");
        }
    }

    #[test]
    fn rejects_bad_parts() {
        let f = PrimeField::from_u64(167).unwrap();
        assert!(ElGamalKey::new(f.clone(), 83u32.into(), 1u32.into()).is_err());
        assert!(ElGamalKey::new(f.clone(), 83u32.into(), 166u32.into()).is_err());
        assert!(ElGamalKey::new(f, 4u32.into(), 16u32.into()).is_err());
    }

    #[test]
    fn shared_secret_matches_mask() {
        let f = PrimeField::from_u64(167).unwrap();
        let k = ElGamalKey::new(f, 83u32.into(), 16u32.into()).unwrap();
        let r = BigUint::from(13u32);
        assert_eq!(k.shared_secret(&k.g().pow(&r)), k.y().pow(&r));
    }

    #[test]
    fn fixed_cycles_and_checks_range() {
        let f = PrimeField::from_u64(167).unwrap();
        let mut s = FixedExponents::from_u64s(&[13, 20]).unwrap();
        let got: Vec<BigUint> = (0..3).map(|_| s.next_exponent(&f).unwrap()).collect();
        assert_eq!(got, vec![13u32.into(), 20u32.into(), 13u32.into()]);
        let mut bad = FixedExponents::from_u64s(&[1]).unwrap();
        assert!(bad.next_exponent(&f).is_err());
        assert!(FixedExponents::new(vec![]).is_err());
    }

    #[test]
    fn random_exponents_are_coprime() {
        let f = PrimeField::from_u64(100_043).unwrap();
        let mut s = RandomExponents::new(ChaCha8Rng::seed_from_u64(1));
        for _ in 0..500 {
            let r = s.next_exponent(&f).unwrap();
            assert!(r >= 2u32.into() && r <= 100_041u32.into());
            assert!(r.gcd(&f.group_order()).is_one());
        }
    }
}
