use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use super::prime::{distinct_prime_factors, is_probable_prime};
use crate::error::{Error, Result};

/// The prime field Z_p. Cloning is cheap; the modulus is shared.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: Arc<BigUint>,
}

impl fmt::Debug for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.p)
    }
}

impl PrimeField {
    /// Builds Z_p after a probabilistic primality check.
    pub fn new(p: BigUint) -> Result<Self> {
        if !is_probable_prime(&p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p: Arc::new(p) })
    }

    pub fn from_u64(p: u64) -> Result<Self> {
        Self::new(BigUint::from(p))
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    /// Order of the multiplicative group, p - 1.
    pub fn group_order(&self) -> BigUint {
        self.p.as_ref() - 1u32
    }

    /// Canonical residue of a signed integer, always in [0, p).
    pub fn elem(&self, v: &BigInt) -> FieldElement {
        let p = BigInt::from_biguint(Sign::Plus, self.p.as_ref().clone());
        let mut r = v % &p;
        if r.sign() == Sign::Minus {
            r += &p;
        }
        FieldElement { value: r.to_biguint().expect("non-negative"), field: self.clone() }
    }

    pub fn elem_u(&self, v: &BigUint) -> FieldElement {
        FieldElement { value: v % self.p.as_ref(), field: self.clone() }
    }

    pub fn elem_u64(&self, v: u64) -> FieldElement {
        self.elem_u(&BigUint::from(v))
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: BigUint::zero(), field: self.clone() }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: BigUint::one(), field: self.clone() }
    }

    /// Whether `g` generates Z_p*. Fails only when p - 1 cannot be factored.
    pub fn is_generator(&self, g: &BigUint) -> Result<bool> {
        let g = g % self.p.as_ref();
        if g.is_zero() {
            return Ok(false);
        }
        let order = self.group_order();
        let factors = distinct_prime_factors(&order).ok_or_else(|| {
            Error::param("generator", "p - 1 could not be factored to verify the generator")
        })?;
        Ok(factors.iter().all(|q| !g.modpow(&(&order / q), &self.p).is_one()))
    }
}

/// A canonical residue in [0, p) tagged with its field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: BigUint,
    field: PrimeField,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.field.p)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

impl FieldElement {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn into_value(self) -> BigUint {
        self.value
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with((&self.value + &other.value) % self.field.modulus()))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        let p = self.field.modulus();
        Ok(self.with((&self.value + p - &other.value) % p))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with((&self.value * &other.value) % self.field.modulus()))
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, exp: &BigUint) -> Self {
        self.with(self.value.modpow(exp, self.field.modulus()))
    }

    /// Power with a signed exponent. Negative exponents go through the
    /// inverse; the exponent is reduced mod p - 1 (Fermat).
    pub fn pow_signed(&self, exp: &BigInt) -> Result<Self> {
        let order = BigInt::from(self.field.group_order());
        let mut e = exp % &order;
        if e.sign() == Sign::Minus {
            if self.is_zero() {
                return Err(self.not_invertible());
            }
            e += &order;
        }
        Ok(self.pow(&e.to_biguint().expect("non-negative")))
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self) -> Result<Self> {
        self.value
            .modinv(self.field.modulus())
            .map(|v| self.with(v))
            .ok_or_else(|| self.not_invertible())
    }

    fn not_invertible(&self) -> Error {
        Error::NotInvertible { value: self.value.clone(), modulus: self.field.modulus().clone() }
    }

    fn with(&self, value: BigUint) -> Self {
        FieldElement { value, field: self.field.clone() }
    }
}

/// base^exp mod p as a canonical residue; exp = 0 gives 1.
pub fn mod_pow(base: &BigInt, exp: &BigUint, field: &PrimeField) -> FieldElement {
    field.elem(base).pow(exp)
}

/// Fermat inverse a^(p-2) mod p.
pub fn mod_inv(a: &FieldElement) -> Result<FieldElement> {
    if a.is_zero() {
        return Err(a.not_invertible());
    }
    let exp = a.field.modulus() - 2u32;
    Ok(a.pow(&exp))
}

/// num * den^(p-2) mod p.
pub fn mod_div(num: &FieldElement, den: &FieldElement) -> Result<FieldElement> {
    num.same_field(den)?;
    Ok(num * &mod_inv(den)?)
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&FieldElement> for &FieldElement {
            type Output = FieldElement;
            /// Panics when the operands live in different fields; use the
            /// `try_*` form when that is not guaranteed by construction.
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                self.$checked(rhs).expect("field element operands from different fields")
            }
        }
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                (&self).$method(rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        self.field.zero() - self
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}
