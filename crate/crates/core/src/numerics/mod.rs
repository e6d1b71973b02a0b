//! Exact rational arithmetic and prime-field arithmetic shared by every scheme.

mod field;
mod prime;
mod rational;

pub use field::{mod_div, mod_inv, mod_pow, FieldElement, PrimeField};
pub use prime::{distinct_prime_factors, is_probable_prime};
pub use rational::{rational_reduce, Rational};
