//! Cross-ratio feature values over central-projection and ElGamal ciphertexts.
//!
//! A data owner encrypts bytes, derives a sequence of cross-ratios from each
//! group of four symbols and publishes its SHA-256 digest. A verifier holding
//! only the ciphertext recomputes the cross-ratios from it and compares
//! digests. [`protocol`] ties the schemes together; [`cryptanalysis`] holds
//! the known attacks.

pub mod cryptanalysis;
pub mod crossratio;
pub mod elgamal;
pub mod masked;
pub mod native;
pub mod numerics;
pub mod projective;
pub mod protocol;

mod error;

pub use error::{Error, Result};
