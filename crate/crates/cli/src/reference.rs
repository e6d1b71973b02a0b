//! Fixed keys and randomness that reproduce the published worked examples.

use fht_core::native::Encoding;
use fht_core::projective::ProjectiveParams;
use fht_core::protocol::{KeySpec, SchemeId};

pub const MESSAGE: &[u8] = b"#Hello world!";

/// Masked schemes: one exponent for every group.
pub const MASK_R: u64 = 13;

/// Per-symbol exponents of the native schemes, cycled.
pub const NATIVE_R: [u64; 13] = [11, 31, 23, 53, 42, 18, 26, 34, 9, 57, 73, 82, 45];

/// Common factors per group, cycled.
pub const KF: [u64; 3] = [157, 593, 348];

/// Equalize-sums block key; every column sums to `SUM_RS`.
pub const SUM_R: [u64; 16] = [11, 31, 23, 53, 23, 15, 17, 10, 36, 21, 25, 9, 30, 33, 35, 28];
pub const SUM_RS: u64 = 100;

const NOISE: u32 = 39;

pub fn key_spec(scheme: SchemeId) -> KeySpec {
    let mut spec = KeySpec::new(scheme);
    match scheme {
        SchemeId::Projective => spec.projective = Some(ProjectiveParams::new(5, 6, 2, -3, 4)),
        SchemeId::ProjectiveMod => {
            spec.projective = Some(ProjectiveParams::new(8, 12, 25, 78, 34));
            spec.p = Some(167u32.into());
            spec.alphabet = 128;
        }
        SchemeId::Masked | SchemeId::MaskedNoise => {
            spec.projective = Some(ProjectiveParams::new(5, 6, 2, -3, 4));
            spec.p = Some(167u32.into());
            spec.g = Some(83u32.into());
            spec.x = Some(16u32.into());
            spec.alphabet = 128;
            if scheme == SchemeId::MaskedNoise {
                spec.rv = Some(vec![NOISE.into()]);
            }
        }
        SchemeId::NativeKf | SchemeId::NativeVerifier | SchemeId::NativeSums => {
            spec.p = Some(100_043u32.into());
            spec.g = Some(if scheme == SchemeId::NativeSums { 73u32 } else { 83 }.into());
            spec.x = Some(16u32.into());
            spec.encoding = Encoding::Raw;
        }
    }
    spec
}
