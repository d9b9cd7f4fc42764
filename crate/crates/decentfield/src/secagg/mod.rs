//! Secure aggregation over the Mersenne prime field `2^61 - 1`: fixed-point
//! encoding, pairwise-cancelling masks, and the masked-sum protocol the
//! server uses to recover weighted aggregates without seeing any individual
//! upload.
//!
//! The mask PRG is SplitMix64 — deterministic and bit-exact across languages,
//! but test-grade, not cryptographic. The simulated threat model is an
//! honest-but-curious server, and the PRG sits behind `derive_mask` so a keyed
//! stream cipher can replace it without touching the protocol.

mod codec;
mod field;
mod mask;
mod protocol;
mod wire;

pub use codec::FixedPointCodec;
pub use field::{FieldElement, MODULUS};
pub use mask::{derive_mask, splitmix64, PairwiseSeeds};
pub use protocol::{
    secure_scalar_sum, secure_sum, send_grads, send_wts, MaskedVector,
};
pub use wire::MaskedKind;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("fixed-point overflow at index {index}: |{value}| exceeds the encoding bound")]
    FixedPointOverflow { index: usize, value: f64 },
    #[error("no pairwise seed covering user {user}")]
    MissingSeed { user: u32 },
    #[error("incomplete user set: {0}")]
    IncompleteUserSet(String),
    #[error("round mismatch: expected {expected}, sender {sender} reports {got}")]
    RoundMismatch { expected: u32, sender: u32, got: u32 },
    #[error("length mismatch: expected {expected}, sender {sender} sent {got}")]
    LengthMismatch { expected: usize, sender: u32, got: usize },
    #[error("malformed wire message: {0}")]
    MalformedMessage(String),
}

/// Chi-square upper-tail p-value of `values` against the uniform distribution
/// on `[0, MODULUS)` over `buckets` equal-width buckets. Used by the
/// single-share uniformity checks.
pub fn chi_square_uniform_p(values: impl IntoIterator<Item = u64>, buckets: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    assert!(buckets >= 2);
    let mut counts = vec![0u64; buckets];
    let mut n = 0u64;
    for v in values {
        debug_assert!(v < MODULUS);
        let b = ((v as u128 * buckets as u128) / MODULUS as u128) as usize;
        counts[b] += 1;
        n += 1;
    }
    assert!(n >= buckets as u64 * 5, "too few samples for a chi-square test");
    let expected = n as f64 / buckets as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((buckets - 1) as f64).expect("valid dof");
    1.0 - dist.cdf(stat)
}
