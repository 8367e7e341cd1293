//! Deterministic random numbers for probes and reports.
//!
//! Reports promise bit-for-bit reproducibility given a seed, so randomness
//! comes from a fixed, self-contained generator rather than an external
//! crate whose stream might change between versions.

use crate::scalar::{Cplx, Scalar};

/// SplitMix64 generator (Steele, Lea, Flood 2014). Full 64-bit period,
/// passes BigCrush, and trivially portable.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn uniform<T: Scalar>(&mut self) -> T {
        T::lit(2.0 * self.next_f64() - 1.0)
    }

    /// Complex value with independent uniform `[-1, 1)` parts.
    pub fn complex<T: Scalar>(&mut self) -> Cplx<T> {
        let re = self.uniform();
        Cplx::new(re, self.uniform())
    }
}
