//! Deterministic counter-based random number generation.
//!
//! Every Monte Carlo path owns a private stream derived statelessly from
//! `(master seed, path index)`, so results are bit-identical for a fixed
//! seed and path count regardless of how paths are scheduled across workers.

use rand_core::{Infallible, TryRng};
use rand_distr::{Distribution, StandardNormal};

/// SplitMix64: fixed-increment 64-bit mixer with full period.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Stream for path `index` under `master`: a stateless double mix so
    /// that neighboring indices land in unrelated regions of the sequence.
    pub fn for_path(master: u64, index: u64) -> Self {
        let seed = mix(master ^ mix(index.wrapping_add(1).wrapping_mul(GOLDEN)));
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in `(0, 1]` (never zero, so logarithms are safe).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((SplitMix64::next_u64(self) >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
    }
}

impl TryRng for SplitMix64 {
    type Error = Infallible;

    #[inline]
    fn try_next_u32(&mut self) -> Result<u32, Infallible> {
        Ok((SplitMix64::next_u64(self) >> 32) as u32)
    }

    #[inline]
    fn try_next_u64(&mut self) -> Result<u64, Infallible> {
        Ok(SplitMix64::next_u64(self))
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Infallible> {
        for chunk in dest.chunks_mut(8) {
            let bytes = SplitMix64::next_u64(self).to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
        Ok(())
    }
}

/// Standard normal source: ziggurat sampling on top of a [`SplitMix64`]
/// stream.
#[derive(Debug, Clone)]
pub struct NormalSource {
    rng: SplitMix64,
}

impl NormalSource {
    pub fn new(rng: SplitMix64) -> Self {
        NormalSource { rng }
    }

    pub fn for_path(master: u64, index: u64) -> Self {
        Self::new(SplitMix64::for_path(master, index))
    }

    #[inline]
    pub fn sample(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}
