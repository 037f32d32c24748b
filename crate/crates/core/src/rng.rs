//! Counter-based random streams.
//!
//! A stream is addressed by `(master seed, domain, path index)`. The ChaCha8
//! key is derived from the seed and domain, and the path index selects the
//! ChaCha stream, so a path's draws never depend on which worker runs it.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream domains. Distinct domains never share keystream.
pub mod domain {
    pub const WALK: u64 = 0x5741_4c4b;
    pub const QUEUE: u64 = 0x5155_4555;
    pub const CLOCK: u64 = 0x434c_4f43;
    pub const TWIN: u64 = 0x5457_494e;
    pub const PROPTEST: u64 = 0x5052_4f50;
}

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Independent sub-seed `k` of a master seed (one per family member, run, …).
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    splitmix64(seed ^ splitmix64(k.wrapping_add(0x6d65_6d62)))
}

/// Address of one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Generator for this stream inside `domain`.
    pub fn rng(&self, domain: u64) -> PathRng {
        let key = splitmix64(self.seed ^ splitmix64(domain));
        let mut inner = ChaCha8Rng::seed_from_u64(key);
        inner.set_stream(self.index);
        PathRng { inner, buf: 0, nbits: 0 }
    }
}

/// Per-path generator with a bit buffer for cheap dyadic draws.
pub struct PathRng {
    inner: ChaCha8Rng,
    buf: u64,
    nbits: u32,
}

impl PathRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// `k` fresh bits, `1 <= k <= 32`.
    #[inline]
    pub fn bits(&mut self, k: u32) -> u64 {
        debug_assert!((1..=32).contains(&k));
        if self.nbits < k {
            self.buf = self.inner.next_u64();
            self.nbits = 64;
        }
        let out = self.buf & ((1u64 << k) - 1);
        self.buf >>= k;
        self.nbits -= k;
        out
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval (0, 1); safe for inverse-cdf and logs.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Two independent open uniforms with 32-bit resolution from one word.
    #[inline]
    pub fn uniform_pair32(&mut self) -> (f64, f64) {
        const S: f64 = 1.0 / 4_294_967_296.0;
        let w = self.inner.next_u64();
        (
            ((w >> 32) as f64 + 0.5) * S,
            ((w & 0xffff_ffff) as f64 + 0.5) * S,
        )
    }

    /// Exponential(1) variate.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open().ln()
    }
}
