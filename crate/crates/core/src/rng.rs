//! Counter-based splittable random number generator.
//!
//! Sample `i` of stream `b` is a pure function of `(seed, b, i)`, so batches
//! can be evaluated in any order (or in parallel) and still reproduce the
//! sequential results bit for bit. The mixer is the splitmix64 finalizer
//! applied to a Weyl-sequenced combination of seed, stream, and counter.

/// splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stateless counter RNG keyed by a 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent generator for a sub-experiment.
    pub fn derive(&self, stream: u64) -> CounterRng {
        CounterRng {
            seed: mix64(self.seed ^ mix64(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Raw 64 random bits at `(stream, counter)`.
    #[inline]
    pub fn bits(&self, stream: u64, counter: u64) -> u64 {
        let a = mix64(self.seed ^ stream.wrapping_mul(0xd129_0d3b_53a8_35bf));
        mix64(a ^ counter.wrapping_mul(0x2545_f491_4f6c_dd1d))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, stream: u64, counter: u64) -> f64 {
        (self.bits(stream, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&self, stream: u64, counter: u64, lo: f64, hi: f64) -> f64 {
        lo + self.uniform(stream, counter) * (hi - lo)
    }

    /// Standard normal via Box-Muller; consumes counters `2k` and `2k+1`.
    #[inline]
    pub fn gaussian(&self, stream: u64, counter: u64) -> f64 {
        let u1 = 1.0 - self.uniform(stream, 2 * counter); // (0, 1]
        let u2 = self.uniform(stream, 2 * counter + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
