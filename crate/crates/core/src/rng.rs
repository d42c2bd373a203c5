//! Portable seeded random number generation.
//!
//! Everything random in this crate flows through [`Pcg32`], a PCG-XSH-RR
//! 32-bit generator (O'Neill 2014). The algorithm is fully specified here so
//! fixtures can be regenerated bit-identically from any language:
//!
//! - state update: `state = state * 6364136223846793005 + inc` (wrapping, 64-bit)
//! - output: `rot32(((state >> 18) ^ state) >> 27, state >> 59)` on the
//!   pre-update state
//!
//! Independent streams are derived from a `(seed, stream_id)` pair; the
//! stream id selects the (odd) increment, so draws on one stream never
//! perturb another.

/// PCG-XSH-RR 32/64 generator.
#[derive(Debug, Clone)]
pub struct Pcg32 {
    state: u64,
    inc: u64,
}

impl Pcg32 {
    const MULT: u64 = 6364136223846793005;

    /// Generator for `stream_id` under `seed`. Distinct stream ids give
    /// statistically independent sequences for the same seed.
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let inc = (stream_id << 1) | 1;
        let mut rng = Pcg32 { state: 0, inc };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(Self::MULT).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    /// Uniform draw in [0, 1) with 32 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        f64::from(self.next_u32()) / (u32::MAX as f64 + 1.0)
    }

    /// Uniform draw in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Uses rejection sampling to avoid modulo bias.
    pub fn next_below(&mut self, n: u32) -> u32 {
        assert!(n > 0, "next_below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u32();
            if r >= threshold {
                return r % n;
            }
        }
    }

    /// Standard normal draw via Box-Muller. Consumes exactly two uniforms.
    pub fn next_gaussian(&mut self) -> f64 {
        // u1 in (0,1] so ln is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Normal draw with the given mean and standard deviation.
    pub fn gaussian(&mut self, mean: f64, std_dev: f64) -> f64 {
        mean + std_dev * self.next_gaussian()
    }

    /// Poisson draw (Knuth's multiplication method). O(lambda) uniforms.
    pub fn poisson(&mut self, lambda: f64) -> u32 {
        assert!(lambda >= 0.0, "poisson rate must be non-negative");
        // Split large rates so exp(-lambda) never underflows.
        let mut remaining = lambda;
        let mut count = 0u32;
        while remaining > 500.0 {
            count += self.poisson_small(500.0);
            remaining -= 500.0;
        }
        count + self.poisson_small(remaining)
    }

    fn poisson_small(&mut self, lambda: f64) -> u32 {
        let limit = (-lambda).exp();
        let mut product = self.next_f64();
        let mut count = 0u32;
        while product > limit {
            count += 1;
            product *= self.next_f64();
        }
        count
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }
}
