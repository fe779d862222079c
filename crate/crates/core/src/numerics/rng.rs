/// SplitMix64 pseudo-random generator.
///
/// The algorithm is fixed so that fold partitions, shuffles, initial weights,
/// and synthetic logs can be reproduced bit-for-bit by any other
/// implementation:
///
/// ```text
/// state  = state + 0x9E3779B97F4A7C15            (wrapping)
/// z      = state
/// z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
/// z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
/// output = z ^ (z >> 31)
/// ```
///
/// Derived draws:
/// * `next_f64` = `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
/// * `below(n)` = high 64 bits of the 128-bit product `next_u64 * n`.
/// * `shuffle` is Fisher–Yates from the last index down, swapping `i` with
///   `below(i + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub const ALGORITHM: &'static str = "splitmix64";

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

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
