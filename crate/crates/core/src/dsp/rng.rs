use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::C64;

/// Seedable pseudo-random source. ChaCha20 streams are identical across platforms.
pub type SimRng = ChaCha20Rng;

/// Creates a generator from a 64-bit seed.
pub fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Derives an independent child seed from a parent seed and a stream path.
///
/// Uses the splitmix64 finalizer so that nearby paths yield unrelated seeds.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &p in path {
        state = mix(state.wrapping_add(mix(p.wrapping_add(0xBF58_476D_1CE4_E5B9))));
    }
    mix(state)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Circularly symmetric complex Gaussian sample with variance `var` (`E|z|^2 = var`).
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}
