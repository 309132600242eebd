//! Seeded pseudo-random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose
//! 64-bit seed is `mix(seed, fnv1a(label), index)`, where `mix` is the
//! SplitMix64 finaliser applied in sequence. A substream is therefore a pure
//! function of (master seed, label, index). Batches and trials can run in
//! any order, or in parallel, and still reproduce a sequential run bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derived 64-bit seed for `(seed, label, index)`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ fnv1a(label)) ^ index)
}

/// Generator for one substream.
pub fn substream(seed: u64, label: &str, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, label, index))
}

/// Fills `out` with a uniform point on the unit sphere in `R^{out.len()}`
/// by normalising a standard Gaussian vector.
pub fn unit_sphere_point<R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            norm2 += *x * *x;
        }
        if norm2 > 1e-300 {
            let inv = 1.0 / norm2.sqrt();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Standard normal draw.
pub fn gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
