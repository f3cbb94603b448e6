//! Deterministic random substreams.
//!
//! Every Monte Carlo trial and every user inside it draws from its own ChaCha
//! stream derived from one master seed. Results therefore do not depend on the
//! order in which trials are executed or on how they are split across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds the generator for `(trial, stream)` under `master`.
///
/// `stream` is normally the flat user index; auxiliary draws (pilot noise,
/// codebooks) use offsets above [`AUX_STREAM_BASE`].
pub fn substream(master: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(master) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// First stream id that is never used for a user's channel draw.
pub const AUX_STREAM_BASE: u64 = 1 << 32;

/// Circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

/// Fills a length-`m` vector with i.i.d. `CN(0, 1)` entries.
pub fn complex_gaussian_vec<R: rand::Rng + ?Sized>(rng: &mut R, m: usize) -> alloc::vec::Vec<C64> {
    (0..m).map(|_| complex_gaussian(rng)).collect()
}
