//! Deterministic random streams.
//!
//! Monte-Carlo work is split into fixed-size chunks; chunk `i` draws from its
//! own ChaCha stream derived from `(seed, i)`, so parallel and sequential
//! evaluation see identical numbers.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CHUNK: usize = 4096;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream number `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Chunk boundaries covering `0..total`.
pub fn chunks(total: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..total.div_ceil(CHUNK)).map(move |i| (i as u64, CHUNK.min(total - i * CHUNK)))
}

pub fn uniform_in_box(r: &mut impl Rng, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(lo.len(), |i, _| lo[i] + (hi[i] - lo[i]) * r.random::<f64>())
}

pub fn gaussian(r: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn unit_vector(r: &mut impl Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| gaussian(r));
        let norm = v.norm();
        if norm > 1e-9 {
            return v / norm;
        }
    }
}
