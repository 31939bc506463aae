//! Seeded tensor generation.
//!
//! The generator is xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Each element consumes exactly one
//! 64-bit draw, plus one more for the value of a nonzero 8-bit element:
//!
//! * Bernoulli(p): `(x >> 11) as f64 * 2^-53 < p`
//! * uniform integer in `[lo, hi]`: `lo + (((x >> 32) * (hi - lo + 1)) >> 32)`
//!
//! Both maps use only integer and exactly representable float operations, so
//! a given seed yields the same tensor on every platform.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::sim::tensor::QuantTensor;

pub fn rng_from_seed(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn uniform_in(x: u64, lo: i32, hi: i32) -> i32 {
    let span = (hi - lo + 1) as u64;
    lo + (((x >> 32) * span) >> 32) as i32
}

fn check_density(density: f64) -> Result<()> {
    if (0.0..=1.0).contains(&density) {
        Ok(())
    } else {
        Err(Error::validation(format!("density must be within [0, 1], got {density}")))
    }
}

/// I.i.d. Bernoulli(`density`) spike tensor.
pub fn gen_sparse_spikes(dims: &[usize], density: f64, seed: u64) -> Result<QuantTensor> {
    check_density(density)?;
    let mut rng = rng_from_seed(seed);
    let len = dims.iter().product();
    let data = (0..len).map(|_| i8::from(unit(rng.next_u64()) < density)).collect();
    QuantTensor::spikes(dims.to_vec(), data)
}

/// 8-bit activations: zero with probability `1 - density`, otherwise uniform
/// in `[1, 127]` (a post-rectifier distribution).
pub fn gen_sparse_activations(dims: &[usize], density: f64, seed: u64) -> Result<QuantTensor> {
    check_density(density)?;
    let mut rng = rng_from_seed(seed);
    let len = dims.iter().product();
    let data = (0..len)
        .map(|_| if unit(rng.next_u64()) < density { uniform_in(rng.next_u64(), 1, 127) as i8 } else { 0 })
        .collect();
    QuantTensor::int8(dims.to_vec(), data)
}

/// Uniform 8-bit integers in `[lo, hi]`.
pub fn gen_uniform_int8(dims: &[usize], lo: i8, hi: i8, seed: u64) -> Result<QuantTensor> {
    if lo > hi {
        return Err(Error::validation("empty range"));
    }
    let mut rng = rng_from_seed(seed);
    let len = dims.iter().product();
    let data = (0..len).map(|_| uniform_in(rng.next_u64(), lo.into(), hi.into()) as i8).collect();
    QuantTensor::int8(dims.to_vec(), data)
}
