//! Counter-based Brownian increments.
//!
//! Every increment is a pure function of `(seed, sample_index, step_index)`:
//! the triple is mixed into a ChaCha key and the per-mode normals are drawn
//! in mode-enumeration order. Monte Carlo results are therefore independent
//! of how samples are scheduled across workers, and any increment can be
//! regenerated in isolation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::field::SpectralField;
use crate::lattice::LatticeSpec;
use std::sync::Arc;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministically derive an unrelated stream seed (used for runs that
/// must be independent of the main sample set, e.g. the plain-simulation
/// side of the change-of-measure transfer check).
pub fn derived_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_mul(0xA24B_AED4_963E_E407)))
}

/// A reproducible per-sample view of the cylindrical Brownian motion.
#[derive(Debug, Clone, Copy)]
pub struct NoiseStream {
    pub seed: u64,
    pub sample_index: u64,
}

impl NoiseStream {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        NoiseStream { seed, sample_index }
    }

    fn key(&self, step_index: u64) -> [u8; 32] {
        let w0 = splitmix64(self.seed);
        let w1 = splitmix64(w0 ^ self.sample_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let w2 = splitmix64(w1 ^ step_index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
        let w3 = splitmix64(w2 ^ 0x94D0_49BB_1331_11EB);
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&w0.to_le_bytes());
        key[8..16].copy_from_slice(&w1.to_le_bytes());
        key[16..24].copy_from_slice(&w2.to_le_bytes());
        key[24..32].copy_from_slice(&w3.to_le_bytes());
        key
    }

    /// Increment over a step of length `dt`: per stored mode one complex
    /// normal `(xi + i zeta) sqrt(dt/2)`, one polarization degree per pair,
    /// so the increment lies in `H` with identity covariance.
    pub fn increment(&self, lattice: &Arc<LatticeSpec>, step_index: usize, dt: f64) -> SpectralField {
        let mut field = SpectralField::zero(lattice);
        self.fill_increment(&mut field, step_index, dt);
        field
    }

    /// As `increment`, reusing the caller's buffer.
    pub fn fill_increment(&self, field: &mut SpectralField, step_index: usize, dt: f64) {
        let mut rng = ChaCha12Rng::from_seed(self.key(step_index as u64));
        let scale = (dt / 2.0).sqrt();
        for a in field.amps_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *a = Complex64::new(re * scale, im * scale);
        }
    }
}
