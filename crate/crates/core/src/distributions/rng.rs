use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{phi_inv, ProcessModel};

/// One reproducible random stream.
///
/// Backed by ChaCha8, which is counter based: the key comes from the master
/// seed and the 64-bit stream id selects an independent keystream, so the
/// variates a replication sees depend only on `(master_seed, stream_index)`
/// and never on scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a child seed out of a parent seed and a label, for nested studies
/// (for example one sub-seed per warmup set).
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    let mut s = parent ^ label.rotate_left(32);
    splitmix64(&mut s);
    let mut t = splitmix64(&mut s) ^ label;
    splitmix64(&mut t)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_index);
        RngStream { rng }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1) with 53 random bits.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// N(0, 1) variate by inverse-CDF transform of one uniform.
    #[inline]
    pub fn std_normal(&mut self) -> f64 {
        phi_inv(self.uniform_open())
    }
}

/// One N(μ, σ²) variate from `stream`.
#[inline]
pub fn normal_sample(stream: &mut RngStream, model: &ProcessModel) -> f64 {
    model.mu() + model.sigma() * stream.std_normal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_and_index_reproduce() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_and_seeds_differ() {
        let first = |seed, idx| RngStream::new(seed, idx).next_u64();
        assert_ne!(first(42, 0), first(42, 1));
        assert_ne!(first(42, 0), first(43, 0));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn uniform_stays_open() {
        let mut s = RngStream::new(0, 0);
        for _ in 0..100_000 {
            let u = s.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn standard_normal_moments() {
        let mut s = RngStream::new(2024, 0);
        let n = 1_000_000;
        let model = ProcessModel::standard();
        let mean = (0..n).map(|_| normal_sample(&mut s, &model)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn shifted_normal_variance() {
        let mut s = RngStream::new(99, 3);
        let model = ProcessModel::new(5.0, 2.0).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| normal_sample(&mut s, &model)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 5.0).abs() < 4.0 * 2.0 / n.sqrt());
        assert!((var / 4.0 - 1.0).abs() < 0.05, "variance {var}");
    }
}
