use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::Tensor;

/// Half-width of the uniform Xavier (Glorot) interval.
pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `fan_out × fan_in` matrix drawn uniformly from `±√(6/(fan_in+fan_out))`.
pub fn xavier_init(fan_in: usize, fan_out: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xavier_with(&mut rng, fan_in, fan_out)
}

pub fn xavier_with<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Tensor {
    assert!(fan_in >= 1 && fan_out >= 1, "xavier fans must be positive");
    let bound = xavier_bound(fan_in, fan_out);
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-bound..=bound))
        .collect();
    Tensor::matrix(fan_out, fan_in, data).expect("positive fans")
}
