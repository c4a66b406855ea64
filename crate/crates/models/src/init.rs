use neuro_core::Tensor;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Kaiming-style normal init, `std = sqrt(2 / fan_in)`.
pub fn kaiming<R: Rng>(rng: &mut R, shape: &[usize], fan_in: usize) -> Tensor {
    gaussian(rng, shape, (2.0 / fan_in as f64).sqrt())
}

/// Plain Gaussian init for output heads.
pub fn gaussian<R: Rng>(rng: &mut R, shape: &[usize], std: f64) -> Tensor {
    let dist = Normal::new(0.0, std).expect("finite std");
    let numel: usize = shape.iter().product();
    let data = (0..numel).map(|_| dist.sample(rng)).collect();
    Tensor::from_vec(shape, data)
}
