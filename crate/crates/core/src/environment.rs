use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::model::Instance;

/// Reward source: `mean + noise_sd * N(0, 1)` per pull.
#[derive(Debug, Clone)]
pub struct GaussianEnvironment {
    means: Vec<f64>,
    noise_sd: f64,
}

impl GaussianEnvironment {
    /// Unit-variance rewards around the instance means.
    pub fn new(instance: &Instance) -> Self {
        Self { means: instance.means().to_vec(), noise_sd: 1.0 }
    }

    /// Every pull returns the exact mean. Used for debugging and traces.
    pub fn noiseless(means: &[f64]) -> Self {
        Self { means: means.to_vec(), noise_sd: 0.0 }
    }

    pub fn with_noise(means: &[f64], noise_sd: f64) -> Self {
        Self { means: means.to_vec(), noise_sd }
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn pull(&self, arm: usize, rng: &mut dyn RngCore) -> f64 {
        if self.noise_sd == 0.0 {
            return self.means[arm];
        }
        let z: f64 = StandardNormal.sample(rng);
        self.means[arm] + self.noise_sd * z
    }
}
