//! Replicated Monte-Carlo estimation of probability-of-error curves.
//!
//! Each replication owns a ChaCha8 stream keyed by (master seed, instance id,
//! algorithm id, replication index), so results do not depend on how the
//! replications are scheduled over worker threads. Gaussian noise is drawn
//! with `rand_distr::StandardNormal` (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::algorithms::{drive, AlgorithmConfig};
use crate::environment::GaussianEnvironment;
use crate::error::{Error, Result};
use crate::model::Instance;

/// Name of the generator and normal sampler, recorded in run manifests.
pub const RNG_METHOD: &str = "chacha8 (rand_chacha 0.9) keyed per replication; StandardNormal ziggurat (rand_distr 0.5)";

/// Two-sided confidence level of the reported intervals.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance_id: String,
    pub instance: Instance,
    pub algorithms: Vec<AlgorithmConfig>,
    pub budget: u64,
    /// Strictly ascending, each in `1..=budget`.
    pub checkpoints: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
    /// Reward noise standard deviation; 1 for the benchmark, 0 for debugging.
    pub noise_sd: f64,
}

impl ExperimentConfig {
    pub fn new(
        instance_id: impl Into<String>,
        instance: Instance,
        algorithms: Vec<AlgorithmConfig>,
        budget: u64,
        replications: u64,
        seed: u64,
    ) -> Self {
        let checkpoints = default_checkpoints(instance.num_arms(), budget);
        Self {
            instance_id: instance_id.into(),
            instance,
            algorithms,
            budget,
            checkpoints,
            replications,
            seed,
            noise_sd: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::InvalidConfig("no checkpoints".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("checkpoints must be strictly ascending".into()));
        }
        if self.checkpoints[0] == 0 || *self.checkpoints.last().unwrap() > self.budget {
            return Err(Error::InvalidConfig(format!(
                "checkpoints must lie in 1..={}",
                self.budget
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig("noise sd must be finite and >= 0".into()));
        }
        for alg in &self.algorithms {
            alg.validate(self.instance.num_arms(), self.budget)?;
        }
        Ok(())
    }
}

/// 50 log-spaced integer checkpoints from `K` towards `T`, plus `T` itself.
/// Rounding collisions are dropped, so short horizons may yield fewer points.
pub fn default_checkpoints(num_arms: usize, budget: u64) -> Vec<u64> {
    let lo = (num_arms as f64).max(1.0);
    let hi = budget as f64;
    let mut cps: Vec<u64> = if hi > lo {
        (0..50)
            .map(|k| (lo * (hi / lo).powf(k as f64 / 50.0)).round() as u64)
            .collect()
    } else {
        Vec::new()
    };
    cps.push(budget);
    cps.dedup();
    cps.retain(|&t| t >= 1 && t <= budget);
    cps
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for one replication.
pub fn replication_rng(seed: u64, instance_id: &str, algorithm_id: &str, replication: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    let words = [
        splitmix64(&mut state) ^ fnv1a(instance_id),
        splitmix64(&mut state) ^ fnv1a(algorithm_id),
        splitmix64(&mut state) ^ replication,
        splitmix64(&mut state),
    ];
    let mut mix = words[0] ^ words[1].rotate_left(17) ^ words[2].rotate_left(41);
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        let v = w ^ splitmix64(&mut mix);
        chunk.copy_from_slice(&v.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Outcome of one replication at each checkpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplicationOutcome {
    /// True where the recommendation missed the best arm.
    pub errors: Vec<bool>,
    /// True where the recommendation was the arm-0 fallback.
    pub fallbacks: Vec<bool>,
}

/// Runs replication `replication` of `algorithm` under `config`.
pub fn run_replication(
    config: &ExperimentConfig,
    algorithm: &AlgorithmConfig,
    replication: u64,
) -> Result<ReplicationOutcome> {
    let k = config.instance.num_arms();
    let mut alg = algorithm.build(k, config.budget)?;
    let env = GaussianEnvironment::with_noise(config.instance.means(), config.noise_sd);
    let mut rng = replication_rng(config.seed, &config.instance_id, algorithm.id(), replication);
    let record = drive(alg.as_mut(), &env, config.budget, &config.checkpoints, &mut rng);
    let best = config.instance.best_arm();
    Ok(ReplicationOutcome {
        errors: record.recommendations.iter().map(|r| r.arm != best).collect(),
        fallbacks: record.recommendations.iter().map(|r| r.fallback).collect(),
    })
}

/// One checkpoint of a PoE curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PoEPoint {
    pub t: u64,
    pub errors: u64,
    pub replications: u64,
    pub poe: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Replications whose recommendation was a fallback at this checkpoint.
    pub fallbacks: u64,
}

impl PoEPoint {
    pub fn from_counts(t: u64, errors: u64, replications: u64, fallbacks: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(errors, replications, CONFIDENCE);
        Self {
            t,
            errors,
            replications,
            poe: errors as f64 / replications as f64,
            ci_low,
            ci_high,
            fallbacks,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoECurve {
    pub algorithm: String,
    pub instance: String,
    pub points: Vec<PoEPoint>,
}

impl PoECurve {
    pub fn final_point(&self) -> &PoEPoint {
        self.points.last().expect("curves have at least one checkpoint")
    }
}

/// Estimates the PoE curve of every configured algorithm, using `workers`
/// threads (`None` = rayon default).
pub fn estimate_poe(config: &ExperimentConfig, workers: Option<usize>) -> Result<Vec<PoECurve>> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    pool.install(|| config.algorithms.iter().map(|alg| estimate_curve(config, alg)).collect())
}

fn estimate_curve(config: &ExperimentConfig, algorithm: &AlgorithmConfig) -> Result<PoECurve> {
    let n = config.checkpoints.len();
    let zero = || (vec![0u64; n], vec![0u64; n]);
    let (errors, fallbacks) = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, algorithm, r))
        .try_fold(zero, |(mut e, mut f), outcome| {
            let outcome = outcome?;
            for i in 0..n {
                e[i] += outcome.errors[i] as u64;
                f[i] += outcome.fallbacks[i] as u64;
            }
            Ok::<_, Error>((e, f))
        })
        .try_reduce(zero, |(mut e1, mut f1), (e2, f2)| {
            for i in 0..n {
                e1[i] += e2[i];
                f1[i] += f2[i];
            }
            Ok((e1, f1))
        })?;
    let points = config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(i, &t)| PoEPoint::from_counts(t, errors[i], config.replications, fallbacks[i]))
        .collect();
    Ok(PoECurve {
        algorithm: algorithm.id().to_string(),
        instance: config.instance_id.clone(),
        points,
    })
}

fn invert_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact (Clopper–Pearson) two-sided binomial interval for `errors / trials`.
pub fn clopper_pearson(errors: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && errors <= trials, "invalid binomial counts");
    let tail = (1.0 - confidence) / 2.0;
    let (x, n) = (errors as f64, trials as f64);
    let lower = if errors == 0 {
        0.0
    } else if errors == trials {
        tail.powf(1.0 / n)
    } else {
        invert_increasing(|p| beta_reg(x, n - x + 1.0, p), tail)
    };
    let upper = if errors == trials {
        1.0
    } else if errors == 0 {
        1.0 - tail.powf(1.0 / n)
    } else {
        invert_increasing(|p| beta_reg(x + 1.0, n - x, p), 1.0 - tail)
    };
    (lower, upper)
}

/// `H * ln(1 / PoE) / T`; `+inf` when `PoE = 0`, `0` when `PoE = 1`.
pub fn estimate_rate(poe: f64, complexity: f64, budget: u64) -> Result<f64> {
    if complexity.is_nan() || complexity <= 0.0 || budget == 0 {
        return Err(Error::InvalidArgument("complexity and budget must be positive".into()));
    }
    if !(0.0..=1.0).contains(&poe) {
        return Err(Error::InvalidArgument(format!("PoE {poe} outside [0, 1]")));
    }
    if poe == 0.0 {
        return Ok(f64::INFINITY);
    }
    if poe == 1.0 {
        return Ok(0.0);
    }
    Ok(complexity * (1.0 / poe).ln() / budget as f64)
}

/// Rate with the interval implied by the PoE confidence bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub lower: f64,
    pub plugin: f64,
    pub upper: f64,
}

pub fn rate_from_point(point: &PoEPoint, complexity: f64) -> Result<RateEstimate> {
    Ok(RateEstimate {
        lower: estimate_rate(point.ci_high, complexity, point.t)?,
        plugin: estimate_rate(point.poe, complexity, point.t)?,
        upper: estimate_rate(point.ci_low, complexity, point.t)?,
    })
}

/// Worst case over instances; infinite entries only win when all are infinite.
pub fn minimax_rate(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("no rates to aggregate".into()));
    }
    Ok(rates.iter().copied().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rate_examples() {
        assert_relative_eq!(estimate_rate(0.01, 87.0, 10_000).unwrap(), 0.040064, epsilon = 1e-6);
        assert_eq!(estimate_rate(1.0, 87.0, 10_000).unwrap(), 0.0);
        assert_eq!(estimate_rate(0.0, 87.0, 10_000).unwrap(), f64::INFINITY);
        assert!(estimate_rate(0.5, 0.0, 10).is_err());
    }

    #[test]
    fn minimax_examples() {
        assert_eq!(minimax_rate(&[0.5, 0.9, 0.7]).unwrap(), 0.5);
        assert_eq!(minimax_rate(&[f64::INFINITY, 0.3]).unwrap(), 0.3);
        assert_eq!(minimax_rate(&[0.42]).unwrap(), 0.42);
        assert_eq!(minimax_rate(&[f64::INFINITY; 3]).unwrap(), f64::INFINITY);
        assert!(minimax_rate(&[]).is_err());
    }

    #[test]
    fn zero_and_full_error_intervals() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95);
        assert_eq!(lo, 0.0);
        assert_relative_eq!(hi, 1.0 - 0.025f64.powf(0.01), max_relative = 1e-15);
        assert!((hi - 0.0362).abs() < 1e-4);
        let p = PoEPoint::from_counts(10, 100, 100, 0);
        assert_eq!(p.poe, 1.0);
        assert_eq!(p.ci_high, 1.0);
    }

    #[test]
    fn default_checkpoint_count() {
        let cps = default_checkpoints(40, 2000);
        assert_eq!(cps.len(), 51);
        assert_eq!(cps[0], 40);
        assert_eq!(*cps.last().unwrap(), 2000);
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn seeds_differ_across_keys() {
        use rand::RngCore;
        let a = replication_rng(7, "9", "sh", 0).next_u64();
        assert_eq!(a, replication_rng(7, "9", "sh", 0).next_u64());
        assert_ne!(a, replication_rng(7, "9", "sh", 1).next_u64());
        assert_ne!(a, replication_rng(7, "9", "sr", 0).next_u64());
        assert_ne!(a, replication_rng(7, "1", "sh", 0).next_u64());
        assert_ne!(a, replication_rng(8, "9", "sh", 0).next_u64());
    }
}
