//! Samplers and recommendation rules.
//!
//! Every algorithm is a pull-by-pull state machine: the driver asks for the
//! next arm, feeds back the reward, and may query the current recommendation
//! `J(t)` at any time. Anytime algorithms are constructed without a budget.

mod doubling;
mod elimination;
mod pooled;
mod tracking;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::RngCore;

pub use doubling::{default_initial_budget, Doubling, DoublingBase};
pub use elimination::{
    ceil_log2, sh_round_pulls, sr_schedule, SequentialHalving, SrSchedule, SuccessiveRejects,
};
pub use pooled::{pooled_allocation_run, PooledAllocation};
pub use tracking::{
    almost_tracking_batch, simple_tracking_step, AlmostTracking, BatchPlan, BatchTrace,
    SimpleTracking, DEFAULT_C_SUF,
};

use crate::allocation::{AllocationRule, H1Allocation};
use crate::environment::GaussianEnvironment;
use crate::error::{Error, Result};
use crate::model::EmpiricalState;

/// The arm an algorithm currently recommends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recommendation {
    pub arm: usize,
    /// Set when the rule has nothing to go on yet (no completed batch, unpulled
    /// arms) and returned arm 0 by convention.
    pub fallback: bool,
}

impl Recommendation {
    pub fn arm(arm: usize) -> Self {
        Self { arm, fallback: false }
    }

    pub fn fallback() -> Self {
        Self { arm: 0, fallback: true }
    }
}

/// A best-arm-identification algorithm driven one pull at a time.
pub trait BaiAlgorithm: Send {
    /// Stable identifier used in CSV output.
    fn id(&self) -> &'static str;

    /// Next arm to pull; `None` once a fixed-budget schedule is exhausted.
    fn next_arm(&mut self, rng: &mut dyn RngCore) -> Option<usize>;

    fn observe(&mut self, arm: usize, reward: f64);

    fn recommend(&self) -> Recommendation;

    /// Whether `recommend` uses only the samples of the last completed batch.
    fn discards_samples(&self) -> bool {
        false
    }
}

/// Empirical best arm, or the arm-0 fallback when nothing has been pulled.
pub fn recommend_empirical_best(state: &EmpiricalState) -> Recommendation {
    match state.empirical_best() {
        Some(arm) if state.all_pulled() => Recommendation::arm(arm),
        _ => Recommendation::fallback(),
    }
}

/// Pull order for a batch: cycles over the arms with draws left, so the first
/// pass touches every drawn arm once.
pub fn round_robin(draws: &[u64]) -> VecDeque<usize> {
    let mut left = draws.to_vec();
    let mut order = VecDeque::with_capacity(draws.iter().sum::<u64>() as usize);
    while order.len() < order.capacity() {
        for (arm, n) in left.iter_mut().enumerate() {
            if *n > 0 {
                *n -= 1;
                order.push_back(arm);
            }
        }
    }
    order
}

/// Round-robin sampling with empirical-best recommendation.
#[derive(Debug, Clone)]
pub struct Uniform {
    state: EmpiricalState,
}

impl Uniform {
    pub fn new(num_arms: usize) -> Self {
        Self { state: EmpiricalState::new(num_arms) }
    }
}

impl BaiAlgorithm for Uniform {
    fn id(&self) -> &'static str {
        "uniform"
    }

    fn next_arm(&mut self, _rng: &mut dyn RngCore) -> Option<usize> {
        Some((self.state.total_pulls() % self.state.num_arms() as u64) as usize)
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
    }

    fn recommend(&self) -> Recommendation {
        recommend_empirical_best(&self.state)
    }
}

/// Algorithm selection plus hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    SimpleTracking {
        /// Recompute the target allocation every this many pulls.
        recompute_period: u64,
    },
    AlmostTracking {
        /// Pulls per batch; `None` means `2K`.
        batch_size: Option<u64>,
        c_suf: f64,
    },
    SuccessiveRejects,
    SequentialHalving,
    DoublingSuccessiveRejects {
        initial_budget: Option<u64>,
    },
    DoublingSequentialHalving {
        initial_budget: Option<u64>,
    },
    PooledAllocation {
        batches: u64,
    },
    Uniform,
}

impl AlgorithmConfig {
    pub const IDS: [&'static str; 8] = [
        "simple-tracking",
        "almost-tracking",
        "sr",
        "sh",
        "dsr",
        "dsh",
        "pooled",
        "uniform",
    ];

    /// Default configuration for an identifier in [`Self::IDS`].
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "simple-tracking" => Self::SimpleTracking { recompute_period: 1 },
            "almost-tracking" => Self::AlmostTracking { batch_size: None, c_suf: DEFAULT_C_SUF },
            "sr" => Self::SuccessiveRejects,
            "sh" => Self::SequentialHalving,
            "dsr" => Self::DoublingSuccessiveRejects { initial_budget: None },
            "dsh" => Self::DoublingSequentialHalving { initial_budget: None },
            "pooled" => Self::PooledAllocation { batches: 0 },
            "uniform" => Self::Uniform,
            other => {
                return Err(Error::InvalidConfig(format!("unknown algorithm '{other}'")));
            }
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::SimpleTracking { .. } => "simple-tracking",
            Self::AlmostTracking { .. } => "almost-tracking",
            Self::SuccessiveRejects => "sr",
            Self::SequentialHalving => "sh",
            Self::DoublingSuccessiveRejects { .. } => "dsr",
            Self::DoublingSequentialHalving { .. } => "dsh",
            Self::PooledAllocation { .. } => "pooled",
            Self::Uniform => "uniform",
        }
    }

    /// True for algorithms that never read the budget.
    pub fn is_anytime(&self) -> bool {
        matches!(
            self,
            Self::SimpleTracking { .. }
                | Self::AlmostTracking { .. }
                | Self::DoublingSuccessiveRejects { .. }
                | Self::DoublingSequentialHalving { .. }
                | Self::Uniform
        )
    }

    /// Checks hyperparameters against `num_arms` and, for fixed-budget kinds,
    /// `budget`, without running anything.
    pub fn validate(&self, num_arms: usize, budget: u64) -> Result<()> {
        self.build(num_arms, budget).map(|_| ())
    }

    /// Instantiates the algorithm. `budget` is consulted only by fixed-budget
    /// kinds; anytime kinds are built without it.
    pub fn build(&self, num_arms: usize, budget: u64) -> Result<Box<dyn BaiAlgorithm>> {
        self.build_with_rule(num_arms, budget, Arc::new(H1Allocation))
    }

    pub fn build_with_rule(
        &self,
        num_arms: usize,
        budget: u64,
        rule: Arc<dyn AllocationRule>,
    ) -> Result<Box<dyn BaiAlgorithm>> {
        if num_arms < 2 {
            return Err(Error::InvalidConfig("need at least two arms".into()));
        }
        Ok(match *self {
            Self::SimpleTracking { recompute_period } => {
                Box::new(SimpleTracking::new(num_arms, rule, recompute_period)?)
            }
            Self::AlmostTracking { batch_size, c_suf } => Box::new(AlmostTracking::new(
                num_arms,
                rule,
                batch_size.unwrap_or(2 * num_arms as u64),
                c_suf,
            )?),
            Self::SuccessiveRejects => Box::new(SuccessiveRejects::new(num_arms, budget)?),
            Self::SequentialHalving => Box::new(SequentialHalving::new(num_arms, budget)?),
            Self::DoublingSuccessiveRejects { initial_budget } => Box::new(Doubling::new(
                DoublingBase::SuccessiveRejects,
                num_arms,
                initial_budget.unwrap_or_else(|| default_initial_budget(num_arms)),
            )?),
            Self::DoublingSequentialHalving { initial_budget } => Box::new(Doubling::new(
                DoublingBase::SequentialHalving,
                num_arms,
                initial_budget.unwrap_or_else(|| default_initial_budget(num_arms)),
            )?),
            Self::PooledAllocation { batches } => {
                Box::new(PooledAllocation::new(num_arms, budget, batches, rule)?)
            }
            Self::Uniform => Box::new(Uniform::new(num_arms)),
        })
    }
}

/// Outcome of driving one algorithm through one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Recommendation at each requested checkpoint.
    pub recommendations: Vec<Recommendation>,
    pub pulls: u64,
}

/// Drives `algorithm` for at most `horizon` pulls, recording `J(t)` at each
/// (ascending) checkpoint.
pub fn drive(
    algorithm: &mut dyn BaiAlgorithm,
    env: &GaussianEnvironment,
    horizon: u64,
    checkpoints: &[u64],
    rng: &mut dyn RngCore,
) -> RunRecord {
    let mut recommendations = Vec::with_capacity(checkpoints.len());
    let mut next_cp = checkpoints.iter().peekable();
    let mut t = 0;
    while let Some(&&cp) = next_cp.peek() {
        if cp == t {
            recommendations.push(algorithm.recommend());
            next_cp.next();
        } else if t < horizon {
            match algorithm.next_arm(rng) {
                Some(arm) => {
                    let r = env.pull(arm, rng);
                    algorithm.observe(arm, r);
                    t += 1;
                }
                None => {
                    // Schedule exhausted: the final answer stands for later checkpoints.
                    let rec = algorithm.recommend();
                    recommendations.extend(next_cp.by_ref().map(|_| rec));
                }
            }
        } else {
            // Checkpoint beyond the horizon.
            recommendations.push(algorithm.recommend());
            next_cp.next();
        }
    }
    RunRecord { recommendations, pulls: t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_round_robin() {
        let mut alg = Uniform::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = GaussianEnvironment::noiseless(&[0.2, 0.9, 0.9]);
        let rec = drive(&mut alg, &env, 6, &[2, 3, 6], &mut rng);
        assert!(rec.recommendations[0].fallback);
        assert_eq!(rec.recommendations[1], Recommendation::arm(1));
        assert_eq!(rec.pulls, 6);
    }

    #[test]
    fn from_id_round_trips() {
        for id in AlgorithmConfig::IDS {
            assert_eq!(AlgorithmConfig::from_id(id).unwrap().id(), id);
        }
        assert!(AlgorithmConfig::from_id("simple-traking").is_err());
    }

    #[test]
    fn fixed_budget_run_stops_early_and_repeats_answer() {
        let mut alg = SuccessiveRejects::new(3, 20).unwrap();
        let env = GaussianEnvironment::noiseless(&[1.0, 0.5, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = drive(&mut alg, &env, 20, &[19, 20], &mut rng);
        assert_eq!(rec.pulls, 19);
        assert_eq!(rec.recommendations, vec![Recommendation::arm(0); 2]);
    }
}
