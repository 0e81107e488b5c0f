//! Doubling-trick wrappers turning SR and SH into anytime algorithms.

use rand::RngCore;

use super::elimination::ceil_log2;
use super::{BaiAlgorithm, Recommendation, SequentialHalving, SuccessiveRejects};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoublingBase {
    SuccessiveRejects,
    SequentialHalving,
}

/// `2 K ceil(log2 K)`.
pub fn default_initial_budget(num_arms: usize) -> u64 {
    2 * num_arms as u64 * ceil_log2(num_arms) as u64
}

/// Reruns the base algorithm with budgets `T1, 2 T1, 4 T1, ...`.
///
/// Epoch `e` occupies global rounds `(T1 (2^(e-1) - 1), T1 (2^e - 1)]`. If the base
/// schedule finishes early, the rest of the epoch pulls the epoch's winner and
/// those samples are discarded. `J(t)` is the output of the last completed epoch.
pub struct Doubling {
    base: DoublingBase,
    num_arms: usize,
    epoch_budget: u64,
    epoch_end: u64,
    pulls: u64,
    current: Box<dyn BaiAlgorithm>,
    current_done: bool,
    last_output: Option<usize>,
    epochs_completed: u32,
}

impl Doubling {
    pub fn new(base: DoublingBase, num_arms: usize, initial_budget: u64) -> Result<Self> {
        let current = Self::spawn(base, num_arms, initial_budget).map_err(|e| {
            Error::InvalidConfig(format!("initial budget {initial_budget} is infeasible: {e}"))
        })?;
        Ok(Self {
            base,
            num_arms,
            epoch_budget: initial_budget,
            epoch_end: initial_budget,
            pulls: 0,
            current,
            current_done: false,
            last_output: None,
            epochs_completed: 0,
        })
    }

    fn spawn(base: DoublingBase, num_arms: usize, budget: u64) -> Result<Box<dyn BaiAlgorithm>> {
        Ok(match base {
            DoublingBase::SuccessiveRejects => Box::new(SuccessiveRejects::new(num_arms, budget)?),
            DoublingBase::SequentialHalving => Box::new(SequentialHalving::new(num_arms, budget)?),
        })
    }

    pub fn epochs_completed(&self) -> u32 {
        self.epochs_completed
    }

    fn roll_epoch(&mut self) {
        self.last_output = Some(self.current.recommend().arm);
        self.epochs_completed += 1;
        self.epoch_budget *= 2;
        self.epoch_end += self.epoch_budget;
        self.current = Self::spawn(self.base, self.num_arms, self.epoch_budget)
            .expect("larger budgets stay feasible");
        self.current_done = false;
    }
}

impl BaiAlgorithm for Doubling {
    fn id(&self) -> &'static str {
        match self.base {
            DoublingBase::SuccessiveRejects => "dsr",
            DoublingBase::SequentialHalving => "dsh",
        }
    }

    fn next_arm(&mut self, rng: &mut dyn RngCore) -> Option<usize> {
        if !self.current_done {
            if let Some(arm) = self.current.next_arm(rng) {
                return Some(arm);
            }
            self.current_done = true;
        }
        Some(self.current.recommend().arm)
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        if !self.current_done {
            self.current.observe(arm, reward);
        }
        self.pulls += 1;
        if self.pulls == self.epoch_end {
            self.roll_epoch();
        }
    }

    fn recommend(&self) -> Recommendation {
        self.last_output.map_or(Recommendation::fallback(), Recommendation::arm)
    }

    fn discards_samples(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::drive;
    use crate::environment::GaussianEnvironment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recommendation_switches_at_epoch_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut d = Doubling::new(DoublingBase::SequentialHalving, 2, 8).unwrap();
        let env = GaussianEnvironment::noiseless(&[0.0, 1.0]);
        let rec = drive(&mut d, &env, 30, &[7, 8, 23, 24], &mut rng);
        assert!(rec.recommendations[0].fallback);
        assert_eq!(rec.recommendations[1], Recommendation::arm(1));
        assert_eq!(d.epochs_completed(), 2);
    }

    #[test]
    fn epoch_budgets_are_geometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut d = Doubling::new(DoublingBase::SuccessiveRejects, 3, 10).unwrap();
        let env = GaussianEnvironment::noiseless(&[1.0, 0.5, 0.0]);
        for e in 1..=4u32 {
            let len = 10 * 2u64.pow(e - 1);
            drive(&mut d, &env, len, &[len], &mut rng);
            assert_eq!(d.epochs_completed(), e);
        }
    }

    #[test]
    fn dsr_two_arms_defined_after_first_epoch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut d = Doubling::new(DoublingBase::SuccessiveRejects, 2, 4).unwrap();
        let env = GaussianEnvironment::with_noise(&[1.0, 0.0], 1.0);
        let cps: Vec<u64> = (1..=60).collect();
        let rec = drive(&mut d, &env, 60, &cps, &mut rng);
        for (t, r) in cps.iter().zip(&rec.recommendations) {
            assert_eq!(r.fallback, *t < 4, "t={t}");
        }
    }

    #[test]
    fn infeasible_initial_budget() {
        assert!(Doubling::new(DoublingBase::SequentialHalving, 40, 100).is_err());
        assert!(Doubling::new(DoublingBase::SuccessiveRejects, 4, 4).is_err());
    }
}
