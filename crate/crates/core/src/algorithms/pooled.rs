//! Pooled Allocation: batched play on delayed, element-wise blended means with
//! a majority vote over per-batch empirical winners.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::RngCore;

use super::{drive, round_robin, BaiAlgorithm, Recommendation};
use crate::allocation::{round_allocation, AllocationRule};
use crate::environment::GaussianEnvironment;
use crate::error::{Error, Result};
use crate::model::argmax_first;

pub struct PooledAllocation {
    num_arms: usize,
    batches: u64,
    batch_size: u64,
    rule: Arc<dyn AllocationRule>,
    pooled: Vec<f64>,
    victories: Vec<u64>,
    batch: u64,
    weights: Vec<f64>,
    batch_sums: Vec<f64>,
    batch_counts: Vec<u64>,
    queue: VecDeque<usize>,
    in_batch: bool,
}

impl PooledAllocation {
    /// `budget` is truncated to a multiple of `batches`; `batches == 0` picks the
    /// largest count whose batch size is still at least `2K`.
    pub fn new(
        num_arms: usize,
        budget: u64,
        batches: u64,
        rule: Arc<dyn AllocationRule>,
    ) -> Result<Self> {
        let k = num_arms as u64;
        let batches = if batches == 0 { budget / (2 * k) } else { batches };
        if batches <= k {
            return Err(Error::InvalidConfig(format!(
                "pooled allocation needs more than K = {k} batches, got {batches}"
            )));
        }
        let batch_size = budget / batches;
        if batch_size < 2 * k {
            return Err(Error::InvalidConfig(format!(
                "batch size {batch_size} = T / B is below 2K = {}",
                2 * k
            )));
        }
        Ok(Self {
            num_arms,
            batches,
            batch_size,
            rule,
            pooled: vec![0.0; num_arms],
            victories: vec![0; num_arms],
            batch: 0,
            weights: vec![0.0; num_arms],
            batch_sums: vec![0.0; num_arms],
            batch_counts: vec![0; num_arms],
            queue: VecDeque::new(),
            in_batch: false,
        })
    }

    pub fn victories(&self) -> &[u64] {
        &self.victories
    }

    pub fn pooled_means(&self) -> &[f64] {
        &self.pooled
    }

    fn close_batch(&mut self) {
        let k = self.num_arms as u64;
        if self.batch <= k {
            let arm = (self.batch - 1) as usize;
            self.pooled[arm] = self.batch_sums[arm] / self.batch_counts[arm] as f64;
        } else {
            for i in 0..self.num_arms {
                let w = self.weights[i];
                if w > 0.0 {
                    let q = self.batch_sums[i] / self.batch_counts[i] as f64;
                    self.pooled[i] = (1.0 - w) * self.pooled[i] + w * q;
                }
            }
        }
        self.batch_sums.iter_mut().for_each(|s| *s = 0.0);
        self.batch_counts.iter_mut().for_each(|n| *n = 0);
        self.in_batch = false;
    }

    fn open_batch(&mut self, rng: &mut dyn RngCore) {
        self.batch += 1;
        let k = self.num_arms as u64;
        if self.batch <= k {
            let arm = (self.batch - 1) as usize;
            self.queue.extend(std::iter::repeat_n(arm, self.batch_size as usize));
        } else {
            self.victories[argmax_first(&self.pooled)] += 1;
            let w = self.rule.allocate(&self.pooled);
            let draws = round_allocation(&w, self.batch_size, rng).expect("batch size checked");
            self.weights = w.weights().to_vec();
            self.queue = round_robin(&draws);
        }
        self.in_batch = true;
    }
}

impl BaiAlgorithm for PooledAllocation {
    fn id(&self) -> &'static str {
        "pooled"
    }

    fn next_arm(&mut self, rng: &mut dyn RngCore) -> Option<usize> {
        if self.queue.is_empty() {
            if self.in_batch {
                self.close_batch();
            }
            if self.batch == self.batches {
                return None;
            }
            self.open_batch(rng);
        }
        self.queue.pop_front()
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.batch_sums[arm] += reward;
        self.batch_counts[arm] += 1;
    }

    fn recommend(&self) -> Recommendation {
        if self.victories.iter().all(|&v| v == 0) {
            return Recommendation::fallback();
        }
        let mut best = 0;
        for (i, &v) in self.victories.iter().enumerate() {
            if v > self.victories[best] {
                best = i;
            }
        }
        Recommendation::arm(best)
    }
}

/// Runs Pooled Allocation to completion and returns the recommended arm and
/// the final victory counts.
pub fn pooled_allocation_run(
    budget: u64,
    batches: u64,
    rule: Arc<dyn AllocationRule>,
    env: &GaussianEnvironment,
    rng: &mut dyn RngCore,
) -> Result<(usize, Vec<u64>)> {
    let mut alg = PooledAllocation::new(env.num_arms(), budget, batches, rule)?;
    let horizon = alg.batch_size * alg.batches;
    drive(&mut alg, env, horizon + 1, &[horizon + 1], rng);
    Ok((alg.recommend().arm, alg.victories.clone()))
}
