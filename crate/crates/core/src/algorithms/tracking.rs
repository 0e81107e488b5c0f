//! Simple Tracking and Almost Tracking.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{recommend_empirical_best, round_robin, BaiAlgorithm, Recommendation};
use crate::allocation::{round_allocation, Allocation, AllocationRule};
use crate::error::{Error, Result};
use crate::model::EmpiricalState;

pub const DEFAULT_C_SUF: f64 = 0.999;

/// Arm with the largest deficit `w_i - N_i / t`; smallest index on ties.
///
/// `t` is the number of pulls so far. Every arm must have been pulled.
pub fn simple_tracking_step(state: &EmpiricalState, target: &Allocation) -> Result<usize> {
    if !state.all_pulled() {
        return Err(Error::Precondition("every arm must be pulled once first".into()));
    }
    if target.len() != state.num_arms() {
        return Err(Error::InvalidArgument("target length differs from arm count".into()));
    }
    let t = state.total_pulls() as f64;
    let mut best = 0;
    let mut best_deficit = f64::NEG_INFINITY;
    for (i, (&w, &n)) in target.weights().iter().zip(state.counts()).enumerate() {
        let deficit = w - n as f64 / t;
        if deficit > best_deficit {
            best = i;
            best_deficit = deficit;
        }
    }
    Ok(best)
}

/// Greedy tracking of the target allocation of the current empirical means.
pub struct SimpleTracking {
    state: EmpiricalState,
    rule: Arc<dyn AllocationRule>,
    recompute_period: u64,
    target: Option<Allocation>,
}

impl SimpleTracking {
    pub fn new(num_arms: usize, rule: Arc<dyn AllocationRule>, recompute_period: u64) -> Result<Self> {
        if recompute_period == 0 {
            return Err(Error::InvalidConfig("recompute period must be positive".into()));
        }
        Ok(Self { state: EmpiricalState::new(num_arms), rule, recompute_period, target: None })
    }

    pub fn state(&self) -> &EmpiricalState {
        &self.state
    }
}

impl BaiAlgorithm for SimpleTracking {
    fn id(&self) -> &'static str {
        "simple-tracking"
    }

    fn next_arm(&mut self, _rng: &mut dyn RngCore) -> Option<usize> {
        let k = self.state.num_arms() as u64;
        let t = self.state.total_pulls();
        if t < k {
            return Some(t as usize);
        }
        if self.target.is_none() || (t - k).is_multiple_of(self.recompute_period) {
            let q = self.state.means().expect("initialised");
            self.target = Some(self.rule.allocate(&q));
        }
        let target = self.target.as_ref().expect("computed above");
        Some(simple_tracking_step(&self.state, target).expect("initialised"))
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
    }

    fn recommend(&self) -> Recommendation {
        recommend_empirical_best(&self.state)
    }
}

/// Per-batch weights `w_{b,i}` and batch means `Q_{b,i}` of a batched run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchTrace {
    pub batch_size: u64,
    pub weights: Vec<Vec<f64>>,
    /// `None` where the arm was not drawn in that batch.
    pub means: Vec<Vec<Option<f64>>>,
}

impl BatchTrace {
    pub fn num_batches(&self) -> usize {
        self.weights.len()
    }
}

/// Decision for one Almost Tracking batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    /// Arms whose running average weight is at most `w_i / C_suf`.
    pub insufficient: Vec<usize>,
    /// Sum of the target weights over `insufficient`.
    pub s_insuf: f64,
    pub weights: Allocation,
    pub draws: Vec<u64>,
}

/// Plans batch `b = past_weights.len() + 1` of Almost Tracking.
pub fn almost_tracking_batch<R: Rng + ?Sized>(
    past_weights: &[Vec<f64>],
    target: &Allocation,
    c_suf: f64,
    batch_size: u64,
    rng: &mut R,
) -> Result<BatchPlan> {
    if past_weights.is_empty() {
        return Err(Error::Precondition("the initial batch must be drawn first".into()));
    }
    if !(c_suf > 0.0 && c_suf < 1.0) {
        return Err(Error::InvalidConfig(format!("C_suf = {c_suf} is outside (0, 1)")));
    }
    let k = target.len();
    let b_prev = past_weights.len() as f64;
    let w = target.weights();
    let mut insufficient = Vec::new();
    for i in 0..k {
        let avg = past_weights.iter().map(|row| row[i]).sum::<f64>() / b_prev;
        if avg <= w[i] / c_suf {
            insufficient.push(i);
        }
    }
    // Averages sum to one and w / C_suf sums to more than one, so some arm qualifies.
    assert!(!insufficient.is_empty(), "empty insufficient set");
    let s_insuf: f64 = insufficient.iter().map(|&i| w[i]).sum();
    let mut weights = vec![0.0; k];
    for &i in &insufficient {
        weights[i] = w[i] / s_insuf;
    }
    let weights = Allocation::new(weights)?;
    let draws = round_allocation(&weights, batch_size, rng)?;
    Ok(BatchPlan { insufficient, s_insuf, weights, draws })
}

/// Batched tracking that splits each batch over all insufficiently sampled arms.
pub struct AlmostTracking {
    state: EmpiricalState,
    rule: Arc<dyn AllocationRule>,
    batch_size: u64,
    c_suf: f64,
    trace: BatchTrace,
    queue: VecDeque<usize>,
    batch_sums: Vec<f64>,
    batch_counts: Vec<u64>,
    in_batch: bool,
}

impl AlmostTracking {
    pub fn new(
        num_arms: usize,
        rule: Arc<dyn AllocationRule>,
        batch_size: u64,
        c_suf: f64,
    ) -> Result<Self> {
        if !(c_suf > 0.0 && c_suf < 1.0) {
            return Err(Error::InvalidConfig(format!("C_suf = {c_suf} is outside (0, 1)")));
        }
        if batch_size < 2 * num_arms as u64 {
            return Err(Error::InvalidConfig(format!(
                "batch size {batch_size} is below 2K = {}",
                2 * num_arms
            )));
        }
        Ok(Self {
            state: EmpiricalState::new(num_arms),
            rule,
            batch_size,
            c_suf,
            trace: BatchTrace { batch_size, ..Default::default() },
            queue: VecDeque::new(),
            batch_sums: vec![0.0; num_arms],
            batch_counts: vec![0; num_arms],
            in_batch: false,
        })
    }

    pub fn trace(&self) -> &BatchTrace {
        &self.trace
    }

    pub fn state(&self) -> &EmpiricalState {
        &self.state
    }

    fn close_batch(&mut self) {
        let means = self
            .batch_sums
            .iter()
            .zip(&self.batch_counts)
            .map(|(s, &n)| (n > 0).then(|| s / n as f64))
            .collect();
        self.trace.means.push(means);
        self.batch_sums.iter_mut().for_each(|s| *s = 0.0);
        self.batch_counts.iter_mut().for_each(|n| *n = 0);
        self.in_batch = false;
    }

    fn open_batch(&mut self, rng: &mut dyn RngCore) {
        let k = self.state.num_arms();
        let (weights, draws) = if self.trace.weights.is_empty() {
            let draws = round_allocation(&Allocation::uniform(k), self.batch_size, rng)
                .expect("batch size checked at construction");
            let n = self.batch_size as f64;
            (draws.iter().map(|&d| d as f64 / n).collect(), draws)
        } else {
            let q = self.state.means().expect("first batch pulls every arm");
            let target = self.rule.allocate(&q);
            let plan = almost_tracking_batch(&self.trace.weights, &target, self.c_suf, self.batch_size, rng)
                .expect("batch size checked at construction");
            debug_assert!(plan.insufficient.iter().all(|&i| {
                plan.draws[i] as f64 >= target.weights()[i] * self.batch_size as f64 / (4.0 * plan.s_insuf) * (1.0 - 1e-12)
            }));
            (plan.weights.weights().to_vec(), plan.draws)
        };
        self.queue = round_robin(&draws);
        self.trace.weights.push(weights);
        self.in_batch = true;
    }
}

impl BaiAlgorithm for AlmostTracking {
    fn id(&self) -> &'static str {
        "almost-tracking"
    }

    fn next_arm(&mut self, rng: &mut dyn RngCore) -> Option<usize> {
        if self.queue.is_empty() {
            if self.in_batch {
                self.close_batch();
            }
            self.open_batch(rng);
        }
        self.queue.pop_front()
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
        self.batch_sums[arm] += reward;
        self.batch_counts[arm] += 1;
    }

    fn recommend(&self) -> Recommendation {
        recommend_empirical_best(&self.state)
    }
}
