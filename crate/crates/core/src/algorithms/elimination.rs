//! Successive Rejects and Sequential Halving.

use std::collections::VecDeque;

use rand::RngCore;

use super::{BaiAlgorithm, Recommendation};
use crate::error::{Error, Result};
use crate::model::{log_bar, EmpiricalState};

/// Cumulative per-arm pull targets `n_1..n_{K-1}` of Successive Rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrSchedule {
    pub cumulative: Vec<u64>,
}

impl SrSchedule {
    /// Fresh pulls per surviving arm in phase `k` (one-based).
    pub fn phase_pulls(&self, k: usize) -> u64 {
        let prev = if k >= 2 { self.cumulative[k - 2] } else { 0 };
        self.cumulative[k - 1] - prev
    }

    pub fn total_pulls(&self) -> u64 {
        let k_arms = self.cumulative.len() + 1;
        (1..k_arms).map(|k| (k_arms + 1 - k) as u64 * self.phase_pulls(k)).sum()
    }
}

/// `n_k = ceil((T - K) / (logbar(K) (K + 1 - k)))`.
pub fn sr_schedule(num_arms: usize, budget: u64) -> Result<SrSchedule> {
    if num_arms < 2 {
        return Err(Error::InvalidConfig("need at least two arms".into()));
    }
    if budget <= num_arms as u64 {
        return Err(Error::InvalidConfig(format!(
            "budget {budget} leaves no pull per arm for K = {num_arms}"
        )));
    }
    let lb = log_bar(num_arms);
    let spare = (budget - num_arms as u64) as f64;
    let cumulative: Vec<u64> = (1..num_arms)
        .map(|k| (spare / (lb * (num_arms + 1 - k) as f64)).ceil() as u64)
        .collect();
    let schedule = SrSchedule { cumulative };
    if schedule.total_pulls() > budget {
        return Err(Error::InvalidConfig(format!(
            "schedule needs {} pulls, above budget {budget}",
            schedule.total_pulls()
        )));
    }
    Ok(schedule)
}

/// Successive Rejects: `K - 1` phases, dropping the lowest cumulative mean after each.
pub struct SuccessiveRejects {
    schedule: SrSchedule,
    state: EmpiricalState,
    survivors: Vec<usize>,
    phase: usize,
    queue: VecDeque<usize>,
    eliminated: Vec<usize>,
}

impl SuccessiveRejects {
    pub fn new(num_arms: usize, budget: u64) -> Result<Self> {
        let schedule = sr_schedule(num_arms, budget)?;
        Ok(Self {
            schedule,
            state: EmpiricalState::new(num_arms),
            survivors: (0..num_arms).collect(),
            phase: 0,
            queue: VecDeque::new(),
            eliminated: Vec::new(),
        })
    }

    /// Arms in elimination order.
    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    pub fn state(&self) -> &EmpiricalState {
        &self.state
    }

    fn eliminate(&mut self) {
        // Lowest cumulative mean; the largest index loses ties.
        let mut worst = 0;
        for idx in 1..self.survivors.len() {
            let cand = self.state.mean(self.survivors[idx]).unwrap_or(f64::NEG_INFINITY);
            let cur = self.state.mean(self.survivors[worst]).unwrap_or(f64::NEG_INFINITY);
            if cand <= cur {
                worst = idx;
            }
        }
        self.eliminated.push(self.survivors.remove(worst));
    }
}

impl BaiAlgorithm for SuccessiveRejects {
    fn id(&self) -> &'static str {
        "sr"
    }

    fn next_arm(&mut self, _rng: &mut dyn RngCore) -> Option<usize> {
        while self.queue.is_empty() {
            if self.phase > 0 {
                self.eliminate();
            }
            if self.survivors.len() == 1 {
                return None;
            }
            self.phase += 1;
            let m = self.schedule.phase_pulls(self.phase) as usize;
            for &arm in &self.survivors {
                self.queue.extend(std::iter::repeat_n(arm, m));
            }
        }
        self.queue.pop_front()
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.state.record(arm, reward);
    }

    fn recommend(&self) -> Recommendation {
        if self.survivors.len() == 1 {
            return Recommendation::arm(self.survivors[0]);
        }
        if self.survivors.iter().any(|&a| self.state.counts()[a] == 0) {
            return Recommendation::fallback();
        }
        self.state
            .empirical_best_among(self.survivors.iter().copied())
            .map_or(Recommendation::fallback(), Recommendation::arm)
    }
}

/// `ceil(log2 K)` for `K >= 1`.
pub fn ceil_log2(k: usize) -> u32 {
    usize::BITS - (k.max(1) - 1).leading_zeros()
}

/// Per-arm pulls in a Sequential Halving round with `survivors` arms.
pub fn sh_round_pulls(budget: u64, survivors: usize, num_arms: usize) -> u64 {
    budget / (survivors as u64 * ceil_log2(num_arms) as u64)
}

/// Sequential Halving: `ceil(log2 K)` rounds on fresh samples, keeping the top half.
pub struct SequentialHalving {
    budget: u64,
    num_arms: usize,
    survivors: Vec<usize>,
    round_state: EmpiricalState,
    queue: VecDeque<usize>,
    rounds_done: u32,
    last_winner: Option<usize>,
    in_round: bool,
}

impl SequentialHalving {
    pub fn new(num_arms: usize, budget: u64) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::InvalidConfig("need at least two arms".into()));
        }
        let min = num_arms as u64 * ceil_log2(num_arms) as u64;
        if budget < min {
            return Err(Error::InvalidConfig(format!(
                "budget {budget} is below K ceil(log2 K) = {min}"
            )));
        }
        Ok(Self {
            budget,
            num_arms,
            survivors: (0..num_arms).collect(),
            round_state: EmpiricalState::new(num_arms),
            queue: VecDeque::new(),
            rounds_done: 0,
            last_winner: None,
            in_round: false,
        })
    }

    pub fn rounds_done(&self) -> u32 {
        self.rounds_done
    }

    pub fn survivors(&self) -> &[usize] {
        &self.survivors
    }

    fn finish_round(&mut self) {
        let mut ranked = self.survivors.clone();
        // Descending round mean; the stable sort keeps smaller indices first on ties.
        ranked.sort_by(|&a, &b| {
            let ma = self.round_state.mean(a).unwrap_or(f64::NEG_INFINITY);
            let mb = self.round_state.mean(b).unwrap_or(f64::NEG_INFINITY);
            mb.total_cmp(&ma)
        });
        self.last_winner = Some(ranked[0]);
        ranked.truncate(self.survivors.len().div_ceil(2));
        ranked.sort_unstable();
        self.survivors = ranked;
        self.rounds_done += 1;
        self.in_round = false;
    }
}

impl BaiAlgorithm for SequentialHalving {
    fn id(&self) -> &'static str {
        "sh"
    }

    fn next_arm(&mut self, _rng: &mut dyn RngCore) -> Option<usize> {
        if self.queue.is_empty() {
            if self.survivors.len() == 1 {
                return None;
            }
            let m = sh_round_pulls(self.budget, self.survivors.len(), self.num_arms) as usize;
            self.round_state = EmpiricalState::new(self.num_arms);
            for &arm in &self.survivors {
                self.queue.extend(std::iter::repeat_n(arm, m));
            }
            self.in_round = true;
        }
        self.queue.pop_front()
    }

    fn observe(&mut self, arm: usize, reward: f64) {
        self.round_state.record(arm, reward);
        if self.in_round && self.queue.is_empty() {
            self.finish_round();
        }
    }

    fn recommend(&self) -> Recommendation {
        if self.survivors.len() == 1 {
            return Recommendation::arm(self.survivors[0]);
        }
        self.last_winner.map_or(Recommendation::fallback(), Recommendation::arm)
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
    fn sr_schedule_examples() {
        let s = sr_schedule(3, 20).unwrap();
        assert_eq!(s.cumulative, vec![5, 7]);
        assert_eq!(s.total_pulls(), 19);
        let s = sr_schedule(2, 100).unwrap();
        assert_eq!(s.cumulative, vec![49]);
        assert_eq!(s.total_pulls(), 98);
        assert!(sr_schedule(3, 3).is_err());
        let s = sr_schedule(40, 2000).unwrap();
        assert!(s.cumulative.windows(2).all(|w| w[0] <= w[1]));
        assert!(s.total_pulls() <= 2000 && s.total_pulls() >= 2000 - 40);
    }

    #[test]
    fn sr_noiseless_ordering_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sr = SuccessiveRejects::new(3, 20).unwrap();
        let rec = drive(&mut sr, &GaussianEnvironment::noiseless(&[1.0, 0.5, 0.0]), 20, &[20], &mut rng);
        assert_eq!(sr.eliminated(), &[2, 1]);
        assert_eq!(rec.recommendations[0], Recommendation::arm(0));
        assert_eq!(rec.pulls, sr_schedule(3, 20).unwrap().total_pulls());

        let mut sr = SuccessiveRejects::new(3, 20).unwrap();
        drive(&mut sr, &GaussianEnvironment::noiseless(&[1.0, 0.0, 0.0]), 20, &[20], &mut rng);
        assert_eq!(sr.eliminated()[0], 2);
    }

    #[test]
    fn sh_schedule_and_rounds() {
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(4), 2);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(40), 6);
        assert_eq!(sh_round_pulls(80, 4, 4), 10);
        assert_eq!(sh_round_pulls(80, 2, 4), 20);

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sh = SequentialHalving::new(4, 80).unwrap();
        let env = GaussianEnvironment::noiseless(&[1.0, 0.9, 0.8, 0.7]);
        let rec = drive(&mut sh, &env, 80, &[39, 40, 41, 80], &mut rng);
        assert_eq!(rec.recommendations[0], Recommendation::fallback());
        assert_eq!(rec.recommendations[1], Recommendation::arm(0));
        assert_eq!(rec.recommendations[3], Recommendation::arm(0));
        assert_eq!(sh.rounds_done(), 2);
        assert_eq!(rec.pulls, 80);
        assert!(SequentialHalving::new(4, 7).is_err());
    }

    #[test]
    fn sh_rounds_equal_ceil_log2() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [2usize, 3, 5, 8, 13, 40] {
            let means: Vec<f64> = (0..k).map(|i| -(i as f64)).collect();
            let mut sh = SequentialHalving::new(k, 1000).unwrap();
            drive(&mut sh, &GaussianEnvironment::noiseless(&means), 1000, &[1000], &mut rng);
            assert_eq!(sh.rounds_done(), ceil_log2(k));
            assert_eq!(sh.survivors(), &[0]);
        }
    }
}
