//! Ground-truth instances, empirical statistics and the complexity measures
//! `H1`, `H2` and `H3`.
//!
//! Arms are indexed from zero throughout the crate.

use crate::error::{Error, Result};

/// A bandit instance: true arm means with unit-variance Gaussian rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: String,
    means: Vec<f64>,
}

impl Instance {
    /// Builds an instance, rejecting fewer than two arms, non-finite means and
    /// tied best arms.
    pub fn new(label: impl Into<String>, means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "an instance needs at least two arms, got {}",
                means.len()
            )));
        }
        if let Some(i) = means.iter().position(|m| !m.is_finite()) {
            return Err(Error::InvalidArgument(format!("mean of arm {i} is not finite")));
        }
        if best_arms(&means)?.len() != 1 {
            return Err(Error::Degenerate("ground-truth best arm must be unique".into()));
        }
        Ok(Self { label: label.into(), means })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn best_arm(&self) -> usize {
        argmax_first(&self.means)
    }
}

/// Pull counts and reward sums; everything a sampler may observe.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalState {
    counts: Vec<u64>,
    sums: Vec<f64>,
    t: u64,
}

impl EmpiricalState {
    pub fn new(num_arms: usize) -> Self {
        Self { counts: vec![0; num_arms], sums: vec![0.0; num_arms], t: 0 }
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.t += 1;
    }

    pub fn num_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn total_pulls(&self) -> u64 {
        self.t
    }

    /// Empirical mean of `arm`, `None` before its first pull.
    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.sums[arm] / self.counts[arm] as f64)
    }

    pub fn all_pulled(&self) -> bool {
        self.counts.iter().all(|&c| c > 0)
    }

    /// Vector of empirical means; fails if some arm was never pulled.
    pub fn means(&self) -> Result<Vec<f64>> {
        (0..self.num_arms())
            .map(|i| {
                self.mean(i)
                    .ok_or_else(|| Error::Precondition(format!("arm {i} has not been pulled")))
            })
            .collect()
    }

    /// Argmax of the empirical means among pulled arms, smallest index on ties.
    pub fn empirical_best(&self) -> Option<usize> {
        self.empirical_best_among(0..self.num_arms())
    }

    pub fn empirical_best_among(&self, arms: impl IntoIterator<Item = usize>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in arms {
            if let Some(m) = self.mean(i) {
                match best {
                    Some((_, bm)) if m <= bm => {}
                    _ => best = Some((i, m)),
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Gaps to the largest mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub gaps: Vec<f64>,
    pub best_set: Vec<usize>,
}

/// First index attaining the maximum.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// All indices attaining the maximum; exact ties are all included.
pub fn best_arms(means: &[f64]) -> Result<Vec<usize>> {
    if means.is_empty() {
        return Err(Error::InvalidArgument("empty mean vector".into()));
    }
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(means
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == max)
        .map(|(i, _)| i)
        .collect())
}

pub fn gaps(means: &[f64]) -> Result<GapVector> {
    let best_set = best_arms(means)?;
    let max = means[best_set[0]];
    Ok(GapVector { gaps: means.iter().map(|m| max - m).collect(), best_set })
}

fn unique_best_gaps(means: &[f64]) -> Result<GapVector> {
    if means.len() < 2 {
        return Err(Error::InvalidArgument("need at least two arms".into()));
    }
    let g = gaps(means)?;
    if g.best_set.len() != 1 {
        return Err(Error::Degenerate(format!(
            "best arm is not unique (tied arms {:?})",
            g.best_set
        )));
    }
    Ok(g)
}

/// `H1 = sum over suboptimal arms of gap^-2`.
pub fn h1(means: &[f64]) -> Result<f64> {
    let g = unique_best_gaps(means)?;
    let best = g.best_set[0];
    Ok(g.gaps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, d)| d.powi(-2))
        .sum())
}

/// `H2 = max_i i * gap_(i)^-2` over the ascending sorted gaps, with the best arm's
/// zero gap replaced by the second-smallest one. `gaussian_factor` multiplies by 4,
/// the unit-variance Gaussian variant.
pub fn h2(means: &[f64], gaussian_factor: bool) -> Result<f64> {
    let g = unique_best_gaps(means)?;
    let mut sorted = g.gaps;
    sorted.sort_by(f64::total_cmp);
    // sorted[0] is the best arm's zero gap; the max starts at rank 2 anyway.
    let value = sorted
        .iter()
        .enumerate()
        .skip(1)
        .map(|(idx, d)| (idx + 1) as f64 / (d * d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(if gaussian_factor { 4.0 * value } else { value })
}

/// Modified mean of the top-`j` arms of a descending-sorted mean vector.
///
/// Returns the self-consistent average of the best arm together with those of
/// arms `2..=j` (one-based) whose mean does not exceed the average. The included
/// arms always form a suffix of `2..=j`, so the `j` suffix lengths are scanned.
pub fn modified_mean(sorted_means: &[f64], j: usize) -> Result<f64> {
    let k = sorted_means.len();
    if j < 2 || j > k {
        return Err(Error::InvalidArgument(format!("top-j index {j} outside 2..={k}")));
    }
    if sorted_means.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("means must be sorted descending".into()));
    }
    let top = &sorted_means[..j];
    let best = top[0];
    let mut exact = None;
    let mut nearest = (f64::INFINITY, best);
    // `m` = number of included arms among top[1..j], taken from the bottom.
    let mut suffix_sum = 0.0;
    for m in 0..j {
        if m > 0 {
            suffix_sum += top[j - m];
        }
        let avg = (best + suffix_sum) / (m + 1) as f64;
        let included_max = if m > 0 { top[j - m] } else { f64::NEG_INFINITY };
        let excluded_min = if m < j - 1 { top[j - m - 1] } else { f64::INFINITY };
        if included_max <= avg && excluded_min > avg {
            debug_assert!(exact.is_none(), "modified mean is not unique");
            exact.get_or_insert(avg);
        }
        let violation = (included_max - avg).max(0.0) + (avg - excluded_min).max(0.0);
        if violation < nearest.0 {
            nearest = (violation, avg);
        }
    }
    // Rounding can break the exact consistency test at near-ties; the candidate
    // with the smallest violation is then the fixed point up to one ulp.
    Ok(exact.unwrap_or(nearest.1))
}

/// `H3 = max_j 2j / sum_{i<=j} (gap_i^(j))^2`, the exact error-exponent complexity
/// of Successive Rejects under unit-variance Gaussian rewards.
pub fn h3(means: &[f64]) -> Result<f64> {
    unique_best_gaps(means)?;
    let mut sorted = means.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = f64::NEG_INFINITY;
    for j in 2..=sorted.len() {
        let mm = modified_mean(&sorted, j)?;
        let mut sq = (sorted[0] - mm).powi(2);
        for &p in &sorted[1..j] {
            sq += (mm - p).max(0.0).powi(2);
        }
        best = best.max(2.0 * j as f64 / sq);
    }
    Ok(best)
}

/// `1/2 + sum_{i=2}^K 1/i`, the Successive Rejects schedule normaliser.
pub fn log_bar(num_arms: usize) -> f64 {
    0.5 + (2..=num_arms).map(|i| 1.0 / i as f64).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn best_arms_examples() {
        assert_eq!(best_arms(&[1.0, 0.8, 0.8]).unwrap(), vec![0]);
        assert_eq!(best_arms(&[1.0, 1.0, 0.0]).unwrap(), vec![0, 1]);
        assert_eq!(best_arms(&[0.0, 0.0]).unwrap(), vec![0, 1]);
        assert!(matches!(best_arms(&[]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gaps(&[1.0, 0.5, 0.0]).unwrap().gaps, vec![0.0, 0.5, 1.0]);
        let g = gaps(&[0.0, 0.0]).unwrap();
        assert_eq!(g.gaps, vec![0.0, 0.0]);
        assert_eq!(g.best_set, vec![0, 1]);
    }

    #[test]
    fn h1_examples() {
        assert_eq!(h1(&[1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(h1(&[1.0, 1.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn h2_two_arms() {
        assert_eq!(h2(&[1.0, 0.0], false).unwrap(), 2.0);
        assert_eq!(h2(&[1.0, 0.0], true).unwrap(), 8.0);
        assert!(h2(&[0.3, 0.3], false).is_err());
    }

    #[test]
    fn modified_mean_examples() {
        assert_relative_eq!(modified_mean(&[1.0, 0.0], 2).unwrap(), 0.5);
        assert_relative_eq!(modified_mean(&[1.0, 0.9, 0.2], 3).unwrap(), 0.6, epsilon = 1e-15);
        let eps = 1e-9;
        assert_relative_eq!(
            modified_mean(&[1.0, 1.0 - eps, 0.0], 2).unwrap(),
            (2.0 - eps) / 2.0,
            epsilon = 1e-15
        );
        assert!(modified_mean(&[0.0, 1.0], 2).is_err());
        assert!(modified_mean(&[1.0, 0.0], 3).is_err());
        assert!(modified_mean(&[1.0, 0.0], 1).is_err());
    }

    #[test]
    fn h3_examples() {
        assert_relative_eq!(h3(&[1.0, 0.0]).unwrap(), 8.0, max_relative = 1e-12);
        assert_relative_eq!(h3(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 12.5, max_relative = 1e-12);
    }

    #[test]
    fn empirical_best_ties_take_smallest_index() {
        let mut s = EmpiricalState::new(3);
        for (arm, r) in [(0, 0.2), (1, 0.9), (2, 0.9)] {
            s.record(arm, r);
        }
        assert_eq!(s.empirical_best(), Some(1));
        assert_eq!(s.total_pulls(), 3);
    }

    #[test]
    fn instance_rejects_ties_and_short_vectors() {
        assert!(Instance::new("x", vec![1.0]).is_err());
        assert!(Instance::new("x", vec![1.0, 1.0]).is_err());
        assert!(Instance::new("x", vec![f64::NAN, 1.0]).is_err());
        assert_eq!(Instance::new("x", vec![0.0, 1.0]).unwrap().best_arm(), 1);
    }

    #[test]
    fn log_bar_small_values() {
        assert_eq!(log_bar(2), 1.0);
        assert_relative_eq!(log_bar(3), 4.0 / 3.0, max_relative = 1e-15);
    }
}
