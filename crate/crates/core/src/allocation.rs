//! The closed-form `H1` target allocation, constant-ratio integer rounding and
//! the stability functional used by the theory checks.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{gaps, h1};

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    /// Validates non-negativity and that the weights sum to one within `1e-9`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty allocation".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument("allocation weights must be finite and >= 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("allocation sums to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(num_arms: usize) -> Self {
        Self(vec![1.0 / num_arms as f64; num_arms])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-arm costs `D_i(Q)` and their inverse sum `Z(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DVector {
    pub d: Vec<f64>,
    pub z: f64,
}

/// `sum_{j != i} (gap_j + gap_i)^-2`; `+inf` when a zero denominator occurs
/// (arm `i` and some `j` both empirically best).
pub fn h1_prime(arm: usize, q: &[f64]) -> Result<f64> {
    if q.len() < 2 {
        return Err(Error::InvalidArgument("need at least two arms".into()));
    }
    if arm >= q.len() {
        return Err(Error::InvalidArgument(format!("arm {arm} out of range")));
    }
    let g = gaps(q)?.gaps;
    Ok(h1_prime_from_gaps(arm, &g))
}

fn h1_prime_from_gaps(arm: usize, g: &[f64]) -> f64 {
    let gi = g[arm];
    let mut total = 0.0;
    for (j, &gj) in g.iter().enumerate() {
        if j == arm {
            continue;
        }
        let s = gj + gi;
        if s == 0.0 {
            return f64::INFINITY;
        }
        total += 1.0 / (s * s);
    }
    total
}

/// `D_i = gap_i^2 * H1'(i, Q)` off the empirical best set; every best arm
/// takes the minimum over the others.
pub fn d_vector(q: &[f64]) -> Result<DVector> {
    if q.len() < 2 {
        return Err(Error::InvalidArgument("need at least two arms".into()));
    }
    let g = gaps(q)?;
    if g.best_set.len() == q.len() {
        return Err(Error::Degenerate("all empirical means are equal".into()));
    }
    let mut d = vec![f64::INFINITY; q.len()];
    let mut min_d = f64::INFINITY;
    for (i, &gi) in g.gaps.iter().enumerate() {
        if gi > 0.0 {
            // gi > 0 keeps every denominator positive; drop the j == i term afterwards.
            let all: f64 = g.gaps.iter().map(|&gj| 1.0 / ((gj + gi) * (gj + gi))).sum();
            d[i] = gi * gi * (all - 0.25 / (gi * gi));
            min_d = min_d.min(d[i]);
        }
    }
    for &b in &g.best_set {
        d[b] = min_d;
    }
    let z = d.iter().map(|x| 1.0 / x).sum();
    Ok(DVector { d, z })
}

/// `w*_i(Q) = 1 / (D_i(Q) Z(Q))`.
pub fn target_allocation_h1(q: &[f64]) -> Result<Allocation> {
    let DVector { d, z } = d_vector(q)?;
    let mut w: Vec<f64> = d.iter().map(|di| 1.0 / (di * z)).collect();
    // Renormalise to wash out the last-ulp drift of the two-step division.
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(Allocation(w))
}

/// A rule mapping empirical means to a target allocation.
pub trait AllocationRule: Send + Sync {
    fn allocate(&self, q: &[f64]) -> Allocation;
}

/// `target_allocation_h1`, falling back to uniform when every mean is equal.
#[derive(Debug, Clone, Copy, Default)]
pub struct H1Allocation;

impl AllocationRule for H1Allocation {
    fn allocate(&self, q: &[f64]) -> Allocation {
        target_allocation_h1(q).unwrap_or_else(|_| Allocation::uniform(q.len()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct UniformAllocation;

impl AllocationRule for UniformAllocation {
    fn allocate(&self, q: &[f64]) -> Allocation {
        Allocation::uniform(q.len())
    }
}

// Relative slack on `w_i * N'` before flooring, so that products such as
// (1/49) * 49 = 0.999... still floor to the intended integer.
const FLOOR_SLACK: f64 = 1e-9;

/// Constant-ratio ceiling: converts `w * n_batch` into integer pulls.
///
/// Every positive weight first receives `1 + floor(w_i (n_batch - support))`; the
/// remainder is topped off one pull at a time, drawing arm `i` with probability
/// `w_i` from `rng`. For `n_batch >= 2K` each entry is at least `w_i n_batch / 4`.
pub fn round_allocation<R: Rng + ?Sized>(
    w: &Allocation,
    n_batch: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let k = w.len() as u64;
    if n_batch < 2 * k {
        return Err(Error::Precondition(format!(
            "batch size {n_batch} is below 2K = {}",
            2 * k
        )));
    }
    let weights = w.weights();
    let support = weights.iter().filter(|&&x| x > 0.0).count() as u64;
    let reduced = (n_batch - support) as f64;
    let mut pulls: Vec<u64> = weights
        .iter()
        .map(|&x| {
            if x > 0.0 {
                1 + (x * reduced * (1.0 + FLOOR_SLACK)).floor() as u64
            } else {
                0
            }
        })
        .collect();
    let mut total: u64 = pulls.iter().sum();
    assert!(total <= n_batch, "rounding overshot the batch size");
    if total < n_batch {
        let sampler = WeightedIndex::new(weights).expect("allocation has positive mass");
        while total < n_batch {
            pulls[sampler.sample(rng)] += 1;
            total += 1;
        }
    }
    Ok(pulls)
}

/// `S(Q, P) = H1(P) * sum_i (Q_i - P_i)^2 / D_i(Q)`.
pub fn stability(q: &[f64], p: &[f64]) -> Result<f64> {
    if q.len() != p.len() {
        return Err(Error::InvalidArgument("Q and P differ in length".into()));
    }
    let dv = d_vector(q)?;
    let h = h1(p)?;
    let s: f64 = q
        .iter()
        .zip(p)
        .zip(&dv.d)
        .map(|((qi, pi), di)| (qi - pi).powi(2) / di)
        .sum();
    Ok(s * h)
}
