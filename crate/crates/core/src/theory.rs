//! Executable checks of the structural guarantees: brute-force minimisers over
//! grids, bound checkers over randomised inputs, and an exponent fitter for
//! Successive Rejects.
//!
//! Every check yields a [`CheckReport`] with a pass / fail / inconclusive status
//! and, on failure, the witnessing input.

use std::fmt;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::algorithms::{AlgorithmConfig, BatchTrace};
use crate::allocation::{d_vector, round_allocation, target_allocation_h1, Allocation, AllocationRule};
use crate::error::{Error, Result};
use crate::model::{h2, h3, log_bar, Instance};
use crate::simulation::{estimate_poe, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
            Self::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub witness: Option<String>,
}

impl CheckReport {
    fn new(name: impl Into<String>, status: CheckStatus, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status, detail: detail.into(), witness: None }
    }

    fn with_witness(mut self, witness: Option<String>) -> Self {
        self.witness = witness;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.status, self.name, self.detail)?;
        if let Some(w) = &self.witness {
            write!(f, "\twitness={w}")?;
        }
        Ok(())
    }
}

/// Inclusive arithmetic grid `lo, lo + step, ..., <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub const fn new(lo: f64, hi: f64, step: f64) -> Self {
        Self { lo, hi, step }
    }

    pub const fn point(x: f64) -> Self {
        Self { lo: x, hi: x, step: 1.0 }
    }

    pub fn values(&self) -> Vec<f64> {
        assert!(self.step > 0.0 && self.lo.is_finite() && self.hi.is_finite(), "invalid axis");
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

/// Grid over `(Q, P)` pairs.
///
/// Shift and scale invariance lets `Q` be normalised: for `K = 2` it is
/// `(1, q)`, for `K = 3` it is `(1, q, 0)`, with `q` drawn from `q_axis`.
/// `P` ranges over the product grid of `p_axis` and, for `K = 2`, over the
/// ray `(1 - a, a)` for `a` in `ray`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub q_axis: Axis,
    pub p_axis: Option<Axis>,
    pub ray: Option<Axis>,
    /// Keep only pairs whose unique best arm of `P` is not a best arm of `Q`.
    pub misidentification_only: bool,
}

impl GridSpec {
    pub fn default_for(num_arms: usize) -> Self {
        match num_arms {
            2 => Self {
                q_axis: Axis::point(0.0),
                p_axis: Some(Axis::new(-10.0, 10.0, 0.1)),
                ray: Some(Axis::new(0.55, 50.0, 0.05)),
                misidentification_only: true,
            },
            _ => Self {
                q_axis: Axis::new(0.0, 1.0, 0.05),
                p_axis: Some(Axis::new(-10.0, 10.0, 0.1)),
                ray: None,
                misidentification_only: true,
            },
        }
    }

    fn q_points(&self, k: usize) -> Vec<Vec<f64>> {
        self.q_axis
            .values()
            .into_iter()
            .map(|q| if k == 2 { vec![1.0, q] } else { vec![1.0, q, 0.0] })
            .collect()
    }

    /// `P` points flattened with stride `k`.
    fn p_points(&self, k: usize) -> Vec<f64> {
        let mut out = Vec::new();
        if let Some(axis) = self.p_axis {
            let vals = axis.values();
            let n = vals.len();
            let total = n.pow(k as u32);
            out.reserve(total * k);
            for mut code in 0..total {
                // Last coordinate varies fastest.
                let start = out.len();
                out.resize(start + k, 0.0);
                for slot in out[start..].iter_mut().rev() {
                    *slot = vals[code % n];
                    code /= n;
                }
            }
        }
        if let (Some(ray), 2) = (self.ray, k) {
            for a in ray.values() {
                out.extend([1.0 - a, a]);
            }
        }
        out
    }
}

/// Unique argmax, `None` on ties.
fn unique_best(x: &[f64]) -> Option<usize> {
    let mut best = 0;
    let mut tied = false;
    for i in 1..x.len() {
        if x[i] > x[best] {
            best = i;
            tied = false;
        } else if x[i] == x[best] {
            tied = true;
        }
    }
    (!tied).then_some(best)
}

fn h1_fast(p: &[f64], best: usize) -> f64 {
    let top = p[best];
    p.iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, v)| (top - v).powi(-2))
        .sum()
}

fn is_misidentified(q: &[f64], p_best: usize) -> bool {
    let top = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    q[p_best] < top
}

/// Minimum of `S(Q, P)` over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMinimum {
    pub value: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub evaluated: usize,
}

fn grid_minimise(
    k: usize,
    grid: &GridSpec,
    objective: impl Fn(&[f64], &[f64], usize) -> Option<f64> + Sync,
) -> Result<GridMinimum> {
    if !(k == 2 || k == 3) {
        return Err(Error::InvalidArgument(format!("grid search supports K in {{2, 3}}, got {k}")));
    }
    let ps = grid.p_points(k);
    let mut best = GridMinimum { value: f64::INFINITY, q: vec![], p: vec![], evaluated: 0 };
    for q in grid.q_points(k) {
        if unique_best(&q).is_none() && q.iter().all(|&v| v == q[0]) {
            continue;
        }
        let (value, idx, evaluated) = ps
            .par_chunks_exact(k)
            .enumerate()
            .filter_map(|(idx, p)| {
                let pb = unique_best(p)?;
                if grid.misidentification_only && !is_misidentified(&q, pb) {
                    return None;
                }
                objective(&q, p, pb).map(|v| (v, idx, 1usize))
            })
            .reduce(
                || (f64::INFINITY, usize::MAX, 0),
                |a, b| {
                    let n = a.2 + b.2;
                    // Lowest value, then lowest grid index, for order independence.
                    if (b.0, b.1) < (a.0, a.1) { (b.0, b.1, n) } else { (a.0, a.1, n) }
                },
            );
        best.evaluated += evaluated;
        if value < best.value {
            best.value = value;
            best.q = q.clone();
            best.p = ps[idx * k..(idx + 1) * k].to_vec();
        }
    }
    Ok(best)
}

/// Exhaustive grid minimum of the stability functional over misidentifying pairs.
pub fn brute_force_min_stability(num_arms: usize, grid: &GridSpec) -> Result<GridMinimum> {
    grid_minimise(num_arms, grid, |q, p, pb| {
        let dv = d_vector(q).ok()?;
        let s: f64 = q.iter().zip(p).zip(&dv.d).map(|((a, b), d)| (a - b).powi(2) / d).sum();
        Some(s * h1_fast(p, pb))
    })
}

/// Grid infimum of `H1(P) sum_i w_i(Q) (Q_i - P_i)^2 / 2` for a two-armed rule.
pub fn brute_force_game_value(grid: &GridSpec, rule: &dyn AllocationRule) -> Result<GridMinimum> {
    grid_minimise(2, grid, |q, p, pb| {
        let w = rule.allocate(q);
        let loss: f64 = w.weights().iter().zip(q).zip(p).map(|((w, a), b)| w * (a - b).powi(2) / 2.0).sum();
        Some(h1_fast(p, pb) * loss)
    })
}

/// `L_i = (i - 1) + sum_{j > i} (gap_i / gap_j)^2` (one-based, sorted descending).
pub fn sandwich_scale(sorted_q: &[f64], i: usize) -> f64 {
    let top = sorted_q[0];
    let gi = top - sorted_q[i];
    let tail: f64 = sorted_q[i + 1..].iter().map(|&v| (gi / (top - v)).powi(2)).sum();
    i as f64 + tail
}

/// Checks `L_i / 4 <= D_i <= L_i` on every non-best arm of a descending-sorted `Q`.
pub fn check_d_bounds(sorted_q: &[f64]) -> CheckReport {
    check_d_bounds_scaled(sorted_q, 1.0)
}

/// [`check_d_bounds`] with `D` multiplied by `perturbation` (fault injection).
pub fn check_d_bounds_scaled(sorted_q: &[f64], perturbation: f64) -> CheckReport {
    let name = "d-sandwich";
    if sorted_q.windows(2).any(|w| w[0] < w[1]) {
        return CheckReport::new(name, CheckStatus::Fail, "Q is not sorted descending")
            .with_witness(Some(format!("{sorted_q:?}")));
    }
    let dv = match d_vector(sorted_q) {
        Ok(dv) => dv,
        Err(e) => return CheckReport::new(name, CheckStatus::Fail, e.to_string()),
    };
    let top = sorted_q[0];
    let mut violations = Vec::new();
    for i in 1..sorted_q.len() {
        if sorted_q[i] == top {
            continue;
        }
        let l = sandwich_scale(sorted_q, i);
        let d = dv.d[i] * perturbation;
        let slack = 1e-12 * l;
        if d < l / 4.0 - slack || d > l + slack {
            violations.push(format!("arm {i}: D={d} not in [{}, {l}]", l / 4.0));
        }
    }
    if violations.is_empty() {
        CheckReport::new(name, CheckStatus::Pass, format!("{} arms within [L/4, L]", sorted_q.len() - 1))
    } else {
        CheckReport::new(name, CheckStatus::Fail, violations.join("; "))
            .with_witness(Some(format!("{sorted_q:?}")))
    }
}

/// `H3 / H2(gaussian)` must lie in `(1/2, 1]`.
pub fn check_h3_band(means: &[f64]) -> Result<(f64, CheckReport)> {
    let ratio = h3(means)? / h2(means, true)?;
    let ok = ratio > 0.5 && ratio <= 1.0 + 1e-12;
    let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
    let report = CheckReport::new("h3-band", status, format!("H3/H2 = {ratio:.12} (K = {})", means.len()))
        .with_witness((!ok).then(|| format!("{means:?}")));
    Ok((ratio, report))
}

/// Result of fitting the Successive Rejects error exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SrExponentFit {
    /// `(T, errors, PoE)` per sweep point.
    pub points: Vec<(u64, u64, f64)>,
    /// Least-squares slope of `-ln PoE` against `T` over all points, when every
    /// point has enough error events.
    pub slope: Option<f64>,
    /// `1 / (H3 logbar(K))`.
    pub predicted: f64,
    pub relative_deviation: Option<f64>,
    pub report: CheckReport,
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Estimates SR's PoE at each budget and fits the exponent.
///
/// The fit is inconclusive unless every point has at least `min_errors` error
/// events; otherwise it passes when the slope is within `tolerance` (relative)
/// of the prediction.
pub fn fit_sr_exponent(
    instance: &Instance,
    budgets: &[u64],
    replications: u64,
    seed: u64,
    min_errors: u64,
    tolerance: f64,
    workers: Option<usize>,
) -> Result<SrExponentFit> {
    if budgets.len() < 4 {
        return Err(Error::InvalidArgument("the budget sweep needs at least 4 points".into()));
    }
    fit_sr_exponent_with_noise(instance, budgets, replications, seed, min_errors, tolerance, workers, 1.0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_sr_exponent_with_noise(
    instance: &Instance,
    budgets: &[u64],
    replications: u64,
    seed: u64,
    min_errors: u64,
    tolerance: f64,
    workers: Option<usize>,
    noise_sd: f64,
) -> Result<SrExponentFit> {
    let predicted = 1.0 / (h3(instance.means())? * log_bar(instance.num_arms()));
    let mut points = Vec::with_capacity(budgets.len());
    for &t in budgets {
        let mut cfg = ExperimentConfig::new(
            instance.label.clone(),
            instance.clone(),
            vec![AlgorithmConfig::SuccessiveRejects],
            t,
            replications,
            seed,
        );
        cfg.checkpoints = vec![t];
        cfg.noise_sd = noise_sd;
        let curve = estimate_poe(&cfg, workers)?.remove(0);
        let p = curve.final_point();
        points.push((t, p.errors, p.poe));
    }
    let name = "sr-exponent";
    let scarce: Vec<u64> = points.iter().filter(|p| p.1 < min_errors).map(|p| p.0).collect();
    if !scarce.is_empty() {
        let report = CheckReport::new(
            name,
            CheckStatus::Inconclusive,
            format!(
                "fewer than {min_errors} error events at T = {scarce:?} (errors {:?}); predicted slope {predicted:.6}",
                points.iter().map(|p| p.1).collect::<Vec<_>>()
            ),
        );
        return Ok(SrExponentFit { points, slope: None, predicted, relative_deviation: None, report });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| -p.2.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let dev = (slope - predicted) / predicted;
    let status = if dev.abs() <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
    let report = CheckReport::new(
        name,
        status,
        format!("slope {slope:.6} vs predicted {predicted:.6} (deviation {:+.1}%)", 100.0 * dev),
    );
    Ok(SrExponentFit { points, slope: Some(slope), predicted, relative_deviation: Some(dev), report })
}

/// Tracking quality of a batched run with known means `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackabilityReport {
    /// `(1/B) sum_b sum_i w_{b,i} (Q_{b,i} - P_i)^2 / 2`.
    pub lhs: f64,
    /// Grid infimum over misidentifying `Q` of `sum_i w*_i(Q) (Q_i - P_i)^2 / 2`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Compares a recorded trace against the grid-approximated one-shot optimum.
/// `offsets` gives the grid of `Q_i - P_i` per coordinate; `K <= 3`.
pub fn trackability_ratio(trace: &BatchTrace, p: &[f64], offsets: Axis) -> Result<TrackabilityReport> {
    let k = p.len();
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidArgument("trackability grid supports K <= 3".into()));
    }
    let pb = unique_best(p).ok_or_else(|| Error::Degenerate("P has tied best arms".into()))?;
    let b = trace.num_batches();
    if b == 0 {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    let mut lhs = 0.0;
    for (w_row, q_row) in trace.weights.iter().zip(&trace.means) {
        for i in 0..k {
            if let (true, Some(q)) = (w_row[i] > 0.0, q_row[i]) {
                lhs += w_row[i] * (q - p[i]).powi(2) / 2.0;
            }
        }
    }
    lhs /= b as f64;

    let offs = offsets.values();
    let n = offs.len();
    let total = n.pow(k as u32);
    let rhs = (0..total)
        .into_par_iter()
        .filter_map(|mut code| {
            let mut q = vec![0.0; k];
            for (i, qi) in q.iter_mut().enumerate() {
                *qi = p[i] + offs[code % n];
                code /= n;
            }
            if !is_misidentified(&q, pb) {
                return None;
            }
            let w = target_allocation_h1(&q).ok()?;
            Some(w.weights().iter().zip(&q).zip(p).map(|((w, a), b)| w * (a - b).powi(2) / 2.0).sum::<f64>())
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(TrackabilityReport { lhs, rhs, ratio: lhs / rhs })
}

fn random_means<R: Rng>(rng: &mut R, k: usize, allow_ties: bool) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    let shift = rng.random_range(-5.0..5.0);
    let mut q: Vec<f64> = (0..k).map(|_| shift + scale * rng.sample::<f64, _>(StandardNormal)).collect();
    if allow_ties && k > 2 && rng.random_bool(0.2) {
        let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
        q[a] = q[b];
    }
    q
}

/// Summary of a randomised suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub trials: usize,
    pub reports: Vec<CheckReport>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.status != CheckStatus::Fail)
    }
}

/// Rounding guarantees on random `(w, N_B >= 2K)`: integrality, exact sum and
/// `N_i >= w_i N_B / 4`.
pub fn rounding_suite(trials: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum_bad, mut floor_bad) = (0usize, 0usize);
    let mut witness = None;
    for _ in 0..trials {
        let k = rng.random_range(2..=64usize);
        let mut w: Vec<f64> = (0..k)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.sample::<f64, _>(Exp1) })
            .collect();
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let alloc = Allocation::new(w).expect("normalised");
        let n_b = 2 * k as u64 + rng.random_range(0..=500u64);
        let pulls = round_allocation(&alloc, n_b, &mut rng).expect("N_B >= 2K");
        if pulls.iter().sum::<u64>() != n_b {
            sum_bad += 1;
            witness.get_or_insert_with(|| format!("w={:?} N_B={n_b} pulls={pulls:?}", alloc.weights()));
        }
        if pulls.iter().zip(alloc.weights()).any(|(&n, &wi)| (n as f64) < wi * n_b as f64 / 4.0) {
            floor_bad += 1;
            witness.get_or_insert_with(|| format!("w={:?} N_B={n_b} pulls={pulls:?}", alloc.weights()));
        }
    }
    let status = |bad: usize| if bad == 0 { CheckStatus::Pass } else { CheckStatus::Fail };
    SuiteOutcome {
        trials,
        reports: vec![
            CheckReport::new("rounding-integer", CheckStatus::Pass, "outputs are u64 by construction"),
            CheckReport::new("rounding-sum", status(sum_bad), format!("{sum_bad}/{trials} violations"))
                .with_witness(if sum_bad > 0 { witness.clone() } else { None }),
            CheckReport::new("rounding-floor", status(floor_bad), format!("{floor_bad}/{trials} violations"))
                .with_witness(if floor_bad > 0 { witness } else { None }),
        ],
    }
}

/// `w*` simplex, positivity and floor, the `D` sandwich and the `Z` band on random `Q`.
/// `perturbation` scales `D` in the sandwich check (1.0 for the honest run).
pub fn allocation_suite(trials: usize, seed: u64, perturbation: f64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arms = Uniform::new_inclusive(2usize, 64).expect("valid range");
    let mut bad = [0usize; 4];
    let mut witnesses: [Option<String>; 4] = Default::default();
    for _ in 0..trials {
        let k = arms.sample(&mut rng);
        let mut q = random_means(&mut rng, k, true);
        if q.iter().all(|&v| v == q[0]) {
            q[0] += 1.0;
        }
        let kf = k as f64;
        let w = target_allocation_h1(&q).expect("non-degenerate");
        let sum: f64 = w.weights().iter().sum();
        let floor = 1.0 / (4.0 * kf * (2.0 + kf.ln()));
        if (sum - 1.0).abs() > 1e-12 || w.weights().iter().any(|&x| x.is_nan() || x <= 0.0) {
            bad[0] += 1;
            witnesses[0].get_or_insert_with(|| format!("{q:?}"));
        }
        if w.weights().iter().any(|&x| x < floor) {
            bad[1] += 1;
            witnesses[1].get_or_insert_with(|| format!("{q:?}"));
        }
        let mut sorted = q.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if !check_d_bounds_scaled(&sorted, perturbation).passed() {
            bad[2] += 1;
            witnesses[2].get_or_insert_with(|| format!("{sorted:?}"));
        }
        let dv = d_vector(&q).expect("non-degenerate");
        let z_ok = dv.z <= 4.0 * (2.0 + kf.ln()) && dv.d.iter().all(|d| 1.0 / d >= 1.0 / (4.0 * kf));
        if !z_ok {
            bad[3] += 1;
            witnesses[3].get_or_insert_with(|| format!("{q:?}"));
        }
    }
    let names = ["allocation-simplex", "allocation-floor", "allocation-d-sandwich", "allocation-z-band"];
    SuiteOutcome {
        trials,
        reports: names
            .iter()
            .zip(bad)
            .zip(witnesses)
            .map(|((name, b), w)| {
                let status = if b == 0 { CheckStatus::Pass } else { CheckStatus::Fail };
                CheckReport::new(*name, status, format!("{b}/{trials} violations")).with_witness(w)
            })
            .collect(),
    }
}

/// `H3 / H2(gaussian)` band on random instances with `K <= max_arms`.
pub fn h3_suite(trials: usize, seed: u64, max_arms: usize) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0usize;
    let mut witness = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let k = rng.random_range(2..=max_arms);
        let mut p = random_means(&mut rng, k, false);
        let top = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if p.iter().filter(|&&v| v == top).count() > 1 {
            p[0] = top + 1.0;
        }
        let (ratio, report) = check_h3_band(&p).expect("unique best");
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if !report.passed() {
            bad += 1;
            witness.get_or_insert(report.witness.unwrap_or_default());
        }
    }
    let status = if bad == 0 { CheckStatus::Pass } else { CheckStatus::Fail };
    SuiteOutcome {
        trials,
        reports: vec![CheckReport::new(
            "h3-band-random",
            status,
            format!("{bad}/{trials} violations; observed ratio range [{lo:.6}, {hi:.6}]"),
        )
        .with_witness(witness)],
    }
}
