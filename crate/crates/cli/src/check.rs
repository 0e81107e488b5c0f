//! `bai check`: runs the theory-check suites and reports one line per check.

use bai_core::allocation::{H1Allocation, UniformAllocation};
use bai_core::instances::{synthetic_instance, SYNTHETIC_IDS};
use bai_core::model::Instance;
use bai_core::theory::{
    allocation_suite, brute_force_game_value, brute_force_min_stability, check_d_bounds_scaled, check_h3_band,
    fit_sr_exponent, h3_suite, rounding_suite, CheckReport, CheckStatus, GridSpec,
};
use clap::ValueEnum;

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Allocation,
    H3,
    Stability,
    SrExponent,
    All,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub trials: usize,
    pub seed: u64,
    pub sr_replications: u64,
    pub workers: Option<usize>,
    /// Scales `D` inside the sandwich check so that it must fail.
    pub inject_violation: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { trials: 10_000, seed: 0, sr_replications: 100_000, workers: None, inject_violation: false }
    }
}

const INJECTED_SCALE: f64 = 10.0;
const STABILITY_FLOOR_BAND: (f64, f64) = (0.5, 0.52);
pub const SR_SWEEP: [u64; 5] = [40, 80, 120, 160, 200];

fn status(ok: bool) -> CheckStatus {
    if ok { CheckStatus::Pass } else { CheckStatus::Fail }
}

fn report(name: &str, ok: bool, detail: String) -> CheckReport {
    CheckReport { name: name.into(), status: status(ok), detail, witness: None }
}

pub fn allocation_checks(o: &CheckOptions) -> Vec<CheckReport> {
    let scale = if o.inject_violation { INJECTED_SCALE } else { 1.0 };
    let mut out = rounding_suite(o.trials, o.seed).reports;
    out.extend(allocation_suite(o.trials, o.seed.wrapping_add(1), scale).reports);
    out
}

pub fn h3_checks(o: &CheckOptions) -> CliResult<Vec<CheckReport>> {
    let mut out = Vec::new();
    for id in SYNTHETIC_IDS {
        let inst = synthetic_instance(id.parse().expect("numeric id"))?;
        let (_, mut r) = check_h3_band(inst.means())?;
        r.name = format!("h3-band-instance-{id}");
        out.push(r);
    }
    let (ratio, _) = check_h3_band(&[1.0, 0.0])?;
    out.push(report("h3-equality-k2", (ratio - 1.0).abs() <= 1e-9, format!("ratio {ratio:.12}")));
    let equal: Vec<f64> = std::iter::once(1.0).chain(std::iter::repeat_n(0.0, 199)).collect();
    let (ratio, _) = check_h3_band(&equal)?;
    out.push(report("h3-equal-gaps-k200", ratio > 0.5 && ratio <= 0.55, format!("ratio {ratio:.6}")));
    out.extend(h3_suite(1000.min(o.trials.max(1)), o.seed.wrapping_add(2), 40).reports);
    Ok(out)
}

pub fn stability_checks(o: &CheckOptions) -> CliResult<Vec<CheckReport>> {
    let scale = if o.inject_violation { INJECTED_SCALE } else { 1.0 };
    let mut out = Vec::new();
    let m2 = brute_force_min_stability(2, &GridSpec::default_for(2))?;
    let (lo, hi) = STABILITY_FLOOR_BAND;
    out.push(report(
        "stability-floor-k2",
        m2.value >= lo && m2.value <= hi,
        format!("min {:.6} at Q={:?} P={:?} over {} pairs", m2.value, m2.q, m2.p, m2.evaluated),
    ));
    let m3 = brute_force_min_stability(3, &GridSpec::default_for(3))?;
    out.push(report(
        "stability-floor-k3",
        m3.value > 0.0,
        format!("min {:.6} at Q={:?} P={:?} over {} pairs", m3.value, m3.q, m3.p, m3.evaluated),
    ));
    for q in [[1.0, 0.5, 0.0].as_slice(), [1.0, 0.0].as_slice()] {
        let mut r = check_d_bounds_scaled(q, scale);
        r.name = format!("d-sandwich-{q:?}");
        out.push(r);
    }
    let grid = GridSpec::default_for(2);
    let star = brute_force_game_value(&grid, &H1Allocation)?;
    let unif = brute_force_game_value(&grid, &UniformAllocation)?;
    out.push(CheckReport {
        name: "game-value-k2".into(),
        status: CheckStatus::Pass,
        detail: format!("w* {:.6}, uniform {:.6} (diagnostic)", star.value, unif.value),
        witness: None,
    });
    Ok(out)
}

pub fn sr_exponent_checks(o: &CheckOptions) -> CliResult<Vec<CheckReport>> {
    let inst = Instance::new("sr-k2", vec![1.0, 0.0])?;
    let fit = fit_sr_exponent(&inst, &SR_SWEEP, o.sr_replications, o.seed, 20, 0.2, o.workers)?;
    Ok(vec![fit.report])
}

pub fn run(suite: Suite, o: &CheckOptions) -> CliResult<Vec<CheckReport>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Allocation | Suite::All) {
        out.extend(allocation_checks(o));
    }
    if matches!(suite, Suite::H3 | Suite::All) {
        out.extend(h3_checks(o)?);
    }
    if matches!(suite, Suite::Stability | Suite::All) {
        out.extend(stability_checks(o)?);
    }
    if matches!(suite, Suite::SrExponent | Suite::All) {
        out.extend(sr_exponent_checks(o)?);
    }
    Ok(out)
}

pub fn render(reports: &[CheckReport]) -> String {
    reports.iter().map(|r| format!("{r}\n")).collect()
}

pub fn any_failed(reports: &[CheckReport]) -> bool {
    reports.iter().any(|r| r.status == CheckStatus::Fail)
}
