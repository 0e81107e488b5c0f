//! `bai rates`: rate table with lower / plug-in / upper columns and a minimax row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use bai_core::instances::instance_by_id;
use bai_core::model::{h1, h2};
use bai_core::simulation::{minimax_rate, rate_from_point, PoEPoint, RateEstimate};
use clap::ValueEnum;

use crate::error::{CliError, CliResult};
use crate::simulate::{read_poe_csv, PoeRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    H1,
    H2,
}

impl Measure {
    fn name(self) -> &'static str {
        match self {
            Self::H1 => "h1",
            Self::H2 => "h2",
        }
    }
}

pub const MINIMAX_LABEL: &str = "minimax";

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub algorithm: String,
    pub instance: String,
    pub t: u64,
    pub complexity: f64,
    pub rate: RateEstimate,
}

fn fmt_real(x: f64) -> String {
    if x.is_infinite() && x > 0.0 { "inf".to_string() } else { format!("{x}") }
}

pub fn complexity_of(instance: &str, measure: Measure) -> CliResult<f64> {
    let inst = instance_by_id(instance)?;
    Ok(match measure {
        Measure::H1 => h1(inst.means())?,
        Measure::H2 => h2(inst.means(), false)?,
    })
}

/// Per-(algorithm, instance) rates at each instance's final round, then one
/// minimax row per algorithm.
pub fn compute(rows: &[PoeRow], measure: Measure) -> CliResult<Vec<RateRow>> {
    if rows.is_empty() {
        return Err(CliError::Usage("no PoE rows supplied".into()));
    }
    let mut final_t: BTreeMap<&str, u64> = BTreeMap::new();
    for r in rows {
        let e = final_t.entry(&r.instance).or_insert(0);
        *e = (*e).max(r.t);
    }
    let algorithms: BTreeSet<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    let mut out = Vec::new();
    for (&instance, &t) in &final_t {
        let h = complexity_of(instance, measure)?;
        for &alg in &algorithms {
            let row = rows
                .iter()
                .find(|r| r.algorithm == alg && r.instance == instance && r.t == t)
                .ok_or_else(|| {
                    CliError::Usage(format!("no '{alg}' row for instance {instance} at final round {t}"))
                })?;
            let point = PoEPoint::from_counts(row.t, row.errors, row.replications, 0);
            out.push(RateRow {
                algorithm: alg.to_string(),
                instance: instance.to_string(),
                t,
                complexity: h,
                rate: rate_from_point(&point, h)?,
            });
        }
    }
    for &alg in &algorithms {
        let mine: Vec<&RateRow> = out.iter().filter(|r| r.algorithm == alg).collect();
        let col = |f: fn(&RateEstimate) -> f64| minimax_rate(&mine.iter().map(|r| f(&r.rate)).collect::<Vec<_>>());
        let rate = RateEstimate { lower: col(|r| r.lower)?, plugin: col(|r| r.plugin)?, upper: col(|r| r.upper)? };
        out.push(RateRow {
            algorithm: alg.to_string(),
            instance: MINIMAX_LABEL.to_string(),
            t: 0,
            complexity: f64::NAN,
            rate,
        });
    }
    Ok(out)
}

pub fn render(rows: &[RateRow], measure: Measure) -> String {
    let mut s = String::from("algorithm,instance,t,measure,complexity,rate_lower,rate_plugin,rate_upper\n");
    for r in rows {
        let (t, h) = if r.instance == MINIMAX_LABEL {
            (String::new(), String::new())
        } else {
            (r.t.to_string(), fmt_real(r.complexity))
        };
        writeln!(
            s,
            "{},{},{t},{},{h},{},{},{}",
            r.algorithm,
            r.instance,
            measure.name(),
            fmt_real(r.rate.lower),
            fmt_real(r.rate.plugin),
            fmt_real(r.rate.upper)
        )
        .expect("string write");
    }
    s
}

pub fn run(csvs: &[PathBuf], measure: Measure) -> CliResult<String> {
    let mut rows = Vec::new();
    for p in csvs {
        rows.extend(read_poe_csv(p)?);
    }
    Ok(render(&compute(&rows, measure)?, measure))
}
