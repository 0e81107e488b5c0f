//! Benchmark instances: ten synthetic `K = 40` instances and two instances
//! derived from real data (Open Bandit CTRs and MovieLens 1M ratings).

use crate::error::{Error, Result};
use crate::model::Instance;

pub const SYNTHETIC_ARMS: usize = 40;
pub const OBD_ARMS: usize = 80;
pub const MOVIELENS_ARMS: usize = 31;

/// Mean standard deviation of the Open Bandit CTRs.
pub const OBD_CTR_STD: f64 = 0.057774753125;
/// Mean standard deviation of the MovieLens ratings.
pub const MOVIELENS_RATING_STD: f64 = 0.17820006619699696;

pub const OBD_CTR_ASSET: &str = include_str!("../assets/obd_ctr.txt");
pub const MOVIELENS_ASSET: &str = include_str!("../assets/movielens_ratings.txt");

/// Registry entry for a benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub id: &'static str,
    pub num_arms: usize,
    /// Default horizon for experiments.
    pub suggested_budget: u64,
    /// False when the horizon is a local calibration rather than a published value.
    pub budget_published: bool,
    pub description: &'static str,
}

pub const SYNTHETIC_IDS: [&str; 10] = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"];

// Horizons for instances other than 9 are local calibrations: Almost Tracking
// reaches a PoE of roughly 0.05 (400 replications).
const SYNTHETIC_SPECS: [InstanceSpec; 10] = [
    spec("1", 15000, false, "1 - (i-1) * 0.05"),
    spec("2", 1000, false, "10 (i-1)^0.8 / 39^0.8, arm 40 best"),
    spec("3", 6000, false, "1 - sqrt(i-1) / 10"),
    spec("4", 6000, false, "{1, 0.9 x4, 0 x35}"),
    spec("5", 60000, false, "concave: sin((K-1) pi / 2K) then sin(9 pi (K-i) / 20K)"),
    spec("6", 6000, false, "convex: 0.75 * 3^(-i/10)"),
    spec("7", 6000, false, "{1, 0.8 x39}"),
    spec("8", 2500, false, "{1, 0.8 x3, 0.8 x6, 0.2 x10, 0 x20}"),
    spec("9", 2000, true, "{1, 0.8, 0.8, 0 x37}"),
    spec("10", 4000, false, "{1, 0.9, 0.85, 0.8, 0 x36}"),
];

const fn spec(
    id: &'static str,
    suggested_budget: u64,
    budget_published: bool,
    description: &'static str,
) -> InstanceSpec {
    InstanceSpec { id, num_arms: SYNTHETIC_ARMS, suggested_budget, budget_published, description }
}

const REAL_SPECS: [InstanceSpec; 2] = [
    InstanceSpec {
        id: "obd",
        num_arms: OBD_ARMS,
        suggested_budget: 3000,
        budget_published: true,
        description: "Open Bandit CTRs / 0.057774753125 * sqrt(1000)",
    },
    InstanceSpec {
        id: "movielens",
        num_arms: MOVIELENS_ARMS,
        suggested_budget: 10000,
        budget_published: true,
        description: "MovieLens 1M ratings / 0.17820006619699696",
    },
];

/// All registered instance specs, synthetic first.
pub fn registry() -> impl Iterator<Item = &'static InstanceSpec> {
    SYNTHETIC_SPECS.iter().chain(REAL_SPECS.iter())
}

pub fn lookup(id: &str) -> Result<&'static InstanceSpec> {
    registry()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown instance '{id}'")))
}

/// Builds a registered instance by id (`"1"`..`"10"`, `"obd"`, `"movielens"`).
pub fn instance_by_id(id: &str) -> Result<Instance> {
    match id {
        "obd" => load_real_instance(RealDataset::OpenBandit, OBD_CTR_ASSET, RealScaling::Normalise),
        "movielens" => {
            load_real_instance(RealDataset::MovieLens, MOVIELENS_ASSET, RealScaling::Normalise)
        }
        other => {
            let n: u8 = other
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("unknown instance '{other}'")))?;
            synthetic_instance(n)
        }
    }
}

/// Synthetic instance `id` in `1..=10`, `K = 40`.
pub fn synthetic_instance(id: u8) -> Result<Instance> {
    let k = SYNTHETIC_ARMS;
    let kf = k as f64;
    let repeat = |parts: &[(f64, usize)]| -> Vec<f64> {
        parts.iter().flat_map(|&(v, n)| std::iter::repeat_n(v, n)).collect()
    };
    let means: Vec<f64> = match id {
        1 => (1..=k).map(|i| 1.0 - (i - 1) as f64 * 0.05).collect(),
        2 => (1..=k).map(|i| 10.0 * ((i - 1) as f64).powf(0.8) / 39f64.powf(0.8)).collect(),
        3 => (1..=k).map(|i| 1.0 - ((i - 1) as f64).sqrt() / 10.0).collect(),
        4 => repeat(&[(1.0, 1), (0.9, 4), (0.0, 35)]),
        5 => std::iter::once((std::f64::consts::PI * (kf - 1.0) / (2.0 * kf)).sin())
            .chain((2..=k).map(|i| (9.0 * std::f64::consts::PI * (kf - i as f64) / (20.0 * kf)).sin()))
            .collect(),
        6 => (1..=k).map(|i| 0.75 * 3f64.powf(-(i as f64) / 10.0)).collect(),
        7 => repeat(&[(1.0, 1), (0.8, 39)]),
        8 => repeat(&[(1.0, 1), (0.8, 3), (0.8, 6), (0.2, 10), (0.0, 20)]),
        9 => repeat(&[(1.0, 1), (0.8, 2), (0.0, 37)]),
        10 => repeat(&[(1.0, 1), (0.9, 1), (0.85, 1), (0.8, 1), (0.0, 36)]),
        _ => {
            return Err(Error::InvalidArgument(format!("synthetic instance id {id} outside 1..=10")));
        }
    };
    debug_assert_eq!(means.len(), k);
    Instance::new(id.to_string(), means)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealDataset {
    OpenBandit,
    MovieLens,
}

/// How the raw table values become means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealScaling {
    /// OBD: `ctr / 0.057774753125 * sqrt(1000)`; MovieLens: `rating / 0.17820006619699696`.
    Normalise,
    /// Use the table values as the final means.
    AsIs,
}

/// Parses a one-value-per-line table; `#` starts a comment.
pub fn parse_value_table(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter_map(|(n, line)| {
            let body = line.split('#').next().unwrap_or("").trim();
            (!body.is_empty()).then_some((n, body))
        })
        .map(|(n, body)| {
            body.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::DataFormat(format!("line {}: '{body}' is not a real", n + 1)))
        })
        .collect()
}

pub fn load_real_instance(dataset: RealDataset, table: &str, scaling: RealScaling) -> Result<Instance> {
    let raw = parse_value_table(table)?;
    let (label, expected) = match dataset {
        RealDataset::OpenBandit => ("obd", OBD_ARMS),
        RealDataset::MovieLens => ("movielens", MOVIELENS_ARMS),
    };
    if raw.len() != expected {
        return Err(Error::DataFormat(format!(
            "{label} table has {} values, expected {expected}",
            raw.len()
        )));
    }
    let means = match (dataset, scaling) {
        (_, RealScaling::AsIs) => raw,
        (RealDataset::OpenBandit, RealScaling::Normalise) => {
            raw.iter().map(|c| c / OBD_CTR_STD * 1000f64.sqrt()).collect()
        }
        (RealDataset::MovieLens, RealScaling::Normalise) => {
            raw.iter().map(|r| r / MOVIELENS_RATING_STD).collect()
        }
    };
    Instance::new(label, means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn instance_one_endpoints() {
        let p = synthetic_instance(1).unwrap();
        assert_eq!(p.means()[0], 1.0);
        assert_relative_eq!(p.means()[39], -0.95, epsilon = 1e-12);
    }

    #[test]
    fn instance_nine_layout() {
        let p = synthetic_instance(9).unwrap();
        assert_eq!(p.means().iter().filter(|&&m| m == 0.0).count(), 37);
        let g = crate::model::gaps(p.means()).unwrap();
        let mut sub: Vec<f64> = g.gaps.into_iter().filter(|&d| d > 0.0).collect();
        sub.sort_by(f64::total_cmp);
        assert_relative_eq!(sub[0], 0.2, epsilon = 1e-15);
        assert_relative_eq!(sub[1], 0.2, epsilon = 1e-15);
        assert!(sub[2..].iter().all(|&d| d == 1.0));
    }

    #[test]
    fn instance_five_best_mean() {
        let p = synthetic_instance(5).unwrap();
        assert_relative_eq!(p.means()[0], (39.0 * std::f64::consts::PI / 80.0).sin(), epsilon = 1e-15);
        assert!((p.means()[0] - 0.999229).abs() < 1e-6);
        assert_eq!(p.best_arm(), 0);
    }

    #[test]
    fn instance_two_best_is_last() {
        assert_eq!(synthetic_instance(2).unwrap().best_arm(), 39);
    }

    #[test]
    fn out_of_range_ids() {
        assert!(synthetic_instance(0).is_err());
        assert!(synthetic_instance(11).is_err());
        assert!(instance_by_id("eleven").is_err());
    }

    #[test]
    fn obd_normalisation() {
        let p = instance_by_id("obd").unwrap();
        assert_eq!(p.num_arms(), 80);
        assert_relative_eq!(p.means()[0], 0.0029265 / 0.057774753125 * 1000f64.sqrt(), epsilon = 1e-12);
        assert!((p.means()[0] - 1.60182).abs() < 5e-5);
    }

    #[test]
    fn movielens_modes() {
        let p = instance_by_id("movielens").unwrap();
        assert_eq!(p.num_arms(), 31);
        let raw = load_real_instance(RealDataset::MovieLens, MOVIELENS_ASSET, RealScaling::AsIs).unwrap();
        assert_eq!(raw.means()[raw.best_arm()], 0.91091);
        assert_eq!(p.best_arm(), raw.best_arm());
    }

    #[test]
    fn wrong_cardinality_is_a_format_error() {
        let err = load_real_instance(RealDataset::OpenBandit, "0.1\n0.2\n", RealScaling::Normalise);
        assert!(matches!(err, Err(Error::DataFormat(_))));
        assert!(matches!(parse_value_table("0.1\nabc\n"), Err(Error::DataFormat(_))));
        assert_eq!(parse_value_table("# c\n0.5 # x\n\n0.25").unwrap(), vec![0.5, 0.25]);
    }
}
