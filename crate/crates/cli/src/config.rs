//! Experiment configuration files.
//!
//! ```toml
//! [experiment]
//! instances = ["9"]          # or: instance = "9"
//! budget = 2000              # optional; defaults to the registry horizon
//! replications = 100
//! seed = 7
//! algorithms = ["simple-tracking", "sh"]
//! checkpoints = [40, 400, 2000]   # optional; default log grid
//! noise_sd = 1.0             # optional
//!
//! [budgets]                  # optional per-instance horizons
//! "1" = 2500
//!
//! [almost-tracking]
//! batch_size = 80
//! c_suf = 0.999
//! ```

use std::collections::BTreeMap;

use bai_core::algorithms::{AlgorithmConfig, DEFAULT_C_SUF};
use bai_core::instances::{instance_by_id, lookup};
use bai_core::simulation::{default_checkpoints, ExperimentConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    pub replications: u64,
    pub seed: u64,
    pub algorithms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimpleTrackingSection {
    pub recompute_period: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlmostTrackingSection {
    pub batch_size: Option<u64>,
    pub c_suf: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DoublingSection {
    pub initial_budget: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PooledSection {
    pub batches: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub budgets: BTreeMap<String, u64>,
    #[serde(default, rename = "simple-tracking", skip_serializing_if = "Option::is_none")]
    pub simple_tracking: Option<SimpleTrackingSection>,
    #[serde(default, rename = "almost-tracking", skip_serializing_if = "Option::is_none")]
    pub almost_tracking: Option<AlmostTrackingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsr: Option<DoublingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsh: Option<DoublingSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooled: Option<PooledSection>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    /// `Some(None)` restores the default grid.
    pub checkpoints: Option<Option<Vec<u64>>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
        if let Some(r) = o.replications {
            self.experiment.replications = r;
        }
        if let Some(c) = &o.checkpoints {
            self.experiment.checkpoints = c.clone();
        }
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn instance_ids(&self) -> CliResult<Vec<String>> {
        let e = &self.experiment;
        let mut ids = e.instances.clone();
        if let Some(one) = &e.instance {
            ids.insert(0, one.clone());
        }
        if ids.is_empty() {
            return Err(CliError::Usage("config names no instance".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in &ids {
            if !seen.insert(id) {
                return Err(CliError::Usage(format!("instance '{id}' listed twice")));
            }
        }
        Ok(ids)
    }

    pub fn algorithm_configs(&self) -> CliResult<Vec<AlgorithmConfig>> {
        let e = &self.experiment;
        if e.algorithms.is_empty() {
            return Err(CliError::Usage("config names no algorithm".into()));
        }
        let mut out: Vec<AlgorithmConfig> = Vec::new();
        for id in &e.algorithms {
            let mut cfg = AlgorithmConfig::from_id(id)?;
            if out.iter().any(|c| c.id() == cfg.id()) {
                return Err(CliError::Usage(format!("algorithm '{id}' listed twice")));
            }
            match &mut cfg {
                AlgorithmConfig::SimpleTracking { recompute_period } => {
                    if let Some(s) = &self.simple_tracking {
                        *recompute_period = s.recompute_period.unwrap_or(*recompute_period);
                    }
                }
                AlgorithmConfig::AlmostTracking { batch_size, c_suf } => {
                    if let Some(s) = &self.almost_tracking {
                        *batch_size = s.batch_size.or(*batch_size);
                        *c_suf = s.c_suf.unwrap_or(DEFAULT_C_SUF);
                    }
                }
                AlgorithmConfig::DoublingSuccessiveRejects { initial_budget } => {
                    if let Some(s) = &self.dsr {
                        *initial_budget = s.initial_budget;
                    }
                }
                AlgorithmConfig::DoublingSequentialHalving { initial_budget } => {
                    if let Some(s) = &self.dsh {
                        *initial_budget = s.initial_budget;
                    }
                }
                AlgorithmConfig::PooledAllocation { batches } => {
                    if let Some(s) = &self.pooled {
                        *batches = s.batches.unwrap_or(0);
                    }
                }
                _ => {}
            }
            out.push(cfg);
        }
        Ok(out)
    }

    /// One validated experiment per instance.
    pub fn experiments(&self) -> CliResult<Vec<ExperimentConfig>> {
        let algorithms = self.algorithm_configs()?;
        let ids = self.instance_ids()?;
        for key in self.budgets.keys() {
            if !ids.contains(key) {
                return Err(CliError::Usage(format!("[budgets] names unused instance '{key}'")));
            }
        }
        let e = &self.experiment;
        ids.iter()
            .map(|id| {
                let spec = lookup(id)?;
                let instance = instance_by_id(id)?;
                let budget = self.budgets.get(id).copied().or(e.budget).unwrap_or(spec.suggested_budget);
                let mut cfg = ExperimentConfig::new(
                    id.clone(),
                    instance,
                    algorithms.clone(),
                    budget,
                    e.replications,
                    e.seed,
                );
                cfg.checkpoints = match &e.checkpoints {
                    Some(c) => c.clone(),
                    None => default_checkpoints(spec.num_arms, budget),
                };
                if let Some(sd) = e.noise_sd {
                    cfg.noise_sd = sd;
                }
                cfg.validate().map_err(|err| CliError::Usage(format!("instance {id}: {err}")))?;
                Ok(cfg)
            })
            .collect()
    }
}

/// Parses `"default"` or a comma-separated list of rounds.
pub fn parse_checkpoints(s: &str) -> Result<Option<Vec<u64>>, String> {
    if s == "default" {
        return Ok(None);
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("bad checkpoint '{p}': {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
instance = "9"
budget = 2000
replications = 100
seed = 7
algorithms = ["simple-tracking"]
"#;

    #[test]
    fn minimal_config_has_51_checkpoints() {
        let cfg = ConfigFile::parse(MINIMAL).unwrap();
        let exps = cfg.experiments().unwrap();
        assert_eq!(exps.len(), 1);
        assert_eq!(exps[0].checkpoints.len(), 51);
        assert_eq!(*exps[0].checkpoints.last().unwrap(), 2000);
    }

    #[test]
    fn unknown_algorithm_and_keys_are_rejected() {
        let bad = MINIMAL.replace("simple-tracking", "simple-traking");
        assert!(matches!(ConfigFile::parse(&bad).unwrap().experiments(), Err(CliError::Usage(_))));
        let extra = format!("{MINIMAL}\n[almost-tracking]\nbatchsize = 3\n");
        assert!(ConfigFile::parse(&extra).is_err());
        let inst = MINIMAL.replace("\"9\"", "\"99\"");
        assert!(ConfigFile::parse(&inst).unwrap().experiments().is_err());
    }

    #[test]
    fn sections_and_overrides() {
        let text = format!("{MINIMAL}\n[almost-tracking]\nbatch_size = 160\nc_suf = 0.9\n");
        let mut cfg = ConfigFile::parse(&text.replace("[\"simple-tracking\"]", "[\"almost-tracking\", \"sh\"]")).unwrap();
        cfg.apply(&Overrides { seed: Some(1), replications: Some(3), checkpoints: Some(Some(vec![100, 2000])) });
        let exp = &cfg.experiments().unwrap()[0];
        assert_eq!(exp.algorithms[0], AlgorithmConfig::AlmostTracking { batch_size: Some(160), c_suf: 0.9 });
        assert_eq!((exp.seed, exp.replications), (1, 3));
        assert_eq!(exp.checkpoints, vec![100, 2000]);
        let round_trip = ConfigFile::parse(&cfg.to_toml()).unwrap();
        assert_eq!(round_trip, cfg);
    }

    #[test]
    fn checkpoint_flag_parsing() {
        assert_eq!(parse_checkpoints("default").unwrap(), None);
        assert_eq!(parse_checkpoints("1, 5,9").unwrap(), Some(vec![1, 5, 9]));
        assert!(parse_checkpoints("1,x").is_err());
    }
}
