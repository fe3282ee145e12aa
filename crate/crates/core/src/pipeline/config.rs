use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dqn::DqnParams;
use crate::gbdt::GbdtParams;
use crate::netmodel::{NetworkConfig, NetworkConfigFile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "dqn-gbdt")]
    DqnGbdt,
    #[serde(rename = "dqn-socp")]
    DqnSocp,
    #[serde(rename = "ao")]
    Ao,
    #[serde(rename = "oc")]
    Oc,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::DqnGbdt, Scheme::DqnSocp, Scheme::Ao, Scheme::Oc];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DqnGbdt => "dqn-gbdt",
            Scheme::DqnSocp => "dqn-socp",
            Scheme::Ao => "ao",
            Scheme::Oc => "oc",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Scheme::Ao | Scheme::Oc)
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::config("scheme", format!("unknown scheme `{s}`")))
    }
}

/// Pattern an evaluation run starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPattern {
    AllOn,
    /// One RRH, drawn from the evaluation seed, starts asleep.
    OneOff,
    /// Uniform over non-empty active sets (training episodes only).
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub data: u64,
    pub train: u64,
    pub eval: u64,
    /// Seeds the user/RRH geometry and fading, fixed for the whole run.
    pub channel: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            data: 1,
            train: 2,
            eval: 3,
            channel: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Fraction of dataset rows held out from GBDT training.
    pub holdout_fraction: f64,
    /// Held-out R^2 below this is reported as a warning.
    pub r2_floor: f64,
    /// Rows per fixed-pattern fit panel (all-on, one-off).
    pub panel_size: usize,
    pub initial_pattern: InitialPattern,
    pub train_initial_pattern: InitialPattern,
    /// Fine-tune the Q-network during evaluation.
    pub online_tuning: bool,
    pub sweep_demand_max_mbps: Vec<f64>,
    pub sweep_slots: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.2,
            r2_floor: 0.9,
            panel_size: 2000,
            initial_pattern: InitialPattern::AllOn,
            train_initial_pattern: InitialPattern::AllOn,
            online_tuning: true,
            sweep_demand_max_mbps: vec![20.0, 30.0, 40.0, 50.0, 60.0],
            sweep_slots: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    /// `[num_rrhs, num_users]` pairs.
    pub sizes: Vec<[usize; 2]>,
    pub inputs: usize,
    pub repeats: usize,
    /// Rows generated to train each size's surrogate.
    pub dataset_size: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            sizes: vec![[6, 3], [8, 4], [12, 6], [18, 9]],
            inputs: 1000,
            repeats: 3,
            dataset_size: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub gbdt: GbdtParams,
    /// Parameters of the 0/1 feasibility model.
    pub feasibility: GbdtParams,
    pub dqn: DqnParams,
    pub dataset_size: usize,
    pub eval_slots: usize,
    pub seeds: Seeds,
    pub scheme: Scheme,
    pub run: RunOptions,
    pub bench: BenchOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: NetworkConfig::default(),
            gbdt: GbdtParams::default(),
            feasibility: GbdtParams::default(),
            dqn: DqnParams::default(),
            dataset_size: 10_000,
            eval_slots: 5000,
            seeds: Seeds::default(),
            scheme: Scheme::DqnGbdt,
            run: RunOptions::default(),
            bench: BenchOptions::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    dataset_size: Option<usize>,
    eval_slots: Option<usize>,
    scheme: Option<Scheme>,
    #[serde(default)]
    seeds: Option<Seeds>,
    #[serde(default)]
    network: Option<NetworkConfigFile>,
    gbdt: Option<GbdtParams>,
    feasibility: Option<GbdtParams>,
    dqn: Option<DqnParams>,
    run: Option<RunOptions>,
    bench: Option<BenchOptions>,
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::Config { key, reason } => Error::Config {
            key: format!("{section}.{key}"),
            reason,
        },
        other => other,
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let f: RunConfigFile = toml::from_str(s).map_err(|e| Error::Config {
            key: e
                .span()
                .map(|sp| s[sp].trim().to_string())
                .unwrap_or_default(),
            reason: e.message().to_string(),
        })?;
        let d = RunConfig::default();
        let network = match f.network {
            Some(n) => NetworkConfig::try_from(n).map_err(|e| in_section("network", e))?,
            None => d.network,
        };
        let cfg = RunConfig {
            network,
            gbdt: f.gbdt.unwrap_or(d.gbdt),
            feasibility: f.feasibility.unwrap_or(d.feasibility),
            dqn: f.dqn.unwrap_or(d.dqn),
            dataset_size: f.dataset_size.unwrap_or(d.dataset_size),
            eval_slots: f.eval_slots.unwrap_or(d.eval_slots),
            seeds: f.seeds.unwrap_or(d.seeds),
            scheme: f.scheme.unwrap_or(d.scheme),
            run: f.run.unwrap_or(d.run),
            bench: f.bench.unwrap_or(d.bench),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate().map_err(|e| in_section("network", e))?;
        self.gbdt.validate().map_err(|e| in_section("gbdt", e))?;
        self.feasibility.validate().map_err(|e| in_section("feasibility", e))?;
        self.dqn.validate().map_err(|e| in_section("dqn", e))?;
        if self.network.num_rrhs > 63 {
            return Err(Error::config("network.num_rrhs", "at most 63 RRHs are supported"));
        }
        if self.dataset_size == 0 {
            return Err(Error::config("dataset_size", "must be >= 1"));
        }
        let h = self.run.holdout_fraction;
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::config("run.holdout_fraction", "must lie in (0, 1)"));
        }
        if self.run.initial_pattern == InitialPattern::Random {
            return Err(Error::config(
                "run.initial_pattern",
                "evaluation starts from all-on or one-off",
            ));
        }
        if self.run.sweep_demand_max_mbps.iter().any(|&d| !(d >= self.network.demand_min_mbps)) {
            return Err(Error::config(
                "run.sweep_demand_max_mbps",
                "every entry must be >= network.demand_min_mbps",
            ));
        }
        if self.bench.inputs == 0 || self.bench.repeats == 0 || self.bench.dataset_size == 0 {
            return Err(Error::config("bench", "inputs, repeats and dataset_size must be >= 1"));
        }
        if self.bench.sizes.iter().any(|s| s[0] == 0 || s[0] > 63 || s[1] == 0) {
            return Err(Error::config("bench.sizes", "need 1..=63 RRHs and >= 1 user"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override() {
        let cfg = RunConfig::from_toml_str(
            r#"
            eval_slots = 10
            scheme = "oc"
            [network]
            num_rrhs = 4
            noise_power_dbm = -102.0
            [dqn]
            hidden = [8]
            [seeds]
            eval = 99
            "#,
        )
        .unwrap();
        assert_eq!(cfg.eval_slots, 10);
        assert_eq!(cfg.scheme, Scheme::Oc);
        assert_eq!(cfg.network.num_rrhs, 4);
        assert_eq!(cfg.dqn.hidden, vec![8]);
        assert_eq!(cfg.seeds.eval, 99);
        assert_eq!(cfg.seeds.data, Seeds::default().data);
    }

    #[test]
    fn bad_values_name_their_key() {
        let key = |s: &str| match RunConfig::from_toml_str(s) {
            Err(Error::Config { key, .. }) => key,
            other => panic!("{other:?}"),
        };
        assert_eq!(key("[network]\namplifier_efficiency = 1.5"), "network.amplifier_efficiency");
        assert_eq!(key("[gbdt]\nstep_length = 0.0"), "gbdt.step_length");
        assert_eq!(key("[dqn]\ngamma = 2.0"), "dqn.gamma");
        assert!(key("[network]\nbogus = 1").contains("bogus"));
    }
}
