use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::environments::{NoiseModel, SuiteOptions, SUITE_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Phased elimination over the exact g-vectors.
    KnownDist,
    /// Epoch reduction with the plain width.
    Epoch,
    /// Lifted product reduction.
    Product,
    /// Batched elimination.
    Batched,
    PeMisspecKnown,
    PeMisspecUnknown,
    PeCorrupt,
    PeSparse,
    RandomBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::KnownDist,
        Algorithm::Epoch,
        Algorithm::Product,
        Algorithm::Batched,
        Algorithm::PeMisspecKnown,
        Algorithm::PeMisspecUnknown,
        Algorithm::PeCorrupt,
        Algorithm::PeSparse,
        Algorithm::RandomBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KnownDist => "known-dist",
            Algorithm::Epoch => "epoch",
            Algorithm::Product => "product",
            Algorithm::Batched => "batched",
            Algorithm::PeMisspecKnown => "pe-misspec-known",
            Algorithm::PeMisspecUnknown => "pe-misspec-unknown",
            Algorithm::PeCorrupt => "pe-corrupt",
            Algorithm::PeSparse => "pe-sparse",
            Algorithm::RandomBaseline => "random-baseline",
        }
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| HarnessError::invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NetSpec {
    Dense { resolution: f64 },
    Sparse { sparsity: usize, resolution: f64 },
    File { path: PathBuf },
}

/// Everything needed to reproduce a batch of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub suite: String,
    pub algorithm: Algorithm,
    pub dim: usize,
    pub horizon: u64,
    pub net: NetSpec,
    pub delta: f64,
    pub seeds: Vec<u64>,
    /// Seed of the environment instance, shared by every run seed.
    pub instance_seed: u64,
    pub noise: NoiseModel,
    pub epsilon: Option<f64>,
    pub budget: Option<f64>,
    pub sparsity: Option<usize>,
    pub batches: usize,
    pub workers: Option<usize>,
    /// Horizon grid for `scale`.
    pub horizons: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suite: "random-finite".into(),
            algorithm: Algorithm::Epoch,
            dim: 3,
            horizon: 4096,
            net: NetSpec::Dense { resolution: 0.25 },
            delta: 0.05,
            seeds: vec![0, 1, 2],
            instance_seed: 0,
            noise: NoiseModel::Gaussian,
            epsilon: None,
            budget: None,
            sparsity: None,
            batches: 8,
            workers: None,
            horizons: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text)
            .map_err(|e| HarnessError::invalid("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !SUITE_NAMES.contains(&self.suite.as_str()) {
            return Err(HarnessError::invalid(
                "suite",
                format!("unknown suite `{}` (expected one of {})", self.suite, SUITE_NAMES.join(", ")),
            ));
        }
        if self.dim == 0 {
            return Err(HarnessError::invalid("dim", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(HarnessError::invalid("horizon", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::invalid("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::invalid("seeds", "need at least one seed"));
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return Err(HarnessError::invalid("seeds", "seeds must be distinct"));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::invalid("workers", "must be at least 1"));
        }
        if self.algorithm == Algorithm::Product && self.suite != "product" {
            return Err(HarnessError::invalid(
                "algorithm",
                "the product reduction needs the product suite",
            ));
        }
        if self.algorithm == Algorithm::Batched && (self.batches < 2 || !self.batches.is_multiple_of(2)) {
            return Err(HarnessError::invalid("batches", "must be even and at least 2"));
        }
        match &self.net {
            NetSpec::Dense { resolution } | NetSpec::Sparse { resolution, .. } if !(*resolution > 0.0) => {
                return Err(HarnessError::invalid("net.resolution", "must be positive"));
            }
            _ => {}
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0) {
                return Err(HarnessError::invalid("epsilon", "must be nonnegative"));
            }
        }
        if let Some(c) = self.budget {
            if !(c >= 0.0) {
                return Err(HarnessError::invalid("budget", "must be nonnegative"));
            }
        }
        if let Some(s) = self.sparsity {
            if s == 0 || s > self.dim {
                return Err(HarnessError::invalid("sparsity", format!("must lie in 1..={}", self.dim)));
            }
        }
        Ok(())
    }

    pub fn suite_options(&self) -> SuiteOptions {
        let mut opts = SuiteOptions::new(self.dim);
        opts.noise = self.noise;
        if let Some(e) = self.epsilon {
            opts.epsilon = e;
        }
        if let Some(c) = self.budget {
            opts.budget = c;
        }
        if let Some(s) = self.sparsity {
            opts.sparsity = s;
        }
        opts
    }
}

/// `--seeds` accepts either a list (`1,5,9`) or a count (`10` = seeds 0..10).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let parse = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|e| HarnessError::invalid("seeds", format!("`{s}`: {e}")))
    };
    if text.contains(',') {
        text.split(',').filter(|s| !s.trim().is_empty()).map(parse).collect()
    } else {
        Ok((0..parse(text)?).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            net: NetSpec::Sparse {
                sparsity: 2,
                resolution: 0.5,
            },
            budget: Some(3.0),
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn field_level_errors() {
        let err = RunConfig::from_toml("delta = 1.5").unwrap_err();
        assert!(err.to_string().contains("delta"), "{err}");
        let err = RunConfig::from_toml("seeds = [1, 1]").unwrap_err();
        assert!(err.to_string().contains("seeds"));
        let err = RunConfig::from_toml("algorithm = \"product\"").unwrap_err();
        assert!(err.to_string().contains("algorithm"));
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn seeds_list_or_count() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("4,8").unwrap(), vec![4, 8]);
        assert!(parse_seeds("x").is_err());
        assert_eq!("pe-corrupt".parse::<Algorithm>().unwrap(), Algorithm::PeCorrupt);
    }
}
