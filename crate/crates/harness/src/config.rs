//! Experiment files are TOML:
//!
//! ```toml
//! trials = 20
//! seed = 7
//!
//! [engine]
//! epsilon = 0.5
//! pipeline = "exact"          # or "pivot", "mixed", "pivot,localsearch", "hypothetical:0.5", ...
//! mode = "amortized"          # or "deamortized"
//! # mu = 0.1                  # default: largest admissible value
//! # threaded = false
//! # settle_per_update = 4
//!
//! [source]
//! kind = "two-paths"          # two-paths | random | adaptive | replay
//! n = 12
//! # p_edge = 0.3              # random, adaptive: starting G(n, p)
//! # updates = 200             # random, adaptive
//! # query_every = 0           # random
//! # graph = "g.txt"           # replay
//! # stream = "s.txt"          # replay
//! # initial = "opt"           # singletons | opt; default: the two-path start, else opt
//!                             # when the oracle runs, else singletons
//!
//! [checks]
//! # oracle = true             # rolling exact OPT; default when n <= 16
//! # max_ratio = 1.5           # default 1 + epsilon for an exact pipeline
//! # records = true            # one row per commit and query
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dyncc::engine::{EngineConfig, Mode, PluginSpec};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    #[serde(default = "one")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub engine: EngineSection,
    pub source: Source,
    #[serde(default)]
    pub checks: Checks,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub mu: Option<f64>,
    #[serde(default = "default_pipeline")]
    pub pipeline: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub threaded: bool,
    #[serde(default = "default_settle")]
    pub settle_per_update: usize,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_pipeline() -> String {
    "pivot".into()
}

fn default_mode() -> String {
    "amortized".into()
}

fn default_settle() -> usize {
    4
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            epsilon: default_epsilon(),
            mu: None,
            pipeline: default_pipeline(),
            mode: default_mode(),
            threaded: false,
            settle_per_update: default_settle(),
        }
    }
}

impl EngineSection {
    /// Engine configuration for one trial.
    pub fn engine_config(&self, seed: u64) -> Result<EngineConfig> {
        let cfg = EngineConfig {
            epsilon: self.epsilon,
            mu: self.mu,
            mode: self.mode.parse::<Mode>()?,
            pipeline: PluginSpec::pipeline(&self.pipeline)?,
            seed,
            threaded: self.threaded,
            settle_per_update: self.settle_per_update,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    TwoPaths,
    Random,
    Adaptive,
    Replay,
}

impl SourceKind {
    pub fn name(self) -> &'static str {
        match self {
            SourceKind::TwoPaths => "two-paths",
            SourceKind::Random => "random",
            SourceKind::Adaptive => "adaptive",
            SourceKind::Replay => "replay",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    Singletons,
    Opt,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub kind: SourceKind,
    pub n: Option<usize>,
    #[serde(default = "default_p_edge")]
    pub p_edge: f64,
    #[serde(default = "default_updates")]
    pub updates: usize,
    #[serde(default)]
    pub query_every: usize,
    pub graph: Option<PathBuf>,
    pub stream: Option<PathBuf>,
    pub initial: Option<Initial>,
}

fn default_p_edge() -> f64 {
    0.3
}

fn default_updates() -> usize {
    200
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    pub oracle: Option<bool>,
    pub max_ratio: Option<f64>,
    pub records: Option<bool>,
}

impl Experiment {
    pub fn parse(text: &str) -> Result<Experiment> {
        let exp: Experiment = toml::from_str(text).context("invalid experiment file")?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn read(path: &Path) -> Result<Experiment> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Experiment::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Resolves relative replay paths against `dir`.
    pub fn rebase(&mut self, dir: &Path) {
        for p in [&mut self.source.graph, &mut self.source.stream].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be positive");
        }
        self.engine.engine_config(self.seed)?;
        let s = &self.source;
        match s.kind {
            SourceKind::TwoPaths => match s.n {
                Some(n) if n > 0 && n % 3 == 0 => {}
                _ => bail!("source.n must be a positive multiple of 3 for two-paths"),
            },
            SourceKind::Random | SourceKind::Adaptive => {
                if s.n.map_or(true, |n| n < 2) {
                    bail!("source.n must be at least 2");
                }
                if !(0.0..=1.0).contains(&s.p_edge) {
                    bail!("source.p_edge must lie in [0, 1]");
                }
            }
            SourceKind::Replay => {
                if s.graph.is_none() || s.stream.is_none() {
                    bail!("replay needs source.graph and source.stream");
                }
            }
        }
        if let Some(r) = self.checks.max_ratio {
            if !(r >= 1.0) {
                bail!("checks.max_ratio must be at least 1");
            }
        }
        Ok(())
    }

    /// Whether the rolling oracle runs: as configured, else for n ≤ 16.
    pub fn oracle_enabled(&self, n: usize) -> bool {
        self.checks.oracle.unwrap_or(n <= dyncc::oracle::DP_MAX_N)
    }

    /// Ratio bound asserted at every update: as configured, else 1 + ε when
    /// every stage is exact.
    pub fn max_ratio(&self) -> Result<Option<f64>> {
        if self.checks.max_ratio.is_some() {
            return Ok(self.checks.max_ratio);
        }
        let exact = PluginSpec::pipeline(&self.engine.pipeline)?.iter().all(|s| *s == PluginSpec::Exact);
        Ok(exact.then_some(1.0 + self.engine.epsilon))
    }

    pub fn records(&self) -> bool {
        self.checks.records.unwrap_or(true)
    }
}
