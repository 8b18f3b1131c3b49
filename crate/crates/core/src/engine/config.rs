use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Approximation target of the iterated-flipping local search, 2 − 2/13.
pub const LOCAL_SEARCH_TARGET: f64 = 2.0 - 2.0 / 13.0;
/// Expected approximation of the cluster-LP pipeline.
pub const CLUSTER_LP_TARGET: f64 = 1.437;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Rebuilds run synchronously inside the update that ends an epoch.
    #[default]
    Amortized,
    /// Rebuilds are computed on a snapshot and their counted work is paid in
    /// equal slices over the epoch; the result is switched in at its end.
    Deamortized,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "amortized" => Ok(Mode::Amortized),
            "deamortized" => Ok(Mode::Deamortized),
            _ => Err(Error::Argument(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Amortized => "amortized",
            Mode::Deamortized => "deamortized",
        })
    }
}

/// One stage of the rebuild pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum PluginSpec {
    Pivot,
    /// Best of r pivot runs.
    PivotRepeat(usize),
    /// Iterated flipping over a fresh preclustering.
    LocalSearch,
    /// Preclustering, MWU over the covering LP, pivot rounding.
    ClusterLp,
    /// Exact optimum per connected component.
    Exact,
    /// Returns its input with probability p and the exact optimum otherwise.
    Hypothetical(f64),
}

impl PluginSpec {
    /// Approximation factor c the stage is assumed to deliver.
    pub fn approximation(&self) -> f64 {
        match self {
            PluginSpec::Pivot | PluginSpec::PivotRepeat(_) => 3.0,
            PluginSpec::LocalSearch => LOCAL_SEARCH_TARGET,
            PluginSpec::ClusterLp => CLUSTER_LP_TARGET,
            PluginSpec::Exact | PluginSpec::Hypothetical(_) => 1.0,
        }
    }

    /// Named pipelines accepted on the command line; single stages also parse.
    pub fn pipeline(name: &str) -> Result<Vec<PluginSpec>> {
        match name {
            "mixed" => Ok(vec![PluginSpec::Pivot, PluginSpec::ClusterLp]),
            _ => name.split(',').map(|s| s.trim().parse()).collect(),
        }
    }
}

impl FromStr for PluginSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<PluginSpec> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let bad = || Error::Argument(format!("bad plugin {s:?}"));
        let spec = match (head, arg) {
            ("pivot", None) => PluginSpec::Pivot,
            ("pivot-repeat", Some(r)) => PluginSpec::PivotRepeat(r.parse().map_err(|_| bad())?),
            ("localsearch", None) => PluginSpec::LocalSearch,
            ("clusterlp", None) => PluginSpec::ClusterLp,
            ("exact", None) => PluginSpec::Exact,
            ("hypothetical", Some(p)) => PluginSpec::Hypothetical(p.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        match spec {
            PluginSpec::PivotRepeat(0) => Err(bad()),
            PluginSpec::Hypothetical(p) if !(0.0..=1.0).contains(&p) => Err(bad()),
            spec => Ok(spec),
        }
    }
}

impl fmt::Display for PluginSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PluginSpec::Pivot => f.write_str("pivot"),
            PluginSpec::PivotRepeat(r) => write!(f, "pivot-repeat:{r}"),
            PluginSpec::LocalSearch => f.write_str("localsearch"),
            PluginSpec::ClusterLp => f.write_str("clusterlp"),
            PluginSpec::Exact => f.write_str("exact"),
            PluginSpec::Hypothetical(p) => write!(f, "hypothetical:{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub epsilon: f64,
    /// Rebuild fraction; `None` takes the largest admissible value.
    pub mu: Option<f64>,
    pub mode: Mode,
    pub pipeline: Vec<PluginSpec>,
    pub seed: u64,
    /// Deamortized mode only: compute rebuilds on a worker thread.
    pub threaded: bool,
    /// Staged labels folded per update after a switch.
    pub settle_per_update: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            epsilon: 0.1,
            mu: None,
            mode: Mode::Amortized,
            pipeline: vec![PluginSpec::Pivot],
            seed: 0,
            threaded: false,
            settle_per_update: 4,
        }
    }
}

impl EngineConfig {
    /// c: the target of the last stage.
    pub fn c(&self) -> f64 {
        self.pipeline.last().map_or(1.0, PluginSpec::approximation)
    }

    /// ĉ: the worst target among earlier stages, if any.
    pub fn c_hat(&self) -> Option<f64> {
        let n = self.pipeline.len();
        (n > 1).then(|| self.pipeline[..n - 1].iter().map(PluginSpec::approximation).fold(1.0, f64::max))
    }

    /// min(ε/(2(1+ε)c), 1/6), and 1/(2ĉ) with more than one stage.
    pub fn mu_bound(&self) -> f64 {
        let eps = self.epsilon;
        let mut mu = (eps / (2.0 * (1.0 + eps) * self.c())).min(1.0 / 6.0);
        if let Some(ch) = self.c_hat() {
            mu = mu.min(1.0 / (2.0 * ch));
        }
        mu
    }

    pub fn resolved_mu(&self) -> f64 {
        self.mu.unwrap_or_else(|| self.mu_bound())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Argument("epsilon must be positive".into()));
        }
        if self.pipeline.is_empty() {
            return Err(Error::Argument("pipeline is empty".into()));
        }
        let mu = self.resolved_mu();
        let bound = self.mu_bound();
        if !(mu > 0.0) || mu > bound * (1.0 + 1e-12) {
            return Err(Error::Argument(format!("mu = {mu} outside (0, {bound}]")));
        }
        if self.settle_per_update == 0 {
            return Err(Error::Argument("settle_per_update must be positive".into()));
        }
        if self.threaded && self.mode != Mode::Deamortized {
            return Err(Error::Argument("threaded rebuilds need deamortized mode".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_bound_takes_every_term() {
        let mut c = EngineConfig { epsilon: 0.1, pipeline: vec![PluginSpec::Exact], ..Default::default() };
        assert!((c.mu_bound() - 0.1 / 2.2).abs() < 1e-12);
        c.epsilon = 10.0;
        assert_eq!(c.mu_bound(), 1.0 / 6.0);
        c.pipeline = vec![PluginSpec::Pivot, PluginSpec::Exact];
        assert_eq!(c.mu_bound(), 1.0 / 6.0);
        c.pipeline = vec![PluginSpec::Pivot, PluginSpec::ClusterLp];
        c.epsilon = 100.0;
        assert!(c.mu_bound() <= 1.0 / 6.0);
    }

    #[test]
    fn mu_above_bound_is_rejected() {
        let c = EngineConfig { mu: Some(0.2), epsilon: 10.0, pipeline: vec![PluginSpec::Exact], ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { mu: Some(0.01), ..Default::default() };
        c.validate().unwrap();
    }

    #[test]
    fn plugin_names_round_trip() {
        for s in ["pivot", "pivot-repeat:5", "localsearch", "clusterlp", "exact", "hypothetical:0.5"] {
            assert_eq!(s.parse::<PluginSpec>().unwrap().to_string(), s);
        }
        assert!("hypothetical:2".parse::<PluginSpec>().is_err());
        assert!("pivot-repeat:0".parse::<PluginSpec>().is_err());
        assert_eq!(PluginSpec::pipeline("mixed").unwrap().len(), 2);
        assert_eq!(PluginSpec::pipeline("pivot,exact").unwrap(), vec![PluginSpec::Pivot, PluginSpec::Exact]);
    }
}
