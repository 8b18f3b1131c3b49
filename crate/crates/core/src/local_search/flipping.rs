use rand::Rng;

use super::search::{local_search, LsParams};
use super::triple::triple_pivot_with;
use super::EdgeWeights;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::marks::Flags;
use crate::precluster::Preclustering;
use crate::representation::{symmetric_difference, ClusterRepresentation, TieRule};
use crate::steps::StepCounter;

#[derive(Clone, Debug, PartialEq)]
pub struct FlipParams {
    /// Target gap α < 1/5; fixes the round count s = 1 + ⌈2/(1/5 − α)⌉.
    pub alpha: f64,
    /// Penalty added to cut edges per recorded clustering.
    pub beta: f64,
    /// Overrides the round count derived from α.
    pub rounds: Option<usize>,
    /// Approximation factor k of the input; local optima are sought at ε/k.
    pub input_factor: f64,
    pub ls: LsParams,
}

impl Default for FlipParams {
    fn default() -> Self {
        FlipParams { alpha: 0.18, beta: EdgeWeights::BETA, rounds: None, input_factor: 1.0, ls: LsParams::default() }
    }
}

impl FlipParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.2).contains(&self.alpha) {
            return Err(Error::Argument("alpha must lie in [0, 1/5)".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Argument("beta must be positive".into()));
        }
        if !(self.input_factor >= 1.0 && self.input_factor.is_finite()) {
            return Err(Error::Argument("input_factor must be at least 1".into()));
        }
        self.ls.validate()
    }

    /// s = 1 + ⌈2/(1/5 − α)⌉.
    pub fn round_count(&self) -> usize {
        self.rounds.unwrap_or_else(|| 1 + (2.0 / (0.2 - self.alpha) - 1e-9).ceil() as usize)
    }

    /// δ₀ = (17/36)(1/5 − α).
    pub fn delta0(&self) -> f64 {
        17.0 / 36.0 * (0.2 - self.alpha)
    }
}

/// Vertices outside clusters that are untouched by D; every local optimum
/// built from the preclustering keeps those clusters whole.
fn active_region(pre: &Preclustering) -> Vec<VertexId> {
    let rep = pre.rep();
    let c = rep.clustering();
    let mut seen = Flags::new(c.capacity());
    let mut out = Vec::new();
    for p in rep.violations().pairs() {
        for x in [p.u, p.v] {
            let id = c.label(x);
            if !seen.contains(id) {
                seen.mark(id);
                out.extend_from_slice(c.members(id));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Iterated flipping over the preclustering: an unweighted local optimum,
/// then per round two penalized optima and a three-way pivot of the last
/// three, returning the cheapest clustering seen (earliest on ties).
pub fn iterated_flipping<R: Rng + ?Sized>(pre: &mut Preclustering, params: &FlipParams, rng: &mut R) -> ClusterRepresentation {
    let mut ls = params.ls.clone();
    ls.eps /= params.input_factor;
    let w0 = EdgeWeights::with_beta(params.beta);
    let mut prev = local_search(pre, &w0, &ls, rng).rep;
    let mut best = prev.clone();
    if best.cost() == 0 {
        return best;
    }
    let region = active_region(pre);
    for _ in 0..params.round_count() {
        let wi = w0.penalized(prev.clustering());
        let ci = local_search(pre, &wi, &ls, rng).rep;
        let wi2 = wi.penalized(ci.clustering());
        let ci2 = local_search(pre, &wi2, &ls, rng).rep;
        let clusters = triple_pivot_with([prev.clustering(), ci.clustering(), ci2.clustering()], pre.rep(), &region, rng);
        let mut merged = pre.rep().clustering().clone();
        for t in &clusters {
            let id = merged.new_cluster();
            for &v in t {
                merged.move_to(v, id);
            }
        }
        let cpp = symmetric_difference(pre.rep(), merged, &region, &mut StepCounter::unlimited())
            .expect("unlimited counter");
        for cand in [ci, ci2.clone(), cpp] {
            best = best.best_of_with(cand, TieRule::KeepOld);
        }
        prev = ci2;
        if best.cost() == 0 {
            break;
        }
    }
    best
}

/// Preclusters `rep`, runs iterated flipping and keeps the input on ties.
pub fn iterated_flipping_rep<R: Rng + ?Sized>(rep: &ClusterRepresentation, params: &FlipParams, rng: &mut R) -> ClusterRepresentation {
    let mut pre = Preclustering::build(rep, params.ls.adm.clone(), &mut StepCounter::unlimited());
    let out = iterated_flipping(&mut pre, params, rng);
    rep.clone().best_of_with(out, TieRule::KeepOld)
}
