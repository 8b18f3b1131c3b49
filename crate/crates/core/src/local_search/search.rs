use std::collections::BTreeMap;

use rand::Rng;

use super::generate::{generate_cluster, sampled_improvement, ImprovementMode};
use super::{local_improvement, log2_sq, EdgeWeights};
use crate::clustering::ClusterId;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::marks::Flags;
use crate::precluster::{AdmParams, Preclustering};
use crate::representation::{symmetric_difference, ClusterRepresentation, TieRule};
use crate::steps::{BudgetExceeded, StepCounter};
use crate::sampling::bernoulli_indices;

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct LsParams {
    /// Target goodness ε of the local optimum.
    pub eps: f64,
    /// ε′ = ratio·ε; an outer iteration must improve by ε′·|D| to continue.
    pub eps_prime_ratio: f64,
    /// Rounds per outer iteration, as a multiple of |D|.
    pub rounds_factor: f64,
    pub mode: ImprovementMode,
    /// Repeat from the output when |D′| < δ·|D|.
    pub rerun_delta: f64,
    /// Rounds of a repetition grow by (|D|/|D′|)^exponent.
    pub rerun_exponent: f64,
    pub max_reruns: usize,
    /// Work limit per run is `step_factor · rounds_factor · (|D| + 1)`.
    pub step_factor: u64,
    pub max_iterations: usize,
    pub adm: AdmParams,
}

impl Default for LsParams {
    fn default() -> Self {
        LsParams {
            eps: 0.1,
            eps_prime_ratio: 0.125,
            rounds_factor: 8.0,
            mode: ImprovementMode::Exact,
            rerun_delta: 0.25,
            rerun_exponent: 0.6,
            max_reruns: 3,
            step_factor: 1 << 14,
            max_iterations: 1000,
            adm: AdmParams::default(),
        }
    }
}

impl LsParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.to_string()));
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("local search eps must lie in (0, 1)");
        }
        if !(self.eps_prime_ratio > 0.0 && self.eps_prime_ratio <= 1.0) {
            return bad("eps_prime_ratio must lie in (0, 1]");
        }
        if !(self.rounds_factor > 0.0 && self.rounds_factor.is_finite()) {
            return bad("rounds_factor must be positive");
        }
        if !(self.rerun_delta > 0.0 && self.rerun_delta < 1.0) {
            return bad("rerun_delta must lie in (0, 1)");
        }
        if self.step_factor == 0 {
            return bad("step_factor must be positive");
        }
        self.adm.validate()
    }

    pub fn eps_prime(&self) -> f64 {
        self.eps * self.eps_prime_ratio
    }
}

/// Why a run handed back its input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Abort {
    Budget,
    /// |D′| exceeded the largest value a weighted improvement can reach.
    Regression,
}

#[derive(Clone, Debug)]
pub struct LsOutcome {
    pub rep: ClusterRepresentation,
    pub iterations: usize,
    pub applied: usize,
    pub reruns: usize,
    pub aborted: Option<Abort>,
    pub steps: u64,
}

/// Vertices of clusters with at least |C|/3 incident violations, grouped by
/// degree (all, singletons only).
fn relevant_groups(pre: &mut Preclustering) -> (Vec<(usize, Vec<VertexId>)>, Vec<(usize, Vec<VertexId>)>) {
    let mut clusters: Vec<ClusterId> = Vec::new();
    {
        let rep = pre.rep();
        let c = rep.clustering();
        let mut seen = Flags::new(c.capacity());
        for p in rep.violations().pairs() {
            for x in [p.u, p.v] {
                let id = c.label(x);
                if !seen.contains(id) {
                    seen.mark(id);
                    clusters.push(id);
                }
            }
        }
    }
    clusters.sort_unstable();
    let mut all: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    let mut single: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for id in clusters {
        let members = pre.rep().clustering().members(id).to_vec();
        let incident: usize = members.iter().map(|&x| pre.rep().violations().degree(x)).sum();
        if 3 * incident < members.len() {
            continue;
        }
        for &x in &members {
            let d = pre.degree(x);
            all.entry(d).or_default().push(x);
            if members.len() == 1 {
                single.entry(d).or_default().push(x);
            }
        }
    }
    (all.into_iter().collect(), single.into_iter().collect())
}

fn run_once<R: Rng + ?Sized>(
    pre: &mut Preclustering,
    weights: &EdgeWeights,
    params: &LsParams,
    rounds_mult: f64,
    rng: &mut R,
) -> LsOutcome {
    let d0 = pre.rep().cost();
    let input = |pre: &Preclustering, aborted, steps| LsOutcome {
        rep: pre.rep().clone(),
        iterations: 0,
        applied: 0,
        reruns: 0,
        aborted,
        steps,
    };
    if d0 == 0 {
        return input(pre, None, 0);
    }
    let limit = (params.step_factor as f64 * rounds_mult.max(1.0) * (d0 + 1) as f64).min(u64::MAX as f64 / 2.0);
    let mut counter = StepCounter::with_limit(limit as u64);
    match search_loop(pre, weights, params, rounds_mult, d0, rng, &mut counter) {
        Ok(Some(mut out)) => {
            out.steps = counter.used();
            out
        }
        Ok(None) => input(pre, Some(Abort::Regression), counter.used()),
        Err(BudgetExceeded) => input(pre, Some(Abort::Budget), counter.used()),
    }
}

#[allow(clippy::too_many_arguments)]
fn search_loop<R: Rng + ?Sized>(
    pre: &mut Preclustering,
    weights: &EdgeWeights,
    params: &LsParams,
    rounds_mult: f64,
    d0: usize,
    rng: &mut R,
    counter: &mut StepCounter,
) -> std::result::Result<Option<LsOutcome>, BudgetExceeded> {
    let (groups, singles) = relevant_groups(pre);
    counter.tick(groups.iter().map(|g| g.1.len() as u64).sum::<u64>() + 1)?;
    let mut work = pre.rep().clustering().clone();
    let mut moved = Flags::new(work.n());
    let mut moves: Vec<VertexId> = Vec::new();
    let rounds = ((d0 as f64) * rounds_mult).ceil() as usize;
    let dd = d0 as f64;
    let mut picks = Vec::new();
    let (mut iterations, mut applied) = (0usize, 0usize);
    let rep = loop {
        iterations += 1;
        let mut gained = 0.0;
        for _ in 0..rounds {
            counter.tick(1 + groups.len() as u64)?;
            if rng.gen_bool(0.5) {
                for (deg, vs) in &groups {
                    picks.clear();
                    bernoulli_indices(vs.len(), 1.0 / (dd * log2_sq(*deg)), rng, &mut picks);
                    for &i in &picks {
                        let p = vs[i];
                        let gamma = (*deg).max(1) as f64 * log2_sq(*deg);
                        let cand = generate_cluster(p, &work, pre, weights, params.mode, gamma, rng, counter)?;
                        if cand.est_improvement > TOL {
                            let id = work.new_cluster();
                            for &x in &cand.members {
                                work.move_to(x, id);
                                if !moved.contains(x) {
                                    moved.mark(x);
                                    moves.push(x);
                                }
                            }
                            gained += cand.est_improvement;
                            applied += 1;
                        }
                    }
                }
            } else {
                for (deg, vs) in &singles {
                    picks.clear();
                    bernoulli_indices(vs.len(), *deg as f64 / (dd * log2_sq(*deg)), rng, &mut picks);
                    for &i in &picks {
                        let v = vs[i];
                        if work.size(work.label(v)) == 1 {
                            continue;
                        }
                        counter.tick(work.size(work.label(v)) as u64)?;
                        let imp = match params.mode {
                            ImprovementMode::Exact => local_improvement(&work, &[v], pre.rep(), weights),
                            ImprovementMode::Sampled => {
                                sampled_improvement(&work, &[v], pre.rep(), weights, log2_sq(*deg), rng, counter)?
                            }
                        };
                        if imp > TOL {
                            work.isolate(v);
                            if !moved.contains(v) {
                                moved.mark(v);
                                moves.push(v);
                            }
                            gained += imp;
                            applied += 1;
                        }
                    }
                }
            }
        }
        let next = symmetric_difference(pre.rep(), work.clone(), &moves, counter)?;
        if next.cost() as f64 > weights.max_weight() * dd {
            return Ok(None);
        }
        if gained < params.eps_prime() * dd || iterations >= params.max_iterations {
            break next;
        }
    };
    Ok(Some(LsOutcome { rep, iterations, applied, reruns: 0, aborted: None, steps: 0 }))
}

/// Finds an ε-good local optimum for `weights` starting from the
/// preclustering's representation, repeating from the output while it keeps
/// shrinking |D| by more than the rerun factor.
pub fn local_search<R: Rng + ?Sized>(
    pre: &mut Preclustering,
    weights: &EdgeWeights,
    params: &LsParams,
    rng: &mut R,
) -> LsOutcome {
    let d0 = pre.rep().cost();
    let mut out = run_once(pre, weights, params, params.rounds_factor, rng);
    let mut mult = params.rounds_factor;
    let mut prev = d0;
    for _ in 0..params.max_reruns {
        let d1 = out.rep.cost();
        if d1 == 0 || d1 as f64 >= params.rerun_delta * prev as f64 {
            break;
        }
        mult *= (prev as f64 / d1 as f64).powf(params.rerun_exponent);
        let mut counter = StepCounter::unlimited();
        let mut next_pre = Preclustering::build(&out.rep, pre.params().clone(), &mut counter);
        let mut again = run_once(&mut next_pre, weights, params, mult, rng);
        again.iterations += out.iterations;
        again.applied += out.applied;
        again.reruns = out.reruns + 1;
        again.steps += out.steps + counter.used();
        prev = d1;
        out = again;
    }
    out
}

/// Preclusters `rep`, runs an unweighted local search and keeps the input on
/// ties.
pub fn local_search_rep<R: Rng + ?Sized>(rep: &ClusterRepresentation, params: &LsParams, rng: &mut R) -> ClusterRepresentation {
    let mut pre = Preclustering::build(rep, params.adm.clone(), &mut StepCounter::unlimited());
    let out = local_search(&mut pre, &EdgeWeights::unit(), params, rng);
    rep.clone().best_of_with(out.rep, TieRule::KeepOld)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::oracle::brute_force_opt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn geometric_skipping_matches_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut out = Vec::new();
        for _ in 0..2000 {
            bernoulli_indices(50, 0.1, &mut rng, &mut out);
        }
        let rate = out.len() as f64 / 100_000.0;
        assert!((rate - 0.1).abs() < 0.005, "rate {rate}");
        assert!(out.iter().all(|&i| i < 50));
    }

    #[test]
    fn interleaved_cliques_are_found() {
        // vertices alternate between two 6-cliques
        let mut edges = Vec::new();
        for a in 0..12 {
            for b in a + 1..12 {
                if a % 2 == b % 2 {
                    edges.push((a, b));
                }
            }
        }
        edges.push((0, 1));
        let g = Graph::from_edges(12, edges).unwrap();
        let rep = ClusterRepresentation::singletons(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = local_search_rep(&rep, &LsParams::default(), &mut rng);
        assert_eq!(out.cost(), brute_force_opt(&g).unwrap().0);
        assert_eq!(out.cost(), 1);
    }

    #[test]
    fn never_worse_than_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let g = Graph::gnp(10, 0.4, &mut rng);
            let rep = ClusterRepresentation::singletons(&g);
            let out = local_search_rep(&rep, &LsParams::default(), &mut rng);
            assert!(out.cost() <= rep.cost());
        }
    }

    #[test]
    fn local_optima_carry_the_certificate() {
        use crate::local_search::{epsilon_good_check, EPS_GOOD_CONSTANT};
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let params = LsParams::default();
        for _ in 0..20 {
            let g = Graph::gnp(9, 0.5, &mut rng);
            let parts = crate::oracle::brute_force_opt(&g).unwrap().1.partition();
            let rep = ClusterRepresentation::singletons(&g);
            let out = local_search_rep(&rep, &params, &mut rng);
            assert!(epsilon_good_check(&g, out.clustering(), &parts, EPS_GOOD_CONSTANT * params.eps, rep.cost()));
        }
    }
}
