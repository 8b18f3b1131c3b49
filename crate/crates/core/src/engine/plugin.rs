use rand::Rng;

use super::config::PluginSpec;
use crate::cluster_lp::{mwu_solve, pivot_based_rounding, LpParams};
use crate::graph::VertexId;
use crate::local_search::{iterated_flipping_rep, FlipParams};
use crate::oracle::OptOracle;
use crate::pivot::{pivot_cluster, PIVOT_STEP_FACTOR};
use crate::precluster::{AdmParams, Preclustering};
use crate::representation::{symmetric_difference, ClusterRepresentation, TieRule, SYMDIFF_BUDGET_FACTOR};
use crate::sampling::RngStream;
use crate::steps::{BudgetExceeded, StepCounter};

/// Counted steps per (|D| + 1) for one pivot stage: the pivot itself, the
/// symmetric difference over at most 2|D| moved vertices, and staging them.
pub const PIVOT_STAGE_FACTOR: u64 = PIVOT_STEP_FACTOR + 3 * SYMDIFF_BUDGET_FACTOR + 2;

/// A static algorithm as the engine sees it.
pub trait StaticAlgorithm: Send {
    fn name(&self) -> String;

    /// t_alg: the stage may spend t_alg·(|D| + 1) counted steps. `None` marks
    /// a stage without a worst-case allowance; its steps are reported only.
    fn step_factor(&self) -> Option<u64>;

    /// A representation of the same graph and every vertex whose label may
    /// differ from the input's. Exceeding `counter` discards the output.
    fn run(
        &mut self,
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded>;
}

/// Vertices whose labels differ; ids are compared as they are.
pub fn label_diff(a: &ClusterRepresentation, b: &ClusterRepresentation) -> Vec<VertexId> {
    (0..a.n()).filter(|&v| a.label(v) != b.label(v)).collect()
}

pub fn build_plugin(spec: &PluginSpec, epsilon: f64) -> Box<dyn StaticAlgorithm> {
    match *spec {
        PluginSpec::Pivot => Box::new(PivotStage { repeats: 1 }),
        PluginSpec::PivotRepeat(r) => Box::new(PivotStage { repeats: r }),
        PluginSpec::LocalSearch => {
            let mut params = FlipParams::default();
            params.ls.eps = epsilon.min(0.5);
            Box::new(LocalSearchStage { params })
        }
        PluginSpec::ClusterLp => {
            let params = LpParams { eps: epsilon, ..LpParams::default() };
            Box::new(ClusterLpStage { params })
        }
        PluginSpec::Exact => Box::new(ExactStage { oracle: OptOracle::new(), fail: 0.0 }),
        PluginSpec::Hypothetical(p) => Box::new(ExactStage { oracle: OptOracle::new(), fail: p }),
    }
}

struct PivotStage {
    repeats: usize,
}

impl PivotStage {
    fn once(
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded> {
        let (c, moves) = pivot_cluster(rep, rng, counter);
        counter.tick(0)?;
        let limit = SYMDIFF_BUDGET_FACTOR * (rep.cost() + moves.len() + 1) as u64;
        let mut sub = counter.child(limit);
        let out = symmetric_difference(rep, c, &moves, &mut sub);
        counter.absorb(&sub)?;
        counter.tick(moves.len() as u64)?;
        Ok((out?, moves))
    }
}

impl StaticAlgorithm for PivotStage {
    fn name(&self) -> String {
        if self.repeats == 1 {
            "pivot".into()
        } else {
            format!("pivot-repeat:{}", self.repeats)
        }
    }

    fn step_factor(&self) -> Option<u64> {
        Some(PIVOT_STAGE_FACTOR * self.repeats as u64)
    }

    fn run(
        &mut self,
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded> {
        let mut best: Option<(ClusterRepresentation, Vec<VertexId>)> = None;
        for _ in 0..self.repeats {
            let (out, moves) = PivotStage::once(rep, rng, counter)?;
            if best.as_ref().is_none_or(|(b, _)| out.cost() < b.cost()) {
                best = Some((out, moves));
            }
        }
        Ok(best.expect("at least one repeat"))
    }
}

/// Unbudgeted: charges |D_in| + |D_out| + n as a proxy.
struct LocalSearchStage {
    params: FlipParams,
}

impl StaticAlgorithm for LocalSearchStage {
    fn name(&self) -> String {
        "localsearch".into()
    }

    fn step_factor(&self) -> Option<u64> {
        None
    }

    fn run(
        &mut self,
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded> {
        let out = iterated_flipping_rep(rep, &self.params, rng);
        counter.tick((rep.cost() + out.cost() + rep.n()) as u64)?;
        let moves = label_diff(rep, &out);
        Ok((out, moves))
    }
}

/// Unbudgeted: charges the preclustering work plus guesses·rounds·n.
struct ClusterLpStage {
    params: LpParams,
}

impl StaticAlgorithm for ClusterLpStage {
    fn name(&self) -> String {
        "clusterlp".into()
    }

    fn step_factor(&self) -> Option<u64> {
        None
    }

    fn run(
        &mut self,
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded> {
        let n = rep.n();
        let mut pre_counter = StepCounter::unlimited();
        let mut pre = Preclustering::build(rep, AdmParams::default(), &mut pre_counter);
        counter.tick(pre_counter.used())?;
        let lp = mwu_solve(&mut pre, &self.params, rng);
        counter.tick((lp.guesses * self.params.rounds * n) as u64)?;
        let rounded = pivot_based_rounding(&lp.z, pre.rep(), rng);
        let all: Vec<VertexId> = (0..n).collect();
        let mut sym = StepCounter::unlimited();
        let out = symmetric_difference(pre.rep(), rounded.clustering, &all, &mut sym).expect("unlimited counter");
        counter.tick(sym.used())?;
        let best = rep.clone().best_of_with(out, TieRule::KeepOld);
        let moves = label_diff(rep, &best);
        Ok((best, moves))
    }
}

/// Exact optimum per component; with `fail` > 0, returns the input with that
/// probability instead. Unbudgeted; charges n + |E|.
struct ExactStage {
    oracle: OptOracle,
    fail: f64,
}

impl StaticAlgorithm for ExactStage {
    fn name(&self) -> String {
        if self.fail > 0.0 {
            format!("hypothetical:{}", self.fail)
        } else {
            "exact".into()
        }
    }

    fn step_factor(&self) -> Option<u64> {
        None
    }

    fn run(
        &mut self,
        rep: &ClusterRepresentation,
        rng: &mut RngStream,
        counter: &mut StepCounter,
    ) -> Result<(ClusterRepresentation, Vec<VertexId>), BudgetExceeded> {
        if self.fail > 0.0 && rng.gen::<f64>() < self.fail {
            counter.tick(1)?;
            return Ok((rep.clone(), Vec::new()));
        }
        let g = rep.graph();
        counter.tick((g.n() + g.m()) as u64)?;
        let out = match self.oracle.solve(&g) {
            Ok((_, c)) => ClusterRepresentation::from_graph(&g, c).expect("oracle clustering fits the graph"),
            Err(e) => {
                log::warn!("exact stage skipped: {e}");
                return Ok((rep.clone(), Vec::new()));
            }
        };
        let moves = label_diff(rep, &out);
        Ok((out, moves))
    }
}

/// One stage as recorded in a rebuild log.
#[derive(Clone, Debug, PartialEq)]
pub struct StageLog {
    pub name: String,
    pub input: usize,
    pub output: usize,
    pub steps: u64,
    pub over_budget: bool,
    pub kept: bool,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub rep: ClusterRepresentation,
    pub moves: Vec<VertexId>,
    pub steps: u64,
    pub stages: Vec<StageLog>,
}

/// Sum of the stage allowances for input size d, or `None` if some stage is
/// unbudgeted.
pub fn pipeline_budget(plugins: &[Box<dyn StaticAlgorithm>], d: usize) -> Option<u64> {
    plugins.iter().try_fold(0u64, |acc, p| Some(acc.saturating_add(p.step_factor()?.saturating_mul(d as u64 + 1))))
}

/// Runs the stages in order, each on the best representation so far; a stage
/// output replaces it when no more expensive. Stage i draws from `rng.fork(i)`.
pub fn run_pipeline(plugins: &mut [Box<dyn StaticAlgorithm>], input: ClusterRepresentation, rng: &RngStream) -> PipelineOutput {
    let mut cur = input;
    let mut moves = Vec::new();
    let mut steps = 0u64;
    let mut stages = Vec::new();
    for (i, p) in plugins.iter_mut().enumerate() {
        let d = cur.cost();
        if d == 0 {
            break;
        }
        let limit = p.step_factor().map_or(u64::MAX, |f| f.saturating_mul(d as u64 + 1));
        let mut counter = StepCounter::with_limit(limit);
        let mut stage_rng = rng.fork(i as u64);
        let res = p.run(&cur, &mut stage_rng, &mut counter);
        let used = counter.used().min(limit);
        steps += used;
        let mut log = StageLog { name: p.name(), input: d, output: d, steps: used, over_budget: res.is_err(), kept: false };
        if let Ok((out, mv)) = res {
            debug_assert_eq!(out.n(), cur.n());
            log.output = out.cost();
            if out.cost() <= d {
                log.kept = true;
                moves.extend(mv);
                cur = out;
            }
        }
        stages.push(log);
    }
    moves.sort_unstable();
    moves.dedup();
    PipelineOutput { rep: cur, moves, steps, stages }
}
