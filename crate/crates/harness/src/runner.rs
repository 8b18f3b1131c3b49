use anyhow::{Context, Result};
use dyncc::engine::{risky_layer_violations, Engine, Update};
use dyncc::oracle::OptOracle;
use dyncc::{clustering_cost, Clustering, Graph, RngStream};
use rand::RngCore;
use rayon::prelude::*;

use crate::adversary::{random_stream, replay, two_paths, AdaptiveGreedy, Target};
use crate::config::{Experiment, Initial, SourceKind};
use crate::metrics::{ratio, AggregateRow, EngineRow, Row, RunRow, TrialRow};

/// Rows of one trial (engine rows first, then the summary) and its summary.
#[derive(Clone, Debug)]
pub struct TrialOutcome {
    pub rows: Vec<Row>,
    pub summary: TrialRow,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub trials: Vec<TrialRow>,
    pub aggregate: AggregateRow,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.aggregate.ok
    }
}

enum Driver {
    Fixed(std::vec::IntoIter<Update>),
    Adaptive(AdaptiveGreedy, usize),
}

impl Driver {
    fn next(&mut self, e: &Engine) -> Option<Update> {
        match self {
            Driver::Fixed(it) => it.next(),
            Driver::Adaptive(_, 0) => None,
            Driver::Adaptive(a, left) => {
                *left -= 1;
                Some(a.next(e))
            }
        }
    }
}

/// Per-trial seeds: (engine seed, source stream). Depends on (seed, trial) only.
pub fn trial_streams(seed: u64, trial: u64) -> (u64, RngStream) {
    let base = RngStream::new(seed, trial);
    (base.fork(0).next_u64(), base.fork(1))
}

fn prepare(exp: &Experiment, rng: &mut RngStream) -> Result<(Graph, Option<Clustering>, Driver, Option<Target>)> {
    let s = &exp.source;
    Ok(match s.kind {
        SourceKind::TwoPaths => {
            let sc = two_paths(s.n.expect("validated"))?;
            (sc.graph, Some(sc.initial), Driver::Fixed(sc.updates.into_iter()), sc.target)
        }
        SourceKind::Random => {
            let (g, ups) = random_stream(s.n.expect("validated"), s.p_edge, s.updates, s.query_every, rng)?;
            (g, None, Driver::Fixed(ups.into_iter()), None)
        }
        SourceKind::Adaptive => {
            let g = Graph::gnp(s.n.expect("validated"), s.p_edge, rng);
            (g.clone(), None, Driver::Adaptive(AdaptiveGreedy::new(g), s.updates), None)
        }
        SourceKind::Replay => {
            let (g, ups) = replay(s.graph.as_deref().expect("validated"), s.stream.as_deref().expect("validated"))?;
            (g, None, Driver::Fixed(ups.into_iter()), None)
        }
    })
}

pub fn run_trial(exp: &Experiment, trial: u64) -> Result<TrialOutcome> {
    let (seed, mut rng) = trial_streams(exp.seed, trial);
    let (graph, scripted, mut driver, target) = prepare(exp, &mut rng)?;
    let n = graph.n();
    let oracle_on = exp.oracle_enabled(n);
    let bound = exp.max_ratio()?;
    let records = exp.records();
    let mut oracle = OptOracle::new();
    let initial = match (exp.source.initial, scripted) {
        (Some(Initial::Opt), _) => oracle.solve(&graph).context("initial optimum")?.1,
        (Some(Initial::Singletons), _) => Clustering::singletons(n),
        (None, Some(c)) => c,
        (None, None) if oracle_on => oracle.solve(&graph).context("initial optimum")?.1,
        (None, None) => Clustering::singletons(n),
    };
    let mut e = Engine::new(graph, initial, exp.engine.engine_config(seed)?)?;
    let step_bound = e.update_step_bound();
    let mut rows = Vec::new();
    let mut s = TrialRow { trial, seed, n, ..Default::default() };
    let (mut ratio_sum, mut ratio_count) = (0.0, 0usize);
    let mut opt = if oracle_on { oracle.cost(e.graph()).ok() } else { None };
    while let Some(up) = driver.next(&e) {
        let commits = e.rebuild_log().len();
        e.apply(up).with_context(|| format!("trial {trial}: update {up}"))?;
        if up != Update::Query {
            if oracle_on {
                // Components beyond the exact range leave OPT unknown.
                opt = oracle.cost(e.graph()).ok();
            }
            let cost = e.current_cost();
            if let (Some(c), true) = (cost, oracle_on) {
                if c != clustering_cost(e.graph(), &e.current_clustering())? {
                    s.cost_mismatches += 1;
                }
            }
            if let (Some(c), Some(o)) = (cost, opt) {
                let r = ratio(c, o);
                if let Some(r) = r {
                    ratio_sum += r;
                    ratio_count += 1;
                    s.max_ratio = Some(s.max_ratio.map_or(r, |m: f64| m.max(r)));
                }
                if let Some(b) = bound {
                    if r.map_or(true, |r| r > b + 1e-12) {
                        s.ratio_violations += 1;
                    }
                }
            }
            if let Some(t) = target.filter(|t| t.update == e.update_count()) {
                s.target_cost = cost;
                s.target_failed = cost.map(|c| c > t.opt);
            }
            if e.rebuild_log().len() == commits && step_bound.is_some_and(|b| e.last_update_steps() > b) {
                s.step_violations += 1;
            }
        }
        for mut r in e.take_records() {
            if records {
                if let (Some(o), Some(c)) = (opt.filter(|_| oracle_on), r.cost) {
                    r.opt_cost = Some(o);
                    r.ratio = ratio(c, o);
                }
                rows.push(EngineRow::from_record(trial, &r));
            }
        }
    }
    s.updates = e.update_count();
    s.rebuilds = e.rebuild_log().len();
    s.final_cost = e.current_cost();
    s.final_opt = opt;
    s.mean_ratio = (ratio_count > 0).then(|| ratio_sum / ratio_count as f64);
    s.risky_violations = risky_layer_violations(e.rebuild_log(), e.mu()).len();
    s.max_update_steps = e.max_update_steps();
    s.ok = s.ratio_violations == 0 && s.cost_mismatches == 0 && s.risky_violations == 0 && s.step_violations == 0;
    rows.push(Row::Trial(s.clone()));
    Ok(TrialOutcome { rows, summary: s })
}

pub fn aggregate(trials: &[TrialRow]) -> AggregateRow {
    let ratios: Vec<f64> = trials.iter().filter_map(|t| t.mean_ratio).collect();
    let targets = trials.iter().filter(|t| t.target_failed.is_some()).count();
    let failures = trials.iter().filter(|t| t.target_failed == Some(true)).count();
    let failed = trials.iter().filter(|t| !t.ok).count();
    AggregateRow {
        trials: trials.len() as u64,
        mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
        max_ratio: trials.iter().filter_map(|t| t.max_ratio).reduce(f64::max),
        target_failures: failures,
        target_failure_rate: (targets > 0).then(|| failures as f64 / targets as f64),
        failed_trials: failed,
        ok: failed == 0,
    }
}

/// Runs every trial (in parallel, results in trial order): a header row, the
/// trials' rows and one aggregate row.
pub fn run_experiment(exp: &Experiment, command: &str) -> Result<Outcome> {
    exp.validate()?;
    let cfg = exp.engine.engine_config(exp.seed)?;
    let outcomes: Vec<TrialOutcome> =
        (0..exp.trials).into_par_iter().map(|t| run_trial(exp, t)).collect::<Result<_>>()?;
    let mut rows = vec![Row::Run(RunRow {
        command: command.into(),
        source: exp.source.kind.name().into(),
        trials: exp.trials,
        seed: exp.seed,
        epsilon: cfg.epsilon,
        mu: cfg.resolved_mu(),
        mode: cfg.mode.to_string(),
        pipeline: exp.engine.pipeline.clone(),
    })];
    let mut trials = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        rows.extend(o.rows);
        trials.push(o.summary);
    }
    let aggregate = aggregate(&trials);
    rows.push(Row::Aggregate(aggregate.clone()));
    Ok(Outcome { rows, trials, aggregate })
}
