//! The rebuild driver. Flips are buffered; after t = max(1, ⌈μ|D|⌉) of them
//! the pipeline runs on the reconciled representation and its output is kept
//! when it is no more expensive.
//!
//! In deamortized mode each epoch's rebuild runs on a snapshot taken when the
//! epoch starts. Its counted work is charged in equal slices to the updates of
//! the epoch and the output, brought up to date with the flips seen since, is
//! switched in by staging the moved labels and raising one flag.

mod config;
mod plugin;
mod stream;

use std::thread::JoinHandle;

pub use config::{EngineConfig, Mode, PluginSpec, CLUSTER_LP_TARGET, LOCAL_SEARCH_TARGET};
pub use plugin::{
    build_plugin, label_diff, pipeline_budget, run_pipeline, PipelineOutput, StageLog, StaticAlgorithm,
    PIVOT_STAGE_FACTOR,
};
pub use stream::{format_stream, parse_stream, read_stream, Update};

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{Graph, Pair, VertexId};
use crate::representation::{ClusterRepresentation, UpdateBuffer};
use crate::sampling::RngStream;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Epoch {
    pub index: u64,
    /// Updates left before the epoch ends; at least 1 while it runs.
    pub t: u64,
    pub input_violation: usize,
    pub updates_applied: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Query,
    Commit,
}

/// One metrics row. The engine leaves `opt_cost` and `ratio` empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub kind: RecordKind,
    /// Number of flips applied so far.
    pub update_index: u64,
    /// `None` after an un-annotated flip, until the next rebuild.
    pub cost: Option<usize>,
    pub opt_cost: Option<usize>,
    pub ratio: Option<f64>,
    /// Size of the stored D; may lag the true cost while flips are buffered.
    pub violation_size: usize,
    pub epoch: u64,
    /// Counted steps of the latest update, rebuild included.
    pub steps_used: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RebuildLog {
    /// The update after which the rebuild committed.
    pub update_index: u64,
    pub epoch: u64,
    /// |D| the pipeline started from.
    pub input_violation: usize,
    /// |D| right after the commit.
    pub output_violation: usize,
    pub accepted: bool,
    /// Length of the epoch that starts here.
    pub t_next: u64,
    pub steps: u64,
    pub stages: Vec<StageLog>,
}

type Plugins = Vec<Box<dyn StaticAlgorithm>>;

enum Work {
    Done(PipelineOutput),
    Running(JoinHandle<(PipelineOutput, Plugins)>),
}

/// A rebuild in flight. It owns its snapshot and never reads the live
/// representation.
struct RebuildTask {
    input: usize,
    /// Counted steps charged per update; 0 for unbudgeted pipelines, whose
    /// work is charged at the commit.
    slice: u64,
    budget: Option<u64>,
    /// Flips since the snapshot, replayed on the output at the commit.
    flips: Vec<Pair>,
    work: Work,
}

pub struct Engine {
    config: EngineConfig,
    mu: f64,
    graph: Graph,
    rep: ClusterRepresentation,
    buffer: UpdateBuffer,
    plugins: Option<Plugins>,
    rng: RngStream,
    rebuilds_started: u64,
    epoch: Epoch,
    updates: u64,
    tracked: Option<usize>,
    task: Option<RebuildTask>,
    records: Vec<Record>,
    log: Vec<RebuildLog>,
    last_steps: u64,
    max_steps: u64,
    /// Σ t_alg over the stages, if every stage is budgeted.
    factor: Option<u64>,
}

fn countdown(mu: f64, d: usize) -> u64 {
    ((mu * d as f64).ceil() as u64).max(1)
}

impl Engine {
    pub fn new(graph: Graph, initial: Clustering, config: EngineConfig) -> Result<Engine> {
        let plugins = config.pipeline.iter().map(|s| build_plugin(s, config.epsilon)).collect();
        Engine::with_plugins(graph, initial, config, plugins)
    }

    /// Uses `plugins` in place of the configured pipeline; `config.pipeline`
    /// still fixes μ.
    pub fn with_plugins(graph: Graph, initial: Clustering, config: EngineConfig, plugins: Plugins) -> Result<Engine> {
        config.validate()?;
        if plugins.is_empty() {
            return Err(Error::Argument("no plugins".into()));
        }
        let n = graph.n();
        let rep = ClusterRepresentation::from_graph(&graph, initial)?;
        let mu = config.resolved_mu();
        let d = rep.cost();
        let factor = plugins.iter().map(|p| p.step_factor()).sum::<Option<u64>>();
        let mut e = Engine {
            factor,
            rng: RngStream::new(config.seed, 0),
            config,
            mu,
            graph,
            buffer: UpdateBuffer::new(n),
            plugins: Some(plugins),
            rebuilds_started: 0,
            epoch: Epoch { index: 0, t: countdown(mu, d), input_violation: d, updates_applied: 0 },
            updates: 0,
            tracked: Some(d),
            task: None,
            records: Vec::new(),
            log: Vec::new(),
            last_steps: 0,
            max_steps: 0,
            rep,
        };
        if e.config.mode == Mode::Deamortized {
            let snap = e.rep.clone();
            e.start_epoch(snap);
        }
        Ok(e)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn epoch(&self) -> &Epoch {
        &self.epoch
    }

    pub fn update_count(&self) -> u64 {
        self.updates
    }

    pub fn label(&self, v: VertexId) -> usize {
        self.rep.label(v)
    }

    pub fn same_cluster(&self, u: VertexId, v: VertexId) -> bool {
        self.rep.clustering().same_cluster(u, v)
    }

    /// The served clustering, renumbered.
    pub fn current_clustering(&self) -> Clustering {
        Clustering::from_labels(&self.rep.clustering().labels())
    }

    /// Disagreements of the served clustering; unknown after un-annotated
    /// flips until the next amortized rebuild.
    pub fn current_cost(&self) -> Option<usize> {
        match self.config.mode {
            Mode::Amortized => self.tracked,
            Mode::Deamortized => Some(self.rep.cost()),
        }
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn take_records(&mut self) -> Vec<Record> {
        std::mem::take(&mut self.records)
    }

    pub fn rebuild_log(&self) -> &[RebuildLog] {
        &self.log
    }

    pub fn last_update_steps(&self) -> u64 {
        self.last_steps
    }

    pub fn max_update_steps(&self) -> u64 {
        self.max_steps
    }

    /// Worst-case counted steps of one deamortized update for a budgeted
    /// pipeline: the slice, at most 2·Σt_alg/μ + 1, plus settling and the
    /// constant flip work. Leftover settling at a commit is not covered.
    pub fn update_step_bound(&self) -> Option<u64> {
        if self.config.mode != Mode::Deamortized {
            return None;
        }
        let factor = self.factor?;
        Some(((2 * (factor + 1)) as f64 / self.mu).ceil() as u64 + 1 + self.config.settle_per_update as u64 + 3)
    }

    pub fn apply(&mut self, up: Update) -> Result<()> {
        match up {
            Update::Flip(u, v) => self.flip(u, v),
            Update::Insert(u, v) => self.insert(u, v),
            Update::Delete(u, v) => self.delete(u, v),
            Update::Query => {
                self.query();
                Ok(())
            }
        }
    }

    pub fn flip(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.update(u, v, None)
    }

    pub fn insert(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.update(u, v, Some(true))
    }

    pub fn delete(&mut self, u: VertexId, v: VertexId) -> Result<()> {
        self.update(u, v, Some(false))
    }

    pub fn query(&mut self) -> Record {
        let r = self.record(RecordKind::Query);
        self.records.push(r.clone());
        r
    }

    fn record(&self, kind: RecordKind) -> Record {
        Record {
            kind,
            update_index: self.updates,
            cost: self.current_cost(),
            opt_cost: None,
            ratio: None,
            violation_size: self.rep.cost(),
            epoch: self.epoch.index,
            steps_used: self.last_steps,
        }
    }

    fn update(&mut self, u: VertexId, v: VertexId, insert: Option<bool>) -> Result<()> {
        self.graph.check_pair(u, v)?;
        let present = self.graph.has_edge(u, v);
        if let Some(ins) = insert {
            if ins == present {
                let msg = if ins { "inserting an existing edge" } else { "deleting a non-edge" };
                return Err(Error::Annotation { u, v, msg: msg.into() });
            }
        }
        self.graph.toggle(u, v);
        self.updates += 1;
        self.epoch.updates_applied += 1;
        let mut steps = 1u64;
        let together = self.rep.clustering().same_cluster(u, v);
        match self.config.mode {
            Mode::Amortized => {
                self.tracked = match (self.tracked, insert) {
                    // an inserted edge inside a cluster repairs a violation
                    (Some(c), Some(ins)) if ins == together => Some(c - 1),
                    (Some(c), Some(_)) => Some(c + 1),
                    _ => None,
                };
                self.buffer.push(u, v);
            }
            Mode::Deamortized => {
                self.rep.toggle_pair(u, v);
                steps += 1;
                if let Some(task) = &mut self.task {
                    task.flips.push(Pair::new(u, v));
                    steps += 1 + task.slice;
                }
                steps += self.rep.settle(self.config.settle_per_update) as u64;
            }
        }
        debug_assert!(self.epoch.t >= 1);
        self.epoch.t -= 1;
        if self.epoch.t == 0 {
            steps += match self.config.mode {
                Mode::Amortized => self.rebuild(),
                Mode::Deamortized => self.commit(),
            };
            self.last_steps = steps;
            self.max_steps = self.max_steps.max(steps);
            let r = self.record(RecordKind::Commit);
            self.records.push(r);
        } else {
            self.last_steps = steps;
            self.max_steps = self.max_steps.max(steps);
        }
        Ok(())
    }

    fn fork(&mut self) -> RngStream {
        let r = self.rng.fork(self.rebuilds_started);
        self.rebuilds_started += 1;
        r
    }

    /// Reconcile, run the pipeline, keep the output unless it costs more.
    fn rebuild(&mut self) -> u64 {
        let mut steps = self.rep.apply_flips(&mut self.buffer);
        let input = self.rep.cost();
        let mut stages = Vec::new();
        if input > 0 {
            let rng = self.fork();
            let plugins = self.plugins.as_mut().expect("plugins are home in amortized mode");
            // the pipeline hands back its input unless a stage did no worse
            let rep = std::mem::replace(&mut self.rep, ClusterRepresentation::empty(0));
            let out = run_pipeline(plugins, rep, &rng);
            steps += out.steps;
            stages = out.stages;
            debug_assert!(out.rep.cost() <= input);
            self.rep = out.rep;
        }
        self.tracked = Some(self.rep.cost());
        self.close_epoch(input, true, steps, stages);
        steps
    }

    /// Ends a deamortized epoch: finish the task, replay the epoch's flips
    /// on its output, switch to it if no more expensive, start the next task.
    fn commit(&mut self) -> u64 {
        let mut steps = self.rep.settle(usize::MAX) as u64;
        let mut accepted = false;
        let mut stages = Vec::new();
        let mut input = self.rep.cost();
        let mut next = None;
        if let Some(task) = self.task.take() {
            input = task.input;
            let mut out = match task.work {
                Work::Done(out) => out,
                Work::Running(h) => {
                    let (out, plugins) = h.join().expect("rebuild worker panicked");
                    self.plugins = Some(plugins);
                    out
                }
            };
            for p in &task.flips {
                out.rep.toggle_pair(p.u, p.v);
            }
            match task.budget {
                Some(b) => debug_assert!(out.steps + input as u64 + 1 <= b, "task overran its budget"),
                None => steps += out.steps + input as u64 + 1,
            }
            stages = out.stages;
            if out.rep.cost() <= self.rep.cost() {
                self.rep.adopt_staged(&out.rep, &out.moves);
                accepted = true;
                next = Some(out.rep);
            }
        }
        self.close_epoch(input, accepted, steps, stages);
        let snap = next.unwrap_or_else(|| if self.rep.cost() > 0 { self.rep.clone() } else { ClusterRepresentation::empty(0) });
        self.start_epoch(snap);
        steps
    }

    fn close_epoch(&mut self, input: usize, accepted: bool, steps: u64, stages: Vec<StageLog>) {
        let d = self.rep.cost();
        self.epoch = Epoch { index: self.epoch.index + 1, t: countdown(self.mu, d), input_violation: d, updates_applied: 0 };
        self.log.push(RebuildLog {
            update_index: self.updates,
            epoch: self.epoch.index,
            input_violation: input,
            output_violation: d,
            accepted,
            t_next: self.epoch.t,
            steps,
            stages,
        });
    }

    /// Starts the next task on `snap`, a settled copy of the served
    /// representation; an empty D starts nothing.
    fn start_epoch(&mut self, snap: ClusterRepresentation) {
        let d = snap.cost();
        if d == 0 {
            return;
        }
        let t = self.epoch.t;
        let rng = self.fork();
        let mut plugins = self.plugins.take().expect("plugins are home between tasks");
        // the snapshot copy is charged to the task
        let budget = pipeline_budget(&plugins, d).map(|b| b + d as u64 + 1);
        let slice = budget.map_or(0, |b| b.div_ceil(t));
        let work = if self.config.threaded {
            Work::Running(std::thread::spawn(move || {
                let out = run_pipeline(&mut plugins, snap, &rng);
                (out, plugins)
            }))
        } else {
            let out = run_pipeline(&mut plugins, snap, &rng);
            self.plugins = Some(plugins);
            Work::Done(out)
        };
        self.task = Some(RebuildTask { input: d, slice, budget, flips: Vec::new(), work });
    }
}

/// Rebuilds that break the layering bound: for each rebuild at update i with
/// input d, the rebuilds at updates i..=i+⌊μd⌋ (the window in which it is
/// risky) with input above d/2 are counted; entries with more than 3 are
/// returned as (i, count).
pub fn risky_layer_violations(log: &[RebuildLog], mu: f64) -> Vec<(u64, usize)> {
    let mut out = Vec::new();
    for (k, r) in log.iter().enumerate() {
        let d = r.input_violation;
        if d == 0 {
            continue;
        }
        let end = r.update_index + (mu * d as f64).floor() as u64;
        let count = log[k..]
            .iter()
            .take_while(|x| x.update_index <= end)
            .filter(|x| 2 * x.input_violation > d)
            .count();
        if count > 3 {
            out.push((r.update_index, count));
        }
    }
    out
}
