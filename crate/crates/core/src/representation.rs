use std::fmt::Write as _;

use crate::clustering::{ClusterId, Clustering};
use crate::error::{parse_err, Error, Result};
use crate::graph::{content_lines, two_numbers, Graph, Pair, VertexId};
use crate::marks::{Flags, Marks};
use crate::steps::{BudgetExceeded, StepCounter};
use crate::violation::ViolationSet;

/// Exact |E △ E(C)| by direct scan; reference oracle, not a fast path.
pub fn clustering_cost(g: &Graph, c: &Clustering) -> Result<usize> {
    Ok(violation(g, c)?.len())
}

/// Exact E △ E(C), sorted.
pub fn violation(g: &Graph, c: &Clustering) -> Result<Vec<Pair>> {
    if c.n() != g.n() {
        return Err(Error::Structural(format!("clustering over {} vertices, graph has {}", c.n(), g.n())));
    }
    let mut out: Vec<Pair> = g.edges().filter(|p| !c.same_cluster(p.u, p.v)).collect();
    for cid in c.cluster_ids() {
        let ms = c.members(cid);
        for (i, &a) in ms.iter().enumerate() {
            for &b in &ms[i + 1..] {
                if !g.has_edge(a, b) {
                    out.push(Pair::new(a, b));
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Flips recorded since the last reconcile, grouped by smaller endpoint.
#[derive(Clone, Debug, Default)]
pub struct UpdateBuffer {
    pending: Vec<Pair>,
    owners: Vec<VertexId>,
    log: Vec<Vec<VertexId>>,
    slot: Vec<usize>,
}

const NO_SLOT: usize = usize::MAX;

impl UpdateBuffer {
    pub fn new(n: usize) -> UpdateBuffer {
        UpdateBuffer { pending: Vec::new(), owners: Vec::new(), log: Vec::new(), slot: vec![NO_SLOT; n] }
    }

    pub fn push(&mut self, u: VertexId, v: VertexId) {
        let p = Pair::new(u, v);
        self.pending.push(p);
        let k = match self.slot[p.u] {
            NO_SLOT => {
                self.slot[p.u] = self.owners.len();
                self.owners.push(p.u);
                if self.log.len() < self.owners.len() {
                    self.log.push(Vec::new());
                }
                self.owners.len() - 1
            }
            k => k,
        };
        self.log[k].push(p.v);
    }

    pub fn pending(&self) -> &[Pair] {
        &self.pending
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn clear(&mut self) {
        for &u in &self.owners {
            self.slot[u] = NO_SLOT;
        }
        for l in self.log.iter_mut().take(self.owners.len()) {
            l.clear();
        }
        self.owners.clear();
        self.pending.clear();
    }
}

/// Outcome of a budgeted symmetric-difference computation.
#[derive(Clone, Debug)]
pub enum SymDiff {
    Updated(ClusterRepresentation),
    Unchanged,
}

/// Tie handling when two representations have the same cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieRule {
    /// Accept the candidate on ties (`|D'| ≤ |D|`).
    #[default]
    AcceptNew,
    /// Keep the incumbent on ties (`|D'| < |D|`).
    KeepOld,
}

/// Step allowance factor for `symmetric_difference_update`.
pub const SYMDIFF_BUDGET_FACTOR: u64 = 16;

/// A clustering C together with D = E △ E(C).
#[derive(Clone, Debug)]
pub struct ClusterRepresentation {
    clustering: Clustering,
    d: ViolationSet,
}

impl ClusterRepresentation {
    pub fn from_graph(g: &Graph, clustering: Clustering) -> Result<ClusterRepresentation> {
        let pairs = violation(g, &clustering)?;
        let d = ViolationSet::from_pairs(g.n(), pairs);
        Ok(ClusterRepresentation { clustering, d })
    }

    pub fn singletons(g: &Graph) -> ClusterRepresentation {
        ClusterRepresentation { clustering: Clustering::singletons(g.n()), d: ViolationSet::from_pairs(g.n(), g.edges()) }
    }

    pub fn empty(n: usize) -> ClusterRepresentation {
        ClusterRepresentation { clustering: Clustering::singletons(n), d: ViolationSet::new(n) }
    }

    /// Trusts the caller that `d` is E △ E(C) for the intended graph.
    pub fn from_parts(clustering: Clustering, d: ViolationSet) -> ClusterRepresentation {
        debug_assert_eq!(clustering.n(), d.n());
        ClusterRepresentation { clustering, d }
    }

    pub fn into_parts(self) -> (Clustering, ViolationSet) {
        (self.clustering, self.d)
    }

    pub fn n(&self) -> usize {
        self.clustering.n()
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn violations(&self) -> &ViolationSet {
        &self.d
    }

    /// |D|, the cost of the clustering.
    pub fn cost(&self) -> usize {
        self.d.len()
    }

    #[inline]
    pub fn label(&self, v: VertexId) -> ClusterId {
        self.clustering.label(v)
    }

    #[inline]
    pub fn cluster_of(&self, v: VertexId) -> &[VertexId] {
        self.clustering.cluster_of(v)
    }

    /// Whether `v` is incident to D.
    #[inline]
    pub fn is_active(&self, v: VertexId) -> bool {
        self.d.degree(v) > 0
    }

    /// Violated pairs at `v` inside / across its cluster.
    pub fn violation_split(&self, v: VertexId) -> (usize, usize) {
        let c = self.label(v);
        let inside = self.d.partners(v).filter(|&w| self.label(w) == c).count();
        (inside, self.d.degree(v) - inside)
    }

    /// Degree of `v` in G, in O(d_D(v)).
    pub fn degree(&self, v: VertexId) -> usize {
        let (inside, across) = self.violation_split(v);
        self.cluster_of(v).len() - 1 - inside + across
    }

    /// Edge test in O(min d_D).
    pub fn is_edge(&self, a: VertexId, b: VertexId) -> bool {
        self.clustering.same_cluster(a, b) != self.d.contains(a, b)
    }

    /// Open neighbourhood of `v` appended to `out`, in O(|C(v)| + d_D(v)).
    pub fn neighbors_into(&self, v: VertexId, marks: &mut Flags, out: &mut Vec<VertexId>) {
        let c = self.label(v);
        marks.clear();
        for w in self.d.partners(v) {
            if self.label(w) == c {
                marks.mark(w);
            } else {
                out.push(w);
            }
        }
        out.extend(self.cluster_of(v).iter().copied().filter(|&w| w != v && !marks.contains(w)));
    }

    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut marks = Flags::new(self.n());
        let mut out = Vec::new();
        self.neighbors_into(v, &mut marks, &mut out);
        out
    }

    /// Reconstructs G = E(C) △ D; O(Σ|C|² + |D|).
    pub fn graph(&self) -> Graph {
        let n = self.n();
        let mut g = Graph::new(n);
        for c in self.clustering.cluster_ids() {
            let ms = self.clustering.members(c);
            for (i, &a) in ms.iter().enumerate() {
                for &b in &ms[i + 1..] {
                    g.add_edge(a, b);
                }
            }
        }
        for p in self.d.pairs() {
            g.toggle(p.u, p.v);
        }
        g
    }

    /// Reconciles D with the buffered flips; clustering must be unchanged since
    /// the buffer began. Runs in O(|buf| + |D|) and clears the buffer.
    pub fn apply_flips(&mut self, buf: &mut UpdateBuffer) -> u64 {
        if buf.is_empty() {
            return 0;
        }
        let n = self.n();
        let mut parity = Marks::new(n);
        let mut index = Marks::new(n);
        let steps = self.d.toggle_grouped(&buf.owners, &buf.log, &mut parity, &mut index);
        buf.clear();
        steps
    }

    /// Applies one flip to D directly.
    pub fn toggle_pair(&mut self, u: VertexId, v: VertexId) {
        self.d.toggle(Pair::new(u, v));
    }

    /// Switches to `next` (a representation of the same graph) by staging the
    /// labels of `moved` and raising the flag; labels answer for `next` at
    /// once, member lists catch up through `settle`. `moved` must cover every
    /// vertex whose label differs.
    pub fn adopt_staged(&mut self, next: &ClusterRepresentation, moved: &[VertexId]) {
        assert!(self.clustering.is_settled(), "previous switch still settling");
        for &v in moved {
            self.clustering.stage(v, next.label(v));
        }
        self.clustering.swap();
        self.d = next.d.clone();
    }

    /// Folds up to `k` staged labels; returns how many.
    pub fn settle(&mut self, k: usize) -> usize {
        self.clustering.settle(k)
    }

    pub fn is_settled(&self) -> bool {
        self.clustering.is_settled()
    }

    /// Best of two representations of the same graph; ties keep `self`.
    pub fn best_of(self, other: ClusterRepresentation) -> ClusterRepresentation {
        self.best_of_with(other, TieRule::KeepOld)
    }

    pub fn best_of_with(self, other: ClusterRepresentation, tie: TieRule) -> ClusterRepresentation {
        let take = match tie {
            TieRule::KeepOld => other.cost() < self.cost(),
            TieRule::AcceptNew => other.cost() <= self.cost(),
        };
        if take {
            other
        } else {
            self
        }
    }

    /// Canonical text form: `n k`, a line of cluster ids, `|D|`, then the pairs.
    pub fn serialize(&self) -> String {
        self.serialize_with(None)
    }

    pub(crate) fn serialize_with(&self, extra: Option<&str>) -> String {
        let labels = canonical_labels(&self.clustering);
        let k = self.clustering.cluster_count();
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n(), k);
        let _ = writeln!(s, "{}", join(labels.iter()));
        if let Some(extra) = extra {
            let _ = writeln!(s, "{extra}");
        }
        let _ = writeln!(s, "{}", self.d.len());
        for p in self.d.sorted() {
            let _ = writeln!(s, "{} {}", p.u, p.v);
        }
        s
    }

    pub fn parse(text: &str) -> Result<ClusterRepresentation> {
        let mut lines = content_lines(text);
        let rep = parse_rep_lines(&mut lines, false)?.0;
        Ok(rep)
    }
}

pub(crate) fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Labels renumbered by first appearance.
pub fn canonical_labels(c: &Clustering) -> Vec<usize> {
    let mut remap = std::collections::HashMap::new();
    (0..c.n())
        .map(|v| {
            let next = remap.len();
            *remap.entry(c.label(v)).or_insert(next)
        })
        .collect()
}

pub(crate) fn parse_rep_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    with_extra: bool,
) -> Result<(ClusterRepresentation, Option<(usize, &'a str)>)> {
    let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
    let (n, k) = two_numbers(hl, header)?;
    let (ll, label_line) = lines.next().ok_or_else(|| parse_err(hl, "missing label line"))?;
    let labels: Vec<usize> = label_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(ll, format!("bad label {t:?}"))))
        .collect::<Result<_>>()?;
    if labels.len() != n {
        return Err(parse_err(ll, format!("expected {n} labels, found {}", labels.len())));
    }
    let clustering = Clustering::from_labels(&labels);
    if clustering.cluster_count() != k {
        return Err(parse_err(hl, format!("header declares {k} clusters, found {}", clustering.cluster_count())));
    }
    let extra = if with_extra { lines.next() } else { None };
    let (dl, dline) = lines.next().ok_or_else(|| parse_err(ll, "missing violation count"))?;
    let count: usize = dline.trim().parse().map_err(|_| parse_err(dl, "bad violation count"))?;
    let mut d = ViolationSet::new(n);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..count {
        let (pl, pline) = lines.next().ok_or_else(|| parse_err(dl, "missing violation pair"))?;
        let (a, b) = two_numbers(pl, pline)?;
        if a >= n || b >= n || a == b {
            return Err(parse_err(pl, format!("invalid pair ({a}, {b})")));
        }
        let p = Pair::new(a, b);
        if !seen.insert(p) {
            return Err(parse_err(pl, format!("duplicate pair ({a}, {b})")));
        }
        d.insert(p);
    }
    if let Some((l, _)) = lines.next() {
        return Err(parse_err(l, "trailing content"));
    }
    Ok((ClusterRepresentation { clustering, d }, extra))
}

/// Computes (C', D') from (C, D) and a clustering C' whose labels differ from
/// C only on vertices listed in `moves` (extra or repeated entries are
/// harmless). Work is O(|D| + |D'|) plus the sizes of the touched clusters.
pub fn symmetric_difference(
    old: &ClusterRepresentation,
    new: Clustering,
    moves: &[VertexId],
    counter: &mut StepCounter,
) -> std::result::Result<ClusterRepresentation, BudgetExceeded> {
    let n = old.n();
    let c0 = old.clustering();
    let mut moved = Flags::new(n);
    let mut done = Flags::new(n);
    let mut in_old = Flags::new(n);
    let mut in_new = Flags::new(n);
    for &v in moves {
        moved.mark(v);
    }
    // Changed pairs, grouped by smaller endpoint.
    let mut owners: Vec<VertexId> = Vec::new();
    let mut log: Vec<Vec<VertexId>> = Vec::new();
    let mut slot = Marks::<usize>::new(n);
    let mut record = |a: VertexId, b: VertexId| {
        let p = Pair::new(a, b);
        let k = match slot.get(p.u) {
            Some(k) => k,
            None => {
                slot.set(p.u, owners.len());
                owners.push(p.u);
                log.push(Vec::new());
                owners.len() - 1
            }
        };
        log[k].push(p.v);
    };
    let mut changed = 0usize;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &v in moves {
        if done.contains(v) {
            continue;
        }
        let a = c0.cluster_of(v);
        let b = new.cluster_of(v);
        counter.tick((a.len() + b.len()) as u64)?;
        in_old.clear();
        in_new.clear();
        a.iter().for_each(|&w| in_old.mark(w));
        b.iter().for_each(|&w| in_new.mark(w));
        x.clear();
        y.clear();
        for &w in a {
            if in_new.contains(w) {
                y.push(w);
            } else {
                x.push(w);
            }
        }
        x.extend(b.iter().copied().filter(|&w| !in_old.contains(w)));
        for &w in &y {
            done.mark(w);
        }
        counter.tick((x.len() * y.len()) as u64)?;
        for &xv in &x {
            if moved.contains(xv) && done.contains(xv) {
                continue;
            }
            for &yv in &y {
                record(xv, yv);
                changed += 1;
            }
        }
    }
    let mut d = old.violations().clone();
    let mut parity = Marks::new(n);
    let mut index = Marks::new(n);
    counter.tick(changed as u64)?;
    let steps = d.toggle_grouped(&owners, &log, &mut parity, &mut index);
    counter.tick(steps)?;
    Ok(ClusterRepresentation { clustering: new, d })
}

/// Budgeted form: returns `Unchanged` if the step allowance
/// `SYMDIFF_BUDGET_FACTOR·(|D| + |moves| + 1)` trips or if |D'| > |D|.
pub fn symmetric_difference_update(old: &ClusterRepresentation, new: Clustering, moves: &[VertexId]) -> SymDiff {
    let limit = SYMDIFF_BUDGET_FACTOR * (old.cost() + moves.len() + 1) as u64;
    let mut counter = StepCounter::with_limit(limit);
    match symmetric_difference(old, new, moves, &mut counter) {
        Ok(rep) if rep.cost() <= old.cost() => SymDiff::Updated(rep),
        _ => SymDiff::Unchanged,
    }
}
