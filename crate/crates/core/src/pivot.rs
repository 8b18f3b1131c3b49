use rand::seq::SliceRandom;
use rand::Rng;

use crate::clustering::{ClusterId, Clustering};
use crate::graph::{Graph, VertexId};
use crate::marks::{Flags, Marks};
use crate::representation::{symmetric_difference_update, ClusterRepresentation, SymDiff};
use crate::sampling::WeightedSampler;
use crate::steps::StepCounter;

/// Documented constant: `pivot_cluster` uses at most `PIVOT_STEP_FACTOR·(|D| + 1)` steps.
pub const PIVOT_STEP_FACTOR: u64 = 24;

/// A vertex of the contracted graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Vertex(VertexId),
    /// The inactive members of a cluster, contracted; `rep` is one of them.
    Core { cluster: ClusterId, rep: VertexId },
}

/// The active part of a representation with every core contracted to one
/// weighted vertex. Built from a scan of D only.
#[derive(Clone, Debug)]
pub struct ContractedView {
    pub nodes: Vec<Node>,
    pub weight: Vec<u64>,
    /// Index into `lists` of the cluster each node belongs to.
    pub group: Vec<usize>,
    /// Cluster id of each entry of `lists`.
    pub clusters: Vec<ClusterId>,
    /// L(C): the nodes of each active cluster.
    pub lists: Vec<Vec<usize>>,
    /// N⁺: violated partners outside the node's cluster (edges).
    pub plus: Vec<Vec<usize>>,
    /// N⁻: violated partners inside the node's cluster (non-edges).
    pub minus: Vec<Vec<usize>>,
    /// Position of the core node in `nodes`, per entry of `lists`.
    pub core: Vec<Option<usize>>,
}

impl ContractedView {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Concrete vertices represented by node `i`.
    pub fn expand<'a>(&'a self, i: usize, c: &'a Clustering, active: &'a Flags) -> Box<dyn Iterator<Item = VertexId> + 'a> {
        match self.nodes[i] {
            Node::Vertex(v) => Box::new(std::iter::once(v)),
            Node::Core { cluster, .. } => Box::new(c.members(cluster).iter().copied().filter(|&w| !active.contains(w))),
        }
    }
}

/// Builds the contracted view in O(|D|); also returns the active-vertex flags.
pub fn contract(rep: &ClusterRepresentation, counter: &mut StepCounter) -> (ContractedView, Flags) {
    let n = rep.n();
    let c = rep.clustering();
    let d = rep.violations();
    let mut index = Marks::<usize>::new(n);
    let mut active = Flags::new(n);
    let mut group_of = Marks::<usize>::new(c.capacity());
    let mut view = ContractedView {
        nodes: Vec::new(),
        weight: Vec::new(),
        group: Vec::new(),
        clusters: Vec::new(),
        lists: Vec::new(),
        plus: Vec::new(),
        minus: Vec::new(),
        core: Vec::new(),
    };
    let _ = counter.tick(d.len() as u64);
    for p in d.pairs() {
        for x in [p.u, p.v] {
            if index.contains(x) {
                continue;
            }
            active.mark(x);
            let cid = c.label(x);
            let g = match group_of.get(cid) {
                Some(g) => g,
                None => {
                    group_of.set(cid, view.lists.len());
                    view.clusters.push(cid);
                    view.lists.push(Vec::new());
                    view.core.push(None);
                    view.lists.len() - 1
                }
            };
            index.set(x, view.nodes.len());
            view.lists[g].push(view.nodes.len());
            view.nodes.push(Node::Vertex(x));
            view.weight.push(1);
            view.group.push(g);
            view.plus.push(Vec::new());
            view.minus.push(Vec::new());
        }
    }
    for g in 0..view.lists.len() {
        let cid = view.clusters[g];
        let members = c.members(cid);
        let core_size = members.len() - view.lists[g].len();
        if core_size == 0 {
            continue;
        }
        // Some inactive member appears within the first |active| + 1 entries.
        let mut scanned = 0;
        let rep_v = *members
            .iter()
            .inspect(|_| scanned += 1)
            .find(|&&w| !active.contains(w))
            .expect("core is nonempty");
        let _ = counter.tick(scanned);
        let i = view.nodes.len();
        view.nodes.push(Node::Core { cluster: cid, rep: rep_v });
        view.weight.push(core_size as u64);
        view.group.push(g);
        view.plus.push(Vec::new());
        view.minus.push(Vec::new());
        view.lists[g].push(i);
        view.core[g] = Some(i);
    }
    for p in d.pairs() {
        let (a, b) = (index.get(p.u).unwrap(), index.get(p.v).unwrap());
        if view.group[a] == view.group[b] {
            view.minus[a].push(b);
            view.minus[b].push(a);
        } else {
            view.plus[a].push(b);
            view.plus[b].push(a);
        }
    }
    let _ = counter.tick(view.nodes.len() as u64 + d.len() as u64);
    (view, active)
}

/// Source of pivot choices: draws from the remaining weighted nodes.
pub trait PivotChooser {
    fn pick(&mut self, sampler: &WeightedSampler) -> usize;
}

impl<R: Rng> PivotChooser for R {
    fn pick(&mut self, sampler: &WeightedSampler) -> usize {
        sampler.sample(self).expect("pivot loop runs only while nodes remain")
    }
}

/// Runs the pivot loop on the contracted view; returns the clusters as node lists.
pub fn pivot_view(view: &ContractedView, chooser: &mut dyn PivotChooser, counter: &mut StepCounter) -> Vec<Vec<usize>> {
    let k = view.len();
    if k == 0 {
        return Vec::new();
    }
    let mut sampler = WeightedSampler::from_integers(&view.weight).expect("weights are positive");
    let mut alive = vec![true; k];
    let mut lists = view.lists.clone();
    let mut in_minus = Flags::new(k);
    let mut out = Vec::new();
    while !sampler.is_empty() {
        let v = chooser.pick(&sampler);
        let g = view.group[v];
        let mut t = vec![v];
        alive[v] = false;
        sampler.remove(v);
        for &w in &view.plus[v] {
            if alive[w] {
                alive[w] = false;
                sampler.remove(w);
                t.push(w);
            }
        }
        in_minus.clear();
        for &w in &view.minus[v] {
            in_minus.mark(w);
        }
        let old = std::mem::take(&mut lists[g]);
        let _ = counter.tick((1 + view.plus[v].len() + view.minus[v].len() + old.len()) as u64);
        for w in old {
            if !alive[w] {
                continue;
            }
            if in_minus.contains(w) {
                lists[g].push(w);
            } else {
                alive[w] = false;
                sampler.remove(w);
                t.push(w);
            }
        }
        out.push(t);
    }
    out
}

/// Pivot on a representation. Inactive clusters are untouched and cores never
/// split; returns the new clustering and the vertices whose label changed.
pub fn pivot_cluster_with(
    rep: &ClusterRepresentation,
    chooser: &mut dyn PivotChooser,
    counter: &mut StepCounter,
) -> (Clustering, Vec<VertexId>) {
    let (view, _active) = contract(rep, counter);
    let groups = pivot_view(&view, chooser, counter);
    let mut c = rep.clustering().clone();
    let mut claimed = Flags::new(c.capacity() + view.len() + 1);
    for g in 0..view.lists.len() {
        if view.core[g].is_some() {
            claimed.mark(view.clusters[g]);
        }
    }
    let mut moves = Vec::new();
    for t in &groups {
        let core = t.iter().find_map(|&i| match view.nodes[i] {
            Node::Core { cluster, .. } => Some(cluster),
            Node::Vertex(_) => None,
        });
        let pivot_cluster = view.clusters[view.group[t[0]]];
        let label = match core {
            Some(cid) => cid,
            None if !claimed.contains(pivot_cluster) => {
                claimed.mark(pivot_cluster);
                pivot_cluster
            }
            None => {
                let fresh = c.new_cluster();
                claimed.grow(fresh + 1);
                claimed.mark(fresh);
                fresh
            }
        };
        for &i in t {
            if let Node::Vertex(v) = view.nodes[i] {
                if c.label(v) != label {
                    c.move_to(v, label);
                    moves.push(v);
                }
            }
        }
        let _ = counter.tick(t.len() as u64);
    }
    (c, moves)
}

pub fn pivot_cluster<R: Rng>(rep: &ClusterRepresentation, rng: &mut R, counter: &mut StepCounter) -> (Clustering, Vec<VertexId>) {
    pivot_cluster_with(rep, rng, counter)
}

/// Pivot followed by the budgeted symmetric difference; keeps `rep` when the
/// result is not cheaper or the budget trips.
pub fn pivot<R: Rng>(rep: &ClusterRepresentation, rng: &mut R) -> ClusterRepresentation {
    let mut counter = StepCounter::unlimited();
    let (c, moves) = pivot_cluster(rep, rng, &mut counter);
    match symmetric_difference_update(rep, c, &moves) {
        SymDiff::Updated(r) => r,
        SymDiff::Unchanged => rep.clone(),
    }
}

/// Best of `r` independent pivot runs.
pub fn pivot_repeat<R: Rng>(rep: &ClusterRepresentation, r: usize, rng: &mut R) -> ClusterRepresentation {
    let mut best = rep.clone();
    for _ in 0..r {
        best = best.best_of(pivot(rep, rng));
    }
    best
}

/// Textbook pivot visiting vertices in `order`.
pub fn classic_pivot_order(g: &Graph, order: &[VertexId]) -> Clustering {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    for &v in order {
        if label[v] != usize::MAX {
            continue;
        }
        label[v] = v;
        for &w in g.neighbors(v) {
            if label[w] == usize::MAX {
                label[w] = v;
            }
        }
    }
    Clustering::from_labels(&label)
}

/// Textbook pivot with a uniformly random order.
pub fn classic_pivot<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Clustering {
    let mut order: Vec<VertexId> = (0..g.n()).collect();
    order.shuffle(rng);
    classic_pivot_order(g, &order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::violation;
    use crate::sampling::RngStream;

    #[test]
    fn contract_examples() {
        let empty = ClusterRepresentation::empty(4);
        let mut counter = StepCounter::unlimited();
        assert!(contract(&empty, &mut counter).0.is_empty());

        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let (view, _) = contract(&ClusterRepresentation::singletons(&g), &mut counter);
        assert_eq!(view.nodes, vec![Node::Vertex(0), Node::Vertex(1)]);
        assert_eq!(view.weight, vec![1, 1]);

        // 5-clique cluster plus one outside vertex joined to x = 2
        let mut edges = vec![(2, 5)];
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b));
            }
        }
        let g = Graph::from_edges(6, edges).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&[0, 0, 0, 0, 0, 1])).unwrap();
        let (view, _) = contract(&rep, &mut counter);
        let g0 = view.group[view.nodes.iter().position(|&x| x == Node::Vertex(2)).unwrap()];
        let nodes: Vec<(Node, u64)> = view.lists[g0].iter().map(|&i| (view.nodes[i], view.weight[i])).collect();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0], (Node::Vertex(2), 1));
        assert!(matches!(nodes[1], (Node::Core { cluster: 0, .. }, 4)));
    }

    #[test]
    fn nothing_active_means_identity() {
        let mut edges = Vec::new();
        for a in 0..4 {
            for b in a + 1..4 {
                edges.push((a, b));
            }
        }
        let g = Graph::from_edges(4, edges).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::one_cluster(4)).unwrap();
        let mut rng = RngStream::new(3, 0);
        let (c, moves) = pivot_cluster(&rep, &mut rng, &mut StepCounter::unlimited());
        assert!(moves.is_empty());
        assert!(c.same_partition(rep.clustering()));
    }

    #[test]
    fn classic_pivot_extremes() {
        let mut rng = RngStream::new(5, 0);
        assert_eq!(classic_pivot(&Graph::new(4), &mut rng).cluster_count(), 4);
        let mut edges = Vec::new();
        for a in 0..5 {
            for b in a + 1..5 {
                edges.push((a, b));
            }
        }
        let k5 = Graph::from_edges(5, edges).unwrap();
        assert_eq!(classic_pivot_order(&k5, &[3, 1, 0, 2, 4]).cluster_count(), 1);
    }

    #[test]
    fn pivot_output_matches_cost_oracle() {
        // K4 minus one edge
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let rep = ClusterRepresentation::singletons(&g);
        for seed in 0..50 {
            let mut rng = RngStream::new(seed, 0);
            let mut counter = StepCounter::unlimited();
            let (c, moves) = pivot_cluster(&rep, &mut rng, &mut counter);
            let out = crate::representation::symmetric_difference(&rep, c.clone(), &moves, &mut counter).unwrap();
            assert_eq!(out.violations().sorted(), violation(&g, &c).unwrap());
        }
    }
}
