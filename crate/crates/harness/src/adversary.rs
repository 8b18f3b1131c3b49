use std::path::Path;

use anyhow::{ensure, Result};
use dyncc::engine::{read_stream, Engine, Update};
use dyncc::{Clustering, Graph, Pair, VertexId};
use rand::Rng;

/// Read access to the served clustering and nothing else. Adaptive
/// adversaries receive only this.
pub trait ClusteringView {
    fn n(&self) -> usize;
    fn same_cluster(&self, u: VertexId, v: VertexId) -> bool;
}

impl ClusteringView for Engine {
    fn n(&self) -> usize {
        Engine::n(self)
    }

    fn same_cluster(&self, u: VertexId, v: VertexId) -> bool {
        Engine::same_cluster(self, u, v)
    }
}

impl ClusteringView for Clustering {
    fn n(&self) -> usize {
        Clustering::n(self)
    }

    fn same_cluster(&self, u: VertexId, v: VertexId) -> bool {
        Clustering::same_cluster(self, u, v)
    }
}

/// A fixed update sequence on a starting graph and clustering.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub graph: Graph,
    pub initial: Clustering,
    pub updates: Vec<Update>,
    pub target: Option<Target>,
}

/// The update after which the served clustering is judged, with the known
/// optimum of the graph at that point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Target {
    pub update: u64,
    pub opt: usize,
}

/// n/3 disjoint 2-paths a–b–c, served as {a, b}, {c}; both edges of every
/// path are then deleted one by one. After update 2n/3 − 1 only the last
/// edge b–c is left, and a clustering that was not rebuilt since the last
/// path lost its first edge pays for it. That update is the target.
pub fn two_paths(n: usize) -> Result<Scenario> {
    ensure!(n > 0 && n % 3 == 0, "two-path scenario needs n divisible by 3, got {n}");
    let k = n / 3;
    let edges: Vec<(VertexId, VertexId)> = (0..k).flat_map(|i| [(3 * i, 3 * i + 1), (3 * i + 1, 3 * i + 2)]).collect();
    let graph = Graph::from_edges(n, edges.iter().copied())?;
    let labels: Vec<usize> = (0..n).map(|v| if v % 3 == 2 { v } else { v - v % 3 }).collect();
    Ok(Scenario {
        graph,
        initial: Clustering::from_labels(&labels),
        updates: edges.iter().map(|&(u, v)| Update::Delete(u, v)).collect(),
        target: Some(Target { update: 2 * k as u64 - 1, opt: 0 }),
    })
}

/// Oblivious random stream: G(n, p_edge) start, then `t` updates on uniform
/// pairs, annotated against the evolving graph, with a query every
/// `query_every` updates (0 for none).
pub fn random_stream<R: Rng + ?Sized>(
    n: usize,
    p_edge: f64,
    t: usize,
    query_every: usize,
    rng: &mut R,
) -> Result<(Graph, Vec<Update>)> {
    ensure!(n >= 2, "random stream needs at least 2 vertices");
    ensure!((0.0..=1.0).contains(&p_edge), "p_edge must lie in [0, 1]");
    let start = Graph::gnp(n, p_edge, rng);
    let mut g = start.clone();
    let mut ups = Vec::with_capacity(t + t / query_every.max(1));
    for i in 0..t {
        let u = rng.gen_range(0..n);
        let mut v = rng.gen_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        ups.push(if g.toggle(u, v) { Update::Insert(u, v) } else { Update::Delete(u, v) });
        if query_every > 0 && (i + 1) % query_every == 0 {
            ups.push(Update::Query);
        }
    }
    Ok((start, ups))
}

pub fn replay(graph: &Path, stream: &Path) -> Result<(Graph, Vec<Update>)> {
    Ok((Graph::read(graph)?, read_stream(stream)?))
}

/// Flips the pair that raises the served cost the most: an edge inside a
/// cluster or a non-edge across clusters, lowest (u, v) first. It tracks the
/// graph it has produced; of the engine it sees only the clustering.
#[derive(Clone, Debug)]
pub struct AdaptiveGreedy {
    graph: Graph,
}

impl AdaptiveGreedy {
    pub fn new(graph: Graph) -> AdaptiveGreedy {
        AdaptiveGreedy { graph }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Every flip changes the served cost by ±1. When none raises it the
    /// adversary issues a query and leaves the graph alone.
    pub fn next(&mut self, view: &dyn ClusteringView) -> Update {
        let n = view.n();
        for u in 0..n {
            for v in u + 1..n {
                let edge = self.graph.has_edge(u, v);
                if edge == view.same_cluster(u, v) {
                    self.graph.toggle(u, v);
                    return if edge { Update::Delete(u, v) } else { Update::Insert(u, v) };
                }
            }
        }
        Update::Query
    }
}

/// Cost change of flipping `p` under `c` on `g`.
pub fn flip_damage(g: &Graph, c: &dyn ClusteringView, p: Pair) -> i64 {
    if g.has_edge(p.u, p.v) == c.same_cluster(p.u, p.v) {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dyncc::clustering_cost;

    #[test]
    fn two_paths_of_six_has_four_deletions() {
        let s = two_paths(6).unwrap();
        assert_eq!(s.updates.len(), 4);
        assert_eq!(s.target, Some(Target { update: 3, opt: 0 }));
        assert_eq!(clustering_cost(&s.graph, &s.initial).unwrap(), 2);
        assert!(two_paths(7).is_err());
    }

    #[test]
    fn random_stream_annotations_match_the_graph() {
        let mut rng = dyncc::RngStream::new(3, 0);
        let (mut g, ups) = random_stream(8, 0.4, 100, 10, &mut rng).unwrap();
        assert_eq!(ups.iter().filter(|u| **u == Update::Query).count(), 10);
        for up in ups {
            match up {
                Update::Insert(u, v) => assert!(g.add_edge(u, v)),
                Update::Delete(u, v) => assert!(g.remove_edge(u, v)),
                _ => {}
            }
        }
    }

    #[test]
    fn greedy_picks_the_lowest_damaging_pair() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let mut a = AdaptiveGreedy::new(g.clone());
        let c = Clustering::from_labels(&[0, 0, 1, 1]);
        // (0,1) is an internal edge: deleting it is a new violation.
        assert_eq!(a.next(&c), Update::Delete(0, 1));
        assert_eq!(flip_damage(&g, &c, Pair::new(0, 2)), 1);
        assert_eq!(flip_damage(&g, &c, Pair::new(2, 3)), 1);
    }

    #[test]
    fn greedy_on_an_empty_graph() {
        let mut a = AdaptiveGreedy::new(Graph::new(5));
        let c = Clustering::singletons(5);
        // Every flip would insert a cross edge: +1. Lowest pair first.
        assert_eq!(a.next(&c), Update::Insert(0, 1));
        let mut a = AdaptiveGreedy::new(Graph::new(5));
        let c = Clustering::one_cluster(5);
        assert_eq!(a.next(&c), Update::Query);
        assert_eq!(a.graph().m(), 0);
    }

    #[test]
    fn greedy_is_a_function_of_what_it_sees() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let c = Clustering::from_labels(&[0, 0, 1, 1, 2, 2]);
        let run = || {
            let mut a = AdaptiveGreedy::new(g.clone());
            (0..10).map(|_| a.next(&c)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
