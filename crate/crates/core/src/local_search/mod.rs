//! Local search for ε-good local optima over a preclustering, the
//! iterated-flipping wrapper and the randomized three-way pivot.

mod flipping;
mod generate;
mod search;
mod triple;

pub use flipping::{iterated_flipping, iterated_flipping_rep, FlipParams};
pub use generate::{generate_cluster, sampled_improvement, CandidateCluster, ImprovementMode, SAMPLES_PER_GAMMA};
pub use search::{local_search, local_search_rep, Abort, LsOutcome, LsParams};
pub use triple::{
    budget_identity, join_quarters, separation, triangle_check, triple_pivot_order, triple_pivot_random,
    triple_pivot_with, TriangleReport, TripleBudget, B_MINUS, B_PLUS,
};

use crate::clustering::{ClusterId, Clustering};
use crate::graph::{Graph, VertexId};
use crate::marks::Flags;
use crate::representation::ClusterRepresentation;

/// Edge queries shared by explicit graphs and representations.
pub trait Adjacency {
    fn vertex_count(&self) -> usize;
    fn is_edge(&self, u: VertexId, v: VertexId) -> bool;
    fn neighbor_list(&self, v: VertexId) -> Vec<VertexId>;
}

impl Adjacency for Graph {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    fn is_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.has_edge(u, v)
    }

    fn neighbor_list(&self, v: VertexId) -> Vec<VertexId> {
        self.neighbors(v).to_vec()
    }
}

impl Adjacency for ClusterRepresentation {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    fn is_edge(&self, u: VertexId, v: VertexId) -> bool {
        ClusterRepresentation::is_edge(self, u, v)
    }

    fn neighbor_list(&self, v: VertexId) -> Vec<VertexId> {
        self.neighbors(v)
    }
}

/// w(u,v) = 1 + β·#{recorded clusterings separating u and v} on edges; every
/// non-edge weighs 1.
#[derive(Clone, Debug)]
pub struct EdgeWeights {
    beta: f64,
    layers: Vec<Vec<ClusterId>>,
}

impl Default for EdgeWeights {
    fn default() -> Self {
        EdgeWeights::unit()
    }
}

impl EdgeWeights {
    pub const BETA: f64 = 0.5;

    pub fn unit() -> EdgeWeights {
        EdgeWeights { beta: Self::BETA, layers: Vec::new() }
    }

    pub fn with_beta(beta: f64) -> EdgeWeights {
        EdgeWeights { beta, layers: Vec::new() }
    }

    /// Adds a penalty layer for the edges `c` cuts.
    pub fn push(&mut self, c: &Clustering) {
        self.layers.push(c.labels());
    }

    pub fn penalized(&self, c: &Clustering) -> EdgeWeights {
        let mut w = self.clone();
        w.push(c);
        w
    }

    pub fn layers(&self) -> usize {
        self.layers.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_unit(&self) -> bool {
        self.layers.is_empty()
    }

    #[inline]
    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> f64 {
        let cut = self.layers.iter().filter(|l| l[u] != l[v]).count();
        1.0 + self.beta * cut as f64
    }

    pub fn max_weight(&self) -> f64 {
        1.0 + self.beta * self.layers.len() as f64
    }

    /// Affinity of a pair: +w on edges, −1 on non-edges. Joining the pair
    /// lowers the cost by exactly this amount.
    #[inline]
    pub fn affinity(&self, edge: bool, u: VertexId, v: VertexId) -> f64 {
        if edge {
            self.edge_weight(u, v)
        } else {
            -1.0
        }
    }
}

/// cost(C) − cost(C + K) under `w`, exact.
pub fn local_improvement<A: Adjacency + ?Sized>(c: &Clustering, k: &[VertexId], adj: &A, w: &EdgeWeights) -> f64 {
    let mut in_k = Flags::new(c.n());
    k.iter().for_each(|&x| in_k.mark(x));
    let mut imp = 0.0;
    for (i, &x) in k.iter().enumerate() {
        for &y in &k[i + 1..] {
            if !c.same_cluster(x, y) {
                imp += w.affinity(adj.is_edge(x, y), x, y);
            }
        }
        for &y in c.cluster_of(x) {
            if !in_k.contains(y) {
                imp -= w.affinity(adj.is_edge(x, y), x, y);
            }
        }
    }
    imp
}

/// Weighted disagreement count of `c` on `g`; O(m + Σ|C|²).
pub fn weighted_cost(g: &Graph, c: &Clustering, w: &EdgeWeights) -> f64 {
    let mut cost: f64 = g.edges().filter(|p| !c.same_cluster(p.u, p.v)).map(|p| w.edge_weight(p.u, p.v)).sum();
    for id in c.cluster_ids() {
        let ms = c.members(id);
        for (i, &a) in ms.iter().enumerate() {
            cost += ms[i + 1..].iter().filter(|&&b| !g.has_edge(a, b)).count() as f64;
        }
    }
    cost
}

/// Σ over the given clusters of the clamped improvement of inserting each.
pub fn epsilon_goodness(g: &Graph, c: &Clustering, clusters: &[Vec<VertexId>]) -> f64 {
    let w = EdgeWeights::unit();
    clusters.iter().map(|k| local_improvement(c, k, g, &w).max(0.0)).sum()
}

/// Slack K in the certificate: returned local optima satisfy the ε-good
/// inequality at K·ε. Measured worst case on 100 random graphs with n ≤ 12 is
/// 0.4·ε|D| for one local search and 0 after iterated flipping.
pub const EPS_GOOD_CONSTANT: f64 = 2.0;

/// Whether `c` is an ε-good local optimum with respect to a representation of
/// size `d_size`, measured against `opt_clusters`.
pub fn epsilon_good_check(g: &Graph, c: &Clustering, opt_clusters: &[Vec<VertexId>], eps: f64, d_size: usize) -> bool {
    epsilon_goodness(g, c, opt_clusters) <= eps * d_size as f64 + 1e-9
}

/// (max(1, log₂ x))².
#[inline]
pub(crate) fn log2_sq(x: usize) -> f64 {
    let l = (x.max(1) as f64).log2().max(1.0);
    l * l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::clustering_cost;

    fn clique_halves() -> (Graph, Clustering) {
        let g = Graph::from_edges(6, (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b)))).unwrap();
        let c = Clustering::from_labels(&[0, 0, 0, 1, 1, 1]);
        (g, c)
    }

    #[test]
    fn existing_cluster_improves_nothing() {
        let (g, c) = clique_halves();
        assert_eq!(local_improvement(&c, &[0, 1, 2], &g, &EdgeWeights::unit()), 0.0);
    }

    #[test]
    fn merging_halves_gains_the_cut() {
        let (g, c) = clique_halves();
        let imp = local_improvement(&c, &[0, 1, 2, 3, 4, 5], &g, &EdgeWeights::unit());
        let after = Clustering::one_cluster(6);
        let want = clustering_cost(&g, &c).unwrap() as f64 - clustering_cost(&g, &after).unwrap() as f64;
        assert_eq!(imp, want);
        assert_eq!(imp, 9.0);
    }

    #[test]
    fn isolating_a_well_placed_vertex_costs() {
        let (g, c) = clique_halves();
        assert!(local_improvement(&c, &[4], &g, &EdgeWeights::unit()) <= 0.0);
    }

    #[test]
    fn penalty_layers_raise_cut_edges() {
        let mut w = EdgeWeights::unit();
        w.push(&Clustering::from_labels(&[0, 1, 1]));
        w.push(&Clustering::from_labels(&[0, 1, 2]));
        assert_eq!(w.edge_weight(0, 1), 2.0);
        assert_eq!(w.edge_weight(1, 2), 1.5);
        assert_eq!(w.affinity(false, 0, 1), -1.0);
    }

    #[test]
    fn optimum_is_good_for_any_eps() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4), (2, 3)]).unwrap();
        let (_, opt) = crate::oracle::brute_force_opt(&g).unwrap();
        let parts = opt.partition();
        assert!(epsilon_good_check(&g, &opt, &parts, 0.0, 1));
    }
}
