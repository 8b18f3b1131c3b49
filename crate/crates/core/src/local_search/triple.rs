use rand::seq::SliceRandom;
use rand::Rng;

use super::Adjacency;
use crate::clustering::Clustering;
use crate::graph::VertexId;
use crate::marks::Flags;

/// Number of the three clusterings separating u and v.
#[inline]
pub fn separation(cs: [&Clustering; 3], u: VertexId, v: VertexId) -> u8 {
    cs.iter().filter(|c| !c.same_cluster(u, v)).count() as u8
}

/// Budget of an edge at separation d: (0, 0, 1, 3).
pub const B_PLUS: [u64; 4] = [0, 0, 1, 3];
/// Budget of a non-edge at separation d: (3, 2, 1, 0).
pub const B_MINUS: [u64; 4] = [3, 2, 1, 0];

/// Join probability in quarters, so that exact arithmetic stays integral.
#[inline]
pub fn join_quarters(edge: bool, d: u8) -> u64 {
    match (edge, d) {
        (true, 0 | 1) => 4,
        (true, _) => 1,
        (false, 0 | 1) => 4,
        (false, 2) => 3,
        (false, _) => 0,
    }
}

/// Σb⁺ over edges and Σb⁻ over non-edges for three clusterings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TripleBudget {
    pub edges: u64,
    pub non_edges: u64,
}

impl TripleBudget {
    /// O(n²) scan over all pairs.
    pub fn compute<A: Adjacency + ?Sized>(cs: [&Clustering; 3], adj: &A) -> TripleBudget {
        let n = adj.vertex_count();
        let mut b = TripleBudget::default();
        for u in 0..n {
            for v in u + 1..n {
                let d = separation(cs, u, v) as usize;
                if adj.is_edge(u, v) {
                    b.edges += B_PLUS[d];
                } else {
                    b.non_edges += B_MINUS[d];
                }
            }
        }
        b
    }

    pub fn total(&self) -> u64 {
        self.edges + self.non_edges
    }
}

/// Both sides of the budget bound: the per-pair budget sum and, computed
/// independently, Σᵢ|non-edges inside Cᵢ| + Σ_{i<j}|edges cut by both Cᵢ and Cⱼ|.
pub fn budget_identity<A: Adjacency + ?Sized>(cs: [&Clustering; 3], adj: &A) -> (u64, u64) {
    let lhs = TripleBudget::compute(cs, adj).total();
    let n = adj.vertex_count();
    let mut rhs = 0u64;
    for u in 0..n {
        for v in u + 1..n {
            if adj.is_edge(u, v) {
                for (i, j) in [(0, 1), (0, 2), (1, 2)] {
                    if !cs[i].same_cluster(u, v) && !cs[j].same_cluster(u, v) {
                        rhs += 1;
                    }
                }
            } else {
                rhs += cs.iter().filter(|c| c.same_cluster(u, v)).count() as u64;
            }
        }
    }
    (lhs, rhs)
}

/// Runs the three-way pivot over `vertices` in the given pivot order; vertices
/// outside the list are never touched. Returns the clusters formed.
pub fn triple_pivot_order<A: Adjacency + ?Sized, R: Rng + ?Sized>(
    cs: [&Clustering; 3],
    adj: &A,
    order: &[VertexId],
    rng: &mut R,
) -> Vec<Vec<VertexId>> {
    let n = adj.vertex_count();
    let mut open = Flags::new(n);
    order.iter().for_each(|&v| open.mark(v));
    let mut seen = Flags::new(n);
    let mut out = Vec::new();
    let mut cand = Vec::new();
    for &u in order {
        if !open.contains(u) {
            continue;
        }
        open.unset(u);
        seen.clear();
        cand.clear();
        let mut push = |w: VertexId, cand: &mut Vec<VertexId>| {
            if open.contains(w) && !seen.contains(w) {
                seen.mark(w);
                cand.push(w);
            }
        };
        for w in adj.neighbor_list(u) {
            push(w, &mut cand);
        }
        for c in cs {
            for &w in c.cluster_of(u) {
                push(w, &mut cand);
            }
        }
        cand.sort_unstable();
        let mut t = vec![u];
        for &v in &cand {
            let q = join_quarters(adj.is_edge(u, v), separation(cs, u, v));
            let join = match q {
                4 => true,
                0 => false,
                q => rng.gen_range(0..4) < q,
            };
            if join {
                open.unset(v);
                t.push(v);
            }
        }
        t.sort_unstable();
        out.push(t);
    }
    out
}

/// Three-way pivot restricted to `vertices`, in uniformly random order.
pub fn triple_pivot_with<A: Adjacency + ?Sized, R: Rng + ?Sized>(
    cs: [&Clustering; 3],
    adj: &A,
    vertices: &[VertexId],
    rng: &mut R,
) -> Vec<Vec<VertexId>> {
    let mut order = vertices.to_vec();
    order.shuffle(rng);
    triple_pivot_order(cs, adj, &order, rng)
}

/// Randomized pivot on three clusterings: an edge joins the pivot surely at
/// separation ≤ 1 and with probability 1/4 otherwise; a non-edge joins surely
/// at separation ≤ 1, with probability 3/4 at 2, never at 3.
pub fn triple_pivot_random<A: Adjacency + ?Sized, R: Rng + ?Sized>(
    c1: &Clustering,
    c2: &Clustering,
    c3: &Clustering,
    adj: &A,
    rng: &mut R,
) -> Clustering {
    let n = adj.vertex_count();
    let all: Vec<VertexId> = (0..n).collect();
    let clusters = triple_pivot_with([c1, c2, c3], adj, &all, rng);
    Clustering::from_clusters(n, &clusters).expect("pivot output partitions the vertex set")
}

/// Outcome of the closed-form triangle enumeration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TriangleReport {
    pub triangles: usize,
    pub triangle_violations: usize,
    /// Configurations where cost = 1.5·lp exactly.
    pub tight: usize,
    pub pairs: usize,
    pub pair_violations: usize,
    /// Largest cost/lp over triangles with lp > 0, as (cost·16, lp·16).
    pub worst: (u64, u64),
}

impl TriangleReport {
    pub fn ok(&self) -> bool {
        self.triangle_violations == 0 && self.pair_violations == 0
    }
}

fn realizable(d: [u8; 3]) -> bool {
    // separation patterns one clustering can induce on pairs (uv, uw, vw)
    const PATTERNS: [[u8; 3]; 5] = [[0, 0, 0], [1, 1, 1], [0, 1, 1], [1, 0, 1], [1, 1, 0]];
    PATTERNS.iter().any(|a| {
        PATTERNS.iter().any(|b| PATTERNS.iter().any(|c| (0..3).all(|i| a[i] + b[i] + c[i] == d[i])))
    })
}

/// Exhaustive check that the pivot's expected cost is at most 1.5 times the
/// budget it charges, over every triangle with metric separations and every
/// edge/non-edge labelling, plus the pairs decided directly by the pivot.
/// All quantities are integers in sixteenths. With `only_realizable`, the
/// separations must come from three actual clusterings.
pub fn triangle_check(only_realizable: bool) -> TriangleReport {
    let mut r = TriangleReport::default();
    let budget = |edge: bool, d: u8| if edge { B_PLUS[d as usize] } else { B_MINUS[d as usize] };
    for edge in [true, false] {
        for d in 0..4u8 {
            r.pairs += 1;
            let q = join_quarters(edge, d);
            let cost4 = if edge { 4 - q } else { q };
            if 2 * cost4 > 3 * 4 * budget(edge, d) {
                r.pair_violations += 1;
            }
        }
    }
    // pairs indexed 0 = uv, 1 = uw, 2 = vw
    for signs in 0..8u8 {
        let s = [signs & 1 != 0, signs & 2 != 0, signs & 4 != 0];
        for code in 0..64u8 {
            let d = [code & 3, (code >> 2) & 3, (code >> 4) & 3];
            if d[0] > d[1] + d[2] || d[1] > d[0] + d[2] || d[2] > d[0] + d[1] {
                continue;
            }
            if only_realizable && !realizable(d) {
                continue;
            }
            r.triangles += 1;
            // (pivot pair a, pivot pair b, opposite pair)
            let (mut cost, mut lp) = (0u64, 0u64);
            for (a, b, o) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
                let pa = join_quarters(s[a], d[a]);
                let pb = join_quarters(s[b], d[b]);
                cost += if s[o] { pa * (4 - pb) + pb * (4 - pa) } else { pa * pb };
                lp += (16 - (4 - pa) * (4 - pb)) * budget(s[o], d[o]);
            }
            if 2 * cost > 3 * lp {
                r.triangle_violations += 1;
            }
            if 2 * cost == 3 * lp && lp > 0 {
                r.tight += 1;
            }
            if lp > 0 && cost * r.worst.1 > r.worst.0 * lp || r.worst == (0, 0) {
                r.worst = (cost, lp);
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triangle_bound_holds_everywhere() {
        let full = triangle_check(false);
        assert!(full.ok(), "{full:?}");
        let real = triangle_check(true);
        assert!(real.ok());
        assert_eq!(real.triangles, full.triangles);
        assert!(full.tight > 0);
    }

    #[test]
    fn hand_checked_tight_case() {
        // all edges, d(uv) = d(uw) = 1, d(vw) = 2: cost 1.5, lp 1
        let s = [true; 3];
        let d = [1u8, 1, 2];
        let (mut cost, mut lp) = (0, 0);
        for (a, b, o) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let pa = join_quarters(s[a], d[a]);
            let pb = join_quarters(s[b], d[b]);
            cost += pa * (4 - pb) + pb * (4 - pa);
            lp += (16 - (4 - pa) * (4 - pb)) * B_PLUS[d[o] as usize];
        }
        assert_eq!((cost, lp), (24, 16));
    }

    #[test]
    fn identical_perfect_clusterings_are_reproduced() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let c = Clustering::from_labels(&[0, 0, 0, 1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let out = triple_pivot_random(&c, &c, &c, &g, &mut rng);
            assert!(out.same_partition(&c));
        }
    }

    #[test]
    fn budget_sides_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let g = Graph::gnp(9, 0.5, &mut rng);
            let cs: Vec<Clustering> = (0..3)
                .map(|_| Clustering::from_labels(&(0..9).map(|_| rng.gen_range(0..3)).collect::<Vec<_>>()))
                .collect();
            let (l, r) = budget_identity([&cs[0], &cs[1], &cs[2]], &g);
            assert_eq!(l, r);
        }
    }
}
