//! Covering cluster LP over a preclustering: multiplicative weights driven by
//! a disjoint-family oracle, followed by cluster-based or pivot-based rounding.
//!
//! With d_cross(v) the number of violated pairs at v, cover(S) = cost(S) +
//! d_cross(S) where cost(S) = ½·(edges leaving S) + (non-edges inside S). The
//! covering LP minimizes Σ z_S·cover(S) subject to Σ_{S∋v} z_S ≥ 1.

mod family;
mod mwu;
mod rounding;

pub use family::{find_disjoint_family, find_small_ratio_cluster, Family};
pub use mwu::{mwu_solve, LpOutcome, LpParams};
pub use rounding::{cluster_based_rounding, pivot_based_rounding, Rounded, ROUNDING_EXPONENT};

use std::fmt::Write;

use crate::clustering::Clustering;
use crate::error::{parse_err, Error, Result};
use crate::graph::VertexId;
use crate::marks::Flags;
use crate::precluster::Preclustering;
use crate::representation::ClusterRepresentation;

/// Per-vertex degree and violated degree of one representation, cached for
/// repeated cover evaluations.
#[derive(Clone, Debug)]
pub struct CoverWeights {
    degree: Vec<usize>,
    d_cross: Vec<usize>,
    total: usize,
}

impl CoverWeights {
    pub fn new(rep: &ClusterRepresentation) -> CoverWeights {
        let n = rep.n();
        let degree: Vec<usize> = (0..n).map(|v| rep.degree(v)).collect();
        let d_cross: Vec<usize> = (0..n).map(|v| rep.violations().degree(v)).collect();
        let total = d_cross.iter().sum();
        CoverWeights { degree, d_cross, total }
    }

    pub fn from_pre(pre: &Preclustering) -> CoverWeights {
        CoverWeights::new(pre.rep())
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.degree[v]
    }

    #[inline]
    pub fn d_cross(&self, v: VertexId) -> usize {
        self.d_cross[v]
    }

    /// d_cross(V) = 2|D|.
    pub fn total(&self) -> usize {
        self.total
    }

    /// 2·(½d(v) + d_cross(v)): the part of 2·cover(S) owed by v alone.
    #[inline]
    pub(crate) fn own2(&self, v: VertexId) -> i64 {
        (self.degree[v] + 2 * self.d_cross[v]) as i64
    }

    /// Twice cover(S): Σ_v (d(v) + 2d_cross(v)) + Σ_{pairs in S} 2(1 − 2[edge]).
    pub fn cover2(&self, s: &[VertexId], rep: &ClusterRepresentation) -> i64 {
        let mut twice: i64 = s.iter().map(|&v| self.own2(v)).sum();
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                twice += if rep.is_edge(a, b) { -2 } else { 2 };
            }
        }
        twice
    }

    pub fn cover(&self, s: &[VertexId], rep: &ClusterRepresentation) -> f64 {
        self.cover2(s, rep) as f64 / 2.0
    }
}

/// cover(S) on `rep`, exact.
pub fn cover_cost(s: &[VertexId], rep: &ClusterRepresentation) -> f64 {
    let mut twice = 0i64;
    for &v in s {
        twice += (rep.degree(v) + 2 * rep.violations().degree(v)) as i64;
    }
    for (i, &a) in s.iter().enumerate() {
        for &b in &s[i + 1..] {
            twice += if rep.is_edge(a, b) { -2 } else { 2 };
        }
    }
    twice as f64 / 2.0
}

/// Weighted family of vertex sets; x_uv = 1 − Σ_{S ⊇ {u,v}} z_S.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    n: usize,
    support: Vec<(Vec<VertexId>, f64)>,
}

impl FractionalSolution {
    pub fn new(n: usize) -> FractionalSolution {
        FractionalSolution { n, support: Vec::new() }
    }

    /// Every cluster of `c` with weight 1.
    pub fn indicator(c: &Clustering) -> FractionalSolution {
        let support = c.cluster_ids().map(|id| (sorted(c.members(id)), 1.0)).collect();
        FractionalSolution { n: c.n(), support }
    }

    pub fn from_support(n: usize, support: Vec<(Vec<VertexId>, f64)>) -> Result<FractionalSolution> {
        let mut z = FractionalSolution::new(n);
        for (s, w) in support {
            z.push(s, w)?;
        }
        Ok(z)
    }

    /// Adds a set; it must be nonempty, duplicate-free and in range, with a
    /// positive finite weight.
    pub fn push(&mut self, set: Vec<VertexId>, z: f64) -> Result<()> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Argument(format!("support weight {z} is not positive")));
        }
        let set = sorted(&set);
        if set.is_empty() || set.windows(2).any(|w| w[0] == w[1]) || set.last().is_some_and(|&v| v >= self.n) {
            return Err(Error::Argument("support set must be nonempty, duplicate-free and in range".into()));
        }
        self.support.push((set, z));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[(Vec<VertexId>, f64)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Σ_{S∋v} z_S for every v.
    pub fn coverage(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for (s, z) in &self.support {
            s.iter().for_each(|&v| c[v] += z);
        }
        c
    }

    pub fn is_covering(&self, tol: f64) -> bool {
        self.coverage().iter().all(|&c| c >= 1.0 - tol)
    }

    /// Σ z_S·cover(S).
    pub fn objective(&self, rep: &ClusterRepresentation) -> f64 {
        let w = CoverWeights::new(rep);
        self.support.iter().map(|(s, z)| z * w.cover(s, rep)).sum()
    }

    /// Smallest support weight, or 0 when empty.
    pub fn min_weight(&self) -> f64 {
        self.support.iter().map(|p| p.1).reduce(f64::min).unwrap_or(0.0)
    }

    pub fn max_sets_per_vertex(&self) -> usize {
        let mut k = vec![0usize; self.n];
        for (s, _) in &self.support {
            s.iter().for_each(|&v| k[v] += 1);
        }
        k.into_iter().max().unwrap_or(0)
    }

    /// Support sets that contain part, but not all, of some cluster of `atoms`.
    pub fn splits(&self, atoms: &Clustering) -> usize {
        let mut inside = Flags::new(self.n);
        self.support
            .iter()
            .filter(|(s, _)| {
                inside.clear();
                s.iter().for_each(|&v| inside.mark(v));
                s.iter().any(|&v| atoms.cluster_of(v).iter().any(|&w| !inside.contains(w)))
            })
            .count()
    }

    /// Support sets meeting at least two non-singleton clusters of `atoms`.
    pub fn joins(&self, atoms: &Clustering) -> usize {
        self.support
            .iter()
            .filter(|(s, _)| {
                let mut ids: Vec<_> = s.iter().filter(|&&v| atoms.cluster_of(v).len() > 1).map(|&v| atoms.label(v)).collect();
                ids.sort_unstable();
                ids.dedup();
                ids.len() > 1
            })
            .count()
    }

    /// `n k`, then per set `z |S| v1 .. v|S|`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.support.len());
        for (set, z) in &self.support {
            let _ = write!(s, "{z} {}", set.len());
            for v in set {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<FractionalSolution> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, head) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let nums: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad integer {t:?}"))))
            .collect::<Result<_>>()?;
        let [n, k] = nums[..] else {
            return Err(parse_err(ln, "header must be `n k`"));
        };
        let mut z = FractionalSolution::new(n);
        for _ in 0..k {
            let (ln, line) = lines.next().ok_or_else(|| parse_err(ln, "missing support line"))?;
            let mut toks = line.split_whitespace();
            let w: f64 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(ln, "bad weight"))?;
            let len: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(ln, "bad set size"))?;
            let set: Vec<VertexId> = toks
                .map(|t| t.parse().map_err(|_| parse_err(ln, format!("bad vertex {t:?}"))))
                .collect::<Result<_>>()?;
            if set.len() != len {
                return Err(parse_err(ln, format!("expected {len} vertices, found {}", set.len())));
            }
            z.push(set, w).map_err(|e| parse_err(ln, e.to_string()))?;
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_err(ln, "trailing content"));
        }
        Ok(z)
    }
}

fn sorted(s: &[VertexId]) -> Vec<VertexId> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn brute_cover(g: &Graph, rep: &ClusterRepresentation, s: &[VertexId]) -> f64 {
        let inside = |v: VertexId| s.contains(&v);
        let cut = g.edges().filter(|p| inside(p.u) != inside(p.v)).count() as f64;
        let mut missing = 0.0;
        for (i, &a) in s.iter().enumerate() {
            missing += s[i + 1..].iter().filter(|&&b| !g.has_edge(a, b)).count() as f64;
        }
        let dc: usize = s.iter().map(|&v| rep.violations().degree(v)).sum();
        cut / 2.0 + missing + dc as f64
    }

    #[test]
    fn isolated_clique_costs_nothing() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&[0, 0, 0, 1, 1])).unwrap();
        assert_eq!(cover_cost(&[0, 1, 2], &rep), 0.0);
    }

    #[test]
    fn singleton_cover_is_half_degree_plus_cross() {
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let rep = ClusterRepresentation::singletons(&g);
        assert_eq!(cover_cost(&[0], &rep), 1.5 + 3.0);
        assert_eq!(cover_cost(&[0], &rep), brute_cover(&g, &rep, &[0]));
    }

    #[test]
    fn cover_matches_direct_count() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let g = Graph::gnp(9, 0.45, &mut rng);
            let labels: Vec<usize> = (0..9).map(|_| rng.gen_range(0..3)).collect();
            let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&labels)).unwrap();
            let w = CoverWeights::new(&rep);
            let s: Vec<VertexId> = (0..9).filter(|_| rng.gen_bool(0.5)).collect();
            let want = brute_cover(&g, &rep, &s);
            assert_eq!(cover_cost(&s, &rep), want);
            assert_eq!(w.cover(&s, &rep), want);
        }
    }

    #[test]
    fn planted_bisection_side() {
        // two triangles joined by one edge, clustered as the triangles
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        assert_eq!(cover_cost(&[0, 1, 2], &rep), 0.5 + 1.0);
        assert_eq!(cover_cost(&[0, 1, 2], &rep), brute_cover(&g, &rep, &[0, 1, 2]));
    }

    #[test]
    fn serialization_round_trips() {
        let z = FractionalSolution::from_support(5, vec![(vec![0, 2], 0.5), (vec![1, 3, 4], 1.0 / 3.0)]).unwrap();
        let text = z.serialize();
        assert!(text.starts_with("5 2\n0.5 2 0 2\n"));
        assert_eq!(FractionalSolution::parse(&text).unwrap(), z);
        assert!(FractionalSolution::parse("3 1\n1 2 0\n").is_err());
        assert!(FractionalSolution::parse("3 1\n0 1 0\n").is_err());
        assert!(FractionalSolution::parse("3 1\n1 1 5\n").is_err());
    }

    #[test]
    fn structure_reports() {
        let atoms = Clustering::from_labels(&[0, 0, 1, 1, 2]);
        let z = FractionalSolution::from_support(5, vec![(vec![0, 1, 2, 3], 1.0), (vec![2, 4], 0.5)]).unwrap();
        assert_eq!(z.joins(&atoms), 1);
        assert_eq!(z.splits(&atoms), 1);
        assert_eq!(z.max_sets_per_vertex(), 2);
        assert_eq!(z.min_weight(), 0.5);
        assert!(!z.is_covering(0.0));
    }
}
