use std::collections::HashMap;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Largest instance handled by partition enumeration.
pub const ENUMERATION_MAX_N: usize = 12;
/// Largest instance (or connected component) handled at all.
pub const DP_MAX_N: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    PartitionEnumeration,
    SubsetDp,
}

fn masks(g: &Graph) -> Vec<u32> {
    (0..g.n()).map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | 1 << w)).collect()
}

/// Depth-first enumeration of set partitions with incremental cost and pruning.
pub fn opt_by_enumeration(g: &Graph) -> Result<(usize, Clustering)> {
    let n = g.n();
    if n > ENUMERATION_MAX_N {
        return Err(Error::TooLarge { n, max: ENUMERATION_MAX_N });
    }
    let adj = masks(g);
    struct Search<'a> {
        adj: &'a [u32],
        blocks: Vec<u32>,
        label: Vec<usize>,
        best: usize,
        best_label: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, assigned: u32, cost: usize) {
            if cost >= self.best {
                return;
            }
            if i == self.adj.len() {
                self.best = cost;
                self.best_label.clone_from(&self.label);
                return;
            }
            let a = self.adj[i];
            for b in 0..=self.blocks.len() {
                let block = self.blocks.get(b).copied().unwrap_or(0);
                let delta = (block & !a).count_ones() + (assigned & !block & a).count_ones();
                if b == self.blocks.len() {
                    self.blocks.push(0);
                }
                self.blocks[b] |= 1 << i;
                self.label[i] = b;
                self.go(i + 1, assigned | 1 << i, cost + delta as usize);
                self.blocks[b] &= !(1 << i);
                if self.blocks[b] == 0 {
                    self.blocks.pop();
                }
            }
        }
    }
    let mut s = Search { adj: &adj, blocks: Vec::new(), label: vec![0; n], best: usize::MAX, best_label: vec![0; n] };
    s.go(0, 0, 0);
    Ok((s.best, Clustering::from_labels(&s.best_label)))
}

/// Dynamic programming over subsets, O(3ⁿ).
pub fn opt_by_subset_dp(g: &Graph) -> Result<(usize, Clustering)> {
    let n = g.n();
    if n > DP_MAX_N {
        return Err(Error::TooLarge { n, max: DP_MAX_N });
    }
    if n == 0 {
        return Ok((0, Clustering::singletons(0)));
    }
    let adj = masks(g);
    let full = (1usize << n) - 1;
    // doubled cost of S as a cluster: 2·missing(S) + cut(S)
    let mut internal = vec![0u32; full + 1];
    let mut degsum = vec![0u32; full + 1];
    let mut cost2 = vec![0u32; full + 1];
    for s in 1..=full {
        let v = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        internal[s] = internal[rest] + (adj[v] as usize & rest).count_ones();
        degsum[s] = degsum[rest] + adj[v].count_ones();
        let k = s.count_ones();
        let pairs = k * (k - 1) / 2;
        cost2[s] = 2 * (pairs - internal[s]) + (degsum[s] - 2 * internal[s]);
    }
    let mut dp = vec![u32::MAX; full + 1];
    let mut choice = vec![0usize; full + 1];
    dp[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let s = sub | low;
            let c = cost2[s] + dp[mask ^ s];
            if c < dp[mask] {
                dp[mask] = c;
                choice[mask] = s;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut label = vec![0; n];
    let mut mask = full;
    let mut k = 0;
    while mask != 0 {
        let s = choice[mask];
        for (v, l) in label.iter_mut().enumerate() {
            if s >> v & 1 == 1 {
                *l = k;
            }
        }
        k += 1;
        mask ^= s;
    }
    debug_assert_eq!(dp[full] % 2, 0);
    Ok((dp[full] as usize / 2, Clustering::from_labels(&label)))
}

/// Exact optimum; enumeration up to 12 vertices, subset DP up to 16.
pub fn brute_force_opt(g: &Graph) -> Result<(usize, Clustering)> {
    if g.n() <= ENUMERATION_MAX_N {
        opt_by_enumeration(g)
    } else {
        opt_by_subset_dp(g)
    }
}

/// Exact optimum solved per connected component (no optimal cluster spans two
/// components), so sparse graphs of any size work if components have ≤ 16 vertices.
pub fn opt_by_components(g: &Graph) -> Result<(usize, Clustering)> {
    let mut label = vec![0; g.n()];
    let mut next = 0;
    let mut total = 0;
    g.try_for_each_component(|comp| {
        // A connected component on at most three vertices is optimally one
        // cluster; this matches the DP witness.
        if comp.len() <= 3 {
            let k = comp.len();
            let inside: usize = comp.iter().map(|&v| g.degree(v)).sum::<usize>() / 2;
            total += k * (k - 1) / 2 - inside;
            for &v in comp {
                label[v] = next;
            }
            next += 1;
            return Ok(());
        }
        if comp.len() > DP_MAX_N {
            return Err(Error::TooLarge { n: comp.len(), max: DP_MAX_N });
        }
        let sub = g.induced(comp);
        let (cost, c) = opt_by_subset_dp(&sub)?;
        total += cost;
        let base = next;
        for (i, &v) in comp.iter().enumerate() {
            label[v] = base + c.label(i);
            next = next.max(label[v] + 1);
        }
        Ok(())
    })?;
    Ok((total, Clustering::from_labels(&label)))
}

/// Memoizing exact oracle keyed by canonical adjacency.
#[derive(Debug, Default)]
pub struct OptOracle {
    cache: HashMap<Vec<u64>, (usize, Vec<usize>)>,
    hits: u64,
}

impl OptOracle {
    pub fn new() -> OptOracle {
        OptOracle::default()
    }

    pub fn solve(&mut self, g: &Graph) -> Result<(usize, Clustering)> {
        let key = g.canonical_key();
        if let Some((cost, labels)) = self.cache.get(&key) {
            self.hits += 1;
            return Ok((*cost, Clustering::from_labels(labels)));
        }
        let (cost, c) = if g.n() <= DP_MAX_N { brute_force_opt(g)? } else { opt_by_components(g)? };
        self.cache.insert(key, (cost, c.labels()));
        Ok((cost, c))
    }

    pub fn cost(&mut self, g: &Graph) -> Result<usize> {
        Ok(self.solve(g)?.0)
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }
}

/// All set partitions of `0..n` as label vectors (restricted growth strings).
pub fn all_partitions(n: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut label = vec![0; n];
    fn go(i: usize, blocks: usize, label: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == label.len() {
            out.push(label.clone());
            return;
        }
        for b in 0..=blocks {
            label[i] = b;
            go(i + 1, blocks.max(b + 1), label, out);
        }
    }
    go(0, 0, &mut label, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representation::clustering_cost;

    #[test]
    fn small_examples() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        for f in [opt_by_enumeration, opt_by_subset_dp] {
            assert_eq!(f(&tri).unwrap().0, 0);
            assert_eq!(f(&tri).unwrap().1.cluster_count(), 1);
            assert_eq!(f(&path).unwrap().0, 1);
            assert_eq!(f(&star).unwrap().0, 2);
        }
        assert_eq!(all_partitions(3).len(), 5);
        assert_eq!(all_partitions(4).len(), 15);
    }

    #[test]
    fn witness_has_reported_cost() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap();
        for f in [opt_by_enumeration, opt_by_subset_dp, opt_by_components] {
            let (cost, c) = f(&g).unwrap();
            assert_eq!(cost, 1);
            assert_eq!(clustering_cost(&g, &c).unwrap(), cost);
        }
    }

    #[test]
    fn too_large_is_refused() {
        assert!(matches!(opt_by_enumeration(&Graph::new(13)), Err(Error::TooLarge { .. })));
        assert!(matches!(brute_force_opt(&Graph::new(17)), Err(Error::TooLarge { .. })));
    }
}
