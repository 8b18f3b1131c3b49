use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;

use super::{CoverWeights, FractionalSolution, LpParams};
use crate::graph::VertexId;
use crate::local_search::{log2_sq, ImprovementMode, SAMPLES_PER_GAMMA};
use crate::marks::Flags;
use crate::precluster::Preclustering;
use crate::sampling::bernoulli_indices;

const TOL: f64 = 1e-9;

/// Pairwise disjoint sets, each meant to carry weight 1/p(F).
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub sets: Vec<Vec<VertexId>>,
    /// p(F), the probability mass the family covers.
    pub mass: f64,
}

impl Family {
    pub fn weight(&self) -> f64 {
        1.0 / self.mass
    }

    pub fn to_solution(&self, n: usize) -> FractionalSolution {
        let support = self.sets.iter().map(|s| (s.clone(), self.weight())).collect();
        FractionalSolution::from_support(n, support).expect("family sets are valid")
    }
}

/// Searches K(v) ⊆ C ⊆ N_cand(v) minimizing cover(C) − ρ·p̂(C): forward and
/// backward greedy scans, each polished by add/remove/swap moves. Returns C when cover(C) ≤ ρ·p̂(C) (exact mode), or when a
/// sampled upper bound on cover(C) is at most ρ·p̂(C) + γ²·Σ_{u∈C} d(u)
/// (sampled mode, wrong with probability ≤ e^{−t}).
///
/// Masked vertices (p̂ = 0) never join C; a masked K(v) yields nothing.
#[allow(clippy::too_many_arguments)]
pub fn find_small_ratio_cluster<R: Rng + ?Sized>(
    v: VertexId,
    p_hat: &[f64],
    ratio: f64,
    pre: &mut Preclustering,
    cw: &CoverWeights,
    params: &LpParams,
    rng: &mut R,
) -> Option<Vec<VertexId>> {
    let base: Vec<VertexId> = pre.atom_of(v).to_vec();
    let p_base: f64 = base.iter().map(|&x| p_hat[x]).sum();
    if p_base <= 0.0 {
        return None;
    }
    let mut pool: Vec<VertexId> =
        pre.candidates(v, rng).into_iter().filter(|u| p_hat[*u] > 0.0 && !base.contains(u)).collect();
    pool.sort_unstable();
    pool.dedup();
    let rep = pre.rep();
    let obj = Objective::new(&base, &pool, p_hat, ratio, cw, rep);
    let forward = obj.refine(obj.greedy_forward());
    let backward = obj.refine(obj.greedy_backward());
    let in_c = if obj.value(&backward) < obj.value(&forward) - TOL { backward } else { forward };
    let f = obj.value(&in_c);

    let mut c = base;
    c.extend((0..pool.len()).filter(|&i| in_c[i]).map(|i| pool[i]));
    c.sort_unstable();
    let p_c: f64 = c.iter().map(|&x| p_hat[x]).sum();
    debug_assert!((f - (cw.cover(&c, rep) - ratio * p_c)).abs() < 1e-6 * (1.0 + f.abs()));
    let accept = match params.mode {
        ImprovementMode::Exact => cw.cover(&c, rep) <= ratio * p_c + TOL,
        ImprovementMode::Sampled => {
            let slack = params.gamma * params.gamma * c.iter().map(|&u| cw.degree(u)).sum::<usize>() as f64;
            sampled_cover_upper(&c, cw, pre, params.samples_t, rng) <= ratio * p_c + slack + TOL
        }
    };
    accept.then_some(c)
}

/// f(C) = cover(C) − ρ·p̂(C) for K(v) ⊆ C ⊆ K(v) ∪ pool, with the pool's
/// adjacency cached so every move is integer bookkeeping.
struct Objective {
    own: Vec<f64>,
    adj: Vec<Vec<bool>>,
    base_links: Vec<i64>,
    base_len: i64,
    base_f: f64,
}

impl Objective {
    fn new(
        base: &[VertexId],
        pool: &[VertexId],
        p_hat: &[f64],
        ratio: f64,
        cw: &CoverWeights,
        rep: &crate::representation::ClusterRepresentation,
    ) -> Objective {
        let own = pool.iter().map(|&u| cw.own2(u) as f64 / 2.0 - ratio * p_hat[u]).collect();
        let adj = pool.iter().map(|&a| pool.iter().map(|&b| a != b && rep.is_edge(a, b)).collect()).collect();
        let base_links = pool.iter().map(|&u| base.iter().filter(|&&b| rep.is_edge(u, b)).count() as i64).collect();
        let p_base: f64 = base.iter().map(|&x| p_hat[x]).sum();
        Objective { own, adj, base_links, base_len: base.len() as i64, base_f: cw.cover(base, rep) - ratio * p_base }
    }

    fn len(&self) -> usize {
        self.own.len()
    }

    fn links(&self, i: usize, in_c: &[bool]) -> i64 {
        self.base_links[i] + (0..self.len()).filter(|&j| in_c[j] && self.adj[i][j]).count() as i64
    }

    fn size(&self, in_c: &[bool]) -> i64 {
        self.base_len + in_c.iter().filter(|&&b| b).count() as i64
    }

    fn value(&self, in_c: &[bool]) -> f64 {
        let mut f = self.base_f;
        let mut cur = vec![false; self.len()];
        for i in (0..self.len()).filter(|&i| in_c[i]) {
            f += self.own[i] + (self.size(&cur) - 2 * self.links(i, &cur)) as f64;
            cur[i] = true;
        }
        f
    }

    /// Change in f from toggling i.
    fn delta(&self, i: usize, in_c: &[bool], size: i64) -> f64 {
        let l = self.links(i, in_c);
        if in_c[i] {
            -(self.own[i] + (size - 1 - 2 * l) as f64)
        } else {
            self.own[i] + (size - 2 * l) as f64
        }
    }

    /// Adds the cheapest vertex until the pool is spent; keeps the best prefix.
    fn greedy_forward(&self) -> Vec<bool> {
        let mut in_c = vec![false; self.len()];
        let mut path = Vec::with_capacity(self.len());
        let (mut f, mut best_f, mut best_k) = (self.base_f, self.base_f, 0);
        for _ in 0..self.len() {
            let size = self.size(&in_c);
            let (i, d) = (0..self.len())
                .filter(|&i| !in_c[i])
                .map(|i| (i, self.delta(i, &in_c, size)))
                .fold((usize::MAX, f64::INFINITY), |b, x| if x.1 < b.1 - TOL { x } else { b });
            f += d;
            in_c[i] = true;
            path.push(i);
            if f < best_f - TOL {
                best_f = f;
                best_k = path.len();
            }
        }
        let mut out = vec![false; self.len()];
        path[..best_k].iter().for_each(|&i| out[i] = true);
        out
    }

    /// Starts from the whole pool and drops the most helpful vertex each step;
    /// keeps the best set seen.
    fn greedy_backward(&self) -> Vec<bool> {
        let mut in_c = vec![true; self.len()];
        let mut f = self.value(&in_c);
        let (mut best_f, mut best) = (f, in_c.clone());
        for _ in 0..self.len() {
            let size = self.size(&in_c);
            let (i, d) = (0..self.len())
                .filter(|&i| in_c[i])
                .map(|i| (i, self.delta(i, &in_c, size)))
                .fold((usize::MAX, f64::INFINITY), |b, x| if x.1 < b.1 - TOL { x } else { b });
            f += d;
            in_c[i] = false;
            if f < best_f - TOL {
                best_f = f;
                best.clone_from(&in_c);
            }
        }
        best
    }

    /// Best-improvement add, remove and swap moves until none strictly helps.
    fn refine(&self, mut in_c: Vec<bool>) -> Vec<bool> {
        let p = self.len();
        for _ in 0..4 * p * p + 1 {
            let size = self.size(&in_c);
            let deltas: Vec<f64> = (0..p).map(|i| self.delta(i, &in_c, size)).collect();
            let mut best: (Option<(usize, Option<usize>)>, f64) = (None, -TOL);
            for i in 0..p {
                if deltas[i] < best.1 {
                    best = (Some((i, None)), deltas[i]);
                }
            }
            // swap: remove i ∈ C, then add j ∉ C
            for i in (0..p).filter(|&i| in_c[i]) {
                for j in (0..p).filter(|&j| !in_c[j]) {
                    let links_j = self.links(j, &in_c) - self.adj[i][j] as i64;
                    let d = deltas[i] + self.own[j] + (size - 1 - 2 * links_j) as f64;
                    if d < best.1 {
                        best = (Some((i, Some(j))), d);
                    }
                }
            }
            match best.0 {
                Some((i, j)) => {
                    in_c[i] = !in_c[i];
                    if let Some(j) = j {
                        in_c[j] = true;
                    }
                }
                None => break,
            }
        }
        in_c
    }
}

/// Upper confidence bound on cover(C): the per-vertex part exactly, the pair
/// part from ⌈8t⌉ uniform pairs plus a Hoeffding margin (exceeded with
/// probability ≤ e^{−t}). Exact when C has few pairs.
fn sampled_cover_upper<R: Rng + ?Sized>(c: &[VertexId], cw: &CoverWeights, pre: &Preclustering, t: f64, rng: &mut R) -> f64 {
    let rep = pre.rep();
    let k = (SAMPLES_PER_GAMMA * t).ceil().max(1.0) as usize;
    let pairs = c.len() * c.len().saturating_sub(1) / 2;
    if pairs <= k {
        return cw.cover(c, rep);
    }
    let own: f64 = c.iter().map(|&u| cw.own2(u) as f64 / 2.0).sum();
    let mut sum = 0.0;
    for _ in 0..k {
        let ab = sample(rng, c.len(), 2);
        sum += if rep.is_edge(c[ab.index(0)], c[ab.index(1)]) { -1.0 } else { 1.0 };
    }
    // terms lie in [−1, 1]
    let mean = sum / k as f64;
    own + pairs as f64 * (mean + (2.0 * t / k as f64).sqrt())
}

/// Builds a disjoint family F with p(F) > γ whose sets each satisfy
/// cover(S) ≤ (1+6γ)R·p(S) (whole atoms) or the small-ratio test at
/// (1+3γ)R. Atoms whose vertices carry almost no weight are masked first.
/// Returns `None` when the sampling loop ends below γ; the caller raises R.
pub fn find_disjoint_family<R: Rng + ?Sized>(
    pre: &mut Preclustering,
    cw: &CoverWeights,
    p: &[f64],
    r: f64,
    params: &LpParams,
    rng: &mut R,
) -> Option<Family> {
    let n = pre.n();
    let gamma = params.gamma;
    let total = cw.total() as f64;
    let mut p_hat = p.to_vec();
    let mut fam = Family { sets: Vec::new(), mass: 0.0 };
    let mut seen = Flags::new(n);
    for v in 0..n {
        if p[v] <= 0.0 || seen.contains(v) {
            continue;
        }
        let k: Vec<VertexId> = pre.atom_of(v).to_vec();
        k.iter().for_each(|&x| seen.mark(x));
        let pk: f64 = k.iter().map(|&x| p[x]).sum();
        if cw.cover(&k, pre.rep()) <= (1.0 + 6.0 * gamma) * r * pk + TOL {
            k.iter().for_each(|&x| p_hat[x] = 0.0);
            fam.mass += pk;
            fam.sets.push(k);
        } else if k.iter().any(|&x| cw.d_cross(x) > 0 && p[x] <= gamma * cw.d_cross(x) as f64 / (4.0 * total)) {
            k.iter().for_each(|&x| p_hat[x] = 0.0);
        }
    }
    if fam.mass > gamma {
        return Some(fam);
    }

    let mut groups: BTreeMap<usize, Vec<VertexId>> = BTreeMap::new();
    for v in (0..n).filter(|&v| p_hat[v] > 0.0) {
        groups.entry(cw.degree(v)).or_default().push(v);
    }
    let nn = n as f64;
    let iterations = (params.loop_factor * nn).ceil() as usize;
    let mut picks = Vec::new();
    for _ in 0..iterations {
        for (deg, vs) in &groups {
            picks.clear();
            bernoulli_indices(vs.len(), 1.0 / (nn * log2_sq(*deg)), rng, &mut picks);
            for &i in &picks {
                let v = vs[i];
                if p_hat[v] <= 0.0 {
                    continue;
                }
                if let Some(c) = find_small_ratio_cluster(v, &p_hat, (1.0 + 3.0 * gamma) * r, pre, cw, params, rng) {
                    fam.mass += c.iter().map(|&x| p_hat[x]).sum::<f64>();
                    c.iter().for_each(|&x| p_hat[x] = 0.0);
                    fam.sets.push(c);
                    if fam.mass > gamma {
                        return Some(fam);
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Clustering;
    use crate::graph::Graph;
    use crate::precluster::AdmParams;
    use crate::representation::ClusterRepresentation;
    use crate::steps::StepCounter;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pre_of(g: &Graph) -> Preclustering {
        Preclustering::build(&ClusterRepresentation::singletons(g), AdmParams::default(), &mut StepCounter::unlimited())
    }

    fn uniform_p(cw: &CoverWeights) -> Vec<f64> {
        (0..cw.d_cross.len()).map(|v| cw.d_cross(v) as f64 / cw.total() as f64).collect()
    }

    #[test]
    fn atom_with_good_ratio_is_returned() {
        // atom {0,1,2} with one violated edge to 3: cover 1.5, p(K) = ½
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&[0, 0, 0, 1])).unwrap();
        let mut pre = Preclustering::from_cleaned(rep, AdmParams::default(), &mut StepCounter::unlimited());
        let cw = CoverWeights::from_pre(&pre);
        let p = uniform_p(&cw);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = find_small_ratio_cluster(0, &p, 3.0, &mut pre, &cw, &LpParams::default(), &mut rng);
        assert_eq!(c, Some(vec![0, 1, 2]));
    }

    #[test]
    fn no_positive_weight_means_no_cluster() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut pre = pre_of(&g);
        let cw = CoverWeights::from_pre(&pre);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = vec![0.0; 3];
        assert_eq!(find_small_ratio_cluster(1, &zero, 1e9, &mut pre, &cw, &LpParams::default(), &mut rng), None);
    }

    /// min over K(v) ⊆ C ⊆ K(v) ∪ pool of cover(C) − ρ·p̂(C), by enumeration.
    fn brute_min(v: VertexId, p: &[f64], ratio: f64, pre: &mut Preclustering, cw: &CoverWeights) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = pre.atom_of(v).to_vec();
        let pool: Vec<VertexId> = pre.candidates(v, &mut rng).into_iter().filter(|u| p[*u] > 0.0 && !base.contains(u)).collect();
        assert!(pool.len() <= 16);
        (0u32..1 << pool.len())
            .map(|mask| {
                let mut c = base.clone();
                c.extend((0..pool.len()).filter(|&i| mask >> i & 1 == 1).map(|i| pool[i]));
                cw.cover(&c, pre.rep()) - ratio * c.iter().map(|&x| p[x]).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn planted_cheap_cluster_is_found() {
        // clique {0..5} minus one edge, with a pendant path hanging off it
        let mut edges: Vec<(usize, usize)> = (0..6).flat_map(|a| (a + 1..6).map(move |b| (a, b))).filter(|&e| e != (0, 1)).collect();
        edges.extend([(5, 6), (6, 7), (7, 8)]);
        let g = Graph::from_edges(9, edges).unwrap();
        let mut pre = pre_of(&g);
        let cw = CoverWeights::from_pre(&pre);
        let p = uniform_p(&cw);
        // cover of the planted cluster over its weight, with a little room
        let planted: Vec<VertexId> = (0..6).collect();
        let ratio = 1.05 * cw.cover(&planted, pre.rep()) / planted.iter().map(|&x| p[x]).sum::<f64>();
        assert!(brute_min(2, &p, ratio, &mut pre, &cw) <= 0.0);
        let mut hits = 0;
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if let Some(c) = find_small_ratio_cluster(2, &p, ratio, &mut pre, &cw, &LpParams::default(), &mut rng) {
                assert!(cw.cover(&c, pre.rep()) <= ratio * c.iter().map(|&x| p[x]).sum::<f64>() + 1e-9);
                hits += 1;
            }
        }
        assert!(hits >= 500, "found in {hits}/1000");
    }

    #[test]
    fn greedy_agrees_with_enumeration_on_small_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut exists, mut found) = (0, 0);
        for _ in 0..60 {
            let g = Graph::gnp(9, 0.5, &mut rng);
            let mut pre = pre_of(&g);
            let cw = CoverWeights::from_pre(&pre);
            if cw.total() == 0 {
                continue;
            }
            let p = uniform_p(&cw);
            let r = 2.4 * cw.total() as f64 / 2.0;
            for v in 0..9 {
                if p[v] == 0.0 {
                    continue;
                }
                let best = brute_min(v, &p, r, &mut pre, &cw);
                let got = find_small_ratio_cluster(v, &p, r, &mut pre, &cw, &LpParams::default(), &mut rng);
                if best <= 1e-9 {
                    exists += 1;
                    found += got.is_some() as usize;
                } else {
                    assert!(got.is_none(), "exact mode never returns a bad cluster");
                }
            }
        }
        assert!(exists > 0 && found * 10 >= exists * 9, "greedy found {found} of {exists}");
    }

    #[test]
    fn clique_union_family_is_every_atom() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let rep = ClusterRepresentation::from_graph(&g, Clustering::from_labels(&[0, 0, 0, 1, 1, 1])).unwrap();
        let mut pre = Preclustering::from_cleaned(rep, AdmParams::default(), &mut StepCounter::unlimited());
        let cw = CoverWeights::from_pre(&pre);
        let p = uniform_p(&cw);
        // cover(OPT) = 2·1.5
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fam = find_disjoint_family(&mut pre, &cw, &p, 3.0, &LpParams::default(), &mut rng).unwrap();
        assert_eq!(fam.sets, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        assert!((fam.mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_target_fails() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut pre = pre_of(&g);
        let cw = CoverWeights::from_pre(&pre);
        let mut p = vec![0.0; 4];
        p[1] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(find_disjoint_family(&mut pre, &cw, &p, 0.1, &LpParams::default(), &mut rng).is_none());
    }

    #[test]
    fn families_are_disjoint_and_heavy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = LpParams::default();
        for _ in 0..40 {
            let g = Graph::gnp(11, 0.4, &mut rng);
            let mut pre = pre_of(&g);
            let cw = CoverWeights::from_pre(&pre);
            if cw.total() == 0 {
                continue;
            }
            let p = uniform_p(&cw);
            let r = 3.0 * cw.total() as f64 / 2.0;
            let Some(fam) = find_disjoint_family(&mut pre, &cw, &p, r, &params, &mut rng) else { continue };
            assert!(fam.mass > params.gamma);
            let mut seen = vec![false; 11];
            for s in &fam.sets {
                for &v in s {
                    assert!(!seen[v]);
                    seen[v] = true;
                }
            }
            let mass: f64 = fam.sets.iter().flatten().map(|&v| p[v]).sum();
            assert!((mass - fam.mass).abs() < 1e-9);
        }
    }
}
