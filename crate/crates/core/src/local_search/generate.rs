use std::collections::HashMap;

use rand::Rng;

use super::EdgeWeights;
use crate::clustering::{ClusterId, Clustering};
use crate::graph::VertexId;
use crate::marks::Flags;
use crate::precluster::Preclustering;
use crate::representation::ClusterRepresentation;
use crate::steps::{BudgetExceeded, StepCounter};

/// How candidate improvements are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ImprovementMode {
    #[default]
    Exact,
    /// Pair-sampling estimate, lowered by a Hoeffding margin so that it
    /// overshoots the exact value with probability at most e^{−γ}.
    Sampled,
}

/// Pair samples drawn per unit of γ in sampled mode.
pub const SAMPLES_PER_GAMMA: f64 = 8.0;

const TOL: f64 = 1e-9;

/// A proposed cluster K(pivot) ⊆ members ⊆ N_cand(pivot).
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateCluster {
    pub pivot: VertexId,
    /// Sorted.
    pub members: Vec<VertexId>,
    pub est_improvement: f64,
    pub exact_improvement: Option<f64>,
}

struct Greedy<'a> {
    state: &'a Clustering,
    weights: &'a EdgeWeights,
    all: Vec<VertexId>,
    gain: Vec<f64>,
    in_s: Vec<bool>,
    imp: f64,
}

impl Greedy<'_> {
    fn aff(&self, rep: &ClusterRepresentation, a: VertexId, b: VertexId) -> f64 {
        self.weights.affinity(rep.is_edge(a, b), a, b)
    }

    /// Shifts every other gain after member `i` enters (`sign` = 1) or leaves
    /// (`sign` = −1) the candidate.
    fn shift(&mut self, rep: &ClusterRepresentation, i: usize, sign: f64, counter: &mut StepCounter) -> Result<(), BudgetExceeded> {
        let x = self.all[i];
        counter.tick(self.all.len() as u64)?;
        for j in 0..self.all.len() {
            if j == i {
                continue;
            }
            let u = self.all[j];
            let factor = if self.state.same_cluster(u, x) { 2.0 } else { 1.0 };
            self.gain[j] += sign * factor * self.aff(rep, u, x);
        }
        Ok(())
    }

    fn add(&mut self, rep: &ClusterRepresentation, i: usize, counter: &mut StepCounter) -> Result<(), BudgetExceeded> {
        self.imp += self.gain[i];
        self.in_s[i] = true;
        self.shift(rep, i, 1.0, counter)
    }

    fn remove(&mut self, rep: &ClusterRepresentation, i: usize, counter: &mut StepCounter) -> Result<(), BudgetExceeded> {
        self.in_s[i] = false;
        self.imp -= self.gain[i];
        self.shift(rep, i, -1.0, counter)
    }
}

/// Builds a candidate around `pivot` against the working clustering `state`.
///
/// Members are added greedily by marginal gain starting from K(pivot); the
/// best prefix is kept, then refined by single removals and additions while
/// they strictly help. Every pair of non-atom members is admissible.
#[allow(clippy::too_many_arguments)]
pub fn generate_cluster<R: Rng + ?Sized>(
    pivot: VertexId,
    state: &Clustering,
    pre: &mut Preclustering,
    weights: &EdgeWeights,
    mode: ImprovementMode,
    gamma: f64,
    rng: &mut R,
    counter: &mut StepCounter,
) -> Result<CandidateCluster, BudgetExceeded> {
    let base: Vec<VertexId> = pre.atom_of(pivot).to_vec();
    let mut sorted_base = base.clone();
    sorted_base.sort_unstable();
    let pool = pre.candidates(pivot, rng);
    let n = pre.n();
    let mut seen = Flags::new(n);
    base.iter().for_each(|&x| seen.mark(x));
    let mut all = base.clone();
    for u in pool {
        if !seen.contains(u) {
            seen.mark(u);
            all.push(u);
        }
    }
    let nb = base.len();
    counter.tick(all.len() as u64)?;

    let rep = pre.rep();
    let mut gain = Vec::with_capacity(all.len());
    for &u in &all {
        let mut g = 0.0;
        for &z in state.cluster_of(u) {
            if z != u {
                g -= weights.affinity(rep.is_edge(u, z), u, z);
            }
        }
        counter.tick(state.cluster_of(u).len() as u64)?;
        gain.push(g);
    }
    let mut gr = Greedy { state, weights, gain, in_s: vec![false; all.len()], imp: 0.0, all };
    for i in 0..nb {
        gr.add(pre.rep(), i, counter)?;
    }

    // greedy order over the admissible extras, keeping the best prefix
    let mut alive = vec![true; gr.all.len()];
    let mut order = Vec::new();
    let (mut best_imp, mut best_len) = (gr.imp, 0usize);
    loop {
        let pick = (nb..gr.all.len())
            .filter(|&j| alive[j] && !gr.in_s[j])
            .max_by(|&a, &b| gr.gain[a].total_cmp(&gr.gain[b]).then(gr.all[b].cmp(&gr.all[a])));
        let Some(i) = pick else { break };
        gr.add(pre.rep(), i, counter)?;
        order.push(i);
        if gr.imp > best_imp + TOL {
            best_imp = gr.imp;
            best_len = order.len();
        }
        let u = gr.all[i];
        for j in nb..gr.all.len() {
            if alive[j] && !gr.in_s[j] && !pre.check_admissible(u, gr.all[j], rng) {
                alive[j] = false;
            }
        }
    }
    for &i in order[best_len..].iter().rev() {
        gr.remove(pre.rep(), i, counter)?;
    }

    // single-step refinement
    for _ in 0..2 * gr.all.len() {
        let worst = (nb..gr.all.len()).filter(|&j| gr.in_s[j]).min_by(|&a, &b| gr.gain[a].total_cmp(&gr.gain[b]));
        if let Some(i) = worst.filter(|&i| gr.gain[i] < -TOL) {
            gr.remove(pre.rep(), i, counter)?;
            continue;
        }
        let mut best: Option<usize> = None;
        for j in nb..gr.all.len() {
            if gr.in_s[j] || gr.gain[j] <= TOL || best.is_some_and(|b| gr.gain[b] >= gr.gain[j]) {
                continue;
            }
            let u = gr.all[j];
            let members: Vec<VertexId> = (nb..gr.all.len()).filter(|&k| gr.in_s[k]).map(|k| gr.all[k]).collect();
            if members.iter().all(|&x| pre.check_admissible(u, x, rng)) {
                best = Some(j);
            }
        }
        match best {
            Some(j) => gr.add(pre.rep(), j, counter)?,
            None => break,
        }
    }

    let mut members: Vec<VertexId> = (0..gr.all.len()).filter(|&j| gr.in_s[j]).map(|j| gr.all[j]).collect();
    members.sort_unstable();
    let exact = gr.imp;
    debug_assert!(
        (exact - super::local_improvement(state, &members, pre.rep(), weights)).abs() < 1e-6,
        "incremental improvement drifted"
    );
    debug_assert!(base.iter().all(|x| members.binary_search(x).is_ok()));
    if cfg!(debug_assertions) {
        let extras: Vec<VertexId> = members.iter().copied().filter(|x| sorted_base.binary_search(x).is_err()).collect();
        for (i, &a) in extras.iter().enumerate() {
            debug_assert!(pre.is_singleton(a), "candidate splits an atom");
            for &b in &extras[i + 1..] {
                debug_assert!(pre.memo_verdict(a, b) == Some(true), "non-admissible co-membership {a} {b}");
            }
        }
    }
    let est = match mode {
        ImprovementMode::Exact => exact,
        ImprovementMode::Sampled => sampled_improvement(state, &members, pre.rep(), weights, gamma, rng, counter)?,
    };
    Ok(CandidateCluster { pivot, members, est_improvement: est, exact_improvement: Some(exact) })
}

/// Lower-confidence estimate of cost(C) − cost(C + S) from uniformly sampled
/// ordered pairs (x, y) with x ∈ S and y ∈ S ∪ C(x).
pub fn sampled_improvement<R: Rng + ?Sized>(
    state: &Clustering,
    s: &[VertexId],
    rep: &ClusterRepresentation,
    weights: &EdgeWeights,
    gamma: f64,
    rng: &mut R,
    counter: &mut StepCounter,
) -> Result<f64, BudgetExceeded> {
    if s.is_empty() {
        return Ok(0.0);
    }
    let mut in_s = Flags::new(state.n());
    s.iter().for_each(|&x| in_s.mark(x));
    let mut per_cluster: HashMap<ClusterId, usize> = HashMap::new();
    for &x in s {
        *per_cluster.entry(state.label(x)).or_default() += 1;
    }
    let mut cum = Vec::with_capacity(s.len());
    let mut total = 0usize;
    for &x in s {
        let id = state.label(x);
        total += s.len() - 1 + state.size(id) - per_cluster[&id];
        cum.push(total);
    }
    if total == 0 {
        return Ok(0.0);
    }
    let mut outside: HashMap<ClusterId, Vec<VertexId>> = HashMap::new();
    let k = (SAMPLES_PER_GAMMA * gamma.max(1.0)).ceil() as usize;
    counter.tick(k as u64)?;
    let mut sum = 0.0;
    for _ in 0..k {
        let r = rng.gen_range(0..total);
        let i = cum.partition_point(|&c| c <= r);
        let x = s[i];
        let j = r - if i == 0 { 0 } else { cum[i - 1] };
        if j < s.len() - 1 {
            let y = s[if j >= i { j + 1 } else { j }];
            if !state.same_cluster(x, y) {
                sum += 0.5 * weights.affinity(rep.is_edge(x, y), x, y);
            }
        } else {
            let list = outside
                .entry(state.label(x))
                .or_insert_with(|| state.cluster_of(x).iter().copied().filter(|&y| !in_s.contains(y)).collect());
            let y = list[j - (s.len() - 1)];
            sum -= weights.affinity(rep.is_edge(x, y), x, y);
        }
    }
    let mean = sum / k as f64;
    let range = 2.0 * weights.max_weight();
    let margin = range * (gamma.max(1.0) / (2.0 * k as f64)).sqrt();
    Ok(total as f64 * (mean - margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::precluster::AdmParams;
    use crate::representation::ClusterRepresentation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isolated_atom_yields_itself() {
        let mut edges: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        edges.push((5, 6));
        let g = Graph::from_edges(7, edges).unwrap();
        let c = Clustering::from_labels(&[0, 0, 0, 0, 0, 1, 2]);
        let rep = ClusterRepresentation::from_graph(&g, c).unwrap();
        let mut pre = Preclustering::build(&rep, AdmParams::default(), &mut StepCounter::unlimited());
        let state = pre.rep().clustering().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cand = generate_cluster(
            2,
            &state,
            &mut pre,
            &EdgeWeights::unit(),
            ImprovementMode::Exact,
            1.0,
            &mut rng,
            &mut StepCounter::unlimited(),
        )
        .unwrap();
        assert_eq!(cand.members, vec![0, 1, 2, 3, 4]);
        assert_eq!(cand.est_improvement, 0.0);
    }

    #[test]
    fn scattered_clique_is_gathered() {
        let g = Graph::from_edges(8, (0..8).flat_map(|a| (a + 1..8).map(move |b| (a, b)))).unwrap();
        let rep = ClusterRepresentation::singletons(&g);
        let mut pre = Preclustering::build(&rep, AdmParams::default(), &mut StepCounter::unlimited());
        let state = pre.rep().clustering().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cand = generate_cluster(
            0,
            &state,
            &mut pre,
            &EdgeWeights::unit(),
            ImprovementMode::Exact,
            1.0,
            &mut rng,
            &mut StepCounter::unlimited(),
        )
        .unwrap();
        assert_eq!(cand.members.len(), 8);
        assert_eq!(cand.exact_improvement, Some(28.0));
    }
}
