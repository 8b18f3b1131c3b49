use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::FractionalSolution;
use crate::clustering::Clustering;
use crate::graph::VertexId;
use crate::marks::Flags;
use crate::representation::ClusterRepresentation;

/// c in k_S = ⌊(n^c / z_S)·ln(1/p_S)⌋; only the order of k values matters.
pub const ROUNDING_EXPONENT: i32 = 3;

const TOL: f64 = 1e-12;

/// Every set draws k_S = ⌊(n³/z_S)·ln(1/p_S)⌋ with p_S uniform in (0, 1];
/// each vertex takes the least k over its sets, and equal k values share a
/// cluster. Uncovered vertices stay alone.
pub fn cluster_based_rounding<R: Rng + ?Sized>(z: &FractionalSolution, rng: &mut R) -> Clustering {
    let n = z.n();
    let scale = (n.max(2) as f64).powi(ROUNDING_EXPONENT);
    let mut k: Vec<Option<f64>> = vec![None; n];
    for (s, w) in z.support() {
        let p = 1.0 - rng.gen::<f64>();
        let ks = (scale / w * (1.0 / p).ln()).floor();
        for &v in s {
            if k[v].is_none_or(|x| ks < x) {
                k[v] = Some(ks);
            }
        }
    }
    let mut groups: BTreeMap<u64, Vec<VertexId>> = BTreeMap::new();
    let mut clusters = Vec::new();
    for v in 0..n {
        match k[v] {
            Some(x) => groups.entry(x.to_bits()).or_default().push(v),
            None => clusters.push(vec![v]),
        }
    }
    clusters.extend(groups.into_values());
    Clustering::from_clusters(n, &clusters).expect("every vertex is placed once")
}

/// Output of [`pivot_based_rounding`].
#[derive(Clone, Debug)]
pub struct Rounded {
    pub clustering: Clustering,
    /// Disagreements of `clustering`.
    pub cost: usize,
    /// The running cost passed |D| and the input clustering was returned.
    pub aborted: bool,
}

/// Pivot rounding of z. Seen from pivot u, z is normalized so Σ_{S∋u} z_S = 1
/// and x_uv = 1 − Σ_{S∋u,v} z_S. Open neighbours with x_uv ≤ 1/3 join, open
/// non-neighbours join independently with probability 1 − x_uv, and then a
/// set S ∋ u drawn with probability z_S adds its open neighbours of u.
///
/// Once the disagreements fixed so far exceed |D| of `rep`, rounding stops and
/// the clustering of `rep` is returned.
pub fn pivot_based_rounding<R: Rng + ?Sized>(z: &FractionalSolution, rep: &ClusterRepresentation, rng: &mut R) -> Rounded {
    let n = rep.n();
    assert_eq!(z.n(), n, "solution and representation disagree on n");
    let support = z.support();
    let mut sets_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut tot = vec![0.0; n];
    for (i, (s, w)) in support.iter().enumerate() {
        for &v in s {
            sets_of[v].push(i);
            tot[v] += w;
        }
    }
    let budget = rep.cost();
    let mut order: Vec<VertexId> = (0..n).collect();
    order.shuffle(rng);
    let mut open = Flags::new(n);
    (0..n).for_each(|v| open.mark(v));
    let mut shared = vec![0.0; n];
    let mut touched: Vec<VertexId> = Vec::new();
    let mut is_nbr = Flags::new(n);
    let mut in_c = Flags::new(n);
    let mut scratch = Flags::new(n);
    let mut nbrs = Vec::new();
    let mut clusters: Vec<Vec<VertexId>> = Vec::new();
    let mut cost = 0usize;

    for &u in &order {
        if !open.contains(u) {
            continue;
        }
        touched.clear();
        for &si in &sets_of[u] {
            let (s, w) = &support[si];
            for &v in s {
                if v != u && open.contains(v) {
                    if shared[v] == 0.0 {
                        touched.push(v);
                    }
                    shared[v] += w / tot[u];
                }
            }
        }
        touched.sort_unstable();
        nbrs.clear();
        rep.neighbors_into(u, &mut scratch, &mut nbrs);
        nbrs.sort_unstable();
        is_nbr.clear();
        nbrs.iter().for_each(|&v| is_nbr.mark(v));
        in_c.clear();
        in_c.mark(u);
        let mut c = vec![u];
        for &v in &nbrs {
            if open.contains(v) && 1.0 - shared[v] <= 1.0 / 3.0 + TOL {
                in_c.mark(v);
                c.push(v);
            }
        }
        for &v in &touched {
            if !is_nbr.contains(v) && rng.gen::<f64>() < shared[v] {
                in_c.mark(v);
                c.push(v);
            }
        }
        if tot[u] > 0.0 {
            let mut r = rng.gen::<f64>() * tot[u];
            let mut pick = *sets_of[u].last().expect("covered vertex has a set");
            for &si in &sets_of[u] {
                if r < support[si].1 {
                    pick = si;
                    break;
                }
                r -= support[si].1;
            }
            for &v in &support[pick].0 {
                if open.contains(v) && is_nbr.contains(v) && !in_c.contains(v) {
                    in_c.mark(v);
                    c.push(v);
                }
            }
        }
        touched.iter().for_each(|&v| shared[v] = 0.0);
        c.iter().for_each(|&v| open.unset(v));

        // disagreements between C and the still-open vertices, and inside C
        let mut internal2 = 0usize;
        for &x in &c {
            nbrs.clear();
            rep.neighbors_into(x, &mut scratch, &mut nbrs);
            for &y in &nbrs {
                if in_c.contains(y) {
                    internal2 += 1;
                } else if open.contains(y) {
                    cost += 1;
                }
            }
        }
        cost += c.len() * (c.len() - 1) / 2 - internal2 / 2;
        if cost > budget {
            return Rounded { clustering: rep.clustering().clone(), cost: budget, aborted: true };
        }
        clusters.push(c);
    }
    let clustering = Clustering::from_clusters(n, &clusters).expect("pivot clusters partition V");
    Rounded { clustering, cost, aborted: false }
}
