//! Seeded invariant suites behind `dyncc verify`.

use dyncc::local_search::triangle_check;
use dyncc::oracle::{opt_by_enumeration, opt_by_subset_dp};
use dyncc::pivot::pivot_cluster;
use dyncc::precluster::{clean, is_agreeing, CLEAN_AGREEMENT, CLEAN_INFLATION};
use dyncc::{clustering_cost, ClusterRepresentation, Clustering, Graph, RngStream, StepCounter};
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
}

impl SuiteResult {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// A random clustering with about `k` clusters.
pub fn random_clustering<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Clustering {
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k.max(1))).collect();
    Clustering::from_labels(&labels)
}

fn corpus(seed: u64, count: usize, sizes: std::ops::RangeInclusive<usize>) -> Vec<(Graph, RngStream)> {
    (0..count as u64)
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let n = rng.gen_range(sizes.clone());
            let p = [0.3, 0.5, 0.7][i as usize % 3];
            (Graph::gnp(n, p, &mut rng), rng)
        })
        .collect()
}

/// Partition enumeration and subset DP agree on the optimum.
pub fn oracle_agreement(seed: u64, count: usize) -> SuiteResult {
    let mut bad = 0;
    for (g, _) in corpus(seed, count, 1..=10) {
        let (a, ca) = opt_by_enumeration(&g).expect("n <= 10");
        let (b, cb) = opt_by_subset_dp(&g).expect("n <= 10");
        let witnesses = clustering_cost(&g, &ca).ok() == Some(a) && clustering_cost(&g, &cb).ok() == Some(b);
        bad += (a != b || !witnesses) as usize;
    }
    SuiteResult { name: "oracle enumeration = subset DP", checked: count, violations: bad }
}

/// |D| equals the recounted cost and serialization round-trips.
pub fn representation(seed: u64, count: usize) -> SuiteResult {
    let mut bad = 0;
    for (g, mut rng) in corpus(seed, count, 2..=30) {
        let c = random_clustering(g.n(), g.n() / 3 + 1, &mut rng);
        let rep = ClusterRepresentation::from_graph(&g, c.clone()).expect("sizes match");
        let round = ClusterRepresentation::parse(&rep.serialize()).map(|r| r.graph().canonical_key());
        bad += (rep.cost() != clustering_cost(&g, &c).expect("sizes match")
            || round.ok() != Some(g.canonical_key())
            || rep.graph().canonical_key() != g.canonical_key()) as usize;
    }
    SuiteResult { name: "representation cost and round trip", checked: count, violations: bad }
}

/// Clean output clusters are agreeing and the cost inflation is bounded.
pub fn clean_guarantees(seed: u64, count: usize) -> SuiteResult {
    let mut bad = 0;
    for (g, mut rng) in corpus(seed, count, 2..=40) {
        let c = random_clustering(g.n(), rng.gen_range(1..=4), &mut rng);
        let rep = ClusterRepresentation::from_graph(&g, c).expect("sizes match");
        let out = clean(&rep, &mut StepCounter::unlimited());
        let agreeing = out.clustering().partition().iter().filter(|k| k.len() > 1).all(|k| is_agreeing(k, &g, CLEAN_AGREEMENT));
        bad += (!agreeing || out.cost() > CLEAN_INFLATION * rep.cost()) as usize;
    }
    SuiteResult { name: "clean agreement and inflation", checked: count, violations: bad }
}

/// Pivot's output is a partition whose recounted cost matches.
pub fn pivot_output(seed: u64, count: usize) -> SuiteResult {
    let mut bad = 0;
    for (g, mut rng) in corpus(seed, count, 2..=40) {
        let c = random_clustering(g.n(), 3, &mut rng);
        let rep = ClusterRepresentation::from_graph(&g, c).expect("sizes match");
        let (out, _) = pivot_cluster(&rep, &mut rng, &mut StepCounter::unlimited());
        bad += out.check().is_err() as usize;
    }
    SuiteResult { name: "pivot output is a partition", checked: count, violations: bad }
}

pub fn triangle_bound() -> SuiteResult {
    let r = triangle_check(false);
    SuiteResult { name: "triple pivot triangle bound", checked: r.triangles + r.pairs, violations: r.triangle_violations + r.pair_violations }
}

pub fn run_suites(seed: u64, count: usize) -> Vec<SuiteResult> {
    vec![
        oracle_agreement(seed, count),
        representation(seed, count),
        clean_guarantees(seed, count),
        pivot_output(seed, count),
        triangle_bound(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_a_small_corpus() {
        for r in run_suites(1, 30) {
            assert!(r.ok(), "{r:?}");
            assert!(r.checked > 0);
        }
    }
}
