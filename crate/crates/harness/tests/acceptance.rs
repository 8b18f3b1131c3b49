//! Acceptance criteria 1–12, one line each. Runs with its own `main` so the
//! verdicts are printed by `cargo test`; pass criterion ids (`C5 C6`) as
//! arguments to run a subset.

use std::collections::HashSet;
use std::process::{Command, Stdio};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use dyncc::cluster_lp::{mwu_solve, pivot_based_rounding, LpOutcome, LpParams};
use dyncc::engine::{EngineConfig, PluginSpec};
use dyncc::local_search::{epsilon_good_check, iterated_flipping_rep, triangle_check, FlipParams, EPS_GOOD_CONSTANT};
use dyncc::oracle::{all_partitions, brute_force_opt};
use dyncc::pivot::{classic_pivot, pivot_cluster};
use dyncc::precluster::{clean, is_agreeing, AdmParams, Preclustering, CLEAN_AGREEMENT, CLEAN_INFLATION, STRONG};
use dyncc::{clustering_cost, ClusterRepresentation, Clustering, Graph, RngStream, StepCounter};
use dyncc_harness::runner::run_experiment;
use dyncc_harness::verify::random_clustering;
use dyncc_harness::Experiment;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn gnp_corpus(seed: u64, count: usize, sizes: std::ops::RangeInclusive<usize>) -> Vec<Graph> {
    (0..count as u64)
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let n = rng.gen_range(sizes.clone());
            Graph::gnp(n, [0.3, 0.5, 0.7][i as usize % 3], &mut rng)
        })
        .collect()
}

/// Noisy clique partition: `k` planted groups, each pair flipped with probability q.
fn planted<R: Rng + ?Sized>(n: usize, k: usize, q: f64, rng: &mut R) -> Graph {
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if (labels[u] == labels[v]) != rng.gen_bool(q) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

fn mean_sd(xs: &[usize]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn c1_pivot_three_approx() -> Verdict {
    const RUNS: usize = 10_000;
    let mut corpus = gnp_corpus(101, 210, 6..=10);
    corpus.retain(|g| g.m() > 0);
    let (mut bad, mut worst) = (0, 0.0f64);
    for (i, g) in corpus.iter().enumerate() {
        let opt = brute_force_opt(g).expect("n <= 10").0;
        let mut rng = RngStream::new(102, i as u64);
        let costs: Vec<usize> = (0..RUNS).map(|_| clustering_cost(g, &classic_pivot(g, &mut rng)).unwrap()).collect();
        let (mean, sd) = mean_sd(&costs);
        if mean > 3.0 * opt as f64 + 3.0 * sd / (RUNS as f64).sqrt() {
            bad += 1;
        }
        if opt > 0 {
            worst = worst.max(mean / opt as f64);
        }
    }
    verdict(bad == 0, format!("{} instances x {RUNS} runs, {bad} over 3*OPT + 3 sigma, worst mean/OPT {worst:.3}", corpus.len()))
}

/// Two-sample χ² homogeneity on cost histograms; sparse bins are pooled
/// until each holds at least 10 observations.
fn chi2_p(a: &[u64], b: &[u64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |h: &[u64], i: usize| h.get(i).copied().unwrap_or(0);
    let mut bins: Vec<(u64, u64)> = Vec::new();
    let mut cur = (0, 0);
    for i in 0..len {
        cur.0 += get(a, i);
        cur.1 += get(b, i);
        if cur.0 + cur.1 >= 10 {
            bins.push(cur);
            cur = (0, 0);
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += cur.0;
            last.1 += cur.1;
        }
        None => return 1.0,
    }
    if bins.len() < 2 {
        return 1.0;
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let total = na + nb;
    let stat: f64 = bins
        .iter()
        .map(|&(x, y)| {
            let pooled = (x + y) as f64;
            let (ea, eb) = (na * pooled / total, nb * pooled / total);
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    1.0 - ChiSquared::new((bins.len() - 1) as f64).unwrap().cdf(stat)
}

fn histogram(costs: impl Iterator<Item = usize>) -> Vec<u64> {
    let mut h = Vec::new();
    for c in costs {
        if h.len() <= c {
            h.resize(c + 1, 0);
        }
        h[c] += 1;
    }
    h
}

fn c2_representation_pivot_equivalence() -> Verdict {
    const RUNS: usize = 100_000;
    let mut graphs = Vec::new();
    let mut rng = RngStream::new(201, 0);
    for n in 3..=6 {
        for p in [0.3, 0.5, 0.7] {
            for _ in 0..2 {
                graphs.push(Graph::gnp(n, p, &mut rng));
            }
        }
    }
    let (mut pairs, mut bad, mut min_p) = (0, 0, 1.0f64);
    for (i, g) in graphs.iter().enumerate() {
        let mut rng = RngStream::new(202, i as u64);
        let classic = histogram((0..RUNS).map(|_| clustering_cost(g, &classic_pivot(g, &mut rng)).unwrap()));
        let clusterings = [
            Clustering::singletons(g.n()),
            Clustering::one_cluster(g.n()),
            brute_force_opt(g).unwrap().1,
            random_clustering(g.n(), 2, &mut rng),
            random_clustering(g.n(), 3, &mut rng),
        ];
        for c in clusterings {
            let rep = ClusterRepresentation::from_graph(g, c).unwrap();
            let ours = histogram((0..RUNS).map(|_| {
                let (out, _) = pivot_cluster(&rep, &mut rng, &mut StepCounter::unlimited());
                clustering_cost(g, &out).unwrap()
            }));
            let p = chi2_p(&classic, &ours);
            pairs += 1;
            min_p = min_p.min(p);
            bad += (p <= 0.001) as usize;
        }
    }
    verdict(bad == 0, format!("{pairs} (graph, clustering) pairs x {RUNS} runs each side, {bad} with p <= 0.001, min p {min_p:.4}"))
}

fn c3_clean_guarantees() -> Verdict {
    let (mut bad, mut clusters, mut worst) = (0, 0, 0.0f64);
    for i in 0..500u64 {
        let mut rng = RngStream::new(301, i);
        let n = rng.gen_range(2..=40);
        let (g, c) = if i % 2 == 0 {
            let g = Graph::gnp(n, rng.gen_range(0.05..0.9), &mut rng);
            let k = rng.gen_range(1..=5);
            let c = random_clustering(n, k, &mut rng);
            (g, c)
        } else {
            let k = rng.gen_range(1..=4);
            let g = planted(n, k, rng.gen_range(0.0..0.15), &mut rng);
            let (c, _) = pivot_cluster(&ClusterRepresentation::singletons(&g), &mut rng, &mut StepCounter::unlimited());
            (g, c)
        };
        let rep = ClusterRepresentation::from_graph(&g, c).unwrap();
        let out = clean(&rep, &mut StepCounter::unlimited());
        let parts: Vec<_> = out.clustering().partition().into_iter().filter(|k| k.len() > 1).collect();
        clusters += parts.len();
        let agreeing = parts.iter().all(|k| is_agreeing(k, &g, CLEAN_AGREEMENT));
        let inflated = out.cost() > CLEAN_INFLATION * rep.cost();
        bad += (!agreeing || inflated || out.cost() != clustering_cost(&g, out.clustering()).unwrap()) as usize;
        if rep.cost() > 0 {
            worst = worst.max(out.cost() as f64 / rep.cost() as f64);
        }
    }
    verdict(bad == 0, format!("500 instances, {clusters} non-singleton clusters, {bad} violations, worst |D'|/|D| {worst:.2}"))
}

fn c4_strong_subsumption() -> Verdict {
    let partitions: Vec<Vec<Vec<usize>>> = (0..=10).map(all_partitions).collect();
    let (mut bad, mut strong_total, mut witness_ok) = (0, 0, 0);
    for i in 0..200u64 {
        let mut rng = RngStream::new(401, i);
        let n = rng.gen_range(4..=10);
        let g = if i % 2 == 0 {
            planted(n, rng.gen_range(1..=3), rng.gen_range(0.0..0.12), &mut rng)
        } else {
            Graph::gnp(n, [0.3, 0.5, 0.7][(i / 2) as usize % 3], &mut rng)
        };
        let strong: Vec<Vec<usize>> = (1u32..1 << n)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..n).filter(|&v| m >> v & 1 == 1).collect::<Vec<_>>())
            .filter(|s| is_agreeing(s, &g, STRONG))
            .collect();
        strong_total += strong.len();
        let fits = |labels: &[usize]| {
            strong.iter().all(|s| {
                let l = labels[s[0]];
                let size = labels.iter().filter(|&&x| x == l).count();
                s.iter().all(|&v| labels[v] == l) && 4 * s.len() >= 3 * size
            })
        };
        let (opt, witness) = brute_force_opt(&g).unwrap();
        witness_ok += fits(&witness.labels()) as usize;
        let any = partitions[n]
            .iter()
            .filter(|l| clustering_cost(&g, &Clustering::from_labels(l)).unwrap() == opt)
            .any(|l| fits(l));
        bad += !any as usize;
    }
    verdict(
        bad == 0,
        format!("200 instances, {strong_total} strong sets, {bad} instances with no optimum subsuming them all at 3/4 size (oracle witness fits on {witness_ok})"),
    )
}

/// Criterion-5 runs: (label, experiment). μ is held below 1/6 for criterion 6.
fn c5_experiments() -> Vec<(String, Experiment)> {
    let mut out = Vec::new();
    for eps in [0.1, 0.5] {
        let mu = EngineConfig { epsilon: eps, pipeline: vec![PluginSpec::Exact], ..Default::default() }.mu_bound().min(0.16);
        let engine = format!("[engine]\npipeline = \"exact\"\nepsilon = {eps}\nmu = {mu}\n");
        for n in [6, 9, 12] {
            let text = format!("seed = 5\n{engine}[source]\nkind = \"two-paths\"\nn = {n}\n[checks]\nrecords = false\n");
            out.push((format!("two-paths n={n} eps={eps}"), Experiment::parse(&text).unwrap()));
        }
        for (j, n) in [6, 8, 10, 12].into_iter().enumerate() {
            let p = [0.2, 0.35, 0.5, 0.65][j];
            let text = format!(
                "trials = 25\nseed = {}\n{engine}[source]\nkind = \"random\"\nn = {n}\np_edge = {p}\nupdates = 200\nquery_every = 20\n[checks]\nrecords = false\n",
                500 + j
            );
            out.push((format!("random n={n} eps={eps}"), Experiment::parse(&text).unwrap()));
        }
    }
    out
}

struct C5Summary {
    runs: usize,
    ratio_violations: usize,
    mismatches: usize,
    worst: f64,
    risky: usize,
    rebuilds: usize,
    max_mu: f64,
}

fn c5_summary() -> &'static C5Summary {
    static CELL: OnceLock<C5Summary> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut s = C5Summary { runs: 0, ratio_violations: 0, mismatches: 0, worst: 1.0, risky: 0, rebuilds: 0, max_mu: 0.0 };
        for (label, exp) in c5_experiments() {
            let out = run_experiment(&exp, "acceptance").unwrap_or_else(|e| panic!("{label}: {e:#}"));
            s.max_mu = s.max_mu.max(exp.engine.engine_config(0).unwrap().resolved_mu());
            for t in &out.trials {
                s.runs += 1;
                s.ratio_violations += t.ratio_violations;
                s.mismatches += t.cost_mismatches;
                s.risky += t.risky_violations;
                s.rebuilds += t.rebuilds;
                s.worst = s.worst.max(t.max_ratio.unwrap_or(f64::INFINITY));
            }
        }
        s
    })
}

fn c5_dynamic_exact() -> Verdict {
    let s = c5_summary();
    verdict(
        s.ratio_violations == 0 && s.mismatches == 0,
        format!(
            "{} runs (two-paths n=6,9,12 and 100 random streams, eps 0.1 and 0.5), {} updates over (1+eps)OPT, {} cost mismatches, worst ratio {:.3}",
            s.runs, s.ratio_violations, s.mismatches, s.worst
        ),
    )
}

fn c6_risky_layers() -> Verdict {
    let s = c5_summary();
    verdict(
        s.risky == 0 && s.max_mu < 1.0 / 6.0,
        format!("{} rebuild logs, {} rebuilds, {} risky windows with more than 3 large-input rebuilds, max mu {:.4}", s.runs, s.rebuilds, s.risky, s.max_mu),
    )
}

fn c7_triangle_bound() -> Verdict {
    let t = Instant::now();
    let r = triangle_check(false);
    let took = t.elapsed();
    verdict(
        r.ok() && took < Duration::from_secs(1),
        format!(
            "{} triangle configurations, {} pair cases, {} violations, {} tight, {:?}",
            r.triangles,
            r.pairs,
            r.triangle_violations + r.pair_violations,
            r.tight,
            took
        ),
    )
}

fn c8_local_search() -> Verdict {
    const SEEDS: u64 = 3;
    let params = FlipParams::default();
    let (mut runs, mut within, mut cert_bad, mut worst) = (0, 0, 0, 0.0f64);
    for i in 0..100u64 {
        let mut rng = RngStream::new(801, i);
        let n = rng.gen_range(6..=12);
        let g = Graph::gnp(n, rng.gen_range(0.2..0.8), &mut rng);
        let (opt, oc) = brute_force_opt(&g).unwrap();
        let parts = oc.partition();
        let rep = ClusterRepresentation::singletons(&g);
        for s in 0..SEEDS {
            let mut rng = RngStream::new(802 + s, i);
            let out = iterated_flipping_rep(&rep, &params, &mut rng);
            runs += 1;
            within += (out.cost() as f64 <= 1.847 * opt as f64) as usize;
            cert_bad += !epsilon_good_check(&g, out.clustering(), &parts, EPS_GOOD_CONSTANT * params.ls.eps, rep.cost()) as usize;
            if opt > 0 {
                worst = worst.max(out.cost() as f64 / opt as f64);
            }
        }
    }
    let freq = within as f64 / runs as f64;
    verdict(
        freq >= 0.99 && cert_bad == 0,
        format!("{runs} runs, {:.1}% within 1.847*OPT, {cert_bad} certificate failures at {EPS_GOOD_CONSTANT}*eps, worst ratio {worst:.3}", 100.0 * freq),
    )
}

struct LpInstance {
    g: Graph,
    opt: usize,
    input_d: usize,
    pre: Preclustering,
    out: LpOutcome,
}

fn lp_corpus() -> &'static (LpParams, Vec<LpInstance>) {
    static CELL: OnceLock<(LpParams, Vec<LpInstance>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = LpParams::default();
        let inst = gnp_corpus(901, 120, 6..=12)
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                let mut rng = RngStream::new(902, i as u64);
                let opt = brute_force_opt(&g).unwrap().0;
                let rep = ClusterRepresentation::singletons(&g);
                let mut pre = Preclustering::build(&rep, AdmParams::default(), &mut StepCounter::unlimited());
                let out = mwu_solve(&mut pre, &params, &mut rng);
                LpInstance { input_d: rep.cost(), g, opt, pre, out }
            })
            .collect();
        (params, inst)
    })
}

fn c9_cluster_lp() -> Verdict {
    let (params, corpus) = lp_corpus();
    let delta = 1.0 / params.rounds as f64;
    let (mut bad, mut worst) = (0, 0.0f64);
    for x in corpus {
        let z = &x.out.z;
        let n = x.g.n();
        let structure = z.is_covering(1e-9)
            && z.splits(x.pre.rep().clustering()) == 0
            && z.min_weight() >= delta * (1.0 - 1e-9)
            && z.max_sets_per_vertex() <= params.rounds + 1
            && z.len() <= n * (params.rounds + 1)
            && x.out.band_upper_violations == 0;
        let cover_opt = x.opt as f64 + 2.0 * x.pre.rep().cost() as f64;
        let bound = (1.0 + 5.0 * params.gamma) * cover_opt + params.eps * x.input_d as f64;
        let obj = z.objective(x.pre.rep());
        bad += (!structure || obj > bound + 1e-9) as usize;
        if bound > 0.0 {
            worst = worst.max(obj / bound);
        }
    }
    verdict(
        bad == 0,
        format!("{} instances, {bad} violations (covering, atoms kept whole, z >= 1/T, <= T+1 sets per vertex, objective bound), worst obj/bound {worst:.3}", corpus.len()),
    )
}

fn c10_end_to_end() -> Verdict {
    const SEEDS: usize = 1000;
    let (_, corpus) = lp_corpus();
    let (mut bad, mut worst, mut sum_mean, mut sum_opt) = (0, 0.0f64, 0.0, 0.0);
    for (i, x) in corpus.iter().enumerate() {
        let mut rng = RngStream::new(1001, i as u64);
        let total: usize = (0..SEEDS).map(|_| pivot_based_rounding(&x.out.z, x.pre.rep(), &mut rng).cost).sum();
        let mean = total as f64 / SEEDS as f64;
        bad += (mean > 2.06 * x.opt as f64) as usize;
        sum_mean += mean;
        sum_opt += x.opt as f64;
        if x.opt > 0 {
            worst = worst.max(mean / x.opt as f64);
        }
    }
    verdict(
        bad == 0,
        format!(
            "{} instances x {SEEDS} roundings, {bad} above 2.06*OPT, worst mean/OPT {worst:.3}, grand mean/OPT {:.3} (target 1.437)",
            corpus.len(),
            sum_mean / sum_opt
        ),
    )
}

fn c11_failure_amplification() -> Verdict {
    const BATCHES: u64 = 5;
    const TRIALS: u64 = 10_000;
    let sizes = [30, 60, 120, 240];
    let mut increasing = 0;
    let mut lines = Vec::new();
    for b in 0..BATCHES {
        let rates: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                let text = format!(
                    "trials = {TRIALS}\nseed = {}\n[engine]\npipeline = \"hypothetical:0.5\"\nepsilon = 0.5\n[source]\nkind = \"two-paths\"\nn = {n}\n[checks]\noracle = false\nrecords = false\n",
                    11_000 + 1000 * b + n as u64
                );
                let out = run_experiment(&Experiment::parse(&text).unwrap(), "acceptance").unwrap();
                out.aggregate.target_failure_rate.unwrap()
            })
            .collect();
        let up = rates.windows(2).all(|w| w[1] > w[0]);
        increasing += up as usize;
        lines.push(format!("[{}]", rates.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ")));
    }
    verdict(
        increasing >= 4,
        format!("{increasing}/{BATCHES} batches strictly increasing over n = 30, 60, 120, 240 ({TRIALS} trials each): {}", lines.join(" ")),
    )
}

fn c12_cli_determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("dyncc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("exp.toml");
    std::fs::write(
        &cfg,
        "trials = 8\nseed = 12\n[engine]\npipeline = \"mixed\"\nmode = \"deamortized\"\nthreaded = true\nepsilon = 0.5\n\
         [source]\nkind = \"random\"\nn = 10\nupdates = 80\nquery_every = 9\n",
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_dyncc");
    let invocations: Vec<Vec<String>> = vec![
        vec!["run".into(), cfg.display().to_string()],
        vec!["adversary".into(), "adaptive".into(), "--live".into(), "--n".into(), "9".into(), "--updates".into(), "60".into(), "--trials".into(), "4".into()],
        vec!["--pipeline".into(), "exact".into(), "--epsilon".into(), "0.5".into(), "adversary".into(), "two-paths".into(), "--live".into(), "--n".into(), "12".into()],
    ];
    let (mut same, mut total_bytes) = (0, 0);
    for (k, args) in invocations.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|r| {
                let path = dir.join(format!("m{k}-{r}.jsonl"));
                let status = Command::new(bin).args(args).args(["--seed", "3", "--metrics"]).arg(&path).stderr(Stdio::null()).status().unwrap();
                assert!(status.success(), "dyncc {args:?} exited with {status}");
                std::fs::read(&path).unwrap()
            })
            .collect();
        total_bytes += outputs[0].len();
        same += (outputs[0] == outputs[1] && !outputs[0].is_empty()) as usize;
    }
    let _ = std::fs::remove_dir_all(&dir);
    verdict(same == invocations.len(), format!("{same}/{} invocations byte-identical on repeat ({total_bytes} bytes)", invocations.len()))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Verdict); 12] = [
        ("C1", "pivot 3-approximation", c1_pivot_three_approx),
        ("C2", "representation pivot = classic pivot", c2_representation_pivot_equivalence),
        ("C3", "clean guarantees", c3_clean_guarantees),
        ("C4", "strong clusters subsumed by OPT", c4_strong_subsumption),
        ("C5", "dynamic (1+eps) with exact plugin", c5_dynamic_exact),
        ("C6", "risky-rebuild layering", c6_risky_layers),
        ("C7", "triangle bound", c7_triangle_bound),
        ("C8", "local search quality", c8_local_search),
        ("C9", "cluster LP structure and objective", c9_cluster_lp),
        ("C10", "LP + pivot rounding end to end", c10_end_to_end),
        ("C11", "failure amplification trend", c11_failure_amplification),
        ("C12", "CLI determinism", c12_cli_determinism),
    ];
    let wanted: HashSet<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_uppercase()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(id) {
            continue;
        }
        let t = Instant::now();
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        println!("[{}] {id} {name}: {} ({:.1} s)", if v.pass { "PASS" } else { "FAIL" }, v.detail, t.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed: {}", failed.join(" "));
        std::process::exit(1);
    }
}
