use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dyncc::engine::{build_plugin, format_stream, run_pipeline, PluginSpec};
use dyncc::oracle::opt_by_components;
use dyncc::{ClusterRepresentation, Graph, RngStream};
use dyncc_harness::adversary::{random_stream, two_paths};
use dyncc_harness::config::{Checks, EngineSection, Experiment, Initial, Source, SourceKind};
use dyncc_harness::metrics::{ratio, write_rows, Row, StaticRow};
use dyncc_harness::runner::{run_experiment, trial_streams};
use dyncc_harness::verify::run_suites;

#[derive(Parser, Debug)]
#[command(name = "dyncc", version, about = "Fully-dynamic correlation clustering: static runs, stream replay, adversaries and exact optima")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Rebuild fraction; defaults to the largest admissible value.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// pivot | localsearch | clusterlp | mixed | exact | hypothetical:p, or a comma-separated list.
    #[arg(long, global = true)]
    pipeline: Option<String>,
    #[arg(long, global = true, value_parser = ["amortized", "deamortized"])]
    mode: Option<String>,
    /// JSONL metrics destination; stdout when omitted (except `static`).
    #[arg(long, global = true)]
    metrics: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One pipeline run from singletons on an edge-list graph; prints the clusters.
    Static {
        graph: PathBuf,
        /// Skip the exact optimum.
        #[arg(long)]
        no_oracle: bool,
    },
    /// Replays an update stream through the engine.
    Dynamic {
        graph: PathBuf,
        stream: PathBuf,
        #[arg(long, value_enum)]
        initial: Option<InitialArg>,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        /// Deamortized rebuilds on a worker thread.
        #[arg(long)]
        threaded: bool,
    },
    /// Writes an adversarial stream, or drives an engine with it (`--live`).
    Adversary {
        #[arg(value_enum)]
        kind: AdversaryArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        p_edge: f64,
        #[arg(long, default_value_t = 200)]
        updates: usize,
        #[arg(long, default_value_t = 0)]
        query_every: usize,
        /// Write PREFIX.graph and PREFIX.stream.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        live: bool,
        #[arg(long, default_value_t = 1)]
        trials: u64,
    },
    /// Exact optimum of an edge-list graph (components of at most 16 vertices).
    Oracle { graph: PathBuf },
    /// Runs the seeded invariant suites.
    Verify {
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// Runs an experiment file.
    Run {
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitialArg {
    Singletons,
    Opt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AdversaryArg {
    TwoPaths,
    Random,
    Adaptive,
}

impl Cli {
    fn engine(&self, base: EngineSection) -> EngineSection {
        EngineSection {
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            mu: self.mu.or(base.mu),
            pipeline: self.pipeline.clone().unwrap_or(base.pipeline),
            mode: self.mode.clone().unwrap_or(base.mode),
            ..base
        }
    }

    fn emit(&self, rows: &[Row]) -> Result<()> {
        match &self.metrics {
            Some(p) => {
                let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
                write_rows(&mut w, rows)?;
                w.flush()?;
            }
            None => write_rows(&mut std::io::stdout().lock(), rows)?,
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Ok(false) when a hard assertion failed.
fn dispatch(cli: &Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Static { graph, no_oracle } => run_static(cli, graph, *no_oracle),
        Command::Dynamic { graph, stream, initial, trials, threaded } => {
            let mut engine = cli.engine(EngineSection::default());
            engine.threaded = *threaded;
            let source = Source {
                kind: SourceKind::Replay,
                n: None,
                p_edge: 0.0,
                updates: 0,
                query_every: 0,
                graph: Some(graph.clone()),
                stream: Some(stream.clone()),
                initial: initial.map(to_initial),
            };
            experiment(cli, "dynamic", Experiment { trials: *trials, seed, engine, source, checks: Checks::default() })
        }
        Command::Adversary { kind, n, p_edge, updates, query_every, out, live, trials } => {
            let kind = match kind {
                AdversaryArg::TwoPaths => SourceKind::TwoPaths,
                AdversaryArg::Random => SourceKind::Random,
                AdversaryArg::Adaptive => SourceKind::Adaptive,
            };
            let source = Source {
                kind,
                n: Some(*n),
                p_edge: *p_edge,
                updates: *updates,
                query_every: *query_every,
                graph: None,
                stream: None,
                initial: None,
            };
            let exp = Experiment { trials: *trials, seed, engine: cli.engine(EngineSection::default()), source, checks: Checks::default() };
            if *live {
                return experiment(cli, "adversary", exp);
            }
            let Some(prefix) = out else { bail!("--out PREFIX is required unless --live is given") };
            generate(&exp, prefix)?;
            Ok(true)
        }
        Command::Oracle { graph } => {
            let g = Graph::read(graph)?;
            let (cost, c) = opt_by_components(&g)?;
            println!("opt {cost}");
            for k in c.partition() {
                println!("{}", join(&k));
            }
            Ok(true)
        }
        Command::Verify { instances } => {
            let mut ok = true;
            for r in run_suites(seed, *instances) {
                println!("[{}] {} ({} checked, {} violations)", if r.ok() { "PASS" } else { "FAIL" }, r.name, r.checked, r.violations);
                ok &= r.ok();
            }
            Ok(ok)
        }
        Command::Run { config, trials } => {
            let mut exp = Experiment::read(config)?;
            exp.rebase(config.parent().unwrap_or(Path::new(".")));
            exp.engine = cli.engine(exp.engine);
            exp.seed = cli.seed.unwrap_or(exp.seed);
            exp.trials = trials.unwrap_or(exp.trials);
            experiment(cli, "run", exp)
        }
    }
}

fn to_initial(a: InitialArg) -> Initial {
    match a {
        InitialArg::Singletons => Initial::Singletons,
        InitialArg::Opt => Initial::Opt,
    }
}

fn join(vs: &[usize]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn experiment(cli: &Cli, command: &str, exp: Experiment) -> Result<bool> {
    exp.validate()?;
    let out = run_experiment(&exp, command)?;
    cli.emit(&out.rows)?;
    let a = &out.aggregate;
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.4}"));
    eprintln!(
        "{} trials, {} failed hard checks, mean ratio {}, max ratio {}, target failures {}",
        a.trials,
        a.failed_trials,
        fmt(a.mean_ratio),
        fmt(a.max_ratio),
        a.target_failures
    );
    Ok(out.ok())
}

fn generate(exp: &Experiment, prefix: &Path) -> Result<()> {
    let (_, mut rng) = trial_streams(exp.seed, 0);
    let n = exp.source.n.expect("set above");
    let (g, ups) = match exp.source.kind {
        SourceKind::TwoPaths => {
            let s = two_paths(n)?;
            (s.graph, s.updates)
        }
        SourceKind::Random => random_stream(n, exp.source.p_edge, exp.source.updates, exp.source.query_every, &mut rng)?,
        _ => bail!("the adaptive adversary reacts to the engine; run it with --live"),
    };
    let with = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    std::fs::write(with(".graph"), g.to_edge_list())?;
    std::fs::write(with(".stream"), format_stream(&ups))?;
    Ok(())
}

fn run_static(cli: &Cli, path: &Path, no_oracle: bool) -> Result<bool> {
    let g = Graph::read(path)?;
    let seed = cli.seed.unwrap_or(0);
    let epsilon = cli.epsilon.unwrap_or(0.1);
    let name = cli.pipeline.clone().unwrap_or_else(|| "pivot".into());
    let mut plugins: Vec<_> = PluginSpec::pipeline(&name)?.iter().map(|s| build_plugin(s, epsilon)).collect();
    let rep = ClusterRepresentation::singletons(&g);
    let input_cost = rep.cost();
    let out = run_pipeline(&mut plugins, rep, &RngStream::new(seed, 0));
    let opt = if no_oracle { None } else { opt_by_components(&g).ok().map(|(c, _)| c) };
    let parts = out.rep.clustering().partition();
    for k in &parts {
        println!("{}", join(k));
    }
    eprintln!("cost {} (input {input_cost}, opt {})", out.rep.cost(), opt.map_or("-".into(), |o| o.to_string()));
    if cli.metrics.is_some() {
        cli.emit(&[Row::Static(StaticRow {
            n: g.n(),
            m: g.m(),
            pipeline: name,
            seed,
            input_cost,
            cost: out.rep.cost(),
            opt,
            ratio: opt.and_then(|o| ratio(out.rep.cost(), o)),
            clusters: parts.len(),
            steps: out.steps,
        })])?;
    }
    Ok(true)
}
