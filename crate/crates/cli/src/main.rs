//! `dcm`: command-line access to the giant strongly connected component
//! of directed configuration-model graphs.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use dcm_core::branching::{expansion_experiment, OffspringLaw};
use dcm_core::criticality::predict;
use dcm_core::degree_model::DEFAULT_TRUNCATION_TAIL;
use dcm_core::experiment::{run_experiment, Schedule};
use dcm_core::exploration::{default_omega, linear_core, symmetric_difference};
use dcm_core::generator::{
    binomial_digraph, pair_configuration, simple_with_attempts, DEFAULT_MAX_ATTEMPTS,
};
use dcm_core::io::{
    parse_degree_sequence, parse_distribution_spec, parse_experiment_config, read_graph,
    write_graph,
};
use dcm_core::scc::{
    cycle_census, reachability_oracle, strongly_connected_components, DEFAULT_WORK_CAP,
};
use dcm_core::{
    stream_from_seed, BiDegreeDistribution, CoreCriterion, Digraph, Direction, DistributionSpec,
    Error, ExperimentConfig, GraphMode, OmegaPolicy, UnivariateLaw,
};

/// Exit status when a fixed-point solver fails to converge.
const EXIT_NONCONVERGENCE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "dcm",
    version,
    about = "Giant strong components of directed configuration-model graphs"
)]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extinction probabilities and predicted giant order and size.
    Predict(FamilyArgs),
    /// Sample a graph and write it as `n m` followed by `tail head` lines.
    Generate(GenerateArgs),
    /// Strongly connected components of a graph file.
    Analyze(AnalyzeArgs),
    /// Linear core of a graph file and its overlap with the giant.
    Core(CoreArgs),
    /// Hitting frequencies of a supercritical branching process.
    Branching(BranchingArgs),
    /// Seeded Monte Carlo runs; writes one CSV row per trial.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    /// Compact family, e.g. `poisson-pair:2`, `regular:3`,
    /// `product:poisson:1.5/const:2` or `table:0,0=0.5;2,2=0.5`.
    #[arg(long, conflicts_with = "dist")]
    family: Option<String>,

    /// Distribution file (`family = ...` keys or `k l probability` rows).
    #[arg(long)]
    dist: Option<PathBuf>,

    /// Tail mass allowed to be dropped when truncating infinite families.
    #[arg(long)]
    tail: Option<f64>,
}

impl FamilyArgs {
    fn is_given(&self) -> bool {
        self.family.is_some() || self.dist.is_some()
    }

    fn spec(&self) -> Result<(DistributionSpec, f64)> {
        let (spec, file_tail) = match (&self.family, &self.dist) {
            (Some(f), _) => (f.parse()?, DEFAULT_TRUNCATION_TAIL),
            (None, Some(path)) => parse_distribution_spec(&read_text(path)?)?,
            (None, None) => bail!("one of --family or --dist is required"),
        };
        Ok((spec, self.tail.unwrap_or(file_tail)))
    }

    fn distribution(&self) -> Result<BiDegreeDistribution> {
        let (spec, tail) = self.spec()?;
        Ok(spec.build(tail)?)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    family: FamilyArgs,

    /// Degree-sequence file (`d_minus d_plus` per node) used instead of a family.
    #[arg(long, conflicts_with_all = ["family", "dist"])]
    sequence: Option<PathBuf>,

    /// Number of nodes when sampling from a family.
    #[arg(short, long)]
    n: Option<usize>,

    /// `multigraph`, `simple` (rejection sampling) or `binomial`.
    #[arg(long, default_value = "multigraph")]
    mode: GraphMode,

    /// Arc probability for binomial mode (default: mean degree / n).
    #[arg(long)]
    p: Option<f64>,

    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Graph file, or `-` for standard input.
    graph: PathBuf,

    /// Also count simple cycles up to this length.
    #[arg(long)]
    census: Option<usize>,

    #[arg(long, default_value_t = DEFAULT_WORK_CAP)]
    work_cap: u64,

    /// Include the component label of every node.
    #[arg(long)]
    labels: bool,

    /// Cross-check against the quadratic reachability oracle (small graphs only).
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct CoreArgs {
    /// Graph file, or `-` for standard input.
    graph: PathBuf,

    /// Expansion threshold (default: ceil(ln^2 n)).
    #[arg(long)]
    omega: Option<u64>,

    /// `level-threshold` or `reachable-count`.
    #[arg(long, default_value = "level-threshold")]
    criterion: CoreCriterion,

    /// Include the member list.
    #[arg(long)]
    members: bool,
}

#[derive(Args, Debug)]
struct BranchingArgs {
    #[command(flatten)]
    family: FamilyArgs,

    /// Offspring law given directly, e.g. `poisson:2` or `table:0=0.5,3=0.5`.
    #[arg(long, conflicts_with_all = ["family", "dist"])]
    offspring: Option<String>,

    /// With a family: `out` follows arcs forward (offspring = out-degree of an
    /// in-biased node), `in` follows them backward.
    #[arg(long, default_value = "out")]
    direction: String,

    /// Number of initial individuals.
    #[arg(short = 'x', long, default_value_t = 1)]
    x: u64,

    #[arg(long, default_value_t = 10_000)]
    omega: u64,

    #[arg(long, default_value_t = 0.25)]
    epsilon: f64,

    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Config file with `key = value` lines.
    config: Option<PathBuf>,

    #[command(flatten)]
    family: FamilyArgs,

    /// Comma-separated graph orders.
    #[arg(short, long, value_delimiter = ',')]
    n: Vec<usize>,

    #[arg(long)]
    trials: Option<u64>,

    #[arg(long)]
    mode: Option<GraphMode>,

    /// Linear-core threshold: `log2`, `log6` or a number.
    #[arg(long)]
    omega: Option<OmegaPolicy>,

    #[arg(long)]
    criterion: Option<CoreCriterion>,

    /// Cycle census cutoff length.
    #[arg(long)]
    census: Option<usize>,

    /// Reference sequence for subcritical giants: `log2`, `log` or `sqrt`.
    #[arg(long)]
    schedule: Option<Schedule>,

    /// Where to write the per-size summary JSON (default: standard error).
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    }
    Ok(text)
}

fn load_graph(path: &Path) -> Result<Digraph> {
    let g = if path.as_os_str() == "-" {
        read_graph(io::stdin().lock())?
    } else {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        read_graph(BufReader::new(file))?
    };
    Ok(g)
}

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_predict(cli: &Cli, args: &FamilyArgs) -> Result<()> {
    let (spec, tail) = args.spec()?;
    let dist = spec.build(tail)?;
    let report = predict(&dist)?;
    emit_json(
        cli.out.as_deref(),
        &json!({ "family": spec.to_string(), "truncation_tail": tail, "prediction": report }),
    )
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let mut rng = stream_from_seed(cli.seed);
    let g = if args.mode == GraphMode::Binomial {
        let n = args.n.context("binomial mode needs -n")?;
        let p = match (args.p, args.family.is_given()) {
            (Some(p), _) => p,
            (None, true) => args.family.distribution()?.lambda() / n as f64,
            (None, false) => bail!("binomial mode needs --p or a family"),
        };
        binomial_digraph(n, p, &mut rng)?
    } else {
        let seq = match &args.sequence {
            Some(path) => parse_degree_sequence(&read_text(path)?)?,
            None => {
                let n = args
                    .n
                    .context("-n is required when sampling from a family")?;
                args.family.distribution()?.sample_sequence(n, &mut rng)?
            }
        };
        match args.mode {
            GraphMode::Simple => {
                let (g, attempts) = simple_with_attempts(&seq, &mut rng, args.max_attempts)?;
                eprintln!("simple graph accepted after {attempts} attempt(s)");
                g
            }
            _ => pair_configuration(&seq, &mut rng),
        }
    };
    let mut w = open_output(cli.out.as_deref())?;
    write_graph(&g, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let report = strongly_connected_components(&g);
    if args.check {
        let oracle = reachability_oracle(&g)?;
        if oracle != report {
            bail!("Tarjan labels disagree with the reachability oracle");
        }
    }
    let census = args.census.map(|len| cycle_census(&g, len, args.work_cap));
    let mut value = json!({
        "n": g.n(),
        "arcs": g.arc_count(),
        "simple": g.is_simple(),
        "components": report.component_count,
        "giant_label": report.giant_label,
        "giant_order": report.giant_order,
        "giant_size": report.giant_size,
        "second_order": report.second_order,
    });
    if let Some(census) = census {
        value["cycles"] = json!({
            "max_length": census.max_length,
            "total": census.total(),
            "by_length": census.counts.values().collect::<Vec<_>>(),
            "truncated": census.truncated,
        });
    }
    if args.labels {
        value["labels"] = json!(report.component_ids);
    }
    emit_json(cli.out.as_deref(), &value)
}

fn cmd_core(cli: &Cli, args: &CoreArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let omega = args.omega.unwrap_or_else(|| default_omega(g.n()));
    let core = linear_core(&g, omega, args.criterion);
    let giant = strongly_connected_components(&g).giant_members();
    let (core_only, giant_only) = symmetric_difference(&core.members, &giant);
    let mut value = json!({
        "n": g.n(),
        "omega": core.omega,
        "criterion": core.criterion,
        "core_order": core.len(),
        "core_edges": core.core_edges,
        "giant_order": giant.len(),
        "core_minus_giant": core_only,
        "giant_minus_core": giant_only,
    });
    if args.members {
        value["members"] = json!(core.members);
    }
    emit_json(cli.out.as_deref(), &value)
}

fn cmd_branching(cli: &Cli, args: &BranchingArgs) -> Result<()> {
    let tail = args.family.tail.unwrap_or(DEFAULT_TRUNCATION_TAIL);
    let (law, source) = match &args.offspring {
        Some(text) => {
            let univariate: UnivariateLaw = text.parse()?;
            (
                OffspringLaw::from_univariate(&univariate, tail)?,
                univariate.to_string(),
            )
        }
        None => {
            let direction = match args.direction.as_str() {
                "out" | "forward" => Direction::In,
                "in" | "backward" => Direction::Out,
                other => bail!("unknown direction {other:?}; use `out` or `in`"),
            };
            let (spec, _) = args.family.spec()?;
            let dist = args.family.distribution()?;
            (
                OffspringLaw::from_size_biased(&dist.size_biased(direction))?,
                spec.to_string(),
            )
        }
    };
    let outcome = expansion_experiment(
        &law,
        args.x,
        args.omega,
        args.epsilon,
        args.trials,
        cli.seed,
    )?;
    emit_json(
        cli.out.as_deref(),
        &json!({
            "offspring": source,
            "mean": law.mean(),
            "x": args.x,
            "omega": args.omega,
            "epsilon": args.epsilon,
            "seed": cli.seed,
            "outcome": outcome,
        }),
    )
}

fn experiment_config(
    cli: &Cli,
    args: &ExperimentArgs,
    seed_given: bool,
) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => parse_experiment_config(&read_text(path)?)?,
        None => {
            if args.n.is_empty() {
                bail!("-n is required without a config file");
            }
            let (spec, _) = args.family.spec()?;
            ExperimentConfig::new(spec, args.n.clone(), 1, cli.seed)
        }
    };
    if args.family.is_given() {
        let (spec, tail) = args.family.spec()?;
        config.family = spec;
        config.truncation_tail = tail;
    } else if let Some(tail) = args.family.tail {
        config.truncation_tail = tail;
    }
    if !args.n.is_empty() {
        config.n_list = args.n.clone();
    }
    if seed_given {
        config.seed = cli.seed;
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(m) = args.mode {
        config.mode = m;
    }
    if let Some(o) = args.omega {
        config.omega = Some(o);
    }
    if let Some(c) = args.criterion {
        config.core_criterion = c;
    }
    if let Some(c) = args.census {
        config.census_max_length = Some(c);
    }
    if let Some(s) = args.schedule {
        config.schedule = s;
    }
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    Ok(config)
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs, seed_given: bool) -> Result<()> {
    let config = experiment_config(cli, args, seed_given)?;
    let outcome = run_experiment(&config)?;
    let mut w = open_output(cli.out.as_deref())?;
    outcome.write_csv(&mut w)?;
    w.flush()?;
    match &args.summary {
        Some(path) => {
            let mut s = open_output(Some(path))?;
            outcome.write_summary_json(&mut s)?;
            writeln!(s)?;
            s.flush()?;
        }
        None => {
            let mut s = io::stderr().lock();
            outcome.write_summary_json(&mut s)?;
            writeln!(s)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli, seed_given: bool) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        // Experiments build their own pool; this one serves every other command.
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()?;
    }
    match &cli.command {
        Command::Predict(a) => cmd_predict(cli, a),
        Command::Generate(a) => cmd_generate(cli, a),
        Command::Analyze(a) => cmd_analyze(cli, a),
        Command::Core(a) => cmd_core(cli, a),
        Command::Branching(a) => cmd_branching(cli, a),
        Command::Experiment(a) => cmd_experiment(cli, a, seed_given),
    }
}

fn main() -> ExitCode {
    let matches = <Cli as clap::CommandFactory>::command().get_matches();
    let seed_given = matches!(
        matches
            .subcommand()
            .and_then(|(_, sub)| sub.value_source("seed")),
        Some(clap::parser::ValueSource::CommandLine)
    ) || matches.value_source("seed")
        == Some(clap::parser::ValueSource::CommandLine);
    let cli = match <Cli as clap::FromArgMatches>::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(&cli, seed_given) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::NonConvergence { .. }) => ExitCode::from(EXIT_NONCONVERGENCE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
