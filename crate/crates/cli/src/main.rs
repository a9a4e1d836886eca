use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nlplan_core::apartment;
use nlplan_core::classic::{self, ClassicError};
use nlplan_core::fsm::CancellationToken;
use nlplan_core::harness::{ExperimentConfig, START_ROOM};
use nlplan_core::kgraph::{shared, KnowledgeGraph};
use nlplan_core::llm::{BackendConfig, BackendKind, BagOfWordsEmbedder, HttpBackend, LlmBackend};
use nlplan_core::llmplanner::{oracle_backend, run_layer, LayerConfig, PromptTemplates, Variant};
use nlplan_core::sim::{Sim, WorldMap};
use nlplan_core::worldstate::{build_world_state, Mode};
use nlplan_core::Goal;

#[derive(Parser)]
#[command(name = "nlplan", version, about = "Knowledge-graph planning for a greeting service robot")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Export or check knowledge graph files.
    #[command(subcommand)]
    Graph(GraphCommand),
    /// Render the knowledge items a prompt would contain.
    #[command(subcommand)]
    Worldstate(WorldstateCommand),
    /// Pursue one goal with the LLM planning layer in the simulator.
    Solve(SolveArgs),
    /// Symbolic STRIPS planning.
    #[command(subcommand)]
    Classic(ClassicCommand),
    /// Run a randomized mission experiment and write reports.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Json,
    Text,
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Write the initial apartment graph.
    Export {
        #[arg(long, value_enum, default_value = "json")]
        format: GraphFormat,
        /// Take room waypoints from this map file.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, default_value = START_ROOM)]
        robot_room: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load a graph file and print it in the requested format.
    Import {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: GraphFormat,
    },
}

#[derive(Subcommand)]
enum WorldstateCommand {
    Render {
        /// Graph file; the initial apartment when omitted.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Retrieval query. Without it every item is printed.
        #[arg(long)]
        query: Option<String>,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Scripted,
    Http,
}

#[derive(Args)]
struct SolveArgs {
    /// e.g. "greet angel" or "(greeted angel)".
    #[arg(long)]
    goal: String,
    #[arg(long, default_value = "FI")]
    variant: Variant,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Backend selection file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    /// Directory holding planning.txt and goal_check.txt.
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Write the mission trace (JSON lines) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    retrieval_k: usize,
}

#[derive(Subcommand)]
enum ClassicCommand {
    /// Plan for a PDDL problem, or for a goal over a knowledge graph.
    Plan {
        #[arg(long, requires = "problem", conflicts_with = "from_graph")]
        domain: Option<PathBuf>,
        #[arg(long, requires = "domain")]
        problem: Option<PathBuf>,
        /// Plan over this graph file (or the initial apartment if no path is given).
        #[arg(long, num_args = 0..=1, default_missing_value = "", requires = "goal")]
        from_graph: Option<PathBuf>,
        #[arg(long)]
        goal: Option<String>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn pddl_error(file: &Path, e: &ClassicError) -> anyhow::Error {
    match e.location() {
        Some(loc) => anyhow!("{}:{}: {}", file.display(), loc, e.message()),
        None => anyhow!("{}: {}", file.display(), e.message()),
    }
}

fn load_graph(path: Option<&Path>) -> Result<KnowledgeGraph> {
    match path {
        Some(p) if !p.as_os_str().is_empty() => {
            KnowledgeGraph::load(p).with_context(|| format!("loading graph {}", p.display()))
        }
        _ => Ok(apartment::initial_graph()),
    }
}

fn load_map(path: Option<&Path>) -> Result<WorldMap> {
    match path {
        Some(p) => WorldMap::load(p).with_context(|| format!("loading map {}", p.display())),
        None => Ok(WorldMap::default()),
    }
}

fn render_graph(g: &KnowledgeGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::Json => g.to_json() + "\n",
        GraphFormat::Text => g.to_text(),
    }
}

fn graph(cmd: GraphCommand) -> Result<ExitCode> {
    match cmd {
        GraphCommand::Export {
            format,
            map,
            robot_room,
            out,
        } => {
            let map = load_map(map.as_deref())?;
            if !apartment::ROOMS.contains(&robot_room.as_str()) {
                bail!("unknown room `{robot_room}`");
            }
            let text = render_graph(&apartment::graph_for_map(&map, &robot_room), format);
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
        GraphCommand::Import { file, format } => {
            let g = load_graph(Some(&file))?;
            eprintln!("{}: {} nodes, {} edges", file.display(), g.nodes().count(), g.edges().count());
            print!("{}", render_graph(&g, format));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn worldstate(cmd: WorldstateCommand) -> Result<ExitCode> {
    let WorldstateCommand::Render { graph, query, k } = cmd;
    let g = load_graph(graph.as_deref())?;
    let (query, mode) = match query {
        Some(q) => (q, Mode::Retrieved(k)),
        None => (String::new(), Mode::Full),
    };
    let ws = build_world_state(&g, &query, mode, &BagOfWordsEmbedder::default())?;
    for item in &ws.items {
        println!("{item}");
    }
    Ok(ExitCode::SUCCESS)
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    let goal = Goal::parse(&args.goal)?;
    let mut backend_cfg = match &args.config {
        Some(p) => BackendConfig::from_toml(&read(p)?)?,
        None => BackendConfig::default(),
    };
    if let Some(b) = args.backend {
        backend_cfg.backend = match b {
            BackendArg::Scripted => BackendKind::Scripted,
            BackendArg::Http => BackendKind::Http,
        };
    }
    let backend_cfg = backend_cfg.with_env();

    let map = load_map(args.map.as_deref())?;
    let initial = match &args.graph {
        Some(p) => load_graph(Some(p))?,
        None => apartment::graph_for_map(&map, START_ROOM),
    };
    let robot_room = initial
        .targets(apartment::ROBOT, "at")
        .first()
        .cloned()
        .ok_or_else(|| anyhow!("graph does not place robot `{}`", apartment::ROBOT))?;
    let graph = shared(initial);
    let backend: Box<dyn LlmBackend> = match backend_cfg.backend {
        BackendKind::Scripted => Box::new(
            oracle_backend(graph.clone()).with_latency(Duration::from_secs_f64(backend_cfg.latency_s)),
        ),
        BackendKind::Http => Box::new(HttpBackend::new(backend_cfg.http.clone())),
    };
    let mut config = LayerConfig::new(args.variant);
    config.retrieval_k = args.retrieval_k;
    if let Some(dir) = &args.prompts {
        config.templates = PromptTemplates::from_dir(dir)?;
    }
    let mut sim = Sim::new(map, &robot_room)?;
    let run = run_layer(&graph, &goal, backend.as_ref(), &mut sim, &config, &CancellationToken::new())?;

    if let Some(p) = &args.trace {
        fs::write(p, run.trace.to_jsonl()).with_context(|| format!("writing {}", p.display()))?;
    }
    for (i, plan) in run.plans.iter().enumerate() {
        println!("plan {}: {}", i + 1, plan.to_json());
    }
    let (elapsed, distance) = sim.metrics();
    match &run.reason {
        Some(r) => println!("outcome: {} ({r})", run.outcome),
        None => println!("outcome: {}", run.outcome),
    }
    println!(
        "rounds: {}  generate calls: {}  simulated time: {elapsed:.3} s  llm latency: {:.3} s  distance: {distance:.3} m",
        run.planning_rounds,
        run.plan_calls + run.check_calls,
        run.llm_latency.as_secs_f64()
    );
    Ok(if run.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn classic_plan(cmd: ClassicCommand) -> Result<ExitCode> {
    let ClassicCommand::Plan {
        domain,
        problem,
        from_graph,
        goal,
    } = cmd;
    let plan = match (domain, problem, from_graph, goal) {
        (Some(d), Some(p), None, _) => {
            let domain = classic::parse_domain(&read(&d)?).map_err(|e| pddl_error(&d, &e))?;
            let problem = classic::parse_problem(&read(&p)?, &domain).map_err(|e| pddl_error(&p, &e))?;
            classic::plan(&domain, &problem)?
        }
        (None, None, Some(g), Some(goal)) => {
            let graph = load_graph(Some(&g))?;
            classic::plan_for_graph(&graph, &Goal::parse(&goal)?)?
        }
        (None, None, None, Some(goal)) => classic::plan_for_graph(&apartment::initial_graph(), &Goal::parse(&goal)?)?,
        _ => bail!("give either --domain and --problem, or --goal (optionally with --from-graph)"),
    };
    for step in &plan.steps {
        println!("{step}");
    }
    eprintln!("{} step(s)", plan.len());
    Ok(ExitCode::SUCCESS)
}

fn experiment(config: &Path, out: &Path) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(config).map_err(|e| anyhow!("{}: {e}", config.display()))?;
    let cfg = ExperimentConfig {
        http: BackendConfig {
            http: cfg.http.clone(),
            ..BackendConfig::default()
        }
        .with_env()
        .http,
        ..cfg
    };
    let report = nlplan_core::harness::run_experiment(&cfg)?;
    report.write_to(out)?;
    print!("{}", report.to_markdown());
    Ok(if report.any_failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Graph(c) => graph(c),
        Command::Worldstate(c) => worldstate(c),
        Command::Solve(a) => solve(a),
        Command::Classic(c) => classic_plan(c),
        Command::Experiment { config, out } => experiment(&config, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
