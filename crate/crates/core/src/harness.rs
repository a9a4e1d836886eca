//! Randomized greeting-mission experiments.
//!
//! An experiment draws a seeded list of greeting goals, marks a fixed share of
//! them for cancellation after a delay on the simulated clock, and runs the
//! list through each requested pipeline on its own copy of the apartment. The
//! robot's position carries over from one mission to the next. Results are
//! written as a CSV file (one row per mission, then an aggregate block) and a
//! Markdown table with the five summary statistics per metric.
//!
//! Config files are `key = value` lines; `#` starts a comment:
//!
//! ```text
//! mission_count = 6
//! cancel_fraction = 0.5
//! cancel_delay = 10
//! seed = 42
//! variant = classic, FI, NRI, NCI, NRNCI
//! retrieval_k = 10
//! backend = scripted        # or http
//! llm_delay = 0             # scripted backend: seconds reported per call
//! map = map.json            # relative to the config file
//! http.url = http://127.0.0.1:8080
//! http.timeout_ms = 120000
//! replan_limit = 3
//! parse_retry = 2
//! ```

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::apartment;
use crate::classic::plan_for_graph;
use crate::fsm::{self, CancellationToken};
use crate::kgraph::{shared, KnowledgeGraph, Pattern, SharedGraph};
use crate::llm::{BackendKind, HttpBackend, HttpConfig, LlmBackend};
use crate::llmplanner::{self, oracle_backend, ActionStatus, LayerConfig, MissionTrace, TraceEvent, Variant};
use crate::plan::Goal;
use crate::sim::{Executor, Sim, SimError, WorldMap};

/// Room the robot starts every experiment in.
pub const START_ROOM: &str = "entrance";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid experiment configuration: {0}")]
    Invalid(String),
    #[error("map: {0}")]
    Map(#[from] SimError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A pipeline under test: the symbolic baseline or one LLM variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    Classic,
    Llm(Variant),
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Classic,
        Pipeline::Llm(Variant::Fi),
        Pipeline::Llm(Variant::Nri),
        Pipeline::Llm(Variant::Nci),
        Pipeline::Llm(Variant::Nrnci),
    ];
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pipeline::Classic => f.write_str("classic"),
            Pipeline::Llm(v) => v.fmt(f),
        }
    }
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("classic") {
            return Ok(Pipeline::Classic);
        }
        s.parse::<Variant>()
            .map(Pipeline::Llm)
            .map_err(|_| format!("unknown variant `{s}` (expected classic, FI, NRI, NCI or NRNCI)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mission_count: usize,
    pub cancel_fraction: f64,
    /// Simulated seconds after mission start.
    pub cancel_delay: f64,
    pub seed: u64,
    pub variants: Vec<Pipeline>,
    pub retrieval_k: usize,
    pub replan_limit: usize,
    pub parse_retry: usize,
    pub backend: BackendKind,
    /// Latency the scripted backend reports per call, in seconds.
    pub llm_delay: f64,
    pub http: HttpConfig,
    pub map: WorldMap,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mission_count: 6,
            cancel_fraction: 0.5,
            cancel_delay: 10.0,
            seed: 42,
            variants: Pipeline::ALL.to_vec(),
            retrieval_k: llmplanner::DEFAULT_RETRIEVAL_K,
            replan_limit: llmplanner::DEFAULT_REPLAN_LIMIT,
            parse_retry: llmplanner::DEFAULT_PARSE_RETRY,
            backend: BackendKind::Scripted,
            llm_delay: 0.0,
            http: HttpConfig::default(),
            map: WorldMap::default(),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, HarnessError>
where
    T::Err: fmt::Display,
{
    raw.parse::<T>().map_err(|e| HarnessError::Config {
        line,
        msg: format!("bad value for `{key}`: {e}"),
    })
}

impl ExperimentConfig {
    /// Reads a config file. A relative `map` path resolves against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, raw) = content.split_once('=').ok_or_else(|| HarnessError::Config {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, raw) = (key.trim(), raw.trim());
            match key {
                "mission_count" => cfg.mission_count = value(line, key, raw)?,
                "cancel_fraction" => cfg.cancel_fraction = value(line, key, raw)?,
                "cancel_delay" => cfg.cancel_delay = value(line, key, raw)?,
                "seed" => cfg.seed = value(line, key, raw)?,
                "variant" | "variants" => {
                    cfg.variants = raw
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| s.parse::<Pipeline>())
                        .collect::<Result<_, _>>()
                        .map_err(|msg| HarnessError::Config { line, msg })?;
                }
                "retrieval_k" => cfg.retrieval_k = value(line, key, raw)?,
                "replan_limit" => cfg.replan_limit = value(line, key, raw)?,
                "parse_retry" => cfg.parse_retry = value(line, key, raw)?,
                "backend" => {
                    cfg.backend = match raw.to_ascii_lowercase().as_str() {
                        "scripted" => BackendKind::Scripted,
                        "http" => BackendKind::Http,
                        other => {
                            return Err(HarnessError::Config {
                                line,
                                msg: format!("unknown backend `{other}` (expected scripted or http)"),
                            })
                        }
                    }
                }
                "llm_delay" => cfg.llm_delay = value(line, key, raw)?,
                "http.url" => cfg.http.url = raw.to_string(),
                "http.timeout_ms" => cfg.http.timeout_ms = value(line, key, raw)?,
                "map" => {
                    let path = base_dir.join(raw);
                    cfg.map = WorldMap::load(&path).map_err(|e| HarnessError::Config {
                        line,
                        msg: e.to_string(),
                    })?;
                }
                other => {
                    return Err(HarnessError::Config {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Invalid(m.to_string()));
        if self.mission_count == 0 {
            return bad("mission_count must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.cancel_fraction) {
            return bad("cancel_fraction must lie in [0, 1]");
        }
        if !(self.cancel_delay > 0.0 && self.cancel_delay.is_finite()) {
            return bad("cancel_delay must be positive");
        }
        if !(self.llm_delay >= 0.0 && self.llm_delay.is_finite()) {
            return bad("llm_delay must be non-negative");
        }
        if self.variants.is_empty() {
            return bad("no variant selected");
        }
        if self.retrieval_k == 0 {
            return bad("retrieval_k must be at least 1");
        }
        self.map.validate()?;
        for room in apartment::ROOMS {
            if !self.map.waypoints.contains_key(room) {
                return Err(HarnessError::Invalid(format!("map has no waypoint for `{room}`")));
            }
        }
        Ok(())
    }

    pub fn cancel_count(&self) -> usize {
        (self.mission_count as f64 * self.cancel_fraction).round() as usize
    }

    pub fn layer_config(&self, variant: Variant) -> LayerConfig {
        LayerConfig {
            retrieval_k: self.retrieval_k,
            replan_limit: self.replan_limit,
            parse_retry: self.parse_retry,
            ..LayerConfig::new(variant)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mission {
    pub goal: Goal,
    pub cancel: bool,
}

/// Seeded mission list: goals drawn uniformly with replacement from the
/// apartment's people, with exactly [`ExperimentConfig::cancel_count`]
/// missions flagged for cancellation at random positions.
pub fn generate_missions(config: &ExperimentConfig) -> Vec<Mission> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let people = apartment::person_ids();
    let mut missions: Vec<Mission> = (0..config.mission_count)
        .map(|_| Mission {
            goal: Goal::greeted(&people[rng.random_range(0..people.len())]),
            cancel: false,
        })
        .collect();
    let k = config.cancel_count().min(config.mission_count);
    for i in rand::seq::index::sample(&mut rng, config.mission_count, k) {
        missions[i].cancel = true;
    }
    missions
}

#[derive(Debug, Clone, Serialize)]
pub struct MissionRecord {
    pub index: usize,
    pub goal: Goal,
    pub cancel: bool,
    pub outcome: String,
    /// Simulated seconds spent executing.
    pub elapsed: f64,
    /// Seconds reported by the language model backend.
    pub llm_latency: f64,
    /// `elapsed + llm_latency`.
    pub total: f64,
    pub distance: f64,
    pub planning_rounds: usize,
    pub generate_calls: usize,
    #[serde(skip)]
    pub trace: String,
}

/// Summary statistics of one metric. `std` is the sample deviation and is
/// absent for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub min: f64,
    pub max: f64,
    pub sum: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len();
        let sum: f64 = values.iter().sum();
        let mean = if n == 0 { 0.0 } else { sum / n as f64 };
        let std = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Stats {
            n,
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            sum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Elapsed,
    LlmLatency,
    Total,
    Distance,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Elapsed, Metric::LlmLatency, Metric::Total, Metric::Distance];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Elapsed => "elapsed_s",
            Metric::LlmLatency => "llm_latency_s",
            Metric::Total => "total_s",
            Metric::Distance => "distance_m",
        }
    }

    pub fn of(self, r: &MissionRecord) -> f64 {
        match self {
            Metric::Elapsed => r.elapsed,
            Metric::LlmLatency => r.llm_latency,
            Metric::Total => r.total,
            Metric::Distance => r.distance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VariantReport {
    pub pipeline: Pipeline,
    pub missions: Vec<MissionRecord>,
}

impl VariantReport {
    pub fn stats(&self, metric: Metric) -> Stats {
        Stats::of(&self.missions.iter().map(|r| metric.of(r)).collect::<Vec<_>>())
    }

    pub fn count(&self, outcome: &str) -> usize {
        self.missions.iter().filter(|r| r.outcome == outcome).count()
    }

    pub fn cancellations(&self) -> usize {
        self.missions.iter().filter(|r| r.cancel).count()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub seed: u64,
    pub missions: Vec<Mission>,
    pub variants: Vec<VariantReport>,
}

impl ExperimentReport {
    pub fn any_failed(&self) -> bool {
        self.variants.iter().any(|v| v.count(fsm::FAILED) > 0)
    }

    pub fn variant(&self, pipeline: Pipeline) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.pipeline == pipeline)
    }

    /// Per-mission rows, a blank line, then one aggregate row per variant and
    /// metric.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let csv_err = |e: csv::Error| HarnessError::Csv(e.to_string());
        let mut rows = csv::Writer::from_writer(Vec::new());
        rows.write_record([
            "variant",
            "mission",
            "goal",
            "cancel",
            "outcome",
            "elapsed_s",
            "llm_latency_s",
            "total_s",
            "distance_m",
            "planning_rounds",
            "generate_calls",
        ])
        .map_err(csv_err)?;
        for v in &self.variants {
            for r in &v.missions {
                rows.write_record([
                    v.pipeline.to_string(),
                    r.index.to_string(),
                    r.goal.to_string(),
                    r.cancel.to_string(),
                    r.outcome.clone(),
                    r.elapsed.to_string(),
                    r.llm_latency.to_string(),
                    r.total.to_string(),
                    r.distance.to_string(),
                    r.planning_rounds.to_string(),
                    r.generate_calls.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        let mut agg = csv::Writer::from_writer(Vec::new());
        agg.write_record(["variant", "metric", "mean", "std", "min", "max", "sum"])
            .map_err(csv_err)?;
        for v in &self.variants {
            for m in Metric::ALL {
                let s = v.stats(m);
                agg.write_record([
                    v.pipeline.to_string(),
                    m.name().to_string(),
                    s.mean.to_string(),
                    s.std.map_or_else(|| "n/a".to_string(), |x| x.to_string()),
                    s.min.to_string(),
                    s.max.to_string(),
                    s.sum.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        let finish = |w: csv::Writer<Vec<u8>>| -> Result<String, HarnessError> {
            let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| HarnessError::Csv(e.to_string()))
        };
        Ok(format!("{}\n{}", finish(rows)?, finish(agg)?))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "# Greeting missions\n\n{} missions, {} canceled, seed {}.\n",
            self.missions.len(),
            self.missions.iter().filter(|m| m.cancel).count(),
            self.seed
        );
        for v in &self.variants {
            let time = v.stats(Metric::Total);
            let dist = v.stats(Metric::Distance);
            out.push_str(&format!(
                "\n## {}\n\n{} succeeded, {} canceled, {} failed.\n\n",
                v.pipeline,
                v.count(fsm::SUCCEEDED),
                v.count(fsm::CANCELED),
                v.count(fsm::FAILED)
            ));
            out.push_str("| | Execution Time (Seconds) | Traveled Distance (Meters) |\n");
            out.push_str("|---|---:|---:|\n");
            let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
            let rows: [(&str, Option<f64>, Option<f64>); 5] = [
                ("Mean", Some(time.mean), Some(dist.mean)),
                ("Std. Deviation", time.std, dist.std),
                ("Minimum", Some(time.min), Some(dist.min)),
                ("Maximum", Some(time.max), Some(dist.max)),
                ("Sum", Some(time.sum), Some(dist.sum)),
            ];
            for (label, t, d) in rows {
                out.push_str(&format!("| {label} | {} | {} |\n", fmt(t), fmt(d)));
            }
        }
        out
    }

    /// Writes `report.csv`, `report.md` and `trace/<variant>/mission_<i>.jsonl`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join("report.csv");
        fs::write(&csv_path, self.to_csv()?).map_err(io_err(&csv_path))?;
        let md_path = dir.join("report.md");
        fs::write(&md_path, self.to_markdown()).map_err(io_err(&md_path))?;
        for v in &self.variants {
            let tdir = dir.join("trace").join(v.pipeline.to_string());
            fs::create_dir_all(&tdir).map_err(io_err(&tdir))?;
            for r in &v.missions {
                let p = tdir.join(format!("mission_{}.jsonl", r.index));
                fs::write(&p, &r.trace).map_err(io_err(&p))?;
            }
        }
        Ok(())
    }
}

/// Builds the language model backend for one LLM variant run. The graph is
/// that run's ground truth.
pub type BackendFactory<'a> = dyn Fn(&SharedGraph) -> Box<dyn LlmBackend> + 'a;

/// Runs the experiment with the backend named in `config`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    match config.backend {
        BackendKind::Scripted => {
            let delay = Duration::from_secs_f64(config.llm_delay);
            run_experiment_with(config, &move |g: &SharedGraph| {
                Box::new(oracle_backend(g.clone()).with_latency(delay)) as Box<dyn LlmBackend>
            })
        }
        BackendKind::Http => {
            let http = config.http.clone();
            run_experiment_with(config, &move |_: &SharedGraph| {
                Box::new(HttpBackend::new(http.clone())) as Box<dyn LlmBackend>
            })
        }
    }
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    backends: &BackendFactory<'_>,
) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let missions = generate_missions(config);
    let mut variants = Vec::new();
    for &pipeline in &config.variants {
        let graph = shared(apartment::graph_for_map(&config.map, START_ROOM));
        let mut sim = Sim::new(config.map.clone(), START_ROOM)?;
        let backend = match pipeline {
            Pipeline::Classic => None,
            Pipeline::Llm(_) => Some(backends(&graph)),
        };
        let mut records = Vec::new();
        for (index, mission) in missions.iter().enumerate() {
            clear_greetings(&mut graph.write().expect("graph lock"));
            let token = CancellationToken::new();
            let start_clock = sim.clock();
            let start_odo = sim.odometer();
            let first_event = sim.events().len();
            if mission.cancel {
                sim.arm_cancellation(start_clock + config.cancel_delay, token.clone());
            } else {
                sim.disarm();
            }
            let run = match (pipeline, &backend) {
                (Pipeline::Llm(v), Some(b)) => {
                    run_llm(&graph, &mission.goal, b.as_ref(), &mut sim, &config.layer_config(v), &token)
                }
                _ => run_classic(&graph, &mission.goal, &mut sim, &token),
            };
            sim.disarm();
            let elapsed = sim.clock() - start_clock;
            let llm_latency = run.llm_latency.as_secs_f64();
            let mut trace = run.trace.to_jsonl();
            for e in &sim.events()[first_event..] {
                let mut v = serde_json::to_value(e).expect("event serializes");
                v.as_object_mut()
                    .expect("event is an object")
                    .insert("event".into(), "sim".into());
                trace.push_str(&v.to_string());
                trace.push('\n');
            }
            records.push(MissionRecord {
                index,
                goal: mission.goal.clone(),
                cancel: mission.cancel,
                outcome: run.outcome,
                elapsed,
                llm_latency,
                total: elapsed + llm_latency,
                distance: sim.odometer() - start_odo,
                planning_rounds: run.planning_rounds,
                generate_calls: run.generate_calls,
                trace,
            });
        }
        variants.push(VariantReport {
            pipeline,
            missions: records,
        });
    }
    Ok(ExperimentReport {
        seed: config.seed,
        missions,
        variants,
    })
}

/// Greetings are mission-scoped: each mission starts with none recorded.
fn clear_greetings(graph: &mut KnowledgeGraph) {
    for t in graph.matches(&Pattern::any().relation("greeted")) {
        graph
            .remove_edge(&t.source, &t.relation, &t.target)
            .expect("edge just matched");
    }
}

struct PipelineRun {
    outcome: String,
    planning_rounds: usize,
    generate_calls: usize,
    llm_latency: Duration,
    trace: MissionTrace,
}

fn run_llm(
    graph: &SharedGraph,
    goal: &Goal,
    backend: &dyn LlmBackend,
    sim: &mut Sim,
    layer: &LayerConfig,
    token: &CancellationToken,
) -> PipelineRun {
    match llmplanner::run_layer(graph, goal, backend, sim, layer, token) {
        Ok(run) => PipelineRun {
            planning_rounds: run.planning_rounds,
            generate_calls: run.plan_calls + run.check_calls,
            llm_latency: run.llm_latency,
            outcome: run.outcome,
            trace: run.trace,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn failed(reason: String) -> PipelineRun {
    let mut trace = MissionTrace::default();
    trace.push(TraceEvent::Outcome {
        outcome: fsm::FAILED.into(),
        reason: Some(reason),
    });
    PipelineRun {
        outcome: fsm::FAILED.into(),
        planning_rounds: 0,
        generate_calls: 0,
        llm_latency: Duration::ZERO,
        trace,
    }
}

/// Plans symbolically once, then executes. A deadline that passes during
/// the last action still cancels the mission.
fn run_classic(graph: &SharedGraph, goal: &Goal, sim: &mut Sim, token: &CancellationToken) -> PipelineRun {
    let plan = match plan_for_graph(&graph.read().expect("graph lock"), goal) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    let mut trace = MissionTrace::default();
    trace.push(TraceEvent::Plan {
        round: 1,
        steps: plan.steps.clone(),
    });
    let mut outcome = fsm::SUCCEEDED;
    let mut reason = None;
    for call in &plan.steps {
        let result = sim.execute(&mut graph.write().expect("graph lock"), call, token);
        let (status, detail, effect) = match result {
            Ok(effect) => (ActionStatus::Completed, None, effect),
            Err(SimError::Canceled { partial, .. }) => {
                outcome = fsm::CANCELED;
                (ActionStatus::Canceled, None, *partial)
            }
            Err(e) => {
                outcome = fsm::FAILED;
                reason = Some(e.to_string());
                (ActionStatus::Failed, Some(e.to_string()), Default::default())
            }
        };
        trace.push(TraceEvent::Action {
            round: 1,
            call: call.to_string(),
            status,
            detail,
            clock_delta: effect.clock_delta,
            distance_delta: effect.distance_delta,
        });
        if outcome != fsm::SUCCEEDED {
            break;
        }
    }
    if outcome == fsm::SUCCEEDED && token.is_canceled() {
        outcome = fsm::CANCELED;
    }
    trace.push(TraceEvent::Outcome {
        outcome: outcome.into(),
        reason,
    });
    PipelineRun {
        outcome: outcome.into(),
        planning_rounds: 1,
        generate_calls: 0,
        llm_latency: Duration::ZERO,
        trace,
    }
}
