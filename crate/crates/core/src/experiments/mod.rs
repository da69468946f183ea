//! Monte Carlo harness: experiment specification, parallel replication
//! runner, phase accounting from trace tags, and summary statistics.

pub mod bounds;
pub mod output;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::crusade::{CrusadeError, ImpedanceTable, EXACT_MODE_MAX_NODES};
use crate::cure::{
    CrusadeMode, CureConfig, CureCounters, CureError, CurePolicy, DegreeProportionalCuring,
    NoCuring, UniformCuring,
};
use crate::graph::{Bag, Graph, GraphError, NodeId};
use crate::sim::{run, Caps, Outcome, RngStream, RunConfig, SimError, Trace};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "EPIDEMIC_CURE_THREADS";

/// Two-sided 99% normal quantile used for confidence half-widths.
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unrecognized graph spec {0:?} (expected line:N, grid:RxC, complete:N, or a file path)")]
    BadGraphSpec(String),
    #[error("unrecognized policy {0:?} (expected cure, uniform, degree, or none)")]
    BadPolicySpec(String),
    #[error("unrecognized initial-set spec {0:?} (expected all, list:v1,v2,..., or frac:p)")]
    BadInitSpec(String),
    #[error("initial node {node} out of range for a graph on {n} nodes")]
    InitOutOfRange { node: NodeId, n: usize },
    #[error("replications must be at least 1")]
    ZeroReplications,
    #[error("budget must be nonnegative, got {0}")]
    NegativeBudget(f64),
    #[error(
        "graph has {n} nodes, too many for exact removal paths; supply a node ordering (--order-file)"
    )]
    NeedOrder { n: usize },
    #[error("every replication was censored; no extinction times to average")]
    AllRunsCensored,
    #[error("sweep requires at least one budget")]
    EmptySweep,
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Crusade(#[from] CrusadeError),
    #[error(transparent)]
    Cure(#[from] CureError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("could not read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// How to obtain the graph under study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphSpec {
    Line(usize),
    Grid(usize, usize),
    Complete(usize),
    File(PathBuf),
}

impl GraphSpec {
    /// Accepts `line:N`, `grid:RxC`, `complete:N`; anything else is treated
    /// as a path to an edge-list file.
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let bad = || ExperimentError::BadGraphSpec(s.to_string());
        if let Some(rest) = s.strip_prefix("line:") {
            return rest.parse().map(GraphSpec::Line).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("grid:") {
            let (r, c) = rest.split_once('x').ok_or_else(bad)?;
            let rows = r.parse().map_err(|_| bad())?;
            let cols = c.parse().map_err(|_| bad())?;
            return Ok(GraphSpec::Grid(rows, cols));
        }
        if let Some(rest) = s.strip_prefix("complete:") {
            return rest.parse().map(GraphSpec::Complete).map_err(|_| bad());
        }
        Ok(GraphSpec::File(PathBuf::from(s)))
    }

    pub fn build(&self) -> Result<Graph, ExperimentError> {
        match self {
            GraphSpec::Line(n) => Ok(Graph::line(*n)?),
            GraphSpec::Grid(r, c) => Ok(Graph::grid(*r, *c)?),
            GraphSpec::Complete(n) => Ok(Graph::complete(*n)?),
            GraphSpec::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(Graph::parse_edge_list(&text)?)
            }
        }
    }

    /// A node ordering with small frontier for generated graphs, used for
    /// restricted-mode removal paths when the graph is too large for the
    /// exact table. File graphs carry no such structure.
    fn natural_order(&self, g: &Graph) -> Option<Vec<NodeId>> {
        match *self {
            GraphSpec::Line(_) | GraphSpec::Complete(_) => Some((0..g.node_count()).collect()),
            GraphSpec::Grid(rows, cols) => {
                let mut order = Vec::with_capacity(rows * cols);
                if rows <= cols {
                    // sweep column by column so the frontier stays one column
                    for j in 0..cols {
                        for i in 0..rows {
                            order.push(i * cols + j);
                        }
                    }
                } else {
                    for i in 0..rows {
                        for j in 0..cols {
                            order.push(i * cols + j);
                        }
                    }
                }
                Some(order)
            }
            GraphSpec::File(_) => None,
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Line(n) => write!(f, "line:{n}"),
            GraphSpec::Grid(r, c) => write!(f, "grid:{r}x{c}"),
            GraphSpec::Complete(n) => write!(f, "complete:{n}"),
            GraphSpec::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicySpec {
    Cure,
    Uniform,
    Degree,
    None,
}

impl PolicySpec {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        match s {
            "cure" => Ok(PolicySpec::Cure),
            "uniform" => Ok(PolicySpec::Uniform),
            "degree" => Ok(PolicySpec::Degree),
            "none" => Ok(PolicySpec::None),
            _ => Err(ExperimentError::BadPolicySpec(s.to_string())),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolicySpec::Cure => "cure",
            PolicySpec::Uniform => "uniform",
            PolicySpec::Degree => "degree",
            PolicySpec::None => "none",
        };
        write!(f, "{s}")
    }
}

/// Initial infected set. `Fraction` includes each node independently with
/// the given probability, drawn from the replication's own random stream so
/// runs stay reproducible end to end.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    All,
    List(Vec<NodeId>),
    Fraction(f64),
}

impl InitSpec {
    pub fn parse(s: &str) -> Result<Self, ExperimentError> {
        let bad = || ExperimentError::BadInitSpec(s.to_string());
        if s == "all" {
            return Ok(InitSpec::All);
        }
        if let Some(rest) = s.strip_prefix("list:") {
            let nodes = rest
                .split(',')
                .map(|t| t.trim().parse::<NodeId>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            if nodes.is_empty() {
                return Err(bad());
            }
            return Ok(InitSpec::List(nodes));
        }
        if let Some(rest) = s.strip_prefix("frac:") {
            let p: f64 = rest.parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&p) {
                return Err(bad());
            }
            return Ok(InitSpec::Fraction(p));
        }
        Err(bad())
    }

    pub fn realize(&self, g: &Graph, rng: &mut RngStream) -> Bag {
        match self {
            InitSpec::All => g.full_bag(),
            InitSpec::List(nodes) => nodes.iter().copied().collect(),
            InitSpec::Fraction(p) => {
                let mut bag = Bag::new();
                for v in 0..g.node_count() {
                    if rng.uniform() <= *p {
                        bag.insert(v);
                    }
                }
                bag
            }
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::All => write!(f, "all"),
            InitSpec::List(nodes) => {
                let parts: Vec<String> = nodes.iter().map(|v| v.to_string()).collect();
                write!(f, "list:{}", parts.join(","))
            }
            InitSpec::Fraction(p) => write!(f, "frac:{p}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub policy: PolicySpec,
    pub budget: f64,
    pub init: InitSpec,
    pub replications: u64,
    pub base_seed: u64,
    pub caps: Caps,
    /// Explicit whole-graph removal ordering for restricted-mode paths;
    /// overrides the exact table even on small graphs.
    pub order: Option<Arc<[NodeId]>>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, policy: PolicySpec, budget: f64) -> Self {
        ExperimentConfig {
            graph,
            policy,
            budget,
            init: InitSpec::All,
            replications: 1000,
            base_seed: 0,
            caps: Caps::default(),
            order: None,
            out: None,
        }
    }
}

enum ResolvedPolicy {
    Cure(CureConfig),
    Uniform(f64),
    Degree(f64),
    None,
}

struct ResolvedExperiment {
    graph: Arc<Graph>,
    policy: ResolvedPolicy,
    cutwidth: Option<usize>,
    order_width: Option<usize>,
}

impl ExperimentConfig {
    fn resolve(&self) -> Result<ResolvedExperiment, ExperimentError> {
        if self.replications == 0 {
            return Err(ExperimentError::ZeroReplications);
        }
        if self.budget < 0.0 {
            return Err(ExperimentError::NegativeBudget(self.budget));
        }
        let graph = Arc::new(self.graph.build()?);
        if let InitSpec::List(nodes) = &self.init {
            for &node in nodes {
                if node >= graph.node_count() {
                    return Err(ExperimentError::InitOutOfRange {
                        node,
                        n: graph.node_count(),
                    });
                }
            }
        }
        let mut cutwidth = None;
        let mut order_width = None;
        let policy = match self.policy {
            PolicySpec::Cure => {
                let mode = if let Some(order) = &self.order {
                    CrusadeMode::Restricted(order.clone())
                } else if graph.node_count() <= EXACT_MODE_MAX_NODES {
                    let table = Arc::new(ImpedanceTable::build(&graph)?);
                    cutwidth = Some(table.cutwidth());
                    CrusadeMode::Exact(table)
                } else if let Some(order) = self.graph.natural_order(&graph) {
                    CrusadeMode::Restricted(order.into())
                } else {
                    return Err(ExperimentError::NeedOrder {
                        n: graph.node_count(),
                    });
                };
                let cfg = CureConfig::new(&graph, self.budget, mode)?;
                if let CrusadeMode::Restricted(order) = &cfg.mode {
                    order_width = Some(
                        crate::crusade::restrict_crusade(&graph, order, &graph.full_bag())?
                            .width(&graph),
                    );
                }
                ResolvedPolicy::Cure(cfg)
            }
            PolicySpec::Uniform => ResolvedPolicy::Uniform(self.budget),
            PolicySpec::Degree => ResolvedPolicy::Degree(self.budget),
            PolicySpec::None => ResolvedPolicy::None,
        };
        Ok(ResolvedExperiment {
            graph,
            policy,
            cutwidth,
            order_width,
        })
    }
}

/// One CSV row. Column order is part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct RepRecord {
    pub replication_id: u64,
    pub seed: u64,
    pub outcome: String,
    pub tau: f64,
    pub attempts: u64,
    pub excursions: u64,
    pub long_excursions: u64,
    pub waiting_time_total: f64,
    pub path_time_total: f64,
    pub excursion_time_total: f64,
}

/// Sample statistics with a normal-approximation confidence half-width.
/// With fewer than two samples the half-width is infinite. `censored`
/// counts runs excluded from the sample (no observed extinction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub count: u64,
    pub half_width_99: f64,
    pub censored: u64,
}

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Summary {
        let count = samples.len() as u64;
        if count == 0 {
            return Summary {
                mean: f64::NAN,
                variance: f64::NAN,
                count: 0,
                half_width_99: f64::INFINITY,
                censored: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        if count == 1 {
            return Summary {
                mean,
                variance: f64::NAN,
                count,
                half_width_99: f64::INFINITY,
                censored: 0,
            };
        }
        let variance =
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        Summary {
            mean,
            variance,
            count,
            half_width_99: Z_99 * (variance / count as f64).sqrt(),
            censored: 0,
        }
    }

    /// Statistics of 0/1 observations without materializing them.
    pub fn from_bernoulli(successes: u64, trials: u64) -> Summary {
        if trials == 0 {
            return Summary::from_samples(&[]);
        }
        let mean = successes as f64 / trials as f64;
        if trials == 1 {
            return Summary {
                mean,
                variance: f64::NAN,
                count: 1,
                half_width_99: f64::INFINITY,
                censored: 0,
            };
        }
        let variance = trials as f64 * mean * (1.0 - mean) / (trials - 1) as f64;
        Summary {
            mean,
            variance,
            count: trials,
            half_width_99: Z_99 * (variance / trials as f64).sqrt(),
            censored: 0,
        }
    }

    pub fn with_censored(mut self, censored: u64) -> Summary {
        self.censored = censored;
        self
    }
}

/// One excursion as reconstructed from trace tags: wall-clock duration and
/// whether it ended by scrapping the attempt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionEpisode {
    pub duration: f64,
    pub long: bool,
}

/// Per-phase time accounting for one trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseBreakdown {
    pub waiting_total: f64,
    pub path_total: f64,
    pub excursion_total: f64,
    /// One entry per attempt whose waiting period completed, including
    /// zero-length waits (the threshold already held on entry).
    pub complete_waits: Vec<f64>,
    /// Completed excursions; an excursion cut off by censoring is dropped.
    pub episodes: Vec<ExcursionEpisode>,
}

/// Reconstructs phase durations from the tags the policy attached to each
/// holding interval. Tags label the interval that *ends* at their event, so
/// a phase's duration is the sum of its tagged intervals. Baseline policies
/// emit no tags and yield all-zero breakdowns. In censored runs the final
/// untagged stretch up to the cap is not attributed to any phase.
pub fn analyze_phases(trace: &Trace) -> PhaseBreakdown {
    struct Interval {
        start: f64,
        end: f64,
        label: &'static str,
        attempt: u32,
    }
    let mut intervals = Vec::new();
    let mut prev = 0.0;
    for te in &trace.events {
        if let Some(tag) = te.phase {
            intervals.push(Interval {
                start: prev,
                end: te.event.at,
                label: tag.label,
                attempt: tag.attempt,
            });
        }
        prev = te.event.at;
    }

    let mut out = PhaseBreakdown::default();
    let mut waiting_by_attempt: BTreeMap<u32, f64> = BTreeMap::new();
    // Attempts that demonstrably got past their waiting period.
    let mut progressed: BTreeSet<u32> = BTreeSet::new();
    for iv in &intervals {
        let dt = iv.end - iv.start;
        match iv.label {
            "waiting" => {
                out.waiting_total += dt;
                *waiting_by_attempt.entry(iv.attempt).or_default() += dt;
            }
            "path" => {
                out.path_total += dt;
                progressed.insert(iv.attempt);
            }
            "excursion" => {
                out.excursion_total += dt;
                progressed.insert(iv.attempt);
            }
            _ => {}
        }
    }
    for &attempt in &progressed {
        out.complete_waits
            .push(waiting_by_attempt.get(&attempt).copied().unwrap_or(0.0));
    }

    // Excursion episodes are maximal runs of excursion-tagged intervals
    // within one attempt. The run is long when the next tagged interval
    // belongs to a later attempt; a trace that ends in extinction right at
    // an excursion's close counts as short (the stray set emptied).
    let mut i = 0;
    while i < intervals.len() {
        if intervals[i].label != "excursion" {
            i += 1;
            continue;
        }
        let attempt = intervals[i].attempt;
        let start = intervals[i].start;
        let mut j = i;
        while j + 1 < intervals.len()
            && intervals[j + 1].label == "excursion"
            && intervals[j + 1].attempt == attempt
        {
            j += 1;
        }
        let duration = intervals[j].end - start;
        if j + 1 < intervals.len() {
            out.episodes.push(ExcursionEpisode {
                duration,
                long: intervals[j + 1].attempt > attempt,
            });
        } else if trace.outcome.is_extinct() {
            out.episodes.push(ExcursionEpisode {
                duration,
                long: false,
            });
        }
        i = j + 1;
    }
    out
}

struct RepOutput {
    record: RepRecord,
    extinct: bool,
    counters: CureCounters,
    phases: PhaseBreakdown,
    trace: Option<Trace>,
}

/// Aggregated outcome of one experiment: per-replication rows plus pooled
/// quantities the bound checks consume.
pub struct Study {
    pub config: ExperimentConfig,
    pub graph: Arc<Graph>,
    /// Exact minimum path width over the whole graph, when it was computed.
    pub cutwidth: Option<usize>,
    /// Width of the restricted-mode ordering, when one was used.
    pub order_width: Option<usize>,
    pub records: Vec<RepRecord>,
    /// Extinction-time statistics over non-censored replications.
    pub extinction_time: Summary,
    pub attempts: u64,
    pub excursions: u64,
    pub long_excursions: u64,
    pub rate_bound_violations: u64,
    /// Durations of completed excursions, pooled across replications.
    pub excursion_durations: Vec<f64>,
    /// Completed waiting-period durations, pooled across replications.
    pub waiting_durations: Vec<f64>,
    /// Trace of replication 0, for inspection and debugging.
    pub first_trace: Option<Trace>,
}

fn build_pool() -> Result<rayon::ThreadPool, ExperimentError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        match value.parse::<usize>() {
            Ok(k) if k > 0 => builder = builder.num_threads(k),
            _ => log::warn!("ignoring unparsable {THREADS_ENV}={value:?}"),
        }
    }
    builder
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))
}

fn run_one(
    cfg: &ExperimentConfig,
    resolved: &ResolvedExperiment,
    rep: u64,
) -> Result<RepOutput, SimError> {
    let g = &resolved.graph;
    let mut rng = RngStream::new(cfg.base_seed, rep);
    let i0 = cfg.init.realize(g, &mut rng);
    let run_cfg = RunConfig {
        budget: cfg.budget,
        beta: 1.0,
        caps: cfg.caps,
    };
    let (trace, counters) = match &resolved.policy {
        ResolvedPolicy::Cure(cure_cfg) => {
            let mut policy = CurePolicy::new(g, cure_cfg.clone(), &i0);
            let trace = run(g, &mut policy, &i0, &run_cfg, &mut rng)?;
            (trace, policy.counters())
        }
        ResolvedPolicy::Uniform(budget) => {
            let mut policy = UniformCuring { budget: *budget };
            (
                run(g, &mut policy, &i0, &run_cfg, &mut rng)?,
                CureCounters::default(),
            )
        }
        ResolvedPolicy::Degree(budget) => {
            let mut policy = DegreeProportionalCuring { budget: *budget };
            (
                run(g, &mut policy, &i0, &run_cfg, &mut rng)?,
                CureCounters::default(),
            )
        }
        ResolvedPolicy::None => {
            let mut policy = NoCuring;
            (
                run(g, &mut policy, &i0, &run_cfg, &mut rng)?,
                CureCounters::default(),
            )
        }
    };
    let phases = analyze_phases(&trace);
    let outcome_label = match trace.outcome {
        Outcome::Extinct { .. } => "extinct".to_string(),
        Outcome::Censored { reason, .. } => format!("censored:{reason}"),
    };
    let record = RepRecord {
        replication_id: rep,
        seed: cfg.base_seed,
        outcome: outcome_label,
        tau: trace.outcome.at(),
        attempts: counters.attempts,
        excursions: counters.excursions,
        long_excursions: counters.long_excursions,
        waiting_time_total: phases.waiting_total,
        path_time_total: phases.path_total,
        excursion_time_total: phases.excursion_total,
    };
    Ok(RepOutput {
        record,
        extinct: trace.outcome.is_extinct(),
        counters,
        phases,
        trace: (rep == 0).then_some(trace),
    })
}

/// Runs all replications concurrently (independent random streams indexed
/// by replication id) and pools the results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Study, ExperimentError> {
    let resolved = cfg.resolve()?;
    let pool = build_pool()?;
    let outputs: Vec<RepOutput> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| run_one(cfg, &resolved, rep))
            .collect::<Result<Vec<_>, SimError>>()
    })?;

    let mut records = Vec::with_capacity(outputs.len());
    let mut taus = Vec::new();
    let mut censored = 0u64;
    let mut attempts = 0u64;
    let mut excursions = 0u64;
    let mut long_excursions = 0u64;
    let mut rate_bound_violations = 0u64;
    let mut excursion_durations = Vec::new();
    let mut waiting_durations = Vec::new();
    let mut first_trace = None;
    for output in outputs {
        if output.extinct {
            taus.push(output.record.tau);
        } else {
            censored += 1;
        }
        attempts += output.counters.attempts;
        excursions += output.counters.excursions;
        long_excursions += output.counters.long_excursions;
        rate_bound_violations += output.counters.rate_bound_violations;
        excursion_durations.extend(output.phases.episodes.iter().map(|e| e.duration));
        waiting_durations.extend(output.phases.complete_waits.iter().copied());
        if output.record.replication_id == 0 {
            first_trace = output.trace;
        }
        records.push(output.record);
    }
    if censored > 0 {
        log::warn!(
            "{censored} of {} replications were censored; their extinction \
             times are excluded from the mean",
            cfg.replications
        );
    }
    Ok(Study {
        config: cfg.clone(),
        graph: resolved.graph,
        cutwidth: resolved.cutwidth,
        order_width: resolved.order_width,
        records,
        extinction_time: Summary::from_samples(&taus).with_censored(censored),
        attempts,
        excursions,
        long_excursions,
        rate_bound_violations,
        excursion_durations,
        waiting_durations,
        first_trace,
    })
}

/// Mean extinction time with its confidence half-width. Errors when no
/// replication reached extinction.
pub fn estimate_extinction_time(cfg: &ExperimentConfig) -> Result<Summary, ExperimentError> {
    let study = run_experiment(cfg)?;
    if study.extinction_time.count == 0 {
        return Err(ExperimentError::AllRunsCensored);
    }
    Ok(study.extinction_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{CensorReason, Event, EventKind, PhaseTag, TraceEvent};

    #[test]
    fn graph_spec_round_trip() {
        for s in ["line:16", "grid:3x4", "complete:5"] {
            assert_eq!(GraphSpec::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(
            GraphSpec::parse("grid:4x4").unwrap(),
            GraphSpec::Grid(4, 4)
        );
        assert!(matches!(
            GraphSpec::parse("grid:4"),
            Err(ExperimentError::BadGraphSpec(_))
        ));
        assert!(matches!(
            GraphSpec::parse("line:x"),
            Err(ExperimentError::BadGraphSpec(_))
        ));
        assert_eq!(
            GraphSpec::parse("edges.txt").unwrap(),
            GraphSpec::File(PathBuf::from("edges.txt"))
        );
    }

    #[test]
    fn init_spec_parse_and_realize() {
        let g = Graph::line(4).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            InitSpec::parse("all").unwrap().realize(&g, &mut rng),
            g.full_bag()
        );
        let listed = InitSpec::parse("list:0,2").unwrap();
        assert_eq!(listed.to_string(), "list:0,2");
        assert_eq!(
            listed.realize(&g, &mut rng),
            [0, 2].into_iter().collect::<Bag>()
        );
        assert!(InitSpec::parse("frac:1.5").is_err());
        assert!(InitSpec::parse("list:").is_err());
        assert!(InitSpec::parse("half").is_err());
        // extreme fractions are degenerate deterministically
        let mut rng = RngStream::new(9, 1);
        assert!(InitSpec::Fraction(0.0).realize(&g, &mut rng).is_empty());
        let mut rng = RngStream::new(9, 1);
        assert_eq!(InitSpec::Fraction(1.0).realize(&g, &mut rng), g.full_bag());
    }

    #[test]
    fn fraction_init_is_reproducible_per_stream() {
        let g = Graph::grid(3, 3).unwrap();
        let spec = InitSpec::Fraction(0.5);
        let a = spec.realize(&g, &mut RngStream::new(5, 2));
        let b = spec.realize(&g, &mut RngStream::new(5, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn grid_natural_order_sweeps_the_short_side() {
        let spec = GraphSpec::Grid(2, 3);
        let g = spec.build().unwrap();
        // 2 rows <= 3 cols: column-major
        assert_eq!(spec.natural_order(&g), Some(vec![0, 3, 1, 4, 2, 5]));
        let tall = GraphSpec::Grid(3, 2);
        let g = tall.build().unwrap();
        assert_eq!(tall.natural_order(&g), Some(vec![0, 1, 2, 3, 4, 5]));
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.count, 4);
        let expected_hw = Z_99 * (5.0 / 3.0 / 4.0_f64).sqrt();
        assert!((s.half_width_99 - expected_hw).abs() < 1e-12);

        assert!(Summary::from_samples(&[]).mean.is_nan());
        assert_eq!(Summary::from_samples(&[7.0]).half_width_99, f64::INFINITY);
    }

    #[test]
    fn bernoulli_summary_matches_explicit_samples() {
        let samples: Vec<f64> = (0..40).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let explicit = Summary::from_samples(&samples);
        let implicit = Summary::from_bernoulli(8, 40);
        assert!((explicit.mean - implicit.mean).abs() < 1e-15);
        assert!((explicit.variance - implicit.variance).abs() < 1e-12);
    }

    fn tagged(at: f64, kind: EventKind, label: &'static str, attempt: u32) -> TraceEvent {
        TraceEvent {
            event: Event { at, kind },
            phase: Some(PhaseTag { label, attempt }),
        }
    }

    #[test]
    fn phase_analysis_reconstructs_durations() {
        // wait ends at 2.5; path 2.5..4.0; excursion 4.0..5.0 (short);
        // path resumes 5.0..6.0 ending in extinction
        let trace = Trace {
            initial: [0, 1].into_iter().collect(),
            events: vec![
                tagged(1.0, EventKind::Infection(2), "waiting", 1),
                tagged(2.5, EventKind::Infection(3), "waiting", 1),
                tagged(3.0, EventKind::Cure(0), "path", 1),
                tagged(4.0, EventKind::Infection(0), "path", 1),
                tagged(4.5, EventKind::Cure(0), "excursion", 1),
                tagged(5.0, EventKind::Cure(1), "excursion", 1),
                tagged(6.0, EventKind::Cure(2), "path", 1),
            ],
            outcome: Outcome::Extinct { at: 6.0 },
        };
        let phases = analyze_phases(&trace);
        assert!((phases.waiting_total - 2.5).abs() < 1e-12);
        assert!((phases.path_total - 2.5).abs() < 1e-12);
        assert!((phases.excursion_total - 1.0).abs() < 1e-12);
        assert_eq!(phases.complete_waits, vec![2.5]);
        assert_eq!(phases.episodes.len(), 1);
        assert!((phases.episodes[0].duration - 1.0).abs() < 1e-12);
        assert!(!phases.episodes[0].long);
    }

    #[test]
    fn phase_analysis_flags_long_excursions_and_zero_waits() {
        // excursion at attempt 1 ends long (next tag is attempt 2's path,
        // meaning attempt 2's wait had length zero)
        let trace = Trace {
            initial: [0, 1].into_iter().collect(),
            events: vec![
                tagged(1.0, EventKind::Cure(0), "path", 1),
                tagged(2.0, EventKind::Infection(0), "path", 1),
                tagged(3.5, EventKind::Infection(2), "excursion", 1),
                tagged(4.0, EventKind::Cure(0), "path", 2),
                tagged(5.0, EventKind::Cure(1), "path", 2),
                tagged(6.0, EventKind::Cure(2), "path", 2),
            ],
            outcome: Outcome::Extinct { at: 6.0 },
        };
        let phases = analyze_phases(&trace);
        assert_eq!(phases.episodes.len(), 1);
        assert!((phases.episodes[0].duration - 1.5).abs() < 1e-12);
        assert!(phases.episodes[0].long);
        // both attempts had zero-length waits
        assert_eq!(phases.complete_waits, vec![0.0, 0.0]);
    }

    #[test]
    fn phase_analysis_drops_censored_tails() {
        let trace = Trace {
            initial: [0].into_iter().collect(),
            events: vec![
                tagged(1.0, EventKind::Infection(1), "path", 1),
                tagged(2.0, EventKind::Infection(2), "excursion", 1),
            ],
            outcome: Outcome::Censored {
                at: 2.0,
                reason: CensorReason::MaxEvents,
            },
        };
        let phases = analyze_phases(&trace);
        // the excursion never completed, so no episode is recorded
        assert!(phases.episodes.is_empty());
        assert!((phases.excursion_total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn untagged_traces_analyze_to_zero() {
        let trace = Trace {
            initial: [0].into_iter().collect(),
            events: vec![TraceEvent {
                event: Event {
                    at: 1.0,
                    kind: EventKind::Cure(0),
                },
                phase: None,
            }],
            outcome: Outcome::Extinct { at: 1.0 },
        };
        assert_eq!(analyze_phases(&trace), PhaseBreakdown::default());
    }

    #[test]
    fn experiment_runs_and_pools_counters() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), PolicySpec::Cure, 32.0);
        cfg.replications = 50;
        cfg.base_seed = 11;
        let study = run_experiment(&cfg).unwrap();
        assert_eq!(study.records.len(), 50);
        assert_eq!(study.extinction_time.count, 50);
        assert_eq!(study.extinction_time.censored, 0);
        assert_eq!(study.cutwidth, Some(1));
        let attempts_from_rows: u64 = study.records.iter().map(|r| r.attempts).sum();
        assert_eq!(attempts_from_rows, study.attempts);
        assert!(study.extinction_time.mean > 0.0);
        assert!(study.first_trace.is_some());
    }

    #[test]
    fn experiment_is_deterministic() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(6), PolicySpec::Cure, 48.0);
        cfg.replications = 20;
        cfg.base_seed = 3;
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn no_curing_on_full_graph_stalls_every_run() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(3), PolicySpec::None, 0.0);
        cfg.replications = 5;
        let study = run_experiment(&cfg).unwrap();
        assert_eq!(study.extinction_time.count, 0);
        assert_eq!(study.extinction_time.censored, 5);
        for r in &study.records {
            assert_eq!(r.outcome, "censored:stalled");
            assert_eq!(r.tau, 0.0);
        }
        assert!(matches!(
            estimate_extinction_time(&cfg),
            Err(ExperimentError::AllRunsCensored)
        ));
    }

    #[test]
    fn baseline_policies_run_to_extinction() {
        for policy in [PolicySpec::Uniform, PolicySpec::Degree] {
            let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), policy, 16.0);
            cfg.replications = 30;
            cfg.base_seed = 21;
            let study = run_experiment(&cfg).unwrap();
            assert_eq!(study.extinction_time.count, 30);
            assert_eq!(study.attempts, 0, "baselines have no attempt structure");
            assert_eq!(study.excursion_durations.len(), 0);
        }
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), PolicySpec::Cure, 32.0);
        cfg.replications = 0;
        assert!(matches!(
            run_experiment(&cfg),
            Err(ExperimentError::ZeroReplications)
        ));
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), PolicySpec::Uniform, -1.0);
        cfg.replications = 1;
        assert!(matches!(
            run_experiment(&cfg),
            Err(ExperimentError::NegativeBudget(_))
        ));
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), PolicySpec::Cure, 32.0);
        cfg.init = InitSpec::List(vec![7]);
        assert!(matches!(
            run_experiment(&cfg),
            Err(ExperimentError::InitOutOfRange { node: 7, n: 4 })
        ));
    }

    #[test]
    fn explicit_order_forces_restricted_mode() {
        let mut cfg = ExperimentConfig::new(GraphSpec::Line(4), PolicySpec::Cure, 32.0);
        cfg.replications = 10;
        cfg.order = Some(Arc::from(vec![0, 1, 2, 3]));
        let study = run_experiment(&cfg).unwrap();
        assert_eq!(study.cutwidth, None);
        assert_eq!(study.order_width, Some(1));
        assert_eq!(study.extinction_time.count, 10);
    }
}
