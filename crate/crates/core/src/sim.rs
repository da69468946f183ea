//! Event-driven simulation of the controlled SIS contact process.
//!
//! Healthy nodes get infected at rate `beta` times their number of infected
//! neighbors; infected nodes are cured at the rate the policy allocates to
//! them, subject to the total budget. Between events the curing vector is
//! constant, so holding times are exactly exponential and no discretization
//! is involved: the policy is consulted at time zero and after every event.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Bag, Graph, NodeId};

/// Slack allowed when checking the budget constraint, to absorb float error
/// from policies that split the budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("allocation total {total} exceeds budget {budget}")]
    BudgetExceeded { total: f64, budget: f64 },
    #[error("allocation puts positive rate on healthy node {node}")]
    RateOnHealthyNode { node: NodeId },
    #[error("event {event:?} is inconsistent with the current infected set")]
    InconsistentEvent { event: Event },
}

/// Reproducible random stream: a base seed plus a stream index, so each
/// replication draws from its own independent sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on (0, 1], safe to pass through `ln`.
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }
}

/// A curing-rate vector with sparse support. Rates are per node and
/// nonnegative; the simulator checks the budget and support at every event.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    rates: BTreeMap<NodeId, f64>,
}

impl Allocation {
    pub fn empty() -> Self {
        Allocation::default()
    }

    pub fn single(node: NodeId, rate: f64) -> Self {
        let mut a = Allocation::default();
        a.set(node, rate);
        a
    }

    pub fn set(&mut self, node: NodeId, rate: f64) {
        assert!(rate >= 0.0, "curing rates must be nonnegative");
        if rate > 0.0 {
            self.rates.insert(node, rate);
        } else {
            self.rates.remove(&node);
        }
    }

    pub fn rate(&self, node: NodeId) -> f64 {
        self.rates.get(&node).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.rates.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// `(node, rate)` pairs in ascending node order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.rates.iter().map(|(&v, &r)| (v, r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Infection(NodeId),
    Cure(NodeId),
}

impl EventKind {
    pub fn node(&self) -> NodeId {
        match *self {
            EventKind::Infection(v) | EventKind::Cure(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub at: f64,
    pub kind: EventKind,
}

/// Phase annotation a policy attaches to the interval ending at an event.
/// Opaque to the engine; the experiment harness interprets the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseTag {
    pub label: &'static str,
    pub attempt: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub event: Event,
    /// Phase the policy was in during the holding interval that ended here.
    pub phase: Option<PhaseTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorReason {
    MaxEvents,
    MaxTime,
    /// Total transition rate hit zero with infected nodes remaining (no
    /// curing and no healthy neighbors); the run can never progress.
    Stalled,
}

impl fmt::Display for CensorReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CensorReason::MaxEvents => write!(f, "max_events"),
            CensorReason::MaxTime => write!(f, "max_time"),
            CensorReason::Stalled => write!(f, "stalled"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Extinct { at: f64 },
    Censored { at: f64, reason: CensorReason },
}

impl Outcome {
    pub fn is_extinct(&self) -> bool {
        matches!(self, Outcome::Extinct { .. })
    }

    pub fn at(&self) -> f64 {
        match *self {
            Outcome::Extinct { at } | Outcome::Censored { at, .. } => at,
        }
    }
}

/// One simulation run: initial bag, event log, and how the run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub initial: Bag,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
}

impl Trace {
    /// Replays the event log from the initial bag, checking that every
    /// infection hits a healthy node with an infected neighbor and every cure
    /// hits an infected node. Returns the final infected set.
    pub fn replay(&self, g: &Graph) -> Result<Bag, SimError> {
        let mut infected = self.initial.clone();
        let mut last_time = 0.0;
        for te in &self.events {
            let ev = te.event;
            assert!(ev.at >= last_time, "event times must be non-decreasing");
            last_time = ev.at;
            let ok = match ev.kind {
                EventKind::Infection(v) => {
                    !infected.contains(v)
                        && g.neighbors(v).iter().any(|&u| infected.contains(u))
                        && infected.insert(v)
                }
                EventKind::Cure(v) => infected.remove(v),
            };
            if !ok {
                return Err(SimError::InconsistentEvent { event: ev });
            }
        }
        if self.outcome.is_extinct() && !infected.is_empty() {
            return Err(SimError::InconsistentEvent {
                event: self.events.last().expect("extinct trace has events").event,
            });
        }
        Ok(infected)
    }

    /// Line-delimited debug log: `time kind node phase`. Not a stable format.
    pub fn write_log<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let members: Vec<String> = self.initial.iter().map(|v| v.to_string()).collect();
        writeln!(w, "# initial {}", members.join(" "))?;
        for te in &self.events {
            let (kind, node) = match te.event.kind {
                EventKind::Infection(v) => ("infect", v),
                EventKind::Cure(v) => ("cure", v),
            };
            let phase = match te.phase {
                Some(tag) => format!("{}#{}", tag.label, tag.attempt),
                None => "-".to_string(),
            };
            writeln!(w, "{:.9} {} {} {}", te.event.at, kind, node, phase)?;
        }
        match self.outcome {
            Outcome::Extinct { at } => writeln!(w, "# extinct {at:.9}"),
            Outcome::Censored { at, reason } => writeln!(w, "# censored {at:.9} {reason}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub event_count: u64,
}

/// Caps that stop a run that cannot (or will not) reach extinction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Caps {
    pub max_events: u64,
    pub max_time: f64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_events: 10_000_000,
            max_time: f64::INFINITY,
        }
    }
}

/// Simulation parameters. `beta` is the per-edge infection rate; the model is
/// normalized to `beta = 1` and everything downstream assumes that, but it is
/// kept explicit so time rescaling can be sanity-checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub budget: f64,
    pub beta: f64,
    pub caps: Caps,
}

impl RunConfig {
    pub fn new(budget: f64) -> Self {
        RunConfig {
            budget,
            beta: 1.0,
            caps: Caps::default(),
        }
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = caps;
        self
    }
}

/// A curing policy. `allocate` is called at time zero and after every event;
/// the returned vector is held constant until the next event. `on_event`
/// runs after the event has been applied to the infected set.
pub trait Policy {
    fn allocate(&mut self, g: &Graph, infected: &Bag) -> Allocation;

    fn on_event(&mut self, _g: &Graph, _event: &Event, _infected_after: &Bag) {}

    /// Current phase annotation, recorded on the next event.
    fn phase(&self) -> Option<PhaseTag> {
        None
    }
}

/// Outcome of sampling a single transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Event(Event),
    /// No transition has positive rate; the state can never change again.
    Stalled,
}

/// Samples the next event of the contact process from `infected` under the
/// given curing vector. The holding time is exponential in the total rate
/// (inverse CDF on one uniform); the event is picked by a second uniform over
/// the cumulative rate vector, infections first in ascending node order, then
/// cures in ascending node order.
pub fn step(
    g: &Graph,
    infected: &Bag,
    now: f64,
    alloc: &Allocation,
    budget: f64,
    beta: f64,
    rng: &mut RngStream,
) -> Result<StepOutcome, SimError> {
    let total_alloc = alloc.total();
    if total_alloc > budget + BUDGET_TOLERANCE {
        return Err(SimError::BudgetExceeded {
            total: total_alloc,
            budget,
        });
    }
    for (node, _) in alloc.iter() {
        if !infected.contains(node) {
            return Err(SimError::RateOnHealthyNode { node });
        }
    }

    // Infection rate of a healthy node is beta times its infected neighbors;
    // summed over healthy nodes this is beta * cut(infected).
    let mut events: Vec<(EventKind, f64)> = Vec::new();
    let mut total_rate = 0.0;
    for v in 0..g.node_count() {
        if infected.contains(v) {
            continue;
        }
        let k = g.neighbors(v).iter().filter(|&&u| infected.contains(u)).count();
        if k > 0 {
            let rate = beta * k as f64;
            events.push((EventKind::Infection(v), rate));
            total_rate += rate;
        }
    }
    for (node, rate) in alloc.iter() {
        events.push((EventKind::Cure(node), rate));
        total_rate += rate;
    }

    if total_rate <= 0.0 {
        return Ok(StepOutcome::Stalled);
    }

    let dt = -rng.uniform().ln() / total_rate;
    let target = rng.uniform() * total_rate;
    let mut acc = 0.0;
    let mut chosen = events.len() - 1;
    for (i, &(_, rate)) in events.iter().enumerate() {
        acc += rate;
        if target <= acc {
            chosen = i;
            break;
        }
    }
    Ok(StepOutcome::Event(Event {
        at: now + dt,
        kind: events[chosen].0,
    }))
}

/// Runs the process from `i0` to extinction or a cap, consulting the policy
/// for a fresh allocation after every event.
pub fn run(
    g: &Graph,
    policy: &mut dyn Policy,
    i0: &Bag,
    cfg: &RunConfig,
    rng: &mut RngStream,
) -> Result<Trace, SimError> {
    let mut infected = i0.clone();
    let mut state = SimState {
        time: 0.0,
        event_count: 0,
    };
    let mut events = Vec::new();

    if infected.is_empty() {
        return Ok(Trace {
            initial: i0.clone(),
            events,
            outcome: Outcome::Extinct { at: 0.0 },
        });
    }

    loop {
        let alloc = policy.allocate(g, &infected);
        let tag = policy.phase();
        let event = match step(g, &infected, state.time, &alloc, cfg.budget, cfg.beta, rng)? {
            StepOutcome::Stalled => {
                return Ok(Trace {
                    initial: i0.clone(),
                    events,
                    outcome: Outcome::Censored {
                        at: state.time,
                        reason: CensorReason::Stalled,
                    },
                });
            }
            StepOutcome::Event(ev) => ev,
        };
        if event.at > cfg.caps.max_time {
            return Ok(Trace {
                initial: i0.clone(),
                events,
                outcome: Outcome::Censored {
                    at: cfg.caps.max_time,
                    reason: CensorReason::MaxTime,
                },
            });
        }

        let applied = match event.kind {
            EventKind::Infection(v) => infected.insert(v),
            EventKind::Cure(v) => infected.remove(v),
        };
        if !applied {
            return Err(SimError::InconsistentEvent { event });
        }
        state.time = event.at;
        state.event_count += 1;
        events.push(TraceEvent {
            event,
            phase: tag,
        });
        policy.on_event(g, &event, &infected);

        if infected.is_empty() {
            return Ok(Trace {
                initial: i0.clone(),
                events,
                outcome: Outcome::Extinct { at: state.time },
            });
        }
        if state.event_count >= cfg.caps.max_events {
            return Ok(Trace {
                initial: i0.clone(),
                events,
                outcome: Outcome::Censored {
                    at: state.time,
                    reason: CensorReason::MaxEvents,
                },
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct NoCuring;
    impl Policy for NoCuring {
        fn allocate(&mut self, _: &Graph, _: &Bag) -> Allocation {
            Allocation::empty()
        }
    }

    struct FullBudgetLowest {
        budget: f64,
    }
    impl Policy for FullBudgetLowest {
        fn allocate(&mut self, _: &Graph, infected: &Bag) -> Allocation {
            match infected.min() {
                Some(v) => Allocation::single(v, self.budget),
                None => Allocation::empty(),
            }
        }
    }

    fn single_node_graph() -> Graph {
        Graph::from_edges(1, []).unwrap()
    }

    #[test]
    fn stream_determinism() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.uniform(), b.uniform());
        }
        let mut c = RngStream::new(42, 4);
        assert_ne!(a.uniform(), c.uniform());
    }

    #[test]
    fn single_clock_cure_has_mean_one_over_r() {
        let g = single_node_graph();
        let infected: Bag = [0].into_iter().collect();
        let alloc = Allocation::single(0, 4.0);
        let mut rng = RngStream::new(7, 0);
        let reps = 20_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            match step(&g, &infected, 0.0, &alloc, 4.0, 1.0, &mut rng).unwrap() {
                StepOutcome::Event(ev) => {
                    assert_eq!(ev.kind, EventKind::Cure(0));
                    sum += ev.at;
                }
                StepOutcome::Stalled => panic!("positive rate cannot stall"),
            }
        }
        let mean = sum / reps as f64;
        // Exp(4): mean 1/4, sd 1/4; 3 sigma of the sample mean
        let tol = 3.0 * 0.25 / (reps as f64).sqrt();
        assert!((mean - 0.25).abs() < tol, "mean {mean}");
    }

    #[test]
    fn lone_boundary_edge_infects_with_probability_one() {
        let g = Graph::line(2).unwrap();
        let infected: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(11, 0);
        let reps = 20_000;
        let mut sum = 0.0;
        for _ in 0..reps {
            match step(&g, &infected, 0.0, &Allocation::empty(), 1.0, 1.0, &mut rng).unwrap() {
                StepOutcome::Event(ev) => {
                    assert_eq!(ev.kind, EventKind::Infection(1));
                    sum += ev.at;
                }
                StepOutcome::Stalled => panic!(),
            }
        }
        let mean = sum / reps as f64;
        let tol = 3.0 / (reps as f64).sqrt();
        assert!((mean - 1.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn competing_clocks_split_half_half() {
        // line(3), infected {1}: cut 2 vs cure rate 2
        let g = Graph::line(3).unwrap();
        let infected: Bag = [1].into_iter().collect();
        let alloc = Allocation::single(1, 2.0);
        let mut rng = RngStream::new(5, 0);
        let reps = 40_000;
        let mut cures = 0u32;
        for _ in 0..reps {
            match step(&g, &infected, 0.0, &alloc, 2.0, 1.0, &mut rng).unwrap() {
                StepOutcome::Event(ev) => {
                    if matches!(ev.kind, EventKind::Cure(1)) {
                        cures += 1;
                    }
                }
                StepOutcome::Stalled => panic!(),
            }
        }
        let freq = cures as f64 / reps as f64;
        let tol = 3.0 * 0.5 / (reps as f64).sqrt();
        assert!((freq - 0.5).abs() < tol, "freq {freq}");
    }

    #[test]
    fn step_validates_allocation() {
        let g = Graph::line(2).unwrap();
        let infected: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(1, 0);
        let over = Allocation::single(0, 2.0);
        assert!(matches!(
            step(&g, &infected, 0.0, &over, 1.0, 1.0, &mut rng),
            Err(SimError::BudgetExceeded { .. })
        ));
        let healthy = Allocation::single(1, 0.5);
        assert!(matches!(
            step(&g, &infected, 0.0, &healthy, 1.0, 1.0, &mut rng),
            Err(SimError::RateOnHealthyNode { node: 1 })
        ));
    }

    #[test]
    fn empty_initial_bag_is_immediately_extinct() {
        let g = Graph::line(4).unwrap();
        let mut rng = RngStream::new(0, 0);
        let trace = run(&g, &mut NoCuring, &Bag::new(), &RunConfig::new(1.0), &mut rng).unwrap();
        assert_eq!(trace.outcome, Outcome::Extinct { at: 0.0 });
        assert!(trace.events.is_empty());
    }

    #[test]
    fn no_curing_saturates_then_stalls() {
        let g = Graph::line(4).unwrap();
        let i0: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(3, 0);
        let cfg = RunConfig::new(1.0).with_caps(Caps {
            max_events: 100,
            max_time: f64::INFINITY,
        });
        let trace = run(&g, &mut NoCuring, &i0, &cfg, &mut rng).unwrap();
        match trace.outcome {
            Outcome::Censored { reason, .. } => assert_eq!(reason, CensorReason::Stalled),
            other => panic!("expected censoring, got {other:?}"),
        }
        // all nodes infected when the run stalls
        assert_eq!(trace.replay(&g).unwrap(), g.full_bag());
        assert_eq!(trace.events.len(), 3);
    }

    #[test]
    fn max_events_cap_censors() {
        // budget 0 and a policy that never cures on complete(3): infections
        // only, capped after one event
        let g = Graph::complete(3).unwrap();
        let i0: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(9, 0);
        let cfg = RunConfig::new(1.0).with_caps(Caps {
            max_events: 1,
            max_time: f64::INFINITY,
        });
        let trace = run(&g, &mut NoCuring, &i0, &cfg, &mut rng).unwrap();
        assert!(matches!(
            trace.outcome,
            Outcome::Censored {
                reason: CensorReason::MaxEvents,
                ..
            }
        ));
        assert_eq!(trace.events.len(), 1);
    }

    #[test]
    fn max_time_cap_censors_without_applying_the_event() {
        let g = single_node_graph();
        let i0: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(2, 0);
        let cfg = RunConfig::new(1e-6).with_caps(Caps {
            max_events: u64::MAX,
            max_time: 0.5,
        });
        let mut policy = FullBudgetLowest { budget: 1e-6 };
        let trace = run(&g, &mut policy, &i0, &cfg, &mut rng).unwrap();
        assert_eq!(
            trace.outcome,
            Outcome::Censored {
                at: 0.5,
                reason: CensorReason::MaxTime
            }
        );
        assert!(trace.events.is_empty());
        assert_eq!(trace.replay(&g).unwrap(), i0);
    }

    #[test]
    fn run_is_deterministic_per_stream() {
        let g = Graph::grid(2, 3).unwrap();
        let i0 = g.full_bag();
        let cfg = RunConfig::new(3.0);
        let mut a = RngStream::new(123, 7);
        let mut b = RngStream::new(123, 7);
        let ta = run(&g, &mut FullBudgetLowest { budget: 3.0 }, &i0, &cfg, &mut a).unwrap();
        let tb = run(&g, &mut FullBudgetLowest { budget: 3.0 }, &i0, &cfg, &mut b).unwrap();
        assert_eq!(ta, tb);
        let mut c = RngStream::new(123, 8);
        let tc = run(&g, &mut FullBudgetLowest { budget: 3.0 }, &i0, &cfg, &mut c).unwrap();
        assert_ne!(ta, tc);
    }

    #[test]
    fn cure_minus_infection_count_equals_initial_size() {
        let g = Graph::grid(2, 4).unwrap();
        let i0: Bag = [0, 3, 5].into_iter().collect();
        let cfg = RunConfig::new(6.0);
        for stream in 0..20 {
            let mut rng = RngStream::new(77, stream);
            let trace = run(&g, &mut FullBudgetLowest { budget: 6.0 }, &i0, &cfg, &mut rng).unwrap();
            assert!(trace.outcome.is_extinct());
            let cures = trace
                .events
                .iter()
                .filter(|te| matches!(te.event.kind, EventKind::Cure(_)))
                .count();
            let infections = trace.events.len() - cures;
            assert_eq!(cures - infections, i0.len());
            assert_eq!(trace.replay(&g).unwrap(), Bag::new());
        }
    }

    #[test]
    fn mean_extinction_time_of_single_node() {
        let g = single_node_graph();
        let i0: Bag = [0].into_iter().collect();
        let cfg = RunConfig::new(2.0);
        let reps = 20_000;
        let mut sum = 0.0;
        for stream in 0..reps {
            let mut rng = RngStream::new(31, stream);
            let trace = run(&g, &mut FullBudgetLowest { budget: 2.0 }, &i0, &cfg, &mut rng).unwrap();
            sum += trace.outcome.at();
        }
        let mean = sum / reps as f64;
        let tol = 3.0 * 0.5 / (reps as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean {mean}");
    }

    #[test]
    fn trace_log_round_trips_through_writer() {
        let g = Graph::line(2).unwrap();
        let i0: Bag = [0].into_iter().collect();
        let mut rng = RngStream::new(4, 0);
        let trace = run(&g, &mut FullBudgetLowest { budget: 5.0 }, &i0, &RunConfig::new(5.0), &mut rng)
            .unwrap();
        let mut buf = Vec::new();
        trace.write_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# initial 0\n"));
        assert!(text.contains("cure") || text.contains("infect"));
    }
}
