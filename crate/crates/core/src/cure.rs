//! The budgeted curing policy and baseline policies for comparison.
//!
//! The main policy organizes each run into *attempts*. An attempt starts
//! with a waiting period in which no curing happens until the boundary cut
//! of the infected set drops to at most r/8. It then fixes a removal path
//! (a shrinking bag sequence of minimal width) for the bag reached at the
//! end of the wait and follows it, pouring the whole budget on the next
//! node to remove. An infection during path-following opens an *excursion*:
//! the stray set D (infected nodes outside the next target bag) starts at
//! two nodes and performs a birth-death walk under full-budget curing. The
//! excursion ends short when D empties (the path resumes one step further)
//! or long when |D| reaches the bound K = ceil(r / 8Δ), which scraps the
//! attempt and starts a new one.

use std::sync::Arc;

use thiserror::Error;

use crate::crusade::{restrict_crusade, Crusade, CrusadeError, ImpedanceTable};
use crate::graph::{Bag, Graph, NodeId};
use crate::sim::{Allocation, Event, EventKind, PhaseTag, Policy};

#[derive(Debug, Error)]
pub enum CureError {
    #[error("curing budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("impedance table covers {table} nodes but the graph has {graph}")]
    TableSizeMismatch { table: usize, graph: usize },
    #[error(transparent)]
    BadOrdering(#[from] CrusadeError),
}

/// Where removal paths come from. Exact mode computes a minimal-width path
/// for the current bag from the impedance table; restricted mode cuts the
/// current bag out of one fixed whole-graph ordering, which scales past the
/// exact-table node limit at the cost of slightly wider paths.
#[derive(Debug, Clone)]
pub enum CrusadeMode {
    Exact(Arc<ImpedanceTable>),
    Restricted(Arc<[NodeId]>),
}

#[derive(Debug, Clone)]
pub struct CureConfig {
    pub budget: f64,
    /// Curing stays off while the boundary cut exceeds this (budget / 8).
    pub waiting_threshold: f64,
    /// Stray-set size at which an excursion is declared long (K).
    pub excursion_bound: usize,
    pub mode: CrusadeMode,
}

/// The long-excursion threshold K = ceil(budget / (8 Δ)), at least 1.
/// Edgeless graphs never see infections, so Δ is clamped to 1 there to keep
/// the division meaningful.
pub fn excursion_bound(budget: f64, max_degree: usize) -> usize {
    let delta = max_degree.max(1) as f64;
    ((budget / (8.0 * delta)).ceil() as usize).max(1)
}

impl CureConfig {
    /// Validates the mode against the graph and derives the thresholds.
    /// Warns (but does not fail) when the budget is below four times the
    /// best known path width, and when K < 2, in which case every excursion
    /// is long on arrival because the stray set starts at two nodes.
    pub fn new(g: &Graph, budget: f64, mode: CrusadeMode) -> Result<Self, CureError> {
        if !(budget > 0.0) {
            return Err(CureError::NonPositiveBudget(budget));
        }
        let width = match &mode {
            CrusadeMode::Exact(table) => {
                if table.node_count() != g.node_count() {
                    return Err(CureError::TableSizeMismatch {
                        table: table.node_count(),
                        graph: g.node_count(),
                    });
                }
                table.cutwidth()
            }
            CrusadeMode::Restricted(order) => {
                // Validates that the ordering is a permutation of the nodes;
                // its width is an upper bound on the true cutwidth.
                restrict_crusade(g, order, &g.full_bag())?.width(g)
            }
        };
        if budget < 4.0 * width as f64 {
            log::warn!(
                "budget {budget} is below 4x the path width {width}; \
                 extinction-time guarantees do not apply"
            );
        }
        let excursion_bound = excursion_bound(budget, g.max_degree());
        if excursion_bound < 2 {
            log::warn!(
                "excursion bound K = {excursion_bound} < 2: the stray set starts at \
                 size 2, so every excursion fails immediately"
            );
        }
        Ok(CureConfig {
            budget,
            waiting_threshold: budget / 8.0,
            excursion_bound,
            mode,
        })
    }

    fn path_for(&self, g: &Graph, bag: &Bag) -> Crusade {
        match &self.mode {
            CrusadeMode::Exact(table) => table.optimal_crusade(bag),
            CrusadeMode::Restricted(order) => restrict_crusade(g, order, bag)
                .expect("ordering validated when the config was built"),
        }
    }
}

#[derive(Debug, Clone)]
enum Phase {
    Waiting,
    PathFollowing {
        path: Crusade,
        position: usize,
    },
    Excursion {
        path: Crusade,
        position: usize,
        /// Next bag on the path; curing works to shrink the infected set
        /// back down to exactly this.
        target: Bag,
        /// Infected nodes outside the target, maintained incrementally.
        stray: Bag,
    },
}

/// Event counts accumulated over one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CureCounters {
    pub attempts: u64,
    pub segments: u64,
    pub excursions: u64,
    pub long_excursions: u64,
    /// Times the boundary cut exceeded budget/2 at an excursion event.
    /// The width bounds promise this stays at zero whenever the budget is
    /// at least four times the path width.
    pub rate_bound_violations: u64,
}

pub struct CurePolicy {
    cfg: CureConfig,
    phase: Phase,
    attempt: u32,
    counters: CureCounters,
}

impl CurePolicy {
    pub fn new(g: &Graph, cfg: CureConfig, i0: &Bag) -> Self {
        let mut policy = CurePolicy {
            cfg,
            phase: Phase::Waiting,
            attempt: 0,
            counters: CureCounters::default(),
        };
        policy.begin_attempt(g, i0);
        policy
    }

    pub fn config(&self) -> &CureConfig {
        &self.cfg
    }

    pub fn counters(&self) -> CureCounters {
        self.counters
    }

    pub fn attempt_index(&self) -> u32 {
        self.attempt
    }

    fn begin_attempt(&mut self, g: &Graph, infected: &Bag) {
        self.attempt += 1;
        self.counters.attempts += 1;
        self.phase = Phase::Waiting;
        // A wait can have length zero: the threshold is checked on entry.
        self.try_leave_waiting(g, infected);
    }

    fn try_leave_waiting(&mut self, g: &Graph, infected: &Bag) {
        if (g.cut(infected) as f64) <= self.cfg.waiting_threshold {
            let path = self.cfg.path_for(g, infected);
            debug_assert_eq!(path.start(), infected);
            self.counters.segments += 1;
            self.phase = Phase::PathFollowing { path, position: 0 };
        }
    }

    fn in_excursion(&self) -> bool {
        matches!(self.phase, Phase::Excursion { .. })
    }
}

impl Policy for CurePolicy {
    fn allocate(&mut self, _g: &Graph, infected: &Bag) -> Allocation {
        if infected.is_empty() {
            return Allocation::empty();
        }
        match &self.phase {
            Phase::Waiting => Allocation::empty(),
            Phase::PathFollowing { path, position } => {
                let next = path.order()[*position];
                debug_assert!(infected.contains(next));
                Allocation::single(next, self.cfg.budget)
            }
            Phase::Excursion { stray, .. } => {
                // Any stray node works; the lowest index keeps runs
                // reproducible.
                let chosen = stray.min().expect("stray set is nonempty mid-excursion");
                Allocation::single(chosen, self.cfg.budget)
            }
        }
    }

    fn on_event(&mut self, g: &Graph, event: &Event, infected_after: &Bag) {
        let was_excursion = self.in_excursion();
        match std::mem::replace(&mut self.phase, Phase::Waiting) {
            Phase::Waiting => {
                debug_assert!(matches!(event.kind, EventKind::Infection(_)));
                self.phase = Phase::Waiting;
                self.try_leave_waiting(g, infected_after);
            }
            Phase::PathFollowing { path, position } => match event.kind {
                EventKind::Cure(v) => {
                    debug_assert_eq!(v, path.order()[position]);
                    debug_assert_eq!(path.bag_at(position + 1), *infected_after);
                    self.phase = Phase::PathFollowing {
                        path,
                        position: position + 1,
                    };
                }
                EventKind::Infection(u) => {
                    let target = path.bag_at(position + 1);
                    let mut stray = Bag::new();
                    stray.insert(path.order()[position]);
                    stray.insert(u);
                    debug_assert_eq!(stray.len(), 2);
                    debug_assert_eq!(infected_after.difference(&target), stray);
                    self.counters.excursions += 1;
                    if stray.len() >= self.cfg.excursion_bound {
                        // With K <= 2 the stray set is too large on arrival.
                        self.counters.long_excursions += 1;
                        self.begin_attempt(g, infected_after);
                    } else {
                        self.phase = Phase::Excursion {
                            path,
                            position,
                            target,
                            stray,
                        };
                    }
                }
            },
            Phase::Excursion {
                path,
                position,
                target,
                mut stray,
            } => {
                match event.kind {
                    EventKind::Cure(v) => {
                        let removed = stray.remove(v);
                        debug_assert!(removed, "cured node must be a stray node");
                    }
                    EventKind::Infection(u) => {
                        debug_assert!(!target.contains(u), "target nodes are already infected");
                        stray.insert(u);
                    }
                }
                debug_assert_eq!(infected_after.difference(&target), stray);
                if stray.is_empty() {
                    // Short excursion: the infected set is back to the next
                    // path bag; continue with the next segment.
                    debug_assert_eq!(target, *infected_after);
                    if infected_after.is_empty() {
                        // Extinction coincided with the excursion's end; the
                        // engine stops before consulting the policy again.
                        self.phase = Phase::Waiting;
                    } else {
                        self.counters.segments += 1;
                        self.phase = Phase::PathFollowing {
                            path,
                            position: position + 1,
                        };
                    }
                } else if stray.len() >= self.cfg.excursion_bound {
                    self.counters.long_excursions += 1;
                    self.begin_attempt(g, infected_after);
                } else {
                    self.phase = Phase::Excursion {
                        path,
                        position,
                        target,
                        stray,
                    };
                }
            }
        }
        if (was_excursion || self.in_excursion())
            && (g.cut(infected_after) as f64) > self.cfg.budget / 2.0
        {
            self.counters.rate_bound_violations += 1;
        }
    }

    fn phase(&self) -> Option<PhaseTag> {
        let label = match self.phase {
            Phase::Waiting => "waiting",
            Phase::PathFollowing { .. } => "path",
            Phase::Excursion { .. } => "excursion",
        };
        Some(PhaseTag {
            label,
            attempt: self.attempt,
        })
    }
}

/// Splits the budget equally over all infected nodes.
pub struct UniformCuring {
    pub budget: f64,
}

impl Policy for UniformCuring {
    fn allocate(&mut self, _g: &Graph, infected: &Bag) -> Allocation {
        let k = infected.len();
        if k == 0 {
            return Allocation::empty();
        }
        let each = self.budget / k as f64;
        let mut alloc = Allocation::empty();
        for v in infected.iter() {
            alloc.set(v, each);
        }
        alloc
    }
}

/// Splits the budget over infected nodes proportionally to their degree,
/// falling back to a uniform split when every infected node is isolated.
pub struct DegreeProportionalCuring {
    pub budget: f64,
}

impl Policy for DegreeProportionalCuring {
    fn allocate(&mut self, g: &Graph, infected: &Bag) -> Allocation {
        let total_degree: usize = infected.iter().map(|v| g.degree(v)).sum();
        if total_degree == 0 {
            return UniformCuring {
                budget: self.budget,
            }
            .allocate(g, infected);
        }
        let mut alloc = Allocation::empty();
        for v in infected.iter() {
            alloc.set(v, self.budget * g.degree(v) as f64 / total_degree as f64);
        }
        alloc
    }
}

/// Control policy: no curing at all.
pub struct NoCuring;

impl Policy for NoCuring {
    fn allocate(&mut self, _g: &Graph, _infected: &Bag) -> Allocation {
        Allocation::empty()
    }
}
