//! C ABI for the curing simulator.
//!
//! Conventions: every function returns a [`CuresimStatus`]; results go out
//! through pointer arguments. Handles (`CuresimGraph`, `CuresimImpedanceTable`)
//! are opaque and must be released with the matching `_free` function. Node
//! sets are passed as arrays of zero-based indices. `include/curesim.h` is
//! regenerated by the build script.

use std::ffi::CStr;
use std::os::raw::c_char;

use curesim::crusade::{CrusadeError, ImpedanceTable};
use curesim::experiments::{
    run_experiment, ExperimentConfig, ExperimentError, GraphSpec, InitSpec, PolicySpec,
};
use curesim::graph::{Bag, Graph};

/// Result code for every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuresimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    GraphTooLarge = 4,
    SimulationError = 5,
    BufferTooSmall = 6,
    Utf8Error = 7,
}

/// Opaque graph handle.
pub struct CuresimGraph {
    inner: Graph,
}

/// Opaque handle to a full impedance table for one graph.
pub struct CuresimImpedanceTable {
    inner: ImpedanceTable,
}

/// Monte Carlo estimate of the mean extinction time.
///
/// `count` is the number of runs that actually reached extinction and
/// therefore entered the mean; `censored` is the number that hit a cap.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CuresimSummary {
    pub mean: f64,
    pub variance: f64,
    pub half_width_99: f64,
    pub count: u64,
    pub censored: u64,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, CuresimStatus> {
    if ptr.is_null() {
        return Err(CuresimStatus::NullPointer);
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| CuresimStatus::Utf8Error)
}

unsafe fn read_bag(
    nodes: *const usize,
    len: usize,
    n: usize,
) -> Result<Bag, CuresimStatus> {
    if nodes.is_null() && len != 0 {
        return Err(CuresimStatus::NullPointer);
    }
    let mut bag = Bag::default();
    for i in 0..len {
        let v = *nodes.add(i);
        if v >= n {
            return Err(CuresimStatus::InvalidArgument);
        }
        bag.insert(v);
    }
    Ok(bag)
}

fn experiment_status(err: &ExperimentError) -> CuresimStatus {
    match err {
        ExperimentError::BadGraphSpec(_)
        | ExperimentError::BadPolicySpec(_)
        | ExperimentError::BadInitSpec(_) => CuresimStatus::ParseError,
        ExperimentError::InitOutOfRange { .. }
        | ExperimentError::ZeroReplications
        | ExperimentError::NegativeBudget(_)
        | ExperimentError::NeedOrder { .. }
        | ExperimentError::EmptySweep => CuresimStatus::InvalidArgument,
        _ => CuresimStatus::SimulationError,
    }
}

/// Builds a graph from a textual spec: `line:N`, `grid:RxC`, `complete:N`,
/// or a path to an edge-list file (`n m` header, then one `u v` pair per line).
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_parse(
    spec: *const c_char,
    out: *mut *mut CuresimGraph,
) -> CuresimStatus {
    if out.is_null() {
        return CuresimStatus::NullPointer;
    }
    let spec = match read_str(spec) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let built = GraphSpec::parse(spec).and_then(|g| g.build());
    match built {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CuresimGraph { inner }));
            CuresimStatus::Ok
        }
        Err(_) => CuresimStatus::ParseError,
    }
}

/// Builds a graph on `n` nodes from `pairs` edges stored as a flat array
/// `[u0, v0, u1, v1, ...]` of length `2 * pairs`. Duplicate edges are merged.
///
/// # Safety
/// `edges` must point to `2 * pairs` readable elements (may be NULL when
/// `pairs` is zero); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_from_edges(
    n: usize,
    edges: *const usize,
    pairs: usize,
    out: *mut *mut CuresimGraph,
) -> CuresimStatus {
    if out.is_null() || (edges.is_null() && pairs != 0) {
        return CuresimStatus::NullPointer;
    }
    let mut list = Vec::with_capacity(pairs);
    for i in 0..pairs {
        list.push((*edges.add(2 * i), *edges.add(2 * i + 1)));
    }
    match Graph::from_edges(n, list) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CuresimGraph { inner }));
            CuresimStatus::Ok
        }
        Err(_) => CuresimStatus::InvalidArgument,
    }
}

/// Releases a graph handle. NULL is ignored.
///
/// # Safety
/// `g` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_free(g: *mut CuresimGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_node_count(
    g: *const CuresimGraph,
    out: *mut usize,
) -> CuresimStatus {
    if g.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    *out = (*g).inner.node_count();
    CuresimStatus::Ok
}

/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_edge_count(
    g: *const CuresimGraph,
    out: *mut usize,
) -> CuresimStatus {
    if g.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    *out = (*g).inner.edge_count();
    CuresimStatus::Ok
}

/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn curesim_graph_max_degree(
    g: *const CuresimGraph,
    out: *mut usize,
) -> CuresimStatus {
    if g.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    *out = (*g).inner.max_degree();
    CuresimStatus::Ok
}

/// Number of edges with exactly one endpoint in the given node set.
///
/// # Safety
/// `g` and `out` must be valid; `nodes` must point to `len` readable elements
/// (may be NULL when `len` is zero).
#[no_mangle]
pub unsafe extern "C" fn curesim_cut(
    g: *const CuresimGraph,
    nodes: *const usize,
    len: usize,
    out: *mut usize,
) -> CuresimStatus {
    if g.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    let graph = &(*g).inner;
    match read_bag(nodes, len, graph.node_count()) {
        Ok(bag) => {
            *out = graph.cut(&bag);
            CuresimStatus::Ok
        }
        Err(status) => status,
    }
}

/// Tabulates the impedance of every node subset. Requires at most 30 nodes;
/// returns `GraphTooLarge` beyond that.
///
/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn curesim_table_build(
    g: *const CuresimGraph,
    out: *mut *mut CuresimImpedanceTable,
) -> CuresimStatus {
    if g.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    match ImpedanceTable::build(&(*g).inner) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CuresimImpedanceTable { inner }));
            CuresimStatus::Ok
        }
        Err(CrusadeError::GraphTooLarge { .. }) => CuresimStatus::GraphTooLarge,
        Err(_) => CuresimStatus::InvalidArgument,
    }
}

/// Releases a table handle. NULL is ignored.
///
/// # Safety
/// `t` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn curesim_table_free(t: *mut CuresimImpedanceTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Impedance of the whole node set: the cutwidth of the graph.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn curesim_cutwidth(
    t: *const CuresimImpedanceTable,
    out: *mut usize,
) -> CuresimStatus {
    if t.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    *out = (*t).inner.cutwidth();
    CuresimStatus::Ok
}

/// Impedance of one node set: the smallest achievable maximum cut over all
/// one-at-a-time removal orders.
///
/// # Safety
/// `t` and `out` must be valid; `nodes` must point to `len` readable elements
/// (may be NULL when `len` is zero).
#[no_mangle]
pub unsafe extern "C" fn curesim_impedance(
    t: *const CuresimImpedanceTable,
    nodes: *const usize,
    len: usize,
    out: *mut usize,
) -> CuresimStatus {
    if t.is_null() || out.is_null() {
        return CuresimStatus::NullPointer;
    }
    let table = &(*t).inner;
    match read_bag(nodes, len, table.node_count()) {
        Ok(bag) => {
            *out = table.delta(&bag);
            CuresimStatus::Ok
        }
        Err(status) => status,
    }
}

/// Writes a removal order achieving the impedance of the given node set into
/// `buf` (exactly `len` entries). `written` receives the entry count.
///
/// # Safety
/// `t` and `written` must be valid; `nodes` must point to `len` readable
/// elements; `buf` must have room for `buf_len` elements.
#[no_mangle]
pub unsafe extern "C" fn curesim_optimal_order(
    t: *const CuresimImpedanceTable,
    nodes: *const usize,
    len: usize,
    buf: *mut usize,
    buf_len: usize,
    written: *mut usize,
) -> CuresimStatus {
    if t.is_null() || written.is_null() || (buf.is_null() && buf_len != 0) {
        return CuresimStatus::NullPointer;
    }
    let table = &(*t).inner;
    let bag = match read_bag(nodes, len, table.node_count()) {
        Ok(bag) => bag,
        Err(status) => return status,
    };
    let order = table.optimal_crusade(&bag);
    let order = order.order();
    if buf_len < order.len() {
        return CuresimStatus::BufferTooSmall;
    }
    for (i, &v) in order.iter().enumerate() {
        *buf.add(i) = v;
    }
    *written = order.len();
    CuresimStatus::Ok
}

/// Runs `replications` independent simulations and summarizes the extinction
/// time. Specs use the same grammar as the CLI: graphs as in
/// [`curesim_graph_parse`], `policy` one of `cure`, `uniform`, `degree`,
/// `none`, and `init` one of `all`, `list:v1,v2,...`, `frac:p`.
///
/// # Safety
/// The three spec strings must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn curesim_estimate_extinction_time(
    graph: *const c_char,
    policy: *const c_char,
    budget: f64,
    init: *const c_char,
    replications: u64,
    seed: u64,
    out: *mut CuresimSummary,
) -> CuresimStatus {
    if out.is_null() {
        return CuresimStatus::NullPointer;
    }
    let parsed = (|| -> Result<ExperimentConfig, CuresimStatus> {
        let graph = GraphSpec::parse(read_str(graph)?).map_err(|e| experiment_status(&e))?;
        let policy = PolicySpec::parse(read_str(policy)?).map_err(|e| experiment_status(&e))?;
        let init = InitSpec::parse(read_str(init)?).map_err(|e| experiment_status(&e))?;
        let mut cfg = ExperimentConfig::new(graph, policy, budget);
        cfg.init = init;
        cfg.replications = replications;
        cfg.base_seed = seed;
        Ok(cfg)
    })();
    let cfg = match parsed {
        Ok(cfg) => cfg,
        Err(status) => return status,
    };
    match run_experiment(&cfg) {
        Ok(study) => {
            let s = &study.extinction_time;
            *out = CuresimSummary {
                mean: s.mean,
                variance: s.variance,
                half_width_99: s.half_width_99,
                count: s.count,
                censored: s.censored,
            };
            CuresimStatus::Ok
        }
        Err(err) => experiment_status(&err),
    }
}
