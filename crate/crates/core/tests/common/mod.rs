//! Shared helpers for integration tests: an independent continuous-time
//! Markov chain oracle for expected extinction times, and deterministic
//! small-graph generators.
//!
//! Compiled once per test binary, so not every binary uses every helper.
#![allow(dead_code)]

use curesim::graph::{Graph, NodeId};
use curesim::sim::RngStream;

/// Expected extinction time from `initial_mask` by first-step analysis.
///
/// Enumerates every nonempty infected set as a state, assembles the linear
/// system `R_S x_S - sum_T rate(S->T) x_T = 1` (the empty set is absorbing
/// with x = 0), and solves it densely with partial-pivot elimination.
/// `alloc` maps an infected mask to per-node curing rates; it must keep the
/// total rate positive whenever extinction is not yet reachable, otherwise
/// the expectation is infinite and this panics. Intended for n <= 8.
pub fn ctmc_mean_extinction(
    g: &Graph,
    initial_mask: u32,
    beta: f64,
    alloc: &dyn Fn(u32) -> Vec<f64>,
) -> f64 {
    let n = g.node_count();
    assert!(n <= 8, "oracle is dense in 2^n");
    assert!(initial_mask > 0 && (initial_mask >> n) == 0);
    let states = (1usize << n) - 1; // nonempty masks, state index = mask - 1
    let mut matrix = vec![vec![0.0f64; states]; states];
    let mut rhs = vec![1.0f64; states];

    for mask in 1..=states as u32 {
        let row = (mask - 1) as usize;
        let rates = alloc(mask);
        assert_eq!(rates.len(), n);
        let mut total = 0.0;
        for v in 0..n {
            let bit = 1u32 << v;
            if mask & bit != 0 {
                let rate = rates[v];
                assert!(rate >= 0.0);
                if rate > 0.0 {
                    total += rate;
                    let target = mask & !bit;
                    if target != 0 {
                        matrix[row][(target - 1) as usize] -= rate;
                    }
                }
            } else {
                let infected_neighbors = g
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| mask & (1 << u) != 0)
                    .count();
                if infected_neighbors > 0 {
                    let rate = beta * infected_neighbors as f64;
                    total += rate;
                    matrix[row][(mask | bit) as usize - 1] -= rate;
                }
            }
        }
        assert!(total > 0.0, "state {mask:b} has no outgoing transition");
        matrix[row][row] += total;
    }

    // partial-pivot Gaussian elimination
    for col in 0..states {
        let pivot = (col..states)
            .max_by(|&a, &b| {
                matrix[a][col]
                    .abs()
                    .partial_cmp(&matrix[b][col].abs())
                    .unwrap()
            })
            .unwrap();
        matrix.swap(col, pivot);
        rhs.swap(col, pivot);
        let diagonal = matrix[col][col];
        assert!(diagonal.abs() > 1e-12, "singular system");
        for row in col + 1..states {
            let factor = matrix[row][col] / diagonal;
            if factor == 0.0 {
                continue;
            }
            for k in col..states {
                matrix[row][k] -= factor * matrix[col][k];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0f64; states];
    for row in (0..states).rev() {
        let mut acc = rhs[row];
        for k in row + 1..states {
            acc -= matrix[row][k] * x[k];
        }
        x[row] = acc / matrix[row][row];
    }
    x[(initial_mask - 1) as usize]
}

/// Per-node rates splitting `budget` equally over the infected set.
pub fn uniform_alloc(n: usize, budget: f64) -> impl Fn(u32) -> Vec<f64> {
    move |mask: u32| {
        let k = mask.count_ones() as f64;
        (0..n)
            .map(|v| {
                if mask & (1 << v) != 0 {
                    budget / k
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Per-node rates giving every infected node the same fixed rate.
pub fn fixed_rate_alloc(n: usize, rate: f64) -> impl Fn(u32) -> Vec<f64> {
    move |mask: u32| {
        (0..n)
            .map(|v| if mask & (1 << v) != 0 { rate } else { 0.0 })
            .collect()
    }
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "shorter cycles collapse to lines after dedup");
    let edges = (0..n).map(|v| (v, (v + 1) % n));
    Graph::from_edges(n, edges).unwrap()
}

pub fn star(n: usize) -> Graph {
    assert!(n >= 2);
    Graph::from_edges(n, (1..n).map(|v| (0, v))).unwrap()
}

/// Deterministic random connected graph: a random spanning tree (each node
/// attaches to a uniformly chosen earlier node) plus each remaining pair
/// independently with probability 1/3.
pub fn random_connected_graph(rng: &mut RngStream, n: usize) -> Graph {
    assert!(n >= 2);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    for v in 1..n {
        let parent = (rng.uniform() * v as f64).floor() as usize % v;
        edges.push((parent, v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.uniform() <= 1.0 / 3.0 {
                edges.push((a, b));
            }
        }
    }
    let g = Graph::from_edges(n, edges).unwrap();
    assert!(g.is_connected());
    g
}

/// The deterministic small-instance suite: paths, cycles, stars, and
/// complete graphs up to 7 nodes, plus 30 seeded random connected graphs.
pub fn small_instance_suite() -> Vec<Graph> {
    let mut suite = Vec::new();
    for n in 2..=7 {
        suite.push(Graph::line(n).unwrap());
        suite.push(star(n));
        suite.push(Graph::complete(n).unwrap());
        if n >= 3 {
            suite.push(cycle(n));
        }
    }
    let mut rng = RngStream::new(0xACCE55, 0);
    for i in 0..30 {
        let n = 2 + (i % 6); // 2..=7
        suite.push(random_connected_graph(&mut rng, n));
    }
    suite
}
