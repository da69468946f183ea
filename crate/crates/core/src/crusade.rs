//! Monotone crusades, width, and exact impedance / CutWidth.
//!
//! A crusade from a bag `A` to the empty set removes one node at a time; its
//! width is the largest cut seen along the way, and the impedance of `A` is
//! the smallest achievable width. The impedance of the full node set is the
//! CutWidth of the graph. Impedance values satisfy the recursion
//!
//! ```text
//! delta(A) = max( cut(A), min over v in A of delta(A - v) ),   delta(empty) = 0
//! ```
//!
//! which the memo table here solves exactly for graphs with at most
//! [`EXACT_MODE_MAX_NODES`] nodes.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph::{Bag, Graph, NodeId};

/// Largest node count for which the exact impedance table is built. The
/// recursion touches every subset of `V`, so this is inherently exponential.
pub const EXACT_MODE_MAX_NODES: usize = 30;

/// Largest bag the factorial brute-force oracle accepts.
pub const BRUTE_FORCE_MAX_BAG: usize = 9;

#[derive(Debug, Error)]
pub enum CrusadeError {
    #[error("removal order contains {node}, which is not in the start bag (or repeats)")]
    InvalidOrder { node: NodeId },
    #[error("graph has {n} nodes; exact impedance supports at most {max}", max = EXACT_MODE_MAX_NODES)]
    GraphTooLarge { n: usize },
    #[error("bag has {len} nodes; brute force supports at most {max}", max = BRUTE_FORCE_MAX_BAG)]
    BagTooLarge { len: usize },
    #[error("ordering is not a permutation of the node set")]
    NotAPermutation,
}

/// A monotone crusade: a start bag and the order in which nodes are removed
/// from it. A full crusade removes every node; a shorter order is a partial
/// crusade ending at a nonempty bag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crusade {
    start: Bag,
    order: Vec<NodeId>,
}

impl Crusade {
    pub fn new(start: Bag, order: Vec<NodeId>) -> Result<Self, CrusadeError> {
        let mut seen = Bag::new();
        for &v in &order {
            if !start.contains(v) || !seen.insert(v) {
                return Err(CrusadeError::InvalidOrder { node: v });
            }
        }
        Ok(Crusade { start, order })
    }

    pub fn empty() -> Self {
        Crusade {
            start: Bag::new(),
            order: Vec::new(),
        }
    }

    pub fn start(&self) -> &Bag {
        &self.start
    }

    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn is_full(&self) -> bool {
        self.order.len() == self.start.len()
    }

    /// Bag reached after the first `i` removals.
    pub fn bag_at(&self, i: usize) -> Bag {
        let mut bag = self.start.clone();
        for &v in &self.order[..i] {
            bag.remove(v);
        }
        bag
    }

    pub fn final_bag(&self) -> Bag {
        self.bag_at(self.order.len())
    }

    /// The bag sequence `ω_0 ⊃ ω_1 ⊃ …`, including the start bag.
    pub fn bags(&self) -> impl Iterator<Item = Bag> + '_ {
        let mut bag = Some(self.start.clone());
        let mut next = self.order.iter();
        std::iter::from_fn(move || {
            let current = bag.take()?;
            if let Some(&v) = next.next() {
                let mut following = current.clone();
                following.remove(v);
                bag = Some(following);
            }
            Some(current)
        })
    }

    /// Maximum cut over the crusade's bags, including the start bag.
    pub fn width(&self, g: &Graph) -> usize {
        self.bags().map(|bag| g.cut(&bag)).max().unwrap_or(0)
    }
}

/// Restriction of a full removal ordering of `V` to the bag `a`: the crusade
/// from `a` to the empty set that removes `a`'s nodes in the relative order
/// induced by `order_v`. Every intermediate cut along it is at most
/// `cut(a) + width(order_v as a crusade)`, which is the bound the CURE policy
/// relies on in restricted mode.
pub fn restrict_crusade(g: &Graph, order_v: &[NodeId], a: &Bag) -> Result<Crusade, CrusadeError> {
    let n = g.node_count();
    if order_v.len() != n {
        return Err(CrusadeError::NotAPermutation);
    }
    let mut seen = Bag::new();
    for &v in order_v {
        if v >= n || !seen.insert(v) {
            return Err(CrusadeError::NotAPermutation);
        }
    }
    let order: Vec<NodeId> = order_v.iter().copied().filter(|&v| a.contains(v)).collect();
    Crusade::new(a.clone(), order)
}

/// Exact minimum width over every removal order of `a`, by enumeration.
/// Factorial in `|a|`, so capped at [`BRUTE_FORCE_MAX_BAG`] nodes. This is
/// deliberately independent of the memo table: it is the oracle the table is
/// checked against.
pub fn brute_force_impedance(g: &Graph, a: &Bag) -> Result<usize, CrusadeError> {
    if a.len() > BRUTE_FORCE_MAX_BAG {
        return Err(CrusadeError::BagTooLarge { len: a.len() });
    }
    fn search(g: &Graph, bag: &mut Bag, width_so_far: usize) -> usize {
        if bag.is_empty() {
            return width_so_far;
        }
        let members: Vec<NodeId> = bag.iter().collect();
        let mut best = usize::MAX;
        for v in members {
            bag.remove(v);
            let w = search(g, bag, width_so_far.max(g.cut(bag)));
            bag.insert(v);
            best = best.min(w);
        }
        best
    }
    let mut bag = a.clone();
    let start_cut = g.cut(&bag);
    Ok(search(g, &mut bag, start_cut))
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    delta: u32,
    /// Argmin removal for the Bellman recursion; smallest node index on ties.
    witness: u32,
}

/// Memoized impedance values for every bag of one graph, filled once from the
/// full node set and immutable afterwards, so it can be shared across threads.
#[derive(Debug)]
pub struct ImpedanceTable {
    n: usize,
    neighbor_masks: Vec<u32>,
    entries: HashMap<u32, Entry>,
}

impl ImpedanceTable {
    /// Solves the impedance recursion for every subset of `V`. Errors if the
    /// graph is beyond exact range.
    pub fn build(g: &Graph) -> Result<Self, CrusadeError> {
        let n = g.node_count();
        if n > EXACT_MODE_MAX_NODES {
            return Err(CrusadeError::GraphTooLarge { n });
        }
        let neighbor_masks: Vec<u32> = (0..n)
            .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
            .collect();
        let mut table = ImpedanceTable {
            n,
            neighbor_masks,
            entries: HashMap::new(),
        };
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        table.solve(full);
        Ok(table)
    }

    fn cut_of_mask(&self, mask: u32) -> u32 {
        let mut cut = 0;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            cut += (self.neighbor_masks[v] & !mask).count_ones();
        }
        cut
    }

    fn solve(&mut self, mask: u32) -> u32 {
        if mask == 0 {
            return 0;
        }
        if let Some(entry) = self.entries.get(&mask) {
            return entry.delta;
        }
        let mut best_child = u32::MAX;
        let mut witness = 0;
        let mut rest = mask;
        while rest != 0 {
            let v = rest.trailing_zeros();
            rest &= rest - 1;
            let child = self.solve(mask & !(1 << v));
            if child < best_child {
                best_child = child;
                witness = v;
            }
        }
        let delta = self.cut_of_mask(mask).max(best_child);
        self.entries.insert(mask, Entry { delta, witness });
        delta
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    fn key(&self, bag: &Bag) -> u32 {
        let mask = bag
            .mask32()
            .expect("bag does not fit the exact-mode bitmask");
        assert!(
            self.n == 32 || mask < (1u32 << self.n),
            "bag is not a subset of the table's node set"
        );
        mask
    }

    /// The impedance δ(bag).
    pub fn delta(&self, bag: &Bag) -> usize {
        let mask = self.key(bag);
        if mask == 0 {
            0
        } else {
            self.entries[&mask].delta as usize
        }
    }

    /// The CutWidth `W = δ(V)`.
    pub fn cutwidth(&self) -> usize {
        self.delta(&Bag::full(self.n))
    }

    /// The stored argmin removal for a nonempty bag.
    pub fn witness(&self, bag: &Bag) -> Option<NodeId> {
        let mask = self.key(bag);
        if mask == 0 {
            None
        } else {
            Some(self.entries[&mask].witness as NodeId)
        }
    }

    /// Full crusade from `bag` to the empty set with width equal to `δ(bag)`,
    /// built by following the stored witnesses. The impedance is
    /// non-increasing along the result.
    pub fn optimal_crusade(&self, bag: &Bag) -> Crusade {
        let mut order = Vec::with_capacity(bag.len());
        let mut mask = self.key(bag);
        while mask != 0 {
            let v = self.entries[&mask].witness;
            order.push(v as NodeId);
            mask &= !(1 << v);
        }
        Crusade::new(bag.clone(), order).expect("witness chain is a valid order")
    }
}

/// Exact impedance of a bag, building a fresh table. Prefer holding an
/// [`ImpedanceTable`] when querying repeatedly.
pub fn impedance(g: &Graph, bag: &Bag) -> Result<usize, CrusadeError> {
    Ok(ImpedanceTable::build(g)?.delta(bag))
}

/// Exact CutWidth of the graph.
pub fn cutwidth(g: &Graph) -> Result<usize, CrusadeError> {
    Ok(ImpedanceTable::build(g)?.cutwidth())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(nodes: &[NodeId]) -> Bag {
        nodes.iter().copied().collect()
    }

    #[test]
    fn width_of_line_peelings() {
        let g = Graph::line(4).unwrap();
        let full = g.full_bag();
        let peel_right = Crusade::new(full.clone(), vec![3, 2, 1, 0]).unwrap();
        assert_eq!(peel_right.width(&g), 1);
        // cuts along {0,2,3}, {0,2}, {2} are 2, 3, 2
        let scattered = Crusade::new(full, vec![1, 3, 0, 2]).unwrap();
        assert_eq!(scattered.width(&g), 3);
        assert_eq!(Crusade::empty().width(&g), 0);
    }

    #[test]
    fn crusade_rejects_bad_orders() {
        let start = bag(&[0, 1]);
        assert!(Crusade::new(start.clone(), vec![0, 0]).is_err());
        assert!(Crusade::new(start.clone(), vec![2]).is_err());
        assert!(Crusade::new(start, vec![1, 0]).is_ok());
    }

    #[test]
    fn partial_crusade_bags() {
        let cr = Crusade::new(bag(&[0, 1, 2]), vec![1]).unwrap();
        assert!(!cr.is_full());
        assert_eq!(cr.final_bag(), bag(&[0, 2]));
        let bags: Vec<Bag> = cr.bags().collect();
        assert_eq!(bags, vec![bag(&[0, 1, 2]), bag(&[0, 2])]);
    }

    #[test]
    fn brute_force_matches_known_values() {
        let line4 = Graph::line(4).unwrap();
        assert_eq!(brute_force_impedance(&line4, &line4.full_bag()).unwrap(), 1);
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(brute_force_impedance(&k4, &k4.full_bag()).unwrap(), 4);
        // single-node bags: one-step crusade, width = cut
        let line6 = Graph::line(6).unwrap();
        for v in 0..6 {
            let single = bag(&[v]);
            assert_eq!(
                brute_force_impedance(&line6, &single).unwrap(),
                line6.cut(&single)
            );
        }
    }

    #[test]
    fn brute_force_rejects_large_bags() {
        let g = Graph::line(12).unwrap();
        assert!(matches!(
            brute_force_impedance(&g, &g.full_bag()),
            Err(CrusadeError::BagTooLarge { len: 12 })
        ));
    }

    #[test]
    fn impedance_line_is_one() {
        for n in 2..=12 {
            let g = Graph::line(n).unwrap();
            assert_eq!(impedance(&g, &g.full_bag()).unwrap(), 1, "line({n})");
        }
    }

    #[test]
    fn impedance_spot_values() {
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(impedance(&k4, &k4.full_bag()).unwrap(), 4);
        assert_eq!(impedance(&k4, &Bag::new()).unwrap(), 0);
        let k2 = Graph::complete(2).unwrap();
        assert_eq!(cutwidth(&k2).unwrap(), 1);
        assert_eq!(cutwidth(&Graph::line(8).unwrap()).unwrap(), 1);
    }

    #[test]
    fn impedance_rejects_large_graphs() {
        let g = Graph::line(31).unwrap();
        assert!(matches!(
            cutwidth(&g),
            Err(CrusadeError::GraphTooLarge { n: 31 })
        ));
    }

    #[test]
    fn optimal_crusade_attains_delta() {
        for g in [
            Graph::line(4).unwrap(),
            Graph::complete(3).unwrap(),
            Graph::grid(2, 3).unwrap(),
        ] {
            let table = ImpedanceTable::build(&g).unwrap();
            let full = g.full_bag();
            let cr = table.optimal_crusade(&full);
            assert!(cr.is_full());
            assert_eq!(cr.width(&g), table.delta(&full));
            // impedance never increases along an optimal crusade
            let deltas: Vec<usize> = cr.bags().map(|b| table.delta(&b)).collect();
            assert!(deltas.windows(2).all(|w| w[1] <= w[0]), "{deltas:?}");
        }
    }

    #[test]
    fn optimal_crusade_of_empty_bag() {
        let g = Graph::line(3).unwrap();
        let table = ImpedanceTable::build(&g).unwrap();
        let cr = table.optimal_crusade(&Bag::new());
        assert!(cr.order().is_empty());
        assert_eq!(table.witness(&Bag::new()), None);
    }

    #[test]
    fn complete3_all_orders_width_two() {
        let g = Graph::complete(3).unwrap();
        let table = ImpedanceTable::build(&g).unwrap();
        let cr = table.optimal_crusade(&g.full_bag());
        assert_eq!(cr.width(&g), 2);
        assert_eq!(brute_force_impedance(&g, &g.full_bag()).unwrap(), 2);
    }

    #[test]
    fn restrict_crusade_examples() {
        let g = Graph::line(4).unwrap();
        let cr = restrict_crusade(&g, &[3, 2, 1, 0], &bag(&[0, 2])).unwrap();
        assert_eq!(cr.order(), &[2, 0]);

        let full = g.full_bag();
        let cr = restrict_crusade(&g, &[3, 2, 1, 0], &full).unwrap();
        assert_eq!(cr.order(), &[3, 2, 1, 0]);

        let cr = restrict_crusade(&g, &[3, 2, 1, 0], &Bag::new()).unwrap();
        assert!(cr.order().is_empty());

        assert!(restrict_crusade(&g, &[0, 1, 2], &full).is_err());
        assert!(restrict_crusade(&g, &[0, 1, 2, 2], &full).is_err());
    }

    #[test]
    fn cut_is_a_lower_bound_for_delta() {
        let g = Graph::grid(2, 3).unwrap();
        let table = ImpedanceTable::build(&g).unwrap();
        for mask in 0u32..(1 << 6) {
            let b = Bag::from_mask32(mask);
            assert!(g.cut(&b) <= table.delta(&b));
        }
    }
}
