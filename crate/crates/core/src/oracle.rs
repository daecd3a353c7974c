// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


//! Ground-truth checks: properness, the distinguishing property, and exact
//! minimum palettes for tiny graphs by exhaustive search.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colouring::{Colour, PartialEdgeColouring};
use crate::graph::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("edge {0}-{1} is uncoloured")]
    Partial(usize, usize),
    #[error("isolated edge {0}-{1}: no distinguishing colouring exists")]
    IsolatedEdge(usize, usize),
    #[error("search budget of {0} nodes exhausted")]
    Budget(u64),
    #[error("graphs with more than {0} edges are out of reach for exhaustive search")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offending {
    pub u: usize,
    pub v: usize,
    pub su: Vec<Colour>,
    pub sv: Vec<Colour>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proper: bool,
    pub avd: bool,
    pub palette_used: Colour,
    pub offending: Vec<Offending>,
}

/// Checks properness at every vertex and distinct colour sets across every
/// edge of a fully coloured graph.
pub fn verify(graph: &Graph, c: &PartialEdgeColouring) -> Result<VerificationReport, OracleError> {
    if let Some(e) = (0..graph.num_edges()).find(|&e| c.get(e).is_none()) {
        let (u, v) = graph.endpoints(e);
        return Err(OracleError::Partial(u, v));
    }
    let sets: Vec<Vec<Colour>> = (0..graph.n()).map(|u| c.colour_set(graph, u)).collect();
    let clash: Vec<bool> = sets.iter().map(|s| s.windows(2).any(|w| w[0] == w[1])).collect();
    let mut offending = Vec::new();
    let mut proper = true;
    let mut avd = true;
    for &(u, v) in graph.edges() {
        let reason = if clash[u] || clash[v] {
            proper = false;
            Some("repeated colour at an endpoint")
        } else if sets[u] == sets[v] {
            avd = false;
            Some("equal colour sets")
        } else {
            None
        };
        if let Some(reason) = reason {
            offending.push(Offending {
                u,
                v,
                su: sets[u].clone(),
                sv: sets[v].clone(),
                reason: reason.to_string(),
            });
        }
    }
    Ok(VerificationReport {
        proper,
        avd: proper && avd,
        palette_used: c.max_colour(),
        offending,
    })
}

/// Second, independent distinguishing check built on hashed sets rather than
/// sorted lists.
pub fn avd_by_sets(graph: &Graph, c: &PartialEdgeColouring) -> bool {
    let sets: Vec<BTreeSet<Colour>> = (0..graph.n())
        .map(|u| {
            graph
                .neighbours(u)
                .iter()
                .filter_map(|&v| graph.edge_id(u, v).and_then(|e| c.get(e)))
                .collect()
        })
        .collect();
    let proper = (0..graph.n()).all(|u| sets[u].len() == graph.degree(u));
    let total = (0..graph.num_edges()).all(|e| c.get(e).is_some());
    total
        && proper
        && graph
            .edges()
            .iter()
            .all(|&(u, v)| sets[u].symmetric_difference(&sets[v]).next().is_some())
}

pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

struct Search<'a> {
    g: &'a Graph,
    k: u32,
    col: Vec<u32>,
    mask: Vec<u32>,
    filled: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn complete(&self, x: usize) -> bool {
        self.filled[x] == self.g.degree(x)
    }

    fn distinct_from_done_neighbours(&self, x: usize) -> bool {
        self.g
            .neighbours(x)
            .iter()
            .all(|&y| !self.complete(y) || self.mask[y] != self.mask[x])
    }

    fn go(&mut self, i: usize, used: u32) -> Result<bool, OracleError> {
        if i == self.g.num_edges() {
            return Ok(true);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::Budget(self.budget));
        }
        let (a, b) = self.g.endpoints(i);
        // new colours are interchangeable, so only the first unused one is tried
        let top = (used + 1).min(self.k);
        for c in 0..top {
            let bit = 1u32 << c;
            if (self.mask[a] | self.mask[b]) & bit != 0 {
                continue;
            }
            self.col[i] = c;
            self.mask[a] |= bit;
            self.mask[b] |= bit;
            self.filled[a] += 1;
            self.filled[b] += 1;
            let ok = [a, b]
                .iter()
                .all(|&x| !self.complete(x) || self.distinct_from_done_neighbours(x));
            if ok && self.go(i + 1, used.max(c + 1))? {
                return Ok(true);
            }
            self.mask[a] &= !bit;
            self.mask[b] &= !bit;
            self.filled[a] -= 1;
            self.filled[b] -= 1;
        }
        Ok(false)
    }
}

/// Whether a distinguishing colouring with `k` colours exists.
pub fn has_avd_colouring(graph: &Graph, k: u32, budget: u64) -> Result<bool, OracleError> {
    let mut s = Search {
        g: graph,
        k,
        col: vec![0; graph.num_edges()],
        mask: vec![0; graph.n()],
        filled: vec![0; graph.n()],
        nodes: 0,
        budget,
    };
    s.go(0, 0)
}

/// Smallest palette admitting a distinguishing colouring, or `None` when it
/// exceeds `max_colours`.
pub fn brute_force_avd_index(graph: &Graph, max_colours: u32) -> Result<Option<u32>, OracleError> {
    brute_force_avd_index_with_budget(graph, max_colours, DEFAULT_SEARCH_BUDGET)
}

pub fn brute_force_avd_index_with_budget(
    graph: &Graph,
    max_colours: u32,
    budget: u64,
) -> Result<Option<u32>, OracleError> {
    if graph.num_edges() > 24 {
        return Err(OracleError::TooLarge(24));
    }
    if let Some(&e) = graph.isolated_edges().first() {
        let (u, v) = graph.endpoints(e);
        return Err(OracleError::IsolatedEdge(u, v));
    }
    let start = graph.max_degree().max(1) as u32;
    for k in start..=max_colours.min(31) {
        if has_avd_colouring(graph, k, budget)? {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Smallest proper edge-colouring palette, by the same search without the
/// distinguishing constraint.
pub fn brute_force_chromatic_index(graph: &Graph) -> u32 {
    fn go(g: &Graph, k: u32, i: usize, used: u32, mask: &mut [u32]) -> bool {
        if i == g.num_edges() {
            return true;
        }
        let (a, b) = g.endpoints(i);
        for c in 0..(used + 1).min(k) {
            let bit = 1 << c;
            if (mask[a] | mask[b]) & bit == 0 {
                mask[a] |= bit;
                mask[b] |= bit;
                if go(g, k, i + 1, used.max(c + 1), mask) {
                    return true;
                }
                mask[a] &= !bit;
                mask[b] &= !bit;
            }
        }
        false
    }
    let mut k = graph.max_degree() as u32;
    loop {
        if go(graph, k, 0, 0, &mut vec![0; graph.n()]) {
            return k;
        }
        k += 1;
    }
}

fn canonical_code(n: usize, adj: &[u32]) -> u64 {
    let deg: Vec<u32> = adj.iter().map(|m| m.count_ones()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| deg[v]);
    let mut best = u64::MAX;
    permute_classes(&mut order, 0, &deg, &mut |perm| {
        let mut code = 0u64;
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if adj[perm[i]] >> perm[j] & 1 == 1 {
                    code |= 1 << bit;
                }
                bit += 1;
            }
        }
        best = best.min(code);
    });
    best
}

/// Visits every arrangement that permutes vertices only within runs of
/// equal degree.
fn permute_classes(order: &mut Vec<usize>, start: usize, deg: &[u32], f: &mut impl FnMut(&[usize])) {
    if start == order.len() {
        f(order);
        return;
    }
    let mut end = start;
    while end < order.len() && deg[order[end]] == deg[order[start]] {
        end += 1;
    }
    heap_permute(order, start, end, end - start, deg, f);
}

fn heap_permute(
    order: &mut Vec<usize>,
    start: usize,
    end: usize,
    k: usize,
    deg: &[u32],
    f: &mut impl FnMut(&[usize]),
) {
    if k <= 1 {
        permute_classes(order, end, deg, f);
        return;
    }
    for i in 0..k - 1 {
        heap_permute(order, start, end, k - 1, deg, f);
        let j = if k % 2 == 0 { start + i } else { start };
        order.swap(j, start + k - 1);
    }
    heap_permute(order, start, end, k - 1, deg, f);
}

fn connected(n: usize, adj: &[u32]) -> bool {
    let mut seen = 1u32;
    let mut stack = vec![0usize];
    while let Some(v) = stack.pop() {
        let fresh = adj[v] & !seen;
        seen |= fresh;
        for w in 0..n {
            if fresh >> w & 1 == 1 {
                stack.push(w);
            }
        }
    }
    seen.count_ones() as usize == n
}

/// All connected graphs on `n` vertices, one per isomorphism class.
pub fn connected_graphs(n: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for bits in 0u64..(1u64 << pairs.len()) {
        if (bits.count_ones() as usize) < n.saturating_sub(1) {
            continue;
        }
        let mut adj = vec![0u32; n];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if bits >> k & 1 == 1 {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
        if !connected(n, &adj) {
            continue;
        }
        if seen.insert(canonical_code(n, &adj)) {
            let edges = pairs.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &p)| p);
            out.push(Graph::from_edges(n, edges).expect("valid enumeration"));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub delta: usize,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub graphs_checked: usize,
    /// Graphs whose minimum palette exceeds `delta + 2`.
    pub exceptions: Vec<SweepEntry>,
}

impl SweepReport {
    /// True when the five-cycle is the only graph above `delta + 2`, or there
    /// are none at all for sweeps below five vertices.
    pub fn only_five_cycle(&self) -> bool {
        self.exceptions.iter().all(|e| e.n == 5 && e.edges.len() == 5 && e.delta == 2)
            && self.exceptions.len() <= 1
    }
}

/// Exhaustive check of the `delta + 2` bound over connected graphs with
/// `3..=n_max` vertices.
pub fn conjecture_sweep(n_max: usize) -> Result<SweepReport, OracleError> {
    let mut report = SweepReport {
        graphs_checked: 0,
        exceptions: Vec::new(),
    };
    for n in 3..=n_max {
        for g in connected_graphs(n) {
            let delta = g.max_degree();
            // a search that gives up past delta + 3 is recorded one above it
            let index = brute_force_avd_index(&g, delta as u32 + 3)?.unwrap_or(delta as u32 + 4);
            report.graphs_checked += 1;
            if index as usize > delta + 2 {
                report.exceptions.push(SweepEntry {
                    n,
                    edges: g.edges().to_vec(),
                    delta,
                    index,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, cycle};
    use proptest::prelude::*;

    fn cycle_coloured(n: usize, colours: &[Colour]) -> (Graph, PartialEdgeColouring) {
        let g = cycle(n);
        let mut c = PartialEdgeColouring::uncoloured(n, *colours.iter().max().unwrap());
        for i in 0..n {
            c.set(g.edge_id(i, (i + 1) % n).unwrap(), colours[i]);
        }
        (g, c)
    }

    #[test]
    fn five_cycle_with_five_colours_passes() {
        let (g, c) = cycle_coloured(5, &[1, 2, 3, 4, 5]);
        let r = verify(&g, &c).unwrap();
        assert!(r.proper && r.avd && r.offending.is_empty());
        assert_eq!(r.palette_used, 5);
    }

    #[test]
    fn alternating_colours_are_flagged() {
        // proper, but vertices 1, 2 and 3 all see {1, 2}
        let (g, c) = cycle_coloured(5, &[1, 2, 1, 2, 3]);
        let r = verify(&g, &c).unwrap();
        assert!(r.proper && !r.avd);
        assert!(r.offending.iter().any(|o| (o.u, o.v) == (1, 2)));
        // the wrap repeats colour 1 at vertex 0
        let (g, c) = cycle_coloured(5, &[1, 2, 1, 2, 1]);
        let r = verify(&g, &c).unwrap();
        assert!(!r.proper && !r.avd && !r.offending.is_empty());
    }

    #[test]
    fn partial_colouring_is_rejected() {
        let g = cycle(4);
        let c = PartialEdgeColouring::uncoloured(4, 4);
        assert!(matches!(verify(&g, &c), Err(OracleError::Partial(..))));
    }

    #[test]
    fn small_exact_indices() {
        assert_eq!(brute_force_avd_index(&cycle(5), 8).unwrap(), Some(5));
        let p3 = Graph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(brute_force_avd_index(&p3, 8).unwrap(), Some(2));
        let c4 = brute_force_avd_index(&cycle(4), 8).unwrap().unwrap();
        assert!(c4 <= 4);
        assert_eq!(c4, 4);
        let k2 = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        assert!(matches!(brute_force_avd_index(&k2, 4), Err(OracleError::IsolatedEdge(0, 1))));
        assert_eq!(brute_force_avd_index(&complete(4), 8).unwrap(), Some(5));
    }

    #[test]
    fn enumeration_counts_match_known_values() {
        let counts: Vec<usize> = (2..=6).map(|n| connected_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 6, 21, 112]);
    }

    #[test]
    fn distinguishing_index_dominates_chromatic_index() {
        for n in 3..=5 {
            for g in connected_graphs(n) {
                let avd = brute_force_avd_index(&g, 10).unwrap().unwrap();
                assert!(avd >= brute_force_chromatic_index(&g));
            }
        }
    }

    #[test]
    fn sweeps_up_to_five_vertices() {
        let four = conjecture_sweep(4).unwrap();
        assert!(four.exceptions.is_empty());
        assert_eq!(four.graphs_checked, 8);
        let five = conjecture_sweep(5).unwrap();
        assert_eq!(five.exceptions.len(), 1);
        assert!(five.only_five_cycle());
        assert_eq!(five.exceptions[0].index, 5);
    }

    proptest! {
        #[test]
        fn two_checkers_agree(n in 3usize..9, bits in any::<u64>(), cols in prop::collection::vec(1u32..6, 40)) {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for v in u + 1..n {
                    if bits >> (k % 64) & 1 == 1 {
                        edges.push((u, v));
                    }
                    k += 1;
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 5);
            for e in 0..g.num_edges() {
                c.set(e, cols[e % cols.len()]);
            }
            let r = verify(&g, &c).unwrap();
            prop_assert_eq!(r.avd, avd_by_sets(&g, &c));
            prop_assert!(!r.avd || r.proper);
            prop_assert_eq!(r.offending.is_empty(), r.avd && r.proper);
        }
    }
}
