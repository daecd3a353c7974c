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


//! Partial edge colourings, a constructive Vizing colouring for multigraphs
//! of multiplicity at most two, and the two recolouring steps built on it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DegreeProfile, Graph, MultiGraph};

pub type Colour = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColouringError {
    #[error("no free colour for contracted edge {0}-{1}")]
    NoFreeColour(usize, usize),
    #[error("selected subgraph has max degree {found}, above the allowed {allowed}")]
    SelectedDegree { found: usize, allowed: usize },
    #[error("edge colouring used {used} colours, budget was {budget}")]
    OverBudget { used: Colour, budget: Colour },
}

/// Colour per edge id, `None` for uncoloured edges. Colours are `1..=palette`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialEdgeColouring {
    pub colours: Vec<Option<Colour>>,
    pub palette: Colour,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColouringJson {
    pub palette: Colour,
    pub colours: BTreeMap<String, Colour>,
    /// Per-vertex sorted colour sets, for audits.
    pub sets: Vec<Vec<Colour>>,
}

impl PartialEdgeColouring {
    pub fn uncoloured(num_edges: usize, palette: Colour) -> Self {
        PartialEdgeColouring {
            colours: vec![None; num_edges],
            palette,
        }
    }

    pub fn get(&self, e: usize) -> Option<Colour> {
        self.colours[e]
    }

    pub fn set(&mut self, e: usize, c: Colour) {
        self.colours[e] = Some(c);
    }

    pub fn clear(&mut self, e: usize) {
        self.colours[e] = None;
    }

    pub fn is_total(&self) -> bool {
        self.colours.iter().all(Option::is_some)
    }

    pub fn max_colour(&self) -> Colour {
        self.colours.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Sorted colours on the coloured edges at `u`.
    pub fn colour_set(&self, graph: &Graph, u: usize) -> Vec<Colour> {
        let mut s: Vec<Colour> = graph
            .incident_edges(u)
            .iter()
            .filter_map(|&e| self.colours[e])
            .collect();
        s.sort_unstable();
        s
    }

    /// Whether no vertex sees a repeated colour on its coloured edges.
    pub fn is_proper(&self, graph: &Graph) -> bool {
        (0..graph.n()).all(|u| {
            let s = self.colour_set(graph, u);
            s.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn is_proper_multi(&self, mg: &MultiGraph) -> bool {
        (0..mg.n()).all(|u| {
            let mut s: Vec<Colour> = mg.incident(u).iter().filter_map(|&e| self.colours[e]).collect();
            s.sort_unstable();
            s.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn to_json(&self, graph: &Graph) -> ColouringJson {
        let colours = graph
            .edges()
            .iter()
            .enumerate()
            .filter_map(|(e, &(u, v))| self.colours[e].map(|c| (format!("{u}-{v}"), c)))
            .collect();
        ColouringJson {
            palette: self.palette,
            colours,
            sets: (0..graph.n()).map(|u| self.colour_set(graph, u)).collect(),
        }
    }

    pub fn from_json(graph: &Graph, json: &ColouringJson) -> Option<Self> {
        let mut out = PartialEdgeColouring::uncoloured(graph.num_edges(), json.palette);
        for (key, &c) in &json.colours {
            let (a, b) = key.split_once('-')?;
            let e = graph.edge_id(a.parse().ok()?, b.parse().ok()?)?;
            out.set(e, c);
        }
        Some(out)
    }
}

/// Working state for the fan-and-chain colouring. Colours are 0-based here.
struct Vizing<'a> {
    mg: &'a MultiGraph,
    k: usize,
    col: Vec<Option<usize>>,
    at: Vec<Vec<Option<usize>>>,
}

impl<'a> Vizing<'a> {
    fn missing(&self, v: usize, c: usize) -> bool {
        self.at[v][c].is_none()
    }

    fn first_missing(&self, v: usize) -> usize {
        (0..self.k).find(|&c| self.missing(v, c)).expect("a free colour at every vertex")
    }

    fn assign(&mut self, e: usize, c: Option<usize>) {
        let (a, b) = self.mg.endpoints(e);
        if let Some(old) = self.col[e] {
            self.at[a][old] = None;
            self.at[b][old] = None;
        }
        self.col[e] = c;
        if let Some(c) = c {
            debug_assert!(self.at[a][c].is_none() && self.at[b][c].is_none());
            self.at[a][c] = Some(e);
            self.at[b][c] = Some(e);
        }
    }

    /// Recolours several edges at once, clearing first so intermediate states
    /// never collide.
    fn reassign(&mut self, changes: &[(usize, Option<usize>)]) {
        for &(e, _) in changes {
            self.assign(e, None);
        }
        for &(e, c) in changes {
            self.assign(e, c);
        }
    }

    /// Edges of the maximal path alternating `first`, `second`, `first`, ...
    /// starting at `start`.
    fn chain(&self, start: usize, first: usize, second: usize) -> (Vec<usize>, usize) {
        let mut edges = Vec::new();
        let mut v = start;
        let mut want = first;
        while let Some(e) = self.at[v][want] {
            edges.push(e);
            v = self.mg.other(e, v);
            want = if want == first { second } else { first };
        }
        (edges, v)
    }

    fn swap_chain(&mut self, edges: &[usize], a: usize, b: usize) {
        let changes: Vec<_> = edges
            .iter()
            .map(|&e| {
                let c = self.col[e].expect("chain edges are coloured");
                (e, Some(if c == a { b } else { a }))
            })
            .collect();
        self.reassign(&changes);
    }

    /// Rotates colours down the predecessor path ending at fan position `end`
    /// and colours the freed edge with `alpha`.
    fn shift(&mut self, fan_edges: &[usize], pred: &[usize], end: usize, alpha: usize) {
        let mut path = vec![end];
        while *path.last().unwrap() != 0 {
            path.push(pred[*path.last().unwrap()]);
        }
        path.reverse();
        let mut changes = Vec::with_capacity(path.len());
        for w in path.windows(2) {
            changes.push((fan_edges[w[0]], self.col[fan_edges[w[1]]]));
        }
        changes.push((fan_edges[end], Some(alpha)));
        self.reassign(&changes);
    }

    fn colour_edge(&mut self, e0: usize) {
        let (x, y0) = self.mg.endpoints(e0);
        let mut fan = vec![y0];
        let mut fan_edges = vec![e0];
        let mut pred = vec![0usize];
        let mut head = 0;
        if self.try_finish(x, &fan, &fan_edges, &pred, 0).is_some() {
            return;
        }
        while head < fan.len() {
            let y = fan[head];
            for beta in 0..self.k {
                if !self.missing(y, beta) {
                    continue;
                }
                let f = self.at[x][beta].expect("colours missing at fan vertices are used at x");
                let z = self.mg.other(f, x);
                if fan.contains(&z) {
                    continue;
                }
                fan.push(z);
                fan_edges.push(f);
                pred.push(head);
                if self.try_finish(x, &fan, &fan_edges, &pred, fan.len() - 1).is_some() {
                    return;
                }
            }
            head += 1;
        }
        unreachable!("fan exhausted without a shared missing colour");
    }

    /// Checks the newest fan vertex for a colour shared with `x` or with an
    /// earlier fan vertex, and finishes the colouring when one exists.
    fn try_finish(
        &mut self,
        x: usize,
        fan: &[usize],
        fan_edges: &[usize],
        pred: &[usize],
        p: usize,
    ) -> Option<()> {
        let yp = fan[p];
        if let Some(alpha) = (0..self.k).find(|&c| self.missing(x, c) && self.missing(yp, c)) {
            self.shift(fan_edges, pred, p, alpha);
            return Some(());
        }
        let (i, beta) = (0..p).find_map(|i| {
            (0..self.k)
                .find(|&c| self.missing(fan[i], c) && self.missing(yp, c))
                .map(|c| (i, c))
        })?;
        let alpha = self.first_missing(x);
        let (_, x_end) = self.chain(x, beta, alpha);
        if x_end != yp {
            let (edges, end) = self.chain(yp, alpha, beta);
            self.swap_chain(&edges, alpha, beta);
            if end == fan[i] {
                self.shift(fan_edges, pred, i, alpha);
            } else {
                self.shift(fan_edges, pred, p, alpha);
            }
        } else {
            let (edges, _) = self.chain(fan[i], alpha, beta);
            self.swap_chain(&edges, alpha, beta);
            self.shift(fan_edges, pred, i, alpha);
        }
        Some(())
    }
}

/// Proper colouring of every edge with at most `max_degree + multiplicity`
/// colours.
pub fn vizing_colour(mg: &MultiGraph) -> PartialEdgeColouring {
    let mu = mg.max_multiplicity().max(1);
    let k = mg.max_degree() + mu;
    let mut state = Vizing {
        mg,
        k,
        col: vec![None; mg.num_edges()],
        at: vec![vec![None; k]; mg.n()],
    };
    for e in 0..mg.num_edges() {
        state.colour_edge(e);
    }
    let colours = state.col.iter().map(|c| c.map(|c| c as Colour + 1)).collect();
    PartialEdgeColouring {
        colours,
        palette: k as Colour,
    }
}

/// Palette base used by the pipeline: the larger of the two maximum degrees.
pub fn base_delta(graph: &Graph, gprime: &MultiGraph) -> usize {
    graph.max_degree().max(gprime.max_degree())
}

/// Lifts a colouring of the contracted multigraph to the original graph. Each
/// contracted edge takes the smallest colour free at both of its endpoints,
/// so its endpoints share no other colour.
pub fn extend_to_original(
    graph: &Graph,
    gprime: &MultiGraph,
    cprime: &PartialEdgeColouring,
) -> Result<PartialEdgeColouring, ColouringError> {
    let palette = (base_delta(graph, gprime) + 2) as Colour;
    if cprime.max_colour() > palette {
        return Err(ColouringError::OverBudget {
            used: cprime.max_colour(),
            budget: palette,
        });
    }
    let mut c = PartialEdgeColouring::uncoloured(graph.num_edges(), palette);
    for e in 0..gprime.num_edges() {
        c.colours[gprime.origin(e)] = cprime.colours[e];
    }
    for &e in gprime.contracted_edges() {
        let (u, v) = graph.endpoints(e);
        let mut used = c.colour_set(graph, u);
        used.extend(c.colour_set(graph, v));
        let alpha = (1..=palette)
            .find(|a| !used.contains(a))
            .ok_or(ColouringError::NoFreeColour(u, v))?;
        c.set(e, alpha);
    }
    Ok(c)
}

/// Whether every contracted edge `uv` satisfies `S(u) ∩ S(v) = {c(uv)}`.
pub fn contracted_edges_separated(
    graph: &Graph,
    gprime: &MultiGraph,
    c: &PartialEdgeColouring,
) -> bool {
    gprime.contracted_edges().iter().all(|&e| {
        let (u, v) = graph.endpoints(e);
        let su = c.colour_set(graph, u);
        let common: Vec<_> = c
            .colour_set(graph, v)
            .into_iter()
            .filter(|x| su.contains(x))
            .collect();
        common == vec![c.get(e).unwrap_or(0)]
    })
}

/// Recolours the selected edges with fresh colours `base + 3 ..= base + q + 5`
/// and keeps every other edge.
pub fn recolour_selected(
    graph: &Graph,
    selected: &[usize],
    base: &PartialEdgeColouring,
    base_delta: usize,
    q: usize,
) -> Result<PartialEdgeColouring, ColouringError> {
    let sub_edges: Vec<(usize, usize)> = selected.iter().map(|&e| graph.endpoints(e)).collect();
    let sub = MultiGraph::from_edges(graph.n(), sub_edges).expect("selected edges are valid");
    let found = sub.max_degree();
    if found > q + 2 {
        return Err(ColouringError::SelectedDegree {
            found,
            allowed: q + 2,
        });
    }
    let fresh = vizing_colour(&sub);
    let offset = (base_delta + 2) as Colour;
    let mut out = base.clone();
    out.palette = (base_delta + q + 6) as Colour;
    for (i, &e) in selected.iter().enumerate() {
        out.set(e, offset + fresh.colours[i].expect("total colouring"));
    }
    Ok(out)
}

/// Big-vertex filter used when checking equal-degree edges after the big
/// phase.
pub fn distinguishes_big_pairs(graph: &Graph, profile: &DegreeProfile, c: &PartialEdgeColouring) -> bool {
    graph.edges().iter().all(|&(u, v)| {
        !(profile.is_big(u) && profile.is_big(v) && graph.degree(u) == graph.degree(v))
            || c.colour_set(graph, u) != c.colour_set(graph, v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{classify, complete, contract_pendant_pairs, cycle, Epsilon, Mode};
    use proptest::prelude::*;

    fn simple(g: &Graph) -> MultiGraph {
        MultiGraph::from_edges(g.n(), g.edges().to_vec()).unwrap()
    }

    #[test]
    fn five_cycle_needs_three() {
        let g = cycle(5);
        let c = vizing_colour(&simple(&g));
        assert!(c.is_total() && c.is_proper(&g));
        assert_eq!(c.max_colour(), 3);
    }

    #[test]
    fn complete_four_within_four() {
        let g = complete(4);
        let c = vizing_colour(&simple(&g));
        assert!(c.is_proper(&g));
        assert!(c.max_colour() <= 4);
    }

    #[test]
    fn double_edge_with_pendants() {
        // 0=1 doubled, pendants 0-2 and 1-3: delta 3, multiplicity 2
        let mg = MultiGraph::from_edges(4, vec![(0, 1), (0, 1), (0, 2), (1, 3)]).unwrap();
        assert_eq!(mg.max_degree(), 3);
        let c = vizing_colour(&mg);
        assert!(c.is_total() && c.is_proper_multi(&mg));
        assert!(c.max_colour() <= 5);
    }

    #[test]
    fn extension_is_identity_without_contraction() {
        let g = complete(5);
        let p = classify(&g, Epsilon::new(1, 10).unwrap(), Mode::Practical).unwrap();
        let mg = contract_pendant_pairs(&g, &p);
        let cp = vizing_colour(&mg);
        let c = extend_to_original(&g, &mg, &cp).unwrap();
        assert_eq!(c.colours, cp.colours);
    }

    #[test]
    fn extension_picks_smallest_free_colour() {
        // u=0, v=1 of degree 2 each with big neighbours 2 and 3 (degree 10)
        let mut edges = vec![(0, 1), (0, 2), (1, 3), (2, 3)];
        let mut next = 4;
        for hub in [2, 3] {
            for _ in 0..8 {
                edges.push((hub, next));
                next += 1;
            }
        }
        let g = Graph::from_edges(next, edges).unwrap();
        assert_eq!(g.max_degree(), 10);
        let p = classify(&g, Epsilon::new(1, 10).unwrap(), Mode::Practical).unwrap();
        let mg = contract_pendant_pairs(&g, &p);
        assert_eq!(mg.contracted_edges().len(), 1);
        let cp = vizing_colour(&mg);
        let c = extend_to_original(&g, &mg, &cp).unwrap();
        assert!(c.is_proper(&g));
        assert_eq!(c.palette, 12);
        let e = g.edge_id(0, 1).unwrap();
        let mut used = c.colour_set(&g, 0);
        used.extend(c.colour_set(&g, 1));
        used.retain(|&x| x != c.get(e).unwrap());
        let expect = (1..).find(|a| !used.contains(a)).unwrap();
        assert_eq!(c.get(e), Some(expect));
        assert!(contracted_edges_separated(&g, &mg, &c));
    }

    #[test]
    fn recolour_selected_cases() {
        let g = complete(6);
        let base = vizing_colour(&simple(&g));
        let same = recolour_selected(&g, &[], &base, 5, 13).unwrap();
        assert_eq!(same.colours, base.colours);

        let matching: Vec<usize> = [(0, 1), (2, 3), (4, 5)]
            .iter()
            .map(|&(u, v)| g.edge_id(u, v).unwrap())
            .collect();
        let out = recolour_selected(&g, &matching, &base, 5, 13).unwrap();
        for &e in &matching {
            assert_eq!(out.get(e), Some(8));
        }
        assert!(out.is_proper(&g));

        let all: Vec<usize> = (0..g.num_edges()).collect();
        let out = recolour_selected(&g, &all, &base, 5, 3).unwrap();
        assert!(out.is_proper(&g));
        assert!(out.colours.iter().all(|c| (8..=5 + 3 + 5).contains(&c.unwrap())));
        assert!(matches!(
            recolour_selected(&g, &all, &base, 5, 2),
            Err(ColouringError::SelectedDegree { found: 5, allowed: 4 })
        ));
    }

    fn multigraph_strategy() -> impl Strategy<Value = MultiGraph> {
        (3usize..14).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 0u8..3), 0..60).prop_map(move |raw| {
                let mut count = std::collections::HashMap::new();
                let mut edges = Vec::new();
                for (a, b, copies) in raw {
                    if a == b {
                        continue;
                    }
                    let key = (a.min(b), a.max(b));
                    let have: &mut usize = count.entry(key).or_default();
                    for _ in 0..copies {
                        if *have < 2 {
                            *have += 1;
                            edges.push(key);
                        }
                    }
                }
                MultiGraph::from_edges(n, edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn vizing_within_budget(mg in multigraph_strategy()) {
            let c = vizing_colour(&mg);
            prop_assert!(c.is_total());
            prop_assert!(c.is_proper_multi(&mg));
            let mu = mg.max_multiplicity().max(1);
            prop_assert!(c.max_colour() as usize <= mg.max_degree() + mu);
        }
    }
}
