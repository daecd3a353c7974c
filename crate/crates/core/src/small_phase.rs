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


//! Recolouring of the edges between small vertices.
//!
//! Edges of the subgraph induced by the small vertices that do not sit on an
//! isolated small-small edge are uncoloured and then coloured one at a time
//! in a fixed order, avoiding any colour that would make an endpoint's colour
//! set equal to that of a fully coloured neighbour of the same degree. When
//! the random choice hits such a colour anyway, two edges are uncoloured again.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colouring::{Colour, PartialEdgeColouring};
use crate::graph::{is_contractible, DegreeProfile, Graph, Mode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmallPhaseError {
    #[error("edge {u}-{v} has {found} available colours, fewer than the window {s}")]
    TooFewColours { u: usize, v: usize, found: usize, s: usize },
    #[error("no colour available for edge {u}-{v}")]
    NoColour { u: usize, v: usize },
    #[error("step cap {0} reached before every small edge was coloured")]
    StepCap(usize),
    #[error("dangerous neighbour {w} of {a} is not joined by an edge of the small subgraph")]
    OutsideSubgraph { a: usize, w: usize },
    #[error("vertex {a} has only {found} other small edges when handling a collision")]
    TooFewOthers { a: usize, found: usize },
}

/// Fixed data for a run.
#[derive(Debug, Clone)]
pub struct SmallContext<'a> {
    pub graph: &'a Graph,
    pub profile: &'a DegreeProfile,
    pub palette: Colour,
    pub mode: Mode,
    pub s_small: usize,
    aprime: Vec<bool>,
    /// Edge ids of the small subgraph, in colouring order.
    pub order: Vec<usize>,
    /// Small-subgraph edges at each vertex, in colouring order.
    local: Vec<Vec<usize>>,
}

impl<'a> SmallContext<'a> {
    pub fn new(graph: &'a Graph, profile: &'a DegreeProfile, palette: Colour, mode: Mode) -> Self {
        let mut aprime: Vec<bool> = (0..graph.n()).map(|u| profile.is_small(u)).collect();
        for e in 0..graph.num_edges() {
            if is_contractible(graph, profile, e) {
                let (u, v) = graph.endpoints(e);
                aprime[u] = false;
                aprime[v] = false;
            }
        }
        let order: Vec<usize> = (0..graph.num_edges())
            .filter(|&e| {
                let (u, v) = graph.endpoints(e);
                aprime[u] && aprime[v]
            })
            .collect();
        let mut local = vec![Vec::new(); graph.n()];
        for &e in &order {
            let (u, v) = graph.endpoints(e);
            local[u].push(e);
            local[v].push(e);
        }
        SmallContext {
            graph,
            profile,
            palette,
            mode,
            s_small: profile.eps.small_window(profile.delta),
            aprime,
            order,
            local,
        }
    }

    pub fn in_aprime(&self, u: usize) -> bool {
        self.aprime[u]
    }

    pub fn local_edges(&self, u: usize) -> &[usize] {
        &self.local[u]
    }

    /// Neighbours `w` of `u` other than `v` that would end up with the same
    /// colour set as `u` if the edge `uv` took colour `i`; returns `(w, i)`
    /// sorted by `w`.
    pub fn dangerous(&self, c: &PartialEdgeColouring, u: usize, v: usize) -> Vec<(usize, Colour)> {
        let g = self.graph;
        let su = c.colour_set(g, u);
        if su.len() + 1 != g.degree(u) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for &w in g.neighbours(u) {
            if w == v || !self.profile.is_small(w) || g.degree(w) != g.degree(u) {
                continue;
            }
            if g.incident_edges(w).iter().any(|&f| c.get(f).is_none()) {
                continue;
            }
            let sw = c.colour_set(g, w);
            let extra: Vec<Colour> = sw.iter().copied().filter(|x| su.binary_search(x).is_err()).collect();
            if extra.len() == 1 && su.iter().all(|x| sw.binary_search(x).is_ok()) {
                out.push((w, extra[0]));
            }
        }
        out
    }

    /// Colours offered for edge `e` under colouring `c`, after removing the
    /// single dangerous colour of an endpoint with exactly one dangerous
    /// neighbour. Also returns the dangerous lists of both endpoints.
    pub fn offered(&self, c: &PartialEdgeColouring, e: usize) -> Offer {
        let g = self.graph;
        let (u, v) = g.endpoints(e);
        let mut used = c.colour_set(g, u);
        used.extend(c.colour_set(g, v));
        let du = self.dangerous(c, u, v);
        let dv = self.dangerous(c, v, u);
        let mut removed = Vec::new();
        for d in [&du, &dv] {
            if d.len() == 1 {
                removed.push(d[0].1);
            }
        }
        let colours = (1..=self.palette)
            .filter(|x| !used.contains(x) && !removed.contains(x))
            .collect();
        Offer { colours, du, dv }
    }

    pub fn window(&self, e: usize, count: usize) -> Result<usize, SmallPhaseError> {
        let (u, v) = self.graph.endpoints(e);
        let w = match self.mode {
            Mode::Theory if count < self.s_small => {
                return Err(SmallPhaseError::TooFewColours { u, v, found: count, s: self.s_small })
            }
            Mode::Theory => self.s_small,
            Mode::Practical => count,
        };
        if w == 0 {
            return Err(SmallPhaseError::NoColour { u, v });
        }
        Ok(w)
    }

    /// The small-subgraph edge following `aw` in the cyclic order of the
    /// edges at `a` other than `skip`.
    pub fn successor(&self, a: usize, w: usize, skip: usize) -> Result<usize, SmallPhaseError> {
        let f: Vec<usize> = self.local[a].iter().copied().filter(|&x| x != skip).collect();
        let aw = self.graph.edge_id(a, w).expect("adjacent");
        let idx = f
            .iter()
            .position(|&x| x == aw)
            .ok_or(SmallPhaseError::OutsideSubgraph { a, w })?;
        if f.len() < 2 {
            return Err(SmallPhaseError::TooFewOthers { a, found: f.len() });
        }
        Ok(f[(idx + 1) % f.len()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Offer {
    pub colours: Vec<Colour>,
    pub du: Vec<(usize, Colour)>,
    pub dv: Vec<(usize, Colour)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallEventKind {
    #[serde(rename = "dangerous")]
    Dangerous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallEvent {
    #[serde(rename = "type")]
    pub kind: SmallEventKind,
    /// Endpoint whose colour set collided.
    pub endpoint: usize,
    /// The neighbour it collided with.
    pub w: usize,
    /// The two edges uncoloured: the edge just coloured, then its partner.
    pub uncoloured: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallStep {
    pub step: usize,
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    pub r: usize,
    pub window: usize,
    pub colour: Colour,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub event: Option<SmallEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallTrace {
    pub steps: Vec<SmallStep>,
}

impl SmallTrace {
    pub fn choices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.r).collect()
    }

    pub fn event_count(&self) -> usize {
        self.steps.iter().filter(|s| s.event.is_some()).count()
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("serializable"));
            out.push('\n');
        }
        out
    }
}

/// Current colouring plus the pool of uncoloured small-subgraph edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmallState {
    pub colouring: PartialEdgeColouring,
    /// Uncoloured edges, by edge id (which is also the colouring order).
    pub uncoloured: BTreeSet<usize>,
}

impl SmallState {
    /// Uncolours every edge of the small subgraph.
    pub fn new(ctx: &SmallContext, c2: &PartialEdgeColouring) -> Self {
        let mut colouring = c2.clone();
        for &e in &ctx.order {
            colouring.clear(e);
        }
        SmallState {
            colouring,
            uncoloured: ctx.order.iter().copied().collect(),
        }
    }

    pub fn done(&self) -> bool {
        self.uncoloured.is_empty()
    }

    pub fn step(
        &mut self,
        ctx: &SmallContext,
        step: usize,
        rng: &mut impl Rng,
    ) -> Result<SmallStep, SmallPhaseError> {
        self.step_inner(ctx, step, |w| Ok(rng.gen_range(0..w)))
    }

    pub fn step_with_choice(
        &mut self,
        ctx: &SmallContext,
        step: usize,
        r: usize,
    ) -> Result<SmallStep, SmallPhaseError> {
        self.step_inner(ctx, step, |w| {
            assert!(r < w, "choice outside the sampling window");
            Ok(r)
        })
    }

    fn step_inner(
        &mut self,
        ctx: &SmallContext,
        step: usize,
        choose: impl FnOnce(usize) -> Result<usize, SmallPhaseError>,
    ) -> Result<SmallStep, SmallPhaseError> {
        let e = *self.uncoloured.first().expect("an uncoloured edge");
        let (u, v) = ctx.graph.endpoints(e);
        let offer = ctx.offered(&self.colouring, e);
        let window = ctx.window(e, offer.colours.len())?;
        let r = choose(window)?;
        let colour = offer.colours[r];
        self.colouring.set(e, colour);
        self.uncoloured.remove(&e);
        let hit = |d: &[(usize, Colour)]| d.iter().find(|&&(_, i)| i == colour).map(|&(w, _)| w);
        let collision = match (hit(&offer.du), hit(&offer.dv)) {
            (Some(w), _) => Some((u, w)),
            (None, Some(w)) => Some((v, w)),
            (None, None) => None,
        };
        let event = match collision {
            None => None,
            Some((a, w)) => {
                let f = ctx.successor(a, w, e)?;
                self.colouring.clear(e);
                self.colouring.clear(f);
                self.uncoloured.insert(e);
                self.uncoloured.insert(f);
                Some(SmallEvent {
                    kind: SmallEventKind::Dangerous,
                    endpoint: a,
                    w,
                    uncoloured: [e, f],
                })
            }
        };
        Ok(SmallStep {
            step,
            edge: e,
            u,
            v,
            r,
            window,
            colour,
            event,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallPhaseConfig {
    pub seed: u64,
    pub mode: Mode,
    pub step_cap: usize,
}

pub fn run_small_phase(
    graph: &Graph,
    profile: &DegreeProfile,
    c2: &PartialEdgeColouring,
    cfg: &SmallPhaseConfig,
) -> Result<(PartialEdgeColouring, SmallTrace), SmallPhaseError> {
    let ctx = SmallContext::new(graph, profile, c2.palette, cfg.mode);
    let mut state = SmallState::new(&ctx, c2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = SmallTrace::default();
    while !state.done() {
        if trace.steps.len() >= cfg.step_cap {
            return Err(SmallPhaseError::StepCap(cfg.step_cap));
        }
        let rec = state.step(&ctx, trace.steps.len(), &mut rng)?;
        trace.steps.push(rec);
    }
    Ok((state.colouring, trace))
}

/// Runs at most `steps` iterations; the trace is returned even on failure.
pub fn run_small_steps(
    ctx: &SmallContext,
    c2: &PartialEdgeColouring,
    seed: u64,
    steps: usize,
) -> (SmallState, SmallTrace, Option<SmallPhaseError>) {
    let mut state = SmallState::new(ctx, c2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SmallTrace::default();
    while trace.steps.len() < steps && !state.done() {
        match state.step(ctx, trace.steps.len(), &mut rng) {
            Ok(rec) => trace.steps.push(rec),
            Err(e) => return (state, trace, Some(e)),
        }
    }
    (state, trace, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{classify, gen_random_graph, GraphModel};

    /// Colours the listed edges of a graph on `core` vertices, adds a separate
    /// star with 20 leaves so every core vertex is small.
    fn gadget(core: usize, coloured: &[(usize, usize, Colour)], blank: &[(usize, usize)]) -> (Graph, PartialEdgeColouring) {
        let mut edges: Vec<(usize, usize)> = coloured.iter().map(|&(a, b, _)| (a, b)).collect();
        edges.extend_from_slice(blank);
        for i in 0..20 {
            edges.push((core, core + 1 + i));
        }
        let g = Graph::from_edges(core + 21, edges).unwrap();
        let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 40);
        for &(a, b, col) in coloured {
            c.set(g.edge_id(a, b).unwrap(), col);
        }
        for i in 0..20 {
            c.set(g.edge_id(core, core + 1 + i).unwrap(), 20 + i as Colour);
        }
        (g, c)
    }

    fn ctx_for<'a>(g: &'a Graph, p: &'a DegreeProfile) -> SmallContext<'a> {
        SmallContext::new(g, p, 40, Mode::Practical)
    }

    fn profile(g: &Graph) -> DegreeProfile {
        classify(g, "0.1".parse().unwrap(), Mode::Practical).unwrap()
    }

    #[test]
    fn single_missing_colour_is_dangerous() {
        let base = [(0, 2, 2), (0, 3, 1), (2, 4, 1), (2, 5, 5)];
        let (g, c) = gadget(6, &base, &[(0, 1)]);
        let p = profile(&g);
        let ctx = ctx_for(&g, &p);
        assert_eq!(ctx.dangerous(&c, 0, 1), vec![(2, 5)]);
        // the lone dangerous colour is withheld
        let e = g.edge_id(0, 1).unwrap();
        assert!(!ctx.offered(&c, e).colours.contains(&5));

        let mut c2 = c.clone();
        c2.clear(g.edge_id(2, 5).unwrap());
        assert!(ctx.dangerous(&c2, 0, 1).is_empty());
    }

    #[test]
    fn degree_mismatch_is_not_dangerous() {
        let base = [(0, 2, 2), (0, 3, 1), (2, 4, 1), (2, 5, 5), (2, 6, 6)];
        let (g, c) = gadget(7, &base, &[(0, 1)]);
        let p = profile(&g);
        assert!(ctx_for(&g, &p).dangerous(&c, 0, 1).is_empty());
    }

    /// Vertices 0 and 1 joined by a blank edge; each has two dangerous
    /// neighbours, and colour 5 is dangerous for both.
    fn double_danger() -> (Graph, PartialEdgeColouring) {
        let coloured = [
            (0, 2, 1),
            (0, 3, 2),
            (2, 6, 2),
            (2, 7, 5),
            (3, 8, 1),
            (3, 9, 6),
            (1, 4, 3),
            (1, 5, 4),
            (4, 10, 4),
            (4, 11, 5),
            (5, 12, 3),
            (5, 13, 7),
        ];
        gadget(14, &coloured, &[(0, 1)])
    }

    #[test]
    fn two_dangerous_neighbours_keep_both_colours() {
        let (g, c) = double_danger();
        let p = profile(&g);
        let ctx = ctx_for(&g, &p);
        assert_eq!(ctx.dangerous(&c, 0, 1), vec![(2, 5), (3, 6)]);
        let offer = ctx.offered(&c, g.edge_id(0, 1).unwrap());
        assert!(offer.colours.contains(&5) && offer.colours.contains(&6));
    }

    #[test]
    fn simultaneous_danger_handles_the_lower_endpoint() {
        let (g, c) = double_danger();
        let p = profile(&g);
        let ctx = ctx_for(&g, &p);
        let e = g.edge_id(0, 1).unwrap();
        let offer = ctx.offered(&c, e);
        let r = offer.colours.iter().position(|&x| x == 5).unwrap();
        let mut st = SmallState {
            colouring: c,
            uncoloured: [e].into_iter().collect(),
        };
        let rec = st.step_with_choice(&ctx, 0, r).unwrap();
        let ev = rec.event.unwrap();
        assert_eq!((ev.endpoint, ev.w), (0, 2));
        assert_eq!(ev.uncoloured, [e, g.edge_id(0, 3).unwrap()]);
        assert_eq!(st.uncoloured.len(), 2);
    }

    #[test]
    fn successor_wraps_around() {
        let coloured = [(0, 2, 1), (0, 3, 2), (2, 4, 3), (3, 5, 3)];
        let (g, _) = gadget(6, &coloured, &[(0, 1)]);
        let p = profile(&g);
        let ctx = ctx_for(&g, &p);
        let uv = g.edge_id(0, 1).unwrap();
        assert_eq!(ctx.successor(0, 2, uv).unwrap(), g.edge_id(0, 3).unwrap());
        assert_eq!(ctx.successor(0, 3, uv).unwrap(), g.edge_id(0, 2).unwrap());
    }

    #[test]
    fn nothing_to_do_without_small_subgraph() {
        let g = crate::graph::complete(9);
        let p = profile(&g);
        let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 20);
        for e in 0..g.num_edges() {
            c.set(e, e as Colour + 1);
        }
        let cfg = SmallPhaseConfig { seed: 1, mode: Mode::Practical, step_cap: 10 };
        let (out, trace) = run_small_phase(&g, &p, &c, &cfg).unwrap();
        assert!(trace.steps.is_empty());
        assert_eq!(out, c);
    }

    #[test]
    fn seeded_runs_repeat() {
        let g = gen_random_graph(40, 4, 2, GraphModel::NearRegular).unwrap();
        let mut edges = g.edges().to_vec();
        for i in 0..20 {
            edges.push((0, 40 + i));
        }
        let g = Graph::from_edges(60, edges).unwrap();
        let p = profile(&g);
        let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 40);
        for e in 0..g.num_edges() {
            c.set(e, (e % 40) as Colour + 1);
        }
        let cfg = SmallPhaseConfig { seed: 8, mode: Mode::Practical, step_cap: 100_000 };
        let a = run_small_phase(&g, &p, &c, &cfg).unwrap();
        let b = run_small_phase(&g, &p, &c, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.0.is_proper(&g));
        assert!(a.1.steps.iter().all(|s| s.event.as_ref().is_none_or(|e| e.uncoloured[0] == s.edge)));
    }
}
