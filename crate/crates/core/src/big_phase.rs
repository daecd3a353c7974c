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


//! Randomized selection of two neighbours per big vertex.
//!
//! Each big vertex `u` picks a pair `U+(u)` from its `d` lowest-index
//! neighbours. Edges from `u` to that pair are later recoloured with fresh
//! colours, which breaks most colour-set collisions between big vertices. Five
//! kinds of local conflict trigger resets; the remaining collisions (bad
//! edges) are fixed by recolouring one marked edge each.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colouring::{recolour_selected, Colour, ColouringError, PartialEdgeColouring};
use crate::graph::{fragile_edges, DegreeProfile, FragileEdges, Graph, Mode};

pub const DEFAULT_Q: usize = 13;
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BigPhaseError {
    #[error("sampling window C(d-q,2) - 3d = {s} is not positive (d = {d}, q = {q})")]
    OutOfRegime { s: i128, d: usize, q: usize },
    #[error("vertex {u} has {found} admissible pairs, fewer than the window {s}")]
    TooFewAdmissible { u: usize, found: usize, s: i128 },
    #[error("no admissible pair for vertex {u} at step {step}")]
    NoAdmissiblePair { u: usize, step: usize },
    #[error("step cap {0} reached before every big vertex was settled")]
    StepCap(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("marked edges do not form a matching")]
    MarkedNotMatching,
    #[error("the selection has not finished: {0} big vertices are unset")]
    Unfinished(usize),
    #[error(transparent)]
    Colouring(#[from] ColouringError),
}

/// `C(d - q, 2) - 3d`, the size of the sampling window.
pub fn window_size(d: usize, q: usize) -> i128 {
    let m = d as i128 - q as i128;
    let pairs = if m >= 2 { m * (m - 1) / 2 } else { 0 };
    pairs - 3 * d as i128
}

fn bit_set(words: &mut [u64], c: Colour) {
    words[c as usize / 64] |= 1 << (c % 64);
}

fn bit_clear(words: &mut [u64], c: Colour) {
    words[c as usize / 64] &= !(1 << (c % 64));
}

/// Fixed inputs of a run.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    pub graph: &'a Graph,
    pub profile: &'a DegreeProfile,
    pub colouring: &'a PartialEdgeColouring,
    pub fragile: FragileEdges,
    pub q: usize,
    pub mode: Mode,
    /// The `d` lowest-index neighbours of each big vertex.
    pub nplus: Vec<Vec<usize>>,
    /// Colour of the edge to each neighbour, aligned with the neighbour list.
    nbr_colour: Vec<Vec<Colour>>,
    full_sets: Vec<Vec<u64>>,
    words: usize,
    pub s: i128,
}

impl<'a> Context<'a> {
    pub fn new(
        graph: &'a Graph,
        profile: &'a DegreeProfile,
        colouring: &'a PartialEdgeColouring,
        q: usize,
        mode: Mode,
    ) -> Result<Self, BigPhaseError> {
        let s = window_size(profile.d, q);
        if mode == Mode::Theory && s <= 0 {
            return Err(BigPhaseError::OutOfRegime { s, d: profile.d, q });
        }
        let words = colouring.palette as usize / 64 + 1;
        let nbr_colour: Vec<Vec<Colour>> = (0..graph.n())
            .map(|u| {
                graph
                    .incident_edges(u)
                    .iter()
                    .map(|&e| colouring.get(e).expect("big phase needs a total colouring"))
                    .collect()
            })
            .collect();
        let full_sets = nbr_colour
            .iter()
            .map(|cs| {
                let mut w = vec![0u64; words];
                for &c in cs {
                    bit_set(&mut w, c);
                }
                w
            })
            .collect();
        let nplus = (0..graph.n())
            .map(|u| {
                if profile.is_big(u) {
                    graph.neighbours(u)[..profile.d.min(graph.degree(u))].to_vec()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(Context {
            graph,
            profile,
            colouring,
            fragile: fragile_edges(graph, profile, q),
            q,
            mode,
            nplus,
            nbr_colour,
            full_sets,
            words,
            s,
        })
    }

    pub fn d(&self) -> usize {
        self.profile.d
    }

    pub fn edge_colour(&self, u: usize, v: usize) -> Colour {
        let i = self.graph.neighbour_index(u, v).expect("adjacent vertices");
        self.nbr_colour[u][i]
    }

    /// Number of pairs the random choice ranges over, given how many
    /// admissible pairs exist.
    pub fn window(&self, u: usize, count: usize) -> Result<usize, BigPhaseError> {
        match self.mode {
            Mode::Theory => {
                if (count as i128) < self.s {
                    Err(BigPhaseError::TooFewAdmissible { u, found: count, s: self.s })
                } else {
                    Ok(self.s as usize)
                }
            }
            // The first-s window is lexicographic, so at desk scale every pair
            // in it shares the lowest candidate; practical runs draw from all.
            Mode::Practical => Ok(count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadEvent {
    #[serde(rename = "type")]
    pub kind: u8,
    pub witnesses: Vec<usize>,
    /// Sorted vertices whose pair is cleared; always contains the treated
    /// vertex.
    pub resets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub u: usize,
    pub r: usize,
    pub window: usize,
    pub pair: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub event: Option<BadEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<StepRecord>,
}

impl ExecutionTrace {
    pub fn choices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.r).collect()
    }

    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn event_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for s in &self.steps {
            if let Some(e) = &s.event {
                counts[e.kind as usize - 1] += 1;
            }
        }
        counts
    }
}

/// Current pairs `U+`, their inverse `U-` and derived bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionState {
    uplus: Vec<Option<[usize; 2]>>,
    uminus: Vec<Vec<usize>>,
    pending: BTreeSet<usize>,
    /// Big vertices in the closed neighbourhood whose pair is unset.
    unset_near: Vec<usize>,
    /// Colours of selected edges at each vertex.
    sel: Vec<Vec<u64>>,
}

impl SelectionState {
    pub fn new(ctx: &Context) -> Self {
        Self::from_uplus(ctx, &vec![None; ctx.graph.n()])
    }

    /// Rebuilds all derived data from an assignment of pairs.
    pub fn from_uplus(ctx: &Context, uplus: &[Option<[usize; 2]>]) -> Self {
        let g = ctx.graph;
        let n = g.n();
        let mut st = SelectionState {
            uplus: vec![None; n],
            uminus: vec![Vec::new(); n],
            pending: ctx.profile.big_vertices().into_iter().collect(),
            unset_near: vec![0; n],
            sel: vec![vec![0u64; ctx.words]; n],
        };
        for u in ctx.profile.big_vertices() {
            st.unset_near[u] += 1;
            for &z in g.neighbours(u) {
                st.unset_near[z] += 1;
            }
        }
        for (u, p) in uplus.iter().enumerate() {
            if let Some(p) = p {
                st.assign(ctx, u, *p);
            }
        }
        st
    }

    pub fn uplus(&self, u: usize) -> Option<[usize; 2]> {
        self.uplus[u]
    }

    pub fn uplus_all(&self) -> &[Option<[usize; 2]>] {
        &self.uplus
    }

    pub fn uminus(&self, v: usize) -> &[usize] {
        &self.uminus[v]
    }

    pub fn pending(&self) -> &BTreeSet<usize> {
        &self.pending
    }

    pub fn in_uplus(&self, owner: usize, v: usize) -> bool {
        self.uplus[owner].is_some_and(|p| p.contains(&v))
    }

    pub fn assign(&mut self, ctx: &Context, u: usize, pair: [usize; 2]) {
        debug_assert!(self.uplus[u].is_none());
        self.uplus[u] = Some(pair);
        self.pending.remove(&u);
        for v in pair {
            let pos = self.uminus[v].binary_search(&u).unwrap_err();
            self.uminus[v].insert(pos, u);
            let c = ctx.edge_colour(u, v);
            bit_set(&mut self.sel[u], c);
            bit_set(&mut self.sel[v], c);
        }
        self.unset_near[u] -= 1;
        for &z in ctx.graph.neighbours(u) {
            self.unset_near[z] -= 1;
        }
    }

    pub fn reset(&mut self, ctx: &Context, u: usize) {
        let pair = self.uplus[u].take().expect("reset of an unset vertex");
        self.pending.insert(u);
        for v in pair {
            let pos = self.uminus[v].binary_search(&u).expect("inverse consistent");
            self.uminus[v].remove(pos);
            let c = ctx.edge_colour(u, v);
            bit_clear(&mut self.sel[u], c);
            bit_clear(&mut self.sel[v], c);
        }
        self.unset_near[u] += 1;
        for &z in ctx.graph.neighbours(u) {
            self.unset_near[z] += 1;
        }
    }

    fn residual_word(&self, ctx: &Context, v: usize, i: usize) -> u64 {
        ctx.full_sets[v][i] & !self.sel[v][i]
    }

    /// Every big vertex in `N[v]` has its pair set.
    pub fn ready(&self, v: usize) -> bool {
        self.unset_near[v] == 0
    }

    /// Bad-edge test for an edge `vw`.
    pub fn is_bad(&self, ctx: &Context, v: usize, w: usize) -> bool {
        ctx.profile.is_big(v)
            && ctx.profile.is_big(w)
            && self.ready(v)
            && self.ready(w)
            && ctx.graph.degree(v) == ctx.graph.degree(w)
            && (0..ctx.words).all(|i| self.residual_word(ctx, v, i) == self.residual_word(ctx, w, i))
    }

    /// All bad edges, as sorted endpoint pairs.
    pub fn bad_edges(&self, ctx: &Context) -> Vec<(usize, usize)> {
        ctx.graph
            .edges()
            .iter()
            .copied()
            .filter(|&(v, w)| self.is_bad(ctx, v, w))
            .collect()
    }

    /// Admissible pairs for an unset big vertex, in lexicographic order.
    pub fn admissible_pairs(&self, ctx: &Context, u: usize) -> Vec<[usize; 2]> {
        let g = ctx.graph;
        let cand: Vec<usize> = ctx.nplus[u]
            .iter()
            .copied()
            .filter(|v| self.uminus[u].binary_search(v).is_err())
            .collect();
        // neighbours x for which the edge ux becomes finished once u is set
        let closing: Vec<usize> = if self.unset_near[u] == 1 {
            g.neighbours(u)
                .iter()
                .copied()
                .filter(|&x| {
                    ctx.profile.is_big(x)
                        && g.degree(x) == g.degree(u)
                        && self.unset_near[x] == 1
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut out = Vec::new();
        let mut ru = vec![0u64; ctx.words];
        let mut rx = vec![0u64; ctx.words];
        for (i, &a) in cand.iter().enumerate() {
            for &b in &cand[i + 1..] {
                if ctx.fragile.is_fragile(a, b) {
                    continue;
                }
                let (ca, cb) = (ctx.edge_colour(u, a), ctx.edge_colour(u, b));
                let creates_bad = closing.iter().any(|&x| {
                    for k in 0..ctx.words {
                        ru[k] = self.residual_word(ctx, u, k);
                        rx[k] = self.residual_word(ctx, x, k);
                    }
                    bit_clear(&mut ru, ca);
                    bit_clear(&mut ru, cb);
                    if x == a || x == b {
                        bit_clear(&mut rx, ctx.edge_colour(u, x));
                    }
                    ru == rx
                });
                if !creates_bad {
                    out.push([a, b]);
                }
            }
        }
        out
    }

    fn bad_nbrs(&self, ctx: &Context, a: usize) -> Vec<usize> {
        if !ctx.profile.is_big(a) || !self.ready(a) {
            return Vec::new();
        }
        ctx.graph
            .neighbours(a)
            .iter()
            .copied()
            .filter(|&b| self.is_bad(ctx, a, b))
            .collect()
    }

    fn pair_members(&self, w: usize) -> Vec<usize> {
        self.uplus[w].map(|p| p.to_vec()).unwrap_or_default()
    }

    /// The first conflict after `u` was just assigned, if any. Among several
    /// witnesses of one kind the lexicographically smallest tuple wins.
    pub fn detect_bad_event(&self, ctx: &Context, u: usize) -> Option<BadEvent> {
        let g = ctx.graph;
        let q = ctx.q;
        for &v in g.neighbours(u) {
            if self.uminus[v].len() == q + 1 {
                return Some(BadEvent {
                    kind: 1,
                    witnesses: vec![v],
                    resets: self.uminus[v].clone(),
                });
            }
        }
        let mut pair = self.pair_members(u);
        pair.sort_unstable();
        for &v in &pair {
            let Some(w) = ctx.fragile.mate(v) else { continue };
            if let Some(&x) = self.uminus[w].iter().find(|&&x| x != u && x != v && x != w) {
                return Some(event(2, vec![v, w, x], &[u, x]));
            }
        }

        let near: Vec<(usize, Vec<usize>)> = g
            .neighbours(u)
            .iter()
            .map(|&a| (a, self.bad_nbrs(ctx, a)))
            .collect();

        let mut best3: Option<[usize; 3]> = None;
        for (a, bn) in &near {
            let a = *a;
            for &w in bn {
                for x in self.bad_nbrs(ctx, w) {
                    if x != a {
                        keep_min(&mut best3, [a, w, x]);
                    }
                }
            }
            for &v in bn {
                for &x in bn {
                    if v != x {
                        keep_min(&mut best3, [v, a, x]);
                    }
                }
            }
        }
        if let Some([v, w, x]) = best3 {
            return Some(event(3, vec![v, w, x], &[u, v, x]));
        }

        let mut best4: Option<[usize; 4]> = None;
        let mut try4 = |v: usize, w: usize, x: usize, y: usize| {
            if v != x && v != y && w != y {
                keep_min(&mut best4, [v, w, x, y]);
            }
        };
        for (a, bn) in &near {
            let a = *a;
            // a plays v
            for &w in bn {
                for x in self.pair_members(w) {
                    for y in self.bad_nbrs(ctx, x) {
                        try4(a, w, x, y);
                    }
                }
            }
            // a plays w
            for x in self.pair_members(a) {
                let xb = self.bad_nbrs(ctx, x);
                for &v in bn {
                    for &y in &xb {
                        try4(v, a, x, y);
                    }
                }
            }
            // a plays x
            for &w in &self.uminus[a] {
                for v in self.bad_nbrs(ctx, w) {
                    for &y in bn {
                        try4(v, w, a, y);
                    }
                }
            }
            // a plays y
            for &x in bn {
                for &w in &self.uminus[x] {
                    for v in self.bad_nbrs(ctx, w) {
                        try4(v, w, x, a);
                    }
                }
            }
        }
        if let Some([v, w, x, y]) = best4 {
            return Some(event(4, vec![v, w, x, y], &[u, v, w, y]));
        }

        let mut best5: Option<[usize; 5]> = None;
        for (a, bn) in &near {
            let a = *a;
            for &b in bn {
                for (v, w) in [(a, b), (b, a)] {
                    for z in self.pair_members(w) {
                        if z == v {
                            continue;
                        }
                        for &x in &self.uminus[z] {
                            if x == v || x == w {
                                continue;
                            }
                            for y in self.bad_nbrs(ctx, x) {
                                if y != v && y != w && y != z {
                                    keep_min(&mut best5, [v, w, x, y, z]);
                                }
                            }
                        }
                    }
                }
            }
        }
        if let Some([v, w, x, y, z]) = best5 {
            return Some(event(5, vec![v, w, x, y, z], &[u, v, w, x, y]));
        }
        None
    }

    pub fn apply_resets(&mut self, ctx: &Context, ev: &BadEvent) {
        for &a in &ev.resets {
            self.reset(ctx, a);
        }
    }

    /// One loop iteration with the random choice `r` already drawn.
    pub fn step_with_choice(
        &mut self,
        ctx: &Context,
        step: usize,
        r: usize,
    ) -> Result<StepRecord, BigPhaseError> {
        let u = *self.pending.first().expect("a pending vertex");
        let pairs = self.admissible_pairs(ctx, u);
        let window = ctx.window(u, pairs.len())?;
        if window == 0 {
            return Err(BigPhaseError::NoAdmissiblePair { u, step });
        }
        assert!(r < window, "choice outside the sampling window");
        self.finish_step(ctx, step, u, r, window, pairs[r])
    }

    fn finish_step(
        &mut self,
        ctx: &Context,
        step: usize,
        u: usize,
        r: usize,
        window: usize,
        pair: [usize; 2],
    ) -> Result<StepRecord, BigPhaseError> {
        self.assign(ctx, u, pair);
        let event = self.detect_bad_event(ctx, u);
        if let Some(ev) = &event {
            self.apply_resets(ctx, ev);
        }
        Ok(StepRecord {
            step,
            u,
            r,
            window,
            pair,
            event,
        })
    }

    /// One loop iteration drawing the choice from `rng`.
    pub fn step(
        &mut self,
        ctx: &Context,
        step: usize,
        rng: &mut impl Rng,
    ) -> Result<StepRecord, BigPhaseError> {
        let u = *self.pending.first().expect("a pending vertex");
        let pairs = self.admissible_pairs(ctx, u);
        let window = ctx.window(u, pairs.len())?;
        if window == 0 {
            return Err(BigPhaseError::NoAdmissiblePair { u, step });
        }
        let r = rng.gen_range(0..window);
        self.finish_step(ctx, step, u, r, window, pairs[r])
    }

    /// Pairs of selected edges as edge ids, sorted.
    pub fn selected_edges(&self, graph: &Graph) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .uplus
            .iter()
            .enumerate()
            .filter_map(|(u, p)| p.map(|p| (u, p)))
            .flat_map(|(u, p)| p.map(|v| graph.edge_id(u, v).expect("pair inside N(u)")))
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks the loop invariants. Returns one message per violation.
    pub fn check_invariants(&self, ctx: &Context) -> InvariantReport {
        let g = ctx.graph;
        let mut violations = Vec::new();
        for v in 0..g.n() {
            if self.uminus[v].len() > ctx.q {
                violations.push(format!("(1) |U-({v})| = {} > q", self.uminus[v].len()));
            }
        }
        for &e in &ctx.fragile.edges {
            let (v, w) = g.endpoints(e);
            if !self.uminus[v].is_empty() && !self.uminus[w].is_empty() {
                violations.push(format!("(2) fragile edge {v}-{w} selected from both sides"));
            }
        }
        let bad = self.bad_edges(ctx);
        let mut owner = vec![usize::MAX; g.n()];
        for (i, &(v, w)) in bad.iter().enumerate() {
            for a in [v, w] {
                if owner[a] != usize::MAX {
                    violations.push(format!("(3) bad edges {:?} and {:?} share {a}", bad[owner[a]], (v, w)));
                }
                owner[a] = i;
            }
        }
        let ball = |a: usize| {
            let mut b = self.pair_members(a);
            b.push(a);
            b
        };
        for i in 0..bad.len() {
            for j in i + 1..bad.len() {
                for a in [bad[i].0, bad[i].1] {
                    for b in [bad[j].0, bad[j].1] {
                        let bb = ball(b);
                        if ball(a).iter().any(|z| bb.contains(z)) {
                            violations.push(format!("(4) balls of {a} and {b} intersect"));
                        }
                    }
                }
            }
        }
        for u in 0..g.n() {
            let Some(p) = self.uplus[u] else { continue };
            for v in p {
                if !ctx.nplus[u].contains(&v) {
                    violations.push(format!("pair of {u} leaves N+({u})"));
                }
                if self.uminus[v].binary_search(&u).is_err() {
                    violations.push(format!("U-({v}) misses {u}"));
                }
                if self.in_uplus(v, u) {
                    violations.push(format!("edge {u}-{v} selected twice"));
                }
            }
        }
        for v in 0..g.n() {
            for &u in &self.uminus[v] {
                if !self.in_uplus(u, v) {
                    violations.push(format!("U-({v}) lists {u} without a matching pair"));
                }
            }
        }
        if ctx.mode == Mode::Theory {
            for &u in &self.pending {
                let found = self.admissible_pairs(ctx, u).len();
                if (found as i128) < ctx.s {
                    violations.push(format!("(5) vertex {u} has {found} admissible pairs < {}", ctx.s));
                }
            }
        }
        InvariantReport { violations }
    }

    #[cfg(test)]
    pub(crate) fn force_uminus(&mut self, v: usize, owners: Vec<usize>) {
        self.uminus[v] = owners;
    }
}

fn keep_min<const N: usize>(best: &mut Option<[usize; N]>, cand: [usize; N]) {
    if best.is_none_or(|b| cand < b) {
        *best = Some(cand);
    }
}

fn event(kind: u8, witnesses: Vec<usize>, resets: &[usize]) -> BadEvent {
    let mut resets = resets.to_vec();
    resets.sort_unstable();
    BadEvent {
        kind,
        witnesses,
        resets,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BigPhaseConfig {
    pub q: usize,
    pub seed: u64,
    pub mode: Mode,
    pub step_cap: usize,
    pub assert_invariants: bool,
}

impl Default for BigPhaseConfig {
    fn default() -> Self {
        BigPhaseConfig {
            q: DEFAULT_Q,
            seed: 0,
            mode: Mode::Practical,
            step_cap: DEFAULT_STEP_CAP,
            assert_invariants: false,
        }
    }
}

/// Runs the selection loop until every big vertex has a pair.
pub fn run_big_phase(
    ctx: &Context,
    cfg: &BigPhaseConfig,
) -> Result<(SelectionState, ExecutionTrace), BigPhaseError> {
    let mut state = SelectionState::new(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = ExecutionTrace::default();
    loop {
        if cfg.assert_invariants {
            let report = state.check_invariants(ctx);
            if let Some(v) = report.violations.first() {
                return Err(BigPhaseError::Invariant(v.clone()));
            }
        }
        if state.pending.is_empty() {
            return Ok((state, trace));
        }
        if trace.steps.len() >= cfg.step_cap {
            return Err(BigPhaseError::StepCap(cfg.step_cap));
        }
        let rec = state.step(ctx, trace.steps.len(), &mut rng)?;
        trace.steps.push(rec);
    }
}

/// Runs exactly `steps` iterations or until the loop ends, returning whatever
/// trace was produced together with the error that stopped it, if any.
pub fn run_big_steps(
    ctx: &Context,
    seed: u64,
    steps: usize,
) -> (SelectionState, ExecutionTrace, Option<BigPhaseError>) {
    let mut state = SelectionState::new(ctx);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = ExecutionTrace::default();
    while trace.steps.len() < steps && !state.pending.is_empty() {
        match state.step(ctx, trace.steps.len(), &mut rng) {
            Ok(rec) => trace.steps.push(rec),
            Err(e) => return (state, trace, Some(e)),
        }
    }
    (state, trace, None)
}

/// Selected-edge recolouring followed by one marked edge per bad edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finalized {
    pub colouring: PartialEdgeColouring,
    pub marked: Vec<usize>,
    pub bad_edges: Vec<(usize, usize)>,
}

pub fn finalize_big(
    ctx: &Context,
    state: &SelectionState,
    base_delta: usize,
) -> Result<Finalized, BigPhaseError> {
    if !state.pending.is_empty() {
        return Err(BigPhaseError::Unfinished(state.pending.len()));
    }
    let g = ctx.graph;
    let selected = state.selected_edges(g);
    let mut colouring = recolour_selected(g, &selected, ctx.colouring, base_delta, ctx.q)?;
    let bad_edges = state.bad_edges(ctx);
    let mut marked = Vec::with_capacity(bad_edges.len());
    let mut used = vec![false; g.n()];
    let fresh = (base_delta + ctx.q + 6) as Colour;
    for &(u, v) in &bad_edges {
        let w = state
            .pair_members(u)
            .into_iter()
            .filter(|&w| w != v)
            .min()
            .expect("a set pair has a member other than v");
        if used[u] || used[w] {
            return Err(BigPhaseError::MarkedNotMatching);
        }
        used[u] = true;
        used[w] = true;
        let e = g.edge_id(u, w).expect("pair inside N(u)");
        colouring.set(e, fresh);
        marked.push(e);
    }
    Ok(Finalized {
        colouring,
        marked,
        bad_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colouring::{extend_to_original, vizing_colour};
    use crate::graph::{classify, contract_pendant_pairs, gen_random_graph, Epsilon, GraphModel};

    fn eps(s: &str) -> Epsilon {
        s.parse().unwrap()
    }

    fn prepared(g: &Graph, e: &str) -> (DegreeProfile, PartialEdgeColouring) {
        let p = classify(g, eps(e), Mode::Practical).unwrap();
        let gp = contract_pendant_pairs(g, &p);
        let c = extend_to_original(g, &gp, &vizing_colour(&gp)).unwrap();
        (p, c)
    }

    /// Hubs `first..first+hubs`, each with `leaves` private leaves, plus the
    /// given extra edges.
    fn with_leaves(n_core: usize, hubs: &[usize], leaves: usize, extra: &[(usize, usize)]) -> Graph {
        let mut edges = extra.to_vec();
        let mut next = n_core;
        for &h in hubs {
            for _ in 0..leaves {
                edges.push((h, next));
                next += 1;
            }
        }
        Graph::from_edges(next, edges).unwrap()
    }

    fn first_leaf(g: &Graph, h: usize, n_core: usize) -> usize {
        *g.neighbours(h).iter().find(|&&x| x >= n_core).unwrap()
    }

    /// Two adjacent degree-3 vertices with two leaves each.
    fn twin_gadget() -> (Graph, PartialEdgeColouring) {
        let g = Graph::from_edges(6, vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5)]).unwrap();
        let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 8);
        for (u, v, col) in [(0, 1, 1), (0, 2, 2), (0, 3, 3), (1, 4, 4), (1, 5, 5)] {
            c.set(g.edge_id(u, v).unwrap(), col);
        }
        (g, c)
    }

    #[test]
    fn initial_state_satisfies_invariants() {
        let g = gen_random_graph(60, 12, 3, GraphModel::GnpCapped).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        assert!(SelectionState::new(&ctx).check_invariants(&ctx).ok());
    }

    #[test]
    fn injected_overfull_inverse_is_reported() {
        let g = gen_random_graph(60, 12, 3, GraphModel::GnpCapped).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, 2, Mode::Practical).unwrap();
        let mut st = SelectionState::new(&ctx);
        st.force_uminus(0, vec![1, 2, 3]);
        let report = st.check_invariants(&ctx);
        assert!(report.violations.iter().any(|v| v.starts_with("(1)")));
    }

    #[test]
    fn unconstrained_vertex_admits_every_pair() {
        let g = with_leaves(1, &[0], 20, &[]);
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        let d = ctx.d();
        assert_eq!(d, 8);
        let pairs = SelectionState::new(&ctx).admissible_pairs(&ctx, 0);
        assert_eq!(pairs.len(), d * (d - 1) / 2);
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fragile_pair_is_not_admissible() {
        let g = with_leaves(3, &[0], 18, &[(0, 1), (0, 2), (1, 2)]);
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        assert!(ctx.fragile.is_fragile(1, 2));
        let pairs = SelectionState::new(&ctx).admissible_pairs(&ctx, 0);
        assert!(!pairs.contains(&[1, 2]));
        assert_eq!(pairs.len(), 27);
    }

    #[test]
    fn bad_edge_needs_equal_leftovers() {
        let (g, c) = twin_gadget();
        let p = classify(&g, eps("0.1"), Mode::Practical).unwrap();
        assert_eq!(p.big_vertices(), vec![0, 1]);
        let ctx = Context::new(&g, &p, &c, 5, Mode::Practical).unwrap();
        let full = SelectionState::from_uplus(&ctx, &[Some([2, 3]), Some([4, 5]), None, None, None, None]);
        assert!(full.is_bad(&ctx, 0, 1));
        assert_eq!(full.bad_edges(&ctx), vec![(0, 1)]);
        let half = SelectionState::from_uplus(&ctx, &[Some([2, 3]), None, None, None, None, None]);
        assert!(!half.is_bad(&ctx, 0, 1));
    }

    #[test]
    fn unequal_degrees_are_never_bad() {
        let g = Graph::from_edges(7, vec![(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (1, 6)]).unwrap();
        let mut c = PartialEdgeColouring::uncoloured(g.num_edges(), 8);
        for (i, e) in (0..g.num_edges()).enumerate() {
            c.set(e, i as Colour + 1);
        }
        let p = classify(&g, eps("0.1"), Mode::Practical).unwrap();
        let ctx = Context::new(&g, &p, &c, 5, Mode::Practical).unwrap();
        let st = SelectionState::from_uplus(&ctx, &[Some([2, 3]), Some([4, 5]), None, None, None, None, None]);
        assert!(!st.is_bad(&ctx, 0, 1));
    }

    #[test]
    fn full_inverse_triggers_first_kind() {
        let g = with_leaves(4, &[1, 2, 3], 10, &[(0, 1), (0, 2), (0, 3)]);
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, 2, Mode::Practical).unwrap();
        let mut st = SelectionState::new(&ctx);
        for u in [1, 2] {
            st.assign(&ctx, u, [0, first_leaf(&g, u, 4)]);
            assert_eq!(st.detect_bad_event(&ctx, u), None);
        }
        st.assign(&ctx, 3, [0, first_leaf(&g, 3, 4)]);
        let ev = st.detect_bad_event(&ctx, 3).unwrap();
        assert_eq!(ev.kind, 1);
        assert_eq!(ev.witnesses, vec![0]);
        assert_eq!(ev.resets, vec![1, 2, 3]);
    }

    #[test]
    fn fragile_collision_triggers_second_kind() {
        let g = with_leaves(4, &[2, 3], 10, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, 5, Mode::Practical).unwrap();
        assert!(ctx.fragile.is_fragile(0, 1));
        let mut st = SelectionState::new(&ctx);
        st.assign(&ctx, 3, [1, first_leaf(&g, 3, 4)]);
        st.assign(&ctx, 2, [0, first_leaf(&g, 2, 4)]);
        let ev = st.detect_bad_event(&ctx, 2).unwrap();
        assert_eq!((ev.kind, ev.witnesses.clone(), ev.resets.clone()), (2, vec![0, 1, 3], vec![2, 3]));
    }

    #[test]
    fn quiet_graph_takes_one_step_per_big_vertex() {
        // stars of sizes 8, 9 and 10
        let mut edges = Vec::new();
        let mut next = 3;
        for (h, k) in [(0, 8), (1, 9), (2, 10)] {
            for _ in 0..k {
                edges.push((h, next));
                next += 1;
            }
        }
        let g = Graph::from_edges(next, edges).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, 11, Mode::Practical).unwrap();
        let cfg = BigPhaseConfig { q: 11, assert_invariants: true, ..Default::default() };
        let (st, trace) = run_big_phase(&ctx, &cfg).unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert!(st.pending().is_empty());
        assert_eq!(trace.event_counts(), [0; 5]);
    }

    #[test]
    fn same_seed_same_trace() {
        let g = gen_random_graph(120, 30, 11, GraphModel::GnpCapped).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        let cfg = BigPhaseConfig { seed: 99, ..Default::default() };
        let a = run_big_phase(&ctx, &cfg).unwrap();
        let b = run_big_phase(&ctx, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.to_json_lines(), b.1.to_json_lines());
    }

    #[test]
    fn replay_reaches_the_same_state() {
        let g = gen_random_graph(80, 20, 5, GraphModel::GnpCapped).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        let (st, trace) = run_big_phase(&ctx, &BigPhaseConfig::default()).unwrap();
        let mut replay = SelectionState::new(&ctx);
        for rec in &trace.steps {
            let again = replay.step_with_choice(&ctx, rec.step, rec.r).unwrap();
            assert_eq!(&again, rec);
        }
        assert_eq!(replay, st);
    }

    #[test]
    fn marking_without_bad_edges_keeps_the_recolouring() {
        let g = gen_random_graph(80, 20, 5, GraphModel::GnpCapped).unwrap();
        let (p, c) = prepared(&g, "0.1");
        let ctx = Context::new(&g, &p, &c, DEFAULT_Q, Mode::Practical).unwrap();
        let (st, _) = run_big_phase(&ctx, &BigPhaseConfig::default()).unwrap();
        let base = p.delta.max(g.max_degree());
        let fin = finalize_big(&ctx, &st, base).unwrap();
        assert!(fin.bad_edges.is_empty() && fin.marked.is_empty());
        let plain = recolour_selected(&g, &st.selected_edges(&g), &c, base, DEFAULT_Q).unwrap();
        assert_eq!(fin.colouring, plain);
    }

    #[test]
    fn one_bad_edge_gets_one_mark() {
        let (g, c) = twin_gadget();
        let p = classify(&g, eps("0.1"), Mode::Practical).unwrap();
        let ctx = Context::new(&g, &p, &c, 5, Mode::Practical).unwrap();
        let st = SelectionState::from_uplus(&ctx, &[Some([2, 3]), Some([4, 5]), None, None, None, None]);
        let fin = finalize_big(&ctx, &st, 5).unwrap();
        assert_eq!(fin.marked.len(), 1);
        let (a, b) = g.endpoints(fin.marked[0]);
        assert_ne!((a, b), (0, 1));
        assert!([a, b].contains(&0) != [a, b].contains(&1));
        assert_eq!(fin.colouring.get(fin.marked[0]), Some(5 + 5 + 6));
        assert!(fin.colouring.is_proper(&g));
        assert_ne!(fin.colouring.colour_set(&g, 0), fin.colouring.colour_set(&g, 1));
    }

    #[test]
    fn events_reset_the_prescribed_number_of_vertices() {
        for seed in 0..40 {
            let Ok(g) = gen_random_graph(16, 12, seed, GraphModel::GnpCapped) else { continue };
            let (p, c) = prepared(&g, "0.1");
            let Ok(ctx) = Context::new(&g, &p, &c, 5, Mode::Practical) else { continue };
            let (_, trace, _) = run_big_steps(&ctx, seed, 300);
            for rec in &trace.steps {
                if let Some(ev) = &rec.event {
                    let want = if ev.kind == 1 { 6 } else { ev.kind as usize };
                    assert_eq!(ev.resets.len(), want);
                    assert!(ev.resets.contains(&rec.u));
                }
            }
        }
    }
}
