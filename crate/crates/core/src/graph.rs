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

//! Simple graphs, the contracted multigraph, degree classification and
//! benchmark generators.
//!
//! Vertices are `0..n` and the index order is the fixed vertex ordering used
//! everywhere else in the crate. Edges are identified by their position in the
//! lexicographically sorted list of `(min, max)` endpoint pairs.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: cannot parse {text:?}")]
    Parse { line: usize, text: String },
    #[error("loop at vertex {0}")]
    Loop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("epsilon must satisfy 0 < eps < 1/2, got {0}")]
    EpsOutOfRange(String),
    #[error("isolated edge {0}-{1}: graphs must have no isolated edge")]
    IsolatedEdge(usize, usize),
    #[error("threshold d = {d} is not below delta/2 (delta = {delta})")]
    ThresholdTooLarge { d: usize, delta: usize },
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

/// Which regime the algorithms run in.
///
/// `Theory` enforces every hypothesis of the analysis and fails loudly when
/// one is violated. `Practical` keeps every correctness guarantee of the
/// output but relaxes the sampling windows so that desk-scale graphs finish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Theory,
    Practical,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "theory" => Ok(Mode::Theory),
            "practical" => Ok(Mode::Practical),
            other => Err(format!("unknown mode {other:?}")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Theory => f.write_str("theory"),
            Mode::Practical => f.write_str("practical"),
        }
    }
}

/// The ratio `eps` held exactly as a reduced fraction so that thresholds such
/// as `ceil((1/2 - eps) * delta)` never suffer from binary rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Epsilon {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Epsilon {
    pub fn new(num: u64, den: u64) -> Result<Self, GraphError> {
        if den == 0 || num == 0 || 2 * (num as u128) >= den as u128 {
            return Err(GraphError::EpsOutOfRange(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Epsilon {
            num: num / g,
            den: den / g,
        })
    }

    /// Rounds to nine decimal places before building the fraction.
    pub fn from_f64(x: f64) -> Result<Self, GraphError> {
        if !x.is_finite() || x <= 0.0 || x >= 0.5 {
            return Err(GraphError::EpsOutOfRange(x.to_string()));
        }
        let num = (x * 1e9).round() as u64;
        Epsilon::new(num, 1_000_000_000)
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ceil((1/2 - eps) * delta)`.
    pub fn threshold(&self, delta: usize) -> usize {
        let top = (self.den as u128 - 2 * self.num as u128) * delta as u128;
        let bottom = 2 * self.den as u128;
        top.div_ceil(bottom) as usize
    }

    /// `ceil(2 * eps * delta)`.
    pub fn small_window(&self, delta: usize) -> usize {
        let top = 2 * self.num as u128 * delta as u128;
        top.div_ceil(self.den as u128) as usize
    }
}

impl FromStr for Epsilon {
    type Err = GraphError;

    /// Accepts `a/b` or a plain decimal such as `0.004`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::EpsOutOfRange(s.to_string());
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return Epsilon::new(a, b);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac_val: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        Epsilon::new(num, den)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// A simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    adj_edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub delta: usize,
}

impl Graph {
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::Loop(u));
            }
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x, n });
                }
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &list {
            adj[u].push(v);
            adj[v].push(u);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        let mut g = Graph {
            edges: list,
            adj,
            adj_edges: Vec::new(),
        };
        g.adj_edges = (0..n)
            .map(|u| {
                g.adj[u]
                    .iter()
                    .map(|&v| g.edge_id(u, v).expect("edge present"))
                    .collect()
            })
            .collect();
        Ok(g)
    }

    /// Parses the edge-list text format: one `u v` pair per line, `#` starts a
    /// comment, and an optional `n <count>` line fixes the vertex count.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut declared_n = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = || GraphError::Parse {
                line: i + 1,
                text: raw.to_string(),
            };
            let mut parts = line.split_whitespace();
            let a = parts.next().ok_or_else(parse_err)?;
            let b = parts.next().ok_or_else(parse_err)?;
            if parts.next().is_some() {
                return Err(parse_err());
            }
            if a == "n" {
                if declared_n.is_some() || !edges.is_empty() {
                    return Err(parse_err());
                }
                declared_n = Some(b.parse::<usize>().map_err(|_| parse_err())?);
                continue;
            }
            let u = a.parse::<usize>().map_err(|_| parse_err())?;
            let v = b.parse::<usize>().map_err(|_| parse_err())?;
            edges.push((u, v));
        }
        let n = match declared_n {
            Some(n) => n,
            None => edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0),
        };
        Graph::from_edges(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n(),
            edges: self.edges.clone(),
            delta: self.max_degree(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        Graph::from_edges(json.n, json.edges.iter().copied())
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Sorted neighbour list.
    pub fn neighbours(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    /// Edge ids incident to `u`, aligned with [`Graph::neighbours`].
    pub fn incident_edges(&self, u: usize) -> &[usize] {
        &self.adj_edges[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_id(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    /// Position of `v` in the sorted neighbour list of `u`.
    pub fn neighbour_index(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].binary_search(&v).ok()
    }

    /// Edges whose endpoints both have degree one.
    pub fn isolated_edges(&self) -> Vec<usize> {
        (0..self.num_edges())
            .filter(|&e| {
                let (u, v) = self.edges[e];
                self.degree(u) == 1 && self.degree(v) == 1
            })
            .collect()
    }

    /// Full scan of adjacency symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|u| self.adj[u].iter().all(|&v| self.has_edge(v, u)))
    }
}

/// Degree classification into small (`A`) and big (`B`) vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub delta: usize,
    pub eps: Epsilon,
    pub d: usize,
    pub mode: Mode,
    small: Vec<bool>,
    pub warnings: Vec<String>,
}

impl DegreeProfile {
    pub fn is_small(&self, u: usize) -> bool {
        self.small[u]
    }

    pub fn is_big(&self, u: usize) -> bool {
        !self.small[u]
    }

    pub fn small_vertices(&self) -> Vec<usize> {
        (0..self.small.len()).filter(|&u| self.small[u]).collect()
    }

    pub fn big_vertices(&self) -> Vec<usize> {
        (0..self.small.len()).filter(|&u| !self.small[u]).collect()
    }

    /// True when the threshold satisfies `d < delta / 2`.
    pub fn in_theory_regime(&self) -> bool {
        2 * self.d < self.delta
    }
}

pub fn classify(graph: &Graph, eps: Epsilon, mode: Mode) -> Result<DegreeProfile, GraphError> {
    let delta = graph.max_degree();
    let d = eps.threshold(delta);
    let mut warnings = Vec::new();
    if let Some(&e) = graph.isolated_edges().first() {
        let (u, v) = graph.endpoints(e);
        match mode {
            Mode::Theory => return Err(GraphError::IsolatedEdge(u, v)),
            Mode::Practical => warnings.push(format!(
                "isolated edge {u}-{v}: no AVD colouring can distinguish its endpoints"
            )),
        }
    }
    if 2 * d >= delta {
        match mode {
            Mode::Theory => return Err(GraphError::ThresholdTooLarge { d, delta }),
            Mode::Practical => warnings.push(format!(
                "threshold d = {d} is not below delta/2 (delta = {delta})"
            )),
        }
    }
    let small = (0..graph.n()).map(|u| graph.degree(u) < d).collect();
    Ok(DegreeProfile {
        delta,
        eps,
        d,
        mode,
        small,
        warnings,
    })
}

/// Multigraph with edge multiplicity at most two, obtained by contracting the
/// isolated edges of the subgraph induced by small vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    origin: Vec<usize>,
    incident: Vec<Vec<usize>>,
    contracted: Vec<usize>,
    rep: Vec<usize>,
}

impl MultiGraph {
    /// Builds a multigraph directly; used for tests and for colouring
    /// auxiliary subgraphs. `origin` defaults to the edge position.
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        for &(u, v) in &edges {
            if u == v {
                return Err(GraphError::Loop(u));
            }
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::VertexOutOfRange { vertex: x, n });
                }
            }
        }
        let origin = (0..edges.len()).collect();
        Ok(Self::assemble(n, edges, origin, Vec::new(), (0..n).collect()))
    }

    fn assemble(
        n: usize,
        edges: Vec<(usize, usize)>,
        origin: Vec<usize>,
        contracted: Vec<usize>,
        rep: Vec<usize>,
    ) -> Self {
        let mut incident = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            incident[u].push(e);
            incident[v].push(e);
        }
        MultiGraph {
            n,
            edges,
            origin,
            incident,
            contracted,
            rep,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn other(&self, e: usize, u: usize) -> usize {
        let (a, b) = self.edges[e];
        if a == u {
            b
        } else {
            a
        }
    }

    pub fn incident(&self, u: usize) -> &[usize] {
        &self.incident[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.incident[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.incident.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edge of the original graph this multigraph edge came from.
    pub fn origin(&self, e: usize) -> usize {
        self.origin[e]
    }

    /// Original edges that were contracted away.
    pub fn contracted_edges(&self) -> &[usize] {
        &self.contracted
    }

    /// Merged representative of an original vertex (the lower id of a
    /// contracted pair, the vertex itself otherwise).
    pub fn representative(&self, u: usize) -> usize {
        self.rep[u]
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> usize {
        self.incident[u]
            .iter()
            .filter(|&&e| self.other(e, u) == v)
            .count()
    }

    pub fn max_multiplicity(&self) -> usize {
        let mut best = 0;
        let mut seen = vec![0usize; self.n];
        for u in 0..self.n {
            for &e in &self.incident[u] {
                seen[self.other(e, u)] += 1;
            }
            for &e in &self.incident[u] {
                let v = self.other(e, u);
                best = best.max(seen[v]);
            }
            for &e in &self.incident[u] {
                seen[self.other(e, u)] = 0;
            }
        }
        best
    }
}

/// True when `uv` is an isolated edge of the subgraph induced by small
/// vertices: both ends small and neither has another small neighbour.
pub fn is_contractible(graph: &Graph, profile: &DegreeProfile, e: usize) -> bool {
    let (u, v) = graph.endpoints(e);
    if !profile.is_small(u) || !profile.is_small(v) {
        return false;
    }
    let lonely = |a: usize, b: usize| {
        graph
            .neighbours(a)
            .iter()
            .all(|&w| w == b || profile.is_big(w))
    };
    lonely(u, v) && lonely(v, u)
}

pub fn contract_pendant_pairs(graph: &Graph, profile: &DegreeProfile) -> MultiGraph {
    let n = graph.n();
    let mut rep: Vec<usize> = (0..n).collect();
    let mut contracted = Vec::new();
    for e in 0..graph.num_edges() {
        if is_contractible(graph, profile, e) {
            let (u, v) = graph.endpoints(e);
            rep[v] = u;
            contracted.push(e);
        }
    }
    let mut edges = Vec::with_capacity(graph.num_edges());
    let mut origin = Vec::with_capacity(graph.num_edges());
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let (a, b) = (rep[u], rep[v]);
        if a == b {
            continue;
        }
        edges.push((a.min(b), a.max(b)));
        origin.push(e);
    }
    MultiGraph::assemble(n, edges, origin, contracted, rep)
}

/// Fragile edges and the matching structure they form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragileEdges {
    pub edges: Vec<usize>,
    mate: Vec<Option<usize>>,
}

impl FragileEdges {
    pub fn mate(&self, v: usize) -> Option<usize> {
        self.mate[v]
    }

    pub fn is_fragile(&self, u: usize, v: usize) -> bool {
        self.mate[u] == Some(v)
    }

    /// Whether the fragile edges are pairwise disjoint.
    pub fn is_matching(&self, graph: &Graph) -> bool {
        let mut used = vec![false; graph.n()];
        for &e in &self.edges {
            let (u, v) = graph.endpoints(e);
            if used[u] || used[v] {
                return false;
            }
            used[u] = true;
            used[v] = true;
        }
        true
    }
}

/// Edges `uv` with `d(u) = d(v) <= q + 3` whose other neighbours are all big.
/// Both endpoints are additionally required to be small, which the degree
/// bound already forces whenever `q + 3 < d`.
pub fn fragile_edges(graph: &Graph, profile: &DegreeProfile, q: usize) -> FragileEdges {
    let mut edges = Vec::new();
    let mut mate = vec![None; graph.n()];
    for (e, &(u, v)) in graph.edges().iter().enumerate() {
        let du = graph.degree(u);
        if du != graph.degree(v) || du > q + 3 {
            continue;
        }
        if !profile.is_small(u) || !profile.is_small(v) {
            continue;
        }
        let others_big = |a: usize, b: usize| {
            graph
                .neighbours(a)
                .iter()
                .all(|&w| w == b || profile.is_big(w))
        };
        if others_big(u, v) && others_big(v, u) {
            edges.push(e);
            mate[u] = Some(v);
            mate[v] = Some(u);
        }
    }
    FragileEdges { edges, mate }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphModel {
    GnpCapped,
    NearRegular,
}

impl FromStr for GraphModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gnp-capped" => Ok(GraphModel::GnpCapped),
            "near-regular" => Ok(GraphModel::NearRegular),
            other => Err(format!("unknown graph model {other:?}")),
        }
    }
}

/// Seeded random graph with maximum degree in `[ceil(0.8 t), t]` and no
/// isolated edge.
pub fn gen_random_graph(
    n: usize,
    target_delta: usize,
    seed: u64,
    model: GraphModel,
) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::Infeasible(format!("n = {n} < 3")));
    }
    if target_delta >= n || target_delta < 2 {
        return Err(GraphError::Infeasible(format!(
            "target delta {target_delta} must lie in [2, n - 1] for n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    pairs.shuffle(&mut rng);
    let mut deg = vec![0usize; n];
    let mut present = vec![false; pairs.len()];
    let p = target_delta as f64 / (n - 1) as f64;
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let keep = match model {
            GraphModel::NearRegular => true,
            GraphModel::GnpCapped => rng.gen_bool(p),
        };
        if keep && deg[u] < target_delta && deg[v] < target_delta {
            present[i] = true;
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    let lower = (4 * target_delta).div_ceil(5);
    if deg.iter().copied().max().unwrap_or(0) < lower {
        // top up the highest-degree vertex until the lower bound is met
        let hub = (0..n).max_by_key(|&u| (deg[u], std::cmp::Reverse(u))).unwrap_or(0);
        for (i, &(u, v)) in pairs.iter().enumerate() {
            if deg[hub] >= lower {
                break;
            }
            if !present[i] && (u == hub || v == hub) && deg[u] < target_delta && deg[v] < target_delta {
                present[i] = true;
                deg[u] += 1;
                deg[v] += 1;
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = pairs
        .iter()
        .zip(&present)
        .filter(|(_, &p)| p)
        .map(|(&e, _)| e)
        .collect();
    edges.retain(|&(u, v)| !(deg[u] == 1 && deg[v] == 1));
    let graph = Graph::from_edges(n, edges)?;
    let delta = graph.max_degree();
    if delta < lower || delta > target_delta {
        return Err(GraphError::Infeasible(format!(
            "generated max degree {delta} outside [{lower}, {target_delta}]"
        )));
    }
    Ok(graph)
}

/// Cycle on `n` vertices.
pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
}

/// Complete graph on `n` vertices.
pub fn complete(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
        .expect("valid complete graph")
}
