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


//! Seeded graph families used by the test suites and the command-line
//! codec and sweep commands.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{gen_random_graph, Graph, GraphModel};

/// Near-regular core on `n` vertices plus one extra vertex joined to `hub`
/// random core vertices. With a small `q` these collide in every way the
/// selection phase recognises.
pub fn hub_family(n: usize, k: usize, hub: usize, seed: u64) -> Option<Graph> {
    let core = gen_random_graph(n, k, seed, GraphModel::NearRegular).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = BTreeSet::new();
    while picked.len() < hub {
        picked.insert(rng.gen_range(0..n));
    }
    let mut edges = core.edges().to_vec();
    edges.extend(picked.into_iter().map(|v| (v, n)));
    Graph::from_edges(n + 1, edges).ok()
}

/// Dense graphs on 16 vertices, where some inverse overflows at `q = 5`.
pub fn dense_family(seed: u64) -> Option<Graph> {
    gen_random_graph(16, 12, seed, GraphModel::GnpCapped).ok()
}

/// Cubic-ish core with a twelve-leaf star at vertex 0, so the core is small
/// and its edges are recoloured one by one.
pub fn small_family(seed: u64) -> Option<Graph> {
    let core = gen_random_graph(20, 3, seed, GraphModel::NearRegular).ok()?;
    let mut edges = core.edges().to_vec();
    edges.extend((0..12).map(|i| (0, 20 + i)));
    Graph::from_edges(32, edges).ok()
}

/// Big hubs of degree 80 joined in a clique, the rest of each neighbourhood
/// private leaves. At `eps = 1/20` the sampling window is positive.
pub fn theory_family(hubs: usize) -> Graph {
    let mut edges = Vec::new();
    for a in 0..hubs {
        for b in a + 1..hubs {
            edges.push((a, b));
        }
    }
    let mut next = hubs;
    for a in 0..hubs {
        for _ in 0..80 - (hubs - 1) {
            edges.push((a, next));
            next += 1;
        }
    }
    Graph::from_edges(next, edges).expect("valid construction")
}

/// Seeded family for the palette experiment: `n = 200`, target degree
/// spread over `[40, 80]`.
pub fn palette_family(i: u64) -> Graph {
    let target = 40 + (i as usize * 40) / 49;
    gen_random_graph(200, target, 1000 + i, GraphModel::GnpCapped).expect("generator succeeds")
}
