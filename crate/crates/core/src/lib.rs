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


//! Adjacent-vertex-distinguishing (AVD) proper edge colouring with at most
//! `delta + q + 6` colours.
//!
//! The pipeline classifies vertices by degree, colours a contracted
//! multigraph, lifts that colouring back, runs a randomized selection phase on
//! big vertices and then a randomized recolouring pass on small vertices. Both
//! randomized phases come with a lossless log codec that recovers every random
//! choice from a compact record of the run.

pub mod big_phase;
pub mod bounds;
pub mod codec;
pub mod colouring;
pub mod families;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod small_phase;

pub use colouring::PartialEdgeColouring;
pub use graph::{classify, DegreeProfile, Epsilon, Graph, Mode, MultiGraph};
