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


//! Graph families shared by the integration tests.

#![allow(dead_code)]

use avd_core::colouring::{extend_to_original, vizing_colour, PartialEdgeColouring};
pub use avd_core::families::*;
use avd_core::graph::{classify, contract_pendant_pairs, DegreeProfile, Epsilon, Graph, Mode};

pub fn eps(s: &str) -> Epsilon {
    s.parse().expect("valid epsilon")
}

/// Classification plus the lifted initial colouring.
pub fn prepared(g: &Graph, e: Epsilon) -> (DegreeProfile, PartialEdgeColouring) {
    let p = classify(g, e, Mode::Practical).expect("practical classification");
    let gp = contract_pendant_pairs(g, &p);
    let c = extend_to_original(g, &gp, &vizing_colour(&gp)).expect("lift succeeds");
    (p, c)
}

