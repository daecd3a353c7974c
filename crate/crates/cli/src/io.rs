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


use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use avd_core::graph::GraphJson;
use avd_core::Graph;

use crate::Failure;

pub fn read_text(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Usage(format!("reading standard input: {e}")))?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))
}

/// Reads either the edge-list format or graph JSON, told apart by the first
/// non-blank character.
pub fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let text = read_text(path)?;
    let bad = |e: String| Failure::Usage(format!("{}: {e}", path.display()));
    if text.trim_start().starts_with('{') {
        let json: GraphJson = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        Graph::from_json(&json).map_err(|e| bad(e.to_string()))
    } else {
        Graph::parse_edge_list(&text).map_err(|e| bad(e.to_string()))
    }
}

/// Writes to `path`, or to standard output when there is none.
pub fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("writing {}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Usage(format!("writing standard output: {e}"))),
    }
}

pub fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}
