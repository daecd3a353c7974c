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


use std::time::Instant;

use avd_core::graph::gen_random_graph;
use avd_core::pipeline::color_graph;
use avd_core::Graph;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::colour::pipeline_failure;
use crate::io::{pretty, write_out};
use crate::opts::{BenchArgs, Format, GenArgs, RunArgs, SweepArgs};
use crate::{CmdResult, Failure};

pub fn gen(args: &RunArgs, a: &GenArgs) -> CmdResult {
    let g = gen_random_graph(a.n, a.delta, args.seed, a.model).map_err(|e| Failure::Usage(e.to_string()))?;
    let text = match args.format {
        Format::Json => pretty(&json!(g.to_json())),
        Format::Text => g.to_edge_list(),
    };
    write_out(a.out.as_deref(), &text)
}

/// The `i`-th graph of a batch: target degrees spread evenly over the range.
fn batch_graph(args: &RunArgs, a: &SweepArgs, i: u64) -> Result<Graph, Failure> {
    if a.delta_min > a.delta_max {
        return Err(Failure::Usage("delta-min exceeds delta-max".into()));
    }
    let span = (a.delta_max - a.delta_min) as u64;
    let target = a.delta_min + (i * span / a.count.saturating_sub(1).max(1)) as usize;
    gen_random_graph(a.n, target, args.seed + i, a.model).map_err(|e| Failure::Usage(e.to_string()))
}

struct Row {
    value: Value,
    line: String,
    failure: Option<Failure>,
}

fn sweep_one(args: &RunArgs, a: &SweepArgs, i: u64) -> Row {
    let outcome = batch_graph(args, a, i).and_then(|g| {
        let cfg = args.pipeline(args.seed + i)?;
        let start = Instant::now();
        let run = color_graph(&g, &cfg).map_err(pipeline_failure)?;
        Ok((run.summary(&g), start.elapsed()))
    });
    match outcome {
        Ok((s, took)) => {
            let good = s.proper && s.avd;
            let line = format!(
                "{i:>4} max degree {:>4} colours {:>4} (+{:>2}) selection {:>6} steps small {:>6} steps {:>9.1?} {}\n",
                s.delta,
                s.palette_used,
                s.palette_used as i64 - s.delta as i64,
                s.big_steps,
                s.small_steps,
                took,
                if good { "ok" } else { "FAILED" }
            );
            let failure = (!good).then(|| Failure::Verification(format!("graph {i} fails verification")));
            Row { value: json!({ "index": i, "millis": took.as_secs_f64() * 1e3, "summary": s }), line, failure }
        }
        Err(f) => Row {
            value: json!({ "index": i, "error": format!("{f:?}") }),
            line: format!("{i:>4} {f:?}\n"),
            failure: Some(f),
        },
    }
}

/// Worst failure wins: regime problems over verification over usage.
fn combine(rows: Vec<Row>, format: Format) -> CmdResult {
    let text = match format {
        Format::Json => pretty(&Value::Array(rows.iter().map(|r| r.value.clone()).collect())),
        Format::Text => rows.iter().map(|r| r.line.as_str()).collect(),
    };
    write_out(None, &text)?;
    let rank = |f: &Failure| match f {
        Failure::Regime(_) => 0,
        Failure::Verification(_) => 1,
        Failure::Usage(_) => 2,
    };
    match rows.into_iter().filter_map(|r| r.failure).min_by_key(rank) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

pub fn sweep(args: &RunArgs, a: &SweepArgs) -> CmdResult {
    let rows = args.pool()?.install(|| (0..a.count).into_par_iter().map(|i| sweep_one(args, a, i)).collect());
    combine(rows, args.format)
}

pub fn bench(args: &RunArgs, a: &BenchArgs) -> CmdResult {
    let graphs: Vec<Graph> = (0..a.sweep.count).map(|i| batch_graph(args, &a.sweep, i)).collect::<Result<_, _>>()?;
    // timings are taken one graph at a time so that workers do not compete
    let mut rows = Vec::new();
    for (i, g) in graphs.iter().enumerate() {
        let cfg = args.pipeline(args.seed + i as u64)?;
        let mut times = Vec::new();
        for _ in 0..a.repeats.max(1) {
            let start = Instant::now();
            color_graph(g, &cfg).map_err(pipeline_failure)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        rows.push(Row {
            value: json!({ "index": i, "n": g.n(), "delta": g.max_degree(), "median_millis": median }),
            line: format!("{i:>4} n {:>5} max degree {:>4} median {median:>9.3} ms\n", g.n(), g.max_degree()),
            failure: None,
        });
    }
    combine(rows, args.format)
}
