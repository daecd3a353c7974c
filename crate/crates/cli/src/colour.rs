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


use avd_core::big_phase::Context;
use avd_core::codec::{encode_big, encode_small};
use avd_core::colouring::ColouringJson;
use avd_core::graph::GraphError;
use avd_core::oracle::{verify as check, VerificationReport};
use avd_core::pipeline::{color_graph, PipelineError, PipelineRun, RunSummary};
use avd_core::small_phase::SmallContext;
use avd_core::{Graph, PartialEdgeColouring};
use serde_json::{json, Value};

use crate::io::{pretty, read_graph, read_text, write_out};
use crate::opts::{ColorArgs, Format, RunArgs, VerifyArgs};
use crate::{CmdResult, Failure};

pub fn pipeline_failure(e: PipelineError) -> Failure {
    let msg = e.to_string();
    if e.is_regime_failure() {
        return Failure::Regime(format!("{msg} (outside the regime the randomized phases need)"));
    }
    match e {
        PipelineError::Classify(GraphError::IsolatedEdge(..)) => {
            Failure::Usage(format!("{msg}; theory mode requires a graph without isolated edges"))
        }
        PipelineError::Classify(_) => Failure::Usage(msg),
        _ => Failure::Verification(msg),
    }
}

fn trace_lines(run: &PipelineRun) -> String {
    let tagged = |phase: &str, v: Value| {
        let mut v = v;
        v.as_object_mut().expect("step records are objects").insert("phase".into(), json!(phase));
        serde_json::to_string(&v).expect("serializable") + "\n"
    };
    let big = run.big_trace.steps.iter().map(|s| tagged("big", json!(s)));
    let small = run.small_trace.steps.iter().map(|s| tagged("small", json!(s)));
    big.chain(small).collect()
}

fn log_lines(g: &Graph, run: &PipelineRun, args: &RunArgs) -> Result<String, Failure> {
    let ctx = Context::new(g, &run.profile, &run.initial, args.q, args.mode)
        .map_err(|e| Failure::Regime(e.to_string()))?;
    let big = encode_big(&ctx, &run.big_trace).map_err(|e| Failure::Usage(format!("encoding the selection log: {e}")))?;
    let sctx = SmallContext::new(g, &run.profile, run.after_big.palette, args.mode);
    let small = encode_small(&sctx, &run.after_big, &run.small_trace)
        .map_err(|e| Failure::Usage(format!("encoding the small-vertex log: {e}")))?;
    Ok(format!("{}\n{}\n", big.to_json(), small.to_json()))
}

fn report_text(report: &VerificationReport) -> String {
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut out = format!(
        "proper: {}, distinguishing: {}, colours used: {}\n",
        yes(report.proper),
        yes(report.avd),
        report.palette_used
    );
    for o in report.offending.iter().take(10) {
        out += &format!("  edge {}-{}: {} (sets {:?} and {:?})\n", o.u, o.v, o.reason, o.su, o.sv);
    }
    if report.offending.len() > 10 {
        out += &format!("  ... {} more\n", report.offending.len() - 10);
    }
    out
}

fn summary_text(s: &RunSummary) -> String {
    let mut out = format!(
        "vertices {}, edges {}, max degree {}, big from degree {}\n\
         palette used {} of budget {} (max degree + {})\n\
         selection phase: {} steps, conflicts by kind {:?}, {} marked edges\n\
         small-vertex pass: {} steps, {} collisions\n",
        s.n,
        s.edges,
        s.delta,
        s.d,
        s.palette_used,
        s.palette_budget,
        s.palette_used as i64 - s.delta as i64,
        s.big_steps,
        s.big_events,
        s.marked,
        s.small_steps,
        s.small_events,
    );
    for w in &s.warnings {
        out += &format!("warning: {w}\n");
    }
    out
}

fn verified(report: &VerificationReport) -> CmdResult {
    if report.proper && report.avd {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "colouring fails verification at {} edge(s)",
            report.offending.len()
        )))
    }
}

pub fn color(args: &RunArgs, a: &ColorArgs) -> CmdResult {
    let g = read_graph(&a.input)?;
    let cfg = args.pipeline(args.seed)?;
    let run = color_graph(&g, &cfg).map_err(pipeline_failure)?;
    let summary = run.summary(&g);
    let colouring = run.colouring.to_json(&g);
    if let Some(p) = &a.out {
        write_out(Some(p), &pretty(&json!(colouring)))?;
    }
    if let Some(p) = &a.trace_out {
        write_out(Some(p), &trace_lines(&run))?;
    }
    if let Some(p) = &a.log_out {
        write_out(Some(p), &log_lines(&g, &run, args)?)?;
    }
    let text = match args.format {
        Format::Json => {
            let mut v = json!({ "summary": summary, "report": run.report });
            if a.out.is_none() {
                v["colouring"] = json!(colouring);
            }
            pretty(&v)
        }
        Format::Text => summary_text(&summary) + &report_text(&run.report),
    };
    write_out(None, &text)?;
    verified(&run.report)
}

pub fn verify(args: &RunArgs, a: &VerifyArgs) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let text = read_text(&a.colouring)?;
    let json: ColouringJson = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.colouring.display())))?;
    let c = PartialEdgeColouring::from_json(&g, &json)
        .ok_or_else(|| Failure::Usage("colouring names an edge that is not in the graph".into()))?;
    let report = check(&g, &c).map_err(|e| Failure::Verification(e.to_string()))?;
    let text = match args.format {
        Format::Json => pretty(&json!(report)),
        Format::Text => report_text(&report),
    };
    write_out(None, &text)?;
    verified(&report)
}
