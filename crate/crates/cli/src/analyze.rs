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


use avd_core::bounds::{
    certify_big_phase, constant_check, dyck_count_dp, first_certified, small_phase_bound_check, solve_tau,
    tree_series, BoundsError, DescentSpec,
};
use avd_core::Epsilon;
use serde_json::{json, Value};

use crate::io::{pretty, write_out};
use crate::opts::{AnalyzeArgs, Format, RunArgs};
use crate::{CmdResult, Failure};

/// Analysis defaults to the ratio small enough for the certificate to exist.
fn analysis_eps(args: &RunArgs) -> Epsilon {
    args.eps.unwrap_or_else(|| "0.004".parse().expect("valid default"))
}

fn parse_spec(text: &str) -> Result<DescentSpec, Failure> {
    let bad = || Failure::Usage(format!("descent weights {text:?}: expected length:weight pairs"));
    let entries = text
        .split(',')
        .map(|part| {
            let (l, w) = part.trim().split_once(':').ok_or_else(bad)?;
            Ok((l.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<(usize, u64)>, Failure>>()?;
    DescentSpec::from_small(&entries).map_err(|e| Failure::Usage(e.to_string()))
}

fn constant(args: &RunArgs) -> (Value, String) {
    let c = constant_check(args.q);
    let below = c < 0.125;
    let text = format!(
        "constant for q = {}: {c:.6} ({} 1/8)\n",
        args.q,
        if below { "below" } else { "not below" }
    );
    (json!({ "q": args.q, "constant": c, "below_one_eighth": below }), text)
}

fn grid(a: &AnalyzeArgs) -> Vec<usize> {
    let steps = a.per_decade.max(1);
    let mut out: Vec<usize> = (a.from_exp * steps..=a.to_exp * steps)
        .map(|i| 10f64.powf(i as f64 / steps as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn sweep(args: &RunArgs, a: &AnalyzeArgs) -> (Value, String) {
    let eps = analysis_eps(args);
    let mut rows = Vec::new();
    let mut text = format!("{:>16} {:>14} {:>12} {:>12} {:>10}\n", "max degree", "threshold", "ln window", "ln growth", "certified");
    for delta in grid(a) {
        match certify_big_phase(delta, eps, args.q, a.eps1) {
            Ok(c) => {
                text += &format!(
                    "{:>16} {:>14} {:>12.4} {:>12.4} {:>10}\n",
                    delta, c.d, c.ln_s, c.ln_gamma, c.certified
                );
                rows.push(json!(c));
            }
            Err(BoundsError::OutOfRegime { s }) => {
                text += &format!("{delta:>16} {:>14} {:>12} {:>12} {:>10}\n", eps.threshold(delta), "empty", "-", "false");
                rows.push(json!({ "delta": delta, "out_of_regime": true, "s": s.to_string(), "certified": false }));
            }
            Err(e) => {
                text += &format!("{delta:>16} error: {e}\n");
                rows.push(json!({ "delta": delta, "error": e.to_string(), "certified": false }));
            }
        }
    }
    let lo = 10usize.pow(a.from_exp.min(18));
    let hi = 10usize.pow(a.to_exp.min(18));
    let first = first_certified(eps, args.q, a.eps1, lo, hi);
    text += &match first {
        Some(d) => format!("first certified max degree in range: {d}\n"),
        None => "no certified max degree in range\n".to_string(),
    };
    let v = json!({ "eps": eps.to_string(), "q": args.q, "eps1": a.eps1, "rows": rows, "first_certified": first });
    (v, text)
}

fn dyck(a: &AnalyzeArgs) -> Result<(Value, String, bool), Failure> {
    let spec = parse_spec(&a.spec)?;
    let series = tree_series(&spec, a.t + 1);
    let mut rows = Vec::new();
    let mut text = format!("{:>4} {:>24} {:>24}\n", "t", "word count", "series");
    let mut all_equal = true;
    for t in 0..=a.t {
        let count = dyck_count_dp(t, &spec);
        let coeff = &series[t + 1];
        all_equal &= count == *coeff;
        text += &format!("{t:>4} {count:>24} {coeff:>24}\n");
        rows.push(json!({ "t": t, "count": count.to_string(), "series": coeff.to_string() }));
    }
    let root = solve_tau(&spec, 1e-12).map_err(|e| Failure::Usage(e.to_string()))?;
    text += &format!(
        "characteristic point {:.12}, growth rate {:.12}, counts match series: {all_equal}\n",
        root.tau(),
        root.gamma()
    );
    let v = json!({ "rows": rows, "tau": root.tau(), "gamma": root.gamma(), "match": all_equal });
    Ok((v, text, all_equal))
}

fn small_window(args: &RunArgs) -> (Value, String) {
    let eps = analysis_eps(args);
    let check = small_phase_bound_check(1, eps);
    let text = format!(
        "small-vertex window exceeds its requirement for every max degree from {} (eps = {eps})\n",
        check.from_delta
    );
    (json!({ "eps": eps.to_string(), "from_delta": check.from_delta }), text)
}

pub fn run(args: &RunArgs, a: &AnalyzeArgs) -> CmdResult {
    let none = !(a.constant || a.sweep || a.dyck || a.small_window);
    let mut out = serde_json::Map::new();
    let mut text = String::new();
    let mut ok = true;
    if a.constant || none {
        let (v, t) = constant(args);
        out.insert("constant".into(), v);
        text += &t;
    }
    if a.sweep {
        let (v, t) = sweep(args, a);
        out.insert("sweep".into(), v);
        text += &t;
    }
    if a.dyck {
        let (v, t, equal) = dyck(a)?;
        out.insert("dyck".into(), v);
        text += &t;
        ok &= equal;
    }
    if a.small_window {
        let (v, t) = small_window(args);
        out.insert("small_window".into(), v);
        text += &t;
    }
    let rendered = match args.format {
        Format::Json => pretty(&Value::Object(out)),
        Format::Text => text,
    };
    write_out(None, &rendered)?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification("word counts differ from the series coefficients".into()))
    }
}
