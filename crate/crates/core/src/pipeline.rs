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


//! The full colouring pipeline, from an input graph to a verified
//! distinguishing colouring.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::big_phase::{
    finalize_big, run_big_phase, BigPhaseConfig, BigPhaseError, Context, ExecutionTrace,
    SelectionState, DEFAULT_Q, DEFAULT_STEP_CAP,
};
use crate::colouring::{
    base_delta, contracted_edges_separated, extend_to_original, vizing_colour, Colour,
    ColouringError, PartialEdgeColouring,
};
use crate::graph::{classify, contract_pendant_pairs, DegreeProfile, Epsilon, Graph, GraphError, Mode};
use crate::oracle::{verify, OracleError, VerificationReport};
use crate::small_phase::{run_small_phase, SmallPhaseConfig, SmallPhaseError, SmallTrace};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("classify: {0}")]
    Classify(#[from] GraphError),
    #[error("initial colouring: {0}")]
    Colouring(#[from] ColouringError),
    #[error("big phase: {0}")]
    Big(#[from] BigPhaseError),
    #[error("small phase: {0}")]
    Small(#[from] SmallPhaseError),
    #[error("verify: {0}")]
    Verify(#[from] OracleError),
}

impl PipelineError {
    /// Whether the failure comes from running outside the regime where the
    /// randomized phases are guaranteed to work, or from a step cap.
    pub fn is_regime_failure(&self) -> bool {
        matches!(
            self,
            PipelineError::Classify(GraphError::ThresholdTooLarge { .. })
                | PipelineError::Big(
                    BigPhaseError::OutOfRegime { .. }
                        | BigPhaseError::TooFewAdmissible { .. }
                        | BigPhaseError::NoAdmissiblePair { .. }
                        | BigPhaseError::StepCap(_)
                )
                | PipelineError::Small(
                    SmallPhaseError::TooFewColours { .. }
                        | SmallPhaseError::NoColour { .. }
                        | SmallPhaseError::StepCap(_)
                )
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub eps: Epsilon,
    pub q: usize,
    pub seed: u64,
    pub mode: Mode,
    pub step_cap: usize,
    pub assert_invariants: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eps: Epsilon::new(1, 10).expect("valid"),
            q: DEFAULT_Q,
            seed: 0,
            mode: Mode::Practical,
            step_cap: DEFAULT_STEP_CAP,
            assert_invariants: false,
        }
    }
}

/// Seed of the small-vertex pass, derived from the run seed so each phase has
/// its own stream.
pub fn small_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub profile: DegreeProfile,
    pub base_delta: usize,
    /// Colour budget `base_delta + q + 6`.
    pub palette: Colour,
    pub initial: PartialEdgeColouring,
    pub contracted_ok: bool,
    pub selection: SelectionState,
    pub big_trace: ExecutionTrace,
    pub after_big: PartialEdgeColouring,
    pub marked: Vec<usize>,
    pub small_trace: SmallTrace,
    pub colouring: PartialEdgeColouring,
    pub report: VerificationReport,
    pub theory_regime: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n: usize,
    pub edges: usize,
    pub delta: usize,
    pub d: usize,
    pub base_delta: usize,
    pub palette_budget: Colour,
    pub palette_used: Colour,
    pub proper: bool,
    pub avd: bool,
    pub big_steps: usize,
    pub big_events: [usize; 5],
    pub small_steps: usize,
    pub small_events: usize,
    pub marked: usize,
    pub contracted_ok: bool,
    pub theory_regime: bool,
    pub warnings: Vec<String>,
}

impl PipelineRun {
    pub fn summary(&self, graph: &Graph) -> RunSummary {
        RunSummary {
            n: graph.n(),
            edges: graph.num_edges(),
            delta: self.profile.delta,
            d: self.profile.d,
            base_delta: self.base_delta,
            palette_budget: self.palette,
            palette_used: self.report.palette_used,
            proper: self.report.proper,
            avd: self.report.avd,
            big_steps: self.big_trace.steps.len(),
            big_events: self.big_trace.event_counts(),
            small_steps: self.small_trace.steps.len(),
            small_events: self.small_trace.event_count(),
            marked: self.marked.len(),
            contracted_ok: self.contracted_ok,
            theory_regime: self.profile.in_theory_regime(),
            warnings: self.profile.warnings.clone(),
        }
    }
}

/// Classify, contract, colour, lift, select, finalize, recolour small edges
/// and verify.
pub fn color_graph(graph: &Graph, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let profile = classify(graph, cfg.eps, cfg.mode)?;
    let gprime = contract_pendant_pairs(graph, &profile);
    let cprime = vizing_colour(&gprime);
    let initial = extend_to_original(graph, &gprime, &cprime)?;
    let contracted_ok = contracted_edges_separated(graph, &gprime, &initial);
    let bd = base_delta(graph, &gprime);
    let ctx = Context::new(graph, &profile, &initial, cfg.q, cfg.mode)?;
    let big_cfg = BigPhaseConfig {
        q: cfg.q,
        seed: cfg.seed,
        mode: cfg.mode,
        step_cap: cfg.step_cap,
        assert_invariants: cfg.assert_invariants,
    };
    let (selection, big_trace) = run_big_phase(&ctx, &big_cfg)?;
    let fin = finalize_big(&ctx, &selection, bd)?;
    let small_cfg = SmallPhaseConfig {
        seed: small_seed(cfg.seed),
        mode: cfg.mode,
        step_cap: cfg.step_cap,
    };
    let (colouring, small_trace) = run_small_phase(graph, &profile, &fin.colouring, &small_cfg)?;
    let report = verify(graph, &colouring)?;
    let theory_regime = profile.in_theory_regime();
    Ok(PipelineRun {
        profile,
        base_delta: bd,
        palette: (bd + cfg.q + 6) as Colour,
        initial,
        contracted_ok,
        selection,
        big_trace,
        after_big: fin.colouring,
        marked: fin.marked,
        small_trace,
        colouring,
        report,
        theory_regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_random_graph, GraphModel};

    #[test]
    fn random_graphs_come_out_distinguishing() {
        for seed in 0..6 {
            let g = gen_random_graph(100, 30, seed, GraphModel::GnpCapped).unwrap();
            let cfg = PipelineConfig { seed, assert_invariants: true, ..Default::default() };
            let run = color_graph(&g, &cfg).unwrap();
            assert!(run.report.proper && run.report.avd);
            assert!(run.report.palette_used as usize <= g.max_degree() + DEFAULT_Q + 6);
            assert!(run.contracted_ok);
        }
    }

    #[test]
    fn mixed_degrees_exercise_both_phases() {
        let core = gen_random_graph(30, 4, 4, GraphModel::NearRegular).unwrap();
        let mut edges = core.edges().to_vec();
        for hub in 0..3 {
            edges.extend((0..24).map(|i| (hub, 30 + 24 * hub + i)));
        }
        let g = Graph::from_edges(30 + 72, edges).unwrap();
        let run = color_graph(&g, &PipelineConfig { seed: 4, ..Default::default() }).unwrap();
        assert!(!run.small_trace.steps.is_empty());
        assert!(!run.big_trace.steps.is_empty());
        assert!(run.report.avd);
    }

    #[test]
    fn identical_inputs_identical_runs() {
        let g = gen_random_graph(120, 40, 9, GraphModel::NearRegular).unwrap();
        let cfg = PipelineConfig { seed: 17, ..Default::default() };
        let a = color_graph(&g, &cfg).unwrap();
        let b = color_graph(&g, &cfg).unwrap();
        assert_eq!(a.colouring, b.colouring);
        assert_eq!(a.big_trace, b.big_trace);
        assert_eq!(a.small_trace, b.small_trace);
        assert_eq!(a.summary(&g), b.summary(&g));
    }

    #[test]
    fn theory_mode_rejects_desk_scale() {
        let g = gen_random_graph(100, 30, 1, GraphModel::GnpCapped).unwrap();
        let cfg = PipelineConfig { mode: Mode::Theory, ..Default::default() };
        let err = color_graph(&g, &cfg).unwrap_err();
        assert!(err.is_regime_failure(), "{err}");
    }
}
