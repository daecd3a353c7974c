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


//! Command-line options. Every global flag can also be set through an
//! `AVD_`-prefixed environment variable.

use std::path::PathBuf;

use avd_core::big_phase::{DEFAULT_Q, DEFAULT_STEP_CAP};
use avd_core::graph::GraphModel;
use avd_core::pipeline::PipelineConfig;
use avd_core::{Epsilon, Mode};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "avd", version, about = "Adjacent-vertex-distinguishing edge colouring")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Degree ratio below one half, as a decimal or a fraction such as 1/20
    /// [default: 0.1, or 0.004 in theory mode]
    #[arg(long, global = true, env = "AVD_EPS")]
    pub eps: Option<Epsilon>,
    /// Pair budget of the selection phase; the palette is max degree + q + 6
    #[arg(short, long, global = true, env = "AVD_Q", default_value_t = DEFAULT_Q)]
    pub q: usize,
    #[arg(long, global = true, env = "AVD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// `practical` relaxes sampling windows so small graphs finish; `theory`
    /// enforces every hypothesis of the analysis
    #[arg(long, global = true, env = "AVD_MODE", default_value = "practical")]
    pub mode: Mode,
    /// Iteration cap for each randomized phase
    #[arg(long, global = true, env = "AVD_STEP_CAP", default_value_t = DEFAULT_STEP_CAP)]
    pub step_cap: usize,
    /// Check the selection invariants at every loop test
    #[arg(long = "assert", global = true, env = "AVD_ASSERT")]
    pub assert_invariants: bool,
    #[arg(long, global = true, env = "AVD_FORMAT", value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads for batch commands [default: all cores]
    #[arg(long, global = true, env = "AVD_WORKERS")]
    pub workers: Option<usize>,
}

impl RunArgs {
    pub fn eps(&self) -> Epsilon {
        self.eps.unwrap_or_else(|| {
            let text = if self.mode == Mode::Theory { "0.004" } else { "0.1" };
            text.parse().expect("valid default")
        })
    }

    pub fn pipeline(&self, seed: u64) -> Result<PipelineConfig, Failure> {
        if self.q < 1 {
            return Err(Failure::Usage("q must be positive".into()));
        }
        if self.step_cap == 0 {
            return Err(Failure::Usage("step cap must be positive".into()));
        }
        Ok(PipelineConfig {
            eps: self.eps(),
            q: self.q,
            seed,
            mode: self.mode,
            step_cap: self.step_cap,
            assert_invariants: self.assert_invariants,
        })
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.unwrap_or(0))
            .build()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded random graph
    Gen(GenArgs),
    /// Colour a graph and verify the result
    Color(ColorArgs),
    /// Check a colouring against a graph
    Verify(VerifyArgs),
    /// Encode and decode logged runs and compare them with the originals
    CodecTest(CodecTestArgs),
    /// Counting bounds: the optimised constant, certifier sweeps, word counts
    Analyze(AnalyzeArgs),
    /// Colour a batch of random graphs in parallel
    Sweep(SweepArgs),
    /// Time the pipeline on random graphs
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(short, long, default_value_t = 200)]
    pub n: usize,
    /// Target maximum degree
    #[arg(short = 'k', long = "delta", default_value_t = 60)]
    pub delta: usize,
    #[arg(long, default_value = "gnp-capped")]
    pub model: GraphModel,
    /// Write here instead of standard output
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ColorArgs {
    /// Edge list or graph JSON; `-` reads standard input
    pub input: PathBuf,
    /// Write the colouring JSON here
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Write both phase traces here as JSON lines
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Write both encoded logs here as JSON lines
    #[arg(long)]
    pub log_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub graph: PathBuf,
    /// Colouring JSON as written by `color --out`
    pub colouring: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Near-regular core plus one hub; every conflict kind shows up at q = 5
    Hub,
    /// Dense small graphs, where a vertex collects too many pairs
    Dense,
    /// Small core beside a star, driving the small-vertex pass
    Small,
    All,
}

#[derive(Debug, Args)]
pub struct CodecTestArgs {
    /// Use this graph for every seed instead of the built-in families
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::All)]
    pub family: Family,
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// Truncate each run after this many steps; the selection phase need not
    /// finish on the hub family at small q
    #[arg(short = 't', long, default_value_t = 400)]
    pub steps: usize,
    /// Append a spurious step to every log before decoding
    #[arg(long)]
    pub corrupt: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Evaluate the optimised constant for the given q
    #[arg(long)]
    pub constant: bool,
    /// Certify the selection phase over a log-scale grid of degrees
    #[arg(long)]
    pub sweep: bool,
    /// Cross-check weighted word counts against series coefficients
    #[arg(long)]
    pub dyck: bool,
    /// Report where the small-vertex window outgrows its requirement
    #[arg(long)]
    pub small_window: bool,
    /// Largest word length for --dyck
    #[arg(short = 't', long, default_value_t = 20)]
    pub t: usize,
    /// Descent weights for --dyck as `length:weight` pairs
    #[arg(long, default_value = "1:1,2:1")]
    pub spec: String,
    /// Sweep range, as powers of ten
    #[arg(long, default_value_t = 2)]
    pub from_exp: u32,
    #[arg(long, default_value_t = 12)]
    pub to_exp: u32,
    /// Grid points per decade
    #[arg(long, default_value_t = 2)]
    pub per_decade: u32,
    /// Relative slack of the probe point below the root
    #[arg(long, default_value_t = 0.01)]
    pub eps1: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(short, long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 40)]
    pub delta_min: usize,
    #[arg(long, default_value_t = 80)]
    pub delta_max: usize,
    #[arg(long, default_value_t = 50)]
    pub count: u64,
    #[arg(long, default_value = "gnp-capped")]
    pub model: GraphModel,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}
