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


//! `avd`: colour graphs, check the log codec and run the bound analysis.

mod analyze;
mod batch;
mod colour;
mod io;
mod opts;

use std::process::ExitCode;

use clap::Parser;

use opts::{Cli, Command};

/// A failed command, carrying the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// The output was produced but did not verify, or a round trip differed.
    Verification(String),
    /// Bad arguments, unreadable input or an unmet input precondition.
    Usage(String),
    /// Outside the regime the randomized phases need, or a step cap was hit.
    Regime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Regime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Regime(m) => m,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(a) => batch::gen(&cli.run, a),
        Command::Color(a) => colour::color(&cli.run, a),
        Command::Verify(a) => colour::verify(&cli.run, a),
        Command::CodecTest(a) => codec_test::run(&cli.run, a),
        Command::Analyze(a) => analyze::run(&cli.run, a),
        Command::Sweep(a) => batch::sweep(&cli.run, a),
        Command::Bench(a) => batch::bench(&cli.run, a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("avd: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
