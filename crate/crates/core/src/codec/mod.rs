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


//! Lossless logs of randomized runs.
//!
//! A log records one `0` per step and a run of `1`s per conflict in a partial
//! Dyck word, plus two integers per conflicting step and the final state.
//! Decoding walks the log backwards and recovers every random choice exactly.

pub mod big;
pub mod dyck;
pub mod radix;
pub mod serial;
pub mod small;

use thiserror::Error;

pub use big::{decode_big, encode_big, BigLog};
pub use dyck::PartialDyckWord;
pub use small::{decode_small, encode_small, SmallLog};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("malformed log: {0}")]
    Malformed(String),
    #[error("step {step}: reconstruction mismatch ({what})")]
    Mismatch { step: usize, what: String },
    #[error("trace does not match the graph: {0}")]
    Inconsistent(String),
    #[error("q = {0} makes conflict kinds indistinguishable by descent length; need q >= 5")]
    UnsupportedQ(usize),
    #[error("word is not a partial Dyck word")]
    NotDyck,
}

pub(crate) fn malformed(msg: impl Into<String>) -> CodecError {
    CodecError::Malformed(msg.into())
}
