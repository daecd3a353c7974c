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


//! JSON form of the logs. The word is hex of its length-prefixed byte form
//! and the integers are decimal strings, `-1` marking a step without conflict.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::big::BigLog;
use super::dyck::PartialDyckWord;
use super::small::SmallLog;
use super::{malformed, CodecError};
use crate::colouring::{Colour, PartialEdgeColouring};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "lowercase")]
pub enum LogJson {
    Big {
        w: String,
        gamma: Vec<String>,
        delta: Vec<String>,
        final_uplus: Vec<Option<[usize; 2]>>,
    },
    Small {
        w: String,
        gamma: Vec<String>,
        delta: Vec<String>,
        palette: Colour,
        final_colouring: Vec<Option<Colour>>,
    },
}

fn ints_out(xs: &[Option<BigUint>]) -> Vec<String> {
    xs.iter()
        .map(|x| x.as_ref().map_or_else(|| "-1".to_string(), BigUint::to_string))
        .collect()
}

fn ints_in(xs: &[String]) -> Result<Vec<Option<BigUint>>, CodecError> {
    xs.iter()
        .map(|s| {
            if s == "-1" {
                Ok(None)
            } else {
                s.parse::<BigUint>().map(Some).map_err(|_| malformed(format!("bad integer {s:?}")))
            }
        })
        .collect()
}

fn word_in(hex_text: &str) -> Result<PartialDyckWord, CodecError> {
    let bytes = hex::decode(hex_text).map_err(|_| malformed("word is not hex"))?;
    PartialDyckWord::from_bytes(&bytes)
}

impl BigLog {
    pub fn to_json(&self) -> String {
        let j = LogJson::Big {
            w: hex::encode(self.w.to_bytes()),
            gamma: ints_out(&self.gamma),
            delta: ints_out(&self.delta),
            final_uplus: self.final_uplus.clone(),
        };
        serde_json::to_string(&j).expect("log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        match serde_json::from_str(text).map_err(|e| malformed(e.to_string()))? {
            LogJson::Big { w, gamma, delta, final_uplus } => Ok(BigLog {
                w: word_in(&w)?,
                gamma: ints_in(&gamma)?,
                delta: ints_in(&delta)?,
                final_uplus,
            }),
            LogJson::Small { .. } => Err(malformed("expected a selection-phase log")),
        }
    }
}

impl SmallLog {
    pub fn to_json(&self) -> String {
        let j = LogJson::Small {
            w: hex::encode(self.w.to_bytes()),
            gamma: ints_out(&self.gamma),
            delta: ints_out(&self.delta),
            palette: self.final_colouring.palette,
            final_colouring: self.final_colouring.colours.clone(),
        };
        serde_json::to_string(&j).expect("log serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodecError> {
        match serde_json::from_str(text).map_err(|e| malformed(e.to_string()))? {
            LogJson::Small { w, gamma, delta, palette, final_colouring } => Ok(SmallLog {
                w: word_in(&w)?,
                gamma: ints_in(&gamma)?,
                delta: ints_in(&delta)?,
                final_colouring: PartialEdgeColouring {
                    colours: final_colouring,
                    palette,
                },
            }),
            LogJson::Big { .. } => Err(malformed("expected a small-phase log")),
        }
    }
}
