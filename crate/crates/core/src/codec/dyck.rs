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


//! Partial Dyck words: binary words whose every prefix has at least as many
//! zeros as ones.

use serde::{Deserialize, Serialize};

use super::CodecError;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWord", into = "RawWord")]
pub struct PartialDyckWord {
    bits: Vec<bool>,
    /// Kept alongside the bits so that appending stays constant time.
    zeros: usize,
}

#[derive(Serialize, Deserialize)]
struct RawWord {
    bits: Vec<bool>,
}

impl TryFrom<RawWord> for PartialDyckWord {
    type Error = CodecError;
    fn try_from(raw: RawWord) -> Result<Self, CodecError> {
        PartialDyckWord::from_bits(raw.bits)
    }
}

impl From<PartialDyckWord> for RawWord {
    fn from(w: PartialDyckWord) -> Self {
        RawWord { bits: w.bits }
    }
}

impl PartialDyckWord {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates the prefix condition.
    pub fn from_bits(bits: Vec<bool>) -> Result<Self, CodecError> {
        let mut height = 0i64;
        for &b in &bits {
            height += if b { -1 } else { 1 };
            if height < 0 {
                return Err(CodecError::NotDyck);
            }
        }
        let zeros = bits.iter().filter(|&&b| !b).count();
        Ok(PartialDyckWord { bits, zeros })
    }

    /// Parses a string of `0` and `1` characters.
    pub fn parse(s: &str) -> Result<Self, CodecError> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CodecError::NotDyck),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push_zero(&mut self) {
        self.bits.push(false);
        self.zeros += 1;
    }

    /// Appends a descent; panics if it would break the prefix condition.
    pub fn push_ones(&mut self, count: usize) {
        assert!(count <= self.defect(), "descent deeper than the current height");
        self.bits.extend(std::iter::repeat_n(true, count));
    }

    pub fn semilength(&self) -> usize {
        self.zeros
    }

    pub fn ones(&self) -> usize {
        self.bits.len() - self.semilength()
    }

    /// Zeros minus ones.
    pub fn defect(&self) -> usize {
        self.semilength() - self.ones()
    }

    pub fn is_full(&self) -> bool {
        self.defect() == 0
    }

    /// Lengths of the maximal runs of ones, in order.
    pub fn descents(&self) -> Vec<usize> {
        self.bits
            .split(|&b| !b)
            .map(<[bool]>::len)
            .filter(|&l| l > 0)
            .collect()
    }

    /// For each zero, the length of the run of ones right after it.
    pub fn runs_after_zeros(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &b in &self.bits {
            if b {
                *out.last_mut().expect("prefix condition puts a zero first") += 1;
            } else {
                out.push(0);
            }
        }
        out
    }

    /// Appends `011` once per unit of defect, giving a full Dyck word.
    pub fn pad_to_dyck(&self) -> PartialDyckWord {
        let mut bits = self.bits.clone();
        for _ in 0..self.defect() {
            bits.extend([false, true, true]);
        }
        PartialDyckWord::from_bits(bits).expect("padding keeps the prefix condition")
    }

    /// Bit length as a little-endian `u64`, then the bits packed eight per
    /// byte, least significant first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.bits.len() as u64).to_le_bytes().to_vec();
        for chunk in self.bits.chunks(8) {
            let mut byte = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                if b {
                    byte |= 1 << i;
                }
            }
            out.push(byte);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let bad = || CodecError::Malformed("bad word encoding".into());
        let head: [u8; 8] = bytes.get(..8).ok_or_else(bad)?.try_into().map_err(|_| bad())?;
        let len = u64::from_le_bytes(head) as usize;
        let body = &bytes[8..];
        if body.len() != len.div_ceil(8) {
            return Err(bad());
        }
        let bits = (0..len).map(|i| body[i / 8] >> (i % 8) & 1 == 1).collect();
        if len % 8 != 0 && body.last().is_some_and(|b| b >> (len % 8) != 0) {
            return Err(bad());
        }
        Self::from_bits(bits)
    }
}

impl std::fmt::Display for PartialDyckWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// All partial Dyck words of the given semilength.
pub fn all_partial_words(semilength: usize) -> Vec<PartialDyckWord> {
    fn go(height: usize, left: usize, cur: &mut Vec<bool>, out: &mut Vec<PartialDyckWord>) {
        if left == 0 {
            // trailing ones after the last zero
            for extra in 0..=height {
                let mut bits = cur.clone();
                bits.extend(std::iter::repeat_n(true, extra));
                out.push(PartialDyckWord::from_bits(bits).expect("enumerated words are valid"));
            }
            return;
        }
        cur.push(false);
        go(height + 1, left - 1, cur, out);
        cur.pop();
        if height > 0 {
            cur.push(true);
            go(height - 1, left, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, semilength, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn defect_and_padding() {
        let w = PartialDyckWord::parse("00").unwrap();
        assert_eq!(w.defect(), 2);
        assert_eq!(w.pad_to_dyck().to_string(), "00011011");
        let full = PartialDyckWord::parse("0011").unwrap();
        assert_eq!(full.defect(), 0);
        assert_eq!(full.pad_to_dyck(), full);
        assert_eq!(PartialDyckWord::parse("01").unwrap().descents(), vec![1]);
        assert!(PartialDyckWord::parse("10").is_err());
    }

    #[test]
    fn padding_is_injective_up_to_semilength_eight() {
        for k in 0..=8 {
            let words = all_partial_words(k);
            let padded: HashSet<_> = words.iter().map(|w| w.pad_to_dyck()).collect();
            assert_eq!(padded.len(), words.len(), "semilength {k}");
            assert!(padded.iter().all(PartialDyckWord::is_full));
        }
    }

    #[test]
    fn enumeration_counts() {
        // partial words of semilength 2: 00, 001, 0011, 01 0, 010 1
        assert_eq!(all_partial_words(2).len(), 5);
        assert_eq!(all_partial_words(0).len(), 1);
    }

    #[test]
    fn bytes_round_trip() {
        for k in 0..=5 {
            for w in all_partial_words(k) {
                assert_eq!(PartialDyckWord::from_bytes(&w.to_bytes()).unwrap(), w);
            }
        }
        let mut bad = PartialDyckWord::parse("0").unwrap().to_bytes();
        bad[8] = 0b11;
        assert!(PartialDyckWord::from_bytes(&bad).is_err());
    }

    #[test]
    fn runs_after_zeros() {
        let w = PartialDyckWord::parse("0011000111").unwrap();
        assert_eq!(w.runs_after_zeros(), vec![0, 2, 0, 0, 3]);
    }
}
