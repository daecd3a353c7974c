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


//! Mixed-radix packing and the small combinatorial rankings used by the logs.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{malformed, CodecError};

/// Packs digits into one integer below the product of the radices. The first
/// digit is the most significant.
pub fn pack(digits: &[BigUint], radices: &[BigUint]) -> Result<BigUint, CodecError> {
    if digits.len() != radices.len() {
        return Err(malformed("digit count does not match radix count"));
    }
    let mut acc = BigUint::zero();
    for (d, r) in digits.iter().zip(radices) {
        if d >= r {
            return Err(malformed(format!("digit {d} out of range {r}")));
        }
        acc = acc * r + d;
    }
    Ok(acc)
}

pub fn unpack(value: &BigUint, radices: &[BigUint]) -> Result<Vec<BigUint>, CodecError> {
    let mut rest = value.clone();
    let mut out = vec![BigUint::zero(); radices.len()];
    for (slot, r) in out.iter_mut().zip(radices).rev() {
        if r.is_zero() {
            return Err(malformed("zero radix"));
        }
        let (q, m) = rest.div_rem(r);
        *slot = m;
        rest = q;
    }
    if !rest.is_zero() {
        return Err(malformed("value exceeds the radix budget"));
    }
    Ok(out)
}

pub fn product(radices: &[BigUint]) -> BigUint {
    radices.iter().fold(BigUint::one(), |a, r| a * r)
}

pub fn big(x: usize) -> BigUint {
    BigUint::from(x)
}

pub fn small(x: &BigUint) -> Result<usize, CodecError> {
    x.to_usize().ok_or_else(|| malformed("digit too large"))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Colexicographic rank of a strictly increasing index set.
pub fn colex_rank(indices: &[usize]) -> BigUint {
    indices
        .iter()
        .enumerate()
        .fold(BigUint::zero(), |acc, (j, &i)| acc + binomial(i, j + 1))
}

/// Inverse of [`colex_rank`] for subsets of the given size.
pub fn colex_unrank(mut rank: BigUint, size: usize) -> Vec<usize> {
    let mut out = vec![0; size];
    for j in (1..=size).rev() {
        // largest i with C(i, j) <= rank
        let mut i = j - 1;
        while binomial(i + 1, j) <= rank {
            i += 1;
        }
        rank -= binomial(i, j);
        out[j - 1] = i;
    }
    out
}

/// Lexicographic rank of `i < j` among the pairs drawn from `0..n`.
pub fn pair_rank(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn pair_unrank(mut rank: usize, n: usize) -> Option<(usize, usize)> {
    for i in 0..n {
        let row = n - i - 1;
        if rank < row {
            return Some((i, i + 1 + rank));
        }
        rank -= row;
    }
    None
}

/// Packs flags into an integer, first flag most significant.
pub fn flags_to_int(flags: &[bool]) -> usize {
    flags.iter().fold(0, |a, &f| a << 1 | usize::from(f))
}

pub fn int_to_flags(value: usize, count: usize) -> Vec<bool> {
    (0..count).rev().map(|k| value >> k & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), big(10));
        assert_eq!(binomial(3, 5), big(0));
        assert_eq!(binomial(40, 20), big(137_846_528_820));
    }

    #[test]
    fn pair_ranks_enumerate_in_order() {
        let n = 7;
        let mut r = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_rank(i, j, n), r);
                assert_eq!(pair_unrank(r, n), Some((i, j)));
                r += 1;
            }
        }
        assert_eq!(pair_unrank(r, n), None);
    }

    #[test]
    fn colex_is_a_bijection() {
        let n = 8;
        let k = 3;
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let r = colex_rank(&[a, b, c]);
                    assert!(r < binomial(n, k));
                    assert_eq!(colex_unrank(r.clone(), k), vec![a, b, c]);
                    seen.insert(r);
                }
            }
        }
        assert_eq!(seen.len(), 56);
    }

    #[test]
    fn overflowing_value_is_rejected() {
        let radices = [big(3), big(4)];
        assert!(unpack(&big(12), &radices).is_err());
        assert!(pack(&[big(3), big(0)], &radices).is_err());
    }

    proptest! {
        #[test]
        fn pack_round_trip(pairs in prop::collection::vec((1usize..1000, 0usize..1000), 0..8)) {
            let radices: Vec<_> = pairs.iter().map(|&(r, _)| big(r)).collect();
            let digits: Vec<_> = pairs.iter().map(|&(r, d)| big(d % r)).collect();
            let v = pack(&digits, &radices).unwrap();
            prop_assert!(v < product(&radices));
            prop_assert_eq!(unpack(&v, &radices).unwrap(), digits);
        }

        #[test]
        fn flags_round_trip(v in 0usize..32) {
            prop_assert_eq!(flags_to_int(&int_to_flags(v, 5)), v);
        }
    }
}
