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


//! Counting side of the termination argument: weighted descent sets, the
//! growth rate of weighted Dyck words, and the checks comparing it with the
//! sampling window.
//!
//! Weights overflow `f64` at realistic degrees, so every real-valued quantity
//! is handled through its natural logarithm.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::codec::radix::binomial;
use crate::graph::Epsilon;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("invalid descent set: {0}")]
    InvalidSpec(String),
    #[error("parameters outside the theory regime: {0}")]
    Sanity(String),
    #[error("every descent has length 1, so the growth equation has no solution")]
    NoSolution,
    #[error("sampling window size {s} is not positive")]
    OutOfRegime { s: BigInt },
}

/// Allowed descent lengths, each with the number of labels it carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescentSpec {
    entries: Vec<(usize, BigUint)>,
}

impl DescentSpec {
    pub fn new(mut entries: Vec<(usize, BigUint)>) -> Result<Self, BoundsError> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(BoundsError::InvalidSpec("repeated descent length".into()));
        }
        if entries.iter().any(|(l, w)| *l == 0 || w.is_zero()) {
            return Err(BoundsError::InvalidSpec("lengths and weights must be positive".into()));
        }
        Ok(DescentSpec { entries })
    }

    /// Convenience constructor for small weights.
    pub fn from_small(entries: &[(usize, u64)]) -> Result<Self, BoundsError> {
        Self::new(entries.iter().map(|&(l, w)| (l, BigUint::from(w))).collect())
    }

    pub fn entries(&self) -> &[(usize, BigUint)] {
        &self.entries
    }

    pub fn weight(&self, len: usize) -> Option<&BigUint> {
        self.entries.iter().find(|e| e.0 == len).map(|e| &e.1)
    }

    /// `ln(1 + sum w x^l)` at `x = e^t`.
    pub fn ln_phi(&self, t: f64) -> f64 {
        let terms: Vec<f64> = std::iter::once(0.0)
            .chain(self.entries.iter().map(|(l, w)| ln_big(w) + *l as f64 * t))
            .collect();
        log_sum_exp(&terms)
    }

    /// `ln(x phi'(x) / phi(x))` at `x = e^t`.
    pub fn ln_ratio(&self, t: f64) -> f64 {
        let top: Vec<f64> = self
            .entries
            .iter()
            .map(|(l, w)| (*l as f64).ln() + ln_big(w) + *l as f64 * t)
            .collect();
        log_sum_exp(&top) - self.ln_phi(t)
    }
}

/// Natural logarithm of a positive big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 900 {
        x.to_f64().expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        (x >> shift).to_f64().expect("64 bits fit").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// The five conflict kinds of the selection phase: reset count and the
/// number of values their logged integers can take.
pub fn weights_for(delta: usize, eps: Epsilon, q: usize) -> Result<DescentSpec, BoundsError> {
    let d = eps.threshold(delta);
    if 2 * d >= delta {
        return Err(BoundsError::Sanity(format!("threshold {d} is not below half of {delta}")));
    }
    if q + 2 > d {
        return Err(BoundsError::Sanity(format!("q = {q} is too large for threshold {d}")));
    }
    let (bd, bdelta) = (BigUint::from(d), BigUint::from(delta));
    let pairs = binomial(d, 2);
    let pow = |b: &BigUint, e: u32| b.pow(e);
    let two = |e: u32| BigUint::from(2u32).pow(e);
    DescentSpec::new(vec![
        (q + 1, binomial(delta, q) * pow(&bd, q as u32 + 2)),
        (2, BigUint::from(q + 2) * pow(&bd, 3)),
        (3, two(7) * pow(&bdelta, 3) * &pairs),
        (4, two(12) * pow(&bdelta, 4) * &bd * &pairs),
        (5, two(11) * pow(&bdelta, 4) * pow(&bd, 2) * &pairs),
    ])
}

/// The point where `x phi'(x) = phi(x)` and the growth rate `phi(x)/x` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tau {
    pub ln_tau: f64,
    pub ln_gamma: f64,
}

impl Tau {
    pub fn tau(&self) -> f64 {
        self.ln_tau.exp()
    }

    pub fn gamma(&self) -> f64 {
        self.ln_gamma.exp()
    }
}

/// Bisection on `ln x`; `tol` bounds the relative error of the root.
pub fn solve_tau(spec: &DescentSpec, tol: f64) -> Result<Tau, BoundsError> {
    let terms: Vec<(f64, f64)> = spec
        .entries
        .iter()
        .filter(|(l, _)| *l >= 2)
        .map(|(l, w)| ((*l as f64 - 1.0).ln() + ln_big(w), *l as f64))
        .collect();
    if terms.is_empty() {
        return Err(BoundsError::NoSolution);
    }
    // increasing in t, negative far left, positive far right
    let f = |t: f64| log_sum_exp(&terms.iter().map(|(c, l)| c + l * t).collect::<Vec<_>>());
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while f(lo) > 0.0 {
        lo *= 2.0;
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let tol = tol.max(f64::EPSILON);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(Tau {
        ln_tau: t,
        ln_gamma: spec.ln_phi(t) - t,
    })
}

/// Relative safety margin applied to log comparisons in place of directed
/// rounding.
pub const LOG_MARGIN: f64 = 1e-10;

fn margin(v: f64) -> f64 {
    LOG_MARGIN * v.abs().max(1.0)
}

/// `ln(phi(x)/x)` at the probe `x = e^t`, which bounds the growth rate from
/// above whenever `x phi'(x) < phi(x)` there. `None` means the probe is not
/// below the root.
pub fn gamma_upper_bound(spec: &DescentSpec, ln_x: f64) -> Option<f64> {
    let r = spec.ln_ratio(ln_x);
    (r < -margin(r)).then(|| spec.ln_phi(ln_x) - ln_x)
}

/// Probe point used by the certifier.
pub fn probe_ln_x(spec: &DescentSpec, q: usize, eps1: f64) -> f64 {
    let w1 = spec.weight(q + 1).expect("conflict kind 1 present");
    -((q as f64).ln() + eps1.ln_1p() + ln_big(w1)) / (q as f64 + 1.0)
}

/// `C(d - q, 2) - 3d`.
pub fn window_size_exact(d: usize, q: usize) -> BigInt {
    let pairs = if d >= q { BigInt::from(binomial(d - q, 2)) } else { BigInt::zero() };
    pairs - BigInt::from(3 * d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub delta: usize,
    pub d: usize,
    pub q: usize,
    pub s: String,
    pub ln_s: f64,
    pub ln_gamma: f64,
    pub ln_gamma_probe: Option<f64>,
    /// Growth rate below the window size, from the root.
    pub certified: bool,
    /// The same conclusion reached from the probe bound alone.
    pub probe_certified: bool,
}

pub fn certify_big_phase(delta: usize, eps: Epsilon, q: usize, eps1: f64) -> Result<Certificate, BoundsError> {
    let spec = weights_for(delta, eps, q)?;
    let d = eps.threshold(delta);
    let s = window_size_exact(d, q);
    if !s.is_positive() {
        return Err(BoundsError::OutOfRegime { s });
    }
    let ln_s = ln_big(s.magnitude());
    let tau = solve_tau(&spec, 1e-12)?;
    let probe = gamma_upper_bound(&spec, probe_ln_x(&spec, q, eps1));
    Ok(Certificate {
        delta,
        d,
        q,
        s: s.to_string(),
        ln_s,
        ln_gamma: tau.ln_gamma,
        ln_gamma_probe: probe,
        certified: tau.ln_gamma < ln_s - margin(ln_s),
        probe_certified: probe.is_some_and(|p| p < ln_s - margin(ln_s)),
    })
}

/// Smallest degree in `[lo, hi]` the certifier accepts, found by a doubling
/// scan followed by bisection. Acceptance is only observed to be monotone, so
/// the result is an empirical threshold.
pub fn first_certified(eps: Epsilon, q: usize, eps1: f64, lo: usize, hi: usize) -> Option<usize> {
    let ok = |delta: usize| certify_big_phase(delta, eps, q, eps1).is_ok_and(|c| c.certified);
    let mut prev = lo;
    let mut cur = lo;
    loop {
        if ok(cur) {
            break;
        }
        if cur >= hi {
            return None;
        }
        prev = cur;
        cur = (cur * 2).min(hi);
    }
    if cur == lo {
        return Some(lo);
    }
    let (mut bad, mut good) = (prev, cur);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// `(q^{1/(q+1)} + q^{-q/(q+1)}) * (1 / (2^{q+2} q!))^{1/(q+1)}`.
pub fn constant_check(q: usize) -> f64 {
    constant_with_slack(q, 0.0)
}

pub fn constant_with_slack(q: usize, eps1: f64) -> f64 {
    let qf = q as f64;
    let k = qf * (1.0 + eps1);
    let c = k.powf(1.0 / (qf + 1.0)) + k.powf(-qf / (qf + 1.0));
    let ln_fact: f64 = (1..=q).map(|i| (i as f64).ln()).sum();
    let ln_tail = -((qf + 2.0) * std::f64::consts::LN_2 + ln_fact) / (qf + 1.0);
    c * ln_tail.exp()
}

/// Number of Dyck words of the given semilength whose descents all have
/// allowed lengths, each descent of length `l` carrying one of `w_l` labels.
pub fn dyck_count_dp(t: usize, spec: &DescentSpec) -> BigUint {
    // count[z][h]: words with z zeros, height h, ending in a complete descent
    // (or empty)
    let mut count = vec![vec![BigUint::zero(); t + 1]; t + 1];
    count[0][0] = BigUint::one();
    for z in 0..t {
        for h in 0..=z {
            if count[z][h].is_zero() {
                continue;
            }
            let base = count[z][h].clone();
            for k in 1..=t - z {
                for (l, w) in &spec.entries {
                    if *l <= h + k {
                        let nh = h + k - l;
                        count[z + k][nh] += &base * w;
                    }
                }
            }
        }
    }
    count[t][0].clone()
}

/// Coefficients `y_0..=y_n` of the series solving `y = x * phi(y)`.
pub fn tree_series(spec: &DescentSpec, n: usize) -> Vec<BigUint> {
    let mul = |a: &[BigUint], b: &[BigUint]| {
        let mut out = vec![BigUint::zero(); n + 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(n + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut y = vec![BigUint::zero(); n + 1];
    // each pass fixes at least one more coefficient
    for _ in 0..n {
        let mut phi = vec![BigUint::zero(); n + 1];
        phi[0] = BigUint::one();
        let max_l = spec.entries.last().map_or(0, |e| e.0);
        let mut power = phi.clone();
        for l in 1..=max_l {
            power = mul(&power, &y);
            if let Some(w) = spec.weight(l) {
                for (p, c) in phi.iter_mut().zip(&power) {
                    *p += c * w;
                }
            }
        }
        let mut next = vec![BigUint::zero(); n + 1];
        next[1..].clone_from_slice(&phi[..n]);
        y = next;
    }
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SmallWindowCheck {
    pub holds: bool,
    /// Degree from which the check holds for every larger degree.
    pub from_delta: u64,
}

fn small_window_ok(delta: u64, eps: Epsilon) -> bool {
    let s = eps.small_window(delta as usize) as u128;
    s * s > 32 * delta as u128
}

/// Whether `ceil(2 eps delta)` exceeds `sqrt(32 delta)`, decided exactly.
pub fn small_phase_bound_check(delta: u64, eps: Epsilon) -> SmallWindowCheck {
    let (num, den) = (eps.numer() as u128, eps.denom() as u128);
    // beyond 8 / eps^2 the unrounded window already wins
    let mut from = (8 * den * den / (num * num)) as u64 + 1;
    while from > 1 && small_window_ok(from - 1, eps) {
        from -= 1;
    }
    SmallWindowCheck {
        holds: small_window_ok(delta, eps),
        from_delta: from,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(s: &str) -> Epsilon {
        s.parse().unwrap()
    }

    #[test]
    fn weights_at_degree_one_hundred() {
        let spec = weights_for(100, eps("0.1"), 13).unwrap();
        assert_eq!(spec.entries()[0].0, 2);
        assert_eq!(spec.weight(2), Some(&BigUint::from(960_000u32)));
        assert!(spec.weight(14).is_some());
        for delta in [100, 250, 1000] {
            let spec = weights_for(delta, eps("0.1"), 13).unwrap();
            let d = eps("0.1").threshold(delta);
            let ratio = spec.weight(3).unwrap() / binomial(d, 2);
            assert_eq!(ratio, BigUint::from(128u32) * BigUint::from(delta).pow(3));
        }
        assert!(weights_for(10, eps("0.1"), 13).is_err());
    }

    #[test]
    fn root_of_simple_series() {
        let t = solve_tau(&DescentSpec::from_small(&[(2, 1)]).unwrap(), 1e-12).unwrap();
        assert!((t.tau() - 1.0).abs() < 1e-9);
        assert!((t.gamma() - 2.0).abs() < 1e-9);
        let t = solve_tau(&DescentSpec::from_small(&[(2, 3)]).unwrap(), 1e-12).unwrap();
        assert!((t.tau() - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        assert!((t.gamma() - 2.0 * 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(
            solve_tau(&DescentSpec::from_small(&[(1, 2)]).unwrap(), 1e-12),
            Err(BoundsError::NoSolution)
        );
    }

    #[test]
    fn probe_bound() {
        let spec = DescentSpec::from_small(&[(2, 1)]).unwrap();
        let b = gamma_upper_bound(&spec, 0.5f64.ln()).unwrap();
        assert!((b.exp() - 2.5).abs() < 1e-12);
        assert!((spec.ln_ratio(0.5f64.ln()).exp() - 0.4).abs() < 1e-12);
        assert_eq!(gamma_upper_bound(&spec, 0.0), None);
        assert_eq!(gamma_upper_bound(&spec, 1.0), None);
    }

    #[test]
    fn constant_matches_published_value() {
        let c = constant_check(13);
        assert!((c - 0.12292).abs() < 1e-4, "{c}");
        assert!(c < 0.125);
        let k: f64 = 13.0;
        let cq = k.powf(1.0 / 14.0) + k.powf(-13.0 / 14.0);
        let tail = (1.0 / (2f64.powi(15) * (1..=13).map(f64::from).product::<f64>())).powf(1.0 / 14.0);
        assert!((cq * tail - c).abs() < 1e-12);
    }

    #[test]
    fn dyck_counts() {
        let e = DescentSpec::from_small(&[(1, 1), (2, 1)]).unwrap();
        assert_eq!(dyck_count_dp(2, &e), BigUint::from(2u32));
        assert_eq!(dyck_count_dp(3, &e), BigUint::from(4u32));
        assert_eq!(dyck_count_dp(0, &e), BigUint::one());
        let e = DescentSpec::from_small(&[(2, 3)]).unwrap();
        assert_eq!(dyck_count_dp(2, &e), BigUint::from(3u32));
        // unrestricted descents give the Catalan numbers
        let all = DescentSpec::from_small(&(1..=6).map(|l| (l, 1)).collect::<Vec<_>>()).unwrap();
        let catalan = [1u32, 1, 2, 5, 14, 42, 132];
        for (t, &c) in catalan.iter().enumerate() {
            assert_eq!(dyck_count_dp(t, &all), BigUint::from(c));
        }
    }

    #[test]
    fn series_matches_word_counts() {
        let y = tree_series(&DescentSpec::from_small(&[(2, 1)]).unwrap(), 7);
        let want: Vec<BigUint> = [0u32, 1, 0, 1, 0, 2, 0, 5].iter().map(|&x| BigUint::from(x)).collect();
        assert_eq!(y, want);
        for spec in [
            DescentSpec::from_small(&[(1, 1), (2, 1)]).unwrap(),
            DescentSpec::from_small(&[(2, 3), (3, 2)]).unwrap(),
            DescentSpec::from_small(&[(2, 5), (3, 7), (6, 2)]).unwrap(),
        ] {
            let y = tree_series(&spec, 21);
            assert!(y[0].is_zero() && y[1].is_one());
            for t in 0..=20 {
                assert_eq!(dyck_count_dp(t, &spec), y[t + 1], "t = {t}");
            }
        }
    }

    #[test]
    fn small_window_threshold() {
        let e = eps("0.004");
        let c = small_phase_bound_check(1000, e);
        assert!(!c.holds);
        assert_eq!(c.from_delta, 500_001);
        assert!(small_phase_bound_check(500_001, e).holds);
        assert!(!small_phase_bound_check(500_000, e).holds);
        assert!(small_phase_bound_check(1000, eps("0.1")).holds);
        assert!(!small_phase_bound_check(1000, Epsilon::new(1, 1_000_000_000).unwrap()).holds);
    }

    #[test]
    fn certifier_below_and_above_regime() {
        let c = certify_big_phase(100, eps("0.1"), 13, 0.0).unwrap();
        assert_eq!(c.s, "231");
        assert!(!c.certified);
        assert!(matches!(
            certify_big_phase(50, eps("0.1"), 13, 0.0),
            Err(BoundsError::OutOfRegime { .. })
        ));
        for delta in [1_000, 10_000, 100_000, 1_000_000, 10_000_000] {
            if let Ok(c) = certify_big_phase(delta, eps("0.3"), 13, 0.0) {
                assert!(!c.certified, "delta {delta}");
            }
        }
    }

    #[test]
    fn probe_never_beats_the_root() {
        for delta in [1_000usize, 100_000, 10_000_000] {
            let c = certify_big_phase(delta, eps("0.004"), 13, 0.01).unwrap();
            if let Some(p) = c.ln_gamma_probe {
                assert!(p >= c.ln_gamma - 1e-9);
            }
        }
    }
}
