//! Exhaustive and Monte Carlo checks of the two counting identities behind
//! the conditional kernel: splitting a permutation of `X` at a subset `Y`,
//! and splitting a Poisson sample into a subset and its complement.

use crate::rng::stream;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCase {
    pub n: usize,
    pub y: Vec<usize>,
    pub direct: i64,
    pub split: i64,
    pub weighted_direct: i64,
    pub weighted_split: i64,
    /// Every permutation is produced exactly once by the split.
    pub partition: bool,
}

impl SplitCase {
    pub fn passed(&self) -> bool {
        self.direct == self.split && self.weighted_direct == self.weighted_split && self.partition
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeckeCheck {
    pub name: String,
    pub estimate: f64,
    pub stderr: f64,
    pub exact: f64,
}

impl MeckeCheck {
    pub fn passed(&self) -> bool {
        (self.estimate - self.exact).abs() <= 3.0 * self.stderr
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinatoricsReport {
    pub cases: Vec<SplitCase>,
    pub mecke: Vec<MeckeCheck>,
}

impl CombinatoricsReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(SplitCase::passed) && self.mecke.iter().all(MeckeCheck::passed)
    }
}

/// All bijections from `from` onto `to` as `(x, image)` lists.
fn bijections(from: &[usize], to: &[usize]) -> Vec<Vec<(usize, usize)>> {
    if from.len() != to.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut used = vec![false; to.len()];
    let mut cur = Vec::with_capacity(from.len());
    fn rec(
        from: &[usize],
        to: &[usize],
        used: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let k = cur.len();
        if k == from.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..to.len() {
            if !used[j] {
                used[j] = true;
                cur.push((from[k], to[j]));
                rec(from, to, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(from, to, &mut used, &mut cur, &mut out);
    out
}

fn subsets(set: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << set.len())
        .map(|mask| set.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect())
        .collect()
}

/// A permutation-dependent weight: `Σ_i (i+1)(σ(i)+2)² + 7·#cycles`.
fn weight(sigma: &[usize]) -> i64 {
    let mut w: i64 = sigma.iter().enumerate().map(|(i, &s)| (i as i64 + 1) * (s as i64 + 2).pow(2)).sum();
    let mut seen = vec![false; sigma.len()];
    for i in 0..sigma.len() {
        if !seen[i] {
            w += 7;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = sigma[j];
            }
        }
    }
    w
}

/// Check the permutation-splitting identity for `X = {0..n}` and one `Y`.
pub fn permutation_split_case(n: usize, y: &[usize]) -> SplitCase {
    let x: Vec<usize> = (0..n).collect();
    let outside: Vec<usize> = x.iter().copied().filter(|v| !y.contains(v)).collect();
    let all = bijections(&x, &x);
    let direct = all.len() as i64;
    let weighted_direct = all
        .iter()
        .map(|b| weight(&b.iter().map(|p| p.1).collect::<Vec<_>>()))
        .sum();
    let mut split = 0;
    let mut weighted_split = 0;
    let mut seen = HashSet::new();
    let mut partition = true;
    for z1 in subsets(y) {
        for z2 in subsets(&outside) {
            // Y → Z₂ ∪ (Y ∖ Z₁)
            let mut int_to: Vec<usize> = z2.clone();
            int_to.extend(y.iter().copied().filter(|v| !z1.contains(v)));
            // X ∖ Y → Z₁ ∪ (X ∖ (Z₂ ∪ Y))
            let mut ext_to: Vec<usize> = z1.clone();
            ext_to.extend(outside.iter().copied().filter(|v| !z2.contains(v)));
            let ints = bijections(y, &int_to);
            let exts = bijections(&outside, &ext_to);
            for bi in &ints {
                for be in &exts {
                    let mut sigma = vec![usize::MAX; n];
                    for &(a, b) in bi.iter().chain(be) {
                        sigma[a] = b;
                    }
                    split += 1;
                    weighted_split += weight(&sigma);
                    let mut sorted = sigma.clone();
                    sorted.sort_unstable();
                    if sorted != x || !seen.insert(sigma) {
                        partition = false;
                    }
                }
            }
        }
    }
    partition &= seen.len() as i64 == direct;
    SplitCase { n, y: y.to_vec(), direct, split, weighted_direct, weighted_split, partition }
}

/// `E[Σ_{ζ ⊆ ξ} f(#ζ, #ξ∖ζ)]` for `ξ ~ Poisson(|Δ|)`, by Monte Carlo.
fn subset_sum_moment(volume: f64, samples: usize, seed: u64, f: impl Fn(u64, u64) -> f64) -> (f64, f64) {
    let mut rng = stream(seed, 0);
    let pois = Poisson::new(volume).unwrap();
    let binom = |n: u64, k: u64| -> f64 { (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product() };
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..samples {
        let n = pois.sample(&mut rng) as u64;
        let v: f64 = (0..=n).map(|k| binom(n, k) * f(k, n - k)).sum();
        s += v;
        ss += v * v;
    }
    let m = s / samples as f64;
    let var = (ss / samples as f64 - m * m).max(0.0) * samples as f64 / (samples - 1) as f64;
    (m, (var / samples as f64).sqrt())
}

/// `e^{|Δ|} E[f(#ξ₁, #ξ₂)]` for independent `ξ₁, ξ₂ ~ Poisson(|Δ|)`, by Monte Carlo.
fn product_moment(volume: f64, samples: usize, seed: u64, f: impl Fn(u64, u64) -> f64) -> (f64, f64) {
    let mut rng = stream(seed, 1);
    let pois = Poisson::new(volume).unwrap();
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..samples {
        let a = pois.sample(&mut rng) as u64;
        let b = pois.sample(&mut rng) as u64;
        let v = f(a, b);
        s += v;
        ss += v * v;
    }
    let m = s / samples as f64;
    let var = (ss / samples as f64 - m * m).max(0.0) * samples as f64 / (samples - 1) as f64;
    let e = volume.exp();
    (e * m, e * (var / samples as f64).sqrt())
}

/// Exhaustive checks for `#X ≤ max_n` and Monte Carlo checks of the
/// subset-splitting identity at `|Δ| ∈ {0.5, 1, 2}`.
pub fn combinatorics_checks(max_n: usize, samples: usize, seed: u64) -> CombinatoricsReport {
    let mut cases = Vec::new();
    for n in 0..=max_n {
        let x: Vec<usize> = (0..n).collect();
        for y in subsets(&x) {
            cases.push(permutation_split_case(n, &y));
        }
    }
    let mut mecke = Vec::new();
    for (i, vol) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let s = seed.wrapping_add(10 * i as u64);
        let (m, se) = subset_sum_moment(vol, samples, s, |_, _| 1.0);
        mecke.push(MeckeCheck { name: format!("E[2^N], |Delta|={vol}"), estimate: m, stderr: se, exact: vol.exp() });
        let (m, se) = subset_sum_moment(vol, samples, s + 1, |k, _| k as f64);
        mecke.push(MeckeCheck {
            name: format!("E[N 2^(N-1)], |Delta|={vol}"),
            estimate: m,
            stderr: se,
            exact: vol.exp() * vol,
        });
        // A non-product f whose right-hand side is itself estimated.
        let f = |a: u64, b: u64| (a as f64 + 1.0) / (1.0 + (a * b) as f64);
        let (m, se) = subset_sum_moment(vol, samples, s + 2, f);
        let (r, rse) = product_moment(vol, samples, s + 3, f);
        mecke.push(MeckeCheck {
            name: format!("(a+1)/(1+ab), |Delta|={vol}"),
            estimate: m - r,
            stderr: (se * se + rse * rse).sqrt(),
            exact: 0.0,
        });
    }
    CombinatoricsReport { cases, mecke }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let c = permutation_split_case(3, &[0]);
        assert_eq!((c.direct, c.split), (6, 6));
        assert!(c.passed());
        let c = permutation_split_case(4, &[]);
        assert_eq!(c.split, 24);
        assert!(c.passed());
    }

    #[test]
    fn exhaustive_up_to_five() {
        let r = combinatorics_checks(5, 20_000, 9);
        assert_eq!(r.cases.len(), (0..=5).map(|n| 1usize << n).sum::<usize>());
        assert!(r.passed(), "{:?}", r.mecke);
    }
}
