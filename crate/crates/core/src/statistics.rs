//! Observables of bridge configurations and the statistics used to check them.

use crate::error::{Error, Result};
use crate::geometry::{point_key, unit_ball_volume, BoxRegion};
use crate::hamiltonians::{loop_measure_mass, ModelParams};
use crate::representations::{bridge_inside, bridge_meets, FkConfig};
use crate::rng::{normal, stream};
use crate::samplers::oracle::Estimate;
use crate::trajectories::{sausage_volume, Path, SausageMethod, SausageSpec, TimeGrid};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// One named estimate with its provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRecord {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub params: serde_json::Value,
}

impl StatRecord {
    pub fn new(name: &str, value: f64, stderr: f64, n_samples: usize, seed: u64, params: serde_json::Value) -> Result<Self> {
        if !(stderr >= 0.0) || n_samples == 0 {
            return Err(Error::Input(format!("record {name}: stderr must be nonnegative and n_samples positive")));
        }
        Ok(Self { name: name.into(), value, stderr, n_samples, seed, params })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<f64>,
    pub normalized: bool,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Input("histogram edges must be strictly increasing".into()));
        }
        let n = edges.len() - 1;
        Ok(Self { edges, counts: vec![0.0; n], normalized: false })
    }

    /// Unit-width bins centred on `1..=max`.
    pub fn integer(max: usize) -> Self {
        let edges = (0..=max.max(1)).map(|k| k as f64 + 0.5).collect();
        Self::new(edges).unwrap()
    }

    /// Add `w` to the bin containing `x`; values outside the edges are dropped.
    pub fn add(&mut self, x: f64, w: f64) {
        if x < self.edges[0] || x >= *self.edges.last().unwrap() {
            return;
        }
        let i = self.edges.partition_point(|e| *e <= x) - 1;
        self.counts[i] += w;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn normalize(&mut self) {
        let t = self.total();
        if t > 0.0 {
            self.counts.iter_mut().for_each(|c| *c /= t);
        }
        self.normalized = true;
    }

    /// Comma-separated table `lower,upper,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lower,upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        s
    }
}

/// Successor of each bridge when its end is the start of exactly one bridge.
fn partial_successors(g: &FkConfig) -> Vec<Option<usize>> {
    if let Ok(l) = g.links() {
        return l.iter().map(|&j| Some(j)).collect();
    }
    let mut starts: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, b) in g.bridges().iter().enumerate() {
        starts.entry(point_key(b.start())).or_default().push(i);
    }
    g.bridges()
        .iter()
        .map(|b| match starts.get(&point_key(b.end())) {
            Some(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        })
        .collect()
}

/// Smallest `j ≥ 1` with `σ^j(i) = i`, if it is at most `limit`.
fn period(succ: &[Option<usize>], i: usize, limit: usize) -> Option<usize> {
    let mut k = i;
    for j in 1..=limit {
        k = succ[k]?;
        if k == i {
            return Some(j);
        }
    }
    None
}

/// Number of `σ_γ`-cycles per length.
pub fn cycle_length_counts(g: &FkConfig) -> Result<BTreeMap<usize, usize>> {
    let mut out = BTreeMap::new();
    for c in g.cycle_decomposition()? {
        *out.entry(c.len()).or_insert(0) += 1;
    }
    Ok(out)
}

/// Histogram of cycle lengths with unit bins up to the longest cycle.
pub fn cycle_length_histogram(g: &FkConfig) -> Result<Histogram> {
    let counts = cycle_length_counts(g)?;
    let max = counts.keys().next_back().copied().unwrap_or(1);
    let mut h = Histogram::integer(max);
    for (len, n) in counts {
        h.add(len as f64, n as f64);
    }
    Ok(h)
}

fn unit_box(dim: usize) -> BoxRegion {
    BoxRegion::unit(dim)
}

/// `Σ ‖σ(β) − σ(0)‖` over bridges starting in `[0,1]^d`.
pub fn f1(g: &FkConfig) -> f64 {
    let b = unit_box(g.dim());
    g.bridges()
        .iter()
        .filter(|s| b.contains(s.start()))
        .map(|s| crate::geometry::dist2(s.start(), s.end()).sqrt())
        .sum()
}

/// Number of closed cycles whose bridges all stay in `[0,1]^d`.
pub fn f2(g: &FkConfig) -> f64 {
    let b = unit_box(g.dim());
    let succ = partial_successors(g);
    let n = g.len();
    let inside: Vec<bool> = g.bridges().iter().map(|s| bridge_inside(s, &b)).collect();
    let mut total = 0.0;
    for i in 0..n {
        if !inside[i] {
            continue;
        }
        if let Some(p) = period(&succ, i, n) {
            let mut k = i;
            let mut all = true;
            for _ in 0..p {
                k = succ[k].unwrap();
                all &= inside[k];
            }
            if all {
                total += 1.0 / p as f64;
            }
        }
    }
    total
}

/// `#{bridges meeting [0,1]^d}` when that number is even, else 0.
pub fn f3(g: &FkConfig) -> f64 {
    let b = unit_box(g.dim());
    let k = g.bridges().iter().filter(|s| bridge_meets(s, &b)).count();
    if k % 2 == 0 {
        k as f64
    } else {
        0.0
    }
}

/// Starts in `[0,1]^d` with `σ²(σ) = σ`, i.e. on cycles of length 1 or 2.
pub fn f4(g: &FkConfig) -> f64 {
    let b = unit_box(g.dim());
    let succ = partial_successors(g);
    (0..g.len())
        .filter(|&i| b.contains(g.bridges()[i].start()) && period(&succ, i, 2).is_some())
        .count() as f64
}

/// Number of closed cycles of length 1 or 2 with a start in `[0,1]^d`.
pub fn short_cycles(g: &FkConfig) -> f64 {
    let b = unit_box(g.dim());
    let succ = partial_successors(g);
    let mut seen = vec![false; g.len()];
    let mut count = 0;
    for i in 0..g.len() {
        if seen[i] {
            continue;
        }
        if let Some(p) = period(&succ, i, 2) {
            let j = succ[i].unwrap();
            seen[i] = true;
            seen[j] = true;
            let starts_in = b.contains(g.bridges()[i].start()) || (p == 2 && b.contains(g.bridges()[j].start()));
            if starts_in {
                count += 1;
            }
        }
    }
    count as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LongCycleRule {
    /// `∀ j ∈ [2, n], σ^j(σ) ≠ σ`, evaluated as written; a fixed point
    /// satisfies `σ^j = σ` for every `j` and is therefore never counted.
    Literal,
    /// Period outside `[2, n]`: as `Literal` but fixed points count as long.
    PeriodOneLong,
}

/// Starts in `[0,1]^d` whose bridge does not return within `[2, n]` steps.
pub fn long_cycle_fraction(g: &FkConfig, n: usize, rule: LongCycleRule) -> f64 {
    let b = unit_box(g.dim());
    let succ = partial_successors(g);
    (0..g.len())
        .filter(|&i| b.contains(g.bridges()[i].start()))
        .filter(|&i| {
            let mut k = i;
            let mut returned_at_one = false;
            for j in 1..=n {
                match succ[k] {
                    Some(s) => k = s,
                    None => return true,
                }
                if k == i {
                    if j == 1 {
                        returned_at_one = true;
                    }
                    if j >= 2 {
                        return rule == LongCycleRule::PeriodOneLong && returned_at_one;
                    }
                }
            }
            true
        })
        .count() as f64
}

/// `Θ_m(x)`: 0 when `x ≤ m`, else `x`.
pub fn threshold(x: f64, m: f64) -> f64 {
    if x <= m {
        0.0
    } else {
        x
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Mean with a batch-means standard error, for autocorrelated chains.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let b = batches.max(2).min(xs.len().max(1));
    let size = xs.len() / b;
    if size == 0 {
        return mean_stderr(xs);
    }
    let means: Vec<f64> = (0..b).map(|i| xs[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let (m, se) = mean_stderr(&means);
    let _ = m;
    (xs.iter().sum::<f64>() / xs.len() as f64, se)
}

/// Per-volume relative entropy of the model against its loop reference:
/// `(1/L^d)(m − L^d − log Z + E[βμΣj − H_rl])`, where `m` is the reference mass.
///
/// `log_densities` are `βμΣj − H_rl` at samples of the model and `z` the
/// partition function for the same truncation. Refused unless `Z` is known
/// to better than 1%.
pub fn relative_entropy_estimate(
    log_densities: &[f64],
    params: &ModelParams,
    z: &Estimate,
    seed: u64,
) -> Result<StatRecord> {
    if !(z.value > 0.0) || z.relative_error() >= 0.01 {
        return Err(Error::Config(format!(
            "partition function known only to {:.2}%; relative entropy needs better than 1%",
            100.0 * z.relative_error()
        )));
    }
    if log_densities.len() < 2 {
        return Err(Error::Input("relative entropy needs at least two samples".into()));
    }
    let (m, se) = mean_stderr(log_densities);
    let vol = params.volume();
    let value = (loop_measure_mass(params) - vol - z.value.ln() + m) / vol;
    let stderr = (se * se + z.relative_error().powi(2)).sqrt() / vol;
    StatRecord::new(
        "relative_entropy",
        value,
        stderr,
        log_densities.len(),
        seed,
        serde_json::to_value(params).unwrap_or_default(),
    )
}

/// Brownian motion from `x` on `[0, t]` with `steps` equal steps.
pub fn brownian_path<R: Rng + ?Sized>(x: &[f64], t: f64, steps: usize, rng: &mut R) -> Result<Path> {
    let grid = TimeGrid::new(t, steps)?;
    let sd = grid.spacing().sqrt();
    let mut nodes = Vec::with_capacity(x.len() * grid.nodes());
    nodes.extend_from_slice(x);
    let mut z = x.to_vec();
    for _ in 0..steps {
        for v in z.iter_mut() {
            *v += sd * normal(rng);
        }
        nodes.extend_from_slice(&z);
    }
    Path::from_nodes(x.len(), grid, nodes)
}

/// Number of pieces `N_T` of the sup-norm cube chain: a new piece starts
/// when the polyline first leaves the closed cube of half-side `δ` around
/// the previous piece's start. Exit points are found by clipping segments.
pub fn cube_chain_pieces(path: &Path, delta: f64) -> usize {
    let d = path.dim;
    let mut anchor = path.start().to_vec();
    let mut pieces = 1;
    for (a0, b) in path.segments() {
        let mut a = a0.to_vec();
        loop {
            let mut s_exit = f64::INFINITY;
            for i in 0..d {
                let v = b[i] - a[i];
                let s = if v > 0.0 {
                    (anchor[i] + delta - a[i]) / v
                } else if v < 0.0 {
                    (anchor[i] - delta - a[i]) / v
                } else {
                    f64::INFINITY
                };
                s_exit = s_exit.min(s);
            }
            if s_exit >= 1.0 {
                break;
            }
            let s = s_exit.max(0.0);
            let p: Vec<f64> = (0..d).map(|i| a[i] + s * (b[i] - a[i])).collect();
            pieces += 1;
            anchor = p.clone();
            a = p;
        }
    }
    pieces
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SausageReport {
    pub n_paths: usize,
    pub dim: usize,
    pub delta: f64,
    pub t: f64,
    pub epsilon: f64,
    /// Paths with `|S| > N_T (4δ)^d`.
    pub violations: usize,
    /// Largest `|S| / (N_T (4δ)^d)`.
    pub max_ratio: f64,
    pub mean_volume: f64,
    pub mean_pieces: f64,
    /// Estimate of `E[exp(ε|S|²)]`.
    pub moment: f64,
    pub moment_stderr: f64,
    /// The moment on each of four disjoint quarters of the paths.
    pub subsample_moments: Vec<f64>,
}

impl SausageReport {
    /// Largest over smallest quarter moment.
    pub fn subsample_ratio(&self) -> f64 {
        let hi = self.subsample_moments.iter().cloned().fold(f64::MIN, f64::max);
        let lo = self.subsample_moments.iter().cloned().fold(f64::MAX, f64::min);
        hi / lo
    }
}

/// Check the cube-chain bound on `n_paths` Brownian paths from the origin
/// and estimate the exponential moment of the squared sausage volume.
/// Volumes are voxel counts with edge `δ/8`.
pub fn sausage_diagnostics(
    n_paths: usize,
    dim: usize,
    delta: f64,
    t: f64,
    epsilon: f64,
    steps: usize,
    seed: u64,
) -> Result<SausageReport> {
    if n_paths < 4 {
        return Err(Error::Input("sausage diagnostics need at least four paths".into()));
    }
    let spec = SausageSpec { delta, method: SausageMethod::Voxel { edge: Some(delta / 8.0) } };
    let cube = (4.0 * delta).powi(dim as i32);
    let rows: Vec<Result<(f64, usize)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let p = brownian_path(&vec![0.0; dim], t, steps, &mut rng)?;
            let v = sausage_volume(&p, &spec)?.volume;
            Ok((v, cube_chain_pieces(&p, delta)))
        })
        .collect();
    let rows: Vec<(f64, usize)> = rows.into_iter().collect::<Result<_>>()?;
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for &(v, n) in &rows {
        let r = v / (n as f64 * cube);
        max_ratio = max_ratio.max(r);
        if r > 1.0 {
            violations += 1;
        }
    }
    let moments: Vec<f64> = rows.iter().map(|(v, _)| (epsilon * v * v).exp()).collect();
    let (moment, moment_stderr) = mean_stderr(&moments);
    let q = n_paths / 4;
    let subsample_moments = (0..4).map(|k| mean_stderr(&moments[k * q..(k + 1) * q]).0).collect();
    Ok(SausageReport {
        n_paths,
        dim,
        delta,
        t,
        epsilon,
        violations,
        max_ratio,
        mean_volume: mean_stderr(&rows.iter().map(|r| r.0).collect::<Vec<_>>()).0,
        mean_pieces: mean_stderr(&rows.iter().map(|r| r.1 as f64).collect::<Vec<_>>()).0,
        moment,
        moment_stderr,
        subsample_moments,
    })
}

/// Lower and upper side of the cylinder bound
/// `c_{d−1} δ^{d−1} ‖σ(β) − σ(0)‖ ≤ |B_δ(σ)|` for one bridge.
pub fn cylinder_bound(bridge: &Path, delta: f64) -> Result<(f64, f64)> {
    let d = bridge.dim;
    let c = if d == 1 { 1.0 } else { unit_ball_volume(d - 1) };
    let len = crate::geometry::dist2(bridge.start(), bridge.end()).sqrt();
    let lhs = c * delta.powi(d as i32 - 1) * len;
    let rhs = sausage_volume(bridge, &SausageSpec::voxel(delta))?.volume;
    Ok((lhs, rhs))
}

/// Two-sided two-sample Kolmogorov–Smirnov test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `P(D ≥ d)` under the null by counting lattice paths, for small samples.
fn ks_exact_p(n: usize, m: usize, d: f64) -> f64 {
    let tol = 1e-10;
    let inside = |i: usize, j: usize| ((i as f64 / n as f64) - (j as f64 / m as f64)).abs() < d - tol;
    // Paths from (0,0) to (n,m) staying strictly inside the band, as probabilities.
    let mut row = vec![0.0f64; m + 1];
    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                row[0] = 1.0;
                continue;
            }
            if !inside(i, j) {
                row[j] = 0.0;
                continue;
            }
            let up = if i > 0 { row[j] * i as f64 / (i + j) as f64 } else { 0.0 };
            let left = if j > 0 { row[j - 1] * j as f64 / (i + j) as f64 } else { 0.0 };
            row[j] = up + left;
        }
    }
    (1.0 - row[m]).clamp(0.0, 1.0)
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (1..=10).map(|k| y.powi((2 * k - 1) * (2 * k - 1))).sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-16 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// KS two-sample test; exact for `n, m ≤ 30`, asymptotic otherwise.
pub fn two_sample_test(xs: &[f64], ys: &[f64]) -> Result<KsResult> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Input("two-sample test needs nonempty samples".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::NaN("two-sample test input".into()));
    }
    let d = ks_statistic(xs, ys);
    let (n, m) = (xs.len(), ys.len());
    if d == 0.0 {
        return Ok(KsResult { statistic: 0.0, p_value: 1.0, exact: n <= 30 && m <= 30 });
    }
    if n <= 30 && m <= 30 {
        return Ok(KsResult { statistic: d, p_value: ks_exact_p(n, m, d), exact: true });
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(lambda), exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectories::{sample_bridge, Loop};
    use crate::representations::{cut_rl_to_fk, RlConfig};

    fn loop_config(roots: &[(f64, usize)]) -> FkConfig {
        let mut rng = stream(1, 0);
        let loops = roots.iter().map(|&(x, j)| Loop::sample(&[x], j, 0.01, 8, &mut rng).unwrap()).collect();
        cut_rl_to_fk(&RlConfig::new(1, 0.01, 8, loops).unwrap())
    }

    #[test]
    fn empty_configuration_is_zero() {
        let g = FkConfig::empty(2, 1.0, 8).unwrap();
        for f in [f1, f2, f3, f4] {
            assert_eq!(f(&g), 0.0);
        }
        assert_eq!(long_cycle_fraction(&g, 3, LongCycleRule::Literal), 0.0);
    }

    #[test]
    fn single_self_bridge() {
        let g = loop_config(&[(0.5, 1)]);
        assert_eq!(f2(&g), 1.0);
        assert_eq!(f4(&g), 1.0);
        assert_eq!(f3(&g), 0.0);
        assert_eq!(long_cycle_fraction(&g, 2, LongCycleRule::Literal), 0.0);
        assert_eq!(long_cycle_fraction(&g, 2, LongCycleRule::PeriodOneLong), 1.0);
    }

    #[test]
    fn cycle_histogram_of_a_loop() {
        let g = loop_config(&[(0.5, 3)]);
        let counts = cycle_length_counts(&g).unwrap();
        assert_eq!(counts, BTreeMap::from([(3, 1)]));
        let h = cycle_length_histogram(&g).unwrap();
        assert_eq!(h.counts, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn two_cycle_and_long_cycles() {
        let g = loop_config(&[(0.5, 2)]);
        assert_eq!(long_cycle_fraction(&g, 2, LongCycleRule::Literal), 0.0);
        let g = loop_config(&[(0.5, 5)]);
        let starts_in = g.bridges().iter().filter(|b| unit_box(1).contains(b.start())).count() as f64;
        assert_eq!(long_cycle_fraction(&g, 4, LongCycleRule::Literal), starts_in);
        assert_eq!(long_cycle_fraction(&g, 5, LongCycleRule::Literal), 0.0);
    }

    #[test]
    fn threshold_values() {
        assert_eq!(threshold(3.0, 5.0), 0.0);
        assert_eq!(threshold(7.0, 5.0), 7.0);
        assert_eq!(threshold(0.4, 0.0), 0.4);
    }

    #[test]
    fn straight_path_cube_chain() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let p = Path::straight(&[0.0, 0.0], &[0.95, 0.0], grid);
        // Exits at x = 0.1, 0.2, ..., 0.9.
        assert_eq!(cube_chain_pieces(&p, 0.1), 10);
        let p = Path::straight(&[0.0, 0.0], &[1.05, 0.0], grid);
        assert_eq!(cube_chain_pieces(&p, 0.1), 11);
    }

    #[test]
    fn ks_edges() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let r = two_sample_test(&xs, &xs).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let ys: Vec<f64> = (100..150).map(|i| i as f64).collect();
        assert_eq!(two_sample_test(&xs, &ys).unwrap().statistic, 1.0);
        // Exact small-sample value: n = m = 3, D = 1 has probability 2/C(6,3) = 0.1.
        let r = two_sample_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!(r.exact && (r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ks_calibration() {
        let mut rng = stream(11, 0);
        let reps = 1000;
        let mut rejects = 0;
        for _ in 0..reps {
            let a: Vec<f64> = (0..60).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..80).map(|_| rng.random()).collect();
            if two_sample_test(&a, &b).unwrap().p_value < 0.05 {
                rejects += 1;
            }
        }
        let rate = rejects as f64 / reps as f64;
        let se = (0.05f64 * 0.95 / reps as f64).sqrt();
        assert!((rate - 0.05).abs() < 3.0 * se + 0.01, "rate {rate}");
        let mut small = 0;
        for _ in 0..reps {
            let a: Vec<f64> = (0..12).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..15).map(|_| rng.random()).collect();
            if two_sample_test(&a, &b).unwrap().p_value < 0.05 {
                small += 1;
            }
        }
        // Discrete exact test: size at most α.
        assert!((small as f64 / reps as f64) < 0.05 + 3.0 * se);
    }

    #[test]
    fn cylinder_bound_on_bridges() {
        let mut rng = stream(5, 0);
        for _ in 0..20 {
            let b = sample_bridge(&[0.0, 0.0], &[0.5, 0.2], 0.3, 16, &mut rng).unwrap();
            let (lhs, rhs) = cylinder_bound(&b, 0.05).unwrap();
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn epsilon_zero_moment_is_one() {
        let r = sausage_diagnostics(8, 2, 0.2, 0.5, 0.0, 32, 3).unwrap();
        assert_eq!(r.moment, 1.0);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn histogram_rules() {
        assert!(Histogram::new(vec![0.0, 0.0]).is_err());
        let mut h = Histogram::integer(3);
        h.add(2.0, 1.0);
        h.add(9.0, 1.0);
        h.normalize();
        assert_eq!(h.counts, vec![0.0, 1.0, 0.0]);
        assert!(h.to_csv().starts_with("lower,upper,count\n"));
    }
}
