//! Discretized Brownian bridges and rooted loops.
//!
//! Every trajectory lives on a uniform time grid. Bridges of duration `β` use
//! `M` steps; a loop of length `j` uses `M·j` steps over duration `β·j`, so
//! all paths of a configuration share the same spacing `β/M`.

use crate::error::{check_finite, Error, Result};
use crate::geometry::{point_segment_dist2, unit_ball_volume};
use crate::rng::normal;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default number of grid steps per `β` of duration.
pub const DEFAULT_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub duration: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(duration: f64, steps: usize) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::Input(format!("grid duration must be positive, got {duration}")));
        }
        if steps < 2 {
            return Err(Error::Input(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { duration, steps })
    }

    pub fn spacing(&self) -> f64 {
        self.duration / self.steps as f64
    }

    /// Time of node `k`; the last node is `duration` exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.duration
        } else {
            self.duration * k as f64 / self.steps as f64
        }
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }
}

/// A polyline trajectory on a [`TimeGrid`], nodes stored flat (`(M+1)·d` values).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub dim: usize,
    pub grid: TimeGrid,
    pub nodes: Vec<f64>,
}

/// A bridge is a path of duration `β` whose first and last nodes are its endpoints.
pub type Bridge = Path;

impl Path {
    pub fn from_nodes(dim: usize, grid: TimeGrid, nodes: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("dimension must be at least 1".into()));
        }
        if nodes.len() != dim * grid.nodes() {
            return Err(Error::Input(format!(
                "expected {} coordinates, got {}",
                dim * grid.nodes(),
                nodes.len()
            )));
        }
        check_finite(&nodes, "path")?;
        Ok(Self { dim, grid, nodes })
    }

    /// Constant path sitting at `x`.
    pub fn constant(x: &[f64], grid: TimeGrid) -> Self {
        let mut nodes = Vec::with_capacity(x.len() * grid.nodes());
        for _ in 0..grid.nodes() {
            nodes.extend_from_slice(x);
        }
        Self { dim: x.len(), grid, nodes }
    }

    /// Straight segment from `x` to `y` with exact endpoints.
    pub fn straight(x: &[f64], y: &[f64], grid: TimeGrid) -> Self {
        let m = grid.steps;
        let mut nodes = Vec::with_capacity(x.len() * grid.nodes());
        nodes.extend_from_slice(x);
        for k in 1..m {
            let s = k as f64 / m as f64;
            nodes.extend(x.iter().zip(y).map(|(a, b)| a + s * (b - a)));
        }
        nodes.extend_from_slice(y);
        Self { dim: x.len(), grid, nodes }
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.nodes()
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.node(0)
    }

    pub fn end(&self) -> &[f64] {
        self.node(self.grid.steps)
    }

    pub fn segments(&self) -> impl Iterator<Item = (&[f64], &[f64])> + '_ {
        (0..self.grid.steps).map(move |k| (self.node(k), self.node(k + 1)))
    }

    /// `s ↦ σ(T − s)`.
    pub fn reversed(&self) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for k in (0..self.num_nodes()).rev() {
            nodes.extend_from_slice(self.node(k));
        }
        Self { dim: self.dim, grid: self.grid, nodes }
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let d = self.dim;
        let nodes = self.nodes.iter().enumerate().map(|(i, x)| x + v[i % d]).collect();
        Self { dim: d, grid: self.grid, nodes }
    }

    /// Sub-path made of nodes `a..=b`.
    pub fn slice_nodes(&self, a: usize, b: usize) -> Result<Self> {
        let grid = TimeGrid::new(self.grid.spacing() * (b - a) as f64, b - a)?;
        Ok(Self {
            dim: self.dim,
            grid,
            nodes: self.nodes[a * self.dim..(b + 1) * self.dim].to_vec(),
        })
    }

    pub fn all_nodes_in(&self, mut pred: impl FnMut(&[f64]) -> bool) -> bool {
        (0..self.num_nodes()).all(|k| pred(self.node(k)))
    }

    /// Coordinate-wise bounding box of the nodes.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.start().to_vec();
        let mut hi = lo.clone();
        for k in 1..self.num_nodes() {
            for (i, v) in self.node(k).iter().enumerate() {
                lo[i] = lo[i].min(*v);
                hi[i] = hi[i].max(*v);
            }
        }
        (lo, hi)
    }
}

/// Fill `out` with the interior nodes `1..steps` of a discrete Brownian bridge
/// from `x` to `y` with spacing `h`, using sequential conditional Gaussians.
pub fn fill_bridge<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    h: f64,
    steps: usize,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let d = x.len();
    let mut z = x.to_vec();
    for k in 1..steps {
        let rem = (steps - k + 1) as f64 * h;
        let w = h / rem;
        let sd = (h * (rem - h) / rem).sqrt();
        for i in 0..d {
            z[i] += w * (y[i] - z[i]) + sd * normal(rng);
        }
        out.extend_from_slice(&z);
    }
}

/// Brownian bridge from `x` to `y` of duration `t` on `steps` steps.
pub fn sample_bridge<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    t: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Bridge> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Input("bridge endpoints must share a positive dimension".into()));
    }
    check_finite(x, "bridge start")?;
    check_finite(y, "bridge end")?;
    let grid = TimeGrid::new(t, steps)?;
    let mut nodes = Vec::with_capacity(x.len() * grid.nodes());
    nodes.extend_from_slice(x);
    fill_bridge(x, y, grid.spacing(), steps, rng, &mut nodes);
    nodes.extend_from_slice(y);
    Ok(Path { dim: x.len(), grid, nodes })
}

/// Total mass `(2πt)^{-d/2} exp(-|y-x|²/2t)` of the bridge measure.
pub fn unnormalized_mass(x: &[f64], y: &[f64], t: f64) -> f64 {
    log_mass(x, y, t).exp()
}

pub fn log_mass(x: &[f64], y: &[f64], t: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * x.len() as f64 * (2.0 * PI * t).ln() - d2 / (2.0 * t)
}

/// A rooted loop of length `j`: duration `β·j`, `M·j` steps, first node = last node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub length: usize,
    pub beta: f64,
    pub path: Path,
}

impl Loop {
    pub fn new(path: Path, length: usize, beta: f64) -> Result<Self> {
        if length == 0 {
            return Err(Error::Input("loop length must be at least 1".into()));
        }
        if path.grid.steps % length != 0 {
            return Err(Error::Input("loop steps must be a multiple of its length".into()));
        }
        if path.start() != path.end() {
            return Err(Error::Input("loop is not closed".into()));
        }
        let expected = beta * length as f64;
        if (path.grid.duration - expected).abs() > 1e-12 * expected {
            return Err(Error::Input("loop duration must equal beta times its length".into()));
        }
        Ok(Self { length, beta, path })
    }

    /// Brownian loop rooted at `x` of length `j`, `m` steps per `β`.
    pub fn sample<R: Rng + ?Sized>(x: &[f64], j: usize, beta: f64, m: usize, rng: &mut R) -> Result<Self> {
        let path = sample_bridge(x, x, beta * j as f64, m * j, rng)?;
        Ok(Self { length: j, beta, path })
    }

    pub fn dim(&self) -> usize {
        self.path.dim
    }

    pub fn steps_per_beta(&self) -> usize {
        self.path.grid.steps / self.length
    }

    pub fn root(&self) -> &[f64] {
        self.path.start()
    }

    /// Rotate the loop by `⌊sM/β⌉` grid steps (mod `M·j`).
    pub fn time_shift(&self, s: f64) -> Self {
        let n = self.path.grid.steps as i64;
        let k = (s * self.steps_per_beta() as f64 / self.beta).round() as i64;
        self.rotate(k.rem_euclid(n) as usize)
    }

    /// New loop whose node `i` is old node `i + k` (cyclically).
    pub fn rotate(&self, k: usize) -> Self {
        let n = self.path.grid.steps;
        let d = self.dim();
        let k = k % n;
        let mut nodes = Vec::with_capacity(self.path.nodes.len());
        for i in 0..n {
            nodes.extend_from_slice(self.path.node((i + k) % n));
        }
        nodes.extend_from_slice(self.path.node(k));
        debug_assert_eq!(nodes.len(), d * (n + 1));
        Self {
            length: self.length,
            beta: self.beta,
            path: Path { dim: d, grid: self.path.grid, nodes },
        }
    }

    /// The `j` bridges `s ↦ ℓ(βi + s)`, `0 ≤ i < j`.
    pub fn cut(&self) -> Vec<Bridge> {
        let m = self.steps_per_beta();
        let grid = TimeGrid { duration: self.beta, steps: m };
        (0..self.length)
            .map(|i| Path {
                dim: self.dim(),
                grid,
                nodes: self.path.nodes[i * m * self.dim()..((i + 1) * m + 1) * self.dim()].to_vec(),
            })
            .collect()
    }
}

/// Sup-distance between loops, `+∞` when lengths differ.
pub fn d_inf(a: &Loop, b: &Loop) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Input("loops have different dimensions".into()));
    }
    if a.beta != b.beta || a.steps_per_beta() != b.steps_per_beta() {
        return Err(Error::Input("loops live on incompatible grids".into()));
    }
    if a.length != b.length {
        return Ok(f64::INFINITY);
    }
    let mut best = 0.0f64;
    for k in 0..a.path.num_nodes() {
        let d2: f64 = a.path.node(k).iter().zip(b.path.node(k)).map(|(x, y)| (x - y) * (x - y)).sum();
        best = best.max(d2);
    }
    Ok(best.sqrt())
}

/// The mark of a point in the marked-point encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkTriple {
    pub p: Vec<i64>,
    pub u: f64,
    pub omega: Path,
}

impl MarkTriple {
    pub fn new(p: Vec<i64>, u: f64, omega: Path) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Input(format!("selector u must lie in [0, 1], got {u}")));
        }
        if omega.grid.duration != 1.0 {
            return Err(Error::Input("mark shape must have duration 1".into()));
        }
        if omega.start().iter().chain(omega.end()).any(|v| *v != 0.0) {
            return Err(Error::Input("mark shape must start and end at the origin".into()));
        }
        if p.len() != omega.dim {
            return Err(Error::Input("mark lattice vector has the wrong dimension".into()));
        }
        Ok(Self { p, u, omega })
    }
}

/// Sample a normalized bridge shape `0 → 0` over unit time.
pub fn sample_standard_shape<R: Rng + ?Sized>(dim: usize, steps: usize, rng: &mut R) -> Result<Path> {
    let z = vec![0.0; dim];
    sample_bridge(&z, &z, 1.0, steps, rng)
}

/// Bridge `s ↦ x + (s/β)(target − x) + √β·ω(s/β)` on the mark's grid.
pub fn unfold(x: &[f64], target: &[f64], omega: &Path, beta: f64) -> Bridge {
    let m = omega.grid.steps;
    let d = x.len();
    let sb = beta.sqrt();
    let mut nodes = Vec::with_capacity(d * (m + 1));
    nodes.extend_from_slice(x);
    for k in 1..m {
        let s = k as f64 / m as f64;
        let w = omega.node(k);
        for i in 0..d {
            nodes.push(x[i] + s * (target[i] - x[i]) + sb * w[i]);
        }
    }
    nodes.extend_from_slice(target);
    Path {
        dim: d,
        grid: TimeGrid { duration: beta, steps: m },
        nodes,
    }
}

/// Inverse of [`unfold`]: the standardized shape of a bridge.
pub fn standardize(bridge: &Bridge) -> Path {
    let m = bridge.grid.steps;
    let d = bridge.dim;
    let sb = bridge.grid.duration.sqrt();
    let x = bridge.start();
    let y = bridge.end();
    let mut nodes = vec![0.0; d * (m + 1)];
    for k in 1..m {
        let s = k as f64 / m as f64;
        let b = bridge.node(k);
        for i in 0..d {
            nodes[k * d + i] = (b[i] - x[i] - s * (y[i] - x[i])) / sb;
        }
    }
    Path {
        dim: d,
        grid: TimeGrid { duration: 1.0, steps: m },
        nodes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SausageMethod {
    /// Count cells of an origin-anchored grid whose centre is within `δ`.
    Voxel { edge: Option<f64> },
    /// Hit fraction of uniform samples in the padded bounding box.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SausageSpec {
    pub delta: f64,
    pub method: SausageMethod,
}

impl SausageSpec {
    pub fn voxel(delta: f64) -> Self {
        Self { delta, method: SausageMethod::Voxel { edge: None } }
    }

    /// Default voxel edge, `δ/32`.
    pub fn default_edge(delta: f64) -> f64 {
        delta / 32.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub volume: f64,
    /// Monte Carlo standard error; 0 for the deterministic voxel count.
    pub stderr: f64,
}

/// Volume of the `δ`-neighbourhood of the polyline through the path's nodes.
///
/// The voxel count carries a discretization error of order
/// `surface · edge·√d / 2`, i.e. relative error about `edge·√d/δ` for compact
/// sausages; the default edge keeps it near 0.3% for a disk.
pub fn sausage_volume(path: &Path, spec: &SausageSpec) -> Result<VolumeEstimate> {
    let delta = spec.delta;
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::Config(format!("sausage thickness must be positive, got {delta}")));
    }
    match spec.method {
        SausageMethod::Voxel { edge } => {
            let h = edge.unwrap_or_else(|| SausageSpec::default_edge(delta));
            if !(h > 0.0) {
                return Err(Error::Config("voxel edge must be positive".into()));
            }
            if h > delta / 2.0 {
                return Err(Error::Config(format!(
                    "voxel edge {h} is coarser than half the thickness {delta}"
                )));
            }
            Ok(VolumeEstimate { volume: voxel_volume(path, delta, h)?, stderr: 0.0 })
        }
        SausageMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Config("Monte Carlo sausage needs at least one sample".into()));
            }
            let mut rng = crate::rng::stream(seed, 0);
            let (lo, hi) = path.bounding_box();
            let lo: Vec<f64> = lo.iter().map(|v| v - delta).collect();
            let hi: Vec<f64> = hi.iter().map(|v| v + delta).collect();
            let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
            let d2 = delta * delta;
            let mut p = vec![0.0; path.dim];
            let mut hits = 0usize;
            for _ in 0..samples {
                for i in 0..path.dim {
                    p[i] = rng.random_range(lo[i]..hi[i]);
                }
                if within(path, &p, d2) {
                    hits += 1;
                }
            }
            let f = hits as f64 / samples as f64;
            Ok(VolumeEstimate {
                volume: vol * f,
                stderr: vol * (f * (1.0 - f) / samples as f64).sqrt(),
            })
        }
    }
}

fn within(path: &Path, p: &[f64], d2: f64) -> bool {
    if path.grid.steps == 0 {
        return crate::geometry::dist2(p, path.start()) <= d2;
    }
    path.segments().any(|(a, b)| point_segment_dist2(p, a, b) <= d2)
}

const MAX_VOXELS: u64 = 1 << 32;

fn voxel_volume(path: &Path, delta: f64, h: f64) -> Result<f64> {
    let d = path.dim;
    let (lo, hi) = path.bounding_box();
    // Cell k covers [k·h − h/2, k·h + h/2) and has centre k·h.
    let kmin: Vec<i64> = lo.iter().map(|v| ((v - delta) / h).floor() as i64 - 1).collect();
    let kmax: Vec<i64> = hi.iter().map(|v| ((v + delta) / h).ceil() as i64 + 1).collect();
    let extent: Vec<u64> = kmin.iter().zip(&kmax).map(|(a, b)| (b - a + 1) as u64).collect();
    let total = extent.iter().try_fold(1u64, |acc, e| acc.checked_mul(*e)).unwrap_or(u64::MAX);
    if total > MAX_VOXELS {
        return Err(Error::Config(format!(
            "voxel grid of {total} cells is too large; use a coarser edge or Monte Carlo"
        )));
    }
    let mut bits = vec![0u64; (total as usize).div_ceil(64)];
    let d2 = delta * delta;
    let mut idx = vec![0i64; d];
    let mut centre = vec![0.0; d];
    let segs: Vec<(&[f64], &[f64])> = if path.grid.steps == 0 {
        vec![(path.start(), path.start())]
    } else {
        path.segments().collect()
    };
    for (a, b) in segs {
        let lo_k: Vec<i64> = (0..d).map(|i| ((a[i].min(b[i]) - delta) / h).floor() as i64).collect();
        let hi_k: Vec<i64> = (0..d).map(|i| ((a[i].max(b[i]) + delta) / h).ceil() as i64).collect();
        idx.copy_from_slice(&lo_k);
        'cells: loop {
            for i in 0..d {
                centre[i] = idx[i] as f64 * h;
            }
            let mut lin = 0u64;
            for i in (0..d).rev() {
                lin = lin * extent[i] + (idx[i] - kmin[i]) as u64;
            }
            let (w, m) = ((lin / 64) as usize, 1u64 << (lin % 64));
            if bits[w] & m == 0 && point_segment_dist2(&centre, a, b) <= d2 {
                bits[w] |= m;
            }
            for i in 0..d {
                if idx[i] < hi_k[i] {
                    idx[i] += 1;
                    continue 'cells;
                }
                idx[i] = lo_k[i];
            }
            break;
        }
    }
    let count: u64 = bits.iter().map(|w| w.count_ones() as u64).sum();
    Ok(count as f64 * h.powi(d as i32))
}

/// Volume of the ball of radius `δ` in dimension `d`.
pub fn ball_volume(d: usize, delta: f64) -> f64 {
    unit_ball_volume(d) * delta.powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn grid_spacing_is_consistent() {
        let g = TimeGrid::new(0.7, 64).unwrap();
        assert_eq!(g.time(64), 0.7);
        assert!((g.spacing() * 64.0 - 0.7).abs() < 1e-15);
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 8).is_err());
    }

    #[test]
    fn mass_closed_form() {
        let m = unnormalized_mass(&[0.3], &[0.3], 1.0);
        assert!((m - 0.398_942_280_401_432_7).abs() < 1e-15);
        let m2 = unnormalized_mass(&[1.0, 2.0], &[1.0, 2.0], 1.0);
        assert!((m2 - 0.159_154_943_091_895_33).abs() < 1e-15);
        let a = unnormalized_mass(&[0.1, -2.0], &[0.7, 0.4], 0.3);
        let b = unnormalized_mass(&[0.7, 0.4], &[0.1, -2.0], 0.3);
        assert_eq!(a, b);
    }

    #[test]
    fn bridge_endpoints_exact() {
        let mut rng = stream(1, 0);
        let b = sample_bridge(&[0.1, 0.2], &[-0.3, 0.4], 0.5, 16, &mut rng).unwrap();
        assert_eq!(b.start(), &[0.1, 0.2]);
        assert_eq!(b.end(), &[-0.3, 0.4]);
        let z = sample_bridge(&[0.0], &[0.0], 2.0, 8, &mut rng).unwrap();
        assert_eq!(z.start(), &[0.0]);
        assert_eq!(z.end(), &[0.0]);
        assert!(sample_bridge(&[f64::NAN], &[0.0], 1.0, 8, &mut rng).is_err());
    }

    #[test]
    fn bridge_midpoint_moments() {
        // Analytic mean (x+y)/2 and variance s(t−s)/t = 0.25 at s = t/2 = 0.5.
        let mut rng = stream(2, 0);
        let n = 100_000;
        for y in [0.0, 2.0] {
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let b = sample_bridge(&[0.0], &[y], 1.0, 8, &mut rng).unwrap();
                let v = b.node(4)[0];
                s1 += v;
                s2 += v * v;
            }
            let mean = s1 / n as f64;
            let var = s2 / n as f64 - mean * mean;
            let se = (0.25 / n as f64).sqrt();
            assert!((mean - y / 2.0).abs() < 3.0 * se, "mean {mean}");
            // Variance of the sample variance of a Gaussian is 2σ⁴/n.
            let se_var = (2.0 * 0.25f64.powi(2) / n as f64).sqrt();
            assert!((var - 0.25).abs() < 4.0 * se_var, "var {var}");
        }
    }

    #[test]
    fn unfold_standardize_roundtrip() {
        let mut rng = stream(3, 0);
        let b = sample_bridge(&[0.2, -0.1], &[1.5, 0.3], 0.7, 32, &mut rng).unwrap();
        let w = standardize(&b);
        assert!(w.start().iter().chain(w.end()).all(|v| *v == 0.0));
        let back = unfold(b.start(), b.end(), &w, 0.7);
        for (u, v) in back.nodes.iter().zip(&b.nodes) {
            assert!((u - v).abs() <= 4.0 * f64::EPSILON * u.abs().max(1.0));
        }
        let flat = Path::straight(&[0.0], &[2.0], TimeGrid::new(1.0, 8).unwrap());
        assert!(standardize(&flat).nodes.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn unfold_zero_mark_is_straight() {
        let omega = Path::constant(&[0.0], TimeGrid::new(1.0, 4).unwrap());
        let b = unfold(&[1.0], &[3.0], &omega, 2.0);
        assert_eq!(b.nodes, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    #[test]
    fn time_shift_identities() {
        let mut rng = stream(4, 0);
        let l = Loop::sample(&[0.0, 0.0], 3, 0.5, 8, &mut rng).unwrap();
        assert_eq!(l.time_shift(0.0), l);
        assert_eq!(l.time_shift(1.5), l);
        let s = l.time_shift(0.5);
        assert_eq!(s.root(), l.path.node(8));
        assert_eq!(s.path.start(), s.path.end());
    }

    #[test]
    fn loop_distance() {
        let mut rng = stream(5, 0);
        let a = Loop::sample(&[0.0], 1, 1.0, 8, &mut rng).unwrap();
        let b = Loop::sample(&[0.0], 2, 1.0, 8, &mut rng).unwrap();
        assert_eq!(d_inf(&a, &a).unwrap(), 0.0);
        assert_eq!(d_inf(&a, &b).unwrap(), f64::INFINITY);
        let t = Loop { path: a.path.translated(&[0.3]), ..a.clone() };
        assert!((d_inf(&a, &t).unwrap() - 0.3).abs() < 1e-12);
        let c = Loop::sample(&[0.0], 1, 2.0, 8, &mut rng).unwrap();
        assert!(d_inf(&a, &c).is_err());
    }

    #[test]
    fn stadium_and_disk() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let seg = Path::straight(&[0.0, 0.0], &[2.0, 0.0], g);
        let v = sausage_volume(&seg, &SausageSpec::voxel(1.0)).unwrap().volume;
        let exact = 4.0 + PI;
        assert!((v - exact).abs() / exact < 0.01, "stadium {v}");
        let pt = Path::constant(&[0.3, -0.2], g);
        let v = sausage_volume(&pt, &SausageSpec::voxel(1.0)).unwrap().volume;
        assert!((v - PI).abs() / PI < 0.01, "disk {v}");
        let coarse = SausageSpec { delta: 1.0, method: SausageMethod::Voxel { edge: Some(0.6) } };
        assert!(sausage_volume(&pt, &coarse).is_err());
    }

    #[test]
    fn voxel_matches_monte_carlo() {
        let mut rng = stream(6, 0);
        for rep in 0..3 {
            let b = sample_bridge(&[0.0, 0.0], &[0.5, 0.0], 1.0, 32, &mut rng).unwrap();
            let v = sausage_volume(&b, &SausageSpec::voxel(0.2)).unwrap();
            let mc = sausage_volume(
                &b,
                &SausageSpec { delta: 0.2, method: SausageMethod::MonteCarlo { samples: 200_000, seed: rep } },
            )
            .unwrap();
            // Allow the voxel discretization error on top of the MC error bar.
            let tol = 3.0 * mc.stderr + 0.01 * v.volume;
            assert!((v.volume - mc.volume).abs() < tol, "{} vs {}", v.volume, mc.volume);
        }
    }
}
