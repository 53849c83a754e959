//! The three configuration encodings and the maps between them.
//!
//! * [`FkConfig`]: a finite set of bridges of duration `β`.
//! * [`RlConfig`]: a finite set of rooted loops.
//! * [`MpConfig`]: marked points `(x, p, u, ω)`.
//!
//! Successors are matched by bit-exact equality of endpoint coordinates.

use crate::error::{Error, Result};
use crate::geometry::{lex_cmp, point_key, BoxRegion};
use crate::interactions::cell_index;
use crate::trajectories::{standardize, unfold, Bridge, Loop, MarkTriple, Path, TimeGrid};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A finite set of bridges sharing `β`, the dimension and the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FkConfigData", into = "FkConfigData")]
pub struct FkConfig {
    dim: usize,
    beta: f64,
    steps: usize,
    bridges: Vec<Bridge>,
    links: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FkConfigData {
    dim: usize,
    beta: f64,
    steps: usize,
    bridges: Vec<Bridge>,
}

impl TryFrom<FkConfigData> for FkConfig {
    type Error = Error;
    fn try_from(d: FkConfigData) -> Result<Self> {
        FkConfig::new(d.dim, d.beta, d.steps, d.bridges)
    }
}

impl From<FkConfig> for FkConfigData {
    fn from(c: FkConfig) -> Self {
        Self { dim: c.dim, beta: c.beta, steps: c.steps, bridges: c.bridges }
    }
}

impl FkConfig {
    pub fn new(dim: usize, beta: f64, steps: usize, bridges: Vec<Bridge>) -> Result<Self> {
        let grid = TimeGrid::new(beta, steps)?;
        for b in &bridges {
            if b.dim != dim || b.grid != grid {
                return Err(Error::Input("bridge does not match the configuration grid".into()));
            }
            if b.nodes.len() != dim * grid.nodes() || b.nodes.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("bridge has malformed or non-finite nodes".into()));
            }
        }
        let links = compute_links(&bridges);
        Ok(Self { dim, beta, steps, bridges, links })
    }

    pub fn empty(dim: usize, beta: f64, steps: usize) -> Result<Self> {
        Self::new(dim, beta, steps, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn bridges(&self) -> &[Bridge] {
        &self.bridges
    }
    pub fn len(&self) -> usize {
        self.bridges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.bridges.is_empty()
    }
    pub fn into_bridges(self) -> Vec<Bridge> {
        self.bridges
    }

    pub fn is_permutation_wise(&self) -> bool {
        self.links.is_some()
    }

    /// Successor index table; errors if the configuration is not permutation-wise.
    pub fn links(&self) -> Result<&[usize]> {
        self.links
            .as_deref()
            .ok_or_else(|| Error::NotPermutationWise("bridge ends and starts do not pair up".into()))
    }

    /// Index of the unique bridge starting where bridge `i` ends.
    pub fn successor(&self, i: usize) -> Result<usize> {
        if let Some(l) = &self.links {
            return Ok(l[i]);
        }
        let end = self.bridges[i].end();
        let mut hits = self.bridges.iter().enumerate().filter(|(_, b)| b.start() == end);
        match (hits.next(), hits.next()) {
            (Some((j, _)), None) => Ok(j),
            (None, _) => Err(Error::NotPermutationWise(format!("bridge {i} has no successor"))),
            _ => Err(Error::NotPermutationWise(format!("bridge {i} has several successors"))),
        }
    }

    /// Inverse successor table.
    pub fn predecessors(&self) -> Result<Vec<usize>> {
        let l = self.links()?;
        let mut p = vec![0; l.len()];
        for (i, &j) in l.iter().enumerate() {
            p[j] = i;
        }
        Ok(p)
    }

    /// Cycles of `σ_γ` as index lists in successor order, each starting at its
    /// lexicographically smallest start point.
    pub fn cycle_decomposition(&self) -> Result<Vec<Vec<usize>>> {
        let l = self.links()?;
        let n = l.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if seen[i] {
                continue;
            }
            let mut cyc = vec![i];
            seen[i] = true;
            let mut j = l[i];
            while j != i {
                if cyc.len() > n {
                    return Err(Error::InfiniteCycle(format!("walk from bridge {i} exceeded {n} steps")));
                }
                seen[j] = true;
                cyc.push(j);
                j = l[j];
            }
            let k = (0..cyc.len())
                .min_by(|&a, &b| lex_cmp(self.bridges[cyc[a]].start(), self.bridges[cyc[b]].start()))
                .unwrap();
            cyc.rotate_left(k);
            out.push(cyc);
        }
        Ok(out)
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let bridges: Vec<Bridge> = idx.iter().map(|&i| self.bridges[i].clone()).collect();
        let links = compute_links(&bridges);
        Self { dim: self.dim, beta: self.beta, steps: self.steps, bridges, links }
    }

    pub fn union(&self, other: &FkConfig) -> Result<Self> {
        let mut b = self.bridges.clone();
        b.extend(other.bridges.iter().cloned());
        Self::new(self.dim, self.beta, self.steps, b)
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        let bridges: Vec<Bridge> = self.bridges.iter().map(|b| b.translated(v)).collect();
        let links = compute_links(&bridges);
        Self { bridges, links, ..self.clone() }
    }

    /// `R_FK`: every bridge replaced by `s ↦ σ(β − s)`.
    pub fn time_reversed(&self) -> Self {
        let bridges: Vec<Bridge> = self.bridges.iter().map(|b| b.reversed()).collect();
        let links = compute_links(&bridges);
        Self { bridges, links, ..self.clone() }
    }

    /// Bridges sorted by start point, for set comparisons.
    pub fn canonical(&self) -> Self {
        let mut b = self.bridges.clone();
        b.sort_by(|x, y| lex_cmp(x.start(), y.start()).then_with(|| lex_cmp(&x.nodes, &y.nodes)));
        let links = compute_links(&b);
        Self { bridges: b, links, ..self.clone() }
    }

    /// Starting points, flat.
    pub fn starts(&self) -> Vec<f64> {
        self.bridges.iter().flat_map(|b| b.start().iter().copied()).collect()
    }
}

/// Successor table if every end is exactly one start and vice versa.
fn compute_links(bridges: &[Bridge]) -> Option<Vec<usize>> {
    let mut starts: HashMap<Vec<u64>, usize> = HashMap::with_capacity(bridges.len());
    for (i, b) in bridges.iter().enumerate() {
        if starts.insert(point_key(b.start()), i).is_some() {
            return None;
        }
    }
    let mut hit = vec![false; bridges.len()];
    let mut links = Vec::with_capacity(bridges.len());
    for b in bridges {
        let j = *starts.get(&point_key(b.end()))?;
        if hit[j] {
            return None;
        }
        hit[j] = true;
        links.push(j);
    }
    Some(links)
}

/// Successor of bridge `i` (see [`FkConfig::successor`]).
pub fn successor(g: &FkConfig, i: usize) -> Result<usize> {
    g.successor(i)
}

pub fn is_permutation_wise(g: &FkConfig) -> bool {
    g.is_permutation_wise()
}

/// A finite set of rooted loops sharing `β` and the steps per `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlConfig {
    pub dim: usize,
    pub beta: f64,
    pub steps: usize,
    pub loops: Vec<Loop>,
}

impl RlConfig {
    pub fn new(dim: usize, beta: f64, steps: usize, loops: Vec<Loop>) -> Result<Self> {
        TimeGrid::new(beta, steps)?;
        for l in &loops {
            if l.dim() != dim || l.beta != beta || l.steps_per_beta() != steps {
                return Err(Error::Input("loop does not match the configuration grid".into()));
            }
            if l.path.start() != l.path.end() {
                return Err(Error::Input("loop is not closed".into()));
            }
        }
        Ok(Self { dim, beta, steps, loops })
    }

    pub fn empty(dim: usize, beta: f64, steps: usize) -> Self {
        Self { dim, beta, steps, loops: Vec::new() }
    }

    /// `Σ_ℓ length(ℓ)`: the number of bridges after cutting.
    pub fn total_length(&self) -> usize {
        self.loops.iter().map(|l| l.length).sum()
    }

    pub fn time_shift(&self, s: f64) -> Self {
        Self { loops: self.loops.iter().map(|l| l.time_shift(s)).collect(), ..self.clone() }
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        Self {
            loops: self
                .loops
                .iter()
                .map(|l| Loop { path: l.path.translated(v), ..l.clone() })
                .collect(),
            ..self.clone()
        }
    }

    /// Loops sorted after rooting each at its lexicographically smallest
    /// `β`-multiple node, for comparisons modulo re-rooting.
    pub fn canonical(&self) -> Self {
        let mut loops: Vec<Loop> = self
            .loops
            .iter()
            .map(|l| {
                let m = l.steps_per_beta();
                let k = (0..l.length)
                    .min_by(|&a, &b| lex_cmp(l.path.node(a * m), l.path.node(b * m)))
                    .unwrap();
                l.rotate(k * m)
            })
            .collect();
        loops.sort_by(|a, b| lex_cmp(a.root(), b.root()).then(a.length.cmp(&b.length)));
        Self { loops, ..self.clone() }
    }
}

/// Cut every loop of length `j` into its `j` bridges.
pub fn cut_rl_to_fk(rho: &RlConfig) -> FkConfig {
    let bridges: Vec<Bridge> = rho.loops.iter().flat_map(|l| l.cut()).collect();
    let links = compute_links(&bridges);
    FkConfig { dim: rho.dim, beta: rho.beta, steps: rho.steps, bridges, links }
}

/// Glue each `σ_γ`-cycle into one loop rooted at its lexicographically
/// smallest start.
pub fn assemble_fk_to_rl(g: &FkConfig) -> Result<RlConfig> {
    let cycles = g.cycle_decomposition()?;
    let d = g.dim;
    let m = g.steps;
    let mut loops = Vec::with_capacity(cycles.len());
    for cyc in cycles {
        let j = cyc.len();
        let mut nodes = Vec::with_capacity(d * (m * j + 1));
        nodes.extend_from_slice(g.bridges[cyc[0]].start());
        for &i in &cyc {
            nodes.extend_from_slice(&g.bridges[i].nodes[d..]);
        }
        let grid = TimeGrid { duration: g.beta * j as f64, steps: m * j };
        loops.push(Loop { length: j, beta: g.beta, path: Path { dim: d, grid, nodes } });
    }
    Ok(RlConfig { dim: d, beta: g.beta, steps: m, loops })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkedPoint {
    pub x: Vec<f64>,
    pub mark: MarkTriple,
}

/// A marked-point configuration with lattice scale `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpConfig {
    pub dim: usize,
    pub beta: f64,
    pub r: f64,
    pub points: Vec<MarkedPoint>,
}

/// Lattice offset `p` with `y ∈ x + r·p + [−r/2, r/2)^d`.
pub fn cell_offset(x: &[f64], y: &[f64], r: f64) -> Vec<i64> {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    cell_index(&diff, r)
}

impl MpConfig {
    pub fn spatial(&self) -> Vec<&[f64]> {
        self.points.iter().map(|p| p.x.as_slice()).collect()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.points.iter().all(|p| seen.insert(point_key(&p.x)))
    }

    /// Points of the spatial component in the target cell of point `i`,
    /// sorted lexicographically.
    pub fn target_cell(&self, i: usize) -> Vec<usize> {
        let x = &self.points[i].x;
        let p = &self.points[i].mark.p;
        let mut members: Vec<usize> = (0..self.points.len())
            .filter(|&k| cell_offset(x, &self.points[k].x, self.r) == *p)
            .collect();
        members.sort_by(|&a, &b| lex_cmp(&self.points[a].x, &self.points[b].x));
        members
    }

    pub fn is_authorized(&self) -> bool {
        self.is_simple() && (0..self.points.len()).all(|i| !self.target_cell(i).is_empty())
    }

    /// Index of `σ_mp(x_i)` and the occupancy `n` of its cell.
    pub fn target(&self, i: usize) -> Result<(usize, usize)> {
        let cell = self.target_cell(i);
        let n = cell.len();
        if n == 0 {
            return Err(Error::Unauthorized(format!("target cell of point {i} is empty")));
        }
        Ok((cell[select_index(n, self.points[i].mark.u) - 1], n))
    }

    /// Targets of all points and their cell occupancies; errors unless the
    /// configuration is authorized and permutation-wise.
    pub fn targets(&self) -> Result<Vec<(usize, usize)>> {
        if !self.is_simple() {
            return Err(Error::NotSimple("duplicated marked point".into()));
        }
        let t: Vec<(usize, usize)> = (0..self.points.len()).map(|i| self.target(i)).collect::<Result<_>>()?;
        let mut hit = vec![false; t.len()];
        for &(k, _) in &t {
            if hit[k] {
                return Err(Error::NotPermutationWise("two points select the same target".into()));
            }
            hit[k] = true;
        }
        Ok(t)
    }

    pub fn is_permutation_wise(&self) -> bool {
        self.targets().is_ok()
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| MarkedPoint {
                    x: p.x.iter().zip(v).map(|(a, b)| a + b).collect(),
                    mark: p.mark.clone(),
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// `max(1, ⌈n·u⌉)`, clamped to `n`.
pub fn select_index(n: usize, u: f64) -> usize {
    ((n as f64 * u).ceil() as usize).clamp(1, n)
}

/// Unfold every marked point into the bridge towards its selected target.
pub fn decode_mp_to_fk(g: &MpConfig) -> Result<FkConfig> {
    let targets = g.targets()?;
    let bridges: Vec<Bridge> = g
        .points
        .iter()
        .zip(&targets)
        .map(|(p, &(k, _))| unfold(&p.x, &g.points[k].x, &p.mark.omega, g.beta))
        .collect();
    let steps = g.points.first().map(|p| p.mark.omega.grid.steps).unwrap_or(2);
    FkConfig::new(g.dim, g.beta, steps, bridges)
}

/// Marks reproducing `γ` under [`decode_mp_to_fk`]: `p` from the target cell,
/// `u = (k − ½)/n` for the `k`-th of `n` points, `ω` the standardized shape.
pub fn encode_fk_to_mp(g: &FkConfig, r: f64) -> Result<MpConfig> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Config(format!("lattice scale must be positive, got {r}")));
    }
    let mut seen = std::collections::HashSet::new();
    for b in g.bridges() {
        if !seen.insert(point_key(b.start())) {
            return Err(Error::NotSimple("two bridges share a start point".into()));
        }
    }
    g.links()?;
    let starts: Vec<&[f64]> = g.bridges().iter().map(|b| b.start()).collect();
    let mut points = Vec::with_capacity(g.len());
    for b in g.bridges() {
        let x = b.start();
        let y = b.end();
        let p = cell_offset(x, y, r);
        let mut members: Vec<&[f64]> = starts.iter().copied().filter(|z| cell_offset(x, z, r) == p).collect();
        members.sort_by(|a, b| lex_cmp(a, b));
        let n = members.len();
        let k = members
            .iter()
            .position(|z| *z == y)
            .ok_or_else(|| Error::NotPermutationWise("bridge end is not a start point".into()))?
            + 1;
        let u = (k as f64 - 0.5) / n as f64;
        points.push(MarkedPoint { x: x.to_vec(), mark: MarkTriple { p, u, omega: standardize(b) } });
    }
    Ok(MpConfig { dim: g.dim(), beta: g.beta(), r, points })
}

/// Indices of bridges starting in `Δ`.
pub fn proj_in_indices(g: &FkConfig, delta: &BoxRegion) -> Vec<usize> {
    (0..g.len()).filter(|&i| delta.contains(g.bridges[i].start())).collect()
}

pub fn bridge_meets(b: &Bridge, delta: &BoxRegion) -> bool {
    b.segments().any(|(a, c)| delta.intersects_segment(a, c))
}

pub fn bridge_inside(b: &Bridge, delta: &BoxRegion) -> bool {
    b.all_nodes_in(|x| delta.contains(x))
}

/// Indices of bridges whose polyline meets `Δ`.
pub fn proj_cap_indices(g: &FkConfig, delta: &BoxRegion) -> Vec<usize> {
    (0..g.len()).filter(|&i| bridge_meets(&g.bridges[i], delta)).collect()
}

/// Indices of bridges with some iterate `σ_γ^k`, `|k| ≤ n`, meeting `Δ`.
pub fn proj_capn_indices(g: &FkConfig, delta: &BoxRegion, n: usize) -> Result<Vec<usize>> {
    let succ = g.links()?;
    let pred = g.predecessors()?;
    let meets: Vec<bool> = g.bridges.iter().map(|b| bridge_meets(b, delta)).collect();
    Ok((0..g.len())
        .filter(|&i| {
            let (mut f, mut b) = (i, i);
            if meets[i] {
                return true;
            }
            for _ in 0..n {
                f = succ[f];
                b = pred[b];
                if meets[f] || meets[b] {
                    return true;
                }
            }
            false
        })
        .collect())
}

pub fn proj_in(g: &FkConfig, delta: &BoxRegion) -> FkConfig {
    g.subset(&proj_in_indices(g, delta))
}

pub fn proj_cap(g: &FkConfig, delta: &BoxRegion) -> FkConfig {
    g.subset(&proj_cap_indices(g, delta))
}

pub fn proj_capn(g: &FkConfig, delta: &BoxRegion, n: usize) -> Result<FkConfig> {
    Ok(g.subset(&proj_capn_indices(g, delta, n)?))
}

/// Cycles of length `≤ n` with at least one bridge meeting `Δ`.
pub fn cycles(g: &FkConfig, delta: &BoxRegion, n: usize) -> Result<Vec<Vec<usize>>> {
    Ok(g
        .cycle_decomposition()?
        .into_iter()
        .filter(|c| c.len() <= n && c.iter().any(|&i| bridge_meets(&g.bridges[i], delta)))
        .collect())
}

/// Boundary data of a configuration relative to a compact `Δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySets {
    /// Points of `Δ` ending an exterior bridge and starting none.
    pub inward: Vec<Vec<f64>>,
    /// Points of `Δ` starting an exterior bridge and ending none.
    pub outward: Vec<Vec<f64>>,
    /// Bridges not contained in `Δ`.
    pub exterior: FkConfig,
    /// Bridges contained in `Δ`.
    pub interior: FkConfig,
}

pub fn dlr_split(g: &FkConfig, delta: &BoxRegion) -> BoundarySets {
    let (mut ext, mut int) = (Vec::new(), Vec::new());
    for i in 0..g.len() {
        if bridge_inside(&g.bridges[i], delta) {
            int.push(i);
        } else {
            ext.push(i);
        }
    }
    let exterior = g.subset(&ext);
    let interior = g.subset(&int);
    let starts: std::collections::HashSet<Vec<u64>> =
        exterior.bridges.iter().map(|b| point_key(b.start())).collect();
    let ends: std::collections::HashSet<Vec<u64>> = exterior.bridges.iter().map(|b| point_key(b.end())).collect();
    let mut inward: Vec<Vec<f64>> = exterior
        .bridges
        .iter()
        .map(|b| b.end())
        .filter(|y| delta.contains(y) && !starts.contains(&point_key(y)))
        .map(|y| y.to_vec())
        .collect();
    let mut outward: Vec<Vec<f64>> = exterior
        .bridges
        .iter()
        .map(|b| b.start())
        .filter(|x| delta.contains(x) && !ends.contains(&point_key(x)))
        .map(|x| x.to_vec())
        .collect();
    inward.sort_by(|a, b| lex_cmp(a, b));
    inward.dedup();
    outward.sort_by(|a, b| lex_cmp(a, b));
    outward.dedup();
    BoundarySets { inward, outward, exterior, interior }
}

/// Versioned document wrapping a configuration for persistence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigDocument {
    Fk { version: u32, config: FkConfig },
    Rl { version: u32, config: RlConfig },
    Mp { version: u32, config: MpConfig },
}

pub const FORMAT_VERSION: u32 = 1;

impl ConfigDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// Parse and validate; loops and marks are re-checked, and FK documents
    /// are rebuilt so the successor table reflects exact endpoint matches only.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ConfigDocument =
            serde_json::from_str(s).map_err(|e| Error::Input(format!("malformed configuration document: {e}")))?;
        let version = match &doc {
            ConfigDocument::Fk { version, .. } | ConfigDocument::Rl { version, .. } | ConfigDocument::Mp { version, .. } => {
                *version
            }
        };
        if version != FORMAT_VERSION {
            return Err(Error::Input(format!("unsupported format version {version}")));
        }
        match &doc {
            ConfigDocument::Rl { config, .. } => {
                for l in &config.loops {
                    Loop::new(l.path.clone(), l.length, l.beta)?;
                }
                RlConfig::new(config.dim, config.beta, config.steps, config.loops.clone())?;
            }
            ConfigDocument::Mp { config, .. } => {
                for p in &config.points {
                    MarkTriple::new(p.mark.p.clone(), p.mark.u, p.mark.omega.clone())?;
                    if p.x.len() != config.dim {
                        return Err(Error::Input("marked point has the wrong dimension".into()));
                    }
                }
            }
            ConfigDocument::Fk { .. } => {}
        }
        Ok(doc)
    }

    /// FK document whose bridges must link exactly; near-misses are rejected.
    pub fn fk_strict(s: &str) -> Result<FkConfig> {
        match Self::from_json(s)? {
            ConfigDocument::Fk { config, .. } => {
                if !config.is_permutation_wise() && has_near_miss(&config) {
                    return Err(Error::NotPermutationWise(
                        "bridge endpoints match only approximately".into(),
                    ));
                }
                Ok(config)
            }
            _ => Err(Error::Input("expected an FK configuration".into())),
        }
    }
}

fn has_near_miss(g: &FkConfig) -> bool {
    let scale = 1e-9;
    g.bridges.iter().any(|b| {
        g.bridges.iter().any(|c| {
            let d = crate::geometry::dist2(b.end(), c.start()).sqrt();
            d > 0.0 && d < scale
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::trajectories::sample_bridge;

    fn bridge(x: &[f64], y: &[f64]) -> Bridge {
        let mut rng = stream(9, 0);
        sample_bridge(x, y, 0.5, 8, &mut rng).unwrap()
    }

    #[test]
    fn successor_examples() {
        let g = FkConfig::new(1, 0.5, 8, vec![bridge(&[0.1], &[0.1])]).unwrap();
        assert_eq!(g.successor(0).unwrap(), 0);
        let g = FkConfig::new(1, 0.5, 8, vec![bridge(&[0.1], &[0.3]), bridge(&[0.3], &[0.1])]).unwrap();
        assert_eq!(g.successor(0).unwrap(), 1);
        assert_eq!(g.successor(1).unwrap(), 0);
        let bad = FkConfig::new(1, 0.5, 8, vec![bridge(&[0.1], &[0.3])]).unwrap();
        assert!(!bad.is_permutation_wise());
        assert!(bad.successor(0).is_err());
        assert!(FkConfig::empty(1, 0.5, 8).unwrap().is_permutation_wise());
    }

    #[test]
    fn cut_and_assemble() {
        let mut rng = stream(1, 0);
        let l = Loop::sample(&[0.0, 0.0], 3, 0.5, 8, &mut rng).unwrap();
        let rho = RlConfig::new(2, 0.5, 8, vec![l]).unwrap();
        let g = cut_rl_to_fk(&rho);
        assert_eq!(g.len(), 3);
        assert!(g.is_permutation_wise());
        assert_eq!(g.cycle_decomposition().unwrap().len(), 1);
        let back = assemble_fk_to_rl(&g).unwrap();
        assert_eq!(back.canonical(), rho.canonical());
    }

    #[test]
    fn decode_selects_lexicographic_index() {
        let omega = Path::constant(&[0.0], TimeGrid::new(1.0, 4).unwrap());
        let mk = |x: f64, u: f64| MarkedPoint { x: vec![x], mark: MarkTriple { p: vec![0], u, omega: omega.clone() } };
        let g = MpConfig { dim: 1, beta: 1.0, r: 1.0, points: vec![mk(0.1, 0.5), mk(-0.2, 0.0), mk(0.3, 1.0)] };
        // Cell of 0.1 is [−0.4, 0.6): all three points, sorted −0.2, 0.1, 0.3.
        let cell = g.target_cell(0);
        assert_eq!(cell.len(), 3);
        assert_eq!(g.target(0).unwrap().0, 0);
        assert_eq!(g.target(1).unwrap().0, 1);
        assert_eq!(g.target(2).unwrap().0, 2);
        assert_eq!(select_index(3, 0.5), 2);
        assert_eq!(select_index(3, 0.0), 1);
        assert_eq!(select_index(3, 1.0), 3);
        assert_eq!(select_index(3, 1.0 / 3.0), 1);
    }

    #[test]
    fn encode_upper_face_convention() {
        // y − x = 0.5 r exactly lands in the next cell.
        assert_eq!(cell_offset(&[0.0], &[0.5], 1.0), vec![1]);
        assert_eq!(cell_offset(&[0.0], &[-0.5], 1.0), vec![0]);
        let g = FkConfig::new(1, 0.5, 8, vec![bridge(&[0.0], &[0.5]), bridge(&[0.5], &[0.0])]).unwrap();
        let mp = encode_fk_to_mp(&g, 1.0).unwrap();
        assert_eq!(mp.points[0].mark.p, vec![1]);
        assert_eq!(mp.points[1].mark.p, vec![0]);
        let back = decode_mp_to_fk(&mp).unwrap();
        assert_eq!(back.bridges()[0].end(), &[0.5]);
        assert_eq!(back.bridges()[1].end(), &[0.0]);
    }

    #[test]
    fn self_bridge_encoding() {
        let g = FkConfig::new(1, 0.5, 8, vec![bridge(&[0.2], &[0.2])]).unwrap();
        let mp = encode_fk_to_mp(&g, 1.0).unwrap();
        assert_eq!(mp.points[0].mark.p, vec![0]);
        assert_eq!(mp.points[0].mark.u, 0.5);
    }

    #[test]
    fn dlr_split_examples() {
        let d = BoxRegion::cube(1, -0.25, 0.25);
        // Bridge from far away ending at 0.1 and nothing starting in Δ.
        let mut nodes: Vec<f64> = (0..=8).map(|k| 2.0 - k as f64 * (1.9 / 8.0)).collect();
        nodes[8] = 0.1;
        let b = Path::from_nodes(1, TimeGrid::new(0.5, 8).unwrap(), nodes).unwrap();
        let g = FkConfig::new(1, 0.5, 8, vec![b]).unwrap();
        let s = dlr_split(&g, &d);
        assert_eq!(s.inward, vec![vec![0.1]]);
        assert!(s.outward.is_empty());
        let inner = FkConfig::new(1, 0.5, 8, vec![Path::constant(&[0.0], TimeGrid::new(0.5, 8).unwrap())]).unwrap();
        let s = dlr_split(&inner, &d);
        assert!(s.exterior.is_empty() && s.inward.is_empty() && s.outward.is_empty());
    }

    #[test]
    fn near_miss_rejected() {
        let a = bridge(&[0.1], &[0.3]);
        let b = bridge(&[0.3 + 1e-13], &[0.1]);
        let g = FkConfig::new(1, 0.5, 8, vec![a, b]).unwrap();
        let doc = ConfigDocument::Fk { version: FORMAT_VERSION, config: g }.to_json();
        assert!(ConfigDocument::fk_strict(&doc).is_err());
    }

    #[test]
    fn document_roundtrip() {
        let mut rng = stream(2, 0);
        let l = Loop::sample(&[0.1], 2, 0.5, 8, &mut rng).unwrap();
        let g = cut_rl_to_fk(&RlConfig::new(1, 0.5, 8, vec![l]).unwrap());
        let doc = ConfigDocument::Fk { version: FORMAT_VERSION, config: g.clone() };
        let back = ConfigDocument::fk_strict(&doc.to_json()).unwrap();
        assert_eq!(back, g);
        assert!(back.is_permutation_wise());
    }
}
