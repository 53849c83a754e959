//! Interaction energies of finite point configurations.
//!
//! Point sets are passed as flat coordinate slices together with the
//! dimension: `pts[i*d..(i+1)*d]` is the `i`-th point.

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, BoxRegion, Window};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Built-in potential shapes. `Custom` marks a potential registered in code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    /// `+∞` for `|x| < radius`, else 0.
    HardCore { radius: f64 },
    /// `strength · exp(1 − 1/(1 − (|x|/range)²))` for `|x| < range`, else 0.
    Bump { strength: f64, range: f64 },
    /// `value` for `|x| ≤ range`, else 0.
    Indicator { value: f64, range: f64 },
    Zero,
    Custom { name: String },
}

type PhiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A symmetric pair potential of finite range.
#[derive(Clone)]
pub struct PairPotential {
    pub kind: PotentialKind,
    pub range: f64,
    phi: Option<PhiFn>,
}

impl fmt::Debug for PairPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairPotential").field("kind", &self.kind).field("range", &self.range).finish()
    }
}

impl PairPotential {
    pub fn from_kind(kind: PotentialKind) -> Result<Self> {
        let range = match &kind {
            PotentialKind::HardCore { radius } => {
                positive(*radius, "hard-core radius")?;
                *radius
            }
            PotentialKind::Bump { strength, range } => {
                if !(strength.is_finite() && *strength >= 0.0) {
                    return Err(Error::Config("bump strength must be finite and nonnegative".into()));
                }
                positive(*range, "bump range")?;
                *range
            }
            PotentialKind::Indicator { value, range } => {
                if value.is_nan() {
                    return Err(Error::Config("indicator value is NaN".into()));
                }
                positive(*range, "indicator range")?;
                *range
            }
            PotentialKind::Zero => 0.0,
            PotentialKind::Custom { .. } => {
                return Err(Error::Config("custom potentials must be registered with PairPotential::custom".into()))
            }
        };
        Ok(Self { kind, range, phi: None })
    }

    pub fn hard_core(radius: f64) -> Result<Self> {
        Self::from_kind(PotentialKind::HardCore { radius })
    }

    pub fn bump(strength: f64, range: f64) -> Result<Self> {
        Self::from_kind(PotentialKind::Bump { strength, range })
    }

    pub fn indicator(value: f64, range: f64) -> Result<Self> {
        Self::from_kind(PotentialKind::Indicator { value, range })
    }

    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero, range: 0.0, phi: None }
    }

    /// A potential given by a closure; it must vanish beyond `range`.
    pub fn custom(name: &str, range: f64, phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        positive(range, "custom range")?;
        Ok(Self {
            kind: PotentialKind::Custom { name: name.to_string() },
            range,
            phi: Some(Arc::new(phi)),
        })
    }

    /// `Φ(x)` for a displacement `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.eval_r2(x, r2)
    }

    #[inline]
    fn eval_r2(&self, x: &[f64], r2: f64) -> f64 {
        match &self.kind {
            PotentialKind::HardCore { radius } => {
                if r2 < radius * radius {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            PotentialKind::Bump { strength, range } => {
                let q = r2 / (range * range);
                if q < 1.0 {
                    strength * (1.0 - 1.0 / (1.0 - q)).exp()
                } else {
                    0.0
                }
            }
            PotentialKind::Indicator { value, range } => {
                if r2 <= range * range {
                    *value
                } else {
                    0.0
                }
            }
            PotentialKind::Zero => 0.0,
            PotentialKind::Custom { .. } => {
                if r2 > self.range * self.range {
                    0.0
                } else {
                    (self.phi.as_ref().expect("custom potential without closure"))(x)
                }
            }
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match &self.kind {
            PotentialKind::HardCore { .. } | PotentialKind::Bump { .. } | PotentialKind::Zero => true,
            PotentialKind::Indicator { value, .. } => *value >= 0.0,
            PotentialKind::Custom { .. } => false,
        }
    }

    /// `Φ` between points `i` and `j` of a flat set.
    #[inline]
    fn between(&self, a: &[f64], b: &[f64], buf: &mut [f64]) -> f64 {
        let mut r2 = 0.0;
        for i in 0..a.len() {
            buf[i] = a[i] - b[i];
            r2 += buf[i] * buf[i];
        }
        if r2 > self.range * self.range {
            return 0.0;
        }
        self.eval_r2(buf, r2)
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive and finite, got {v}")))
    }
}

/// Superstability constants `U(ξ) ≥ −A·#ξ + B·Σ_z n_z²` with cells of side `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperstabilityConstants {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

impl SuperstabilityConstants {
    pub fn new(a: f64, b: f64, r: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("A must be finite and nonnegative, got {a}")));
        }
        positive(b, "B")?;
        positive(r, "r")?;
        Ok(Self { a, b, r })
    }
}

/// `U(ξ) = ½ Σ_{x≠y} Φ(x − y)`; stops at the first infinite pair.
pub fn pair_energy(pts: &[f64], dim: usize, pot: &PairPotential) -> f64 {
    if matches!(pot.kind, PotentialKind::Zero) {
        return 0.0;
    }
    let n = pts.len() / dim;
    let mut buf = vec![0.0; dim];
    let mut e = 0.0;
    for i in 0..n {
        let a = &pts[i * dim..(i + 1) * dim];
        for j in i + 1..n {
            let v = pot.between(a, &pts[j * dim..(j + 1) * dim], &mut buf);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            e += v;
        }
    }
    e
}

/// `U_{Δ,loc}(ξ)`: pairs inside `Δ` once, plus pairs between `Δ` and `(Δ + B_R) ∖ Δ`.
pub fn local_energy(pts: &[f64], dim: usize, delta: &BoxRegion, pot: &PairPotential) -> f64 {
    let n = pts.len() / dim;
    let mut inside = Vec::new();
    let mut ring = Vec::new();
    for i in 0..n {
        let x = &pts[i * dim..(i + 1) * dim];
        if delta.contains(x) {
            inside.push(i);
        } else if delta.within_range(x, pot.range) {
            ring.push(i);
        }
    }
    let p = |i: usize| &pts[i * dim..(i + 1) * dim];
    let mut buf = vec![0.0; dim];
    let mut e = 0.0;
    for (k, &i) in inside.iter().enumerate() {
        for &j in inside[k + 1..].iter().chain(ring.iter()) {
            let v = pot.between(p(i), p(j), &mut buf);
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            e += v;
        }
    }
    e
}

/// Occupancy of the half-open cells `z + [−r/2, r/2)^d`, keyed by `z/r`.
pub fn cell_counts(pts: &[f64], dim: usize, r: f64) -> BTreeMap<Vec<i64>, usize> {
    let mut out = BTreeMap::new();
    for x in pts.chunks_exact(dim) {
        *out.entry(cell_index(x, r)).or_insert(0) += 1;
    }
    out
}

/// Lattice index `k` with `x ∈ r·k + [−r/2, r/2)^d`.
pub fn cell_index(x: &[f64], r: f64) -> Vec<i64> {
    x.iter().map(|v| (v / r + 0.5).floor() as i64).collect()
}

/// Custom energy functional over whole configurations.
pub type EnergyFn = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Evaluator {
    Pair(PairPotential),
    Custom { name: String, energy: EnergyFn, nonnegative: bool },
}

/// An interaction `U` with its superstability certificate (if any).
#[derive(Clone)]
pub struct EnergyModel {
    pub evaluator: Evaluator,
    pub constants: Option<SuperstabilityConstants>,
}

impl fmt::Debug for EnergyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.evaluator {
            Evaluator::Pair(p) => format!("{:?}", p.kind),
            Evaluator::Custom { name, .. } => name.clone(),
        };
        f.debug_struct("EnergyModel").field("evaluator", &name).field("constants", &self.constants).finish()
    }
}

impl EnergyModel {
    pub fn pairwise(pot: PairPotential, constants: Option<SuperstabilityConstants>) -> Self {
        Self { evaluator: Evaluator::Pair(pot), constants }
    }

    pub fn custom(
        name: &str,
        energy: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static,
        nonnegative: bool,
        constants: Option<SuperstabilityConstants>,
    ) -> Result<Self> {
        let f: EnergyFn = Arc::new(energy);
        let e0 = f(&[], 1);
        if !e0.is_finite() {
            return Err(Error::Config("custom model must have finite energy on the empty set".into()));
        }
        Ok(Self {
            evaluator: Evaluator::Custom { name: name.to_string(), energy: f, nonnegative },
            constants,
        })
    }

    /// The free gas. It has no superstability certificate.
    pub fn zero() -> Self {
        Self::pairwise(PairPotential::zero(), None)
    }

    /// Hard core of radius `a` with the packing certificate for cells of side `r`.
    pub fn hard_core(a: f64, r: f64, dim: usize) -> Result<Self> {
        let pot = PairPotential::hard_core(a)?;
        let c = hard_core_certificate(a, r, dim)?;
        Ok(Self::pairwise(pot, Some(c)))
    }

    /// Smooth bump with the same-cell certificate for cells of side `r`.
    pub fn bump(strength: f64, range: f64, r: f64, dim: usize) -> Result<Self> {
        let pot = PairPotential::bump(strength, range)?;
        let c = same_cell_certificate(&pot, r, dim)?;
        Ok(Self::pairwise(pot, Some(c)))
    }

    pub fn pair(&self) -> Option<&PairPotential> {
        match &self.evaluator {
            Evaluator::Pair(p) => Some(p),
            Evaluator::Custom { .. } => None,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match &self.evaluator {
            Evaluator::Pair(p) => p.is_nonnegative(),
            Evaluator::Custom { nonnegative, .. } => *nonnegative,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self.pair().map(|p| &p.kind), Some(PotentialKind::Zero))
    }

    /// `U(ξ)`. NaN from a custom evaluator is reported as an error.
    pub fn energy(&self, pts: &[f64], dim: usize) -> Result<f64> {
        let e = self.energy_unchecked(pts, dim);
        if e.is_nan() {
            return Err(Error::NaN("interaction energy".into()));
        }
        Ok(e)
    }

    pub(crate) fn energy_unchecked(&self, pts: &[f64], dim: usize) -> f64 {
        match &self.evaluator {
            Evaluator::Pair(p) => pair_energy(pts, dim, p),
            Evaluator::Custom { energy, .. } => energy(pts, dim),
        }
    }

    pub fn empty_energy(&self) -> f64 {
        self.energy_unchecked(&[], 1)
    }
}

/// `U^dir(ξ)`: `U(ξ)` if every point lies in `Λ_L`, else `+∞`.
pub fn dirichlet_energy(pts: &[f64], dim: usize, side: f64, model: &EnergyModel) -> Result<f64> {
    let w = Window::new(side);
    if pts.chunks_exact(dim).any(|x| !w.contains(x)) {
        return Ok(f64::INFINITY);
    }
    model.energy(pts, dim)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`; `+∞` for forbidden configurations.
    pub margin: f64,
    pub passed: bool,
}

/// Evaluate both sides of the superstability inequality on `ξ`.
pub fn superstability_audit(
    model: &EnergyModel,
    c: &SuperstabilityConstants,
    pts: &[f64],
    dim: usize,
    tolerance: f64,
) -> Result<AuditResult> {
    let lhs = model.energy(pts, dim)?;
    let n = (pts.len() / dim) as f64;
    let sq: f64 = cell_counts(pts, dim, c.r).values().map(|&k| (k * k) as f64).sum();
    let rhs = -c.a * n + c.b * sq;
    let margin = if lhs == f64::INFINITY { f64::INFINITY } else { lhs - rhs };
    Ok(AuditResult { lhs, rhs, margin, passed: margin >= -tolerance })
}

/// Largest number of points with pairwise distance `≥ a` in one cell of side `r`.
///
/// Exact in one dimension; a ball-packing volume bound otherwise.
pub fn hard_core_packing(a: f64, r: f64, dim: usize) -> usize {
    if dim == 1 {
        (r / a).ceil() as usize
    } else {
        let v = ((r + a) / a).powi(dim as i32) * 2f64.powi(dim as i32) / unit_ball_volume(dim);
        v.floor() as usize
    }
}

/// With at most `K` points per cell, `0 ≥ −K·n_z + n_z²` cell by cell, so
/// `A = K`, `B = 1` certify a hard core.
pub fn hard_core_certificate(a: f64, r: f64, dim: usize) -> Result<SuperstabilityConstants> {
    positive(a, "hard-core radius")?;
    positive(r, "cell side")?;
    let k = hard_core_packing(a, r, dim) as f64;
    SuperstabilityConstants::new(k, 1.0, r)
}

/// For a nonnegative, radially nonincreasing `Φ` with `Φ ≥ c > 0` on the
/// cell diameter, same-cell pairs give `U ≥ (c/2)Σ n_z² − (c/2)#ξ`.
pub fn same_cell_certificate(pot: &PairPotential, r: f64, dim: usize) -> Result<SuperstabilityConstants> {
    positive(r, "cell side")?;
    let diam = r * (dim as f64).sqrt();
    let c = match &pot.kind {
        PotentialKind::Bump { .. } | PotentialKind::Indicator { .. } => {
            let mut x = vec![0.0; dim];
            x[0] = diam;
            pot.eval(&x)
        }
        _ => return Err(Error::Config("same-cell certificate needs a bump or indicator potential".into())),
    };
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!(
            "potential vanishes on the cell diameter {diam}; choose a larger range or smaller r"
        )));
    }
    SuperstabilityConstants::new(c / 2.0, c / 2.0, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_energy_examples() {
        let ind = PairPotential::indicator(1.0, 0.5).unwrap();
        assert_eq!(pair_energy(&[], 1, &ind), 0.0);
        assert_eq!(pair_energy(&[0.0, 0.3], 1, &ind), 1.0);
        let hc = PairPotential::hard_core(0.1).unwrap();
        assert_eq!(pair_energy(&[0.0, 0.05, 3.0], 1, &hc), f64::INFINITY);
        assert_eq!(pair_energy(&[0.0, 0.1], 1, &hc), 0.0);
    }

    #[test]
    fn dirichlet_window() {
        let m = EnergyModel::zero();
        assert_eq!(dirichlet_energy(&[0.2, -0.9], 1, 2.0, &m).unwrap(), 0.0);
        assert_eq!(dirichlet_energy(&[0.2, 1.5], 1, 2.0, &m).unwrap(), f64::INFINITY);
        assert_eq!(dirichlet_energy(&[1.0], 1, 2.0, &m).unwrap(), f64::INFINITY);
        assert_eq!(dirichlet_energy(&[-1.0], 1, 2.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn local_energy_example() {
        let ind = PairPotential::indicator(1.0, 0.5).unwrap();
        let d = BoxRegion::unit(1);
        assert_eq!(local_energy(&[0.0, 0.3, 1.2], 1, &d, &ind), 1.0);
        assert_eq!(local_energy(&[3.0, 3.2], 1, &d, &ind), 0.0);
        assert_eq!(local_energy(&[0.9, 1.3], 1, &d, &ind), 1.0);
    }

    #[test]
    fn cells() {
        let c = cell_counts(&[0.2, 0.4, 1.1], 1, 1.0);
        assert_eq!(c.get(&vec![0]), Some(&2));
        assert_eq!(c.get(&vec![1]), Some(&1));
        assert!(cell_counts(&[], 1, 1.0).is_empty());
        // Upper face belongs to the next cell.
        assert_eq!(cell_index(&[0.5], 1.0), vec![1]);
        assert_eq!(cell_index(&[-0.5], 1.0), vec![0]);
    }

    #[test]
    fn bump_certificate_constants() {
        let m = EnergyModel::bump(1.0, 1.5, 1.0, 1).unwrap();
        let c = m.constants.unwrap();
        let phi = (1.0f64 - 1.0 / (1.0 - 1.0 / 2.25)).exp();
        assert!((c.a - phi / 2.0).abs() < 1e-15 && c.a == c.b);
        assert!(EnergyModel::bump(1.0, 0.9, 1.0, 1).is_err());
    }

    #[test]
    fn empty_audit_margin() {
        let m = EnergyModel::hard_core(0.3, 1.0, 1).unwrap();
        let r = superstability_audit(&m, &m.constants.unwrap(), &[], 1, 0.0).unwrap();
        assert_eq!(r.margin, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn packing_bound_brute_force() {
        // Greedy left packing is optimal on a half-open interval.
        for (a, r) in [(0.3, 1.0), (0.25, 1.0), (0.4, 1.2), (1.0, 1.0)] {
            let mut n = 0;
            let mut x = -r / 2.0;
            while x < r / 2.0 {
                n += 1;
                x += a;
            }
            assert_eq!(hard_core_packing(a, r, 1), n, "a={a} r={r}");
        }
    }

    #[test]
    fn shell_model_fails_audit() {
        // Φ = −1 on the shell 0.2 ≤ |x| ≤ 0.4: a crowded cell makes U very negative.
        let pot = PairPotential::custom("shell", 0.4, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r >= 0.2 {
                -1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = EnergyModel::pairwise(pot, None);
        let c = SuperstabilityConstants::new(1.0, 0.1, 1.0).unwrap();
        // Search alternating clusters at 0 and 0.3 for a violation.
        let mut found = false;
        for k in 1..60 {
            let pts: Vec<f64> = (0..2 * k).map(|i| if i % 2 == 0 { 0.0 } else { 0.3 }).collect();
            if !superstability_audit(&m, &c, &pts, 1, 1e-9).unwrap().passed {
                found = true;
                break;
            }
        }
        assert!(found);
    }
}
