//! Small geometric helpers shared by the trajectory and configuration code.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Closed axis-aligned box `[lo_1, hi_1] x ... x [lo_d, hi_d]`.
///
/// Used for the compacts of the projections and the DLR kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must share a dimension");
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a <= b),
            "box lower corner must not exceed the upper corner"
        );
        Self { lo, hi }
    }

    /// The cube `[a, b]^d`.
    pub fn cube(dim: usize, a: f64, b: f64) -> Self {
        Self::new(vec![a; dim], vec![b; dim])
    }

    /// The unit cube `[0, 1]^d` used by the example observables.
    pub fn unit(dim: usize) -> Self {
        Self::cube(dim, 0.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    /// Euclidean distance from `x` to the box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| {
                let e = if v < a {
                    a - v
                } else if v > b {
                    v - b
                } else {
                    0.0
                };
                e * e
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Membership in the Minkowski sum with the closed ball of radius `r`.
    pub fn within_range(&self, x: &[f64], r: f64) -> bool {
        self.distance(x) <= r
    }

    /// Whether the closed segment `[a, b]` meets the box (slab clipping).
    pub fn intersects_segment(&self, a: &[f64], b: &[f64]) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for i in 0..a.len() {
            let d = b[i] - a[i];
            if d == 0.0 {
                if a[i] < self.lo[i] || a[i] > self.hi[i] {
                    return false;
                }
                continue;
            }
            let mut ta = (self.lo[i] - a[i]) / d;
            let mut tb = (self.hi[i] - a[i]) / d;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        Self {
            lo: self.lo.iter().zip(v).map(|(a, s)| a + s).collect(),
            hi: self.hi.iter().zip(v).map(|(a, s)| a + s).collect(),
        }
    }
}

/// The half-open window `Λ_L = [-L/2, L/2)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub side: f64,
}

impl Window {
    pub fn new(side: f64) -> Self {
        Self { side }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let h = 0.5 * self.side;
        x.iter().all(|v| *v >= -h && *v < h)
    }

    pub fn volume(&self, dim: usize) -> f64 {
        self.side.powi(dim as i32)
    }

    pub fn half(&self) -> f64 {
        0.5 * self.side
    }
}

/// Lexicographic order on coordinates, left to right, exact float comparison.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) => continue,
            Some(o) => return o,
            None => return x.is_nan().cmp(&y.is_nan()),
        }
    }
    a.len().cmp(&b.len())
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Squared distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_dist2(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let t = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for i in 0..p.len() {
        let q = a[i] + t * (b[i] - a[i]);
        d2 += (p[i] - q) * (p[i] - q);
    }
    d2
}

/// Volume of the unit ball in dimension `d` (`c_0 = 1`, `c_1 = 2`, `c_2 = π`, ...).
pub fn unit_ball_volume(d: usize) -> f64 {
    let mut c = [1.0, 2.0];
    if d < 2 {
        return c[d];
    }
    let mut k = 2;
    let mut out = 0.0;
    while k <= d {
        out = c[k % 2] * 2.0 * std::f64::consts::PI / k as f64;
        c[k % 2] = out;
        k += 1;
    }
    out
}

/// Bit pattern of a point, used as an exact hash key.
pub fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| canonical_bits(*v)).collect()
}

fn canonical_bits(v: f64) -> u64 {
    // -0.0 and 0.0 compare equal, so they must hash equal too.
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}
