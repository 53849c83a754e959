//! Random generation of finite-volume configurations.

pub mod combinatorics;
pub mod dlr;
pub mod exact;
pub mod ideal;
pub mod mh;
pub mod oracle;

pub use combinatorics::{combinatorics_checks, CombinatoricsReport};
pub use dlr::{dlr_resample, DlrMode, DlrSpec};
pub use exact::ExactSampler;
pub use ideal::{sample_ideal_rl, IdealSpec};
pub use mh::{mh_rl_chain, ChainState, MhSettings};
pub use oracle::{enumeration_oracle, mp_oracle, OracleReport, OracleSpec, RouteResult};

use crate::error::{Error, Result};
use crate::geometry::BoxRegion;
use crate::representations::FkConfig;
use crate::trajectories::{sample_bridge, Bridge};
use rand::Rng;

/// A bridge conditioned to keep every node in `Δ`, by rejection.
#[derive(Clone, Debug)]
pub struct ConfinedBridge {
    pub bridge: Bridge,
    pub attempts: usize,
}

impl ConfinedBridge {
    pub fn acceptance_rate(&self) -> f64 {
        1.0 / self.attempts as f64
    }
}

pub fn confined_bridge<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    t: f64,
    delta: &BoxRegion,
    steps: usize,
    rng: &mut R,
    retry_cap: usize,
) -> Result<ConfinedBridge> {
    if !delta.contains(x) || !delta.contains(y) {
        return Err(Error::Input("confined bridge endpoints must lie in the compact".into()));
    }
    for attempt in 1..=retry_cap {
        let b = sample_bridge(x, y, t, steps, rng)?;
        if b.all_nodes_in(|z| delta.contains(z)) {
            return Ok(ConfinedBridge { bridge: b, attempts: attempt });
        }
    }
    Err(Error::RetryCap {
        cap: retry_cap,
        hint: "bridge rarely stays in the compact; enlarge it or reduce beta".into(),
    })
}

/// Uniform shift vector in `Λ_L`.
pub fn uniform_shift<R: Rng + ?Sized>(dim: usize, side: f64, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-0.5 * side..0.5 * side)).collect()
}

/// `γ + v` with `v` uniform in `Λ_L`; returns the shift too.
pub fn empirical_shift<R: Rng + ?Sized>(g: &FkConfig, side: f64, rng: &mut R) -> (FkConfig, Vec<f64>) {
    let v = uniform_shift(g.dim(), side, rng);
    (g.translated(&v), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn confined_bridge_rates() {
        let mut rng = stream(1, 0);
        let big = BoxRegion::cube(1, -100.0, 100.0);
        let b = confined_bridge(&[0.0], &[0.0], 0.5, &big, 16, &mut rng, 10).unwrap();
        assert_eq!(b.attempts, 1);
        let small = BoxRegion::cube(1, -0.5, 0.5);
        let rate = |x: f64, rng: &mut crate::rng::Stream| {
            let mut ok = 0;
            let n = 4000;
            for _ in 0..n {
                let b = sample_bridge(&[x], &[x], 0.2, 16, rng).unwrap();
                if b.all_nodes_in(|z| small.contains(z)) {
                    ok += 1;
                }
            }
            ok as f64 / n as f64
        };
        let centre = rate(0.0, &mut rng);
        let edge = rate(0.45, &mut rng);
        let se = (centre * (1.0 - centre) / 4000.0 + edge * (1.0 - edge) / 4000.0).sqrt();
        assert!(centre - edge > 3.0 * se);
        assert!(confined_bridge(&[0.0], &[0.0], 50.0, &small, 16, &mut rng, 5).is_err());
    }

    #[test]
    fn shift_and_back() {
        let mut rng = stream(2, 0);
        let b = sample_bridge(&[0.1], &[0.1], 0.5, 8, &mut rng).unwrap();
        let g = FkConfig::new(1, 0.5, 8, vec![b]).unwrap();
        let (s, v) = empirical_shift(&g, 2.0, &mut rng);
        let back = s.translated(&v.iter().map(|x| -x).collect::<Vec<_>>());
        for (a, b) in back.bridges()[0].nodes.iter().zip(&g.bridges()[0].nodes) {
            assert!((a - b).abs() < 1e-15);
        }
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| uniform_shift(1, 2.0, &mut rng)[0]).sum::<f64>() / n as f64;
        // Uniform on [−1, 1) has variance 1/3.
        assert!(mean.abs() < 3.0 * (1.0 / 3.0 / n as f64).sqrt());
    }
}
