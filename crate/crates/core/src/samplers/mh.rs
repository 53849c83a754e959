//! Metropolis–Hastings chain for the interacting rooted-loop model.
//!
//! The target has density `exp(βμΣj − H_rl)` against the Poisson process of
//! rooted loops with intensity `dx Σ_j (1/j) W^{βj}_{x,x}`, restricted to
//! lengths `j ≤ j_max` and optionally to at most `max_bridges` bridges.
//!
//! Moves: birth/death of whole loops, Gaussian root translation, whole-shape
//! and sub-segment shape redraws, and a split/merge move that swaps the
//! targets of two bridges of the cut configuration and re-roots the result.

use super::ideal::effective_j_max;
use crate::error::{Error, Result};
use crate::hamiltonians::{log_density_rl, ModelParams, Quadrature};
use crate::interactions::EnergyModel;
use crate::representations::{assemble_fk_to_rl, cut_rl_to_fk, FkConfig, RlConfig};
use crate::rng::{normal, Stream, StreamPosition};
use crate::trajectories::{fill_bridge, sample_bridge, unnormalized_mass, Loop};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MOVES: [&str; 6] = ["birth", "death", "translate", "reshape", "segment", "swap"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhSettings {
    pub steps: usize,
    pub j_max: Option<usize>,
    pub max_bridges: Option<usize>,
    /// Relative frequencies of birth/death, translation, reshape, segment and swap.
    pub weights: [f64; 5],
    /// Standard deviation of the root translation.
    pub step_size: f64,
    /// Longest redrawn segment, in grid steps.
    pub segment_steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Recompute the log-density from scratch every this many steps.
    pub check_every: usize,
    pub quad: Quadrature,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self {
            steps: crate::trajectories::DEFAULT_STEPS,
            j_max: None,
            max_bridges: None,
            weights: [0.4, 0.15, 0.15, 0.15, 0.15],
            step_size: 0.1,
            segment_steps: 16,
            burn_in: 10_000,
            thin: 10,
            check_every: 1000,
            quad: Quadrature::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounter {
    pub proposed: u64,
    pub accepted: u64,
}

/// Serializable chain state; `rng` is where the stream stood after the last step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub config: RlConfig,
    pub log_density: f64,
    pub counters: [MoveCounter; 6],
    pub rng: StreamPosition,
    pub step: u64,
    pub max_drift: f64,
}

impl ChainState {
    pub fn new(config: RlConfig, model: &EnergyModel, params: &ModelParams, settings: &MhSettings, rng: &Stream) -> Result<Self> {
        let ld = target_log_density(&config, model, params, settings)?;
        if !ld.is_finite() {
            return Err(Error::Input("initial chain state has zero density".into()));
        }
        Ok(Self {
            config,
            log_density: ld,
            counters: [MoveCounter::default(); 6],
            rng: StreamPosition::of(rng),
            step: 0,
            max_drift: 0.0,
        })
    }

    pub fn empty(model: &EnergyModel, params: &ModelParams, settings: &MhSettings, rng: &Stream) -> Result<Self> {
        Self::new(RlConfig::empty(params.dim, params.beta, settings.steps), model, params, settings, rng)
    }

    pub fn acceptance(&self, mv: usize) -> f64 {
        let c = self.counters[mv];
        if c.proposed == 0 {
            0.0
        } else {
            c.accepted as f64 / c.proposed as f64
        }
    }
}

/// Log-density against the loop reference, `−∞` outside the truncated state space.
pub fn target_log_density(rho: &RlConfig, model: &EnergyModel, params: &ModelParams, s: &MhSettings) -> Result<f64> {
    let j_max = effective_j_max(params, s.j_max)?;
    if rho.loops.iter().any(|l| l.length > j_max) {
        return Ok(f64::NEG_INFINITY);
    }
    if let Some(n) = s.max_bridges {
        if rho.total_length() > n {
            return Ok(f64::NEG_INFINITY);
        }
    }
    log_density_rl(rho, model, params, s.quad)
}

/// Length law of the birth proposal, `q(j) ∝ e^{βμj} j^{−d/2−1}`.
pub fn birth_length_weights(params: &ModelParams, j_max: usize) -> Vec<f64> {
    let d = params.dim as f64;
    let w: Vec<f64> = (1..=j_max)
        .map(|j| (params.beta * params.mu * j as f64).exp() * (j as f64).powf(-d / 2.0 - 1.0))
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Density of the birth proposal against the loop reference:
/// `q(j) · j / (L^d (2πβj)^{−d/2})`.
pub fn birth_proposal_density(params: &ModelParams, q: &[f64], j: usize) -> f64 {
    let d = params.dim as f64;
    q[j - 1] * j as f64 / (params.volume() * (2.0 * PI * params.beta * j as f64).powf(-d / 2.0))
}

/// `log` acceptance of adding loop `ℓ` to `n` loops (death picks uniformly).
pub fn birth_log_acceptance(log_ratio: f64, n: usize, g: f64) -> f64 {
    (log_ratio - ((n + 1) as f64 * g).ln()).min(0.0)
}

/// `log` acceptance of removing one of `n` loops.
pub fn death_log_acceptance(log_ratio: f64, n: usize, g: f64) -> f64 {
    (log_ratio + (n as f64 * g).ln()).min(0.0)
}

fn accept(log_a: f64, rng: &mut Stream) -> bool {
    log_a >= 0.0 || rng.random::<f64>() < log_a.exp()
}

fn draw_index(w: &[f64], rng: &mut Stream) -> usize {
    let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
    for (i, x) in w.iter().enumerate() {
        if u < *x {
            return i;
        }
        u -= x;
    }
    w.len() - 1
}

/// Advance the chain by `n_steps` single-move steps.
pub fn mh_rl_chain(
    mut state: ChainState,
    model: &EnergyModel,
    params: &ModelParams,
    settings: &MhSettings,
    n_steps: usize,
    rng: &mut Stream,
) -> Result<ChainState> {
    let j_max = effective_j_max(params, settings.j_max)?;
    let q = birth_length_weights(params, j_max);
    let h = params.side / 2.0;
    let m = settings.steps;
    for _ in 0..n_steps {
        let kind = draw_index(&settings.weights, rng);
        let n = state.config.loops.len();
        let cur = state.log_density;
        let (mv, proposal, log_extra): (usize, Option<RlConfig>, f64) = match kind {
            0 => {
                if rng.random::<bool>() {
                    let j = draw_index(&q, rng) + 1;
                    let x: Vec<f64> = (0..params.dim).map(|_| rng.random_range(-h..h)).collect();
                    let l = Loop::sample(&x, j, params.beta, m, rng)?;
                    let g = birth_proposal_density(params, &q, j);
                    let mut c = state.config.clone();
                    c.loops.push(l);
                    (0, Some(c), -((n + 1) as f64 * g).ln())
                } else if n == 0 {
                    (1, None, 0.0)
                } else {
                    let i = rng.random_range(0..n);
                    let g = birth_proposal_density(params, &q, state.config.loops[i].length);
                    let mut c = state.config.clone();
                    c.loops.swap_remove(i);
                    (1, Some(c), (n as f64 * g).ln())
                }
            }
            1 => {
                if n == 0 {
                    (2, None, 0.0)
                } else {
                    let i = rng.random_range(0..n);
                    let v: Vec<f64> = (0..params.dim).map(|_| settings.step_size * normal(rng)).collect();
                    let mut c = state.config.clone();
                    c.loops[i].path = c.loops[i].path.translated(&v);
                    (2, Some(c), 0.0)
                }
            }
            2 => {
                if n == 0 {
                    (3, None, 0.0)
                } else {
                    let i = rng.random_range(0..n);
                    let l = &state.config.loops[i];
                    let nl = Loop::sample(l.root(), l.length, params.beta, m, rng)?;
                    let mut c = state.config.clone();
                    c.loops[i] = nl;
                    (3, Some(c), 0.0)
                }
            }
            3 => {
                if n == 0 {
                    (4, None, 0.0)
                } else {
                    let i = rng.random_range(0..n);
                    let mut c = state.config.clone();
                    c.loops[i] = resample_segment(&state.config.loops[i], settings.segment_steps, rng);
                    (4, Some(c), 0.0)
                }
            }
            _ => match swap_proposal(&state.config, params, rng)? {
                Some((c, log_mass_ratio)) => (5, Some(c), log_mass_ratio),
                None => (5, None, 0.0),
            },
        };
        state.counters[mv].proposed += 1;
        if let Some(c) = proposal {
            let ld = target_log_density(&c, model, params, settings)?;
            if ld > f64::NEG_INFINITY {
                let log_a = ld - cur + log_extra;
                if accept(log_a, rng) {
                    state.config = c;
                    state.log_density = ld;
                    state.counters[mv].accepted += 1;
                }
            }
        }
        state.step += 1;
        if settings.check_every > 0 && state.step % settings.check_every as u64 == 0 {
            let fresh = target_log_density(&state.config, model, params, settings)?;
            let drift = (fresh - state.log_density).abs();
            state.max_drift = state.max_drift.max(drift);
            if drift > 1e-8 * (1.0 + fresh.abs()) {
                return Err(Error::NaN(format!("log-density cache drifted by {drift:.3e}")));
            }
            state.log_density = fresh;
        }
    }
    state.rng = StreamPosition::of(rng);
    Ok(state)
}

/// Redraw `K − 1` consecutive interior nodes of a loop as a bridge between
/// their fixed neighbours, starting at a uniform offset.
fn resample_segment(l: &Loop, max_steps: usize, rng: &mut Stream) -> Loop {
    let n = l.path.grid.steps;
    let hstep = l.path.grid.spacing();
    let k = rng.random_range(2..=max_steps.clamp(2, n));
    let a = rng.random_range(0..n);
    let mut r = l.rotate(a);
    let d = l.dim();
    let x = r.path.node(0).to_vec();
    let y = r.path.node(k).to_vec();
    let mut inner = Vec::with_capacity(d * (k - 1));
    fill_bridge(&x, &y, hstep, k, rng, &mut inner);
    r.path.nodes[d..d * k].copy_from_slice(&inner);
    if k == n {
        // The whole loop was redrawn from its current root: last node = first.
        let first = r.path.node(0).to_vec();
        r.path.nodes[d * n..].copy_from_slice(&first);
    }
    r.rotate(n - a)
}

/// Split/merge: swap the targets of two distinct bridges of the cut
/// configuration, redraw both, reassemble and re-root every loop at a
/// uniform `β`-multiple. Returns the proposal and its log mass ratio.
fn swap_proposal(rho: &RlConfig, params: &ModelParams, rng: &mut Stream) -> Result<Option<(RlConfig, f64)>> {
    let g = cut_rl_to_fk(rho);
    let n = g.len();
    if n < 2 {
        return Ok(None);
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let br = g.bridges();
    let (xa, ya, xb, yb) = (br[a].start(), br[a].end(), br[b].start(), br[b].end());
    let beta = params.beta;
    let log_ratio = (unnormalized_mass(xa, yb, beta) * unnormalized_mass(xb, ya, beta)).ln()
        - (unnormalized_mass(xa, ya, beta) * unnormalized_mass(xb, yb, beta)).ln();
    let na = sample_bridge(xa, yb, beta, g.steps(), rng)?;
    let nb = sample_bridge(xb, ya, beta, g.steps(), rng)?;
    let mut bridges = g.into_bridges();
    bridges[a] = na;
    bridges[b] = nb;
    let g2 = FkConfig::new(rho.dim, rho.beta, rho.steps, bridges)?;
    let mut out = assemble_fk_to_rl(&g2)?;
    for l in out.loops.iter_mut() {
        let k = rng.random_range(0..l.length);
        *l = l.rotate(k * rho.steps);
    }
    Ok(Some((out, log_ratio)))
}

/// Burn in, then call `visit` on every `thin`-th state for `samples` samples.
pub fn run_chain(
    state: ChainState,
    model: &EnergyModel,
    params: &ModelParams,
    settings: &MhSettings,
    samples: usize,
    rng: &mut Stream,
    mut visit: impl FnMut(&ChainState) -> Result<()>,
) -> Result<ChainState> {
    let mut s = mh_rl_chain(state, model, params, settings, settings.burn_in, rng)?;
    for _ in 0..samples {
        s = mh_rl_chain(s, model, params, settings, settings.thin.max(1), rng)?;
        visit(&s)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::samplers::ideal::{sample_ideal_rl, IdealSpec};

    fn params() -> ModelParams {
        ModelParams::new(0.5, -1.0, 2.0, 1).unwrap()
    }

    #[test]
    fn two_state_detailed_balance() {
        // States: empty and {ℓ}. Transition densities against the loop
        // reference: birth proposes ℓ with density g, death removes the only loop.
        let p = params();
        let q = birth_length_weights(&p, 4);
        for (j, log_f) in [(1, -0.3), (2, 1.7), (3, -4.0)] {
            let g = birth_proposal_density(&p, &q, j);
            let f0 = 1.0f64;
            let f1 = f64::exp(log_f);
            let up = 0.5 * g * birth_log_acceptance(log_f, 0, g).exp();
            let down = 0.5 * death_log_acceptance(-log_f, 1, g).exp();
            let lhs = f0 * up;
            let rhs = f1 * down;
            assert!((lhs - rhs).abs() < 1e-12 * lhs.max(rhs), "j={j}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn proposal_densities_integrate_to_one() {
        let p = params();
        let q = birth_length_weights(&p, 6);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // ∫ g dν_root = Σ_j g(j) · L^d (2πβj)^{−d/2} / j = Σ q = 1.
        let total: f64 = (1..=6)
            .map(|j| birth_proposal_density(&p, &q, j) * p.volume() * (2.0 * PI * p.beta * j as f64).powf(-0.5) / j as f64)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hard_core_overlap_birth_always_rejected() {
        let p = ModelParams::new(0.5, 0.0, 1.0, 1).unwrap();
        let m = EnergyModel::hard_core(0.3, 1.0, 1).unwrap();
        let mut rng = stream(1, 0);
        let l = Loop::sample(&[0.0], 1, p.beta, 8, &mut rng).unwrap();
        let mut twin = l.clone();
        twin.path = twin.path.translated(&[0.01]);
        let rho = RlConfig::new(1, p.beta, 8, vec![l, twin]).unwrap();
        let s = MhSettings { steps: 8, j_max: Some(2), ..Default::default() };
        assert_eq!(target_log_density(&rho, &m, &p, &s).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn cache_and_checkpoint() {
        let p = params();
        let m = EnergyModel::bump(1.0, 0.3, 0.1, 1).unwrap();
        let s = MhSettings { steps: 8, j_max: Some(4), check_every: 100, ..Default::default() };
        let mut rng = stream(2, 0);
        let st = ChainState::empty(&m, &p, &s, &rng).unwrap();
        let st = mh_rl_chain(st, &m, &p, &s, 5000, &mut rng).unwrap();
        assert!(st.max_drift < 1e-8);
        let json = serde_json::to_string(&st).unwrap();
        let back: ChainState = serde_json::from_str(&json).unwrap();
        let mut r1 = back.rng.restore();
        let a = mh_rl_chain(back, &m, &p, &s, 500, &mut r1).unwrap();
        let b = mh_rl_chain(st, &m, &p, &s, 500, &mut rng).unwrap();
        assert_eq!(a, b);
        for mv in 0..6 {
            assert!(b.counters[mv].proposed > 0, "{}", MOVES[mv]);
        }
    }

    #[test]
    fn free_chain_matches_ideal_sampler() {
        let p = params();
        let m = EnergyModel::zero();
        let s = MhSettings { steps: 8, j_max: Some(3), burn_in: 2000, thin: 20, ..Default::default() };
        let mut rng = stream(3, 0);
        let st = ChainState::empty(&m, &p, &s, &rng).unwrap();
        let mut chain = [0.0; 3];
        let samples = 4000;
        run_chain(st, &m, &p, &s, samples, &mut rng, |st| {
            for l in &st.config.loops {
                chain[l.length - 1] += 1.0;
            }
            Ok(())
        })
        .unwrap();
        let mut ideal = [0.0; 3];
        let spec = IdealSpec { steps: 8, j_max: Some(3) };
        let mut irng = stream(3, 1);
        for _ in 0..samples {
            for l in sample_ideal_rl(&p, &spec, &mut irng).unwrap().loops {
                ideal[l.length - 1] += 1.0;
            }
        }
        for j in 0..3 {
            let a = chain[j] / samples as f64;
            let b = ideal[j] / samples as f64;
            // Generous band for the autocorrelated chain.
            let se = (b / samples as f64).sqrt() * 4.0;
            assert!((a - b).abs() < 3.0 * se + 0.02, "j={}: chain {a} ideal {b}", j + 1);
        }
    }
}
