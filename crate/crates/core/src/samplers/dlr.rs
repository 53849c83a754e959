//! Resampling of everything inside a compact `Δ` given the rest.
//!
//! Bridges contained in `Δ` are interior, all others exterior. The interior
//! must start at `∂in ∪ ζ` and end at `∂out ∪ ζ`, where `ζ` is a fresh point
//! set in `Δ` weighted by `e^{βμ#ζ}` against a unit Poisson process, the
//! bridges are confined to `Δ`, and the whole is reweighted by
//! `e^{−H^loc(η ∪ γ^ext)}`. Exterior bridges are returned untouched.

use super::confined_bridge;
use crate::error::{Error, Result};
use crate::geometry::{point_key, BoxRegion};
use crate::hamiltonians::{h_loc, ModelParams, Quadrature};
use crate::interactions::{EnergyModel, PairPotential};
use crate::representations::{bridge_inside, dlr_split, FkConfig};
use crate::trajectories::{sample_bridge, unnormalized_mass, Bridge};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DlrMode {
    /// Independent proposals from the free kernel, accepted by energy.
    Rejection,
    /// An interior-only Metropolis chain started from the current interior.
    Mcmc { steps: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlrSpec {
    pub delta: BoxRegion,
    pub mode: DlrMode,
    /// `C` with `H^loc(η ∪ γ^ext) − H^loc(γ^ext) ≥ β·C` for every interior `η`.
    /// Defaults to 0 for nonnegative pair potentials.
    pub lower_bound: Option<f64>,
    /// Attempts allowed per proposal before giving up.
    pub retry_cap: usize,
    pub quad: Quadrature,
}

impl DlrSpec {
    pub fn new(delta: BoxRegion, mode: DlrMode) -> Self {
        Self { delta, mode, lower_bound: None, retry_cap: 1_000_000, quad: Quadrature::Left }
    }
}

#[derive(Clone, Debug)]
struct Interior {
    /// Sources `∂in` followed by `ζ`.
    sources: Vec<Vec<f64>>,
    n_in: usize,
    /// `targets[i]` is the endpoint of the bridge leaving `sources[i]`.
    targets: Vec<Vec<f64>>,
    bridges: Vec<Bridge>,
}

impl Interior {
    fn fixed_zeta(&self) -> Vec<usize> {
        (self.n_in..self.sources.len()).filter(|&i| self.sources[i] == self.targets[i]).collect()
    }
}

struct Kernel<'a> {
    spec: &'a DlrSpec,
    pot: &'a PairPotential,
    params: &'a ModelParams,
    exterior: &'a FkConfig,
    h_ext_loc: f64,
}

impl Kernel<'_> {
    fn energy(&self, interior: &[Bridge]) -> Result<f64> {
        let mut all = self.exterior.bridges().to_vec();
        all.extend(interior.iter().cloned());
        let g = FkConfig::new(self.exterior.dim(), self.exterior.beta(), self.exterior.steps(), all)?;
        h_loc(&g, &self.spec.delta, self.pot, self.spec.quad)
    }

    fn assemble(&self, interior: Vec<Bridge>) -> Result<FkConfig> {
        let mut all = self.exterior.bridges().to_vec();
        all.extend(interior);
        FkConfig::new(self.exterior.dim(), self.exterior.beta(), self.exterior.steps(), all)
    }
}

/// Draw `η ∪ γ^ext` with `η` from the conditional law inside `spec.delta`.
pub fn dlr_resample<R: Rng + ?Sized>(
    g: &FkConfig,
    spec: &DlrSpec,
    model: &EnergyModel,
    params: &ModelParams,
    rng: &mut R,
) -> Result<FkConfig> {
    let pot = model
        .pair()
        .ok_or_else(|| Error::Config("DLR resampling needs a finite-range pair potential".into()))?;
    let d = params.dim;
    if spec.delta.dim() != d {
        return Err(Error::Input("compact has the wrong dimension".into()));
    }
    let h = params.side / 2.0;
    if spec.delta.lo.iter().any(|&a| a < -h) || spec.delta.hi.iter().any(|&b| b >= h) {
        return Err(Error::Config("the compact must lie inside the window".into()));
    }
    let split = dlr_split(g, &spec.delta);
    if split.inward.len() != split.outward.len() {
        return Err(Error::Degenerate(format!(
            "{} inward versus {} outward boundary points: no bijection exists",
            split.inward.len(),
            split.outward.len()
        )));
    }
    let kernel = Kernel {
        spec,
        pot,
        params,
        exterior: &split.exterior,
        h_ext_loc: h_loc(&split.exterior, &spec.delta, pot, spec.quad)?,
    };
    match spec.mode {
        DlrMode::Rejection => {
            let c = match spec.lower_bound {
                Some(c) => c,
                None if pot.is_nonnegative() => 0.0,
                None => {
                    return Err(Error::Config(
                        "rejection mode needs a local-energy lower bound for signed potentials".into(),
                    ))
                }
            };
            rejection(&kernel, &split.inward, &split.outward, c, rng)
        }
        DlrMode::Mcmc { steps } => {
            let start = current_interior(&split.inward, &split.interior)?;
            mcmc(&kernel, start, steps, rng)
        }
    }
}

fn ideal_mass(params: &ModelParams) -> f64 {
    (2.0 * PI * params.beta).powf(-(params.dim as f64) / 2.0)
}

/// Weights `a_k ∝ λ^k (n+k)!/k! · m0^k` of the number of fresh points, with
/// `λ = e^{βμ}|Δ|`; summable only when `λ·m0 < 1`.
fn zeta_count_weights(lambda_m0: f64, n: usize) -> Result<Vec<f64>> {
    if lambda_m0 >= 1.0 {
        return Err(Error::Config(format!(
            "rejection mode needs e^(beta mu)|Delta|(2 pi beta)^(-d/2) < 1, got {lambda_m0:.3}; use the MCMC mode"
        )));
    }
    let mut logs = vec![0.0];
    let mut k = 0usize;
    loop {
        let ratio = lambda_m0 * (n + k + 1) as f64 / (k + 1) as f64;
        let next = logs[k] + ratio.ln();
        k += 1;
        logs.push(next);
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if ratio < 1.0 && next - max < -40.0 {
            break;
        }
        if k > 10_000 {
            return Err(Error::Config("fresh-point count distribution does not settle".into()));
        }
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(logs.iter().map(|l| (l - max).exp()).collect())
}

fn draw_index<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, x) in w.iter().enumerate() {
        if u < *x {
            return i;
        }
        u -= x;
    }
    w.len() - 1
}

fn uniform_in<R: Rng + ?Sized>(delta: &BoxRegion, rng: &mut R) -> Vec<f64> {
    delta.lo.iter().zip(&delta.hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect()
}

fn rejection<R: Rng + ?Sized>(
    k: &Kernel,
    inward: &[Vec<f64>],
    outward: &[Vec<f64>],
    c: f64,
    rng: &mut R,
) -> Result<FkConfig> {
    let p = k.params;
    let m0 = ideal_mass(p);
    let n = inward.len();
    let lambda = (p.beta * p.mu).exp() * k.spec.delta.volume();
    let weights = zeta_count_weights(lambda * m0, n)?;
    let steps = k.exterior.steps();
    for _ in 0..k.spec.retry_cap {
        let nz = draw_index(&weights, rng);
        let zeta: Vec<Vec<f64>> = (0..nz).map(|_| uniform_in(&k.spec.delta, rng)).collect();
        let mut targets: Vec<Vec<f64>> = outward.iter().cloned().chain(zeta.iter().cloned()).collect();
        targets.shuffle(rng);
        let mut accept = 1.0;
        let mut bridges = Vec::with_capacity(n + nz);
        let mut confined = true;
        for (x, y) in inward.iter().chain(zeta.iter()).zip(&targets) {
            accept *= unnormalized_mass(x, y, p.beta) / m0;
            let b = sample_bridge(x, y, p.beta, steps, rng)?;
            if !bridge_inside(&b, &k.spec.delta) {
                confined = false;
                break;
            }
            bridges.push(b);
        }
        if !confined || rng.random::<f64>() >= accept {
            continue;
        }
        let e = k.energy(&bridges)?;
        if e == f64::INFINITY {
            continue;
        }
        let excess = e - k.h_ext_loc - p.beta * c;
        if excess < -1e-9 * (1.0 + e.abs()) {
            return Err(Error::Config(format!("local energy increment falls below the declared bound by {excess:.3e}")));
        }
        if excess <= 0.0 || rng.random::<f64>() < (-excess).exp() {
            return k.assemble(bridges);
        }
    }
    Err(Error::RetryCap {
        cap: k.spec.retry_cap,
        hint: "DLR proposals keep failing; shrink the compact or use the MCMC mode".into(),
    })
}

/// Interior state read off the current configuration.
fn current_interior(inward: &[Vec<f64>], interior: &FkConfig) -> Result<Interior> {
    let inward_keys: std::collections::HashSet<Vec<u64>> = inward.iter().map(|x| point_key(x)).collect();
    let mut sources = inward.to_vec();
    let mut ordered: Vec<Option<Bridge>> = vec![None; inward.len()];
    let mut extra = Vec::new();
    for b in interior.bridges() {
        let key = point_key(b.start());
        if inward_keys.contains(&key) {
            let i = inward.iter().position(|x| point_key(x) == key).unwrap();
            ordered[i] = Some(b.clone());
        } else {
            extra.push(b.clone());
        }
    }
    let mut bridges = Vec::with_capacity(sources.len() + extra.len());
    for b in ordered {
        bridges.push(b.ok_or_else(|| Error::Degenerate("an inward point starts no interior bridge".into()))?);
    }
    for b in extra {
        sources.push(b.start().to_vec());
        bridges.push(b);
    }
    let targets = bridges.iter().map(|b| b.end().to_vec()).collect();
    Ok(Interior { sources, n_in: inward.len(), targets, bridges })
}

fn mcmc<R: Rng + ?Sized>(k: &Kernel, mut s: Interior, steps: usize, rng: &mut R) -> Result<FkConfig> {
    let p = k.params;
    let delta = &k.spec.delta;
    let m0 = ideal_mass(p);
    let vol = delta.volume();
    let bm = p.beta * p.mu;
    let grid_steps = k.exterior.steps();
    let cap = k.spec.retry_cap;
    let mut e = k.energy(&s.bridges)?;
    for _ in 0..steps {
        let mv = rng.random_range(0..4u8);
        match mv {
            // Birth of a fresh point carrying a self-bridge.
            0 => {
                let z = uniform_in(delta, rng);
                let b = sample_bridge(&z, &z, p.beta, grid_steps, rng)?;
                if !bridge_inside(&b, delta) {
                    continue;
                }
                let mut nb = s.bridges.clone();
                nb.push(b.clone());
                let e2 = k.energy(&nb)?;
                if e2 == f64::INFINITY {
                    continue;
                }
                let fixed_after = s.fixed_zeta().len() + 1;
                let log_a = bm + m0.ln() - (e2 - e) + vol.ln() - (fixed_after as f64).ln();
                if log_a >= 0.0 || rng.random::<f64>() < log_a.exp() {
                    s.sources.push(z.clone());
                    s.targets.push(z);
                    s.bridges = nb;
                    e = e2;
                }
            }
            // Death of a fresh point that maps to itself.
            1 => {
                let fixed = s.fixed_zeta();
                if fixed.is_empty() {
                    continue;
                }
                let i = fixed[rng.random_range(0..fixed.len())];
                let mut nb = s.bridges.clone();
                nb.remove(i);
                let e2 = k.energy(&nb)?;
                let log_a = -bm - m0.ln() - (e2 - e) - vol.ln() + (fixed.len() as f64).ln();
                if log_a >= 0.0 || rng.random::<f64>() < log_a.exp() {
                    s.sources.remove(i);
                    s.targets.remove(i);
                    s.bridges = nb;
                    e = e2;
                }
            }
            // Swap the targets of two sources.
            2 => {
                let n = s.sources.len();
                if n < 2 {
                    continue;
                }
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let (xa, xb) = (&s.sources[a], &s.sources[b]);
                let (ya, yb) = (&s.targets[a], &s.targets[b]);
                let ratio = unnormalized_mass(xa, yb, p.beta) * unnormalized_mass(xb, ya, p.beta)
                    / (unnormalized_mass(xa, ya, p.beta) * unnormalized_mass(xb, yb, p.beta));
                let ba = sample_bridge(xa, yb, p.beta, grid_steps, rng)?;
                let bb = sample_bridge(xb, ya, p.beta, grid_steps, rng)?;
                if !bridge_inside(&ba, delta) || !bridge_inside(&bb, delta) {
                    continue;
                }
                let mut nb = s.bridges.clone();
                nb[a] = ba;
                nb[b] = bb;
                let e2 = k.energy(&nb)?;
                if e2 == f64::INFINITY {
                    continue;
                }
                let a_prob = ratio * (-(e2 - e)).exp();
                if a_prob >= 1.0 || rng.random::<f64>() < a_prob {
                    s.targets.swap(a, b);
                    s.bridges = nb;
                    e = e2;
                }
            }
            // Redraw one bridge with fixed endpoints.
            _ => {
                let n = s.sources.len();
                if n == 0 {
                    continue;
                }
                let i = rng.random_range(0..n);
                let nbr = confined_bridge(&s.sources[i], &s.targets[i], p.beta, delta, grid_steps, rng, cap)?;
                let mut nb = s.bridges.clone();
                nb[i] = nbr.bridge;
                let e2 = k.energy(&nb)?;
                if e2 == f64::INFINITY {
                    continue;
                }
                if e2 <= e || rng.random::<f64>() < (-(e2 - e)).exp() {
                    s.bridges = nb;
                    e = e2;
                }
            }
        }
    }
    k.assemble(s.bridges)
}

/// Number of permutations of `n` points reachable from the identity by
/// transpositions, by breadth-first search over the support.
pub fn transposition_support(n: usize) -> usize {
    use std::collections::{HashSet, VecDeque};
    let start: Vec<usize> = (0..n).collect();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for a in 0..n {
            for b in a + 1..n {
                let mut q = p.clone();
                q.swap(a, b);
                if seen.insert(q.clone()) {
                    queue.push_back(q);
                }
            }
        }
    }
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn transpositions_reach_every_permutation() {
        let fact = [1, 1, 2, 6, 24];
        for n in 1..=4 {
            assert_eq!(transposition_support(n), fact[n]);
        }
    }

    #[test]
    fn count_weights_are_normalizable() {
        let w = zeta_count_weights(0.5, 0).unwrap();
        // n = 0: a_k = (λm0)^k, geometric.
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        assert!(zeta_count_weights(1.5, 0).is_err());
    }

    fn setup() -> (ModelParams, EnergyModel, DlrSpec) {
        let p = ModelParams::new(0.05, 0.0, 1.0, 1).unwrap();
        let m = EnergyModel::bump(1.0, 0.2, 0.1, 1).unwrap();
        let spec = DlrSpec::new(BoxRegion::cube(1, -0.2, 0.2), DlrMode::Rejection);
        (p, m, spec)
    }

    #[test]
    fn exterior_is_preserved_bit_for_bit() {
        let (p, m, spec) = setup();
        let mut rng = stream(3, 0);
        let out = sample_bridge(&[0.3], &[0.3], p.beta, 16, &mut rng).unwrap();
        let cross_a = sample_bridge(&[0.1], &[0.4], p.beta, 16, &mut rng).unwrap();
        let cross_b = sample_bridge(&[0.4], &[0.0], p.beta, 16, &mut rng).unwrap();
        let inner = confined_bridge(&[0.0], &[0.1], p.beta, &spec.delta, 16, &mut rng, 10_000).unwrap().bridge;
        let g = FkConfig::new(1, p.beta, 16, vec![out, cross_a, cross_b, inner]).unwrap();
        assert!(g.is_permutation_wise());
        let mut mspec = spec.clone();
        mspec.mode = DlrMode::Mcmc { steps: 50 };
        for s in [&spec, &mspec] {
            for _ in 0..20 {
                let r = dlr_resample(&g, s, &m, &p, &mut rng).unwrap();
                let ext = dlr_split(&r, &spec.delta).exterior;
                let mut a: Vec<_> = ext.bridges().iter().map(|b| b.nodes.clone()).collect();
                let mut b: Vec<_> = dlr_split(&g, &spec.delta).exterior.bridges().iter().map(|b| b.nodes.clone()).collect();
                a.sort_by(|x, y| x.partial_cmp(y).unwrap());
                b.sort_by(|x, y| x.partial_cmp(y).unwrap());
                assert_eq!(a, b);
                assert!(r.is_permutation_wise());
            }
        }
    }

    #[test]
    fn unbalanced_boundary_is_degenerate() {
        let (p, m, spec) = setup();
        let mut rng = stream(4, 0);
        let cross = sample_bridge(&[0.4], &[0.0], p.beta, 16, &mut rng).unwrap();
        let g = FkConfig::new(1, p.beta, 16, vec![cross]).unwrap();
        let err = dlr_resample(&g, &spec, &m, &p, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    #[test]
    fn signed_potential_needs_bound() {
        let (p, _, spec) = setup();
        let m = EnergyModel::pairwise(PairPotential::indicator(-1.0, 0.1).unwrap(), None);
        let g = FkConfig::empty(1, p.beta, 16).unwrap();
        let mut rng = stream(5, 0);
        assert!(matches!(dlr_resample(&g, &spec, &m, &p, &mut rng), Err(Error::Config(_))));
    }

    #[test]
    fn free_fresh_point_count_matches_enumeration() {
        // U = 0 and no boundary: P(#ζ = k) ∝ λ^k/k! · E_ζ Σ_σ Π W^{β,⊂Δ}(z_i, z_σ(i)),
        // with the inner expectation over uniform ζ estimated separately for
        // each k ≤ 2 and compared through the ratios P(k)/P(0).
        let p = ModelParams::new(0.01, -100.0, 1.0, 1).unwrap();
        let m = EnergyModel::zero();
        let delta = BoxRegion::cube(1, -0.1, 0.1);
        let spec = DlrSpec::new(delta.clone(), DlrMode::Rejection);
        let g = FkConfig::empty(1, p.beta, 8).unwrap();
        let mut rng = stream(6, 0);
        let n = 20_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let r = dlr_resample(&g, &spec, &m, &p, &mut rng).unwrap();
            counts[r.len().min(3)] += 1;
        }
        let lambda = (p.beta * p.mu).exp() * delta.volume();
        let mut orng = stream(6, 1);
        let perms: [&[&[usize]]; 3] = [&[&[]], &[&[0]], &[&[0, 1], &[1, 0]]];
        let mut w = [0.0; 3];
        for k in 0..3 {
            let reps = 40_000;
            let mut acc = 0.0;
            for _ in 0..reps {
                let z: Vec<Vec<f64>> = (0..k).map(|_| uniform_in(&delta, &mut orng)).collect();
                for s in perms[k] {
                    let mut prod = 1.0;
                    for i in 0..k {
                        let b = sample_bridge(&z[i], &z[s[i]], p.beta, 8, &mut orng).unwrap();
                        if !bridge_inside(&b, &delta) {
                            prod = 0.0;
                            break;
                        }
                        prod *= unnormalized_mass(&z[i], &z[s[i]], p.beta);
                    }
                    acc += prod;
                }
            }
            w[k] = lambda.powi(k as i32) / [1.0, 1.0, 2.0][k] * acc / reps as f64;
        }
        for k in 1..3 {
            let expected = w[k] / w[0];
            let emp = counts[k] as f64 / counts[0] as f64;
            let se = emp * (1.0 / counts[k] as f64 + 1.0 / counts[0] as f64).sqrt();
            assert!((emp - expected).abs() < 3.0 * se + 0.03 * expected, "k={k}: {emp} vs {expected}");
        }
    }
}
