//! Exact sampling of the free rooted-loop soup in `Λ_L`.

use crate::error::{Error, Result};
use crate::hamiltonians::{loop_intensity, ModelParams};
use crate::representations::RlConfig;
use crate::trajectories::Loop;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealSpec {
    pub steps: usize,
    /// Largest loop length; required when `βμ ≥ 0`.
    pub j_max: Option<usize>,
}

/// Tail bound `Σ_{j>J} L^d e^{βμj} (2πβj)^{−d/2} / j ≤ L^d (2πβ)^{−d/2} e^{βμ(J+1)} / (1 − e^{βμ})`.
pub fn tail_bound(params: &ModelParams, j_max: usize) -> f64 {
    let bm = params.beta * params.mu;
    if bm >= 0.0 {
        return f64::INFINITY;
    }
    let pref = params.volume() * (2.0 * std::f64::consts::PI * params.beta).powf(-(params.dim as f64) / 2.0);
    pref * (bm * (j_max + 1) as f64).exp() / (1.0 - bm.exp())
}

/// Length cut-off in effect: the supplied one, or the smallest with tail below `1e-12`.
pub fn effective_j_max(params: &ModelParams, j_max: Option<usize>) -> Result<usize> {
    if let Some(j) = j_max {
        if j == 0 {
            return Err(Error::Config("j_max must be at least 1".into()));
        }
        return Ok(j);
    }
    if params.beta * params.mu >= 0.0 {
        return Err(Error::Config("the free loop soup needs beta*mu < 0 or an explicit j_max".into()));
    }
    let mut j = 1;
    while tail_bound(params, j) > 1e-12 {
        j += 1;
        if j > 1_000_000 {
            return Err(Error::Config("beta*mu too close to 0 for an automatic cut-off".into()));
        }
    }
    Ok(j)
}

/// Loop soup of the free model: per length `j`, a Poisson number of loops with
/// mean `L^d e^{βμj}(2πβj)^{−d/2}/j`, uniform roots, thinned to loops whose
/// nodes all stay in `Λ_L`.
pub fn sample_ideal_rl<R: Rng + ?Sized>(params: &ModelParams, spec: &IdealSpec, rng: &mut R) -> Result<RlConfig> {
    let j_max = effective_j_max(params, spec.j_max)?;
    let w = params.window();
    let h = params.side / 2.0;
    let mut loops = Vec::new();
    let mut x = vec![0.0; params.dim];
    for j in 1..=j_max {
        let lambda = loop_intensity(params, j);
        if lambda <= 0.0 {
            continue;
        }
        let k = Poisson::new(lambda).map_err(|e| Error::Config(format!("Poisson mean {lambda}: {e}")))?.sample(rng) as usize;
        for _ in 0..k {
            for v in x.iter_mut() {
                *v = rng.random_range(-h..h);
            }
            let l = Loop::sample(&x, j, params.beta, spec.steps, rng)?;
            if l.path.all_nodes_in(|z| w.contains(z)) {
                loops.push(l);
            }
        }
    }
    RlConfig::new(params.dim, params.beta, spec.steps, loops)
}

/// Monte Carlo estimate of the probability that a length-`j` loop with a
/// uniform root stays in `Λ_L`, with its standard error.
pub fn confinement_probability<R: Rng + ?Sized>(
    params: &ModelParams,
    j: usize,
    steps: usize,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let w = params.window();
    let h = params.side / 2.0;
    let mut x = vec![0.0; params.dim];
    let mut ok = 0usize;
    for _ in 0..samples {
        for v in x.iter_mut() {
            *v = rng.random_range(-h..h);
        }
        let l = Loop::sample(&x, j, params.beta, steps, rng)?;
        if l.path.all_nodes_in(|z| w.contains(z)) {
            ok += 1;
        }
    }
    let p = ok as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn needs_negative_beta_mu_or_cutoff() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 1).unwrap();
        let mut rng = stream(1, 0);
        assert!(sample_ideal_rl(&p, &IdealSpec { steps: 8, j_max: None }, &mut rng).is_err());
        assert!(sample_ideal_rl(&p, &IdealSpec { steps: 8, j_max: Some(3) }, &mut rng).is_ok());
    }

    #[test]
    fn very_negative_mu_is_empty() {
        let p = ModelParams::new(1.0, -40.0, 1.0, 1).unwrap();
        let mut rng = stream(2, 0);
        for _ in 0..100 {
            assert!(sample_ideal_rl(&p, &IdealSpec { steps: 8, j_max: None }, &mut rng).unwrap().loops.is_empty());
        }
    }

    #[test]
    fn loops_are_confined() {
        let p = ModelParams::new(1.0, -0.5, 2.0, 2).unwrap();
        let mut rng = stream(3, 0);
        let w = p.window();
        for _ in 0..50 {
            let r = sample_ideal_rl(&p, &IdealSpec { steps: 16, j_max: None }, &mut rng).unwrap();
            assert!(r.loops.iter().all(|l| l.path.all_nodes_in(|z| w.contains(z))));
        }
    }
}
