//! Exact sampling of the interacting rooted-loop model for nonnegative
//! interactions: draw the free soup and accept with probability `e^{−H_rl}`.
//!
//! With `max_bridges = Some(n)` the target is the model conditioned on at
//! most `n` bridges in total, the same truncation the enumeration oracle uses.

use super::ideal::{effective_j_max, sample_ideal_rl, IdealSpec};
use crate::error::{Error, Result};
use crate::hamiltonians::{h_rl, ModelParams, Quadrature};
use crate::interactions::EnergyModel;
use crate::representations::RlConfig;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct ExactSampler {
    pub params: ModelParams,
    pub model: EnergyModel,
    pub steps: usize,
    pub max_bridges: Option<usize>,
    pub j_max: Option<usize>,
    pub max_attempts: usize,
    pub quad: Quadrature,
}

#[derive(Clone, Debug)]
pub struct ExactDraw {
    pub config: RlConfig,
    pub energy: f64,
    pub attempts: usize,
}

impl ExactSampler {
    pub fn new(params: ModelParams, model: EnergyModel, steps: usize, max_bridges: Option<usize>) -> Result<Self> {
        if !model.is_nonnegative() || model.empty_energy() < 0.0 {
            return Err(Error::Config("exact rejection sampling needs a nonnegative interaction".into()));
        }
        let s = Self { params, model, steps, max_bridges, j_max: None, max_attempts: 1_000_000, quad: Quadrature::Left };
        s.cutoff()?;
        Ok(s)
    }

    /// Like [`ExactSampler::new`] with a loop-length cutoff, which makes `βμ ≥ 0` admissible.
    pub fn with_j_max(
        params: ModelParams,
        model: EnergyModel,
        steps: usize,
        max_bridges: Option<usize>,
        j_max: usize,
    ) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::Config("j_max must be positive".into()));
        }
        if !model.is_nonnegative() || model.empty_energy() < 0.0 {
            return Err(Error::Config("exact rejection sampling needs a nonnegative interaction".into()));
        }
        let s = Self { params, model, steps, max_bridges, j_max: Some(j_max), max_attempts: 1_000_000, quad: Quadrature::Left };
        s.cutoff()?;
        Ok(s)
    }

    fn cutoff(&self) -> Result<usize> {
        let j = match (self.max_bridges, self.j_max) {
            (Some(n), Some(j)) => Some(n.min(j)),
            (Some(n), None) => Some(n),
            (None, j) => j,
        };
        effective_j_max(&self.params, j)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ExactDraw> {
        let spec = IdealSpec { steps: self.steps, j_max: Some(self.cutoff()?) };
        for attempt in 1..=self.max_attempts {
            let rho = sample_ideal_rl(&self.params, &spec, rng)?;
            if let Some(n) = self.max_bridges {
                if rho.total_length() > n {
                    continue;
                }
            }
            let h = h_rl(&rho, &self.model, &self.params, self.quad)?;
            if h == f64::INFINITY {
                continue;
            }
            if h <= 0.0 || rng.random::<f64>() < (-h).exp() {
                return Ok(ExactDraw { config: rho, energy: h, attempts: attempt });
            }
        }
        Err(Error::RetryCap { cap: self.max_attempts, hint: "acceptance too low for exact sampling".into() })
    }
}
