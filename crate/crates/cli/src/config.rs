//! Experiment configuration. Every section is optional and unknown keys are
//! rejected at every level.

use fkgas::geometry::BoxRegion;
use fkgas::hamiltonians::{ModelParams, NuSpec};
use fkgas::interactions::{same_cell_certificate, EnergyModel, PairPotential, SuperstabilityConstants};
use fkgas::statistics::LongCycleRule;
use fkgas::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicas: usize,
    pub model: ModelSection,
    pub sampler: SamplerSection,
    pub statistics: StatisticsSection,
    pub oracle: OracleSection,
    pub dlr: DlrSection,
    pub invariance: InvarianceSection,
    pub entropy: EntropySection,
    pub sausage: SausageSection,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            replicas: 1,
            model: Default::default(),
            sampler: Default::default(),
            statistics: Default::default(),
            oracle: Default::default(),
            dlr: Default::default(),
            invariance: Default::default(),
            entropy: Default::default(),
            sausage: Default::default(),
            verify: Default::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub beta: f64,
    pub mu: f64,
    pub side: f64,
    pub dim: usize,
    /// Grid steps per unit of `β`.
    pub steps: usize,
    pub potential: PotentialSection,
    /// Cell side used by the superstability certificate and the mark lattice.
    pub cell: f64,
    /// Spread of the cell-offset weights.
    pub kappa: f64,
    /// Explicit constants replacing the built-in certificate.
    pub constants: Option<ConstantsSection>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            beta: 0.5,
            mu: 2.0,
            side: 1.0,
            dim: 1,
            steps: 32,
            potential: PotentialSection::Bump { strength: 1.0, range: 1.5 },
            cell: 1.0,
            kappa: 0.5,
            constants: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Zero,
    HardCore { radius: f64 },
    Bump { strength: f64, range: f64 },
    Indicator { value: f64, range: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub a: f64,
    pub b: f64,
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Mh,
    Ideal,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub kind: SamplerKind,
    /// Samples per replica.
    pub samples: usize,
    pub max_bridges: Option<usize>,
    pub j_max: Option<usize>,
    /// Configurations written to disk per replica.
    pub keep: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_size: f64,
    pub segment_steps: usize,
    pub check_every: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            kind: SamplerKind::Exact,
            samples: 1000,
            max_bridges: Some(3),
            j_max: None,
            keep: 10,
            burn_in: 10_000,
            thin: 10,
            step_size: 0.2,
            segment_steps: 16,
            check_every: 1000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatName {
    Bridges,
    F1,
    F2,
    F3,
    F4,
    ShortCycles,
    LongCycles,
    CycleLengths,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatisticsSection {
    pub list: Vec<StatName>,
    pub long_cycle_n: usize,
    pub long_cycle_rule: LongCycleRule,
}

impl Default for StatisticsSection {
    fn default() -> Self {
        Self {
            list: vec![
                StatName::Bridges,
                StatName::F1,
                StatName::F2,
                StatName::F3,
                StatName::F4,
                StatName::ShortCycles,
                StatName::LongCycles,
                StatName::CycleLengths,
            ],
            long_cycle_n: 3,
            long_cycle_rule: LongCycleRule::Literal,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub n_max: usize,
    pub samples_per_term: usize,
    pub order: usize,
    pub budget: f64,
    /// Relative tolerance of the three-way comparison.
    pub tolerance: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self { n_max: 3, samples_per_term: 100_000, order: 6, budget: 1e8, tolerance: 0.02 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlrModeName {
    Rejection,
    Mcmc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DlrSection {
    pub center: f64,
    pub half_width: f64,
    pub modes: Vec<DlrModeName>,
    pub mcmc_steps: usize,
    /// Lower bound on the pair potential, required for signed potentials.
    pub lower_bound: Option<f64>,
    pub samples: usize,
}

impl Default for DlrSection {
    fn default() -> Self {
        Self {
            center: 0.0,
            half_width: 0.25,
            modes: vec![DlrModeName::Rejection, DlrModeName::Mcmc],
            mcmc_steps: 200,
            lower_bound: None,
            samples: 4000,
        }
    }
}

impl DlrSection {
    pub fn region(&self, dim: usize) -> BoxRegion {
        BoxRegion::cube(dim, self.center - self.half_width, self.center + self.half_width)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSection {
    pub samples: usize,
    /// Time shifts as fractions of `β`.
    pub shifts: Vec<f64>,
}

impl Default for InvarianceSection {
    fn default() -> Self {
        Self { samples: 2000, shifts: vec![0.25, 0.5, 0.8125] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropySection {
    pub n_max: usize,
    pub samples: usize,
}

impl Default for EntropySection {
    fn default() -> Self {
        Self { n_max: 3, samples: 20_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SausageSection {
    pub paths: usize,
    pub dim: usize,
    pub delta: f64,
    pub t: f64,
    pub epsilon: f64,
    pub steps: usize,
}

impl Default for SausageSection {
    fn default() -> Self {
        Self { paths: 10_000, dim: 2, delta: 0.1, t: 1.0, epsilon: 0.05, steps: 256 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub scale: f64,
    pub criteria: Vec<u32>,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self { scale: 1.0, criteria: (1..=12).collect() }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.model()?;
        NuSpec::new(self.model.cell, self.model.kappa)?;
        let m = &self.model;
        if m.steps == 0 {
            return Err(Error::Config("model.steps must be positive".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be positive".into()));
        }
        if self.sampler.samples == 0 || self.sampler.thin == 0 || self.sampler.check_every == 0 {
            return Err(Error::Config("sampler.samples, thin and check_every must be positive".into()));
        }
        if !(self.sampler.step_size > 0.0) {
            return Err(Error::Config("sampler.step_size must be positive".into()));
        }
        if !(self.dlr.half_width > 0.0) || self.dlr.samples == 0 {
            return Err(Error::Config("dlr.half_width and dlr.samples must be positive".into()));
        }
        if self.invariance.samples < 2 || self.invariance.shifts.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("invariance needs at least 2 samples and finite shifts".into()));
        }
        if !(self.oracle.tolerance > 0.0) {
            return Err(Error::Config("oracle.tolerance must be positive".into()));
        }
        if !(self.verify.scale > 0.0) || self.verify.criteria.iter().any(|c| !(1..=12).contains(c)) {
            return Err(Error::Config("verify.scale must be positive and criteria within 1..=12".into()));
        }
        let s = &self.sausage;
        if s.paths == 0 || s.steps == 0 || !(s.delta > 0.0 && s.t > 0.0 && s.epsilon >= 0.0) || !(1..=3).contains(&s.dim) {
            return Err(Error::Config("sausage settings out of range".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.beta, m.mu, m.side, m.dim)
    }

    pub fn nu(&self) -> Result<NuSpec> {
        NuSpec::new(self.model.cell, self.model.kappa)
    }

    pub fn model(&self) -> Result<EnergyModel> {
        let m = &self.model;
        let explicit = match m.constants {
            Some(c) => Some(SuperstabilityConstants::new(c.a, c.b, c.r)?),
            None => None,
        };
        let model = match m.potential {
            PotentialSection::Zero => EnergyModel::pairwise(PairPotential::zero(), explicit),
            PotentialSection::HardCore { radius } => match explicit {
                Some(c) => EnergyModel::pairwise(PairPotential::hard_core(radius)?, Some(c)),
                None => EnergyModel::hard_core(radius, m.cell, m.dim)?,
            },
            PotentialSection::Bump { strength, range } => match explicit {
                Some(c) => EnergyModel::pairwise(PairPotential::bump(strength, range)?, Some(c)),
                None => EnergyModel::bump(strength, range, m.cell, m.dim)?,
            },
            PotentialSection::Indicator { value, range } => {
                let pot = PairPotential::indicator(value, range)?;
                let c = match explicit {
                    Some(c) => Some(c),
                    None => same_cell_certificate(&pot, m.cell, m.dim).ok(),
                };
                EnergyModel::pairwise(pot, c)
            }
        };
        Ok(model)
    }

    /// SHA-256 of the normalized configuration, so formatting does not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
