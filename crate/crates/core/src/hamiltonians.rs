//! Energy functionals on configurations and the closed-form constants.
//!
//! Time integrals `∫₀^β U(slice(s)) ds` use the shared bridge grid: the
//! left-endpoint rule evaluates slices at nodes `0..M`, the midpoint rule at
//! the midpoints of consecutive nodes. The Dirichlet condition is checked on
//! every stored node under both rules.

use crate::error::{Error, Result};
use crate::geometry::{BoxRegion, Window};
use crate::interactions::{local_energy, EnergyModel, PairPotential, SuperstabilityConstants};
use crate::representations::{decode_mp_to_fk, FkConfig, MpConfig, RlConfig};
use crate::trajectories::Path;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Left,
    Midpoint,
}

/// `β`, `μ`, the window side `L` and the dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub beta: f64,
    pub mu: f64,
    pub side: f64,
    pub dim: usize,
}

impl ModelParams {
    pub fn new(beta: f64, mu: f64, side: f64, dim: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if !mu.is_finite() {
            return Err(Error::Config("mu must be finite".into()));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::Config(format!("window side must be positive, got {side}")));
        }
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(Self { beta, mu, side, dim })
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn window(&self) -> Window {
        Window::new(self.side)
    }
}

/// Integrate `slice_energy` over the `M` time slices of a set of paths that
/// all share the spacing `h = β/M`. `paths` yields, per slice `k`, the
/// positions at time `kh` (left) or `(k+½)h` (midpoint).
fn integrate_slices(
    paths: &[&Path],
    offsets: &[usize],
    m: usize,
    h: f64,
    dim: usize,
    quad: Quadrature,
    mut slice_energy: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut buf = Vec::with_capacity(offsets.len() * dim);
    let mut total = 0.0;
    for k in 0..m {
        buf.clear();
        for (p, &off) in paths.iter().zip(offsets) {
            let a = p.node(off + k);
            match quad {
                Quadrature::Left => buf.extend_from_slice(a),
                Quadrature::Midpoint => {
                    let b = p.node(off + k + 1);
                    buf.extend(a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)));
                }
            }
        }
        let e = slice_energy(&buf);
        if e == f64::INFINITY {
            return f64::INFINITY;
        }
        total += e;
    }
    total * h
}

fn nodes_in_window(paths: &[&Path], w: &Window) -> bool {
    paths.iter().all(|p| p.all_nodes_in(|x| w.contains(x)))
}

fn nan_check(v: f64, what: &str) -> Result<f64> {
    if v.is_nan() {
        Err(Error::NaN(what.into()))
    } else {
        Ok(v)
    }
}

/// `H_FK(γ) = ∫₀^β U^dir({σ(s), σ ∈ γ}) ds`.
pub fn h_fk(g: &FkConfig, model: &EnergyModel, params: &ModelParams, quad: Quadrature) -> Result<f64> {
    let paths: Vec<&Path> = g.bridges().iter().collect();
    if !nodes_in_window(&paths, &params.window()) {
        return Ok(f64::INFINITY);
    }
    let offsets = vec![0; paths.len()];
    let h = g.beta() / g.steps() as f64;
    let v = integrate_slices(&paths, &offsets, g.steps(), h, g.dim(), quad, |s| {
        model.energy_unchecked(s, g.dim())
    });
    nan_check(v, "H_FK")
}

/// `H_rl(ρ)`: slices gather `ℓ(βj + s)` over all loops and `0 ≤ j < length`.
pub fn h_rl(rho: &RlConfig, model: &EnergyModel, params: &ModelParams, quad: Quadrature) -> Result<f64> {
    let mut paths = Vec::new();
    let mut offsets = Vec::new();
    for l in &rho.loops {
        for j in 0..l.length {
            paths.push(&l.path);
            offsets.push(j * rho.steps);
        }
    }
    let w = params.window();
    if !rho.loops.iter().all(|l| l.path.all_nodes_in(|x| w.contains(x))) {
        return Ok(f64::INFINITY);
    }
    let h = rho.beta / rho.steps as f64;
    let v = integrate_slices(&paths, &offsets, rho.steps, h, rho.dim, quad, |s| {
        model.energy_unchecked(s, rho.dim)
    });
    nan_check(v, "H_rl")
}

/// `βμ·Σ length − H_rl`, the log-density of the rooted-loop model against its
/// Poisson reference (without normalization).
pub fn log_density_rl(rho: &RlConfig, model: &EnergyModel, params: &ModelParams, quad: Quadrature) -> Result<f64> {
    let h = h_rl(rho, model, params, quad)?;
    Ok(params.beta * params.mu * rho.total_length() as f64 - h)
}

/// Lattice mark law `ν`: independent per-axis discretized Gaussians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuSpec {
    pub r: f64,
    pub kappa: f64,
}

impl NuSpec {
    pub fn new(r: f64, kappa: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Config("lattice scale r must be positive".into()));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::Config(format!("kappa must lie in (0, 1), got {kappa}")));
        }
        Ok(Self { r, kappa })
    }

    /// Standard deviation in lattice units, `√(β / (r²(1−κ)))`.
    pub fn sd(&self, beta: f64) -> f64 {
        (beta / (self.r * self.r * (1.0 - self.kappa))).sqrt()
    }

    pub fn mass(&self, p: &[i64], beta: f64) -> f64 {
        gaussian_cell_mass(p, self.r, beta, self.kappa)
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, beta: f64, rng: &mut R) -> Vec<i64> {
        let s = self.sd(beta);
        (0..dim).map(|_| (s * crate::rng::normal(rng) + 0.5).floor() as i64).collect()
    }

    /// Truncation radius (sup norm) whose Gaussian tail is below `1e-8`.
    pub fn window(&self, beta: f64) -> i64 {
        (8.0 * self.sd(beta) + 2.0).ceil() as i64
    }
}

fn std_normal_interval(a: f64, b: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (libm::erfc(a / s) - libm::erfc(b / s))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b / s) - libm::erfc(-a / s))
    } else {
        1.0 - 0.5 * (libm::erfc(-a / s) + libm::erfc(b / s))
    }
}

/// `ν(p) = Π_i [Φ((p_i + ½)/s) − Φ((p_i − ½)/s)]`, `s = √(β/(r²(1−κ)))`.
pub fn gaussian_cell_mass(p: &[i64], r: f64, beta: f64, kappa: f64) -> f64 {
    let s = (beta / (r * r * (1.0 - kappa))).sqrt();
    p.iter().map(|&k| std_normal_interval((k as f64 - 0.5) / s, (k as f64 + 0.5) / s)).product()
}

/// `H_mp`; `+∞` unless the configuration is authorized and permutation-wise.
pub fn h_mp(g: &MpConfig, model: &EnergyModel, params: &ModelParams, quad: Quadrature, nu: &NuSpec) -> Result<f64> {
    let targets = match g.targets() {
        Ok(t) => t,
        Err(_) => return Ok(f64::INFINITY),
    };
    let d = g.dim as f64;
    let beta = g.beta;
    let mut e = 0.0;
    for (pt, &(k, n)) in g.points.iter().zip(&targets) {
        let y = &g.points[k].x;
        let d2: f64 = pt.x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        e += 0.5 * d * (2.0 * PI * beta).ln() + d2 / (2.0 * beta) + nu.mass(&pt.mark.p, beta).ln() - (n as f64).ln();
    }
    let fk = decode_mp_to_fk(g)?;
    let hi = h_fk(&fk, model, params, quad)?;
    Ok(e + hi)
}

/// `H^loc = ∫₀^β U_{Δ,loc}(slice) ds` for a finite-range pair potential.
pub fn h_loc(g: &FkConfig, delta: &BoxRegion, pot: &PairPotential, quad: Quadrature) -> Result<f64> {
    let paths: Vec<&Path> = g.bridges().iter().collect();
    let offsets = vec![0; paths.len()];
    let h = g.beta() / g.steps() as f64;
    let v = integrate_slices(&paths, &offsets, g.steps(), h, g.dim(), quad, |s| {
        local_energy(s, g.dim(), delta, pot)
    });
    nan_check(v, "H_loc")
}

/// `H^ext = ∫₀^β U^dir(slice ∖ Δ) ds`.
pub fn h_ext(g: &FkConfig, delta: &BoxRegion, model: &EnergyModel, params: &ModelParams, quad: Quadrature) -> Result<f64> {
    let paths: Vec<&Path> = g.bridges().iter().collect();
    if !nodes_in_window(&paths, &params.window()) {
        return Ok(f64::INFINITY);
    }
    let offsets = vec![0; paths.len()];
    let h = g.beta() / g.steps() as f64;
    let d = g.dim();
    let mut out = Vec::new();
    let v = integrate_slices(&paths, &offsets, g.steps(), h, d, quad, |s| {
        out.clear();
        for x in s.chunks_exact(d) {
            if !delta.contains(x) {
                out.extend_from_slice(x);
            }
        }
        model.energy_unchecked(&out, d)
    });
    nan_check(v, "H_ext")
}

/// Riemann zeta `ζ(s)` for `s > 1`: 1000 terms plus an Euler–Maclaurin tail.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta needs s > 1");
    let n = 1000usize;
    let mut sum = 0.0;
    for j in (1..n).rev() {
        sum += (j as f64).powf(-s);
    }
    let x = n as f64;
    // Σ_{j≥n} j^{-s} ≈ n^{1−s}/(s−1) + n^{−s}/2 + s n^{−s−1}/12 − s(s+1)(s+2) n^{−s−3}/720
    let tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s) + s * x.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * x.powf(-s - 3.0) / 720.0;
    sum + tail
}

/// Mass of the rooted-loop reference measure, `L^d (2πβ)^{−d/2} ζ(d/2 + 1)`.
pub fn loop_measure_mass(params: &ModelParams) -> f64 {
    let d = params.dim as f64;
    params.volume() * (2.0 * PI * params.beta).powf(-d / 2.0) * zeta(d / 2.0 + 1.0)
}

/// Mass of the `e^{βμj}`-weighted loop measure restricted to `j ≤ j_max`.
pub fn weighted_loop_mass(params: &ModelParams, j_max: usize) -> f64 {
    (1..=j_max).map(|j| loop_intensity(params, j)).sum()
}

/// `L^d e^{βμj} (2πβj)^{−d/2} / j`, the mean number of length-`j` loops
/// before the window condition.
pub fn loop_intensity(params: &ModelParams, j: usize) -> f64 {
    let jf = j as f64;
    let d = params.dim as f64;
    params.volume() * (params.beta * params.mu * jf).exp() * (2.0 * PI * params.beta * jf).powf(-d / 2.0) / jf
}

/// `(2πβ)^{−d/2} ζ(d/2+1) + β (1/r + 1)^d (A + μ)² / (4B)`.
pub fn entropy_bound_constant(params: &ModelParams, c: &SuperstabilityConstants) -> f64 {
    let d = params.dim as f64;
    (2.0 * PI * params.beta).powf(-d / 2.0) * zeta(d / 2.0 + 1.0)
        + params.beta * (1.0 / c.r + 1.0).powi(params.dim as i32) * (c.a + params.mu).powi(2) / (4.0 * c.b)
}

/// `β (L/r + 1)^d (A + μ)² / (4B)`, an upper bound on `βμΣj − H_rl`.
pub fn density_upper_bound(params: &ModelParams, c: &SuperstabilityConstants) -> f64 {
    params.beta * (params.side / c.r + 1.0).powi(params.dim as i32) * (c.a + params.mu).powi(2) / (4.0 * c.b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxRegion;
    use crate::representations::{cut_rl_to_fk, encode_fk_to_mp};
    use crate::rng::stream;
    use crate::trajectories::{sample_bridge, Loop, TimeGrid};

    fn params(beta: f64, mu: f64, side: f64, dim: usize) -> ModelParams {
        ModelParams::new(beta, mu, side, dim).unwrap()
    }

    #[test]
    fn zeta_values() {
        // Reference values of ζ(3/2), ζ(5/2), ζ(2).
        assert!((zeta(1.5) - 2.612_375_348_685_488).abs() < 1e-12);
        assert!((zeta(2.5) - 1.341_487_257_250_917_2).abs() < 1e-12);
        assert!((zeta(2.0) - PI * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn loop_mass_examples() {
        let m3 = loop_measure_mass(&params(1.0, 0.0, 1.0, 3));
        assert!((m3 - 0.085_18).abs() < 1e-5, "{m3}");
        let m1 = loop_measure_mass(&params(1.0, 0.0, 1.0, 1));
        assert!((m1 - 1.0421).abs() < 1e-4, "{m1}");
        let m1l = loop_measure_mass(&params(1.0, 0.0, 3.0, 1));
        assert!((m1l - 3.0 * m1).abs() < 1e-12);
    }

    #[test]
    fn entropy_constant_example() {
        let c = SuperstabilityConstants::new(0.0, 1.0, 1.0).unwrap();
        let v = entropy_bound_constant(&params(1.0, 0.0, 1.0, 1), &c);
        assert!((v - 1.0421).abs() < 1e-4);
        let big = SuperstabilityConstants::new(0.0, 1.0, 1e12).unwrap();
        let v = entropy_bound_constant(&params(1.0, 2.0, 1.0, 1), &big) - entropy_bound_constant(&params(1.0, 0.0, 1.0, 1), &big);
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nu_examples() {
        // r²(1−κ)/β = 1 gives the standard normal mass of [−½, ½).
        let v = gaussian_cell_mass(&[0], 1.0, 0.5, 0.5);
        assert!((v - 0.382_924_922_548_026).abs() < 1e-12);
        let nu = NuSpec::new(1.0, 0.5).unwrap();
        assert_eq!(nu.mass(&[3, -1], 0.7), nu.mass(&[-3, 1], 0.7));
        let w = nu.window(2.0);
        let total: f64 = (-w..=w).flat_map(|a| (-w..=w).map(move |b| [a, b])).map(|p| nu.mass(&p, 2.0)).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_slice_energy() {
        // Two parallel straight bridges 0.2 apart with Φ = 1 on [0, 0.5].
        let g = TimeGrid::new(0.7, 16).unwrap();
        let a = Path::straight(&[0.0, 0.0], &[0.3, 0.0], g);
        let b = Path::straight(&[0.0, 0.2], &[0.3, 0.2], g);
        let fk = FkConfig::new(2, 0.7, 16, vec![a, b]).unwrap();
        let m = EnergyModel::pairwise(PairPotential::indicator(1.0, 0.5).unwrap(), None);
        let p = params(0.7, 0.0, 4.0, 2);
        for q in [Quadrature::Left, Quadrature::Midpoint] {
            assert!((h_fk(&fk, &m, &p, q).unwrap() - 0.7).abs() < 1e-12);
        }
        let small = params(0.7, 0.0, 0.4, 2);
        assert_eq!(h_fk(&fk, &m, &small, Quadrature::Left).unwrap(), f64::INFINITY);
        assert_eq!(h_fk(&fk, &EnergyModel::zero(), &p, Quadrature::Left).unwrap(), 0.0);
    }

    #[test]
    fn rl_matches_fk_after_cut() {
        let mut rng = stream(11, 0);
        let m = EnergyModel::bump(1.0, 0.8, 0.5, 1).unwrap();
        let p = params(0.5, 0.3, 6.0, 1);
        let loops = vec![
            Loop::sample(&[0.1], 2, 0.5, 16, &mut rng).unwrap(),
            Loop::sample(&[0.4], 1, 0.5, 16, &mut rng).unwrap(),
        ];
        let rho = RlConfig::new(1, 0.5, 16, loops).unwrap();
        let fk = cut_rl_to_fk(&rho);
        assert_eq!(h_rl(&rho, &m, &p, Quadrature::Left).unwrap(), h_fk(&fk, &m, &p, Quadrature::Left).unwrap());
        let shifted = rho.time_shift(0.25);
        let a = h_rl(&rho, &m, &p, Quadrature::Left).unwrap();
        let b = h_rl(&shifted, &m, &p, Quadrature::Left).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        let rev = fk.time_reversed();
        let a = h_fk(&fk, &m, &p, Quadrature::Midpoint).unwrap();
        let b = h_fk(&rev, &m, &p, Quadrature::Midpoint).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn local_plus_exterior_is_total() {
        let mut rng = stream(12, 0);
        let pot = PairPotential::bump(1.0, 0.6).unwrap();
        let m = EnergyModel::pairwise(pot.clone(), None);
        let p = params(0.5, 0.0, 8.0, 1);
        let delta = BoxRegion::cube(1, -0.3, 0.3);
        let eta = vec![sample_bridge(&[0.0], &[0.05], 0.5, 16, &mut rng).unwrap()];
        let eta: Vec<Path> = eta.into_iter().filter(|b| b.all_nodes_in(|x| delta.contains(x))).collect();
        let ext = vec![
            sample_bridge(&[0.5], &[0.9], 0.5, 16, &mut rng).unwrap(),
            sample_bridge(&[-0.6], &[1.5], 0.5, 16, &mut rng).unwrap(),
        ];
        let ext = FkConfig::new(1, 0.5, 16, ext).unwrap();
        let all = FkConfig::new(1, 0.5, 16, eta).unwrap().union(&ext).unwrap();
        for q in [Quadrature::Left, Quadrature::Midpoint] {
            let total = h_fk(&all, &m, &p, q).unwrap();
            let split = h_loc(&all, &delta, &pot, q).unwrap() + h_ext(&ext, &delta, &m, &p, q).unwrap();
            assert!((total - split).abs() < 1e-12 * total.abs().max(1.0), "{total} vs {split}");
        }
    }

    #[test]
    fn h_mp_single_self_bridge() {
        let mut rng = stream(13, 0);
        let b = sample_bridge(&[0.1], &[0.1], 0.5, 16, &mut rng).unwrap();
        let fk = FkConfig::new(1, 0.5, 16, vec![b]).unwrap();
        let mp = encode_fk_to_mp(&fk, 1.0).unwrap();
        let nu = NuSpec::new(1.0, 0.5).unwrap();
        let p = params(0.5, 0.0, 2.0, 1);
        let h = h_mp(&mp, &EnergyModel::zero(), &p, Quadrature::Left, &nu).unwrap();
        let expect = 0.5 * (2.0 * PI * 0.5f64).ln() + nu.mass(&[0], 0.5).ln();
        assert!((h - expect).abs() < 1e-12);
        let mut bad = mp.clone();
        bad.points[0].mark.p = vec![3];
        assert_eq!(h_mp(&bad, &EnergyModel::zero(), &p, Quadrature::Left, &nu).unwrap(), f64::INFINITY);
    }
}
