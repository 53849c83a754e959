//! Brute-force evaluation of the partition function of tiny systems, truncated
//! to at most `n_max` bridges, by three independent expansions:
//!
//! * **FK**: tensor Gauss–Legendre quadrature over the `N` starting points, an
//!   exact sum over `S_N`, and Monte Carlo over the bridges.
//! * **Cycle types**: the same integral regrouped by cycle type, with
//!   `N!·Π_j 1/(δ_j! j^{δ_j})` permutations per type and one loop per cycle.
//! * **Marked points**: plain Monte Carlo over positions, lattice marks drawn
//!   from `ν`, selectors and standardized shapes, weighted by `e^{βμN − H_mp}`.
//!
//! Every route also returns ratio estimates of `E[f]` for the supplied
//! observables, with delta-method standard errors.

use crate::error::{Error, Result};
use crate::hamiltonians::{h_fk, h_mp, h_rl, ModelParams, NuSpec, Quadrature};
use crate::interactions::EnergyModel;
use crate::representations::{cut_rl_to_fk, decode_mp_to_fk, FkConfig, MarkedPoint, MpConfig, RlConfig};
use crate::rng::stream;
use crate::trajectories::{sample_bridge, sample_standard_shape, unnormalized_mass, Loop, MarkTriple};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Observable<'a> = &'a (dyn Fn(&FkConfig) -> f64 + Sync);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub n_max: usize,
    /// Gauss–Legendre nodes per panel; panels are cut at `breakpoints`.
    pub order: usize,
    /// Interior breakpoints of the per-axis rule (those outside the window are ignored).
    pub breakpoints: Vec<f64>,
    pub samples_per_term: usize,
    /// Upper bound on `n_max! · nodes^(d·n_max)`.
    pub budget: f64,
    pub seed: u64,
    pub steps: usize,
    pub quad: Quadrature,
}

impl OracleSpec {
    pub fn new(n_max: usize, seed: u64) -> Self {
        Self {
            n_max,
            order: 6,
            breakpoints: vec![0.0, 1.0],
            samples_per_term: 100_000,
            budget: 1e8,
            seed,
            steps: crate::trajectories::DEFAULT_STEPS,
            quad: Quadrature::Left,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn relative_error(&self) -> f64 {
        self.stderr / self.value.abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteResult {
    pub z: Estimate,
    /// Contribution of each bridge count `N = 0..=n_max`.
    pub terms: Vec<Estimate>,
    pub observables: Vec<Estimate>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub fk: RouteResult,
    pub cycle_type: RouteResult,
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    (x, w)
}

/// Composite rule on `[a, b]` with panels cut at the breakpoints inside it.
pub fn composite_rule(a: f64, b: f64, breakpoints: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|c| *c > a && *c < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.extend(inner);
    cuts.push(b);
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for p in cuts.windows(2) {
        let (lo, hi) = (p[0], p[1]);
        let half = 0.5 * (hi - lo);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + half * (x + 1.0));
            ws.push(half * w);
        }
    }
    (xs, ws)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Partitions of `n` as non-increasing part lists.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// `Π_j 1/(δ_j! j^{δ_j})` for the cycle type given by its part list.
pub fn cycle_type_weight(parts: &[usize]) -> f64 {
    let mut w = 1.0;
    let mut counts = std::collections::BTreeMap::new();
    for &p in parts {
        *counts.entry(p).or_insert(0usize) += 1;
    }
    for (j, d) in counts {
        w /= factorial(d) * (j as f64).powi(d as i32);
    }
    w
}

/// Running sums of `h = e^{−H}` and `g_k = f_k·h` at one node.
#[derive(Clone, Debug)]
struct NodeStats {
    n: usize,
    sh: f64,
    shh: f64,
    sg: Vec<f64>,
    sgg: Vec<f64>,
    sgh: Vec<f64>,
}

impl NodeStats {
    fn new(k: usize) -> Self {
        Self { n: 0, sh: 0.0, shh: 0.0, sg: vec![0.0; k], sgg: vec![0.0; k], sgh: vec![0.0; k] }
    }

    fn push(&mut self, h: f64, f: &[f64]) {
        self.n += 1;
        self.sh += h;
        self.shh += h * h;
        for (k, v) in f.iter().enumerate() {
            let g = v * h;
            self.sg[k] += g;
            self.sgg[k] += g * g;
            self.sgh[k] += g * h;
        }
    }
}

/// Weighted sums over nodes: `A_1 = Σ w·mean(h)`, `A_k = Σ w·mean(g_k)` and
/// the variances/covariances of these sums.
#[derive(Clone, Debug)]
struct Acc {
    a1: f64,
    v11: f64,
    af: Vec<f64>,
    vff: Vec<f64>,
    v1f: Vec<f64>,
    samples: usize,
}

impl Acc {
    fn new(k: usize) -> Self {
        Self { a1: 0.0, v11: 0.0, af: vec![0.0; k], vff: vec![0.0; k], v1f: vec![0.0; k], samples: 0 }
    }

    fn add_node(&mut self, w: f64, s: &NodeStats) {
        let n = s.n as f64;
        self.samples += s.n;
        let mh = s.sh / n;
        let var_h = if s.n > 1 { (s.shh - n * mh * mh).max(0.0) / (n - 1.0) } else { 0.0 };
        self.a1 += w * mh;
        self.v11 += w * w * var_h / n;
        for k in 0..self.af.len() {
            let mg = s.sg[k] / n;
            let (var_g, cov) = if s.n > 1 {
                (
                    (s.sgg[k] - n * mg * mg).max(0.0) / (n - 1.0),
                    (s.sgh[k] - n * mg * mh) / (n - 1.0),
                )
            } else {
                (0.0, 0.0)
            };
            self.af[k] += w * mg;
            self.vff[k] += w * w * var_g / n;
            self.v1f[k] += w * w * cov / n;
        }
    }

    fn add_exact(&mut self, value: f64, f: &[f64]) {
        self.a1 += value;
        for (k, v) in f.iter().enumerate() {
            self.af[k] += value * v;
        }
    }

    fn merge(&mut self, o: &Acc) {
        self.a1 += o.a1;
        self.v11 += o.v11;
        self.samples += o.samples;
        for k in 0..self.af.len() {
            self.af[k] += o.af[k];
            self.vff[k] += o.vff[k];
            self.v1f[k] += o.v1f[k];
        }
    }

    fn estimate(&self) -> Estimate {
        Estimate { value: self.a1, stderr: self.v11.sqrt() }
    }
}

fn finish(terms: Vec<Acc>, k: usize) -> RouteResult {
    let mut total = Acc::new(k);
    for t in &terms {
        total.merge(t);
    }
    let z = total.a1;
    let observables = (0..k)
        .map(|i| {
            let r = total.af[i] / z;
            let var = (total.vff[i] - 2.0 * r * total.v1f[i] + r * r * total.v11).max(0.0) / (z * z);
            Estimate { value: r, stderr: var.sqrt() }
        })
        .collect();
    RouteResult {
        z: total.estimate(),
        terms: terms.iter().map(|t| t.estimate()).collect(),
        observables,
        samples: total.samples,
    }
}

fn check_spec(spec: &OracleSpec, params: &ModelParams, nodes_per_axis: usize) -> Result<()> {
    if spec.n_max > 6 {
        return Err(Error::Config(format!("n_max must be at most 6, got {}", spec.n_max)));
    }
    if spec.order == 0 || spec.samples_per_term < 2 {
        return Err(Error::Config("oracle needs a positive order and at least 2 samples per term".into()));
    }
    let cost = factorial(spec.n_max) * (nodes_per_axis as f64).powi((params.dim * spec.n_max) as i32);
    if cost > spec.budget {
        return Err(Error::Budget { what: "enumeration oracle".into(), estimate: cost, budget: spec.budget });
    }
    Ok(())
}

/// Decompose a linear node index into per-axis indices.
fn node_positions(mut idx: usize, n_pts: usize, dim: usize, xs: &[f64], ws: &[f64], out: &mut Vec<f64>) -> f64 {
    out.clear();
    let q = xs.len();
    let mut w = 1.0;
    for _ in 0..n_pts * dim {
        let k = idx % q;
        idx /= q;
        out.push(xs[k]);
        w *= ws[k];
    }
    w
}

fn stream_id(route: u64, term: u64, node: u64) -> u64 {
    (route << 56) | (term << 32) | node
}

/// Routes FK and cycle type of the truncated partition function.
pub fn enumeration_oracle(
    spec: &OracleSpec,
    model: &EnergyModel,
    params: &ModelParams,
    observables: &[Observable],
) -> Result<OracleReport> {
    let h = params.side / 2.0;
    let (xs, ws) = composite_rule(-h, h, &spec.breakpoints, spec.order);
    check_spec(spec, params, xs.len())?;
    Ok(OracleReport {
        fk: fk_route(spec, model, params, observables, &xs, &ws)?,
        cycle_type: cycle_route(spec, model, params, observables, &xs, &ws)?,
    })
}

fn empty_term(model: &EnergyModel, params: &ModelParams, steps: usize, observables: &[Observable], k: usize) -> Result<Acc> {
    let empty = FkConfig::empty(params.dim, params.beta, steps)?;
    let mut acc = Acc::new(k);
    let e0 = (-params.volume() - params.beta * model.empty_energy()).exp();
    let f: Vec<f64> = observables.iter().map(|o| o(&empty)).collect();
    acc.add_exact(e0, &f);
    Ok(acc)
}

fn fk_route(
    spec: &OracleSpec,
    model: &EnergyModel,
    params: &ModelParams,
    observables: &[Observable],
    xs: &[f64],
    ws: &[f64],
) -> Result<RouteResult> {
    let k = observables.len();
    let d = params.dim;
    let mut terms = vec![empty_term(model, params, spec.steps, observables, k)?];
    for n in 1..=spec.n_max {
        let nodes = xs.len().pow((n * d) as u32);
        let per_node = spec.samples_per_term.div_ceil(nodes).max(2);
        let pref = (-params.volume() + params.beta * params.mu * n as f64).exp() / factorial(n);
        let mut acc = Acc::new(k);
        for (si, sigma) in permutations(n).iter().enumerate() {
            let results: Vec<Result<(f64, NodeStats)>> = (0..nodes)
                .into_par_iter()
                .map(|node| {
                    let mut rng = stream(spec.seed, stream_id(0, ((n as u64) << 8) | si as u64, node as u64));
                    let mut x = Vec::new();
                    let wq = node_positions(node, n, d, xs, ws, &mut x);
                    let pt = |i: usize| &x[i * d..(i + 1) * d];
                    let mut w = wq * pref;
                    for i in 0..n {
                        w *= unnormalized_mass(pt(i), pt(sigma[i]), params.beta);
                    }
                    let mut st = NodeStats::new(k);
                    let mut f = vec![0.0; k];
                    for _ in 0..per_node {
                        let bridges = (0..n)
                            .map(|i| sample_bridge(pt(i), pt(sigma[i]), params.beta, spec.steps, &mut rng))
                            .collect::<Result<Vec<_>>>()?;
                        let g = FkConfig::new(d, params.beta, spec.steps, bridges)?;
                        let e = h_fk(&g, model, params, spec.quad)?;
                        let hval = (-e).exp();
                        if hval > 0.0 {
                            for (v, o) in f.iter_mut().zip(observables) {
                                *v = o(&g);
                            }
                        }
                        st.push(hval, &f);
                    }
                    Ok((w, st))
                })
                .collect();
            for r in results {
                let (w, st) = r?;
                acc.add_node(w, &st);
            }
        }
        terms.push(acc);
    }
    Ok(finish(terms, k))
}

fn cycle_route(
    spec: &OracleSpec,
    model: &EnergyModel,
    params: &ModelParams,
    observables: &[Observable],
    xs: &[f64],
    ws: &[f64],
) -> Result<RouteResult> {
    let k = observables.len();
    let d = params.dim;
    let m = spec.steps;
    let mut terms = vec![empty_term(model, params, m, observables, k)?];
    for n in 1..=spec.n_max {
        let mut acc = Acc::new(k);
        for (pi, parts) in partitions(n).iter().enumerate() {
            let loops = parts.len();
            let nodes = xs.len().pow((loops * d) as u32);
            let per_node = spec.samples_per_term.div_ceil(nodes).max(2);
            let mut pref = (-params.volume() + params.beta * params.mu * n as f64).exp() * cycle_type_weight(parts);
            for &j in parts {
                pref *= (2.0 * PI * params.beta * j as f64).powf(-(d as f64) / 2.0);
            }
            let results: Vec<Result<(f64, NodeStats)>> = (0..nodes)
                .into_par_iter()
                .map(|node| {
                    let mut rng = stream(spec.seed, stream_id(1, ((n as u64) << 8) | pi as u64, node as u64));
                    let mut x = Vec::new();
                    let w = node_positions(node, loops, d, xs, ws, &mut x) * pref;
                    let mut st = NodeStats::new(k);
                    let mut f = vec![0.0; k];
                    for _ in 0..per_node {
                        let ls = parts
                            .iter()
                            .enumerate()
                            .map(|(i, &j)| Loop::sample(&x[i * d..(i + 1) * d], j, params.beta, m, &mut rng))
                            .collect::<Result<Vec<_>>>()?;
                        let rho = RlConfig::new(d, params.beta, m, ls)?;
                        let e = h_rl(&rho, model, params, spec.quad)?;
                        let hval = (-e).exp();
                        if hval > 0.0 {
                            let g = cut_rl_to_fk(&rho);
                            for (v, o) in f.iter_mut().zip(observables) {
                                *v = o(&g);
                            }
                        }
                        st.push(hval, &f);
                    }
                    Ok((w, st))
                })
                .collect();
            for r in results {
                let (w, st) = r?;
                acc.add_node(w, &st);
            }
        }
        terms.push(acc);
    }
    Ok(finish(terms, k))
}

/// Marked-point route: `Z = e^{−L^d} Σ_N (1/N!) ∫ dx^N Σ_p ν(p) ∫du ∫W_nor(dω) e^{βμN − H_mp}`.
///
/// Positions are sampled uniformly rather than by quadrature because the
/// target cells make the integrand discontinuous in the positions. The
/// `samples_per_term` draws of each `N` are split into 64 independent batches.
pub fn mp_oracle(
    spec: &OracleSpec,
    model: &EnergyModel,
    params: &ModelParams,
    nu: &NuSpec,
    observables: &[Observable],
) -> Result<RouteResult> {
    if spec.n_max > 6 {
        return Err(Error::Config(format!("n_max must be at most 6, got {}", spec.n_max)));
    }
    let k = observables.len();
    let d = params.dim;
    let h = params.side / 2.0;
    let batches = 64usize;
    let per_batch = spec.samples_per_term.div_ceil(batches).max(2);
    let mut terms = vec![empty_term(model, params, spec.steps, observables, k)?];
    for n in 1..=spec.n_max {
        let w = (-params.volume()).exp() * params.volume().powi(n as i32) / factorial(n);
        let results: Vec<Result<NodeStats>> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream(spec.seed, stream_id(2, n as u64, b as u64));
                let mut st = NodeStats::new(k);
                let mut f = vec![0.0; k];
                for _ in 0..per_batch {
                    let mut points = Vec::with_capacity(n);
                    for _ in 0..n {
                        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-h..h)).collect();
                        let p = nu.sample(d, params.beta, &mut rng);
                        let u: f64 = rng.random();
                        let omega = sample_standard_shape(d, spec.steps, &mut rng)?;
                        points.push(MarkedPoint { x, mark: MarkTriple { p, u, omega } });
                    }
                    let g = MpConfig { dim: d, beta: params.beta, r: nu.r, points };
                    let e = h_mp(&g, model, params, spec.quad, nu)?;
                    let hval = if e == f64::INFINITY { 0.0 } else { (params.beta * params.mu * n as f64 - e).exp() };
                    if hval > 0.0 {
                        let fk = decode_mp_to_fk(&g)?;
                        for (v, o) in f.iter_mut().zip(observables) {
                            *v = o(&fk);
                        }
                    }
                    st.push(hval, &f);
                }
                Ok(st)
            })
            .collect();
        // Batches are exchangeable: pool them into one node.
        let mut pooled = NodeStats::new(k);
        for r in results {
            let s = r?;
            pooled.n += s.n;
            pooled.sh += s.sh;
            pooled.shh += s.shh;
            for i in 0..k {
                pooled.sg[i] += s.sg[i];
                pooled.sgg[i] += s.sgg[i];
                pooled.sgh[i] += s.sgh[i];
            }
        }
        let mut acc = Acc::new(k);
        acc.add_node(w, &pooled);
        terms.push(acc);
    }
    Ok(finish(terms, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            // Exact for polynomials of degree 2n − 1.
            let deg = 2 * n - 2;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(a, b)| a.powi(deg as i32) * b).sum();
            assert!((q - exact).abs() < 1e-13, "n={n}");
        }
        let (xs, ws) = composite_rule(-0.5, 0.5, &[0.0, 1.0], 4);
        assert_eq!(xs.len(), 8);
        assert!((ws.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn permutation_counts_by_cycle_type() {
        for n in 1..=6 {
            let total: f64 = partitions(n).iter().map(|p| factorial(n) * cycle_type_weight(p)).sum();
            assert!((total - factorial(n)).abs() < 1e-9);
        }
        assert_eq!(partitions(4).len(), 5);
    }

    #[test]
    fn budget_refusal() {
        let mut spec = OracleSpec::new(6, 1);
        spec.budget = 1e3;
        let p = ModelParams::new(0.5, 0.0, 1.0, 2).unwrap();
        let err = enumeration_oracle(&spec, &EnergyModel::zero(), &p, &[]).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }

    #[test]
    fn free_gas_very_negative_mu_reduces_to_empty_term() {
        let mut spec = OracleSpec::new(2, 3);
        spec.samples_per_term = 200;
        spec.order = 2;
        spec.steps = 8;
        let p = ModelParams::new(0.5, -60.0, 1.0, 1).unwrap();
        let r = enumeration_oracle(&spec, &EnergyModel::zero(), &p, &[]).unwrap();
        assert!((r.fk.z.value - (-1.0f64).exp()).abs() < 1e-12);
        assert!(r.fk.z.value >= (-1.0f64).exp() * (1.0 - 1e-12));
    }

    #[test]
    fn routes_agree_on_hard_core() {
        let mut spec = OracleSpec::new(2, 5);
        spec.samples_per_term = 20_000;
        spec.order = 4;
        spec.steps = 16;
        let p = ModelParams::new(0.5, 1.0, 1.0, 1).unwrap();
        let m = EnergyModel::hard_core(0.1, 1.0, 1).unwrap();
        let r = enumeration_oracle(&spec, &m, &p, &[]).unwrap();
        let diff = r.fk.z.value - r.cycle_type.z.value;
        let se = (r.fk.z.stderr.powi(2) + r.cycle_type.z.stderr.powi(2)).sqrt();
        assert!(diff.abs() < 4.0 * se + 0.01 * r.fk.z.value, "{r:?}");
    }
}
