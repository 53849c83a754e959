use crate::config::{DlrModeName, ExperimentConfig, SamplerKind, StatName};
use crate::output::Sink;
use crate::{Command, Failure};
use fkgas::hamiltonians::{entropy_bound_constant, log_density_rl, Quadrature};
use fkgas::representations::{cut_rl_to_fk, ConfigDocument, FkConfig, RlConfig, FORMAT_VERSION};
use fkgas::rng::{stream, Stream};
use fkgas::samplers::oracle::Estimate;
use fkgas::samplers::{
    dlr_resample, enumeration_oracle, mh::run_chain, mp_oracle, sample_ideal_rl, ChainState, DlrMode,
    DlrSpec, ExactSampler, IdealSpec, MhSettings, OracleSpec,
};
use fkgas::statistics::{
    batch_means, cycle_length_counts, f1, f2, f3, f4, long_cycle_fraction, mean_stderr, relative_entropy_estimate,
    sausage_diagnostics, short_cycles, two_sample_test, Histogram, StatRecord,
};
use fkgas::verification::{run_selected, AcceptanceConfig};
use fkgas::{Error, Result};
use rayon::prelude::*;
use std::path::Path;

type Res<T> = std::result::Result<T, Failure>;
type Obs = Box<dyn Fn(&FkConfig) -> f64 + Sync>;

pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> std::result::Result<(), Failure> {
    let mut sink = Sink::create(out, cfg.hash(), cfg.seed, cmd.name())?;
    let failed = match cmd {
        Command::Sample => sample(cfg, &mut sink)?,
        Command::Oracle => oracle(cfg, &mut sink)?,
        Command::Equivalence => equivalence(cfg, &mut sink)?,
        Command::Dlr => dlr(cfg, &mut sink)?,
        Command::Invariance => invariance(cfg, &mut sink)?,
        Command::Entropy => entropy(cfg, &mut sink)?,
        Command::Sausage => sausage(cfg, &mut sink)?,
        Command::Verify => verify(cfg, &mut sink)?,
    };
    sink.finish()?;
    if failed > 0 {
        Err(Failure::Checks(failed))
    } else {
        Ok(())
    }
}

fn params_json(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(&cfg.model).expect("model section serializes")
}

fn record(cfg: &ExperimentConfig, name: &str, e: (f64, f64), n: usize) -> Result<StatRecord> {
    StatRecord::new(name, e.0, e.1, n, cfg.seed, params_json(cfg))
}

fn est(e: &Estimate) -> (f64, f64) {
    (e.value, e.stderr)
}

/// Scalar observables named in the statistics list.
fn observables(cfg: &ExperimentConfig) -> Vec<(&'static str, Obs)> {
    let s = &cfg.statistics;
    let (n, rule) = (s.long_cycle_n, s.long_cycle_rule);
    s.list
        .iter()
        .filter_map(|name| -> Option<(&'static str, Obs)> {
            Some(match name {
                StatName::Bridges => ("bridges", Box::new(|g: &FkConfig| g.len() as f64)),
                StatName::F1 => ("f1", Box::new(f1)),
                StatName::F2 => ("f2", Box::new(f2)),
                StatName::F3 => ("f3", Box::new(f3)),
                StatName::F4 => ("f4", Box::new(f4)),
                StatName::ShortCycles => ("short_cycles", Box::new(short_cycles)),
                StatName::LongCycles => ("long_cycles", Box::new(move |g: &FkConfig| long_cycle_fraction(g, n, rule))),
                StatName::CycleLengths => return None,
            })
        })
        .collect()
}

/// `total` split as evenly as possible over `k` replicas.
fn shares(total: usize, k: usize) -> Vec<usize> {
    (0..k).map(|r| total / k + usize::from(r < total % k)).collect()
}

fn exact_sampler(cfg: &ExperimentConfig, max_bridges: Option<usize>) -> Result<ExactSampler> {
    let (params, model, steps) = (cfg.params()?, cfg.model()?, cfg.model.steps);
    match cfg.sampler.j_max {
        Some(j) => ExactSampler::with_j_max(params, model, steps, max_bridges, j),
        None => ExactSampler::new(params, model, steps, max_bridges),
    }
}

/// `total` exact draws spread over the replicas; replica `r` uses stream `r`
/// of the given seed and results are concatenated in replica order.
fn exact_draws(cfg: &ExperimentConfig, sampler: &ExactSampler, total: usize, seed: u64) -> Result<Vec<RlConfig>> {
    let parts: Vec<Vec<RlConfig>> = shares(total, cfg.replicas)
        .into_par_iter()
        .enumerate()
        .map(|(r, n)| {
            let mut rng = stream(seed, r as u64);
            (0..n).map(|_| sampler.sample(&mut rng).map(|d| d.config)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn mh_settings(cfg: &ExperimentConfig) -> MhSettings {
    let s = &cfg.sampler;
    MhSettings {
        steps: cfg.model.steps,
        j_max: s.j_max,
        max_bridges: s.max_bridges,
        step_size: s.step_size,
        segment_steps: s.segment_steps.max(1),
        burn_in: s.burn_in,
        thin: s.thin,
        check_every: s.check_every,
        ..Default::default()
    }
}

fn replica_draws(cfg: &ExperimentConfig, r: usize) -> Result<Vec<RlConfig>> {
    let params = cfg.params()?;
    let n = cfg.sampler.samples;
    let mut rng: Stream = stream(cfg.seed, r as u64);
    match cfg.sampler.kind {
        SamplerKind::Exact => {
            let s = exact_sampler(cfg, cfg.sampler.max_bridges)?;
            (0..n).map(|_| s.sample(&mut rng).map(|d| d.config)).collect()
        }
        SamplerKind::Ideal => {
            let spec = IdealSpec { steps: cfg.model.steps, j_max: cfg.sampler.j_max };
            (0..n).map(|_| sample_ideal_rl(&params, &spec, &mut rng)).collect()
        }
        SamplerKind::Mh => {
            let model = cfg.model()?;
            let settings = mh_settings(cfg);
            let st = ChainState::empty(&model, &params, &settings, &rng)?;
            let mut out = Vec::with_capacity(n);
            run_chain(st, &model, &params, &settings, n, &mut rng, |s| {
                out.push(s.config.clone());
                Ok(())
            })?;
            Ok(out)
        }
    }
}

fn sample(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let obs = observables(cfg);
    let runs: Vec<Vec<RlConfig>> = (0..cfg.replicas).into_par_iter().map(|r| replica_draws(cfg, r)).collect::<Result<_>>()?;
    let mcmc = cfg.sampler.kind == SamplerKind::Mh;
    let summarize = |xs: &[f64]| if mcmc { batch_means(xs, 20) } else { mean_stderr(xs) };
    let fks: Vec<Vec<FkConfig>> = runs.iter().map(|run| run.iter().map(cut_rl_to_fk).collect()).collect();
    for (name, f) in &obs {
        let mut per = Vec::new();
        for (r, gs) in fks.iter().enumerate() {
            let xs: Vec<f64> = gs.iter().map(|g| f(g)).collect();
            let e = summarize(&xs);
            sink.stat(Some(r), record(cfg, name, e, xs.len())?)?;
            per.push(e);
        }
        let k = per.len() as f64;
        let mean = per.iter().map(|e| e.0).sum::<f64>() / k;
        let se = per.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt() / k;
        sink.stat(None, record(cfg, name, (mean, se), cfg.sampler.samples * cfg.replicas)?)?;
    }
    if cfg.statistics.list.contains(&StatName::CycleLengths) {
        let mut counts = std::collections::BTreeMap::new();
        for g in fks.iter().flatten() {
            for (l, c) in cycle_length_counts(g)? {
                *counts.entry(l).or_insert(0usize) += c;
            }
        }
        let max = counts.keys().next_back().copied().unwrap_or(1);
        let mut h = Histogram::integer(max);
        for (l, c) in &counts {
            h.add(*l as f64, *c as f64);
        }
        sink.histogram("cycle_lengths", &h, "cycle lengths")?;
    }
    let keep = cfg.sampler.keep;
    let docs = runs.iter().flat_map(|run| {
        run.iter().take(keep).map(|c| ConfigDocument::Rl { version: FORMAT_VERSION, config: c.clone() }.to_json())
    });
    sink.lines("configurations.jsonl", docs)?;
    Ok(0)
}

fn oracle_spec(cfg: &ExperimentConfig, n_max: usize, seed: u64) -> OracleSpec {
    let o = &cfg.oracle;
    let mut spec = OracleSpec::new(n_max, seed);
    spec.order = o.order;
    spec.samples_per_term = o.samples_per_term;
    spec.budget = o.budget;
    spec.steps = cfg.model.steps;
    spec
}

fn oracle(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let (params, model) = (cfg.params()?, cfg.model()?);
    let obs = observables(cfg);
    let refs: Vec<&(dyn Fn(&FkConfig) -> f64 + Sync)> = obs.iter().map(|(_, f)| f.as_ref()).collect();
    let spec = oracle_spec(cfg, cfg.oracle.n_max, cfg.seed);
    let rep = enumeration_oracle(&spec, &model, &params, &refs)?;
    for (route, res) in [("fk", &rep.fk), ("cycle_type", &rep.cycle_type)] {
        sink.stat(None, record(cfg, &format!("{route}.z"), est(&res.z), res.samples)?)?;
        for (n, t) in res.terms.iter().enumerate() {
            sink.stat(None, record(cfg, &format!("{route}.z_term.{n}"), est(t), res.samples)?)?;
        }
        for ((name, _), e) in obs.iter().zip(&res.observables) {
            sink.stat(None, record(cfg, &format!("{route}.{name}"), est(e), res.samples)?)?;
        }
    }
    println!("Z = {} ± {} (bridge sum), {} ± {} (cycle types)", rep.fk.z.value, rep.fk.z.stderr, rep.cycle_type.z.value, rep.cycle_type.z.stderr);
    Ok(0)
}

fn equivalence(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let (params, model, nu) = (cfg.params()?, cfg.model()?, cfg.nu()?);
    let obs = observables(cfg);
    let refs: Vec<&(dyn Fn(&FkConfig) -> f64 + Sync)> = obs.iter().map(|(_, f)| f.as_ref()).collect();
    let spec = oracle_spec(cfg, cfg.oracle.n_max, cfg.seed);
    let rep = enumeration_oracle(&spec, &model, &params, &refs)?;
    let mp = mp_oracle(&spec, &model, &params, &nu, &refs)?;
    let routes = [("fk", &rep.fk), ("rl", &rep.cycle_type), ("mp", &mp)];
    for (route, res) in routes {
        sink.stat(None, record(cfg, &format!("{route}.z"), est(&res.z), res.samples)?)?;
        for ((name, _), e) in obs.iter().zip(&res.observables) {
            sink.stat(None, record(cfg, &format!("{route}.{name}"), est(e), res.samples)?)?;
        }
    }
    let mut failed = 0;
    let tol = cfg.oracle.tolerance;
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (routes[i].1.z.value, routes[j].1.z.value);
            let gap = (a - b).abs() / a.abs().max(b.abs());
            let ok = gap <= tol;
            failed += usize::from(!ok);
            sink.check(
                &format!("z {} vs {}", routes[i].0, routes[j].0),
                ok,
                format!("{a:.6} vs {b:.6}, relative gap {gap:.4} (tolerance {tol})"),
            )
            ?;
        }
    }
    Ok(failed)
}

fn paired_check(sink: &mut Sink, name: &str, diffs: &[f64]) -> Res<bool> {
    let (m, se) = mean_stderr(diffs);
    let ok = if se > 0.0 { m.abs() <= 3.0 * se } else { m == 0.0 };
    sink.check(name, ok, format!("mean change {m:+.5} ± {se:.5}"))?;
    Ok(ok)
}

fn dlr(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let (params, model) = (cfg.params()?, cfg.model()?);
    let delta = cfg.dlr.region(params.dim);
    let sampler = exact_sampler(cfg, None)?;
    let mut failed = 0;
    for (mi, mode) in cfg.dlr.modes.iter().enumerate() {
        let (label, kernel) = match mode {
            DlrModeName::Rejection => ("rejection", DlrMode::Rejection),
            DlrModeName::Mcmc => ("mcmc", DlrMode::Mcmc { steps: cfg.dlr.mcmc_steps }),
        };
        let mut spec = DlrSpec::new(delta.clone(), kernel);
        spec.lower_bound = cfg.dlr.lower_bound;
        let draws = exact_draws(cfg, &sampler, cfg.dlr.samples, cfg.seed.wrapping_add(2 * mi as u64))?;
        let rseed = cfg.seed.wrapping_add(2 * mi as u64 + 1);
        let chunks: Vec<Vec<[f64; 5]>> = shares(draws.len(), cfg.replicas)
            .into_iter()
            .scan(0, |start, n| {
                let r = *start..*start + n;
                *start += n;
                Some(r)
            })
            .collect::<Vec<_>>()
            .into_par_iter()
            .enumerate()
            .map(|(r, range)| {
                let mut rng = stream(rseed, r as u64);
                draws[range]
                    .iter()
                    .map(|rho| {
                        let g = cut_rl_to_fk(rho);
                        let h = dlr_resample(&g, &spec, &model, &params, &mut rng)?;
                        let a = dlr_features(&g, &delta)?;
                        let b = dlr_features(&h, &delta)?;
                        Ok(std::array::from_fn(|k| b[k] - a[k]))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let diffs: Vec<[f64; 5]> = chunks.into_iter().flatten().collect();
        let names = ["f1", "starts_in_delta", "cycles_1", "cycles_2", "cycles_3"];
        for (k, name) in names.iter().enumerate() {
            let d: Vec<f64> = diffs.iter().map(|x| x[k]).collect();
            sink.stat(None, record(cfg, &format!("{label}.{name}.change"), mean_stderr(&d), d.len())?)?;
            failed += usize::from(!paired_check(sink, &format!("dlr {label} {name}"), &d)?);
        }
    }
    Ok(failed)
}

fn dlr_features(g: &FkConfig, delta: &fkgas::geometry::BoxRegion) -> Result<[f64; 5]> {
    let c = cycle_length_counts(g)?;
    let bin = |l: usize| *c.get(&l).unwrap_or(&0) as f64;
    Ok([
        f1(g),
        fkgas::representations::proj_in_indices(g, delta).len() as f64,
        bin(1),
        bin(2),
        bin(3),
    ])
}

fn cycle_share(g: &FkConfig) -> Result<f64> {
    let c = cycle_length_counts(g)?;
    let n: usize = c.iter().map(|(l, k)| l * k).sum();
    let long: usize = c.iter().filter(|(l, _)| **l >= 2).map(|(l, k)| l * k).sum();
    Ok(if n == 0 { 0.0 } else { long as f64 / n as f64 })
}

fn ks_check(sink: &mut Sink, name: &str, xs: &[f64], ys: &[f64]) -> Res<bool> {
    let r = two_sample_test(xs, ys)?;
    let ok = r.p_value > 0.01;
    sink.check(name, ok, format!("D = {:.4}, p = {:.4}", r.statistic, r.p_value))?;
    Ok(ok)
}

fn invariance(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let sampler = exact_sampler(cfg, cfg.sampler.max_bridges)?;
    let n = cfg.invariance.samples;
    let base = exact_draws(cfg, &sampler, n, cfg.seed)?;
    let f_base: Vec<f64> = base.iter().map(|r| f1(&cut_rl_to_fk(r))).collect();
    let c_base: Vec<f64> = base.iter().map(|r| cycle_share(&cut_rl_to_fk(r))).collect::<Result<_>>()?;
    let mut failed = 0;
    let beta = sampler.params.beta;
    for (k, frac) in cfg.invariance.shifts.iter().enumerate() {
        let other = exact_draws(cfg, &sampler, n, cfg.seed.wrapping_add(1 + k as u64))?;
        let gs: Vec<FkConfig> = other.iter().map(|r| cut_rl_to_fk(&r.time_shift(frac * beta))).collect();
        let f: Vec<f64> = gs.iter().map(f1).collect();
        let c: Vec<f64> = gs.iter().map(cycle_share).collect::<Result<_>>()?;
        failed += usize::from(!ks_check(sink, &format!("shift {frac} f1"), &f_base, &f)?);
        failed += usize::from(!ks_check(sink, &format!("shift {frac} cycles"), &c_base, &c)?);
    }
    let other = exact_draws(cfg, &sampler, n, cfg.seed.wrapping_add(1000))?;
    let gs: Vec<FkConfig> = other.iter().map(|r| cut_rl_to_fk(r).time_reversed()).collect();
    let f: Vec<f64> = gs.iter().map(f1).collect();
    let c: Vec<f64> = gs.iter().map(cycle_share).collect::<Result<_>>()?;
    failed += usize::from(!ks_check(sink, "reversal f1", &f_base, &f)?);
    failed += usize::from(!ks_check(sink, "reversal cycles", &c_base, &c)?);
    Ok(failed)
}

fn entropy(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let (params, model) = (cfg.params()?, cfg.model()?);
    let c = model
        .constants
        .ok_or_else(|| Error::Config("the entropy bound needs superstability constants".into()))?;
    let n_max = cfg.entropy.n_max;
    let z = enumeration_oracle(&oracle_spec(cfg, n_max, cfg.seed), &model, &params, &[])?.fk.z;
    let sampler = exact_sampler(cfg, Some(n_max))?;
    let draws = exact_draws(cfg, &sampler, cfg.entropy.samples, cfg.seed.wrapping_add(1))?;
    let lds: Vec<f64> =
        draws.iter().map(|r| log_density_rl(r, &model, &params, Quadrature::Left)).collect::<Result<_>>()?;
    let mut rec = relative_entropy_estimate(&lds, &params, &z, cfg.seed)?;
    rec.params = params_json(cfg);
    let bound = entropy_bound_constant(&params, &c);
    let ok = rec.value <= bound + 3.0 * rec.stderr && rec.value >= -3.0 * rec.stderr;
    let detail = format!("{:.5} ± {:.5}, bound {bound:.5}", rec.value, rec.stderr);
    sink.stat(None, rec)?;
    sink.stat(None, record(cfg, "entropy_bound", (bound, 0.0), 1)?)?;
    sink.check("entropy bound", ok, detail)?;
    Ok(usize::from(!ok))
}

fn sausage(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let s = &cfg.sausage;
    let r = sausage_diagnostics(s.paths, s.dim, s.delta, s.t, s.epsilon, s.steps, cfg.seed)?;
    let p = serde_json::to_value(s).expect("sausage section serializes");
    let n = r.n_paths;
    for (name, v, se) in [
        ("sausage.mean_volume", r.mean_volume, 0.0),
        ("sausage.mean_pieces", r.mean_pieces, 0.0),
        ("sausage.max_ratio", r.max_ratio, 0.0),
        ("sausage.moment", r.moment, r.moment_stderr),
        ("sausage.violations", r.violations as f64, 0.0),
    ] {
        sink.stat(None, StatRecord::new(name, v, se, n, cfg.seed, p.clone())?)?;
    }
    let ratio = r.subsample_ratio();
    let mut failed = 0;
    let ok = r.violations == 0;
    failed += usize::from(!ok);
    sink.check("cube-chain bound", ok, format!("{} violations over {n} paths", r.violations))?;
    let ok = (0.5..=2.0).contains(&ratio);
    failed += usize::from(!ok);
    sink.check("subsample stability", ok, format!("max/min quarter moment ratio {ratio:.4}"))?;
    Ok(failed)
}

fn verify(cfg: &ExperimentConfig, sink: &mut Sink) -> Res<usize> {
    let acc = AcceptanceConfig { seed: cfg.seed, scale: cfg.verify.scale, steps: cfg.model.steps };
    let results = run_selected(&acc, &cfg.verify.criteria);
    let mut failed = 0;
    for r in &results {
        eprintln!("criterion {} took {:.1}s", r.id, r.seconds);
        failed += usize::from(!r.passed);
        sink.check(&format!("criterion {} {}", r.id, r.name), r.passed, r.detail.clone())?;
    }
    Ok(failed)
}
