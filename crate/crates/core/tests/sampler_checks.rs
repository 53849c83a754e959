//! Statistical cross-checks between samplers.

use fkgas::geometry::BoxRegion;
use fkgas::hamiltonians::ModelParams;
use fkgas::interactions::EnergyModel;
use fkgas::representations::{dlr_split, FkConfig};
use fkgas::rng::stream;
use fkgas::samplers::{
    confined_bridge, dlr_resample, enumeration_oracle, sample_ideal_rl, uniform_shift, DlrMode, DlrSpec, IdealSpec,
    OracleSpec,
};
use fkgas::statistics::{f1, mean_stderr, two_sample_test};
use fkgas::trajectories::{Path, TimeGrid};

#[test]
fn ideal_sampler_matches_free_oracle() {
    let params = ModelParams::new(0.5, -2.0, 1.0, 1).unwrap();
    let model = EnergyModel::zero();
    let count = |g: &FkConfig| g.len() as f64;
    let mut spec = OracleSpec::new(3, 11);
    spec.steps = 16;
    spec.samples_per_term = 50_000;
    let oracle = enumeration_oracle(&spec, &model, &params, &[&count]).unwrap().fk.observables[0];
    let mut rng = stream(12, 0);
    let ideal = IdealSpec { steps: 16, j_max: None };
    let xs: Vec<f64> =
        (0..40_000).map(|_| sample_ideal_rl(&params, &ideal, &mut rng).unwrap().total_length() as f64).collect();
    let (m, se) = mean_stderr(&xs);
    let comb = (se * se + oracle.stderr * oracle.stderr).sqrt();
    assert!((m - oracle.value).abs() <= 3.0 * comb, "ideal {m}±{se}, oracle {}±{}", oracle.value, oracle.stderr);
}

#[test]
fn uniform_shift_is_centered() {
    let mut rng = stream(13, 0);
    let n = 20_000;
    let side = 2.0;
    let mut sums = [0.0; 2];
    for _ in 0..n {
        let v = uniform_shift(2, side, &mut rng);
        sums[0] += v[0];
        sums[1] += v[1];
    }
    let se = side / 12f64.sqrt() / (n as f64).sqrt();
    for s in sums {
        assert!((s / n as f64).abs() <= 3.0 * se);
    }
}

#[test]
fn confinement_is_harder_near_the_boundary() {
    let delta = BoxRegion::cube(1, -0.5, 0.5);
    let rate = |x: f64, seed: u64| {
        let mut rng = stream(seed, 0);
        let n = 4000;
        let attempts: usize =
            (0..n).map(|_| confined_bridge(&[x], &[x], 0.05, &delta, 16, &mut rng, 1_000_000).unwrap().attempts).sum();
        let p = n as f64 / attempts as f64;
        (p, (p * (1.0 - p) / attempts as f64).sqrt())
    };
    let (edge, se_e) = rate(0.45, 14);
    let (center, se_c) = rate(0.0, 15);
    assert!(center - edge > 3.0 * (se_e * se_e + se_c * se_c).sqrt(), "edge {edge}, center {center}");
}

fn static_bridge(x: f64, beta: f64, steps: usize) -> Path {
    Path::constant(&[x], TimeGrid::new(beta, steps).unwrap())
}

#[test]
fn kernel_ignores_distant_exteriors() {
    let params = ModelParams::new(0.1, -1.0, 1.0, 1).unwrap();
    let model = EnergyModel::bump(2.0, 0.3, 0.2, 1).unwrap();
    let steps = 16;
    let delta = BoxRegion::cube(1, -0.1, 0.1);
    let spec = DlrSpec::new(delta.clone(), DlrMode::Rejection);
    let near = FkConfig::new(1, 0.1, steps, vec![static_bridge(0.45, 0.1, steps)]).unwrap();
    let far = FkConfig::new(1, 0.1, steps, vec![static_bridge(0.45, 0.1, steps), static_bridge(-0.45, 0.1, steps)])
        .unwrap();
    let draw = |g: &FkConfig, seed: u64| {
        let mut rng = stream(seed, 0);
        let (mut counts, mut f) = (Vec::new(), Vec::new());
        for _ in 0..3000 {
            let r = dlr_resample(g, &spec, &model, &params, &mut rng).unwrap();
            counts.push(dlr_split(&r, &delta).interior.len() as f64);
            f.push(f1(&r));
        }
        (counts, f)
    };
    let (ca, fa) = draw(&near, 16);
    let (cb, fb) = draw(&far, 17);
    assert!(two_sample_test(&ca, &cb).unwrap().p_value > 0.01);
    assert!(two_sample_test(&fa, &fb).unwrap().p_value > 0.01);
}
