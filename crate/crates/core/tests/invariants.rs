//! Structural invariants checked on random configurations.

use fkgas::geometry::BoxRegion;
use fkgas::hamiltonians::{density_upper_bound, h_fk, h_rl, log_density_rl, ModelParams, Quadrature};
use fkgas::interactions::EnergyModel;
use fkgas::representations::{assemble_fk_to_rl, cut_rl_to_fk, decode_mp_to_fk, encode_fk_to_mp, FkConfig, RlConfig};
use fkgas::rng::stream;
use fkgas::samplers::confined_bridge;
use fkgas::statistics::{cycle_length_counts, f4, long_cycle_fraction, short_cycles, LongCycleRule};
use fkgas::trajectories::Loop;
use proptest::prelude::*;
use rand::Rng;

const STEPS: usize = 8;

fn random_rl(seed: u64, dim: usize, beta: f64, max_loops: usize) -> RlConfig {
    let mut rng = stream(seed, 0);
    let n = rng.random_range(0..=max_loops);
    let loops = (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let j = rng.random_range(1..=4);
            Loop::sample(&x, j, beta, STEPS, &mut rng).unwrap()
        })
        .collect();
    RlConfig::new(dim, beta, STEPS, loops).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn same_bridges(a: &FkConfig, b: &FkConfig) -> bool {
    let (a, b) = (a.canonical(), b.canonical());
    a.len() == b.len()
        && a.bridges().iter().zip(b.bridges()).all(|(x, y)| x.start() == y.start() && x.end() == y.end())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_then_assemble_keeps_loops(seed in any::<u64>(), dim in 1usize..=3) {
        let rho = random_rl(seed, dim, 0.5, 5);
        let g = cut_rl_to_fk(&rho);
        prop_assert_eq!(g.len(), rho.total_length());
        prop_assert!(g.is_permutation_wise());
        let back = assemble_fk_to_rl(&g).unwrap();
        let mut a: Vec<usize> = rho.loops.iter().map(|l| l.length).collect();
        let mut b: Vec<usize> = back.loops.iter().map(|l| l.length).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        prop_assert!(same_bridges(&g, &cut_rl_to_fk(&back)));
    }

    #[test]
    fn marked_point_round_trip(seed in any::<u64>(), dim in 1usize..=3, r in 0.05f64..2.0) {
        let g = cut_rl_to_fk(&random_rl(seed, dim, 0.7, 5));
        let mp = encode_fk_to_mp(&g, r).unwrap();
        prop_assert!(mp.is_authorized());
        prop_assert!(mp.is_permutation_wise());
        let back = decode_mp_to_fk(&mp).unwrap();
        prop_assert!(same_bridges(&g, &back));
        prop_assert_eq!(cycle_length_counts(&g).unwrap(), cycle_length_counts(&back).unwrap());
    }

    #[test]
    fn energy_invariant_under_time_shift(seed in any::<u64>(), k in 0usize..16) {
        let params = ModelParams::new(0.5, 0.0, 40.0, 1).unwrap();
        let model = EnergyModel::bump(1.0, 0.5, 0.25, 1).unwrap();
        let rho = random_rl(seed, 1, params.beta, 4);
        let h = h_rl(&rho, &model, &params, Quadrature::Left).unwrap();
        let s = k as f64 * params.beta / STEPS as f64;
        let hs = h_rl(&rho.time_shift(s), &model, &params, Quadrature::Left).unwrap();
        prop_assert!(close(h, hs), "{} vs {}", h, hs);
    }

    #[test]
    fn energy_invariant_under_time_reversal(seed in any::<u64>()) {
        let params = ModelParams::new(0.5, 0.0, 40.0, 1).unwrap();
        let model = EnergyModel::bump(1.0, 0.5, 0.25, 1).unwrap();
        let g = cut_rl_to_fk(&random_rl(seed, 1, params.beta, 4));
        let h = h_fk(&g, &model, &params, Quadrature::Left).unwrap();
        let hr = h_fk(&g.time_reversed(), &model, &params, Quadrature::Left).unwrap();
        prop_assert!(close(h, hr), "{} vs {}", h, hr);
        prop_assert!(same_bridges(&g, &g.time_reversed().time_reversed()));
    }

    #[test]
    fn density_never_exceeds_superstability_bound(seed in any::<u64>(), mu in -2.0f64..3.0) {
        let params = ModelParams::new(0.5, mu, 4.0, 1).unwrap();
        let model = EnergyModel::bump(1.0, 0.6, 0.3, 1).unwrap();
        let c = model.constants.unwrap();
        let rho = random_rl(seed, 1, params.beta, 8);
        let ld = log_density_rl(&rho, &model, &params, Quadrature::Left).unwrap();
        prop_assert!(ld <= density_upper_bound(&params, &c) + 1e-9);
    }

    #[test]
    fn removing_bridges_is_lipschitz(seed in any::<u64>(), k in 1usize..4) {
        let g = cut_rl_to_fk(&random_rl(seed, 1, 0.5, 6));
        prop_assume!(g.len() >= k);
        let mut rng = stream(seed, 1);
        let mut keep: Vec<usize> = (0..g.len()).collect();
        for _ in 0..k {
            let i = rng.random_range(0..keep.len());
            keep.remove(i);
        }
        let h = g.subset(&keep);
        prop_assert!((f4(&g) - f4(&h)).abs() <= 2.0 * k as f64 + 1e-12);
        prop_assert!((short_cycles(&g) - short_cycles(&h)).abs() <= k as f64 + 1e-12);
    }

    #[test]
    fn long_cycle_fraction_is_monotone(seed in any::<u64>()) {
        let g = cut_rl_to_fk(&random_rl(seed, 2, 0.5, 6));
        for n in 0..6 {
            let lit = long_cycle_fraction(&g, n, LongCycleRule::Literal);
            let one = long_cycle_fraction(&g, n, LongCycleRule::PeriodOneLong);
            prop_assert!(lit >= 0.0 && lit <= one);
        }
        for rule in [LongCycleRule::Literal, LongCycleRule::PeriodOneLong] {
            let fr: Vec<f64> = (0..6).map(|n| long_cycle_fraction(&g, n, rule)).collect();
            prop_assert!(fr.windows(2).all(|w| w[1] <= w[0]), "{:?}", fr);
        }
    }

    #[test]
    fn confined_bridges_stay_inside(seed in any::<u64>(), t in 0.01f64..0.3) {
        let delta = BoxRegion::cube(2, -0.5, 0.5);
        let mut rng = stream(seed, 2);
        let x = [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)];
        let y = [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)];
        let b = confined_bridge(&x, &y, t, &delta, STEPS, &mut rng, 1_000_000).unwrap().bridge;
        prop_assert!(b.all_nodes_in(|p| delta.contains(p)));
        prop_assert_eq!(b.start(), &x[..]);
        prop_assert_eq!(b.end(), &y[..]);
    }
}
