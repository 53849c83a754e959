"""Smoke test for the fkgas extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import json
import math

import fkgas


def main():
    params = fkgas.ModelParams(0.5, 2.0, 1.0, 1)
    model = fkgas.EnergyModel.bump(1.0, 1.5, 1.0, 1)
    a, b, r = model.constants
    assert b > 0 and r == 1.0

    sampler = fkgas.ExactSampler(params, model, steps=32, max_bridges=3, seed=1)
    draws = sampler.sample(200)
    assert len(draws) == 200
    bound = fkgas.density_upper_bound(params, a, b, r)
    for rho in draws:
        g = rho.cut()
        assert len(g) == rho.total_length()
        assert g.is_permutation_wise()
        assert rho.log_density(model, params) <= bound + 1e-9
        back = g.mp_round_trip(0.5)
        assert len(back) == len(g)
        assert back.cycle_lengths() == g.cycle_lengths()
        assert math.isclose(g.energy(model, params), rho.energy(model, params), rel_tol=1e-12, abs_tol=1e-12)

    busy = next(rho for rho in draws if rho.total_length() > 0)
    doc = busy.to_json()
    assert json.loads(doc)["encoding"] == "rl"
    assert fkgas.RlConfig.from_json(doc).loop_lengths() == busy.loop_lengths()
    g = busy.cut()
    assert fkgas.FkConfig.from_json(g.to_json()).cycle_lengths() == g.cycle_lengths()

    z = fkgas.partition_function(params, model, 3, seed=2, samples_per_term=20_000)
    (zf, sf), (zc, sc) = z["fk"], z["cycle_type"]
    assert abs(zf - zc) <= 4 * math.hypot(sf, sc), z

    unit = fkgas.ModelParams(1.0, 0.0, 1.0, 1)
    assert abs(fkgas.entropy_bound_constant(unit, 0.0, 1.0, 1.0) - 1.0421) < 1e-4
    assert abs(fkgas.zeta(2.0) - math.pi ** 2 / 6) < 1e-12

    free = fkgas.ModelParams(1.0, -1.0, 4.0, 1)
    soup = fkgas.sample_ideal(free, 2000, steps=16, seed=3)
    mean = sum(len(s) for s in soup) / len(soup)
    assert 0.0 < mean < free.loop_measure_mass()

    stat, p = fkgas.ks_test([0.1, 0.4, 0.7, 0.2], [0.3, 0.5, 0.9, 0.6])
    assert 0.0 <= stat <= 1.0 and 0.0 <= p <= 1.0

    for cid, name, passed, detail in fkgas.run_acceptance([2, 11], scale=0.1):
        print(f"criterion {cid} {name}: {'PASS' if passed else 'FAIL'}")
        assert passed, detail

    try:
        fkgas.ModelParams(-1.0, 0.0, 1.0, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("negative beta accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
