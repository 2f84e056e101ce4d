import math

import numpy as np
import pytest

import cpl


def test_sample_shape_and_determinism():
    a = cpl.sample("bernoulli", d=2, N=32, u=0.7, seed=5)
    b = cpl.sample("bernoulli", d=2, N=32, u=0.7, seed=5)
    occ = a.occupancy()
    assert occ.shape == (32, 32)
    assert occ.dtype == np.uint8
    assert int(occ.sum()) == a.count()
    assert np.array_equal(occ, b.occupancy())
    assert not np.array_equal(occ, cpl.sample("bernoulli", d=2, N=32, u=0.7, seed=6).occupancy())


def test_full_lattice_quantities():
    c = cpl.sample("full", d=2, N=16, u=1.0, seed=1, wrap=True)
    sites, unique = cpl.largest_component(c)
    assert sites.shape == (256, 2)
    assert unique
    assert cpl.chemical_distance(c, [0, 0], [3, 4]) == 7
    square = [[x, y] for x in range(3) for y in range(3)]
    assert cpl.edge_boundary(c, square) == 12


def test_disconnected_distance_is_infinite():
    c = cpl.sample("bernoulli", d=2, N=16, u=0.2, seed=4)
    pts = [tuple(p) for p in np.argwhere(c.occupancy() == 1)]
    sites, _ = cpl.largest_component(c)
    big = {tuple(p) for p in sites.tolist()}
    outside = next(p for p in pts if p not in big)
    inside = next(iter(big))
    assert math.isinf(cpl.chemical_distance(c, list(inside), list(outside)))
    with pytest.raises(ValueError):
        cpl.chemical_distance(cpl.sample("bernoulli", N=8, u=0.0), [0, 0], [1, 0])


def test_walk_and_return_probability():
    c = cpl.sample("full", d=2, N=32, u=1.0, seed=1, wrap=True)
    path = cpl.simulate_walk(c, [0, 0], 50, 3)
    assert path.shape == (51, 2)
    steps = np.abs(np.diff(path, axis=0)).sum(axis=1)
    assert set(steps.tolist()) <= {0, 1}
    p, horizon, truncated = cpl.return_probability(c, [0, 0], 8)
    assert horizon == 8 and not truncated
    assert p[0] == 1.0
    assert p[2] == pytest.approx(0.25)


def test_corrector_vanishes_on_full_lattice():
    c = cpl.sample("full", d=2, N=32, u=1.0, seed=1, wrap=True)
    sites, chi, residual = cpl.estimate_corrector(c, [0, 0], 5)
    assert sites.shape[0] == chi.shape[0] == 121
    assert np.abs(chi).max() < 1e-8
    assert residual < 1e-8


def test_heuristic_profile():
    c = cpl.sample("bernoulli", d=2, N=48, u=0.75, seed=2, low=-24)
    r = cpl.heuristic_profile(c, 12, budget=10, seed=1)
    assert r["candidates"] > 0
    assert 0 < r["min_ratio"] < math.inf
    assert r["argmin"].shape[1] == 2


def test_run_experiment_and_errors():
    keys = cpl.spec_keys()
    assert "u" in keys and "seed" in keys
    rep = cpl.run_experiment({"N": 48, "low": -24, "R": 8, "iso_budget": 9, "check_clusters": True})
    assert [c["name"] for c in rep["checks"]] == ["clusters"]
    assert 0 < rep["checks"][0]["measured"]["eta_hat"] <= 1
    assert "msd_times = 1,2" in cpl.format_spec({"msd_times": [1, 2]})
    with pytest.raises(ValueError):
        cpl.run_experiment({"no_such_key": 1})
    with pytest.raises(ValueError):
        cpl.sample("no_such_model")
    with pytest.raises(ValueError):
        cpl.edge_boundary(cpl.sample("bernoulli", N=8, u=0.0), [[0, 0]])
