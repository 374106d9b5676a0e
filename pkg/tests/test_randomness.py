"""Coupling distributions and deterministic site-keyed sampling."""

import numpy as np
import pytest

from idslab import randomness
from idslab.randomness import (
    CouplingDistribution,
    piecewise_linear_density,
    sample_config,
    shift_config,
    substitute,
    truncated_normal,
    uniform,
)


def test_sampling_reproducible_and_in_support():
    dist = uniform(0.0, 1.0)
    a = sample_config(dist, [(0,), (1,), (2,)], seed=42)
    b = sample_config(dist, [(0,), (1,), (2,)], seed=42)
    assert a.values == b.values
    assert all(0.0 <= v <= 1.0 for v in a.values.values())


def test_enlarging_site_set_keeps_existing_draws():
    dist = uniform(0.0, 1.0)
    small = sample_config(dist, [(0,), (1,), (2,)], seed=7)
    big = sample_config(dist, [(0,), (1,), (2,), (3,)], seed=7)
    for site in small.values:
        assert big.values[site] == small.values[site]


def test_law_of_large_numbers_uniform_mean():
    dist = uniform(0.0, 1.0)
    sites = [(i,) for i in range(100_000)]
    config = sample_config(dist, sites, seed=2)
    mean = float(np.mean(list(config.values.values())))
    assert abs(mean - 0.5) < 0.005


def test_different_seeds_differ():
    dist = uniform(0.0, 1.0)
    a = sample_config(dist, [(0,)], seed=1)
    b = sample_config(dist, [(0,)], seed=2)
    assert a.values != b.values


def test_shift_config():
    omega = randomness.RandomConfig(values={(0,): 0.25, (1,): 0.75})
    assert shift_config(omega, (0,)).values == omega.values
    shifted = shift_config(omega, (1,))
    assert shifted.values == {(1,): 0.25, (2,): 0.75}
    assert shift_config(shifted, (-1,)).values == omega.values


def test_shift_composition():
    omega = randomness.RandomConfig(values={(0, 0): 1.0, (2, -1): 2.0})
    once = shift_config(shift_config(omega, (1, 1)), (2, -2))
    combined = shift_config(omega, (3, -1))
    assert once.values == combined.values


def test_substitute():
    dist = uniform(0.0, 1.0)
    omega = sample_config(dist, [(0,), (1,)], seed=5)
    same = substitute(omega, (0,), omega.values[(0,)])
    assert same.values == omega.values
    zeroed = substitute(omega, (0,), 0.0)
    assert zeroed.values[(0,)] == 0.0
    assert zeroed.values[(1,)] == omega.values[(1,)]


def test_substitutions_at_distinct_sites_commute():
    omega = randomness.RandomConfig(values={(0,): 0.1, (1,): 0.2})
    ab = substitute(substitute(omega, (0,), 0.5), (1,), 0.9)
    ba = substitute(substitute(omega, (1,), 0.9), (0,), 0.5)
    assert ab.values == ba.values


def test_substitute_warns_outside_support():
    dist = uniform(0.0, 1.0)
    omega = sample_config(dist, [(0,)], seed=5)
    with pytest.warns(UserWarning):
        substitute(omega, (0,), 2.0)


def test_uniform_metadata():
    dist = uniform(0.0, 0.5)
    assert dist.sup_density == pytest.approx(2.0)
    assert dist.bv_norm == pytest.approx(4.0)


def test_truncated_normal_density_and_ppf():
    dist = truncated_normal(mean=0.5, sigma=0.2, lo=0.0, hi=1.0)
    grid = np.linspace(0.0, 1.0, 5001)
    total = float(np.trapezoid(dist.density(grid), grid))
    assert abs(total - 1.0) < 1e-6
    us = np.linspace(0.001, 0.999, 101)
    xs = [dist.ppf(float(u)) for u in us]
    assert all(0.0 <= x <= 1.0 for x in xs)
    assert all(b >= a for a, b in zip(xs, xs[1:]))
    assert dist.ppf(0.5) == pytest.approx(0.5, abs=1e-12)


def test_truncated_normal_bv_norm():
    # mean inside the window: two rises and the two edge jumps
    dist = truncated_normal(mean=0.5, sigma=0.2, lo=0.0, hi=1.0)
    f_edge = float(dist.density(0.0))
    f_peak = float(dist.density(0.5))
    expected = 2 * f_edge + 2 * (f_peak - f_edge)
    assert dist.bv_norm == pytest.approx(expected, rel=1e-9)


def test_piecewise_linear_density_bv_and_sampling():
    dist = piecewise_linear_density([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert dist.sup_density == pytest.approx(1.0)
    # |slope|*length per segment, no edge jumps (density vanishes at the ends)
    assert dist.bv_norm == pytest.approx(2.0)
    draws = [dist.ppf(u) for u in np.linspace(0.0, 0.999, 2001)]
    assert all(0.0 <= x <= 2.0 for x in draws)
    assert float(np.mean(draws)) == pytest.approx(1.0, abs=0.01)


def test_piecewise_density_must_normalize():
    with pytest.raises(ValueError):
        piecewise_linear_density([0.0, 1.0], [1.0, 3.0])


def test_degenerate_distribution():
    dist = uniform(0.7, 0.7)
    assert dist.degenerate
    config = sample_config(dist, [(0,), (5,)], seed=9)
    assert set(config.values.values()) == {0.7}


def test_distribution_dict_round_trip():
    for dist in (
        uniform(-1.0, 2.0),
        truncated_normal(0.0, 1.0, -2.0, 2.0),
        piecewise_linear_density([0.0, 0.5, 1.0], [0.5, 1.5, 0.5]),
    ):
        assert CouplingDistribution.from_dict(dist.to_dict()) == dist


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        CouplingDistribution.from_dict({"kind": "cauchy", "lo": 0, "hi": 1})
