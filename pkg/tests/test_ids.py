"""Finite-volume counting functions, disorder averages, and jump profiles."""

import math

import numpy as np
import pytest

from idslab.covering import build_agglomerate, builtin_lattice, box
from idslab.ids import (
    IdsCurve,
    exhaustion_study,
    expected_ids,
    finite_volume_ids,
    jump_profile,
    mc_expected_ids,
)
from idslab.operators import Model, SingleSiteDeformation, SingleSitePotential, chi_cell
from idslab.randomness import RandomConfig, sample_config, uniform

CHAIN = builtin_lattice("chain")
PENDANT = builtin_lattice("pendant-pair")


def periodic_chain():
    return Model(kind="periodic", spec=CHAIN)


def chain_rap():
    return Model(kind="rap", spec=CHAIN, v=SingleSitePotential(values={((0,), "a"): 1.0}))


def pendant_ram():
    return Model(
        kind="ram", spec=PENDANT, u=SingleSiteDeformation(values=chi_cell(PENDANT), coverage=1.0)
    )


def test_finite_volume_chain_l3():
    agg = build_agglomerate(CHAIN, box(CHAIN, 3))
    curve = finite_volume_ids(periodic_chain(), agg, None, [2.0 - 1e-12])
    assert curve.values[0] == pytest.approx(1.0 / 3.0)


def test_finite_volume_saturates_at_one():
    agg = build_agglomerate(CHAIN, box(CHAIN, 5))
    curve = finite_volume_ids(periodic_chain(), agg, None, [100.0])
    assert curve.values[0] == 1.0


def test_ram_scaling_identity_of_the_curve():
    # shifting every coupling by t scales eigenvalues by e^-t and the volume
    # by e^t, so N_t(e^-t E) = e^-t N_0(E)
    model = pendant_ram()
    agg = build_agglomerate(PENDANT, box(PENDANT, 4))
    t = 0.4
    omega0 = RandomConfig(values={(i,): 0.0 for i in range(4)})
    omega_t = RandomConfig(values={(i,): t for i in range(4)})
    energies = np.array([0.3, 0.9, 1.1, 2.5, 5.0])
    base = finite_volume_ids(model, agg, omega0, energies)
    moved = finite_volume_ids(model, agg, omega_t, math.exp(-t) * energies)
    assert np.allclose(moved.values, math.exp(-t) * base.values, atol=1e-14)


def test_mc_degenerate_distribution_matches_deterministic():
    model = chain_rap()
    agg = build_agglomerate(CHAIN, box(CHAIN, 4))
    energies = [0.5, 1.5, 2.5, 4.5]
    dist = uniform(0.25, 0.25)
    omega = sample_config(dist, model.required_sites(agg.index_set), seed=3)
    direct = finite_volume_ids(model, agg, omega, energies)
    averaged = expected_ids(model, agg, dist, energies, n_samples=10, seed=3)
    assert np.array_equal(direct.values, averaged.values)
    assert np.all(averaged.stderr == 0.0)


def test_mc_single_sample_equals_that_sample():
    model = chain_rap()
    agg = build_agglomerate(CHAIN, box(CHAIN, 4))
    dist = uniform(0.0, 1.0)
    energies = [1.0, 2.0, 3.0]
    one = mc_expected_ids(model, agg, dist, energies, n_samples=1, seed=11)
    from idslab.randomness import derive_seed

    omega = sample_config(dist, model.required_sites(agg.index_set), derive_seed(11, 0))
    direct = finite_volume_ids(model, agg, omega, energies)
    assert np.array_equal(one.values, direct.values)


def test_mc_sample_splitting_extends_stream():
    from idslab.ids import _ids_sample

    model = chain_rap()
    agg = build_agglomerate(CHAIN, box(CHAIN, 4))
    dist = uniform(0.0, 1.0)
    energies = np.array([1.0, 2.0, 3.0])
    few = mc_expected_ids(model, agg, dist, energies, n_samples=5, seed=7)
    more = mc_expected_ids(model, agg, dist, energies, n_samples=10, seed=7)
    task = (model, agg, dist, energies, 7)
    samples = np.vstack([_ids_sample(task, k) for k in range(10)])
    # the first five draws of the longer run are exactly the shorter run
    assert np.array_equal(samples[:5].mean(axis=0), few.values)
    assert np.array_equal(samples.mean(axis=0), more.values)


def test_mc_stderr_small_at_moderate_samples():
    model = chain_rap()
    agg = build_agglomerate(CHAIN, box(CHAIN, 8))
    dist = uniform(0.0, 1.0)
    energies = np.linspace(0.5, 4.5, 9)
    curve = mc_expected_ids(model, agg, dist, energies, n_samples=2000, seed=5)
    assert np.all(curve.stderr <= 0.02)
    assert np.all(np.diff(curve.values) >= -2 * (curve.stderr[:-1] + curve.stderr[1:]))


def test_expectation_equivariance_under_box_shift():
    model = chain_rap()
    dist = uniform(0.0, 1.0)
    energies = [2.0]
    agg = build_agglomerate(CHAIN, [(i,) for i in range(6)])
    shifted = build_agglomerate(CHAIN, [(i + 3,) for i in range(6)])
    a = mc_expected_ids(model, agg, dist, energies, n_samples=600, seed=21)
    b = mc_expected_ids(model, shifted, dist, energies, n_samples=600, seed=22)
    gap = abs(float(a.values[0]) - float(b.values[0]))
    assert gap <= 2.0 * (float(a.stderr[0]) + float(b.stderr[0]))


def test_exhaustion_chain_converges_to_phase_average():
    rows = exhaustion_study(periodic_chain(), [8, 16, 32], [2.0], n_samples=1, seed=1)
    for row in rows:
        assert row.deviation <= 2.0 / row.box_length
    devs = [row.deviation for row in rows]
    assert devs[-1] <= devs[0] + 1e-12


def test_exhaustion_at_jump_energy_brackets_both_sides():
    model = Model(kind="periodic", spec=PENDANT)
    rows = exhaustion_study(model, [4, 8], [1.0 + 1e-9], n_samples=1, seed=1)
    for row in rows:
        assert 1.0 / 3.0 - 1e-12 <= row.value <= 2.0 / 3.0 + 1e-12


def test_jump_profile_flat_band_floor_and_chain_decay():
    energies = np.arange(0.0, 3.2001, 0.0125)
    pendant_curve = finite_volume_ids(
        Model(kind="periodic", spec=PENDANT),
        build_agglomerate(PENDANT, box(PENDANT, 12)),
        None,
        energies,
    )
    points = jump_profile(pendant_curve, [0.2, 0.1, 0.05, 0.025])
    assert all(p.increment >= 1.0 / 3.0 - 1e-12 for p in points)
    assert all(abs(p.at_energy - 1.0) <= 0.25 for p in points)

    chain_energies = np.arange(1.0, 3.0001, 0.0125)
    chain_curve = finite_volume_ids(
        periodic_chain(), build_agglomerate(CHAIN, box(CHAIN, 64)), None, chain_energies
    )
    chain_points = jump_profile(chain_curve, [0.2, 0.1, 0.05])
    incs = [p.increment for p in chain_points]
    assert incs == sorted(incs, reverse=True)
    assert incs[-1] < 0.1


def test_jump_profile_resolution_flag():
    curve = IdsCurve(energies=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]),
                     stderr=np.zeros(2))
    point = jump_profile(curve, [0.25])[0]
    assert point.resolution_limited


def test_jump_profile_validates_eps():
    curve = IdsCurve(energies=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]),
                     stderr=np.zeros(2))
    with pytest.raises(ValueError):
        jump_profile(curve, [0.1, 0.2])
    with pytest.raises(ValueError):
        jump_profile(curve, [-0.1])


def test_curve_requires_increasing_grid():
    with pytest.raises(ValueError):
        IdsCurve(energies=np.array([1.0, 0.5]), values=np.zeros(2), stderr=np.zeros(2))
