"""Shift functions, the trace identity, the invariance principle, and
Schatten-class inequalities."""

import math

import numpy as np
import pytest

from idslab.covering import build_agglomerate, builtin_lattice, box
from idslab.operators import (
    Hamiltonian,
    Model,
    SingleSiteDeformation,
    SingleSitePotential,
    chi_cell,
    symmetrize,
)
from idslab.randomness import sample_config, substitute, uniform
from idslab.spectral import eigensolve
from idslab.ssf import (
    counting_ssf,
    effective_perturbation_scan,
    invariance_principle_check,
    krein_check,
    matrix_function,
    operator_norm,
    schatten_property_suite,
    schatten_quasinorm,
    singular_values,
    ssf_from_eigenvalues,
    superbound_check,
)

CHAIN = builtin_lattice("chain")
PENDANT = builtin_lattice("pendant-pair")


def plain(diag):
    matrix = np.diag(np.asarray(diag, dtype=float))
    return Hamiltonian(matrix=matrix, measure=np.ones(matrix.shape[0]), kind="periodic")


def chain_rap():
    return Model(kind="rap", spec=CHAIN, v=SingleSitePotential(values={((0,), "a"): 1.0}))


def random_rap_pair(length, seed):
    model = chain_rap()
    agg = build_agglomerate(CHAIN, box(CHAIN, length))
    sites = model.required_sites(agg.index_set)
    omega1 = sample_config(uniform(0.0, 1.0), sites, seed)
    omega2 = sample_config(uniform(0.0, 1.0), sites, seed + 10_000)
    return model.assemble(agg, omega1), model.assemble(agg, omega2)


def test_ssf_vanishes_for_equal_operators():
    ham = plain([0.0, 1.0, 2.0])
    xi = counting_ssf(ham, ham)
    assert xi.max_abs() == 0


def test_ssf_rank_one_step():
    xi = counting_ssf(plain([0.0]), plain([1.0]))
    assert xi.breakpoints.tolist() == [0.0, 1.0]
    assert xi.plateaus.tolist() == [1]
    # value convention: strict counting makes the step live on (0, 1]
    assert xi.value(0.0) == 0
    assert xi.value(0.5) == 1
    assert xi.value(1.0) == 1
    assert xi.value(1.0 + 1e-12) == 0


def test_ssf_bounded_by_rank():
    rng = np.random.default_rng(3)
    for trial in range(10):
        sym = rng.standard_normal((5, 5))
        h1 = sym @ sym.T
        vec = rng.standard_normal(5)
        h2 = h1 + np.outer(vec, vec)  # rank-one nonnegative bump
        xi = ssf_from_eigenvalues(np.linalg.eigvalsh(h1), np.linalg.eigvalsh(h2))
        assert xi.max_abs() <= 1
        assert np.all(xi.plateaus >= 0)


def test_ssf_mismatched_operators_rejected():
    with pytest.raises(ValueError):
        counting_ssf(plain([0.0]), plain([0.0, 1.0]))
    weighted = Hamiltonian(matrix=np.diag([1.0]), measure=np.array([2.0]), kind="ram")
    with pytest.raises(ValueError):
        counting_ssf(plain([1.0]), weighted)


def test_krein_rank_one_square():
    result = krein_check(plain([0.0]), plain([1.0]), lambda x: x * x)
    assert result.trace_difference == pytest.approx(1.0)
    assert result.ssf_integral == pytest.approx(1.0)
    assert result.residual < 1e-15


def test_krein_linear_test_function():
    h1, h2 = random_rap_pair(5, seed=40)
    result = krein_check(h1, h2, lambda x: 2.0 * x)
    expected = 2.0 * (np.trace(h2.matrix) - np.trace(h1.matrix))
    assert result.trace_difference == pytest.approx(expected, abs=1e-12)
    assert result.residual < 1e-10


def test_krein_resolvent_power_on_random_pairs():
    for seed in range(20):
        h1, h2 = random_rap_pair(6, seed=100 + seed)
        result = krein_check(h1, h2, lambda x: (x + 1.0) ** (-12))
        assert result.residual < 1e-9


def test_krein_domain_guard():
    with pytest.raises(ValueError, match="domain"):
        krein_check(plain([0.0, 5.0]), plain([1.0]), lambda x: x, domain=(0.0, 2.0))


def test_invariance_hand_example():
    result = invariance_principle_check(plain([0.0]), plain([1.0]), k=1, energy=0.5)
    assert result.xi_plain == 1
    assert result.xi_transformed == -1
    assert result.moduli_match


def test_invariance_equal_pair():
    ham = plain([0.0, 2.0])
    result = invariance_principle_check(ham, ham, k=2, energy=1.0)
    assert result.xi_plain == 0 and result.xi_transformed == 0


def test_invariance_random_pairs_and_energies():
    rng = np.random.default_rng(9)
    for seed in range(10):
        h1, h2 = random_rap_pair(4, seed=300 + seed)
        evals = np.concatenate([eigensolve(h1).values, eigensolve(h2).values])
        for _ in range(20):
            energy = float(rng.uniform(-0.5, evals.max() + 0.5))
            if np.min(np.abs(evals - energy)) < 1e-6:
                continue
            result = invariance_principle_check(h1, h2, k=2, energy=energy)
            assert result.moduli_match


def test_invariance_rejects_eigenvalue_energy():
    with pytest.raises(ValueError, match="eigenvalue"):
        invariance_principle_check(plain([0.0, 1.0]), plain([0.5]), k=1, energy=1.0)


def test_schatten_quasinorm_values():
    report = schatten_quasinorm(np.diag([3.0, 4.0]), alpha=1.0)
    assert report.value == pytest.approx(7.0)
    assert schatten_quasinorm(np.diag([3.0, 4.0]), alpha=2.0).value == pytest.approx(5.0)
    half = schatten_quasinorm(np.eye(2), alpha=0.5)
    assert half.value == pytest.approx(4.0)  # (1^0.5 + 1^0.5)^2


def test_schatten_alpha_triangle_equality_case():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    alpha = 0.5
    lhs = schatten_quasinorm(a + b, alpha).value ** alpha
    rhs = schatten_quasinorm(a, alpha).value ** alpha + schatten_quasinorm(b, alpha).value ** alpha
    assert lhs == pytest.approx(rhs)  # saturated


def test_singular_values_match_svd_oracle():
    rng = np.random.default_rng(31)
    for _ in range(25):
        a = rng.standard_normal((8, 8))
        mine = singular_values(a)
        oracle = np.sort(np.linalg.svd(a, compute_uv=False))[::-1]
        assert np.allclose(mine, oracle, atol=1e-8 * max(1.0, oracle[0] ** 2))


def test_hoelder_inequality_random_trials():
    rng = np.random.default_rng(77)
    for _ in range(100):
        a = rng.standard_normal((8, 8))
        b = rng.standard_normal((8, 8))
        for alpha, beta in ((1.0, 1.0), (0.5, 0.5), (2.0, 2.0)):
            gamma = 1.0 / (1.0 / alpha + 1.0 / beta)
            lhs = schatten_quasinorm(a @ b, gamma).value
            rhs = schatten_quasinorm(a, alpha).value * schatten_quasinorm(b, beta).value
            assert lhs <= rhs * (1 + 1e-9)


def test_property_suite_clean():
    violations = schatten_property_suite(n=6, trials=120, seed=5)
    assert sum(violations.values()) == 0


def test_property_suite_size_guard():
    with pytest.raises(ValueError):
        schatten_property_suite(n=64, trials=1, seed=0)


def test_superbound_trivial_and_hand_example():
    ham = plain([0.0, 1.0])
    result = superbound_check(ham, ham, p=2.0, d=1)
    assert result.lhs == 0.0 and result.rhs == 0.0 and result.holds

    result = superbound_check(plain([0.0]), plain([1.0]), p=2.0, d=1)
    expected = math.sqrt(1.0 - 2.0 ** (-12))
    assert result.lhs == pytest.approx(expected, rel=1e-12)
    assert result.rhs == pytest.approx(expected, rel=1e-12)
    assert result.holds


def test_superbound_on_random_single_site_pairs():
    model = chain_rap()
    dist = uniform(0.0, 1.0)
    agg = build_agglomerate(CHAIN, box(CHAIN, 6))
    sites = model.required_sites(agg.index_set)
    for trial in range(25):
        omega = sample_config(dist, sites, seed=900 + trial)
        site = sites[trial % len(sites)]
        low = model.assemble(agg, substitute(omega, site, 0.0))
        high = model.assemble(agg, substitute(omega, site, 1.0))
        assert superbound_check(low, high, p=2.0, d=1).holds


def test_matrix_function_matches_eigenvalue_map():
    rng = np.random.default_rng(13)
    sym = rng.standard_normal((6, 6))
    sym = sym + sym.T
    mapped = matrix_function(sym, lambda x: (x**2) + 1.0)
    direct = sym @ sym + np.eye(6)
    assert np.allclose(mapped, direct, atol=1e-10)


def test_operator_norm_is_largest_singular_value():
    a = np.diag([3.0, -7.0])
    assert operator_norm(a) == pytest.approx(7.0)


def test_scan_zero_width_distribution_gives_zero_norms():
    model = chain_rap()
    scan = effective_perturbation_scan(
        model, 2.0, [3], uniform(0.5, 0.5), n_samples=2, seed=1
    )
    assert all(row.norm_alpha == 0.0 for row in scan.rows)
    assert all(row.lhs == 0.0 for row in scan.rows)


def test_scan_rows_satisfy_superbound_and_schema():
    model = chain_rap()
    scan = effective_perturbation_scan(model, 2.0, [4, 8], uniform(0.0, 1.0), n_samples=3, seed=2)
    lengths = {row.box_length for row in scan.rows}
    assert lengths == {4, 8}
    for row in scan.rows:
        assert row.lhs <= row.rhs * (1 + 1e-9)
    assert scan.log_slope("mean") is not None


def test_ram_scan_uses_isometry_correctly():
    # carried reference equals plain symmetrization: the weighted conjugation
    # cancels in symmetrized coordinates
    model = Model(
        kind="ram", spec=PENDANT, u=SingleSiteDeformation(values=chi_cell(PENDANT), coverage=1.0)
    )
    agg = build_agglomerate(PENDANT, box(PENDANT, 3))
    sites = model.required_sites(agg.index_set)
    omega = sample_config(uniform(-0.5, 0.5), sites, seed=44)
    from idslab.operators import s_transform

    base = model.assemble(agg, substitute(omega, (1,), 0.0))
    moved = model.assemble(agg, substitute(omega, (1,), 0.5))
    carried = s_transform(base.measure, moved.measure).conjugate(base)
    assert np.allclose(symmetrize(carried), symmetrize(base), atol=1e-13)
    assert np.allclose(
        np.linalg.eigvalsh(symmetrize(carried)), eigensolve(base).values, atol=1e-12
    )
