"""Invariant and acceptance suite behind `idslab verify`.

Each check is a pure function returning (passed, detail); the registry
maps names to functions and levels.  The quick level covers the exact
identities and small randomized suites; the full level adds the Monte
Carlo scaling experiments.  Seeds are fixed so every run is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from idslab import covering, floquet, ids, operators, randomness, spectral, ssf, wegner


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _chain_model_rap() -> operators.Model:
    spec = covering.builtin_lattice("chain")
    v = operators.SingleSitePotential(values=operators.chi_cell(spec), coverage=1.0)
    return operators.Model(kind="rap", spec=spec, v=v)


def _pendant_model_rap() -> operators.Model:
    spec = covering.builtin_lattice("pendant-pair")
    v = operators.SingleSitePotential(values=operators.chi_cell(spec), coverage=1.0)
    return operators.Model(kind="rap", spec=spec, v=v)


def _pendant_model_ram() -> operators.Model:
    spec = covering.builtin_lattice("pendant-pair")
    u = operators.SingleSiteDeformation(values=operators.chi_cell(spec), coverage=1.0)
    return operators.Model(kind="ram", spec=spec, u=u)


def _rap_instance(model, length, seed, dist=None):
    agg = covering.build_agglomerate(model.spec, covering.box(model.spec, length))
    dist = dist or randomness.uniform(0.0, 1.0)
    omega = randomness.sample_config(dist, model.required_sites(agg.index_set), seed)
    return agg, omega


def check_equivariance() -> tuple[bool, str]:
    """Shifting the box and the configuration together leaves matrices fixed."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for model in (_chain_model_rap(), _pendant_model_ram()):
        dist = (
            randomness.uniform(0.0, 1.0)
            if model.kind == "rap"
            else randomness.uniform(-0.5, 0.5)
        )
        for trial in range(5):
            cells = {tuple(rng.integers(-4, 5, size=model.spec.dimension)) for _ in range(6)}
            gamma = tuple(rng.integers(-3, 4, size=model.spec.dimension))
            agg = covering.build_agglomerate(model.spec, cells)
            omega = randomness.sample_config(
                dist, model.required_sites(agg.index_set), 1000 + trial
            )
            ham = model.assemble(agg, omega)
            shifted_agg = covering.build_agglomerate(
                model.spec, covering.shift_index_set(cells, gamma)
            )
            shifted_ham = model.assemble(shifted_agg, randomness.shift_config(omega, gamma))
            worst = max(worst, float(np.max(np.abs(ham.matrix - shifted_ham.matrix))))
            worst = max(worst, float(np.max(np.abs(ham.measure - shifted_ham.measure))))
    return worst == 0.0, f"max matrix deviation under shift {worst:.3e}"


def check_conformal_scaling() -> tuple[bool, str]:
    """Global coupling shift rescales alloy-metric spectra by exp(-t) exactly."""
    dist = randomness.uniform(-0.5, 0.5)
    cases = []
    pendant = _pendant_model_ram()
    cases.append((pendant, covering.box(pendant.spec, 20), 11))  # n = 60
    chain_spec = covering.builtin_lattice("chain")
    chain_u = operators.SingleSiteDeformation(
        values={((0,), "a"): 0.5, ((1,), "a"): 0.5}, coverage=0.5
    )
    chain = operators.Model(kind="ram", spec=chain_spec, u=chain_u)
    cases.append((chain, covering.box(chain_spec, 40), 12))
    square_spec = covering.builtin_lattice("square")
    square = operators.Model(
        kind="ram",
        spec=square_spec,
        u=operators.SingleSiteDeformation(values=operators.chi_cell(square_spec), coverage=1.0),
    )
    cases.append((square, covering.box(square_spec, 13), 13))  # n = 169
    worst_scale = 0.0
    for model, cells, seed in cases:
        agg = covering.build_agglomerate(model.spec, cells)
        omega = randomness.sample_config(dist, model.required_sites(agg.index_set), seed)
        for t in (math.log(2.0), -math.log(2.0)):
            worst_scale = max(
                worst_scale, spectral.conformal_scale_deviation(model, agg, omega, t)
            )
    if worst_scale > 1e-12:
        return False, f"scaling deviation {worst_scale:.3e} exceeds 1e-12"

    agg = covering.build_agglomerate(pendant.spec, covering.box(pendant.spec, 8))
    omega = randomness.sample_config(dist, pendant.required_sites(agg.index_set), 21)
    spectrum = spectral.eigensolve(pendant.assemble(agg, omega))
    worst_fd = 0.0
    checked = 0
    for index in range(spectrum.n):
        if not spectrum.is_simple(index):
            continue
        report = spectral.conformal_derivative_check(pendant, agg, omega, index)
        budget = 1e-6 * (1.0 + abs(report.eigenvalue))
        worst_fd = max(worst_fd, report.fd_dev / budget)
        checked += 1
        if checked >= 6:
            break
    passed = worst_fd <= 1.0 and checked > 0
    return passed, (
        f"scale dev {worst_scale:.3e} (<=1e-12), "
        f"fd sum dev {worst_fd:.3e} of budget over {checked} levels"
    )


def check_hellmann_feynman() -> tuple[bool, str]:
    """Analytic coupling derivatives match finite differences; sums hit 1."""
    model = _chain_model_rap()
    worst_fd = 0.0
    worst_sum = 0.0
    for trial in range(20):
        agg, omega = _rap_instance(model, 6, 300 + trial)
        spectrum = spectral.eigensolve(model.assemble(agg, omega))
        for index in range(spectrum.n):
            if not spectrum.is_simple(index):
                continue
            result = spectral.hellmann_feynman(model, agg, omega, index)
            for site, value in result.derivatives.items():
                fd = spectral.fd_eigenvalue_derivative(model, agg, omega, index, site)
                worst_fd = max(worst_fd, abs(value - fd))
            worst_sum = max(worst_sum, abs(result.total - 1.0))
    passed = worst_fd <= 1e-6 and worst_sum <= 1e-9
    return passed, f"max |analytic-fd| {worst_fd:.3e} (<=1e-6), max |sum-1| {worst_sum:.3e} (<=1e-9)"


def check_krein_identity() -> tuple[bool, str]:
    """Trace difference equals the shift-function integral for smooth tests."""
    model = _chain_model_rap()
    k = wegner.holder_constants(2.0, 1).k
    worst = 0.0
    for trial in range(100):
        agg, omega1 = _rap_instance(model, 6, 500 + trial)
        _, omega2 = _rap_instance(model, 6, 9500 + trial)
        ham1 = model.assemble(agg, omega1)
        ham2 = model.assemble(agg, omega2)
        for phi in (lambda x: x * x, lambda x: (x + 1.0) ** (-k)):
            result = ssf.krein_check(ham1, ham2, phi)
            worst = max(worst, result.residual)
    return worst < 1e-9, f"max residual {worst:.3e} (<1e-9) over 100 pairs"


def check_invariance_principle() -> tuple[bool, str]:
    """Shift-function modulus is unchanged under the resolvent-power map."""
    model = _chain_model_rap()
    rng = np.random.default_rng(42)
    checked = 0
    for trial in range(50):
        agg, omega1 = _rap_instance(model, 4, 700 + trial)
        _, omega2 = _rap_instance(model, 4, 9700 + trial)
        ham1 = model.assemble(agg, omega1)
        ham2 = model.assemble(agg, omega2)
        evals = np.concatenate(
            [spectral.eigensolve(ham1).values, spectral.eigensolve(ham2).values]
        )
        k = 1 + trial % 3
        hits = 0
        while hits < 20:
            energy = float(rng.uniform(-0.5, float(evals.max()) + 0.5))
            if np.min(np.abs(evals - energy)) < 1e-6:
                continue
            result = ssf.invariance_principle_check(ham1, ham2, k, energy)
            if not result.moduli_match:
                return False, (
                    f"moduli differ at E={energy}: {result.xi_plain} vs {result.xi_transformed}"
                )
            hits += 1
            checked += 1
    return True, f"exact modulus match at {checked} energies across 50 pairs"


def check_super_trace_bound() -> tuple[bool, str]:
    """Shift-function integral bounded by the mapped-pair quasi-norm."""
    model = _chain_model_rap()
    dist = randomness.uniform(0.0, 1.0)
    worst_gap = -math.inf
    for trial in range(50):
        agg, omega = _rap_instance(model, 6, 1100 + trial, dist)
        site = model.required_sites(agg.index_set)[trial % agg.n]
        low = model.assemble(agg, randomness.substitute(omega, site, dist.lo))
        high = model.assemble(agg, randomness.substitute(omega, site, dist.hi))
        result = ssf.superbound_check(low, high, p=2.0, d=1)
        if not result.holds:
            return False, f"violated: lhs {result.lhs} > rhs {result.rhs}"
        worst_gap = max(worst_gap, result.lhs - result.rhs)
    return True, f"holds on 50 single-site pairs (worst lhs-rhs {worst_gap:.3e})"


def check_schatten_calculus() -> tuple[bool, str]:
    violations = ssf.schatten_property_suite(n=8, trials=500, seed=2024)
    total = sum(violations.values())
    return total == 0, f"violations {violations}"


def check_bloch_ids_chain() -> tuple[bool, str]:
    spec = covering.builtin_lattice("chain")
    devs = []
    for grid in (64, 256):
        bands = floquet.band_structure(spec, None, grid)
        value = floquet.bloch_ids(bands, 2.0)
        devs.append((grid, abs(value - 0.5)))
        if abs(value - 0.5) > 2.0 / grid:
            return False, f"G={grid}: |N(2)-0.5| = {abs(value - 0.5)} > {2.0 / grid}"
    detail = ", ".join(f"G={g}: dev {d:.5f} (<= {2.0 / g})" for g, d in devs)
    return True, detail


def check_flat_band_jump() -> tuple[bool, str]:
    """Pendant lattice: flat band at 1 and an exact one-third jump; chain: neither."""
    pendant = covering.builtin_lattice("pendant-pair")
    bands = floquet.band_structure(pendant, None, 64)
    flats = floquet.flat_band_detect(bands, tol=1e-9)
    if [(n, round(e, 9)) for n, e in flats] != [(2, 1.0)]:
        return False, f"expected one flat band at 1.0, found {flats}"
    jump = floquet.bloch_ids(bands, 1.0 + 1e-6) - floquet.bloch_ids(bands, 1.0 - 1e-6)
    if abs(jump - 1.0 / 3.0) > 1e-15:
        return False, f"jump {jump!r} is not exactly 1/3"
    chain = covering.builtin_lattice("chain")
    chain_bands = floquet.band_structure(chain, None, 64)
    if floquet.flat_band_detect(chain_bands, tol=1e-9):
        return False, "chain unexpectedly has a flat band"
    chain_jump = floquet.bloch_ids(chain_bands, 2.0 + 1e-6) - floquet.bloch_ids(
        chain_bands, 2.0 - 1e-6
    )
    if chain_jump > 2.0 / 64 + 1e-12:
        return False, f"chain jump {chain_jump} above grid resolution"
    return True, f"pendant jump exactly 1/3, chain jump {chain_jump:.5f} within grid resolution"


def check_exhaustion_chain() -> tuple[bool, str]:
    spec = covering.builtin_lattice("chain")
    model = operators.Model(kind="periodic", spec=spec)
    devs = []
    for length in (8, 16, 32):
        agg = covering.build_agglomerate(spec, covering.box(spec, length))
        curve = ids.finite_volume_ids(model, agg, None, [2.0])
        dev = abs(float(curve.values[0]) - 0.5)
        devs.append((length, dev))
        if dev > 2.0 / length:
            return False, f"L={length}: |N(2)-1/2| = {dev} > {2.0 / length}"
    return True, ", ".join(f"L={L}: dev {d:.4f} (<= {2.0 / L})" for L, d in devs)


def _wegner_chain_table(lengths, eps_list, samples, seed=77):
    model = _chain_model_rap()
    dist = randomness.uniform(0.0, 1.0)
    return wegner.wegner_scan(
        model, lengths, [2.0], eps_list, dist, n_samples=samples, seed=seed
    )


def check_wegner_eps_scaling() -> tuple[bool, str]:
    """Window counts on the disordered chain decay almost linearly in eps."""
    table = _wegner_chain_table([16], [0.2, 0.1, 0.05, 0.025], samples=4000)
    fit = wegner.scaling_fit(table, p=2.0, energy=2.0, box_length=16)
    if fit.no_scaling:
        return False, "means vanished; no scaling to fit"
    bound_ok = all(
        row.mean <= fit.c_fit * row.eps**0.5 * row.n_plus * (1 + 1e-12) for row in table.rows
    )
    passed = fit.slope >= 0.9 and math.isfinite(fit.c_fit) and bound_ok
    detail = f"slope {fit.slope:.3f} (>=0.9), C_fit {fit.c_fit:.3f} bounds all rows"
    if not passed:
        # At 16 cells the expected finite-volume DOS oscillates with the
        # clean-level spacing (~0.37) smeared only by ~0.09, and E=2 sits on
        # a bump, so wide windows grow sublinearly.  The law emerges once
        # the box outgrows the oscillation.
        wide = _wegner_chain_table([64], [0.2, 0.1, 0.05, 0.025], samples=1000)
        wide_fit = wegner.scaling_fit(wide, p=2.0, energy=2.0, box_length=64)
        detail += (
            "; finite-box DOS oscillation at L=16 flattens wide windows "
            f"(same statistic at L=64 fits slope {wide_fit.slope:.3f})"
        )
    return passed, detail


def check_wegner_volume_law() -> tuple[bool, str]:
    table = _wegner_chain_table([8, 16, 32], [0.05], samples=2000)
    fit = wegner.volume_scaling(table, energy=2.0, eps=0.05)
    passed = 0.8 <= fit.slope <= 1.2
    return passed, f"volume slope {fit.slope:.3f} (target [0.8, 1.2])"


def check_regularization_headline() -> tuple[bool, str]:
    """Disorder flattens the one-third IDS jump of the pendant lattice."""
    spec = covering.builtin_lattice("pendant-pair")
    agg = covering.build_agglomerate(spec, covering.box(spec, 16))
    energies = np.arange(0.0, 3.2001, 0.0125)
    eps_list = [0.2, 0.1, 0.05, 0.025]

    periodic = operators.Model(kind="periodic", spec=spec)
    clean = ids.finite_volume_ids(periodic, agg, None, energies)
    clean_profile = ids.jump_profile(clean, eps_list)
    floor = min(point.increment for point in clean_profile)
    if floor < 0.3:
        return False, f"clean jump floor {floor:.3f} fell below 0.3"

    disordered = _pendant_model_rap()
    dist = randomness.uniform(0.0, 1.0)
    noisy = ids.mc_expected_ids(disordered, agg, dist, energies, n_samples=2000, seed=99)
    point = ids.jump_profile(noisy, [0.025])[0]
    passed = point.increment < 0.15 + 2.0 * point.stderr
    return passed, (
        f"clean floor {floor:.3f} (>=0.3); disordered eps=0.025 increment "
        f"{point.increment:.3f} +- {point.stderr:.3f} (<0.15)"
    )


def check_ram_zero_energy_caveat() -> tuple[bool, str]:
    """Metric disorder: windows near 0 refused, window at E=1 scales."""
    model = _pendant_model_ram()
    dist = randomness.uniform(-0.5, 0.5)
    try:
        wegner.wegner_statistic(model, 4, 0.3, 0.1, dist, n_samples=1, seed=1, a=2.0)
        return False, "window reaching below 1/a was not refused"
    except ValueError:
        pass
    table = wegner.wegner_scan(
        model, [12], [1.0], [0.2, 0.1, 0.05, 0.025], dist, n_samples=2000, seed=31, a=2.0
    )
    fit = wegner.scaling_fit(table, p=2.0, energy=1.0, box_length=12)
    passed = (not fit.no_scaling) and fit.slope >= 0.9
    return passed, f"refusal raised; slope at E=1 is {fit.slope:.3f} (>=0.9)"


def check_effective_perturbation_uniformity() -> tuple[bool, str]:
    """Mapped single-swap quasi-norms stay flat as the box grows."""
    rap = _chain_model_rap()
    scan_rap = ssf.effective_perturbation_scan(
        rap, 2.0, [4, 8, 16], randomness.uniform(0.0, 1.0), n_samples=8, seed=55
    )
    slope_rap = scan_rap.log_slope("mean")
    ram = _pendant_model_ram()
    scan_ram = ssf.effective_perturbation_scan(
        ram, 2.0, [4, 8, 16], randomness.uniform(-0.5, 0.5), n_samples=6, seed=56
    )
    slope_ram = scan_ram.log_slope("mean")
    passed = slope_rap <= 0.1 and slope_ram <= 0.1
    detail = f"log-log slopes: potential {slope_rap:.4f}, metric {slope_ram:.4f} (<=0.1)"
    if not passed:
        # The norms converge from below: with k=12 the map (x+1)^-k amplifies
        # the Dirichlet bottom shift E_1(L) ~ 1/L^2, so boxes of 4 cells sit
        # far below the plateau.  Larger boxes show the uniform bound.
        wide_ram = ssf.effective_perturbation_scan(
            ram, 2.0, [16, 32, 64], randomness.uniform(-0.5, 0.5), n_samples=3, seed=56
        )
        wide_rap = ssf.effective_perturbation_scan(
            rap, 2.0, [16, 32, 64], randomness.uniform(0.0, 1.0), n_samples=4, seed=55
        )
        detail += (
            "; norms converge from below toward a plateau: over boxes {16,32,64} "
            f"the slopes drop to potential {wide_rap.log_slope('mean'):.3f}, "
            f"metric {wide_ram.log_slope('mean'):.3f}"
        )
    return passed, detail


CHECKS: list[tuple[str, str, callable]] = [
    ("equivariance", "quick", check_equivariance),
    ("conformal-scaling", "quick", check_conformal_scaling),
    ("hellmann-feynman", "quick", check_hellmann_feynman),
    ("krein-identity", "quick", check_krein_identity),
    ("invariance-principle", "quick", check_invariance_principle),
    ("super-trace-bound", "quick", check_super_trace_bound),
    ("schatten-calculus", "quick", check_schatten_calculus),
    ("bloch-ids-chain", "quick", check_bloch_ids_chain),
    ("flat-band-jump", "quick", check_flat_band_jump),
    ("exhaustion-chain", "quick", check_exhaustion_chain),
    ("wegner-eps-scaling", "full", check_wegner_eps_scaling),
    ("wegner-volume-law", "full", check_wegner_volume_law),
    ("regularization-headline", "full", check_regularization_headline),
    ("ram-zero-energy-caveat", "full", check_ram_zero_energy_caveat),
    ("effective-perturbation-uniformity", "full", check_effective_perturbation_uniformity),
]


def check_names(level: str = "full") -> list[str]:
    return [name for name, lvl, _fn in CHECKS if level == "full" or lvl == "quick"]


def run_check(name: str) -> CheckResult:
    for check_name, _level, fn in CHECKS:
        if check_name == name:
            start = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crash is a failure, not an abort
                passed, detail = False, f"raised {type(exc).__name__}: {exc}"
            return CheckResult(
                name=name, passed=passed, detail=detail, seconds=time.perf_counter() - start
            )
    raise KeyError(f"unknown check {name!r}")


def run_suite(level: str = "quick", only: str | None = None) -> list[CheckResult]:
    names = [only] if only else check_names(level)
    return [run_check(name) for name in names]
