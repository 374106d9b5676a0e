"""Finite-volume and disorder-averaged integrated density of states.

The finite-volume counting function divides the number of eigenvalues
below E by the volume of the box: the vertex count for potential-type
models, the total conformal weight for metric-type models.  Averaging
over configurations with per-sample sub-seeds gives a reproducible,
sample-splittable Monte Carlo estimate of the expected IDS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial

import numpy as np

from idslab.covering import Agglomerate, box, build_agglomerate
from idslab.floquet import band_structure, bloch_ids_curve
from idslab.operators import Model
from idslab.parallel import parallel_map
from idslab.randomness import CouplingDistribution, RandomConfig, derive_seed, sample_config
from idslab.spectral import counts_below, eigensolve


@dataclass(frozen=True)
class IdsCurve:
    energies: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        energies = np.asarray(self.energies, dtype=float)
        if np.any(np.diff(energies) <= 0):
            raise ValueError("energy grid must be strictly increasing")
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    def value_at(self, energy: float) -> float:
        """Piecewise-constant extension of the sampled curve, 0 before it."""
        idx = int(np.searchsorted(self.energies, energy, side="right")) - 1
        return float(self.values[idx]) if idx >= 0 else 0.0

    def stderr_at(self, energy: float) -> float:
        idx = int(np.searchsorted(self.energies, energy, side="right")) - 1
        return float(self.stderr[idx]) if idx >= 0 else 0.0


def box_volume(model: Model, agg: Agglomerate, omega: RandomConfig | None) -> float:
    if model.kind == "ram":
        ham = model.assemble(agg, omega)
        return float(np.sum(ham.measure))
    return float(agg.n)


def finite_volume_ids(
    model: Model, agg: Agglomerate, omega: RandomConfig | None, energies
) -> IdsCurve:
    """Counting function of one finite restriction, volume-normalized."""
    ham = model.assemble(agg, omega)
    spectrum = eigensolve(ham)
    volume = float(np.sum(ham.measure))
    counts = counts_below(spectrum, np.asarray(energies, dtype=float))
    values = counts / volume
    return IdsCurve(
        energies=np.asarray(energies, dtype=float),
        values=values,
        stderr=np.zeros_like(values),
        meta={"box_size": agg.n, "volume": volume, "model": model.kind, "samples": 1},
    )


def _ids_sample(task, sample_index: int) -> np.ndarray:
    model, agg, dist, energies, seed = task
    omega = sample_config(dist, model.required_sites(agg.index_set), derive_seed(seed, sample_index))
    return finite_volume_ids(model, agg, omega, energies).values


def mc_expected_ids(
    model: Model,
    agg: Agglomerate,
    dist: CouplingDistribution,
    energies,
    n_samples: int,
    seed: int,
    threads: int | None = None,
) -> IdsCurve:
    """Monte Carlo mean of the finite-volume IDS over i.i.d. configurations.

    Sample k always uses the sub-seed derived from (seed, k), so raising
    n_samples extends the estimate without reshuffling earlier draws.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    energies = np.asarray(energies, dtype=float)
    task = (model, agg, dist, energies, seed)
    rows = parallel_map(partial(_ids_sample, task), range(n_samples), threads)
    stack = np.vstack(rows)
    mean = stack.mean(axis=0)
    if n_samples > 1:
        stderr = stack.std(axis=0, ddof=1) / np.sqrt(n_samples)
    else:
        stderr = np.zeros_like(mean)
    return IdsCurve(
        energies=energies,
        values=mean,
        stderr=stderr,
        meta={
            "box_size": agg.n,
            "model": model.kind,
            "samples": int(n_samples),
            "seed": int(seed),
        },
    )


def expected_ids(
    model: Model,
    agg: Agglomerate,
    dist: CouplingDistribution | None,
    energies,
    n_samples: int,
    seed: int,
    threads: int | None = None,
) -> IdsCurve:
    """Dispatch: deterministic curve for periodic models, Monte Carlo else."""
    if model.kind == "periodic" or dist is None:
        return finite_volume_ids(model, agg, None, energies)
    if dist.degenerate:
        omega = sample_config(dist, model.required_sites(agg.index_set), seed)
        curve = finite_volume_ids(model, agg, omega, energies)
        curve.meta.update(samples=int(n_samples), seed=int(seed))
        return curve
    return mc_expected_ids(model, agg, dist, energies, n_samples, seed, threads)


@dataclass(frozen=True)
class ExhaustionRow:
    energy: float
    box_length: int
    value: float
    stderr: float
    reference: float
    deviation: float


def exhaustion_study(
    model: Model,
    lengths,
    energies,
    n_samples: int,
    seed: int,
    dist: CouplingDistribution | None = None,
    bloch_grid: int = 64,
    threads: int | None = None,
) -> list[ExhaustionRow]:
    """Finite-volume IDS along growing boxes, with the phase-average
    reference column for periodic models."""
    lengths = [int(L) for L in lengths]
    if any(b <= a for a, b in zip(lengths, lengths[1:])):
        raise ValueError("box lengths must be strictly increasing")
    energies = np.asarray(energies, dtype=float)
    reference = None
    if model.kind == "periodic":
        bands = band_structure(model.spec, model.v_per, bloch_grid)
        reference = bloch_ids_curve(bands, energies)
    rows: list[ExhaustionRow] = []
    for length in lengths:
        agg_box = build_agglomerate(model.spec, box(model.spec, length))
        curve = expected_ids(model, agg_box, dist, energies, n_samples, seed, threads)
        for i, energy in enumerate(energies):
            ref = float(reference[i]) if reference is not None else float("nan")
            dev = abs(float(curve.values[i]) - ref) if reference is not None else float("nan")
            rows.append(
                ExhaustionRow(
                    energy=float(energy),
                    box_length=length,
                    value=float(curve.values[i]),
                    stderr=float(curve.stderr[i]),
                    reference=ref,
                    deviation=dev,
                )
            )
    return rows


@dataclass(frozen=True)
class JumpPoint:
    eps: float
    increment: float
    at_energy: float
    stderr: float
    resolution_limited: bool


def jump_profile(curve: IdsCurve, eps_list) -> list[JumpPoint]:
    """Largest two-sided increment of the curve at each half-width.

    A floor that persists as eps shrinks signals a jump of the underlying
    IDS; decay to zero means continuity at the grid's resolution.  When
    eps falls below the grid spacing the point is flagged rather than
    trusted.
    """
    eps_values = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_values):
        raise ValueError("profile half-widths must be positive")
    if any(b >= a for a, b in zip(eps_values, eps_values[1:])):
        raise ValueError("half-widths must be strictly decreasing")
    spacing = float(np.max(np.diff(curve.energies))) if curve.energies.size > 1 else float("inf")
    lo, hi = float(curve.energies[0]), float(curve.energies[-1])
    points: list[JumpPoint] = []
    for eps in eps_values:
        # probe only windows that stay inside the sampled range; beyond it
        # the curve is unknown and an edge would masquerade as a jump
        probes = [e for e in curve.energies if e - eps >= lo and e + eps <= hi]
        limited = eps < spacing or not probes
        best = JumpPoint(
            eps=eps,
            increment=0.0,
            at_energy=float(probes[0] if probes else curve.energies[0]),
            stderr=0.0,
            resolution_limited=limited,
        )
        for energy in probes:
            inc = curve.value_at(energy + eps) - curve.value_at(energy - eps)
            if inc > best.increment:
                se = curve.stderr_at(energy + eps) + curve.stderr_at(energy - eps)
                best = JumpPoint(
                    eps=eps,
                    increment=float(inc),
                    at_energy=float(energy),
                    stderr=float(se),
                    resolution_limited=limited,
                )
        points.append(best)
    return points
