"""Level-count statistics in shrinking windows and their scaling fits.

The central quantity is the disorder average of the number of eigenvalues
in [E-eps, E+eps] on a box.  A bounded coupling density makes that average
decay like eps^(1/p) times the number of contributing sites; the fits here
measure both exponents empirically.  The exponent/map bookkeeping
(alpha, q, k and g(x) = (x+1)^-k) is derived from the Hoelder target p and
the lattice dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from idslab.covering import box, build_agglomerate, support_extension
from idslab.operators import Model
from idslab.parallel import parallel_map
from idslab.randomness import CouplingDistribution, derive_seed, sample_config
from idslab.spectral import eigensolve


@dataclass(frozen=True)
class HolderConstants:
    """Exponent pipeline for a target Hoelder exponent 1/p in dimension d.

    alpha is the conjugate weight with 1/p + alpha = 1; q is the smallest
    even integer at least max(6, d/2 + 2); k is the smallest integer with
    k/q >= 1/alpha; the resolvent-power map is g(x) = (x+1)^-k.
    """

    p: float
    d: int
    alpha: float
    q: int
    k: int

    def g(self, x):
        return (np.asarray(x, dtype=float) + 1.0) ** (-self.k)


def holder_constants(p: float, d: int) -> HolderConstants:
    if not p > 1:
        raise ValueError("the exponent p must be larger than 1")
    if d < 1:
        raise ValueError("dimension must be positive")
    alpha = 1.0 - 1.0 / p
    q = max(6, math.ceil(d / 2 + 2))
    if q % 2:
        q += 1
    k = math.ceil(q / alpha - 1e-12)
    return HolderConstants(p=float(p), d=int(d), alpha=alpha, q=q, k=k)


@dataclass(frozen=True)
class SwitchFunction:
    """Monotone ramp from -1 to 0 across [E-eps, E+eps] with rho' <= 1/eps."""

    energy: float
    eps: float
    profile: str

    def rho(self, x):
        x = np.asarray(x, dtype=float)
        u = np.clip((x - self.energy + self.eps) / (2.0 * self.eps), 0.0, 1.0)
        if self.profile == "cubic":
            u = u * u * (3.0 - 2.0 * u)
        return -1.0 + u

    def rho_prime(self, x):
        x = np.asarray(x, dtype=float)
        u = (x - self.energy + self.eps) / (2.0 * self.eps)
        inside = (u >= 0.0) & (u <= 1.0)
        if self.profile == "cubic":
            slope = (6.0 * u - 6.0 * u * u) / (2.0 * self.eps)
        else:
            slope = np.full_like(u, 1.0 / (2.0 * self.eps))
        return np.where(inside, slope, 0.0)


def switch_function(energy: float, eps: float, profile: str = "linear") -> SwitchFunction:
    """Build and validate a switch ramp.

    Dense sampling checks the plateau values, monotonicity, the derivative
    cap 1/eps, and the covering bound: the indicator of [E-eps, E+eps] is
    dominated by the integral of rho' over shifts in [-2 eps, 2 eps].
    """
    if eps <= 0:
        raise ValueError("half-width eps must be positive")
    if profile not in ("linear", "cubic"):
        raise ValueError(f"unknown switch profile {profile!r}")
    if not eps < 0.5:
        import warnings

        warnings.warn(f"eps {eps} is outside the intended range ]0, 1/2[", stacklevel=2)
    ramp = SwitchFunction(energy=float(energy), eps=float(eps), profile=profile)
    grid = np.linspace(energy - 3 * eps, energy + 3 * eps, 2001)
    rho = ramp.rho(grid)
    if abs(ramp.rho(energy - eps) + 1.0) > 1e-12 or abs(ramp.rho(energy + eps)) > 1e-12:
        raise AssertionError("ramp endpoints are off")
    if np.any(np.diff(rho) < -1e-13):
        raise AssertionError("ramp is not monotone")
    cap = float(np.max(ramp.rho_prime(grid)))
    if cap > 1.0 / eps + 1e-12:
        raise AssertionError(f"derivative cap violated: sup rho' = {cap} > 1/eps")
    window = grid[(grid >= energy - eps) & (grid <= energy + eps)]
    covering = ramp.rho(window + 2 * eps) - ramp.rho(window - 2 * eps)
    if np.any(covering < 1.0 - 1e-12):
        raise AssertionError("covering bound fails on the window")
    return ramp


@dataclass(frozen=True)
class WegnerRow:
    model: str
    energy: float
    eps: float
    box_length: int
    n_plus: int
    mean: float
    stderr: float
    samples: int
    seed: int


@dataclass(frozen=True)
class WegnerTable:
    rows: list[WegnerRow] = field(default_factory=list)

    def select(self, energy=None, eps=None, box_length=None) -> "WegnerTable":
        picked = [
            r
            for r in self.rows
            if (energy is None or r.energy == energy)
            and (eps is None or r.eps == eps)
            and (box_length is None or r.box_length == box_length)
        ]
        return WegnerTable(rows=picked)


def _ram_window_ok(energy: float, eps: float, a: float) -> bool:
    return (energy - eps) >= 1.0 / a and (energy + eps) <= a


def _wegner_sample(task, sample_index: int) -> np.ndarray:
    model, length, dist, seed = task
    agg = build_agglomerate(model.spec, box(model.spec, length))
    omega = sample_config(dist, model.required_sites(agg.index_set), derive_seed(seed, sample_index))
    return eigensolve(model.assemble(agg, omega)).values


def wegner_scan(
    model: Model,
    lengths: Sequence[int],
    energies: Sequence[float],
    eps_list: Sequence[float],
    dist: CouplingDistribution,
    n_samples: int,
    seed: int,
    a: float | None = None,
    threads: int | None = None,
) -> WegnerTable:
    """Monte Carlo window counts over boxes, energies, and half-widths.

    Spectra are computed once per (box, sample) and reused for every
    window, so every row of the table shares the same configurations.
    For the alloy-metric model each window must stay inside [1/a, a]:
    multiplicative disorder moves an eigenvalue proportionally to its
    energy, so windows touching 0 see no averaging and are refused.
    """
    if model.kind == "ram":
        if a is None or a < 1:
            raise ValueError("the alloy-metric scan needs a declared a >= 1")
        for energy in energies:
            for eps in eps_list:
                if not _ram_window_ok(energy, eps, a):
                    raise ValueError(
                        f"window [{energy - eps}, {energy + eps}] leaves [{1 / a}, {a}]; "
                        "multiplicative disorder cannot regularize windows near energy 0"
                    )
    table = WegnerTable()
    for length in sorted(set(int(L) for L in lengths)):
        n_plus = len(
            support_extension(box(model.spec, length), model.support_offsets())
        )
        task = (model, length, dist, seed)
        spectra = parallel_map(partial(_wegner_sample, task), range(n_samples), threads)
        for energy in energies:
            for eps in eps_list:
                lo, hi = energy - eps, energy + eps
                counts = np.array(
                    [
                        np.searchsorted(vals, hi, side="right")
                        - np.searchsorted(vals, lo, side="left")
                        for vals in spectra
                    ],
                    dtype=float,
                )
                mean = float(counts.mean())
                stderr = (
                    float(counts.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
                )
                table.rows.append(
                    WegnerRow(
                        model=model.kind,
                        energy=float(energy),
                        eps=float(eps),
                        box_length=length,
                        n_plus=n_plus,
                        mean=mean,
                        stderr=stderr,
                        samples=int(n_samples),
                        seed=int(seed),
                    )
                )
    return table


def wegner_statistic(
    model: Model,
    length: int,
    energy: float,
    eps: float,
    dist: CouplingDistribution,
    n_samples: int,
    seed: int,
    a: float | None = None,
    threads: int | None = None,
) -> WegnerRow:
    """Single-window disorder average of the eigenvalue count."""
    table = wegner_scan(model, [length], [energy], [eps], dist, n_samples, seed, a, threads)
    return table.rows[0]


@dataclass(frozen=True)
class FitReport:
    slope: float
    intercept: float
    n_rows: int
    c_fit: float | None
    target_exponent: float | None
    note: str = ""

    @property
    def no_scaling(self) -> bool:
        return self.note == "no scaling: vanishing means"


def scaling_fit(table: WegnerTable, p: float, energy: float | None = None,
                box_length: int | None = None) -> FitReport:
    """Log-log slope of the mean count in the half-width.

    Also reports the smallest constant C with mean <= C eps^(1/p) n_plus on
    every row, which exists whenever the means are positive.
    """
    rows = table.select(energy=energy, box_length=box_length).rows
    if len(rows) < 4:
        raise ValueError("need at least four half-widths for a stable fit")
    if len({r.eps for r in rows}) != len(rows):
        raise ValueError("fit expects one row per half-width; filter energy and box first")
    if any(r.mean <= 0 for r in rows):
        return FitReport(
            slope=float("nan"),
            intercept=float("nan"),
            n_rows=len(rows),
            c_fit=None,
            target_exponent=1.0 / p,
            note="no scaling: vanishing means",
        )
    xs = np.log([r.eps for r in rows])
    ys = np.log([r.mean for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    c_fit = max(r.mean / (r.eps ** (1.0 / p) * r.n_plus) for r in rows)
    return FitReport(
        slope=float(slope),
        intercept=float(intercept),
        n_rows=len(rows),
        c_fit=float(c_fit),
        target_exponent=1.0 / p,
    )


def volume_scaling(table: WegnerTable, energy: float, eps: float) -> FitReport:
    """Log-log slope of the mean count in the extended site count."""
    rows = table.select(energy=energy, eps=eps).rows
    if len(rows) < 3:
        raise ValueError("need at least three box sizes")
    if any(r.mean <= 0 for r in rows):
        return FitReport(
            slope=float("nan"),
            intercept=float("nan"),
            n_rows=len(rows),
            c_fit=None,
            target_exponent=1.0,
            note="no scaling: vanishing means",
        )
    xs = np.log([r.n_plus for r in rows])
    ys = np.log([r.mean for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    return FitReport(
        slope=float(slope),
        intercept=float(intercept),
        n_rows=len(rows),
        c_fit=None,
        target_exponent=1.0,
    )


def wegner_bound_report(
    model: Model,
    p: float,
    energy: float,
    dist: CouplingDistribution,
    table: WegnerTable,
    scan,
    a: float | None = None,
) -> dict:
    """Assemble the analytic constant template next to the fitted constant.

    The analytic side multiplies the measured single-swap quasi-norm bound
    into 4 * C^alpha * ||f||_sup / (k^alpha * lambda) * (E+2)^(alpha(k+1))
    for potential disorder, with the density's variation norm and the
    window parameter a replacing ||f||_sup / lambda in the metric case.
    The analytic value bounds, and does not estimate, the empirical one.
    """
    consts = holder_constants(p, model.spec.dimension)
    norms = [row.norm_alpha for row in scan.rows]
    c_alpha = max(norms) if norms else float("nan")
    energy_factor = (energy + 2.0) ** (consts.alpha * (consts.k + 1))
    if model.kind == "rap":
        if not math.isfinite(dist.sup_density):
            analytic = float("inf")
        else:
            analytic = (
                4.0
                * (c_alpha**consts.alpha)
                * dist.sup_density
                / (consts.k**consts.alpha * model.v.coverage)
                * energy_factor
            )
        density_factor = {"sup_density": dist.sup_density, "coverage": model.v.coverage}
    elif model.kind == "ram":
        if a is None:
            raise ValueError("the alloy-metric report needs the window parameter a")
        if not math.isfinite(dist.bv_norm):
            analytic = float("inf")
        else:
            analytic = (
                4.0
                * a
                * (c_alpha**consts.alpha)
                * dist.bv_norm
                / (consts.k**consts.alpha)
                * energy_factor
            )
        density_factor = {"bv_norm": dist.bv_norm, "a": a}
    else:
        raise ValueError("bound reports apply to disordered models")
    try:
        fit = scaling_fit(table, p, energy=energy)
        empirical = fit.c_fit
        slope = fit.slope
    except ValueError:
        empirical, slope = None, float("nan")
    return {
        "model": model.kind,
        "p": p,
        "alpha": consts.alpha,
        "q": consts.q,
        "k": consts.k,
        "energy": energy,
        "swap_norm_bound": c_alpha,
        "density_factor": density_factor,
        "analytic_constant": analytic,
        "empirical_constant": empirical,
        "empirical_slope": slope,
        "note": "analytic value is an upper-bound template, not an estimate",
    }
