"""Coupling-constant distributions and site-indexed random configurations.

Sampling is a pure function of (seed, site offset): every site value comes
from a splitmix64-style integer hash, so enlarging the site set or running
sites in parallel never changes values already drawn.  All hash arithmetic
is 64-bit integer only, which keeps draws identical across platforms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import ndtr, ndtri

from idslab.covering import Offset, offset_add

_MASK64 = (1 << 64) - 1


def _mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def site_uniform(seed: int, site: Offset, stream: int = 0) -> float:
    """Deterministic uniform draw in [0,1) keyed by (seed, stream, site)."""
    h = _mix64(seed & _MASK64)
    h = _mix64(h ^ (stream & _MASK64))
    h = _mix64(h ^ (len(site) & _MASK64))
    for c in site:
        h = _mix64(h ^ (int(c) & _MASK64))
    return (h >> 11) * (1.0 / (1 << 53))


def derive_seed(seed: int, index: int) -> int:
    """Per-sample sub-seed; extending a sample range keeps earlier draws."""
    return _mix64(_mix64(seed & _MASK64) ^ ((index + 1) & _MASK64))


KINDS = ("uniform", "truncated-normal", "piecewise-linear-density")


@dataclass(frozen=True)
class CouplingDistribution:
    """Compactly supported coupling-constant law with density metadata.

    `sup_density` and `bv_norm` (total variation of the density over the
    whole line, boundary jumps included) feed the constant reports of the
    Wegner experiments.  Degenerate laws (lo == hi) model the disorder-free
    case; they carry infinite density metadata and sample the single point.
    """

    kind: str
    lo: float
    hi: float
    mean: float = 0.0
    sigma: float = 1.0
    xs: tuple[float, ...] = ()
    fs: tuple[float, ...] = ()
    sup_density: float = field(init=False, default=math.nan)
    bv_norm: float = field(init=False, default=math.nan)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (self.lo <= self.hi):
            raise ValueError("support requires lo <= hi")
        if self.degenerate:
            object.__setattr__(self, "sup_density", math.inf)
            object.__setattr__(self, "bv_norm", math.inf)
            return
        if self.kind == "uniform":
            h = 1.0 / (self.hi - self.lo)
            object.__setattr__(self, "sup_density", h)
            object.__setattr__(self, "bv_norm", 2.0 * h)
        elif self.kind == "truncated-normal":
            if self.sigma <= 0:
                raise ValueError("sigma must be positive")
            z = ndtr((self.hi - self.mean) / self.sigma) - ndtr((self.lo - self.mean) / self.sigma)
            if z <= 0:
                raise ValueError("truncation window carries no mass")
            peak = min(max(self.mean, self.lo), self.hi)
            object.__setattr__(self, "sup_density", float(self._tn_density(peak, z)))
            f_lo = float(self._tn_density(self.lo, z))
            f_hi = float(self._tn_density(self.hi, z))
            if self.lo <= self.mean <= self.hi:
                interior = (self.sup_density - f_lo) + (self.sup_density - f_hi)
            else:
                interior = abs(f_hi - f_lo)
            object.__setattr__(self, "bv_norm", f_lo + f_hi + interior)
        else:
            xs = tuple(float(x) for x in self.xs)
            fs = tuple(float(f) for f in self.fs)
            if len(xs) != len(fs) or len(xs) < 2:
                raise ValueError("piecewise density needs matching xs/fs with >= 2 points")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("piecewise breakpoints must be strictly increasing")
            if any(f < 0 for f in fs):
                raise ValueError("density must be nonnegative")
            if not (math.isclose(xs[0], self.lo) and math.isclose(xs[-1], self.hi)):
                raise ValueError("piecewise breakpoints must span [lo, hi]")
            object.__setattr__(self, "xs", xs)
            object.__setattr__(self, "fs", fs)
            object.__setattr__(self, "sup_density", max(fs))
            # exact variation: |slope| * length per segment plus edge jumps
            var = sum(abs(b - a) for a, b in zip(fs, fs[1:]))
            object.__setattr__(self, "bv_norm", fs[0] + fs[-1] + var)
        self._check_normalization()

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def _tn_density(self, x, z):
        u = (np.asarray(x, dtype=float) - self.mean) / self.sigma
        return np.exp(-0.5 * u * u) / (self.sigma * math.sqrt(2 * math.pi) * z)

    def density(self, x):
        """Density evaluated pointwise; zero outside [lo, hi]."""
        if self.degenerate:
            raise ValueError("degenerate distribution has no density")
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        if self.kind == "uniform":
            vals = np.full_like(x, 1.0 / (self.hi - self.lo))
        elif self.kind == "truncated-normal":
            z = ndtr((self.hi - self.mean) / self.sigma) - ndtr((self.lo - self.mean) / self.sigma)
            vals = self._tn_density(x, z)
        else:
            vals = np.interp(x, self.xs, self.fs)
        return np.where(inside, vals, 0.0)

    def _check_normalization(self) -> None:
        grid = np.linspace(self.lo, self.hi, 20001)
        if self.kind == "piecewise-linear-density":
            grid = np.union1d(grid, np.asarray(self.xs))
        total = float(np.trapezoid(self.density(grid), grid))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"density integrates to {total!r}, expected 1 within 1e-9")

    def ppf(self, u: float) -> float:
        """Inverse distribution function for u in [0,1)."""
        if self.degenerate:
            return self.lo
        if self.kind == "uniform":
            return self.lo + u * (self.hi - self.lo)
        if self.kind == "truncated-normal":
            p_lo = ndtr((self.lo - self.mean) / self.sigma)
            p_hi = ndtr((self.hi - self.mean) / self.sigma)
            x = self.mean + self.sigma * float(ndtri(p_lo + u * (p_hi - p_lo)))
            return min(max(x, self.lo), self.hi)
        return self._piecewise_ppf(u)

    def _piecewise_ppf(self, u: float) -> float:
        xs, fs = self.xs, self.fs
        areas = [0.0]
        for i in range(len(xs) - 1):
            areas.append(areas[-1] + 0.5 * (fs[i] + fs[i + 1]) * (xs[i + 1] - xs[i]))
        total = areas[-1]
        target = u * total
        for i in range(len(xs) - 1):
            if target <= areas[i + 1] or i == len(xs) - 2:
                rem = target - areas[i]
                dx = xs[i + 1] - xs[i]
                slope = (fs[i + 1] - fs[i]) / dx
                if abs(slope) < 1e-300:
                    t = rem / fs[i] if fs[i] > 0 else 0.0
                else:
                    disc = fs[i] * fs[i] + 2.0 * slope * rem
                    t = (-fs[i] + math.sqrt(max(disc, 0.0))) / slope
                return min(max(xs[i] + t, self.lo), self.hi)
        return self.hi

    def to_dict(self) -> dict:
        data: dict = {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        if self.kind == "truncated-normal":
            data.update(mean=self.mean, sigma=self.sigma)
        if self.kind == "piecewise-linear-density":
            data.update(xs=list(self.xs), fs=list(self.fs))
        return data

    @staticmethod
    def from_dict(data: dict) -> "CouplingDistribution":
        kind = data.get("kind")
        if kind == "uniform":
            return uniform(data["lo"], data["hi"])
        if kind == "truncated-normal":
            return truncated_normal(data["mean"], data["sigma"], data["lo"], data["hi"])
        if kind == "piecewise-linear-density":
            return piecewise_linear_density(data["xs"], data["fs"])
        raise ValueError(f"unknown distribution kind {kind!r}")


def uniform(lo: float, hi: float) -> CouplingDistribution:
    return CouplingDistribution(kind="uniform", lo=float(lo), hi=float(hi))


def truncated_normal(mean: float, sigma: float, lo: float, hi: float) -> CouplingDistribution:
    return CouplingDistribution(
        kind="truncated-normal", lo=float(lo), hi=float(hi), mean=float(mean), sigma=float(sigma)
    )


def piecewise_linear_density(xs: Iterable[float], fs: Iterable[float]) -> CouplingDistribution:
    xs = tuple(float(x) for x in xs)
    fs = tuple(float(f) for f in fs)
    return CouplingDistribution(kind="piecewise-linear-density", lo=xs[0], hi=xs[-1], xs=xs, fs=fs)


@dataclass
class RandomConfig:
    """A map from lattice sites to coupling values plus its provenance."""

    values: dict[Offset, float]
    dist: CouplingDistribution | None = None
    seed: int | None = None

    def get(self, site: Offset) -> float:
        try:
            return self.values[site]
        except KeyError:
            raise KeyError(f"no coupling value at site {site}") from None

    def sites(self) -> tuple[Offset, ...]:
        return tuple(sorted(self.values))


def sample_config(
    dist: CouplingDistribution, sites: Iterable[Offset], seed: int, stream: int = 0
) -> RandomConfig:
    """Draw one i.i.d. coupling value per site, keyed by (seed, site)."""
    values = {tuple(s): dist.ppf(site_uniform(seed, tuple(s), stream)) for s in sites}
    return RandomConfig(values=values, dist=dist, seed=seed)


def shift_config(omega: RandomConfig, gamma: Offset) -> RandomConfig:
    """Translate a configuration: the value at beta moves to beta + gamma."""
    gamma = tuple(gamma)
    shifted = {offset_add(site, gamma): v for site, v in omega.values.items()}
    return RandomConfig(values=shifted, dist=omega.dist, seed=omega.seed)


def substitute(omega: RandomConfig, gamma: Offset, value: float) -> RandomConfig:
    """Replace the coupling at one site, leaving all others untouched."""
    gamma = tuple(gamma)
    if omega.dist is not None and not omega.dist.degenerate:
        if not (omega.dist.lo <= value <= omega.dist.hi):
            warnings.warn(
                f"substituted value {value} lies outside the support "
                f"[{omega.dist.lo}, {omega.dist.hi}]",
                stacklevel=2,
            )
    values = dict(omega.values)
    values[gamma] = float(value)
    return RandomConfig(values=values, dist=omega.dist, seed=omega.seed)
