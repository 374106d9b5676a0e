"""Dense eigensolves, counting functions, and first-order perturbation checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from idslab.covering import Agglomerate, Offset
from idslab.operators import Hamiltonian, Model, check_covering_condition, symmetrize
from idslab.randomness import RandomConfig, substitute

DEGENERACY_SCALE = 1e-8


class DegenerateEigenvalueError(ValueError):
    """Raised when a perturbation check targets a near-degenerate level."""


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues with optional measure-orthonormal eigenvectors."""

    values: np.ndarray
    vectors: np.ndarray | None
    measure: np.ndarray
    degeneracy_tol: float
    near_degenerate: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def is_simple(self, index: int) -> bool:
        return not bool(self.near_degenerate[index])


def eigensolve(ham: Hamiltonian, want_vectors: bool = False) -> Spectrum:
    """Full symmetric eigendecomposition in the weighted inner product.

    The operator is conjugated to an ordinary symmetric matrix, solved with
    LAPACK, and the eigenvectors are mapped back so that they come out
    orthonormal with respect to the vertex measure.
    """
    sym = symmetrize(ham)
    sym = 0.5 * (sym + sym.T)
    try:
        if want_vectors:
            values, frame = np.linalg.eigh(sym)
            vectors = frame / np.sqrt(ham.measure)[:, None]
        else:
            values = np.linalg.eigvalsh(sym)
            vectors = None
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver failed on a {ham.n}x{ham.n} {ham.kind} matrix "
            f"(norm {np.max(np.abs(sym))})"
        ) from exc
    diameter = float(values[-1] - values[0]) if values.shape[0] > 1 else 0.0
    tol = DEGENERACY_SCALE * diameter
    flags = np.zeros(values.shape[0], dtype=bool)
    if values.shape[0] > 1:
        gaps = np.diff(values) < tol
        flags[:-1] |= gaps
        flags[1:] |= gaps
    return Spectrum(
        values=values,
        vectors=vectors,
        measure=ham.measure,
        degeneracy_tol=tol,
        near_degenerate=flags,
    )


def count_below(spectrum: Spectrum, energy: float) -> int:
    """Number of eigenvalues strictly below the energy."""
    return int(np.searchsorted(spectrum.values, energy, side="left"))


def counts_below(spectrum: Spectrum, energies: np.ndarray) -> np.ndarray:
    return np.searchsorted(spectrum.values, np.asarray(energies), side="left")


def projection_trace(spectrum: Spectrum, interval: tuple[float, float]) -> int:
    """Number of eigenvalues in the closed interval [lo, hi]."""
    lo, hi = interval
    if hi < lo:
        raise ValueError("interval must satisfy lo <= hi")
    upper = int(np.searchsorted(spectrum.values, hi, side="right"))
    lower = int(np.searchsorted(spectrum.values, lo, side="left"))
    return upper - lower


def _site_profile(agg: Agglomerate, values: dict, site: Offset) -> np.ndarray:
    """Vector of the single-site function translated to `site`."""
    out = np.zeros(agg.n)
    for (off, label), val in values.items():
        vertex = (tuple(a + b for a, b in zip(site, off)), label)
        idx = agg.index_of.get(vertex)
        if idx is not None:
            out[idx] += val
    return out


@dataclass(frozen=True)
class HellmannFeynmanResult:
    index: int
    eigenvalue: float
    derivatives: dict[Offset, float]
    total: float


def hellmann_feynman(
    model: Model, agg: Agglomerate, omega: RandomConfig, index: int
) -> HellmannFeynmanResult:
    """First-order eigenvalue derivatives with respect to every coupling.

    For the alloy potential the derivative at site gamma is the expectation
    <psi, v(gamma^-1 .) psi> of the translated single-site potential in the
    normalized eigenstate.  Requires a simple target eigenvalue; for a
    near-degenerate one the eigenvalue branch is not differentiable and the
    call refuses rather than silently averaging.

    When the single-site potential covers the cell (pointwise or through
    its summed translates), the derivative total must reach the coverage
    constant; a shortfall is reported as an error since it breaks the
    monotonicity the windowed level counts rely on.
    """
    if model.kind != "rap":
        raise ValueError("eigenvalue derivatives in the couplings need an alloy potential")
    ham = model.assemble(agg, omega)
    spectrum = eigensolve(ham, want_vectors=True)
    if not spectrum.is_simple(index):
        raise DegenerateEigenvalueError(
            f"eigenvalue {index} is within {spectrum.degeneracy_tol} of a neighbour; "
            "perturb the configuration and retry"
        )
    psi = spectrum.vectors[:, index]
    weight = spectrum.measure * psi * psi
    derivatives: dict[Offset, float] = {}
    for site in model.required_sites(agg.index_set):
        profile = _site_profile(agg, model.v.values, site)
        derivatives[site] = float(np.dot(weight, profile))
    total = float(sum(derivatives.values()))
    covering = check_covering_condition(model.v.values, model.v.coverage, model.spec)
    if (covering.strong or covering.weak) and total < model.v.coverage - 1e-9:
        raise ValueError(
            f"derivative total {total} fell below the coverage constant "
            f"{model.v.coverage} although the covering condition holds"
        )
    return HellmannFeynmanResult(
        index=index,
        eigenvalue=float(spectrum.values[index]),
        derivatives=derivatives,
        total=total,
    )


def fd_eigenvalue_derivative(
    model: Model,
    agg: Agglomerate,
    omega: RandomConfig,
    index: int,
    site: Offset,
    step: float = 1e-5,
) -> float:
    """Central finite difference of one eigenvalue in one coupling."""
    base = omega.values[site]
    upper = model.assemble(agg, substitute(omega, site, base + step))
    lower = model.assemble(agg, substitute(omega, site, base - step))
    e_up = eigensolve(upper).values[index]
    e_dn = eigensolve(lower).values[index]
    return float((e_up - e_dn) / (2.0 * step))


def hellmann_feynman_fd_gap(
    model: Model,
    agg: Agglomerate,
    omega: RandomConfig,
    index: int,
    step: float = 1e-5,
) -> float:
    """Largest |analytic - finite difference| over all coupling sites."""
    analytic = hellmann_feynman(model, agg, omega, index)
    worst = 0.0
    for site, value in analytic.derivatives.items():
        fd = fd_eigenvalue_derivative(model, agg, omega, index, site, step)
        worst = max(worst, abs(value - fd))
    return worst


@dataclass(frozen=True)
class ConformalCheckResult:
    index: int
    eigenvalue: float
    scale_rel_dev: float
    fd_sum: float
    fd_dev: float


def conformal_scale_deviation(
    model: Model, agg: Agglomerate, omega: RandomConfig, t: float
) -> float:
    """Max relative deviation of the shifted spectrum from exp(-t) scaling."""
    if model.kind != "ram":
        raise ValueError("conformal scaling applies to the alloy-metric model")
    base = eigensolve(model.assemble(agg, omega)).values
    shifted_omega = RandomConfig(
        values={site: val + t for site, val in omega.values.items()},
        dist=omega.dist,
        seed=omega.seed,
    )
    shifted = eigensolve(model.assemble(agg, shifted_omega)).values
    expected = math.exp(-t) * base
    denom = np.maximum(np.abs(expected), 1e-300)
    return float(np.max(np.abs(shifted - expected) / denom))


def conformal_derivative_check(
    model: Model,
    agg: Agglomerate,
    omega: RandomConfig,
    index: int,
    step: float = 1e-5,
) -> ConformalCheckResult:
    """Verify that the coupling derivatives of one level sum to -E.

    Route one: exact global rescaling at t = +-ln 2.  Route two: central
    finite differences coordinate by coordinate, summed over the extended
    site set.
    """
    if model.kind != "ram":
        raise ValueError("conformal derivative check applies to the alloy-metric model")
    spectrum = eigensolve(model.assemble(agg, omega))
    if not spectrum.is_simple(index):
        raise DegenerateEigenvalueError(
            f"eigenvalue {index} is within {spectrum.degeneracy_tol} of a neighbour"
        )
    energy = float(spectrum.values[index])
    scale_dev = max(
        conformal_scale_deviation(model, agg, omega, math.log(2.0)),
        conformal_scale_deviation(model, agg, omega, -math.log(2.0)),
    )
    fd_sum = 0.0
    for site in model.required_sites(agg.index_set):
        fd_sum += fd_eigenvalue_derivative(model, agg, omega, index, site, step)
    return ConformalCheckResult(
        index=index,
        eigenvalue=energy,
        scale_rel_dev=scale_dev,
        fd_sum=fd_sum,
        fd_dev=abs(fd_sum - (-energy)),
    )


def residual_norms(ham: Hamiltonian, spectrum: Spectrum) -> np.ndarray:
    """Weighted residual ||H psi - E psi||_m per eigenpair."""
    if spectrum.vectors is None:
        raise ValueError("spectrum was computed without eigenvectors")
    resid = ham.matrix @ spectrum.vectors - spectrum.vectors * spectrum.values[None, :]
    return np.sqrt(np.einsum("i,ij,ij->j", ham.measure, resid, resid))
