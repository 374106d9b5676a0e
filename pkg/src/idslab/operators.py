"""Assembly of periodic, alloy-potential, and alloy-metric Hamiltonians.

All operators act on a finite agglomerate with the Dirichlet convention:
the diagonal carries the full-lattice weighted degree of each vertex while
off-diagonal couplings exist only between interior vertices.  This keeps
every finite restriction nonnegative as a quadratic form.

Two disorder mechanisms are supported.  An alloy potential adds
sum_gamma q_gamma * v(gamma^-1 x) to the diagonal (vertex measure stays 1).
An alloy metric multiplies the Laplacian by the reciprocal of the random
vertex weight a(x) = sum_gamma exp(r_gamma) u(gamma^-1 x) and makes a(x)
the measure of the inner product, so the operator is self-adjoint in
l^2(a) and scales exactly by exp(-t) when every r_gamma is shifted by t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from idslab.covering import (
    Agglomerate,
    LatticeSpec,
    Offset,
    offset_sub,
    support_extension,
)
from idslab.randomness import RandomConfig

_SYMMETRY_TOL = 1e-12
_NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class SingleSitePotential:
    """Nonnegative single-site potential with finite support.

    `values` maps (cell offset, vertex label) to the potential value the
    site places on that vertex of its own frame; `coverage` is the lower
    bound lambda claimed on cell 0 (strong form) or on the summed
    translates (weak form).
    """

    values: dict[tuple[Offset, str], float]
    coverage: float = 1.0

    def __post_init__(self) -> None:
        cleaned = {}
        for (off, label), val in self.values.items():
            val = float(val)
            if val < 0:
                raise ValueError("single-site potential must be nonnegative")
            if val != 0.0:
                cleaned[(tuple(off), str(label))] = val
        if not cleaned:
            raise ValueError("single-site potential has empty support")
        if self.coverage <= 0:
            raise ValueError("coverage constant must be positive")
        object.__setattr__(self, "values", cleaned)

    @property
    def support_offsets(self) -> tuple[Offset, ...]:
        return tuple(sorted({off for off, _ in self.values}))

    def value(self, off: Offset, label: str) -> float:
        return self.values.get((off, label), 0.0)


@dataclass(frozen=True)
class SingleSiteDeformation:
    """Nonnegative single-site conformal weight with finite support.

    The alloy-metric construction requires the translates to sum to one on
    every vertex; `normalized()` rescales per vertex label to enforce it.
    """

    values: dict[tuple[Offset, str], float]
    coverage: float = 1.0

    def __post_init__(self) -> None:
        cleaned = {}
        for (off, label), val in self.values.items():
            val = float(val)
            if val < 0:
                raise ValueError("single-site deformation must be nonnegative")
            if val != 0.0:
                cleaned[(tuple(off), str(label))] = val
        if not cleaned:
            raise ValueError("single-site deformation has empty support")
        if self.coverage <= 0:
            raise ValueError("coverage constant must be positive")
        object.__setattr__(self, "values", cleaned)

    @property
    def support_offsets(self) -> tuple[Offset, ...]:
        return tuple(sorted({off for off, _ in self.values}))

    def value(self, off: Offset, label: str) -> float:
        return self.values.get((off, label), 0.0)

    def translate_sums(self, spec: LatticeSpec) -> dict[str, float]:
        """Sum of all translates evaluated on one periodicity cell."""
        sums = {label: 0.0 for label in spec.cell_vertices}
        for (off, label), val in self.values.items():
            if label not in sums:
                raise ValueError(f"deformation references unknown vertex {label!r}")
            sums[label] += val
        return sums

    def check_normalized(self, spec: LatticeSpec, tol: float = _NORMALIZATION_TOL) -> None:
        for label, total in self.translate_sums(spec).items():
            if abs(total - 1.0) > tol:
                raise ValueError(
                    f"deformation translates sum to {total} on vertex {label!r}; "
                    "normalize so the sum is 1 everywhere"
                )

    def normalized(self, spec: LatticeSpec) -> "SingleSiteDeformation":
        sums = self.translate_sums(spec)
        if any(total <= 0 for total in sums.values()):
            raise ValueError("cannot normalize: some vertex is never covered")
        scale = min(1.0 / total for total in sums.values())
        values = {key: val / sums[key[1]] for key, val in self.values.items()}
        return SingleSiteDeformation(values=values, coverage=self.coverage * scale)


def chi_cell(spec: LatticeSpec, value: float = 1.0) -> dict[tuple[Offset, str], float]:
    """Indicator-style site function: `value` on every vertex of cell 0."""
    zero = (0,) * spec.dimension
    return {(zero, label): value for label in spec.cell_vertices}


@dataclass(frozen=True)
class CoveringReport:
    strong: bool
    weak: bool
    strong_min: float
    weak_min: float
    threshold: float


def check_covering_condition(
    values: dict[tuple[Offset, str], float], threshold: float, spec: LatticeSpec
) -> CoveringReport:
    """Check the pointwise and the summed-translate lower bounds on a cell."""
    strong_min = min(values.get(((0,) * spec.dimension, label), 0.0) for label in spec.cell_vertices)
    sums = {label: 0.0 for label in spec.cell_vertices}
    for (_off, label), val in values.items():
        if label in sums:
            sums[label] += val
    weak_min = min(sums.values())
    return CoveringReport(
        strong=strong_min >= threshold,
        weak=weak_min >= threshold,
        strong_min=strong_min,
        weak_min=weak_min,
        threshold=threshold,
    )


@dataclass(frozen=True)
class Hamiltonian:
    """Finite symmetric operator together with its vertex measure.

    `matrix` need not be symmetric as an array; the symmetry that matters
    is with respect to the weighted inner product <f,g> = sum m(x)f(x)g(x),
    i.e. m(x)H(x,y) = m(y)H(y,x).  `symmetrize` maps to an ordinary
    symmetric matrix with the same spectrum.
    """

    matrix: np.ndarray
    measure: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        measure = np.asarray(self.measure, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        if measure.shape != (matrix.shape[0],):
            raise ValueError("measure length must match matrix dimension")
        if np.any(measure <= 0):
            raise ValueError("vertex measure must be strictly positive")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "measure", measure)
        weighted = measure[:, None] * matrix
        defect = float(np.max(np.abs(weighted - weighted.T), initial=0.0))
        scale = float(np.max(np.abs(weighted), initial=0.0))
        if defect > _SYMMETRY_TOL * max(1.0, scale):
            raise ValueError(f"operator is not self-adjoint in the weighted space (defect {defect})")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def validate(self, positivity_tol: float = 1e-10) -> None:
        """Full invariant check including form nonnegativity (eigensolve)."""
        low = float(np.linalg.eigvalsh(symmetrize(self))[0])
        if low < -positivity_tol:
            raise ValueError(f"operator has negative form bottom {low}")

    def to_coo_text(self) -> str:
        """Coordinate-triplet dump (row, col, value) of nonzero entries."""
        lines = []
        rows, cols = np.nonzero(self.matrix)
        for i, j in zip(rows, cols):
            lines.append(f"{i} {j} {float(self.matrix[i, j])!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    def measure_csv(self) -> str:
        lines = ["index,measure"]
        lines.extend(f"{i},{float(v)!r}" for i, v in enumerate(self.measure))
        return "\n".join(lines) + "\n"


def symmetrize(ham: Hamiltonian) -> np.ndarray:
    """Similarity transform to an ordinary symmetric matrix, same spectrum."""
    root = np.sqrt(ham.measure)
    return (root[:, None] * ham.matrix) / root[None, :]


def _dirichlet_laplacian_parts(agg: Agglomerate) -> tuple[np.ndarray, np.ndarray]:
    n = agg.n
    adjacency = np.zeros((n, n))
    for i, j, w in agg.edges:
        adjacency[i, j] += w
        adjacency[j, i] += w
    degrees = np.array([agg.spec.degree(label) for _off, label in agg.vertices])
    return degrees, adjacency


def assemble_laplacian(agg: Agglomerate) -> Hamiltonian:
    """Dirichlet graph Laplacian: full-lattice degrees, interior adjacency."""
    degrees, adjacency = _dirichlet_laplacian_parts(agg)
    matrix = np.diag(degrees) - adjacency
    return Hamiltonian(matrix=matrix, measure=np.ones(agg.n), kind="periodic")


def alloy_potential(
    agg: Agglomerate, omega: RandomConfig, v: SingleSitePotential
) -> np.ndarray:
    """Evaluate sum_gamma q_gamma v(gamma^-1 x) on every agglomerate vertex."""
    out = np.zeros(agg.n)
    for idx, (beta, label) in enumerate(agg.vertices):
        total = 0.0
        for (off, vlabel), val in v.values.items():
            if vlabel != label:
                continue
            site = offset_sub(beta, off)
            try:
                q = omega.values[site]
            except KeyError:
                raise ValueError(
                    f"missing coupling at site {site}; the potential support "
                    "requires values on the extended index set"
                ) from None
            if q < 0:
                raise ValueError(f"negative coupling {q} at site {site}")
            total += q * val
        out[idx] = total
    return out


def assemble_rap(
    agg: Agglomerate,
    omega: RandomConfig,
    v: SingleSitePotential,
    v_per: dict[str, float] | None = None,
) -> Hamiltonian:
    """Alloy-potential operator: Dirichlet Laplacian plus random diagonal."""
    degrees, adjacency = _dirichlet_laplacian_parts(agg)
    periodic = np.zeros(agg.n)
    if v_per:
        for label, val in v_per.items():
            if label not in agg.spec.cell_vertices:
                raise ValueError(f"periodic potential references unknown vertex {label!r}")
            if val < 0:
                raise ValueError("periodic potential must be nonnegative")
        periodic = np.array([float(v_per.get(label, 0.0)) for _off, label in agg.vertices])
    random_part = alloy_potential(agg, omega, v)
    matrix = np.diag(degrees + periodic + random_part) - adjacency
    return Hamiltonian(matrix=matrix, measure=np.ones(agg.n), kind="rap")


def conformal_weights(
    agg: Agglomerate, omega: RandomConfig, u: SingleSiteDeformation
) -> np.ndarray:
    """Vertex weights a(x) = sum_gamma exp(r_gamma) u(gamma^-1 x)."""
    out = np.zeros(agg.n)
    for idx, (beta, label) in enumerate(agg.vertices):
        total = 0.0
        for (off, ulabel), val in u.values.items():
            if ulabel != label:
                continue
            site = offset_sub(beta, off)
            try:
                r = omega.values[site]
            except KeyError:
                raise ValueError(
                    f"missing coupling at site {site}; the deformation support "
                    "requires values on the extended index set"
                ) from None
            total += math.exp(r) * val
        out[idx] = total
    return out


def assemble_ram(
    agg: Agglomerate,
    omega: RandomConfig,
    u: SingleSiteDeformation,
    metric_mode: str = "measure",
) -> Hamiltonian:
    """Alloy-metric operator H = (1/a) L in the weighted space l^2(a).

    The default "measure" mode perturbs the vertex measure only, which is
    the discretization under which a global shift of every coupling by t
    rescales the whole spectrum by exp(-t) exactly.  The alternative
    "edges" mode also reweights edges by the geometric mean of the endpoint
    weights; a global shift then leaves the operator invariant, so the
    exact scaling law holds only in "measure" mode.
    """
    u.check_normalized(agg.spec)
    a = conformal_weights(agg, omega, u)
    if np.any(a <= 0):
        raise ValueError("conformal weight must be strictly positive on the agglomerate")
    if metric_mode == "measure":
        degrees, adjacency = _dirichlet_laplacian_parts(agg)
        lap = np.diag(degrees) - adjacency
    elif metric_mode == "edges":
        lap = _edge_weighted_laplacian(agg, omega, u, a)
    else:
        raise ValueError(f"unknown metric_mode {metric_mode!r}")
    matrix = lap / a[:, None]
    meta = {"a_min": float(a.min()), "a_max": float(a.max()), "metric_mode": metric_mode}
    return Hamiltonian(matrix=matrix, measure=a, kind="ram", meta=meta)


def _edge_weighted_laplacian(
    agg: Agglomerate, omega: RandomConfig, u: SingleSiteDeformation, a: np.ndarray
) -> np.ndarray:
    # Exterior endpoints of boundary edges need conformal weights of their
    # own, so this mode demands couplings on a neighbourhood of the box.
    n = agg.n
    adjacency = np.zeros((n, n))
    degrees = np.zeros(n)
    inside = set(agg.index_set)

    def weight_at(beta: Offset, label: str) -> float:
        total = 0.0
        for (off, ulabel), val in u.values.items():
            if ulabel != label:
                continue
            site = offset_sub(beta, off)
            try:
                r = omega.values[site]
            except KeyError:
                raise ValueError(
                    f"metric_mode='edges' needs couplings beyond the box; missing site {site}"
                ) from None
            total += math.exp(r) * val
        return total

    for i, j, w in agg.edges:
        we = w * math.sqrt(a[i] * a[j])
        adjacency[i, j] += we
        adjacency[j, i] += we
        degrees[i] += we
        degrees[j] += we
    # boundary-crossing edges contribute degree only (Dirichlet)
    for off in agg.index_set:
        for uu, vv, shift, w in agg.spec.inter_edges:
            for src, dst, s_lab, d_lab in (
                (off, tuple(o + s for o, s in zip(off, shift)), uu, vv),
                (off, tuple(o - s for o, s in zip(off, shift)), vv, uu),
            ):
                if dst in inside:
                    continue
                i = agg.vertex_index(src, s_lab)
                degrees[i] += w * math.sqrt(a[i] * weight_at(dst, d_lab))
    return np.diag(degrees) - adjacency


@dataclass(frozen=True)
class STransform:
    """Diagonal unitary between two weighted spaces l^2(a1) -> l^2(a2)."""

    factors: np.ndarray
    source: np.ndarray
    target: np.ndarray

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.factors * vec

    def conjugate(self, ham: Hamiltonian) -> Hamiltonian:
        """Push an operator on l^2(a1) forward to l^2(a2), same spectrum."""
        if ham.matrix.shape[0] != self.factors.shape[0]:
            raise ValueError("dimension mismatch")
        matrix = (self.factors[:, None] * ham.matrix) / self.factors[None, :]
        meta = dict(ham.meta)
        meta["conjugated"] = True
        return Hamiltonian(matrix=matrix, measure=self.target, kind=ham.kind, meta=meta)


def s_transform(a1: np.ndarray, a2: np.ndarray) -> STransform:
    """Multiplication by sqrt(a1/a2); an exact isometry between the spaces."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.shape != a2.shape:
        raise ValueError("weight vectors must have equal length")
    if np.any(a1 <= 0) or np.any(a2 <= 0):
        raise ValueError("weights must be strictly positive")
    return STransform(factors=np.sqrt(a1 / a2), source=a1, target=a2)


@dataclass(frozen=True)
class Model:
    """Bundle of lattice, single-site data, and model type.

    kind is one of "periodic", "rap", "ram".  The bundle knows how to
    assemble its Hamiltonian on an agglomerate for a given configuration
    and which sites that configuration must cover.
    """

    kind: str
    spec: LatticeSpec
    v: SingleSitePotential | None = None
    u: SingleSiteDeformation | None = None
    v_per: dict[str, float] = field(default_factory=dict)
    metric_mode: str = "measure"

    def __post_init__(self) -> None:
        if self.kind not in ("periodic", "rap", "ram"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "rap" and self.v is None:
            raise ValueError("alloy-potential model needs a single-site potential")
        if self.kind == "ram" and self.u is None:
            raise ValueError("alloy-metric model needs a single-site deformation")

    @property
    def needs_disorder(self) -> bool:
        return self.kind in ("rap", "ram")

    def support_offsets(self) -> tuple[Offset, ...]:
        if self.kind == "rap":
            return self.v.support_offsets
        if self.kind == "ram":
            return self.u.support_offsets
        return ((0,) * self.spec.dimension,)

    def required_sites(self, index_set: Iterable[Offset]) -> tuple[Offset, ...]:
        return support_extension(index_set, self.support_offsets())

    def assemble(self, agg: Agglomerate, omega: RandomConfig | None = None) -> Hamiltonian:
        if self.kind == "periodic":
            base = assemble_laplacian(agg)
            if not self.v_per:
                return base
            periodic = np.array(
                [float(self.v_per.get(label, 0.0)) for _off, label in agg.vertices]
            )
            if np.any(periodic < 0):
                raise ValueError("periodic potential must be nonnegative")
            return Hamiltonian(
                matrix=base.matrix + np.diag(periodic), measure=base.measure, kind="periodic"
            )
        if omega is None:
            raise ValueError(f"model kind {self.kind!r} needs a random configuration")
        if self.kind == "rap":
            return assemble_rap(agg, omega, self.v, self.v_per)
        return assemble_ram(agg, omega, self.u, self.metric_mode)
