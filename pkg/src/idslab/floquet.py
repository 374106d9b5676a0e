"""Floquet analysis of the periodic operator: twisted matrices and bands.

The periodic operator diagonalizes over the torus of phases theta.  Each
fiber is a small Hermitian matrix on one cell; its sorted eigenvalues are
the band functions.  Integrating the counting function over a uniform
phase grid gives the periodic IDS, and a band that is constant in theta
is precisely a jump of that IDS.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from idslab.covering import LatticeSpec

_HERMITICITY_TOL = 1e-13


@dataclass(frozen=True)
class BlochMatrix:
    theta: tuple[float, ...]
    matrix: np.ndarray


@dataclass(frozen=True)
class BandStructure:
    """Band energies on a uniform tensor grid of phases.

    thetas has shape (P, d) and bands (P, m) with m the cell size; each
    row of bands is sorted.
    """

    thetas: np.ndarray
    bands: np.ndarray
    grid_points: int
    dimension: int

    @property
    def n_bands(self) -> int:
        return self.bands.shape[1]


def twisted_hamiltonian(
    spec: LatticeSpec, v_per: dict[str, float] | None, theta
) -> BlochMatrix:
    """Fiber operator at phase theta: degrees plus phased couplings.

    The diagonal carries the full-lattice degree and the periodic
    potential; an edge template to cell `off` contributes -w e^{i theta.off}
    and its reverse the conjugate, so the matrix is Hermitian and real at
    theta = 0.
    """
    theta = tuple(float(t) for t in theta)
    if len(theta) != spec.dimension:
        raise ValueError(f"theta has length {len(theta)}, expected {spec.dimension}")
    m = spec.cell_size
    pos = {label: i for i, label in enumerate(spec.cell_vertices)}
    matrix = np.zeros((m, m), dtype=complex)
    for label in spec.cell_vertices:
        diag = spec.degree(label)
        if v_per:
            diag += float(v_per.get(label, 0.0))
        matrix[pos[label], pos[label]] += diag
    for u, v, w in spec.intra_edges:
        matrix[pos[u], pos[v]] -= w
        matrix[pos[v], pos[u]] -= w
    for u, v, off, w in spec.inter_edges:
        phase = np.exp(1j * float(np.dot(theta, off)))
        matrix[pos[u], pos[v]] -= w * phase
        matrix[pos[v], pos[u]] -= w * np.conj(phase)
    defect = float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0))
    if defect > _HERMITICITY_TOL * max(1.0, float(np.max(np.abs(matrix)))):
        raise AssertionError(f"twisted matrix lost hermiticity (defect {defect})")
    return BlochMatrix(theta=theta, matrix=matrix)


def band_structure(
    spec: LatticeSpec, v_per: dict[str, float] | None, grid_points: int
) -> BandStructure:
    """Eigensolve the fiber operators on the uniform grid {2 pi j / G}^d."""
    if grid_points < 2:
        raise ValueError("grid needs at least 2 points per axis")
    g = int(grid_points)
    step = 2.0 * np.pi / g
    points = list(itertools.product(range(g), repeat=spec.dimension))
    thetas = np.array([[step * j for j in point] for point in points])
    bands = np.empty((len(points), spec.cell_size))
    for row, theta in enumerate(thetas):
        bloch = twisted_hamiltonian(spec, v_per, theta)
        bands[row] = np.linalg.eigvalsh(bloch.matrix)
    return BandStructure(thetas=thetas, bands=bands, grid_points=g, dimension=spec.dimension)


def bloch_ids(bands: BandStructure, energy: float) -> float:
    """Phase-averaged counting function N(E), exact on flat bands.

    Each band contributes the fraction of grid phases with band energy
    strictly below E, normalized per cell vertex.
    """
    total = int(np.count_nonzero(bands.bands < energy))
    return total / (bands.bands.shape[0] * bands.n_bands)


def bloch_ids_curve(bands: BandStructure, energies) -> np.ndarray:
    flat = np.sort(bands.bands.reshape(-1))
    counts = np.searchsorted(flat, np.asarray(energies, dtype=float), side="left")
    return counts / flat.shape[0]


def flat_band_detect(bands: BandStructure, tol: float = 1e-9) -> list[tuple[int, float]]:
    """Bands whose spread over the grid is below tol, with their energy.

    Returned band numbers are 1-based to match the sorted-band labelling
    E_1 <= E_2 <= ...; these bands are exactly the square-summable
    eigenvalues of the periodic operator, i.e. the IDS jumps.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    found = []
    for n in range(bands.n_bands):
        column = bands.bands[:, n]
        width = float(column.max() - column.min())
        if width < tol:
            found.append((n + 1, float(column.mean())))
    return found


def ids_jump_height(bands: BandStructure, energy: float, tol: float = 1e-9) -> float:
    """Height of the IDS jump at an energy: flat bands there, per vertex."""
    hits = [1 for _n, e in flat_band_detect(bands, tol) if abs(e - energy) <= tol]
    return len(hits) / bands.n_bands


def bands_csv_header(dimension: int, n_bands: int) -> list[str]:
    return [f"theta_{i + 1}" for i in range(dimension)] + [
        f"E_{n + 1}" for n in range(n_bands)
    ]
