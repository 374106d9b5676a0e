"""Twisted fiber operators, bands, the phase-average IDS, and flat bands."""

import math

import numpy as np
import pytest

from idslab.covering import LatticeSpec, builtin_lattice
from idslab.floquet import (
    band_structure,
    bands_csv_header,
    bloch_ids,
    bloch_ids_curve,
    flat_band_detect,
    ids_jump_height,
    twisted_hamiltonian,
)

CHAIN = builtin_lattice("chain")
PENDANT = builtin_lattice("pendant-pair")


def chain_ids_exact(energy):
    # N(E) = arccos(1 - E/2) / pi on the band [0, 4]
    if energy <= 0:
        return 0.0
    if energy >= 4:
        return 1.0
    return math.acos(1.0 - energy / 2.0) / math.pi


def test_chain_fiber_matrix():
    for theta in (0.0, 0.9, math.pi):
        bloch = twisted_hamiltonian(CHAIN, None, [theta])
        assert bloch.matrix.shape == (1, 1)
        assert bloch.matrix[0, 0] == pytest.approx(2.0 - 2.0 * math.cos(theta))


def test_pendant_fiber_matrix_and_flat_vector():
    theta = 1.234
    bloch = twisted_hamiltonian(PENDANT, None, [theta])
    expected = np.array(
        [
            [4.0 - 2.0 * math.cos(theta), -1.0, -1.0],
            [-1.0, 1.0, 0.0],
            [-1.0, 0.0, 1.0],
        ],
        dtype=complex,
    )
    assert np.allclose(bloch.matrix, expected, atol=1e-14)
    flat = np.array([0.0, 1.0, -1.0])
    assert np.allclose(bloch.matrix @ flat, flat, atol=1e-14)


def test_zero_phase_matrix_is_real():
    bloch = twisted_hamiltonian(PENDANT, None, [0.0])
    assert np.max(np.abs(bloch.matrix.imag)) == 0.0


def test_periodic_potential_enters_diagonal():
    bloch = twisted_hamiltonian(PENDANT, {"p1": 0.5}, [0.0])
    assert bloch.matrix[1, 1].real == pytest.approx(1.5)


def test_band_structure_chain_grid_values():
    bands = band_structure(CHAIN, None, 4)
    assert sorted(np.round(bands.bands[:, 0], 12).tolist()) == [0.0, 2.0, 2.0, 4.0]


def test_pendant_flat_band_across_grid():
    bands = band_structure(PENDANT, None, 32)
    middle = bands.bands[:, 1]
    assert np.max(middle) - np.min(middle) < 1e-12
    assert np.allclose(middle, 1.0)


def test_bands_symmetric_under_phase_reflection():
    bands = band_structure(PENDANT, None, 16)
    for j in range(1, 16):
        row = bands.bands[j]
        mirrored = bands.bands[(16 - j) % 16]
        assert np.allclose(row, mirrored, atol=1e-12)


def test_bloch_ids_chain_against_closed_form():
    for grid in (64, 256):
        bands = band_structure(CHAIN, None, grid)
        for energy in (0.5, 1.0, 2.0, 3.3):
            assert abs(bloch_ids(bands, energy) - chain_ids_exact(energy)) <= 2.0 / grid


def test_bloch_ids_edges_and_monotonicity():
    bands = band_structure(PENDANT, None, 32)
    assert bloch_ids(bands, -1.0) == 0.0
    assert bloch_ids(bands, float(np.max(bands.bands)) + 1.0) == 1.0
    grid = np.linspace(-0.5, 7.0, 101)
    curve = bloch_ids_curve(bands, grid)
    assert np.all(np.diff(curve) >= 0)


def test_pendant_jump_is_exactly_one_third():
    bands = band_structure(PENDANT, None, 64)
    jump = bloch_ids(bands, 1.0 + 1e-6) - bloch_ids(bands, 1.0 - 1e-6)
    assert jump == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert ids_jump_height(bands, 1.0) == pytest.approx(1.0 / 3.0)


def test_flat_band_detect_chain_empty_pendant_found():
    assert flat_band_detect(band_structure(CHAIN, None, 32)) == []
    flats = flat_band_detect(band_structure(PENDANT, None, 32))
    assert len(flats) == 1
    band, energy = flats[0]
    assert band == 2
    assert energy == pytest.approx(1.0, abs=1e-12)


def test_decoupled_pendant_adds_flat_band_at_zero():
    spec = LatticeSpec(
        dimension=1,
        cell_vertices=("b", "p1", "p2"),
        intra_edges=(("b", "p1", 1.0),),
        inter_edges=(("b", "b", (1,), 1.0),),
    )
    flats = flat_band_detect(band_structure(spec, None, 32))
    assert (1, 0.0) in [(n, round(e, 12)) for n, e in flats]


def test_band_structure_input_validation():
    with pytest.raises(ValueError):
        band_structure(CHAIN, None, 1)
    with pytest.raises(ValueError):
        twisted_hamiltonian(CHAIN, None, [0.0, 0.0])


def test_csv_header_shape():
    assert bands_csv_header(1, 3) == ["theta_1", "E_1", "E_2", "E_3"]
    assert bands_csv_header(2, 1) == ["theta_1", "theta_2", "E_1"]


def test_square_lattice_band_minimum():
    bands = band_structure(builtin_lattice("square"), None, 8)
    assert float(np.min(bands.bands)) == pytest.approx(0.0, abs=1e-12)
    assert float(np.max(bands.bands)) == pytest.approx(8.0, abs=1e-12)
