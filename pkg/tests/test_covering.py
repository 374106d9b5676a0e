"""Lattice cells, agglomerates, boxes, and support extension."""

import numpy as np
import pytest

from idslab.covering import (
    LatticeSpec,
    boundary_fraction,
    build_agglomerate,
    builtin_lattice,
    folner_boxes,
    shift_index_set,
    support_extension,
)


def test_chain_box_is_path_graph():
    spec = builtin_lattice("chain")
    agg = build_agglomerate(spec, [(0,), (1,), (2,)])
    assert agg.n == 3
    assert len(agg.edges) == 2
    assert agg.edges == ((0, 1, 1.0), (1, 2, 1.0))


def test_pendant_pair_two_cells_enumeration():
    # per cell: 2 pendant edges; one backbone edge between the cells
    spec = builtin_lattice("pendant-pair")
    agg = build_agglomerate(spec, [(0,), (1,)])
    assert agg.n == 6
    assert len(agg.edges) == 5


def test_translate_produces_identical_adjacency():
    spec = builtin_lattice("chain")
    assert build_agglomerate(spec, [(5,)]).edges == build_agglomerate(spec, [(0,)]).edges
    rng = np.random.default_rng(3)
    pend = builtin_lattice("pendant-pair")
    for _ in range(10):
        cells = {(int(c),) for c in rng.integers(-6, 7, size=5)}
        gamma = (int(rng.integers(-5, 6)),)
        a = build_agglomerate(pend, cells)
        b = build_agglomerate(pend, shift_index_set(cells, gamma))
        assert a.edges == b.edges
        assert [label for _off, label in a.vertices] == [label for _off, label in b.vertices]


def test_vertex_index_round_trips():
    spec = builtin_lattice("pendant-pair")
    agg = build_agglomerate(spec, [(2,), (0,), (7,)])
    for i in range(agg.n):
        off, label = agg.vertex_at(i)
        assert agg.vertex_index(off, label) == i


def test_vertex_order_is_lexicographic():
    spec = builtin_lattice("pendant-pair")
    agg = build_agglomerate(spec, [(1,), (0,)])
    assert agg.vertices[:3] == (((0,), "b"), ((0,), "p1"), ((0,), "p2"))
    assert agg.vertices[3:] == (((1,), "b"), ((1,), "p1"), ((1,), "p2"))


def test_empty_index_set_rejected():
    with pytest.raises(ValueError):
        build_agglomerate(builtin_lattice("chain"), [])


def test_wrong_dimension_offsets_rejected():
    with pytest.raises(ValueError):
        build_agglomerate(builtin_lattice("chain"), [(0, 0)])


def test_folner_boxes_1d_and_2d():
    chain = builtin_lattice("chain")
    boxes = folner_boxes(chain, [2, 4])
    assert boxes[0] == ((0,), (1,))
    assert boxes[1] == ((0,), (1,), (2,), (3,))
    square = builtin_lattice("square")
    assert len(folner_boxes(square, [3])[0]) == 9


def test_folner_boundary_fraction_shrinks():
    chain = builtin_lattice("chain")
    big = folner_boxes(chain, [100])[0]
    assert boundary_fraction(big) == pytest.approx(2 / 100)
    fractions = [boundary_fraction(box) for box in folner_boxes(chain, [4, 16, 64])]
    assert fractions == sorted(fractions, reverse=True)


def test_folner_boxes_reject_bad_lengths():
    chain = builtin_lattice("chain")
    with pytest.raises(ValueError):
        folner_boxes(chain, [0, 2])
    with pytest.raises(ValueError):
        folner_boxes(chain, [4, 4])


def test_support_extension_examples():
    assert support_extension([(0,), (1,), (2,)], [(0,)]) == ((0,), (1,), (2,))
    assert support_extension([(0,), (1,), (2,)], [(0,), (1,)]) == ((-1,), (0,), (1,), (2,))
    assert support_extension([], [(0,)]) == ()


def test_support_extension_size_bounds():
    rng = np.random.default_rng(11)
    for _ in range(20):
        cells = {(int(a), int(b)) for a, b in rng.integers(-5, 6, size=(6, 2))}
        supp = {(int(a), int(b)) for a, b in rng.integers(-2, 3, size=(3, 2))}
        supp.add((0, 0))
        ext = support_extension(cells, supp)
        assert len(ext) <= len(cells) * len(supp)
        assert len(ext) >= len(cells)
        assert set(cells) <= set(ext)


def test_support_extension_dimension_mismatch():
    with pytest.raises(ValueError):
        support_extension([(0,)], [(0, 0)])


def test_lattice_spec_validation():
    with pytest.raises(ValueError):
        LatticeSpec(dimension=1, cell_vertices=("a",), intra_edges=(("a", "a", 1.0),))
    with pytest.raises(ValueError):
        LatticeSpec(dimension=1, cell_vertices=("a",), inter_edges=(("a", "a", (0,), 1.0),))
    with pytest.raises(ValueError):
        LatticeSpec(dimension=1, cell_vertices=("a", "b"), intra_edges=(("a", "c", 1.0),))
    with pytest.raises(ValueError):
        LatticeSpec(dimension=1, cell_vertices=("a", "b"), intra_edges=(("a", "b", -1.0),))


def test_lattice_spec_json_round_trip():
    spec = builtin_lattice("pendant-pair")
    again = LatticeSpec.from_dict(spec.to_dict())
    assert again == spec


def test_unknown_builtin_name():
    with pytest.raises(ValueError):
        builtin_lattice("triangular")


def test_agglomerate_is_unsmoothed_union_of_cells():
    # the region is exactly the requested cells: no padding ring is added,
    # so the padded and unpadded constructions coincide structurally
    spec = builtin_lattice("square")
    cells = {(0, 0), (2, 1), (0, 1)}
    agg = build_agglomerate(spec, cells)
    assert set(agg.index_set) == cells
    assert agg.n == len(cells) * spec.cell_size


def test_degrees_count_full_lattice():
    pend = builtin_lattice("pendant-pair")
    assert pend.degree("b") == 4.0  # 2 pendants + backbone both ways
    assert pend.degree("p1") == 1.0
    assert builtin_lattice("square").degree("a") == 4.0
