"""Periodic lattice geometry: cells, integer shifts, and finite agglomerates.

A lattice is described by one periodicity cell (a small weighted graph) plus
edge templates that connect a cell to its integer translates.  Finite pieces
of the infinite lattice are assembled from an index set of cell offsets; the
resulting `Agglomerate` carries a deterministic vertex numbering so that all
downstream matrices are bit-reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Offset = tuple[int, ...]


def offset_add(a: Offset, b: Offset) -> Offset:
    return tuple(x + y for x, y in zip(a, b))


def offset_sub(a: Offset, b: Offset) -> Offset:
    return tuple(x - y for x, y in zip(a, b))


def offset_neg(a: Offset) -> Offset:
    return tuple(-x for x in a)


def as_offset(value: Sequence[int], dimension: int | None = None) -> Offset:
    """Coerce a sequence of integers to an offset tuple, checking dimension."""
    off = tuple(int(v) for v in value)
    if dimension is not None and len(off) != dimension:
        raise ValueError(f"offset {off} has length {len(off)}, expected {dimension}")
    return off


@dataclass(frozen=True)
class LatticeSpec:
    """One periodicity cell of a Z^d-periodic weighted graph.

    Fields
    ------
    dimension:
        number of independent shift directions d.
    cell_vertices:
        labels of the vertices inside one cell; their order fixes the
        matrix layout of every operator built from this spec.
    intra_edges:
        (u, v, weight) pairs inside a single cell.
    inter_edges:
        (u, v, offset, weight) templates joining vertex u of cell 0 to
        vertex v of cell `offset`.  Each template is listed once; the
        reversed copy (v of cell 0 to u of cell -offset) is implied.
    """

    dimension: int
    cell_vertices: tuple[str, ...]
    intra_edges: tuple[tuple[str, str, float], ...] = ()
    inter_edges: tuple[tuple[str, str, Offset, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "cell_vertices", tuple(str(v) for v in self.cell_vertices))
        intra = tuple((str(u), str(v), float(w)) for u, v, w in self.intra_edges)
        inter = tuple(
            (str(u), str(v), as_offset(off, self.dimension), float(w))
            for u, v, off, w in self.inter_edges
        )
        object.__setattr__(self, "intra_edges", intra)
        object.__setattr__(self, "inter_edges", inter)
        self._validate()

    def _validate(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if not self.cell_vertices:
            raise ValueError("cell must contain at least one vertex")
        if len(set(self.cell_vertices)) != len(self.cell_vertices):
            raise ValueError("duplicate cell vertex labels")
        known = set(self.cell_vertices)
        for u, v, w in self.intra_edges:
            if u not in known or v not in known:
                raise ValueError(f"intra edge ({u},{v}) references unknown vertex")
            if u == v:
                raise ValueError(f"self-loop at {u} is not allowed")
            if w <= 0:
                raise ValueError(f"intra edge ({u},{v}) has nonpositive weight {w}")
        for u, v, off, w in self.inter_edges:
            if u not in known or v not in known:
                raise ValueError(f"inter edge ({u},{v},{off}) references unknown vertex")
            if all(c == 0 for c in off):
                raise ValueError("inter edge offsets must be nonzero; use intra_edges for offset 0")
            if w <= 0:
                raise ValueError(f"inter edge ({u},{v},{off}) has nonpositive weight {w}")

    @property
    def cell_size(self) -> int:
        return len(self.cell_vertices)

    def vertex_position(self, label: str) -> int:
        return self.cell_vertices.index(label)

    def degree(self, label: str) -> float:
        """Weighted degree of a vertex in the full infinite lattice.

        Counts every incident edge: intra-cell edges, outgoing templates,
        and incoming reversed templates.  Used as the Dirichlet diagonal.
        """
        deg = 0.0
        for u, v, w in self.intra_edges:
            if u == label:
                deg += w
            if v == label:
                deg += w
        for u, v, _off, w in self.inter_edges:
            if u == label:
                deg += w
            if v == label:
                deg += w
        return deg

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "cell_vertices": list(self.cell_vertices),
            "intra_edges": [[u, v, w] for u, v, w in self.intra_edges],
            "inter_edges": [[u, v, list(off), w] for u, v, off, w in self.inter_edges],
        }

    @staticmethod
    def from_dict(data: dict) -> "LatticeSpec":
        return LatticeSpec(
            dimension=int(data["dimension"]),
            cell_vertices=tuple(data["cell_vertices"]),
            intra_edges=tuple((u, v, w) for u, v, w in data.get("intra_edges", [])),
            inter_edges=tuple(
                (u, v, tuple(off), w) for u, v, off, w in data.get("inter_edges", [])
            ),
        )


def _chain() -> LatticeSpec:
    return LatticeSpec(
        dimension=1,
        cell_vertices=("a",),
        inter_edges=((("a"), ("a"), (1,), 1.0),),
    )


def _square() -> LatticeSpec:
    return LatticeSpec(
        dimension=2,
        cell_vertices=("a",),
        inter_edges=(("a", "a", (1, 0), 1.0), ("a", "a", (0, 1), 1.0)),
    )


def _pendant_pair() -> LatticeSpec:
    # Backbone chain with two pendant vertices per cell.  The antisymmetric
    # pendant combination is an exact eigenvector at energy 1 for every
    # Floquet phase, so this lattice has a flat band and a jump of the IDS.
    return LatticeSpec(
        dimension=1,
        cell_vertices=("b", "p1", "p2"),
        intra_edges=(("b", "p1", 1.0), ("b", "p2", 1.0)),
        inter_edges=(("b", "b", (1,), 1.0),),
    )


BUILTIN_LATTICES: dict[str, dict] = {
    "chain": {"factory": _chain, "summary": "1 vertex per cell on Z^1, nearest neighbour"},
    "square": {"factory": _square, "summary": "1 vertex per cell on Z^2, nearest neighbour"},
    "pendant-pair": {
        "factory": _pendant_pair,
        "summary": "Z^1 backbone with two pendants per cell (flat band at E=1)",
    },
}


def builtin_lattice(name: str) -> LatticeSpec:
    try:
        return BUILTIN_LATTICES[name]["factory"]()
    except KeyError:
        known = ", ".join(sorted(BUILTIN_LATTICES))
        raise ValueError(f"unknown lattice {name!r}; built-ins are: {known}") from None


@dataclass(frozen=True)
class Agglomerate:
    """A finite union of lattice cells with Dirichlet-ready bookkeeping.

    Vertices are the pairs (cell offset, cell vertex label) ordered
    lexicographically, so translating the index set produces the identical
    matrix layout.  `edges` keeps only pairs with both endpoints inside;
    the full-lattice degree of each vertex is still available through the
    spec, which is what the Dirichlet convention needs.
    """

    spec: LatticeSpec
    index_set: tuple[Offset, ...]
    vertices: tuple[tuple[Offset, str], ...]
    edges: tuple[tuple[int, int, float], ...]
    index_of: dict = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def vertex_index(self, offset: Offset, label: str) -> int:
        return self.index_of[(offset, label)]

    def vertex_at(self, index: int) -> tuple[Offset, str]:
        return self.vertices[index]


def build_agglomerate(spec: LatticeSpec, index_set: Iterable[Offset]) -> Agglomerate:
    """Assemble the finite subgraph spanned by the given cell offsets.

    Vertex order is lexicographic in (offset, position of label in the
    cell); edge order follows vertex order.  Edges crossing the boundary
    of the index set are dropped here and only enter through the degree
    term of the Dirichlet Laplacian.
    """
    cells = sorted({as_offset(off, spec.dimension) for off in index_set})
    if not cells:
        raise ValueError("index set must be non-empty")
    vertices = tuple((off, label) for off in cells for label in spec.cell_vertices)
    index_of = {v: i for i, v in enumerate(vertices)}
    inside = set(cells)

    edges: list[tuple[int, int, float]] = []
    for off in cells:
        for u, v, w in spec.intra_edges:
            i, j = index_of[(off, u)], index_of[(off, v)]
            edges.append((min(i, j), max(i, j), w))
        for u, v, shift, w in spec.inter_edges:
            target = offset_add(off, shift)
            if target in inside:
                i, j = index_of[(off, u)], index_of[(target, v)]
                edges.append((min(i, j), max(i, j), w))
    edges.sort()
    return Agglomerate(
        spec=spec,
        index_set=tuple(cells),
        vertices=vertices,
        edges=tuple(edges),
        index_of=index_of,
    )


def folner_boxes(spec: LatticeSpec, lengths: Sequence[int]) -> list[tuple[Offset, ...]]:
    """Axis-aligned boxes {0..L-1}^d for an increasing list of side lengths."""
    lens = [int(L) for L in lengths]
    if any(L <= 0 for L in lens):
        raise ValueError("box lengths must be positive")
    if any(b <= a for a, b in zip(lens, lens[1:])):
        raise ValueError("box lengths must be strictly increasing")
    boxes = []
    for L in lens:
        boxes.append(tuple(sorted(itertools.product(range(L), repeat=spec.dimension))))
    return boxes


def box(spec: LatticeSpec, length: int) -> tuple[Offset, ...]:
    return folner_boxes(spec, [length])[0]


def boundary_fraction(index_set: Iterable[Offset]) -> float:
    """Fraction of offsets with an axis neighbour outside the set."""
    cells = set(index_set)
    if not cells:
        raise ValueError("index set must be non-empty")
    d = len(next(iter(cells)))
    boundary = 0
    for off in cells:
        for axis in range(d):
            for step in (-1, 1):
                nb = tuple(c + step if i == axis else c for i, c in enumerate(off))
                if nb not in cells:
                    break
            else:
                continue
            boundary += 1
            break
    return boundary / len(cells)


def support_extension(
    index_set: Iterable[Offset], support_offsets: Iterable[Offset]
) -> tuple[Offset, ...]:
    """All sites whose translated single-site support meets the index set.

    For a single-site function supported on cell offsets S, the site gamma
    contributes to the region exactly when (gamma + S) intersects the index
    set, i.e. the result is the Minkowski difference I - S.
    """
    cells = [tuple(off) for off in index_set]
    supp = [tuple(off) for off in support_offsets]
    if cells and supp:
        dims = {len(c) for c in cells} | {len(s) for s in supp}
        if len(dims) != 1:
            raise ValueError("index set and support offsets disagree in dimension")
    extended = {offset_sub(c, s) for c in cells for s in supp}
    return tuple(sorted(extended))


def shift_index_set(index_set: Iterable[Offset], gamma: Offset) -> tuple[Offset, ...]:
    return tuple(sorted(offset_add(off, gamma) for off in index_set))
