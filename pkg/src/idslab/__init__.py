"""idslab: integrated density of states on periodic graphs, with and without disorder.

The package builds finite restrictions of periodic and alloy-type random
operators on Z^d-periodic weighted graphs, diagonalizes them, and measures
spectral statistics: eigenvalue counting functions, Floquet band structures,
flat-band discontinuities, Wegner-type level counts, and spectral shift
functions for operator pairs.
"""

__version__ = "0.1.0"

from idslab.covering import (
    Agglomerate,
    LatticeSpec,
    build_agglomerate,
    builtin_lattice,
    folner_boxes,
    support_extension,
)
from idslab.operators import (
    Hamiltonian,
    Model,
    SingleSiteDeformation,
    SingleSitePotential,
    assemble_laplacian,
    assemble_ram,
    assemble_rap,
)
from idslab.randomness import CouplingDistribution, RandomConfig, sample_config
from idslab.spectral import Spectrum, count_below, eigensolve, projection_trace

__all__ = [
    "Agglomerate",
    "CouplingDistribution",
    "Hamiltonian",
    "LatticeSpec",
    "Model",
    "RandomConfig",
    "SingleSiteDeformation",
    "SingleSitePotential",
    "Spectrum",
    "assemble_laplacian",
    "assemble_ram",
    "assemble_rap",
    "build_agglomerate",
    "builtin_lattice",
    "count_below",
    "eigensolve",
    "folner_boxes",
    "projection_trace",
    "sample_config",
    "support_extension",
]
