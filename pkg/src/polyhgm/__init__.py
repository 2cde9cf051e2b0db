"""Standard normal probability content of polyhedra via the holonomic gradient method."""

from .families import cone_c, orthant, segment, simplex_p, simplex_q
from .geometry import HalfspaceSystem, build_system, face_complex_lp, load_system
from .hgm import HgmResult, probability
from .integrators import SolverConfig
from .oracles import McEstimate, mc_probability, quadrature_probability

__all__ = [
    "HalfspaceSystem",
    "HgmResult",
    "McEstimate",
    "SolverConfig",
    "build_system",
    "cone_c",
    "face_complex_lp",
    "load_system",
    "mc_probability",
    "orthant",
    "probability",
    "quadrature_probability",
    "segment",
    "simplex_p",
    "simplex_q",
]
