"""Inclusion-exclusion identities for a polyhedron and for each of its faces.

With ``H(0) = 1``, the product ``prod_j (H(f_j) - 1)`` over ``J`` is
``(-1)^|J|`` when every ``f_j`` with ``j in J`` is negative and 0 otherwise.
"""

from __future__ import annotations

import numpy as np

from .errors import NotOnHyperplane
from .geometry import FaceComplex, HalfspaceSystem

HYPERPLANE_TOL = 1e-8


def heaviside(v):
    return np.where(np.asarray(v) >= 0, 1, 0)


def indicator(sys: HalfspaceSystem, x) -> int:
    return int(np.all(sys.values(x) >= 0))


def ie_sum(sys: HalfspaceSystem, fc: FaceComplex, x) -> int:
    """``sum_{J in F} prod_{j in J} (H(f_j(x)) - 1)``."""
    negative = sys.values(x) < 0
    total = 0
    for J in fc.members:
        # a term dies as soon as one of its constraints is satisfied
        if all(negative[j] for j in J):
            total += -1 if len(J) % 2 else 1
    return total


def ie_sum_batch(sys: HalfspaceSystem, fc: FaceComplex, X) -> np.ndarray:
    """``ie_sum`` for every row of ``X`` at once."""
    satisfied = (sys.values(X) >= 0).astype(np.int64)
    mask = fc.mask.astype(np.int64)
    alive = (satisfied @ mask.T) == 0  # (points, faces)
    signs = np.where(fc.cardinality % 2, -1, 1)
    return alive.astype(np.int64) @ signs


def indicator_batch(sys: HalfspaceSystem, X) -> np.ndarray:
    return np.all(sys.values(X) >= 0, axis=-1).astype(np.int64)


def _check_on_hyperplane(sys, J, x):
    if J:
        resid = np.abs(sys.values(x)[list(J)])
        if resid.max() > HYPERPLANE_TOL * max(1.0, float(np.abs(x).max(initial=0.0))):
            raise NotOnHyperplane(f"point is {resid.max():.3g} away from V({list(J)})")


def face_ie_sum(sys: HalfspaceSystem, fc: FaceComplex, J, x) -> int:
    """``sum_{F in F_J} prod_{j in F \\ J} (H(f_j(x)) - 1)`` for ``x`` on ``V(J)``."""
    J = tuple(sorted(J))
    _check_on_hyperplane(sys, J, x)
    negative = sys.values(x) < 0
    total = 0
    for F in fc.containing(J):
        extra = [j for j in F if j not in J]
        if all(negative[j] for j in extra):
            total += -1 if len(extra) % 2 else 1
    return total


def face_indicator(sys: HalfspaceSystem, J, x) -> int:
    """``prod_{j not in J} H(f_j(x))``."""
    J = set(J)
    vals = sys.values(x)
    return int(all(vals[j] >= 0 for j in range(sys.n) if j not in J))


def face_ie_sum_batch(sys: HalfspaceSystem, fc: FaceComplex, J, X) -> np.ndarray:
    J = tuple(sorted(J))
    upper = fc.containing(J)
    rows = np.array([fc.position(F) for F in upper], dtype=np.intp)
    mask = fc.mask[rows].astype(np.int64)
    mask[:, list(J)] = 0
    satisfied = (sys.values(X) >= 0).astype(np.int64)
    alive = (satisfied @ mask.T) == 0
    signs = np.where((fc.cardinality[rows] - len(J)) % 2, -1, 1)
    return alive.astype(np.int64) @ signs


def face_indicator_batch(sys: HalfspaceSystem, J, X) -> np.ndarray:
    rest = [j for j in range(sys.n) if j not in set(J)]
    return np.all(sys.values(X)[:, rest] >= 0, axis=1).astype(np.int64)
