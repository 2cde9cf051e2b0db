"""Half-space systems, their face complexes and general-position diagnostics.

A system ``(a, b)`` with ``a`` of shape ``(d, n)`` describes the polyhedron
``P = {x : a[:, j] @ x + b[j] >= 0 for all j}``.  Index sets are stored as
sorted tuples of 0-based constraint indices.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import lp
from .errors import (
    DimensionMismatch,
    NonFiniteEntry,
    ParseError,
    SingularGram,
    ZeroNormal,
)

FEAS_TOL = 1e-9
RANK_TOL = 1e-7


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HalfspaceSystem:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _frozen(self.a))
        object.__setattr__(self, "b", _frozen(self.b))

    @property
    def d(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def values(self, x) -> np.ndarray:
        """Evaluate ``f_j(x) = a_j . x + b_j``; ``x`` may be a batch of shape (..., d)."""
        return np.asarray(x, dtype=float) @ self.a + self.b

    def __eq__(self, other):
        if not isinstance(other, HalfspaceSystem):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __repr__(self):
        return f"HalfspaceSystem(d={self.d}, n={self.n})"

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "a": self.a.tolist(), "b": self.b.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        """One line per constraint: the normal's d coordinates, then the offset."""
        buf = io.StringIO()
        for j in range(self.n):
            row = list(self.a[:, j]) + [self.b[j]]
            buf.write(",".join(format(v, ".17g") for v in row) + "\n")
        return buf.getvalue()


def build_system(a, b) -> HalfspaceSystem:
    try:
        a = np.array(a, dtype=float)
        b = np.array(b, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NonFiniteEntry(f"entries must be real numbers: {exc}") from exc
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"a must be a non-empty d x n matrix, got shape {a.shape}")
    if b.ndim != 1 or b.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({a.shape[1]},)")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteEntry("a and b must be finite")
    for j in range(a.shape[1]):
        if not np.any(a[:, j]):
            raise ZeroNormal(j)
    return HalfspaceSystem(a, b)


def system_from_json(text: str) -> HalfspaceSystem:
    try:
        doc = json.loads(text)
        a, b = doc["a"], doc["b"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed system JSON: {exc}") from exc
    sys_ = build_system(a, b)
    if "d" in doc and doc["d"] != sys_.d or "n" in doc and doc["n"] != sys_.n:
        raise DimensionMismatch("declared d/n disagree with the matrix shape")
    return sys_


def system_from_csv(text: str) -> HalfspaceSystem:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ParseError(f"malformed system CSV: {exc}") from exc
    if data.ndim != 2 or data.shape[1] < 2:
        raise ParseError("CSV rows must hold d normal coordinates and one offset")
    return build_system(data[:, :-1].T, data[:, -1])


def load_system(path) -> HalfspaceSystem:
    with open(path) as fh:
        text = fh.read()
    if str(path).lower().endswith(".csv"):
        return system_from_csv(text)
    return system_from_json(text)


# face complexes ----------------------------------------------------------


def _canonical(members) -> list[tuple[int, ...]]:
    return sorted({tuple(sorted(J)) for J in members}, key=lambda J: (len(J), J))


@dataclass(frozen=True, eq=False)
class FaceComplex:
    """Downward-closed family of index sets, in canonical order.

    Position in ``members`` is the position of ``g^J`` in the state vector.
    """

    members: tuple[tuple[int, ...], ...]
    d: int
    n: int
    index_of: dict = field(init=False, repr=False)

    def __post_init__(self):
        members = tuple(_canonical(self.members))
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "index_of", {J: p for p, J in enumerate(members)})

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, J):
        return tuple(sorted(J)) in self.index_of

    def __eq__(self, other):
        if not isinstance(other, FaceComplex):
            return NotImplemented
        return (self.d, self.n, self.members) == (other.d, other.n, other.members)

    def position(self, J) -> int:
        return self.index_of[tuple(sorted(J))]

    def containing(self, J) -> list[tuple[int, ...]]:
        """All members F with J a subset of F."""
        J = set(J)
        return [F for F in self.members if J.issubset(F)]

    def is_downward_closed(self) -> bool:
        for J in self.members:
            for k in range(len(J)):
                if J[:k] + J[k + 1 :] not in self.index_of:
                    return False
        return True

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean incidence matrix, shape (len, n)."""
        m = np.zeros((len(self), self.n), dtype=bool)
        for p, J in enumerate(self.members):
            m[p, list(J)] = True
        m.setflags(write=False)
        return m

    @cached_property
    def cardinality(self) -> np.ndarray:
        return self.mask.sum(axis=1)

    @cached_property
    def superset(self) -> np.ndarray:
        """``superset[p, l]`` is the position of ``J_p + {l}``, or -1 if absent or l in J_p."""
        sup = np.full((len(self), self.n), -1, dtype=np.intp)
        for p, J in enumerate(self.members):
            for ell in range(self.n):
                if ell in J:
                    continue
                q = self.index_of.get(tuple(sorted(J + (ell,))))
                if q is not None:
                    sup[p, ell] = q
        sup.setflags(write=False)
        return sup


def face_complex_simplex(d: int) -> FaceComplex:
    n = d + 1
    members = [J for k in range(d + 1) for J in itertools.combinations(range(n), k)]
    return FaceComplex(tuple(members), d, n)


def face_complex_cone(d: int) -> FaceComplex:
    members = [J for k in range(d + 1) for J in itertools.combinations(range(d), k)]
    return FaceComplex(tuple(members), d, d)


def _affine_parametrization(a, b, J, rank_tol=RANK_TOL, feas_tol=FEAS_TOL):
    """Write ``{x : f_j(x) = 0, j in J}`` as ``x0 + N y``; None if inconsistent."""
    d = a.shape[0]
    if not J:
        return np.zeros(d), np.eye(d)
    AJt = a[:, list(J)].T
    bJ = b[list(J)]
    U, s, Vt = np.linalg.svd(AJt)
    r = int(np.sum(s > rank_tol * max(1.0, s[0])))
    x0 = Vt[:r].T @ ((U[:, :r].T @ -bJ) / s[:r])
    resid = AJt @ x0 + bJ
    if np.max(np.abs(resid)) > feas_tol * max(1.0, np.abs(bJ).max()):
        return None
    return x0, Vt[r:].T


def face_is_nonempty(sys: HalfspaceSystem, J, tol: float = FEAS_TOL) -> bool:
    """Whether ``{f_j = 0 (j in J), f_k >= 0 (k not in J)}`` is feasible."""
    param = _affine_parametrization(sys.a, sys.b, J, feas_tol=tol)
    if param is None:
        return False
    x0, N = param
    rest = [k for k in range(sys.n) if k not in J]
    if not rest:
        return True
    slack = sys.values(x0)[rest]
    scale = tol * max(1.0, float(np.abs(sys.b).max()))
    if N.shape[1] == 0:
        return bool(np.all(slack >= -scale))
    if np.all(slack >= -scale):
        return True
    G = sys.a[:, rest].T @ N
    return lp.find_feasible_point(G, -slack - scale, feas_tol=tol) is not None


def face_complex_lp(sys: HalfspaceSystem, tol: float = FEAS_TOL, max_card: int | None = None) -> FaceComplex:
    """Enumerate nonempty faces by increasing cardinality, extending only members."""
    if max_card is None:
        max_card = sys.d
    members = [()]
    layer = [()]
    for k in range(1, max_card + 1):
        known = set(layer)
        candidates = sorted(
            {tuple(sorted(J + (ell,))) for J in layer for ell in range(sys.n) if ell > (J[-1] if J else -1)}
        )
        nxt = []
        for J in candidates:
            if k > 1 and any(J[:i] + J[i + 1 :] not in known for i in range(k)):
                continue
            if face_is_nonempty(sys, J, tol):
                nxt.append(J)
        if not nxt:
            break
        members.extend(nxt)
        layer = nxt
    return FaceComplex(tuple(members), sys.d, sys.n)


@dataclass
class GeneralPositionReport:
    passed: bool
    dependent: list = field(default_factory=list)
    excess: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def summary(self) -> str:
        if self.passed:
            return "PASS"
        parts = []
        if self.dependent:
            parts.append(f"dependent normals: {self.dependent}")
        if self.excess:
            parts.append(f"more than d facets meet: {self.excess}")
        return "FAIL (" + "; ".join(parts) + ")"


def general_position_check(sys: HalfspaceSystem, fc: FaceComplex, tol: float = RANK_TOL) -> GeneralPositionReport:
    dependent = []
    for J in fc.members:
        if not J:
            continue
        if len(J) > sys.d:
            dependent.append(J)
            continue
        s = np.linalg.svd(sys.a[:, list(J)], compute_uv=False)
        if s[-1] <= tol * max(1.0, s[0]):
            dependent.append(J)
    excess = []
    top = [J for J in fc.members if len(J) == sys.d]
    known = set(top)
    candidates = sorted(
        {tuple(sorted(J + (ell,))) for J in top for ell in range(sys.n) if ell not in J}
    )
    for J in candidates:
        if all(J[:i] + J[i + 1 :] in known for i in range(len(J))) and face_is_nonempty(sys, J):
            excess.append(J)
    return GeneralPositionReport(not dependent and not excess, dependent, excess)


def min_norm_point(sys: HalfspaceSystem, J) -> np.ndarray:
    """Closest point to the origin of ``{x : f_j(x) = 0, j in J}``."""
    J = list(J)
    if not J:
        return np.zeros(sys.d)
    AJ = sys.a[:, J]
    gram = AJ.T @ AJ
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise SingularGram(J) from None
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularGram(J, cond)
    z = np.linalg.solve(L.T, np.linalg.solve(L, sys.b[J]))
    return -AJ @ z


def tangent_basis(sys: HalfspaceSystem, J) -> np.ndarray:
    """Orthonormal basis (columns) of the directions parallel to ``V(J)``."""
    J = list(J)
    if not J:
        return np.eye(sys.d)
    _, s, Vt = np.linalg.svd(sys.a[:, J].T)
    r = int(np.sum(s > RANK_TOL * max(1.0, s[0])))
    return Vt[r:].T
