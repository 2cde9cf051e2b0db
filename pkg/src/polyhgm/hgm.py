"""Holonomic gradient method driver: homotopy path, initial vector, integration."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import (
    GeneralPositionFailure,
    NoApplicableMethod,
    NotSquare,
    SingularGram,
    SingularNormals,
    UnboundedPolyhedron,
    ZeroDiagonal,
)
from .geometry import (
    FEAS_TOL,
    RANK_TOL,
    FaceComplex,
    HalfspaceSystem,
    face_complex_cone,
    face_complex_lp,
    general_position_check,
)
from .integrators import SolverConfig, integrate_ode
from .pfaffian import COND_LIMIT, GramCache, connection_apply, gram_cache, unnormalized_scale


@dataclass(frozen=True, eq=False)
class Path:
    """Affine homotopy ``t -> ((1-t) a0 + t a1, (1-t) b0 + t b1)``."""

    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    kind: str  # "bounded" | "cone"

    def at(self, t: float):
        if t == 1.0:
            return self.a1, self.b1
        return (1 - t) * self.a0 + t * self.a1, (1 - t) * self.b0 + t * self.b1

    def velocity(self):
        """``(a_dot, b_dot)``; ``a_dot`` is None when ``a`` is constant."""
        a_dot = self.a1 - self.a0
        return (a_dot if np.any(a_dot) else None), self.b1 - self.b0

    @property
    def constant_a(self) -> bool:
        return not np.any(self.a1 - self.a0)


@dataclass
class HgmResult:
    probability: float
    g_final: np.ndarray
    steps_taken: int
    rejections: int
    min_gram_condition_margin: float
    wall_time: float
    method: str = ""
    error_estimate: float = 0.0
    raw_probability: float = 0.0
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "probability": self.probability,
            "g_final": [float(v) for v in self.g_final],
            "steps": self.steps_taken,
            "rejections": self.rejections,
            "wall_time_s": self.wall_time,
            "flags": list(self.flags),
            "method": self.method,
            "min_gram_condition_margin": self.min_gram_condition_margin,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def recession_cone_trivial(sys: HalfspaceSystem, tol: float = FEAS_TOL) -> bool:
    """True iff ``{x : a_j . x >= 0 for all j}`` is just the origin.

    Probes ``max c.x`` over that cone intersected with the unit cube for
    ``c = +-e_i``; every maximum must vanish.
    """
    d = sys.d
    G = np.vstack([sys.a.T, np.eye(d), -np.eye(d)])
    h = np.concatenate([np.zeros(sys.n), -np.ones(d), -np.ones(d)])
    for i in range(d):
        for s in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = -s  # minimize -s x_i
            sol = lp.linprog_ge(c, G, h)
            if sol.status != "optimal" or -sol.fun > tol:
                return False
    return True


def path_bounded(sys: HalfspaceSystem, fc: FaceComplex | None = None, check: bool = True) -> Path:
    """Constant normals, offsets scaled from 0 to the target."""
    if check:
        if not recession_cone_trivial(sys):
            raise UnboundedPolyhedron("polyhedron has a nontrivial recession cone")
        if fc is None:
            fc = face_complex_lp(sys)
        report = general_position_check(sys, fc)
        if not report:
            raise GeneralPositionFailure(report.summary())
    return Path(sys.a, sys.a, np.zeros(sys.n), sys.b, "bounded")


def initial_bounded(sys: HalfspaceSystem, fc: FaceComplex, cache: GramCache | None = None) -> np.ndarray:
    """At b = 0 only vertex terms survive: ``1/sqrt(det alpha_J)`` for ``|J| = d``."""
    if cache is None:
        cache = gram_cache(sys.a, fc)
    g0 = np.zeros(len(fc))
    top = fc.cardinality == sys.d
    g0[top] = 1.0 / np.sqrt(cache.det[top])
    return g0


def path_cone(sys: HalfspaceSystem):
    """Rotate a simplicial cone to upper-triangular form and build its path.

    Returns ``(rotated_system, rotation, path)`` with ``rotation @ sys.a``
    upper triangular with positive diagonal.
    """
    if sys.n != sys.d:
        raise NotSquare(f"cone method needs n == d, got n={sys.n}, d={sys.d}")
    s = np.linalg.svd(sys.a, compute_uv=False)
    if s[-1] <= RANK_TOL * max(1.0, s[0]):
        raise SingularNormals("normals are linearly dependent")
    if np.allclose(sys.a, np.triu(sys.a), rtol=0, atol=0) and np.all(np.diag(sys.a) > 0):
        R = np.eye(sys.d)
        a_rot = sys.a.copy()
    else:
        Q, Rt = np.linalg.qr(sys.a)
        signs = np.where(np.diag(Rt) < 0, -1.0, 1.0)
        R = signs[:, None] * Q.T
        a_rot = np.triu(R @ sys.a)
    rotated = HalfspaceSystem(a_rot, sys.b)
    a0 = np.diag(np.diag(a_rot))
    path = Path(a0, a_rot, np.zeros(sys.n), sys.b, "cone")
    return rotated, R, path


def initial_cone(sys: HalfspaceSystem, fc: FaceComplex) -> np.ndarray:
    """Orthant-type start: ``(pi/2)^((d-|J|)/2) / |prod_{j in J} a_jj|``."""
    diag = np.diag(sys.a)
    if np.any(diag == 0):
        raise ZeroDiagonal("upper-triangular normals need a nonzero diagonal")
    g0 = np.empty(len(fc))
    for p, J in enumerate(fc.members):
        # evaluated in this exact form so a = I reproduces the closed form bit for bit
        g0[p] = (math.pi / 2) ** ((sys.d - len(J)) / 2) / abs(float(np.prod(diag[list(J)])))
    return g0


def integrate(path: Path, fc: FaceComplex, g0, cfg: SolverConfig | None = None,
              cond_limit: float = COND_LIMIT, record: bool = False) -> HgmResult:
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    a_dot, b_dot = path.velocity()
    worst = [1.0]

    if path.constant_a:
        cache = gram_cache(path.a1, fc, cond_limit)
        worst[0] = cache.max_condition

        def rhs(t, g):
            return connection_apply(cache, t * path.b1 + (1 - t) * path.b0, None, b_dot, g)
    else:
        def rhs(t, g):
            a, b = path.at(t)
            c = gram_cache(a, fc, cond_limit)
            worst[0] = max(worst[0], c.max_condition)
            return connection_apply(c, b, a_dot, b_dot, g)

    traj = integrate_ode(rhs, g0, cfg, record=record)
    d = path.a1.shape[0]
    raw = float(traj.y[0] / unnormalized_scale(d))
    flags = []
    prob = raw
    slack = 10 * cfg.rel_tol + cfg.abs_tol
    if not -slack <= raw <= 1 + slack:
        flags.append("probability_out_of_range")
    if raw < 0 or raw > 1:
        prob = min(1.0, max(0.0, raw))
        flags.append("clamped")
    result = HgmResult(
        probability=prob,
        g_final=traj.y,
        steps_taken=traj.steps,
        rejections=traj.rejections,
        min_gram_condition_margin=cond_limit / worst[0],
        wall_time=time.perf_counter() - start,
        method=path.kind,
        error_estimate=traj.error_estimate / unnormalized_scale(d),
        raw_probability=raw,
        flags=flags,
    )
    if record:
        result.trajectory = traj
    return result


def _is_simplicial_cone(sys: HalfspaceSystem) -> bool:
    if sys.n != sys.d:
        return False
    s = np.linalg.svd(sys.a, compute_uv=False)
    return bool(s[-1] > RANK_TOL * max(1.0, s[0]))


def probability(sys: HalfspaceSystem, method: str = "auto", cfg: SolverConfig | None = None,
                fc: FaceComplex | None = None) -> HgmResult:
    """Normal probability content of the polyhedron via the HGM.

    ``auto`` uses the cone path for n = d with independent normals and the
    bounded path otherwise.
    """
    start = time.perf_counter()
    if method == "auto":
        method = "cone" if _is_simplicial_cone(sys) else "bounded"
    if method == "cone":
        rotated, _, path = path_cone(sys)
        if fc is None:
            fc = face_complex_cone(sys.d)
        g0 = initial_cone(rotated, fc)
    elif method == "bounded":
        if fc is None:
            fc = face_complex_lp(sys)
        path = path_bounded(sys, fc)
        g0 = initial_bounded(sys, fc)
    else:
        raise NoApplicableMethod(f"unknown method {method!r}")
    result = integrate(path, fc, g0, cfg)
    result.wall_time = time.perf_counter() - start
    return result


def probability_at(sys: HalfspaceSystem, fc: FaceComplex, method: str, cfg: SolverConfig | None = None) -> np.ndarray:
    """Final state for a system that may lie off the probability branch.

    Integrates the same paths without the geometric precondition checks, so
    it also evaluates the analytic continuation (used for finite differences).
    """
    if method == "cone":
        rotated, _, path = path_cone(sys)
        g0 = initial_cone(rotated, fc)
    else:
        path = path_bounded(sys, fc, check=False)
        g0 = initial_bounded(sys, fc)
    return integrate(path, fc, g0, cfg).g_final


__all__ = [
    "HgmResult",
    "Path",
    "SingularGram",
    "initial_bounded",
    "initial_cone",
    "integrate",
    "path_bounded",
    "path_cone",
    "probability",
    "probability_at",
    "recession_cone_trivial",
]
