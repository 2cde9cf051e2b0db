"""Self-check suites shared by ``polyhgm check`` and the acceptance tests.

Each suite yields one ``CheckResult`` per (system, property) pair so callers
can print a pass/fail matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import FAMILIES
from .geometry import (
    FaceComplex,
    HalfspaceSystem,
    build_system,
    face_complex_lp,
    min_norm_point,
    tangent_basis,
)
from .hgm import initial_bounded, initial_cone, integrate, path_bounded, path_cone, probability, probability_at
from .inclusion_exclusion import face_ie_sum_batch, face_indicator_batch, ie_sum_batch, indicator_batch
from .integrators import SolverConfig
from .oracles import mc_probability, quadrature_probability
from .pfaffian import gram_cache, second_derivative_operator

BOUNDARY_GUARD = 1e-9
FD_STEP = 1e-4
FD_REL_TOL = 5e-4
COMMUTE_TOL = 1e-6
QUAD_TOL = 1e-4
TIGHT = SolverConfig(rel_tol=1e-12, abs_tol=1e-15)


@dataclass(frozen=True)
class CheckResult:
    suite: str
    system: str
    prop: str
    passed: bool
    detail: str = ""


def _label(family: str, d: int) -> str:
    return f"{family}_{d}"


def perturbed(sys: HalfspaceSystem, eps: float, seed: int = 0) -> HalfspaceSystem:
    """Uniform +-eps noise on every entry of (a, b)."""
    if eps == 0:
        return sys
    rng = np.random.default_rng(seed)
    return build_system(
        sys.a + rng.uniform(-eps, eps, sys.a.shape), sys.b + rng.uniform(-eps, eps, sys.b.shape)
    )


# -- inclusion-exclusion --------------------------------------------------------


def polyhedron_identity_failures(sys: HalfspaceSystem, fc: FaceComplex, n_points: int, rng) -> tuple[int, int]:
    """Count points where the indicator and the alternating face sum differ."""
    X = rng.normal(scale=2.0, size=(n_points, sys.d))
    X = X[np.abs(sys.values(X)).min(axis=1) > BOUNDARY_GUARD]
    return int(np.count_nonzero(indicator_batch(sys, X) != ie_sum_batch(sys, fc, X))), len(X)


def face_identity_failures(sys: HalfspaceSystem, fc: FaceComplex, J, n_points: int, rng) -> tuple[int, int]:
    """Same count for points drawn on the affine span of face ``J``."""
    x0 = min_norm_point(sys, J)
    Q = tangent_basis(sys, J)
    X = x0 + rng.normal(scale=2.0, size=(n_points, Q.shape[1])) @ Q.T
    rest = [j for j in range(sys.n) if j not in J]
    if rest:
        X = X[np.abs(sys.values(X)[:, rest]).min(axis=1) > BOUNDARY_GUARD]
    bad = face_indicator_batch(sys, J, X) != face_ie_sum_batch(sys, fc, J, X)
    return int(np.count_nonzero(bad)), len(X)


def identity_suite(d_max: int = 5, perturb: float = 0.0, n_points: int = 10_000,
                   n_face_points: int = 1000, seed: int = 0):
    """Both identities for every family with 2 <= d <= min(d_max, 5).

    With ``perturb`` the face complex of the unperturbed system is kept and
    the half-spaces are jittered, which the identities must survive.
    """
    rng = np.random.default_rng(seed)
    for family in "PQC":
        for d in range(2, min(d_max, 5) + 1):
            base = FAMILIES[family](d)
            fc = face_complex_lp(base)
            sys = perturbed(base, perturb, seed=d)
            fails, used = polyhedron_identity_failures(sys, fc, n_points, rng)
            yield CheckResult("identity", _label(family, d), "polyhedron", fails == 0,
                              f"{fails} mismatches on {used} points")
            face_fails = 0
            face_used = 0
            for J in fc:
                f, u = face_identity_failures(sys, fc, J, n_face_points, rng)
                face_fails += f
                face_used += u
            yield CheckResult("identity", _label(family, d), "faces", face_fails == 0,
                              f"{face_fails} mismatches on {face_used} points over {len(fc)} faces")


# -- Pfaffian consistency -------------------------------------------------------


def _method(sys: HalfspaceSystem) -> str:
    return "cone" if sys.n == sys.d else "bounded"


def fd_first_derivatives(sys: HalfspaceSystem, fc: FaceComplex, eps: float = FD_STEP) -> float:
    """Worst relative gap between d ghat^0 / d b_j by central difference and ghat^{j}."""
    method = _method(sys)
    g = probability_at(sys, fc, method, TIGHT)
    worst = 0.0
    for j in range(sys.n):
        e = np.zeros(sys.n)
        e[j] = eps
        hi = probability_at(build_system(sys.a, sys.b + e), fc, method, TIGHT)[0]
        lo = probability_at(build_system(sys.a, sys.b - e), fc, method, TIGHT)[0]
        exact = g[fc.position((j,))]
        worst = max(worst, abs((hi - lo) / (2 * eps) - exact) / abs(exact))
    return worst


def commutation_residual(sys: HalfspaceSystem, fc: FaceComplex, samples: int = 10) -> float:
    """Largest ||(M_kj - M_jk) g|| / ||g|| at points along the integration path."""
    if _method(sys) == "cone":
        rotated, _, path = path_cone(sys)
        g0 = initial_cone(rotated, fc)
    else:
        path = path_bounded(sys, fc)
        g0 = initial_bounded(sys, fc)
    res = integrate(path, fc, g0, TIGHT, record=True)
    ts, ys = res.trajectory.ts, res.trajectory.ys
    worst = 0.0
    for idx in np.unique(np.linspace(1, len(ts) - 1, samples).astype(int)):
        a, b = path.at(ts[idx])
        cache = gram_cache(a, fc)
        g = ys[idx]
        for k in range(sys.n):
            for j in range(k + 1, sys.n):
                diff = second_derivative_operator(cache, b, k, j) @ g - second_derivative_operator(cache, b, j, k) @ g
                worst = max(worst, float(np.linalg.norm(diff) / np.linalg.norm(g)))
    return worst


def pfaffian_suite(d_max: int = 4):
    for family in "PQC":
        for d in range(2, min(d_max, 4) + 1):
            sys = FAMILIES[family](d)
            fc = face_complex_lp(sys)
            gap = fd_first_derivatives(sys, fc)
            yield CheckResult("pfaffian", _label(family, d), "finite-difference", bool(gap <= FD_REL_TOL),
                              f"max rel gap {gap:.2e}")
            resid = commutation_residual(sys, fc)
            yield CheckResult("pfaffian", _label(family, d), "commutation", bool(resid <= COMMUTE_TOL),
                              f"max residual {resid:.2e}")


# -- oracle agreement -----------------------------------------------------------


def oracle_suite(d_max: int = 6, n_samples: int = 10**6, seed: int = 0, quad_d_max: int = 3):
    for family in "PQC":
        for d in range(2, min(d_max, 6) + 1):
            sys = FAMILIES[family](d)
            hgm = probability(sys).probability
            mc = mc_probability(sys, n_samples, seed)
            gap = abs(hgm - mc.mean)
            ok = bool(gap <= 4 * mc.std_error)
            yield CheckResult("oracle", _label(family, d), "monte-carlo", ok,
                              f"|hgm-mc| = {gap:.2e}, 4 se = {4 * mc.std_error:.2e}")
            if d <= min(quad_d_max, 3):
                q = quadrature_probability(sys)
                yield CheckResult("oracle", _label(family, d), "quadrature", bool(abs(hgm - q) <= QUAD_TOL),
                                  f"|hgm-quad| = {abs(hgm - q):.2e}")


def run_all(d_max: int = 6, perturb: float = 0.0, n_samples: int = 10**6, seed: int = 0):
    yield from identity_suite(d_max, perturb, seed=seed)
    yield from pfaffian_suite(d_max)
    yield from oracle_suite(d_max, n_samples, seed)
