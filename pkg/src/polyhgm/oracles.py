"""Independent estimators used to check the HGM.

Monte Carlo draws come from Philox, a counter-based generator: block ``k``
of seed ``s`` always reads counter ``(0, 0, 0, k)`` under key ``s``, so
results do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionTooLarge
from .geometry import FaceComplex, HalfspaceSystem, min_norm_point, tangent_basis

BLOCK = 1 << 16
TRUNCATION = 8.0


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    hits: int = 0


def _normal_block(seed: int, block: int, rows: int, dim: int) -> np.ndarray:
    bitgen = np.random.Philox(key=seed, counter=[0, 0, 0, block])
    raw = bitgen.random_raw(rows * dim)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u).reshape(rows, dim)


def _count_hits(sys: HalfspaceSystem, n_samples: int, seed: int, dim: int, transform) -> int:
    hits = 0
    for k, start in enumerate(range(0, n_samples, BLOCK)):
        rows = min(BLOCK, n_samples - start)
        y = _normal_block(seed, k, rows, dim)
        x = transform(y)
        hits += int(np.count_nonzero(np.all(x >= 0, axis=1)))
    return hits


def mc_probability(sys: HalfspaceSystem, n_samples: int, seed: int = 0) -> McEstimate:
    """Fraction of standard normal draws landing in the polyhedron."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    hits = _count_hits(sys, n_samples, seed, sys.d, sys.values)
    p = hits / n_samples
    return McEstimate(p, math.sqrt(p * (1 - p) / n_samples), n_samples, seed, hits)


def mc_face_integral(sys: HalfspaceSystem, fc: FaceComplex, J, n_samples: int, seed: int = 0) -> McEstimate:
    """Estimate ``ghat^J``, the Gaussian integral over the face hyperplane.

    The hyperplane is ``x0 + Q y`` with ``x0`` its min-norm point and ``Q`` an
    orthonormal tangent basis; since ``|x0 + Q y|^2 = |x0|^2 + |y|^2``,

        ghat^J = (2 pi)^((d-|J|)/2) exp(-|x0|^2/2) / sqrt(det alpha_J)
                 * Pr_y[f_j(x0 + Q y) >= 0 for j not in J],  y ~ N(0, I).
    """
    J = tuple(sorted(J))
    x0 = min_norm_point(sys, J)
    AJ = sys.a[:, list(J)]
    det = float(np.linalg.det(AJ.T @ AJ)) if J else 1.0
    free = sys.d - len(J)
    scale = (2 * math.pi) ** (free / 2) * math.exp(-(x0 @ x0) / 2) / math.sqrt(det)
    rest = [k for k in range(sys.n) if k not in J]
    if free == 0 or not rest:
        ok = bool(np.all(sys.values(x0)[rest] >= 0)) if rest else True
        return McEstimate(scale * ok, 0.0, n_samples, seed, n_samples if ok else 0)
    Q = tangent_basis(sys, J)
    A_rest = sys.a[:, rest]
    offset = x0 @ A_rest + sys.b[rest]
    M = Q.T @ A_rest
    hits = _count_hits(sys, n_samples, seed, free, lambda y: y @ M + offset)
    p = hits / n_samples
    return McEstimate(scale * p, scale * math.sqrt(p * (1 - p) / n_samples), n_samples, seed, hits)


# -- deterministic quadrature ----------------------------------------------------


def adaptive_simpson(f, lo: float, hi: float, tol: float, panels: int = 32, max_depth: int = 40,
                     breaks=()):
    """Vectorized adaptive Simpson rule; ``f`` maps arrays to arrays.

    Returns ``(integral, error_estimate)``.  Each panel is refined until
    ``|S2 - S1| / 15`` is below its width-proportional share of ``tol``.
    Points in ``breaks`` become panel edges; put kinks and jumps there, since
    a feature narrower than a panel can be missed by every sample.
    """
    inner = [x for x in breaks if lo < x < hi]
    edges = np.unique(np.concatenate([np.linspace(lo, hi, panels + 1), inner]))
    a, b = edges[:-1], edges[1:]
    m = (a + b) / 2
    fa, fm, fb = f(a), f(m), f(b)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    local_tol = tol * (b - a) / (hi - lo)
    total = 0.0
    err = 0.0
    for _ in range(max_depth):
        lm, rm = (a + m) / 2, (m + b) / 2
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6 * (fa + 4 * flm + fm)
        right = (b - m) / 6 * (fm + 4 * frm + fb)
        delta = left + right - whole
        done = np.abs(delta) <= 15 * local_tol
        total += float(np.sum(left[done] + right[done] + delta[done] / 15))
        err += float(np.sum(np.abs(delta[done]) / 15))
        keep = ~done
        if not keep.any():
            return total, err
        a = np.concatenate([a[keep], m[keep]])
        b = np.concatenate([m[keep], b[keep]])
        fa_, fm_, fb_ = fa[keep], fm[keep], fb[keep]
        fa = np.concatenate([fa_, fm_])
        fb = np.concatenate([fm_, fb_])
        fm = np.concatenate([flm[keep], frm[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        local_tol = np.concatenate([local_tol[keep], local_tol[keep]]) / 2
        m = (a + b) / 2
    # depth exhausted: keep the coarse values, report the error as unknown
    return total + float(np.sum(whole)), float("inf")


def _vertex_coordinates(a: np.ndarray, c: np.ndarray) -> list[float]:
    """First coordinate of every point where ``m`` of the hyperplanes ``a_j . x + c_j = 0`` meet.

    These are where a nested integrand over the remaining coordinates can
    kink or jump.  Infeasible intersections are kept; extra edges are harmless.
    """
    m = a.shape[0]
    out = []
    for idx in itertools.combinations(range(a.shape[1]), m):
        M = a[:, idx].T
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        out.append(float(np.linalg.solve(M, -c[list(idx)])[0]))
    return out


def _line_mass(a_last: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """Normal mass of ``{t in [-8, 8] : a_last_j t + rest_j >= 0 for all j}``.

    ``rest`` has shape (m, n): the constraint values with the last coordinate
    set to zero, for ``m`` prefix points.
    """
    lo = np.full(rest.shape[0], -TRUNCATION)
    hi = np.full(rest.shape[0], TRUNCATION)
    alive = np.ones(rest.shape[0], dtype=bool)
    for j, c in enumerate(a_last):
        if c > 0:
            lo = np.maximum(lo, -rest[:, j] / c)
        elif c < 0:
            hi = np.minimum(hi, -rest[:, j] / c)
        else:
            alive &= rest[:, j] >= 0
    return np.where(alive & (hi > lo), ndtr(hi) - ndtr(lo), 0.0)


def quadrature_probability(sys: HalfspaceSystem, abs_tol: float = 1e-9) -> float:
    """Nested adaptive Simpson over [-8, 8]^d for d <= 3.

    The innermost coordinate is integrated exactly: restricted to a line the
    polyhedron is an interval, whose normal mass is a difference of CDFs.
    """
    d = sys.d
    if d > 3:
        raise DimensionTooLarge(f"quadrature oracle supports d <= 3, got {d}")
    a, b = sys.a, sys.b
    dens = 1.0 / math.sqrt(2 * math.pi)

    if d == 1:
        return float(_line_mass(a[0], b[None, :])[0])

    if d == 2:
        def outer(x1):
            rest = x1[:, None] * a[0] + b
            return dens * np.exp(-x1**2 / 2) * _line_mass(a[1], rest)
        return adaptive_simpson(outer, -TRUNCATION, TRUNCATION, abs_tol,
                                breaks=_vertex_coordinates(a, b))[0]

    # the outer rule integrates the inner error against a density bounded by 0.4 over width 16
    inner_tol = abs_tol / 16

    def middle(x1: float) -> float:
        def f(x2):
            rest = x1 * a[0] + x2[:, None] * a[1] + b
            return dens * np.exp(-x2**2 / 2) * _line_mass(a[2], rest)
        return adaptive_simpson(f, -TRUNCATION, TRUNCATION, inner_tol,
                                breaks=_vertex_coordinates(a[1:], x1 * a[0] + b))[0]

    def outer(x1):
        return np.array([dens * math.exp(-v * v / 2) * middle(v) for v in x1])

    return adaptive_simpson(outer, -TRUNCATION, TRUNCATION, abs_tol / 2,
                            breaks=_vertex_coordinates(a, b))[0]
