"""The three experiment families: simplices P_d, Q_d and simplicial cones C_d."""

from __future__ import annotations

import math

import numpy as np

from .geometry import HalfspaceSystem, build_system


def _simplex_normals(d: int) -> np.ndarray:
    return np.hstack([np.eye(d), -np.ones((d, 1))])


def simplex_p(d: int) -> HalfspaceSystem:
    """x_i + sqrt(d)/2 >= 0 and -sum(x) + sqrt(d)/2 >= 0."""
    half = math.sqrt(d) / 2
    return build_system(_simplex_normals(d), np.full(d + 1, half))


def simplex_q(d: int) -> HalfspaceSystem:
    """x_i - sqrt(d)/2 >= 0 and -sum(x) + (2d+1) sqrt(d)/2 >= 0."""
    half = math.sqrt(d) / 2
    b = np.full(d + 1, -half)
    b[-1] = (2 * d + 1) * half
    return build_system(_simplex_normals(d), b)


def cone_c(d: int) -> HalfspaceSystem:
    """Upper-triangular cone with a_ij = (i+j)/100 above the diagonal (1-based i, j)."""
    a = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            a[i, j] = (i + j + 2) / 100
    return build_system(a, np.full(d, math.sqrt(d) / 2))


def orthant(d: int) -> HalfspaceSystem:
    return build_system(np.eye(d), np.zeros(d))


def segment(lo: float, hi: float) -> HalfspaceSystem:
    """The interval [lo, hi] in one dimension."""
    return build_system([[1.0, -1.0]], [-lo, hi])


FAMILIES = {"P": simplex_p, "Q": simplex_q, "C": cone_c}
