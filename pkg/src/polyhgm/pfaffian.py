"""Pfaffian connection for the derivative vector of the polyhedral normal integral.

The state vector holds ``ghat^J = (2 pi)^(d/2) g^J`` for ``J`` in a face
complex, where ``g^J`` is the ``b``-derivative of the probability content
along the index set ``J``.  The connection is

* ``d/db_j g^J = g^(J+j)``                              for ``j`` not in ``J``
* ``d/db_j g^J = -sum_k alpha_J^{jk} (b_k g^J + sum_l alpha_kl g^(J+l))``
                                                         for ``j`` in ``J``
* ``d/da_ij g  = sum_k a_ik d/db_k d/db_j g``

Terms ``g^(J+l)`` whose index set is not a face vanish identically near the
parameter and are dropped.

Two evaluation routes are provided: explicit sparse matrices (``bj_matrix``
and friends), used for inspection and tests, and batched dense contractions
over a padded inverse-Gram tensor (``apply_b``, ``ode_rhs``), used by the
integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import IndexOutOfRange, SingularGram
from .geometry import FaceComplex

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class GramCache:
    """Gram blocks of the normals for every face, with inverses padded to n x n.

    ``inv[p]`` equals ``alpha_J^{-1}`` on the rows/columns in ``J = fc.members[p]``
    and zero elsewhere, so contractions over all ``j`` automatically skip ``j``
    not in ``J``.
    """

    fc: FaceComplex
    a: np.ndarray
    gram: np.ndarray
    inv: np.ndarray
    det: np.ndarray
    cond: np.ndarray
    # inv[p] @ gram, precomputed for the off-diagonal terms
    inv_gram: np.ndarray

    @property
    def max_condition(self) -> float:
        return float(self.cond.max(initial=1.0))

    def block(self, J) -> np.ndarray:
        J = list(J)
        return self.gram[np.ix_(J, J)]


def gram_cache(a, fc: FaceComplex, cond_limit: float = COND_LIMIT) -> GramCache:
    """Factor every Gram block ``alpha_F`` (Cholesky) and record conditions.

    Raises ``SingularGram`` naming the first offending face when a block is
    not positive definite or its condition exceeds ``cond_limit``.
    """
    a = np.asarray(a, dtype=float)
    n = fc.n
    gram = a.T @ a
    size = len(fc)
    inv = np.zeros((size, n, n))
    det = np.ones(size)
    cond = np.ones(size)
    card = fc.cardinality
    for k in range(1, int(card.max(initial=0)) + 1):
        pos = np.flatnonzero(card == k)
        idx = np.array([fc.members[p] for p in pos], dtype=np.intp)
        blocks = gram[idx[:, :, None], idx[:, None, :]]
        eig = np.linalg.eigvalsh(blocks)
        lo, hi = eig[:, 0], eig[:, -1]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(lo > 0, hi / lo, np.inf)
        bad = np.flatnonzero(~(c <= cond_limit))
        if bad.size:
            raise SingularGram(fc.members[pos[bad[0]]], float(c[bad[0]]))
        L = np.linalg.cholesky(blocks)
        Linv = np.linalg.inv(L)
        block_inv = np.swapaxes(Linv, 1, 2) @ Linv
        inv[pos[:, None, None], idx[:, :, None], idx[:, None, :]] = block_inv
        det[pos] = np.prod(np.diagonal(L, axis1=1, axis2=2), axis=1) ** 2
        cond[pos] = c
    return GramCache(fc, a, gram, inv, det, cond, inv @ gram)


# -- explicit sparse operators --------------------------------------------------


def _check_index(j: int, n: int) -> None:
    if not 0 <= j < n:
        raise IndexOutOfRange(f"constraint index {j} outside 0..{n - 1}")


def bj_matrix(cache: GramCache, b, j: int) -> sp.csr_matrix:
    """Matrix ``B_j`` with ``d/db_j ghat = B_j ghat``."""
    fc = cache.fc
    _check_index(j, fc.n)
    b = np.asarray(b, dtype=float)
    sup = fc.superset
    rows, cols, vals = [], [], []
    for p, J in enumerate(fc.members):
        if j not in J:
            q = sup[p, j]
            if q >= 0:
                rows.append(p), cols.append(q), vals.append(1.0)
            continue
        rows.append(p), cols.append(p), vals.append(-cache.inv[p, j] @ b)
        for ell in range(fc.n):
            q = sup[p, ell]
            if q >= 0:
                rows.append(p), cols.append(q), vals.append(-cache.inv_gram[p, j, ell])
    size = len(fc)
    return sp.csr_matrix((vals, (rows, cols)), shape=(size, size))


def bj_b_derivative(cache: GramCache, j: int, k: int) -> sp.csr_matrix:
    """``dB_j/db_k``: diagonal, ``-alpha_J^{jk}`` on rows with both j, k in J."""
    _check_index(j, cache.fc.n)
    _check_index(k, cache.fc.n)
    return sp.diags(-cache.inv[:, j, k], format="csr")


def second_derivative_operator(cache: GramCache, b, k: int, j: int) -> sp.csr_matrix:
    """``M_kj`` with ``d/db_k d/db_j ghat = M_kj ghat`` on solutions."""
    return (bj_b_derivative(cache, j, k) + bj_matrix(cache, b, j) @ bj_matrix(cache, b, k)).tocsr()


def aij_matrix(cache: GramCache, b, i: int, j: int) -> sp.csr_matrix:
    """``A_ij = sum_k a_ik M_kj`` with ``d/da_ij ghat = A_ij ghat``."""
    d, n = cache.a.shape
    if not 0 <= i < d:
        raise IndexOutOfRange(f"coordinate index {i} outside 0..{d - 1}")
    size = len(cache.fc)
    out = sp.csr_matrix((size, size))
    for k in range(n):
        if cache.a[i, k] != 0.0:
            out = out + cache.a[i, k] * second_derivative_operator(cache, b, k, j)
    return out.tocsr()


def dump_coo(matrix, fc: FaceComplex) -> str:
    """Coordinate-format text, one ``row-set<TAB>col-set<TAB>value`` line per entry.

    Index sets are printed 1-based, e.g. ``{1,3}``.
    """
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))

    def label(J):
        return "{" + ",".join(str(i + 1) for i in J) + "}"

    lines = [
        f"{label(fc.members[coo.row[t]])}\t{label(fc.members[coo.col[t]])}\t{coo.data[t]:.17g}"
        for t in order
    ]
    return "\n".join(lines) + ("\n" if lines else "")


# -- batched evaluation ---------------------------------------------------------


def _gather(fc: FaceComplex, v: np.ndarray) -> np.ndarray:
    """``out[p, l] = v[J_p + l]`` (0 where absent); works for v of shape (size,) or (size, m)."""
    sup = fc.superset
    out = v[np.where(sup >= 0, sup, 0)]
    mask = sup >= 0
    if v.ndim == 2:
        mask = mask[:, :, None]
    return np.where(mask, out, 0.0)


def apply_b(cache: GramCache, b, g) -> np.ndarray:
    """All first derivatives at once: column ``j`` of the result is ``B_j g``."""
    g = np.asarray(g, dtype=float)
    gs = _gather(cache.fc, g)
    cb = cache.inv @ np.asarray(b, dtype=float)
    return gs - cb * g[:, None] - np.einsum("pjl,pl->pj", cache.inv_gram, gs)


def apply_b_columns(cache: GramCache, b, U) -> np.ndarray:
    """Column ``j`` of the result is ``B_j U[:, j]``."""
    U = np.asarray(U, dtype=float)
    US = _gather(cache.fc, U)  # (size, l, j)
    cb = cache.inv @ np.asarray(b, dtype=float)
    diag = np.einsum("pjj->pj", US)
    return diag - cb * U - np.einsum("pjl,plj->pj", cache.inv_gram, US)


def connection_apply(cache: GramCache, b, a_dot, b_dot, g) -> np.ndarray:
    """``(sum_ij a_dot_ij A_ij + sum_j b_dot_j B_j) g`` without forming any matrix."""
    g = np.asarray(g, dtype=float)
    Bg = apply_b(cache, b, g)
    out = Bg @ np.asarray(b_dot, dtype=float)
    if a_dot is None:
        return out
    a_dot = np.asarray(a_dot, dtype=float)
    if not np.any(a_dot):
        return out
    C = cache.a.T @ a_dot  # C[k, j] = sum_i a_ik a_dot_ij
    out = out + apply_b_columns(cache, b, Bg @ C).sum(axis=1)
    out = out - np.einsum("pjk,kj->p", cache.inv, C) * g
    return out


def ode_rhs(path, fc: FaceComplex, t: float, g, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """``dg/dt`` along a parameter path (anything with ``at(t)`` and ``velocity()``)."""
    a, b = path.at(t)
    a_dot, b_dot = path.velocity()
    cache = gram_cache(a, fc, cond_limit)
    return connection_apply(cache, b, a_dot, b_dot, g)


def unnormalized_scale(d: int) -> float:
    """Factor between the stored state and the probability-scale derivatives."""
    return (2 * math.pi) ** (d / 2)
