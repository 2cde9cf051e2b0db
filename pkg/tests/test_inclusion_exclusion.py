import math

import numpy as np
import pytest

from polyhgm.errors import NotOnHyperplane
from polyhgm.families import FAMILIES, simplex_p
from polyhgm.geometry import build_system, face_complex_lp, min_norm_point, tangent_basis
from polyhgm.inclusion_exclusion import (
    face_ie_sum,
    face_ie_sum_batch,
    face_indicator,
    face_indicator_batch,
    heaviside,
    ie_sum,
    ie_sum_batch,
    indicator,
    indicator_batch,
)

R2 = math.sqrt(2) / 2
GUARD = 1e-9


def literal_sum(sys, members, x, skip=()):
    """Direct evaluation of sum_F prod_{j in F minus skip} (H(f_j) - 1)."""
    h = heaviside(sys.values(x))
    return int(sum(np.prod([h[j] - 1 for j in F if j not in skip]) for F in members))


def test_indicator_examples():
    s = simplex_p(2)
    assert indicator(s, [0, 0]) == 1
    assert indicator(s, [10, 10]) == 0
    assert indicator(s, [-R2, 0.0]) == 1  # on facet 0, H(0) = 1


def test_ie_sum_examples():
    s = simplex_p(2)
    fc = face_complex_lp(s)
    assert ie_sum(s, fc, [0, 0]) == 1
    assert ie_sum(s, fc, [10, 10]) == literal_sum(s, fc.members, [10, 10]) == 0


def test_face_ie_sum_examples():
    s = simplex_p(2)
    fc = face_complex_lp(s)
    assert face_ie_sum(s, fc, (0,), [-R2, 0.0]) == 1
    x = [-R2, 100.0]
    assert face_ie_sum(s, fc, (0,), x) == literal_sum(s, fc.containing((0,)), x, skip=(0,)) == 0
    for x in ([0.1, 0.2], [3.0, -4.0]):
        assert face_ie_sum(s, fc, (), x) == ie_sum(s, fc, x)


def test_face_ie_sum_off_hyperplane():
    s = simplex_p(2)
    with pytest.raises(NotOnHyperplane):
        face_ie_sum(s, face_complex_lp(s), (0,), [0.0, 0.0])


def test_scalar_and_batch_agree_with_literal_sum():
    rng = np.random.default_rng(7)
    s = FAMILIES["Q"](3)
    fc = face_complex_lp(s)
    X = rng.normal(scale=2.0, size=(300, 3)) + 1.5
    batch = ie_sum_batch(s, fc, X)
    for x, v in zip(X, batch):
        assert v == ie_sum(s, fc, x) == literal_sum(s, fc.members, x)
        assert indicator(s, x) == indicator_batch(s, x[None])[0]
    J = (0, 2)
    pts = min_norm_point(s, J) + rng.normal(size=(100, 1)) * tangent_basis(s, J).T
    fb = face_ie_sum_batch(s, fc, J, pts)
    for x, v in zip(pts, fb):
        assert v == face_ie_sum(s, fc, J, x) == literal_sum(s, fc.containing(J), x, skip=J)
        assert face_indicator(s, J, x) == face_indicator_batch(s, J, x[None])[0]


def _guarded(values, mask=None):
    v = np.abs(values)
    if mask is not None:
        v = v[:, mask]
    return v.min(axis=1) > GUARD


def check_polyhedron_identity(sys, fc, n_points, rng):
    X = rng.normal(scale=2.0, size=(n_points, sys.d))
    keep = _guarded(sys.values(X))
    X = X[keep]
    lhs = indicator_batch(sys, X)
    rhs = ie_sum_batch(sys, fc, X)
    return int(np.count_nonzero(lhs != rhs)), len(X)


def check_face_identity(sys, fc, J, n_points, rng):
    x0 = min_norm_point(sys, J)
    Q = tangent_basis(sys, J)
    X = x0 + rng.normal(scale=2.0, size=(n_points, Q.shape[1])) @ Q.T
    rest = np.array([j not in J for j in range(sys.n)])
    if rest.any():
        X = X[_guarded(sys.values(X), rest)]
    lhs = face_indicator_batch(sys, J, X)
    rhs = face_ie_sum_batch(sys, fc, J, X)
    return int(np.count_nonzero(lhs != rhs)), len(X)


@pytest.mark.parametrize("family", "PQC")
@pytest.mark.parametrize("d", range(2, 7))
def test_polyhedron_identity_random_points(family, d):
    rng = np.random.default_rng(d)
    s = FAMILIES[family](d)
    fails, used = check_polyhedron_identity(s, face_complex_lp(s), 10_000, rng)
    assert fails == 0
    assert used > 9_000


@pytest.mark.parametrize("family", "PQC")
@pytest.mark.parametrize("d", range(2, 6))
def test_face_identity_random_points(family, d):
    rng = np.random.default_rng(100 + d)
    s = FAMILIES[family](d)
    fc = face_complex_lp(s)
    for J in fc:
        fails, _ = check_face_identity(s, fc, J, 1000, rng)
        assert fails == 0, J


@pytest.mark.parametrize("family", "PQC")
def test_identities_survive_small_perturbation(family):
    rng = np.random.default_rng(5)
    s = FAMILIES[family](4)
    fc = face_complex_lp(s)
    noisy = build_system(
        s.a + rng.uniform(-1e-3, 1e-3, s.a.shape), s.b + rng.uniform(-1e-3, 1e-3, s.b.shape)
    )
    assert check_polyhedron_identity(noisy, fc, 10_000, rng)[0] == 0
    for J in fc:
        assert check_face_identity(noisy, fc, J, 1000, rng)[0] == 0
