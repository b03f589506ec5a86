import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import kron_index

from qaux.tensor import (
    ID2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    BlockMonodromy,
    ConvergenceError,
    PolynomialError,
    PolySamples,
    SizeError,
    aux_trace,
    commutator_residual,
    eigpairs,
    embed_site,
    kron,
    kron_all,
    poly_from_samples,
    total_sz,
)

cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def mats(r, c):
    return st.lists(cplx, min_size=r * c, max_size=r * c).map(lambda v: np.array(v).reshape(r, c))


def test_kron_small_cases():
    assert np.array_equal(kron(ID2, ID2), np.eye(4))
    assert np.array_equal(kron(SIGMA_Z, SIGMA_Z), np.diag([1, -1, -1, 1]))
    assert np.array_equal(kron(SIGMA_PLUS, SIGMA_MINUS), kron_index(SIGMA_PLUS, SIGMA_MINUS))


def test_kron_cap():
    with pytest.raises(SizeError):
        kron(np.eye(64), np.eye(64), cap=1000)


gauss = st.builds(complex, st.integers(-9, 9), st.integers(-9, 9))


def int_mats(r, c):
    return st.lists(gauss, min_size=r * c, max_size=r * c).map(lambda v: np.array(v).reshape(r, c))


@given(int_mats(2, 3), int_mats(3, 2), int_mats(2, 2))
def test_kron_associative(a, b, c):
    # Gaussian-integer entries keep every product exact, so equality is bitwise
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


@given(mats(2, 2), mats(3, 3))
def test_kron_trace(a, b):
    t = np.trace(kron(a, b))
    ref = np.trace(a) * np.trace(b)
    assert abs(t - ref) <= 1e-14 * max(1.0, abs(ref), np.abs(a).max() * np.abs(b).max() * 6)


def test_embed_site():
    assert np.array_equal(embed_site(SIGMA_Z, 1, 2), np.kron(SIGMA_Z, ID2))
    assert np.array_equal(embed_site(SIGMA_Z, 2, 2), np.kron(ID2, SIGMA_Z))
    total = sum(embed_site(SIGMA_Z, m, 3) for m in (1, 2, 3))
    assert sorted(np.linalg.eigvalsh(total).round(12)) == [-3, -1, -1, -1, 1, 1, 1, 3]
    assert np.allclose(np.diag(total) / 2, total_sz(3))
    with pytest.raises(ValueError):
        embed_site(SIGMA_Z, 0, 2)


def test_aux_trace():
    blk = np.arange(16, dtype=complex).reshape(1, 1, 4, 4)
    Q = BlockMonodromy(blk, band=1)
    assert np.array_equal(aux_trace(Q, [1.0]), blk[0, 0])
    Q3 = BlockMonodromy(np.random.default_rng(0).normal(size=(3, 3, 2, 2)) + 0j, band=1)
    assert np.array_equal(aux_trace(Q3, [0, 0, 0]), np.zeros((2, 2)))
    w1, w2 = np.array([1, 2j, 3]), np.array([0.5, -1, 1j])
    assert np.allclose(aux_trace(Q3, w1 + w2), aux_trace(Q3, w1) + aux_trace(Q3, w2), atol=0)
    with pytest.raises(ValueError):
        aux_trace(Q3, [1, 2])
    assert np.array_equal(Q3.block(-1, 0), np.zeros((2, 2)))


def test_eigpairs():
    vals = sorted(e.value.real for e in eigpairs(np.diag([1.0, 2.0, 3.0])))
    assert vals == [1, 2, 3]
    pairs = sorted(eigpairs(SIGMA_X), key=lambda e: e.value.real)
    assert np.allclose([e.value for e in pairs], [-1, 1])
    for e, s in zip(pairs, (-1, 1)):
        ref = np.array([1, s]) / np.sqrt(2)
        assert abs(abs(np.vdot(ref, e.vector)) - 1) < 1e-12
    for e in eigpairs(np.random.default_rng(1).normal(size=(6, 6))):
        assert e.residual <= 1e-9 * 10


def test_eigpairs_defective_matrix_reports():
    # a Jordan block's eigenvector matrix is singular: the residual is still small,
    # but a non-square input is a hard error
    with pytest.raises(ValueError):
        eigpairs(np.ones((2, 3)))
    assert isinstance(ConvergenceError("x", {"a": 1}).data, dict)


def test_poly_from_samples():
    c = poly_from_samples(PolySamples([0, 1], [1, 2], 1))
    assert np.allclose(c, [1, 1])
    c = poly_from_samples(PolySamples([0.1, 0.5, 2.0], [3, 3, 3], 2))
    assert np.allclose(c, [3, 0, 0], atol=1e-12)
    # P_B(z)P_B(zq^2) for roots z_j, against direct convolution
    q = np.exp(0.7j)
    roots = np.array([0.4 + 0.3j, 1.2 - 0.5j])
    pb = np.array([1.0 + 0j])
    pb2 = np.array([1.0 + 0j])
    for r in roots:
        pb = np.convolve(pb, [1, -1 / r])
        pb2 = np.convolve(pb2, [1, -q**2 / r])
    ref = np.convolve(pb, pb2)
    pts = np.exp(1j * np.linspace(0, 2 * np.pi, 5, endpoint=False)) * 0.9
    vals = [np.polyval(ref[::-1], z) for z in pts]
    assert np.allclose(poly_from_samples(PolySamples(pts, vals, 4)), ref, atol=1e-12)


def test_poly_from_samples_rejects_non_polynomial():
    pts = np.linspace(0.1, 1, 6)
    with pytest.raises(PolynomialError) as exc:
        poly_from_samples(PolySamples(pts, 1 / pts, 2))
    assert exc.value.max_deviation > 1e-8
    with pytest.raises(ValueError):
        PolySamples([1, 1], [0, 0], 1)


def test_commutator_residual():
    A = np.random.default_rng(2).normal(size=(3, 3))
    assert commutator_residual(np.eye(3), A) == 0
    # ||[sx, sz]||_F = 2 ||sy||_F = 2 sqrt(2) and ||sx||_F ||sz||_F = 2
    assert abs(np.linalg.norm(SIGMA_X @ SIGMA_Z - SIGMA_Z @ SIGMA_X) - 2 * np.linalg.norm(SIGMA_Y)) < 1e-15
    assert abs(commutator_residual(SIGMA_X, SIGMA_Z) - np.sqrt(2)) < 1e-15
    with pytest.raises(ValueError):
        commutator_residual(np.eye(2), np.eye(3))


def test_kron_all_matches_chain():
    a, b, c = SIGMA_X, SIGMA_Z, SIGMA_PLUS
    assert np.array_equal(kron_all([a, b, c]), np.kron(np.kron(a, b), c))
