import numpy as np
import pytest

from qaux import _accel
from qaux.operators import monodromy, q_mu, q_trunc, rootofunity_sites, transfer_t
from qaux.reps import make_params

Q3 = np.exp(2j * np.pi / 3)
QG = np.exp(0.53j)

pytestmark = pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")


def test_transfer_backends_agree():
    p = make_params(5, QG, 0.7 + 0.1j, [1.0, 0.9, 1.1, 0.8 + 0.1j, 1.2])
    a = transfer_t(p, 0.4 + 0.3j, which="numba").mat
    b = transfer_t(p, 0.4 + 0.3j, which="numpy").mat
    assert np.abs(a - b).max() < 1e-14 * np.abs(b).max()


def test_q_mu_backends_agree():
    p = make_params(4, Q3, 0.8)
    a = q_mu(p, 0.6 + 0.5j, 0.9 - 0.3j, which="numba").mat
    b = q_mu(p, 0.6 + 0.5j, 0.9 - 0.3j, which="numpy").mat
    assert np.abs(a - b).max() < 1e-14 * np.abs(b).max()
    ma = monodromy(rootofunity_sites(p, 0.6, 0.9), p.lam, which="numba")
    mb = monodromy(rootofunity_sites(p, 0.6, 0.9), p.lam, which="numpy")
    for i in range(3):
        for j in range(3):
            assert np.abs(ma.block(i, j) - mb.block(i, j)).max() < 1e-14


def test_q_trunc_backends_agree():
    p = make_params(4, QG, 0.5)
    a = q_trunc(p, 0.8, 1.3, 0.7, K=30, which="numba").mat
    b = q_trunc(p, 0.8, 1.3, 0.7, K=30, which="numpy").mat
    assert np.abs(a - b).max() < 1e-13 * np.abs(b).max()


def test_backend_env_selection(monkeypatch):
    monkeypatch.setenv("QAUX_BACKEND", "numpy")
    assert _accel.backend() == "numpy"
    monkeypatch.setenv("QAUX_BACKEND", "NUMBA")
    assert _accel.backend() == "numba"
    monkeypatch.setenv("QAUX_BACKEND", "fortran")
    with pytest.raises(ValueError):
        _accel.backend()
