import numpy as np
import pytest

from oracles import aux_block, dense_monodromy, dense_transfer
from qaux.operators import (
    ConvergenceBoundError, WindowError, abcd, fusion_t, monodromy, off_sector_norm, q_mu,
    q_mu_monodromy, q_osc, q_trunc, rootofunity_sites, sector_indices, spin_reversal,
    spin_sector_project, transfer_t,
)
from qaux.reps import ParameterError, l_rootofunity, make_params, weights_sixvertex
from qaux.tensor import commutator_residual, total_sz

Q3 = np.exp(2j * np.pi / 3)
QG = np.exp(0.53j)


def comm(A, B):
    return np.abs(A @ B - B @ A).max() / max(np.abs(A @ B).max(), 1e-300)


@pytest.mark.parametrize("M,lam,zeta", [(1, 1.0, "homogeneous"), (3, 0.7 + 0.2j, "homogeneous"),
                                         (4, 1.3, [1.0, 0.9 + 0.1j, 1.1, 0.8j])])
def test_transfer_matches_dense_oracle(M, lam, zeta):
    p = make_params(M, QG, lam, zeta)
    z = 0.6 + 0.45j
    ref = dense_transfer(M, QG, lam, p.zeta, z)
    assert np.abs(transfer_t(p, z).mat - ref).max() < 1e-13 * np.abs(ref).max()


def test_rootofunity_monodromy_matches_dense_oracle():
    p = make_params(2, Q3, 0.8 + 0.1j, [1.0, 0.7 + 0.2j])
    mu, w = 0.6 + 0.5j, 0.9 - 0.3j
    mats = [l_rootofunity(w / zm, mu, p).matrix() for zm in p.zeta]
    ref = dense_monodromy(mats, 3, -2.0 * np.arange(3), p.lam)
    got = q_mu_monodromy(p, mu, w)
    for i in range(3):
        for j in range(3):
            assert np.abs(got.block(i, j) - aux_block(ref, 3, i, j)).max() < 1e-13


def test_monodromy_single_site_blocks_are_l_entries():
    p = make_params(1, Q3)
    lw = l_rootofunity(0.7, 0.9, p)
    Q = monodromy([lw], 1.0)
    L = lw.matrix()
    for i in range(3):
        for j in range(3):
            assert np.abs(Q.block(i, j) - L[2 * i:2 * i + 2, 2 * j:2 * j + 2]).max() < 1e-15


def test_vacuum_diagonal_blocks():
    # Q_nn |0> = lam^(-2n) prod_m alpha_n(w/zeta_m) |0>
    p = make_params(3, Q3, 0.8, [1.0, 0.9, 1.2j])
    mu, w = 0.6 + 0.5j, 0.9 - 0.3j
    Q = q_mu_monodromy(p, mu, w)
    lws = rootofunity_sites(p, mu, w)
    for n in range(3):
        expected = p.lam ** (-2 * n) * np.prod([lw.alpha[n] for lw in lws])
        assert abs(Q.block(n, n)[0, 0] - expected) < 1e-13
        assert np.abs(Q.block(n, n)[1:, 0]).max() < 1e-14
    # lower-triangular vacuum action
    for j in range(3):
        for k in range(j):
            assert np.abs(Q.block(j, k)[:, 0]).max() < 1e-14


def test_transfer_vacuum_eigenvalue():
    p = make_params(5, QG, 0.7 + 0.2j, [1.0, 0.9, 1.1, 0.8 + 0.1j, 1.2])
    z = 0.4 + 0.9j
    ev = p.lam + p.q**p.M / p.lam * np.prod([(z - zm) / (z * p.q**2 - zm) for zm in p.zeta])
    assert abs(transfer_t(p, z).mat[0, 0] - ev) < 1e-13


def test_transfer_at_one_is_cyclic_shift():
    p = make_params(3, QG)
    T1 = transfer_t(p, 1.0).mat
    assert np.allclose(np.abs(T1), np.round(np.abs(T1)))
    shift = np.zeros((8, 8))
    for s in range(8):
        bits = [(s >> (2 - k)) & 1 for k in range(3)]
        t = bits[1:] + bits[:1]
        shift[int("".join(map(str, t)), 2), s] = 1
    assert min(np.abs(T1 - shift).max(), np.abs(T1 - shift.T).max()) < 1e-14


def test_transfer_commutes_at_two_points():
    p = make_params(5, QG, 0.7, [1.0, 0.9, 1.1, 0.8 + 0.1j, 1.2])
    rng = np.random.default_rng(3)
    for _ in range(3):
        z, w = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert comm(transfer_t(p, z).mat, transfer_t(p, w).mat) < 1e-12


def test_abcd_vacuum_and_sum():
    p = make_params(4, QG, 0.8)
    z = 0.7 + 0.3j
    A, B, C, D = (o.mat for o in abcd(p, z))
    assert np.abs(C[:, 0]).max() < 1e-15
    assert np.abs(A + D - transfer_t(p, z).mat).max() < 1e-14


def test_yang_baxter_algebra_ab_exchange():
    # A(z1) B(z2) = B(z2) A(z1)/b - c B(z1) A(z2)/b with weights at z2/z1
    p = make_params(4, QG, 0.8)
    z1, z2 = 0.7 + 0.3j, 1.2 - 0.4j
    A1, B1 = (o.mat for o in abcd(p, z1)[:2])
    A2, B2 = (o.mat for o in abcd(p, z2)[:2])
    w = weights_sixvertex(z2 / z1, QG)
    lhs = A1 @ B2
    assert np.abs(lhs - (B2 @ A1 - w.c * B1 @ A2) / w.b).max() < 1e-11 * np.abs(lhs).max()


def test_q_mu_commutes_with_transfer_and_itself():
    p = make_params(4, Q3, 1.0)
    T = transfer_t(p, 0.5 + 0.2j).mat
    Q1 = q_mu(p, 0.6 + 0.5j, 0.9 - 0.3j).mat
    assert comm(T, Q1) < 1e-11
    p3 = make_params(4, Q3, Q3)  # lambda^3 = 1
    Qa = q_mu(p3, 0.6 + 0.5j, 0.9 - 0.3j).mat
    Qb = q_mu(p3, 1.3 - 0.2j, 0.4 + 0.8j).mat
    assert comm(Qa, Qb) < 1e-10


def test_q_trunc_window_convergence():
    # K vs K+10 at |lambda| = 0.7, |q| = 1
    p = make_params(4, QG, 0.7)
    a = q_trunc(p, 0.8, 1.3, 0.6 + 0.2j, K=40, check_tail=False).mat
    b = q_trunc(p, 0.8, 1.3, 0.6 + 0.2j, K=50, check_tail=False).mat
    assert np.linalg.norm(a - b) < 1e-12 * np.linalg.norm(b)


def test_q_trunc_bound_violation():
    with pytest.raises(ConvergenceBoundError, match="min"):
        q_trunc(make_params(4, QG, 1.2), 0.8, 1.3, 0.5)


def test_q_trunc_small_window_raises():
    with pytest.raises(WindowError) as err:
        q_trunc(make_params(4, QG, 0.7), 0.8, 1.3, 0.5, K=8)
    assert err.value.tail > 1e-12


def test_q_trunc_commutes_with_transfer():
    p = make_params(4, QG, 0.5, [1.0, 0.9, 1.1, 0.8 + 0.1j])
    Q = q_trunc(p, 0.8, 1.3, 0.6 + 0.2j).mat
    assert comm(transfer_t(p, 0.3 - 0.7j).mat, Q) < 1e-10


def test_q_oscillator_vacuum():
    p = make_params(3, QG, 0.5)
    Qp = q_osc(p, 1, 0.7 + 0.1j).mat
    assert abs(Qp[0, 0] - (-1) ** 3 / (1 - p.lam**2 * QG**-3)) < 1e-12


def test_q_trunc_decomposes_into_oscillator_product():
    p = make_params(4, QG, 0.5)
    z, r0, r1 = 0.8 + 0.3j, 0.8, 1.3
    Qt = q_trunc(p, r0, r1, z).mat
    prod = q_osc(p, 1, z * r1).mat @ q_osc(p, -1, z).mat
    for S in (2, 1, 0, -1, -2):
        i = sector_indices(4, S)
        fac = r0 ** (-S) * (1 - p.lam**2 * QG ** (-2 * S))
        lhs = Qt[np.ix_(i, i)]
        assert np.abs(lhs - fac * prod[np.ix_(i, i)]).max() < 1e-9 * np.abs(lhs).max()


def test_fusion_one_and_two_identifications():
    p = make_params(4, QG, 0.8, [1.0, 0.9, 1.1, 0.8 + 0.1j])
    z = 0.8 + 0.3j
    pr = np.prod([z * QG**2 / zm - 1 for zm in p.zeta])
    assert np.abs(fusion_t(p, 1, z).mat - pr * np.eye(16)).max() < 1e-13
    T2 = fusion_t(p, 2, z * QG**-2).mat
    assert np.abs(T2 - QG ** (-p.M / 2) * transfer_t(p, z).mat * pr).max() < 1e-11 * np.abs(T2).max()


def test_fusion_direct_and_recursion_agree():
    p = make_params(4, QG, 0.8)
    z = 0.6 - 0.4j
    a = fusion_t(p, 3, z).mat
    b = fusion_t(p, 3, z, method="recursion").mat
    assert np.abs(a - b).max() < 1e-10 * np.abs(a).max()


def test_fusion_bad_index():
    with pytest.raises(ParameterError):
        fusion_t(make_params(2, QG), 0, 0.5)


def test_every_family_conserves_spin():
    pr = make_params(4, Q3, 0.8)
    pg = make_params(4, QG, 0.5)
    ops = [
        transfer_t(pg, 0.4 + 0.2j).mat,
        q_mu(pr, 0.6 + 0.5j, 0.7).mat,
        q_trunc(pg, 0.8, 1.3, 0.7).mat,
        q_osc(pg, 1, 0.7).mat,
        q_osc(pg, -1, 0.7).mat,
        fusion_t(pg, 3, 0.7).mat,
    ]
    Sz = np.diag(total_sz(4))
    for op in ops:
        assert off_sector_norm(op, 4) < 1e-12 * np.linalg.norm(op)
        assert commutator_residual(op, Sz) < 1e-11 * max(1.0, np.linalg.norm(op))


def test_sector_projection():
    M = 5
    assert spin_sector_project(np.eye(2**M), M / 2).shape == (1, 1)
    dims = [len(sector_indices(M, M / 2 - k)) for k in range(M + 1)]
    assert sum(dims) == 2**M
    with pytest.raises(ParameterError):
        sector_indices(M, 1)


def test_spin_reversal_is_involution():
    R = spin_reversal(3)
    assert np.array_equal(R @ R, np.eye(8))
