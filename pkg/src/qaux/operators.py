"""Global operators on the spin chain: monodromies, T, Q families, fusion T^(n).

Monodromies are evaluated column by column in the auxiliary space.  Starting
from a single auxiliary basis state, each site multiplies the column by a
banded L-operator, so the quantum-space operators are never assembled
through full tensor products with the auxiliary space.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .reps import (
    ParameterError,
    l_fusion_weights,
    l_generic,
    l_rootofunity,
    l_sixvertex,
)
from .tensor import MAX_ENTRIES, SIGMA_X, BlockMonodromy, QauxError, SizeError, kron_all, total_sz

QCONV_MARGIN = 0.9
TAIL_RTOL = 1e-12


class ConvergenceBoundError(QauxError, ValueError):
    """The twist violates |lambda| < min(|q|, 1/|q|)^(M/2)."""


class WindowError(QauxError, ValueError):
    """The truncated trace has not converged at the requested window size."""

    def __init__(self, message, tail=None):
        super().__init__(message)
        self.tail = tail


@dataclass
class QuantumOperator:
    mat: np.ndarray
    meta: dict = field(default_factory=dict)

    def __matmul__(self, other):
        m = other.mat if isinstance(other, QuantumOperator) else other
        return self.mat @ m


def _column(lws, j, lo_cut=None, hi_cut=None, which=None):
    """Propagate auxiliary basis state j through all sites.

    Returns the (A', d, d) column restricted to auxiliary indices
    [lo_cut, hi_cut) and that offset.
    """
    A = lws[0].dim
    M = len(lws)
    lo_cut = max(0, j - M) if lo_cut is None else lo_cut
    hi_cut = min(A, j + M + 1) if hi_cut is None else hi_cut
    sl = slice(lo_cut, hi_cut)
    Asub = hi_cut - lo_cut
    V = np.zeros((Asub, 1, 1), dtype=np.complex128)
    V[j - lo_cut] = 1.0
    lo, hi = j - lo_cut, j - lo_cut + 1
    for lw in lws:
        al, be, ga, de = (np.ascontiguousarray(v[sl]) for v in (lw.alpha, lw.beta, lw.gamma, lw.delta))
        # a path from j moves at most one auxiliary step per site, so the
        # default cut [j-M, j+M] loses nothing
        V, lo, hi = _accel.propagate(V, al, be, ga, de, lo, hi, which)
    return V, lo_cut


def monodromy(lws, lam, cap=None, which=None):
    """Full block monodromy lambda^h L_M ... L_1 for per-site weights ``lws`` (site 1 first)."""
    A = lws[0].dim
    d = 2 ** len(lws)
    cap = MAX_ENTRIES if cap is None else cap
    if A * A * d * d > cap:
        raise SizeError(f"block monodromy with {A}x{A} blocks of size {d} exceeds the cap")
    blocks = np.zeros((A, A, d, d), dtype=np.complex128)
    for j in range(A):
        V, off = _column(lws, j, 0, A, which)
        blocks[:, j] = V
    twist = np.complex128(lam) ** lws[0].h
    blocks *= twist[:, None, None, None]
    return BlockMonodromy(blocks, band=1, offset=int(lws[0].labels[0]))


def trace_weighted(lws, weights, which=None):
    """sum_n weights[n] <n|L_M ... L_1|n> without building off-diagonal blocks."""
    d = 2 ** len(lws)
    out = np.zeros((d, d), dtype=np.complex128)
    for j, wt in enumerate(weights):
        if wt == 0:
            continue
        V, off = _column(lws, j, which=which)
        out += wt * V[j - off]
    return out


def diagonal_blocks(lws, which=None):
    """Untwisted diagonal blocks <n|L_M ... L_1|n>, stacked."""
    out = []
    for j in range(lws[0].dim):
        V, off = _column(lws, j, which=which)
        out.append(V[j - off])
    return np.stack(out)


# ---------------------------------------------------------- transfer matrix


def sixvertex_sites(p, z):
    return [l_sixvertex(z / zm, p.q) for zm in p.zeta]


def transfer_t(p, z, which=None):
    lws = sixvertex_sites(p, z)
    mat = trace_weighted(lws, [p.lam, 1 / p.lam], which)
    return QuantumOperator(mat, {"family": "T", "z": z})


def abcd(p, z, which=None):
    Q = monodromy(sixvertex_sites(p, z), p.lam, which=which)
    return tuple(QuantumOperator(Q.blocks[i, j], {"family": n, "z": z})
                 for (i, j), n in zip(((0, 0), (0, 1), (1, 0), (1, 1)), "ABCD"))


# ----------------------------------------------------------------- Q at q^N=1


def rootofunity_sites(p, mu, w, sqrt_mu=None):
    return [l_rootofunity(w / zm, mu, p, sqrt_mu) for zm in p.zeta]


def q_mu(p, mu, w, sqrt_mu=None, which=None):
    """Trace over the cyclic representation with twist lambda^(-2n)."""
    lws = rootofunity_sites(p, mu, w, sqrt_mu)
    mat = trace_weighted(lws, p.lam ** lws[0].h, which)
    return QuantumOperator(mat, {"family": "Q_mu", "mu": mu, "w": w, "normalization": "unnormalized"})


def q_mu_monodromy(p, mu, w, sqrt_mu=None, which=None):
    return monodromy(rootofunity_sites(p, mu, w, sqrt_mu), p.lam, which=which)


# ------------------------------------------------------- truncated generic Q


def qconv_bound(p):
    """Largest admissible |lambda| for the truncated trace, before the safety margin."""
    a = abs(p.q)
    return min(a, 1 / a) ** (p.M / 2)


def tail_ratio(p):
    """Geometric ratio of successive window contributions."""
    a = abs(p.q)
    return abs(p.lam) ** 2 * max(a, 1 / a) ** p.M


def check_qconv(p):
    bound = qconv_bound(p)
    if abs(p.lam) >= QCONV_MARGIN * bound:
        raise ConvergenceBoundError(
            f"|lambda| = {abs(p.lam):.4g} violates the convergence bound "
            f"|lambda| < min(|q|, 1/|q|)^(M/2) = {bound:.4g} (with {int(100 * (1 - QCONV_MARGIN))}% margin)"
        )
    return bound


def generic_sites(p, w, r0, r1, r2, K, m_o=0, q=None):
    q = p.q if q is None else q
    return [l_generic(w / zm, r0, r1, r2, K, q, m_o) for zm in p.zeta]


def q_trunc(p, r0, r1, w, K=40, r2=1.0, q=None, check_bound=True, check_tail=True, which=None):
    """Window-truncated trace over labels -K+1..0 with weights lambda^(-2n).

    ``meta["tail"]`` is a geometric estimate of the omitted part, relative to
    the norm of the result.
    """
    if check_bound:
        check_qconv(p)
    lws = generic_sites(p, w, r0, r1, r2, K, q=q)
    weights = p.lam ** lws[0].h
    mat = trace_weighted(lws, weights, which)
    rho = tail_ratio(p)
    last = np.linalg.norm(weights[0] * _column(lws, 0, which=which)[0][0])
    norm = max(np.linalg.norm(mat), 1e-300)
    tail = np.inf if rho >= 1 else last * rho / (1 - rho) / norm
    meta = {"family": "Q_trunc", "r": (r0, r1, r2), "w": w, "K": K, "tail": float(tail), "rho": float(rho)}
    if check_tail and tail > TAIL_RTOL:
        raise WindowError(
            f"estimated truncation tail {tail:.2e} exceeds {TAIL_RTOL:.0e} of the norm at K={K}; "
            "increase the window", tail
        )
    return QuantumOperator(mat, meta)


def q_osc(p, sign, w, K=40, **kw):
    """Q^+ (sign=+1) or Q^- (sign=-1) from the q-oscillator representations."""
    r = (1.0, 1.0, 0.0) if sign > 0 else (1.0, 0.0, 1.0)
    Q = q_trunc(p, r[0], r[1], w, K, r2=r[2], **kw)
    Q.meta["family"] = "Q+" if sign > 0 else "Q-"
    return Q


def q_trunc_monodromy(p, r0, r1, w, K=12, r2=1.0, which=None):
    return monodromy(generic_sites(p, w, r0, r1, r2, K), p.lam, which=which)


# ----------------------------------------------------------------- fusion


def fusion_sites(p, n, u):
    return [l_fusion_weights(u * p.q**n / zm, n - 1, p.q) for zm in p.zeta]


def fusion_t(p, n, z, method="direct", which=None):
    """Fusion transfer matrix T^(n)(z) with an n-dimensional auxiliary space."""
    if n < 1:
        raise ParameterError("fusion index n must be >= 1")
    if method == "direct":
        lws = fusion_sites(p, n, z)
        mat = trace_weighted(lws, p.lam ** lws[0].h, which)
    elif method == "recursion":
        mat = _fusion_recursive(p, n, z, which)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return QuantumOperator(mat, {"family": f"T^({n})", "z": z, "method": method})


def _prod(p, u):
    return np.prod([u / zm - 1 for zm in p.zeta])


def _fusion_recursive(p, n, z, which=None):
    # T^(k+1)(u) = [T^(k)(u q^2) T^(2)(u) - T^(k-1)(u q^4) prod(u q^2/zeta - 1)] / prod(u q^4/zeta - 1)
    q = p.q
    d = 2**p.M
    if n == 1:
        return _prod(p, z * q**2) * np.eye(d)
    if n == 2:
        return fusion_t(p, 2, z, which=which).mat

    cache = {}

    def T(k, u):
        key = (k, complex(u))
        if key not in cache:
            if k <= 2:
                cache[key] = _fusion_recursive(p, k, u, which)
            else:
                u0 = u
                num = T(k - 1, u0 * q**2) @ T(2, u0) - T(k - 2, u0 * q**4) * _prod(p, u0 * q**2)
                cache[key] = num / _prod(p, u0 * q**4)
        return cache[key]

    return T(n, z)


# ------------------------------------------------------------------ helpers


def spin_reversal(M):
    return kron_all([SIGMA_X] * M)


def sector_indices(M, Sz):
    if abs(2 * Sz - round(2 * Sz)) > 1e-12 or (round(2 * Sz) - M) % 2:
        raise ParameterError(f"S^z={Sz} incompatible with M={M}")
    idx = np.flatnonzero(np.isclose(total_sz(M), Sz))
    if len(idx) == 0:
        raise ParameterError(f"empty sector S^z={Sz}")
    return idx


def spin_sector_project(op, Sz, M=None):
    """Restriction to the S^z eigenspace (basis states in increasing order)."""
    mat = op.mat if isinstance(op, QuantumOperator) else np.asarray(op)
    M = int(round(np.log2(mat.shape[0]))) if M is None else M
    idx = sector_indices(M, Sz)
    return mat[np.ix_(idx, idx)]


def off_sector_norm(mat, M):
    """Frobenius norm of the part of ``mat`` that changes total S^z."""
    sz = total_sz(M)
    mask = ~np.isclose(sz[:, None], sz[None, :])
    return float(np.linalg.norm(np.asarray(mat)[mask]))
