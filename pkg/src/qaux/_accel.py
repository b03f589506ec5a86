"""Backend selection for the site-propagation kernels.

Set ``QAUX_BACKEND=numpy`` to force the pure-numpy path. The default is
``numba`` when it imports, otherwise ``numpy``.
"""
import functools
import os

import numpy as np

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    nb = None
    HAS_NUMBA = False

njit = functools.partial(nb.njit, cache=True, nogil=True) if HAS_NUMBA else None


def backend():
    name = os.environ.get("QAUX_BACKEND", "numba" if HAS_NUMBA else "numpy").lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"QAUX_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name


def _propagate_numpy(V, alpha, beta, gamma, delta, lo, hi):
    # V: (A, d, d) column of auxiliary blocks, nonzero only for lo <= a < hi.
    A, d, _ = V.shape
    lo2, hi2 = max(lo - 1, 0), min(hi + 1, A)
    out = np.zeros((A, 2 * d, 2 * d), dtype=np.complex128)
    W = out.reshape(A, d, 2, d, 2)
    sl = slice(lo, hi)
    W[sl, :, 0, :, 0] = alpha[sl, None, None] * V[sl]
    W[sl, :, 1, :, 1] = delta[sl, None, None] * V[sl]
    # aux a <- a-1 through beta_a (site sigma^+), aux a <- a+1 through gamma_a (site sigma^-)
    up = slice(max(lo + 1, lo2), hi2)
    src = slice(up.start - 1, up.stop - 1)
    W[up, :, 0, :, 1] = beta[up, None, None] * V[src]
    dn = slice(lo2, min(hi - 1, hi2))
    src = slice(dn.start + 1, dn.stop + 1)
    W[dn, :, 1, :, 0] = gamma[dn, None, None] * V[src]
    return out, lo2, hi2


if HAS_NUMBA:

    @njit
    def _propagate_numba_kernel(V, alpha, beta, gamma, delta, lo, hi, out):
        A, d, _ = V.shape
        lo2 = max(lo - 1, 0)
        hi2 = min(hi + 1, A)
        for a in range(lo2, hi2):
            inside = lo <= a < hi
            has_up = lo <= a - 1 < hi
            has_dn = lo <= a + 1 < hi
            al = alpha[a]
            de = delta[a]
            be = beta[a]
            ga = gamma[a]
            for x in range(d):
                for y in range(d):
                    if inside:
                        v = V[a, x, y]
                        out[a, 2 * x, 2 * y] = al * v
                        out[a, 2 * x + 1, 2 * y + 1] = de * v
                    if has_up:
                        out[a, 2 * x, 2 * y + 1] = be * V[a - 1, x, y]
                    if has_dn:
                        out[a, 2 * x + 1, 2 * y] = ga * V[a + 1, x, y]
        return lo2, hi2


def _propagate_numba(V, alpha, beta, gamma, delta, lo, hi):
    A, d, _ = V.shape
    out = np.zeros((A, 2 * d, 2 * d), dtype=np.complex128)
    lo2, hi2 = _propagate_numba_kernel(
        np.ascontiguousarray(V), alpha, beta, gamma, delta, lo, hi, out
    )
    return out, lo2, hi2


def propagate(V, alpha, beta, gamma, delta, lo, hi, which=None):
    """Append one quantum site to a column of auxiliary blocks.

    Returns the new column (quantum dimension doubled) and its active
    auxiliary range ``[lo, hi)``.
    """
    which = which or backend()
    if which == "numba":
        return _propagate_numba(V, alpha, beta, gamma, delta, lo, hi)
    return _propagate_numpy(V, alpha, beta, gamma, delta, lo, hi)
