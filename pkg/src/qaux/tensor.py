"""Dense complex linear algebra on tensor-product spaces."""
from dataclasses import dataclass, field

import numpy as np

MAX_ENTRIES = 2**24

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=np.complex128)
ID2 = np.eye(2, dtype=np.complex128)


class QauxError(Exception):
    """Base class for errors raised by this package."""


class SizeError(QauxError):
    pass


class ConvergenceError(QauxError):
    def __init__(self, message, data=None):
        super().__init__(message)
        self.data = data or {}


class PolynomialError(QauxError):
    def __init__(self, message, max_deviation):
        super().__init__(message)
        self.max_deviation = max_deviation


def as_cmatrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def check_size(rows, cols, cap=None):
    cap = MAX_ENTRIES if cap is None else cap
    if rows * cols > cap:
        raise SizeError(f"{rows}x{cols} matrix exceeds the cap of {cap} entries")


def kron(a, b, cap=None):
    a, b = as_cmatrix(a), as_cmatrix(b)
    check_size(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1], cap)
    return np.kron(a, b)


def kron_all(mats, cap=None):
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = kron(out, m, cap)
    return out


def embed_site(op2, m, M):
    """Place a 2x2 operator at site ``m`` (1-based, site 1 leftmost) of M sites."""
    if not 1 <= m <= M:
        raise ValueError(f"site {m} out of range 1..{M}")
    op2 = as_cmatrix(op2)
    return kron(kron(np.eye(2 ** (m - 1)), op2), np.eye(2 ** (M - m)))


def total_sz(M):
    """Diagonal of total S^z = (1/2) sum sigma^z_m, site 1 most significant."""
    idx = np.arange(2**M)
    down = np.array([bin(i).count("1") for i in idx])
    return 0.5 * (M - 2 * down)


@dataclass
class BlockMonodromy:
    """Auxiliary-indexed grid of quantum-space operators.

    ``blocks[i, j]`` is ``<i|Q|j>`` for auxiliary states ``i, j`` counted
    from ``offset`` (so index 0 is auxiliary label ``offset``).
    """

    blocks: np.ndarray
    band: int
    offset: int = 0

    @property
    def aux_dim(self):
        return self.blocks.shape[0]

    @property
    def dim(self):
        return self.blocks.shape[2]

    def block(self, i, j):
        """Block by auxiliary label; labels outside the window give zero."""
        a, b = i - self.offset, j - self.offset
        if 0 <= a < self.aux_dim and 0 <= b < self.aux_dim:
            return self.blocks[a, b]
        return np.zeros((self.dim, self.dim), dtype=np.complex128)


def aux_trace(Q, weights):
    weights = np.asarray(weights, dtype=np.complex128)
    if weights.shape != (Q.aux_dim,):
        raise ValueError(f"need {Q.aux_dim} weights, got {weights.shape}")
    diag = Q.blocks[np.arange(Q.aux_dim), np.arange(Q.aux_dim)]
    return np.tensordot(weights, diag, axes=1)


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float


def eigpairs(A, tol=1e-9):
    """Complete eigen-decomposition with per-pair residual check."""
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError("eigpairs needs a square matrix")
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("dense eigensolver did not converge", {"shape": A.shape}) from exc
    scale = max(1.0, np.linalg.norm(A, 2))
    out = []
    for k in range(len(vals)):
        v = vecs[:, k] / np.linalg.norm(vecs[:, k])
        res = float(np.linalg.norm(A @ v - vals[k] * v))
        if res > tol * scale:
            raise ConvergenceError(
                f"eigenpair {k} residual {res:.3e} exceeds {tol:.1e}",
                {"index": k, "value": vals[k], "residual": res, "scale": scale},
            )
        out.append(EigenPair(complex(vals[k]), v, res))
    return out


@dataclass
class PolySamples:
    points: np.ndarray
    values: np.ndarray
    degree_bound: int

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128)
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.points.shape != self.values.shape:
            raise ValueError("points and values differ in length")
        if len(self.points) < self.degree_bound + 1:
            raise ValueError("not enough samples for the degree bound")
        d = np.abs(self.points[:, None] - self.points[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() == 0:
            raise ValueError("sample points must be distinct")


def poly_from_samples(s, rtol=1e-8):
    """Coefficients (constant term first) of the interpolating polynomial.

    Over-determined samples must agree with the fit to ``rtol`` relative to
    the largest sample value.
    """
    scale = max(1.0, float(np.max(np.abs(s.points))))
    x = s.points / scale
    V = np.vander(x, s.degree_bound + 1, increasing=True)
    c, *_ = np.linalg.lstsq(V, s.values, rcond=None)
    dev = float(np.max(np.abs(V @ c - s.values)) / max(np.max(np.abs(s.values)), 1e-300))
    if dev > rtol:
        raise PolynomialError(
            f"not a polynomial of degree <= {s.degree_bound}: max deviation {dev:.3e}", dev
        )
    return c / scale ** np.arange(s.degree_bound + 1)


def circle_points(n, radius=1.0, phase=0.1):
    return radius * np.exp(1j * (phase + 2 * np.pi * np.arange(n) / n))


def commutator_residual(A, B):
    A, B = as_cmatrix(A), as_cmatrix(B)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("commutator needs equal square shapes")
    num = np.linalg.norm(A @ B - B @ A)
    return float(num / max(1.0, np.linalg.norm(A) * np.linalg.norm(B)))


def relative_residual(lhs, rhs, *terms):
    """||lhs - rhs|| over the largest norm among lhs, rhs and extra terms."""
    scale = max([np.linalg.norm(lhs), np.linalg.norm(rhs)] + [np.linalg.norm(t) for t in terms])
    return float(np.linalg.norm(lhs - rhs) / max(scale, 1e-300))
