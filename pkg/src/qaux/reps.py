"""Model parameters, auxiliary representations and local L-operators.

All L-operators share one banded form. Decomposed over the quantum site,
``L = [[alpha, beta], [gamma, delta]]`` where ``alpha`` and ``delta`` are
diagonal on the auxiliary space, ``beta`` raises the auxiliary index by one
(``<a|beta|a-1>``) and ``gamma`` lowers it (``<a|gamma|a+1>``).  An
``LWeights`` stores these four sequences on a finite auxiliary window.
"""
from dataclasses import dataclass, field
from math import gcd
from typing import Optional

import numpy as np

from .tensor import ID2, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, QauxError

ROOT_TOL = 1e-12
GENERIC_TOL = 1e-6
GENERIC_ORDER = 24
POLE_TOL = 1e-10


class ParameterError(QauxError, ValueError):
    pass


class SingularArgumentError(QauxError, ValueError):
    pass


class RootOfUnityObstruction(QauxError, ValueError):
    pass


class WindowLeakageError(QauxError, ValueError):
    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


def qint(k, q):
    """q-integer [k]_q = (q^k - q^-k)/(q - 1/q)."""
    return (q**k - q ** (-k)) / (q - 1 / q)


def parse_complex(v):
    """Accept a number, ``{"re", "im"}``, ``{"phase_over_pi"}`` or ``{"root_of_unity": {N, k}}``."""
    if isinstance(v, dict):
        if "root_of_unity" in v:
            r = v["root_of_unity"]
            return complex(np.exp(2j * np.pi * r["k"] / r["N"]))
        if "phase_over_pi" in v:
            return complex(np.exp(1j * np.pi * v["phase_over_pi"]) * v.get("modulus", 1.0))
        if "re" in v or "im" in v:
            return complex(v.get("re", 0.0), v.get("im", 0.0))
        raise ParameterError(f"cannot parse complex value from {v!r}")
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(v[0], v[1])
    return complex(v)


def detect_order(q, max_order=GENERIC_ORDER, tol=ROOT_TOL):
    """Smallest N <= max_order with |q^N - 1| < tol, else None."""
    for k in range(1, max_order + 1):
        if abs(q**k - 1) < tol:
            return k
    return None


@dataclass(frozen=True)
class ModelParams:
    """Chain length, deformation q, twist lambda and inhomogeneities.

    ``N`` is the order of q as a root of unity (None when q is generic) and
    ``Nprime`` is N for odd N and N/2 for even N.
    """

    M: int
    q: complex
    lam: complex = 1.0
    zeta: tuple = ()
    N: Optional[int] = None
    Nprime: Optional[int] = None

    def __post_init__(self):
        if self.M < 1:
            raise ParameterError("chain length must be >= 1")
        object.__setattr__(self, "q", complex(self.q))
        object.__setattr__(self, "lam", complex(self.lam))
        zeta = tuple(complex(z) for z in self.zeta) if len(self.zeta) else (1.0 + 0j,) * self.M
        if len(zeta) != self.M:
            raise ParameterError(f"need {self.M} inhomogeneities, got {len(zeta)}")
        if any(z == 0 for z in zeta):
            raise ParameterError("inhomogeneities must be nonzero")
        object.__setattr__(self, "zeta", zeta)
        if self.q == 0 or abs(self.q**2 - 1) < ROOT_TOL:
            raise ParameterError("q must be nonzero with q^2 != 1")
        N = self.N
        if N is not None:
            if abs(self.q**N - 1) > ROOT_TOL:
                raise ParameterError(f"|q^{N} - 1| = {abs(self.q**N - 1):.2e} exceeds {ROOT_TOL}")
            N = detect_order(self.q, N)
        else:
            N = detect_order(self.q)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "Nprime", None if N is None else (N if N % 2 else N // 2))

    @property
    def generic(self):
        if self.N is not None:
            return False
        return all(abs(self.q**k - 1) > GENERIC_TOL for k in range(1, GENERIC_ORDER + 1))

    def replace(self, **kw):
        d = dict(M=self.M, q=self.q, lam=self.lam, zeta=self.zeta)
        if "q" not in kw:
            d["N"] = self.N
        d.update(kw)
        if "M" in kw and "zeta" not in kw:
            d["zeta"] = ()
        return ModelParams(**d)


def make_params(M, q, lam=1.0, zeta="homogeneous"):
    """Build ModelParams from loosely typed input (see ``parse_complex``).

    An exact root-of-unity input fixes N without floating drift.
    """
    N = None
    if isinstance(q, dict) and "root_of_unity" in q:
        r = q["root_of_unity"]
        N = r["N"] // gcd(r["N"], r["k"])
    zs = () if isinstance(zeta, str) or zeta is None else tuple(parse_complex(z) for z in zeta)
    return ModelParams(M, parse_complex(q), parse_complex(lam), zs, N)


# ---------------------------------------------------------------- six-vertex


@dataclass(frozen=True)
class BoltzmannWeights:
    z: complex
    a: complex
    b: complex
    c: complex
    c_prime: complex


def weights_sixvertex(z, q):
    den = 1 - z * q**2
    if abs(den) < POLE_TOL:
        raise SingularArgumentError(f"z={z} sits on the pole 1 - z q^2 = 0")
    c = (1 - q**2) / den
    return BoltzmannWeights(complex(z), 1.0 + 0j, (1 - z) * q / den, c, c * z)


def rmatrix(z, q):
    w = weights_sixvertex(z, q)
    return (
        (w.a + w.b) / 2 * np.kron(ID2, ID2)
        + (w.a - w.b) / 2 * np.kron(SIGMA_Z, SIGMA_Z)
        + w.c * np.kron(SIGMA_PLUS, SIGMA_MINUS)
        + w.c_prime * np.kron(SIGMA_MINUS, SIGMA_PLUS)
    )


# ---------------------------------------------------------- representations


@dataclass
class AuxRepSpec:
    """Which auxiliary representation to build.

    kind: "rootofunity", "borel", "osc+", "osc-" or "spin".  For the borel
    kinds the r-parameters are the rescaled ones; ``s_params`` recovers the
    original s-parameters.  The window holds labels ``m_o-K+1 .. m_o``.
    """

    kind: str
    w: complex = 1.0
    mu: complex = 1.0
    r0: complex = 1.0
    r1: complex = 1.0
    r2: complex = 1.0
    n: int = 1
    K: int = 40
    m_o: int = 0
    h_prime: bool = True

    def __post_init__(self):
        kinds = ("rootofunity", "borel", "osc+", "osc-", "spin")
        if self.kind not in kinds:
            raise ParameterError(f"unknown representation kind {self.kind!r}")
        if self.K < 1:
            raise ParameterError("window size K must be >= 1")
        if self.kind == "osc+":
            self.r0, self.r1, self.r2 = 1.0, 1.0, 0.0
        elif self.kind == "osc-":
            self.r0, self.r1, self.r2 = 1.0, 0.0, 1.0

    def s_params(self, q):
        f = -self.w / (q - 1 / q) ** 2
        return self.r0, f * self.r1, f * self.r2

    @property
    def labels(self):
        return np.arange(self.m_o - self.K + 1, self.m_o + 1)


@dataclass
class RepOps:
    """Generator images; f0/f1 are None for Borel representations.

    ``interior`` lists the basis indices where relations are exact (all of
    them unless the space is a truncated window).
    """

    dim: int
    e0: np.ndarray
    e1: np.ndarray
    f0: Optional[np.ndarray]
    f1: Optional[np.ndarray]
    qh1: np.ndarray
    qh1_inv: np.ndarray
    qh0: np.ndarray
    qh0_inv: np.ndarray
    h_prime_diag: np.ndarray
    interior: np.ndarray = None

    def __post_init__(self):
        if self.interior is None:
            self.interior = np.arange(self.dim)


def _diag_rep(e0, e1, f0, f1, qh1_diag, h_prime, interior=None):
    qh1_diag = np.asarray(qh1_diag, dtype=np.complex128)
    return RepOps(
        len(qh1_diag), e0, e1, f0, f1,
        np.diag(qh1_diag), np.diag(1 / qh1_diag), np.diag(1 / qh1_diag), np.diag(qh1_diag),
        np.asarray(h_prime, dtype=float), interior,
    )


def fundamental_rep(z, q):
    if z == 0:
        raise ParameterError("the evaluation point must be nonzero")
    qsz = np.array([q, 1 / q])
    return _diag_rep(z * SIGMA_MINUS, SIGMA_PLUS.copy(), SIGMA_PLUS / z, SIGMA_MINUS.copy(), qsz, [0, -2])


def _shift_up(dim, coef):
    """Matrix sending |n> to coef[n] |n+1>."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    for n in range(dim - 1):
        m[n + 1, n] = coef[n]
    return m


def _shift_down(dim, coef):
    """Matrix sending |n> to coef[n] |n-1>."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    for n in range(1, dim):
        m[n - 1, n] = coef[n]
    return m


def rootofunity_rep(spec, p):
    if p.Nprime is None:
        raise ParameterError("the root-of-unity representation needs q^N = 1")
    mu, q, w, Np = complex(spec.mu), p.q, complex(spec.w), p.Nprime
    if mu == 0:
        raise ParameterError("mu must be nonzero")
    n = np.arange(Np)
    f1 = _shift_up(Np, np.ones(Np))
    coef = (mu + 1 / mu - mu * q ** (2 * n) - q ** (-2 * n) / mu) / (q - 1 / q) ** 2
    e1 = _shift_down(Np, coef)
    return _diag_rep(w * f1, e1, e1 / w, f1, q ** (-2 * n - 1) / mu, -2 * n)


def borel_rep(spec, p):
    q, w = p.q, complex(spec.w)
    if spec.K < 4:
        raise ParameterError("borel window needs K >= 4")
    labels = spec.labels
    K = spec.K
    c0 = w / (q - 1 / q) ** 2 * (spec.r1 - q ** (-2.0 * labels)) * (spec.r2 - q ** (2.0 * labels))
    top = c0[-1]
    if abs(top) > 1e-12 * max(1.0, abs(w) / abs(q - 1 / q) ** 2):
        raise WindowLeakageError(
            f"e0 leaks out of the window: <{spec.m_o + 1}|e0|{spec.m_o}> = {top:.3e}; "
            "need (r1 - q^(-2 m_o))(r2 - q^(2 m_o)) = 0",
            element=complex(top),
        )
    e0 = _shift_up(K, c0)
    e1 = _shift_down(K, np.ones(K))
    interior = np.arange(2, K - 2)
    return _diag_rep(e0, e1, None, None, spec.r0 * q ** (-2.0 * labels), -2 * labels, interior)


def spin_n_rep(z, n, q):
    qi = np.array([qint(k, q) for k in range(1, n + 1)])
    if n and np.min(np.abs(qi)) < 1e-12:
        k = int(np.argmin(np.abs(qi))) + 1
        raise RootOfUnityObstruction(f"[{k}]_q vanishes; spin {n}/2 representation is singular")
    m = np.arange(n + 1)
    e1 = _shift_down(n + 1, [qint(n - k + 1, q) for k in m])
    f1 = _shift_up(n + 1, [qint(k + 1, q) for k in m])
    return _diag_rep(z * f1, e1, e1 / z, f1, q ** (n - 2.0 * m), n - 2 * m)


def _restrict(err, idx):
    if len(idx) == 0:
        return 0.0
    return float(np.max(np.abs(err[np.ix_(idx, idx)])))


def verify_algebra_relations(r, q):
    """Residuals of the defining relations, keyed by relation name.

    For truncated windows only rows/columns in ``r.interior`` count.
    """
    idx = r.interior
    out = {}
    I = np.eye(r.dim)
    out["qh1*qh1_inv"] = _restrict(r.qh1 @ r.qh1_inv - I, idx)
    out["qh0*qh0_inv"] = _restrict(r.qh0 @ r.qh0_inv - I, idx)
    out["qh0*qh1"] = _restrict(r.qh0 @ r.qh1 - I, idx)
    cartan = [[2, -2], [-2, 2]]
    qh = [(r.qh0, r.qh0_inv), (r.qh1, r.qh1_inv)]
    es = [r.e0, r.e1]
    fs = [r.f0, r.f1]
    for i in range(2):
        for j in range(2):
            a = cartan[i][j]
            out[f"qh{i} e{j}"] = _restrict(qh[i][0] @ es[j] @ qh[i][1] - q**a * es[j], idx)
            if fs[j] is not None:
                out[f"qh{i} f{j}"] = _restrict(qh[i][0] @ fs[j] @ qh[i][1] - q ** (-a) * fs[j], idx)
    if r.f0 is not None:
        for i in range(2):
            for j in range(2):
                lhs = es[i] @ fs[j] - fs[j] @ es[i]
                rhs = (qh[i][0] - qh[i][1]) / (q - 1 / q) if i == j else 0 * I
                out[f"[e{i},f{j}]"] = _restrict(lhs - rhs, idx)
    q3 = qint(3, q)
    for name, gens in (("e", es), ("f", fs)):
        if gens[0] is None:
            continue
        for i, j in ((0, 1), (1, 0)):
            x, y = gens[i], gens[j]
            serre = x @ x @ x @ y - q3 * x @ x @ y @ x + q3 * x @ y @ x @ x - y @ x @ x @ x
            out[f"serre {name}{i}{name}{j}"] = _restrict(serre, idx)
    return out


def oscillator_residual(spec, p):
    """Residual of q e+ e- - q^-1 e- e+ = 1/(q - 1/q) on the window interior."""
    r = borel_rep(spec, p)
    q = p.q
    ep, em = r.e0 / spec.w, r.e1
    if spec.kind == "osc-":
        ep, em = r.e1, r.e0 / spec.w
    lhs = q * ep @ em - em @ ep / q
    return _restrict(lhs - np.eye(r.dim) / (q - 1 / q), r.interior)


# ------------------------------------------------------------ L-operators


@dataclass
class LWeights:
    """Banded L-operator on an auxiliary window.

    ``beta[i]`` couples window index i-1 to i and ``gamma[i]`` couples i+1
    to i, so ``beta[0]`` and ``gamma[-1]`` are zero.  ``labels`` are the
    representation labels of the window and ``h`` the eigenvalues of the
    auxiliary Cartan element used for the twist.
    """

    family: str
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    labels: np.ndarray
    h: np.ndarray
    rho_plus: complex = None
    rho_minus: complex = None

    @property
    def dim(self):
        return len(self.alpha)

    def matrix(self):
        """Dense L on aux (x) site, aux factor first."""
        A = self.dim
        a = np.diag(self.alpha)
        d = np.diag(self.delta)
        b = np.diag(self.beta[1:], -1) if A > 1 else np.zeros((1, 1))
        g = np.diag(self.gamma[:-1], 1) if A > 1 else np.zeros((1, 1))
        L = np.zeros((2 * A, 2 * A), dtype=np.complex128)
        L[0::2, 0::2] = a
        L[0::2, 1::2] = b
        L[1::2, 0::2] = g
        L[1::2, 1::2] = d
        return L


def _c(x):
    return np.asarray(x, dtype=np.complex128)


def l_sixvertex(z, q):
    """The R-matrix in L-form with a two-dimensional auxiliary space."""
    w = weights_sixvertex(z, q)
    return LWeights(
        "R", _c([w.a, w.b]), _c([0, w.c_prime]), _c([w.c, 0]), _c([w.b, w.a]),
        np.arange(2), np.array([1.0, -1.0]),
    )


def l_rootofunity(x, mu, p, sqrt_mu=None):
    """L-operator for the cyclic representation; ``sqrt_mu`` fixes the branch of mu^(1/2)."""
    if p.Nprime is None:
        raise ParameterError("needs q^N = 1")
    q, Np = p.q, p.Nprime
    sm = np.sqrt(complex(mu)) if sqrt_mu is None else complex(sqrt_mu)
    sq = np.sqrt(q)
    n = np.arange(Np)
    qn = q ** n.astype(float)
    alpha = x / sm / qn * sq - sm * qn * sq
    delta = x * sm * qn * sq**3 - 1 / (sm * qn * sq)
    mu2 = sm**2
    gamma = sm * qn * sq**3 * (mu2 + 1 / mu2 - mu2 * qn**2 * q**2 - 1 / (mu2 * qn**2 * q**2)) / (q - 1 / q)
    gamma[-1] = 0
    beta = x * (q - 1 / q) / sm / qn * sq
    beta[0] = 0
    return LWeights("G1", _c(alpha), _c(beta), _c(gamma), _c(delta), n, -2.0 * n)


def l_generic(x, r0, r1, r2, K, q, m_o=0, check=True):
    """L-operator for the four-parameter Borel representation on labels m_o-K+1..m_o."""
    n = np.arange(m_o - K + 1, m_o + 1).astype(float)
    sr0 = np.sqrt(complex(r0))
    alpha = x * r2 / sr0 * q ** (-n + 2) - q**n / sr0
    delta = x * r1 * sr0 * q**n - sr0 * q ** (-n)
    gamma = (q - 1 / q) / sr0 * q ** (n + 1)
    gamma[-1] = 0
    beta = x * sr0 * q ** (-n + 1) * (r1 - q ** (2 - 2 * n)) * (r2 - q ** (2 * n - 2)) / (q - 1 / q)
    top = x * sr0 * q ** (-m_o) * (r1 - q ** (-2 * m_o)) * (r2 - q ** (2 * m_o)) / (q - 1 / q)
    if check and abs(top) > 1e-12 * max(1.0, abs(x)):
        raise WindowLeakageError(
            f"beta at label {m_o + 1} is {top:.3e}; the window is not invariant", element=complex(top)
        )
    beta[0] = 0
    return LWeights("G2", _c(alpha), _c(beta), _c(gamma), _c(delta), n.astype(int), -2.0 * n)


def l_fusion_weights(w, n, q):
    """Banded weights of the fusion L-operator on the spin n/2 space (rho+ = wq, rho- = 1)."""
    spin_n_rep(1.0, n, q)  # raises on a vanishing q-integer
    rp, rm = w * q, 1.0
    m = np.arange(n + 1).astype(float)
    hh = q ** ((n - 2 * m) / 2)
    alpha = rp * hh - rm / hh
    delta = rp / hh - rm * hh
    beta = np.zeros(n + 1, dtype=np.complex128)
    gamma = np.zeros(n + 1, dtype=np.complex128)
    for a in range(1, n + 1):
        beta[a] = rp * (q - 1 / q) * q ** ((n - 2 * a) / 2) * qint(a, q)
    for a in range(n):
        gamma[a] = rm * (q - 1 / q) * q ** (-(n - 2 * a - 2) / 2) * qint(n - a, q)
    return LWeights("fusion", _c(alpha), beta, gamma, _c(delta), m.astype(int), n - 2 * m, rp, rm)


def l_fusion(w, n, q):
    """Dense fusion L-operator, (n+1)-dim auxiliary factor first."""
    return l_fusion_weights(w, n, q).matrix()


def l_commutes_with_spin(lw):
    """Residual of [L, h (x) 1 + 1 (x) sigma^z]."""
    L = lw.matrix()
    S = np.kron(np.diag(lw.h), ID2) + np.kron(np.eye(lw.dim), SIGMA_Z)
    return float(np.max(np.abs(L @ S - S @ L)))


def central_values(r, Nprime):
    """(q^h)^N' and a cyclic Casimir proxy for the representation."""
    return np.diag(np.linalg.matrix_power(r.qh1, Nprime))
