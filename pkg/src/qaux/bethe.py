"""Bethe equations, Bethe states and closed-form eigenvalues.

Bethe polynomial: P_B(z) = prod_j (1 - z/z_j).  Spin S^z = M/2 - n_B.
"""
from dataclasses import dataclass

import numpy as np

from .operators import abcd
from .reps import ParameterError, weights_sixvertex
from .tensor import ConvergenceError, QauxError

DEDUP_RTOL = 1e-8
SOLVE_TOL = 1e-12


class DivergenceError(QauxError, ValueError):
    """A geometric eigenvalue series does not converge."""


class StringCollapseWarning(QauxError):
    """The Bethe vector vanishes (complete string or coinciding roots)."""


@dataclass
class BetheRootSet:
    roots: np.ndarray
    M: int
    residual: float = np.nan
    provenance: str = "manual"

    def __post_init__(self):
        r = np.asarray(self.roots, dtype=np.complex128).ravel()
        if np.any(~np.isfinite(r)) or np.any(r == 0):
            raise ParameterError("Bethe roots must be finite and nonzero")
        order = np.lexsort((np.angle(r), np.round(np.abs(r), 12)))
        self.roots = r[order]

    @property
    def n_B(self):
        return len(self.roots)

    @property
    def Sz(self):
        return self.M / 2 - self.n_B

    @property
    def pb_coeffs(self):
        """Coefficients of P_B, constant term first."""
        c = np.array([1.0 + 0j])
        for zj in self.roots:
            c = np.convolve(c, [1.0, -1.0 / zj])
        return c

    def pb(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.ones_like(z)
        for zj in self.roots:
            out = out * (1 - z / zj)
        return out

    def min_separation(self):
        r = self.roots
        if len(r) < 2:
            return np.inf
        d = np.abs(r[:, None] - r[None, :]) / np.maximum(np.abs(r[:, None]), np.abs(r[None, :]))
        np.fill_diagonal(d, np.inf)
        return float(d.min())


def vacuum_a(p, z):
    return p.lam


def vacuum_d(p, z):
    return p.q**p.M / p.lam * np.prod([(z - zm) / (z * p.q**2 - zm) for zm in p.zeta])


def _pb_ratio(rs, num, den):
    """P_B(num)/P_B(den) as a product of ratios (z_j - num)/(z_j - den)."""
    out = 1.0 + 0j
    for zj in rs.roots:
        out *= (zj - num) / (zj - den)
    return out


# ----------------------------------------------------------- Bethe equations


def bae_residual(rs, p):
    q, lam, nB = p.q, p.lam, rs.n_B
    out = np.zeros(nB, dtype=np.complex128)
    for i, zi in enumerate(rs.roots):
        for zm in p.zeta:
            if abs(zi * q**2 - zm) < 1e-14 * abs(zm):
                raise ParameterError(f"root {zi} sits on a pole z q^2 = zeta")
        t1 = lam * q**nB * rs.pb(zi / q**2)
        t2 = q ** (p.M - nB) / lam * np.prod([(zi - zm) / (zi * q**2 - zm) for zm in p.zeta]) * rs.pb(zi * q**2)
        out[i] = (t1 + t2) / max(abs(t1), abs(t2), 1e-300)
    return out


def _ratio_system(u, p, jac=False):
    """Bethe equations as R_i(z) + 1 = 0 in log variables u = log z.

    R_i = -lambda^2 q^(2 n_B - M - 2) prod_(j != i) (z_j - z_i q^-2)/(z_j - z_i q^2)
          * prod_m (z_i q^2 - zeta_m)/(z_i - zeta_m).
    """
    q, lam, M = p.q, p.lam, p.M
    z = np.exp(u)
    nB = len(z)
    zeta = np.asarray(p.zeta)
    off = ~np.eye(nB, dtype=bool)
    d1 = z[None, :] - z[:, None] / q**2  # [i, j] = z_j - z_i q^-2
    d2 = z[None, :] - z[:, None] * q**2
    s1 = z[:, None] * q**2 - zeta[None, :]
    s2 = z[:, None] - zeta[None, :]
    c = -(lam**2) * q ** (2 * nB - M - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        R = c * np.prod(np.where(off, d1 / d2, 1), axis=1) * np.prod(s1 / s2, axis=1)
        F = R + 1
        if not jac:
            return F
        r1 = np.where(off, 1 / d1, 0)
        r2 = np.where(off, 1 / d2, 0)
        L = r1 - r2
        L[np.diag_indices(nB)] = -np.sum(r1, 1) / q**2 + q**2 * np.sum(r2, 1) + np.sum(q**2 / s1 - 1 / s2, 1)
    return F, R[:, None] * L * z[None, :]


def _newton(u0, p, maxit=100, tol=1e-13):
    """Damped Newton in log variables; steps capped at 1 and halved until |F| drops."""
    u = np.array(u0, dtype=np.complex128)
    F, J = _ratio_system(u, p, jac=True)
    res = np.linalg.norm(F)
    for _ in range(maxit):
        if res < tol:
            break
        if not (np.all(np.isfinite(J)) and np.isfinite(res)):
            return u, np.inf
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return u, np.inf
        big = np.max(np.abs(step))
        if big > 1:
            step /= big
        damp = 1.0
        while True:
            un = u + damp * step
            rn = np.linalg.norm(_ratio_system(un, p))
            if rn < res or damp < 1e-4:
                break
            damp /= 2
        u = un
        F, J = _ratio_system(u, p, jac=True)
        res = np.linalg.norm(F)
    return u, res


def _seeds(p, nB, rng, count):
    out = []
    # structured seeds near the unit circle, same-ray seeds, a wide log-normal cloud, then the annulus 0.1..10
    for k in range(min(count // 4, 50)):
        ph = rng.uniform(-np.pi, np.pi, nB)
        out.append(np.exp(1j * ph) * (1 + 0.1 * rng.standard_normal(nB)))
    # roots sharing one ray (near-string configurations have small basins)
    for k in range(count // 4):
        rad = np.exp(rng.uniform(-1.5, 1.5, nB))
        out.append(rad * np.exp(1j * (rng.uniform(-np.pi, np.pi) + 0.05 * rng.standard_normal(nB))))
    for k in range(count // 4):
        rad = np.exp(1.5 * rng.standard_normal(nB))
        out.append(rad * np.exp(1j * rng.uniform(-np.pi, np.pi, nB)))
    while len(out) < count:
        rad = np.exp(rng.uniform(np.log(0.1), np.log(10), nB))
        out.append(rad * np.exp(1j * rng.uniform(-np.pi, np.pi, nB)))
    return out


def _spectral_seeds(p, n_B, z_probe=0.37 + 0.81j):
    """Root guesses read off the transfer-matrix spectrum of the sector.

    For each eigenvector the eigenvalue Lambda(z) is sampled and P_B is the
    null vector of the linear TQ relation
    Lambda A P(z) = lam q^n_B A P(z q^-2) + q^(M-n_B)/lam B P(z q^2),
    with A = prod(z q^2 - zeta) and B = prod(z - zeta).
    """
    from .operators import sector_indices, transfer_t
    from .tensor import circle_points

    q, lam, M = p.q, p.lam, p.M
    idx = sector_indices(M, M / 2 - n_B)
    pts = circle_points(n_B + M + 4, 0.9, phase=0.3)
    Ts = [transfer_t(p, z).mat[np.ix_(idx, idx)] for z in pts]
    _, V = np.linalg.eig(transfer_t(p, z_probe).mat[np.ix_(idx, idx)])
    powers = np.arange(n_B + 1)
    out = []
    for v in V.T:
        rows = []
        for z, T in zip(pts, Ts):
            L = np.vdot(v, T @ v) / np.vdot(v, v)
            A = np.prod([z * q**2 - zm for zm in p.zeta])
            B = np.prod([z - zm for zm in p.zeta])
            rows.append(L * A * z**powers - lam * q**n_B * A * (z / q**2) ** powers
                        - q ** (M - n_B) / lam * B * (z * q**2) ** powers)
        rows = np.array(rows)
        c = np.linalg.svd(rows / np.abs(rows).max(axis=1, keepdims=True))[2][-1].conj()
        if abs(c[0]) < 1e-8 * np.abs(c).max() or abs(c[-1]) < 1e-8 * np.abs(c).max():
            continue  # a root at zero or infinity
        out.append(np.roots(c[::-1]))
    return out


def _same_set(a, b, rtol=1e-6):
    if len(a) != len(b):
        return False
    # both canonical-sorted, but ordering can flip between near-equal moduli
    used = np.zeros(len(b), dtype=bool)
    for x in a:
        d = np.abs(b - x) / max(abs(x), 1.0)
        d[used] = np.inf
        k = int(np.argmin(d))
        if d[k] > rtol:
            return False
        used[k] = True
    return True


class BetheSolutions(list):
    """Solution sets plus a completeness flag (found vs binomial(M, n_B))."""

    def __init__(self, items, expected):
        super().__init__(items)
        self.expected = expected

    @property
    def complete(self):
        return len(self) >= self.expected


def state_validator(p, tol=1e-8, z_probe=None):
    """Predicate: the Bethe vector is non-null and a T eigenvector with eig_t eigenvalue."""
    from .operators import transfer_t

    z_probe = 0.37 + 0.81j if z_probe is None else z_probe
    T = transfer_t(p, z_probe).mat

    def ok(rs):
        try:
            v = bethe_state(rs, p)
        except StringCollapseWarning:
            return False
        ev = eig_t(rs, p, z_probe)
        return np.linalg.norm(T @ v - ev * v) <= tol * max(1.0, abs(ev))

    return ok


def solve_bae(p, n_B, seeds="auto", rng=None, validate=None, tol=SOLVE_TOL, zmax=1e6):
    """Multi-start damped Newton on the Bethe equations.

    ``seeds`` is an int (that many random starts), an explicit list of root
    guesses, "spectral" (guesses from the transfer-matrix spectrum, see
    ``_spectral_seeds``) or "auto" (spectral guesses followed by 200 random
    starts; spectral guesses are skipped for M > 12).

    Returns canonical (sorted) root sets with residual < ``tol`` as a
    ``BetheSolutions`` list whose ``complete`` flag compares the count with
    binomial(M, n_B).  Sets with coinciding roots, or with roots drifting to
    0 or infinity beyond ``zmax``, are rejected.  ``validate`` is an optional
    predicate on a BetheRootSet (see ``state_validator``) used to drop
    spurious solutions such as complete strings.
    """
    from math import comb

    expected = comb(p.M, n_B)
    if n_B == 0:
        return BetheSolutions([BetheRootSet([], p.M, 0.0, "solved")], 1)
    rng = np.random.default_rng(0) if rng is None else rng
    if isinstance(seeds, str):
        if seeds not in ("auto", "spectral"):
            raise ParameterError(f"unknown seed strategy {seeds!r}")
        seed_list = _spectral_seeds(p, n_B) if seeds == "spectral" or p.M <= 12 else []
        if seeds == "auto":
            seed_list += _seeds(p, n_B, rng, 200)
    elif isinstance(seeds, (int, np.integer)):
        seed_list = _seeds(p, n_B, rng, int(seeds))
    else:
        seed_list = list(seeds)
    found = []
    for s in seed_list:
        s = np.asarray(s, dtype=np.complex128)
        if len(s) != n_B or np.any(s == 0):
            raise ParameterError(f"seed {s} must have {n_B} nonzero entries")
        u, res = _newton(np.log(s), p)
        if not np.isfinite(res) or res > 1e-9:
            continue
        z = np.exp(u)
        if np.any(~np.isfinite(z)) or np.any(np.abs(z) > zmax) or np.any(np.abs(z) < 1 / zmax):
            continue
        rs = BetheRootSet(z, p.M, provenance="solved")
        if rs.min_separation() < 1e-6:
            continue
        if any(_same_set(rs.roots, f.roots) for f in found):
            continue
        rs.residual = float(np.max(np.abs(bae_residual(rs, p))))
        if rs.residual > tol:
            continue
        if validate is not None and not validate(rs):
            continue
        found.append(rs)
        if len(found) >= expected and validate is not None:
            break
    found.sort(key=lambda r: tuple(np.round(np.concatenate([np.abs(r.roots), np.angle(r.roots)]), 10)))
    return BetheSolutions(found, expected)


# ------------------------------------------------------------- Bethe states


def bethe_state(rs, p, return_norm=False, min_norm=1e-10):
    """prod_j B(z_j)|0>, normalized; raises StringCollapseWarning on a vanishing vector."""
    d = 2**p.M
    v = np.zeros(d, dtype=np.complex128)
    v[0] = 1.0
    norm = 1.0
    for zj in rs.roots:
        B = abcd(p, zj)[1].mat
        v = B @ v
        n = np.linalg.norm(v)
        norm *= n
        if n < min_norm * np.linalg.norm(B):
            raise StringCollapseWarning(f"Bethe vector collapses (norm {norm:.2e})")
        v /= n
    return (v, norm) if return_norm else v


def is_eigvec(A, v, tol=1e-8):
    lam = np.vdot(v, A @ v) / np.vdot(v, v)
    return np.linalg.norm(A @ v - lam * v) <= tol * max(1.0, np.linalg.norm(A, 2)), lam


# ------------------------------------------------------- eigenvalue formulas


def _onshell(f, z, rs, h=1e-6):
    """Evaluate f near a removable singularity by symmetric Richardson extrapolation."""
    for zj in rs.roots:
        if abs(z - zj) < 1e-8 * abs(zj):
            d = h * abs(zj)
            a = 0.5 * (f(z + d) + f(z - d))
            b = 0.5 * (f(z + 2 * d) + f(z - 2 * d))
            return (4 * a - b) / 3
    return f(z)


def eig_t(rs, p, z):
    q, lam, nB = p.q, p.lam, rs.n_B

    def f(z):
        ph = np.prod([(z - zm) / (z * q**2 - zm) for zm in p.zeta])
        return lam * q**nB * _pb_ratio(rs, z / q**2, z) + q ** (p.M - nB) / lam * ph * _pb_ratio(rs, z * q**2, z)

    return _onshell(f, z, rs)


def _geometric_sum(term, start, ratio_bound, max_terms=20000, name="series"):
    """Sum term(l) for l >= start until the tail is negligible."""
    if ratio_bound >= 1:
        raise DivergenceError(f"{name} diverges: ratio bound {ratio_bound:.4g} >= 1")
    total = 0j
    small = 0
    for l in range(start, start + max_terms):
        t = term(l)
        total += t
        if abs(t) <= 1e-18 * max(abs(total), 1e-300):
            small += 1
            if small >= 4:
                return total
        else:
            small = 0
    raise DivergenceError(f"{name} did not converge in {max_terms} terms")


def _series_ratio(p, Sz):
    a = abs(p.q)
    return abs(p.lam) ** 2 * abs(p.q ** (-2 * Sz)) * max(a, 1 / a) ** (2 * p.M)


def eig_q_mu(rs, p, mu, w, sqrt_mu=None):
    """Closed-form Q_mu eigenvalue on a Bethe state (sum over Z_N')."""
    if p.Nprime is None:
        raise ParameterError("needs q^N = 1")
    q, lam, Sz = p.q, p.lam, rs.Sz
    sm = np.sqrt(complex(mu)) if sqrt_mu is None else complex(sqrt_mu)
    sq = np.sqrt(q)
    u = w / mu
    tot = 0j
    for k in range(p.Nprime):
        x = u * q ** (-2 * k)
        tot += lam ** (-2 * k) * q ** (2 * k * Sz) * np.prod([x / zm - 1 for zm in p.zeta]) / (rs.pb(x) * rs.pb(x / q**2))
    return (sq * sm) ** (2 * Sz) * rs.pb(w * mu) * rs.pb(u) * tot


def eig_q_trunc(rs, p, r0, r1, z, terms=None):
    """Q_<=(z; r0, r1, r2=1) eigenvalue as a convergent sum over l >= 1."""
    q, lam, Sz = p.q, p.lam, rs.Sz

    def term(l):
        x = z * q ** (2 * l)
        return lam ** (2 * l) * q ** (-2 * l * Sz) * np.prod([x / zm - 1 for zm in p.zeta]) / (rs.pb(x) * rs.pb(x / q**2))

    if terms is None:
        s = _geometric_sum(term, 1, _series_ratio_trunc(p, rs), name="truncated Q eigenvalue")
    else:
        s = sum(term(l) for l in range(1, terms + 1))
    return lam**-2 * q ** (2 * Sz) * complex(r0) ** (-Sz) * rs.pb(z * r1) * rs.pb(z) * s


def _series_ratio_trunc(p, rs):
    # |lambda|^2 |q|^(-2 S^z) times the growth of prod(z q^2l - 1)/P_B P_B
    a = abs(p.q)
    if a >= 1:
        return abs(p.lam) ** 2 * a ** (-2 * rs.Sz) * a ** (2 * p.M - 4 * rs.n_B)
    return abs(p.lam) ** 2 * a ** (-2 * rs.Sz)


def eig_q_osc(rs, p, sign, z, terms=None):
    q, lam, Sz = p.q, p.lam, rs.Sz
    if sign > 0:
        g = lam**2 * q ** (-2 * Sz)
        if abs(1 - g) < 1e-12:
            raise DivergenceError("lambda^2 q^(-2 S^z) = 1: geometric factor diverges")
        return (-1) ** p.M * rs.pb(z) / (1 - g)
    return eig_q_trunc(rs, p, 1.0, 0.0, z, terms)


def eig_fusion(rs, p, n, z, s=None):
    """T^(n)(z) eigenvalue; pass ``s`` to replace S^z by the sector shift at a root of unity."""
    q, lam = p.q, p.lam
    Sz = rs.Sz if s is None else s

    def f(z):
        tot = 0j
        for l in range(1, n + 1):
            x = z * q ** (2 * l)
            num = np.prod([x / zm - 1 for zm in p.zeta])
            # P_B(z) P_B(z q^2n) / (P_B(z q^2l) P_B(z q^(2l-2)))
            ratio = _pb_ratio(rs, z, x) * _pb_ratio(rs, z * q ** (2 * n), x / q**2)
            tot += lam ** (2 * l) * q ** (-2 * l * Sz) * num * ratio
        return lam ** (-n - 1) * q ** ((n + 1) * Sz) * tot

    return f(z)


# ------------------------------------------------------- general conjecture


@dataclass
class EigenWeights:
    """Lambda[k, i] = Lambda^i_kk and r[k, i] = beta_k/alpha_k at w/z_i."""

    Lambda: np.ndarray
    r: np.ndarray
    lweights: list
    bij: np.ndarray = None
    cij: np.ndarray = None
    cij_prime: np.ndarray = None

    def Lam(self, i, k, l):
        """General Lambda^i_kl = delta_l/alpha_k - beta_(l+1) gamma_l/(alpha_(l+1) alpha_k)."""
        lw = self.lweights[i]
        A = lw.dim
        b = lw.beta[l + 1] if l + 1 < A else 0.0
        a1 = lw.alpha[l + 1] if l + 1 < A else 1.0
        return lw.delta[l] / lw.alpha[k] - b * lw.gamma[l] / (a1 * lw.alpha[k])


def eigen_weights(rs, lfactory, w, q=None):
    """Tables of the appendix symbols; ``lfactory(x)`` returns the LWeights at x = w/z_i."""
    lws = [lfactory(w / zi) for zi in rs.roots]
    if not lws:
        return EigenWeights(np.zeros((0, 0)), np.zeros((0, 0)), [])
    A = lws[0].dim
    Lam = np.empty((A, len(lws)), dtype=np.complex128)
    r = np.empty((A, len(lws)), dtype=np.complex128)
    for i, lw in enumerate(lws):
        if np.min(np.abs(lw.alpha)) < 1e-14:
            raise ParameterError("alpha vanishes at w/z_i; perturb w")
        a_next = np.append(lw.alpha[1:], 1.0)
        b_next = np.append(lw.beta[1:], 0.0)
        Lam[:, i] = lw.delta / lw.alpha - b_next * lw.gamma / (lw.alpha * a_next)
        r[:, i] = lw.beta / lw.alpha
    ew = EigenWeights(Lam, r, lws)
    if q is not None:
        n = len(lws)
        ew.bij = np.ones((n, n), dtype=np.complex128)
        ew.cij = np.ones((n, n), dtype=np.complex128)
        ew.cij_prime = np.ones((n, n), dtype=np.complex128)
        for i in range(n):
            for j in range(n):
                if i != j:
                    bw = weights_sixvertex(rs.roots[i] / rs.roots[j], q)
                    ew.bij[i, j], ew.cij[i, j], ew.cij_prime[i, j] = bw.b, bw.c, bw.c_prime
    return ew


def vacuum_q(site_lweights, lam):
    """<0|Q_kk|0> = lambda^(h_k) prod_m alpha_k(w/zeta_m)."""
    h = site_lweights[0].h
    return lam**h * np.prod([lw.alpha for lw in site_lweights], axis=0)


def eig_conjecture_general(rs, vacuumQ, ew):
    if rs.n_B == 0:
        return complex(np.sum(vacuumQ))
    return complex(np.sum(vacuumQ * np.prod(ew.Lambda, axis=1)))


def appendix_identity_residual(ew, k):
    """Relative residual of the two-root scalar cancellation identity at index k."""
    r, Lam = ew.r, ew.Lam
    b12, b21 = ew.bij[0, 1], ew.bij[1, 0]
    t1 = r[k + 1, 0] * r[k, 1] / b12
    t2 = r[k + 1, 1] * r[k, 0] / b21
    t3 = r[k + 1, 0] * r[k, 1] * Lam(0, k - 1, k - 1) / Lam(0, k - 1, k)
    t4 = r[k + 1, 1] * r[k, 0] * Lam(0, k + 1, k + 1) / Lam(0, k, k + 1)
    scale = max(abs(t1), abs(t2), abs(t3), abs(t4))
    return float(abs(t1 + t2 - t3 - t4) / scale)


# ------------------------------------------------ roots from Q eigenvectors


def roots_from_q_spectrum(p, eigvec, qeval, degree, n_B, points=None, tol=1e-8, validate=True):
    """Bethe roots from the zeros of a Q eigenvalue that is proportional to P_B.

    ``qeval(z)`` returns the Q operator at spectral point z.  The eigenvalue
    is sampled on a circle, interpolated, and its n_B smallest-degree roots
    are returned.  For generic q use Q^+ (eigenvalue proportional to P_B).
    """
    from .tensor import PolySamples, circle_points, poly_from_samples

    if n_B == 0:
        return BetheRootSet([], p.M, 0.0, "extracted-from-Q")
    pts = circle_points(degree + 3, 1.0) if points is None else points
    vals = []
    for z in pts:
        Q = qeval(z)
        Qv = Q @ eigvec
        vals.append(np.vdot(eigvec, Qv) / np.vdot(eigvec, eigvec))
    c = poly_from_samples(PolySamples(pts, np.array(vals), degree))
    c = c[: n_B + 1] if np.all(np.abs(c[n_B + 1:]) < 1e-8 * np.max(np.abs(c))) else c
    roots = np.roots(c[::-1])
    rs = BetheRootSet(roots, p.M, provenance="extracted-from-Q")
    rs.residual = float(np.max(np.abs(bae_residual(rs, p))))
    if validate and rs.residual > tol:
        raise ConvergenceError(f"extracted roots violate the Bethe equations ({rs.residual:.2e})", {"roots": roots})
    return rs
