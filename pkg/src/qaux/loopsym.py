"""Root-of-unity structure: loop generators, multiplets, Drinfeld polynomials, root limits."""
from dataclasses import dataclass, field

import numpy as np

from . import bethe as bt
from .operators import fusion_t, q_mu, sector_indices, transfer_t
from .reps import ParameterError, qint
from .tensor import (
    ID2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    ConvergenceError,
    PolynomialError,
    circle_points,
    kron_all,
    total_sz,
)

CLUSTER_TOL = 1e-8
HIGHEST_TOL = 1e-7
STRING_TOL = 1e-6
LIMIT_TOL = 1e-6


class UnstableLimitError(ConvergenceError):
    """Two extrapolations of a q' -> q limit disagree."""


# ------------------------------------------------------------------ coproducts


def _site_images(gen, qprime, zeta):
    """(site operator, left dressing, right dressing) for one generator on C^2."""
    kp = np.diag([qprime, 1 / qprime]).astype(np.complex128)
    km = np.diag([1 / qprime, qprime]).astype(np.complex128)
    if gen == "e1":
        return SIGMA_PLUS, kp, ID2
    if gen == "e0":
        return zeta * SIGMA_MINUS, km, ID2
    if gen == "f1":
        return SIGMA_MINUS, ID2, km
    if gen == "f0":
        return SIGMA_PLUS / zeta, ID2, kp
    raise ParameterError(f"unknown generator {gen!r}")


def coproduct(gen, qprime, zeta):
    """Evaluation image of the iterated coproduct of one Chevalley generator.

    e_i go to sum_m K_i x..x K_i x e_i x 1 x..x 1, f_i to
    sum_m 1 x..x 1 x f_i x K_i^-1 x..x K_i^-1, with site m evaluated at zeta_m.
    """
    M = len(zeta)
    out = 0
    for m in range(M):
        x, left, right = _site_images(gen, qprime, zeta[m])
        out = out + kron_all([left] * m + [x] + [right] * (M - m - 1))
    return out


def coproduct_power(gen, qprime, p, power=None):
    """Delta^(M)(gen^power) on (C^2)^M; ``power`` defaults to N'."""
    power = p.Nprime if power is None else power
    if power is None:
        raise ParameterError("power needed when q is generic")
    return np.linalg.matrix_power(coproduct(gen, qprime, p.zeta), power)


def commensurate(p, Sz, tol=1e-10):
    """Sectors where the loop symmetry is claimed: lam^2 q^(-+2 S^z) = 1."""
    return abs(p.lam**2 * p.q ** (-2 * Sz) - 1) < tol or abs(p.lam**2 * p.q ** (2 * Sz) - 1) < tol


@dataclass
class LoopGenerators:
    E0: np.ndarray
    E1: np.ndarray
    F0: np.ndarray
    F1: np.ndarray
    valid_sectors: list
    disagreement: dict = field(default_factory=dict)

    def as_dict(self):
        return {"E0": self.E0, "E1": self.E1, "F0": self.F0, "F1": self.F1}

    def valid_mask(self, M):
        sz = total_sz(M)
        return np.array([any(abs(s - v) < 1e-9 for v in self.valid_sectors) for s in sz])


def loop_generators(p, eps_schedule=(1e-4, 5e-5)):
    """Divided powers Delta(gen^N')/[N']_q'! in the limit q' -> q.

    Each estimate averages q' = q e^(+-i eps), which removes the odd part of
    the expansion in eps; two such estimates are Richardson-combined in
    eps^2.  Entries are only expected to converge on columns in the valid
    sectors, and the disagreement check is restricted to those.
    """
    if p.Nprime is None:
        raise ParameterError("loop generators need q^N = 1")
    Np = p.Nprime
    sz = total_sz(p.M)
    valid = sorted({float(s) for s in sz if commensurate(p, s)})
    cols = np.array([any(abs(s - v) < 1e-9 for v in valid) for s in sz])
    e1, e2 = eps_schedule[:2]
    out, dis = {}, {}
    for gen in ("e0", "e1", "f0", "f1"):
        est = []
        for e in (e1, e2):
            acc = 0
            for sgn in (1, -1):
                qp = p.q * np.exp(1j * sgn * e)
                fact = np.prod([qint(k, qp) for k in range(1, Np + 1)])
                acc = acc + coproduct_power(gen, qp, p, Np) / fact / 2
            est.append(acc)
        lim = (e1**2 * est[1] - e2**2 * est[0]) / (e1**2 - e2**2)
        if cols.any():
            a, b = lim[:, cols], est[1][:, cols]
            d = float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300))
        else:
            d = 0.0
        dis[gen] = d
        if d > LIMIT_TOL:
            raise UnstableLimitError(f"{gen}: extrapolations disagree by {d:.2e}", {"disagreement": d})
        out[gen] = lim
    return LoopGenerators(out["e0"], out["e1"], out["f0"], out["f1"], valid, dis)


def symmetry_residual(gens, op, M):
    """Max relative [X, op] over generators X, restricted to valid columns."""
    mask = gens.valid_mask(M)
    worst = 0.0
    for X in gens.as_dict().values():
        c = (X @ op - op @ X)[:, mask]
        scale = max(np.linalg.norm((X @ op)[:, mask]), np.linalg.norm((op @ X)[:, mask]), 1e-300)
        worst = max(worst, float(np.linalg.norm(c) / scale))
    return worst


# ------------------------------------------------------------------ multiplets


@dataclass
class MultipletReport:
    class_id: int
    spins: list
    dims: list
    eigenvalue: complex
    highest: float
    lowest: float
    generator_residuals: dict = field(default_factory=dict)
    flagged: bool = False
    commensurate: bool = False
    mu_pattern: dict = field(default_factory=dict)

    def spin_steps_ok(self, Nprime):
        s = np.array(self.spins)
        return bool(np.all(np.abs(np.round((s - s[0]) / Nprime) * Nprime - (s - s[0])) < 1e-9))


def _rel_action(X, u):
    return float(np.linalg.norm(X @ u)) / max(float(np.linalg.norm(X)), 1e-300)


def _sector_eigs(T, idx):
    w, V = np.linalg.eig(T[np.ix_(idx, idx)])
    full = np.zeros((T.shape[0], len(w)), dtype=np.complex128)
    full[idx] = V
    return w, full / np.linalg.norm(full, axis=0)


def multiplet_decompose(p, z_probe=0.43 + 0.71j, z_check=None, gens=None, mu_values=None, tol=CLUSTER_TOL):
    """Group T eigenvalues across S^z sectors into degenerate classes.

    Members are (S^z, eigenvector) pairs whose T(z_probe) eigenvalues agree to
    ``tol`` relative; agreement is confirmed at ``z_check`` through the
    Rayleigh quotient of each eigenvector.  With ``gens``, the highest member
    is tested against the S^z-raising generators E1, F0 and the lowest one
    against the lowering generators E0, F1.  With
    ``mu_values`` the Q_mu eigenvalue ratios between adjacent members are
    fitted to a power of mu (a diagnostic only).
    """
    z_check = 1.13 - 0.29j if z_check is None else z_check
    T1 = transfer_t(p, z_probe).mat
    T2 = transfer_t(p, z_check).mat
    sz = total_sz(p.M)
    members = []
    for S in sorted(set(sz.tolist()), reverse=True):
        idx = sector_indices(p.M, S)
        w, V = _sector_eigs(T1, idx)
        for j in range(len(w)):
            v = V[:, j]
            w2 = np.vdot(v, T2 @ v)
            members.append((float(S), complex(w[j]), complex(w2), v))
    used = [False] * len(members)
    reports = []
    for i, (S, a, b, v) in enumerate(members):
        if used[i]:
            continue
        grp = [i]
        used[i] = True
        for j in range(i + 1, len(members)):
            if used[j]:
                continue
            a2, b2 = members[j][1], members[j][2]
            if abs(a - a2) <= tol * max(abs(a), 1) and abs(b - b2) <= tol * max(abs(b), 1):
                grp.append(j)
                used[j] = True
        spins = sorted({members[k][0] for k in grp}, reverse=True)
        dims = [sum(1 for k in grp if members[k][0] == s) for s in spins]
        # near misses at the first probe that fail at the second one make the class ambiguous
        flagged = any(
            not used_k and abs(a - members[k][1]) <= 1e3 * tol * max(abs(a), 1)
            for k, used_k in enumerate(used) if k not in grp
        )
        comm = all(commensurate(p, x) for x in spins)
        rep = MultipletReport(len(reports), spins, dims, a, spins[0], spins[-1], flagged=flagged, commensurate=comm)
        if gens is not None:
            top = [members[k][3] for k in grp if members[k][0] == spins[0]]
            bot = [members[k][3] for k in grp if members[k][0] == spins[-1]]
            rep.generator_residuals = {
                "raising_on_highest": max(_rel_action(X, u) for X in (gens.E1, gens.F0) for u in top),
                "lowering_on_lowest": max(_rel_action(X, u) for X in (gens.E0, gens.F1) for u in bot),
            }
        if mu_values is not None and len(spins) > 1 and not flagged:
            rep.mu_pattern = _mu_pattern(p, [members[k] for k in grp], spins, mu_values, z_probe)
        reports.append(rep)
    return reports


def _mu_pattern(p, members, spins, mu_values, z):
    """Fitted exponent a in Q-ratio(adjacent members) ~ mu^a."""
    m1, m2 = mu_values[:2]
    vecs = {s: next(m[3] for m in members if m[0] == s) for s in spins}
    out = {}
    for s_hi, s_lo in zip(spins, spins[1:]):
        r = []
        for mu in (m1, m2):
            Q = q_mu(p, mu, z / mu).mat
            r.append(np.vdot(vecs[s_lo], Q @ vecs[s_lo]) / np.vdot(vecs[s_hi], Q @ vecs[s_hi]))
        out[f"{s_hi}->{s_lo}"] = complex(np.log(r[0] / r[1]) / np.log(m1 / m2))
    return out


# ------------------------------------------------------------ Drinfeld polynomial


@dataclass
class DrinfeldData:
    ps_coeffs: np.ndarray
    a_roots: np.ndarray
    n_S: int
    n0: int = 0
    n_inf: int = 0
    n_bar_inf: int = 0
    s: float = None
    norm: complex = 1.0
    off_power: float = 0.0
    fit_deviation: float = 0.0
    residues: float = 0.0
    shift_ratio: complex = 1.0


def ps_sum(rs, p, z):
    """sum_k lam^-2k q^(2kS) prod(zq^-2k/zeta - 1)/(P_B(zq^-2k)P_B(zq^-2k-2))."""
    q, lam, S = p.q, p.lam, rs.Sz
    tot = 0j
    for k in range(p.Nprime):
        x = z * q ** (-2 * k)
        tot += lam ** (-2 * k) * q ** (2 * k * S) * np.prod([x / zm - 1 for zm in p.zeta]) / (rs.pb(x) * rs.pb(x / q**2))
    return tot


def _residue(f, c, r, n=64):
    t = circle_points(n, r, 0.0)
    vals = np.array([f(c + x) for x in t])
    return abs(np.mean(vals * t)) / (r * max(np.max(np.abs(vals)), 1e-300))


def drinfeld_poly(rs, p, n0=0, n_inf=0, s=None, radius=None, rtol=1e-7):
    """P_S from the k-sum: coefficients in y = z^N', roots, and the checks.

    The sum is sampled on 2(d+1) circle points (d = M - 2 n_B), fitted, and
    normalized by its lowest nonvanishing coefficient; that power of z is
    recorded as ``n_bar_inf``.  ``residues`` is the worst normalized contour
    residue around the candidate poles z_j q^-2k and z_j q^(-2k-2).
    """
    if p.Nprime is None:
        raise ParameterError("drinfeld_poly needs q^N = 1")
    Np = p.Nprime
    d = p.M - 2 * rs.n_B
    if d < 0:
        raise ParameterError("n_B exceeds M/2")
    scale = np.max(np.abs(rs.roots)) if rs.n_B else 1.0
    radius = 1.3 * max(scale, 1.0) if radius is None else radius
    pts = circle_points(2 * (d + 1), radius, 0.123)
    vals = np.array([ps_sum(rs, p, z) for z in pts])
    V = np.vander(pts / radius, d + 1, increasing=True)
    c, *_ = np.linalg.lstsq(V, vals, rcond=None)
    dev = float(np.max(np.abs(V @ c - vals)) / max(np.max(np.abs(vals)), 1e-300))
    if dev > rtol:
        raise PolynomialError(f"k-sum is not a polynomial of degree {d} (deviation {dev:.2e})", dev)
    cmax = max(np.max(np.abs(c)), 1e-300)
    c = c / radius ** np.arange(d + 1)
    mags = np.abs(c) * radius ** np.arange(d + 1) / cmax
    nz = np.flatnonzero(mags > 1e-8)
    if len(nz) == 0:
        raise PolynomialError("k-sum vanishes identically", 0.0)
    low = int(nz[0])
    off = float(max([mags[k] for k in range(d + 1) if (k - low) % Np], default=0.0))
    norm = c[low]
    ps = c[low::Np] / norm
    top = int(np.flatnonzero(np.abs(ps) * radius ** (Np * np.arange(len(ps))) / np.max(np.abs(ps)) > 1e-8)[-1]) if len(ps) else 0
    ps = ps[: top + 1]
    a_roots = np.roots(ps[::-1]) if top > 0 else np.array([], dtype=np.complex128)

    res = 0.0
    if rs.n_B:
        centers = np.concatenate([rs.roots * p.q ** (-2 * k) for k in range(Np)])
        dist = np.abs(centers[:, None] - centers[None, :])
        dist = dist[dist > 1e-10 * np.max(np.abs(centers))]
        sep = float(dist.min()) if dist.size else 1.0
        for zj in rs.roots:
            for k in range(Np):
                for cpole in (zj * p.q ** (-2 * k), zj * p.q ** (-2 * k - 2)):
                    res = max(res, _residue(lambda z: ps_sum(rs, p, z), cpole, 0.2 * min(sep, abs(cpole))))
    zt = 0.77 + 0.31j
    ratio = complex(ps_sum(rs, p, zt * p.q**2) / ps_sum(rs, p, zt))
    return DrinfeldData(np.asarray(ps), a_roots, top, n0, n_inf, low, s, complex(norm), off, dev, res, ratio)


def ps_from_q_spectrum(p, rs, v, radius=1.3):
    """P_S read off the Q_(mu=1) spectrum on the eigenvector ``v``.

    The eigenvalue is q^S P_B(z)^2 times the k-sum; the quotient is fitted as
    a polynomial in z and normalized like drinfeld_poly.  Returns the
    coefficients in y = z^N'.
    """
    d = p.M - 2 * rs.n_B
    pts = circle_points(2 * (d + 1), radius, 0.321)
    vals = np.array([np.vdot(v, q_mu(p, 1.0, z).mat @ v) / np.vdot(v, v) for z in pts])
    vals = vals / (p.q**rs.Sz * rs.pb(pts) ** 2)
    V = np.vander(pts / radius, d + 1, increasing=True)
    c, *_ = np.linalg.lstsq(V, vals, rcond=None)
    c = c / radius ** np.arange(d + 1)
    low = int(np.flatnonzero(np.abs(c) > 1e-8 * np.max(np.abs(c)))[0])
    return c[low :: p.Nprime] / c[low]


# ------------------------------------------------------------ root trajectories


@dataclass
class RootTrajectory:
    q_samples: list
    root_tracks: np.ndarray
    classification: list
    strings: list = field(default_factory=list)
    n0: int = 0
    n_inf: int = 0
    s: float = None
    lost: bool = False
    continuous: bool = True
    residuals: list = field(default_factory=list)

    def limit(self, values, q_target):
        """Linear extrapolation of ``values`` (one per sample) to q' = q_target."""
        t = np.abs(np.asarray(self.q_samples[-2:]) - q_target)
        v = np.asarray(values[-2:])
        return v[1] + (v[1] - v[0]) * t[1] / (t[0] - t[1])


def classify_endpoint(roots, q, Nprime, small=1e-6, large=1e6, tol=STRING_TOL):
    """Label roots 'zero', 'infinity', 'string:<id>' or 'finite'."""
    roots = np.asarray(roots, dtype=np.complex128)
    labels = ["finite"] * len(roots)
    for i, z in enumerate(roots):
        if abs(z) < small:
            labels[i] = "zero"
        elif abs(z) > large:
            labels[i] = "infinity"
    strings = []
    free = [i for i in range(len(roots)) if labels[i] == "finite"]
    for i in list(free):
        if labels[i] != "finite":
            continue
        members = [i]
        for ell in range(1, Nprime):
            target = roots[i] * q ** (2 * ell)
            hit = [j for j in free if labels[j] == "finite" and j not in members and abs(roots[j] - target) <= tol * abs(target)]
            if not hit:
                break
            members.append(hit[0])
        if len(members) == Nprime:
            for j in members:
                labels[j] = f"string:{len(strings)}"
            strings.append(members)
    return labels, strings


def classify_limit_roots(p_target, path, start):
    """Continue one Bethe solution along q' in ``path`` towards p_target.q.

    ``start`` are the roots at path[0].  Each sample is solved by damped
    Newton in log z seeded by the previous one; a failed solve ends the track
    with ``lost`` set.  Jumps larger than ten times the previous one clear
    the ``continuous`` flag.
    """
    if p_target.Nprime is None:
        raise ParameterError("target q must be a root of unity")
    start = np.asarray(start, dtype=np.complex128)
    n_B = len(start)
    u = np.log(start)
    tracks, qs, resid = [], [], []
    lost, cont, prev_jump = False, True, None
    for qp in path:
        pq = p_target.replace(q=qp)
        if n_B:
            u_new, r = bt._newton(u, pq)
            if not np.isfinite(r) or r > 1e-9:
                lost = True
                break
            jump = float(np.max(np.abs(u_new - u)))
            if prev_jump is not None and prev_jump > 1e-12 and jump > 10 * prev_jump + 1e-12:
                cont = False
            prev_jump = jump if tracks else None
            u = u_new
            resid.append(float(r))
        tracks.append(np.exp(u))
        qs.append(complex(qp))
    end = tracks[-1] if tracks else np.array([])
    labels, strings = classify_endpoint(end, p_target.q, p_target.Nprime)
    n0 = labels.count("zero")
    n_inf = labels.count("infinity")
    Sz = p_target.M / 2 - n_B
    return RootTrajectory(qs, np.array(tracks).reshape(len(tracks), n_B), labels, strings, n0, n_inf,
                          2 * n0 + Sz, lost, cont, resid)


def track_all(p_target, n_B, path, seeds=200, rng=None):
    """classify_limit_roots for every solution found at the start of ``path``."""
    p0 = p_target.replace(q=path[0])
    if n_B == 0:
        return [classify_limit_roots(p_target, path, [])]
    sols = bt.solve_bae(p0, n_B, seeds=seeds, rng=rng)
    return [classify_limit_roots(p_target, path, rs.roots) for rs in sols]


def default_path(q, n=80, dmax=0.3, dmin=1e-9):
    """q' = q e^(i d) with d log-spaced from dmax down to dmin."""
    return [complex(q * np.exp(1j * d)) for d in np.geomspace(dmax, dmin, n)]


def fusion_symmetry_residual(gens, p, n, z):
    return symmetry_residual(gens, fusion_t(p, n, z, "recursion").mat, p.M)


def highest_weight_states(p, sols, gens, tol=HIGHEST_TOL):
    """Commensurate-sector Bethe states (from ``sols``) annihilated by E1 and F0."""
    out = []
    for rs in sols:
        if not commensurate(p, rs.Sz):
            continue
        try:
            v = bt.bethe_state(rs, p)
        except bt.StringCollapseWarning:
            continue
        if max(_rel_action(gens.E1, v), _rel_action(gens.F0, v)) < tol:
            out.append((rs, v))
    return out

