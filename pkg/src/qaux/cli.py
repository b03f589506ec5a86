"""Command-line entry point: qaux {spectrum,bethe,verify,rootlimit} --config FILE."""
import argparse
import csv
import dataclasses
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import bethe as bt
from . import loopsym as ls
from . import relations as rel
from .operators import (
    check_qconv,
    fusion_t,
    q_mu,
    q_trunc,
    spin_sector_project,
    transfer_t,
)
from .reps import ParameterError, make_params, parse_complex
from .tensor import QauxError, total_sz

SCHEMA_VERSION = 1
PRECISION = "IEEE-754 binary64, complex128"

_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        {"type": "object", "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
         "additionalProperties": False, "minProperties": 1},
        {"type": "object", "properties": {"phase_over_pi": {"type": "number"}, "modulus": {"type": "number"}},
         "required": ["phase_over_pi"], "additionalProperties": False},
        {"type": "object", "required": ["root_of_unity"], "additionalProperties": False,
         "properties": {"root_of_unity": {
             "type": "object", "required": ["N", "k"], "additionalProperties": False,
             "properties": {"N": {"type": "integer", "minimum": 3}, "k": {"type": "integer"}}}}},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {
            "type": "object",
            "required": ["M", "q"],
            "additionalProperties": False,
            "properties": {
                "M": {"type": "integer", "minimum": 1, "maximum": 10},
                "q": _complex,
                "lambda": _complex,
                "zeta": {"oneOf": [{"const": "homogeneous"}, {"type": "array", "items": _complex}]},
            },
        },
        "suite": {"type": "string"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "K": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "points": {"oneOf": [{"type": "integer", "minimum": 1}, {"type": "array", "items": _complex}]},
        "n_B": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "fusion_max": {"type": "integer", "minimum": 1},
        "mu": _complex,
        "w": _complex,
        "r0": _complex,
        "r1": _complex,
        "bethe_seeds": {"type": "integer", "minimum": 1},
        "negative_control": {"type": "boolean"},
        "rootlimit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_B": {"type": "integer", "minimum": 0},
                "steps": {"type": "integer", "minimum": 2},
                "dmax": {"type": "number", "exclusiveMinimum": 0},
                "dmin": {"type": "number", "exclusiveMinimum": 0},
                "start": {"type": "array", "items": _complex},
            },
        },
    },
}

RELATIONS = ("commutation", "tq_root", "tq_generic", "wronskian", "qfusion", "fusion_recursion",
             "truncation", "tnq", "spin_reversal", "yba_q")
ROOT_ONLY = {"tq_root", "truncation", "tnq", "yba_q"}
GENERIC_ONLY = {"tq_generic", "wronskian", "qfusion"}
NEGATIVE = {"wronskian", "qfusion"}


class UsageError(QauxError):
    pass


# ---------------------------------------------------------------- serialization


def to_jsonable(x):
    """Plain JSON data; complex numbers become {"re", "im"}."""
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        d = {f.name: to_jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)}
        if isinstance(x, rel.RelationReport):
            d["passed"] = x.passed
        return d
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [to_jsonable(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def dumps(obj):
    # float repr is the shortest string that round-trips, at most 17 significant digits
    return json.dumps(to_jsonable(obj), indent=1, sort_keys=True, allow_nan=True) + "\n"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _cx_cols(z):
    return [float(np.real(z)), float(np.imag(z))]


# ---------------------------------------------------------------- configuration


def load_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"config schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    return cfg


def model_from(cfg):
    m = cfg["model"]
    return make_params(m["M"], m["q"], m.get("lambda", 1.0), m.get("zeta", "homogeneous"))


def _points(cfg, p, rng):
    pts = cfg.get("points", 5)
    if isinstance(pts, int):
        return rel.sample_points(p, pts, rng)
    return [parse_complex(z) for z in pts]


def _sort_eigs(w):
    w = np.asarray(w)
    order = np.lexsort((np.round(w.imag, 10), np.round(w.real, 10)))
    return w[order]


def _tol(cfg, name, scale):
    return cfg.get("tolerances", {}).get(name, rel.TOL.get(name, 1e-9)) * scale


# ------------------------------------------------------------------- commands


def cmd_spectrum(cfg, opts):
    p = model_from(cfg)
    rng = np.random.default_rng(opts.seed)
    pts = _points(cfg, p, rng)
    sectors = sorted(set(total_sz(p.M).tolist()), reverse=True)
    rows = []

    def add(family, z, mat):
        for S in sectors:
            for i, e in enumerate(_sort_eigs(np.linalg.eigvals(spin_sector_project(mat, S, p.M)))):
                rows.append([family, *_cx_cols(z), S, i, *_cx_cols(e)])

    for z in pts:
        add("T", z, transfer_t(p, z).mat)
        for n in range(2, cfg.get("fusion_max", 3) + 1):
            method = "direct" if p.Nprime is None or n <= p.Nprime else "recursion"
            add(f"T{n}", z, fusion_t(p, n, z, method).mat)
        if p.Nprime is not None:
            add("Q_mu", z, q_mu(p, parse_complex(cfg.get("mu", 1.0)), z).mat)
        else:
            check_qconv(p)
            add("Q_trunc", z, q_trunc(p, parse_complex(cfg.get("r0", 1.0)), parse_complex(cfg.get("r1", 1.3)), z,
                                      cfg.get("K", 40)).mat)
    dims = {str(S): int(np.sum(np.isclose(total_sz(p.M), S))) for S in sectors}
    header = ["family", "z_re", "z_im", "Sz", "index", "re", "im"]
    return {"tables": {"spectrum": {"header": header, "rows": rows}}, "sector_dims": dims, "checks": []}


def cmd_bethe(cfg, opts):
    p = model_from(cfg)
    rng = np.random.default_rng(opts.seed)
    pts = _points(cfg, p, rng)
    nbs = cfg.get("n_B", list(range(p.M // 2 + 1)))
    rows, checks, counts = [], [], {}
    tol = _tol(cfg, "bethe_state", opts.tolerance_scale) if "bethe_state" in cfg.get("tolerances", {}) else 1e-8 * opts.tolerance_scale
    for nB in nbs:
        if nB > p.M:
            counts[str(nB)] = {"found": 0, "expected": 0}
            continue
        sols = bt.solve_bae(p, nB, seeds=cfg.get("bethe_seeds", "auto"), rng=np.random.default_rng([opts.seed, nB]),
                            validate=bt.state_validator(p) if p.Nprime is not None else None)
        counts[str(nB)] = {"found": len(sols), "expected": sols.expected, "complete": sols.complete}
        for sid, rs in enumerate(sols):
            for j, zj in enumerate(rs.roots):
                rows.append([nB, sid, j, *_cx_cols(zj)])
            v = bt.bethe_state(rs, p)
            worst = 0.0
            for z in pts:
                Tv = transfer_t(p, z).mat @ v
                e = bt.eig_t(rs, p, z)
                worst = max(worst, float(np.linalg.norm(Tv - e * v) / max(np.linalg.norm(Tv), abs(e))))
            checks.append(rel.RelationReport("bethe_state", {**rel.param_record(p), "n_B": nB, "solution": sid},
                                             None, worst, pts, tol))
    header = ["n_B", "solution", "index", "re", "im"]
    return {"tables": {"roots": {"header": header, "rows": rows}}, "counts": counts, "checks": checks}


def _relation_jobs(cfg, p, ids, pts, scale, negative):
    K = cfg.get("K", 40)
    r0 = parse_complex(cfg.get("r0", 0.8 + 0.2j))
    r1 = parse_complex(cfg.get("r1", 1.3))
    mu = parse_complex(cfg.get("mu", 0.7 + 0.2j))
    w = parse_complex(cfg.get("w", 0.5 + 0.3j))
    seeds = cfg.get("bethe_seeds", "auto")
    rng = np.random.default_rng([cfg.get("seed", 0), 7])

    sols = {}

    def roots(nB):
        if nB not in sols:
            val = bt.state_validator(p) if p.Nprime is not None else None
            sols[nB] = list(bt.solve_bae(p, nB, seeds=seeds, rng=np.random.default_rng([cfg.get("seed", 0), nB]), validate=val))
        return sols[nB]

    jobs = []
    for rid in ids:
        if rid == "commutation":
            pairs = [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]

            def job(pairs=pairs):
                details = {}
                try:
                    check_qconv(p)
                    res = rel.commutation_suite(p, pairs, K)
                except QauxError as exc:
                    # outside the convergence bound only [T, T] is meaningful
                    tt = max(rel.commutator_residual(transfer_t(p, a).mat, transfer_t(p, b).mat) for a, b in pairs)
                    res, details = {"TT": tt}, {"skipped_TQ": str(exc)}
                return rel.RelationReport("commutation", rel.param_record(p), max(res.values()), None,
                                          [z for pr in pairs for z in pr], 1e-10 * scale, {**res, **details})
            jobs.append(job)
        elif rid == "tq_root":
            jobs.append(lambda: rel.check_tq_root(p, mu, pts, roots(1) + roots(2), operator=p.M <= 5))
        elif rid == "tq_generic":
            jobs.append(lambda: rel.check_tq_generic(p, r0, r1, pts, roots(1) + roots(2), operator=p.M <= 4, K=K))
        elif rid in ("wronskian", "qfusion"):
            def job(rid=rid):
                reps = []
                for nB in range(0, min(2, p.M // 2) + 1):
                    for rs in roots(nB):
                        if rid == "wronskian":
                            reps.append(rel.check_wronskian(p, rs, pts, operator=(nB == 0 and p.M <= 4 and not negative), K=K,
                                                           Sz=rs.Sz + 1 if negative else None))
                        else:
                            for n in range(1, 6):
                                reps.append(rel.check_qfusion(p, rs, n, pts, Sz=rs.Sz + 1 if negative else None))
                return _merge(rid, p, reps, pts)
            jobs.append(job)
        elif rid == "fusion_recursion":
            def job():
                reps = [rel.check_fusion_recursion(p, n, pts, roots(1), operator=p.M <= 4,
                                                   method="recursion" if p.Nprime else "direct") for n in range(2, 6)]
                return _merge("fusion_recursion", p, reps, pts)
            jobs.append(job)
        elif rid == "truncation":
            jobs.append(lambda: rel.check_truncation(p, pts, operator=p.M <= 5))
        elif rid == "tnq":
            jobs.append(lambda: rel.check_tnq(p, pts))
        elif rid == "spin_reversal":
            if p.Nprime is None:
                jobs.append(lambda: rel.check_spin_reversal(p, r0, r1, pts, K))
            else:
                def job():
                    if abs(p.lam - 1) > 1e-12 or any(abs(z - p.zeta[0]) > 1e-12 for z in p.zeta):
                        raise ParameterError("lowest-weight formula is tested at lambda = 1, homogeneous chain")
                    return rel.check_spin_reversal(p, r0, r1, pts, lowest_weight=roots(1))
                jobs.append(job)
        elif rid == "yba_q":
            jobs.append(lambda: rel.check_yba_q(p, mu, w, pts[:2]))
    return jobs


def _merge(rid, p, reps, pts):
    ops = [r.operator_residual for r in reps if r.operator_residual is not None]
    evs = [r.eigenvalue_residual for r in reps if r.eigenvalue_residual is not None]
    out = rel.RelationReport(rid, rel.param_record(p), max(ops) if ops else None, max(evs) if evs else None, pts,
                             reps[0].tolerance if reps else 0.0)
    out.details = {"cases": len(reps)}
    return out


def cmd_verify(cfg, opts):
    p = model_from(cfg)
    rng = np.random.default_rng(opts.seed)
    pts = _points(cfg, p, rng)
    suite = opts.suite or cfg.get("suite", "all")
    negative = bool(cfg.get("negative_control", False))
    if suite == "all":
        ids = [r for r in RELATIONS if (r not in ROOT_ONLY or p.Nprime) and (r not in GENERIC_ONLY or not p.Nprime)]
        if negative:
            ids = [r for r in ids if r in NEGATIVE]
    else:
        ids = [s.strip() for s in suite.split(",") if s.strip()]
        unknown = [r for r in ids if r not in RELATIONS]
        if unknown:
            raise UsageError(f"unknown relation id(s): {', '.join(unknown)}; known: {', '.join(RELATIONS)}")
        if negative and any(r not in NEGATIVE for r in ids):
            raise UsageError(f"negative control is available for: {', '.join(sorted(NEGATIVE))}")
    jobs = _relation_jobs(cfg, p, ids, pts, opts.tolerance_scale, negative)

    def run(job):
        try:
            return job()
        except QauxError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, opts.threads)) as pool:
        results = list(pool.map(run, jobs))
    checks = []
    for rid, r in zip(ids, results):
        if isinstance(r, Exception):
            r = rel.RelationReport(rid, rel.param_record(p), None, float("nan"), pts, 0.0,
                                   {"error": f"{type(r).__name__}: {r}"})
        r.tolerance = _tol(cfg, rid, 1.0) * opts.tolerance_scale if rid in rel.TOL else r.tolerance
        if negative:
            r.details["negative_control"] = True
            r.details["expected"] = "fail"
        checks.append(r)
    return {"checks": checks, "relations": ids, "negative_control": negative}


def cmd_rootlimit(cfg, opts):
    p = model_from(cfg)
    if p.Nprime is None:
        raise UsageError("rootlimit needs a root-of-unity q")
    rl = cfg.get("rootlimit", {})
    nB = rl.get("n_B", 1)
    path = [complex(p.q * np.exp(1j * d)) for d in np.geomspace(rl.get("dmax", 0.3), rl.get("dmin", 1e-9), rl.get("steps", 80))]
    if nB > p.M:
        trajs = []
    elif "start" in rl:
        trajs = [ls.classify_limit_roots(p, path, [parse_complex(z) for z in rl["start"]])]
    else:
        trajs = ls.track_all(p, nB, path, seeds=cfg.get("bethe_seeds", 100), rng=np.random.default_rng(opts.seed))
    rows = []
    for t, tr in enumerate(trajs):
        for j, lab in enumerate(tr.classification):
            rows.append([t, j, lab, *_cx_cols(tr.root_tracks[-1][j])])
    summary = [{"n0": tr.n0, "n_inf": tr.n_inf, "s": tr.s, "strings": tr.strings, "lost": tr.lost,
                "continuous": tr.continuous, "classification": tr.classification} for tr in trajs]
    gens = ls.loop_generators(p)
    drinfeld = []
    sols = bt.solve_bae(p, min(nB, p.M // 2), seeds=cfg.get("bethe_seeds", "auto"),
                        rng=np.random.default_rng([opts.seed, 1]), validate=bt.state_validator(p))
    for rs, _ in ls.highest_weight_states(p, sols, gens):
        try:
            drinfeld.append(ls.drinfeld_poly(rs, p))
        except QauxError as exc:
            drinfeld.append({"roots": rs.roots, "error": str(exc)})
    multiplets = ls.multiplet_decompose(p, gens=gens)
    checks = []
    for d in drinfeld:
        if isinstance(d, ls.DrinfeldData):
            checks.append(rel.RelationReport("drinfeld_poly", rel.param_record(p), None,
                                             max(d.off_power, d.residues, d.fit_deviation), [], 1e-8 * opts.tolerance_scale))
    return {"tables": {"limit_roots": {"header": ["trajectory", "root", "class", "re", "im"], "rows": rows}},
            "trajectories": summary, "drinfeld": drinfeld,
            "multiplets": [m for m in multiplets if len(m.spins) > 1], "checks": checks}


COMMANDS = {"spectrum": cmd_spectrum, "bethe": cmd_bethe, "verify": cmd_verify, "rootlimit": cmd_rootlimit}


# ----------------------------------------------------------------------- main


def build_parser():
    ap = argparse.ArgumentParser(prog="qaux", description="Transfer matrices, Q-operators and functional relations.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--suite", help="relation ids for verify: 'all' or a comma list")
    ap.add_argument("--out", help="output directory (default: config 'out' or ./qaux-out)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--tolerance-scale", type=float, default=1.0)
    return ap


def run(argv=None):
    """Execute one command; returns (exit code, report dict or None)."""
    ap = build_parser()
    try:
        opts = ap.parse_args(argv)
    except SystemExit as exc:
        return (0 if exc.code == 0 else 2), None
    try:
        cfg = load_config(opts.config)
        if opts.seed is None:
            opts.seed = cfg.get("seed", 0)
        if opts.threads < 1 or opts.tolerance_scale <= 0:
            raise UsageError("--threads must be >= 1 and --tolerance-scale > 0")
        t0 = time.perf_counter()
        body = COMMANDS[opts.command](cfg, opts)
        elapsed = time.perf_counter() - t0
    except (UsageError, ParameterError) as exc:
        print(f"qaux: error: {exc}", file=sys.stderr)
        return 2, None
    checks = body.get("checks", [])
    if body.get("negative_control"):
        ok = all(not c.passed and "error" not in c.details for c in checks)
    else:
        ok = all(c.passed for c in checks)
    report = {
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "precision": PRECISION,
        "command": opts.command,
        "config": cfg,
        "seed": opts.seed,
        "tolerance_scale": opts.tolerance_scale,
        "all_passed": ok,
        **body,
    }
    out = Path(opts.out or cfg.get("out", "qaux-out"))
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(report))
    # wall time lives outside the report so reports stay bit-identical
    (out / "timing.json").write_text(json.dumps({"seconds": elapsed}) + "\n")
    for name, tab in body.get("tables", {}).items():
        write_csv(out / f"{name}.csv", tab["header"], tab["rows"])
    if checks:
        write_csv(out / "checks.csv", ["relation", "operator_residual", "eigenvalue_residual", "tolerance", "passed"],
                  [[c.relation, c.operator_residual, c.eigenvalue_residual, c.tolerance, c.passed] for c in checks])
    for c in checks:
        print(f"{c.relation:18s} op={c.operator_residual!s:24s} ev={c.eigenvalue_residual!s:24s} "
              f"{'PASS' if c.passed else 'FAIL'}")
    return (0 if ok else 1), report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
