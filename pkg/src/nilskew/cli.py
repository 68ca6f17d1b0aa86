"""Config-driven experiment runner.

Each subcommand reads an optional JSON config (--config), applies flag
overrides, runs the experiment, and emits one table as CSV or JSON.  With
--out the table is written atomically; otherwise it prints to stdout.  Runs
are deterministic for a fixed config, seed, and threads=1.

Exit codes: 0 success (oracle-check: all oracles passed), 2 bad config or
usage, 3 a numeric guard tripped (or an oracle failed), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from fractions import Fraction

from .complexity import _as_fraction, _orbit_matrix, subpoly_trend
from .config import (load_config, parse_alpha, parse_system, rows_payload,
                     write_csv, write_json)
from .dynamics import SkewSystem
from .errors import ConfigError, LabError
from .heisenberg import PhasePoint
from .oracles import run_checks
from .rigidity import (CORRELATION_HEADER, DECAY_HEADER, CharacterObservable,
                       ConstantObservable, ThetaObservable, decay_experiment,
                       mobius_correlation)

CF_HEADER = ("k", "a_k", "p_k", "q_k", "dist")
ORBIT_HEADER = ("j", "t", "x", "y", "z")
ORACLE_HEADER = ("name", "status", "detail")

_THETA_DELTAS = {(0.0, 0.0): 0.0, (1.0, 1.0): 1 + 1j, (1.0, -1.0): 1 - 1j}


def _point(cfg) -> PhasePoint:
    raw = cfg.get("point", [0.0, 0.0, 0.0, 0.0])
    if not (isinstance(raw, (list, tuple)) and len(raw) == 4
            and all(isinstance(v, (int, float)) for v in raw)):
        raise ConfigError("point must be [t, x, y, z]")
    return PhasePoint.make(*map(float, raw))


def _system(cfg) -> SkewSystem:
    if "system" not in cfg:
        raise ConfigError("this experiment needs a 'system' entry")
    return parse_system(cfg["system"])


def parse_observable(obj):
    if obj is None:
        return CharacterObservable(1, 0, 0)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("observable must be an object with a 'kind'")
    kind = obj["kind"]
    rest = {k: v for k, v in obj.items() if k != "kind"}
    if kind == "constant":
        extra = set(rest) - {"value"}
        if extra:
            raise ConfigError(f"unknown constant-observable keys: {sorted(extra)}")
        return ConstantObservable(complex(rest.get("value", 1.0)))
    if kind == "character":
        extra = set(rest) - {"m0", "m1", "m2"}
        if extra:
            raise ConfigError(f"unknown character keys: {sorted(extra)}")
        return CharacterObservable(int(rest.get("m0", 0)),
                                   int(rest.get("m1", 0)),
                                   int(rest.get("m2", 0)))
    if kind == "theta":
        extra = set(rest) - {"m", "m0", "m1", "m2", "r", "delta"}
        if extra:
            raise ConfigError(f"unknown theta-observable keys: {sorted(extra)}")
        delta = rest.get("delta", 0.0)
        if isinstance(delta, (list, tuple)) and len(delta) == 2:
            delta = _THETA_DELTAS.get((float(delta[0]), float(delta[1])))
            if delta is None:
                raise ConfigError("theta delta must be 0, [1,1], or [1,-1]")
        return ThetaObservable(m=int(rest.get("m", 1)),
                               m0=int(rest.get("m0", 0)),
                               m1=int(rest.get("m1", 0)),
                               m2=int(rest.get("m2", 0)),
                               r=Fraction(str(rest.get("r", 0))),
                               delta=delta)
    raise ConfigError(f"unknown observable kind {kind!r}")


# -- subcommand bodies: each returns (header, rows, exit_code) --------------------


def _run_cf(cfg, seed, threads):
    if "alpha" not in cfg:
        raise ConfigError("cf needs an 'alpha' entry")
    alpha = parse_alpha(cfg["alpha"])
    depth = int(cfg.get("depth", 25))
    if depth < 1:
        raise ConfigError("depth must be >= 1")
    qs = alpha.denominators(depth)
    ps = alpha.numerators(depth)
    aq = alpha.quotients(depth)
    rows = []
    for k in range(1, len(qs)):
        rows.append((k, aq[k - 1], ps[k], qs[k], alpha.dist_to_int(qs[k])))
    return CF_HEADER, rows, 0


def _run_orbit(cfg, seed, threads):
    sys_ = _system(cfg)
    p0 = _point(cfg)
    n = int(cfg.get("n", 100))
    if n < 1:
        raise ConfigError("orbit length n must be >= 1")
    which = cfg.get("map", "S")
    base = sys_ if which == "S" else sys_.plus_system() if which == "T1" else None
    if base is None:
        raise ConfigError("map must be 'S' or 'T1'")
    ts, xs, ys, zs = _orbit_matrix(base, [p0.t], [p0.p.rep.x], [p0.p.rep.y],
                                   [p0.p.rep.z], n)
    rows = [(j, float(ts[0, j]), float(xs[0, j]), float(ys[0, j]),
             float(zs[0, j])) for j in range(n)]
    return ORBIT_HEADER, rows, 0


def _run_oracle_check(cfg, seed, threads):
    names = cfg.get("checks")
    results = run_checks(names, seed=seed)
    rows = [(r.name, "PASS" if r.ok else "FAIL", r.detail) for r in results]
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.ok else 'FAIL'}  {r.detail}")
    code = 0 if all(r.ok for r in results) else 3
    return ORACLE_HEADER, rows, code


def _run_rigidity_decay(cfg, seed, threads):
    sys_ = _system(cfg)
    m_indices = None
    if "m_range" in cfg:
        lo, hi = (int(v) for v in cfg["m_range"])
        m_indices = range(lo, hi + 1)
    report = decay_experiment(sys_, m_indices=m_indices,
                              max_rows_per_m=int(cfg.get("max_rows", 8)))
    return report.header, report.csv_rows(), 0


def _run_correlate(cfg, seed, threads):
    sys_ = _system(cfg)
    observable = parse_observable(cfg.get("observable"))
    n_total = int(cfg.get("N", 10000))
    checkpoints = cfg.get("checkpoints")
    if checkpoints is not None:
        checkpoints = [int(c) for c in checkpoints]
    report = mobius_correlation(sys_, observable, _point(cfg), n_total,
                                checkpoints=checkpoints, threads=threads)
    return CORRELATION_HEADER, report.csv_rows(), 0


def _run_complexity(cfg, seed, threads):
    if "system" in cfg:
        sys_ = parse_system(cfg["system"])
        alpha = sys_.alpha
        sups = sys_.sup_data()
    elif "alpha" in cfg:
        alpha = parse_alpha(cfg["alpha"])
        sups = (0.0, 0.0)
    else:
        raise ConfigError("complexity needs a 'system' or 'alpha' entry")
    eps = _as_fraction(cfg.get("epsilon", 1))
    tau = float(cfg.get("tau", 2.0))
    if "ks" in cfg:
        ks = [int(k) for k in cfg["ks"]]
    else:
        lo, hi = (int(v) for v in cfg.get("k_range", [10, 16]))
        ks = list(range(lo, hi + 1))
    L = cfg.get("L")
    if L is None:
        L = int(math.ceil(max(2.0 / float(eps),
                              40.0 * (1.0 + sups[0] + sups[1])) - 1e-12))
    report = subpoly_trend(alpha, ks, tau, eps, int(L))
    return report.header, report.csv_rows(), 0


_RUNNERS = {
    "cf": _run_cf,
    "orbit": _run_orbit,
    "oracle-check": _run_oracle_check,
    "rigidity-decay": _run_rigidity_decay,
    "correlate": _run_correlate,
    "complexity": _run_complexity,
}


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="nilskew",
                                  description="skew-product experiment runner")
    sub = top.add_subparsers(dest="kind", required=True)
    for kind in _RUNNERS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None, help="output artifact path")
        p.add_argument("--format", choices=("csv", "json"), default=None)
    return top


def _emit(header, rows, out, fmt):
    if out:
        if fmt == "json":
            write_json(out, rows_payload(header, rows))
        else:
            write_csv(out, header, rows)
        return
    if fmt == "json":
        print(json.dumps(rows_payload(header, rows), indent=2, sort_keys=True))
    else:
        buf = io.StringIO()
        import csv as _csv

        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        sys.stdout.write(buf.getvalue())


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else {}
        # flags override file fields
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        threads = (args.threads if args.threads is not None
                   else int(cfg.get("threads", 1)))
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        out = args.out if args.out is not None else cfg.get("out")
        fmt = args.format if args.format is not None else cfg.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {fmt!r}")
        header, rows, code = _RUNNERS[args.kind](cfg, seed, threads)
        _emit(header, rows, out, fmt)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LabError as exc:
        print(f"numeric guard: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
