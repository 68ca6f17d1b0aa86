"""Experiment config grammar and atomic artifact writers.

Rotation numbers arrive as strings (`rational:p/q`, `surd:(a+b*sqrt(d))/c`,
`cf:[a1,a2,...]` with an optional `repeat:[...]` tail), driving functions as
JSON objects (`{"trig": {"m": [re, im], ...}, "mean": v, "class": {"r": ...,
"C": ...}}`), and a system bundles alpha, phi, eta, psi with the optional
knobs B, theta, K, depth.  Files are written to a temp path in the target
directory and renamed into place, so readers never observe partial output.
"""

from __future__ import annotations

import csv
import json
import os
import re
import tempfile

from .dynamics import SkewSystem, make_system
from .errors import ConfigError
from .numtheory import RotationNumber
from .periodic import PeriodicFn

DEFAULT_MAX_FREQ = 64

_RATIONAL = re.compile(r"^rational:\s*(-?\d+)\s*/\s*(\d+)\s*$")
_SURD = re.compile(r"^surd:\s*\(\s*(-?\d+)\s*([+-])\s*(\d+)\s*\*\s*"
                   r"sqrt\(\s*(\d+)\s*\)\s*\)\s*/\s*(-?\d+)\s*$")
_CF = re.compile(r"^cf:\s*\[([\d,\s]*)\]\s*(?:repeat:\s*\[([\d,\s]*)\]\s*)?$")


def parse_alpha(text) -> RotationNumber:
    if not isinstance(text, str):
        raise ConfigError(f"rotation-number spec must be a string, got "
                          f"{type(text).__name__}")
    s = text.strip()
    m = _RATIONAL.match(s)
    if m:
        return RotationNumber.from_rational(int(m.group(1)), int(m.group(2)))
    m = _SURD.match(s)
    if m:
        a, sign, b, d, c = m.groups()
        bv = int(b) if sign == "+" else -int(b)
        return RotationNumber.from_surd(int(a), bv, int(d), int(c))
    m = _CF.match(s)
    if m:
        head = [int(x) for x in m.group(1).split(",") if x.strip()]
        rep = None
        if m.group(2) is not None:
            rep = [int(x) for x in m.group(2).split(",") if x.strip()]
        return RotationNumber.from_stream(head, repeat=rep)
    raise ConfigError(f"unrecognized rotation-number spec: {text!r}")


def _as_complex(v, where):
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(x, (int, float)) for x in v)):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")


def parse_fn(obj) -> PeriodicFn:
    if not isinstance(obj, dict):
        raise ConfigError(f"function spec must be an object, got "
                          f"{type(obj).__name__}")
    extra = set(obj) - {"trig", "mean", "class"}
    if extra:
        raise ConfigError(f"unknown function keys: {sorted(extra)}")
    coeffs = {}
    for key, val in (obj.get("trig") or {}).items():
        try:
            freq = int(key)
        except (TypeError, ValueError):
            raise ConfigError(f"bad frequency key {key!r}") from None
        coeffs[freq] = _as_complex(val, f"coefficient at {key}")
    mean = _as_complex(obj.get("mean", 0.0), "mean")
    decay = None
    cls = obj.get("class")
    if cls is not None:
        if not isinstance(cls, dict) or set(cls) != {"r", "C"}:
            raise ConfigError("decay class must be {'r': ..., 'C': ...}")
        decay = (float(cls["r"]), float(cls["C"]))
    return PeriodicFn(coeffs, mean, decay=decay)


_SYSTEM_KEYS = {"alpha", "phi", "eta", "psi", "B", "theta", "K", "depth"}


def parse_system(obj) -> SkewSystem:
    """Build a system from config, enforcing the spectrum cutoff K."""
    if not isinstance(obj, dict):
        raise ConfigError("system spec must be an object")
    missing = {"alpha", "phi", "eta", "psi"} - set(obj)
    if missing:
        raise ConfigError(f"system spec missing keys: {sorted(missing)}")
    extra = set(obj) - _SYSTEM_KEYS
    if extra:
        raise ConfigError(f"unknown system keys: {sorted(extra)}")
    alpha = parse_alpha(obj["alpha"])
    fns = {name: parse_fn(obj[name]) for name in ("phi", "eta", "psi")}
    cutoff = int(obj.get("K", DEFAULT_MAX_FREQ))
    if cutoff < 1:
        raise ConfigError("K must be >= 1")
    for name, fn in fns.items():
        if fn.max_freq > cutoff:
            raise ConfigError(f"{name} has frequencies above the cutoff "
                              f"K = {cutoff}")
    kw = {}
    if "B" in obj:
        kw["B"] = float(obj["B"])
    if "theta" in obj:
        kw["theta"] = float(obj["theta"])
    if "depth" in obj:
        kw["depth"] = int(obj["depth"])
    return make_system(alpha, fns["phi"], fns["eta"], fns["psi"], **kw)


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    return obj


# -- atomic artifact writers -----------------------------------------------------


def _atomic_write(path, emit):
    """Write via a sibling temp file and rename; emit(fh) does the writing."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            emit(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    # stable text for floats; everything else prints as-is
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, header, rows):
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])

    _atomic_write(path, emit)


def write_json(path, payload):
    def emit(fh):
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    _atomic_write(path, emit)


def rows_payload(header, rows):
    return {"header": list(header), "rows": [list(r) for r in rows]}
