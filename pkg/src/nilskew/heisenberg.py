"""Heisenberg group arithmetic, the quotient nilmanifold, and metric bounds.

Elements are upper unipotent 3x3 matrices stored as coordinate triples
(x, y, z) for the matrix (1 y z; 0 1 x; 0 0 1), so that

    (x1,y1,z1) * (x2,y2,z2) = (x1+x2, y1+y2, z1+z2 + y1*x2).

The integer lattice acts on the left; a coset gets a canonical representative
with x, y in [0,1) and the centered z in (-1/2, 1/2].  The distance of record
on the quotient is a windowed upper proxy: the l-infinity norm of the centered
coordinates of rep(p)^{-1} * gamma * rep(q), minimized over lattice elements
gamma whose two non-central entries are bounded by the window, with the
central direction reduced exactly.  Whether this equals the descended metric
is unknown; every estimate the laboratory reproduces only ever needs the
upper bound, and all tests treat the proxy as the metric of record.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .numtheory import nearest_frac, nearest_frac_np


class HeisElt(NamedTuple):
    x: float  # middle-right entry
    y: float  # top-middle entry
    z: float  # top-right entry


IDENTITY = HeisElt(0.0, 0.0, 0.0)


def mul(g: HeisElt, h: HeisElt) -> HeisElt:
    return HeisElt(g.x + h.x, g.y + h.y, g.z + h.z + g.y * h.x)


def inv(g: HeisElt) -> HeisElt:
    return HeisElt(-g.x, -g.y, g.x * g.y - g.z)


def centered_coords(g: HeisElt):
    """Coordinates (x, y, z - x*y); the third entry is invariant under the
    splitting used by the explicit distance bounds."""
    return (g.x, g.y, g.z - g.x * g.y)


def _canonical(x, y, z):
    b = -math.floor(y)
    y += b
    z += b * x
    x -= math.floor(x)
    return x, y, nearest_frac(z)[0]


class NilPoint(NamedTuple):
    """Canonical coset representative: x, y in [0,1), z in (-1/2, 1/2]."""

    rep: HeisElt

    @classmethod
    def from_coords(cls, x, y, z):
        return cls(HeisElt(*_canonical(x, y, z)))

    @classmethod
    def from_elt(cls, g: HeisElt):
        return cls(HeisElt(*_canonical(g.x, g.y, g.z)))

    def shifted(self, g: HeisElt) -> "NilPoint":
        """The coset of rep * g (right translation descends to the quotient)."""
        return NilPoint.from_elt(mul(self.rep, g))


class PhasePoint(NamedTuple):
    t: float
    p: NilPoint

    @classmethod
    def make(cls, t, x, y, z):
        return cls(t % 1.0, NilPoint.from_coords(x, y, z))


def canonical_np(x, y, z):
    """Vectorized canonicalization; returns (x', y', z') arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    b = -np.floor(y)
    y2 = y + b
    z2 = z + b * x
    x2 = x - np.floor(x)
    return x2, y2, nearest_frac_np(z2)


def _window_grid(window: int):
    r = np.arange(-window, window + 1, dtype=float)
    a, b = np.meshgrid(r, r, indexing="ij")
    return a.ravel(), b.ravel()


def _directional_min(gi: HeisElt, h: HeisElt, a, b):
    # u = gi * (a, b, 0) * h over the whole lattice window at once
    ux = gi.x + a + h.x
    uy = gi.y + b + h.y
    uz = gi.z + gi.y * a + h.z + (gi.y + b) * h.x
    central = np.abs(nearest_frac_np(uz - ux * uy))
    vals = np.maximum(np.maximum(np.abs(ux), np.abs(uy)), central)
    return float(np.min(vals))


def dist_nil_upper(p: NilPoint, q: NilPoint, window: int = 3) -> float:
    """Windowed upper bound for the quotient distance between two cosets.

    Minimizes the centered-coordinate sup norm of rep(p)^{-1} gamma rep(q)
    over gamma with non-central entries in [-window, window]; the central
    entry is reduced exactly.  The candidate family is closed under
    inversion, so evaluating both orders and taking the smaller value changes
    nothing algebraically while making the result symmetric bit for bit.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    a, b = _window_grid(window)
    fwd = _directional_min(inv(p.rep), q.rep, a, b)
    bwd = _directional_min(inv(q.rep), p.rep, a, b)
    return min(fwd, bwd)


def dist_phase(u: PhasePoint, v: PhasePoint, window: int = 3) -> float:
    """Product metric: sqrt(||t - t'||^2 + dist_nil_upper^2)."""
    dt = nearest_frac(u.t - v.t)[1]
    dn = dist_nil_upper(u.p, v.p, window)
    return math.hypot(dt, dn)


def nil_equal(p: NilPoint, q: NilPoint, tol: float = 1e-9) -> bool:
    """Lattice-equivalence test: the cosets agree iff their distance proxy
    vanishes."""
    return dist_nil_upper(p, q, window=2) <= tol


def dist_explicit_bound(g: HeisElt, gs: HeisElt, Y: HeisElt, Ys: HeisElt) -> float:
    """Explicit upper bound for the quotient distance between the cosets of
    g*Y and gs*Ys, in terms of the factors alone.

    Dominates dist_nil_upper(coset(g*Y), coset(gs*Ys)) at window >= 3.
    """
    return ((1.0 + abs(g.y) + abs(Y.y)) * abs(gs.x - g.x)
            + (1.0 + abs(Y.x)) * abs(gs.y - g.y)
            + abs(gs.z - g.z)
            + (1.0 + abs(Y.y)) * abs(Y.x - Ys.x)
            + abs(Y.y - Ys.y)
            + nearest_frac(Ys.z - Y.z)[1])


# -- batch paths for orbit statistics ---------------------------------------


def dist_nil_upper_batch(c1, c2, window: int = 3) -> np.ndarray:
    """dist_nil_upper over paired arrays of canonical coordinates.

    c1, c2: tuples of arrays (x, y, z), canonicalized, equal shapes.
    """
    x1, y1, z1 = (np.asarray(v, dtype=float) for v in c1)
    x2, y2, z2 = (np.asarray(v, dtype=float) for v in c2)
    a, b = _window_grid(window)
    out = None
    for ix1, iy1, iz1, ix2, iy2, iz2 in ((x1, y1, z1, x2, y2, z2),
                                         (x2, y2, z2, x1, y1, z1)):
        # inverse of the first element, then the same product as above
        gx, gy, gz = -ix1, -iy1, ix1 * iy1 - iz1
        ux = gx[:, None] + a[None, :] + ix2[:, None]
        uy = gy[:, None] + b[None, :] + iy2[:, None]
        uz = (gz[:, None] + gy[:, None] * a[None, :] + iz2[:, None]
              + (gy[:, None] + b[None, :]) * ix2[:, None])
        central = np.abs(nearest_frac_np(uz - ux * uy))
        vals = np.maximum(np.maximum(np.abs(ux), np.abs(uy)), central)
        m = vals.min(axis=1)
        out = m if out is None else np.minimum(out, m)
    return out


def dist_phase_batch(t1, c1, t2, c2, window: int = 3) -> np.ndarray:
    dt = np.abs(nearest_frac_np(np.asarray(t1, dtype=float) - np.asarray(t2, dtype=float)))
    dn = dist_nil_upper_batch(c1, c2, window)
    return np.hypot(dt, dn)
