"""Averaged orbit metrics, the covering mesh, and covering-number estimates.

The phase space is the circle times the Heisenberg quotient with the product
metric from heisenberg.dist_phase.  The mesh refines the base circle at
spacing eps/(q^2 L) and each fiber coordinate at 1/(q L), so its cardinality
is (q^2 L / eps) * (q L)^3.  Greedy ball covering of a uniform sample under
the n-step averaged metric gives upper estimates of covering numbers; the
mesh cardinality itself is the arithmetic upper bound used in trend tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import SkewSystem, birkhoff_sums
from .errors import CapacityError, ConfigError
from .heisenberg import NilPoint, PhasePoint, canonical_np, dist_phase_batch
from .numtheory import RotationNumber

TREND_HEADER = ("k", "q_k", "n_k", "grid_count", "s_n_upper", "ratio", "tau", "B")

# streaming caps and the safety margin folded into the mesh refinement
POINT_CAP = 2 ** 63 - 1
_L_MARGIN = 10.0


def mesh_scale(sys: SkewSystem, epsilon) -> int:
    """Fiber refinement factor for the covering mesh.

    Large enough for both the covering radius (2/eps) and a drift margin
    proportional to the resonant sup norms; rounded up to an integer so every
    mesh count below is exact."""
    sup_phi, sup_eta = sys.sup_data()
    L = max(2.0 / float(_as_fraction(epsilon)),
            4.0 * (1.0 + sup_phi + sup_eta) * _L_MARGIN)
    return int(math.ceil(L - 1e-12))


def _as_fraction(value) -> Fraction:
    """Exact epsilon handling; floats are read as the decimal they print as,
    so 0.1 means 1/10 rather than its binary rounding."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad epsilon string {value!r}") from None
    raise ConfigError(f"cannot interpret {value!r} as an exact epsilon")


def _mesh_counts(epsilon, L, q_k: int):
    eps = _as_fraction(epsilon)
    if eps <= 0:
        raise ConfigError("epsilon must be positive")
    L = int(L)
    if L * eps <= 1:
        raise ConfigError("mesh needs L > 1/epsilon")
    if q_k < 1:
        raise ConfigError("need q_k >= 1")
    base = Fraction(q_k * q_k * L) / eps
    if base.denominator != 1:
        # integer counts keep the cardinality formula exact
        raise ConfigError("epsilon must divide q_k^2 L exactly; use a "
                          "1/integer epsilon with an integer L")
    return int(base), q_k * L


def grid_count(epsilon, L, q_k: int) -> int:
    """Mesh cardinality (q_k^2 L / eps) * (q_k L)^3 = eps^-1 q_k^5 L^4,
    exactly."""
    n_t, n_c = _mesh_counts(epsilon, L, q_k)
    return n_t * n_c ** 3


def grid_points(epsilon, L, q_k: int, cap: int = POINT_CAP):
    """Stream the mesh in deterministic order: time index outer, then the
    two horizontal fiber coordinates, central coordinate innermost.

    Validation is eager; the returned iterator is already safe to consume."""
    n_t, n_c = _mesh_counts(epsilon, L, q_k)
    total = n_t * n_c ** 3
    if total > cap:
        raise CapacityError(f"mesh holds {total} points, over the cap {cap}")

    def gen():
        dt = 1.0 / n_t
        dc = 1.0 / n_c
        for j in range(n_t):
            t = j * dt
            for j2 in range(n_c):
                for j3 in range(n_c):
                    for j1 in range(n_c):
                        yield PhasePoint(t, NilPoint.from_coords(
                            j2 * dc, j3 * dc, j1 * dc))

    return gen()


# -- averaged orbit metric -----------------------------------------------------


def _map_system(sys: SkewSystem, map_choice: str) -> SkewSystem:
    if map_choice == "S":
        return sys
    if map_choice == "T1":
        return sys.plus_system()
    raise ConfigError("map_choice must be 'S' or 'T1'")


def _orbit_matrix(sys: SkewSystem, t0, x0, y0, z0, n: int):
    """Canonical coordinates of iterates j = 0..n-1 for a batch of starting
    points, via one vectorized pass of prefix sums; shapes (batch, n)."""
    for f in (sys.phi, sys.eta, sys.psi):
        if not (f.real_valued or f.is_zero):
            raise ConfigError("orbit generation needs real-valued driving "
                              "functions")
    t0 = np.asarray(t0, dtype=float)
    batch = t0.shape[0]
    mults = np.array([sys.alpha.times(j) for j in range(n)])
    ts = (t0[:, None] + mults[None, :]) % 1.0
    phiv = np.real(sys.phi.eval_np(ts))
    etav = np.real(sys.eta.eval_np(ts))
    psiv = np.real(sys.psi.eval_np(ts))
    zero = np.zeros((batch, 1))
    if n > 1:
        Phi = np.hstack([zero, np.cumsum(phiv[:, :-1], axis=1)])
        Xi = np.hstack([zero, np.cumsum(etav[:, :-1], axis=1)])
        # central update absorbs the running column sum at each step
        Psi = np.hstack([zero, np.cumsum((psiv + Phi * etav)[:, :-1], axis=1)])
    else:
        Phi = Xi = Psi = zero
    x0 = np.asarray(x0, dtype=float)[:, None]
    y0 = np.asarray(y0, dtype=float)[:, None]
    z0 = np.asarray(z0, dtype=float)[:, None]
    cx, cy, cz = canonical_np(x0 + Xi, y0 + Phi, z0 + y0 * Xi + Psi)
    return ts, cx, cy, cz


def _point_arrays(points):
    ts = np.array([p.t for p in points])
    xs = np.array([p.p.rep.x for p in points])
    ys = np.array([p.p.rep.y for p in points])
    zs = np.array([p.p.rep.z for p in points])
    return ts, xs, ys, zs


def dbar(sys: SkewSystem, u: PhasePoint, v: PhasePoint, n: int,
         map_choice: str = "S", window: int = 3) -> float:
    """Averaged orbit distance (1/n) sum_{j<n} dist(T^j u, T^j v)."""
    if n < 1:
        raise ConfigError("need n >= 1")
    base = _map_system(sys, map_choice)
    tu, xu, yu, zu = _orbit_matrix(base, *_point_arrays([u]), n)
    tv, xv, yv, zv = _orbit_matrix(base, *_point_arrays([v]), n)
    d = dist_phase_batch(tu.ravel(), (xu.ravel(), yu.ravel(), zu.ravel()),
                         tv.ravel(), (xv.ravel(), yv.ravel(), zv.ravel()),
                         window)
    return float(np.mean(d))


def _dbar_block(orbits_a, orbits_b, n: int, window: int) -> np.ndarray:
    ta, xa, ya, za = orbits_a
    tb, xb, yb, zb = orbits_b
    d = dist_phase_batch(ta.ravel(), (xa.ravel(), ya.ravel(), za.ravel()),
                         tb.ravel(), (xb.ravel(), yb.ravel(), zb.ravel()),
                         window)
    return d.reshape(-1, n).mean(axis=1)


# -- adjacency of mesh neighbors under the conjugated map -----------------------


@dataclass(frozen=True)
class AdjacencyReport:
    epsilon: float
    L: int
    k: int
    q_k: int
    n: int
    pairs: int
    max_dbar: float
    violations: int
    exploratory: bool


def power_iterate_count(sys: SkewSystem, q_k: int, cap: int = 1 << 22) -> int:
    """Iterate horizon q_k^(B-1), rounded to an integer and capped."""
    return max(1, min(int(round(q_k ** (sys.B - 1.0))), cap))


def adjacency_check(sys: SkewSystem, epsilon, L, k: int, pairs: int = 1000,
                    seed: int = 0, window: int = 3,
                    chunk: int = 1 << 15) -> AdjacencyReport:
    """Sample adjacent mesh pairs and check that the averaged distance over
    the q_k^(B-1)-step window stays below epsilon under the conjugated map.

    Pairs differ by at most one mesh step per coordinate.  Indices outside
    the power-gap classification are allowed but flagged exploratory."""
    if sys.sets is None:
        raise ConfigError("gap classification needs an irrational rotation "
                          "number")
    if pairs < 1:
        raise ConfigError("need pairs >= 1")
    qs = sys.alpha.denominators(k)
    if k < 1 or k >= len(qs):
        raise ConfigError("index k outside the available expansion")
    q_k = qs[k]
    eps_f = float(_as_fraction(epsilon))
    n_t, n_c = _mesh_counts(epsilon, L, q_k)
    n = power_iterate_count(sys, q_k)
    exploratory = k not in sys.sets.power_gap_idx
    base = sys.plus_system()
    rng = np.random.default_rng(seed)
    jt = rng.integers(0, n_t, size=pairs)
    jx = rng.integers(0, n_c, size=pairs)
    jy = rng.integers(0, n_c, size=pairs)
    jz = rng.integers(0, n_c, size=pairs)
    off = rng.integers(0, 2, size=(pairs, 4))
    idle = off.sum(axis=1) == 0
    off[idle, 0] = 1  # a pair must move somewhere; bump the time index
    t1, x1, y1, z1 = jt / n_t, jx / n_c, jy / n_c, jz / n_c
    t2 = ((jt + off[:, 0]) % n_t) / n_t
    x2 = ((jx + off[:, 1]) % n_c) / n_c
    y2 = ((jy + off[:, 2]) % n_c) / n_c
    z2 = ((jz + off[:, 3]) % n_c) / n_c
    step = max(1, chunk // n)
    max_d = 0.0
    violations = 0
    for s in range(0, pairs, step):
        b = slice(s, min(pairs, s + step))
        oa = _orbit_matrix(base, t1[b], x1[b], y1[b], z1[b], n)
        ob = _orbit_matrix(base, t2[b], x2[b], y2[b], z2[b], n)
        d = _dbar_block(oa, ob, n, window)
        max_d = max(max_d, float(d.max()))
        violations += int(np.sum(d >= eps_f))
    return AdjacencyReport(eps_f, int(L), k, q_k, n, pairs, max_d,
                           violations, exploratory)


# -- greedy covering -------------------------------------------------------------


@dataclass(frozen=True)
class CoverResult:
    s_n_upper: int
    covered_fraction: float
    complete: bool


def greedy_cover(sys: SkewSystem, map_choice: str, n: int, epsilon,
                 sample_size: int = 400, seed: int = 0, max_centers=None,
                 window: int = 3) -> CoverResult:
    """Greedy epsilon-ball covering of a uniform sample under the averaged
    metric; the center count is an upper estimate of the covering number.

    Sequential by construction: ball membership depends on the centers
    already chosen, so the loop order is part of the definition.  Points are
    drawn uniformly from the fundamental domain (Lebesgue on the base)."""
    if n < 1 or sample_size < 1:
        raise ConfigError("need n >= 1 and sample_size >= 1")
    eps_f = float(_as_fraction(epsilon))
    base = _map_system(sys, map_choice)
    rng = np.random.default_rng(seed)
    t0 = rng.random(sample_size)
    x0 = rng.random(sample_size)
    y0 = rng.random(sample_size)
    z0 = rng.random(sample_size) - 0.5
    ts, xs, ys, zs = _orbit_matrix(base, t0, x0, y0, z0, n)
    target = 1.0 - eps_f
    budget = sample_size if max_centers is None else int(max_centers)
    uncovered = np.ones(sample_size, dtype=bool)
    centers = 0
    covered = 0.0
    while covered <= target and centers < budget and uncovered.any():
        idx = int(np.argmax(uncovered))
        live = np.nonzero(uncovered)[0]
        rep = (np.broadcast_to(ts[idx], (live.size, n)),
               np.broadcast_to(xs[idx], (live.size, n)),
               np.broadcast_to(ys[idx], (live.size, n)),
               np.broadcast_to(zs[idx], (live.size, n)))
        d = _dbar_block(rep, (ts[live], xs[live], ys[live], zs[live]), n,
                        window)
        uncovered[idx] = False
        uncovered[live[d < eps_f]] = False
        centers += 1
        covered = 1.0 - float(np.mean(uncovered))
    return CoverResult(centers, covered, covered > target)


@dataclass(frozen=True)
class ComplexityReport:
    epsilon: float
    L: int
    k: int
    n: int
    grid_count: int
    covered_fraction: float
    s_n_upper: int

    def __post_init__(self):
        if not 0.0 <= self.covered_fraction <= 1.0:
            raise ConfigError("covered_fraction out of [0, 1]")
        if self.s_n_upper > self.grid_count:
            raise ConfigError("cover size exceeds the mesh cardinality")


def complexity_report(sys: SkewSystem, k: int, epsilon=Fraction(1, 2),
                      map_choice: str = "T1", n=None, sample_size: int = 400,
                      seed: int = 0) -> ComplexityReport:
    """One covering measurement at index k: mesh cardinality plus a greedy
    cover of a uniform sample (capped at the mesh size) under the averaged
    metric at the q_k^(B-1) horizon."""
    qs = sys.alpha.denominators(k)
    if k < 1 or k >= len(qs):
        raise ConfigError("index k outside the available expansion")
    q_k = qs[k]
    L = mesh_scale(sys, epsilon)
    count = grid_count(epsilon, L, q_k)
    if n is None:
        n = power_iterate_count(sys, q_k)
    cover = greedy_cover(sys, map_choice, n, epsilon,
                         min(sample_size, count), seed)
    return ComplexityReport(float(_as_fraction(epsilon)), L, k, n, count,
                            cover.covered_fraction, cover.s_n_upper)


# -- sub-polynomial trend table --------------------------------------------------


@dataclass(frozen=True)
class TrendRow:
    k: int
    q_k: int
    n_k: float
    grid_count: int
    s_n_upper: int
    ratio: float
    tau: float
    B: float

    def csv_values(self):
        return (self.k, self.q_k, self.n_k, self.grid_count, self.s_n_upper,
                self.ratio, self.tau, self.B)


@dataclass(frozen=True)
class TrendReport:
    tau: float
    B: float
    epsilon: float
    L: int
    rows: tuple

    header = TREND_HEADER

    def csv_rows(self):
        return [r.csv_values() for r in self.rows]

    @property
    def decreasing(self) -> bool:
        vals = [r.ratio for r in self.rows]
        return all(a > b for a, b in zip(vals, vals[1:]))


def subpoly_trend(alpha: RotationNumber, ks, tau: float, epsilon,
                  L: int) -> TrendReport:
    """Ratio table s_(n_k) / n_k^tau with the mesh cardinality standing in
    for the covering number (the mesh is itself a cover at scale epsilon).

    With the horizon exponent tied to tau as B = 6/tau + 1 the ratio equals
    eps^-1 L^4 / q_k, so it decays like the reciprocal denominator."""
    if tau <= 0:
        raise ConfigError("need tau > 0")
    ks = sorted({int(k) for k in ks})
    if len(ks) < 3:
        raise ConfigError("trend needs at least 3 values of k")
    B = 6.0 / tau + 1.0
    qs = alpha.denominators(max(ks))
    if ks[0] < 1 or max(ks) >= len(qs):
        raise ConfigError("index k outside the available expansion")
    rows = []
    for k in ks:
        q_k = qs[k]
        count = grid_count(epsilon, L, q_k)
        n_k = q_k ** (B - 1.0)
        ratio = count / n_k ** tau
        rows.append(TrendRow(k, q_k, n_k, count, count, ratio, tau, B))
    return TrendReport(tau, B, float(_as_fraction(epsilon)), int(L),
                       tuple(rows))


# -- Lipschitz-type constants of the cocycle sums --------------------------------


@dataclass(frozen=True)
class LipschitzReport:
    k: int
    q_k: int
    n_k: int
    samples: int
    c_prime: float
    c_dprime: float
    exploratory: bool


def lipschitz_probe(sys: SkewSystem, k: int, samples: int = 200,
                    seed: int = 0, m_cap: int = 1 << 22) -> LipschitzReport:
    """Measured Lipschitz-type constants of the coupling and linear sums.

    c_prime bounds |H_m(t*) - H_m(t)| against q_k^-2 + q_k^2 |t - t*| and
    c_dprime bounds the linear-sum analog against q_k^-2 + q_k |t - t*|,
    maximized over sampled m <= q_k^(B-1) and log-spaced separations."""
    if sys.sets is None:
        raise ConfigError("gap classification needs an irrational rotation "
                          "number")
    if samples < 1:
        raise ConfigError("need samples >= 1")
    qs = sys.alpha.denominators(k)
    if k < 1 or k >= len(qs):
        raise ConfigError("index k outside the available expansion")
    q_k = qs[k]
    if q_k < 2:
        raise ConfigError("probe needs q_k >= 2")
    exploratory = k not in sys.sets.power_gap_idx
    n_k = power_iterate_count(sys, q_k, m_cap)
    rng = np.random.default_rng(seed)
    # separations span both regimes of the two-term bound
    lo, hi = math.log(q_k ** -5.0), math.log(min(0.5, 1.0 / q_k))
    c_prime = 0.0
    c_dprime = 0.0
    for _ in range(samples):
        m = int(rng.integers(1, n_k + 1))
        sums = birkhoff_sums(sys, m)
        t = float(rng.random())
        delta = math.exp(rng.uniform(lo, hi))
        if rng.random() < 0.5:
            delta = -delta
        ts = (t + delta) % 1.0
        dh = abs(complex(sums.H.eval(ts) - sums.H.eval(t)).real)
        dx = abs(complex(sums.xi.eval(ts) - sums.xi.eval(t)).real)
        ad = abs(delta)
        c_prime = max(c_prime, dh / (q_k ** -2.0 + q_k ** 2.0 * ad))
        c_dprime = max(c_dprime, dx / (q_k ** -2.0 + q_k * ad))
    return LipschitzReport(k, q_k, n_k, samples, c_prime, c_dprime,
                           exploratory)


if __name__ == "__main__":
    from .dynamics import make_system
    from .periodic import PeriodicFn

    golden = RotationNumber.from_surd(-1, 1, 5, 2)
    sys_ = make_system(golden, PeriodicFn.cosine(), PeriodicFn.sine(),
                       PeriodicFn.sine(), depth=20)
    print("grid_count(1, 2, 1) =", grid_count(1, 2, 1))
    for n in (1, 10, 100):
        res = greedy_cover(sys_, "T1", n, Fraction(9, 20), sample_size=256)
        print(f"n={n:3d} cover={res.s_n_upper} frac={res.covered_fraction:.3f}")
    trend = subpoly_trend(golden, range(10, 17), 2.0, 1, 2)
    for row in trend.rows:
        print(row.k, row.q_k, f"{row.ratio:.4e}")
    print("decreasing:", trend.decreasing)
