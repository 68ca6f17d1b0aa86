"""Exact rotation-number arithmetic, resonance index sets, and a Mobius sieve.

A rotation number is held exactly (rational, real quadratic irrational, or an
explicit partial-quotient stream), and every quantity that is sensitive to
small divisors (fractional parts <q alpha>, distances ||q alpha||, unit-circle
samples e(q alpha)) is derived from integer convergent data.  Nothing on these
paths goes through a bare 64-bit product q * float(alpha).
"""

from __future__ import annotations

import cmath
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import ConfigError, PrecisionExhausted, SearchRangeError

TWO_PI = 2.0 * math.pi
_HALF = Fraction(1, 2)


def nearest_frac(z):
    """Signed fractional part and distance to the nearest integer.

    Ties go up: nearest_frac(n + 1/2) == (+1/2, 1/2).  Fractions stay exact.
    """
    if isinstance(z, Fraction):
        n = math.ceil(z - _HALF)
    else:
        n = math.ceil(z - 0.5)
    s = z - n
    return s, abs(s)


def nearest_frac_np(z):
    """Vectorized signed fractional part, same tie rule as nearest_frac."""
    z = np.asarray(z, dtype=float)
    return z - np.ceil(z - 0.5)


def _floor_surd(P, D, Q):
    # floor((P + sqrt(D)) / Q) in exact integer arithmetic; D > 0 nonsquare.
    if Q < 0:
        # the value is irrational, so it is never an integer and ceil = floor + 1
        return -(_floor_surd(P, D, -Q) + 1)
    s = isqrt(D)
    n = (P + s) // Q
    # sqrt(D) > T  iff  T <= s  for integer T (D nonsquare)
    while (n + 1) * Q - P <= s:
        n += 1
    return n


def _surd_quotients(a, b, d, c):
    """Partial quotients of (a + b*sqrt(d))/c reduced mod 1, by the integer
    P,Q,D recurrence.  Yields a_1, a_2, ... forever."""
    if c == 0:
        raise ConfigError("surd denominator must be nonzero")
    if b == 0:
        raise ConfigError("surd with b = 0 is rational; use a rational rotation number")
    if d <= 0 or isqrt(d) ** 2 == d:
        raise ConfigError("radicand must be a positive nonsquare integer")
    if b < 0:
        a, b, c = -a, -b, -c
    D = b * b * d
    P, Q = a, c
    if (D - P * P) % Q != 0:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    # drop the integer part so the value lands in (0, 1)
    P -= _floor_surd(P, D, Q) * Q
    while True:
        # a_k = floor(x_k), x_{k+1} = 1/(x_k - a_k); first iterate has a_0 = 0
        ak = _floor_surd(P, D, Q)
        yield ak
        P = ak * Q - P
        Q = (D - P * P) // Q


def _rational_quotients(fr: Fraction):
    # Euclid on (denominator, numerator); canonical form, last quotient >= 2
    p, q = fr.numerator, fr.denominator
    out = []
    while p:
        a, r = divmod(q, p)
        out.append(a)
        q, p = p, r
    return out


def _stream_quotients(head, cycle):
    for a in head:
        yield a
    if cycle:
        while True:
            for a in cycle:
                yield a


class RotationNumber:
    """A rotation number in [0, 1) with an exact partial-quotient expansion.

    Convergents follow q_0 = 1, q_1 = a_1, q_{k+1} = a_{k+1} q_k + q_{k-1}
    (numerators l_k likewise with l_0 = 0, l_1 = 1).  Rational expansions
    terminate; surd expansions extend forever; explicit streams raise
    PrecisionExhausted once their data runs out.
    """

    __slots__ = ("kind", "_src", "_aq", "_q", "_l", "_term", "_exact", "label")

    def __init__(self, kind, src, exact=None, label=""):
        self.kind = kind
        self._src = src
        self._aq = []
        self._q = [1]
        self._l = [0]
        self._term = False
        self._exact = exact
        self.label = label

    @classmethod
    def from_rational(cls, p, q):
        if q == 0:
            raise ConfigError("rational rotation number needs a nonzero denominator")
        fr = Fraction(p, q) % 1
        rn = cls("rational", iter(_rational_quotients(fr)), exact=fr,
                 label=f"rational:{fr.numerator}/{fr.denominator}")
        return rn

    @classmethod
    def from_surd(cls, a, b, d, c):
        gen = _surd_quotients(a, b, d, c)
        first = next(gen)
        if first != 0:  # the generator starts at the integer part, always 0 here
            raise ConfigError("internal: surd not reduced mod 1")
        return cls("surd", gen, label=f"surd:({a}+{b}*sqrt({d}))/{c}")

    @classmethod
    def from_stream(cls, quotients, repeat=None):
        head = [int(a) for a in quotients]
        cyc = [int(a) for a in (repeat or [])]
        if any(a < 1 for a in head + cyc):
            raise ConfigError("partial quotients must be positive integers")
        if not head and not cyc:
            raise ConfigError("empty partial-quotient stream")
        lab = f"cf:{head}" + (f"repeat:{cyc}" if cyc else "")
        return cls("stream", _stream_quotients(head, cyc), label=lab)

    # -- expansion ---------------------------------------------------------

    def _extend(self) -> bool:
        if self._term:
            return False
        a = next(self._src, None)
        if a is None:
            if self.kind == "rational":
                self._term = True
                return False
            raise PrecisionExhausted(
                f"partial-quotient stream exhausted after {len(self._aq)} terms")
        self._aq.append(a)
        if len(self._aq) == 1:
            self._q.append(a)
            self._l.append(1)
        else:
            self._q.append(a * self._q[-1] + self._q[-2])
            self._l.append(a * self._l[-1] + self._l[-2])
        return True

    def ensure_depth(self, depth) -> int:
        """Extend the expansion to `depth` quotients when possible; returns
        the depth actually available (shorter only for terminated rationals)."""
        while len(self._aq) < depth and self._extend():
            pass
        return len(self._aq)

    @property
    def available_depth(self):
        return len(self._aq)

    @property
    def terminated(self):
        return self._term

    def quotients(self, depth):
        return self._aq[: self.ensure_depth(depth)]

    def denominators(self, depth):
        """q_0 .. q_depth (shorter when a rational expansion terminates)."""
        k = self.ensure_depth(depth)
        return self._q[: min(depth, k) + 1]

    def numerators(self, depth):
        k = self.ensure_depth(depth)
        return self._l[: min(depth, k) + 1]

    def convergent(self, k) -> Fraction:
        if self.ensure_depth(k) < k:
            return self._exact
        return Fraction(self._l[k], self._q[k])

    def bracket(self, depth=None):
        """Exact rational interval (lo, hi) with lo <= alpha <= hi.

        Rationals give a degenerate interval; otherwise two consecutive
        convergents enclose alpha strictly."""
        if self.kind == "rational":
            return self._exact, self._exact
        want = max(2, depth or 0, self.available_depth)
        self.ensure_depth(want)
        n = len(self._aq)
        a = Fraction(self._l[n], self._q[n])
        b = Fraction(self._l[n - 1], self._q[n - 1])
        return (a, b) if a < b else (b, a)

    # -- numeric views -----------------------------------------------------

    def _proxy(self, min_q):
        """Deep convergent (L, Q) with Q >= min_q and |alpha - L/Q| < 1/Q**2."""
        if self.kind == "rational":
            return self._exact.numerator, self._exact.denominator
        while self._q[-1] < min_q:
            self._extend()
        return self._l[-1], self._q[-1]

    def _proxy_for(self, m):
        # |m| / Q^2 <= 1e-18: far below float64 resolution of the result
        return self._proxy(isqrt(max(1, abs(m))) * 10 ** 9 + 1)

    def signed_frac(self, m) -> float:
        """<m alpha>: signed distance from m*alpha to its nearest integer."""
        L, Q = self._proxy_for(m)
        r = (m * L) % Q
        num = r if 2 * r <= Q else r - Q
        return num / Q

    def dist_to_int(self, m) -> float:
        """||m alpha||."""
        return abs(self.signed_frac(m))

    def e_at(self, m) -> complex:
        """e(m alpha) on the unit circle, via the exact fractional part."""
        return cmath.exp(2j * math.pi * self.signed_frac(m))

    def times(self, n) -> float:
        """n * alpha mod 1 in [0, 1)."""
        L, Q = self._proxy_for(n)
        return ((n * L) % Q) / Q

    def orbit_fracs(self, t0, count, mult=1):
        """Array of (t0 + j * mult * alpha) mod 1 for j = 0..count-1.

        The multiples accumulate in exact integers, so there is no float
        drift along long orbits."""
        L, Q = self._proxy_for(count * max(1, abs(mult)))
        ls = (mult * L) % Q
        out = np.empty(count, dtype=float)
        r = 0
        for j in range(count):
            out[j] = r / Q
            r += ls
            if r >= Q:
                r -= Q
        out += t0 % 1.0
        out %= 1.0
        return out

    @property
    def as_float(self) -> float:
        L, Q = self._proxy(10 ** 9)
        return L / Q

    @property
    def is_rational(self):
        return self.kind == "rational"

    @property
    def rational_pq(self):
        if not self.is_rational:
            raise ConfigError("not a rational rotation number")
        return self._exact.numerator, self._exact.denominator

    def hits_integer(self, m) -> bool:
        """True iff m * alpha is exactly an integer (only for rational alpha)."""
        if not self.is_rational:
            return False
        return (m * self._exact.numerator) % self._exact.denominator == 0

    # -- rigorous interval queries ------------------------------------------

    def dist_interval(self, q, max_refine=300, rel_width=Fraction(1, 1 << 30)):
        """Rigorous Fraction interval enclosing ||q alpha||.

        Refines the convergent bracket until the nearest integer of q*alpha
        is unambiguous and the enclosure is tight relative to its size;
        raises PrecisionExhausted when the stream cannot be refined enough."""
        if self.kind == "rational":
            _, d = nearest_frac(q * self._exact)
            return d, d
        for _ in range(max_refine):
            lo, hi = self.bracket()
            a, b = q * lo, q * hi
            mid = (a + b) / 2
            n = math.ceil(mid - _HALF)
            sa, sb = a - n, b - n
            # n must be the nearest integer across all of [a, b]
            if sa > -_HALF and sb < _HALF and (sa > 0 or sb < 0):
                x, y = abs(sa), abs(sb)
                if x > y:
                    x, y = y, x
                if y - x <= y * rel_width:
                    return x, y
            if not self._extend():
                break
        raise PrecisionExhausted(f"cannot isolate ||{q} * alpha|| with available quotients")

    def dist_between(self, q, low, high, max_refine=60):
        """Exact check that low < ||q alpha|| < high for Fraction bounds."""
        for _ in range(max_refine):
            lo, hi = self.dist_interval(q)
            if lo > low and hi < high:
                return True
            if hi <= low or lo >= high:
                return False
            if lo == hi:
                return False  # exact value sits on a strict bound
            if not self._extend():
                raise PrecisionExhausted("interval straddles the comparison bound")
        raise PrecisionExhausted("interval straddles the comparison bound")


def expand_cf(rn: RotationNumber, depth: int):
    """Quotients and convergents of rn down to `depth`.

    Rational expansions terminate early and return what exists; explicit
    streams raise PrecisionExhausted beyond their data."""
    k = rn.ensure_depth(depth)
    k = min(k, depth)
    return {
        "quotients": rn.quotients(depth)[:k],
        "denominators": rn.denominators(depth),
        "numerators": rn.numerators(depth),
        "terminated": rn.terminated and k < depth,
    }


def check_best_approx(rn: RotationNumber, k: int,
                      full_scan_limit: int = 2_000_000,
                      samples: int = 20_000, seed: int = 0):
    """(p2) sandwich and minimality of ||q_k alpha|| over 1 <= q < q_{k+1}.

    The sandwich 1/(2 q_{k+1}) < ||q_k alpha|| < 1/q_{k+1} is decided with
    exact interval arithmetic.  The scan is exhaustive when q_{k+1} fits under
    full_scan_limit and otherwise a seeded subsample that always includes
    every convergent denominator in range; `mode` reports which path ran.
    Distances come from a deep-convergent proxy whose per-term error is below
    one integer comparison unit, so the scan's ordering is exact.
    """
    qs = rn.denominators(k + 1)
    if len(qs) < k + 2:
        raise ConfigError(f"expansion terminates before index {k + 1}")
    qk, qk1 = qs[k], qs[k + 1]
    sandwich_low = rn.dist_between(qk, Fraction(1, 2 * qk1), Fraction(2))
    sandwich_high = rn.dist_between(qk, Fraction(0), Fraction(1, qk1))

    # ordering proxy: distances live on a 1/Q grid with spacing well above
    # the per-term error q/Q^2, so comparisons below are exact
    L, Q = rn._proxy(10 * qk1 * qk1)
    ls = L % Q
    dk = (qk * ls) % Q
    dk = min(dk, Q - dk)

    if qk1 <= full_scan_limit:
        mode = "exhaustive"
        best_num, best_q = None, None
        r = 0
        for q in range(1, qk1):
            r += ls
            if r >= Q:
                r -= Q
            d = Q - r if (r << 1) > Q else r
            if best_num is None or d < best_num:
                best_num, best_q = d, q
        checked = qk1 - 1
        is_min = best_q == qk
    else:
        mode = "sampled"
        rng = random.Random(seed)
        pool = set(q for q in qs[1: k + 1] if 1 <= q < qk1)
        while len(pool) < samples:
            pool.add(rng.randrange(1, qk1))
        best_num, best_q = dk, qk
        is_min = True
        for q in pool:
            d = (q * ls) % Q
            d = min(d, Q - d)
            if d < best_num or (d == best_num and q != qk):
                best_num, best_q, is_min = d, q, False
        checked = len(pool)

    return {
        "k": k, "q_k": qk, "q_k1": qk1,
        "sandwich_low": sandwich_low, "sandwich_high": sandwich_high,
        "is_min": is_min, "argmin": best_q,
        "min_dist": rn.dist_to_int(best_q),  # full-precision readout
        "mode": mode, "checked": checked,
    }


def small_denominator_sums(rn: RotationNumber, k: int):
    """Harmonic sums over small denominators and their predicted scales.

    s1 = sum over 0 < |q| < q_k of ||q alpha||^{-1}, compared to
    q_k * log(q_k + 1); s2 = sum over 0 < |q| < q_{k+1} of ||q alpha||^{-2},
    compared to q_{k+1}^2.
    """
    qs = rn.denominators(k + 1)
    if len(qs) < k + 2:
        raise ConfigError(f"expansion terminates before index {k + 1}")
    qk, qk1 = qs[k], qs[k + 1]
    # the reciprocals amplify proxy error, so go much deeper than the scan needs
    L, Q = rn._proxy_for(qk1)
    ls = L % Q
    r = 0
    s1 = 0.0
    s2 = 0.0
    fq = float(Q)
    for q in range(1, qk1):
        r += ls
        if r >= Q:
            r -= Q
        d = (Q - r if (r << 1) > Q else r) / fq
        if q < qk:
            s1 += 1.0 / d
        s2 += 1.0 / (d * d)
    s1 *= 2.0  # ||-q alpha|| = ||q alpha||
    s2 *= 2.0
    return {
        "s1": s1, "s2": s2,
        "ratio1": s1 / (qk * math.log(qk + 1)),
        "ratio2": s2 / (qk1 * qk1),
    }


def window_weighted_sum(rn: RotationNumber, k: int, c: float):
    """(p3) probe: sum over q_k <= |q| < q_{k+1} of q^{-2} min(||q alpha||^{-2}, c^2),
    returned with its ratio to the predicted scale c / q_k."""
    qs = rn.denominators(k + 1)
    qk, qk1 = qs[k], qs[k + 1]
    L, Q = rn._proxy_for(qk1)
    ls = L % Q
    r = (qk * ls - ls) % Q
    total = 0.0
    c2 = c * c
    fq = float(Q)
    for q in range(qk, qk1):
        r += ls
        if r >= Q:
            r -= Q
        d = (Q - r if (r << 1) > Q else r) / fq
        total += min(1.0 / (d * d), c2) / (q * q)
    total *= 2.0
    return {"value": total, "ratio": total / (c / qk)}


# -- Mobius ---------------------------------------------------------------


def mobius_sieve(limit: int, block: int = 1 << 16) -> np.ndarray:
    """mu(n) for 0 <= n <= limit as int8, by a segmented sieve."""
    if limit < 1:
        raise ConfigError("sieve limit must be >= 1")
    root = isqrt(limit)
    is_p = np.ones(root + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, isqrt(root) + 1):
        if is_p[p]:
            is_p[p * p:: p] = False
    primes = np.nonzero(is_p)[0]

    mu = np.zeros(limit + 1, dtype=np.int8)
    for lo in range(0, limit + 1, block):
        hi = min(lo + block, limit + 1)
        m = np.ones(hi - lo, dtype=np.int8)
        val = np.arange(lo, hi, dtype=np.int64)
        for p in primes:
            p = int(p)
            start = max(p, (lo + p - 1) // p * p)
            if start < hi:
                idx = np.arange(start - lo, hi - lo, p)
                m[idx] = -m[idx]
                val[idx] //= p
            p2 = p * p
            start2 = (lo + p2 - 1) // p2 * p2
            if start2 < hi:
                m[np.arange(start2 - lo, hi - lo, p2)] = 0
        # a residual factor > 1 is a single prime beyond sqrt(limit)
        big = val > 1
        m[big] = -m[big]
        mu[lo:hi] = m
    mu[0] = 0
    if limit >= 1:
        mu[1] = 1
    return mu


class MobiusTable:
    """mu on [0, limit] with cached Mertens prefix sums."""

    def __init__(self, limit: int, block: int = 1 << 16):
        self.limit = limit
        self.values = mobius_sieve(limit, block)
        self._mertens = None

    def mu(self, n: int) -> int:
        return int(self.values[n])

    def mertens(self, n: int) -> int:
        if self._mertens is None:
            self._mertens = np.cumsum(self.values.astype(np.int64))
        return int(self._mertens[n])


# -- resonance index sets --------------------------------------------------


def _gap_exceeds(qk: int, qk1: int, expo: float) -> bool:
    # q_k ** expo < q_{k+1}, exact for integral exponents
    if float(expo).is_integer():
        return qk ** int(expo) < qk1
    return expo * math.log(qk) < math.log(qk1)


@dataclass
class IndexSets:
    """Resonance bookkeeping for one rotation number.

    wide_gap_idx holds indices m with q_m > 1 and q_{m+1} >= q_m^{2+2 theta};
    working_idx is the subsequence the decay experiment draws from (the wide
    gaps themselves when any is present in the window, otherwise the tail of
    all indices, flagged by wide_gap_seen).  power_gap_idx holds indices l
    with q_l > 1 and q_l^B < q_{l+1}; these are exactly the blocks whose
    multiples are resonant.
    """

    rn: RotationNumber
    theta: float
    B: float
    depth: int
    wide_gap_idx: list = field(default_factory=list)
    working_idx: list = field(default_factory=list)
    wide_gap_seen: bool = False
    power_gap_idx: list = field(default_factory=list)

    def __post_init__(self):
        if self.rn.is_rational:
            raise ConfigError("resonance index sets need an irrational rotation number")
        if self.theta <= 0 or self.B <= 1:
            raise ConfigError("need theta > 0 and B > 1")
        try:
            self.depth = self.rn.ensure_depth(self.depth)
        except PrecisionExhausted:
            # explicit streams classify over whatever window they carry
            self.depth = self.rn.available_depth
        if self.depth < 2:
            raise ConfigError("need at least two partial quotients to classify gaps")
        qs = self.rn.denominators(self.depth)
        for m in range(1, len(qs) - 1):
            if qs[m] > 1:
                if qs[m + 1] >= qs[m] ** (2 + 2 * self.theta):
                    self.wide_gap_idx.append(m)
                if _gap_exceeds(qs[m], qs[m + 1], self.B):
                    self.power_gap_idx.append(m)
        self.wide_gap_seen = bool(self.wide_gap_idx)
        if self.wide_gap_seen:
            self.working_idx = list(self.wide_gap_idx)
        else:
            m0 = next((m for m in range(1, len(qs)) if qs[m] > 1), 1)
            self.working_idx = list(range(m0, len(qs) - 1))

    @property
    def denominators(self):
        return self.rn.denominators(self.depth)

    def resonant(self, m: int) -> bool:
        """Membership in the resonant set: 0, or a multiple of some q_k
        lying in [q_k, q_{k+1}) with q_k^B < q_{k+1} and q_k > 1."""
        if m == 0:
            return True
        a = abs(m)
        d = self.depth
        qs = self.rn.denominators(d)
        while qs[-1] <= a:
            # need the window [q_k, q_{k+1}) containing a; extending an
            # exhausted stream raises PrecisionExhausted
            d += 8
            self.rn.ensure_depth(d)
            qs = self.rn.denominators(d)
        k = bisect_right(qs, a) - 1
        if qs[k] <= 1:
            return False
        return _gap_exceeds(qs[k], qs[k + 1], self.B) and a % qs[k] == 0

    def resonant_freqs(self, fmax: int):
        return {m for m in range(-fmax, fmax + 1) if m != 0 and self.resonant(m)}


def classify_index_sets(rn: RotationNumber, theta: float, B: float,
                        depth: int = 40) -> IndexSets:
    """Build the resonance index sets over the first `depth` quotients."""
    return IndexSets(rn, theta, B, depth)


def dirichlet_search(qm: int, targets, theta: float):
    """Smallest v in [1, floor(qm**(theta/2))] driving every target near an
    integer: max_i ||v x_i||^2 <= qm^{-theta/3}.

    Falls back to the argmin v with found=False when no v qualifies.
    """
    if qm < 1 or theta <= 0:
        raise SearchRangeError(f"empty search range (qm={qm}, theta={theta})")
    v_max = max(1, int(qm ** (theta / 2) + 1e-12))
    thresh = qm ** (-theta / 3)
    best_v, best_worst = None, None
    for v in range(1, v_max + 1):
        worst = max(nearest_frac(v * x)[1] ** 2 for x in targets) if targets else 0.0
        if worst <= thresh:
            return {"v": v, "found": True, "worst": worst,
                    "v_max": v_max, "threshold": thresh}
        if best_worst is None or worst < best_worst:
            best_v, best_worst = v, worst
    return {"v": best_v, "found": False, "worst": best_worst,
            "v_max": v_max, "threshold": thresh}
