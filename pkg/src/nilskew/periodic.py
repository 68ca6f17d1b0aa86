"""Trigonometric polynomials on the circle, resonant splitting, and the
cohomological-equation solver.

Functions are finite Fourier series f(t) = mean + sum c_m e(m t) with
e(x) = exp(2 pi i x).  All identities the laboratory checks are exact for
finite spectra, so truncation questions reduce to sweeping the cutoff.
A declared decay certificate (r, C) asserts |c_m| <= C |m|^-r and is
verified at construction.
"""

from __future__ import annotations

import cmath
import math
from typing import Optional

import numpy as np

from .errors import ConfigError, SmallDivisorError
from .numtheory import RotationNumber

TWO_PI = 2.0 * math.pi


def one_minus_e(x: float) -> complex:
    """1 - e(x), computed as -2i sin(pi x) e^{i pi x}.

    Stable for x near integers, where direct subtraction loses the leading
    digits to cancellation."""
    s = math.sin(math.pi * x)
    return -2j * s * cmath.exp(1j * math.pi * x)


def e_np(x):
    x = np.asarray(x, dtype=float)
    return np.exp((2j * math.pi) * x)


class PeriodicFn:
    """Finite Fourier series with an optional decay certificate.

    coeffs maps nonzero integer frequencies to complex amplitudes; the mean
    rides separately.  Real-valuedness (c_{-m} = conj(c_m), real mean) is
    auto-detected unless declared and is required by the declared flag.
    """

    __slots__ = ("coeffs", "mean", "decay", "real_valued")

    def __init__(self, coeffs=None, mean=0.0, decay=None, real_valued=None):
        cl = {}
        for m, c in (coeffs or {}).items():
            m = int(m)
            if m == 0:
                raise ConfigError("frequency 0 belongs in mean, not coeffs")
            c = complex(c)
            if c != 0:
                cl[m] = c
        self.coeffs = cl
        self.mean = complex(mean)
        self.decay = decay
        if decay is not None:
            r, C = decay
            for m, c in cl.items():
                if abs(c) > C * abs(m) ** (-r) * (1 + 1e-12):
                    raise ConfigError(
                        f"coefficient at {m} violates declared decay class "
                        f"|c| <= {C} * |m|^-{r}")
        if real_valued is None:
            real_valued = abs(self.mean.imag) <= 1e-14 * (1 + abs(self.mean)) and all(
                abs(cl.get(-m, 0) - c.conjugate()) <= 1e-14 * (1 + abs(c))
                for m, c in cl.items())
        elif real_valued:
            bad = [m for m, c in cl.items()
                   if abs(cl.get(-m, 0) - c.conjugate()) > 1e-12 * (1 + abs(c))]
            if bad or abs(self.mean.imag) > 1e-12:
                raise ConfigError(f"declared real-valued but asymmetric at {bad}")
        self.real_valued = bool(real_valued)

    # -- constructors --------------------------------------------------------

    @classmethod
    def zero(cls):
        return cls({}, 0.0)

    @classmethod
    def const(cls, v):
        return cls({}, v)

    @classmethod
    def cosine(cls, m=1, amp=1.0):
        return cls({m: amp / 2.0, -m: amp / 2.0})

    @classmethod
    def sine(cls, m=1, amp=1.0):
        return cls({m: amp / 2j, -m: -amp / 2j})

    # -- queries ---------------------------------------------------------------

    @property
    def max_freq(self) -> int:
        return max((abs(m) for m in self.coeffs), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs and self.mean == 0

    def sup_bound(self) -> float:
        """Upper bound for sup |f|: |mean| + sum |c_m|."""
        return abs(self.mean) + math.fsum(abs(c) for c in self.coeffs.values())

    def coeff(self, m: int) -> complex:
        return self.mean if m == 0 else self.coeffs.get(m, 0j)

    # -- evaluation --------------------------------------------------------------

    def eval(self, t: float):
        """Value at t; compensated accumulation over the spectrum.

        t is reduced mod 1 before any frequency multiplication, so t and
        t + 1 evaluate identically bit for bit."""
        t = t % 1.0
        re = [self.mean.real]
        im = [self.mean.imag]
        for m, c in self.coeffs.items():
            w = c * cmath.exp(TWO_PI * 1j * ((m * t) % 1.0))
            re.append(w.real)
            im.append(w.imag)
        if self.real_valued:
            return math.fsum(re)
        return complex(math.fsum(re), math.fsum(im))

    def eval_np(self, t):
        """Vectorized evaluation; plain summation (adequate at small spectra)."""
        t = np.asarray(t, dtype=float) % 1.0
        acc = np.full(t.shape, self.mean, dtype=complex)
        for m, c in self.coeffs.items():
            acc += c * np.exp((TWO_PI * 1j) * ((m * t) % 1.0))
        if self.real_valued:
            return acc.real
        return acc

    def __call__(self, t):
        return self.eval(t)

    # -- algebra ----------------------------------------------------------------

    def __add__(self, other: "PeriodicFn") -> "PeriodicFn":
        cl = dict(self.coeffs)
        for m, c in other.coeffs.items():
            cl[m] = cl.get(m, 0j) + c
        return PeriodicFn(cl, self.mean + other.mean)

    def __sub__(self, other: "PeriodicFn") -> "PeriodicFn":
        return self + other.scaled(-1.0)

    def scaled(self, a) -> "PeriodicFn":
        return PeriodicFn({m: a * c for m, c in self.coeffs.items()},
                          a * self.mean)

    def product(self, other: "PeriodicFn") -> "PeriodicFn":
        """Exact convolution; the result keeps the full widened spectrum."""
        cl = {}

        def put(m, c):
            if m == 0:
                cl[0] = cl.get(0, 0j) + c
            else:
                cl[m] = cl.get(m, 0j) + c

        for m1, c1 in list(self.coeffs.items()) + [(0, self.mean)]:
            if c1 == 0:
                continue
            for m2, c2 in list(other.coeffs.items()) + [(0, other.mean)]:
                if c2 == 0:
                    continue
                put(m1 + m2, c1 * c2)
        mean = cl.pop(0, 0j)
        return PeriodicFn(cl, mean)

    def shifted(self, alpha: RotationNumber, reps: int = 1) -> "PeriodicFn":
        """t -> f(t + reps * alpha), with e(m reps alpha) from exact data."""
        return PeriodicFn(
            {m: c * alpha.e_at(m * reps) for m, c in self.coeffs.items()},
            self.mean)

    def shifted_by(self, s: float) -> "PeriodicFn":
        return PeriodicFn(
            {m: c * cmath.exp(TWO_PI * 1j * ((m * s) % 1.0))
             for m, c in self.coeffs.items()},
            self.mean)

    def drop_mean(self) -> "PeriodicFn":
        return PeriodicFn(dict(self.coeffs), 0.0)


class ResonantSplit:
    """Partition of a trig polynomial into its resonant and non-resonant
    parts, with the transfer function solving the cohomological equation
    on the non-resonant side: cobound(t + alpha) - cobound(t) = minus(t)."""

    __slots__ = ("plus", "minus", "cobound")

    def __init__(self, plus: PeriodicFn, minus: PeriodicFn, cobound: PeriodicFn):
        self.plus = plus
        self.minus = minus
        self.cobound = cobound


def split_resonant(f: PeriodicFn, sets, alpha: RotationNumber) -> ResonantSplit:
    """Split f by resonant-set membership of each frequency.

    The mean is resonant by definition (0 always belongs).  Non-resonant
    coefficients divide by e(m alpha) - 1 to produce the transfer function.
    """
    plus = {}
    minus = {}
    cob = {}
    for m, c in f.coeffs.items():
        if sets.resonant(m):
            plus[m] = c
        else:
            minus[m] = c
            # e(m a) - 1 computed stably from the exact fractional part:
            # its modulus is 2 sin(pi ||m a||), positive for irrational alpha
            den = -one_minus_e(alpha.signed_frac(m))
            if abs(den) < 1e-300:
                raise SmallDivisorError(
                    f"e({m} alpha) too close to 1 for the transfer function")
            cob[m] = c / den
    return ResonantSplit(PeriodicFn(plus, f.mean),
                         PeriodicFn(minus, 0.0),
                         PeriodicFn(cob, 0.0))


def birkhoff_average_defect(f: PeriodicFn, alpha: RotationNumber, q: int,
                            B: Optional[float] = None, grid_n: int = 256):
    """Worst-case defect of the (q+1)-term ergodic average from the mean.

    Evaluates max over a t-grid of |(1/q) sum_{j=0}^{q} f(t + j alpha) - mean|.
    The sum deliberately runs over q+1 terms with a 1/q normalization (so a
    constant c scores |c|/q, not 0).  Returns the defect together with the
    comparison scale q^-B when B is given.
    """
    if q < 1:
        raise ConfigError("need q >= 1")
    offs = alpha.orbit_fracs(0.0, q + 1)
    ts = np.arange(grid_n, dtype=float) / grid_n
    pts = (ts[:, None] + offs[None, :]) % 1.0
    vals = f.eval_np(pts.ravel()).reshape(grid_n, q + 1)
    avg = vals.sum(axis=1) / q
    defect = float(np.max(np.abs(avg - f.mean)))
    out = {"defect": defect, "q": q}
    if B is not None:
        out["compare"] = q ** (-B)
    return out
