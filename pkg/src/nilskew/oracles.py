"""Independent recomputation routes for everything the closed forms claim.

Every function here deliberately avoids the code path it checks: Mobius by
trial division instead of the sieve, exponential sums by brute-force double
loops instead of telescoped closed forms, iterates by literal repeated
stepping, energies by coefficient space instead of quadrature, rotations by
50-digit mpmath instead of integer convergent proxies.  The CHECKS registry
at the bottom drives the oracle-check CLI subcommand.
"""

import cmath
import math
import random
from dataclasses import dataclass

import mpmath
import numpy as np

from .dynamics import (SkewSystem, conjugated_step, conjugation,
                       conjugation_inv, coupling_quadratic_coeffs,
                       coupling_sum_direct, iterate, step,
                       triangle_sum_diag, triangle_sum_offdiag)
from .heisenberg import NilPoint, PhasePoint, dist_phase
from .numtheory import RotationNumber, mobius_sieve, nearest_frac
from .periodic import PeriodicFn
from .rigidity import mean_square, wrapped_mean_square


# -- elementary oracles ----------------------------------------------------------

def mu_trial_division(n: int) -> int:
    """Mobius mu by trial division, no sieve."""
    if n < 1:
        raise ValueError("mu is defined on positive integers")
    if n == 1:
        return 1
    out = 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            out = -out
        d += 1
    if n > 1:
        out = -out
    return out


def mertens_trial(n: int) -> int:
    return sum(mu_trial_division(k) for k in range(1, n + 1))


def brute_triangle_sum(u: int, v: int, n: int, alpha: RotationNumber) -> complex:
    """The raw double sum over 0 <= r < j < n of e((u r + v j) alpha)."""
    tot = 0j
    for j in range(1, n):
        for r in range(j):
            tot += alpha.e_at(u * r + v * j)
    return tot


def brute_ergodic_sum(f: PeriodicFn, alpha: RotationNumber, n: int, t: float):
    re, im = [], []
    af = alpha.as_float
    for j in range(n):
        v = complex(f.eval(t + j * af))
        re.append(v.real)
        im.append(v.imag)
    s = complex(math.fsum(re), math.fsum(im))
    return s.real if f.real_valued else s


def repeated_step(sys: SkewSystem, p: PhasePoint, n: int) -> PhasePoint:
    for _ in range(n):
        p = step(sys, p)
    return p


def repeated_conjugated_step(sys: SkewSystem, p: PhasePoint, n: int) -> PhasePoint:
    for _ in range(n):
        p = conjugated_step(sys, p)
    return p


def parseval_energy(fn: PeriodicFn) -> float:
    """Mean square of a trig polynomial straight from its coefficients."""
    return abs(fn.mean) ** 2 + math.fsum(abs(c) ** 2 for c in fn.coeffs.values())


def dense_wrapped_mean_square(fn: PeriodicFn, grid_m: int = 300_000) -> float:
    """One fixed dense grid, no refinement loop; reference for the adaptive
    wrapped quadrature."""
    g = np.arange(grid_m) / grid_m
    v = np.asarray(fn.eval_np(g))
    v = v.real if np.iscomplexobj(v) else v
    w = v - np.ceil(v - 0.5)
    return float(np.mean(w * w))


def mp_orbit_fracs(alpha_expr: str, t0: float, count: int, dps: int = 50):
    """Orbit of t0 under t -> t + alpha mod 1 in dps-digit arithmetic.

    alpha_expr is evaluated with mpmath's sqrt/mpf in scope, e.g.
    '(sqrt(mpf(5))-1)/2'."""
    with mpmath.workdps(dps):
        a = eval(alpha_expr, {"sqrt": mpmath.sqrt, "mpf": mpmath.mpf})
        t = mpmath.mpf(t0)
        out = []
        for _ in range(count):
            out.append(float(t))
            t = (t + a) % 1
        return out


# -- the check registry -------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    name: str
    ok: bool
    detail: str


def _golden():
    return RotationNumber.from_surd(-1, 1, 5, 2)


def _rand_fn(rng, K=3, scale=0.4, mean=0.0):
    coeffs = {}
    for m in range(1, K + 1):
        c = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale)) / (m * m)
        coeffs[m] = c
        coeffs[-m] = c.conjugate()
    return PeriodicFn(coeffs, mean)


def _rand_system(rng, alpha=None):
    if alpha is None:
        alpha = _golden()
    return SkewSystem(alpha, _rand_fn(rng), _rand_fn(rng),
                      _rand_fn(rng, mean=rng.uniform(-0.5, 0.5)))


def check_mobius(seed=0) -> OracleResult:
    mu = mobius_sieve(10_000)
    bad = [n for n in range(1, 3000) if int(mu[n]) != mu_trial_division(n)]
    mert = int(np.sum(mu[1:10_001].astype(np.int64)))
    ok = not bad and mert == -23
    return OracleResult("mobius", ok,
                        f"trial-division mismatches={len(bad)}, M(1e4)={mert}")


def check_triangle_sums(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    for alpha in (_golden(), RotationNumber.from_surd(-1, 1, 2, 1)):
        for _ in range(25):
            u = rng.choice([m for m in range(-5, 6) if m != 0])
            v = rng.choice([m for m in range(-5, 6) if m != 0])
            n = rng.randint(2, 90)
            brute = brute_triangle_sum(u, v, n, alpha)
            closed = (triangle_sum_diag(u, n, alpha) if u + v == 0
                      else triangle_sum_offdiag(u, v, n, alpha))
            worst = max(worst, abs(closed - brute))
    return OracleResult("triangle-sums", worst < 1e-9, f"worst |closed-brute|={worst:.3e}")


def check_iterate(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(8):
        sys_ = _rand_system(rng)
        p = PhasePoint(rng.random(), NilPoint.from_coords(
            rng.random(), rng.random(), rng.random()))
        n = rng.randint(2, 120)
        worst = max(worst, dist_phase(iterate(sys_, p, n),
                                      repeated_step(sys_, p, n)))
    return OracleResult("iterate", worst < 1e-9, f"worst dist={worst:.3e}")


def check_parseval(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(20):
        fn = _rand_fn(rng, K=rng.randint(1, 6), scale=1.2, mean=rng.uniform(-1, 1))
        worst = max(worst, abs(mean_square(fn) - parseval_energy(fn)))
    return OracleResult("parseval", worst < 1e-12,
                        f"worst |quadrature-coefficients|={worst:.3e}")


def check_wrapped_quadrature(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(4):
        fn = _rand_fn(rng, K=2, scale=1.3)
        worst = max(worst, abs(wrapped_mean_square(fn)
                               - dense_wrapped_mean_square(fn)))
    small = PeriodicFn.cosine(amp=0.3)
    ident = abs(wrapped_mean_square(small) - mean_square(small))
    ok = worst < 1e-5 and ident < 1e-12
    return OracleResult("wrapped-quadrature", ok,
                        f"vs dense={worst:.3e}, small-amplitude identity={ident:.3e}")


def check_rational_coupling(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    for p_, q_ in [(1, 2), (2, 5), (3, 7)]:
        alpha = RotationNumber.from_rational(p_, q_)
        sys_ = SkewSystem(alpha, _rand_fn(rng, scale=1.0),
                          _rand_fn(rng, scale=1.0), PeriodicFn.zero())
        t = rng.random()
        for b in range(q_):
            A2, A1, A0 = coupling_quadratic_coeffs(sys_, t, b)
            for N in range(1, 4):
                n = N * q_ + b
                pred = A2 * n * n + A1 * n + A0
                worst = max(worst, abs(pred - coupling_sum_direct(sys_, t, n)))
    return OracleResult("rational-coupling", worst < 1e-11,
                        f"worst |quadratic-direct|={worst:.3e}")


def check_conjugation(seed=0) -> OracleResult:
    rng = random.Random(seed)
    worst = 0.0
    sys_ = _rand_system(rng)
    for _ in range(40):
        p = PhasePoint(rng.random(), NilPoint.from_coords(
            rng.random(), rng.random(), rng.random()))
        lhs = conjugated_step(sys_, p)
        rhs = conjugation_inv(sys_, step(sys_, conjugation(sys_, p)))
        worst = max(worst, dist_phase(lhs, rhs))
    return OracleResult("conjugation", worst < 1e-8, f"worst dist={worst:.3e}")


def check_rotation_orbit(seed=0) -> OracleResult:
    golden = _golden()
    got = golden.orbit_fracs(0.25, 400)
    ref = mp_orbit_fracs("(sqrt(mpf(5))-1)/2", 0.25, 400)
    worst = max(abs(a - b) for a, b in zip(got, ref))
    # wrapped comparison: points straddling 0 are the same angle
    worst = min(worst, max(abs(nearest_frac(a - b)[1]) for a, b in zip(got, ref)))
    return OracleResult("rotation-orbit", worst < 1e-13,
                        f"worst |orbit - mpmath|={worst:.3e}")


CHECKS = {
    "mobius": check_mobius,
    "triangle-sums": check_triangle_sums,
    "iterate": check_iterate,
    "parseval": check_parseval,
    "wrapped-quadrature": check_wrapped_quadrature,
    "rational-coupling": check_rational_coupling,
    "conjugation": check_conjugation,
    "rotation-orbit": check_rotation_orbit,
}


def run_checks(names=None, seed: int = 0):
    chosen = list(CHECKS) if not names else list(names)
    out = []
    for name in chosen:
        if name not in CHECKS:
            raise KeyError(f"unknown oracle check {name!r}")
        out.append(CHECKS[name](seed))
    return out


if __name__ == "__main__":
    for r in run_checks():
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:20s} {r.detail}")
