"""Rigidity integrals, drift pairing, the decay experiment, and Mobius
correlation runs.

The quantities here all live on the base circle: mean squares of the
coordinate Birkhoff sums, the pairing that controls the central drift, and
the Dirichlet-window experiment that measures how fast the return-time
integrals decay along the working denominators.  Correlation runs stream the
orbit with incremental cocycle updates, so a million points cost a million
function evaluations, not a million closed-form solves.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import birkhoff_sums, triangle_sum_diag
from .errors import ConfigError, GridResolutionError, SmallDivisorError
from .heisenberg import PhasePoint
from .numtheory import MobiusTable, dirichlet_search, nearest_frac_np
from .periodic import PeriodicFn, one_minus_e

TWO_PI = 2.0 * math.pi

DECAY_HEADER = ("m", "q_m", "v_m", "s_m", "n",
                "I_Phi", "I_xi", "I_Omega", "I_H", "rhs", "budget")
CORRELATION_HEADER = ("N_checkpoint", "re", "im", "abs")


# -- quadrature ---------------------------------------------------------------

def mean_square(fn: PeriodicFn, grid_m=None) -> float:
    """Integral of |fn|^2 over one period by the equispaced trapezoid rule.

    For a trigonometric polynomial the rule is exact as soon as the grid
    resolves every frequency of |fn|^2, i.e. grid_m >= 2*max_freq + 1."""
    needed = 2 * fn.max_freq + 1
    if grid_m is None:
        grid_m = max(needed, 64)
    if grid_m < needed:
        raise GridResolutionError(
            f"grid {grid_m} under the Nyquist count {needed} for |f|^2")
    g = np.arange(grid_m) / grid_m
    v = np.asarray(fn.eval_np(g))
    return float(np.mean(np.abs(v) ** 2))


def _real_values(fn: PeriodicFn, grid) -> np.ndarray:
    v = np.asarray(fn.eval_np(grid))
    if np.iscomplexobj(v):
        scale = 1.0 + float(np.max(np.abs(v.real)))
        if float(np.max(np.abs(v.imag))) > 1e-8 * scale:
            raise ConfigError("wrapped integrals are defined for real-valued "
                              "functions only")
        v = v.real
    return v


def wrapped_mean_square(fn: PeriodicFn, grid_m: int = 4096,
                        tol: float = 1e-8, max_grid: int = 1 << 22) -> float:
    """Integral of ||fn(t)||^2, the distance-to-nearest-integer square.

    Wrapping destroys the trig-polynomial structure, so no finite grid is
    exact; the grid doubles until two successive refinements agree to tol.
    Exception: when the certified sup bound stays within [-1/2, 1/2] the
    wrap is the identity and the Nyquist rule is exact, which matters at
    deep denominators where the true integral sits far below tol."""
    if fn.real_valued and fn.sup_bound() <= 0.5:
        return mean_square(fn)
    prev = None
    m = grid_m
    while m <= max_grid:
        g = np.arange(m) / m
        w = nearest_frac_np(_real_values(fn, g))
        val = float(np.mean(w * w))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
        m *= 2
    raise GridResolutionError(
        f"wrapped quadrature did not settle to {tol} below grid {max_grid}")


# -- reports --------------------------------------------------------------------

@dataclass(frozen=True)
class RigidityReport:
    """Per-n mean-square data and the aggregate right side of the target
    rigidity bound."""
    n: int
    I_Phi: float
    I_xi: float
    I_Omega: float
    I_H: float
    bound_rhs: float
    lambda_qm: complex | None = None
    Sigma_n0: complex | None = None
    dirichlet_v: int | None = None
    dirichlet_found: bool | None = None


def rigidity_integrals(sys, n: int, grid_m=None) -> RigidityReport:
    """Mean squares of the four cocycle sums at time n, plus the aggregate
    ||n alpha||^2 + I_Phi + I_xi + I_Omega + I_H.

    The horizontal sums are trig polynomials and integrate exactly on a
    Nyquist grid; the two central sums sit inside a distance-to-integers and
    go through the self-refining wrapped quadrature."""
    b = birkhoff_sums(sys, n)
    i_phi = mean_square(b.Phi, grid_m)
    i_xi = mean_square(b.xi, grid_m)
    i_omega = wrapped_mean_square(b.Omega)
    i_h = wrapped_mean_square(b.H)
    rhs = sys.alpha.dist_to_int(n) ** 2 + i_phi + i_xi + i_omega + i_h
    return RigidityReport(n=n, I_Phi=i_phi, I_xi=i_xi, I_Omega=i_omega,
                          I_H=i_h, bound_rhs=rhs)


# -- drift pairing and the Sigma decomposition ---------------------------------

def drift_pairing(sys, m_idx: int) -> complex:
    """Pairing of the phi and eta spectra against the small divisors, cut at
    the m-th denominator: sum over 0 < |u| < q_m of
    phi_hat(u) eta_hat(-u) / (1 - e(-u alpha))."""
    qs = sys.alpha.denominators(m_idx + 1)
    return _pairing(sys, qs[m_idx], conj_divisor=True)


def drift_pairing_limit(sys) -> complex:
    """The stabilized pairing: same sum over the whole finite spectrum.

    Coincides with drift_pairing(sys, m) once q_m exceeds the spectrum
    width."""
    return _pairing(sys, None, conj_divisor=True)


def sigma_linear_rate(sys, m_idx: int) -> complex:
    """The linear-growth rate of the diagonal sum: sum over 0 < |u| < q_m of
    phi_hat(u) eta_hat(-u) / (1 - e(u alpha))."""
    qs = sys.alpha.denominators(m_idx + 1)
    return _pairing(sys, qs[m_idx], conj_divisor=False)


def _pairing(sys, cutoff, conj_divisor: bool) -> complex:
    total = 0j
    for u, cu in sys.phi.coeffs.items():
        if cutoff is not None and abs(u) >= cutoff:
            continue
        cv = sys.eta.coeff(-u)
        if cv == 0:
            continue
        w = -u if conj_divisor else u
        if sys.alpha.hits_integer(w):
            raise SmallDivisorError(f"frequency {w} resonates exactly")
        total += cu * cv / one_minus_e(sys.alpha.signed_frac(w))
    return total


def sigma_decomposition(sys, n: int):
    """Split the central coupling sum H_n into its t-average and the
    oscillating remainder.

    The average comes from the diagonal closed forms (frequencies u, -u of
    phi and eta), computed independently of the H_n coefficients; the
    remainder is H_n with its mean removed.  H_n(t) = Sigma_n0 + Sigma_n(t)
    identically."""
    sigma0 = 0j
    for u, cu in sys.phi.coeffs.items():
        cv = sys.eta.coeff(-u)
        if cv:
            sigma0 += cu * cv * triangle_sum_diag(u, n, sys.alpha)
    h = birkhoff_sums(sys, n).H
    return sigma0, h.drop_mean()


def sigma_residual(sys, n: int, m_idx: int) -> complex:
    """Deviation of Sigma_n0 from pure linear decay: Sigma_n0 plus n times
    the linear rate at the m-th denominator.  Small exactly when the
    averaged coupling is well approximated by -n * rate."""
    sigma0, _ = sigma_decomposition(sys, n)
    return sigma0 + n * sigma_linear_rate(sys, m_idx)


# -- decay experiment -----------------------------------------------------------

@dataclass(frozen=True)
class DecayRow:
    m: int
    q_m: int
    v_m: int
    s_m: int
    n: int
    I_Phi: float
    I_xi: float
    I_Omega: float
    I_H: float
    rhs: float
    budget: float
    dirichlet_found: bool
    lambda_qm: float
    residual_abs: float

    def csv_values(self):
        return (self.m, self.q_m, self.v_m, self.s_m, self.n, self.I_Phi,
                self.I_xi, self.I_Omega, self.I_H, self.rhs, self.budget)


@dataclass(frozen=True)
class DecayReport:
    theta: float
    eps: float
    B: float
    rows: list = field(default_factory=list)

    @property
    def header(self):
        return DECAY_HEADER

    def csv_rows(self):
        return [r.csv_values() for r in self.rows]

    def rhs_by_m(self):
        """Last (deepest-j) rhs value for each working index, in m order."""
        out = {}
        for r in self.rows:
            out[r.m] = r.rhs
        return sorted(out.items())


def _times_mod_one(value, q: int) -> float:
    # exact big-int scaling: float -> exact rational, multiply, reduce mod 1
    v = complex(value)
    if abs(v.imag) > 1e-12 * (1.0 + abs(v)):
        raise ConfigError("Dirichlet targets must be real")
    return float(Fraction(v.real) * q % 1)


def decay_experiment(sys, m_indices=None, max_rows_per_m: int = 8) -> DecayReport:
    """Measure the rigidity bound along the working denominators.

    For each working index m: search the Dirichlet window [1, q_m^{theta/2}]
    for a multiplier v aligning v*q_m*alpha, v*q_m*psi_hat(0) and
    v*q_m*lambda(q_m) near integers; then for each step count n = j*v*q_m
    inside the window |j| < (v q_m)^{theta/10} (j >= 1 always, so every m
    contributes at least one row) compute the aggregate right side and
    compare it against the budget (v q_m)^{-eps/120} with eps = 8 theta."""
    if sys.sets is None:
        raise ConfigError("the decay experiment needs an irrational rotation "
                          "number: the working set is undefined otherwise")
    theta = sys.theta
    eps = 8.0 * theta
    working = list(sys.sets.working_idx)
    if m_indices is not None:
        wanted = set(m_indices)
        working = [m for m in working if m in wanted]
    qs = sys.sets.denominators
    rows = []
    for m in working:
        qm = qs[m]
        lam = drift_pairing(sys, m)
        if abs(lam.imag) > 1e-9 * (1.0 + abs(lam)):
            raise ConfigError("drift pairing is not real; the Dirichlet "
                              "targets need real-valued phi and eta")
        targets = [sys.alpha.signed_frac(qm),
                   _times_mod_one(sys.psi.mean, qm),
                   _times_mod_one(lam.real, qm)]
        found = dirichlet_search(qm, targets, theta)
        v = found["v"]
        rm = v * qm
        jmax = max(1, math.ceil(rm ** (theta / 10.0)) - 1)
        jmax = min(jmax, max_rows_per_m)
        budget = float(rm) ** (-eps / 120.0)
        for j in range(1, jmax + 1):
            s = j * v
            n = s * qm
            rep = rigidity_integrals(sys, n)
            resid = sigma_residual(sys, n, m)
            rows.append(DecayRow(
                m=m, q_m=qm, v_m=v, s_m=s, n=n,
                I_Phi=rep.I_Phi, I_xi=rep.I_xi,
                I_Omega=rep.I_Omega, I_H=rep.I_H,
                rhs=rep.bound_rhs, budget=budget,
                dirichlet_found=bool(found["found"]),
                lambda_qm=lam.real, residual_abs=abs(resid)))
    return DecayReport(theta=theta, eps=eps, B=sys.B, rows=rows)


# -- observables ------------------------------------------------------------------

class CharacterObservable:
    """e(m0 t + m1 x + m2 y): a character of the base circle times the
    horizontal torus.  Constant in the central coordinate, so manifestly
    well defined on the quotient."""

    def __init__(self, m0: int = 0, m1: int = 0, m2: int = 0):
        self.m0, self.m1, self.m2 = int(m0), int(m1), int(m2)

    @property
    def obs_id(self) -> str:
        return f"character({self.m0},{self.m1},{self.m2})"

    def sup_bound(self) -> float:
        return 1.0

    def eval_np(self, ts, xs, ys, zs):
        ph = self.m0 * ts + self.m1 * xs + self.m2 * ys
        return np.exp((TWO_PI * 1j) * ph)


class ThetaObservable:
    """Theta-type observable: e(m0 t + m1 x + m2 y + m z) times the lattice
    sum over b in r + Z of exp(-pi (y+b)^2 - pi delta (y+b)) e(b m x).

    The Gaussian tail |b - r| >= sqrt(|log trunc_eps|) is dropped; the
    truncated sum is invariant under the lattice action up to the same
    trunc_eps.  Well-definedness on the quotient needs m*r integral, which
    the constructor enforces."""

    DELTAS = (0, 1 + 1j, 1 - 1j)

    def __init__(self, m: int = 1, m0: int = 0, m1: int = 0, m2: int = 0,
                 r=Fraction(0), delta=0, trunc_eps: float = 1e-8):
        self.m = int(m)
        self.m0, self.m1, self.m2 = int(m0), int(m1), int(m2)
        self.r = Fraction(r)
        if complex(delta) not in {complex(d) for d in self.DELTAS}:
            raise ConfigError("delta must be 0, 1+1j or 1-1j")
        self.delta = complex(delta)
        if (self.r * self.m).denominator != 1:
            raise ConfigError("theta observable needs m*r integral to be "
                              "well defined on the quotient")
        if not 0 < trunc_eps < 1:
            raise ConfigError("truncation threshold must sit in (0, 1)")
        self.trunc_eps = trunc_eps
        self.kmax = int(math.floor(math.sqrt(abs(math.log(trunc_eps)))))

    @property
    def obs_id(self) -> str:
        d = {0: "0", 1 + 1j: "1+i", 1 - 1j: "1-i"}[complex(self.delta)]
        return (f"theta(m={self.m},m0={self.m0},m1={self.m1},m2={self.m2},"
                f"r={self.r},delta={d})")

    def _lattice_sum(self, xs, ys):
        acc = np.zeros(np.broadcast(xs, ys).shape, dtype=complex)
        r = float(self.r)
        for k in range(-self.kmax, self.kmax + 1):
            b = r + k
            yb = ys + b
            acc += np.exp(-math.pi * yb * yb - math.pi * self.delta * yb
                          + (TWO_PI * 1j) * (b * self.m * xs))
        return acc

    @staticmethod
    def _reduce(xs, ys, zs):
        # the truncation window tracks b near -y, so shift y into [0,1) by
        # the integer lattice element (0, b0, 0); the z coordinate picks up
        # b0 * x under left multiplication
        b0 = -np.floor(ys)
        return ys + b0, zs + b0 * xs

    def sup_bound(self) -> float:
        # |f| is 1-periodic in y (lattice invariance); the character head has
        # modulus 1, so bound the absolute lattice sum on a fine y-grid
        ys = np.arange(2048) / 2048.0
        r = float(self.r)
        tot = np.zeros_like(ys)
        for k in range(-self.kmax, self.kmax + 1):
            yb = ys + (r + k)
            tot += np.exp(-math.pi * yb * yb - math.pi * self.delta.real * yb)
        return float(np.max(tot)) * (1.0 + 1e-6) + self.trunc_eps

    def eval_np(self, ts, xs, ys, zs):
        ts = np.asarray(ts, dtype=float)
        xs = np.asarray(xs, dtype=float)
        yr, zr = self._reduce(xs, np.asarray(ys, dtype=float),
                              np.asarray(zs, dtype=float))
        ph = self.m0 * ts + self.m1 * xs + self.m2 * yr + self.m * zr
        return np.exp((TWO_PI * 1j) * ph) * self._lattice_sum(xs, yr)


class ConstantObservable:
    """f identically equal to a constant; correlation runs against it reduce
    to the Mobius mean."""

    def __init__(self, value=1.0):
        self.value = complex(value)

    @property
    def obs_id(self) -> str:
        return f"const({self.value})"

    def sup_bound(self) -> float:
        return abs(self.value)

    def eval_np(self, ts, xs, ys, zs):
        return np.full(np.shape(ts), self.value, dtype=complex)


# -- Mobius correlations -----------------------------------------------------------

@dataclass(frozen=True)
class CorrelationReport:
    N: int
    obs_id: str
    base: PhasePoint
    checkpoints: list
    sums: list
    sup_bound: float
    threads: int = 1

    @property
    def header(self):
        return CORRELATION_HEADER

    def csv_rows(self):
        return [(c, s.real, s.imag, abs(s))
                for c, s in zip(self.checkpoints, self.sums)]


def _orbit_coordinate_arrays(sys, p0: PhasePoint, N: int):
    """Base points t_1..t_N and unreduced fiber coordinates of the orbit,
    by one pass of incremental cocycle updates (prefix sums)."""
    for f in (sys.phi, sys.eta, sys.psi):
        if not (f.real_valued or f.is_zero):
            raise ConfigError("orbit generation needs real-valued driving "
                              "functions")
    ts = np.asarray(sys.alpha.orbit_fracs(p0.t, N + 1))
    tb = ts[:-1]
    phiv = np.real(sys.phi.eval_np(tb))
    etav = np.real(sys.eta.eval_np(tb))
    psiv = np.real(sys.psi.eval_np(tb))
    Phi = np.concatenate([[0.0], np.cumsum(phiv)])
    Xi = np.concatenate([[0.0], np.cumsum(etav)])
    # central update absorbs the running column sum: Psi_{n+1} = Psi_n +
    # psi(t_n) + Phi_n * eta(t_n)
    Psi = np.concatenate([[0.0], np.cumsum(psiv + Phi[:-1] * etav)])
    g = p0.p.rep
    xs = g.x + Xi[1:]
    ys = g.y + Phi[1:]
    zs = g.z + g.y * Xi[1:] + Psi[1:]
    return ts[1:], xs, ys, zs


def _default_checkpoints(N: int):
    pts = []
    c = 10
    while c < N:
        pts.append(c)
        c *= 10
    pts.append(N)
    return pts


def mobius_correlation(sys, observable, p0: PhasePoint, N: int,
                       checkpoints=None, threads: int = 1,
                       block: int = 1 << 18) -> CorrelationReport:
    """Partial sums (1/N') sum_{n <= N'} mu(n) f(S^n p0) at the checkpoints.

    The orbit is generated once by prefix sums; the observable is evaluated
    over fixed-size blocks (in a thread pool when threads > 1) and reduced
    in block order, so results do not depend on the thread count."""
    if N < 1:
        raise ConfigError("need N >= 1")
    if checkpoints is None:
        checkpoints = _default_checkpoints(N)
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if not checkpoints or checkpoints[0] < 1 or checkpoints[-1] > N:
        raise ConfigError("checkpoints must sit in [1, N]")
    mu = MobiusTable(N).values
    ts, xs, ys, zs = _orbit_coordinate_arrays(sys, p0, N)

    spans = [(s, min(s + block, N)) for s in range(0, N, block)]

    def eval_block(span):
        s, e = span
        vals = observable.eval_np(ts[s:e], xs[s:e], ys[s:e], zs[s:e])
        vals = np.asarray(vals, dtype=complex) * mu[s + 1:e + 1]
        return np.cumsum(vals)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cums = list(pool.map(eval_block, spans))
    else:
        cums = [eval_block(sp) for sp in spans]

    sums = []
    total = 0j
    ci = 0
    for (s, e), cum in zip(spans, cums):
        while ci < len(checkpoints) and checkpoints[ci] <= e:
            c = checkpoints[ci]
            sums.append((total + complex(cum[c - s - 1])) / c)
            ci += 1
        total += complex(cum[-1])
    return CorrelationReport(N=N, obs_id=observable.obs_id, base=p0,
                             checkpoints=checkpoints, sums=sums,
                             sup_bound=observable.sup_bound(),
                             threads=threads)
