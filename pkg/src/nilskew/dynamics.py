"""The skew product over a circle rotation, its closed-form iterates, the
coupling double sums, rational-denominator structure, and the conjugation
that removes non-resonant frequencies.

One application multiplies the fiber by M(t) with top-middle phi(t),
middle-right eta(t), top-right psi(t); n applications multiply by the matrix
with entries Phi_n, xi_n, Psi_n = Omega_n + H_n, where Phi, xi, Omega are
plain ergodic sums and H_n is the triangular double sum coupling phi and eta.
Each has a closed form over the finite spectra whose cost is independent of
n; a direct streaming path provides both an oracle and the fallback when a
rational rotation number kills a divisor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SmallDivisorError
from .heisenberg import HeisElt, NilPoint, PhasePoint, inv, mul
from .numtheory import IndexSets, RotationNumber, classify_index_sets
from .periodic import PeriodicFn, ResonantSplit, one_minus_e, split_resonant

# epsilon = 0.009, theta = epsilon / 8, B = 2 + 16 * theta
DEFAULT_EPS = 0.009
DEFAULT_THETA = DEFAULT_EPS / 8
DEFAULT_B = 2 + 16 * DEFAULT_THETA


def _nonzero_divisor(alpha: RotationNumber, m: int) -> complex:
    if alpha.hits_integer(m):
        raise SmallDivisorError(f"e({m} alpha) = 1 exactly; no geometric closed form")
    return one_minus_e(alpha.signed_frac(m))


def geometric_sum(m: int, n: int, alpha: RotationNumber) -> complex:
    """sum_{r=0}^{n-1} e(m r alpha) in closed form; n when e(m alpha) = 1."""
    if alpha.hits_integer(m):
        return complex(n)
    return one_minus_e(alpha.signed_frac(m * n)) / one_minus_e(alpha.signed_frac(m))


def triangle_sum_diag(u: int, n: int, alpha: RotationNumber) -> complex:
    """sum_{j=1}^{n-1} sum_{r=0}^{j-1} e(u (r - j) alpha).

    Closed form (1/(1-e(u a))) * [ (1-e(-n u a))/(1-e(-u a)) - n ]; counts
    n(n-1)/2 when e(u alpha) = 1."""
    if alpha.hits_integer(u):
        return complex(n * (n - 1) / 2)
    a = one_minus_e(alpha.signed_frac(u))
    am = one_minus_e(alpha.signed_frac(-u))
    anm = one_minus_e(alpha.signed_frac(-u * n))
    return (anm / am - n) / a


def triangle_sum_offdiag(u: int, v: int, n: int, alpha: RotationNumber,
                         branch: str = "auto") -> complex:
    """sum_{j=1}^{n-1} sum_{r=0}^{j-1} e((u r + v j) alpha) for u + v != 0.

    Two algebraically equal closed forms exist; each keeps a different
    divisor out of the outer denominator, so the default picks the branch
    whose outer divisor is the better conditioned one (the larger of
    ||u alpha||, ||v alpha||).  branch in {"auto", "w1", "w2"}.
    """
    if u + v == 0:
        return triangle_sum_diag(u, n, alpha)
    au = _nonzero_divisor(alpha, u)
    av = _nonzero_divisor(alpha, v)
    aw = _nonzero_divisor(alpha, u + v)
    anv = one_minus_e(alpha.signed_frac(v * n))
    anu = one_minus_e(alpha.signed_frac(u * n))
    anw = one_minus_e(alpha.signed_frac((u + v) * n))
    if branch == "auto":
        branch = "w1" if alpha.dist_to_int(u) >= alpha.dist_to_int(v) else "w2"
    if branch == "w1":
        return (anv / av - anw / aw) / au
    if branch == "w2":
        ev = alpha.e_at(v)
        env = alpha.e_at(v * n)
        return (anw / aw * ev - anu / au * env) / av
    raise ConfigError(f"unknown branch {branch!r}")


class SkewSystem:
    """Immutable bundle: rotation number, the three driving polynomials, and
    the derived resonant-split data.

    phi and eta must have zero mean; psi's mean is free.  For an irrational
    rotation number the constructor builds the index sets, both splits, the
    top-right correction omega = psi + g_phi * eta - phi_plus * (g_eta shifted
    by alpha), and its split.  Rational rotation numbers skip all split
    machinery (the resonance classification is undefined there); the
    polynomial structure of that regime lives in rational_birkhoff_sum and
    coupling_quadratic_coeffs instead.
    """

    def __init__(self, alpha: RotationNumber, phi: PeriodicFn, eta: PeriodicFn,
                 psi: PeriodicFn, B: float = DEFAULT_B, theta: float = DEFAULT_THETA,
                 depth: int = 40):
        if abs(phi.mean) > 1e-15 or abs(eta.mean) > 1e-15:
            raise ConfigError("phi and eta must have zero mean")
        self.alpha = alpha
        self.phi = phi
        self.eta = eta
        self.psi = psi
        self.B = B
        self.theta = theta
        self.sets: IndexSets | None = None
        self.split_phi: ResonantSplit | None = None
        self.split_eta: ResonantSplit | None = None
        self.omega: PeriodicFn | None = None
        self.split_omega: ResonantSplit | None = None
        self._plus: SkewSystem | None = None
        if not alpha.is_rational:
            self.sets = classify_index_sets(alpha, theta, B, depth)
            self.split_phi = split_resonant(phi, self.sets, alpha)
            self.split_eta = split_resonant(eta, self.sets, alpha)
            g_phi = self.split_phi.cobound
            g_eta = self.split_eta.cobound
            self.omega = (psi + g_phi.product(eta)
                          - self.split_phi.plus.product(g_eta.shifted(alpha)))
            self.split_omega = split_resonant(self.omega, self.sets, alpha)

    # -- conjugation data -----------------------------------------------------

    def _need_splits(self):
        if self.sets is None:
            raise ConfigError("resonant machinery is undefined for rational "
                              "rotation numbers")

    def conj_elt(self, t: float) -> HeisElt:
        """The fiber factor of the conjugating map at base point t."""
        self._need_splits()
        return HeisElt(self.split_eta.cobound.eval(t),
                       self.split_phi.cobound.eval(t),
                       self.split_omega.cobound.eval(t))

    def plus_system(self) -> "SkewSystem":
        """The conjugated system: only resonant frequencies survive."""
        self._need_splits()
        if self._plus is None:
            self._plus = SkewSystem(self.alpha, self.split_phi.plus,
                                    self.split_eta.plus, self.split_omega.plus,
                                    self.B, self.theta, depth=self.sets.depth)
        return self._plus

    def sup_data(self):
        """(sup bound of phi_plus, sup bound of eta_plus) for grid scales."""
        self._need_splits()
        return self.split_phi.plus.sup_bound(), self.split_eta.plus.sup_bound()


def make_system(alpha, phi=None, eta=None, psi=None, **kw) -> SkewSystem:
    z = PeriodicFn.zero()
    return SkewSystem(alpha, phi or z, eta or z, psi or z, **kw)


# -- single step and closed-form iterates -------------------------------------


def step(sys: SkewSystem, p: PhasePoint) -> PhasePoint:
    t = p.t
    m = HeisElt(sys.eta.eval(t), sys.phi.eval(t), sys.psi.eval(t))
    return PhasePoint((t + sys.alpha.as_float) % 1.0, p.p.shifted(m))


def direct_cocycle_sums(sys: SkewSystem, t: float, n: int):
    """(Phi_n, xi_n, Psi_n) at t by O(n) streaming; the universal oracle.

    Psi accumulates via Psi_{j+1} = Psi_j + psi(t_j) + Phi_j * eta(t_j),
    mirroring the group multiplication exactly."""
    ts = sys.alpha.orbit_fracs(t, max(n, 1))
    phi_v = sys.phi.eval_np(ts)
    eta_v = sys.eta.eval_np(ts)
    psi_v = sys.psi.eval_np(ts)
    Phi = 0.0
    Psi = 0.0
    for j in range(n):
        Psi += psi_v[j] + Phi * eta_v[j]
        Phi += phi_v[j]
    xi = float(np.sum(eta_v[:n]))
    return Phi, xi, Psi


@dataclass(frozen=True)
class BirkhoffSums:
    """Closed-form evaluators for the n-fold fiber entries.

    Phi, xi, Omega are the plain ergodic sums of phi, eta, psi; H is the
    coupling double sum, whose mean is the frequency-diagonal constant and
    whose oscillating part is sigma_t.  Psi_n = Omega_n + H_n.
    """

    n: int
    Phi: PeriodicFn
    xi: PeriodicFn
    Omega: PeriodicFn
    H: PeriodicFn

    @property
    def sigma0(self) -> complex:
        return self.H.mean

    def sigma_t(self) -> PeriodicFn:
        return self.H.drop_mean()

    def fiber(self, t: float) -> HeisElt:
        return HeisElt(_re(self.xi.eval(t)), _re(self.Phi.eval(t)),
                       _re(self.Omega.eval(t)) + _re(self.H.eval(t)))


def _re(v) -> float:
    # closed forms of real data carry only rounding-level imaginary residue
    return v.real if isinstance(v, complex) else float(v)


def _ergodic_sum_fn(f: PeriodicFn, n: int, alpha: RotationNumber) -> PeriodicFn:
    coeffs = {m: c * geometric_sum(m, n, alpha) for m, c in f.coeffs.items()}
    return PeriodicFn(coeffs, n * f.mean)


def birkhoff_sums(sys: SkewSystem, n: int) -> BirkhoffSums:
    """Assemble all closed forms; cost depends on the spectra, not on n.

    Raises SmallDivisorError when a rational rotation number makes a needed
    divisor vanish (callers fall back to the streaming path)."""
    if n < 1:
        raise ConfigError("need n >= 1")
    alpha = sys.alpha
    Phi = _ergodic_sum_fn(sys.phi, n, alpha)
    xi = _ergodic_sum_fn(sys.eta, n, alpha)
    Omega = _ergodic_sum_fn(sys.psi, n, alpha)
    hc: dict = {}
    hmean = 0j
    for u, cu in sys.phi.coeffs.items():
        for v, cv in sys.eta.coeffs.items():
            w = triangle_sum_offdiag(u, v, n, alpha) if u + v else \
                triangle_sum_diag(u, n, alpha)
            term = cu * cv * w
            if u + v == 0:
                hmean += term
            else:
                hc[u + v] = hc.get(u + v, 0j) + term
    H = PeriodicFn(hc, hmean)
    return BirkhoffSums(n, Phi, xi, Omega, H)


def iterate(sys: SkewSystem, p: PhasePoint, n: int) -> PhasePoint:
    """n-fold application in closed form (one canonicalization at the end).

    Rational rotation numbers take the streaming path throughout: correct for
    every n, and the only generally valid route when divisors vanish."""
    if n < 1:
        raise ConfigError("need n >= 1")
    t = p.t
    if sys.alpha.is_rational:
        Phi, xi, Psi = direct_cocycle_sums(sys, t, n)
        Y = HeisElt(xi, Phi, Psi)
    else:
        Y = birkhoff_sums(sys, n).fiber(t)
    t_n = (t + sys.alpha.times(n)) % 1.0
    return PhasePoint(t_n, p.p.shifted(Y))


# -- rational rotation numbers: polynomial structure ---------------------------


def rational_birkhoff_sum(f: PeriodicFn, alpha: RotationNumber, n: int, t: float):
    """C_f(n, t) = sum_{r<n} f(t + r p/q) via the periodic decomposition
    C_f(n,t) = (n - b)/q * C_f(q, t) + C_f(b, t) with b = n mod q."""
    p, q = alpha.rational_pq
    b = n % q
    offs = alpha.orbit_fracs(t, q)
    vals = f.eval_np(offs)
    c_q = float(np.sum(vals)) if f.real_valued else complex(np.sum(vals))
    c_b = float(np.sum(vals[:b])) if f.real_valued else complex(np.sum(vals[:b]))
    return (n - b) // q * c_q + c_b


def coupling_quadratic_coeffs(sys: SkewSystem, t: float, b: int):
    """Coefficients (A2, A1, A0) with H_n(t) = A2 n^2 + A1 n + A0 exactly for
    every n = b (mod q), n >= 1, at rational alpha = p/q.

    The class-free claim is false: the coefficients genuinely depend on the
    residue b, so the caller fixes it."""
    p, q = sys.alpha.rational_pq
    b = b % q
    offs = sys.alpha.orbit_fracs(t, q)
    phi_v = sys.phi.eval_np(offs)
    eta_v = sys.eta.eval_np(offs)
    # prefix sums C_phi(i, t), C_eta(i, t) for i = 0..q
    c_phi = np.concatenate([[0.0], np.cumsum(phi_v)])
    c_eta = np.concatenate([[0.0], np.cumsum(eta_v)])
    p_bar = float(c_phi[q])
    e_bar = float(c_eta[q])
    # a_full = sum_{i=1}^{q-1} C_phi(i,t) eta(t + i alpha); a_rem stops at b-1
    a_full = float(np.dot(c_phi[1:q], eta_v[1:q]))
    a_rem = float(np.dot(c_phi[1:b], eta_v[1:b])) if b >= 2 else 0.0
    e_rem = float(c_eta[b])
    # H_n = (pe/2) N^2 + (a_full - pe/2 + p_bar*e_rem) N + a_rem, N = (n-b)/q
    pe = p_bar * e_bar
    lin = a_full - pe / 2.0 + p_bar * e_rem
    A2 = pe / (2.0 * q * q)
    A1 = lin / q - pe * b / (q * q)
    A0 = a_rem - lin * b / q + pe * b * b / (2.0 * q * q)
    return A2, A1, A0


def coupling_sum_direct(sys: SkewSystem, t: float, n: int) -> float:
    """H_n(t) by direct O(n) streaming; oracle for every rotation number."""
    ts = sys.alpha.orbit_fracs(t, max(n, 1))
    phi_v = sys.phi.eval_np(ts)
    eta_v = sys.eta.eval_np(ts)
    H = 0.0
    Phi = 0.0
    for j in range(1, n):
        Phi += phi_v[j - 1]
        H += Phi * eta_v[j]
    return H


# -- conjugated dynamics --------------------------------------------------------


def conjugation(sys: SkewSystem, p: PhasePoint) -> PhasePoint:
    """R: fiber right-multiplied by the transfer triple at the base point."""
    return PhasePoint(p.t, p.p.shifted(sys.conj_elt(p.t)))


def conjugation_inv(sys: SkewSystem, p: PhasePoint) -> PhasePoint:
    return PhasePoint(p.t, p.p.shifted(inv(sys.conj_elt(p.t))))


def conjugated_step(sys: SkewSystem, p: PhasePoint) -> PhasePoint:
    """One application of the conjugated map: only resonant data acts."""
    sys._need_splits()
    t = p.t
    m1 = HeisElt(sys.split_eta.plus.eval(t), sys.split_phi.plus.eval(t),
                 sys.split_omega.plus.eval(t))
    return PhasePoint((t + sys.alpha.as_float) % 1.0, p.p.shifted(m1))


def conjugated_iterate(sys: SkewSystem, p: PhasePoint, m: int) -> PhasePoint:
    return iterate(sys.plus_system(), p, m)
