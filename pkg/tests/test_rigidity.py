import math
import random

import numpy as np
import pytest

from nilskew.errors import ConfigError, GridResolutionError
from nilskew.heisenberg import HeisElt, NilPoint, PhasePoint, mul
from nilskew.numtheory import MobiusTable, RotationNumber
from nilskew.periodic import PeriodicFn
from nilskew.dynamics import SkewSystem, birkhoff_sums, geometric_sum
from nilskew.oracles import (brute_ergodic_sum, dense_wrapped_mean_square,
                             parseval_energy, repeated_step)
from nilskew.rigidity import (
    CharacterObservable,
    ConstantObservable,
    DECAY_HEADER,
    ThetaObservable,
    decay_experiment,
    drift_pairing,
    drift_pairing_limit,
    mean_square,
    mobius_correlation,
    rigidity_integrals,
    sigma_decomposition,
    sigma_linear_rate,
    sigma_residual,
    wrapped_mean_square,
)


def golden():
    return RotationNumber.from_surd(-1, 1, 5, 2)


def rand_fn(rng, K=3, scale=0.4, mean=0.0):
    coeffs = {}
    for m in range(1, K + 1):
        c = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale)) / (m * m)
        coeffs[m] = c
        coeffs[-m] = c.conjugate()
    return PeriodicFn(coeffs, mean)


def cos_system(alpha=None, psi=None):
    if alpha is None:
        alpha = golden()
    return SkewSystem(alpha, PeriodicFn.cosine(), PeriodicFn.cosine(),
                      psi if psi is not None else PeriodicFn.sine())


# -- quadrature ----------------------------------------------------------------

def test_mean_square_matches_parseval():
    rng = random.Random(40)
    for _ in range(25):
        fn = rand_fn(rng, K=rng.randint(1, 5), scale=1.5, mean=rng.uniform(-1, 1))
        assert abs(mean_square(fn) - parseval_energy(fn)) < 1e-12


def test_mean_square_nyquist_guard():
    fn = rand_fn(random.Random(41), K=4)
    with pytest.raises(GridResolutionError):
        mean_square(fn, grid_m=8)  # |f|^2 has frequencies up to 8
    assert mean_square(fn, grid_m=9) == pytest.approx(parseval_energy(fn), abs=1e-13)


def test_wrapped_equals_plain_below_half():
    fn = PeriodicFn.cosine(amp=0.49)
    assert abs(wrapped_mean_square(fn) - mean_square(fn)) < 1e-12


def test_wrapped_matches_dense_reference():
    rng = random.Random(42)
    for _ in range(3):
        fn = rand_fn(rng, K=2, scale=1.4)
        assert abs(wrapped_mean_square(fn) - dense_wrapped_mean_square(fn)) < 1e-5


def test_wrapped_rejects_complex_values():
    fn = PeriodicFn({1: 0.4})  # genuinely complex-valued
    with pytest.raises(ConfigError):
        wrapped_mean_square(fn)


# -- rigidity integrals ------------------------------------------------------------

def test_single_frequency_energy_closed_form():
    alpha = golden()
    sys_ = SkewSystem(alpha, PeriodicFn({1: 1.0, -1: 0.0}), PeriodicFn.zero(),
                      PeriodicFn.zero())
    for n in [2, 7, 40]:
        b = birkhoff_sums(sys_, n)
        expect = abs(geometric_sum(1, n, alpha)) ** 2
        assert abs(mean_square(b.Phi) - expect) < 1e-10


def test_rigidity_report_fields():
    rep = rigidity_integrals(cos_system(), 21)
    assert rep.I_Phi >= 0 and rep.I_xi >= 0 and rep.I_Omega >= 0 and rep.I_H >= 0
    s = golden().dist_to_int(21) ** 2 + rep.I_Phi + rep.I_xi + rep.I_Omega + rep.I_H
    assert rep.bound_rhs == pytest.approx(s, rel=1e-15)


def test_rigidity_integrals_trivial_cases():
    assert rigidity_integrals(cos_system(), 1).I_H == pytest.approx(0.0, abs=1e-18)
    # rational alpha, spectrum {+-1}, n a period multiple: the ergodic sums
    # telescope to zero exactly
    alpha = RotationNumber.from_rational(1, 3)
    sys_ = SkewSystem(alpha, PeriodicFn.cosine(), PeriodicFn.sine(),
                      PeriodicFn.zero())
    rep = rigidity_integrals(sys_, 3)
    assert rep.I_Phi == pytest.approx(0.0, abs=1e-25)
    assert rep.I_xi == pytest.approx(0.0, abs=1e-25)


# -- pairings ------------------------------------------------------------------------

def test_drift_pairing_zero_cases():
    alpha = golden()
    z = PeriodicFn.zero()
    assert drift_pairing_limit(SkewSystem(alpha, z, PeriodicFn.cosine(), z)) == 0
    assert drift_pairing_limit(SkewSystem(alpha, PeriodicFn.cosine(), z, z)) == 0
    disjoint = SkewSystem(alpha, PeriodicFn.cosine(1), PeriodicFn.cosine(2), z)
    assert drift_pairing_limit(disjoint) == 0


def test_drift_pairing_cosine_is_quarter():
    # the u and -u small divisors sum to exactly 1, so lambda = |coeff|^2 * 2 ...
    lam = drift_pairing_limit(cos_system())
    assert abs(lam.imag) < 1e-14
    assert abs(lam.real - 0.25) < 1e-14


def test_drift_pairing_stabilizes_beyond_spectrum():
    rng = random.Random(43)
    sys_ = SkewSystem(golden(), rand_fn(rng), rand_fn(rng), PeriodicFn.zero())
    lim = drift_pairing_limit(sys_)
    # q_m = 2 at m=2 cuts the spectrum; q_m >= 5 (m >= 4) sees all of K=3
    assert drift_pairing(sys_, 2) != lim
    for m in range(4, 12):
        assert drift_pairing(sys_, m) == lim


def test_pairing_complement_identity():
    # 1/(1-e(x)) + 1/(1-e(-x)) = 1, so the two pairings sum to the plain
    # coefficient pairing
    rng = random.Random(44)
    sys_ = SkewSystem(golden(), rand_fn(rng), rand_fn(rng), PeriodicFn.zero())
    c0 = sum(c * sys_.eta.coeff(-u) for u, c in sys_.phi.coeffs.items())
    for m in [3, 6, 10]:
        tot = drift_pairing(sys_, m) + sigma_linear_rate(sys_, m)
        qm = golden().denominators(m + 1)[m]
        cut = sum(c * sys_.eta.coeff(-u) for u, c in sys_.phi.coeffs.items()
                  if abs(u) < qm)
        assert abs(tot - cut) < 1e-13
    assert abs(drift_pairing_limit(sys_) + sigma_linear_rate(sys_, 11) - c0) < 1e-13


# -- sigma decomposition ----------------------------------------------------------

def test_sigma_decomposition_identity():
    rng = random.Random(45)
    sys_ = SkewSystem(golden(), rand_fn(rng), rand_fn(rng), PeriodicFn.zero())
    for n in [2, 13, 89]:
        sigma0, sigma_t = sigma_decomposition(sys_, n)
        h = birkhoff_sums(sys_, n).H
        grid = np.arange(256) / 256.0
        resid = h.eval_np(grid) - sigma_t.eval_np(grid)
        assert float(np.var(resid)) < 1e-18
        assert abs(np.mean(resid) - sigma0) < 1e-10
        assert abs(complex(h.mean) - sigma0) < 1e-10


def test_sigma_decomposition_n1():
    sigma0, sigma_t = sigma_decomposition(cos_system(), 1)
    assert sigma0 == 0
    assert sigma_t.is_zero


def test_sigma_residual_shrinks_along_denominators():
    sys_ = cos_system()
    qs = golden().denominators(20)
    vals = [abs(sigma_residual(sys_, qs[m], m)) for m in (6, 10, 14, 18)]
    assert vals[0] > vals[1] > vals[2] > vals[3]


# -- decay experiment ----------------------------------------------------------------

def test_decay_trivial_system():
    z = PeriodicFn.zero()
    rep = decay_experiment(SkewSystem(golden(), z, z, z), m_indices=range(2, 8))
    assert rep.rows
    for r in rep.rows:
        assert r.I_Phi == 0 and r.I_xi == 0 and r.I_Omega == 0 and r.I_H == 0
        assert r.rhs == pytest.approx(golden().dist_to_int(r.n) ** 2, rel=1e-12)
        assert r.budget > 0


def test_decay_rejects_rational():
    z = PeriodicFn.zero()
    sys_ = SkewSystem(RotationNumber.from_rational(2, 5), z, z, z)
    with pytest.raises(ConfigError):
        decay_experiment(sys_)


def test_decay_rejects_complex_pairing():
    sys_ = SkewSystem(golden(), PeriodicFn({1: 0.3}), PeriodicFn.cosine(),
                      PeriodicFn.zero())
    with pytest.raises(ConfigError):
        decay_experiment(sys_, m_indices=[4])


def test_decay_rows_golden_cosine():
    rep = decay_experiment(cos_system(), m_indices=range(2, 12))
    assert [r.m for r in rep.rows] == list(range(2, 12))
    for r in rep.rows:
        # theta default is tiny: the window admits only v=1, j=1
        assert r.v_m == 1 and r.s_m == 1 and r.n == r.q_m
        assert r.dirichlet_found  # threshold ~ q^{-theta/3} is near 1 here
        assert r.lambda_qm == pytest.approx(0.25, abs=1e-12)
        total = (golden().dist_to_int(r.n) ** 2
                 + r.I_Phi + r.I_xi + r.I_Omega + r.I_H)
        assert r.rhs == pytest.approx(total, rel=1e-12)
    assert rep.eps == pytest.approx(8 * rep.theta)
    assert rep.csv_rows()[0][:5] == (2, 2, 1, 1, 2)
    assert rep.header == DECAY_HEADER


def test_decay_m_filter_and_rhs_map():
    rep = decay_experiment(cos_system(), m_indices=[5, 9])
    ms = sorted({r.m for r in rep.rows})
    assert ms == [5, 9]
    assert [m for m, _ in rep.rhs_by_m()] == [5, 9]


# -- observables ----------------------------------------------------------------------

def lattice_shift(x, y, z, a, b, c):
    # left multiplication by the integer element (a, b, c)
    return x + a, y + b, z + c + b * x


def test_character_lattice_invariance():
    rng = random.Random(46)
    obs = CharacterObservable(2, 3, -1)
    for _ in range(50):
        t, x, y, z = (rng.random() for _ in range(4))
        a, b, c = (rng.randint(-3, 3) for _ in range(3))
        xs, ys, zs = lattice_shift(x, y, z, a, b, c)
        v0 = obs.eval_np(np.array([t]), np.array([x]), np.array([y]), np.array([z]))
        v1 = obs.eval_np(np.array([t]), np.array([xs]), np.array([ys]), np.array([zs]))
        assert abs(v0[0] - v1[0]) < 1e-12
    assert obs.sup_bound() == 1.0


def test_theta_lattice_invariance_to_truncation():
    rng = random.Random(47)
    for delta in ThetaObservable.DELTAS:
        obs = ThetaObservable(m=2, m0=1, m1=1, m2=-1, delta=delta)
        for _ in range(25):
            t, x, y, z = (rng.random() for _ in range(4))
            a, b, c = (rng.randint(-2, 2) for _ in range(3))
            xs, ys, zs = lattice_shift(x, y, z, a, b, c)
            v0 = obs.eval_np(np.array([t]), np.array([x]),
                             np.array([y]), np.array([z]))[0]
            v1 = obs.eval_np(np.array([t]), np.array([xs]),
                             np.array([ys]), np.array([zs]))[0]
            assert abs(v0 - v1) < 1e-9


def test_theta_guards_and_truncation_width():
    with pytest.raises(ConfigError):
        ThetaObservable(delta=2.0)
    with pytest.raises(ConfigError):
        ThetaObservable(m=1, r="1/2")  # m*r not an integer
    ThetaObservable(m=2, r="1/2")      # fine: m*r = 1
    assert ThetaObservable(trunc_eps=1e-8).kmax == 4


def test_theta_sup_bound_holds():
    rng = random.Random(48)
    obs = ThetaObservable(m=1, delta=1 + 1j)
    pts = [np.array([rng.uniform(-3, 3) for _ in range(60)]) for _ in range(4)]
    vals = obs.eval_np(*pts)
    assert float(np.max(np.abs(vals))) <= obs.sup_bound()


# -- correlations ---------------------------------------------------------------------

def test_correlation_constant_observable_is_mertens():
    sys_ = cos_system()
    p0 = PhasePoint(0.2, NilPoint.from_coords(0.1, 0.3, 0.7))
    N = 5000
    rep = mobius_correlation(sys_, ConstantObservable(), p0, N,
                             checkpoints=[10, 100, 1000, N])
    table = MobiusTable(N)
    for c, s in zip(rep.checkpoints, rep.sums):
        assert s == complex(table.mertens(c)) / c
    assert rep.sup_bound == 1.0


def test_correlation_frozen_rotation_factors_out():
    # alpha = 0 and trivial fiber: f(S^n x) is the constant f(x0)
    z = PeriodicFn.zero()
    sys_ = SkewSystem(RotationNumber.from_rational(0, 1), z, z, z)
    p0 = PhasePoint(0.0, NilPoint.from_coords(math.sqrt(2) - 1, 0.25, 0.0))
    obs = CharacterObservable(0, 1, 0)
    N = 3000
    rep = mobius_correlation(sys_, obs, p0, N, checkpoints=[N])
    f0 = obs.eval_np(np.array([p0.t]), np.array([p0.p.rep.x]),
                     np.array([p0.p.rep.y]), np.array([p0.p.rep.z]))[0]
    table = MobiusTable(N)
    expect = f0 * table.mertens(N) / N
    assert abs(rep.sums[0] - expect) < 1e-12


def test_correlation_matches_stepwise_oracle():
    rng = random.Random(49)
    sys_ = cos_system()
    p0 = PhasePoint(rng.random(), NilPoint.from_coords(
        rng.random(), rng.random(), rng.random()))
    obs = CharacterObservable(1, 2, 1)
    N = 400
    rep = mobius_correlation(sys_, obs, p0, N, checkpoints=[128, 129, 400],
                             block=128)
    table = MobiusTable(N)
    p = p0
    acc = 0j
    sums = {}
    for n in range(1, N + 1):
        p = repeated_step(sys_, p, 1)
        g = p.p.rep
        acc += table.mu(n) * obs.eval_np(np.array([p.t]), np.array([g.x]),
                                         np.array([g.y]), np.array([g.z]))[0]
        if n in (128, 129, 400):
            sums[n] = acc / n
    for c, s in zip(rep.checkpoints, rep.sums):
        assert abs(s - sums[c]) < 1e-9


def test_correlation_thread_count_is_invisible():
    sys_ = cos_system()
    p0 = PhasePoint(0.37, NilPoint.from_coords(0.6, 0.1, 0.9))
    obs = CharacterObservable(1, 0, 0)
    a = mobius_correlation(sys_, obs, p0, 20_000, checkpoints=[4096, 20_000],
                           threads=1, block=4096)
    b = mobius_correlation(sys_, obs, p0, 20_000, checkpoints=[4096, 20_000],
                           threads=4, block=4096)
    assert a.sums == b.sums


def test_correlation_bounded_by_sup():
    sys_ = cos_system()
    p0 = PhasePoint(0.37, NilPoint.from_coords(0.6, 0.1, 0.9))
    for obs in (CharacterObservable(1, 1, 1), ThetaObservable(m=1)):
        rep = mobius_correlation(sys_, obs, p0, 4000)
        for s in rep.sums:
            assert abs(s) <= rep.sup_bound + 1e-12


def test_correlation_checkpoint_validation():
    sys_ = cos_system()
    p0 = PhasePoint(0.1, NilPoint.from_coords(0, 0, 0))
    with pytest.raises(ConfigError):
        mobius_correlation(sys_, ConstantObservable(), p0, 100, checkpoints=[0])
    with pytest.raises(ConfigError):
        mobius_correlation(sys_, ConstantObservable(), p0, 100, checkpoints=[101])


def test_ergodic_sum_oracle_against_eval():
    rng = random.Random(50)
    f = rand_fn(rng, K=2, scale=1.0, mean=0.3)
    alpha = golden()
    b = brute_ergodic_sum(f, alpha, 50, 0.2)
    direct = sum(f.eval(0.2 + j * alpha.as_float) for j in range(50))
    assert abs(b - direct) < 1e-11
