import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from boxheat import geometry, qse
from boxheat.errors import NonconformingMoments


def test_nu_continuous_examples():
    assert qse.nu_continuous(1.0, 1.0) == pytest.approx(math.exp(-1 / math.e), rel=1e-14)
    assert qse.nu_continuous(1e-300, 1.0) == pytest.approx(1.0)
    assert qse.nu_continuous(math.e**2 * 4, 2.0) == pytest.approx(math.exp(-4), rel=1e-13)


@pytest.mark.parametrize("xi,beta", [(1.0, 1.0), (7.0, 0.5), (50.0, 2.0), (3.0, 3.0)])
def test_nu_continuous_against_numeric_minimization(xi, beta):
    f = lambda gam: gam * beta * math.log(gam) - gam * math.log(xi) if gam > 0 else 0.0
    grid = np.linspace(1e-9, 4 * qse.continuous_minimizer(xi, beta) + 2, 20001)
    best = min(f(x) for x in grid)
    res = optimize.minimize_scalar(f, bounds=(1e-12, grid[-1]), method="bounded",
                                   options={"xatol": 1e-12})
    assert math.exp(min(best, res.fun)) == pytest.approx(float(qse.nu_continuous(xi, beta)), rel=1e-8)


def test_nu_integer_examples():
    a, beta = 1.0, 1.0
    A = qse.moment_constant(a, beta)
    assert qse.nu_integer(0.5 * A, a, beta) == 1.0
    # with a = beta = 1 the continuous minimizer is gamma_0 = t, an integer at t = 5
    t = 5.0
    assert qse.nu_integer(t, a, beta) == pytest.approx(math.exp(-t), rel=1e-13)
    assert qse.nu_integer_bruteforce(t, a, beta, 50) == pytest.approx(math.exp(-t), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([0.5, 1.0, 2.0, 3.0]), st.floats(0.2, 4), st.floats(1e-3, 300))
def test_windowed_search_matches_enumeration_and_sandwich(beta, a, t):
    v = qse.nu_integer(t, a, beta)
    assert v == pytest.approx(qse.nu_integer_bruteforce(t, a, beta, 600), rel=1e-12)
    lower = math.exp(-a * t ** (1 / beta))
    assert lower * (1 - 1e-12) <= v <= math.exp(math.e * beta / 2) * lower * (1 + 1e-9)


def test_moments_to_decay_examples():
    ms = [(n / math.e) ** n if n else 1.0 for n in range(30)]
    assert qse.moments_to_decay(ms, 1.0, C=1.0).a == pytest.approx(1.0, rel=1e-12)
    for A, beta in ((0.3, 1.0), (2.0, 0.5), (5.0, 2.0)):
        ms = [A**n * qse._pow_self(n, beta) for n in range(25)]
        prof = qse.moments_to_decay(ms, beta, C=1.0)
        assert prof.a == pytest.approx(beta / (math.e * A ** (1 / beta)), rel=1e-12)
        assert prof.A == pytest.approx(A, rel=1e-12)
    prof = qse.moments_to_decay([1.0] + [0.0] * 10, 1.0, a_max=1e6)
    assert prof.a == 1e6


def test_moments_growing_too_fast_are_rejected():
    ms = [qse._pow_self(n, 2.0) for n in range(25)]
    with pytest.raises(NonconformingMoments):
        qse.moments_to_decay(ms, 1.0, C=1.0)


def test_fit_qse_examples():
    beta = 1.5
    prof = qse.fit_qse([qse._pow_self(l, beta) for l in range(12)], beta)
    assert prof.C == 1 and prof.A == pytest.approx(1)
    prof = qse.fit_qse([2.0**l * qse._pow_self(l, beta) for l in range(12)], beta)
    assert prof.A == pytest.approx(2)
    for l, v, b in qse.qse_rows([2.0**l * qse._pow_self(l, beta) for l in range(12)], prof):
        assert v <= b * (1 + 1e-12)


def test_fit_qse_gaussian_moments():
    # |d^n/dtau^n phi_hat| <= int |t|^n exp(-t^2) dt
    norms = [integrate.quad(lambda t: abs(t) ** n * math.exp(-t * t), -np.inf, np.inf)[0]
             for n in range(16)]
    prof = qse.fit_qse(norms, 0.5)
    assert math.isfinite(prof.A) and prof.A > 0
    assert prof.C == pytest.approx(math.sqrt(math.pi))
    assert all(v <= b * (1 + 1e-12) for _, v, b in qse.qse_rows(norms, prof))


@pytest.mark.parametrize("gamma,a,beta", [(1.0, 1.0, 1.0), (3.5, 0.7, 2.0), (0.5, 2.0, 0.5)])
def test_calculus_bound_is_the_maximum(gamma, a, beta):
    ts = np.linspace(1e-6, 400, 400001)
    vals = ts**gamma * np.exp(-a * ts ** (1 / beta))
    assert vals.max() == pytest.approx(qse.calculus_bound(gamma, a, beta), rel=1e-6)


def test_envelope_single_term_closed_forms():
    tbl = geometry.taylor_table(geometry.heisenberg(), 0.7 - 0.2j)
    for n in (1, 2, 5, 9):
        for s in (0.1, 1.0, 3.0):
            assert qse.envelope(tbl, n, s) == pytest.approx((s * n) ** n, rel=1e-12)
            ch = qse.check_envelope_chain(tbl, n, s, 2)
            # shifted sum over s^2 is (s n)^n / (s^2 s n)  and the middle term uses B = s^2
            assert math.exp(ch.log_middle) == pytest.approx((s * n) ** n / s**3, rel=1e-12)
            assert math.exp(ch.log_upper) == pytest.approx(n**n * s ** (n - 1) / s**2, rel=1e-12)
            assert ch.upper_ratio == pytest.approx(1.0, rel=1e-12)
            assert ch.lower_ratio == pytest.approx(n, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(geometry.standard_models())),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.integers(1, 20), st.floats(1e-2, 1e2))
def test_envelope_chain_two_sided(name, z, n, s):
    p = geometry.standard_models()[name]
    tbl = geometry.taylor_table(p, z)
    ch = qse.check_envelope_chain(tbl, n, s, p.degree)
    assert ch.upper_ratio <= 1 + 1e-9
    assert ch.lower_ratio >= 1 / ch.term_count**2 * (1 - 1e-9)


def test_transform_derivative_bound_dominates_gaussian_example():
    prof = qse.DecayProfile(1.0, 0.5, math.sqrt(math.pi))
    for n in range(8):
        exact = integrate.quad(lambda t: abs(t) ** n * math.exp(-t * t), -np.inf, np.inf)[0]
        assert exact <= qse.transform_derivative_bound(prof, n)
