import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from boxheat import geometry as g
from boxheat.errors import DegenerateTable, InvalidPolynomial

Z, ZB = sp.symbols("z zb")


def sympy_table(coeffs, z0):
    """A_jk(z0) = d^j/dz^j d^k/dzb^k p / (j! k!), with z and zb as independent symbols."""
    expr = sum(sp.nsimplify(c) * Z**j * ZB**k for (j, k), c in coeffs.items())
    deg = max(j + k for j, k in coeffs)
    out = {}
    for j in range(deg + 1):
        for k in range(deg + 1 - j):
            d = sp.diff(expr, Z, j, ZB, k) / (sp.factorial(j) * sp.factorial(k))
            v = complex(d.subs({Z: sp.nsimplify(z0), ZB: sp.nsimplify(np.conj(z0))}))
            if abs(v) > 0:
                out[(j, k)] = v
    return out


MODELS = g.standard_models()


@pytest.mark.parametrize("name", sorted(MODELS))
@pytest.mark.parametrize("z0", [0j, 1 + 0j, 0.5 - 1.5j])
def test_taylor_table_matches_symbolic_derivatives(name, z0):
    p = MODELS[name]
    ref = sympy_table(p.coeffs, z0)
    tbl = g.taylor_table(p, z0)
    keys = set(ref) | {k for k, v in tbl.coeffs.items() if abs(v) > 1e-13}
    for key in keys:
        assert abs(tbl.coeffs.get(key, 0) - ref.get(key, 0)) <= 1e-10 * max(1, abs(ref.get(key, 0)))


def test_recenter_examples():
    t = g.taylor_table(g.heisenberg(), 3 + 4j)
    assert [(j, k) for j, k, _ in t.mixed()] == [(1, 1)]
    assert t.coeffs[(1, 1)] == 1
    q = g.taylor_table(g.abs_power(2), 1)
    assert q.coeffs[(1, 1)] == 4 and q.coeffs[(2, 1)] == 2 and q.coeffs[(1, 2)] == 2
    assert q.coeffs[(2, 2)] == 1
    p = MODELS["twisted_quartic"]
    t0 = g.taylor_table(p, 0)
    assert {k: v for k, v in t0.coeffs.items() if abs(v)} == p.coeffs


def test_hermitian_table():
    for p in MODELS.values():
        tbl = g.taylor_table(p, 0.3 + 0.7j)
        for (j, k), a in tbl.coeffs.items():
            assert abs(tbl.coeffs.get((k, j), 0) - np.conj(a)) < 1e-12


@pytest.mark.parametrize("name", sorted(MODELS))
def test_reconstruction_at_100_points(name):
    p = MODELS[name]
    rng = np.random.default_rng(0)
    for z in (0j, 1.2 - 0.4j):
        tbl = g.taylor_table(p, z)
        w = rng.normal(size=100) + 1j * rng.normal(size=100)
        ref = p.evaluate(w)
        assert np.max(np.abs(g.reconstruct(tbl, w) - ref) / np.maximum(1, np.abs(ref))) < 1e-10


def test_twist_examples():
    h = g.heisenberg()
    z, w = 0.3 - 1.1j, -0.7 + 0.2j
    assert g.twist(h, z, w) == pytest.approx(-2 * (np.conj(z) * w).imag, abs=1e-14)
    assert g.twist(h, z, z) == 0
    q = g.abs_power(2)
    assert g.twist(q, 0, 1.5 + 2j) == 0
    assert g.twist_antisymmetry_defect(h, z, w) < 1e-14


def test_size_function_examples():
    h, q = g.heisenberg(), g.abs_power(2)
    assert g.lambda_size(g.taylor_table(h, 2 - 1j), 2) == pytest.approx(4)
    assert g.lambda_size(g.taylor_table(q, 0), 2) == pytest.approx(16)
    assert g.lambda_size(g.taylor_table(q, 1), 1) == pytest.approx(9)
    assert g.mu_size(g.taylor_table(h, 5j), 9.0) == pytest.approx(3)
    assert g.mu_size(g.taylor_table(q, 0), 16.0) == pytest.approx(2)
    # indices (1,1),(2,1),(1,2),(2,2) give (1/4)^(1/2), (1/2)^(1/3) twice and 1
    assert g.mu_size(g.taylor_table(q, 1), 1.0) == pytest.approx(0.5)
    assert g.lambda_size(g.taylor_table(q, 1), 0) == 0 and g.mu_size(g.taylor_table(q, 1), 0) == 0


def test_distance_and_volume_examples():
    h, q = g.heisenberg(), g.abs_power(2)
    a, b = g.MetricPoint(0, 1.0), g.MetricPoint(0, 0.0)
    assert g.control_distance(h, a, b) == pytest.approx(1)
    assert g.control_distance(q, g.MetricPoint(0, 16.0), b) == pytest.approx(2)
    assert g.control_distance(q, a, a) == 0
    assert g.ball_volume(g.taylor_table(h, 0), 1) == pytest.approx(1)
    assert g.ball_volume(g.taylor_table(q, 0), 2) == pytest.approx(64)
    pv = g.pair_volume(h, a, b)
    assert pv.volume == pytest.approx(1) and pv.max_volume >= pv.volume


def test_e_series_examples():
    h, q = g.heisenberg(), g.abs_power(2)
    z, w = 0.4 + 0.1j, -1 + 2j
    assert g.e_series(h, z, w) == pytest.approx(w - z)
    assert g.e_series(q, z, z) == 0
    # d/dzb p = 2 z^2 zb; its z-Taylor coefficients at z = 1 are 4 and 2
    assert g.e_series(q, 1, 2) == pytest.approx(6)
    assert abs(g.e_series_dual(q, 1, 2) - 6) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(MODELS)),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_e_series_two_expansions_agree(name, z, w):
    p = MODELS[name]
    a, b = g.e_series(p, z, w), g.e_series_dual(p, z, w)
    assert abs(a - b) <= 1e-10 * max(1, abs(a))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(sorted(MODELS)),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.floats(1e-3, 1e3), st.floats(1.01, 10))
def test_size_functions_monotone_and_inverse(name, z, delta, factor):
    tbl = g.taylor_table(MODELS[name], z)
    assert g.lambda_size(tbl, delta * factor) > g.lambda_size(tbl, delta)
    assert g.mu_size(tbl, delta * factor) >= g.mu_size(tbl, delta)
    r = g.mu_size(tbl, g.lambda_size(tbl, delta)) / delta
    # Lambda dominates each term, and its largest term is at least Lambda / N
    terms = len(tbl.mixed())
    assert 1 - 1e-12 <= r <= math.sqrt(terms) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(MODELS)),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.floats(-5, 5))
def test_distance_nonnegative_and_comparable(name, z, w, t):
    p = MODELS[name]
    a, b = g.MetricPoint(z, t), g.MetricPoint(w, 0.0)
    d1, d2 = g.control_distance(p, a, b), g.control_distance(p, b, a)
    assert d1 >= 0 and d2 >= 0
    if d1 > 1e-9:
        assert 1 / 50 <= d2 / d1 <= 50


def test_invalid_polynomials():
    with pytest.raises(InvalidPolynomial):
        g.SubharmonicPolynomial({(2, 0): 1.0, (0, 2): 1.0})  # harmonic
    with pytest.raises(InvalidPolynomial):
        g.SubharmonicPolynomial({(1, 1): -1.0})  # superharmonic
    with pytest.raises(InvalidPolynomial):
        g.SubharmonicPolynomial({(1, 1): 1.0, (2, 1): 1.0})  # not real
    with pytest.raises(InvalidPolynomial):
        g.SubharmonicPolynomial.from_json({"coeffs": [[1, 1]]})


def test_degenerate_table():
    with pytest.raises(DegenerateTable):
        g.mu_size(g.TaylorTable(0j, {(1, 0): 1.0}), 1.0)


def test_json_round_trip(tmp_path):
    p = MODELS["twisted_quartic"]
    path = tmp_path / "p.json"
    import json
    path.write_text(json.dumps(p.to_json()))
    assert g.SubharmonicPolynomial.load(path).coeffs == p.coeffs


def test_relative_inverse_constant_single_term_is_one():
    zs = [0j, 1 + 1j]
    assert g.relative_inverse_constant(g.heisenberg(), zs, np.logspace(-3, 3, 13)) == pytest.approx(1)
    assert math.isfinite(g.relative_inverse_constant(MODELS["mixed_2_6"], zs, np.logspace(-3, 3, 13)))
