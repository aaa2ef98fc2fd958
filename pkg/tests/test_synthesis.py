import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boxheat import geometry, solver as S, synthesis as Y
from boxheat.errors import ConfigInvalid, InsufficientSamples, TruncationResidual

HEIS = geometry.heisenberg()


def mehler_kernel_at(s, z, w, t, cfg=Y.SynthesisConfig(), grid=None):
    return Y.synthesize(HEIS, z, w, s, t, grid, cfg, provider=Y.MehlerProvider(s, z, w))


def diagonal_closed_form(s, t):
    # transform of tau exp(-tau s) / (pi sinh(tau s)) at z = w = 0
    return -1 / (4 * s**2 * np.sinh(np.pi * t / (2 * s)) ** 2)


def test_tau_grid_validation():
    with pytest.raises(ConfigInvalid):
        Y.TauGrid(1.0, 64)
    with pytest.raises(ConfigInvalid):
        Y.TauGrid(0.0, 65)
    g = Y.TauGrid(2.0, 9)
    assert np.allclose(g.taus, np.linspace(-2, 2, 9)) and g.dtau == 0.5


def test_tau_grid_rule():
    cfg = Y.SynthesisConfig()
    g = Y.tau_grid_for(HEIS, 0j, 0.5, 4.0, cfg)
    assert g.n_tau % 4 == 1 and g.n_tau <= cfg.n_tau_max
    # the cutoff makes exp(-c_fit s tau) reach eps / 10 for Heisenberg at the diagonal
    assert math.exp(-cfg.c_fit * 0.5 * g.tau_max) == pytest.approx(cfg.eps / 10, rel=1e-6)
    off = Y.tau_grid_for(HEIS, 0j, 0.5, 4.0, cfg, z=1 + 0j)
    assert off.tau_max * math.exp(-off.tau_max) < cfg.eps / 10 * 1.01


@pytest.mark.parametrize("kind", ["growth", "step"])
def test_profile_transforms_by_differences(kind):
    # each profile alone is not integrable, the difference of two rates is
    f = Y.growth_profile if kind == "growth" else Y.step_profile
    F = Y.growth_profile_transform if kind == "growth" else Y.step_profile_transform
    k1, k2 = 1.0, 1.7
    taus = np.linspace(-400, 400, 400001)
    d = f(taus, k1) - f(taus, k2)
    for t in (0.5, 1.3, 3.0):
        num = np.trapezoid(np.exp(1j * t * taus) * d, taus) / (2 * math.pi)
        assert abs(num - (F(t, k1) - F(t, k2))) < 1e-7


def test_profiles_asymptotics():
    taus = np.array([-200.0, 0.0, 200.0])
    g = Y.growth_profile(taus, 2.0)
    assert g[0] == pytest.approx(200) and g[1] == pytest.approx(0.5) and abs(g[2]) < 1e-100
    h = Y.step_profile(taus, 2.0)
    assert h[0] == pytest.approx(1) and h[1] == pytest.approx(0.5) and h[2] < 1e-100


def test_taper():
    taus = np.linspace(-4, 4, 17)
    w = Y.taper(taus, 0.5)
    assert w[0] == 0 and np.all(w[taus >= -2] == 1) and np.all(np.diff(w[taus < 0]) >= 0)
    assert np.all(Y.taper(taus, 0.0) == 1)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_heisenberg_diagonal_closed_form(s):
    t = np.array([-4.0, -1.0, 1.0, 2.0, 4.0]) * s
    k = mehler_kernel_at(s, 0j, 0j, t)
    exact = diagonal_closed_form(s, t)
    assert np.all(np.abs(k.values - exact) <= k.errors)
    assert k.growth["applied"]
    assert k.resolved[2] and abs(k.values[2] - exact[2]) < 1e-3 * abs(exact[2])


def test_zero_time_is_flagged_when_growth_is_subtracted():
    k = mehler_kernel_at(0.5, 0j, 0j, np.array([0.0, 1.0]))
    assert math.isnan(k.values[0].real) and k.errors[0] == math.inf and not k.resolved[0]


@pytest.fixture(scope="module")
def off_diagonal_pair():
    s, z, w = 0.5, 0.5 + 0.25j, 0j
    t = np.linspace(-30, 30, 2401)
    cfg = Y.SynthesisConfig(n_tau_max=4097)
    fwd = mehler_kernel_at(s, z, w, t, cfg)
    bwd = Y.synthesize(HEIS, w, z, s, -t, None, cfg, provider=Y.MehlerProvider(s, w, z))
    return s, z, w, fwd, bwd


def test_time_integral_recovers_zero_frequency_kernel(off_diagonal_pair):
    s, z, w, fwd, _ = off_diagonal_pair
    assert not fwd.growth["applied"]
    assert abs(Y.t_integral(fwd) - S.mehler_kernel(0.0, s, z, w)) < 1e-9


def test_conjugate_symmetry(off_diagonal_pair):
    *_, fwd, bwd = off_diagonal_pair
    assert Y.conjugate_symmetry_defect(fwd, bwd) <= 1e-6
    with pytest.raises(ConfigInvalid):
        Y.conjugate_symmetry_defect(fwd, fwd)


def test_tau_refinement_oracle():
    s, t = 1.0, np.array([1.0, 2.0])
    base = mehler_kernel_at(s, 0j, 0j, t)
    g = base.tau_grid
    fine = mehler_kernel_at(s, 0j, 0j, t, grid=Y.TauGrid(g.tau_max, 2 * g.n_tau - 1))
    assert np.all(np.abs(base.values - fine.values) <= 0.03 * np.abs(fine.values))


def test_solver_provider_matches_closed_form_provider():
    s, t = 1.0, np.array([1.0, 2.0])
    cfg = Y.SynthesisConfig()
    ref = mehler_kernel_at(s, 0j, 0j, t, cfg)
    got = Y.synthesize(HEIS, 0j, 0j, s, t, ref.tau_grid, cfg)
    assert np.all(np.abs(got.values - ref.values) <= 0.03 * np.abs(ref.values))
    prov = Y.SolverProvider(HEIS, s, 0j, 0j, n_side=65)
    for tau in (-2.0, 1.0):
        assert abs(prov(tau) - complex(S.mehler_kernel(tau, s, 0j, 0j))) < 1e-3 * abs(
            complex(S.mehler_kernel(tau, s, 0j, 0j)))


def test_short_grid_raises_truncation_residual():
    with pytest.raises(TruncationResidual):
        mehler_kernel_at(0.5, 0.3 + 0j, 0j, np.array([1.0]), grid=Y.TauGrid(1.0, 9))
    cfg = Y.SynthesisConfig(check_truncation=False)
    k = mehler_kernel_at(0.5, 0.3 + 0j, 0j, np.array([1.0]), cfg, grid=Y.TauGrid(1.0, 9))
    assert k.tail_mass > cfg.eps * k.scale


def test_empty_time_list():
    with pytest.raises(InsufficientSamples):
        mehler_kernel_at(0.5, 0j, 0j, np.array([]))


def test_parallel_sweep_matches_serial():
    t = np.array([1.0, 2.0])
    a = mehler_kernel_at(0.5, 0j, 0j, t)
    b = mehler_kernel_at(0.5, 0j, 0j, t, Y.SynthesisConfig(workers=2))
    assert np.array_equal(a.values, b.values)


def test_config_and_header_serialize():
    import json
    cfg = Y.SynthesisConfig(eps=1e-5, solver={"order": 4})
    assert isinstance(cfg.solver, S.SolverConfig)
    assert Y.SynthesisConfig.from_json(cfg.to_json()) == cfg
    k = mehler_kernel_at(0.5, 0j, 0j, np.array([1.0]))
    json.dumps(k.header())
    assert k.rows()[0][0] == 1.0


def test_transform_identity():
    assert Y.transform_identity_check(HEIS, 0.3j, 0.3j) <= 1e-6
    for z, w in ((0.5 + 0.25j, -0.5j), (1.0, 0.2 + 0.7j), (-0.4j, 0.9)):
        assert Y.transform_identity_check(HEIS, z, w) <= 1e-5
    prof = lambda t: np.exp(-0.5 * (t - 0.3) ** 2) * (1 + 0.2j * t)
    a = Y.transform_identity_check(HEIS, 0.5, -0.5j, prof, fd_step=0.3)
    b = Y.transform_identity_check(HEIS, 0.5, -0.5j, lambda t: 2 * prof(t), fd_step=0.3)
    assert b == pytest.approx(2 * a, rel=1e-9)


def test_workhorse_samples_on_the_diagonal():
    x, y = Y.workhorse_samples(HEIS, 2.0, 0.5, [0.3], [0j], 0j)
    assert x[0] == pytest.approx(2 * 0.5 * 2.0) and y[0] == pytest.approx(math.log(0.15))


def synthetic_kernels(C, c, s_list=(0.1, 0.25, 0.5, 1.0), t_list=(1.0, 2.0, 4.0, 8.0)):
    out = []
    cfg = Y.SynthesisConfig()
    for s in s_list:
        t = np.array([-x for x in t_list] + list(t_list))
        # Heisenberg on the diagonal: d = sqrt|t|, V = d^2 Lambda(d) = t^2
        vals = C * np.exp(-c * np.abs(t) / s) / t**2
        out.append(Y.SpaceTimeKernel(0j, 0j, s, t, vals.astype(complex), np.zeros_like(vals),
                                     Y.TauGrid(1.0, 5), np.zeros(5), {}, 0.0, 1.0, cfg))
    return out


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.02, 3))
def test_decay_fit_recovers_synthetic_constants(C, c):
    rep = Y.decay_report(HEIS, synthetic_kernels(C, c))
    assert rep.c == pytest.approx(c, rel=1e-2) and rep.C == pytest.approx(C, rel=1e-2)
    assert rep.sup_ratio == pytest.approx(1.0) and rep.consistent()


def test_decay_fit_needs_samples():
    with pytest.raises(InsufficientSamples):
        Y.decay_report(HEIS, synthetic_kernels(1.0, 1.0, s_list=(100.0,)))
