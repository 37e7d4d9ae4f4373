import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_motion import (
    ContractViolation,
    SingularConfigurationError,
    State,
    el_residual,
    integrate,
    make_preset,
)
from nonlocal_motion.core import fd_gradient
from nonlocal_motion.models import PRESETS, bump_potential, oscillator_solution, with_params

from conftest import MODEL_OVERRIDES, preset, random_state

ALL_MODELS = sorted(MODEL_OVERRIDES)


def test_central_acceleration_and_gradient():
    sys_ = make_preset("central2", m=1.0, k_pot=0.5)
    q = np.array([1.0, 0.0])
    np.testing.assert_allclose(sys_.potential.grad(q), [1.0, 0.0])
    np.testing.assert_allclose(sys_.acceleration(0.0, q, np.zeros(2)), [-1.0, 0.0])
    fd = fd_gradient(sys_.potential.U, np.array([0.7, -1.3]))
    np.testing.assert_allclose(sys_.potential.grad(np.array([0.7, -1.3])), fd, rtol=1e-7)


def test_central_origin_is_singular():
    sys_ = make_preset("central2")
    with pytest.raises(SingularConfigurationError):
        sys_.acceleration(0.0, np.zeros(2), np.zeros(2))


@given(s=st.sampled_from([0.5, 2.0, 3.7]),
       q=st.lists(st.floats(0.2, 3.0), min_size=2, max_size=2),
       sign=st.sampled_from([-1.0, 1.0]))
def test_central_homogeneity(s, q, sign):
    U = make_preset("central2", k_pot=1.0).potential.U
    q = np.array(q) * np.array([sign, 1.0])
    assert U(s * q) == pytest.approx(U(q) / s ** 2, rel=1e-14)


@given(s=st.sampled_from([0.5, 2.0, 3.7]), x=st.floats(0.1, 2.0), y=st.floats(2.2, 4.0), z=st.floats(-3.0, -0.1))
def test_calogero_homogeneity(s, x, y, z):
    U = make_preset("calogero").potential.U
    q = np.array([x, y, z])
    assert U(s * q) == pytest.approx(U(q) / s ** 2, rel=1e-13)


def test_calogero_two_body_example():
    sys_ = make_preset("calogero", n=2, g2=1.0)
    q = np.array([1.0, 0.0])
    assert sys_.potential.U(q) == pytest.approx(1.0)
    assert -sys_.potential.grad(q)[0] == pytest.approx(2.0)
    np.testing.assert_allclose(sys_.potential.grad(q), fd_gradient(sys_.potential.U, q), rtol=1e-7)
    assert sys_.potential.U(np.array([0.0, 1.0])) == sys_.potential.U(q)
    with pytest.raises(SingularConfigurationError):
        sys_.potential.U(np.array([1.0, 1.0]))


def test_viscous_examples():
    sys_ = make_preset("viscous", m=1.0, k_drag=1.0, potential="zero", n=2)
    np.testing.assert_allclose(sys_.acceleration(0.0, np.zeros(2), np.array([2.0, 0.0])), [-2.0, 0.0])
    q, v = np.array([0.3, 0.1]), np.array([1.0, -2.0])
    assert sys_.lagrangian(0.0, q, v) == pytest.approx(0.5 * 5.0)


def test_hydraulic_examples():
    sys_ = make_preset("hydraulic", potential="zero")
    assert sys_.acceleration(0.0, np.zeros(1), np.array([2.0]))[0] == -4.0
    # q = log(t + 1) solves m q'' = -k |q'| q' with m = k = 1
    for t in np.linspace(-0.9, 5.0, 25):
        q, v, a = math.log(t + 1), 1.0 / (t + 1), -1.0 / (t + 1) ** 2
        assert abs(sys_.acceleration(t, np.array([q]), np.array([v]))[0] - a) < 1e-10 * max(1.0, abs(a))


def test_bump_potential_range():
    pot = bump_potential(1.0)
    assert pot.U_sup == 1.0
    pts = np.random.default_rng(3).normal(scale=3.0, size=(200, 2))
    vals = np.array([pot.U(p) for p in pts])
    assert np.all((vals > 0) & (vals <= 1.0))
    assert pot.U(np.zeros(2)) == 1.0


def test_mb_examples():
    p = dict(a=0.3, b=0.4, c=0.5, g=1.3, k_pump=0.7)
    sys_ = make_preset("mb-diss", **p)
    np.testing.assert_allclose(sys_.acceleration(0.0, np.zeros(3), np.zeros(3)), [0.0, 0.0, 0.5 * 0.7])
    cons = make_preset("mb-cons", g=1.0)
    np.testing.assert_allclose(cons.acceleration(0.0, np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 2.0])),
                               [2.0, 0.0, -1.0])
    assert cons.name == "mb-cons" and sys_.name == "mb-diss"


@pytest.mark.parametrize("model_id", ALL_MODELS)
def test_el_consistency_random_states(model_id, rng):
    sys_ = preset(model_id)
    worst = 0.0
    for _ in range(100):
        t, q, v = random_state(model_id, rng)
        worst = max(worst, float(np.max(np.abs(el_residual(sys_, t, q, v)))))
    assert worst <= 1e-4


@pytest.mark.parametrize("model_id", ALL_MODELS)
def test_analytic_derivatives_match_fd(model_id, rng):
    sys_ = preset(model_id)
    for _ in range(100):
        t, q, v = random_state(model_id, rng)
        fq = fd_gradient(lambda x: sys_.lagrangian(t, x, v), q)
        fv = fd_gradient(lambda x: sys_.lagrangian(t, q, x), v)
        np.testing.assert_allclose(sys_.dL_dq(t, q, v), fq, atol=1e-4)
        np.testing.assert_allclose(sys_.dL_dv(t, q, v), fv, atol=1e-4)


def test_el_residual_detects_wrong_acceleration():
    good = make_preset("mb-cons")
    bad = type(good)(3, good.lagrangian, good.dL_dq,
                     lambda t, q, v: np.array([v[0], v[1], v[2] + (q[0] ** 2 + q[1] ** 2)]),
                     good.force_Q, good.acceleration, params=good.params)
    q, v = np.array([0.5, 0.2, 0.0]), np.array([0.1, 0.3, 0.4])
    assert np.max(np.abs(el_residual(good, 0.0, q, v))) < 1e-8
    assert np.max(np.abs(el_residual(bad, 0.0, q, v))) > 1e-2


@pytest.mark.parametrize("model_id, s0", [
    ("viscous", State(0.0, [1.0, 0.5], [0.2, -0.4])),
    ("hydraulic", State(0.0, [-2.0, 0.5], [1.0, -0.3])),
    ("hydraulic", State(0.0, [0.1, 0.0], [-0.5, 0.05])),
])
def test_mechanical_energy_non_increasing(model_id, s0):
    sys_ = preset(model_id)
    m = sys_.params.m
    tr = integrate(sys_, (), s0, 15.0)
    E = 0.5 * m * np.sum(tr.v ** 2, axis=1) + np.array([sys_.potential.U(q) for q in tr.q])
    assert np.max(np.diff(E)) <= 1e-8 * (1 + np.max(np.abs(E)))


def test_viscous_energy_rate_by_fd():
    sys_ = make_preset("viscous", n=2, k_drag=0.5)
    s0 = State(0.0, [1.0, 0.5], [0.2, -0.4])
    tr = integrate(sys_, (), s0, 5.0, sample_times=np.linspace(0, 5, 5001))
    E = 0.5 * np.sum(tr.v ** 2, axis=1) + np.array([sys_.potential.U(q) for q in tr.q])
    dE = np.gradient(E, tr.t, edge_order=2)
    np.testing.assert_allclose(dE, -0.5 * np.sum(tr.v ** 2, axis=1), atol=1e-5)


def test_make_preset_rejects_unknown():
    with pytest.raises(ContractViolation):
        make_preset("nope")
    with pytest.raises(ContractViolation):
        make_preset("central2", bogus=1.0)
    with pytest.raises(ContractViolation):
        make_preset("viscous", potential="cubic")
    with pytest.raises(ContractViolation):
        make_preset("central2", m=-1.0)


def test_presets_cover_required_ids():
    assert {"central2", "calogero", "viscous", "hydraulic", "mb-cons", "mb-diss"} <= set(PRESETS)


def test_with_params_rebuilds():
    sys_ = with_params(make_preset("central2"), m=3.0)
    assert sys_.params.m == 3.0
    assert sys_.dL_dv(0.0, np.ones(2), np.array([1.0, 0.0]))[0] == 3.0


@settings(max_examples=20, deadline=None)
@given(t=st.floats(-3.0, 3.0))
def test_oscillator_solution_solves_ode(t):
    sys_ = make_preset("oscillator", stiffness=4.0)
    exact = oscillator_solution(sys_.params, State(0.5, [1.0], [0.3]))
    h = 1e-4
    q, v = exact(t)
    vp = (exact(t + h)[1] - exact(t - h)[1]) / (2 * h)
    assert vp[0] == pytest.approx(sys_.acceleration(t, q, v)[0], abs=1e-6)
    np.testing.assert_allclose(exact(0.5)[0], [1.0])
