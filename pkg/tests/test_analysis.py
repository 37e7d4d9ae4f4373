import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi

from nonlocal_motion import (
    ContractViolation,
    IntegratorConfig,
    LawViolation,
    NonlocalConstant,
    PreconditionError,
    RegimeError,
    State,
    integrate,
    make_preset,
    hyd_shift_family,
    mb_aniso_scaling_family,
)
from nonlocal_motion import analysis as an
from nonlocal_motion.integrate import solve


# --- degree -2 -------------------------------------------------------------

def test_hom2_integrals_examples():
    circ = an.hom2_integrals(make_preset("central2", k_pot=0.5), State(0.0, [1.0, 0.0], [0.0, 1.0]))
    assert (circ.E, circ.K, circ.K1) == pytest.approx((0.0, 0.0, 0.5), abs=1e-15)
    cal = an.hom2_integrals(make_preset("calogero", n=2, g2=1.0), State(0.0, [1.0, 0.0], [1.0, -1.0]))
    assert (cal.E, cal.K, cal.K1) == pytest.approx((2.0, 1.0, 0.5))


def test_hom2_integrals_at_nonzero_time():
    sys_ = make_preset("central2", m=2.0)
    s = State(1.5, [1.0, 2.0], [0.3, -0.4])
    I = an.hom2_integrals(sys_, s)
    assert I.K1 == pytest.approx(0.5 * 2.0 * 5.0 - 1.5 ** 2 * I.E - 1.5 * I.K)
    # radial law reproduces |q|^2 at the base time exactly
    assert an.radial_law(1.5, I, 2.0) == pytest.approx(5.0, rel=1e-14)


def test_radial_law_circular_and_scattering():
    sys_ = make_preset("central2", k_pot=0.5)
    # global error at rtol 1e-10 over ten time units is ~1e-8; tighten for the 1e-8 check
    circ = integrate(sys_, (), State(0.0, [1.0, 0.0], [0.0, 1.0]), 10.0, IntegratorConfig(rtol=1e-12, atol=1e-12))
    assert an.radial_law_residual(circ) < 1e-8
    assert np.max(np.abs(np.sum(circ.q ** 2, axis=1) - 1.0)) < 1e-8
    scat = integrate(sys_, (), State(0.0, [1.0, 0.0], [1.0, 0.9]), 10.0)
    assert an.hom2_integrals(sys_, scat.state(0)).E > 0
    assert an.radial_law_residual(scat) < 1e-6


def test_radial_law_violation_reported():
    sys_ = make_preset("central2", k_pot=0.5)
    tr = integrate(sys_, (), State(0.0, [1.0, 0.0], [0.0, 1.0]), 2.0)
    with pytest.raises(LawViolation):
        an.radial_law_residual(tr, an.Hom2Integrals(-1.0, 0.0, 0.5))


# --- viscous ---------------------------------------------------------------

def test_viscous_bound_zero_potential_equality():
    sys_ = make_preset("viscous", potential="zero", n=2, k_drag=0.7)
    tr = integrate(sys_, (), State(0.0, [0.0, 0.0], [1.0, 2.0]), -5.0)
    rep = an.viscous_bound_check(tr, 0.7, 1.0)
    assert rep.ok
    W = rep.values
    assert np.max(np.abs(W - W[0])) < 1e-8 * rep.scale


def test_viscous_past_harmonic():
    sys_ = make_preset("viscous", n=2, k_drag=0.5)
    tr = integrate(sys_, (), State(0.0, [1.0, 0.5], [0.2, -0.4]), -10.0)
    assert tr.status.value == "completed"
    rep = an.viscous_bound_check(tr, 0.5, 1.0)
    assert rep.monotone and rep.bound_holds and rep.first_violation is None


def test_viscous_bound_flags_wrong_rate():
    # too weak a weight cannot compensate the energy loss to drag
    sys_ = make_preset("viscous", n=2, k_drag=0.5)
    tr = integrate(sys_, (), State(0.0, [1.0, 0.5], [0.2, -0.4]), -10.0)
    rep = an.viscous_bound_check(tr, 0.05, 1.0)
    assert not rep.monotone and rep.first_violation is not None


def test_viscous_single_sample_is_monotone():
    sys_ = make_preset("viscous", n=2)
    tr = integrate(sys_, (), State(0.0, [1.0, 0.0], [0.0, 1.0]), -1.0, sample_times=[0.0])
    assert an.viscous_bound_check(tr, 0.5, 1.0).monotone


# --- hydraulic -------------------------------------------------------------

def _hyd_run(potential, s0, t_end, a_values, **kw):
    sys_ = make_preset("hydraulic", potential=potential, **kw)
    p = sys_.params
    quads = [an.hydraulic_quadrature(a, p.m, p.k_drag, p.potential) for a in a_values]
    ncs = [NonlocalConstant(sys_, hyd_shift_family(a)) for a in a_values]
    return integrate(sys_, ncs, s0, t_end, quadratures=quads)


def test_hydraulic_invariant_log_solution():
    tr = _hyd_run("zero", State(0.0, [0.0], [1.0]), 2.0, [1.0])
    np.testing.assert_allclose(tr.v[:, 0], 1.0 / (1.0 + tr.t), rtol=1e-9)
    assert an.hydraulic_invariant(tr, 1.0) < 1e-8
    assert an.hydraulic_lhs(tr, 1.0)[0] == 0.5


def test_hydraulic_invariant_bump_and_crossing():
    tr = _hyd_run("bump", State(0.0, [-2.0, 0.5], [1.0, -0.3]), 15.0, [0.5, 0.1], n=2)
    assert np.any(np.diff(np.sign(tr.v[:, 0])) != 0)
    for a in (0.5, 0.1):
        assert an.hydraulic_invariant(tr, a) < 1e-6


def test_hshift_constant_is_twice_the_identity():
    """Integration by parts turns the hshift constant into twice the identity's left side."""
    tr = _hyd_run("bump", State(0.3, [0.4, -1.0], [-0.6, 0.9]), 8.0, [0.7], n=2)
    C = tr.values[:, 0]
    lhs = an.hydraulic_lhs(tr, 0.7)
    np.testing.assert_allclose(C, 2.0 * lhs, rtol=0, atol=1e-9 * (1 + np.max(np.abs(C))))


def test_hydraulic_lhs_requires_quadrature():
    tr = integrate(make_preset("hydraulic", n=2), (), State(0.0, [0.0, 0.0], [1.0, 0.0]), 1.0)
    with pytest.raises(ContractViolation):
        an.hydraulic_lhs(tr, 0.5)


# --- comparison problem and explosion time --------------------------------

def test_comparison_z_closed_form():
    z = an.comparison_z(np.array([-0.5, 0.0, 0.5]), 1.0, 0.0, 1.0, 1.0, 0.0)
    np.testing.assert_allclose(z, [4.0, 1.0, 1.0 / 1.5 ** 2], rtol=1e-9)
    assert an.comparison_z(0.0, 2.0, 0.3, 1.0, 1.0, 1.0) == 2.0


def test_comparison_z_equilibrium():
    a, k, U = 0.5, 2.0, 1.0
    z_eq = (a * U / k) ** (2.0 / 3.0)
    z = an.comparison_z(np.array([-3.0, 3.0]), z_eq, a, 1.0, k, U)
    np.testing.assert_allclose(z, [z_eq, z_eq], rtol=1e-12)


@pytest.mark.parametrize("z_target", [3.0, 10.0, 100.0])
def test_comparison_z_matches_quadrature_inversion(z_target):
    z0, a, m, k, U = 2.0, 0.3, 1.5, 0.8, 1.0
    t_target = -0.5 * m * spi.quad(lambda u: 1.0 / (k * u ** 1.5 - a * U), z0, z_target, epsabs=0, epsrel=1e-13)[0]
    assert an.comparison_z(t_target, z0, a, m, k, U) == pytest.approx(z_target, rel=1e-7)


def test_comparison_z_infinite_past_explosion():
    assert an.comparison_z(-1.5, 1.0, 0.0, 1.0, 1.0, 0.0) == math.inf


def test_comparison_precondition():
    with pytest.raises(PreconditionError):
        an.comparison_z(-0.5, 0.01, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        an.explosion_time((1.0 / 1.0) ** (2 / 3), 1.0, 1.0, 1.0, 1.0)


def test_explosion_time_examples():
    assert an.explosion_time(1.0, 0.0, 1.0, 1.0, 0.0) == pytest.approx(-1.0, rel=1e-12)
    assert abs(an.explosion_time(1e8, 0.0, 1.0, 1.0, 0.0)) < 2e-4
    t1 = an.explosion_time(2.0, 0.1, 1.0, 1.0, 1.0)
    assert an.explosion_time(2.0, 0.1, 2.0, 1.0, 1.0) == pytest.approx(2 * t1, rel=1e-12)


@pytest.mark.parametrize("z0, a, m, k, U", [
    (1.0, 0.0, 1.0, 1.0, 0.0), (4.0, 0.0, 2.0, 3.0, 0.0),
    (2.0, 0.1, 1.0, 1.0, 1.0), (2.0, 0.001, 1.0, 1.0, 1.0), (0.5, 0.2, 1.3, 0.7, 0.4),
])
def test_explosion_time_oracles(z0, a, m, k, U):
    quad = an.explosion_time(z0, a, m, k, U)
    # direct improper integral, no substitution
    direct = -0.5 * m * spi.quad(lambda u: 1.0 / (k * u ** 1.5 - a * U), z0, np.inf,
                                 epsabs=0, epsrel=1e-12, limit=200)[0]
    assert quad == pytest.approx(direct, rel=1e-8)
    assert quad == pytest.approx(an.explosion_time_closed_form(z0, a, m, k, U), rel=1e-8)
    if U == 0.0:
        assert quad == pytest.approx(-m / (k * math.sqrt(z0)), rel=1e-8)


def test_explosion_time_monotone_grid():
    z0s, Us = [2.0, 3.0, 5.0], [0.0, 0.5, 1.0]
    T = np.array([[an.explosion_time(z0, 0.1, 1.0, 1.0, U) for U in Us] for z0 in z0s])
    # t* - t0 < 0; explosion is nearer (value larger) for larger z0, farther for larger U_sup
    assert np.all(np.diff(T, axis=0) > 0)
    assert np.all(np.diff(T, axis=1) < 0)


def test_blowup_free_particle():
    sys_ = make_preset("hydraulic", potential="zero")
    rep = an.blowup_experiment(sys_, State(0.0, [0.0], [1.0]), 1e-3)
    assert rep.blew_up and rep.condition_satisfied
    assert abs(rep.t_detect + 1.0) < 1e-3
    assert rep.t_star <= rep.t_detect and rep.bound_holds
    assert rep.comparison_holds


@pytest.mark.parametrize("a", [0.1, 0.01, 0.001])
def test_blowup_bump(a):
    sys_ = make_preset("hydraulic", potential="bump", n=2)
    s0 = State(0.0, [0.3, -0.2], [math.sqrt(2.0), math.sqrt(2.0)])
    rep = an.blowup_experiment(sys_, s0, a)
    assert rep.blew_up
    assert math.isfinite(rep.t_star) and rep.t_star <= rep.t_detect < 0.0
    assert rep.comparison_margin >= -1e-6


def test_blowup_preconditions():
    sys_ = make_preset("hydraulic", potential="bump", n=2)
    with pytest.raises(PreconditionError):
        an.blowup_experiment(sys_, State(0.0, [0.0, 0.0], [1.0, 1.0]), 0.01)
    with pytest.raises(ContractViolation):
        an.blowup_experiment(sys_, State(0.0, [0.0, 0.0], [2.0, 0.0]), 0.01, t_end=1.0)
    with pytest.raises(ContractViolation):
        an.blowup_experiment(make_preset("viscous"), State(0.0, [0.0], [2.0]), 0.01)


# --- Maxwell-Bloch ---------------------------------------------------------

def test_mb_integral_examples():
    assert an.mb_energy([0.0, 1.0, 0.0], 1.0) == 0.5
    assert an.mb_B([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) == 0.5
    p = make_preset("mb-diss").params
    assert an.mb_N(0.0, np.array([2.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), p) == 2.0


def test_mb_conserved_regime_errors():
    cons = make_preset("mb-cons")
    tr = integrate(cons, (), State(0.0, [0.1, 0, 0], [0, 0.1, 0.5]), 1.0)
    with pytest.raises(RegimeError):
        an.mb_conserved(tr, regime="dissipative")
    diss = make_preset("mb-diss", c=1.0)
    tr2 = integrate(diss, (), State(0.0, [0.1, 0, 0], [0, 0.1, 0.5]), 1.0)
    with pytest.raises(RegimeError, match="c = 2a"):
        an.mb_conserved(tr2, regime="dissipative")
    with pytest.raises(RegimeError):
        an.mb_conserved(tr2, regime="conservative")


def test_mb_conservative_run():
    tr = integrate(make_preset("mb-cons"), (), State(0.0, [0.1, 0.0, 0.0], [0.0, 0.1, 0.5]), 20.0)
    res = an.mb_conserved(tr)
    assert all(d < 1e-6 for d in res.drift.values())
    # the a = b = 0 case of N is the planar angular momentum
    L = tr.q[:, 0] * tr.v[:, 1] - tr.q[:, 1] * tr.v[:, 0]
    assert np.max(np.abs(L - L[0])) < 1e-6 * (1 + abs(L[0]))


def test_mb_dissipative_run():
    tr = integrate(make_preset("mb-diss"), (), State(0.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.5]), 20.0)
    res = an.mb_conserved(tr, regime="dissipative")
    assert res.drift["M"] < 1e-6 and res.drift["N"] < 1e-6


def test_fish_equilibria_examples():
    assert an.fish_equilibria(4.0, 1.0, 1.0) == pytest.approx((-4.0 / 3.0, 2.0), abs=1e-12)
    assert an.fish_equilibria(0.0, 1.0, 1.0) == pytest.approx((0.0, 2.0 / 3.0), abs=1e-15)
    assert an.fish_equilibria(-1.0, 0.0, 1.0) == ()


@settings(max_examples=50)
@given(E=st.floats(0.0, 10.0), B=st.floats(-5.0, 5.0), g=st.floats(0.2, 3.0))
def test_fish_equilibria_are_roots(E, B, g):
    for z in an.fish_equilibria(E, B, g):
        assert abs(3 * g * g * z * z - 2 * B * g * g * z - 2 * E) <= 1e-9 * (1 + E + g * g * (B * B + z * z))
        # equilibria are critical points of the fish potential
        assert abs(an.fish_rhs(E, B, g)(0.0, np.array([z, 0.0]))[1]) <= 1e-9 * (1 + E + g * g * (B * B + z * z))


def test_fish_classification():
    E, B, g = 4.0, 1.0, 1.0
    assert an.fish_analysis(E, B, g, 2.0, 0.0).orbit_kind == "equilibrium"
    assert an.fish_analysis(E, B, g, -4.0 / 3.0, 0.0).orbit_kind == "equilibrium"
    assert an.fish_analysis(E, B, g, -1.0, 0.1).orbit_kind == "periodic"
    assert an.fish_analysis(E, B, g, 3.0, 0.0).orbit_kind == "unbounded"
    assert an.fish_analysis(E, B, g, -1.0, 20.0).orbit_kind == "unbounded"
    assert an.fish_analysis(E, B, g).orbit_kind == "unclassified"
    assert an.fish_analysis(-1.0, 0.0, 1.0, 0.0, 0.0).orbit_kind == "no-equilibria"


def test_homoclinic_initial_condition():
    # u^2 = g^2 (B^2 - v3^2), B = v3 + x^2/2 gives E = g^2 B^2 / 2 and H = V(saddle) = B^3 g^2
    g, x, v3 = 1.0, 0.5, 0.5
    B = v3 + 0.5 * x * x
    u = g * math.sqrt(B * B - v3 * v3)
    q, v = np.array([x, 0.0, 0.0]), np.array([u, 0.0, v3])
    E = float(an.mb_energy(v, g))
    assert E == pytest.approx(0.5 * g * g * B * B)
    assert an.fish_equilibria(E, B, g)[1] == pytest.approx(B)
    sys_ = make_preset("mb-cons", g=g)
    zdot = sys_.acceleration(0.0, q, v)[2]
    assert an.fish_analysis(E, float(an.mb_B(q, v)), g, v3, zdot).orbit_kind == "homoclinic"


@given(scale=st.floats(0.01, 100.0))
def test_fish_classification_ignores_time_sampling(scale):
    tr_args = (4.0, 1.0, 1.0, -1.0, 0.1)
    assert an.fish_analysis(*tr_args).orbit_kind == "periodic"
    ts = np.linspace(0, 1, 5) * scale
    assert ts.size == 5  # classification uses only (E, B, g, z, zdot)


def test_fish_residual_along_mb_run():
    sys_ = make_preset("mb-cons")
    tr = integrate(sys_, (), State(0.0, [0.1, 0.0, 0.0], [0.0, 0.1, 0.5]), 20.0,
                   IntegratorConfig(h_max=0.02))
    assert an.fish_residual(tr) < 1e-3
    E, B = float(an.mb_energy(tr.v[0], 1.0)), float(an.mb_B(tr.q[0], tr.v[0]))
    H = an.fish_energy(tr.v[:, 2], tr.accelerations()[:, 2], E, B, 1.0)
    assert np.max(np.abs(H - H[0])) < 1e-5


def test_fish_residual_equilibrium_data():
    # q1 = q2 = v1 = v2 = 0: every v3 is an equilibrium of the z-equation
    tr = integrate(make_preset("mb-cons"), (), State(0.0, [0.0, 0.0, 0.2], [0.0, 0.0, 0.7]), 5.0)
    assert an.fish_residual(tr) < 1e-12


def test_fish_residual_on_direct_z_solution():
    E, B, g = 4.0, 1.0, 1.0
    sol = solve(an.fish_rhs(E, B, g), 0.0, [-1.0, 0.1], 5.0,
                IntegratorConfig(rtol=1e-12, atol=1e-12, h_max=2.5e-4))
    assert an.fish_residual_from_samples(sol.t, sol.y[:, 0], sol.y[:, 1], E, B, g) < 1e-6


def test_fish_residual_needs_conservative_regime():
    tr = integrate(make_preset("mb-diss"), (), State(0.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.5]), 1.0)
    with pytest.raises(RegimeError):
        an.fish_residual(tr)


def test_mb_scale_constant_matches_prefish_form():
    """The mb-scale constant equals minus the integrated z-equation, up to a constant."""
    sys_ = make_preset("mb-cons")
    nc = NonlocalConstant(sys_, mb_aniso_scaling_family())
    tr = integrate(sys_, [nc], State(0.0, [0.1, 0.0, 0.0], [0.0, 0.1, 0.5]), 5.0,
                   sample_times=np.linspace(0.0, 5.0, 20001))
    pre = an.mb_prefish_value(tr)
    total = tr.values[:, 0] + pre
    assert np.max(np.abs(total - total[0])) < 1e-7


def test_polar_reduction():
    tr = integrate(make_preset("mb-diss"), (), State(0.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.5]), 20.0)
    rep = an.mb_polar_reduction(tr)
    assert rep.radial_relative < 1e-6 and rep.q3_relative < 1e-6


def test_polar_recovery_example_and_circular_data():
    p = make_preset("mb-diss", k_pump=2.0).params
    q, v = np.array([1.0, 1.0, 0.0]), np.array([-1.0, 1.0, 1.0])
    M = float(an.mb_M(0.0, q, v, p))
    assert M == 0.0
    assert v[2] == p.k_pump - 0.5 * 2.0 + 0.5 * M
    # circular data: r' = 0 from the Cartesian formula
    r, thd = 1.3, 0.4
    qc, vc = np.array([r, 0.0]), np.array([0.0, r * thd])
    assert (qc @ vc) / r == 0.0


def test_polar_reduction_errors():
    tr = integrate(make_preset("mb-diss"), (), State(0.0, [0.0, 0.0, 0.0], [0.0, 0.0, 0.5]), 1.0)
    with pytest.raises(ContractViolation, match="below 1e-8"):
        an.mb_polar_reduction(tr)
    trc = integrate(make_preset("mb-cons"), (), State(0.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.5]), 1.0)
    with pytest.raises(RegimeError):
        an.mb_polar_reduction(trc)


def test_asymptotic_radius():
    assert an.asymptotic_radius(make_preset("mb-diss").params) == pytest.approx(math.sqrt(2.0))
    assert an.asymptotic_radius(make_preset("mb-diss", a=2.0, b=2.0, c=4.0, k_pump=1.0).params) == 0.0


@pytest.mark.parametrize("overrides, case", [({}, "circle"), (dict(a=2.0, b=2.0, c=4.0, k_pump=1.0), "origin")])
def test_asymptotics_probe(overrides, case):
    sys_ = make_preset("mb-diss", **overrides)
    tr = integrate(sys_, (), State(0.0, [0.3, 0.1, 0.0], [0.1, 0.2, 0.5]), 50.0)
    rep = an.mb_asymptotics(tr)
    assert rep.case == case
    # observational: reported against the tolerance, not a theorem
    assert rep.passed == (rep.deviation < rep.tolerance)
