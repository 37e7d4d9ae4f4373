"""Quantities derived from the constants of motion, evaluated on trajectories.

Covers the degree -2 integrals and radial law, the monotone bound under
viscous drag, the hydraulic identity together with its comparison problem
and explosion time, and the Maxwell-Bloch reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate as spi

from .core import NonlocalConstant, Quadrature, SecondOrderSystem, State
from .families import hyd_shift_family
from .integrate import IntegratorConfig, Trajectory, integrate, solve
from .errors import (ContractViolation, LawViolation, PreconditionError, RegimeError)
from .models import HydraulicParams, MaxwellBlochParams


def _mass(system: SecondOrderSystem) -> float:
    m = getattr(system.params, "m", None)
    if m is None:
        raise ContractViolation(f"model {system.name!r} has no mass parameter")
    return float(m)


# --- homogeneous potentials of degree -2 -----------------------------------

@dataclass(frozen=True)
class Hom2Integrals:
    E: float
    K: float
    K1: float


def hom2_integrals(system: SecondOrderSystem, s: State) -> Hom2Integrals:
    """Energy ``E``, scaling constant ``K = m v.q - 2tE`` and ``K1 = m/2 |q|^2 - t^2 E - t K``."""
    if system.potential is None:
        raise ContractViolation("hom2_integrals needs a mechanical model with a potential")
    m = _mass(system)
    E = 0.5 * m * float(np.dot(s.v, s.v)) + system.potential.U(s.q)
    K = m * float(np.dot(s.v, s.q)) - 2.0 * s.t * E
    K1 = 0.5 * m * float(np.dot(s.q, s.q)) - s.t ** 2 * E - s.t * K
    return Hom2Integrals(E, K, K1)


def radial_law(t, integrals: Hom2Integrals, m: float) -> np.ndarray:
    """``|q(t)|^2`` predicted from the three constants."""
    t = np.asarray(t, dtype=float)
    return (2.0 / m) * (t ** 2 * integrals.E + t * integrals.K + integrals.K1)


def radial_law_residual(traj: Trajectory, integrals: Optional[Hom2Integrals] = None) -> float:
    """Max over samples of ``| |q(t)|^2 - (2/m)(t^2 E + t K + K1) |``.

    Raises :class:`LawViolation` when the predicted ``|q|^2`` is negative
    beyond rounding, which no actual motion can produce.
    """
    m = _mass(traj.system)
    if integrals is None:
        integrals = hom2_integrals(traj.system, traj.state(0))
    pred = radial_law(traj.t, integrals, m)
    r2 = np.sum(traj.q ** 2, axis=1)
    scale = 1.0 + np.max(np.abs(r2))
    bad = np.nonzero(pred < -1e-12 * scale)[0]
    if bad.size:
        raise LawViolation(f"negative radicand {pred[bad[0]]:.3e} at t={traj.t[bad[0]]!r}")
    return float(np.max(np.abs(r2 - pred)))


# --- viscous drag ----------------------------------------------------------

@dataclass(frozen=True)
class ViscousBoundReport:
    """Monotonicity of ``W(t) = e^{2kt/m}(m|v|^2 + 2U)`` and the past bound."""

    monotone: bool
    bound_holds: bool
    max_decrease: float
    scale: float
    first_violation: Optional[float]
    values: np.ndarray = field(repr=False)

    @property
    def ok(self) -> bool:
        return self.monotone and self.bound_holds


def viscous_weighted_energy(traj: Trajectory, k: float, m: float, potential=None) -> np.ndarray:
    pot = potential or traj.system.potential
    U = np.array([pot.U(q) for q in traj.q])
    return np.exp(2.0 * k * traj.t / m) * (m * np.sum(traj.v ** 2, axis=1) + 2.0 * U)


def viscous_bound_check(traj: Trajectory, k: float, m: float, potential=None,
                        tol: float = 1e-8) -> ViscousBoundReport:
    """Check that ``W`` is non-decreasing in ``t`` and bounds ``m e^{2kt/m}|v|^2`` for ``t <= t0``."""
    W = viscous_weighted_energy(traj, k, m, potential)
    order = np.argsort(traj.t)
    Ws, ts = W[order], traj.t[order]
    scale = float(np.max(np.abs(W))) if W.size else 1.0
    dec = -np.diff(Ws)
    max_dec = float(np.max(dec)) if dec.size else 0.0
    first = None
    monotone = True
    if dec.size and max_dec > tol * scale:
        monotone = False
        first = float(ts[1 + int(np.argmax(dec > tol * scale))])
    t0 = traj.t[0]
    past = traj.t <= t0
    kin = m * np.exp(2.0 * k * traj.t / m) * np.sum(traj.v ** 2, axis=1)
    excess = kin[past] - W[0]
    bound = bool(np.all(excess <= tol * scale))
    if not bound and first is None:
        first = float(traj.t[past][int(np.argmax(excess > tol * scale))])
    return ViscousBoundReport(monotone, bound, max_dec, scale, first, W)


# --- hydraulic drag --------------------------------------------------------

def hydraulic_quadrature(a: float, m: float, k: float, potential) -> Quadrature:
    """Integrand ``e^{-as} (2k|v|^3 + a m |v|^2 + 2a U(q)) / 2`` of the hydraulic identity."""
    U = potential.U

    def f(t, q, v):
        sp = float(np.linalg.norm(v))
        return 0.5 * math.exp(-a * t) * (2.0 * k * sp ** 3 + a * m * sp * sp + 2.0 * a * U(q))

    return Quadrature(f"hyd-integral:{a:g}", f)


def _hyd_args(traj: Trajectory, a, m, k, potential):
    p = traj.system.params
    if isinstance(p, HydraulicParams):
        m = p.m if m is None else m
        k = p.k_drag if k is None else k
        potential = p.potential if potential is None else potential
    if m is None or k is None or potential is None:
        raise ContractViolation("hydraulic analysis needs m, k and the potential")
    return a, m, k, potential


def hydraulic_lhs(traj: Trajectory, a: float, m=None, k=None, potential=None) -> np.ndarray:
    """Left side of the hydraulic identity at every sample.

    m/2 e^{-at}|v|^2 + e^{-at}U(q) - e^{-at0}U(q0) + (1/2) int_{t0}^t e^{-as}(2k|v|^3 + am|v|^2 + 2aU) ds

    The integral must have been co-integrated with :func:`hydraulic_quadrature`.
    """
    a, m, k, potential = _hyd_args(traj, a, m, k, potential)
    quad = hydraulic_quadrature(a, m, k, potential)
    if quad.name not in traj.extras:
        raise ContractViolation(f"trajectory lacks co-integrated quadrature {quad.name!r}")
    U = np.array([potential.U(q) for q in traj.q])
    ex = np.exp(-a * traj.t)
    return (0.5 * m * ex * np.sum(traj.v ** 2, axis=1) + ex * U - ex[0] * U[0]
            + traj.extras[quad.name])


def hydraulic_invariant(traj: Trajectory, a: float, m=None, k=None, potential=None) -> float:
    """Max ``|LHS(t) - m/2 e^{-at0}|v(t0)|^2|`` along the trajectory."""
    a, m, k, potential = _hyd_args(traj, a, m, k, potential)
    lhs = hydraulic_lhs(traj, a, m, k, potential)
    rhs = 0.5 * m * math.exp(-a * traj.t[0]) * float(np.dot(traj.v[0], traj.v[0]))
    return float(np.max(np.abs(lhs - rhs)))


def comparison_rate(z, a, m, k, U_sup):
    """Right side of the comparison ODE ``z' = -(2/m)(k z^{3/2} - a U_sup)``."""
    return -(2.0 / m) * (k * np.abs(z) ** 1.5 - a * U_sup)


def comparison_condition(z0: float, a: float, k: float, U_sup: float) -> bool:
    """``k z0^{3/2} > a U_sup``, i.e. ``|v0|^2 > 2U_sup/m + (a U_sup/k)^{2/3}``."""
    return z0 > 0 and k * z0 ** 1.5 > a * U_sup


def _check_comparison(z0, a, m, k, U_sup, strict: bool):
    if not (m > 0 and k > 0 and a >= 0 and U_sup >= 0):
        raise ContractViolation("comparison problem needs m, k > 0 and a, U_sup >= 0")
    if z0 < 0 or k * z0 ** 1.5 < a * U_sup or (strict and not comparison_condition(z0, a, k, U_sup)):
        raise PreconditionError(
            "comparison condition violated: need k z0^(3/2) > a U_sup "
            f"(|v0|^2 > 2U_sup/m + (a U_sup/k)^(2/3)); got z0={z0!r}, a={a!r}, k={k!r}, U_sup={U_sup!r}"
        )


def comparison_z(t, z0: float, a: float, m: float, k: float, U_sup: float, t0: float = 0.0,
                 cfg: Optional[IntegratorConfig] = None) -> np.ndarray:
    """Solution of the comparison problem ``z(t0) = z0`` at the times ``t``.

    Integrated with the adaptive solver toward the earliest (or latest)
    requested time.  Times at or beyond the numerical explosion return
    ``inf``.
    """
    _check_comparison(z0, a, m, k, U_sup, strict=False)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.full(ts.shape, np.inf)
    cfg = cfg or IntegratorConfig(rtol=1e-12, atol=1e-12, blowup_threshold=1e16)
    out[ts == t0] = z0

    def rhs(_t, y):
        return np.array([comparison_rate(y[0], a, m, k, U_sup)])

    for side in (-1, 1):
        mask = (ts - t0) * side > 0
        if not np.any(mask):
            continue
        far = t0 + side * np.max(np.abs(ts[mask] - t0))
        sol = solve(rhs, t0, [z0], far, cfg, blowup_norm=lambda y: abs(y[0]))
        reach = np.abs(sol.t[-1] - t0)
        inside = mask & (np.abs(ts - t0) <= reach)
        if np.any(inside):
            out[inside] = sol(ts[inside])[:, 0]
    return out if np.ndim(t) else out[0]


def explosion_time(z0: float, a: float, m: float, k: float, U_sup: float) -> float:
    """Return ``t* - t0 < 0``, the backward explosion time of the comparison solution.

    ``int_{z0}^inf du / (k u^{3/2} - a U_sup)`` becomes, under ``u = w^-2``,
    ``int_0^{z0^{-1/2}} 2 dw / (k - a U_sup w^3)`` with a bounded integrand.
    """
    _check_comparison(z0, a, m, k, U_sup, strict=True)
    w0 = z0 ** -0.5
    c = a * U_sup
    val, _err = spi.quad(lambda w: 2.0 / (k - c * w ** 3), 0.0, w0, epsabs=0.0, epsrel=1e-12, limit=200)
    return -0.5 * m * val


def explosion_time_closed_form(z0: float, a: float, m: float, k: float, U_sup: float) -> float:
    """:func:`explosion_time` via the antiderivative of ``1/(1 - x^3)``.

    With ``alpha = (a U_sup / k)^{1/3}`` and ``x = alpha z0^{-1/2} < 1``,
    ``t* - t0 = -(m/(k alpha)) F(x)`` where
    ``F(x) = ln((x^2+x+1)/(x-1)^2)/6 + (atan((2x+1)/sqrt3) - pi/6)/sqrt3``.
    """
    _check_comparison(z0, a, m, k, U_sup, strict=True)
    w0 = z0 ** -0.5
    c = a * U_sup
    if c == 0.0:
        return -m * w0 / k
    alpha = (c / k) ** (1.0 / 3.0)
    x = alpha * w0
    F = (math.log((x * x + x + 1.0) / (x - 1.0) ** 2) / 6.0
         + (math.atan((2.0 * x + 1.0) / math.sqrt(3.0)) - math.pi / 6.0) / math.sqrt(3.0))
    return -m * F / (k * alpha)


@dataclass
class BlowupReport:
    """Backward blow-up experiment for the hydraulic model."""

    a: float
    z0: float
    condition_satisfied: bool
    t_star: float
    t_detect: Optional[float]
    status: str
    bound_holds: Optional[bool]
    comparison_margin: float
    comparison_holds: bool
    cause: str = ""

    @property
    def blew_up(self) -> bool:
        return self.status == "blew_up"


def blowup_experiment(system: SecondOrderSystem, s0: State, a: float, t_end: Optional[float] = None,
                      cfg: Optional[IntegratorConfig] = None, traj: Optional[Trajectory] = None,
                      tol: float = 1e-6) -> BlowupReport:
    """Integrate a hydraulic motion backward until it explodes and compare with ``t*``.

    The initial kinetic energy must exceed ``U_sup``.  ``traj`` may hold an
    already computed backward run from ``s0`` (the motion does not depend on
    ``a``).  A run that neither blows up nor reaches ``t_end`` is reported
    as ``inconclusive``.
    """
    p = system.params
    if not isinstance(p, HydraulicParams):
        raise ContractViolation("blowup_experiment needs the hydraulic model")
    if t_end is not None and not t_end < s0.t:
        raise ContractViolation("blowup_experiment integrates backward: t_end must be < t0")
    m, k, U_sup = p.m, p.k_drag, p.U_sup
    v2 = float(np.dot(s0.v, s0.v))
    if not 0.5 * m * v2 > U_sup:
        raise PreconditionError(
            f"initial kinetic energy {0.5 * m * v2!r} must exceed U_sup={U_sup!r}")
    z0 = v2 - 2.0 * U_sup / m
    cond = comparison_condition(z0, a, k, U_sup)
    t_star = s0.t + explosion_time(z0, a, m, k, U_sup) if cond else math.nan
    if traj is None:
        if t_end is None:
            t_end = t_star - 1.0 if cond else s0.t - 1e3
        cfg = cfg or IntegratorConfig(rtol=1e-10, atol=1e-10, h_min=1e-12, blowup_threshold=1e8)
        traj = integrate(system, (), State(s0.t, s0.q, s0.v), t_end, cfg)
    elif traj.direction > 0:
        raise ContractViolation("blowup_experiment needs a backward trajectory")

    status = "blew_up" if traj.blew_up else "inconclusive"
    t_detect = traj.t_detect
    bound = (t_detect >= t_star) if (cond and t_detect is not None) else None

    margin = math.nan
    holds = True
    if cond:
        z = comparison_z(traj.t, z0, a, m, k, U_sup, t0=s0.t)
        v2s = np.sum(traj.v ** 2, axis=1)
        scale = np.maximum(1.0, np.maximum(v2s, np.where(np.isfinite(z), z, 0.0)))
        rel = np.where(np.isfinite(z), (v2s - z) / scale, -np.inf)
        margin = float(np.min(rel))
        holds = margin >= -tol
    return BlowupReport(a, z0, cond, t_star, t_detect, status, bound, margin, holds, traj.cause)


# --- Maxwell-Bloch ---------------------------------------------------------

def _mb_params(system_or_params) -> MaxwellBlochParams:
    p = getattr(system_or_params, "params", system_or_params)
    if not isinstance(p, MaxwellBlochParams):
        raise ContractViolation("a Maxwell-Bloch model is required")
    return p


def mb_energy(v, g: float):
    v = np.asarray(v, dtype=float)
    return 0.5 * (v[..., 0] ** 2 + v[..., 1] ** 2 + g * g * v[..., 2] ** 2)


def mb_B(q, v):
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return v[..., 2] + 0.5 * (q[..., 0] ** 2 + q[..., 1] ** 2)


def mb_M(t, q, v, p: MaxwellBlochParams):
    """``e^{2at}(q1^2 + q2^2 + 2 v3 - 2k)``; a first integral when ``c = 2a``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.exp(2 * p.a * np.asarray(t)) * (q[..., 0] ** 2 + q[..., 1] ** 2 + 2 * v[..., 2] - 2 * p.k_pump)


def mb_N(t, q, v, p: MaxwellBlochParams):
    """``e^{(a+b)t} r^2 theta'`` with ``r^2 theta' = q1 v2 - q2 v1``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.exp((p.a + p.b) * np.asarray(t)) * (q[..., 0] * v[..., 1] - q[..., 1] * v[..., 0])


@dataclass
class MBConservedSet:
    """Initial values and scaled drifts of the Maxwell-Bloch integrals.

    Each drift is ``max_i |X_i - X_0| / max(s_i, s_0)`` where ``s_i`` is the
    sum of the magnitudes of the terms forming ``X`` at sample ``i``.
    """

    regime: str
    E_mb: Optional[float] = None
    B: Optional[float] = None
    M_int: Optional[float] = None
    N_int: Optional[float] = None
    drift: dict = field(default_factory=dict)


def _scaled_drift(x: np.ndarray, scale: np.ndarray) -> float:
    s = np.maximum(np.maximum(scale, scale[0]), np.finfo(float).tiny)
    return float(np.max(np.abs(x - x[0]) / s))


def mb_conserved(traj: Trajectory, params: Optional[MaxwellBlochParams] = None,
                 regime: str = "conservative") -> MBConservedSet:
    p = params or _mb_params(traj.system)
    q, v, t = traj.q, traj.v, traj.t
    out = MBConservedSet(regime)
    if regime == "conservative":
        bad = [n for n in ("a", "b", "c") if getattr(p, n) != 0]
        if bad:
            raise RegimeError(f"conservative regime needs a=b=c=0; nonzero: {', '.join(bad)}")
        E = mb_energy(v, p.g)
        B = mb_B(q, v)
        out.E_mb, out.B = float(E[0]), float(B[0])
        out.drift["E_mb"] = _scaled_drift(E, E)
        out.drift["B"] = _scaled_drift(B, np.abs(v[:, 2]) + 0.5 * (q[:, 0] ** 2 + q[:, 1] ** 2))
    elif regime == "dissipative":
        if not (p.a > 0 and p.b > 0 and p.c > 0):
            raise RegimeError("dissipative regime needs a, b, c > 0")
        if not math.isclose(p.c, 2 * p.a, rel_tol=1e-12):
            raise RegimeError(f"the M integral needs c = 2a; got c={p.c!r}, a={p.a!r}")
        M = mb_M(t, q, v, p)
        out.M_int = float(M[0])
        out.drift["M"] = _scaled_drift(
            M, np.exp(2 * p.a * t) * (q[:, 0] ** 2 + q[:, 1] ** 2 + 2 * np.abs(v[:, 2]) + 2 * abs(p.k_pump)))
    else:
        raise RegimeError(f"unknown regime {regime!r}")
    N = mb_N(t, q, v, p)
    out.N_int = float(N[0])
    out.drift["N"] = _scaled_drift(
        N, np.exp((p.a + p.b) * t) * (np.abs(q[:, 0] * v[:, 1]) + np.abs(q[:, 1] * v[:, 0])))
    return out


@dataclass(frozen=True)
class FishClassification:
    equilibria: tuple
    orbit_kind: str
    energy: Optional[float] = None
    saddle_energy: Optional[float] = None


def fish_equilibria(E: float, B: float, g: float) -> tuple:
    """Real roots of ``3 g^2 z^2 - 2 B g^2 z - 2E``, ascending."""
    disc = B * B + 6.0 * E / (g * g)
    if disc < 0:
        return ()
    if disc == 0:
        return (B / 3.0,)
    r = math.sqrt(disc)
    return ((B - r) / 3.0, (B + r) / 3.0)


def fish_potential(z, E: float, B: float, g: float):
    return B * g * g * z * z + 2.0 * E * z - g * g * z ** 3


def fish_energy(z, zdot, E: float, B: float, g: float):
    """``zdot^2/2 + B g^2 z^2 + 2 E z - g^2 z^3``, conserved by the z-equation."""
    return 0.5 * zdot * zdot + fish_potential(z, E, B, g)


def fish_rhs(E: float, B: float, g: float):
    """First-order form of ``z'' = -2 B g^2 z - 2E + 3 g^2 z^2`` for ``y = (z, z')``."""
    g2 = g * g

    def f(t, y):
        return np.array([y[1], -2.0 * B * g2 * y[0] - 2.0 * E + 3.0 * g2 * y[0] ** 2])

    return f


def fish_analysis(E: float, B: float, g: float, z: Optional[float] = None,
                  zdot: Optional[float] = None, rel_tol: float = 1e-9) -> FishClassification:
    """Equilibria of the z-equation and the kind of orbit through ``(z, zdot)``.

    The larger root is a saddle of the cubic potential, the smaller one a
    centre; orbits inside the loop are periodic, orbits on the saddle level
    with ``z`` left of the saddle are homoclinic.
    """
    eq = fish_equilibria(E, B, g)
    if not eq:
        return FishClassification((), "no-equilibria")
    if z is None:
        return FishClassification(eq, "unclassified")
    zdot = 0.0 if zdot is None else zdot
    H = float(fish_energy(z, zdot, E, B, g))
    for ze in eq:
        ztol = rel_tol * max(1.0, abs(ze))
        if abs(z - ze) <= ztol and abs(zdot) <= ztol:
            return FishClassification(eq, "equilibrium", H, float(fish_potential(eq[-1], E, B, g)))
    if len(eq) == 1:
        return FishClassification(eq, "unbounded", H, float(fish_potential(eq[0], E, B, g)))
    z_saddle = eq[1]
    Hs = float(fish_potential(z_saddle, E, B, g))
    htol = rel_tol * max(1.0, abs(H), abs(Hs))
    if z < z_saddle and abs(H - Hs) <= htol:
        kind = "homoclinic"
    elif z < z_saddle and H < Hs:
        kind = "periodic"
    else:
        kind = "unbounded"
    return FishClassification(eq, kind, H, Hs)


def fish_residual_from_samples(t, z, zdot, E: float, B: float, g: float) -> float:
    """Max ``|z'' + 2Bg^2 z + 2E - 3g^2 z^2|`` on interior samples, ``z''`` by finite differences."""
    t = np.asarray(t, dtype=float)
    if t.size < 3:
        raise ContractViolation("need at least three samples")
    zdd = np.gradient(np.asarray(zdot, dtype=float), t, edge_order=2)
    z = np.asarray(z, dtype=float)
    res = zdd + 2.0 * B * g * g * z + 2.0 * E - 3.0 * g * g * z * z
    return float(np.max(np.abs(res[1:-1])))


def fish_residual(traj: Trajectory, params: Optional[MaxwellBlochParams] = None) -> float:
    """Residual of the z-equation along a conservative trajectory, ``z = v3``.

    ``z'`` is the model's third acceleration component; ``z''`` is one more
    finite difference on the samples, so the result is FD-limited.
    """
    p = params or _mb_params(traj.system)
    if not p.conservative:
        raise RegimeError("the z-equation holds in the conservative regime only")
    E = float(mb_energy(traj.v[0], p.g))
    B = float(mb_B(traj.q[0], traj.v[0]))
    acc = traj.accelerations()
    return fish_residual_from_samples(traj.t, traj.v[:, 2], acc[:, 2], E, B, p.g)


def mb_prefish_value(traj: Trajectory, params: Optional[MaxwellBlochParams] = None) -> np.ndarray:
    """``q3'' + 2 B g^2 q3 + 2 E t - 3 g^2 int_{t0}^t v3^2`` at the samples (conservative case).

    The integral is accumulated by the trapezoid rule on the samples.
    """
    p = params or _mb_params(traj.system)
    g2 = p.g ** 2
    E = float(mb_energy(traj.v[0], p.g))
    B = float(mb_B(traj.q[0], traj.v[0]))
    acc = traj.accelerations()
    v3sq = traj.v[:, 2] ** 2
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (v3sq[1:] + v3sq[:-1]) * np.diff(traj.t))])
    return acc[:, 2] + 2 * B * g2 * traj.q[:, 2] + 2 * E * traj.t - 3 * g2 * integral


@dataclass(frozen=True)
class PolarReport:
    radial_residual: float
    radial_scale: float
    q3_residual: float
    q3_scale: float

    @property
    def radial_relative(self) -> float:
        return self.radial_residual / self.radial_scale

    @property
    def q3_relative(self) -> float:
        return self.q3_residual / self.q3_scale


def mb_polar_reduction(traj: Trajectory, params: Optional[MaxwellBlochParams] = None,
                       M: Optional[float] = None, N: Optional[float] = None) -> PolarReport:
    """Residuals of the polar radial equation and of the ``v3`` recovery formula.

    r'' = -(a+b) r' + (g^2 k - ab + g^2 M e^{-2at}/2) r - g^2 r^3/2 + N^2 e^{-2(a+b)t} / r^3
    v3  = k - r^2/2 + M e^{-2at}/2

    ``r''`` comes from the Cartesian accelerations.  Scales are the largest
    term magnitudes over the samples.
    """
    p = params or _mb_params(traj.system)
    if not (p.a > 0 and math.isclose(p.c, 2 * p.a, rel_tol=1e-12)):
        raise RegimeError("the polar reduction needs the dissipative regime with c = 2a")
    t, q, v = traj.t, traj.q, traj.v
    if M is None:
        M = float(mb_M(t[0], q[0], v[0], p))
    if N is None:
        N = float(mb_N(t[0], q[0], v[0], p))
    r = np.hypot(q[:, 0], q[:, 1])
    if np.min(r) < 1e-8:
        raise ContractViolation(f"polar reduction undefined: r={np.min(r):.3e} below 1e-8")
    acc = traj.accelerations()
    rd = (q[:, 0] * v[:, 0] + q[:, 1] * v[:, 1]) / r
    rdd = (q[:, 0] * acc[:, 0] + q[:, 1] * acc[:, 1] + v[:, 0] ** 2 + v[:, 1] ** 2 - rd ** 2) / r
    g2, apb, ab = p.g ** 2, p.a + p.b, p.a * p.b
    lin = (g2 * p.k_pump - ab + 0.5 * g2 * M * np.exp(-2 * p.a * t)) * r
    cub = 0.5 * g2 * r ** 3
    cen = N * N * np.exp(-2 * apb * t) / r ** 3
    res35 = rdd - (-apb * rd + lin - cub + cen)
    scale35 = np.abs(rdd) + apb * np.abs(rd) + np.abs(lin) + cub + cen
    half_m = 0.5 * M * np.exp(-2 * p.a * t)
    res37 = v[:, 2] - (p.k_pump - 0.5 * r * r + half_m)
    scale37 = np.abs(v[:, 2]) + abs(p.k_pump) + 0.5 * r * r + np.abs(half_m)
    return PolarReport(float(np.max(np.abs(res35))), float(np.max(scale35)),
                       float(np.max(np.abs(res37))), float(np.max(scale37)))


def asymptotic_radius(p: MaxwellBlochParams) -> float:
    """``sqrt(2(g^2 k - ab))/g`` when ``g^2 k > ab``, else 0."""
    gap = p.g ** 2 * p.k_pump - p.a * p.b
    return math.sqrt(2.0 * gap) / p.g if gap > 0 else 0.0


@dataclass(frozen=True)
class AsymptoticsReport:
    """Observation of the long-time radius; a probe of an open conjecture, not a theorem check."""

    r_inf: float
    r_final: float
    T: float
    deviation: float
    tolerance: float
    passed: bool
    case: str


def mb_asymptotics(traj: Trajectory, params: Optional[MaxwellBlochParams] = None,
                   tol: float = 1e-2) -> AsymptoticsReport:
    p = params or _mb_params(traj.system)
    r_inf = asymptotic_radius(p)
    r_T = float(np.hypot(traj.q[-1, 0], traj.q[-1, 1]))
    dev = abs(r_T - r_inf)
    return AsymptoticsReport(r_inf, r_T, float(traj.t[-1]), dev, tol, dev < tol,
                             "circle" if r_inf > 0 else "origin")


def hydraulic_constant(system: SecondOrderSystem, a: float) -> NonlocalConstant:
    """The nonlocal constant of the ``hshift:a`` family on a hydraulic model."""
    return NonlocalConstant(system, hyd_shift_family(a))
