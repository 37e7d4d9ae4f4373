"""Built-in models: potentials with drag terms and the Maxwell-Bloch system.

Every model supplies its Lagrangian derivatives in closed form.  Preset ids
(``central2``, ``calogero``, ``viscous``, ``hydraulic``, ``mb-cons``,
``mb-diss`` and the test model ``oscillator``) are resolved by
:func:`make_preset`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from .core import SecondOrderSystem
from .errors import ContractViolation, SingularConfigurationError


@dataclass(frozen=True)
class Potential:
    """Scalar potential with gradient; ``U_sup`` is an upper bound when known."""

    name: str
    U: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    U_sup: Optional[float] = None
    U_inf: Optional[float] = None


def zero_potential() -> Potential:
    return Potential("zero", lambda q: 0.0, lambda q: np.zeros_like(q), U_sup=0.0, U_inf=0.0)


def harmonic_potential(stiffness: float = 1.0) -> Potential:
    """``U = stiffness/2 |q|^2``."""
    return Potential(
        f"harmonic({stiffness:g})",
        lambda q: 0.5 * stiffness * float(np.dot(q, q)),
        lambda q: stiffness * np.asarray(q, dtype=float),
        U_inf=0.0,
    )


def bump_potential(U0: float = 1.0) -> Potential:
    """``U = U0 / (1 + |q|^2)``; takes values in ``(0, U0]``."""
    if U0 < 0:
        raise ContractViolation("bump height U0 must be non-negative")

    def U(q):
        return U0 / (1.0 + float(np.dot(q, q)))

    def grad(q):
        q = np.asarray(q, dtype=float)
        return -2.0 * U0 * q / (1.0 + float(np.dot(q, q))) ** 2

    return Potential(f"bump({U0:g})", U, grad, U_sup=float(U0), U_inf=0.0)


POTENTIALS = {
    "zero": lambda p: zero_potential(),
    "harmonic": lambda p: harmonic_potential(p.get("stiffness", 1.0)),
    "bump": lambda p: bump_potential(p.get("U0", 1.0)),
}


def _mechanical(name, dim, m, potential, drag_Q, drag_acc, params, weight=None):
    """``L = w(t) (m/2 |v|^2 - U)`` with a velocity-dependent force."""
    U, gU = potential.U, potential.grad
    w = weight or (lambda t: 1.0)

    def lagrangian(t, q, v):
        return w(t) * (0.5 * m * float(np.dot(v, v)) - U(q))

    def dL_dq(t, q, v):
        return -w(t) * gU(q)

    def dL_dv(t, q, v):
        return w(t) * m * np.asarray(v, dtype=float)

    def acceleration(t, q, v):
        return (drag_acc(v) - gU(q)) / m

    return SecondOrderSystem(dim, lagrangian, dL_dq, dL_dv, drag_Q, acceleration,
                             params=params, name=name, potential=potential)


def _positive(**kw):
    for k, val in kw.items():
        if not val > 0:
            raise ContractViolation(f"{k} must be positive, got {val}")


# --- homogeneous potentials of degree -2 -----------------------------------

@dataclass(frozen=True)
class CentralInverseSquareParams:
    m: float = 1.0
    k_pot: float = 0.5
    n: int = 2


def central_inverse_square_potential(k_pot: float) -> Potential:
    """``U = -k_pot / |q|^2``."""
    def U(q):
        r2 = float(np.dot(q, q))
        if r2 == 0.0:
            raise SingularConfigurationError("central potential evaluated at the origin")
        return -k_pot / r2

    def grad(q):
        q = np.asarray(q, dtype=float)
        r2 = float(np.dot(q, q))
        if r2 == 0.0:
            raise SingularConfigurationError("central potential evaluated at the origin")
        return 2.0 * k_pot * q / (r2 * r2)

    return Potential(f"central2({k_pot:g})", U, grad)


def make_central_inverse_square(p: CentralInverseSquareParams = CentralInverseSquareParams()) -> SecondOrderSystem:
    _positive(m=p.m)
    if p.n < 2:
        raise ContractViolation("central model needs n >= 2")
    pot = central_inverse_square_potential(p.k_pot)
    return _mechanical("central2", p.n, p.m, pot, _no_force, lambda v: 0.0 * v, p)


@dataclass(frozen=True)
class CalogeroParams:
    g2: float = 1.0
    n: int = 3
    m: float = 1.0


def calogero_potential(g2: float) -> Potential:
    """``U = g2 * sum_{j<k} (q_j - q_k)^-2``."""
    def _diffs(q):
        q = np.asarray(q, dtype=float)
        d = q[:, None] - q[None, :]
        iu = np.triu_indices(q.size, 1)
        if np.any(d[iu] == 0.0):
            raise SingularConfigurationError("Calogero potential evaluated at coinciding particles")
        return d, iu

    def U(q):
        d, iu = _diffs(q)
        return g2 * float(np.sum(d[iu] ** -2.0))

    def grad(q):
        d, _ = _diffs(q)
        np.fill_diagonal(d, np.inf)
        # dU/dq_j = -2 g2 sum_{k != j} (q_j - q_k)^-3
        return -2.0 * g2 * np.sum(d ** -3.0, axis=1)

    return Potential(f"calogero({g2:g})", U, grad, U_inf=0.0)


def make_calogero(p: CalogeroParams = CalogeroParams()) -> SecondOrderSystem:
    _positive(m=p.m, g2=p.g2)
    if p.n < 2:
        raise ContractViolation("Calogero model needs n >= 2 particles")
    return _mechanical("calogero", p.n, p.m, calogero_potential(p.g2), _no_force, lambda v: 0.0 * v, p)


# --- fluid resistance ------------------------------------------------------

def _no_force(t, q, v):
    return np.zeros_like(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class ViscousParams:
    m: float = 1.0
    k_drag: float = 0.5
    potential: Potential = field(default_factory=lambda: harmonic_potential(1.0))
    n: int = 1


def make_viscous(p: ViscousParams = ViscousParams()) -> SecondOrderSystem:
    """Linear drag written variationally: ``L = e^{kt/m} (m/2 |v|^2 - U)``, ``Q = 0``."""
    _positive(m=p.m, k_drag=p.k_drag)
    rate = p.k_drag / p.m
    k = p.k_drag
    return _mechanical("viscous", p.n, p.m, p.potential, _no_force, lambda v: -k * v, p,
                       weight=lambda t: math.exp(rate * t))


@dataclass(frozen=True)
class HydraulicParams:
    m: float = 1.0
    k_drag: float = 1.0
    potential: Potential = field(default_factory=lambda: bump_potential(1.0))
    n: int = 1

    @property
    def U_sup(self) -> float:
        if self.potential.U_sup is None:
            raise ContractViolation(f"potential {self.potential.name} has no recorded upper bound")
        return self.potential.U_sup


def make_hydraulic(p: HydraulicParams = HydraulicParams()) -> SecondOrderSystem:
    """Quadratic drag as a generalized force: ``Q = -k |v| v``."""
    _positive(m=p.m, k_drag=p.k_drag)
    k = p.k_drag

    def quad_drag(v):
        v = np.asarray(v, dtype=float)
        return -k * np.linalg.norm(v) * v

    return _mechanical("hydraulic", p.n, p.m, p.potential, lambda t, q, v: quad_drag(v), quad_drag, p)


# --- test model ------------------------------------------------------------

@dataclass(frozen=True)
class OscillatorParams:
    m: float = 1.0
    stiffness: float = 1.0
    n: int = 1


def make_oscillator(p: OscillatorParams = OscillatorParams()) -> SecondOrderSystem:
    """Undamped harmonic oscillator, used for integrator verification."""
    _positive(m=p.m)
    return _mechanical("oscillator", p.n, p.m, harmonic_potential(p.stiffness), _no_force,
                       lambda v: 0.0 * v, p)


def oscillator_solution(p: OscillatorParams, s0) -> Callable[[float], tuple]:
    """Exact ``t -> (q, v)`` of the oscillator started from ``s0``."""
    w = math.sqrt(p.stiffness / p.m)
    q0 = np.asarray(s0.q, dtype=float)
    v0 = np.asarray(s0.v, dtype=float)

    def exact(t):
        c, s = math.cos(w * (t - s0.t)), math.sin(w * (t - s0.t))
        return q0 * c + v0 * s / w, -q0 * w * s + v0 * c

    return exact


# --- Maxwell-Bloch ---------------------------------------------------------

@dataclass(frozen=True)
class MaxwellBlochParams:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    g: float = 1.0
    k_pump: float = 0.0

    @property
    def conservative(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0


def make_maxwell_bloch(p: MaxwellBlochParams = MaxwellBlochParams()) -> SecondOrderSystem:
    """Resonant Maxwell-Bloch equations in Lagrangian form, ``n = 3``.

    L = 1/2 (v1^2 + v2^2 + g^2 v3^2 + (q1^2 + q2^2)(g^2 v3 - ab))
    Q = -((a+b) v1, (a+b) v2, a g^2 (q1^2 + q2^2) + c g^2 (v3 - k))

    so dL/dv3 = g^2 v3 + g^2 (q1^2 + q2^2) / 2; the FD consistency test
    locks this against the acceleration below.
    """
    if min(p.a, p.b, p.c) < 0:
        raise ContractViolation("a, b, c must be non-negative")
    _positive(g=p.g)
    a, b, c, k = p.a, p.b, p.c, p.k_pump
    g2 = p.g * p.g
    ab, apb = a * b, a + b

    def lagrangian(t, q, v):
        r2 = q[0] ** 2 + q[1] ** 2
        return 0.5 * (v[0] ** 2 + v[1] ** 2 + g2 * v[2] ** 2 + r2 * (g2 * v[2] - ab))

    def dL_dq(t, q, v):
        w = g2 * v[2] - ab
        return np.array([q[0] * w, q[1] * w, 0.0])

    def dL_dv(t, q, v):
        r2 = q[0] ** 2 + q[1] ** 2
        return np.array([v[0], v[1], g2 * v[2] + 0.5 * g2 * r2])

    def force_Q(t, q, v):
        r2 = q[0] ** 2 + q[1] ** 2
        return -np.array([apb * v[0], apb * v[1], a * g2 * r2 + c * g2 * (v[2] - k)])

    def acceleration(t, q, v):
        r2 = q[0] ** 2 + q[1] ** 2
        return np.array([
            -ab * q[0] - apb * v[0] + g2 * q[0] * v[2],
            -ab * q[1] - apb * v[1] + g2 * q[1] * v[2],
            -a * r2 - c * (v[2] - k) - (q[0] * v[0] + q[1] * v[1]),
        ])

    name = "mb-cons" if p.conservative else "mb-diss"
    return SecondOrderSystem(3, lagrangian, dL_dq, dL_dv, force_Q, acceleration, params=p, name=name)


# --- presets ---------------------------------------------------------------

@dataclass(frozen=True)
class Preset:
    id: str
    description: str
    reference: str
    builder: Callable
    params_type: type
    defaults: dict


PRESETS = {
    p.id: p for p in [
        Preset("central2", "point mass in U = -k_pot/|q|^2", "homogeneous degree -2 potentials",
               make_central_inverse_square, CentralInverseSquareParams, {}),
        Preset("calogero", "Calogero chain U = g2 sum (q_j - q_k)^-2", "homogeneous degree -2 potentials",
               make_calogero, CalogeroParams, {}),
        Preset("viscous", "linear drag m q'' = -k q' - grad U", "viscous fluid resistance",
               make_viscous, ViscousParams, {"potential": "harmonic"}),
        Preset("hydraulic", "quadratic drag m q'' = -k |q'| q' - grad U", "hydraulic fluid resistance",
               make_hydraulic, HydraulicParams, {"potential": "bump"}),
        Preset("mb-cons", "Maxwell-Bloch, conservative a=b=c=0", "Maxwell-Bloch conservative case",
               make_maxwell_bloch, MaxwellBlochParams, {"g": 1.0}),
        Preset("mb-diss", "Maxwell-Bloch, dissipative with c=2a", "Maxwell-Bloch dissipative case",
               make_maxwell_bloch, MaxwellBlochParams, {"a": 1.0, "b": 1.0, "c": 2.0, "g": 1.0, "k_pump": 2.0}),
        Preset("oscillator", "harmonic oscillator (integrator checks)", "test model",
               make_oscillator, OscillatorParams, {}),
    ]
}


def make_preset(model_id: str, **overrides) -> SecondOrderSystem:
    """Build a preset model; numeric overrides replace parameter defaults.

    ``potential`` (``zero``/``harmonic``/``bump``) together with ``U0`` and
    ``stiffness`` selects the potential of the drag models.
    """
    try:
        preset = PRESETS[model_id]
    except KeyError:
        raise ContractViolation(f"unknown model preset {model_id!r}") from None
    opts = {**preset.defaults, **overrides}
    names = {f.name for f in fields(preset.params_type)}
    kwargs = {}
    if "potential" in names:
        pot = opts.pop("potential", "zero")
        if isinstance(pot, str):
            if pot not in POTENTIALS:
                raise ContractViolation(f"unknown potential {pot!r}")
            pot = POTENTIALS[pot](opts)
        kwargs["potential"] = pot
    opts.pop("U0", None)
    if preset.params_type is not OscillatorParams:
        opts.pop("stiffness", None)
    for key, val in opts.items():
        if key not in names:
            raise ContractViolation(f"model {model_id!r} has no parameter {key!r}")
        kwargs[key] = int(val) if key == "n" else float(val)
    params = preset.params_type(**kwargs)
    return preset.builder(params)


def with_params(system: SecondOrderSystem, **changes) -> SecondOrderSystem:
    """Rebuild a preset model with some parameters replaced."""
    builders = {p.params_type: p.builder for p in PRESETS.values()}
    return builders[type(system.params)](replace(system.params, **changes))
