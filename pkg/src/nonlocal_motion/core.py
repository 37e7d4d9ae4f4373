"""Systems, perturbation families and the nonlocal-constant evaluator.

A motion ``q(t)`` of the Lagrange equation with generalized force ``Q``

    d/dt dL/dv - dL/dq = Q

and any smooth family ``q_lam(t)`` with ``q_0 = q`` give the constant

    C(t) = dL/dv . dq_lam  -  int_{t0}^{t} (d/dlam L(s, q_lam, v_lam) + Q . dq_lam) ds

where ``dq_lam`` is the lambda-derivative at lambda = 0.  The local part is
:func:`boundary_term`, the integrand is :func:`integrand_M`, and the integral
is carried by the integrator as extra state components (see
:class:`AugmentedSystem`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .errors import ContractViolation, NonFiniteError

VectorFn = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
ScalarFn = Callable[[float, np.ndarray, np.ndarray], float]
FamilyFn = Callable[[float, np.ndarray, np.ndarray, np.ndarray], np.ndarray]

FD_REL_STEP = 1e-6


@dataclass
class State:
    """Time, configuration, velocity and running integrals of one motion."""

    t: float
    q: np.ndarray
    v: np.ndarray
    acc_integrals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.t = float(self.t)
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        self.acc_integrals = np.atleast_1d(np.asarray(self.acc_integrals, dtype=float)).copy()
        if self.q.ndim != 1 or self.q.shape != self.v.shape or self.q.size < 1:
            raise ContractViolation(
                f"q and v must be vectors of equal length >= 1, got {self.q.shape} and {self.v.shape}"
            )

    @property
    def dim(self) -> int:
        return self.q.size

    def copy(self) -> "State":
        return State(self.t, self.q, self.v, self.acc_integrals)


def fd_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float = FD_REL_STEP) -> np.ndarray:
    """Central-difference gradient with step ``rel_step * (1 + |x_i|)``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * (1.0 + abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _zero_force(t, q, v):
    return np.zeros_like(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class SecondOrderSystem:
    """A Lagrangian model with generalized force and explicit acceleration.

    ``acceleration`` is the Lagrange equation solved for the second
    derivative; it must agree with ``lagrangian`` and ``force_Q`` (see
    :func:`el_residual`).  ``potential`` is optional metadata used by the
    analyses of mechanical models.
    """

    dim: int
    lagrangian: ScalarFn
    dL_dq: VectorFn
    dL_dv: VectorFn
    force_Q: VectorFn
    acceleration: VectorFn
    params: Any = None
    name: str = "custom"
    potential: Any = None
    approximate_derivatives: bool = False

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ContractViolation(f"dim must be a positive integer, got {self.dim}")

    @classmethod
    def from_lagrangian(
        cls,
        dim: int,
        lagrangian: ScalarFn,
        acceleration: VectorFn,
        force_Q: Optional[VectorFn] = None,
        dL_dq: Optional[VectorFn] = None,
        dL_dv: Optional[VectorFn] = None,
        **kwargs,
    ) -> "SecondOrderSystem":
        """Build a user model, filling missing derivatives by central differences.

        Finite-difference derivatives are flagged through
        ``approximate_derivatives``; expect roughly 1e-9 relative accuracy
        instead of rounding level.
        """
        approximate = dL_dq is None or dL_dv is None
        if dL_dq is None:
            def dL_dq(t, q, v):
                return fd_gradient(lambda x: lagrangian(t, x, v), q)
        if dL_dv is None:
            def dL_dv(t, q, v):
                return fd_gradient(lambda x: lagrangian(t, q, x), v)
        return cls(
            dim=dim,
            lagrangian=lagrangian,
            dL_dq=dL_dq,
            dL_dv=dL_dv,
            force_Q=force_Q or _zero_force,
            acceleration=acceleration,
            approximate_derivatives=approximate,
            **kwargs,
        )


@dataclass(frozen=True)
class PerturbationFamily:
    """Lambda-derivatives at lambda = 0 of a family of perturbed motions.

    Both callables take ``(t, q, v, a)`` where ``a`` is the acceleration of
    the motion at ``t``; families that reparametrize time need it for
    ``delta_v``.
    """

    delta_q: FamilyFn
    delta_v: FamilyFn
    name: str


@dataclass(frozen=True)
class NonlocalConstant:
    system: SecondOrderSystem
    family: PerturbationFamily
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", f"{self.system.name}/{self.family.name}")


def _check_dim(nc: NonlocalConstant, s: State) -> None:
    if s.dim != nc.system.dim:
        raise ContractViolation(
            f"state has dimension {s.dim}, system {nc.system.name!r} expects {nc.system.dim}"
        )


def boundary_term(nc: NonlocalConstant, s: State) -> float:
    """Local part ``dL/dv . delta_q`` of the constant."""
    _check_dim(nc, s)
    sysm = nc.system
    a = sysm.acceleration(s.t, s.q, s.v)
    return float(np.dot(sysm.dL_dv(s.t, s.q, s.v), nc.family.delta_q(s.t, s.q, s.v, a)))


def integrand_M(nc: NonlocalConstant, s: State) -> float:
    """Integrand ``dL/dq . dq + dL/dv . dv + Q . dq`` at one state."""
    _check_dim(nc, s)
    return _integrand(nc, s.t, s.q, s.v)


def _integrand(nc: NonlocalConstant, t: float, q: np.ndarray, v: np.ndarray, a=None) -> float:
    sysm = nc.system
    if a is None:
        a = sysm.acceleration(t, q, v)
    dq = nc.family.delta_q(t, q, v, a)
    dv = nc.family.delta_v(t, q, v, a)
    with np.errstate(over="ignore", invalid="ignore"):
        m = (np.dot(sysm.dL_dq(t, q, v), dq)
             + np.dot(sysm.dL_dv(t, q, v), dv)
             + np.dot(sysm.force_Q(t, q, v), dq))
    if not np.isfinite(m):
        raise NonFiniteError(f"integrand of {nc.label} is not finite", t)
    return float(m)


def constant_value(nc: NonlocalConstant, s: State, acc: float) -> float:
    """Value of the constant given the running integral ``acc``."""
    return boundary_term(nc, s) - acc


@dataclass(frozen=True)
class Quadrature:
    """Extra scalar ``int_{t0}^t f(s, q, v) ds`` co-integrated with a motion."""

    name: str
    integrand: ScalarFn


@dataclass(frozen=True)
class AugmentedSystem:
    """First-order system ``y = (q, v, integrals...)`` for one model.

    The layout is ``n`` positions, ``n`` velocities, one accumulator per
    attached constant, then one per extra quadrature.
    """

    system: SecondOrderSystem
    constants: tuple = ()
    quadratures: tuple = ()

    def __post_init__(self):
        for nc in self.constants:
            if nc.system is not self.system and nc.system.dim != self.system.dim:
                raise ContractViolation(f"constant {nc.label} belongs to a different system")
        object.__setattr__(self, "constants", tuple(self.constants))
        object.__setattr__(self, "quadratures", tuple(self.quadratures))

    @property
    def n(self) -> int:
        return self.system.dim

    @property
    def size(self) -> int:
        return 2 * self.n + len(self.constants) + len(self.quadratures)

    def pack(self, s: State, extras: Optional[Sequence[float]] = None) -> np.ndarray:
        acc = s.acc_integrals if s.acc_integrals.size else np.zeros(len(self.constants))
        if acc.size != len(self.constants):
            raise ContractViolation(
                f"state carries {acc.size} integrals, {len(self.constants)} constants attached"
            )
        ext = np.zeros(len(self.quadratures)) if extras is None else np.asarray(extras, float)
        return np.concatenate([s.q, s.v, acc, ext])

    def unpack(self, t: float, y: np.ndarray) -> State:
        n, c = self.n, len(self.constants)
        return State(t, y[:n], y[n:2 * n], y[2 * n:2 * n + c])

    def extras(self, y: np.ndarray) -> np.ndarray:
        return y[2 * self.n + len(self.constants):]

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        n = self.n
        q = y[:n]
        v = y[n:2 * n]
        with np.errstate(over="ignore", invalid="ignore"):
            a = np.asarray(self.system.acceleration(t, q, v), dtype=float)
        out = np.empty(self.size)
        out[:n] = v
        out[n:2 * n] = a
        k = 2 * n
        for nc in self.constants:
            out[k] = _integrand(nc, t, q, v, a)
            k += 1
        for quad in self.quadratures:
            out[k] = quad.integrand(t, q, v)
            k += 1
        if not np.all(np.isfinite(out)):
            raise NonFiniteError("augmented derivative is not finite", t)
        return out

    def values(self, s: State) -> np.ndarray:
        """Constant values at a state whose ``acc_integrals`` are filled."""
        return np.array([constant_value(nc, s, s.acc_integrals[i])
                         for i, nc in enumerate(self.constants)])


def augmented_rhs(bundle: AugmentedSystem, t: float, y: np.ndarray) -> np.ndarray:
    return bundle.rhs(t, y)


# --- finite-difference consistency checks ---------------------------------

def flow_step(system: SecondOrderSystem, t: float, q: np.ndarray, v: np.ndarray, h: float):
    """One classical RK4 step of the second-order flow; returns ``(q, v)``."""
    def f(tt, qq, vv):
        return vv, np.asarray(system.acceleration(tt, qq, vv), dtype=float)

    k1q, k1v = f(t, q, v)
    k2q, k2v = f(t + h / 2, q + h / 2 * k1q, v + h / 2 * k1v)
    k3q, k3v = f(t + h / 2, q + h / 2 * k2q, v + h / 2 * k2v)
    k4q, k4v = f(t + h, q + h * k3q, v + h * k3v)
    return (q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
            v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v))


def el_residual(system: SecondOrderSystem, t: float, q, v, h: float = 1e-5) -> np.ndarray:
    """``d/dt dL/dv - dL/dq - Q`` with the time derivative by central differences.

    The neighbouring states at ``t +- h`` come from single RK4 steps of the
    model's own acceleration, so a mismatch between ``acceleration`` and
    ``(L, Q)`` shows up as a residual far above ``h**2``.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qp, vp = flow_step(system, t, q, v, h)
    qm, vm = flow_step(system, t, q, v, -h)
    dp = (system.dL_dv(t + h, qp, vp) - system.dL_dv(t - h, qm, vm)) / (2 * h)
    return dp - system.dL_dq(t, q, v) - system.force_Q(t, q, v)


def family_residual(family: PerturbationFamily, system: SecondOrderSystem, t: float, q, v,
                    h: float = 1e-5) -> np.ndarray:
    """``delta_v - d/dt delta_q`` along the flow of ``system``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    acc = system.acceleration
    qp, vp = flow_step(system, t, q, v, h)
    qm, vm = flow_step(system, t, q, v, -h)
    dqp = family.delta_q(t + h, qp, vp, acc(t + h, qp, vp))
    dqm = family.delta_q(t - h, qm, vm, acc(t - h, qm, vm))
    return family.delta_v(t, q, v, acc(t, q, v)) - (dqp - dqm) / (2 * h)
