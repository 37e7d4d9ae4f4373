"""Explicit Runge-Kutta integration of augmented systems.

Two methods are available: classical fixed-step RK4 and the Dormand-Prince
5(4) embedded pair with PI step-size control.  Backward runs integrate the
negated vector field in the variable ``s = |t - t0|`` so that both directions
share one code path.  Between accepted steps the solution is represented by
cubic Hermite interpolation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import AugmentedSystem, NonlocalConstant, Quadrature, SecondOrderSystem, State
from .errors import ContractViolation, NonFiniteError, SingularConfigurationError

_RECOVERABLE = (NonFiniteError, SingularConfigurationError, FloatingPointError,
                OverflowError, ZeroDivisionError)


@dataclass(frozen=True)
class IntegratorConfig:
    mode: str = "adaptive"
    h: float = 1e-2
    rtol: float = 1e-10
    atol: float = 1e-10
    h_min: float = 1e-12
    h_max: float = math.inf
    blowup_threshold: float = 1e8
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ContractViolation(f"mode must be 'fixed' or 'adaptive', got {self.mode!r}")
        for name in ("h", "rtol", "atol", "h_min", "h_max", "blowup_threshold"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be positive")
        if self.max_steps < 1:
            raise ContractViolation("max_steps must be >= 1")


class Status(str, enum.Enum):
    COMPLETED = "completed"
    BLEW_UP = "blew_up"
    STEP_UNDERFLOW = "step_underflow"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class Event:
    """Zero crossing of ``fn(t, y)`` located on the dense output."""

    name: str
    fn: Callable[[float, np.ndarray], float]
    terminal: bool = False


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN, _FAC_MAX = 0.2, 10.0


@dataclass
class OdeSolution:
    """Accepted steps of a first-order integration in the true time ``t``."""

    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    status: Status
    t_status: Optional[float]
    cause: str
    direction: int
    events: list = field(default_factory=list)
    n_rejected: int = 0

    def __call__(self, ts) -> np.ndarray:
        """Hermite interpolation at times inside the integrated range."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        d = self.direction
        s_nodes = d * (self.t - self.t[0])
        s = d * (ts - self.t[0])
        if np.any(s < -1e-12 * (1 + s_nodes[-1])) or np.any(s > s_nodes[-1] * (1 + 1e-12) + 1e-300):
            raise ContractViolation("interpolation outside the integrated range")
        idx = np.clip(np.searchsorted(s_nodes, s, side="right") - 1, 0, max(len(s_nodes) - 2, 0))
        out = np.empty((ts.size, self.y.shape[1]))
        for j, (i, sj) in enumerate(zip(idx, s)):
            if len(s_nodes) == 1:
                out[j] = self.y[0]
                continue
            out[j] = _hermite(s_nodes[i], s_nodes[i + 1], self.y[i], self.y[i + 1],
                              d * self.f[i], d * self.f[i + 1], sj)
        return out


def _hermite(s0, s1, y0, y1, f0, f1, s):
    h = s1 - s0
    x = (s - s0) / h
    h00 = (1 + 2 * x) * (1 - x) ** 2
    h10 = x * (1 - x) ** 2
    h01 = x * x * (3 - 2 * x)
    h11 = x * x * (x - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _initial_step(g, y0, f0, order, rtol, atol, span):
    sc = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / sc) ** 2))
    d1 = np.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        f1 = g(h0, y0 + h0 * f0)
    except _RECOVERABLE:
        return h0 * 1e-3
    d2 = np.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, span)


def solve(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    blowup_norm: Optional[Callable[[np.ndarray], float]] = None,
    events: Sequence[Event] = (),
) -> OdeSolution:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end`` in either direction.

    ``blowup_norm(y) >= cfg.blowup_threshold`` on a freshly computed step ends
    the run with :attr:`Status.BLEW_UP`; that step is not recorded and its end
    time becomes ``t_status``.  Derivative evaluations that overflow are
    retried with smaller steps and reported as blow-up once the step would
    drop below ``h_min``.
    """
    if t_end == t0:
        raise ContractViolation("t_end must differ from the initial time")
    d = 1 if t_end > t0 else -1
    span = abs(t_end - t0)
    y = np.asarray(y0, dtype=float).copy()

    def g(s, yy):
        return d * np.asarray(fun(t0 + d * s, yy), dtype=float)

    ts, ys, fs = [t0], [y.copy()], []
    try:
        fy = g(0.0, y)
    except _RECOVERABLE as exc:
        return OdeSolution(np.array(ts), np.array(ys), np.zeros((1, y.size)), Status.BLEW_UP,
                           t0, f"non-finite derivative at start: {exc}", d)
    fs.append(d * fy)
    found = []
    ev_prev = [ev.fn(t0, y) for ev in events]

    status, t_status, cause = Status.COMPLETED, None, ""
    adaptive = cfg.mode == "adaptive"
    h = min(_initial_step(g, y, fy, 4, cfg.rtol, cfg.atol, span), cfg.h_max) if adaptive else cfg.h
    s = 0.0
    n_steps = n_rej = 0
    err_old = 1e-4
    rejected_last = False
    thr = cfg.blowup_threshold

    while s < span:
        if n_steps >= cfg.max_steps:
            status, t_status, cause = Status.MAX_STEPS, t0 + d * s, "max_steps reached"
            break
        remaining = span - s
        h_try = min(h, remaining, cfg.h_max)
        if remaining - h_try < 1e-12 * span:
            h_try = remaining
        try:
            with np.errstate(over="raise", invalid="raise"):
                if adaptive:
                    y_new, f_new, err = _dp_step(g, s, y, fy, h_try, cfg.rtol, cfg.atol)
                else:
                    y_new = _rk4_step(g, s, y, fy, h_try)
                    f_new = g(s + h_try, y_new)
                    err = 0.0
                if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
                    raise NonFiniteError("non-finite stage value", t0 + d * (s + h_try))
        except _RECOVERABLE as exc:
            n_rej += 1
            if not adaptive or h_try * 0.25 < cfg.h_min:
                status, t_status = Status.BLEW_UP, t0 + d * (s + h_try)
                cause = f"non-finite value: {exc}"
                break
            h = h_try * 0.25
            rejected_last = True
            continue

        if adaptive and err > 1.0:
            n_rej += 1
            fac = min(1.0 / _FAC_MIN, max(1.0, err ** _EXPO / _SAFETY))
            h = h_try / fac
            rejected_last = True
            if h < cfg.h_min:
                status, t_status = Status.STEP_UNDERFLOW, t0 + d * s
                cause = f"step size {h:.3e} below h_min"
                break
            continue

        n_steps += 1
        if blowup_norm is not None and not blowup_norm(y_new) < thr:
            status, t_status = Status.BLEW_UP, t0 + d * (s + h_try)
            cause = f"norm {blowup_norm(y_new):.6e} reached threshold {thr:.3e}"
            break

        s_old, y_old, f_old = s, y, fy
        s = span if h_try == remaining else s + h_try
        y, fy = y_new, f_new
        t_new = t0 + d * s
        ts.append(t_new)
        ys.append(y.copy())
        fs.append(d * fy)

        stop = False
        for k, ev in enumerate(events):
            val = ev.fn(t_new, y)
            if not ev_prev[k] * val < 0.0:
                ev_prev[k] = val
                continue
            def along(sig, _ev=ev):
                return _ev.fn(t0 + d * sig, _hermite(s_old, s, y_old, y, f_old, fy, sig))
            try:
                s_root = brentq(along, s_old, s, xtol=1e-14 * max(1.0, abs(s)))
            except ValueError:
                s_root = s
            found.append((ev.name, t0 + d * s_root))
            ev_prev[k] = val
            stop = stop or ev.terminal
        if stop:
            status, t_status, cause = Status.COMPLETED, found[-1][1], f"terminal event {found[-1][0]}"
            break

        if adaptive:
            e = max(err, 1e-10)
            fac = e ** _EXPO / err_old ** _BETA / _SAFETY
            fac = min(1.0 / _FAC_MIN, max(1.0 / _FAC_MAX, fac))
            h_new = h_try / fac
            if rejected_last:
                h_new = min(h_new, h_try)
            err_old = max(err, 1e-4)
            h = h_new
            rejected_last = False

    return OdeSolution(np.array(ts), np.array(ys), np.array(fs), status, t_status, cause, d,
                       found, n_rej)


def _rk4_step(g, s, y, f0, h):
    k2 = g(s + h / 2, y + h / 2 * f0)
    k3 = g(s + h / 2, y + h / 2 * k2)
    k4 = g(s + h, y + h * k3)
    return y + h / 6 * (f0 + 2 * k2 + 2 * k3 + k4)


def _dp_step(g, s, y, f0, h, rtol, atol):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
        k.append(g(s + _C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
    err_vec = h * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
    return y_new, k[6], err


# --- trajectories of second-order systems ---------------------------------

@dataclass
class Trajectory:
    """Sampled motion with the values of every attached constant.

    Arrays are indexed by sample; ``values[:, i]`` belongs to
    ``labels[i]`` and ``extras[name]`` holds co-integrated quadratures.
    """

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    acc: np.ndarray
    values: np.ndarray
    labels: tuple
    extras: dict
    status: Status
    t_status: Optional[float]
    cause: str
    direction: int
    bundle: AugmentedSystem
    events: list = field(default_factory=list)
    solution: Optional[OdeSolution] = None

    @property
    def system(self) -> SecondOrderSystem:
        return self.bundle.system

    @property
    def direction_name(self) -> str:
        return "forward" if self.direction > 0 else "backward"

    @property
    def blew_up(self) -> bool:
        return self.status is Status.BLEW_UP

    @property
    def t_detect(self) -> Optional[float]:
        return self.t_status if self.blew_up else None

    def __len__(self) -> int:
        return self.t.size

    def state(self, i: int) -> State:
        return State(self.t[i], self.q[i], self.v[i], self.acc[i])

    @property
    def samples(self) -> list:
        return [(self.state(i), self.values[i]) for i in range(len(self))]

    def accelerations(self) -> np.ndarray:
        f = self.system.acceleration
        return np.array([f(t, q, v) for t, q, v in zip(self.t, self.q, self.v)])

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def drift(self) -> np.ndarray:
        """Max ``|C(t) - C(t0)|`` per attached constant."""
        if not self.labels:
            return np.zeros(0)
        return np.max(np.abs(self.values - self.values[0]), axis=0)

    def relative_drift(self) -> np.ndarray:
        if not self.labels:
            return np.zeros(0)
        return self.drift() / (1.0 + np.abs(self.values[0]))


def integrate(
    system: SecondOrderSystem,
    constants: Sequence[NonlocalConstant],
    s0: State,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    quadratures: Sequence[Quadrature] = (),
    sample_times=None,
    events: Sequence[Event] = (),
) -> Trajectory:
    """Integrate a model together with the integrals of its constants.

    By default every accepted step is a sample.  With ``sample_times`` the
    samples are the Hermite-interpolated states at those times (times past a
    premature stop are dropped).
    """
    bundle = AugmentedSystem(system, tuple(constants), tuple(quadratures))
    if t_end == s0.t:
        raise ContractViolation("t_end must differ from the initial time")
    s_init = s0 if s0.acc_integrals.size else State(s0.t, s0.q, s0.v, np.zeros(len(bundle.constants)))
    y0 = bundle.pack(s_init)
    n = system.dim

    def vnorm(y):
        return float(np.linalg.norm(y[n:2 * n]))

    sol = solve(bundle.rhs, s0.t, y0, t_end, cfg, blowup_norm=vnorm, events=events)

    if sample_times is None:
        ts, ys = sol.t, sol.y
    else:
        st = np.asarray(sample_times, dtype=float)
        if st.size > 1 and np.any(np.diff(st) * sol.direction <= 0):
            raise ContractViolation("sample_times must be strictly monotone in the integration direction")
        reach = sol.direction * (sol.t[-1] - sol.t[0])
        keep = (sol.direction * (st - sol.t[0]) <= reach * (1 + 1e-14)) & (sol.direction * (st - sol.t[0]) >= 0)
        ts = st[keep]
        ys = sol(ts) if ts.size else np.zeros((0, bundle.size))

    c = len(bundle.constants)
    q = ys[:, :n]
    v = ys[:, n:2 * n]
    acc = ys[:, 2 * n:2 * n + c]
    ext = ys[:, 2 * n + c:]
    values = np.array([bundle.values(State(t, qi, vi, ai)) for t, qi, vi, ai in zip(ts, q, v, acc)])
    values = values.reshape(len(ts), c)
    extras = {quad.name: ext[:, i].copy() for i, quad in enumerate(bundle.quadratures)}
    return Trajectory(
        t=np.asarray(ts, dtype=float), q=q, v=v, acc=acc, values=values,
        labels=tuple(nc.label for nc in bundle.constants), extras=extras,
        status=sol.status, t_status=sol.t_status, cause=sol.cause, direction=sol.direction,
        bundle=bundle, events=sol.events, solution=sol,
    )


# --- quality checks -------------------------------------------------------

@dataclass(frozen=True)
class OrderReport:
    hs: tuple
    errors: tuple
    orders: tuple
    exact: bool

    @property
    def observed(self) -> float:
        return self.orders[-1] if self.orders else math.nan


def order_check(
    system: SecondOrderSystem,
    exact: Callable[[float], tuple],
    s0: State,
    t_end: float,
    hs: Sequence[float] = (0.1, 0.05, 0.025),
    exact_tol: float = 1e-12,
) -> OrderReport:
    """Observed order of fixed-step RK4 under step halving.

    ``exact(t)`` returns the reference ``(q, v)``.  If every error is at
    rounding level the report is flagged ``exact`` and carries no orders.
    """
    q_ref, v_ref = (np.atleast_1d(np.asarray(x, dtype=float)) for x in exact(t_end))
    scale = 1.0 + max(np.max(np.abs(q_ref)), np.max(np.abs(v_ref)))
    errors = []
    for h in hs:
        tr = integrate(system, (), s0, t_end, IntegratorConfig(mode="fixed", h=h))
        if tr.status is not Status.COMPLETED:
            raise NonFiniteError(f"order run with h={h} ended with {tr.status.value}", tr.t[-1])
        errors.append(float(max(np.max(np.abs(tr.q[-1] - q_ref)), np.max(np.abs(tr.v[-1] - v_ref)))))
    if max(errors) <= exact_tol * scale:
        return OrderReport(tuple(hs), tuple(errors), (), True)
    orders = tuple(math.log(errors[i] / errors[i + 1], hs[i] / hs[i + 1]) for i in range(len(hs) - 1))
    return OrderReport(tuple(hs), tuple(errors), orders, False)


def round_trip_error(system: SecondOrderSystem, s0: State, t_end: float,
                     cfg: IntegratorConfig = IntegratorConfig()) -> tuple:
    """Integrate to ``t_end`` and back; returns ``(error, scale)``.

    ``scale`` is the largest state component magnitude seen on either leg.
    """
    fwd = integrate(system, (), s0, t_end, cfg)
    if fwd.status is not Status.COMPLETED:
        raise NonFiniteError(f"forward leg ended with {fwd.status.value}", fwd.t[-1])
    back = integrate(system, (), State(fwd.t[-1], fwd.q[-1], fwd.v[-1]), s0.t, cfg)
    err = float(max(np.max(np.abs(back.q[-1] - s0.q)), np.max(np.abs(back.v[-1] - s0.v))))
    scale = float(max(np.max(np.abs(fwd.q)), np.max(np.abs(fwd.v)),
                      np.max(np.abs(back.q)), np.max(np.abs(back.v))))
    return err, scale
