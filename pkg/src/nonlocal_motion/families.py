"""Perturbation families with closed-form lambda-derivatives.

Each builder returns a :class:`~nonlocal_motion.core.PerturbationFamily`
whose callables take ``(t, q, v, a)``.  ``delta_v`` is always the time
derivative of ``delta_q`` along the motion; ``family_residual`` in
:mod:`nonlocal_motion.core` checks this by finite differences.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .core import PerturbationFamily
from .errors import ContractViolation


def zero_family() -> PerturbationFamily:
    def zero(t, q, v, a):
        return np.zeros_like(np.asarray(q, dtype=float))

    return PerturbationFamily(zero, zero, "zero")


def rotation_family(i: int = 0, j: int = 1) -> PerturbationFamily:
    """Counter-clockwise rotation in the ``(q_i, q_j)`` plane.

    delta_q has ``-q_j`` in slot ``i`` and ``q_i`` in slot ``j``.
    """
    if not 0 <= i < j:
        raise ContractViolation(f"rotation plane needs 0 <= i < j, got ({i}, {j})")

    def rot(x):
        x = np.asarray(x, dtype=float)
        if j >= x.size:
            raise ContractViolation(f"rotation plane ({i}, {j}) out of range for dimension {x.size}")
        out = np.zeros_like(x)
        out[i] = -x[j]
        out[j] = x[i]
        return out

    return PerturbationFamily(lambda t, q, v, a: rot(q), lambda t, q, v, a: rot(v), f"rot:{i},{j}")


def time_shift_family() -> PerturbationFamily:
    """``q(t + lam)``.  Gives the energy when ``L`` does not depend on time."""
    return PerturbationFamily(
        lambda t, q, v, a: np.asarray(v, dtype=float),
        lambda t, q, v, a: np.asarray(a, dtype=float),
        "tshift",
    )


def scaling_hom2_family() -> PerturbationFamily:
    """``e^lam q(e^{-2 lam} t)``: delta_q = q - 2t v, delta_v = -v - 2t a."""
    return PerturbationFamily(
        lambda t, q, v, a: np.asarray(q, dtype=float) - 2.0 * t * np.asarray(v, dtype=float),
        lambda t, q, v, a: -np.asarray(v, dtype=float) - 2.0 * t * np.asarray(a, dtype=float),
        "scale2",
    )


def visc_shift_family(k: float, m: float) -> PerturbationFamily:
    """``q(t + lam e^{kt/m})``.

    delta_q = e^{kt/m} v
    delta_v = d/dt delta_q = e^{kt/m} ((k/m) v + a)
    """
    if not m > 0:
        raise ContractViolation("mass must be positive")
    rate = k / m

    def dq(t, q, v, a):
        return math.exp(rate * t) * np.asarray(v, dtype=float)

    def dv(t, q, v, a):
        return math.exp(rate * t) * (rate * np.asarray(v, dtype=float) + np.asarray(a, dtype=float))

    return PerturbationFamily(dq, dv, "vshift")


def hyd_shift_family(a: float) -> PerturbationFamily:
    """``q(t + lam e^{-a t})`` with ``a > 0``.

    delta_q = e^{-at} v
    delta_v = e^{-at} (-a v + acc)
    """
    if not a > 0:
        raise ContractViolation(f"hshift needs a > 0, got {a}")

    def dq(t, q, v, acc):
        return math.exp(-a * t) * np.asarray(v, dtype=float)

    def dv(t, q, v, acc):
        return math.exp(-a * t) * (np.asarray(acc, dtype=float) - a * np.asarray(v, dtype=float))

    return PerturbationFamily(dq, dv, f"hshift:{a:g}")


def mb_aniso_scaling_family() -> PerturbationFamily:
    """``(e^lam q1, e^lam q2, e^{-2 lam} q3)``."""
    w = np.array([1.0, 1.0, -2.0])
    return PerturbationFamily(lambda t, q, v, a: w * q, lambda t, q, v, a: w * v, "mb-scale")


def mb_translation_family(c: float) -> PerturbationFamily:
    """``q + lam (0, 0, 2 e^{ct})``."""
    def dq(t, q, v, a):
        return np.array([0.0, 0.0, 2.0 * math.exp(c * t)])

    def dv(t, q, v, a):
        return np.array([0.0, 0.0, 2.0 * c * math.exp(c * t)])

    return PerturbationFamily(dq, dv, "mb-trans")


def mb_rotation_family() -> PerturbationFamily:
    """Clockwise rotation of ``(q1, q2)``: delta_q = (q2, -q1, 0).

    Opposite orientation to :func:`rotation_family`.
    """
    def rot(x):
        return np.array([x[1], -x[0], 0.0])

    return PerturbationFamily(lambda t, q, v, a: rot(q), lambda t, q, v, a: rot(v), "mb-rot")


FAMILY_IDS = {
    "rot:i,j": "rotation in the (q_i, q_j) plane; angular momentum",
    "tshift": "time shift q(t+lam); energy up to a constant",
    "scale2": "scaling e^lam q(e^{-2lam} t) for degree -2 potentials",
    "vshift": "q(t + lam e^{kt/m}) for viscous drag",
    "hshift:a": "q(t + lam e^{-at}) for hydraulic drag, a > 0",
    "mb-scale": "anisotropic scaling (e^lam q1, e^lam q2, e^{-2lam} q3)",
    "mb-trans": "translation q + lam (0, 0, 2 e^{ct})",
    "mb-rot": "clockwise rotation of (q1, q2)",
}


def family_from_id(family_id: str, system=None) -> PerturbationFamily:
    """Resolve a CLI family id; ``vshift`` and ``mb-trans`` read ``system.params``."""
    fid = family_id.strip()
    m = re.fullmatch(r"rot:(\d+),(\d+)", fid)
    if m:
        return rotation_family(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"hshift:(.+)", fid)
    if m:
        try:
            a = float(m.group(1))
        except ValueError:
            raise ContractViolation(f"bad hshift parameter in {family_id!r}") from None
        return hyd_shift_family(a)
    if fid == "tshift":
        return time_shift_family()
    if fid == "scale2":
        return scaling_hom2_family()
    if fid == "mb-scale":
        return mb_aniso_scaling_family()
    if fid == "mb-rot":
        return mb_rotation_family()
    if fid == "zero":
        return zero_family()
    params = getattr(system, "params", None)
    if fid == "vshift":
        if params is None or not hasattr(params, "k_drag"):
            raise ContractViolation("vshift needs a model with k_drag and m")
        return visc_shift_family(params.k_drag, params.m)
    if fid == "mb-trans":
        if params is None or not hasattr(params, "c"):
            raise ContractViolation("mb-trans needs a Maxwell-Bloch model")
        return mb_translation_family(params.c)
    raise ContractViolation(f"unknown family id {family_id!r}")
