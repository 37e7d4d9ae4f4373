"""Scenario configs, the analysis registry and result files.

A scenario is a flat ``key = value`` text file with dotted keys and ``#``
comments::

    id = hom2-circular
    model.id = central2
    model.k_pot = 0.5
    families = scale2 rot:0,1
    initial.q = 1 0
    initial.v = 0 1
    horizon = 10
    analyses = drift radial_law

Running one produces a samples table (CSV or JSON) and a summary JSON whose
``checks`` carry enough information to recompute every pass/fail decision
(:func:`decide`).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis as an
from .core import NonlocalConstant, State, boundary_term, el_residual, integrand_M
from .errors import ConfigError, NonlocalMotionError
from .families import family_from_id
from .integrate import IntegratorConfig, Status, Trajectory, integrate, order_check, round_trip_error
from .models import PRESETS, HydraulicParams, MaxwellBlochParams, make_preset, oscillator_solution

SCHEMA_VERSION = 1
OUTPUT_ENV = "NLMOTION_OUTPUT_DIR"

DEFAULT_TOLERANCES = {
    "drift": 1e-6,
    "el_residual": 1e-4,
    "noether_boundary": 1e-12,
    "noether_integrand": 1e-12,
    "energy_shift": 1e-8,
    "radial_law": 1e-6,
    "radial_r2": 1e-6,
    "viscous_bound": 1e-8,
    "hydraulic_invariant": 1e-6,
    "comparison": 1e-6,
    "t_detect": 1e-3,
    "explosion_quadrature": 1e-8,
    "mb_drift": 1e-6,
    "fish_residual": 1e-3,
    "fish_energy": 1e-5,
    "fish_equilibria": 1e-12,
    "mb_polar": 1e-6,
    "asymptotics": 1e-2,
    "order": 0.3,
    "round_trip": 10.0,
    "energy_monotone": 1e-8,
}

_TOP_KEYS = {"id", "description", "families", "horizon", "analyses", "seed"}
_SECTIONS = {"model", "initial", "integrator", "output", "expect", "tolerance",
             "blowup", "hydraulic", "radial", "fish", "order", "roundtrip", "asymptotics"}


# --- parsing ---------------------------------------------------------------

def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines into a dict of raw strings.

    Raises :class:`ConfigError` with 1-based line and column.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, value = line.split("=", 1)
        key = key_part.strip()
        col = len(key_part) - len(key_part.lstrip()) + 1
        if not key or any(ch.isspace() for ch in key):
            raise ConfigError(f"invalid key {key!r}", lineno, col)
        head = key.split(".", 1)[0]
        if "." in key and head not in _SECTIONS or "." not in key and key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, col)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, col)
        out[key] = (value.strip(), lineno, col)
    return out


def _floats(text: str, where) -> list:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}", *where) from None


def _float(text: str, where) -> float:
    vals = _floats(text, where)
    if len(vals) != 1:
        raise ConfigError(f"expected one number, got {text!r}", *where)
    return vals[0]


def _bool(text: str, where) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected true/false, got {text!r}", *where)


@dataclass
class Scenario:
    id: str
    model_id: str
    model_params: dict
    family_ids: list
    t0: float
    q: list
    v: list
    horizon: float
    integrator: IntegratorConfig
    analyses: list
    output_path: str
    output_format: str = "csv"
    description: str = ""
    expect_blowup: bool = False
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def tol(self, name: str) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])


_INT_KEYS = {"max_steps"}


def scenario_from_text(text: str, source: str = "<config>") -> Scenario:
    kv = parse_config(text)

    def need(key):
        if key not in kv:
            raise ConfigError(f"missing required key {key!r}")
        return kv[key]

    sid, *_ = need("id")
    model_id, ln, col = need("model.id")
    if model_id not in PRESETS:
        raise ConfigError(f"unknown model preset {model_id!r}", ln, col)
    model_params = {}
    for key, (val, ln, col) in kv.items():
        if key.startswith("model.") and key != "model.id":
            name = key[len("model."):]
            model_params[name] = val if name == "potential" else _float(val, (ln, col))
    families = kv.get("families", ("", 0, 0))[0].split()
    q_raw, v_raw = need("initial.q"), need("initial.v")
    q = _floats(q_raw[0], q_raw[1:])
    v = _floats(v_raw[0], v_raw[1:])
    if len(q) != len(v) or not q:
        raise ConfigError("initial.q and initial.v must have the same non-zero length", *v_raw[1:])
    t0 = _float(kv["initial.t0"][0], kv["initial.t0"][1:]) if "initial.t0" in kv else 0.0
    h_raw = need("horizon")
    horizon = _float(h_raw[0], h_raw[1:])
    if horizon == t0:
        raise ConfigError("horizon must differ from initial.t0", *h_raw[1:])

    icfg = {}
    for key, (val, ln, col) in kv.items():
        if key.startswith("integrator."):
            name = key[len("integrator."):]
            if name == "mode":
                icfg[name] = val
            elif name in _INT_KEYS:
                icfg[name] = int(_float(val, (ln, col)))
            elif name in IntegratorConfig.__dataclass_fields__:
                icfg[name] = _float(val, (ln, col))
            else:
                raise ConfigError(f"unknown integrator setting {name!r}", ln, col)
    try:
        integrator = IntegratorConfig(**icfg)
    except NonlocalMotionError as exc:
        raise ConfigError(str(exc)) from None

    analyses = kv.get("analyses", ("", 0, 0))[0].split()
    for name in analyses:
        if name not in ANALYSES:
            raise ConfigError(f"unknown analysis {name!r}", *kv["analyses"][1:])
    tolerances = {}
    options = {}
    for key, (val, ln, col) in kv.items():
        if key.startswith("tolerance."):
            name = key[len("tolerance."):]
            if name not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {name!r}", ln, col)
            tolerances[name] = _float(val, (ln, col))
        elif key.split(".", 1)[0] in ("blowup", "hydraulic", "radial", "fish", "order", "roundtrip", "asymptotics"):
            options[key] = (val, ln, col)
    fmt = kv.get("output.format", ("csv", 0, 0))
    if fmt[0] not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {fmt[0]!r}", *fmt[1:])
    expect = kv.get("expect.blowup")
    return Scenario(
        id=sid,
        model_id=model_id,
        model_params=model_params,
        family_ids=families,
        t0=t0,
        q=q,
        v=v,
        horizon=horizon,
        integrator=integrator,
        analyses=analyses,
        output_path=kv.get("output.path", (sid, 0, 0))[0],
        output_format=fmt[0],
        description=kv.get("description", ("", 0, 0))[0],
        expect_blowup=_bool(expect[0], expect[1:]) if expect else False,
        tolerances=tolerances,
        options=options,
    )


def load_scenario(path) -> Scenario:
    p = Path(path)
    return scenario_from_text(p.read_text(), str(p))


def bundled_scenarios() -> list:
    """Paths of the scenario files shipped with the package, sorted by name."""
    root = resources.files("nonlocal_motion") / "scenarios"
    return sorted((Path(str(f)) for f in root.iterdir() if f.name.endswith(".cfg")), key=lambda p: p.name)


# --- checks ----------------------------------------------------------------

@dataclass
class Check:
    """One pass/fail decision: ``value <op> tolerance``.

    ``op`` is ``le``, ``ge`` or ``true``.  Unasserted checks are reported
    but do not affect the exit status.
    """

    name: str
    value: object
    tolerance: Optional[float]
    op: str = "le"
    asserted: bool = True
    note: str = ""

    @property
    def passed(self) -> bool:
        return decide(asdict(self))


def decide(check: dict) -> bool:
    value, tol, op = check["value"], check.get("tolerance"), check.get("op", "le")
    if op == "true":
        return value is True
    if value is None or tol is None:
        return False
    value = float(value)
    if math.isnan(value):
        return False
    if op == "le":
        return value <= tol
    if op == "ge":
        return value >= tol
    raise ValueError(f"unknown comparison {op!r}")


def summary_passed(summary: dict) -> bool:
    """Recompute the overall decision of a summary from its checks."""
    return all(decide(c) for c in summary["checks"] if c.get("asserted", True))


@dataclass
class Context:
    scenario: Scenario
    system: object
    constants: list
    traj: Trajectory
    checks: list = field(default_factory=list)
    quantities: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def opt(self, key: str, default=None):
        return self.scenario.options.get(key, (default,))[0]

    def opt_floats(self, key: str, default=None):
        if key not in self.scenario.options:
            return default
        val, ln, col = self.scenario.options[key]
        return _floats(val, (ln, col))

    def check(self, name, value, tol_name=None, op="le", asserted=True, note="", tolerance=None):
        tol = tolerance if tolerance is not None else (self.scenario.tol(tol_name) if tol_name else None)
        if isinstance(value, (np.bool_,)):
            value = bool(value)
        elif isinstance(value, (np.floating, np.integer)):
            value = float(value)
        c = Check(name, value, tol, op, asserted, note)
        self.checks.append(c)
        return c


# --- analyses --------------------------------------------------------------

def _a_drift(ctx: Context):
    rel = ctx.traj.relative_drift()
    for label, r in zip(ctx.traj.labels, rel):
        ctx.check(f"drift[{label}]", r, "drift")


def _a_el_residual(ctx: Context):
    tr = ctx.traj
    idx = np.unique(np.linspace(0, len(tr) - 1, min(len(tr), 50)).astype(int))
    worst = max(float(np.max(np.abs(el_residual(tr.system, tr.t[i], tr.q[i], tr.v[i])))) for i in idx)
    ctx.check("el_residual", worst, "el_residual")


def _constant(ctx: Context, prefix: str) -> Optional[NonlocalConstant]:
    for nc in ctx.constants:
        if nc.family.name.startswith(prefix):
            return nc
    return None


def _a_noether(ctx: Context):
    tr = ctx.traj
    m = tr.system.params.m
    rot = _constant(ctx, "rot:")
    if rot is not None:
        i, j = (int(x) for x in rot.family.name[4:].split(","))
        ang = m * (tr.q[:, i] * tr.v[:, j] - tr.q[:, j] * tr.v[:, i])
        bnd = np.array([boundary_term(rot, tr.state(k)) for k in range(len(tr))])
        integ = np.array([integrand_M(rot, tr.state(k)) for k in range(len(tr))])
        ctx.check("noether.boundary_vs_angular_momentum",
                  float(np.max(np.abs(bnd - ang) / (1.0 + np.abs(ang)))), "noether_boundary")
        ctx.check("noether.max_abs_integrand", float(np.max(np.abs(integ))), "noether_integrand")
        ctx.columns["angular_momentum"] = ang
    ts = _constant(ctx, "tshift")
    if ts is not None:
        E = 0.5 * m * np.sum(tr.v ** 2, axis=1) + np.array([tr.system.potential.U(q) for q in tr.q])
        diff = tr.column(ts.label) - E
        ctx.check("noether.energy_shift_drift", float(np.max(np.abs(diff - diff[0])) / (1 + abs(diff[0]))),
                  "energy_shift")
        ctx.quantities["energy_offset"] = float(diff[0])
        ctx.columns["energy"] = E


def _a_radial_law(ctx: Context):
    tr = ctx.traj
    ints = an.hom2_integrals(tr.system, tr.state(0))
    ctx.quantities.update(E=ints.E, K=ints.K, K1=ints.K1)
    ctx.check("radial_law_residual", an.radial_law_residual(tr, ints), "radial_law")
    ctx.columns["radial_law_r2"] = an.radial_law(tr.t, ints, tr.system.params.m)
    target = ctx.opt_floats("radial.expect_r2")
    if target is not None:
        dev = float(np.max(np.abs(np.sum(tr.q ** 2, axis=1) - target[0])))
        ctx.check("radial.max_abs_r2_deviation", dev, "radial_r2")


def _a_viscous_bound(ctx: Context):
    tr = ctx.traj
    p = tr.system.params
    rep = an.viscous_bound_check(tr, p.k_drag, p.m, tol=ctx.scenario.tol("viscous_bound"))
    ctx.check("viscous.completed", tr.status is Status.COMPLETED, op="true")
    ctx.check("viscous.monotone", rep.monotone, op="true")
    ctx.check("viscous.past_bound", rep.bound_holds, op="true")
    ctx.quantities.update(viscous_max_decrease=rep.max_decrease, viscous_scale=rep.scale)
    ctx.columns["viscous_W"] = rep.values


def _hyd_a_values(ctx: Context):
    return ctx.opt_floats("hydraulic.a", [1.0])


def _a_hydraulic_invariant(ctx: Context):
    tr = ctx.traj
    p = tr.system.params
    for a in _hyd_a_values(ctx):
        lhs = an.hydraulic_lhs(tr, a)
        rhs = 0.5 * p.m * math.exp(-a * tr.t[0]) * float(np.dot(tr.v[0], tr.v[0]))
        drift = float(np.max(np.abs(lhs - rhs)))
        ctx.check(f"hydraulic_invariant[a={a:g}]", drift / (1.0 + abs(rhs)), "hydraulic_invariant")
        ctx.columns[f"hyd_lhs[a={a:g}]"] = lhs
    sign_changes = int(np.sum(np.abs(np.diff(np.sign(tr.v), axis=0)) > 0))
    ctx.quantities["velocity_sign_changes"] = sign_changes


def _a_energy_monotone(ctx: Context):
    tr = ctx.traj
    p = tr.system.params
    E = 0.5 * p.m * np.sum(tr.v ** 2, axis=1) + np.array([tr.system.potential.U(q) for q in tr.q])
    order = np.argsort(tr.t)
    inc = float(np.max(np.diff(E[order]), initial=0.0))
    ctx.check("mechanical_energy_max_increase", inc / (1 + np.max(np.abs(E))), "energy_monotone")
    ctx.columns["mechanical_energy"] = E


def _a_blowup(ctx: Context):
    tr = ctx.traj
    s0 = tr.state(0)
    expect = ctx.opt_floats("blowup.expect_t_detect")
    for a in ctx.opt_floats("blowup.a", [1e-2]):
        rep = an.blowup_experiment(tr.system, s0, a, traj=tr, tol=ctx.scenario.tol("comparison"))
        key = f"a={a:g}"
        ctx.quantities[f"blowup[{key}]"] = {
            "z0": rep.z0, "t_star": rep.t_star, "t_detect": rep.t_detect,
            "condition_satisfied": rep.condition_satisfied, "status": rep.status,
            "comparison_margin": rep.comparison_margin, "cause": rep.cause,
        }
        ctx.check(f"blowup[{key}].blew_up", rep.blew_up, op="true")
        ctx.check(f"blowup[{key}].condition", rep.condition_satisfied, op="true")
        ctx.check(f"blowup[{key}].t_detect_ge_t_star", bool(rep.bound_holds), op="true")
        ctx.check(f"blowup[{key}].v2_ge_z", rep.comparison_holds, op="true")
        if rep.condition_satisfied:
            ctx.columns[f"z[{key}]"] = an.comparison_z(tr.t, rep.z0, a, tr.system.params.m,
                                                       tr.system.params.k_drag, tr.system.params.U_sup,
                                                       t0=s0.t)
    if expect is not None:
        td = tr.t_detect if tr.t_detect is not None else math.nan
        ctx.check("blowup.t_detect_error", abs(td - expect[0]), "t_detect")


def _a_explosion_quadrature(ctx: Context):
    p = ctx.traj.system.params
    s0 = ctx.traj.state(0)
    z0 = float(np.dot(s0.v, s0.v)) - 2.0 * p.U_sup / p.m
    for a in ctx.opt_floats("blowup.a", [1e-2]):
        quad = an.explosion_time(z0, a, p.m, p.k_drag, p.U_sup)
        ref = an.explosion_time_closed_form(z0, a, p.m, p.k_drag, p.U_sup)
        ctx.check(f"explosion_quadrature[a={a:g}]", abs(quad - ref) / abs(ref), "explosion_quadrature")
        ctx.quantities[f"explosion_time[a={a:g}]"] = quad


def _mb_regime(p: MaxwellBlochParams) -> str:
    return "conservative" if p.conservative else "dissipative"


def _a_mb_conserved(ctx: Context):
    tr = ctx.traj
    p = tr.system.params
    res = an.mb_conserved(tr, p, _mb_regime(p))
    for name, d in res.drift.items():
        ctx.check(f"mb_drift[{name}]", d, "mb_drift")
    ctx.quantities["mb_conserved"] = {k: v for k, v in asdict(res).items() if k != "drift" and v is not None}
    if p.conservative:
        ctx.columns["E_mb"] = an.mb_energy(tr.v, p.g)
        ctx.columns["B"] = an.mb_B(tr.q, tr.v)
    else:
        ctx.columns["M"] = an.mb_M(tr.t, tr.q, tr.v, p)
    ctx.columns["N"] = an.mb_N(tr.t, tr.q, tr.v, p)


def _a_fish(ctx: Context):
    tr = ctx.traj
    p = tr.system.params
    E = float(an.mb_energy(tr.v[0], p.g))
    B = float(an.mb_B(tr.q[0], tr.v[0]))
    ctx.check("fish_residual", an.fish_residual(tr, p), "fish_residual")
    eq = an.fish_equilibria(E, B, p.g)
    ref = np.sort(np.roots([3 * p.g ** 2, -2 * B * p.g ** 2, -2 * E]).real)
    ctx.check("fish_equilibria_error", float(np.max(np.abs(np.array(eq) - ref))), "fish_equilibria")
    zdot = tr.accelerations()[:, 2]
    H = an.fish_energy(tr.v[:, 2], zdot, E, B, p.g)
    ctx.check("fish_energy_drift", float(np.max(np.abs(H - H[0])) / (1 + abs(H[0]))), "fish_energy")
    cls = an.fish_analysis(E, B, p.g, float(tr.v[0, 2]), float(zdot[0]))
    ctx.quantities["fish"] = {"equilibria": list(cls.equilibria), "orbit_kind": cls.orbit_kind,
                              "energy": cls.energy, "saddle_energy": cls.saddle_energy}
    expect = ctx.opt("fish.expect_kind")
    if expect is not None:
        ctx.check("fish.orbit_kind", cls.orbit_kind == expect, op="true", note=f"expected {expect}")
    ctx.columns["z"] = tr.v[:, 2]
    ctx.columns["z_dot"] = zdot


def _a_mb_polar(ctx: Context):
    rep = an.mb_polar_reduction(ctx.traj)
    ctx.check("mb_polar.radial_equation", rep.radial_relative, "mb_polar")
    ctx.check("mb_polar.q3_recovery", rep.q3_relative, "mb_polar")


def _a_mb_asymptotics(ctx: Context):
    rep = an.mb_asymptotics(ctx.traj, tol=ctx.scenario.tol("asymptotics"))
    ctx.quantities["asymptotics"] = asdict(rep)
    note = "observational probe of a conjectured limit; never fails the run"
    c = ctx.check(f"asymptotics[{rep.case}]", rep.deviation, "asymptotics", asserted=False, note=note)
    if not c.passed:
        ctx.warnings.append(f"conjecture probe: |r(T) - r_inf| = {rep.deviation:.3e} >= {rep.tolerance:g}")


def _a_order_check(ctx: Context):
    tr = ctx.traj
    s0 = tr.state(0)
    s0 = State(s0.t, s0.q, s0.v)
    hs = ctx.opt_floats("order.hs", [0.1, 0.05, 0.025])
    t_end = ctx.opt_floats("order.t_end", [ctx.scenario.horizon])[0]
    rep = order_check(tr.system, oscillator_solution(tr.system.params, s0), s0, t_end, hs)
    ctx.quantities["order"] = {"hs": list(rep.hs), "errors": list(rep.errors), "orders": list(rep.orders),
                               "exact": rep.exact}
    if not rep.exact:
        ctx.check("rk4_order_deviation", abs(rep.observed - 4.0), "order")


def _a_round_trip(ctx: Context):
    tr = ctx.traj
    s0 = tr.state(0)
    cfg = ctx.scenario.integrator
    t_end = ctx.opt_floats("roundtrip.t_end", [ctx.scenario.horizon])[0]
    err, scale = round_trip_error(tr.system, State(s0.t, s0.q, s0.v), t_end, cfg)
    ctx.quantities["round_trip"] = {"error": err, "scale": scale}
    ctx.check("round_trip_error_over_rtol_scale", err / (cfg.rtol * scale), "round_trip")


ANALYSES: dict = {
    "drift": _a_drift,
    "el_residual": _a_el_residual,
    "noether": _a_noether,
    "radial_law": _a_radial_law,
    "viscous_bound": _a_viscous_bound,
    "hydraulic_invariant": _a_hydraulic_invariant,
    "energy_monotone": _a_energy_monotone,
    "blowup": _a_blowup,
    "explosion_quadrature": _a_explosion_quadrature,
    "mb_conserved": _a_mb_conserved,
    "fish": _a_fish,
    "mb_polar": _a_mb_polar,
    "mb_asymptotics": _a_mb_asymptotics,
    "order_check": _a_order_check,
    "round_trip": _a_round_trip,
}


# --- running ---------------------------------------------------------------

@dataclass
class Result:
    scenario: Scenario
    summary: dict
    trajectory: Trajectory
    columns: dict

    @property
    def passed(self) -> bool:
        return self.summary["passed"]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def run(sc: Scenario) -> Result:
    """Integrate a scenario and evaluate its analyses (no files written)."""
    try:
        system = make_preset(sc.model_id, **sc.model_params)
        if len(sc.q) != system.dim:
            raise ConfigError(f"initial state has dimension {len(sc.q)}, model {sc.model_id!r} "
                              f"expects {system.dim}")
        constants = [NonlocalConstant(system, family_from_id(f, system)) for f in sc.family_ids]
    except ConfigError:
        raise
    except NonlocalMotionError as exc:
        raise ConfigError(f"{sc.id}: {exc}") from None
    quads = []
    if "hydraulic_invariant" in sc.analyses:
        if not isinstance(system.params, HydraulicParams):
            raise ConfigError(f"{sc.id}: hydraulic_invariant needs the hydraulic model")
        p = system.params
        raw = sc.options.get("hydraulic.a", ("1.0", 0, 0))
        quads = [an.hydraulic_quadrature(a, p.m, p.k_drag, p.potential) for a in _floats(raw[0], raw[1:])]
    s0 = State(sc.t0, sc.q, sc.v)
    traj = integrate(system, constants, s0, sc.horizon, sc.integrator, quadratures=quads)
    ctx = Context(sc, system, constants, traj)

    ctx.check("blowup_expectation", traj.blew_up == sc.expect_blowup, op="true",
              note=f"expected blow-up: {sc.expect_blowup}; status {traj.status.value}")
    if traj.status in (Status.STEP_UNDERFLOW, Status.MAX_STEPS):
        ctx.check("integration_status", False, op="true", note=traj.cause)
    for name in sc.analyses:
        try:
            ANALYSES[name](ctx)
        except NonlocalMotionError as exc:
            ctx.check(f"{name}.error", False, op="true", note=str(exc))

    checks = [asdict(c) for c in ctx.checks]
    for c in checks:
        c["passed"] = decide(c)
    summary = {
        "schema": SCHEMA_VERSION,
        "scenario": sc.id,
        "description": sc.description,
        "model": sc.model_id,
        "model_params": {k: v for k, v in sc.model_params.items()},
        "families": list(sc.family_ids),
        "direction": traj.direction_name,
        "status": traj.status.value,
        "t_status": traj.t_status,
        "cause": traj.cause,
        "n_samples": len(traj),
        "t_final": float(traj.t[-1]),
        "constants": {
            label: {"initial": float(traj.values[0, i]), "drift": float(traj.drift()[i]),
                    "relative_drift": float(traj.relative_drift()[i])}
            for i, label in enumerate(traj.labels)
        },
        "quantities": ctx.quantities,
        "checks": checks,
        "warnings": ctx.warnings,
    }
    summary["passed"] = summary_passed(summary)
    return Result(sc, _jsonable(summary), traj, ctx.columns)


def sample_columns(res: Result) -> tuple:
    """Header and column arrays of the samples table.

    Order: ``t``, ``q0..``, ``v0..``, ``C[label]`` per constant, ``I[name]``
    per quadrature, then analysis columns in evaluation order.
    """
    tr = res.trajectory
    names = ["t"] + [f"q{i}" for i in range(tr.q.shape[1])] + [f"v{i}" for i in range(tr.v.shape[1])]
    cols = [tr.t] + list(tr.q.T) + list(tr.v.T)
    for i, label in enumerate(tr.labels):
        names.append(f"C[{label}]")
        cols.append(tr.values[:, i])
    for name, arr in tr.extras.items():
        names.append(f"I[{name}]")
        cols.append(arr)
    for name, arr in res.columns.items():
        names.append(name)
        cols.append(np.asarray(arr, dtype=float))
    return names, cols


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(res: Result, out_dir) -> tuple:
    """Write ``<path>.samples.{csv,json}`` and ``<path>.summary.json``; returns both paths."""
    out_dir = Path(out_dir)
    base = res.scenario.output_path
    names, cols = sample_columns(res)
    rows = list(zip(*cols))
    if res.scenario.output_format == "csv":
        lines = [",".join(names)]
        lines += [",".join(repr(float(x)) for x in row) for row in rows]
        samples_text = "\n".join(lines) + "\n"
        samples = out_dir / f"{base}.samples.csv"
    else:
        samples_text = json.dumps({"columns": names, "rows": [[_jsonable(x) for x in r] for r in rows]})
        samples = out_dir / f"{base}.samples.json"
    _atomic_write(samples, samples_text)
    summary = out_dir / f"{base}.summary.json"
    _atomic_write(summary, json.dumps(res.summary, indent=2, sort_keys=False) + "\n")
    return samples, summary


def output_dir(cli_value: Optional[str] = None) -> Path:
    return Path(cli_value or os.environ.get(OUTPUT_ENV) or "nlmotion-out")
