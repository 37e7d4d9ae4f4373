import numpy as np
import pytest

from nonlocal_motion import SecondOrderSystem, make_preset


def free_particle(n=2, m=1.0):
    """L = m/2 |v|^2 with FD-derived dL/dq, dL/dv."""
    return SecondOrderSystem.from_lagrangian(
        n,
        lambda t, q, v: 0.5 * m * float(np.dot(v, v)),
        lambda t, q, v: np.zeros(n),
        name="free",
    )


def random_state(model_id, rng):
    """A time and state away from the model's singular set."""
    t = rng.uniform(-1.0, 1.0)
    if model_id == "central2":
        q = rng.uniform(0.5, 2.0) * np.array([np.cos(th := rng.uniform(0, 2 * np.pi)), np.sin(th)])
        return t, q, rng.normal(size=2)
    if model_id == "calogero":
        q = np.sort(rng.uniform(-3, 3, size=3)) + np.array([-1.0, 0.0, 1.0])
        return t, q, rng.normal(size=3)
    if model_id in ("mb-cons", "mb-diss"):
        return t, rng.normal(size=3), rng.normal(size=3)
    return t, rng.normal(size=2), rng.normal(size=2)


MODEL_OVERRIDES = {
    "central2": {},
    "calogero": {},
    "viscous": {"n": 2},
    "hydraulic": {"n": 2},
    "mb-cons": {},
    "mb-diss": {},
    "oscillator": {"n": 2},
}


def preset(model_id):
    return make_preset(model_id, **MODEL_OVERRIDES[model_id])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
