"""Reference integrator for the local (JMGT) case.

With ``K1 = delta_0`` and ``K2`` either ``1`` or ``delta_0`` every mode
obeys a linear third-order ODE, integrated here with classical RK4 on a
step ten times finer than the solver step.
"""

from __future__ import annotations

import numpy as np

from .errors import UnsupportedScenario
from .kernels import ONE
from .solver import InitialData, ScenarioConfig, Trajectory
from .spectral import eigenpairs

SUBSTEPS = 10


def mgt_oracle(config: ScenarioConfig, data: InitialData, substeps: int = SUBSTEPS) -> Trajectory:
    pair = config.pair
    if not pair.k1.is_delta or not (pair.k2.is_delta or pair.k2.kind == ONE):
        raise UnsupportedScenario("the RK4 oracle covers K1 = delta_0 with K2 in {1, delta_0}")
    if config.mode != "Linear" and (config.k1 or config.k2 or config.k3):
        raise UnsupportedScenario("the RK4 oracle covers the linear equation only")
    lam = eigenpairs(config.domain).eigenvalues
    m = lam.size
    tau, dl, c2 = config.tau, config.delta, config.c ** 2
    local_damp = pair.k2.is_delta
    v0 = np.asarray(data.u1, float)
    ext = config.forcing

    def f(t):
        return ext(t, m) if ext is not None else np.zeros(m)

    def damping(v):
        return 0.0 if local_damp else dl * lam * (v - v0)

    lead = 1.0 + (dl * lam if local_damp else 0.0)

    if tau > 0:
        def rhs(t, y):
            x, v, w = y
            jerk = (f(t) - lead * w - c2 * lam * x - tau * c2 * lam * v - damping(v)) / tau
            return np.array([v, w, jerk])
        y = np.array([data.u0, data.u1, data.u2], dtype=float)
    else:
        def rhs(t, y):
            x, v = y
            return np.array([v, (f(t) - c2 * lam * x - damping(v)) / lead])
        y = np.array([data.u0, data.u1], dtype=float)

    N = config.n_steps
    H = config.h / substeps
    X = np.zeros((N + 1, m))
    V = np.zeros((N + 1, m))
    W = np.zeros((N + 1, m))

    def record(n, t, y):
        X[n], V[n] = y[0], y[1]
        W[n] = y[2] if tau > 0 else rhs(t, y)[1]

    t = 0.0
    record(0, t, y)
    for n in range(1, N + 1):
        for _ in range(substeps):
            k1 = rhs(t, y)
            k2 = rhs(t + H / 2, y + H / 2 * k1)
            k3 = rhs(t + H / 2, y + H / 2 * k2)
            k4 = rhs(t + H, y + H * k3)
            y = y + H / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += H
        t = n * config.h
        record(n, t, y)
    return Trajectory(config.h * np.arange(N + 1), X, V, W, lam, {"oracle": "rk4", "substeps": substeps})


__all__ = ["mgt_oracle"]
