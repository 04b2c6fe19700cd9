"""Fully discrete solver for the nonlocal JMGT family in the sine basis.

The modal unknown at each step is the acceleration ``w_n``; velocity and
displacement follow from trapezoidal updates

    v_n = v_{n-1} + h/2 (w_{n-1} + w_n),   x_n = x_{n-1} + h/2 (v_{n-1} + v_n),

so every term of the equation is affine in ``w_n``.  The leading term is
taken in the form ``tau^a (K1 * u_tt)_t`` and differenced backwards; the
remaining terms are averaged between ``t_{n-1}`` and ``t_n`` (trapezoidal
rule) when ``tau > 0`` and collocated at ``t_n`` in the limit ``tau = 0``.
Convolutions with the constant kernel are the running trapezoid integrals,
so ``(1 * u_tt)(t_n) = v_n - v_0`` holds exactly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateCoefficient,
    NoContraction,
    RunawayError,
    UnsupportedScenario,
)
from .kernels import ONE, Kernel, KernelPair, build_weights
from .spectral import Interval, Rectangle, SineBasis, nonlinearity

MODES = ("Linear", "WB", "KB")
RUNAWAY_FACTOR = 1e6


def normalize_mode(mode: str) -> str:
    for m in MODES:
        if str(mode).strip().lower() == m.lower():
            return m
    raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")


@dataclass(frozen=True)
class Forcing:
    """Separable source ``f(x, t) = sum_k modes[k] phi_k(x) * cos(omega t + phase)``."""

    modes: tuple
    omega: float = 0.0
    phase: float = 0.0

    def __call__(self, t: float, n: int) -> np.ndarray:
        out = np.zeros(n)
        amp = np.asarray(self.modes, dtype=float)[:n]
        out[: amp.size] = amp * math.cos(self.omega * t + self.phase)
        return out


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    pair: KernelPair
    tau: float
    delta: float = 0.1
    c: float = 1.0
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    mode: str = "Linear"
    alpha: Optional[float] = None
    forcing: Optional[Forcing] = None
    T: float = 1.0
    h: float = 1e-3
    domain: object = field(default_factory=Interval)
    quad_points: Optional[int] = None
    tau_bar: float = 1.0
    picard_tol: float = 1e-10
    picard_max_iter: int = 30
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.alpha is None and self.pair.alpha is not None:
            object.__setattr__(self, "alpha", self.pair.alpha)
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list:
        out = []
        if not (0.0 <= self.tau <= self.tau_bar):
            out.append(f"tau={self.tau} must lie in [0, tau_bar={self.tau_bar}]")
        if self.delta < 0:
            out.append("delta must be >= 0")
        if self.c <= 0:
            out.append("c must be > 0")
        if self.T <= 0:
            out.append("T must be > 0")
        if self.h <= 0 or self.h > self.T:
            out.append("dt must lie in (0, T]")
        if self.stride < 1:
            out.append("stride must be >= 1")
        tag = self.pair.scenario_tag
        if tag == "GFE_III" and self.alpha is not None and self.alpha <= 0.5:
            out.append(f"GFE_III needs alpha > 1/2 so that the resolvent of K1 is in L2 (got alpha={self.alpha})")
        if tag == "GFE_I" and self.alpha is not None and self.alpha >= 0.5:
            if self.mode == "KB" or (self.mode == "WB" and self.k1 != 0.0):
                out.append("GFE_I with alpha >= 1/2 (Case II) admits only Linear or WB with k1 = 0")
        if self.mode == "KB" and isinstance(self.domain, Rectangle):
            out.append("KB nonlinearity is supported on the interval only")
        return out

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))

    @property
    def tau_a(self) -> float:
        return self.tau ** self.pair.power_a if self.tau > 0 else 0.0

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        dom = self.domain
        if isinstance(dom, Interval):
            dom_d = {"kind": "interval", "length": dom.length, "n_modes": dom.n_modes}
        else:
            dom_d = {"kind": "rectangle", "lx": dom.lx, "ly": dom.ly, "n_modes": dom.n_modes}
        return {
            "scenario": self.pair.scenario_tag,
            "kernel1": self.pair.k1.to_config(),
            "kernel2": self.pair.k2.to_config(),
            "power_a": self.pair.power_a,
            "tau": self.tau, "delta": self.delta, "c": self.c,
            "k1": self.k1, "k2": self.k2, "k3": self.k3,
            "mode": self.mode, "alpha": self.alpha,
            "forcing": None if self.forcing is None else dataclasses.asdict(self.forcing),
            "T": self.T, "dt": self.h, "domain": dom_d, "quad_points": self.quad_points,
            "picard_tol": self.picard_tol, "picard_max_iter": self.picard_max_iter,
            "stride": self.stride,
        }

    def content_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class InitialData:
    u0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray

    @classmethod
    def from_modes(cls, n: int, u0=(), u1=(), u2=()) -> "InitialData":
        def pad(vals):
            out = np.zeros(n)
            vals = np.asarray(vals, dtype=float)[:n]
            out[: vals.size] = vals
            return out
        return cls(pad(u0), pad(u1), pad(u2))

    @classmethod
    def zeros(cls, n: int) -> "InitialData":
        return cls.from_modes(n)

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(self.u0 * factor, self.u1 * factor, self.u2 * factor)


@dataclass(frozen=True, eq=False)
class ModalState:
    n: int
    t: float
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Modal time series; rows of ``x``, ``v``, ``w`` match ``t``."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    def state(self, i: int) -> ModalState:
        return ModalState(i, float(self.t[i]), self.x[i], self.v[i], self.w[i])

    def strided(self, stride: int) -> "Trajectory":
        if stride <= 1:
            return self
        idx = np.arange(0, self.t.size, stride)
        if idx[-1] != self.t.size - 1:
            idx = np.append(idx, self.t.size - 1)
        return Trajectory(self.t[idx], self.x[idx], self.v[idx], self.w[idx], self.eigenvalues, dict(self.meta))


class _ConvTerm:
    """Running ``(K * z)(t_n)`` for one kernel against one kinematic variable."""

    def __init__(self, kernel: Kernel, h: float, n_steps: int, m: int):
        self.kind = "delta" if kernel.is_delta else ("one" if kernel.kind == ONE else "table")
        self.h = h
        if self.kind == "table":
            self.weights = build_weights(kernel, h, n_steps).weights
        self.integral = np.zeros(m)

    def initial(self, z0):
        return z0.copy() if self.kind == "delta" else np.zeros_like(z0)

    def split(self, n, hist, z_prev, coef, known):
        """Return ``(c, k)`` with ``(K * z)_n = c * w_n + k`` when ``z_n = coef * w_n + known``."""
        if self.kind == "delta":
            return coef, known
        if self.kind == "one":
            return 0.5 * self.h * coef, self.integral + 0.5 * self.h * (z_prev + known)
        w = self.weights
        past = w[n - 1:0:-1] @ hist[1:n] if n > 1 else 0.0
        return w[0] * coef, w[0] * known + past

    def commit(self, z_prev, z_new):
        if self.kind == "one":
            self.integral = self.integral + 0.5 * self.h * (z_prev + z_new)


class Stepper:
    """Advances the linearized modal system one step at a time.

    ``coefficients(n)`` returns grid samples ``(a, b)`` of the frozen
    coefficients at ``t_n`` or ``None`` for ``a = b = 1``; ``forcing(n)``
    returns the modal source at ``t_n``.
    """

    def __init__(self, config: ScenarioConfig, data: InitialData,
                 coefficients: Optional[Callable] = None, forcing: Optional[Callable] = None,
                 basis: Optional[SineBasis] = None):
        self.cfg = config
        self.basis = basis or SineBasis(config.domain, config.quad_points)
        self.lam = self.basis.eigenvalues
        m = self.lam.size
        self.m = m
        self.h = config.h
        self.N = config.n_steps
        self.ta = config.tau_a
        self.theta = 0.5 if self.ta > 0 else 1.0
        self.coefficients = coefficients
        if forcing is None:
            ext = config.forcing
            forcing = (lambda n: ext(n * self.h, m)) if ext is not None else (lambda n: np.zeros(m))
        self.forcing = forcing

        pair = config.pair
        if self.ta > 0 and not pair.k1.is_delta and np.any(data.u2 != 0):
            raise ConfigError("a non-delta leading kernel requires u2 = 0")
        self.k1w = _ConvTerm(pair.k1, self.h, self.N, m)
        self.k1v = _ConvTerm(pair.k1, self.h, self.N, m)
        self.k2w = _ConvTerm(pair.k2, self.h, self.N, m)

        N = self.N
        self.X = np.zeros((N + 1, m))
        self.V = np.zeros((N + 1, m))
        self.W = np.zeros((N + 1, m))
        self.G = np.zeros((N + 1, m))
        self.n = 0

        x0, v0 = np.asarray(data.u0, float), np.asarray(data.u1, float)
        a0, b0 = self._coeff_ops(0)
        f0 = self.forcing(0)
        if self.ta > 0:
            w0 = np.asarray(data.u2, float)
        else:
            # tau = 0: u_tt(0) follows from the equation at t = 0
            rhs = f0 - config.c ** 2 * b0(self.lam * x0)
            diag = config.delta * self.lam if pair.k2.is_delta else np.zeros(m)
            w0 = self._solve(a0, diag, rhs)
        self.X[0], self.V[0], self.W[0] = x0, v0, w0
        self.G[0] = self.k1w.initial(w0)
        self.L_prev = self._lower_order(a0, b0, x0, self.k1v.initial(v0), self.k2w.initial(w0), w0)
        self.f_prev = f0
        scale = max(np.linalg.norm(x0) + np.linalg.norm(v0) + np.linalg.norm(w0),
                    max(np.linalg.norm(self.forcing(k)) for k in (0, N // 2, N)), 1e-300)
        self.guard = RUNAWAY_FACTOR * scale

    # helpers ------------------------------------------------------------
    def _coeff_ops(self, n):
        """Operators applying the frozen ``a`` and ``b`` at step ``n`` (plus their matrices)."""
        samples = self.coefficients(n) if self.coefficients is not None else None
        if samples is None:
            ident = lambda z: z
            ident.matrix = None
            return ident, ident
        a, b = samples
        if np.min(a) <= 0:
            raise DegenerateCoefficient(
                f"coefficient a = 1 + 2 k1 u* reaches {np.min(a):.3g} <= 0 at t = {n * self.h:.4g}")
        if np.min(b) <= 0:
            raise DegenerateCoefficient(
                f"coefficient b = 1 - 2 k2 u* reaches {np.min(b):.3g} <= 0 at t = {n * self.h:.4g}; "
                "the stiffness term is no longer elliptic")
        Ma = self.basis.coefficient_matrix(a)
        Mb = self.basis.coefficient_matrix(b)
        A = lambda z: Ma @ z
        B = lambda z: Mb @ z
        A.matrix, B.matrix = Ma, Mb
        return A, B

    def _lower_order(self, A, B, x, c1v, c2w, w):
        c = self.cfg.c
        return A(w) + c ** 2 * B(self.lam * x) + self.ta * c ** 2 * self.lam * c1v + self.cfg.delta * self.lam * c2w

    def _solve(self, A, diag, rhs):
        """Solve ``(diag(diag) + A) w = rhs`` for the frozen ``A`` (identity or matrix)."""
        if A.matrix is None:
            denom = diag + 1.0
            if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
                raise DegenerateCoefficient("implicit operator is singular")
            return rhs / denom
        M = np.diag(diag) + A.matrix
        if not np.all(np.isfinite(M)) or np.linalg.cond(M) > 1e13:
            raise DegenerateCoefficient("implicit operator is singular")
        return np.linalg.solve(M, rhs)

    # main step ----------------------------------------------------------
    def step(self) -> ModalState:
        if self.n >= self.N:
            raise IndexError("time grid exhausted")
        n = self.n + 1
        h, th, ta, lam, c, dl = self.h, self.theta, self.ta, self.lam, self.cfg.c, self.cfg.delta
        x_p, v_p, w_p = self.X[n - 1], self.V[n - 1], self.W[n - 1]
        v_hat = v_p + 0.5 * h * w_p
        x_hat = x_p + h * v_p + 0.25 * h * h * w_p

        A, B = self._coeff_ops(n)
        f_n = self.forcing(n)
        g_c, g_k = self.k1w.split(n, self.W, w_p, 1.0, 0.0 * w_p)
        c1_c, c1_k = self.k1v.split(n, self.V, v_p, 0.5 * h, v_hat)
        c2_c, c2_k = self.k2w.split(n, self.W, w_p, 1.0, 0.0 * w_p)

        diag = ta / h * g_c + th * (ta * c * c * lam * c1_c + dl * lam * c2_c)
        rhs = (th * f_n + (1 - th) * (self.f_prev - self.L_prev)
               - ta / h * (g_k - self.G[n - 1])
               - th * (c * c * B(lam * x_hat) + ta * c * c * lam * c1_k + dl * lam * c2_k))
        stiff = th * c * c * 0.25 * h * h * lam
        if A.matrix is None:
            denom = diag + th + stiff
            if np.any(denom <= 0) or not np.all(np.isfinite(denom)):
                raise DegenerateCoefficient("implicit operator is singular")
            w_n = rhs / denom
        else:
            M = np.diag(diag) + th * A.matrix + B.matrix * stiff[None, :]
            if not np.all(np.isfinite(M)) or np.linalg.cond(M) > 1e13:
                raise DegenerateCoefficient("implicit operator is singular")
            w_n = np.linalg.solve(M, rhs)

        v_n = v_hat + 0.5 * h * w_n
        x_n = x_hat + 0.25 * h * h * w_n
        self.W[n], self.V[n], self.X[n] = w_n, v_n, x_n
        self.G[n] = g_c * w_n + g_k
        c1v = c1_c * w_n + c1_k
        c2w = c2_c * w_n + c2_k
        self.k1w.commit(w_p, w_n)
        self.k1v.commit(v_p, v_n)
        self.k2w.commit(w_p, w_n)
        self.L_prev = self._lower_order(A, B, x_n, c1v, c2w, w_n)
        self.f_prev = f_n
        self.n = n

        size = np.linalg.norm(x_n) + np.linalg.norm(v_n)
        if not np.isfinite(size) or size > self.guard:
            raise RunawayError(f"modal norm {size:.3g} exceeded the runaway guard at t = {n * h:.4g}")
        return ModalState(n, n * h, x_n, v_n, w_n)

    def run(self) -> "Trajectory":
        while self.n < self.N:
            self.step()
        t = self.h * np.arange(self.N + 1)
        return Trajectory(t, self.X, self.V, self.W, self.lam,
                          {"config_hash": self.cfg.content_hash(), "iterations": 0})


def step_linearized(stepper: Stepper) -> ModalState:
    """Advance ``stepper`` by one step (functional alias of :meth:`Stepper.step`)."""
    return stepper.step()


def solve_linear(config: ScenarioConfig, data: InitialData, coefficients=None, forcing=None,
                 basis: Optional[SineBasis] = None) -> Trajectory:
    traj = Stepper(config, data, coefficients, forcing, basis).run()
    return traj.strided(config.stride)


class _Frozen:
    """Coefficients and source frozen from a previous iterate ``u*``."""

    def __init__(self, config: ScenarioConfig, basis: SineBasis, prev: Trajectory):
        self.cfg, self.basis = config, basis
        field_src = prev.x if config.mode == "WB" else prev.v
        self.u_star = basis.to_physical(field_src.T)  # grid x time
        self.prev = prev
        m = basis.n
        ext = config.forcing
        self.ext = (lambda n: ext(n * config.h, m)) if ext is not None else (lambda n: np.zeros(m))

    def coefficients(self, n):
        u = self.u_star[..., n]
        return 1.0 + 2.0 * self.cfg.k1 * u, 1.0 - 2.0 * self.cfg.k2 * u

    def forcing(self, n):
        nl = nonlinearity(self.cfg.mode, self.basis, self.prev.x[n], self.prev.v[n], self.cfg.k3)
        return self.ext(n) - self.basis.to_modal(nl)


def solve_nonlinear(config: ScenarioConfig, data: InitialData,
                    tol: Optional[float] = None, max_iter: Optional[int] = None) -> Trajectory:
    """Picard iteration ``u* -> u`` with coefficients and source frozen over the whole run.

    Iterate 0 is the linear solution; each further iterate freezes
    ``a(u*)``, ``b(u*)`` and ``-N(u*)`` and solves the linearized problem.
    Stops when the sup-in-time modal distance of successive displacements
    drops to ``tol``.
    """
    if config.mode == "Linear":
        return solve_linear(config, data)
    tol = config.picard_tol if tol is None else tol
    max_iter = config.picard_max_iter if max_iter is None else max_iter
    basis = SineBasis(config.domain, config.quad_points)
    full = config.replace(stride=1)
    prev = Stepper(full, data, basis=basis).run()
    residuals = []
    for it in range(1, max_iter + 1):
        frozen = _Frozen(full, basis, prev)
        cur = Stepper(full, data, frozen.coefficients, frozen.forcing, basis).run()
        res = float(np.max(np.linalg.norm(cur.x - prev.x, axis=1)))
        residuals.append(res)
        if not np.isfinite(res):
            raise NoContraction("Picard residual became non-finite", residuals)
        if res <= tol:
            meta = dict(cur.meta, iterations=it, residuals=residuals,
                        ratios=_ratios(residuals))
            out = Trajectory(cur.t, cur.x, cur.v, cur.w, cur.eigenvalues, meta)
            return out.strided(config.stride)
        if len(residuals) >= 4 and residuals[-1] > 1e3 * min(residuals):
            raise NoContraction(f"Picard residual grew to {res:.3g}", residuals)
        prev = cur
    raise NoContraction(f"Picard did not reach tol={tol:g} in {max_iter} iterations "
                        f"(last residual {residuals[-1]:.3g})", residuals)


def _ratios(residuals):
    return [b / a for a, b in zip(residuals[:-1], residuals[1:]) if a > 0]


def solve_nonlinear_lagged(config: ScenarioConfig, data: InitialData) -> Trajectory:
    """Single sweep with coefficients lagged by one step (fast, not the fixed-point map)."""
    if config.mode == "Linear":
        return solve_linear(config, data)
    basis = SineBasis(config.domain, config.quad_points)
    m = basis.n
    ext = config.forcing
    holder = {}

    def state(n):
        st = holder["s"]
        k = max(n - 1, 0)
        return st.X[k], st.V[k]

    def coefficients(n):
        x, v = state(n)
        u = basis.to_physical(x if config.mode == "WB" else v)
        return 1.0 + 2.0 * config.k1 * u, 1.0 - 2.0 * config.k2 * u

    def forcing(n):
        x, v = state(n)
        base = ext(n * config.h, m) if ext is not None else np.zeros(m)
        return base - basis.to_modal(nonlinearity(config.mode, basis, x, v, config.k3))

    # the stepper needs itself for lagged states; set the state source before init reads n = 0
    class _Lag(Stepper):
        def __init__(self, *a, **k):
            holder["s"] = self
            self.X = np.zeros((config.n_steps + 1, m))
            self.V = np.zeros((config.n_steps + 1, m))
            self.X[0], self.V[0] = data.u0, data.u1
            super().__init__(*a, **k)

    traj = _Lag(config.replace(stride=1), data, coefficients, forcing, basis).run()
    return traj.strided(config.stride)


def limiting_solve(config: ScenarioConfig, data: InitialData) -> Trajectory:
    """The ``tau = 0`` problem; only ``u0`` and ``u1`` are used."""
    lim = config.replace(tau=0.0)
    data = InitialData(data.u0, data.u1, np.zeros_like(data.u0))
    return solve_nonlinear(lim, data)


__all__ = [
    "Forcing", "ScenarioConfig", "InitialData", "ModalState", "Trajectory", "Stepper",
    "step_linearized", "solve_linear", "solve_nonlinear", "solve_nonlinear_lagged",
    "limiting_solve", "normalize_mode",
]
