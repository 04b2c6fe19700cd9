"""Tau sweeps, order fits, energy diagnostics and the manufactured-solution check."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, FjmgtError, UnsupportedScenario
from .kernels import ONE, fractional_integral
from .solver import (
    Forcing,
    InitialData,
    ScenarioConfig,
    Trajectory,
    limiting_solve,
    solve_linear,
    solve_nonlinear,
)
from .spectral import Interval


def composite_error(u: Trajectory, ref: Trajectory, h: float) -> float:
    """``max_t ||u - ref||_{L2} + (sum_n h ||grad(u - ref)||^2)^{1/2}`` in modal form."""
    d = u.x - ref.x
    sup = float(np.max(np.linalg.norm(d, axis=1))) if d.size else 0.0
    grad_sq = np.sum(d ** 2 * u.eigenvalues[None, :], axis=1)
    return sup + math.sqrt(h * float(np.sum(grad_sq[1:])))


# energy ------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyRecord:
    time: float
    lap_u: float
    lap_ut: float
    cum_grad_utt: float
    phi_proxy: float
    psi_proxy: float
    wave_energy: float

    @property
    def discrete_energy(self) -> float:
        """``||Lap u_t||^2 + ||Lap u||^2 + sum h ||grad u_tt||^2`` at this time."""
        return self.lap_ut ** 2 + self.lap_u ** 2 + self.cum_grad_utt


def energy_report(traj: Trajectory, c: float = 1.0, alpha: float = 0.5) -> list:
    """Discrete energy quantities at every stored time (norms by Parseval).

    ``phi_proxy`` is the running ``W^{1,2}(0, t; H^2)`` seminorm of ``u``;
    ``psi_proxy`` is ``||I^{alpha/2} grad u_tt||_{L2(0,t; L2)}``.
    """
    if len(traj) == 0:
        return []
    lam = traj.eigenvalues
    t = traj.t
    lap_u = np.linalg.norm(traj.x * lam, axis=1)
    lap_ut = np.linalg.norm(traj.v * lam, axis=1)
    grad_utt_sq = np.sum(lam * traj.w ** 2, axis=1)
    wave = 0.5 * np.sum(traj.v ** 2, axis=1) + 0.5 * c * c * np.sum(lam * traj.x ** 2, axis=1)
    dt = np.diff(t)
    cum_grad = np.concatenate([[0.0], np.cumsum(dt * grad_utt_sq[1:])])
    phi = np.sqrt(np.concatenate([[0.0], np.cumsum(dt * lap_ut[1:] ** 2)]))
    psi = np.zeros_like(t)
    if t.size > 1:
        h = float(dt[0])
        grad_utt = traj.w[1:] * np.sqrt(lam)
        if alpha > 0 and np.allclose(dt, h):
            sq = np.sum(fractional_integral(alpha / 2.0, grad_utt, h) ** 2, axis=1)
            psi[1:] = np.sqrt(np.maximum(np.cumsum(h * sq) - 0.5 * h * sq, 0.0))
        else:
            psi[1:] = np.sqrt(np.cumsum(dt * np.sum(grad_utt ** 2, axis=1)))
    return [EnergyRecord(float(t[i]), float(lap_u[i]), float(lap_ut[i]), float(cum_grad[i]),
                         float(phi[i]), float(psi[i]), float(wave[i])) for i in range(t.size)]


def peak_energy(records: Sequence[EnergyRecord]) -> float:
    """``sup_t (||Lap u_t||^2 + ||Lap u||^2) + sum h ||grad u_tt||^2``."""
    if not records:
        return 0.0
    return max(r.lap_ut ** 2 + r.lap_u ** 2 for r in records) + records[-1].cum_grad_utt


# order fitting -------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    residual: float
    n_used: int


def fit_order(pairs) -> FitResult:
    """Least-squares slope of ``log(error)`` against ``log(parameter)``."""
    pairs = [(float(p), float(e)) for p, e in pairs]
    kept = [(p, e) for p, e in pairs if e > 0]
    if len(kept) < len(pairs):
        warnings.warn(f"fit_order: excluded {len(pairs) - len(kept)} pair(s) with zero error", RuntimeWarning)
    if len(kept) < 3 or any(p <= 0 for p, _ in kept):
        raise DomainError("fit_order needs at least 3 pairs with positive parameter and error")
    x = np.log([p for p, _ in kept])
    y = np.log([e for _, e in kept])
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(math.sqrt(res[0] / len(kept))) if res.size else 0.0
    return FitResult(float(coef[0]), float(coef[1]), resid, len(kept))


# tau sweep -------------------------------------------------------------------

@dataclass(frozen=True)
class SweepEntry:
    tau: float
    error: float
    peak_energy: float
    iterations: int
    status: str = "ok"


@dataclass(frozen=True)
class SweepResult:
    entries: tuple
    limit_peak_energy: float
    scenario: str = ""

    @property
    def ok(self) -> tuple:
        return tuple(e for e in self.entries if e.status == "ok")

    @property
    def taus(self) -> np.ndarray:
        return np.array([e.tau for e in self.ok])

    @property
    def errors(self) -> np.ndarray:
        return np.array([e.error for e in self.ok])

    def fit(self) -> FitResult:
        return fit_order(zip(self.taus, self.errors))

    def energy_spread(self) -> float:
        peaks = [e.peak_energy for e in self.ok]
        if not peaks or min(peaks) <= 0:
            return 1.0
        return max(peaks) / min(peaks)


def solve_scenario(config, data):
    """Linear solve or Picard iteration, depending on ``config.mode``."""
    return solve_linear(config, data) if config.mode == "Linear" else solve_nonlinear(config, data)


def tau_sweep(base: ScenarioConfig, taus, data: InitialData, jobs: int = 1) -> SweepResult:
    """Solve for each ``tau`` and measure the distance to the ``tau = 0`` solution.

    A failing run is recorded with its error type and does not stop the sweep.
    """
    taus = [float(t) for t in taus]
    if any(t <= 0 for t in taus) or any(b >= a for a, b in zip(taus, taus[1:])):
        raise DomainError("tau values must be positive and strictly decreasing")
    base = base.replace(stride=1)
    limit = limiting_solve(base, data)
    c = base.c
    alpha = base.alpha if base.alpha is not None else 1.0

    def one(tau):
        try:
            traj = solve_scenario(base.replace(tau=tau), data)
        except FjmgtError as exc:
            return SweepEntry(tau, math.nan, math.nan, 0, f"{type(exc).__name__}: {exc}")
        err = composite_error(traj, limit, base.h)
        energy = peak_energy(energy_report(traj, c, alpha))
        return SweepEntry(tau, err, energy, int(traj.meta.get("iterations", 0)))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(one, taus))
    else:
        entries = [one(t) for t in taus]
    entries.sort(key=lambda e: -e.tau)
    return SweepResult(tuple(entries), peak_energy(energy_report(limit, c, alpha)), base.pair.scenario_tag)


# manufactured solution ---------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedResult:
    hs: tuple
    errors: tuple
    order: float
    ratios: tuple = field(default=())


def manufactured_forcing(config: ScenarioConfig, amplitude: float, omega: float) -> Forcing:
    """Source that makes ``amplitude * sin(pi x / L) cos(omega t)`` an exact JMGT solution."""
    lam = (math.pi / config.domain.length) ** 2
    A = amplitude * math.sqrt(config.domain.length / 2.0)
    tau, c2, dl = config.tau, config.c ** 2, config.delta
    sin_part = A * (tau * omega ** 3 - tau * c2 * lam * omega - dl * lam * omega)
    cos_part = A * (c2 * lam - omega ** 2)
    return Forcing((math.hypot(sin_part, cos_part),), omega, math.atan2(-sin_part, cos_part))


def manufactured_test(config: ScenarioConfig, hs=(4e-3, 2e-3, 1e-3), amplitude: float = 1.0,
                      omega: float = 2.0 * math.pi) -> ManufacturedResult:
    pair = config.pair
    if not (pair.k1.is_delta and pair.k2.kind == ONE) or not isinstance(config.domain, Interval):
        raise UnsupportedScenario("manufactured_test covers K1 = delta_0, K2 = 1 on an interval")
    if config.mode != "Linear":
        raise UnsupportedScenario("manufactured_test runs the linear equation")
    m = config.domain.n_modes
    A = amplitude * math.sqrt(config.domain.length / 2.0)
    data = InitialData.from_modes(m, u0=[A], u1=[0.0], u2=[-A * omega ** 2])
    forcing = manufactured_forcing(config, amplitude, omega)
    errors = []
    for h in hs:
        cfg = config.replace(h=h, forcing=forcing, stride=1)
        traj = solve_linear(cfg, data)
        exact = np.zeros_like(traj.x)
        exact[:, 0] = A * np.cos(omega * traj.t)
        errors.append(float(np.max(np.linalg.norm(traj.x - exact, axis=1))))
    if all(e == 0 for e in errors):
        order = math.inf
    else:
        order = fit_order(zip(hs, errors)).slope
    ratios = tuple(a / b for a, b in zip(errors, errors[1:]) if b > 0)
    return ManufacturedResult(tuple(hs), tuple(errors), order, ratios)


def self_convergence(config: ScenarioConfig, data: InitialData, levels: int = 4) -> ManufacturedResult:
    """Successive-halving check: errors ``||u_h - u_{h/2}||_{L_inf(L2)}`` on the coarse grid."""
    if levels < 4:
        raise DomainError("self-convergence needs at least 4 levels for 3 differences")
    hs = [config.h / 2 ** k for k in range(levels)]
    runs = [solve_scenario(config.replace(h=h, stride=1), data) for h in hs]
    errors = []
    for k in range(levels - 1):
        coarse, fine = runs[k], runs[k + 1]
        errors.append(float(np.max(np.linalg.norm(coarse.x - fine.x[::2], axis=1))))
    pairs = list(zip(hs[:-1], errors))
    order = math.inf if all(e == 0 for e in errors) else fit_order(pairs).slope
    ratios = tuple(a / b for a, b in zip(errors, errors[1:]) if b > 0)
    return ManufacturedResult(tuple(hs[:-1]), tuple(errors), order, ratios)


__all__ = [
    "EnergyRecord", "energy_report", "peak_energy", "FitResult", "fit_order",
    "SweepEntry", "SweepResult", "tau_sweep", "composite_error",
    "solve_scenario", "ManufacturedResult", "manufactured_forcing", "manufactured_test", "self_convergence",
]
