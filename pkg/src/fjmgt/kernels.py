"""Memory kernels and their discrete convolution calculus.

A kernel is one of four variants: the Dirac delta at zero, the Abel kernel
``g_a(t) = t**(a-1) / Gamma(a)`` with ``0 < a < 1``, the constant one, and a
tabulated kernel given by samples.  Convolutions ``(K * z)(t_n)`` are
discretised by right-endpoint product integration: the density ``z`` is
piecewise constant on the cells ``(t_{j-1}, t_j]`` and the kernel is
integrated exactly over each cell,

    (K * z)(t_n) ~ sum_{j=1}^{n} w_{n-j} z_j,   w_m = int_{t_m}^{t_{m+1}} K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sp_fft
from scipy.special import gamma

from .errors import (
    DomainError,
    NoIntegrableResolvent,
    NumericalError,
    PointwiseUndefined,
    UnsupportedScenario,
)

DELTA = "delta"
ABEL = "abel"
ONE = "one"
TABULATED = "tabulated"

SCENARIOS = ("JMGT", "GFE_I", "GFE_III", "GFE", "Custom")


@dataclass(frozen=True, eq=False)
class Kernel:
    """Tagged memory kernel.  Build with the classmethod constructors."""

    kind: str
    order: Optional[float] = None
    grid: Optional[np.ndarray] = field(default=None, repr=False)
    values: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == ABEL:
            if self.order is None or not (0.0 < self.order < 1.0):
                raise DomainError(f"Abel order must lie in (0, 1), got {self.order}")
        elif self.kind == TABULATED:
            grid = np.array(self.grid, dtype=float)
            values = np.array(self.values, dtype=float)
            if grid.ndim != 1 or grid.size < 2 or grid.shape != values.shape:
                raise DomainError("tabulated kernel needs matching 1-D grid and values with >= 2 points")
            if np.any(np.diff(grid) <= 0) or grid[0] <= 0:
                raise DomainError("tabulated grid must be positive and strictly increasing")
            if not np.all(np.isfinite(values)):
                raise DomainError("tabulated kernel values must be finite")
            grid.flags.writeable = False
            values.flags.writeable = False
            object.__setattr__(self, "grid", grid)
            object.__setattr__(self, "values", values)
        elif self.kind not in (DELTA, ONE):
            raise DomainError(f"unknown kernel kind {self.kind!r}")

    # constructors -----------------------------------------------------
    @classmethod
    def delta(cls) -> "Kernel":
        return cls(DELTA)

    @classmethod
    def abel(cls, order: float) -> "Kernel":
        return cls(ABEL, order=float(order))

    @classmethod
    def one(cls) -> "Kernel":
        return cls(ONE)

    @classmethod
    def tabulated(cls, grid, values) -> "Kernel":
        return cls(TABULATED, grid=grid, values=values)

    # comparison / display ---------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Kernel) or self.kind != other.kind:
            return NotImplemented if not isinstance(other, Kernel) else False
        if self.kind == ABEL:
            return math.isclose(self.order, other.order, rel_tol=0, abs_tol=1e-12)
        if self.kind == TABULATED:
            return (self.grid.shape == other.grid.shape
                    and np.array_equal(self.grid, other.grid)
                    and np.array_equal(self.values, other.values))
        return True

    def __hash__(self):
        if self.kind == TABULATED:
            return hash((self.kind, self.grid.tobytes(), self.values.tobytes()))
        return hash((self.kind, None if self.order is None else round(self.order, 12)))

    def __str__(self):
        if self.kind == ABEL:
            return f"g_{self.order:g}"
        if self.kind == TABULATED:
            return f"tabulated[{self.grid.size}]"
        return {DELTA: "delta_0", ONE: "1"}[self.kind]

    @property
    def is_delta(self) -> bool:
        return self.kind == DELTA

    # pointwise evaluation ----------------------------------------------
    def eval(self, t):
        """Kernel value at ``t > 0`` (scalar or array)."""
        if self.kind == DELTA:
            raise PointwiseUndefined("the Dirac delta has no pointwise value")
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0):
            raise DomainError("kernels are evaluated at t > 0 only")
        if self.kind == ABEL:
            out = t_arr ** (self.order - 1.0) / gamma(self.order)
        elif self.kind == ONE:
            out = np.ones_like(t_arr)
        else:
            out = self._tab_eval(t_arr)
        return float(out) if np.ndim(out) == 0 else out

    def antiderivative(self, t):
        """``int_0^t K`` for ``t >= 0``; the delta integrates to one."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise DomainError("antiderivative needs t >= 0")
        if self.kind == DELTA:
            out = np.where(t_arr > 0, 1.0, 0.0)
        elif self.kind == ABEL:
            out = t_arr ** self.order / gamma(self.order + 1.0)
        elif self.kind == ONE:
            out = t_arr.copy()
        else:
            out = self._tab_antiderivative(t_arr)
        return float(out) if np.ndim(out) == 0 else out

    def mass(self, T: float) -> float:
        """Total variation norm on (0, T): 1 for the delta, the L1 norm otherwise."""
        if self.kind == DELTA:
            return 1.0
        if self.kind == TABULATED:
            return float(np.sum(np.abs(np.diff(self.antiderivative(np.linspace(0.0, T, 2049))))))
        return float(self.antiderivative(T))

    @property
    def singularity_index(self) -> float:
        """Exponent ``b`` with K(t) ~ t**(b-1) near zero (0 for the delta)."""
        if self.kind == DELTA:
            return 0.0
        if self.kind == ONE:
            return 1.0
        if self.kind == ABEL:
            return self.order
        return float(np.clip(self._head_exponent() + 1.0, 0.0, 1.0))

    # tabulated helpers -------------------------------------------------
    def _head_exponent(self) -> float:
        g, v = self.grid, self.values
        if v[0] > 0 and v[1] > 0:
            p = math.log(v[1] / v[0]) / math.log(g[1] / g[0])
            if p <= -1.0:
                raise NumericalError("tabulated kernel is not integrable at t = 0")
            return p
        return 0.0

    def _tab_eval(self, t):
        g, v = self.grid, self.values
        if np.any(t > g[-1] * (1 + 1e-12)):
            raise DomainError(f"t beyond tabulated range {g[-1]:g}")
        p = self._head_exponent()
        head = v[0] * (np.minimum(t, g[0]) / g[0]) ** p
        return np.where(t < g[0], head, np.interp(t, g, v))

    def _tab_antiderivative(self, t):
        g, v = self.grid, self.values
        if np.any(t > g[-1] * (1 + 1e-12)):
            raise DomainError(f"t beyond tabulated range {g[-1]:g}")
        t = np.minimum(t, g[-1])
        p = self._head_exponent()
        head_total = v[0] * g[0] / (p + 1.0)
        head = head_total * (np.minimum(t, g[0]) / g[0]) ** (p + 1.0)
        cum = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(g) * (v[1:] + v[:-1]))))
        idx = np.clip(np.searchsorted(g, t, side="right") - 1, 0, g.size - 2)
        part = (t - g[idx]) * 0.5 * (v[idx] + np.interp(t, g, v))
        body = head_total + cum[idx] + part
        return np.where(t <= g[0], head, body)

    # serialization -----------------------------------------------------
    def to_config(self):
        if self.kind == ABEL:
            return f"abel:{self.order!r}"
        if self.kind == TABULATED:
            return {"grid": self.grid.tolist(), "values": self.values.tolist()}
        return self.kind

    @classmethod
    def from_config(cls, spec) -> "Kernel":
        if isinstance(spec, dict):
            return cls.tabulated(spec["grid"], spec["values"])
        text = str(spec).strip().lower()
        if text in (DELTA, "dirac", "delta0"):
            return cls.delta()
        if text in (ONE, "1", "constant"):
            return cls.one()
        if text.startswith("abel:") or text.startswith("g:"):
            return cls.abel(float(text.split(":", 1)[1]))
        raise DomainError(f"cannot parse kernel descriptor {spec!r}")


def _abel_or_one(order: float) -> Kernel:
    """Abel kernel, letting order 1 stand for the constant kernel."""
    if math.isclose(order, 1.0, abs_tol=1e-14):
        return Kernel.one()
    return Kernel.abel(order)


@dataclass(frozen=True, eq=False)
class KernelPair:
    k1: Kernel
    k2: Kernel
    power_a: float
    scenario_tag: str = "Custom"

    def __post_init__(self):
        if self.scenario_tag not in SCENARIOS:
            raise UnsupportedScenario(f"unknown scenario {self.scenario_tag!r}")
        if self.scenario_tag != "Custom":
            k1, k2, a = _table_row(self.scenario_tag, self.alpha)
            if k1 != self.k1 or k2 != self.k2 or not math.isclose(a, self.power_a, abs_tol=1e-12):
                raise DomainError(f"kernels do not match the {self.scenario_tag} law")

    @property
    def alpha(self) -> Optional[float]:
        """Fractional order implied by a named law (None for JMGT/Custom)."""
        tag = self.scenario_tag
        if tag in ("GFE_I", "GFE_III") and self.k2.kind == ABEL:
            return self.k2.order
        if tag == "GFE" and self.k1.kind == ABEL:
            return 1.0 - self.k1.order
        return None

    @classmethod
    def named(cls, tag: str, alpha: Optional[float] = None) -> "KernelPair":
        tag = normalize_tag(tag)
        return cls(*_table_row(tag, alpha), tag)


def _table_row(tag: str, alpha: Optional[float]):
    if tag == "JMGT":
        return Kernel.delta(), Kernel.one(), 1.0
    if alpha is None or not (0.0 < alpha < 1.0):
        raise DomainError(f"{tag} needs a fractional order alpha in (0, 1)")
    if tag == "GFE_I":
        return Kernel.abel(1.0 - alpha), Kernel.abel(alpha), alpha
    if tag == "GFE_III":
        return Kernel.delta(), Kernel.abel(alpha), 1.0
    if tag == "GFE":
        return Kernel.abel(1.0 - alpha), Kernel.one(), alpha
    raise UnsupportedScenario(f"no kernel table row for {tag!r}")


def normalize_tag(tag: str) -> str:
    key = str(tag).strip().upper().replace("-", "_").replace(" ", "_")
    aliases = {"GFE1": "GFE_I", "GFEI": "GFE_I", "GFE3": "GFE_III", "GFEIII": "GFE_III",
               "MGT": "JMGT", "CUSTOM": "Custom"}
    key = aliases.get(key.replace("_", ""), key)
    if key not in SCENARIOS:
        raise UnsupportedScenario(f"unknown scenario {tag!r}")
    return key


@dataclass(frozen=True)
class ScenarioExponents:
    alpha1: float
    alpha2: float
    p: float
    p_conj: float
    q: float
    q_tilde: float
    s: float
    r: float
    sigma: float
    rho: float


def scenario_table(alpha: float, iota: float = 0.1) -> dict:
    """Exponents entering the kernel assumptions for each named law.

    ``iota`` is the arbitrarily small slack in the GFE I / GFE rows.
    """
    inf = math.inf
    p1 = (1.0 + iota) / iota
    return {
        "GFE_I": ScenarioExponents(1 - alpha, alpha, p1, 1 + iota, 1 / alpha - iota, 1.0,
                                   1.5, 2.0, (3 + alpha) / 2, 2.0),
        "GFE_III": ScenarioExponents(0.0, alpha, inf, 1.0, 1.0, 1.0, 2 - alpha / 2, 2.0, 2.0, 2.0),
        "GFE": ScenarioExponents(1 - alpha, 1.0, 2 / (1 - alpha), 2 / (1 + alpha),
                                 1 / alpha - iota, 1.0, 1 + alpha / 2, 2.0, (3 + alpha) / 2, 2.0),
    }


# ---------------------------------------------------------------------------
# convolution quadrature

@dataclass(frozen=True, eq=False)
class ConvolutionWeights:
    h: float
    n: int
    weights: np.ndarray
    is_delta: bool = False

    def __len__(self):
        return self.n


def build_weights(kernel: Kernel, h: float, n: int) -> ConvolutionWeights:
    if h <= 0 or n < 1:
        raise DomainError("need h > 0 and n >= 1")
    if kernel.is_delta:
        return ConvolutionWeights(h, n, np.zeros(0), is_delta=True)
    if kernel.kind == ONE:
        w = np.full(n, float(h))
    elif kernel.kind == ABEL:
        b = kernel.order
        m = np.arange(n + 1, dtype=float)
        w = h ** b * np.diff(m ** b) / gamma(b + 1.0)
    else:
        w = np.diff(kernel.antiderivative(h * np.arange(n + 1, dtype=float)))
    if not np.all(np.isfinite(w)):
        raise NumericalError("non-finite convolution weights")
    w.flags.writeable = False
    return ConvolutionWeights(h, n, w)


def conv_apply(weights: ConvolutionWeights, history):
    """``(K * z)(t_n)`` from the history ``z_1..z_n`` (leading axis is time)."""
    z = np.asarray(history, dtype=float)
    n = z.shape[0] if z.ndim else 0
    if n == 0:
        return 0.0 if z.ndim <= 1 else np.zeros(z.shape[1:])
    if weights.is_delta:
        return z[-1].copy() if z.ndim > 1 else float(z[-1])
    if n > weights.n:
        raise DomainError(f"history of length {n} exceeds the {weights.n} available weights")
    out = np.tensordot(weights.weights[:n][::-1], z, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


def conv_apply_naive(weights: ConvolutionWeights, series) -> np.ndarray:
    """All ``(K * z)(t_n)``, ``n = 1..N``, by repeated :func:`conv_apply`."""
    z = np.asarray(series, dtype=float)
    out = np.empty_like(z)
    for n in range(1, z.shape[0] + 1):
        out[n - 1] = conv_apply(weights, z[:n])
    return out


def conv_apply_fast(weights: ConvolutionWeights, series) -> np.ndarray:
    """Same values as :func:`conv_apply_naive` in O(N log N) via FFT."""
    z = np.asarray(series, dtype=float)
    if weights.is_delta:
        return z.copy()
    n = z.shape[0]
    if n == 0:
        return z.copy()
    if n > weights.n:
        raise DomainError(f"series of length {n} exceeds the {weights.n} available weights")
    size = sp_fft.next_fast_len(2 * n - 1, real=True)
    w = weights.weights[:n].reshape((n,) + (1,) * (z.ndim - 1))
    spec = sp_fft.rfft(w, size, axis=0) * sp_fft.rfft(z, size, axis=0)
    return sp_fft.irfft(spec, size, axis=0)[:n]


def resolvent(kernel: Kernel, h: Optional[float] = None, n: Optional[int] = None) -> Kernel:
    """Kernel ``R`` with ``K * R = 1``.

    Closed forms for the delta and Abel kernels; tabulated kernels are
    inverted numerically on the grid ``(h, n)`` by forward substitution
    in the discrete first-kind Volterra system, returning cell averages
    tabulated at the cell midpoints.
    """
    if kernel.kind == DELTA:
        return Kernel.one()
    if kernel.kind == ONE:
        raise NoIntegrableResolvent("the resolvent of 1 is the delta, which has no L1 table")
    if kernel.kind == ABEL:
        return Kernel.abel(1.0 - kernel.order)
    if h is None or n is None:
        raise DomainError("a tabulated resolvent needs a grid (h, n)")
    w = build_weights(kernel, h, n).weights
    if w[0] <= 0:
        raise NoIntegrableResolvent("leading weight vanishes; resolvent not computable")
    r = np.empty(n)
    for k in range(n):
        r[k] = (1.0 - np.dot(w[k:0:-1], r[:k])) / w[0]
    if not np.all(np.isfinite(r)):
        raise NumericalError("resolvent solve produced non-finite values")
    # midpoints carry the cell averages; close the table at t_n by linear extrapolation
    grid = np.append(h * (np.arange(1, n + 1) - 0.5), h * n)
    tail = r[-1] + 0.5 * (r[-1] - r[-2]) if n > 1 else r[-1]
    return Kernel.tabulated(grid, np.append(r, tail))


def _cell_averages(kernel: Kernel, h: float, n: int) -> np.ndarray:
    return build_weights(kernel, h, n).weights / h


def kernel_convolution(k: Kernel, kres: Kernel, h: float, n: int) -> np.ndarray:
    """Samples of ``(k * kres)(t_j)``, ``j = 1..n``, both kernels taken as cell averages."""
    t = h * np.arange(1, n + 1)
    if k.is_delta and kres.is_delta:
        raise PointwiseUndefined("delta * delta is a delta")
    if k.is_delta:
        return np.asarray(kres.eval(t), dtype=float)
    if kres.is_delta:
        return np.asarray(k.eval(t), dtype=float)
    if kres.kind == ONE:
        return np.asarray(k.antiderivative(t), dtype=float)
    return conv_apply_fast(build_weights(k, h, n), _cell_averages(kres, h, n))


def sonine_defect(k: Kernel, kres: Kernel, h: float, n: int, n_min: int = 10) -> float:
    """``max_{j >= n_min} |(k * kres)(t_j) - 1|``."""
    vals = kernel_convolution(k, kres, h, n)
    start = max(n_min, 1) - 1
    return float(np.max(np.abs(vals[start:] - 1.0)))


def fractional_integral(eta: float, y, h: float) -> np.ndarray:
    """Riemann-Liouville integral ``I^eta y`` at ``t_1..t_N`` from samples ``y_1..y_N``."""
    if not (0.0 < eta <= 1.0):
        raise DomainError("fractional integration order must lie in (0, 1]")
    y = np.asarray(y, dtype=float)
    return conv_apply_fast(build_weights(_abel_or_one(eta), h, y.shape[0]), y)


def neg_sobolev_norm(alpha: float, yprime, h: float) -> float:
    """``||I^{alpha/2} y'||_{L2(0,T)}``, the computable stand-in for ``||y'||_{H^{-alpha/2}}``.

    ``yprime`` holds samples at ``t_1..t_N``; order zero means the plain L2 norm.
    The time integral uses the trapezoid rule with the value 0 at ``t = 0``.
    """
    if not (0.0 <= alpha <= 2.0):
        raise DomainError("alpha must lie in [0, 2]")
    yprime = np.asarray(yprime, dtype=float)
    if yprime.shape[0] == 0:
        return 0.0
    # scale out the magnitude so squaring neither underflows nor overflows
    peak = float(np.max(np.abs(yprime)))
    if peak == 0.0 or not np.isfinite(peak):
        return peak
    yprime = yprime / peak
    if alpha / 2.0 == 0.0:
        sq = yprime ** 2
        weights = np.full(sq.shape[0], h)
    else:
        # I^{alpha/2} y' vanishes at t = 0, so the trapezoid rule starts from 0
        sq = fractional_integral(alpha / 2.0, yprime, h) ** 2
        weights = np.full(sq.shape[0], h)
        weights[-1] = 0.5 * h
    if sq.ndim > 1:
        sq = sq.reshape(sq.shape[0], -1).sum(axis=1)
    total = float(np.dot(weights, sq))
    return peak * math.sqrt(max(total, 0.0))


def fourier_symbol(tag: str, alpha: float, tau_scaled: float, delta: float, omega: float) -> float:
    """Real part of the Fourier transform of ``tau^a c^2 1*K1 + delta K2`` at ``i omega``.

    ``tau_scaled`` is ``tau**a * c**2``.
    """
    if omega <= 0:
        raise DomainError("omega must be positive")
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie in (0, 1)")
    relax = tau_scaled * math.cos((2.0 - alpha) * math.pi / 2.0) * omega ** (alpha - 2.0)
    damp = delta * math.cos(alpha * math.pi / 2.0) * omega ** (-alpha)
    tag = normalize_tag(tag)
    if tag == "GFE_I":
        return relax + damp
    if tag == "GFE_III":
        return damp
    if tag == "GFE":
        return relax
    raise UnsupportedScenario(f"no Fourier symbol tabulated for {tag}")


def discrete_conv(kernel: Kernel, z: np.ndarray, h: float) -> np.ndarray:
    """``(K * z)(t_n)`` for every ``n`` given cell samples ``z_1..z_N`` along axis 0."""
    if kernel.is_delta:
        return np.array(z, dtype=float, copy=True)
    return conv_apply_fast(build_weights(kernel, h, z.shape[0]), z)


__all__ = [
    "Kernel", "KernelPair", "ConvolutionWeights", "ScenarioExponents",
    "build_weights", "conv_apply", "conv_apply_naive", "conv_apply_fast",
    "resolvent", "sonine_defect", "kernel_convolution", "fractional_integral",
    "neg_sobolev_norm", "fourier_symbol", "scenario_table", "normalize_tag",
    "discrete_conv",
]
