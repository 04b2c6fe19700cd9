"""Dirichlet-Laplace sine basis on an interval or a rectangle.

Basis functions are L2-orthonormal, ``phi_k(x) = sqrt(2/L) sin(k pi x / L)``,
so the Galerkin mass matrix is the identity.  Physical samples live on the
uniform interior grid ``x_j = j L / (J + 1)``, ``j = 1..J``, where the
type-I discrete sine transform is an exact transform pair for fields with
at most ``J`` modes per axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft as sp_fft

from .errors import ShapeError, UnsupportedScenario


@dataclass(frozen=True)
class Interval:
    length: float = 1.0
    n_modes: int = 8

    def __post_init__(self):
        if self.length <= 0 or self.n_modes < 1:
            raise ShapeError("interval needs length > 0 and n_modes >= 1")

    dim = 1

    @property
    def size(self) -> int:
        return self.n_modes


@dataclass(frozen=True)
class Rectangle:
    lx: float = 1.0
    ly: float = 1.0
    n_modes: int = 4

    def __post_init__(self):
        if self.lx <= 0 or self.ly <= 0 or self.n_modes < 1:
            raise ShapeError("rectangle needs positive sides and n_modes >= 1")

    dim = 2

    @property
    def size(self) -> int:
        return self.n_modes ** 2


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues sorted ascending; ``index[k]`` gives the wave numbers of mode ``k``."""

    eigenvalues: np.ndarray
    index: np.ndarray


def eigenpairs(domain) -> EigenSystem:
    if isinstance(domain, Interval):
        k = np.arange(1, domain.n_modes + 1)
        lam = (k * np.pi / domain.length) ** 2
        return EigenSystem(lam, k.reshape(-1, 1))
    i, j = np.meshgrid(np.arange(1, domain.n_modes + 1), np.arange(1, domain.n_modes + 1), indexing="ij")
    i, j = i.ravel(), j.ravel()
    lam = (i * np.pi / domain.lx) ** 2 + (j * np.pi / domain.ly) ** 2
    order = np.lexsort((j, i, lam))
    return EigenSystem(lam[order], np.stack([i[order], j[order]], axis=1))


class SineBasis:
    """Transforms between modal coefficients and interior grid samples.

    ``quad_points`` is the number of interior grid points per axis; the
    default ``2 * n_modes`` keeps quadratic products free of aliasing.
    """

    def __init__(self, domain, quad_points: Optional[int] = None):
        self.domain = domain
        self.eig = eigenpairs(domain)
        n = domain.n_modes
        self.quad_points = 2 * n if quad_points is None else int(quad_points)
        if self.quad_points < n:
            raise ShapeError(f"{self.quad_points} grid points cannot carry {n} modes")
        J = self.quad_points
        if domain.dim == 1:
            self.lengths = (domain.length,)
        else:
            self.lengths = (domain.lx, domain.ly)
        self.x = tuple(L * np.arange(1, J + 1) / (J + 1) for L in self.lengths)
        self.dx = tuple(L / (J + 1) for L in self.lengths)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.eigenvalues

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def grid_shape(self):
        return (self.quad_points,) * self.domain.dim

    # modal <-> physical --------------------------------------------------
    def _to_grid_coeffs(self, field):
        """Scatter the sorted modal vector into a (J,) or (J, J) coefficient array."""
        J = self.quad_points
        c = np.zeros(self.grid_shape + field.shape[1:])
        idx = self.eig.index - 1
        if self.domain.dim == 1:
            c[idx[:, 0]] = field
        else:
            c[idx[:, 0], idx[:, 1]] = field
        return c

    def _from_grid_coeffs(self, c):
        idx = self.eig.index - 1
        if self.domain.dim == 1:
            return c[idx[:, 0]]
        return c[idx[:, 0], idx[:, 1]]

    def to_physical(self, field) -> np.ndarray:
        """Samples on the interior grid; extra trailing axes are batched."""
        field = np.asarray(field, dtype=float)
        if field.shape[0] != self.n:
            raise ShapeError(f"expected {self.n} modal coefficients, got {field.shape[0]}")
        c = self._to_grid_coeffs(field)
        axes = tuple(range(self.domain.dim))
        scale = np.prod([np.sqrt(2.0 / L) / 2.0 for L in self.lengths])
        return scale * sp_fft.dstn(c, type=1, axes=axes)

    def to_modal(self, samples) -> np.ndarray:
        samples = np.asarray(samples, dtype=float)
        if samples.shape[: self.domain.dim] != self.grid_shape:
            raise ShapeError(f"expected samples of shape {self.grid_shape}, got {samples.shape}")
        axes = tuple(range(self.domain.dim))
        scale = np.prod([np.sqrt(2.0 / L) * dx / 2.0 for L, dx in zip(self.lengths, self.dx)])
        return self._from_grid_coeffs(scale * sp_fft.dstn(samples, type=1, axes=axes))

    # products ----------------------------------------------------------
    def apply_coefficient(self, coeff_samples, field) -> np.ndarray:
        """Modal coefficients of ``coeff * field`` (pointwise product, then projection)."""
        coeff_samples = np.asarray(coeff_samples, dtype=float)
        phys = self.to_physical(field)
        if phys.ndim > coeff_samples.ndim:
            coeff_samples = coeff_samples.reshape(coeff_samples.shape + (1,) * (phys.ndim - coeff_samples.ndim))
        return self.to_modal(coeff_samples * phys)

    def coefficient_matrix(self, coeff_samples) -> np.ndarray:
        """Dense matrix of :meth:`apply_coefficient`, i.e. entries ``(coeff phi_j, phi_i)``."""
        return self.apply_coefficient(coeff_samples, np.eye(self.n))

    # derivatives -------------------------------------------------------
    def laplacian(self, field) -> np.ndarray:
        """Modal coefficients of ``Delta u``."""
        field = np.asarray(field, dtype=float)
        lam = self.eigenvalues.reshape((-1,) + (1,) * (field.ndim - 1))
        return -lam * field

    def gradient_samples(self, field) -> np.ndarray:
        """``du/dx`` on the grid (interval only)."""
        if self.domain.dim != 1:
            raise UnsupportedScenario("spectral gradients are implemented on the interval only")
        field = np.asarray(field, dtype=float)
        L = self.domain.length
        k = self.eig.index[:, 0]
        cosines = np.cos(np.outer(self.x[0], k) * np.pi / L) * np.sqrt(2.0 / L) * (k * np.pi / L)
        return cosines @ field

    def l2_norm(self, samples) -> float:
        """Physical L2 norm by the rectangle rule on the interior grid."""
        samples = np.asarray(samples, dtype=float)
        return float(np.sqrt(np.sum(samples ** 2) * np.prod(self.dx)))


def nonlinearity(mode: str, basis: SineBasis, u, u_t, k3: float) -> np.ndarray:
    """Grid samples of the quadratic term, given modal ``u`` and ``u_t``.

    ``WB``: ``2 k3 u_t**2``; ``KB``: ``2 k3 grad u . grad u_t`` (gradients spectral).
    """
    mode = mode.upper()
    if k3 == 0.0:
        return np.zeros(basis.grid_shape)
    if mode == "WB":
        ut = basis.to_physical(u_t)
        return 2.0 * k3 * ut ** 2
    if mode == "KB":
        return 2.0 * k3 * basis.gradient_samples(u) * basis.gradient_samples(u_t)
    if mode == "LINEAR":
        return np.zeros(basis.grid_shape)
    raise UnsupportedScenario(f"unknown nonlinearity mode {mode!r}")


def nonlinearity_from_samples(mode: str, k3: float, u_t=None, grad_u=None, grad_u_t=None) -> np.ndarray:
    """Pointwise version of :func:`nonlinearity` on already sampled fields."""
    mode = mode.upper()
    if mode == "WB":
        return 2.0 * k3 * np.asarray(u_t, dtype=float) ** 2
    if mode == "KB":
        return 2.0 * k3 * np.asarray(grad_u, dtype=float) * np.asarray(grad_u_t, dtype=float)
    raise UnsupportedScenario(f"unknown nonlinearity mode {mode!r}")
