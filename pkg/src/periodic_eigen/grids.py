"""Discretization of the space-time cylinder [0, L] x [0, 1).

Space is a uniform node grid with mirror-ghost Neumann boundary rows;
time is a uniform sample grid over one period, closed at both ends
(t_0 = 0 and t_M = 1 both carry samples).  All quadrature is trapezoid,
which is exact on piecewise-linear data and spectrally accurate on
smooth periodic time data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PeriodicityWarning


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [0, L] with N nodes, x_j = j*h, h = L/(N-1)."""

    L: float
    N: int

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"domain length must be positive, got {self.L}")
        if self.N < 3:
            raise ValueError(f"need at least 3 nodes, got {self.N}")

    @property
    def h(self) -> float:
        return self.L / (self.N - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.N)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (h/2 at the ends, h inside)."""
        w = np.full(self.N, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass(frozen=True)
class TimeGrid:
    """M uniform steps over the unit period; samples at t_m = m/M, m = 0..M."""

    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"need at least 2 time steps, got {self.M}")

    @property
    def dt(self) -> float:
        return 1.0 / self.M

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M


def _check_nodes(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != grid.N:
        raise DimensionError(
            f"function has {f.shape[-1]} nodes, grid has {grid.N}")
    return f


def neumann_laplacian(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Second difference with mirror ghosts (f_{-1} = f_1, f_N = f_{N-2}).

    Interior stencil (f_{j-1} - 2 f_j + f_{j+1})/h^2; the mirror rule gives
    2(f_1 - f_0)/h^2 and 2(f_{N-2} - f_{N-1})/h^2 at the boundary rows.
    Operates on the last axis.
    """
    f = _check_nodes(f, grid)
    out = np.empty_like(f)
    inv_h2 = 1.0 / grid.h ** 2
    out[..., 1:-1] = (f[..., :-2] - 2.0 * f[..., 1:-1] + f[..., 2:]) * inv_h2
    out[..., 0] = 2.0 * (f[..., 1] - f[..., 0]) * inv_h2
    out[..., -1] = 2.0 * (f[..., -2] - f[..., -1]) * inv_h2
    return out


def gradient_central(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Central difference (f_{j+1} - f_{j-1})/(2h) with mirror ghosts.

    The mirror rule makes both boundary values exactly zero.
    """
    f = _check_nodes(f, grid)
    out = np.empty_like(f)
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * grid.h)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def integrate_space(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Trapezoid quadrature over [0, L] along the last axis."""
    f = _check_nodes(f, grid)
    return f @ grid.weights


def integrate_time(samples: np.ndarray, periodicity_tol: float = 1e-8) -> np.ndarray:
    """Trapezoid rule over the closed period samples t_0 .. t_M.

    Warns (PeriodicityWarning) when the first and last samples disagree
    beyond ``periodicity_tol`` relative to the sample scale; the value is
    still returned.  Operates on the last axis.
    """
    s = np.asarray(samples, dtype=float)
    M = s.shape[-1] - 1
    if M < 2:
        raise DimensionError("need samples at t_0..t_M with M >= 2")
    scale = 1.0 + np.max(np.abs(s))
    defect = np.max(np.abs(s[..., -1] - s[..., 0]))
    if defect > periodicity_tol * scale:
        warnings.warn(
            f"period endpoints differ by {defect:.3e} (scale {scale:.3e})",
            PeriodicityWarning, stacklevel=2)
    return (0.5 * (s[..., 0] + s[..., -1]) + s[..., 1:-1].sum(axis=-1)) / M


def trapezoid_inner(f: np.ndarray, g: np.ndarray, grid: SpatialGrid) -> float:
    """<f, g> under the trapezoid weights, summed over all leading axes."""
    f = _check_nodes(f, grid)
    g = _check_nodes(g, grid)
    return float(np.sum((f * g) @ grid.weights))
