"""Principal eigenvalues of n x n time-periodic cooperative ODE systems.

The eigenproblem  omega * dphi/dt - A(t) phi = h phi  with 1-periodic phi
maps, through phi = e^{h t / omega} u, to the period map of the linear flow
omega * u' = A(t) u.  The principal multiplier mu_P of the fundamental
matrix Phi(1) (positive and simple, the period map of a cooperative
irreducible system is a positive matrix) gives h = -omega * log mu_P.

The integrator renormalizes the fundamental matrix every step and tracks
the accumulated log scale, so arbitrarily small omega cannot overflow.
All routines accept stacked coefficient matrices (..., n, n) and solve the
whole stack in one vectorized pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import MatrixField, spatial_average
from .errors import BracketError, ConvergenceError
from .grids import SpatialGrid, TimeGrid

DEFAULT_STEPS = 4096


@dataclass
class MonodromyResult:
    """Period map of one (or a stack of) periodic ODE system(s)."""

    fundamental: np.ndarray    # (..., n, n), renormalized
    log_scale: np.ndarray      # (...,) accumulated log of removed factors
    multiplier: np.ndarray     # (...,) principal multiplier of the scaled map
    eigenvector: np.ndarray    # (..., n) positive
    h: np.ndarray              # (...,) = -omega (log multiplier + log_scale)
    steps: int
    residual: float


def _power_iteration(Phi, tol=1e-13, max_sweeps=10_000):
    """Dominant eigenpair of a stack of entrywise-positive matrices by
    power iteration from the all-ones vector.

    Matrices with a huge dynamic range (period maps at tiny omega) pin the
    iterate at a float fixed point above ``tol``; a plateauing delta below
    1e-7 is accepted as converged, and the returned residual reports the
    achieved quality either way.
    """
    v = np.ones(Phi.shape[:-1])
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    mu = np.ones(Phi.shape[:-2])
    stalled = 0
    best = math.inf
    for _ in range(max_sweeps):
        w = np.einsum("...ij,...j->...i", Phi, v)
        mu_new = np.linalg.norm(w, axis=-1)
        w = w / mu_new[..., None]
        delta = float(np.max(np.abs(w - v)))
        v = w
        mu = mu_new
        if delta < tol:
            break
        stalled = stalled + 1 if delta > 0.5 * best else 0
        best = min(best, delta)
        if stalled >= 5 and best < 1e-7:
            break
    else:
        raise ConvergenceError(
            f"power iteration on the period map stalled (last delta {delta:.3e})",
            history=[float(np.max(mu))])
    resid = np.max(np.linalg.norm(
        np.einsum("...ij,...j->...i", Phi, v) - mu[..., None] * v, axis=-1))
    return mu, v, float(resid)


def monodromy(A_of_t, omega: float, steps: int = DEFAULT_STEPS) -> MonodromyResult:
    """Integrate omega Phi' = A(t) Phi over one period with classical RK4.

    ``A_of_t(t)`` must return an (..., n, n) array; the whole stack is
    advanced together.  Each step the fundamental matrix is renormalized
    by its max-abs entry (per stacked system) and the log accumulated.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    A0 = np.asarray(A_of_t(0.0), dtype=float)
    n = A0.shape[-1]
    lead = A0.shape[:-2]
    Phi = np.broadcast_to(np.eye(n), lead + (n, n)).copy()
    log_scale = np.zeros(lead)
    dt = 1.0 / steps
    inv_w = 1.0 / omega
    for m in range(steps):
        t = m * dt
        A1 = A_of_t(t) if m else A0
        Ah = A_of_t(t + 0.5 * dt)
        A2 = A_of_t(t + dt)
        k1 = inv_w * np.einsum("...ij,...jk->...ik", A1, Phi)
        k2 = inv_w * np.einsum("...ij,...jk->...ik", Ah, Phi + 0.5 * dt * k1)
        k3 = inv_w * np.einsum("...ij,...jk->...ik", Ah, Phi + 0.5 * dt * k2)
        k4 = inv_w * np.einsum("...ij,...jk->...ik", A2, Phi + dt * k3)
        Phi = Phi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        scale = np.max(np.abs(Phi), axis=(-2, -1))
        Phi = Phi / scale[..., None, None]
        log_scale = log_scale + np.log(scale)
    mu, v, resid = _power_iteration(Phi)
    h = -omega * (np.log(mu) + log_scale)
    return MonodromyResult(Phi, log_scale, mu, v, h, steps, resid)


def ode_eigenvalue(A_of_t, omega: float, steps: int = DEFAULT_STEPS) -> MonodromyResult:
    """Principal eigenvalue h of a single periodic system (see module doc)."""
    res = monodromy(lambda t: np.asarray(A_of_t(t), dtype=float), omega, steps)
    res.h = float(res.h)
    res.multiplier = float(res.multiplier)
    return res


def h_under(A: MatrixField, omega: float, grid: SpatialGrid,
            steps: int = DEFAULT_STEPS, tie_tol: float = 1e-9):
    """min over grid nodes of h(x_j, omega), with the full argmin set.

    Returns (h_min, argmin_nodes, h_values).
    """
    res = monodromy(lambda t: A.eval_nodes(grid, t), omega, steps)
    h = np.asarray(res.h)
    hmin = float(h.min())
    argmin = np.flatnonzero(h <= hmin + tie_tol)
    return hmin, argmin, h


def h_bar(A: MatrixField, omega: float, grid: SpatialGrid, tgrid: TimeGrid,
          steps: int = DEFAULT_STEPS) -> float:
    """h of the spatially averaged system; the samples of the average are
    interpolated trigonometrically exactly because averaging is linear,
    so the evaluator below re-averages the field at arbitrary t."""
    def Abar(t):
        return _spatial_average_at(A, grid, t)
    return float(ode_eigenvalue(Abar, omega, steps).h)


def _spatial_average_at(A: MatrixField, grid: SpatialGrid, t) -> np.ndarray:
    nodes = A.eval_nodes(grid, t)            # (N, n, n)
    w = grid.weights / grid.L
    return np.einsum("n,nij->ij", w, nodes)


def invert_monotone(f, target: float, lo: float, hi: float,
                    f_tol: float = 1e-8, rel_x_tol: float = 1e-10,
                    max_iter: int = 200) -> float:
    """Solve f(w) = target for a nondecreasing f by bisection.

    Requires f(lo) <= target <= f(hi); raises BracketError otherwise
    (the honest signal that the target is outside the function's range).
    """
    flo, fhi = f(lo), f(hi)
    if abs(flo - target) <= f_tol:
        return lo
    if abs(fhi - target) <= f_tol:
        return hi
    if not (flo <= target <= fhi):
        raise BracketError(
            f"target {target:.6g} outside [{flo:.6g}, {fhi:.6g}] on the bracket",
            lo=lo, hi=hi, flo=flo, fhi=fhi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm - target) <= f_tol or (hi - lo) <= rel_x_tol * abs(mid):
            return mid
        if fm < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
