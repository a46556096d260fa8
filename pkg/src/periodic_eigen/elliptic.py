"""Principal eigenpairs of cooperative elliptic systems
-rho D Lap(phi) - B(x) phi = lambda phi  with Neumann boundary.

The mirror-ghost Laplacian is symmetric under the trapezoid weights
w = (1/2, 1, ..., 1, 1/2); conjugating by W^{1/2} turns the discrete
operator into a genuinely symmetric banded matrix (bandwidth n in the
node-major ordering), so a banded Cholesky factorization of the shifted
operator drives inverse iteration for the bottom eigenpair, which
Krein-Rutman makes simple with a positive eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .coefficients import (DiffusionMatrix, MatrixField, perron_values_batch,
                           temporal_average)
from .errors import ConvergenceError, RegimeError
from .grids import SpatialGrid, TimeGrid, integrate_time

RHO_FLOOR = 1e-8


@dataclass
class EllipticResult:
    lam: float
    eigenfunction: np.ndarray   # (n, N), positive, sup-norm 1
    residual: float
    iterations: int
    shift: float


def assemble_banded(B_nodes: np.ndarray, rho: float, D: DiffusionMatrix,
                    grid: SpatialGrid) -> np.ndarray:
    """Symmetrized operator in LAPACK upper banded storage.

    Unknown (node j, component i) sits at row j*n + i; the coupling block
    is local to a node and the Laplacian couples neighbouring nodes of one
    component, so the bandwidth is exactly n.
    """
    N, n = grid.N, D.n
    size = N * n
    ab = np.zeros((n + 1, size))
    inv_h2 = 1.0 / grid.h ** 2
    d = D.as_array()
    # -rho d_i * Laplacian: diag 2, off -1 (interior), -sqrt(2) boundary bonds
    diag_lap = 2.0 * rho * d * inv_h2                       # (n,)
    ab[-1, :] += np.tile(diag_lap, N)
    off = np.full(N - 1, -rho * inv_h2)
    bond = np.empty((N - 1, n))
    bond[:] = off[:, None] * d[None, :]
    bond[0] *= np.sqrt(2.0)
    bond[-1] *= np.sqrt(2.0)
    # superdiagonal at distance n links (j,i)-(j+1,i)
    ab[0, n:] += bond.reshape(-1)
    # coupling blocks -B(x_j): distances 0..n-1 within a node
    for k in range(n):
        for i in range(n - k):
            col = np.arange(N) * n + i + k
            ab[n - k, col] += -B_nodes[:, i, i + k]
    return ab


def _band_matvec(ab: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Symmetric banded (upper storage) times vector."""
    u = ab.shape[0] - 1
    out = ab[-1] * v
    for k in range(1, u + 1):
        diag = ab[u - k, k:]
        out[:-k] += diag * v[k:]
        out[k:] += diag * v[:-k]
    return out


def elliptic_principal(B_nodes: np.ndarray, rho: float, D: DiffusionMatrix,
                       grid: SpatialGrid, tol: float = 1e-9,
                       max_iter: int = 50_000, v0: np.ndarray | None = None) -> EllipticResult:
    """Bottom eigenpair by shifted inverse iteration with a reused banded
    Cholesky factor.  ``B_nodes`` has shape (N, n, n).

    The shift sigma = -(max_j mu(B(x_j)) + 1) keeps the operator minus
    sigma positive definite; a failed factorization retries with a doubled
    margin before giving up.
    """
    if rho < RHO_FLOOR:
        raise RegimeError(
            f"rho={rho:.3e} below {RHO_FLOOR:.0e}; use the limit constants "
            "for the vanishing-diffusion regime")
    N, n = grid.N, D.n
    mu_max = float(perron_values_batch(B_nodes).max())
    margin = 1.0
    ab = assemble_banded(B_nodes, rho, D, grid)
    for _ in range(6):
        sigma = -(mu_max + margin)
        shifted = ab.copy()
        shifted[-1, :] -= sigma
        try:
            cb = cholesky_banded(shifted, lower=False)
            break
        except np.linalg.LinAlgError:
            margin *= 2.0
    else:
        raise ConvergenceError("banded Cholesky failed at every shift margin")

    size = N * n
    sqrt_w = np.tile(np.sqrt(grid.weights / grid.h), (n, 1)).T.reshape(-1)
    if v0 is not None:
        v = (v0.T.reshape(-1) * sqrt_w).astype(float)
    else:
        v = np.ones(size)
    v /= np.linalg.norm(v)
    lam = float(v @ _band_matvec(ab, v))
    # large rho pushes the operator norm to ~rho/h^2; the residual of an
    # exact eigenpair then floors at rounding level, which we accept
    op_scale = float(np.abs(ab).sum(axis=0).max())
    floor = 64.0 * np.finfo(float).eps * op_scale
    resid_hist = []
    for it in range(1, max_iter + 1):
        w = cho_solve_banded((cb, False), v)
        w /= np.linalg.norm(w)
        Sw = _band_matvec(ab, w)
        lam = float(w @ Sw)
        resid = float(np.linalg.norm(Sw - lam * w))
        v = w
        resid_hist.append(resid)
        if resid <= max(tol * max(1.0, abs(lam)), floor):
            break
        # Rayleigh polish once the fixed shift has nearly converged; the
        # shift sits below lam by twice the residual so the factorization
        # stays positive definite when lam has settled near the bottom
        if resid <= 1e-4 * max(1.0, abs(lam)) and it % 4 == 0:
            polish = ab.copy()
            polish[-1, :] -= lam - 2.0 * resid - 1e-14
            try:
                cbp = cholesky_banded(polish, lower=False)
            except np.linalg.LinAlgError:
                continue
            w = cho_solve_banded((cbp, False), v)
            w /= np.linalg.norm(w)
            Sw = _band_matvec(ab, w)
            lam = float(w @ Sw)
            resid = float(np.linalg.norm(Sw - lam * w))
            if np.min(w * np.sign(w.sum())) <= 0:
                continue    # polished onto a sign-changing mode; keep iterating
            v = w
            resid_hist.append(resid)
            if resid <= max(tol * max(1.0, abs(lam)), floor):
                break
    else:
        raise ConvergenceError(
            f"inverse iteration stalled at residual {resid_hist[-1]:.3e}",
            history=resid_hist[-5:])
    if v.sum() < 0:
        v = -v
    phi = (v / sqrt_w).reshape(N, n).T
    if phi.min() <= 0.0:
        raise ConvergenceError(
            "converged eigenfunction is not positive; not the principal pair")
    phi = phi / np.abs(phi).max()
    return EllipticResult(lam, phi, resid, it, sigma)


def lambda_bar(A: MatrixField, rho: float, D: DiffusionMatrix,
               grid: SpatialGrid, tgrid: TimeGrid, tol: float = 1e-9,
               v0: np.ndarray | None = None) -> EllipticResult:
    """Principal eigenvalue with the temporally averaged coupling matrix."""
    B = temporal_average(A, grid, tgrid)
    return elliptic_principal(B, rho, D, grid, tol=tol, v0=v0)


def lambda0_series(A: MatrixField, rho: float, D: DiffusionMatrix,
                   grid: SpatialGrid, tgrid: TimeGrid, tol: float = 1e-9) -> np.ndarray:
    """Frozen-time principal eigenvalue lambda_0(t_m, rho) at every time
    node, warm-starting each solve from the previous eigenfunction."""
    smp = A.sample(grid, tgrid)                      # (n, n, N, M+1)
    vals = np.empty(tgrid.M + 1)
    v0 = None
    for m in range(tgrid.M):
        B = np.moveaxis(smp[:, :, :, m], -1, 0)      # (N, n, n)
        res = elliptic_principal(B, rho, D, grid, tol=tol, v0=v0)
        vals[m] = res.lam
        v0 = res.eigenfunction
    vals[tgrid.M] = vals[0]                          # periodic closure
    return vals


def lambda_under(A: MatrixField, rho: float, D: DiffusionMatrix,
                 grid: SpatialGrid, tgrid: TimeGrid, tol: float = 1e-9) -> float:
    """Time average of the frozen-time eigenvalues (small-frequency limit)."""
    return float(integrate_time(lambda0_series(A, rho, D, grid, tgrid, tol=tol)))
