"""Ergodic (additive-eigenvalue) constants of the time-periodic
Hamilton-Jacobi problem

    theta U_t + H(grad U, x, t) = -C(theta),   Neumann, period 1,

where H(p, x, t) is the largest eigenvalue of diag(d_i p^2) + A(x, t).

C(theta) is extracted as theta times the long-run drift of the mean of W
under the monotone Lax-Friedrichs evolution W_t = -(1/theta) H(D0 W, x, t)
with global dissipation alpha >= max |dH/dp| and CFL dt <= 0.4 theta h /
alpha.  H is precomputed on a (p, x, t) lattice (257 p-points by default)
and interpolated bilinearly in (p, t), which keeps the per-step cost at a
handful of gathers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (DiffusionMatrix, LimitConstants, MatrixField,
                           limit_constants, perron_values_batch)
from .errors import RegimeError
from .grids import SpatialGrid, TimeGrid, integrate_time

N_P = 257
CFL = 0.4
DT_FLOOR = 1e-8
DRIFT_TOL = 1e-4
DRIFT_WINDOW = 5


class HamiltonianLattice:
    """H sampled on p-grid x nodes x time-nodes, with its Lipschitz bound."""

    def __init__(self, A: MatrixField, D: DiffusionMatrix, grid: SpatialGrid,
                 p_max: float, n_p: int = N_P, m_time: int = 128):
        self.p_max = float(p_max)
        self.n_p = n_p
        self.m_time = m_time
        self.ps = np.linspace(-p_max, p_max, n_p)
        self.dp = self.ps[1] - self.ps[0]
        lat_tgrid = TimeGrid(m_time)
        smp = np.moveaxis(A.sample(grid, lat_tgrid), (0, 1), (-2, -1))  # (N, mt+1, n, n)
        d = D.as_array()
        vals = np.empty((n_p, grid.N, m_time + 1))
        eye_d = np.eye(len(d)) * d
        for k, p in enumerate(self.ps):
            vals[k] = perron_values_batch(smp + (p * p) * eye_d)
        self.values = vals
        self.alpha = self.lipschitz(p_max)
        self.window_hint = p_max      # stabilized gradient window, cached
        self._cols = np.arange(grid.N)

    def lipschitz(self, window: float) -> float:
        """max |dH/dp| by finite differences over |p| <= window."""
        mids = 0.5 * (self.ps[1:] + self.ps[:-1])
        mask = np.abs(mids) <= window + 1e-12
        slopes = np.abs(np.diff(self.values, axis=0)) / self.dp
        return float(slopes[mask].max())

    def time_averaged(self) -> np.ndarray:
        """H-hat(p, x) = int_0^1 H(p, x, t) dt on the lattice, (n_p, N)."""
        return integrate_time(self.values)

    def interp(self, p: np.ndarray, t: float) -> np.ndarray:
        """Bilinear interpolation in (p, t) at every node, p clipped to the
        lattice window."""
        p = np.clip(p, -self.p_max, self.p_max)
        s = (p + self.p_max) / self.dp
        i = np.clip(s.astype(int), 0, self.n_p - 2)
        fr = s - i
        tt = (t % 1.0) * self.m_time
        k = min(int(tt), self.m_time - 1)
        ft = tt - k
        v = self.values
        c = self._cols
        low = v[i, c, k] * (1.0 - fr) + v[i + 1, c, k] * fr
        high = v[i, c, k + 1] * (1.0 - fr) + v[i + 1, c, k + 1] * fr
        return low * (1.0 - ft) + high * ft


def gradient_bound(constants: LimitConstants, D: DiffusionMatrix) -> float:
    """A priori Lipschitz window for the evolved profile, from coercivity:
    p_max = 1 + 2 sqrt((C_bar - C_under + 1)/min d)."""
    spread = max(constants.c_bar - constants.c_under, 0.0) + 1.0
    return 1.0 + 2.0 * math.sqrt(spread / min(D.rates))


@dataclass
class ErgodicResult:
    theta: float
    C: float
    profile: np.ndarray               # final U(x), mean-free
    drift_history: list
    flag: str                         # converged | oscillating | budget-exhausted | regime-formula
    alpha: float
    dt: float
    periods: int
    p_clipped: int
    period_profile: np.ndarray | None = None   # U(x, t_m) on the TimeGrid
    notes: list = field(default_factory=list)


def _lf_step(W: np.ndarray, lattice: HamiltonianLattice, alpha: float,
             t: float, dtau: float, theta: float, h: float):
    p = np.empty_like(W)
    p[1:-1] = (W[2:] - W[:-2]) / (2.0 * h)
    p[0] = 0.0
    p[-1] = 0.0
    H = lattice.interp(p, t)
    visc = np.empty_like(W)
    visc[1:-1] = W[2:] - 2.0 * W[1:-1] + W[:-2]
    visc[0] = 2.0 * (W[1] - W[0])
    visc[-1] = 2.0 * (W[-2] - W[-1])
    out = W - (dtau / theta) * H + (alpha * dtau / (2.0 * theta * h)) * visc
    return out, float(np.abs(p).max())


def ergodic_constant(theta: float, A: MatrixField, D: DiffusionMatrix,
                     grid: SpatialGrid, tgrid: TimeGrid,
                     periods_budget: int | None = None,
                     lattice: HamiltonianLattice | None = None,
                     constants: LimitConstants | None = None,
                     want_period_profile: bool = False,
                     alpha_override: float | None = None) -> ErgodicResult:
    """Evolve W_t = -(1/theta) H(D0 W, x, t) from W = 0 and read C(theta)
    off the asymptotic drift: with W ~ a t + U(x, t) periodic, the pair
    (C, U) = (theta a, W - a t) solves the cell problem, so C is theta
    times the least-squares slope of the per-period means over the second
    half of the run.

    Raises RegimeError when the CFL time step falls below 1e-8 (theta too
    small for direct evolution; the theta -> 0 limit is the constant
    C_under, served by `critical_value`).
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if constants is None:
        constants = limit_constants(A, grid, tgrid)
    if lattice is None:
        p_max = gradient_bound(constants, D)
        lattice = HamiltonianLattice(A, D, grid, p_max,
                                     m_time=min(tgrid.M, 128))
    h = grid.h
    t_min = max(6, int(math.ceil(6.0 * theta)))
    budget = periods_budget or min(max(60, int(math.ceil(30.0 * theta))), 4000)
    budget = max(budget, t_min + DRIFT_WINDOW + 2)

    # The a-priori gradient window is very loose; rerun with the Lipschitz
    # bound taken over the gradients the evolution actually visits (plus
    # margin) until the dissipation coefficient stabilizes.  Less numerical
    # viscosity, same monotone scheme.
    # a caller-fixed alpha makes the dissipation bias uniform across a
    # theta table (monotonicity comparisons); otherwise adapt as usual
    alpha = alpha_override or lattice.lipschitz(lattice.window_hint)
    notes = []
    for _ in range(1 if alpha_override else 4):
        dt_cfl = CFL * theta * h / alpha
        if dt_cfl < DT_FLOOR:
            raise RegimeError(
                f"CFL step {dt_cfl:.2e} below {DT_FLOOR:.0e} at theta={theta:.3g}; "
                "use the theta->0 formula C_under")
        spp = max(int(math.ceil(1.0 / dt_cfl)), 2)
        dtau = 1.0 / spp
        W, means, flag, periods, p_seen = _evolve(
            lattice, alpha, theta, grid, spp, dtau, t_min, budget, DRIFT_WINDOW)
        window = min(1.15 * p_seen + 0.02, lattice.p_max)
        alpha_needed = lattice.lipschitz(window)
        if alpha_needed > alpha * 1.0001:
            notes.append(f"dissipation raised to {alpha_needed:.3g}")
            alpha = alpha_needed
        elif alpha_needed < 0.8 * alpha:
            notes.append(f"dissipation lowered to {alpha_needed:.3g}")
            alpha = alpha_needed
        else:
            lattice.window_hint = max(window, 0.2)
            break

    drift_history = list(np.diff(means))
    # least-squares slope of mean(W) over the second half of the run
    half = max(len(means) // 2, 2)
    ks = np.arange(len(means) - half, len(means), dtype=float)
    ms = np.asarray(means[-half:])
    slope = float(np.polyfit(ks, ms, 1)[0])
    C = theta * slope
    if flag == "budget-exhausted":
        tail = np.asarray(drift_history[-DRIFT_WINDOW:])
        if (len(tail) == DRIFT_WINDOW
                and float(tail.max() - tail.min()) > DRIFT_TOL * (1.0 + abs(C))
                and abs(theta * float(tail.mean()) - C) <= 10 * DRIFT_TOL * (1.0 + abs(C))):
            flag = "oscillating"

    wmean = grid.weights / grid.L
    period_profile = None
    if want_period_profile:
        period_profile = _record_period(W, lattice, alpha, theta, grid, tgrid,
                                        dtau, spp, slope)
        W = period_profile[:, 0] + 0.0
    profile = W - float(W @ wmean)
    return ErgodicResult(theta=theta, C=float(C), profile=profile,
                         drift_history=drift_history, flag=flag,
                         alpha=alpha, dt=dtau, periods=periods,
                         p_clipped=0, period_profile=period_profile,
                         notes=notes)


def _evolve(lattice, alpha, theta, grid, spp, dtau, t_min, budget, window):
    W = np.zeros(grid.N)
    wmean = grid.weights / grid.L
    means = [0.0]
    flag = "budget-exhausted"
    p_seen = 0.0
    k = 0
    for k in range(1, budget + 1):
        for q in range(spp):
            W, pmax_step = _lf_step(W, lattice, alpha, q * dtau, dtau, theta, grid.h)
            if pmax_step > p_seen:
                p_seen = pmax_step
        means.append(float(W @ wmean))
        if k >= t_min + window:
            drifts = np.diff(means[-(window + 1):])
            c_est = theta * float(np.mean(drifts))
            spread = float(drifts.max() - drifts.min())
            if spread <= DRIFT_TOL * (1.0 + abs(c_est)):
                flag = "converged"
                break
    return W, means, flag, k, p_seen


def _record_period(W, lattice, alpha, theta, grid, tgrid, dtau, spp, slope):
    """One further period, sampled onto the TimeGrid with the linear drift
    removed, giving the periodic corrector profile U(x, t_m)."""
    targets = tgrid.times
    out = np.empty((grid.N, tgrid.M + 1))
    prev = W.copy()
    prev_t = 0.0
    ti = 0
    while ti < len(targets) and targets[ti] <= prev_t + 1e-15:
        out[:, ti] = prev - slope * targets[ti]
        ti += 1
    for q in range(spp):
        cur, _ = _lf_step(prev, lattice, alpha, q * dtau, dtau, theta, grid.h)
        cur_t = (q + 1) * dtau
        while ti < len(targets) and targets[ti] <= cur_t + 1e-15:
            wgt = (targets[ti] - prev_t) / dtau
            out[:, ti] = (1.0 - wgt) * prev + wgt * cur - slope * targets[ti]
            ti += 1
        prev, prev_t = cur, cur_t
    mean = out.mean()
    return out - mean


def critical_value(theta: float, A: MatrixField, D: DiffusionMatrix,
                   grid: SpatialGrid, tgrid: TimeGrid, **kwargs) -> ErgodicResult:
    """ergodic_constant, with the CFL-infeasible small-theta regime routed
    to the analytic limit C(0+) = C_under and marked as such."""
    constants = kwargs.pop("constants", None)
    if constants is None:
        constants = limit_constants(A, grid, tgrid)
    try:
        return ergodic_constant(theta, A, D, grid, tgrid,
                                constants=constants, **kwargs)
    except RegimeError:
        return ErgodicResult(
            theta=theta, C=constants.c_under, profile=np.zeros(grid.N),
            drift_history=[], flag="regime-formula", alpha=math.nan,
            dt=math.nan, periods=0, p_clipped=0,
            notes=["theta below CFL feasibility; C_under formula used"])


def stationary_critical_value(A: MatrixField, grid: SpatialGrid, t: float) -> float:
    """Critical value of the frozen-time problem H(grad U, x, t) = -c(t):
    c(t) = -max_x mu(A(x, t)), no PDE solve required."""
    nodes = A.eval_nodes(grid, float(t) % 1.0)
    return -float(perron_values_batch(nodes).max())


def averaged_critical_value(A: MatrixField, D: DiffusionMatrix,
                            grid: SpatialGrid, tgrid: TimeGrid,
                            verify: bool = False):
    """Critical value of the time-averaged Hamiltonian, which coincides
    with the constant C_star; optionally cross-checked by evolving the
    autonomous scheme with H-hat."""
    constants = limit_constants(A, grid, tgrid)
    c_star = constants.c_star
    if not verify:
        return c_star, None
    p_max = gradient_bound(constants, D)
    lattice = HamiltonianLattice(A, D, grid, p_max, m_time=min(tgrid.M, 128))
    hbar = lattice.time_averaged()
    frozen = HamiltonianLattice.__new__(HamiltonianLattice)
    frozen.p_max = lattice.p_max
    frozen.n_p = lattice.n_p
    frozen.m_time = 1
    frozen.ps = lattice.ps
    frozen.dp = lattice.dp
    frozen.values = np.repeat(hbar[:, :, None], 2, axis=2)
    frozen.alpha = float(np.abs(np.diff(hbar, axis=0)).max() / lattice.dp)
    frozen.window_hint = lattice.window_hint
    frozen._cols = lattice._cols
    res = ergodic_constant(1.0, A, D, grid, tgrid, lattice=frozen,
                           constants=constants)
    return c_star, res.C
