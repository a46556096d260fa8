"""Coupling-matrix fields A(x, t), their averages, and Perron values.

An entry a_ij is either a finite sum of separable modes
c * cos(k pi x / L) * {1, cos(2 pi m t), sin(2 pi m t)} (Neumann-compatible
in x, 1-periodic in t by construction) or a tabulated (N x (M+1)) array on
the grids.  The field is stored upper-triangular and is symmetric, essentially
positive and fully coupled by contract; `validate` checks the last two on the
sample grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grids import SpatialGrid, TimeGrid, integrate_space, integrate_time

_TMODES = ("const", "cos", "sin")


@dataclass(frozen=True)
class FourierTerm:
    """One separable mode c * cos(k pi x / L) * tau(t)."""

    c: float
    k: int = 0
    tmode: str = "const"   # const | cos | sin
    m: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("x-mode k must be >= 0")
        if self.tmode not in _TMODES:
            raise ValueError(f"unknown time mode {self.tmode!r}")
        if self.tmode != "const" and self.m < 1:
            raise ValueError("time mode m must be >= 1")

    def time_factor(self, t):
        if self.tmode == "const":
            return np.ones_like(np.asarray(t, dtype=float))
        arg = 2.0 * math.pi * self.m * np.asarray(t, dtype=float)
        return np.cos(arg) if self.tmode == "cos" else np.sin(arg)


class FourierEntry:
    """Finite list of separable cosine-in-x / trig-in-t modes."""

    kind = "fourier"

    def __init__(self, terms):
        self.terms = tuple(terms)

    def space_profiles(self, grid: SpatialGrid) -> np.ndarray:
        """cos(k pi x / L) for each term, shape (nterms, N)."""
        x = grid.nodes
        return np.array([np.cos(t.k * math.pi * x / grid.L) for t in self.terms])

    def eval_nodes(self, grid: SpatialGrid, t) -> np.ndarray:
        """Values at every node for scalar time t, shape (N,)."""
        if not self.terms:
            return np.zeros(grid.N)
        profs = self.space_profiles(grid)
        coefs = np.array([trm.c * trm.time_factor(t) for trm in self.terms])
        return coefs @ profs

    def sample(self, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
        """Values on the full (N, M+1) sample grid."""
        if not self.terms:
            return np.zeros((grid.N, tgrid.M + 1))
        profs = self.space_profiles(grid)                       # (T, N)
        tf = np.array([trm.c * trm.time_factor(tgrid.times)
                       for trm in self.terms])                  # (T, M+1)
        return np.einsum("tn,tm->nm", profs, tf)

    def is_zero(self) -> bool:
        return all(trm.c == 0.0 for trm in self.terms) or not self.terms

    def __eq__(self, other):
        return isinstance(other, FourierEntry) and self.terms == other.terms

    def __repr__(self):
        return f"FourierEntry({list(self.terms)!r})"


class TabulatedEntry:
    """Values on the (N, M+1) grid; linear interpolation in t between samples."""

    kind = "tabulated"

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=float)
        if v.ndim != 2:
            raise ValidationError("tabulated entry must be a 2-D array")
        if not np.allclose(v[:, -1], v[:, 0], rtol=0.0, atol=1e-10 * (1 + np.abs(v).max())):
            raise ValidationError("tabulated entry must close up: column t_M != column t_0")
        self.values = v

    def eval_nodes(self, grid: SpatialGrid, t) -> np.ndarray:
        v = self.values
        M = v.shape[1] - 1
        if v.shape[0] != grid.N:
            raise ValidationError(
                f"tabulated entry has {v.shape[0]} rows, grid has {grid.N} nodes")
        s = (float(t) % 1.0) * M
        k = min(int(s), M - 1)
        frac = s - k
        return (1.0 - frac) * v[:, k] + frac * v[:, k + 1]

    def sample(self, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
        v = self.values
        if v.shape[0] != grid.N:
            raise ValidationError(
                f"tabulated entry has {v.shape[0]} rows, grid has {grid.N} nodes")
        if v.shape[1] == tgrid.M + 1:
            return v.copy()
        tt = tgrid.times
        M = v.shape[1] - 1
        s = np.minimum(tt * M, M - 1e-12)
        k = s.astype(int)
        frac = s - k
        return v[:, k] * (1.0 - frac) + v[:, k + 1] * frac

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def __eq__(self, other):
        return isinstance(other, TabulatedEntry) and np.array_equal(self.values, other.values)


def entry_sum(a, b):
    """Pointwise sum of two entries; Fourier+Fourier stays Fourier."""
    if isinstance(a, FourierEntry) and isinstance(b, FourierEntry):
        return FourierEntry(a.terms + b.terms)
    raise ValidationError("can only combine fourier entries symbolically; "
                          "tabulate the sum instead")


class MatrixField:
    """Symmetric n x n coefficient field; only i <= j entries are stored."""

    def __init__(self, n: int, entries: dict):
        if n < 1:
            raise ValidationError("component count must be >= 1")
        self.n = n
        self.entries = {}
        for (i, j), e in entries.items():
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValidationError(f"entry index ({i},{j}) outside 1..{n}")
            key = (i, j) if i <= j else (j, i)
            if key in self.entries and self.entries[key] != e:
                raise ValidationError(f"conflicting values for symmetric entry {key}")
            self.entries[key] = e
        self._samples = {}

    def entry(self, i: int, j: int):
        key = (i, j) if i <= j else (j, i)
        return self.entries.get(key)

    def sample(self, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
        """Full sample array, shape (n, n, N, M+1); cached per grid pair."""
        key = (grid, tgrid)
        if key not in self._samples:
            out = np.zeros((self.n, self.n, grid.N, tgrid.M + 1))
            for (i, j), e in self.entries.items():
                v = e.sample(grid, tgrid)
                out[i - 1, j - 1] = v
                if i != j:
                    out[j - 1, i - 1] = v
            self._samples[key] = out
        return self._samples[key]

    def eval_nodes(self, grid: SpatialGrid, t) -> np.ndarray:
        """Matrix at every node for scalar t, shape (N, n, n)."""
        out = np.zeros((grid.N, self.n, self.n))
        for (i, j), e in self.entries.items():
            v = e.eval_nodes(grid, t)
            out[:, i - 1, j - 1] = v
            if i != j:
                out[:, j - 1, i - 1] = v
        return out

    def eval_matrix(self, grid: SpatialGrid, j: int, t: float) -> np.ndarray:
        """Pointwise n x n matrix at node j and time t (t reduced mod 1)."""
        if not (0 <= j < grid.N):
            raise IndexError(f"node index {j} outside 0..{grid.N - 1}")
        return self.eval_nodes(grid, float(t) % 1.0)[j]


@dataclass(frozen=True)
class DiffusionMatrix:
    """Constant diagonal diffusion rates d_1..d_n, all positive."""

    rates: tuple

    def __post_init__(self):
        if not self.rates or any(d <= 0 for d in self.rates):
            raise ValidationError("diffusion rates must all be positive")

    @property
    def n(self) -> int:
        return len(self.rates)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)


# ---------------------------------------------------------------------------
# Perron values
# ---------------------------------------------------------------------------

def _check_essentially_positive(S: np.ndarray, tol: float = 1e-12):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError("matrix must be square")
    if np.max(np.abs(S - S.T)) > tol * (1.0 + np.abs(S).max()):
        raise ValidationError("matrix must be symmetric")
    off = S - np.diag(np.diag(S))
    if off.min() < -tol:
        raise ValidationError("off-diagonal entries must be nonnegative")
    return 0.5 * (S + S.T)


def perron_value(S: np.ndarray, tol: float = 1e-14, max_sweeps: int = 64):
    """Largest eigenvalue and nonnegative unit eigenvector of a symmetric
    essentially positive matrix, by cyclic Jacobi rotations.

    The matrix is shifted by c = max|S_ii| + 1 before rotating so the
    iterate stays entrywise nonnegative in exact arithmetic; the shift is
    removed from the returned eigenvalue.
    """
    S = _check_essentially_positive(S)
    n = S.shape[0]
    if n == 1:
        return float(S[0, 0]), np.ones(1)
    c = np.abs(np.diag(S)).max() + 1.0
    a = S + c * np.eye(n)
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off < tol * (1.0 + np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + math.hypot(theta, 1.0)) \
                    if theta != 0.0 else 1.0
                cs = 1.0 / math.hypot(t, 1.0)
                sn = t * cs
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = cs
                rot[p, q] = sn
                rot[q, p] = -sn
                a = rot.T @ a @ rot
                v = v @ rot
    idx = int(np.argmax(np.diag(a)))
    mu = float(a[idx, idx] - c)
    vec = v[:, idx]
    if vec.sum() < 0:
        vec = -vec
    # Perron vector of the shifted nonnegative matrix is nonnegative; clip
    # the rotation roundoff.
    vec = np.clip(vec, 0.0, None)
    nrm = np.linalg.norm(vec)
    if nrm == 0.0:
        raise ValidationError("Jacobi iteration produced a zero eigenvector")
    return mu, vec / nrm


def perron_values_batch(S: np.ndarray) -> np.ndarray:
    """Largest eigenvalue over the last two axes of a stack of symmetric
    essentially positive matrices.  Closed form for n <= 2, LAPACK above."""
    S = np.asarray(S, dtype=float)
    n = S.shape[-1]
    if n == 1:
        return S[..., 0, 0].copy()
    if n == 2:
        half_tr = 0.5 * (S[..., 0, 0] + S[..., 1, 1])
        half_gap = 0.5 * (S[..., 0, 0] - S[..., 1, 1])
        return half_tr + np.sqrt(half_gap ** 2 + S[..., 0, 1] ** 2)
    return np.linalg.eigvalsh(S)[..., -1]


def hamiltonian(p: float, A: MatrixField, D: DiffusionMatrix,
                grid: SpatialGrid, j: int, t: float) -> float:
    """H(p, x_j, t): largest eigenvalue of diag(d_i p^2) + A(x_j, t)."""
    S = np.diag(D.as_array() * p * p) + A.eval_matrix(grid, j, t)
    return perron_value(S)[0]


def hamiltonian_profile(p, A_nodes: np.ndarray, D: DiffusionMatrix) -> np.ndarray:
    """H(p, x, t) over stacked node matrices A_nodes (..., n, n) for scalar
    or array p broadcast against the leading axes."""
    d = D.as_array()
    p2 = np.asarray(p, dtype=float) ** 2
    S = A_nodes + p2[..., None, None] * np.eye(len(d)) * d
    return perron_values_batch(S)


# ---------------------------------------------------------------------------
# Averages and limit constants
# ---------------------------------------------------------------------------

def temporal_average(A: MatrixField, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
    """Entrywise time average over one period, shape (N, n, n)."""
    smp = A.sample(grid, tgrid)                       # (n, n, N, M+1)
    avg = integrate_time(smp)                         # (n, n, N)
    return np.moveaxis(avg, -1, 0)


def spatial_average(A: MatrixField, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
    """Entrywise spatial mean (1/L) * integral, shape (M+1, n, n)."""
    smp = A.sample(grid, tgrid)                       # (n, n, N, M+1)
    avg = integrate_space(np.moveaxis(smp, -1, 0), grid) / grid.L   # (M+1, n, n)
    return avg


def full_average(A: MatrixField, grid: SpatialGrid, tgrid: TimeGrid) -> np.ndarray:
    """Space-time mean of each entry, shape (n, n)."""
    return integrate_time(np.moveaxis(spatial_average(A, grid, tgrid), 0, -1))


@dataclass(frozen=True)
class LimitConstants:
    """The five limit values of the principal eigenvalue map, with the
    defining formula of each recorded for reporting."""

    c_under: float       # -int_0^1 max_x mu(A(x,t)) dt
    c_star: float        # -max_x int_0^1 mu(A(x,t)) dt
    c_star_plus: float   # -max_x mu(Ahat(x))
    c_under_plus: float  # -int_0^1 mu(Abar(t)) dt
    c_bar: float         # -mu(full average)
    formulas: dict = field(default_factory=dict, compare=False)

    def as_dict(self):
        return {"C_under": self.c_under, "C_star": self.c_star,
                "C_star_plus": self.c_star_plus,
                "C_under_plus": self.c_under_plus, "C_bar": self.c_bar}

    def ordered(self, tol: float = 1e-6) -> bool:
        lo = min(self.c_under_plus, self.c_star_plus)
        hi = max(self.c_under_plus, self.c_star_plus)
        return (self.c_under <= self.c_star + tol
                and self.c_star <= lo + tol
                and hi <= self.c_bar + tol)


def limit_constants(A: MatrixField, grid: SpatialGrid, tgrid: TimeGrid) -> LimitConstants:
    """Evaluate all five constants on the sample grid (max over nodes,
    trapezoid in time and space)."""
    smp = np.moveaxis(A.sample(grid, tgrid), (0, 1), (-2, -1))   # (N, M+1, n, n)
    mu_xt = perron_values_batch(smp)                             # (N, M+1)
    c_under = -integrate_time(mu_xt.max(axis=0))
    c_star = -np.max(integrate_time(mu_xt))
    c_star_plus = -np.max(perron_values_batch(temporal_average(A, grid, tgrid)))
    mu_bar_t = perron_values_batch(spatial_average(A, grid, tgrid))  # (M+1,)
    c_under_plus = -integrate_time(mu_bar_t)
    c_bar = -perron_values_batch(full_average(A, grid, tgrid)[None])[0]
    return LimitConstants(
        float(c_under), float(c_star), float(c_star_plus),
        float(c_under_plus), float(c_bar),
        formulas={
            "C_under": "-int_0^1 max_x mu(A(x,t)) dt",
            "C_star": "-max_x int_0^1 mu(A(x,t)) dt",
            "C_star_plus": "-max_x mu(time-averaged A)",
            "C_under_plus": "-int_0^1 mu(space-averaged A) dt",
            "C_bar": "-mu(space-time-averaged A)",
        })


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def first(self):
        return self.violations[0] if self.violations else None


def validate(A: MatrixField, grid: SpatialGrid, tgrid: TimeGrid) -> ValidationReport:
    """Check essential positivity on every sample and full coupling of the
    support graph; symmetry holds structurally.  Reports the first witness
    of each violated property."""
    violations = []
    smp = A.sample(grid, tgrid)
    for (i, j), _ in sorted(A.entries.items()):
        if i == j:
            continue
        v = smp[i - 1, j - 1]
        if v.min() < -1e-12:
            jj, mm = np.unravel_index(np.argmin(v), v.shape)
            violations.append(
                ("not essentially positive",
                 {"i": i, "j": j, "x": grid.nodes[jj], "t": tgrid.times[mm],
                  "value": float(v[jj, mm])}))
            break
    # support graph connectivity over nonzero entries (diagonal irrelevant)
    adj = [[False] * A.n for _ in range(A.n)]
    for (i, j), e in A.entries.items():
        if i != j and not e.is_zero():
            adj[i - 1][j - 1] = adj[j - 1][i - 1] = True
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for w in range(A.n):
            if adj[u][w] and w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != A.n:
        inside = sorted(k + 1 for k in seen)
        outside = sorted(k + 1 for k in range(A.n) if k not in seen)
        violations.append(("not fully coupled", {"split": (inside, outside)}))
    return ValidationReport(ok=not violations, violations=violations)


def validate_mutation(M_field: MatrixField, grid: SpatialGrid, tgrid: TimeGrid,
                      tol: float = 1e-9) -> ValidationReport:
    """Mutation structure: m_ii = -sum_{j != i} m_ij at every sample."""
    report = validate(M_field, grid, tgrid)
    smp = M_field.sample(grid, tgrid)
    n = M_field.n
    for i in range(n):
        row_off = sum(smp[i, j] for j in range(n) if j != i)
        defect = smp[i, i] + row_off
        worst = np.max(np.abs(defect))
        if worst > tol:
            jj, mm = np.unravel_index(np.argmax(np.abs(defect)), defect.shape)
            report.violations.append(
                ("mutation row sum violated",
                 {"i": i + 1, "x": grid.nodes[jj], "t": tgrid.times[mm],
                  "defect": float(defect[jj, mm])}))
            report.ok = False
            break
    return report
