#!/usr/bin/env python3
"""Characteristic-polynomial oracle for the largest eigenvalue of a fixed
symmetric matrix with nonnegative off-diagonal entries.

The polynomial p(x) = det(S - x I) is evaluated through an LU-based
determinant (numpy.linalg.det), never an eigensolver, and the largest
root is bracketed between the largest diagonal entry and the Gershgorin
bound, then bisected.  The printed value is frozen into
tests/test_coefficients.py.
"""

import numpy as np


def seeded_matrix():
    rng = np.random.default_rng(42)
    S = rng.uniform(0.0, 1.0, (4, 4))
    S = 0.5 * (S + S.T)
    S[np.diag_indices(4)] = rng.uniform(-1.0, 1.0, 4)
    return S


def largest_root(S, tol=1e-14):
    lo = float(np.max(np.diag(S)))          # Perron value >= max diagonal
    hi = float(np.max(np.sum(np.abs(S), axis=1)))   # Gershgorin
    sign_hi = np.sign(np.linalg.det(S - hi * np.eye(4)))
    if sign_hi == 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d = np.linalg.det(S - mid * np.eye(4))
        if np.sign(d) == sign_hi:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


if __name__ == "__main__":
    S = seeded_matrix()
    print("matrix:")
    for row in S:
        print("   ", " ".join(f"{v:+.15f}" for v in row))
    print(f"mu_max = {largest_root(S):.15f}")
