#!/usr/bin/env python3
"""Self-contained high-resolution oracle for periodic-ODE principal
eigenvalues.  No package imports: plain RK4 on the fundamental system at
2^16 steps, Richardson-confirmed against 2^15, dominant eigenvalue read
off with numpy's dense eigensolver.

The printed values are frozen into tests/test_floquet_ode.py; rerun this
script to regenerate them.
"""

import numpy as np


def monodromy_rk4(A_of_t, omega, steps):
    Phi = np.eye(A_of_t(0.0).shape[0])
    log_scale = 0.0
    dt = 1.0 / steps
    for m in range(steps):
        t = m * dt
        k1 = A_of_t(t) @ Phi / omega
        k2 = A_of_t(t + dt / 2) @ (Phi + dt / 2 * k1) / omega
        k3 = A_of_t(t + dt / 2) @ (Phi + dt / 2 * k2) / omega
        k4 = A_of_t(t + dt) @ (Phi + dt * k3) / omega
        Phi = Phi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s = np.abs(Phi).max()
        Phi /= s
        log_scale += np.log(s)
    return Phi, log_scale


def principal_h(A_of_t, omega, steps):
    Phi, log_scale = monodromy_rk4(A_of_t, omega, steps)
    evals = np.linalg.eigvals(Phi)
    mu = evals[np.argmax(np.abs(evals))]
    assert abs(mu.imag) < 1e-12 * abs(mu)
    return -omega * (np.log(mu.real) + log_scale)


def commuting(t):
    b = 1.0 + 0.5 * np.sin(2 * np.pi * t)
    return np.array([[0.0, b], [b, 0.0]])


def noncommuting(t):
    b = 1.0 + 0.5 * np.sin(2 * np.pi * t)
    c = 0.2 * np.cos(2 * np.pi * t)
    return np.array([[c, b], [b, -c]])


if __name__ == "__main__":
    for name, A in (("commuting", commuting), ("noncommuting", noncommuting)):
        h16 = principal_h(A, 1.0, 2 ** 16)
        h15 = principal_h(A, 1.0, 2 ** 15)
        print(f"{name}: h(omega=1) = {h16:.15f}   "
              f"richardson delta = {abs(h16 - h15):.3e}")
