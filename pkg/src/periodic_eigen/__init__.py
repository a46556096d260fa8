"""Principal eigenvalues of time-periodic cooperative reaction-diffusion
systems, their asymptotic limit constants, the associated Hamilton-Jacobi
ergodic constants, and the classification of eigenvalue level sets in the
frequency-diffusion plane."""

__version__ = "0.1.0"
