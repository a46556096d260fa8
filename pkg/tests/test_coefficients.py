import math

import numpy as np
import pytest

from periodic_eigen.coefficients import (DiffusionMatrix, FourierEntry,
                                         FourierTerm, MatrixField,
                                         TabulatedEntry, full_average,
                                         hamiltonian, limit_constants,
                                         perron_value, perron_values_batch,
                                         spatial_average, temporal_average,
                                         validate, validate_mutation)
from periodic_eigen.errors import ValidationError
from periodic_eigen.grids import SpatialGrid, TimeGrid

G = SpatialGrid(1.0, 101)
TG = TimeGrid(128)


def const_pair():
    return MatrixField(2, {(1, 2): FourierEntry([FourierTerm(1.0)])})


def test_eval_matrix_constant():
    A = const_pair()
    M = A.eval_matrix(G, 17, 0.73)
    assert M == pytest.approx(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_eval_matrix_cosine_zero():
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0, 0, "cos", 1)])})
    assert abs(A.eval_matrix(G, 3, 0.25)[0, 0]) <= 1e-15
    # t reduced mod 1
    assert A.eval_matrix(G, 3, 1.25)[0, 0] == pytest.approx(
        A.eval_matrix(G, 3, 0.25)[0, 0], abs=1e-15)


def test_tabulated_round_trip():
    vals = np.cos(np.pi * G.nodes)[:, None] * np.sin(2 * np.pi * TG.times)[None, :]
    vals[:, -1] = vals[:, 0]
    e = TabulatedEntry(vals)
    A = MatrixField(1, {(1, 1): e})
    smp = A.sample(G, TG)
    assert smp[0, 0] == pytest.approx(vals, abs=0.0)


def test_tabulated_rejects_open_period():
    vals = np.outer(G.nodes, np.linspace(0.0, 1.0, TG.M + 1))
    with pytest.raises(ValidationError):
        TabulatedEntry(vals)


def test_index_out_of_range():
    with pytest.raises(IndexError):
        const_pair().eval_matrix(G, 101, 0.0)


def test_perron_2x2_closed_form():
    mu, v = perron_value(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert mu == pytest.approx(1.0, abs=1e-12)
    assert v == pytest.approx(np.array([1.0, 1.0]) / math.sqrt(2), abs=1e-8)
    a, b, c = 0.3, 0.7, -0.2
    mu2, _ = perron_value(np.array([[a, b], [b, c]]))
    assert mu2 == pytest.approx((a + c) / 2 + math.hypot((a - c) / 2, b), abs=1e-12)


def test_perron_diagonal():
    mu, v = perron_value(np.diag([3.0, -1.0, 2.0]))
    assert mu == pytest.approx(3.0, abs=1e-12)
    assert v == pytest.approx(np.array([1.0, 0.0, 0.0]), abs=1e-10)


def test_perron_against_charpoly_bisection_oracle():
    # matrix and value generated by tools/oracles/perron_bisection_oracle.py
    # (bisection on the LU determinant of S - x I, no eigensolver)
    rng = np.random.default_rng(42)
    S = rng.uniform(0.0, 1.0, (4, 4))
    S = 0.5 * (S + S.T)
    S[np.diag_indices(4)] = rng.uniform(-1.0, 1.0, 4)
    mu, v = perron_value(S)
    assert mu == pytest.approx(1.959020021524015, abs=1e-10)
    assert np.linalg.norm(S @ v - mu * v) <= 1e-12
    assert v.min() >= 0.0


def test_perron_residual_and_diagonal_bound():
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        for _ in range(10):
            S = rng.uniform(0.0, 1.0, (n, n))
            S = 0.5 * (S + S.T)
            S[np.diag_indices(n)] = rng.uniform(-2.0, 2.0, n)
            mu, v = perron_value(S)
            assert np.linalg.norm(S @ v - mu * v) <= 1e-12
            assert mu >= S.diagonal().max() - 1e-12
            assert perron_values_batch(S[None])[0] == pytest.approx(mu, abs=1e-10)


def test_perron_rejects_bad_input():
    with pytest.raises(ValidationError):
        perron_value(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValidationError):
        perron_value(np.array([[0.0, -0.1], [-0.1, 0.0]]))


def test_hamiltonian_values():
    A = const_pair()
    D = DiffusionMatrix((1.0, 2.0))
    # H(0) = mu(A)
    assert hamiltonian(0.0, A, D, G, 5, 0.3) == pytest.approx(1.0, abs=1e-12)
    # n = 2 closed form at p = 1: mu of [[1,1],[1,2]]
    assert hamiltonian(1.0, A, D, G, 5, 0.3) == pytest.approx(
        1.5 + math.sqrt(1.25), abs=1e-12)
    A1 = MatrixField(1, {(1, 1): FourierEntry([])})
    D1 = DiffusionMatrix((1.0,))
    assert hamiltonian(0.7, A1, D1, G, 0, 0.0) == pytest.approx(0.49, abs=1e-14)


def test_hamiltonian_even_monotone_coercive():
    A = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(0.3, 1)]),
                        (1, 2): FourierEntry([FourierTerm(0.8),
                                              FourierTerm(0.2, 1, "cos", 1)])})
    D = DiffusionMatrix((0.5, 2.0))
    ps = np.linspace(0.0, 3.0, 13)
    prev = -np.inf
    mu0 = hamiltonian(0.0, A, D, G, 40, 0.2)
    for p in ps:
        h = hamiltonian(p, A, D, G, 40, 0.2)
        assert h == pytest.approx(hamiltonian(-p, A, D, G, 40, 0.2), abs=1e-12)
        assert h >= prev - 1e-12
        assert h >= mu0 + 0.5 * p * p - 1e-10
        assert h <= mu0 + 2.0 * p * p + 1e-10
        prev = h


def test_averages():
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0, 0, "sin", 1)])})
    assert np.abs(temporal_average(A, G, TG)).max() <= 1e-12
    B = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0),
                                              FourierTerm(0.5, 0, "cos", 1)])})
    assert temporal_average(B, G, TG)[:, 0, 0] == pytest.approx(np.ones(G.N), abs=1e-12)
    C = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0, 1)])})
    assert np.abs(spatial_average(C, G, TG)).max() <= 1e-12
    # cos^2 via the double-angle identity, spatially
    Csq = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(0.5),
                                                FourierTerm(0.5, 2)])})
    assert spatial_average(Csq, G, TG)[:, 0, 0] == pytest.approx(
        np.full(TG.M + 1, 0.5), abs=1e-6)


def test_averaging_commutes():
    A = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(0.4, 1, "sin", 2)]),
                        (2, 2): FourierEntry([FourierTerm(-0.2, 2, "cos", 1)]),
                        (1, 2): FourierEntry([FourierTerm(0.9),
                                              FourierTerm(0.1, 1, "cos", 1)])})
    from periodic_eigen.grids import integrate_space, integrate_time
    fa = full_average(A, G, TG)
    via_time = integrate_time(np.moveaxis(spatial_average(A, G, TG), 0, -1))
    via_space = integrate_space(
        np.moveaxis(temporal_average(A, G, TG), 0, -1), G) / G.L
    assert np.abs(fa - via_time).max() <= 1e-12
    assert np.abs(fa - via_space).max() <= 1e-12


def test_limit_constants_collapse_cases():
    A = const_pair()
    c = limit_constants(A, G, TG)
    for v in c.as_dict().values():
        assert v == pytest.approx(-1.0, abs=1e-12)
    Ax = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(0.3, 0, "cos", 1)]),
                         (1, 2): FourierEntry([FourierTerm(1.0)])})
    cx = limit_constants(Ax, G, TG)
    assert cx.c_under == pytest.approx(cx.c_star, abs=1e-12)
    assert cx.c_star_plus == pytest.approx(cx.c_bar, abs=1e-12)


def test_limit_constants_separable_cosine():
    # a = cos(2 pi t) cos(pi x): max over x is |cos(2 pi t)|, whose period
    # integral is 2/pi; every averaged variant vanishes
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0, 1, "cos", 1)])})
    c = limit_constants(A, SpatialGrid(1.0, 201), TimeGrid(512))
    assert c.c_under == pytest.approx(-2 / math.pi, abs=1e-4)
    assert c.c_star == pytest.approx(0.0, abs=1e-10)
    assert c.c_star_plus == pytest.approx(0.0, abs=1e-10)
    assert c.c_under_plus == pytest.approx(0.0, abs=1e-10)
    assert c.c_bar == pytest.approx(0.0, abs=1e-10)


def test_limit_constants_ordering_random_fields():
    rng = np.random.default_rng(11)
    for _ in range(6):
        entries = {}
        for i, j in ((1, 1), (2, 2), (1, 2)):
            terms = [FourierTerm(rng.uniform(-0.5, 0.5), int(rng.integers(0, 3)),
                                 "const")]
            terms.append(FourierTerm(rng.uniform(-0.4, 0.4),
                                     int(rng.integers(0, 3)),
                                     rng.choice(["cos", "sin"]),
                                     int(rng.integers(1, 3))))
            if i != j:
                terms.append(FourierTerm(1.5))   # keep it essentially positive
            entries[(i, j)] = FourierEntry(terms)
        A = MatrixField(2, entries)
        assert validate(A, G, TG).ok
        assert limit_constants(A, G, TG).ordered(tol=1e-6)


def test_validate_detects_violations():
    ok = validate(const_pair(), G, TG)
    assert ok.ok
    block = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(1.0)])})
    rep = validate(block, G, TG)
    assert not rep.ok
    assert rep.first()[0] == "not fully coupled"
    assert rep.first()[1]["split"] == ([1], [2])
    neg = MatrixField(2, {(1, 2): FourierEntry([FourierTerm(-0.1, 1)])})
    rep2 = validate(neg, G, TG)
    assert rep2.violations[0][0] == "not essentially positive"
    assert "x" in rep2.violations[0][1]


def test_validate_mutation_row_sums():
    M_ok = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(-1.0)]),
                           (2, 2): FourierEntry([FourierTerm(-1.0)]),
                           (1, 2): FourierEntry([FourierTerm(1.0)])})
    assert validate_mutation(M_ok, G, TG).ok
    M_bad = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(-0.5)]),
                            (2, 2): FourierEntry([FourierTerm(-1.0)]),
                            (1, 2): FourierEntry([FourierTerm(1.0)])})
    rep = validate_mutation(M_bad, G, TG)
    assert not rep.ok
    assert any(v[0] == "mutation row sum violated" for v in rep.violations)


def test_diffusion_positive():
    with pytest.raises(ValidationError):
        DiffusionMatrix((1.0, 0.0))
