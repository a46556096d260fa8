"""Level-set machinery on small grids.  The full five-type classification
runs in the acceptance suite; here the solver pieces are exercised on
cheap fixtures."""

import numpy as np
import pytest

from periodic_eigen.coefficients import (DiffusionMatrix, FourierEntry,
                                         FourierTerm, MatrixField)
from periodic_eigen.errors import RangeError, ValidationError
from periodic_eigen.grids import SpatialGrid, TimeGrid
from periodic_eigen.levelsets import (LevelSetSolver, assemble_mutation_field,
                                      ns_condition_residual,
                                      persistence_region)

G = SpatialGrid(1.0, 61)
TG = TimeGrid(48)
D1 = DiffusionMatrix((1.0,))
D2 = DiffusionMatrix((1.0, 2.0))


def scalar_field():
    # compact scalar field with C_under < C_star < C_star_plus = C_bar
    return MatrixField(1, {(1, 1): FourierEntry(
        [FourierTerm(0.5, 1), FourierTerm(0.6, 1, "sin", 1),
         FourierTerm(0.3, 0, "cos", 1)])})


@pytest.fixture(scope="module")
def solver():
    return LevelSetSolver(scalar_field(), D1, G, TG, coupling_tol=2e-3)


def test_envelopes_and_roots(solver):
    c = solver.constants
    assert c.ordered(tol=1e-6)
    assert c.c_under < c.c_star < c.c_under_plus
    ell = 0.5 * (c.c_under + c.c_under_plus)
    rho, reason = solver.rho_ell(ell)
    assert reason is None
    assert abs(solver.lambda_under(rho) - ell) <= 1e-6
    # outside the admissible interval: absent with a reason
    out, reason = solver.rho_ell(c.c_under_plus + 0.1)
    assert out is None and "outside" in reason


def test_rho_ell_increasing(solver):
    c = solver.constants
    ells = np.linspace(c.c_under + 0.1 * (c.c_under_plus - c.c_under),
                       c.c_under + 0.9 * (c.c_under_plus - c.c_under), 5)
    roots = [solver.rho_ell(float(e))[0] for e in ells]
    assert np.all(np.diff(roots) > 0)


def pair_field():
    # two components with split C_star < C_star_plus: crossings at the
    # 1ii-level sit at omega = O(0.1), well above the solver floor
    return MatrixField(2, {
        (1, 1): FourierEntry([FourierTerm(0.35, 1), FourierTerm(0.8, 1, "sin", 1),
                              FourierTerm(0.4, 0, "cos", 1)]),
        (2, 2): FourierEntry([FourierTerm(-0.4, 0, "cos", 1)]),
        (1, 2): FourierEntry([FourierTerm(0.4), FourierTerm(0.2, 1, "cos", 1)]),
    })


def test_omega_ell_sides():
    s = LevelSetSolver(pair_field(), D2, G, TG, coupling_tol=2e-3)
    c = s.constants
    ell = 0.5 * (c.c_star + c.c_star_plus)
    rho_l, _ = s.rho_ell(ell)
    # above rho_ell: lambda_under exceeds ell, absent with side "below"
    w, info = s.omega_ell(ell, rho_l * 1.3)
    assert w is None and info.get("side") == "below"
    w, info = s.omega_ell(ell, rho_l * 0.6)
    assert w is not None
    assert abs(s.lam(w, rho_l * 0.6) - ell) <= 1e-6 * (1 + abs(ell))


def test_omega_ell_flat_pencil():
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(0.5, 1)])})
    s = LevelSetSolver(A, D1, G, TG)
    w, info = s.omega_ell(-0.3, 0.5)
    assert w is None and info.get("degenerate")


def test_trace_refuses_boundary_levels(solver):
    c = solver.constants
    with pytest.raises(RangeError):
        solver.trace_level_set(c.c_star)
    with pytest.raises(RangeError):
        solver.trace_level_set(c.c_under - 0.5)


def test_vertical_line_for_t_independent():
    A = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(0.4, 1)]),
                        (1, 2): FourierEntry([FourierTerm(0.8),
                                              FourierTerm(0.3, 1)])})
    s = LevelSetSolver(A, D2, G, TG)
    c = s.constants
    ell = 0.5 * (c.c_under + c.c_bar)
    curve = s.trace_level_set(ell)
    assert curve.type_tag == "vertical-line"
    assert curve.rho_ell == pytest.approx(curve.rho_under_ell,
                                          rel=2e-5)
    assert curve.ns_residual <= 1e-6


def test_ns_condition_residual_generic_positive():
    # a genuinely inseparable field cannot satisfy the flatness identity
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(0.5, 1),
                                              FourierTerm(0.6, 1, "sin", 1)])})
    assert ns_condition_residual(A, D1, G, TG, 0.5) > 1e-2


def test_nonmonotonicity_probe_endpoint_mode():
    # C_star = C_bar: global minimum at both rho ends (the endpoints case)
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(1.0, 1, "sin", 1)])})
    s = LevelSetSolver(A, D1, G, TG)
    c = s.constants
    assert abs(c.c_star - c.c_bar) <= 1e-9
    probe = s.nonmonotonicity_probe(omega=0.5)
    assert probe.mode == "endpoints"
    # the interior dips measurably below the common limit C_bar while both
    # scan ends sit near it (the ends carry the global maximum)
    assert probe.details["interior_drop"] >= 1e-3
    assert probe.details["edge_gap"] <= probe.details["interior_drop"] / 3


def test_nonmonotonicity_probe_inapplicable():
    A = MatrixField(1, {(1, 1): FourierEntry([FourierTerm(0.4, 1)])})
    s = LevelSetSolver(A, D1, G, TG)
    assert s.nonmonotonicity_probe().mode == "inapplicable"


def test_mutation_assembly_and_verdicts():
    m = {(1, 1): FourierEntry([FourierTerm(-1.0)]),
         (2, 2): FourierEntry([FourierTerm(-1.0)]),
         (1, 2): FourierEntry([FourierTerm(1.0)])}
    M_field = MatrixField(2, m)
    dead = [FourierEntry([FourierTerm(-1.0)])] * 2
    rep = persistence_region(M_field, dead, D2, G, TG)
    assert rep.verdict == "empty"
    for v in rep.constants.as_dict().values():
        assert v == pytest.approx(1.0, abs=1e-9)
    alive = [FourierEntry([FourierTerm(1.0)])] * 2
    rep2 = persistence_region(MatrixField(2, m), alive, D2, G, TG)
    assert rep2.verdict == "full"


def test_mutation_structure_rejected():
    bad = MatrixField(2, {(1, 1): FourierEntry([FourierTerm(-0.5)]),
                          (2, 2): FourierEntry([FourierTerm(-1.0)]),
                          (1, 2): FourierEntry([FourierTerm(1.0)])})
    with pytest.raises(ValidationError):
        assemble_mutation_field(bad, [FourierEntry([FourierTerm(0.0)])] * 2,
                                G, TG)


def test_rho_under_ell_mirror():
    s = LevelSetSolver(pair_field(), D2, G, TG, coupling_tol=2e-3)
    c = s.constants
    ell = 0.5 * (c.c_star_plus + c.c_under_plus)
    r_under, reason = s.rho_under_ell(ell)
    assert reason is None
    assert abs(s.lambda_bar(r_under) - ell) <= 1e-6
    r_ell, _ = s.rho_ell(ell)
    assert r_under <= r_ell                   # the envelope ordering
    out, reason = s.rho_under_ell(c.c_bar + 0.1)
    assert out is None and "outside" in reason


def test_classification_exhaustive_and_nested():
    s = LevelSetSolver(pair_field(), D2, G, TG, coupling_tol=2e-3)
    c = s.constants
    vals = sorted(c.as_dict().values())
    tags = set()
    for f in np.linspace(0.001, 0.999, 97):
        ell = c.c_under + f * (c.c_bar - c.c_under)
        if min(abs(ell - v) for v in vals) <= 1e-3:
            continue
        tag = s.classify(ell)
        assert tag in ("type1i", "type1ii", "type2", "type3", "type4")
        tags.add(tag)
    assert "type1i" in tags and "type4" in tags
    # nesting: larger levels cross at larger omega
    ell1 = c.c_under + 0.70 * (c.c_star - c.c_under)
    ell2 = c.c_under + 0.85 * (c.c_star - c.c_under)
    rho = 0.5 * (s.rho_ell(ell1)[0] + 0.0)
    w1, _ = s.omega_ell(ell1, rho)
    w2, _ = s.omega_ell(ell2, rho)
    if w1 is not None and w2 is not None:
        assert w1 < w2
