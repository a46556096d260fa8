import numpy as np
import pytest

from periodic_eigen.config import (ProblemConfig, load_config, parse_config,
                                   serialize_config)
from periodic_eigen.errors import ConfigError

MINIMAL = """
[problem]
n = 1
d = 1.0

[grid]
L = 1.0

[entry.1.1]
fourier = 0.5
"""

FULL = """
[problem]
n = 2
d = 1.0, 2.0

[grid]
L = 1.0
N = 101
M = 64

[entry.1.1]
fourier = 0.35*cosx(1) + 0.8*cosx(1)*sint(1) + -0.4*cost(2)

[entry.1.2]
fourier = 0.4 + 0.2*cosx(1)*cost(1)

[solve]
tol = 1e-9
max_cycles = 500

[sweep]
omega = logspace(1e-2, 1e2, 5)
rho = 0.1, 1, 10
theta = 0.5, 2

[levelset]
levels = -0.8, -0.5
"""


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.N == 201 and cfg.M == 512        # defaults applied
    assert cfg.d == (1.0,)
    assert cfg.solve["tol"] == 1e-10


def test_full_parse():
    cfg = parse_config(FULL)
    assert cfg.n == 2 and cfg.N == 101 and cfg.M == 64
    assert len(cfg.entries) == 2
    terms = cfg.entries[(1, 1)].terms
    assert (terms[2].c, terms[2].tmode, terms[2].m) == (-0.4, "cos", 2)
    assert cfg.omegas == pytest.approx(tuple(np.geomspace(1e-2, 1e2, 5)))
    assert cfg.thetas == (0.5, 2.0)
    assert cfg.levels == (-0.8, -0.5)
    assert cfg.solve["max_cycles"] == 500


def test_symmetry_implied():
    text = FULL.replace("[entry.1.2]", "[entry.2.1]")
    cfg = parse_config(text)
    assert (1, 2) in cfg.entries                # stored upper triangular


def test_round_trip():
    cfg = parse_config(FULL)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert again.hash() == cfg.hash()


def test_all_errors_collected():
    bad = """
[problem]
n = 2
d = 1.0, 0.0

[grid]
N = 2

[entry.1.1]
fourier = 0.3*cosy(1)

[entry.9.9]
fourier = 1
"""
    with pytest.raises(ConfigError) as exc:
        parse_config(bad)
    msgs = [str(d) for d in exc.value.diagnostics]
    assert len(msgs) >= 4
    assert any("diffusion must be positive" in m for m in msgs)
    assert any("N must be >= 3" in m for m in msgs)
    assert any("cosy" in m for m in msgs)
    assert any("outside 1..2" in m for m in msgs)


def test_zero_diffusion_message():
    with pytest.raises(ConfigError) as exc:
        parse_config(MINIMAL.replace("d = 1.0", "d = 0.0"))
    assert any("positive" in str(d) for d in exc.value.diagnostics)


def test_missing_csv_reported():
    text = MINIMAL.replace("fourier = 0.5", "csv = does_not_exist.csv")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("not found" in str(d) for d in exc.value.diagnostics)


def test_csv_entry_loads(tmp_path):
    N, M = 11, 8
    x = np.linspace(0, 1, N)
    t = np.arange(M + 1) / M
    vals = np.cos(np.pi * x)[:, None] * np.cos(2 * np.pi * t)[None, :]
    rows = ["x," + ",".join(f"t{k}" for k in range(M + 1))]
    for j in range(N):
        rows.append(",".join(repr(float(v)) for v in [x[j], *vals[j]]))
    path = tmp_path / "a11.csv"
    path.write_text("\n".join(rows) + "\n")
    text = f"""
[problem]
n = 1
d = 1.0

[grid]
L = 1.0
N = {N}
M = {M}

[entry.1.1]
csv = a11.csv
"""
    cfg = parse_config(text, base_dir=str(tmp_path))
    A = cfg.field()
    grid, tgrid = cfg.grids()
    assert A.sample(grid, tgrid)[0, 0] == pytest.approx(vals, abs=1e-12)


def test_load_config(tmp_path):
    p = tmp_path / "prob.cfg"
    p.write_text(MINIMAL)
    cfg = load_config(str(p))
    assert isinstance(cfg, ProblemConfig)
    assert cfg.base_dir == str(tmp_path)


def test_mutation_requires_rates():
    text = MINIMAL.replace("[problem]", "[problem]\nkind = mutation")
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert any("rate" in str(d) for d in exc.value.diagnostics)
