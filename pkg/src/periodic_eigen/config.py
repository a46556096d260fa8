"""Plain sectioned key-value problem configuration.

Sections and keys::

    [problem]            n, d (comma list), kind = standard | mutation
    [grid]               L, N, M
    [entry.i.j]          fourier = <terms>  |  csv = <path>
    [rate.i]             birth-death rate c_i (mutation problems only)
    [solve]              tol, max_cycles, ode_steps, coupling_tol
    [sweep]              omega, rho, theta: comma lists or logspace(lo, hi, n)
    [levelset]           levels = comma list

Fourier term grammar: terms joined by + or -, each a '*'-product of an
optional real coefficient, an optional cosx(k) = cos(k pi x / L), and an
optional cost(m) = cos(2 pi m t) or sint(m) = sin(2 pi m t).  CSV entries
carry a header row ``x,t0,t1,...`` and one row per node.

Parsing reports every diagnostic (with line numbers), not just the first.
parse_config(serialize_config(cfg)) reproduces cfg exactly.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (DiffusionMatrix, FourierEntry, FourierTerm,
                           MatrixField, TabulatedEntry)
from .errors import ConfigError
from .grids import SpatialGrid, TimeGrid

DEFAULT_N = 201
DEFAULT_M = 512
DEFAULT_SOLVE = {"tol": 1e-10, "max_cycles": 10000,
                 "ode_steps": 4096, "coupling_tol": 4e-7}


@dataclass(frozen=True)
class EntrySpec:
    kind: str                   # fourier | csv
    terms: tuple = ()           # FourierTerm tuple for kind == fourier
    path: str = ""              # for kind == csv


@dataclass
class ProblemConfig:
    n: int
    d: tuple
    L: float = 1.0
    N: int = DEFAULT_N
    M: int = DEFAULT_M
    kind: str = "standard"
    entries: dict = field(default_factory=dict)     # (i, j) -> EntrySpec
    rates: dict = field(default_factory=dict)       # i -> EntrySpec
    solve: dict = field(default_factory=lambda: dict(DEFAULT_SOLVE))
    omegas: tuple = ()
    rhos: tuple = ()
    thetas: tuple = ()
    levels: tuple = ()
    base_dir: str = "."

    # -- runtime objects -------------------------------------------------
    def grids(self):
        return SpatialGrid(self.L, self.N), TimeGrid(self.M)

    def diffusion(self) -> DiffusionMatrix:
        return DiffusionMatrix(self.d)

    def _build_entry(self, spec: EntrySpec, grid, tgrid):
        if spec.kind == "fourier":
            return FourierEntry(spec.terms)
        data = np.genfromtxt(os.path.join(self.base_dir, spec.path),
                             delimiter=",", skip_header=1)
        x = data[:, 0]
        if len(x) != grid.N or np.max(np.abs(x - grid.nodes)) > 1e-10 * grid.L:
            raise ConfigError(
                [f"csv entry {spec.path}: x column does not match the grid"])
        return TabulatedEntry(data[:, 1:])

    def field(self) -> MatrixField:
        grid, tgrid = self.grids()
        return MatrixField(self.n, {
            ij: self._build_entry(s, grid, tgrid)
            for ij, s in self.entries.items()})

    def rate_entries(self):
        grid, tgrid = self.grids()
        return [self._build_entry(self.rates[i], grid, tgrid)
                for i in range(1, self.n + 1)]

    def hash(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# low-level text parsing
# ---------------------------------------------------------------------------

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def _split_terms(expr: str):
    """Split on top-level +/- (keeping signs), respecting parentheses and
    treating runs of signs ("a + -b") as part of the next term."""
    terms, depth, cur = [], 0, ""
    for ch in expr:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        stripped = cur.strip()
        has_body = any(c not in "+- " for c in cur)
        if (ch in "+-" and depth == 0 and stripped and has_body
                and stripped[-1] not in "eE*("):
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    if cur.strip():
        terms.append(cur)
    return terms


def _parse_fourier(expr: str, lineno: int, errors: list):
    terms = []
    for raw in _split_terms(expr):
        t = raw.strip()
        sign = 1.0
        while t and t[0] in "+-":
            if t[0] == "-":
                sign = -sign
            t = t[1:].strip()
        coeff, k, tmode, m = sign, 0, "const", 1
        got_coeff = got_x = got_t = False
        ok = True
        for factor in (f.strip() for f in t.split("*")):
            if not factor:
                errors.append(f"line {lineno}: empty factor in term {raw!r}")
                ok = False
                continue
            if re.fullmatch(_NUM, factor):
                if got_coeff:
                    errors.append(f"line {lineno}: two coefficients in {raw!r}")
                    ok = False
                coeff *= float(factor)
                got_coeff = True
                continue
            mx = re.fullmatch(r"cosx\(\s*(\d+)\s*\)", factor)
            if mx:
                if got_x:
                    errors.append(f"line {lineno}: two x-factors in {raw!r}")
                    ok = False
                k = int(mx.group(1))
                got_x = True
                continue
            mt = re.fullmatch(r"(cost|sint)\(\s*(\d+)\s*\)", factor)
            if mt:
                if got_t:
                    errors.append(f"line {lineno}: two t-factors in {raw!r}")
                    ok = False
                tmode = "cos" if mt.group(1) == "cost" else "sin"
                m = int(mt.group(2))
                if m < 1:
                    errors.append(f"line {lineno}: time mode m must be >= 1")
                    ok = False
                got_t = True
                continue
            errors.append(f"line {lineno}: cannot parse factor {factor!r}")
            ok = False
        if ok and coeff != 0.0:
            terms.append(FourierTerm(coeff, k, tmode, m))
    return tuple(terms)


def _parse_values(text: str, lineno: int, errors: list):
    text = text.strip()
    mo = re.fullmatch(r"logspace\(\s*(%s)\s*,\s*(%s)\s*,\s*(\d+)\s*\)"
                      % (_NUM, _NUM), text)
    if mo:
        lo, hi, n = float(mo.group(1)), float(mo.group(2)), int(mo.group(3))
        if lo <= 0 or hi <= 0 or n < 2:
            errors.append(f"line {lineno}: logspace needs positive bounds, n >= 2")
            return ()
        return tuple(np.geomspace(lo, hi, n).tolist())
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            out.append(float(piece))
        except ValueError:
            errors.append(f"line {lineno}: not a number: {piece!r}")
    return tuple(out)


def parse_config(text: str, base_dir: str = ".") -> ProblemConfig:
    """Parse and validate; raises ConfigError carrying every diagnostic."""
    errors = []
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: malformed section header {raw!r}")
                current = None
                continue
            current = line[1:-1].strip()
            sections.setdefault(current, [])
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected key = value, got {raw!r}")
            continue
        if current is None:
            errors.append(f"line {lineno}: key outside any section")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        sections[current].append((lineno, key, val))

    def section(name):
        return dict(((k, (ln, v)) for ln, k, v in sections.get(name, [])))

    prob = section("problem")
    if "n" not in prob:
        errors.append("[problem] must set n")
        n = 1
    else:
        try:
            n = int(prob["n"][1])
            if n < 1:
                raise ValueError
        except ValueError:
            errors.append(f"line {prob['n'][0]}: n must be a positive integer")
            n = 1
    if "d" not in prob:
        errors.append("[problem] must set d (one positive rate per component)")
        d = (1.0,) * n
    else:
        d = _parse_values(prob["d"][1], prob["d"][0], errors)
        if len(d) != n:
            errors.append(f"line {prob['d'][0]}: need exactly {n} diffusion rates")
            d = (d + (1.0,) * n)[:n]
        if any(x <= 0 for x in d):
            errors.append(f"line {prob['d'][0]}: diffusion must be positive")
            d = tuple(abs(x) or 1.0 for x in d)
    kind = prob.get("kind", (0, "standard"))[1]
    if kind not in ("standard", "mutation"):
        errors.append(f"line {prob['kind'][0]}: kind must be standard or mutation")
        kind = "standard"

    gsec = section("grid")
    def _scalar(sec, key, default, conv, cond, msg):
        if key not in sec:
            return default
        ln, v = sec[key]
        try:
            x = conv(v)
            if not cond(x):
                raise ValueError
            return x
        except ValueError:
            errors.append(f"line {ln}: {msg}")
            return default
    L = _scalar(gsec, "L", 1.0, float, lambda x: x > 0, "L must be positive")
    N = _scalar(gsec, "N", DEFAULT_N, int, lambda x: x >= 3, "N must be >= 3")
    M = _scalar(gsec, "M", DEFAULT_M, int, lambda x: x >= 2, "M must be >= 2")

    entries = {}
    rates = {}
    for name, items in sections.items():
        me = re.fullmatch(r"entry\.(\d+)\.(\d+)", name)
        mr = re.fullmatch(r"rate\.(\d+)", name)
        if not (me or mr):
            continue
        body = dict(((k, (ln, v)) for ln, k, v in items))
        first_ln = items[0][0] if items else 0
        if "fourier" in body and "csv" in body:
            errors.append(f"section [{name}]: give fourier or csv, not both")
            continue
        if "fourier" in body:
            ln, expr = body["fourier"]
            spec = EntrySpec("fourier", terms=_parse_fourier(expr, ln, errors))
        elif "csv" in body:
            ln, path = body["csv"]
            if not os.path.exists(os.path.join(base_dir, path)):
                errors.append(f"line {ln}: csv file not found: {path}")
            spec = EntrySpec("csv", path=path)
        else:
            errors.append(f"section [{name}] (line {first_ln}): needs fourier = or csv =")
            continue
        if me:
            i, j = int(me.group(1)), int(me.group(2))
            if not (1 <= i <= n and 1 <= j <= n):
                errors.append(f"section [{name}]: indices outside 1..{n}")
                continue
            key = (i, j) if i <= j else (j, i)
            if key in entries and entries[key] != spec:
                errors.append(f"section [{name}]: conflicts with symmetric entry")
                continue
            entries[key] = spec
        else:
            i = int(mr.group(1))
            if not (1 <= i <= n):
                errors.append(f"section [{name}]: index outside 1..{n}")
                continue
            rates[i] = spec

    if kind == "mutation" and len(rates) != n:
        errors.append(f"mutation problems need [rate.1] .. [rate.{n}]")
    if not entries:
        errors.append("no [entry.i.j] sections found")

    solve = dict(DEFAULT_SOLVE)
    for ln, k, v in sections.get("solve", []):
        if k not in solve:
            errors.append(f"line {ln}: unknown solve key {k!r}")
            continue
        try:
            solve[k] = int(v) if k in ("max_cycles", "ode_steps") else float(v)
        except ValueError:
            errors.append(f"line {ln}: bad value for {k}: {v!r}")

    sweep = section("sweep")
    omegas = _parse_values(*reversed(sweep["omega"]), errors) if "omega" in sweep else ()
    rhos = _parse_values(*reversed(sweep["rho"]), errors) if "rho" in sweep else ()
    thetas = _parse_values(*reversed(sweep["theta"]), errors) if "theta" in sweep else ()
    for name, vals in (("omega", omegas), ("rho", rhos), ("theta", thetas)):
        if any(v <= 0 for v in vals):
            errors.append(f"[sweep] {name} values must be positive")

    lsec = section("levelset")
    levels = _parse_values(*reversed(lsec["levels"]), errors) if "levels" in lsec else ()

    if errors:
        raise ConfigError(errors)
    return ProblemConfig(n=n, d=tuple(d), L=L, N=N, M=M, kind=kind,
                         entries=entries, rates=rates, solve=solve,
                         omegas=omegas, rhos=rhos, thetas=thetas,
                         levels=levels, base_dir=base_dir)


def _fmt(x: float) -> str:
    return repr(float(x))


def _terms_text(terms) -> str:
    if not terms:
        return "0"
    parts = []
    for t in terms:
        factors = [_fmt(t.c)]
        if t.k:
            factors.append(f"cosx({t.k})")
        if t.tmode == "cos":
            factors.append(f"cost({t.m})")
        elif t.tmode == "sin":
            factors.append(f"sint({t.m})")
        parts.append("*".join(factors))
    return " + ".join(parts)


def serialize_config(cfg: ProblemConfig) -> str:
    out = ["[problem]", f"n = {cfg.n}",
           "d = " + ", ".join(_fmt(x) for x in cfg.d)]
    if cfg.kind != "standard":
        out.append(f"kind = {cfg.kind}")
    out += ["", "[grid]", f"L = {_fmt(cfg.L)}", f"N = {cfg.N}", f"M = {cfg.M}"]
    for (i, j), spec in sorted(cfg.entries.items()):
        out += ["", f"[entry.{i}.{j}]"]
        out.append(f"fourier = {_terms_text(spec.terms)}" if spec.kind == "fourier"
                   else f"csv = {spec.path}")
    for i, spec in sorted(cfg.rates.items()):
        out += ["", f"[rate.{i}]"]
        out.append(f"fourier = {_terms_text(spec.terms)}" if spec.kind == "fourier"
                   else f"csv = {spec.path}")
    out += ["", "[solve]"]
    for k in ("tol", "max_cycles", "ode_steps", "coupling_tol"):
        v = cfg.solve[k]
        out.append(f"{k} = {v if isinstance(v, int) else _fmt(v)}")
    if cfg.omegas or cfg.rhos or cfg.thetas:
        out += ["", "[sweep]"]
        if cfg.omegas:
            out.append("omega = " + ", ".join(_fmt(x) for x in cfg.omegas))
        if cfg.rhos:
            out.append("rho = " + ", ".join(_fmt(x) for x in cfg.rhos))
        if cfg.thetas:
            out.append("theta = " + ", ".join(_fmt(x) for x in cfg.thetas))
    if cfg.levels:
        out += ["", "[levelset]", "levels = " + ", ".join(_fmt(x) for x in cfg.levels)]
    return "\n".join(out) + "\n"


def load_config(path: str) -> ProblemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))
