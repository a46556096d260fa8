"""Level sets of the principal eigenvalue in the (rho, omega) plane.

For levels ell strictly between the global bounds C_under and C_bar the set
{lambda(omega, rho) = ell} is the graph of a function omega_ell(rho) (or a
vertical line in the degenerate case); its domain endpoints are the roots
rho_ell of lambda_under and rho_under_ell of lambda_bar, and the small/large
rho asymptotes are inverses of the periodic-ODE envelopes.  The classifier
places ell against the five limit constants, traces the curve, records the
endpoint/asymptote evidence, and exposes the persistence-region and
non-monotonicity consequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import elliptic, floquet_ode, parabolic
from .coefficients import (DiffusionMatrix, MatrixField, TabulatedEntry,
                           entry_sum, limit_constants, temporal_average,
                           validate_mutation)
from .errors import RangeError, ValidationError
from .grids import SpatialGrid, TimeGrid, integrate_time

VALUE_TOL = 1e-6          # |lambda - ell| at every reported point
BOUNDARY_TOL = 1e-3       # refuse ell this close to a separatrix constant
DEGENERATE_REL = 1e-5     # |rho_ell - rho_under_ell| <= this * rho_ell
FLAT_TOL = 1e-8           # lambda_bar - lambda_under below this: flat in omega
OMEGA_INF_THRESHOLD = 1e2
SIGN_TOL = 1e-9

_TYPE_ORDER = ("vertical-line", "type1i", "type1ii", "type2", "type3", "type4")


@dataclass
class CurveSample:
    rho: float
    omega: float
    lam_check: float      # re-evaluated lambda at (omega, rho)


@dataclass
class LevelCurve:
    ell: float
    type_tag: str
    samples: list
    domain: tuple                       # ((kind, value), (kind, value))
    rho_ell: float | None = None
    rho_under_ell: float | None = None
    rho_ell_residual: float | None = None
    rho_under_ell_residual: float | None = None
    asymptotes: dict = field(default_factory=dict)
    sqrt_fit: dict = field(default_factory=dict)
    ns_residual: float | None = None    # only for vertical-line curves


@dataclass
class RegionReport:
    verdict: str                        # empty | full | bounded-by-curve
    case_index: int | None
    constants: object
    curve: LevelCurve | None = None


@dataclass
class ProbeReport:
    mode: str                           # endpoints | dip | inapplicable
    omega: float | None = None
    omega_star: float | None = None
    rho_under: float | None = None
    rho_over: float | None = None
    dip_depth: float | None = None
    eta_hat: float | None = None
    details: dict = field(default_factory=dict)


class LevelSetSolver:
    """Shared evaluation cache for one problem (field, diffusion, grids)."""

    def __init__(self, A: MatrixField, D: DiffusionMatrix, grid: SpatialGrid,
                 tgrid: TimeGrid, lam_tol: float = 1e-9,
                 ode_steps: int = floquet_ode.DEFAULT_STEPS,
                 coupling_tol: float = 2e-3):
        # tracing needs self-consistent eigenvalues, not absolute accuracy:
        # a common discretization bias shifts the whole curve without
        # breaking any |lambda - ell| check, so the step-count budget is
        # far looser here than the solver default
        self.A, self.D, self.grid, self.tgrid = A, D, grid, tgrid
        self.lam_tol = lam_tol
        self.ode_steps = ode_steps
        self.coupling_tol = coupling_tol
        self.constants = limit_constants(A, grid, tgrid)
        # the explicit coupling limits how small omega the parabolic solver
        # can reach at the step-count cap; crossings below this are absent
        amax = parabolic._spectral_bound(A, grid, tgrid)
        m_top = tgrid.M
        while 2 * m_top <= parabolic.M_CAP:
            m_top *= 2
        self.omega_floor = 12.0 * amax / m_top
        self._lam = {}
        self._lunder = {}
        self._lbar = {}
        self._hunder = {}
        self._hbar = {}
        self._warm = None

    # -- cached evaluators -------------------------------------------------
    def lam(self, omega: float, rho: float) -> float:
        key = (omega, rho)
        if key not in self._lam:
            res = parabolic.principal_eigenvalue(
                self.A, self.D, self.grid, self.tgrid, omega, rho,
                tol=self.lam_tol, v0=self._warm,
                coupling_tol=self.coupling_tol)
            self._warm = res.eigenfunction[:, :, 0]
            self._lam[key] = res.lam
        return self._lam[key]

    def lambda_under(self, rho: float) -> float:
        if rho not in self._lunder:
            self._lunder[rho] = elliptic.lambda_under(
                self.A, rho, self.D, self.grid, self.tgrid)
        return self._lunder[rho]

    def lambda_bar(self, rho: float) -> float:
        if rho not in self._lbar:
            self._lbar[rho] = elliptic.lambda_bar(
                self.A, rho, self.D, self.grid, self.tgrid).lam
        return self._lbar[rho]

    def h_under(self, omega: float) -> float:
        if omega not in self._hunder:
            self._hunder[omega] = floquet_ode.h_under(
                self.A, omega, self.grid, steps=self.ode_steps)[0]
        return self._hunder[omega]

    def h_bar(self, omega: float) -> float:
        if omega not in self._hbar:
            self._hbar[omega] = floquet_ode.h_bar(
                self.A, omega, self.grid, self.tgrid, steps=self.ode_steps)
        return self._hbar[omega]

    # -- endpoint roots ----------------------------------------------------
    def rho_ell(self, ell: float):
        """Root of lambda_under(rho) = ell for ell in (C_under, C_under_plus);
        None with a reason outside that interval."""
        c = self.constants
        if c.c_under_plus - c.c_under <= FLAT_TOL:
            return None, "lambda_under is flat (C_under = C_under_plus)"
        if not (c.c_under < ell < c.c_under_plus):
            return None, f"ell outside ({c.c_under:.6g}, {c.c_under_plus:.6g})"
        return self._monotone_root(self.lambda_under, ell), None

    def rho_under_ell(self, ell: float):
        """Root of lambda_bar(rho) = ell for ell in (C_star_plus, C_bar)."""
        c = self.constants
        if c.c_bar - c.c_star_plus <= FLAT_TOL:
            return None, "lambda_bar is flat (C_star_plus = C_bar)"
        if not (c.c_star_plus < ell < c.c_bar):
            return None, f"ell outside ({c.c_star_plus:.6g}, {c.c_bar:.6g})"
        return self._monotone_root(self.lambda_bar, ell), None

    def _monotone_root(self, f, target, lo=1e-2, hi=1e2,
                       lo_cap=1e-7, hi_cap=1e7, tol=VALUE_TOL):
        flo, fhi = f(lo), f(hi)
        while flo > target and lo > lo_cap:
            lo *= 0.1
            flo = f(lo)
        while fhi < target and hi < hi_cap:
            hi *= 10.0
            fhi = f(hi)
        if not (flo <= target <= fhi):
            raise RangeError(
                f"no bracket for target {target:.6g} in rho [{lo:.1e}, {hi:.1e}]")
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            fm = f(mid)
            if abs(fm - target) <= tol:
                return mid
            if fm < target:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1.0 + 1e-14:
                return mid
        return mid

    # -- omega solving -----------------------------------------------------
    def omega_ell(self, ell: float, rho: float, bracket_hint=None,
                  checked: bool = True):
        """Unique omega with lambda(omega, rho) = ell, or an absence marker.

        Returns (omega or None, info): info['side'] indicates which bound
        failed ('below' if lambda_under(rho) >= ell, 'above' if
        lambda_bar(rho) <= ell), info['degenerate'] flags a flat pencil.
        ``checked=False`` skips the envelope precondition: inside a traced
        domain the crossing is already guaranteed by the monotonicity of
        lambda_under / lambda_bar and the endpoint roots.
        """
        if checked:
            lu = self.lambda_under(rho)
            lb = self.lambda_bar(rho)
            if lb - lu <= FLAT_TOL:
                return None, {"degenerate": True}
            if lu >= ell:
                return None, {"side": "below"}
            if lb <= ell:
                return None, {"side": "above"}
        tol = VALUE_TOL * (1.0 + abs(ell))
        lo_floor = max(self.omega_floor, 1e-5)
        lo, hi = bracket_hint or (3e-2, 3e1)
        lo = max(lo, lo_floor)
        flo = self.lam(lo, rho)
        while flo > ell and lo > lo_floor:
            lo = max(0.1 * lo, lo_floor)
            flo = self.lam(lo, rho)
        if flo > ell:
            return None, {"side": "omega-floor"}
        fhi = self.lam(hi, rho)
        while fhi < ell and hi < 1e5:
            hi *= 10.0
            fhi = self.lam(hi, rho)
        if abs(flo - ell) <= tol:
            return lo, {}
        if abs(fhi - ell) <= tol:
            return hi, {}
        if not (flo < ell < fhi):
            side = "below" if flo >= ell else "above"
            return None, {"side": side, "exhausted": True}
        # safeguarded secant on log(omega), falling back to bisection when
        # the proposal leaves the bracket or stalls
        ulo, uhi = math.log(lo), math.log(hi)
        glo, ghi = flo - ell, fhi - ell
        mid = math.sqrt(lo * hi)
        for _ in range(200):
            u_sec = ulo - glo * (uhi - ulo) / (ghi - glo)
            u_mid = 0.5 * (ulo + uhi)
            span = uhi - ulo
            if not (ulo + 0.05 * span <= u_sec <= uhi - 0.05 * span):
                u_sec = u_mid
            mid = math.exp(u_sec)
            gm = self.lam(mid, rho) - ell
            if abs(gm) <= tol:
                return mid, {}
            if gm < 0:
                ulo, glo = u_sec, gm
            else:
                uhi, ghi = u_sec, gm
            if uhi - ulo < 1e-14:
                return mid, {}
        return mid, {}

    # -- classification ----------------------------------------------------
    def classify(self, ell: float) -> str:
        """Type tag from the position of ell against the five constants."""
        c = self.constants
        lo_plus = min(c.c_star_plus, c.c_under_plus)
        if ell <= c.c_star:
            return "type1i"
        if ell < lo_plus:
            return "type1ii"
        if c.c_star_plus < c.c_under_plus and ell < c.c_under_plus:
            return "type2"
        if c.c_under_plus < c.c_star_plus and ell < c.c_star_plus:
            return "type3"
        return "type4"

    def trace_level_set(self, ell: float, n_samples: int = 9,
                        enforce_boundary_gap: bool = True) -> LevelCurve:
        """Trace omega_ell(rho), classify the curve, and record endpoint and
        asymptote evidence.  Levels within 1e-3 of any separatrix constant
        are refused (the type assignment is discontinuous there)."""
        c = self.constants
        if not (c.c_under < ell < c.c_bar):
            raise RangeError(
                f"ell={ell:.6g} outside (C_under, C_bar) = "
                f"({c.c_under:.6g}, {c.c_bar:.6g})")
        if enforce_boundary_gap:
            for name, value in c.as_dict().items():
                if abs(ell - value) <= BOUNDARY_TOL:
                    raise RangeError(
                        f"ell={ell:.6g} within {BOUNDARY_TOL} of {name}; "
                        "classification is discontinuous at the constants")
        rho_l, _ = self.rho_ell(ell)
        rho_ul, _ = self.rho_under_ell(ell)
        curve = LevelCurve(ell=ell, type_tag="", samples=[], domain=(None, None),
                           rho_ell=rho_l, rho_under_ell=rho_ul)
        if rho_l is not None:
            curve.rho_ell_residual = abs(self.lambda_under(rho_l) - ell)
        if rho_ul is not None:
            curve.rho_under_ell_residual = abs(self.lambda_bar(rho_ul) - ell)

        if (rho_l is not None and rho_ul is not None
                and abs(rho_l - rho_ul) <= DEGENERATE_REL * rho_l):
            curve.type_tag = "vertical-line"
            curve.domain = (("finite", rho_l), ("finite", rho_l))
            curve.ns_residual = ns_condition_residual(
                self.A, self.D, self.grid, self.tgrid, rho_l)
            return curve

        tag = self.classify(ell)
        curve.type_tag = tag
        if tag == "type1i":
            # omega ~ sqrt(rho) near zero: extend downward adaptively below
            lo_kind, hi_kind = ("zero", 0.0), ("finite", rho_l)
            lo_edge, hi_edge = rho_l * 3e-2, rho_l
        elif tag == "type1ii":
            lo_kind, hi_kind = ("zero", 0.0), ("finite", rho_l)
            lo_edge, hi_edge = max(rho_l * 1e-3, 1e-5), rho_l
        elif tag == "type2":
            lo_kind, hi_kind = ("finite", rho_ul), ("finite", rho_l)
            lo_edge, hi_edge = rho_ul, rho_l
        elif tag == "type3":
            lo_kind, hi_kind = ("zero", 0.0), ("infinite", math.inf)
            lo_edge, hi_edge = 2e-6, 1e3
        else:
            lo_kind, hi_kind = ("finite", rho_ul), ("infinite", math.inf)
            lo_edge, hi_edge = rho_ul, max(1e3, rho_ul * 1e3)
        curve.domain = (lo_kind, hi_kind)

        fracs = np.array([0.015, 0.05, 0.12, 0.25, 0.5, 0.75, 0.88, 0.95, 0.985])
        if n_samples != 9:
            fracs = np.interp(np.linspace(0, 1, n_samples),
                              np.linspace(0, 1, 9), fracs)
        la, lb_ = math.log(lo_edge), math.log(hi_edge)
        if tag in ("type2", "type4"):
            # keep away from the vertical asymptote at rho_under_ell
            la = math.log(rho_ul) + 0.02 * (lb_ - math.log(rho_ul))
        if tag in ("type1i", "type1ii", "type2"):
            lb_ = math.log(hi_edge) - 1e-3 * (math.log(hi_edge) - la)
        rhos = np.exp(la + fracs * (lb_ - la))

        hint = None
        prev = None
        for r in rhos:
            r = float(r)
            if prev is not None:
                # power-law continuation of the previous two samples
                if len(curve.samples) >= 2:
                    s1, s2 = curve.samples[-2], curve.samples[-1]
                    expo = math.log(s2.omega / s1.omega) / math.log(s2.rho / s1.rho)
                    w_pred = s2.omega * (r / s2.rho) ** expo
                else:
                    w_pred = prev
                hint = (w_pred / 2.5, w_pred * 2.5)
            w, info = self.omega_ell(ell, r, bracket_hint=hint, checked=False)
            if w is None:
                continue
            curve.samples.append(CurveSample(r, w, self.lam(w, r)))
            prev = w
        if not curve.samples:
            raise RangeError(f"no crossings found inside the domain for ell={ell:.6g}")
        if tag == "type1i":
            # walk toward rho = 0 while the crossing stays solver-feasible
            r = curve.samples[0].rho
            w = curve.samples[0].omega
            for _ in range(3):
                r *= 0.35
                if w < 1.6 * self.omega_floor:
                    break
                w_new, info = self.omega_ell(ell, r, bracket_hint=(w / 4.0, w * 1.5),
                                             checked=False)
                if w_new is None:
                    break
                curve.samples.insert(0, CurveSample(r, w_new, self.lam(w_new, r)))
                w = w_new

        self._record_asymptotes(curve)
        return curve

    def _certify_upper(self, ell: float, rho: float, w_bound: float,
                       tries: int = 4):
        """Smallest tried w with lambda(w, rho) > ell, certifying
        omega_ell(rho) < w by omega-monotonicity; None if all tries fail."""
        for _ in range(tries):
            if self.lam(w_bound, rho) > ell + VALUE_TOL:
                return w_bound
            w_bound *= 3.0
        return None

    def _certify_lower(self, ell: float, rho: float, w_bound: float,
                       tries: int = 4, w_cap: float = 700.0):
        """A certified lower bound on omega_ell(rho): the largest tried w
        with lambda(w, rho) < ell (monotonicity in omega does the rest);
        None when no tried w certifies."""
        w = w_bound
        for _ in range(tries):
            if self.lam(w, rho) < ell - VALUE_TOL:
                break
            w /= 3.0
        else:
            return None
        while w < w_cap:
            if self.lam(3.0 * w, rho) < ell - VALUE_TOL:
                w *= 3.0
            else:
                break
        return w

    def _record_asymptotes(self, curve: LevelCurve):
        tag = curve.type_tag
        ell = curve.ell
        samples = curve.samples
        omegas = np.array([s.omega for s in samples])
        rhos = np.array([s.rho for s in samples])
        asym = curve.asymptotes
        if tag in ("type1i", "type1ii", "type2"):
            # omega_ell -> 0 as rho -> rho_ell: certified upper bounds at a
            # walk of rho = rho_ell (1 - delta)
            walk = []
            w_try = max(0.25 * float(omegas.max()), 0.02)
            for delta in (0.08, 0.03, 0.01):
                r = curve.rho_ell * (1.0 - delta)
                ub = self._certify_upper(ell, r, w_try)
                if ub is not None:
                    walk.append((r, ub))
                    w_try = max(ub / 3.0, 1e-4)
            asym["omega_at_rho_ell"] = {
                "walk": walk,
                "to_zero": bool(len(walk) == 3 and walk[-1][1] <= 0.2
                                and _decreasing([w for _, w in walk]))}
        if tag == "type1i":
            k = min(3, len(samples))
            ratio = omegas[:k] / np.sqrt(rhos[:k])
            expo = np.polyfit(np.log(rhos[:k]), np.log(omegas[:k]), 1)[0]
            curve.sqrt_fit = {"c_lower": float(ratio.min()),
                              "c_upper": float(ratio.max()),
                              "exponent": float(expo)}
            asym["omega_at_zero"] = {
                "observed": float(omegas[0]),
                "to_zero": bool(curve.sqrt_fit["c_upper"] * math.sqrt(rhos[0])
                                < 0.2)}
        if tag in ("type1ii", "type3"):
            target = self._invert_h_under(ell)
            asym["omega_at_zero"] = {"target": target, "observed": float(omegas[0])}
        if tag in ("type3", "type4"):
            target = self._invert_h_bar(ell)
            asym["omega_at_infinity"] = {"target": target, "observed": float(omegas[-1])}
        if tag in ("type2", "type4"):
            # omega_ell -> infinity as rho -> rho_under_ell.  The elliptic
            # root rho_under_ell and the parabolic eigenvalues carry slightly
            # different discretization bias, so the blow-up is anchored at
            # r_star: the rho where the parabolic curve itself reaches
            # omega = 2 x threshold.  Walking outward from r_star gives
            # certified, monotonically exploding lower bounds.
            w_top = 2.0 * OMEGA_INF_THRESHOLD
            r_hi = float(curve.samples[0].rho)
            r_lo = curve.rho_under_ell * 0.98
            r_star = None
            if self.lam(w_top, r_lo) < ell - VALUE_TOL:
                for _ in range(60):
                    r_mid = math.sqrt(r_lo * r_hi)
                    if self.lam(w_top, r_mid) < ell - VALUE_TOL:
                        r_lo = r_mid
                    else:
                        r_hi = r_mid
                    if r_hi / r_lo < 1.0 + 1e-4:
                        break
                r_star = r_lo          # lambda(w_top, r_star) < ell certified
            walk = []
            if r_star is not None:
                r1 = math.sqrt(r_star * float(curve.samples[0].rho))
                r0 = math.sqrt(r1 * float(curve.samples[0].rho))
                w_try = max(float(omegas[0]), 1.0)
                for r in (r0, r1):
                    lb_cert = self._certify_lower(ell, r, w_try, tries=8,
                                                  w_cap=w_top / 1.5)
                    if lb_cert is not None:
                        walk.append((r, lb_cert))
                        w_try = lb_cert
                walk.append((r_star, self._certify_lower(ell, r_star, w_top,
                                                         tries=2, w_cap=w_top)))
            asym["omega_at_rho_under_ell"] = {
                "walk": walk,
                "to_infinity": bool(
                    len(walk) == 3
                    and walk[-1][1] > OMEGA_INF_THRESHOLD - 1e-9
                    and _increasing([w for _, w in walk]))}

    def _invert_h_under(self, ell: float) -> float:
        return floquet_ode.invert_monotone(self.h_under, ell, 1e-3, 1e3)

    def _invert_h_bar(self, ell: float) -> float:
        return floquet_ode.invert_monotone(self.h_bar, ell, 1e-3, 1e3)

    # -- applications --------------------------------------------------
    def omega_star(self, n_samples: int = 9):
        """max of the ell = C_star crossing curve (the proof's threshold
        frequency for the non-monotone dip)."""
        c = self.constants
        rho_c, reason = self.rho_ell(c.c_star)
        if rho_c is None:
            raise RangeError(f"C_star curve has no right endpoint: {reason}")
        fracs = np.linspace(0.02, 0.97, n_samples)
        la, lb_ = math.log(rho_c * 1e-3), math.log(rho_c)
        best, best_rho = 0.0, None
        hint = None
        for r in np.exp(la + fracs * (lb_ - la)):
            w, info = self.omega_ell(c.c_star, float(r), bracket_hint=hint)
            if w is None:
                continue
            hint = (w / 8.0, w * 8.0)
            if w > best:
                best, best_rho = w, float(r)
        if best_rho is None:
            raise RangeError("no crossings on the C_star level curve")
        return best, best_rho, rho_c

    def nonmonotonicity_probe(self, omega: float | None = None) -> ProbeReport:
        """Evidence for the non-monotone dependence on rho when
        C_under < C_star: either the dip below C_star at omega < omega_star
        (with the sqrt(rho) lower-bound fit at rho -> 0), or, when
        C_star = C_bar, the global minimum at both ends."""
        c = self.constants
        if c.c_star - c.c_under <= 1e-6:
            return ProbeReport(mode="inapplicable",
                               details={"reason": "C_under = C_star"})
        if c.c_bar - c.c_star <= 1e-6:
            # C_star = C_bar: both rho-limits equal C_bar and the eigenvalue
            # sits strictly below it inside, so the ends carry the global
            # maximum and the dip is measured as the drop below C_bar
            w = omega or 1.0
            rhos = np.logspace(-3, 3, 13)
            lams = np.array([self.lam(w, float(r)) for r in rhos])
            drop = float(c.c_bar - lams.min())
            edge_gap = float(c.c_bar - max(lams[0], lams[-1]))
            return ProbeReport(mode="endpoints", omega=w,
                               details={"interior_drop": drop,
                                        "edge_gap": edge_gap,
                                        "rhos": rhos.tolist(),
                                        "lams": lams.tolist()})
        w_star, rho_at_star, rho_c = self.omega_star()
        w = omega if omega is not None else 0.5 * w_star
        if w >= w_star:
            return ProbeReport(mode="no-dip", omega=w, omega_star=w_star,
                               details={"reason": "omega above omega_star"})
        # both crossings sit inside (0, rho_C*): the C* curve's domain
        rhos = np.exp(np.linspace(math.log(rho_c * 1e-3),
                                  math.log(rho_c * 1.02), 21))
        lams = np.array([self.lam(w, float(r)) for r in rhos])
        below = lams < c.c_star
        if not below.any():
            return ProbeReport(mode="no-dip", omega=w, omega_star=w_star,
                               details={"reason": "no values below C_star found"})
        first = int(np.argmax(below))
        last = len(below) - 1 - int(np.argmax(below[::-1]))
        rho_under = self._refine_crossing(w, rhos[first - 1], rhos[first], c.c_star)
        rho_over = self._refine_crossing(w, rhos[last + 1], rhos[last], c.c_star)
        dip = float(c.c_star - lams[below].min())
        h_u = self.h_under(w)
        k = 3
        eta = float(min((lams[i] - h_u) / math.sqrt(rhos[i]) for i in range(k)))
        return ProbeReport(mode="dip", omega=w, omega_star=w_star,
                           rho_under=rho_under, rho_over=rho_over,
                           dip_depth=dip, eta_hat=eta,
                           details={"rhos": rhos.tolist(), "lams": lams.tolist(),
                                    "h_under": h_u})

    def _refine_crossing(self, omega, rho_outside, rho_inside, level,
                         tol=1e-5):
        """Bisect lambda(omega, .) = level between an outside (>= level) and
        an inside (< level) sample."""
        lo, hi = rho_outside, rho_inside
        for _ in range(100):
            mid = math.sqrt(lo * hi)
            lm = self.lam(omega, mid)
            if abs(lm - level) <= tol:
                return mid
            if lm < level:
                hi = mid
            else:
                lo = mid
        return mid


def _decreasing(a) -> bool:
    a = np.asarray(a)
    return bool(np.all(np.diff(a) <= 0))


def _increasing(a) -> bool:
    a = np.asarray(a)
    return bool(np.all(np.diff(a) >= 0))


def ns_condition_residual(A: MatrixField, D: DiffusionMatrix,
                          grid: SpatialGrid, tgrid: TimeGrid, rho: float) -> float:
    """Relative fit residual of A phi = Ahat phi + g(t) phi over the
    elliptic eigenfunction phi of the time-averaged problem; a residual at
    rounding level certifies the flat-in-omega (vertical line) case."""
    B = temporal_average(A, grid, tgrid)
    phi = elliptic.elliptic_principal(B, rho, D, grid).eigenfunction   # (n, N)
    smp = A.sample(grid, tgrid)                                        # (n,n,N,M+1)
    R = np.einsum("ijnm,jn->inm", smp - np.moveaxis(B, 0, -1)[:, :, :, None], phi)
    w = grid.weights
    denom_phi = float(np.sum((phi ** 2) @ w))
    g = np.einsum("inm,in,n->m", R, phi, w) / denom_phi                # (M+1,)
    resid = R - g[None, None, :] * phi[:, :, None]
    action = np.einsum("ijnm,jn->inm", smp, phi)
    num = math.sqrt(float(integrate_time(
        np.einsum("inm,n->m", resid ** 2, w))))
    # normalize by the full field action, not by R itself: a separable
    # field has R identically zero and must report a rounding-level value
    den = math.sqrt(float(integrate_time(
        np.einsum("inm,n->m", action ** 2, w)))) + 1e-30
    return num / den


def assemble_mutation_field(M_field: MatrixField, rates: list,
                            grid: SpatialGrid, tgrid: TimeGrid) -> MatrixField:
    """A = M + diag(c_i) after validating the mutation structure
    (m_ii = -sum_{j != i} m_ij at every sample)."""
    report = validate_mutation(M_field, grid, tgrid)
    if not report.ok:
        raise ValidationError(f"mutation field invalid: {report.violations}")
    if len(rates) != M_field.n:
        raise ValidationError("need one birth-death rate entry per component")
    entries = dict(M_field.entries)
    for i, c_entry in enumerate(rates, start=1):
        diag = entries.get((i, i))
        if diag is None:
            entries[(i, i)] = c_entry
        else:
            try:
                entries[(i, i)] = entry_sum(diag, c_entry)
            except ValidationError:
                vals = diag.sample(grid, tgrid) + c_entry.sample(grid, tgrid)
                entries[(i, i)] = TabulatedEntry(vals)
    return MatrixField(M_field.n, entries)


def persistence_region(M_field: MatrixField, rates: list, D: DiffusionMatrix,
                       grid: SpatialGrid, tgrid: TimeGrid,
                       solver_kwargs: dict | None = None) -> RegionReport:
    """Persistence region {lambda < 0} of the mutation model: empty when
    C_under >= 0, everything when C_bar <= 0, otherwise bounded by the
    zero level set with the case index of the five-way split."""
    A = assemble_mutation_field(M_field, rates, grid, tgrid)
    solver = LevelSetSolver(A, D, grid, tgrid, **(solver_kwargs or {}))
    c = solver.constants
    if c.c_under >= -SIGN_TOL:
        return RegionReport(verdict="empty", case_index=None, constants=c)
    if c.c_bar <= SIGN_TOL:
        return RegionReport(verdict="full", case_index=None, constants=c)
    lo_plus = min(c.c_star_plus, c.c_under_plus)
    if 0.0 < c.c_star:
        case = 1
    elif 0.0 < lo_plus:
        case = 2
    elif c.c_star_plus < c.c_under_plus and 0.0 < c.c_under_plus:
        case = 3
    elif c.c_under_plus < c.c_star_plus and 0.0 < c.c_star_plus:
        case = 4
    else:
        case = 5
    curve = solver.trace_level_set(0.0)
    return RegionReport(verdict="bounded-by-curve", case_index=case,
                        constants=c, curve=curve)
