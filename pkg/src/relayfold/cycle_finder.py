"""Fixed points of the return map, their multipliers, and bifurcation scans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence, Tuple

from scipy.optimize import brentq

from ._parallel import pmap
from .errors import (DomainViolation, InconclusiveVerdict, NoConvergence, NoSignChange,
                     RelayFoldError)
from .integrator import DEFAULT_CONTROLS, ToleranceSet
from .model_core import ModelSpec
from .normal_form import (FoldCoefficients, Region, check_theorem,
                          default_region, model_coefficients)
from .poincare import inadmissible, poincare_map

TOL_FIX = 1e-10
INNER_INFLATION = 1.05
SCAN_COLUMNS = ("x", "y_fix", "period", "multiplier", "stability", "scaling_ratio",
                "theory_ratio", "fix_residual")


@dataclass(frozen=True)
class CycleSolution:
    x_param: float
    y_fix: float
    period: float
    multiplier: float
    stability: str
    scaling_ratio: float
    fix_residual: float

    def as_dict(self, theory_ratio: float = math.nan) -> dict:
        return {"x": self.x_param, "y_fix": self.y_fix, "period": self.period,
                "multiplier": self.multiplier, "stability": self.stability,
                "scaling_ratio": self.scaling_ratio, "theory_ratio": theory_ratio,
                "fix_residual": self.fix_residual}


@dataclass(frozen=True)
class ScanRow:
    x_param: float
    solution: Optional[CycleSolution]
    error: Optional[str] = None

    def as_dict(self, theory_ratio: float) -> dict:
        if self.solution is not None:
            return self.solution.as_dict(theory_ratio)
        nan = math.nan
        return {"x": self.x_param, "y_fix": nan, "period": nan, "multiplier": nan,
                "stability": f"error: {self.error}", "scaling_ratio": nan,
                "theory_ratio": theory_ratio, "fix_residual": nan}


@dataclass
class ScanResult:
    rows: List[ScanRow]
    limit_ratio_estimate: float
    theory_ratio: float
    alpha_kind: str = "closed_form"
    theory_ratio_taylor: float = math.nan

    @property
    def solutions(self) -> List[CycleSolution]:
        return [r.solution for r in self.rows if r.solution is not None]

    @property
    def failed(self) -> List[ScanRow]:
        return [r for r in self.rows if r.solution is None]

    def scaling_check(self, rel_tol: float = 0.1) -> Tuple[bool, str]:
        """Final ratio within ``rel_tol`` of theory and errors shrinking over the last three rows."""
        if self.failed:
            return False, f"{len(self.failed)} row(s) failed"
        sols = self.solutions
        if not sols:
            return False, "no rows"
        errs = [abs(s.scaling_ratio - self.theory_ratio) for s in sols]
        rel = errs[-1] / abs(self.theory_ratio)
        tail = errs[-3:]
        monotone = all(b < a for a, b in zip(tail, tail[1:]))
        ok = rel <= rel_tol and monotone
        return ok, (f"final ratio {sols[-1].scaling_ratio:.6g} vs theory {self.theory_ratio:.6g} "
                    f"(rel err {rel:.3g}), last-3 errors decreasing: {monotone}")


def _setup(model: ModelSpec, region: Optional[Region], alpha: str,
           coeffs: Optional[FoldCoefficients]):
    if coeffs is None:
        coeffs, jets = model_coefficients(model)
    else:
        _, jets = model_coefficients(model)
    verdict = check_theorem(coeffs, jets)
    if region is None:
        region = default_region(model, coeffs, alpha)
    return coeffs, verdict, region


def _bracket(coeffs: FoldCoefficients, region: Region, x_param: float) -> Tuple[float, float]:
    s = -coeffs.sign_gR0
    inner = INNER_INFLATION * region.inner(x_param)
    if inner >= region.delta:
        raise NoSignChange(f"|x|={abs(x_param):.3e} too large: J is empty for m={region.m:g}, "
                           f"delta={region.delta:g}")
    return s * inner, s * region.delta


def find_cycle(model: ModelSpec, x_param: float, region: Optional[Region] = None, *,
               alpha: str = "closed_form", require_verdict: bool = True,
               coeffs: Optional[FoldCoefficients] = None, tol_fix: float = TOL_FIX,
               controls: ToleranceSet = DEFAULT_CONTROLS) -> CycleSolution:
    """Locate the fixed point of the return map on J by bracketing G(y) = P(y) - y."""
    coeffs, verdict, region = _setup(model, region, alpha, coeffs)
    if require_verdict and not verdict.all_hold:
        failed = [n for n, ok in verdict.conditions() if not ok]
        raise InconclusiveVerdict(f"bifurcation conditions fail: {', '.join(failed)}")
    if inadmissible(coeffs, x_param) or x_param == 0.0:
        raise NoSignChange(f"x={x_param!r} is not on the admissible side "
                           f"(sign {-coeffs.sign_fRy0 * coeffs.sign_gR0:+d})")
    a, b = _bracket(coeffs, region, x_param)

    def G(y):
        return poincare_map(model, x_param, y, coeffs=coeffs, check_domain=False,
                            controls=controls).y_out - y

    ga, gb = G(a), G(b)
    if ga == 0.0:
        y_fix = a
    elif gb == 0.0:
        y_fix = b
    elif (ga > 0) == (gb > 0):
        raise NoSignChange(f"G has the same sign at both ends of J ({a:.6g}: {ga:.3e}, "
                           f"{b:.6g}: {gb:.3e})")
    else:
        y_fix = brentq(G, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    pr = poincare_map(model, x_param, y_fix, coeffs=coeffs, check_domain=False, controls=controls)
    resid = abs(pr.y_out - y_fix)
    if resid > tol_fix:
        raise NoConvergence(f"fixed-point residual {resid:.3e} exceeds tol_fix={tol_fix:g}")
    mult = multiplier(model, x_param, y_fix, coeffs, controls)
    return CycleSolution(
        x_param=x_param, y_fix=y_fix, period=pr.period, multiplier=mult,
        stability="attracting" if abs(mult) < 1.0 else "repelling",
        scaling_ratio=x_param / y_fix ** 3, fix_residual=resid,
    )


def multiplier(model: ModelSpec, x_param: float, y: float,
               coeffs: Optional[FoldCoefficients] = None,
               controls: ToleranceSet = DEFAULT_CONTROLS) -> float:
    """Central difference of P at y with h = max(1e-7, 1e-4 |y|)."""
    h = max(1e-7, 1e-4 * abs(y))
    kw = dict(coeffs=coeffs, check_domain=False, controls=controls)
    p_plus = poincare_map(model, x_param, y + h, **kw).y_out
    p_minus = poincare_map(model, x_param, y - h, **kw).y_out
    return (p_plus - p_minus) / (2 * h)


def sign_changes_on_J(model: ModelSpec, x_param: float, region: Optional[Region] = None,
                      n: int = 64, alpha: str = "closed_form",
                      controls: ToleranceSet = DEFAULT_CONTROLS) -> int:
    """Number of sign changes of G over an n-point grid spanning J."""
    coeffs, _, region = _setup(model, region, alpha, None)
    a, b = _bracket(coeffs, region, x_param)
    prev = 0
    count = 0
    for i in range(n):
        y = a + (b - a) * i / (n - 1)
        g = poincare_map(model, x_param, y, coeffs=coeffs, check_domain=False,
                         controls=controls).y_out - y
        s = (g > 0) - (g < 0)
        if s and prev and s != prev:
            count += 1
        prev = s or prev
    return count


def iterate_map(model: ModelSpec, x_param: float, y0: float, n: int,
                region: Optional[Region] = None, alpha: str = "closed_form",
                controls: ToleranceSet = DEFAULT_CONTROLS) -> List[float]:
    """Orbit y0, P(y0), ...; stops early once an iterate leaves J."""
    coeffs, _, region = _setup(model, region, alpha, None)
    orbit = [y0]
    y = y0
    for _ in range(n):
        try:
            y = poincare_map(model, x_param, y, coeffs=coeffs, region=region,
                             controls=controls).y_out
        except DomainViolation:
            break
        orbit.append(y)
        if not region.contains(x_param, y, -coeffs.sign_gR0):
            break
    return orbit


def accumulation_point(model: ModelSpec, x_param: float, y0: float, tol: float = 1e-9,
                       max_iter: int = 100_000, region: Optional[Region] = None,
                       controls: ToleranceSet = DEFAULT_CONTROLS) -> Tuple[float, int]:
    """Limit of the orbit from y0, stopped once the geometric tail bound is below ``tol``.

    For a linearly converging orbit with ratio q the distance to the limit
    after a step of size d is at most d q/(1-q).
    """
    coeffs, _, region = _setup(model, region, "closed_form", None)
    kw = dict(coeffs=coeffs, check_domain=False, controls=controls)
    y_prev = y0
    y = poincare_map(model, x_param, y0, **kw).y_out
    d_prev = abs(y - y_prev)
    for k in range(2, max_iter + 1):
        y_prev, y = y, poincare_map(model, x_param, y, **kw).y_out
        d = abs(y - y_prev)
        if d == 0.0:
            return y, k
        q = d / d_prev if d_prev else 0.0
        if q < 1.0 and d * q / (1.0 - q) < tol:
            return y, k
        d_prev = d
    raise NoConvergence(f"orbit from {y0!r} did not settle within {max_iter} iterates")


def default_scan_x(model: ModelSpec, region: Optional[Region] = None, n: int = 5,
                   alpha: str = "closed_form") -> List[float]:
    """Decreasing powers of ten near m delta^3 / 10, on the admissible side."""
    coeffs, _, region = _setup(model, region, alpha, None)
    s = -coeffs.sign_fRy0 * coeffs.sign_gR0
    top = region.m * (region.delta / INNER_INFLATION) ** 3
    k0 = round(math.log10(top / 10.0))
    while 10.0 ** k0 >= top / 2:
        k0 -= 1
    return [s * 10.0 ** (k0 - i) for i in range(n)]


def _scan_row(x: float, model: ModelSpec, region: Region, alpha: str,
              controls: ToleranceSet) -> ScanRow:
    try:
        sol = find_cycle(model, x, region, alpha=alpha, require_verdict=False, controls=controls)
    except RelayFoldError as exc:
        return ScanRow(x, None, f"{type(exc).__name__}: {exc}")
    return ScanRow(x, sol)


def bifurcation_scan(model: ModelSpec, x_list: Optional[Sequence[float]] = None,
                     region: Optional[Region] = None, alpha: str = "closed_form",
                     controls: ToleranceSet = DEFAULT_CONTROLS, jobs: int = 1) -> ScanResult:
    """One find_cycle per x, ordered by decreasing |x|; failures are recorded per row."""
    coeffs, verdict, region = _setup(model, region, alpha, None)
    if not verdict.all_hold:
        failed = [n for n, ok in verdict.conditions() if not ok]
        raise InconclusiveVerdict(f"bifurcation conditions fail: {', '.join(failed)}")
    if x_list is None:
        x_list = default_scan_x(model, region, alpha=alpha)
    xs = sorted((float(x) for x in x_list), key=lambda v: -abs(v))
    if len({(x > 0) - (x < 0) for x in xs}) > 1:
        raise DomainViolation("scan values must share one sign")
    fn = partial(_scan_row, model=model, region=region, alpha=alpha, controls=controls)
    rows = pmap(fn, xs, jobs)
    sols = [r.solution for r in rows if r.solution is not None]
    limit = sols[-1].scaling_ratio if sols else math.nan
    return ScanResult(rows, limit, coeffs.ratio(alpha), alpha, coeffs.ratio("taylor"))
