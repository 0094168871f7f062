"""Half maps, point transformations and the composed return map.

Notation (internal coordinates, fold point at the origin):

* ``half_map_P``: from (x, y) back to the same line x, one mode;
* ``half_map_Ptilde``: from line x to line -x, one mode;
* ``point_transform``: one forward run of a mode from line x to line -x,
  which near the fold equals Ptilde after P;
* ``poincare_map``: R from +x_param to -x_param, then L back to +x_param.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import List, Optional, Sequence

from ._parallel import pmap
from .errors import DomainViolation
from .hybrid_sim import HybridTrajectory, StopRule, simulate
from .integrator import DEFAULT_CONTROLS, DenseStep, ToleranceSet, advance_to_line, count_crossings
from .model_core import Mode, ModelSpec, jet_at, nullcline_u
from .normal_form import FoldCoefficients, Region, default_region, model_coefficients


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class HalfMapResult:
    y_in: float
    y_out: float
    flight_time: float
    arc: Sequence[DenseStep] = ()
    own_line_crossings: Optional[int] = None


@dataclass(frozen=True)
class NormalFormResidual:
    y: float
    x_param: float
    delta_value: float
    ratio: float
    alpha_kind: str = "closed_form"


@dataclass(frozen=True)
class PoincareResult:
    y_in: float
    y_out: float
    period: float
    intermediate: float
    residual_data: Optional[NormalFormResidual] = None
    trajectory: Optional[HybridTrajectory] = None


def _run(model: ModelSpec, mode: Mode, start_x: float, y: float, line: float,
         controls: ToleranceSet, backward: bool) -> HalfMapResult:
    vf = model.field(mode)
    if backward:
        vf = vf.negated()
    event, steps = advance_to_line(vf, (start_x, y), line, controls, model.box)
    t = -event.t_star if backward else event.t_star
    return HalfMapResult(y, event.state[1], t, steps)


def half_map_P(model: ModelSpec, mode: Mode, x_line: float, y: float,
               controls: ToleranceSet = DEFAULT_CONTROLS) -> HalfMapResult:
    """Return to the same line ``x = x_line``; backward in time on the far side of u."""
    jet = jet_at(model, mode, require_nondegenerate=True)
    u = nullcline_u(model, mode, x_line)
    if y == u:
        raise DomainViolation(f"y={y!r} lies on the nullcline; no return map there")
    forward = _sign(y - u) == -_sign(jet.g0)
    return _run(model, mode, x_line, y, x_line, controls, backward=not forward)


def half_map_Ptilde(model: ModelSpec, mode: Mode, from_line: float, to_line: float, y: float,
                    m: Optional[float] = None,
                    controls: ToleranceSet = DEFAULT_CONTROLS) -> HalfMapResult:
    """Transit from line ``from_line`` to ``to_line = -from_line`` inside the wedge."""
    if to_line != -from_line:
        raise ValueError("to_line must equal -from_line")
    if from_line == 0.0:
        return HalfMapResult(y, y, 0.0)
    if m is None:
        m = default_region(model).m
    if abs(from_line) > m * abs(y) ** 3:
        raise DomainViolation(f"|x|={abs(from_line):.3e} exceeds m|y|^3={m * abs(y) ** 3:.3e}")
    f = model.field(mode).f(from_line, y)
    forward = _sign(f) == _sign(to_line - from_line)
    return _run(model, mode, from_line, y, to_line, controls, backward=not forward)


def check_transform_domain(model: ModelSpec, mode: Mode, x_line: float, y: float,
                           region: Region) -> None:
    jet = jet_at(model, mode, require_nondegenerate=True)
    if x_line != 0.0 and _sign(x_line) != -_sign(jet.fy) * _sign(jet.g0):
        raise DomainViolation(f"line x={x_line!r} on the inadmissible side for mode {mode}")
    if not region.contains(x_line, y, -_sign(jet.g0)):
        raise DomainViolation(
            f"y={y!r} outside J: need -sign(g0) y in [{region.inner(x_line):.6g}, {region.delta:g}]")


def point_transform(model: ModelSpec, mode: Mode, x_line: float, y: float,
                    region: Optional[Region] = None, check_domain: bool = True,
                    controls: ToleranceSet = DEFAULT_CONTROLS) -> HalfMapResult:
    """One forward run of ``mode`` from (x_line, y) to the line ``-x_line``.

    For R this is P^R_x with ``x_line = x``; for L call it with ``x_line = -x``.
    """
    if check_domain:
        check_transform_domain(model, mode, x_line, y, region or default_region(model))
    event, steps = advance_to_line(model.field(mode), (x_line, y), -x_line, controls, model.box)
    n_own = count_crossings(steps, x_line, skip_start=controls.t_min) if x_line else None
    return HalfMapResult(y, event.state[1], event.t_star, steps, n_own)


def inadmissible(coeffs: FoldCoefficients, x_param: float) -> bool:
    return x_param != 0.0 and _sign(x_param) != -coeffs.sign_fRy0 * coeffs.sign_gR0


def normal_form_residual(coeffs: FoldCoefficients, x_param: float, y: float, p_y: float,
                         alpha: str = "closed_form") -> NormalFormResidual:
    a = coeffs.alpha_of(alpha)
    delta = p_y - y - a * y * y - coeffs.beta * x_param / y
    return NormalFormResidual(y, x_param, delta, delta / (y * y), alpha)


def poincare_map(model: ModelSpec, x_param: float, y: float, want_residual: bool = False,
                 alpha: str = "closed_form", region: Optional[Region] = None,
                 check_domain: bool = True, coeffs: Optional[FoldCoefficients] = None,
                 controls: ToleranceSet = DEFAULT_CONTROLS) -> PoincareResult:
    """Switched run from (x_param, y) in mode R until the next switch back into R."""
    if coeffs is None:
        coeffs, _ = model_coefficients(model)
    if coeffs.sign_gR0 * _sign(jet_at(model, Mode.L).g0) >= 0:
        raise DomainViolation("g^R(0) g^L(0) < 0 fails; no return map")
    if inadmissible(coeffs, x_param):
        raise DomainViolation(f"x={x_param!r} on the inadmissible side")
    if check_domain:
        region = region or default_region(model, coeffs)
        if not region.contains(x_param, y, -coeffs.sign_gR0):
            raise DomainViolation(
                f"y={y!r} outside J: need -sign(g^R) y in "
                f"[{region.inner(x_param):.6g}, {region.delta:g}]")
    traj = simulate(model, x_param, (x_param, y), Mode.R, StopRule(max_switches=2),
                    controls=controls)
    (ev1, _), (ev2, _) = traj.events
    res = normal_form_residual(coeffs, x_param, y, ev2.state[1], alpha) if want_residual else None
    return PoincareResult(y, ev2.state[1], ev2.t_star, ev1.state[1], res, traj)


# --------------------------------------------------------------------------
# residual sweeps


@dataclass(frozen=True)
class ResidualRow:
    j: int
    y: float
    x: float
    P: float
    delta: float
    ratio: float
    T: float
    T_tilde: float
    y_mid: float

    def as_dict(self):
        return {"j": self.j, "y": self.y, "x": self.x, "P": self.P, "delta": self.delta,
                "ratio": self.ratio, "T": self.T, "T_tilde": self.T_tilde}


RESIDUAL_COLUMNS = ("j", "y", "x", "P", "delta", "ratio", "T", "T_tilde")


def _residual_row(args, model: ModelSpec, coeffs: FoldCoefficients, m: float, alpha: str,
                  controls: ToleranceSet) -> ResidualRow:
    j, y, x = args
    pr = poincare_map(model, x, y, want_residual=True, alpha=alpha, check_domain=False,
                      coeffs=coeffs, controls=controls)
    hp = half_map_P(model, Mode.R, x, y, controls)
    ht = half_map_Ptilde(model, Mode.R, x, -x, hp.y_out, m=m, controls=controls)
    r = pr.residual_data
    return ResidualRow(j, y, x, pr.y_out, r.delta_value, r.ratio, hp.flight_time,
                       ht.flight_time, hp.y_out)


def residual_sweep(model: ModelSpec, y0: Optional[float] = None, n: int = 7,
                   m: Optional[float] = None, alpha: str = "closed_form",
                   controls: ToleranceSet = DEFAULT_CONTROLS, jobs: int = 1) -> List[ResidualRow]:
    """Probe the composed map along y_j = y0 2^-j, x_j = m y_j^3 / 2 on the admissible side."""
    coeffs, _ = model_coefficients(model)
    region = default_region(model, coeffs, alpha, m=m)
    y_sign = -coeffs.sign_gR0
    x_sign = -coeffs.sign_fRy0 * coeffs.sign_gR0
    if y0 is None:
        y0 = y_sign * region.delta
    tasks = []
    for j in range(n):
        y = y0 * 2.0 ** -j
        tasks.append((j, y, x_sign * region.m * abs(y) ** 3 / 2.0))
    fn = partial(_residual_row, model=model, coeffs=coeffs, m=region.m, alpha=alpha,
                 controls=controls)
    return pmap(fn, tasks, jobs)
