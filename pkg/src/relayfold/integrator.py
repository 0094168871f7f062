"""Adaptive Dormand-Prince 5(4) integration of one smooth mode.

Works on plain Python floats (the state is two-dimensional, so numpy
overhead would dominate).  Every accepted step keeps its quartic dense
output, which is what the line-crossing search runs on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .errors import NoCrossing, OutOfBox, StepUnderflow, TangentialCrossing
from .model_core import Box, State, VectorField

# Dormand-Prince tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (-71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200,
                                -22 / 525, 1 / 40)
# continuous extension: theta, theta^2, theta^3, theta^4 weights per stage
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

_SAMPLES = 16


@dataclass(frozen=True)
class ToleranceSet:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    tol_event: float = 1e-11
    tol_transversal: float = 1e-8
    t_budget: float = 1e3
    t_min: float = 1e-12
    bisect_width: float = 1e-13
    max_step: float = math.inf
    max_steps: int = 2_000_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not 0.0 < v <= 1e-3:
                raise ValueError(f"{name} must lie in (0, 1e-3], got {v!r}")
        for name in ("tol_event", "tol_transversal", "t_budget", "t_min",
                     "bisect_width", "max_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")

    def with_(self, **changes) -> "ToleranceSet":
        return replace(self, **changes)


DEFAULT_CONTROLS = ToleranceSet()


@dataclass(frozen=True)
class DenseStep:
    """One accepted step with its dense output.

    ``qx``/``qy`` are the theta, theta^2, theta^3, theta^4 coefficients
    (already scaled by the step length) of the interpolant
    ``start + q . (theta, ..., theta^4)`` with ``theta = (t - t_start)/(t_end - t_start)``.
    """

    t_start: float
    t_end: float
    start: State
    end: State
    qx: Tuple[float, float, float, float]
    qy: Tuple[float, float, float, float]
    error_estimate: float
    k1: State

    @property
    def length(self) -> float:
        return self.t_end - self.t_start

    def x_at(self, theta: float) -> float:
        a, b, c, d = self.qx
        return self.start[0] + theta * (a + theta * (b + theta * (c + theta * d)))

    def dx_at(self, theta: float) -> float:
        a, b, c, d = self.qx
        return a + theta * (2 * b + theta * (3 * c + theta * 4 * d))

    def at_theta(self, theta: float) -> State:
        a, b, c, d = self.qy
        y = self.start[1] + theta * (a + theta * (b + theta * (c + theta * d)))
        return self.x_at(theta), y

    def __call__(self, t: float) -> State:
        return self.at_theta((t - self.t_start) / self.length)

    def shifted(self, dt: float) -> "DenseStep":
        return replace(self, t_start=self.t_start + dt, t_end=self.t_end + dt)


@dataclass(frozen=True)
class CrossingEvent:
    t_star: float
    state: State
    line_x: float
    direction: int
    residual: float = 0.0

    def shifted(self, dt: float) -> "CrossingEvent":
        return replace(self, t_star=self.t_star + dt)


def _stage(vf: VectorField, x: float, y: float, h: float, k1: State):
    """One Dormand-Prince step of size ``h`` from (x, y); returns end state, stages and error."""
    k1x, k1y = k1
    k2x, k2y = vf(x + h * _A21 * k1x, y + h * _A21 * k1y)
    k3x, k3y = vf(x + h * (_A31 * k1x + _A32 * k2x), y + h * (_A31 * k1y + _A32 * k2y))
    k4x, k4y = vf(x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x),
                  y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y))
    k5x, k5y = vf(x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x),
                  y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y))
    k6x, k6y = vf(x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x),
                  y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y))
    x1 = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    y1 = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    k7x, k7y = vf(x1, y1)
    ex = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
    ey = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
    kx = (k1x, k2x, k3x, k4x, k5x, k6x, k7x)
    ky = (k1y, k2y, k3y, k4y, k5y, k6y, k7y)
    return x1, y1, kx, ky, ex, ey


def _dense_coeffs(h: float, ks: Sequence[float]) -> Tuple[float, float, float, float]:
    out = []
    for i in range(4):
        out.append(h * sum(k * p[i] for k, p in zip(ks, _P)))
    return tuple(out)


def _make_step(vf: VectorField, t: float, x: float, y: float, h: float, k1: State,
               controls: ToleranceSet):
    x1, y1, kx, ky, ex, ey = _stage(vf, x, y, h, k1)
    sx = controls.abs_tol + controls.rel_tol * max(abs(x), abs(x1))
    sy = controls.abs_tol + controls.rel_tol * max(abs(y), abs(y1))
    err = math.sqrt(0.5 * ((ex / sx) ** 2 + (ey / sy) ** 2))
    step = DenseStep(t, t + h, (x, y), (x1, y1), _dense_coeffs(h, kx), _dense_coeffs(h, ky),
                     err, k1)
    return step, (kx[6], ky[6])


def _initial_step(vf: VectorField, x: float, y: float, k1: State,
                  controls: ToleranceSet) -> float:
    sx = controls.abs_tol + controls.rel_tol * abs(x)
    sy = controls.abs_tol + controls.rel_tol * abs(y)
    d0 = math.hypot(x / sx, y / sy) / math.sqrt(2)
    d1 = math.hypot(k1[0] / sx, k1[1] / sy) / math.sqrt(2)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = vf(x + h0 * k1[0], y + h0 * k1[1])
    d2 = math.hypot((f1[0] - k1[0]) / sx, (f1[1] - k1[1]) / sy) / math.sqrt(2) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, controls.max_step)


def _check_box(state: State, box: Optional[Box]) -> None:
    if box is None:
        return
    x, y = state
    if not (box[0] <= x <= box[1] and box[2] <= y <= box[3]):
        raise OutOfBox(state, box)


def _steps(vf: VectorField, init: State, t_end: float, controls: ToleranceSet,
           box: Optional[Box]):
    """Generate accepted DenseSteps from t=0 until ``t_end``."""
    x, y = float(init[0]), float(init[1])
    _check_box((x, y), box)
    k1 = vf(x, y)
    t = 0.0
    h = _initial_step(vf, x, y, k1, controls)
    rejected = False
    for _ in range(controls.max_steps):
        if t >= t_end:
            return
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(f"step size {h:.3e} underflow at t={t!r}, state=({x!r}, {y!r})")
        h = min(h, t_end - t, controls.max_step)
        step, k7 = _make_step(vf, t, x, y, h, k1, controls)
        err = step.error_estimate
        if err <= 1.0:
            factor = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            if rejected:
                factor = min(factor, 1.0)
            rejected = False
            _check_box(step.end, box)
            yield step
            t = step.t_end
            x, y = step.end
            k1 = k7
            h *= factor
        else:
            rejected = True
            h *= max(0.2, 0.9 * err ** -0.2)
    raise StepUnderflow(f"step budget of {controls.max_steps} exhausted at t={t!r}")


def integrate_mode(field: VectorField, init: State, t_max: float,
                   controls: ToleranceSet = DEFAULT_CONTROLS,
                   box: Optional[Box] = None) -> List[DenseStep]:
    """Integrate ``field`` from ``init`` over [0, t_max]."""
    if t_max < 0:
        raise ValueError("t_max must be non-negative; integrate the negated field instead")
    return list(_steps(field, init, t_max, controls, box))


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def _first_bracket(step: DenseStep, line: float, s_ref: int, theta_min: float,
                   touch: float = 0.0):
    """First sub-interval [a, b] of the step on which x - line leaves the ``s_ref`` side.

    Returns ``(a, b)`` or ``None``.  Also catches an in-and-out excursion inside
    a sampling interval by locating the extremum of x(theta); an extremum that
    only touches the line (within ``touch``) comes back as ``(turn, turn)``.
    """
    n = _SAMPLES
    a = theta_min
    ha = step.x_at(a) - line
    da = step.dx_at(a)
    for i in range(1, n + 1):
        b = i / n
        if b <= a:
            continue
        hb = step.x_at(b) - line
        if _sign(hb) == -s_ref or hb == 0.0:
            return a, b
        db = step.dx_at(b)
        # heading towards the line at a, away from it at b: check the turning point
        if _sign(da) == -s_ref and _sign(db) == s_ref:
            lo, hi = a, b
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _sign(step.dx_at(mid)) == -s_ref:
                    lo = mid
                else:
                    hi = mid
            turn = 0.5 * (lo + hi)
            h_turn = step.x_at(turn) - line
            if _sign(h_turn) != s_ref:
                return a, turn
            if abs(h_turn) <= touch:
                return turn, turn
        a, ha, da = b, hb, db
    return None


def _locate(vf: VectorField, step: DenseStep, line: float, s_ref: int, a: float, b: float,
            controls: ToleranceSet) -> Tuple[float, DenseStep]:
    """Bisection on the interpolant, then two Newton steps on re-integrated states."""
    width = controls.bisect_width / step.length
    while b - a > width:
        mid = 0.5 * (a + b)
        if _sign(step.x_at(mid) - line) == s_ref:
            a = mid
        else:
            b = mid
    tau = 0.5 * (a + b) * step.length
    x0, y0 = step.start
    for _ in range(2):
        sub, _ = _make_step(vf, step.t_start, x0, y0, tau, step.k1, controls)
        xs, ys = sub.end
        speed = vf(xs, ys)[0]
        if speed == 0.0:
            break
        tau_new = tau - (xs - line) / speed
        # the re-integrated root may sit just outside the interpolant's bracket
        tau = min(max(tau_new, 0.0), step.length)
    sub, _ = _make_step(vf, step.t_start, x0, y0, tau, step.k1, controls)
    sub = replace(sub, error_estimate=step.error_estimate)
    return step.t_start + tau, sub


def _advance(field: VectorField, init: State, line_x: float, controls: ToleranceSet,
             box: Optional[Box], t_end: float):
    x0, y0 = float(init[0]), float(init[1])
    h0 = x0 - line_x
    on_line = abs(h0) <= controls.tol_event
    if on_line:
        s_ref = _sign(field(x0, y0)[0])
        if s_ref == 0:
            raise TangentialCrossing(0.0, (x0, y0), 0.0)
    else:
        s_ref = _sign(h0)
    steps: List[DenseStep] = []
    for step in _steps(field, (x0, y0), t_end, controls, box):
        theta_min = 0.0
        if on_line and step.t_start < controls.t_min:
            theta_min = min(1.0, (controls.t_min - step.t_start) / step.length)
        bracket = _first_bracket(step, line_x, s_ref, theta_min, controls.tol_event)
        if bracket is None:
            steps.append(step)
            continue
        if bracket[0] == bracket[1]:
            t_touch = step.t_start + bracket[0] * step.length
            touch = step.at_theta(bracket[0])
            speed = field(*touch)[0]
            if abs(speed) <= controls.tol_transversal:
                raise TangentialCrossing(t_touch, touch, speed)
            steps.append(step)
            continue
        t_star, last = _locate(field, step, line_x, s_ref, bracket[0], bracket[1], controls)
        xs, ys = last.end
        residual = abs(xs - line_x)
        speed = field(xs, ys)[0]
        if abs(speed) <= controls.tol_transversal:
            raise TangentialCrossing(t_star, (xs, ys), speed)
        if residual > controls.tol_event:
            raise NoCrossing(f"event polish left residual {residual:.3e} > tol_event")
        state = (float(line_x), ys)
        last = replace(last, end=state)
        steps.append(last)
        return CrossingEvent(t_star, state, float(line_x), _sign(speed), residual), steps
    return None, steps


def advance_to_line(field: VectorField, init: State, line_x: float,
                    controls: ToleranceSet = DEFAULT_CONTROLS,
                    box: Optional[Box] = None) -> Tuple[CrossingEvent, List[DenseStep]]:
    """Integrate until the first crossing of the vertical line ``x = line_x``.

    A start on the line itself is allowed when the motion leaves it; the
    search then ignores crossings earlier than ``controls.t_min``.
    """
    event, steps = _advance(field, init, line_x, controls, box, controls.t_budget)
    if event is None:
        raise NoCrossing(
            f"no crossing of x={line_x!r} within t_budget={controls.t_budget:g} from {tuple(init)}")
    return event, steps


def state_at(steps: Sequence[DenseStep], t: float) -> State:
    """Evaluate a contiguous sequence of steps at time ``t``."""
    if not steps:
        raise ValueError("empty step sequence")
    lo, hi = 0, len(steps) - 1
    if t <= steps[0].t_start:
        return steps[0].start
    if t >= steps[-1].t_end:
        return steps[-1].end
    while lo < hi:
        mid = (lo + hi) // 2
        if steps[mid].t_end < t:
            lo = mid + 1
        else:
            hi = mid
    return steps[lo](t)


def count_crossings(steps: Sequence[DenseStep], line_x: float, skip_start: float = 0.0) -> int:
    """Number of sign changes of x - line_x along the sampled interpolants."""
    count = 0
    prev = 0
    for step in steps:
        for i in range(_SAMPLES + 1):
            theta = i / _SAMPLES
            if step.t_start + theta * step.length < skip_start:
                continue
            s = _sign(step.x_at(theta) - line_x)
            if s == 0:
                continue
            if prev and s != prev:
                count += 1
            prev = s
    return count
