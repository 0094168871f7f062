"""Switched planar models, field evaluation and jets at the fold point.

All fields are expressed in *internal* coordinates, where the fold-fold
point sits at the origin.  ``ModelSpec.fold_point`` remembers where that
origin lives in the user's (physical) coordinates.
"""

from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Tuple

from .errors import DegenerateJet, ModelError, NoConvergence, OutOfBox

TOL_DEGENERATE = 1e-9
TOL_ROOT = 1e-12
MAX_POLY_DEGREE = 4

_EPS = sys.float_info.epsilon

State = Tuple[float, float]
Box = Tuple[float, float, float, float]


class Mode(enum.Enum):
    L = "L"
    R = "R"

    @property
    def other(self) -> "Mode":
        return Mode.R if self is Mode.L else Mode.L

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Jet:
    """Value and low-order partials of a field (f, g) at one point."""

    f0: float
    g0: float
    fx: float
    fy: float
    gx: float
    gy: float
    fyy: float
    source: str = "analytic"

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.f0, self.g0, self.fx, self.fy, self.gx, self.gy, self.fyy)

    def check_nondegenerate(self, tol: float = TOL_DEGENERATE) -> None:
        if abs(self.fy) < tol:
            raise DegenerateJet(f"|f'_y| = {abs(self.fy):.3e} below {tol:g}")
        if abs(self.g0) < tol:
            raise DegenerateJet(f"|g(0)| = {abs(self.g0):.3e} below {tol:g}")


JET_NAMES = ("f0", "g0", "fx", "fy", "gx", "gy", "fyy")


# --------------------------------------------------------------------------
# vector fields


class VectorField:
    """A smooth planar field ``(x, y) -> (f, g)``.

    Subclasses implement ``__call__``; ``jet`` returns ``None`` when no
    closed-form derivatives are known.
    """

    def __call__(self, x: float, y: float) -> State:
        raise NotImplementedError

    def f(self, x: float, y: float) -> float:
        return self(x, y)[0]

    def g(self, x: float, y: float) -> float:
        return self(x, y)[1]

    def jet(self, x: float, y: float) -> Optional[Jet]:
        return None

    def negated(self) -> "VectorField":
        return NegatedField(self)


class FunctionField(VectorField):
    def __init__(self, f: Callable[[float, float], float],
                 g: Callable[[float, float], float],
                 jet: Optional[Callable[[float, float], Jet]] = None):
        self._f = f
        self._g = g
        self._jet = jet

    def __call__(self, x, y):
        return self._f(x, y), self._g(x, y)

    def jet(self, x, y):
        return None if self._jet is None else self._jet(x, y)


class NegatedField(VectorField):
    """The same field run backwards in time."""

    def __init__(self, base: VectorField):
        self.base = base

    def __call__(self, x, y):
        f, g = self.base(x, y)
        return -f, -g

    def jet(self, x, y):
        j = self.base.jet(x, y)
        if j is None:
            return None
        return Jet(-j.f0, -j.g0, -j.fx, -j.fy, -j.gx, -j.gy, -j.fyy, j.source)

    def negated(self):
        return self.base


class ShiftedField(VectorField):
    """``base`` re-centred so that physical point ``(x0, y0)`` becomes the origin."""

    def __init__(self, base: VectorField, x0: float, y0: float):
        self.base = base
        self.x0 = x0
        self.y0 = y0

    def __call__(self, x, y):
        return self.base(x + self.x0, y + self.y0)

    def jet(self, x, y):
        return self.base.jet(x + self.x0, y + self.y0)


class MassSpringField(VectorField):
    """x' = y, y' = -x - c y + d."""

    def __init__(self, c: float, d: float):
        self.c = float(c)
        self.d = float(d)

    def __call__(self, x, y):
        return y, -x - self.c * y + self.d

    def jet(self, x, y):
        return Jet(y, -x - self.c * y + self.d, 0.0, 1.0, -1.0, -self.c, 0.0)


ABS_PARAM_NAMES = ("nu", "r", "J", "m_quarter", "F_z",
                   "theta_r1", "theta_r2", "theta_r3", "k", "lambda0")

ABS_DEFAULTS = {
    "nu": 20.0,          # vehicle speed [m/s]
    "r": 0.3,            # wheel radius [m]
    "J": 1.0,            # wheel inertia [kg m^2]
    "m_quarter": 225.0,  # quarter-car mass [kg]
    "F_z": 2207.25,      # vertical load [N]
    "theta_r1": 1.28,    # Burckhardt dry asphalt
    "theta_r2": 23.99,
    "theta_r3": 0.52,
    "k": 1000.0,         # braking torque rate [N m / s]
    "lambda0": 0.1,
}


class AbsCurves:
    """Tyre-slip curves of the single-corner braking model."""

    def __init__(self, params: Mapping[str, float]):
        self.nu = float(params["nu"])
        self.r = float(params["r"])
        self.J = float(params["J"])
        self.m = float(params["m_quarter"])
        self.F_z = float(params["F_z"])
        self.t1 = float(params["theta_r1"])
        self.t2 = float(params["theta_r2"])
        self.t3 = float(params["theta_r3"])
        self.F0 = self.r / (self.nu * self.J)

    def mu(self, lam: float) -> float:
        return self.t1 * (1.0 - math.exp(-lam * self.t2)) - lam * self.t3

    def dmu(self, lam: float) -> float:
        return self.t1 * self.t2 * math.exp(-lam * self.t2) - self.t3

    def F(self, lam: float) -> float:
        return ((1.0 - lam) / self.m + self.r ** 2 / self.J) * self.F_z * self.mu(lam) / self.nu

    def dF(self, lam: float) -> float:
        a = (1.0 - lam) / self.m + self.r ** 2 / self.J
        return self.F_z / self.nu * (-self.mu(lam) / self.m + a * self.dmu(lam))


class AbsField(VectorField):
    """Slip/torque dynamics around the fold point ``(lambda0, F(lambda0)/F0)``.

    Internal coordinates are ``x = lambda - lambda0`` and
    ``y = T_b - F(lambda0)/F0``; ``rate`` is the torque slope of this mode.
    """

    def __init__(self, curves: AbsCurves, lambda0: float, rate: float):
        self.curves = curves
        self.lambda0 = float(lambda0)
        self.rate = float(rate)
        self._F_ref = curves.F(self.lambda0)

    def __call__(self, x, y):
        c = self.curves
        return self._F_ref - c.F(self.lambda0 + x) + c.F0 * y, self.rate

    def jet(self, x, y):
        f0, g0 = self(x, y)
        return Jet(f0, g0, -self.curves.dF(self.lambda0 + x), self.curves.F0, 0.0, 0.0, 0.0)


def _check_terms(terms) -> Tuple[Tuple[int, int, float], ...]:
    out = []
    for term in terms:
        if len(term) != 3:
            raise ModelError(f"monomial must be [i, j, coeff], got {term!r}")
        i, j, c = term
        if int(i) != i or int(j) != j or i < 0 or j < 0:
            raise ModelError(f"monomial exponents must be non-negative integers, got {term!r}")
        if i + j > MAX_POLY_DEGREE:
            raise ModelError(f"monomial x^{i} y^{j} exceeds total degree {MAX_POLY_DEGREE}")
        out.append((int(i), int(j), float(c)))
    return tuple(out)


def _poly_eval(terms, x, y, dx=0, dy=0):
    total = 0.0
    for i, j, c in terms:
        if i < dx or j < dy:
            continue
        coef = c * math.perm(i, dx) * math.perm(j, dy)
        total += coef * x ** (i - dx) * y ** (j - dy)
    return total


class PolyField(VectorField):
    """Polynomial field given as monomial lists ``[(i, j, coeff), ...]`` for x^i y^j."""

    def __init__(self, f_terms: Sequence, g_terms: Sequence):
        self.f_terms = _check_terms(f_terms)
        self.g_terms = _check_terms(g_terms)

    def __call__(self, x, y):
        return _poly_eval(self.f_terms, x, y), _poly_eval(self.g_terms, x, y)

    def jet(self, x, y):
        ft, gt = self.f_terms, self.g_terms
        return Jet(
            _poly_eval(ft, x, y), _poly_eval(gt, x, y),
            _poly_eval(ft, x, y, dx=1), _poly_eval(ft, x, y, dy=1),
            _poly_eval(gt, x, y, dx=1), _poly_eval(gt, x, y, dy=1),
            _poly_eval(ft, x, y, dy=2),
        )


# --------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class ModelSpec:
    name: str
    left: VectorField
    right: VectorField
    params: Mapping[str, float] = field(default_factory=dict)
    fold_point: State = (0.0, 0.0)
    box: Box = (-1.0, 1.0, -1.0, 1.0)

    def field(self, mode: Mode) -> VectorField:
        return self.right if mode is Mode.R else self.left

    def in_box(self, x: float, y: float) -> bool:
        xmin, xmax, ymin, ymax = self.box
        return xmin <= x <= xmax and ymin <= y <= ymax

    def to_physical(self, state: State) -> State:
        return state[0] + self.fold_point[0], state[1] + self.fold_point[1]

    @property
    def y_radius(self) -> float:
        """Distance from the fold point to the nearer horizontal edge of the box."""
        return min(-self.box[2], self.box[3])


MASS_SPRING_DEFAULTS = {"c_L": 0.1, "c_R": 0.1, "d_L": -1.0, "d_R": 1.0}


def mass_spring(c_L: float = 0.1, c_R: float = 0.1, d_L: float = -1.0, d_R: float = 1.0,
                box: Box = (-2.0, 2.0, -2.0, 2.0)) -> ModelSpec:
    params = {"c_L": float(c_L), "c_R": float(c_R), "d_L": float(d_L), "d_R": float(d_R)}
    return ModelSpec("mass_spring", MassSpringField(c_L, d_L), MassSpringField(c_R, d_R),
                     params, (0.0, 0.0), tuple(box))


def abs_model(box: Box = (-0.05, 0.05, -50.0, 50.0), **overrides: float) -> ModelSpec:
    unknown = set(overrides) - set(ABS_PARAM_NAMES)
    if unknown:
        raise ModelError(f"unknown abs parameters: {sorted(unknown)}")
    params = dict(ABS_DEFAULTS)
    params.update({k: float(v) for k, v in overrides.items()})
    curves = AbsCurves(params)
    lam0, k = params["lambda0"], params["k"]
    # hitting lambda0 + x selects R, whose torque slope is -k
    right = AbsField(curves, lam0, -k)
    left = AbsField(curves, lam0, k)
    fold = (lam0, curves.F(lam0) / curves.F0)
    return ModelSpec("abs", left, right, params, fold, tuple(box))


def poly_model(f_L, g_L, f_R, g_R, fold_point: State = (0.0, 0.0),
               box: Box = (-1.0, 1.0, -1.0, 1.0), name: str = "poly") -> ModelSpec:
    left: VectorField = PolyField(f_L, g_L)
    right: VectorField = PolyField(f_R, g_R)
    x0, y0 = fold_point
    if x0 or y0:
        left, right = ShiftedField(left, x0, y0), ShiftedField(right, x0, y0)
    return ModelSpec(name, left, right, {}, (float(x0), float(y0)), tuple(box))


# --------------------------------------------------------------------------
# operations


def eval_field(model: ModelSpec, mode: Mode, state: State) -> State:
    x, y = state
    if not model.in_box(x, y):
        raise OutOfBox(state, model.box)
    return model.field(mode)(x, y)


def _fd_jet(vf: VectorField, x: float, y: float) -> Jet:
    scale = max(1.0, math.hypot(x, y))
    h1 = _EPS ** (1.0 / 3.0) * scale
    h2 = _EPS ** 0.25 * scale
    f0, g0 = vf(x, y)
    fxp, gxp = vf(x + h1, y)
    fxm, gxm = vf(x - h1, y)
    fyp, gyp = vf(x, y + h1)
    fym, gym = vf(x, y - h1)
    f_up = vf.f(x, y + h2)
    f_dn = vf.f(x, y - h2)
    return Jet(
        f0, g0,
        (fxp - fxm) / (2 * h1), (fyp - fym) / (2 * h1),
        (gxp - gxm) / (2 * h1), (gyp - gym) / (2 * h1),
        (f_up - 2 * f0 + f_dn) / (h2 * h2),
        source="finite_difference",
    )


def jet_at(model: ModelSpec, mode: Mode, point: State = (0.0, 0.0), source: str = "auto",
           require_nondegenerate: bool = False) -> Jet:
    """Jet of the ``mode`` field at ``point``.

    ``source`` is ``"analytic"``, ``"finite_difference"`` or ``"auto"`` (analytic
    when the field provides it).
    """
    x, y = point
    if not model.in_box(x, y):
        raise OutOfBox(point, model.box)
    vf = model.field(mode)
    if source not in ("auto", "analytic", "finite_difference"):
        raise ValueError(f"unknown jet source {source!r}")
    jet = None
    if source != "finite_difference":
        jet = vf.jet(x, y)
        if jet is None and source == "analytic":
            raise ModelError(f"model {model.name!r} has no analytic jet")
    if jet is None:
        jet = _fd_jet(vf, x, y)
    if require_nondegenerate:
        jet.check_nondegenerate()
    return jet


def nullcline_u(model: ModelSpec, mode: Mode, x: float, max_iter: int = 50,
                tol: float = TOL_ROOT) -> float:
    """Solve f(x, u) = 0 for u near the fold point by damped Newton."""
    vf = model.field(mode)
    jet_at(model, mode, (0.0, 0.0), require_nondegenerate=True)

    def fy(yy):
        j = vf.jet(x, yy)
        return j.fy if j is not None else _fd_jet(vf, x, yy).fy

    u = 0.0
    r = vf.f(x, u)
    for _ in range(max_iter):
        if abs(r) <= tol:
            return u
        d = fy(u)
        if d == 0.0:
            break
        step = -r / d
        for _ in range(40):
            u_new = u + step
            r_new = vf.f(x, u_new)
            if abs(r_new) < abs(r):
                break
            step *= 0.5
        else:
            break
        u, r = u_new, r_new
    if abs(r) <= tol:
        return u
    raise NoConvergence(f"nullcline Newton failed at x={x!r} (|f|={abs(r):.3e})")


def is_fold_fold(model: ModelSpec, tol: float = TOL_ROOT) -> bool:
    return all(abs(model.field(m).f(0.0, 0.0)) <= tol for m in Mode)
