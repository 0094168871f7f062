"""Fold coefficients of the composed return map and the bifurcation verdict.

Two versions of the quadratic coefficient are carried:

* ``alpha*``: the closed form 2(fx + gy)/g0 + fyy/fy;
* ``alpha*_taylor``: [2(fx + gy)/g0 - fyy/fy]/3, the value obtained by
  expanding the flow to second order in y.  Numerical integration agrees
  with this one (see README), so predictions can be switched to it with
  ``alpha="taylor"``.

The beta coefficients are the same in both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .errors import DomainViolation, InconclusiveVerdict, NotFoldFold
from .model_core import TOL_ROOT, Jet, Mode, ModelSpec, jet_at

ALPHA_KINDS = ("closed_form", "taylor")


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def cbrt(v: float) -> float:
    return math.copysign(abs(v) ** (1.0 / 3.0), v)


def alpha_closed_form(jet: Jet) -> float:
    return 2.0 * (jet.fx + jet.gy) / jet.g0 + jet.fyy / jet.fy


def alpha_taylor(jet: Jet) -> float:
    return (2.0 * (jet.fx + jet.gy) / jet.g0 - jet.fyy / jet.fy) / 3.0


def beta_of(jet: Jet) -> float:
    return -2.0 * jet.g0 / jet.fy


@dataclass(frozen=True)
class FoldCoefficients:
    alpha_L: float
    alpha_R: float
    beta_L: float
    beta_R: float
    alpha: float
    beta: float
    sign_gR0: int
    sign_fRy0: int
    alpha_L_taylor: float
    alpha_R_taylor: float
    alpha_taylor: float

    def alpha_of(self, kind: str = "closed_form") -> float:
        if kind == "closed_form":
            return self.alpha
        if kind == "taylor":
            return self.alpha_taylor
        raise ValueError(f"alpha kind must be one of {ALPHA_KINDS}, got {kind!r}")

    def ratio(self, kind: str = "closed_form") -> float:
        """-alpha/beta, the limit of x / y(x)^3."""
        return -self.alpha_of(kind) / self.beta


def fold_coefficients(jet_L: Jet, jet_R: Jet, tol_root: float = TOL_ROOT) -> FoldCoefficients:
    for name, j in (("L", jet_L), ("R", jet_R)):
        if abs(j.f0) > tol_root:
            raise NotFoldFold(f"mode {name}: |f(0)| = {abs(j.f0):.3e} exceeds {tol_root:g}")
        j.check_nondegenerate()
    aL, aR = alpha_closed_form(jet_L), alpha_closed_form(jet_R)
    tL, tR = alpha_taylor(jet_L), alpha_taylor(jet_R)
    bL, bR = beta_of(jet_L), beta_of(jet_R)
    return FoldCoefficients(
        alpha_L=aL, alpha_R=aR, beta_L=bL, beta_R=bR,
        alpha=aL - aR, beta=bR - bL,
        sign_gR0=_sign(jet_R.g0), sign_fRy0=_sign(jet_R.fy),
        alpha_L_taylor=tL, alpha_R_taylor=tR, alpha_taylor=tL - tR,
    )


def model_coefficients(model: ModelSpec, source: str = "auto") -> Tuple[FoldCoefficients, Tuple[Jet, Jet]]:
    jets = (jet_at(model, Mode.L, source=source), jet_at(model, Mode.R, source=source))
    return fold_coefficients(*jets), jets


@dataclass(frozen=True)
class TheoremVerdict:
    fold_fold: bool
    c2_fy: bool
    c2_g: bool
    c3: bool
    c4: bool
    required_x_sign: int
    predicted_stability: str
    predicted_y_sign: int
    predicted_cuberoot_ratio: float
    predicted_cuberoot_ratio_taylor: float

    @property
    def all_hold(self) -> bool:
        return self.fold_fold and self.c2_fy and self.c2_g and self.c3 and self.c4

    @property
    def conclusive(self) -> bool:
        return self.predicted_stability != "inconclusive"

    def conditions(self):
        return [("fold_fold", self.fold_fold), ("c2_fy", self.c2_fy), ("c2_g", self.c2_g),
                ("c3", self.c3), ("c4", self.c4)]


def check_theorem(coeffs: FoldCoefficients, jets: Tuple[Jet, Jet],
                  tol_root: float = TOL_ROOT) -> TheoremVerdict:
    jL, jR = jets
    fold_fold = abs(jL.f0) <= tol_root and abs(jR.f0) <= tol_root
    c2_fy = _sign(jR.fy) * _sign(jL.fy) > 0
    c2_g = _sign(jR.g0) * _sign(jL.g0) < 0
    c3 = _sign(coeffs.alpha) != 0
    c4 = _sign(coeffs.alpha) * _sign(coeffs.beta) * _sign(jR.fy) < 0
    ok = fold_fold and c2_fy and c2_g and c3 and c4
    s = _sign(coeffs.alpha) * _sign(jR.g0)
    if ok and s > 0:
        verdict = "stable"
    elif ok and s < 0:
        verdict = "unstable"
    else:
        verdict = "inconclusive"
    beta = coeffs.beta
    return TheoremVerdict(
        fold_fold=fold_fold, c2_fy=c2_fy, c2_g=c2_g, c3=c3, c4=c4,
        required_x_sign=-_sign(jR.fy) * _sign(jR.g0),
        predicted_stability=verdict,
        predicted_y_sign=-_sign(jR.g0),
        predicted_cuberoot_ratio=-coeffs.alpha / beta if beta else math.nan,
        predicted_cuberoot_ratio_taylor=-coeffs.alpha_taylor / beta if beta else math.nan,
    )


def predicted_fixed_point(coeffs: FoldCoefficients, x_param: float,
                          alpha: str = "closed_form") -> float:
    """Leading-order fixed point cbrt(-beta x / alpha) of the composed map."""
    a = coeffs.alpha_of(alpha)
    if _sign(a) == 0 or _sign(a) * _sign(coeffs.beta) * coeffs.sign_fRy0 >= 0:
        raise InconclusiveVerdict("predicted fixed point needs alpha != 0 and alpha beta f^R_y < 0")
    required = -coeffs.sign_fRy0 * coeffs.sign_gR0
    if x_param != 0.0 and _sign(x_param) != required:
        raise DomainViolation(f"x={x_param!r} lies on the inadmissible side (need sign {required:+d})")
    return cbrt(-coeffs.beta * x_param / a)


@dataclass(frozen=True)
class Region:
    """The wedge constant m and outer radius delta of the domain J."""

    m: float
    delta: float

    def __post_init__(self):
        if not (self.m > 0 and self.delta > 0):
            raise ValueError("m and delta must be positive")

    def inner(self, x_param: float) -> float:
        return (abs(x_param) / self.m) ** (1.0 / 3.0)

    def contains(self, x_param: float, y: float, y_sign: int) -> bool:
        r = y_sign * y
        return self.inner(x_param) <= r <= self.delta


def default_region(model: ModelSpec, coeffs: FoldCoefficients = None,
                   alpha: str = "closed_form", m: float = None,
                   delta: float = None) -> Region:
    """m = 2|alpha|/|beta| and delta = 0.1 * box y-radius unless given."""
    if m is None:
        if coeffs is None:
            coeffs, _ = model_coefficients(model)
        m = 2.0 * abs(coeffs.alpha_of(alpha)) / abs(coeffs.beta)
    if delta is None:
        delta = 0.1 * model.y_radius
    return Region(float(m), float(delta))


def verdict_for(model: ModelSpec) -> Tuple[FoldCoefficients, TheoremVerdict]:
    coeffs, jets = model_coefficients(model)
    return coeffs, check_theorem(coeffs, jets)
