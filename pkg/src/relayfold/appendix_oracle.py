"""Partial derivatives of the flow (X, Y)(t, x, y) at a fold point, checked numerically.

At a fold (f(0) = 0) the low-order partials of the general solution at
t = 0, (x, y) = 0 have closed forms in the jet.  Here each one is also
measured by finite differences over short high-accuracy integrations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

from .errors import NotFold
from .integrator import ToleranceSet, integrate_mode
from .model_core import TOL_ROOT, Jet, VectorField, _fd_jet

ORACLE_CONTROLS = ToleranceSet(rel_tol=1e-12, abs_tol=1e-15)
H_LOW = 1e-2    # first and second order, 4th-order stencils
H_THIRD = 1e-3  # third order, 5-point 2nd-order stencil
TOL_LOW = 1e-6
TOL_THIRD = 1e-4

# (offset, weight) pairs; divide by h**order
_STENCILS = {
    0: ((0, 1.0),),
    1: ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)),
    2: ((-2, -1 / 12), (-1, 16 / 12), (0, -30 / 12), (1, 16 / 12), (2, -1 / 12)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
}


@dataclass(frozen=True)
class DerivativeEntry:
    name: str
    formula_value: float
    numeric_value: float
    abs_error: float
    order: int
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.abs_error <= self.tolerance


@dataclass(frozen=True)
class DerivativeReport:
    entries: List[DerivativeEntry]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> List[DerivativeEntry]:
        return [e for e in self.entries if not e.ok]


def closed_forms(jet: Jet) -> Dict[str, Tuple[str, Tuple[int, int, int], float]]:
    """name -> (component, (order in t, x, y), value)."""
    f_x, f_y, g, g_x, g_y, f_yy = jet.fx, jet.fy, jet.g0, jet.gx, jet.gy, jet.fyy
    third = f_x * f_y + f_yy * g + f_y * g_y
    return {
        "X_t": ("X", (1, 0, 0), 0.0),
        "X_x": ("X", (0, 1, 0), 1.0),
        "X_y": ("X", (0, 0, 1), 0.0),
        "Y_t": ("Y", (1, 0, 0), g),
        "Y_x": ("Y", (0, 1, 0), 0.0),
        "Y_y": ("Y", (0, 0, 1), 1.0),
        "X_tx": ("X", (1, 1, 0), f_x),
        "X_ty": ("X", (1, 0, 1), f_y),
        "Y_tx": ("Y", (1, 1, 0), g_x),
        "Y_ty": ("Y", (1, 0, 1), g_y),
        "X_tt": ("X", (2, 0, 0), f_y * g),
        "Y_tt": ("Y", (2, 0, 0), g_y * g),
        "X_xx": ("X", (0, 2, 0), 0.0),
        "X_yy": ("X", (0, 0, 2), 0.0),
        "Y_xx": ("Y", (0, 2, 0), 0.0),
        "Y_yy": ("Y", (0, 0, 2), 0.0),
        "X_tyy": ("X", (1, 0, 2), f_yy),
        "X_tty": ("X", (2, 0, 1), third),
        "X_ttt": ("X", (3, 0, 0), third * g),
    }


def make_flow(field: VectorField, controls: ToleranceSet = ORACLE_CONTROLS
              ) -> Callable[[float, float, float], Tuple[float, float]]:
    """(t, x, y) -> (X, Y), negative t integrating the negated field."""
    back = field.negated()

    @lru_cache(maxsize=None)
    def flow(t, x, y):
        if t == 0.0:
            return x, y
        vf = field if t > 0 else back
        return integrate_mode(vf, (x, y), abs(t), controls)[-1].end

    return flow


def partial_derivative(flow, component: str, orders: Tuple[int, int, int], h: float) -> float:
    idx = 0 if component == "X" else 1
    total = 0.0
    for combo in itertools.product(*(_STENCILS[o] for o in orders)):
        w = 1.0
        pt = []
        for off, wt in combo:
            w *= wt
            pt.append(off * h)
        total += w * flow(*pt)[idx]
    return total / h ** sum(orders)


def verify_solution_jets(field: VectorField, jet: Optional[Jet] = None,
                         tol_root: float = TOL_ROOT,
                         controls: ToleranceSet = ORACLE_CONTROLS,
                         h_low: float = H_LOW, h_third: float = H_THIRD) -> DerivativeReport:
    """Compare the closed-form partials with finite differences of the integrated flow.

    The default steps suit fields with O(1) coefficients; shrink them for
    fast fields (large |g(0)| or |f'_x(0)|).
    """
    f0 = field.f(0.0, 0.0)
    if abs(f0) > tol_root:
        raise NotFold(f"|f(0)| = {abs(f0):.3e} exceeds {tol_root:g}: origin is not a fold")
    if jet is None:
        jet = field.jet(0.0, 0.0) or _fd_jet(field, 0.0, 0.0)
    flow = make_flow(field, controls)
    entries = []
    for name, (comp, orders, value) in closed_forms(jet).items():
        order = sum(orders)
        h = h_third if order == 3 else h_low
        tol = TOL_THIRD if order == 3 else TOL_LOW
        num = partial_derivative(flow, comp, orders, h)
        entries.append(DerivativeEntry(name, value, num, abs(num - value), order, tol))
    return DerivativeReport(entries)
