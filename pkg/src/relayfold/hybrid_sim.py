"""Relay (hysteresis) switched simulation.

Mode R runs until the line x = -x_param is hit, then L takes over until
x = +x_param, and so on.  Hitting one's own line does nothing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import NoCrossing
from .integrator import (DEFAULT_CONTROLS, CrossingEvent, DenseStep, ToleranceSet,
                         _advance)
from .model_core import Mode, ModelSpec, State


@dataclass(frozen=True)
class StopRule:
    max_switches: Optional[int] = 64
    max_time: Optional[float] = None

    def __post_init__(self):
        if self.max_switches is None and self.max_time is None:
            raise ValueError("StopRule needs max_switches or max_time")
        if self.max_switches is not None and self.max_switches < 0:
            raise ValueError("max_switches must be non-negative")
        if self.max_time is not None and not self.max_time > 0:
            raise ValueError("max_time must be positive")


@dataclass
class Arc:
    mode: Mode
    steps: List[DenseStep]

    @property
    def t_start(self) -> float:
        return self.steps[0].t_start if self.steps else math.nan

    @property
    def t_end(self) -> float:
        return self.steps[-1].t_end if self.steps else math.nan

    @property
    def start(self) -> State:
        return self.steps[0].start

    @property
    def end(self) -> State:
        return self.steps[-1].end


@dataclass
class HybridTrajectory:
    arcs: List[Arc] = field(default_factory=list)
    events: List[Tuple[CrossingEvent, Mode]] = field(default_factory=list)
    initial_mode: Mode = Mode.R
    x_param: float = 0.0

    @property
    def t_final(self) -> float:
        return self.arcs[-1].t_end if self.arcs else 0.0

    def switch_line(self, new_mode: Mode) -> float:
        return self.x_param if new_mode is Mode.R else -self.x_param

    def returns(self) -> List[float]:
        """y at every switch back into R, i.e. the iterates of the Poincare map."""
        return [ev.state[1] for ev, mode in self.events if mode is Mode.R]


def default_mode(x_param: float, init: State) -> Mode:
    """R on the +x_param line (and by default elsewhere), L on the -x_param line."""
    if x_param != 0.0 and init[0] == -x_param:
        return Mode.L
    return Mode.R


def simulate(model: ModelSpec, x_param: float, init: State,
             init_mode: Optional[Mode] = None, stop: StopRule = StopRule(),
             controls: ToleranceSet = DEFAULT_CONTROLS) -> HybridTrajectory:
    """Run the switched system from ``init`` (internal coordinates)."""
    x_param = float(x_param)
    if not math.isfinite(x_param):
        raise ValueError("x_param must be finite")
    mode = default_mode(x_param, init) if init_mode is None else init_mode
    traj = HybridTrajectory(initial_mode=mode, x_param=x_param)
    state = (float(init[0]), float(init[1]))
    t0 = 0.0
    n_switch = 0
    while True:
        if stop.max_switches is not None and n_switch >= stop.max_switches:
            return traj
        t_left = controls.t_budget
        if stop.max_time is not None:
            t_left = stop.max_time - t0
            if t_left <= 0:
                return traj
        target = traj.switch_line(mode.other)
        event, steps = _advance(model.field(mode), state, target, controls, model.box,
                                min(t_left, controls.t_budget))
        steps = [s.shifted(t0) for s in steps]
        traj.arcs.append(Arc(mode, steps))
        if event is None:
            if stop.max_time is not None and t_left <= controls.t_budget:
                return traj
            raise NoCrossing(
                f"mode {mode} never reached x={target!r} within t_budget={controls.t_budget:g}")
        event = event.shifted(t0)
        mode = mode.other
        traj.events.append((event, mode))
        n_switch += 1
        state = event.state
        t0 = event.t_star


# --------------------------------------------------------------------------
# export


def sample_rows(model: ModelSpec, traj: HybridTrajectory, dt: float,
                physical: bool = True) -> List[dict]:
    """Uniform samples every ``dt`` plus one flagged row per switch event."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    conv = model.to_physical if physical else (lambda s: s)
    rows = []
    ev_iter = iter(traj.events)
    for k, arc in enumerate(traj.arcs):
        if not arc.steps:
            continue
        if k == 0:
            x, y = conv(arc.start)
            rows.append({"t": arc.t_start, "x": x, "y": y, "mode": str(arc.mode), "event": 0})
        n0 = math.floor(arc.t_start / dt) + 1
        n1 = math.ceil(arc.t_end / dt)
        i = 0
        for n in range(n0, n1):
            t = n * dt
            while arc.steps[i].t_end < t:
                i += 1
            x, y = conv(arc.steps[i](t))
            rows.append({"t": t, "x": x, "y": y, "mode": str(arc.mode), "event": 0})
        ev = next(ev_iter, None)
        if ev is not None:
            event, new_mode = ev
            x, y = conv(event.state)
            rows.append({"t": event.t_star, "x": x, "y": y, "mode": str(new_mode), "event": 1})
        else:
            x, y = conv(arc.end)
            rows.append({"t": arc.t_end, "x": x, "y": y, "mode": str(arc.mode), "event": 0})
    return rows


def write_rows(rows: Sequence[dict], columns: Sequence[str], fmt: str = "csv") -> str:
    """Serialise rows as CSV or JSON lines; floats use repr so output is exact."""
    def cell(v):
        return repr(v) if isinstance(v, float) else v

    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([cell(r.get(c, "")) for c in columns])
    elif fmt == "jsonl":
        for r in rows:
            buf.write(json.dumps({c: r.get(c) for c in columns}, allow_nan=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()


TRAJECTORY_COLUMNS = ("t", "x", "y", "mode", "event")
