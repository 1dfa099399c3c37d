"""Flow trajectory containers shared by the ODE and closed-form paths."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

REACHED_END = "reached_end"
COLLAPSED = "collapsed"
CONVERGED = "converged_to_fixed_point"


@dataclass(frozen=True)
class Termination:
    """Why one end of a trajectory stopped.

    ``t_hit``/``wall_index`` are set for collapse; ``point`` for convergence.
    """

    reason: str
    t: float
    t_hit: Optional[float] = None
    wall_index: Optional[int] = None
    point: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        d = {"reason": self.reason, "t": self.t}
        if self.t_hit is not None:
            d["t_hit"] = self.t_hit
        if self.wall_index is not None:
            d["wall_index"] = self.wall_index
        if self.point is not None:
            d["point"] = np.asarray(self.point).tolist()
        return d


@dataclass(frozen=True, eq=False)
class FlowTrajectory:
    """Time grid, chamber points and termination record of one flow.

    ``termination`` describes the late end (``t_end`` side) unless the span
    is purely backward, in which case it describes the early end.
    ``start`` always describes the early end. ``dense`` evaluates the flow
    at any time inside ``[times[0], times[-1]]``; a backward end that
    converged to a fixed point is held constant before ``times[0]``.
    """

    kind: str
    root_system: object
    times: np.ndarray
    points: np.ndarray
    termination: Termination
    start: Termination
    source: str = "ode"
    dense: Optional[Callable] = None
    rank2: object = None
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("times", "points"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.root_system.n

    def __len__(self):
        return len(self.times)

    def __call__(self, t):
        """Evaluate at scalar or array ``t``."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.times[0], self.times[-1]
        out = np.empty((ts.size, self.points.shape[1]))
        for i, ti in enumerate(ts):
            if ti < lo and self.start.reason == CONVERGED:
                out[i] = self.points[0]
            elif ti < lo - 1e-12 * max(1.0, abs(lo)) or ti > hi + 1e-12 * max(1.0, abs(hi)):
                raise ValueError(f"t={ti!r} outside trajectory span [{lo!r}, {hi!r}]")
            elif self.dense is not None:
                out[i] = self.dense(min(max(ti, lo), hi))
            else:
                out[i] = [np.interp(ti, self.times, self.points[:, j]) for j in range(self.points.shape[1])]
        return out[0] if scalar else out

    def angles(self) -> np.ndarray:
        """Polar angle of every stored point (rank 2)."""
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    def radii(self) -> np.ndarray:
        return np.sqrt(np.einsum("ij,ij->i", self.points, self.points))

    def termination_dict(self) -> dict:
        return {"end": self.termination.to_dict(), "start": self.start.to_dict()}


def fmt_time(t: float) -> str:
    return "-inf" if t == -math.inf else repr(float(t))
