"""Adaptive Dormand-Prince 5(4) integration of the chamber flows.

The stepping loop lives here; single steps and field evaluations come from
:mod:`isoflow.kernels` (compiled when available). Spherical states are
renormalized after every accepted step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

# Dense output coefficients for the Dormand-Prince pair (Shampine's
# 4th-order interpolant), acting on powers sigma, sigma^2, sigma^3, sigma^4.
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class StepSizeUnderflow(RuntimeError):
    """The controller asked for a step below the time resolution."""

    def __init__(self, msg, t, x):
        super().__init__(msg)
        self.t = t
        self.x = x


@dataclass
class Segment:
    """One accepted step, enough to interpolate inside it."""

    t0: float
    h: float
    x0: np.ndarray
    Q: np.ndarray  # (k, 4) = K.T @ P

    def __call__(self, t):
        s = (t - self.t0) / self.h
        return self.x0 + self.h * (self.Q @ np.array([s, s * s, s ** 3, s ** 4]))


@dataclass
class DenseOutput:
    segments: list = field(default_factory=list)
    spherical: bool = False

    def __call__(self, t):
        segs = self.segments
        if not segs:
            raise ValueError("no steps recorded")
        forward = segs[0].h > 0
        lo, hi = 0, len(segs) - 1
        # binary search on segment start times (monotone in the step direction)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if (segs[mid].t0 <= t) if forward else (segs[mid].t0 >= t):
                lo = mid
            else:
                hi = mid - 1
        y = segs[lo](t)
        if self.spherical:
            y = y / math.sqrt(math.fsum(y * y))
        return y


@dataclass
class StepResult:
    """Raw output of :func:`integrate_direction`."""

    times: list
    points: list
    dense: DenseOutput
    status: str  # "end", "event", "converged"
    t_event: float = None
    wall: int = None
    n_steps: int = 0
    n_rejected: int = 0


def initial_step(kind, roots, mult, n, x, f0, direction, rtol, atol):
    """Standard starting-step heuristic (Hairer, Norsett and Wanner)."""
    scale = atol + np.abs(x) * rtol
    d0 = np.sqrt(np.mean((x / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    x1 = x + direction * h0 * f0
    f1 = kernels.field(kind, roots, mult, n, x1)
    if not np.all(np.isfinite(f1)):
        return h0 * 1e-3
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate_direction(kind, roots, mult, n, x0, t0, t_bound, rtol, atol,
                        stop=None, max_steps=1_000_000, max_step=None):
    """Integrate from ``t0`` towards ``t_bound`` (either direction).

    ``stop(t, x, f)`` is called after each accepted step and may return
    ``("event", t_event, wall)`` or ``("converged",)`` to terminate.
    ``max_step(x)``, if given, caps the step size at the current state.
    """
    roots = np.ascontiguousarray(roots, dtype=float)
    mult = np.ascontiguousarray(mult, dtype=float)
    spherical = kind == kernels.SPHERICAL
    direction = 1.0 if t_bound >= t0 else -1.0
    t = float(t0)
    x = np.array(x0, dtype=float)
    f = kernels.field(kind, roots, mult, n, x)
    dense = DenseOutput(spherical=spherical)
    res = StepResult([t], [x.copy()], dense, "end")
    if t == t_bound:
        return res
    if stop is not None:
        verdict = stop(t, x, f)
        if verdict is not None:
            return _apply_stop(res, verdict)
    h = initial_step(kind, roots, mult, n, x, f, direction, rtol, atol)
    while direction * (t_bound - t) > 0:
        if res.n_steps >= max_steps:
            raise StepSizeUnderflow(f"exceeded {max_steps} steps", t, x)
        min_h = 16 * np.spacing(abs(t)) if t != 0 else 1e-300
        if max_step is not None:
            h = min(h, max_step(x))
        h = min(h, abs(t_bound - t))
        if h < min_h:
            raise StepSizeUnderflow(f"step size {h:.3g} below resolution at t={t!r}", t, x)
        hs = direction * h
        x_new, f_new, K, err = kernels.dp5_step(kind, roots, mult, n, x, f, hs, rtol, atol)
        if not err <= 1.0:
            res.n_rejected += 1
            if math.isfinite(err):
                h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
            else:
                h *= 0.25
            continue
        factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
        t_new = t + hs if abs(t_bound - (t + hs)) > 0.5 * np.spacing(abs(t_bound)) else t_bound
        if direction * (t_new - t_bound) > 0:
            t_new = t_bound
        dense.segments.append(Segment(t, hs, x.copy(), K.T @ P))
        if spherical:
            x_new = x_new / math.sqrt(math.fsum(x_new * x_new))
            f_new = kernels.field(kind, roots, mult, n, x_new)
        t, x, f = t_new, x_new, f_new
        res.n_steps += 1
        res.times.append(t)
        res.points.append(x.copy())
        h *= factor
        if stop is not None:
            verdict = stop(t, x, f)
            if verdict is not None:
                return _apply_stop(res, verdict)
    return res


def _apply_stop(res, verdict):
    if verdict[0] == "event":
        res.status = "event"
        res.t_event = verdict[1]
        res.wall = verdict[2]
    else:
        res.status = "converged"
    return res
