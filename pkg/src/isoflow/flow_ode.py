"""Euclidean and spherical mean curvature flow as an ODE in the Weyl chamber.

The Euclidean flow is ``x' = H^E(x)`` and the spherical flow ``y' = H^S(y)``
on the unit sphere of the normal space. ``|x(t)|^2 = |x0|^2 - 2nt`` along the
Euclidean flow, and the two flows are related by
``x(t) = sqrt(1-2nt) y(-ln(1-2nt)/(2n))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .curvature import mean_curvature_spherical
from .integrator import StepSizeUnderflow, integrate_direction
from .root_system import ChamberError, RootSystemData, ValidationError, as_vector, in_chamber
from .trajectory import COLLAPSED, CONVERGED, REACHED_END, FlowTrajectory, Termination

EUCLIDEAN = "euclidean"
SPHERICAL = "spherical"
KINDS = {EUCLIDEAN: kernels.EUCLIDEAN, SPHERICAL: kernels.SPHERICAL}

FIXED_POINT_TOL = 1e-11
EVENT_TOL = 1e-12


class IntegrationError(RuntimeError):
    """Integration failed; ``t`` and ``x`` hold the last good state."""

    def __init__(self, msg, t=None, x=None):
        super().__init__(msg)
        self.t = t
        self.x = x


class NoCollapse(RuntimeError):
    """The flow is stationary and never reaches a chamber wall."""


class MinimalPointError(RuntimeError):
    def __init__(self, msg, best=None, residual=None):
        super().__init__(msg)
        self.best = best
        self.residual = residual


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """Everything needed to integrate one flow.

    ``x0`` is the state at ``t = 0``; the span must contain 0. Negative
    times are reached by integrating backward from ``x0``.
    """

    kind: str
    root_system: RootSystemData
    x0: np.ndarray
    t_span: tuple
    rtol: float = 1e-10
    atol: float = 1e-12
    collapse_margin: float = 1e-8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {sorted(KINDS)}, got {self.kind!r}")
        x0 = as_vector(self.x0).copy()
        object.__setattr__(self, "x0", x0)
        t0, t1 = (float(v) for v in self.t_span)
        object.__setattr__(self, "t_span", (t0, t1))
        if not t0 < t1:
            raise ValidationError(f"t_start must be < t_end, got {self.t_span}")
        if not (t0 <= 0.0 <= t1):
            raise ValidationError(f"t_span must contain 0 (the initial time), got {self.t_span}")
        if not (self.rtol > 0 and self.atol > 0 and self.collapse_margin > 0):
            raise ValidationError("tolerances and collapse_margin must be positive")
        if x0.shape != (self.root_system.rank,):
            raise ValidationError(f"x0 must have length {self.root_system.rank}")
        inside, margin = in_chamber(self.root_system, x0)
        if not inside:
            raise ChamberError(f"x0 is outside the chamber (margin {margin:.3g})")
        if self.kind == SPHERICAL and abs(math.sqrt(math.fsum(x0 * x0)) - 1.0) > 1e-12:
            raise ValidationError("spherical flows need a unit initial point")


def _collapse_stop(rs, collapse_margin, direction):
    roots = rs.roots

    def stop(t, x, f):
        ip = roots @ x
        w = int(np.argmin(ip))
        m = float(ip[w])
        rate = float(roots[w] @ f) * direction
        if m < collapse_margin:
            return ("event", t, w)
        # margin^2 is smooth through the wall crossing, so a linear
        # extrapolation of it locates the hit time once it is close
        if rate < 0:
            tau = -m / (2 * rate)
            if tau <= EVENT_TOL:
                return ("event", t + direction * tau, w)
        return None

    return stop


def _converged_stop(t, x, f):
    if math.sqrt(math.fsum(f * f)) < FIXED_POINT_TOL:
        return ("converged",)
    return None


def _stiffness_cap(rs):
    """Step cap ``1/(|A^E|^2 + n)``, a bound on the inverse Jacobian norm.

    Backward spherical runs settle on the fixed point; without the cap the
    controller parks the step at the edge of the stability region and the
    residual stalls near 1e-10 instead of contracting.
    """
    roots, mult, n = rs.roots, rs.mult_array, float(rs.n)

    def cap(x):
        a2 = kernels.root_sums(roots, mult, x)[1]
        return 1.0 / (a2 + n) if a2 == a2 else math.inf

    return cap


def _run(spec, t_bound, stop, rtol):
    kind = KINDS[spec.kind]
    rs = spec.root_system
    cap = _stiffness_cap(rs) if spec.kind == SPHERICAL and t_bound < 0 else None
    return integrate_direction(kind, rs.roots, rs.mult_array, float(rs.n), spec.x0, 0.0,
                               t_bound, rtol, spec.atol, stop=stop, max_step=cap)


def _run_with_retry(spec, t_bound, stop):
    try:
        return _run(spec, t_bound, stop, spec.rtol)
    except StepSizeUnderflow:
        pass
    try:
        return _run(spec, t_bound, stop, spec.rtol / 2)
    except StepSizeUnderflow as exc:
        raise IntegrationError(f"step size underflow after retry: {exc}", exc.t, exc.x) from exc


def _localize(spec, res):
    """Refine a margin-threshold crossing inside the last step by bisection."""
    seg = res.dense.segments[-1]
    roots = spec.root_system.roots
    t_a, t_b = seg.t0, seg.t0 + seg.h

    def margin(t):
        return float(np.min(roots @ res.dense(t)))

    lo, hi = t_a, t_b  # margin(lo) >= threshold > margin(hi)
    while abs(hi - lo) > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= spec.collapse_margin:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), lo


def integrate(spec: FlowSpec) -> FlowTrajectory:
    """Integrate ``spec`` over its time span.

    Forward integration stops with ``collapsed`` when the chamber margin
    falls below ``collapse_margin`` or the wall is predicted within 1e-12
    in time; backward spherical integration stops with
    ``converged_to_fixed_point`` once ``|H^S| < 1e-11``.
    """
    t_start, t_end = spec.t_span
    rs = spec.root_system
    back = fwd = None
    if t_start < 0:
        back = _run_with_retry(spec, t_start, _converged_stop if spec.kind == SPHERICAL else None)
    if t_end > 0:
        fwd = _run_with_retry(spec, t_end, _collapse_stop(rs, spec.collapse_margin, 1.0))

    times, points = [], []
    start = Termination(REACHED_END, t_start)
    end = Termination(REACHED_END, t_end)
    conv_t = None
    if back is not None:
        bt, bp = list(back.times), list(back.points)
        if back.status == "converged":
            conv_t = bt[-1]
            held = _limit_point(rs, np.array(bp[-1]))
            start = Termination(CONVERGED, float(conv_t), point=held)
            if conv_t > t_start:
                bt.append(t_start)
                bp.append(held)
        times.extend(reversed(bt))
        points.extend(reversed(bp))
    else:
        times.append(0.0)
        points.append(spec.x0.copy())
    if fwd is not None:
        ft, fp = list(fwd.times), list(fwd.points)
        if fwd.status == "event":
            t_hit, wall = fwd.t_event, fwd.wall
            if float(np.min(rs.roots @ fp[-1])) < spec.collapse_margin:
                t_hit, t_keep = _localize(spec, fwd)
                ft[-1] = t_keep
                fp[-1] = fwd.dense(t_keep)
            end = Termination(COLLAPSED, float(ft[-1]), t_hit=float(t_hit), wall_index=int(wall))
        times.extend(ft[1:])
        points.extend(fp[1:])
    if fwd is None:
        end = start

    def dense(t):
        if t < 0:
            if conv_t is not None and t <= conv_t:
                return start.point.copy()
            return back.dense(t)
        if t == 0 or fwd is None or not fwd.dense.segments:
            return spec.x0.copy()
        return fwd.dense(min(t, times[-1]))

    stats = {
        "backend": kernels.BACKEND,
        "steps": (back.n_steps if back else 0) + (fwd.n_steps if fwd else 0),
        "rejected": (back.n_rejected if back else 0) + (fwd.n_rejected if fwd else 0),
    }
    return FlowTrajectory(spec.kind, rs, np.array(times), np.array(points), end, start,
                          source="ode", dense=dense, stats=stats)


_LIMITS = {}


def _limit_point(rs, last):
    """The minimal point if ``last`` is within 1e-8 of it, else ``last``.

    Held values before the convergence time then coincide exactly across
    flows of one family; the last integrated states differ near 1e-13.
    """
    key = (rs.roots.tobytes(), tuple(rs.multiplicities))
    if key not in _LIMITS:
        try:
            _LIMITS[key] = find_minimal_point(rs)
        except MinimalPointError:
            _LIMITS[key] = None
    z = _LIMITS[key]
    if z is not None and float(np.linalg.norm(z - last)) <= 1e-8:
        return z.copy()
    return last


def collapse_time(spec: FlowSpec) -> float:
    """Time at which the forward flow from ``spec.x0`` hits a chamber wall.

    The span of ``spec`` is ignored: the Euclidean flow is run up to its
    extinction bound ``|x0|^2/(2n)`` and the spherical flow until collapse.
    Raises :class:`NoCollapse` for stationary (minimal) spherical data.

    Euclidean data with a minimal direction moves homothetically and
    collapses to the origin at exactly ``|x0|^2/(2n)``, which is returned
    directly. Integrating that case is ill-conditioned: rounding in the
    angle grows like ``(1-2nt)^(-g/2)``, so the numerical path reaches a
    wall about ``T0 * eps^(2/g)`` early (near 5e-7 for g = 6).
    """
    rs = spec.root_system
    x0 = spec.x0
    rr = math.fsum(x0 * x0)
    minimal = float(np.linalg.norm(mean_curvature_spherical(rs, x0 / math.sqrt(rr)))) < FIXED_POINT_TOL
    if spec.kind == SPHERICAL:
        if minimal:
            raise NoCollapse("initial point is minimal; the spherical flow is stationary")
        bound = 1e6
    else:
        if minimal:
            return rr / (2 * rs.n)
        bound = rr / (2 * rs.n) * (1 + 1e-6)
    fspec = FlowSpec(spec.kind, rs, x0, (0.0, bound), spec.rtol, spec.atol, spec.collapse_margin)
    traj = integrate(fspec)
    if traj.termination.reason != COLLAPSED:
        raise IntegrationError(f"no collapse detected up to t={bound}", traj.times[-1], traj.points[-1])
    return traj.termination.t_hit


def euclidean_from_spherical(y_traj: FlowTrajectory, n: int, times) -> FlowTrajectory:
    """Resample a spherical trajectory as the Euclidean flow on ``times``.

    Uses ``x(t) = sqrt(1-2nt) y(-ln(1-2nt)/(2n))`` with dense output of ``y``.
    """
    if y_traj.kind != SPHERICAL:
        raise ValidationError("euclidean_from_spherical needs a spherical trajectory")
    times = np.asarray(times, dtype=float)
    if np.any(1.0 - 2.0 * n * times <= 0):
        raise ValidationError(f"times must satisfy t < 1/(2n) = {1 / (2 * n)!r}")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("times must be strictly increasing")
    s = 1.0 - 2.0 * n * times
    tau = -np.log(s) / (2.0 * n)
    pts = np.array([math.sqrt(si) * y_traj(ti) for si, ti in zip(s, tau)])

    def dense(t):
        st = 1.0 - 2.0 * n * t
        return math.sqrt(st) * y_traj(-math.log(st) / (2.0 * n))

    end = Termination(REACHED_END, float(times[-1]))
    start = Termination(REACHED_END, float(times[0]))
    return FlowTrajectory(EUCLIDEAN, y_traj.root_system, times, pts, end, start,
                          source=y_traj.source, dense=dense, rank2=y_traj.rank2)


def chamber_seed(rs: RootSystemData) -> np.ndarray:
    """A unit vector well inside the chamber.

    Rank 2: bisector of the two extreme rays of the sector. Higher rank: the
    maximizer of ``min_i <x, a_i>`` over the unit box (linear program).
    """
    if rs.rank == 2:
        rays = []
        for a in rs.roots:
            for r in (np.array([-a[1], a[0]]), np.array([a[1], -a[0]])):
                if np.all(rs.roots @ r >= -1e-12):
                    rays.append(r)
        if len(rays) >= 2:
            # the two extreme rays are the pair with the widest angle
            best = max(((i, j) for i in range(len(rays)) for j in range(i + 1, len(rays))),
                       key=lambda ij: -float(rays[ij[0]] @ rays[ij[1]]))
            v = rays[best[0]] + rays[best[1]]
            if np.linalg.norm(v) > 1e-12 and in_chamber(rs, v)[0]:
                return v / np.linalg.norm(v)
    k = rs.rank
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-rs.roots, np.ones((rs.g, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(rs.g),
                  bounds=[(-1, 1)] * k + [(None, 1)], method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise ChamberError("the chamber is empty for these roots")
    v = res.x[:k]
    return v / np.linalg.norm(v)


def _newton(rs, x, max_iter=100):
    """Damped Newton for the maximizer of ``sum m_i log<x,a_i> - n|x|^2/2``.

    Its unique critical point is the unit minimal point.
    """
    roots, mult, n = rs.roots, rs.mult_array, rs.n

    def objective(v):
        ip = roots @ v
        if np.any(ip <= 0):
            return -math.inf
        return math.fsum(mult * np.log(ip)) - 0.5 * n * math.fsum(v * v)

    for _ in range(max_iter):
        s, _, margin, _ = kernels.root_sums(roots, mult, x)
        F = s - n * x
        if math.sqrt(math.fsum(F * F)) < 1e-15 * n:
            break
        ip = roots @ x
        J = -(roots.T * (mult / ip ** 2)) @ roots - n * np.eye(rs.rank)
        d = -np.linalg.solve(J, F)
        slope = float(F @ d)
        phi0 = objective(x)
        step = 1.0
        while step > 1e-12:
            cand = x + step * d
            if objective(cand) >= phi0 + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break
        if np.allclose(cand, x, rtol=0, atol=0):
            break
        x = cand
    return x


def find_minimal_point(rs: RootSystemData, seed=None) -> np.ndarray:
    """Unit chamber point ``z`` whose parallel submanifold is minimal in the sphere.

    Seeded by a short backward spherical flow from ``seed`` (default
    :func:`chamber_seed`) and polished by damped Newton. Falls back to plain
    backward integration if Newton does not reach ``|H^S(z)| <= 1e-11``.
    """
    if seed is None:
        seed = chamber_seed(rs)
    seed = as_vector(seed)
    seed = seed / np.linalg.norm(seed)
    if not in_chamber(rs, seed)[0]:
        raise ChamberError("seed direction is outside the chamber")
    n = rs.n

    def residual(z):
        try:
            return float(np.linalg.norm(mean_curvature_spherical(rs, z)))
        except ChamberError:
            return math.inf

    def warm_stop(t, x, f):
        return ("converged",) if math.sqrt(math.fsum(f * f)) < 1e-3 else None

    warm = integrate_direction(kernels.SPHERICAL, rs.roots, rs.mult_array, float(n), seed,
                               0.0, -5.0 / n, 1e-8, 1e-10, stop=warm_stop)
    start = np.array(warm.points[-1])
    z = _newton(rs, start)
    z = z / np.linalg.norm(z)
    best, best_res = z, residual(z)
    if best_res <= FIXED_POINT_TOL:
        return best
    spec = FlowSpec(SPHERICAL, rs, start / np.linalg.norm(start), (-1e4 / n, 0.0))
    z = np.array(_run_with_retry(spec, spec.t_span[0], _converged_stop).points[-1])
    r = residual(z)
    if r < best_res:
        best, best_res = z, r
    if best_res <= FIXED_POINT_TOL:
        return best
    raise MinimalPointError(f"minimal point not found (best |H^S| = {best_res:.3g})", best, best_res)


@dataclass
class PairAudit:
    kind: str
    holds: bool
    value: float
    threshold: float
    times: np.ndarray
    series: np.ndarray

    def to_dict(self) -> dict:
        return {"kind": self.kind, "holds": self.holds, "value": self.value,
                "threshold": self.threshold, "samples": int(len(self.times))}


def pair_distance_audit(traj_a: FlowTrajectory, traj_b: FlowTrajectory, kind=None,
                        samples: int = 100) -> PairAudit:
    """Audit the distance between two flows of the same family.

    Euclidean: ``D(t) = |x_a - x_b|^2`` must be non-decreasing; the value is
    the minimum finite-difference ``dD/dt`` (must be >= -1e-9 max D).
    Spherical: ``f(a) <= f(0) e^{2na}`` for ``a <= 0``; the value is the max
    of ``f(a) e^{-2na} / f(0)`` (must be <= 1 + 1e-6).
    """
    kind = kind or traj_a.kind
    if traj_a.kind != kind or traj_b.kind != kind:
        raise ValidationError("both trajectories must be of the requested kind")
    if traj_a.root_system is not traj_b.root_system and (
            traj_a.root_system.multiplicities != traj_b.root_system.multiplicities
            or not np.allclose(traj_a.root_system.roots, traj_b.root_system.roots)):
        raise ValidationError("trajectories belong to different root systems")
    lo = max(traj_a.times[0], traj_b.times[0])
    hi = min(traj_a.times[-1], traj_b.times[-1])
    if kind == SPHERICAL:
        hi = min(hi, 0.0)
    if not lo < hi:
        raise ValidationError(f"time grids do not overlap ([{lo}, {hi}])")
    ts = np.linspace(lo, hi, samples)
    diff = traj_a(ts) - traj_b(ts)
    d = np.einsum("ij,ij->i", diff, diff)
    n = traj_a.n
    if kind == EUCLIDEAN:
        dd = np.diff(d) / np.diff(ts)
        thr = -1e-9 * float(d.max())
        val = float(dd.min())
        return PairAudit(kind, val >= thr, val, thr, ts, d)
    f0 = float(np.sum((traj_a(0.0) - traj_b(0.0)) ** 2))
    if f0 == 0.0:
        val = 0.0 if np.all(d == 0.0) else math.inf
    else:
        val = float(np.max(d * np.exp(-2 * n * ts) / f0))
    return PairAudit(kind, val <= 1 + 1e-6, val, 1 + 1e-6, ts, d)
