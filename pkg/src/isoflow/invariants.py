"""Audits of curvature estimates along isoparametric spherical flows.

Each audit returns an :class:`EstimateAudit` whose ``witness`` carries the
fitted constants and margins whether or not the estimate holds. Rank-2
closed-form trajectories are evaluated with the exact closed forms; any other
trajectory goes through the root-sum oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rank2
from .curvature import curvature_report
from .rank2 import Rank2Config, collapse_times, limit_constants, phi_closed, spherical_series
from .root_system import ValidationError
from .trajectory import FlowTrajectory

HS_RATIO_BOUNDED = "HS_ratio_bounded"
HS_EXPONENTIAL = "HS_exponential"
HS_TRACELESS = "HS_traceless"
RATIO_ENVELOPE = "ratio_envelope"
PHI_BAND = "phi_band"
SHARPNESS = "sharpness"
RATIO_CHAIN = "ratio_chain"
ANCIENT_LIMITS = "ancient_limits"

ENVELOPE_SLACK = 1e-9
TRACELESS_TOL = 1e-12


class AuditUndefined(ValueError):
    """The audited quantity is undefined (e.g. H vanishes identically)."""


@dataclass
class EstimateAudit:
    condition_id: str
    holds: bool
    witness: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"condition_id": self.condition_id, "holds": bool(self.holds),
                "witness": _jsonable(self.witness)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class _Series:
    t: np.ndarray
    a2: np.ndarray
    h2: np.ndarray
    g: int
    n: int
    source: str
    cfg: Rank2Config = None


def flow_series(traj: FlowTrajectory) -> _Series:
    """``|A^S|^2`` and ``|H^S|^2`` along a spherical trajectory."""
    if traj.kind != "spherical":
        raise ValidationError("curvature audits need a spherical trajectory")
    cfg = traj.rank2
    if traj.source == "closed_form" and cfg is not None:
        s = spherical_series(cfg, traj.times)
        return _Series(np.array(traj.times), s.a2, s.h2, cfg.g, cfg.n, "closed_form", cfg)
    rs = traj.root_system
    reps = [curvature_report(rs, p) for p in traj.points]
    a2 = np.array([r.a2_spherical for r in reps])
    h2 = np.array([r.h2_spherical for r in reps])
    if cfg is None:
        found = rs.as_rank2()
        if found is not None:
            g, m1, m2 = found
            cfg = Rank2Config(g, m1, m2, theta0=float(np.arctan2(traj(0.0)[1], traj(0.0)[0])),
                              checked=False)
    return _Series(np.array(traj.times), a2, h2, rs.g, rs.n, "ode", cfg)


def _past(series):
    keep = series.t <= 0.0
    return series.t[keep], series.a2[keep], series.h2[keep]


def _tail(t):
    """Indices of the most-negative half of a time grid."""
    k = max(2, (len(t) + 1) // 2)
    return np.argsort(t)[:k]


def audit_hs_conditions(traj: FlowTrajectory) -> list:
    """Evaluate the three shrinking-cap rigidity conditions along a spherical flow.

    Returns audits for ``0 < |A|^2 < C|H|^2`` (fitted C and growth trend),
    ``|A|^2 < e^{-Bt}|H|^2`` (infimum B over the tail; holds iff B < 4n) and
    ``|A|^2 - |H|^2/(n-1) <= 2`` (max excess).
    """
    s = flow_series(traj)
    t, a2, h2 = _past(s)
    if len(t) < 4:
        raise ValidationError("need at least four samples with t <= 0")
    if t.min() > -3.0 / (s.g * s.n):
        raise ValidationError(f"trajectory must reach t <= -3/(gn) = {-3.0 / (s.g * s.n)!r}")
    if np.max(h2) < 1e-24:
        raise AuditUndefined("mean curvature vanishes along the flow (stationary); ratio conditions undefined")
    n = s.n
    order = np.argsort(t)
    t, a2, h2 = t[order], a2[order], h2[order]
    ratio = a2 / h2
    tail = _tail(t)
    out = []

    c_fit = float(np.max(ratio[tail]))
    mid = tail[-1]
    slope = float((math.log(ratio[0]) - math.log(ratio[mid])) / (t[0] - t[mid]))
    growing = slope < -1e-6
    out.append(EstimateAudit(HS_RATIO_BOUNDED, bool(np.all(a2 > 0) and not growing), {
        "C_fit": c_fit, "log_ratio_slope": slope, "unbounded_trend": growing,
        "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max()), "source": s.source}))

    neg = tail[t[tail] < 0]
    b_vals = np.log(ratio[neg]) / (-t[neg])
    b_fit = float(np.max(b_vals))
    out.append(EstimateAudit(HS_EXPONENTIAL, b_fit < 4 * n, {
        "B_fit": b_fit, "B_bound": 4.0 * n, "B_limit": 2.0 * s.g * n,
        "t_tail": [float(t[neg].min()), float(t[neg].max())], "source": s.source}))

    if n < 2:
        raise AuditUndefined("the traceless condition needs n >= 2")
    excess = a2 - h2 / (n - 1) - 2.0
    i = int(np.argmax(excess))
    # the (1, n-1) torus family attains equality at n = 2; allow rounding
    tol = TRACELESS_TOL * max(1.0, float(np.max(a2)))
    out.append(EstimateAudit(HS_TRACELESS, bool(excess[i] <= tol), {
        "max_excess": float(excess[i]), "tolerance": tol, "t_at_max": float(t[i]),
        "excess_at_earliest": float(excess[0]), "source": s.source}))
    return out


def ratio_envelope(traj: FlowTrajectory) -> EstimateAudit:
    """Fit ``c2 e^{-2gnt} <= |A|^2/H^2 <= c1 e^{-2gnt}`` over the tail of the grid."""
    s = flow_series(traj)
    t, a2, h2 = _past(s)
    order = np.argsort(t)
    t, a2, h2 = t[order], a2[order], h2[order]
    if np.max(h2) < 1e-24:
        raise AuditUndefined("mean curvature vanishes along the flow (stationary)")
    ratio = a2 / h2
    g, n = s.g, s.n
    if g == 1:
        return EstimateAudit(RATIO_ENVELOPE, True, {
            "branch": "g=1", "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max()),
            "expected": 1.0 / n, "source": s.source})
    prod = ratio * np.exp(2 * g * n * t)
    tail = _tail(t)
    c1 = float(prod[tail].max())
    c2 = float(prod[tail].min())
    inside = (prod >= c2 * (1 - ENVELOPE_SLACK)) & (prod <= c1 * (1 + ENVELOPE_SLACK))
    j = int(np.argmin(inside)) - 1 if not inside.all() else len(t) - 1
    theory = None
    if s.cfg is not None and not s.cfg.is_minimal:
        theory = (g - 1) * n / limit_constants(s.cfg).c0
    ok = math.isfinite(c1) and math.isfinite(c2) and c1 > 0 and c2 > 0
    return EstimateAudit(RATIO_ENVELOPE, ok, {
        "c1": c1, "c2": c2, "t1": float(-t[j]), "tail_limit_theory": theory,
        "tail_product_earliest": float(prod[0]), "source": s.source})


def ratio_chain_audit(cfg: Rank2Config, times) -> EstimateAudit:
    """Strict bound ``(2n/g)|A|^2/|H|^2 < 2(1+d)/(cos g t0 + d)^2 e^{-2gnt}``.

    Both sides share the factor ``1/u^2`` with ``u = cos g theta + d``, so the
    relative margin ``1 - lhs/rhs = 1 - |A|^2 sin^2(g theta)/(g n (1+d))`` is
    evaluated without cancellation.
    """
    if cfg.is_minimal:
        raise AuditUndefined("stationary flow: H vanishes")
    s = spherical_series(cfg, times)
    c = s.u - cfg.delta
    s2 = (1 - c) * (1 + c)
    margin = 1.0 - s.a2 * s2 / (cfg.g * cfg.n * (1 + cfg.delta))
    i = int(np.argmin(margin))
    return EstimateAudit(RATIO_CHAIN, bool(margin[i] > 0), {
        "min_margin": float(margin[i]), "t_at_min": float(s.t[i]), "samples": len(s.t)})


def ancient_limits_audit(cfg: Rank2Config) -> EstimateAudit:
    """``H^2 e^{-2gnt} -> C0`` (1% at t = -10/(gn)) and ``|A|^2 -> (g-1)n`` (1e-4 at -20/(gn))."""
    lim = limit_constants(cfg)
    g, n = cfg.g, cfg.n
    t10, t20 = -10.0 / (g * n), -20.0 / (g * n)
    s10 = spherical_series(cfg, [t10])
    s20 = spherical_series(cfg, [t20])
    a2_err = abs(float(s20.a2[0]) - lim.a2_limit)
    if lim.degenerate:
        return EstimateAudit(ANCIENT_LIMITS, a2_err <= 1e-4, {
            "C0": 0.0, "degenerate": True, "A2_limit": lim.a2_limit, "A2_abs_err": a2_err})
    h_rel = abs(float(s10.h2[0]) * math.exp(-2 * g * n * t10) - lim.c0) / lim.c0
    return EstimateAudit(ANCIENT_LIMITS, bool(h_rel <= 1e-2 and a2_err <= 1e-4), {
        "C0": lim.c0, "H2_rel_err": h_rel, "A2_limit": lim.a2_limit, "A2_abs_err": a2_err,
        "t_H": t10, "t_A": t20})


def _band(cfg: Rank2Config, eps: float, side: int):
    g, n = cfg.g, cfg.n
    base = (g - 1) * n
    if cfg.delta > 0 and side < 0:
        return (g - 1 - eps) * n, base
    return base, (g - 1 + eps) * n


def _window_radius(cfg: Rank2Config, eps: float, side: int, grid: int = 20000) -> float:
    """Distance from the minimal angle to the first band exit on one side."""
    lo, hi = _band(cfg, eps, side)
    tm = cfg.theta_min
    reach = tm if side < 0 else math.pi / cfg.g - tm
    slack = 1e-12 * max(1.0, abs(hi))

    def inside(c):
        ph = phi_closed(cfg, tm + side * c)
        return lo - slack <= ph <= hi + slack

    cs = np.linspace(0, reach, grid + 1)[1:-1]
    prev = 0.0
    for c in cs:
        if not inside(c):
            a, b = prev, c
            while b - a > 1e-14:
                m = 0.5 * (a + b)
                if inside(m):
                    a = m
                else:
                    b = m
            return a
        prev = c
    return reach


def phi_band(cfg: Rank2Config, eps: float) -> tuple:
    """Largest window half-width ``c0`` around the minimal angle keeping ``phi`` in its band.

    For ``t <= 0`` the angle moves monotonically between ``theta0`` and the
    minimal angle, so a window is admissible iff ``phi_closed`` stays in the
    band on it. Returns ``(c0, audit)``; for ``delta > 0`` the two sides have
    different bands and ``c0`` is the smaller radius.
    """
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must lie in (0, 1), got {eps!r}")
    g, n = cfg.g, cfg.n
    if g == 1:
        return cfg.theta_min, EstimateAudit(PHI_BAND, True, {
            "branch": "g=1", "phi": 0.0, "c0": cfg.theta_min})
    sides = {}
    for side, name in ((-1, "below"), (1, "above")):
        c = float(_window_radius(cfg, eps, side))
        lo, hi = _band(cfg, eps, side)
        # spot-check along actual flows started inside the window
        th0 = cfg.theta_min + side * 0.5 * c
        flow_ok = True
        if 0 < th0 < math.pi / g and c > 0:
            ts = np.linspace(-30.0 / (g * n), 0.0, 301)
            ph = spherical_series(cfg.with_theta0(th0), ts).phi
            flow_ok = bool(np.all(ph >= lo - 1e-9 * hi) and np.all(ph <= hi + 1e-9 * hi))
        sides[name] = {"c0": c, "band": [lo, hi], "flow_check": flow_ok}
    c0 = min(v["c0"] for v in sides.values())
    holds = c0 > 0 and all(v["flow_check"] for v in sides.values())
    return c0, EstimateAudit(PHI_BAND, holds, {
        "eps": eps, "theta_min": cfg.theta_min, "delta": cfg.delta, "sides": sides, "c0": c0})


def sharpness_witness(g: int, n: int, m1: int, m2: int, t_start: float = -5.0,
                      samples: int = 2001) -> tuple:
    """Initial angle whose flow satisfies ``|A|^2 < e^{-2gnt}|H|^2`` for all sampled t.

    Picks the largest ``theta0`` with ``g(1+d)/(n(cos g theta0 + d)^2) < 1``
    (bisection), then audits the inequality on ``[t_start, 0.9 T+]`` using the
    closed-form flow.
    """
    if not n > g:
        raise ValidationError(f"need n > g (got n={n}, g={g})")
    if g * (m1 + m2) != 2 * n:
        raise ValidationError(f"n={n} does not match g(m1+m2)/2 = {g * (m1 + m2) / 2}")
    base = Rank2Config(g, m1, m2)
    d = base.delta

    def coeff(theta):
        return g * (1 + d) / (n * (math.cos(g * theta) + d) ** 2)

    lo, hi = 0.0, base.theta_min
    if not coeff(lo) < 1.0:
        raise ValidationError("no admissible theta0 (coefficient >= 1 at the wall)")
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if coeff(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    theta0 = lo
    if theta0 <= 0.0:
        raise ValidationError("no admissible theta0 found")
    cfg = base.with_theta0(theta0)
    t_plus = collapse_times(cfg).time
    ts = np.linspace(t_start, 0.9 * t_plus, samples)
    s = spherical_series(cfg, ts)
    # relative margin of |A|^2 < e^{-2gnt} |H|^2, written without overflow
    log_gap = np.log(s.h2) - 2 * g * n * ts - np.log(s.a2)
    margin = -np.expm1(-log_gap)
    i = int(np.argmin(margin))
    audit = EstimateAudit(SHARPNESS, bool(margin[i] > 0), {
        "theta0": theta0, "coefficient": coeff(theta0), "T_plus": t_plus,
        "t_range": [t_start, 0.9 * t_plus], "min_margin": float(margin[i]),
        "t_at_min": float(ts[i]), "exponent": 2 * g * n, "samples": samples})
    return theta0, audit


__all__ = [
    "EstimateAudit", "AuditUndefined", "audit_hs_conditions", "ratio_envelope",
    "ratio_chain_audit", "ancient_limits_audit", "phi_band", "sharpness_witness",
    "flow_series", "rank2",
]
