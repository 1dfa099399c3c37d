"""Closed forms for isoparametric hypersurfaces (rank 2, dihedral chamber).

Points of the normal plane are written ``r (cos t, sin t)`` with the chamber
the sector ``0 < t < pi/g``; ``e^{it}`` maps to ``(cos t, sin t)`` and
``i e^{it}`` to ``(-sin t, cos t)``. ``delta = (m2 - m1)/(m2 + m1)`` measures
the multiplicity asymmetry and ``cos(g t_min) = -delta`` locates the minimal
hypersurface.

The spherical flow satisfies the exact law
``cos(g theta(t)) + delta = exp(g n t) (cos(g theta0) + delta)``; most series
here are evaluated through ``u = cos(g theta) + delta`` directly, which keeps
``|H|`` accurate near the minimal point where ``cot + delta csc`` cancels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .root_system import (ChamberError, ValidationError, check_dihedral_multiplicities,
                          dihedral_roots)

CLAMP_TOL = 1e-14
FIXED_POINT_TOL = 1e-13
M_PLUS = "M_plus"
M_MINUS = "M_minus"


class DomainError(ValueError):
    """Requested time is past the collapse of the flow."""

    def __init__(self, msg, t_plus=None, t_minus=None):
        super().__init__(msg)
        self.t_plus = t_plus
        self.t_minus = t_minus


@dataclass(frozen=True)
class Rank2Config:
    """Multiplicity data ``(g, m1, m2)`` and initial angle ``theta0``.

    ``theta0=None`` selects the minimal angle. ``checked=False`` skips the
    multiplicity rules (they are still required to give integral ``n``).
    """

    g: int
    m1: int
    m2: int
    theta0: Optional[float] = None
    checked: bool = True

    def __post_init__(self):
        g, m1, m2 = int(self.g), int(self.m1), int(self.m2)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)
        if self.checked:
            check_dihedral_multiplicities(g, m1, m2)
        elif g < 1 or m1 < 1 or m2 < 1:
            raise ValidationError("g, m1, m2 must be positive integers")
        if (g * (m1 + m2)) % 2:
            raise ValidationError(f"g(m1+m2) = {g * (m1 + m2)} must be even")
        if self.theta0 is None:
            object.__setattr__(self, "theta0", self.theta_min)
        t0 = float(self.theta0)
        object.__setattr__(self, "theta0", t0)
        if not (0.0 < t0 < math.pi / g):
            raise ValidationError(f"theta0={t0!r} outside the chamber (0, pi/{g})")

    @property
    def n(self) -> int:
        return self.g * (self.m1 + self.m2) // 2

    @property
    def delta(self) -> float:
        if self.g == 1:
            return 0.0
        return (self.m2 - self.m1) / (self.m2 + self.m1)

    @property
    def theta_min(self) -> float:
        return math.acos(-self.delta) / self.g

    @property
    def u0(self) -> float:
        """``cos(g theta0) + delta``; zero exactly at the minimal angle."""
        return math.cos(self.g * self.theta0) + self.delta

    @property
    def is_minimal(self) -> bool:
        return abs(self.u0) < FIXED_POINT_TOL

    def with_theta0(self, theta0) -> "Rank2Config":
        return replace(self, theta0=theta0)

    def root_system(self):
        return dihedral_roots(self.g, self.m1, self.m2, checked=self.checked)

    def to_dict(self) -> dict:
        return {"g": self.g, "m1": self.m1, "m2": self.m2, "theta0": self.theta0,
                "n": self.n, "delta": self.delta, "theta_min": self.theta_min}


def theta_min(cfg: Rank2Config) -> float:
    return cfg.theta_min


@dataclass(frozen=True)
class Collapse:
    time: float
    target: str


def collapse_times(cfg: Rank2Config) -> Optional[Collapse]:
    """Collapse time of the spherical flow and the focal target it reaches.

    None for the minimal (stationary) initial angle.
    """
    if cfg.is_minimal:
        return None
    d, u0 = cfg.delta, cfg.u0
    if u0 > 0:
        return Collapse(math.log((d + 1) / u0) / (cfg.g * cfg.n), M_PLUS)
    return Collapse(math.log((d - 1) / u0) / (cfg.g * cfg.n), M_MINUS)


def euclidean_collapse_time(cfg: Rank2Config) -> Collapse:
    """Collapse time of the Euclidean flow from ``(cos theta0, sin theta0)``.

    The minimal family shrinks to the origin at ``1/(2n)``; otherwise the
    angle reaches a chamber wall first.
    """
    n, g, d, u0 = cfg.n, cfg.g, cfg.delta, cfg.u0
    if cfg.is_minimal:
        return Collapse(1.0 / (2 * n), "origin")
    wall = d + 1 if u0 > 0 else d - 1
    return Collapse((1.0 - (u0 / wall) ** (2.0 / g)) / (2 * n), M_PLUS if u0 > 0 else M_MINUS)


def _angle_from_cos(cfg: Rank2Config, c: float, t: float) -> float:
    if abs(c) > 1.0:
        if abs(c) - 1.0 > CLAMP_TOL:
            col = collapse_times(cfg)
            tp = col.time if col and col.target == M_PLUS else None
            tm = col.time if col and col.target == M_MINUS else None
            raise DomainError(f"t={t!r} is past the collapse of the flow", tp, tm)
        c = math.copysign(1.0, c)
    return math.acos(c) / cfg.g


def spherical_theta(cfg: Rank2Config, t: float) -> float:
    """Angle of the spherical flow at time ``t``."""
    if cfg.is_minimal:
        return cfg.theta0
    return _angle_from_cos(cfg, math.exp(cfg.g * cfg.n * t) * cfg.u0 - cfg.delta, t)


def euclidean_solution(cfg: Rank2Config, t: float) -> tuple:
    """``(r, theta)`` of the Euclidean flow from the unit point at angle ``theta0``."""
    s = 1.0 - 2.0 * cfg.n * t
    if not s > 0.0:
        raise DomainError(f"t={t!r} is past the extinction time 1/(2n)")
    r = math.sqrt(s)
    if cfg.is_minimal:
        return r, cfg.theta0
    return r, _angle_from_cos(cfg, s ** (-cfg.g / 2) * cfg.u0 - cfg.delta, t)


def spherical_time_of(cfg: Rank2Config, t_euclid: float) -> float:
    """Spherical time matching Euclidean time ``t`` (``-ln(1-2nt)/(2n)``)."""
    return -math.log1p(-2.0 * cfg.n * t_euclid) / (2.0 * cfg.n)


def theta_velocity(cfg: Rank2Config, theta: float) -> float:
    """``d theta/dt = -n (cot g theta + delta csc g theta)`` for the spherical flow."""
    gt = cfg.g * theta
    return -cfg.n * (math.cos(gt) + cfg.delta) / math.sin(gt)


def _check_angle(cfg, theta):
    if not (0.0 < theta < math.pi / cfg.g):
        raise ChamberError(f"theta={theta!r} is not inside (0, pi/{cfg.g})")


def mean_curvature_closed(cfg: Rank2Config, r: float, theta: float) -> tuple:
    """Euclidean and spherical mean curvature vectors at ``r e^{i theta}``."""
    _check_angle(cfg, theta)
    gt = cfg.g * theta
    q = (math.cos(gt) + cfg.delta) / math.sin(gt)
    e = np.array([math.cos(theta), math.sin(theta)])
    ie = np.array([-math.sin(theta), math.cos(theta)])
    c = cfg.n / r
    return -c * (e + q * ie), -c * q * ie


def shape_norms_closed(cfg: Rank2Config, r: float, theta: float) -> tuple:
    """``(|A^E|^2, |A^S|^2)`` at ``r e^{i theta}``."""
    _check_angle(cfg, theta)
    gt = cfg.g * theta
    c, s2 = math.cos(gt), math.sin(gt) ** 2
    g, d = cfg.g, cfg.delta
    a2e = cfg.n * g / r ** 2 * (1.0 + d * c) / s2
    # written without subtracting n/r^2, which cancels for g = 1 near the minimal angle
    return a2e, cfg.n / r ** 2 * (g - 1 + g * d * c + c * c) / s2


def phi_closed(cfg: Rank2Config, theta: float, r: float = 1.0) -> float:
    """Squared norm of the traceless spherical shape operator."""
    _check_angle(cfg, theta)
    g, d = cfg.g, cfg.delta
    c = math.cos(g * theta)
    return cfg.n / r ** 2 * (g - 1 - d * d + d * (g - 2) * c) / math.sin(g * theta) ** 2


def traceless_identity(cfg: Rank2Config, r: float, theta: float) -> tuple:
    """Both sides of ``|A^S|^2 - (g/2n)|H^S|^2 = (n/2r^2)(g(1-d^2)csc^2 g t + g - 2)``.

    The left side is assembled from :func:`shape_norms_closed` and
    :func:`mean_curvature_closed`.
    """
    g, n, d = cfg.g, cfg.n, cfg.delta
    _, a2s = shape_norms_closed(cfg, r, theta)
    _, hs = mean_curvature_closed(cfg, r, theta)
    lhs = a2s - g / (2 * n) * float(hs @ hs)
    rhs = n / (2 * r ** 2) * (g * (1 - d * d) / math.sin(g * theta) ** 2 + g - 2)
    return lhs, rhs


def torus_excess(n: int, theta: float) -> float:
    """``((n-2)/(n-1)) tan^2 theta`` for the (1, n-1) torus family."""
    return (n - 2) / (n - 1) * math.tan(theta) ** 2


@dataclass(frozen=True)
class LimitConstants:
    a2_limit: float
    c0: float
    degenerate: bool


def limit_constants(cfg: Rank2Config) -> LimitConstants:
    """Backward limits: ``|A|^2 -> (g-1)n`` and ``H^2 e^{-2gnt} -> C0``.

    ``C0 = n^2 (cos g theta0 + delta)^2 / (1 - delta^2)``; it vanishes (and is
    flagged degenerate) at the minimal angle.
    """
    a2 = float((cfg.g - 1) * cfg.n)
    if cfg.is_minimal:
        return LimitConstants(a2, 0.0, True)
    return LimitConstants(a2, cfg.n ** 2 * cfg.u0 ** 2 / (1 - cfg.delta ** 2), False)


@dataclass(frozen=True)
class SphericalSeries:
    """Closed-form spherical flow sampled on a time grid."""

    t: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    h2: np.ndarray
    a2: np.ndarray
    phi: np.ndarray


def spherical_series(cfg: Rank2Config, times) -> SphericalSeries:
    """Angle, ``|H^S|^2``, ``|A^S|^2`` and ``phi`` along the closed-form flow (r = 1).

    ``u = cos g theta + delta`` is taken from the exact exponential law, so
    ``|H|^2 = n^2 u^2 / sin^2 g theta`` keeps full relative accuracy as the
    flow approaches the minimal point.
    """
    t = np.asarray(times, dtype=float)
    g, n, d = cfg.g, cfg.n, cfg.delta
    if cfg.is_minimal:
        u = np.zeros_like(t)
    else:
        u = np.exp(g * n * t) * cfg.u0
    c = u - d
    if np.any(np.abs(c) > 1.0 + CLAMP_TOL):
        col = collapse_times(cfg)
        raise DomainError("time grid runs past the collapse of the flow",
                          *((col.time, None) if col.target == M_PLUS else (None, col.time)))
    c = np.clip(c, -1.0, 1.0)
    theta = np.arccos(c) / g if not cfg.is_minimal else np.full_like(t, cfg.theta0)
    s2 = (1.0 - c) * (1.0 + c)
    h2 = n * n * u * u / s2
    a2 = n * (g - 1 + g * d * c + c * c) / s2
    phi = n * (g - 1 - d * d + d * (g - 2) * c) / s2
    return SphericalSeries(t, theta, u, h2, a2, phi)


def closed_form_trajectory(cfg: Rank2Config, times, kind: str = "spherical"):
    """Exact trajectory on ``times`` as a :class:`~isoflow.trajectory.FlowTrajectory`."""
    from .trajectory import CONVERGED, REACHED_END, FlowTrajectory, Termination

    times = np.asarray(times, dtype=float)
    if kind == "spherical":
        th = spherical_series(cfg, times).theta
        pts = np.column_stack([np.cos(th), np.sin(th)])

        def dense(t):
            a = spherical_theta(cfg, t)
            return np.array([math.cos(a), math.sin(a)])
    elif kind == "euclidean":
        rt = [euclidean_solution(cfg, t) for t in times]
        pts = np.array([[r * math.cos(a), r * math.sin(a)] for r, a in rt])

        def dense(t):
            r, a = euclidean_solution(cfg, t)
            return np.array([r * math.cos(a), r * math.sin(a)])
    else:
        raise ValueError(f"unknown flow kind {kind!r}")
    end = Termination(REACHED_END, float(times[-1]))
    start = Termination(CONVERGED if cfg.is_minimal and kind == "spherical" else REACHED_END,
                        float(times[0]))
    return FlowTrajectory(kind, cfg.root_system(), times, pts, end, start,
                          source="closed_form", dense=dense, rank2=cfg)


def sum_cot(g: int, beta: float) -> float:
    """``sum_{k=1}^g cot(k pi/g + beta)`` evaluated term by term."""
    terms = []
    for k in range(1, g + 1):
        a = k * math.pi / g + beta
        s = math.sin(a)
        if abs(s) < 1e-12:
            raise ValueError(f"beta={beta!r} is within 1e-12 of a pole (k={k})")
        terms.append(math.cos(a) / s)
    return math.fsum(terms)


def sum_cot_sq(g: int, beta: float) -> float:
    """``sum_{k=1}^g cot^2(k pi/g + beta)`` evaluated term by term."""
    terms = []
    for k in range(1, g + 1):
        a = k * math.pi / g + beta
        s = math.sin(a)
        if abs(s) < 1e-12:
            raise ValueError(f"beta={beta!r} is within 1e-12 of a pole (k={k})")
        terms.append((math.cos(a) / s) ** 2)
    return math.fsum(terms)


def sum_cot_closed(g: int, beta: float) -> float:
    """``g cot(g beta)``."""
    return g / math.tan(g * beta)


def sum_cot_sq_closed(g: int, beta: float) -> float:
    """``g^2 csc^2(g beta) - g``."""
    return g * g / math.sin(g * beta) ** 2 - g
