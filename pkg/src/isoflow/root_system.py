"""Chamber data of an isoparametric submanifold.

A :class:`RootSystemData` holds the positive roots (unit vectors in the
normal space ``R^k``) and their multiplicities. The open Weyl chamber is the
cone ``{x : <x, a_i> > 0 for all i}``; the curvature normals at a chamber
point ``x`` are ``-a_i / <x, a_i>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-12
DISTINCT_TOL = 1e-9
DIHEDRAL_G = (1, 2, 3, 4, 6)


class ValidationError(ValueError):
    """Input data violates a structural rule."""


class ChamberError(ValueError):
    """A point is outside (or numerically on the boundary of) the chamber."""


def _dot(u, v) -> float:
    return math.fsum(float(a) * float(b) for a, b in zip(u, v))


@dataclass(frozen=True, eq=False)
class RootSystemData:
    """Positive roots and multiplicities.

    Use :meth:`from_roots`, :meth:`unchecked` or :func:`dihedral_roots`
    rather than the bare constructor.
    """

    roots: np.ndarray
    multiplicities: tuple
    label: str = ""

    def __post_init__(self):
        roots = np.array(self.roots, dtype=float)
        roots.setflags(write=False)
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "multiplicities", tuple(int(m) for m in self.multiplicities))

    @property
    def rank(self) -> int:
        return self.roots.shape[1]

    @property
    def g(self) -> int:
        return self.roots.shape[0]

    @property
    def dimension(self) -> int:
        return sum(self.multiplicities)

    n = dimension

    @property
    def mult_array(self) -> np.ndarray:
        return np.asarray(self.multiplicities, dtype=float)

    @classmethod
    def unchecked(cls, roots, multiplicities, normalize=True, label=""):
        """Build from raw data enforcing only the type invariants.

        Roots are normalized unless ``normalize`` is False; the raw form is
        meant for negative controls and is flagged by :func:`validate`.
        """
        roots = np.atleast_2d(np.asarray(roots, dtype=float))
        mults = [int(m) for m in multiplicities]
        if roots.ndim != 2 or roots.shape[0] == 0 or roots.shape[1] == 0:
            raise ValidationError("roots must be a non-empty g x k array")
        if len(mults) != roots.shape[0]:
            raise ValidationError(
                f"got {roots.shape[0]} roots but {len(mults)} multiplicities")
        if any(m < 1 for m in mults):
            raise ValidationError("multiplicities must be positive integers")
        if not np.all(np.isfinite(roots)):
            raise ValidationError("roots must be finite")
        norms = np.array([math.sqrt(_dot(r, r)) for r in roots])
        if np.any(norms == 0.0):
            raise ValidationError("zero vector is not a root")
        if normalize:
            roots = roots / norms[:, None]
        return cls(roots, tuple(mults), label)

    @classmethod
    def from_roots(cls, roots, multiplicities, label=""):
        """Normalize the roots and require unit norm and pairwise distinctness."""
        rs = cls.unchecked(roots, multiplicities, label=label)
        report = validate(rs)
        if not report.distinct:
            raise ValidationError(
                f"roots are not pairwise distinct (min angle {report.min_angle:.3g})")
        return rs

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "roots": self.roots.tolist(),
            "multiplicities": list(self.multiplicities),
        }

    @classmethod
    def from_dict(cls, data: dict, normalize=True):
        rs = cls.unchecked(data["roots"], data["multiplicities"], normalize=normalize)
        if int(data.get("rank", rs.rank)) != rs.rank:
            raise ValidationError(
                f"declared rank {data['rank']} does not match root length {rs.rank}")
        return rs

    def inner(self, x) -> np.ndarray:
        """``<x, a_i>`` for every root, compensated."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.rank,):
            raise ValidationError(f"expected a vector of length {self.rank}, got shape {x.shape}")
        return np.array([_dot(r, x) for r in self.roots])

    def curvature_normals(self, x) -> np.ndarray:
        """Curvature normals ``-a_i / <x, a_i>`` at a chamber point."""
        ip = self.inner(x)
        return -self.roots / ip[:, None]

    def as_rank2(self):
        """Return ``(g, m1, m2)`` if these are dihedral roots, else None.

        Matches the angle layout ``k*pi/g - pi/2`` (k = 1..g) up to 1e-9 and
        requires multiplicities alternating by index parity.
        """
        if self.rank != 2:
            return None
        g = self.g
        unit = self.roots / np.linalg.norm(self.roots, axis=1)[:, None]
        for k in range(1, g + 1):
            ang = k * math.pi / g - math.pi / 2
            if np.hypot(unit[k - 1, 0] - math.cos(ang), unit[k - 1, 1] - math.sin(ang)) > DISTINCT_TOL:
                return None
        m = self.multiplicities
        m1 = m[0]
        m2 = m[1] if g > 1 else m[0]
        if any(m[i] != (m1 if i % 2 == 0 else m2) for i in range(g)):
            return None
        return g, m1, m2

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"RootSystemData{tag}(rank={self.rank}, g={self.g}, m={self.multiplicities})"


@dataclass(frozen=True)
class ChamberPoint:
    """A point strictly inside the Weyl chamber, with its margin."""

    coords: np.ndarray
    margin: float

    @classmethod
    def make(cls, rs: RootSystemData, x) -> "ChamberPoint":
        inside, margin = in_chamber(rs, x)
        if not inside:
            raise ChamberError(f"point {np.asarray(x).tolist()} is outside the chamber (margin {margin:.3g})")
        coords = np.array(x, dtype=float)
        coords.setflags(write=False)
        return cls(coords, margin)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


def as_vector(x) -> np.ndarray:
    if isinstance(x, ChamberPoint):
        return np.array(x.coords)
    return np.asarray(x, dtype=float)


@dataclass
class ValidationReport:
    unit_norm: bool
    distinct: bool
    full: bool
    max_norm_error: float
    min_angle: float
    numerical_rank: int
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.unit_norm and self.distinct and self.full

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "unit_norm": self.unit_norm,
            "distinct": self.distinct,
            "full": self.full,
            "max_norm_error": self.max_norm_error,
            "min_angle": self.min_angle,
            "numerical_rank": self.numerical_rank,
            "notes": list(self.notes),
        }


def validate(rs: RootSystemData) -> ValidationReport:
    """Check unit norms, pairwise distinctness and fullness (roots span R^k).

    Never raises. Fullness failure is reported with a note since the backward
    convergence of the Euclidean flow relies on it.
    """
    roots = np.asarray(rs.roots, dtype=float)
    norm_err = max(abs(math.sqrt(_dot(r, r)) - 1.0) for r in roots)
    unit = norm_err <= UNIT_TOL
    min_angle = math.pi
    normed = roots / np.linalg.norm(roots, axis=1)[:, None]
    for i in range(rs.g):
        for j in range(i + 1, rs.g):
            # chord form; acos is ill-conditioned for nearly equal roots
            chord = float(np.linalg.norm(normed[i] - normed[j]))
            min_angle = min(min_angle, 2 * math.asin(min(1.0, chord / 2)))
    distinct = min_angle > DISTINCT_TOL
    sv = np.linalg.svd(normed, compute_uv=False)
    num_rank = int(np.sum(sv > max(normed.shape) * np.finfo(float).eps * sv[0]))
    full = num_rank == rs.rank
    notes = []
    if not unit:
        notes.append(f"roots are not unit vectors (max |norm-1| = {norm_err:.3g})")
    if not distinct:
        notes.append("two roots coincide")
    if not full:
        notes.append(f"roots span only a {num_rank}-dimensional subspace of R^{rs.rank}; "
                     "Euclidean backward convergence to the minimal family needs fullness")
    return ValidationReport(unit, distinct, full, float(norm_err), float(min_angle), num_rank, notes)


def in_chamber(rs: RootSystemData, x) -> tuple:
    """Return ``(inside, margin)`` with ``margin = min_i <x, a_i>``."""
    ip = rs.inner(as_vector(x))
    margin = float(ip.min())
    return margin > 0.0, margin


def check_dihedral_multiplicities(g: int, m1: int, m2: int) -> None:
    """Raise :class:`ValidationError` naming the violated multiplicity rule."""
    if g not in DIHEDRAL_G:
        raise ValidationError(f"g={g}: the number of distinct principal curvatures must be one of {DIHEDRAL_G} (Muenzner)")
    if m1 < 1 or m2 < 1:
        raise ValidationError("multiplicities must be positive integers")
    if g in (1, 3) and m1 != m2:
        raise ValidationError(f"g={g} requires m1 == m2 (Muenzner: m_i = m_(i+2) with g odd)")
    if g == 6 and not (m1 == m2 and m1 in (1, 2)):
        raise ValidationError("g=6 requires m1 == m2 in {1, 2} (Abresch)")
    if m1 > m2:
        raise ValidationError("m1 <= m2 is required (dim M+ <= dim M- convention)")


def dihedral_roots(g: int, m1: int, m2: int, checked=True) -> RootSystemData:
    """Rank-2 roots ``(cos t_k, sin t_k)`` with ``t_k = k*pi/g - pi/2``, k = 1..g.

    Multiplicities alternate ``m1, m2, m1, ...``. With ``checked=False`` the
    multiplicity rules are skipped (any g >= 1 accepted).
    """
    g, m1, m2 = int(g), int(m1), int(m2)
    if checked:
        check_dihedral_multiplicities(g, m1, m2)
    elif g < 1:
        raise ValidationError("g must be a positive integer")
    angles = [k * math.pi / g - math.pi / 2 for k in range(1, g + 1)]
    roots = np.array([[math.cos(a), math.sin(a)] for a in angles])
    mults = [m1 if k % 2 == 1 else m2 for k in range(1, g + 1)]
    if g == 1:
        roots[0] = (0.0, 1.0)  # cos(pi/2) is not exactly zero in floating point
    return RootSystemData.unchecked(roots, mults, label=f"dihedral g={g} m=({m1},{m2})")


def dihedral_roots_unchecked(g: int, m1: int, m2: int) -> RootSystemData:
    return dihedral_roots(g, m1, m2, checked=False)


def polar(rs: RootSystemData, x) -> tuple:
    """Polar coordinates ``(r, theta)`` of a rank-2 chamber point.

    ``theta`` lies in the open sector ``(0, pi/g)``.
    """
    if rs.rank != 2:
        raise ValidationError("polar coordinates need rank 2")
    x = as_vector(x)
    r = math.hypot(x[0], x[1])
    theta = math.atan2(x[1], x[0])
    if not (0.0 < theta < math.pi / rs.g) or r == 0.0:
        raise ChamberError(f"angle {theta!r} is outside the chamber sector (0, pi/{rs.g})")
    return r, theta


def polar_inverse(r: float, theta: float) -> np.ndarray:
    return np.array([r * math.cos(theta), r * math.sin(theta)])
