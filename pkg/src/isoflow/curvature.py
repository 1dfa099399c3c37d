"""Mean curvature vectors and shape-operator norms from root sums.

These are the general-rank formulas, valid at any chamber point ``x``::

    H^E(x)    = -sum_i m_i a_i / <x, a_i>
    H^S(x)    = H^E(x) + n x / |x|^2
    |A^E(x)|^2 = sum_i m_i / <x, a_i>^2
    |A^S(x)|^2 = |A^E(x)|^2 - n / |x|^2

They serve as the oracle for the rank-2 closed forms in :mod:`isoflow.rank2`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .root_system import ChamberError, RootSystemData, as_vector

MARGIN_GUARD = 1e-13


def _sums(rs: RootSystemData, x):
    x = as_vector(x)
    if x.shape != (rs.rank,):
        raise ValueError(f"expected a vector of length {rs.rank}, got shape {x.shape}")
    s, a2, margin, wall = kernels.root_sums(rs.roots, rs.mult_array, x)
    norm = math.sqrt(math.fsum(x * x))
    if not margin >= MARGIN_GUARD * norm or norm == 0.0:
        raise ChamberError(
            f"chamber margin {margin:.3g} at wall {wall} is below {MARGIN_GUARD:g}*|x|")
    return x, s, a2


def mean_curvature_euclidean(rs: RootSystemData, x) -> np.ndarray:
    _, s, _ = _sums(rs, x)
    return -s


def mean_curvature_spherical(rs: RootSystemData, x) -> np.ndarray:
    x, s, _ = _sums(rs, x)
    rr = math.fsum(x * x)
    return -s + (rs.n / rr) * x


def shape_norm_sq_euclidean(rs: RootSystemData, x) -> float:
    return _sums(rs, x)[2]


def shape_norm_sq_spherical(rs: RootSystemData, x) -> float:
    x, _, a2 = _sums(rs, x)
    return a2 - rs.n / math.fsum(x * x)


def traceless_norm_sq(rs: RootSystemData, x) -> float:
    """Squared norm of the traceless spherical shape operator.

    ``phi = |A^S|^2 - |H^S|^2 / n``; zero for umbilic families (g = 1).
    """
    rep = curvature_report(rs, x)
    return rep.phi


@dataclass(frozen=True)
class CurvatureReport:
    h_euclidean: np.ndarray
    h_spherical: np.ndarray
    a2_euclidean: float
    a2_spherical: float
    phi: float
    source: str = "oracle"

    @property
    def h2_euclidean(self) -> float:
        return math.fsum(self.h_euclidean ** 2)

    @property
    def h2_spherical(self) -> float:
        return math.fsum(self.h_spherical ** 2)

    def to_dict(self) -> dict:
        return {
            "H_E": self.h_euclidean.tolist(),
            "H_S": self.h_spherical.tolist(),
            "H_E_norm2": self.h2_euclidean,
            "H_S_norm2": self.h2_spherical,
            "A_E_norm2": self.a2_euclidean,
            "A_S_norm2": self.a2_spherical,
            "phi": self.phi,
            "provenance": self.source,
        }


def curvature_report(rs: RootSystemData, x) -> CurvatureReport:
    x, s, a2e = _sums(rs, x)
    rr = math.fsum(x * x)
    n = rs.n
    he = -s
    hs = he + (n / rr) * x
    a2s = a2e - n / rr
    phi = a2s - math.fsum(hs * hs) / n
    # phi is a squared norm; clip rounding below zero
    if phi < 0.0 and phi > -1e-12 * max(1.0, a2s):
        phi = 0.0
    return CurvatureReport(he, hs, a2e, a2s, phi)
