"""Identity checks shared by the ``check`` command and the test suite.

Every check returns an :class:`IdentityCheck` with the worst residual found
and the tolerance it was held to. Left-hand sides come from the root-sum
oracle of the given root system; right-hand sides come from the rank-2
closed forms of the given configuration, so a mismatch between the two (a
corrupted multiplicity, a wrong root norm) shows up as a failure.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import curvature as cv
from .rank2 import Rank2Config, mean_curvature_closed, shape_norms_closed
from .root_system import RootSystemData, polar_inverse

ORACLE_TOL = 1e-12
IDENTITY_TOL = 1e-12
PYTHAGORAS_TOL = 1e-10
MIN_HS_TOL = 1e-11
MIN_HE_TOL = 1e-10
MIN_AS_TOL = 1e-8


@dataclass
class IdentityCheck:
    name: str
    ok: bool
    residual: float
    tolerance: float
    samples: int = 0
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ok = bool(self.ok)
        self.residual = float(self.residual)

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": bool(self.ok), "residual": self.residual,
                "tolerance": self.tolerance, "samples": self.samples, "detail": self.detail}


def seedless() -> bool:
    return os.environ.get("ISOFLOW_SEEDLESS", "") not in ("", "0")


def sample_polar(g: int, count: int, rng=None, r_range=(0.5, 2.0), edge=0.01):
    """``count`` pairs ``(r, theta)`` in the sector; a fixed grid when ``rng`` is None."""
    lo, hi = edge * math.pi / g, (1 - edge) * math.pi / g
    if rng is None:
        k = max(1, int(math.ceil(math.sqrt(count))))
        rs = np.geomspace(*r_range, k)
        ths = np.linspace(lo, hi, int(math.ceil(count / k)))
        pairs = [(r, t) for r in rs for t in ths][:count]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])
    r = np.exp(rng.uniform(math.log(r_range[0]), math.log(r_range[1]), count))
    return r, rng.uniform(lo, hi, count)


def sample_chamber(rs: RootSystemData, count: int, rng=None, min_margin=1e-3):
    """Chamber points of norm in [0.5, 2] by rejection from the unit sphere."""
    gen = rng if rng is not None else np.random.default_rng(12345)
    out = []
    while len(out) < count:
        v = gen.standard_normal((4 * count + 64, rs.rank))
        v /= np.linalg.norm(v, axis=1)[:, None]
        ip = v @ rs.roots.T
        good = v[ip.min(axis=1) > min_margin]
        out.extend(good[: count - len(out)])
    scale = np.exp(gen.uniform(math.log(0.5), math.log(2.0), count))
    return np.array(out) * scale[:, None]


def oracle_vs_closed(rs: RootSystemData, cfg: Rank2Config, r, theta) -> IdentityCheck:
    """Root sums against the rank-2 closed forms.

    ``H^S`` errors are measured against ``|H^E|`` and ``|A^S|^2`` errors
    against ``|A^E|^2``: near the minimal angle ``H^S`` is a cancellation
    residue, so its own relative error is meaningless.
    """
    worst = {"H_E": 0.0, "H_S": 0.0, "A_E2": 0.0, "A_S2": 0.0}
    for ri, ti in zip(r, theta):
        x = polar_inverse(ri, ti)
        he_c, hs_c = mean_curvature_closed(cfg, ri, ti)
        ae_c, as_c = shape_norms_closed(cfg, ri, ti)
        he = cv.mean_curvature_euclidean(rs, x)
        hs = cv.mean_curvature_spherical(rs, x)
        ae = cv.shape_norm_sq_euclidean(rs, x)
        a_s = cv.shape_norm_sq_spherical(rs, x)
        he_scale = float(np.linalg.norm(he_c))
        worst["H_E"] = max(worst["H_E"], float(np.linalg.norm(he - he_c)) / he_scale)
        worst["H_S"] = max(worst["H_S"], float(np.linalg.norm(hs - hs_c)) / he_scale)
        worst["A_E2"] = max(worst["A_E2"], abs(ae - ae_c) / ae_c)
        worst["A_S2"] = max(worst["A_S2"], abs(a_s - as_c) / ae_c)
    res = max(worst.values())
    return IdentityCheck("oracle_vs_closed_form", res <= ORACLE_TOL, res, ORACLE_TOL, len(r), worst)


def traceless_identities(rs: RootSystemData, cfg: Rank2Config, r, theta) -> IdentityCheck:
    """``|A^S|^2 - (g/2n)|H^S|^2`` from root sums against its closed form.

    Equal multiplicities also get ``|A^S|^2 - (g/n)|H^S|^2 = n(g-1)/r^2``.
    """
    g, n, d = cfg.g, cfg.n, cfg.delta
    worst_d = worst_eq = 0.0
    for ri, ti in zip(r, theta):
        x = polar_inverse(ri, ti)
        rep = cv.curvature_report(rs, x)
        lhs = rep.a2_spherical - g / (2 * n) * rep.h2_spherical
        rhs = n / (2 * ri ** 2) * (g * (1 - d * d) / math.sin(g * ti) ** 2 + g - 2)
        # both sides vanish at the g=1 equator; measure against |A^E|^2 there
        worst_d = max(worst_d, abs(lhs - rhs) / max(abs(rhs), rep.a2_euclidean))
        if cfg.m1 == cfg.m2 or g == 1:
            lhs2 = rep.a2_spherical - g / n * rep.h2_spherical
            rhs2 = n * (g - 1) / ri ** 2
            worst_eq = max(worst_eq, abs(lhs2 - rhs2) / max(rep.a2_euclidean, 1e-300))
    res = max(worst_d, worst_eq)
    return IdentityCheck("traceless_identities", res <= IDENTITY_TOL, res, IDENTITY_TOL, len(r),
                         {"general": worst_d, "equal_multiplicity": worst_eq})


def pythagoras_residuals(rs: RootSystemData, x) -> dict:
    """Residuals of the two subtraction laws at one chamber point.

    ``H^S`` is recomputed by removing the radial part of ``H^E`` explicitly,
    and both shape norms by summing ``sum_i m_i <xi, a_i>^2 / <x, a_i>^2``
    over an orthonormal basis ``xi`` (first vector ``x/|x|``). These agree
    with the closed root sums only when the roots are unit vectors.
    """
    x = np.asarray(x, dtype=float)
    rep = cv.curvature_report(rs, x)
    he = cv.mean_curvature_euclidean(rs, x)
    hs = cv.mean_curvature_spherical(rs, x)
    rr = float(x @ x)
    hs_proj = he - (he @ x) / rr * x
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(rs.rank)]))
    basis = q[:, : rs.rank].T
    if basis[0] @ x < 0:
        basis[0] = -basis[0]
    ip = rs.inner(x)
    w = rs.mult_array / ip ** 2
    proj = (basis @ rs.roots.T) ** 2  # (rank, g)
    ae_basis = float(np.sum(proj @ w))
    as_basis = float(np.sum(proj[1:] @ w))
    he2 = rep.h2_euclidean
    return {
        "H_norm": abs(he2 - rep.h2_spherical - rs.n ** 2 / rr) / he2,
        "H_projection": float(np.linalg.norm(hs - hs_proj)) / math.sqrt(he2),
        "A_E_basis": abs(rep.a2_euclidean - ae_basis) / rep.a2_euclidean,
        "A_S_basis": abs(rep.a2_spherical - as_basis) / rep.a2_euclidean,
        "orthogonal": abs(float(hs @ x)) / (math.sqrt(he2) * math.sqrt(rr)),
    }


def pythagoras(rs: RootSystemData, points) -> IdentityCheck:
    worst = {}
    for x in points:
        for k, v in pythagoras_residuals(rs, x).items():
            worst[k] = max(worst.get(k, 0.0), v)
    res = max(worst.values())
    return IdentityCheck("pythagoras", res <= PYTHAGORAS_TOL, res, PYTHAGORAS_TOL, len(points), worst)


def minimal_point_check(rs: RootSystemData, g_expected=None) -> IdentityCheck:
    """Residuals at the computed minimal point."""
    from .flow_ode import find_minimal_point

    z = find_minimal_point(rs)
    rep = cv.curvature_report(rs, z)
    n = rs.n
    detail = {"z": z.tolist(), "H_S_norm": math.sqrt(rep.h2_spherical),
              "H_E_norm_err": abs(math.sqrt(rep.h2_euclidean) - n)}
    ok = detail["H_S_norm"] <= MIN_HS_TOL and detail["H_E_norm_err"] <= MIN_HE_TOL
    res = max(detail["H_S_norm"] / MIN_HS_TOL, detail["H_E_norm_err"] / MIN_HE_TOL)
    if g_expected is not None:
        detail["A_S_norm2"] = rep.a2_spherical
        detail["A_S_norm2_err"] = abs(rep.a2_spherical - n * (g_expected - 1))
        ok = ok and detail["A_S_norm2_err"] <= MIN_AS_TOL
        res = max(res, detail["A_S_norm2_err"] / MIN_AS_TOL)
    # residual is expressed in units of the respective tolerance
    return IdentityCheck("minimal_point", bool(ok), res, 1.0, 1, detail)


def check_root_system(rs: RootSystemData, cfg: Rank2Config = None, samples: int = 100,
                      rng=None) -> list:
    """All identity checks applicable to ``rs`` (closed-form ones need ``cfg``)."""
    out = []
    if cfg is not None:
        r, th = sample_polar(cfg.g, samples, rng)
        out.append(oracle_vs_closed(rs, cfg, r, th))
        out.append(traceless_identities(rs, cfg, r, th))
        pts = [polar_inverse(a, b) for a, b in zip(r, th)]
    else:
        pts = list(sample_chamber(rs, samples, rng))
    out.append(pythagoras(rs, pts))
    out.append(minimal_point_check(rs, cfg.g if cfg is not None else None))
    return out


__all__ = ["IdentityCheck", "sample_polar", "sample_chamber", "oracle_vs_closed",
           "traceless_identities", "pythagoras", "pythagoras_residuals", "minimal_point_check",
           "check_root_system", "seedless"]
