"""Named example configurations with documented ground truths.

Each :class:`CatalogEntry` carries facts as ``(quantity, value, provenance)``
triples. A quantity may carry a parameter after ``@`` (an initial angle).
:func:`verify_entry` recomputes every fact through the other modules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .curvature import curvature_report
from .rank2 import M_MINUS, M_PLUS, Rank2Config, collapse_times
from .root_system import ValidationError, polar, polar_inverse

DOCUMENTED = "documented"
DERIVED = "derived"
TRIVIAL = "trivial"

EXACT_TOL = 1e-10
ODE_TOL = 1e-6


class Fact(NamedTuple):
    quantity: str
    value: object
    provenance: str


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    config: Rank2Config
    documented_facts: list = field(default_factory=list)
    description: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description,
                "config": self.config.to_dict(),
                "documented_facts": [list(f) for f in self.documented_facts]}


def _base_facts(cfg: Rank2Config) -> list:
    g, n = cfg.g, cfg.n
    facts = [
        Fact("n", n, TRIVIAL),
        Fact("delta", cfg.delta, TRIVIAL),
        Fact("cos_g_theta_min", -cfg.delta, TRIVIAL),
        Fact("theta_min", cfg.theta_min, DERIVED),
        Fact("H_E_norm_min", float(n), DOCUMENTED),
        Fact("H_S_norm_min", 0.0, DOCUMENTED),
        Fact("A_S_norm2_min", float((g - 1) * n), DOCUMENTED),
    ]
    if g == 1:
        facts.append(Fact("phi_max_abs", 0.0, DOCUMENTED))
    return facts


def _name(g, m1, m2):
    return f"g{g}_m{m1}_{m2}"


def dihedral_entry(g: int, m1: int, m2: int, name: str = None, checked: bool = True) -> CatalogEntry:
    cfg = Rank2Config(g, m1, m2, checked=checked)
    return CatalogEntry(name or _name(g, m1, m2), cfg, _base_facts(cfg),
                        f"dihedral chamber g={g}, multiplicities ({m1}, {m2})")


def clifford_torus(n: int, k: int) -> CatalogEntry:
    """Tori ``S^k(cos t) x S^(n-k)(sin t)``: g = 2, multiplicities ``(k, n-k)``.

    The minimal torus has radii ``sqrt(k/n)`` and ``sqrt((n-k)/n)``, i.e.
    ``cos t_min = sqrt(k/n)``, which is what ``cos 2 t_min = -(n-2k)/n`` gives.
    """
    n, k = int(n), int(k)
    if n < 2 or not 1 <= k < n:
        raise ValidationError(f"need n >= 2 and 1 <= k < n (got n={n}, k={k})")
    cfg = Rank2Config(2, k, n - k, checked=k <= n - k)
    t0 = 0.5 * cfg.theta_min
    d = cfg.delta
    facts = _base_facts(cfg) + [
        Fact("cos_theta_min", math.sqrt(k / n), DERIVED),
        Fact("sin_theta_min", math.sqrt((n - k) / n), DERIVED),
        Fact(f"T_plus@{t0!r}", math.log((d + 1) / (d + math.cos(2 * t0))) / (2 * n), DOCUMENTED),
        Fact(f"target@{t0!r}", f"S^{k}(1) x 0", DOCUMENTED),
        Fact(f"target@{0.5 * (cfg.theta_min + math.pi / 2)!r}", f"0 x S^{n - k}(1)", DOCUMENTED),
    ]
    return CatalogEntry(f"clifford_torus_n{n}_k{k}", cfg, facts,
                        f"Clifford torus family S^{k} x S^{n - k}")


def flag_so3() -> CatalogEntry:
    """Flag manifolds of R^3 in S^4: g = 3, multiplicities (1, 1), n = 3."""
    cfg = Rank2Config(3, 1, 1)
    t0 = math.pi / 12
    facts = _base_facts(cfg) + [
        Fact("theta_min_exact", math.pi / 6, DOCUMENTED),
        Fact(f"T_plus@{t0!r}", math.log(math.sqrt(2.0)) / 9.0, DERIVED),
        Fact(f"T_plus_ode@{t0!r}", math.log(math.sqrt(2.0)) / 9.0, DERIVED),
        Fact(f"target@{t0!r}", "M_c+ (Veronese RP^2)", DOCUMENTED),
        Fact(f"target@{math.pi / 4!r}", "M_c- (Veronese RP^2)", DOCUMENTED),
    ]
    return CatalogEntry("flag_so3", cfg, facts, "SO(3) flag manifold orbits in S^4")


_E_PLUS = np.diag([1.0, 1.0, -2.0]) / math.sqrt(6.0)
_E_I = np.diag([1.0, -1.0, 0.0]) / math.sqrt(2.0)


def flag_matrix(theta: float) -> np.ndarray:
    """Diagonal trace-free unit matrix ``cos t c_+ + sin t diag(1,-1,0)/sqrt 2``.

    ``theta`` must lie in ``[0, pi/3]``: 0 gives the focal point ``c_+``,
    ``pi/6`` the minimal orbit and ``pi/3`` the focal point ``c_-``.
    """
    theta = float(theta)
    if not 0.0 <= theta <= math.pi / 3 + 1e-15:
        raise ValidationError(f"theta={theta!r} outside [0, pi/3]")
    return math.cos(theta) * _E_PLUS + math.sin(theta) * _E_I


SUITE = ((1, 3, 3), (2, 1, 1), (2, 1, 3), (2, 2, 2), (3, 1, 1),
         (4, 1, 1), (4, 1, 3), (4, 2, 2), (6, 1, 1), (6, 2, 2))


def standard_suite() -> list:
    """Ten dihedral entries covering g in {1, 2, 3, 4, 6}."""
    return [dihedral_entry(*s) for s in SUITE]


def named_entries() -> list:
    """Everything the catalog knows: the suite plus the named examples."""
    return standard_suite() + [clifford_torus(2, 1), clifford_torus(4, 1),
                               clifford_torus(4, 2), flag_so3()]


def get_entry(name: str) -> CatalogEntry:
    for e in named_entries():
        if e.name == name:
            return e
    raise KeyError(f"no catalog entry named {name!r}")


@dataclass(frozen=True)
class FactCheck:
    quantity: str
    expected: object
    got: object
    tolerance: float
    ok: bool
    source: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _recompute(entry: CatalogEntry, quantity: str):
    """Return ``(value, tolerance, source)`` for one documented quantity."""
    from .flow_ode import FlowSpec, collapse_time, find_minimal_point

    cfg = entry.config
    rs = cfg.root_system()
    key, _, arg = quantity.partition("@")
    if key in ("theta_min", "theta_min_exact", "cos_theta_min", "sin_theta_min",
               "cos_g_theta_min", "H_E_norm_min", "H_S_norm_min", "A_S_norm2_min"):
        z = find_minimal_point(rs)
        th = polar(rs, z)[1]
        rep = curvature_report(rs, z)
        val = {
            "theta_min": th, "theta_min_exact": th,
            "cos_theta_min": math.cos(th), "sin_theta_min": math.sin(th),
            "cos_g_theta_min": math.cos(cfg.g * th),
            "H_E_norm_min": math.sqrt(rep.h2_euclidean),
            "H_S_norm_min": math.sqrt(rep.h2_spherical),
            "A_S_norm2_min": rep.a2_spherical,
        }[key]
        return val, (1e-8 if key == "A_S_norm2_min" else EXACT_TOL), "oracle"
    if key == "n":
        return rs.n, 0.0, "oracle"
    if key == "delta":
        found = rs.as_rank2()
        g, m1, m2 = found
        return (0.0 if g == 1 else (m2 - m1) / (m2 + m1)), EXACT_TOL, "oracle"
    if key == "phi_max_abs":
        ths = np.linspace(0.05, math.pi / cfg.g - 0.05, 50)
        return max(abs(curvature_report(rs, polar_inverse(1.0, t)).phi) for t in ths), EXACT_TOL, "oracle"
    if key == "T_plus":
        return collapse_times(cfg.with_theta0(float(arg))).time, EXACT_TOL, "closed_form"
    if key == "T_plus_ode":
        x0 = polar_inverse(1.0, float(arg))
        return collapse_time(FlowSpec("spherical", rs, x0, (0.0, 1.0))), ODE_TOL, "ode"
    if key == "target":
        col = collapse_times(cfg.with_theta0(float(arg)))
        return col.target, None, "closed_form"
    raise KeyError(f"unknown catalog quantity {quantity!r}")


def _target_label(entry, got, expected):
    """Map a wall label onto the entry's naming of that wall."""
    plus = got == M_PLUS
    if entry.name.startswith("clifford_torus"):
        return expected.endswith(" x 0") == plus
    return ("+" in expected) == plus


def verify_entry(entry: CatalogEntry) -> list:
    """Recompute each documented fact; one :class:`FactCheck` per fact."""
    out = []
    for q, v, _prov in entry.documented_facts:
        got, tol, src = _recompute(entry, q)
        if tol is None:
            ok = _target_label(entry, got, v) and got in (M_PLUS, M_MINUS)
            tol = 0.0
        else:
            ok = abs(float(got) - float(v)) <= tol * max(1.0, abs(float(v)))
        out.append(FactCheck(q, v, got, tol, bool(ok), src))
    return out


__all__ = ["CatalogEntry", "Fact", "FactCheck", "clifford_torus", "flag_so3", "flag_matrix",
           "standard_suite", "named_entries", "get_entry", "verify_entry", "dihedral_entry"]
