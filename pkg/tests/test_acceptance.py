"""Acceptance criteria 1 to 11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or as a script. Each
``criterion_k`` returns ``(ok, detail)``; the tests assert on the same values
that are printed.
"""
import functools
import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from isoflow import checks, curvature as cv, invariants as inv  # noqa: E402
from isoflow.catalog import clifford_torus, named_entries, standard_suite  # noqa: E402
from isoflow.flow_ode import (FlowSpec, collapse_time, find_minimal_point, integrate,  # noqa: E402
                              pair_distance_audit)
from isoflow.rank2 import (Rank2Config, collapse_times, limit_constants, spherical_series,  # noqa: E402
                           sum_cot, sum_cot_closed, sum_cot_sq, sum_cot_sq_closed, torus_excess,
                           mean_curvature_closed, shape_norms_closed)
from isoflow.root_system import RootSystemData, polar, polar_inverse  # noqa: E402

SUITE = standard_suite()
SEED = 20240611
_printed = set()


def report(k, ok, detail):
    line = f"CRITERION {k:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    if k not in _printed:
        _printed.add(k)
        sys.__stdout__.write(line + "\n")
        sys.__stdout__.flush()
    return line


def rng():
    return None if checks.seedless() else np.random.default_rng(SEED)


def angles(cfg):
    """theta_min/2, theta_min and the midpoint above theta_min."""
    return (cfg.theta_min / 2, cfg.theta_min, (cfg.theta_min + math.pi / cfg.g) / 2)


def b3():
    s = 1 / math.sqrt(2)
    roots = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [s, -s, 0], [s, s, 0], [s, 0, -s], [s, 0, s],
             [0, s, -s], [0, s, s]]
    return RootSystemData.unchecked(roots, [1, 1, 1, 2, 2, 2, 2, 2, 2], label="B3")


@functools.lru_cache(None)
def criterion_1():
    t0 = time.perf_counter()
    worst_th = worst_cos = worst_r = 0.0
    for e in SUITE:
        base = e.config
        g, n = base.g, base.n
        for th0 in angles(base):
            cfg = base.with_theta0(th0)
            rs = cfg.root_system()
            x0 = polar_inverse(1.0, th0)
            if cfg.is_minimal:
                t_end, te_end = 5.0 / (g * n), 0.8 / (2 * n)
            else:
                T = collapse_times(cfg).time
                t_end = 0.95 * T
                te_end = 0.95 * -math.expm1(-2 * n * T) / (2 * n)
            t_start = -5.0 / (g * n)
            y = integrate(FlowSpec("spherical", rs, x0, (t_start, t_end)))
            ts = np.unique(np.concatenate([np.linspace(t_start, t_end, 500), y.times]))
            th = np.array([polar(rs, p)[1] for p in y(ts)])
            s = spherical_series(cfg, ts)
            worst_th = max(worst_th, float(np.max(np.abs(th - s.theta))))
            lhs = np.cos(g * th)
            rhs = np.exp(g * n * ts) * cfg.u0 - cfg.delta
            worst_cos = max(worst_cos, float(np.max(np.abs(lhs - rhs))))
            x = integrate(FlowSpec("euclidean", rs, x0, (t_start, te_end)))
            rel = np.abs(x.radii() / np.sqrt(1 - 2 * n * x.times) - 1)
            worst_r = max(worst_r, float(rel.max()))
    elapsed = time.perf_counter() - t0
    ok = worst_th <= 1e-7 and worst_cos <= 1e-7 and worst_r <= 1e-8 and elapsed <= 60
    return ok, (f"sup|theta err| {worst_th:.2e}, sup|cos g theta err| {worst_cos:.2e} (<= 1e-7); "
                f"Euclidean radius rel err {worst_r:.2e} (<= 1e-8); {elapsed:.1f} s (<= 60 s)")


@functools.lru_cache(None)
def criterion_2():
    worst = 0.0
    entries = named_entries()
    for e in entries:
        cfg = e.config
        r, th = checks.sample_polar(cfg.g, 100, rng())
        res = checks.oracle_vs_closed(cfg.root_system(), cfg, r, th)
        worst = max(worst, res.residual)
    return worst <= 1e-12, f"worst relative error {worst:.2e} over {len(entries)} entries x 100 points (<= 1e-12)"


@functools.lru_cache(None)
def criterion_3():
    hs = he = as_ = 0.0
    for e in SUITE:
        cfg = e.config
        rs = cfg.root_system()
        z = find_minimal_point(rs)
        rep = cv.curvature_report(rs, z)
        hs = max(hs, math.sqrt(rep.h2_spherical))
        he = max(he, abs(math.sqrt(rep.h2_euclidean) - cfg.n))
        as_ = max(as_, abs(rep.a2_spherical - cfg.n * (cfg.g - 1)))
    suite_ok = hs <= 1e-11 and he <= 1e-10 and as_ <= 1e-8
    torus = []
    for n, k in ((2, 1), (4, 1), (4, 2), (5, 2)):
        rs = clifford_torus(n, k).config.root_system()
        th = polar(rs, find_minimal_point(rs))[1]
        torus.append((n, k, math.sin(th), abs(math.sin(th) - math.sqrt(k / n)),
                      abs(math.sin(th) - math.sqrt((n - k) / n))))
    literal_ok = all(t[3] <= 1e-12 for t in torus)
    derived_ok = all(t[4] <= 1e-12 for t in torus)
    bad = [f"(n={t[0]},k={t[1]}) sin={t[2]:.12f} vs sqrt(k/n)={math.sqrt(t[1] / t[0]):.12f}"
           for t in torus if t[3] > 1e-12]
    detail = (f"suite |H^S| {hs:.1e}, ||H^E|-n| {he:.1e}, ||A^S|^2-n(g-1)| {as_:.1e} "
              f"({'ok' if suite_ok else 'FAIL'}); torus sin(theta_min)=sqrt(k/n) "
              + ("holds" if literal_ok else "fails: " + "; ".join(bad))
              + f"; sin(theta_min)=sqrt((n-k)/n) {'holds' if derived_ok else 'fails'} for all tori")
    return suite_ok and literal_ok, detail, {"suite": suite_ok, "literal": literal_ok, "derived": derived_ok}


@functools.lru_cache(None)
def criterion_4():
    worst_h = worst_a = worst_exact = 0.0
    for e in SUITE:
        base = e.config
        g, n = base.g, base.n
        for th0 in angles(base):
            cfg = base.with_theta0(th0)
            t = -10.0 / (g * n)
            s = spherical_series(cfg, [t])
            worst_a = max(worst_a, abs(float(s.a2[0]) - (g - 1) * n))
            lim = limit_constants(cfg)
            if not lim.degenerate:
                worst_h = max(worst_h, abs(float(s.h2[0]) * math.exp(-2 * g * n * t) - lim.c0) / lim.c0)
            ts = np.linspace(-10.0 / (g * n), 0.0, 201)
            th = spherical_series(cfg, ts).theta
            lhs = np.cos(g * th) + cfg.delta
            rhs = np.exp(g * n * ts) * cfg.u0
            worst_exact = max(worst_exact, float(np.max(np.abs(lhs - rhs))))
    eps = np.finfo(float).eps
    ok = worst_h <= 1e-2 and worst_a <= 1e-3 and worst_exact <= 8 * eps
    return ok, (f"H^2 e^(-2gnt) rel err {worst_h:.2e} (<= 1e-2), |A|^2 err {worst_a:.2e} (<= 1e-3), "
                f"exponential law residual {worst_exact:.1e} = {worst_exact / eps:.1f} eps (<= 8 eps)")


@functools.lru_cache(None)
def criterion_5():
    worst_T = worst_T0 = 0.0
    strict = True
    for e in SUITE:
        base = e.config
        n = base.n
        rs = base.root_system()
        for th0 in angles(base):
            x0 = polar_inverse(1.0, th0)
            te = collapse_time(FlowSpec("euclidean", rs, x0, (0.0, 1.0)))
            if th0 == base.theta_min:
                worst_T0 = max(worst_T0, abs(te - 1 / (2 * n)))
                continue
            strict = strict and te < 1 / (2 * n)
            t = collapse_time(FlowSpec("spherical", rs, x0, (0.0, 1.0)))
            worst_T = max(worst_T, abs(t - collapse_times(base.with_theta0(th0)).time))
    ok = worst_T <= 1e-6 and worst_T0 <= 1e-8 and strict
    return ok, (f"|T_ode - T+-| {worst_T:.2e} (<= 1e-6); minimal |T0 - 1/(2n)| {worst_T0:.1e} (<= 1e-8); "
                f"non-minimal T0 < 1/(2n): {'yes' if strict else 'NO'}")


def trig_grid(g, count=1000, gap=0.05):
    """One period of beta, staying ``gap`` away from the poles at 0 and pi/g."""
    return np.linspace(gap, math.pi / g - gap, count)


@functools.lru_cache(None)
def criterion_6():
    worst1 = worst2 = 0.0
    for g in range(1, 13):
        for b in trig_grid(g):
            worst1 = max(worst1, abs(sum_cot(g, b) - sum_cot_closed(g, b)))
            worst2 = max(worst2, abs(sum_cot_sq(g, b) - sum_cot_sq_closed(g, b)))
    return max(worst1, worst2) <= 1e-9, (f"sum cot residual {worst1:.1e}, sum cot^2 residual {worst2:.1e} "
                                         f"(<= 1e-9 absolute, g=1..12, 1000 beta each)")


@functools.lru_cache(None)
def criterion_7():
    e_worst = math.inf
    s_worst = 0.0
    pairs = 0
    for e in SUITE:
        base = e.config
        rs = base.root_system()
        th = angles(base)
        for i in range(3):
            for j in range(i + 1, 3):
                xa, xb = polar_inverse(1.0, th[i]), polar_inverse(1.0, th[j])
                ea = integrate(FlowSpec("euclidean", rs, xa, (-3.0, 0.0)))
                eb = integrate(FlowSpec("euclidean", rs, xb, (-3.0, 0.0)))
                pa = pair_distance_audit(ea, eb, "euclidean", samples=100)
                scale = float(pa.series.max())
                e_worst = min(e_worst, pa.value / scale if scale > 0 else 0.0)
                if not pa.holds:
                    e_worst = -math.inf
                sa = integrate(FlowSpec("spherical", rs, xa, (-3.0, 0.0)))
                sb = integrate(FlowSpec("spherical", rs, xb, (-3.0, 0.0)))
                ps = pair_distance_audit(sa, sb, "spherical", samples=100)
                s_worst = max(s_worst, ps.value if ps.holds else math.inf)
                pairs += 1
    ok = e_worst >= -1e-9 and s_worst <= 1 + 1e-6
    return ok, (f"{pairs} pairs: Euclidean min (dD/dt)/max D {e_worst:.3g} (>= -1e-9); "
                f"spherical max f(a)e^(-2na)/f(0) {s_worst:.9f} (<= 1 + 1e-6)")


@functools.lru_cache(None)
def criterion_8():
    worst = 0.0
    for e in SUITE:
        cfg = e.config
        r, th = checks.sample_polar(cfg.g, 100, rng())
        worst = max(worst, checks.traceless_identities(cfg.root_system(), cfg, r, th).residual)
    worst_t = 0.0
    gen = rng()
    for n in range(2, 9):
        cfg = Rank2Config(2, 1, n - 1)
        thetas = gen.uniform(0.01, 0.99, 100) * math.pi / 2 if gen is not None else \
            np.linspace(0.01, 0.99, 100) * math.pi / 2
        for t in thetas:
            _, hs = mean_curvature_closed(cfg, 1.0, t)
            _, a2 = shape_norms_closed(cfg, 1.0, t)
            rs = cfg.root_system()
            rep = cv.curvature_report(rs, polar_inverse(1.0, t))
            for a2v, h2v in ((a2, float(hs @ hs)), (rep.a2_spherical, rep.h2_spherical)):
                lhs = a2v - h2v / (n - 1) - 2
                worst_t = max(worst_t, abs(lhs - torus_excess(n, t)) / max(1.0, a2v))
    ok = worst <= 1e-12 and worst_t <= 1e-12
    return ok, (f"traceless identities rel residual {worst:.1e}; torus family (n=2..8) residual "
                f"{worst_t:.1e} (<= 1e-12)")


@functools.lru_cache(None)
def criterion_9():
    th0, audit = inv.sharpness_witness(2, 3, 1, 2)
    w = audit.witness
    return audit.holds, (f"g=2 n=3: theta0 {th0:.12f}, 1 - coefficient {1 - w['coefficient']:.2e} > 0, "
                         f"min margin {w['min_margin']:.3e} > 0 on [{w['t_range'][0]}, {w['t_range'][1]:.4f}]")


@functools.lru_cache(None)
def criterion_10():
    worst = 0.0
    for e in SUITE:
        rs = e.config.root_system()
        g = e.config.g
        r, th = checks.sample_polar(g, 1000, rng())
        worst = max(worst, checks.pythagoras(rs, [polar_inverse(a, b) for a, b in zip(r, th)]).residual)
    rs3 = b3()
    pts = checks.sample_chamber(rs3, 1000, rng())
    w3 = checks.pythagoras(rs3, pts).residual
    ok = worst <= 1e-10 and w3 <= 1e-10
    return ok, f"suite worst {worst:.1e}, rank-3 B3 set {w3:.1e} (<= 1e-10, 1000 points each)"


@functools.lru_cache(None)
def criterion_11():
    caught = total = 0
    for e in SUITE:
        cfg = e.config
        if cfg.delta != 0.0:
            continue
        rs = cfg.root_system()
        for i in range(rs.g):
            mult = list(rs.multiplicities)
            mult[i] += 1
            bad = RootSystemData.unchecked(rs.roots, mult, normalize=False)
            r, th = checks.sample_polar(cfg.g, 100, rng())
            c2 = checks.oracle_vs_closed(bad, cfg, r, th).ok
            try:
                z = find_minimal_point(bad)
                rep = cv.curvature_report(bad, z)
                c3 = (math.sqrt(rep.h2_spherical) <= 1e-11
                      and abs(math.sqrt(rep.h2_euclidean) - cfg.n) <= 1e-10
                      and abs(rep.a2_spherical - cfg.n * (cfg.g - 1)) <= 1e-8)
            except Exception:
                c3 = False
            c8 = checks.traceless_identities(bad, cfg, r, th).ok
            total += 1
            caught += not (c2 and c3 and c8)
    return caught == total and total > 0, f"{caught}/{total} single-multiplicity corruptions detected by criteria 2, 3 or 8"


def _check(k, fn):
    res = fn()
    report(k, res[0], res[1])
    return res


def test_criterion_1():
    assert _check(1, criterion_1)[0]


def test_criterion_2():
    assert _check(2, criterion_2)[0]


def test_criterion_3_suite_and_derived_torus():
    res = _check(3, criterion_3)
    assert res[2]["suite"] and res[2]["derived"]


@pytest.mark.xfail(strict=True, reason="sin(theta_min) = sqrt(k/n) contradicts cos 2 theta_min = -(n-2k)/n "
                   "for k != n/2; see the decisions ledger")
def test_criterion_3_torus_literal():
    res = _check(3, criterion_3)
    assert res[2]["literal"]


def test_criterion_4():
    assert _check(4, criterion_4)[0]


def test_criterion_5():
    assert _check(5, criterion_5)[0]


def test_criterion_6():
    assert _check(6, criterion_6)[0]


def test_criterion_7():
    assert _check(7, criterion_7)[0]


def test_criterion_8():
    assert _check(8, criterion_8)[0]


def test_criterion_9():
    assert _check(9, criterion_9)[0]


def test_criterion_10():
    assert _check(10, criterion_10)[0]


def test_criterion_11():
    assert _check(11, criterion_11)[0]


if __name__ == "__main__":
    fns = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
           criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]
    results = [_check(k, fn)[0] for k, fn in enumerate(fns, 1)]
    sys.exit(0 if all(results) else 1)
