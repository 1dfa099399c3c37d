import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoflow import invariants as inv
from isoflow.flow_ode import FlowSpec, integrate
from isoflow.rank2 import (Rank2Config, closed_form_trajectory, collapse_times, limit_constants,
                           phi_closed, spherical_series)
from isoflow.root_system import ValidationError, polar_inverse

from conftest import SUITE, SUITE_IDS


def cf_traj(cfg, t0=None, t1=0.0, samples=401):
    t0 = -30.0 / (cfg.g * cfg.n) if t0 is None else t0
    return closed_form_trajectory(cfg, np.linspace(t0, t1, samples))


def ode_traj(cfg, t0):
    return integrate(FlowSpec("spherical", cfg.root_system(), polar_inverse(1.0, cfg.theta0), (t0, 0.0)))


def by_id(audits):
    return {a.condition_id: a for a in audits}


class TestHSConditions:
    def test_g1_ratio_is_one_over_n(self):
        cfg = Rank2Config(1, 3, 3, theta0=1.0)
        a = by_id(inv.audit_hs_conditions(cf_traj(cfg)))
        w = a[inv.HS_RATIO_BOUNDED].witness
        assert a[inv.HS_RATIO_BOUNDED].holds
        assert w["C_fit"] == pytest.approx(1 / 3, rel=1e-12)
        assert w["ratio_min"] == pytest.approx(1 / 3, rel=1e-12)

    def test_g1_ode_route(self):
        cfg = Rank2Config(1, 3, 3, theta0=1.0)
        a = by_id(inv.audit_hs_conditions(ode_traj(cfg, -2.0)))
        assert a[inv.HS_RATIO_BOUNDED].witness["source"] == "ode"
        assert a[inv.HS_RATIO_BOUNDED].witness["C_fit"] == pytest.approx(1 / 3, rel=1e-8)

    def test_exponent_approaches_2gn(self):
        cfg = Rank2Config(2, 1, 1, theta0=math.pi / 6)
        fits = []
        for t0 in (-2.0, -5.0, -20.0):
            a = by_id(inv.audit_hs_conditions(cf_traj(cfg, t0)))
            fits.append(a[inv.HS_EXPONENTIAL].witness["B_fit"])
        assert all(b > 8 for b in fits)  # the limit 2gn = 8 is approached from above
        assert fits[0] > fits[1] > fits[2]
        assert fits[-1] == pytest.approx(8.0, abs=0.1)
        # 2gn = 8 = 4n: the (1.6) bound B < 4n fails in the limit, as it must for a non-cap
        assert not by_id(inv.audit_hs_conditions(cf_traj(cfg, -20.0)))[inv.HS_EXPONENTIAL].holds

    @settings(max_examples=25)
    @given(st.integers(3, 9), st.floats(0.05, 0.95))
    def test_traceless_torus_formula(self, n, frac):
        cfg = Rank2Config(2, 1, n - 1, theta0=frac * math.pi / 2)
        traj = cf_traj(cfg, samples=101) if not cfg.is_minimal else None
        if traj is None:
            return
        s = spherical_series(cfg, traj.times)
        excess = s.a2 - s.h2 / (n - 1) - 2
        expect = (n - 2) / (n - 1) * np.tan(s.theta) ** 2
        assert np.allclose(excess, expect, rtol=1e-9, atol=1e-12)
        a = by_id(inv.audit_hs_conditions(traj))[inv.HS_TRACELESS]
        assert not a.holds and a.witness["max_excess"] > 0

    def test_traceless_n2_equality(self):
        cfg = Rank2Config(2, 1, 1, theta0=0.4)
        a = by_id(inv.audit_hs_conditions(cf_traj(cfg)))[inv.HS_TRACELESS]
        assert a.holds and abs(a.witness["max_excess"]) <= a.witness["tolerance"]

    def test_stationary_undefined(self):
        cfg = Rank2Config(2, 1, 1)
        with pytest.raises(inv.AuditUndefined):
            inv.audit_hs_conditions(cf_traj(cfg))

    def test_needs_past(self):
        cfg = Rank2Config(2, 1, 1, theta0=0.4)
        with pytest.raises(ValidationError):
            inv.audit_hs_conditions(cf_traj(cfg, -0.1))

    def test_needs_spherical(self):
        cfg = Rank2Config(2, 1, 1, theta0=0.4)
        e = closed_form_trajectory(cfg, np.linspace(-2, 0, 20), kind="euclidean")
        with pytest.raises(ValidationError):
            inv.audit_hs_conditions(e)

    def test_witness_is_json(self):
        cfg = Rank2Config(3, 1, 1, theta0=0.3)
        for a in inv.audit_hs_conditions(cf_traj(cfg)):
            json.dumps(a.to_dict())
            assert a.witness


class TestEnvelope:
    def test_g2_tail_limit(self):
        cfg = Rank2Config(2, 1, 1, theta0=math.pi / 6)
        a = inv.ratio_envelope(cf_traj(cfg, -10.0))
        w = a.witness
        assert a.holds and w["tail_limit_theory"] == pytest.approx(2.0)
        assert w["c2"] <= 2.0 * (1 + 1e-9) and w["c1"] >= 2.0 * (1 - 1e-9)
        assert w["c1"] == pytest.approx(2.0, rel=1e-6)

    def test_g1_branch(self):
        a = inv.ratio_envelope(cf_traj(Rank2Config(1, 3, 3, theta0=1.0)))
        assert a.holds and a.witness["branch"] == "g=1" and a.witness["expected"] == pytest.approx(1 / 3)

    def test_g3_theory_inside_fit(self):
        cfg = Rank2Config(3, 1, 1, theta0=math.pi / 12)
        a = inv.ratio_envelope(cf_traj(cfg))
        w = a.witness
        theory = 6 / limit_constants(cfg).c0
        assert w["tail_limit_theory"] == pytest.approx(theory)
        assert w["c2"] <= theory * (1 + 1e-9) <= w["c1"] * (1 + 2e-9)

    @pytest.mark.parametrize("entry", SUITE[1:], ids=SUITE_IDS[1:])
    def test_ode_matches_closed(self, entry):
        cfg = entry.config.with_theta0(entry.config.theta_min / 2)
        t0 = -6.0 / (cfg.g * cfg.n)
        y = ode_traj(cfg, t0)
        a = inv.ratio_envelope(y)
        b = inv.ratio_envelope(closed_form_trajectory(cfg, y.times))
        assert a.holds and b.holds
        assert a.witness["c1"] == pytest.approx(b.witness["c1"], rel=1e-5)


@pytest.mark.parametrize("entry", SUITE, ids=SUITE_IDS)
def test_ratio_chain_strict(entry):
    base = entry.config
    for th0 in (base.theta_min / 2, (base.theta_min + math.pi / base.g) / 2):
        cfg = base.with_theta0(th0)
        T = collapse_times(cfg).time
        a = inv.ratio_chain_audit(cfg, np.linspace(-20 / (cfg.g * cfg.n), 0.99 * T, 500))
        assert a.holds and a.witness["min_margin"] > 0


def test_ratio_chain_stationary():
    with pytest.raises(inv.AuditUndefined):
        inv.ratio_chain_audit(Rank2Config(2, 1, 1), [-1.0, 0.0])


@pytest.mark.parametrize("entry", SUITE, ids=SUITE_IDS)
def test_ancient_limits(entry):
    base = entry.config
    for th0 in (base.theta_min / 2, (base.theta_min + math.pi / base.g) / 2, base.theta_min):
        a = inv.ancient_limits_audit(base.with_theta0(th0))
        assert a.holds
        if th0 == base.theta_min:
            assert a.witness["degenerate"]


class TestPhiBand:
    def test_eps_guard(self):
        with pytest.raises(ValidationError):
            inv.phi_band(Rank2Config(2, 1, 1), 1.0)

    def test_clifford_lower_bound_global(self):
        cfg = Rank2Config(2, 1, 1)
        th = np.linspace(0.01, math.pi / 2 - 0.01, 500)
        assert np.all([phi_closed(cfg, t) >= 2 - 1e-12 for t in th])
        c0, a = inv.phi_band(cfg, 0.5)
        # 2 csc^2(2 theta) <= 3  <=>  |theta - pi/4| <= (pi/2 - arcsin sqrt(2/3))/2
        assert c0 == pytest.approx((math.pi / 2 - math.asin(math.sqrt(2 / 3))) / 2, abs=1e-12)
        assert a.holds

    def test_g4_one_sided(self):
        cfg = Rank2Config(4, 1, 3)
        c0, a = inv.phi_band(cfg, 0.2)
        assert a.holds and c0 > 0
        below = a.witness["sides"]["below"]
        assert below["band"] == [pytest.approx(2.8 * cfg.n), pytest.approx(3 * cfg.n)]
        th = cfg.theta_min - 0.5 * below["c0"]
        assert phi_closed(cfg, th) <= 3 * cfg.n

    def test_g1(self):
        c0, a = inv.phi_band(Rank2Config(1, 2, 2), 0.3)
        assert a.holds and a.witness["branch"] == "g=1"

    @settings(max_examples=20)
    @given(st.sampled_from([(2, 1, 1), (2, 1, 3), (3, 1, 1), (4, 1, 1), (4, 1, 3), (6, 2, 2)]),
           st.floats(0.05, 0.9), st.floats(-0.999, 0.999))
    def test_window_is_admissible(self, triple, eps, pos):
        cfg = Rank2Config(*triple)
        c0, a = inv.phi_band(cfg, eps)
        th = cfg.theta_min + pos * c0
        side = -1 if pos < 0 else 1
        lo, hi = a.witness["sides"]["below" if side < 0 else "above"]["band"]
        # phi is monotone in theta on each side, so the value between theta and theta_min is bracketed
        for t in np.linspace(min(th, cfg.theta_min), max(th, cfg.theta_min), 20):
            ph = phi_closed(cfg, t)
            assert lo - 1e-9 * hi <= ph <= hi + 1e-9 * hi


class TestSharpness:
    def test_g2_n3(self):
        th0, a = inv.sharpness_witness(2, 3, 1, 2)
        d = 1 / 3
        assert 2 * (1 + d) / (3 * (math.cos(2 * th0) + d) ** 2) < 1
        assert a.holds and a.witness["min_margin"] > 0 and a.witness["exponent"] == 12

    def test_guard(self):
        with pytest.raises(ValidationError):
            inv.sharpness_witness(2, 2, 1, 1)
        with pytest.raises(ValidationError):
            inv.sharpness_witness(4, 8, 1, 1)

    @pytest.mark.parametrize("m", [(2, 2), (1, 3)])
    def test_g4_n8(self, m):
        th0, a = inv.sharpness_witness(4, 8, *m)
        assert a.holds and 0 < th0 < Rank2Config(4, *m).theta_min

    def test_bisection_is_tight(self):
        th0, a = inv.sharpness_witness(2, 4, 1, 3)
        d = 0.5
        coeff = lambda t: 2 * (1 + d) / (4 * (math.cos(2 * t) + d) ** 2)
        assert coeff(th0) < 1 <= coeff(th0 + 1e-12)
